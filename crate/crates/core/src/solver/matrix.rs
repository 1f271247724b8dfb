//! Normal-form oracle: enumerate the Questioner's reduced pure policies against every item and
//! solve the resulting matrix game by regret matching+ with an explicit duality gap.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::efg::{Efg, NodeKind, Player};
use crate::error::{Error, Result};

/// Payoff matrix with one row per reduced pure Questioner policy and one column per root item.
#[derive(Debug, Clone)]
pub struct NormalForm {
    /// `policies[r]` lists `(infoset, action)` choices made by row `r`.
    pub policies: Vec<Vec<(usize, usize)>>,
    pub items: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

/// Questioner infosets met first below `node`, without passing another Questioner decision.
fn frontier(efg: &Efg, node: usize, out: &mut BTreeSet<usize>) {
    match efg.nodes[node].kind {
        NodeKind::Leaf { .. } => {}
        NodeKind::Decision { infoset } if efg.infosets[infoset].player == Player::Questioner => {
            out.insert(infoset);
        }
        _ => {
            for &c in &efg.nodes[node].children {
                frontier(efg, c, out);
            }
        }
    }
}

fn policies_of(
    efg: &Efg,
    infosets: &BTreeSet<usize>,
    budget: usize,
) -> Result<Vec<Vec<(usize, usize)>>> {
    let mut acc: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for &info in infosets {
        let mut options = Vec::new();
        for a in 0..efg.infosets[info].actions.len() {
            let mut next = BTreeSet::new();
            for &m in &efg.infosets[info].members {
                frontier(efg, efg.nodes[m].children[a], &mut next);
            }
            for mut sub in policies_of(efg, &next, budget)? {
                sub.insert(0, (info, a));
                options.push(sub);
                if options.len() > budget {
                    return Err(Error::EnumerationBudget(budget));
                }
            }
        }
        let mut combined = Vec::with_capacity(acc.len() * options.len());
        for left in &acc {
            for right in &options {
                let mut p = left.clone();
                p.extend(right);
                combined.push(p);
            }
        }
        if combined.len() > budget {
            return Err(Error::EnumerationBudget(budget));
        }
        acc = combined;
    }
    Ok(acc)
}

/// Builds the reduced normal form of `efg`, failing when more than `budget` rows would be needed.
pub fn normal_form(efg: &Efg, budget: usize) -> Result<NormalForm> {
    let mut first = BTreeSet::new();
    frontier(efg, efg.root, &mut first);
    let policies = policies_of(efg, &first, budget)?;
    let items = efg.chooser_items();
    let root_children = &efg.nodes[efg.root].children;
    let mut choice = vec![usize::MAX; efg.infosets.len()];
    let matrix = policies
        .iter()
        .map(|policy| {
            for &(i, a) in policy {
                choice[i] = a;
            }
            let row = root_children
                .iter()
                .map(|&start| {
                    let mut node = start;
                    loop {
                        match efg.nodes[node].kind {
                            NodeKind::Leaf { payoff } => break payoff,
                            NodeKind::Chooser { infoset } | NodeKind::Decision { infoset } => {
                                node = efg.nodes[node].children[choice[infoset]];
                            }
                        }
                    }
                })
                .collect();
            for &(i, _) in policy {
                choice[i] = usize::MAX;
            }
            row
        })
        .collect();
    Ok(NormalForm {
        policies,
        items,
        matrix,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixSolution {
    /// Mix over rows (the minimizing Questioner).
    pub row_mix: Vec<f64>,
    /// Mix over columns (the maximizing Item Chooser).
    pub col_mix: Vec<f64>,
    pub value: f64,
    /// `max_j (x'A)_j - min_i (Ay)_i`, an upper bound on the distance of `value` from the game
    /// value.
    pub duality_gap: f64,
    pub iterations: usize,
}

fn regret_matching(regret: &[f64], out: &mut [f64]) {
    let total: f64 = regret.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        for (o, r) in out.iter_mut().zip(regret) {
            *o = r.max(0.0) / total;
        }
    } else {
        out.fill(1.0 / out.len() as f64);
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        vec![1.0 / v.len() as f64; v.len()]
    }
}

/// Solves `min_x max_y x'Ay` for a matrix with rows minimizing, running alternating regret
/// matching+ with linear averaging until the duality gap falls below `tolerance` or
/// `max_iterations` is reached. A stalled run on a small matrix is finished by an exact linear
/// program.
pub fn solve_matrix_game(matrix: &[Vec<f64>], tolerance: f64, max_iterations: usize) -> MatrixSolution {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    assert!(rows > 0 && cols > 0, "matrix must be non-empty");
    let mut rx = vec![0.0; rows];
    let mut ry = vec![0.0; cols];
    let mut x = vec![1.0 / rows as f64; rows];
    let mut y = vec![1.0 / cols as f64; cols];
    let mut sx = vec![0.0; rows];
    let mut sy = vec![0.0; cols];
    let mut best: Option<MatrixSolution> = None;

    let evaluate = |sx: &[f64], sy: &[f64], iterations: usize| {
        let xb = normalized(sx);
        let yb = normalized(sy);
        let col_values: Vec<f64> = (0..cols)
            .map(|j| (0..rows).map(|i| xb[i] * matrix[i][j]).sum())
            .collect();
        let row_values: Vec<f64> = (0..rows)
            .map(|i| (0..cols).map(|j| matrix[i][j] * yb[j]).sum())
            .collect();
        let upper = col_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lower = row_values.iter().copied().fold(f64::INFINITY, f64::min);
        let value = (0..rows).map(|i| xb[i] * row_values[i]).sum();
        MatrixSolution {
            row_mix: xb,
            col_mix: yb,
            value,
            duality_gap: (upper - lower).max(0.0),
            iterations,
        }
    };

    for t in 1..=max_iterations.max(1) {
        // Row player (minimizer) updates against the current column mix.
        let row_values: Vec<f64> = (0..rows)
            .map(|i| (0..cols).map(|j| matrix[i][j] * y[j]).sum())
            .collect();
        let vx: f64 = (0..rows).map(|i| x[i] * row_values[i]).sum();
        for i in 0..rows {
            rx[i] = (rx[i] + vx - row_values[i]).max(0.0);
        }
        regret_matching(&rx, &mut x);
        // Column player (maximizer) responds to the updated row mix.
        let col_values: Vec<f64> = (0..cols)
            .map(|j| (0..rows).map(|i| x[i] * matrix[i][j]).sum())
            .collect();
        let vy: f64 = (0..cols).map(|j| y[j] * col_values[j]).sum();
        for j in 0..cols {
            ry[j] = (ry[j] + col_values[j] - vy).max(0.0);
        }
        regret_matching(&ry, &mut y);
        let w = t as f64;
        for i in 0..rows {
            sx[i] += w * x[i];
        }
        for j in 0..cols {
            sy[j] += w * y[j];
        }
        if t % 64 == 0 || t == max_iterations {
            let sol = evaluate(&sx, &sy, t);
            let done = sol.duality_gap <= tolerance;
            if best.as_ref().is_none_or(|b| sol.duality_gap < b.duality_gap) {
                best = Some(sol);
            }
            if done {
                break;
            }
        }
    }
    let approx = best.unwrap_or_else(|| evaluate(&sx, &sy, max_iterations));
    if approx.duality_gap <= tolerance || rows.saturating_mul(cols) > MAX_LP_ENTRIES {
        return approx;
    }
    match simplex_solve(matrix) {
        Some((x, y)) => {
            let exact = evaluate(&x, &y, approx.iterations);
            if exact.duality_gap < approx.duality_gap {
                exact
            } else {
                approx
            }
        }
        None => approx,
    }
}

/// Matrices up to this many entries are polished with an exact linear program when regret
/// matching stalls short of the tolerance.
pub const MAX_LP_ENTRIES: usize = 250_000;

/// Exact minimax mixes by the simplex method with Bland's rule.
///
/// After shifting the matrix to be positive, the row player's problem becomes
/// `max 1'u  s.t.  A'u <= 1, u >= 0` with value `1 / sum(u)`; the column mix comes from the
/// duals of the same tableau.
fn simplex_solve(matrix: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<f64>)> {
    let rows = matrix.len();
    let cols = matrix[0].len();
    let lo = matrix.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - lo;
    let width = rows + cols + 1;
    // One constraint per column of the game, one variable per row.
    let mut tab = vec![vec![0.0; width]; cols + 1];
    for (j, line) in tab.iter_mut().take(cols).enumerate() {
        for i in 0..rows {
            line[i] = matrix[i][j] + shift;
        }
        line[rows + j] = 1.0;
        line[width - 1] = 1.0;
    }
    for v in tab[cols].iter_mut().take(rows) {
        *v = -1.0;
    }
    let mut basis: Vec<usize> = (rows..rows + cols).collect();
    let eps = 1e-12;
    for _ in 0..100_000 {
        let Some(enter) = (0..width - 1).find(|&c| tab[cols][c] < -eps) else {
            let total = tab[cols][width - 1];
            if total.is_nan() || total <= 0.0 {
                return None;
            }
            let mut u = vec![0.0; rows];
            for (r, &b) in basis.iter().enumerate() {
                if b < rows {
                    u[b] = tab[r][width - 1];
                }
            }
            let z: Vec<f64> = (0..cols).map(|j| tab[cols][rows + j].max(0.0)).collect();
            return Some((u, z));
        };
        let mut leave: Option<usize> = None;
        for r in 0..cols {
            if tab[r][enter] > eps {
                let ratio = tab[r][width - 1] / tab[r][enter];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let best = tab[l][width - 1] / tab[l][enter];
                        ratio < best - eps || (ratio <= best + eps && basis[r] < basis[l])
                    }
                };
                if better {
                    leave = Some(r);
                }
            }
        }
        let l = leave?;
        let pivot = tab[l][enter];
        for v in tab[l].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = tab[l].clone();
        for (r, line) in tab.iter_mut().enumerate() {
            if r != l {
                let f = line[enter];
                if f != 0.0 {
                    for (v, p) in line.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        basis[l] = enter;
    }
    None
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::efg::{build_full_game, DEFAULT_NODE_BUDGET};
    use crate::fixtures;

    #[test]
    fn one_by_one() {
        let s = solve_matrix_game(&[vec![4.5]], 1e-12, 10);
        assert_eq!(s.value, 4.5);
        assert_eq!(s.duality_gap, 0.0);
    }

    #[test]
    fn matching_pennies() {
        let s = solve_matrix_game(&[vec![1.0, -1.0], vec![-1.0, 1.0]], 1e-8, 1_000_000);
        assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-6);
        assert!(s.duality_gap < 1e-6);
    }

    #[test]
    fn simplex_certifies_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let r = rng.random_range(1..=7);
            let c = rng.random_range(1..=7);
            let m: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect();
            let s = solve_matrix_game(&m, 1e-10, 64);
            assert!(s.duality_gap < 1e-9, "gap {}", s.duality_gap);
            assert_abs_diff_eq!(s.row_mix.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(s.col_mix.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn example1_normal_form() {
        let fx = fixtures::example1();
        let efg = build_full_game(&fx.oracle(), &fx.variant, DEFAULT_NODE_BUDGET).unwrap();
        let nf = normal_form(&efg, 1000).unwrap();
        // Three first questions, each followed by one of two questions at the pair.
        assert_eq!(nf.matrix.len(), 6);
        assert_eq!(nf.items, [0, 1, 2]);
        let s = solve_matrix_game(&nf.matrix, 1e-9, 1_000_000);
        assert_abs_diff_eq!(s.value, 5.0 / 3.0, epsilon = 1e-6);
        assert!(s.duality_gap < 1e-6);
        assert!(matches!(normal_form(&efg, 3), Err(Error::EnumerationBudget(3))));
    }

    #[test]
    fn minimax_equality_within_gap() {
        let fx = fixtures::example3();
        let efg = build_full_game(&fx.oracle(), &fx.variant, DEFAULT_NODE_BUDGET).unwrap();
        let nf = normal_form(&efg, 1000).unwrap();
        let s = solve_matrix_game(&nf.matrix, 1e-9, 1_000_000);
        assert_abs_diff_eq!(s.value, 3.75, epsilon = 1e-6);
        let upper = (0..nf.items.len())
            .map(|j| (0..nf.matrix.len()).map(|i| s.row_mix[i] * nf.matrix[i][j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let lower = (0..nf.matrix.len())
            .map(|i| (0..nf.items.len()).map(|j| nf.matrix[i][j] * s.col_mix[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!(upper - lower <= s.duality_gap + 1e-12);
        assert!(lower <= 3.75 + 1e-9 && 3.75 <= upper + 1e-9);
    }
}
