//! Fewest questions from a fixed pool that single out one item.
//!
//! For a fixed secret item every answer is known in advance, so the adaptive and non-adaptive
//! problems coincide: pick the smallest sub-pool whose answer-consistent sides intersect in
//! exactly the secret item.

use crate::domain::{ItemSet, Question};
use crate::error::{Error, Result};

/// Largest pool the iterative-deepening search accepts.
pub const MAX_ISOLATE_POOL: usize = 24;

/// The side of `q` containing `s_star`, restricted to `universe`.
fn side(universe: &ItemSet, q: &Question, s_star: usize) -> ItemSet {
    if q.yes_set.contains(s_star) {
        universe.intersection(&q.yes_set)
    } else {
        universe.difference(&q.yes_set)
    }
}

fn check(universe: &ItemSet, s_star: usize, pool: &[Question]) -> Result<()> {
    if !universe.contains(s_star) {
        return Err(Error::ItemOutOfDomain {
            index: s_star,
            size: universe.width(),
        });
    }
    if pool.len() > MAX_ISOLATE_POOL {
        return Err(Error::EnumerationBudget(MAX_ISOLATE_POOL));
    }
    Ok(())
}

/// Iterative deepening over subset size `k`; returns the first `k` that isolates `s_star`.
pub fn min_questions_isolate(universe: &ItemSet, s_star: usize, pool: &[Question]) -> Result<usize> {
    check(universe, s_star, pool)?;
    let target = ItemSet::singleton(universe.width(), s_star);
    if *universe == target {
        return Ok(0);
    }
    let sides: Vec<ItemSet> = pool.iter().map(|q| side(universe, q, s_star)).collect();

    fn search(sides: &[ItemSet], start: usize, left: usize, current: &ItemSet, target: &ItemSet) -> bool {
        if left == 0 {
            return current == target;
        }
        (start..sides.len()).any(|i| {
            let next = current.intersection(&sides[i]);
            // A question that removes nothing cannot be part of a minimum selection.
            next != *current && search(sides, i + 1, left - 1, &next, target)
        })
    }

    for k in 1..=sides.len() {
        if search(&sides, 0, k, universe, &target) {
            return Ok(k);
        }
    }
    Err(Error::NotIsolable)
}

/// Largest pool [`set_cover_isolate`] accepts.
pub const MAX_COVER_POOL: usize = 20;

/// Independent check by covering: every other item must be eliminated by some chosen question.
/// Enumerates all sub-pools as bitmasks; domains are limited to 64 items.
pub fn set_cover_isolate(universe: &ItemSet, s_star: usize, pool: &[Question]) -> Result<usize> {
    check(universe, s_star, pool)?;
    if pool.len() > MAX_COVER_POOL {
        return Err(Error::EnumerationBudget(MAX_COVER_POOL));
    }
    if universe.width() > 64 {
        return Err(Error::InvalidConfig("cover check supports at most 64 items".into()));
    }
    let bits = |set: &ItemSet| set.iter().fold(0u64, |acc, i| acc | 1 << i);
    let others = bits(universe) & !(1u64 << s_star);
    let eliminates: Vec<u64> = pool
        .iter()
        .map(|q| bits(&universe.difference(&side(universe, q, s_star))))
        .collect();
    let mut covered = vec![0u64; 1 << pool.len()];
    let mut best: Option<u32> = None;
    for mask in 0usize..covered.len() {
        if mask != 0 {
            let low = mask.trailing_zeros() as usize;
            covered[mask] = covered[mask & (mask - 1)] | eliminates[low];
        }
        let size = mask.count_ones();
        if others & !covered[mask] == 0 && best.is_none_or(|b| size < b) {
            best = Some(size);
        }
    }
    best.map(|b| b as usize).ok_or(Error::NotIsolable)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::domain::QuestionId;
    use crate::fixtures;

    #[test]
    fn circular_examples() {
        let fx = fixtures::example1();
        let all = fx.domain.full_set();
        assert_eq!(min_questions_isolate(&all, 1, &fx.questions).unwrap(), 1);
        assert_eq!(min_questions_isolate(&all, 2, &fx.questions[..2]).unwrap(), 2);
        assert_eq!(min_questions_isolate(&ItemSet::singleton(3, 0), 0, &[]).unwrap(), 0);
        assert!(matches!(
            min_questions_isolate(&all, 0, &[]),
            Err(Error::NotIsolable)
        ));
    }

    #[test]
    fn both_searches_agree_on_random_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.random_range(2..=8);
            let p = rng.random_range(1..=8);
            let pool: Vec<Question> = (0..p)
                .map(|i| {
                    let yes = ItemSet::from_indices(n, (0..n).filter(|_| rng.random_bool(0.5)));
                    Question::new(QuestionId(i), yes)
                })
                .collect();
            let s = rng.random_range(0..n);
            let all = ItemSet::full(n);
            let a = min_questions_isolate(&all, s, &pool).ok();
            let b = set_cover_isolate(&all, s, &pool).ok();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn oversized_pool_is_rejected() {
        let pool: Vec<Question> = (0..25)
            .map(|i| Question::new(QuestionId(i), ItemSet::empty(4)))
            .collect();
        assert!(matches!(
            min_questions_isolate(&ItemSet::full(4), 0, &pool),
            Err(Error::EnumerationBudget(_))
        ));
    }
}
