//! Evaluation metrics and report emission.
//!
//! Every play draws from its own generator derived from `(seed, item, repeat)`, so a report
//! depends only on the configuration and seed, never on evaluation order.

mod game;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::baselines::Prior;
use crate::domain::{ItemDomain, VariantConfig};
use crate::error::{Error, Result};
use crate::oracles::Oracle;
use crate::search::{play_game, Policy, TranscriptStep};

pub use game::{Game, GameSpec};

/// Version tag written into every report.
pub const REPORT_SCHEMA: &str = "sls-eval/1";

/// Default number of Dirichlet priors drawn from data counts.
pub const DEFAULT_DIRICHLET_SAMPLES: usize = 50;
/// Default number of priors drawn per adversarial family.
pub const DEFAULT_ADVERSARIAL_SAMPLES: usize = 100;

/// Generator for one play.
pub fn play_rng(seed: u64, item: usize, repeat: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((item as u64) << 32) | repeat as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemStat {
    pub item: usize,
    pub name: String,
    pub weight: f64,
    pub plays: usize,
    pub mean_length: f64,
    /// `weight · mean_length`.
    pub weighted_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageCase {
    pub label: String,
    pub sample: usize,
    pub kl_from_uniform: f64,
    pub l_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema: &'static str,
    pub policy: String,
    pub seed: u64,
    pub repeats: usize,
    pub config: VariantConfig,
    pub per_item: Vec<ItemStat>,
    pub l_worst: f64,
    pub weighted_worst: f64,
    pub average_cases: Vec<AverageCase>,
    /// Entropy of every recorded non-shortcut decision, in play order.
    pub entropies: Vec<f64>,
}

impl EvalReport {
    pub fn means(&self) -> Vec<f64> {
        self.per_item.iter().map(|s| s.mean_length).collect()
    }

    /// Records `L_avg` for each prior.
    pub fn add_average_cases(&mut self, label: &str, priors: &[Prior]) -> Result<()> {
        let means = self.means();
        for (sample, prior) in priors.iter().enumerate() {
            self.average_cases.push(AverageCase {
                label: label.to_string(),
                sample,
                kl_from_uniform: kl_from_uniform(prior),
                l_avg: eval_average_case(prior, &means)?,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-item table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,name,weight,plays,mean_length,weighted_length\n");
        for s in &self.per_item {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.item,
                csv_field(&s.name),
                s.weight,
                s.plays,
                s.mean_length,
                s.weighted_length
            );
        }
        out
    }

    /// Average-case table, one row per prior.
    pub fn average_cases_csv(&self) -> String {
        let mut out = String::from("label,sample,kl_from_uniform,l_avg\n");
        for a in &self.average_cases {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_field(&a.label),
                a.sample,
                a.kl_from_uniform,
                a.l_avg
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Plays every item `repeats` times and reports per-item mean lengths.
pub fn eval_worst_case(
    policy: &dyn Policy,
    oracle: &Oracle,
    variant: &VariantConfig,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let domain = oracle.domain();
    let mut per_item = Vec::with_capacity(domain.len());
    let mut entropies = Vec::new();
    for item in 0..domain.len() {
        let mut total = 0usize;
        for repeat in 0..repeats {
            let mut rng = play_rng(seed, item, repeat);
            let t = play_game(item, policy, oracle, variant, &mut rng)?;
            total += t.questions;
            entropies.extend(strategy_entropy(&t.steps));
        }
        let mean = total as f64 / repeats as f64;
        per_item.push(ItemStat {
            item,
            name: domain.name(item).to_string(),
            weight: domain.weight(item),
            plays: repeats,
            mean_length: mean,
            weighted_length: domain.weight(item) * mean,
        });
    }
    let means: Vec<f64> = per_item.iter().map(|s| s.mean_length).collect();
    Ok(EvalReport {
        schema: REPORT_SCHEMA,
        policy: policy.name().to_string(),
        seed,
        repeats,
        config: variant.clone(),
        l_worst: worst_of(&means),
        weighted_worst: weighted_worst(domain, &means)?,
        per_item,
        average_cases: Vec::new(),
        entropies,
    })
}

/// `max_s w(s) · mean length of s`.
pub fn eval_weighted_worst(
    policy: &dyn Policy,
    oracle: &Oracle,
    variant: &VariantConfig,
    repeats: usize,
    seed: u64,
) -> Result<f64> {
    Ok(eval_worst_case(policy, oracle, variant, repeats, seed)?.weighted_worst)
}

pub fn worst_of(means: &[f64]) -> f64 {
    means.iter().copied().fold(0.0, f64::max)
}

pub fn weighted_worst(domain: &ItemDomain, means: &[f64]) -> Result<f64> {
    if means.len() != domain.len() {
        return Err(Error::InvalidConfig(format!(
            "{} means for {} items",
            means.len(),
            domain.len()
        )));
    }
    Ok(means
        .iter()
        .enumerate()
        .map(|(i, m)| domain.weight(i) * m)
        .fold(0.0, f64::max))
}

/// Prior-weighted mean of per-item lengths.
pub fn eval_average_case(prior: &Prior, means: &[f64]) -> Result<f64> {
    if prior.len() != means.len() {
        return Err(Error::InvalidPrior(format!(
            "prior over {} items, {} means",
            prior.len(),
            means.len()
        )));
    }
    Ok(prior.probs().iter().zip(means).map(|(p, m)| p * m).sum())
}

/// One draw from `Dir(k · counts)` via normalized Gamma variates.
pub fn sample_dirichlet_prior<R: rand::Rng + ?Sized>(counts: &[f64], k: f64, rng: &mut R) -> Result<Prior> {
    if counts.is_empty() || k.is_nan() || k <= 0.0 || counts.iter().any(|c| c.is_nan() || *c <= 0.0 || !c.is_finite()) {
        return Err(Error::InvalidPrior(
            "Dirichlet needs positive counts and k > 0".into(),
        ));
    }
    let mut draws = Vec::with_capacity(counts.len());
    for &c in counts {
        let gamma = Gamma::new(k * c, 1.0).map_err(|e| Error::InvalidPrior(e.to_string()))?;
        draws.push(gamma.sample(rng));
    }
    let total: f64 = draws.iter().sum();
    if total.is_nan() || total <= 0.0 {
        // Every variate underflowed; fall back to the largest concentration.
        let top = counts
            .iter()
            .enumerate()
            .fold(0, |best, (i, c)| if *c > counts[best] { i } else { best });
        return Ok(Prior::point_mass(counts.len(), top));
    }
    Prior::new(draws.into_iter().map(|d| d / total).collect())
}

/// Concentration vector of the adversarial family: `alpha0` on item 0 and 1 elsewhere.
pub fn adversarial_counts(n: usize, alpha0: f64) -> Vec<f64> {
    let mut counts = vec![1.0; n];
    if let Some(first) = counts.first_mut() {
        *first = alpha0;
    }
    counts
}

/// Shannon entropy in bits.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy of each recorded decision, skipping steps taken with two items left.
pub fn strategy_entropy(steps: &[TranscriptStep]) -> Vec<f64> {
    steps
        .iter()
        .filter(|s| !s.is_two_item_step())
        .map(|s| entropy_bits(&s.strategy))
        .collect()
}

/// `sum_i p_i log2(p_i n)`.
pub fn kl_from_uniform(prior: &Prior) -> f64 {
    let n = prior.len() as f64;
    prior
        .probs()
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * (p * n).log2())
        .sum::<f64>()
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::baselines::{backward_induction_br, EvenSplitPolicy};
    use crate::fixtures;
    use crate::oracles::PoolGenerator;
    use crate::search::GotPolicy;

    #[test]
    fn worst_and_weighted_worst_arithmetic() {
        assert_eq!(worst_of(&[1.0, 2.0, 2.0]), 2.0);
        let fx = fixtures::example3();
        assert_eq!(weighted_worst(&fx.domain, &[1.0, 2.0, 2.0]).unwrap(), 4.0);
        assert!(weighted_worst(&fx.domain, &[1.0]).is_err());
    }

    #[test]
    fn average_case_arithmetic() {
        let means = [1.0, 2.0, 2.0];
        assert_abs_diff_eq!(
            eval_average_case(&Prior::uniform(3), &means).unwrap(),
            5.0 / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(eval_average_case(&Prior::point_mass(3, 1), &means).unwrap(), 2.0);
        assert!(eval_average_case(&Prior::uniform(2), &means).is_err());
    }

    #[test]
    fn br_policy_average_case_on_fixture() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let prior = Prior::new(vec![0.8, 0.1, 0.1]).unwrap();
        let (policy, _) = backward_induction_br(&oracle, prior.clone(), false).unwrap();
        let report = eval_worst_case(&policy, &oracle, &fx.variant, 1, 0).unwrap();
        assert_abs_diff_eq!(
            eval_average_case(&prior, &report.means()).unwrap(),
            1.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn even_split_on_eight_items() {
        let domain = std::sync::Arc::new(ItemDomain::numbered(8).unwrap());
        let oracle = Oracle::new(domain, std::sync::Arc::new(PoolGenerator::new(Vec::new())));
        let report =
            eval_worst_case(&EvenSplitPolicy, &oracle, &VariantConfig::default(), 1, 0).unwrap();
        assert_eq!(report.l_worst, 3.0);
        assert!(report.per_item.iter().all(|s| s.mean_length == 3.0));
    }

    #[test]
    fn unit_weights_match_unweighted_worst() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let policy = GotPolicy::new(fx.variant.clone());
        let report = eval_worst_case(&policy, &oracle, &fx.variant, 5, 3).unwrap();
        assert_eq!(report.weighted_worst, report.l_worst);
        assert_eq!(report.schema, REPORT_SCHEMA);
        assert!(report.to_csv().lines().count() == 4);
    }

    #[test]
    fn reports_are_reproducible() {
        let run = || {
            let fx = fixtures::example1();
            let oracle = fx.oracle();
            let policy = GotPolicy::new(fx.variant.clone());
            let mut r = eval_worst_case(&policy, &oracle, &fx.variant, 4, 11).unwrap();
            r.add_average_cases("uniform", &[Prior::uniform(3)]).unwrap();
            r.to_json().unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn dirichlet_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = [5.0, 3.0, 2.0];
        let mut previous = f64::INFINITY;
        for k in [1.0, 10.0, 100.0] {
            let mut spread = 0.0;
            for _ in 0..400 {
                let p = sample_dirichlet_prior(&counts, k, &mut rng).unwrap();
                assert_abs_diff_eq!(p.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-9);
                spread += (p.probs()[0] - 0.5).powi(2);
            }
            assert!(spread < previous);
            previous = spread;
        }
        let p = sample_dirichlet_prior(&adversarial_counts(10, 200.0), 1.0, &mut rng).unwrap();
        assert!(p.probs()[0] > 0.8);
        assert!(sample_dirichlet_prior(&[1.0, 0.0], 1.0, &mut rng).is_err());
        assert!(sample_dirichlet_prior(&[1.0], -1.0, &mut rng).is_err());
    }

    #[test]
    fn entropy_and_kl() {
        assert_abs_diff_eq!(entropy_bits(&[1.0 / 3.0; 3]), 3f64.log2(), epsilon = 1e-12);
        assert_eq!(entropy_bits(&[0.0, 1.0]), 0.0);
        assert_eq!(kl_from_uniform(&Prior::uniform(5)), 0.0);
        assert_abs_diff_eq!(kl_from_uniform(&Prior::point_mass(4, 2)), 2.0, epsilon = 1e-12);
        let p = Prior::new(vec![0.7, 0.2, 0.1]).unwrap();
        assert!(kl_from_uniform(&p) > 0.0);
    }

    #[test]
    fn play_streams_differ() {
        use rand::Rng;
        let a: u64 = play_rng(1, 0, 0).random();
        let b: u64 = play_rng(1, 0, 1).random();
        let c: u64 = play_rng(1, 1, 0).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, play_rng(1, 0, 0).random::<u64>());
    }
}
