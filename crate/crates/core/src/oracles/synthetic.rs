//! Question generators that need no language model.
//!
//! Synthetic generators derive their random stream from `(seed, live set, attempt)`, so the whole
//! game is a fixed function of the seed no matter in which order histories are explored.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{OracleCache, QuestionGenerator};
use crate::domain::{CandidateSource, ItemSet, Question};
use crate::error::{Error, Result};

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for one `(seed, live, attempt)` triple.
pub(crate) fn node_rng(seed: u64, live: &ItemSet, attempt: u32) -> ChaCha8Rng {
    let mut h = splitmix(seed ^ 0x5157_4c53);
    for &w in live.words() {
        h = splitmix(h ^ w);
    }
    h = splitmix(h ^ u64::from(attempt));
    ChaCha8Rng::seed_from_u64(h)
}

/// `round(r·size)` with halves rounded up, clamped to `[1, size-1]`.
pub fn split_size(r: f64, size: usize) -> usize {
    let raw = (r * size as f64 + 0.5).floor() as usize;
    raw.clamp(1, size.saturating_sub(1).max(1))
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("split ratio {r} outside (0, 1)")))
    }
}

/// Each candidate's yes-set is a uniform random subset of the live set of size `round(r·|S|)`.
#[derive(Debug, Clone)]
pub struct RandomSplit {
    r: f64,
    m: usize,
    seed: u64,
}

impl RandomSplit {
    pub fn new(r: f64, m: usize, seed: u64) -> Result<Self> {
        check_ratio(r)?;
        if m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        Ok(RandomSplit { r, m, seed })
    }
}

/// Draws `m` random-split candidates at `live`.
pub fn random_split_g<R: Rng + ?Sized>(
    live: &ItemSet,
    r: f64,
    m: usize,
    rng: &mut R,
    cache: &OracleCache,
) -> Vec<Question> {
    let members = live.to_indices();
    let k = split_size(r, members.len());
    (0..m)
        .map(|_| {
            let chosen = index::sample(rng, members.len(), k);
            let yes = ItemSet::from_indices(live.width(), chosen.iter().map(|i| members[i]));
            Question::new(cache.allocate_id(), yes)
        })
        .collect()
}

impl QuestionGenerator for RandomSplit {
    fn source(&self) -> CandidateSource {
        CandidateSource::Synthetic
    }

    fn propose(&self, live: &ItemSet, attempt: u32, cache: &OracleCache) -> Result<Vec<Question>> {
        let mut rng = node_rng(self.seed, live, attempt);
        Ok(random_split_g(live, self.r, self.m, &mut rng, cache))
    }
}

/// `k` features in `[0, 1)` for every item, fixed once per game.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    features: Vec<Vec<f64>>,
    k: usize,
}

impl FeatureTable {
    pub fn generate(items: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("at least one feature required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = (0..items)
            .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
            .collect();
        Ok(FeatureTable { features, k })
    }

    pub fn from_rows(features: Vec<Vec<f64>>) -> Result<Self> {
        let k = features.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::InvalidConfig("at least one feature required".into()));
        }
        for row in &features {
            if row.len() != k || row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig(
                    "feature rows must share one length with values in [0, 1]".into(),
                ));
            }
        }
        Ok(FeatureTable { features, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn value(&self, item: usize, feature: usize) -> f64 {
        self.features[item][feature]
    }
}

/// Each candidate picks a random feature and takes the top `round(r·|S|)` items by it.
#[derive(Debug, Clone)]
pub struct FeatureSplit {
    table: FeatureTable,
    r: f64,
    m: usize,
    seed: u64,
}

impl FeatureSplit {
    pub fn new(table: FeatureTable, r: f64, m: usize, seed: u64) -> Result<Self> {
        check_ratio(r)?;
        if m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        Ok(FeatureSplit { table, r, m, seed })
    }
}

/// Draws `m` feature-based candidates at `live`. Feature ties are broken by item index.
pub fn feature_split_g<R: Rng + ?Sized>(
    live: &ItemSet,
    table: &FeatureTable,
    r: f64,
    m: usize,
    rng: &mut R,
    cache: &OracleCache,
) -> Vec<Question> {
    let members = live.to_indices();
    let k = split_size(r, members.len());
    (0..m)
        .map(|_| {
            let feature = rng.random_range(0..table.k());
            let mut ranked = members.clone();
            ranked.sort_by(|&a, &b| {
                table
                    .value(b, feature)
                    .total_cmp(&table.value(a, feature))
                    .then(a.cmp(&b))
            });
            let yes = ItemSet::from_indices(live.width(), ranked[..k].iter().copied());
            Question::new(cache.allocate_id(), yes)
        })
        .collect()
}

impl QuestionGenerator for FeatureSplit {
    fn source(&self) -> CandidateSource {
        CandidateSource::Synthetic
    }

    fn propose(&self, live: &ItemSet, attempt: u32, cache: &OracleCache) -> Result<Vec<Question>> {
        let mut rng = node_rng(self.seed, live, attempt);
        Ok(feature_split_g(
            live, &self.table, self.r, self.m, &mut rng, cache,
        ))
    }
}

/// A question from the degenerate "every subset" family: yes-set is the first `target` members of
/// `live` in index order.
pub fn qinf_g(live: &ItemSet, target: usize, cache: &OracleCache) -> Result<Question> {
    if target == 0 || target >= live.len() {
        return Err(Error::InvalidConfig(format!(
            "target size {target} must lie in [1, {}]",
            live.len().saturating_sub(1)
        )));
    }
    let yes = ItemSet::from_indices(live.width(), live.iter().take(target));
    Ok(Question::new(cache.allocate_id(), yes))
}

/// A fixed question pool, optionally restricted to a subset at chosen live sets.
#[derive(Debug, Clone)]
pub struct PoolGenerator {
    questions: Vec<Question>,
    restrictions: Vec<(ItemSet, Vec<usize>)>,
}

impl PoolGenerator {
    pub fn new(questions: Vec<Question>) -> Self {
        PoolGenerator {
            questions,
            restrictions: Vec::new(),
        }
    }

    /// At live set `at`, offer only the pool questions at positions `allowed`.
    pub fn restrict(mut self, at: ItemSet, allowed: Vec<usize>) -> Self {
        self.restrictions.push((at, allowed));
        self
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }
}

impl QuestionGenerator for PoolGenerator {
    fn source(&self) -> CandidateSource {
        CandidateSource::Synthetic
    }

    fn propose(&self, live: &ItemSet, _attempt: u32, cache: &OracleCache) -> Result<Vec<Question>> {
        for q in &self.questions {
            cache.reserve_through(q.id);
        }
        if let Some((_, allowed)) = self.restrictions.iter().find(|(at, _)| at == live) {
            return Ok(allowed.iter().map(|&i| self.questions[i].clone()).collect());
        }
        Ok(self.questions.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_round_half_up_and_clamp() {
        assert_eq!(split_size(0.5, 4), 2);
        assert_eq!(split_size(0.25, 136), 34);
        assert_eq!(split_size(0.25, 6), 2);
        assert_eq!(split_size(0.25, 2), 1);
        assert_eq!(split_size(0.01, 10), 1);
        assert_eq!(split_size(0.99, 10), 9);
        assert_eq!(split_size(0.33, 3), 1);
    }

    #[test]
    fn random_split_sizes_and_determinism() {
        let cache = OracleCache::new();
        let live = ItemSet::full(4);
        let gen = RandomSplit::new(0.5, 3, 11).unwrap();
        let qs = gen.propose(&live, 0, &cache).unwrap();
        assert_eq!(qs.len(), 3);
        assert!(qs.iter().all(|q| q.yes_set.len() == 2));

        let big = ItemSet::full(136);
        let qs = RandomSplit::new(0.25, 3, 1)
            .unwrap()
            .propose(&big, 0, &cache)
            .unwrap();
        assert!(qs.iter().all(|q| q.yes_set.len() == 34 && q.yes_set.is_subset(&big)));

        let a = gen.propose(&live, 0, &OracleCache::new()).unwrap();
        let b = gen.propose(&live, 0, &OracleCache::new()).unwrap();
        assert_eq!(a, b);
        assert!(RandomSplit::new(1.0, 3, 0).is_err());
    }

    #[test]
    fn single_feature_gives_one_distinct_split() {
        let table = FeatureTable::generate(20, 1, 3).unwrap();
        let gen = FeatureSplit::new(table, 0.33, 3, 9).unwrap();
        let live = ItemSet::full(20);
        let qs = gen.propose(&live, 0, &OracleCache::new()).unwrap();
        assert!(qs.windows(2).all(|w| w[0].yes_set == w[1].yes_set));
        assert_eq!(qs[0].yes_set.len(), split_size(0.33, 20));
    }

    #[test]
    fn feature_ties_break_by_index() {
        let table = FeatureTable::from_rows(vec![vec![0.5]; 6]).unwrap();
        let gen = FeatureSplit::new(table, 0.5, 1, 0).unwrap();
        let q = &gen.propose(&ItemSet::full(6), 0, &OracleCache::new()).unwrap()[0];
        assert_eq!(q.yes_set.to_indices(), [0, 1, 2]);
    }

    #[test]
    fn qinf_halves() {
        let cache = OracleCache::new();
        let live = ItemSet::full(8);
        let q = qinf_g(&live, 4, &cache).unwrap();
        assert_eq!(q.yes_set.to_indices(), [0, 1, 2, 3]);
        let two = ItemSet::from_indices(8, [3, 6]);
        assert_eq!(qinf_g(&two, 1, &cache).unwrap().yes_set.to_indices(), [3]);
        assert!(qinf_g(&two, 2, &cache).is_err());
        assert!(qinf_g(&two, 0, &cache).is_err());
    }
}
