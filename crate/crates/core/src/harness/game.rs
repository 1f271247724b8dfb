use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{ItemDomain, Question, VariantConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::oracles::llm::{HttpChat, LlmAnswerer, LlmGenerator, Setting};
use crate::oracles::{FeatureSplit, FeatureTable, Oracle, QuestionGenerator, RandomSplit};

/// Which game to play and where its questions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GameSpec {
    Fixture {
        name: String,
    },
    RandomSplit {
        n: usize,
        r: f64,
        seed: u64,
    },
    FeatureSplit {
        n: usize,
        k: usize,
        r: f64,
        seed: u64,
    },
    /// Items from a dataset file, questions and answers from a chat-completion endpoint.
    Llm {
        dataset: PathBuf,
        setting: String,
    },
}

/// A ready-to-play game.
pub struct Game {
    pub oracle: Oracle,
    pub variant: VariantConfig,
    pub spec: GameSpec,
}

impl Game {
    pub fn domain(&self) -> &ItemDomain {
        self.oracle.domain()
    }
}

impl GameSpec {
    /// Builds the oracle. Fixtures impose their own weighting; `inject` names items whose
    /// identity question is prepended to the root candidates.
    pub fn build(&self, variant: &VariantConfig, inject: &[String]) -> Result<Game> {
        variant.validate()?;
        let mut variant = variant.clone();
        let oracle = match self {
            GameSpec::Fixture { name } => {
                let fx = fixtures::by_name(name)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown fixture `{name}`")))?;
                variant.weighted = fx.variant.weighted;
                variant.heuristic = fx.variant.heuristic;
                variant.restricted = fx.variant.restricted;
                fx.oracle()
            }
            GameSpec::RandomSplit { n, r, seed } => {
                let domain = Arc::new(ItemDomain::numbered(*n)?);
                let gen: Arc<dyn QuestionGenerator> = Arc::new(RandomSplit::new(*r, variant.m, *seed)?);
                Oracle::new(domain, gen)
            }
            GameSpec::FeatureSplit { n, k, r, seed } => {
                let domain = Arc::new(ItemDomain::numbered(*n)?);
                let table = FeatureTable::generate(*n, *k, *seed)?;
                let gen: Arc<dyn QuestionGenerator> =
                    Arc::new(FeatureSplit::new(table, *r, variant.m, seed.wrapping_add(1))?);
                Oracle::new(domain, gen)
            }
            GameSpec::Llm { dataset, setting } => {
                let domain = Arc::new(ItemDomain::load(dataset)?);
                let setting = Setting::parse(setting)?;
                let transport = Arc::new(HttpChat::from_env()?);
                variant.weighted = variant.weighted && domain.is_weighted();
                let gen = Arc::new(LlmGenerator::new(
                    transport.clone(),
                    domain.clone(),
                    setting,
                    variant.weighted,
                    variant.m,
                ));
                let answerer = Arc::new(LlmAnswerer::new(transport, domain.clone(), setting));
                Oracle::new(domain, gen).with_answerer(answerer)
            }
        };
        let oracle = if matches!(self, GameSpec::Fixture { .. }) {
            oracle.strict(variant.strict)
        } else {
            oracle
                .strict(variant.strict)
                .identity_shortcut(variant.two_item_shortcut)
        };
        let injected = inject
            .iter()
            .map(|name| {
                let i = oracle.domain().index_of(name)?;
                Ok(Question::identity(oracle.domain(), i))
            })
            .collect::<Result<Vec<_>>>()?;
        let oracle = if injected.is_empty() {
            oracle
        } else {
            oracle.with_injected(injected)
        };
        Ok(Game {
            oracle,
            variant,
            spec: self.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_sets_weighting() {
        let g = GameSpec::Fixture {
            name: "example3".into(),
        }
        .build(&VariantConfig::default(), &[])
        .unwrap();
        assert!(g.variant.weighted);
        assert_eq!(g.domain().len(), 3);
    }

    #[test]
    fn synthetic_specs_and_injection() {
        let g = GameSpec::RandomSplit {
            n: 16,
            r: 0.25,
            seed: 2,
        }
        .build(&VariantConfig::default(), &["item-5".into()])
        .unwrap();
        let root = g.oracle.candidates(&g.domain().full_set()).unwrap();
        assert!(root.questions[0].id.is_identity());
        assert_eq!(root.questions[0].yes_set.to_indices(), [5]);
        let f = GameSpec::FeatureSplit {
            n: 20,
            k: 3,
            r: 0.33,
            seed: 1,
        }
        .build(&VariantConfig::default(), &[])
        .unwrap();
        assert!(!f.oracle.candidates(&f.domain().full_set()).unwrap().is_empty());
        let json = serde_json::to_string(&f.spec).unwrap();
        assert_eq!(serde_json::from_str::<GameSpec>(&json).unwrap(), f.spec);
    }
}
