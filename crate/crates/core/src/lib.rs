//! Adversarial twenty questions as a zero-sum extensive-form game.
//!
//! An Item Chooser secretly fixes an item; a Questioner asks yes/no questions until a single item
//! remains consistent with the answers and pays one unit per question (or the item's weight per
//! question). The crate builds these games exactly for small domains, solves depth-limited
//! subgames with counterfactual regret minimization during play, and compares the resulting
//! randomized questioner with information-gain, even-split, random and best-response baselines.
//!
//! Module map:
//! - [`domain`]: items, questions, histories and consistent sets.
//! - [`oracles`]: question generators, answerers and the shared cache.
//! - [`efg`]: simulation trees and game trees built from them.
//! - [`solver`]: CFR, best responses, exploitability and a matrix-game oracle.
//! - [`search`]: the resolving loop and game play.
//! - [`baselines`]: comparison policies and exact isolators.
//! - [`harness`]: metrics and reports.

pub mod baselines;
pub mod domain;
pub mod efg;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod oracles;
pub mod search;
pub mod solver;

pub use domain::{
    consistent_set, split, terminal_payoff, CandidateSet, CandidateSource, Heuristic, History,
    ItemDomain, ItemSet, Question, QuestionId, VariantConfig,
};
pub use error::{Error, Result};
