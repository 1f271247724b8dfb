//! The three-item circular games used throughout the tests and the CLI.
//!
//! Items are Oppenheimer, Alan Turing and A Beautiful Mind. Question `i` is answered "no" by item
//! `i` and "yes" by the other two.

use std::sync::Arc;

use crate::domain::{ItemDomain, ItemSet, Question, QuestionId, VariantConfig};
use crate::oracles::{Oracle, PoolGenerator};

const NAMES: [&str; 3] = ["Oppenheimer", "Alan Turing", "A Beautiful Mind"];
const TEXTS: [&str; 3] = ["Related to codes?", "Is it a movie?", "Is it a person?"];

/// A small game: domain, question pool, generator and matching variant.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub domain: Arc<ItemDomain>,
    pub questions: Vec<Question>,
    pub generator: PoolGenerator,
    pub variant: VariantConfig,
}

impl Fixture {
    /// Oracle over the fixture's pool. The identity shortcut is off so trees match the
    /// hand-drawn game exactly.
    pub fn oracle(&self) -> Oracle {
        Oracle::new(self.domain.clone(), Arc::new(self.generator.clone())).identity_shortcut(false)
    }

    pub fn question(&self, position: usize) -> &Question {
        &self.questions[position]
    }
}

fn circular_questions(n: usize) -> Vec<Question> {
    (0..n)
        .map(|i| {
            let mut yes = ItemSet::full(n);
            yes.remove(i);
            Question::new(QuestionId(i as u32), yes).with_text(TEXTS[i])
        })
        .collect()
}

/// Unrestricted circular game. Value 5/3.
pub fn example1() -> Fixture {
    let domain = Arc::new(ItemDomain::new(NAMES).expect("fixture names are valid"));
    let questions = circular_questions(3);
    Fixture {
        name: "example1",
        generator: PoolGenerator::new(questions.clone()),
        domain,
        questions,
        variant: VariantConfig {
            restricted: false,
            ..VariantConfig::default()
        },
    }
}

/// The circular game with the first question limited to q1 or q2. Value 2.
pub fn example2() -> Fixture {
    let mut fx = example1();
    fx.name = "example2";
    fx.generator = fx.generator.restrict(fx.domain.full_set(), vec![0, 1]);
    fx.variant.restricted = true;
    fx
}

/// The circular game with weights 3, 2, 2. Value 15/4.
pub fn example3() -> Fixture {
    let domain = Arc::new(
        ItemDomain::weighted(NAMES.into_iter().zip([3.0, 2.0, 2.0]))
            .expect("fixture weights are valid"),
    );
    let questions = circular_questions(3);
    Fixture {
        name: "example3",
        generator: PoolGenerator::new(questions.clone()),
        domain,
        questions,
        variant: VariantConfig {
            restricted: false,
            ..VariantConfig::default()
        }
        .weighted(),
    }
}

/// Looks a fixture up by name.
pub fn by_name(name: &str) -> Option<Fixture> {
    match name {
        "example1" => Some(example1()),
        "example2" => Some(example2()),
        "example3" => Some(example3()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_answer_table() {
        let fx = example1();
        for (i, q) in fx.questions.iter().enumerate() {
            for s in 0..3 {
                assert_eq!(q.answer(s).unwrap(), s != i);
            }
        }
        assert_eq!(fx.question(1).text.as_deref(), Some("Is it a movie?"));
    }

    #[test]
    fn restricted_root_offers_two_questions() {
        let fx = example2();
        let oracle = fx.oracle();
        let root = oracle.candidates(&fx.domain.full_set()).unwrap();
        assert_eq!(root.ids(), [QuestionId(0), QuestionId(1)]);
        let pair = ItemSet::from_indices(3, [1, 2]);
        assert_eq!(oracle.candidates(&pair).unwrap().ids(), [QuestionId(1), QuestionId(2)]);
    }

    #[test]
    fn lookup() {
        assert!(by_name("example3").unwrap().domain.is_weighted());
        assert!(by_name("nope").is_none());
    }
}
