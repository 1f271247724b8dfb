//! Chat-completion backed question generation (`g`) and answering (`f`).
//!
//! Nothing here is needed for synthetic games. The transport is a trait so tests can script
//! responses; [`HttpChat`] talks to any OpenAI-compatible `/chat/completions` endpoint.

use std::collections::HashSet;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::json;

use super::{Answerer, OracleCache, QuestionGenerator};
use crate::domain::{CandidateSource, ItemDomain, ItemSet, Question};
use crate::error::{Error, Result};

pub const ENV_BASE_URL: &str = "SLS_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "SLS_LLM_API_KEY";
pub const ENV_MODEL: &str = "SLS_LLM_MODEL";

const GENERATE_FORMAT: &str =
    "Respond only with a JSON list of question strings, for example [\"Is it a person?\"].";
const ANSWER_FORMAT: &str = "Respond only with a JSON object of the form {\"yes\": [...], \"no\": [...]} listing every item name exactly once.";
const CHOOSE_FORMAT: &str =
    "Respond only with the integer key of the chosen question as a JSON number.";

/// Prompt family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    TwentyQuestionsEven,
    TwentyQuestionsNatural,
    MedicalDiagnosis,
    Troubleshooting,
}

impl Setting {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "20q-even" => Ok(Setting::TwentyQuestionsEven),
            "20q-natural" => Ok(Setting::TwentyQuestionsNatural),
            "md" => Ok(Setting::MedicalDiagnosis),
            "ts" => Ok(Setting::Troubleshooting),
            other => Err(Error::InvalidConfig(format!("unknown prompt setting `{other}`"))),
        }
    }

    fn noun(self) -> &'static str {
        match self {
            Setting::MedicalDiagnosis => "diseases",
            Setting::Troubleshooting => "car faults",
            _ => "items",
        }
    }

    fn list_placeholder(self) -> &'static str {
        match self {
            Setting::MedicalDiagnosis => "[diseases]",
            Setting::Troubleshooting => "[faults]",
            _ => "[items]",
        }
    }

    fn weighted_placeholder(self) -> &'static str {
        match self {
            Setting::MedicalDiagnosis => "[diseases with weights]",
            Setting::Troubleshooting => "[faults with weights]",
            _ => "[items with weights]",
        }
    }

    fn generate_template(self, weighted: bool) -> &'static str {
        match (self, weighted) {
            (Setting::TwentyQuestionsEven, false) => include_str!("../../prompts/generate_20q_even.txt"),
            (Setting::TwentyQuestionsNatural, false) => {
                include_str!("../../prompts/generate_20q_natural.txt")
            }
            (Setting::MedicalDiagnosis, false) => include_str!("../../prompts/generate_md.txt"),
            (Setting::Troubleshooting, false) => include_str!("../../prompts/generate_ts.txt"),
            (Setting::TwentyQuestionsEven | Setting::TwentyQuestionsNatural, true) => {
                include_str!("../../prompts/generate_20q_weighted.txt")
            }
            (Setting::MedicalDiagnosis, true) => include_str!("../../prompts/generate_md_weighted.txt"),
            (Setting::Troubleshooting, true) => include_str!("../../prompts/generate_ts_weighted.txt"),
        }
    }

    fn choose_template(self, weighted: bool) -> &'static str {
        match (self, weighted) {
            (Setting::MedicalDiagnosis, _) => include_str!("../../prompts/choose_md.txt"),
            (Setting::Troubleshooting, _) => include_str!("../../prompts/choose_ts.txt"),
            (_, false) => include_str!("../../prompts/choose_20q.txt"),
            (_, true) => include_str!("../../prompts/choose_20q_weighted.txt"),
        }
    }
}

const ANSWER_TEMPLATE: &str = include_str!("../../prompts/answer.txt");

fn python_str(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

/// `['a', 'b']`
pub fn python_list(domain: &ItemDomain, live: &ItemSet) -> String {
    let parts: Vec<_> = live.iter().map(|i| python_str(domain.name(i))).collect();
    format!("[{}]", parts.join(", "))
}

/// `{'a': 3, 'b': 2}`
pub fn python_weight_dict(domain: &ItemDomain, live: &ItemSet) -> String {
    let parts: Vec<_> = live
        .iter()
        .map(|i| format!("{}: {}", python_str(domain.name(i)), domain.weight(i)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Fills the question-generation template for `live`.
pub fn generation_prompt(
    setting: Setting,
    weighted: bool,
    domain: &ItemDomain,
    live: &ItemSet,
    m: usize,
) -> String {
    let template = setting.generate_template(weighted);
    let filled = if weighted {
        template.replace(setting.weighted_placeholder(), &python_weight_dict(domain, live))
    } else {
        template.replace(setting.list_placeholder(), &python_list(domain, live))
    };
    filled.replace("[m]", &m.to_string())
}

/// Fills the classification template for one question.
pub fn answer_prompt(setting: Setting, domain: &ItemDomain, live: &ItemSet, question: &str) -> String {
    ANSWER_TEMPLATE
        .replace("[items/diseases/car faults]", setting.noun())
        .replace("[items]", &python_list(domain, live))
        .replace("[question]", question)
}

/// Fills the direct-choice template; questions are keyed by their position.
pub fn choose_prompt(
    setting: Setting,
    weighted: bool,
    domain: &ItemDomain,
    live: &ItemSet,
    questions: &[String],
) -> String {
    let template = setting.choose_template(weighted);
    let listed: Vec<_> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| format!("{i} : {}", python_str(q)))
        .collect();
    let items = if weighted {
        template.replace(setting.weighted_placeholder(), &python_weight_dict(domain, live))
    } else {
        template.replace(setting.list_placeholder(), &python_list(domain, live))
    };
    items.replace("[question]", &format!("{{{}}}", listed.join(", ")))
}

/// One chat exchange: system prompt plus one user message, returning the assistant text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String>;
}

/// Blocking client for an OpenAI-compatible chat-completion endpoint.
pub struct HttpChat {
    base_url: String,
    api_key: Option<String>,
    model: String,
    temperature: f64,
    agent: ureq::Agent,
}

impl HttpChat {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, model: impl Into<String>) -> Self {
        HttpChat {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            model: model.into(),
            temperature: 1.0,
            agent: ureq::Agent::new_with_defaults(),
        }
    }

    /// Reads base URL, key and model from the environment.
    pub fn from_env() -> Result<Self> {
        let base = std::env::var(ENV_BASE_URL)
            .map_err(|_| Error::InvalidConfig(format!("{ENV_BASE_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| Error::InvalidConfig(format!("{ENV_MODEL} is not set")))?;
        Ok(Self::new(base, std::env::var(ENV_API_KEY).ok(), model))
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl ChatTransport for HttpChat {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let mut request = self
            .agent
            .post(&format!("{}/chat/completions", self.base_url));
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Transport("response carried no message content".into()))
    }
}

/// Pulls the outermost JSON value delimited by `open`/`close` out of free text.
fn extract_json(text: &str, open: char, close: char) -> Option<&str> {
    let start = text.find(open)?;
    let end = text.rfind(close)?;
    (end > start).then(|| &text[start..=end])
}

pub fn parse_question_list(text: &str) -> Option<Vec<String>> {
    let raw = extract_json(text, '[', ']')?;
    let list: Vec<String> = serde_json::from_str(raw).ok()?;
    let list: Vec<String> = list
        .into_iter()
        .map(|q| q.trim().to_string())
        .filter(|q| !q.is_empty())
        .collect();
    (!list.is_empty()).then_some(list)
}

#[derive(Deserialize)]
struct Classification {
    yes: Vec<String>,
    no: Vec<String>,
}

/// Parses a yes/no classification; every member of `live` must appear exactly once.
pub fn parse_classification(domain: &ItemDomain, live: &ItemSet, text: &str) -> Result<ItemSet> {
    let raw = extract_json(text, '{', '}')
        .ok_or_else(|| Error::InvalidConfig("no JSON object in classification".into()))?;
    let parsed: Classification = serde_json::from_str(raw)?;
    let mut seen = HashSet::new();
    let mut yes = ItemSet::empty(domain.len());
    for (names, answer) in [(&parsed.yes, true), (&parsed.no, false)] {
        for name in names {
            let idx = domain.index_of(name.trim())?;
            if !live.contains(idx) {
                return Err(Error::InvalidConfig(format!("`{name}` is not a live item")));
            }
            if !seen.insert(idx) {
                return Err(Error::InvalidConfig(format!("`{name}` classified twice")));
            }
            if answer {
                yes.insert(idx);
            }
        }
    }
    if seen.len() != live.len() {
        return Err(Error::InvalidConfig(format!(
            "{} of {} items classified",
            seen.len(),
            live.len()
        )));
    }
    Ok(yes)
}

/// `f` backed by a chat model.
pub struct LlmAnswerer {
    transport: Arc<dyn ChatTransport>,
    domain: Arc<ItemDomain>,
    setting: Setting,
    max_retries: u32,
}

impl LlmAnswerer {
    pub fn new(transport: Arc<dyn ChatTransport>, domain: Arc<ItemDomain>, setting: Setting) -> Self {
        LlmAnswerer {
            transport,
            domain,
            setting,
            max_retries: 5,
        }
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.max_retries = retries;
        self
    }

    /// Classifies `live` by `question`, returning the yes side. Partition violations are retried.
    pub fn llm_f(&self, live: &ItemSet, question: &str) -> Result<ItemSet> {
        let prompt = answer_prompt(self.setting, &self.domain, live, question);
        let mut last = String::new();
        for _ in 0..=self.max_retries {
            let reply = self.transport.complete(ANSWER_FORMAT, &prompt)?;
            match parse_classification(&self.domain, live, &reply) {
                Ok(yes) => return Ok(yes),
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::RetryExhausted {
            attempts: self.max_retries + 1,
            reason: last,
        })
    }
}

impl Answerer for LlmAnswerer {
    fn classify(&self, live: &ItemSet, question: &Question) -> Result<ItemSet> {
        let text = question
            .text
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("question {} has no text", question.id)))?;
        self.llm_f(live, text)
    }
}

/// `g` backed by a chat model; every proposed string is classified right away.
pub struct LlmGenerator {
    transport: Arc<dyn ChatTransport>,
    domain: Arc<ItemDomain>,
    answerer: LlmAnswerer,
    setting: Setting,
    weighted: bool,
    m: usize,
    max_retries: u32,
}

impl LlmGenerator {
    pub fn new(
        transport: Arc<dyn ChatTransport>,
        domain: Arc<ItemDomain>,
        setting: Setting,
        weighted: bool,
        m: usize,
    ) -> Self {
        LlmGenerator {
            answerer: LlmAnswerer::new(transport.clone(), domain.clone(), setting),
            transport,
            domain,
            setting,
            weighted,
            m,
            max_retries: 5,
        }
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.max_retries = retries;
        self.answerer = self.answerer.with_retries(retries);
        self
    }

    /// Asks for `m` question strings at `live`, retrying malformed replies.
    pub fn llm_g(&self, live: &ItemSet) -> Result<Vec<String>> {
        let prompt = generation_prompt(self.setting, self.weighted, &self.domain, live, self.m);
        for _ in 0..=self.max_retries {
            let reply = self.transport.complete(GENERATE_FORMAT, &prompt)?;
            if let Some(mut list) = parse_question_list(&reply) {
                list.truncate(self.m);
                return Ok(list);
            }
        }
        Err(Error::RetryExhausted {
            attempts: self.max_retries + 1,
            reason: "no parseable question list".into(),
        })
    }
}

impl QuestionGenerator for LlmGenerator {
    fn source(&self) -> CandidateSource {
        CandidateSource::Llm
    }

    fn propose(&self, live: &ItemSet, _attempt: u32, cache: &OracleCache) -> Result<Vec<Question>> {
        self.llm_g(live)?
            .into_iter()
            .map(|text| {
                let yes = self.answerer.llm_f(live, &text)?;
                Ok(Question {
                    id: cache.allocate_id(),
                    yes_set: yes,
                    text: Some(text),
                    scope: Some(live.clone()),
                })
            })
            .collect()
    }
}

/// Direct-choice helper: asks the model to pick one of `questions`; returns its position.
pub fn llm_choose(
    transport: &dyn ChatTransport,
    setting: Setting,
    weighted: bool,
    domain: &ItemDomain,
    live: &ItemSet,
    questions: &[String],
    max_retries: u32,
) -> Result<usize> {
    let prompt = choose_prompt(setting, weighted, domain, live, questions);
    for _ in 0..=max_retries {
        let reply = transport.complete(CHOOSE_FORMAT, &prompt)?;
        let digits: String = reply
            .chars()
            .skip_while(|c| !c.is_ascii_digit())
            .take_while(char::is_ascii_digit)
            .collect();
        if let Ok(i) = digits.parse::<usize>() {
            if i < questions.len() {
                return Ok(i);
            }
        }
    }
    Err(Error::RetryExhausted {
        attempts: max_retries + 1,
        reason: "no valid question index".into(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::VecDeque;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    use super::*;

    /// Replays canned replies in order and counts calls.
    pub(crate) struct Scripted {
        replies: Mutex<VecDeque<String>>,
        pub calls: AtomicUsize,
        pub prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        pub(crate) fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Arc<Self> {
            Arc::new(Scripted {
                replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
                calls: AtomicUsize::new(0),
                prompts: Mutex::new(Vec::new()),
            })
        }
    }

    impl ChatTransport for Scripted {
        fn complete(&self, _system: &str, user: &str) -> Result<String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.prompts.lock().unwrap().push(user.to_string());
            self.replies
                .lock()
                .unwrap()
                .pop_front()
                .ok_or_else(|| Error::Transport("script exhausted".into()))
        }
    }

    fn people() -> Arc<ItemDomain> {
        Arc::new(ItemDomain::new(["Oppenheimer", "Alan Turing", "A Beautiful Mind"]).unwrap())
    }

    #[test]
    fn generation_prompt_lists_items_and_count() {
        let domain = ItemDomain::new(["Oppenheimer", "Alan Turing"]).unwrap();
        let p = generation_prompt(
            Setting::TwentyQuestionsNatural,
            false,
            &domain,
            &domain.full_set(),
            3,
        );
        assert!(p.contains("['Oppenheimer', 'Alan Turing']"));
        assert!(p.contains("best 3 questions"));
        assert!(!p.contains("[m]"));

        let w = ItemDomain::weighted([("Oppenheimer", 3.0), ("Alan Turing", 2.0)]).unwrap();
        let p = generation_prompt(Setting::TwentyQuestionsNatural, true, &w, &w.full_set(), 1);
        assert!(p.contains("{'Oppenheimer': 3, 'Alan Turing': 2}"));
        assert!(p.contains("best 1 questions"));

        let p = generation_prompt(Setting::MedicalDiagnosis, false, &domain, &domain.full_set(), 2);
        assert!(p.starts_with("You are a doctor"));
        assert!(p.contains("['Oppenheimer', 'Alan Turing']"));
    }

    #[test]
    fn answer_prompt_uses_noun() {
        let domain = people();
        let p = answer_prompt(Setting::Troubleshooting, &domain, &domain.full_set(), "Is it loud?");
        assert!(p.starts_with("Here are some car faults:"));
        assert!(p.contains("Is it loud?"));
    }

    #[test]
    fn malformed_generation_is_retried() {
        let domain = people();
        let script = Scripted::new([
            "sure! here you go: not json",
            r#"["Is it a movie?"]"#,
            r#"{"yes": ["A Beautiful Mind", "Oppenheimer"], "no": ["Alan Turing"]}"#,
        ]);
        let gen = LlmGenerator::new(script.clone(), domain.clone(), Setting::TwentyQuestionsNatural, false, 3);
        let cache = OracleCache::new();
        let qs = gen.propose(&domain.full_set(), 0, &cache).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].yes_set.to_indices(), [0, 2]);
        assert_eq!(qs[0].scope, Some(domain.full_set()));
        assert_eq!(script.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn partition_violations_are_retried() {
        let domain = people();
        let script = Scripted::new([
            r#"{"yes": ["Oppenheimer"], "no": ["Alan Turing"]}"#,
            r#"{"yes": ["Oppenheimer", "Alan Turing"], "no": ["Alan Turing", "A Beautiful Mind"]}"#,
            r#"{"yes": ["Oppenheimer"], "no": ["Alan Turing", "A Beautiful Mind"]}"#,
        ]);
        let f = LlmAnswerer::new(script.clone(), domain.clone(), Setting::TwentyQuestionsNatural);
        let yes = f.llm_f(&domain.full_set(), "Is it a person?").unwrap();
        assert_eq!(yes.to_indices(), [0]);
        assert_eq!(script.calls.load(Ordering::SeqCst), 3);

        let script = Scripted::new(["nope", "still nope"]);
        let f = LlmAnswerer::new(script, domain.clone(), Setting::TwentyQuestionsNatural).with_retries(1);
        assert!(matches!(
            f.llm_f(&domain.full_set(), "?"),
            Err(Error::RetryExhausted { attempts: 2, .. })
        ));
    }

    #[test]
    fn choose_parses_index() {
        let domain = people();
        let script = Scripted::new(["I pick 7", "1"]);
        let qs = vec!["a".to_string(), "b".to_string()];
        let i = llm_choose(
            script.as_ref(),
            Setting::TwentyQuestionsNatural,
            false,
            &domain,
            &domain.full_set(),
            &qs,
            3,
        )
        .unwrap();
        assert_eq!(i, 1);
        let prompts = script.prompts.lock().unwrap();
        assert!(prompts[0].contains("{0 : 'a', 1 : 'b'}"));
    }
}
