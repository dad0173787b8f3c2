//! Batch evaluation: a scripted user answers the agent's questions from a
//! gold-labelled corpus, every item runs as a full session with learning on,
//! and the corpus is replayed so the before/after learning curve can be read
//! off the report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::Engine;
use crate::config::Config;
use crate::dialogue::{AgentAction, DialogueError};
use crate::grounding::{Grounder, Utterance};
use crate::kb::{ApiId, KnowledgeBase};
use crate::novelty::NoveltyError;
use crate::text::normalize_phrase;

/// Turns after which a session is abandoned. Budgets end every dialogue
/// long before this; it only guards against a misbehaving oracle.
const MAX_TURNS_PER_ITEM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("corpus line {line}: {message}")]
    InvalidCorpus { line: usize, message: String },
    #[error("simulated user has no paraphrase left")]
    OracleExhausted,
    #[error("simulated user cannot answer a {0} action")]
    NotAQuestion(&'static str),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Config(#[from] NoveltyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusItem {
    pub utterance: String,
    pub gold_api: ApiId,
    #[serde(default)]
    pub gold_args: BTreeMap<String, String>,
    #[serde(default)]
    pub alt_paraphrases: Vec<String>,
    /// API executed just before this command, if any.
    #[serde(default)]
    pub context: Option<ApiId>,
}

/// Parses a line-delimited corpus. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusItem>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::InvalidCorpus {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn validate_corpus(corpus: &[CorpusItem], kb: &KnowledgeBase) -> Result<(), EvalError> {
    for (i, item) in corpus.iter().enumerate() {
        let bad = |message: String| EvalError::InvalidCorpus { line: i + 1, message };
        if normalize_phrase(&item.utterance).is_empty() {
            return Err(bad("empty utterance".into()));
        }
        let api = kb
            .api(&item.gold_api)
            .ok_or_else(|| bad(format!("unknown gold_api `{}`", item.gold_api)))?;
        for arg in &api.args {
            match item.gold_args.get(&arg.name) {
                Some(v) if !normalize_phrase(v).is_empty() => {}
                _ => return Err(bad(format!("missing gold value for {}.{}", api.api_id, arg.name))),
            }
        }
        if let Some(extra) = item.gold_args.keys().find(|k| api.arg(k).is_none()) {
            return Err(bad(format!("`{}` is not an argument of {}", extra, api.api_id)));
        }
        if let Some(ctx) = &item.context {
            if kb.api(ctx).is_none() {
                return Err(bad(format!("unknown context api `{ctx}`")));
            }
        }
    }
    Ok(())
}

/// Scripted user for one corpus item.
#[derive(Debug, Clone)]
pub struct SimulatedUser<'a> {
    item: &'a CorpusItem,
    next_alt: usize,
    repeated: bool,
}

impl<'a> SimulatedUser<'a> {
    pub fn new(item: &'a CorpusItem) -> Self {
        SimulatedUser {
            item,
            next_alt: 0,
            repeated: false,
        }
    }

    /// Picks the gold option (or "none"), gives gold argument values, and
    /// answers rephrase requests with the next paraphrase; once those run out
    /// it repeats the original command once.
    pub fn respond(&mut self, action: &AgentAction) -> Result<String, EvalError> {
        match action {
            AgentAction::OfferOptions { options } => Ok(options
                .iter()
                .find(|o| o.api_id == self.item.gold_api)
                .map_or_else(|| "none".to_string(), |o| o.index.to_string())),
            AgentAction::AskArg { arg, .. } => Ok(self.item.gold_args.get(arg).cloned().unwrap_or_default()),
            AgentAction::AskRephrase { .. } => {
                if let Some(alt) = self.item.alt_paraphrases.get(self.next_alt) {
                    self.next_alt += 1;
                    Ok(alt.clone())
                } else if !self.repeated {
                    self.repeated = true;
                    Ok(self.item.utterance.clone())
                } else {
                    Err(EvalError::OracleExhausted)
                }
            }
            AgentAction::Execute { .. } => Err(EvalError::NotAQuestion("EXECUTE")),
            AgentAction::GiveUp { .. } => Err(EvalError::NotAQuestion("GIVE_UP")),
            AgentAction::Say { .. } => Err(EvalError::NotAQuestion("SAY")),
        }
    }
}

pub fn simulated_user_respond(action: &AgentAction, item: &CorpusItem) -> Result<String, EvalError> {
    SimulatedUser::new(item).respond(action)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemEnd {
    Executed,
    GaveUp,
    OracleExhausted,
    TurnLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub pass: usize,
    pub index: usize,
    pub end: ItemEnd,
    pub executed_api: Option<ApiId>,
    pub executed_args: BTreeMap<String, String>,
    pub correct: bool,
    pub questions: u32,
    /// Gold API among the top-k grounded APIs before the dialogue.
    pub topk_hit: bool,
    /// A new seed command was learned from this item.
    pub taught: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    pub pass: usize,
    pub accuracy: Option<f64>,
    pub mean_questions: Option<f64>,
    pub zero_question_accuracy: Option<f64>,
}

/// Rates are `None` (null in JSON) when nothing was measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Corpus items per pass.
    pub n: usize,
    pub passes: usize,
    /// Over every run of every pass.
    pub exec_accuracy: Option<f64>,
    pub topk_hit_rate: Option<f64>,
    pub mean_questions: Option<f64>,
    /// Seed commands learned during the run.
    pub learned_sc_count: usize,
    pub pass1_accuracy: Option<f64>,
    pub pass2_accuracy: Option<f64>,
    pub pass1_mean_questions: Option<f64>,
    pub pass2_mean_questions: Option<f64>,
    pub per_pass: Vec<PassSummary>,
    pub items: Vec<ItemResult>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn table(&self) -> String {
        fn f(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
        }
        let mut out = String::new();
        out.push_str(&format!("{:<24}{:>10}\n", "metric", "value"));
        out.push_str(&format!("{:<24}{:>10}\n", "items", self.n));
        out.push_str(&format!("{:<24}{:>10}\n", "passes", self.passes));
        out.push_str(&format!("{:<24}{:>10}\n", "exec_accuracy", f(self.exec_accuracy)));
        out.push_str(&format!("{:<24}{:>10}\n", "topk_hit_rate", f(self.topk_hit_rate)));
        out.push_str(&format!("{:<24}{:>10}\n", "mean_questions", f(self.mean_questions)));
        out.push_str(&format!("{:<24}{:>10}\n", "learned_sc_count", self.learned_sc_count));
        out.push('\n');
        out.push_str(&format!("{:<6}{:>10}{:>16}{:>16}\n", "pass", "accuracy", "mean_questions", "zero_q_accuracy"));
        for p in &self.per_pass {
            out.push_str(&format!(
                "{:<6}{:>10}{:>16}{:>16}\n",
                p.pass,
                f(p.accuracy),
                f(p.mean_questions),
                f(p.zero_question_accuracy)
            ));
        }
        out
    }
}

#[derive(Debug)]
pub struct EvalRun {
    pub report: EvalReport,
    /// KB after all learning.
    pub kb: KnowledgeBase,
}

pub fn run_corpus(
    kb: KnowledgeBase,
    corpus: &[CorpusItem],
    config: &Config,
    passes: usize,
) -> Result<EvalRun, EvalError> {
    validate_corpus(corpus, &kb)?;
    let learned_before = kb.summary().learned_sc_count;
    let engine = Engine::new(kb, config.clone())?;
    // Logical clock: keeps reports byte-identical across runs.
    let mut clock = 0u64;
    let mut items = Vec::new();

    for pass in 1..=passes {
        for (index, item) in corpus.iter().enumerate() {
            let r = run_item(&engine, item, &mut clock)?;
            items.push(ItemResult { pass, index, ..r });
        }
    }

    let kb = (*engine.snapshot()).clone();
    let per_pass: Vec<PassSummary> = (1..=passes)
        .map(|p| {
            let runs: Vec<&ItemResult> = items.iter().filter(|r| r.pass == p).collect();
            PassSummary {
                pass: p,
                accuracy: rate(&runs, |r| r.correct),
                mean_questions: mean(&runs, |r| r.questions as f64),
                zero_question_accuracy: rate(&runs, |r| r.correct && r.questions == 0),
            }
        })
        .collect();
    let all: Vec<&ItemResult> = items.iter().collect();
    let pass_field = |p: usize, f: fn(&PassSummary) -> Option<f64>| per_pass.get(p - 1).and_then(f);

    let report = EvalReport {
        n: corpus.len(),
        passes,
        exec_accuracy: rate(&all, |r| r.correct),
        topk_hit_rate: rate(&all, |r| r.topk_hit),
        mean_questions: mean(&all, |r| r.questions as f64),
        learned_sc_count: kb.summary().learned_sc_count - learned_before,
        pass1_accuracy: pass_field(1, |p| p.accuracy),
        pass2_accuracy: pass_field(2, |p| p.accuracy),
        pass1_mean_questions: pass_field(1, |p| p.mean_questions),
        pass2_mean_questions: pass_field(2, |p| p.mean_questions),
        per_pass,
        items,
    };
    Ok(EvalRun { report, kb })
}

fn rate(runs: &[&ItemResult], pred: impl Fn(&ItemResult) -> bool) -> Option<f64> {
    (!runs.is_empty()).then(|| runs.iter().filter(|r| pred(r)).count() as f64 / runs.len() as f64)
}

fn mean(runs: &[&ItemResult], f: impl Fn(&ItemResult) -> f64) -> Option<f64> {
    (!runs.is_empty()).then(|| runs.iter().map(|r| f(r)).sum::<f64>() / runs.len() as f64)
}

fn run_item(engine: &Engine, item: &CorpusItem, clock: &mut u64) -> Result<ItemResult, EvalError> {
    let kb = engine.snapshot();
    let grounding = Grounder::new(&kb, engine.config().weighting)
        .ground(&Utterance::new(item.utterance.as_str()))
        .map_err(DialogueError::from)?;
    let topk_hit = grounding
        .best_per_api
        .iter()
        .take(engine.config().k)
        .any(|m| m.score > 0.0 && m.api_id == item.gold_api);

    let mut state = engine.new_session();
    state.last_executed_api = item.context.clone();
    let mut user = SimulatedUser::new(item);
    let mut input = item.utterance.clone();
    let mut questions = 0u32;
    let mut taught = false;

    let result = |end, api: Option<ApiId>, args: BTreeMap<String, String>, questions, taught| {
        let gold: BTreeMap<String, String> =
            item.gold_args.iter().map(|(k, v)| (k.clone(), normalize_phrase(v))).collect();
        ItemResult {
            pass: 0,
            index: 0,
            end,
            correct: api.as_deref() == Some(item.gold_api.as_str()) && args == gold,
            executed_api: api,
            executed_args: args,
            questions,
            topk_hit,
            taught,
        }
    };

    for _ in 0..MAX_TURNS_PER_ITEM {
        *clock += 1;
        let report = engine.turn(&mut state, &input, *clock)?;
        taught |= report.commit.as_ref().is_some_and(|c| c.added_sc.is_some());
        match &report.action {
            AgentAction::Execute { api_id, args } => {
                return Ok(result(ItemEnd::Executed, Some(api_id.clone()), args.clone(), questions, taught));
            }
            AgentAction::GiveUp { .. } => {
                return Ok(result(ItemEnd::GaveUp, None, BTreeMap::new(), questions, taught));
            }
            action => {
                if action.kind().is_question() {
                    questions += 1;
                }
                match user.respond(action) {
                    Ok(reply) => input = reply,
                    Err(EvalError::OracleExhausted) => {
                        return Ok(result(ItemEnd::OracleExhausted, None, BTreeMap::new(), questions, taught));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(result(ItemEnd::TurnLimit, None, BTreeMap::new(), questions, taught))
}
