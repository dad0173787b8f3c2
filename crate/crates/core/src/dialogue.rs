//! Per-session clarification dialogue. `handle_turn` is pure: it reads the
//! KB, returns the next session state and action, and hands back a
//! `LearnEpisode` whenever a command was executed after at least one
//! question. Applying the episode is the caller's job.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characterize::{characterize, Characterization};
use crate::config::Config;
use crate::grounding::{Binding, Grounder, GroundingError, Utterance};
use crate::kb::{ApiId, ApiSpec, Context, KnowledgeBase, MAX_PHRASE_TOKENS};
use crate::learner::LearnEpisode;
use crate::novelty::{novelty_score, Bucket, NoveltyError, NoveltyReport};
use crate::text::normalize;
use crate::wire::{OptionItem, Sender, TurnBody};

pub const OPTIONS_INTRO: &str = "Sorry, I didn't get you. Do you mean to:";
pub const REPHRASE_PROMPT: &str =
    "Sorry, I didn't get you. Could you say the command again in a different way?";
pub const GIVE_UP_TEXT: &str = "Sorry, I could not work out what you want. Let's start over.";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialogueError {
    #[error("session `{0}` is closed")]
    SessionClosed(String),
    #[error("option {index} is out of range (1..={count})")]
    InvalidOptionIndex { index: usize, count: usize },
    #[error("knowledge base has no apis")]
    EmptyKb,
    #[error(transparent)]
    Novelty(#[from] NoveltyError),
}

impl From<GroundingError> for DialogueError {
    fn from(e: GroundingError) -> Self {
        match e {
            GroundingError::EmptyKb => DialogueError::EmptyKb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "arg", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Idle,
    AwaitOption,
    AwaitArg(String),
    AwaitRephrase,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Execute,
    OfferOptions,
    AskArg,
    AskRephrase,
    GiveUp,
    Say,
}

impl ActionKind {
    pub fn is_question(self) -> bool {
        matches!(self, ActionKind::OfferOptions | ActionKind::AskArg | ActionKind::AskRephrase)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferedOption {
    pub index: usize,
    pub api_id: ApiId,
    pub text: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentAction {
    Execute {
        api_id: ApiId,
        args: BTreeMap<String, String>,
    },
    OfferOptions {
        options: Vec<OfferedOption>,
    },
    AskArg {
        arg: String,
        type_name: String,
        prompt: String,
    },
    AskRephrase {
        prompt: String,
    },
    GiveUp {
        message: String,
    },
    Say {
        text: String,
    },
}

impl AgentAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            AgentAction::Execute { .. } => ActionKind::Execute,
            AgentAction::OfferOptions { .. } => ActionKind::OfferOptions,
            AgentAction::AskArg { .. } => ActionKind::AskArg,
            AgentAction::AskRephrase { .. } => ActionKind::AskRephrase,
            AgentAction::GiveUp { .. } => ActionKind::GiveUp,
            AgentAction::Say { .. } => ActionKind::Say,
        }
    }

    pub fn body(&self) -> TurnBody {
        match self {
            AgentAction::Execute { api_id, args } => TurnBody::ExecuteNotice {
                api_id: api_id.clone(),
                args: args.clone(),
                text: execute_text(api_id, args),
            },
            AgentAction::OfferOptions { options } => TurnBody::OptionList {
                intro: OPTIONS_INTRO.to_string(),
                options: options
                    .iter()
                    .map(|o| OptionItem {
                        index: o.index,
                        api_id: o.api_id.clone(),
                        text: o.text.clone(),
                    })
                    .collect(),
            },
            AgentAction::AskArg {
                arg,
                type_name,
                prompt,
            } => TurnBody::ArgPrompt {
                arg: arg.clone(),
                type_name: type_name.clone(),
                prompt: prompt.clone(),
            },
            AgentAction::AskRephrase { prompt } => TurnBody::text(prompt.clone()),
            AgentAction::GiveUp { message } => TurnBody::text(message.clone()),
            AgentAction::Say { text } => TurnBody::text(text.clone()),
        }
    }
}

fn execute_text(api_id: &str, args: &BTreeMap<String, String>) -> String {
    let rendered: Vec<String> = args.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("Done: {api_id}({}).", rendered.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub seq: u64,
    pub sender: Sender,
    pub body: TurnBody,
    /// Milliseconds on the caller's clock.
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub phase: Phase,
    /// First utterance of the command being resolved.
    pub pending_utterance: Option<Utterance>,
    /// Best binding per API against `pending_utterance`.
    pub original_bindings: BTreeMap<ApiId, Binding>,
    pub pending_api: Option<ApiId>,
    pub offered: Vec<OfferedOption>,
    pub collected_args: BTreeMap<String, String>,
    pub questions_asked: u32,
    pub rephrases_used: u32,
    pub transcript: Vec<TurnRecord>,
    pub last_executed_api: Option<ApiId>,
    /// Bucket of the most recently grounded utterance.
    pub last_bucket: Option<Bucket>,
    /// KB version seen by the last turn.
    pub kb_version: u64,
}

impl SessionState {
    pub fn context(&self) -> Context {
        Context::from_last(self.last_executed_api.as_deref())
    }

    pub fn is_closed(&self) -> bool {
        self.phase == Phase::Done
    }

    fn push(&mut self, sender: Sender, body: TurnBody, at: u64) {
        let seq = self.transcript.len() as u64 + 1;
        self.transcript.push(TurnRecord { seq, sender, body, at });
    }

    fn reset_command(&mut self) {
        self.phase = Phase::Idle;
        self.pending_utterance = None;
        self.original_bindings.clear();
        self.pending_api = None;
        self.offered.clear();
        self.collected_args.clear();
        self.questions_asked = 0;
        self.rephrases_used = 0;
    }
}

pub fn start_session(session_id: impl Into<String>, kb: &KnowledgeBase) -> SessionState {
    SessionState {
        session_id: session_id.into(),
        phase: Phase::Idle,
        pending_utterance: None,
        original_bindings: BTreeMap::new(),
        pending_api: None,
        offered: Vec::new(),
        collected_args: BTreeMap::new(),
        questions_asked: 0,
        rephrases_used: 0,
        transcript: Vec::new(),
        last_executed_api: None,
        last_bucket: None,
        kb_version: kb.version(),
    }
}

pub fn close_session(state: &mut SessionState) {
    state.reset_command();
    state.phase = Phase::Done;
}

/// Action kinds the policy may choose for a command in `bucket`. Once the
/// question budget is spent only `GIVE_UP` (or `EXECUTE` for a confident,
/// complete command) remains.
pub fn risk_gate(bucket: Bucket, questions_asked: u32, config: &Config) -> BTreeSet<ActionKind> {
    use ActionKind::*;
    let exhausted = questions_asked >= config.question_budget;
    let kinds: &[ActionKind] = match (bucket, exhausted) {
        (Bucket::Confident, false) => &[Execute, AskArg],
        (Bucket::Confident, true) => &[Execute, GiveUp],
        (Bucket::Uncertain, false) => &[OfferOptions, AskRephrase],
        (Bucket::Novel, false) => &[AskRephrase],
        (_, true) => &[GiveUp],
    };
    kinds.iter().copied().collect()
}

/// Everything one turn produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub state: SessionState,
    pub action: AgentAction,
    pub episode: Option<LearnEpisode>,
    /// Novelty of the utterance, when this turn grounded one.
    pub novelty: Option<NoveltyReport>,
}

pub type Relevance = dyn Fn(&Characterization) -> bool;

pub fn handle_turn(
    state: &SessionState,
    input: &str,
    kb: &KnowledgeBase,
    config: &Config,
    now: u64,
) -> Result<TurnOutcome, DialogueError> {
    handle_turn_with(state, input, kb, config, now, &|_| true)
}

/// `handle_turn` with a relevance check: a non-confident command the check
/// rejects is given up on at once.
pub fn handle_turn_with(
    state: &SessionState,
    input: &str,
    kb: &KnowledgeBase,
    config: &Config,
    now: u64,
    relevance: &Relevance,
) -> Result<TurnOutcome, DialogueError> {
    if state.is_closed() {
        return Err(DialogueError::SessionClosed(state.session_id.clone()));
    }
    if kb.is_empty() {
        return Err(DialogueError::EmptyKb);
    }
    config.thresholds().validate()?;

    let mut turn = Turn {
        s: state.clone(),
        kb,
        config,
        relevance,
        now,
        novelty: None,
        episode: None,
    };
    turn.s.kb_version = kb.version();

    let action = match turn.s.phase.clone() {
        Phase::AwaitOption => match parse_option_reply(input) {
            OptionReply::Pick(index) => {
                let count = turn.s.offered.len();
                if index == 0 || index > count {
                    return Err(DialogueError::InvalidOptionIndex { index, count });
                }
                turn.s.push(Sender::User, TurnBody::text(input), now);
                let opt = turn.s.offered[index - 1].clone();
                turn.choose(&opt.api_id, &opt.binding)
            }
            OptionReply::NoneOfThese => {
                turn.s.push(Sender::User, TurnBody::text(input), now);
                turn.s.offered.clear();
                turn.ask_rephrase()
            }
            OptionReply::Other => {
                turn.s.push(Sender::User, TurnBody::text(input), now);
                turn.s.offered.clear();
                turn.route(Utterance::new(input))?
            }
        },
        Phase::AwaitArg(arg) => {
            turn.s.push(Sender::User, TurnBody::text(input), now);
            turn.answer_arg(&arg, input)
        }
        Phase::AwaitRephrase => {
            turn.s.push(Sender::User, TurnBody::text(input), now);
            turn.route(Utterance::new(input))?
        }
        Phase::Idle => {
            turn.s.push(Sender::User, TurnBody::text(input), now);
            turn.begin(Utterance::new(input))?
        }
        Phase::Done => unreachable!("checked above"),
    };

    turn.s.push(Sender::Agent, action.body(), now);
    Ok(TurnOutcome {
        state: turn.s,
        action,
        episode: turn.episode,
        novelty: turn.novelty,
    })
}

enum OptionReply {
    Pick(usize),
    NoneOfThese,
    Other,
}

fn parse_option_reply(input: &str) -> OptionReply {
    let t = input.trim().to_ascii_lowercase();
    let t = t.trim_end_matches(['.', '!']);
    if matches!(t, "none" | "none of these" | "none of them" | "none of the above" | "no") {
        return OptionReply::NoneOfThese;
    }
    let digits = t
        .strip_prefix("option")
        .map(|r| r.trim_start_matches(['-', ' ']))
        .unwrap_or(t);
    match digits.parse::<usize>() {
        Ok(0) => OptionReply::NoneOfThese,
        Ok(i) => OptionReply::Pick(i),
        Err(_) => OptionReply::Other,
    }
}

struct Turn<'a> {
    s: SessionState,
    kb: &'a KnowledgeBase,
    config: &'a Config,
    relevance: &'a Relevance,
    now: u64,
    novelty: Option<NoveltyReport>,
    episode: Option<LearnEpisode>,
}

impl Turn<'_> {
    /// A fresh command.
    fn begin(&mut self, utt: Utterance) -> Result<AgentAction, DialogueError> {
        self.s.reset_command();
        let grounder = Grounder::new(self.kb, self.config.weighting);
        let grounding = grounder.ground(&utt)?;
        self.s.original_bindings = grounding
            .best_per_api
            .iter()
            .filter_map(|m| m.best.as_ref().map(|c| (m.api_id.clone(), c.binding.clone())))
            .collect();
        self.s.pending_utterance = Some(utt.clone());
        self.route(utt)
    }

    /// Grounds `utt` (the original command or a rephrasing of it) and picks
    /// the next action.
    fn route(&mut self, utt: Utterance) -> Result<AgentAction, DialogueError> {
        if self.s.pending_utterance.is_none() {
            return self.begin(utt);
        }
        let grounder = Grounder::new(self.kb, self.config.weighting);
        let grounding = grounder.ground(&utt)?;
        let report = novelty_score(&grounding, self.config.thresholds())?;
        let bucket = report.bucket;
        self.s.last_bucket = Some(bucket);
        self.novelty = Some(report);

        let allowed = risk_gate(bucket, self.s.questions_asked, self.config);
        let ch = characterize(&utt, &grounding, self.kb, self.config.k);
        if bucket != Bucket::Confident && !(self.relevance)(&ch) {
            return Ok(self.give_up());
        }

        match bucket {
            Bucket::Confident => {
                let top = grounding.top().expect("confident grounding has a candidate");
                let (api, binding) = (top.api_id.clone(), top.binding.clone());
                Ok(self.choose(&api, &binding))
            }
            Bucket::Uncertain => {
                let options: Vec<OfferedOption> = ch
                    .nearest_with_positive_score()
                    .enumerate()
                    .map(|(i, a)| OfferedOption {
                        index: i + 1,
                        api_id: a.api_id.clone(),
                        text: a.rendered.clone(),
                        binding: a.binding.clone(),
                    })
                    .collect();
                if options.len() >= 2 && allowed.contains(&ActionKind::OfferOptions) {
                    self.s.questions_asked += 1;
                    self.s.phase = Phase::AwaitOption;
                    self.s.offered = options.clone();
                    Ok(AgentAction::OfferOptions { options })
                } else {
                    Ok(self.ask_rephrase())
                }
            }
            Bucket::Novel => Ok(self.ask_rephrase()),
        }
    }

    /// Commits to `api_id`, seeding argument values from `binding`.
    fn choose(&mut self, api_id: &str, binding: &Binding) -> AgentAction {
        self.s.offered.clear();
        self.s.pending_api = Some(api_id.to_string());
        self.s.collected_args = binding
            .assignments
            .iter()
            .map(|(k, v)| (k.clone(), v.value.clone()))
            .collect();
        self.next_arg_or_execute()
    }

    fn api(&self) -> &ApiSpec {
        let id = self.s.pending_api.as_deref().expect("api chosen");
        self.kb.api(id).expect("chosen api exists")
    }

    fn next_arg_or_execute(&mut self) -> AgentAction {
        let missing = self
            .api()
            .args
            .iter()
            .find(|a| !self.s.collected_args.contains_key(&a.name))
            .cloned();
        match missing {
            None => self.execute(),
            Some(arg) => self.ask_arg(&arg.name, &arg.type_name, false),
        }
    }

    fn ask_arg(&mut self, arg: &str, type_name: &str, retry: bool) -> AgentAction {
        if self.s.questions_asked >= self.config.question_budget {
            return self.give_up();
        }
        self.s.questions_asked += 1;
        self.s.phase = Phase::AwaitArg(arg.to_string());
        let question = format!("Which {type_name} should I use for {arg}?");
        let prompt = if retry {
            format!("Sorry, I need a short {type_name}. {question}")
        } else {
            question
        };
        AgentAction::AskArg {
            arg: arg.to_string(),
            type_name: type_name.to_string(),
            prompt,
        }
    }

    fn answer_arg(&mut self, arg: &str, input: &str) -> AgentAction {
        let type_name = self
            .api()
            .arg(arg)
            .map(|a| a.type_name.clone())
            .unwrap_or_default();
        let tokens = normalize(input);
        if tokens.is_empty() || tokens.len() > MAX_PHRASE_TOKENS {
            return self.ask_arg(arg, &type_name, true);
        }
        let value = find_known_value(&tokens, self.kb, &type_name).unwrap_or_else(|| tokens.join(" "));
        self.s.collected_args.insert(arg.to_string(), value);
        self.next_arg_or_execute()
    }

    fn ask_rephrase(&mut self) -> AgentAction {
        if self.s.rephrases_used >= self.config.rephrase_budget
            || self.s.questions_asked >= self.config.question_budget
        {
            return self.give_up();
        }
        self.s.questions_asked += 1;
        self.s.rephrases_used += 1;
        self.s.phase = Phase::AwaitRephrase;
        AgentAction::AskRephrase {
            prompt: REPHRASE_PROMPT.to_string(),
        }
    }

    fn give_up(&mut self) -> AgentAction {
        self.s.reset_command();
        AgentAction::GiveUp {
            message: GIVE_UP_TEXT.to_string(),
        }
    }

    fn execute(&mut self) -> AgentAction {
        let api = self.api().clone();
        let args = self.s.collected_args.clone();
        if self.s.questions_asked > 0 {
            if let Some(original) = &self.s.pending_utterance {
                self.episode = Some(LearnEpisode::from_values(
                    &self.s.session_id,
                    original,
                    &api,
                    &args,
                    self.s.original_bindings.get(&api.api_id),
                    self.kb.version(),
                    self.s.context(),
                    self.now,
                ));
            }
        }
        self.s.reset_command();
        self.s.last_executed_api = Some(api.api_id.clone());
        AgentAction::Execute {
            api_id: api.api_id,
            args,
        }
    }
}

/// Leftmost-longest gazetteer phrase of `type_name` inside `tokens`.
fn find_known_value(tokens: &[String], kb: &KnowledgeBase, type_name: &str) -> Option<String> {
    let gaz = kb.gazetteer(type_name)?;
    (0..tokens.len()).find_map(|start| {
        (1..=MAX_PHRASE_TOKENS.min(tokens.len() - start))
            .rev()
            .map(|len| tokens[start..start + len].join(" "))
            .find(|p| gaz.contains(p))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::fixtures::lights;
    use crate::learner::{commit_learning, ArgSource};

    fn turn(s: &SessionState, input: &str, kb: &KnowledgeBase) -> TurnOutcome {
        handle_turn(s, input, kb, &Config::default(), 0).unwrap()
    }

    #[test]
    fn clarification_then_learning() {
        let mut kb = lights();
        let s = start_session("s1", &kb);
        let out = turn(&s, "Turn off the light in the kitchen", &kb);
        assert_eq!(out.novelty.as_ref().unwrap().bucket, Bucket::Uncertain);
        let AgentAction::OfferOptions { options } = &out.action else {
            panic!("expected options, got {:?}", out.action);
        };
        let lines = out.action.body().lines();
        assert_eq!(lines[0], OPTIONS_INTRO);
        assert_eq!(lines[1], "option-1. switch off the light in the kitchen, or");
        assert_eq!(lines[2], "option-2. switch on the light in the kitchen,");
        assert_eq!(lines[3], "option-3. change the color of the light?");
        assert_eq!(options.len(), 3);
        assert_eq!(out.state.phase, Phase::AwaitOption);

        let out = turn(&out.state, "1", &kb);
        let AgentAction::Execute { api_id, args } = &out.action else {
            panic!("expected execute");
        };
        assert_eq!(api_id, "SwitchOffLight");
        assert_eq!(args["X1"], "kitchen");
        assert_eq!(out.state.phase, Phase::Idle);
        assert_eq!(out.state.questions_asked, 0);
        let ep = out.episode.clone().expect("episode after a question");
        assert!(matches!(ep.resolved_args["X1"].source, ArgSource::FromUtterance { .. }));
        let outcome = commit_learning(&mut kb, &ep).unwrap();
        assert_eq!(outcome.template.as_deref(), Some("turn off the light in X1"));

        // Same command, new session: straight to execution.
        let s = start_session("s2", &kb);
        let out = turn(&s, "Turn off the light in the kitchen", &kb);
        assert_eq!(out.action.kind(), ActionKind::Execute);
        assert!(out.episode.is_none());
        assert_eq!(out.novelty.unwrap().aggregate, 0.0);
    }

    #[test]
    fn confident_with_missing_arg_asks() {
        let kb = lights();
        let s = start_session("s", &kb);
        let out = turn(&s, "switch on the light in", &kb);
        let AgentAction::AskArg { arg, type_name, .. } = &out.action else {
            panic!("expected ask, got {:?}", out.action);
        };
        assert_eq!((arg.as_str(), type_name.as_str()), ("X1", "location"));
        let out = turn(&out.state, "the hallway please", &kb);
        let AgentAction::Execute { args, .. } = &out.action else {
            panic!("expected execute");
        };
        assert_eq!(args["X1"], "the hallway please");
        let out2 = turn(&start_session("t", &kb), "switch on the light in", &kb);
        let out2 = turn(&out2.state, "in the bedroom", &kb);
        let AgentAction::Execute { args, .. } = &out2.action else {
            panic!("expected execute");
        };
        assert_eq!(args["X1"], "bedroom");
        let ep = out2.episode.unwrap();
        assert_eq!(ep.resolved_args["X1"].source, ArgSource::Elicited);
    }

    #[test]
    fn long_answer_is_reasked() {
        let kb = lights();
        let out = turn(&start_session("s", &kb), "switch on the light in", &kb);
        let out = turn(&out.state, "somewhere over the big rainbow", &kb);
        assert_eq!(out.action.kind(), ActionKind::AskArg);
        assert_eq!(out.state.questions_asked, 2);
    }

    #[test]
    fn novel_rephrase_budget() {
        let kb = lights();
        let mut s = start_session("s", &kb);
        let mut kinds = Vec::new();
        for _ in 0..3 {
            let out = turn(&s, "play some smooth jazz", &kb);
            kinds.push(out.action.kind());
            s = out.state;
        }
        assert_eq!(
            kinds,
            [ActionKind::AskRephrase, ActionKind::AskRephrase, ActionKind::GiveUp]
        );
        assert_eq!(s.phase, Phase::Idle);
        assert_eq!(s.questions_asked, 0);
    }

    #[test]
    fn rephrase_resolves_and_learns_original() {
        let kb = lights();
        let out = turn(&start_session("s", &kb), "kill the lamp kitchen", &kb);
        assert_eq!(out.action.kind(), ActionKind::AskRephrase);
        let out = turn(&out.state, "switch off the light in the kitchen", &kb);
        assert_eq!(out.action.kind(), ActionKind::Execute);
        let ep = out.episode.unwrap();
        assert_eq!(ep.original_utterance.raw, "kill the lamp kitchen");
        assert_eq!(ep.resolved_api, "SwitchOffLight");
    }

    #[test]
    fn none_of_these_and_invalid_index() {
        let kb = lights();
        let out = turn(&start_session("s", &kb), "Turn off the light in the kitchen", &kb);
        let err = handle_turn(&out.state, "7", &kb, &Config::default(), 0).unwrap_err();
        assert_eq!(err, DialogueError::InvalidOptionIndex { index: 7, count: 3 });
        let out = turn(&out.state, "none", &kb);
        assert_eq!(out.action.kind(), ActionKind::AskRephrase);
        assert_eq!(out.state.questions_asked, 2);
    }

    #[test]
    fn closed_session_rejects_turns() {
        let kb = lights();
        let mut s = start_session("s", &kb);
        close_session(&mut s);
        assert!(matches!(
            handle_turn(&s, "hi", &kb, &Config::default(), 0),
            Err(DialogueError::SessionClosed(_))
        ));
    }

    #[test]
    fn irrelevant_gives_up() {
        let kb = lights();
        let s = start_session("s", &kb);
        let out = handle_turn_with(&s, "play some jazz", &kb, &Config::default(), 0, &|_| false).unwrap();
        assert_eq!(out.action.kind(), ActionKind::GiveUp);
    }

    #[test]
    fn gate_table() {
        use ActionKind::*;
        let c = Config::default();
        let set = |k: &[ActionKind]| k.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(risk_gate(Bucket::Confident, 0, &c), set(&[Execute, AskArg]));
        assert_eq!(risk_gate(Bucket::Uncertain, 4, &c), set(&[GiveUp]));
        assert_eq!(risk_gate(Bucket::Novel, 0, &c), set(&[AskRephrase]));
        assert!(!risk_gate(Bucket::Novel, 0, &c).contains(&OfferOptions));
    }

    #[test]
    fn transcript_is_sequenced() {
        let kb = lights();
        let out = turn(&start_session("s", &kb), "Turn off the light in the kitchen", &kb);
        let out = turn(&out.state, "option-2", &kb);
        let seqs: Vec<u64> = out.state.transcript.iter().map(|t| t.seq).collect();
        assert_eq!(seqs, [1, 2, 3, 4]);
        assert_eq!(out.state.last_executed_api.as_deref(), Some("SwitchOnLight"));
    }
}
