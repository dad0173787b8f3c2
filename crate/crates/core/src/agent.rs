//! The engine: one KB, one config and the single writer that applies what
//! dialogues learn. The REPL, the HTTP service and the evaluation harness
//! all drive sessions through `Engine::turn`.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::characterize::Characterization;
use crate::config::Config;
use crate::dialogue::{handle_turn_with, start_session, AgentAction, DialogueError, SessionState};
use crate::kb::KnowledgeBase;
use crate::learner::{commit_learning, CommitOutcome, LearnEpisode, LearnError};
use crate::novelty::{contextual_surprise, NoveltyError, NoveltyReport, SurpriseReport};

pub fn system_now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnReport {
    pub action: AgentAction,
    pub episode: Option<LearnEpisode>,
    pub commit: Option<CommitOutcome>,
    /// Why the episode could not be applied, if it could not.
    pub learn_error: Option<String>,
    pub novelty: Option<NoveltyReport>,
    /// How expected the executed API was after the previous one.
    pub surprise: Option<SurpriseReport>,
    /// KB version after the turn.
    pub kb_version: u64,
}

type RelevanceHook = dyn Fn(&Characterization) -> bool + Send + Sync;

pub struct Engine {
    kb: RwLock<Arc<KnowledgeBase>>,
    config: Config,
    relevance: Box<RelevanceHook>,
    sessions_started: AtomicU64,
    dirty: AtomicBool,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("kb_version", &self.snapshot().version())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(kb: KnowledgeBase, config: Config) -> Result<Self, NoveltyError> {
        config.thresholds().validate()?;
        Ok(Engine {
            kb: RwLock::new(Arc::new(kb)),
            config,
            relevance: Box::new(|_| true),
            sessions_started: AtomicU64::new(0),
            dirty: AtomicBool::new(false),
        })
    }

    pub fn with_relevance(mut self, hook: impl Fn(&Characterization) -> bool + Send + Sync + 'static) -> Self {
        self.relevance = Box::new(hook);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Current KB. Readers keep their snapshot even if a commit lands.
    pub fn snapshot(&self) -> Arc<KnowledgeBase> {
        self.kb.read().expect("kb lock poisoned").clone()
    }

    /// Starts a session with a generated id (`s-000001`, ...).
    pub fn new_session(&self) -> SessionState {
        let n = self.sessions_started.fetch_add(1, Ordering::Relaxed) + 1;
        start_session(format!("s-{n:06}"), &self.snapshot())
    }

    pub fn turn(&self, state: &mut SessionState, input: &str, now: u64) -> Result<TurnReport, DialogueError> {
        let kb = self.snapshot();
        let context = state.context();
        let out = handle_turn_with(state, input, &kb, &self.config, now, self.relevance.as_ref())?;
        *state = out.state;

        let mut report = TurnReport {
            action: out.action,
            episode: out.episode,
            commit: None,
            learn_error: None,
            novelty: out.novelty,
            surprise: None,
            kb_version: kb.version(),
        };
        if let AgentAction::Execute { api_id, .. } = &report.action {
            report.surprise =
                contextual_surprise(&kb, &context, api_id, self.config.tau, self.config.min_support).ok();
            let mut guard = self.kb.write().expect("kb lock poisoned");
            let next = Arc::make_mut(&mut guard);
            let mut usage_done = false;
            if let Some(ep) = &report.episode {
                match commit_learning(next, ep) {
                    Ok(outcome) => {
                        report.commit = Some(outcome);
                        usage_done = true;
                    }
                    Err(e) => report.learn_error = Some(e.to_string()),
                }
            }
            if !usage_done {
                // An executed API always exists in the KB it was grounded
                // against, and the KB only grows.
                next.record_usage(&context, api_id).expect("executed api is known");
            }
            report.kb_version = next.version();
            state.kb_version = next.version();
            self.dirty.store(true, Ordering::Release);
        }
        Ok(report)
    }

    /// Applies an episode produced elsewhere (e.g. replayed from a log).
    pub fn commit(&self, episode: &LearnEpisode) -> Result<CommitOutcome, LearnError> {
        let mut guard = self.kb.write().expect("kb lock poisoned");
        let out = commit_learning(Arc::make_mut(&mut guard), episode)?;
        self.dirty.store(true, Ordering::Release);
        Ok(out)
    }

    /// Applies an arbitrary mutation atomically: `f` works on a copy that
    /// replaces the KB only if `f` succeeds.
    pub fn update<T, E>(&self, f: impl FnOnce(&mut KnowledgeBase) -> Result<T, E>) -> Result<T, E> {
        let mut guard = self.kb.write().expect("kb lock poisoned");
        let mut next = (**guard).clone();
        let out = f(&mut next)?;
        *guard = Arc::new(next);
        self.dirty.store(true, Ordering::Release);
        Ok(out)
    }

    /// True if the KB changed since the last call.
    pub fn take_dirty(&self) -> bool {
        self.dirty.swap(false, Ordering::AcqRel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::ActionKind;
    use crate::kb::fixtures::lights;
    use crate::kb::Context;

    #[test]
    fn learning_goes_through_the_writer() {
        let engine = Engine::new(lights(), Config::default()).unwrap();
        let v0 = engine.snapshot().version();
        let mut s = engine.new_session();
        assert_eq!(s.session_id, "s-000001");
        let r = engine.turn(&mut s, "Turn off the light in the kitchen", 1).unwrap();
        assert_eq!(r.action.kind(), ActionKind::OfferOptions);
        assert_eq!(r.kb_version, v0);
        assert!(!engine.take_dirty());
        let r = engine.turn(&mut s, "1", 2).unwrap();
        assert_eq!(r.commit.unwrap().template.as_deref(), Some("turn off the light in X1"));
        assert_eq!(r.kb_version, v0 + 1);
        assert!(engine.take_dirty());
        let kb = engine.snapshot();
        assert_eq!(kb.usage_count(&Context::Start, "SwitchOffLight"), 1);

        let mut s2 = engine.new_session();
        let r = engine.turn(&mut s2, "turn off the light in the kitchen", 3).unwrap();
        assert_eq!(r.action.kind(), ActionKind::Execute);
        assert!(r.commit.is_none());
        assert_eq!(engine.snapshot().usage_count(&Context::Api("SwitchOffLight".into()), "SwitchOffLight"), 0);
        assert_eq!(engine.snapshot().usage_count(&Context::Start, "SwitchOffLight"), 2);
    }

    #[test]
    fn old_snapshots_are_stable() {
        let engine = Engine::new(lights(), Config::default()).unwrap();
        let before = engine.snapshot();
        let mut s = engine.new_session();
        engine.turn(&mut s, "switch on the light in the bedroom", 0).unwrap();
        assert_eq!(before.version() + 1, engine.snapshot().version());
        assert_eq!(before.usage().count(), 0);
    }

    #[test]
    fn surprise_is_reported_on_execute() {
        let engine = Engine::new(lights(), Config::default()).unwrap();
        let mut s = engine.new_session();
        let r = engine.turn(&mut s, "switch on the light in the bedroom", 0).unwrap();
        let sr = r.surprise.unwrap();
        assert_eq!(sr.context, Context::Start);
        assert!(!sr.surprising);
    }

    #[test]
    fn rejects_bad_thresholds() {
        let cfg = Config {
            theta_exec: 0.2,
            gamma: 0.5,
            ..Config::default()
        };
        assert!(Engine::new(lights(), cfg).is_err());
    }
}
