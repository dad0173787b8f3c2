//! Natural-language command interface that grounds user commands to API
//! actions through seed-command templates, treats grounding failure as
//! novelty, asks the user to resolve it and learns new seed commands from the
//! answers.

pub mod agent;
pub mod characterize;
pub mod config;
pub mod dialogue;
pub mod eval;
pub mod grounding;
pub mod kb;
pub mod learner;
pub mod novelty;
pub mod similarity;
pub mod text;
pub mod wire;

pub use kb::{
    load_kb, parse_spec, save_kb, ApiId, ApiSpec, ArgSpec, Context, KbError, KbSummary,
    KnowledgeBase, Provenance, SeedCommand, SpecError, Token, TypeGazetteer,
};
pub use agent::{Engine, TurnReport};
pub use config::Config;
pub use dialogue::{handle_turn, start_session, AgentAction, SessionState};
pub use text::normalize;
pub use wire::{Sender, TurnBody, WireTurn};
