//! Engine configuration. Every field has a default, so a config file only
//! needs the values it overrides.

use serde::{Deserialize, Serialize};

use crate::novelty::Thresholds;
use crate::similarity::Weighting;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Best grounding score at which a command runs without questions.
    pub theta_exec: f64,
    /// Aggregate novelty at which a command is treated as novel.
    pub gamma: f64,
    /// Contextual surprise probability threshold.
    pub tau: f64,
    /// Observations of a context needed before surprise is reported.
    pub min_support: u64,
    /// Similarity threshold for clustering novel commands.
    pub delta: f64,
    /// Questions of any kind allowed per command.
    pub question_budget: u32,
    /// Rephrase requests allowed per command.
    pub rephrase_budget: u32,
    /// Options offered when the command is uncertain.
    pub k: usize,
    pub weighting: Weighting,
    /// Seconds between KB autosaves in the service; 0 disables.
    pub autosave_secs: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            theta_exec: 0.8,
            gamma: 0.65,
            tau: 0.05,
            min_support: 20,
            delta: 0.6,
            question_budget: 4,
            rephrase_budget: 2,
            k: 3,
            weighting: Weighting::Idf,
            autosave_secs: 0,
        }
    }
}

impl Config {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            theta_exec: self.theta_exec,
            gamma: self.gamma,
        }
    }
}
