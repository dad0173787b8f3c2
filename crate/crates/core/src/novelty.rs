//! Novelty scoring over grounding results, contextual surprise from usage
//! bigrams, and clustering of accumulated novel commands.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{GroundingResult, Utterance};
use crate::kb::{ApiId, Context, KnowledgeBase, MAX_PHRASE_TOKENS};
use crate::similarity::{dice, TokenWeights, Weighting};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoveltyError {
    #[error("knowledge base has no apis")]
    EmptyKb,
    #[error("unknown api `{0}`")]
    UnknownApi(String),
    #[error("invalid thresholds: need 0 <= 1 - theta_exec ({theta_exec}) < gamma ({gamma}) <= 1")]
    InvalidThresholds { theta_exec: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Bucket {
    Confident,
    Uncertain,
    Novel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A command executes without questions when its best score is at least
    /// this.
    pub theta_exec: f64,
    /// Aggregate novelty at or above this marks the command novel.
    pub gamma: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta_exec: 0.8,
            gamma: 0.65,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), NoveltyError> {
        let floor = 1.0 - self.theta_exec;
        let ok = (0.0..=1.0).contains(&self.theta_exec)
            && floor < self.gamma
            && self.gamma <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(NoveltyError::InvalidThresholds {
                theta_exec: self.theta_exec,
                gamma: self.gamma,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyReport {
    /// Novelty of the command with respect to each known API: one minus the
    /// API's best grounding score.
    pub per_class: BTreeMap<ApiId, f64>,
    /// Minimum over `per_class`.
    pub aggregate: f64,
    pub gamma: f64,
    pub bucket: Bucket,
}

impl NoveltyReport {
    pub fn is_novel(&self) -> bool {
        self.aggregate >= self.gamma
    }
}

/// Degree of novelty of an instance with respect to all known classes: the
/// minimum of its per-class novelty scores. `None` when there are no classes.
pub fn aggregate_novelty(per_class: &[f64]) -> Option<f64> {
    per_class.iter().copied().reduce(f64::min)
}

pub fn confidence_bucket(aggregate: f64, theta_exec: f64, gamma: f64) -> Result<Bucket, NoveltyError> {
    Thresholds { theta_exec, gamma }.validate()?;
    Ok(bucket_unchecked(aggregate, theta_exec, gamma))
}

fn bucket_unchecked(aggregate: f64, theta_exec: f64, gamma: f64) -> Bucket {
    if aggregate >= gamma {
        Bucket::Novel
    } else if aggregate <= 1.0 - theta_exec {
        Bucket::Confident
    } else {
        Bucket::Uncertain
    }
}

pub fn novelty_score(grounding: &GroundingResult, thresholds: Thresholds) -> Result<NoveltyReport, NoveltyError> {
    thresholds.validate()?;
    if grounding.best_per_api.is_empty() {
        return Err(NoveltyError::EmptyKb);
    }
    let per_class: BTreeMap<ApiId, f64> = grounding
        .best_per_api
        .iter()
        .map(|m| (m.api_id.clone(), 1.0 - m.score))
        .collect();
    let scores: Vec<f64> = per_class.values().copied().collect();
    let aggregate = aggregate_novelty(&scores).ok_or(NoveltyError::EmptyKb)?;
    Ok(NoveltyReport {
        bucket: bucket_unchecked(aggregate, thresholds.theta_exec, thresholds.gamma),
        per_class,
        aggregate,
        gamma: thresholds.gamma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpriseReport {
    pub api_id: ApiId,
    pub context: Context,
    /// Add-one smoothed `P(api | context)`.
    pub probability: f64,
    pub surprising: bool,
}

/// How unexpected `api_id` is right after `context`, from usage bigrams.
/// Nothing counts as surprising until the context has `min_support`
/// observations.
pub fn contextual_surprise(
    kb: &KnowledgeBase,
    context: &Context,
    api_id: &str,
    tau: f64,
    min_support: u64,
) -> Result<SurpriseReport, NoveltyError> {
    if kb.api(api_id).is_none() {
        return Err(NoveltyError::UnknownApi(api_id.to_string()));
    }
    let total = kb.context_total(context);
    let count = kb.usage_count(context, api_id);
    let probability = (count as f64 + 1.0) / (total as f64 + kb.api_count() as f64);
    Ok(SurpriseReport {
        api_id: api_id.to_string(),
        context: context.clone(),
        probability,
        surprising: probability < tau && total >= min_support,
    })
}

/// Normalized tokens with every gazetteer phrase replaced by a `<type>`
/// placeholder. Leftmost-longest matching; when several types share a phrase
/// the first type name wins.
pub fn mask_slots(utt: &Utterance, kb: &KnowledgeBase) -> Vec<String> {
    let tokens = &utt.tokens;
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    'outer: while i < tokens.len() {
        for len in (1..=MAX_PHRASE_TOKENS.min(tokens.len() - i)).rev() {
            let phrase = tokens[i..i + len].join(" ");
            if let Some(gaz) = kb.gazetteers().find(|g| g.contains(&phrase)) {
                out.push(format!("<{}>", gaz.type_name));
                i += len;
                continue 'outer;
            }
        }
        out.push(tokens[i].clone());
        i += 1;
    }
    out
}

/// Groups novel commands: two commands are linked when the weighted Dice of
/// their slot-masked tokens is at least `delta`, and clusters are the
/// connected components of that graph. Members are sorted and clusters are
/// ordered by their first member.
pub fn cluster_novel_commands(
    utterances: &[String],
    kb: &KnowledgeBase,
    delta: f64,
    weighting: Weighting,
) -> Vec<Vec<String>> {
    let mut items: Vec<&String> = utterances.iter().collect();
    items.sort();
    let weights = TokenWeights::from_kb(kb, weighting);
    let masked: Vec<Vec<String>> = items
        .iter()
        .map(|u| mask_slots(&Utterance::new(u.as_str()), kb))
        .collect();

    let mut parent: Vec<usize> = (0..items.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            if dice(&masked[i], &masked[j], &weights) >= delta {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push((*item).clone());
    }
    // roots are the smallest index of each component, so map order is
    // first-member order
    groups.into_values().collect()
}
