//! Characterization of a command: which spans were bound, which words the
//! best seed command explains, which it does not, and the closest known
//! actions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::grounding::{Binding, GroundingResult, Span, Utterance};
use crate::kb::{ApiId, ApiSpec, KnowledgeBase, Token};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundSpan {
    pub arg: String,
    pub type_name: String,
    pub value: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionedToken {
    pub position: usize,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestAction {
    pub api_id: ApiId,
    pub score: f64,
    /// The API description with bound values substituted.
    pub rendered: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub utterance: Utterance,
    pub bound_spans: Vec<BoundSpan>,
    /// Residual tokens that occur among the best seed command's words.
    pub matched_tokens: Vec<PositionedToken>,
    /// Residual tokens the best seed command does not explain.
    pub ungrounded_tokens: Vec<PositionedToken>,
    pub nearest_actions: Vec<NearestAction>,
    pub k: usize,
}

impl Characterization {
    pub fn nearest_with_positive_score(&self) -> impl Iterator<Item = &NearestAction> {
        self.nearest_actions.iter().filter(|a| a.score > 0.0)
    }
}

/// Renders an API description, replacing argument-name tokens with bound
/// values. Unbound arguments show as `<type>`.
pub fn render_description(api: &ApiSpec, binding: &Binding) -> String {
    api.description
        .split_whitespace()
        .map(|word| {
            let core = word.trim_matches(|c: char| c.is_ascii_punctuation() && c != '_');
            match api.arg(core) {
                Some(arg) => {
                    let value = binding
                        .get(&arg.name)
                        .map(|v| v.value.clone())
                        .unwrap_or_else(|| format!("<{}>", arg.type_name));
                    word.replacen(core, &value, 1)
                }
                None => word.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn characterize(
    utterance: &Utterance,
    grounding: &GroundingResult,
    kb: &KnowledgeBase,
    k: usize,
) -> Characterization {
    let k = k.max(1);
    let top = grounding.top();

    let mut bound_spans = Vec::new();
    let mut sc_words: BTreeSet<&str> = BTreeSet::new();
    if let Some(c) = top {
        let api = kb.api(&c.api_id);
        for (arg, slot) in &c.binding.assignments {
            bound_spans.push(BoundSpan {
                arg: arg.clone(),
                type_name: api
                    .and_then(|a| a.arg(arg))
                    .map(|a| a.type_name.clone())
                    .unwrap_or_default(),
                value: slot.value.clone(),
                span: slot.span,
            });
        }
        bound_spans.sort_by_key(|b| b.span);
        if let Some(sc) = kb
            .seed_commands_for(&c.api_id)
            .iter()
            .find(|sc| sc.sc_id == c.sc_id)
        {
            sc_words.extend(sc.tokens.iter().filter_map(Token::as_word));
        }
    }

    let mut matched_tokens = Vec::new();
    let mut ungrounded_tokens = Vec::new();
    for (position, token) in utterance.tokens.iter().enumerate() {
        if bound_spans.iter().any(|b| b.span.contains(position)) {
            continue;
        }
        let entry = PositionedToken {
            position,
            token: token.clone(),
        };
        if sc_words.contains(token.as_str()) {
            matched_tokens.push(entry);
        } else {
            ungrounded_tokens.push(entry);
        }
    }

    let nearest_actions = grounding
        .best_per_api
        .iter()
        .take(k)
        .filter_map(|m| {
            let api = kb.api(&m.api_id)?;
            let binding = m.best.as_ref().map(|c| c.binding.clone()).unwrap_or_default();
            Some(NearestAction {
                api_id: m.api_id.clone(),
                score: m.score,
                rendered: render_description(api, &binding),
                binding,
            })
        })
        .collect();

    Characterization {
        utterance: utterance.clone(),
        bound_spans,
        matched_tokens,
        ungrounded_tokens,
        nearest_actions,
        k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::ground;
    use crate::kb::fixtures::lights;

    fn run(text: &str) -> Characterization {
        let kb = lights();
        let utt = Utterance::new(text);
        let g = ground(&utt, &kb).unwrap();
        characterize(&utt, &g, &kb, 3)
    }

    fn partition_ok(c: &Characterization) -> bool {
        let mut seen: Vec<usize> = c
            .bound_spans
            .iter()
            .flat_map(|b| b.span.start..=b.span.end)
            .chain(c.matched_tokens.iter().map(|t| t.position))
            .chain(c.ungrounded_tokens.iter().map(|t| t.position))
            .collect();
        seen.sort_unstable();
        seen == (0..c.utterance.len()).collect::<Vec<_>>()
    }

    #[test]
    fn unseen_paraphrase() {
        let c = run("Turn off the light in the kitchen");
        assert_eq!(c.bound_spans.len(), 1);
        assert_eq!(c.bound_spans[0].arg, "X1");
        assert_eq!(c.bound_spans[0].type_name, "location");
        assert_eq!(c.bound_spans[0].value, "kitchen");
        assert!(c.ungrounded_tokens.iter().any(|t| t.token == "turn"));
        let nearest: Vec<&str> = c.nearest_actions.iter().map(|a| a.api_id.as_str()).collect();
        assert_eq!(nearest, ["SwitchOffLight", "SwitchOnLight", "ChangeLightColor"]);
        let rendered: Vec<&str> = c.nearest_actions.iter().map(|a| a.rendered.as_str()).collect();
        assert_eq!(
            rendered,
            [
                "switch off the light in the kitchen",
                "switch on the light in the kitchen",
                "change the color of the light"
            ]
        );
        assert!(partition_ok(&c));
    }

    #[test]
    fn exact_match_has_nothing_ungrounded() {
        let c = run("switch on the light in bedroom");
        assert!(c.ungrounded_tokens.is_empty());
        assert_eq!(c.nearest_actions[0].api_id, "SwitchOnLight");
        assert!(partition_ok(&c));
    }

    #[test]
    fn out_of_vocabulary() {
        let c = run("play some smooth jazz");
        assert_eq!(c.ungrounded_tokens.len(), 4);
        assert!(c.bound_spans.is_empty());
        assert!(c.nearest_actions.iter().all(|a| a.score == 0.0));
        assert!(partition_ok(&c));
    }

    #[test]
    fn unbound_args_render_as_type() {
        let kb = lights();
        let api = kb.api("SwitchOnLight").unwrap();
        assert_eq!(
            render_description(api, &Binding::default()),
            "switch on the light in the <location>"
        );
    }
}
