//! Turns resolved dialogue episodes into new seed commands and gazetteer
//! values.
//!
//! Every commit is additive and atomic: it works on a copy of the knowledge
//! base and swaps it in with a single version bump only when every step
//! succeeded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{enumerate_bindings, is_determiner, Binding, Span, Utterance};
use crate::kb::{ApiId, ApiSpec, Context, KbError, KnowledgeBase, Provenance, SeedCommand, Token};
use crate::text::normalize_phrase;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnError {
    #[error("template would contain no words")]
    DegenerateTemplate,
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error("new api `{0}` needs an explicit confirmation")]
    NotConfirmed(String),
    #[error(transparent)]
    Kb(#[from] KbError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArgSource {
    FromUtterance { span: Span },
    Elicited,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedArg {
    pub value: String,
    pub source: ArgSource,
}

/// Ground truth harvested from one resolved clarification dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnEpisode {
    pub session_id: String,
    pub original_utterance: Utterance,
    pub resolved_api: ApiId,
    pub resolved_args: BTreeMap<String, ResolvedArg>,
    pub kb_version: u64,
    /// Action executed before this one in the session.
    pub context: Context,
    pub timestamp: u64,
}

impl LearnEpisode {
    /// Builds an episode from final argument values. An argument counts as
    /// coming from the utterance when its value occurs there: the span found
    /// by grounding is used if it carries the same value, otherwise the first
    /// free occurrence.
    #[allow(clippy::too_many_arguments)]
    pub fn from_values(
        session_id: &str,
        original: &Utterance,
        api: &ApiSpec,
        values: &BTreeMap<String, String>,
        grounded: Option<&Binding>,
        kb_version: u64,
        context: Context,
        timestamp: u64,
    ) -> Self {
        let mut taken: Vec<Span> = Vec::new();
        let mut resolved_args = BTreeMap::new();
        for arg in &api.args {
            let Some(value) = values.get(&arg.name) else {
                continue;
            };
            let value = normalize_phrase(value);
            let from_grounding = grounded
                .and_then(|b| b.get(&arg.name))
                .filter(|slot| slot.value == value)
                .map(|slot| slot.span)
                .filter(|span| !taken.iter().any(|t| t.overlaps(span)));
            let span = from_grounding.or_else(|| find_phrase(original, &value, &taken));
            let source = match span {
                Some(span) => {
                    taken.push(span);
                    ArgSource::FromUtterance { span }
                }
                None => ArgSource::Elicited,
            };
            resolved_args.insert(arg.name.clone(), ResolvedArg { value, source });
        }
        LearnEpisode {
            session_id: session_id.to_string(),
            original_utterance: original.clone(),
            resolved_api: api.api_id.clone(),
            resolved_args,
            kb_version,
            context,
            timestamp,
        }
    }

    fn validate<'kb>(&self, kb: &'kb KnowledgeBase) -> Result<&'kb ApiSpec, LearnError> {
        let api = kb
            .api(&self.resolved_api)
            .ok_or_else(|| KbError::UnknownApi(self.resolved_api.clone()))?;
        if api.args.len() != self.resolved_args.len()
            || api.args.iter().any(|a| !self.resolved_args.contains_key(&a.name))
        {
            return Err(LearnError::InvalidEpisode(format!(
                "arguments do not match the signature of `{}`",
                api.api_id
            )));
        }
        let mut spans: Vec<Span> = Vec::new();
        for (name, arg) in &self.resolved_args {
            if arg.value.is_empty() {
                return Err(LearnError::InvalidEpisode(format!("empty value for `{name}`")));
            }
            if let ArgSource::FromUtterance { span } = arg.source {
                if span.end >= self.original_utterance.len()
                    || !span_holds(&self.original_utterance, span, &arg.value)
                {
                    return Err(LearnError::InvalidEpisode(format!(
                        "span of `{name}` does not hold `{}`",
                        arg.value
                    )));
                }
                if spans.iter().any(|s| s.overlaps(&span)) {
                    return Err(LearnError::InvalidEpisode("overlapping spans".into()));
                }
                spans.push(span);
            }
        }
        Ok(api)
    }
}

/// The span holds the value itself or the value behind a determiner.
fn span_holds(utt: &Utterance, span: Span, value: &str) -> bool {
    utt.phrase(span) == value
        || (span.start < span.end
            && is_determiner(&utt.tokens[span.start])
            && utt.phrase(Span::new(span.start + 1, span.end)) == value)
}

/// First free occurrence of `phrase`, widened over a preceding determiner.
fn find_phrase(utt: &Utterance, phrase: &str, taken: &[Span]) -> Option<Span> {
    let len = phrase.split(' ').count();
    if len == 0 || len > utt.len() {
        return None;
    }
    let free = |span: &Span| !taken.iter().any(|t| t.overlaps(span));
    let span = (0..=utt.len() - len)
        .map(|start| Span::new(start, start + len - 1))
        .find(|span| free(span) && utt.phrase(*span) == phrase)?;
    if span.start > 0 && is_determiner(&utt.tokens[span.start - 1]) {
        let wide = Span::new(span.start - 1, span.end);
        if free(&wide) {
            return Some(wide);
        }
    }
    Some(span)
}

/// The utterance as a template: every argument span found in the utterance
/// becomes its variable. Arguments only obtained by asking are left out.
pub fn induce_seed_command(episode: &LearnEpisode) -> Result<SeedCommand, LearnError> {
    let mut spans: Vec<(Span, &str)> = episode
        .resolved_args
        .iter()
        .filter_map(|(name, arg)| match arg.source {
            ArgSource::FromUtterance { span } => Some((span, name.as_str())),
            ArgSource::Elicited => None,
        })
        .collect();
    spans.sort();

    let tokens = &episode.original_utterance.tokens;
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    let mut next = spans.iter().peekable();
    while i < tokens.len() {
        match next.peek() {
            Some((span, name)) if span.start == i => {
                out.push(Token::Var((*name).to_string()));
                i = span.end + 1;
                next.next();
            }
            _ => {
                out.push(Token::Word(tokens[i].clone()));
                i += 1;
            }
        }
    }
    if !out.iter().any(|t| matches!(t, Token::Word(_))) {
        return Err(LearnError::DegenerateTemplate);
    }
    Ok(SeedCommand::from_tokens(
        &episode.resolved_api,
        out,
        Provenance::Learned {
            session_id: episode.session_id.clone(),
            timestamp: episode.timestamp,
        },
    ))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitOutcome {
    /// Id of the new seed command; `None` when an identical one existed or
    /// the template was degenerate.
    pub added_sc: Option<String>,
    pub template: Option<String>,
    pub degenerate: bool,
    /// (type, phrase) pairs added to gazetteers.
    pub added_values: Vec<(String, String)>,
}

/// Applies one episode: the induced seed command, any argument values the
/// gazetteers lack and the usage bigram. One version bump for the lot.
pub fn commit_learning(kb: &mut KnowledgeBase, episode: &LearnEpisode) -> Result<CommitOutcome, LearnError> {
    if episode.kb_version > kb.version() {
        return Err(KbError::VersionConflict {
            episode: episode.kb_version,
            current: kb.version(),
        }
        .into());
    }
    let api = episode.validate(kb)?.clone();
    let mut next = kb.clone();
    let mut outcome = CommitOutcome::default();

    match induce_seed_command(episode) {
        Ok(sc) => {
            outcome.template = Some(sc.template());
            if next.insert_seed_command(sc)? {
                outcome.added_sc = next
                    .seed_commands_for(&api.api_id)
                    .last()
                    .map(|sc| sc.sc_id.clone());
            }
        }
        Err(LearnError::DegenerateTemplate) => outcome.degenerate = true,
        Err(e) => return Err(e),
    }

    for arg in &api.args {
        let value = &episode.resolved_args[&arg.name].value;
        if next.insert_gazetteer_value(&arg.type_name, value)? {
            outcome.added_values.push((arg.type_name.clone(), value.clone()));
        }
    }
    next.insert_usage(&episode.context, &api.api_id)?;
    next.bump_version();
    next.validate()?;
    *kb = next;
    Ok(outcome)
}

/// Teaches a cluster of commands that all mean `api_id`. Each command's
/// template uses whatever argument values it mentions from the gazetteers.
/// Commands that would give degenerate templates are skipped.
pub fn learn_cluster(
    kb: &mut KnowledgeBase,
    cluster: &[String],
    api_id: &str,
    session_id: &str,
    timestamp: u64,
) -> Result<Vec<String>, LearnError> {
    let api = kb
        .api(api_id)
        .cloned()
        .ok_or_else(|| KbError::UnknownApi(api_id.to_string()))?;
    let probe = SeedCommand::from_tokens(
        api_id,
        api.args.iter().map(|a| Token::Var(a.name.clone())).collect(),
        Provenance::Authored,
    );
    let mut next = kb.clone();
    let mut added = Vec::new();
    for text in cluster {
        let utt = Utterance::new(text.as_str());
        let binding = enumerate_bindings(&utt, &probe, kb)
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
            .unwrap_or_default();
        let episode = LearnEpisode {
            session_id: session_id.to_string(),
            original_utterance: utt,
            resolved_api: api_id.to_string(),
            resolved_args: binding
                .assignments
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        ResolvedArg {
                            value: v.value.clone(),
                            source: ArgSource::FromUtterance { span: v.span },
                        },
                    )
                })
                .collect(),
            kb_version: kb.version(),
            context: Context::Start,
            timestamp,
        };
        match induce_seed_command(&episode) {
            Ok(sc) => {
                if next.insert_seed_command(sc)? {
                    added.push(next.seed_commands_for(api_id).last().unwrap().sc_id.clone());
                }
            }
            Err(LearnError::DegenerateTemplate) => continue,
            Err(e) => return Err(e),
        }
    }
    if !added.is_empty() {
        next.bump_version();
        *kb = next;
    }
    Ok(added)
}

/// Request to create an API at runtime for a cluster of commands no known
/// action covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewApiRequest {
    pub spec: ApiSpec,
    pub confirmed: bool,
}

pub fn register_new_api(kb: &mut KnowledgeBase, request: NewApiRequest) -> Result<(), LearnError> {
    if !request.confirmed {
        return Err(LearnError::NotConfirmed(request.spec.api_id));
    }
    kb.add_api(request.spec)?;
    Ok(())
}
