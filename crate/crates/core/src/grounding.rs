//! Command grounding: binds typed slots in a user command, scores what is left
//! against every seed command and ranks the results.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{ApiId, KnowledgeBase, SeedCommand, MAX_PHRASE_TOKENS};
use crate::similarity::{dice_merge, dice_sorted, TokenWeights, Weighting};
use crate::text::normalize;

/// Upper bound on the score of a candidate that leaves some template variable
/// unbound. Only a complete binding can reach 1.0.
pub const INCOMPLETE_BINDING_CAP: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundingError {
    #[error("knowledge base has no apis")]
    EmptyKb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl Utterance {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = normalize(&raw);
        Utterance { raw, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn phrase(&self, span: Span) -> String {
        self.tokens[span.start..=span.end].join(" ")
    }
}

/// Inclusive token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains(&self, pos: usize) -> bool {
        (self.start..=self.end).contains(&pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotValue {
    pub value: String,
    pub span: Span,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Binding {
    pub assignments: BTreeMap<String, SlotValue>,
}

impl Binding {
    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn get(&self, arg: &str) -> Option<&SlotValue> {
        self.assignments.get(arg)
    }

    pub fn covers(&self, pos: usize) -> bool {
        self.assignments.values().any(|v| v.span.contains(pos))
    }

    /// (variable, start, end, value) per assignment; the tie-break key
    /// between equally scored bindings of one seed command.
    fn key(&self) -> Vec<(&str, usize, usize, &str)> {
        self.assignments
            .iter()
            .map(|(k, v)| (k.as_str(), v.span.start, v.span.end, v.value.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingCandidate {
    pub api_id: ApiId,
    pub sc_id: String,
    pub binding: Binding,
    pub score: f64,
}

impl GroundingCandidate {
    /// API arguments the binding leaves open, in signature order.
    pub fn missing_args<'a>(&self, kb: &'a KnowledgeBase) -> Vec<&'a str> {
        kb.api(&self.api_id)
            .map(|api| {
                api.arg_names()
                    .filter(|a| self.binding.get(a).is_none())
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Best match for one API. `best` is `None` only for an API without seed
/// commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiMatch {
    pub api_id: ApiId,
    pub score: f64,
    pub best: Option<GroundingCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingResult {
    pub utterance: Utterance,
    /// One entry per seed command with positive score, ranked.
    pub candidates: Vec<GroundingCandidate>,
    /// One entry per API, ranked the same way.
    pub best_per_api: Vec<ApiMatch>,
}

impl GroundingResult {
    pub fn top(&self) -> Option<&GroundingCandidate> {
        self.candidates.first()
    }

    pub fn api_score(&self, api_id: &str) -> f64 {
        self.best_per_api
            .iter()
            .find(|m| m.api_id == api_id)
            .map_or(0.0, |m| m.score)
    }
}

/// Score desc, then api id asc, then seed command id asc.
pub fn rank_order(a: (f64, &str, &str), b: (f64, &str, &str)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.cmp(b.1))
        .then_with(|| a.2.cmp(b.2))
}

/// Articles a slot span may absorb from the left, so that "in the kitchen"
/// fills the `X1` of "in X1".
pub const DETERMINERS: &[&str] = &["the", "a", "an", "my", "our", "your"];

pub fn is_determiner(token: &str) -> bool {
    DETERMINERS.contains(&token)
}

/// Gazetteer hits for one slot type: every phrase of the type occurring in
/// the utterance, plus each hit extended over a directly preceding
/// determiner. Sorted by span. Shorter phrases are kept next to longer ones
/// that contain them, so adding a value can only add candidate spans.
fn type_spans(utt: &Utterance, kb: &KnowledgeBase, type_name: &str) -> Vec<SlotValue> {
    let Some(gaz) = kb.gazetteer(type_name) else {
        return Vec::new();
    };
    let n = utt.tokens.len();
    let mut out = Vec::new();
    for start in 0..n {
        for len in 1..=MAX_PHRASE_TOKENS.min(n - start) {
            let span = Span::new(start, start + len - 1);
            let phrase = utt.phrase(span);
            if gaz.contains(&phrase) {
                if start > 0 && is_determiner(&utt.tokens[start - 1]) {
                    out.push(SlotValue {
                        value: phrase.clone(),
                        span: Span::new(start - 1, span.end),
                    });
                }
                out.push(SlotValue {
                    value: phrase,
                    span,
                });
            }
        }
    }
    out.sort_by_key(|v| v.span);
    out
}

/// Every consistent assignment of gazetteer spans to the seed command's
/// variables, the empty binding included. Assignments never overlap.
pub fn enumerate_bindings(utt: &Utterance, sc: &SeedCommand, kb: &KnowledgeBase) -> Vec<Binding> {
    let mut cache = SpanCache::default();
    enumerate_with(utt, sc, kb, &mut cache)
}

#[derive(Default)]
struct SpanCache {
    by_type: BTreeMap<String, Vec<SlotValue>>,
}

impl SpanCache {
    fn get(&mut self, utt: &Utterance, kb: &KnowledgeBase, type_name: &str) -> &[SlotValue] {
        self.by_type
            .entry(type_name.to_string())
            .or_insert_with(|| type_spans(utt, kb, type_name))
    }
}

fn enumerate_with(
    utt: &Utterance,
    sc: &SeedCommand,
    kb: &KnowledgeBase,
    cache: &mut SpanCache,
) -> Vec<Binding> {
    let Some(api) = kb.api(&sc.api_id) else {
        return vec![Binding::default()];
    };
    let slots: Vec<(&str, Vec<SlotValue>)> = sc
        .covered_args
        .iter()
        .map(|var| {
            let options = api
                .arg(var)
                .map(|a| cache.get(utt, kb, &a.type_name).to_vec())
                .unwrap_or_default();
            (var.as_str(), options)
        })
        .collect();

    let mut out = Vec::new();
    let mut current = Binding::default();
    extend(&slots, 0, &mut current, &mut out);
    out
}

fn extend(
    slots: &[(&str, Vec<SlotValue>)],
    idx: usize,
    current: &mut Binding,
    out: &mut Vec<Binding>,
) {
    let Some((var, options)) = slots.get(idx) else {
        out.push(current.clone());
        return;
    };
    for option in options {
        if current
            .assignments
            .values()
            .any(|v| v.span.overlaps(&option.span))
        {
            continue;
        }
        current.assignments.insert(var.to_string(), option.clone());
        extend(slots, idx + 1, current, out);
        current.assignments.remove(*var);
    }
    extend(slots, idx + 1, current, out);
}

/// Scores one (seed command, binding) pair with IDF weights from `kb`.
pub fn score_candidate(utt: &Utterance, sc: &SeedCommand, binding: &Binding, kb: &KnowledgeBase) -> f64 {
    let weights = TokenWeights::from_kb(kb, Weighting::Idf);
    let mut words: Vec<&str> = sc.words().collect();
    words.sort_unstable();
    score_with(utt, &words, sc, binding, &weights)
}

fn score_with(
    utt: &Utterance,
    sorted_words: &[&str],
    sc: &SeedCommand,
    binding: &Binding,
    weights: &TokenWeights,
) -> f64 {
    if utt.is_empty() {
        return 0.0;
    }
    let mut residual: Vec<&str> = utt
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| !binding.covers(*i))
        .map(|(_, t)| t.as_str())
        .collect();
    residual.sort_unstable();
    let dice = dice_sorted(&residual, sorted_words, weights);
    if binding.len() < sc.covered_args.len() {
        dice.min(INCOMPLETE_BINDING_CAP)
    } else {
        dice
    }
}

/// Grounds utterances against one knowledge base snapshot. Token weights and
/// per-seed-command word lists are computed once per grounder.
pub struct Grounder<'kb> {
    kb: &'kb KnowledgeBase,
    weights: TokenWeights,
    /// Every seed-command word, sorted; a word's key is derived from its
    /// position here.
    vocab: Vec<&'kb str>,
    /// Per seed command, its word keys sorted, with weights.
    sorted_words: Vec<Vec<(u64, f64)>>,
    /// Per seed command, (variable, slot type) in variable order.
    slots: Vec<Vec<(&'kb str, Option<&'kb str>)>>,
    /// Per seed command, its position in (api_id, sc_id) order: the
    /// tie-break between equal scores.
    tie_rank: Vec<usize>,
}

impl<'kb> Grounder<'kb> {
    pub fn new(kb: &'kb KnowledgeBase, weighting: Weighting) -> Self {
        let weights = TokenWeights::from_kb(kb, weighting);
        let mut vocab: Vec<&str> = kb.seed_commands().flat_map(|sc| sc.words()).collect();
        vocab.sort_unstable();
        vocab.dedup();
        let sorted_words = kb
            .seed_commands()
            .map(|sc| {
                let mut w: Vec<(u64, f64)> = sc
                    .words()
                    .map(|t| (known_key(vocab.binary_search(&t).expect("word in vocab")), weights.weight(t)))
                    .collect();
                w.sort_unstable_by_key(|&(k, _)| k);
                w
            })
            .collect();
        let slots = kb
            .seed_commands()
            .map(|sc| {
                let api = kb.api(&sc.api_id);
                sc.covered_args
                    .iter()
                    .map(|var| {
                        let ty = api.and_then(|a| a.arg(var)).map(|a| a.type_name.as_str());
                        (var.as_str(), ty)
                    })
                    .collect()
            })
            .collect();
        let mut order: Vec<(&str, &str, usize)> = kb
            .seed_commands()
            .enumerate()
            .map(|(i, sc)| (sc.api_id.as_str(), sc.sc_id.as_str(), i))
            .collect();
        order.sort_unstable();
        let mut tie_rank = vec![0; order.len()];
        for (rank, &(_, _, i)) in order.iter().enumerate() {
            tie_rank[i] = rank;
        }
        Grounder {
            kb,
            weights,
            vocab,
            sorted_words,
            slots,
            tie_rank,
        }
    }

    pub fn kb(&self) -> &'kb KnowledgeBase {
        self.kb
    }

    pub fn weights(&self) -> &TokenWeights {
        &self.weights
    }

    pub fn score(&self, utt: &Utterance, sc: &SeedCommand, binding: &Binding) -> f64 {
        let mut words: Vec<&str> = sc.words().collect();
        words.sort_unstable();
        score_with(utt, &words, sc, binding, &self.weights)
    }

    pub fn ground(&self, utt: &Utterance) -> Result<GroundingResult, GroundingError> {
        if self.kb.is_empty() {
            return Err(GroundingError::EmptyKb);
        }
        let keys = self.token_keys(utt);
        let mut utt_sorted: Vec<(u64, usize, f64)> = utt
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (keys[i], i, self.weights.weight(t)))
            .collect();
        utt_sorted.sort_by_key(|&(k, pos, _)| (k, pos));
        let spans: BTreeMap<&str, Vec<SlotValue>> = self
            .kb
            .gazetteers()
            .map(|g| (g.type_name.as_str(), type_spans(utt, self.kb, &g.type_name)))
            .collect();

        let mut per_sc: Vec<(usize, GroundingCandidate)> = Vec::with_capacity(self.sorted_words.len());
        let mut covered = vec![false; utt.len()];
        let mut chosen: Vec<Option<usize>> = Vec::new();
        let mut options: Vec<&[SlotValue]> = Vec::new();
        for (i, ((sc, words), slots)) in self
            .kb
            .seed_commands()
            .zip(&self.sorted_words)
            .zip(&self.slots)
            .enumerate()
        {
            options.clear();
            options.extend(
                slots
                    .iter()
                    .map(|(_, ty)| ty.and_then(|t| spans.get(t)).map_or(&[][..], Vec::as_slice)),
            );
            let mut search = BindingSearch {
                options: &options,
                utt_sorted: &utt_sorted,
                words,
                covered: &mut covered,
                chosen: {
                    chosen.clear();
                    chosen.resize(options.len(), None);
                    &mut chosen
                },
                best: None,
            };
            search.run(0);
            let (score, _, key) = search.best.expect("the empty binding is always tried");
            let mut binding = Binding::default();
            for (slot, option) in key {
                binding
                    .assignments
                    .insert(slots[slot].0.to_string(), options[slot][option].clone());
            }
            per_sc.push((
                self.tie_rank[i],
                GroundingCandidate {
                    api_id: sc.api_id.clone(),
                    sc_id: sc.sc_id.clone(),
                    binding,
                    score,
                },
            ));
        }
        // Same order as `rank_order`, without comparing strings.
        per_sc.sort_unstable_by(|(ra, a), (rb, b)| b.score.total_cmp(&a.score).then(ra.cmp(rb)));
        let mut per_sc: Vec<GroundingCandidate> = per_sc.into_iter().map(|(_, c)| c).collect();

        let mut first: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, c) in per_sc.iter().enumerate() {
            first.entry(c.api_id.as_str()).or_insert(i);
        }
        let mut best_per_api: Vec<ApiMatch> = self
            .kb
            .apis()
            .map(|api| {
                let best = first.get(api.api_id.as_str()).map(|&i| per_sc[i].clone());
                ApiMatch {
                    api_id: api.api_id.clone(),
                    score: best.as_ref().map_or(0.0, |c| c.score),
                    best,
                }
            })
            .collect();
        best_per_api.sort_by(|a, b| {
            let sa = a.best.as_ref().map_or("", |c| c.sc_id.as_str());
            let sb = b.best.as_ref().map_or("", |c| c.sc_id.as_str());
            rank_order((a.score, &a.api_id, sa), (b.score, &b.api_id, sb))
        });

        per_sc.retain(|c| c.score > 0.0);
        Ok(GroundingResult {
            utterance: utt.clone(),
            candidates: per_sc,
            best_per_api,
        })
    }
}

fn known_key(vocab_index: usize) -> u64 {
    ((vocab_index as u64) << 32) | u64::from(u32::MAX)
}

impl Grounder<'_> {
    /// Integer keys ordering the utterance tokens exactly as the strings
    /// would sort, consistent with the seed-command word keys. A token
    /// missing from the vocabulary sorts just before the vocabulary word it
    /// would be inserted at.
    fn token_keys(&self, utt: &Utterance) -> Vec<u64> {
        let mut unknown: Vec<&str> = utt
            .tokens
            .iter()
            .map(String::as_str)
            .filter(|t| self.vocab.binary_search(t).is_err())
            .collect();
        unknown.sort_unstable();
        unknown.dedup();
        utt.tokens
            .iter()
            .map(|t| match self.vocab.binary_search(&t.as_str()) {
                Ok(i) => known_key(i),
                Err(i) => {
                    let rank = unknown.binary_search(&t.as_str()).expect("collected above");
                    ((i as u64) << 32) | rank as u64
                }
            })
            .collect()
    }
}

/// (slot index, option index) per bound slot. Slot order is variable order,
/// so comparing the spans and values these select orders bindings like
/// `Binding::key`.
type ChoiceKey = Vec<(usize, usize)>;

/// Exhaustive search over one seed command's bindings, tracking only the
/// preferred one. Works on indices so no binding is materialized until the
/// end.
struct BindingSearch<'a> {
    options: &'a [&'a [SlotValue]],
    utt_sorted: &'a [(u64, usize, f64)],
    words: &'a [(u64, f64)],
    covered: &'a mut [bool],
    chosen: &'a mut [Option<usize>],
    best: Option<(f64, usize, ChoiceKey)>,
}

impl BindingSearch<'_> {
    fn run(&mut self, slot: usize) {
        if slot == self.options.len() {
            self.consider();
            return;
        }
        for (i, opt) in self.options[slot].iter().enumerate() {
            let (s, e) = (opt.span.start, opt.span.end);
            if self.covered[s..=e].iter().any(|&c| c) {
                continue;
            }
            self.covered[s..=e].fill(true);
            self.chosen[slot] = Some(i);
            self.run(slot + 1);
            self.chosen[slot] = None;
            self.covered[s..=e].fill(false);
        }
        self.run(slot + 1);
    }

    fn consider(&mut self) {
        let bound = self.chosen.iter().flatten().count();
        let score = if self.utt_sorted.is_empty() {
            0.0
        } else {
            let covered = &*self.covered;
            let residual = self
                .utt_sorted
                .iter()
                .filter(|(_, pos, _)| !covered[*pos])
                .map(|(t, _, w)| (*t, *w));
            let dice = dice_merge(residual, self.words.iter().copied());
            if bound < self.options.len() {
                dice.min(INCOMPLETE_BINDING_CAP)
            } else {
                dice
            }
        };
        let better = match &self.best {
            None => true,
            Some((bs, bn, bk)) => match score.total_cmp(bs) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => match bound.cmp(bn) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => self.key_lt(bk),
                },
            },
        };
        if better {
            self.best = Some((score, bound, self.key()));
        }
    }

    fn key(&self) -> ChoiceKey {
        self.chosen
            .iter()
            .enumerate()
            .filter_map(|(slot, c)| c.map(|i| (slot, i)))
            .collect()
    }

    /// Current choice orders before `other` by (slot, start, end, value).
    fn key_lt(&self, other: &ChoiceKey) -> bool {
        let span = |slot: usize, i: usize| {
            let o = &self.options[slot][i];
            (slot, o.span.start, o.span.end, o.value.as_str())
        };
        let mine = self
            .chosen
            .iter()
            .enumerate()
            .filter_map(|(slot, c)| c.map(|i| span(slot, i)));
        let theirs = other.iter().map(|&(slot, i)| span(slot, i));
        mine.lt(theirs)
    }
}

/// Higher score wins; then more bound variables; then the smaller
/// (variable, span, value) list.
pub fn prefer_binding(a: (f64, &Binding), b: (f64, &Binding)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match a.1.len().cmp(&b.1.len()) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a.1.key() < b.1.key(),
        },
    }
}

/// Grounds with IDF weighting.
pub fn ground(utt: &Utterance, kb: &KnowledgeBase) -> Result<GroundingResult, GroundingError> {
    Grounder::new(kb, Weighting::Idf).ground(utt)
}
