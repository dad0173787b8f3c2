//! IDF-weighted Dice coefficient over token multisets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::kb::KnowledgeBase;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Smoothed inverse document frequency over the seed-command corpus.
    #[default]
    Idf,
    /// Every token weighs 1; plain multiset Dice.
    Uniform,
}

/// Per-token weights derived from a knowledge base snapshot.
///
/// Each authored seed command is one document over its word tokens. A word
/// occurring in `df` of `n` documents weighs `1 + ln((1 + n) / (1 + df))`.
/// Words that never occur in an authored seed command get the largest
/// weight in the corpus.
///
/// Learned seed commands are left out on purpose: if they shifted the
/// weights, teaching could lower the score an existing seed command gives
/// an utterance, and learning would no longer be purely additive.
#[derive(Debug, Clone)]
pub struct TokenWeights {
    idf: HashMap<String, f64>,
    unknown: f64,
    uniform: bool,
}

impl TokenWeights {
    pub fn from_kb(kb: &KnowledgeBase, weighting: Weighting) -> Self {
        if weighting == Weighting::Uniform {
            return Self::uniform();
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        let mut docs = 0usize;
        for sc in kb.seed_commands().filter(|sc| !sc.provenance.is_learned()) {
            docs += 1;
            let mut words: Vec<&str> = sc.words().collect();
            words.sort_unstable();
            words.dedup();
            for w in words {
                *df.entry(w).or_insert(0) += 1;
            }
        }
        let n = docs as f64;
        let idf: HashMap<String, f64> = df
            .into_iter()
            .map(|(w, d)| (w.to_string(), 1.0 + ((1.0 + n) / (1.0 + d as f64)).ln()))
            .collect();
        let unknown = idf.values().copied().fold(1.0, f64::max);
        TokenWeights {
            idf,
            unknown,
            uniform: false,
        }
    }

    pub fn uniform() -> Self {
        TokenWeights {
            idf: HashMap::new(),
            unknown: 1.0,
            uniform: true,
        }
    }

    pub fn weight(&self, token: &str) -> f64 {
        if self.uniform {
            1.0
        } else {
            self.idf.get(token).copied().unwrap_or(self.unknown)
        }
    }
}

/// Weighted Dice of two token multisets given as sorted slices.
///
/// `2 * sum(w * min(ca, cb)) / (sum(w * ca) + sum(w * cb))`, accumulated in
/// token order so equal multisets yield exactly 1.0. Two empty inputs score 0.
pub fn dice_sorted(a: &[&str], b: &[&str], weights: &TokenWeights) -> f64 {
    debug_assert!(a.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(b.windows(2).all(|w| w[0] <= w[1]));
    dice_merge(
        a.iter().map(|t| (*t, weights.weight(t))),
        b.iter().map(|t| (*t, weights.weight(t))),
    )
}

/// `dice_sorted` over pre-weighted, sorted token streams. Keys may be any
/// order-preserving stand-in for the tokens; equal keys must carry equal
/// weights.
pub(crate) fn dice_merge<K: Copy + PartialOrd>(
    a: impl Iterator<Item = (K, f64)>,
    b: impl Iterator<Item = (K, f64)>,
) -> f64 {
    let mut a = a.peekable();
    let mut b = b.peekable();
    let (mut inter, mut total_a, mut total_b) = (0.0f64, 0.0f64, 0.0f64);
    loop {
        let (key, w) = match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => {
                if x.0 <= y.0 {
                    *x
                } else {
                    *y
                }
            }
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => break,
        };
        let mut ca = 0u32;
        while a.next_if(|t| t.0 == key).is_some() {
            ca += 1;
        }
        let mut cb = 0u32;
        while b.next_if(|t| t.0 == key).is_some() {
            cb += 1;
        }
        inter += w * f64::from(ca.min(cb));
        total_a += w * f64::from(ca);
        total_b += w * f64::from(cb);
    }
    let denom = total_a + total_b;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * inter / denom
    }
}

/// Weighted Dice of two unsorted token lists.
pub fn dice<S: AsRef<str>>(a: &[S], b: &[S], weights: &TokenWeights) -> f64 {
    let mut a: Vec<&str> = a.iter().map(AsRef::as_ref).collect();
    let mut b: Vec<&str> = b.iter().map(AsRef::as_ref).collect();
    a.sort_unstable();
    b.sort_unstable();
    dice_sorted(&a, &b, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::fixtures::lights;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn uniform_dice_matches_hand_count() {
        let w = TokenWeights::uniform();
        let d = dice(&toks("switch on the light in the"), &toks("switch on the light in"), &w);
        assert_eq!(d, 10.0 / 11.0);
        assert_eq!(dice(&toks("a b"), &toks("c d"), &w), 0.0);
        assert_eq!(dice(&toks("b a a"), &toks("a b a"), &w), 1.0);
        assert_eq!(dice::<&str>(&[], &[], &w), 0.0);
    }

    #[test]
    fn idf_weights_for_light_corpus() {
        let w = TokenWeights::from_kb(&lights(), Weighting::Idf);
        // "light" occurs in all six seed commands
        assert_eq!(w.weight("light"), 1.0);
        // "change" occurs once: 1 + ln(7/2)
        assert!((w.weight("change") - (1.0 + 3.5f64.ln())).abs() < 1e-15);
        assert_eq!(w.weight("turn"), w.weight("change"));
    }

    proptest! {
        #[test]
        fn dice_is_bounded_and_symmetric(
            a in proptest::collection::vec("[a-e]", 0..8),
            b in proptest::collection::vec("[a-e]", 0..8),
        ) {
            let w = TokenWeights::from_kb(&lights(), Weighting::Idf);
            let ab = dice(&a, &b, &w);
            let ba = dice(&b, &a, &w);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - ba).abs() < 1e-12);
            if !a.is_empty() {
                prop_assert_eq!(dice(&a, &a, &w), 1.0);
            }
        }
    }
}
