//! Synthetic workloads for the benchmarks.

use nlcmd_core::{parse_spec, KnowledgeBase};

const VERBS: &[&str] = &[
    "switch", "turn", "set", "open", "close", "start", "stop", "show", "play", "lock", "raise", "lower",
];
const NOUNS: &[&str] = &[
    "light", "door", "fan", "heater", "blinds", "music", "alarm", "camera", "oven", "tv", "speaker", "window",
    "kettle", "vacuum", "sprinkler", "garage",
];
const FILLER: &[&str] = &["the", "in", "please", "now", "my", "to", "for", "at", "on", "of"];
const PLACES: &[&str] = &["bedroom", "kitchen", "living room", "hall", "garden", "office", "bathroom", "attic"];
const LEVELS: &[&str] = &["low", "medium", "high", "max", "off"];

/// A KB with `apis` actions and `scs` seed commands each. Deterministic.
pub fn synthetic_kb(apis: usize, scs: usize) -> KnowledgeBase {
    let mut spec = format!(
        "type place = {{ {} }}\ntype level = {{ {} }}\n",
        PLACES.join(", "),
        LEVELS.join(", ")
    );
    for a in 0..apis {
        let verb = VERBS[a % VERBS.len()];
        let noun = NOUNS[(a / VERBS.len()) % NOUNS.len()];
        let two_args = a % 3 == 0;
        let sig = if two_args { "X1: place, X2: level" } else { "X1: place" };
        spec.push_str(&format!("api Act{a}({sig}) \"{verb} the {noun} in the X1\"\n"));
        for s in 0..scs {
            let f1 = FILLER[(a + s) % FILLER.len()];
            let f2 = FILLER[(a * 7 + s * 3) % FILLER.len()];
            let tail = if two_args { " to X2" } else { "" };
            spec.push_str(&format!("    sc \"{verb} {f1} {noun} {f2} X1{tail} v{s}\"\n"));
        }
    }
    parse_spec(&spec).expect("synthetic spec is valid")
}

/// `n` commands mixing known phrasings with unseen words.
pub fn utterances(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let verb = VERBS[i % VERBS.len()];
            let noun = NOUNS[(i * 5) % NOUNS.len()];
            let place = PLACES[(i * 3) % PLACES.len()];
            match i % 3 {
                0 => format!("{verb} the {noun} in the {place}"),
                1 => format!("could you {verb} my {noun} in the {place} to high"),
                _ => format!("please {verb} {noun} {place} right away thanks"),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let kb = synthetic_kb(100, 5);
        assert_eq!(kb.api_count(), 100);
        assert_eq!(kb.seed_command_count(), 500);
        assert_eq!(utterances(10).len(), 10);
    }
}
