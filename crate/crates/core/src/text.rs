//! Text normalization shared by seed commands, gazetteer phrases and user
//! commands.

/// Lowercases, trims punctuation off both ends of every whitespace token and
/// drops tokens that end up empty.
pub fn normalize(raw: &str) -> Vec<String> {
    raw.split_whitespace()
        .filter_map(|tok| {
            let t = tok.trim_matches(|c: char| c.is_ascii_punctuation());
            if t.is_empty() {
                None
            } else {
                Some(t.to_lowercase())
            }
        })
        .collect()
}

/// Normalized tokens joined by single spaces. Used as the canonical form of
/// gazetteer phrases and argument values.
pub fn normalize_phrase(raw: &str) -> String {
    normalize(raw).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_strips_terminal_punctuation() {
        assert_eq!(
            normalize("Switch on the light in the Bedroom."),
            vec!["switch", "on", "the", "light", "in", "the", "bedroom"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(normalize("").is_empty());
        assert!(normalize("   ?! ").is_empty());
    }

    #[test]
    fn collapses_whitespace() {
        assert_eq!(normalize("  Put   off light "), vec!["put", "off", "light"]);
    }

    #[test]
    fn keeps_inner_punctuation() {
        assert_eq!(normalize("it's 5:30, ok?"), vec!["it's", "5:30", "ok"]);
    }
}
