//! Knowledge base: API signatures, seed commands, slot gazetteers and usage
//! statistics.
//!
//! The knowledge base is strictly additive. There is no path that removes or
//! edits a seed command or a gazetteer value, so anything that grounded before
//! a learning step still has its template afterwards.

mod dsl;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize;

pub use dsl::{parse_spec, SpecError};
pub use store::{load_kb, save_kb, FORMAT_VERSION};

/// Longest gazetteer phrase, in tokens.
pub const MAX_PHRASE_TOKENS: usize = 4;

pub type ApiId = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KbError {
    #[error("unknown api `{0}`")]
    UnknownApi(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("duplicate api `{0}`")]
    DuplicateApi(String),
    #[error("phrase `{phrase}` has {tokens} tokens (max {MAX_PHRASE_TOKENS})")]
    PhraseTooLong { phrase: String, tokens: usize },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("episode was resolved against kb version {episode} but the kb is at {current}")]
    VersionConflict { episode: u64, current: u64 },
    #[error("corrupt kb file: {0}")]
    CorruptFile(String),
    #[error("unsupported kb format version {0}")]
    UnsupportedVersion(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSpec {
    pub api_id: ApiId,
    pub args: Vec<ArgSpec>,
    /// Action phrase used when offering this API as an option. Argument names
    /// appearing as tokens are substituted with bound values.
    pub description: String,
}

impl ApiSpec {
    pub fn arg(&self, name: &str) -> Option<&ArgSpec> {
        self.args.iter().find(|a| a.name == name)
    }

    pub fn arg_names(&self) -> impl Iterator<Item = &str> {
        self.args.iter().map(|a| a.name.as_str())
    }
}

/// One item of a seed command template.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Word(String),
    Var(String),
}

impl Token {
    pub fn as_word(&self) -> Option<&str> {
        match self {
            Token::Word(w) => Some(w),
            Token::Var(_) => None,
        }
    }
}

/// Variables are written like `X1`: an uppercase letter first, at least one
/// digit somewhere. Words are lowercase after normalization, so the two never
/// collide in a stored template.
pub(crate) fn is_variable_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s.chars().any(|c| c.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Authored,
    Learned { session_id: String, timestamp: u64 },
}

impl Provenance {
    pub fn is_learned(&self) -> bool {
        matches!(self, Provenance::Learned { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCommand {
    /// Assigned by the knowledge base on insertion when left empty.
    pub sc_id: String,
    pub api_id: ApiId,
    #[serde(rename = "template", with = "template_serde")]
    pub tokens: Vec<Token>,
    pub covered_args: BTreeSet<String>,
    pub provenance: Provenance,
}

impl SeedCommand {
    /// Builds a seed command from a template such as `"turn off the light in X1"`.
    /// Tokens shaped like `X1` are variables.
    pub fn from_template(api_id: &str, template: &str, provenance: Provenance) -> Self {
        let tokens = template_serde::parse(template);
        Self::from_tokens(api_id, tokens, provenance)
    }

    pub fn from_tokens(api_id: &str, tokens: Vec<Token>, provenance: Provenance) -> Self {
        let covered_args = tokens
            .iter()
            .filter_map(|t| match t {
                Token::Var(v) => Some(v.clone()),
                Token::Word(_) => None,
            })
            .collect();
        SeedCommand {
            sc_id: String::new(),
            api_id: api_id.to_string(),
            tokens,
            covered_args,
            provenance,
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter_map(Token::as_word)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter_map(|t| match t {
            Token::Var(v) => Some(v.as_str()),
            Token::Word(_) => None,
        })
    }

    pub fn template(&self) -> String {
        template_serde::render(&self.tokens)
    }
}

impl fmt::Display for SeedCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.template())
    }
}

mod template_serde {
    use super::{is_variable_name, Token};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn render(tokens: &[Token]) -> String {
        tokens
            .iter()
            .map(|t| match t {
                Token::Word(w) | Token::Var(w) => w.as_str(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Splits on whitespace. Variable-shaped tokens are kept verbatim and
    /// everything else is normalized.
    pub fn parse(template: &str) -> Vec<Token> {
        template
            .split_whitespace()
            .flat_map(|raw| {
                let trimmed = raw.trim_matches(|c: char| c.is_ascii_punctuation() && c != '_');
                if is_variable_name(trimmed) {
                    vec![Token::Var(trimmed.to_string())]
                } else {
                    crate::text::normalize(raw).into_iter().map(Token::Word).collect()
                }
            })
            .collect()
    }

    pub fn serialize<S: Serializer>(tokens: &[Token], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&render(tokens))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Token>, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(parse(&raw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueProvenance {
    Authored,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeGazetteer {
    pub type_name: String,
    /// Normalized phrase -> provenance.
    pub values: BTreeMap<String, ValueProvenance>,
}

impl TypeGazetteer {
    pub fn new(type_name: impl Into<String>) -> Self {
        TypeGazetteer {
            type_name: type_name.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.values.contains_key(phrase)
    }
}

/// Previous action in a session, the context of a usage bigram.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Context {
    Start,
    Api(ApiId),
}

impl Context {
    pub fn from_last(last: Option<&str>) -> Self {
        match last {
            Some(a) => Context::Api(a.to_string()),
            None => Context::Start,
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::Start => f.write_str("START"),
            Context::Api(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub(crate) apis: BTreeMap<ApiId, ApiSpec>,
    pub(crate) seed_commands: BTreeMap<ApiId, Vec<SeedCommand>>,
    pub(crate) gazetteers: BTreeMap<String, TypeGazetteer>,
    pub(crate) usage: BTreeMap<(Context, ApiId), u64>,
    pub(crate) version: u64,
}

/// Per-API seed command counts, split by provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSummary {
    pub api_id: ApiId,
    pub description: String,
    pub authored_scs: usize,
    pub learned_scs: usize,
    pub learned_templates: Vec<LearnedTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnedTemplate {
    pub sc_id: String,
    pub template: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbSummary {
    pub version: u64,
    pub apis: Vec<ApiSummary>,
    pub learned_sc_count: usize,
    pub learned_value_count: usize,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty()
    }

    pub fn api_count(&self) -> usize {
        self.apis.len()
    }

    pub fn api(&self, api_id: &str) -> Option<&ApiSpec> {
        self.apis.get(api_id)
    }

    /// Known classes, in id order.
    pub fn apis(&self) -> impl Iterator<Item = &ApiSpec> {
        self.apis.values()
    }

    pub fn seed_commands_for(&self, api_id: &str) -> &[SeedCommand] {
        self.seed_commands.get(api_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn seed_commands(&self) -> impl Iterator<Item = &SeedCommand> {
        self.seed_commands.values().flatten()
    }

    pub fn seed_command_count(&self) -> usize {
        self.seed_commands.values().map(Vec::len).sum()
    }

    pub fn gazetteer(&self, type_name: &str) -> Option<&TypeGazetteer> {
        self.gazetteers.get(type_name)
    }

    pub fn gazetteers(&self) -> impl Iterator<Item = &TypeGazetteer> {
        self.gazetteers.values()
    }

    pub fn usage_count(&self, context: &Context, api_id: &str) -> u64 {
        self.usage
            .get(&(context.clone(), api_id.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn context_total(&self, context: &Context) -> u64 {
        self.usage
            .iter()
            .filter(|((c, _), _)| c == context)
            .map(|(_, n)| *n)
            .sum()
    }

    pub fn usage(&self) -> impl Iterator<Item = (&Context, &str, u64)> {
        self.usage.iter().map(|((c, a), n)| (c, a.as_str(), *n))
    }

    /// Declares a slot type. Authoring only; used by the spec parser and tests.
    pub fn add_type(&mut self, type_name: &str, values: &[&str]) -> Result<(), KbError> {
        if self.gazetteers.contains_key(type_name) {
            return Err(KbError::InvariantViolation(format!(
                "type `{type_name}` declared twice"
            )));
        }
        let mut gaz = TypeGazetteer::new(type_name);
        for v in values {
            let phrase = checked_phrase(v)?;
            gaz.values.insert(phrase, ValueProvenance::Authored);
        }
        self.gazetteers.insert(type_name.to_string(), gaz);
        self.version += 1;
        Ok(())
    }

    /// Declares an API. Authoring only.
    pub fn add_api(&mut self, api: ApiSpec) -> Result<(), KbError> {
        if self.apis.contains_key(&api.api_id) {
            return Err(KbError::DuplicateApi(api.api_id));
        }
        if api.description.trim().is_empty() {
            return Err(KbError::InvariantViolation(format!(
                "api `{}` has an empty description",
                api.api_id
            )));
        }
        let mut seen = BTreeSet::new();
        for arg in &api.args {
            if !is_variable_name(&arg.name) {
                return Err(KbError::InvariantViolation(format!(
                    "argument name `{}` must look like `X1`",
                    arg.name
                )));
            }
            if !seen.insert(arg.name.as_str()) {
                return Err(KbError::InvariantViolation(format!(
                    "argument `{}` repeated in `{}`",
                    arg.name, api.api_id
                )));
            }
            if !self.gazetteers.contains_key(&arg.type_name) {
                return Err(KbError::UnknownType(arg.type_name.clone()));
            }
        }
        self.seed_commands.entry(api.api_id.clone()).or_default();
        self.apis.insert(api.api_id.clone(), api);
        self.version += 1;
        Ok(())
    }

    /// Appends a seed command to its API. Returns `false` (and leaves the
    /// version untouched) when a token-identical command already exists.
    pub fn add_seed_command(&mut self, sc: SeedCommand) -> Result<bool, KbError> {
        let added = self.insert_seed_command(sc)?;
        if added {
            self.version += 1;
        }
        Ok(added)
    }

    pub(crate) fn insert_seed_command(&mut self, mut sc: SeedCommand) -> Result<bool, KbError> {
        let api = self
            .apis
            .get(&sc.api_id)
            .ok_or_else(|| KbError::UnknownApi(sc.api_id.clone()))?;
        check_seed_command(api, &sc)?;
        let list = self.seed_commands.entry(sc.api_id.clone()).or_default();
        if list.iter().any(|existing| existing.tokens == sc.tokens) {
            return Ok(false);
        }
        if sc.sc_id.is_empty() {
            sc.sc_id = next_sc_id(&sc.api_id, list);
        } else if list.iter().any(|existing| existing.sc_id == sc.sc_id) {
            return Err(KbError::InvariantViolation(format!(
                "seed command id `{}` already used",
                sc.sc_id
            )));
        }
        list.push(sc);
        Ok(true)
    }

    /// Adds a learned value to a slot type. Returns `false` when the
    /// normalized phrase is already present.
    pub fn add_gazetteer_value(&mut self, type_name: &str, phrase: &str) -> Result<bool, KbError> {
        let added = self.insert_gazetteer_value(type_name, phrase)?;
        if added {
            self.version += 1;
        }
        Ok(added)
    }

    pub(crate) fn insert_gazetteer_value(
        &mut self,
        type_name: &str,
        phrase: &str,
    ) -> Result<bool, KbError> {
        let gaz = self
            .gazetteers
            .get_mut(type_name)
            .ok_or_else(|| KbError::UnknownType(type_name.to_string()))?;
        let phrase = checked_phrase(phrase)?;
        if gaz.values.contains_key(&phrase) {
            return Ok(false);
        }
        gaz.values.insert(phrase, ValueProvenance::Learned);
        Ok(true)
    }

    pub fn record_usage(&mut self, prev: &Context, api_id: &str) -> Result<(), KbError> {
        self.insert_usage(prev, api_id)?;
        self.version += 1;
        Ok(())
    }

    pub(crate) fn insert_usage(&mut self, prev: &Context, api_id: &str) -> Result<(), KbError> {
        if let Context::Api(p) = prev {
            if !self.apis.contains_key(p) {
                return Err(KbError::UnknownApi(p.clone()));
            }
        }
        if !self.apis.contains_key(api_id) {
            return Err(KbError::UnknownApi(api_id.to_string()));
        }
        *self
            .usage
            .entry((prev.clone(), api_id.to_string()))
            .or_insert(0) += 1;
        Ok(())
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    /// Full referential-integrity pass.
    pub fn validate(&self) -> Result<(), KbError> {
        for (type_name, gaz) in &self.gazetteers {
            if gaz.type_name != *type_name {
                return Err(KbError::InvariantViolation(format!(
                    "gazetteer keyed `{type_name}` is named `{}`",
                    gaz.type_name
                )));
            }
            for phrase in gaz.values.keys() {
                if checked_phrase(phrase)? != *phrase {
                    return Err(KbError::InvariantViolation(format!(
                        "gazetteer phrase `{phrase}` is not normalized"
                    )));
                }
            }
        }
        for (api_id, api) in &self.apis {
            if api.api_id != *api_id {
                return Err(KbError::InvariantViolation(format!(
                    "api keyed `{api_id}` is named `{}`",
                    api.api_id
                )));
            }
            let mut seen = BTreeSet::new();
            for arg in &api.args {
                let gaz = self
                    .gazetteers
                    .get(&arg.type_name)
                    .ok_or_else(|| KbError::UnknownType(arg.type_name.clone()))?;
                if gaz.values.is_empty() {
                    return Err(KbError::InvariantViolation(format!(
                        "type `{}` is referenced but has no values",
                        arg.type_name
                    )));
                }
                if !seen.insert(&arg.name) {
                    return Err(KbError::InvariantViolation(format!(
                        "argument `{}` repeated in `{api_id}`",
                        arg.name
                    )));
                }
            }
        }
        for (api_id, list) in &self.seed_commands {
            let api = self
                .apis
                .get(api_id)
                .ok_or_else(|| KbError::UnknownApi(api_id.clone()))?;
            let mut ids = BTreeSet::new();
            for sc in list {
                if sc.api_id != *api_id {
                    return Err(KbError::InvariantViolation(format!(
                        "seed command `{}` filed under `{api_id}`",
                        sc.sc_id
                    )));
                }
                if !ids.insert(&sc.sc_id) {
                    return Err(KbError::InvariantViolation(format!(
                        "duplicate seed command id `{}`",
                        sc.sc_id
                    )));
                }
                check_seed_command(api, sc)?;
            }
        }
        for (ctx, api_id) in self.usage.keys() {
            if let Context::Api(p) = ctx {
                if !self.apis.contains_key(p) {
                    return Err(KbError::UnknownApi(p.clone()));
                }
            }
            if !self.apis.contains_key(api_id) {
                return Err(KbError::UnknownApi(api_id.clone()));
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> KbSummary {
        let apis: Vec<ApiSummary> = self
            .apis
            .values()
            .map(|api| {
                let scs = self.seed_commands_for(&api.api_id);
                let learned: Vec<LearnedTemplate> = scs
                    .iter()
                    .filter(|sc| sc.provenance.is_learned())
                    .map(|sc| LearnedTemplate {
                        sc_id: sc.sc_id.clone(),
                        template: sc.template(),
                        provenance: sc.provenance.clone(),
                    })
                    .collect();
                ApiSummary {
                    api_id: api.api_id.clone(),
                    description: api.description.clone(),
                    authored_scs: scs.len() - learned.len(),
                    learned_scs: learned.len(),
                    learned_templates: learned,
                }
            })
            .collect();
        KbSummary {
            version: self.version,
            learned_sc_count: apis.iter().map(|a| a.learned_scs).sum(),
            learned_value_count: self
                .gazetteers
                .values()
                .flat_map(|g| g.values.values())
                .filter(|p| **p == ValueProvenance::Learned)
                .count(),
            apis,
        }
    }
}

fn next_sc_id(api_id: &str, existing: &[SeedCommand]) -> String {
    let mut n = existing.len() + 1;
    loop {
        let id = format!("{api_id}:{n:03}");
        if !existing.iter().any(|sc| sc.sc_id == id) {
            return id;
        }
        n += 1;
    }
}

fn checked_phrase(raw: &str) -> Result<String, KbError> {
    let tokens = normalize(raw);
    if tokens.is_empty() {
        return Err(KbError::InvariantViolation("empty gazetteer phrase".into()));
    }
    if tokens.len() > MAX_PHRASE_TOKENS {
        return Err(KbError::PhraseTooLong {
            phrase: tokens.join(" "),
            tokens: tokens.len(),
        });
    }
    Ok(tokens.join(" "))
}

fn check_seed_command(api: &ApiSpec, sc: &SeedCommand) -> Result<(), KbError> {
    if sc.tokens.is_empty() {
        return Err(KbError::InvariantViolation("seed command has no tokens".into()));
    }
    if sc.words().next().is_none() {
        return Err(KbError::InvariantViolation(format!(
            "seed command `{}` has no word tokens",
            sc.template()
        )));
    }
    let mut vars = BTreeSet::new();
    for tok in &sc.tokens {
        match tok {
            Token::Var(v) => {
                if api.arg(v).is_none() {
                    return Err(KbError::InvariantViolation(format!(
                        "variable `{v}` is not an argument of `{}`",
                        api.api_id
                    )));
                }
                if !vars.insert(v.clone()) {
                    return Err(KbError::InvariantViolation(format!(
                        "variable `{v}` appears twice in `{}`",
                        sc.template()
                    )));
                }
            }
            Token::Word(w) => {
                if w.is_empty() || normalize(w).as_slice() != std::slice::from_ref(w) {
                    return Err(KbError::InvariantViolation(format!(
                        "word token `{w}` is not normalized"
                    )));
                }
            }
        }
    }
    if vars != sc.covered_args {
        return Err(KbError::InvariantViolation(format!(
            "covered_args of `{}` do not match its variables",
            sc.template()
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    /// The three light-control APIs with two seed commands each.
    pub const LIGHTS_SPEC: &str = r#"
# light control
type location = { bedroom, kitchen, living room }
type color = { blue, red, green }

api SwitchOnLight(X1: location) "switch on the light in the X1"
    sc "Switch on the light in X1"
    sc "Put on light in X1"
api SwitchOffLight(X1: location) "switch off the light in the X1"
    sc "Switch off the light in X1"
    sc "Put off light in X1"
api ChangeLightColor(X1: location, X2: color) "change the color of the light"
    sc "Change the X1 light to X2"
    sc "I want X1 light to be X2"
"#;

    pub fn lights() -> super::KnowledgeBase {
        super::parse_spec(LIGHTS_SPEC).expect("fixture parses")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::lights;
    use super::*;

    #[test]
    fn add_learned_seed_command() {
        let mut kb = lights();
        let v = kb.version();
        let sc = SeedCommand::from_template(
            "SwitchOffLight",
            "turn off the light in X1",
            Provenance::Learned {
                session_id: "s1".into(),
                timestamp: 7,
            },
        );
        assert!(kb.add_seed_command(sc.clone()).unwrap());
        assert_eq!(kb.seed_commands_for("SwitchOffLight").len(), 3);
        assert_eq!(kb.version(), v + 1);
        assert_eq!(kb.seed_commands_for("SwitchOffLight")[2].sc_id, "SwitchOffLight:003");

        // token-identical re-add is a no-op
        assert!(!kb.add_seed_command(sc).unwrap());
        assert_eq!(kb.seed_commands_for("SwitchOffLight").len(), 3);
        assert_eq!(kb.version(), v + 1);
    }

    #[test]
    fn add_seed_command_unknown_api() {
        let mut kb = lights();
        let sc = SeedCommand::from_template("Foo", "do foo", Provenance::Authored);
        assert_eq!(kb.add_seed_command(sc), Err(KbError::UnknownApi("Foo".into())));
    }

    #[test]
    fn add_seed_command_rejects_foreign_variable() {
        let mut kb = lights();
        let sc = SeedCommand::from_template("SwitchOnLight", "light up X2", Provenance::Authored);
        assert!(matches!(
            kb.add_seed_command(sc),
            Err(KbError::InvariantViolation(_))
        ));
        let sc = SeedCommand::from_template("SwitchOnLight", "X1", Provenance::Authored);
        assert!(matches!(
            kb.add_seed_command(sc),
            Err(KbError::InvariantViolation(_))
        ));
    }

    #[test]
    fn gazetteer_values_are_normalized_and_deduplicated() {
        let mut kb = lights();
        assert!(kb.add_gazetteer_value("location", "Hallway").unwrap());
        assert!(kb.gazetteer("location").unwrap().contains("hallway"));
        let v = kb.version();
        assert!(!kb.add_gazetteer_value("location", "hallway").unwrap());
        assert_eq!(kb.version(), v);
        assert_eq!(
            kb.gazetteer("location").unwrap().values.get("hallway"),
            Some(&ValueProvenance::Learned)
        );
    }

    #[test]
    fn gazetteer_phrase_length_limit() {
        let mut kb = lights();
        // token-count oracle: 3 <= 4
        assert_eq!("deep sea blue".split_whitespace().count(), 3);
        assert!(kb.add_gazetteer_value("color", "deep sea blue").unwrap());
        assert!(matches!(
            kb.add_gazetteer_value("color", "a very deep sea blue"),
            Err(KbError::PhraseTooLong { tokens: 5, .. })
        ));
        assert_eq!(
            kb.add_gazetteer_value("flavor", "mint"),
            Err(KbError::UnknownType("flavor".into()))
        );
    }

    #[test]
    fn usage_counts() {
        let mut kb = lights();
        for _ in 0..3 {
            kb.record_usage(&Context::Start, "SwitchOnLight").unwrap();
        }
        assert_eq!(kb.usage_count(&Context::Start, "SwitchOnLight"), 3);
        kb.record_usage(&Context::Start, "SwitchOffLight").unwrap();
        let p = kb.usage_count(&Context::Start, "SwitchOffLight") as f64
            / kb.context_total(&Context::Start) as f64;
        assert_eq!(p, 0.25);
        assert_eq!(
            kb.record_usage(&Context::Start, "Nope"),
            Err(KbError::UnknownApi("Nope".into()))
        );
        assert_eq!(
            kb.record_usage(&Context::Api("Nope".into()), "SwitchOnLight"),
            Err(KbError::UnknownApi("Nope".into()))
        );
    }

    #[test]
    fn summary_counts_learned() {
        let mut kb = lights();
        let sc = SeedCommand::from_template(
            "SwitchOffLight",
            "turn off the light in X1",
            Provenance::Learned {
                session_id: "s".into(),
                timestamp: 0,
            },
        );
        kb.add_seed_command(sc).unwrap();
        let s = kb.summary();
        let off = s.apis.iter().find(|a| a.api_id == "SwitchOffLight").unwrap();
        assert_eq!((off.authored_scs, off.learned_scs), (2, 1));
        assert_eq!(s.learned_sc_count, 1);
        assert_eq!(off.learned_templates[0].template, "turn off the light in X1");
    }

    #[test]
    fn validate_passes_on_fixture() {
        lights().validate().unwrap();
    }
}
