//! Seed-command specification language.
//!
//! Line oriented. Blank lines and `#` comments are ignored.
//!
//! ```text
//! type location = { bedroom, kitchen, living room }
//! api SwitchOnLight(X1: location) "switch on the light in the X1"
//!     sc "Switch on the light in X1"
//! ```
//!
//! `sc` lines must be indented and attach to the closest preceding `api`.
//! Types may be declared after the APIs that use them.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{is_variable_name, ApiSpec, ArgSpec, KbError, KnowledgeBase, Provenance, SeedCommand, Token};
use crate::text::normalize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: unknown type `{name}`")]
    UnknownType { line: usize, col: usize, name: String },
    #[error("{line}:{col}: duplicate api `{name}`")]
    DuplicateApi { line: usize, col: usize, name: String },
    #[error("{line}:{col}: variable `{name}` is not an argument of `{api}`")]
    UnboundVariable {
        line: usize,
        col: usize,
        name: String,
        api: String,
    },
    #[error("{line}:{col}: {message}")]
    Invalid { line: usize, col: usize, message: String },
}

impl SpecError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            SpecError::Syntax { line, col, .. }
            | SpecError::UnknownType { line, col, .. }
            | SpecError::DuplicateApi { line, col, .. }
            | SpecError::UnboundVariable { line, col, .. }
            | SpecError::Invalid { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

impl Pos {
    fn syntax(self, message: impl Into<String>) -> SpecError {
        SpecError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn invalid(self, message: impl Into<String>) -> SpecError {
        SpecError::Invalid {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }
}

struct TypeDecl {
    pos: Pos,
    name: String,
    values: Vec<(Pos, String)>,
}

struct ArgDecl {
    name_pos: Pos,
    type_pos: Pos,
    name: String,
    type_name: String,
}

struct ScDecl {
    /// Position of the first character inside the quotes.
    body: Pos,
    text: String,
}

struct ApiDecl {
    name_pos: Pos,
    name: String,
    args: Vec<ArgDecl>,
    description: String,
    scs: Vec<ScDecl>,
}

struct Cursor {
    chars: Vec<char>,
    at: usize,
    line: usize,
}

impl Cursor {
    fn new(line: usize, src: &str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            at: 0,
            line,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.at + 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn skip_ws(&mut self) -> usize {
        let start = self.at;
        while self.peek().is_some_and(char::is_whitespace) {
            self.at += 1;
        }
        self.at - start
    }

    fn at_end_or_comment(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), None | Some('#'))
    }

    fn expect(&mut self, c: char) -> Result<(), SpecError> {
        self.skip_ws();
        match self.peek() {
            Some(got) if got == c => {
                self.at += 1;
                Ok(())
            }
            Some(got) => Err(self.pos().syntax(format!("expected `{c}`, found `{got}`"))),
            None => Err(self.pos().syntax(format!("expected `{c}`, found end of line"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(Pos, String), SpecError> {
        self.skip_ws();
        let pos = self.pos();
        let start = self.at;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || c == '_')
        {
            self.at += 1;
        }
        if start == self.at || self.chars[start].is_numeric() {
            return Err(pos.syntax(format!("expected {what}")));
        }
        Ok((pos, self.chars[start..self.at].iter().collect()))
    }

    fn string(&mut self, what: &str) -> Result<(Pos, String), SpecError> {
        self.skip_ws();
        let open = self.pos();
        if self.peek() != Some('"') {
            return Err(open.syntax(format!("expected quoted {what}")));
        }
        self.at += 1;
        let body = self.pos();
        let start = self.at;
        while let Some(c) = self.peek() {
            if c == '"' {
                let text = self.chars[start..self.at].iter().collect();
                self.at += 1;
                return Ok((body, text));
            }
            self.at += 1;
        }
        Err(open.syntax(format!("unterminated {what}")))
    }

    fn finish(&mut self) -> Result<(), SpecError> {
        if self.at_end_or_comment() {
            Ok(())
        } else {
            Err(self.pos().syntax("unexpected trailing input"))
        }
    }
}

fn parse_type(cur: &mut Cursor) -> Result<TypeDecl, SpecError> {
    let (pos, name) = cur.ident("type name")?;
    cur.expect('=')?;
    cur.expect('{')?;
    let mut values = Vec::new();
    loop {
        cur.skip_ws();
        let vpos = cur.pos();
        let start = cur.at;
        while cur.peek().is_some_and(|c| c != ',' && c != '}') {
            cur.at += 1;
        }
        let raw: String = cur.chars[start..cur.at].iter().collect();
        match cur.peek() {
            None => return Err(cur.pos().syntax("unterminated value list, expected `}`")),
            Some(sep) => {
                let trimmed = raw.trim();
                if trimmed.is_empty() {
                    if sep == ',' || !values.is_empty() {
                        return Err(vpos.syntax("empty value in list"));
                    }
                } else {
                    values.push((vpos, trimmed.to_string()));
                }
                cur.at += 1;
                if sep == '}' {
                    break;
                }
            }
        }
    }
    cur.finish()?;
    Ok(TypeDecl { pos, name, values })
}

fn parse_api(cur: &mut Cursor) -> Result<ApiDecl, SpecError> {
    let (name_pos, name) = cur.ident("api name")?;
    cur.expect('(')?;
    let mut args = Vec::new();
    cur.skip_ws();
    if cur.peek() == Some(')') {
        cur.at += 1;
    } else {
        loop {
            let (arg_pos, arg) = cur.ident("argument name")?;
            cur.expect(':')?;
            let (type_pos, type_name) = cur.ident("argument type")?;
            args.push(ArgDecl {
                name_pos: arg_pos,
                type_pos,
                name: arg,
                type_name,
            });
            cur.skip_ws();
            match cur.peek() {
                Some(',') => cur.at += 1,
                Some(')') => {
                    cur.at += 1;
                    break;
                }
                _ => return Err(cur.pos().syntax("expected `,` or `)`")),
            }
        }
    }
    let (desc_pos, description) = cur.string("description")?;
    if description.trim().is_empty() {
        return Err(desc_pos.invalid("api description is empty"));
    }
    cur.finish()?;
    Ok(ApiDecl {
        name_pos,
        name,
        args,
        description: description.trim().to_string(),
        scs: Vec::new(),
    })
}

/// Parses spec source into a knowledge base. Either the whole source is valid
/// or the first diagnostic is returned.
pub fn parse_spec(text: &str) -> Result<KnowledgeBase, SpecError> {
    let mut types: Vec<TypeDecl> = Vec::new();
    let mut apis: Vec<ApiDecl> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let mut cur = Cursor::new(idx + 1, raw_line);
        let indent = cur.skip_ws();
        if cur.at_end_or_comment() {
            continue;
        }
        let (kw_pos, keyword) = cur.ident("`type`, `api` or `sc`")?;
        match keyword.as_str() {
            "type" | "api" if indent > 0 => {
                return Err(kw_pos.syntax(format!("`{keyword}` must not be indented")));
            }
            "type" => types.push(parse_type(&mut cur)?),
            "api" => apis.push(parse_api(&mut cur)?),
            "sc" => {
                if indent == 0 {
                    return Err(kw_pos.syntax("`sc` must be indented under an `api`"));
                }
                let api = apis
                    .last_mut()
                    .ok_or_else(|| kw_pos.syntax("`sc` before any `api`"))?;
                let (body, text) = cur.string("seed command")?;
                cur.finish()?;
                api.scs.push(ScDecl { body, text });
            }
            other => return Err(kw_pos.syntax(format!("unknown keyword `{other}`"))),
        }
    }

    build(types, apis)
}

fn build(types: Vec<TypeDecl>, apis: Vec<ApiDecl>) -> Result<KnowledgeBase, SpecError> {
    let mut kb = KnowledgeBase::new();
    let mut type_lines: BTreeMap<String, Pos> = BTreeMap::new();

    for decl in &types {
        if type_lines.contains_key(&decl.name) {
            return Err(decl.pos.invalid(format!("type `{}` declared twice", decl.name)));
        }
        type_lines.insert(decl.name.clone(), decl.pos);
        for (vpos, value) in &decl.values {
            let n = normalize(value).len();
            if n == 0 {
                return Err(vpos.syntax("empty value in list"));
            }
            if n > super::MAX_PHRASE_TOKENS {
                return Err(vpos.invalid(format!(
                    "value `{value}` has {n} tokens (max {})",
                    super::MAX_PHRASE_TOKENS
                )));
            }
        }
        let values: Vec<&str> = decl.values.iter().map(|(_, v)| v.as_str()).collect();
        kb.add_type(&decl.name, &values)
            .map_err(|e| decl.pos.invalid(e.to_string()))?;
    }

    let mut seen_apis: BTreeSet<&str> = BTreeSet::new();
    for decl in &apis {
        if !seen_apis.insert(&decl.name) {
            return Err(SpecError::DuplicateApi {
                line: decl.name_pos.line,
                col: decl.name_pos.col,
                name: decl.name.clone(),
            });
        }
        let mut arg_names = BTreeSet::new();
        for arg in &decl.args {
            if !is_variable_name(&arg.name) {
                return Err(arg
                    .name_pos
                    .invalid(format!("argument name `{}` must look like `X1`", arg.name)));
            }
            if !arg_names.insert(arg.name.as_str()) {
                return Err(arg.name_pos.invalid(format!("argument `{}` repeated", arg.name)));
            }
            match kb.gazetteer(&arg.type_name) {
                None => {
                    return Err(SpecError::UnknownType {
                        line: arg.type_pos.line,
                        col: arg.type_pos.col,
                        name: arg.type_name.clone(),
                    })
                }
                Some(g) if g.values.is_empty() => {
                    let at = type_lines[&arg.type_name];
                    return Err(at.invalid(format!(
                        "type `{}` is used by `{}` but has no values",
                        arg.type_name, decl.name
                    )));
                }
                Some(_) => {}
            }
        }
        kb.add_api(ApiSpec {
            api_id: decl.name.clone(),
            args: decl
                .args
                .iter()
                .map(|a| ArgSpec {
                    name: a.name.clone(),
                    type_name: a.type_name.clone(),
                })
                .collect(),
            description: decl.description.clone(),
        })
        .map_err(|e| decl.name_pos.invalid(e.to_string()))?;

        for sc in &decl.scs {
            let tokens = template_tokens(sc, decl, &arg_names)?;
            let command = SeedCommand::from_tokens(&decl.name, tokens, Provenance::Authored);
            kb.add_seed_command(command).map_err(|e| match e {
                KbError::InvariantViolation(m) => sc.body.invalid(m),
                other => sc.body.invalid(other.to_string()),
            })?;
        }
    }

    kb.validate()
        .map_err(|e| Pos { line: 1, col: 1 }.invalid(e.to_string()))?;
    Ok(kb)
}

fn template_tokens(
    sc: &ScDecl,
    api: &ApiDecl,
    arg_names: &BTreeSet<&str>,
) -> Result<Vec<Token>, SpecError> {
    let mut tokens = Vec::new();
    let mut vars = BTreeSet::new();
    let chars: Vec<char> = sc.text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let raw: String = chars[start..i].iter().collect();
        let at = Pos {
            line: sc.body.line,
            col: sc.body.col + start,
        };
        let trimmed = raw.trim_matches(|c: char| c.is_ascii_punctuation() && c != '_');
        if arg_names.contains(trimmed) {
            if !vars.insert(trimmed.to_string()) {
                return Err(at.invalid(format!("variable `{trimmed}` appears twice")));
            }
            tokens.push(Token::Var(trimmed.to_string()));
        } else if is_variable_name(trimmed) {
            return Err(SpecError::UnboundVariable {
                line: at.line,
                col: at.col,
                name: trimmed.to_string(),
                api: api.name.clone(),
            });
        } else {
            tokens.extend(normalize(&raw).into_iter().map(Token::Word));
        }
    }
    if tokens.is_empty() {
        return Err(sc.body.invalid("seed command is empty"));
    }
    if !tokens.iter().any(|t| matches!(t, Token::Word(_))) {
        return Err(sc.body.invalid("seed command needs at least one word besides variables"));
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::LIGHTS_SPEC;
    use super::*;

    #[test]
    fn parses_light_control_spec() {
        let kb = parse_spec(LIGHTS_SPEC).unwrap();
        assert_eq!(kb.api_count(), 3);
        assert_eq!(kb.seed_command_count(), 6);
        let change = kb.seed_commands_for("ChangeLightColor");
        assert_eq!(change[0].template(), "change the X1 light to X2");
        assert_eq!(change[1].template(), "i want X1 light to be X2");
        assert_eq!(change[0].sc_id, "ChangeLightColor:001");
        assert!(kb.gazetteer("location").unwrap().contains("living room"));
        let api = kb.api("ChangeLightColor").unwrap();
        assert_eq!(api.args[1].type_name, "color");
        assert_eq!(api.description, "change the color of the light");
    }

    #[test]
    fn empty_source_is_an_empty_kb() {
        let kb = parse_spec("").unwrap();
        assert!(kb.is_empty());
        kb.validate().unwrap();
        assert!(parse_spec("\n  # nothing\n\n").unwrap().is_empty());
    }

    #[test]
    fn unbound_variable_reports_its_line() {
        let src = "type location = { kitchen }\ntype color = { blue }\n\
                   api ChangeLightColor(X1: location, X2: color) \"change the color\"\n\
                   \x20   sc \"Change the X1 light to X9\"\n";
        let err = parse_spec(src).unwrap_err();
        assert_eq!(
            err,
            SpecError::UnboundVariable {
                line: 4,
                col: 32,
                name: "X9".into(),
                api: "ChangeLightColor".into()
            }
        );
        // oracle: X9 is not in the signature
        assert!(!["X1", "X2"].contains(&"X9"));
    }

    #[test]
    fn unknown_type() {
        let src = "api Go(X1: place) \"go to X1\"\n    sc \"go to X1\"\n";
        assert_eq!(
            parse_spec(src).unwrap_err(),
            SpecError::UnknownType {
                line: 1,
                col: 12,
                name: "place".into()
            }
        );
    }

    #[test]
    fn duplicate_api() {
        let src = "api Ping() \"ping\"\n    sc \"ping\"\napi Ping() \"ping again\"\n";
        assert_eq!(
            parse_spec(src).unwrap_err(),
            SpecError::DuplicateApi {
                line: 3,
                col: 5,
                name: "Ping".into()
            }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let cases = [
            ("bogus line", (1, 1)),
            ("type color = { red, blue", (1, 25)),
            ("api Ping( \"ping\"", (1, 11)),
            ("api Ping() ping", (1, 12)),
            ("sc \"orphan\"", (1, 1)),
            ("    sc \"orphan\"", (1, 5)),
            ("api Ping() \"ping\"\nsc \"not indented\"", (2, 1)),
            ("api Ping() \"ping\"\n    sc \"unterminated", (2, 8)),
            ("type color = { red,, blue }", (1, 20)),
            ("api Ping() \"ping\" extra", (1, 19)),
        ];
        for (src, pos) in cases {
            let err = parse_spec(src).unwrap_err();
            assert!(matches!(err, SpecError::Syntax { .. }), "{src}: {err}");
            assert_eq!(err.position(), pos, "{src}: {err}");
        }
    }

    #[test]
    fn semantic_errors() {
        // referenced type with no values
        let err = parse_spec("type t = {}\napi A(X1: t) \"a\"\n    sc \"do X1\"").unwrap_err();
        assert_eq!(err.position(), (1, 6));
        // too-long value
        let err = parse_spec("type t = { one two three four five }").unwrap_err();
        assert_eq!(err.position(), (1, 12));
        // all-variable seed command
        let err = parse_spec("type t = { x }\napi A(X1: t) \"a\"\n    sc \"X1\"").unwrap_err();
        assert_eq!(err.position(), (3, 9));
        // repeated variable
        let err =
            parse_spec("type t = { x }\napi A(X1: t) \"a\"\n    sc \"X1 and X1\"").unwrap_err();
        assert_eq!(err.position(), (3, 16));
        // argument naming
        let err = parse_spec("type t = { x }\napi A(loc: t) \"a\"").unwrap_err();
        assert_eq!(err.position(), (2, 7));
    }

    #[test]
    fn types_may_follow_apis_and_comments_trail() {
        let src = "api A(X1: t) \"a\" # trailing\n    sc \"do X1 now\"\ntype t = { x, y z }";
        let kb = parse_spec(src).unwrap();
        assert_eq!(kb.seed_commands_for("A")[0].template(), "do X1 now");
        assert!(kb.gazetteer("t").unwrap().contains("y z"));
    }

    #[test]
    fn duplicate_seed_commands_collapse() {
        let src = "api A() \"a\"\n    sc \"Do it\"\n    sc \"do it.\"";
        assert_eq!(parse_spec(src).unwrap().seed_command_count(), 1);
    }
}
