//! Loading and saving the files the CLI works with.

use std::fs;
use std::path::{Path, PathBuf};

use nlcmd_core::{load_kb, parse_spec, save_kb, Config, KnowledgeBase};

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let config: Config =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    config
        .thresholds()
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    Ok(config)
}

pub fn compile_spec(path: &Path) -> Result<KnowledgeBase, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::KbUnavailable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_spec(&text).map_err(|e| CliError::KbUnavailable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_kb_file(path: &Path) -> Result<KnowledgeBase, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::KbUnavailable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    load_kb(&bytes).map_err(|e| CliError::KbUnavailable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// The KB comes from a saved file or is compiled from a seed spec; exactly
/// one of the two must be given.
pub fn open_kb(kb: Option<&Path>, seed_spec: Option<&Path>) -> Result<KnowledgeBase, CliError> {
    match (kb, seed_spec) {
        (Some(p), None) => load_kb_file(p),
        (None, Some(p)) => compile_spec(p),
        (Some(_), Some(_)) => Err(CliError::Usage("give either --kb or --seed-spec, not both".into())),
        (None, None) => Err(CliError::Usage("a knowledge base is required (--kb or --seed-spec)".into())),
    }
}

/// Writes through a temporary file in the same directory, so a crash never
/// leaves a half-written KB behind.
pub fn save_kb_file(path: &Path, kb: &KnowledgeBase) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = PathBuf::from(path);
    let name = format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    );
    tmp.set_file_name(name);
    fs::write(&tmp, save_kb(kb)).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let spec = dir.path().join("a.scs");
        fs::write(&spec, "type t = { x }\napi A(X1: t) \"do X1\"\n    sc \"do X1\"\n").unwrap();
        let kb = open_kb(None, Some(&spec)).unwrap();
        let out = dir.path().join("kb.json");
        save_kb_file(&out, &kb).unwrap();
        assert_eq!(load_kb_file(&out).unwrap(), kb);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn missing_kb_is_a_usage_error() {
        let err = open_kb(Some(Path::new("/nonexistent/kb.json")), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(open_kb(None, None).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn partial_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "k = 2\nweighting = \"uniform\"\n").unwrap();
        let c = load_config(Some(&p)).unwrap();
        assert_eq!(c.k, 2);
        assert_eq!(c.question_budget, 4);
        fs::write(&p, "kk = 2\n").unwrap();
        assert!(load_config(Some(&p)).is_err());
    }
}
