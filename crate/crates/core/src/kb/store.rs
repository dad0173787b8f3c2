//! KB file persistence.
//!
//! A KB file is a pretty-printed JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "kb_version": 12,
//!   "apis": [ { "api_id", "args": [ { "name", "type_name" } ], "description" } ],
//!   "seed_commands": [ { "sc_id", "api_id", "template", "covered_args", "provenance" } ],
//!   "gazetteers": [ { "type_name", "values": { "<phrase>": "authored" | "learned" } } ],
//!   "usage": [ { "context": "start" | { "api": "<id>" }, "api_id", "count" } ]
//! }
//! ```
//!
//! Seed commands appear grouped by API in insertion order, so ids and ordering
//! survive a round trip.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ApiSpec, Context, KbError, KnowledgeBase, SeedCommand, TypeGazetteer};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbFile {
    format_version: u64,
    kb_version: u64,
    apis: Vec<ApiSpec>,
    seed_commands: Vec<SeedCommand>,
    gazetteers: Vec<TypeGazetteer>,
    usage: Vec<UsageRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UsageRecord {
    context: Context,
    api_id: String,
    count: u64,
}

pub fn save_kb(kb: &KnowledgeBase) -> Vec<u8> {
    let file = KbFile {
        format_version: FORMAT_VERSION,
        kb_version: kb.version,
        apis: kb.apis.values().cloned().collect(),
        seed_commands: kb.seed_commands.values().flatten().cloned().collect(),
        gazetteers: kb.gazetteers.values().cloned().collect(),
        usage: kb
            .usage
            .iter()
            .map(|((context, api_id), count)| UsageRecord {
                context: context.clone(),
                api_id: api_id.clone(),
                count: *count,
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("kb serializes");
    out.push(b'\n');
    out
}

pub fn load_kb(bytes: &[u8]) -> Result<KnowledgeBase, KbError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| KbError::CorruptFile(e.to_string()))?;
    let format = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| KbError::CorruptFile("missing format_version".into()))?;
    if format != FORMAT_VERSION {
        return Err(KbError::UnsupportedVersion(format));
    }
    let file: KbFile =
        serde_json::from_value(value).map_err(|e| KbError::CorruptFile(e.to_string()))?;

    let mut kb = KnowledgeBase {
        version: file.kb_version,
        ..KnowledgeBase::default()
    };
    for gaz in file.gazetteers {
        if kb.gazetteers.insert(gaz.type_name.clone(), gaz).is_some() {
            return Err(KbError::CorruptFile("duplicate gazetteer".into()));
        }
    }
    for api in file.apis {
        kb.seed_commands.entry(api.api_id.clone()).or_default();
        let id = api.api_id.clone();
        if kb.apis.insert(id.clone(), api).is_some() {
            return Err(KbError::CorruptFile(format!("duplicate api `{id}`")));
        }
    }
    for sc in file.seed_commands {
        kb.seed_commands
            .get_mut(&sc.api_id)
            .ok_or_else(|| KbError::CorruptFile(format!("seed command for unknown api `{}`", sc.api_id)))?
            .push(sc);
    }
    let mut usage = BTreeMap::new();
    for rec in file.usage {
        if usage.insert((rec.context, rec.api_id), rec.count).is_some() {
            return Err(KbError::CorruptFile("duplicate usage record".into()));
        }
    }
    kb.usage = usage;
    kb.validate()
        .map_err(|e| KbError::CorruptFile(e.to_string()))?;
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::lights;
    use super::super::{Provenance, SeedCommand};
    use super::*;

    fn taught() -> KnowledgeBase {
        let mut kb = lights();
        kb.add_seed_command(SeedCommand::from_template(
            "SwitchOffLight",
            "turn off the light in X1",
            Provenance::Learned {
                session_id: "sess-7".into(),
                timestamp: 1_700_000_000_123,
            },
        ))
        .unwrap();
        kb.add_gazetteer_value("location", "hallway").unwrap();
        kb.record_usage(&Context::Start, "SwitchOffLight").unwrap();
        kb.record_usage(&Context::Api("SwitchOffLight".into()), "SwitchOnLight")
            .unwrap();
        kb
    }

    #[test]
    fn round_trip_authored() {
        let kb = lights();
        assert_eq!(load_kb(&save_kb(&kb)).unwrap(), kb);
    }

    #[test]
    fn round_trip_preserves_provenance() {
        let kb = taught();
        let bytes = save_kb(&kb);
        let back = load_kb(&bytes).unwrap();
        assert_eq!(back, kb);
        let sc = &back.seed_commands_for("SwitchOffLight")[2];
        assert_eq!(
            sc.provenance,
            Provenance::Learned {
                session_id: "sess-7".into(),
                timestamp: 1_700_000_000_123
            }
        );
        // re-saving is byte-identical
        assert_eq!(save_kb(&back), bytes);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = save_kb(&taught());
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(load_kb(cut), Err(KbError::CorruptFile(_))));
        assert!(matches!(load_kb(b""), Err(KbError::CorruptFile(_))));
    }

    #[test]
    fn unsupported_format_version() {
        let text = String::from_utf8(save_kb(&lights())).unwrap();
        let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert_eq!(load_kb(bumped.as_bytes()), Err(KbError::UnsupportedVersion(9)));
    }

    #[test]
    fn dangling_reference_is_corrupt() {
        let text = String::from_utf8(save_kb(&taught())).unwrap();
        let broken = text.replacen("\"type_name\": \"color\"", "\"type_name\": \"colour\"", 1);
        assert!(matches!(load_kb(broken.as_bytes()), Err(KbError::CorruptFile(_))));
    }
}
