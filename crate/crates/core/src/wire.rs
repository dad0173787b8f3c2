//! Turn messages shared by the transcript, the HTTP service and the chat
//! front end.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::kb::ApiId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sender {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionItem {
    /// 1-based, as shown to the user.
    pub index: usize,
    pub api_id: ApiId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TurnBody {
    Text {
        text: String,
    },
    OptionList {
        intro: String,
        options: Vec<OptionItem>,
    },
    ArgPrompt {
        arg: String,
        type_name: String,
        prompt: String,
    },
    ExecuteNotice {
        api_id: ApiId,
        args: BTreeMap<String, String>,
        text: String,
    },
}

impl TurnBody {
    pub fn text(text: impl Into<String>) -> Self {
        TurnBody::Text { text: text.into() }
    }

    /// Display lines, as the REPL prints them. Option lists read as one
    /// sentence: "..., or" after the first option, "," after middle ones and
    /// "?" after the last.
    pub fn lines(&self) -> Vec<String> {
        match self {
            TurnBody::Text { text } => vec![text.clone()],
            TurnBody::ArgPrompt { prompt, .. } => vec![prompt.clone()],
            TurnBody::ExecuteNotice { text, .. } => vec![text.clone()],
            TurnBody::OptionList { intro, options } => {
                let mut out = vec![intro.clone()];
                let n = options.len();
                for (i, opt) in options.iter().enumerate() {
                    let tail = if i + 1 == n {
                        "?"
                    } else if i == 0 {
                        ", or"
                    } else {
                        ","
                    };
                    out.push(format!("option-{}. {}{}", opt.index, opt.text, tail));
                }
                out
            }
        }
    }
}

/// Turn record as exchanged with clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireTurn {
    pub session_id: String,
    pub seq: u64,
    pub sender: Sender,
    pub body: TurnBody,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_list_punctuation() {
        let body = TurnBody::OptionList {
            intro: "Do you mean to:".into(),
            options: (1..=3)
                .map(|i| OptionItem {
                    index: i,
                    api_id: format!("A{i}"),
                    text: format!("do {i}"),
                })
                .collect(),
        };
        assert_eq!(
            body.lines(),
            ["Do you mean to:", "option-1. do 1, or", "option-2. do 2,", "option-3. do 3?"]
        );
    }

    #[test]
    fn wire_shape() {
        let turn = WireTurn {
            session_id: "s1".into(),
            seq: 2,
            sender: Sender::Agent,
            body: TurnBody::ArgPrompt {
                arg: "X1".into(),
                type_name: "location".into(),
                prompt: "Which location?".into(),
            },
        };
        let v = serde_json::to_value(&turn).unwrap();
        assert_eq!(v["sender"], "agent");
        assert_eq!(v["body"]["type"], "arg_prompt");
        assert_eq!(v["body"]["arg"], "X1");
        let back: WireTurn = serde_json::from_value(v).unwrap();
        assert_eq!(back, turn);
    }
}
