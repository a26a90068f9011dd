//! The protection map and its file formats.

use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::Condition;
use crate::frontend::MethodRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Native,
    Java,
    Mixed,
}

impl Origin {
    fn parse(s: &str) -> Option<Origin> {
        match s {
            "NATIVE" => Some(Origin::Native),
            "JAVA" => Some(Origin::Java),
            "MIXED" => Some(Origin::Mixed),
            _ => None,
        }
    }

    pub fn merge(self, other: Origin) -> Origin {
        if self == other {
            self
        } else {
            Origin::Mixed
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Native => "NATIVE",
            Origin::Java => "JAVA",
            Origin::Mixed => "MIXED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtectionEntry {
    pub api: MethodRef,
    pub origin: Origin,
    pub condition: Condition,
    /// Path budget exceeded; the condition over-approximates.
    pub approximate: bool,
    /// Only set in per-path mode: the node ids of the witnessing path.
    pub path: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProtectionMap {
    pub corpus_id: String,
    pub entries: Vec<ProtectionEntry>,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{pointer}: {why}")]
    Schema { pointer: String, why: String },
}

fn schema(pointer: impl Into<String>, why: impl Into<String>) -> MapError {
    MapError::Schema { pointer: pointer.into(), why: why.into() }
}

impl ProtectionMap {
    pub fn get(&self, api: &MethodRef) -> Option<&ProtectionEntry> {
        self.entries.iter().find(|e| &e.api == api)
    }

    pub fn remove(&mut self, api: &MethodRef) -> Option<ProtectionEntry> {
        let i = self.entries.iter().position(|e| &e.api == api)?;
        Some(self.entries.remove(i))
    }

    /// Sort by api, then by witness path.
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| (a.api.to_string(), &a.path).cmp(&(b.api.to_string(), &b.path)));
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let mut o = Map::new();
                o.insert("api".into(), json!(e.api.to_string()));
                o.insert("origin".into(), json!(e.origin.to_string()));
                o.insert("condition".into(), e.condition.to_json());
                if e.approximate {
                    o.insert("approximate".into(), json!(true));
                }
                if let Some(p) = &e.path {
                    o.insert("path".into(), json!(p));
                }
                Value::Object(o)
            })
            .collect();
        json!({"corpus_id": self.corpus_id, "entries": entries})
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s.into_bytes()
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["api", "condition"]).expect("in-memory write");
        for e in &self.entries {
            w.write_record([e.api.to_string(), e.condition.infix()]).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    pub fn from_json_str(text: &str) -> Result<ProtectionMap, MapError> {
        let v: Value = serde_json::from_str(text)?;
        let top = v.as_object().ok_or_else(|| schema("", "expected object"))?;
        let corpus_id = match top.get("corpus_id") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(schema("/corpus_id", "expected string")),
            None => String::new(),
        };
        let list = top
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("/entries", "expected array"))?;
        let mut entries = Vec::new();
        for (i, item) in list.iter().enumerate() {
            let at = |k: &str| format!("/entries/{i}/{k}");
            let o = item.as_object().ok_or_else(|| schema(format!("/entries/{i}"), "expected object"))?;
            let api = o
                .get("api")
                .and_then(Value::as_str)
                .and_then(MethodRef::parse)
                .ok_or_else(|| schema(at("api"), "expected method reference pkg.Class.method/arity"))?;
            let origin = match o.get("origin") {
                None => Origin::Native,
                Some(v) => v.as_str().and_then(Origin::parse).ok_or_else(|| schema(at("origin"), "unknown origin"))?,
            };
            let condition = o
                .get("condition")
                .ok_or_else(|| schema(at("condition"), "missing"))
                .and_then(|c| Condition::from_json(c).map_err(|e| schema(at("condition"), e.to_string())))?
                .normalize();
            let approximate = o.get("approximate").and_then(Value::as_bool).unwrap_or(false);
            let path = match o.get("path") {
                None => None,
                Some(p) => Some(
                    p.as_array()
                        .and_then(|a| a.iter().map(|x| x.as_u64().map(|n| n as usize)).collect::<Option<Vec<_>>>())
                        .ok_or_else(|| schema(at("path"), "expected array of node ids"))?,
                ),
            };
            entries.push(ProtectionEntry { api, origin, condition, approximate, path });
        }
        Ok(ProtectionMap { corpus_id, entries })
    }
}
