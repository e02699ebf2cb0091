//! ASVspoof-style five-column protocol files:
//! `SPEAKER_ID UTT_ID ENV SYSTEM_ID KEY`.

use std::fmt::Write as _;
use std::path::Path;

use super::DataError;
use crate::model::Utterance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolKey {
    Bonafide,
    Spoof,
}

impl ProtocolKey {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKey::Bonafide => "bonafide",
            ProtocolKey::Spoof => "spoof",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolRecord {
    pub speaker_id: String,
    pub utt_id: String,
    /// Third column, kept verbatim (usually `-`).
    pub env: String,
    /// `None` when the column is `-`.
    pub system_id: Option<String>,
    pub key: ProtocolKey,
}

pub fn parse_protocol_str(text: &str) -> Result<Vec<ProtocolRecord>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| DataError::Protocol { line, message };
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let key = match fields[4] {
            "bonafide" => ProtocolKey::Bonafide,
            "spoof" => ProtocolKey::Spoof,
            other => return Err(err(format!("unknown key {other:?}"))),
        };
        let system_id = match fields[3] {
            "-" => None,
            s => Some(s.to_string()),
        };
        if key == ProtocolKey::Spoof && system_id.is_none() {
            return Err(err("spoof entry without a system id".into()));
        }
        out.push(ProtocolRecord {
            speaker_id: fields[0].to_string(),
            utt_id: fields[1].to_string(),
            env: fields[2].to_string(),
            system_id,
            key,
        });
    }
    Ok(out)
}

pub fn parse_protocol(path: &Path) -> Result<Vec<ProtocolRecord>, DataError> {
    parse_protocol_str(&std::fs::read_to_string(path)?)
}

pub fn write_protocol(records: &[ProtocolRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            r.speaker_id,
            r.utt_id,
            r.env,
            r.system_id.as_deref().unwrap_or("-"),
            r.key.as_str()
        );
    }
    s
}

/// Protocol view of a list of utterances.
pub fn protocol_records(utts: &[Utterance]) -> Vec<ProtocolRecord> {
    utts.iter()
        .map(|u| ProtocolRecord {
            speaker_id: format!("SPK_{:04}", u.speaker),
            utt_id: u.id.clone(),
            env: "-".into(),
            system_id: (!u.source.is_bonafide()).then(|| u.source.as_str().to_string()),
            key: if u.source.is_bonafide() {
                ProtocolKey::Bonafide
            } else {
                ProtocolKey::Spoof
            },
        })
        .collect()
}
