use std::fmt;
use std::str::FromStr;

use super::ModelError;
use crate::autograd::Tensor;

/// Spoof generation family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Tts,
    Vc,
}

/// Origin of an utterance: genuine speech or one of the six training attacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Bonafide,
    A01,
    A02,
    A03,
    A04,
    A05,
    A06,
}

impl Source {
    pub const ATTACKS: [Source; 6] = [
        Source::A01,
        Source::A02,
        Source::A03,
        Source::A04,
        Source::A05,
        Source::A06,
    ];

    pub fn is_bonafide(self) -> bool {
        self == Source::Bonafide
    }

    /// A01–A04 are text-to-speech, A05–A06 voice conversion.
    pub fn family(self) -> Option<Family> {
        match self {
            Source::Bonafide => None,
            Source::A01 | Source::A02 | Source::A03 | Source::A04 => Some(Family::Tts),
            Source::A05 | Source::A06 => Some(Family::Vc),
        }
    }

    /// Class index of the attack within its family's head.
    pub fn family_index(self) -> Option<usize> {
        match self {
            Source::Bonafide => None,
            Source::A01 => Some(0),
            Source::A02 => Some(1),
            Source::A03 => Some(2),
            Source::A04 => Some(3),
            Source::A05 => Some(0),
            Source::A06 => Some(1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Bonafide => "bonafide",
            Source::A01 => "A01",
            Source::A02 => "A02",
            Source::A03 => "A03",
            Source::A04 => "A04",
            Source::A05 => "A05",
            Source::A06 => "A06",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bonafide" => Ok(Source::Bonafide),
            "A01" => Ok(Source::A01),
            "A02" => Ok(Source::A02),
            "A03" => Ok(Source::A03),
            "A04" => Ok(Source::A04),
            "A05" => Ok(Source::A05),
            "A06" => Ok(Source::A06),
            other => Err(ModelError::UnknownSource(other.to_string())),
        }
    }
}

/// One sample: who it claims to be, where it came from, and the features
/// for each encoder branch (each a `1 x dim` row).
#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    /// For spoofed speech, the speaker being imitated.
    pub speaker: usize,
    pub source: Source,
    pub asv_features: Tensor,
    pub raw_features: Tensor,
}
