//! Score files (`trial_index score`) and naive score-sum fusion.

use std::fmt::Write as _;

use super::MetricsError;
use crate::fmt::sig;

pub fn write_scores(scores: &[(usize, f64)]) -> String {
    let mut s = String::new();
    for (i, v) in scores {
        let _ = writeln!(s, "{i} {}", sig(*v, 9));
    }
    s
}

pub fn parse_scores(text: &str) -> Result<Vec<(usize, f64)>, MetricsError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| MetricsError::ScoreFile { line, message };
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if f.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", f.len())));
        }
        let idx = f[0]
            .parse()
            .map_err(|_| err(format!("bad trial index {:?}", f[0])))?;
        let score: f64 = f[1]
            .parse()
            .map_err(|_| err(format!("bad score {:?}", f[1])))?;
        if !score.is_finite() {
            return Err(err("non-finite score".into()));
        }
        out.push((idx, score));
    }
    Ok(out)
}

/// Elementwise sum of two aligned score lists, without calibration.
pub fn score_sum_baseline(
    asv: &[(usize, f64)],
    cm: &[(usize, f64)],
) -> Result<Vec<(usize, f64)>, MetricsError> {
    if asv.len() != cm.len() {
        return Err(MetricsError::InvalidArgument(format!(
            "score lists differ in length: {} vs {}",
            asv.len(),
            cm.len()
        )));
    }
    asv.iter()
        .zip(cm)
        .enumerate()
        .map(|(line, (&(ia, a), &(ic, c)))| {
            if ia == ic {
                Ok((ia, a + c))
            } else {
                Err(MetricsError::Misaligned {
                    line: line + 1,
                    left: ia,
                    right: ic,
                })
            }
        })
        .collect()
}
