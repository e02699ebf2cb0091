use serde::{Deserialize, Serialize};

use super::{eer_of, MetricsError, ScoredTrial};
use crate::data::TrialLabel;

/// The three SASV equal error rates (fractions in `[0, 1]`) and their
/// thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub sasv_eer: f64,
    pub sv_eer: f64,
    pub spf_eer: f64,
    pub sasv_threshold: f64,
    pub sv_threshold: f64,
    pub spf_threshold: f64,
}

/// SASV-EER over all trials, SV-EER over target and nontarget trials, and
/// SPF-EER over target and spoof trials. Targets are the only positives.
pub fn compute_metric_suite(scored: &[ScoredTrial]) -> Result<MetricSuite, MetricsError> {
    let has = |l: TrialLabel| scored.iter().any(|t| t.label == l);
    if !has(TrialLabel::Target) {
        return Err(MetricsError::EmptySubset("target"));
    }
    if !has(TrialLabel::Nontarget) {
        return Err(MetricsError::EmptySubset("SV (nontarget)"));
    }
    if !has(TrialLabel::Spoof) {
        return Err(MetricsError::EmptySubset("SPF (spoof)"));
    }
    let without = |drop: TrialLabel| -> Vec<ScoredTrial> {
        scored.iter().filter(|t| t.label != drop).copied().collect()
    };
    let sasv = eer_of(scored, TrialLabel::Target)?;
    let sv = eer_of(&without(TrialLabel::Spoof), TrialLabel::Target)?;
    let spf = eer_of(&without(TrialLabel::Nontarget), TrialLabel::Target)?;
    Ok(MetricSuite {
        sasv_eer: sasv.eer,
        sv_eer: sv.eer,
        spf_eer: spf.eer,
        sasv_threshold: sasv.threshold,
        sv_threshold: sv.threshold,
        spf_threshold: spf.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trials(rows: &[(f64, TrialLabel)]) -> Vec<ScoredTrial> {
        rows.iter()
            .enumerate()
            .map(|(i, &(score, label))| ScoredTrial {
                trial: i,
                score,
                label,
            })
            .collect()
    }

    #[test]
    fn oracle_scorer_is_perfect() {
        use TrialLabel::*;
        let t = trials(&[(1.0, Target), (0.0, Nontarget), (0.0, Spoof), (1.0, Target)]);
        let m = compute_metric_suite(&t).unwrap();
        assert_eq!((m.sasv_eer, m.sv_eer, m.spf_eer), (0.0, 0.0, 0.0));
    }

    #[test]
    fn missing_subset_is_named() {
        use TrialLabel::*;
        let t = trials(&[(1.0, Target), (0.0, Nontarget)]);
        match compute_metric_suite(&t) {
            Err(MetricsError::EmptySubset(name)) => assert!(name.contains("SPF")),
            other => panic!("expected an empty-subset error, got {other:?}"),
        }
    }

    #[test]
    fn json_keys() {
        use TrialLabel::*;
        let t = trials(&[(1.0, Target), (0.0, Nontarget), (0.5, Spoof)]);
        let v = serde_json::to_value(compute_metric_suite(&t).unwrap()).unwrap();
        for key in [
            "sasv_eer",
            "sv_eer",
            "spf_eer",
            "sasv_threshold",
            "sv_threshold",
            "spf_threshold",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
