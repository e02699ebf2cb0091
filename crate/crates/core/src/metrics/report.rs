use std::fmt::Write as _;

use super::{MetricSuite, MetricsError};

/// Markdown table of EERs in percent with two decimals.
pub fn report_table(rows: &[(String, MetricSuite)]) -> Result<String, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::InvalidArgument(
            "report needs at least one row".into(),
        ));
    }
    let mut s = String::from("| Configuration | SASV | SV | SPF |\n|---|---:|---:|---:|\n");
    for (name, m) in rows {
        if name.trim().is_empty() {
            return Err(MetricsError::InvalidArgument(
                "empty configuration name".into(),
            ));
        }
        if name.contains(['|', '\n']) {
            return Err(MetricsError::InvalidArgument(format!(
                "configuration name {name:?} contains a table delimiter"
            )));
        }
        for v in [m.sasv_eer, m.sv_eer, m.spf_eer] {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetricsError::InvalidArgument(format!(
                    "EER {v} of {name:?} is outside [0, 1]"
                )));
            }
        }
        let _ = writeln!(
            s,
            "| {name} | {:.2} | {:.2} | {:.2} |",
            100.0 * m.sasv_eer,
            100.0 * m.sv_eer,
            100.0 * m.spf_eer
        );
    }
    Ok(s)
}
