//! CSV exports with one row per utterance.

use std::fmt::Write as _;

use crate::fmt::sig;
use crate::model::Utterance;

pub fn cluster_csv(utts: &[Utterance], clusters: &[usize]) -> String {
    let mut s = String::from("id,speaker,source,cluster\n");
    for (u, c) in utts.iter().zip(clusters) {
        let _ = writeln!(s, "{},{},{},{c}", u.id, u.speaker, u.source);
    }
    s
}

pub fn projection_csv(utts: &[Utterance], coords: &[[f64; 2]]) -> String {
    let mut s = String::from("id,speaker,source,x,y\n");
    for (u, [x, y]) in utts.iter().zip(coords) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            u.id,
            u.speaker,
            u.source,
            sig(*x, 9),
            sig(*y, 9)
        );
    }
    s
}
