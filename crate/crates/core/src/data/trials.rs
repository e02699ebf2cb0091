//! SASV trial lists: three enrolment utterances of a claimed speaker and one
//! test utterance labelled target, nontarget or spoof.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DataError;
use crate::model::Utterance;

pub const ENROLL_PER_SPEAKER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrialLabel {
    Target,
    Nontarget,
    Spoof,
}

impl TrialLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialLabel::Target => "target",
            TrialLabel::Nontarget => "nontarget",
            TrialLabel::Spoof => "spoof",
        }
    }
}

impl FromStr for TrialLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "target" => Ok(TrialLabel::Target),
            "nontarget" => Ok(TrialLabel::Nontarget),
            "spoof" => Ok(TrialLabel::Spoof),
            other => Err(format!("unknown trial label {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub enroll: Vec<String>,
    pub test: String,
    pub label: TrialLabel,
}

/// How many trials of each kind to draw; `None` keeps every candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrialPlan {
    pub target: Option<usize>,
    pub nontarget: Option<usize>,
    pub spoof: Option<usize>,
}

fn take(
    pool: Vec<(usize, usize)>,
    want: Option<usize>,
    kind: &str,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, DataError> {
    let Some(n) = want else { return Ok(pool) };
    if n > pool.len() {
        return Err(DataError::Insufficient(format!(
            "{n} {kind} trials requested, {} available",
            pool.len()
        )));
    }
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.shuffle(rng);
    let mut chosen = idx[..n].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pool[i]).collect())
}

/// Builds trials over one split. Every speaker with at least four bonafide
/// utterances is enrolled with three of them; enrolment utterances are never
/// used as test utterances. Spoof trials claim the speaker the spoof imitates.
pub fn build_trials(
    utts: &[Utterance],
    plan: TrialPlan,
    seed: u64,
) -> Result<Vec<TrialRecord>, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bonafide: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, u) in utts.iter().enumerate() {
        if u.source.is_bonafide() {
            bonafide.entry(u.speaker).or_default().push(i);
        }
    }
    let mut enroll: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&spk, list) in &bonafide {
        if list.len() > ENROLL_PER_SPEAKER {
            let mut l = list.clone();
            l.shuffle(&mut rng);
            let mut e = l[..ENROLL_PER_SPEAKER].to_vec();
            e.sort_unstable();
            enroll.insert(spk, e);
        }
    }
    if enroll.is_empty() {
        return Err(DataError::Insufficient(
            "no speaker has four bonafide utterances to enrol".into(),
        ));
    }
    let enrolled: HashSet<usize> = enroll.values().flatten().copied().collect();

    let mut target = Vec::new();
    let mut nontarget = Vec::new();
    let mut spoof = Vec::new();
    for &spk in enroll.keys() {
        for (i, u) in utts.iter().enumerate() {
            if enrolled.contains(&i) {
                continue;
            }
            match (u.source.is_bonafide(), u.speaker == spk) {
                (true, true) => target.push((spk, i)),
                (true, false) => nontarget.push((spk, i)),
                (false, true) => spoof.push((spk, i)),
                (false, false) => {}
            }
        }
    }
    let target = take(target, plan.target, "target", &mut rng)?;
    let nontarget = take(nontarget, plan.nontarget, "nontarget", &mut rng)?;
    let spoof = take(spoof, plan.spoof, "spoof", &mut rng)?;

    let record = |(spk, i): (usize, usize), label| TrialRecord {
        enroll: enroll[&spk].iter().map(|&e| utts[e].id.clone()).collect(),
        test: utts[i].id.clone(),
        label,
    };
    let mut out = Vec::with_capacity(target.len() + nontarget.len() + spoof.len());
    out.extend(target.into_iter().map(|t| record(t, TrialLabel::Target)));
    out.extend(
        nontarget
            .into_iter()
            .map(|t| record(t, TrialLabel::Nontarget)),
    );
    out.extend(spoof.into_iter().map(|t| record(t, TrialLabel::Spoof)));
    Ok(out)
}

/// Recomputes a trial's label from the utterance metadata.
pub fn relabel(
    index: &HashMap<&str, &Utterance>,
    trial: &TrialRecord,
) -> Result<TrialLabel, DataError> {
    let get = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| DataError::UnknownUtterance(id.to_string()))
    };
    let claimed = get(&trial.enroll[0])?.speaker;
    let test = get(&trial.test)?;
    Ok(if !test.source.is_bonafide() {
        TrialLabel::Spoof
    } else if test.speaker == claimed {
        TrialLabel::Target
    } else {
        TrialLabel::Nontarget
    })
}

pub fn write_trials(trials: &[TrialRecord]) -> String {
    let mut s = String::new();
    for t in trials {
        let _ = writeln!(s, "{} {} {}", t.enroll.join(","), t.test, t.label.as_str());
    }
    s
}

pub fn parse_trials_str(text: &str) -> Result<Vec<TrialRecord>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| DataError::Trials { line, message };
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let enroll: Vec<String> = fields[0].split(',').map(str::to_string).collect();
        if enroll.iter().any(String::is_empty) {
            return Err(err("empty enrolment id".into()));
        }
        out.push(TrialRecord {
            enroll,
            test: fields[1].to_string(),
            label: fields[2].parse().map_err(err)?,
        });
    }
    Ok(out)
}

pub fn parse_trials(path: &Path) -> Result<Vec<TrialRecord>, DataError> {
    parse_trials_str(&std::fs::read_to_string(path)?)
}
