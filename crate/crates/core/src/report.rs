//! CSV tables and the JSON run summary.
//!
//! Numbers are written with nine decimals and no locale. Tables contain no
//! timings so reruns with the same seed are byte-identical.

use serde::Serialize;

use crate::credal::{BoundsResult, BoundsStatus, ConstraintSet, FarkasCertificate, GenerationStats};
use crate::events::TrajectorySpace;
use crate::measure::TrajectoryMeasure;
use crate::simplex::Relation;
use crate::typicality::{TypicalityReport, W11Report};

pub const CONSTRAINTS_HEADER: [&str; 5] = ["index", "rule", "relation", "rhs", "event"];
pub const CERTIFICATE_HEADER: [&str; 2] = ["trajectory_index", "probability"];
pub const FARKAS_HEADER: [&str; 6] = ["row", "constraint", "rule", "event", "rhs", "multiplier"];
pub const BOUNDS_HEADER: [&str; 4] = ["event", "lower", "upper", "status"];
pub const TYPICALITY_HEADER: [&str; 9] = [
    "pair",
    "weight",
    "distance",
    "relative_distance",
    "ratio",
    "epsilon",
    "qtr_fires",
    "threshold",
    "verdict",
];
pub const BRANCH_HEADER: [&str; 8] = [
    "branch",
    "sample",
    "expectation",
    "tail",
    "epsilon",
    "delta",
    "expectation_bound",
    "tail_bound",
];

/// Fixed nine-decimal rendering; values that round to zero print unsigned.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let s = format!("{x:.9}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn table<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn relation(r: Relation) -> &'static str {
    match r {
        Relation::Ge => ">=",
        Relation::Le => "<=",
        Relation::Eq => "=",
    }
}

pub fn constraints_csv(cs: &ConstraintSet) -> String {
    table(
        CONSTRAINTS_HEADER,
        cs.constraints.iter().enumerate().map(|(i, c)| {
            vec![
                i.to_string(),
                c.tag.to_string(),
                relation(c.relation).into(),
                num(c.rhs),
                c.text.clone(),
            ]
        }),
    )
}

pub fn certificate_csv(p: &TrajectoryMeasure) -> String {
    table(
        CERTIFICATE_HEADER,
        p.probs()
            .iter()
            .enumerate()
            .map(|(i, &x)| vec![i.to_string(), num(x)]),
    )
}

/// One row per lower-bound row, then `normalization` and `margin` rows
/// carrying their value in the last column.
pub fn farkas_csv(cs: &ConstraintSet, cert: &FarkasCertificate) -> String {
    let mut rows: Vec<Vec<String>> = cert
        .rows
        .iter()
        .zip(&cert.multipliers)
        .enumerate()
        .map(|(i, (r, &y))| {
            vec![
                i.to_string(),
                r.origin.to_string(),
                cs.constraints[r.origin].tag.to_string(),
                r.text.clone(),
                num(r.rhs),
                num(y),
            ]
        })
        .collect();
    for (label, value) in [("normalization", cert.normalization), ("margin", cert.margin)] {
        rows.push(vec![label.into(), String::new(), String::new(), String::new(), String::new(), num(value)]);
    }
    table(FARKAS_HEADER, rows)
}

pub fn status(s: BoundsStatus) -> &'static str {
    match s {
        BoundsStatus::Solved => "solved",
        BoundsStatus::Infeasible => "infeasible",
    }
}

pub fn bounds_csv(rows: &[(String, BoundsResult)]) -> String {
    table(
        BOUNDS_HEADER,
        rows.iter()
            .map(|(e, b)| vec![e.clone(), num(b.lower), num(b.upper), status(b.status).into()]),
    )
}

pub fn typicality_csv(rows: &[TypicalityReport]) -> String {
    table(
        TYPICALITY_HEADER,
        rows.iter().map(|r| {
            vec![
                format!("{},{}", r.pair.0, r.pair.1),
                num(r.weight),
                num(r.distance),
                num(r.relative_distance),
                num(r.measured_ratio),
                num(r.epsilon),
                r.qtr_fires.to_string(),
                num(1.0 - r.epsilon),
                r.passes.to_string(),
            ]
        }),
    )
}

/// Per-sample rows, then a `worst` row with the extreme values and the two
/// verdicts in the sample column's place.
pub fn branch_csv(reports: &[(String, W11Report)]) -> String {
    let mut rows = Vec::new();
    for (name, r) in reports {
        let tail = |e: String, t: String, sample: String| {
            vec![
                name.clone(),
                sample,
                e,
                t,
                num(r.epsilon),
                num(r.delta),
                num(r.expectation_bound),
                num(r.tail_bound),
            ]
        };
        for (i, s) in r.samples.iter().enumerate() {
            rows.push(tail(num(s.expectation), num(s.tail), i.to_string()));
        }
        rows.push(tail(
            num(r.worst_expectation),
            num(r.worst_tail),
            format!("worst:{}/{}", r.expectation_verdict, r.tail_verdict),
        ));
    }
    table(BRANCH_HEADER, rows)
}

/// Ψ(t) amplitudes and label weights, one row per (time, label).
pub fn states_csv(rows: &[(usize, usize, f64, f64, f64)]) -> String {
    table(
        ["time", "label", "re", "im", "weight"],
        rows.iter()
            .map(|&(t, l, re, im, w)| vec![t.to_string(), l.to_string(), num(re), num(im), num(w)]),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct Counts {
    pub emitted: usize,
    pub vacuous: usize,
    pub ineligible: usize,
    pub total: usize,
}

impl Counts {
    pub fn of(cs: &ConstraintSet) -> Self {
        let GenerationStats {
            emitted,
            vacuous,
            ineligible,
        } = cs.stats;
        Counts {
            emitted,
            vacuous,
            ineligible,
            total: cs.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsEntry {
    pub event: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub status: String,
}

impl BoundsEntry {
    pub fn new(event: &str, b: &BoundsResult) -> Self {
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        BoundsEntry {
            event: event.into(),
            lower: finite(b.lower),
            upper: finite(b.upper),
            status: status(b.status).into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityEntry {
    pub feasible: bool,
    pub certificate: String,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchEntry {
    pub name: String,
    pub epsilon: f64,
    pub delta: f64,
    pub worst_expectation: f64,
    pub worst_tail: f64,
    pub expectation_verdict: String,
    pub tail_verdict: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypicalityEntry {
    pub pair: String,
    pub relative_distance: f64,
    pub ratio: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub step: String,
    pub millis: f64,
}

/// Summary written to `report.json`. Unlike the CSV tables it carries
/// wall-clock timings.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub trajectories: usize,
    pub rules: Vec<String>,
    pub constraints: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityEntry>,
    pub bounds: Vec<BoundsEntry>,
    pub typicality: Vec<TypicalityEntry>,
    pub branches: Vec<BranchEntry>,
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub fn new(name: &str, hash: String, seed: u64, space: &TrajectorySpace, cs: &ConstraintSet) -> Self {
        RunReport {
            scenario: name.into(),
            config_hash: hash,
            seed,
            m: space.m(),
            n: space.n(),
            trajectories: space.size(),
            rules: cs.rules.iter().map(|r| r.to_string()).collect(),
            constraints: Counts::of(cs),
            feasibility: None,
            bounds: Vec::new(),
            typicality: Vec::new(),
            branches: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "0.500000000");
        assert_eq!(num(-1e-17), "0.000000000");
        assert_eq!(num(-0.0), "0.000000000");
        assert_eq!(num(-0.25), "-0.250000000");
        assert_eq!(num(1.0 / 3.0), "0.333333333");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn event_text_is_quoted() {
        let t = table(["event", "x"], vec![vec!["(t=1,{0}) & (t=2,{0})".to_string(), "1".to_string()]]);
        assert_eq!(t, "event,x\n\"(t=1,{0}) & (t=2,{0})\",1\n");
    }
}
