//! Built-in scenario configurations.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::config::{
    BranchSpec, DeclaredBound, PairSpec, QuerySpec, RuleSpec, SSetSpec, ScenarioConfig, StepSpec,
    SystemSpec, SCHEMA,
};
use crate::quantum::CMatrix;

pub const BUILTIN: [&str; 5] = [
    "beam-splitter",
    "mach-zehnder",
    "spreading-packet",
    "adversarial",
    "leaky-branch",
];

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "beam-splitter" => Some(beam_splitter()),
        "mach-zehnder" => Some(mach_zehnder()),
        "spreading-packet" => Some(spreading_packet()),
        "adversarial" => Some(adversarial()),
        "leaky-branch" => Some(leaky_branch(1e-6)),
        _ => None,
    }
}

fn two_labels(a: &str, b: &str) -> Vec<String> {
    vec![a.to_string(), b.to_string()]
}

fn sset(time: usize, region: &[usize]) -> SSetSpec {
    SSetSpec {
        time,
        region: region.to_vec(),
    }
}

fn branch(name: &str, ssets: Vec<SSetSpec>) -> BranchSpec {
    BranchSpec {
        name: name.to_string(),
        ssets,
    }
}

fn config(name: &str, system: SystemSpec, rules: RuleSpec, query: QuerySpec) -> ScenarioConfig {
    ScenarioConfig {
        schema: SCHEMA.to_string(),
        name: name.to_string(),
        system,
        rules,
        query,
    }
}

/// Photon source, one beam splitter, then free flight along the two arms.
/// Labels 0 and 1 are the reflected and transmitted paths.
pub fn beam_splitter() -> ScenarioConfig {
    config(
        "beam-splitter",
        SystemSpec {
            labels: two_labels("reflected", "transmitted"),
            times: 3,
            steps: vec![StepSpec::generator("hadamard"), StepSpec::generator("identity")],
            initial_state: vec![[1.0, 0.0], [0.0, 0.0]],
        },
        RuleSpec::default(),
        QuerySpec {
            events: vec![
                "(t=1,{0}) & (t=2,{0})".into(),
                "(t=1,{0}) & (t=2,{1})".into(),
                "(t=1,{0}) | (t=2,{1})".into(),
            ],
            pairs: vec!["(t=1,{0}),(t=2,{0})".into(), "(t=1,{1}),(t=2,{1})".into()],
            branches: vec![
                branch("reflected", vec![sset(1, &[0]), sset(2, &[0])]),
                branch("transmitted", vec![sset(1, &[1]), sset(2, &[1])]),
            ],
            ..QuerySpec::default()
        },
    )
}

/// Two beam splitters: the arms recombine and the photon always exits on
/// path 0.
pub fn mach_zehnder() -> ScenarioConfig {
    config(
        "mach-zehnder",
        SystemSpec {
            labels: two_labels("upper", "lower"),
            times: 3,
            steps: vec![StepSpec::generator("hadamard"), StepSpec::generator("hadamard")],
            initial_state: vec![[1.0, 0.0], [0.0, 0.0]],
        },
        RuleSpec::default(),
        QuerySpec {
            events: vec![
                "(t=1,{0}) & (t=2,{0})".into(),
                "(t=1,{1}) & (t=2,{0})".into(),
                "(t=2,{0})".into(),
            ],
            pairs: vec!["(t=0,{0}),(t=2,{0})".into(), "(t=1,{0}),(t=1,{1})".into()],
            ..QuerySpec::default()
        },
    )
}

/// A packet that spreads evenly over both cells at every step. The
/// typicality constraints are all vacuous and cross-time events are only
/// bounded by the Born marginals.
pub fn spreading_packet() -> ScenarioConfig {
    let s = FRAC_1_SQRT_2;
    let u = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(s, 0.0),
        ],
    );
    config(
        "spreading-packet",
        SystemSpec {
            labels: two_labels("left", "right"),
            times: 2,
            steps: vec![StepSpec::matrix(&u)],
            initial_state: vec![[s, 0.0], [s, 0.0]],
        },
        RuleSpec::default(),
        QuerySpec {
            events: vec!["(t=0,{0}) & (t=1,{0})".into(), "(t=0,{0}) | (t=1,{1})".into()],
            pairs: vec!["(t=0,{0}),(t=1,{0})".into()],
            ..QuerySpec::default()
        },
    )
}

/// Two declared lower bounds of 0.8 on an event and its complement.
pub fn adversarial() -> ScenarioConfig {
    config(
        "adversarial",
        SystemSpec {
            labels: two_labels("0", "1"),
            times: 2,
            steps: vec![StepSpec::generator("identity")],
            initial_state: vec![[1.0, 0.0], [0.0, 0.0]],
        },
        RuleSpec {
            ruleset: Vec::new(),
            declared: vec![
                DeclaredBound {
                    event: "(t=0,{0}) & (t=1,{1})".into(),
                    lower: 0.8,
                },
                DeclaredBound {
                    event: "!((t=0,{0}) & (t=1,{1}))".into(),
                    lower: 0.8,
                },
            ],
            ..RuleSpec::default()
        },
        QuerySpec {
            events: vec!["(t=0,{0}) & (t=1,{1})".into()],
            ..QuerySpec::default()
        },
    )
}

/// A uniform superposition under a slow rotation `[[c, i·s], [i·s, c]]`.
/// The label weights stay at 1/2 while the pulled-back states drift; the
/// angle is chosen so the branch tracking cell 0 from the first to the last
/// time has relative distance `epsilon`.
pub fn leaky_branch(epsilon: f64) -> ScenarioConfig {
    let times = 3;
    let theta = (epsilon / 2.0).sqrt().asin() / (times - 1) as f64;
    let (c, s) = (theta.cos(), theta.sin());
    let u = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, s),
            Complex64::new(c, 0.0),
        ],
    );
    let h = FRAC_1_SQRT_2;
    config(
        "leaky-branch",
        SystemSpec {
            labels: two_labels("left", "right"),
            times,
            steps: vec![StepSpec::matrix(&u); times - 1],
            initial_state: vec![[h, 0.0], [h, 0.0]],
        },
        RuleSpec {
            pairs: PairSpec {
                max_region_size: 1,
                time_pairs: None,
            },
            ..RuleSpec::default()
        },
        QuerySpec {
            events: vec!["(t=0,{0}) & (t=1,{0}) & (t=2,{0})".into()],
            pairs: vec!["(t=0,{0}),(t=2,{0})".into()],
            branches: vec![branch("left", (0..times).map(|t| sset(t, &[0])).collect())],
            delta: 1e-3,
            ..QuerySpec::default()
        },
    )
}
