//! JSON scenario configuration (`iqp-config/1`): parsing, validation with
//! key paths, hashing, and construction of the system and credal set.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::credal::{
    born_constraints, cross_time_pairs, qtr_variant_constraints, sset_family, ConstraintSet,
    CredalError, QtrVariant, DEFAULT_TAU_NORM,
};
use crate::events::{parse_event, parse_expr, parse_sset_pair, Event, TrajectorySpace};
use crate::quantum::{
    check_trajectory_cap, dft, hadamard, identity, trajectory_cap, validate_step, CMatrix, CVector,
    QuantumSystem, Region, SSet, UNITARITY_TOL,
};
use crate::typicality::{Branch, TypicalityError};

pub const SCHEMA: &str = "iqp-config/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub system: SystemSpec,
    #[serde(default)]
    pub rules: RuleSpec,
    #[serde(default)]
    pub query: QuerySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub labels: Vec<String>,
    /// Number of grid times `n`.
    pub times: usize,
    /// `n − 1` step unitaries; step `k` maps time `k` to `k + 1`.
    pub steps: Vec<StepSpec>,
    /// Amplitudes as `[re, im]` pairs.
    pub initial_state: Vec<[f64; 2]>,
}

/// A named generator or an explicit matrix; the matrix wins when both are
/// present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl StepSpec {
    pub fn generator(name: &str) -> Self {
        StepSpec {
            generator: Some(name.to_string()),
            matrix: None,
        }
    }

    pub fn matrix(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        StepSpec {
            generator: None,
            matrix: Some(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    /// Any of `born`, `qtr`, `qtr-min`, `qtr-eps`, `qtr-alpha`.
    #[serde(default = "default_ruleset")]
    pub ruleset: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_tau")]
    pub tau_norm: f64,
    #[serde(default)]
    pub pairs: PairSpec,
    /// Extra lower bounds `P(event) >= lower`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub declared: Vec<DeclaredBound>,
}

impl Default for RuleSpec {
    fn default() -> Self {
        RuleSpec {
            ruleset: default_ruleset(),
            epsilon: None,
            alpha: None,
            tau_norm: default_tau(),
            pairs: PairSpec::default(),
            declared: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    /// Largest region cardinality used for Born s-sets and typicality pairs.
    #[serde(default = "one")]
    pub max_region_size: usize,
    /// Restrict pairs to these `[t1, t2]`; all `t1 < t2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_pairs: Option<Vec<[usize; 2]>>,
}

impl Default for PairSpec {
    fn default() -> Self {
        PairSpec {
            max_region_size: 1,
            time_pairs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredBound {
    pub event: String,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    #[serde(default)]
    pub events: Vec<String>,
    /// Typicality pairs in the form `(t=1,{0}),(t=2,{0})`.
    #[serde(default)]
    pub pairs: Vec<String>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec {
            events: Vec::new(),
            pairs: Vec::new(),
            branches: Vec::new(),
            delta: default_delta(),
            samples: default_samples(),
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub name: String,
    pub ssets: Vec<SSetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SSetSpec {
    pub time: usize,
    pub region: Vec<usize>,
}

fn default_ruleset() -> Vec<String> {
    vec!["born".into(), "qtr".into()]
}
fn default_tau() -> f64 {
    DEFAULT_TAU_NORM
}
fn one() -> usize {
    1
}
fn default_delta() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    20
}
fn default_seed() -> u64 {
    42
}

/// One validation failure, located by a JSON key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<ConfigIssue>),
    #[error("constraint generation: {0}")]
    Credal(#[from] CredalError),
    #[error("branch {name}: {source}")]
    Branch {
        name: String,
        source: TypicalityError,
    },
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

fn complex(a: &[f64; 2]) -> Complex64 {
    Complex64::new(a[0], a[1])
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn m(&self) -> usize {
        self.system.labels.len()
    }

    fn step_matrix(&self, spec: &StepSpec) -> Result<CMatrix, String> {
        let m = self.m();
        if let Some(rows) = &spec.matrix {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(format!("matrix must be {m}x{m}"));
            }
            return Ok(CMatrix::from_fn(m, m, |i, j| complex(&rows[i][j])));
        }
        match spec.generator.as_deref() {
            Some("hadamard") if m == 2 => Ok(hadamard()),
            Some("hadamard") => Err(format!("hadamard needs 2 labels, system has {m}")),
            Some("identity") => Ok(identity(m)),
            Some("dft") => Ok(dft(m)),
            Some(other) => Err(format!(
                "unknown generator \"{other}\" (expected hadamard, identity or dft)"
            )),
            None => Err("step needs a generator or a matrix".into()),
        }
    }

    /// Every problem found, each with its key path.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |path: String, message: String| issues.push(ConfigIssue { path, message });

        if self.schema != SCHEMA {
            bad("schema".into(), format!("expected \"{SCHEMA}\", found \"{}\"", self.schema));
        }
        let sys = &self.system;
        let m = self.m();
        let n = sys.times;
        if m == 0 {
            bad("system.labels".into(), "at least one label required".into());
        }
        for (i, l) in sys.labels.iter().enumerate() {
            if sys.labels[..i].contains(l) {
                bad(format!("system.labels[{i}]"), format!("duplicate label \"{l}\""));
            }
        }
        if n == 0 {
            bad("system.times".into(), "at least one grid time required".into());
        }
        let cap = trajectory_cap();
        let space_ok = m > 0 && n > 0;
        if space_ok {
            if let Err(e) = check_trajectory_cap(m, n, cap) {
                bad("system.times".into(), e.to_string());
            }
        }
        if n > 0 && sys.steps.len() != n - 1 {
            bad(
                "system.steps".into(),
                format!("expected {} steps for {n} times, found {}", n - 1, sys.steps.len()),
            );
        }
        if m > 0 {
            for (k, step) in sys.steps.iter().enumerate() {
                match self.step_matrix(step) {
                    Ok(u) => {
                        if let Err(e) = validate_step(k, &u, m) {
                            bad(format!("system.steps[{k}]"), e.to_string());
                        }
                    }
                    Err(msg) => bad(format!("system.steps[{k}]"), msg),
                }
            }
        }
        if sys.initial_state.len() != m {
            bad(
                "system.initial_state".into(),
                format!("expected {m} amplitudes, found {}", sys.initial_state.len()),
            );
        } else {
            let norm: f64 = sys.initial_state.iter().map(|a| complex(a).norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNITARITY_TOL {
                bad("system.initial_state".into(), format!("norm is {norm:.12}, expected 1"));
            }
        }

        let r = &self.rules;
        for (i, rule) in r.ruleset.iter().enumerate() {
            match rule.as_str() {
                "born" | "qtr" | "qtr-min" => {}
                "qtr-eps" if r.epsilon.is_none() => {
                    bad("rules.epsilon".into(), "required by qtr-eps".into())
                }
                "qtr-alpha" if r.alpha.is_none() => {
                    bad("rules.alpha".into(), "required by qtr-alpha".into())
                }
                "qtr-eps" | "qtr-alpha" => {}
                other => bad(format!("rules.ruleset[{i}]"), format!("unknown rule \"{other}\"")),
            }
        }
        if let Some(e) = r.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                bad("rules.epsilon".into(), format!("must be a finite number >= 0, found {e}"));
            }
        }
        if let Some(a) = r.alpha {
            if !(a > 0.0 && a.is_finite()) {
                bad("rules.alpha".into(), format!("must be a finite number > 0, found {a}"));
            }
        }
        if !(r.tau_norm >= 0.0 && r.tau_norm.is_finite()) {
            bad("rules.tau_norm".into(), format!("must be a finite number >= 0, found {}", r.tau_norm));
        }
        if r.pairs.max_region_size == 0 {
            bad("rules.pairs.max_region_size".into(), "must be at least 1".into());
        }
        if let Some(tp) = &r.pairs.time_pairs {
            for (i, [a, b]) in tp.iter().enumerate() {
                if a >= b || *b >= n {
                    bad(
                        format!("rules.pairs.time_pairs[{i}]"),
                        format!("need t1 < t2 < {n}, found [{a}, {b}]"),
                    );
                }
            }
        }

        let space = if space_ok {
            TrajectorySpace::new(m, n, cap).ok()
        } else {
            None
        };
        let mut check_event = |path: String, text: &str| match &space {
            Some(sp) => {
                if let Err(e) = parse_event(text, sp) {
                    bad(path, e.to_string());
                }
            }
            None => {
                if let Err(e) = parse_expr(text) {
                    bad(path, e.to_string());
                }
            }
        };
        for (i, d) in r.declared.iter().enumerate() {
            check_event(format!("rules.declared[{i}].event"), &d.event);
        }
        for (i, e) in self.query.events.iter().enumerate() {
            check_event(format!("query.events[{i}]"), e);
        }
        for (i, d) in r.declared.iter().enumerate() {
            if !d.lower.is_finite() {
                bad(format!("rules.declared[{i}].lower"), "must be finite".into());
            }
        }

        let q = &self.query;
        for (i, p) in q.pairs.iter().enumerate() {
            match parse_sset_pair(p, m) {
                Ok((a, b)) => {
                    for s in [a, b] {
                        if s.time >= n {
                            bad(format!("query.pairs[{i}]"), format!("time {} outside 0..{n}", s.time));
                        }
                    }
                }
                Err(e) => bad(format!("query.pairs[{i}]"), e.to_string()),
            }
        }
        for (i, b) in q.branches.iter().enumerate() {
            if b.name.is_empty() {
                bad(format!("query.branches[{i}].name"), "must not be empty".into());
            }
            if q.branches[..i].iter().any(|o| o.name == b.name) {
                bad(format!("query.branches[{i}].name"), format!("duplicate branch \"{}\"", b.name));
            }
            if b.ssets.is_empty() {
                bad(format!("query.branches[{i}].ssets"), "must not be empty".into());
            }
            for (j, s) in b.ssets.iter().enumerate() {
                let path = format!("query.branches[{i}].ssets[{j}]");
                if s.time >= n {
                    bad(path.clone(), format!("time {} outside 0..{n}", s.time));
                }
                if let Some(&l) = s.region.iter().find(|&&l| l >= m) {
                    bad(path.clone(), format!("label {l} outside 0..{m}"));
                }
                if j > 0 && s.time <= b.ssets[j - 1].time {
                    bad(path, "times must be strictly increasing".into());
                }
            }
        }
        if !(q.delta > 0.0 && q.delta <= 1.0) {
            bad("query.delta".into(), format!("must lie in (0, 1], found {}", q.delta));
        }
        if q.samples == 0 {
            bad("query.samples".into(), "must be at least 1".into());
        }
        issues
    }

    /// Construct the quantum system. Assumes `validate` passed.
    pub fn system(&self) -> Result<QuantumSystem, ConfigError> {
        let invalid = |path: &str, message: String| {
            ConfigError::Invalid(vec![ConfigIssue {
                path: path.into(),
                message,
            }])
        };
        let steps = self
            .system
            .steps
            .iter()
            .enumerate()
            .map(|(k, s)| self.step_matrix(s).map_err(|e| invalid(&format!("system.steps[{k}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let psi0 = CVector::from_iterator(
            self.system.initial_state.len(),
            self.system.initial_state.iter().map(complex),
        );
        QuantumSystem::with_cap(
            self.system.labels.clone(),
            self.system.times,
            steps,
            psi0,
            trajectory_cap(),
        )
        .map_err(|e| invalid("system", e.to_string()))
    }

    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let issues = self.validate();
        if !issues.is_empty() {
            return Err(ConfigError::Invalid(issues));
        }
        let system = self.system()?;
        let space = TrajectorySpace::of(&system);
        let constraints = self.constraint_set(&system, &space)?;
        let branches = self
            .query
            .branches
            .iter()
            .map(|b| {
                let ssets = b
                    .ssets
                    .iter()
                    .map(|s| SSet::new(s.time, Region::from_labels(space.m(), &s.region).expect("validated")))
                    .collect();
                Branch::new(&system, ssets, self.rules.tau_norm)
                    .map(|br| (b.name.clone(), br))
                    .map_err(|source| ConfigError::Branch {
                        name: b.name.clone(),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario {
            config: self.clone(),
            system,
            space,
            constraints,
            branches,
        })
    }

    fn constraint_set(&self, sys: &QuantumSystem, space: &TrajectorySpace) -> Result<ConstraintSet, ConfigError> {
        let r = &self.rules;
        let (m, n) = (space.m(), space.n());
        let k = r.pairs.max_region_size;
        let time_pairs: Option<Vec<(usize, usize)>> = r
            .pairs
            .time_pairs
            .as_ref()
            .map(|v| v.iter().map(|&[a, b]| (a, b)).collect());
        let pairs = cross_time_pairs(m, n, k, time_pairs.as_deref());
        let mut cs = ConstraintSet::new(*space);
        cs.tau_norm = r.tau_norm;
        for rule in &r.ruleset {
            let part = match rule.as_str() {
                "born" => {
                    let family = sset_family(m, n, k);
                    if family.is_empty() {
                        continue;
                    }
                    born_constraints(sys, space, &family)?
                }
                name => {
                    let variant = match name {
                        "qtr" => QtrVariant::Standard { tau_norm: r.tau_norm },
                        "qtr-min" => QtrVariant::Min,
                        "qtr-eps" => QtrVariant::Eps {
                            epsilon: r.epsilon.unwrap_or(0.0),
                            tau_norm: r.tau_norm,
                        },
                        _ => QtrVariant::Alpha {
                            alpha: r.alpha.unwrap_or(1.0),
                            tau_norm: r.tau_norm,
                        },
                    };
                    qtr_variant_constraints(sys, space, &pairs, variant)?
                }
            };
            cs.extend(part)?;
        }
        for d in &r.declared {
            let event = parse_event(&d.event, space).expect("validated");
            cs.declare_lower_bound(event, d.lower, d.event.clone())?;
        }
        Ok(cs)
    }
}

/// A validated configuration together with everything built from it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub system: QuantumSystem,
    pub space: TrajectorySpace,
    pub constraints: ConstraintSet,
    pub branches: Vec<(String, Branch)>,
}

impl Scenario {
    pub fn event(&self, text: &str) -> Result<Event, crate::events::ExprError> {
        parse_event(text, &self.space)
    }

    pub fn branch(&self, name: &str) -> Option<&Branch> {
        self.branches.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": "iqp-config/1",
        "system": {
            "labels": ["a", "b"],
            "times": 2,
            "steps": [{"generator": "identity"}],
            "initial_state": [[1, 0], [0, 0]]
        }
    }"#;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(ConfigError::Invalid(v)) => v,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_loads_and_builds() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.rules.ruleset, vec!["born", "qtr"]);
        assert_eq!(cfg.query.seed, 42);
        let sc = cfg.build().unwrap();
        assert_eq!(sc.space.size(), 4);
        assert!(sc.constraints.len() > 0);
    }

    #[test]
    fn non_unitary_step_names_its_index() {
        let text = MINIMAL.replace(
            r#"[{"generator": "identity"}]"#,
            r#"[{"matrix": [[[1,0],[1,0]],[[0,0],[1,0]]]}]"#,
        );
        let v = issues(&text);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "system.steps[0]");
        assert!(v[0].message.contains("step 0 is not unitary"), "{}", v[0].message);
    }

    #[test]
    fn cap_violation_reports_count() {
        let text = r#"{
            "schema": "iqp-config/1",
            "system": {
                "labels": ["0", "1", "2", "3"],
                "times": 10,
                "steps": [{"generator": "dft"}, {"generator": "dft"}, {"generator": "dft"},
                          {"generator": "dft"}, {"generator": "dft"}, {"generator": "dft"},
                          {"generator": "dft"}, {"generator": "dft"}, {"generator": "dft"}],
                "initial_state": [[1, 0], [0, 0], [0, 0], [0, 0]]
            }
        }"#;
        let v = issues(text);
        assert!(v.iter().any(|i| i.path == "system.times" && i.message.contains("1048576")), "{v:?}");
    }

    #[test]
    fn all_issues_are_collected() {
        let text = r#"{
            "schema": "iqp-config/2",
            "system": {
                "labels": ["a", "a"],
                "times": 3,
                "steps": [{"generator": "spin"}],
                "initial_state": [[1, 0], [1, 0]]
            },
            "rules": {"ruleset": ["born", "magic", "qtr-eps"], "alpha": -1},
            "query": {"events": ["(t=5,{0})"], "delta": 0}
        }"#;
        let paths: Vec<String> = issues(text).into_iter().map(|i| i.path).collect();
        for p in [
            "schema",
            "system.labels[1]",
            "system.steps",
            "system.steps[0]",
            "system.initial_state",
            "rules.ruleset[1]",
            "rules.epsilon",
            "rules.alpha",
            "query.events[0]",
            "query.delta",
        ] {
            assert!(paths.iter().any(|q| q == p), "missing {p} in {paths:?}");
        }
    }

    #[test]
    fn unknown_keys_and_syntax_errors() {
        let text = MINIMAL.replace("\"times\"", "\"colour\": 1, \"times\"");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse { .. })));
        match parse_config("{\n  \"schema\": ,\n}") {
            Err(ConfigError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 13)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_matrix_takes_precedence() {
        let text = MINIMAL.replace(
            r#"[{"generator": "identity"}]"#,
            r#"[{"generator": "dft", "matrix": [[[0,0],[1,0]],[[1,0],[0,0]]]}]"#,
        );
        let sys = parse_config(&text).unwrap().system().unwrap();
        let w = sys.label_weights(1).unwrap();
        assert_eq!(w, vec![0.0, 1.0]);
    }

    #[test]
    fn hash_round_trips_through_json() {
        let cfg = parse_config(MINIMAL).unwrap();
        let back = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.query.seed = 7;
        assert_ne!(other.hash(), cfg.hash());
    }
}
