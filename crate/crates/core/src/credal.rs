//! Credal sets over the trajectory space.
//!
//! The Born rule and the quantum typicality rule are lowered to linear
//! constraints `P(A) >= f(A)` on indicator events. Lower and upper
//! probabilities, feasibility witnesses and infeasibility certificates are
//! answered by the dense simplex in [`crate::simplex`].
//!
//! Linear programs are posed over *atoms*: classes of trajectories that
//! belong to exactly the same constraint events. Mass can move freely inside
//! an atom without changing any constraint, so the reduced problem has the
//! same optimum; witnesses are expanded back onto trajectories.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::events::{sset_event, Event, EventError, EventExpr, TrajectorySpace};
use crate::measure::{MeasureError, TrajectoryMeasure};
use crate::quantum::{QuantumError, QuantumSystem, Region, SSet};
use crate::simplex::{LinearProgram, LpError, LpOutcome, Relation, Sense};

/// Every witness must satisfy each constraint within this slack.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Default tolerance for the equal-norm condition `‖Ψ(S₁)‖² = ‖Ψ(S₂)‖²`.
pub const DEFAULT_TAU_NORM: f64 = 1e-9;
/// Absolute slack on the relative-distance filter of the ε-variant.
pub const DISTANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CredalError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("LP solver: {0}")]
    Lp(#[from] LpError),
    #[error("s-set family is empty")]
    EmptyFamily,
    #[error("trajectory space {found} does not match the system ({expected})")]
    SpaceMismatch { expected: String, found: String },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("constraint set is infeasible")]
    Infeasible,
    #[error("constraint {index} bounds an empty event from below by {rhs}")]
    MalformedBound { index: usize, rhs: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Which rule generated a constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleTag {
    Born,
    Qtr,
    QtrMin,
    QtrEps(f64),
    QtrAlpha(f64),
    Declared,
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleTag::Born => write!(f, "born"),
            RuleTag::Qtr => write!(f, "qtr"),
            RuleTag::QtrMin => write!(f, "qtr-min"),
            RuleTag::QtrEps(e) => write!(f, "qtr-eps({e})"),
            RuleTag::QtrAlpha(a) => write!(f, "qtr-alpha({a})"),
            RuleTag::Declared => write!(f, "declared"),
        }
    }
}

/// A lower bound (or equality) on the probability of one event.
/// Coefficients are the 0/1 indicator of `event`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub event: Event,
    pub relation: Relation,
    pub rhs: f64,
    pub tag: RuleTag,
    /// The s-sets the constraint was generated from (one for Born, two for
    /// typicality pairs, none for declared constraints).
    pub ssets: Vec<SSet>,
    /// Event expression text denoting `event`.
    pub text: String,
}

impl LinearConstraint {
    /// Sparse coefficient view: trajectory index → coefficient.
    pub fn coeffs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.event.indices().map(|i| (i, 1.0))
    }

    /// Amount by which `p` violates the constraint (0 when satisfied).
    pub fn violation(&self, p: &TrajectoryMeasure) -> f64 {
        let lhs: f64 = self.event.indices().map(|i| p.probs()[i]).sum();
        match self.relation {
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenerationStats {
    pub emitted: usize,
    /// Constraints dropped because `rhs <= 0`.
    pub vacuous: usize,
    /// Pairs outside the rule's class (same time, s-set intersection, norm
    /// mismatch, distance filter).
    pub ineligible: usize,
}

/// Linear constraints plus the implicit simplex `p >= 0, Σp = 1`.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub space: TrajectorySpace,
    pub constraints: Vec<LinearConstraint>,
    pub rules: Vec<RuleTag>,
    pub tau_norm: f64,
    pub stats: GenerationStats,
}

impl ConstraintSet {
    pub fn new(space: TrajectorySpace) -> Self {
        ConstraintSet {
            space,
            constraints: Vec::new(),
            rules: Vec::new(),
            tau_norm: DEFAULT_TAU_NORM,
            stats: GenerationStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Add `P(event) >= rhs` from an explicit declaration.
    pub fn declare_lower_bound(&mut self, event: Event, rhs: f64, text: impl Into<String>) -> Result<(), CredalError> {
        if event.len() != self.space.size() {
            return Err(EventError::LengthMismatch {
                expected: self.space.size(),
                found: event.len(),
            }
            .into());
        }
        if !rhs.is_finite() {
            return Err(CredalError::InvalidParameter { name: "rhs", value: rhs });
        }
        if !self.rules.contains(&RuleTag::Declared) {
            self.rules.push(RuleTag::Declared);
        }
        self.constraints.push(LinearConstraint {
            event,
            relation: Relation::Ge,
            rhs,
            tag: RuleTag::Declared,
            ssets: Vec::new(),
            text: text.into(),
        });
        self.stats.emitted += 1;
        Ok(())
    }

    /// Append another set over the same space.
    pub fn extend(&mut self, other: ConstraintSet) -> Result<(), CredalError> {
        if other.space != self.space {
            return Err(space_mismatch(&self.space, &other.space));
        }
        for r in other.rules {
            if !self.rules.contains(&r) {
                self.rules.push(r);
            }
        }
        self.constraints.extend(other.constraints);
        self.stats.emitted += other.stats.emitted;
        self.stats.vacuous += other.stats.vacuous;
        self.stats.ineligible += other.stats.ineligible;
        Ok(())
    }

    /// Largest violation of any constraint or of the simplex conditions.
    pub fn max_violation(&self, p: &TrajectoryMeasure) -> f64 {
        if p.len() != self.space.size() {
            return f64::INFINITY;
        }
        let neg = p.probs().iter().fold(0.0f64, |acc, &x| acc.max(-x));
        let norm = (p.probs().iter().sum::<f64>() - 1.0).abs();
        self.constraints
            .iter()
            .map(|c| c.violation(p))
            .fold(neg.max(norm), f64::max)
    }

    pub fn is_satisfied_by(&self, p: &TrajectoryMeasure) -> bool {
        self.max_violation(p) <= FEASIBILITY_TOL
    }

    /// Rewrite as lower bounds `P(A) >= f(A)`. Equalities become a pair of
    /// lower bounds on the event and its complement. Each entry records the
    /// index of the originating constraint.
    pub fn lower_bound_form(&self) -> Vec<LowerBound> {
        let mut out = Vec::new();
        for (k, c) in self.constraints.iter().enumerate() {
            let complement = || LowerBound {
                origin: k,
                event: c.event.complement(),
                rhs: 1.0 - c.rhs,
                text: format!("!({})", c.text),
            };
            match c.relation {
                Relation::Ge => out.push(LowerBound {
                    origin: k,
                    event: c.event.clone(),
                    rhs: c.rhs,
                    text: c.text.clone(),
                }),
                Relation::Le => out.push(complement()),
                Relation::Eq => {
                    out.push(LowerBound {
                        origin: k,
                        event: c.event.clone(),
                        rhs: c.rhs,
                        text: c.text.clone(),
                    });
                    out.push(complement());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub origin: usize,
    pub event: Event,
    pub rhs: f64,
    pub text: String,
}

fn space_mismatch(expected: &TrajectorySpace, found: &TrajectorySpace) -> CredalError {
    CredalError::SpaceMismatch {
        expected: format!("m={}, n={}", expected.m(), expected.n()),
        found: format!("m={}, n={}", found.m(), found.n()),
    }
}

fn check_space(sys: &QuantumSystem, space: &TrajectorySpace) -> Result<(), CredalError> {
    let own = TrajectorySpace::of(sys);
    if own != *space {
        return Err(space_mismatch(&own, space));
    }
    Ok(())
}

fn sset_text(s: &SSet) -> String {
    s.to_string()
}

/// Born constraints: for each `S` in the family, `P(S) >= ‖Ψ(S)‖²` and
/// `P(S') >= 1 − ‖Ψ(S)‖²` for the complementary region `S'` at the same
/// time. Together with normalization they force `P(S) = ‖Ψ(S)‖²`.
pub fn born_constraints(
    sys: &QuantumSystem,
    space: &TrajectorySpace,
    family: &[SSet],
) -> Result<ConstraintSet, CredalError> {
    check_space(sys, space)?;
    if family.is_empty() {
        return Err(CredalError::EmptyFamily);
    }
    let mut cs = ConstraintSet::new(*space);
    cs.rules.push(RuleTag::Born);
    let mut seen: BTreeSet<SSet> = BTreeSet::new();
    for s in family {
        let w = sys.weight(s)?;
        for (target, rhs) in [(s.clone(), w), (s.complement(), 1.0 - w)] {
            if !seen.insert(target.clone()) {
                continue;
            }
            if rhs <= DISTANCE_SLACK {
                cs.stats.vacuous += 1;
                continue;
            }
            cs.constraints.push(LinearConstraint {
                event: sset_event(space, &target)?,
                relation: Relation::Ge,
                rhs,
                tag: RuleTag::Born,
                ssets: vec![s.clone()],
                text: sset_text(&target),
            });
            cs.stats.emitted += 1;
        }
    }
    Ok(cs)
}

/// Parameters of the typicality-rule family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QtrVariant {
    /// `P(S₁∩S₂) >= ‖Ψ(S₁)‖² − ‖Ψ(S₁)−Ψ(S₂)‖²` for equal-norm pairs.
    Standard { tau_norm: f64 },
    /// No equal-norm filter; `min(‖Ψ(S₁)‖², ‖Ψ(S₂)‖²)` replaces the weight.
    Min,
    /// Standard rule restricted to pairs with relative distance `<= epsilon`.
    Eps { epsilon: f64, tau_norm: f64 },
    /// Distance term scaled by `alpha`.
    Alpha { alpha: f64, tau_norm: f64 },
}

impl QtrVariant {
    fn tag(&self) -> RuleTag {
        match *self {
            QtrVariant::Standard { .. } => RuleTag::Qtr,
            QtrVariant::Min => RuleTag::QtrMin,
            QtrVariant::Eps { epsilon, .. } => RuleTag::QtrEps(epsilon),
            QtrVariant::Alpha { alpha, .. } => RuleTag::QtrAlpha(alpha),
        }
    }

    fn tau_norm(&self) -> Option<f64> {
        match *self {
            QtrVariant::Standard { tau_norm }
            | QtrVariant::Eps { tau_norm, .. }
            | QtrVariant::Alpha { tau_norm, .. } => Some(tau_norm),
            QtrVariant::Min => None,
        }
    }

    fn validate(&self) -> Result<(), CredalError> {
        let bad = |name, value: f64| Err(CredalError::InvalidParameter { name, value });
        if let Some(tau) = self.tau_norm() {
            if !(tau >= 0.0) || !tau.is_finite() {
                return bad("tau_norm", tau);
            }
        }
        match *self {
            QtrVariant::Eps { epsilon, .. } if !(epsilon >= 0.0) || !epsilon.is_finite() => {
                bad("epsilon", epsilon)
            }
            QtrVariant::Alpha { alpha, .. } if !(alpha > 0.0) || !alpha.is_finite() => {
                bad("alpha", alpha)
            }
            _ => Ok(()),
        }
    }
}

/// `S₁∩S₂` is itself an s-set when the times coincide or either region is
/// empty or full; such pairs are outside the typicality class.
pub fn intersection_is_sset(s1: &SSet, s2: &SSet) -> bool {
    s1.time == s2.time
        || s1.region.is_empty()
        || s2.region.is_empty()
        || s1.region.is_full()
        || s2.region.is_full()
}

pub fn qtr_constraints(
    sys: &QuantumSystem,
    space: &TrajectorySpace,
    pairs: &[(SSet, SSet)],
    tau_norm: f64,
) -> Result<ConstraintSet, CredalError> {
    qtr_variant_constraints(sys, space, pairs, QtrVariant::Standard { tau_norm })
}

pub fn qtr_variant_constraints(
    sys: &QuantumSystem,
    space: &TrajectorySpace,
    pairs: &[(SSet, SSet)],
    variant: QtrVariant,
) -> Result<ConstraintSet, CredalError> {
    check_space(sys, space)?;
    variant.validate()?;
    let mut cs = ConstraintSet::new(*space);
    cs.rules.push(variant.tag());
    if let Some(tau) = variant.tau_norm() {
        cs.tau_norm = tau;
    }
    let mut seen: BTreeSet<(SSet, SSet)> = BTreeSet::new();
    for (s1, s2) in pairs {
        let w1 = sys.weight(s1)?;
        let w2 = sys.weight(s2)?;
        let d = sys.sset_distance(s1, s2)?;
        let key = if s1 <= s2 {
            (s1.clone(), s2.clone())
        } else {
            (s2.clone(), s1.clone())
        };
        if intersection_is_sset(s1, s2) || seen.contains(&key) {
            cs.stats.ineligible += 1;
            continue;
        }
        let equal_norm = variant.tau_norm().is_none_or(|tau| (w1 - w2).abs() <= tau);
        if !equal_norm {
            cs.stats.ineligible += 1;
            continue;
        }
        let rhs = match variant {
            QtrVariant::Standard { .. } => w1 - d,
            QtrVariant::Min => w1.min(w2) - d,
            QtrVariant::Eps { epsilon, .. } => {
                if d > epsilon * w1 + DISTANCE_SLACK {
                    cs.stats.ineligible += 1;
                    continue;
                }
                w1 - d
            }
            QtrVariant::Alpha { alpha, .. } => w1 - alpha * d,
        };
        seen.insert(key);
        if rhs <= DISTANCE_SLACK {
            cs.stats.vacuous += 1;
            continue;
        }
        let event = sset_event(space, s1)?.intersection(&sset_event(space, s2)?)?;
        let text = EventExpr::and(EventExpr::atom(s1), EventExpr::atom(s2)).to_string();
        cs.constraints.push(LinearConstraint {
            event,
            relation: Relation::Ge,
            rhs,
            tag: variant.tag(),
            ssets: vec![s1.clone(), s2.clone()],
            text,
        });
        cs.stats.emitted += 1;
    }
    Ok(cs)
}

/// All proper regions of size `<= max_region_size` at every grid time.
pub fn sset_family(m: usize, n: usize, max_region_size: usize) -> Vec<SSet> {
    let regions = Region::proper_regions(m, max_region_size);
    (0..n)
        .flat_map(|t| regions.iter().map(move |r| SSet::new(t, r.clone())))
        .collect()
}

/// Cross-time pairs of proper regions of size `<= max_region_size`, for
/// the given time pairs (all `t₁ < t₂` when `None`).
pub fn cross_time_pairs(
    m: usize,
    n: usize,
    max_region_size: usize,
    time_pairs: Option<&[(usize, usize)]>,
) -> Vec<(SSet, SSet)> {
    let regions = Region::proper_regions(m, max_region_size);
    let all: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let times = time_pairs.unwrap_or(&all);
    let mut out = Vec::new();
    for &(t1, t2) in times {
        for r1 in &regions {
            for r2 in &regions {
                out.push((SSet::new(t1, r1.clone()), SSet::new(t2, r2.clone())));
            }
        }
    }
    out
}

/// Independent coupling of the Born marginals:
/// `P({λ}) = Π_t |Ψ(t)[λ(t)]|²`.
pub fn born_product_witness(sys: &QuantumSystem, space: &TrajectorySpace) -> TrajectoryMeasure {
    let weights: Vec<Vec<f64>> = (0..space.n())
        .map(|t| sys.state_ref(t).iter().map(|a| a.norm_sqr()).collect())
        .collect();
    let probs = (0..space.size())
        .map(|i| {
            (0..space.n())
                .map(|t| weights[t][space.label_at(i, t)])
                .product()
        })
        .collect();
    TrajectoryMeasure::new(probs).expect("product of normalized marginals")
}

struct Atoms {
    members: Vec<Vec<usize>>,
}

impl Atoms {
    fn build<'a>(space: &TrajectorySpace, events: impl Iterator<Item = &'a Event> + Clone) -> Atoms {
        let k = events.clone().count();
        let words = k.div_ceil(64).max(1);
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut sig = vec![0u64; words];
        for i in 0..space.size() {
            sig.iter_mut().for_each(|w| *w = 0);
            for (j, e) in events.clone().enumerate() {
                if e.contains(i) {
                    sig[j / 64] |= 1 << (j % 64);
                }
            }
            let next = members.len();
            let id = *index.entry(sig.clone()).or_insert(next);
            if id == next {
                members.push(Vec::new());
            }
            members[id].push(i);
        }
        Atoms { members }
    }

    fn indicator(&self, event: &Event) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| if event.contains(m[0]) { 1.0 } else { 0.0 })
            .collect()
    }
}

enum Placement<'a> {
    Spread,
    Extreme(&'a [f64], Sense),
}

/// Optimize a linear objective over the credal set. `None` if infeasible.
fn solve_over(
    cs: &ConstraintSet,
    placement: Placement<'_>,
) -> Result<Option<(f64, TrajectoryMeasure)>, CredalError> {
    let atoms = Atoms::build(&cs.space, cs.constraints.iter().map(|c| &c.event));
    let n_atoms = atoms.members.len();

    // Representative trajectory and objective coefficient per atom.
    let (objective, sense, reps): (Vec<f64>, Sense, Option<Vec<usize>>) = match placement {
        Placement::Spread => (vec![0.0; n_atoms], Sense::Minimize, None),
        Placement::Extreme(c, sense) => {
            let mut obj = Vec::with_capacity(n_atoms);
            let mut reps = Vec::with_capacity(n_atoms);
            for m in &atoms.members {
                let mut best = m[0];
                for &i in &m[1..] {
                    let better = match sense {
                        Sense::Minimize => c[i] < c[best],
                        Sense::Maximize => c[i] > c[best],
                    };
                    if better {
                        best = i;
                    }
                }
                obj.push(c[best]);
                reps.push(best);
            }
            (obj, sense, Some(reps))
        }
    };

    let mut lp = LinearProgram::new(n_atoms, sense, objective);
    lp.add_row(vec![1.0; n_atoms], Relation::Eq, 1.0);
    for c in &cs.constraints {
        lp.add_row(atoms.indicator(&c.event), c.relation, c.rhs);
    }
    let sol = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible { .. } => return Ok(None),
        LpOutcome::Unbounded => {
            return Err(CredalError::Numerical("bounded LP reported unbounded".into()))
        }
    };

    let mut probs = vec![0.0; cs.space.size()];
    for (a, mass) in sol.x.iter().enumerate() {
        if *mass <= 0.0 {
            continue;
        }
        match &reps {
            Some(r) => probs[r[a]] += mass,
            None => {
                let share = mass / atoms.members[a].len() as f64;
                for &i in &atoms.members[a] {
                    probs[i] = share;
                }
            }
        }
    }
    let witness = TrajectoryMeasure::new(probs)
        .map_err(|e| CredalError::Numerical(format!("LP solution is not a measure: {e}")))?;
    let violation = cs.max_violation(&witness);
    if violation > FEASIBILITY_TOL {
        return Err(CredalError::Numerical(format!(
            "LP solution violates constraints by {violation:.3e}"
        )));
    }
    Ok(Some((sol.value, witness)))
}

/// Non-negative multipliers on lower-bound rows proving that no probability
/// measure satisfies them: `Σ yᵢ fᵢ > max_ω Σ yᵢ 1_{Aᵢ}(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub rows: Vec<LowerBound>,
    pub multipliers: Vec<f64>,
    /// Multiplier of the normalization row, `−max_ω Σ yᵢ 1_{Aᵢ}(ω)`.
    pub normalization: f64,
    /// `Σ yᵢ fᵢ + normalization`; positive for a valid certificate.
    pub margin: f64,
}

impl FarkasCertificate {
    /// `max_ω Σ yᵢ 1_{Aᵢ}(ω)`, by direct summation over all trajectories.
    pub fn max_combined(&self, space: &TrajectorySpace) -> f64 {
        let mut combined = vec![0.0; space.size()];
        for (row, &y) in self.rows.iter().zip(&self.multipliers) {
            for i in row.event.indices() {
                combined[i] += y;
            }
        }
        combined.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Recompute the margin from scratch.
    pub fn recompute_margin(&self, space: &TrajectorySpace) -> f64 {
        let total: f64 = self
            .rows
            .iter()
            .zip(&self.multipliers)
            .map(|(r, y)| r.rhs * y)
            .sum();
        total - self.max_combined(space)
    }

    pub fn verify(&self, space: &TrajectorySpace) -> bool {
        self.multipliers.iter().all(|&y| y >= 0.0)
            && self.recompute_margin(space) >= FEASIBILITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityCertificate {
    Witness(TrajectoryMeasure),
    Farkas(FarkasCertificate),
}

impl FeasibilityCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityCertificate::Witness(_))
    }

    pub fn verify(&self, cs: &ConstraintSet) -> bool {
        match self {
            FeasibilityCertificate::Witness(p) => cs.is_satisfied_by(p),
            FeasibilityCertificate::Farkas(f) => f.verify(&cs.space),
        }
    }
}

/// Decide whether the credal set is non-empty. Returns a witness measure
/// from phase 1, or a Farkas certificate taken from the optimal multipliers
/// of the Huber program.
pub fn feasibility(cs: &ConstraintSet) -> Result<FeasibilityCertificate, CredalError> {
    if let Some((_, witness)) = solve_over(cs, Placement::Spread)? {
        return Ok(FeasibilityCertificate::Witness(witness));
    }
    let rows = cs.lower_bound_form();
    let cert = if let Some(k) = rows.iter().position(|r| r.event.is_empty() && r.rhs > 0.0) {
        let mut multipliers = vec![0.0; rows.len()];
        multipliers[k] = 1.0;
        FarkasCertificate {
            margin: rows[k].rhs,
            normalization: 0.0,
            rows,
            multipliers,
        }
    } else {
        let huber = huber_solve_rows(&cs.space, &rows)?;
        let mut cert = FarkasCertificate {
            rows,
            multipliers: huber.multipliers,
            normalization: 0.0,
            margin: 0.0,
        };
        let max = cert.max_combined(&cs.space);
        cert.normalization = -max;
        cert.margin = huber.value - max;
        cert
    };
    if !cert.verify(&cs.space) {
        return Err(CredalError::Numerical(format!(
            "phase 1 reports infeasibility but the best certificate margin is {:.3e}",
            cert.recompute_margin(&cs.space)
        )));
    }
    Ok(FeasibilityCertificate::Farkas(cert))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuberSolution {
    pub value: f64,
    pub multipliers: Vec<f64>,
}

/// Optimum of `max Σ aᵢ fᵢ` subject to `aᵢ >= 0` and
/// `Σ aᵢ 1_{Aᵢ}(ω) <= 1` for every trajectory. The credal set defined by the
/// lower bounds is non-empty iff the optimum is at most 1.
pub fn huber_check(cs: &ConstraintSet) -> Result<f64, CredalError> {
    Ok(huber_solve(cs)?.value)
}

pub fn huber_solve(cs: &ConstraintSet) -> Result<HuberSolution, CredalError> {
    huber_solve_rows(&cs.space, &cs.lower_bound_form())
}

fn huber_solve_rows(space: &TrajectorySpace, rows: &[LowerBound]) -> Result<HuberSolution, CredalError> {
    if let Some(r) = rows.iter().find(|r| r.event.is_empty() && r.rhs > 0.0) {
        return Err(CredalError::MalformedBound {
            index: r.origin,
            rhs: r.rhs,
        });
    }
    // Rows with fᵢ <= 0 never raise the optimum; they keep multiplier 0.
    let active: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].rhs > 0.0).collect();
    let mut multipliers = vec![0.0; rows.len()];
    if active.is_empty() {
        return Ok(HuberSolution {
            value: 0.0,
            multipliers,
        });
    }
    let atoms = Atoms::build(space, active.iter().map(|&i| &rows[i].event));
    let objective: Vec<f64> = active.iter().map(|&i| rows[i].rhs).collect();
    let mut lp = LinearProgram::new(active.len(), Sense::Maximize, objective);
    for m in &atoms.members {
        let coeffs: Vec<f64> = active
            .iter()
            .map(|&i| if rows[i].event.contains(m[0]) { 1.0 } else { 0.0 })
            .collect();
        if coeffs.iter().any(|&c| c != 0.0) {
            lp.add_row(coeffs, Relation::Le, 1.0);
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => {
            for (k, &i) in active.iter().enumerate() {
                multipliers[i] = sol.x[k];
            }
            Ok(HuberSolution {
                value: sol.value,
                multipliers,
            })
        }
        LpOutcome::Unbounded => Err(CredalError::Numerical("Huber program unbounded".into())),
        LpOutcome::Infeasible { .. } => {
            Err(CredalError::Numerical("Huber program infeasible".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsStatus {
    Solved,
    Infeasible,
}

/// Lower and upper probability of an event over a credal set. On an
/// infeasible set both values are NaN and no witnesses are returned.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub status: BoundsStatus,
    pub argmin: Option<TrajectoryMeasure>,
    pub argmax: Option<TrajectoryMeasure>,
}

pub fn lower_upper(cs: &ConstraintSet, event: &Event) -> Result<BoundsResult, CredalError> {
    if event.len() != cs.space.size() {
        return Err(EventError::LengthMismatch {
            expected: cs.space.size(),
            found: event.len(),
        }
        .into());
    }
    let c: Vec<f64> = (0..cs.space.size())
        .map(|i| if event.contains(i) { 1.0 } else { 0.0 })
        .collect();
    let min = solve_over(cs, Placement::Extreme(&c, Sense::Minimize))?;
    let max = solve_over(cs, Placement::Extreme(&c, Sense::Maximize))?;
    match (min, max) {
        (Some((lo, pmin)), Some((hi, pmax))) => Ok(BoundsResult {
            lower: lo,
            upper: hi,
            status: BoundsStatus::Solved,
            argmin: Some(pmin),
            argmax: Some(pmax),
        }),
        (None, None) => Ok(BoundsResult {
            lower: f64::NAN,
            upper: f64::NAN,
            status: BoundsStatus::Infeasible,
            argmin: None,
            argmax: None,
        }),
        _ => Err(CredalError::Numerical(
            "min and max solves disagree on feasibility".into(),
        )),
    }
}

/// Minimize a general linear objective over the credal set.
pub fn minimize(cs: &ConstraintSet, objective: &[f64]) -> Result<(f64, TrajectoryMeasure), CredalError> {
    if objective.len() != cs.space.size() {
        return Err(CredalError::SpaceMismatch {
            expected: cs.space.size().to_string(),
            found: objective.len().to_string(),
        });
    }
    solve_over(cs, Placement::Extreme(objective, Sense::Minimize))?.ok_or(CredalError::Infeasible)
}

/// Extreme points of the credal set reached by minimizing seeded random
/// objectives with coordinates uniform in [-1, 1].
pub fn sample_vertices(
    cs: &ConstraintSet,
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectoryMeasure>, CredalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..cs.space.size())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect();
            minimize(cs, &c).map(|(_, p)| p)
        })
        .collect()
}
