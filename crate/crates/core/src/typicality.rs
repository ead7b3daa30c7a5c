//! Typicality checks: mutual typicality of events under a measure, the
//! physical typicality trigger, the cross-time probability interval and the
//! branch-following statistics of the variable `Y`.

use std::fmt;

use thiserror::Error;

use crate::credal::{
    lower_upper, sample_vertices, BoundsStatus, ConstraintSet, CredalError, FEASIBILITY_TOL,
};
use crate::events::{sset_event, Event, EventError, TrajectorySpace};
use crate::measure::{MeasureError, TrajectoryMeasure};
use crate::quantum::{QuantumError, QuantumSystem, SSet};

/// Slack used when checking the inequalities on computed numbers.
pub const CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TypicalityError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Credal(#[from] CredalError),
    #[error("both events have zero probability")]
    NullEvents,
    #[error("base s-set {0} has zero weight")]
    ZeroWeight(String),
    #[error("weights differ by {diff:.3e} (tolerance {tau:.1e})")]
    NormMismatch { diff: f64, tau: f64 },
    #[error("s-sets {0} and {1} must share a time")]
    TimeMismatch(String, String),
    #[error("branch is empty")]
    EmptyBranch,
    #[error("branch times must be strictly increasing")]
    BranchOrder,
    #[error("base event has zero probability")]
    NullBase,
    #[error("invalid delta {0}")]
    InvalidDelta(f64),
    #[error("constraint set is infeasible")]
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The inequality carries no information (bound <= 0 or >= 1).
    Vacuous,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        })
    }
}

/// `P(A∩B) / max{P(A), P(B)}` and whether it reaches `1 − eps`.
pub fn mutual_typicality(
    p: &TrajectoryMeasure,
    a: &Event,
    b: &Event,
    eps: f64,
) -> Result<(bool, f64), TypicalityError> {
    let pa = p.probability(a)?;
    let pb = p.probability(b)?;
    let denom = pa.max(pb);
    if denom <= 0.0 {
        return Err(TypicalityError::NullEvents);
    }
    let pab = p.probability(&a.intersection(b)?)?;
    let ratio = pab / denom;
    Ok((ratio >= 1.0 - eps, ratio))
}

/// `‖Ψ(S₁)−Ψ(S₂)‖² / ‖Ψ(S₁)‖²`.
pub fn relative_distance(sys: &QuantumSystem, s1: &SSet, s2: &SSet) -> Result<f64, TypicalityError> {
    let w1 = sys.weight(s1)?;
    if w1 <= 0.0 {
        return Err(TypicalityError::ZeroWeight(s1.to_string()));
    }
    Ok(sys.sset_distance(s1, s2)? / w1)
}

fn check_equal_norm(w1: f64, w2: f64, tau: f64) -> Result<(), TypicalityError> {
    let diff = (w1 - w2).abs();
    if diff > tau {
        return Err(TypicalityError::NormMismatch { diff, tau });
    }
    Ok(())
}

/// Whether the physical typicality rule fires for the pair: equal weights
/// and relative distance at most `eps`.
pub fn qtr_predicate(
    sys: &QuantumSystem,
    s1: &SSet,
    s2: &SSet,
    eps: f64,
    tau_norm: f64,
) -> Result<bool, TypicalityError> {
    let rel = relative_distance(sys, s1, s2)?;
    check_equal_norm(sys.weight(s1)?, sys.weight(s2)?, tau_norm)?;
    Ok(rel <= eps)
}

/// Interval `[w − d, w + d]` for `P(S₁∩S₂′)` with `w = ‖Ψ(S₂∩S₂′)‖²` and
/// `d = ‖Ψ(S₁)−Ψ(S₂)‖²`, valid when `S₂` and `S₂′` share a time and
/// `‖Ψ(S₁)‖ = ‖Ψ(S₂)‖`.
pub fn cross_time_bound(
    sys: &QuantumSystem,
    s1: &SSet,
    s2: &SSet,
    s2p: &SSet,
    tau_norm: f64,
) -> Result<(f64, f64), TypicalityError> {
    let meet = s2
        .same_time_intersection(s2p)
        .ok_or_else(|| TypicalityError::TimeMismatch(s2.to_string(), s2p.to_string()))?;
    check_equal_norm(sys.weight(s1)?, sys.weight(s2)?, tau_norm)?;
    let w = sys.weight(&meet)?;
    let d = sys.sset_distance(s1, s2)?;
    Ok((w - d, w + d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityReport {
    pub pair: (SSet, SSet),
    pub weight: f64,
    pub distance: f64,
    pub relative_distance: f64,
    pub epsilon: f64,
    pub qtr_fires: bool,
    /// Lower bound of `P(S₁∩S₂)/max{P(S₁),P(S₂)}` over the credal set,
    /// `P_*(S₁∩S₂) / max{P^*(S₁), P^*(S₂)}`.
    pub measured_ratio: f64,
    pub passes: Verdict,
}

/// Evaluate the pair against a credal set. When the rule fires, the ratio
/// must reach `1 − ε` up to [`CHECK_TOL`]; otherwise the verdict is vacuous.
pub fn typicality_report(
    sys: &QuantumSystem,
    cs: &ConstraintSet,
    s1: &SSet,
    s2: &SSet,
    epsilon: f64,
) -> Result<TypicalityReport, TypicalityError> {
    let weight = sys.weight(s1)?;
    let distance = sys.sset_distance(s1, s2)?;
    let rel = relative_distance(sys, s1, s2)?;
    let e1 = sset_event(&cs.space, s1)?;
    let e2 = sset_event(&cs.space, s2)?;
    let meet = lower_upper(cs, &e1.intersection(&e2)?)?;
    if meet.status == BoundsStatus::Infeasible {
        return Err(TypicalityError::Infeasible);
    }
    let u1 = lower_upper(cs, &e1)?.upper;
    let u2 = lower_upper(cs, &e2)?.upper;
    let denom = u1.max(u2);
    let ratio = if denom > 0.0 {
        (meet.lower / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let qtr_fires = rel <= epsilon;
    let passes = if !qtr_fires || 1.0 - epsilon <= 0.0 {
        Verdict::Vacuous
    } else if ratio >= 1.0 - epsilon - CHECK_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(TypicalityReport {
        pair: (s1.clone(), s2.clone()),
        weight,
        distance,
        relative_distance: rel,
        epsilon,
        qtr_fires,
        measured_ratio: ratio,
        passes,
    })
}

/// A wave-packet branch: one s-set per grid time in `[t₁, t₂]`, all with the
/// weight of the base `S₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub ssets: Vec<SSet>,
    /// `max_t ‖Ψ(S₁)−Ψ(S_t)‖² / ‖Ψ(S₁)‖²`.
    pub epsilon: f64,
}

impl Branch {
    pub fn new(sys: &QuantumSystem, ssets: Vec<SSet>, tau_norm: f64) -> Result<Branch, TypicalityError> {
        let base = ssets.first().ok_or(TypicalityError::EmptyBranch)?;
        if ssets.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(TypicalityError::BranchOrder);
        }
        let w = sys.weight(base)?;
        let mut epsilon: f64 = 0.0;
        for s in &ssets {
            check_equal_norm(w, sys.weight(s)?, tau_norm)?;
            epsilon = epsilon.max(relative_distance(sys, base, s)?);
        }
        Ok(Branch { ssets, epsilon })
    }

    pub fn base(&self) -> &SSet {
        &self.ssets[0]
    }

    /// Number of branch times where trajectory `index` sits in the branch
    /// region; `Y = hits / n_times`.
    pub fn hits(&self, space: &TrajectorySpace, index: usize) -> usize {
        self.ssets
            .iter()
            .filter(|s| s.region.contains(space.label_at(index, s.time)))
            .count()
    }

    pub fn y(&self, space: &TrajectorySpace, index: usize) -> f64 {
        self.hits(space, index) as f64 / self.ssets.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchStats {
    /// `E_P(Y | S₁)`.
    pub expectation: f64,
    /// `P(Y <= 1 − δ | S₁)`.
    pub tail: f64,
    pub delta: f64,
    pub n_times: usize,
}

pub fn branch_stats(
    p: &TrajectoryMeasure,
    branch: &Branch,
    space: &TrajectorySpace,
    delta: f64,
) -> Result<BranchStats, TypicalityError> {
    let first = branch.ssets.first().ok_or(TypicalityError::EmptyBranch)?;
    let base = sset_event(space, first)?;
    branch_stats_given(p, branch, space, delta, &base)
}

/// [`branch_stats`] conditioned on an arbitrary event instead of the
/// branch base.
pub fn branch_stats_given(
    p: &TrajectoryMeasure,
    branch: &Branch,
    space: &TrajectorySpace,
    delta: f64,
    base: &Event,
) -> Result<BranchStats, TypicalityError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(TypicalityError::InvalidDelta(delta));
    }
    if branch.ssets.is_empty() {
        return Err(TypicalityError::EmptyBranch);
    }
    let pb = p.probability(base)?;
    if pb <= 0.0 {
        return Err(TypicalityError::NullBase);
    }
    let n = branch.ssets.len();
    let threshold = 1.0 - delta;
    let (mut ey, mut tail) = (0.0, 0.0);
    for i in base.indices() {
        let mass = p.probs()[i];
        if mass == 0.0 {
            continue;
        }
        let y = branch.hits(space, i) as f64 / n as f64;
        ey += mass * y;
        if y <= threshold {
            tail += mass;
        }
    }
    Ok(BranchStats {
        expectation: ey / pb,
        tail: tail / pb,
        delta,
        n_times: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct W11Report {
    pub epsilon: f64,
    pub delta: f64,
    /// `1 − ε`.
    pub expectation_bound: f64,
    /// `ε / δ`.
    pub tail_bound: f64,
    pub samples: Vec<BranchStats>,
    pub worst_expectation: f64,
    pub worst_tail: f64,
    pub expectation_verdict: Verdict,
    pub tail_verdict: Verdict,
}

/// Check `E_P(Y) >= 1 − ε` and `P(Y <= 1 − δ) <= ε/δ` on `samples` vertices of
/// the credal set (seeded random objectives) plus any `extra` measures that
/// belong to it.
pub fn verify_w11(
    cs: &ConstraintSet,
    branch: &Branch,
    delta: f64,
    samples: usize,
    seed: u64,
    extra: &[TrajectoryMeasure],
) -> Result<W11Report, TypicalityError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(TypicalityError::InvalidDelta(delta));
    }
    let mut measures = match sample_vertices(cs, samples, seed) {
        Ok(v) => v,
        Err(CredalError::Infeasible) => return Err(TypicalityError::Infeasible),
        Err(e) => return Err(e.into()),
    };
    measures.extend(
        extra
            .iter()
            .filter(|p| cs.max_violation(p) <= FEASIBILITY_TOL)
            .cloned(),
    );
    let stats = measures
        .iter()
        .map(|p| branch_stats(p, branch, &cs.space, delta))
        .collect::<Result<Vec<_>, _>>()?;

    let eps = branch.epsilon;
    let expectation_bound = 1.0 - eps;
    let tail_bound = eps / delta;
    let worst_expectation = stats.iter().map(|s| s.expectation).fold(f64::INFINITY, f64::min);
    let worst_tail = stats.iter().map(|s| s.tail).fold(f64::NEG_INFINITY, f64::max);
    let expectation_verdict = if expectation_bound <= 0.0 {
        Verdict::Vacuous
    } else if worst_expectation >= expectation_bound - CHECK_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let tail_verdict = if tail_bound >= 1.0 {
        Verdict::Vacuous
    } else if worst_tail <= tail_bound + CHECK_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(W11Report {
        epsilon: eps,
        delta,
        expectation_bound,
        tail_bound,
        samples: stats,
        worst_expectation,
        worst_tail,
        expectation_verdict,
        tail_verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credal::{born_constraints, born_product_witness, cross_time_pairs, feasibility, qtr_constraints, sset_family, FeasibilityCertificate, DEFAULT_TAU_NORM};
    use crate::quantum::{basis_state, hadamard, identity, Region};

    fn labels(m: usize) -> Vec<String> {
        (0..m).map(|i| i.to_string()).collect()
    }

    fn sset(t: usize, ls: &[usize]) -> SSet {
        SSet::new(t, Region::from_labels(2, ls).unwrap())
    }

    fn beam_splitter() -> QuantumSystem {
        QuantumSystem::new(labels(2), 3, vec![hadamard(), identity(2)], basis_state(2, 0)).unwrap()
    }

    fn mach_zehnder() -> QuantumSystem {
        QuantumSystem::new(labels(2), 3, vec![hadamard(), hadamard()], basis_state(2, 0)).unwrap()
    }

    fn born_qtr(sys: &QuantumSystem) -> ConstraintSet {
        let sp = TrajectorySpace::of(sys);
        let mut cs = born_constraints(sys, &sp, &sset_family(2, 3, 1)).unwrap();
        cs.extend(qtr_constraints(sys, &sp, &cross_time_pairs(2, 3, 1, None), DEFAULT_TAU_NORM).unwrap())
            .unwrap();
        cs
    }

    fn witness(cs: &ConstraintSet) -> TrajectoryMeasure {
        match feasibility(cs).unwrap() {
            FeasibilityCertificate::Witness(p) => p,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mutual_typicality_cases() {
        let sp = TrajectorySpace::new(2, 2, 100).unwrap();
        let u = TrajectoryMeasure::uniform(&sp);
        let a = sset_event(&sp, &sset(0, &[0])).unwrap();
        assert_eq!(mutual_typicality(&u, &a, &a, 0.0).unwrap(), (true, 1.0));
        assert_eq!(mutual_typicality(&u, &a, &a.complement(), 0.1).unwrap(), (false, 0.0));
        let empty = Event::empty(&sp);
        assert!(matches!(mutual_typicality(&u, &empty, &empty, 0.1), Err(TypicalityError::NullEvents)));

        let sys = beam_splitter();
        let cs = born_qtr(&sys);
        let p = witness(&cs);
        let a = sset_event(&cs.space, &sset(1, &[0])).unwrap();
        let b = sset_event(&cs.space, &sset(2, &[0])).unwrap();
        let (fires, ratio) = mutual_typicality(&p, &a, &b, 1e-9).unwrap();
        assert!(fires && ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn predicate_cases() {
        let mz = mach_zehnder();
        assert!(qtr_predicate(&mz, &sset(1, &[0]), &sset(1, &[0]), 1e-12, 1e-9).unwrap());
        assert!(!qtr_predicate(&mz, &sset(1, &[0]), &sset(1, &[1]), 0.1, 1e-9).unwrap());
        assert!((relative_distance(&mz, &sset(1, &[0]), &sset(1, &[1])).unwrap() - 2.0).abs() < 1e-12);
        assert!((relative_distance(&mz, &sset(1, &[0]), &sset(2, &[0])).unwrap() - 1.0).abs() < 1e-12);
        let bs = beam_splitter();
        assert!(qtr_predicate(&bs, &sset(1, &[0]), &sset(2, &[0]), 1e-9, 1e-9).unwrap());
        assert!(matches!(
            qtr_predicate(&bs, &SSet::new(1, Region::empty(2)), &sset(2, &[0]), 0.1, 1e-9),
            Err(TypicalityError::ZeroWeight(_))
        ));
        assert!(matches!(
            qtr_predicate(&bs, &sset(1, &[0]), &sset(2, &[0, 1]), 0.1, 1e-9),
            Err(TypicalityError::NormMismatch { .. })
        ));
    }

    #[test]
    fn cross_time_bound_cases() {
        let bs = beam_splitter();
        let (s1, s2) = (sset(1, &[0]), sset(2, &[0]));
        let (lo, hi) = cross_time_bound(&bs, &s1, &s2, &s2, 1e-9).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        let (lo, hi) = cross_time_bound(&bs, &s1, &s2, &SSet::new(2, Region::empty(2)), 1e-9).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
        assert!(matches!(
            cross_time_bound(&bs, &s1, &s2, &sset(1, &[0]), 1e-9),
            Err(TypicalityError::TimeMismatch(..))
        ));

        let mz = mach_zehnder();
        assert!(matches!(
            cross_time_bound(&mz, &s1, &s2, &s2, 1e-9),
            Err(TypicalityError::NormMismatch { .. })
        ));
    }

    #[test]
    fn branch_on_point_mass_and_witness() {
        let still = QuantumSystem::new(labels(2), 3, vec![identity(2); 2], basis_state(2, 0)).unwrap();
        let sp = TrajectorySpace::of(&still);
        let branch = Branch::new(&still, vec![sset(0, &[0]), sset(1, &[0]), sset(2, &[0])], 1e-9).unwrap();
        assert_eq!(branch.epsilon, 0.0);
        let p = born_product_witness(&still, &sp);
        let st = branch_stats(&p, &branch, &sp, 1e-3).unwrap();
        assert_eq!((st.expectation, st.tail), (1.0, 0.0));

        let bs = beam_splitter();
        let cs = born_qtr(&bs);
        let branch = Branch::new(&bs, vec![sset(1, &[0]), sset(2, &[0])], 1e-9).unwrap();
        let st = branch_stats(&witness(&cs), &branch, &cs.space, 0.1).unwrap();
        assert!(st.expectation >= 1.0 - 1e-9);
        assert!(st.expectation <= 1.0 - st.tail * st.delta + 1e-12);
    }

    #[test]
    fn branch_validation() {
        let bs = beam_splitter();
        assert!(matches!(Branch::new(&bs, vec![], 1e-9), Err(TypicalityError::EmptyBranch)));
        assert!(matches!(
            Branch::new(&bs, vec![sset(2, &[0]), sset(1, &[0])], 1e-9),
            Err(TypicalityError::BranchOrder)
        ));
        assert!(matches!(
            Branch::new(&bs, vec![sset(0, &[0]), sset(1, &[0])], 1e-9),
            Err(TypicalityError::NormMismatch { .. })
        ));
    }

    #[test]
    fn w11_zero_epsilon_and_vacuous_cases() {
        let bs = beam_splitter();
        let cs = born_qtr(&bs);
        let branch = Branch::new(&bs, vec![sset(1, &[0]), sset(2, &[0])], 1e-9).unwrap();
        let r = verify_w11(&cs, &branch, 1e-3, 10, 42, &[]).unwrap();
        assert_eq!(r.samples.len(), 10);
        assert!(r.samples.iter().all(|s| (s.expectation - 1.0).abs() < 1e-9));
        assert_eq!(r.expectation_verdict, Verdict::Pass);
        assert_eq!(r.tail_verdict, Verdict::Pass);

        let mz = mach_zehnder();
        let sp = TrajectorySpace::of(&mz);
        let cs = born_constraints(&mz, &sp, &sset_family(2, 3, 1)).unwrap();
        let branch = Branch {
            ssets: vec![sset(1, &[0]), sset(2, &[0])],
            epsilon: relative_distance(&mz, &sset(1, &[0]), &sset(2, &[0])).unwrap(),
        };
        let r = verify_w11(&cs, &branch, 0.5, 4, 1, &[born_product_witness(&mz, &sp)]).unwrap();
        assert_eq!(r.expectation_verdict, Verdict::Vacuous);
        assert_eq!(r.tail_verdict, Verdict::Vacuous);
        assert_eq!(r.samples.len(), 5);
    }
}
