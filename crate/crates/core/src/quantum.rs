//! Finite-dimensional state evolution and the pulled-back projected states
//! `Ψ(S) = U†(t) E(Δ) U(t) Ψ₀` attached to single-time events.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for the unitarity and normalization checks at construction.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Default upper bound on `m^n`.
pub const DEFAULT_TRAJECTORY_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("configuration space must have at least one label")]
    NoLabels,
    #[error("time grid must have at least one point")]
    NoTimes,
    #[error("expected {expected} step matrices for {times} grid times, found {found}")]
    StepCount {
        expected: usize,
        found: usize,
        times: usize,
    },
    #[error("step {step} is {rows}x{cols}, expected {m}x{m}")]
    StepShape {
        step: usize,
        rows: usize,
        cols: usize,
        m: usize,
    },
    #[error("step {step} is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { step: usize, deviation: f64 },
    #[error("initial state has {found} amplitudes, expected {expected}")]
    StateLength { expected: usize, found: usize },
    #[error("initial state is not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },
    #[error("time index {time} outside grid 0..{n}")]
    TimeOutOfRange { time: usize, n: usize },
    #[error("label {label} outside 0..{m}")]
    LabelOutOfRange { label: usize, m: usize },
    #[error("region has {found} entries, expected {expected}")]
    RegionSize { expected: usize, found: usize },
    #[error("trajectory count {m}^{n} = {count} exceeds cap {cap}")]
    TrajectoryCap {
        m: usize,
        n: usize,
        count: String,
        cap: usize,
    },
    #[error("time indices must be non-decreasing (position {position})")]
    NonMonotoneTimes { position: usize },
}

/// A subset Δ of the configuration labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Region {
    mask: Vec<bool>,
}

impl Region {
    pub fn empty(m: usize) -> Self {
        Region {
            mask: vec![false; m],
        }
    }

    pub fn full(m: usize) -> Self {
        Region {
            mask: vec![true; m],
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Region { mask }
    }

    pub fn from_labels(m: usize, labels: &[usize]) -> Result<Self, QuantumError> {
        let mut mask = vec![false; m];
        for &label in labels {
            if label >= m {
                return Err(QuantumError::LabelOutOfRange { label, m });
            }
            mask[label] = true;
        }
        Ok(Region { mask })
    }

    pub fn singleton(m: usize, label: usize) -> Result<Self, QuantumError> {
        Self::from_labels(m, &[label])
    }

    pub fn width(&self) -> usize {
        self.mask.len()
    }

    pub fn cardinality(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.mask.get(label).copied().unwrap_or(false)
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn complement(&self) -> Region {
        Region {
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b)
    }

    /// All regions of the given width with `1 <= cardinality <= max_size`
    /// that are not the full space, ordered by bitmask value.
    pub fn proper_regions(m: usize, max_size: usize) -> Vec<Region> {
        let mut out = Vec::new();
        if m >= usize::BITS as usize {
            // Only singletons are practical at this width.
            for l in 0..m {
                out.push(Region::singleton(m, l).unwrap());
            }
            return out;
        }
        for bits in 1usize..(1 << m) {
            let card = bits.count_ones() as usize;
            if card > max_size || card == m {
                continue;
            }
            out.push(Region {
                mask: (0..m).map(|i| bits >> i & 1 == 1).collect(),
            });
        }
        out
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, l) in self.labels().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// A single-time event `(t, Δ)`: all trajectories with `λ(t) ∈ Δ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SSet {
    pub time: usize,
    pub region: Region,
}

impl SSet {
    pub fn new(time: usize, region: Region) -> Self {
        SSet { time, region }
    }

    /// Same-time intersection; `None` if the times differ.
    pub fn same_time_intersection(&self, other: &SSet) -> Option<SSet> {
        (self.time == other.time).then(|| SSet::new(self.time, self.region.intersection(&other.region)))
    }

    pub fn complement(&self) -> SSet {
        SSet::new(self.time, self.region.complement())
    }
}

/// Prints in the event-expression atom syntax, e.g. `(t=1,{0,2})`.
impl fmt::Display for SSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={},{})", self.time, self.region)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SSetState {
    pub amplitudes: CVector,
    /// `‖Ψ(S)‖²`, equal to the Born weight `‖E(Δ)Ψ(t)‖²`.
    pub weight: f64,
}

/// Immutable finite quantum system: labels, time grid, step propagators and
/// initial state. Cumulative propagators `U(t)` and states `Ψ(t)` are cached.
#[derive(Debug, Clone)]
pub struct QuantumSystem {
    labels: Vec<String>,
    n_times: usize,
    steps: Vec<CMatrix>,
    psi0: CVector,
    propagators: Vec<CMatrix>,
    states: Vec<CVector>,
}

impl QuantumSystem {
    pub fn new(
        labels: Vec<String>,
        n_times: usize,
        steps: Vec<CMatrix>,
        psi0: CVector,
    ) -> Result<Self, QuantumError> {
        Self::with_cap(labels, n_times, steps, psi0, DEFAULT_TRAJECTORY_CAP)
    }

    pub fn with_cap(
        labels: Vec<String>,
        n_times: usize,
        steps: Vec<CMatrix>,
        psi0: CVector,
        cap: usize,
    ) -> Result<Self, QuantumError> {
        let m = labels.len();
        if m == 0 {
            return Err(QuantumError::NoLabels);
        }
        if n_times == 0 {
            return Err(QuantumError::NoTimes);
        }
        check_trajectory_cap(m, n_times, cap)?;
        if steps.len() != n_times - 1 {
            return Err(QuantumError::StepCount {
                expected: n_times - 1,
                found: steps.len(),
                times: n_times,
            });
        }
        for (k, step) in steps.iter().enumerate() {
            validate_step(k, step, m)?;
        }
        if psi0.len() != m {
            return Err(QuantumError::StateLength {
                expected: m,
                found: psi0.len(),
            });
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > UNITARITY_TOL {
            return Err(QuantumError::NotNormalized { norm });
        }

        let mut propagators = Vec::with_capacity(n_times);
        propagators.push(CMatrix::identity(m, m));
        for step in &steps {
            let next = step * propagators.last().unwrap();
            propagators.push(next);
        }
        let states = propagators.iter().map(|u| u * &psi0).collect();

        Ok(QuantumSystem {
            labels,
            n_times,
            steps,
            psi0,
            propagators,
            states,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn steps(&self) -> &[CMatrix] {
        &self.steps
    }

    pub fn psi0(&self) -> &CVector {
        &self.psi0
    }

    fn check_time(&self, time: usize) -> Result<(), QuantumError> {
        if time >= self.n_times {
            return Err(QuantumError::TimeOutOfRange {
                time,
                n: self.n_times,
            });
        }
        Ok(())
    }

    pub fn check_sset(&self, s: &SSet) -> Result<(), QuantumError> {
        self.check_time(s.time)?;
        if s.region.width() != self.m() {
            return Err(QuantumError::RegionSize {
                expected: self.m(),
                found: s.region.width(),
            });
        }
        Ok(())
    }

    /// Cumulative propagator `U(t) = steps[t-1]···steps[0]`.
    pub fn propagator(&self, time: usize) -> Result<&CMatrix, QuantumError> {
        self.check_time(time)?;
        Ok(&self.propagators[time])
    }

    /// `Ψ(t) = U(t)Ψ₀`.
    pub fn evolve(&self, time: usize) -> Result<CVector, QuantumError> {
        self.check_time(time)?;
        Ok(self.states[time].clone())
    }

    pub(crate) fn state_ref(&self, time: usize) -> &CVector {
        &self.states[time]
    }

    /// Born weight `|Ψ(t)[label]|²` for every label.
    pub fn label_weights(&self, time: usize) -> Result<Vec<f64>, QuantumError> {
        self.check_time(time)?;
        Ok(self.states[time].iter().map(|a| a.norm_sqr()).collect())
    }

    pub fn sset_state(&self, s: &SSet) -> Result<SSetState, QuantumError> {
        self.check_sset(s)?;
        let projected = project(&self.states[s.time], &s.region);
        let amplitudes = self.propagators[s.time].adjoint() * projected;
        let weight = amplitudes.norm_squared();
        Ok(SSetState { amplitudes, weight })
    }

    pub fn weight(&self, s: &SSet) -> Result<f64, QuantumError> {
        Ok(self.sset_state(s)?.weight)
    }

    /// `‖Ψ(S₁) − Ψ(S₂)‖²`.
    pub fn sset_distance(&self, s1: &SSet, s2: &SSet) -> Result<f64, QuantumError> {
        let a = self.sset_state(s1)?;
        let b = self.sset_state(s2)?;
        Ok((a.amplitudes - b.amplitudes).norm_squared())
    }

    /// `‖E(Δₙ)U(tₙ−tₙ₋₁)···E(Δ₁)Ψ(t₁)‖²`, the probability of a sequence of
    /// ideal position measurements with state reduction. Not additive; it is
    /// never used as a measure.
    pub fn sequential_probability(&self, ssets: &[SSet]) -> Result<f64, QuantumError> {
        for (k, s) in ssets.iter().enumerate() {
            self.check_sset(s)?;
            if k > 0 && s.time < ssets[k - 1].time {
                return Err(QuantumError::NonMonotoneTimes { position: k });
            }
        }
        let Some(first) = ssets.first() else {
            return Ok(1.0);
        };
        let mut v = project(&self.states[first.time], &first.region);
        for pair in ssets.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            if next.time != prev.time {
                // U(t_k, t_{k-1}) = U(t_k) U(t_{k-1})†
                let hop = &self.propagators[next.time] * self.propagators[prev.time].adjoint();
                v = hop * v;
            }
            v = project(&v, &next.region);
        }
        Ok(v.norm_squared())
    }
}

/// Trajectory cap from `IQP_TRAJECTORY_CAP`, falling back to the default when
/// the variable is unset or not a positive integer.
pub fn trajectory_cap() -> usize {
    std::env::var("IQP_TRAJECTORY_CAP")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_TRAJECTORY_CAP)
}

pub fn check_trajectory_cap(m: usize, n: usize, cap: usize) -> Result<usize, QuantumError> {
    let count = (m as u128).checked_pow(n as u32);
    match count {
        Some(c) if c <= cap as u128 => Ok(c as usize),
        _ => Err(QuantumError::TrajectoryCap {
            m,
            n,
            count: count.map_or_else(|| "overflow".to_string(), |c| c.to_string()),
            cap,
        }),
    }
}

pub fn validate_step(k: usize, step: &CMatrix, m: usize) -> Result<(), QuantumError> {
    if step.nrows() != m || step.ncols() != m {
        return Err(QuantumError::StepShape {
            step: k,
            rows: step.nrows(),
            cols: step.ncols(),
            m,
        });
    }
    let gram = step * step.adjoint();
    let mut deviation: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = gram[(i, j)] - Complex64::new(target, 0.0);
            deviation = deviation.max(d.re.abs()).max(d.im.abs());
        }
    }
    if deviation > UNITARITY_TOL {
        return Err(QuantumError::NonUnitary {
            step: k,
            deviation,
        });
    }
    Ok(())
}

/// Apply the diagonal 0/1 projection `E(Δ)`.
fn project(v: &CVector, region: &Region) -> CVector {
    CVector::from_iterator(
        v.len(),
        v.iter().enumerate().map(|(i, a)| {
            if region.contains(i) {
                *a
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    )
}

/// Named step generators.
pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ],
    )
}

pub fn identity(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

/// Unitary discrete Fourier transform, `F[j,k] = ω^{jk}/√m` with `ω = e^{-2πi/m}`.
pub fn dft(m: usize) -> CMatrix {
    let norm = 1.0 / (m as f64).sqrt();
    CMatrix::from_fn(m, m, |j, k| {
        let phase = -2.0 * std::f64::consts::PI * ((j * k) % m) as f64 / m as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// Computational basis vector.
pub fn basis_state(m: usize, label: usize) -> CVector {
    let mut v = CVector::zeros(m);
    v[label] = Complex64::new(1.0, 0.0);
    v
}
