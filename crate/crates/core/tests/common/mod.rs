#![allow(dead_code)]

use iqp_core::credal::{cross_time_pairs, sset_family};
use iqp_core::quantum::{CMatrix, CVector};
use iqp_core::{
    born_constraints, qtr_variant_constraints, ConstraintSet, Event, EventExpr, QtrVariant,
    QuantumSystem, TrajectorySpace,
};
use num_complex::Complex64;
use rand::Rng;

pub fn labels(m: usize) -> Vec<String> {
    (0..m).map(|i| i.to_string()).collect()
}

pub fn random_unitary<R: Rng>(m: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(m, m, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    a.qr().q()
}

pub fn random_state<R: Rng>(m: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(m, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

pub fn random_system<R: Rng>(m: usize, n: usize, rng: &mut R) -> QuantumSystem {
    let steps = (1..n).map(|_| random_unitary(m, rng)).collect();
    QuantumSystem::new(labels(m), n, steps, random_state(m, rng)).unwrap()
}

pub fn random_event<R: Rng>(space: &TrajectorySpace, rng: &mut R) -> Event {
    Event::from_indices(space, (0..space.size()).filter(|_| rng.random_bool(0.5)))
}

/// Born and/or typicality constraints of a random system, with the rule mix
/// chosen by `rng`.
pub fn random_constraint_set<R: Rng>(sys: &QuantumSystem, rng: &mut R) -> ConstraintSet {
    let space = TrajectorySpace::of(sys);
    let (m, n) = (space.m(), space.n());
    let k = rng.random_range(1..m.max(2));
    let mut cs = ConstraintSet::new(space);
    let family = sset_family(m, n, k);
    let use_born = rng.random_bool(0.7);
    if use_born && !family.is_empty() {
        cs.extend(born_constraints(sys, &space, &family).unwrap()).unwrap();
    }
    if !use_born || rng.random_bool(0.5) {
        let pairs = cross_time_pairs(m, n, k, None);
        let variant = match rng.random_range(0..4) {
            0 => QtrVariant::Standard { tau_norm: 1e-9 },
            1 => QtrVariant::Min,
            2 => QtrVariant::Eps { epsilon: rng.random_range(0.0..1.0), tau_norm: 1e-9 },
            _ => QtrVariant::Alpha { alpha: rng.random_range(0.1..2.0), tau_norm: 1e-9 },
        };
        cs.extend(qtr_variant_constraints(sys, &space, &pairs, variant).unwrap())
            .unwrap();
    }
    cs
}

/// Membership of a trajectory, evaluated directly on its labels.
pub fn holds(e: &EventExpr, traj: &[usize]) -> bool {
    match e {
        EventExpr::Atom { time, labels } => labels.contains(&traj[*time]),
        EventExpr::Not(a) => !holds(a, traj),
        EventExpr::And(a, b) => holds(a, traj) && holds(b, traj),
        EventExpr::Or(a, b) => holds(a, traj) || holds(b, traj),
    }
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every vertex of `{p >= 0, Σp = 1, aᵢ·p >= bᵢ}` by enumerating active sets.
pub fn polytope_vertices(dim: usize, rows: &[(Vec<f64>, f64)]) -> Vec<Vec<f64>> {
    let mut ineq: Vec<(Vec<f64>, f64)> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            (e, 0.0)
        })
        .collect();
    ineq.extend(rows.iter().cloned());
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for active in combinations(ineq.len(), dim - 1) {
        let mut a = vec![vec![1.0; dim]];
        let mut b = vec![1.0];
        for &i in &active {
            a.push(ineq[i].0.clone());
            b.push(ineq[i].1);
        }
        let Some(x) = solve_square(a, b) else { continue };
        let feasible = ineq
            .iter()
            .all(|(r, rhs)| r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() >= rhs - 1e-9);
        if feasible && !vertices.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
            vertices.push(x);
        }
    }
    vertices
}
