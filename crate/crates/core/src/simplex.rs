//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Sized for desk-scale problems: a few hundred rows, up to ~1e5 columns.
//! The pivot sequence depends only on the input ordering, so results are
//! reproducible bit for bit.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub rows: Vec<LpRow>,
    pub objective: Vec<f64>,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpSettings {
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    /// Phase-1 residual above which the problem is declared infeasible.
    pub feasibility_tol: f64,
    /// Reduced costs below `-cost_tol` are improving.
    pub cost_tol: f64,
    /// `None` picks a limit from the problem size.
    pub max_pivots: Option<usize>,
}

impl Default for LpSettings {
    fn default() -> Self {
        LpSettings {
            pivot_tol: 1e-10,
            feasibility_tol: 1e-9,
            cost_tol: 1e-10,
            max_pivots: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible { residual: f64 },
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} has {found} coefficients, expected {expected}")]
    Shape {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite coefficient in row {row}")]
    NonFinite { row: usize },
    #[error("pivot limit {limit} exceeded in phase {phase}")]
    PivotLimit { phase: u8, limit: usize },
}

struct Tableau {
    rows: usize,
    width: usize, // columns + rhs
    a: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    limit: usize,
    settings: LpSettings,
}

enum RunStatus {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.a[r * w + c];
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[c] = 0.0;
                let last = row.len() - 1;
                if row[last] < 0.0 && row[last] > -1e-12 {
                    row[last] = 0.0;
                }
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        let f = self.cost[c];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn run(&mut self, allowed: &[bool], phase: u8) -> Result<RunStatus, LpError> {
        let tol = self.settings.cost_tol;
        let ptol = self.settings.pivot_tol;
        loop {
            // Bland: lowest-index improving column.
            let Some(enter) = (0..self.width - 1).find(|&j| allowed[j] && self.cost[j] < -tol)
            else {
                return Ok(RunStatus::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, enter);
                if aij <= ptol {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / aij;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if (!tie && ratio < best) || (tie && self.basis[i] < self.basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(RunStatus::Unbounded);
            };
            if self.pivots >= self.limit {
                return Err(LpError::PivotLimit {
                    phase,
                    limit: self.limit,
                });
            }
            self.pivot(r, enter);
        }
    }
}

impl LinearProgram {
    pub fn new(n_vars: usize, sense: Sense, objective: Vec<f64>) -> Self {
        LinearProgram {
            n_vars,
            rows: Vec::new(),
            objective,
            sense,
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(LpRow {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        self.solve_with(&LpSettings::default())
    }

    /// Minimizes (or maximizes) the objective subject to the rows and
    /// `x >= 0`.
    pub fn solve_with(&self, settings: &LpSettings) -> Result<LpOutcome, LpError> {
        let n = self.n_vars;
        if self.objective.len() != n {
            return Err(LpError::Shape {
                row: usize::MAX,
                expected: n,
                found: self.objective.len(),
            });
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Shape {
                    row: k,
                    expected: n,
                    found: row.coeffs.len(),
                });
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::NonFinite { row: k });
            }
        }

        // Normalize to non-negative right-hand sides.
        let rows: Vec<(f64, Relation, f64)> = self
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let rel = match r.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (-1.0, rel, -r.rhs)
                } else {
                    (1.0, r.relation, r.rhs)
                }
            })
            .collect();

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let slack0 = n;
        let art0 = n + n_slack;
        let cols = n + n_slack + n_art;
        let width = cols + 1;

        let mut a = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut cost = vec![0.0; width];
        let (mut ks, mut ka) = (0, 0);
        for (i, (sign, rel, rhs)) in rows.iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            for (dst, src) in row[..n].iter_mut().zip(&self.rows[i].coeffs) {
                *dst = sign * src;
            }
            row[cols] = *rhs;
            match rel {
                Relation::Le => {
                    row[slack0 + ks] = 1.0;
                    basis[i] = slack0 + ks;
                    ks += 1;
                }
                Relation::Ge => {
                    row[slack0 + ks] = -1.0;
                    ks += 1;
                    row[art0 + ka] = 1.0;
                    basis[i] = art0 + ka;
                    ka += 1;
                }
                Relation::Eq => {
                    row[art0 + ka] = 1.0;
                    basis[i] = art0 + ka;
                    ka += 1;
                }
            }
            if basis[i] >= art0 {
                // phase-1 reduced costs: c_j − Σ_{artificial rows} a_ij
                for j in 0..art0 {
                    cost[j] -= row[j];
                }
                cost[cols] -= row[cols];
            }
        }

        let limit = settings
            .max_pivots
            .unwrap_or_else(|| 10_000usize.max(50 * (m + cols)));
        let mut t = Tableau {
            rows: m,
            width,
            a,
            cost,
            basis,
            pivots: 0,
            limit,
            settings: *settings,
        };

        if n_art > 0 {
            let allowed = vec![true; cols];
            // Phase 1 is bounded below by zero.
            t.run(&allowed, 1)?;
            let residual = -t.cost[cols];
            if residual > settings.feasibility_tol {
                return Ok(LpOutcome::Infeasible { residual });
            }
            // Drive zero-valued artificials out of the basis where possible;
            // rows where that fails are redundant and stay inert.
            for i in 0..m {
                if t.basis[i] >= art0 {
                    if let Some(j) = (0..art0).find(|&j| t.at(i, j).abs() > settings.pivot_tol) {
                        t.pivot(i, j);
                    }
                }
            }
        }

        // Phase 2.
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; width];
        for j in 0..n {
            c[j] = sign * self.objective[j];
        }
        t.cost = c.clone();
        for i in 0..m {
            let cb = c[t.basis[i]];
            if cb != 0.0 {
                for j in 0..width {
                    t.cost[j] -= cb * t.a[i * width + j];
                }
            }
        }
        for i in 0..m {
            t.cost[t.basis[i]] = 0.0;
        }
        let allowed: Vec<bool> = (0..cols).map(|j| j < art0).collect();
        match t.run(&allowed, 2)? {
            RunStatus::Unbounded => return Ok(LpOutcome::Unbounded),
            RunStatus::Optimal => {}
        }

        let mut x = vec![0.0; n];
        for i in 0..m {
            if t.basis[i] < n {
                x[t.basis[i]] = t.rhs(i).max(0.0);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal(LpSolution {
            x,
            value,
            pivots: t.pivots,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn optimal(out: LpOutcome) -> LpSolution {
        match out {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut lp = LinearProgram::new(2, Sense::Maximize, vec![3.0, 5.0]);
        lp.add_row(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_row(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_row(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = optimal(lp.solve().unwrap());
        assert!((s.value - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y + 3z, x + y + z = 1, y + z >= 0.5, z >= 0.2 -> 0.5 + 0.6 + 0.6 = 1.7
        let mut lp = LinearProgram::new(3, Sense::Minimize, vec![1.0, 2.0, 3.0]);
        lp.add_row(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![0.0, 1.0, 1.0], Relation::Ge, 0.5);
        lp.add_row(vec![0.0, 0.0, 1.0], Relation::Ge, 0.2);
        let s = optimal(lp.solve().unwrap());
        assert!((s.value - 1.7).abs() < 1e-9, "{}", s.value);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(2, Sense::Minimize, vec![0.0, 0.0]);
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![1.0, 0.0], Relation::Ge, 0.8);
        lp.add_row(vec![0.0, 1.0], Relation::Ge, 0.8);
        match lp.solve().unwrap() {
            LpOutcome::Infeasible { residual } => assert!((residual - 0.6).abs() < 1e-9),
            other => panic!("{other:?}"),
        }

        let mut lp = LinearProgram::new(2, Sense::Maximize, vec![1.0, 0.0]);
        lp.add_row(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // -x - y <= -1 is x + y >= 1; duplicated equality is redundant.
        let mut lp = LinearProgram::new(2, Sense::Minimize, vec![2.0, 1.0]);
        lp.add_row(vec![-1.0, -1.0], Relation::Le, -1.0);
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![2.0, 2.0], Relation::Eq, 2.0);
        let s = optimal(lp.solve().unwrap());
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shape_errors() {
        let mut lp = LinearProgram::new(2, Sense::Minimize, vec![0.0, 0.0]);
        lp.add_row(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Shape { row: 0, .. })));
        let mut lp = LinearProgram::new(1, Sense::Minimize, vec![0.0]);
        lp.add_row(vec![f64::NAN], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::NonFinite { row: 0 })));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example; Bland's rule must terminate. Optimum -1/20.
        let mut lp = LinearProgram::new(4, Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = optimal(lp.solve().unwrap());
        assert!((s.value + 0.05).abs() < 1e-9, "{}", s.value);
    }

    /// Solve a square system by Gaussian elimination with partial pivoting.
    fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
            if a[p][k].abs() < 1e-12 {
                return None;
            }
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        Some(x)
    }

    /// Brute-force optimum over all vertices of {Ax <= b, x >= 0}.
    fn vertex_optimum(n: usize, a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
        // constraint list: rows of A (tight: a x = b) and x_j = 0
        let mut all: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            all.push((e, 0.0));
        }
        let k = all.len();
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << k) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let chosen: Vec<_> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let m: Vec<Vec<f64>> = chosen.iter().map(|&i| all[i].0.clone()).collect();
            let r: Vec<f64> = chosen.iter().map(|&i| all[i].1).collect();
            let Some(x) = solve_square(m, r) else { continue };
            let ok = x.iter().all(|&v| v >= -1e-9)
                && a.iter()
                    .zip(b)
                    .all(|(row, &bi)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9);
            if ok {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        best
    }

    #[test]
    fn random_bounded_problems_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.random_range(2..=3);
            let m = rng.random_range(1..=4);
            let mut a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..2.0)).collect())
                .collect();
            let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
            // box keeps every instance bounded
            a.push(vec![1.0; n]);
            b.push(5.0);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

            let mut lp = LinearProgram::new(n, Sense::Maximize, c.clone());
            for (row, &bi) in a.iter().zip(&b) {
                lp.add_row(row.clone(), Relation::Le, bi);
            }
            let s = optimal(lp.solve().unwrap());
            let brute = vertex_optimum(n, &a, &b, &c).unwrap();
            assert!((s.value - brute).abs() < 1e-8, "{} vs {}", s.value, brute);
        }
    }
}
