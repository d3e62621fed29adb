//! Dense column-generation simplex for the dual-norm master problem.
//!
//! The master problem is `max c·x` subject to accumulated unit-right-hand-side
//! cuts `g_j·x ≤ 1` (the box `|x_i| ≤ 1` enters as the 2n singleton cuts
//! `±x_i ≤ 1`).  We keep its LP dual in standard form,
//!
//! `min Σ y_j  s.t.  Σ y_j g_j = c,  y ≥ 0`,
//!
//! because a new cut is a new *column* there: the previous optimal basis stays
//! feasible and reoptimization after adding a cut takes a handful of pivots.
//! The simplex multipliers at optimality are exactly the master's maximizer.
//!
//! Bland's rule keeps pivoting deterministic and cycle-free; the basis inverse
//! is refactored periodically to bound numerical drift.

pub struct ColumnLp {
    n: usize,
    rhs: Vec<f64>,
    columns: Vec<Vec<f64>>,
    active: Vec<bool>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    pivots_since_refactor: usize,
}

#[derive(Debug)]
pub struct LpSolution {
    /// Optimal value of the master problem (`min Σ y` = `max c·x`).
    pub objective: f64,
    /// Master maximizer: the simplex multipliers.
    pub x: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("simplex pivot limit reached")]
    PivotLimit,
    #[error("numerically singular basis")]
    Singular,
}

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 128;

impl ColumnLp {
    /// Sets up the dual with the 2n box columns `±e_i` and the basis
    /// `sign(c_i)·e_i`, which is feasible with values `|c_i|`.
    pub fn new(c: &[f64]) -> Self {
        let n = c.len();
        let mut columns = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut plus = vec![0.0; n];
            plus[i] = 1.0;
            columns.push(plus);
            let mut minus = vec![0.0; n];
            minus[i] = -1.0;
            columns.push(minus);
        }
        let basis: Vec<usize> = (0..n)
            .map(|i| if c[i] >= 0.0 { 2 * i } else { 2 * i + 1 })
            .collect();
        let mut lp = ColumnLp {
            n,
            rhs: c.to_vec(),
            columns,
            active: vec![true; 2 * n],
            basis,
            binv: Vec::new(),
            pivots_since_refactor: 0,
        };
        lp.refactor().expect("signed identity basis is invertible");
        lp
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Adds one cut `g·x ≤ 1` of the master as a dual column.
    pub fn add_cut(&mut self, g: Vec<f64>) {
        debug_assert_eq!(g.len(), self.n);
        self.columns.push(g);
        self.active.push(true);
    }

    /// Deactivates non-basic cut columns, oldest first, keeping at most
    /// `keep_recent` of them.  Dropping a dual column only relaxes the master,
    /// so bounds computed later remain valid.
    pub fn prune(&mut self, keep_recent: usize) {
        let cut_start = 2 * self.n;
        let in_basis: Vec<bool> = {
            let mut v = vec![false; self.columns.len()];
            for &b in &self.basis {
                v[b] = true;
            }
            v
        };
        let active_cuts: Vec<usize> = (cut_start..self.columns.len())
            .filter(|&j| self.active[j] && !in_basis[j])
            .collect();
        if active_cuts.len() > keep_recent {
            let drop = active_cuts.len() - keep_recent;
            for &j in active_cuts.iter().take(drop) {
                self.active[j] = false;
            }
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let n = self.n;
        // Gauss-Jordan inversion of the basis matrix with partial pivoting.
        let mut aug: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = vec![0.0; 2 * n];
                for (j, &bj) in self.basis.iter().enumerate() {
                    row[j] = self.columns[bj][i];
                }
                row[n + i] = 1.0;
                row
            })
            .collect();
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|r| (r, aug[r][col].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if mag < 1e-12 {
                return Err(LpError::Singular);
            }
            aug.swap(col, piv);
            let d = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= d;
            }
            for r in 0..n {
                if r != col {
                    let factor = aug[r][col];
                    if factor != 0.0 {
                        for j in 0..2 * n {
                            let upd = aug[col][j] * factor;
                            aug[r][j] -= upd;
                        }
                    }
                }
            }
        }
        self.binv = aug.into_iter().map(|row| row[n..].to_vec()).collect();
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn basic_values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.binv[i]
                    .iter()
                    .zip(&self.rhs)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Simplex multipliers `π`; with all dual costs 1 these are the column
    /// sums of the basis inverse.
    fn multipliers(&self) -> Vec<f64> {
        let mut pi = vec![0.0; self.n];
        for row in &self.binv {
            for (j, v) in row.iter().enumerate() {
                pi[j] += v;
            }
        }
        pi
    }

    /// Reoptimizes with Bland's rule and returns the master optimum.
    pub fn solve(&mut self, pivot_limit: usize) -> Result<LpSolution, LpError> {
        for _ in 0..pivot_limit {
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let pi = self.multipliers();
            // Bland: first column with negative reduced cost 1 − π·a
            let mut entering = None;
            for (j, col) in self.columns.iter().enumerate() {
                if !self.active[j] || self.basis.contains(&j) {
                    continue;
                }
                let rc = 1.0 - dot(&pi, col);
                if rc < -RC_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else {
                let xb = self.basic_values();
                return Ok(LpSolution {
                    objective: xb.iter().sum(),
                    x: pi,
                });
            };

            let w: Vec<f64> = (0..self.n).map(|i| dot(&self.binv[i], &self.columns[e])).collect();
            let xb = self.basic_values();
            // ratio test, Bland tie-break on the leaving variable index
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.n {
                if w[i] > PIVOT_TOL {
                    let ratio = (xb[i].max(0.0)) / w[i];
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || ((ratio - lr).abs() <= 1e-12 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                // the dual is never unbounded here: the master contains x = 0
                return Err(LpError::Singular);
            };

            // elementary row operations carry Binv forward
            let pivot = w[r];
            for j in 0..self.n {
                self.binv[r][j] /= pivot;
            }
            for i in 0..self.n {
                if i != r && w[i] != 0.0 {
                    let factor = w[i];
                    for j in 0..self.n {
                        let upd = factor * self.binv[r][j];
                        self.binv[i][j] -= upd;
                    }
                }
            }
            self.basis[r] = e;
            self.pivots_since_refactor += 1;
        }
        Err(LpError::PivotLimit)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_only_optimum() {
        // max 3x₁ − 2x₂ over the box is 5 at (1, −1)
        let mut lp = ColumnLp::new(&[3.0, -2.0]);
        let sol = lp.solve(100).unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_cut_binds() {
        // max x₁ + x₂ with x₁ + x₂ ≤ 1
        let mut lp = ColumnLp::new(&[1.0, 1.0]);
        lp.add_cut(vec![1.0, 1.0]);
        let sol = lp.solve(100).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cuts_added_incrementally() {
        // max 2x₁ + x₂; cuts carve the box corner down to x₁ ≤ 0.5
        let mut lp = ColumnLp::new(&[2.0, 1.0]);
        let s0 = lp.solve(100).unwrap().objective;
        assert!((s0 - 3.0).abs() < 1e-9);
        lp.add_cut(vec![2.0, 0.0]);
        let s1 = lp.solve(100).unwrap().objective;
        assert!((s1 - 2.0).abs() < 1e-9);
        lp.add_cut(vec![1.0, 1.0]);
        let s2 = lp.solve(100).unwrap();
        // x₁ + x₂ ≤ 1, 2x₁ ≤ 1 → optimum 2·(1/2) + 1/2 = 1.5
        assert!((s2.objective - 1.5).abs() < 1e-9);
        assert!(s2.x[0] <= 0.5 + 1e-9);
    }

    #[test]
    fn degenerate_zero_objective_coordinates() {
        let mut lp = ColumnLp::new(&[0.0, 1.0, 0.0]);
        lp.add_cut(vec![0.0, 1.0, 0.0]);
        let sol = lp.solve(100).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }
}
