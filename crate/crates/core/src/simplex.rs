//! Dense revised simplex for the small linear programs in this crate.
//!
//! The barrier trainer solves LPs with ~16 structural variables and a few
//! hundred inequality rows. It does so through the dual (16 rows, many
//! columns), so the working set here is tiny and a dense explicit basis
//! inverse is the right tool. Pivoting uses Bland's rule throughout:
//! deterministic and cycle-free, which matters more than pivot count at
//! this size.
//!
//! Problems are in equality form `min c.x  s.t.  A x = b,  0 <= x <= upper`
//! (`upper` may be infinite). [`solve_with_basis`] starts from a caller-
//! supplied feasible basis; [`solve_ge`] is a two-phase driver for
//! `A x >= b, x >= 0` problems that also reports the dual multipliers.

use thiserror::Error;

const RC_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("problem dimensions are inconsistent")]
    BadShape,
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("pivot limit exceeded")]
    IterationLimit,
}

/// Equality-form LP. `cols[j]` is the j-th column of `A` (length `m`).
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub cols: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Per-variable upper bound; `f64::INFINITY` when absent.
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `pi = c_B B^-1` of the final basis, one per row.
    pub row_multipliers: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau<'a> {
    p: &'a LpProblem,
    m: usize,
    n: usize,
    basis: Vec<usize>,
    status: Vec<Status>,
    /// Explicit basis inverse, row-major m x m.
    binv: Vec<f64>,
}

impl<'a> Tableau<'a> {
    fn new(p: &'a LpProblem, basis: Vec<usize>) -> Result<Self, LpError> {
        let m = p.b.len();
        let n = p.cols.len();
        if basis.len() != m
            || p.c.len() != n
            || p.upper.len() != n
            || p.cols.iter().any(|col| col.len() != m)
        {
            return Err(LpError::BadShape);
        }
        let mut status = vec![Status::AtLower; n];
        for &j in &basis {
            status[j] = Status::Basic;
        }
        let mut t = Self { p, m, n, basis, status, binv: vec![0.0; m * m] };
        t.refactorize()?;
        Ok(t)
    }

    /// Rebuilds `binv` from scratch by Gauss-Jordan on the basis matrix.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![0.0; m * 2 * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * 2 * m + k] = self.p.cols[j][i];
            }
        }
        for i in 0..m {
            a[i * 2 * m + m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&r1, &r2| {
                    a[r1 * 2 * m + col]
                        .abs()
                        .total_cmp(&a[r2 * 2 * m + col].abs())
                })
                .unwrap();
            if a[piv * 2 * m + col].abs() < 1e-12 {
                return Err(LpError::BadShape);
            }
            if piv != col {
                for k in 0..2 * m {
                    a.swap(col * 2 * m + k, piv * 2 * m + k);
                }
            }
            let d = a[col * 2 * m + col];
            for k in 0..2 * m {
                a[col * 2 * m + k] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * 2 * m + col];
                    if f != 0.0 {
                        for k in 0..2 * m {
                            a[r * 2 * m + k] -= f * a[col * 2 * m + k];
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = a[i * 2 * m + m + k];
            }
        }
        Ok(())
    }

    /// Effective right-hand side accounting for nonbasic-at-upper columns.
    fn basic_values(&self) -> Vec<f64> {
        let m = self.m;
        let mut beff = self.p.b.clone();
        for j in 0..self.n {
            if self.status[j] == Status::AtUpper {
                let u = self.p.upper[j];
                for i in 0..m {
                    beff[i] -= self.p.cols[j][i] * u;
                }
            }
        }
        let mut xb = vec![0.0; m];
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * beff[k];
            }
            xb[i] = s;
        }
        xb
    }

    fn multipliers(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for k in 0..m {
            let mut s = 0.0;
            for (i, &j) in self.basis.iter().enumerate() {
                s += self.p.c[j] * self.binv[i * m + k];
            }
            pi[k] = s;
        }
        pi
    }

    fn reduced_cost(&self, pi: &[f64], j: usize) -> f64 {
        let mut s = self.p.c[j];
        for i in 0..self.m {
            s -= pi[i] * self.p.cols[j][i];
        }
        s
    }

    fn solve(&mut self) -> Result<LpSolution, LpError> {
        let m = self.m;
        for _pivot in 0..MAX_PIVOTS {
            let pi = self.multipliers();
            // Bland: first improving nonbasic index.
            let mut entering = None;
            for j in 0..self.n {
                match self.status[j] {
                    Status::Basic => {}
                    Status::AtLower => {
                        if self.p.upper[j] > 0.0 && self.reduced_cost(&pi, j) < -RC_TOL {
                            entering = Some((j, 1.0));
                            break;
                        }
                    }
                    Status::AtUpper => {
                        if self.reduced_cost(&pi, j) > RC_TOL {
                            entering = Some((j, -1.0));
                            break;
                        }
                    }
                }
            }
            let Some((j_in, dir)) = entering else {
                return Ok(self.extract(pi));
            };

            // Direction of basic variables as the entering one moves by t.
            let mut d = vec![0.0; m];
            for i in 0..m {
                let mut s = 0.0;
                for k in 0..m {
                    s += self.binv[i * m + k] * self.p.cols[j_in][k];
                }
                d[i] = s * dir;
            }
            let xb = self.basic_values();

            // Ratio test: basic variables hit a bound, or the entering
            // variable flips to its other bound.
            let mut t_max = self.p.upper[j_in];
            let mut leaving: Option<(usize, Status)> = None;
            for i in 0..m {
                let (limit, hit) = if d[i] > RC_TOL {
                    (xb[i] / d[i], Status::AtLower)
                } else if d[i] < -RC_TOL {
                    let u = self.p.upper[self.basis[i]];
                    if u.is_finite() {
                        ((u - xb[i]) / -d[i], Status::AtUpper)
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    None => limit < t_max - RC_TOL,
                    Some((cur, _)) => {
                        limit < t_max - RC_TOL
                            || (limit < t_max + RC_TOL && self.basis[i] < self.basis[cur])
                    }
                };
                if better {
                    t_max = limit.min(t_max);
                    leaving = Some((i, hit));
                }
            }

            match leaving {
                None => {
                    if t_max.is_infinite() {
                        return Err(LpError::Unbounded);
                    }
                    // Bound flip: entering variable crosses to its other bound.
                    self.status[j_in] = match self.status[j_in] {
                        Status::AtLower => Status::AtUpper,
                        Status::AtUpper => Status::AtLower,
                        Status::Basic => unreachable!(),
                    };
                }
                Some((row, hit)) => {
                    let j_out = self.basis[row];
                    self.status[j_out] = hit;
                    self.status[j_in] = Status::Basic;
                    self.basis[row] = j_in;
                    // Elementary update of the inverse with the raw entering
                    // column direction (independent of `dir`).
                    let mut draw = vec![0.0; m];
                    for i in 0..m {
                        let mut s = 0.0;
                        for k in 0..m {
                            s += self.binv[i * m + k] * self.p.cols[j_in][k];
                        }
                        draw[i] = s;
                    }
                    let piv = draw[row];
                    if piv.abs() < 1e-12 {
                        self.refactorize()?;
                        continue;
                    }
                    for k in 0..m {
                        self.binv[row * m + k] /= piv;
                    }
                    for i in 0..m {
                        if i != row && draw[i] != 0.0 {
                            let f = draw[i];
                            for k in 0..m {
                                self.binv[i * m + k] -= f * self.binv[row * m + k];
                            }
                        }
                    }
                }
            }
        }
        Err(LpError::IterationLimit)
    }

    fn extract(&self, pi: Vec<f64>) -> LpSolution {
        let xb = self.basic_values();
        let mut x = vec![0.0; self.n];
        for j in 0..self.n {
            if self.status[j] == Status::AtUpper {
                x[j] = self.p.upper[j];
            }
        }
        for (i, &j) in self.basis.iter().enumerate() {
            x[j] = xb[i].max(0.0);
        }
        let objective = x.iter().zip(&self.p.c).map(|(xi, ci)| xi * ci).sum();
        LpSolution { x, objective, row_multipliers: pi }
    }
}

/// Solves an equality-form LP from a caller-supplied feasible basis.
pub fn solve_with_basis(p: &LpProblem, basis: Vec<usize>) -> Result<LpSolution, LpError> {
    Tableau::new(p, basis)?.solve()
}

/// Two-phase simplex for `min c.x  s.t.  A x >= b, x >= 0`.
///
/// `rows[i]` is the i-th constraint row. The solution's `row_multipliers`
/// are the dual values of the `>=` rows (nonnegative at optimality).
pub fn solve_ge(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Result<LpSolution, LpError> {
    let m = rows.len();
    let n = c.len();
    if b.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(LpError::BadShape);
    }
    // Equality form A x - s = b with surplus s >= 0, plus one artificial
    // per row signed like b so the artificial basis starts feasible.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| rows[i][j]).collect())
        .collect();
    let beff = b.to_vec();
    for i in 0..m {
        let mut col = vec![0.0; m];
        col[i] = -1.0;
        cols.push(col);
    }
    for i in 0..m {
        let mut col = vec![0.0; m];
        col[i] = if beff[i] < 0.0 { -1.0 } else { 1.0 };
        cols.push(col);
    }
    let total = n + 2 * m;
    let mut upper = vec![f64::INFINITY; total];
    let mut phase1_c = vec![0.0; total];
    for j in n + m..total {
        phase1_c[j] = 1.0;
    }
    let p1 = LpProblem { cols: cols.clone(), b: beff.clone(), c: phase1_c, upper: upper.clone() };
    let basis: Vec<usize> = (n + m..total).collect();
    let s1 = solve_with_basis(&p1, basis)?;
    if s1.objective > 1e-7 {
        return Err(LpError::Infeasible);
    }
    // Phase 2: real costs; artificials pinned at zero.
    let mut c2 = vec![0.0; total];
    c2[..n].copy_from_slice(c);
    for j in n + m..total {
        upper[j] = 0.0;
    }
    // Recover the phase-1 final basis from the solution's support: rebuild
    // by running phase 2 from the same basis. The tableau tracks its basis
    // internally, so re-derive it by solving phase 2 with a fresh start
    // from the artificial basis but zero-pinned artificials would be
    // infeasible; instead thread the basis through.
    let p2 = LpProblem { cols, b: beff, c: c2, upper };
    let s2 = solve_phase2_from(&p1, p2, s1)?;
    let mut x = s2.x[..n].to_vec();
    for xi in x.iter_mut() {
        if xi.abs() < 1e-12 {
            *xi = 0.0;
        }
    }
    Ok(LpSolution { x, objective: s2.objective, row_multipliers: s2.row_multipliers })
}

/// Runs phase 2 starting from the basis implied by a phase-1 solution.
fn solve_phase2_from(
    p1: &LpProblem,
    p2: LpProblem,
    s1: LpSolution,
) -> Result<LpSolution, LpError> {
    let m = p1.b.len();
    // Choose a basis of m columns consistent with the phase-1 point:
    // prefer strictly positive variables, then pad with surplus/structural
    // columns that keep the basis nonsingular.
    let n_total = p1.cols.len();
    let mut chosen: Vec<usize> = (0..n_total)
        .filter(|&j| s1.x[j] > 1e-9 && p2.upper[j] > 0.0)
        .collect();
    if chosen.len() > m {
        return Err(LpError::BadShape);
    }
    let mut used = vec![false; n_total];
    for &j in &chosen {
        used[j] = true;
    }
    // Greedy completion by Gaussian elimination over candidate columns.
    let mut have = chosen.clone();
    let mut mat: Vec<Vec<f64>> = have.iter().map(|&j| p1.cols[j].clone()).collect();
    for j in 0..n_total {
        if have.len() == m {
            break;
        }
        if used[j] || p2.upper[j] <= 0.0 {
            continue;
        }
        let mut trial = mat.clone();
        trial.push(p1.cols[j].clone());
        if rank(&trial) == trial.len() {
            mat = trial;
            have.push(j);
            used[j] = true;
        }
    }
    if have.len() < m {
        return Err(LpError::BadShape);
    }
    chosen = have;
    solve_with_basis(&p2, chosen)
}

/// Numerical rank of a small set of length-m column vectors.
fn rank(cols: &[Vec<f64>]) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let m = cols[0].len();
    let n = cols.len();
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut r = 0;
    for col in 0..n {
        let mut piv = None;
        let mut best = 1e-9;
        for row in r..m {
            if a[col][row].abs() > best {
                best = a[col][row].abs();
                piv = Some(row);
            }
        }
        let Some(piv) = piv else { continue };
        for c in a.iter_mut() {
            c.swap(r, piv);
        }
        let d = a[col][r];
        for c2 in col..n {
            a[c2][r] /= d;
        }
        for row in 0..m {
            if row != r && a[col][row].abs() > 0.0 {
                let f = a[col][row];
                for c2 in col..n {
                    a[c2][row] -= f * a[c2][r];
                }
            }
        }
        r += 1;
        if r == m {
            break;
        }
    }
    r
}
