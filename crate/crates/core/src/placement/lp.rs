//! Bounded-variable revised simplex.
//!
//! Two phases with artificial variables, an explicit basis inverse updated
//! in product form and refactorised when the primal residual drifts, a
//! Harris ratio test, and Bland's rule after long runs of degenerate pivots.
//! Rows are scaled to unit max-norm and the objective to unit max-norm
//! before solving; reported values are in the caller's units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint<T> {
    /// Sparse row: (variable index, coefficient).
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

/// `min c.x` subject to linear rows and `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram<T> {
    pub num_vars: usize,
    pub objective: Vec<T>,
    pub constraints: Vec<LinearConstraint<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    /// Variables boxed in [0, 1], no rows yet.
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        LinearProgram {
            num_vars: n,
            objective,
            constraints: Vec::new(),
            lower: vec![T::zero(); n],
            upper: vec![T::one(); n],
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) -> &mut Self {
        self.constraints.push(LinearConstraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    fn check(&self) -> Result<(), LpError> {
        let bad = |msg: String| Err(LpError::MalformedLp(msg));
        if self.objective.len() != self.num_vars {
            return bad(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            ));
        }
        if self.lower.len() != self.num_vars || self.upper.len() != self.num_vars {
            return bad("bound vectors do not match the variable count".into());
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return bad(format!("objective coefficient {j} is not finite"));
        }
        for j in 0..self.num_vars {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == T::infinity() || u == T::neg_infinity() {
                return bad(format!("variable {j} has invalid bounds"));
            }
            if !l.is_finite() && !u.is_finite() {
                return bad(format!("variable {j} is free; free variables are not supported"));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return bad(format!("row {i} has a non-finite right-hand side"));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.num_vars {
                    return bad(format!("row {i} references variable {j}"));
                }
                if !a.is_finite() {
                    return bad(format!("row {i} has a non-finite coefficient"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

impl<T> LpStatus<T> {
    pub fn optimal(self) -> Option<(Vec<T>, T)> {
        match self {
            LpStatus::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("basis became numerically singular")]
    Singular,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
}

/// An optimal basis that can seed a solve of the same rows and bounds with
/// a different objective.
#[derive(Clone, Debug)]
pub struct WarmStart<T> {
    rows: usize,
    vars: usize,
    state: Vec<VarState>,
    binv: Vec<T>,
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>, tol: T) -> Result<LpStatus<T>, LpError> {
    solve_lp_warm(lp, tol, None).map(|(s, _)| s)
}

/// Solves `lp`, starting from `warm` when it fits and is primal feasible.
/// On optimality also returns a basis for the next solve.
pub fn solve_lp_warm<T: Scalar>(
    lp: &LinearProgram<T>,
    tol: T,
    warm: Option<&WarmStart<T>>,
) -> Result<(LpStatus<T>, Option<WarmStart<T>>), LpError> {
    lp.check()?;
    let mut sx = Simplex::new(lp, tol);
    let warmed = match warm {
        Some(w) => sx.load(w)?,
        None => false,
    };
    if !warmed {
        sx.cold_start();
        let phase1: Vec<T> = (0..sx.ntot)
            .map(|j| if j >= sx.n_art_start { T::one() } else { T::zero() })
            .collect();
        sx.set_cost(phase1);
        if sx.run()? == Outcome::Unbounded {
            // Phase one is bounded below by zero.
            return Err(LpError::Singular);
        }
        let infeasibility: T = (sx.n_art_start..sx.ntot).map(|j| sx.x[j]).sum();
        if infeasibility > tol {
            return Ok((LpStatus::Infeasible, None));
        }
        for j in sx.n_art_start..sx.ntot {
            sx.upper[j] = T::zero();
            if !matches!(sx.state[j], VarState::Basic(_)) {
                sx.x[j] = T::zero();
                sx.state[j] = VarState::Lower;
            }
        }
    }
    let mut phase2 = vec![T::zero(); sx.ntot];
    phase2[..sx.n].copy_from_slice(&sx.scaled_cost);
    sx.set_cost(phase2);
    match sx.run()? {
        Outcome::Unbounded => Ok((LpStatus::Unbounded, None)),
        Outcome::Optimal => {
            let x: Vec<T> = (0..sx.n)
                .map(|j| sx.x[j].max(lp.lower[j]).min(lp.upper[j]))
                .collect();
            let value = lp
                .objective
                .iter()
                .zip(&x)
                .map(|(&c, &v)| c * v)
                .sum();
            let warm = sx.export();
            Ok((LpStatus::Optimal { x, value }, warm))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

/// Pivots between residual checks.
const RESIDUAL_CHECK_EVERY: usize = 64;
/// Degenerate pivots in a row before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 40;

struct Simplex<T> {
    /// Structural variables.
    n: usize,
    m: usize,
    /// First artificial index; slacks occupy `n..n + m`.
    n_art_start: usize,
    ntot: usize,
    cols: Vec<Vec<(usize, T)>>,
    lower: Vec<T>,
    upper: Vec<T>,
    rhs: Vec<T>,
    scaled_cost: Vec<T>,
    cost: Vec<T>,
    x: Vec<T>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Column-major basis inverse: entry (i, k) at `k * m + i`.
    binv: Vec<T>,
    y: Vec<T>,
    tol: T,
    feas_tol: T,
    opt_tol: T,
    piv_tol: T,
    since_check: usize,
}

impl<T: Scalar> Simplex<T> {
    fn new(lp: &LinearProgram<T>, tol: T) -> Self {
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n + m];
        let mut rhs = Vec::with_capacity(m);
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        for (i, row) in lp.constraints.iter().enumerate() {
            let scale = row
                .coeffs
                .iter()
                .fold(T::zero(), |acc, &(_, a)| acc.max(a.abs()));
            let scale = if scale > T::zero() { scale } else { T::one() };
            for &(j, a) in &row.coeffs {
                if a == T::zero() {
                    continue;
                }
                let a = a / scale;
                match cols[j].last_mut() {
                    Some((r, v)) if *r == i => *v = *v + a,
                    _ => cols[j].push((i, a)),
                }
            }
            rhs.push(row.rhs / scale);
            cols[n + i].push((i, T::one()));
            let (l, u) = match row.relation {
                Relation::Le => (T::zero(), T::infinity()),
                Relation::Ge => (T::neg_infinity(), T::zero()),
                Relation::Eq => (T::zero(), T::zero()),
            };
            lower.push(l);
            upper.push(u);
        }
        let cmax = lp
            .objective
            .iter()
            .fold(T::zero(), |acc, &c| acc.max(c.abs()));
        let cmax = if cmax > T::zero() { cmax } else { T::one() };
        let scaled_cost = lp.objective.iter().map(|&c| c / cmax).collect();
        let base = T::tolerance();
        Simplex {
            n,
            m,
            n_art_start: n + m,
            ntot: n + m,
            cols,
            lower,
            upper,
            rhs,
            scaled_cost,
            cost: Vec::new(),
            x: Vec::new(),
            state: Vec::new(),
            basis: vec![usize::MAX; m],
            binv: Vec::new(),
            y: vec![T::zero(); m],
            tol,
            feas_tol: base,
            opt_tol: base,
            piv_tol: base,
            since_check: 0,
        }
    }

    fn nonbasic_value(&self, j: usize) -> (VarState, T) {
        if self.lower[j].is_finite() {
            (VarState::Lower, self.lower[j])
        } else {
            (VarState::Upper, self.upper[j])
        }
    }

    /// Slack basis, with an artificial on every row the slack cannot cover.
    fn cold_start(&mut self) {
        let (n, m) = (self.n, self.m);
        self.x = vec![T::zero(); n + m];
        self.state = vec![VarState::Lower; n + m];
        for j in 0..n {
            let (s, v) = self.nonbasic_value(j);
            self.state[j] = s;
            self.x[j] = v;
        }
        let mut residual = self.rhs.clone();
        for j in 0..n {
            if self.x[j] != T::zero() {
                for &(i, a) in &self.cols[j] {
                    residual[i] = residual[i] - a * self.x[j];
                }
            }
        }
        self.binv = vec![T::zero(); m * m];
        for (i, &r) in residual.iter().enumerate() {
            let s = n + i;
            let clamped = r.max(self.lower[s]).min(self.upper[s]);
            if (r - clamped).abs() <= self.feas_tol {
                self.state[s] = VarState::Basic(i);
                self.x[s] = r;
                self.basis[i] = s;
                self.binv[i * m + i] = T::one();
            } else {
                self.state[s] = if clamped == self.lower[s] {
                    VarState::Lower
                } else {
                    VarState::Upper
                };
                self.x[s] = clamped;
                let sign = if r > clamped { T::one() } else { -T::one() };
                let a = self.cols.len();
                self.cols.push(vec![(i, sign)]);
                self.lower.push(T::zero());
                self.upper.push(T::infinity());
                self.x.push((r - clamped).abs());
                self.state.push(VarState::Basic(i));
                self.basis[i] = a;
                self.binv[i * m + i] = sign;
            }
        }
        self.ntot = self.cols.len();
    }

    fn load(&mut self, w: &WarmStart<T>) -> Result<bool, LpError> {
        if w.rows != self.m || w.vars != self.n {
            return Ok(false);
        }
        self.state = w.state.clone();
        self.binv = w.binv.clone();
        self.x = vec![T::zero(); self.ntot];
        for j in 0..self.ntot {
            match self.state[j] {
                VarState::Basic(i) => self.basis[i] = j,
                VarState::Lower => self.x[j] = self.lower[j],
                VarState::Upper => self.x[j] = self.upper[j],
            }
            if !self.x[j].is_finite() {
                return Ok(false);
            }
        }
        self.recompute_basic_values();
        let feasible = self.basis.iter().all(|&j| {
            self.x[j] >= self.lower[j] - self.tol && self.x[j] <= self.upper[j] + self.tol
        });
        if !feasible || self.max_residual() > self.tol {
            self.basis = vec![usize::MAX; self.m];
            return Ok(false);
        }
        Ok(true)
    }

    fn export(&self) -> Option<WarmStart<T>> {
        if self.basis.iter().any(|&j| j >= self.n_art_start) {
            return None;
        }
        Some(WarmStart {
            rows: self.m,
            vars: self.n,
            state: self.state[..self.n_art_start].to_vec(),
            binv: self.binv.clone(),
        })
    }

    fn set_cost(&mut self, cost: Vec<T>) {
        self.cost = cost;
        self.compute_duals();
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        for k in 0..m {
            let col = &self.binv[k * m..(k + 1) * m];
            self.y[k] = self
                .basis
                .iter()
                .zip(col)
                .fold(T::zero(), |acc, (&j, &b)| acc + self.cost[j] * b);
        }
    }

    fn reduced_cost(&self, j: usize) -> T {
        self.cols[j]
            .iter()
            .fold(self.cost[j], |acc, &(i, a)| acc - self.y[i] * a)
    }

    fn ftran(&self, j: usize, out: &mut [T]) {
        let m = self.m;
        out.iter_mut().for_each(|v| *v = T::zero());
        for &(k, a) in &self.cols[j] {
            let col = &self.binv[k * m..(k + 1) * m];
            for (o, &b) in out.iter_mut().zip(col) {
                *o = *o + a * b;
            }
        }
    }

    fn max_residual(&self) -> T {
        let mut r = self.rhs.clone();
        for j in 0..self.ntot {
            let v = self.x[j];
            if v != T::zero() {
                for &(i, a) in &self.cols[j] {
                    r[i] = r[i] - a * v;
                }
            }
        }
        r.into_iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for j in 0..self.ntot {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.x[j];
            if v != T::zero() {
                for &(i, a) in &self.cols[j] {
                    r[i] = r[i] - a * v;
                }
            }
        }
        let mut xb = vec![T::zero(); m];
        for (k, &rk) in r.iter().enumerate() {
            if rk == T::zero() {
                continue;
            }
            let col = &self.binv[k * m..(k + 1) * m];
            for (o, &b) in xb.iter_mut().zip(col) {
                *o = *o + b * rk;
            }
        }
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[i];
        }
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let w = 2 * m;
        let mut a = vec![T::zero(); m * w];
        for (c, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * w + c] = v;
            }
        }
        for i in 0..m {
            a[i * w + m + i] = T::one();
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&r1, &r2| {
                    a[r1 * w + c]
                        .abs()
                        .partial_cmp(&a[r2 * w + c].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty range");
            if a[p * w + c].abs() <= self.piv_tol * T::of(1e-3) {
                return Err(LpError::Singular);
            }
            if p != c {
                for k in 0..w {
                    a.swap(p * w + k, c * w + k);
                }
            }
            let inv = T::one() / a[c * w + c];
            for k in 0..w {
                a[c * w + k] = a[c * w + k] * inv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * w + c];
                if f == T::zero() {
                    continue;
                }
                for k in 0..w {
                    let v = a[c * w + k];
                    if v != T::zero() {
                        a[r * w + k] = a[r * w + k] - f * v;
                    }
                }
            }
        }
        // Row c of the left block now belongs to basis column c: B^-1 row c.
        for i in 0..m {
            for k in 0..m {
                self.binv[k * m + i] = a[i * w + m + k];
            }
        }
        self.recompute_basic_values();
        self.compute_duals();
        self.since_check = 0;
        Ok(())
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.ntot {
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                _ if self.lower[j] == self.upper[j] => continue,
                VarState::Lower => T::one(),
                VarState::Upper => -T::one(),
            };
            let d = self.reduced_cost(j);
            if d * dir < -self.opt_tol {
                if bland {
                    return Some((j, d));
                }
                if best.is_none_or(|(_, bd)| d.abs() > bd.abs()) {
                    best = Some((j, d));
                }
            }
        }
        best
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        let m = self.m;
        let limit = 50 * (self.ntot + m) + 1000;
        let mut alpha = vec![T::zero(); m];
        let mut degenerate = 0usize;
        let mut refactored_at_end = false;
        let mut duals_fresh = false;
        for _ in 0..limit {
            if self.since_check >= RESIDUAL_CHECK_EVERY {
                self.since_check = 0;
                if self.max_residual() > self.feas_tol {
                    self.refactor()?;
                }
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some((q, dq)) = self.choose_entering(bland) else {
                if !duals_fresh {
                    // Incremental dual updates drift; confirm optimality
                    // against freshly computed prices.
                    self.compute_duals();
                    duals_fresh = true;
                    continue;
                }
                if !refactored_at_end && self.m > 0 && self.max_residual() > self.feas_tol {
                    refactored_at_end = true;
                    self.refactor()?;
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            let dir = if matches!(self.state[q], VarState::Lower) {
                T::one()
            } else {
                -T::one()
            };
            self.ftran(q, &mut alpha);

            // Harris pass one: largest step under bounds relaxed by feas_tol.
            let mut relaxed = T::infinity();
            for (i, &a) in alpha.iter().enumerate().take(m) {
                let g = dir * a;
                if g.abs() <= self.piv_tol {
                    continue;
                }
                let j = self.basis[i];
                let t = if g > T::zero() {
                    (self.x[j] - self.lower[j] + self.feas_tol) / g
                } else {
                    (self.upper[j] - self.x[j] + self.feas_tol) / -g
                };
                if t < relaxed {
                    relaxed = t;
                }
            }
            // Pass two: among rows reaching a bound within that step, the
            // largest pivot (or lowest variable index under Bland).
            let mut leave: Option<(usize, T)> = None;
            for i in 0..m {
                let g = dir * alpha[i];
                if g.abs() <= self.piv_tol {
                    continue;
                }
                let j = self.basis[i];
                let t = if g > T::zero() {
                    (self.x[j] - self.lower[j]) / g
                } else {
                    (self.upper[j] - self.x[j]) / -g
                };
                if !t.is_finite() || t > relaxed {
                    continue;
                }
                let t = t.max(T::zero());
                let better = match leave {
                    None => true,
                    Some((r, _)) if bland => j < self.basis[r],
                    Some((r, _)) => alpha[i].abs() > alpha[r].abs(),
                };
                if better {
                    leave = Some((i, t));
                }
            }
            let flip = self.upper[q] - self.lower[q];
            let step = match leave {
                Some((_, t)) if t < flip => t,
                _ if flip.is_finite() => flip,
                _ => return Ok(Outcome::Unbounded),
            };

            if step <= self.feas_tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            if step != T::zero() {
                self.x[q] = self.x[q] + dir * step;
                for (&j, &a) in self.basis.iter().zip(&alpha).take(m) {
                    if a != T::zero() {
                        self.x[j] = self.x[j] - dir * step * a;
                    }
                }
            }

            match leave {
                Some((r, t)) if t < flip => self.pivot(q, r, dq, &alpha),
                _ => {
                    // Bound flip: the entering variable crosses its box.
                    if dir > T::zero() {
                        self.state[q] = VarState::Upper;
                        self.x[q] = self.upper[q];
                    } else {
                        self.state[q] = VarState::Lower;
                        self.x[q] = self.lower[q];
                    }
                }
            }
            self.since_check += 1;
            duals_fresh = false;
        }
        Err(LpError::IterationLimit)
    }

    fn pivot(&mut self, q: usize, r: usize, dq: T, alpha: &[T]) {
        let m = self.m;
        let out = self.basis[r];
        let g = alpha[r];
        // Leaving variable snaps to the bound it reached.
        let to_lower = if matches!(self.state[q], VarState::Lower) {
            g > T::zero()
        } else {
            g < T::zero()
        };
        if to_lower {
            self.state[out] = VarState::Lower;
            self.x[out] = self.lower[out];
        } else {
            self.state[out] = VarState::Upper;
            self.x[out] = self.upper[out];
        }
        if !self.x[out].is_finite() {
            // Only reachable through a numerically tiny pivot; keep the
            // variable at its finite bound.
            let (s, v) = self.nonbasic_value(out);
            self.state[out] = s;
            self.x[out] = v;
        }

        let ratio = dq / g;
        for k in 0..m {
            let b = self.binv[k * m + r];
            if b != T::zero() {
                self.y[k] = self.y[k] + ratio * b;
            }
        }
        let nz: Vec<usize> = (0..m).filter(|&i| i != r && alpha[i] != T::zero()).collect();
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let v = col[r];
            if v == T::zero() {
                continue;
            }
            let v = v / g;
            col[r] = v;
            for &i in &nz {
                col[i] = col[i] - alpha[i] * v;
            }
        }
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram<f64>) -> (Vec<f64>, f64) {
        solve_lp(lp, 1e-6).unwrap().optimal().expect("optimal")
    }

    #[test]
    fn box_only_minimum() {
        let lp = LinearProgram::new(vec![1.0]);
        let (x, v) = optimal(&lp);
        assert_eq!(x, vec![0.0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn upper_row_binds() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.constrain(vec![(0, 1.0)], Relation::Le, 0.3);
        let (x, v) = optimal(&lp);
        assert!((x[0] - 0.3).abs() < 1e-9);
        assert!((v + 0.3).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new(vec![0.0]);
        lp.upper[0] = f64::INFINITY;
        lp.constrain(vec![(0, 1.0)], Relation::Ge, 2.0);
        lp.constrain(vec![(0, 1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp, 1e-6).unwrap(), LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.upper = vec![f64::INFINITY; 2];
        lp.constrain(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp, 1e-6).unwrap(), LpStatus::Unbounded);
    }

    #[test]
    fn malformed_programs_are_rejected() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.constrain(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp, 1e-6), Err(LpError::MalformedLp(_))));
        let mut lp = LinearProgram::new(vec![f64::NAN]);
        lp.constrain(vec![(0, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp, 1e-6), Err(LpError::MalformedLp(_))));
    }

    #[test]
    fn small_production_problem() {
        // max 3a + 5b s.t. a <= 4, 2b <= 12, 3a + 2b <= 18
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.upper = vec![f64::INFINITY; 2];
        lp.constrain(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.constrain(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.constrain(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let (x, v) = optimal(&lp);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
        assert!((v + 36.0).abs() < 1e-9);
    }

    #[test]
    fn assignment_with_equalities() {
        // two jobs, two machines, cost matrix [[1, 3], [2, 1]]
        let mut lp = LinearProgram::new(vec![1.0, 3.0, 2.0, 1.0]);
        lp.constrain(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.constrain(vec![(2, 1.0), (3, 1.0)], Relation::Eq, 1.0);
        let (x, v) = optimal(&lp);
        assert_eq!(v, 2.0);
        assert_eq!(x, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let mut lp = LinearProgram::new(vec![1.0, 3.0, 2.0, 1.0]);
        lp.constrain(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.constrain(vec![(2, 1.0), (3, 1.0)], Relation::Eq, 1.0);
        lp.constrain(vec![(0, 1.0), (2, 1.0)], Relation::Le, 1.5);
        let (_, warm) = solve_lp_warm(&lp, 1e-6, None).unwrap();
        let warm = warm.expect("basis");
        lp.objective = vec![3.0, 1.0, 1.0, 2.0];
        let (status, _) = solve_lp_warm(&lp, 1e-6, Some(&warm)).unwrap();
        let (x, v) = status.optimal().unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(x, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn works_in_single_precision() {
        let mut lp = LinearProgram::<f32>::new(vec![-1.0, -2.0]);
        lp.constrain(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.5);
        let (x, v) = solve_lp(&lp, 1e-4).unwrap().optimal().unwrap();
        assert!((x[1] - 1.0).abs() < 1e-5 && (x[0] - 0.5).abs() < 1e-5);
        assert!((v + 2.5).abs() < 1e-5);
    }
}
