//! Revised primal simplex with an explicit basis inverse.
//!
//! The model is brought to standard form `A x = b, x >= 0, b >= 0` with one
//! slack, surplus or artificial column per row, solved with a two-phase
//! method, and mapped back. Pricing is Dantzig's rule, switching to Bland's
//! rule after a run of degenerate pivots. The basis inverse is kept dense and
//! refactorised periodically.

use super::model::{LinearModel, Relation, Sense, SolveResult, Status, VarId};
use super::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Recovery of a model variable: `x = offset + Σ sign · column`.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    Shifted { offset: f64, col: usize, sign: f64 },
    Split { pos: usize, neg: usize },
}

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 50;

/// Simplex working state, reusable across column additions.
#[derive(Debug, Clone)]
pub struct Simplex {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    kind: Vec<ColKind>,
    b: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    since_refactor: usize,
    // Model bookkeeping.
    sense: Sense,
    var_map: Vec<VarMap>,
    row_flip: Vec<f64>,
    model_rows: usize,
    phase_one_done: bool,
    feasible: bool,
    pub iterations: usize,
    /// Pivots allowed per phase of one [`Simplex::solve`] call.
    pub iteration_limit: usize,
    model: LinearModel,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

impl Simplex {
    /// Builds the standard form of `model` (integrality flags are ignored).
    pub fn new(model: &LinearModel) -> Self {
        let minimize = model.sense == Sense::Minimize;
        let obj_sign = if minimize { 1.0 } else { -1.0 };
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut cost = Vec::new();
        let mut kind = Vec::new();
        let mut var_map = Vec::with_capacity(model.vars.len());
        let mut var_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.vars.len()];
        let mut upper_rows: Vec<(usize, f64)> = Vec::new();
        for (i, v) in model.vars.iter().enumerate() {
            let mut push = |sign: f64| {
                cols.push(Vec::new());
                cost.push(obj_sign * sign * v.objective);
                kind.push(ColKind::Structural);
                var_cols[i].push((cols.len() - 1, sign));
                cols.len() - 1
            };
            if v.lower.is_finite() && v.upper.is_finite() && v.upper - v.lower <= 1e-12 {
                var_map.push(VarMap::Fixed(v.lower));
            } else if v.lower.is_finite() {
                let c = push(1.0);
                if v.upper.is_finite() {
                    upper_rows.push((c, v.upper - v.lower));
                }
                var_map.push(VarMap::Shifted { offset: v.lower, col: c, sign: 1.0 });
            } else if v.upper.is_finite() {
                let c = push(-1.0);
                var_map.push(VarMap::Shifted { offset: v.upper, col: c, sign: -1.0 });
            } else {
                let pos = push(1.0);
                let neg = push(-1.0);
                var_map.push(VarMap::Split { pos, neg });
            }
        }
        let fixed_value = |i: usize| match var_map[i] {
            VarMap::Fixed(v) => v,
            VarMap::Shifted { offset, .. } => offset,
            VarMap::Split { .. } => 0.0,
        };
        let m = model.rows.len() + upper_rows.len();
        let mut b = vec![0.0; m];
        let mut row_flip = vec![1.0; m];
        let mut relations = Vec::with_capacity(m);
        for (r, row) in model.rows.iter().enumerate() {
            let mut rhs = row.rhs;
            for &(VarId(v), a) in &row.coeffs {
                rhs -= a * fixed_value(v);
            }
            let flip = if rhs < 0.0 { -1.0 } else { 1.0 };
            row_flip[r] = flip;
            b[r] = flip * rhs;
            for &(VarId(v), a) in &row.coeffs {
                for &(c, sign) in &var_cols[v] {
                    cols[c].push((r, flip * sign * a));
                }
            }
            relations.push(match (row.relation, flip < 0.0) {
                (Relation::Eq, _) => Relation::Eq,
                (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
                _ => Relation::Ge,
            });
        }
        for (u, &(c, width)) in upper_rows.iter().enumerate() {
            let r = model.rows.len() + u;
            cols[c].push((r, 1.0));
            b[r] = width;
            relations.push(Relation::Le);
        }
        let mut basis = vec![usize::MAX; m];
        for (r, rel) in relations.iter().enumerate() {
            let mut add = |coef: f64, k: ColKind| {
                cols.push(vec![(r, coef)]);
                cost.push(0.0);
                kind.push(k);
                cols.len() - 1
            };
            match rel {
                Relation::Le => basis[r] = add(1.0, ColKind::Slack),
                Relation::Ge => {
                    add(-1.0, ColKind::Slack);
                    basis[r] = add(1.0, ColKind::Artificial);
                }
                Relation::Eq => basis[r] = add(1.0, ColKind::Artificial),
            }
        }
        let mut position = vec![None; cols.len()];
        for (r, &c) in basis.iter().enumerate() {
            position[c] = Some(r);
        }
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = 1.0;
        }
        let n = cols.len();
        Self {
            m,
            cols,
            cost,
            kind,
            xb: b.clone(),
            b,
            basis,
            position,
            binv,
            since_refactor: 0,
            sense: model.sense,
            var_map,
            row_flip,
            model_rows: model.rows.len(),
            phase_one_done: false,
            feasible: false,
            iterations: 0,
            iteration_limit: 50_000 + 50 * (m + n),
            model: model.clone(),
        }
    }

    /// Appends a nonnegative, unbounded column with objective `objective`
    /// and coefficients on model rows. The current basis stays valid.
    pub fn add_column(&mut self, name: impl Into<String>, objective: f64, coeffs: &[(usize, f64)]) -> VarId {
        let var = self.model.add_var(name, 0.0, f64::INFINITY, objective);
        let rows: Vec<(VarId, f64)> = coeffs.iter().map(|&(r, a)| (VarId(r), a)).collect();
        let obj_sign = if self.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut col: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for &(VarId(r), a) in &rows {
            assert!(r < self.model_rows, "row index out of range");
            if a != 0.0 {
                col.push((r, self.row_flip[r] * a));
                self.model.rows[r].coeffs.push((var, a));
            }
        }
        self.cols.push(col);
        self.cost.push(obj_sign * objective);
        self.kind.push(ColKind::Structural);
        self.position.push(None);
        self.var_map.push(VarMap::Shifted { offset: 0.0, col: self.cols.len() - 1, sign: 1.0 });
        var
    }

    /// The model including any added columns.
    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    fn refactor(&mut self) {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (r, &c) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[c] {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            assert!(best > 1e-13, "singular basis during refactorisation");
            if piv != col {
                for j in 0..m {
                    a.swap(col * m + j, piv * m + j);
                    inv.swap(col * m + j, piv * m + j);
                }
            }
            let d = a[col * m + col];
            for j in 0..m {
                a[col * m + j] /= d;
                inv[col * m + j] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for j in 0..m {
                        a[r * m + j] -= f * a[col * m + j];
                        inv[r * m + j] -= f * inv[col * m + j];
                    }
                }
            }
        }
        // Row r of `inv` now maps to basis position r because B's column r is basis[r].
        self.binv = inv;
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.xb[r] = row.iter().zip(&self.b).map(|(p, b)| p * b).sum();
        }
        self.since_refactor = 0;
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &c) in self.basis.iter().enumerate() {
            let cb = cost[c];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, p) in y.iter_mut().zip(row) {
                    *yi += cb * p;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[f64], y: &[f64], j: usize) -> f64 {
        cost[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
    }

    fn column_in_basis(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[j] {
            for (r, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let theta = self.xb[r] / alpha[r];
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;
        let pr = alpha[r];
        for j in 0..m {
            self.binv[r * m + j] /= pr;
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.basis[r] = q;
        self.position[q] = Some(r);
        self.since_refactor += 1;
        self.iterations += 1;
    }

    fn run(&mut self, cost: &[f64], allow_artificial: bool) -> Outcome {
        let mut degenerate = 0usize;
        let start = self.iterations;
        loop {
            if self.iterations - start >= self.iteration_limit {
                return Outcome::Limit;
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = -tol::REDUCED_COST;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() || (!allow_artificial && self.kind[j] == ColKind::Artificial) {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, j);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                // Confirm optimality on a fresh factorisation.
                if self.since_refactor > 0 {
                    self.refactor();
                    continue;
                }
                return Outcome::Optimal;
            };
            let alpha = self.column_in_basis(q);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = alpha[r];
                let artificial_stuck = !allow_artificial
                    && self.kind[self.basis[r]] == ColKind::Artificial
                    && a.abs() > tol::PIVOT;
                let ratio = if artificial_stuck {
                    0.0
                } else if a > tol::PIVOT {
                    self.xb[r].max(0.0) / a
                } else {
                    continue;
                };
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                alpha[r].abs() > alpha[lr].abs()
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, theta)) = leave else {
                return Outcome::Unbounded;
            };
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            if alpha[r] < 0.0 {
                // A zero-level artificial leaves on a negative pivot.
                self.xb[r] = 0.0;
            }
            self.pivot(r, q, &alpha);
            for v in self.xb.iter_mut() {
                if *v < 0.0 && *v > -tol::PRIMAL {
                    *v = 0.0;
                }
            }
        }
    }

    fn phase_one(&mut self) -> Option<Status> {
        let p1: Vec<f64> = self.kind.iter().map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 }).collect();
        match self.run(&p1, true) {
            Outcome::Limit => return Some(Status::IterationLimit),
            Outcome::Unbounded => unreachable!("phase one is bounded below"),
            Outcome::Optimal => {}
        }
        let infeasibility: f64 = (0..self.m).filter(|&r| self.kind[self.basis[r]] == ColKind::Artificial).map(|r| self.xb[r]).sum();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.phase_one_done = true;
        if infeasibility > tol::FEASIBILITY * scale {
            self.feasible = false;
            return Some(Status::Infeasible);
        }
        self.feasible = true;
        self.drive_out_artificials();
        None
    }

    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() || self.kind[j] == ColKind::Artificial {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(i, a)| row[i] * a).sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, bv)| v.abs() > bv.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.column_in_basis(q);
                self.xb[r] = 0.0;
                self.pivot(r, q, &alpha);
            }
        }
    }

    /// Solves (or re-solves after column additions) and reports the result.
    pub fn solve(&mut self) -> SolveResult {
        if let Err(msg) = self.model.validate() {
            panic!("invalid linear model: {msg}");
        }
        if !self.phase_one_done || !self.feasible {
            if let Some(status) = self.phase_one() {
                return SolveResult::failed(status, self.iterations);
            }
        }
        let cost = self.cost.clone();
        match self.run(&cost, false) {
            Outcome::Optimal => {}
            Outcome::Unbounded => return SolveResult::failed(Status::Unbounded, self.iterations),
            Outcome::Limit => return SolveResult::failed(Status::IterationLimit, self.iterations),
        }
        self.report(&cost)
    }

    fn report(&self, cost: &[f64]) -> SolveResult {
        let mut col_values = vec![0.0; self.cols.len()];
        for (r, &c) in self.basis.iter().enumerate() {
            col_values[c] = self.xb[r].max(0.0);
        }
        let x: Vec<f64> = self
            .var_map
            .iter()
            .map(|vm| match *vm {
                VarMap::Fixed(v) => v,
                VarMap::Shifted { offset, col, sign } => offset + sign * col_values[col],
                VarMap::Split { pos, neg } => col_values[pos] - col_values[neg],
            })
            .collect();
        let y = self.duals(cost);
        let sense_sign = if self.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let duals: Vec<f64> = (0..self.model_rows).map(|r| sense_sign * self.row_flip[r] * y[r]).collect();
        let mut reduced = vec![0.0; self.model.vars.len()];
        for row in self.model.rows.iter().zip(&duals) {
            for &(VarId(v), a) in &row.0.coeffs {
                reduced[v] -= row.1 * a;
            }
        }
        for (d, v) in reduced.iter_mut().zip(&self.model.vars) {
            *d += v.objective;
        }
        SolveResult {
            status: Status::Optimal,
            objective: self.model.objective_value(&x),
            x,
            duals,
            reduced_costs: reduced,
            iterations: self.iterations,
            nodes: 0,
        }
    }
}

/// Solves the LP relaxation of `model`.
pub fn solve_lp(model: &LinearModel) -> SolveResult {
    Simplex::new(model).solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bound_row() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        m.add_row("cap", &[(x, 1.0)], Relation::Le, 3.0);
        let r = solve_lp(&m);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-12);
        assert!((r.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_objective() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 1.0);
        m.add_row("cover", &[(x, 1.0), (y, 1.0)], Relation::Ge, 2.0);
        let r = solve_lp(&m);
        assert!((r.objective - 2.0).abs() < 1e-12);
        assert!((r.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        m.add_row("r", &[(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve_lp(&m).status, Status::Infeasible);
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 0.0);
        m.add_row("r", &[(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&m).status, Status::Unbounded);
    }

    #[test]
    fn free_and_negative_bounds() {
        // min x - y, x free, -3 <= y <= -1, x + y >= -5, x - y <= 4.
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let y = m.add_var("y", -3.0, -1.0, -1.0);
        m.add_row("a", &[(x, 1.0), (y, 1.0)], Relation::Ge, -5.0);
        m.add_row("b", &[(x, 1.0), (y, -1.0)], Relation::Le, 4.0);
        let r = solve_lp(&m);
        // x = -5 - y, objective -5 - 2y minimised at y = -1: x = -4, obj = -3.
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective + 3.0).abs() < 1e-9, "{r:?}");
        assert!(m.max_violation(&r.x) < 1e-9);
    }

    #[test]
    fn equality_rows_and_warm_start() {
        // min 2a + 3b  s.t. a + b = 4, a <= 3.
        let mut m = LinearModel::new(Sense::Minimize);
        let a = m.add_var("a", 0.0, 3.0, 2.0);
        let b = m.add_var("b", 0.0, f64::INFINITY, 3.0);
        m.add_row("sum", &[(a, 1.0), (b, 1.0)], Relation::Eq, 4.0);
        let mut s = Simplex::new(&m);
        let r = s.solve();
        assert!((r.objective - 9.0).abs() < 1e-12);
        // A cheaper column makes the old solution suboptimal.
        s.add_column("c", 1.0, &[(0, 1.0)]);
        let r = s.solve();
        assert!((r.objective - 4.0).abs() < 1e-12);
        assert!((r.x[2] - 4.0).abs() < 1e-12);
        assert!((r.duals[0] - 1.0).abs() < 1e-12);
    }
}
