use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear or mixed-integer program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub sense: Sense,
    pub objective_offset: f64,
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
}

impl LinearModel {
    pub fn new(sense: Sense) -> Self {
        Self { sense, objective_offset: 0.0, vars: Vec::new(), rows: Vec::new() }
    }

    /// Adds a continuous variable.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lower, upper, objective, integer: false });
        VarId(self.vars.len() - 1)
    }

    /// Adds an integer variable.
    pub fn add_int_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lower, upper, objective, integer: true });
        VarId(self.vars.len() - 1)
    }

    /// Adds a `{0, 1}` variable.
    pub fn add_binary(&mut self, name: impl Into<String>, objective: f64) -> VarId {
        self.add_int_var(name, 0.0, 1.0, objective)
    }

    /// Adds a row; repeated variables are summed.
    pub fn add_row(&mut self, name: impl Into<String>, coeffs: &[(VarId, f64)], relation: Relation, rhs: f64) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs.to_vec();
        sorted.sort_by_key(|c| c.0);
        for (v, a) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        self.rows.push(Constraint { name: name.into(), coeffs: merged, relation, rhs });
        RowId(self.rows.len() - 1)
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    /// Objective value of `x` including the offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.vars.iter().zip(x).map(|(v, x)| v.objective * x).sum::<f64>()
    }

    /// Row activities `a_i · x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum()).collect()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
        }
        for (r, act) in self.rows.iter().zip(self.activities(x)) {
            let gap = match r.relation {
                Relation::Le => act - r.rhs,
                Relation::Ge => r.rhs - act,
                Relation::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Checks finiteness and bound consistency.
    pub fn validate(&self) -> Result<(), String> {
        for v in &self.vars {
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() || !v.objective.is_finite() {
                return Err(format!("variable `{}` has invalid bounds or cost", v.name));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(format!("variable `{}` has an empty domain", v.name));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() || r.coeffs.iter().any(|c| !c.1.is_finite() || c.0 .0 >= self.vars.len()) {
                return Err(format!("row `{}` has invalid data", r.name));
            }
        }
        Ok(())
    }

    /// Writes the model in CPLEX LP text format.
    pub fn to_lp_text(&self) -> String {
        let name = |v: VarId| sanitize(&self.vars[v.0].name, v.0, 'x');
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let obj: Vec<(VarId, f64)> =
            self.vars.iter().enumerate().filter(|(_, v)| v.objective != 0.0).map(|(i, v)| (VarId(i), v.objective)).collect();
        let _ = writeln!(out, " obj: {}", linear_text(&obj, &name, self.objective_offset));
        out.push_str("Subject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {}: {} {rel} {}", sanitize(&r.name, i, 'c'), linear_text(&r.coeffs, &name, 0.0), r.rhs);
        }
        out.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            let n = name(VarId(i));
            let lo = if v.lower == f64::NEG_INFINITY { "-inf".to_string() } else { v.lower.to_string() };
            let hi = if v.upper == f64::INFINITY { "+inf".to_string() } else { v.upper.to_string() };
            let _ = writeln!(out, " {lo} <= {n} <= {hi}");
        }
        let ints: Vec<String> = self.vars.iter().enumerate().filter(|(_, v)| v.integer).map(|(i, _)| name(VarId(i))).collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(name: &str, idx: usize, prefix: char) -> String {
    let clean: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if clean.is_empty() || clean.starts_with(|c: char| c.is_ascii_digit()) {
        format!("{prefix}{idx}_{clean}")
    } else {
        clean
    }
}

fn linear_text(coeffs: &[(VarId, f64)], name: &dyn Fn(VarId) -> String, constant: f64) -> String {
    let mut parts: Vec<String> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &(v, a))| {
            let sign = if a < 0.0 { "- " } else if i > 0 { "+ " } else { "" };
            format!("{sign}{} {}", a.abs(), name(v))
        })
        .collect();
    if constant != 0.0 {
        parts.push(format!("{} {}", if constant < 0.0 { "-" } else { "+" }, constant.abs()));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" ")
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Branch and bound stopped early; `x` holds the best incumbent if any.
    NodeLimit,
}

/// Outcome of an LP or MIP solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: Status,
    pub objective: f64,
    pub x: Vec<f64>,
    /// `∂ objective / ∂ rhs` per row (LP only; empty for MIPs).
    pub duals: Vec<f64>,
    /// `c_j − Σ_i dual_i a_ij` per variable (LP only).
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Branch-and-bound nodes explored (MIP only).
    pub nodes: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn failed(status: Status, iterations: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            x: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            nodes: 0,
        }
    }
}

/// Lagrangian dual value of an LP at the reported duals:
/// `offset + b·y + Σ_j opt_{x_j ∈ [l_j, u_j]} d_j x_j`, where `opt` is `min`
/// for minimisation and `max` for maximisation. Equals the primal objective
/// at an optimal basis.
pub fn dual_objective(model: &LinearModel, result: &SolveResult) -> f64 {
    let mut total = model.objective_offset;
    for (r, y) in model.rows.iter().zip(&result.duals) {
        total += r.rhs * y;
    }
    let minimize = model.sense == Sense::Minimize;
    for (v, &d) in model.vars.iter().zip(&result.reduced_costs) {
        let d = if d.abs() < 1e-9 { 0.0 } else { d };
        if d == 0.0 {
            continue;
        }
        let toward_lower = (d > 0.0) == minimize;
        total += d * if toward_lower { v.lower } else { v.upper };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_merge_duplicates() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        let y = m.add_var("y", 0.0, 1.0, 1.0);
        m.add_row("r", &[(y, 1.0), (x, 2.0), (x, -2.0)], Relation::Le, 1.0);
        assert_eq!(m.rows[0].coeffs, vec![(y, 1.0)]);
    }

    #[test]
    fn lp_text_dump() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_int_var("x[1]", 0.0, 4.0, 3.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, -2.0);
        m.add_row("cap", &[(x, 1.0), (y, 1.0)], Relation::Le, 3.0);
        let text = m.to_lp_text();
        assert!(text.starts_with("Maximize\n obj: 3 x_1_ - 2 y"));
        assert!(text.contains(" cap: 1 x_1_ + 1 y <= 3"));
        assert!(text.contains("General\n x_1_"));
    }
}
