//! Column generation on the dual ALP.

use std::collections::HashSet;
use std::time::Instant;

use super::closed::closed_form_params;
use super::column::{initial_column, Column};
use super::params::{delta_coefficients, AlpParams, ParamsMeta, Variant};
use super::pricing::{price_with_extras, Prices};
use super::reduce::{lift, project_to_1d};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::optim::{LinearModel, Relation, Sense, Simplex, Status};

/// Stopping rules and penalties of [`column_generation_with`].
#[derive(Debug, Clone)]
pub struct CgOptions {
    /// Stop when the most negative reduced cost is at least `-tolerance`.
    pub tolerance: f64,
    pub max_columns: usize,
    /// Initial cost of the artificial columns that keep the master feasible.
    pub big_m: f64,
    pub max_big_m: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_columns: 10_000, big_m: 1e6, max_big_m: 1e12 }
    }
}

/// Per-iteration trace.
#[derive(Debug, Clone, Default)]
pub struct CgHistory {
    pub objectives: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub params: AlpParams,
    pub history: CgHistory,
    pub columns: Vec<Column>,
    /// False if any pricing call used the heuristic day-1 fallback.
    pub exact_pricing: bool,
    /// Stopped on a repeated column with negative reduced cost.
    pub stalled: bool,
}

/// Optimal ALP parameters for `variant` with default options.
pub fn column_generation(inst: &ProblemInstance, epsilon: f64, variant: Variant) -> Result<AlpParams> {
    Ok(column_generation_with(inst, epsilon, variant, &CgOptions::default())?.params)
}

/// Column generation with explicit options. One-dimensional variants solve
/// the projected instance and lift the result; in that case `columns` live
/// on the proxy.
pub fn column_generation_with(inst: &ProblemInstance, epsilon: f64, variant: Variant, opts: &CgOptions) -> Result<CgOutcome> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition(format!("ε must be finite and nonnegative, got {epsilon}")));
    }
    let start = Instant::now();
    let mut out = match variant {
        Variant::Full | Variant::TwoIndex => {
            let weights = vec![1.0; inst.regions()];
            run(inst, epsilon, &weights, variant.two_index(), opts)?
        }
        Variant::OneD | Variant::OneDTwoIndex => {
            let proj = project_to_1d(inst)?;
            let mut out = run(&proj.proxy, epsilon, &proj.weights(), variant.two_index(), opts)?;
            out.params = lift(&out.params, &proj, inst);
            out
        }
        Variant::ClosedForm => {
            let params = closed_form_params(inst)?;
            CgOutcome { params, history: CgHistory::default(), columns: Vec::new(), exact_pricing: true, stalled: false }
        }
    };
    out.params.meta.variant = variant;
    out.params.meta.epsilon = epsilon;
    out.params.meta.solve_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Row structure of the master.
struct Rows {
    /// Free `x` coordinates (full variant) or `(k, l)` blocks (two-index).
    x_rows: Vec<XRow>,
    y_rows: usize,
    rhs: Vec<f64>,
}

/// One `τ` row: a weighted combination of `x` coordinates.
struct XRow {
    terms: Vec<(usize, f64)>,
}

impl Rows {
    fn new(inst: &ProblemInstance, epsilon: f64, weights: &[f64], two_index: bool) -> Self {
        let lay = inst.layout();
        let mut x_rows = Vec::new();
        let mut rhs = vec![1.0];
        if two_index {
            for k in 0..inst.types() {
                let delta = delta_coefficients(inst, k);
                for l in 0..inst.regions() {
                    let mut terms = Vec::new();
                    for t in 1..=lay.horizon {
                        for j in 0..lay.dims(k).visits {
                            if !lay.is_structural_zero(t, k, j) {
                                terms.push((lay.x_index(t, k, l, j), delta[t - 1][j]));
                            }
                        }
                    }
                    rhs.push(epsilon * weights[l] * terms.iter().map(|t| t.1).sum::<f64>());
                    x_rows.push(XRow { terms });
                }
            }
        } else {
            for (idx, c) in lay.free_coords() {
                x_rows.push(XRow { terms: vec![(idx, 1.0)] });
                rhs.push(epsilon * weights[c.l]);
            }
        }
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                rhs.push(inst.rate(k, l));
            }
        }
        Self { x_rows, y_rows: lay.y_len(), rhs }
    }

    fn count(&self) -> usize {
        self.rhs.len()
    }

    fn coefficients(&self, gamma: f64, col: &Column) -> Vec<(usize, f64)> {
        let mut out = vec![(0, 1.0 - gamma)];
        for (r, row) in self.x_rows.iter().enumerate() {
            let v: f64 = row.terms.iter().map(|&(i, w)| w * col.x_coef[i]).sum();
            if v != 0.0 {
                out.push((1 + r, v));
            }
        }
        let base = 1 + self.x_rows.len();
        for (i, &v) in col.y_coef.iter().enumerate() {
            if v != 0.0 {
                out.push((base + i, v));
            }
        }
        out
    }

    fn prices(&self, inst: &ProblemInstance, duals: &[f64]) -> Prices {
        let lay = inst.layout();
        let mut tau = vec![0.0; lay.x_len()];
        for (r, row) in self.x_rows.iter().enumerate() {
            let d = duals[1 + r].max(0.0);
            for &(i, w) in &row.terms {
                tau[i] = w * d;
            }
        }
        let base = 1 + self.x_rows.len();
        let rho = (0..self.y_rows).map(|i| duals[base + i].max(0.0)).collect();
        Prices { eta: duals[0], tau, rho }
    }
}

fn build(rows: &Rows, gamma: f64, columns: &[Column], big_m: f64) -> LinearModel {
    let mut m = LinearModel::new(Sense::Minimize);
    let n = rows.count();
    let mut entries: Vec<Vec<(crate::optim::VarId, f64)>> = vec![Vec::new(); n];
    // Scaled so that spreading the unit mass evenly over the artificial
    // columns already covers every right-hand side.
    for r in 1..n {
        let v = m.add_var(format!("pen{r}"), 0.0, f64::INFINITY, big_m);
        entries[0].push((v, 1.0 - gamma));
        entries[r].push((v, 1.0 + (n - 1) as f64 * (1.0 - gamma) * rows.rhs[r].max(0.0)));
    }
    for (i, col) in columns.iter().enumerate() {
        let v = m.add_var(format!("col{i}"), 0.0, f64::INFINITY, col.cost);
        for (r, a) in rows.coefficients(gamma, col) {
            entries[r].push((v, a));
        }
    }
    for (r, coeffs) in entries.iter().enumerate() {
        let rel = if r == 0 { Relation::Eq } else { Relation::Ge };
        m.add_row(format!("r{r}"), coeffs, rel, rows.rhs[r]);
    }
    m
}

fn run(inst: &ProblemInstance, epsilon: f64, weights: &[f64], two_index: bool, opts: &CgOptions) -> Result<CgOutcome> {
    let gamma = inst.gamma;
    let rows = Rows::new(inst, epsilon, weights, two_index);
    let penalties = rows.count() - 1;
    let mut columns = vec![initial_column(inst)];
    let mut seen: HashSet<(Vec<u32>, Vec<u32>, Vec<u32>, Vec<u32>, Vec<u32>)> = HashSet::new();
    let key = |c: &Column| (c.state.x.clone(), c.state.y.clone(), c.action.assign.clone(), c.action.reject.clone(), c.action.divert.clone());
    seen.insert(key(&columns[0]));
    let mut big_m = opts.big_m;
    let mut history = CgHistory::default();
    let mut exact = true;
    'restart: loop {
        let mut simplex = Simplex::new(&build(&rows, gamma, &columns, big_m));
        loop {
            let res = simplex.solve();
            if res.status != Status::Optimal {
                // Escalation only happens when artificial columns survive
                // convergence; a breakdown at that point means the ALP has
                // no finite optimum worth resolving.
                if big_m > opts.big_m {
                    return Err(Error::AlpUnbounded(epsilon));
                }
                return Err(Error::Solver(format!("master LP ended with status {:?}", res.status)));
            }
            history.objectives.push(res.objective);
            let prices = rows.prices(inst, &res.duals);
            let (priced, extras) = price_with_extras(inst, &prices, opts.tolerance);
            exact &= priced.exact;
            history.reduced_costs.push(priced.value);
            let mut fresh: Vec<Column> = Vec::new();
            if priced.value < -opts.tolerance {
                for col in std::iter::once(priced.column).chain(extras.into_iter().map(|p| p.column)) {
                    if !seen.contains(&key(&col)) && !fresh.iter().any(|f| key(f) == key(&col)) {
                        fresh.push(col);
                    }
                }
            }
            // A negative reduced cost on a known column means the LP and the
            // pricing disagree numerically; stop rather than loop.
            let stalled = priced.value < -opts.tolerance && fresh.is_empty();
            if fresh.is_empty() {
                let artificial = res.x[..penalties].iter().any(|&v| v > 1e-9);
                if artificial {
                    if big_m >= opts.max_big_m {
                        return Err(Error::AlpUnbounded(epsilon));
                    }
                    big_m = (big_m * 100.0).min(opts.max_big_m);
                    continue 'restart;
                }
                let params = AlpParams {
                    eta: prices.eta,
                    tau: prices.tau,
                    rho: prices.rho,
                    meta: ParamsMeta {
                        variant: if two_index { Variant::TwoIndex } else { Variant::Full },
                        epsilon,
                        iterations: history.objectives.len(),
                        columns: columns.len(),
                        solve_seconds: 0.0,
                        objective: res.objective,
                    },
                };
                return Ok(CgOutcome { params, history, columns, exact_pricing: exact, stalled });
            }
            if columns.len() >= opts.max_columns {
                return Err(Error::ColumnLimit(opts.max_columns));
            }
            for col in fresh {
                seen.insert(key(&col));
                let coeffs = rows.coefficients(gamma, &col);
                simplex.add_column(format!("col{}", columns.len()), col.cost, &coeffs);
                columns.push(col);
            }
        }
    }
}
