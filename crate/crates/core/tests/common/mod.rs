//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use homecare_alp::optim::{LinearModel, Relation, Sense, SolveResult};
use rand::Rng;

/// Dense tableau simplex with Bland's rule for `max c·x, A x ≤ b, x ≥ 0`
/// with `b ≥ 0`. Returns the optimum or `None` when unbounded.
pub fn tableau_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let w = n + m + 1;
    let mut t = vec![vec![0.0; w]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][w - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -1e-12) else {
            return Some(t[m][w - 1]);
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > 1e-12 {
                let ratio = t[i][w - 1] / t[i][enter];
                match leave {
                    None => leave = Some(i),
                    Some(l) => {
                        let best = t[l][w - 1] / t[l][enter];
                        if ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[i] < basis[l]) {
                            leave = Some(i);
                        }
                    }
                }
            }
        }
        let r = leave?;
        let p = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..=m {
            if i != r {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..w {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
        basis[r] = enter;
    }
}

/// Random `max c·x, A x ≤ b, 0 ≤ x` with a bounding row so the optimum is finite.
pub fn random_packing_lp(rng: &mut impl Rng, n: usize, m: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..5.0)).collect();
    let mut a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..4.0)).collect()).collect();
    let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
    a.push(vec![1.0; n]);
    b.push(rng.random_range(1.0..20.0));
    (c, a, b)
}

pub fn packing_model(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LinearModel {
    let mut model = LinearModel::new(Sense::Maximize);
    let vars: Vec<_> = c.iter().enumerate().map(|(j, &cj)| model.add_var(format!("x{j}"), 0.0, f64::INFINITY, cj)).collect();
    for (i, row) in a.iter().enumerate() {
        let coeffs: Vec<_> = row.iter().enumerate().map(|(j, &v)| (vars[j], v)).collect();
        model.add_row(format!("r{i}"), &coeffs, Relation::Le, b[i]);
    }
    model
}

/// Random LP with mixed relations, bounds and senses that is feasible by
/// construction (rows are built around a known point).
pub fn random_general_lp(rng: &mut impl Rng, n: usize, m: usize) -> LinearModel {
    let sense = if rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut model = LinearModel::new(sense);
    let point: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = point[j] - rng.random_range(0.0..3.0);
            let hi = point[j] + rng.random_range(0.0..3.0);
            let (lo, hi) = match rng.random_range(0..4) {
                0 => (lo, hi),
                1 => (lo, f64::INFINITY),
                2 => (f64::NEG_INFINITY, hi),
                _ => (lo.max(-5.0), hi.min(5.0)),
            };
            model.add_var(format!("x{j}"), lo, hi, rng.random_range(-3.0..3.0))
        })
        .collect();
    for i in 0..m {
        let coeffs: Vec<_> = vars.iter().map(|&v| (v, rng.random_range(-2.0..2.0))).collect();
        let act: f64 = coeffs.iter().map(|&(v, a)| a * point[v.0]).sum();
        let (rel, rhs) = match rng.random_range(0..3) {
            0 => (Relation::Le, act + rng.random_range(0.0..2.0)),
            1 => (Relation::Ge, act - rng.random_range(0.0..2.0)),
            _ => (Relation::Eq, act),
        };
        model.add_row(format!("r{i}"), &coeffs, rel, rhs);
    }
    // Box every variable loosely so the LP stays bounded.
    for (j, &v) in vars.iter().enumerate() {
        model.add_row(format!("box_hi{j}"), &[(v, 1.0)], Relation::Le, point[j] + 50.0);
        model.add_row(format!("box_lo{j}"), &[(v, 1.0)], Relation::Ge, point[j] - 50.0);
    }
    model
}

/// Largest residual among primal feasibility, dual sign feasibility,
/// complementary slackness and the primal-dual objective difference (relative).
pub fn duality_residual(model: &LinearModel, r: &SolveResult) -> f64 {
    let mut worst = model.max_violation(&r.x);
    let s = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let act = model.activities(&r.x);
    for ((row, &y), a) in model.rows.iter().zip(&r.duals).zip(act) {
        // In minimisation form a Le row has a nonpositive price, Ge nonnegative.
        let y = s * y;
        match row.relation {
            Relation::Le => worst = worst.max(y),
            Relation::Ge => worst = worst.max(-y),
            Relation::Eq => {}
        }
        worst = worst.max((y * (a - row.rhs)).abs());
    }
    for ((v, &d), &x) in model.vars.iter().zip(&r.reduced_costs).zip(&r.x) {
        let d = s * d;
        let at_lo = (x - v.lower).abs() <= 1e-7;
        let at_hi = (v.upper - x).abs() <= 1e-7;
        let viol = match (at_lo, at_hi) {
            (true, true) => 0.0,
            (true, false) => (-d).max(0.0),
            (false, true) => d.max(0.0),
            (false, false) => d.abs(),
        };
        worst = worst.max(viol);
    }
    let primal = model.objective_value(&r.x);
    let dual = homecare_alp::optim::dual_objective(model, r);
    worst.max((primal - dual).abs() / (1.0 + primal.abs()))
}

/// Random pure-binary model with up to `n` variables.
pub fn random_binary_mip(rng: &mut impl Rng, n: usize) -> LinearModel {
    let sense = if rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut model = LinearModel::new(sense);
    let vars: Vec<_> = (0..n).map(|j| model.add_binary(format!("b{j}"), rng.random_range(-5.0..5.0))).collect();
    for i in 0..rng.random_range(1..5) {
        let coeffs: Vec<_> = vars.iter().map(|&v| (v, rng.random_range(-3i32..=4) as f64)).collect();
        let rel = match rng.random_range(0..4) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        let rhs = rng.random_range(-2i32..=6) as f64;
        model.add_row(format!("r{i}"), &coeffs, rel, rhs);
    }
    model
}

/// Exhaustive optimum of a pure-binary model; `None` when infeasible.
pub fn enumerate_binary(model: &LinearModel) -> Option<f64> {
    let n = model.vars.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if model.max_violation(&x) > 1e-9 {
            continue;
        }
        let v = model.objective_value(&x);
        best = Some(match (best, model.sense) {
            (None, _) => v,
            (Some(b), Sense::Minimize) => b.min(v),
            (Some(b), Sense::Maximize) => b.max(v),
        });
    }
    best
}

/// Shortest closed depot tour by trying every permutation.
pub fn brute_force_tour(subset: &[usize], dist: &[Vec<f64>]) -> f64 {
    fn rec(at: usize, left: &mut Vec<usize>, acc: f64, dist: &[Vec<f64>], best: &mut f64) {
        if left.is_empty() {
            *best = best.min(acc + dist[at][0]);
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            rec(v, left, acc + dist[at][v], dist, best);
            left.insert(i, v);
        }
    }
    let mut best = f64::INFINITY;
    rec(0, &mut subset.to_vec(), 0.0, dist, &mut best);
    best
}
