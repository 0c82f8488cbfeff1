//! Checks of the ALP constraints `ṽ(s) ≤ c(s,a) + γ E[ṽ(s')]`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::column::Column;
use super::params::AlpParams;
use super::pricing::{price, Prices};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::{route_length, ActionPlan, State};
use crate::optim::{heuristic_tour, optimal_tour};

/// Largest number of state-action pairs the exhaustive mode enumerates.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

/// How pairs are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckMode {
    /// Every feasible pair with a shortest route.
    Exhaustive,
    /// Random feasible pairs plus single-coordinate extremes.
    Sampled { samples: usize, seed: u64 },
    /// The most violated pair found by exact pricing.
    Exact,
}

impl CheckMode {
    pub fn sampled(seed: u64) -> Self {
        Self::Sampled { samples: 100_000, seed }
    }
}

/// Outcome of [`check_feasibility`].
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// `max [ṽ(s) − c(s,a) − γ E ṽ(s')]`; at most 0 for feasible parameters.
    pub max_violation: f64,
    pub worst: Option<(State, ActionPlan)>,
    pub pairs_checked: u64,
}

impl FeasibilityReport {
    pub fn feasible(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

fn prices_of(params: &AlpParams) -> Prices {
    Prices { eta: params.eta, tau: params.tau.clone(), rho: params.rho.clone() }
}

/// Violation of the ALP constraint of one pair.
pub fn violation(params: &AlpParams, inst: &ProblemInstance, state: &State, action: &ActionPlan) -> f64 {
    let col = Column::new(inst, state.clone(), action.clone());
    -col.reduced_cost(inst.gamma, params.eta, &params.tau, &params.rho)
}

/// Largest constraint violation of `params` over the pairs selected by `mode`.
pub fn check_feasibility(params: &AlpParams, inst: &ProblemInstance, mode: CheckMode) -> Result<FeasibilityReport> {
    params.validate(inst)?;
    match mode {
        CheckMode::Exact => {
            let p = price(inst, &prices_of(params));
            Ok(FeasibilityReport { max_violation: -p.value, worst: Some((p.column.state, p.column.action)), pairs_checked: 1 })
        }
        CheckMode::Exhaustive => exhaustive(params, inst),
        CheckMode::Sampled { samples, seed } => Ok(sampled(params, inst, samples, seed)),
    }
}

/// Local choices of one `(k, l)`: its state entries and its decisions.
#[derive(Debug, Clone)]
struct Local {
    /// `(flat x index, value)` of nonzero entries.
    x: Vec<(usize, u32)>,
    y: u32,
    /// `n_t` for `t = 1..=T_k`.
    assign: Vec<u32>,
    reject: u32,
    divert: u32,
    day_one: u32,
}

fn compositions(total: u32, parts: usize, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for v in 0..=total {
        cur.push(v);
        compositions(total - v, parts - 1, out, cur);
        cur.pop();
    }
}

fn local_options(inst: &ProblemInstance, k: usize, l: usize) -> Vec<Local> {
    let lay = inst.layout();
    let wait = inst.service(k).wait_target;
    let coords: Vec<(usize, bool)> = (1..=lay.horizon)
        .flat_map(|t| (0..lay.dims(k).visits).map(move |j| (t, j)))
        .filter(|&(t, j)| !lay.is_structural_zero(t, k, j))
        .map(|(t, j)| (lay.x_index(t, k, l, j), t == 1))
        .collect();
    let cap = inst.x_cap(l);
    let mut states: Vec<Vec<(usize, u32)>> = vec![Vec::new()];
    for &(idx, _) in &coords {
        let mut next = Vec::with_capacity(states.len() * (cap as usize + 1));
        for s in &states {
            for v in 0..=cap {
                let mut s2 = s.clone();
                if v > 0 {
                    s2.push((idx, v));
                }
                next.push(s2);
            }
        }
        states = next;
    }
    let mut out = Vec::new();
    for xs in states {
        let booked: u32 = xs.iter().filter(|(idx, _)| coords.iter().any(|&(i, d1)| d1 && i == *idx)).map(|&(_, v)| v).sum();
        for y in 0..=inst.y_cap(l) {
            let mut splits = Vec::new();
            compositions(y, wait + 1, &mut splits, &mut Vec::new());
            for split in splits {
                let (assign, reject) = (split[..wait].to_vec(), split[wait]);
                let day_one = booked + assign[0];
                for divert in 0..=day_one {
                    out.push(Local { x: xs.clone(), y, assign: assign.clone(), reject, divert, day_one });
                }
            }
        }
    }
    out
}

fn local_count(inst: &ProblemInstance, k: usize, l: usize) -> u128 {
    // Counted without materialising: Σ over day-1 totals of their multiplicity.
    let lay = inst.layout();
    let wait = inst.service(k).wait_target;
    let cap = inst.x_cap(l) as u128;
    let mut day1 = 0u32;
    let mut later = 0u32;
    for t in 1..=lay.horizon {
        for j in 0..lay.dims(k).visits {
            if !lay.is_structural_zero(t, k, j) {
                if t == 1 {
                    day1 += 1;
                } else {
                    later += 1;
                }
            }
        }
    }
    let later_states = (cap + 1).checked_pow(later).unwrap_or(u128::MAX);
    // Distribution of the booked day-1 total over `day1` coordinates.
    let mut booked = vec![1u128];
    for _ in 0..day1 {
        let mut next = vec![0u128; booked.len() + cap as usize];
        for (s, &c) in booked.iter().enumerate() {
            for v in 0..=cap as usize {
                next[s + v] = next[s + v].saturating_add(c);
            }
        }
        booked = next;
    }
    let mut total = 0u128;
    for y in 0..=inst.y_cap(l) as u128 {
        // Splits of y into n_1..n_T and r, weighted by the divert choices.
        for n1 in 0..=y {
            let rest = y - n1;
            let ways = binomial(rest + wait as u128 - 1, wait as u128 - 1);
            for (b, &c) in booked.iter().enumerate() {
                total = total.saturating_add(c.saturating_mul(ways).saturating_mul(b as u128 + n1 + 1));
            }
        }
    }
    total.saturating_mul(later_states)
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut r = 1u128;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn exhaustive(params: &AlpParams, inst: &ProblemInstance) -> Result<FeasibilityReport> {
    let (kc, lc) = (inst.types(), inst.regions());
    let mut total = 1u128;
    for k in 0..kc {
        for l in 0..lc {
            total = total.saturating_mul(local_count(inst, k, l));
        }
    }
    if total > EXHAUSTIVE_LIMIT {
        return Err(Error::EnumerationTooLarge(total));
    }
    let locals: Vec<Vec<Local>> = (0..kc * lc).map(|kl| local_options(inst, kl / lc, kl % lc)).collect();
    let mut best = FeasibilityReport { max_violation: f64::NEG_INFINITY, worst: None, pairs_checked: 0 };
    let mut pick = vec![0usize; locals.len()];
    loop {
        let chosen: Vec<&Local> = pick.iter().zip(&locals).map(|(&i, opts)| &opts[i]).collect();
        if let Some((s, a)) = assemble(inst, &chosen) {
            let v = violation(params, inst, &s, &a);
            best.pairs_checked += 1;
            if v > best.max_violation {
                best.max_violation = v;
                best.worst = Some((s, a));
            }
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == pick.len() {
                return Ok(best);
            }
            pick[pos] += 1;
            if pick[pos] < locals[pos].len() {
                break;
            }
            pick[pos] = 0;
            pos += 1;
        }
    }
}

/// Builds the pair from local choices with the shortest route; `None` if the
/// day-1 work does not fit.
fn assemble(inst: &ProblemInstance, chosen: &[&Local]) -> Option<(State, ActionPlan)> {
    let lay = inst.layout();
    let lc = inst.regions();
    let mut s = State::empty(inst);
    let mut a = ActionPlan::empty(inst);
    let mut regions = Vec::new();
    for (kl, loc) in chosen.iter().enumerate() {
        let (k, l) = (kl / lc, kl % lc);
        for &(idx, v) in &loc.x {
            s.x[idx] = v;
        }
        s.set_y(lay, k, l, loc.y);
        for (t, &n) in loc.assign.iter().enumerate() {
            a.add_assigned(inst, t + 1, k, l, n);
        }
        a.reject[lay.y_index(k, l)] = loc.reject;
        a.divert[lay.y_index(k, l)] = loc.divert;
        if loc.day_one > loc.divert {
            regions.push(l + 1);
        }
    }
    finish_route(inst, &s, &mut a, &regions).then_some((s, a))
}

fn finish_route(inst: &ProblemInstance, s: &State, a: &mut ActionPlan, nodes: &[usize]) -> bool {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let dist = inst.geometry.distance_matrix();
    let tour = if nodes.len() <= 12 { optimal_tour(&nodes, &dist).expect("small") } else { heuristic_tour(&nodes, &dist) };
    a.route = tour.order.iter().map(|n| n - 1).collect();
    let len = route_length(&a.route, inst) + a.service_hours(s, inst);
    a.overtime = (len - inst.shift).max(0.0);
    a.overtime <= inst.overtime_cap + 1e-9
}

fn sampled(params: &AlpParams, inst: &ProblemInstance, samples: usize, seed: u64) -> FeasibilityReport {
    let mut pairs = extreme_pairs(inst);
    let random: Vec<(State, ActionPlan)> =
        (0..samples).into_par_iter().map(|i| random_pair(inst, &mut crate::rng::stream(seed, &[7, i as u64]))).collect();
    pairs.extend(random);
    let scored: Vec<(f64, usize)> = pairs.par_iter().enumerate().map(|(i, (s, a))| (violation(params, inst, s, a), i)).collect();
    let (v, i) = scored.into_iter().fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    FeasibilityReport { max_violation: v, worst: pairs.get(i).cloned(), pairs_checked: pairs.len() as u64 }
}

/// Pairs whose state has a single nonzero coordinate at its cap (or at the
/// largest load that fits a trip), with every simple way of handling it.
pub fn extreme_pairs(inst: &ProblemInstance) -> Vec<(State, ActionPlan)> {
    let lay = inst.layout();
    let mut out = vec![(State::empty(inst), ActionPlan::empty(inst))];
    let fits = |l: usize, k: usize| {
        let spare = inst.shift + inst.overtime_cap - 2.0 * inst.geometry.depot_distance(l);
        if spare <= 0.0 {
            0
        } else {
            (spare / inst.service(k).service_time + 1e-9).floor() as u32
        }
    };
    for (idx, c) in lay.free_coords() {
        let cap = inst.x_cap(c.l);
        let mut levels = vec![cap];
        if c.t == 1 {
            levels.push(fits(c.l, c.k).min(cap));
        }
        for v in levels {
            if v == 0 {
                continue;
            }
            let mut s = State::empty(inst);
            s.x[idx] = v;
            if c.t == 1 {
                let fit = fits(c.l, c.k).min(v);
                for served in [0, fit] {
                    let mut a = ActionPlan::empty(inst);
                    a.divert[lay.y_index(c.k, c.l)] = v - served;
                    let nodes = if served > 0 { vec![c.l + 1] } else { Vec::new() };
                    if finish_route(inst, &s, &mut a, &nodes) {
                        out.push((s.clone(), a));
                    }
                }
            } else {
                out.push((s, ActionPlan::empty(inst)));
            }
        }
    }
    for k in 0..inst.types() {
        let wait = inst.service(k).wait_target;
        for l in 0..inst.regions() {
            let cap = inst.y_cap(l);
            for v in [cap, fits(l, k).min(cap)] {
                if v == 0 {
                    continue;
                }
                let mut s = State::empty(inst);
                s.set_y(lay, k, l, v);
                let mut a = ActionPlan::empty(inst);
                a.reject[lay.y_index(k, l)] = v;
                out.push((s.clone(), a));
                for t in 1..=wait {
                    let mut a = ActionPlan::empty(inst);
                    a.add_assigned(inst, t, k, l, v);
                    if t == 1 {
                        let fit = fits(l, k).min(v);
                        a.divert[lay.y_index(k, l)] = v - fit;
                        let nodes = if fit > 0 { vec![l + 1] } else { Vec::new() };
                        if finish_route(inst, &s, &mut a, &nodes) {
                            out.push((s.clone(), a));
                        }
                    } else {
                        out.push((s.clone(), a));
                    }
                }
            }
        }
    }
    out
}

/// A random feasible pair: a sparse random state, random referral decisions
/// and random diversions repaired until the route fits.
pub fn random_pair<R: Rng + ?Sized>(inst: &ProblemInstance, rng: &mut R) -> (State, ActionPlan) {
    let lay = inst.layout();
    let (kc, lc) = (inst.types(), inst.regions());
    let mut s = State::empty(inst);
    let density: f64 = rng.random_range(0.05..0.6);
    for (idx, c) in lay.free_coords() {
        if rng.random::<f64>() < density {
            s.x[idx] = rng.random_range(0..=inst.x_cap(c.l));
        }
    }
    for k in 0..kc {
        for l in 0..lc {
            if rng.random::<f64>() < density {
                s.set_y(lay, k, l, rng.random_range(0..=inst.y_cap(l)));
            }
        }
    }
    let mut a = ActionPlan::empty(inst);
    for k in 0..kc {
        let wait = inst.service(k).wait_target;
        for l in 0..lc {
            for _ in 0..s.y_at(lay, k, l) {
                let choice = rng.random_range(0..=wait);
                if choice == 0 {
                    a.reject[lay.y_index(k, l)] += 1;
                } else {
                    a.add_assigned(inst, choice, k, l, 1);
                }
            }
            let day_one = s.day_one_booked(lay, k, l) + a.assigned(inst, 1, k, l);
            a.divert[lay.y_index(k, l)] = rng.random_range(0..=day_one);
        }
    }
    loop {
        let nodes: Vec<usize> = (0..lc).filter(|&l| (0..kc).any(|k| a.served(&s, inst, k, l) > 0)).map(|l| l + 1).collect();
        if finish_route(inst, &s, &mut a, &nodes) {
            return (s, a);
        }
        // Divert one more unit somewhere with work.
        let mut open: Vec<(usize, usize)> =
            (0..kc).flat_map(|k| (0..lc).map(move |l| (k, l))).filter(|&(k, l)| a.served(&s, inst, k, l) > 0).collect();
        open.shuffle(rng);
        let (k, l) = open[0];
        a.divert[lay.y_index(k, l)] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};
    use crate::mdp::check_action;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular(1, 2, 0.5).unwrap(),
            services: vec![ServiceType::new(1, 1.0, 2, VisitCountDist::Deterministic { visits: 1 }).unwrap()],
            arrival_rates: vec![vec![0.5, 0.3]],
            shift: 2.0,
            overtime_cap: 0.5,
            weights: CostWeights::default(),
            gamma: 0.9,
            x_cap: 2,
            y_cap: 2,
        })
        .unwrap()
    }

    #[test]
    fn random_pairs_are_feasible() {
        let inst = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let (s, a) = random_pair(&inst, &mut rng);
            assert!(check_action(&s, &a, &inst).is_empty());
        }
        for (s, a) in extreme_pairs(&inst) {
            assert!(check_action(&s, &a, &inst).is_empty());
        }
    }

    #[test]
    fn zero_params_are_feasible() {
        let inst = tiny();
        let p = AlpParams::zero(&inst);
        let ex = check_feasibility(&p, &inst, CheckMode::Exhaustive).unwrap();
        assert!(ex.max_violation <= 0.0);
        assert!(ex.pairs_checked > 1000);
        assert!(check_feasibility(&p, &inst, CheckMode::Sampled { samples: 2000, seed: 5 }).unwrap().max_violation <= 0.0);
    }

    #[test]
    fn exhaustive_agrees_with_pricing() {
        let inst = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lay = inst.layout();
        for _ in 0..5 {
            let mut p = AlpParams::zero(&inst);
            for (idx, _) in lay.free_coords() {
                p.tau[idx] = rng.random_range(0.0..5.0);
            }
            p.rho = (0..lay.y_len()).map(|_| rng.random_range(0.0..5.0)).collect();
            p.eta = rng.random_range(-2.0..2.0);
            let ex = check_feasibility(&p, &inst, CheckMode::Exhaustive).unwrap();
            let exact = check_feasibility(&p, &inst, CheckMode::Exact).unwrap();
            assert!((ex.max_violation - exact.max_violation).abs() < 1e-9, "{} vs {}", ex.max_violation, exact.max_violation);
        }
    }

    #[test]
    fn enumeration_guard() {
        let mut spec = tiny().spec();
        spec.x_cap = 30;
        spec.y_cap = 30;
        let inst = ProblemInstance::new(spec).unwrap();
        let p = AlpParams::zero(&inst);
        assert!(matches!(check_feasibility(&p, &inst, CheckMode::Exhaustive), Err(Error::EnumerationTooLarge(_))));
    }
}
