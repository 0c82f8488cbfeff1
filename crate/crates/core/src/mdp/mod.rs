//! States, actions, feasibility, costs and transitions.

mod layout;

pub use layout::{Layout, TypeDims, XCoord};

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

/// Booked visits `x` and pending referrals `y`, flattened per [`Layout`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub x: Vec<u32>,
    pub y: Vec<u32>,
}

impl State {
    pub fn empty(inst: &ProblemInstance) -> Self {
        let lay = inst.layout();
        Self { x: vec![0; lay.x_len()], y: vec![0; lay.y_len()] }
    }

    #[inline]
    pub fn x_at(&self, lay: &Layout, t: usize, k: usize, l: usize, j: usize) -> u32 {
        self.x[lay.x_index(t, k, l, j)]
    }

    #[inline]
    pub fn y_at(&self, lay: &Layout, k: usize, l: usize) -> u32 {
        self.y[lay.y_index(k, l)]
    }

    pub fn set_x(&mut self, lay: &Layout, t: usize, k: usize, l: usize, j: usize, v: u32) {
        self.x[lay.x_index(t, k, l, j)] = v;
    }

    pub fn set_y(&mut self, lay: &Layout, k: usize, l: usize, v: u32) {
        self.y[lay.y_index(k, l)] = v;
    }

    /// Booked day-1 visits of type `k` in region `l`, over all `j`.
    pub fn day_one_booked(&self, lay: &Layout, k: usize, l: usize) -> u32 {
        (0..lay.dims(k).visits).map(|j| self.x_at(lay, 1, k, l, j)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.x.iter().chain(&self.y).all(|&v| v == 0)
    }

    pub fn total_pending(&self) -> u32 {
        self.y.iter().sum()
    }

    /// Cap and structural-zero violations of this state.
    pub fn violations(&self, inst: &ProblemInstance) -> Vec<Violation> {
        let lay = inst.layout();
        let mut out = Vec::new();
        if self.x.len() != lay.x_len() || self.y.len() != lay.y_len() {
            out.push(Violation::Dimension("state vectors do not match the instance".into()));
            return out;
        }
        for (idx, &v) in self.x.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let c = lay.decode(idx);
            if lay.is_structural_zero(c.t, c.k, c.j) {
                out.push(Violation::StructuralZero(c));
            } else if v > inst.x_cap(c.l) {
                out.push(Violation::StateCap { what: format!("x{:?}", (c.t, c.k, c.l, c.j)), value: v });
            }
        }
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                let v = self.y_at(lay, k, l);
                if v > inst.y_cap(l) {
                    out.push(Violation::StateCap { what: format!("y{:?}", (k, l)), value: v });
                }
            }
        }
        out
    }
}

/// One day's decisions.
///
/// `assign` is indexed by `(t - 1) · K · L + k · L + l` for days
/// `t = 1..=T`; `reject` and `divert` use the `y` layout. `route` lists the
/// regions served on day 1 in visiting order (the depot is implicit at both
/// ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub reject: Vec<u32>,
    pub assign: Vec<u32>,
    pub divert: Vec<u32>,
    pub route: Vec<usize>,
    pub overtime: f64,
}

impl ActionPlan {
    pub fn empty(inst: &ProblemInstance) -> Self {
        let kl = inst.types() * inst.regions();
        Self {
            reject: vec![0; kl],
            assign: vec![0; kl * inst.horizon()],
            divert: vec![0; kl],
            route: Vec::new(),
            overtime: 0.0,
        }
    }

    #[inline]
    pub fn assign_index(inst: &ProblemInstance, t: usize, k: usize, l: usize) -> usize {
        ((t - 1) * inst.types() + k) * inst.regions() + l
    }

    #[inline]
    pub fn assigned(&self, inst: &ProblemInstance, t: usize, k: usize, l: usize) -> u32 {
        self.assign[Self::assign_index(inst, t, k, l)]
    }

    pub fn add_assigned(&mut self, inst: &ProblemInstance, t: usize, k: usize, l: usize, v: u32) {
        self.assign[Self::assign_index(inst, t, k, l)] += v;
    }

    /// Total travel time `q` of the route.
    pub fn travel_time(&self, inst: &ProblemInstance) -> f64 {
        route_length(&self.route, inst)
    }

    /// Arrival time `f_l` at each routed region, in route order.
    pub fn arrival_times(&self, inst: &ProblemInstance) -> Vec<(usize, f64)> {
        let g = &inst.geometry;
        let mut clock = 0.0;
        let mut prev = 0;
        self.route
            .iter()
            .map(|&l| {
                clock += g.node_distance(prev, l + 1);
                prev = l + 1;
                (l, clock)
            })
            .collect()
    }

    /// Day-1 visits of type `k` in region `l` that the nurse performs.
    pub fn served(&self, state: &State, inst: &ProblemInstance, k: usize, l: usize) -> i64 {
        let lay = inst.layout();
        state.day_one_booked(lay, k, l) as i64 + self.assigned(inst, 1, k, l) as i64
            - self.divert[lay.y_index(k, l)] as i64
    }

    /// Hours spent serving day-1 visits.
    pub fn service_hours(&self, state: &State, inst: &ProblemInstance) -> f64 {
        let mut total = 0.0;
        for k in 0..inst.types() {
            let e = inst.service(k).service_time;
            for l in 0..inst.regions() {
                total += e * self.served(state, inst, k, l) as f64;
            }
        }
        total
    }

    /// Tour length `g`: travel plus service.
    pub fn tour_length(&self, state: &State, inst: &ProblemInstance) -> f64 {
        self.travel_time(inst) + self.service_hours(state, inst)
    }

    /// Regions with at least one day-1 visit left after diversions.
    pub fn regions_with_work(&self, state: &State, inst: &ProblemInstance) -> BTreeSet<usize> {
        (0..inst.regions()).filter(|&l| (0..inst.types()).any(|k| self.served(state, inst, k, l) > 0)).collect()
    }

    /// Number of rejected referrals.
    pub fn rejections(&self) -> u32 {
        self.reject.iter().sum()
    }
}

/// Travel time of a depot-to-depot tour over `route`.
pub fn route_length(route: &[usize], inst: &ProblemInstance) -> f64 {
    let g = &inst.geometry;
    let mut prev = 0;
    let mut total = 0.0;
    for &l in route {
        total += g.node_distance(prev, l + 1);
        prev = l + 1;
    }
    total + g.node_distance(prev, 0)
}

/// A violated feasibility rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension(String),
    StateCap { what: String, value: u32 },
    StructuralZero(XCoord),
    /// `r = y − Σ n` fails, or a component would go negative.
    RejectionIdentity { k: usize, l: usize },
    /// A referral is assigned after its wait-time target.
    AssignmentBeyondWait { t: usize, k: usize, l: usize },
    /// More diversions than day-1 visits.
    DiversionBound { k: usize, l: usize },
    /// The route does not visit exactly the regions with day-1 work.
    RouteCoverage { missing: Vec<usize>, extra: Vec<usize> },
    RouteDuplicate(usize),
    /// Tour length exceeds shift plus overtime.
    Capacity { tour: f64, limit: f64 },
    OvertimeCap { overtime: f64, cap: f64 },
    NegativeOvertime(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Self::StateCap { what, value } => write!(f, "state component {what} = {value} exceeds its cap"),
            Self::StructuralZero(c) => write!(f, "structurally zero component {c:?} is nonzero"),
            Self::RejectionIdentity { k, l } => write!(f, "rejections of ({k},{l}) do not equal referrals minus assignments"),
            Self::AssignmentBeyondWait { t, k, l } => write!(f, "referral ({k},{l}) assigned to day {t} past its wait target"),
            Self::DiversionBound { k, l } => write!(f, "diversions of ({k},{l}) exceed day-1 visits"),
            Self::RouteCoverage { missing, extra } => write!(f, "route misses {missing:?} and visits idle {extra:?}"),
            Self::RouteDuplicate(l) => write!(f, "route visits region {l} twice"),
            Self::Capacity { tour, limit } => write!(f, "tour length {tour:.6} exceeds shift plus overtime {limit:.6}"),
            Self::OvertimeCap { overtime, cap } => write!(f, "overtime {overtime:.6} exceeds cap {cap:.6}"),
            Self::NegativeOvertime(u) => write!(f, "negative overtime {u}"),
        }
    }
}

const TIME_TOL: f64 = 1e-9;

/// Lists every rule `(state, action)` breaks; empty iff the action is feasible.
pub fn check_action(state: &State, action: &ActionPlan, inst: &ProblemInstance) -> Vec<Violation> {
    let mut out = state.violations(inst);
    if out.iter().any(|v| matches!(v, Violation::Dimension(_))) {
        return out;
    }
    let (kc, lc, horizon) = (inst.types(), inst.regions(), inst.horizon());
    if action.reject.len() != kc * lc || action.divert.len() != kc * lc || action.assign.len() != kc * lc * horizon {
        out.push(Violation::Dimension("action vectors do not match the instance".into()));
        return out;
    }
    let lay = inst.layout();
    for k in 0..kc {
        let wait = inst.service(k).wait_target;
        for l in 0..lc {
            let mut assigned = 0u64;
            for t in 1..=horizon {
                let n = action.assigned(inst, t, k, l);
                if n > 0 && t > wait {
                    out.push(Violation::AssignmentBeyondWait { t, k, l });
                }
                assigned += n as u64;
            }
            let y = state.y_at(lay, k, l) as u64;
            if assigned + action.reject[lay.y_index(k, l)] as u64 != y {
                out.push(Violation::RejectionIdentity { k, l });
            }
            if action.served(state, inst, k, l) < 0 {
                out.push(Violation::DiversionBound { k, l });
            }
        }
    }
    let work = action.regions_with_work(state, inst);
    let mut seen = BTreeSet::new();
    for &l in &action.route {
        if l >= lc || !seen.insert(l) {
            out.push(Violation::RouteDuplicate(l));
        }
    }
    let missing: Vec<usize> = work.difference(&seen).copied().collect();
    let extra: Vec<usize> = seen.difference(&work).copied().collect();
    if !missing.is_empty() || !extra.is_empty() {
        out.push(Violation::RouteCoverage { missing, extra });
    }
    if action.overtime < 0.0 {
        out.push(Violation::NegativeOvertime(action.overtime));
    }
    if action.overtime > inst.overtime_cap + TIME_TOL {
        out.push(Violation::OvertimeCap { overtime: action.overtime, cap: inst.overtime_cap });
    }
    if action.route.iter().all(|&l| l < lc) {
        let tour = action.tour_length(state, inst);
        let limit = inst.shift + action.overtime;
        if tour > limit + TIME_TOL {
            out.push(Violation::Capacity { tour, limit });
        }
    }
    out
}

/// Immediate cost without feasibility checks.
pub fn action_cost(action: &ActionPlan, inst: &ProblemInstance) -> f64 {
    let (kc, lc) = (inst.types(), inst.regions());
    let mut cost = 0.0;
    for k in 0..kc {
        let (r, z) = (inst.rejection_cost(k), inst.diversion_cost(k));
        for l in 0..lc {
            cost += r * action.reject[k * lc + l] as f64 + z * action.divert[k * lc + l] as f64;
        }
    }
    cost + inst.weights.overtime * action.overtime + inst.weights.travel * action.travel_time(inst)
}

/// `c(s, a) = Σ R r + Σ Z z + U u + Q q` for a feasible action.
pub fn immediate_cost(state: &State, action: &ActionPlan, inst: &ProblemInstance) -> Result<f64> {
    let v = check_action(state, action, inst);
    if !v.is_empty() {
        let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
        return Err(Error::InfeasibleAction(msg.join("; ")));
    }
    Ok(action_cost(action, inst))
}

/// `E[X'(s, a)]` in the flat `x` layout.
pub fn expected_next_x(state: &State, action: &ActionPlan, inst: &ProblemInstance) -> Vec<f64> {
    let lay = inst.layout();
    let mut out = vec![0.0; lay.x_len()];
    for (idx, c) in lay.free_coords() {
        out[idx] = expected_component(state, action, inst, c);
    }
    out
}

fn expected_component(state: &State, action: &ActionPlan, inst: &ProblemInstance, c: XCoord) -> f64 {
    let lay = inst.layout();
    let s = inst.service(c.k);
    let XCoord { t, k, l, j } = c;
    let x = |t: usize, j: usize| if t <= lay.horizon { state.x_at(lay, t, k, l, j) as f64 } else { 0.0 };
    let n = |t: usize| if t <= lay.horizon { action.assigned(inst, t, k, l) as f64 } else { 0.0 };
    if j == 1 && t == s.pattern {
        (x(1, 0) + n(1)) * s.continuation(2)
    } else if j >= 2 && t == s.pattern {
        x(1, j - 1) * s.continuation(j + 1)
    } else if j != 0 && t < s.pattern {
        x(t + 1, j)
    } else if j == 0 && t < s.wait_target {
        x(t + 1, 0) + n(t + 1)
    } else {
        0.0
    }
}

/// One sampled transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSample {
    /// `ξ[k][l][j]`: patients served today with `j` visits done who need
    /// another one (`j >= 1`; entry 0 unused), indexed by `k · L + l`.
    pub xi: Vec<Vec<u32>>,
    /// New referrals in the `y` layout.
    pub arrivals: Vec<u32>,
    pub next_state: State,
    /// Units lost to the `x` cap.
    pub x_overflow: u32,
    /// Arrivals lost to the `y` cap.
    pub y_truncated: u32,
}

/// Draws `Binomial(n, p)` as a sum of Bernoulli trials so that individual
/// patients consume individual uniforms.
fn bernoulli_sum<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    if p >= 1.0 {
        return n;
    }
    if p <= 0.0 {
        return 0;
    }
    (0..n).filter(|_| rng.random::<f64>() < p).count() as u32
}

/// Draws from `Poisson(rate)`.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> u32 {
    if rate <= 0.0 {
        return 0;
    }
    let d = Poisson::new(rate).expect("positive finite rate");
    let v: f64 = d.sample(rng);
    v.min(u32::MAX as f64) as u32
}

/// Samples `s'` given `(s, a)`.
///
/// A single seed is drawn from `rng`; continuations of each `(k, l, j)`
/// class and arrivals of each `(k, l)` use their own derived streams, so
/// two actions sharing a state see the same randomness for shared classes.
pub fn sample_transition<R: Rng + ?Sized>(
    state: &State,
    action: &ActionPlan,
    inst: &ProblemInstance,
    rng: &mut R,
) -> TransitionSample {
    let seed: u64 = rng.random();
    let arrivals: Vec<u32> = (0..inst.types() * inst.regions())
        .map(|kl| poisson(&mut crate::rng::stream(seed, &[1, kl as u64]), inst.rate(kl / inst.regions(), kl % inst.regions())))
        .collect();
    transition_with_arrivals(state, action, inst, seed, &arrivals)
}

/// Like [`sample_transition`] but with given arrivals and continuation seed.
pub fn transition_with_arrivals(
    state: &State,
    action: &ActionPlan,
    inst: &ProblemInstance,
    seed: u64,
    arrivals: &[u32],
) -> TransitionSample {
    let lay = inst.layout();
    let (kc, lc) = (inst.types(), inst.regions());
    let mut next = State::empty(inst);
    let mut xi = vec![Vec::new(); kc * lc];
    let mut x_overflow = 0;
    let mut y_truncated = 0;
    for k in 0..kc {
        let s = inst.service(k);
        let jk = s.max_visits();
        for l in 0..lc {
            let cap = inst.x_cap(l);
            let mut put = |next: &mut State, t: usize, j: usize, v: u32| {
                if v > cap {
                    x_overflow += v - cap;
                }
                next.set_x(lay, t, k, l, j, v.min(cap));
            };
            let mut row = vec![0u32; jk];
            for (j, slot) in row.iter_mut().enumerate().skip(1) {
                let base = state.x_at(lay, 1, k, l, j - 1) + if j == 1 { action.assigned(inst, 1, k, l) } else { 0 };
                let mut sub = crate::rng::stream(seed, &[2, (k * lc + l) as u64, j as u64]);
                *slot = bernoulli_sum(&mut sub, base, s.continuation(j + 1));
            }
            for (t, j) in (1..=lay.horizon).flat_map(|t| (0..jk).map(move |j| (t, j))) {
                if lay.is_structural_zero(t, k, j) {
                    continue;
                }
                let v = if j >= 1 && t == s.pattern {
                    row[j]
                } else if j != 0 && t < s.pattern {
                    state.x_at(lay, t + 1, k, l, j)
                } else if j == 0 && t < s.wait_target {
                    state.x_at(lay, t + 1, k, l, 0) + action.assigned(inst, t + 1, k, l)
                } else {
                    0
                };
                put(&mut next, t, j, v);
            }
            xi[k * lc + l] = row;
            let a = arrivals[lay.y_index(k, l)];
            let ycap = inst.y_cap(l);
            if a > ycap {
                y_truncated += a - ycap;
            }
            next.set_y(lay, k, l, a.min(ycap));
        }
    }
    TransitionSample { xi, arrivals: arrivals.to_vec(), next_state: next, x_overflow, y_truncated }
}
