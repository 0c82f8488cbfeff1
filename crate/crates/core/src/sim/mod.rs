//! Discounted-cost simulation of policies and paired comparisons.
//!
//! Randomness: day `i` of a run with seed `s` draws the transition from
//! stream `(s, i, 1)` and gives the policy stream `(s, i, 0)`. Initial state
//! `n` of a comparison under master seed `m` is the warm-up result of seed
//! `derive(m, [0, n])`; its evaluation runs use `derive(m, [1, n])`, plus the
//! policy index when common random numbers are off.

mod report;
mod stats;

pub use report::{PairTest, PolicySummary, SimReport};
pub use stats::{mean, paired_t_test, sample_sd, TTest};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::{immediate_cost, sample_transition, ActionPlan, State};
use crate::policies::{MyopicPolicy, Policy};
use crate::rng::{derive, stream};

/// Sizes and seeds of a simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of random initial states `I^s`.
    pub initial_states: usize,
    /// Warm-up days `I^w`.
    pub warmup_days: usize,
    /// Evaluation days `I^d`.
    pub eval_days: usize,
    pub seed: u64,
    pub common_random_numbers: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { initial_states: 25, warmup_days: 20, eval_days: 365, seed: 0, common_random_numbers: true }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_states == 0 || self.eval_days == 0 {
            return Err(Error::Precondition("initial states and evaluation days must be positive".into()));
        }
        Ok(())
    }

    pub fn state_seed(&self, n: usize) -> u64 {
        derive(self.seed, &[0, n as u64])
    }

    pub fn eval_seed(&self, n: usize, policy: usize) -> u64 {
        if self.common_random_numbers {
            derive(self.seed, &[1, n as u64])
        } else {
            derive(self.seed, &[1, n as u64, policy as u64])
        }
    }
}

/// Operational quantities of one simulated day.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DayMetrics {
    pub cost: f64,
    /// `J̄_k e_k` per rejected referral.
    pub rejection_hours: f64,
    /// `e_k` per diverted visit.
    pub diversion_hours: f64,
    pub overtime_hours: f64,
    pub travel_time: f64,
    /// Travel plus service time.
    pub tour_length: f64,
    pub referrals: u32,
    pub accepted: u32,
}

impl DayMetrics {
    pub fn of(state: &State, action: &ActionPlan, inst: &ProblemInstance, cost: f64) -> Self {
        let lay = inst.layout();
        let mut m = DayMetrics { cost, ..Default::default() };
        for k in 0..inst.types() {
            let s = inst.service(k);
            for l in 0..inst.regions() {
                let i = lay.y_index(k, l);
                m.rejection_hours += action.reject[i] as f64 * s.rounded_mean() as f64 * s.service_time;
                m.diversion_hours += action.divert[i] as f64 * s.service_time;
                m.referrals += state.y[i];
                m.accepted += state.y[i] - action.reject[i];
            }
        }
        m.overtime_hours = action.overtime;
        m.travel_time = action.travel_time(inst);
        m.tour_length = action.tour_length(state, inst);
        m
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    /// `Σ_i γ^i c(s_i, μ(s_i))`.
    pub value: f64,
    pub days: Vec<DayMetrics>,
    /// Days on which the policy used a heuristic fallback.
    pub heuristic_days: usize,
    pub final_state: State,
}

impl Run {
    /// Mean daily metrics (the `cost` field is undiscounted).
    pub fn daily_mean(&self) -> DayMetrics {
        let n = self.days.len().max(1) as f64;
        let mut m = DayMetrics::default();
        for d in &self.days {
            m.cost += d.cost / n;
            m.rejection_hours += d.rejection_hours / n;
            m.diversion_hours += d.diversion_hours / n;
            m.overtime_hours += d.overtime_hours / n;
            m.travel_time += d.travel_time / n;
            m.tour_length += d.tour_length / n;
            m.referrals += d.referrals;
            m.accepted += d.accepted;
        }
        m
    }
}

/// Simulates `days` days from `state` under `policy`.
pub fn estimate_value(state: &State, policy: &dyn Policy, inst: &ProblemInstance, days: usize, seed: u64) -> Result<Run> {
    let mut s = state.clone();
    let mut value = 0.0;
    let mut disc = 1.0;
    let mut metrics = Vec::with_capacity(days);
    let mut heuristic_days = 0;
    for day in 0..days {
        let fail = |e: Error| Error::PolicyFailure { day, source: Box::new(e) };
        let d = policy.decide(&s, inst, &mut stream(seed, &[day as u64, 0])).map_err(fail)?;
        let cost = immediate_cost(&s, &d.action, inst).map_err(fail)?;
        heuristic_days += d.heuristic as usize;
        metrics.push(DayMetrics::of(&s, &d.action, inst, cost));
        value += disc * cost;
        disc *= inst.gamma;
        s = sample_transition(&s, &d.action, inst, &mut stream(seed, &[day as u64, 1])).next_state;
    }
    Ok(Run { value, days: metrics, heuristic_days, final_state: s })
}

/// The state after `days` days from empty under `policy`.
pub fn warmup(inst: &ProblemInstance, policy: &dyn Policy, days: usize, seed: u64) -> Result<State> {
    Ok(estimate_value(&State::empty(inst), policy, inst, days, seed)?.final_state)
}

/// Initial states of a study: warm-ups under the Myopic policy.
pub fn initial_states(inst: &ProblemInstance, cfg: &SimConfig) -> Result<Vec<State>> {
    (0..cfg.initial_states).into_par_iter().map(|n| warmup(inst, &MyopicPolicy, cfg.warmup_days, cfg.state_seed(n))).collect()
}

/// Runs of every policy from every state, indexed `[policy][state]`.
pub fn evaluate(
    inst: &ProblemInstance,
    policies: &[&dyn Policy],
    states: &[State],
    cfg: &SimConfig,
) -> Result<Vec<Vec<Run>>> {
    let cells: Vec<(usize, usize)> = (0..policies.len()).flat_map(|p| (0..states.len()).map(move |n| (p, n))).collect();
    let runs: Vec<Run> = cells
        .par_iter()
        .map(|&(p, n)| estimate_value(&states[n], policies[p], inst, cfg.eval_days, cfg.eval_seed(n, p)))
        .collect::<Result<_>>()?;
    let mut out: Vec<Vec<Run>> = vec![Vec::with_capacity(states.len()); policies.len()];
    for ((p, _), run) in cells.into_iter().zip(runs) {
        out[p].push(run);
    }
    Ok(out)
}

/// Mean discounted value of `policy` over the study's initial states.
pub fn average_value(inst: &ProblemInstance, policy: &dyn Policy, states: &[State], cfg: &SimConfig) -> Result<(f64, Vec<Run>)> {
    let runs = evaluate(inst, &[policy], states, cfg)?.pop().expect("one policy");
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    Ok((mean(&values), runs))
}

/// Simulates every policy from the same initial states and reports gaps
/// `100 (v_ref − v) / v_ref` against `policies[reference]`.
pub fn compare_policies(
    inst: &ProblemInstance,
    policies: &[&dyn Policy],
    reference: usize,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    if policies.len() < 2 || reference >= policies.len() {
        return Err(Error::Precondition("need at least two policies and a reference among them".into()));
    }
    let states = initial_states(inst, cfg)?;
    let runs = evaluate(inst, policies, &states, cfg)?;
    Ok(SimReport::build(policies.iter().map(|p| p.name().to_string()).collect(), reference, *cfg, runs))
}
