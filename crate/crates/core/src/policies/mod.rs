//! Daily decision rules: the ALP policy, the Myopic benchmark, the
//! scenario-based (SB) benchmark and two trivial baselines.

mod alp;
mod calendar;
mod myopic;
mod sb;

pub use alp::{alp_action, classify_regions, AlpPolicy, RegionLabel};
pub use calendar::{cheapest_insertion, finish_day_one, DayOneFinish, EXACT_DAY_LOCATIONS};
pub use myopic::{myopic_action, myopic_horizon, MyopicPolicy};
pub use sb::{sb_action, tune_sb_threshold, SbConfig, SbPolicy, SbTuning};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::mdp::{ActionPlan, State};
use crate::rng::StreamRng;

/// What happened to one new referral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Reject,
    /// Accepted with the first visit on this day.
    Day(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferralChoice {
    pub k: usize,
    pub l: usize,
    pub choice: Choice,
    /// The policy's own cost estimate for the choice, if it has one.
    pub cost: f64,
}

/// An action plus diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub action: ActionPlan,
    /// Value of the policy's internal objective at the chosen action.
    pub objective: f64,
    pub solve_seconds: f64,
    pub choices: Vec<ReferralChoice>,
    /// True when a tour or subset search fell back to a heuristic.
    pub heuristic: bool,
}

/// A stationary policy. Implementations hold no mutable state; the random
/// stream is only consumed by randomised policies.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;
    fn decide(&self, state: &State, inst: &ProblemInstance, rng: &mut StreamRng) -> Result<PolicyDecision>;
}

/// Rejects every referral and serves day 1 as booked, diverting only when
/// the shift plus overtime cannot hold the load.
#[derive(Debug, Clone, Copy, Default)]
pub struct RejectAll;

impl Policy for RejectAll {
    fn name(&self) -> &str {
        "reject-all"
    }

    fn decide(&self, state: &State, inst: &ProblemInstance, _rng: &mut StreamRng) -> Result<PolicyDecision> {
        let lay = inst.layout();
        let mut action = ActionPlan::empty(inst);
        let mut choices = Vec::new();
        let mut load = vec![0u32; lay.y_len()];
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                let i = lay.y_index(k, l);
                action.reject[i] = state.y[i];
                load[i] = state.day_one_booked(lay, k, l);
                let cost = inst.rejection_cost(k);
                choices.extend((0..state.y[i]).map(|_| ReferralChoice { k, l, choice: Choice::Reject, cost }));
            }
        }
        let fin = finish_day_one(inst, &load);
        fin.apply(&mut action);
        let objective = crate::mdp::action_cost(&action, inst);
        Ok(PolicyDecision { action, objective, solve_seconds: 0.0, choices, heuristic: fin.heuristic })
    }
}

/// Accepts every referral onto day 1 and diverts every day-1 visit.
#[derive(Debug, Clone, Copy, Default)]
pub struct DivertAll;

impl Policy for DivertAll {
    fn name(&self) -> &str {
        "divert-all"
    }

    fn decide(&self, state: &State, inst: &ProblemInstance, _rng: &mut StreamRng) -> Result<PolicyDecision> {
        let lay = inst.layout();
        let mut action = ActionPlan::empty(inst);
        let mut choices = Vec::new();
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                let i = lay.y_index(k, l);
                action.add_assigned(inst, 1, k, l, state.y[i]);
                action.divert[i] = state.y[i] + state.day_one_booked(lay, k, l);
                let cost = inst.diversion_cost(k);
                choices.extend((0..state.y[i]).map(|_| ReferralChoice { k, l, choice: Choice::Day(1), cost }));
            }
        }
        let objective = crate::mdp::action_cost(&action, inst);
        Ok(PolicyDecision { action, objective, solve_seconds: 0.0, choices, heuristic: false })
    }
}
