//! The ALP policy: one-step lookahead on the affine value function.
//!
//! For a fixed state only three parts of the lookahead depend on the
//! action: where each referral goes (reject, day 1, a later day), which
//! day-1 visits are diverted, and the route. Referrals served on day 1
//! compete for route capacity with booked visits, which is the same
//! structure as the day-1 pricing problem, so the exact subset solver in
//! [`crate::dayone`] finds the minimiser.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Choice, Policy, PolicyDecision, ReferralChoice};
use crate::alp::pricing::{referral_options, Outside};
use crate::alp::{AlpParams, Prices};
use crate::dayone::{solve_day_one, UnitClass};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::{action_cost, expected_next_x, ActionPlan, State};
use crate::rng::StreamRng;

const TOL: f64 = 1e-12;

fn prices(params: &AlpParams) -> Prices {
    Prices { eta: params.eta, tau: params.tau.clone(), rho: params.rho.clone() }
}

/// Full lookahead value `c(s, a) + γ (η + Σ τ E[X'] + Σ ρ λ)`.
fn lookahead(state: &State, action: &ActionPlan, params: &AlpParams, inst: &ProblemInstance) -> f64 {
    let lay = inst.layout();
    let ex = expected_next_x(state, action, inst);
    let tx: f64 = params.tau.iter().zip(&ex).map(|(t, x)| t * x).sum();
    let mut ry = 0.0;
    for k in 0..inst.types() {
        for l in 0..inst.regions() {
            ry += params.rho[lay.y_index(k, l)] * inst.rate(k, l);
        }
    }
    action_cost(action, inst) + inst.gamma * (params.eta + tx + ry)
}

/// The ALP action for `state`.
///
/// Among referrals of one `(k, l)` a later assignment day wins ties and
/// assignment wins ties against rejection. The objective is the full
/// lookahead value including the action-independent terms, so the empty
/// state gives `γ (η + Σ ρ λ)`.
pub fn alp_action(state: &State, params: &AlpParams, inst: &ProblemInstance) -> Result<PolicyDecision> {
    let start = Instant::now();
    let lay = inst.layout();
    if params.tau.len() != lay.x_len() || params.rho.len() != lay.y_len() {
        return Err(Error::Dimension("ALP parameters do not match the instance".into()));
    }
    let p = prices(params);
    let mut classes = Vec::new();
    let mut options = Vec::new();
    for k in 0..inst.types() {
        let z = inst.diversion_cost(k);
        for l in 0..inst.regions() {
            classes.push(UnitClass { region: l, kind: k, count: state.day_one_booked(lay, k, l), serve: 0.0, idle: z });
            let o = referral_options(inst, &p, k, l);
            let idle = (o.serve + o.diversion).min(o.outside.1);
            classes.push(UnitClass { region: l, kind: k, count: state.y_at(lay, k, l), serve: o.serve, idle });
            options.push(o);
        }
    }
    let plan = solve_day_one(inst, &classes);
    let mut action = ActionPlan::empty(inst);
    let mut choices = Vec::new();
    for (i, o) in options.iter().enumerate() {
        let (booked, refs) = (&classes[2 * i], &classes[2 * i + 1]);
        let (k, l) = (refs.kind, refs.region);
        let yi = lay.y_index(k, l);
        action.divert[yi] += booked.count - plan.served[2 * i];
        let served = plan.served[2 * i + 1];
        let idle = refs.count - served;
        action.add_assigned(inst, 1, k, l, served);
        choices.extend((0..served).map(|_| ReferralChoice { k, l, choice: Choice::Day(1), cost: o.serve }));
        if idle == 0 {
            continue;
        }
        let diverted = o.serve + o.diversion;
        if diverted < o.outside.1 - TOL {
            action.add_assigned(inst, 1, k, l, idle);
            action.divert[yi] += idle;
            choices.extend((0..idle).map(|_| ReferralChoice { k, l, choice: Choice::Day(1), cost: diverted }));
        } else {
            let choice = match o.outside.0 {
                Outside::Reject => {
                    action.reject[yi] += idle;
                    Choice::Reject
                }
                Outside::Assign(t) => {
                    action.add_assigned(inst, t, k, l, idle);
                    Choice::Day(t)
                }
            };
            choices.extend((0..idle).map(|_| ReferralChoice { k, l, choice, cost: o.outside.1 }));
        }
    }
    action.route = plan.route.clone();
    action.overtime = plan.overtime;
    let objective = lookahead(state, &action, params, inst);
    Ok(PolicyDecision {
        action,
        objective,
        solve_seconds: start.elapsed().as_secs_f64(),
        choices,
        heuristic: !plan.exact,
    })
}

/// The ALP policy for a fixed parameter set.
#[derive(Debug, Clone)]
pub struct AlpPolicy {
    pub params: AlpParams,
    name: String,
}

impl AlpPolicy {
    pub fn new(params: AlpParams) -> Self {
        Self { params, name: "alp".into() }
    }

    pub fn named(params: AlpParams, name: impl Into<String>) -> Self {
        Self { params, name: name.into() }
    }
}

impl Policy for AlpPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, state: &State, inst: &ProblemInstance, _rng: &mut StreamRng) -> Result<PolicyDecision> {
        alp_action(state, &self.params, inst)
    }
}

/// How the ALP policy treats referrals of one `(k, l)` regardless of state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLabel {
    AlwaysAccept,
    Maybe,
    AlwaysReject,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AlwaysAccept => "always-accept",
            Self::Maybe => "maybe",
            Self::AlwaysReject => "always-reject",
        }
    }
}

/// Labels indexed `[k][l]`. A referral is always accepted when the cheapest
/// later day `min_{t ≤ T_k − 1} γ τ_{t,kl,0}` costs less than `R_k`, and
/// always rejected when that and the day-1 price `γ p_{k,2} τ_{h_k,kl,1}`
/// both exceed `R_k`.
pub fn classify_regions(params: &AlpParams, inst: &ProblemInstance) -> Vec<Vec<RegionLabel>> {
    let g = inst.gamma;
    (0..inst.types())
        .map(|k| {
            let s = inst.service(k);
            let r = inst.rejection_cost(k);
            (0..inst.regions())
                .map(|l| {
                    let later =
                        (1..s.wait_target).map(|t| g * params.tau_at(inst, t, k, l, 0)).fold(f64::INFINITY, f64::min);
                    let first = g * s.continuation(2) * params.tau_at(inst, s.pattern, k, l, 1);
                    if later < r {
                        RegionLabel::AlwaysAccept
                    } else if first.min(later) > r {
                        RegionLabel::AlwaysReject
                    } else {
                        RegionLabel::Maybe
                    }
                })
                .collect()
        })
        .collect()
}
