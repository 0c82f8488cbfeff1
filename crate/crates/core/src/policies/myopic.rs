//! The Myopic benchmark: referrals are placed one at a time on the day with
//! the lowest discounted incremental cost over a multi-day calendar.

use std::time::Instant;

use super::calendar::{finish_day_one, Calendar};
use super::{Choice, Policy, PolicyDecision, ReferralChoice};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::mdp::{ActionPlan, State};
use crate::rng::StreamRng;

const TIE: f64 = 1e-12;

/// Calendar length `max_k (T_k + h_k (J̄_k − 1))`.
pub fn myopic_horizon(inst: &ProblemInstance) -> usize {
    inst.services.iter().map(|s| s.wait_target + s.pattern * (s.rounded_mean() - 1)).max().unwrap_or(1)
}

/// A referral of type `k` from region `l` that appears on day `arrival`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Referral {
    pub k: usize,
    pub l: usize,
    pub arrival: usize,
}

/// Cheapest of rejection and every admissible first-visit day. Costs are
/// discounted to day 1. Ties keep the earlier option, rejection first.
pub(crate) fn best_choice(cal: &Calendar, inst: &ProblemInstance, r: &Referral) -> (Choice, f64) {
    let disc = inst.gamma.powi(r.arrival as i32 - 1);
    let mut best = (Choice::Reject, disc * inst.rejection_cost(r.k));
    for t in 1..=inst.service(r.k).wait_target {
        let first = r.arrival + t - 1;
        if first > cal.horizon() {
            break;
        }
        let v = cal.patient_cost(inst, r.k, r.l, first);
        if v < best.1 - TIE {
            best = (Choice::Day(first), v);
        }
    }
    best
}

/// Today's referrals by nondecreasing depot distance, ties by `y` index.
pub(crate) fn sorted_referrals(state: &State, inst: &ProblemInstance) -> Vec<Referral> {
    let lay = inst.layout();
    let mut out = Vec::new();
    for k in 0..inst.types() {
        for l in 0..inst.regions() {
            out.extend((0..state.y_at(lay, k, l)).map(|_| Referral { k, l, arrival: 1 }));
        }
    }
    out.sort_by(|a, b| {
        let (da, db) = (inst.geometry.depot_distance(a.l), inst.geometry.depot_distance(b.l));
        da.total_cmp(&db).then(lay.y_index(a.k, a.l).cmp(&lay.y_index(b.k, b.l)))
    });
    out
}

/// Builds the action from per-referral choices: day-1 work is routed on a
/// shortest tour with farthest-first diversion if it does not fit.
pub(crate) fn assemble(
    state: &State,
    inst: &ProblemInstance,
    choices: &[ReferralChoice],
) -> (ActionPlan, bool) {
    let lay = inst.layout();
    let mut action = ActionPlan::empty(inst);
    for c in choices {
        match c.choice {
            Choice::Reject => action.reject[lay.y_index(c.k, c.l)] += 1,
            Choice::Day(t) => action.add_assigned(inst, t, c.k, c.l, 1),
        }
    }
    let mut load = vec![0u32; lay.y_len()];
    for k in 0..inst.types() {
        for l in 0..inst.regions() {
            load[lay.y_index(k, l)] = state.day_one_booked(lay, k, l) + action.assigned(inst, 1, k, l);
        }
    }
    let fin = finish_day_one(inst, &load);
    fin.apply(&mut action);
    (action, fin.heuristic)
}

/// The Myopic action for `state`. The objective is the sum of the chosen
/// incremental costs.
pub fn myopic_action(state: &State, inst: &ProblemInstance) -> PolicyDecision {
    let start = Instant::now();
    let mut cal = Calendar::from_state(inst, state, myopic_horizon(inst));
    let mut choices = Vec::new();
    for r in sorted_referrals(state, inst) {
        let (choice, cost) = best_choice(&cal, inst, &r);
        if let Choice::Day(first) = choice {
            cal.commit_patient(inst, r.k, r.l, first);
        }
        choices.push(ReferralChoice { k: r.k, l: r.l, choice, cost });
    }
    let (action, heuristic) = assemble(state, inst, &choices);
    PolicyDecision {
        action,
        objective: choices.iter().map(|c| c.cost).sum(),
        solve_seconds: start.elapsed().as_secs_f64(),
        choices,
        heuristic: heuristic || cal.heuristic,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MyopicPolicy;

impl Policy for MyopicPolicy {
    fn name(&self) -> &str {
        "myopic"
    }

    fn decide(&self, state: &State, inst: &ProblemInstance, _rng: &mut StreamRng) -> Result<PolicyDecision> {
        Ok(myopic_action(state, inst))
    }
}
