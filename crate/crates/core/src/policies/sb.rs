//! The scenario-based (SB) benchmark.
//!
//! Each scenario adds sampled future referrals to today's, then places all
//! of them greedily on one calendar, cheapest best choice first. A new
//! referral is accepted if enough scenarios accepted it and goes to the day
//! most scenarios chose.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calendar::Calendar;
use super::myopic::{assemble, best_choice, myopic_horizon, sorted_referrals, Referral};
use super::{Choice, Policy, PolicyDecision, ReferralChoice};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::mdp::{poisson, State};
use crate::rng::{stream, StreamRng};
use crate::sim::{average_value, initial_states, SimConfig};

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbConfig {
    /// Scenarios per decision `N_sc`.
    pub scenarios: usize,
    /// Minimum number of accepting scenarios `N_tr`.
    pub threshold: usize,
    /// Lookahead `T'`; `None` uses `max(max h_k, max T_k, 5)`.
    pub lookahead: Option<usize>,
}

impl Default for SbConfig {
    fn default() -> Self {
        Self { scenarios: 100, threshold: 50, lookahead: None }
    }
}

impl SbConfig {
    pub fn with_threshold(threshold: usize) -> Self {
        Self { threshold, ..Self::default() }
    }

    pub fn lookahead_days(&self, inst: &ProblemInstance) -> usize {
        self.lookahead.unwrap_or_else(|| {
            let h = inst.services.iter().map(|s| s.pattern).max().unwrap_or(1);
            h.max(inst.horizon()).max(5)
        })
    }

    /// Calendar length `T' + max_k (T_k + h_k (J̄_k − 1))`.
    pub fn planning_horizon(&self, inst: &ProblemInstance) -> usize {
        self.lookahead_days(inst) + myopic_horizon(inst)
    }
}

/// Choices of one scenario for today's referrals, and the total cost.
fn run_scenario(
    state: &State,
    inst: &ProblemInstance,
    today: &[Referral],
    future: &[Referral],
    horizon: usize,
) -> (Vec<(Choice, f64)>, f64) {
    let mut cal = Calendar::from_state(inst, state, horizon);
    let all: Vec<Referral> = today.iter().chain(future).copied().collect();
    let deps: Vec<Vec<usize>> = all
        .iter()
        .map(|r| {
            let mut days: Vec<usize> = (1..=inst.service(r.k).wait_target)
                .map(|t| r.arrival + t - 1)
                .filter(|&d| d <= horizon)
                .flat_map(|d| cal.visit_days(inst, r.k, d).collect::<Vec<_>>())
                .collect();
            days.sort_unstable();
            days.dedup();
            days
        })
        .collect();
    // Cached best choice per referral and the commit count it was computed at.
    let mut cache: Vec<Option<((Choice, f64), usize)>> = vec![None; all.len()];
    let mut stamp = vec![0usize; horizon + 1];
    let mut commits = 1usize;
    let mut remaining: Vec<usize> = (0..all.len()).collect();
    let mut out = vec![(Choice::Reject, 0.0); today.len()];
    let mut total = 0.0;
    while !remaining.is_empty() {
        let mut pick: Option<(usize, usize, (Choice, f64))> = None;
        for (pos, &i) in remaining.iter().enumerate() {
            let fresh = match cache[i] {
                Some((_, at)) => deps[i].iter().all(|&d| stamp[d] < at),
                None => false,
            };
            if !fresh {
                cache[i] = Some((best_choice(&cal, inst, &all[i]), commits));
            }
            let c = cache[i].expect("just filled").0;
            if pick.is_none_or(|p| c.1 < p.2 .1 - TIE) {
                pick = Some((pos, i, c));
            }
        }
        let (pos, i, (choice, cost)) = pick.expect("nonempty");
        remaining.remove(pos);
        total += cost;
        if let Choice::Day(first) = choice {
            let r = all[i];
            let days: Vec<usize> = cal.visit_days(inst, r.k, first).collect();
            for d in days {
                let p = cal.place(inst, d, r.k, r.l);
                cal.commit(inst, d, r.k, r.l, p);
                stamp[d] = commits;
            }
            commits += 1;
        }
        if i < today.len() {
            out[i] = (choice, cost);
        }
    }
    (out, total)
}

/// Future referrals of one scenario on days `2..=lookahead + 1`, at most
/// `y^max` per `(k, l)` and day.
fn sample_future(inst: &ProblemInstance, lookahead: usize, rng: &mut StreamRng) -> Vec<Referral> {
    let mut out = Vec::new();
    for arrival in 2..=lookahead + 1 {
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                let n = poisson(rng, inst.rate(k, l)).min(inst.y_cap(l));
                out.extend((0..n).map(|_| Referral { k, l, arrival }));
            }
        }
    }
    out
}

/// The SB action. Scenario `i` uses stream `(seed, i)` for a seed drawn
/// from `rng`, so results do not depend on thread scheduling. The modal day
/// breaks ties toward the earliest day; a referral accepted by no scenario
/// but kept by a zero threshold goes to day 1.
pub fn sb_action(state: &State, inst: &ProblemInstance, cfg: &SbConfig, rng: &mut StreamRng) -> PolicyDecision {
    let start = Instant::now();
    let seed: u64 = rng.random();
    let today = sorted_referrals(state, inst);
    let lookahead = cfg.lookahead_days(inst);
    let horizon = cfg.planning_horizon(inst);
    let results: Vec<(Vec<(Choice, f64)>, f64)> = (0..cfg.scenarios)
        .into_par_iter()
        .map(|sc| {
            let future = sample_future(inst, lookahead, &mut stream(seed, &[sc as u64]));
            run_scenario(state, inst, &today, &future, horizon)
        })
        .collect();
    let mut choices = Vec::with_capacity(today.len());
    for (i, r) in today.iter().enumerate() {
        let wait = inst.service(r.k).wait_target;
        let mut counts = vec![0usize; wait + 1];
        let mut cost = 0.0;
        for (res, _) in &results {
            if let Choice::Day(d) = res[i].0 {
                counts[d] += 1;
            }
            cost += res[i].1;
        }
        let accepted: usize = counts.iter().sum();
        let choice = if accepted < cfg.threshold {
            Choice::Reject
        } else {
            let mut day = 1;
            for d in 2..=wait {
                if counts[d] > counts[day] {
                    day = d;
                }
            }
            Choice::Day(day)
        };
        choices.push(ReferralChoice { k: r.k, l: r.l, choice, cost: cost / cfg.scenarios.max(1) as f64 });
    }
    let (action, heuristic) = assemble(state, inst, &choices);
    let objective = results.iter().map(|r| r.1).sum::<f64>() / cfg.scenarios.max(1) as f64;
    PolicyDecision { action, objective, solve_seconds: start.elapsed().as_secs_f64(), choices, heuristic }
}

#[derive(Debug, Clone)]
pub struct SbPolicy {
    pub config: SbConfig,
}

impl SbPolicy {
    pub fn new(config: SbConfig) -> Self {
        Self { config }
    }
}

impl Policy for SbPolicy {
    fn name(&self) -> &str {
        "sb"
    }

    fn decide(&self, state: &State, inst: &ProblemInstance, rng: &mut StreamRng) -> Result<PolicyDecision> {
        Ok(sb_action(state, inst, &self.config, rng))
    }
}

/// Result of a threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbTuning {
    pub threshold: usize,
    /// `(N_tr, mean discounted value)` per candidate.
    pub values: Vec<(usize, f64)>,
    pub simulations: usize,
}

/// Picks the threshold with the lowest mean simulated value over the
/// study's initial states (common random numbers across candidates). Ties go
/// to the smaller threshold.
pub fn tune_sb_threshold(inst: &ProblemInstance, base: &SbConfig, candidates: &[usize], sim: &SimConfig) -> Result<SbTuning> {
    sim.validate()?;
    let mut cands = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    let states = initial_states(inst, sim)?;
    let crn = SimConfig { common_random_numbers: true, ..*sim };
    let mut values = Vec::with_capacity(cands.len());
    let mut simulations = 0;
    for &n in &cands {
        let policy = SbPolicy::new(SbConfig { threshold: n, ..*base });
        let (v, runs) = average_value(inst, &policy, &states, &crn)?;
        simulations += runs.len();
        values.push((n, v));
    }
    let mut best = *values.first().ok_or_else(|| crate::error::Error::Precondition("no candidates".into()))?;
    for &(n, v) in &values[1..] {
        if v < best.1 {
            best = (n, v);
        }
    }
    Ok(SbTuning { threshold: best.0, values, simulations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};
    use crate::mdp::check_action;
    use rand::SeedableRng;

    fn inst(rate: f64) -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular(1, 3, 0.6).unwrap(),
            services: vec![ServiceType::new(2, 0.5, 3, VisitCountDist::Deterministic { visits: 3 }).unwrap()],
            arrival_rates: vec![vec![rate; 3]],
            shift: 2.0,
            overtime_cap: 0.5,
            weights: CostWeights::default(),
            gamma: 0.95,
            x_cap: 6,
            y_cap: 6,
        })
        .unwrap()
    }

    fn busy_state(inst: &ProblemInstance) -> State {
        let lay = inst.layout();
        let mut s = State::empty(inst);
        s.set_x(lay, 1, 0, 0, 0, 2);
        s.set_x(lay, 2, 0, 2, 1, 1);
        s.set_y(lay, 0, 0, 2);
        s.set_y(lay, 0, 1, 1);
        s.set_y(lay, 0, 2, 3);
        s
    }

    fn small(threshold: usize) -> SbConfig {
        SbConfig { scenarios: 8, threshold, lookahead: None }
    }

    #[test]
    fn zero_threshold_accepts_everything() {
        let inst = inst(1.0);
        let s = busy_state(&inst);
        let d = sb_action(&s, &inst, &small(0), &mut StreamRng::seed_from_u64(1));
        assert!(d.choices.iter().all(|c| c.choice != Choice::Reject));
        assert!(check_action(&s, &d.action, &inst).is_empty());
    }

    #[test]
    fn unreachable_threshold_rejects_everything() {
        let inst = inst(1.0);
        let s = busy_state(&inst);
        let d = sb_action(&s, &inst, &small(9), &mut StreamRng::seed_from_u64(1));
        assert!(d.choices.iter().all(|c| c.choice == Choice::Reject));
        assert_eq!(d.action.rejections(), 6);
    }

    /// Greedy placement without caching: recompute every best choice.
    fn plain_greedy(state: &State, inst: &ProblemInstance, horizon: usize) -> Vec<Choice> {
        let today = sorted_referrals(state, inst);
        let mut cal = Calendar::from_state(inst, state, horizon);
        let mut left: Vec<usize> = (0..today.len()).collect();
        let mut out = vec![Choice::Reject; today.len()];
        while !left.is_empty() {
            let scored: Vec<(usize, (Choice, f64))> = left.iter().map(|&i| (i, best_choice(&cal, inst, &today[i]))).collect();
            let mut best = scored[0];
            for s in &scored[1..] {
                if s.1 .1 < best.1 .1 - TIE {
                    best = *s;
                }
            }
            let (i, (c, _)) = best;
            if let Choice::Day(d) = c {
                cal.commit_patient(inst, today[i].k, today[i].l, d);
            }
            out[i] = c;
            left.retain(|&j| j != i);
        }
        out
    }

    #[test]
    fn no_future_arrivals_means_identical_scenarios() {
        let inst = inst(0.0);
        let s = busy_state(&inst);
        let cfg = small(1);
        let d = sb_action(&s, &inst, &cfg, &mut StreamRng::seed_from_u64(5));
        let expected = plain_greedy(&s, &inst, cfg.planning_horizon(&inst));
        let got: Vec<Choice> = d.choices.iter().map(|c| c.choice).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn cache_agrees_with_recomputation_under_arrivals() {
        let inst = inst(0.8);
        let s = busy_state(&inst);
        let cfg = small(1);
        let horizon = cfg.planning_horizon(&inst);
        let mut rng = StreamRng::seed_from_u64(2);
        for _ in 0..5 {
            let future = sample_future(&inst, cfg.lookahead_days(&inst), &mut rng);
            let today = sorted_referrals(&s, &inst);
            let (fast, total) = run_scenario(&s, &inst, &today, &future, horizon);
            // Replay without the cache over the same referral list.
            let all: Vec<Referral> = today.iter().chain(&future).copied().collect();
            let mut cal = Calendar::from_state(&inst, &s, horizon);
            let mut left: Vec<usize> = (0..all.len()).collect();
            let mut slow_total = 0.0;
            let mut slow = vec![Choice::Reject; today.len()];
            while !left.is_empty() {
                let mut best: Option<(usize, (Choice, f64))> = None;
                for &i in &left {
                    let c = best_choice(&cal, &inst, &all[i]);
                    if best.is_none_or(|b| c.1 < b.1 .1 - TIE) {
                        best = Some((i, c));
                    }
                }
                let (i, (c, v)) = best.unwrap();
                slow_total += v;
                if let Choice::Day(d) = c {
                    cal.commit_patient(&inst, all[i].k, all[i].l, d);
                }
                if i < today.len() {
                    slow[i] = c;
                }
                left.retain(|&j| j != i);
            }
            assert_eq!(fast.iter().map(|f| f.0).collect::<Vec<_>>(), slow);
            assert!((total - slow_total).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_ties_go_to_the_smaller_value() {
        // No arrivals: every threshold simulates an empty system.
        let inst = inst(0.0);
        let sim = SimConfig { initial_states: 2, warmup_days: 2, eval_days: 3, seed: 1, common_random_numbers: true };
        let t = tune_sb_threshold(&inst, &small(0), &[30, 10, 20], &sim).unwrap();
        assert_eq!(t.threshold, 10);
        assert_eq!(t.simulations, 6);
    }
}
