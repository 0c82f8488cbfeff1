//! Policy replay on sample paths and the resulting gap estimate.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dp::{perfect_info_value_with, DayCoster, DEFAULT_LAYER_CAP};
use super::{advance, state_of, Patient, PathReferral, RealizedState, SamplePath};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::{action_cost, check_action, State, Violation};
use crate::policies::Policy;
use crate::rng::{derive, stream};
use crate::sim::{mean, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub paths: usize,
    pub layer_cap: usize,
    pub seed: u64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { paths: 100, layer_cap: DEFAULT_LAYER_CAP, seed: 0 }
    }
}

impl BoundConfig {
    /// Seed of path `p` of initial state `n`.
    pub fn path_seed(&self, n: usize, p: usize) -> u64 {
        derive(self.seed, &[2, n as u64, p as u64])
    }
}

/// Undiscounted cost of `policy` over days `0..T̄` of `path` from `start`.
///
/// The policy sees only counts. Within a type and region, referrals are
/// assigned in path order to the earliest assigned days and the rest are
/// rejected, which does not depend on the unseen visit counts. Caps are not
/// enforced on the states shown to the policy.
pub fn replay_policy(policy: &dyn Policy, start: &RealizedState, path: &SamplePath, inst: &ProblemInstance) -> Result<f64> {
    let lc = inst.regions();
    let mut patients = start.patients.clone();
    let mut total = 0.0;
    for day in 0..path.absorption {
        let referrals: &[PathReferral] = if day == 0 { &start.referrals } else { &path.arrivals[day] };
        let state = state_of(&patients, referrals, inst);
        let fail = |e: Error| Error::PolicyFailure { day, source: Box::new(e) };
        let d = policy.decide(&state, inst, &mut stream(path.seed, &[2, day as u64])).map_err(fail)?;
        let v: Vec<String> = check_action(&state, &d.action, inst)
            .iter()
            .filter(|v| !matches!(v, Violation::StateCap { .. }))
            .map(ToString::to_string)
            .collect();
        if !v.is_empty() {
            return Err(fail(Error::InfeasibleAction(v.join("; "))));
        }
        total += action_cost(&d.action, inst);
        for k in 0..inst.types() {
            for l in 0..lc {
                let mut mine = referrals.iter().filter(|r| r.k == k && r.l == l);
                for t in 1..=inst.service(k).wait_target {
                    for r in mine.by_ref().take(d.action.assigned(inst, t, k, l) as usize) {
                        patients.push(Patient { k, l, t, done: 0, total: r.visits });
                    }
                }
            }
        }
        patients = advance(&patients, inst);
    }
    Ok(total)
}

/// Bounds on one `(state, path)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub state: usize,
    pub path: usize,
    pub absorption: usize,
    pub lower: f64,
    pub upper: f64,
    /// `100 (upper − lower) / upper`, zero when both are zero.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub policy: String,
    pub config: BoundConfig,
    pub samples: Vec<GapSample>,
    pub gap_mean: f64,
    pub gap_sd: f64,
    pub lower_mean: f64,
    pub upper_mean: f64,
    /// Pairs with `lower > upper + 1e-6 · max(1, upper)`.
    pub violations: usize,
}

impl GapReport {
    /// Mean lower bound per initial state.
    pub fn lower_by_state(&self) -> Vec<f64> {
        let states = self.samples.iter().map(|s| s.state + 1).max().unwrap_or(0);
        (0..states)
            .map(|n| mean(&self.samples.iter().filter(|s| s.state == n).map(|s| s.lower).collect::<Vec<_>>()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,path,absorption,lower,upper,gap_pct\n");
        for s in &self.samples {
            writeln!(out, "{},{},{},{:.6},{:.6},{:.6}", s.state, s.path, s.absorption, s.lower, s.upper, s.gap)
                .expect("writing to a string");
        }
        out
    }
}

/// Lower and upper bounds for `cfg.paths` paths from each of `states`.
pub fn estimate_gap(inst: &ProblemInstance, states: &[State], policy: &dyn Policy, cfg: &BoundConfig) -> Result<GapReport> {
    if states.is_empty() || cfg.paths == 0 {
        return Err(Error::Precondition("need at least one state and one path".into()));
    }
    DayCoster::new(inst)?;
    let pairs: Vec<(usize, usize)> = (0..states.len()).flat_map(|n| (0..cfg.paths).map(move |p| (n, p))).collect();
    let samples: Vec<GapSample> = pairs
        .par_iter()
        .map_init(
            || DayCoster::new(inst).expect("checked above"),
            |coster, &(n, p)| {
                let seed = cfg.path_seed(n, p);
                let path = SamplePath::from_seed(inst, seed)?;
                let start = RealizedState::sample(&states[n], inst, &mut stream(seed, &[3]));
                let lower = perfect_info_value_with(&start, &path, inst, cfg.layer_cap, coster)?;
                let upper = replay_policy(policy, &start, &path, inst)?;
                let gap = if upper == 0.0 { 0.0 } else { 100.0 * (upper - lower) / upper };
                Ok(GapSample { state: n, path: p, absorption: path.absorption, lower, upper, gap })
            },
        )
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = samples.iter().map(|s| s.gap).collect();
    let violations = samples.iter().filter(|s| s.lower > s.upper + 1e-6 * s.upper.max(1.0)).count();
    Ok(GapReport {
        policy: policy.name().to_string(),
        config: *cfg,
        gap_mean: mean(&gaps),
        gap_sd: sample_sd(&gaps),
        lower_mean: mean(&samples.iter().map(|s| s.lower).collect::<Vec<_>>()),
        upper_mean: mean(&samples.iter().map(|s| s.upper).collect::<Vec<_>>()),
        violations,
        samples,
    })
}
