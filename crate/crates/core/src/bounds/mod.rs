//! Perfect-information lower bounds and optimality-gap estimates.
//!
//! Discounting is replaced by absorption: a sample path reveals an
//! absorption day `T̄ ~ Geometric(1 − γ)` together with every referral up to
//! it and each referral's exact number of visits. The cheapest undiscounted
//! cost of the days before `T̄` on that path, minimised with full knowledge,
//! is a lower bound whose expectation does not exceed the optimal value.
//! Replaying a policy on the same path gives an upper bound pathwise.

mod dp;
mod gap;

pub use dp::{perfect_info_value, DayCoster, DEFAULT_LAYER_CAP};
pub use gap::{estimate_gap, replay_policy, BoundConfig, GapReport, GapSample};

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::{poisson, State};
use crate::rng::stream;

/// A referral with its realised total number of visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathReferral {
    pub k: usize,
    pub l: usize,
    pub visits: usize,
}

/// An admitted patient in the patient-level model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Patient {
    pub k: usize,
    pub l: usize,
    /// Day of the next visit, one-based.
    pub t: usize,
    /// Visits completed.
    pub done: usize,
    /// Total visits.
    pub total: usize,
}

impl Patient {
    pub fn remaining(&self) -> usize {
        self.total - self.done
    }
}

/// Future randomness of one perfect-information sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    /// Everything below is a function of this seed and the instance.
    pub seed: u64,
    /// `T̄ ≥ 1`: costs are incurred on days `0..T̄`.
    pub absorption: usize,
    /// Referrals revealed on each day `0..T̄`. Day 0 is empty; its referrals
    /// belong to the initial state.
    pub arrivals: Vec<Vec<PathReferral>>,
}

/// Draws a path: a fresh seed from `rng`, then absorption, arrivals (capped
/// at `y^max` per day and class) and visit counts from streams of that seed.
pub fn sample_path<R: Rng + ?Sized>(inst: &ProblemInstance, rng: &mut R) -> Result<SamplePath> {
    SamplePath::from_seed(inst, rng.random())
}

impl SamplePath {
    pub fn from_seed(inst: &ProblemInstance, seed: u64) -> Result<Self> {
        if !(inst.gamma < 1.0) {
            return Err(Error::Precondition("perfect-information paths need γ < 1".into()));
        }
        let geo = Geometric::new(1.0 - inst.gamma).map_err(|e| Error::Precondition(e.to_string()))?;
        let extra = geo.sample(&mut stream(seed, &[0]));
        let absorption = usize::try_from(extra).ok().and_then(|e| e.checked_add(1)).ok_or_else(|| {
            Error::Precondition("absorption time overflows".into())
        })?;
        let mut arrivals = vec![Vec::new()];
        for day in 1..absorption {
            let mut rng = stream(seed, &[1, day as u64]);
            let mut today = Vec::new();
            for k in 0..inst.types() {
                for l in 0..inst.regions() {
                    let n = poisson(&mut rng, inst.rate(k, l)).min(inst.y_cap(l));
                    for _ in 0..n {
                        today.push(PathReferral { k, l, visits: inst.service(k).sample_visits(&mut rng) });
                    }
                }
            }
            arrivals.push(today);
        }
        Ok(Self { seed, absorption, arrivals })
    }

    /// The same path ending after `days` days.
    pub fn truncated(&self, days: usize) -> Self {
        let absorption = days.clamp(1, self.absorption);
        Self { seed: self.seed, absorption, arrivals: self.arrivals[..absorption].to_vec() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("paths serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.absorption == 0 || p.arrivals.len() != p.absorption {
            return Err(Error::Precondition("path needs T̄ ≥ 1 and one arrival list per day".into()));
        }
        Ok(p)
    }
}

/// An initial state with realised visit counts for its patients and
/// pending referrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedState {
    pub patients: Vec<Patient>,
    pub referrals: Vec<PathReferral>,
}

impl RealizedState {
    /// A patient with `j` visits done who is booked again needs at least
    /// `j + 1` visits; totals are drawn conditionally on that.
    pub fn sample<R: Rng + ?Sized>(state: &State, inst: &ProblemInstance, rng: &mut R) -> Self {
        let lay = inst.layout();
        let mut patients = Vec::new();
        for (idx, c) in lay.free_coords() {
            for _ in 0..state.x[idx] {
                let total = inst.service(c.k).sample_visits_at_least(rng, c.j + 1);
                patients.push(Patient { k: c.k, l: c.l, t: c.t, done: c.j, total });
            }
        }
        let mut referrals = Vec::new();
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                for _ in 0..state.y_at(lay, k, l) {
                    referrals.push(PathReferral { k, l, visits: inst.service(k).sample_visits(rng) });
                }
            }
        }
        Self { patients, referrals }
    }

    /// The MDP state of these patients and referrals, without caps.
    pub fn state(&self, inst: &ProblemInstance) -> State {
        state_of(&self.patients, &self.referrals, inst)
    }
}

pub(crate) fn state_of(patients: &[Patient], referrals: &[PathReferral], inst: &ProblemInstance) -> State {
    let lay = inst.layout();
    let mut s = State::empty(inst);
    for p in patients {
        s.x[lay.x_index(p.t, p.k, p.l, p.done)] += 1;
    }
    for r in referrals {
        s.y[lay.y_index(r.k, r.l)] += 1;
    }
    s
}

/// Advances patients by one day: those visited today complete a visit and
/// return after `h_k` days unless finished, everyone else moves one day
/// closer.
pub(crate) fn advance(patients: &[Patient], inst: &ProblemInstance) -> Vec<Patient> {
    patients
        .iter()
        .filter_map(|p| {
            if p.t == 1 {
                let done = p.done + 1;
                (done < p.total).then_some(Patient { t: inst.service(p.k).pattern, done, ..*p })
            } else {
                Some(Patient { t: p.t - 1, ..*p })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};
    use crate::sim::{mean, sample_sd};

    pub(crate) fn inst(gamma: f64, rate: f64, dist: VisitCountDist) -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular(1, 2, 0.5).unwrap(),
            services: vec![ServiceType::new(1, 1.0, 1, dist).unwrap()],
            arrival_rates: vec![vec![rate, rate]],
            shift: 3.0,
            overtime_cap: 0.0,
            weights: CostWeights::default(),
            gamma,
            x_cap: 30,
            y_cap: 30,
        })
        .unwrap()
    }

    #[test]
    fn absorption_has_the_geometric_mean() {
        let i = inst(0.99, 0.0, VisitCountDist::Deterministic { visits: 2 });
        let draws: Vec<f64> = (0..10_000).map(|s| SamplePath::from_seed(&i, s).unwrap().absorption as f64).collect();
        let se = sample_sd(&draws) / (draws.len() as f64).sqrt();
        assert!((mean(&draws) - 100.0).abs() < 3.0 * se, "{} (se {se})", mean(&draws));
        assert!(draws.iter().all(|&t| t >= 1.0));
    }

    #[test]
    fn no_rate_means_no_arrivals() {
        let i = inst(0.9, 0.0, VisitCountDist::Deterministic { visits: 2 });
        let p = SamplePath::from_seed(&i, 4).unwrap();
        assert!(p.arrivals.iter().all(Vec::is_empty));
    }

    #[test]
    fn deterministic_counts_carry_the_mean() {
        let i = inst(0.95, 2.0, VisitCountDist::Deterministic { visits: 3 });
        let p = SamplePath::from_seed(&i, 8).unwrap();
        assert!(p.arrivals.iter().flatten().all(|r| r.visits == 3));
    }

    #[test]
    fn counts_stay_in_range_and_paths_round_trip() {
        let i = inst(0.95, 2.0, VisitCountDist::Uniform { max: 5 });
        let p = SamplePath::from_seed(&i, 11).unwrap();
        assert!(p.arrivals.iter().flatten().all(|r| (1..=5).contains(&r.visits)));
        assert_eq!(SamplePath::from_json(&p.to_json()).unwrap(), p);
        assert_eq!(SamplePath::from_seed(&i, 11).unwrap(), p);
    }

    #[test]
    fn realised_state_round_trips_to_counts() {
        let i = inst(0.95, 1.0, VisitCountDist::Uniform { max: 4 });
        let lay = i.layout();
        let mut s = State::empty(&i);
        s.set_x(lay, 1, 0, 1, 2, 3);
        s.set_y(lay, 0, 0, 2);
        let r = RealizedState::sample(&s, &i, &mut stream(1, &[]));
        assert_eq!(r.state(&i), s);
        assert!(r.patients.iter().all(|p| p.total >= 3));
    }
}
