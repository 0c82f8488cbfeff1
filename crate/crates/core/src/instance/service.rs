use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the total number of visits a referral needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VisitCountDist {
    /// Exactly `visits` visits.
    Deterministic { visits: usize },
    /// Poisson restricted to `1..=max`, rate calibrated to `mean`.
    TruncatedPoisson { mean: f64, max: usize },
    /// Uniform on `1..=max`.
    Uniform { max: usize },
    /// Explicit masses; entry `i` is the probability of `i + 1` visits.
    Masses { probs: Vec<f64> },
}

impl VisitCountDist {
    /// Probability masses indexed by visit count (`masses[0] == 0`).
    pub fn masses(&self) -> Result<Vec<f64>> {
        match *self {
            Self::Deterministic { visits } => {
                if visits == 0 {
                    return Err(Error::InvalidInstance("deterministic visit count must be >= 1".into()));
                }
                let mut m = vec![0.0; visits + 1];
                m[visits] = 1.0;
                Ok(m)
            }
            Self::Uniform { max } => {
                if max == 0 {
                    return Err(Error::InvalidInstance("uniform visit count needs max >= 1".into()));
                }
                let mut m = vec![1.0 / max as f64; max + 1];
                m[0] = 0.0;
                Ok(m)
            }
            Self::TruncatedPoisson { mean, max } => {
                let rate = calibrate_poisson_rate(mean, max)?;
                Ok(truncated_poisson_masses(rate, max))
            }
            Self::Masses { ref probs } => {
                if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::InvalidInstance("visit-count masses must be nonnegative".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInstance(format!("visit-count masses sum to {total}, not 1")));
                }
                let mut m = Vec::with_capacity(probs.len() + 1);
                m.push(0.0);
                m.extend_from_slice(probs);
                while m.len() > 2 && *m.last().unwrap() == 0.0 {
                    m.pop();
                }
                Ok(m)
            }
        }
    }
}

fn truncated_poisson_masses(rate: f64, max: usize) -> Vec<f64> {
    // Log-space weights avoid overflow for large supports.
    let ln_rate = rate.ln();
    let mut logw = vec![f64::NEG_INFINITY; max + 1];
    let mut ln_fact = 0.0;
    for (j, w) in logw.iter_mut().enumerate().skip(1) {
        ln_fact += (j as f64).ln();
        *w = j as f64 * ln_rate - ln_fact;
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut m: Vec<f64> = logw.iter().map(|&w| (w - top).exp()).collect();
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= total);
    m
}

fn mean_of(masses: &[f64]) -> f64 {
    masses.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
}

/// Finds the Poisson rate whose restriction to `1..=max` has the given mean.
pub fn calibrate_poisson_rate(mean: f64, max: usize) -> Result<f64> {
    if max < 2 || !(mean > 1.0 && mean < max as f64) {
        return Err(Error::InvalidInstance(format!(
            "truncated Poisson mean {mean} is not achievable on support 1..={max}"
        )));
    }
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while mean_of(&truncated_poisson_masses(hi, max)) < mean {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidInstance(format!("cannot calibrate truncated Poisson mean {mean}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_of(&truncated_poisson_masses(mid, max)) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Continuation probabilities `p_1..p_J` from masses indexed by visit count:
/// `p_j = P(Ĵ >= j) / P(Ĵ >= j - 1)`, so `p_1 = 1`.
pub fn continuation_probabilities(masses: &[f64]) -> Vec<f64> {
    let max = masses.len() - 1;
    let mut survival = vec![0.0; max + 2];
    for j in (0..=max).rev() {
        survival[j] = survival[j + 1] + masses[j];
    }
    (1..=max)
        .map(|j| if survival[j - 1] > 0.0 { (survival[j] / survival[j - 1]).min(1.0) } else { 0.0 })
        .collect()
}

/// A class of patients sharing care pattern, service time, wait target and
/// visit-count distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceType {
    /// Days between consecutive visits (`h_k`).
    pub pattern: usize,
    /// Hours per visit (`e_k`).
    pub service_time: f64,
    /// Latest day for the first visit of an accepted referral (`T_k`).
    pub wait_target: usize,
    pub dist: VisitCountDist,
    masses: Vec<f64>,
    cont: Vec<f64>,
}

impl ServiceType {
    pub fn new(pattern: usize, service_time: f64, wait_target: usize, dist: VisitCountDist) -> Result<Self> {
        if !(1..=7).contains(&pattern) {
            return Err(Error::InvalidInstance(format!("care pattern {pattern} outside 1..=7")));
        }
        if wait_target == 0 {
            return Err(Error::InvalidInstance("wait-time target must be >= 1".into()));
        }
        if !(service_time > 0.0 && service_time.is_finite()) {
            return Err(Error::InvalidInstance(format!("service time must be positive, got {service_time}")));
        }
        let masses = dist.masses()?;
        let cont = continuation_probabilities(&masses);
        Ok(Self { pattern, service_time, wait_target, dist, masses, cont })
    }

    /// Largest possible number of visits `J_k`.
    pub fn max_visits(&self) -> usize {
        self.masses.len() - 1
    }

    /// `p_{k,j}` for any `j >= 1`; zero beyond `J_k`.
    pub fn continuation(&self, j: usize) -> f64 {
        debug_assert!(j >= 1);
        self.cont.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn continuation_probs(&self) -> &[f64] {
        &self.cont
    }

    /// `P(Ĵ = j)`.
    pub fn mass(&self, j: usize) -> f64 {
        self.masses.get(j).copied().unwrap_or(0.0)
    }

    pub fn expected_visits(&self) -> f64 {
        mean_of(&self.masses)
    }

    /// Nearest integer to the expected visit count (`J̄_k`).
    pub fn rounded_mean(&self) -> usize {
        (self.expected_visits().round() as usize).max(1)
    }

    /// Draws a total visit count.
    pub fn sample_visits<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, p) in self.masses.iter().enumerate().skip(1) {
            acc += p;
            if u < acc {
                return j;
            }
        }
        self.max_visits()
    }

    /// Draws a total visit count conditioned on it being at least `at_least`.
    pub fn sample_visits_at_least<R: Rng + ?Sized>(&self, rng: &mut R, at_least: usize) -> usize {
        let tail: f64 = self.masses.iter().skip(at_least).sum();
        if tail <= 0.0 {
            return at_least.min(self.max_visits()).max(1);
        }
        let u: f64 = rng.random::<f64>() * tail;
        let mut acc = 0.0;
        for j in at_least..=self.max_visits() {
            acc += self.masses[j];
            if u < acc {
                return j;
            }
        }
        self.max_visits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_continuations() {
        let s = ServiceType::new(1, 0.5, 1, VisitCountDist::Deterministic { visits: 4 }).unwrap();
        assert_eq!(s.continuation_probs(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.continuation(5), 0.0);
    }

    #[test]
    fn uniform_continuations() {
        let p = continuation_probabilities(&VisitCountDist::Uniform { max: 3 }.masses().unwrap());
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn truncated_poisson_hits_mean() {
        let m = VisitCountDist::TruncatedPoisson { mean: 8.0, max: 24 }.masses().unwrap();
        let mean: f64 = m.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        assert!((mean - 8.0).abs() < 1e-6);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_means_rejected() {
        assert!(VisitCountDist::TruncatedPoisson { mean: 0.9, max: 8 }.masses().is_err());
        assert!(VisitCountDist::TruncatedPoisson { mean: 8.0, max: 8 }.masses().is_err());
    }

    proptest! {
        #[test]
        fn continuations_reconstruct_masses(raw in proptest::collection::vec(0.0f64..1.0, 1..12)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-3 && raw[raw.len() - 1] > 1e-6);
            let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let masses = VisitCountDist::Masses { probs: probs.clone() }.masses().unwrap();
            let p = continuation_probabilities(&masses);
            prop_assert_eq!(p[0], 1.0);
            let mut surv = 1.0;
            for j in 1..=p.len() {
                surv *= p[j - 1];
                let next = p.get(j).copied().unwrap_or(0.0);
                let rebuilt = surv * (1.0 - next);
                prop_assert!((rebuilt - probs[j - 1]).abs() < 1e-9);
            }
        }
    }
}
