//! Problem instances: geometry, service types, arrival rates, costs.

mod document;
mod geometry;
mod service;

pub use document::{
    load_instance, ArrivalsDoc, CapsDoc, DistDoc, GeometryDoc, InstanceDoc, ServiceDoc, ShiftDoc, WeightsDoc,
};
pub use geometry::{Geometry, Shape, MAX_REGIONS};
pub use service::{calibrate_poisson_rate, continuation_probabilities, ServiceType, VisitCountDist};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Layout;

/// Default per-component state caps.
pub const DEFAULT_CAP: u32 = 30;

/// Cost weights `(ζ^r, ζ^z, ζ^u, ζ^q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub rejection: f64,
    pub diversion: f64,
    pub overtime: f64,
    pub travel: f64,
}

impl CostWeights {
    pub fn new(rejection: f64, diversion: f64, overtime: f64, travel: f64) -> Self {
        Self { rejection, diversion, overtime, travel }
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self::new(5.0, 10.0, 2.0, 0.1)
    }
}

/// Everything needed to assemble a [`ProblemInstance`].
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub geometry: Geometry,
    pub services: Vec<ServiceType>,
    /// `λ[k][l]`, referrals per day.
    pub arrival_rates: Vec<Vec<f64>>,
    pub shift: f64,
    pub overtime_cap: f64,
    pub weights: CostWeights,
    pub gamma: f64,
    pub x_cap: u32,
    pub y_cap: u32,
}

/// A validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub geometry: Geometry,
    pub services: Vec<ServiceType>,
    rates: Vec<f64>,
    pub shift: f64,
    pub overtime_cap: f64,
    pub weights: CostWeights,
    pub gamma: f64,
    x_caps: Vec<u32>,
    y_caps: Vec<u32>,
    layout: Layout,
}

impl ProblemInstance {
    pub fn new(spec: InstanceSpec) -> Result<Self> {
        let regions = spec.geometry.region_count();
        let caps = |c: u32| vec![c; regions];
        Self::with_region_caps(spec.clone(), caps(spec.x_cap), caps(spec.y_cap))
    }

    /// Like [`ProblemInstance::new`] but with caps given per region.
    pub fn with_region_caps(spec: InstanceSpec, x_caps: Vec<u32>, y_caps: Vec<u32>) -> Result<Self> {
        let k_count = spec.services.len();
        let regions = spec.geometry.region_count();
        if k_count == 0 {
            return Err(Error::InvalidInstance("at least one service type is required".into()));
        }
        if spec.arrival_rates.len() != k_count || spec.arrival_rates.iter().any(|r| r.len() != regions) {
            return Err(Error::InvalidInstance(format!("arrival rates must be a {k_count}×{regions} matrix")));
        }
        let rates: Vec<f64> = spec.arrival_rates.iter().flatten().copied().collect();
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidInstance("arrival rates must be finite and nonnegative".into()));
        }
        let w = spec.weights;
        if [w.rejection, w.diversion, w.overtime, w.travel].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInstance("cost weights must be finite and nonnegative".into()));
        }
        if !(spec.gamma > 0.0 && spec.gamma < 1.0) {
            return Err(Error::InvalidInstance(format!("discount factor {} outside (0, 1)", spec.gamma)));
        }
        if !(spec.shift > 0.0 && spec.shift.is_finite()) || !(spec.overtime_cap >= 0.0 && spec.overtime_cap.is_finite()) {
            return Err(Error::InvalidInstance("shift must be positive and overtime cap nonnegative".into()));
        }
        if x_caps.len() != regions || y_caps.len() != regions || x_caps.iter().chain(&y_caps).any(|&c| c == 0) {
            return Err(Error::InvalidInstance("state caps must be positive, one per region".into()));
        }
        let longest = spec.services.iter().map(|s| s.service_time).fold(0.0, f64::max);
        for l in 0..regions {
            let needed = 2.0 * spec.geometry.depot_distance(l) + longest;
            if needed > spec.shift + 1e-9 {
                return Err(Error::Unreachable { region: l, needed, shift: spec.shift });
            }
        }
        let layout = Layout::new(regions, &spec.services);
        Ok(Self {
            geometry: spec.geometry,
            services: spec.services,
            rates,
            shift: spec.shift,
            overtime_cap: spec.overtime_cap,
            weights: spec.weights,
            gamma: spec.gamma,
            x_caps,
            y_caps,
            layout,
        })
    }

    /// The spec this instance was built from (per-region caps are reported
    /// by their maximum).
    pub fn spec(&self) -> InstanceSpec {
        InstanceSpec {
            geometry: self.geometry.clone(),
            services: self.services.clone(),
            arrival_rates: self.rate_matrix(),
            shift: self.shift,
            overtime_cap: self.overtime_cap,
            weights: self.weights,
            gamma: self.gamma,
            x_cap: self.x_caps.iter().copied().max().unwrap_or(DEFAULT_CAP),
            y_cap: self.y_caps.iter().copied().max().unwrap_or(DEFAULT_CAP),
        }
    }

    pub fn types(&self) -> usize {
        self.services.len()
    }

    pub fn regions(&self) -> usize {
        self.geometry.region_count()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Planning horizon `T = max(max h_k, max T_k)`.
    pub fn horizon(&self) -> usize {
        self.layout.horizon
    }

    pub fn service(&self, k: usize) -> &ServiceType {
        &self.services[k]
    }

    /// `λ_{kl}`.
    #[inline]
    pub fn rate(&self, k: usize, l: usize) -> f64 {
        self.rates[k * self.regions() + l]
    }

    pub fn rate_matrix(&self) -> Vec<Vec<f64>> {
        self.rates.chunks(self.regions()).map(<[f64]>::to_vec).collect()
    }

    pub fn x_cap(&self, l: usize) -> u32 {
        self.x_caps[l]
    }

    pub fn y_cap(&self, l: usize) -> u32 {
        self.y_caps[l]
    }

    /// Rejection cost `R_k = ζ^r · E[Ĵ_k] · e_k`.
    pub fn rejection_cost(&self, k: usize) -> f64 {
        let s = &self.services[k];
        self.weights.rejection * s.expected_visits() * s.service_time
    }

    /// Diversion cost `Z_k = ζ^z · e_k`.
    pub fn diversion_cost(&self, k: usize) -> f64 {
        self.weights.diversion * self.services[k].service_time
    }

    /// Average daily new demand `D̄ = Σ λ_{kl} e_k J̄_k` in hours.
    pub fn daily_demand(&self) -> f64 {
        (0..self.types())
            .map(|k| {
                let s = &self.services[k];
                let total: f64 = (0..self.regions()).map(|l| self.rate(k, l)).sum();
                total * s.service_time * s.rounded_mean() as f64
            })
            .sum()
    }

    /// A copy with new arrival rates.
    pub fn with_rates(&self, rates: Vec<Vec<f64>>) -> Result<Self> {
        let mut spec = self.spec();
        spec.arrival_rates = rates;
        Self::with_region_caps(spec, self.x_caps.clone(), self.y_caps.clone())
    }

    /// A copy with all rates multiplied so that `D̄` equals `target`.
    pub fn scaled_to_demand(&self, target: f64) -> Result<Self> {
        let current = self.daily_demand();
        if current <= 0.0 {
            return Err(Error::InvalidInstance("cannot scale zero demand".into()));
        }
        let f = target / current;
        self.with_rates(self.rate_matrix().into_iter().map(|row| row.into_iter().map(|r| r * f).collect()).collect())
    }

    /// A copy with uniform caps.
    pub fn with_caps(&self, x_cap: u32, y_cap: u32) -> Result<Self> {
        Self::with_region_caps(self.spec(), vec![x_cap; self.regions()], vec![y_cap; self.regions()])
    }

    /// A copy with overridden discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut spec = self.spec();
        spec.gamma = gamma;
        Self::with_region_caps(spec, self.x_caps.clone(), self.y_caps.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_like() -> ProblemInstance {
        let geometry = Geometry::circular(3, 0.5).unwrap();
        let service = ServiceType::new(1, 0.5, 5, VisitCountDist::TruncatedPoisson { mean: 8.0, max: 24 }).unwrap();
        ProblemInstance::new(InstanceSpec {
            geometry,
            services: vec![service],
            arrival_rates: vec![vec![1.0; 24]],
            shift: 8.0,
            overtime_cap: 0.0,
            weights: CostWeights::default(),
            gamma: 0.99,
            x_cap: DEFAULT_CAP,
            y_cap: DEFAULT_CAP,
        })
        .unwrap()
        .scaled_to_demand(8.5)
        .unwrap()
    }

    #[test]
    fn derived_quantities() {
        let inst = default_like();
        assert!((inst.daily_demand() - 8.5).abs() < 1e-12);
        assert!((inst.rejection_cost(0) - 5.0 * 8.0 * 0.5).abs() < 1e-5);
        assert_eq!(inst.diversion_cost(0), 5.0);
        assert_eq!(inst.horizon(), 5);
    }

    #[test]
    fn reachability_enforced() {
        let mut spec = default_like().spec();
        spec.shift = 0.1;
        assert!(matches!(ProblemInstance::new(spec), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn negative_rates_rejected() {
        let mut spec = default_like().spec();
        spec.arrival_rates[0][3] = -1.0;
        assert!(ProblemInstance::new(spec).is_err());
    }
}
