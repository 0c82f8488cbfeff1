//! The JSON instance document.
//!
//! ```json
//! {
//!   "geometry": {"shape": "circular", "rings": 3, "diameter_h": 0.5},
//!   "services": [{"h": 1, "e": 0.5, "T": 5, "dist": {"kind": "truncated_poisson", "mean": 8}}],
//!   "arrivals": {"mode": "fixed", "target_daily_demand_h": 8.5},
//!   "shift": {"chi": 8, "chi_prime": 0},
//!   "weights": {"r": 5, "z": 10, "u": 2, "q": 0.1},
//!   "gamma": 0.99,
//!   "caps": {"x_max": 30, "y_max": 30}
//! }
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CostWeights, Geometry, InstanceSpec, ProblemInstance, ServiceType, VisitCountDist, DEFAULT_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub geometry: GeometryDoc,
    pub services: Vec<ServiceDoc>,
    pub arrivals: ArrivalsDoc,
    pub shift: ShiftDoc,
    #[serde(default)]
    pub weights: WeightsDoc,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub caps: CapsDoc,
}

fn default_gamma() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDoc {
    /// `circular`, `rectangular` or `line`.
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter_h: Option<f64>,
    /// Explicit cell length for rectangular areas, overriding the diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_h: Option<f64>,
    /// Depot distances in hours for line areas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depot_distances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceDoc {
    pub h: usize,
    pub e: f64,
    #[serde(rename = "T")]
    pub wait: usize,
    pub dist: DistDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistDoc {
    /// `deterministic`, `truncated_poisson`, `uniform` or `masses`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsDoc {
    /// `fixed`, `random` or `explicit`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_daily_demand_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftDoc {
    pub chi: f64,
    #[serde(default)]
    pub chi_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    pub r: f64,
    pub z: f64,
    pub u: f64,
    pub q: f64,
}

impl Default for WeightsDoc {
    fn default() -> Self {
        let w = CostWeights::default();
        Self { r: w.rejection, z: w.diversion, u: w.overtime, q: w.travel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsDoc {
    pub x_max: u32,
    pub y_max: u32,
}

impl Default for CapsDoc {
    fn default() -> Self {
        Self { x_max: DEFAULT_CAP, y_max: DEFAULT_CAP }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

impl GeometryDoc {
    fn build(&self) -> Result<Geometry> {
        match self.shape.as_str() {
            "circular" => {
                let rings = self.rings.ok_or_else(|| invalid("circular geometry needs `rings`"))?;
                let d = self.diameter_h.ok_or_else(|| invalid("circular geometry needs `diameter_h`"))?;
                Geometry::circular(rings, d)
            }
            "rectangular" => {
                let (rows, cols) = match (self.rows, self.cols) {
                    (Some(r), Some(c)) => (r, c),
                    _ => return Err(invalid("rectangular geometry needs `rows` and `cols`")),
                };
                match (self.cell_h, self.diameter_h) {
                    (Some(cell), _) => Geometry::rectangular_with_cell(rows, cols, cell),
                    (None, Some(d)) => Geometry::rectangular(rows, cols, d),
                    (None, None) => Err(invalid("rectangular geometry needs `diameter_h` or `cell_h`")),
                }
            }
            "line" => {
                let d = self.depot_distances.as_ref().ok_or_else(|| invalid("line geometry needs `depot_distances`"))?;
                Geometry::line(d)
            }
            other => Err(invalid(format!("unknown geometry shape `{other}`"))),
        }
    }
}

impl DistDoc {
    fn build(&self) -> Result<VisitCountDist> {
        match self.kind.as_str() {
            "deterministic" => {
                let mean = self.mean.ok_or_else(|| invalid("deterministic visits need `mean`"))?;
                if mean.fract() != 0.0 || mean < 1.0 {
                    return Err(invalid(format!("deterministic visit count must be a positive integer, got {mean}")));
                }
                Ok(VisitCountDist::Deterministic { visits: mean as usize })
            }
            "truncated_poisson" => {
                let mean = self.mean.ok_or_else(|| invalid("truncated Poisson needs `mean`"))?;
                let max = self.max.unwrap_or(3 * (mean.round() as usize).max(1));
                Ok(VisitCountDist::TruncatedPoisson { mean, max })
            }
            "uniform" => {
                let max = match (self.max, self.mean) {
                    (Some(m), _) => m,
                    (None, Some(mean)) => 2 * (mean.round() as usize).max(1) - 1,
                    (None, None) => return Err(invalid("uniform visits need `max` or `mean`")),
                };
                if let Some(mean) = self.mean {
                    let implied = (1.0 + max as f64) / 2.0;
                    if (mean - implied).abs() > 1e-9 {
                        return Err(invalid(format!("uniform on 1..={max} has mean {implied}, not {mean}")));
                    }
                }
                Ok(VisitCountDist::Uniform { max })
            }
            "masses" => {
                let probs = self.probs.clone().ok_or_else(|| invalid("explicit visit masses need `probs`"))?;
                Ok(VisitCountDist::Masses { probs })
            }
            other => Err(invalid(format!("unknown visit-count distribution `{other}`"))),
        }
    }
}

impl InstanceDoc {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let geometry = self.geometry.build()?;
        let services = self
            .services
            .iter()
            .map(|s| ServiceType::new(s.h, s.e, s.wait, s.dist.build()?))
            .collect::<Result<Vec<_>>>()?;
        if services.is_empty() {
            return Err(invalid("at least one service type is required"));
        }
        let regions = geometry.region_count();
        let hours_per_rate: f64 = services.iter().map(|s| s.service_time * s.rounded_mean() as f64).sum();
        let target = self.arrivals.target_daily_demand_h;
        if let Some(t) = target {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("target daily demand must be nonnegative"));
            }
        }
        let uniform_rate = |t: f64| t / (regions as f64 * hours_per_rate);
        let rates: Vec<Vec<f64>> = match self.arrivals.mode.as_str() {
            "fixed" => {
                let t = target.ok_or_else(|| invalid("fixed arrivals need `target_daily_demand_h`"))?;
                vec![vec![uniform_rate(t); regions]; services.len()]
            }
            "random" => {
                let t = target.ok_or_else(|| invalid("random arrivals need `target_daily_demand_h`"))?;
                let mut rng = crate::rng::stream(self.arrivals.seed.unwrap_or(0), &[0x5241_5445]);
                let bar = uniform_rate(t);
                (0..services.len()).map(|_| (0..regions).map(|_| rng.random::<f64>() * 2.0 * bar).collect()).collect()
            }
            "explicit" => {
                self.arrivals.matrix.clone().ok_or_else(|| invalid("explicit arrivals need `matrix`"))?
            }
            other => return Err(invalid(format!("unknown arrivals mode `{other}`"))),
        };
        let spec = InstanceSpec {
            geometry,
            services,
            arrival_rates: rates,
            shift: self.shift.chi,
            overtime_cap: self.shift.chi_prime,
            weights: CostWeights::new(self.weights.r, self.weights.z, self.weights.u, self.weights.q),
            gamma: self.gamma,
            x_cap: self.caps.x_max,
            y_cap: self.caps.y_max,
        };
        let inst = ProblemInstance::new(spec)?;
        match target {
            Some(t) if self.arrivals.mode != "fixed" && inst.daily_demand() > 0.0 => inst.scaled_to_demand(t),
            _ => Ok(inst),
        }
    }
}

/// Parses and validates an instance document.
pub fn load_instance(text: &str) -> Result<ProblemInstance> {
    InstanceDoc::parse(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT: &str = r#"{
        "geometry": {"shape": "circular", "rings": 3, "diameter_h": 0.5},
        "services": [{"h": 1, "e": 0.5, "T": 5, "dist": {"kind": "truncated_poisson", "mean": 8}}],
        "arrivals": {"mode": "fixed", "target_daily_demand_h": 8.5},
        "shift": {"chi": 8, "chi_prime": 0},
        "weights": {"r": 5, "z": 10, "u": 2, "q": 0.1},
        "gamma": 0.99
    }"#;

    #[test]
    fn default_document_loads() {
        let inst = load_instance(DEFAULT).unwrap();
        assert_eq!(inst.regions(), 24);
        assert!((inst.daily_demand() - 8.5).abs() < 1e-12);
        assert_eq!(inst.service(0).max_visits(), 24);
        assert_eq!(inst.x_cap(0), DEFAULT_CAP);
    }

    #[test]
    fn short_shift_is_unreachable() {
        let text = DEFAULT.replace("\"chi\": 8", "\"chi\": 0.1");
        assert!(matches!(load_instance(&text), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn two_type_rejection_costs() {
        let text = r#"{
            "geometry": {"shape": "circular", "rings": 3, "diameter_h": 0.5},
            "services": [
                {"h": 7, "e": 0.5, "T": 1, "dist": {"kind": "deterministic", "mean": 10}},
                {"h": 2, "e": 0.5, "T": 3, "dist": {"kind": "deterministic", "mean": 6}}
            ],
            "arrivals": {"mode": "random", "target_daily_demand_h": 9.5, "seed": 4},
            "shift": {"chi": 8, "chi_prime": 2}
        }"#;
        let inst = load_instance(text).unwrap();
        assert_eq!(inst.rejection_cost(0), 25.0);
        assert_eq!(inst.rejection_cost(1), 15.0);
        assert!((inst.daily_demand() - 9.5).abs() < 1e-9);
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(load_instance("{"), Err(Error::Document(_))));
        assert!(matches!(load_instance(&DEFAULT.replace("\"gamma\"", "\"gama\"")), Err(Error::Document(_))));
        let bad_uniform = DEFAULT.replace(r#""kind": "truncated_poisson", "mean": 8"#, r#""kind": "uniform", "mean": 8, "max": 10"#);
        assert!(load_instance(&bad_uniform).is_err());
    }
}
