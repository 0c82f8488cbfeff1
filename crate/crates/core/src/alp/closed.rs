//! Closed-form ALP parameters of the special case and their dual
//! certificate.

use super::params::{delta_coefficients, AlpParams, ParamsMeta, Variant};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

/// Diversion must cost at least this multiple of travel for the special case.
pub const DIVERSION_TRAVEL_RATIO: f64 = 100.0;

/// Why an instance is outside the special case, if it is.
pub fn special_case_violations(inst: &ProblemInstance) -> Vec<String> {
    let mut out = Vec::new();
    if inst.overtime_cap != 0.0 {
        out.push(format!("overtime allowed (cap {})", inst.overtime_cap));
    }
    let w = &inst.weights;
    if w.diversion < DIVERSION_TRAVEL_RATIO * w.travel {
        out.push(format!("diversion weight {} below {}× travel weight {}", w.diversion, DIVERSION_TRAVEL_RATIO, w.travel));
    }
    let e0 = inst.service(0).service_time;
    if inst.services.iter().any(|s| (s.service_time - e0).abs() > 1e-12) {
        out.push("service times differ across types".into());
    }
    for l in 0..inst.regions() {
        if max_full_visits(inst, l) == 0 {
            out.push(format!("no full visit fits a trip to region {l}"));
        }
    }
    out
}

/// `x^m_l = ⌊(χ − 2 d_{0,l}) / e⌋`: visits in one trip to region `l`.
pub fn max_full_visits(inst: &ProblemInstance, l: usize) -> u32 {
    let spare = inst.shift - 2.0 * inst.geometry.depot_distance(l);
    let e = inst.service(0).service_time;
    if spare <= 0.0 {
        0
    } else {
        (spare / e + 1e-9).floor() as u32
    }
}

/// `τ_{1,kl,J_k−1}` of the closed form: travel cost per visit of a full trip.
pub fn base_price(inst: &ProblemInstance, l: usize) -> f64 {
    inst.weights.travel * 2.0 * inst.geometry.depot_distance(l) / max_full_visits(inst, l) as f64
}

/// Closed-form parameters of the special case.
pub fn closed_form_params(inst: &ProblemInstance) -> Result<AlpParams> {
    let bad = special_case_violations(inst);
    if !bad.is_empty() {
        return Err(Error::Precondition(format!("not a special-case instance: {}", bad.join("; "))));
    }
    let lay = inst.layout();
    let g = inst.gamma;
    let mut tau = vec![0.0; lay.x_len()];
    let mut rho = vec![0.0; lay.y_len()];
    let mut eta = 0.0;
    for k in 0..inst.types() {
        let delta = delta_coefficients(inst, k);
        let wait = inst.service(k).wait_target;
        for l in 0..inst.regions() {
            let base = base_price(inst, l);
            for t in 1..=lay.horizon {
                for j in 0..lay.dims(k).visits {
                    if !lay.is_structural_zero(t, k, j) {
                        tau[lay.x_index(t, k, l, j)] = delta[t - 1][j] * base;
                    }
                }
            }
            let r = delta[wait - 1][0] * base;
            rho[lay.y_index(k, l)] = r;
            eta += g / (1.0 - g) * r * inst.rate(k, l);
        }
    }
    let meta = ParamsMeta { variant: Variant::ClosedForm, epsilon: 0.0, iterations: 0, columns: 0, solve_seconds: 0.0, objective: f64::NAN };
    let mut p = AlpParams { eta, tau, rho, meta };
    p.meta.objective = alp_objective(inst, &p, 0.0);
    Ok(p)
}

/// `η + ε Σ τ + Σ λ ρ`, the ALP objective of `params` under uniform `ε`.
pub fn alp_objective(inst: &ProblemInstance, params: &AlpParams, epsilon: f64) -> f64 {
    let tau: f64 = params.tau.iter().sum();
    let mut total = params.eta + epsilon * tau;
    for k in 0..inst.types() {
        for l in 0..inst.regions() {
            total += inst.rate(k, l) * params.rho_at(inst, k, l);
        }
    }
    total
}

/// Dual weights supporting the closed form by complementary slackness.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    /// `β^x` in the flat `x` layout.
    pub beta_x: Vec<f64>,
    /// `β^n_1` in the `y` layout (nonzero only when `T_k = 1`).
    pub beta_n: Vec<f64>,
    /// `β^y` for `T_k ≥ 2`, in the `y` layout.
    pub beta_y: Vec<f64>,
    pub beta_0: f64,
    /// `Σ β^x_1 + Σ β^n_1`.
    pub lhs: f64,
    /// `1 / (1 − γ)`.
    pub limit: f64,
    /// `x^m_l` per region.
    pub full_visits: Vec<u32>,
    /// `R_k ≥ ρ_kl` everywhere, so that accepting every referral is optimal.
    pub accepts_all: bool,
    /// The certificate columns fit inside the state caps.
    pub within_caps: bool,
    pub valid: bool,
}

/// Builds the certificate of `params` (normally [`closed_form_params`]) on
/// `inst` for state-relevance weight `epsilon`.
pub fn dual_certificate(inst: &ProblemInstance, params: &AlpParams, epsilon: f64) -> Result<DualCertificate> {
    let lay = inst.layout();
    let g = inst.gamma;
    let full_visits: Vec<u32> = (0..inst.regions()).map(|l| max_full_visits(inst, l)).collect();
    if let Some(l) = full_visits.iter().position(|&m| m == 0) {
        return Err(Error::Precondition(format!("no full visit fits a trip to region {l}")));
    }
    let mut beta_x = vec![0.0; lay.x_len()];
    let mut beta_n = vec![0.0; lay.y_len()];
    let mut beta_y = vec![0.0; lay.y_len()];
    let mut accepts_all = true;
    let mut within_caps = true;
    for k in 0..inst.types() {
        let s = inst.service(k);
        let (h, wait, jk) = (s.pattern, s.wait_target, s.max_visits());
        for l in 0..inst.regions() {
            let lam = inst.rate(k, l);
            let xm = full_visits[l] as f64;
            let xmax = inst.x_cap(l) as f64;
            let yi = lay.y_index(k, l);
            within_caps &= full_visits[l] <= inst.x_cap(l);
            if inst.rejection_cost(k) + 1e-12 < params.rho[yi] {
                accepts_all = false;
            }
            // Mass Σ β·x per coordinate, indexed [t - 1][j].
            let mut mass = vec![vec![0.0; jk]; lay.horizon];
            let mut n_mass = 0.0;
            if wait == 1 {
                n_mass = lam / (1.0 - g);
                within_caps &= full_visits[l] <= inst.y_cap(l);
            } else {
                beta_y[yi] = lam / ((1.0 - g) * inst.y_cap(l) as f64);
                mass[wait - 2][0] = epsilon + g * lam / (1.0 - g);
                for t in (1..wait - 1).rev() {
                    mass[t - 1][0] = epsilon + g * mass[t][0];
                }
            }
            for j in 1..jk {
                mass[h - 1][j] = if j == 1 {
                    epsilon + g * s.continuation(2) * (mass[0][0] + n_mass)
                } else {
                    epsilon + g * s.continuation(j + 1) * mass[0][j - 1]
                };
                for t in (1..h).rev() {
                    mass[t - 1][j] = epsilon + g * mass[t][j];
                }
            }
            for t in 1..=lay.horizon {
                for j in 0..jk {
                    if lay.is_structural_zero(t, k, j) {
                        continue;
                    }
                    let m = if t == 1 { xm } else { xmax };
                    beta_x[lay.x_index(t, k, l, j)] = mass[t - 1][j] / m;
                }
            }
            beta_n[yi] = n_mass / xm;
        }
    }
    let limit = 1.0 / (1.0 - g);
    let mut lhs: f64 = beta_n.iter().sum();
    for (idx, c) in lay.free_coords() {
        if c.t == 1 {
            lhs += beta_x[idx];
        }
    }
    let beta_0 = limit - beta_x.iter().sum::<f64>() - beta_n.iter().sum::<f64>() - beta_y.iter().sum::<f64>();
    let valid = lhs < limit && beta_0 >= 0.0 && accepts_all && within_caps;
    Ok(DualCertificate { beta_x, beta_n, beta_y, beta_0, lhs, limit, full_visits, accepts_all, within_caps, valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};

    fn special(wait: usize, visits: usize, rate: f64) -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular_with_cell(1, 1, 1.0 / 12.0).unwrap(),
            services: vec![ServiceType::new(1, 0.5, wait, VisitCountDist::Deterministic { visits }).unwrap()],
            arrival_rates: vec![vec![rate]],
            shift: 8.0,
            overtime_cap: 0.0,
            weights: CostWeights::new(5.0, 10.0, 2.0, 0.1),
            gamma: 0.99,
            x_cap: 30,
            y_cap: 30,
        })
        .unwrap()
    }

    #[test]
    fn base_price_by_hand() {
        let inst = special(1, 1, 1.0);
        assert!((inst.geometry.depot_distance(0) - 1.0 / 12.0).abs() < 1e-12);
        assert!((base_price(&inst, 0) - 0.1 * (1.0 / 6.0) / 15.0).abs() < 1e-15);
        assert!((base_price(&inst, 0) - 1.1111e-3).abs() < 1e-7);
    }

    #[test]
    fn single_visit_same_day() {
        let inst = special(1, 1, 1.0);
        let p = closed_form_params(&inst).unwrap();
        // x_{1,0} is structurally zero here, so ρ carries the base price.
        assert!((p.rho[0] - base_price(&inst, 0)).abs() < 1e-15);
        let zero = special(1, 1, 0.0);
        assert_eq!(closed_form_params(&zero).unwrap().eta, 0.0);
    }

    #[test]
    fn certificate_without_arrivals() {
        let inst = special(3, 2, 0.0);
        let p = closed_form_params(&inst).unwrap();
        let c = dual_certificate(&inst, &p, 0.0).unwrap();
        assert!(c.beta_y.iter().chain(&c.beta_n).all(|&b| b == 0.0));
        assert!(c.valid);
    }

    #[test]
    fn same_day_referral_weight() {
        let inst = special(1, 3, 2.0);
        let p = closed_form_params(&inst).unwrap();
        let c = dual_certificate(&inst, &p, 0.0).unwrap();
        let xm = max_full_visits(&inst, 0) as f64;
        assert!((c.beta_n[0] - 2.0 / ((1.0 - 0.99) * xm)).abs() < 1e-9);
    }

    #[test]
    fn gate_rejects_overtime() {
        let mut spec = special(1, 1, 1.0).spec();
        spec.overtime_cap = 1.0;
        let inst = ProblemInstance::new(spec).unwrap();
        assert!(matches!(closed_form_params(&inst), Err(Error::Precondition(_))));
    }
}
