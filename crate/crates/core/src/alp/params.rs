use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::mdp::State;

/// Which ALP formulation produced a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "full")]
    Full,
    /// `τ_{tklj} = δ_{tjk} τ'_{kl}`.
    #[serde(rename = "2i")]
    TwoIndex,
    /// Solved on the distance-class line proxy, then lifted.
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "1d-2i")]
    OneDTwoIndex,
    #[serde(rename = "closed-form")]
    ClosedForm,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::TwoIndex => "2i",
            Self::OneD => "1d",
            Self::OneDTwoIndex => "1d-2i",
            Self::ClosedForm => "closed-form",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "full" => Ok(Self::Full),
            "2i" => Ok(Self::TwoIndex),
            "1d" => Ok(Self::OneD),
            "1d-2i" | "1d2i" => Ok(Self::OneDTwoIndex),
            "closed-form" | "closed" => Ok(Self::ClosedForm),
            other => Err(Error::InvalidInstance(format!("unknown ALP variant `{other}`"))),
        }
    }

    pub fn two_index(self) -> bool {
        matches!(self, Self::TwoIndex | Self::OneDTwoIndex)
    }

    pub fn one_d(self) -> bool {
        matches!(self, Self::OneD | Self::OneDTwoIndex)
    }
}

/// How a parameter set was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsMeta {
    pub variant: Variant,
    pub epsilon: f64,
    /// Master solves performed.
    pub iterations: usize,
    /// Columns in the final master, excluding penalty columns.
    pub columns: usize,
    pub solve_seconds: f64,
    /// Final master objective, i.e. the ALP objective.
    pub objective: f64,
}

/// Affine value function `η + Σ τ x + Σ ρ y`.
///
/// `tau` uses the flat `x` layout of the instance (zero on structural zeros)
/// and `rho` the `y` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AlpParams {
    pub eta: f64,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    pub meta: ParamsMeta,
}

impl AlpParams {
    /// All-zero parameters.
    pub fn zero(inst: &ProblemInstance) -> Self {
        let lay = inst.layout();
        Self {
            eta: 0.0,
            tau: vec![0.0; lay.x_len()],
            rho: vec![0.0; lay.y_len()],
            meta: ParamsMeta { variant: Variant::Full, epsilon: 0.0, iterations: 0, columns: 0, solve_seconds: 0.0, objective: 0.0 },
        }
    }

    pub fn tau_at(&self, inst: &ProblemInstance, t: usize, k: usize, l: usize, j: usize) -> f64 {
        let lay = inst.layout();
        if t == 0 || t > lay.horizon || j >= lay.dims(k).visits || lay.is_structural_zero(t, k, j) {
            return 0.0;
        }
        self.tau[lay.x_index(t, k, l, j)]
    }

    pub fn rho_at(&self, inst: &ProblemInstance, k: usize, l: usize) -> f64 {
        self.rho[inst.layout().y_index(k, l)]
    }

    /// `ṽ(s)`.
    pub fn value(&self, state: &State) -> f64 {
        let tx: f64 = self.tau.iter().zip(&state.x).map(|(t, &x)| t * x as f64).sum();
        let ry: f64 = self.rho.iter().zip(&state.y).map(|(r, &y)| r * y as f64).sum();
        self.eta + tx + ry
    }

    /// Checks dimensions, signs and structural zeros against `inst`.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<()> {
        let lay = inst.layout();
        if self.tau.len() != lay.x_len() || self.rho.len() != lay.y_len() {
            return Err(Error::Dimension(format!(
                "parameters have {} τ and {} ρ entries, instance needs {} and {}",
                self.tau.len(),
                self.rho.len(),
                lay.x_len(),
                lay.y_len()
            )));
        }
        for (idx, &v) in self.tau.iter().enumerate() {
            let c = lay.decode(idx);
            if !v.is_finite() || v < -1e-9 || (lay.is_structural_zero(c.t, c.k, c.j) && v != 0.0) {
                return Err(Error::Dimension(format!("invalid τ at {c:?}: {v}")));
            }
        }
        if self.rho.iter().any(|&v| !v.is_finite() || v < -1e-9) || !self.eta.is_finite() {
            return Err(Error::Dimension("invalid η or ρ".into()));
        }
        Ok(())
    }

    /// Largest componentwise difference to `other` over η, τ and ρ.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let mut worst = (self.eta - other.eta).abs();
        for (a, b) in self.tau.iter().zip(&other.tau).chain(self.rho.iter().zip(&other.rho)) {
            worst = worst.max((a - b).abs());
        }
        if self.tau.len() != other.tau.len() || self.rho.len() != other.rho.len() {
            return f64::INFINITY;
        }
        worst
    }

    /// Same policy-relevant parameters (`τ` and `ρ`) within `tol`.
    pub fn same_as(&self, other: &Self, tol: f64) -> bool {
        self.tau.len() == other.tau.len()
            && self.rho.len() == other.rho.len()
            && self.tau.iter().zip(&other.tau).chain(self.rho.iter().zip(&other.rho)).all(|(a, b)| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())))
    }
}

/// `δ_{tjk} = γ^{t−1} Σ_{i=0}^{J_k−1−j} γ^{i h_k} Π_{i'=0}^{i−1} p_{k,j+2+i'}`,
/// indexed `[t − 1][j]` for `t = 1..=T`, `j = 0..J_k−1`.
pub fn delta_coefficients(inst: &ProblemInstance, k: usize) -> Vec<Vec<f64>> {
    let s = inst.service(k);
    let gamma = inst.gamma;
    let jk = s.max_visits();
    let base: Vec<f64> = (0..jk)
        .map(|j| {
            let mut total = 0.0;
            let mut prod = 1.0;
            for i in 0..jk - j {
                if i > 0 {
                    prod *= s.continuation(j + 2 + i - 1);
                }
                total += gamma.powi((i * s.pattern) as i32) * prod;
            }
            total
        })
        .collect();
    (1..=inst.horizon()).map(|t| base.iter().map(|b| gamma.powi(t as i32 - 1) * b).collect()).collect()
}

/// Parameters as persisted to JSON: `τ` lists only non-structural entries in
/// layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub eta: f64,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    pub meta: ParamsMeta,
    /// `[T, L, K]` followed by `(h_k, T_k, J_k)` per type, for validation.
    pub shape: Vec<usize>,
}

fn shape(inst: &ProblemInstance) -> Vec<usize> {
    let lay = inst.layout();
    let mut out = vec![lay.horizon, lay.regions, lay.types()];
    for k in 0..lay.types() {
        let d = lay.dims(k);
        out.extend([d.pattern, d.wait_target, d.visits]);
    }
    out
}

impl AlpParams {
    pub fn to_doc(&self, inst: &ProblemInstance) -> ParamsDoc {
        let lay = inst.layout();
        ParamsDoc {
            eta: self.eta,
            tau: lay.free_coords().map(|(idx, _)| self.tau[idx]).collect(),
            rho: self.rho.clone(),
            meta: self.meta.clone(),
            shape: shape(inst),
        }
    }

    pub fn from_doc(doc: &ParamsDoc, inst: &ProblemInstance) -> Result<Self> {
        if doc.shape != shape(inst) {
            return Err(Error::Dimension(format!("parameter shape {:?} does not match instance {:?}", doc.shape, shape(inst))));
        }
        let lay = inst.layout();
        let free: Vec<usize> = lay.free_coords().map(|(idx, _)| idx).collect();
        if free.len() != doc.tau.len() {
            return Err(Error::Dimension("τ length does not match the instance".into()));
        }
        let mut tau = vec![0.0; lay.x_len()];
        for (idx, v) in free.into_iter().zip(&doc.tau) {
            tau[idx] = *v;
        }
        let p = Self { eta: doc.eta, tau, rho: doc.rho.clone(), meta: doc.meta.clone() };
        p.validate(inst)?;
        Ok(p)
    }

    pub fn to_json(&self, inst: &ProblemInstance) -> String {
        serde_json::to_string_pretty(&self.to_doc(inst)).expect("serialisable")
    }

    pub fn from_json(text: &str, inst: &ProblemInstance) -> Result<Self> {
        let doc: ParamsDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc, inst)
    }
}
