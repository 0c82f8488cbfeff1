use crate::instance::ProblemInstance;
use crate::mdp::{action_cost, expected_next_x, ActionPlan, State};

/// A state-action pair of the dual ALP with its cached coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub state: State,
    pub action: ActionPlan,
    /// `c(s, a)`.
    pub cost: f64,
    /// `x − γ E[X']` in the flat `x` layout.
    pub x_coef: Vec<f64>,
    /// `y − γ E[Y]` in the `y` layout.
    pub y_coef: Vec<f64>,
}

impl Column {
    /// Builds the column of `(state, action)` without feasibility checks.
    pub fn new(inst: &ProblemInstance, state: State, action: ActionPlan) -> Self {
        let gamma = inst.gamma;
        let next = expected_next_x(&state, &action, inst);
        let x_coef = state.x.iter().zip(&next).map(|(&x, e)| x as f64 - gamma * e).collect();
        let lay = inst.layout();
        let mut y_coef = vec![0.0; lay.y_len()];
        for k in 0..inst.types() {
            for l in 0..inst.regions() {
                let i = lay.y_index(k, l);
                y_coef[i] = state.y[i] as f64 - gamma * inst.rate(k, l);
            }
        }
        let cost = action_cost(&action, inst);
        Self { state, action, cost, x_coef, y_coef }
    }

    /// `c − η(1−γ) − Σ τ (x − γE[X']) − Σ ρ (y − γE[Y])`.
    pub fn reduced_cost(&self, gamma: f64, eta: f64, tau: &[f64], rho: &[f64]) -> f64 {
        let tx: f64 = tau.iter().zip(&self.x_coef).map(|(a, b)| a * b).sum();
        let ry: f64 = rho.iter().zip(&self.y_coef).map(|(a, b)| a * b).sum();
        self.cost - eta * (1.0 - gamma) - tx - ry
    }
}

/// The state used to seed column generation: every non-structural `x` at
/// its cap and `y_{kl} = min(y^max, ⌈λ_{kl}⌉)`.
pub fn initial_state(inst: &ProblemInstance) -> State {
    let lay = inst.layout();
    let mut s = State::empty(inst);
    for (idx, c) in lay.free_coords() {
        s.x[idx] = inst.x_cap(c.l);
    }
    for k in 0..inst.types() {
        for l in 0..inst.regions() {
            s.set_y(lay, k, l, (inst.rate(k, l).ceil() as u32).min(inst.y_cap(l)));
        }
    }
    s
}

/// The action that accepts every referral at its wait target (day 1 when
/// `T_k = 1`), diverts every day-1 visit and neither travels nor works
/// overtime.
pub fn initial_action(inst: &ProblemInstance, state: &State) -> ActionPlan {
    let lay = inst.layout();
    let mut a = ActionPlan::empty(inst);
    for k in 0..inst.types() {
        let t = inst.service(k).wait_target;
        for l in 0..inst.regions() {
            let y = state.y_at(lay, k, l);
            a.add_assigned(inst, t, k, l, y);
            let day_one = state.day_one_booked(lay, k, l) + if t == 1 { y } else { 0 };
            a.divert[lay.y_index(k, l)] = day_one;
        }
    }
    a
}

/// Seed column for the default [`initial_state`].
pub fn initial_column(inst: &ProblemInstance) -> Column {
    initial_column_for(inst, initial_state(inst))
}

/// Seed column at a given state.
pub fn initial_column_for(inst: &ProblemInstance, state: State) -> Column {
    let action = initial_action(inst, &state);
    Column::new(inst, state, action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostWeights, Geometry, InstanceSpec, ServiceType, VisitCountDist};
    use crate::mdp::check_action;

    pub(crate) fn toy(wait: usize, visits: usize) -> ProblemInstance {
        ProblemInstance::new(InstanceSpec {
            geometry: Geometry::rectangular(1, 2, 0.5).unwrap(),
            services: vec![ServiceType::new(1, 0.5, wait, VisitCountDist::Deterministic { visits }).unwrap()],
            arrival_rates: vec![vec![1.5, 0.7]],
            shift: 8.0,
            overtime_cap: 0.0,
            weights: CostWeights::default(),
            gamma: 0.99,
            x_cap: 4,
            y_cap: 4,
        })
        .unwrap()
    }

    #[test]
    fn empty_state_gives_zero_cost() {
        let inst = toy(3, 2);
        let c = initial_column_for(&inst, State::empty(&inst));
        assert_eq!(c.cost, 0.0);
        assert!(c.x_coef.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_referral_same_day() {
        let inst = toy(1, 1);
        let mut s = State::empty(&inst);
        s.set_y(inst.layout(), 0, 0, 1);
        let c = initial_column_for(&inst, s);
        assert_eq!(c.action.assigned(&inst, 1, 0, 0), 1);
        assert_eq!(c.action.divert[0], 1);
        assert!((c.cost - inst.diversion_cost(0)).abs() < 1e-12);
    }

    #[test]
    fn default_seed_is_feasible() {
        for (w, v) in [(1, 1), (3, 2), (2, 3)] {
            let inst = toy(w, v);
            let c = initial_column(&inst);
            assert!(check_action(&c.state, &c.action, &inst).is_empty());
        }
    }
}
