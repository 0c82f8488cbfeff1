//! Multi-day visit calendars with cheapest-insertion routing, shared by the
//! Myopic and SB policies, and the day-1 routing/diversion finisher.

use crate::instance::ProblemInstance;
use crate::mdp::{ActionPlan, State};
use crate::optim::{heuristic_tour, optimal_tour};

/// Days with at most this many distinct locations get an exact tour.
pub const EXACT_DAY_LOCATIONS: usize = 12;

const TIE: f64 = 1e-12;

/// Inserts `node` into `route` at the cheapest position. Nodes index `dist`
/// with the depot at 0. Returns the new route and the added travel time;
/// a node already on the route leaves it unchanged at zero cost. Ties go to
/// the earliest position.
pub fn cheapest_insertion(route: &[usize], node: usize, dist: &[Vec<f64>]) -> (Vec<usize>, f64) {
    if route.contains(&node) {
        return (route.to_vec(), 0.0);
    }
    let (pos, delta) = insertion_point(route, node, dist);
    let mut out = route.to_vec();
    out.insert(pos, node);
    (out, delta)
}

fn insertion_point(route: &[usize], node: usize, dist: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    let mut prev = 0;
    for pos in 0..=route.len() {
        let next = route.get(pos).copied().unwrap_or(0);
        let d = dist[prev][node] + dist[node][next] - dist[prev][next];
        if d < best.1 - TIE {
            best = (pos, d);
        }
        prev = next;
    }
    best
}

fn best_tour(nodes: &[usize], dist: &[Vec<f64>]) -> (Vec<usize>, f64, bool) {
    if nodes.len() <= EXACT_DAY_LOCATIONS {
        let t = optimal_tour(nodes, dist).expect("within exact limit");
        (t.order, t.length, false)
    } else {
        let t = heuristic_tour(nodes, dist);
        (t.order, t.length, true)
    }
}

#[derive(Debug, Clone, Default)]
struct Day {
    route: Vec<usize>,
    travel: f64,
    service: f64,
}

/// Outcome of placing one visit on one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Placement {
    /// Fits; cost is travel plus any added overtime.
    Routed { pos: Option<usize>, delta: f64, cost: f64 },
    /// Would exceed shift plus overtime; the visit is diverted.
    Diverted { cost: f64 },
}

impl Placement {
    pub(crate) fn cost(&self) -> f64 {
        match *self {
            Placement::Routed { cost, .. } | Placement::Diverted { cost } => cost,
        }
    }
}

/// Scheduled visits for days `1..=horizon`.
#[derive(Debug, Clone)]
pub(crate) struct Calendar {
    days: Vec<Day>,
    dist: Vec<Vec<f64>>,
    pub heuristic: bool,
}

impl Calendar {
    /// Existing patients keep their booked next visit and receive follow-ups
    /// every `h_k` days up to their `J̄_k`-th visit (one visit if they are
    /// already past it), truncated at `horizon`.
    pub fn from_state(inst: &ProblemInstance, state: &State, horizon: usize) -> Self {
        let lay = inst.layout();
        let mut load: Vec<Vec<u32>> = vec![vec![0; inst.regions()]; horizon];
        let mut service = vec![0.0; horizon];
        for (idx, c) in lay.free_coords() {
            let n = state.x[idx];
            if n == 0 {
                continue;
            }
            let s = inst.service(c.k);
            let remaining = s.rounded_mean().saturating_sub(c.j).max(1);
            for i in 0..remaining {
                let day = c.t + i * s.pattern;
                if day > horizon {
                    break;
                }
                load[day - 1][c.l] += n;
                service[day - 1] += n as f64 * s.service_time;
            }
        }
        let dist = inst.geometry.distance_matrix();
        let mut heuristic = false;
        let days = load
            .iter()
            .zip(service)
            .map(|(counts, service)| {
                let nodes: Vec<usize> = (0..counts.len()).filter(|&l| counts[l] > 0).map(|l| l + 1).collect();
                let (route, travel, h) = best_tour(&nodes, &dist);
                heuristic |= h;
                Day { route, travel, service }
            })
            .collect();
        Self { days, dist, heuristic }
    }

    pub fn horizon(&self) -> usize {
        self.days.len()
    }

    /// Undiscounted incremental cost of one type-`k` visit at region `l` on
    /// `day`, by the three cases: travel only, travel plus overtime, or
    /// diversion when the tour would exceed shift plus overtime.
    pub fn place(&self, inst: &ProblemInstance, day: usize, k: usize, l: usize) -> Placement {
        let d = &self.days[day - 1];
        let node = l + 1;
        let (pos, delta) = if d.route.contains(&node) {
            (None, 0.0)
        } else {
            let (p, delta) = insertion_point(&d.route, node, &self.dist);
            (Some(p), delta)
        };
        let e = inst.service(k).service_time;
        let old = d.travel + d.service;
        let new = old + delta + e;
        let w = &inst.weights;
        if new <= inst.shift + TIE {
            Placement::Routed { pos, delta, cost: w.travel * delta }
        } else if new <= inst.shift + inst.overtime_cap + 1e-9 {
            let extra = (new - inst.shift) - (old - inst.shift).max(0.0);
            Placement::Routed { pos, delta, cost: w.travel * delta + w.overtime * extra }
        } else {
            Placement::Diverted { cost: inst.diversion_cost(k) }
        }
    }

    pub fn commit(&mut self, inst: &ProblemInstance, day: usize, k: usize, l: usize, p: Placement) {
        if let Placement::Routed { pos, delta, .. } = p {
            let d = &mut self.days[day - 1];
            if let Some(pos) = pos {
                d.route.insert(pos, l + 1);
            }
            d.travel += delta;
            d.service += inst.service(k).service_time;
        }
    }

    /// Days of the `J̄_k` visits of a patient whose first visit is `first`,
    /// truncated at the horizon.
    pub fn visit_days(&self, inst: &ProblemInstance, k: usize, first: usize) -> impl Iterator<Item = usize> + use<> {
        let (n, pattern) = (inst.service(k).rounded_mean(), inst.service(k).pattern);
        let h = self.horizon();
        (0..n).map(move |i| first + i * pattern).take_while(move |&d| d <= h)
    }

    /// Discounted cost of a patient whose first visit is on `first`.
    pub fn patient_cost(&self, inst: &ProblemInstance, k: usize, l: usize, first: usize) -> f64 {
        self.visit_days(inst, k, first).map(|d| inst.gamma.powi(d as i32 - 1) * self.place(inst, d, k, l).cost()).sum()
    }

    /// Schedules every visit of the patient, committing greedily per visit.
    pub fn commit_patient(&mut self, inst: &ProblemInstance, k: usize, l: usize, first: usize) {
        let days: Vec<usize> = self.visit_days(inst, k, first).collect();
        for d in days {
            let p = self.place(inst, d, k, l);
            self.commit(inst, d, k, l, p);
        }
    }
}

/// Day-1 route, diversions and overtime for given visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DayOneFinish {
    /// Regions in visiting order.
    pub route: Vec<usize>,
    /// Diverted visits in the `y` layout.
    pub divert: Vec<u32>,
    pub overtime: f64,
    pub heuristic: bool,
}

impl DayOneFinish {
    /// Writes route, overtime and diversions (added to existing ones).
    pub fn apply(&self, action: &mut ActionPlan) {
        action.route = self.route.clone();
        action.overtime = self.overtime;
        for (a, d) in action.divert.iter_mut().zip(&self.divert) {
            *a += d;
        }
    }
}

/// Routes the day-1 visits `counts` (in the `y` layout) on a shortest tour.
/// While the tour exceeds shift plus overtime, one visit is diverted from
/// the region farthest from the depot (ties: higher region index, then
/// higher type index) and the tour is recomputed.
pub fn finish_day_one(inst: &ProblemInstance, counts: &[u32]) -> DayOneFinish {
    let (kc, lc) = (inst.types(), inst.regions());
    let dist = inst.geometry.distance_matrix();
    let mut left = counts.to_vec();
    let mut divert = vec![0u32; counts.len()];
    let limit = inst.shift + inst.overtime_cap + 1e-9;
    loop {
        let nodes: Vec<usize> = (0..lc).filter(|&l| (0..kc).any(|k| left[k * lc + l] > 0)).map(|l| l + 1).collect();
        let (order, travel, heuristic) = best_tour(&nodes, &dist);
        let service: f64 =
            (0..kc).map(|k| inst.service(k).service_time * (0..lc).map(|l| left[k * lc + l] as f64).sum::<f64>()).sum();
        let total = travel + service;
        if total <= limit {
            return DayOneFinish {
                route: order.iter().map(|n| n - 1).collect(),
                divert,
                overtime: (total - inst.shift).max(0.0).min(inst.overtime_cap),
                heuristic,
            };
        }
        let far = nodes
            .iter()
            .map(|n| n - 1)
            .max_by(|&a, &b| inst.geometry.depot_distance(a).total_cmp(&inst.geometry.depot_distance(b)).then(a.cmp(&b)))
            .expect("an over-long tour has a stop");
        let k = (0..kc).rev().find(|&k| left[k * lc + far] > 0).expect("routed region has work");
        left[k * lc + far] -= 1;
        divert[k * lc + far] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::tour_length;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<Vec<f64>> {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| ((i * 7 % 5) as f64, (i * 3 % 4) as f64)).collect();
        pts.iter().map(|a| pts.iter().map(|b| (a.0 - b.0).abs() + (a.1 - b.1).abs()).collect()).collect()
    }

    #[test]
    fn empty_route_goes_out_and_back() {
        let d = grid(4);
        let (r, delta) = cheapest_insertion(&[], 2, &d);
        assert_eq!(r, vec![2]);
        assert!((delta - 2.0 * d[0][2]).abs() < 1e-12);
    }

    #[test]
    fn present_node_is_free() {
        let d = grid(4);
        assert_eq!(cheapest_insertion(&[1, 3], 3, &d), (vec![1, 3], 0.0));
    }

    proptest! {
        #[test]
        fn insertion_matches_position_enumeration(perm in Just((1..6).collect::<Vec<usize>>()).prop_shuffle(), pick in 0usize..5) {
            let d = grid(6);
            let node = perm[pick];
            let route: Vec<usize> = perm.iter().copied().filter(|&n| n != node).take(4).collect();
            let base = tour_length(&route, &d);
            let mut best = f64::INFINITY;
            for pos in 0..=route.len() {
                let mut r = route.clone();
                r.insert(pos, node);
                best = best.min(tour_length(&r, &d) - base);
            }
            let (r, delta) = cheapest_insertion(&route, node, &d);
            prop_assert!((delta - best).abs() < 1e-9);
            prop_assert!((tour_length(&r, &d) - base - delta).abs() < 1e-9);
        }
    }
}
