//! Exact optimisation of day-1 service: which visits to serve, the route
//! through their regions, and the overtime worked.
//!
//! Visits are grouped into [`UnitClass`]es. Every unit of a class costs
//! `idle` when it is not served (for example a diversion) and `serve` when
//! the nurse performs it. Serving consumes the type's service time and
//! requires the region on the route. The solver enumerates region subsets
//! with exact subset tour lengths and fills each subset with the best units.

use crate::instance::ProblemInstance;
use crate::optim::{heuristic_tour, optimal_tour, subset_tour_lengths};

/// Largest number of candidate regions handled by exact subset enumeration.
pub const EXACT_REGIONS: usize = 16;

const TOL: f64 = 1e-12;

/// Identical day-1 units sharing a region, a service type and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitClass {
    pub region: usize,
    pub kind: usize,
    pub count: u32,
    /// Cost of one served unit.
    pub serve: f64,
    /// Cost of one unit that is not served.
    pub idle: f64,
}

impl UnitClass {
    fn gain(&self) -> f64 {
        self.idle - self.serve
    }
}

/// Optimal day-1 plan.
#[derive(Debug, Clone, PartialEq)]
pub struct DayOnePlan {
    /// Served units per input class.
    pub served: Vec<u32>,
    /// Regions in visiting order.
    pub route: Vec<usize>,
    pub travel: f64,
    pub overtime: f64,
    /// `Σ count·idle + Σ served·(serve − idle) + Q·travel + U·overtime`.
    pub objective: f64,
    /// False when the heuristic fallback for many regions was used.
    pub exact: bool,
}

/// Solves the day-1 problem for `classes` on `inst`'s geometry, shift and
/// cost weights.
pub fn solve_day_one(inst: &ProblemInstance, classes: &[UnitClass]) -> DayOnePlan {
    let dist = inst.geometry.distance_matrix();
    let mut regions: Vec<usize> =
        classes.iter().filter(|c| c.count > 0 && c.gain() > TOL).map(|c| c.region).collect();
    regions.sort_unstable();
    regions.dedup();
    let base: f64 = classes.iter().map(|c| c.count as f64 * c.idle).sum();
    let (served, exact) = if regions.len() <= EXACT_REGIONS {
        (exact_selection(inst, classes, &regions, &dist), true)
    } else {
        (heuristic_selection(inst, classes, &regions, &dist), false)
    };
    finish(inst, classes, served, base, &dist, exact)
}

fn finish(
    inst: &ProblemInstance,
    classes: &[UnitClass],
    served: Vec<u32>,
    base: f64,
    dist: &[Vec<f64>],
    exact: bool,
) -> DayOnePlan {
    let mut visit: Vec<usize> =
        classes.iter().zip(&served).filter(|(_, &s)| s > 0).map(|(c, _)| c.region + 1).collect();
    visit.sort_unstable();
    visit.dedup();
    let tour = if visit.len() <= EXACT_REGIONS {
        optimal_tour(&visit, dist).expect("within exact limit")
    } else {
        heuristic_tour(&visit, dist)
    };
    let service: f64 = classes.iter().zip(&served).map(|(c, &s)| s as f64 * inst.service(c.kind).service_time).sum();
    let overtime = (service + tour.length - inst.shift).max(0.0);
    let mut objective = base + inst.weights.travel * tour.length + inst.weights.overtime * overtime;
    for (c, &s) in classes.iter().zip(&served) {
        objective += s as f64 * (c.serve - c.idle);
    }
    DayOnePlan {
        served,
        route: tour.order.iter().map(|&n| n - 1).collect(),
        travel: tour.length,
        overtime,
        objective,
        exact,
    }
}

/// Candidate units of one service type, best gain first.
struct TypeUnits {
    e: f64,
    /// `(class index, count, gain)` sorted by gain descending, then index.
    runs: Vec<(usize, u32, f64)>,
}

impl TypeUnits {
    fn total(&self) -> u32 {
        self.runs.iter().map(|r| r.1).sum()
    }

    /// Sum of the `n` largest gains.
    fn prefix(&self, mut n: u32) -> f64 {
        let mut total = 0.0;
        for &(_, count, gain) in &self.runs {
            let take = count.min(n);
            total += take as f64 * gain;
            n -= take;
            if n == 0 {
                break;
            }
        }
        total
    }
}

fn group_by_type(inst: &ProblemInstance, classes: &[UnitClass], allowed: impl Fn(usize) -> bool) -> Vec<TypeUnits> {
    let mut out: Vec<TypeUnits> = Vec::new();
    let mut kinds: Vec<usize> = classes.iter().map(|c| c.kind).collect();
    kinds.sort_unstable();
    kinds.dedup();
    for k in kinds {
        let mut runs: Vec<(usize, u32, f64)> = classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == k && c.count > 0 && c.gain() > TOL && allowed(c.region))
            .map(|(i, c)| (i, c.count, c.gain()))
            .collect();
        if runs.is_empty() {
            continue;
        }
        runs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        out.push(TypeUnits { e: inst.service(k).service_time, runs });
    }
    out
}

/// Best per-type counts for a fixed travel time. Returns `(net gain, counts)`.
fn best_counts(inst: &ProblemInstance, types: &[TypeUnits], travel: f64) -> Option<(f64, Vec<u32>)> {
    let limit = inst.shift + inst.overtime_cap - travel;
    if limit < -1e-9 {
        return None;
    }
    let free = inst.shift - travel;
    let u = inst.weights.overtime;
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut counts = vec![0u32; types.len()];
    fn rec(
        i: usize,
        used: f64,
        acc: f64,
        types: &[TypeUnits],
        counts: &mut Vec<u32>,
        limit: f64,
        free: f64,
        u: f64,
        best: &mut Option<(f64, Vec<u32>)>,
    ) {
        if i == types.len() {
            let value = acc - u * (used - free).max(0.0);
            if best.as_ref().is_none_or(|b| value > b.0 + TOL) {
                *best = Some((value, counts.clone()));
            }
            return;
        }
        let t = &types[i];
        let most = t.total().min(((limit - used) / t.e + 1e-9).floor().max(0.0) as u32);
        for n in 0..=most {
            counts[i] = n;
            rec(i + 1, used + n as f64 * t.e, acc + t.prefix(n), types, counts, limit, free, u, best);
        }
        counts[i] = 0;
    }
    rec(0, 0.0, 0.0, types, &mut counts, limit, free, u, &mut best);
    best
}

fn expand(classes: &[UnitClass], types: &[TypeUnits], counts: &[u32]) -> Vec<u32> {
    let mut served = vec![0u32; classes.len()];
    for (t, &n) in types.iter().zip(counts) {
        let mut left = n;
        for &(idx, count, _) in &t.runs {
            let take = count.min(left);
            served[idx] += take;
            left -= take;
        }
    }
    served
}

fn exact_selection(inst: &ProblemInstance, classes: &[UnitClass], regions: &[usize], dist: &[Vec<f64>]) -> Vec<u32> {
    if regions.is_empty() {
        return vec![0; classes.len()];
    }
    let nodes: Vec<usize> = regions.iter().map(|&l| l + 1).collect();
    let table = subset_tour_lengths(&nodes, dist).expect("within exact limit");
    let q = inst.weights.travel;
    let mut best_value = 0.0;
    let mut best: Vec<u32> = vec![0; classes.len()];
    for mask in 1usize..(1 << regions.len()) {
        let travel = table[mask];
        let allowed = |l: usize| regions.binary_search(&l).is_ok_and(|p| mask & (1 << p) != 0);
        let types = group_by_type(inst, classes, allowed);
        let Some((gain, counts)) = best_counts(inst, &types, travel) else { continue };
        let value = q * travel - gain;
        if value < best_value - TOL {
            best_value = value;
            best = expand(classes, &types, &counts);
        }
    }
    best
}

fn heuristic_selection(inst: &ProblemInstance, classes: &[UnitClass], regions: &[usize], dist: &[Vec<f64>]) -> Vec<u32> {
    let q = inst.weights.travel;
    let evaluate = |set: &[usize]| -> Option<(f64, Vec<u32>)> {
        let nodes: Vec<usize> = set.iter().map(|&l| l + 1).collect();
        let travel = heuristic_tour(&nodes, dist).length;
        let types = group_by_type(inst, classes, |l| set.binary_search(&l).is_ok());
        let (gain, counts) = best_counts(inst, &types, travel)?;
        Some((q * travel - gain, expand(classes, &types, &counts)))
    };
    let mut current: Vec<usize> = regions.to_vec();
    // Drop regions farthest first until the route alone fits the shift.
    while evaluate(&current).is_none() && !current.is_empty() {
        let far = (0..current.len()).max_by(|&a, &b| dist[0][current[a] + 1].total_cmp(&dist[0][current[b] + 1])).expect("nonempty");
        current.remove(far);
    }
    let mut best = evaluate(&current).unwrap_or((0.0, vec![0; classes.len()]));
    loop {
        let mut improved = false;
        for i in 0..current.len() {
            let mut trial = current.clone();
            trial.remove(i);
            if let Some(v) = evaluate(&trial) {
                if v.0 < best.0 - TOL {
                    best = v;
                    current = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    if best.0 > 0.0 {
        return vec![0; classes.len()];
    }
    best.1
}
