//! Exact dynamic program of the perfect-information relaxation.

use std::collections::HashMap;

use super::{PathReferral, RealizedState, SamplePath};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::optim::subset_tour_lengths;

/// Default bound on the number of distinct states kept per day.
pub const DEFAULT_LAYER_CAP: usize = 2_000_000;

const TIME_TOL: f64 = 2e-9;

/// Cheapest diversion, overtime and travel cost of serving given day-1
/// visit counts, over every choice of diverted visits and the optimal tour
/// through the remaining regions. Results are memoised per count vector.
#[derive(Debug, Clone)]
pub struct DayCoster<'a> {
    inst: &'a ProblemInstance,
    /// Optimal tour length per bitmask of regions.
    tours: Vec<f64>,
    memo: HashMap<Vec<u32>, f64>,
}

impl<'a> DayCoster<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Result<Self> {
        let nodes: Vec<usize> = (1..=inst.regions()).collect();
        let tours = subset_tour_lengths(&nodes, &inst.geometry.distance_matrix())?;
        Ok(Self { inst, tours, memo: HashMap::new() })
    }

    /// `loads` uses the `y` layout. Diverting everything is always
    /// feasible, so the result is finite.
    pub fn cost(&mut self, loads: &[u32]) -> f64 {
        if let Some(&c) = self.memo.get(loads) {
            return c;
        }
        let c = self.compute(loads);
        self.memo.insert(loads.to_vec(), c);
        c
    }

    fn compute(&self, loads: &[u32]) -> f64 {
        let inst = self.inst;
        let (kc, lc) = (inst.types(), inst.regions());
        let w = &inst.weights;
        let limit = inst.shift + inst.overtime_cap + TIME_TOL;
        let work: u32 = (0..lc).filter(|&l| (0..kc).any(|k| loads[k * lc + l] > 0)).fold(0, |m, l| m | 1 << l);
        let mut best = f64::INFINITY;
        // Every subset of the regions with work, as the set actually visited.
        let mut s = work;
        loop {
            let travel = self.tours[s as usize];
            if travel <= limit {
                let mut outside = 0.0;
                let mut n = vec![0u32; kc];
                for k in 0..kc {
                    for l in 0..lc {
                        let v = loads[k * lc + l];
                        if s >> l & 1 == 1 {
                            n[k] += v;
                        } else {
                            outside += inst.diversion_cost(k) * v as f64;
                        }
                    }
                }
                let base = outside + w.travel * travel;
                let mut c = vec![0u32; kc];
                loop {
                    if covers(s, &c, loads, kc, lc) {
                        let service: f64 = (0..kc).map(|k| inst.service(k).service_time * c[k] as f64).sum();
                        let total = travel + service;
                        if total <= limit {
                            let divert: f64 = (0..kc).map(|k| inst.diversion_cost(k) * (n[k] - c[k]) as f64).sum();
                            best = best.min(base + divert + w.overtime * (total - inst.shift).max(0.0));
                        }
                    }
                    if !next_vector(&mut c, &n) {
                        break;
                    }
                }
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & work;
        }
        best
    }
}

/// Odometer increment of `c` within `0..=n`; false after the last vector.
fn next_vector(c: &mut [u32], n: &[u32]) -> bool {
    for (ci, &ni) in c.iter_mut().zip(n) {
        if *ci < ni {
            *ci += 1;
            return true;
        }
        *ci = 0;
    }
    false
}

/// Whether `c[k]` kept visits per type can give every region in `s` at
/// least one kept visit (max-flow/min-cut check over region subsets).
fn covers(s: u32, c: &[u32], loads: &[u32], kc: usize, lc: usize) -> bool {
    let mut a = s;
    while a != 0 {
        let supply: u32 = (0..kc)
            .map(|k| c[k].min((0..lc).filter(|&l| a >> l & 1 == 1 && loads[k * lc + l] > 0).count() as u32))
            .sum();
        if supply < a.count_ones() {
            return false;
        }
        a = (a - 1) & s;
    }
    true
}

/// Patient `(k, l, t, remaining)` packed into one word.
fn code(k: usize, l: usize, t: usize, rem: usize) -> u32 {
    (k as u32) << 24 | (l as u32) << 16 | (t as u32) << 8 | rem as u32
}

fn fields(c: u32) -> (usize, usize, usize, usize) {
    ((c >> 24) as usize, (c >> 16 & 0xff) as usize, (c >> 8 & 0xff) as usize, (c & 0xff) as usize)
}

/// The code after one day, `None` when the patient is discharged.
fn step(c: u32, patterns: &[usize]) -> Option<u32> {
    let (k, l, t, rem) = fields(c);
    if t == 1 {
        (rem > 1).then(|| code(k, l, patterns[k], rem - 1))
    } else {
        Some(code(k, l, t - 1, rem))
    }
}

/// One joint decision on a day's referrals.
struct Combo {
    reject_cost: f64,
    /// `(y index, count)` assigned to day 1.
    day_one: Vec<(usize, u32)>,
    /// Codes of accepted referrals as of tomorrow.
    next: Vec<u32>,
}

/// Joint decisions on `referrals`. Referrals sharing type, region and visit
/// count are interchangeable, so only how many of each go to each option is
/// enumerated.
fn combos(referrals: &[PathReferral], inst: &ProblemInstance, patterns: &[usize]) -> Vec<Combo> {
    let mut groups: Vec<(PathReferral, u32)> = Vec::new();
    for r in referrals {
        match groups.iter_mut().find(|(g, _)| g == r) {
            Some((_, m)) => *m += 1,
            None => groups.push((*r, 1)),
        }
    }
    groups.sort_by_key(|(g, _)| (g.k, g.l, g.visits));
    let mut out = vec![Combo { reject_cost: 0.0, day_one: Vec::new(), next: Vec::new() }];
    for (g, m) in groups {
        let wait = inst.service(g.k).wait_target;
        let yi = g.k * inst.regions() + g.l;
        let mut split = vec![0u32; wait + 1];
        let mut options = Vec::new();
        compositions(m, &mut split, 0, &mut |split| {
            let mut next = Vec::new();
            for (t, &n) in split.iter().enumerate().skip(1) {
                for _ in 0..n {
                    if let Some(c) = step(code(g.k, g.l, t, g.visits), patterns) {
                        next.push(c);
                    }
                }
            }
            options.push((split[0], split.get(1).copied().unwrap_or(0), next));
        });
        let r = inst.rejection_cost(g.k);
        out = out
            .iter()
            .flat_map(|c| {
                options.iter().map(move |(rej, one, next)| {
                    let mut day_one = c.day_one.clone();
                    if *one > 0 {
                        day_one.push((yi, *one));
                    }
                    Combo {
                        reject_cost: c.reject_cost + r * *rej as f64,
                        day_one,
                        next: c.next.iter().chain(next).copied().collect(),
                    }
                })
            })
            .collect();
    }
    out
}

/// Calls `f` with every way of writing `m` as an ordered sum over `split`.
fn compositions(m: u32, split: &mut Vec<u32>, at: usize, f: &mut dyn FnMut(&[u32])) {
    if at + 1 == split.len() {
        split[at] = m;
        f(split);
        return;
    }
    for v in 0..=m {
        split[at] = v;
        compositions(m - v, split, at + 1, f);
    }
}

/// `v^G_0(s_0)`: the least total undiscounted cost of days `0..T̄` when the
/// path, the initial patients' visit counts and every referral's visit
/// count are known in advance.
///
/// Patients are tracked as `(type, region, next day, visits left)`; states
/// that agree on this multiset are merged. Fails with
/// [`Error::StateLayerCap`] when a day holds more than `cap` states.
pub fn perfect_info_value(start: &RealizedState, path: &SamplePath, inst: &ProblemInstance, cap: usize) -> Result<f64> {
    let mut coster = DayCoster::new(inst)?;
    perfect_info_value_with(start, path, inst, cap, &mut coster)
}

pub(crate) fn perfect_info_value_with(
    start: &RealizedState,
    path: &SamplePath,
    inst: &ProblemInstance,
    cap: usize,
    coster: &mut DayCoster,
) -> Result<f64> {
    if inst.types() > 255 || inst.regions() > 255 || (0..inst.types()).any(|k| inst.service(k).max_visits() > 255) {
        return Err(Error::Precondition("relaxation supports at most 255 types, regions and visits".into()));
    }
    if path.arrivals.len() != path.absorption || path.absorption == 0 {
        return Err(Error::Precondition("path needs T̄ ≥ 1 and one arrival list per day".into()));
    }
    let patterns: Vec<usize> = (0..inst.types()).map(|k| inst.service(k).pattern).collect();
    let lc = inst.regions();
    let mut first: Vec<u32> = start.patients.iter().map(|p| code(p.k, p.l, p.t, p.remaining())).collect();
    first.sort_unstable();
    let mut layer: HashMap<Vec<u32>, f64> = HashMap::from([(first, 0.0)]);
    let mut best = f64::INFINITY;
    for day in 0..path.absorption {
        let referrals = if day == 0 { &start.referrals } else { &path.arrivals[day] };
        let options = combos(referrals, inst, &patterns);
        let last = day + 1 == path.absorption;
        let mut next: HashMap<Vec<u32>, f64> = HashMap::new();
        for (key, &v) in &layer {
            let mut loads = vec![0u32; inst.types() * lc];
            let mut carried = Vec::with_capacity(key.len());
            for &c in key {
                let (k, l, t, _) = fields(c);
                if t == 1 {
                    loads[k * lc + l] += 1;
                }
                carried.extend(step(c, &patterns));
            }
            for o in &options {
                let mut today = loads.clone();
                for &(yi, n) in &o.day_one {
                    today[yi] += n;
                }
                let total = v + o.reject_cost + coster.cost(&today);
                if last {
                    best = best.min(total);
                    continue;
                }
                let mut nk: Vec<u32> = carried.iter().chain(&o.next).copied().collect();
                nk.sort_unstable();
                next.entry(nk).and_modify(|e| *e = e.min(total)).or_insert(total);
            }
        }
        if !last {
            if next.len() > cap {
                return Err(Error::StateLayerCap { day: day + 1, size: next.len(), cap });
            }
            layer = next;
        }
    }
    Ok(best)
}
