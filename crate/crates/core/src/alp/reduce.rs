use super::params::AlpParams;
use crate::error::Result;
use crate::instance::{Geometry, ProblemInstance};

/// A one-dimensional proxy of an instance: one region per distinct depot
/// distance.
#[derive(Debug, Clone)]
pub struct Projection {
    pub proxy: ProblemInstance,
    /// Original regions of each proxy region, nearest class first.
    pub classes: Vec<Vec<usize>>,
}

impl Projection {
    /// Class size of every proxy region.
    pub fn weights(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.len() as f64).collect()
    }

    /// Proxy region of every original region.
    pub fn class_of(&self) -> Vec<usize> {
        let n: usize = self.classes.iter().map(Vec::len).sum();
        let mut out = vec![0; n];
        for (i, class) in self.classes.iter().enumerate() {
            for &l in class {
                out[l] = i;
            }
        }
        out
    }
}

/// Merges regions with equal depot distance into single points on a line.
///
/// Arrival rates are summed per class and per-region state caps are scaled
/// by class size so that the merged referral flow stays representable.
pub fn project_to_1d(inst: &ProblemInstance) -> Result<Projection> {
    let classes = inst.geometry.distance_classes();
    let distances: Vec<f64> = classes.iter().map(|c| inst.geometry.depot_distance(c[0])).collect();
    let mut spec = inst.spec();
    spec.geometry = Geometry::line(&distances)?;
    spec.arrival_rates = (0..inst.types()).map(|k| classes.iter().map(|c| c.iter().map(|&l| inst.rate(k, l)).sum()).collect()).collect();
    let size = |c: &Vec<usize>| c.len() as u32;
    let x_caps = classes.iter().map(|c| c.iter().map(|&l| inst.x_cap(l)).max().unwrap_or(0) * size(c)).collect();
    let y_caps = classes.iter().map(|c| c.iter().map(|&l| inst.y_cap(l)).max().unwrap_or(0) * size(c)).collect();
    let proxy = ProblemInstance::with_region_caps(spec, x_caps, y_caps)?;
    Ok(Projection { proxy, classes })
}

/// Copies proxy parameters to every original region of the class.
pub fn lift(params: &AlpParams, projection: &Projection, inst: &ProblemInstance) -> AlpParams {
    let lay = inst.layout();
    let play = projection.proxy.layout();
    let class_of = projection.class_of();
    let mut tau = vec![0.0; lay.x_len()];
    for (idx, c) in lay.free_coords() {
        tau[idx] = params.tau[play.x_index(c.t, c.k, class_of[c.l], c.j)];
    }
    let mut rho = vec![0.0; lay.y_len()];
    for k in 0..inst.types() {
        for l in 0..inst.regions() {
            rho[lay.y_index(k, l)] = params.rho[play.y_index(k, class_of[l])];
        }
    }
    AlpParams { eta: params.eta, tau, rho, meta: params.meta.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CostWeights, InstanceSpec, ServiceType, VisitCountDist};

    fn on(geometry: Geometry) -> ProblemInstance {
        let l = geometry.region_count();
        ProblemInstance::new(InstanceSpec {
            geometry,
            services: vec![ServiceType::new(1, 0.5, 2, VisitCountDist::Deterministic { visits: 2 }).unwrap()],
            arrival_rates: vec![(0..l).map(|i| 0.1 * (i + 1) as f64).collect()],
            shift: 8.0,
            overtime_cap: 0.0,
            weights: CostWeights::default(),
            gamma: 0.99,
            x_cap: 5,
            y_cap: 5,
        })
        .unwrap()
    }

    #[test]
    fn circular_three_rings() {
        let inst = on(Geometry::circular(3, 0.5).unwrap());
        let p = project_to_1d(&inst).unwrap();
        assert_eq!(p.proxy.regions(), 3);
        let ring1: f64 = p.classes[0].iter().map(|&l| inst.rate(0, l)).sum();
        assert_eq!(p.classes[0].len(), 4);
        assert!((p.proxy.rate(0, 0) - ring1).abs() < 1e-12);
        for (i, c) in p.classes.iter().enumerate() {
            assert!((p.proxy.geometry.depot_distance(i) - inst.geometry.depot_distance(c[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn rectangle_classes() {
        let inst = on(Geometry::rectangular(2, 3, 0.5).unwrap());
        let p = project_to_1d(&inst).unwrap();
        let mut distinct: Vec<f64> = (0..6).map(|l| inst.geometry.depot_distance(l)).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(p.proxy.regions(), distinct.len());
        assert_eq!(p.classes.iter().map(Vec::len).sum::<usize>(), 6);
    }

    #[test]
    fn single_region_is_identity() {
        let inst = on(Geometry::rectangular(1, 1, 0.5).unwrap());
        let p = project_to_1d(&inst).unwrap();
        assert_eq!(p.classes, vec![vec![0]]);
        assert_eq!(p.proxy.rate(0, 0), inst.rate(0, 0));
        assert_eq!(p.proxy.x_cap(0), inst.x_cap(0));
    }
}
