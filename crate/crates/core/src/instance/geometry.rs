use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of regions a geometry may hold.
pub const MAX_REGIONS: usize = 400;

/// Layout of the service area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Diamond of unit cells around a central depot.
    Circular { rings: usize },
    /// Grid of cells with the depot on a corner vertex.
    Rectangular { rows: usize, cols: usize },
    /// One row of regions leading away from the depot.
    Line,
}

/// Regions, their centres and the travel-time matrix.
///
/// Node `0` is the depot and node `l + 1` is region `l`, so region indices
/// used elsewhere in the crate are zero-based while distance lookups go
/// through [`Geometry::node_distance`] or the region helpers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub shape: Shape,
    /// Hours needed to cross one cell.
    pub cell_length: f64,
    /// Centres in cell units, depot at the origin.
    pub centers: Vec<[f64; 2]>,
    nodes: usize,
    dist: Vec<f64>,
}

impl Geometry {
    /// Builds a circular (diamond) area with `rings` rings whose
    /// depot-to-border distance is half the diameter.
    pub fn circular(rings: usize, diameter: f64) -> Result<Self> {
        if rings == 0 {
            return Err(Error::InvalidInstance("circular area needs at least one ring".into()));
        }
        check_diameter(diameter)?;
        let count = 2 * rings * (rings + 1);
        check_count(count)?;
        let mut centers = Vec::with_capacity(count);
        for ring in 1..=rings {
            // Cells whose far corner is `ring` cells from the depot, walked
            // by quadrant so that ring 1 comes first and each ring is contiguous.
            for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
                for a in 0..ring {
                    let b = ring - 1 - a;
                    centers.push([sx * (a as f64 + 0.5), sy * (b as f64 + 0.5)]);
                }
            }
        }
        let cell_length = diameter / 2.0 / rings as f64;
        Ok(Self::from_centers(Shape::Circular { rings }, cell_length, centers))
    }

    /// Builds a `rows × cols` grid. The diameter is the largest
    /// depot-to-centre Manhattan extent, so the cell length is
    /// `diameter / (rows + cols)`.
    pub fn rectangular(rows: usize, cols: usize, diameter: f64) -> Result<Self> {
        check_diameter(diameter)?;
        Self::rectangular_with_cell(rows, cols, diameter / (rows + cols) as f64)
    }

    /// Builds a `rows × cols` grid with an explicit cell length in hours.
    pub fn rectangular_with_cell(rows: usize, cols: usize, cell_length: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInstance("rectangular area needs rows, cols >= 1".into()));
        }
        if !(cell_length > 0.0 && cell_length.is_finite()) {
            return Err(Error::InvalidInstance(format!("cell length must be positive, got {cell_length}")));
        }
        check_count(rows * cols)?;
        let mut centers = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                centers.push([c as f64 + 0.5, r as f64 + 0.5]);
            }
        }
        Ok(Self::from_centers(Shape::Rectangular { rows, cols }, cell_length, centers))
    }

    /// Builds a one-dimensional array from depot distances in hours.
    pub fn line(depot_distances: &[f64]) -> Result<Self> {
        if depot_distances.is_empty() {
            return Err(Error::InvalidInstance("line needs at least one region".into()));
        }
        check_count(depot_distances.len())?;
        if depot_distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidInstance("line distances must be finite and nonnegative".into()));
        }
        let centers = depot_distances.iter().map(|&d| [d, 0.0]).collect();
        Ok(Self::from_centers(Shape::Line, 1.0, centers))
    }

    fn from_centers(shape: Shape, cell_length: f64, centers: Vec<[f64; 2]>) -> Self {
        let nodes = centers.len() + 1;
        let point = |i: usize| if i == 0 { [0.0, 0.0] } else { centers[i - 1] };
        let mut dist = vec![0.0; nodes * nodes];
        for i in 0..nodes {
            for j in 0..nodes {
                let (a, b) = (point(i), point(j));
                dist[i * nodes + j] = cell_length * ((a[0] - b[0]).abs() + (a[1] - b[1]).abs());
            }
        }
        Self { shape, cell_length, centers, nodes, dist }
    }

    /// Number of regions `L`.
    pub fn region_count(&self) -> usize {
        self.nodes - 1
    }

    /// Travel time between nodes, where node 0 is the depot.
    #[inline]
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.nodes + b]
    }

    /// Travel time from the depot to region `l`.
    #[inline]
    pub fn depot_distance(&self, l: usize) -> f64 {
        self.dist[l + 1]
    }

    /// Travel time between regions `a` and `b`.
    #[inline]
    pub fn region_distance(&self, a: usize, b: usize) -> f64 {
        self.node_distance(a + 1, b + 1)
    }

    /// The full node matrix, row-major over `L + 1` nodes.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.nodes).map(|i| self.dist[i * self.nodes..(i + 1) * self.nodes].to_vec()).collect()
    }

    /// Regions grouped by depot distance, nearest group first. Regions in a
    /// group keep ascending index order.
    pub fn distance_classes(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.region_count()).collect();
        order.sort_by(|&a, &b| self.depot_distance(a).total_cmp(&self.depot_distance(b)).then(a.cmp(&b)));
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for l in order {
            match classes.last_mut() {
                Some(class) if (self.depot_distance(class[0]) - self.depot_distance(l)).abs() <= 1e-9 => class.push(l),
                _ => classes.push(vec![l]),
            }
        }
        for class in &mut classes {
            class.sort_unstable();
        }
        classes
    }
}

fn check_diameter(diameter: f64) -> Result<()> {
    if diameter > 0.0 && diameter.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!("diameter must be positive, got {diameter}")))
    }
}

fn check_count(count: usize) -> Result<()> {
    if count > MAX_REGIONS {
        Err(Error::InvalidInstance(format!("{count} regions exceed the cap of {MAX_REGIONS}")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn circular_three_rings() {
        let g = Geometry::circular(3, 0.5).unwrap();
        assert_eq!(g.region_count(), 24);
        let ring1: Vec<f64> = (0..4).map(|l| g.depot_distance(l)).collect();
        for d in ring1 {
            assert!(close(d, 1.0 / 12.0));
        }
        let max = (0..24).map(|l| g.depot_distance(l)).fold(0.0, f64::max);
        assert!(close(max, 0.25));
    }

    #[test]
    fn circular_single_ring() {
        let g = Geometry::circular(1, 0.8).unwrap();
        assert_eq!(g.region_count(), 4);
        for l in 0..4 {
            assert!(close(g.depot_distance(l), 0.4));
        }
    }

    #[test]
    fn circular_rings_form_distance_classes() {
        for rings in 1..=6 {
            let g = Geometry::circular(rings, 1.0).unwrap();
            let sizes: Vec<usize> = g.distance_classes().iter().map(Vec::len).collect();
            let expected: Vec<usize> = (1..=rings).map(|r| 4 * r).collect();
            assert_eq!(sizes, expected);
        }
    }

    #[test]
    fn rectangular_two_by_three() {
        let g = Geometry::rectangular_with_cell(2, 3, 1.0 / 12.0).unwrap();
        assert_eq!(g.centers[0], [0.5, 0.5]);
        assert_eq!(g.centers[5], [2.5, 1.5]);
        assert!(close(g.region_distance(0, 5), 0.25));
        assert!(close(g.depot_distance(0), 1.0 / 12.0));
        let sizes: Vec<usize> = g.distance_classes().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 2, 2, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Geometry::circular(2, 0.0).is_err());
        assert!(Geometry::circular(0, 1.0).is_err());
        assert!(Geometry::rectangular(0, 3, 1.0).is_err());
        assert!(Geometry::circular(20, 1.0).is_err());
    }

    #[test]
    fn metric_axioms() {
        for g in [Geometry::circular(3, 1.0).unwrap(), Geometry::rectangular(3, 4, 2.0).unwrap()] {
            let n = g.region_count() + 1;
            for a in 0..n {
                assert_eq!(g.node_distance(a, a), 0.0);
                for b in 0..n {
                    assert_eq!(g.node_distance(a, b), g.node_distance(b, a));
                    for c in 0..n {
                        assert!(g.node_distance(a, c) <= g.node_distance(a, b) + g.node_distance(b, c) + 1e-12);
                    }
                }
            }
        }
    }
}
