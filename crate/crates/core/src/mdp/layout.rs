use serde::{Deserialize, Serialize};

use crate::instance::ServiceType;

/// Dimensions of one service type inside the flattened state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDims {
    pub pattern: usize,
    pub wait_target: usize,
    pub visits: usize,
    offset: usize,
}

/// A booked-visit coordinate `(t, k, l, j)` with `t` one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct XCoord {
    pub t: usize,
    pub k: usize,
    pub l: usize,
    pub j: usize,
}

/// Indexing of `x[t][k][l][j]` and `y[k][l]` into flat vectors.
///
/// For type `k` the block of `x` holds `T × L × J_k` entries ordered by
/// day, then region, then visits completed. Structurally-zero positions are
/// kept in the vector so that indexing stays arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub horizon: usize,
    pub regions: usize,
    dims: Vec<TypeDims>,
    x_len: usize,
}

impl Layout {
    pub fn new(regions: usize, services: &[ServiceType]) -> Self {
        let horizon = services.iter().map(|s| s.pattern.max(s.wait_target)).max().unwrap_or(1);
        let mut offset = 0;
        let dims = services
            .iter()
            .map(|s| {
                let d = TypeDims { pattern: s.pattern, wait_target: s.wait_target, visits: s.max_visits(), offset };
                offset += horizon * regions * d.visits;
                d
            })
            .collect();
        Self { horizon, regions, dims, x_len: offset }
    }

    pub fn types(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self, k: usize) -> &TypeDims {
        &self.dims[k]
    }

    pub fn x_len(&self) -> usize {
        self.x_len
    }

    pub fn y_len(&self) -> usize {
        self.dims.len() * self.regions
    }

    #[inline]
    pub fn x_index(&self, t: usize, k: usize, l: usize, j: usize) -> usize {
        let d = &self.dims[k];
        debug_assert!(t >= 1 && t <= self.horizon && l < self.regions && j < d.visits);
        d.offset + ((t - 1) * self.regions + l) * d.visits + j
    }

    #[inline]
    pub fn y_index(&self, k: usize, l: usize) -> usize {
        k * self.regions + l
    }

    /// Coordinates of a flat `x` index.
    pub fn decode(&self, idx: usize) -> XCoord {
        let k = self.dims.iter().rposition(|d| d.offset <= idx).expect("index in range");
        let d = &self.dims[k];
        let rel = idx - d.offset;
        let j = rel % d.visits;
        let rest = rel / d.visits;
        XCoord { t: rest / self.regions + 1, k, l: rest % self.regions, j }
    }

    /// Whether `x[t][k][·][j]` is structurally zero: later-than-pattern days
    /// for returning patients, or days at or past the wait target for new ones.
    #[inline]
    pub fn is_structural_zero(&self, t: usize, k: usize, j: usize) -> bool {
        let d = &self.dims[k];
        (t > d.pattern && j >= 1) || (t >= d.wait_target && j == 0)
    }

    /// All coordinates that are not structurally zero, in flat-index order.
    pub fn free_coords(&self) -> impl Iterator<Item = (usize, XCoord)> + '_ {
        (0..self.x_len).filter_map(move |idx| {
            let c = self.decode(idx);
            (!self.is_structural_zero(c.t, c.k, c.j)).then_some((idx, c))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::VisitCountDist;

    fn services() -> Vec<ServiceType> {
        vec![
            ServiceType::new(2, 0.5, 3, VisitCountDist::Deterministic { visits: 3 }).unwrap(),
            ServiceType::new(1, 0.25, 1, VisitCountDist::Uniform { max: 2 }).unwrap(),
        ]
    }

    #[test]
    fn index_roundtrip() {
        let lay = Layout::new(4, &services());
        assert_eq!(lay.horizon, 3);
        assert_eq!(lay.x_len(), 3 * 4 * 3 + 3 * 4 * 2);
        for idx in 0..lay.x_len() {
            let c = lay.decode(idx);
            assert_eq!(lay.x_index(c.t, c.k, c.l, c.j), idx);
        }
    }

    #[test]
    fn structural_zeros() {
        let lay = Layout::new(1, &services());
        // h = 2, T = 3: day 3 returning patients and days >= 3 for new ones.
        assert!(!lay.is_structural_zero(2, 0, 1));
        assert!(lay.is_structural_zero(3, 0, 1));
        assert!(!lay.is_structural_zero(2, 0, 0));
        assert!(lay.is_structural_zero(3, 0, 0));
        // T_k = 1: no pending first visits at all.
        assert!(lay.is_structural_zero(1, 1, 0));
        assert!(!lay.is_structural_zero(1, 1, 1));
        assert!(lay.is_structural_zero(2, 1, 1));
    }
}
