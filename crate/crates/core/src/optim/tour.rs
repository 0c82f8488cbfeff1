//! Exact shortest depot tours by Held-Karp dynamic programming.

use crate::error::{Error, Result};

/// Largest subset accepted by the exact solvers.
pub const MAX_TOUR_NODES: usize = 20;

const TIE: f64 = 1e-9;

/// A closed tour starting and ending at the depot (node 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    /// Visit order of the non-depot nodes.
    pub order: Vec<usize>,
    pub length: f64,
}

/// Shortest closed tour from the depot through every node of `subset`.
///
/// `dist` is a full node distance matrix with the depot at index 0. Among
/// tours of equal length (within 1e-9) the lexicographically smallest visit
/// order is returned.
pub fn optimal_tour(subset: &[usize], dist: &[Vec<f64>]) -> Result<Tour> {
    let mut nodes = subset.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    nodes.retain(|&n| n != 0);
    let n = nodes.len();
    if n > MAX_TOUR_NODES {
        return Err(Error::TourTooLarge(n));
    }
    if n == 0 {
        return Ok(Tour { order: Vec::new(), length: 0.0 });
    }
    let full = (1usize << n) - 1;
    // g[s][j]: shortest path that starts at node j, visits the set s (which
    // excludes j) and returns to the depot.
    let mut g = vec![f64::INFINITY; (full + 1) * n];
    for j in 0..n {
        g[j] = dist[nodes[j]][0];
    }
    for s in 1..=full {
        for j in 0..n {
            if s & (1 << j) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut rest = s;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let v = dist[nodes[j]][nodes[i]] + g[(s & !(1 << i)) * n + i];
                if v < best {
                    best = v;
                }
            }
            g[s * n + j] = best;
        }
    }
    let length = (0..n).map(|j| dist[0][nodes[j]] + g[(full & !(1 << j)) * n + j]).fold(f64::INFINITY, f64::min);
    // Forward reconstruction: smallest node index achieving the optimum.
    let mut order = Vec::with_capacity(n);
    let mut remaining = full;
    let mut at = 0usize;
    let mut spent = 0.0;
    while remaining != 0 {
        let mut pick = None;
        for j in 0..n {
            if remaining & (1 << j) == 0 {
                continue;
            }
            let v = spent + dist[at][nodes[j]] + g[(remaining & !(1 << j)) * n + j];
            if v <= length + TIE * (1.0 + length) {
                pick = Some(j);
                break;
            }
        }
        let j = pick.expect("a tight successor always exists");
        spent += dist[at][nodes[j]];
        at = nodes[j];
        remaining &= !(1 << j);
        order.push(nodes[j]);
    }
    Ok(Tour { order, length })
}

/// Optimal tour lengths of every subset of `nodes`, indexed by bitmask over
/// positions in `nodes`.
pub fn subset_tour_lengths(nodes: &[usize], dist: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = nodes.len();
    if n > MAX_TOUR_NODES {
        return Err(Error::TourTooLarge(n));
    }
    let size = 1usize << n;
    // f[s][j]: shortest depot path visiting exactly s and ending at j ∈ s.
    let mut f = vec![f64::INFINITY; size * n.max(1)];
    let mut out = vec![0.0; size];
    for j in 0..n {
        f[(1 << j) * n + j] = dist[0][nodes[j]];
    }
    for s in 1..size {
        let mut best = f64::INFINITY;
        let mut members = s;
        while members != 0 {
            let j = members.trailing_zeros() as usize;
            members &= members - 1;
            let prev = s & !(1 << j);
            if prev != 0 {
                let mut v = f64::INFINITY;
                let mut rest = prev;
                while rest != 0 {
                    let i = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    v = v.min(f[prev * n + i] + dist[nodes[i]][nodes[j]]);
                }
                f[s * n + j] = v;
            }
            best = best.min(f[s * n + j] + dist[nodes[j]][0]);
        }
        out[s] = best;
    }
    Ok(out)
}

/// Nearest-neighbour construction followed by 2-opt improvement. Used when
/// a subset is too large for [`optimal_tour`]; the result is not guaranteed
/// optimal.
pub fn heuristic_tour(subset: &[usize], dist: &[Vec<f64>]) -> Tour {
    let mut left: Vec<usize> = subset.iter().copied().filter(|&n| n != 0).collect();
    left.sort_unstable();
    left.dedup();
    let mut order = Vec::with_capacity(left.len());
    let mut at = 0;
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| dist[at][*a.1].total_cmp(&dist[at][*b.1]).then(a.1.cmp(b.1)))
            .expect("nonempty");
        at = left.remove(pos);
        order.push(at);
    }
    let node = |order: &[usize], i: usize| if i == 0 || i > order.len() { 0 } else { order[i - 1] };
    let mut improved = true;
    while improved {
        improved = false;
        let n = order.len();
        for i in 1..n {
            for j in i + 1..=n {
                let (a, b) = (node(&order, i - 1), node(&order, i));
                let (c, d) = (node(&order, j), node(&order, j + 1));
                let delta = dist[a][c] + dist[b][d] - dist[a][b] - dist[c][d];
                if delta < -TIE {
                    order[i - 1..j].reverse();
                    improved = true;
                }
            }
        }
    }
    let length = tour_length(&order, dist);
    Tour { order, length }
}

/// Length of the closed depot tour visiting `order`.
pub fn tour_length(order: &[usize], dist: &[Vec<f64>]) -> f64 {
    let mut at = 0;
    let mut len = 0.0;
    for &v in order {
        len += dist[at][v];
        at = v;
    }
    len + dist[at][0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn euclid(points: &[(f64, f64)]) -> Vec<Vec<f64>> {
        points.iter().map(|a| points.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect()).collect()
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for (i, &x) in items.iter().enumerate() {
            let mut rest = items.to_vec();
            rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    fn brute(subset: &[usize], dist: &[Vec<f64>]) -> f64 {
        permutations(subset)
            .into_iter()
            .map(|p| {
                let mut at = 0;
                let mut len = 0.0;
                for &v in &p {
                    len += dist[at][v];
                    at = v;
                }
                len + dist[at][0]
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn square_corners() {
        let d = euclid(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let t = optimal_tour(&[3, 1, 2], &d).unwrap();
        assert!((t.length - 4.0).abs() < 1e-12);
        assert_eq!(t.order, vec![1, 2, 3]);
    }

    #[test]
    fn empty_and_single() {
        let d = euclid(&[(0.0, 0.0), (3.0, 4.0)]);
        assert_eq!(optimal_tour(&[], &d).unwrap().length, 0.0);
        assert!((optimal_tour(&[1], &d).unwrap().length - 10.0).abs() < 1e-12);
    }

    #[test]
    fn heuristic_is_a_valid_tour() {
        let pts: Vec<(f64, f64)> = (0..9).map(|i| ((i * 7 % 5) as f64, (i * 3 % 4) as f64)).collect();
        let d = euclid(&pts);
        let subset: Vec<usize> = (1..9).collect();
        let h = heuristic_tour(&subset, &d);
        let mut sorted = h.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, subset);
        assert!(h.length + 1e-9 >= optimal_tour(&subset, &d).unwrap().length);
    }

    #[test]
    fn too_large() {
        let d = vec![vec![0.0; 22]; 22];
        let subset: Vec<usize> = (1..22).collect();
        assert!(matches!(optimal_tour(&subset, &d), Err(Error::TourTooLarge(21))));
    }

    proptest! {
        #[test]
        fn matches_permutation_oracle(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..8)) {
            let mut all = vec![(5.0, 5.0)];
            all.extend(pts);
            let d = euclid(&all);
            let subset: Vec<usize> = (1..all.len()).collect();
            let t = optimal_tour(&subset, &d).unwrap();
            prop_assert!((t.length - brute(&subset, &d)).abs() < 1e-9);
            let mut at = 0;
            let mut len = 0.0;
            for &v in &t.order { len += d[at][v]; at = v; }
            len += d[at][0];
            prop_assert!((len - t.length).abs() < 1e-9);
            let table = subset_tour_lengths(&subset, &d).unwrap();
            for mask in 0..table.len() {
                let s: Vec<usize> = (0..subset.len()).filter(|i| mask & (1 << i) != 0).map(|i| subset[i]).collect();
                prop_assert!((table[mask] - brute(&s, &d)).abs() < 1e-9);
            }
        }
    }
}
