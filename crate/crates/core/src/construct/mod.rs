//! First-solution strategies and tree-based lower bounds.

mod christofides;
mod insertion;
mod mst;
mod savings;

pub use christofides::{
    christofides, christofides_with, double_tree, euler_circuit, min_weight_matching,
    ChristofidesOptions, ChristofidesReport, MatchingMode, EXACT_MATCHING_LIMIT,
};
pub use insertion::{insertion, InsertionStrategy, Scope, Selector};
pub use mst::{kruskal_weight, mst_prim, one_tree_bound, one_tree_bound_max, SpanningTree};
pub use savings::{savings, savings_value};

use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;
use crate::tour::Tour;

pub(crate) fn check_index(index: usize, n: usize) -> Result<()> {
    if index >= n {
        return Err(Error::IndexOutOfRange { index, n });
    }
    Ok(())
}

pub(crate) fn check_min_size(d: &DistanceMatrix, min: usize) -> Result<()> {
    if d.n() < min {
        return Err(Error::SizeOutOfRange {
            n: d.n(),
            min,
            max: usize::MAX,
        });
    }
    Ok(())
}

/// Visits the closest unvisited city at every step (ties go to the lowest index).
pub fn nearest_neighbor(d: &DistanceMatrix, start: usize) -> Result<Tour> {
    let n = d.n();
    check_index(start, n)?;
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for (j, &v) in d.row(cur).iter().enumerate() {
            if !visited[j] && v < best {
                best = v;
                next = j;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    Ok(Tour::from_valid(order, d))
}

/// Disjoint-set forest used by the edge-greedy constructions.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Walks a set of path edges (each vertex degree <= 2, one component) into an order.
pub(crate) fn walk_path(n: usize, adj: &[Vec<usize>], from: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    let mut prev = usize::MAX;
    let mut cur = from;
    loop {
        order.push(cur);
        match adj[cur].iter().find(|&&x| x != prev) {
            Some(&next) if order.len() < n => {
                prev = cur;
                cur = next;
            }
            _ => break,
        }
    }
    order
}

/// Accepts edges cheapest-first unless they would give a vertex degree 3 or close
/// a cycle early; the final Hamiltonian path is closed into a tour.
pub fn greedy_edge(d: &DistanceMatrix) -> Result<Tour> {
    check_min_size(d, 3)?;
    let n = d.n();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((d.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut deg = vec![0u8; n];
    let mut uf = UnionFind::new(n);
    let mut adj = vec![Vec::with_capacity(2); n];
    let mut accepted = 0;
    for &(_, i, j) in &edges {
        if accepted == n - 1 {
            break;
        }
        if deg[i] >= 2 || deg[j] >= 2 || !uf.union(i, j) {
            continue;
        }
        deg[i] += 1;
        deg[j] += 1;
        adj[i].push(j);
        adj[j].push(i);
        accepted += 1;
    }
    let end = (0..n).find(|&v| deg[v] < 2).unwrap_or(0);
    let order = walk_path(n, &adj, end);
    Ok(Tour::from_valid(order, d))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::exact::held_karp;

    #[test]
    fn nn_on_line() {
        let t = nearest_neighbor(&line(), 0).unwrap();
        assert_eq!(t.order(), &[0, 1, 2, 3]);
        assert_eq!(t.length_m(), 14.0);
    }

    #[test]
    fn nn_two_and_range() {
        let d = planar(&[(0.0, 0.0), (2.0, 0.0)]);
        assert_eq!(nearest_neighbor(&d, 1).unwrap().order(), &[1, 0]);
        assert!(matches!(
            nearest_neighbor(&d, 2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn nn_not_better_than_optimum() {
        let d = random(10, 3);
        let opt = held_karp(&d).unwrap().length_m();
        assert!(nearest_neighbor(&d, 0).unwrap().length_m() >= opt - 1e-9);
    }

    #[test]
    fn greedy_edge_small() {
        assert!((greedy_edge(&square()).unwrap().length_m() - 4.0).abs() < 1e-12);
        assert!((greedy_edge(&triangle()).unwrap().length_m() - 3.0).abs() < 1e-12);
        let d = random(9, 11);
        let opt = held_karp(&d).unwrap().length_m();
        let t = greedy_edge(&d).unwrap();
        crate::tour::validate_order(t.order(), 9).unwrap();
        assert!(t.length_m() >= opt - 1e-9);
        assert!(greedy_edge(&planar(&[(0.0, 0.0), (1.0, 0.0)])).is_err());
    }

    #[test]
    fn deterministic() {
        let d = random(30, 5);
        assert_eq!(greedy_edge(&d).unwrap(), greedy_edge(&d).unwrap());
        assert_eq!(nearest_neighbor(&d, 4).unwrap(), nearest_neighbor(&d, 4).unwrap());
    }
}
