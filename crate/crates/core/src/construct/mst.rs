use serde::{Deserialize, Serialize};

use super::{check_index, check_min_size, UnionFind};
use crate::error::Result;
use crate::geo::DistanceMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningTree {
    /// `(i, j, weight)` with `i < j`.
    pub edges: Vec<(usize, usize, f64)>,
    pub total_weight_m: f64,
}

impl SpanningTree {
    pub fn degrees(&self, n: usize) -> Vec<usize> {
        let mut deg = vec![0; n];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

/// O(n^2) Prim over the listed vertices, rooted at `vertices[0]`.
fn prim_over(d: &DistanceMatrix, vertices: &[usize]) -> SpanningTree {
    let m = vertices.len();
    let mut in_tree = vec![false; m];
    let mut key = vec![f64::INFINITY; m];
    let mut parent = vec![usize::MAX; m];
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    let mut total = 0.0;
    key[0] = 0.0;
    for _ in 0..m {
        let mut u = usize::MAX;
        for v in 0..m {
            if !in_tree[v] && (u == usize::MAX || key[v] < key[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            let (a, b) = (vertices[parent[u]], vertices[u]);
            edges.push((a.min(b), a.max(b), key[u]));
            total += key[u];
        }
        let vu = vertices[u];
        for v in 0..m {
            if in_tree[v] {
                continue;
            }
            let w = d.get(vu, vertices[v]);
            let tie_lower = w == key[v] && parent[v] != usize::MAX && u < parent[v];
            if w < key[v] || tie_lower {
                key[v] = w;
                parent[v] = u;
            }
        }
    }
    SpanningTree {
        edges,
        total_weight_m: total,
    }
}

/// Minimum spanning tree by Prim's algorithm, grown from `root`.
pub fn mst_prim(d: &DistanceMatrix, root: usize) -> Result<SpanningTree> {
    check_min_size(d, 2)?;
    check_index(root, d.n())?;
    let mut vertices: Vec<usize> = (0..d.n()).collect();
    vertices.swap(0, root);
    Ok(prim_over(d, &vertices))
}

/// MST weight by Kruskal's algorithm; an independent check on [`mst_prim`].
pub fn kruskal_weight(d: &DistanceMatrix) -> f64 {
    let n = d.n();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((d.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(n);
    edges
        .into_iter()
        .filter(|&(_, i, j)| uf.union(i, j))
        .map(|(w, _, _)| w)
        .sum()
}

/// MST over every vertex except `excluded`, plus the two cheapest edges at `excluded`.
pub fn one_tree_bound(d: &DistanceMatrix, excluded: usize) -> Result<f64> {
    check_min_size(d, 3)?;
    check_index(excluded, d.n())?;
    let rest: Vec<usize> = (0..d.n()).filter(|&v| v != excluded).collect();
    let tree = prim_over(d, &rest);
    let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
    for &v in &rest {
        let w = d.get(excluded, v);
        if w < a {
            b = a;
            a = w;
        } else if w < b {
            b = w;
        }
    }
    Ok(tree.total_weight_m + a + b)
}

/// Strongest 1-tree bound over the given choices of excluded vertex.
pub fn one_tree_bound_max(d: &DistanceMatrix, candidates: &[usize]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for &v in candidates {
        best = best.max(one_tree_bound(d, v)?);
    }
    if candidates.is_empty() {
        return Err(crate::error::param("candidates", "no excluded vertex given"));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fixtures::*;
    use crate::exact::held_karp;

    #[test]
    fn square_tree() {
        let t = mst_prim(&square(), 0).unwrap();
        assert_eq!(t.edges.len(), 3);
        assert!((t.total_weight_m - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_points() {
        let d = planar(&[(0.0, 0.0), (0.0, 2.5)]);
        let t = mst_prim(&d, 1).unwrap();
        assert_eq!(t.edges, vec![(0, 1, 2.5)]);
        assert!(mst_prim(&d, 2).is_err());
    }

    #[test]
    fn prim_matches_kruskal() {
        for seed in 0..20 {
            let d = random(12, seed);
            let t = mst_prim(&d, (seed % 12) as usize).unwrap();
            assert_eq!(t.edges.len(), 11);
            let sum: f64 = t.edges.iter().map(|e| e.2).sum();
            assert!((sum - t.total_weight_m).abs() < 1e-9);
            assert!((t.total_weight_m - kruskal_weight(&d)).abs() < 1e-9);
            // connected and acyclic: n-1 edges joining everything
            let mut uf = UnionFind::new(12);
            assert!(t.edges.iter().all(|&(i, j, _)| uf.union(i, j)));
        }
    }

    #[test]
    fn one_tree_cases() {
        for v in 0..4 {
            assert!((one_tree_bound(&square(), v).unwrap() - 4.0).abs() < 1e-12);
        }
        assert!((one_tree_bound(&triangle(), 0).unwrap() - 3.0).abs() < 1e-12);
        assert!(one_tree_bound(&square(), 4).is_err());
        assert!(one_tree_bound_max(&square(), &[]).is_err());
    }

    #[test]
    fn bound_chain() {
        for seed in 0..20 {
            let d = random(9, 100 + seed);
            let opt = held_karp(&d).unwrap().length_m();
            let mst = mst_prim(&d, 0).unwrap().total_weight_m;
            let all: Vec<usize> = (0..9).collect();
            let one = one_tree_bound_max(&d, &all).unwrap();
            assert!(mst <= one + 1e-9);
            assert!(one <= opt + 1e-9);
        }
    }
}
