use serde::{Deserialize, Serialize};

use super::{check_min_size, mst_prim};
use crate::error::{Error, Result};
use crate::geo::{DistanceMatrix, MetricKind};
use crate::tour::Tour;

/// Largest odd-degree set handled by the exact subset-DP matching.
pub const EXACT_MATCHING_LIMIT: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingMode {
    /// Subset DP; fails above [`EXACT_MATCHING_LIMIT`].
    #[default]
    Exact,
    /// Cheapest-pair-first. Voids the 1.5 guarantee.
    Greedy,
    /// Exact when the odd set fits, greedy otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChristofidesOptions {
    pub matching: MatchingMode,
    /// Run the O(n^3) triangle check. Geometric matrices are metric already.
    pub check_metric: bool,
}

impl ChristofidesOptions {
    pub fn for_matrix(d: &DistanceMatrix) -> Self {
        ChristofidesOptions {
            matching: MatchingMode::Exact,
            check_metric: d.metric() == MetricKind::Explicit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChristofidesReport {
    pub tour: Tour,
    pub mst_weight_m: f64,
    pub odd_vertices: Vec<usize>,
    pub matching: Vec<(usize, usize)>,
    /// False when greedy matching was used or the matrix is not metric.
    pub bound_guaranteed: bool,
    /// Triangle violation found by the metric check, if any.
    pub non_metric: Option<(usize, usize, usize)>,
}

/// Minimum-weight perfect matching on `vertices` (even count).
///
/// Exact mode runs an O(2^k k) subset DP that always pairs the lowest
/// unmatched vertex.
pub fn min_weight_matching(
    d: &DistanceMatrix,
    vertices: &[usize],
    mode: MatchingMode,
) -> Result<Vec<(usize, usize)>> {
    let k = vertices.len();
    if !k.is_multiple_of(2) {
        return Err(crate::error::param("vertices", format!("odd count {k}")));
    }
    let exact = match mode {
        MatchingMode::Exact if k > EXACT_MATCHING_LIMIT => {
            return Err(Error::MatchingTooLarge {
                size: k,
                limit: EXACT_MATCHING_LIMIT,
            })
        }
        MatchingMode::Exact => true,
        MatchingMode::Greedy => false,
        MatchingMode::Auto => k <= EXACT_MATCHING_LIMIT,
    };
    if exact {
        Ok(exact_matching(d, vertices))
    } else {
        Ok(greedy_matching(d, vertices))
    }
}

fn exact_matching(d: &DistanceMatrix, vertices: &[usize]) -> Vec<(usize, usize)> {
    let k = vertices.len();
    if k == 0 {
        return Vec::new();
    }
    let full = (1usize << k) - 1;
    let mut cost = vec![f64::INFINITY; 1 << k];
    let mut partner = vec![u8::MAX; 1 << k];
    cost[0] = 0.0;
    for mask in 1..=full {
        if mask.count_ones() % 2 != 0 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let c = cost[rest & !(1 << j)] + d.get(vertices[i], vertices[j]);
            if c < cost[mask] {
                cost[mask] = c;
                partner[mask] = j as u8;
            }
        }
    }
    let mut pairs = Vec::with_capacity(k / 2);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = partner[mask] as usize;
        pairs.push((vertices[i], vertices[j]));
        mask &= !(1 << i) & !(1 << j);
    }
    pairs
}

fn greedy_matching(d: &DistanceMatrix, vertices: &[usize]) -> Vec<(usize, usize)> {
    let k = vertices.len();
    let mut cand = Vec::with_capacity(k * k / 2);
    for a in 0..k {
        for b in (a + 1)..k {
            cand.push((d.get(vertices[a], vertices[b]), a, b));
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used = vec![false; k];
    let mut pairs = Vec::with_capacity(k / 2);
    for (_, a, b) in cand {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            pairs.push((vertices[a], vertices[b]));
        }
    }
    pairs
}

/// Hierholzer's algorithm over a connected multigraph whose vertices all have
/// even degree. Adjacency is explored in edge insertion order.
pub fn euler_circuit(n: usize, edges: &[(usize, usize)], start: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, id));
        adj[b].push((a, id));
    }
    let mut used = vec![false; edges.len()];
    let mut next = vec![0usize; n];
    let mut stack = vec![start];
    let mut circuit = Vec::with_capacity(edges.len() + 1);
    while let Some(&v) = stack.last() {
        let mut moved = false;
        while next[v] < adj[v].len() {
            let (w, id) = adj[v][next[v]];
            next[v] += 1;
            if !used[id] {
                used[id] = true;
                stack.push(w);
                moved = true;
                break;
            }
        }
        if !moved {
            circuit.push(v);
            stack.pop();
        }
    }
    circuit.reverse();
    circuit
}

fn shortcut(n: usize, circuit: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for &v in circuit {
        if !seen[v] {
            seen[v] = true;
            order.push(v);
        }
    }
    order
}

/// Doubled-MST tour: Euler circuit of the doubled tree, shortcut to first visits.
pub fn double_tree(d: &DistanceMatrix) -> Result<Tour> {
    check_min_size(d, 3)?;
    let n = d.n();
    let tree = mst_prim(d, 0)?;
    let mut edges = Vec::with_capacity(2 * (n - 1));
    for &(i, j, _) in &tree.edges {
        edges.push((i, j));
        edges.push((i, j));
    }
    let circuit = euler_circuit(n, &edges, 0);
    Ok(Tour::from_valid(shortcut(n, &circuit), d))
}

/// Christofides with exact matching and the metric check for explicit matrices.
pub fn christofides(d: &DistanceMatrix) -> Result<Tour> {
    christofides_with(d, ChristofidesOptions::for_matrix(d)).map(|r| r.tour)
}

/// MST, odd-degree set, minimum perfect matching on it, Euler circuit of the
/// union, then shortcut to a Hamiltonian cycle.
pub fn christofides_with(d: &DistanceMatrix, opts: ChristofidesOptions) -> Result<ChristofidesReport> {
    check_min_size(d, 3)?;
    let n = d.n();
    let non_metric = if opts.check_metric {
        d.triangle_violation(1e-6)
    } else {
        None
    };
    let tree = mst_prim(d, 0)?;
    let deg = tree.degrees(n);
    let odd: Vec<usize> = (0..n).filter(|&v| deg[v] % 2 == 1).collect();
    let matching = min_weight_matching(d, &odd, opts.matching)?;
    let exact = match opts.matching {
        MatchingMode::Exact => true,
        MatchingMode::Greedy => false,
        MatchingMode::Auto => odd.len() <= EXACT_MATCHING_LIMIT,
    };

    let mut edges: Vec<(usize, usize)> = tree.edges.iter().map(|&(i, j, _)| (i, j)).collect();
    edges.extend(matching.iter().copied());
    let circuit = euler_circuit(n, &edges, 0);
    let tour = Tour::from_valid(shortcut(n, &circuit), d);
    Ok(ChristofidesReport {
        tour,
        mst_weight_m: tree.total_weight_m,
        odd_vertices: odd,
        matching,
        bound_guaranteed: exact && non_metric.is_none(),
        non_metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fixtures::*;
    use crate::exact::held_karp;

    fn brute_matching(d: &DistanceMatrix, v: &[usize]) -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for k in 1..v.len() {
            let rest: Vec<usize> = v[1..].iter().copied().filter(|&x| x != v[k]).collect();
            best = best.min(d.get(v[0], v[k]) + brute_matching(d, &rest));
        }
        best
    }

    #[test]
    fn square_walkthrough() {
        let r = christofides_with(&square(), ChristofidesOptions::for_matrix(&square())).unwrap();
        assert!((r.mst_weight_m - 3.0).abs() < 1e-12);
        assert_eq!(r.odd_vertices.len(), 2);
        let (a, b) = r.matching[0];
        assert!((square().get(a, b) - 1.0).abs() < 1e-12);
        assert!((r.tour.length_m() - 4.0).abs() < 1e-12);
        assert!(r.bound_guaranteed);
    }

    #[test]
    fn triangle_and_double_tree() {
        assert!((christofides(&triangle()).unwrap().length_m() - 3.0).abs() < 1e-12);
        assert!((double_tree(&triangle()).unwrap().length_m() - 3.0).abs() < 1e-12);
        assert!((double_tree(&square()).unwrap().length_m() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matching_is_minimal() {
        for seed in 0..15 {
            let d = random(10, 200 + seed);
            let v: Vec<usize> = (0..8).collect();
            let m = min_weight_matching(&d, &v, MatchingMode::Exact).unwrap();
            let w: f64 = m.iter().map(|&(a, b)| d.get(a, b)).sum();
            assert!((w - brute_matching(&d, &v)).abs() < 1e-9);
            let g = min_weight_matching(&d, &v, MatchingMode::Greedy).unwrap();
            let gw: f64 = g.iter().map(|&(a, b)| d.get(a, b)).sum();
            assert!(gw >= w - 1e-9);
        }
    }

    #[test]
    fn matching_limits() {
        let d = random(20, 1);
        let v: Vec<usize> = (0..20).collect();
        assert!(matches!(
            min_weight_matching(&d, &v, MatchingMode::Exact),
            Err(Error::MatchingTooLarge { size: 20, .. })
        ));
        assert_eq!(min_weight_matching(&d, &v, MatchingMode::Auto).unwrap().len(), 10);
        assert!(min_weight_matching(&d, &v[..3], MatchingMode::Exact).is_err());
    }

    #[test]
    fn bounds_on_random_instances() {
        for seed in 0..30 {
            let d = random(3 + (seed as usize % 10), 300 + seed);
            let opt = held_karp(&d).unwrap().length_m();
            assert!(christofides(&d).unwrap().length_m() <= 1.5 * opt + 1e-9);
            assert!(double_tree(&d).unwrap().length_m() <= 2.0 * opt + 1e-9);
        }
    }

    #[test]
    fn flags_non_metric_input() {
        let d = DistanceMatrix::from_rows(vec![
            vec![0.0, 10.0, 1.0, 1.0],
            vec![10.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0],
        ])
        .unwrap();
        let r = christofides_with(&d, ChristofidesOptions::for_matrix(&d)).unwrap();
        assert!(r.non_metric.is_some());
        assert!(!r.bound_guaranteed);
        crate::tour::validate_order(r.tour.order(), 4).unwrap();
    }

    #[test]
    fn euler_uses_every_edge() {
        let edges = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)];
        let c = euler_circuit(5, &edges, 0);
        assert_eq!(c.len(), edges.len() + 1);
        assert_eq!(c.first(), c.last());
    }
}
