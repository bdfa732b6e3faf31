use super::{check_index, check_min_size, walk_path, UnionFind};
use crate::error::Result;
use crate::geo::DistanceMatrix;
use crate::tour::Tour;

/// Clarke-Wright saving of serving `i` and `j` consecutively instead of via the depot.
pub fn savings_value(d: &DistanceMatrix, depot: usize, i: usize, j: usize) -> f64 {
    d.get(depot, i) + d.get(depot, j) - d.get(i, j)
}

/// Single-tour Clarke-Wright: merge depot round trips in descending order of
/// savings, then close the resulting customer path through the depot.
pub fn savings(d: &DistanceMatrix, depot: usize) -> Result<Tour> {
    check_min_size(d, 3)?;
    let n = d.n();
    check_index(depot, n)?;
    let customers: Vec<usize> = (0..n).filter(|&c| c != depot).collect();
    let mut pairs = Vec::with_capacity(customers.len() * customers.len() / 2);
    for (a, &i) in customers.iter().enumerate() {
        for &j in &customers[a + 1..] {
            pairs.push((savings_value(d, depot, i, j), i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    // a customer may only be joined at a route end (fewer than two customer links)
    let mut links = vec![0u8; n];
    let mut uf = UnionFind::new(n);
    let mut adj = vec![Vec::with_capacity(2); n];
    let mut merged = 0;
    for &(_, i, j) in &pairs {
        if merged == customers.len() - 1 {
            break;
        }
        if links[i] >= 2 || links[j] >= 2 || !uf.union(i, j) {
            continue;
        }
        links[i] += 1;
        links[j] += 1;
        adj[i].push(j);
        adj[j].push(i);
        merged += 1;
    }
    let end = customers
        .iter()
        .copied()
        .find(|&c| links[c] < 2)
        .unwrap_or(customers[0]);
    let path = walk_path(customers.len(), &adj, end);
    let mut order = Vec::with_capacity(n);
    order.push(depot);
    order.extend(path);
    Ok(Tour::from_valid(order, d))
}
