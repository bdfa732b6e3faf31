//! Held-Karp dynamic program, the exact oracle for small instances.

use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;
use crate::tour::Tour;

pub const HELD_KARP_MAX_N: usize = 18;

/// Relative slack under which two partial costs count as tied.
pub const TIE_REL: f64 = 1e-9;

/// Optimal closed tour for `2 <= n <= 18`.
///
/// Among optimal tours the lexicographically smallest order starting at city 0
/// is returned, so the result is deterministic.
pub fn held_karp(d: &DistanceMatrix) -> Result<Tour> {
    let n = d.n();
    if !(2..=HELD_KARP_MAX_N).contains(&n) {
        return Err(Error::SizeOutOfRange {
            n,
            min: 2,
            max: HELD_KARP_MAX_N,
        });
    }
    // cities 1..n map to bits 0..m
    let m = n - 1;
    let full = (1usize << m) - 1;
    // best[s * m + j]: shortest path 0 -> ... -> j+1 covering exactly the cities in s
    let mut best = vec![f64::INFINITY; (1usize << m) * m];
    for j in 0..m {
        best[(1 << j) * m + j] = d.get(0, j + 1);
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let mut bits = s;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let prev = s & !(1 << j);
            let mut v = f64::INFINITY;
            let mut pb = prev;
            while pb != 0 {
                let k = pb.trailing_zeros() as usize;
                pb &= pb - 1;
                let c = best[prev * m + k] + d.get(k + 1, j + 1);
                if c < v {
                    v = c;
                }
            }
            best[s * m + j] = v;
        }
    }

    // Walk forward from city 0 taking the smallest index that stays optimal.
    // The cost of finishing from c through the set r back to 0 equals best[r][j]
    // read in reverse, which is valid because the matrix is symmetric.
    let mut order = Vec::with_capacity(n);
    order.push(0);
    let mut cur = 0usize;
    let mut remaining = full;
    while remaining != 0 {
        let step = |j: usize| d.get(cur, j + 1) + best[remaining * m + j];
        let mut min = f64::INFINITY;
        let mut bits = remaining;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            min = min.min(step(j));
        }
        let mut bits = remaining;
        let mut pick = usize::MAX;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if step(j) <= min + TIE_REL * min.abs() {
                pick = j;
                break;
            }
        }
        order.push(pick + 1);
        remaining &= !(1 << pick);
        cur = pick + 1;
    }
    Ok(Tour::from_valid(order, d))
}
