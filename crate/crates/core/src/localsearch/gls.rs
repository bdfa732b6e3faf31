use super::moves::{self, EdgeCost, Neighborhood};
use super::{check_seed, descend, require_limit, SearchResult};
use crate::budget::Budget;
use crate::error::Result;
use crate::geo::DistanceMatrix;
use crate::tour::{SolveTrace, Tour};

pub const DEFAULT_LAMBDA_FACTOR: f64 = 0.1;

/// Edge penalties and the weight that turns them into meters.
#[derive(Debug, Clone)]
pub struct GlsState<'a> {
    d: &'a DistanceMatrix,
    penalties: Vec<u32>,
    lambda: f64,
}

impl<'a> GlsState<'a> {
    pub fn new(d: &'a DistanceMatrix, lambda: f64) -> Self {
        GlsState {
            d,
            penalties: vec![0; d.n() * d.n()],
            lambda,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn penalty(&self, a: usize, b: usize) -> u32 {
        self.penalties[a * self.d.n() + b]
    }

    fn bump(&mut self, a: usize, b: usize) {
        let n = self.d.n();
        self.penalties[a * n + b] += 1;
        self.penalties[b * n + a] += 1;
    }

    /// Tour length plus `lambda` times the penalties of its edges.
    pub fn augmented_cost(&self, t: &[usize]) -> f64 {
        moves::cycle_cost(t, self)
    }

    /// Raises the penalty of every tour edge with maximal utility
    /// `d / (1 + p)`; returns how many edges were penalised.
    pub fn penalize(&mut self, t: &[usize]) -> usize {
        let n = t.len();
        let utility = |s: &Self, a: usize, b: usize| s.d.get(a, b) / (1.0 + s.penalty(a, b) as f64);
        let mut max_u = f64::NEG_INFINITY;
        for k in 0..n {
            max_u = max_u.max(utility(self, t[k], t[(k + 1) % n]));
        }
        let mut hit: Vec<(usize, usize)> = (0..n)
            .map(|k| (t[k], t[(k + 1) % n]))
            .filter(|&(a, b)| utility(self, a, b) >= max_u * (1.0 - 1e-12))
            .collect();
        hit.dedup_by_key(|e| (e.0.min(e.1), e.0.max(e.1)));
        for &(a, b) in &hit {
            self.bump(a, b);
        }
        hit.len()
    }
}

impl EdgeCost for GlsState<'_> {
    #[inline]
    fn cost(&self, a: usize, b: usize) -> f64 {
        self.d.get(a, b) + self.lambda * self.penalty(a, b) as f64
    }
}

/// Guided local search: 2-opt descent on penalised costs, then penalise the
/// highest-utility edges of the local optimum and descend again. The best
/// true-length tour is returned and traced.
///
/// `lambda = lambda_factor * seed_length / n`. One iteration is one applied
/// move or one penalty round. The search itself is deterministic; `rng_seed`
/// keeps the call shape shared with the other metaheuristics.
pub fn guided_local_search(
    seed: &Tour,
    d: &DistanceMatrix,
    lambda_factor: f64,
    _rng_seed: u64,
    budget: Budget,
) -> Result<SearchResult> {
    check_seed(seed, d)?;
    if !(lambda_factor > 0.0) || !lambda_factor.is_finite() {
        return Err(crate::error::param("lambda_factor", format!("must be > 0, got {lambda_factor}")));
    }
    require_limit(&budget)?;
    let clock = budget.start();
    let n = d.n();
    let lambda = lambda_factor * seed.length_m() / n as f64;
    let mut state = GlsState::new(d, lambda);

    let mut cur = seed.order().to_vec();
    let mut best = cur.clone();
    let mut best_len = seed.length_m();
    let mut trace = SolveTrace::default();
    trace.record(clock.elapsed_ms(), 0, best_len);
    let mut iters = 0u64;

    loop {
        let mut improved: Option<(Vec<usize>, f64, u64)> = None;
        let finished = descend(&mut cur, Neighborhood::TwoOpt, &state, &clock, &mut iters, |t, k| {
            let len = moves::cycle_cost(t, d);
            let bar = improved.as_ref().map_or(best_len, |b| b.1);
            if len < bar {
                improved = Some((t.to_vec(), len, k));
            }
        });
        if let Some((t, len, k)) = improved {
            if len < best_len {
                best = t;
                best_len = len;
                trace.record(clock.elapsed_ms(), k, best_len);
            }
        }
        if !finished || n < 4 || clock.exhausted(iters) {
            break;
        }
        state.penalize(&cur);
        iters += 1;
    }
    trace.finish(clock.elapsed_ms(), iters);
    Ok(SearchResult {
        tour: Tour::from_valid(best, d),
        trace,
        iterations: iters,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fixtures::*;
    use crate::construct::nearest_neighbor;
    use crate::localsearch::hill_climb;

    #[test]
    fn exhausted_first_descent_matches_hill_climb() {
        let d = random(30, 6);
        let seed = Tour::new((0..30).collect(), &d).unwrap();
        for k in [1, 5, 12] {
            let g = guided_local_search(&seed, &d, 0.1, 3, Budget::iterations(k)).unwrap();
            let h = hill_climb(&seed, &d, Neighborhood::TwoOpt, Budget::iterations(k)).unwrap();
            assert_eq!(g.tour, h.tour);
        }
    }

    #[test]
    fn penalties_only_touch_tour_edges() {
        let d = random(8, 2);
        let mut s = GlsState::new(&d, 1.0);
        let t: Vec<usize> = (0..8).collect();
        let hits = s.penalize(&t);
        assert!(hits >= 1);
        // (0, 2) is not a tour edge
        assert_eq!(s.penalty(0, 2), 0);
        let total: u32 = (0..8).map(|k| s.penalty(t[k], t[(k + 1) % 8])).sum();
        assert_eq!(total as usize, hits);
        assert!(s.augmented_cost(&t) >= moves::cycle_cost(&t, &d));
    }

    #[test]
    fn beats_or_ties_hill_climbing() {
        let mut wins = 0;
        for s in 0..10 {
            let d = random(20, 1200 + s);
            let seed = nearest_neighbor(&d, 0).unwrap();
            let h = hill_climb(&seed, &d, Neighborhood::TwoOpt, Budget::iterations(100_000)).unwrap();
            let g = guided_local_search(&seed, &d, DEFAULT_LAMBDA_FACTOR, s, Budget::iterations(3_000)).unwrap();
            assert!(g.trace.is_monotone());
            if g.tour.length_m() <= h.tour.length_m() + 1e-9 {
                wins += 1;
            }
        }
        assert!(wins >= 7, "{wins}");
    }

    #[test]
    fn bad_lambda() {
        let d = square();
        let seed = Tour::new(vec![0, 1, 2, 3], &d).unwrap();
        assert!(guided_local_search(&seed, &d, 0.0, 0, Budget::iterations(5)).is_err());
        assert!(guided_local_search(&seed, &d, f64::NAN, 0, Budget::iterations(5)).is_err());
    }
}
