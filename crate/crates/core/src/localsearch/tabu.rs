use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::moves::{self, Move, Neighborhood};
use super::{check_seed, require_limit, SearchResult};
use crate::budget::Budget;
use crate::error::Result;
use crate::geo::DistanceMatrix;
use crate::tour::{SolveTrace, Tour};

pub fn default_tenure(n: usize) -> usize {
    (n / 4).max(10)
}

/// Recently removed edges and the iteration at which each stops being tabu.
#[derive(Debug, Clone, Default)]
pub struct TabuState {
    tenure: usize,
    expiry: HashMap<(usize, usize), u64>,
}

impl TabuState {
    pub fn new(tenure: usize) -> Self {
        TabuState {
            tenure,
            expiry: HashMap::new(),
        }
    }

    pub fn tenure(&self) -> usize {
        self.tenure
    }

    pub fn len(&self) -> usize {
        self.expiry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expiry.is_empty()
    }

    /// A move is tabu when it would re-add an edge removed within the tenure.
    pub fn is_tabu(&self, added: &[(usize, usize)], iter: u64) -> bool {
        added
            .iter()
            .any(|e| self.expiry.get(e).is_some_and(|&until| iter < until))
    }

    pub fn forbid(&mut self, removed: &[(usize, usize)], iter: u64) {
        for &e in removed {
            self.expiry.insert(e, iter + self.tenure as u64);
        }
    }

    pub fn expire(&mut self, iter: u64) {
        self.expiry.retain(|_, until| iter < *until);
    }
}

/// Tabu search over 2-opt. Each iteration takes the best admissible move, even
/// a worsening one; edges it removes may not come back for `tenure` iterations
/// unless doing so beats the best tour found (aspiration).
pub fn tabu_search(
    seed: &Tour,
    d: &DistanceMatrix,
    tenure: usize,
    rng_seed: u64,
    budget: Budget,
) -> Result<SearchResult> {
    check_seed(seed, d)?;
    if tenure == 0 {
        return Err(crate::error::param("tenure", "must be >= 1; use hill_climb for plain descent"));
    }
    require_limit(&budget)?;
    let clock = budget.start();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = d.n();
    let scale = seed.length_m().max(1.0);

    let mut cur = seed.order().to_vec();
    let mut cur_len = seed.length_m();
    let mut best = cur.clone();
    let mut best_len = cur_len;
    let mut trace = SolveTrace::default();
    trace.record(clock.elapsed_ms(), 0, best_len);
    let mut tabu = TabuState::new(tenure);

    let mut iter = 0u64;
    while n >= 4 && !clock.exhausted(iter) {
        let mut pick: Option<(Move, f64)> = None;
        let mut ties = 0u32;
        moves::for_each_move(Neighborhood::TwoOpt, n, |m| {
            let delta = m.delta(&cur, d);
            let aspires = cur_len + delta < best_len - 1e-12 * scale;
            if !aspires && tabu.is_tabu(&m.added_edges(&cur), iter) {
                return;
            }
            match pick {
                Some((_, b)) if delta > b + 1e-12 * scale => {}
                Some((_, b)) if delta >= b - 1e-12 * scale => {
                    // reservoir choice among equal moves
                    ties += 1;
                    if rng.gen_range(0..=ties) == 0 {
                        pick = Some((m, delta));
                    }
                }
                _ => {
                    ties = 0;
                    pick = Some((m, delta));
                }
            }
        });
        iter += 1;
        let Some((m, _)) = pick else {
            tabu.expire(iter);
            continue;
        };
        let removed = m.removed_edges(&cur);
        m.apply(&mut cur);
        cur_len = moves::cycle_cost(&cur, d);
        tabu.expire(iter);
        tabu.forbid(&removed, iter);
        if cur_len < best_len {
            best_len = cur_len;
            best.clone_from(&cur);
            trace.record(clock.elapsed_ms(), iter, best_len);
        }
    }
    trace.finish(clock.elapsed_ms(), iter);
    Ok(SearchResult {
        tour: Tour::from_valid(best, d),
        trace,
        iterations: iter,
        converged: false,
    })
}
