//! Anytime improvers over a starting tour. Each returns the best tour it saw
//! together with a best-so-far [`SolveTrace`].

mod anneal;
mod gls;
pub mod moves;
mod tabu;

pub use anneal::{acceptance_probability, simulated_annealing, AnnealSchedule};
pub use gls::{guided_local_search, GlsState, DEFAULT_LAMBDA_FACTOR};
pub use moves::{EdgeCost, Move, Neighborhood};
pub use tabu::{default_tenure, tabu_search, TabuState};

use crate::budget::{Budget, Clock};
use crate::error::Result;
use crate::geo::DistanceMatrix;
use crate::tour::{validate_order, SolveTrace, Tour};

/// Output of an improvement run.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub tour: Tour,
    pub trace: SolveTrace,
    /// Iterations consumed, in the solver's own unit.
    pub iterations: u64,
    /// True when the search stopped on its own rather than on the budget.
    pub converged: bool,
}

/// Threshold below which a cost change counts as an improvement.
pub(crate) fn improving(delta: f64, scale: f64) -> bool {
    delta < -1e-12 * scale.max(1.0)
}

pub(crate) fn check_seed(seed: &Tour, d: &DistanceMatrix) -> Result<()> {
    validate_order(seed.order(), d.n())
}

pub(crate) fn require_limit(budget: &Budget) -> Result<()> {
    if budget.max_iters.is_none() && budget.time_ms.is_none() {
        return Err(crate::error::param("budget", "needs an iteration or time limit"));
    }
    if budget.time_ms == Some(0) {
        return Err(crate::error::param("budget", "time budget must be > 0"));
    }
    Ok(())
}

/// Best-improving move of the neighborhood under `w`, if any improves.
pub(crate) fn best_move<W: EdgeCost + ?Sized>(
    kind: Neighborhood,
    t: &[usize],
    w: &W,
    scale: f64,
) -> Option<(Move, f64)> {
    let mut best: Option<(Move, f64)> = None;
    moves::for_each_move(kind, t.len(), |m| {
        let delta = m.delta(t, w);
        if improving(delta, scale) && best.is_none_or(|(_, b)| delta < b) {
            best = Some((m, delta));
        }
    });
    best
}

/// Steepest descent under `w`; the shared core of hill climbing and GLS.
/// `on_step` sees the tour after every applied move.
pub(crate) fn descend<W: EdgeCost + ?Sized>(
    t: &mut Vec<usize>,
    kind: Neighborhood,
    w: &W,
    clock: &Clock,
    iters: &mut u64,
    mut on_step: impl FnMut(&[usize], u64),
) -> bool {
    let scale = moves::cycle_cost(t, w);
    loop {
        if clock.exhausted(*iters) {
            return false;
        }
        match best_move(kind, t, w, scale) {
            Some((m, _)) => {
                m.apply(t);
                *iters += 1;
                on_step(t, *iters);
            }
            None => return true,
        }
    }
}

/// Greedy descent: apply the best improving move until none is left or the
/// budget runs out. One iteration is one applied move.
pub fn hill_climb(
    seed: &Tour,
    d: &DistanceMatrix,
    neighborhood: Neighborhood,
    budget: Budget,
) -> Result<SearchResult> {
    check_seed(seed, d)?;
    if budget.time_ms == Some(0) || budget.max_iters == Some(0) {
        return Err(crate::error::param("budget", "must be > 0"));
    }
    let clock = budget.start();
    let mut t = seed.order().to_vec();
    let mut trace = SolveTrace::default();
    let mut len = seed.length_m();
    trace.record(clock.elapsed_ms(), 0, len);
    let mut iters = 0;
    let converged = descend(&mut t, neighborhood, d, &clock, &mut iters, |t, k| {
        len = moves::cycle_cost(t, d);
        trace.record(clock.elapsed_ms(), k, len);
    });
    trace.finish(clock.elapsed_ms(), iters);
    Ok(SearchResult {
        tour: Tour::from_valid(t, d),
        trace,
        iterations: iters,
        converged,
    })
}

impl From<SearchResult> for (Tour, SolveTrace) {
    fn from(r: SearchResult) -> Self {
        (r.tour, r.trace)
    }
}
