use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::moves::{self, Neighborhood};
use super::{check_seed, require_limit, SearchResult};
use crate::budget::Budget;
use crate::error::Result;
use crate::geo::DistanceMatrix;
use crate::tour::{SolveTrace, Tour};

/// Metropolis acceptance: `min(1, exp(-delta / t))`.
pub fn acceptance_probability(delta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(crate::error::param("temperature", format!("must be > 0, got {t}")));
    }
    if delta <= 0.0 {
        return Ok(1.0);
    }
    Ok((-delta / t).exp())
}

/// Geometric cooling `T_k = alpha^k * t0`.
///
/// The temperature is held for `proposals_per_step` proposals before each
/// step; `None` means one sweep of `n` proposals for an `n`-city tour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub alpha: f64,
    #[serde(default)]
    pub proposals_per_step: Option<u64>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            t0: 1.0,
            alpha: 0.99,
            proposals_per_step: None,
        }
    }
}

impl AnnealSchedule {
    pub fn new(t0: f64, alpha: f64) -> Result<Self> {
        let s = AnnealSchedule {
            t0,
            alpha,
            proposals_per_step: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !self.t0.is_finite() {
            return Err(crate::error::param("T0", format!("must be > 0, got {}", self.t0)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(crate::error::param("alpha", format!("must be in (0, 1), got {}", self.alpha)));
        }
        if self.proposals_per_step == Some(0) {
            return Err(crate::error::param("proposals_per_step", "must be >= 1"));
        }
        Ok(())
    }

    /// Temperature after `k` steps.
    pub fn temperature(&self, k: u64) -> f64 {
        self.t0 * self.alpha.powf(k as f64)
    }
}

/// Simulated annealing over random neighborhood moves.
///
/// `t0` is relative to the seed tour length, so acceptance probabilities do not
/// depend on the unit of distance. Once the temperature underflows to zero only
/// non-worsening moves are taken.
pub fn simulated_annealing(
    seed: &Tour,
    d: &DistanceMatrix,
    schedule: AnnealSchedule,
    neighborhood: Neighborhood,
    rng_seed: u64,
    budget: Budget,
) -> Result<SearchResult> {
    check_seed(seed, d)?;
    schedule.validate()?;
    require_limit(&budget)?;
    let clock = budget.start();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let scale = seed.length_m().max(f64::MIN_POSITIVE);

    let mut cur = seed.order().to_vec();
    let mut cur_len = seed.length_m();
    let mut best = cur.clone();
    let mut best_len = cur_len;
    let mut trace = SolveTrace::default();
    trace.record(clock.elapsed_ms(), 0, best_len);

    let n = d.n();
    let sweep = schedule.proposals_per_step.unwrap_or(n as u64).max(1);
    let mut k = 0u64;
    while !clock.exhausted(k) {
        let Some(m) = moves::random_move(neighborhood, n, &mut rng) else {
            break;
        };
        let delta = m.delta(&cur, d);
        let t = scale * schedule.temperature(k / sweep);
        let accept = if t > 0.0 {
            delta <= 0.0 || rng.gen::<f64>() < acceptance_probability(delta, t)?
        } else {
            delta <= 0.0
        };
        k += 1;
        if accept {
            m.apply(&mut cur);
            cur_len += delta;
            if cur_len < best_len - 1e-12 * scale {
                // resync to avoid drift from summed deltas
                cur_len = moves::cycle_cost(&cur, d);
                if cur_len < best_len {
                    best_len = cur_len;
                    best.clone_from(&cur);
                    trace.record(clock.elapsed_ms(), k, best_len);
                }
            }
        }
    }
    trace.finish(clock.elapsed_ms(), k);
    Ok(SearchResult {
        tour: Tour::from_valid(best, d),
        trace,
        iterations: k,
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
    fn probability_values() {
        assert_eq!(acceptance_probability(0.0, 3.0).unwrap(), 1.0);
        assert_eq!(acceptance_probability(-5.0, 0.1).unwrap(), 1.0);
        assert!((acceptance_probability(2f64.ln(), 1.0).unwrap() - 0.5).abs() < 1e-15);
        let mut last = 1.0;
        for t in [1.0, 0.1, 0.01, 1e-3, 1e-6] {
            let p = acceptance_probability(1.0, t).unwrap();
            assert!(p <= last);
            last = p;
        }
        assert!(acceptance_probability(1.0, 0.1).unwrap() < acceptance_probability(1.0, 1.0).unwrap());
        assert_eq!(last, 0.0);
        assert!(acceptance_probability(1.0, 0.0).is_err());
        assert!(acceptance_probability(1.0, -1.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule::new(0.0, 0.5).is_err());
        assert!(AnnealSchedule::new(1.0, 1.0).is_err());
        assert!(AnnealSchedule::new(1.0, 0.0).is_err());
        let s = AnnealSchedule::new(2.0, 0.5).unwrap();
        assert_eq!(s.temperature(3), 0.25);
    }

    #[test]
    fn frozen_schedule_never_worsens() {
        let d = random(20, 17);
        let seed = nearest_neighbor(&d, 0).unwrap();
        let s = AnnealSchedule::new(1e-300, 0.99).unwrap();
        let r = simulated_annealing(&seed, &d, s, Neighborhood::TwoOpt, 1, Budget::iterations(5000)).unwrap();
        // with T ~ 0 the current tour is the best tour, so the trace never rises
        assert!(r.trace.is_monotone());
        assert!(r.tour.length_m() <= seed.length_m());
    }

    #[test]
    fn reproducible() {
        let d = random(25, 2);
        let seed = nearest_neighbor(&d, 0).unwrap();
        let run = || {
            simulated_annealing(&seed, &d, AnnealSchedule::default(), Neighborhood::TwoOpt, 9, Budget::iterations(20_000))
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.tour, b.tour);
        assert_eq!(a.iterations, b.iterations);
        let costs = |r: &SearchResult| r.trace.samples.iter().map(|s| (s.iteration, s.best_cost_m)).collect::<Vec<_>>();
        assert_eq!(costs(&a), costs(&b));
    }

    #[test]
    fn one_step_per_proposal_is_available() {
        let d = random(15, 5);
        let seed = nearest_neighbor(&d, 0).unwrap();
        let s = AnnealSchedule {
            proposals_per_step: Some(1),
            ..AnnealSchedule::default()
        };
        let r = simulated_annealing(&seed, &d, s, Neighborhood::OrOpt, 2, Budget::iterations(3000)).unwrap();
        assert!(r.tour.length_m() <= seed.length_m());
        let bad = AnnealSchedule {
            proposals_per_step: Some(0),
            ..AnnealSchedule::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn not_worse_than_hill_climbing_on_average() {
        let (mut sa, mut hc) = (0.0, 0.0);
        for s in 0..10 {
            let d = random(20, 900 + s);
            let seed = nearest_neighbor(&d, 0).unwrap();
            hc += hill_climb(&seed, &d, Neighborhood::TwoOpt, Budget::iterations(100_000))
                .unwrap()
                .tour
                .length_m();
            sa += simulated_annealing(&seed, &d, AnnealSchedule::default(), Neighborhood::TwoOpt, s, Budget::iterations(20_000))
                .unwrap()
                .tour
                .length_m();
        }
        assert!(sa <= hc, "sa {sa} hc {hc}");
    }
}
