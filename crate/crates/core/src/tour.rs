use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;

/// A closed visiting order over `0..n` and its cycle length in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
    length_m: f64,
}

impl Tour {
    /// Validates `order` against `d` and computes its length.
    pub fn new(order: Vec<usize>, d: &DistanceMatrix) -> Result<Self> {
        validate_order(&order, d.n())?;
        let length_m = cycle_length(&order, d);
        Ok(Tour { order, length_m })
    }

    /// For solver internals that maintain a permutation by construction.
    pub(crate) fn from_valid(order: Vec<usize>, d: &DistanceMatrix) -> Self {
        debug_assert!(validate_order(&order, d.n()).is_ok());
        let length_m = cycle_length(&order, d);
        Tour { order, length_m }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Rotates the order so it starts at `city` (length unchanged).
    pub fn rotated_to(&self, city: usize) -> Tour {
        let mut order = self.order.clone();
        if let Some(p) = order.iter().position(|&c| c == city) {
            order.rotate_left(p);
        }
        Tour {
            order,
            length_m: self.length_m,
        }
    }
}

/// Checks that `order` is a permutation of `0..n`.
pub fn validate_order(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidTour(format!(
            "order has {} entries, expected {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n {
            return Err(Error::IndexOutOfRange { index: c, n });
        }
        if seen[c] {
            return Err(Error::InvalidTour(format!("city {c} visited twice")));
        }
        seen[c] = true;
    }
    Ok(())
}

fn cycle_length(order: &[usize], d: &DistanceMatrix) -> f64 {
    let n = order.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = d.get(order[n - 1], order[0]);
    for w in order.windows(2) {
        total += d.get(w[0], w[1]);
    }
    total
}

/// Closed-cycle length: the return leg from the last city plus every consecutive leg.
pub fn tour_length(order: &[usize], d: &DistanceMatrix) -> Result<f64> {
    if d.n() < 2 {
        return Err(Error::SizeOutOfRange {
            n: d.n(),
            min: 2,
            max: usize::MAX,
        });
    }
    validate_order(order, d.n())?;
    Ok(cycle_length(order, d))
}

/// Percentage by which `value` exceeds `best`.
pub fn gap_to_best(value: f64, best: f64) -> Result<f64> {
    if !(best > 0.0) {
        return Err(crate::error::param("best", format!("must be > 0, got {best}")));
    }
    Ok(100.0 * (value - best) / best)
}

/// Best-so-far cost samples recorded while a solver runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub samples: Vec<TraceSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub elapsed_ms: f64,
    /// Iteration at which the sample was taken; stable across runs with the same seed.
    pub iteration: u64,
    pub best_cost_m: f64,
}

impl SolveTrace {
    /// Appends a sample if it improves on the last recorded cost.
    pub fn record(&mut self, elapsed_ms: f64, iteration: u64, best_cost_m: f64) {
        match self.samples.last() {
            Some(last) if best_cost_m >= last.best_cost_m => {}
            _ => self.samples.push(TraceSample {
                elapsed_ms,
                iteration,
                best_cost_m,
            }),
        }
    }

    /// Closes the trace with a final sample at the end of the run.
    pub fn finish(&mut self, elapsed_ms: f64, iteration: u64) {
        if let Some(&last) = self.samples.last() {
            if last.iteration != iteration {
                self.samples.push(TraceSample {
                    elapsed_ms: elapsed_ms.max(last.elapsed_ms),
                    iteration,
                    best_cost_m: last.best_cost_m,
                });
            }
        }
    }

    /// True when time is nondecreasing and cost never increases.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| {
            w[1].elapsed_ms >= w[0].elapsed_ms && w[1].best_cost_m <= w[0].best_cost_m
        })
    }

    pub fn best(&self) -> Option<f64> {
        self.samples.last().map(|s| s.best_cost_m)
    }

    /// CSV with header `elapsed_ms,best_cost_m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("elapsed_ms,best_cost_m\n");
        for s in &self.samples {
            out.push_str(&format!("{:.3},{:.6}\n", s.elapsed_ms, s.best_cost_m));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::WaypointSet;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planar(pts: &[(f64, f64)]) -> DistanceMatrix {
        DistanceMatrix::build(
            &WaypointSet::planar(pts).unwrap(),
            crate::geo::MetricKind::Euclidean,
        )
        .unwrap()
    }

    #[test]
    fn out_and_back() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 7.0], vec![7.0, 0.0]]).unwrap();
        assert_eq!(tour_length(&[0, 1], &d).unwrap(), 14.0);
    }

    #[test]
    fn equilateral() {
        let h = 3f64.sqrt() / 2.0;
        let d = planar(&[(0.0, 0.0), (1.0, 0.0), (0.5, h)]);
        for order in [[0, 1, 2], [2, 1, 0], [1, 0, 2]] {
            assert!((tour_length(&order, &d).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_pairwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let d = planar(&pts);
        let order = [3, 1, 7, 0, 5, 2, 6, 4];
        let mut expect = 0.0;
        for k in 0..8 {
            let (a, b) = (pts[order[k]], pts[order[(k + 1) % 8]]);
            expect += ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        }
        let got = tour_length(&order, &d).unwrap();
        assert!((got - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn rejects_bad_orders() {
        let d = planar(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert!(tour_length(&[0, 1, 1], &d).is_err());
        assert!(tour_length(&[0, 1], &d).is_err());
        assert!(matches!(
            tour_length(&[0, 1, 3], &d),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        let one = planar(&[(0.0, 0.0)]);
        assert!(tour_length(&[0], &one).is_err());
    }

    #[test]
    fn gap_values() {
        assert!((gap_to_best(12951.0, 11096.2).unwrap() - 16.72).abs() < 0.01);
        assert!((gap_to_best(18440.19, 18360.3).unwrap() - 0.44).abs() < 0.01);
        assert_eq!(gap_to_best(5.0, 5.0).unwrap(), 0.0);
        assert!(gap_to_best(5.0, 0.0).is_err());
        assert!(gap_to_best(5.0, -1.0).is_err());
    }

    #[test]
    fn trace_keeps_best_so_far() {
        let mut t = SolveTrace::default();
        t.record(0.0, 0, 10.0);
        t.record(1.0, 1, 12.0);
        t.record(2.0, 2, 8.0);
        t.finish(3.0, 5);
        assert_eq!(t.samples.len(), 3);
        assert!(t.is_monotone());
        assert_eq!(t.best(), Some(8.0));
        assert!(t.to_csv().starts_with("elapsed_ms,best_cost_m\n"));
    }

    proptest! {
        #[test]
        fn rotation_and_reversal_invariant(
            pts in prop::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 3..12),
            shift in 0usize..12,
        ) {
            let d = planar(&pts);
            let n = pts.len();
            let order: Vec<usize> = (0..n).collect();
            let base = tour_length(&order, &d).unwrap();
            let mut rot = order.clone();
            rot.rotate_left(shift % n);
            let mut rev = order.clone();
            rev.reverse();
            prop_assert!((tour_length(&rot, &d).unwrap() - base).abs() <= 1e-9 * base);
            prop_assert!((tour_length(&rev, &d).unwrap() - base).abs() <= 1e-9 * base);
            let k = 3.5;
            let scaled = tour_length(&order, &d.scaled(k)).unwrap();
            prop_assert!((scaled - k * base).abs() <= 1e-9 * k * base);
        }
    }
}
