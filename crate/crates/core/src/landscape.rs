//! Grid agents climbing analytic surfaces, used to contrast hill climbing
//! and simulated annealing on one- and many-peaked objectives.
//!
//! Positions live on a lattice of 0.05 steps over `[-1, 1]²` and are stored
//! as integer lattice coordinates, so a walk that reaches the origin reports
//! an objective of exactly zero.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Lattice points per unit length (a step of 0.05).
pub const STEPS_PER_UNIT: i32 = 20;
pub const STEP: f64 = 1.0 / STEPS_PER_UNIT as f64;
pub const DEFAULT_MAX_ITERS: u64 = 5_000;

/// Move order used for tie-breaking: N, S, E, W, NE, NW, SE, SW.
pub const MOVES: [(&str, i32, i32); 8] = [
    ("N", 0, 1),
    ("S", 0, -1),
    ("E", 1, 0),
    ("W", -1, 0),
    ("NE", 1, 1),
    ("NW", -1, 1),
    ("SE", 1, -1),
    ("SW", -1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Landscape {
    SinglePeak,
    MultiPeak,
}

impl FromStr for Landscape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "single_peak" => Ok(Landscape::SinglePeak),
            "multi" | "multi_peak" => Ok(Landscape::MultiPeak),
            _ => Err(param("landscape", format!("unknown surface {s:?}"))),
        }
    }
}

impl Landscape {
    /// Objective to maximise; both surfaces peak at 0 at the origin.
    pub fn objective(self, x1: f64, x2: f64) -> Result<f64> {
        if !in_domain(x1) || !in_domain(x2) {
            return Err(param("position", format!("({x1}, {x2}) is outside [-1, 1]²")));
        }
        Ok(self.eval(x1, x2))
    }

    fn eval(self, x1: f64, x2: f64) -> f64 {
        // adding 0.0 turns a negative zero at the peak into 0.0
        match self {
            Landscape::SinglePeak => -(x1 * x1 + x2 * x2) + 0.0,
            Landscape::MultiPeak => {
                -(0.2 + x1 * x1 + x2 * x2 - 0.1 * (6.0 * PI * x1).cos() - 0.1 * (6.0 * PI * x2).cos()) + 0.0
            }
        }
    }
}

pub fn objective_single(x1: f64, x2: f64) -> Result<f64> {
    Landscape::SinglePeak.objective(x1, x2)
}

pub fn objective_multi(x1: f64, x2: f64) -> Result<f64> {
    Landscape::MultiPeak.objective(x1, x2)
}

fn in_domain(x: f64) -> bool {
    (-1.0..=1.0).contains(&x)
}

/// A lattice position; `(ix, iy)` stands for `(ix * STEP, iy * STEP)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub ix: i32,
    pub iy: i32,
}

impl GridPos {
    /// Snaps a real position to the nearest lattice point.
    pub fn snap(x1: f64, x2: f64) -> Result<Self> {
        if !in_domain(x1) || !in_domain(x2) {
            return Err(param("start", format!("({x1}, {x2}) is outside [-1, 1]²")));
        }
        let s = STEPS_PER_UNIT as f64;
        Ok(GridPos {
            ix: (x1 * s).round() as i32,
            iy: (x2 * s).round() as i32,
        })
    }

    /// Like [`GridPos::snap`] but rejects positions that are not already on
    /// the lattice (within 1e-9 of a step).
    pub fn exact(x1: f64, x2: f64) -> Result<Self> {
        let p = GridPos::snap(x1, x2)?;
        let off = |v: f64, on: f64| (v - on).abs() * STEPS_PER_UNIT as f64 > 1e-9;
        if off(x1, p.x1()) || off(x2, p.x2()) {
            return Err(param("start", format!("({x1}, {x2}) is not on the {STEP} grid")));
        }
        Ok(p)
    }

    pub fn x1(self) -> f64 {
        self.ix as f64 / STEPS_PER_UNIT as f64
    }

    pub fn x2(self) -> f64 {
        self.iy as f64 / STEPS_PER_UNIT as f64
    }

    /// The neighbour in direction `k` of [`MOVES`], if it stays in the domain.
    pub fn step(self, k: usize) -> Option<GridPos> {
        let (_, dx, dy) = MOVES[k];
        let p = GridPos {
            ix: self.ix + dx,
            iy: self.iy + dy,
        };
        let lim = STEPS_PER_UNIT;
        ((-lim..=lim).contains(&p.ix) && (-lim..=lim).contains(&p.iy)).then_some(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub iteration: u64,
    pub x1: f64,
    pub x2: f64,
    pub objective: f64,
    /// SA only: temperature used at this iteration.
    pub temperature: Option<f64>,
    /// SA only: probability with which the proposal was accepted.
    pub acceptance_prob: Option<f64>,
    /// SA only: objective decrease of the proposal.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub records: Vec<WalkRecord>,
}

impl WalkTrace {
    fn push(&mut self, iteration: u64, p: GridPos, objective: f64) {
        self.records.push(WalkRecord {
            iteration,
            x1: p.x1(),
            x2: p.x2(),
            objective,
            temperature: None,
            acceptance_prob: None,
            delta: None,
        });
    }

    /// Iterations after the starting record.
    pub fn steps(&self) -> u64 {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn last(&self) -> Option<&WalkRecord> {
        self.records.last()
    }

    pub fn best_objective(&self) -> f64 {
        self.records.iter().map(|r| r.objective).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from("iteration,x1,x2,objective,temperature,acceptance_prob\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.iteration,
                r.x1,
                r.x2,
                r.objective,
                opt(r.temperature),
                opt(r.acceptance_prob)
            );
        }
        s
    }
}

/// Best-of-eight hill climbing: moves to the best strictly improving
/// neighbour (first in [`MOVES`] order on ties) until none improves.
pub fn hc_walk(landscape: Landscape, start: (f64, f64), max_iters: u64) -> Result<WalkTrace> {
    let mut pos = GridPos::snap(start.0, start.1)?;
    let mut val = landscape.eval(pos.x1(), pos.x2());
    let mut trace = WalkTrace::default();
    trace.push(0, pos, val);
    for it in 1..=max_iters {
        let mut best: Option<(GridPos, f64)> = None;
        for k in 0..MOVES.len() {
            if let Some(p) = pos.step(k) {
                let v = landscape.eval(p.x1(), p.x2());
                if v > best.map_or(val, |b| b.1) {
                    best = Some((p, v));
                }
            }
        }
        let Some((p, v)) = best else { break };
        pos = p;
        val = v;
        trace.push(it, pos, val);
    }
    Ok(trace)
}

/// Simulated annealing with one uniformly random admissible move per
/// iteration and cooling `T_k = alpha^k * t0`. A move that lowers the
/// objective by `delta > 0` is accepted with probability `exp(-delta / T)`.
pub fn sa_walk(
    landscape: Landscape,
    start: (f64, f64),
    t0: f64,
    alpha: f64,
    rng_seed: u64,
    max_iters: u64,
) -> Result<WalkTrace> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(param("T0", format!("must be > 0, got {t0}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param("alpha", format!("must be in (0, 1), got {alpha}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pos = GridPos::snap(start.0, start.1)?;
    let mut val = landscape.eval(pos.x1(), pos.x2());
    let mut trace = WalkTrace::default();
    trace.push(0, pos, val);
    let mut options = Vec::with_capacity(MOVES.len());
    for k in 0..max_iters {
        let t = t0 * alpha.powf(k as f64);
        options.clear();
        options.extend((0..MOVES.len()).filter_map(|m| pos.step(m)));
        let cand = options[rng.gen_range(0..options.len())];
        let cv = landscape.eval(cand.x1(), cand.x2());
        let delta = val - cv;
        let p = if delta <= 0.0 { 1.0 } else { (-delta / t).exp() };
        // always draw so the random stream does not depend on the outcome
        let u: f64 = rng.gen();
        if delta <= 0.0 || u < p {
            pos = cand;
            val = cv;
        }
        trace.push(k + 1, pos, val);
        let r = trace.records.last_mut().expect("just pushed");
        r.temperature = Some(t);
        r.acceptance_prob = Some(p);
        r.delta = Some(delta);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_grid_start() {
        let p = GridPos::exact(0.8, -0.5).unwrap();
        assert_eq!((p.ix, p.iy), (16, -10));
        assert!(GridPos::exact(0.81, 0.0).is_err());
        assert!(GridPos::exact(0.0, 1.05).is_err());
        assert!(GridPos::exact(-1.0, 1.0).is_ok());
    }

    #[test]
    fn objective_values() {
        assert_eq!(objective_single(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(objective_single(0.0, 1.0).unwrap(), -1.0);
        assert_eq!(objective_single(0.5, 0.5).unwrap(), -0.5);
        assert_eq!(objective_multi(0.0, 0.0).unwrap(), 0.0);
        assert!((objective_multi(0.5, 0.0).unwrap() + 0.45).abs() < 1e-12);
        // cos(4.8 pi) = cos(0.8 pi) = -(1 + sqrt 5) / 4
        let c = -(1.0 + 5f64.sqrt()) / 4.0;
        let expect = -(0.2 + 0.64 + 0.25 - 0.1 * c + 0.1);
        assert!((objective_multi(0.8, -0.5).unwrap() - expect).abs() < 1e-12);
        assert!((expect + 1.2709).abs() < 1e-4);
        assert!(objective_single(1.01, 0.0).is_err());
        assert!(objective_multi(0.0, -1.5).is_err());
    }

    #[test]
    fn hc_single_peak_from_top_edge() {
        let t = hc_walk(Landscape::SinglePeak, (0.0, 1.0), DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(t.steps(), 20);
        let last = t.last().unwrap();
        assert_eq!((last.x1, last.x2, last.objective), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hc_at_peak_stays() {
        for l in [Landscape::SinglePeak, Landscape::MultiPeak] {
            let t = hc_walk(l, (0.0, 0.0), 100).unwrap();
            assert_eq!(t.records.len(), 1);
        }
    }

    #[test]
    fn hc_multi_peak_gets_stuck() {
        let t = hc_walk(Landscape::MultiPeak, (0.8, -0.5), DEFAULT_MAX_ITERS).unwrap();
        let end = t.last().unwrap();
        assert!(end.objective < -0.05, "{end:?}");
        // a local maximum: no admissible neighbour is better
        let p = GridPos::snap(end.x1, end.x2).unwrap();
        for k in 0..8 {
            if let Some(q) = p.step(k) {
                assert!(Landscape::MultiPeak.eval(q.x1(), q.x2()) <= end.objective);
            }
        }
    }

    #[test]
    fn sa_single_peak_reaches_zero() {
        let hits = (0..10)
            .filter(|&s| {
                sa_walk(Landscape::SinglePeak, (0.0, 1.0), 1.0, 0.99, s, 2000)
                    .unwrap()
                    .best_objective()
                    == 0.0
            })
            .count();
        assert!(hits >= 9, "{hits}");
    }

    #[test]
    fn sa_multi_peak_sometimes_finds_global_basin() {
        let hits = (0..10)
            .filter(|&s| {
                sa_walk(Landscape::MultiPeak, (0.8, -0.5), 1.0, 0.99, s, DEFAULT_MAX_ITERS)
                    .unwrap()
                    .best_objective()
                    >= -0.05
            })
            .count();
        assert!(hits >= 1, "{hits}");
    }

    #[test]
    fn sa_records_schedule_and_probabilities() {
        let t = sa_walk(Landscape::MultiPeak, (0.8, -0.5), 1.0, 0.99, 3, 500).unwrap();
        assert_eq!(t.records.len(), 501);
        for r in &t.records[1..] {
            let k = r.iteration - 1;
            let temp = r.temperature.unwrap();
            assert!((temp - 0.99f64.powf(k as f64)).abs() < 1e-12);
            let d = r.delta.unwrap();
            let p = r.acceptance_prob.unwrap();
            if d > 0.0 {
                assert!((p - (-d / temp).exp()).abs() < 1e-12);
            } else {
                assert_eq!(p, 1.0);
            }
        }
        assert_eq!(t, sa_walk(Landscape::MultiPeak, (0.8, -0.5), 1.0, 0.99, 3, 500).unwrap());
        assert!(sa_walk(Landscape::MultiPeak, (0.0, 0.0), 0.0, 0.99, 3, 5).is_err());
        assert!(sa_walk(Landscape::MultiPeak, (0.0, 0.0), 1.0, 1.0, 3, 5).is_err());
    }

    #[test]
    fn csv_columns() {
        let t = sa_walk(Landscape::SinglePeak, (0.0, 1.0), 1.0, 0.99, 0, 3).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iteration,x1,x2,objective,temperature,acceptance_prob"));
        assert_eq!(lines.next(), Some("0,0,1,-1,,"));
        assert_eq!(csv.lines().count(), 5);
    }

    proptest! {
        #[test]
        fn walks_stay_in_domain(ix in -20i32..=20, iy in -20i32..=20, seed in 0u64..50) {
            let start = (ix as f64 / 20.0, iy as f64 / 20.0);
            let sa = sa_walk(Landscape::MultiPeak, start, 1.0, 0.99, seed, 300).unwrap();
            for r in &sa.records {
                prop_assert!(in_domain(r.x1) && in_domain(r.x2));
            }
            let hc = hc_walk(Landscape::SinglePeak, start, DEFAULT_MAX_ITERS).unwrap();
            prop_assert!(hc.records.windows(2).all(|w| w[1].objective > w[0].objective));
            prop_assert_eq!(hc.last().unwrap().objective, 0.0);
        }
    }
}
