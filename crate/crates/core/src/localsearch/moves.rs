//! Tour moves shared by the improvement heuristics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geo::DistanceMatrix;

/// Edge costs seen by a search: the true matrix or a penalised view of it.
pub trait EdgeCost {
    fn cost(&self, a: usize, b: usize) -> f64;
}

impl EdgeCost for DistanceMatrix {
    #[inline]
    fn cost(&self, a: usize, b: usize) -> f64 {
        self.get(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// Swap two cities adjacent in the tour.
    AdjacentSwap,
    /// Reverse a segment, replacing two edges with two others.
    #[default]
    TwoOpt,
    /// Relocate a run of one to three cities, optionally reversed.
    OrOpt,
}

impl std::str::FromStr for Neighborhood {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "adjacent_swap" | "swap" => Ok(Neighborhood::AdjacentSwap),
            "two_opt" | "2opt" | "2-opt" => Ok(Neighborhood::TwoOpt),
            "or_opt" | "oropt" | "or-opt" => Ok(Neighborhood::OrOpt),
            other => Err(crate::error::param(
                "neighborhood",
                format!("unknown neighborhood `{other}`"),
            )),
        }
    }
}

/// A move expressed over tour positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Reverse positions `i+1..=j`.
    TwoOpt { i: usize, j: usize },
    /// Swap positions `i` and `i+1` (mod n).
    Swap { i: usize },
    /// Move positions `from..from+len` to just after the city at position `after`.
    OrOpt {
        from: usize,
        len: usize,
        after: usize,
        reversed: bool,
    },
}

const OR_OPT_MAX: usize = 3;

impl Move {
    /// Cost change from applying the move to `t`.
    pub fn delta<W: EdgeCost + ?Sized>(&self, t: &[usize], w: &W) -> f64 {
        let n = t.len();
        match *self {
            Move::TwoOpt { i, j } => {
                let (a, b, c, e) = (t[i], t[i + 1], t[j], t[(j + 1) % n]);
                w.cost(a, c) + w.cost(b, e) - w.cost(a, b) - w.cost(c, e)
            }
            Move::Swap { i } => {
                let a = t[(i + n - 1) % n];
                let b = t[i];
                let c = t[(i + 1) % n];
                let e = t[(i + 2) % n];
                w.cost(a, c) + w.cost(b, e) - w.cost(a, b) - w.cost(c, e)
            }
            Move::OrOpt {
                from,
                len,
                after,
                reversed,
            } => {
                let p = t[(from + n - 1) % n];
                let s0 = t[from];
                let s1 = t[from + len - 1];
                let q = t[(from + len) % n];
                let x = t[after];
                let y = t[(after + 1) % n];
                let (head, tail) = if reversed { (s1, s0) } else { (s0, s1) };
                w.cost(p, q) + w.cost(x, head) + w.cost(tail, y)
                    - w.cost(p, s0)
                    - w.cost(s1, q)
                    - w.cost(x, y)
            }
        }
    }

    pub fn apply(&self, t: &mut Vec<usize>) {
        let n = t.len();
        match *self {
            Move::TwoOpt { i, j } => t[i + 1..=j].reverse(),
            Move::Swap { i } => t.swap(i, (i + 1) % n),
            Move::OrOpt {
                from,
                len,
                after,
                reversed,
            } => {
                let x = t[after];
                let mut seg: Vec<usize> = t.drain(from..from + len).collect();
                if reversed {
                    seg.reverse();
                }
                let pos = t.iter().position(|&c| c == x).expect("anchor city present") + 1;
                t.splice(pos..pos, seg);
            }
        }
    }

    /// The two tour edges removed by a 2-opt move, as sorted city pairs.
    pub fn removed_edges(&self, t: &[usize]) -> [(usize, usize); 2] {
        let n = t.len();
        let pair = |a: usize, b: usize| (a.min(b), a.max(b));
        match *self {
            Move::TwoOpt { i, j } => [pair(t[i], t[i + 1]), pair(t[j], t[(j + 1) % n])],
            Move::Swap { i } => [
                pair(t[(i + n - 1) % n], t[i]),
                pair(t[(i + 1) % n], t[(i + 2) % n]),
            ],
            Move::OrOpt { from, len, .. } => [
                pair(t[(from + n - 1) % n], t[from]),
                pair(t[from + len - 1], t[(from + len) % n]),
            ],
        }
    }

    /// The two edges a 2-opt move adds.
    pub fn added_edges(&self, t: &[usize]) -> [(usize, usize); 2] {
        let n = t.len();
        let pair = |a: usize, b: usize| (a.min(b), a.max(b));
        match *self {
            Move::TwoOpt { i, j } => [pair(t[i], t[j]), pair(t[i + 1], t[(j + 1) % n])],
            Move::Swap { i } => [
                pair(t[(i + n - 1) % n], t[(i + 1) % n]),
                pair(t[i], t[(i + 2) % n]),
            ],
            Move::OrOpt { from, len, .. } => [
                pair(t[(from + n - 1) % n], t[(from + len) % n]),
                pair(t[from], t[from + len - 1]),
            ],
        }
    }
}

/// Calls `f` on every move of the neighborhood for a tour of length `n`.
pub fn for_each_move(kind: Neighborhood, n: usize, mut f: impl FnMut(Move)) {
    if n < 4 {
        return;
    }
    match kind {
        Neighborhood::TwoOpt => {
            for i in 0..n - 1 {
                let last = if i == 0 { n - 2 } else { n - 1 };
                for j in (i + 2)..=last {
                    f(Move::TwoOpt { i, j });
                }
            }
        }
        Neighborhood::AdjacentSwap => {
            for i in 0..n {
                f(Move::Swap { i });
            }
        }
        Neighborhood::OrOpt => {
            for len in 1..=OR_OPT_MAX.min(n - 3) {
                for from in 0..=(n - len) {
                    if from + len > n {
                        continue;
                    }
                    for after in 0..n {
                        // the anchor edge must lie outside the segment and not be its own gap
                        let inside = after >= from && after < from + len;
                        let prev = (from + n - 1) % n;
                        if inside || after == prev {
                            continue;
                        }
                        for reversed in [false, true] {
                            if reversed && len == 1 {
                                continue;
                            }
                            f(Move::OrOpt {
                                from,
                                len,
                                after,
                                reversed,
                            });
                        }
                    }
                }
            }
        }
    }
}

/// Draws a uniformly random move of the neighborhood.
pub fn random_move<R: Rng>(kind: Neighborhood, n: usize, rng: &mut R) -> Option<Move> {
    if n < 4 {
        return None;
    }
    Some(match kind {
        Neighborhood::TwoOpt => loop {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let (i, j) = (a.min(b), a.max(b));
            if j >= i + 2 && !(i == 0 && j == n - 1) {
                break Move::TwoOpt { i, j };
            }
        },
        Neighborhood::AdjacentSwap => Move::Swap {
            i: rng.gen_range(0..n),
        },
        Neighborhood::OrOpt => loop {
            let len = rng.gen_range(1..=OR_OPT_MAX.min(n - 3));
            let from = rng.gen_range(0..=(n - len));
            if from + len > n {
                continue;
            }
            let after = rng.gen_range(0..n);
            let prev = (from + n - 1) % n;
            if (after >= from && after < from + len) || after == prev {
                continue;
            }
            let reversed = len > 1 && rng.gen_bool(0.5);
            break Move::OrOpt {
                from,
                len,
                after,
                reversed,
            };
        },
    })
}

/// Cost of the closed cycle under `w`.
pub fn cycle_cost<W: EdgeCost + ?Sized>(t: &[usize], w: &W) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = w.cost(t[n - 1], t[0]);
    for k in 0..n - 1 {
        total += w.cost(t[k], t[k + 1]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fixtures::random;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_all(kind: Neighborhood, n: usize, seed: u64) {
        let d = random(n, seed);
        let t: Vec<usize> = (0..n).collect();
        let base = cycle_cost(&t, &d);
        let mut count = 0;
        for_each_move(kind, n, |m| {
            let mut u = t.clone();
            let delta = m.delta(&t, &d);
            m.apply(&mut u);
            crate::tour::validate_order(&u, n).unwrap();
            let after = cycle_cost(&u, &d);
            assert!(
                (after - base - delta).abs() < 1e-7,
                "{m:?}: {after} - {base} != {delta}"
            );
            count += 1;
        });
        assert!(count > 0);
    }

    #[test]
    fn deltas_match_recomputation() {
        for n in [4, 5, 6, 9] {
            for kind in [Neighborhood::TwoOpt, Neighborhood::AdjacentSwap, Neighborhood::OrOpt] {
                check_all(kind, n, n as u64);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("two_opt".parse::<Neighborhood>().unwrap(), Neighborhood::TwoOpt);
        assert_eq!("or_opt".parse::<Neighborhood>().unwrap(), Neighborhood::OrOpt);
        assert!("three_opt".parse::<Neighborhood>().is_err());
    }

    proptest! {
        #[test]
        fn random_moves_keep_permutation(seed in 0u64..500, n in 4usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random(n, seed);
            for kind in [Neighborhood::TwoOpt, Neighborhood::AdjacentSwap, Neighborhood::OrOpt] {
                let mut t: Vec<usize> = (0..n).collect();
                for _ in 0..20 {
                    let m = random_move(kind, n, &mut rng).unwrap();
                    let before = cycle_cost(&t, &d);
                    let delta = m.delta(&t, &d);
                    m.apply(&mut t);
                    prop_assert!(crate::tour::validate_order(&t, n).is_ok());
                    prop_assert!((cycle_cost(&t, &d) - before - delta).abs() < 1e-7);
                }
            }
        }
    }
}
