use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_index, check_min_size};
use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;
use crate::tour::Tour;

/// Which city joins the partial tour next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    /// Closest to any city already in the tour.
    Nearest,
    /// Farthest from the tour (max over cities of the min distance to it).
    Farthest,
    /// Smallest insertion cost increase.
    Cheapest,
}

/// How the partial tour is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// From the start city and its selector-chosen partner.
    Sequential,
    /// From the globally cheapest edge.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionStrategy {
    pub selector: Selector,
    pub scope: Scope,
}

impl InsertionStrategy {
    pub const fn new(selector: Selector, scope: Scope) -> Self {
        InsertionStrategy { selector, scope }
    }
}

impl Default for InsertionStrategy {
    fn default() -> Self {
        InsertionStrategy::new(Selector::Cheapest, Scope::Sequential)
    }
}

impl FromStr for Selector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Selector::Nearest),
            "farthest" => Ok(Selector::Farthest),
            "cheapest" => Ok(Selector::Cheapest),
            other => Err(crate::error::param("selector", format!("unknown selector `{other}`"))),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Scope::Sequential),
            "parallel" => Ok(Scope::Parallel),
            other => Err(crate::error::param("scope", format!("unknown scope `{other}`"))),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selector::Nearest => "nearest",
            Selector::Farthest => "farthest",
            Selector::Cheapest => "cheapest",
        })
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Sequential => "sequential",
            Scope::Parallel => "parallel",
        })
    }
}

/// Cheapest splice position for `c`: returns (delta, index after which to insert).
fn best_position(d: &DistanceMatrix, tour: &[usize], c: usize) -> (f64, usize) {
    let m = tour.len();
    let mut best = (f64::INFINITY, 0);
    for k in 0..m {
        let (a, b) = (tour[k], tour[(k + 1) % m]);
        let delta = d.get(a, c) + d.get(c, b) - d.get(a, b);
        if delta < best.0 {
            best = (delta, k);
        }
    }
    best
}

/// Insertion family: grow a cycle one city at a time, splicing each at its
/// cheapest position.
pub fn insertion(d: &DistanceMatrix, strategy: InsertionStrategy, start: usize) -> Result<Tour> {
    check_min_size(d, 3)?;
    let n = d.n();
    check_index(start, n)?;

    let (a, b) = match strategy.scope {
        Scope::Sequential => {
            let mut partner = usize::MAX;
            for j in (0..n).filter(|&j| j != start) {
                let better = partner == usize::MAX
                    || match strategy.selector {
                        Selector::Farthest => d.get(start, j) > d.get(start, partner),
                        Selector::Nearest | Selector::Cheapest => {
                            d.get(start, j) < d.get(start, partner)
                        }
                    };
                if better {
                    partner = j;
                }
            }
            (start, partner)
        }
        Scope::Parallel => {
            let mut best = (f64::INFINITY, 0, 1);
            for i in 0..n {
                for j in (i + 1)..n {
                    if d.get(i, j) < best.0 {
                        best = (d.get(i, j), i, j);
                    }
                }
            }
            (best.1, best.2)
        }
    };

    let mut tour = vec![a, b];
    let mut in_tour = vec![false; n];
    in_tour[a] = true;
    in_tour[b] = true;
    // distance from each outside city to its closest tour city
    let mut near: Vec<f64> = (0..n).map(|c| d.get(c, a).min(d.get(c, b))).collect();

    while tour.len() < n {
        let (city, pos) = match strategy.selector {
            Selector::Nearest | Selector::Farthest => {
                let mut pick = usize::MAX;
                for c in (0..n).filter(|&c| !in_tour[c]) {
                    let better = pick == usize::MAX
                        || if strategy.selector == Selector::Nearest {
                            near[c] < near[pick]
                        } else {
                            near[c] > near[pick]
                        };
                    if better {
                        pick = c;
                    }
                }
                (pick, best_position(d, &tour, pick).1)
            }
            Selector::Cheapest => {
                let mut pick = (f64::INFINITY, usize::MAX, 0);
                for c in (0..n).filter(|&c| !in_tour[c]) {
                    let (delta, k) = best_position(d, &tour, c);
                    if delta < pick.0 || pick.1 == usize::MAX {
                        pick = (delta, c, k);
                    }
                }
                (pick.1, pick.2)
            }
        };
        tour.insert(pos + 1, city);
        in_tour[city] = true;
        for c in 0..n {
            near[c] = near[c].min(d.get(c, city));
        }
    }
    Ok(Tour::from_valid(tour, d))
}
