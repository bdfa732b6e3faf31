//! Waypoints and the pairwise distance matrix every solver works against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used for great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Position of a waypoint. A set never mixes the two kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coord {
    /// Latitude and longitude in degrees.
    Geographic { lat: f64, lon: f64 },
    /// Cartesian position in meters.
    Planar { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordKind {
    Geographic,
    Planar,
}

impl CoordKind {
    pub fn name(self) -> &'static str {
        match self {
            CoordKind::Geographic => "geographic",
            CoordKind::Planar => "planar",
        }
    }
}

impl Coord {
    pub fn kind(&self) -> CoordKind {
        match self {
            Coord::Geographic { .. } => CoordKind::Geographic,
            Coord::Planar { .. } => CoordKind::Planar,
        }
    }

    /// The (north, east) pair: (lat, lon) or (y, x).
    pub fn north_east(&self) -> (f64, f64) {
        match *self {
            Coord::Geographic { lat, lon } => (lat, lon),
            Coord::Planar { x, y } => (y, x),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |detail: String| Error::CoordinateRange { index, detail };
        match *self {
            Coord::Geographic { lat, lon } => {
                if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
                    return Err(bad(format!("latitude {lat} not in [-90, 90]")));
                }
                if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
                    return Err(bad(format!("longitude {lon} not in [-180, 180]")));
                }
            }
            Coord::Planar { x, y } => {
                if !x.is_finite() || !y.is_finite() {
                    return Err(bad(format!("non-finite planar coordinate ({x}, {y})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub id: usize,
    pub coord: Coord,
}

/// A validated, densely indexed set of waypoints with a uniform coordinate kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSet {
    points: Vec<Waypoint>,
}

impl WaypointSet {
    /// Builds a set from coordinates, assigning ids `0..n` in order.
    pub fn new(coords: Vec<Coord>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("waypoint set"));
        }
        let kind = coords[0].kind();
        for (i, c) in coords.iter().enumerate() {
            if c.kind() != kind {
                return Err(Error::MixedCoordinates);
            }
            c.validate(i)?;
        }
        Ok(WaypointSet {
            points: coords
                .into_iter()
                .enumerate()
                .map(|(id, coord)| Waypoint { id, coord })
                .collect(),
        })
    }

    pub fn geographic(latlon: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            latlon
                .iter()
                .map(|&(lat, lon)| Coord::Geographic { lat, lon })
                .collect(),
        )
    }

    pub fn planar(xy: &[(f64, f64)]) -> Result<Self> {
        Self::new(xy.iter().map(|&(x, y)| Coord::Planar { x, y }).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> CoordKind {
        self.points[0].coord.kind()
    }

    pub fn points(&self) -> &[Waypoint] {
        &self.points
    }

    pub fn coord(&self, i: usize) -> Coord {
        self.points[i].coord
    }

    /// Picks the natural metric for the coordinate kind.
    pub fn default_metric(&self) -> MetricKind {
        match self.kind() {
            CoordKind::Geographic => MetricKind::Haversine,
            CoordKind::Planar => MetricKind::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Haversine,
    Euclidean,
    /// Supplied directly as a table of costs.
    Explicit,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Haversine => "haversine",
            MetricKind::Euclidean => "euclidean",
            MetricKind::Explicit => "explicit",
        }
    }
}

/// Great-circle distance in meters between two lat/lon pairs in degrees.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Immutable symmetric cost table in meters with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
    metric: MetricKind,
}

impl DistanceMatrix {
    pub fn build(points: &WaypointSet, metric: MetricKind) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Empty("waypoint set"));
        }
        let kind = points.kind();
        let ok = matches!(
            (metric, kind),
            (MetricKind::Haversine, CoordKind::Geographic) | (MetricKind::Euclidean, CoordKind::Planar)
        );
        if !ok {
            return Err(Error::MetricMismatch {
                metric: metric.name(),
                kind: kind.name(),
            });
        }
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = match (points.coord(i), points.coord(j)) {
                    (Coord::Geographic { lat: a, lon: b }, Coord::Geographic { lat: c, lon: e }) => {
                        haversine_m(a, b, c, e)
                    }
                    (Coord::Planar { x: a, y: b }, Coord::Planar { x: c, y: e }) => {
                        (a - c).hypot(b - e)
                    }
                    _ => return Err(Error::MixedCoordinates),
                };
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Ok(DistanceMatrix { n, d, metric })
    }

    /// Wraps an explicit cost table after checking shape, symmetry and sign.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("distance matrix"));
        }
        let mut d = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(crate::error::param("rows", format!("row {i} has {} entries, expected {n}", row.len())));
            }
            d.extend_from_slice(row);
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(crate::error::param("rows", format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(crate::error::param("rows", format!("entry ({i}, {j}) = {v}")));
                }
                if v != d[j * n + i] {
                    return Err(crate::error::param("rows", format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix {
            n,
            d,
            metric: MetricKind::Explicit,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Returns a copy with every entry multiplied by `k`.
    pub fn scaled(&self, k: f64) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            d: self.d.iter().map(|v| v * k).collect(),
            metric: self.metric,
        }
    }

    /// First triangle-inequality violation beyond `rel_tol`, if any. O(n³).
    pub fn triangle_violation(&self, rel_tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let dij = self.get(i, j);
                for k in 0..n {
                    let via = self.get(i, k) + self.get(k, j);
                    if dij > via * (1.0 + rel_tol) + f64::EPSILON {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}
