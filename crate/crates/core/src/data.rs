//! Waypoint files, synthetic site generation and route export.
//!
//! Coordinates are written with nine fractional digits. Generated datasets
//! are quantised to that precision up front, so save and load round-trip
//! them bit for bit.

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{param, Error, Result};
use crate::geo::{Coord, CoordKind, WaypointSet, EARTH_RADIUS_M};
use crate::tour::Tour;

/// Fractional digits used for coordinates in every output format.
pub const COORD_DIGITS: usize = 9;

/// Side of the default square site: 11 km².
pub const DEFAULT_SITE_SIDE_M: f64 = 3_316.624_790_355_4;

/// Axis-aligned box. For geographic boxes `x` is longitude and `y` latitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub kind: CoordKind,
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn geographic(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Result<Self> {
        let b = BoundingBox {
            kind: CoordKind::Geographic,
            min_x: min_lon,
            max_x: max_lon,
            min_y: min_lat,
            max_y: max_lat,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn planar(min_x: f64, max_x: f64, min_y: f64, max_y: f64) -> Result<Self> {
        let b = BoundingBox {
            kind: CoordKind::Planar,
            min_x,
            max_x,
            min_y,
            max_y,
        };
        b.validate()?;
        Ok(b)
    }

    /// A square of `side_m` meters centred on a latitude/longitude.
    pub fn square_around(lat: f64, lon: f64, side_m: f64) -> Result<Self> {
        if !(side_m > 0.0) {
            return Err(param("side_m", format!("must be > 0, got {side_m}")));
        }
        let half_lat = (side_m / 2.0 / EARTH_RADIUS_M).to_degrees();
        let half_lon = half_lat / lat.to_radians().cos();
        Self::geographic(lat - half_lat, lat + half_lat, lon - half_lon, lon + half_lon)
    }

    /// The 11 km² default site.
    pub fn default_site() -> Self {
        Self::square_around(6.88, -8.09, DEFAULT_SITE_SIDE_M).expect("valid constant box")
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.min_x, self.max_x, self.min_y, self.max_y];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(param("bbox", "bounds must be finite"));
        }
        if !(self.min_x < self.max_x && self.min_y < self.max_y) {
            return Err(param("bbox", "min must be below max on both axes"));
        }
        if self.kind == CoordKind::Geographic
            && !(self.min_y >= -90.0 && self.max_y <= 90.0 && self.min_x >= -180.0 && self.max_x <= 180.0)
        {
            return Err(param("bbox", "geographic bounds outside lat/lon range"));
        }
        Ok(())
    }

    pub fn contains(&self, c: Coord) -> bool {
        let (y, x) = c.north_east();
        c.kind() == self.kind && (self.min_x..=self.max_x).contains(&x) && (self.min_y..=self.max_y).contains(&y)
    }

    fn coord(&self, x: f64, y: f64) -> Coord {
        match self.kind {
            CoordKind::Geographic => Coord::Geographic { lat: y, lon: x },
            CoordKind::Planar => Coord::Planar { x, y },
        }
    }
}

fn quantize(v: f64, lo: f64, hi: f64) -> f64 {
    let scale = 10f64.powi(COORD_DIGITS as i32);
    ((v * scale).round() / scale).clamp(lo, hi)
}

/// `n` points uniform over `bbox`, quantised to [`COORD_DIGITS`].
pub fn generate_dataset(n: usize, bbox: &BoundingBox, rng_seed: u64) -> Result<WaypointSet> {
    if n == 0 {
        return Err(param("n", "must be >= 1"));
    }
    bbox.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let coords = (0..n)
        .map(|_| {
            let x = quantize(rng.gen_range(bbox.min_x..=bbox.max_x), bbox.min_x, bbox.max_x);
            let y = quantize(rng.gen_range(bbox.min_y..=bbox.max_y), bbox.min_y, bbox.max_y);
            bbox.coord(x, y)
        })
        .collect();
    WaypointSet::new(coords)
}

/// Centres of a `rows x cols` subdivision, row-major from the minimum corner.
pub fn grid_points(bbox: &BoundingBox, rows: usize, cols: usize) -> Result<WaypointSet> {
    if rows == 0 || cols == 0 {
        return Err(param("grid", format!("rows and cols must be >= 1, got {rows}x{cols}")));
    }
    bbox.validate()?;
    let dx = (bbox.max_x - bbox.min_x) / cols as f64;
    let dy = (bbox.max_y - bbox.min_y) / rows as f64;
    let mut coords = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = bbox.min_x + (c as f64 + 0.5) * dx;
            let y = bbox.min_y + (r as f64 + 0.5) * dy;
            coords.push(bbox.coord(x, y));
        }
    }
    WaypointSet::new(coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    GeoJson,
}

impl FileFormat {
    /// Guesses the format from the extension; anything but `.json` or `.geojson` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json" | "geojson") => FileFormat::GeoJson,
            _ => FileFormat::Csv,
        }
    }
}

impl FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FileFormat::Csv),
            "geojson" | "json" => Ok(FileFormat::GeoJson),
            _ => Err(param("format", format!("expected csv or geojson, got {s:?}"))),
        }
    }
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.prec$}", prec = COORD_DIGITS)
}

/// CSV text with header `id,lat,lon` (or `id,x,y` for planar sets).
pub fn to_csv(set: &WaypointSet) -> String {
    let mut out = String::from(match set.kind() {
        CoordKind::Geographic => "id,lat,lon\n",
        CoordKind::Planar => "id,x,y\n",
    });
    for p in set.points() {
        let (a, b) = match p.coord {
            Coord::Geographic { lat, lon } => (lat, lon),
            Coord::Planar { x, y } => (x, y),
        };
        out.push_str(&format!("{},{},{}\n", p.id, fmt_coord(a), fmt_coord(b)));
    }
    out
}

/// Parses waypoint CSV. Explicit ids must be unique; the set is re-indexed
/// densely in file order.
pub fn parse_csv(text: &str) -> Result<WaypointSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, detail: e.to_string() })?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    let kind = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["id", "lat", "lon"] => CoordKind::Geographic,
        ["id", "x", "y"] => CoordKind::Planar,
        _ => {
            return Err(Error::Parse {
                line: 1,
                detail: format!("expected header id,lat,lon or id,x,y, got {}", header.join(",")),
            })
        }
    };
    let mut seen = HashSet::new();
    let mut coords = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            detail: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| Error::Parse { line, detail: format!("missing column {}", k + 1) })
        };
        let num = |k: usize| -> Result<f64> {
            let s = field(k)?;
            s.parse::<f64>().map_err(|_| Error::Parse { line, detail: format!("bad number {s:?}") })
        };
        let id_text = field(0)?;
        let id: i64 = id_text
            .parse()
            .map_err(|_| Error::Parse { line, detail: format!("bad id {id_text:?}") })?;
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
        let (a, b) = (num(1)?, num(2)?);
        coords.push(match kind {
            CoordKind::Geographic => Coord::Geographic { lat: a, lon: b },
            CoordKind::Planar => Coord::Planar { x: a, y: b },
        });
    }
    let set = WaypointSet::new(coords).map_err(|e| match e {
        // point the user at the offending data row (header is line 1)
        Error::CoordinateRange { index, detail } => Error::CoordinateRange {
            index,
            detail: format!("{detail} (line {})", index + 2),
        },
        other => other,
    })?;
    Ok(set)
}

/// A GeoJSON FeatureCollection of Point features with an `id` property.
pub fn to_geojson(set: &WaypointSet) -> Result<String> {
    if set.kind() != CoordKind::Geographic {
        return Err(param("format", "GeoJSON output needs geographic coordinates"));
    }
    let round = |v: f64| -> Value {
        fmt_coord(v).parse::<serde_json::Number>().map(Value::Number).unwrap_or(Value::Null)
    };
    let features: Vec<Value> = set
        .points()
        .iter()
        .map(|p| {
            let (lat, lon) = p.coord.north_east();
            json!({
                "type": "Feature",
                "properties": { "id": p.id },
                "geometry": { "type": "Point", "coordinates": [round(lon), round(lat)] },
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))?)
}

pub fn parse_geojson(text: &str) -> Result<WaypointSet> {
    let doc: Value = serde_json::from_str(text)?;
    let bad = |detail: String| Error::Parse { line: 0, detail };
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("expected a FeatureCollection with a features array".into()))?;
    let mut seen = HashSet::new();
    let mut coords = Vec::with_capacity(features.len());
    for (k, f) in features.iter().enumerate() {
        let geom = f.get("geometry").ok_or_else(|| bad(format!("feature {k} has no geometry")))?;
        if geom.get("type").and_then(Value::as_str) != Some("Point") {
            return Err(bad(format!("feature {k} is not a Point")));
        }
        let pos = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .filter(|a| a.len() >= 2)
            .ok_or_else(|| bad(format!("feature {k} has no [lon, lat] pair")))?;
        let (Some(lon), Some(lat)) = (pos[0].as_f64(), pos[1].as_f64()) else {
            return Err(bad(format!("feature {k} has non-numeric coordinates")));
        };
        let id = f
            .get("properties")
            .and_then(|p| p.get("id"))
            .or_else(|| f.get("id"))
            .and_then(Value::as_i64)
            .unwrap_or(k as i64);
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
        coords.push(Coord::Geographic { lat, lon });
    }
    WaypointSet::new(coords)
}

pub fn load_waypoints(path: &Path, format: FileFormat) -> Result<WaypointSet> {
    let text = fs::read_to_string(path)?;
    match format {
        FileFormat::Csv => parse_csv(&text),
        FileFormat::GeoJson => parse_geojson(&text),
    }
}

pub fn save_waypoints(set: &WaypointSet, path: &Path, format: FileFormat) -> Result<()> {
    let text = match format {
        FileFormat::Csv => to_csv(set),
        FileFormat::GeoJson => to_geojson(set)?,
    };
    write_atomic(path, text.as_bytes())
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One stop of an exported route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RouteStop {
    Geographic { id: usize, lat: f64, lon: f64 },
    Planar { id: usize, x: f64, y: f64 },
}

impl RouteStop {
    pub fn id(&self) -> usize {
        match *self {
            RouteStop::Geographic { id, .. } | RouteStop::Planar { id, .. } => id,
        }
    }
}

/// Ordered coordinate list handed to the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteExport {
    pub length_m: f64,
    pub route: Vec<RouteStop>,
}

impl RouteExport {
    pub fn new(tour: &Tour, points: &WaypointSet) -> Result<Self> {
        crate::tour::validate_order(tour.order(), points.len())?;
        let route = tour
            .order()
            .iter()
            .map(|&i| match points.coord(i) {
                Coord::Geographic { lat, lon } => RouteStop::Geographic { id: i, lat, lon },
                Coord::Planar { x, y } => RouteStop::Planar { id: i, x, y },
            })
            .collect();
        Ok(RouteExport {
            length_m: tour.length_m(),
            route,
        })
    }

    pub fn order(&self) -> Vec<usize> {
        self.route.iter().map(RouteStop::id).collect()
    }
}

pub fn export_route(tour: &Tour, points: &WaypointSet, path: &Path) -> Result<()> {
    let export = RouteExport::new(tour, points)?;
    write_atomic(path, serde_json::to_string_pretty(&export)?.as_bytes())
}

pub fn load_route(path: &Path) -> Result<RouteExport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
