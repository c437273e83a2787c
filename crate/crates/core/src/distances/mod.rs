//! Country distance tables and the correlation of divergence metrics with
//! them.

mod correlate;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Iso;

pub use correlate::{
    correlate, write_results_csv, Aggregation, CorrelationConfig, CorrelationReport,
    CorrelationResult, Coverage, GroupBy,
};
pub use stats::{pearson, welch_t_test, CorrelationFlag, Pearson, Welch};

/// Mean Earth radius used for great-circle distances, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Two values for the same pair closer than this are not a conflict.
const CONFLICT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conflicting distances for {}", fmt_conflicts(.0))]
    Conflicts(Vec<(Iso, Iso, f64, f64)>),
    #[error("invalid distance {value} for ({a}, {b})")]
    InvalidDistance { a: Iso, b: Iso, value: f64 },
    #[error("invalid coordinate for {iso}: ({x}, {y})")]
    InvalidCoordinate { iso: Iso, x: f64, y: f64 },
}

fn fmt_conflicts(c: &[(Iso, Iso, f64, f64)]) -> String {
    c.iter()
        .map(|(a, b, x, y)| format!("{a}-{b} ({x} vs {y})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Cultural,
    Linguistic,
    Religious,
    Geographic,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Cultural,
        Dimension::Linguistic,
        Dimension::Religious,
        Dimension::Geographic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Cultural => "cultural",
            Dimension::Linguistic => "linguistic",
            Dimension::Religious => "religious",
            Dimension::Geographic => "geographic",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown dimension `{s}`"))
    }
}

fn key(a: &str, b: &str) -> (Iso, Iso) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Symmetric country-pair distances along one dimension. The diagonal is
/// implicit and zero for every listed country.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    dimension: Dimension,
    entries: BTreeMap<(Iso, Iso), f64>,
    countries: BTreeSet<Iso>,
}

impl DistanceTable {
    /// Builds a table from unordered pairs. A pair may appear in both
    /// orientations only with the same value.
    pub fn from_pairs<I, A, B>(dimension: Dimension, pairs: I) -> Result<Self, DistanceError>
    where
        I: IntoIterator<Item = (A, B, f64)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut entries: BTreeMap<(Iso, Iso), f64> = BTreeMap::new();
        let mut countries = BTreeSet::new();
        let mut conflicts = Vec::new();
        for (a, b, d) in pairs {
            let (a, b) = (
                a.as_ref().trim().to_uppercase(),
                b.as_ref().trim().to_uppercase(),
            );
            if !d.is_finite() || d < 0.0 || (a == b && d != 0.0) {
                return Err(DistanceError::InvalidDistance { a, b, value: d });
            }
            countries.insert(a.clone());
            countries.insert(b.clone());
            if a == b {
                continue;
            }
            let k = key(&a, &b);
            match entries.get(&k) {
                Some(&old) if (old - d).abs() > CONFLICT_TOLERANCE => {
                    conflicts.push((k.0.clone(), k.1.clone(), old, d));
                }
                Some(_) => {}
                None => {
                    entries.insert(k, d);
                }
            }
        }
        if !conflicts.is_empty() {
            return Err(DistanceError::Conflicts(conflicts));
        }
        Ok(DistanceTable {
            dimension,
            entries,
            countries,
        })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn countries(&self) -> &BTreeSet<Iso> {
        &self.countries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distance between two countries; `None` when either is unknown or the
    /// pair was never given.
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        if a == b {
            return self.countries.contains(a).then_some(0.0);
        }
        self.entries.get(&key(a, b)).copied()
    }

    /// Off-diagonal entries with `a < b`.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries
            .iter()
            .map(|((a, b), d)| (a.as_str(), b.as_str(), *d))
    }

    /// Same table with every distance mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, DistanceError> {
        DistanceTable::from_pairs(
            self.dimension,
            self.entries()
                .map(|(a, b, d)| (a.to_string(), b.to_string(), f(d))),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iso_a", "iso_b", "distance"])?;
        for (a, b, d) in self.entries() {
            w.write_record([a, b, &d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads `iso_a,iso_b,distance` rows. A header row is optional.
pub fn read_distance_table<R: Read>(
    input: R,
    dimension: Dimension,
) -> Result<DistanceTable, DistanceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut pairs = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| DistanceError::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(DistanceError::Parse {
                line,
                message: format!("expected 3 fields, got {}", row.len()),
            });
        }
        let value = match row[2].parse::<f64>() {
            Ok(v) => v,
            Err(_) if line == 1 => continue,
            Err(e) => {
                return Err(DistanceError::Parse {
                    line,
                    message: format!("distance `{}`: {e}", &row[2]),
                })
            }
        };
        pairs.push((row[0].to_string(), row[1].to_string(), value));
    }
    DistanceTable::from_pairs(dimension, pairs)
}

pub fn load_distance_table(
    path: &Path,
    dimension: Dimension,
) -> Result<DistanceTable, DistanceError> {
    let file = std::fs::File::open(path).map_err(|source| DistanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_distance_table(file, dimension)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateKind {
    /// Two cultural-map axes (traditional/secular, survival/self-expression).
    Map,
    /// Latitude and longitude in degrees.
    LatLon,
}

/// One point per country.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryCoordinates {
    pub kind: CoordinateKind,
    points: BTreeMap<Iso, (f64, f64)>,
}

impl CountryCoordinates {
    pub fn new<I, S>(kind: CoordinateKind, points: I) -> Result<Self, DistanceError>
    where
        I: IntoIterator<Item = (S, f64, f64)>,
        S: AsRef<str>,
    {
        let mut out = BTreeMap::new();
        for (iso, x, y) in points {
            let iso = iso.as_ref().trim().to_uppercase();
            let ok = x.is_finite()
                && y.is_finite()
                && (kind == CoordinateKind::Map
                    || ((-90.0..=90.0).contains(&x) && (-180.0..=180.0).contains(&y)));
            if !ok {
                return Err(DistanceError::InvalidCoordinate { iso, x, y });
            }
            out.insert(iso, (x, y));
        }
        Ok(CountryCoordinates { kind, points: out })
    }

    pub fn get(&self, iso: &str) -> Option<(f64, f64)> {
        self.points.get(iso).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, (f64, f64))> {
        self.points.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Reads `iso,x,y` or `iso,lat,lon`. The header decides the kind; without a
/// recognised header the caller's `default` applies.
pub fn read_coordinates<R: Read>(
    input: R,
    default: CoordinateKind,
) -> Result<CountryCoordinates, DistanceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut kind = default;
    let mut points = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| DistanceError::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(DistanceError::Parse {
                line,
                message: format!("expected 3 fields, got {}", row.len()),
            });
        }
        if line == 1 && row[1].parse::<f64>().is_err() {
            match (
                row[1].to_lowercase().as_str(),
                row[2].to_lowercase().as_str(),
            ) {
                ("lat" | "latitude", "lon" | "lng" | "longitude") => kind = CoordinateKind::LatLon,
                ("x", "y") => kind = CoordinateKind::Map,
                (a, b) => {
                    return Err(DistanceError::Parse {
                        line,
                        message: format!("unknown coordinate columns `{a},{b}`"),
                    })
                }
            }
            continue;
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|e| DistanceError::Parse {
                line,
                message: format!("`{s}`: {e}"),
            })
        };
        points.push((row[0].to_string(), num(&row[1])?, num(&row[2])?));
    }
    CountryCoordinates::new(kind, points)
}

pub fn load_coordinates(
    path: &Path,
    default: CoordinateKind,
) -> Result<CountryCoordinates, DistanceError> {
    let file = std::fs::File::open(path).map_err(|source| DistanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_coordinates(file, default)
}

/// Pairwise Euclidean distance on the cultural map.
pub fn cultural_distance(coords: &CountryCoordinates) -> DistanceTable {
    pairwise(coords, Dimension::Cultural, |(x1, y1), (x2, y2)| {
        (x1 - x2).hypot(y1 - y2)
    })
}

/// Great-circle distance in km between country centroids.
pub fn geographic_distance(coords: &CountryCoordinates) -> DistanceTable {
    pairwise(coords, Dimension::Geographic, haversine_km)
}

pub fn haversine_km((lat1, lon1): (f64, f64), (lat2, lon2): (f64, f64)) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

fn pairwise(
    coords: &CountryCoordinates,
    dimension: Dimension,
    f: impl Fn((f64, f64), (f64, f64)) -> f64,
) -> DistanceTable {
    let pts: Vec<_> = coords.iter().collect();
    let mut entries = BTreeMap::new();
    for (i, (a, pa)) in pts.iter().enumerate() {
        for (b, pb) in &pts[i + 1..] {
            entries.insert(key(a, b), f(*pa, *pb));
        }
    }
    DistanceTable {
        dimension,
        entries,
        countries: pts.iter().map(|(a, _)| a.to_string()).collect(),
    }
}
