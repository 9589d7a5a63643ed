//! Gridded-dataset ingestion: `lon,lat,value` CSV files covering a
//! complete rectangular grid.
//!
//! Rows may appear in any order; the loader reconstructs the two axes
//! from the distinct coordinates seen and then demands exactly one row
//! per (lon, lat) node. Errors carry the 1-based file row so a broken
//! line in a 2,809-row grid can be found without bisecting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hotspot_core::field::FieldError;
use hotspot_core::GriddedField;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: expected header `lon,lat,value`, found `{found}`")]
    Header { path: PathBuf, found: String },
    #[error("{path} row {row}: {message}")]
    Row {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{path}: incomplete {nx}x{ny} grid, {count} node(s) missing: {listed}")]
    Incomplete {
        path: PathBuf,
        nx: usize,
        ny: usize,
        count: usize,
        listed: String,
    },
    #[error("{path}: {source}")]
    Field {
        path: PathBuf,
        #[source]
        source: FieldError,
    },
}

/// Exact-bit key for an already-parsed finite coordinate, so repeated
/// occurrences of the same printed number collapse to one axis tick.
fn key(v: f64) -> u64 {
    v.to_bits()
}

/// Loads a complete rectangular grid of `lon,lat,value` rows and builds
/// the radial-basis interpolant over it.
pub fn load_gridded_field(path: &Path) -> Result<GriddedField, DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(io)?;

    let headers = reader.headers().map_err(io)?;
    let found: Vec<&str> = headers.iter().collect();
    if found != ["lon", "lat", "value"] {
        return Err(DatasetError::Header {
            path: path.to_path_buf(),
            found: found.join(","),
        });
    }

    // File row of each record: header is row 1, first record row 2.
    let mut rows: Vec<(f64, f64, f64, u64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|e| DatasetError::Row {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let bad = |message: String| DatasetError::Row {
            path: path.to_path_buf(),
            row,
            message,
        };
        if record.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", record.len())));
        }
        let mut parsed = [0.0f64; 3];
        for (j, name) in ["lon", "lat", "value"].iter().enumerate() {
            let text = &record[j];
            let v: f64 = text
                .parse()
                .map_err(|_| bad(format!("{name} `{text}` is not a number")))?;
            if !v.is_finite() {
                return Err(bad(format!("{name} `{text}` is not finite")));
            }
            parsed[j] = v;
        }
        rows.push((parsed[0], parsed[1], parsed[2], row));
    }

    let mut lon_ticks: BTreeMap<u64, f64> = BTreeMap::new();
    let mut lat_ticks: BTreeMap<u64, f64> = BTreeMap::new();
    for (lon, lat, _, _) in &rows {
        lon_ticks.insert(key(*lon), *lon);
        lat_ticks.insert(key(*lat), *lat);
    }
    let mut lon_axis: Vec<f64> = lon_ticks.into_values().collect();
    let mut lat_axis: Vec<f64> = lat_ticks.into_values().collect();
    lon_axis.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    lat_axis.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let (nx, ny) = (lon_axis.len(), lat_axis.len());

    let lon_index: BTreeMap<u64, usize> = lon_axis
        .iter()
        .enumerate()
        .map(|(i, v)| (key(*v), i))
        .collect();
    let lat_index: BTreeMap<u64, usize> = lat_axis
        .iter()
        .enumerate()
        .map(|(i, v)| (key(*v), i))
        .collect();

    let mut values = vec![f64::NAN; nx * ny];
    let mut seen_row = vec![0u64; nx * ny];
    for (lon, lat, value, row) in &rows {
        let node = lat_index[&key(*lat)] * nx + lon_index[&key(*lon)];
        if seen_row[node] != 0 {
            return Err(DatasetError::Row {
                path: path.to_path_buf(),
                row: *row,
                message: format!(
                    "duplicate node ({lon}, {lat}), first seen at row {}",
                    seen_row[node]
                ),
            });
        }
        seen_row[node] = *row;
        values[node] = *value;
    }

    let missing: Vec<String> = (0..nx * ny)
        .filter(|n| seen_row[*n] == 0)
        .map(|n| format!("({}, {})", lon_axis[n % nx], lat_axis[n / nx]))
        .collect();
    if !missing.is_empty() {
        const LIST_CAP: usize = 5;
        let mut listed = missing[..missing.len().min(LIST_CAP)].join(", ");
        if missing.len() > LIST_CAP {
            listed.push_str(&format!(", ... and {} more", missing.len() - LIST_CAP));
        }
        return Err(DatasetError::Incomplete {
            path: path.to_path_buf(),
            nx,
            ny,
            count: missing.len(),
            listed,
        });
    }

    GriddedField::from_grid(lon_axis, lat_axis, values).map_err(|source| DatasetError::Field {
        path: path.to_path_buf(),
        source,
    })
}
