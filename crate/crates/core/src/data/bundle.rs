//! On-disk dataset bundle.
//!
//! A bundle is a directory holding
//!
//! * `images.jsonl`: one object per line with `id`, `timestamp`, optional
//!   `lat`/`lon`, and `faces` / `locations` index lists,
//! * `face_features.csv`, `location_features.csv`: one headerless row per
//!   patch,
//! * `verified_pairs.csv`: two headerless columns of location indices,
//! * `ground_truth.json` (optional): `face_labels` and `location_labels`.
//!
//! Numbers are written with Rust's shortest round-trip float formatting, so
//! loading and re-saving a bundle written here reproduces it byte for byte.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, GroundTruth, ImageRecord};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const IMAGES_FILE: &str = "images.jsonl";
pub const FACE_FEATURES_FILE: &str = "face_features.csv";
pub const LOCATION_FEATURES_FILE: &str = "location_features.csv";
pub const VERIFIED_PAIRS_FILE: &str = "verified_pairs.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Serialize, Deserialize)]
struct ImageLine {
    id: String,
    #[serde(default)]
    timestamp: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    #[serde(default)]
    faces: Vec<usize>,
    #[serde(default)]
    locations: Vec<usize>,
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let images = read_images(&dir.join(IMAGES_FILE))?;
    let faces = read_feature_rows(&dir.join(FACE_FEATURES_FILE))?;
    let locations = read_feature_rows(&dir.join(LOCATION_FEATURES_FILE))?;
    let pairs_path = dir.join(VERIFIED_PAIRS_FILE);
    let pairs = if pairs_path.exists() {
        read_pairs(&pairs_path)?
    } else {
        Vec::new()
    };
    Dataset::new(images, faces, locations, pairs)
}

/// Reads `ground_truth.json` from a bundle, returning `None` when absent.
pub fn load_ground_truth(dir: impl AsRef<Path>) -> Result<Option<GroundTruth>> {
    let path = dir.as_ref().join(GROUND_TRUTH_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let truth = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(Some(truth))
}

pub fn save_dataset(
    dir: impl AsRef<Path>,
    dataset: &Dataset,
    truth: Option<&GroundTruth>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(IMAGES_FILE);
    let mut out = create(&path)?;
    for image in dataset.images() {
        let line = ImageLine {
            id: image.id.clone(),
            timestamp: Some(image.timestamp),
            lat: image.geo.map(|g| g.lat),
            lon: image.geo.map(|g| g.lon),
            faces: image.faces.clone(),
            locations: image.locations.clone(),
        };
        let json = serde_json::to_string(&line).expect("image line serializes");
        writeln!(out, "{json}").map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    write_rows(&dir.join(FACE_FEATURES_FILE), dataset.face_features())?;
    write_rows(
        &dir.join(LOCATION_FEATURES_FILE),
        dataset.location_features(),
    )?;

    let path = dir.join(VERIFIED_PAIRS_FILE);
    let mut out = create(&path)?;
    for &(a, b) in dataset.verified_pairs() {
        writeln!(out, "{a},{b}").map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    if let Some(truth) = truth {
        let path = dir.join(GROUND_TRUTH_FILE);
        let json = serde_json::to_string(truth).expect("ground truth serializes");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn read_images(path: &Path) -> Result<Vec<ImageRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut images = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            file: IMAGES_FILE.into(),
            line: i + 1,
            message,
        };
        let raw: ImageLine = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let timestamp = raw
            .timestamp
            .ok_or_else(|| Error::MissingTimestamp(raw.id.clone()))?;
        let geo = match (raw.lat, raw.lon) {
            (Some(lat), Some(lon)) => Some(GeoPoint::new(lat, lon)),
            (None, None) => None,
            _ => return Err(parse_err("`lat` and `lon` must be given together".into())),
        };
        images.push(ImageRecord {
            id: raw.id,
            timestamp,
            geo,
            faces: raw.faces,
            locations: raw.locations,
        });
    }
    Ok(images)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn read_feature_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            file: file_name(path),
            line: i + 1,
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|field| {
                field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    file: file_name(path),
                    line: i + 1,
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_pairs(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let err = |message: String| Error::Parse {
            file: file_name(path),
            line: i + 1,
            message,
        };
        let record = record.map_err(|e| err(e.to_string()))?;
        if record.len() != 2 {
            return Err(err(format!("expected 2 columns, found {}", record.len())));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| err(format!("{s:?}: {e}")))
        };
        pairs.push((parse(&record[0])?, parse(&record[1])?));
    }
    Ok(pairs)
}

fn write_rows(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = create(path)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
