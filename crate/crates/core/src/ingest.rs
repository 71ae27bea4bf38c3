//! Reading and writing rating datasets.
//!
//! Supported inputs:
//!
//! * MovieLens `.dat` logs: `UserID::MovieID::Rating::Timestamp`, no header,
//!   integer ratings. Timestamps are validated and dropped.
//! * CSV triples with the header `user,object,rating` and decimal ratings.
//! * Benchmark lists: one external object id per line, `#` starts a comment.
//!
//! External ids are re-indexed densely in ascending order (numeric order when
//! every id is an integer, lexicographic otherwise). Tables written by
//! [`export_table`] use their internal indices as ids, so loading them back
//! reproduces the table exactly as long as every user and object has at least
//! one rating.
//!
//! A dataset is described by a flat TOML manifest:
//!
//! ```toml
//! name = "movielens-1m"
//! ratings_path = "ratings.dat"        # relative to the manifest file
//! benchmark_path = "oscar_winners.txt" # optional
//! format = "movielens_dat"            # or "csv_triples"
//! rating_scale = [0.0, 5.0]           # optional, default [0, 5]
//! declared_counts = [6040, 3900, 74]  # optional N, M, S
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::metrics::{BenchmarkSet, MetricError};
use crate::model::{GroundTruth, Rating, RatingBounds, RatingTable, TableError};

pub const RATINGS_FILE: &str = "ratings.csv";
pub const TRUTH_OBJECTS_FILE: &str = "truth_objects.csv";
pub const TRUTH_USERS_FILE: &str = "truth_users.csv";
const CSV_HEADER: [&str; 3] = ["user", "object", "rating"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{path}:{line}: rating {value} is outside the rating scale {bounds}")]
    RatingOutOfScale {
        path: PathBuf,
        line: u64,
        value: f64,
        bounds: RatingBounds,
    },
    #[error("{dataset}: declared {what} count {expected} but found {found}")]
    CountMismatch {
        dataset: String,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{path}: no benchmark id matches the dataset ({skipped} unknown)")]
    NoBenchmarks { path: PathBuf, skipped: usize },
    #[error("manifest for {0} names no benchmark file")]
    NoBenchmarkPath(String),
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Benchmark(#[from] MetricError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    MovielensDat,
    CsvTriples,
}

/// Expected dataset shape, checked after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeclaredCounts {
    pub users: usize,
    pub objects: usize,
    pub benchmarks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub ratings_path: PathBuf,
    pub benchmark_path: Option<PathBuf>,
    pub format: DatasetFormat,
    pub rating_scale: RatingBounds,
    pub declared_counts: Option<DeclaredCounts>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    name: Option<String>,
    ratings_path: PathBuf,
    benchmark_path: Option<PathBuf>,
    format: DatasetFormat,
    rating_scale: Option<[f64; 2]>,
    declared_counts: Option<[usize; 3]>,
}

impl DatasetManifest {
    pub fn new(ratings_path: impl Into<PathBuf>, format: DatasetFormat) -> Self {
        let ratings_path = ratings_path.into();
        Self {
            name: ratings_path.display().to_string(),
            ratings_path,
            benchmark_path: None,
            format,
            rating_scale: RatingBounds::default(),
            declared_counts: None,
        }
    }

    pub fn with_benchmarks(mut self, path: impl Into<PathBuf>) -> Self {
        self.benchmark_path = Some(path.into());
        self
    }

    /// Reads a manifest file. Relative paths inside it resolve against the
    /// manifest's own directory.
    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base).map_err(|reason| IngestError::Manifest {
            path: path.to_path_buf(),
            reason,
        })
    }

    fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| e.to_string())?;
        let rating_scale = match raw.rating_scale {
            Some([lo, hi]) => RatingBounds::new(lo, hi).map_err(|e| e.to_string())?,
            None => RatingBounds::default(),
        };
        let ratings_path = base.join(raw.ratings_path);
        Ok(Self {
            name: raw
                .name
                .unwrap_or_else(|| ratings_path.display().to_string()),
            ratings_path,
            benchmark_path: raw.benchmark_path.map(|p| base.join(p)),
            format: raw.format,
            rating_scale,
            declared_counts: raw.declared_counts.map(|[users, objects, benchmarks]| {
                DeclaredCounts {
                    users,
                    objects,
                    benchmarks,
                }
            }),
        })
    }
}

/// Bijection between external ids and dense internal indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    fn from_ids(mut ids: Vec<String>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        let numeric: Option<Vec<i64>> = ids.iter().map(|s| s.parse().ok()).collect();
        if let Some(keys) = numeric {
            let mut paired: Vec<(i64, String)> = keys.into_iter().zip(ids).collect();
            paired.sort_unstable();
            ids = paired.into_iter().map(|(_, s)| s).collect();
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self {
            external: ids,
            index,
        }
    }

    pub fn get(&self, external: &str) -> Option<usize> {
        self.index.get(external).copied()
    }

    pub fn external(&self, internal: usize) -> Option<&str> {
        self.external.get(internal).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }
}

/// A loaded rating table with the id maps needed to talk about it in
/// external terms.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub table: RatingTable,
    pub users: IdMap,
    pub objects: IdMap,
}

struct RawRating {
    line: u64,
    user: String,
    object: String,
    value: f64,
}

fn parse_movielens(path: &Path) -> Result<Vec<RawRating>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(io_err(path))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| IngestError::Malformed {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(malformed(format!(
                "expected UserID::MovieID::Rating::Timestamp, got {} fields",
                fields.len()
            )));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(malformed("empty user or movie id".into()));
        }
        let rating: i64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("non-integer rating {:?}", fields[2])))?;
        fields[3]
            .parse::<i64>()
            .map_err(|_| malformed(format!("bad timestamp {:?}", fields[3])))?;
        out.push(RawRating {
            line: line_no,
            user: fields[0].to_string(),
            object: fields[1].to_string(),
            value: rating as f64,
        });
    }
    Ok(out)
}

fn parse_csv_triples(path: &Path) -> Result<Vec<RawRating>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let csv_err = |line: u64, e: csv::Error| IngestError::Malformed {
        path: path.to_path_buf(),
        line,
        reason: e.to_string(),
    };
    let header = reader.headers().map_err(|e| csv_err(1, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(IngestError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("expected header `user,object,rating`, got {header:?}"),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let value: f64 = record[2].parse().map_err(|_| IngestError::Malformed {
            path: path.to_path_buf(),
            line,
            reason: format!("non-numeric rating {:?}", &record[2]),
        })?;
        if record[0].is_empty() || record[1].is_empty() {
            return Err(IngestError::Malformed {
                path: path.to_path_buf(),
                line,
                reason: "empty user or object id".into(),
            });
        }
        out.push(RawRating {
            line,
            user: record[0].to_string(),
            object: record[1].to_string(),
            value,
        });
    }
    Ok(out)
}

fn check_count(
    dataset: &str,
    what: &'static str,
    expected: usize,
    found: usize,
) -> Result<(), IngestError> {
    if expected == found {
        Ok(())
    } else {
        Err(IngestError::CountMismatch {
            dataset: dataset.to_string(),
            what,
            expected,
            found,
        })
    }
}

/// Loads the ratings named by `manifest`.
pub fn load_ratings(manifest: &DatasetManifest) -> Result<Dataset, IngestError> {
    let path = manifest.ratings_path.as_path();
    let raw = match manifest.format {
        DatasetFormat::MovielensDat => parse_movielens(path)?,
        DatasetFormat::CsvTriples => parse_csv_triples(path)?,
    };
    let bounds = manifest.rating_scale;
    if let Some(bad) = raw.iter().find(|r| !bounds.contains(r.value)) {
        return Err(IngestError::RatingOutOfScale {
            path: path.to_path_buf(),
            line: bad.line,
            value: bad.value,
            bounds,
        });
    }

    let users = IdMap::from_ids(raw.iter().map(|r| r.user.clone()).collect());
    let objects = IdMap::from_ids(raw.iter().map(|r| r.object.clone()).collect());
    let triples = raw
        .iter()
        .map(|r| Rating::new(users.index[&r.user], objects.index[&r.object], r.value));
    let table = RatingTable::build(triples, users.len(), objects.len(), bounds)?;

    if let Some(declared) = manifest.declared_counts {
        check_count(&manifest.name, "user", declared.users, table.num_users())?;
        check_count(
            &manifest.name,
            "object",
            declared.objects,
            table.num_objects(),
        )?;
    }
    Ok(Dataset {
        name: manifest.name.clone(),
        table,
        users,
        objects,
    })
}

/// Benchmark ids resolved against a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkLoad {
    pub set: BenchmarkSet,
    /// External ids from the file that the dataset does not contain.
    pub skipped: Vec<String>,
}

/// Reads a benchmark list and translates it through `objects`.
pub fn read_benchmark_file(path: &Path, objects: &IdMap) -> Result<BenchmarkLoad, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut found = Vec::new();
    let mut skipped = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        let id = line.split('#').next().unwrap_or("").trim();
        if id.is_empty() {
            continue;
        }
        match objects.get(id) {
            Some(k) => found.push(k),
            None => skipped.push(id.to_string()),
        }
    }
    if found.is_empty() {
        return Err(IngestError::NoBenchmarks {
            path: path.to_path_buf(),
            skipped: skipped.len(),
        });
    }
    Ok(BenchmarkLoad {
        set: BenchmarkSet::new(found, objects.len())?,
        skipped,
    })
}

/// Loads the manifest's benchmark list for an already loaded dataset.
pub fn load_benchmarks(
    manifest: &DatasetManifest,
    dataset: &Dataset,
) -> Result<BenchmarkLoad, IngestError> {
    let path = manifest
        .benchmark_path
        .as_deref()
        .ok_or_else(|| IngestError::NoBenchmarkPath(manifest.name.clone()))?;
    let load = read_benchmark_file(path, &dataset.objects)?;
    if let Some(declared) = manifest.declared_counts {
        check_count(
            &manifest.name,
            "benchmark",
            declared.benchmarks,
            load.set.len(),
        )?;
    }
    Ok(load)
}

/// Writes `ratings.csv` and, with ground truth, `truth_objects.csv` and
/// `truth_users.csv` into `dir`, creating it if needed.
pub fn export_table(
    table: &RatingTable,
    truth: Option<&GroundTruth>,
    dir: &Path,
) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    write_csv(&dir.join(RATINGS_FILE), "user,object,rating", |w| {
        for r in table.triples() {
            writeln!(w, "{},{},{}", r.user, r.object, r.value)?;
        }
        Ok(())
    })?;

    if let Some(truth) = truth {
        write_csv(&dir.join(TRUTH_OBJECTS_FILE), "object,quality", |w| {
            for (k, q) in truth.quality.iter().enumerate() {
                writeln!(w, "{k},{q}")?;
            }
            Ok(())
        })?;
        write_csv(&dir.join(TRUTH_USERS_FILE), "user,zeta", |w| {
            for (i, z) in truth.zeta.iter().enumerate() {
                writeln!(w, "{i},{z}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn write_csv<F>(path: &Path, header: &str, body: F) -> Result<(), IngestError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")
        .and_then(|_| body(&mut w))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}
