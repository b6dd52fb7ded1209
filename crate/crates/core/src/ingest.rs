//! Annotation manifest ingestion.
//!
//! A manifest is a UTF-8 comma-separated table with a header row naming at
//! least `sample_id`, `age`, and `face_ok`; `subject_id` and `image_ref` are
//! optional columns. An empty `subject_id` field means the sample carries no
//! identity annotation, and `face_ok` accepts `0`, `1`, `true`, or `false`.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

/// Upper bound accepted for age annotations. The evaluation grid stops at
/// 101, but raw datasets carry verified ages above it, so parsing only
/// rejects values that cannot be real ages.
pub const MAX_AGE: u32 = 130;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row}: missing {name} field")]
    MissingField { row: u64, name: &'static str },
    #[error("row {row}: cannot parse age {value:?} as an integer")]
    InvalidAge { row: u64, value: String },
    #[error("row {row}: age {age} out of range 0..={MAX_AGE}")]
    AgeOutOfRange { row: u64, age: i64 },
    #[error("row {row}: invalid face flag {value:?} (expected 0, 1, true, or false)")]
    InvalidFaceFlag { row: u64, value: String },
    #[error("row {row}: duplicate sample id {id:?}")]
    DuplicateSampleId { row: u64, id: String },
    #[error("invalid age group bounds: need 0 < a_min < a_max, got [{a_min}, {a_max})")]
    InvalidAgeBounds { a_min: u32, a_max: u32 },
    #[error("histogram bin width must be at least 1")]
    ZeroBinWidth,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One labeled sample of an age estimation dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationRecord {
    pub sample_id: String,
    pub subject_id: Option<String>,
    /// Age in integer years; fractional or apparent labels must be rounded
    /// upstream.
    pub age: u32,
    /// Opaque path or identifier of the image; never dereferenced here.
    pub image_ref: String,
    /// Whether preprocessing found a usable face for this sample.
    pub face_ok: bool,
}

/// Age-group boundaries: adults are `[a_min, a_max)`, minors below, elders at
/// or above `a_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AgeGroupConfig {
    pub a_min: u32,
    pub a_max: u32,
}

impl AgeGroupConfig {
    pub fn new(a_min: u32, a_max: u32) -> Result<Self, IngestError> {
        if a_min == 0 || a_min >= a_max {
            return Err(IngestError::InvalidAgeBounds { a_min, a_max });
        }
        Ok(Self { a_min, a_max })
    }
}

impl Default for AgeGroupConfig {
    fn default() -> Self {
        Self {
            a_min: 18,
            a_max: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AgeGroup {
    Minor,
    Adult,
    Elder,
}

/// Classify an age into its group. Boundary `a_min` is Adult, boundary
/// `a_max` is Elder, so the three groups tile the age line.
pub fn classify_age(age: u32, config: &AgeGroupConfig) -> AgeGroup {
    if age < config.a_min {
        AgeGroup::Minor
    } else if age < config.a_max {
        AgeGroup::Adult
    } else {
        AgeGroup::Elder
    }
}

/// A parsed dataset manifest. Record order follows the source table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub dataset_name: String,
    pub records: Vec<AnnotationRecord>,
    /// True iff every record carries a subject id (vacuously true when
    /// empty). Decides which split-construction path applies.
    pub has_subject_ids: bool,
}

impl DatasetManifest {
    pub fn new(dataset_name: impl Into<String>, records: Vec<AnnotationRecord>) -> Self {
        let has_subject_ids = records.iter().all(|r| r.subject_id.is_some());
        Self {
            dataset_name: dataset_name.into(),
            records,
            has_subject_ids,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Counts for the two-stage sample filter. `selected` must always equal
/// `available - filtered_exclusivity - filtered_no_face`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub available: usize,
    pub filtered_exclusivity: usize,
    pub filtered_no_face: usize,
    pub selected: usize,
}

impl FilterStats {
    pub fn is_consistent(&self) -> bool {
        self.available == self.selected + self.filtered_exclusivity + self.filtered_no_face
    }
}

/// Parse a manifest table. Row numbers in errors are 1-based physical lines
/// of the source, header included.
pub fn parse_manifest<R: Read>(
    source: R,
    dataset_name: &str,
) -> Result<DatasetManifest, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let sample_col = column("sample_id")
        .ok_or_else(|| IngestError::MalformedHeader("missing sample_id column".into()))?;
    let age_col =
        column("age").ok_or_else(|| IngestError::MalformedHeader("missing age column".into()))?;
    let face_col = column("face_ok")
        .ok_or_else(|| IngestError::MalformedHeader("missing face_ok column".into()))?;
    let subject_col = column("subject_id");
    let image_col = column("image_ref");

    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);

        let sample_id = row
            .get(sample_col)
            .filter(|v| !v.is_empty())
            .ok_or(IngestError::MissingField {
                row: line,
                name: "sample_id",
            })?
            .to_string();
        if !seen_ids.insert(sample_id.clone()) {
            return Err(IngestError::DuplicateSampleId {
                row: line,
                id: sample_id,
            });
        }

        let age_raw =
            row.get(age_col)
                .filter(|v| !v.is_empty())
                .ok_or(IngestError::MissingField {
                    row: line,
                    name: "age",
                })?;
        let age: i64 = age_raw.parse().map_err(|_| IngestError::InvalidAge {
            row: line,
            value: age_raw.to_string(),
        })?;
        if age < 0 || age > MAX_AGE as i64 {
            return Err(IngestError::AgeOutOfRange { row: line, age });
        }

        let face_raw =
            row.get(face_col)
                .filter(|v| !v.is_empty())
                .ok_or(IngestError::MissingField {
                    row: line,
                    name: "face_ok",
                })?;
        let face_ok = match face_raw {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(IngestError::InvalidFaceFlag {
                    row: line,
                    value: other.to_string(),
                })
            }
        };

        let subject_id = subject_col
            .and_then(|c| row.get(c))
            .filter(|v| !v.is_empty())
            .map(str::to_string);
        let image_ref = image_col
            .and_then(|c| row.get(c))
            .unwrap_or_default()
            .to_string();

        records.push(AnnotationRecord {
            sample_id,
            subject_id,
            age: age as u32,
            image_ref,
            face_ok,
        });
    }

    Ok(DatasetManifest::new(dataset_name, records))
}

/// Write a manifest back out in the canonical five-column layout. Parsing
/// the output reproduces every record field.
pub fn serialize_manifest<W: Write>(
    manifest: &DatasetManifest,
    sink: W,
) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["sample_id", "subject_id", "age", "image_ref", "face_ok"])?;
    for r in &manifest.records {
        writer.write_record([
            r.sample_id.as_str(),
            r.subject_id.as_deref().unwrap_or(""),
            &r.age.to_string(),
            r.image_ref.as_str(),
            if r.face_ok { "1" } else { "0" },
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Drop records whose face detection failed. Returns the kept manifest and
/// the filter counts for this stage (`filtered_exclusivity` is zero here;
/// the split construction accounts for that stage).
pub fn filter_no_face(manifest: &DatasetManifest) -> (DatasetManifest, FilterStats) {
    let available = manifest.records.len();
    let kept: Vec<AnnotationRecord> = manifest
        .records
        .iter()
        .filter(|r| r.face_ok)
        .cloned()
        .collect();
    let stats = FilterStats {
        available,
        filtered_exclusivity: 0,
        filtered_no_face: available - kept.len(),
        selected: kept.len(),
    };
    (
        DatasetManifest::new(manifest.dataset_name.clone(), kept),
        stats,
    )
}

/// Age histogram with bins anchored at 0. Only non-empty bins are emitted,
/// in ascending order of bin start.
pub fn histogram(
    manifest: &DatasetManifest,
    bin_width: u32,
) -> Result<Vec<(u32, usize)>, IngestError> {
    if bin_width == 0 {
        return Err(IngestError::ZeroBinWidth);
    }
    let mut bins = std::collections::BTreeMap::new();
    for r in &manifest.records {
        *bins
            .entry((r.age / bin_width) * bin_width)
            .or_insert(0usize) += 1;
    }
    Ok(bins.into_iter().collect())
}
