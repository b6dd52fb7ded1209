//! Split verification and benchmark statistics reports.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{classify_age, AgeGroupConfig, DatasetManifest, FilterStats};
use crate::splitter::{Folder, SplitManifest};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("dataset {dataset}: selected count {actual} does not match available - filtered = {expected}")]
    InconsistentFilterCounts {
        dataset: String,
        expected: usize,
        actual: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    AgeOutOfRange,
    SubjectInMultipleFolders,
    SampleBothAssignedAndDiscarded,
    UnknownSample,
}

/// One invariant violation. At least one of `subject_id` / `sample_id` is
/// always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject_id: Option<String>,
    pub sample_id: Option<String>,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(subject) = &self.subject_id {
            write!(f, " subject={subject}")?;
        }
        if let Some(sample) = &self.sample_id {
            write!(f, " sample={sample}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Check a split against the benchmark invariants. `source` must be the same
/// (face-filtered) manifest the split was built from. Returns every
/// violation found; an empty list certifies the split.
///
/// Checks, in order: sample-set agreement between split and source (both
/// directions report [`ViolationKind::UnknownSample`]), no sample both
/// assigned and discarded, age-group admissibility per folder, and the
/// single-folder-per-subject rule (which subsumes within-split seen/unseen
/// exclusivity) whenever the source carries subject ids.
pub fn verify(
    split: &SplitManifest,
    source: &DatasetManifest,
    config: &AgeGroupConfig,
) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut source_ids: BTreeMap<&str, &crate::ingest::AnnotationRecord> = BTreeMap::new();
    for record in &source.records {
        source_ids.insert(&record.sample_id, record);
    }

    for (sample, status) in split
        .assignments
        .keys()
        .map(|s| (s, "assigned"))
        .chain(split.discarded.keys().map(|s| (s, "discarded")))
    {
        if !source_ids.contains_key(sample.as_str()) {
            violations.push(Violation {
                kind: ViolationKind::UnknownSample,
                subject_id: None,
                sample_id: Some(sample.clone()),
                detail: format!("{status} sample does not exist in the source manifest"),
            });
        }
    }
    for sample in source_ids.keys() {
        if !split.assignments.contains_key(*sample) && !split.discarded.contains_key(*sample) {
            violations.push(Violation {
                kind: ViolationKind::UnknownSample,
                subject_id: None,
                sample_id: Some(sample.to_string()),
                detail: "source sample is neither assigned nor discarded".into(),
            });
        }
    }

    for sample in split.assignments.keys() {
        if split.discarded.contains_key(sample) {
            violations.push(Violation {
                kind: ViolationKind::SampleBothAssignedAndDiscarded,
                subject_id: None,
                sample_id: Some(sample.clone()),
                detail: "sample appears in both the assignment and discard sets".into(),
            });
        }
    }

    for (sample, folder) in &split.assignments {
        if let Some(record) = source_ids.get(sample.as_str()) {
            let group = classify_age(record.age, config);
            if !folder.admits(group) {
                violations.push(Violation {
                    kind: ViolationKind::AgeOutOfRange,
                    subject_id: record.subject_id.clone(),
                    sample_id: Some(sample.clone()),
                    detail: format!(
                        "age {} ({group:?}) is not admissible in folder {folder}",
                        record.age
                    ),
                });
            }
        }
    }

    if source.has_subject_ids {
        let mut folders_by_subject: BTreeMap<&str, Vec<Folder>> = BTreeMap::new();
        for (sample, folder) in &split.assignments {
            if let Some(record) = source_ids.get(sample.as_str()) {
                let subject = record
                    .subject_id
                    .as_deref()
                    .expect("source has subject ids");
                let folders = folders_by_subject.entry(subject).or_default();
                if !folders.contains(folder) {
                    folders.push(*folder);
                }
            }
        }
        for (subject, folders) in &folders_by_subject {
            if folders.len() > 1 {
                let mut sorted = folders.clone();
                sorted.sort();
                violations.push(Violation {
                    kind: ViolationKind::SubjectInMultipleFolders,
                    subject_id: Some(subject.to_string()),
                    sample_id: None,
                    detail: format!(
                        "subject contributes samples to folders {:?}",
                        sorted.iter().map(|f| f.index()).collect::<Vec<_>>()
                    ),
                });
            }
        }
        if let Some(declared) = &split.subject_folder {
            for (subject, folders) in &folders_by_subject {
                if let Some(folder) = declared.get(*subject) {
                    if folders.len() == 1 && folders[0] != *folder {
                        violations.push(Violation {
                            kind: ViolationKind::SubjectInMultipleFolders,
                            subject_id: Some(subject.to_string()),
                            sample_id: None,
                            detail: format!(
                                "samples sit in folder {} but the subject is declared in folder {folder}",
                                folders[0]
                            ),
                        });
                    }
                }
            }
        }
    }

    violations
}

fn round_half_away_2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Per-folder counts and percentages of one split. Percentages are over the
/// assigned total, rounded half away from zero to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStats {
    pub per_folder: [usize; 5],
    pub percentages: [f64; 5],
    pub total: usize,
    pub discarded: usize,
}

impl SplitStats {
    pub fn render_text(&self) -> String {
        let labels = [
            "train",
            "val seen",
            "val unseen",
            "test seen",
            "test unseen",
        ];
        // Table order mirrors the benchmark layout: train, validation
        // (seen/unseen), test (seen/unseen).
        let order = [0usize, 1, 3, 2, 4];
        let mut out = String::new();
        out.push_str(&format!("{:<12} {:>10} {:>9}\n", "folder", "samples", "%"));
        for (label, folder) in labels.iter().zip(order) {
            out.push_str(&format!(
                "{:<12} {:>10} {:>8.2}%\n",
                label, self.per_folder[folder], self.percentages[folder]
            ));
        }
        out.push_str(&format!("{:<12} {:>10}\n", "total", self.total));
        out.push_str(&format!("{:<12} {:>10}\n", "discarded", self.discarded));
        out
    }
}

/// Folder counts and percentage shares of a split manifest.
pub fn split_stats(split: &SplitManifest) -> SplitStats {
    let per_folder = split.folder_counts();
    let total: usize = per_folder.iter().sum();
    let mut percentages = [0.0; 5];
    if total > 0 {
        for (pct, count) in percentages.iter_mut().zip(per_folder) {
            *pct = round_half_away_2(100.0 * count as f64 / total as f64);
        }
    }
    SplitStats {
        per_folder,
        percentages,
        total,
        discarded: split.discarded.len(),
    }
}

/// One dataset row of the filtering report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterReportRow {
    pub dataset: String,
    pub available: usize,
    pub filtered_exclusivity: usize,
    pub filtered_no_face: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub rows: Vec<FilterReportRow>,
}

impl FilterReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>10} {:>12} {:>9} {:>10}\n",
            "dataset", "available", "exclusivity", "no faces", "selected"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>10} {:>12} {:>9} {:>10}\n",
                row.dataset,
                row.available,
                row.filtered_exclusivity,
                row.filtered_no_face,
                row.selected
            ));
        }
        out
    }
}

/// Build the per-dataset filtering table, recomputing every `selected` count
/// and failing hard on any row that does not satisfy the identity
/// `selected = available - exclusivity - no_faces`.
pub fn filter_report(stats: &[(String, FilterStats)]) -> Result<FilterReport, AuditError> {
    let mut rows = Vec::with_capacity(stats.len());
    for (dataset, s) in stats {
        let expected = s
            .available
            .saturating_sub(s.filtered_exclusivity)
            .saturating_sub(s.filtered_no_face);
        if !s.is_consistent() {
            return Err(AuditError::InconsistentFilterCounts {
                dataset: dataset.clone(),
                expected,
                actual: s.selected,
            });
        }
        rows.push(FilterReportRow {
            dataset: dataset.clone(),
            available: s.available,
            filtered_exclusivity: s.filtered_exclusivity,
            filtered_no_face: s.filtered_no_face,
            selected: expected,
        });
    }
    Ok(FilterReport { rows })
}
