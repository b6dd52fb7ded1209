//! Subject-age-exclusive split construction.
//!
//! Datasets with identity annotations go through the greedy pipeline:
//! subjects are profiled into minor/adult/elder sample groups, single-group
//! subjects are placed directly, and mixed subjects are assigned by scoring
//! every candidate (split, kept group) pair against the folders' remaining
//! demand. A correction sweep then reroutes mixed subjects into under-filled
//! unseen folders, and adult-only subjects fill the seen folders toward the
//! alpha/beta/test targets. Datasets without identities use a seeded
//! age-only assignment with largest-remainder apportionment of the adults.
//!
//! Both paths are deterministic: the greedy path is a pure function of its
//! inputs, the age-only path additionally of the seed.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{classify_age, AgeGroup, AgeGroupConfig, DatasetManifest};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("manifest {0:?} carries no subject ids; use the age-only split path")]
    MissingSubjectIds(String),
    #[error("invalid split fractions alpha={alpha}, beta={beta}: need 0 < alpha, 0 < beta, alpha + beta < 1")]
    InvalidFractions { alpha: f64, beta: f64 },
    #[error("split row {line}: {detail}")]
    InvalidSplitRow { line: u64, detail: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The five benchmark folders. Folders 0-2 hold seen train/val/test and admit
/// only adults; folder 3 (unseen validation) admits only elders; folder 4
/// (unseen test) admits only minors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Folder {
    SeenTrain = 0,
    SeenVal = 1,
    SeenTest = 2,
    UnseenVal = 3,
    UnseenTest = 4,
}

impl Folder {
    pub const ALL: [Folder; 5] = [
        Folder::SeenTrain,
        Folder::SeenVal,
        Folder::SeenTest,
        Folder::UnseenVal,
        Folder::UnseenTest,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Folder> {
        Folder::ALL.get(index).copied()
    }

    /// The single age group this folder admits.
    pub fn required_group(self) -> AgeGroup {
        match self {
            Folder::SeenTrain | Folder::SeenVal | Folder::SeenTest => AgeGroup::Adult,
            Folder::UnseenVal => AgeGroup::Elder,
            Folder::UnseenTest => AgeGroup::Minor,
        }
    }

    pub fn admits(self, group: AgeGroup) -> bool {
        self.required_group() == group
    }

    pub fn is_seen(self) -> bool {
        matches!(self, Folder::SeenTrain | Folder::SeenVal | Folder::SeenTest)
    }
}

impl std::fmt::Display for Folder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// The split dimension of a candidate assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

/// How a subject's samples divide across the three age groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubjectType {
    MinorOnly,
    AdultOnly,
    ElderOnly,
    Mixed,
}

/// One subject's samples partitioned by age group. Sample lists are sorted
/// by sample id for determinism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectProfile {
    pub subject_id: String,
    pub minor_samples: Vec<String>,
    pub adult_samples: Vec<String>,
    pub elder_samples: Vec<String>,
}

impl SubjectProfile {
    pub fn subject_type(&self) -> SubjectType {
        let nonempty = [
            &self.minor_samples,
            &self.adult_samples,
            &self.elder_samples,
        ]
        .iter()
        .filter(|v| !v.is_empty())
        .count();
        if nonempty >= 2 {
            SubjectType::Mixed
        } else if !self.minor_samples.is_empty() {
            SubjectType::MinorOnly
        } else if !self.adult_samples.is_empty() {
            SubjectType::AdultOnly
        } else {
            SubjectType::ElderOnly
        }
    }

    pub fn samples_in(&self, group: AgeGroup) -> &[String] {
        match group {
            AgeGroup::Minor => &self.minor_samples,
            AgeGroup::Adult => &self.adult_samples,
            AgeGroup::Elder => &self.elder_samples,
        }
    }

    pub fn total(&self) -> usize {
        self.minor_samples.len() + self.adult_samples.len() + self.elder_samples.len()
    }

    fn all_samples(&self) -> impl Iterator<Item = &String> {
        self.minor_samples
            .iter()
            .chain(self.adult_samples.iter())
            .chain(self.elder_samples.iter())
    }
}

/// Adult split fractions: alpha for train, beta for validation, remainder
/// for test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitFractions {
    alpha: f64,
    beta: f64,
}

impl SplitFractions {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, SplitError> {
        let valid = alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && alpha + beta < 1.0;
        if !valid {
            return Err(SplitError::InvalidFractions { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn test_fraction(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }

    fn share(&self, folder: Folder) -> f64 {
        match folder {
            Folder::SeenTrain => self.alpha,
            Folder::SeenVal => self.beta,
            Folder::SeenTest => self.test_fraction(),
            _ => 0.0,
        }
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            beta: 0.1,
        }
    }
}

/// Ideal per-folder image counts under unconstrained age-based placement.
/// Seen-folder targets may be fractional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetCounts {
    t: [f64; 5],
}

impl TargetCounts {
    pub fn from_array(t: [f64; 5]) -> Self {
        Self { t }
    }

    pub fn get(&self, folder: Folder) -> f64 {
        self.t[folder.index()]
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.t
    }
}

/// Images accumulated per folder during assignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunningCounts {
    r: [f64; 5],
}

impl RunningCounts {
    pub fn from_array(r: [f64; 5]) -> Self {
        Self { r }
    }

    pub fn get(&self, folder: Folder) -> f64 {
        self.r[folder.index()]
    }

    pub fn add(&mut self, folder: Folder, amount: f64) {
        self.r[folder.index()] += amount;
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.r
    }
}

/// A (split, kept group) choice for a mixed subject. Only five pairs are
/// meaningful; the folder is fully determined by the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateAssignment {
    pub split: SplitKind,
    pub kept_group: AgeGroup,
    pub folder: Folder,
    /// Number of images retained under this candidate.
    pub retained: usize,
}

impl CandidateAssignment {
    /// Build a candidate; `None` for pairs outside the folder semantics.
    pub fn new(split: SplitKind, kept_group: AgeGroup, retained: usize) -> Option<Self> {
        let folder = match (split, kept_group) {
            (SplitKind::Train, AgeGroup::Adult) => Folder::SeenTrain,
            (SplitKind::Val, AgeGroup::Adult) => Folder::SeenVal,
            (SplitKind::Test, AgeGroup::Adult) => Folder::SeenTest,
            (SplitKind::Val, AgeGroup::Elder) => Folder::UnseenVal,
            (SplitKind::Test, AgeGroup::Minor) => Folder::UnseenTest,
            _ => return None,
        };
        Some(Self {
            split,
            kept_group,
            folder,
            retained,
        })
    }
}

/// Remaining-demand score of a candidate: `n * max(0, t - r) / t^2`. A folder
/// with no demand at all (t = 0) scores zero and can never attract a subject.
pub fn score_candidate(
    candidate: &CandidateAssignment,
    targets: &TargetCounts,
    counts: &RunningCounts,
) -> f64 {
    let t = targets.get(candidate.folder);
    if t <= 0.0 {
        return 0.0;
    }
    let r = counts.get(candidate.folder);
    candidate.retained as f64 * (t - r).max(0.0) / (t * t)
}

/// The final folder assignment for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    /// Retained samples and their folders.
    pub assignments: BTreeMap<String, Folder>,
    /// Samples dropped to honor exclusivity, with the reason.
    pub discarded: BTreeMap<String, String>,
    /// One folder per subject; absent for datasets without identities.
    pub subject_folder: Option<BTreeMap<String, Folder>>,
    /// Seed of the age-only path; absent on the greedy path.
    pub seed: Option<u64>,
    pub fractions: SplitFractions,
    pub config: AgeGroupConfig,
}

impl SplitManifest {
    pub fn folder_counts(&self) -> [usize; 5] {
        let mut counts = [0usize; 5];
        for folder in self.assignments.values() {
            counts[folder.index()] += 1;
        }
        counts
    }

    pub fn len_assigned(&self) -> usize {
        self.assignments.len()
    }

    /// Serialize as `sample_id,folder,status,reason` rows, ordered by sample
    /// id with assigned and discarded rows interleaved.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), SplitError> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["sample_id", "folder", "status", "reason"])?;
        let mut assigned = self.assignments.iter().peekable();
        let mut discarded = self.discarded.iter().peekable();
        loop {
            let take_assigned = match (assigned.peek(), discarded.peek()) {
                (Some((a, _)), Some((d, _))) => a <= d,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_assigned {
                let (id, folder) = assigned.next().unwrap();
                writer.write_record([id.as_str(), &folder.to_string(), "assigned", ""])?;
            } else {
                let (id, reason) = discarded.next().unwrap();
                writer.write_record([id.as_str(), "", "discarded", reason.as_str()])?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    /// Load assignments back from the CSV projection. Subject folders, seed,
    /// and provenance are not part of the row format; config and fractions
    /// must be supplied by the caller.
    pub fn read_csv<R: Read>(
        source: R,
        config: AgeGroupConfig,
        fractions: SplitFractions,
    ) -> Result<Self, SplitError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| SplitError::InvalidSplitRow {
                    line: 1,
                    detail: format!("missing {name} column"),
                })
        };
        let id_col = col("sample_id")?;
        let folder_col = col("folder")?;
        let status_col = col("status")?;
        let reason_col = headers.iter().position(|h| h == "reason");

        let mut assignments = BTreeMap::new();
        let mut discarded = BTreeMap::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |detail: String| SplitError::InvalidSplitRow { line, detail };
            let id = row
                .get(id_col)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| bad("missing sample_id".into()))?
                .to_string();
            match row.get(status_col).unwrap_or("") {
                "assigned" => {
                    let raw = row
                        .get(folder_col)
                        .filter(|v| !v.is_empty())
                        .ok_or_else(|| bad("assigned row without folder".into()))?;
                    let index: usize = raw
                        .parse()
                        .map_err(|_| bad(format!("invalid folder {raw:?}")))?;
                    let folder = Folder::from_index(index)
                        .ok_or_else(|| bad(format!("folder {index} out of range")))?;
                    if assignments.insert(id.clone(), folder).is_some() {
                        return Err(bad(format!("duplicate sample id {id:?}")));
                    }
                }
                "discarded" => {
                    let reason = reason_col
                        .and_then(|c| row.get(c))
                        .unwrap_or("")
                        .to_string();
                    if discarded.insert(id.clone(), reason).is_some() {
                        return Err(bad(format!("duplicate sample id {id:?}")));
                    }
                }
                other => return Err(bad(format!("invalid status {other:?}"))),
            }
        }
        Ok(Self {
            assignments,
            discarded,
            subject_folder: None,
            seed: None,
            fractions,
            config,
        })
    }
}

/// Machine-readable summary of a constructed split: targets, achieved
/// counts, and any unseen-folder deficits, alongside the full configuration
/// for provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub dataset: String,
    pub config: AgeGroupConfig,
    pub fractions: SplitFractions,
    pub seed: Option<u64>,
    pub targets: [f64; 5],
    pub achieved: [usize; 5],
    /// `max(0, target - achieved)` per folder; nonzero entries on folders 3
    /// and 4 mean the correction sweep ran out of candidates.
    pub deficits: [f64; 5],
    pub assigned: usize,
    pub discarded: usize,
}

impl SplitSummary {
    /// `source` must be the face-filtered manifest the split was built from.
    pub fn compute(split: &SplitManifest, source: &DatasetManifest) -> Self {
        let targets = compute_targets(source, &split.config, &split.fractions).as_array();
        let achieved = split.folder_counts();
        let mut deficits = [0.0; 5];
        for i in 0..5 {
            deficits[i] = (targets[i] - achieved[i] as f64).max(0.0);
        }
        Self {
            dataset: source.dataset_name.clone(),
            config: split.config,
            fractions: split.fractions,
            seed: split.seed,
            targets,
            achieved,
            deficits,
            assigned: split.assignments.len(),
            discarded: split.discarded.len(),
        }
    }
}

/// Group a manifest's records by subject. Requires identity annotations.
pub fn profile_subjects(
    manifest: &DatasetManifest,
    config: &AgeGroupConfig,
) -> Result<Vec<SubjectProfile>, SplitError> {
    if !manifest.has_subject_ids {
        return Err(SplitError::MissingSubjectIds(manifest.dataset_name.clone()));
    }
    let mut by_subject: BTreeMap<&str, SubjectProfile> = BTreeMap::new();
    for record in &manifest.records {
        let subject_id = record
            .subject_id
            .as_deref()
            .expect("checked has_subject_ids");
        let profile = by_subject
            .entry(subject_id)
            .or_insert_with(|| SubjectProfile {
                subject_id: subject_id.to_string(),
                minor_samples: Vec::new(),
                adult_samples: Vec::new(),
                elder_samples: Vec::new(),
            });
        let list = match classify_age(record.age, config) {
            AgeGroup::Minor => &mut profile.minor_samples,
            AgeGroup::Adult => &mut profile.adult_samples,
            AgeGroup::Elder => &mut profile.elder_samples,
        };
        list.push(record.sample_id.clone());
    }
    let mut profiles: Vec<SubjectProfile> = by_subject.into_values().collect();
    for profile in &mut profiles {
        profile.minor_samples.sort();
        profile.adult_samples.sort();
        profile.elder_samples.sort();
    }
    Ok(profiles)
}

/// Per-folder image counts under an ideal unconstrained partition: every
/// minor to folder 4, every elder to folder 3, adults split by the
/// fractions.
pub fn compute_targets(
    manifest: &DatasetManifest,
    config: &AgeGroupConfig,
    fractions: &SplitFractions,
) -> TargetCounts {
    let mut minors = 0usize;
    let mut adults = 0usize;
    let mut elders = 0usize;
    for record in &manifest.records {
        match classify_age(record.age, config) {
            AgeGroup::Minor => minors += 1,
            AgeGroup::Adult => adults += 1,
            AgeGroup::Elder => elders += 1,
        }
    }
    let adults = adults as f64;
    TargetCounts {
        t: [
            fractions.alpha() * adults,
            fractions.beta() * adults,
            fractions.test_fraction() * adults,
            elders as f64,
            minors as f64,
        ],
    }
}

const DISCARD_REASON: &str = "exclusivity";

/// Working state of the greedy pipeline. `fixed` counts images actually
/// placed; `provisional` carries the assumed alpha/beta/test spread of
/// adult-only subjects until the fill pass places them for real.
#[derive(Debug, Clone)]
pub struct GreedyState {
    pub assignments: BTreeMap<String, Folder>,
    pub discarded: BTreeMap<String, String>,
    pub subject_folder: BTreeMap<String, Folder>,
    pub fixed: RunningCounts,
    pub provisional: RunningCounts,
}

impl GreedyState {
    /// Initialize running counts from non-mixed subjects: minor-only and
    /// elder-only subjects are placed outright, adult-only subjects
    /// contribute provisionally at the split fractions.
    pub fn init(profiles: &[SubjectProfile], fractions: &SplitFractions) -> Self {
        let mut state = GreedyState {
            assignments: BTreeMap::new(),
            discarded: BTreeMap::new(),
            subject_folder: BTreeMap::new(),
            fixed: RunningCounts::default(),
            provisional: RunningCounts::default(),
        };
        for profile in profiles {
            match profile.subject_type() {
                SubjectType::MinorOnly => state.place(profile, Folder::UnseenTest),
                SubjectType::ElderOnly => state.place(profile, Folder::UnseenVal),
                SubjectType::AdultOnly => {
                    let n = profile.adult_samples.len() as f64;
                    for folder in [Folder::SeenTrain, Folder::SeenVal, Folder::SeenTest] {
                        state.provisional.add(folder, fractions.share(folder) * n);
                    }
                }
                SubjectType::Mixed => {}
            }
        }
        state
    }

    /// Counts as seen by the candidate score: placed plus provisional mass.
    pub fn combined(&self) -> RunningCounts {
        let mut combined = self.fixed;
        for folder in Folder::ALL {
            combined.add(folder, self.provisional.get(folder));
        }
        combined
    }

    /// Assign a subject to `folder`, keeping its samples of the folder's
    /// group and discarding the rest. Re-placing a subject first withdraws
    /// its previous samples.
    fn place(&mut self, profile: &SubjectProfile, folder: Folder) {
        if let Some(previous) = self.subject_folder.get(&profile.subject_id).copied() {
            let mut withdrawn = 0usize;
            for sample in profile.all_samples() {
                if self.assignments.remove(sample).is_some() {
                    withdrawn += 1;
                }
                self.discarded.remove(sample);
            }
            self.fixed.add(previous, -(withdrawn as f64));
        }
        let kept = profile.samples_in(folder.required_group());
        for sample in kept {
            self.assignments.insert(sample.clone(), folder);
        }
        for sample in profile.all_samples() {
            if !self.assignments.contains_key(sample) {
                self.discarded
                    .insert(sample.clone(), DISCARD_REASON.to_string());
            }
        }
        self.fixed.add(folder, kept.len() as f64);
        self.subject_folder
            .insert(profile.subject_id.clone(), folder);
    }
}

/// Candidate folders in tie-break preference order: test over val over
/// train, and the unseen folder first within a split.
const CANDIDATE_PREFERENCE: [(SplitKind, AgeGroup); 5] = [
    (SplitKind::Test, AgeGroup::Minor),
    (SplitKind::Test, AgeGroup::Adult),
    (SplitKind::Val, AgeGroup::Elder),
    (SplitKind::Val, AgeGroup::Adult),
    (SplitKind::Train, AgeGroup::Adult),
];

/// Greedy pass over mixed subjects, largest total image count first (ties by
/// subject id). Each subject goes to the candidate folder with the highest
/// remaining-demand score; its out-of-group images are discarded.
pub fn assign_mixed(state: &mut GreedyState, profiles: &[SubjectProfile], targets: &TargetCounts) {
    let mut mixed: Vec<&SubjectProfile> = profiles
        .iter()
        .filter(|p| p.subject_type() == SubjectType::Mixed)
        .collect();
    mixed.sort_by(|a, b| {
        b.total()
            .cmp(&a.total())
            .then_with(|| a.subject_id.cmp(&b.subject_id))
    });

    for profile in mixed {
        let counts = state.combined();
        let mut best: Option<(f64, CandidateAssignment)> = None;
        for (split, group) in CANDIDATE_PREFERENCE {
            let retained = profile.samples_in(group).len();
            if retained == 0 {
                continue;
            }
            let candidate = CandidateAssignment::new(split, group, retained)
                .expect("preference table only lists valid pairs");
            let score = score_candidate(&candidate, targets, &counts);
            // Strict comparison keeps the earliest (most preferred) candidate
            // on ties.
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, candidate));
            }
        }
        let (_, chosen) = best.expect("mixed subjects have at least two nonempty groups");
        state.place(profile, chosen.folder);
    }
}

/// Reroute mixed subjects parked in seen folders into any unseen folder
/// still short of its target, largest contribution first (ties by subject
/// id), stopping as soon as the target is met. Overshoot by the final
/// subject is allowed. If candidates run out, the remaining deficit shows up
/// in the split summary.
pub fn correction_sweep(
    state: &mut GreedyState,
    profiles: &[SubjectProfile],
    targets: &TargetCounts,
) {
    for folder in [Folder::UnseenVal, Folder::UnseenTest] {
        let group = folder.required_group();
        if state.fixed.get(folder) >= targets.get(folder) {
            continue;
        }
        let mut candidates: Vec<&SubjectProfile> = profiles
            .iter()
            .filter(|p| {
                p.subject_type() == SubjectType::Mixed
                    && !p.samples_in(group).is_empty()
                    && state
                        .subject_folder
                        .get(&p.subject_id)
                        .is_some_and(|f| f.is_seen())
            })
            .collect();
        candidates.sort_by(|a, b| {
            b.samples_in(group)
                .len()
                .cmp(&a.samples_in(group).len())
                .then_with(|| a.subject_id.cmp(&b.subject_id))
        });
        for profile in candidates {
            if state.fixed.get(folder) >= targets.get(folder) {
                break;
            }
            state.place(profile, folder);
        }
    }
}

/// Distribute adult-only subjects across the seen folders, largest subject
/// first (ties by subject id). The provisional mass is dropped and residual
/// deficits are computed from actual placements only; each subject goes to
/// the folder with the largest remaining deficit (ties: train, then val,
/// then test), and subjects arriving once every deficit is exhausted land in
/// seen train.
pub fn fill_adult_only(
    state: &mut GreedyState,
    profiles: &[SubjectProfile],
    targets: &TargetCounts,
) {
    state.provisional = RunningCounts::default();
    let seen = [Folder::SeenTrain, Folder::SeenVal, Folder::SeenTest];
    let mut deficits = [0.0f64; 3];
    for (slot, folder) in seen.iter().enumerate() {
        deficits[slot] = (targets.get(*folder) - state.fixed.get(*folder)).max(0.0);
    }

    let mut adult_only: Vec<&SubjectProfile> = profiles
        .iter()
        .filter(|p| p.subject_type() == SubjectType::AdultOnly)
        .collect();
    adult_only.sort_by(|a, b| {
        b.adult_samples
            .len()
            .cmp(&a.adult_samples.len())
            .then_with(|| a.subject_id.cmp(&b.subject_id))
    });

    for profile in adult_only {
        let mut slot = 0;
        for i in 1..3 {
            if deficits[i] > deficits[slot] {
                slot = i;
            }
        }
        state.place(profile, seen[slot]);
        deficits[slot] = (deficits[slot] - profile.adult_samples.len() as f64).max(0.0);
    }
}

/// Full greedy pipeline for a face-filtered manifest with subject ids.
pub fn split_with_ids(
    manifest: &DatasetManifest,
    config: &AgeGroupConfig,
    fractions: &SplitFractions,
) -> Result<SplitManifest, SplitError> {
    let profiles = profile_subjects(manifest, config)?;
    let targets = compute_targets(manifest, config, fractions);
    let mut state = GreedyState::init(&profiles, fractions);
    assign_mixed(&mut state, &profiles, &targets);
    correction_sweep(&mut state, &profiles, &targets);
    fill_adult_only(&mut state, &profiles, &targets);
    Ok(SplitManifest {
        assignments: state.assignments,
        discarded: state.discarded,
        subject_folder: Some(state.subject_folder),
        seed: None,
        fractions: *fractions,
        config: *config,
    })
}

/// Largest-remainder apportionment of `total` items over the three seen
/// folders. Counts sum to `total` exactly and each deviates from its exact
/// share by less than one. Remainder ties go to the lower folder index.
fn apportion_adults(total: usize, fractions: &SplitFractions) -> [usize; 3] {
    let shares = [
        fractions.alpha(),
        fractions.beta(),
        fractions.test_fraction(),
    ];
    let quotas: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut counts: [usize; 3] = [0; 3];
    for (i, q) in quotas.iter().enumerate() {
        counts[i] = q.floor() as usize;
    }
    let mut leftover = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Age-only split for manifests without subject identities: minors to unseen
/// test, elders to unseen validation, adults shuffled by the seed and
/// apportioned by largest remainder. The same seed always reproduces the
/// same manifest.
pub fn split_without_ids(
    manifest: &DatasetManifest,
    config: &AgeGroupConfig,
    fractions: &SplitFractions,
    seed: u64,
) -> SplitManifest {
    let mut assignments = BTreeMap::new();
    let mut adults: Vec<&str> = Vec::new();
    for record in &manifest.records {
        match classify_age(record.age, config) {
            AgeGroup::Minor => {
                assignments.insert(record.sample_id.clone(), Folder::UnseenTest);
            }
            AgeGroup::Elder => {
                assignments.insert(record.sample_id.clone(), Folder::UnseenVal);
            }
            AgeGroup::Adult => adults.push(&record.sample_id),
        }
    }

    SplitMix64::new(seed).shuffle(&mut adults);
    let counts = apportion_adults(adults.len(), fractions);
    let mut cursor = adults.into_iter();
    for (folder, take) in [Folder::SeenTrain, Folder::SeenVal, Folder::SeenTest]
        .into_iter()
        .zip(counts)
    {
        for sample in cursor.by_ref().take(take) {
            assignments.insert(sample.to_string(), folder);
        }
    }

    SplitManifest {
        assignments,
        discarded: BTreeMap::new(),
        subject_folder: None,
        seed: Some(seed),
        fractions: *fractions,
        config: *config,
    }
}
