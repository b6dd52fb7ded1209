//! C ABI for the gzsl-age toolkit.
//!
//! Manifests and splits are opaque handles created and released through
//! paired `_parse`/`_build` and `_free` calls. Every fallible function
//! returns a [`GaStatus`]; on failure a thread-local message is readable via
//! [`ga_last_error`] until the next failing call on the same thread. Strings
//! returned through out-pointers are owned by the caller and must be
//! released with [`ga_string_free`].
//!
//! The generated header lives in `include/gzsl_age.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use gzsl_age::heads::{
    corn_decode, expected_age, median_age, rank_decode, AgeGrid, ProbabilityVector,
};
use gzsl_age::ingest::{filter_no_face, parse_manifest, AgeGroupConfig, DatasetManifest};
use gzsl_age::metrics::harmonic_mean;
use gzsl_age::selftest::run_kernel_self_test;
use gzsl_age::splitter::{
    split_with_ids, split_without_ids, SplitFractions, SplitManifest, SplitSummary,
};
use gzsl_age::{split_stats, verify};

/// Status code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input document could not be parsed.
    ParseFailed = 3,
    /// A numeric or structural argument was out of range.
    InvalidArgument = 4,
    /// The operation itself failed; see `ga_last_error`.
    OperationFailed = 5,
}

/// Opaque handle to a parsed annotation manifest.
pub struct GaManifest {
    inner: DatasetManifest,
}

/// Opaque handle to a constructed split.
pub struct GaSplit {
    inner: SplitManifest,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl std::fmt::Display) {
    let rendered = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(rendered).ok();
    });
}

fn fail(status: GaStatus, message: impl std::fmt::Display) -> GaStatus {
    set_last_error(message);
    status
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ga_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned through an out-parameter of
/// this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ga_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn str_arg<'a>(raw: *const c_char) -> Result<&'a str, GaStatus> {
    if raw.is_null() {
        return Err(fail(GaStatus::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(raw)
        .to_str()
        .map_err(|_| fail(GaStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

fn string_out(out: *mut *mut c_char, value: String) -> GaStatus {
    match CString::new(value.replace('\0', " ")) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::OperationFailed, err),
    }
}

/// Parse an annotation manifest from an in-memory CSV document.
///
/// # Safety
/// `data` must point to `len` readable bytes; `dataset_name` must be a valid
/// NUL-terminated string; `out` must be a valid pointer. On `GA_STATUS_OK`
/// the caller owns the handle and must release it with `ga_manifest_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_manifest_parse(
    data: *const u8,
    len: usize,
    dataset_name: *const c_char,
    out: *mut *mut GaManifest,
) -> GaStatus {
    if data.is_null() || out.is_null() {
        return fail(GaStatus::NullArgument, "data and out must be non-null");
    }
    let name = match str_arg(dataset_name) {
        Ok(name) => name,
        Err(status) => return status,
    };
    let bytes = std::slice::from_raw_parts(data, len);
    match parse_manifest(bytes, name) {
        Ok(manifest) => {
            *out = Box::into_raw(Box::new(GaManifest { inner: manifest }));
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::ParseFailed, err),
    }
}

/// Release a manifest handle.
///
/// # Safety
/// `manifest` must come from this library and not be freed twice; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn ga_manifest_free(manifest: *mut GaManifest) {
    if !manifest.is_null() {
        drop(Box::from_raw(manifest));
    }
}

/// Number of records in the manifest; 0 for a null handle.
///
/// # Safety
/// `manifest` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_manifest_record_count(manifest: *const GaManifest) -> usize {
    manifest.as_ref().map_or(0, |m| m.inner.len())
}

/// Whether every record carries a subject id; false for a null handle.
///
/// # Safety
/// `manifest` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_manifest_has_subject_ids(manifest: *const GaManifest) -> bool {
    manifest.as_ref().is_some_and(|m| m.inner.has_subject_ids)
}

/// Drop records whose face detection failed, producing a new manifest
/// handle. `removed_out` (nullable) receives the number of dropped records.
///
/// # Safety
/// `manifest` must be a live handle; `out` must be valid; `removed_out` may
/// be null. The new handle must be released with `ga_manifest_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_manifest_filter_faces(
    manifest: *const GaManifest,
    out: *mut *mut GaManifest,
    removed_out: *mut usize,
) -> GaStatus {
    let Some(manifest) = manifest.as_ref() else {
        return fail(GaStatus::NullArgument, "manifest is null");
    };
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    let (kept, stats) = filter_no_face(&manifest.inner);
    if !removed_out.is_null() {
        *removed_out = stats.filtered_no_face;
    }
    *out = Box::into_raw(Box::new(GaManifest { inner: kept }));
    GaStatus::Ok
}

/// Build a split. Manifests with subject ids use the deterministic greedy
/// path; manifests without them require `has_seed` and use the seeded
/// age-only path.
///
/// # Safety
/// `manifest` must be a live handle; `out` must be valid. On `GA_STATUS_OK`
/// the caller owns the split handle and must release it with
/// `ga_split_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_split_build(
    manifest: *const GaManifest,
    a_min: u32,
    a_max: u32,
    alpha: f64,
    beta: f64,
    has_seed: bool,
    seed: u64,
    out: *mut *mut GaSplit,
) -> GaStatus {
    let Some(manifest) = manifest.as_ref() else {
        return fail(GaStatus::NullArgument, "manifest is null");
    };
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    let config = match AgeGroupConfig::new(a_min, a_max) {
        Ok(config) => config,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    let fractions = match SplitFractions::new(alpha, beta) {
        Ok(fractions) => fractions,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    let split = if manifest.inner.has_subject_ids && !manifest.inner.is_empty() {
        match split_with_ids(&manifest.inner, &config, &fractions) {
            Ok(split) => split,
            Err(err) => return fail(GaStatus::OperationFailed, err),
        }
    } else if has_seed {
        split_without_ids(&manifest.inner, &config, &fractions, seed)
    } else {
        return fail(
            GaStatus::InvalidArgument,
            "manifest has no subject ids; a seed is required for the age-only split",
        );
    };
    *out = Box::into_raw(Box::new(GaSplit { inner: split }));
    GaStatus::Ok
}

/// Release a split handle.
///
/// # Safety
/// `split` must come from this library and not be freed twice; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn ga_split_free(split: *mut GaSplit) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

/// Number of assigned samples; 0 for a null handle.
///
/// # Safety
/// `split` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_split_assigned_count(split: *const GaSplit) -> usize {
    split.as_ref().map_or(0, |s| s.inner.assignments.len())
}

/// Number of discarded samples; 0 for a null handle.
///
/// # Safety
/// `split` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ga_split_discarded_count(split: *const GaSplit) -> usize {
    split.as_ref().map_or(0, |s| s.inner.discarded.len())
}

/// Per-folder assigned counts, written to `counts_out[0..5]` in folder order
/// (seen train, seen val, seen test, unseen val, unseen test).
///
/// # Safety
/// `split` must be a live handle; `counts_out` must point to at least five
/// writable `size_t` slots.
#[no_mangle]
pub unsafe extern "C" fn ga_split_folder_counts(
    split: *const GaSplit,
    counts_out: *mut usize,
) -> GaStatus {
    let Some(split) = split.as_ref() else {
        return fail(GaStatus::NullArgument, "split is null");
    };
    if counts_out.is_null() {
        return fail(GaStatus::NullArgument, "counts_out is null");
    }
    let counts = split.inner.folder_counts();
    std::slice::from_raw_parts_mut(counts_out, 5).copy_from_slice(&counts);
    GaStatus::Ok
}

/// Serialize the split as the `sample_id,folder,status,reason` table.
///
/// # Safety
/// `split` must be a live handle; `csv_out` must be valid. The returned
/// string must be released with `ga_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_split_to_csv(
    split: *const GaSplit,
    csv_out: *mut *mut c_char,
) -> GaStatus {
    let Some(split) = split.as_ref() else {
        return fail(GaStatus::NullArgument, "split is null");
    };
    if csv_out.is_null() {
        return fail(GaStatus::NullArgument, "csv_out is null");
    }
    let mut buffer = Vec::new();
    if let Err(err) = split.inner.write_csv(&mut buffer) {
        return fail(GaStatus::OperationFailed, err);
    }
    match String::from_utf8(buffer) {
        Ok(text) => string_out(csv_out, text),
        Err(err) => fail(GaStatus::OperationFailed, err),
    }
}

/// Summary (targets, achieved counts, deficits, provenance) as JSON.
/// `manifest` must be the face-filtered manifest the split was built from.
///
/// # Safety
/// Both handles must be live; `json_out` must be valid. The returned string
/// must be released with `ga_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_split_summary_json(
    split: *const GaSplit,
    manifest: *const GaManifest,
    json_out: *mut *mut c_char,
) -> GaStatus {
    let (Some(split), Some(manifest)) = (split.as_ref(), manifest.as_ref()) else {
        return fail(
            GaStatus::NullArgument,
            "split and manifest must be non-null",
        );
    };
    if json_out.is_null() {
        return fail(GaStatus::NullArgument, "json_out is null");
    }
    let summary = SplitSummary::compute(&split.inner, &manifest.inner);
    match serde_json::to_string_pretty(&summary) {
        Ok(json) => string_out(json_out, json),
        Err(err) => fail(GaStatus::OperationFailed, err),
    }
}

/// Per-folder stats (counts, rounded percentages) as JSON.
///
/// # Safety
/// `split` must be a live handle; `json_out` must be valid. The returned
/// string must be released with `ga_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_split_stats_json(
    split: *const GaSplit,
    json_out: *mut *mut c_char,
) -> GaStatus {
    let Some(split) = split.as_ref() else {
        return fail(GaStatus::NullArgument, "split is null");
    };
    if json_out.is_null() {
        return fail(GaStatus::NullArgument, "json_out is null");
    }
    match serde_json::to_string_pretty(&split_stats(&split.inner)) {
        Ok(json) => string_out(json_out, json),
        Err(err) => fail(GaStatus::OperationFailed, err),
    }
}

/// Verify a split against its source manifest. `count_out` receives the
/// violation count; `violations_json_out` (nullable) receives the violation
/// list as JSON.
///
/// # Safety
/// Both handles must be live; `count_out` must be valid;
/// `violations_json_out` may be null. Any returned string must be released
/// with `ga_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ga_split_verify(
    split: *const GaSplit,
    manifest: *const GaManifest,
    violations_json_out: *mut *mut c_char,
    count_out: *mut usize,
) -> GaStatus {
    let (Some(split), Some(manifest)) = (split.as_ref(), manifest.as_ref()) else {
        return fail(
            GaStatus::NullArgument,
            "split and manifest must be non-null",
        );
    };
    if count_out.is_null() {
        return fail(GaStatus::NullArgument, "count_out is null");
    }
    let violations = verify(&split.inner, &manifest.inner, &split.inner.config);
    *count_out = violations.len();
    if !violations_json_out.is_null() {
        match serde_json::to_string_pretty(&violations) {
            Ok(json) => return string_out(violations_json_out, json),
            Err(err) => return fail(GaStatus::OperationFailed, err),
        }
    }
    GaStatus::Ok
}

/// Harmonic mean of two nonnegative errors.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ga_harmonic_mean(seen: f64, unseen: f64, out: *mut f64) -> GaStatus {
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    match harmonic_mean(seen, unseen) {
        Ok(h) => {
            *out = h;
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::InvalidArgument, err),
    }
}

unsafe fn probs_arg<'a>(probs: *const f64, len: usize) -> Result<&'a [f64], GaStatus> {
    if probs.is_null() {
        return Err(fail(GaStatus::NullArgument, "probs is null"));
    }
    if len == 0 {
        return Err(fail(GaStatus::InvalidArgument, "probs must be nonempty"));
    }
    Ok(std::slice::from_raw_parts(probs, len))
}

/// Expectation of the age under a distribution over the 0..len-1 grid.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ga_expected_age(probs: *const f64, len: usize, out: *mut f64) -> GaStatus {
    let values = match probs_arg(probs, len) {
        Ok(values) => values,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    let grid = match AgeGrid::new(0, len as u32 - 1) {
        Ok(grid) => grid,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    let p = match ProbabilityVector::new(values.to_vec()) {
        Ok(p) => p,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    match expected_age(&p, &grid) {
        Ok(age) => {
            *out = age;
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::OperationFailed, err),
    }
}

/// Median age (smallest grid age whose cumulative probability reaches 0.5)
/// over the 0..len-1 grid.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ga_median_age(probs: *const f64, len: usize, out: *mut u32) -> GaStatus {
    let values = match probs_arg(probs, len) {
        Ok(values) => values,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    let grid = match AgeGrid::new(0, len as u32 - 1) {
        Ok(grid) => grid,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    let p = match ProbabilityVector::new(values.to_vec()) {
        Ok(p) => p,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    match median_age(&p, &grid) {
        Ok(age) => {
            *out = age;
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::OperationFailed, err),
    }
}

/// Rank decode: the predicted age is the count of per-threshold
/// probabilities strictly above `threshold`, over the 0..len grid.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ga_rank_decode(
    probs: *const f64,
    len: usize,
    threshold: f64,
    out: *mut u32,
) -> GaStatus {
    let values = match probs_arg(probs, len) {
        Ok(values) => values,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    let grid = match AgeGrid::new(0, len as u32) {
        Ok(grid) => grid,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    match rank_decode(values, threshold, &grid) {
        Ok(age) => {
            *out = age;
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::InvalidArgument, err),
    }
}

/// Chained conditional decode: conditionals are multiplied into cumulative
/// probabilities before thresholding, over the 0..len grid.
///
/// # Safety
/// `conditionals` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ga_corn_decode(
    conditionals: *const f64,
    len: usize,
    threshold: f64,
    out: *mut u32,
) -> GaStatus {
    let values = match probs_arg(conditionals, len) {
        Ok(values) => values,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail(GaStatus::NullArgument, "out is null");
    }
    let grid = match AgeGrid::new(0, len as u32) {
        Ok(grid) => grid,
        Err(err) => return fail(GaStatus::InvalidArgument, err),
    };
    match corn_decode(values, threshold, &grid) {
        Ok(age) => {
            *out = age;
            GaStatus::Ok
        }
        Err(err) => fail(GaStatus::InvalidArgument, err),
    }
}

/// Run the kernel self-test battery. `failures_out` receives the number of
/// failed checks; the rendered report is stored as the last error whenever
/// any check fails.
///
/// # Safety
/// `failures_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ga_kernel_self_test(failures_out: *mut usize) -> GaStatus {
    if failures_out.is_null() {
        return fail(GaStatus::NullArgument, "failures_out is null");
    }
    let report = run_kernel_self_test();
    let failures = report.entries.iter().filter(|e| !e.passed).count();
    *failures_out = failures;
    if failures > 0 {
        set_last_error(report.render_text());
    }
    GaStatus::Ok
}
