//! Drive the C ABI surface exactly as a foreign caller would: raw pointers,
//! status codes, and manual handle lifetimes.

use std::ffi::{CStr, CString};
use std::ptr;

use gzsl_age_capi::*;

const MANIFEST: &str = "\
sample_id,subject_id,age,image_ref,face_ok
s1-0,s1,10,,1
s1-1,s1,11,,1
s1-2,s1,12,,1
s2-0,s2,30,,1
s2-1,s2,31,,1
s2-2,s2,32,,1
s2-3,s2,33,,1
s2-4,s2,34,,1
s2-5,s2,35,,1
s2-6,s2,36,,1
s2-7,s2,37,,1
s3-0,s3,70,,1
s3-1,s3,71,,1
s4-a0,s4,40,,1
s4-a1,s4,41,,1
s4-e0,s4,61,,1
s4-e1,s4,62,,1
s4-e2,s4,63,,0
s4-e3,s4,64,,1
";

unsafe fn parse(manifest: &str) -> *mut GaManifest {
    let name = CString::new("fixture").unwrap();
    let mut handle: *mut GaManifest = ptr::null_mut();
    let status = ga_manifest_parse(
        manifest.as_ptr(),
        manifest.len(),
        name.as_ptr(),
        &mut handle,
    );
    assert_eq!(status, GaStatus::Ok);
    assert!(!handle.is_null());
    handle
}

unsafe fn take_string(raw: *mut std::ffi::c_char) -> String {
    assert!(!raw.is_null());
    let value = CStr::from_ptr(raw).to_str().unwrap().to_string();
    ga_string_free(raw);
    value
}

#[test]
fn manifest_split_verify_lifecycle() {
    unsafe {
        let raw = parse(MANIFEST);
        assert_eq!(ga_manifest_record_count(raw), 19);
        assert!(ga_manifest_has_subject_ids(raw));

        let mut filtered: *mut GaManifest = ptr::null_mut();
        let mut removed = 0usize;
        assert_eq!(
            ga_manifest_filter_faces(raw, &mut filtered, &mut removed),
            GaStatus::Ok
        );
        assert_eq!(removed, 1);
        assert_eq!(ga_manifest_record_count(filtered), 18);

        let mut split: *mut GaSplit = ptr::null_mut();
        let status = ga_split_build(filtered, 18, 60, 0.8, 0.1, false, 0, &mut split);
        assert_eq!(status, GaStatus::Ok);
        assert!(ga_split_assigned_count(split) + ga_split_discarded_count(split) == 18);

        let mut counts = [0usize; 5];
        assert_eq!(
            ga_split_folder_counts(split, counts.as_mut_ptr()),
            GaStatus::Ok
        );
        assert_eq!(counts.iter().sum::<usize>(), ga_split_assigned_count(split));
        assert_eq!(counts[4], 3, "all three minors in unseen test");

        let mut violations = 0usize;
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            ga_split_verify(split, filtered, &mut json, &mut violations),
            GaStatus::Ok
        );
        assert_eq!(violations, 0);
        assert_eq!(take_string(json), "[]");

        let mut csv: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(ga_split_to_csv(split, &mut csv), GaStatus::Ok);
        let csv = take_string(csv);
        assert!(csv.starts_with("sample_id,folder,status,reason\n"));

        let mut summary: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            ga_split_summary_json(split, filtered, &mut summary),
            GaStatus::Ok
        );
        let summary: serde_json::Value = serde_json::from_str(&take_string(summary)).unwrap();
        assert_eq!(
            summary["assigned"].as_u64().unwrap() as usize,
            counts.iter().sum::<usize>()
        );

        let mut stats: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(ga_split_stats_json(split, &mut stats), GaStatus::Ok);
        let stats: serde_json::Value = serde_json::from_str(&take_string(stats)).unwrap();
        assert_eq!(stats["per_folder"][4], 3);

        ga_split_free(split);
        ga_manifest_free(filtered);
        ga_manifest_free(raw);
    }
}

#[test]
fn seeded_build_required_without_subject_ids() {
    unsafe {
        let manifest = "sample_id,age,face_ok\na,30,1\nb,40,1\nc,70,1\n";
        let handle = parse(manifest);
        assert!(!ga_manifest_has_subject_ids(handle));

        let mut split: *mut GaSplit = ptr::null_mut();
        let status = ga_split_build(handle, 18, 60, 0.8, 0.1, false, 0, &mut split);
        assert_eq!(status, GaStatus::InvalidArgument);
        let message = CStr::from_ptr(ga_last_error()).to_str().unwrap();
        assert!(message.contains("seed"), "{message}");

        let status = ga_split_build(handle, 18, 60, 0.8, 0.1, true, 7, &mut split);
        assert_eq!(status, GaStatus::Ok);
        assert_eq!(ga_split_assigned_count(split), 3);
        ga_split_free(split);
        ga_manifest_free(handle);
    }
}

#[test]
fn parse_errors_are_reported() {
    unsafe {
        let bad = "sample_id,age,face_ok\na,-5,1\n";
        let name = CString::new("bad").unwrap();
        let mut handle: *mut GaManifest = ptr::null_mut();
        let status = ga_manifest_parse(bad.as_ptr(), bad.len(), name.as_ptr(), &mut handle);
        assert_eq!(status, GaStatus::ParseFailed);
        assert!(handle.is_null());
        let message = CStr::from_ptr(ga_last_error()).to_str().unwrap();
        assert!(message.contains("row 2"), "{message}");

        let status = ga_manifest_parse(ptr::null(), 0, name.as_ptr(), &mut handle);
        assert_eq!(status, GaStatus::NullArgument);
    }
}

#[test]
fn kernel_helpers_match_library_semantics() {
    unsafe {
        let mut h = 0.0f64;
        assert_eq!(ga_harmonic_mean(3.03, 4.60, &mut h), GaStatus::Ok);
        assert!((h - 3.65).abs() < 0.005);
        assert_eq!(
            ga_harmonic_mean(-1.0, 1.0, &mut h),
            GaStatus::InvalidArgument
        );

        // One-hot at 30 over a 102-class grid.
        let mut probs = vec![0.0f64; 102];
        probs[30] = 1.0;
        let mut expected = 0.0f64;
        assert_eq!(
            ga_expected_age(probs.as_ptr(), probs.len(), &mut expected),
            GaStatus::Ok
        );
        assert_eq!(expected, 30.0);
        let mut median = 0u32;
        assert_eq!(
            ga_median_age(probs.as_ptr(), probs.len(), &mut median),
            GaStatus::Ok
        );
        assert_eq!(median, 30);

        // Unnormalized input is rejected.
        probs[31] = 0.5;
        assert_eq!(
            ga_expected_age(probs.as_ptr(), probs.len(), &mut expected),
            GaStatus::InvalidArgument
        );

        let rank = [0.9f64, 0.8, 0.3, 0.7];
        let mut age = 0u32;
        assert_eq!(
            ga_rank_decode(rank.as_ptr(), rank.len(), 0.5, &mut age),
            GaStatus::Ok
        );
        assert_eq!(age, 3);

        let corn = [0.9f64, 0.8, 0.4];
        assert_eq!(
            ga_corn_decode(corn.as_ptr(), corn.len(), 0.5, &mut age),
            GaStatus::Ok
        );
        assert_eq!(age, 2);

        let mut failures = usize::MAX;
        assert_eq!(ga_kernel_self_test(&mut failures), GaStatus::Ok);
        assert_eq!(failures, 0);
    }
}
