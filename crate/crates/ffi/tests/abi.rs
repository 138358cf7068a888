use std::ffi::CStr;
use std::ptr;

use grasstensor_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gt_last_error()) }.to_string_lossy().into_owned()
}

fn sample_cams(k: u32, h: &[u32], seed: u64) -> *mut GtCameras {
    let mut cams = ptr::null_mut();
    let st = unsafe { gt_cameras_sample(k, h.as_ptr(), h.len(), seed, &mut cams) };
    assert_eq!(st, GtStatus::Ok, "{}", last_error());
    cams
}

#[test]
fn fundamental_tensor_has_rank_two() {
    let cams = sample_cams(3, &[2, 2], 4);
    let mut t = ptr::null_mut();
    let st = unsafe { gt_tensor_build(cams, [2u32, 2].as_ptr(), 2, &mut t) };
    assert_eq!(st, GtStatus::Ok);
    assert_eq!(unsafe { gt_tensor_len(t) }, 9);
    let mut buf = [0.0; 9];
    assert_eq!(unsafe { gt_tensor_copy_entries(t, buf.as_mut_ptr(), 9) }, GtStatus::Ok);
    // 3x3 determinant vanishes for a fundamental matrix
    let f = |r: usize, c: usize| buf[3 * r + c];
    let det = f(0, 0) * (f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1)) - f(0, 1) * (f(1, 0) * f(2, 2) - f(1, 2) * f(2, 0))
        + f(0, 2) * (f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0));
    let norm: f64 = buf.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(det.abs() < 1e-10 * norm.powi(3));

    let mut d = -1.0;
    assert_eq!(unsafe { gt_tensor_distance(t, t, &mut d) }, GtStatus::Ok);
    assert!(d.abs() < 1e-14);

    let mut small = [0.0; 4];
    assert_eq!(unsafe { gt_tensor_copy_entries(t, small.as_mut_ptr(), 4) }, GtStatus::BufferTooSmall);
    unsafe {
        gt_tensor_free(t);
        gt_cameras_free(cams);
    }
}

#[test]
fn cameras_round_trip_through_buffers() {
    let cams = sample_cams(3, &[2, 2], 9);
    assert_eq!(unsafe { gt_cameras_count(cams) }, 2);
    let mut data = vec![0.0; 24];
    unsafe {
        assert_eq!(gt_cameras_copy(cams, 0, data.as_mut_ptr(), 12), GtStatus::Ok);
        assert_eq!(gt_cameras_copy(cams, 1, data[12..].as_mut_ptr(), 12), GtStatus::Ok);
        assert_eq!(gt_cameras_copy(cams, 2, data.as_mut_ptr(), 12), GtStatus::InvalidInput);
    }
    let mut again = ptr::null_mut();
    let st = unsafe { gt_cameras_new(3, [2u32, 2].as_ptr(), 2, data.as_ptr(), 24, &mut again) };
    assert_eq!(st, GtStatus::Ok);
    let mut back = vec![0.0; 12];
    unsafe { gt_cameras_copy(again, 1, back.as_mut_ptr(), 12) };
    assert_eq!(&back[..], &data[12..]);

    let mut bad = ptr::null_mut();
    let st = unsafe { gt_cameras_new(3, [2u32, 2].as_ptr(), 2, data.as_ptr(), 23, &mut bad) };
    assert_eq!(st, GtStatus::ShapeMismatch);
    assert!(last_error().starts_with("ShapeMismatch"));
    assert!(bad.is_null());
    unsafe {
        gt_cameras_free(again);
        gt_cameras_free(cams);
    }
}

#[test]
fn formulas_and_bounds() {
    let mut r = 0u64;
    assert_eq!(unsafe { gt_bifocal_rank(3, 2, 2, 2, 2, &mut r) }, GtStatus::Ok);
    assert_eq!(r, 2);
    assert_eq!(unsafe { gt_trifocal_rank(3, [2u32, 2, 2].as_ptr(), [1u32, 1, 2].as_ptr(), &mut r) }, GtStatus::Ok);
    assert_eq!(r, 4);

    let mut dim = 0i64;
    assert_eq!(unsafe { gt_variety_dimension(3, [2u32, 2].as_ptr(), 2, &mut dim) }, GtStatus::Ok);
    assert_eq!(dim, 7);
    assert_eq!(unsafe { gt_expected_dimension(4, [2u32, 2, 2].as_ptr(), 3, &mut dim) }, GtStatus::Ok);
    assert_eq!(dim, 2);
    let mut deg = 0u64;
    assert_eq!(unsafe { gt_expected_degree(4, [2u32, 2, 2].as_ptr(), 3, &mut deg) }, GtStatus::Ok);
    assert_eq!(deg, 6);
    let st = unsafe { gt_expected_dimension(9, [1u32, 1].as_ptr(), 2, &mut dim) };
    assert_eq!(st, GtStatus::BoundViolated);
}

#[test]
fn null_pointers_are_reported() {
    let mut d = 0.0;
    assert_eq!(unsafe { gt_tensor_distance(ptr::null(), ptr::null(), &mut d) }, GtStatus::NullPointer);
    assert_eq!(unsafe { gt_bifocal_rank(3, 2, 2, 2, 2, ptr::null_mut()) }, GtStatus::NullPointer);
    assert_eq!(unsafe { gt_tensor_len(ptr::null()) }, 0);
    unsafe {
        gt_tensor_free(ptr::null_mut());
        gt_problem_free(ptr::null_mut());
    }
    let name = unsafe { CStr::from_ptr(gt_status_name(GtStatus::NullPointer)) };
    assert_eq!(name.to_str().unwrap(), "NullPointer");
}

#[test]
fn critical_points_sample_check_and_conjugate() {
    let mut prob = ptr::null_mut();
    assert_eq!(unsafe { gt_problem_sample(3, [2u32, 2].as_ptr(), 2, 5, &mut prob) }, GtStatus::Ok);
    let mut pts = vec![0.0; 3 * 4];
    assert_eq!(unsafe { gt_critical_sample(prob, 3, 1, pts.as_mut_ptr(), pts.len()) }, GtStatus::Ok);
    for x in pts.chunks(4) {
        let (mut member, mut gap) = (0, 0usize);
        let st = unsafe { gt_critical_membership(prob, x.as_ptr(), 4, 1e-8, &mut member, &mut gap) };
        assert_eq!(st, GtStatus::Ok);
        assert_eq!(member, 1);
        assert!(gap >= 1);
        let mut y = [0.0; 4];
        assert_eq!(unsafe { gt_conjugate_point(prob, x.as_ptr(), 4, y.as_mut_ptr()) }, GtStatus::Ok);
        assert!(y.iter().any(|v| v.abs() > 0.0));
    }
    let off = [1.0, 0.3, -0.2, 0.7];
    let (mut member, mut gap) = (1, 0usize);
    unsafe { gt_critical_membership(prob, off.as_ptr(), 4, 1e-8, &mut member, &mut gap) };
    assert_eq!(member, 0);
    let mut y = [0.0; 4];
    assert_eq!(unsafe { gt_conjugate_point(prob, off.as_ptr(), 4, y.as_mut_ptr()) }, GtStatus::NotOnLocus);
    unsafe { gt_problem_free(prob) };
}

#[test]
fn recovered_cameras_reproduce_the_tensor() {
    let cams = sample_cams(3, &[2, 2, 2], 2);
    let profile = [1u32, 1, 2];
    let mut t = ptr::null_mut();
    unsafe { gt_tensor_build(cams, profile.as_ptr(), 3, &mut t) };
    let (mut rec, mut dist) = (ptr::null_mut(), 1.0);
    assert_eq!(unsafe { gt_recover_cameras(t, 0, &mut rec, &mut dist) }, GtStatus::Ok, "{}", last_error());
    assert!(dist < 1e-8);
    let mut t2 = ptr::null_mut();
    unsafe { gt_tensor_build(rec, profile.as_ptr(), 3, &mut t2) };
    let mut d = 1.0;
    unsafe { gt_tensor_distance(t, t2, &mut d) };
    assert!(d < 1e-8);
    unsafe {
        gt_tensor_free(t2);
        gt_tensor_free(t);
        gt_cameras_free(rec);
        gt_cameras_free(cams);
    }
}

#[test]
fn header_is_valid_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/grasstensor.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["gt_tensor_build", "gt_critical_membership", "GT_STATUS_NOT_ON_LOCUS", "typedef struct GtTensor GtTensor"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(cc) = which_cc() else { return };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"grasstensor.h\"\nint main(void) { GtTensor *t = 0; return (int)gt_tensor_len(t); }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
