use std::ffi::{CStr, CString};
use std::ptr;

use multipose::datagen::{build_dataset, generate_synthetic, SynthConfig};
use multipose::lifter::{CvaeConfig, LifterModel};
use multipose::ordinal::OrdinalMatrix;
use multipose::pose::{CameraIntrinsics, Pose3D, Skeleton};
use multipose_ffi::*;

fn last_error() -> String {
    let p = mp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tiny_checkpoints(dir: &std::path::Path) -> (CString, CString, Vec<f64>) {
    let sk = Skeleton::h36m17();
    let config = SynthConfig {
        num_poses: 20,
        ..SynthConfig::default()
    };
    let poses = generate_synthetic(&config, &sk).unwrap();
    let recs = build_dataset(&poses, &config, &sk, &CameraIntrinsics::default(), 100.0).unwrap();
    let hp = CvaeConfig {
        latent_dim: 3,
        hidden_dim: 16,
        blocks: 1,
        epochs: 1,
        batch_size: 16,
        ..CvaeConfig::default()
    };
    let (cvae, _) = multipose::cli::pipeline::fit_cvae(&recs, &hp, &sk, 1, |_, _| {}).unwrap();
    let (base, _) = multipose::cli::pipeline::fit_baseline(&recs, &hp, &sk, 1, |_, _| {}).unwrap();
    let c = dir.join("cvae.ckpt");
    let b = dir.join("baseline.ckpt");
    LifterModel::Cvae(cvae).save(&c).unwrap();
    LifterModel::Baseline(base).save(&b).unwrap();
    (
        CString::new(c.to_str().unwrap()).unwrap(),
        CString::new(b.to_str().unwrap()).unwrap(),
        recs[0].pose2d.to_flat(),
    )
}

#[test]
fn model_lifecycle_and_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let (cvae_path, base_path, p2d) = tiny_checkpoints(dir.path());
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(mp_model_load(cvae_path.as_ptr(), &mut m), MpStatus::Ok);
        let mut kind = MpModelKind::Baseline;
        assert_eq!(mp_model_kind(m, &mut kind), MpStatus::Ok);
        assert_eq!(kind, MpModelKind::Cvae);
        let (mut j2, mut j3) = (0, 0);
        assert_eq!(mp_model_joints(m, &mut j2, &mut j3), MpStatus::Ok);
        assert_eq!((j2, j3), (16, 17));

        let mut five = vec![0.0; 5 * 51];
        let mut ten = vec![0.0; 10 * 51];
        assert_eq!(mp_model_sample(m, p2d.as_ptr(), p2d.len(), 5, 7, five.as_mut_ptr(), five.len()), MpStatus::Ok);
        assert_eq!(mp_model_sample(m, p2d.as_ptr(), p2d.len(), 10, 7, ten.as_mut_ptr(), ten.len()), MpStatus::Ok);
        assert_eq!(five[..], ten[..five.len()]);
        assert!(five.chunks(51).all(|c| c[..3] == [0.0; 3]));

        let mut small = vec![0.0; 10];
        assert_eq!(
            mp_model_sample(m, p2d.as_ptr(), p2d.len(), 5, 7, small.as_mut_ptr(), small.len()),
            MpStatus::BufferTooSmall
        );
        assert!(last_error().contains("255"));
        assert_eq!(
            mp_baseline_regress(m, p2d.as_ptr(), p2d.len(), small.as_mut_ptr(), small.len()),
            MpStatus::WrongModelKind
        );
        assert_eq!(mp_model_sample(m, p2d.as_ptr(), 6, 5, 7, five.as_mut_ptr(), five.len()), MpStatus::DimensionMismatch);
        mp_model_free(m);

        let mut b = ptr::null_mut();
        assert_eq!(mp_model_load(base_path.as_ptr(), &mut b), MpStatus::Ok);
        let mut out = vec![0.0; 51];
        assert_eq!(mp_baseline_regress(b, p2d.as_ptr(), p2d.len(), out.as_mut_ptr(), 51), MpStatus::Ok);
        assert!(out.iter().all(|v| v.is_finite()));
        mp_model_free(b);
        mp_model_free(ptr::null_mut());
    }
}

#[test]
fn load_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("none.ckpt").to_str().unwrap()).unwrap();
    let garbage_path = dir.path().join("bad.ckpt");
    std::fs::write(&garbage_path, "not a checkpoint\n").unwrap();
    let garbage = CString::new(garbage_path.to_str().unwrap()).unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(mp_model_load(missing.as_ptr(), &mut m), MpStatus::Io);
        assert!(m.is_null());
        assert!(last_error().contains("none.ckpt"));
        assert_ne!(mp_model_load(garbage.as_ptr(), &mut m), MpStatus::Ok);
        assert_eq!(mp_model_load(ptr::null(), &mut m), MpStatus::NullPointer);
    }
}

#[test]
fn metrics_match_the_library() {
    let gt: Vec<f64> = (0..51).map(|i| ((i * 37) % 11) as f64 * 10.0).collect();
    let pred: Vec<f64> = gt.iter().enumerate().map(|(i, v)| v + (i % 5) as f64).collect();
    let (p, g) = (Pose3D::from_flat(&pred).unwrap(), Pose3D::from_flat(&gt).unwrap());
    let mut out = 0.0;
    unsafe {
        assert_eq!(mp_mpjpe(pred.as_ptr(), gt.as_ptr(), 17, &mut out), MpStatus::Ok);
        assert_eq!(out, multipose::eval::mpjpe(&p, &g).unwrap());
        assert_eq!(mp_pa_mpjpe(pred.as_ptr(), gt.as_ptr(), 17, true, &mut out), MpStatus::Ok);
        assert_eq!(out, multipose::eval::pa_mpjpe(&p, &g, true).unwrap());
        let line: Vec<f64> = (0..9).map(|i| (i / 3) as f64 * if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        assert_eq!(mp_pa_mpjpe(line.as_ptr(), line.as_ptr(), 3, true, &mut out), MpStatus::Degenerate);
        assert_eq!(mp_mpjpe(ptr::null(), gt.as_ptr(), 17, &mut out), MpStatus::NullPointer);
    }
}

#[test]
fn softmax_through_the_abi() {
    let scores = [1.0, 0.0];
    let mut w = [0.0; 2];
    unsafe {
        assert_eq!(mp_softmax_weights(scores.as_ptr(), 2, 0.3, w.as_mut_ptr()), MpStatus::Ok);
        assert!((w[0] - 0.574442516811659).abs() < 1e-12);
        assert_eq!(mp_softmax_weights(scores.as_ptr(), 2, -1.0, w.as_mut_ptr()), MpStatus::InvalidArgument);
        assert_eq!(mp_softmax_weights(scores.as_ptr(), 0, 1.0, w.as_mut_ptr()), MpStatus::InvalidArgument);
    }
}

#[test]
fn ordinal_aggregate_prefers_the_matching_candidate() {
    let sk = Skeleton::h36m17();
    let near: Vec<[f64; 3]> = (0..17).map(|j| [j as f64 * 10.0, 0.0, j as f64 * 200.0]).collect();
    let far: Vec<[f64; 3]> = (0..17).map(|j| [j as f64 * 10.0, 0.0, -(j as f64) * 200.0]).collect();
    let (a, b) = (Pose3D::new(near).unwrap(), Pose3D::new(far).unwrap());
    let reference = OrdinalMatrix::from_pose(&a, 100.0, sk.scoring_joints()).unwrap();
    let samples: Vec<f64> = a.to_flat().into_iter().chain(b.to_flat()).collect();
    let mut out = vec![0.0; 51];
    let mut w = vec![0.0; 2];
    unsafe {
        let status = mp_ordinal_aggregate(
            samples.as_ptr(),
            2,
            17,
            reference.raw_codes().as_ptr(),
            16,
            100.0,
            0.3,
            out.as_mut_ptr(),
            w.as_mut_ptr(),
        );
        assert_eq!(status, MpStatus::Ok);
        assert!(w[0] > 0.999 && (w[0] + w[1] - 1.0).abs() < 1e-12);
        for (o, t) in out.iter().zip(a.to_flat()) {
            assert!((o - t).abs() < 1e-6);
        }
        let bad = vec![7u8; 256];
        let status = mp_ordinal_aggregate(samples.as_ptr(), 2, 17, bad.as_ptr(), 16, 100.0, 0.3, out.as_mut_ptr(), ptr::null_mut());
        assert_eq!(status, MpStatus::InvalidArgument);
        assert!(last_error().contains("invalid ordinal code"));
    }
}

#[test]
fn header_is_generated_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/multipose.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "mp_model_load",
        "mp_model_free",
        "mp_model_sample",
        "mp_baseline_regress",
        "mp_mpjpe",
        "mp_pa_mpjpe",
        "mp_softmax_weights",
        "mp_ordinal_aggregate",
        "mp_last_error_message",
        "MP_STATUS_OK",
        "typedef struct MpModel MpModel",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let probe = tempfile::tempdir().unwrap();
    let src = probe.path().join("probe.c");
    std::fs::write(&src, "#include \"multipose.h\"\nint main(void) { return mp_version() == 0; }\n").unwrap();
    match std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler; skipped compile check"),
    }
}
