mod common;

use std::fs;
use std::process::Command;

use common::*;
use rand::Rng;
use triavatar::metrics::{akd, aligned_compare, coeff_distance, evaluate_pair, PairInput, PSNR_CAP};
use triavatar::morphable::CoefficientFile;
use triavatar::*;

/// Smooth three-channel test pattern with a per-channel phase.
fn pattern(w: usize, h: usize, f: impl Fn(f64, f64, f64) -> f64) -> Image {
    Image::from_fn(w, h, 3, |x, y, c| f(x as f64, y as f64, c as f64).clamp(0.0, 1.0))
}

fn base(x: f64, y: f64, c: f64) -> f64 {
    0.5 + 0.4 * (0.3 * x + 0.2 * y + c).sin()
}

// Reference values from scikit-image 0.25 `structural_similarity` with
// gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
// data_range=1, channel_axis=2 on the same formulas.
#[test]
fn ssim_matches_reference_implementation() {
    let a = pattern(40, 32, base);
    let b = pattern(40, 32, |x, y, c| {
        base(x, y, c) + 0.05 * (0.7 * x - 0.5 * y + 2.0 * c).cos()
    });
    let n = pattern(40, 32, |x, y, c| base(x, y, c) + 0.002 * (1.3 * x + 0.9 * y + c).cos());
    assert!((ssim(&a, &b).unwrap() - 0.9646334998648821).abs() < 1e-10);
    assert!((ssim(&a, &n).unwrap() - 0.9999292643298391).abs() < 1e-10);
}

#[test]
fn ssim_is_one_on_identical_images_and_symmetric() {
    for seed in 0..5 {
        let a = random_image(23, 17, 3, seed);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let b = random_image(23, 17, 3, seed + 100);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!(ssim(&a, &b).unwrap() < 0.5);
    }
    assert!(ssim(&Image::new(10, 20, 1, 0.0), &Image::new(10, 20, 1, 0.0)).is_err());
}

#[test]
fn psnr_matches_direct_computation() {
    for seed in 0..10 {
        let a = random_image(16, 12, 3, seed);
        let b = random_image(16, 12, 3, seed + 50);
        assert!((psnr(&a, &b).unwrap() - psnr_reference(&a, &b)).abs() < 1e-10);
    }
    // uniform 0.1 offset: MSE 0.01 -> 20 dB
    let a = Image::new(8, 8, 3, 0.25);
    let b = Image::new(8, 8, 3, 0.35);
    assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
    assert!(psnr(&a, &Image::new(8, 7, 3, 0.0)).is_err());
}

#[test]
fn keypoint_and_coefficient_distances() {
    let mut g = rng(4);
    for _ in 0..20 {
        let pts: Vec<[f64; 2]> = (0..10)
            .map(|_| [g.random_range(0.0..64.0), g.random_range(0.0..64.0)])
            .collect();
        let other: Vec<[f64; 2]> = (0..10)
            .map(|_| [g.random_range(0.0..64.0), g.random_range(0.0..64.0)])
            .collect();
        let naive: f64 = pts
            .iter()
            .zip(&other)
            .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
            .sum::<f64>()
            / 10.0;
        let got = akd(
            &KeypointSet::new(pts.clone()).unwrap(),
            &KeypointSet::new(other).unwrap(),
        )
        .unwrap();
        assert!((got - naive).abs() < 1e-12);
    }
    assert_eq!(coeff_distance(&[1.0, 2.0, 2.0], &[0.0, 0.0, 0.0]).unwrap(), 3.0);
    assert!(coeff_distance(&[1.0], &[1.0, 2.0]).is_err());
    assert!(akd(&KeypointSet::default(), &KeypointSet::default()).is_err());
}

fn shifted_pair() -> (Image, KeypointSet, Image, KeypointSet) {
    let gt = random_image(32, 24, 3, 9);
    // prediction = ground truth moved 5 pixels right, black where uncovered
    let pred = Image::from_fn(32, 24, 3, |x, y, c| if x < 5 { 0.0 } else { gt.get(x - 5, y, c) });
    let mut g = rng(10);
    let gt_kp: Vec<[f64; 2]> = (0..8)
        .map(|_| [g.random_range(2.0..25.0), g.random_range(2.0..22.0)])
        .collect();
    let pred_kp = gt_kp.iter().map(|p| [p[0] + 5.0, p[1]]).collect();
    (
        pred,
        KeypointSet::new(pred_kp).unwrap(),
        gt,
        KeypointSet::new(gt_kp).unwrap(),
    )
}

#[test]
fn translation_is_undone_by_alignment() {
    let (pred, pred_kp, gt, gt_kp) = shifted_pair();
    let a = aligned_compare(&pred, &pred_kp, &gt, &gt_kp).unwrap();
    let moved = a.transform.apply_point(&[0.0, 0.0]);
    assert!((moved[0] - 5.0).abs() < 1e-9 && moved[1].abs() < 1e-9);
    assert!(akd(&pred_kp, &a.gt_keypoints).unwrap() < 1e-9);
    assert!(psnr(&pred, &a.gt_image).unwrap() > 90.0);

    let input = PairInput {
        id: "shift".into(),
        pred: pred.clone(),
        gt: gt.clone(),
        pred_keypoints: Some(pred_kp),
        gt_keypoints: Some(gt_kp),
        ..Default::default()
    };
    let aligned = evaluate_pair(&input, true).unwrap();
    let raw = evaluate_pair(&input, false).unwrap();
    assert!(aligned.psnr > 90.0 && raw.psnr < 20.0);
    assert!((raw.akd.unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn identical_keypoints_leave_ground_truth_untouched() {
    let img = random_image(20, 20, 3, 1);
    let kp = KeypointSet::new(vec![[3.0, 4.0], [10.0, 2.0], [15.0, 16.0]]).unwrap();
    let a = aligned_compare(&img, &kp, &img, &kp).unwrap();
    assert_eq!(a.gt_image, img);
    assert_eq!(a.gt_keypoints, kp);
}

#[test]
fn report_means_and_round_trip() {
    let pairs: Vec<PairInput> = (0..4)
        .map(|i| PairInput {
            id: format!("p{i}"),
            pred: random_image(16, 16, 3, i),
            gt: random_image(16, 16, 3, i + 10),
            pred_coeffs: (i % 2 == 0).then(|| CoefficientFile {
                beta: Some(vec![i as f64, 0.0]),
                pose: Some(vec![0.0; 3]),
                ..Default::default()
            }),
            gt_coeffs: (i % 2 == 0).then(|| CoefficientFile {
                beta: Some(vec![0.0, 0.0]),
                pose: Some(vec![0.0, 4.0, 3.0]),
                ..Default::default()
            }),
            ..Default::default()
        })
        .chain(std::iter::once(PairInput {
            id: "broken".into(),
            pred: random_image(16, 16, 3, 0),
            gt: random_image(8, 8, 3, 0),
            ..Default::default()
        }))
        .collect();
    let report = MetricReport::evaluate(&pairs, true);
    assert_eq!(report.pairs.len(), 4);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].0, "broken");

    let m = report.means();
    let want_psnr = pairs[..4].iter().map(|p| psnr_reference(&p.pred, &p.gt)).sum::<f64>() / 4.0;
    assert!((m.psnr.unwrap() - want_psnr).abs() < 1e-10);
    // only p0 and p2 carry coefficients: aed 0 and 2, apd 5 and 5
    assert_eq!(m.aed, Some(1.0));
    assert_eq!(m.apd, Some(5.0));
    assert_eq!(m.akd, None);

    let text = report.to_text();
    assert!(text.contains("akd=NA"));
    assert!(text.contains("count pairs=4 skipped=1"));
    assert_eq!(MetricReport::parse(&text).unwrap(), report);
}

#[test]
fn eval_command_writes_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred_dir, gt_dir) = (tmp.path().join("pred"), tmp.path().join("gt"));
    fs::create_dir_all(&pred_dir).unwrap();
    fs::create_dir_all(&gt_dir).unwrap();
    // 51/255 = 0.2 on a quarter of the samples: MSE 0.01 -> 20 dB
    let gt = Image::new(16, 16, 3, 0.0);
    let pred = Image::from_fn(16, 16, 3, |_, y, _| if y < 4 { 51.0 / 255.0 } else { 0.0 });
    gt.save_png(gt_dir.join("a.png")).unwrap();
    pred.save_png(pred_dir.join("a.png")).unwrap();
    gt.save_png(gt_dir.join("b.png")).unwrap();
    gt.save_png(pred_dir.join("b.png")).unwrap();
    fs::write(tmp.path().join("eval.cfg"), "[paths]\npred_dir = pred\ngt_dir = gt\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_triavatar"))
        .args(["eval", "--config", "eval.cfg", "--out", "out"])
        .current_dir(tmp.path())
        .env_remove("TRIAVATAR_CONFIG")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = MetricReport::load(tmp.path().join("out/report.txt")).unwrap();
    assert_eq!(report.pairs.len(), 2);
    let a = &report.pairs[0];
    assert_eq!(a.id, "a");
    assert!((a.psnr - 20.0).abs() < 1e-9, "{}", a.psnr);
    let b = &report.pairs[1];
    assert_eq!((b.psnr, b.ssim, b.l1), (PSNR_CAP, 1.0, 0.0));

    // an orphaned prediction is an input error
    gt.save_png(pred_dir.join("c.png")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_triavatar"))
        .args(["eval", "--config", "eval.cfg", "--out", "out"])
        .current_dir(tmp.path())
        .env_remove("TRIAVATAR_CONFIG")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
