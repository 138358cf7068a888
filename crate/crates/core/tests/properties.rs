use grasstensor::analysis;
use grasstensor::critical::{self, CriticalProblem, MEMBERSHIP_TOL};
use grasstensor::grassmann::{build_tensor, tensor_distance};
use grasstensor::instability::{self, ExperimentRecord, Verdict};
use grasstensor::io::format_number;
use grasstensor::multiview::{sample_general_cameras, Homography, Profile};
use grasstensor::random;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn numbers_keep_twelve_significant_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = format_number(x).parse().unwrap();
        prop_assert!(((back - x) / x).abs() <= 5e-12, "{x} -> {back}");
    }

    #[test]
    fn tensor_is_invariant_under_scene_homography(seed in 0u64..500, scales in prop::array::uniform3(0.1f64..10.0)) {
        let cams = sample_general_cameras(3, &[2, 2, 2], seed).unwrap();
        let profile = Profile::new(vec![1, 1, 2], 3, &[2, 2, 2]).unwrap();
        let t = build_tensor(&cams, &profile).unwrap();
        let mut rng = random::seeded(seed + 1);
        let h = Homography::new(random::normal_matrix(&mut rng, 4, 4) + DMatrix::identity(4, 4)).unwrap();
        let moved: Vec<_> = cams
            .iter()
            .zip(scales)
            .map(|(c, s)| grasstensor::multiview::Camera::new(c.transformed(&h).matrix() * s).unwrap())
            .collect();
        let t2 = build_tensor(&moved, &profile).unwrap();
        prop_assert!(tensor_distance(&t, &t2).unwrap() < 1e-9);
    }

    #[test]
    fn bifocal_formula_is_symmetric(k in 2usize..7, h1 in 1usize..6, h2 in 1usize..6, a1 in 1usize..6) {
        prop_assume!(h1 < k && h2 < k && a1 <= k);
        let a2 = k + 1 - a1;
        let fwd = analysis::bifocal_rank_formula(k, h1, h2, a1, a2);
        let rev = analysis::bifocal_rank_formula(k, h2, h1, a2, a1);
        prop_assert_eq!(fwd.is_ok(), rev.is_ok());
        if let (Ok(a), Ok(b)) = (fwd, rev) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn reduced_matrix_is_linear(seed in 0u64..200, x in prop::collection::vec(-3.0f64..3.0, 4), s in -5.0f64..5.0) {
        let prob = CriticalProblem::sample(3, &[2, 2], seed).unwrap();
        let n = prob.n_matrix();
        prop_assert!(n.is_linear());
        let x = DVector::from_vec(x);
        let a = n.eval(&(&x * s)).unwrap();
        let b = n.eval(&x).unwrap() * s;
        prop_assert!((&a - &b).norm() <= 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn membership_ignores_scale(seed in 0u64..50, s in prop_oneof![-1e6f64..-1e-6, 1e-6f64..1e6]) {
        let prob = CriticalProblem::sample(3, &[2, 2], seed).unwrap();
        let on = critical::sample_critical_points(&prob, 1, seed).unwrap()[0].point.clone();
        let mut rng = random::seeded(seed);
        let off = random::normal_vector(&mut rng, 4);
        for x in [on, off] {
            let a = critical::critical_membership(&prob, &x, MEMBERSHIP_TOL).unwrap();
            let b = critical::critical_membership(&prob, &(&x * s), MEMBERSHIP_TOL).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn spearman_is_symmetric_and_bounded(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..30)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let r = instability::spearman(&a, &b);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        prop_assert!((r - instability::spearman(&b, &a)).abs() < 1e-12);
        let mut rev = pairs.clone();
        rev.reverse();
        let (c, d): (Vec<f64>, Vec<f64>) = rev.into_iter().unzip();
        prop_assert!((r - instability::spearman(&c, &d)).abs() < 1e-12);
    }

    #[test]
    fn summary_ignores_record_order(dists in prop::collection::vec(0.0f64..1.0, 1..40), rot in 0usize..40) {
        let sigmas = [1e-3, 1e-2];
        let records: Vec<ExperimentRecord> = dists
            .iter()
            .enumerate()
            .map(|(i, &d)| ExperimentRecord {
                sigma: sigmas[i % 2],
                trial: i / 2,
                tensor_distance: d,
                verdict: if d > 0.1 { Verdict::Far } else { Verdict::Near },
                condition: 1.0,
            })
            .collect();
        let mut shuffled = records.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        let a = instability::summarize(&records).unwrap();
        let b = instability::summarize(&shuffled).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.n, y.n);
            prop_assert_eq!(x.far_fraction, y.far_fraction);
            prop_assert!((x.mean_distance - y.mean_distance).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_keeps_points(seed in 0u64..100) {
        let mut rng = random::seeded(seed);
        let pts: Vec<DVector<f64>> = (0..5).map(|_| random::normal_vector(&mut rng, 4)).collect();
        let same = instability::perturb_points(&pts, 0.0, seed).unwrap();
        for (a, b) in pts.iter().zip(&same) {
            prop_assert!((a.normalize() - b.normalize()).norm() < 1e-12);
        }
    }
}
