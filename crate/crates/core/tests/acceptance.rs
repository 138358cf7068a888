use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use grasstensor::analysis::{self, AlsOptions};
use grasstensor::critical::{self, CriticalProblem, MEMBERSHIP_TOL};
use grasstensor::fixtures::{self, CenterLayout};
use grasstensor::grassmann::{self, build_tensor, tensor_distance};
use grasstensor::instability::{self, ExperimentConfig};
use grasstensor::multiview::{self, Camera, Motion, MotionModel, Profile, Scene};
use grasstensor::random;
use grasstensor::reconstruction::{self, RecoveryOptions};
use grasstensor::Error;
use nalgebra::{DMatrix, DVector};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e:?}"))
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn svd_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let s = singular_values(m);
    s.iter().filter(|&&x| x > rel * s[0]).count()
}

/// Right singular vector of the smallest singular value; wide matrices are
/// padded with zero rows so the SVD is full.
fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.ncols();
    let mut sq = DMatrix::zeros(n.max(m.nrows()), n);
    sq.rows_mut(0, m.nrows()).copy_from(m);
    let svd = sq.svd(false, true);
    let i = svd.singular_values.imin();
    svd.v_t.unwrap().row(i).transpose()
}

fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (a, mut b) = (a.normalize(), b.normalize());
    if a.dot(&b) < 0.0 {
        b = -b;
    }
    2.0 * ((&a - &b).norm() / 2.0).min(1.0).asin()
}

fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn c1_fundamental() -> Check {
    let mut worst_angle: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let profile = ok(Profile::new(vec![2, 2], 3, &[2, 2]), "profile")?;
    for seed in 0..20 {
        let cams = ok(multiview::sample_general_cameras(3, &[2, 2], seed), "sample")?;
        let t = ok(build_tensor(&cams, &profile), "build")?;
        let f = t.entries().flattening(0);
        ensure!(f.shape() == (3, 3), "seed {seed}: shape {:?}", f.shape());
        let s = singular_values(&f);
        ensure!(s[2] / s[0] < 1e-10 && s[1] / s[0] > 1e-10, "seed {seed}: singular values {s:?}");
        worst_ratio = worst_ratio.max(s[2] / s[0]);
        // Axis slot J = {a,b} pairs with the coordinate of the missing row,
        // so lexicographic slots {01,02,12} read point coordinates 2,1,0.
        let to_point = |v: DVector<f64>| DVector::from_vec(vec![v[2], v[1], v[0]]);
        let left = to_point(null_vector(&f.transpose()));
        let right = to_point(null_vector(&f));
        let c = [null_vector(cams[0].matrix()), null_vector(cams[1].matrix())];
        let e1 = cams[0].matrix() * &c[1];
        let e2 = cams[1].matrix() * &c[0];
        let a = angle(&left, &e1).max(angle(&right, &e2));
        ensure!(a < 1e-8, "seed {seed}: epipole angle {a:e}");
        worst_angle = worst_angle.max(a);
    }
    Ok(format!("20 pairs, max σ3/σ1 {worst_ratio:.1e}, max epipole angle {worst_angle:.1e}"))
}

fn c2_bifocal_grid() -> Check {
    let mut cases = 0;
    for k in 2..=6usize {
        for h1 in 1..k {
            for h2 in 1..k {
                for a1 in 1..=h1 {
                    let Some(a2) = (k + 1).checked_sub(a1) else { continue };
                    if a2 == 0 || a2 > h2 {
                        continue;
                    }
                    let Ok(profile) = Profile::new(vec![a1, a2], k, &[h1, h2]) else { continue };
                    let dims = grassmann::axis_dims(&[h1, h2], &profile);
                    if dims.iter().any(|&d| d > 21) {
                        continue;
                    }
                    let formula = ok(analysis::bifocal_rank_formula(k, h1, h2, a1, a2), "formula")?;
                    let seed = (k * 1000 + h1 * 100 + h2 * 10 + a1) as u64;
                    let cams = ok(multiview::sample_general_cameras(k, &[h1, h2], seed), "sample")?;
                    let t = ok(build_tensor(&cams, &profile), "build")?;
                    let r = svd_rank(&t.entries().flattening(0), 1e-10) as u64;
                    ensure!(
                        r == formula,
                        "k={k} h=({h1},{h2}) α=({a1},{a2}): numerical {r}, formula {formula}"
                    );
                    cases += 1;
                }
            }
        }
    }
    ensure!(cases > 0, "empty grid");
    Ok(format!("{cases} cases agree"))
}

fn c3_trifocal_ranks() -> Check {
    let opts = AlsOptions::default();
    let classical = {
        let cams = ok(multiview::sample_general_cameras(3, &[2, 2, 2], 5), "sample")?;
        let p = ok(Profile::new(vec![1, 1, 2], 3, &[2, 2, 2]), "profile")?;
        ok(build_tensor(&cams, &p), "build")?
    };
    let b = ok(analysis::cp_rank_bounds(classical.entries(), 6, &opts), "bounds")?;
    ensure!(b.certified() == Some(4), "classical: {b:?}");

    let profile = ok(Profile::new(vec![1, 2, 2], 4, &[2, 2, 2]), "profile")?;
    let bounds_for = |layout, pair| -> Result<analysis::CpRankBounds, String> {
        let cams = ok(fixtures::lines_in_p4(layout, pair, 0), "fixture")?;
        let t = ok(build_tensor(&cams, &profile), "build")?;
        ok(analysis::cp_rank_bounds(t.entries(), 6, &opts), "bounds")
    };
    let mut parts = vec!["classical 4".to_string()];
    let expected = [
        (CenterLayout::General, [1, 2], 4),
        (CenterLayout::Hyperplane, [1, 2], 5),
        (CenterLayout::MeetingPair, [1, 2], 2),
        (CenterLayout::HyperplaneMeetingPair, [0, 1], 4),
    ];
    for (layout, pair, want) in expected {
        let b = bounds_for(layout, pair)?;
        if want == 5 {
            ensure!(b.lower == 4 && b.upper == Some(5), "{}: {b:?}", layout.name());
            let r4 = b.residual_at(4).ok_or("no rank-4 fit recorded")?;
            let r5 = b.residual_at(5).ok_or("no rank-5 fit recorded")?;
            ensure!(r4 > opts.tol, "{}: a rank-4 fit converged ({r4:e})", layout.name());
            let gap = r4 / r5.max(f64::MIN_POSITIVE);
            ensure!(gap >= 1e3, "{}: residual gap {gap:e}", layout.name());
            parts.push(format!("{} upper 5 (rank-4 residual {r4:.1e}, gap {gap:.1e})", layout.name()));
        } else {
            ensure!(b.certified() == Some(want), "{}: want {want}, got {b:?}", layout.name());
            parts.push(format!("{} {want}", layout.name()));
        }
    }
    let mut other = Vec::new();
    for (layout, pair) in [(CenterLayout::MeetingPair, [0, 1]), (CenterLayout::HyperplaneMeetingPair, [1, 2])] {
        let b = bounds_for(layout, pair)?;
        other.push(format!("{}{:?}: {}..{:?}", layout.name(), pair, b.lower, b.upper));
    }
    Ok(format!("{}; other pairs: {}", parts.join(", "), other.join(", ")))
}

fn c4_core() -> Check {
    let configs: [(usize, [usize; 3], [usize; 3]); 7] = [
        (3, [2, 2, 2], [1, 1, 2]),
        (3, [2, 2, 2], [1, 2, 1]),
        (3, [2, 2, 2], [2, 1, 1]),
        (4, [3, 3, 2], [2, 2, 1]),
        (4, [3, 3, 3], [2, 2, 1]),
        (5, [3, 3, 3], [2, 2, 2]),
        (5, [4, 4, 3], [3, 2, 1]),
    ];
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let (k, h, a) = configs[seed as usize % configs.len()];
        let inv = grasstensor::canonical::intersection_invariants(k, h[0], h[1], h[2]);
        ensure!(inv.i >= 0, "config with i < 0");
        let cams = ok(multiview::sample_general_cameras(k, &h, seed + 100), "sample")?;
        let profile = ok(Profile::new(a.to_vec(), k, &h), "profile")?;
        let t = ok(build_tensor(&cams, &profile), "build")?;
        let core = ok(analysis::extract_core(&cams, &profile), "core")?;
        for s in &core.factors {
            let g = s.transpose() * s;
            let e = (&g - DMatrix::identity(g.nrows(), g.ncols())).abs().max();
            ensure!(e <= 1e-10, "seed {seed}: SᵀS off identity by {e:e}");
        }
        let back = ok(core.expand(), "expand")?;
        let res = back.sub(t.entries()).norm() / t.entries().norm();
        ensure!(res <= 1e-10, "seed {seed}: reconstruction residual {res:e}");
        worst = worst.max(res);
        let ranks: Vec<usize> = (0..3).map(|ax| svd_rank(&t.entries().flattening(ax), 1e-10)).collect();
        ensure!(core.dims() == ranks, "seed {seed}: core {:?} vs ranks {ranks:?}", core.dims());
        let ct = &core.canonical_tensor;
        let tol = 1e-10 * ct.norm();
        for ax in 0..3 {
            let n = ct.dims()[ax];
            let nu = n - ct.nonzero_slices(ax, tol).len();
            ensure!(n - nu == ranks[ax], "seed {seed} axis {ax}: n={n} ν={nu} r={}", ranks[ax]);
        }
    }
    Ok(format!("20 configs, max residual {worst:.1e}"))
}

fn random_scene(k: usize, n: usize, seed: u64) -> Scene {
    let mut rng = random::seeded(seed);
    Scene::new(k, (0..n).map(|_| random::normal_vector(&mut rng, k + 1)).collect()).unwrap()
}

fn round_trip(h: &[usize], alphas: &[usize], seed: u64) -> Check {
    let k = 3;
    let cams = ok(multiview::sample_general_cameras(k, h, seed), "sample")?;
    let profile = ok(Profile::new(alphas.to_vec(), k, h), "profile")?;
    let truth = ok(build_tensor(&cams, &profile), "build")?;
    let scene = random_scene(k, 40, seed + 1);
    let tuples = ok(reconstruction::make_correspondences(&cams, &scene, &profile, 1, seed + 2), "tuples")?;
    let est = ok(reconstruction::estimate_tensor(&tuples, k, h, &profile), "estimate")?;
    let d = ok(tensor_distance(&est.tensor, &truth), "distance")?;
    ensure!(d < 1e-8, "{h:?}: tensor distance {d:e}");
    let rec = ok(
        reconstruction::recover_cameras(&est.tensor, &RecoveryOptions { seed, ..Default::default() }),
        "recover",
    )?;
    let eq = multiview::projectively_equivalent(&rec.cameras, &cams, 1e-6)
        .ok_or_else(|| format!("{h:?}: cameras not projectively equivalent (fit {:e})", rec.distance))?;
    let mut reproj: f64 = 0.0;
    for (x, tup) in scene.points().iter().zip(&tuples) {
        let images: Vec<DVector<f64>> = cams.iter().map(|c| c.project(x).unwrap()).collect();
        let tri = ok(reconstruction::triangulate(&rec.cameras, tup), "triangulate")?;
        reproj = reproj.max(ok(reconstruction::reprojection_error(&rec.cameras, &tri.point, &images), "reproject")?);
    }
    ensure!(reproj < 1e-8, "{h:?}: reprojection error {reproj:e}");
    Ok(format!("{h:?}: distance {d:.1e}, homography residual {:.1e}, reprojection {reproj:.1e}", eq.residual))
}

fn c5_reconstruction() -> Check {
    let tri = round_trip(&[2, 2, 2], &[1, 1, 2], 3)?;
    let bi = round_trip(&[2, 2], &[2, 2], 4)?;
    let cams = ok(multiview::sample_general_cameras(3, &[1, 1, 1, 1], 2), "sample")?;
    let p = ok(Profile::new(vec![1, 1, 1, 1], 3, &[1, 1, 1, 1]), "profile")?;
    let t = ok(build_tensor(&cams, &p), "build")?;
    let r = reconstruction::recover_cameras(&t, &RecoveryOptions::default());
    ensure!(
        matches!(r, Err(Error::AmbiguousReconstruction)),
        "all-line views: {:?}",
        r.map(|x| x.distance)
    );
    Ok(format!("{tri}; {bi}; h=1⁴ ambiguous"))
}

fn c6_critical() -> Check {
    let prob = ok(CriticalProblem::sample(3, &[2, 2], 7), "problem")?;
    let n = prob.n_matrix();
    ensure!((n.rows(), n.cols()) == (2, 2) && n.is_linear(), "N is {}×{}", n.rows(), n.cols());
    // det of a 2×2 matrix of linear forms is a quadratic form: check it is a
    // nonzero one by interpolation through x ↦ det N(x).
    let mut rng = random::seeded(70);
    let det_at = |x: &DVector<f64>| -> f64 { n.eval(x).unwrap().determinant() };
    let x = random::normal_vector(&mut rng, 4);
    let y = random::normal_vector(&mut rng, 4);
    let f: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&t| det_at(&(&x + &y * t))).collect();
    // fourth and third differences vanish, second does not
    let d3 = f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0];
    let d2 = f[2] - 2.0 * f[1] + f[0];
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(d3.abs() < 1e-9 * scale && d2.abs() > 1e-6 * scale, "det along a line: {f:?}");
    let homog = det_at(&(&x * 3.0)) / det_at(&x);
    ensure!((homog - 9.0).abs() < 1e-9, "det not homogeneous of degree 2 ({homog})");

    let samples = ok(critical::sample_critical_points(&prob, 50, 1), "sample")?;
    for s in &samples {
        let m = ok(critical::critical_membership(&prob, &s.point, MEMBERSHIP_TOL), "membership")?;
        ensure!(m.is_member, "sample off the locus");
        let d = ok(critical::local_dimension(&prob, &s.point), "local dim")?;
        ensure!(d == 2, "local dimension {d}");
    }
    for q in prob.q() {
        let c = null_vector(q.matrix());
        let m = ok(critical::critical_membership(&prob, &c, MEMBERSHIP_TOL), "center")?;
        ensure!(m.is_member, "a Q center fails membership");
    }

    let bordiga = ok(CriticalProblem::sample(4, &[2, 2, 2], 8), "bordiga")?;
    let nb = bordiga.n_matrix();
    ensure!((nb.rows(), nb.cols()) == (4, 3), "Bordiga N is {}×{}", nb.rows(), nb.cols());
    let bs = ok(critical::sample_critical_points(&bordiga, 20, 2), "bordiga sample")?;
    for s in &bs {
        let d = ok(critical::local_dimension(&bordiga, &s.point), "bordiga dim")?;
        ensure!(d == 2, "Bordiga local dimension {d}");
    }

    for (nv, k, h, want) in [
        (2, 3, vec![2, 2], (2, 2)),
        (3, 4, vec![2, 2, 2], (2, 6)),
        (4, 3, vec![1, 1, 1, 1], (2, 4)),
    ] {
        let got = (
            ok(critical::expected_dimension(nv, k, &h), "dim")?,
            ok(critical::expected_degree(nv, k, &h), "degree")?,
        );
        ensure!(got == (want.0 as i64, want.1 as u64), "({nv},{k},{h:?}): {got:?}");
    }
    Ok("quadric N 2×2, 50 samples dim 2, centers critical, Bordiga N 4×3 dim 2, (2,2) (2,6) (2,4)".into())
}

fn c7_unified() -> Check {
    let prob = ok(CriticalProblem::sample(3, &[2, 2], 9), "problem")?;
    let samples = ok(critical::sample_critical_points(&prob, 30, 3), "sample")?;
    for s in &samples {
        let y = ok(critical::conjugate_point(&prob, &s.point), "conjugate")?;
        ensure!(ok(critical::unified_membership(&prob, &s.point, &y, MEMBERSHIP_TOL), "unified")?, "pair fails");
        for (a, b) in [(1e-3, 7.0), (-250.0, 0.02), (3.5, -1e4)] {
            let m = ok(critical::unified_membership(&prob, &(&s.point * a), &(&y * b), MEMBERSHIP_TOL), "unified")?;
            ensure!(m, "rescaling ({a}, {b}) breaks membership");
        }
    }
    Ok("30 conjugate pairs pass, rescaling invariant".into())
}

fn c8_instability() -> Check {
    let cfg = ok(ExperimentConfig::two_view_default(0), "config")?;
    ensure!(cfg.sigmas == instability::DEFAULT_SIGMAS && cfg.trials_per_sigma == 200, "config differs");
    ensure!(cfg.far_threshold == 0.1, "threshold {}", cfg.far_threshold);
    let records = ok(instability::run_experiment(&cfg), "run")?;
    let again = ok(instability::run_experiment(&cfg), "rerun")?;
    ensure!(records == again, "not deterministic");
    let rows = ok(instability::summarize(&records), "summary")?;
    ensure!(rows.iter().all(|r| r.n == 200), "trial counts");
    let tr = instability::trend(&rows);
    let fracs: Vec<String> = rows.iter().map(|r| format!("{}", r.far_fraction)).collect();
    ensure!(tr.holds(), "far fractions {fracs:?}, {tr:?}");
    Ok(format!(
        "far fractions [{}], inversions {}, spearman {:.3}",
        fracs.join(", "),
        tr.inversions,
        tr.spearman
    ))
}

fn c9_embeddings() -> Check {
    let mut rng = random::seeded(99);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x0 = [random::normal(&mut rng), random::normal(&mut rng), random::normal(&mut rng)];
        let t = random::normal(&mut rng);
        let p_t = random::normal_matrix(&mut rng, 3, 4);
        let d = random::normal_vector(&mut rng, 3).normalize();
        let model = MotionModel::Parallel { direction: [d[0], d[1], d[2]] };
        let motion = Motion::Parallel { speed: random::normal(&mut rng) };
        let v = random::normal_vector(&mut rng, 3);
        let general = Motion::General { velocity: [v[0], v[1], v[2]] };
        for (motion, model) in [(motion, model), (general, MotionModel::General)] {
            let lhs = &p_t * ok(multiview::moving_point(x0, &motion, &model, t), "moving point")?;
            let cam: Camera = ok(multiview::embed_motion_camera(&p_t, t, &model), "camera")?;
            let rhs = cam.matrix() * multiview::embed_linear_motion(x0, &motion);
            let e = rel_diff(&lhs, &rhs);
            ensure!(e <= 1e-12, "relative error {e:e}");
            worst = worst.max(e);
        }
    }
    Ok(format!("100 points × 2 models, max relative error {worst:.1e}"))
}

fn c10_dimension() -> Check {
    let d = ok(grassmann::variety_dimension(3, &[2, 2]), "formula")?;
    // det = 0 cuts a hypersurface in P(3×3 matrices) = P^8
    let hypersurface = 3 * 3 - 1 - 1;
    ensure!(d == hypersurface, "formula {d}, hypersurface {hypersurface}");
    let cams = ok(multiview::sample_general_cameras(3, &[2, 2], 1), "sample")?;
    let p = ok(Profile::new(vec![2, 2], 3, &[2, 2]), "profile")?;
    let r = ok(grassmann::tensor_map_rank(&cams, &p), "map rank")?;
    ensure!(r as i64 - 1 == d, "tensor map rank {r}");
    Ok(format!("formula {d} = hypersurface {hypersurface}, tangent rank {r}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Duration); 10] = [
        ("1 fundamental matrix", c1_fundamental, Duration::from_secs(5)),
        ("2 bifocal rank formula", c2_bifocal_grid, Duration::from_secs(30)),
        ("3 trifocal ranks", c3_trifocal_ranks, Duration::from_secs(120)),
        ("4 core extraction", c4_core, Duration::from_secs(30)),
        ("5 reconstruction", c5_reconstruction, Duration::from_secs(60)),
        ("6 critical loci", c6_critical, Duration::from_secs(120)),
        ("7 unified locus", c7_unified, Duration::from_secs(30)),
        ("8 instability", c8_instability, Duration::from_secs(300)),
        ("9 dynamic embeddings", c9_embeddings, Duration::from_secs(1)),
        ("10 variety dimension", c10_dimension, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > budget => Err(format!("{msg}; over budget ({:.2?} > {budget:?})", took)),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS  {name} ({took:.2?}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name} ({took:.2?}): {msg}");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
