//! Projective reconstruction from corresponding subspaces: estimate the
//! Grassmann tensor, recover cameras from it, triangulate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grassmann::{self, GrassmannTensor, SubspaceBasis};
use crate::linalg::{self, Svd};
use crate::multiview::{Camera, Profile, Scene};
use crate::random;
use crate::dense::DenseTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceTuple {
    pub subspaces: Vec<SubspaceBasis>,
}

/// For each scene point and each of `per_point` draws, a tuple whose view-`j`
/// subspace is spanned by the image `P_j X` and `h_j − α_j` random vectors.
pub fn make_correspondences(
    cameras: &[Camera],
    scene: &Scene,
    profile: &Profile,
    per_point: usize,
    seed: u64,
) -> Result<Vec<CorrespondenceTuple>> {
    let images: Vec<Vec<DVector<f64>>> = scene
        .points()
        .iter()
        .map(|x| cameras.iter().map(|c| c.project(x)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    tuples_from_images(&images, profile, per_point, seed)
}

/// Same as [`make_correspondences`] but from given images, one list of view
/// images per scene point.
pub fn tuples_from_images(
    images: &[Vec<DVector<f64>>],
    profile: &Profile,
    per_point: usize,
    seed: u64,
) -> Result<Vec<CorrespondenceTuple>> {
    let mut rng = random::seeded(seed);
    let mut out = Vec::with_capacity(images.len() * per_point);
    for views in images {
        if views.len() != profile.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for a profile of {} views",
                views.len(),
                profile.len()
            )));
        }
        for _ in 0..per_point {
            let subspaces = views
                .iter()
                .zip(profile.alphas())
                .map(|(img, &alpha)| {
                    let h = img.len() - 1;
                    let extra = h.checked_sub(alpha).ok_or_else(|| {
                        Error::InvalidProfile(format!("α = {alpha} exceeds h = {h}"))
                    })?;
                    let norm = img.norm();
                    if !(norm > 0.0) {
                        return Err(Error::InvalidInput("zero image".into()));
                    }
                    loop {
                        let mut b = DMatrix::zeros(h + 1, extra + 1);
                        b.set_column(0, &(img / norm));
                        for c in 1..=extra {
                            b.set_column(c, &random::normal_vector(&mut rng, h + 1));
                        }
                        if let Ok(s) = SubspaceBasis::new(alpha, b) {
                            break Ok(s);
                        }
                    }
                })
                .collect::<Result<_>>()?;
            out.push(CorrespondenceTuple { subspaces });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationStatus {
    Ok,
    IllConditioned,
}

#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub tensor: GrassmannTensor,
    /// Smallest singular value of the constraint matrix.
    pub residual: f64,
    pub constraint_count: usize,
    /// Second-smallest over smallest singular value (the latter floored at
    /// `1e-12 σ_max`).
    pub condition: f64,
    pub status: EstimationStatus,
}

pub const ILL_CONDITIONED_BELOW: f64 = 10.0;

/// Linear estimate of the tensor: one homogeneous equation per tuple, solved
/// by the smallest right singular vector.
pub fn estimate_tensor(
    tuples: &[CorrespondenceTuple],
    k: usize,
    h_list: &[usize],
    profile: &Profile,
) -> Result<EstimationReport> {
    Profile::new(profile.alphas().to_vec(), k, h_list)?;
    let dims = grassmann::axis_dims(h_list, profile);
    let unknowns: usize = dims.iter().product();
    if tuples.len() + 1 < unknowns {
        return Err(Error::Underdetermined {
            have: tuples.len(),
            need: unknowns - 1,
        });
    }
    let mut sys = DMatrix::zeros(tuples.len(), unknowns);
    for (r, tup) in tuples.iter().enumerate() {
        let shapes_ok = tup.subspaces.len() == h_list.len()
            && tup
                .subspaces
                .iter()
                .zip(h_list.iter().zip(profile.alphas()))
                .all(|(s, (&h, &a))| s.h() == h && s.alpha() == a);
        if !shapes_ok {
            return Err(Error::ShapeMismatch(format!("tuple {r} does not match the profile")));
        }
        let row = grassmann::constraint_coefficients(h_list, profile, &tup.subspaces, true);
        for (c, v) in row.into_iter().enumerate() {
            sys[(r, c)] = v;
        }
    }
    let svd = Svd::new(&sys);
    let smax = svd.max_singular_value();
    let s0 = svd.smallest(0);
    let s1 = svd.smallest(1);
    let condition = s1 / s0.max(1e-12 * smax);
    let v = svd.smallest_right_vector();
    let entries = DenseTensor::from_vec(&dims, v.as_slice().to_vec())?;
    let tensor = GrassmannTensor::from_entries(k, h_list.to_vec(), profile.clone(), entries)?.normalized()?;
    Ok(EstimationReport {
        tensor,
        residual: s0,
        constraint_count: tuples.len(),
        condition,
        status: if condition < ILL_CONDITIONED_BELOW {
            EstimationStatus::IllConditioned
        } else {
            EstimationStatus::Ok
        },
    })
}

#[derive(Debug, Clone)]
pub struct RecoveryOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            restarts: 10,
            seed: 0,
            max_iterations: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CameraRecovery {
    pub cameras: Vec<Camera>,
    /// `tensor_distance` between the tensor of the recovered cameras and the
    /// input.
    pub distance: f64,
    pub restart: usize,
}

/// Stacked-row data of every tensor entry, shared by all LM iterations.
struct EntryLayout {
    rows: Vec<Vec<usize>>,
    signs: Vec<f64>,
}

fn entry_layout(h_list: &[usize], profile: &Profile) -> EntryLayout {
    let dims = grassmann::axis_dims(h_list, profile);
    let subsets: Vec<Vec<Vec<usize>>> = h_list
        .iter()
        .zip(profile.alphas())
        .map(|(&h, &a)| linalg::subsets(h + 1, a))
        .collect();
    let mut offsets = vec![0];
    for &h in h_list {
        offsets.push(offsets.last().unwrap() + h + 1);
    }
    let shape = DenseTensor::zeros(&dims);
    let mut idx = vec![0; dims.len()];
    let mut rows = Vec::with_capacity(shape.len());
    let mut signs = Vec::with_capacity(shape.len());
    for flat in 0..shape.len() {
        shape.unravel_into(flat, &mut idx);
        let r: Vec<usize> = idx
            .iter()
            .enumerate()
            .flat_map(|(j, &p)| subsets[j][p].iter().map(|x| x + offsets[j]).collect::<Vec<_>>())
            .collect();
        let s: usize = r.iter().map(|x| x + 1).sum::<usize>() + r.len() * (r.len() + 1) / 2;
        signs.push(if s % 2 == 0 { 1.0 } else { -1.0 });
        rows.push(r);
    }
    EntryLayout { rows, signs }
}

/// Tensor entries of the stacked matrix and their derivatives with respect
/// to the stacked entries from row `free_from` on (row-major).
fn entries_and_jacobian(stacked: &DMatrix<f64>, layout: &EntryLayout, free_from: usize) -> (DVector<f64>, DMatrix<f64>) {
    let cols = stacked.ncols();
    let nparam = (stacked.nrows() - free_from) * cols;
    let mut t = DVector::zeros(layout.rows.len());
    let mut jac = DMatrix::zeros(layout.rows.len(), nparam);
    for (e, (rows, &sign)) in layout.rows.iter().zip(&layout.signs).enumerate() {
        let sub = linalg::select_rows(stacked, rows);
        t[e] = sign * linalg::det(&sub);
        let cof = linalg::cofactors(&sub);
        for (q, &g) in rows.iter().enumerate() {
            if g < free_from {
                continue;
            }
            for c in 0..cols {
                jac[(e, (g - free_from) * cols + c)] = sign * cof[(q, c)];
            }
        }
    }
    (t, jac)
}

fn normalized_residual(t: &DVector<f64>, target: &DVector<f64>) -> (DVector<f64>, f64) {
    let u = t / t.norm();
    let s = if u.dot(target) < 0.0 { -1.0 } else { 1.0 };
    let r = &u - target * s;
    let n = r.norm();
    (r, n)
}

fn split_cameras(stacked: &DMatrix<f64>, h_list: &[usize]) -> Result<Vec<Camera>> {
    let mut out = Vec::with_capacity(h_list.len());
    let mut r = 0;
    for &h in h_list {
        out.push(Camera::new(stacked.rows(r, h + 1).into_owned())?);
        r += h + 1;
    }
    Ok(out)
}

fn levenberg_marquardt(
    target: &DVector<f64>,
    layout: &EntryLayout,
    h_list: &[usize],
    k: usize,
    seed: u64,
    max_iterations: usize,
) -> DMatrix<f64> {
    let total: usize = h_list.iter().map(|h| h + 1).sum();
    let free_from = h_list[0] + 1;
    let mut rng = random::seeded(seed);
    let mut stacked = DMatrix::zeros(total, k + 1);
    for d in 0..free_from {
        stacked[(d, d)] = 1.0;
    }
    let free = random::normal_matrix(&mut rng, total - free_from, k + 1);
    stacked.rows_mut(free_from, total - free_from).copy_from(&free);
    let (t, _) = entries_and_jacobian(&stacked, layout, free_from);
    if t.norm() == 0.0 {
        return stacked;
    }
    let mut cost = normalized_residual(&t, target).1;
    let mut lambda = 1e-3;
    for _ in 0..max_iterations {
        if cost < 1e-15 {
            break;
        }
        let (t, jac) = entries_and_jacobian(&stacked, layout, free_from);
        let n = t.norm();
        let u = &t / n;
        let (r, _) = normalized_residual(&t, target);
        // derivative of t/‖t‖
        let ju = (&jac - &u * (u.transpose() * &jac)) / n;
        let jtj = ju.transpose() * &ju;
        let jtr = ju.transpose() * &r;
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            let diag_max = jtj.diagonal().max();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * (jtj[(d, d)] + 1e-6 * diag_max);
            }
            let Some(ch) = a.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = ch.solve(&jtr);
            let mut trial = stacked.clone();
            for (p, d) in step.iter().enumerate() {
                let (row, col) = (free_from + p / (k + 1), p % (k + 1));
                trial[(row, col)] -= d;
            }
            let (tt, _) = entries_and_jacobian(&trial, layout, free_from);
            let tn = tt.norm();
            if tn > 0.0 && tn.is_finite() {
                let c = normalized_residual(&tt, target).1;
                if c < cost {
                    stacked = trial;
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
        // keep free cameras at unit scale; the tensor direction is unchanged
        let mut r = free_from;
        for &h in &h_list[1..] {
            let mut block = stacked.rows_mut(r, h + 1);
            let bn = block.norm();
            block /= bn;
            r += h + 1;
        }
    }
    stacked
}

/// Cameras reproducing `tensor`, with camera 1 fixed to `[I | 0]`.
pub fn recover_cameras(tensor: &GrassmannTensor, opts: &RecoveryOptions) -> Result<CameraRecovery> {
    let h_list = tensor.h_list().to_vec();
    let k = tensor.k();
    if h_list.iter().all(|&h| h == 1) {
        return Err(Error::AmbiguousReconstruction);
    }
    let target = DVector::from_column_slice(tensor.entries().normalized()?.data());
    let layout = entry_layout(&h_list, tensor.profile());
    let runs: Vec<(usize, f64, DMatrix<f64>)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let seed = random::derive_seed(opts.seed, &[restart as u64]);
            let stacked = levenberg_marquardt(&target, &layout, &h_list, k, seed, opts.max_iterations);
            let (t, _) = entries_and_jacobian(&stacked, &layout, stacked.nrows());
            let distance = if t.norm() > 0.0 && t.iter().all(|x| x.is_finite()) {
                let c = (t.dot(&target).abs() / t.norm()).min(1.0);
                1.0 - c
            } else {
                f64::INFINITY
            };
            (restart, distance, stacked)
        })
        .collect();
    let chosen = runs
        .iter()
        .find(|(_, d, _)| *d < 1e-10)
        .or_else(|| runs.iter().min_by(|a, b| a.1.total_cmp(&b.1)))
        .expect("at least one restart");
    let (restart, distance, stacked) = chosen.clone();
    if !(distance <= 1e-6) {
        return Err(Error::ConvergenceFailure(distance));
    }
    Ok(CameraRecovery {
        cameras: split_cameras(&stacked, &h_list)?,
        distance,
        restart,
    })
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub point: DVector<f64>,
    /// `σ_min / σ_max` of the stacked system.
    pub residual: f64,
}

/// Solve `[P_j | −S_j]·(X, v_1, …, v_n) = 0` in the least-squares sense.
pub fn triangulate(cameras: &[Camera], tuple: &CorrespondenceTuple) -> Result<Triangulation> {
    let sys = grassmann::system_matrix(cameras, &tuple.subspaces)?;
    let svd = Svd::new(&sys);
    let smax = svd.max_singular_value();
    if smax == 0.0 {
        return Err(Error::DegenerateConfiguration("zero system".into()));
    }
    let (s0, s1) = (svd.smallest(0), svd.smallest(1));
    if s1 - s0 < 1e-8 * smax {
        return Err(Error::DegenerateConfiguration(format!(
            "two smallest singular values {s0:.3e}, {s1:.3e} coincide"
        )));
    }
    let v = svd.smallest_right_vector();
    let k1 = cameras[0].k() + 1;
    let point = linalg::normalize_homogeneous(&v.rows(0, k1).into_owned());
    Ok(Triangulation {
        point,
        residual: s0 / smax,
    })
}

/// Largest projective angle between the images of `point` under `cameras`
/// and the reference image points.
pub fn reprojection_error(cameras: &[Camera], point: &DVector<f64>, images: &[DVector<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (cam, img) in cameras.iter().zip(images) {
        worst = worst.max(linalg::projective_angle(&cam.project(point)?, img));
    }
    Ok(worst)
}
