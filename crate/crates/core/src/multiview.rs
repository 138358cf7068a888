//! Cameras, scenes, profiles and scene homographies for linear projections
//! `P^k ⇢ P^h`, plus the embeddings that turn linearly moving points in 3D
//! into static points of a higher-dimensional scene.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Svd, RANK_TOL};
use crate::random;

/// A full-rank `(h+1) × (k+1)` matrix representing `P^k ⇢ P^h`, `h < k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    k: usize,
    h: usize,
    matrix: DMatrix<f64>,
}

impl Camera {
    pub fn new(matrix: DMatrix<f64>) -> Result<Camera> {
        let (rows, cols) = matrix.shape();
        if rows == 0 || cols < 2 {
            return Err(Error::InvalidInput(format!(
                "camera of shape {rows}×{cols}"
            )));
        }
        let (h, k) = (rows - 1, cols - 1);
        if h >= k {
            return Err(Error::InvalidInput(format!(
                "camera target dimension h = {h} must be below k = {k}"
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("camera has non-finite entries".into()));
        }
        let rank = linalg::numerical_rank(&matrix, RANK_TOL);
        if rank != h + 1 {
            return Err(Error::RankDeficient(format!(
                "camera has rank {rank}, expected {}",
                h + 1
            )));
        }
        Ok(Camera { k, h, matrix })
    }

    /// Like [`Camera::new`] but also checks the declared dimensions.
    pub fn with_dims(k: usize, h: usize, matrix: DMatrix<f64>) -> Result<Camera> {
        if matrix.shape() != (h + 1, k + 1) {
            return Err(Error::ShapeMismatch(format!(
                "declared k = {k}, h = {h} but matrix is {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Camera::new(matrix)
    }

    /// The standard camera `[I_{h+1} | 0]`.
    pub fn standard(k: usize, h: usize) -> Camera {
        let mut m = DMatrix::zeros(h + 1, k + 1);
        for i in 0..=h {
            m[(i, i)] = 1.0;
        }
        Camera { k, h, matrix: m }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Orthonormal basis (columns) of the projection center, a
    /// `(k−h)`-dimensional subspace of `R^{k+1}`.
    pub fn center(&self) -> DMatrix<f64> {
        let svd = Svd::new(&self.matrix);
        let n = self.k + 1;
        let r = self.h + 1;
        svd.v.columns(r, n - r).into_owned()
    }

    /// Image of a scene point; the result is not normalized.
    pub fn project(&self, point: &DVector<f64>) -> Result<DVector<f64>> {
        if point.len() != self.k + 1 {
            return Err(Error::ShapeMismatch(format!(
                "point of length {} for a camera on P^{}",
                point.len(),
                self.k
            )));
        }
        let pn = point.norm();
        if pn == 0.0 {
            return Err(Error::InvalidInput("zero point".into()));
        }
        let image = &self.matrix * point;
        let scale = self.matrix.norm() * pn;
        if image.norm() <= 1e-14 * scale {
            return Err(Error::PointAtCenter);
        }
        Ok(image)
    }

    /// `P · H` for a scene homography `H`.
    pub fn transformed(&self, h: &Homography) -> Camera {
        Camera {
            k: self.k,
            h: self.h,
            matrix: &self.matrix * h.matrix(),
        }
    }
}

/// Scene points in homogeneous coordinates of `P^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    k: usize,
    points: Vec<DVector<f64>>,
}

impl Scene {
    pub fn new(k: usize, points: Vec<DVector<f64>>) -> Result<Scene> {
        for (i, p) in points.iter().enumerate() {
            if p.len() != k + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "point {i} has length {}, expected {}",
                    p.len(),
                    k + 1
                )));
            }
            if p.norm() == 0.0 {
                return Err(Error::InvalidInput(format!("point {i} is zero")));
            }
        }
        Ok(Scene { k, points })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Codimensions `(α_1, …, α_n)` of the view subspaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    alphas: Vec<usize>,
}

impl Profile {
    /// Validates `Σ α_j = k+1` and `1 ≤ α_j ≤ h_j`.
    pub fn new(alphas: Vec<usize>, k: usize, h_list: &[usize]) -> Result<Profile> {
        if alphas.len() != h_list.len() {
            return Err(Error::InvalidProfile(format!(
                "{} codimensions for {} views",
                alphas.len(),
                h_list.len()
            )));
        }
        let sum: usize = alphas.iter().sum();
        if sum != k + 1 {
            return Err(Error::InvalidProfile(format!(
                "codimensions sum to {sum}, expected k+1 = {}",
                k + 1
            )));
        }
        for (j, (&a, &h)) in alphas.iter().zip(h_list).enumerate() {
            if a < 1 || a > h {
                return Err(Error::InvalidProfile(format!(
                    "alpha_{} = {a} outside 1..={h}",
                    j + 1
                )));
            }
        }
        Ok(Profile { alphas })
    }

    pub fn alphas(&self) -> &[usize] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Invertible `(k+1) × (k+1)` scene transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    matrix: DMatrix<f64>,
}

impl Homography {
    pub fn new(matrix: DMatrix<f64>) -> Result<Homography> {
        Homography::with_tolerance(matrix, RANK_TOL)
    }

    pub fn with_tolerance(matrix: DMatrix<f64>, rel_tol: f64) -> Result<Homography> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::ShapeMismatch("homography must be square".into()));
        }
        if linalg::inverse_condition(&matrix) <= rel_tol {
            return Err(Error::RankDeficient("homography is not invertible".into()));
        }
        Ok(Homography { matrix })
    }

    pub fn identity(k: usize) -> Homography {
        Homography {
            matrix: DMatrix::identity(k + 1, k + 1),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Homography {
        Homography {
            matrix: self
                .matrix
                .clone()
                .try_inverse()
                .expect("checked invertible at construction"),
        }
    }
}

/// Shape of the trajectories of a dynamic 3D scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionModel {
    /// All points move along parallel lines with the given unit direction.
    Parallel { direction: [f64; 3] },
    /// Unrestricted constant velocities.
    General,
}

/// Motion of one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    /// Signed speed `λ` along the common direction.
    Parallel {
        speed: f64,
    },
    General {
        velocity: [f64; 3],
    },
}

fn check_direction(direction: &[f64; 3]) -> Result<()> {
    let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "trajectory direction must be a unit vector (norm {n})"
        )));
    }
    Ok(())
}

/// Static representative of a moving point: `(x,y,z,1,λ)` in `P^4` for
/// parallel trajectories, `(x,y,z,1,dx,dy,dz)` in `P^6` otherwise.
pub fn embed_linear_motion(initial: [f64; 3], motion: &Motion) -> DVector<f64> {
    let [x, y, z] = initial;
    match motion {
        Motion::Parallel { speed } => DVector::from_vec(vec![x, y, z, 1.0, *speed]),
        Motion::General { velocity } => {
            DVector::from_vec(vec![x, y, z, 1.0, velocity[0], velocity[1], velocity[2]])
        }
    }
}

/// Homogeneous position in `P^3` at time `t` of a moving point.
pub fn moving_point(
    initial: [f64; 3],
    motion: &Motion,
    model: &MotionModel,
    t: f64,
) -> Result<DVector<f64>> {
    let v = match (motion, model) {
        (Motion::Parallel { speed }, MotionModel::Parallel { direction }) => {
            check_direction(direction)?;
            [
                speed * direction[0],
                speed * direction[1],
                speed * direction[2],
            ]
        }
        (Motion::General { velocity }, MotionModel::General) => *velocity,
        _ => {
            return Err(Error::InvalidInput(
                "motion does not match the motion model".into(),
            ))
        }
    };
    Ok(DVector::from_vec(vec![
        initial[0] + t * v[0],
        initial[1] + t * v[1],
        initial[2] + t * v[2],
        1.0,
    ]))
}

/// Assemble the `3×5` (parallel) or `3×7` (general) camera acting on
/// embedded points from the `3×4` camera `P(t)` at time `t`.
pub fn embed_motion_camera(p_t: &DMatrix<f64>, t: f64, model: &MotionModel) -> Result<Camera> {
    if p_t.shape() != (3, 4) {
        return Err(Error::ShapeMismatch(format!(
            "base camera must be 3×4, got {}×{}",
            p_t.nrows(),
            p_t.ncols()
        )));
    }
    if linalg::numerical_rank(p_t, RANK_TOL) != 3 {
        return Err(Error::RankDeficient(
            "base camera P(t) is not full rank".into(),
        ));
    }
    let col = |j: usize| p_t.column(j).into_owned();
    let m = match model {
        MotionModel::Parallel { direction } => {
            check_direction(direction)?;
            let fifth = (col(0) * direction[0] + col(1) * direction[1] + col(2) * direction[2]) * t;
            let mut m = DMatrix::zeros(3, 5);
            m.columns_mut(0, 4).copy_from(p_t);
            m.column_mut(4).copy_from(&fifth);
            m
        }
        MotionModel::General => {
            let mut m = DMatrix::zeros(3, 7);
            m.columns_mut(0, 4).copy_from(p_t);
            for j in 0..3 {
                m.column_mut(4 + j).copy_from(&(col(j) * t));
            }
            m
        }
    };
    Camera::new(m)
}

/// Random cameras in general position for `P^k ⇢ P^{h_j}`.
///
/// Entries are standard normal; a draw is rejected unless every camera has
/// full rank and the centers are transversal: for two views the centers are
/// disjoint, for three views every pair and the triple of centers span a
/// space of the generic dimension (with `i ≥ 0` this is exactly "the span of
/// any two centers misses the third"), and for any `n` the common
/// intersection of the centers is empty.
pub fn sample_general_cameras(k: usize, h_list: &[usize], seed: u64) -> Result<Vec<Camera>> {
    if h_list.is_empty() {
        return Err(Error::InvalidInput("no views requested".into()));
    }
    if let Some(&h) = h_list.iter().find(|&&h| h >= k || h == 0) {
        return Err(Error::Infeasible(format!(
            "view dimension {h} must satisfy 1 ≤ h < k = {k}"
        )));
    }
    let codim_sum: usize = h_list.iter().map(|h| h + 1).sum();
    if h_list.len() > 1 && codim_sum < k + 1 {
        return Err(Error::Infeasible(
            "centers always share a common point".into(),
        ));
    }
    if h_list.len() == 2 && h_list[0] + h_list[1] + 1 < k {
        return Err(Error::Infeasible(
            "two centers of these dimensions always meet".into(),
        ));
    }
    let mut rng = random::seeded(seed);
    const ATTEMPTS: usize = 100;
    for _ in 0..ATTEMPTS {
        let mats: Vec<DMatrix<f64>> = h_list
            .iter()
            .map(|&h| random::normal_matrix(&mut rng, h + 1, k + 1))
            .collect();
        let cams: Result<Vec<Camera>> = mats.into_iter().map(Camera::new).collect();
        let Ok(cams) = cams else { continue };
        if centers_in_general_position(&cams) {
            return Ok(cams);
        }
    }
    Err(Error::MaxResampleExceeded(ATTEMPTS))
}

/// Dimension of the sum of the projection centers of `cams` (as vector
/// subspaces of `R^{k+1}`).
pub fn center_span_dim(cams: &[&Camera]) -> usize {
    let centers: Vec<DMatrix<f64>> = cams.iter().map(|c| c.center()).collect();
    let refs: Vec<&DMatrix<f64>> = centers.iter().collect();
    linalg::numerical_rank(&linalg::hstack(&refs), RANK_TOL)
}

/// Whether the projection centers of a camera list have empty common
/// intersection (the stacked matrix has rank `k+1`).
pub fn centers_have_empty_intersection(cams: &[Camera]) -> bool {
    let Some(first) = cams.first() else {
        return true;
    };
    let refs: Vec<&DMatrix<f64>> = cams.iter().map(|c| c.matrix()).collect();
    linalg::numerical_rank(&linalg::vstack(&refs), RANK_TOL) == first.k() + 1
}

fn transversal(cams: &[&Camera]) -> bool {
    let k = cams[0].k();
    let dims: usize = cams.iter().map(|c| c.k() - c.h()).sum();
    center_span_dim(cams) == dims.min(k + 1)
}

fn centers_in_general_position(cams: &[Camera]) -> bool {
    if cams.len() > 1 && !centers_have_empty_intersection(cams) {
        return false;
    }
    match cams.len() {
        2 => transversal(&[&cams[0], &cams[1]]),
        3 => {
            transversal(&[&cams[0], &cams[1]])
                && transversal(&[&cams[0], &cams[2]])
                && transversal(&[&cams[1], &cams[2]])
                && transversal(&[&cams[0], &cams[1], &cams[2]])
        }
        _ => true,
    }
}

/// Certificate that `A_j · H = λ_j · B_j` for every view.
#[derive(Debug, Clone)]
pub struct ProjectiveEquivalence {
    pub homography: Homography,
    pub scales: Vec<f64>,
    /// `‖(A_j H − λ_j B_j)_j‖ / ‖(λ_j B_j)_j‖` with unit-norm cameras.
    pub residual: f64,
}

/// Look for a homography `H` and scales `λ_j` with `A_j H ≈ λ_j B_j`.
///
/// The unknowns `(H, λ)` are the smallest right singular vector of one
/// homogeneous linear system built from unit-norm cameras. Returns `None` when
/// the shapes differ, when the relative residual is not below `tol`, or when
/// the minimizer is degenerate (singular `H`).
pub fn projectively_equivalent(
    a: &[Camera],
    b: &[Camera],
    tol: f64,
) -> Option<ProjectiveEquivalence> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let k = a[0].k();
    if a.iter()
        .zip(b)
        .any(|(x, y)| x.k() != k || y.k() != k || x.h() != y.h())
    {
        return None;
    }
    let n1 = k + 1;
    let unknowns = n1 * n1 + a.len();
    let rows: usize = a.iter().map(|c| (c.h() + 1) * n1).sum();
    let mut sys = DMatrix::zeros(rows, unknowns);
    let mut row = 0;
    for (j, (ca, cb)) in a.iter().zip(b).enumerate() {
        let am = ca.matrix() / ca.matrix().norm();
        let bm = cb.matrix() / cb.matrix().norm();
        for r in 0..=ca.h() {
            for c in 0..n1 {
                for s in 0..n1 {
                    sys[(row, s * n1 + c)] = am[(r, s)];
                }
                sys[(row, n1 * n1 + j)] = -bm[(r, c)];
                row += 1;
            }
        }
    }
    let svd = Svd::new(&sys);
    let z = svd.smallest_right_vector();
    let scales: Vec<f64> = (0..a.len()).map(|j| z[n1 * n1 + j]).collect();
    let scale_norm = scales.iter().map(|s| s * s).sum::<f64>().sqrt();
    if scale_norm <= 1e-12 {
        return None;
    }
    let residual = (&sys * &z).norm() / scale_norm;
    if !(residual < tol) {
        return None;
    }
    let hm = DMatrix::from_fn(n1, n1, |r, c| z[r * n1 + c]);
    let homography = Homography::new(hm).ok()?;
    // report scales against the caller's (unnormalized) cameras
    let scales = scales
        .iter()
        .zip(a.iter().zip(b))
        .map(|(s, (ca, cb))| s * ca.matrix().norm() / cb.matrix().norm())
        .collect();
    Some(ProjectiveEquivalence {
        homography,
        scales,
        residual,
    })
}
