//! Critical loci of projective reconstruction as determinantal varieties:
//! the matrices `M` and `N`, numerical membership, sampling, local
//! dimension, conjugate points and the unified locus.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Svd, RANK_TOL};
use crate::multiview::{self, Camera};
use crate::random;

/// Default relative tolerance for rank-drop decisions.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// A matrix whose entries are affine forms `c + Σ x_i l_i` in the
/// homogeneous coordinates of `P^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFormMatrix {
    constant: DMatrix<f64>,
    linear: Vec<DMatrix<f64>>,
}

impl LinearFormMatrix {
    pub fn new(constant: DMatrix<f64>, linear: Vec<DMatrix<f64>>) -> Result<LinearFormMatrix> {
        if linear.is_empty() {
            return Err(Error::InvalidInput("no variables".into()));
        }
        if linear.iter().any(|l| l.shape() != constant.shape()) {
            return Err(Error::ShapeMismatch("coefficient matrices differ in shape".into()));
        }
        Ok(LinearFormMatrix { constant, linear })
    }

    pub fn zeros(rows: usize, cols: usize, vars: usize) -> LinearFormMatrix {
        LinearFormMatrix {
            constant: DMatrix::zeros(rows, cols),
            linear: vec![DMatrix::zeros(rows, cols); vars],
        }
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn vars(&self) -> usize {
        self.linear.len()
    }

    /// Degree-0 part.
    pub fn constant(&self) -> &DMatrix<f64> {
        &self.constant
    }

    /// Coefficient matrix of the variable `x_i`.
    pub fn linear(&self, i: usize) -> &DMatrix<f64> {
        &self.linear[i]
    }

    /// Coefficients `(l_0, …, l_k)` of entry `(r, c)`.
    pub fn coefficients(&self, r: usize, c: usize) -> DVector<f64> {
        DVector::from_iterator(self.vars(), self.linear.iter().map(|l| l[(r, c)]))
    }

    /// True when every entry is a form of degree exactly one or zero, so that
    /// evaluation is linear in `x`.
    pub fn is_linear(&self) -> bool {
        self.constant.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.vars() {
            return Err(Error::ShapeMismatch(format!(
                "point of length {} for forms in {} variables",
                x.len(),
                self.vars()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (xi, l) in x.iter().zip(&self.linear) {
            out += l * *xi;
        }
        out
    }

    fn eval_complex(&self, x: &[Complex<f64>]) -> DMatrix<Complex<f64>> {
        let mut out = self.constant.map(|c| Complex::new(c, 0.0));
        for (xi, l) in x.iter().zip(&self.linear) {
            out += l.map(|c| *xi * c);
        }
        out
    }

    fn coefficient_norm(&self) -> f64 {
        self.linear.iter().map(|l| l.norm_squared()).sum::<f64>().sqrt()
    }
}

/// Two camera lists on `P^k` with matching view dimensions.
#[derive(Debug, Clone)]
pub struct CriticalProblem {
    p: Vec<Camera>,
    q: Vec<Camera>,
    k: usize,
    h_list: Vec<usize>,
    n_x: LinearFormMatrix,
    n_y: LinearFormMatrix,
}

impl CriticalProblem {
    pub fn new(p: Vec<Camera>, q: Vec<Camera>) -> Result<CriticalProblem> {
        let Some(first) = p.first() else {
            return Err(Error::EmptyInput);
        };
        let k = first.k();
        let h_list: Vec<usize> = p.iter().map(|c| c.h()).collect();
        if p.len() != q.len()
            || p.iter().chain(&q).any(|c| c.k() != k)
            || q.iter().map(|c| c.h()).ne(h_list.iter().copied())
        {
            return Err(Error::ShapeMismatch(
                "both lists need the same scene and view dimensions".into(),
            ));
        }
        for (name, list) in [("P", &p), ("Q", &q)] {
            if !multiview::centers_have_empty_intersection(list) {
                return Err(Error::GeneralityViolated(format!(
                    "the centers of the {name} list share a point"
                )));
            }
        }
        let n_x = reduce_to_n(&m_matrix(&p, &q, k), k)?.matrix;
        let n_y = reduce_to_n(&m_matrix(&q, &p, k), k)?.matrix;
        Ok(CriticalProblem { p, q, k, h_list, n_x, n_y })
    }

    /// Both lists drawn by [`multiview::sample_general_cameras`].
    pub fn sample(k: usize, h_list: &[usize], seed: u64) -> Result<CriticalProblem> {
        let p = multiview::sample_general_cameras(k, h_list, random::derive_seed(seed, &[0]))?;
        let q = multiview::sample_general_cameras(k, h_list, random::derive_seed(seed, &[1]))?;
        CriticalProblem::new(p, q)
    }

    pub fn p(&self) -> &[Camera] {
        &self.p
    }

    pub fn q(&self) -> &[Camera] {
        &self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h_list(&self) -> &[usize] {
        &self.h_list
    }

    pub fn views(&self) -> usize {
        self.p.len()
    }

    /// The reduced matrix `N` of the locus of `X`.
    pub fn n_matrix(&self) -> &LinearFormMatrix {
        &self.n_x
    }

    /// The problem with the roles of the two lists exchanged; its locus is
    /// the one of the conjugate points `Y`.
    pub fn swapped(&self) -> CriticalProblem {
        CriticalProblem {
            p: self.q.clone(),
            q: self.p.clone(),
            k: self.k,
            h_list: self.h_list.clone(),
            n_x: self.n_y.clone(),
            n_y: self.n_x.clone(),
        }
    }
}

fn m_matrix(p: &[Camera], q: &[Camera], k: usize) -> LinearFormMatrix {
    let n = p.len();
    let rows: usize = p.iter().map(|c| c.h() + 1).sum();
    let mut m = LinearFormMatrix::zeros(rows, k + 1 + n, k + 1);
    let mut r0 = 0;
    for (j, (pj, qj)) in p.iter().zip(q).enumerate() {
        let hj = pj.h() + 1;
        m.constant.view_mut((r0, 0), (hj, k + 1)).copy_from(pj.matrix());
        for (i, l) in m.linear.iter_mut().enumerate() {
            l.view_mut((r0, k + 1 + j), (hj, 1)).copy_from(&qj.matrix().column(i));
        }
        r0 += hj;
    }
    m
}

/// The `(n + Σh) × (n + k + 1)` matrix `[P_j | Q_j(X)]` with block-diagonal
/// linear columns.
pub fn build_m_matrix(prob: &CriticalProblem) -> LinearFormMatrix {
    m_matrix(&prob.p, &prob.q, prob.k)
}

/// Result of eliminating the constant columns of `M`.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// `N = B − A C⁻¹ D`.
    pub matrix: LinearFormMatrix,
    /// Rows of `M` forming the invertible block `C`, in pivot order.
    pub c_rows: Vec<usize>,
    /// Remaining rows of `M`, in increasing order; row `i` of `N` comes from
    /// `a_rows[i]`.
    pub a_rows: Vec<usize>,
}

/// Reduces `M` (constant columns first, `k + 1` of them) to `N`. The rows of
/// `C` are chosen by pivoted Gram–Schmidt on the constant block.
pub fn reduce_to_n(m: &LinearFormMatrix, k: usize) -> Result<Reduction> {
    let kc = k + 1;
    if m.vars() != kc || m.cols() <= kc || m.rows() < kc {
        return Err(Error::ShapeMismatch("not a matrix of the form [P | Q(X)]".into()));
    }
    let rows = m.rows();
    let block = m.constant.columns(0, kc).into_owned();
    let mut work = block.clone();
    let scale = block.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut used = vec![false; rows];
    let mut c_rows = Vec::with_capacity(kc);
    for _ in 0..kc {
        let (best, norm) = (0..rows)
            .filter(|&r| !used[r])
            .map(|r| (r, work.row(r).norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::NoInvertibleBlock)?;
        if norm <= RANK_TOL * scale {
            return Err(Error::NoInvertibleBlock);
        }
        used[best] = true;
        c_rows.push(best);
        let u = work.row(best).into_owned() / norm;
        for r in 0..rows {
            if !used[r] {
                let proj = work.row(r).dot(&u);
                let new_row = work.row(r) - &u * proj;
                work.set_row(r, &new_row);
            }
        }
    }
    let a_rows: Vec<usize> = (0..rows).filter(|&r| !used[r]).collect();
    let c = linalg::select_rows(&block, &c_rows);
    let a = linalg::select_rows(&block, &a_rows);
    let c_inv = c.clone().try_inverse().ok_or(Error::NoInvertibleBlock)?;
    let g = a * c_inv;
    let lin_cols = m.cols() - kc;
    let reduce = |full: &DMatrix<f64>| {
        let right = full.columns(kc, lin_cols).into_owned();
        linalg::select_rows(&right, &a_rows) - &g * linalg::select_rows(&right, &c_rows)
    };
    let matrix = LinearFormMatrix {
        constant: reduce(&m.constant),
        linear: m.linear.iter().map(reduce).collect(),
    };
    Ok(Reduction { matrix, c_rows, a_rows })
}

fn bound_check(n: usize, k: usize, h_list: &[usize]) -> Result<usize> {
    if h_list.len() != n || n == 0 {
        return Err(Error::InvalidInput(format!(
            "{n} views but {} view dimensions",
            h_list.len()
        )));
    }
    let sum: usize = h_list.iter().sum();
    if k + 1 > sum {
        return Err(Error::BoundViolated(format!(
            "k + 1 = {} exceeds the sum of view dimensions {sum}",
            k + 1
        )));
    }
    Ok(sum)
}

/// `2k − Σh_i`.
pub fn expected_dimension(n: usize, k: usize, h_list: &[usize]) -> Result<i64> {
    let sum = bound_check(n, k, h_list)?;
    Ok(2 * k as i64 - sum as i64)
}

/// `C(n − k − 1 + Σh_i, n − 1)`.
pub fn expected_degree(n: usize, k: usize, h_list: &[usize]) -> Result<u64> {
    let sum = bound_check(n, k, h_list)?;
    Ok(linalg::binomial(
        n as i64 - k as i64 - 1 + sum as i64,
        n as i64 - 1,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub is_member: bool,
    /// Number of columns minus the numerical rank of `N(X)`.
    pub rank_gap: usize,
}

fn unit(x: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = x.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput("zero or non-finite point".into()));
    }
    Ok(x / norm)
}

fn rank_drop(n: &LinearFormMatrix, x: &DVector<f64>, tol: f64) -> Result<Membership> {
    let value = n.eval(&unit(x)?)?;
    let rank = linalg::numerical_rank(&value, tol);
    let cols = n.cols();
    Ok(Membership {
        is_member: rank < cols,
        rank_gap: cols - rank.min(cols),
    })
}

/// Rank-drop test of `N(X)` at relative tolerance `tol`.
pub fn critical_membership(prob: &CriticalProblem, x: &DVector<f64>, tol: f64) -> Result<Membership> {
    rank_drop(&prob.n_x, x, tol)
}

/// Rank-drop test of `M(X)` itself; agrees with [`critical_membership`] away
/// from numerical ties.
pub fn m_membership(prob: &CriticalProblem, x: &DVector<f64>, tol: f64) -> Result<Membership> {
    rank_drop(&build_m_matrix(prob), x, tol)
}

/// A point of the locus with its kernel certificate `N(X) v ≈ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSample {
    pub point: DVector<f64>,
    pub kernel: DVector<f64>,
    /// `‖N(X) v‖ / ‖N(X)‖_F` at unit `X`, `v`.
    pub residual: f64,
}

/// Acceptance threshold on [`CriticalSample::residual`].
pub const SAMPLE_RESIDUAL: f64 = 1e-10;
const GN_ITERATIONS: usize = 100;

fn certificate_residual(n: &LinearFormMatrix, x: &DVector<f64>, v: &DVector<f64>) -> (DVector<f64>, DVector<f64>, f64) {
    let x = x / x.norm();
    let v = v / v.norm();
    let value = n.eval_unchecked(&x);
    let res = (&value * &v).norm() / value.norm().max(f64::MIN_POSITIVE);
    (x, v, res)
}

/// Damped Gauss–Newton on `N(X) v = 0`, `|X|² = |v|² = 1`, from `(x, v)`,
/// taking minimum-norm steps.
fn refine_kernel(n: &LinearFormMatrix, mut x: DVector<f64>, mut v: DVector<f64>) -> Option<CriticalSample> {
    let (kv, nv) = (n.vars(), n.cols());
    let rows = n.rows();
    let residual_of = |x: &DVector<f64>, v: &DVector<f64>| {
        let mut r = DVector::zeros(rows + 2);
        r.rows_mut(0, rows).copy_from(&(n.eval_unchecked(x) * v));
        r[rows] = 0.5 * (x.norm_squared() - 1.0);
        r[rows + 1] = 0.5 * (v.norm_squared() - 1.0);
        r
    };
    let mut r = residual_of(&x, &v);
    for _ in 0..GN_ITERATIONS {
        let (ux, uv, res) = certificate_residual(n, &x, &v);
        if res < SAMPLE_RESIDUAL {
            return Some(CriticalSample { point: ux, kernel: uv, residual: res });
        }
        let mut jac = DMatrix::zeros(rows + 2, kv + nv);
        for i in 0..kv {
            jac.view_mut((0, i), (rows, 1)).copy_from(&(n.linear(i) * &v));
        }
        jac.view_mut((0, kv), (rows, nv)).copy_from(&n.eval_unchecked(&x));
        jac.view_mut((rows, 0), (1, kv)).copy_from(&x.transpose());
        jac.view_mut((rows + 1, kv), (1, nv)).copy_from(&v.transpose());
        let step = -linalg::pseudo_inverse(&jac, 1e-13) * &r;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let xn = &x + step.rows(0, kv) * t;
            let vn = &v + step.rows(kv, nv) * t;
            let rn = residual_of(&xn, &vn);
            if rn.norm() < r.norm() {
                x = xn;
                v = vn;
                r = rn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let (ux, uv, res) = certificate_residual(n, &x, &v);
    (res < SAMPLE_RESIDUAL).then_some(CriticalSample { point: ux, kernel: uv, residual: res })
}

/// True when the image of `x` under some `Q_j` is negligible, i.e. `x` sits
/// on (or numerically next to) a center.
fn near_a_center(cams: &[Camera], x: &DVector<f64>) -> bool {
    cams.iter()
        .any(|c| (c.matrix() * x).norm() <= 1e-6 * c.matrix().norm() * x.norm())
}

/// Seeded multistart sampling of `count` points of the locus of `X`. Starts
/// run in parallel batches; accepted points are kept in start order, so the
/// output depends only on `seed`. Points numerically on a center of some
/// `Q_j` are discarded.
pub fn sample_critical_points(prob: &CriticalProblem, count: usize, seed: u64) -> Result<Vec<CriticalSample>> {
    let expected = expected_dimension(prob.views(), prob.k, &prob.h_list)?;
    if expected < 0 {
        return Err(Error::BoundViolated(format!(
            "expected dimension {expected} is negative"
        )));
    }
    let n = &prob.n_x;
    let budget = 20 * count + 20;
    let batch = count.clamp(8, 64);
    let mut found = Vec::with_capacity(count);
    let mut start = 0;
    while found.len() < count && start < budget {
        let end = (start + batch).min(budget);
        let results: Vec<Option<CriticalSample>> = (start..end)
            .into_par_iter()
            .map(|attempt| {
                let mut rng = random::seeded(random::derive_seed(seed, &[attempt as u64]));
                let x = random::normal_vector(&mut rng, n.vars());
                let v = random::normal_vector(&mut rng, n.cols());
                refine_kernel(n, x, v).filter(|s| !near_a_center(&prob.q, &s.point))
            })
            .collect();
        found.extend(results.into_iter().flatten());
        start = end;
    }
    if found.len() < count {
        return Err(Error::ShortSample {
            found: found.len(),
            requested: count,
        });
    }
    found.truncate(count);
    Ok(found)
}

/// `k` minus the rank of `jac` restricted to the tangent directions of the
/// affine chart at `x` (the orthogonal complement of `x`).
fn dimension_from_jacobian(jac: &DMatrix<f64>, x: &DVector<f64>, k: usize, abs_scale: f64) -> usize {
    let ux = x / x.norm();
    let proj = DMatrix::identity(ux.len(), ux.len()) - &ux * ux.transpose();
    let restricted = jac * proj;
    if restricted.nrows() == 0 {
        return k;
    }
    let svd = Svd::new(&restricted);
    let smax = svd.max_singular_value();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-6 * smax && s > 1e-12 * abs_scale)
        .count();
    k.saturating_sub(rank)
}

/// Jacobian of all maximal minors of `n` at `x`, one row per row subset.
fn minors_jacobian(n: &LinearFormMatrix, x: &DVector<f64>) -> DMatrix<f64> {
    let cols = n.cols();
    let value = n.eval_unchecked(x);
    let subsets = linalg::subsets(n.rows(), cols);
    let mut jac = DMatrix::zeros(subsets.len(), n.vars());
    for (r, rows) in subsets.iter().enumerate() {
        let cof = linalg::cofactors(&linalg::select_rows(&value, rows));
        for i in 0..n.vars() {
            jac[(r, i)] = cof.component_mul(&linalg::select_rows(n.linear(i), rows)).sum();
        }
    }
    jac
}

/// Local dimension of the locus at `x0`, from the rank of the Jacobian of
/// the maximal minors of `N`.
pub fn local_dimension(prob: &CriticalProblem, x0: &DVector<f64>) -> Result<usize> {
    if !critical_membership(prob, x0, MEMBERSHIP_TOL)?.is_member {
        return Err(Error::NotOnLocus);
    }
    let x = unit(x0)?;
    let n = &prob.n_x;
    let jac = minors_jacobian(n, &x);
    let scale = n.coefficient_norm().powi(n.cols() as i32);
    Ok(dimension_from_jacobian(&jac, &x, prob.k, scale))
}

/// Rows of the linear system in `Y` given by the 2×2 minors of
/// `[P(Y) | q]`, with `P` and `q` normalized.
fn parallel_rows(p: &DMatrix<f64>, q: &DVector<f64>) -> DMatrix<f64> {
    let p = p / p.norm();
    let q = q / q.norm();
    let pairs = linalg::subsets(q.len(), 2);
    let mut out = DMatrix::zeros(pairs.len(), p.ncols());
    for (r, ab) in pairs.iter().enumerate() {
        let (a, b) = (ab[0], ab[1]);
        let row = p.row(a) * q[b] - p.row(b) * q[a];
        out.set_row(r, &row);
    }
    out
}

/// Largest 2×2 minor of `[a | b]` over `|a| |b|`; the sine of their angle up
/// to a constant.
fn parallel_defect(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            worst = worst.max((a[i] * b[j] - a[j] * b[i]).abs());
        }
    }
    worst / denom
}

/// Tolerance on the angle between `P_j(Y)` and `Q_j(X)` after solving.
pub const CONJUGATE_ANGLE_TOL: f64 = 1e-8;

/// The conjugate point `Y` of a critical `X`: the solution of the linear
/// system `P_j(Y) ∥ Q_j(X)` for every view.
pub fn conjugate_point(prob: &CriticalProblem, x: &DVector<f64>) -> Result<DVector<f64>> {
    let ux = unit(x)?;
    if !critical_membership(prob, &ux, MEMBERSHIP_TOL)?.is_member {
        return Err(Error::NotOnLocus);
    }
    let mut blocks = Vec::with_capacity(prob.views());
    let mut images = Vec::with_capacity(prob.views());
    for (j, (pj, qj)) in prob.p.iter().zip(&prob.q).enumerate() {
        let img = qj.matrix() * &ux;
        if img.norm() <= 1e-12 * qj.matrix().norm() {
            return Err(Error::NoConjugate(format!("X lies on the center of Q_{}", j + 1)));
        }
        blocks.push(parallel_rows(pj.matrix(), &img));
        images.push(img);
    }
    let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
    let system = linalg::vstack(&refs);
    let y = linalg::normalize_homogeneous(&Svd::new(&system).smallest_right_vector());
    for (j, (pj, img)) in prob.p.iter().zip(&images).enumerate() {
        let py = pj.matrix() * &y;
        if py.norm() <= 1e-12 * pj.matrix().norm() {
            return Err(Error::NoConjugate(format!("Y lies on the center of P_{}", j + 1)));
        }
        let angle = linalg::projective_angle(&py, img);
        if angle >= CONJUGATE_ANGLE_TOL {
            return Err(Error::NoConjugate(format!(
                "view {} left at angle {angle:e}",
                j + 1
            )));
        }
    }
    Ok(y)
}

/// Membership of the pair `(X, Y)` in the unified locus: `X` on the locus of
/// the problem, `Y` on the locus of the swapped problem, and every
/// `P_j(Y)` parallel to `Q_j(X)` (2×2 minors below `tol` after scaling).
pub fn unified_membership(prob: &CriticalProblem, x: &DVector<f64>, y: &DVector<f64>, tol: f64) -> Result<bool> {
    let ux = unit(x)?;
    let uy = unit(y)?;
    if !rank_drop(&prob.n_x, &ux, tol)?.is_member || !rank_drop(&prob.n_y, &uy, tol)?.is_member {
        return Ok(false);
    }
    Ok(prob.p.iter().zip(&prob.q).all(|(pj, qj)| {
        let py = pj.matrix() * &uy / pj.matrix().norm();
        let qx = qj.matrix() * &ux / qj.matrix().norm();
        parallel_defect(&py, &qx) * py.norm() * qx.norm() <= tol
    }))
}

/// Symmetric matrix `S` with `det N(X) = Xᵀ S X`, for a 2×2 matrix of
/// linear forms.
pub fn determinant_quadric(n: &LinearFormMatrix) -> Result<DMatrix<f64>> {
    if n.rows() != 2 || n.cols() != 2 || !n.is_linear() {
        return Err(Error::ShapeMismatch("need a 2×2 matrix of linear forms".into()));
    }
    let outer = |a: DVector<f64>, b: DVector<f64>| {
        let ab = &a * b.transpose();
        (&ab + ab.transpose()) * 0.5
    };
    Ok(outer(n.coefficients(0, 0), n.coefficients(1, 1)) - outer(n.coefficients(0, 1), n.coefficients(1, 0)))
}

/// Intersection of a square determinantal hypersurface with a line.
#[derive(Debug, Clone)]
pub struct LineSection {
    /// Parameters `t` of the points `p + t q`.
    pub roots: Vec<Complex<f64>>,
    /// Largest `|det N|` over the Hadamard bound at a root.
    pub max_residual: f64,
}

/// Intersects `det N = 0` with the line through two seeded random points:
/// the polynomial `det N(p + t q)` is interpolated at Chebyshev nodes and
/// its roots taken from the companion matrix. The number of roots is the
/// degree of the hypersurface.
pub fn line_section(prob: &CriticalProblem, seed: u64) -> Result<LineSection> {
    let n = &prob.n_x;
    let d = n.cols();
    if n.rows() != d {
        return Err(Error::ShapeMismatch(format!(
            "N is {}×{d}, not a hypersurface",
            n.rows()
        )));
    }
    let mut rng = random::seeded(seed);
    let p = random::normal_vector(&mut rng, n.vars());
    let q = random::normal_vector(&mut rng, n.vars());
    let nodes: Vec<f64> = (0..=d)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * (d + 1)) as f64).cos())
        .collect();
    let vander = DMatrix::from_fn(d + 1, d + 1, |r, c| nodes[r].powi(c as i32));
    let values = DVector::from_iterator(
        d + 1,
        nodes.iter().map(|&t| linalg::det(&n.eval_unchecked(&(&p + &q * t)))),
    );
    let coeffs = vander
        .lu()
        .solve(&values)
        .ok_or_else(|| Error::NumericalBreakdown("interpolation failed".into()))?;
    let top = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let degree = (0..=d)
        .rev()
        .find(|&i| coeffs[i].abs() > 1e-10 * top)
        .ok_or(Error::ZeroTensor)?;
    let roots: Vec<Complex<f64>> = if degree == 0 {
        Vec::new()
    } else {
        let mut companion = DMatrix::zeros(degree, degree);
        for i in 1..degree {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..degree {
            companion[(i, degree - 1)] = -coeffs[i] / coeffs[degree];
        }
        companion.complex_eigenvalues().iter().copied().collect()
    };
    let max_residual = roots
        .iter()
        .map(|&t| {
            let point: Vec<Complex<f64>> = p.iter().zip(q.iter()).map(|(&a, &b)| t * b + a).collect();
            let value = n.eval_complex(&point);
            let bound: f64 = value.column_iter().map(|c| c.norm()).product();
            value.determinant().norm() / bound.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Ok(LineSection { roots, max_residual })
}

fn one_view_images(p: &Camera, q: &Camera, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    if p.k() != q.k() || p.h() != q.h() {
        return Err(Error::ShapeMismatch("one-view cameras differ in shape".into()));
    }
    let ux = unit(x)?;
    let scale = |c: &Camera| c.matrix().norm();
    Ok((p.project(&ux)? / scale(p), q.project(&ux)? / scale(q)))
}

/// Whether `P(X)` and `Q(X)` are parallel: all 2×2 minors of `[P(X) | Q(X)]`
/// below `tol` relative to the image norms.
pub fn one_view_critical_membership(p: &Camera, q: &Camera, x: &DVector<f64>, tol: f64) -> Result<bool> {
    let (px, qx) = one_view_images(p, q, x)?;
    Ok(parallel_defect(&px, &qx) <= tol)
}

/// Points on the one-view locus: for a seeded `λ`, a random point of the
/// null space of `P − λ Q`.
pub fn sample_one_view_points(p: &Camera, q: &Camera, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    if p.k() != q.k() || p.h() != q.h() {
        return Err(Error::ShapeMismatch("one-view cameras differ in shape".into()));
    }
    let ratio = p.matrix().norm() / q.matrix().norm();
    let cams = [p.clone(), q.clone()];
    let mut out = Vec::with_capacity(count);
    let mut rng = random::seeded(seed);
    let budget = 20 * count + 20;
    for _ in 0..budget {
        if out.len() == count {
            break;
        }
        let lambda = random::normal(&mut rng) * ratio;
        let pencil = p.matrix() - q.matrix() * lambda;
        let kernel = linalg::null_space(&pencil, RANK_TOL);
        if kernel.ncols() == 0 {
            continue;
        }
        let x = linalg::normalize_homogeneous(&(&kernel * random::normal_vector(&mut rng, kernel.ncols())));
        if !near_a_center(&cams, &x) {
            out.push(x);
        }
    }
    if out.len() < count {
        return Err(Error::ShortSample {
            found: out.len(),
            requested: count,
        });
    }
    Ok(out)
}

/// Local dimension of the one-view locus at `x0`, from the 2×2 minors of
/// `[P(X) | Q(X)]`.
pub fn one_view_local_dimension(p: &Camera, q: &Camera, x0: &DVector<f64>) -> Result<usize> {
    if !one_view_critical_membership(p, q, x0, MEMBERSHIP_TOL)? {
        return Err(Error::NotOnLocus);
    }
    let x = unit(x0)?;
    let pm = p.matrix() / p.matrix().norm();
    let qm = q.matrix() / q.matrix().norm();
    let (px, qx) = (&pm * &x, &qm * &x);
    let pairs = linalg::subsets(px.len(), 2);
    let mut jac = DMatrix::zeros(pairs.len(), x.len());
    for (r, ab) in pairs.iter().enumerate() {
        let (a, b) = (ab[0], ab[1]);
        let grad = pm.row(a) * qx[b] + qm.row(b) * px[a] - pm.row(b) * qx[a] - qm.row(a) * px[b];
        jac.set_row(r, &grad);
    }
    Ok(dimension_from_jacobian(&jac, &x, p.k(), 1.0))
}
