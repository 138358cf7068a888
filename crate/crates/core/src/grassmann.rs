//! Grassmann tensors of camera stacks and the multilinear constraint they
//! impose on corresponding view subspaces.
//!
//! Axis `j` of a tensor built with profile `(α_1, …, α_n)` is indexed by the
//! `α_j`-element subsets of the rows `{0, …, h_j}` of camera `j`, in
//! lexicographic order. The entry at `(J_1, …, J_n)` is the signed
//! `(k+1)`-minor of the stacked matrix `[P_1; …; P_n]` on rows
//! `J_1 ∪ … ∪ J_n` (block order), with the sign of the generalized Laplace
//! expansion of the system matrix `[P_j | S_j]` along its first `k+1`
//! columns. With this convention the tensor contracted against the
//! complementary Plücker coordinates of `S_1, …, S_n` equals
//! `det [P_j | S_j]` exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::multiview::{Camera, Profile};

#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannTensor {
    k: usize,
    h_list: Vec<usize>,
    profile: Profile,
    entries: DenseTensor,
}

impl GrassmannTensor {
    /// Wrap precomputed entries; the shape must match `C(h_j+1, α_j)`.
    pub fn from_entries(
        k: usize,
        h_list: Vec<usize>,
        profile: Profile,
        entries: DenseTensor,
    ) -> Result<Self> {
        let dims = axis_dims(&h_list, &profile);
        if entries.dims() != dims.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "entries have dims {:?}, profile requires {:?}",
                entries.dims(),
                dims
            )));
        }
        Ok(GrassmannTensor {
            k,
            h_list,
            profile,
            entries,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h_list(&self) -> &[usize] {
        &self.h_list
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn entries(&self) -> &DenseTensor {
        &self.entries
    }

    pub fn dims(&self) -> &[usize] {
        self.entries.dims()
    }

    /// The `α_j`-subsets labelling axis `j`.
    pub fn axis_subsets(&self, axis: usize) -> Vec<Vec<usize>> {
        linalg::subsets(self.h_list[axis] + 1, self.profile.alphas()[axis])
    }

    pub fn with_entries(&self, entries: DenseTensor) -> Result<GrassmannTensor> {
        GrassmannTensor::from_entries(self.k, self.h_list.clone(), self.profile.clone(), entries)
    }

    /// Unit Frobenius norm copy with the first non-negligible entry positive.
    pub fn normalized(&self) -> Result<GrassmannTensor> {
        let unit = self.entries.normalized()?;
        let lead = unit
            .data()
            .iter()
            .copied()
            .find(|x| x.abs() > 1e-12)
            .unwrap_or(1.0);
        let unit = if lead < 0.0 { unit.scale(-1.0) } else { unit };
        self.with_entries(unit)
    }
}

/// `C(h_j + 1, α_j)` for each view.
pub fn axis_dims(h_list: &[usize], profile: &Profile) -> Vec<usize> {
    h_list
        .iter()
        .zip(profile.alphas())
        .map(|(&h, &a)| linalg::binomial(h as i64 + 1, a as i64) as usize)
        .collect()
}

fn check_stack(cameras: &[Camera], profile: &Profile) -> Result<(usize, Vec<usize>)> {
    let first = cameras
        .first()
        .ok_or_else(|| Error::InvalidInput("no cameras".into()))?;
    let k = first.k();
    if cameras.iter().any(|c| c.k() != k) {
        return Err(Error::ShapeMismatch(
            "cameras act on different spaces".into(),
        ));
    }
    let h_list: Vec<usize> = cameras.iter().map(|c| c.h()).collect();
    Profile::new(profile.alphas().to_vec(), k, &h_list)?;
    Ok((k, h_list))
}

/// Row offsets of each camera block in the stacked matrix.
fn block_offsets(h_list: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(h_list.len());
    let mut acc = 0;
    for &h in h_list {
        offsets.push(acc);
        acc += h + 1;
    }
    offsets
}

/// Laplace sign of a choice of global rows (0-based) against the first
/// `rows.len()` columns.
fn laplace_sign(global_rows: &[usize]) -> f64 {
    let m = global_rows.len();
    // (-1)^(Σ (r+1) + Σ_{c=1..m} c)
    let s: usize = global_rows.iter().map(|r| r + 1).sum::<usize>() + m * (m + 1) / 2;
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Grassmann tensor of a camera stack for the given profile.
pub fn build_tensor(cameras: &[Camera], profile: &Profile) -> Result<GrassmannTensor> {
    let (k, h_list) = check_stack(cameras, profile)?;
    let dims = axis_dims(&h_list, profile);
    let subsets: Vec<Vec<Vec<usize>>> = h_list
        .iter()
        .zip(profile.alphas())
        .map(|(&h, &a)| linalg::subsets(h + 1, a))
        .collect();
    let offsets = block_offsets(&h_list);
    let mats: Vec<&DMatrix<f64>> = cameras.iter().map(|c| c.matrix()).collect();
    let stacked = linalg::vstack(&mats);
    let shape = DenseTensor::zeros(&dims);
    let values: Vec<f64> = (0..shape.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; dims.len()];
            shape.unravel_into(flat, &mut idx);
            let rows: Vec<usize> = idx
                .iter()
                .enumerate()
                .flat_map(|(j, &pos)| {
                    let base = offsets[j];
                    subsets[j][pos].iter().map(move |r| base + r)
                })
                .collect();
            laplace_sign(&rows) * linalg::det(&linalg::select_rows(&stacked, &rows))
        })
        .collect();
    GrassmannTensor::from_entries(
        k,
        h_list,
        profile.clone(),
        DenseTensor::from_vec(&dims, values)?,
    )
}

/// Basis of a linear subspace of codimension `alpha` in `P^h`, stored as an
/// `(h+1) × (h−α+1)` matrix of full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    h: usize,
    alpha: usize,
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn new(alpha: usize, basis: DMatrix<f64>) -> Result<SubspaceBasis> {
        let rows = basis.nrows();
        if rows < 2 {
            return Err(Error::ShapeMismatch(
                "subspace basis needs at least two rows".into(),
            ));
        }
        let h = rows - 1;
        if alpha < 1 || alpha > h || basis.ncols() != h - alpha + 1 {
            return Err(Error::ShapeMismatch(format!(
                "codimension {alpha} in P^{h} needs {} columns, got {}",
                (h + 1).saturating_sub(alpha),
                basis.ncols()
            )));
        }
        if linalg::numerical_rank(&basis, RANK_TOL) != basis.ncols() {
            return Err(Error::RankDeficientBasis);
        }
        Ok(SubspaceBasis { h, alpha, basis })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Same subspace with each basis column scaled to unit length.
    pub fn with_unit_columns(&self) -> SubspaceBasis {
        let mut b = self.basis.clone();
        for mut c in b.column_iter_mut() {
            let n = c.norm();
            c /= n;
        }
        SubspaceBasis {
            h: self.h,
            alpha: self.alpha,
            basis: b,
        }
    }
}

/// Maximal minors of the basis over lexicographically ordered row subsets,
/// unnormalized.
pub fn raw_plucker(s: &SubspaceBasis) -> DVector<f64> {
    let cols = s.basis.ncols();
    let rows = linalg::subsets(s.h + 1, cols);
    DVector::from_iterator(
        rows.len(),
        rows.iter()
            .map(|r| linalg::det(&linalg::select_rows(&s.basis, r))),
    )
}

/// Unit-norm Plücker coordinates of the subspace spanned by the basis.
pub fn plucker_coordinates(s: &SubspaceBasis) -> Result<DVector<f64>> {
    let p = raw_plucker(s);
    let n = p.norm();
    let scale = s.basis.column_iter().map(|c| c.norm()).product::<f64>();
    if n <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficientBasis);
    }
    Ok(p / n)
}

fn check_subspaces(tensor: &GrassmannTensor, subspaces: &[SubspaceBasis]) -> Result<()> {
    if subspaces.len() != tensor.h_list.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} subspaces for {} views",
            subspaces.len(),
            tensor.h_list.len()
        )));
    }
    for (j, s) in subspaces.iter().enumerate() {
        if s.h != tensor.h_list[j] || s.alpha != tensor.profile.alphas()[j] {
            return Err(Error::ShapeMismatch(format!(
                "view {}: subspace (h={}, alpha={}) against (h={}, alpha={})",
                j + 1,
                s.h,
                s.alpha,
                tensor.h_list[j],
                tensor.profile.alphas()[j]
            )));
        }
    }
    Ok(())
}

/// For each axis, the Plücker coordinate of `S_j` on the rows complementary
/// to each axis subset, laid out along the axis.
fn complementary_minors(
    h_list: &[usize],
    profile: &Profile,
    subspaces: &[SubspaceBasis],
    normalize: bool,
) -> Vec<Vec<f64>> {
    subspaces
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let n = h_list[j] + 1;
            let alpha = profile.alphas()[j];
            let mut p = raw_plucker(s);
            if normalize {
                let norm = p.norm();
                if norm > 0.0 {
                    p /= norm;
                }
            }
            linalg::subsets(n, alpha)
                .iter()
                .map(|sub| p[linalg::subset_rank(n, &linalg::complement(n, sub))])
                .collect()
        })
        .collect()
}

/// Coefficients of the linear constraint `Σ_J τ_J c_J = 0` that one
/// correspondence imposes on the tensor entries, in row-major entry order.
///
/// With `normalize = false` the contraction against the true tensor is
/// exactly the determinant of the system matrix.
pub fn constraint_coefficients(
    h_list: &[usize],
    profile: &Profile,
    subspaces: &[SubspaceBasis],
    normalize: bool,
) -> Vec<f64> {
    let dims = axis_dims(h_list, profile);
    let minors = complementary_minors(h_list, profile, subspaces, normalize);
    let shape = DenseTensor::zeros(&dims);
    let mut idx = vec![0; dims.len()];
    (0..shape.len())
        .map(|flat| {
            shape.unravel_into(flat, &mut idx);
            idx.iter().enumerate().map(|(j, &p)| minors[j][p]).product()
        })
        .collect()
}

/// Contract the tensor against the subspaces; equals `det [P_j | S_j]`.
pub fn evaluate_constraint(tensor: &GrassmannTensor, subspaces: &[SubspaceBasis]) -> Result<f64> {
    check_subspaces(tensor, subspaces)?;
    let coeffs = constraint_coefficients(&tensor.h_list, &tensor.profile, subspaces, false);
    Ok(coeffs
        .iter()
        .zip(tensor.entries.data())
        .map(|(c, t)| c * t)
        .sum())
}

/// The square matrix with block rows `[P_j | 0 … S_j … 0]`.
pub fn system_matrix(cameras: &[Camera], subspaces: &[SubspaceBasis]) -> Result<DMatrix<f64>> {
    if cameras.len() != subspaces.len() || cameras.is_empty() {
        return Err(Error::ShapeMismatch(
            "one subspace per camera required".into(),
        ));
    }
    let k = cameras[0].k();
    let rows: usize = cameras.iter().map(|c| c.h() + 1).sum();
    let cols = k + 1 + subspaces.iter().map(|s| s.basis.ncols()).sum::<usize>();
    let mut m = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, k + 1);
    for (cam, s) in cameras.iter().zip(subspaces) {
        if s.h != cam.h() || cam.k() != k {
            return Err(Error::ShapeMismatch(
                "subspace and camera dimensions differ".into(),
            ));
        }
        m.view_mut((r, 0), (cam.h() + 1, k + 1))
            .copy_from(cam.matrix());
        m.view_mut((r, c), (cam.h() + 1, s.basis.ncols()))
            .copy_from(&s.basis);
        r += cam.h() + 1;
        c += s.basis.ncols();
    }
    Ok(m)
}

/// `1 − |⟨a, b⟩| / (‖a‖ ‖b‖)`: invariant under sign and scale.
pub fn tensor_distance(a: &GrassmannTensor, b: &GrassmannTensor) -> Result<f64> {
    dense_distance(&a.entries, &b.entries)
}

pub fn dense_distance(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let c = (a.dot(b).abs() / (na * nb)).min(1.0);
    Ok((1.0 - c).clamp(0.0, 1.0))
}

/// Dimension of the projective variety of Grassmann tensors for views
/// `P^k ⇢ P^{h_j}`: `(k+1)(Σh_j + n − k − 1) − n + 1`, independent of the
/// profile.
pub fn variety_dimension(k: usize, h_list: &[usize]) -> Result<i64> {
    let n = h_list.len() as i64;
    let sum: i64 = h_list.iter().map(|&h| h as i64).sum();
    let k = k as i64;
    if n == 0 || sum + n < k + 1 {
        return Err(Error::InvalidInput(
            "the stacked cameras cannot have rank k + 1".into(),
        ));
    }
    Ok((k + 1) * (sum + n - k - 1) - n + 1)
}

/// Numerical rank of the differential of `cameras ↦ T` at `cameras`, by
/// central differences. At general cameras this is the dimension of the
/// affine cone over the tensor variety, `variety_dimension + 1`.
pub fn tensor_map_rank(cameras: &[Camera], profile: &Profile) -> Result<usize> {
    let base: Vec<DMatrix<f64>> = cameras.iter().map(|c| c.matrix().clone()).collect();
    let params: usize = base.iter().map(|m| m.len()).sum();
    let len = build_tensor(cameras, profile)?.entries().len();
    let step = 1e-5;
    let mut jac = DMatrix::zeros(len, params);
    let mut col = 0;
    for (j, m) in base.iter().enumerate() {
        for e in 0..m.len() {
            let eval = |delta: f64| -> Result<DenseTensor> {
                let mut cams = cameras.to_vec();
                let mut mat = m.clone();
                mat[e] += delta;
                cams[j] = Camera::new(mat)?;
                Ok(build_tensor(&cams, profile)?.entries().clone())
            };
            let plus = eval(step)?;
            let minus = eval(-step)?;
            for (r, (a, b)) in plus.data().iter().zip(minus.data()).enumerate() {
                jac[(r, col)] = (a - b) / (2.0 * step);
            }
            col += 1;
        }
    }
    Ok(linalg::numerical_rank(&jac, 1e-7))
}


#[cfg(test)]
mod oracle_tests {
    use super::*;
    use crate::multiview::sample_general_cameras;
    use crate::random;

    fn random_subspaces(h_list: &[usize], alphas: &[usize], seed: u64) -> Vec<SubspaceBasis> {
        let mut rng = random::seeded(seed);
        h_list
            .iter()
            .zip(alphas)
            .map(|(&h, &a)| {
                SubspaceBasis::new(a, random::normal_matrix(&mut rng, h + 1, h + 1 - a)).unwrap()
            })
            .collect()
    }

    #[test]
    fn constraint_equals_system_determinant() {
        for (k, h, a, seed) in [
            (3, vec![2, 2], vec![2, 2], 1u64),
            (3, vec![2, 2, 2], vec![2, 1, 1], 2),
            (4, vec![2, 2, 2], vec![1, 2, 2], 3),
            (4, vec![3, 2], vec![3, 2], 4),
        ] {
            let cams = sample_general_cameras(k, &h, seed).unwrap();
            let t = build_tensor(&cams, &Profile::new(a.clone(), k, &h).unwrap()).unwrap();
            let s = random_subspaces(&h, &a, seed + 100);
            let lhs = evaluate_constraint(&t, &s).unwrap();
            let rhs = linalg::det(&system_matrix(&cams, &s).unwrap());
            assert!(
                (lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn images_of_a_point_satisfy_the_constraint() {
        let cams = sample_general_cameras(3, &[2, 2, 2], 9).unwrap();
        let t = build_tensor(&cams, &Profile::new(vec![2, 1, 1], 3, &[2, 2, 2]).unwrap()).unwrap();
        let x = DVector::from_vec(vec![0.4, -1.2, 0.7, 1.0]);
        let mut rng = random::seeded(5);
        // a point in view 1 and lines through the image in views 2 and 3
        let subs: Vec<SubspaceBasis> = cams
            .iter()
            .zip([2usize, 1, 1])
            .map(|(c, a)| {
                let img = c.project(&x).unwrap();
                let mut b = DMatrix::zeros(3, 3 - a);
                b.set_column(0, &img);
                if a == 1 {
                    b.set_column(1, &random::normal_vector(&mut rng, 3));
                }
                SubspaceBasis::new(a, b).unwrap()
            })
            .collect();
        let v = evaluate_constraint(&t, &subs).unwrap();
        assert!(v.abs() < 1e-12 * t.entries().norm());
    }
}

#[cfg(test)]
mod variety_tests {
    use super::*;
    use crate::multiview::sample_general_cameras;

    #[test]
    fn fundamental_and_trifocal_varieties() {
        assert_eq!(variety_dimension(3, &[2, 2]).unwrap(), 7);
        assert_eq!(variety_dimension(3, &[2, 2, 2]).unwrap(), 18);
        let cams = sample_general_cameras(3, &[2, 2], 4).unwrap();
        let p = Profile::new(vec![2, 2], 3, &[2, 2]).unwrap();
        assert_eq!(tensor_map_rank(&cams, &p).unwrap(), 8);
        let cams = sample_general_cameras(3, &[2, 2, 2], 4).unwrap();
        let p = Profile::new(vec![1, 1, 2], 3, &[2, 2, 2]).unwrap();
        assert_eq!(tensor_map_rank(&cams, &p).unwrap(), 19);
    }
}
