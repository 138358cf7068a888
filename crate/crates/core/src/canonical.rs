//! Canonical forms of bifocal and trifocal camera stacks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::multiview::{Camera, Homography};

/// Intersection numbers of three views `P^k ⇢ P^{h_r}`.
///
/// Pairs are ordered `{1,2}, {1,3}, {2,3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntersectionInvariants {
    pub i_rs: [i64; 3],
    pub i: i64,
    pub j_rs: [i64; 3],
}

const PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

fn pair_index(r: usize, s: usize) -> usize {
    let (a, b) = if r < s { (r, s) } else { (s, r) };
    PAIRS
        .iter()
        .position(|&p| p == (a, b))
        .unwrap_or_else(|| panic!("no view pair {{{r},{s}}}"))
}

impl IntersectionInvariants {
    pub fn i_pair(&self, r: usize, s: usize) -> i64 {
        self.i_rs[pair_index(r, s)]
    }

    pub fn j_pair(&self, r: usize, s: usize) -> i64 {
        self.j_rs[pair_index(r, s)]
    }
}

pub fn intersection_invariants(
    k: usize,
    h1: usize,
    h2: usize,
    h3: usize,
) -> IntersectionInvariants {
    let (k, h) = (k as i64, [h1 as i64, h2 as i64, h3 as i64]);
    let i = h[0] + h[1] + h[2] + 1 - 2 * k;
    let i_rs = PAIRS.map(|(r, s)| h[r - 1] + h[s - 1] + 1 - k);
    IntersectionInvariants {
        i_rs,
        i,
        j_rs: i_rs.map(|x| x - i),
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub canonical_cameras: Vec<Camera>,
    pub view_transforms: Vec<DMatrix<f64>>,
    pub scene_homography: Homography,
    /// Largest relative deviation of `M_j P_j H` from the canonical camera.
    pub residual: f64,
}

/// Canonical camera whose rows are the listed basis vectors of `R^{k+1}`.
fn selection_camera(k: usize, rows: &[usize]) -> Result<Camera> {
    let mut m = DMatrix::zeros(rows.len(), k + 1);
    for (r, &c) in rows.iter().enumerate() {
        m[(r, c)] = 1.0;
    }
    Camera::new(m)
}

fn row_space(p: &Camera) -> DMatrix<f64> {
    linalg::column_space(&p.matrix().transpose(), RANK_TOL)
}

/// Given the ordered basis `b` (columns) and, per camera, the basis columns
/// spanning its row space, produce the decomposition.
fn assemble(
    cams: &[&Camera],
    b: &DMatrix<f64>,
    rows: &[Vec<usize>],
) -> Result<CanonicalDecomposition> {
    let k = cams[0].k();
    let bt = b.transpose();
    let h = bt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalBreakdown("canonical basis is singular".into()))?;
    let scene_homography = Homography::new(h)?;
    let mut canonical_cameras = Vec::with_capacity(cams.len());
    let mut view_transforms = Vec::with_capacity(cams.len());
    let mut residual: f64 = 0.0;
    for (cam, sel) in cams.iter().zip(rows) {
        let target = selection_camera(k, sel)?;
        let m = linalg::select_rows(&bt, sel) * linalg::pseudo_inverse(cam.matrix(), RANK_TOL);
        let got = &m * cam.matrix() * scene_homography.matrix();
        residual = residual.max((&got - target.matrix()).norm() / target.matrix().norm());
        canonical_cameras.push(target);
        view_transforms.push(m);
    }
    Ok(CanonicalDecomposition {
        canonical_cameras,
        view_transforms,
        scene_homography,
        residual,
    })
}

fn echelon(x: &DMatrix<f64>) -> DMatrix<f64> {
    if x.ncols() == 0 {
        x.clone()
    } else {
        linalg::echelon_basis(x)
    }
}

fn same_space(cams: &[&Camera]) -> Result<()> {
    let k = cams[0].k();
    if cams.iter().any(|c| c.k() != k) {
        return Err(Error::ShapeMismatch(
            "cameras act on different spaces".into(),
        ));
    }
    Ok(())
}

/// Reduce a pair of cameras with disjoint centers to the block form
/// `P_1 = [I_i 0 0; 0 I 0]`, `P_2 = [I_i 0 0; 0 0 I]`.
pub fn canonicalize_bifocal(p1: &Camera, p2: &Camera) -> Result<CanonicalDecomposition> {
    same_space(&[p1, p2])?;
    let k = p1.k();
    let (h1, h2) = (p1.h(), p2.h());
    let dims = (k - h1) + (k - h2);
    let span = linalg::numerical_rank(&linalg::hstack(&[&p1.center(), &p2.center()]), RANK_TOL);
    if span < dims || h1 + h2 + 1 < k {
        return Err(Error::CentersIntersect);
    }
    let i = h1 + h2 + 1 - k;
    let (l1, l2) = (row_space(p1), row_space(p2));
    let v = linalg::intersect(&l1, &l2, RANK_TOL);
    if v.ncols() != i {
        return Err(Error::CentersIntersect);
    }
    let w = linalg::complement_within(&v, &l1, RANK_TOL);
    let t = linalg::complement_within(&v, &l2, RANK_TOL);
    let [v, w, t] = [&v, &w, &t].map(|x| echelon(x));
    let b = linalg::hstack(&[&v, &w, &t]);
    if b.ncols() != k + 1 || linalg::numerical_rank(&b, RANK_TOL) != k + 1 {
        return Err(Error::CentersIntersect);
    }
    let (nw, nt) = (w.ncols(), t.ncols());
    let rows1: Vec<usize> = (0..i + nw).collect();
    let rows2: Vec<usize> = (0..i).chain(i + nw..i + nw + nt).collect();
    assemble(&[p1, p2], &b, &[rows1, rows2])
}

/// Whether the three centers are independent, i.e. the span of any two
/// misses the third.
pub fn trifocal_general_position(cams: [&Camera; 3]) -> bool {
    let dims: usize = cams.iter().map(|c| c.k() - c.h()).sum();
    let centers: Vec<DMatrix<f64>> = cams.iter().map(|c| c.center()).collect();
    let refs: Vec<&DMatrix<f64>> = centers.iter().collect();
    linalg::numerical_rank(&linalg::hstack(&refs), RANK_TOL) == dims
}

/// Reduce three cameras to the block form in the basis `v, w, u, t` with
/// `L_1 = <v,w,u>`, `L_2 = <v,w,t>`, `L_3 = <v,u,t>`.
pub fn canonicalize_trifocal(
    p1: &Camera,
    p2: &Camera,
    p3: &Camera,
) -> Result<CanonicalDecomposition> {
    same_space(&[p1, p2, p3])?;
    let k = p1.k();
    let inv = intersection_invariants(k, p1.h(), p2.h(), p3.h());
    if inv.i < 0 {
        return Err(Error::NegativeIntersectionInvariant(inv.i));
    }
    if !trifocal_general_position([p1, p2, p3]) {
        return Err(Error::GeneralPositionViolated(
            "the span of two centers meets the third".into(),
        ));
    }
    let l = [row_space(p1), row_space(p2), row_space(p3)];
    let l12 = linalg::intersect(&l[0], &l[1], RANK_TOL);
    let l13 = linalg::intersect(&l[0], &l[2], RANK_TOL);
    let l23 = linalg::intersect(&l[1], &l[2], RANK_TOL);
    let v = linalg::intersect(&l12, &l[2], RANK_TOL);
    let i = inv.i as usize;
    if v.ncols() != i {
        return Err(Error::GeneralPositionViolated(format!(
            "triple intersection has dimension {}, expected {i}",
            v.ncols()
        )));
    }
    let w = linalg::complement_within(&v, &l12, RANK_TOL);
    let u = linalg::complement_within(&v, &l13, RANK_TOL);
    let t = linalg::complement_within(&v, &l23, RANK_TOL);
    let [v, w, u, t] = [&v, &w, &u, &t].map(|x| echelon(x));
    let expected = [inv.j_rs[0], inv.j_rs[1], inv.j_rs[2]].map(|x| x as usize);
    if [w.ncols(), u.ncols(), t.ncols()] != expected {
        return Err(Error::GeneralPositionViolated(
            "pairwise intersections have unexpected dimensions".into(),
        ));
    }
    let b = linalg::hstack(&[&v, &w, &u, &t]);
    if b.ncols() != k + 1 || linalg::numerical_rank(&b, RANK_TOL) != k + 1 {
        return Err(Error::GeneralPositionViolated(
            "intersection bases do not span the scene".into(),
        ));
    }
    let (nw, nu, nt) = (w.ncols(), u.ncols(), t.ncols());
    let vs = 0..i;
    let ws = i..i + nw;
    let us = i + nw..i + nw + nu;
    let ts = i + nw + nu..i + nw + nu + nt;
    let rows1: Vec<usize> = vs.clone().chain(ws.clone()).chain(us.clone()).collect();
    let rows2: Vec<usize> = vs.clone().chain(ws).chain(ts.clone()).collect();
    let rows3: Vec<usize> = vs.chain(us).chain(ts).collect();
    assemble(&[p1, p2, p3], &b, &[rows1, rows2, rows3])
}

/// Transform induced on a tensor axis of codimension `alpha` by the view
/// change `m`: the signed `alpha`-th compound `S · C_alpha(m) · S`, where `S`
/// is diagonal with entry `(-1)^{ΣJ}` for the subset `J`.
///
/// Together with the scene change `H` this gives
/// `T(M_1 P_1 H, …) = det(H) · (V_1, …, V_n) · T(P_1, …)`.
pub fn induced_axis_transform(m: &DMatrix<f64>, alpha: usize) -> DMatrix<f64> {
    let subs = linalg::subsets(m.nrows(), alpha);
    let sign: Vec<f64> = subs
        .iter()
        .map(|s| {
            if s.iter().sum::<usize>() % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let mut c = linalg::compound(m, alpha);
    for r in 0..c.nrows() {
        for col in 0..c.ncols() {
            c[(r, col)] *= sign[r] * sign[col];
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseTensor;
    use crate::grassmann::{build_tensor, dense_distance};
    use crate::multiview::{sample_general_cameras, Profile};

    fn is_zero_one(m: &DMatrix<f64>) -> bool {
        m.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    #[test]
    fn invariants_from_formulas() {
        let a = intersection_invariants(3, 2, 2, 2);
        assert_eq!((a.i, a.i_rs, a.j_rs), (1, [2; 3], [1; 3]));
        let b = intersection_invariants(4, 2, 2, 2);
        assert_eq!((b.i, b.i_rs, b.j_rs), (-1, [1; 3], [2; 3]));
        let c = intersection_invariants(5, 3, 3, 3);
        assert_eq!((c.i, c.i_rs, c.j_rs), (0, [2; 3], [2; 3]));
        let d = intersection_invariants(6, 5, 4, 3);
        assert_eq!(d.j_pair(1, 2), 6 - 3);
        assert_eq!(d.j_pair(3, 1), 6 - 4);
        assert_eq!(d.i + d.j_rs.iter().sum::<i64>(), 7);
    }

    #[test]
    fn bifocal_pattern() {
        let cams = sample_general_cameras(3, &[2, 2], 11).unwrap();
        let d = canonicalize_bifocal(&cams[0], &cams[1]).unwrap();
        assert!(d.residual < 1e-10, "{}", d.residual);
        let p1 = d.canonical_cameras[0].matrix();
        let p2 = d.canonical_cameras[1].matrix();
        assert!(is_zero_one(p1) && is_zero_one(p2));
        let e1 = DMatrix::from_row_slice(3, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0.]);
        let e2 = DMatrix::from_row_slice(3, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1.]);
        assert_eq!((p1, p2), (&e1, &e2));
    }

    #[test]
    fn canonical_input_is_fixed() {
        let cams = sample_general_cameras(3, &[2, 2], 11).unwrap();
        let d = canonicalize_bifocal(&cams[0], &cams[1]).unwrap();
        let again = canonicalize_bifocal(&d.canonical_cameras[0], &d.canonical_cameras[1]).unwrap();
        assert_eq!(again.canonical_cameras, d.canonical_cameras);
        assert!(again.residual < 1e-12);
        for m in &again.view_transforms {
            assert!((m - DMatrix::identity(3, 3)).norm() < 1e-12);
        }
        assert!((again.scene_homography.matrix() - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn bifocal_intersecting_centers() {
        // both centers contain e_3
        let p1 = Camera::new(DMatrix::from_row_slice(
            2,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0.],
        ))
        .unwrap();
        let p2 = Camera::new(DMatrix::from_row_slice(
            3,
            4,
            &[0., 1., 0., 0., 0., 0., 1., 0., 1., 1., 1., 0.],
        ))
        .unwrap();
        assert!(matches!(
            canonicalize_bifocal(&p1, &p2),
            Err(Error::CentersIntersect)
        ));
    }

    #[test]
    fn trifocal_pattern_and_errors() {
        let cams = sample_general_cameras(3, &[2, 2, 2], 7).unwrap();
        let d = canonicalize_trifocal(&cams[0], &cams[1], &cams[2]).unwrap();
        assert!(d.residual < 1e-10);
        let rows: Vec<Vec<usize>> = d
            .canonical_cameras
            .iter()
            .map(|c| {
                (0..3)
                    .map(|r| (0..4).find(|&j| c.matrix()[(r, j)] == 1.0).unwrap())
                    .collect()
            })
            .collect();
        assert_eq!(rows, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3]]);

        let four = sample_general_cameras(4, &[2, 2, 2], 7).unwrap();
        assert_eq!(
            canonicalize_trifocal(&four[0], &four[1], &four[2]).unwrap_err(),
            Error::NegativeIntersectionInvariant(-1)
        );

        let p = Camera::new(DMatrix::from_row_slice(
            3,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0.],
        ))
        .unwrap();
        let q = Camera::new(DMatrix::from_row_slice(
            3,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1.],
        ))
        .unwrap();
        assert!(matches!(
            canonicalize_trifocal(&p, &p, &q),
            Err(Error::GeneralPositionViolated(_))
        ));
    }

    #[test]
    fn zero_width_v_block() {
        let cams = sample_general_cameras(5, &[3, 3, 3], 2).unwrap();
        let d = canonicalize_trifocal(&cams[0], &cams[1], &cams[2]).unwrap();
        assert!(d.residual < 1e-10);
    }

    fn transform_all(t: &DenseTensor, vs: &[DMatrix<f64>]) -> DenseTensor {
        vs.iter()
            .enumerate()
            .fold(t.clone(), |acc, (a, v)| acc.mode_product(a, v).unwrap())
    }

    #[test]
    fn tensor_invariance_under_signed_compound() {
        for (k, h, alphas, seed) in [
            (3, vec![2, 2, 2], vec![1, 1, 2], 3u64),
            (3, vec![2, 2, 2], vec![2, 1, 1], 4),
            (5, vec![3, 3, 3], vec![2, 2, 2], 5),
            (4, vec![3, 2], vec![3, 2], 6),
        ] {
            let cams = sample_general_cameras(k, &h, seed).unwrap();
            let prof = Profile::new(alphas.clone(), k, &h).unwrap();
            let d = if cams.len() == 2 {
                canonicalize_bifocal(&cams[0], &cams[1]).unwrap()
            } else {
                canonicalize_trifocal(&cams[0], &cams[1], &cams[2]).unwrap()
            };
            let t = build_tensor(&cams, &prof).unwrap();
            let tc = build_tensor(&d.canonical_cameras, &prof).unwrap();
            let vs: Vec<DMatrix<f64>> = d
                .view_transforms
                .iter()
                .zip(&alphas)
                .map(|(m, &a)| induced_axis_transform(m, a))
                .collect();
            let moved = transform_all(t.entries(), &vs);
            assert!(dense_distance(&moved, tc.entries()).unwrap() < 1e-10);
            let scaled = moved.scale(linalg::det(d.scene_homography.matrix()));
            assert!(scaled.sub(tc.entries()).norm() < 1e-9 * tc.entries().norm());
        }
    }

    #[test]
    fn compound_of_inverse_transpose_is_not_the_axis_action() {
        let cams = sample_general_cameras(3, &[2, 2, 2], 3).unwrap();
        let prof = Profile::new(vec![1, 1, 2], 3, &[2, 2, 2]).unwrap();
        let d = canonicalize_trifocal(&cams[0], &cams[1], &cams[2]).unwrap();
        let t = build_tensor(&cams, &prof).unwrap();
        let tc = build_tensor(&d.canonical_cameras, &prof).unwrap();
        let vs: Vec<DMatrix<f64>> = d
            .view_transforms
            .iter()
            .zip([1, 1, 2])
            .map(|(m, a)| linalg::compound(&m.clone().try_inverse().unwrap().transpose(), a))
            .collect();
        assert!(dense_distance(&transform_all(t.entries(), &vs), tc.entries()).unwrap() > 1e-6);
    }
}
