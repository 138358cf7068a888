//! Ranks, multilinear ranks, CP-rank certification and core extraction for
//! bifocal and trifocal Grassmann tensors.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::canonical::{self, intersection_invariants};
use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::grassmann::{self, GrassmannTensor};
use crate::linalg::{self, binomial};
use crate::multiview::{Camera, Profile};
use crate::random;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearRank {
    pub ranks: Vec<usize>,
}

pub fn flattening(t: &GrassmannTensor, axis: usize) -> DMatrix<f64> {
    t.entries().flattening(axis)
}

pub fn numerical_multilinear_rank(t: &DenseTensor, tol: f64) -> Result<MultilinearRank> {
    if t.norm() == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let ranks = (0..t.order())
        .map(|a| linalg::numerical_rank(&t.flattening(a), tol))
        .collect();
    Ok(MultilinearRank { ranks })
}

pub fn bifocal_rank_formula(k: usize, h1: usize, h2: usize, a1: usize, a2: usize) -> Result<u64> {
    Profile::new(vec![a1, a2], k, &[h1, h2])?;
    let (d1, d2) = ((h1 - a1 + 1) as i64, (h2 - a2 + 1) as i64);
    Ok(binomial(d1 + d2, d1))
}

fn trifocal_params(k: usize, h: [usize; 3], a: [usize; 3]) -> Result<(i64, [i64; 3])> {
    Profile::new(a.to_vec(), k, &h)?;
    let inv = intersection_invariants(k, h[0], h[1], h[2]);
    if inv.i < 0 {
        return Err(Error::NegativeIntersectionInvariant(inv.i));
    }
    Ok((inv.i, inv.j_rs))
}

/// Closed-form CP rank of a trifocal tensor with centers in general
/// position (`j_12 = k − h_3`, `j_13 = k − h_2`, `j_23 = k − h_1`).
pub fn trifocal_rank_formula(k: usize, h: [usize; 3], a: [usize; 3]) -> Result<u64> {
    let (i, [j12, j13, j23]) = trifocal_params(k, h, a)?;
    let (a1, a2) = (a[0] as i64, a[1] as i64);
    let mut total = 0;
    for x2 in 0..=j12 {
        for x3 in 0..=j13 {
            let first = binomial(i, a1 - x2 - x3);
            if first == 0 {
                continue;
            }
            for y3 in 0..=j23 {
                total += binomial(j12, x2)
                    * binomial(j13, x3)
                    * binomial(j23, y3)
                    * first
                    * binomial(i - a1 + x2 + x3, a2 - j12 + x2 - y3);
            }
        }
    }
    Ok(total)
}

/// Closed-form multilinear rank of a trifocal tensor in general position.
///
/// Experimental: the index set of the published formula leaves `s, t`
/// unbound. Here, for axis `a` with other views `s ≠ t`, the zero slices are
/// counted as the tuples `(a_a, a_s, a_t)` summing to `α_a`, with
/// `a_a ≤ i`, `a_t ≤ j_{a,t}` and `a_s ≤ j_{a,s} − α_s − 1`, summed over
/// both choices of `s`. The two choices never overlap.
pub fn multilinear_rank_formula(k: usize, h: [usize; 3], a: [usize; 3]) -> Result<MultilinearRank> {
    let (i, j) = trifocal_params(k, h, a)?;
    let jp = |r: usize, s: usize| -> i64 {
        match (r.min(s), r.max(s)) {
            (0, 1) => j[0],
            (0, 2) => j[1],
            _ => j[2],
        }
    };
    let ranks = (0..3)
        .map(|ax| {
            let n = binomial(h[ax] as i64 + 1, a[ax] as i64);
            let alpha = a[ax] as i64;
            let others = [(ax + 1) % 3, (ax + 2) % 3];
            let mut zero = 0;
            for (s, t) in [(others[0], others[1]), (others[1], others[0])] {
                let (js, jt) = (jp(ax, s), jp(ax, t));
                let upper_s = js - a[s] as i64 - 1;
                let lower_s = (alpha - i - jt).max(0);
                for xs in lower_s..=upper_s {
                    for xt in 0..=jt {
                        let xa = alpha - xs - xt;
                        if (0..=i).contains(&xa) {
                            zero += binomial(i, xa) * binomial(js, xs) * binomial(jt, xt);
                        }
                    }
                }
            }
            (n - zero) as usize
        })
        .collect();
    Ok(MultilinearRank { ranks })
}

/// Apply `matrices[a]` along axis `a` for every axis.
pub fn multilinear_multiply(t: &DenseTensor, matrices: &[DMatrix<f64>]) -> Result<DenseTensor> {
    if matrices.len() != t.order() {
        return Err(Error::ShapeMismatch(format!(
            "{} matrices for an order-{} tensor",
            matrices.len(),
            t.order()
        )));
    }
    matrices
        .iter()
        .enumerate()
        .try_fold(t.clone(), |acc, (a, m)| acc.mode_product(a, m))
}

#[derive(Debug, Clone, Copy)]
pub struct AlsOptions {
    pub iterations: usize,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            iterations: 500,
            restarts: 20,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CpFit {
    pub rank: usize,
    pub residual: f64,
    pub factors: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct CpRankBounds {
    pub lower: usize,
    pub upper: Option<usize>,
    /// Best relative residual reached for each rank tried.
    pub residuals: Vec<(usize, f64)>,
}

impl CpRankBounds {
    pub fn certified(&self) -> Option<usize> {
        (self.upper == Some(self.lower)).then_some(self.lower)
    }

    pub fn residual_at(&self, rank: usize) -> Option<f64> {
        self.residuals.iter().find(|(r, _)| *r == rank).map(|&(_, e)| e)
    }
}

fn cp_reconstruct(dims: &[usize], factors: &[DMatrix<f64>]) -> DenseTensor {
    let r = factors[0].ncols();
    DenseTensor::from_fn(dims, |idx| {
        (0..r)
            .map(|c| idx.iter().enumerate().map(|(a, &i)| factors[a][(i, c)]).product::<f64>())
            .sum()
    })
}

fn cp_residual(t: &DenseTensor, factors: &[DMatrix<f64>]) -> f64 {
    cp_reconstruct(t.dims(), factors).sub(t).norm() / t.norm()
}

/// Mode-`m` matricized tensor times Khatri–Rao product of the other factors.
fn mttkrp(t: &DenseTensor, factors: &[DMatrix<f64>], m: usize) -> DMatrix<f64> {
    let r = factors[0].ncols();
    let mut out = DMatrix::zeros(t.dims()[m], r);
    let mut idx = vec![0; t.order()];
    for (flat, &x) in t.data().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        t.unravel_into(flat, &mut idx);
        for c in 0..r {
            let mut p = x;
            for (a, f) in factors.iter().enumerate() {
                if a != m {
                    p *= f[(idx[a], c)];
                }
            }
            out[(idx[m], c)] += p;
        }
    }
    out
}

fn als_step(t: &DenseTensor, factors: &mut [DMatrix<f64>], ridge: f64) {
    let r = factors[0].ncols();
    for m in 0..factors.len() {
        let mut gram = DMatrix::from_element(r, r, 1.0);
        for (a, f) in factors.iter().enumerate() {
            if a != m {
                gram.component_mul_assign(&(f.transpose() * f));
            }
        }
        let scale = gram.diagonal().max().max(1e-300);
        gram += DMatrix::identity(r, r) * ridge * scale;
        let rhs = mttkrp(t, factors, m);
        let solved = gram
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs.transpose()).transpose())
            .unwrap_or_else(|| rhs * linalg::pseudo_inverse(&gram, 1e-14));
        factors[m] = solved;
    }
    balance(factors);
}

/// Equalize column norms across factors; leaves the tensor unchanged.
fn balance(factors: &mut [DMatrix<f64>]) {
    let n = factors.len() as f64;
    let r = factors[0].ncols();
    for c in 0..r {
        let norms: Vec<f64> = factors.iter().map(|f| f.column(c).norm()).collect();
        if norms.iter().any(|&x| x == 0.0) {
            continue;
        }
        let g = norms.iter().map(|x| x.ln()).sum::<f64>() / n;
        for (f, nv) in factors.iter_mut().zip(&norms) {
            f.column_mut(c).scale_mut(g.exp() / nv);
        }
    }
}

/// Damped Gauss–Newton polish of a CP fit over all factor entries.
fn cp_polish(t: &DenseTensor, factors: &mut [DMatrix<f64>], iterations: usize) {
    let r = factors[0].ncols();
    let dims = t.dims().to_vec();
    let nparam: usize = dims.iter().map(|d| d * r).sum();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, d| {
            let o = *acc;
            *acc += d * r;
            Some(o)
        })
        .collect();
    let norm = t.norm();
    let mut lambda = 1e-3;
    let mut current = cp_residual(t, factors);
    let mut idx = vec![0; dims.len()];
    for _ in 0..iterations {
        if current < 1e-15 {
            break;
        }
        let model = cp_reconstruct(&dims, factors);
        let resid = model.sub(t);
        let mut jac = DMatrix::zeros(t.len(), nparam);
        for flat in 0..t.len() {
            t.unravel_into(flat, &mut idx);
            for c in 0..r {
                for a in 0..dims.len() {
                    let mut p = 1.0;
                    for (b, f) in factors.iter().enumerate() {
                        if b != a {
                            p *= f[(idx[b], c)];
                        }
                    }
                    jac[(flat, offsets[a] + idx[a] * r + c)] = p;
                }
            }
        }
        let e = DMatrix::from_column_slice(t.len(), 1, resid.data()) / norm;
        let jac = jac / norm;
        let jtj = jac.transpose() * &jac;
        let jte = jac.transpose() * &e;
        let mut improved = false;
        for _ in 0..10 {
            let mut a = jtj.clone();
            for d in 0..nparam {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(ch) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = ch.solve(&jte);
            let mut trial: Vec<DMatrix<f64>> = factors.to_vec();
            for (a, f) in trial.iter_mut().enumerate() {
                for i in 0..dims[a] {
                    for c in 0..r {
                        f[(i, c)] -= step[offsets[a] + i * r + c];
                    }
                }
            }
            let res = cp_residual(t, &trial);
            if res < current {
                factors.clone_from_slice(&trial);
                current = res;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
}

/// Best rank-`r` CP fit over seeded restarts of alternating least squares,
/// each finished by a Gauss–Newton polish.
pub fn cp_fit(t: &DenseTensor, r: usize, opts: &AlsOptions) -> Result<CpFit> {
    if t.norm() == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let scale = t.norm().powf(1.0 / t.order() as f64);
    let fits: Vec<(f64, usize, Vec<DMatrix<f64>>)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = random::seeded(random::derive_seed(opts.seed, &[r as u64, restart as u64]));
            let mut factors: Vec<DMatrix<f64>> = t
                .dims()
                .iter()
                .map(|&d| random::normal_matrix(&mut rng, d, r) * (scale / (r as f64).sqrt()))
                .collect();
            let mut res = f64::INFINITY;
            for it in 0..opts.iterations {
                als_step(t, &mut factors, if it < opts.iterations / 2 { 1e-9 } else { 0.0 });
                if it % 10 == 9 {
                    res = cp_residual(t, &factors);
                    if res < opts.tol * 1e-3 {
                        break;
                    }
                }
            }
            if !(res < opts.tol * 1e-3) {
                cp_polish(t, &mut factors, 100);
                res = cp_residual(t, &factors);
            }
            (res, restart, factors)
        })
        .collect();
    let (residual, _, factors) = fits
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one restart");
    Ok(CpFit {
        rank: r,
        residual,
        factors,
    })
}

/// Pencil bounds for an order-3 tensor with an axis of length 3 and square
/// `m × m` slices along it. For slices `X_1` (invertible), `X_2`, `X_3`:
/// Strassen's bound `rank ≥ m + ⌈rank(X_2 X_1⁻¹ X_3 − X_3 X_1⁻¹ X_2) / 2⌉`,
/// and `rank ≥ m + 1` when `(X_2 + βX_3) X_1⁻¹` is not diagonalizable (a
/// rank-`m` tensor makes every such matrix diagonalizable). The slices are
/// taken in the original basis of the axis and in a few seeded random
/// bases, keeping the best bound.
pub fn pencil_lower_bound(t: &DenseTensor, rel_tol: f64) -> Option<usize> {
    if t.order() != 3 {
        return None;
    }
    let d = t.dims();
    let mut rng = random::seeded(0x5742);
    let mut bases = vec![DMatrix::identity(3, 3)];
    bases.extend((0..4).map(|_| random::normal_matrix(&mut rng, 3, 3)));
    let mut best = None;
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        if d[c] != 3 || d[a] != d[b] {
            continue;
        }
        for g in &bases {
            let Ok(moved) = t.mode_product(c, g) else { continue };
            let slices: Vec<DMatrix<f64>> = (0..3)
                .map(|s| {
                    DMatrix::from_fn(d[a], d[b], |i, j| {
                        let mut idx = [0; 3];
                        idx[c] = s;
                        idx[a] = i;
                        idx[b] = j;
                        moved.get(&idx)
                    })
                })
                .collect();
            for p in 0..3 {
                if linalg::inverse_condition(&slices[p]) < 1e-6 {
                    continue;
                }
                let Some(x1_inv) = slices[p].clone().try_inverse() else { continue };
                let o: Vec<&DMatrix<f64>> = (0..3).filter(|&q| q != p).map(|q| &slices[q]).collect();
                let comm = o[0] * &x1_inv * o[1] - o[1] * &x1_inv * o[0];
                let scale = o[0].norm() * x1_inv.norm() * o[1].norm();
                let r = if comm.norm() <= rel_tol * scale {
                    0
                } else {
                    linalg::numerical_rank(&comm, rel_tol)
                };
                let mut bound = d[a] + r.div_ceil(2);
                if r == 0 && is_defective(&((o[0] + o[1] * 0.618_033_988_7) * &x1_inv)) {
                    bound = d[a] + 1;
                }
                best = best.max(Some(bound));
            }
        }
    }
    best
}

/// Whether a real square matrix is clearly not diagonalizable over `C`:
/// after clustering its eigenvalues, `Π_c (C − λ_c I)` stays large relative
/// to the product of the factor norms.
fn is_defective(c: &DMatrix<f64>) -> bool {
    let n = c.nrows();
    let scale = c.norm();
    if scale == 0.0 {
        return false;
    }
    let mut clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for z in c.complex_eigenvalues().iter() {
        match clusters.iter_mut().find(|(w, _)| (w - z).norm() <= 1e-4 * scale) {
            Some((w, count)) => {
                *w = (*w * *count as f64 + z) / (*count as f64 + 1.0);
                *count += 1;
            }
            None => clusters.push((*z, 1)),
        }
    }
    if clusters.iter().all(|&(_, count)| count == 1) {
        return false;
    }
    let cz: DMatrix<Complex<f64>> = c.map(|x| Complex::new(x, 0.0));
    let mut prod = DMatrix::<Complex<f64>>::identity(n, n);
    let mut norms = 1.0;
    for &(w, _) in &clusters {
        let f = &cz - DMatrix::<Complex<f64>>::identity(n, n) * w;
        norms *= f.norm();
        prod = prod * f;
    }
    norms > 0.0 && prod.norm() > 1e-2 * norms
}

/// Lower bound from flattening ranks (and the pencil bounds where they
/// apply), upper bound from the smallest rank whose CP fit reaches
/// relative residual below `opts.tol`.
pub fn cp_rank_bounds(t: &DenseTensor, r_max: usize, opts: &AlsOptions) -> Result<CpRankBounds> {
    let flat = numerical_multilinear_rank(t, linalg::RANK_TOL)?
        .ranks
        .into_iter()
        .max()
        .unwrap_or(0);
    let lower = flat.max(pencil_lower_bound(t, 1e-8).unwrap_or(0));
    let mut residuals = Vec::new();
    let mut upper = None;
    for r in flat.max(1)..=r_max {
        let fit = cp_fit(t, r, opts)?;
        residuals.push((r, fit.residual));
        if fit.residual < opts.tol {
            upper = Some(r);
            break;
        }
    }
    Ok(CpRankBounds {
        lower,
        upper,
        residuals,
    })
}

#[derive(Debug, Clone)]
pub struct CoreDecomposition {
    pub core: DenseTensor,
    pub factors: Vec<DMatrix<f64>>,
    /// Selected (nonzero) slice positions of the canonical tensor per axis.
    pub kept_slices: Vec<Vec<usize>>,
    /// The canonical tensor `T_C` the core was read from.
    pub canonical_tensor: DenseTensor,
}

impl CoreDecomposition {
    pub fn dims(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }

    /// `(S_1, …, S_n) · C`.
    pub fn expand(&self) -> Result<DenseTensor> {
        multilinear_multiply(&self.core, &self.factors)
    }
}

fn selection_matrix(n: usize, keep: &[usize]) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n, keep.len());
    for (c, &r) in keep.iter().enumerate() {
        u[(r, c)] = 1.0;
    }
    u
}

/// Core of a trifocal tensor read off its canonical form.
pub fn extract_core(cameras: &[Camera], profile: &Profile) -> Result<CoreDecomposition> {
    let [p1, p2, p3] = cameras else {
        return Err(Error::ShapeMismatch("core extraction needs three cameras".into()));
    };
    let dec = canonical::canonicalize_trifocal(p1, p2, p3)?;
    let t = grassmann::build_tensor(cameras, profile)?;
    let tc = grassmann::build_tensor(&dec.canonical_cameras, profile)?;
    let tc = tc.entries();
    let det_h = linalg::det(dec.scene_homography.matrix());
    let mut kept_slices = Vec::with_capacity(3);
    let mut core_c = tc.clone();
    let mut factors = Vec::with_capacity(3);
    let mut b_inv = Vec::with_capacity(3);
    for (axis, m) in dec.view_transforms.iter().enumerate() {
        let n = tc.dims()[axis];
        let keep = tc.nonzero_slices(axis, 0.5);
        core_c = core_c.select(axis, &keep);
        let u = selection_matrix(n, &keep);
        let v = canonical::induced_axis_transform(m, profile.alphas()[axis]);
        let v_inv = v
            .try_inverse()
            .ok_or_else(|| Error::NumericalBreakdown("singular view transform".into()))?;
        let w = v_inv * u;
        let gram = w.transpose() * &w;
        let off_diag = (&gram - DMatrix::from_diagonal(&gram.diagonal())).norm();
        let (evals, e) = if off_diag <= 1e-14 * gram.norm() {
            (gram.diagonal(), DMatrix::identity(keep.len(), keep.len()))
        } else {
            let eig = SymmetricEigen::new(gram);
            (eig.eigenvalues, eig.eigenvectors)
        };
        let emax = evals.max();
        if evals.iter().any(|&x| !(x > 1e-24 * emax)) {
            return Err(Error::NumericalBreakdown("vanishing singular value in D_j".into()));
        }
        let d_inv = DMatrix::from_diagonal(&evals.map(|x| 1.0 / x.sqrt()));
        let d = DMatrix::from_diagonal(&evals.map(|x| x.sqrt()));
        let s = &w * &e * &d_inv;
        b_inv.push(&d * e.transpose());
        factors.push(s);
        kept_slices.push(keep);
    }
    let core = multilinear_multiply(&core_c, &b_inv)?.scale(1.0 / det_h);
    // sanity: the factors reproduce the original tensor
    let back = multilinear_multiply(&core, &factors)?;
    if back.sub(t.entries()).norm() > 1e-6 * t.entries().norm() {
        return Err(Error::NumericalBreakdown("core does not reproduce the tensor".into()));
    }
    Ok(CoreDecomposition {
        core,
        factors,
        kept_slices,
        canonical_tensor: tc.clone(),
    })
}
