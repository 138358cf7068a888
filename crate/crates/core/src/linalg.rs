//! Dense linear-algebra helpers shared by every module.
//!
//! All rank decisions go through singular values with a relative threshold;
//! nothing here tests floating point values against exact zero.

use nalgebra::{DMatrix, DVector};

/// Default relative threshold for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Singular value decomposition with values sorted in decreasing order and a
/// complete set of right singular vectors (`v` is always `n × n`).
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Left singular vectors, one column per singular value.
    pub u: DMatrix<f64>,
    /// Right singular vectors as columns, `n × n`; columns past
    /// `singular_values.len()` span the part of the null space not covered by
    /// a singular value.
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Svd {
        let (m, n) = a.shape();
        if n == 0 {
            return Svd {
                singular_values: Vec::new(),
                u: DMatrix::zeros(m, 0),
                v: DMatrix::zeros(0, 0),
            };
        }
        // Pad wide matrices with zero rows so the decomposition yields a full
        // basis of right singular vectors.
        let padded;
        let work = if m < n {
            padded = {
                let mut p = DMatrix::zeros(n, n);
                p.view_mut((0, 0), (m, n)).copy_from(a);
                p
            };
            &padded
        } else {
            a
        };
        let svd = nalgebra::linalg::SVD::new(work.clone(), true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v requested");
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&x, &y| s[y].partial_cmp(&s[x]).unwrap_or(std::cmp::Ordering::Equal));
        let keep = m.min(n);
        let mut singular_values = Vec::with_capacity(keep);
        let mut u_sorted = DMatrix::zeros(m, keep);
        let mut v = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            if dst < keep {
                singular_values.push(s[src]);
                u_sorted
                    .column_mut(dst)
                    .copy_from(&u.column(src).rows(0, m).into_owned());
            }
            v.column_mut(dst).copy_from(&v_t.row(src).transpose());
        }
        Svd {
            singular_values,
            u: u_sorted,
            v,
        }
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `rel_tol × σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.max_singular_value();
        if smax <= f64::MIN_POSITIVE {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * smax)
            .count()
    }

    /// Orthonormal basis of the numerical null space, as columns.
    pub fn null_space(&self, rel_tol: f64) -> DMatrix<f64> {
        let r = self.rank(rel_tol);
        let n = self.v.ncols();
        self.v.columns(r, n - r).into_owned()
    }

    /// Right singular vector of the smallest singular value (counting the
    /// implicit zeros of a wide matrix).
    pub fn smallest_right_vector(&self) -> DVector<f64> {
        let n = self.v.ncols();
        self.v.column(n - 1).into_owned()
    }

    /// The `idx`-th smallest singular value, counting the implicit zeros of
    /// a wide matrix.
    pub fn smallest(&self, idx: usize) -> f64 {
        let n = self.v.ncols();
        let pos = n - 1 - idx;
        self.singular_values.get(pos).copied().unwrap_or(0.0)
    }
}

pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    Svd::new(a).rank(rel_tol)
}

pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(a.ncols(), a.ncols());
    }
    Svd::new(a).null_space(rel_tol)
}

/// Orthonormal basis of the column space of `a`.
pub fn column_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = Svd::new(a);
    let r = svd.rank(rel_tol);
    svd.u.columns(0, r).into_owned()
}

/// Orthonormal basis of the intersection of the column spaces of two
/// matrices with orthonormal columns.
pub fn intersect(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut stacked = DMatrix::zeros(n, a.ncols() + b.ncols());
    stacked.columns_mut(0, a.ncols()).copy_from(a);
    stacked.columns_mut(a.ncols(), b.ncols()).copy_from(&(-b));
    let kernel = null_space(&stacked, rel_tol);
    let coeffs = kernel.rows(0, a.ncols()).into_owned();
    column_space(&(a * coeffs), rel_tol)
}

/// Orthonormal basis of the orthogonal complement of `sub` inside `within`
/// (both with orthonormal columns, `sub ⊂ within`).
pub fn complement_within(sub: &DMatrix<f64>, within: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if sub.ncols() == 0 {
        return within.clone();
    }
    let proj = sub.transpose() * within;
    let kernel = null_space(&proj, rel_tol);
    column_space(&(within * kernel), rel_tol)
}

/// Basis of the column space of `x` (full column rank) in reduced echelon
/// form: each column is 1 on its own pivot row and 0 on the others, with
/// columns ordered by pivot row. Coordinate subspaces map to coordinate
/// vectors.
pub fn echelon_basis(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = x.shape();
    let mut y = x.clone();
    let mut pivots = Vec::with_capacity(m);
    for c in 0..m {
        let p = (0..n)
            .filter(|r| !pivots.contains(r))
            .max_by(|&a, &b| y[(a, c)].abs().total_cmp(&y[(b, c)].abs()))
            .expect("more columns than rows");
        let pv = y[(p, c)];
        y.column_mut(c).scale_mut(1.0 / pv);
        for c2 in 0..m {
            if c2 != c {
                let f = y[(p, c2)];
                if f != 0.0 {
                    let col = y.column(c).clone_owned();
                    y.column_mut(c2).axpy(-f, &col, 1.0);
                }
            }
        }
        pivots.push(p);
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&c| pivots[c]);
    select_cols(&y, &order)
}

/// Stack matrices with equal column counts vertically.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Stack matrices with equal row counts horizontally.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

pub fn det(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.clone().determinant()
}

/// Submatrix with the given rows (in order) and all columns.
pub fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

pub fn select_cols(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // rightmost position that can still move
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Position of a sorted subset within [`subsets`]`(n, subset.len())`.
pub fn subset_rank(n: usize, subset: &[usize]) -> usize {
    let k = subset.len();
    let mut rank = 0u64;
    let mut prev: i64 = -1;
    for (pos, &s) in subset.iter().enumerate() {
        for skipped in (prev + 1) as usize..s {
            rank += binomial((n - skipped - 1) as i64, (k - pos - 1) as i64);
        }
        prev = s as i64;
    }
    rank as usize
}

/// Sorted complement of `subset` within `0..n`.
pub fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !subset.contains(i)).collect()
}

/// Binomial coefficient with `C(n, m) = 0` for `m < 0` or `m > n`.
///
/// Negative `n` never reaches this function in a meaningful context and is
/// answered with zero.
pub fn binomial(n: i64, m: i64) -> u64 {
    if n < 0 || m < 0 || m > n {
        return 0;
    }
    let m = m.min(n - m) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for i in 0..m {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Unit-norm representative with the first non-negligible entry positive.
pub fn normalize_homogeneous(v: &DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm == 0.0 {
        return v.clone();
    }
    let mut out = v / norm;
    let lead = out.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
    if lead < 0.0 {
        out = -out;
    }
    out
}

/// Angle between two lines through the origin, in `[0, π/2]`.
pub fn projective_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let (ua, ub) = (a / na, b / nb);
    let c = ua.dot(&ub);
    let s = (&ua - &ub * c).norm();
    s.atan2(c.abs())
}

/// Cofactor matrix, `cof[i][j] = (-1)^(i+j) det(A without row i and column j)`.
pub fn cofactors(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(n, n, |i, j| {
        let minor = a.clone().remove_row(i).remove_column(j);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * det(&minor)
    })
}

/// The `order`-th compound matrix: entry `(I, J)` is the minor on rows `I`
/// and columns `J`, with subsets in lexicographic order.
pub fn compound(a: &DMatrix<f64>, order: usize) -> DMatrix<f64> {
    let rows = subsets(a.nrows(), order);
    let cols = subsets(a.ncols(), order);
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let sub = DMatrix::from_fn(order, order, |r, c| a[(rows[i][r], cols[j][c])]);
        det(&sub)
    })
}

/// Moore–Penrose pseudo-inverse.
pub fn pseudo_inverse(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let svd = Svd::new(a);
    let smax = svd.max_singular_value();
    let mut out = DMatrix::zeros(n, m);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_tol * smax && s > 0.0 {
            out += svd.v.column(i) * svd.u.column(i).transpose() / s;
        }
    }
    out
}

/// Ratio `σ_min / σ_max` of a square or tall matrix.
pub fn inverse_condition(a: &DMatrix<f64>) -> f64 {
    let svd = Svd::new(a);
    let smax = svd.max_singular_value();
    if smax == 0.0 {
        return 0.0;
    }
    svd.smallest(0) / smax
}
