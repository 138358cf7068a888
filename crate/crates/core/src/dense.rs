//! Small dense n-way arrays, stored row-major (last index fastest).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        DenseTensor {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} need {} entries, got {}",
                dims,
                len,
                data.len()
            )));
        }
        Ok(DenseTensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = DenseTensor::zeros(dims);
        let mut idx = vec![0; dims.len()];
        for flat in 0..t.data.len() {
            t.unravel_into(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn unravel_into(&self, mut flat: usize, idx: &mut [usize]) {
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DenseTensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Unit Frobenius norm copy.
    pub fn normalized(&self) -> Result<DenseTensor> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroTensor);
        }
        Ok(self.scale(1.0 / n))
    }

    /// Column position of a multi-index in the `axis` flattening.
    ///
    /// The remaining axes are taken cyclically starting after `axis`, with the
    /// first of them varying fastest.
    pub fn flattening_column(&self, axis: usize, idx: &[usize]) -> usize {
        let n = self.dims.len();
        let mut col = 0;
        let mut stride = 1;
        for step in 1..n {
            let b = (axis + step) % n;
            col += idx[b] * stride;
            stride *= self.dims[b];
        }
        col
    }

    /// Mode-`axis` flattening, `n_axis × Π_{b≠axis} n_b`.
    pub fn flattening(&self, axis: usize) -> DMatrix<f64> {
        let rows = self.dims[axis];
        let cols = self.len() / rows.max(1);
        let mut m = DMatrix::zeros(rows, cols);
        let mut idx = vec![0; self.order()];
        for flat in 0..self.data.len() {
            self.unravel_into(flat, &mut idx);
            m[(idx[axis], self.flattening_column(axis, &idx))] = self.data[flat];
        }
        m
    }

    /// Mode product: contracts axis `axis` with the columns of `m`
    /// (`m` is `p × n_axis`; the result has `p` along `axis`).
    pub fn mode_product(&self, axis: usize, m: &DMatrix<f64>) -> Result<DenseTensor> {
        if m.ncols() != self.dims[axis] {
            return Err(Error::ShapeMismatch(format!(
                "mode {} has size {}, matrix has {} columns",
                axis,
                self.dims[axis],
                m.ncols()
            )));
        }
        let mut dims = self.dims.clone();
        dims[axis] = m.nrows();
        let mut out = DenseTensor::zeros(&dims);
        let mut idx = vec![0; self.order()];
        for flat in 0..self.data.len() {
            let x = self.data[flat];
            if x == 0.0 {
                continue;
            }
            self.unravel_into(flat, &mut idx);
            let src = idx[axis];
            for p in 0..m.nrows() {
                idx[axis] = p;
                let o = out.offset(&idx);
                out.data[o] += m[(p, src)] * x;
            }
        }
        Ok(out)
    }

    /// Keep only the listed positions along `axis`.
    pub fn select(&self, axis: usize, keep: &[usize]) -> DenseTensor {
        let mut dims = self.dims.clone();
        dims[axis] = keep.len();
        DenseTensor::from_fn(&dims, |idx| {
            let mut src = idx.to_vec();
            src[axis] = keep[idx[axis]];
            self.get(&src)
        })
    }

    /// Positions along `axis` whose slice is not identically zero.
    pub fn nonzero_slices(&self, axis: usize, abs_tol: f64) -> Vec<usize> {
        let mut nonzero = vec![false; self.dims[axis]];
        let mut idx = vec![0; self.order()];
        for flat in 0..self.data.len() {
            if self.data[flat].abs() > abs_tol {
                self.unravel_into(flat, &mut idx);
                nonzero[idx[axis]] = true;
            }
        }
        (0..self.dims[axis]).filter(|&i| nonzero[i]).collect()
    }

    /// Rank-one tensor `v_1 ⊗ … ⊗ v_n`.
    pub fn outer(vectors: &[Vec<f64>]) -> DenseTensor {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        DenseTensor::from_fn(&dims, |idx| {
            idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
        })
    }
}
