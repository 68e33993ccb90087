//! Dense complex matrices and third-order tensors.
//!
//! Indexing contract (0-based in code): a tensor of dims `(d1, d2, d3)`
//! unfolds as
//!
//! * mode 1: `(d2·d3) × d1`, element `(i, j, k)` at row `j·d3 + k`, column `i`,
//!   so a CP tensor unfolds to `(B ⊙ C)·Aᵀ`;
//! * mode 2: `(d3·d1) × d2`, element at row `k·d1 + i`, column `j`, giving
//!   `(C ⊙ A)·Bᵀ`;
//! * mode 3: `(d1·d2) × d3`, element at row `i·d2 + j`, column `k`, giving
//!   `(A ⊙ B)·Cᵀ`.
//!
//! Every other module relies on this single convention.

use std::ops::{Index, IndexMut, Range};

use num_complex::Complex;

use crate::error::{shape_err, Error, Result};
use crate::scalar::{cone, czero, Real};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                "CMatrix::new",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(shape_err("CMatrix::from_rows", "ragged rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(shape_err("CMatrix::from_columns", "ragged columns"));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[Complex<T>]) {
        assert_eq!(values.len(), self.rows, "column length");
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn diag(&self) -> Vec<Complex<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Rows `range` as a new matrix.
    pub fn row_range(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.rows, "row range out of bounds");
        Self {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(shape_err(
                "vstack",
                format!("{} vs {} columns", self.cols, other.cols),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(shape_err(
                "matmul",
                format!(
                    "{}x{} times {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (p, &a) in self.row(i).iter().enumerate() {
                if a == czero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(shape_err(
                op,
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frob_norm(&self) -> T {
        norm2(&self.data)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean norm of a complex slice.
pub fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    // scaled accumulation so tiny or huge entries don't under/overflow
    let scale = v
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(T::zero(), T::max);
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let sum = v
        .iter()
        .map(|z| (*z / scale).norm_sqr())
        .fold(T::zero(), |acc, x| acc + x);
    scale * sum.sqrt()
}

/// `Σ conj(x_i)·y_i`.
pub fn inner<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    x.iter()
        .zip(y)
        .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
}

/// Column-wise Kronecker product: column `k` is `a[:,k] ⊗ b[:,k]`.
pub fn khatri_rao<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    if a.cols() != b.cols() {
        return Err(shape_err(
            "khatri_rao",
            format!("{} vs {} columns", a.cols(), b.cols()),
        ));
    }
    let (m, n, k) = (a.rows(), b.rows(), a.cols());
    let mut out = CMatrix::zeros(m * n, k);
    for i in 0..m {
        for j in 0..n {
            for r in 0..k {
                out[(i * n + j, r)] = a[(i, r)] * b[(j, r)];
            }
        }
    }
    Ok(out)
}

/// Dense complex third-order tensor, row-major in `(i, j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    dims: (usize, usize, usize),
    data: Vec<Complex<T>>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(d1: usize, d2: usize, d3: usize) -> Self {
        Self {
            dims: (d1, d2, d3),
            data: vec![czero(); d1 * d2 * d3],
        }
    }

    pub fn from_vec(dims: (usize, usize, usize), data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dims.0 * dims.1 * dims.2 {
            return Err(shape_err(
                "Tensor3::from_vec",
                format!("{} entries for dims {:?}", data.len(), dims),
            ));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(
        dims: (usize, usize, usize),
        mut f: impl FnMut(usize, usize, usize) -> Complex<T>,
    ) -> Self {
        let (d1, d2, d3) = dims;
        let mut data = Vec::with_capacity(d1 * d2 * d3);
        for i in 0..d1 {
            for j in 0..d2 {
                for k in 0..d3 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn dim(&self, mode: usize) -> Result<usize> {
        match mode {
            1 => Ok(self.dims.0),
            2 => Ok(self.dims.1),
            3 => Ok(self.dims.2),
            m => Err(Error::InvalidMode(m)),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims.1 + j) * self.dims.2 + k
    }

    /// Matricization along `mode` (1, 2 or 3); see the module docs for the layout.
    pub fn unfold(&self, mode: usize) -> Result<CMatrix<T>> {
        let (d1, d2, d3) = self.dims;
        let m = match mode {
            1 => CMatrix::from_fn(d2 * d3, d1, |r, i| self[(i, r / d3, r % d3)]),
            2 => CMatrix::from_fn(d3 * d1, d2, |r, j| self[(r % d1, j, r / d1)]),
            3 => CMatrix::from_fn(d1 * d2, d3, |r, k| self[(r / d2, r % d2, k)]),
            other => return Err(Error::InvalidMode(other)),
        };
        Ok(m)
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(m: &CMatrix<T>, mode: usize, dims: (usize, usize, usize)) -> Result<Self> {
        let (d1, d2, d3) = dims;
        let expected = match mode {
            1 => (d2 * d3, d1),
            2 => (d3 * d1, d2),
            3 => (d1 * d2, d3),
            other => return Err(Error::InvalidMode(other)),
        };
        if m.shape() != expected {
            return Err(shape_err(
                "fold",
                format!("mode-{mode} matrix {:?}, expected {:?}", m.shape(), expected),
            ));
        }
        Ok(Self::from_fn(dims, |i, j, k| match mode {
            1 => m[(j * d3 + k, i)],
            2 => m[(k * d1 + i, j)],
            _ => m[(i * d2 + j, k)],
        }))
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        if self.dims != other.dims {
            return Err(shape_err(
                op,
                format!("{:?} vs {:?}", self.dims, other.dims),
            ));
        }
        Ok(Self {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn frob_norm(&self) -> T {
        norm2(&self.data)
    }

    /// Mean of `|x|²` over all entries (zero for an empty tensor).
    pub fn mean_power(&self) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        let sum = self
            .data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr());
        sum / T::from_usize(self.data.len()).unwrap()
    }

    /// Sub-tensor keeping indices `range` along `mode`.
    pub fn slice_mode(&self, mode: usize, range: Range<usize>) -> Result<Self> {
        let (d1, d2, d3) = self.dims;
        let len = self.dim(mode)?;
        if range.end > len || range.start > range.end {
            return Err(shape_err(
                "slice_mode",
                format!("range {range:?} outside mode-{mode} size {len}"),
            ));
        }
        let (s, n) = (range.start, range.len());
        Ok(match mode {
            1 => Self::from_fn((n, d2, d3), |i, j, k| self[(i + s, j, k)]),
            2 => Self::from_fn((d1, n, d3), |i, j, k| self[(i, j + s, k)]),
            _ => Self::from_fn((d1, d2, n), |i, j, k| self[(i, j, k + s)]),
        })
    }

    /// Concatenation along `mode`: `self` first, then `other`.
    pub fn concat(&self, other: &Self, mode: usize) -> Result<Self> {
        let (a, b) = (self.dims, other.dims);
        let compatible = match mode {
            1 => a.1 == b.1 && a.2 == b.2,
            2 => a.0 == b.0 && a.2 == b.2,
            3 => a.0 == b.0 && a.1 == b.1,
            other => return Err(Error::InvalidMode(other)),
        };
        if !compatible {
            return Err(shape_err(
                "concat",
                format!("{a:?} and {b:?} along mode {mode}"),
            ));
        }
        Ok(match mode {
            1 => Self::from_fn((a.0 + b.0, a.1, a.2), |i, j, k| {
                if i < a.0 {
                    self[(i, j, k)]
                } else {
                    other[(i - a.0, j, k)]
                }
            }),
            2 => Self::from_fn((a.0, a.1 + b.1, a.2), |i, j, k| {
                if j < a.1 {
                    self[(i, j, k)]
                } else {
                    other[(i, j - a.1, k)]
                }
            }),
            _ => Self::from_fn((a.0, a.1, a.2 + b.2), |i, j, k| {
                if k < a.2 {
                    self[(i, j, k)]
                } else {
                    other[(i, j, k - a.2)]
                }
            }),
        })
    }

    /// Mode-3 fiber at `(i, j)`.
    pub fn fiber3(&self, i: usize, j: usize) -> &[Complex<T>] {
        let start = self.offset(i, j, 0);
        &self.data[start..start + self.dims.2]
    }

    pub fn fiber3_mut(&mut self, i: usize, j: usize) -> &mut [Complex<T>] {
        let start = self.offset(i, j, 0);
        let d3 = self.dims.2;
        &mut self.data[start..start + d3]
    }
}

impl<T: Real> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.dims.0 && j < self.dims.1 && k < self.dims.2);
        &self.data[self.offset(i, j, k)]
    }
}

impl<T: Real> IndexMut<(usize, usize, usize)> for Tensor3<T> {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.dims.0 && j < self.dims.1 && k < self.dims.2);
        let o = self.offset(i, j, k);
        &mut self.data[o]
    }
}

/// Tensor with entries `Σ_r a[i,r]·b[j,r]·c[k,r]`.
pub fn cp_construct<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, c: &CMatrix<T>) -> Result<Tensor3<T>> {
    let k = a.cols();
    if b.cols() != k || c.cols() != k {
        return Err(shape_err(
            "cp_construct",
            format!("column counts {}, {}, {}", k, b.cols(), c.cols()),
        ));
    }
    let dims = (a.rows(), b.rows(), c.rows());
    let mut t = Tensor3::zeros(dims.0, dims.1, dims.2);
    let mut ab = vec![czero(); k];
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            for (r, v) in ab.iter_mut().enumerate() {
                *v = a[(i, r)] * b[(j, r)];
            }
            for (q, out) in t.fiber3_mut(i, j).iter_mut().enumerate() {
                *out = c.row(q)
                    .iter()
                    .zip(&ab)
                    .fold(czero(), |acc, (&cv, &abv)| acc + abv * cv);
            }
        }
    }
    Ok(t)
}
