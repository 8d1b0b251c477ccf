//! Dense complex vectors and matrices sized for augmented state spaces.
//!
//! Everything here is small (state dimensions of a handful of entries), so the
//! storage is a flat row-major `Vec` and the kernels are plain loops. Loop order
//! is fixed and documented on each kernel so results are reproducible bit for
//! bit across runs.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::LinalgError;

pub type Complex = Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);

/// Relative tolerance used when checking Hermitian or symmetric structure.
pub const STRUCTURE_TOLERANCE: f64 = 1e-9;

/// Scale of the diagonal jitter added to near-singular Hermitian systems,
/// relative to `trace(A) / n`.
pub const JITTER_SCALE: f64 = 1e-12;

const PIVOT_TOLERANCE: f64 = 1e-14;

fn all_finite(values: &[Complex]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A dense complex column vector with at least one entry.
#[derive(Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex>) -> Result<Self, LinalgError> {
        if data.is_empty() {
            return Err(LinalgError::Empty);
        }
        if !all_finite(&data) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "vector length must be positive");
        Self { data: vec![ZERO; len] }
    }

    pub fn from_real(values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(values.iter().map(|&v| Complex::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn conjugate(&self) -> Self {
        Self { data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self { data: self.data.iter().map(|&z| z * factor).collect() }
    }

    /// Elements `start..start + len`.
    pub fn segment(&self, start: usize, len: usize) -> Self {
        Self { data: self.data[start..start + len].to_vec() }
    }

    pub fn concat(parts: &[&ComplexVector]) -> Result<Self, LinalgError> {
        let data: Vec<Complex> = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Self::new(data)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The vector as an `n x 1` matrix.
    pub fn to_column(&self) -> ComplexMatrix {
        ComplexMatrix { rows: self.len(), cols: 1, data: self.data.clone() }
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.iter()).finish()
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex;
    fn index(&self, i: usize) -> &Complex {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex {
        &mut self.data[i]
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.len(), rhs.len(), "vector length mismatch");
        ComplexVector { data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.len(), rhs.len(), "vector length mismatch");
        ComplexVector { data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// `[x; conj(x)]`, stored as the full `2L` vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedVector {
    full: ComplexVector,
}

impl AugmentedVector {
    /// The top half, i.e. the original vector.
    pub fn base(&self) -> ComplexVector {
        self.full.segment(0, self.full.len() / 2)
    }

    pub fn full(&self) -> &ComplexVector {
        &self.full
    }

    pub fn into_full(self) -> ComplexVector {
        self.full
    }
}

pub fn augment_vector(x: &ComplexVector) -> AugmentedVector {
    let mut data = Vec::with_capacity(2 * x.len());
    data.extend_from_slice(x.as_slice());
    data.extend(x.iter().map(|z| z.conj()));
    AugmentedVector { full: ComplexVector { data } }
}

/// Dense row-major complex matrix, at least `1 x 1`.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                op: "new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        if !all_finite(&data) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Ragged);
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<Complex>> =
            rows.iter().map(|row| row.iter().map(|&v| Complex::new(v, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar_identity(n, ONE)
    }

    pub fn scalar_identity(n: usize, value: Complex) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = value;
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// A `1 x 1` matrix.
    pub fn scalar(value: Complex) -> Self {
        Self { rows: 1, cols: 1, data: vec![value] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn row(&self, r: usize) -> &[Complex] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        ComplexVector { data: (0..self.rows).map(|r| self[(r, c)]).collect() }
    }

    pub fn diagonal(&self) -> Vec<Complex> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> Complex {
        self.diagonal().into_iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn conjugate(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn hermitian_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * factor).collect() }
    }

    /// `self * rhs`, accumulating `sum_k a[i][k] * b[k][j]` in increasing `k`
    /// from zero.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            for j in 0..rhs.cols {
                let mut acc = ZERO;
                for (k, a) in lhs_row.iter().enumerate() {
                    acc += a * rhs.data[k * rhs.cols + j];
                }
                out.data[i * rhs.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Matrix-vector product with the same accumulation order as [`Self::matmul`].
    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        let data = (0..self.rows)
            .map(|i| {
                let mut acc = ZERO;
                for (a, x) in self.row(i).iter().zip(v.iter()) {
                    acc += a * x;
                }
                acc
            })
            .collect();
        Ok(ComplexVector { data })
    }

    pub fn try_add(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &ComplexMatrix,
        op: &'static str,
        f: impl Fn(Complex, Complex) -> Complex,
    ) -> Result<ComplexMatrix, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch { op, left: self.shape(), right: rhs.shape() });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out[(r, c)] = self[(r0 + r, c0 + c)];
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(r0 + r, c0 + c)] = block[(r, c)];
            }
        }
    }

    /// `[[tl, tr], [bl, br]]`.
    pub fn from_quadrants(
        tl: &ComplexMatrix,
        tr: &ComplexMatrix,
        bl: &ComplexMatrix,
        br: &ComplexMatrix,
    ) -> Result<ComplexMatrix, LinalgError> {
        if tl.rows != tr.rows || bl.rows != br.rows || tl.cols != bl.cols || tr.cols != br.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "from_quadrants",
                left: tl.shape(),
                right: br.shape(),
            });
        }
        let mut out = Self::zeros(tl.rows + bl.rows, tl.cols + tr.cols);
        out.set_block(0, 0, tl);
        out.set_block(0, tl.cols, tr);
        out.set_block(tl.rows, 0, bl);
        out.set_block(tl.rows, tl.cols, br);
        Ok(out)
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&ComplexMatrix]) -> Result<ComplexMatrix, LinalgError> {
        let first = parts.first().ok_or(LinalgError::Empty)?;
        let cols = first.cols;
        if let Some(bad) = parts.iter().find(|p| p.cols != cols) {
            return Err(LinalgError::DimensionMismatch {
                op: "vstack",
                left: first.shape(),
                right: bad.shape(),
            });
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(Self { rows, cols, data })
    }

    /// Largest entry of `|A - A^H|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows.min(self.cols) {
            for c in 0..self.cols.min(self.rows) {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry of `|A - A^T|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows.min(self.cols) {
            for c in 0..self.cols.min(self.rows) {
                worst = worst.max((self[(r, c)] - self[(c, r)]).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermitian_defect() <= STRUCTURE_TOLERANCE * self.max_abs()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.symmetry_defect() <= STRUCTURE_TOLERANCE * self.max_abs()
    }

    /// `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(r, c)] = (self[(r, c)] + self[(c, r)].conj()) * 0.5;
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;
    fn index(&self, (r, c): (usize, usize)) -> &Complex {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

// Operator forms panic on dimension mismatch; the fallible forms are
// `matmul`, `try_add` and `try_sub`.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Mul<&ComplexVector> for &ComplexMatrix {
    type Output = ComplexVector;
    fn mul(self, rhs: &ComplexVector) -> ComplexVector {
        self.mul_vec(rhs).expect("matrix-vector dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum dimension mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference dimension mismatch")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    a.matmul(b)
}

pub fn hermitian_transpose(a: &ComplexMatrix) -> ComplexMatrix {
    a.hermitian_transpose()
}

pub fn conjugate(a: &ComplexMatrix) -> ComplexMatrix {
    a.conjugate()
}

/// Augmented covariance `[[R, P], [conj(P), conj(R)]]` from a covariance `R`
/// and a pseudocovariance `P`.
pub fn augment_covariance(
    covariance: &ComplexMatrix,
    pseudo: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    if !covariance.is_square() || covariance.shape() != pseudo.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "augment_covariance",
            left: covariance.shape(),
            right: pseudo.shape(),
        });
    }
    if !covariance.is_hermitian() {
        return Err(LinalgError::NotHermitian { defect: covariance.hermitian_defect() });
    }
    if !pseudo.is_symmetric() {
        return Err(LinalgError::NotSymmetric { defect: pseudo.symmetry_defect() });
    }
    ComplexMatrix::from_quadrants(covariance, pseudo, &pseudo.conjugate(), &covariance.conjugate())
}

/// Result of [`solve_hermitian`].
#[derive(Clone, Debug)]
pub struct HermitianSolution {
    pub solution: ComplexMatrix,
    /// Diagonal loading added before the successful factorization, if any.
    pub jitter: Option<f64>,
}

enum Factorization {
    Cholesky(ComplexMatrix),
    NearSingular { condition_estimate: f64 },
    Indefinite,
}

/// Lower Cholesky factor with rows processed top to bottom and inner sums
/// accumulated in increasing column order.
fn cholesky(a: &ComplexMatrix) -> Factorization {
    let n = a.rows;
    let scale = a.diagonal().iter().map(|d| d.re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut l = ComplexMatrix::zeros(n, n);
    let mut max_pivot: f64 = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= PIVOT_TOLERANCE * scale {
            if d.abs() <= PIVOT_TOLERANCE * scale || d > 0.0 {
                return Factorization::NearSingular {
                    condition_estimate: max_pivot.max(scale) / d.abs().max(f64::MIN_POSITIVE),
                };
            }
            return Factorization::Indefinite;
        }
        max_pivot = max_pivot.max(d);
        let ljj = d.sqrt();
        l[(j, j)] = Complex::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Factorization::Cholesky(l)
}

/// Solves `L L^H X = B` by forward then backward substitution, column by column.
fn cholesky_solve(l: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows;
    let mut x = b.clone();
    for col in 0..b.cols {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Gaussian elimination with partial pivoting; used for indefinite Hermitian
/// systems where Cholesky does not apply.
fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut max_pivot: f64 = 0.0;
    for p in 0..n {
        let (best, mag) =
            (p..n)
                .map(|r| (r, m[(r, p)].norm()))
                .fold((p, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if mag <= PIVOT_TOLERANCE * scale {
            return Err(LinalgError::Singular {
                condition_estimate: max_pivot.max(scale) / mag.max(f64::MIN_POSITIVE),
            });
        }
        max_pivot = max_pivot.max(mag);
        if best != p {
            for c in 0..n {
                let tmp = m[(p, c)];
                m[(p, c)] = m[(best, c)];
                m[(best, c)] = tmp;
            }
            for c in 0..x.cols {
                let tmp = x[(p, c)];
                x[(p, c)] = x[(best, c)];
                x[(best, c)] = tmp;
            }
        }
        for r in (p + 1)..n {
            let factor = m[(r, p)] / m[(p, p)];
            for c in p..n {
                let v = m[(p, c)];
                m[(r, c)] -= factor * v;
            }
            for c in 0..x.cols {
                let v = x[(p, c)];
                x[(r, c)] -= factor * v;
            }
        }
    }
    for col in 0..x.cols {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= m[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / m[(i, i)];
        }
    }
    Ok(x)
}

/// Solves `A X = B` for Hermitian `A`.
///
/// Positive definite systems go through Cholesky. When the factorization hits a
/// vanishing pivot the diagonal is loaded with `1e-12 * trace(A) / n` and the
/// factorization is retried once; the loading is reported in the result.
/// Clearly indefinite systems fall back to pivoted elimination.
pub fn solve_hermitian(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<HermitianSolution, LinalgError> {
    if !a.is_square() || a.rows != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_hermitian",
            left: a.shape(),
            right: b.shape(),
        });
    }
    if !a.is_hermitian() {
        return Err(LinalgError::NotHermitian { defect: a.hermitian_defect() });
    }
    match cholesky(a) {
        Factorization::Cholesky(l) => Ok(HermitianSolution { solution: cholesky_solve(&l, b), jitter: None }),
        Factorization::Indefinite => Ok(HermitianSolution { solution: lu_solve(a, b)?, jitter: None }),
        Factorization::NearSingular { condition_estimate } => {
            let n = a.rows as f64;
            let jitter = JITTER_SCALE * a.trace().re.abs() / n;
            if jitter == 0.0 {
                return lu_solve(a, b).map(|solution| HermitianSolution { solution, jitter: None });
            }
            let mut loaded = a.clone();
            for i in 0..a.rows {
                loaded[(i, i)] += jitter;
            }
            match cholesky(&loaded) {
                Factorization::Cholesky(l) => {
                    Ok(HermitianSolution { solution: cholesky_solve(&l, b), jitter: Some(jitter) })
                }
                Factorization::Indefinite => {
                    lu_solve(a, b).map(|solution| HermitianSolution { solution, jitter: None })
                }
                Factorization::NearSingular { .. } => Err(LinalgError::Singular { condition_estimate }),
            }
        }
    }
}

/// True when `A + 1e-10 * max|diag| * I` admits a Cholesky factorization,
/// i.e. `A` is Hermitian positive semidefinite up to rounding.
pub fn is_positive_semidefinite(a: &ComplexMatrix) -> bool {
    if !a.is_hermitian() {
        return false;
    }
    let scale = a.diagonal().iter().map(|d| d.re.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return a.max_abs() == 0.0;
    }
    let mut loaded = a.clone();
    for i in 0..a.rows {
        loaded[(i, i)] += 1e-10 * scale;
    }
    matches!(cholesky(&loaded), Factorization::Cholesky(_))
}

/// Inverse of a Hermitian matrix via [`solve_hermitian`].
pub fn invert_hermitian(a: &ComplexMatrix) -> Result<HermitianSolution, LinalgError> {
    solve_hermitian(a, &ComplexMatrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn augment_vector_examples() {
        let a = augment_vector(&ComplexVector::new(vec![c(1.0, 1.0)]).unwrap());
        assert_eq!(a.full().as_slice(), &[c(1.0, 1.0), c(1.0, -1.0)]);
        let z = augment_vector(&ComplexVector::zeros(2));
        assert_eq!(z.full().as_slice(), &[ZERO; 4]);
        let b = augment_vector(&ComplexVector::new(vec![c(2.0, 0.0), c(0.0, -3.0)]).unwrap());
        assert_eq!(b.full().as_slice(), &[c(2.0, 0.0), c(0.0, -3.0), c(2.0, 0.0), c(0.0, 3.0)]);
        assert_eq!(b.base().as_slice(), &[c(2.0, 0.0), c(0.0, -3.0)]);
    }

    #[test]
    fn vector_rejects_empty_and_non_finite() {
        assert_eq!(ComplexVector::new(vec![]), Err(LinalgError::Empty));
        assert_eq!(ComplexVector::new(vec![c(f64::NAN, 0.0)]), Err(LinalgError::NonFinite));
        assert!(ComplexMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn augment_covariance_examples() {
        let m =
            augment_covariance(&ComplexMatrix::scalar(c(1.0, 0.0)), &ComplexMatrix::scalar(ZERO)).unwrap();
        assert_eq!(m, ComplexMatrix::identity(2));

        let m = augment_covariance(&ComplexMatrix::scalar(c(2.0, 0.0)), &ComplexMatrix::scalar(c(0.0, 1.0)))
            .unwrap();
        let expected =
            ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]])
                .unwrap();
        assert_eq!(m, expected);

        let m =
            augment_covariance(&ComplexMatrix::identity(2), &ComplexMatrix::scalar_identity(2, c(0.5, 0.0)))
                .unwrap();
        assert_eq!(m.shape(), (4, 4));
        assert_eq!(m.block(0, 2, 2, 2), ComplexMatrix::scalar_identity(2, c(0.5, 0.0)));
        assert_eq!(m.block(2, 0, 2, 2), ComplexMatrix::scalar_identity(2, c(0.5, 0.0)));
        assert_eq!(m.block(0, 0, 2, 2), ComplexMatrix::identity(2));
        assert!(m.is_hermitian());
    }

    #[test]
    fn augment_covariance_errors() {
        let r = ComplexMatrix::identity(2);
        let p = ComplexMatrix::identity(3);
        assert!(matches!(augment_covariance(&r, &p), Err(LinalgError::DimensionMismatch { .. })));
        let not_herm =
            ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]])
                .unwrap();
        assert!(matches!(
            augment_covariance(&not_herm, &ComplexMatrix::zeros(2, 2)),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn hermitian_tolerance_ignores_rounding_noise() {
        let mut m = ComplexMatrix::identity(2).scale(c(3.0, 0.0));
        m[(0, 1)] = c(1.0, 1e-12);
        m[(1, 0)] = c(1.0, 0.0);
        assert!(m.is_hermitian());
        m[(0, 1)] = c(1.0, 1e-6);
        assert!(!m.is_hermitian());
    }

    #[test]
    fn solve_identity_and_scaled_identity() {
        let b = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(-3.0, 0.5)], vec![c(0.0, -1.0), c(4.0, 4.0)]])
            .unwrap();
        let s = solve_hermitian(&ComplexMatrix::identity(2), &b).unwrap();
        assert_eq!(s.solution, b);
        assert!(s.jitter.is_none());

        let s = solve_hermitian(&ComplexMatrix::scalar_identity(3, c(2.0, 0.0)), &ComplexMatrix::identity(3))
            .unwrap();
        assert!((&s.solution - &ComplexMatrix::scalar_identity(3, c(0.5, 0.0))).max_abs() < 1e-15);
    }

    #[test]
    fn solve_two_by_two_matches_closed_form_inverse() {
        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]])
            .unwrap();
        // [[a, b], [c, d]]^-1 = [[d, -b], [-c, a]] / (ad - bc)
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let oracle = ComplexMatrix::from_rows(&[
            vec![a[(1, 1)] / det, -a[(0, 1)] / det],
            vec![-a[(1, 0)] / det, a[(0, 0)] / det],
        ])
        .unwrap();
        let inv = invert_hermitian(&a).unwrap().solution;
        assert!((&inv - &oracle).max_abs() < 1e-15);
    }

    #[test]
    fn near_singular_solve_applies_jitter() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let s = solve_hermitian(&a, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(s.jitter, Some(1e-12));
        assert!(s.solution.is_finite());
    }

    #[test]
    fn zero_matrix_is_unrecoverable() {
        let err = solve_hermitian(&ComplexMatrix::zeros(2, 2), &ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, LinalgError::Singular { .. }));
    }

    #[test]
    fn indefinite_hermitian_solves_through_pivoting() {
        let a = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 1.0)], vec![c(1.0, -1.0), c(-2.0, 0.0)]])
            .unwrap();
        let b = ComplexMatrix::identity(2);
        let x = solve_hermitian(&a, &b).unwrap().solution;
        assert!((&(&a * &x) - &b).max_abs() < 1e-14);
    }

    #[test]
    fn basic_algebra_identities() {
        let j = ComplexMatrix::scalar(c(0.0, 1.0));
        assert_eq!(j.hermitian_transpose(), ComplexMatrix::scalar(c(0.0, -1.0)));
        let a = ComplexMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(3.0, -1.0), c(0.0, 0.5)],
            vec![c(-2.0, 0.0), c(1.0, 1.0), c(4.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(&ComplexMatrix::identity(2) * &a, a);
        assert_eq!(a.conjugate().conjugate(), a);
        assert!(matches!(matmul(&a, &a), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn vstack_and_blocks() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0]]).unwrap();
        let b = ComplexMatrix::from_real_rows(&[&[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        let s = ComplexMatrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(s.shape(), (3, 2));
        assert_eq!(s.block(1, 0, 2, 2), b);
        assert!(ComplexMatrix::vstack(&[&a, &ComplexMatrix::identity(3)]).is_err());
    }
}
