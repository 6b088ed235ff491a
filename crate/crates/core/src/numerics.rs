//! Dense complex matrix substrate.
//!
//! Every operator in the crate is a [`ComplexMatrix`] on a finite truncation.
//! Products go through `matrixmultiply`'s complex GEMM; Hermitian spectra, SVD
//! and LU solves are delegated to `nalgebra`. The matrix exponential is a
//! Padé scaling-and-squaring routine written here, and [`expm_action`] gives a
//! matrix-free Taylor evaluation of `exp(tA) v` for large superoperators.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Validating constructor used at every external boundary.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(dim_err(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(dim_err(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (k, &z) in diag.iter().enumerate() {
            m.data[k * n + k] = z;
        }
        m
    }

    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn scalar(z: C64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
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

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// `self + s·I`.
    pub fn add_identity(&self, s: C64) -> Self {
        assert!(self.is_square(), "add_identity on non-square matrix");
        let mut out = self.clone();
        for k in 0..self.rows {
            out.data[k * self.cols + k] += s;
        }
        out
    }

    /// `(A + A*)/2`, exactly Hermitian.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian_part on non-square matrix");
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in r..n {
                let z = (self[(r, c)] + self[(c, r)].conj()) * 0.5;
                out[(r, c)] = z;
                out[(c, r)] = z.conj();
            }
            out[(r, r)] = C64::new(out[(r, r)].re, 0.0);
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Checked product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, other))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix: `uᵀ A`.
    pub fn vec_mul(&self, u: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, u.len(), "vec_mul dimension mismatch");
        let mut out = vec![ZERO; self.cols];
        for (r, &ur) in u.iter().enumerate() {
            if ur == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += ur * a;
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = other.shape();
        Self::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            self[(r / r2, c / c2)] * other[(r % r2, c % c2)]
        })
    }

    /// Rows and columns both restricted to `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Result<Self> {
        if let Some(&bad) = keep.iter().find(|&&k| k >= self.rows || k >= self.cols) {
            return Err(Error::IndexOutOfRange(format!(
                "index {bad} outside {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(Self::from_fn(keep.len(), keep.len(), |r, c| {
            self[(keep[r], keep[c])]
        }))
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols);
        for r in 0..b.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(b.row(r));
        }
    }

    pub fn zero_rows(&mut self, rows: std::ops::Range<usize>) {
        for r in rows {
            for z in &mut self.data[r * self.cols..(r + 1) * self.cols] {
                *z = ZERO;
            }
        }
    }

    /// Column-stacking vectorization.
    pub fn vectorize(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> Self {
        assert_eq!(v.len(), rows * cols);
        Self::from_fn(rows, cols, |r, c| v[c * rows + r])
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

fn zip_with(a: &ComplexMatrix, b: &ComplexMatrix, f: impl Fn(C64, C64) -> C64) -> ComplexMatrix {
    assert_eq!(a.shape(), b.shape(), "elementwise op on mismatched shapes");
    ComplexMatrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "+= on mismatched shapes");
        for (x, y) in self.data.iter_mut().zip(&rhs.data) {
            *x += y;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "-= on mismatched shapes");
        for (x, y) in self.data.iter_mut().zip(&rhs.data) {
            *x -= y;
        }
    }
}

/// Panics on inner-dimension mismatch; use [`ComplexMatrix::matmul`] for a checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        gemm(self, rhs)
    }
}

fn gemm(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = ComplexMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im], matching matrixmultiply's c64.
    // Strides describe dense row-major buffers of exactly the sizes allocated above.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.data.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.data.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.data.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
    c
}

// ---------------------------------------------------------------------------
// vectors

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len(), "inner product of mismatched vectors");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn basis_vector(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

// ---------------------------------------------------------------------------
// exponential

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// of degree 3, 5, 7, 9 or 13 chosen from the 1-norm.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(dim_err(format!("expm of non-square {}x{} matrix", a.rows, a.cols)));
    }
    let n = a.rows;
    let ident = ComplexMatrix::identity(n);
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(ident);
    }

    for &(deg, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, coeffs);
            return pade_solve(&u, &v);
        }
    }

    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale_re(0.5f64.powi(s));
    let (u, v) = pade_13(&scaled);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low(a: &ComplexMatrix, b: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows;
    let a2 = a * a;
    let mut even = ComplexMatrix::identity(n).scale_re(b[0]);
    let mut odd = ComplexMatrix::identity(n).scale_re(b[1]);
    let mut pow = ComplexMatrix::identity(n);
    for k in 1..b.len() / 2 {
        pow = &pow * &a2;
        even += &pow.scale_re(b[2 * k]);
        odd += &pow.scale_re(b[2 * k + 1]);
    }
    (a * &odd, even)
}

fn pade_13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let b = &B13;
    let n = a.rows;
    let ident = ComplexMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64| -> ComplexMatrix {
        let mut m = a6.scale_re(c6);
        m += &a4.scale_re(c4);
        m += &a2.scale_re(c2);
        m
    };
    let mut u_inner = &a6 * &lin(b[13], b[11], b[9]);
    u_inner += &lin(b[7], b[5], b[3]);
    u_inner += &ident.scale_re(b[1]);
    let u = a * &u_inner;
    let mut v = &a6 * &lin(b[12], b[10], b[8]);
    v += &lin(b[6], b[4], b[2]);
    v += &ident.scale_re(b[0]);
    (u, v)
}

fn pade_solve(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = v + u;
    let q = v - u;
    solve(&q, &p)
}

/// Solves `A X = B`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows != b.rows {
        return Err(dim_err(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let lu = a.to_nalgebra().lu();
    lu.solve(&b.to_nalgebra())
        .map(|x| ComplexMatrix::from_nalgebra(&x))
        .ok_or_else(|| Error::InvalidInput("singular matrix in linear solve".into()))
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve(a, &ComplexMatrix::identity(a.rows))
}

/// `exp(t A) v` for an operator known only through its action, by a Taylor
/// series on `s` substeps with `‖tA‖₁/s ≤ 1`. `norm_one` must bound `‖A‖₁`.
pub fn expm_action(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    norm_one: f64,
    t: f64,
    v: &[C64],
) -> Vec<C64> {
    let mut x = v.to_vec();
    if t == 0.0 || norm_one == 0.0 {
        return x;
    }
    let steps = (t.abs() * norm_one).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..=60 {
            term = apply(&term);
            let f = h / k as f64;
            for z in term.iter_mut() {
                *z *= f;
            }
            for (a, b) in acc.iter_mut().zip(&term) {
                *a += b;
            }
            if vec_norm(&term) <= 1e-17 * vec_norm(&acc).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        x = acc;
    }
    x
}

// ---------------------------------------------------------------------------
// spectra and norms

fn require_square(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(dim_err(format!("{what} of non-square {}x{} matrix", a.rows, a.cols)))
    }
}

/// Ascending eigenvalues of the Hermitian part of `a`.
pub fn herm_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    require_square(a, "hermitian eigenvalues")?;
    let h = a.hermitian_part();
    let eig = SymmetricEigen::new(h.to_nalgebra());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Largest eigenvalue of `(A + A*)/2`.
pub fn herm_max_eig(a: &ComplexMatrix) -> Result<f64> {
    Ok(*herm_eigenvalues(a)?.last().unwrap_or(&0.0))
}

pub fn herm_min_eig(a: &ComplexMatrix) -> Result<f64> {
    Ok(*herm_eigenvalues(a)?.first().unwrap_or(&0.0))
}

/// Applies `f` to the spectrum of the Hermitian part of `a`.
pub fn herm_function(a: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    require_square(a, "hermitian function")?;
    let eig = SymmetricEigen::new(a.hermitian_part().to_nalgebra());
    let q = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let n = a.rows;
    let scaled = ComplexMatrix::from_fn(n, n, |r, c| q[(r, c)] * f(eig.eigenvalues[c]));
    let out = &scaled * &q.adjoint();
    Ok(out.hermitian_part())
}

/// Largest singular value.
pub fn op_norm(a: &ComplexMatrix) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    let svd = a.to_nalgebra().svd(false, false);
    svd.singular_values.iter().copied().fold(0.0, f64::max)
}

/// Entrywise product; a 1x1 factor broadcasts as a scalar.
pub fn schur_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.shape() == (1, 1) {
        return Ok(b.scale(a[(0, 0)]));
    }
    if b.shape() == (1, 1) {
        return Ok(a.scale(b[(0, 0)]));
    }
    if a.shape() != b.shape() {
        return Err(dim_err(format!(
            "schur product of {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(zip_with(a, b, |x, y| x * y))
}
