use std::fmt;
use std::ops::{Index, IndexMut};

use super::complex::{Complex, C64};
use super::error::NumericsError;
use super::precision::Precision;
use super::real::Real;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> fmt::Debug for CMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)].to_c64();
                    format!("{:.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<R: Real> Index<(usize, usize)> for CMatrix<R> {
    type Output = Complex<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(d: &[Complex<R>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, z) in d.iter().enumerate() {
            m[(i, i)] = z.clone();
        }
        m
    }

    pub fn from_c64(m: &CMatrix<f64>) -> Self {
        Self::from_fn(m.rows, m.cols, |i, j| Complex::from_c64(m[(i, j)].clone()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex<R>] {
        &self.data
    }

    /// Precision level of the stored entries.
    pub fn precision(&self) -> Precision {
        self.data.first().map(|z| z.re.precision()).unwrap_or_else(|| R::zero().precision())
    }

    pub fn to_c64(&self) -> CMatrix<f64> {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_c64())
    }

    /// Re-rounds every entry to another precision level.
    pub fn convert<S: Real>(&self) -> CMatrix<S> {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let z = &self[(i, j)];
            Complex::new(z.re.convert(), z.im.convert())
        })
    }

    pub fn map(&self, f: impl Fn(&Complex<R>) -> Complex<R>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(Complex::is_finite)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: &Complex<R>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: &R) -> Self {
        self.map(|z| z.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// self += s * other
    pub fn axpy(&mut self, s: &Complex<R>, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy: shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !b.is_zero() {
                a.mul_add_assign(s, b);
            }
        }
    }

    pub fn add_diagonal(&mut self, s: &Complex<R>) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[k * other.cols + j];
                    if !b.is_zero() {
                        out.data[i * other.cols + j].mul_add_assign(a, b);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::zero();
                for (j, x) in v.iter().enumerate() {
                    acc.mul_add_assign(&self[(i, j)], x);
                }
                acc
            })
            .collect()
    }

    pub fn trace(&self) -> Complex<R> {
        let mut t = Complex::zero();
        for i in 0..self.rows.min(self.cols) {
            t += &self[(i, i)];
        }
        t
    }

    /// tr(self · other) without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Complex<R> {
        assert_eq!((self.cols, self.rows), (other.rows, other.cols), "trace_of_product: shape mismatch");
        let mut t = Complex::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                t.mul_add_assign(&self[(i, k)], &other[(k, i)]);
            }
        }
        t
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn column(&self, j: usize) -> Vec<Complex<R>> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex<R>]) {
        for (i, z) in v.iter().enumerate() {
            self[(i, j)] = z.clone();
        }
    }

    /// max_ij |a_ij|₁
    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, z| R::max_of(m, z.abs1()))
    }

    /// Maximum column sum of |a_ij|₁ (a norm equivalent to the 1-norm).
    pub fn norm1(&self) -> R {
        (0..self.cols).map(|j| (0..self.rows).fold(R::zero(), |s, i| s + self[(i, j)].abs1())).fold(R::zero(), R::max_of)
    }

    pub fn norm_fro(&self) -> R {
        self.data.iter().fold(R::zero(), |s, z| s + z.norm_sqr()).sqrt()
    }

    /// log2 of the largest entry magnitude; robust for huge multiprecision entries.
    pub fn log2_max_abs(&self) -> f64 {
        self.data.iter().map(Complex::log2_abs).fold(f64::NEG_INFINITY, f64::max)
    }

    /// max |a - b| / max |b|, as log2 (−inf when identical).
    pub fn log2_rel_diff(&self, reference: &Self) -> f64 {
        self.sub(reference).log2_max_abs() - reference.log2_max_abs()
    }

    pub fn rel_diff(&self, reference: &Self) -> f64 {
        self.log2_rel_diff(reference).exp2()
    }

    pub fn lu(&self) -> Result<Lu<R>, NumericsError> {
        Lu::factor(self)
    }

    pub fn inverse(&self) -> Result<Self, NumericsError> {
        Ok(self.lu()?.inverse())
    }

    /// Determinant; zero for exactly singular input.
    pub fn det(&self) -> Complex<R> {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => Complex::zero(),
        }
    }

    pub fn solve(&self, b: &[Complex<R>]) -> Result<Vec<Complex<R>>, NumericsError> {
        Ok(self.lu()?.solve(b))
    }
}

impl CMatrix<f64> {
    pub fn from_rows_c64(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        CMatrix::from_fn(r, c, |i, j| rows[i][j].clone())
    }
}

impl<R: Real> std::ops::Mul for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn mul(self, rhs: &CMatrix<R>) -> CMatrix<R> {
        self.matmul(rhs)
    }
}

/// LU factorization with partial pivoting, PA = LU.
#[derive(Clone, Debug)]
pub struct Lu<R: Real> {
    lu: CMatrix<R>,
    perm: Vec<usize>,
    odd: bool,
}

impl<R: Real> Lu<R> {
    pub fn factor(a: &CMatrix<R>) -> Result<Self, NumericsError> {
        if !a.is_square() {
            return Err(NumericsError::Dimension(format!("LU of {}x{} matrix", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs1();
            for i in k + 1..n {
                let v = lu[(i, k)].abs1();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.is_zero() || !best.is_finite() {
                return Err(NumericsError::Singular { column: k, pivot: best.to_f64() });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let pivot_inv = lu[(k, k)].inv();
            for i in k + 1..n {
                if lu[(i, k)].is_zero() {
                    continue;
                }
                let l = &lu[(i, k)] * &pivot_inv;
                for j in k + 1..n {
                    let u = lu[(k, j)].clone();
                    if !u.is_zero() {
                        let prod = &l * &u;
                        lu[(i, j)] -= &prod;
                    }
                }
                lu[(i, k)] = l;
            }
        }
        Ok(Self { lu, perm, odd })
    }

    pub fn det(&self) -> Complex<R> {
        let mut d = Complex::one();
        for i in 0..self.lu.rows {
            d *= &self.lu[(i, i)];
        }
        if self.odd {
            -d
        } else {
            d
        }
    }

    pub fn solve(&self, b: &[Complex<R>]) -> Vec<Complex<R>> {
        let n = self.lu.rows;
        let mut x: Vec<Complex<R>> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = &self.lu[(i, j)] * &x[j];
                x[i] -= &t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = &self.lu[(i, j)] * &x[j];
                x[i] -= &t;
            }
            x[i] = &x[i] / &self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix<R> {
        let n = self.lu.rows;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![Complex::zero(); n];
        for j in 0..n {
            e[j] = Complex::one();
            let col = self.solve(&e);
            inv.set_column(j, &col);
            e[j] = Complex::zero();
        }
        inv
    }

    /// Smallest |u_ii| relative to largest, as log2; a cheap conditioning hint.
    pub fn log2_pivot_ratio(&self) -> f64 {
        let logs: Vec<f64> = (0..self.lu.rows).map(|i| self.lu[(i, i)].log2_abs()).collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        min - max
    }
}

/// Diagonal similarity D⁻¹AD by powers of two that equalizes row and column norms.
/// Returns the balanced matrix and the exponents of D.
pub fn balance<R: Real>(a: &CMatrix<R>) -> (CMatrix<R>, Vec<i32>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut b = a.clone();
    let mut exps = vec![0i32; n];
    // Work in log2 space so huge multiprecision entries cannot overflow the heuristic.
    for _sweep in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut c = f64::NEG_INFINITY;
            let mut r = f64::NEG_INFINITY;
            for j in 0..n {
                if j == i {
                    continue;
                }
                c = log2_add(c, b[(j, i)].log2_abs());
                r = log2_add(r, b[(i, j)].log2_abs());
            }
            if !c.is_finite() || !r.is_finite() {
                continue;
            }
            // Scale column i by 2^f and row i by 2^-f so that c + f ≈ r − f.
            let f = ((r - c) / 2.0).round();
            if f.abs() < 1.0 {
                continue;
            }
            let f = f as i32;
            changed = true;
            exps[i] += f;
            for j in 0..n {
                if j != i {
                    b[(j, i)] = b[(j, i)].mul_pow2(f);
                    b[(i, j)] = b[(i, j)].mul_pow2(-f);
                }
            }
        }
        if !changed {
            break;
        }
    }
    (b, exps)
}

fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// Undo a balancing on a right eigenvector: x = D y.
pub fn unbalance_vector<R: Real>(y: &[Complex<R>], exps: &[i32]) -> Vec<Complex<R>> {
    y.iter().zip(exps).map(|(z, &e)| z.mul_pow2(e)).collect()
}
