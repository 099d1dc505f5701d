//! Dense matrices over the two scalar fields and the rank engines built on them.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::CohomoError;

/// Field of matrix entries.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_complex(&self) -> Complex64;
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }
}

/// `a + b sqrt(d)` with rational `a`, `b`. `d = 0` marks an element known to be rational.
#[derive(Clone, Debug)]
pub struct Quad {
    pub a: BigRational,
    pub b: BigRational,
    pub d: u64,
}

impl PartialEq for Quad {
    fn eq(&self, o: &Quad) -> bool {
        self.a == o.a && self.b == o.b
    }
}

impl Quad {
    pub fn one() -> Quad {
        Quad::rational(BigRational::one())
    }

    pub fn rational(a: BigRational) -> Quad {
        Quad { a, b: BigRational::zero(), d: 0 }
    }

    pub fn new(a: BigRational, b: BigRational, d: u64) -> Quad {
        if b.is_zero() {
            Quad::rational(a)
        } else {
            Quad { a, b, d }
        }
    }

    fn radicand(&self, o: &Quad) -> u64 {
        if self.d != 0 {
            self.d
        } else {
            o.d
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// `a^2 - d b^2`, the field norm.
    fn norm(&self) -> BigRational {
        &self.a * &self.a - BigRational::from_integer(BigInt::from(self.d)) * &self.b * &self.b
    }

    pub fn inv(&self) -> Quad {
        let n = self.norm();
        Quad::new(&self.a / &n, -&self.b / &n, self.d)
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        if self.b.is_zero() {
            return a;
        }
        a + self.b.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt()
    }

    fn add_q(&self, o: &Quad) -> Quad {
        Quad::new(&self.a + &o.a, &self.b + &o.b, self.radicand(o))
    }

    fn sub_q(&self, o: &Quad) -> Quad {
        Quad::new(&self.a - &o.a, &self.b - &o.b, self.radicand(o))
    }

    fn mul_q(&self, o: &Quad) -> Quad {
        let d = self.radicand(o);
        if self.b.is_zero() && o.b.is_zero() {
            return Quad::rational(&self.a * &o.a);
        }
        let dd = BigRational::from_integer(BigInt::from(d));
        Quad::new(&self.a * &o.a + dd * &self.b * &o.b, &self.a * &o.b + &self.b * &o.a, d)
    }
}

/// Element `re + i im` of `Q(sqrt d)(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadComplex {
    pub re: Quad,
    pub im: Quad,
}

impl QuadComplex {
    pub fn new(re: Quad, im: Quad) -> Self {
        QuadComplex { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadComplex { re: self.re.clone(), im: Quad::rational(BigRational::zero()).sub_q(&self.im) }
    }

    /// Inverse; `Q(sqrt d)` is real, so `re^2 + im^2` vanishes only at zero.
    pub fn inv(&self) -> Self {
        let n = self.re.mul_q(&self.re).add_q(&self.im.mul_q(&self.im)).inv();
        let c = self.conj();
        QuadComplex { re: c.re.mul_q(&n), im: c.im.mul_q(&n) }
    }
}

impl Add for QuadComplex {
    type Output = QuadComplex;
    fn add(self, o: QuadComplex) -> QuadComplex {
        QuadComplex { re: self.re.add_q(&o.re), im: self.im.add_q(&o.im) }
    }
}

impl Sub for QuadComplex {
    type Output = QuadComplex;
    fn sub(self, o: QuadComplex) -> QuadComplex {
        QuadComplex { re: self.re.sub_q(&o.re), im: self.im.sub_q(&o.im) }
    }
}

impl Mul for QuadComplex {
    type Output = QuadComplex;
    fn mul(self, o: QuadComplex) -> QuadComplex {
        if self.im.is_zero() && o.im.is_zero() {
            return QuadComplex { re: self.re.mul_q(&o.re), im: Quad::rational(BigRational::zero()) };
        }
        QuadComplex {
            re: self.re.mul_q(&o.re).sub_q(&self.im.mul_q(&o.im)),
            im: self.re.mul_q(&o.im).add_q(&self.im.mul_q(&o.re)),
        }
    }
}

impl Neg for QuadComplex {
    type Output = QuadComplex;
    fn neg(self) -> QuadComplex {
        <QuadComplex as Scalar>::zero() - self
    }
}

impl Scalar for QuadComplex {
    fn zero() -> Self {
        QuadComplex { re: Quad::rational(BigRational::zero()), im: Quad::rational(BigRational::zero()) }
    }

    fn from_i64(n: i64) -> Self {
        QuadComplex {
            re: Quad::rational(BigRational::from_integer(BigInt::from(n))),
            im: Quad::rational(BigRational::zero()),
        }
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::from_i64(1));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[c * self.rows + r] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: S) {
        let i = c * self.rows + r;
        self.data[i] = self.data[i].clone() + v;
    }

    pub fn column(&self, c: usize) -> &[S] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn from_columns(rows: usize, cols: &[Vec<S>]) -> Self {
        let mut data = Vec::with_capacity(rows * cols.len());
        for c in cols {
            assert_eq!(c.len(), rows, "column length");
            data.extend_from_slice(c);
        }
        Mat { rows, cols: cols.len(), data }
    }

    /// `[self | o]`.
    pub fn hcat(&self, o: &Mat<S>) -> Mat<S> {
        assert_eq!(self.rows, o.rows, "hcat row mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&o.data);
        Mat { rows: self.rows, cols: self.cols + o.cols, data }
    }

    /// `[self; o]`.
    pub fn vcat(&self, o: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, o.cols, "vcat column mismatch");
        let rows = self.rows + o.rows;
        let mut data = Vec::with_capacity(rows * self.cols);
        for c in 0..self.cols {
            data.extend_from_slice(self.column(c));
            data.extend_from_slice(o.column(c));
        }
        Mat { rows, cols: self.cols, data }
    }

    /// Block-diagonal `diag(self, o)`.
    pub fn block_diag(&self, o: &Mat<S>) -> Mat<S> {
        let top = self.hcat(&Mat::zeros(self.rows, o.cols));
        let bottom = Mat::zeros(o.rows, self.cols).hcat(o);
        top.vcat(&bottom)
    }

    pub fn mul(&self, o: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, o.rows, "product shape");
        let mut out = Mat::zeros(self.rows, o.cols);
        for j in 0..o.cols {
            for k in 0..self.cols {
                let b = o.get(k, j);
                if *b == S::zero() {
                    continue;
                }
                for i in 0..self.rows {
                    let a = self.get(i, k);
                    if *a == S::zero() {
                        continue;
                    }
                    out.add_at(i, j, a.clone() * b.clone());
                }
            }
        }
        out
    }

    /// Copies row `i` of `self` to row `map[i]` of a matrix with `rows` rows.
    pub fn embed_rows(&self, rows: usize, map: &[usize]) -> Mat<S> {
        assert_eq!(map.len(), self.rows, "row map length");
        let mut out = Mat::zeros(rows, self.cols);
        for c in 0..self.cols {
            for (i, &r) in map.iter().enumerate() {
                out.set(r, c, self.get(i, c).clone());
            }
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

/// Kernels, images and ranks over one scalar field.
pub trait RankEngine: Sync {
    type S: Scalar;

    /// Columns spanning the null space.
    fn kernel(&self, m: &Mat<Self::S>) -> Result<Mat<Self::S>, CohomoError>;

    /// Independent columns spanning the column space.
    fn image(&self, m: &Mat<Self::S>) -> Result<Mat<Self::S>, CohomoError>;

    fn rank(&self, m: &Mat<Self::S>) -> Result<usize, CohomoError> {
        Ok(self.image(m)?.cols())
    }
}

/// Singular-value thresholding with an ambiguity band.
#[derive(Clone, Copy, Debug)]
pub struct FloatEngine {
    /// Singular values at most `tol * s_max` count as zero.
    pub tol: f64,
}

/// Width of the band around the threshold in which a singular value is ambiguous.
const AMBIGUITY_FACTOR: f64 = 100.0;

struct Decomposition {
    /// Nonincreasing, of length `min(rows, cols)`.
    singular: Vec<f64>,
    u: faer::Mat<Complex64>,
    v: faer::Mat<Complex64>,
    threshold: f64,
}

impl FloatEngine {
    fn decompose(&self, m: &Mat<Complex64>) -> Result<Decomposition, CohomoError> {
        let a = faer::Mat::<Complex64>::from_fn(m.rows, m.cols, |r, c| *m.get(r, c));
        let svd = a.svd().map_err(|e| CohomoError::Numerical(format!("{e:?}")))?;
        let singular: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
        let s_max = singular.first().copied().unwrap_or(0.0);
        let threshold = self.tol * s_max;
        if let Some(&s) = singular
            .iter()
            .find(|&&s| s_max > 0.0 && s > threshold / AMBIGUITY_FACTOR && s < threshold * AMBIGUITY_FACTOR)
        {
            return Err(CohomoError::RankAmbiguous { singular_value: s, threshold });
        }
        Ok(Decomposition { singular, u: svd.U().to_owned(), v: svd.V().to_owned(), threshold })
    }
}

impl FloatEngine {
    /// Minimum-norm least-squares solution of `m x = b` through the thresholded pseudoinverse.
    pub fn least_squares(&self, m: &Mat<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>, CohomoError> {
        assert_eq!(b.len(), m.rows, "right-hand side length");
        let mut x = vec![Complex64::new(0.0, 0.0); m.cols];
        if m.rows == 0 || m.cols == 0 {
            return Ok(x);
        }
        let d = self.decompose(m)?;
        for i in 0..d.rank() {
            let proj: Complex64 = (0..m.rows).map(|r| d.u[(r, i)].conj() * b[r]).sum();
            let w = proj / d.singular[i];
            for (c, xc) in x.iter_mut().enumerate() {
                *xc += d.v[(c, i)] * w;
            }
        }
        Ok(x)
    }
}

impl Decomposition {
    fn rank(&self) -> usize {
        self.singular.iter().take_while(|&&s| s > self.threshold).count()
    }
}

fn columns(m: &faer::Mat<Complex64>, range: std::ops::Range<usize>) -> Mat<Complex64> {
    let cols: Vec<Vec<Complex64>> = range.map(|j| (0..m.nrows()).map(|r| m[(r, j)]).collect()).collect();
    Mat::from_columns(m.nrows(), &cols)
}

impl RankEngine for FloatEngine {
    type S = Complex64;

    fn kernel(&self, m: &Mat<Complex64>) -> Result<Mat<Complex64>, CohomoError> {
        if m.rows == 0 || m.cols == 0 {
            return Ok(Mat::identity(m.cols));
        }
        let d = self.decompose(m)?;
        Ok(columns(&d.v, d.rank()..m.cols))
    }

    fn image(&self, m: &Mat<Complex64>) -> Result<Mat<Complex64>, CohomoError> {
        if m.rows == 0 || m.cols == 0 {
            return Ok(Mat::zeros(m.rows, 0));
        }
        let d = self.decompose(m)?;
        Ok(columns(&d.u, 0..d.rank()))
    }
}

/// Gauss-Jordan elimination over `Q(sqrt d)(i)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactEngine;

impl ExactEngine {
    /// Reduced row echelon form and its pivot columns.
    fn rref(m: &Mat<QuadComplex>) -> (Vec<Vec<QuadComplex>>, Vec<usize>) {
        let mut a: Vec<Vec<QuadComplex>> =
            (0..m.rows).map(|r| (0..m.cols).map(|c| m.get(r, c).clone()).collect()).collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !a[r][col].is_zero()) else { continue };
            a.swap(row, p);
            let inv = a[row][col].inv();
            for x in a[row][col..m.cols].iter_mut() {
                if !x.is_zero() {
                    *x = x.clone() * inv.clone();
                }
            }
            let pivot_row = a[row].clone();
            for (r, a_r) in a.iter_mut().enumerate() {
                if r == row || a_r[col].is_zero() {
                    continue;
                }
                let f = a_r[col].clone();
                for (x, pv) in a_r[col..m.cols].iter_mut().zip(&pivot_row[col..m.cols]) {
                    if !pv.is_zero() {
                        *x = x.clone() - f.clone() * pv.clone();
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }
}

impl ExactEngine {
    /// Solution of `m x = b` with every free variable zero, or `None` when the system is inconsistent.
    pub fn solve(&self, m: &Mat<QuadComplex>, b: &[QuadComplex]) -> Option<Vec<QuadComplex>> {
        assert_eq!(b.len(), m.rows, "right-hand side length");
        let aug = m.hcat(&Mat::from_columns(m.rows, &[b.to_vec()]));
        let (a, pivots) = ExactEngine::rref(&aug);
        if pivots.last() == Some(&m.cols) {
            return None;
        }
        let mut x = vec![QuadComplex::zero(); m.cols];
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = a[r][m.cols].clone();
        }
        Some(x)
    }
}

impl RankEngine for ExactEngine {
    type S = QuadComplex;

    fn kernel(&self, m: &Mat<QuadComplex>) -> Result<Mat<QuadComplex>, CohomoError> {
        let (a, pivots) = ExactEngine::rref(m);
        let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
        let cols: Vec<Vec<QuadComplex>> = free
            .iter()
            .map(|&f| {
                let mut v = vec![QuadComplex::zero(); m.cols];
                v[f] = QuadComplex::from_i64(1);
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -a[r][f].clone();
                }
                v
            })
            .collect();
        Ok(Mat::from_columns(m.cols, &cols))
    }

    fn image(&self, m: &Mat<QuadComplex>) -> Result<Mat<QuadComplex>, CohomoError> {
        let (_, pivots) = ExactEngine::rref(m);
        let cols: Vec<Vec<QuadComplex>> = pivots.iter().map(|&c| m.column(c).to_vec()).collect();
        Ok(Mat::from_columns(m.rows, &cols))
    }

    fn rank(&self, m: &Mat<QuadComplex>) -> Result<usize, CohomoError> {
        Ok(ExactEngine::rref(m).1.len())
    }
}

/// Exact field element of a lattice parameter, if it lies in `Q(sqrt d)`.
pub fn quad_of(e: &crate::lattice::RealExpr, d: u64) -> Option<Quad> {
    let (a, b) = e.field_parts()?;
    if !b.is_zero() && e.field_radicand() != Some(d) {
        return None;
    }
    Some(Quad::new(a, b, d))
}
