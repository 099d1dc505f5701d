use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Finite sum of terms `c * t4^k * exp(2 pi m t4)`, keyed by `(k, m)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoeffFunction {
    terms: BTreeMap<(u32, i32), Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl CoeffFunction {
    pub fn zero() -> Self {
        CoeffFunction::default()
    }

    pub fn constant(c: Complex64) -> Self {
        CoeffFunction::monomial(c, 0, 0)
    }

    pub fn monomial(c: Complex64, k: u32, m: i32) -> Self {
        let mut f = CoeffFunction::zero();
        f.add_term(c, k, m);
        f
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Complex64, u32, i32)>) -> Self {
        let mut f = CoeffFunction::zero();
        for (c, k, m) in terms {
            f.add_term(c, k, m);
        }
        f
    }

    /// Adds `c * t^k e^{2 pi m t}`, dropping the term when the sum cancels exactly.
    pub fn add_term(&mut self, c: Complex64, k: u32, m: i32) {
        if c == ZERO {
            return;
        }
        let e = self.terms.entry((k, m)).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.terms.remove(&(k, m));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms `(k, m, c)` in ascending `(k, m)` order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, i32, Complex64)> + '_ {
        self.terms.iter().map(|(&(k, m), &c)| (k, m, c))
    }

    pub fn coefficient(&self, k: u32, m: i32) -> Complex64 {
        self.terms.get(&(k, m)).copied().unwrap_or(ZERO)
    }

    pub fn max_k(&self) -> u32 {
        self.terms.keys().map(|&(k, _)| k).max().unwrap_or(0)
    }

    pub fn max_abs_m(&self) -> u32 {
        self.terms.keys().map(|&(_, m)| m.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of term magnitudes.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == ZERO {
            return CoeffFunction::zero();
        }
        CoeffFunction::from_terms(self.terms().map(|(k, m, c)| (c * s, k, m)))
    }

    pub fn conj(&self) -> Self {
        CoeffFunction::from_terms(self.terms().map(|(k, m, c)| (c.conj(), k, m)))
    }

    /// `d/dt4`.
    pub fn derivative(&self) -> Self {
        let mut out = CoeffFunction::zero();
        for (k, m, c) in self.terms() {
            if k > 0 {
                out.add_term(c * k as f64, k - 1, m);
            }
            if m != 0 {
                out.add_term(c * (2.0 * PI * m as f64), k, m);
            }
        }
        out
    }

    /// `(1/2i) a' + b a`: the z2-holomorphic derivative at a mode with multiplier `b`.
    pub fn del_z2(&self, b: Complex64) -> Self {
        let half_over_i = Complex64::new(0.0, -0.5);
        &self.derivative().scale(half_over_i) + &self.scale(b)
    }

    /// `-(1/2i) a' + b a`: the z2-antiholomorphic derivative at a mode with multiplier `b`.
    pub fn delbar_z2(&self, b: Complex64) -> Self {
        let half_over_i = Complex64::new(0.0, 0.5);
        &self.derivative().scale(half_over_i) + &self.scale(b)
    }

    pub fn eval(&self, t4: f64) -> Complex64 {
        self.terms().map(|(k, m, c)| c * t4.powi(k as i32) * (2.0 * PI * m as f64 * t4).exp()).sum()
    }

    /// Drops terms with `|c| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        CoeffFunction { terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(&k, &c)| (k, c)).collect() }
    }
}

impl Add for &CoeffFunction {
    type Output = CoeffFunction;
    fn add(self, o: &CoeffFunction) -> CoeffFunction {
        let mut out = self.clone();
        for (k, m, c) in o.terms() {
            out.add_term(c, k, m);
        }
        out
    }
}

impl Sub for &CoeffFunction {
    type Output = CoeffFunction;
    fn sub(self, o: &CoeffFunction) -> CoeffFunction {
        let mut out = self.clone();
        for (k, m, c) in o.terms() {
            out.add_term(-c, k, m);
        }
        out
    }
}

impl Neg for &CoeffFunction {
    type Output = CoeffFunction;
    fn neg(self) -> CoeffFunction {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &CoeffFunction {
    type Output = CoeffFunction;
    fn mul(self, o: &CoeffFunction) -> CoeffFunction {
        let mut out = CoeffFunction::zero();
        for (k, m, c) in self.terms() {
            for (k2, m2, c2) in o.terms() {
                out.add_term(c * c2, k + k2, m + m2);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cancellation_normalizes() {
        let mut f = CoeffFunction::monomial(c(2.0, 1.0), 1, -1);
        f.add_term(c(-2.0, -1.0), 1, -1);
        assert!(f.is_zero());
        assert!(CoeffFunction::constant(c(0.0, 0.0)).is_zero());
    }

    #[test]
    fn derivative_of_exp_polynomial() {
        // d/dt (t e^{2 pi t}) = e^{2 pi t} + 2 pi t e^{2 pi t}
        let f = CoeffFunction::monomial(c(1.0, 0.0), 1, 1);
        let d = f.derivative();
        assert_eq!(d.coefficient(0, 1), c(1.0, 0.0));
        assert!((d.coefficient(1, 1) - c(2.0 * PI, 0.0)).norm() < 1e-15);
        let t = 0.3;
        let h = 1e-6;
        let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
        assert!((fd - d.eval(t)).norm() < 1e-6 * fd.norm());
    }

    #[test]
    fn z2_kernels() {
        let b = c(0.0, PI);
        // exp(-2 pi t) is killed by the antiholomorphic z2 derivative at s2 = 1, exp(2 pi t) by the holomorphic one.
        assert!(CoeffFunction::monomial(c(1.0, 0.0), 0, -1).delbar_z2(b).max_abs() < 1e-14);
        assert!(CoeffFunction::monomial(c(1.0, 0.0), 0, 1).del_z2(b).max_abs() < 1e-14);
        let spill = CoeffFunction::monomial(c(1.0, 0.0), 0, 1).delbar_z2(b);
        assert!((spill.coefficient(0, 1) - c(0.0, 2.0 * PI)).norm() < 1e-14);
    }

    #[test]
    fn product_multiplies_pointwise() {
        let f = CoeffFunction::from_terms([(c(1.0, 2.0), 1, 0), (c(0.5, 0.0), 0, -1)]);
        let g = CoeffFunction::from_terms([(c(-1.0, 0.5), 2, 1), (c(3.0, 0.0), 0, 0)]);
        let t = -0.4;
        assert!(((&f * &g).eval(t) - f.eval(t) * g.eval(t)).norm() < 1e-12);
    }

    #[test]
    fn conjugation_is_pointwise() {
        let f = CoeffFunction::from_terms([(c(1.0, 2.0), 2, 1), (c(0.5, -3.0), 0, -1)]);
        assert!((f.conj().eval(0.7) - f.eval(0.7).conj()).norm() < 1e-12);
    }
}
