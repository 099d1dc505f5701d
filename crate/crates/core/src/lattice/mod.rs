//! Lattices `<(0,1), (1,p), (tau,q)>` in C², real coordinates, mode multipliers and
//! Diophantine classification.

mod diophantine;
mod real;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use serde_json::{json, Value};

pub use diophantine::{
    classify_theta, continued_fraction, divisor_decay_profile, polynomial_floor, profile_csv, CertificateMethod,
    Classification, ClassifyOptions, ContinuedFraction, DiophantineCertificate,
};
pub use real::{FixedPoint, LiouvilleExponents, Rationality, RealExpr, MAX_LIOUVILLE_EXPONENT};

pub(crate) use real::scaled_to_f64;

/// Default working precision for high-precision evaluation, in fractional bits.
pub const DEFAULT_PRECISION_BITS: u32 = 128;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("invalid lattice: {0}")]
    Invalid(String),
    #[error("lattice file, field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("cannot read lattice file {path}: {message}")]
    Io { path: String, message: String },
}

impl LatticeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LatticeError::Invalid(msg.into())
    }

    pub(crate) fn parse(field: &str, msg: impl Into<String>) -> Self {
        LatticeError::Parse { field: field.to_string(), message: msg.into() }
    }
}

/// Frequency triple `(s1, s2, s3)` of the character `exp(2 pi i (s1 t1 + s2 t2 + s3 t3))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(pub [i32; 3]);

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex([0, 0, 0]);

    pub const fn new(s1: i32, s2: i32, s3: i32) -> Self {
        ModeIndex([s1, s2, s3])
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn norm_inf(&self) -> u32 {
        self.0.iter().map(|s| s.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn s2(&self) -> i32 {
        self.0[1]
    }

    /// Every mode with `|s_i| <= radius`, in lexicographic order.
    pub fn cube(radius: u32) -> Vec<ModeIndex> {
        let r = radius as i32;
        let mut out = Vec::with_capacity(((2 * r + 1) as usize).pow(3));
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    out.push(ModeIndex([a, b, c]));
                }
            }
        }
        out
    }

    /// Modes with `max |s_i| == radius`.
    pub fn shell(radius: u32) -> Vec<ModeIndex> {
        ModeIndex::cube(radius).into_iter().filter(|m| m.norm_inf() == radius).collect()
    }
}

impl Add for ModeIndex {
    type Output = ModeIndex;
    fn add(self, o: ModeIndex) -> ModeIndex {
        ModeIndex([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for ModeIndex {
    type Output = ModeIndex;
    fn sub(self, o: ModeIndex) -> ModeIndex {
        self + (-o)
    }
}

impl Neg for ModeIndex {
    type Output = ModeIndex;
    fn neg(self) -> ModeIndex {
        ModeIndex([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// `B = i*pi*s2`.
pub fn mode_multiplier_b(sigma: ModeIndex) -> Complex64 {
    Complex64::new(0.0, PI * sigma.0[1] as f64)
}

/// The lattice generated by `(0,1)`, `(1,p)` and `(tau,q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    tau_re: RealExpr,
    tau_im: RealExpr,
    p: RealExpr,
    q: RealExpr,
    values: [f64; 4],
}

impl Lattice {
    pub fn new(tau_re: RealExpr, tau_im: RealExpr, p: RealExpr, q: RealExpr) -> Result<Self, LatticeError> {
        match tau_im.sign() {
            Some(1) => {}
            Some(_) => return Err(LatticeError::invalid("Im tau must be positive")),
            None => return Err(LatticeError::invalid("cannot decide the sign of Im tau")),
        }
        let values = [tau_re.to_f64(), tau_im.to_f64(), p.to_f64(), q.to_f64()];
        Ok(Lattice { tau_re, tau_im, p, q, values })
    }

    /// `tau = i`, `p = sqrt(2)`, `q = 0`.
    pub fn reference() -> Self {
        Lattice::new(
            RealExpr::integer(0),
            RealExpr::integer(1),
            RealExpr::sqrt(2).expect("2 is square-free"),
            RealExpr::integer(0),
        )
        .expect("reference lattice is valid")
    }

    /// `tau = i` with the given `p` and `q`.
    pub fn with_pq(p: RealExpr, q: RealExpr) -> Result<Self, LatticeError> {
        Lattice::new(RealExpr::integer(0), RealExpr::integer(1), p, q)
    }

    pub fn tau_re(&self) -> &RealExpr {
        &self.tau_re
    }

    pub fn tau_im(&self) -> &RealExpr {
        &self.tau_im
    }

    pub fn p(&self) -> &RealExpr {
        &self.p
    }

    pub fn q(&self) -> &RealExpr {
        &self.q
    }

    pub fn tau(&self) -> Complex64 {
        Complex64::new(self.values[0], self.values[1])
    }

    pub fn p_f64(&self) -> f64 {
        self.values[2]
    }

    pub fn q_f64(&self) -> f64 {
        self.values[3]
    }

    /// `p` or `q` irrational.
    pub fn is_toroidal(&self) -> bool {
        !self.p.is_rational().rational || !self.q.is_rational().rational
    }

    /// Radicand `d` when all four entries lie in `Q(sqrt d)` (`1` when all are rational).
    pub fn quadratic_field(&self) -> Option<u64> {
        let mut field = 1u64;
        for e in [&self.tau_re, &self.tau_im, &self.p, &self.q] {
            match e.field_radicand()? {
                1 => {}
                d if field == 1 || field == d => field = d,
                _ => return None,
            }
        }
        Some(field)
    }

    /// The three generators of the lattice as points of C².
    pub fn generators(&self) -> [[Complex64; 2]; 3] {
        let one = Complex64::new(1.0, 0.0);
        [
            [Complex64::new(0.0, 0.0), one],
            [one, Complex64::new(self.p_f64(), 0.0)],
            [self.tau(), Complex64::new(self.q_f64(), 0.0)],
        ]
    }

    /// `(t1, t2, t3, t4)` with `z1 = t1 + t3*tau` and `z2 = p*t1 + t2 + q*t3 + i*t4`.
    pub fn to_real_coords(&self, z1: Complex64, z2: Complex64) -> [f64; 4] {
        let [re_tau, im_tau, p, q] = self.values;
        let t3 = z1.im / im_tau;
        let t1 = z1.re - re_tau * t3;
        let t2 = z2.re - p * t1 - q * t3;
        [t1, t2, t3, z2.im]
    }

    pub fn from_real_coords(&self, t: [f64; 4]) -> [Complex64; 2] {
        let [re_tau, im_tau, p, q] = self.values;
        let z1 = Complex64::new(t[0] + re_tau * t[2], im_tau * t[2]);
        let z2 = Complex64::new(p * t[0] + t[1] + q * t[2], t[3]);
        [z1, z2]
    }

    /// `exp(2 pi i <sigma, (t1,t2,t3)>)`.
    pub fn character(&self, sigma: ModeIndex, t: [f64; 4]) -> Complex64 {
        let phase = sigma.0[0] as f64 * t[0] + sigma.0[1] as f64 * t[1] + sigma.0[2] as f64 * t[2];
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    }

    /// The multiplier through which the z1-antiholomorphic derivative acts on mode `sigma`.
    pub fn multiplier_a(&self, sigma: ModeIndex) -> Complex64 {
        let [re_tau, im_tau, p, q] = self.values;
        let [s1, s2, s3] = sigma.0.map(|s| s as f64);
        let u = s1 - p * s2;
        let w = s3 - q * s2 - u * re_tau;
        Complex64::new(-PI * w / im_tau, PI * u)
    }

    /// `multiplier_a` with the cancelling parts evaluated on `bits`-bit enclosures.
    pub fn multiplier_a_precise(&self, sigma: ModeIndex, bits: u32) -> Complex64 {
        let fp = PrecisePart::new(self, bits);
        fp.multiplier(sigma)
    }

    pub fn from_json(v: &Value) -> Result<Self, LatticeError> {
        let tau = v.get("tau").ok_or_else(|| LatticeError::parse("tau", "missing"))?;
        let re = RealExpr::from_json(tau.get("re").ok_or_else(|| LatticeError::parse("tau.re", "missing"))?, "tau.re")?;
        let im = RealExpr::from_json(tau.get("im").ok_or_else(|| LatticeError::parse("tau.im", "missing"))?, "tau.im")?;
        let p = RealExpr::from_json(v.get("p").ok_or_else(|| LatticeError::parse("p", "missing"))?, "p")?;
        let q = RealExpr::from_json(v.get("q").ok_or_else(|| LatticeError::parse("q", "missing"))?, "q")?;
        Lattice::new(re, im, p, q)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tau": {"re": self.tau_re.to_json(), "im": self.tau_im.to_json()},
            "p": self.p.to_json(),
            "q": self.q.to_json(),
        })
    }

    pub fn parse_str(s: &str) -> Result<Self, LatticeError> {
        let v: Value = serde_json::from_str(s).map_err(|e| LatticeError::Parse {
            field: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Lattice::from_json(&v)
    }

    pub fn load(path: &Path) -> Result<Self, LatticeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LatticeError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Lattice::parse_str(&text)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tau = {} + i*({}), p = {}, q = {}", self.tau_re, self.tau_im, self.p, self.q)
    }
}

/// Fixed-point copies of the lattice entries for cancellation-sensitive evaluation.
pub(crate) struct PrecisePart {
    bits: u32,
    re_tau: BigInt,
    p: BigInt,
    q: BigInt,
    im_tau: f64,
}

impl PrecisePart {
    pub(crate) fn new(lattice: &Lattice, bits: u32) -> Self {
        PrecisePart {
            bits,
            re_tau: lattice.tau_re.fixed_point(bits).mantissa,
            p: lattice.p.fixed_point(bits).mantissa,
            q: lattice.q.fixed_point(bits).mantissa,
            im_tau: lattice.values[1],
        }
    }

    pub(crate) fn multiplier(&self, sigma: ModeIndex) -> Complex64 {
        let one = BigInt::from(1) << self.bits;
        let [s1, s2, s3] = sigma.0.map(BigInt::from);
        let u = &s1 * &one - &s2 * &self.p;
        let w = &s3 * &one - &s2 * &self.q - ((&u * &self.re_tau) >> self.bits);
        let u = scaled_to_f64(&u, self.bits);
        let w = scaled_to_f64(&w, self.bits);
        Complex64::new(-PI * w / self.im_tau, PI * u)
    }
}
