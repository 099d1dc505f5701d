use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::LatticeError;

/// Exponent rule of a lacunary series `sum base^(-e_k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiouvilleExponents {
    /// `e_k = k!`
    Factorial,
    /// Strictly increasing positive exponents.
    Explicit(Vec<u64>),
}

/// Largest exponent a series term may carry; keeps the exact approximant manageable.
pub const MAX_LIOUVILLE_EXPONENT: u64 = 200_000;

/// A real number given by an exact or approximate expression.
#[derive(Clone, Debug, PartialEq)]
pub enum RealExpr {
    Rational(BigRational),
    /// `a + b*sqrt(d)` with `b != 0` and `d` square-free, not a square.
    Quadratic {
        a: BigRational,
        b: BigRational,
        d: u64,
    },
    /// A decimal approximation trusted to `precision` places after the point.
    Decimal {
        digits: String,
        precision: u32,
        value: BigRational,
    },
    /// The first `truncation` terms of `sum base^(-e_k)`.
    Liouville {
        base: u32,
        exponents: LiouvilleExponents,
        truncation: u32,
    },
}

/// Whether a value is rational, and whether that answer is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rationality {
    pub rational: bool,
    /// False for decimal and series inputs, which are finite approximations.
    pub exact: bool,
}

/// Fixed-point enclosure: `|x - mantissa / 2^bits| <= radius / 2^bits`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub mantissa: BigInt,
    pub radius: BigInt,
    pub bits: u32,
}

impl FixedPoint {
    pub fn to_f64(&self) -> f64 {
        scaled_to_f64(&self.mantissa, self.bits)
    }
}

pub(crate) fn scaled_to_f64(m: &BigInt, bits: u32) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let excess = m.bits().saturating_sub(60) as u32;
    let top = (m >> excess).to_f64().unwrap_or(0.0);
    top * 2f64.powi(excess as i32 - bits as i32)
}

fn is_square_free(d: u64) -> bool {
    let mut f = 2u64;
    while f * f <= d {
        if d.is_multiple_of(f * f) {
            return false;
        }
        f += 1;
    }
    true
}

fn is_perfect_square(d: u64) -> bool {
    let r = d.sqrt();
    r * r == d
}

fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

/// `floor((base + sign*sqrt(disc)) / den)` for `den > 0` and non-square `disc`.
pub(crate) fn floor_surd(base: &BigInt, disc: &BigInt, negative_root: bool, den: &BigInt) -> BigInt {
    let s = disc.sqrt();
    let top = if negative_root { base - &s - BigInt::one() } else { base + &s };
    top.div_floor(den)
}

impl RealExpr {
    pub fn rational(num: i64, den: i64) -> Result<Self, LatticeError> {
        if den == 0 {
            return Err(LatticeError::invalid("rational with zero denominator"));
        }
        Ok(RealExpr::Rational(BigRational::new(num.into(), den.into())))
    }

    pub fn integer(n: i64) -> Self {
        RealExpr::Rational(BigRational::from_integer(n.into()))
    }

    pub fn quadratic(a: BigRational, b: BigRational, d: u64) -> Result<Self, LatticeError> {
        if b.is_zero() {
            return Err(LatticeError::invalid("quadratic irrational needs b != 0"));
        }
        if d < 2 || is_perfect_square(d) || !is_square_free(d) {
            return Err(LatticeError::invalid(format!("quadratic irrational needs square-free non-square d, got {d}")));
        }
        Ok(RealExpr::Quadratic { a, b, d })
    }

    /// `sqrt(d)` for square-free `d`.
    pub fn sqrt(d: u64) -> Result<Self, LatticeError> {
        Self::quadratic(BigRational::zero(), BigRational::one(), d)
    }

    pub fn decimal(digits: &str, precision: u32) -> Result<Self, LatticeError> {
        if precision == 0 {
            return Err(LatticeError::invalid("decimal precision must be positive"));
        }
        let value = parse_decimal(digits)
            .ok_or_else(|| LatticeError::invalid(format!("malformed decimal digits {digits:?}")))?;
        Ok(RealExpr::Decimal { digits: digits.to_string(), precision, value })
    }

    pub fn liouville(base: u32, exponents: LiouvilleExponents, truncation: u32) -> Result<Self, LatticeError> {
        if base < 2 {
            return Err(LatticeError::invalid("series base must be at least 2"));
        }
        if truncation == 0 {
            return Err(LatticeError::invalid("series truncation must be positive"));
        }
        let expr = RealExpr::Liouville { base, exponents, truncation };
        let exps = expr.series_exponents()?;
        if exps.windows(2).any(|w| w[0] >= w[1]) || exps.first().is_some_and(|&e| e == 0) {
            return Err(LatticeError::invalid("series exponents must be positive and strictly increasing"));
        }
        Ok(expr)
    }

    fn series_exponents(&self) -> Result<Vec<u64>, LatticeError> {
        let RealExpr::Liouville { exponents, truncation, .. } = self else {
            return Ok(Vec::new());
        };
        let exps: Vec<u64> = match exponents {
            LiouvilleExponents::Factorial => (1..=*truncation).map(factorial).collect(),
            LiouvilleExponents::Explicit(list) => {
                if list.len() < *truncation as usize {
                    return Err(LatticeError::invalid(format!(
                        "series truncation {truncation} exceeds the {} listed exponents",
                        list.len()
                    )));
                }
                list[..*truncation as usize].to_vec()
            }
        };
        if exps.iter().any(|&e| e > MAX_LIOUVILLE_EXPONENT) {
            return Err(LatticeError::invalid(format!(
                "series exponent above {MAX_LIOUVILLE_EXPONENT}; lower the truncation"
            )));
        }
        Ok(exps)
    }

    pub fn is_rational(&self) -> Rationality {
        match self {
            RealExpr::Rational(_) => Rationality { rational: true, exact: true },
            RealExpr::Quadratic { .. } => Rationality { rational: false, exact: true },
            RealExpr::Decimal { .. } | RealExpr::Liouville { .. } => Rationality { rational: false, exact: false },
        }
    }

    /// The exact rational this expression stands for, when it is one.
    /// Decimal and series inputs give their finite approximant.
    pub fn approximant(&self) -> Option<BigRational> {
        match self {
            RealExpr::Rational(r) => Some(r.clone()),
            RealExpr::Quadratic { .. } => None,
            RealExpr::Decimal { value, .. } => Some(value.clone()),
            RealExpr::Liouville { base, .. } => {
                let exps = self.series_exponents().ok()?;
                let last = *exps.last()?;
                let den = BigInt::from(*base).pow(last as u32);
                let mut num = BigInt::zero();
                for e in exps {
                    num += BigInt::from(*base).pow((last - e) as u32);
                }
                Some(BigRational::new(num, den))
            }
        }
    }

    /// Exact `floor(x * scale)` for `scale > 0`, using the approximant for inexact inputs.
    pub fn floor_scaled(&self, scale: &BigInt) -> BigInt {
        match self {
            RealExpr::Quadratic { a, b, d } => {
                let l = a.denom().lcm(b.denom());
                let big_a = a.numer() * (&l / a.denom()) * scale;
                let big_b = b.numer() * (&l / b.denom()) * scale;
                let disc = &big_b * &big_b * BigInt::from(*d);
                floor_surd(&big_a, &disc, big_b.is_negative(), &l)
            }
            _ => {
                let r = self.approximant().unwrap_or_else(BigRational::zero) * BigRational::from_integer(scale.clone());
                r.floor().to_integer()
            }
        }
    }

    /// Enclosure with `bits` fractional bits.
    pub fn fixed_point(&self, bits: u32) -> FixedPoint {
        let scale = BigInt::one() << bits;
        let mantissa = self.floor_scaled(&scale);
        let mut radius = BigInt::one();
        if let RealExpr::Decimal { precision, .. } = self {
            let r = BigRational::new(scale, BigInt::from(10u32).pow(*precision));
            radius += r.ceil().to_integer();
        }
        FixedPoint { mantissa, radius, bits }
    }

    /// Truncated decimal expansion with `places` digits after the point (rounded toward zero).
    pub fn to_decimal_string(&self, places: u32) -> String {
        let scale = BigInt::from(10u32).pow(places);
        let (neg, f) = match self.negated() {
            Some(n) if self.sign() == Some(-1) => (true, n.floor_scaled(&scale)),
            _ => (false, self.floor_scaled(&scale)),
        };
        let (q, r) = f.div_mod_floor(&scale);
        let sign = if neg { "-" } else { "" };
        if places == 0 {
            return format!("{sign}{q}");
        }
        format!("{sign}{q}.{:0>width$}", r.to_string(), width = places as usize)
    }

    fn negated(&self) -> Option<RealExpr> {
        match self {
            RealExpr::Rational(r) => Some(RealExpr::Rational(-r)),
            RealExpr::Quadratic { a, b, d } => Some(RealExpr::Quadratic { a: -a, b: -b, d: *d }),
            RealExpr::Decimal { digits, precision, value } => {
                Some(RealExpr::Decimal { digits: digits.clone(), precision: *precision, value: -value })
            }
            RealExpr::Liouville { .. } => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RealExpr::Quadratic { a, b, d } => {
                a.to_f64().unwrap_or(f64::NAN) + b.to_f64().unwrap_or(f64::NAN) * (*d as f64).sqrt()
            }
            _ => self.fixed_point(96).to_f64(),
        }
    }

    /// Sign decided on a 160-bit enclosure; `None` when the enclosure straddles zero.
    pub fn sign(&self) -> Option<i8> {
        let fp = self.fixed_point(160);
        if fp.mantissa > fp.radius {
            Some(1)
        } else if fp.mantissa < -(&fp.radius) - BigInt::one() {
            Some(-1)
        } else if matches!(self, RealExpr::Rational(r) if r.is_zero()) {
            Some(0)
        } else {
            None
        }
    }

    /// Square-free radicand of a quadratic value, `Some(1)` for rationals, `None` otherwise.
    pub fn field_radicand(&self) -> Option<u64> {
        match self {
            RealExpr::Rational(_) => Some(1),
            RealExpr::Quadratic { d, .. } => Some(*d),
            _ => None,
        }
    }

    /// `(a, b)` with value `a + b*sqrt(d)` for exact inputs.
    pub fn field_parts(&self) -> Option<(BigRational, BigRational)> {
        match self {
            RealExpr::Rational(r) => Some((r.clone(), BigRational::zero())),
            RealExpr::Quadratic { a, b, .. } => Some((a.clone(), b.clone())),
            _ => None,
        }
    }

    pub fn from_json(v: &Value, path: &str) -> Result<Self, LatticeError> {
        let obj = v.as_object().ok_or_else(|| LatticeError::parse(path, "expected an object"))?;
        if let Some(r) = obj.get("rat") {
            let a = int_array(r, 2, &format!("{path}.rat"))?;
            if a[1].is_zero() {
                return Err(LatticeError::parse(path, "zero denominator"));
            }
            return Ok(RealExpr::Rational(BigRational::new(a[0].clone(), a[1].clone())));
        }
        if let Some(r) = obj.get("quad") {
            let a = int_array(r, 5, &format!("{path}.quad"))?;
            if a[1].is_zero() || a[3].is_zero() {
                return Err(LatticeError::parse(path, "zero denominator"));
            }
            let d = a[4].to_u64().ok_or_else(|| LatticeError::parse(path, "radicand must be a positive integer"))?;
            return RealExpr::quadratic(
                BigRational::new(a[0].clone(), a[1].clone()),
                BigRational::new(a[2].clone(), a[3].clone()),
                d,
            )
            .map_err(|e| LatticeError::parse(path, e.to_string()));
        }
        if let Some(r) = obj.get("dec") {
            let digits = r.as_str().ok_or_else(|| LatticeError::parse(&format!("{path}.dec"), "expected a string"))?;
            let prec = obj
                .get("prec")
                .and_then(Value::as_u64)
                .ok_or_else(|| LatticeError::parse(&format!("{path}.prec"), "expected a positive integer"))?;
            return RealExpr::decimal(digits, prec as u32).map_err(|e| LatticeError::parse(path, e.to_string()));
        }
        if let Some(r) = obj.get("liouville") {
            let p = format!("{path}.liouville");
            let base = r
                .get("base")
                .and_then(Value::as_u64)
                .ok_or_else(|| LatticeError::parse(&format!("{p}.base"), "expected an integer >= 2"))?;
            let trunc = r
                .get("trunc")
                .and_then(Value::as_u64)
                .ok_or_else(|| LatticeError::parse(&format!("{p}.trunc"), "expected a positive integer"))?;
            let exponents = match r.get("exponents") {
                Some(Value::String(s)) if s == "factorial" => LiouvilleExponents::Factorial,
                Some(Value::Array(list)) => LiouvilleExponents::Explicit(
                    list.iter()
                        .map(|e| e.as_u64())
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| LatticeError::parse(&format!("{p}.exponents"), "expected integers"))?,
                ),
                _ => {
                    return Err(LatticeError::parse(
                        &format!("{p}.exponents"),
                        "expected \"factorial\" or an integer list",
                    ))
                }
            };
            return RealExpr::liouville(base as u32, exponents, trunc as u32)
                .map_err(|e| LatticeError::parse(path, e.to_string()));
        }
        Err(LatticeError::parse(path, "expected one of rat, quad, dec, liouville"))
    }

    pub fn to_json(&self) -> Value {
        match self {
            RealExpr::Rational(r) => json!({"rat": [int_json(r.numer()), int_json(r.denom())]}),
            RealExpr::Quadratic { a, b, d } => json!({"quad": [
                int_json(a.numer()), int_json(a.denom()), int_json(b.numer()), int_json(b.denom()), d
            ]}),
            RealExpr::Decimal { digits, precision, .. } => json!({"dec": digits, "prec": precision}),
            RealExpr::Liouville { base, exponents, truncation } => {
                let e = match exponents {
                    LiouvilleExponents::Factorial => json!("factorial"),
                    LiouvilleExponents::Explicit(list) => json!(list),
                };
                json!({"liouville": {"base": base, "exponents": e, "trunc": truncation}})
            }
        }
    }
}

impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealExpr::Rational(r) => write!(f, "{r}"),
            RealExpr::Quadratic { a, b, d } => {
                if a.is_zero() {
                    write!(f, "{b}*sqrt({d})")
                } else {
                    write!(f, "{a} + {b}*sqrt({d})")
                }
            }
            RealExpr::Decimal { digits, precision, .. } => write!(f, "{digits} (+-1e-{precision})"),
            RealExpr::Liouville { base, exponents, truncation } => match exponents {
                LiouvilleExponents::Factorial => write!(f, "sum_{{k<={truncation}}} {base}^-k!"),
                LiouvilleExponents::Explicit(list) => {
                    write!(f, "sum {base}^-e for e in {:?}", &list[..(*truncation as usize).min(list.len())])
                }
            },
        }
    }
}

fn int_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn int_value(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn int_array(v: &Value, len: usize, path: &str) -> Result<Vec<BigInt>, LatticeError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == len)
        .ok_or_else(|| LatticeError::parse(path, format!("expected an array of {len} integers")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| int_value(x).ok_or_else(|| LatticeError::parse(&format!("{path}[{i}]"), "expected an integer")))
        .collect()
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}
