use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::real::floor_surd;
use super::{scaled_to_f64, Lattice, ModeIndex, PrecisePart, RealExpr, DEFAULT_PRECISION_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Theta,
    WildEvidence,
    NotToroidal,
    Inconclusive,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Theta => "Theta",
            Classification::WildEvidence => "WildEvidence",
            Classification::NotToroidal => "NotToroidal",
            Classification::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateMethod {
    ContinuedFraction,
    BruteForceScan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub max_n: u64,
    pub geometric_floor: f64,
    pub precision_bits: u32,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { max_n: 10_000, geometric_floor: 1e-2, precision_bits: DEFAULT_PRECISION_BITS }
    }
}

/// Outcome of the lower-bound search for `dist(Z², (np, nq))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiophantineCertificate {
    pub classification: Classification,
    /// `C` in `dist >= C * delta^n`, when a bound was established.
    pub c_est: Option<f64>,
    pub delta_est: Option<f64>,
    /// Record minima of the scanned distances, strictly increasing in `n`.
    pub samples: Vec<(u64, f64)>,
    pub method: CertificateMethod,
    pub precision_bits: u32,
    /// Bound on the partial quotients behind a continued-fraction certificate.
    pub partial_quotient_bound: Option<u64>,
    /// Coordinate (`"p"` or `"q"`) that carries the certificate.
    pub certified_coordinate: Option<&'static str>,
    /// First `n` whose distance fell below `geometric_floor^n`.
    pub witness_n: Option<u64>,
    pub diagnostic: Option<String>,
}

impl DiophantineCertificate {
    /// CSV with header `n,dist`.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("n,dist\n");
        for (n, d) in &self.samples {
            let _ = writeln!(out, "{n},{d:e}");
        }
        out
    }
}

/// Continued fraction `[a0; pre..., (period)...]` of a quadratic irrational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub head: BigInt,
    pub preperiod: Vec<BigInt>,
    pub period: Vec<BigInt>,
}

impl ContinuedFraction {
    /// Largest partial quotient after the integer part.
    pub fn max_partial_quotient(&self) -> BigInt {
        self.preperiod.iter().chain(&self.period).max().cloned().unwrap_or_else(BigInt::one)
    }
}

/// Continued fraction of a quadratic irrational; `None` for other expressions.
pub fn continued_fraction(x: &RealExpr) -> Option<ContinuedFraction> {
    let RealExpr::Quadratic { a, b, d } = x else {
        return None;
    };
    let l = a.denom().lcm(b.denom());
    let big_a = a.numer() * (&l / a.denom());
    let big_b = b.numer() * (&l / b.denom());
    let mut disc = &big_b * &big_b * BigInt::from(*d);
    let (mut p, mut q) = if big_b.is_positive() { (big_a, l) } else { (-big_a, -l) };
    if !((&disc - &p * &p) % &q).is_zero() {
        let aq = q.abs();
        p *= &aq;
        disc *= &aq * &aq;
        q *= &aq;
    }
    let root = disc.sqrt();
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    let mut terms: Vec<BigInt> = Vec::new();
    loop {
        if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
            let head = terms[0].clone();
            let (preperiod, period) = if start == 0 {
                let mut period = terms[1..].to_vec();
                period.push(head.clone());
                (Vec::new(), period)
            } else {
                (terms[1..start].to_vec(), terms[start..].to_vec())
            };
            return Some(ContinuedFraction { head, preperiod, period });
        }
        seen.insert((p.clone(), q.clone()), terms.len());
        let term = if q.is_positive() { (&p + &root).div_floor(&q) } else { floor_surd(&-&p, &disc, true, &-&q) };
        let next_p = &term * &q - &p;
        let next_q = (&disc - &next_p * &next_p) / &q;
        terms.push(term);
        p = next_p;
        q = next_q;
        if terms.len() > 100_000 {
            return None;
        }
    }
}

struct CoordinateScan {
    frac: BigUint,
    step: BigUint,
    radius: BigUint,
}

/// Incremental `||n x||` on `bits`-bit enclosures.
struct DistanceScan {
    bits: u32,
    modulus: BigUint,
    half: BigUint,
    coords: Vec<CoordinateScan>,
    n: u64,
}

struct DistanceSample {
    n: u64,
    dist: f64,
    upper: f64,
    lower: f64,
}

impl DistanceScan {
    fn new(lattice: &Lattice, bits: u32) -> Self {
        let modulus = BigUint::one() << bits;
        let half = BigUint::one() << (bits - 1);
        let m = BigInt::from(modulus.clone());
        let coords = [lattice.p(), lattice.q()]
            .iter()
            .map(|e| {
                let fp = e.fixed_point(bits);
                let step = fp.mantissa.mod_floor(&m).to_biguint().expect("nonnegative residue");
                CoordinateScan { frac: BigUint::zero(), step, radius: fp.radius.to_biguint().unwrap_or_default() }
            })
            .collect();
        DistanceScan { bits, modulus, half, coords, n: 0 }
    }

    fn next_sample(&mut self) -> DistanceSample {
        self.n += 1;
        let n = self.n;
        let mut sq = 0.0;
        let mut sq_up = 0.0;
        let mut sq_low = 0.0;
        for c in &mut self.coords {
            c.frac += &c.step;
            if c.frac >= self.modulus {
                c.frac -= &self.modulus;
            }
            let near = if c.frac >= self.half { &self.modulus - &c.frac } else { c.frac.clone() };
            let rad = &c.radius * BigUint::from(n);
            let d = scaled_to_f64(&BigInt::from(near.clone()), self.bits);
            let up = scaled_to_f64(&BigInt::from(&near + &rad), self.bits);
            let low = if near > rad { scaled_to_f64(&BigInt::from(&near - &rad), self.bits) } else { 0.0 };
            sq += d * d;
            sq_up += up * up;
            sq_low += low * low;
        }
        DistanceSample { n, dist: sq.sqrt(), upper: sq_up.sqrt(), lower: sq_low.sqrt() }
    }
}

/// `min over n <= max_n of n * dist(Z², (np, nq))`, using certified lower bounds.
pub fn polynomial_floor(lattice: &Lattice, max_n: u64, bits: u32) -> f64 {
    let mut scan = DistanceScan::new(lattice, bits);
    let mut best = f64::INFINITY;
    for _ in 0..max_n {
        let s = scan.next_sample();
        best = best.min(s.lower * s.n as f64);
    }
    best
}

/// Classify the lattice by the lower behaviour of `dist(Z², (np, nq))`.
pub fn classify_theta(lattice: &Lattice, opts: &ClassifyOptions) -> DiophantineCertificate {
    let bits = opts.precision_bits.max(32);
    let mut cert = DiophantineCertificate {
        classification: Classification::Inconclusive,
        c_est: None,
        delta_est: None,
        samples: Vec::new(),
        method: CertificateMethod::BruteForceScan,
        precision_bits: bits,
        partial_quotient_bound: None,
        certified_coordinate: None,
        witness_n: None,
        diagnostic: None,
    };
    let (rp, rq) = (lattice.p().is_rational(), lattice.q().is_rational());
    if rp.rational && rq.rational {
        cert.classification = Classification::NotToroidal;
        cert.method = CertificateMethod::ContinuedFraction;
        return cert;
    }

    let certified = [("p", lattice.p()), ("q", lattice.q())]
        .into_iter()
        .find_map(|(name, e)| continued_fraction(e).map(|cf| (name, cf)));

    let mut scan = DistanceScan::new(lattice, bits);
    let log_floor = opts.geometric_floor.ln();
    let mut best = f64::INFINITY;
    let mut unresolved: Option<u64> = None;
    let mut min_scaled = f64::INFINITY;
    for _ in 0..opts.max_n {
        let s = scan.next_sample();
        if s.dist < best {
            best = s.dist;
            cert.samples.push((s.n, s.dist));
        }
        min_scaled = min_scaled.min(s.lower * s.n as f64);
        if s.lower <= 0.0 {
            unresolved.get_or_insert(s.n);
            continue;
        }
        if cert.witness_n.is_none() && s.upper.ln() < s.n as f64 * log_floor {
            cert.witness_n = Some(s.n);
        }
    }

    if let Some((name, cf)) = certified {
        let bound = cf.max_partial_quotient();
        let c = 1.0 / (bound.to_f64().unwrap_or(f64::INFINITY) + 2.0);
        cert.method = CertificateMethod::ContinuedFraction;
        cert.partial_quotient_bound = bound.to_u64();
        cert.certified_coordinate = Some(name);
        if min_scaled + 1e-12 < c {
            cert.diagnostic =
                Some(format!("scan contradicts the continued-fraction bound: min n*dist = {min_scaled:e} < {c:e}"));
            return cert;
        }
        cert.classification = Classification::Theta;
        cert.c_est = Some(c);
        cert.delta_est = Some(0.5);
        return cert;
    }

    if let Some(n) = cert.witness_n {
        cert.classification = Classification::WildEvidence;
        cert.diagnostic = Some(format!(
            "dist at n = {n} is below {}^n; this is evidence from a finite scan, not a proof",
            opts.geometric_floor
        ));
    } else if let Some(n) = unresolved {
        cert.diagnostic =
            Some(format!("precision exhausted: the distance at n = {n} is within the enclosure radius at {bits} bits"));
    } else {
        cert.diagnostic = Some(format!(
            "no n <= {} fell below {}^n and no exact certificate applies",
            opts.max_n, opts.geometric_floor
        ));
    }
    cert
}

/// `(n, min |A| over nonzero modes with max |s_i| <= n)` for `n = 1..=shells`.
pub fn divisor_decay_profile(lattice: &Lattice, shells: u32, bits: u32) -> Vec<(u32, f64)> {
    let fp = PrecisePart::new(lattice, bits);
    let mut best = f64::INFINITY;
    (1..=shells)
        .map(|n| {
            for s in ModeIndex::shell(n) {
                best = best.min(fp.multiplier(s).norm());
            }
            (n, best)
        })
        .collect()
}

/// CSV with header `n,min_abs_A`.
pub fn profile_csv(profile: &[(u32, f64)]) -> String {
    let mut out = String::from("n,min_abs_A\n");
    for (n, v) in profile {
        let _ = writeln!(out, "{n},{v:e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::lattice::LiouvilleExponents;

    fn cf_terms(x: &RealExpr) -> (i64, Vec<i64>, Vec<i64>) {
        let cf = continued_fraction(x).unwrap();
        let c = |v: &[BigInt]| v.iter().map(|t| t.to_i64().unwrap()).collect::<Vec<_>>();
        (cf.head.to_i64().unwrap(), c(&cf.preperiod), c(&cf.period))
    }

    #[test]
    fn continued_fractions_of_surds() {
        assert_eq!(cf_terms(&RealExpr::sqrt(2).unwrap()), (1, vec![], vec![2]));
        assert_eq!(cf_terms(&RealExpr::sqrt(7).unwrap()), (2, vec![], vec![1, 1, 1, 4]));
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(cf_terms(&RealExpr::quadratic(half.clone(), half, 5).unwrap()), (1, vec![], vec![1]));
        let neg = RealExpr::quadratic(BigRational::zero(), BigRational::from_integer((-1).into()), 2).unwrap();
        // -sqrt 2 = [-2; 1, 1, 2, 2, ...]
        assert_eq!(cf_terms(&neg), (-2, vec![1, 1], vec![2]));
    }

    /// Convergent denominators of sqrt(2) computed independently from the recurrence.
    #[test]
    fn record_minima_are_pell_denominators() {
        let l = Lattice::reference();
        let cert = classify_theta(&l, &ClassifyOptions { max_n: 2000, ..Default::default() });
        let ns: Vec<u64> = cert.samples.iter().map(|s| s.0).collect();
        let mut pell = vec![1u64, 2];
        while *pell.last().unwrap() < 2000 {
            let k = pell.len();
            pell.push(2 * pell[k - 1] + pell[k - 2]);
        }
        pell.pop();
        assert_eq!(ns, pell);
    }

    #[test]
    fn sqrt_two_is_theta() {
        let cert = classify_theta(&Lattice::reference(), &ClassifyOptions::default());
        assert_eq!(cert.classification, Classification::Theta);
        assert_eq!(cert.partial_quotient_bound, Some(2));
        let (c, d) = (cert.c_est.unwrap(), cert.delta_est.unwrap());
        for (n, dist) in &cert.samples {
            assert!(*dist >= c * d.powi(*n as i32));
        }
        assert!(cert.samples.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn rational_pair_is_not_toroidal() {
        let l = Lattice::with_pq(RealExpr::rational(1, 2).unwrap(), RealExpr::rational(2, 3).unwrap()).unwrap();
        assert_eq!(classify_theta(&l, &ClassifyOptions::default()).classification, Classification::NotToroidal);
    }

    #[test]
    fn super_exponential_series_gives_wild_evidence() {
        let p = RealExpr::liouville(2, LiouvilleExponents::Explicit(vec![1, 4, 120]), 3).unwrap();
        let l = Lattice::with_pq(p, RealExpr::integer(0)).unwrap();
        let cert = classify_theta(&l, &ClassifyOptions::default());
        assert_eq!(cert.classification, Classification::WildEvidence);
        assert_eq!(cert.witness_n, Some(16));
    }

    /// `sum 10^-k!` has ||10^{k!} p|| about n^{-k}: polynomial, never below 10^{-2n}.
    #[test]
    fn factorial_series_is_not_geometric() {
        let p = RealExpr::liouville(10, LiouvilleExponents::Factorial, 6).unwrap();
        let l = Lattice::with_pq(p, RealExpr::integer(0)).unwrap();
        let cert = classify_theta(&l, &ClassifyOptions::default());
        assert_eq!(cert.classification, Classification::Inconclusive);
        assert!(cert.witness_n.is_none());
    }

    #[test]
    fn short_decimal_exhausts_precision() {
        let p = RealExpr::decimal("1.41421", 5).unwrap();
        let l = Lattice::with_pq(p, RealExpr::integer(0)).unwrap();
        let cert = classify_theta(&l, &ClassifyOptions::default());
        assert_eq!(cert.classification, Classification::Inconclusive);
        assert!(cert.diagnostic.unwrap().contains("precision"));
    }

    #[test]
    fn decay_profile_single_shell() {
        let prof = divisor_decay_profile(&Lattice::reference(), 1, 128);
        assert_eq!(prof.len(), 1);
        let l = Lattice::reference();
        let direct = ModeIndex::shell(1).iter().map(|&s| l.multiplier_a(s).norm()).fold(f64::INFINITY, f64::min);
        assert!((prof[0].1 - direct).abs() < 1e-12);
        assert!(prof[0].1 > 0.0);
    }

    #[test]
    fn decay_profile_nonincreasing() {
        let prof = divisor_decay_profile(&Lattice::reference(), 8, 128);
        assert!(prof.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(prof.iter().all(|p| p.1 > 0.0));
    }
}
