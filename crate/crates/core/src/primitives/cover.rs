//! Forms on the universal cover `C^2`: spectral terms multiplied by powers of `z2` and `conj(z2)`.
//!
//! Such terms are not invariant under the lattice; they only arise in the closed-form `(1,1)`
//! Aeppli construction at modes with `sigma2 = 0`, where the coefficient `C t4` is split as
//! `C (z2 - conj(z2)) / 2i` between the two primitives.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::decimal;
use crate::calculus::{ModeSymbols, OperatorKind};
use crate::lattice::{mode_multiplier_b, Lattice, ModeIndex};
use crate::specform::{CoeffBounds, CoeffFunction, FormError, Frame, Grading, Leg, SpectralForm};

/// `(sigma, frame, a, b)` for the term `coeff(t4) e_sigma z2^a conj(z2)^b frame`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoverKey {
    pub sigma: ModeIndex,
    pub frame: Frame,
    pub z2_power: u32,
    pub zb2_power: u32,
}

#[derive(Clone, Debug)]
pub struct CoverForm {
    lattice: Arc<Lattice>,
    grading: Grading,
    entries: BTreeMap<CoverKey, CoeffFunction>,
    bits: u32,
}

fn legs(op: OperatorKind) -> &'static [Leg] {
    match op {
        OperatorKind::Del => &[Leg::Dz1, Leg::Dz2],
        OperatorKind::Delbar => &[Leg::Dzb1, Leg::Dzb2],
        OperatorKind::D => &[Leg::Dz1, Leg::Dz2, Leg::Dzb1, Leg::Dzb2],
        OperatorKind::DelZ1 => &[Leg::Dz1],
        OperatorKind::DelbarZ1 => &[Leg::Dzb1],
        OperatorKind::DelZ2 => &[Leg::Dz2],
        OperatorKind::DelbarZ2 => &[Leg::Dzb2],
        OperatorKind::DelDelbar => &[],
    }
}

impl CoverForm {
    /// Zero form; `bits` is the precision of the mode multipliers used by [`CoverForm::apply`].
    pub fn zero(lattice: Arc<Lattice>, grading: Grading, bits: u32) -> Self {
        CoverForm { lattice, grading, entries: BTreeMap::new(), bits }
    }

    pub fn from_periodic(f: &SpectralForm, bits: u32) -> Self {
        let mut out = CoverForm::zero(f.lattice().clone(), f.grading(), bits);
        for (sigma, frame, coeff) in f.entries() {
            out.add(CoverKey { sigma, frame, z2_power: 0, zb2_power: 0 }, coeff);
        }
        out
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn entries(&self) -> impl Iterator<Item = (CoverKey, &CoeffFunction)> {
        self.entries.iter().map(|(k, c)| (*k, c))
    }

    pub fn add(&mut self, key: CoverKey, coeff: &CoeffFunction) {
        let e = self.entries.entry(key).or_default();
        for (k, m, c) in coeff.terms() {
            e.add_term(c, k, m);
        }
        if e.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn plus(&self, o: &CoverForm) -> CoverForm {
        let mut out = self.clone();
        for (key, c) in o.entries() {
            out.add(key, c);
        }
        out
    }

    pub fn sub(&self, o: &CoverForm) -> CoverForm {
        let mut out = self.clone();
        for (key, c) in o.entries() {
            out.add(key, &c.scale(Complex64::new(-1.0, 0.0)));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(CoeffFunction::max_abs).fold(0.0, f64::max)
    }

    /// The same form with every `t4^k` written as `((z2 - conj(z2)) / 2i)^k`, so that two
    /// forms agree exactly when their expansions have the same entries.
    pub fn expand_t4(&self) -> CoverForm {
        let mut out = CoverForm::zero(self.lattice.clone(), self.grading, self.bits);
        let two_i = Complex64::new(0.0, 2.0);
        for (key, coeff) in self.entries() {
            for (k, m, c) in coeff.terms() {
                let scale = c / two_i.powu(k);
                let mut binomial = 1.0;
                for j in 0..=k {
                    let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                    let target = CoverKey { z2_power: key.z2_power + j, zb2_power: key.zb2_power + k - j, ..key };
                    out.add(target, &CoeffFunction::monomial(scale * (sign * binomial), 0, m));
                    binomial = binomial * (k - j) as f64 / (j + 1) as f64;
                }
            }
        }
        out
    }

    /// Whether no term carries a power of `z2` or `conj(z2)`.
    pub fn is_periodic(&self) -> bool {
        self.entries.keys().all(|k| k.z2_power == 0 && k.zb2_power == 0)
    }

    /// The form on the torus group, when there are no cover terms.
    pub fn to_periodic(&self) -> Option<Result<SpectralForm, FormError>> {
        if !self.is_periodic() {
            return None;
        }
        let k_max = self.entries.values().map(CoeffFunction::max_k).max().unwrap_or(0);
        let m_max = self.entries.values().map(CoeffFunction::max_abs_m).max().unwrap_or(0);
        let mut f = SpectralForm::zero(self.lattice.clone(), self.grading)
            .with_bounds(CoeffBounds::default().union(CoeffBounds { k_max, m_max }));
        for (key, c) in self.entries() {
            if let Err(e) = f.add_coeff(key.sigma, key.frame, c) {
                return Some(Err(e));
            }
        }
        Some(Ok(f))
    }

    /// `op` by the chain rule: the mode and `t4` factors through the mode multipliers, the
    /// polynomial factors through `d/dz2 z2^a = a z2^(a-1)` and its conjugate.
    pub fn apply(&self, op: OperatorKind) -> CoverForm {
        if op == OperatorKind::DelDelbar {
            return self.apply(OperatorKind::Delbar).apply(OperatorKind::Del);
        }
        let grading = match (op, self.grading) {
            (OperatorKind::Del | OperatorKind::DelZ1 | OperatorKind::DelZ2, Grading::Bidegree(p, q)) => {
                Grading::Bidegree(p + 1, q)
            }
            (OperatorKind::Delbar | OperatorKind::DelbarZ1 | OperatorKind::DelbarZ2, Grading::Bidegree(p, q)) => {
                Grading::Bidegree(p, q + 1)
            }
            (_, g) => Grading::Degree(g.degree() + 1),
        };
        let mut out = CoverForm::zero(self.lattice.clone(), grading, self.bits);
        let mut symbols: BTreeMap<ModeIndex, ModeSymbols> = BTreeMap::new();
        for (key, a) in self.entries() {
            let sym = *symbols.entry(key.sigma).or_insert_with(|| ModeSymbols {
                a: self.lattice.multiplier_a_precise(key.sigma, self.bits),
                b: mode_multiplier_b(key.sigma),
            });
            for &leg in legs(op) {
                let Some((frame, sign)) = key.frame.with_leg_front(leg) else { continue };
                let sign = Complex64::new(sign as f64, 0.0);
                let target = CoverKey { frame, ..key };
                out.add(target, &sym.act(leg, a).scale(sign));
                let lowered = match leg {
                    Leg::Dz2 if key.z2_power > 0 => {
                        Some((CoverKey { z2_power: key.z2_power - 1, ..target }, key.z2_power))
                    }
                    Leg::Dzb2 if key.zb2_power > 0 => {
                        Some((CoverKey { zb2_power: key.zb2_power - 1, ..target }, key.zb2_power))
                    }
                    _ => None,
                };
                if let Some((k, power)) = lowered {
                    out.add(k, &a.scale(sign * power as f64));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries()
            .map(|(key, coeff)| {
                let terms: Vec<Value> = coeff
                    .terms()
                    .map(|(k, m, c)| json!({"re": decimal(c.re), "im": decimal(c.im), "k": k, "m": m}))
                    .collect();
                json!({
                    "sigma": key.sigma.0,
                    "I": key.frame.holo(),
                    "J": key.frame.anti(),
                    "z2_power": key.z2_power,
                    "zb2_power": key.zb2_power,
                    "terms": terms,
                })
            })
            .collect();
        match self.grading {
            Grading::Bidegree(p, q) => json!({"bidegree": [p, q], "cover": true, "entries": entries}),
            Grading::Degree(k) => json!({"degree": k, "cover": true, "entries": entries}),
        }
    }
}
