//! The operators `del`, `delbar`, `d` and `del delbar`, acting mode by mode on spectral forms.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::lattice::{mode_multiplier_b, ModeIndex};
use crate::specform::{CoeffFunction, Frame, Grading, Leg, SpectralForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Del,
    Delbar,
    D,
    DelDelbar,
    DelZ1,
    DelbarZ1,
    DelZ2,
    DelbarZ2,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 8] = [
        OperatorKind::Del,
        OperatorKind::Delbar,
        OperatorKind::D,
        OperatorKind::DelDelbar,
        OperatorKind::DelZ1,
        OperatorKind::DelbarZ1,
        OperatorKind::DelZ2,
        OperatorKind::DelbarZ2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Del => "del",
            OperatorKind::Delbar => "delbar",
            OperatorKind::D => "d",
            OperatorKind::DelDelbar => "deldelbar",
            OperatorKind::DelZ1 => "del_z1",
            OperatorKind::DelbarZ1 => "delbar_z1",
            OperatorKind::DelZ2 => "del_z2",
            OperatorKind::DelbarZ2 => "delbar_z2",
        }
    }

    /// The basic one-leg actions the operator sums over.
    fn legs(self) -> &'static [Leg] {
        match self {
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
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        OperatorKind::ALL.into_iter().find(|op| op.name() == s).ok_or_else(|| format!("unknown operator \"{s}\""))
    }
}

/// Multipliers of the four one-leg actions at one mode.
#[derive(Clone, Copy, Debug)]
pub struct ModeSymbols {
    pub a: Complex64,
    pub b: Complex64,
}

impl ModeSymbols {
    pub fn of(f: &SpectralForm, sigma: ModeIndex) -> Self {
        ModeSymbols { a: f.lattice().multiplier_a(sigma), b: mode_multiplier_b(sigma) }
    }

    /// Coefficient produced by the derivative along `leg`.
    pub fn act(&self, leg: Leg, a: &CoeffFunction) -> CoeffFunction {
        match leg {
            Leg::Dzb1 => a.scale(self.a),
            Leg::Dz1 => a.scale(-self.a.conj()),
            Leg::Dz2 => a.del_z2(self.b),
            Leg::Dzb2 => a.delbar_z2(self.b),
        }
    }
}

fn output_grading(op: OperatorKind, g: Grading) -> Grading {
    match (op, g) {
        (OperatorKind::D, g) => Grading::Degree(g.degree() + 1),
        (_, Grading::Degree(k)) => Grading::Degree(k + op_degree(op)),
        (OperatorKind::Del | OperatorKind::DelZ1 | OperatorKind::DelZ2, Grading::Bidegree(p, q)) => {
            Grading::Bidegree(p + 1, q)
        }
        (OperatorKind::Delbar | OperatorKind::DelbarZ1 | OperatorKind::DelbarZ2, Grading::Bidegree(p, q)) => {
            Grading::Bidegree(p, q + 1)
        }
        (OperatorKind::DelDelbar, Grading::Bidegree(p, q)) => Grading::Bidegree(p + 1, q + 1),
    }
}

fn op_degree(op: OperatorKind) -> u8 {
    if op == OperatorKind::DelDelbar {
        2
    } else {
        1
    }
}

fn clamp(g: Grading) -> Grading {
    match g {
        Grading::Bidegree(p, q) => Grading::Bidegree(p.min(2), q.min(2)),
        Grading::Degree(k) => Grading::Degree(k.min(4)),
    }
}

/// `op(f)`; a result whose degree leaves the manifold's range is the zero form.
pub fn apply(op: OperatorKind, f: &SpectralForm) -> SpectralForm {
    if op == OperatorKind::DelDelbar {
        return apply(OperatorKind::Del, &apply(OperatorKind::Delbar, f));
    }
    let grading = output_grading(op, f.grading());
    let mut out = SpectralForm::zero(f.lattice().clone(), clamp(grading)).with_bounds(f.bounds());
    if !grading.is_in_range() {
        return out;
    }
    let mut symbols: BTreeMap<ModeIndex, ModeSymbols> = BTreeMap::new();
    for (sigma, frame, a) in f.entries() {
        let sym = *symbols.entry(sigma).or_insert_with(|| ModeSymbols::of(f, sigma));
        for &leg in op.legs() {
            let Some((target, sign)) = frame.with_leg_front(leg) else { continue };
            if !grading.admits(target) {
                continue;
            }
            let image = sym.act(leg, a).scale(Complex64::new(sign as f64, 0.0));
            out.add_coeff(sigma, target, &image).expect("operators preserve the coefficient class");
        }
    }
    out
}

/// Whether every coefficient of `op(f)` is at most `tol * (1 + max |f|)`.
pub fn is_closed(op: OperatorKind, f: &SpectralForm, tol: f64) -> bool {
    apply(op, f).max_abs() <= tol * (1.0 + f.max_abs())
}

/// Five-point derivative of each frame coefficient along a coordinate leg,
/// through `d/dz = (d/dx - i d/dy)/2` and `d/dzbar = (d/dx + i d/dy)/2`.
fn numeric_partial(f: &SpectralForm, leg: Leg, z: (Complex64, Complex64)) -> BTreeMap<Frame, Complex64> {
    let h = 1e-4;
    let (var, conj) = match leg {
        Leg::Dz1 => (0, false),
        Leg::Dz2 => (1, false),
        Leg::Dzb1 => (0, true),
        Leg::Dzb2 => (1, true),
    };
    let shifted = |dir: Complex64, s: f64| {
        let mut p = [z.0, z.1];
        p[var] += dir * s;
        f.evaluate(p[0], p[1])
    };
    let stencil = |dir: Complex64| {
        let (m2, m1, p1, p2) = (shifted(dir, -2.0 * h), shifted(dir, -h), shifted(dir, h), shifted(dir, 2.0 * h));
        m2.keys().map(|k| (*k, (m2[k] - p2[k] + 8.0 * (p1[k] - m1[k])) / (12.0 * h))).collect::<BTreeMap<_, _>>()
    };
    let dx = stencil(Complex64::new(1.0, 0.0));
    let dy = stencil(Complex64::new(0.0, 1.0));
    let i = if conj { Complex64::new(0.0, 1.0) } else { Complex64::new(0.0, -1.0) };
    dx.keys().map(|k| (*k, (dx[k] + i * dy[k]) / 2.0)).collect()
}

/// First-order `op(f)` at `z` from five-point finite differences of [`SpectralForm::evaluate`];
/// an oracle independent of the mode symbols.
pub fn finite_difference(op: OperatorKind, f: &SpectralForm, z: (Complex64, Complex64)) -> BTreeMap<Frame, Complex64> {
    let mut out: BTreeMap<Frame, Complex64> = BTreeMap::new();
    for &leg in op.legs() {
        for (fr, v) in numeric_partial(f, leg, z) {
            if let Some((target, sign)) = fr.with_leg_front(leg) {
                *out.entry(target).or_default() += v * sign as f64;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::lattice::Lattice;
    use crate::specform::random::{random_form, random_point, seeded_rng, RandomFormConfig};

    fn lat() -> Arc<Lattice> {
        Arc::new(Lattice::reference())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn frame(i: &[u8], j: &[u8]) -> Frame {
        Frame::from_indices(i, j).unwrap()
    }

    #[test]
    fn d_of_constant_is_zero() {
        let f = SpectralForm::constant(lat(), Frame::EMPTY, c(3.0, -1.0));
        for op in OperatorKind::ALL {
            assert!(apply(op, &f).is_zero(), "{op}");
        }
    }

    #[test]
    fn deldelbar_composites() {
        let l = lat();
        let s = ModeIndex::new(1, 2, -1);
        let f = SpectralForm::single(l.clone(), s, Frame::EMPTY, CoeffFunction::constant(c(1.0, 0.0))).unwrap();
        let g = apply(OperatorKind::DelDelbar, &f);
        let a = l.multiplier_a(s);
        let got = g.coefficient(s, frame(&[1], &[1])).unwrap().coefficient(0, 0);
        assert!((got - c(-a.norm_sqr(), 0.0)).norm() < 1e-12);
        // (1/4) a'' + B^2 a on the dz2 ^ dzbar2 frame, for a = t^2 exp(2 pi t).
        let coeff = CoeffFunction::monomial(c(1.0, 0.0), 2, 1);
        let f = SpectralForm::single(l.clone(), s, Frame::EMPTY, coeff.clone()).unwrap();
        let g = apply(OperatorKind::DelDelbar, &f);
        let b = mode_multiplier_b(s);
        let expected = &coeff.derivative().derivative().scale(c(0.25, 0.0)) + &coeff.scale(b * b);
        let got = g.coefficient(s, frame(&[2], &[2])).unwrap();
        assert!((got - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn d_of_imaginary_part_form() {
        let l = lat();
        let f = SpectralForm::single(
            l.clone(),
            ModeIndex::ZERO,
            frame(&[1], &[]),
            CoeffFunction::monomial(c(0.0, 2.0), 1, 0),
        )
        .unwrap();
        let g = apply(OperatorKind::D, &f);
        assert_eq!(g.len(), 2);
        assert_eq!(g.coefficient(ModeIndex::ZERO, frame(&[1, 2], &[])), Some(&CoeffFunction::constant(c(-1.0, 0.0))));
        assert_eq!(g.coefficient(ModeIndex::ZERO, frame(&[1], &[2])), Some(&CoeffFunction::constant(c(1.0, 0.0))));
        let z = (c(0.2, 0.1), c(-0.3, 0.4));
        let num = finite_difference(OperatorKind::D, &f, z);
        let sym = g.evaluate(z.0, z.1);
        for (fr, v) in sym {
            assert!((v - num.get(&fr).copied().unwrap_or_default()).norm() < 1e-6);
        }
    }

    #[test]
    fn closedness_examples() {
        let l = lat();
        let top = SpectralForm::constant(l.clone(), frame(&[1, 2], &[1]), c(1.0, 0.0));
        assert!(is_closed(OperatorKind::D, &top, 1e-12));
        let e = SpectralForm::single(
            l.clone(),
            ModeIndex::ZERO,
            frame(&[1], &[1]),
            CoeffFunction::monomial(c(1.0, 0.0), 1, 0),
        )
        .unwrap();
        assert!(!is_closed(OperatorKind::D, &e, 1e-12));
        assert!(is_closed(OperatorKind::DelDelbar, &e, 1e-12));
    }

    #[test]
    fn overflow_gives_zero() {
        let f = SpectralForm::constant(lat(), frame(&[1, 2], &[]), c(1.0, 0.0));
        let g = apply(OperatorKind::Del, &f);
        assert!(g.is_zero());
        assert_eq!(g.grading(), Grading::Bidegree(2, 0));
    }

    #[test]
    fn finite_difference_oracle() {
        let l = lat();
        let mut rng = seeded_rng(3);
        let cfg = RandomFormConfig { mode_radius: 1, entries: 3, terms: 2, k_max: 1, m_max: 1 };
        for round in 0..20 {
            let g = Grading::Bidegree((round % 3) as u8, (round / 3 % 2) as u8);
            let f = random_form(&mut rng, &l, g, &cfg);
            let z = random_point(&mut rng);
            for op in [OperatorKind::Del, OperatorKind::Delbar, OperatorKind::D] {
                let sym = apply(op, &f).evaluate(z.0, z.1);
                let num = finite_difference(op, &f, z);
                for (fr, v) in &num {
                    let s = sym.get(fr).copied().unwrap_or_default();
                    assert!((s - v).norm() <= 1e-6 * (1.0 + v.norm()), "{op} {fr}: {s} vs {v}");
                }
            }
        }
    }

    #[test]
    fn mode_support_preserved() {
        let l = lat();
        let mut rng = seeded_rng(5);
        let f = random_form(&mut rng, &l, Grading::Bidegree(0, 1), &RandomFormConfig::default());
        for op in OperatorKind::ALL {
            assert!(apply(op, &f).modes().is_subset(&f.modes()));
        }
    }

    #[test]
    fn names_round_trip() {
        for op in OperatorKind::ALL {
            assert_eq!(op.name().parse::<OperatorKind>().unwrap(), op);
        }
    }
}
