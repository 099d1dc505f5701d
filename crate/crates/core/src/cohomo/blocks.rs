//! Mode blocks of the truncated complex and the operator matrices on them.
//!
//! Every operator preserves both the mode `sigma` and the exponential index `m`, so the
//! engine works on `(sigma, m)` sub-blocks in the scaled variable `s = 2 pi t4`, with basis
//! `s^k / k! * e^{m s} * frame` and every first-order operator divided by `pi i`. On such a block
//! `dbar_z1 = alpha`, `d_z1 = conj(alpha)`, `d_z2 = (s2 - m) - d/ds`, `dbar_z2 = (s2 + m) + d/ds`
//! with `alpha = A / (pi i)`, and `d/ds` shifts the divided powers down with unit coefficients,
//! which keeps the blocks well conditioned. Kernels and images are unchanged by this rescaling.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;

use super::linalg::{quad_of, Mat, Quad, QuadComplex, Scalar};
use super::{CohomoError, Truncation};
use crate::calculus::{ModeSymbols, OperatorKind};
use crate::lattice::{Lattice, ModeIndex};
use crate::specform::{CoeffFunction, CoefficientSheaf, Frame, Grading, Leg, SpectralForm};

/// Scaled multipliers of one mode.
#[derive(Clone, Debug)]
pub struct BlockSymbol<S> {
    pub alpha: S,
    pub alpha_bar: S,
    pub s2: i64,
}

impl BlockSymbol<Complex64> {
    pub fn float(lattice: &Lattice, sigma: ModeIndex, bits: u32) -> Self {
        let alpha = lattice.multiplier_a_precise(sigma, bits) / Complex64::new(0.0, PI);
        BlockSymbol { alpha, alpha_bar: alpha.conj(), s2: sigma.s2() as i64 }
    }
}

impl BlockSymbol<QuadComplex> {
    /// `alpha = u + i w / Im tau` with `u = s1 - p s2`, `w = s3 - q s2 - u Re tau`, in `Q(sqrt d)(i)`.
    pub fn exact(lattice: &Lattice, sigma: ModeIndex) -> Result<Self, CohomoError> {
        let d = lattice.quadratic_field().ok_or(CohomoError::NotExact)?;
        let q = |e| quad_of(e, d).ok_or(CohomoError::NotExact);
        let (re_tau, im_tau, p, qq) = (q(lattice.tau_re())?, q(lattice.tau_im())?, q(lattice.p())?, q(lattice.q())?);
        let int = |n: i32| {
            QuadComplex::new(Quad::rational(BigRational::from_integer(n.into())), Quad::rational(BigRational::zero()))
        };
        let real = |x: Quad| QuadComplex::new(x, Quad::rational(BigRational::zero()));
        let [s1, s2, s3] = sigma.0;
        let u = int(s1) - real(p) * int(s2);
        let w = int(s3) - real(qq) * int(s2) - u.clone() * real(re_tau);
        let im = w * real(im_tau).inv();
        let alpha = QuadComplex::new(u.re, im.re);
        Ok(BlockSymbol { alpha_bar: alpha.conj(), alpha, s2: s2 as i64 })
    }
}

/// Coefficient space of one grading on a `(sigma, m)` sub-block, up to degree `k_max` in `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpace {
    pub grading: Grading,
    pub frames: Vec<Frame>,
    pub k_max: u32,
}

impl BlockSpace {
    pub fn new(grading: Grading, k_max: u32) -> Self {
        BlockSpace { grading, frames: grading.frames(), k_max }
    }

    pub fn dim(&self) -> usize {
        self.frames.len() * (self.k_max as usize + 1)
    }

    pub fn index(&self, frame_pos: usize, k: u32) -> usize {
        frame_pos * (self.k_max as usize + 1) + k as usize
    }

    pub fn frame_pos(&self, frame: Frame) -> Option<usize> {
        self.frames.iter().position(|f| *f == frame)
    }

    /// Row positions of this space inside the same grading at a larger `k_max`.
    pub fn embedding_into(&self, big: &BlockSpace) -> Vec<usize> {
        assert_eq!(self.grading, big.grading);
        assert!(big.k_max >= self.k_max);
        (0..self.frames.len())
            .flat_map(|f| (0..=self.k_max).map(move |k| (f, k)))
            .map(|(f, k)| big.index(f, k))
            .collect()
    }
}

/// Grading after applying `op`; out-of-range results have no frames.
pub fn image_grading(op: OperatorKind, g: Grading) -> Grading {
    let (dp, dq) = match op {
        OperatorKind::Del | OperatorKind::DelZ1 | OperatorKind::DelZ2 => (1, 0),
        OperatorKind::Delbar | OperatorKind::DelbarZ1 | OperatorKind::DelbarZ2 => (0, 1),
        OperatorKind::DelDelbar => (1, 1),
        OperatorKind::D => return Grading::Degree(g.degree() + 1),
    };
    match g {
        Grading::Bidegree(p, q) => Grading::Bidegree(p + dp, q + dq),
        Grading::Degree(k) => Grading::Degree(k + dp + dq),
    }
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

/// `(k', value)` pairs of a scaled one-leg action on `s^k / k! * e^{m s}`.
fn leg_action<S: Scalar>(leg: Leg, sym: &BlockSymbol<S>, m: i64, k: u32) -> Vec<(u32, S)> {
    let lower = |sign: i64| if k > 0 { Some((k - 1, S::from_i64(sign))) } else { None };
    match leg {
        Leg::Dzb1 => vec![(k, sym.alpha.clone())],
        Leg::Dz1 => vec![(k, sym.alpha_bar.clone())],
        Leg::Dz2 => std::iter::once((k, S::from_i64(sym.s2 - m))).chain(lower(-1)).collect(),
        Leg::Dzb2 => std::iter::once((k, S::from_i64(sym.s2 + m))).chain(lower(1)).collect(),
    }
}

/// Matrix of `op` from `V_K(g)` to `V_K(image_grading(op, g))` on the `(sigma, m)` sub-block.
pub fn block_operator<S: Scalar>(op: OperatorKind, sym: &BlockSymbol<S>, m: i64, g: Grading, k_max: u32) -> Mat<S> {
    assemble_operator(op, g, k_max, &|leg, k| leg_action(leg, sym, m, k))
}

/// One-leg actions on `t4^k` at the zero mode with `m = 0`, where `A = B = 0` and
/// `d_z2 = -dbar_z2 = (1 / 2i) d/dt4`.
fn zero_leg_action(leg: Leg, k: u32) -> Vec<(u32, QuadComplex)> {
    let half_k = |sign: i64| {
        let im = Quad::rational(BigRational::new((sign * k as i64).into(), 2.into()));
        QuadComplex::new(Quad::rational(BigRational::zero()), im)
    };
    match leg {
        Leg::Dzb1 | Leg::Dz1 => Vec::new(),
        _ if k == 0 => Vec::new(),
        Leg::Dz2 => vec![(k - 1, half_k(-1))],
        Leg::Dzb2 => vec![(k - 1, half_k(1))],
    }
}

/// Matrix of `op` on the zero-mode, `m = 0` block in the unscaled basis `t4^k * frame`.
/// Its entries lie in `Q(i)` for every lattice.
pub fn zero_block_operator(op: OperatorKind, g: Grading, k_max: u32) -> Mat<QuadComplex> {
    assemble_operator(op, g, k_max, &zero_leg_action)
}

fn assemble_operator<S: Scalar>(
    op: OperatorKind,
    g: Grading,
    k_max: u32,
    action: &dyn Fn(Leg, u32) -> Vec<(u32, S)>,
) -> Mat<S> {
    if op == OperatorKind::DelDelbar {
        let mid = image_grading(OperatorKind::Delbar, g);
        let inner = assemble_operator(OperatorKind::Delbar, g, k_max, action);
        let outer = assemble_operator(OperatorKind::Del, mid, k_max, action);
        return outer.mul(&inner);
    }
    let dom = BlockSpace::new(g, k_max);
    let cod = BlockSpace::new(image_grading(op, g), k_max);
    let mut mat = Mat::zeros(cod.dim(), dom.dim());
    for (fp, &frame) in dom.frames.iter().enumerate() {
        for &leg in legs(op) {
            let Some((target, sign)) = frame.with_leg_front(leg) else { continue };
            let Some(tp) = cod.frame_pos(target) else { continue };
            for k in 0..=k_max {
                for (k2, v) in action(leg, k) {
                    let v = if sign < 0 { -v } else { v };
                    mat.add_at(cod.index(tp, k2), dom.index(fp, k), v);
                }
            }
        }
    }
    mat
}

/// Linear constraints cutting out the forms of grading `g` with coefficients in `sheaf`: each
/// admitted frame's coefficient must be annihilated by the `z2`-operator its sheaf requires (for
/// `G`, the sheaf its frame requires); coefficients on frames the sheaf excludes must vanish.
pub fn sheaf_constraints<S: Scalar>(
    sheaf: CoefficientSheaf,
    sym: &BlockSymbol<S>,
    m: i64,
    g: Grading,
    k_max: u32,
) -> Mat<S> {
    assemble_sheaf_constraints(sheaf, g, k_max, &|leg, k| leg_action(leg, sym, m, k))
}

/// Sheaf constraints on the zero-mode, `m = 0` block in the unscaled basis.
pub fn zero_sheaf_constraints(sheaf: CoefficientSheaf, g: Grading, k_max: u32) -> Mat<QuadComplex> {
    assemble_sheaf_constraints(sheaf, g, k_max, &zero_leg_action)
}

fn assemble_sheaf_constraints<S: Scalar>(
    sheaf: CoefficientSheaf,
    g: Grading,
    k_max: u32,
    action: &dyn Fn(Leg, u32) -> Vec<(u32, S)>,
) -> Mat<S> {
    let space = BlockSpace::new(g, k_max);
    let single = |leg: Leg| {
        let mut a = Mat::<S>::zeros(k_max as usize + 1, k_max as usize + 1);
        for k in 0..=k_max {
            for (k2, v) in action(leg, k) {
                a.add_at(k2 as usize, k as usize, v);
            }
        }
        a
    };
    let mut blocks: Option<Mat<S>> = None;
    for &frame in &space.frames {
        let component = match sheaf {
            _ if !sheaf.admits_frame(frame) => None,
            CoefficientSheaf::G => CoefficientSheaf::g_component(frame),
            other => Some(other),
        };
        let b = match component {
            Some(CoefficientSheaf::F) => single(Leg::Dzb2),
            Some(CoefficientSheaf::FBar) => single(Leg::Dz2),
            Some(CoefficientSheaf::G) => single(Leg::Dz2).mul(&single(Leg::Dzb2)),
            None => Mat::identity(k_max as usize + 1),
        };
        blocks = Some(match blocks {
            None => b,
            Some(acc) => acc.block_diag(&b),
        });
    }
    blocks.unwrap_or_else(|| Mat::zeros(0, 0))
}

/// Constraints of the `G`-forms of grading `g`.
pub fn g_constraints<S: Scalar>(sym: &BlockSymbol<S>, m: i64, g: Grading, k_max: u32) -> Mat<S> {
    sheaf_constraints(CoefficientSheaf::G, sym, m, g, k_max)
}

/// Coordinates of the `(sigma, m)` part of `f` in the divided-power basis of `space`.
/// Every frame of `f` must belong to `space` and every degree must be at most `space.k_max`.
pub fn block_coords(f: &SpectralForm, sigma: ModeIndex, m: i64, space: &BlockSpace) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); space.dim()];
    for (s, frame, coeff) in f.entries() {
        if s != sigma {
            continue;
        }
        let fp = space.frame_pos(frame).expect("frame of the block grading");
        for (k, mm, c) in coeff.terms() {
            if mm as i64 == m {
                assert!(k <= space.k_max, "coefficient degree beyond the block");
                x[space.index(fp, k)] += c / scaled_basis_factor(k);
            }
        }
    }
    x
}

/// Adds the `(sigma, m)` form with divided-power coordinates `x` to `f`, dropping entries of
/// magnitude at most `prune`.
pub fn add_block_coords(
    f: &mut SpectralForm,
    sigma: ModeIndex,
    m: i64,
    space: &BlockSpace,
    x: &[Complex64],
    prune: f64,
) -> Result<(), crate::specform::FormError> {
    for (fp, &frame) in space.frames.iter().enumerate() {
        for k in 0..=space.k_max {
            let c = x[space.index(fp, k)] * scaled_basis_factor(k);
            if c.norm() > prune {
                f.add_term(sigma, frame, c, k, m as i32)?;
            }
        }
    }
    Ok(())
}

/// `(2 pi)^k / k!`: the `t4^k` coefficient of the scaled basis element `s^k / k!`.
pub fn scaled_basis_factor(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * 2.0 * PI / j as f64)
}

/// Element `(frame, k, m)` of the unscaled basis `t4^k e^{2 pi m t4} * frame` of a mode block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisElement {
    pub frame: Frame,
    pub k: u32,
    pub m: i32,
}

/// Ordered basis of the `sigma` block of grading `g`: frames in canonical order, then `k`, then `m`.
pub fn mode_block_basis(g: Grading, trunc: &Truncation) -> Vec<BasisElement> {
    let mm = trunc.m as i32;
    g.frames()
        .into_iter()
        .flat_map(|frame| (0..=trunc.k).flat_map(move |k| (-mm..=mm).map(move |m| BasisElement { frame, k, m })))
        .collect()
}

/// Matrix of `op` on the unscaled `sigma` block: column `j` holds the coordinates of `op(basis_j)`.
pub fn operator_matrix(
    op: OperatorKind,
    lattice: &Lattice,
    sigma: ModeIndex,
    g: Grading,
    trunc: &Truncation,
) -> Mat<Complex64> {
    if op == OperatorKind::DelDelbar {
        let inner = operator_matrix(OperatorKind::Delbar, lattice, sigma, g, trunc);
        let outer = operator_matrix(OperatorKind::Del, lattice, sigma, image_grading(OperatorKind::Delbar, g), trunc);
        return outer.mul(&inner);
    }
    let dom = mode_block_basis(g, trunc);
    let cod = mode_block_basis(image_grading(op, g), trunc);
    let sym = ModeSymbols { a: lattice.multiplier_a(sigma), b: crate::lattice::mode_multiplier_b(sigma) };
    let mut mat = Mat::zeros(cod.len(), dom.len());
    for (j, e) in dom.iter().enumerate() {
        for &leg in legs(op) {
            let Some((target, sign)) = e.frame.with_leg_front(leg) else { continue };
            let image = sym.act(leg, &CoeffFunction::monomial(Complex64::new(sign as f64, 0.0), e.k, e.m));
            for (k, m, c) in image.terms() {
                let i = cod
                    .iter()
                    .position(|b| b.frame == target && b.k == k && b.m == m)
                    .expect("operators never raise k or |m|");
                mat.add_at(i, j, c);
            }
        }
    }
    mat
}

/// Form of the unscaled basis coordinates `x` at mode `sigma`.
pub fn block_vector_form(
    lattice: &std::sync::Arc<Lattice>,
    sigma: ModeIndex,
    g: Grading,
    trunc: &Truncation,
    x: &[Complex64],
) -> SpectralForm {
    let basis = mode_block_basis(g, trunc);
    let mut f = SpectralForm::zero(lattice.clone(), g)
        .with_bounds(crate::specform::CoeffBounds { k_max: trunc.k.max(4), m_max: trunc.m.max(4) });
    for (e, c) in basis.iter().zip(x) {
        f.add_term(sigma, e.frame, *c, e.k, e.m).expect("basis respects the bounds");
    }
    f
}
