//! Per-block linear solves of `target = sum_i op_i(x_i) + residual`.
//!
//! Every operator preserves the mode `sigma` and the exponential index `m`, so the problem splits
//! into `(sigma, m)` blocks. Blocks away from `(0, 0)` are solved in floating point on the scaled
//! divided-power basis of the cohomology engine. The `(0, 0)` block carries the residual
//! generators; its operators have entries in `Q(i)`, so it is solved exactly in the unscaled basis
//! `t4^k * frame`, falling back to floating point when the input's rounding makes the exact system
//! inconsistent.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;

use super::{Gauge, SolveError, SolveOptions};
use crate::calculus::OperatorKind;
use crate::cohomo::blocks::{
    add_block_coords, block_coords, block_operator, image_grading, sheaf_constraints, zero_block_operator,
    zero_sheaf_constraints, BlockSpace, BlockSymbol,
};
use crate::cohomo::linalg::{ExactEngine, FloatEngine, Mat, Quad, QuadComplex, RankEngine, Scalar};
use crate::lattice::{Lattice, ModeIndex};
use crate::specform::random::{dyadic_complex, seeded_rng};
use crate::specform::{CoeffBounds, CoefficientSheaf, Frame, Grading, SpectralForm};

/// Subspace of a piece's grading the unknown is drawn from.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Domain {
    Any,
    Sheaf(CoefficientSheaf),
    KernelOf(OperatorKind),
}

/// One unknown `x_i` of grading `grading`, entering the target through `op` (the identity when `None`).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Piece {
    pub grading: Grading,
    pub op: Option<OperatorKind>,
    pub domain: Domain,
}

/// Residual generator `t4^k * frame` at the zero mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Generator {
    pub frame: Frame,
    pub k: u32,
}

impl Generator {
    pub fn constant(frame: Frame) -> Self {
        Generator { frame, k: 0 }
    }

    pub fn name(&self) -> String {
        let power = match self.k {
            0 => String::new(),
            1 => "t4".to_string(),
            k => format!("t4^{k}"),
        };
        match (power.is_empty(), self.frame == Frame::EMPTY) {
            (true, _) => self.frame.to_string(),
            (false, true) => power,
            (false, false) => format!("{power} {}", self.frame),
        }
    }
}

pub(crate) struct LinearProblem {
    pub target: Grading,
    pub pieces: Vec<Piece>,
    pub generators: Vec<Generator>,
    /// Extra polynomial degree the unknowns may need beyond the input's.
    pub headroom: u32,
}

pub(crate) struct LinearSolution {
    pub pieces: Vec<SpectralForm>,
    /// One coefficient per generator; generators that are exact modulo the image get `0`.
    pub coefficients: Vec<Complex64>,
    pub residual: SpectralForm,
}

fn order(op: Option<OperatorKind>) -> i32 {
    match op {
        None => 0,
        Some(OperatorKind::DelDelbar) => 2,
        Some(_) => 1,
    }
}

fn op_grading(piece: &Piece) -> Grading {
    match piece.op {
        Some(op) => image_grading(op, piece.grading),
        None => piece.grading,
    }
}

/// Rank engines that can also solve.
trait SolveEngine: RankEngine {
    /// A solution of `m x = b`, or the size of the mismatch when there is none.
    fn solve(&self, m: &Mat<Self::S>, b: &[Self::S]) -> Result<Result<Vec<Self::S>, f64>, SolveError>;

    fn random_scalar<R: Rng>(rng: &mut R) -> Self::S;
}

impl SolveEngine for FloatEngine {
    fn solve(&self, m: &Mat<Complex64>, b: &[Complex64]) -> Result<Result<Vec<Complex64>, f64>, SolveError> {
        let x = self.least_squares(m, b)?;
        let scale = 1.0 + b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mismatch = (0..m.rows())
            .map(|r| ((0..m.cols()).map(|c| *m.get(r, c) * x[c]).sum::<Complex64>() - b[r]).norm())
            .fold(0.0, f64::max)
            / scale;
        Ok(if mismatch <= super::RECOMPOSITION_TOL { Ok(x) } else { Err(mismatch) })
    }

    fn random_scalar<R: Rng>(rng: &mut R) -> Complex64 {
        dyadic_complex(rng)
    }
}

impl SolveEngine for ExactEngine {
    fn solve(&self, m: &Mat<QuadComplex>, b: &[QuadComplex]) -> Result<Result<Vec<QuadComplex>, f64>, SolveError> {
        Ok(ExactEngine::solve(self, m, b).ok_or(f64::INFINITY))
    }

    fn random_scalar<R: Rng>(rng: &mut R) -> QuadComplex {
        QuadComplex::from_i64(rng.gen_range(-3..=3))
    }
}

/// Matrices of one block: per piece the operator (with its domain basis) and the basis itself.
struct BlockSystem<S> {
    ops: Vec<Mat<S>>,
    bases: Vec<Mat<S>>,
    generators: Mat<S>,
    target: Vec<S>,
}

/// Block unknowns `x_i` in the block basis and the generator coefficients.
struct BlockResult<S> {
    xs: Vec<Vec<S>>,
    coefficients: Vec<S>,
}

fn column<S: Scalar>(m: &Mat<S>, c: usize) -> Mat<S> {
    Mat::from_columns(m.rows(), &[m.column(c).to_vec()])
}

fn solve_system<E: SolveEngine>(
    engine: &E,
    sys: &BlockSystem<E::S>,
    gauge: Gauge,
    seed_mix: u64,
) -> Result<Result<BlockResult<E::S>, f64>, SolveError> {
    let rows = sys.target.len();
    let images: Vec<Mat<E::S>> = sys.ops.iter().zip(&sys.bases).map(|(op, b)| op.mul(b)).collect();
    let m = images.iter().fold(Mat::zeros(rows, 0), |acc, x| acc.hcat(x));
    let mut selected = Vec::new();
    let mut span = m.clone();
    let mut rank = engine.rank(&span)?;
    for g in 0..sys.generators.cols() {
        let grown = span.hcat(&column(&sys.generators, g));
        let r = engine.rank(&grown)?;
        if r > rank {
            selected.push(g);
            span = grown;
            rank = r;
        }
    }
    let z = match engine.solve(&span, &sys.target)? {
        Ok(z) => z,
        Err(mismatch) => return Ok(Err(mismatch)),
    };
    let mut y = z[..m.cols()].to_vec();
    if let Gauge::Seeded(seed) = gauge {
        let kernel = engine.kernel(&m)?;
        let mut rng = seeded_rng(seed ^ seed_mix);
        for c in 0..kernel.cols() {
            let g = E::random_scalar(&mut rng);
            for (yi, ki) in y.iter_mut().zip(kernel.column(c)) {
                *yi = yi.clone() + ki.clone() * g.clone();
            }
        }
    }
    let mut coefficients = vec![<E::S as Scalar>::zero(); sys.generators.cols()];
    for (i, &g) in selected.iter().enumerate() {
        coefficients[g] = z[m.cols() + i].clone();
    }
    let mut xs = Vec::new();
    let mut offset = 0;
    for (img, basis) in images.iter().zip(&sys.bases) {
        let yi = Mat::from_columns(img.cols(), &[y[offset..offset + img.cols()].to_vec()]);
        xs.push(basis.mul(&yi).column(0).to_vec());
        offset += img.cols();
    }
    Ok(Ok(BlockResult { xs, coefficients }))
}

fn mode_seed(sigma: ModeIndex, m: i64) -> u64 {
    let [a, b, c] = sigma.0;
    let mix = |h: u64, v: i64| (h ^ v as u64).wrapping_mul(0x100_0000_01b3);
    [a as i64, b as i64, c as i64, m].into_iter().fold(0xcbf2_9ce4_8422_2325, mix)
}

fn exact_real(x: f64) -> Quad {
    Quad::rational(BigRational::from_float(x).unwrap_or_else(BigRational::zero))
}

fn exact_complex(c: Complex64) -> QuadComplex {
    QuadComplex::new(exact_real(c.re), exact_real(c.im))
}

/// The `(0, 0)` block in the unscaled basis, exactly.
fn zero_system(
    problem: &LinearProblem,
    input: &SpectralForm,
    k_dom: u32,
) -> Result<BlockSystem<QuadComplex>, SolveError> {
    let target = BlockSpace::new(problem.target, k_dom);
    let mut ops = Vec::new();
    let mut bases = Vec::new();
    for piece in &problem.pieces {
        let dom = BlockSpace::new(piece.grading, k_dom);
        ops.push(match piece.op {
            Some(op) => zero_block_operator(op, piece.grading, k_dom),
            None => Mat::identity(dom.dim()),
        });
        bases.push(match piece.domain {
            Domain::Any => Mat::identity(dom.dim()),
            Domain::Sheaf(s) => ExactEngine.kernel(&zero_sheaf_constraints(s, piece.grading, k_dom))?,
            Domain::KernelOf(op) => ExactEngine.kernel(&zero_block_operator(op, piece.grading, k_dom))?,
        });
    }
    let gens: Vec<Vec<QuadComplex>> = problem
        .generators
        .iter()
        .map(|g| {
            let mut v = vec![<QuadComplex as Scalar>::zero(); target.dim()];
            let fp = target.frame_pos(g.frame).expect("generator frame of the target grading");
            v[target.index(fp, g.k)] = QuadComplex::from_i64(1);
            v
        })
        .collect();
    let mut rhs = vec![<QuadComplex as Scalar>::zero(); target.dim()];
    for (s, frame, coeff) in input.entries() {
        if !s.is_zero() {
            continue;
        }
        let fp = target.frame_pos(frame).expect("input frame of the target grading");
        for (k, m, c) in coeff.terms() {
            if m == 0 {
                rhs[target.index(fp, k)] = exact_complex(c);
            }
        }
    }
    Ok(BlockSystem { ops, bases, generators: Mat::from_columns(target.dim(), &gens), target: rhs })
}

/// A `(sigma, m)` block other than `(0, 0)`, in the scaled basis with the `(pi i)^order` factors
/// restored, so that the unknowns come out in true divided-power coordinates.
fn float_system(
    problem: &LinearProblem,
    input: &SpectralForm,
    sym: &BlockSymbol<Complex64>,
    sigma: ModeIndex,
    m: i64,
    k_dom: u32,
    engine: &FloatEngine,
) -> Result<BlockSystem<Complex64>, SolveError> {
    let target = BlockSpace::new(problem.target, k_dom);
    let mut ops = Vec::new();
    let mut bases = Vec::new();
    for piece in &problem.pieces {
        let dom = BlockSpace::new(piece.grading, k_dom);
        let factor = Complex64::new(0.0, PI).powi(order(piece.op));
        ops.push(match piece.op {
            Some(op) => block_operator(op, sym, m, piece.grading, k_dom).map(|v| *v * factor),
            None => Mat::identity(dom.dim()),
        });
        bases.push(match piece.domain {
            Domain::Any => Mat::identity(dom.dim()),
            Domain::Sheaf(s) => engine.kernel(&sheaf_constraints(s, sym, m, piece.grading, k_dom))?,
            Domain::KernelOf(op) => engine.kernel(&block_operator(op, sym, m, piece.grading, k_dom))?,
        });
    }
    Ok(BlockSystem {
        ops,
        bases,
        generators: Mat::zeros(target.dim(), 0),
        target: block_coords(input, sigma, m, &target),
    })
}

enum BlockOutcome {
    Exact(BlockResult<QuadComplex>),
    Float(BlockResult<Complex64>),
}

fn solve_block(
    problem: &LinearProblem,
    input: &SpectralForm,
    sigma: ModeIndex,
    m: i64,
    k_dom: u32,
    opts: &SolveOptions,
) -> Result<BlockOutcome, SolveError> {
    let engine = FloatEngine { tol: opts.trunc.tol };
    let mix = mode_seed(sigma, m);
    if sigma.is_zero() && m == 0 {
        let sys = zero_system(problem, input, k_dom)?;
        if let Ok(r) = solve_system(&ExactEngine, &sys, opts.gauge, mix)? {
            return Ok(BlockOutcome::Exact(r));
        }
        let float = BlockSystem {
            ops: sys.ops.iter().map(|x| x.map(Scalar::to_complex)).collect(),
            bases: sys.bases.iter().map(|x| x.map(Scalar::to_complex)).collect(),
            generators: sys.generators.map(Scalar::to_complex),
            target: sys.target.iter().map(Scalar::to_complex).collect(),
        };
        return match solve_system(&engine, &float, opts.gauge, mix)? {
            Ok(r) => Ok(BlockOutcome::Float(r)),
            Err(mismatch) => Err(SolveError::OutsideClass { mode: sigma, m, mismatch }),
        };
    }
    let sym = BlockSymbol::float(input.lattice(), sigma, opts.precision_bits);
    let sys = float_system(problem, input, &sym, sigma, m, k_dom, &engine)?;
    match solve_system(&engine, &sys, opts.gauge, mix)? {
        Ok(r) => Ok(BlockOutcome::Float(r)),
        Err(mismatch) => Err(SolveError::OutsideClass { mode: sigma, m, mismatch }),
    }
}

/// Polynomial degree available to the unknowns, after checking the input against the truncation.
pub(crate) fn domain_degree(input: &SpectralForm, opts: &SolveOptions, headroom: u32) -> Result<u32, SolveError> {
    let t = &opts.trunc;
    if input.max_k() > t.k {
        return Err(SolveError::Overflow(format!("input has t4-degree {} above K = {}", input.max_k(), t.k)));
    }
    if input.max_abs_m() > t.m {
        return Err(SolveError::Overflow(format!(
            "input has exponential index {} above M = {}",
            input.max_abs_m(),
            t.m
        )));
    }
    if input.max_mode_radius() > t.n {
        return Err(SolveError::Overflow(format!(
            "input has a mode of radius {} above N = {}",
            input.max_mode_radius(),
            t.n
        )));
    }
    if headroom > t.headroom {
        return Err(SolveError::Overflow(format!(
            "the solver raises the t4-degree by up to {headroom}, but the truncation allows {}",
            t.headroom
        )));
    }
    Ok(t.k + headroom)
}

pub(crate) fn solve_linear(
    problem: &LinearProblem,
    input: &SpectralForm,
    opts: &SolveOptions,
) -> Result<LinearSolution, SolveError> {
    let k_dom = domain_degree(input, opts, problem.headroom)?;
    let lattice: &Arc<Lattice> = input.lattice();
    let mut keys: BTreeSet<(ModeIndex, i64)> = BTreeSet::new();
    for (s, _, coeff) in input.entries() {
        for (_, m, _) in coeff.terms() {
            keys.insert((s, m as i64));
        }
    }
    let keys: Vec<(ModeIndex, i64)> = keys.into_iter().collect();
    let outcomes: Vec<Result<BlockOutcome, SolveError>> =
        keys.par_iter().map(|&(s, m)| solve_block(problem, input, s, m, k_dom, opts)).collect();

    let bounds = CoeffBounds { k_max: k_dom.max(4), m_max: opts.trunc.m.max(4) };
    let mut pieces: Vec<SpectralForm> =
        problem.pieces.iter().map(|p| SpectralForm::zero(lattice.clone(), p.grading).with_bounds(bounds)).collect();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); problem.generators.len()];
    let prune = 1e-15 * (1.0 + input.max_abs());
    for (&(sigma, m), outcome) in keys.iter().zip(outcomes) {
        match outcome? {
            BlockOutcome::Exact(r) => {
                for ((piece, x), spec) in pieces.iter_mut().zip(&r.xs).zip(&problem.pieces) {
                    let space = BlockSpace::new(spec.grading, k_dom);
                    for (fp, &frame) in space.frames.iter().enumerate() {
                        for k in 0..=k_dom {
                            let c = x[space.index(fp, k)].to_complex();
                            if c.norm() > 0.0 {
                                piece.add_term(sigma, frame, c, k, 0)?;
                            }
                        }
                    }
                }
                for (c, v) in coefficients.iter_mut().zip(&r.coefficients) {
                    *c = v.to_complex();
                }
            }
            BlockOutcome::Float(r) if sigma.is_zero() && m == 0 => {
                for ((piece, x), spec) in pieces.iter_mut().zip(&r.xs).zip(&problem.pieces) {
                    let space = BlockSpace::new(spec.grading, k_dom);
                    for (fp, &frame) in space.frames.iter().enumerate() {
                        for k in 0..=k_dom {
                            let c = x[space.index(fp, k)];
                            if c.norm() > prune {
                                piece.add_term(sigma, frame, c, k, 0)?;
                            }
                        }
                    }
                }
                coefficients = r.coefficients;
            }
            BlockOutcome::Float(r) => {
                for ((piece, x), spec) in pieces.iter_mut().zip(&r.xs).zip(&problem.pieces) {
                    add_block_coords(piece, sigma, m, &BlockSpace::new(spec.grading, k_dom), x, prune)?;
                }
            }
        }
    }
    let mut residual = SpectralForm::zero(lattice.clone(), problem.target).with_bounds(bounds);
    for (g, c) in problem.generators.iter().zip(&coefficients) {
        if c.norm() > 0.0 {
            residual.add_term(ModeIndex::ZERO, g.frame, *c, g.k, 0)?;
        }
    }
    debug_assert!(problem.pieces.iter().all(|p| op_grading(p).degree() == problem.target.degree()));
    Ok(LinearSolution { pieces, coefficients, residual })
}
