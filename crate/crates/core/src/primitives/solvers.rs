//! The seven solvers: preconditions, the linear problem or closed form behind each, and the
//! recomposition check every solution passes before it is returned.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::certificate::finite_certificate;
use super::cover::{CoverForm, CoverKey};
use super::linear::{domain_degree, solve_linear, Domain, Generator, LinearProblem, Piece};
use super::{
    check_recomposition, Aeppli11Path, CoverFlag, PrimitiveSolution, SolveError, SolveOptions, SolverKind,
    RECOMPOSITION_TOL,
};
use crate::calculus::{apply, OperatorKind};
use crate::lattice::ModeIndex;
use crate::specform::{
    sheaf_membership, CoeffBounds, CoeffFunction, CoefficientSheaf, Frame, Grading, Leg, SpectralForm,
};

/// Relative size below which `op(input)` counts as zero.
const CLOSURE_TOL: f64 = 1e-10;

fn frame(holo: &[u8], anti: &[u8]) -> Frame {
    Frame::from_indices(holo, anti).expect("valid frame indices")
}

fn bidegree_of(f: &SpectralForm) -> Option<(u8, u8)> {
    match f.grading() {
        Grading::Bidegree(p, q) => Some((p, q)),
        Grading::Degree(_) => f.bidegree(),
    }
}

fn require_bidegree(f: &SpectralForm, ok: impl Fn(u8, u8) -> bool, expected: &str) -> Result<(u8, u8), SolveError> {
    match bidegree_of(f) {
        Some((p, q)) if ok(p, q) => Ok((p, q)),
        _ => Err(SolveError::WrongGrading { expected: expected.to_string(), found: f.grading() }),
    }
}

fn require_closed(op: OperatorKind, f: &SpectralForm) -> Result<(), SolveError> {
    let size = apply(op, f).max_abs();
    if size > CLOSURE_TOL * (1.0 + f.max_abs()) {
        return Err(SolveError::NotClosed { op, size });
    }
    Ok(())
}

fn require_sheaf(f: &SpectralForm, sheaf: CoefficientSheaf) -> Result<(), SolveError> {
    if sheaf_membership(f).get(sheaf) {
        Ok(())
    } else {
        Err(SolveError::NotInSheaf { sheaf })
    }
}

/// `sum of |coefficients|` per mode, on one frame or on all of them.
fn amplitudes(f: &SpectralForm, on: Option<Frame>) -> BTreeMap<ModeIndex, f64> {
    let mut out = BTreeMap::new();
    for (s, fr, c) in f.entries() {
        if on.is_none_or(|o| o == fr) {
            *out.entry(s).or_insert(0.0) += c.l1_norm();
        }
    }
    out
}

fn named(generators: &[Generator], coefficients: &[Complex64]) -> Vec<(String, Complex64)> {
    generators.iter().zip(coefficients).map(|(g, c)| (g.name(), *c)).collect()
}

/// `phi = chi + d psi` with `chi` constant on wedge monomials in `dz1, dz2, dzb1`.
pub fn umeno_decompose(phi: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    require_closed(OperatorKind::D, phi)?;
    let k = phi.degree();
    let input = phi.clone().into_total();
    let generators: Vec<Generator> =
        Frame::of_degree(k).into_iter().filter(|f| !f.contains(Leg::Dzb2)).map(Generator::constant).collect();
    let pieces = if k == 0 {
        Vec::new()
    } else {
        vec![Piece { grading: Grading::Degree(k - 1), op: Some(OperatorKind::D), domain: Domain::Any }]
    };
    let problem = LinearProblem { target: Grading::Degree(k), pieces, generators, headroom: 1 };
    let sol = solve_linear(&problem, &input, opts)?;
    let terms: Vec<(Option<OperatorKind>, &SpectralForm)> =
        sol.pieces.iter().map(|p| (Some(OperatorKind::D), p)).collect();
    check_recomposition(phi, &terms, &sol.residual)?;
    Ok(PrimitiveSolution {
        solver: SolverKind::Umeno,
        residual_coefficients: named(&problem.generators, &sol.coefficients),
        primitives: sol.pieces.into_iter().map(|p| ("psi".to_string(), p)).collect(),
        cover_primitives: Vec::new(),
        residual: sol.residual,
        certificate: finite_certificate(phi.lattice(), amplitudes(phi, None), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

fn nonzero_summary(coefficients: &[(String, Complex64)], tol: f64) -> Option<String> {
    let parts: Vec<String> = coefficients
        .iter()
        .filter(|(_, c)| c.norm() > tol)
        .map(|(n, c)| format!("{} {n}", super::complex_text(*c)))
        .collect();
    (!parts.is_empty()).then(|| parts.join(" + "))
}

/// `phi = del delbar eta` for a d-exact `phi` of bidegree `(k, l)` with `k, l >= 1`.
pub fn deldelbar_primitive(phi: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    let (k, l) = require_bidegree(phi, |p, q| p >= 1 && q >= 1, "a bidegree (k, l) with k, l >= 1")?;
    let umeno = umeno_decompose(phi, opts)?;
    if let Some(residual) = nonzero_summary(&umeno.residual_coefficients, RECOMPOSITION_TOL * (1.0 + phi.max_abs())) {
        return Err(SolveError::NotExact { residual });
    }
    let input = phi.clone().into_pure();
    let problem = LinearProblem {
        target: Grading::Bidegree(k, l),
        pieces: vec![Piece {
            grading: Grading::Bidegree(k - 1, l - 1),
            op: Some(OperatorKind::DelDelbar),
            domain: Domain::Any,
        }],
        generators: Vec::new(),
        headroom: 2,
    };
    let sol = solve_linear(&problem, &input, opts)?;
    check_recomposition(phi, &[(Some(OperatorKind::DelDelbar), &sol.pieces[0])], &sol.residual)?;
    Ok(PrimitiveSolution {
        solver: SolverKind::DelDelbar,
        primitives: vec![("eta".to_string(), sol.pieces[0].clone())],
        cover_primitives: Vec::new(),
        residual: sol.residual,
        residual_coefficients: Vec::new(),
        certificate: finite_certificate(phi.lattice(), amplitudes(phi, None), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

/// `w = delbar eta + constant` on `Lambda^p{dz1, dz2} ^ Lambda^q{dzb1}`, with `eta` in `F`.
pub fn dolbeault_primitive(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    let (p, q) = require_bidegree(w, |_, _| true, "a pure bidegree")?;
    require_sheaf(w, CoefficientSheaf::F)?;
    require_closed(OperatorKind::Delbar, w)?;
    let input = w.clone().into_pure();
    let generators: Vec<Generator> =
        Frame::of_bidegree(p, q).into_iter().filter(|f| !f.contains(Leg::Dzb2)).map(Generator::constant).collect();
    let pieces = if q == 0 {
        Vec::new()
    } else {
        vec![Piece {
            grading: Grading::Bidegree(p, q - 1),
            op: Some(OperatorKind::Delbar),
            domain: Domain::Sheaf(CoefficientSheaf::F),
        }]
    };
    let problem = LinearProblem { target: Grading::Bidegree(p, q), pieces, generators, headroom: 0 };
    let sol = solve_linear(&problem, &input, opts)?;
    let terms: Vec<(Option<OperatorKind>, &SpectralForm)> =
        sol.pieces.iter().map(|x| (Some(OperatorKind::Delbar), x)).collect();
    check_recomposition(w, &terms, &sol.residual)?;
    Ok(PrimitiveSolution {
        solver: SolverKind::Dolbeault,
        residual_coefficients: named(&problem.generators, &sol.coefficients),
        primitives: sol.pieces.into_iter().map(|x| ("eta".to_string(), x)).collect(),
        cover_primitives: Vec::new(),
        residual: sol.residual,
        certificate: finite_certificate(w.lattice(), amplitudes(w, None), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

/// `w = h + conj-holomorphic part + C2 t4` for a `del delbar`-closed function in `G`.
pub fn aeppli00_reduce(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    require_bidegree(w, |p, q| p == 0 && q == 0, "bidegree (0,0)")?;
    if let Some((mode, _, _)) = w.entries().find(|(s, _, _)| !s.is_zero()) {
        return Err(SolveError::Inconsistent { mode });
    }
    require_sheaf(w, CoefficientSheaf::G)?;
    require_closed(OperatorKind::DelDelbar, w)?;
    let function = Grading::Bidegree(0, 0);
    let problem = LinearProblem {
        target: function,
        pieces: vec![
            Piece { grading: function, op: None, domain: Domain::KernelOf(OperatorKind::Delbar) },
            Piece { grading: function, op: None, domain: Domain::KernelOf(OperatorKind::Del) },
        ],
        generators: vec![Generator { frame: Frame::EMPTY, k: 1 }],
        headroom: 0,
    };
    let sol = solve_linear(&problem, &w.clone().into_pure(), opts)?;
    check_recomposition(w, &[(None, &sol.pieces[0]), (None, &sol.pieces[1])], &sol.residual)?;
    let mut pieces = sol.pieces.into_iter();
    Ok(PrimitiveSolution {
        solver: SolverKind::Aeppli00,
        residual_coefficients: named(&problem.generators, &sol.coefficients),
        primitives: vec![
            ("holomorphic".to_string(), pieces.next().expect("two pieces")),
            ("antiholomorphic".to_string(), pieces.next().expect("two pieces")),
        ],
        cover_primitives: Vec::new(),
        residual: sol.residual,
        certificate: finite_certificate(w.lattice(), amplitudes(w, None), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

/// `w = delbar psi + eta + C t4 dzb1`, with `psi = a1 / A` mode by mode and `eta` the constant
/// antiholomorphic part of the zero mode.
pub fn aeppli01_primitive(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    require_bidegree(w, |p, q| p == 0 && q == 1, "bidegree (0,1)")?;
    domain_degree(w, opts, 0)?;
    require_sheaf(w, CoefficientSheaf::G)?;
    require_closed(OperatorKind::DelDelbar, w)?;
    let lattice = w.lattice();
    let dzb1 = frame(&[], &[1]);
    let bounds = CoeffBounds::default().union(w.bounds());
    let mut psi = SpectralForm::zero(lattice.clone(), Grading::Bidegree(0, 0)).with_bounds(bounds);
    let mut eta = SpectralForm::zero(lattice.clone(), Grading::Bidegree(0, 1)).with_bounds(bounds);
    let mut residual = SpectralForm::zero(lattice.clone(), Grading::Bidegree(0, 1)).with_bounds(bounds);
    let mut c2 = Complex64::new(0.0, 0.0);
    for (sigma, fr, a) in w.entries() {
        if !sigma.is_zero() {
            if fr == dzb1 {
                let inv = lattice.multiplier_a_precise(sigma, opts.precision_bits).inv();
                psi.add_coeff(sigma, Frame::EMPTY, &a.scale(inv))?;
            }
            continue;
        }
        if fr == dzb1 {
            c2 = a.coefficient(1, 0);
            eta.add_term(sigma, fr, a.coefficient(0, 0), 0, 0)?;
            residual.add_term(sigma, fr, c2, 1, 0)?;
        } else {
            eta.add_coeff(sigma, fr, a)?;
        }
    }
    check_recomposition(w, &[(Some(OperatorKind::Delbar), &psi), (None, &eta)], &residual)?;
    Ok(PrimitiveSolution {
        solver: SolverKind::Aeppli01,
        primitives: vec![("psi".to_string(), psi), ("eta".to_string(), eta)],
        cover_primitives: Vec::new(),
        residual,
        residual_coefficients: vec![(Generator { frame: dzb1, k: 1 }.name(), c2)],
        certificate: finite_certificate(lattice, amplitudes(w, Some(dzb1)), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

/// The conjugate of [`aeppli01_primitive`]: `w = del psi + eta + C t4 dz1`.
pub fn aeppli10_primitive(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    require_bidegree(w, |p, q| p == 1 && q == 0, "bidegree (1,0)")?;
    let conj = aeppli01_primitive(&w.conjugate(), opts)?;
    let primitives: Vec<(String, SpectralForm)> =
        conj.primitives.iter().map(|(n, f)| (n.clone(), f.conjugate())).collect();
    let residual = conj.residual.conjugate();
    check_recomposition(w, &[(Some(OperatorKind::Del), &primitives[0].1), (None, &primitives[1].1)], &residual)?;
    let dz1 = frame(&[1], &[]);
    Ok(PrimitiveSolution {
        solver: SolverKind::Aeppli10,
        primitives,
        cover_primitives: Vec::new(),
        residual,
        residual_coefficients: vec![(Generator { frame: dz1, k: 1 }.name(), conj.residual_coefficients[0].1.conj())],
        certificate: finite_certificate(w.lattice(), amplitudes(w, Some(dz1)), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

fn aeppli11_generators() -> Vec<Generator> {
    vec![
        Generator { frame: frame(&[1], &[1]), k: 0 },
        Generator { frame: frame(&[1], &[1]), k: 1 },
        Generator::constant(frame(&[1], &[2])),
        Generator::constant(frame(&[2], &[1])),
    ]
}

/// `w = delbar psi1 + del psi2 + (C1 + C2 t4) dz1^dzb1 + C3 dz1^dzb2 + C4 dz2^dzb1`.
pub fn aeppli11_primitive(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    require_bidegree(w, |p, q| p == 1 && q == 1, "bidegree (1,1)")?;
    require_sheaf(w, CoefficientSheaf::G)?;
    require_closed(OperatorKind::DelDelbar, w)?;
    match opts.aeppli11_path {
        Aeppli11Path::Periodic => aeppli11_periodic(w, opts),
        Aeppli11Path::Cover => aeppli11_cover(w, opts),
    }
}

fn aeppli11_periodic(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    let g = Domain::Sheaf(CoefficientSheaf::G);
    let problem = LinearProblem {
        target: Grading::Bidegree(1, 1),
        pieces: vec![
            Piece { grading: Grading::Bidegree(1, 0), op: Some(OperatorKind::Delbar), domain: g },
            Piece { grading: Grading::Bidegree(0, 1), op: Some(OperatorKind::Del), domain: g },
        ],
        generators: aeppli11_generators(),
        headroom: 1,
    };
    let sol = solve_linear(&problem, &w.clone().into_pure(), opts)?;
    check_recomposition(
        w,
        &[(Some(OperatorKind::Delbar), &sol.pieces[0]), (Some(OperatorKind::Del), &sol.pieces[1])],
        &sol.residual,
    )?;
    let mut pieces = sol.pieces.into_iter();
    Ok(PrimitiveSolution {
        solver: SolverKind::Aeppli11,
        residual_coefficients: named(&problem.generators, &sol.coefficients),
        primitives: vec![
            ("psi1".to_string(), pieces.next().expect("two pieces")),
            ("psi2".to_string(), pieces.next().expect("two pieces")),
        ],
        cover_primitives: Vec::new(),
        residual: sol.residual,
        certificate: finite_certificate(w.lattice(), amplitudes(w, Some(frame(&[1], &[1]))), opts.precision_bits),
        cover_flag: CoverFlag::Periodic,
    })
}

/// Closed-form coefficients from the relations of the four components of `delbar psi1 + del psi2`:
/// `-A b11 - conj(A) b21 = a1`, `-A b12 + d_z2 b21 = a21` and `-dbar_z2 b11 - conj(A) b22 = a12`.
/// At `sigma2 != 0` the two exponentials of `a1` go to `b11` and `b21`; at `sigma2 = 0` the `t4`
/// term is split through `t4 = (z2 - conj(z2)) / 2i`, which leaves the lattice-periodic class.
fn aeppli11_cover(w: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    domain_degree(w, opts, 0)?;
    let lattice = w.lattice();
    let bits = opts.precision_bits;
    let (f11, f21, f12) = (frame(&[1], &[1]), frame(&[2], &[1]), frame(&[1], &[2]));
    let (dz1, dz2, dzb1, dzb2) = (frame(&[1], &[]), frame(&[2], &[]), frame(&[], &[1]), frame(&[], &[2]));
    let mut psi1 = CoverForm::zero(lattice.clone(), Grading::Bidegree(1, 0), bits);
    let mut psi2 = CoverForm::zero(lattice.clone(), Grading::Bidegree(0, 1), bits);
    let zero = CoeffFunction::zero();
    let key = |sigma, frame, z2_power, zb2_power| CoverKey { sigma, frame, z2_power, zb2_power };
    let mut residual_coefficients = vec![Complex64::new(0.0, 0.0); 4];
    for sigma in w.modes() {
        let get = |fr| w.coefficient(sigma, fr).unwrap_or(&zero);
        let (a1, a21, a12) = (get(f11), get(f21), get(f12));
        if sigma.is_zero() {
            residual_coefficients =
                vec![a1.coefficient(0, 0), a1.coefficient(1, 0), a12.coefficient(0, 0), a21.coefficient(0, 0)];
            continue;
        }
        let a = lattice.multiplier_a_precise(sigma, bits);
        let sym = crate::calculus::ModeSymbols { a, b: crate::lattice::mode_multiplier_b(sigma) };
        let s2 = sigma.s2();
        let two_i = Complex64::new(0.0, 2.0);
        let (b11, b21, d_b21, dbar_b11) = if s2 != 0 {
            let b11 = CoeffFunction::monomial(-a1.coefficient(0, s2) / a, 0, s2);
            let b21 = CoeffFunction::monomial(-a1.coefficient(0, -s2) / a.conj(), 0, -s2);
            let (d, db) = (sym.act(Leg::Dz2, &b21), sym.act(Leg::Dzb2, &b11));
            (b11, b21, d, db)
        } else {
            let (c1, c2) = (a1.coefficient(0, 0), a1.coefficient(1, 0));
            psi1.add(key(sigma, dz1, 0, 1), &CoeffFunction::constant(c2 / (two_i * a)));
            psi2.add(key(sigma, dzb1, 1, 0), &CoeffFunction::constant(-c2 / (two_i * a.conj())));
            (
                CoeffFunction::constant(-c1 / a),
                CoeffFunction::zero(),
                CoeffFunction::constant(-c2 / (two_i * a.conj())),
                CoeffFunction::constant(c2 / (two_i * a)),
            )
        };
        let b12 = &d_b21 - a21;
        let b12 = b12.scale(a.inv());
        let b22 = &dbar_b11 + a12;
        let b22 = b22.scale(-a.conj().inv());
        psi1.add(key(sigma, dz1, 0, 0), &b11);
        psi1.add(key(sigma, dz2, 0, 0), &b12);
        psi2.add(key(sigma, dzb1, 0, 0), &b21);
        psi2.add(key(sigma, dzb2, 0, 0), &b22);
    }
    let generators = aeppli11_generators();
    let bounds = CoeffBounds::default().union(w.bounds());
    let mut residual = SpectralForm::zero(lattice.clone(), Grading::Bidegree(1, 1)).with_bounds(bounds);
    for (g, c) in generators.iter().zip(&residual_coefficients) {
        if c.norm() > 0.0 {
            residual.add_term(ModeIndex::ZERO, g.frame, *c, g.k, 0)?;
        }
    }
    let image = psi1
        .apply(OperatorKind::Delbar)
        .plus(&psi2.apply(OperatorKind::Del))
        .plus(&CoverForm::from_periodic(&residual, bits));
    let error = image.sub(&CoverForm::from_periodic(w, bits)).expand_t4().max_abs() / (1.0 + w.max_abs());
    if error > RECOMPOSITION_TOL {
        return Err(SolveError::Recomposition { error, tol: RECOMPOSITION_TOL });
    }
    let periodic = psi1.is_periodic() && psi2.is_periodic();
    let primitives = if periodic {
        vec![
            ("psi1".to_string(), psi1.to_periodic().expect("periodic")?),
            ("psi2".to_string(), psi2.to_periodic().expect("periodic")?),
        ]
    } else {
        Vec::new()
    };
    Ok(PrimitiveSolution {
        solver: SolverKind::Aeppli11,
        primitives,
        cover_primitives: vec![("psi1".to_string(), psi1), ("psi2".to_string(), psi2)],
        residual,
        residual_coefficients: named(&generators, &residual_coefficients),
        certificate: finite_certificate(lattice, amplitudes(w, Some(f11)), bits),
        cover_flag: if periodic { CoverFlag::Periodic } else { CoverFlag::UniversalCoverOnly },
    })
}
