use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::cohomo::{cohomology_dims, Theory, Truncation};
use crate::lattice::{Lattice, ModeIndex};
use crate::specform::random::{random_sheaf_form, seeded_rng, RandomFormConfig};
use crate::specform::{CoeffFunction, CoefficientSheaf, Frame, Grading, SpectralForm};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lattice() -> Arc<Lattice> {
    Arc::new(Lattice::reference())
}

fn fr(holo: &[u8], anti: &[u8]) -> Frame {
    Frame::from_indices(holo, anti).unwrap()
}

fn term(l: &Arc<Lattice>, sigma: ModeIndex, frame: Frame, coeff: CoeffFunction) -> SpectralForm {
    SpectralForm::single(l.clone(), sigma, frame, coeff).unwrap()
}

fn constant(l: &Arc<Lattice>, frame: Frame, v: Complex64) -> SpectralForm {
    SpectralForm::constant(l.clone(), frame, v)
}

fn t4(l: &Arc<Lattice>, frame: Frame, v: Complex64) -> SpectralForm {
    term(l, ModeIndex::ZERO, frame, CoeffFunction::monomial(v, 1, 0))
}

fn near(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-9
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn cover() -> SolveOptions {
    SolveOptions { aeppli11_path: Aeppli11Path::Cover, ..SolveOptions::default() }
}

fn coefficients(sol: &PrimitiveSolution) -> Vec<Complex64> {
    sol.residual_coefficients.iter().map(|(_, v)| *v).collect()
}

#[test]
fn umeno_keeps_constant_generators() {
    let l = lattice();
    let phi = constant(&l, fr(&[1, 2], &[1]), c(1.0, 0.0));
    let sol = umeno_decompose(&phi, &opts()).unwrap();
    assert!(sol.residual.approx_eq(&phi.clone().into_total(), 1e-12));
    assert!(sol.primitive("psi").unwrap().max_abs() < 1e-12);
    assert!(near(sol.coefficient("dz1^dz2^dzb1").unwrap(), c(1.0, 0.0)));
}

#[test]
fn umeno_trades_dzb2_for_dz2() {
    // dz1^dzb2 = dz1^dz2 + d(-2i t4 dz1), since d t4 = (dz2 - dzb2) / 2i.
    let l = lattice();
    let phi = constant(&l, fr(&[1], &[2]), c(1.0, 0.0));
    let sol = umeno_decompose(&phi, &opts()).unwrap();
    let expected = constant(&l, fr(&[1, 2], &[]), c(1.0, 0.0)).into_total();
    assert!(sol.residual.approx_eq(&expected, 1e-12), "{:?}", sol.residual_coefficients);
    assert_eq!(sol.cover_flag, CoverFlag::Periodic);
}

#[test]
fn umeno_of_zero_is_zero() {
    let l = lattice();
    let sol = umeno_decompose(&SpectralForm::zero(l, Grading::Degree(2)), &opts()).unwrap();
    assert!(sol.residual.is_zero());
    assert!(coefficients(&sol).iter().all(|v| v.norm() == 0.0));
}

#[test]
fn umeno_rejects_open_forms() {
    let l = lattice();
    let phi = t4(&l, fr(&[1], &[]), c(1.0, 0.0));
    assert!(matches!(umeno_decompose(&phi, &opts()), Err(SolveError::NotClosed { .. })));
}

#[test]
fn deldelbar_rejects_cohomologically_nontrivial_input() {
    let l = lattice();
    let phi = constant(&l, fr(&[1], &[1]), c(1.0, 0.0));
    let err = deldelbar_primitive(&phi, &opts()).unwrap_err();
    assert!(matches!(err, SolveError::NotExact { .. }), "{err}");
    assert!(err.is_precondition());
}

#[test]
fn deldelbar_recovers_an_exact_form() {
    let l = lattice();
    let eta = term(&l, ModeIndex::ZERO, Frame::EMPTY, CoeffFunction::monomial(c(1.0, 0.0), 2, 0));
    let eta1 = term(&l, ModeIndex::new(1, 1, 0), Frame::EMPTY, CoeffFunction::monomial(c(0.5, -1.0), 0, 1));
    let phi = crate::calculus::apply(OperatorKind::DelDelbar, &eta.add(&eta1).unwrap());
    let sol = deldelbar_primitive(&phi, &opts()).unwrap();
    let back = crate::calculus::apply(OperatorKind::DelDelbar, sol.primitive("eta").unwrap());
    assert!(back.max_abs_diff(&phi) < 1e-9);
    assert!(sol.residual.max_abs() < 1e-9);
}

#[test]
fn deldelbar_needs_positive_bidegree() {
    let l = lattice();
    let phi = constant(&l, fr(&[1], &[]), c(1.0, 0.0));
    assert!(matches!(deldelbar_primitive(&phi, &opts()), Err(SolveError::WrongGrading { .. })));
}

#[test]
fn dolbeault_keeps_dzb1() {
    let l = lattice();
    let w = constant(&l, fr(&[], &[1]), c(1.0, 0.0));
    let sol = dolbeault_primitive(&w, &opts()).unwrap();
    assert!(near(sol.coefficient("dzb1").unwrap(), c(1.0, 0.0)));
    assert!(sol.residual.approx_eq(&w, 1e-12));
}

#[test]
fn dolbeault_nonzero_mode_is_exact() {
    // sigma2 = 0 and sigma != 0: dzb1 e_sigma = delbar(e_sigma / A).
    let l = lattice();
    let w = term(&l, ModeIndex::new(1, 0, 0), fr(&[], &[1]), CoeffFunction::constant(c(1.0, 0.0)));
    let sol = dolbeault_primitive(&w, &opts()).unwrap();
    assert!(sol.residual.max_abs() < 1e-12);
    let eta = sol.primitive("eta").unwrap();
    assert!(crate::calculus::apply(OperatorKind::Delbar, eta).max_abs_diff(&w) < 1e-9);
}

#[test]
fn dolbeault_checks_the_sheaf() {
    let l = lattice();
    let w = t4(&l, fr(&[], &[1]), c(1.0, 0.0));
    assert!(matches!(dolbeault_primitive(&w, &opts()), Err(SolveError::NotInSheaf { .. })));
}

#[test]
fn aeppli00_extracts_the_t4_coefficient() {
    let l = lattice();
    let w =
        term(&l, ModeIndex::ZERO, Frame::EMPTY, CoeffFunction::from_terms([(c(3.0, 0.0), 1, 0), (c(5.0, 0.0), 0, 0)]));
    let sol = aeppli00_reduce(&w, &opts()).unwrap();
    assert!(near(sol.coefficient("t4").unwrap(), c(3.0, 0.0)));
    let one = constant(&l, Frame::EMPTY, c(1.0, 0.0));
    let sol = aeppli00_reduce(&one, &opts()).unwrap();
    assert!(near(sol.coefficient("t4").unwrap(), c(0.0, 0.0)));
    let h = sol.primitive("holomorphic").unwrap().add(sol.primitive("antiholomorphic").unwrap()).unwrap();
    assert!(h.max_abs_diff(&one) < 1e-12);
}

#[test]
fn aeppli00_rejects_nonzero_modes() {
    let l = lattice();
    let sigma = ModeIndex::new(1, 0, 0);
    let w = term(&l, sigma, Frame::EMPTY, CoeffFunction::constant(c(1.0, 0.0)));
    assert_eq!(aeppli00_reduce(&w, &opts()).unwrap_err(), SolveError::Inconsistent { mode: sigma });
}

#[test]
fn aeppli01_examples() {
    let l = lattice();
    let sol = aeppli01_primitive(&t4(&l, fr(&[], &[1]), c(1.0, 0.0)), &opts()).unwrap();
    assert!(near(sol.coefficient("t4 dzb1").unwrap(), c(1.0, 0.0)));

    let dzb2 = constant(&l, fr(&[], &[2]), c(1.0, 0.0));
    let sol = aeppli01_primitive(&dzb2, &opts()).unwrap();
    assert!(sol.primitive("eta").unwrap().approx_eq(&dzb2, 1e-12));
    assert!(near(sol.coefficient("t4 dzb1").unwrap(), c(0.0, 0.0)));

    let sigma = ModeIndex::new(1, 1, 0);
    // delbar_z2-closure leaves only the exp(-s sigma2) term.
    let a = CoeffFunction::monomial(c(0.5, -2.0), 0, -1);
    let w = term(&l, sigma, fr(&[], &[1]), a.clone());
    let sol = aeppli01_primitive(&w, &opts()).unwrap();
    let psi = sol.primitive("psi").unwrap();
    let expected = a.scale(l.multiplier_a(sigma).inv());
    let got = psi.coefficient(sigma, Frame::EMPTY).unwrap();
    assert!(near(got.coefficient(0, -1), expected.coefficient(0, -1)));
}

#[test]
fn aeppli10_is_the_conjugate() {
    let l = lattice();
    let sol = aeppli10_primitive(&t4(&l, fr(&[1], &[]), c(1.0, 0.0)), &opts()).unwrap();
    assert!(near(sol.coefficient("t4 dz1").unwrap(), c(1.0, 0.0)));
    let w = constant(&l, fr(&[2], &[]), c(0.0, 1.0));
    let sol = aeppli10_primitive(&w, &opts()).unwrap();
    assert!(sol.primitive("eta").unwrap().approx_eq(&w, 1e-12));
}

#[test]
fn aeppli11_t4_generator() {
    let l = lattice();
    let w = t4(&l, fr(&[1], &[1]), c(1.0, 0.0));
    for o in [opts(), cover()] {
        let sol = aeppli11_primitive(&w, &o).unwrap();
        let got = coefficients(&sol);
        let want = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(got.iter().zip(want).all(|(g, w)| near(*g, w)), "{got:?}");
    }
}

#[test]
fn aeppli11_mixed_constants_depend_on_the_path() {
    let l = lattice();
    let w = constant(&l, fr(&[2], &[1]), c(1.0, 0.0));
    // The periodic class reaches dz2^dzb1 through t4; the cover construction keeps it.
    let periodic = aeppli11_primitive(&w, &opts()).unwrap();
    assert!(coefficients(&periodic).iter().all(|v| v.norm() < 1e-9));
    let closed = aeppli11_primitive(&w, &cover()).unwrap();
    assert!(near(closed.coefficient("dz2^dzb1").unwrap(), c(1.0, 0.0)));
}

#[test]
fn aeppli11_sigma2_zero_mode_needs_the_cover() {
    let l = lattice();
    let sigma = ModeIndex::new(1, 0, 1);
    let a = CoeffFunction::from_terms([(c(2.0, 0.0), 1, 0), (c(-1.0, 0.5), 0, 0)]);
    let w = term(&l, sigma, fr(&[1], &[1]), a);
    let periodic = aeppli11_primitive(&w, &opts()).unwrap();
    assert_eq!(periodic.cover_flag, CoverFlag::Periodic);
    assert!(periodic.residual.max_abs() < 1e-9);
    let closed = aeppli11_primitive(&w, &cover()).unwrap();
    assert_eq!(closed.cover_flag, CoverFlag::UniversalCoverOnly);
    assert!(closed.residual.max_abs() < 1e-9);
    assert!(closed.primitives.is_empty());
    for (_, psi) in &closed.cover_primitives {
        assert!(!psi.is_periodic());
    }
}

#[test]
fn aeppli11_sigma2_nonzero_cover_is_periodic() {
    let l = lattice();
    let sigma = ModeIndex::new(0, 1, -1);
    let a = CoeffFunction::from_terms([(c(1.0, 0.0), 0, 1), (c(0.25, -1.0), 0, -1)]);
    let w = term(&l, sigma, fr(&[1], &[1]), a);
    let sol = aeppli11_primitive(&w, &cover()).unwrap();
    assert_eq!(sol.cover_flag, CoverFlag::Periodic);
    let terms = [
        (Some(OperatorKind::Delbar), sol.primitive("psi1").unwrap()),
        (Some(OperatorKind::Del), sol.primitive("psi2").unwrap()),
    ];
    assert!(recomposition_error(&w, &terms, &sol.residual).unwrap() < 1e-12);
}

#[test]
fn solver_names_round_trip() {
    for k in SolverKind::ALL {
        assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
    }
    assert!("nope".parse::<SolverKind>().is_err());
}

#[test]
fn overflow_is_reported() {
    let l = lattice();
    let w = term(&l, ModeIndex::new(3, 0, 0), fr(&[], &[1]), CoeffFunction::constant(c(1.0, 0.0)));
    assert!(matches!(dolbeault_primitive(&w, &opts()), Err(SolveError::Overflow(_))));
}

#[test]
fn residual_span_matches_the_cohomology() {
    // The zero-mode generators that can carry a nonzero residual span the computed cohomology.
    let l = lattice();
    let trunc = Truncation::default();
    let aeppli = cohomology_dims(Theory::Aeppli, &l, &trunc).unwrap();
    let candidates = [
        constant(&l, fr(&[1], &[1]), c(1.0, 0.0)),
        t4(&l, fr(&[1], &[1]), c(1.0, 0.0)),
        constant(&l, fr(&[1], &[2]), c(1.0, 0.0)),
        constant(&l, fr(&[2], &[1]), c(1.0, 0.0)),
    ];
    let surviving = candidates
        .iter()
        .filter(|w| coefficients(&aeppli11_primitive(w, &opts()).unwrap()).iter().any(|v| v.norm() > 1e-9))
        .count();
    assert_eq!(surviving, aeppli.bidegree(1, 1));
}

fn random_cfg(radius: u32) -> RandomFormConfig {
    RandomFormConfig { entries: 4, mode_radius: radius, ..RandomFormConfig::default() }
}

/// `delbar psi1 + del psi2 + residual`, with `psi1`, `psi2` in `G` and off the zero mode, where
/// `t4` would reach the mixed constants of the residual.
fn aeppli11_input(seed: u64, r: [Complex64; 4]) -> SpectralForm {
    let l = lattice();
    let mut rng = seeded_rng(seed);
    let cfg = random_cfg(1);
    let mut draw = |g| {
        let psi = random_sheaf_form(&mut rng, &l, g, CoefficientSheaf::G, &cfg);
        psi.sub(&psi.mode_part(ModeIndex::ZERO)).unwrap()
    };
    let psi1 = draw(Grading::Bidegree(1, 0));
    let psi2 = draw(Grading::Bidegree(0, 1));
    let mut w = crate::calculus::apply(OperatorKind::Delbar, &psi1)
        .add(&crate::calculus::apply(OperatorKind::Del, &psi2))
        .unwrap()
        .into_pure();
    let f11 = fr(&[1], &[1]);
    w.add_term(ModeIndex::ZERO, f11, r[0], 0, 0).unwrap();
    w.add_term(ModeIndex::ZERO, f11, r[1], 1, 0).unwrap();
    w.add_term(ModeIndex::ZERO, fr(&[1], &[2]), r[2], 0, 0).unwrap();
    w.add_term(ModeIndex::ZERO, fr(&[2], &[1]), r[3], 0, 0).unwrap();
    w
}

fn dyadic() -> impl Strategy<Value = Complex64> {
    (-8i32..=8, -8i32..=8).prop_map(|(a, b)| c(a as f64 / 4.0, b as f64 / 4.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn aeppli11_recovers_the_residual(seed in any::<u64>(), r in proptest::array::uniform4(dyadic())) {
        let w = aeppli11_input(seed, r);
        let sol = aeppli11_primitive(&w, &cover()).unwrap();
        let got = coefficients(&sol);
        for (g, want) in got.iter().zip(r) {
            prop_assert!(near(*g, want), "{:?} vs {:?}", got, r);
        }
        let periodic = aeppli11_primitive(&w, &opts()).unwrap();
        let got = coefficients(&periodic);
        prop_assert!(near(got[0], r[0]) && near(got[1], r[1]), "{:?}", got);
    }

    #[test]
    fn gauges_agree_on_the_residual(seed in any::<u64>(), gauge in any::<u64>(), r in proptest::array::uniform4(dyadic())) {
        let w = aeppli11_input(seed, r);
        let canonical = aeppli11_primitive(&w, &opts()).unwrap();
        let seeded = aeppli11_primitive(&w, &SolveOptions { gauge: Gauge::Seeded(gauge), ..opts() }).unwrap();
        prop_assert_eq!(serialize_form(&canonical.residual), serialize_form(&seeded.residual));
    }

    #[test]
    fn umeno_round_trips(seed in any::<u64>(), k in 1u8..=3) {
        let l = lattice();
        let mut rng = seeded_rng(seed);
        let psi = random_sheaf_form(&mut rng, &l, Grading::Degree(k - 1), CoefficientSheaf::G, &random_cfg(1));
        let phi = crate::calculus::apply(OperatorKind::D, &psi);
        let sol = umeno_decompose(&phi, &opts()).unwrap();
        prop_assert!(coefficients(&sol).iter().all(|v| v.norm() < 1e-9), "{:?}", sol.residual_coefficients);
        let seeded = umeno_decompose(&phi, &SolveOptions { gauge: Gauge::Seeded(seed), ..opts() }).unwrap();
        prop_assert_eq!(serialize_form(&sol.residual), serialize_form(&seeded.residual));
    }

    #[test]
    fn dolbeault_round_trips(seed in any::<u64>(), v in dyadic()) {
        let l = lattice();
        let mut rng = seeded_rng(seed);
        let eta = random_sheaf_form(&mut rng, &l, Grading::Bidegree(1, 0), CoefficientSheaf::F, &random_cfg(1));
        let mut w = crate::calculus::apply(OperatorKind::Delbar, &eta).into_pure();
        w.add_term(ModeIndex::ZERO, fr(&[2], &[1]), v, 0, 0).unwrap();
        let sol = dolbeault_primitive(&w, &opts()).unwrap();
        prop_assert!(near(sol.coefficient("dz2^dzb1").unwrap(), v));
        prop_assert!(near(sol.coefficient("dz1^dzb1").unwrap(), c(0.0, 0.0)));
    }

    #[test]
    fn aeppli01_round_trips(seed in any::<u64>(), v in dyadic()) {
        let l = lattice();
        let mut rng = seeded_rng(seed);
        let psi = random_sheaf_form(&mut rng, &l, Grading::Bidegree(0, 0), CoefficientSheaf::G, &random_cfg(1));
        let mut w = crate::calculus::apply(OperatorKind::Delbar, &psi).into_pure();
        w.add_term(ModeIndex::ZERO, fr(&[], &[1]), v, 1, 0).unwrap();
        let sol = aeppli01_primitive(&w, &opts()).unwrap();
        prop_assert!(near(sol.coefficient("t4 dzb1").unwrap(), v));
    }
}
