//! Cross-module checks through the public API.

use std::sync::Arc;

use proptest::prelude::*;

use tcohom::calculus::{apply, OperatorKind};
use tcohom::cohomo::{cohomology_dims_with, EngineKind, EngineOptions, Theory, Truncation};
use tcohom::lattice::{classify_theta, Classification, ClassifyOptions, LiouvilleExponents};
use tcohom::primitives::{solve, SolveOptions, SolverKind};
use tcohom::specform::random::{random_form, seeded_rng, RandomFormConfig};
use tcohom::specform::{parse_form, serialize_form, Grading};
use tcohom::suites::solver_input;
use tcohom::{Lattice, RealExpr};

fn small() -> Truncation {
    Truncation::new(1, 2, 1).unwrap()
}

fn golden_ratio() -> Lattice {
    let half = num_rational::BigRational::new(1.into(), 2.into());
    Lattice::with_pq(RealExpr::quadratic(half.clone(), half, 5).unwrap(), RealExpr::integer(0)).unwrap()
}

#[test]
fn exact_and_float_engines_agree_on_every_theory() {
    let l = Lattice::reference();
    for theory in Theory::ALL {
        let f = cohomology_dims_with(theory, &l, &small(), &EngineOptions::default()).unwrap();
        let e = cohomology_dims_with(
            theory,
            &l,
            &small(),
            &EngineOptions { engine: EngineKind::Exact, ..Default::default() },
        )
        .unwrap();
        assert_eq!(f.dims, e.dims, "{theory}");
    }
}

#[test]
fn theta_lattices_share_their_tables() {
    let (a, b) = (Lattice::reference(), golden_ratio());
    assert_eq!(classify_theta(&b, &ClassifyOptions::default()).classification, Classification::Theta);
    for theory in Theory::ALL {
        let ta = cohomology_dims_with(theory, &a, &small(), &EngineOptions::default()).unwrap();
        let tb = cohomology_dims_with(theory, &b, &small(), &EngineOptions::default()).unwrap();
        assert_eq!(ta.dims, tb.dims, "{theory}");
    }
}

#[test]
fn tables_on_a_wild_lattice_are_stamped_formal() {
    let p = RealExpr::liouville(2, LiouvilleExponents::Explicit(vec![1, 4, 120]), 3).unwrap();
    let l = Lattice::with_pq(p, RealExpr::integer(0)).unwrap();
    let t = cohomology_dims_with(Theory::DeRham, &l, &small(), &EngineOptions::default()).unwrap();
    assert!(t.formal);
    let r = cohomology_dims_with(Theory::DeRham, &Lattice::reference(), &small(), &EngineOptions::default()).unwrap();
    assert!(!r.formal);
}

#[test]
fn solution_bundles_parse_back_to_the_residual() {
    let l = Arc::new(Lattice::reference());
    let mut rng = seeded_rng(11);
    for kind in SolverKind::ALL {
        let input = solver_input(kind, &l, &mut rng);
        let sol = solve(kind, &input, &SolveOptions::default()).unwrap();
        let files = sol.bundle_files();
        let (_, text) = files.iter().find(|(n, _)| n == "residual.json").unwrap();
        let back = parse_form(text, l.clone()).unwrap();
        assert_eq!(serialize_form(&back), serialize_form(&sol.residual), "{kind}");
        assert!(sol.recomposition_error(&input).unwrap() <= 1e-9, "{kind}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialization_round_trips(seed in any::<u64>(), p in 0u8..=2, q in 0u8..=2) {
        let l = Arc::new(Lattice::reference());
        let cfg = RandomFormConfig { mode_radius: 2, entries: 4, terms: 2, k_max: 2, m_max: 2 };
        let f = random_form(&mut seeded_rng(seed), &l, Grading::Bidegree(p, q), &cfg);
        let text = serialize_form(&f);
        let back = parse_form(&text, l).unwrap();
        prop_assert_eq!(serialize_form(&back), text);
    }

    /// Both images stay in range for `p, q <= 1`.
    #[test]
    fn d_is_del_plus_delbar(seed in any::<u64>(), p in 0u8..=1, q in 0u8..=1) {
        let l = Arc::new(Lattice::reference());
        let cfg = RandomFormConfig { mode_radius: 2, entries: 3, terms: 2, k_max: 1, m_max: 1 };
        let f = random_form(&mut seeded_rng(seed), &l, Grading::Bidegree(p, q), &cfg);
        let d = apply(OperatorKind::D, &f).into_total();
        let split = apply(OperatorKind::Del, &f).into_total().add(&apply(OperatorKind::Delbar, &f).into_total()).unwrap();
        prop_assert!(d.max_abs_diff(&split) <= 1e-12 * (1.0 + d.max_abs()));
    }
}
