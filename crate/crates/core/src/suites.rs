//! Seeded invariant suites over every module, shared by `tcohom check` and the test targets.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::calculus::{apply, finite_difference, OperatorKind};
use crate::cohomo::{block_cohomology, is_theta, stability_scan, EngineOptions, Theory, Truncation};
use crate::lattice::{mode_multiplier_b, Lattice, ModeIndex};
use crate::primitives::{solve, Gauge, SolveOptions, SolverKind};
use crate::specform::random::{
    dyadic_complex, random_form, random_nonzero_mode, random_point, random_sheaf_form, seeded_rng, RandomFormConfig,
};
use crate::specform::{serialize_form, CoefficientSheaf, Frame, Grading, Leg, SpectralForm};

/// Relative tolerance of the exact operator identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative tolerance of the finite-difference oracle.
pub const ORACLE_TOL: f64 = 1e-6;
/// Relative tolerance of solver recomposition.
pub const RECOMPOSITION_TOL: f64 = crate::primitives::RECOMPOSITION_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Nilpotency,
    Conjugation,
    Leibniz,
    Oracle,
    Recomposition,
    Acyclicity,
    Stability,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Nilpotency,
        Suite::Conjugation,
        Suite::Leibniz,
        Suite::Oracle,
        Suite::Recomposition,
        Suite::Acyclicity,
        Suite::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Nilpotency => "d2",
            Suite::Conjugation => "conjugation",
            Suite::Leibniz => "leibniz",
            Suite::Oracle => "oracle",
            Suite::Recomposition => "recomposition",
            Suite::Acyclicity => "acyclicity",
            Suite::Stability => "stability",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|k| k.name()).collect();
            format!("unknown suite \"{s}\" (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub lattice: Arc<Lattice>,
    pub seed: u64,
    pub trunc: Truncation,
    /// Random cases per suite; the slow suites use a tenth of it.
    pub cases: usize,
}

impl SuiteConfig {
    pub fn new(lattice: Arc<Lattice>, seed: u64) -> Self {
        SuiteConfig { lattice, seed, trunc: Truncation::default(), cases: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub outcome: Outcome,
    pub checks: usize,
    /// Largest relative error seen, for the numeric suites.
    pub max_error: Option<f64>,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }

    /// `[PASS] name: detail`.
    pub fn line(&self) -> String {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skipped => "SKIP",
        };
        format!("[{tag}] {}: {}", self.suite, self.detail)
    }
}

/// Running tally of a numeric suite.
struct Tally {
    suite: Suite,
    tol: f64,
    checks: usize,
    max_error: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(suite: Suite, tol: f64) -> Self {
        Tally { suite, tol, checks: 0, max_error: 0.0, first_failure: None }
    }

    fn record(&mut self, error: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        self.max_error = self.max_error.max(error);
        let within = error <= self.tol;
        if !within && self.first_failure.is_none() {
            self.first_failure = Some(format!("{} (error {error:e})", what()));
        }
    }

    fn fail(&mut self, what: String) {
        self.checks += 1;
        self.first_failure.get_or_insert(what);
    }

    fn finish(self) -> SuiteReport {
        let outcome = if self.first_failure.is_some() { Outcome::Fail } else { Outcome::Pass };
        let detail = match &self.first_failure {
            Some(f) => format!("{} checks, first failure: {f}", self.checks),
            None => format!("{} checks, max relative error {:e} <= {:e}", self.checks, self.max_error, self.tol),
        };
        SuiteReport { suite: self.suite, outcome, checks: self.checks, max_error: Some(self.max_error), detail }
    }
}

fn skipped(suite: Suite, notice: &str) -> SuiteReport {
    SuiteReport { suite, outcome: Outcome::Skipped, checks: 0, max_error: None, detail: notice.to_string() }
}

/// Coefficient class of the operator suites: small shells, `t4`-degree and exponent at most one.
pub fn form_config() -> RandomFormConfig {
    RandomFormConfig { mode_radius: 2, entries: 4, terms: 2, k_max: 1, m_max: 1 }
}

fn random_grading<R: Rng>(rng: &mut R) -> Grading {
    if rng.gen_bool(0.2) {
        Grading::Degree(rng.gen_range(0..=4))
    } else {
        Grading::Bidegree(rng.gen_range(0..=2), rng.gen_range(0..=2))
    }
}

fn relative(a: &SpectralForm, b: &SpectralForm, scale: f64) -> f64 {
    a.clone().into_total().max_abs_diff(&b.clone().into_total()) / (1.0 + scale)
}

/// `max |f|` times the squared size of the largest mode symbol acting on `f`, the natural
/// scale of a second-order expression in `f`.
fn second_order_scale(f: &SpectralForm) -> f64 {
    let symbol = f
        .entries()
        .map(|(s, _, a)| {
            let l = f.lattice();
            1.0 + l.multiplier_a(s).norm()
                + mode_multiplier_b(s).norm()
                + std::f64::consts::TAU * a.max_abs_m() as f64
                + a.max_k() as f64
        })
        .fold(1.0, f64::max);
    f.max_abs() * symbol * symbol
}

/// `del^2 = delbar^2 = d^2 = 0` and `del delbar + delbar del = 0` on random forms.
pub fn nilpotency(cfg: &SuiteConfig) -> SuiteReport {
    let mut rng = seeded_rng(cfg.seed);
    let mut t = Tally::new(Suite::Nilpotency, IDENTITY_TOL);
    for _ in 0..cfg.cases {
        let grading = random_grading(&mut rng);
        let f = random_form(&mut rng, &cfg.lattice, grading, &form_config());
        let scale = second_order_scale(&f);
        for op in [OperatorKind::Del, OperatorKind::Delbar, OperatorKind::D] {
            let twice = apply(op, &apply(op, &f));
            t.record(twice.max_abs() / (1.0 + scale), || format!("{op}^2 on {}", serialize_form(&f)));
        }
        let anti = apply(OperatorKind::Del, &apply(OperatorKind::Delbar, &f))
            .into_total()
            .add(&apply(OperatorKind::Delbar, &apply(OperatorKind::Del, &f)).into_total())
            .expect("same lattice");
        t.record(anti.max_abs() / (1.0 + scale), || format!("del delbar + delbar del on {}", serialize_form(&f)));
    }
    t.finish()
}

/// `conj(op f) = conj-op(conj f)` for `del`, `delbar` and `d`.
pub fn conjugation(cfg: &SuiteConfig) -> SuiteReport {
    let mut rng = seeded_rng(cfg.seed ^ 0x9e37_79b9);
    let mut t = Tally::new(Suite::Conjugation, IDENTITY_TOL);
    for _ in 0..cfg.cases {
        let grading = random_grading(&mut rng);
        let f = random_form(&mut rng, &cfg.lattice, grading, &form_config());
        let g = f.conjugate();
        for (op, conj_op) in [
            (OperatorKind::Del, OperatorKind::Delbar),
            (OperatorKind::Delbar, OperatorKind::Del),
            (OperatorKind::D, OperatorKind::D),
        ] {
            let lhs = apply(op, &f).conjugate();
            let rhs = apply(conj_op, &g);
            t.record(relative(&lhs, &rhs, lhs.max_abs()), || format!("conj({op} f) for f = {}", serialize_form(&f)));
        }
        t.record(relative(&g.conjugate(), &f, f.max_abs()), || format!("conj(conj f) for f = {}", serialize_form(&f)));
    }
    t.finish()
}

/// `op(f ^ g) = op f ^ g + (-1)^deg f f ^ op g` for `del`, `delbar` and `d`.
pub fn leibniz(cfg: &SuiteConfig) -> SuiteReport {
    let mut rng = seeded_rng(cfg.seed ^ 0x7f4a_7c15);
    let mut t = Tally::new(Suite::Leibniz, IDENTITY_TOL);
    let small = RandomFormConfig { entries: 2, ..form_config() };
    for _ in 0..cfg.cases {
        let (a, b) = (rng.gen_range(0..=2u8), rng.gen_range(0..=2u8));
        let f = random_form(&mut rng, &cfg.lattice, Grading::Bidegree(a.min(1), a - a.min(1)), &small);
        let g = random_form(&mut rng, &cfg.lattice, Grading::Bidegree(b - b.min(1), b.min(1)), &small);
        let sign = if f.degree().is_multiple_of(2) { 1.0 } else { -1.0 };
        let fg = f.wedge(&g).expect("same lattice");
        for op in [OperatorKind::Del, OperatorKind::Delbar, OperatorKind::D] {
            let lhs = apply(op, &fg);
            let rhs = apply(op, &f)
                .wedge(&g)
                .and_then(|x| {
                    x.into_total().add(&f.wedge(&apply(op, &g))?.scale(Complex64::new(sign, 0.0)).into_total())
                })
                .expect("same lattice");
            let scale = lhs.max_abs().max(rhs.max_abs());
            t.record(relative(&lhs, &rhs, scale), || {
                format!("{op} of ({}) ^ ({})", serialize_form(&f).trim(), serialize_form(&g).trim())
            });
        }
    }
    t.finish()
}

/// Symbolic `del`, `delbar`, `d` against finite differences at random points.
pub fn oracle(cfg: &SuiteConfig) -> SuiteReport {
    let mut rng = seeded_rng(cfg.seed ^ 0x5851_f42d);
    let mut t = Tally::new(Suite::Oracle, ORACLE_TOL);
    let narrow = RandomFormConfig { mode_radius: 1, entries: 3, ..form_config() };
    for _ in 0..(cfg.cases / 2).max(1) {
        let g = Grading::Bidegree(rng.gen_range(0..=1), rng.gen_range(0..=1));
        let f = random_form(&mut rng, &cfg.lattice, g, &narrow);
        let z = random_point(&mut rng);
        for op in [OperatorKind::Del, OperatorKind::Delbar, OperatorKind::D] {
            let sym = apply(op, &f).evaluate(z.0, z.1);
            let num = finite_difference(op, &f, z);
            let error = num
                .iter()
                .map(|(fr, v)| (sym.get(fr).copied().unwrap_or_default() - v).norm() / (1.0 + v.norm()))
                .fold(0.0, f64::max);
            t.record(error, || format!("{op} at {z:?} on {}", serialize_form(&f)));
        }
    }
    t.finish()
}

fn constants_on<R: Rng>(rng: &mut R, lattice: &Arc<Lattice>, grading: Grading, frames: &[Frame]) -> SpectralForm {
    let mut f = SpectralForm::zero(lattice.clone(), grading);
    for fr in frames {
        if rng.gen_bool(0.5) {
            f.add_term(ModeIndex::ZERO, *fr, dyadic_complex(rng), 0, 0).expect("constants are in range");
        }
    }
    f
}

fn sum(parts: &[SpectralForm]) -> SpectralForm {
    let mut it = parts.iter();
    let first = it.next().expect("at least one part").clone();
    it.fold(first, |acc, p| acc.add(p).expect("same lattice and grading"))
}

/// A random input satisfying the preconditions of `kind`, built as an image plus residual.
pub fn solver_input<R: Rng>(kind: SolverKind, lattice: &Arc<Lattice>, rng: &mut R) -> SpectralForm {
    let cfg = RandomFormConfig { mode_radius: 2, entries: 3, terms: 2, k_max: 1, m_max: 1 };
    let g = |rng: &mut R, grading| random_sheaf_form(rng, lattice, grading, CoefficientSheaf::G, &cfg);
    let dzb1 = Frame::from_indices(&[], &[1]).expect("valid frame");
    match kind {
        SolverKind::Umeno => {
            let k = rng.gen_range(1..=3u8);
            let psi = random_form(rng, lattice, Grading::Degree(k - 1), &cfg);
            let frames = Frame::of_degree(k);
            sum(&[apply(OperatorKind::D, &psi).into_total(), constants_on(rng, lattice, Grading::Degree(k), &frames)])
        }
        SolverKind::DelDelbar => {
            let (k, l) = (rng.gen_range(1..=2u8), rng.gen_range(1..=2u8));
            let eta = random_form(rng, lattice, Grading::Bidegree(k - 1, l - 1), &cfg);
            apply(OperatorKind::DelDelbar, &eta)
        }
        SolverKind::Dolbeault => {
            let (p, q) = (rng.gen_range(0..=2u8), rng.gen_range(1..=2u8));
            let eta = random_sheaf_form(rng, lattice, Grading::Bidegree(p, q - 1), CoefficientSheaf::F, &cfg);
            let frames: Vec<Frame> = Frame::of_bidegree(p, q).into_iter().filter(|f| !f.contains(Leg::Dzb2)).collect();
            sum(&[
                apply(OperatorKind::Delbar, &eta).into_pure(),
                constants_on(rng, lattice, Grading::Bidegree(p, q), &frames),
            ])
        }
        SolverKind::Aeppli00 => {
            let mut w = SpectralForm::zero(lattice.clone(), Grading::Bidegree(0, 0));
            w.add_term(ModeIndex::ZERO, Frame::EMPTY, dyadic_complex(rng), 0, 0).expect("in range");
            w.add_term(ModeIndex::ZERO, Frame::EMPTY, dyadic_complex(rng), 1, 0).expect("in range");
            w
        }
        SolverKind::Aeppli01 | SolverKind::Aeppli10 => {
            let psi = g(rng, Grading::Bidegree(0, 0));
            let anti = Frame::of_bidegree(0, 1);
            let mut w = sum(&[
                apply(OperatorKind::Delbar, &psi).into_pure(),
                constants_on(rng, lattice, Grading::Bidegree(0, 1), &anti),
            ]);
            w.add_term(ModeIndex::ZERO, dzb1, dyadic_complex(rng), 1, 0).expect("in range");
            if kind == SolverKind::Aeppli10 {
                w.conjugate()
            } else {
                w
            }
        }
        SolverKind::Aeppli11 => {
            let (psi1, psi2) = (g(rng, Grading::Bidegree(1, 0)), g(rng, Grading::Bidegree(0, 1)));
            let f11 = Frame::from_indices(&[1], &[1]).expect("valid frame");
            let mixed = [
                f11,
                Frame::from_indices(&[1], &[2]).expect("valid frame"),
                Frame::from_indices(&[2], &[1]).expect("valid frame"),
            ];
            let mut w = sum(&[
                apply(OperatorKind::Delbar, &psi1).into_pure(),
                apply(OperatorKind::Del, &psi2).into_pure(),
                constants_on(rng, lattice, Grading::Bidegree(1, 1), &mixed),
            ]);
            w.add_term(ModeIndex::ZERO, f11, dyadic_complex(rng), 1, 0).expect("in range");
            w
        }
    }
}

/// Outcome of one solver on one random input.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTrip {
    pub error: f64,
    /// Whether a seeded gauge reproduced the canonical residual byte for byte.
    pub gauge_stable: bool,
}

pub fn solver_round_trip(
    kind: SolverKind,
    input: &SpectralForm,
    opts: &SolveOptions,
    gauge_seed: u64,
) -> Result<RoundTrip, String> {
    let sol = solve(kind, input, opts).map_err(|e| e.to_string())?;
    let seeded =
        solve(kind, input, &SolveOptions { gauge: Gauge::Seeded(gauge_seed), ..*opts }).map_err(|e| e.to_string())?;
    let error = sol.recomposition_error(input).map_err(|e| e.to_string())?;
    let seeded_error = seeded.recomposition_error(input).map_err(|e| e.to_string())?;
    Ok(RoundTrip {
        error: error.max(seeded_error),
        gauge_stable: serialize_form(&sol.residual) == serialize_form(&seeded.residual),
    })
}

/// Every solver on random valid inputs: recomposition and gauge-independent residuals.
pub fn recomposition(cfg: &SuiteConfig) -> SuiteReport {
    if !is_theta(&cfg.lattice) {
        return skipped(Suite::Recomposition, "lattice has no theta certificate; solvers need invertible divisors");
    }
    let mut rng = seeded_rng(cfg.seed ^ 0x2545_f491);
    let mut t = Tally::new(Suite::Recomposition, RECOMPOSITION_TOL);
    let opts = SolveOptions { trunc: cfg.trunc, ..SolveOptions::default() };
    let per_solver = (cfg.cases / 20).max(1);
    for kind in SolverKind::ALL {
        for _ in 0..per_solver {
            let input = solver_input(kind, &cfg.lattice, &mut rng);
            match solver_round_trip(kind, &input, &opts, rng.gen()) {
                Ok(r) if !r.gauge_stable => t.fail(format!("{kind}: residual depends on the gauge")),
                Ok(r) => t.record(r.error, || format!("{kind} on {}", serialize_form(&input))),
                Err(e) => t.fail(format!("{kind}: {e}")),
            }
        }
    }
    t.finish()
}

/// Every theory's block cohomology vanishes at random nonzero modes.
pub fn acyclicity(cfg: &SuiteConfig) -> SuiteReport {
    if !is_theta(&cfg.lattice) {
        return skipped(Suite::Acyclicity, "lattice has no theta certificate; nonzero modes need not be acyclic");
    }
    let mut rng = seeded_rng(cfg.seed ^ 0x6a09_e667);
    let mut t = Tally::new(Suite::Acyclicity, 0.0);
    let trunc = Truncation { n: cfg.trunc.n.max(1), ..cfg.trunc };
    for _ in 0..(cfg.cases / 10).max(1) {
        let sigma = random_nonzero_mode(&mut rng, trunc.n);
        for theory in Theory::ALL {
            match block_cohomology(theory, &cfg.lattice, sigma, &trunc, &EngineOptions::default()) {
                Ok(dims) => {
                    let total: usize = dims.values().sum();
                    t.record(total as f64, || format!("{theory} at mode {sigma} has dimension {total}"));
                }
                Err(e) => t.fail(format!("{theory} at mode {sigma}: {e}")),
            }
        }
    }
    let mut report = t.finish();
    report.max_error = None;
    if report.outcome == Outcome::Pass {
        report.detail = format!("{} mode blocks, all acyclic", report.checks);
    }
    report
}

/// Tables agree across the truncations `(1,2,1)` and the configured one.
pub fn stability(cfg: &SuiteConfig) -> SuiteReport {
    if !is_theta(&cfg.lattice) {
        return skipped(Suite::Stability, "lattice has no theta certificate; truncated tables are formal");
    }
    let small = Truncation::new(1, 2, 1).expect("valid truncation");
    let mut t = Tally::new(Suite::Stability, 0.0);
    for theory in Theory::ALL {
        match stability_scan(theory, &cfg.lattice, &[small, cfg.trunc], &EngineOptions::default()) {
            Ok(r) => match r.discrepancies.first() {
                Some(d) => {
                    t.fail(format!("{theory} at {}: {} vs {} under {}", d.key, d.expected, d.found, d.truncation))
                }
                None => t.record(0.0, String::new),
            },
            Err(e) => t.fail(format!("{theory}: {e}")),
        }
    }
    let mut report = t.finish();
    report.max_error = None;
    if report.outcome == Outcome::Pass {
        report.detail = format!("{} theories identical under {small} and {}", report.checks, cfg.trunc);
    }
    report
}

pub fn run(suite: Suite, cfg: &SuiteConfig) -> SuiteReport {
    match suite {
        Suite::Nilpotency => nilpotency(cfg),
        Suite::Conjugation => conjugation(cfg),
        Suite::Leibniz => leibniz(cfg),
        Suite::Oracle => oracle(cfg),
        Suite::Recomposition => recomposition(cfg),
        Suite::Acyclicity => acyclicity(cfg),
        Suite::Stability => stability(cfg),
    }
}
