//! Acceptance criteria C1 to C11, one `[PASS]`/`[FAIL]` line each.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tcohom::cohomo::{
    aeppli_g_route, cohomology_dims_with, nondeldelbar_degrees, stability_scan, CohomologyTable, EngineKind,
    EngineOptions, Theory, Truncation, G_ROUTE_BIDEGREES,
};
use tcohom::lattice::{classify_theta, Classification, ClassifyOptions, LiouvilleExponents};
use tcohom::specform::Grading;
use tcohom::suites::{self, SuiteConfig};
use tcohom::{Lattice, RealExpr};

const SEED: u64 = 20_240_601;
/// Wall-clock limit of a single table run through the binary.
const TABLE_BUDGET: Duration = Duration::from_secs(10);
const STABILITY_BUDGET: Duration = Duration::from_secs(60);
const CLASSIFY_BUDGET: Duration = Duration::from_secs(30);
/// Largest `n` of the brute-force distance scan.
const BRUTE_N: u64 = 100_000;
const IDENTITY_FORMS: usize = 1000;
const ORACLE_PAIRS: usize = 100;
const ACYCLIC_MODES: usize = 200;
const ACYCLIC_SHELL: u32 = 5;
const INPUTS_PER_SOLVER: usize = 100;

const BOTT_CHERN: [usize; 9] = [1, 2, 2, 1, 3, 1, 1, 1, 0];
const AEPPLI: [usize; 9] = [1, 1, 1, 0, 4, 0, 0, 0, 0];
const DOLBEAULT: [usize; 9] = [1, 2, 1, 1, 2, 0, 1, 0, 0];
const DEL_CONJUGATE: [usize; 9] = [1, 1, 2, 0, 2, 1, 0, 1, 0];
const BETTI: [usize; 5] = [1, 3, 3, 1, 0];
const DELTA: [i64; 5] = [0, 0, 3, 0, 0];
const THIRD_11: usize = 1;

type Check = fn() -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn reference() -> Arc<Lattice> {
    Arc::new(Lattice::reference())
}

fn trunc(n: u32, k: u32, m: u32) -> Truncation {
    Truncation::new(n, k, m).expect("valid truncation")
}

fn table(theory: Theory) -> CohomologyTable {
    cohomology_dims_with(theory, &reference(), &trunc(2, 2, 2), &EngineOptions::default()).expect("table computes")
}

/// Runs `table` through the binary and reads the diamond back in `;`-group order.
fn binary_table(theory: &str) -> (Vec<usize>, String, Duration) {
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_tcohom"))
        .args(["table", "--theory", theory, "--trunc", "2,2,2"])
        .env_remove("TCOHOM_PRECISION")
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let text = String::from_utf8(o.stdout).expect("utf-8");
    let values = text
        .lines()
        .filter(|l| !l.is_empty() && l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .flat_map(|l| l.split_whitespace().map(|x| x.parse::<usize>().expect("integer cell")).collect::<Vec<_>>())
        .collect();
    (values, text, elapsed)
}

fn c1() -> Verdict {
    let (v, _, t) = binary_table("bott-chern");
    Verdict::new(v == BOTT_CHERN && t < TABLE_BUDGET, format!("bott-chern {v:?} in {t:.2?}, expected {BOTT_CHERN:?}"))
}

fn c2() -> Verdict {
    let (v, text, t) = binary_table("aeppli");
    let stamped = text.contains("[hausdorff-completed]");
    Verdict::new(
        v == AEPPLI && stamped && t < TABLE_BUDGET,
        format!("aeppli {v:?} (stamp {stamped}) in {t:.2?}, expected {AEPPLI:?}"),
    )
}

fn c3() -> Verdict {
    let d = table(Theory::Dolbeault).values();
    let c = table(Theory::DelConjugate).values();
    let b = table(Theory::DeRham).values();
    Verdict::new(
        d == DOLBEAULT && c == DEL_CONJUGATE && b == BETTI,
        format!("dolbeault {d:?}, del-conjugate {c:?}, de Rham {b:?}"),
    )
}

fn c4() -> Verdict {
    let delta = nondeldelbar_degrees(&table(Theory::BottChern), &table(Theory::Aeppli), &table(Theory::DeRham));
    let h = table(Theory::Third).bidegree(1, 1);
    Verdict::new(
        delta == DELTA && h == THIRD_11,
        format!("Delta^k = {delta:?} (expected {DELTA:?}), h_T^(1,1)+1 = {h} (expected {THIRD_11})"),
    )
}

fn c5() -> Verdict {
    let start = Instant::now();
    let truncs = [trunc(1, 2, 1), trunc(2, 2, 2), trunc(3, 3, 3)];
    let mut unstable = Vec::new();
    for theory in Theory::ALL {
        let r = stability_scan(theory, &reference(), &truncs, &EngineOptions::default()).expect("scan computes");
        if !r.is_stable() {
            unstable.push(theory.name());
        }
    }
    let t = start.elapsed();
    Verdict::new(
        unstable.is_empty() && t < STABILITY_BUDGET,
        format!("{} theories over 3 truncations in {t:.2?}, unstable: {unstable:?}", Theory::ALL.len()),
    )
}

fn c6() -> Verdict {
    let (dr, dol) = (table(Theory::DeRham), table(Theory::Dolbeault));
    let b: Vec<usize> = (0..=4).map(|k| dr.dim(Grading::Degree(k))).collect();
    let sums: Vec<usize> = (0..=4u8).map(|k| dol.total(k)).collect();
    Verdict::new(b == sums, format!("b_k = {b:?}, sum of h_delbar^(p,q) = {sums:?}"))
}

fn c7() -> Verdict {
    let cfg = SuiteConfig { cases: IDENTITY_FORMS, ..SuiteConfig::new(reference(), SEED) };
    let nil = suites::nilpotency(&cfg);
    let oracle = suites::oracle(&SuiteConfig { cases: 2 * ORACLE_PAIRS, ..cfg.clone() });
    Verdict::new(nil.passed() && oracle.passed(), format!("{}; {}", nil.line(), oracle.line()))
}

fn c8() -> Verdict {
    let cfg = SuiteConfig {
        cases: 10 * ACYCLIC_MODES,
        trunc: Truncation { n: ACYCLIC_SHELL, ..Truncation::default() },
        ..SuiteConfig::new(reference(), SEED)
    };
    let r = suites::acyclicity(&cfg);
    let modes = r.checks / Theory::ALL.len();
    Verdict::new(r.outcome == suites::Outcome::Pass && modes == ACYCLIC_MODES, format!("{modes} modes: {}", r.line()))
}

fn c9() -> Verdict {
    let cfg = SuiteConfig { cases: 20 * INPUTS_PER_SOLVER, ..SuiteConfig::new(reference(), SEED) };
    let r = suites::recomposition(&cfg);
    Verdict::new(r.outcome == suites::Outcome::Pass, r.line())
}

/// `min over n <= BRUTE_N of n * ||n x||` in double precision.
fn brute_scaled_distance(x: f64) -> f64 {
    (1..=BRUTE_N)
        .map(|n| {
            let y = n as f64 * x;
            n as f64 * (y - y.round()).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

fn c10() -> Verdict {
    let start = Instant::now();
    let opts = ClassifyOptions::default();
    let golden = RealExpr::quadratic(num_rational(1, 2), num_rational(1, 2), 5).expect("valid surd");
    let sqrt2 = Lattice::with_pq(RealExpr::sqrt(2).expect("surd"), RealExpr::integer(0)).expect("lattice");
    let phi = Lattice::with_pq(golden, RealExpr::integer(0)).expect("lattice");
    let rational =
        Lattice::with_pq(RealExpr::rational(1, 2).unwrap(), RealExpr::rational(2, 3).unwrap()).expect("lattice");
    let liouville = Lattice::with_pq(
        RealExpr::liouville(2, LiouvilleExponents::Explicit(vec![1, 4, 120]), 3).expect("series"),
        RealExpr::integer(0),
    )
    .expect("lattice");
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, l) in [("sqrt2", &sqrt2), ("golden ratio", &phi)] {
        let cert = classify_theta(l, &opts);
        let floor = brute_scaled_distance(l.p_f64());
        let ok = cert.classification == Classification::Theta && cert.c_est.is_some_and(|c| floor >= c) && floor > 0.0;
        pass &= ok;
        notes.push(format!("{name} {} (C {:?}, min n*dist {floor:.4})", cert.classification.name(), cert.c_est));
    }
    for (name, l, want) in
        [("(1/2,2/3)", &rational, Classification::NotToroidal), ("liouville", &liouville, Classification::WildEvidence)]
    {
        let got = classify_theta(l, &opts).classification;
        pass &= got == want;
        notes.push(format!("{name} {}", got.name()));
    }
    let t = start.elapsed();
    pass &= t < CLASSIFY_BUDGET;
    Verdict::new(pass, format!("{} in {t:.2?}", notes.join(", ")))
}

fn num_rational(n: i64, d: i64) -> num_rational::BigRational {
    num_rational::BigRational::new(n.into(), d.into())
}

fn c11() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for engine in [EngineKind::Float, EngineKind::Exact] {
        let opts = EngineOptions { engine, ..EngineOptions::default() };
        let t = trunc(2, 2, 2);
        let def = cohomology_dims_with(Theory::Aeppli, &reference(), &t, &opts).expect("table computes");
        let g = aeppli_g_route(&reference(), &t, &opts).expect("g route computes");
        for (p, q) in G_ROUTE_BIDEGREES {
            let key = Grading::Bidegree(p, q);
            let (a, b) = (def.dim(key), g.get(&key).copied().unwrap_or(usize::MAX));
            pass &= a == b;
            notes.push(format!("{engine:?}({p},{q}) {a}={b}"));
        }
    }
    Verdict::new(pass, notes.join(" "))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Check); 11] = [
        ("C1", c1),
        ("C2", c2),
        ("C3", c3),
        ("C4", c4),
        ("C5", c5),
        ("C6", c6),
        ("C7", c7),
        ("C8", c8),
        ("C9", c9),
        ("C10", c10),
        ("C11", c11),
    ];
    let mut failed = Vec::new();
    for (id, check) in criteria {
        let v = check();
        println!("[{}] {id}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
