//! Truncated mode-block complexes and the rank engine behind every cohomology table.

pub mod blocks;
mod format;
pub mod linalg;
mod theories;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::lattice::{classify_theta, Classification, ClassifyOptions, Lattice, ModeIndex, DEFAULT_PRECISION_BITS};
use crate::specform::{Grading, SpectralForm};
use blocks::{BlockSpace, BlockSymbol};
use linalg::{ExactEngine, FloatEngine, Mat, RankEngine, Scalar};
use theories::{Block, Quotient};

pub use blocks::{block_vector_form, mode_block_basis, operator_matrix, BasisElement};
pub use format::{table_csv, table_json, table_text, CSV_HEADER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CohomoError {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error(
        "rank decision is ambiguous: singular value {singular_value:e} is within a factor 100 of the threshold {threshold:e}; increase the precision or change the tolerance"
    )]
    RankAmbiguous { singular_value: f64, threshold: f64 },
    #[error("exact arithmetic needs tau, p and q in a single real quadratic field")]
    NotExact,
    #[error("{0}")]
    Unsupported(String),
    #[error("singular value decomposition failed: {0}")]
    Numerical(String),
}

/// Mode shell radius `n`, polynomial degree `k`, exponential index `m`, relative rank tolerance
/// and the extra polynomial degree allowed in denominators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub n: u32,
    pub k: u32,
    pub m: u32,
    pub tol: f64,
    pub headroom: u32,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { n: 2, k: 2, m: 2, tol: 1e-9, headroom: 2 }
    }
}

impl Truncation {
    pub fn new(n: u32, k: u32, m: u32) -> Result<Self, CohomoError> {
        let t = Truncation { n, k, m, ..Truncation::default() };
        t.validate()?;
        Ok(t)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self, CohomoError> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CohomoError> {
        let bad = |m: String| Err(CohomoError::InvalidTruncation(m));
        if self.n < 1 {
            return bad("N must be at least 1".into());
        }
        if self.k < 2 {
            return bad("K must be at least 2".into());
        }
        if self.m < 1 {
            return bad("M must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            return bad(format!("tol {} is outside (0, 1e-3)", self.tol));
        }
        Ok(())
    }

    pub fn modes(&self) -> Vec<ModeIndex> {
        ModeIndex::cube(self.n)
    }
}

impl FromStr for Truncation {
    type Err = CohomoError;

    /// `"N,K,M"`.
    fn from_str(s: &str) -> Result<Self, CohomoError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let nums: Option<Vec<u32>> = parts.iter().map(|p| p.parse().ok()).collect();
        match nums.as_deref() {
            Some(&[n, k, m]) => Truncation::new(n, k, m),
            _ => Err(CohomoError::InvalidTruncation(format!("expected N,K,M, got \"{s}\""))),
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} K={} M={}", self.n, self.k, self.m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theory {
    DeRham,
    Dolbeault,
    DelConjugate,
    BottChern,
    Aeppli,
    Third,
}

impl Theory {
    pub const ALL: [Theory; 6] =
        [Theory::DeRham, Theory::Dolbeault, Theory::DelConjugate, Theory::BottChern, Theory::Aeppli, Theory::Third];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Theory::DeRham => "derham",
            Theory::Dolbeault => "dolbeault",
            Theory::DelConjugate => "delconj",
            Theory::BottChern => "bott-chern",
            Theory::Aeppli => "aeppli",
            Theory::Third => "third",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Theory::DeRham => "de Rham",
            Theory::Dolbeault => "Dolbeault",
            Theory::DelConjugate => "del-conjugate",
            Theory::BottChern => "Bott-Chern",
            Theory::Aeppli => "Aeppli",
            Theory::Third => "third",
        }
    }

    /// Table keys: total degrees for de Rham, bidegrees otherwise (`(p,q)` stands for `(p,q)+1` in `Third`).
    pub fn keys(self) -> Vec<Grading> {
        match self {
            Theory::DeRham => (0..=4).map(Grading::Degree).collect(),
            _ => (0..=4u8)
                .flat_map(|s| (s.saturating_sub(2)..=s.min(2)).rev().map(move |p| Grading::Bidegree(p, s - p)))
                .collect(),
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Theory::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown theory \"{s}\""))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EngineKind {
    /// Complex SVD with singular-value thresholding.
    #[default]
    Float,
    /// Gauss-Jordan over `Q(sqrt d)(i)`.
    Exact,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    pub engine: EngineKind,
    pub precision_bits: u32,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { engine: EngineKind::Float, precision_bits: DEFAULT_PRECISION_BITS }
    }
}

#[derive(Clone, Debug)]
pub struct CohomologyTable {
    pub theory: Theory,
    pub dims: BTreeMap<Grading, usize>,
    /// Quotients by closures of images; always true for Aeppli.
    pub hausdorff_completed: bool,
    /// No theta certificate: the numbers describe the truncation only.
    pub formal: bool,
    pub truncation: Truncation,
    /// Nonzero contributions of each mode block.
    pub blocks: BTreeMap<(ModeIndex, Grading), usize>,
    pub representatives: Option<BTreeMap<Grading, Vec<SpectralForm>>>,
}

impl CohomologyTable {
    pub fn dim(&self, key: Grading) -> usize {
        self.dims.get(&key).copied().unwrap_or(0)
    }

    pub fn bidegree(&self, p: u8, q: u8) -> usize {
        self.dim(Grading::Bidegree(p, q))
    }

    /// `sum over p + q = k`, or the de Rham number itself.
    pub fn total(&self, k: u8) -> usize {
        self.dims.iter().filter(|(g, _)| g.degree() == k).map(|(_, d)| d).sum()
    }

    /// Integers in reading order (rows of the diamond, `p` descending within a row).
    pub fn values(&self) -> Vec<usize> {
        self.theory.keys().into_iter().map(|k| self.dim(k)).collect()
    }
}

/// Whether the lattice carries a theta certificate.
pub fn is_theta(lattice: &Lattice) -> bool {
    classify_theta(lattice, &ClassifyOptions::default()).classification == Classification::Theta
}

fn min_divisor(lattice: &Lattice, trunc: &Truncation) -> f64 {
    trunc
        .modes()
        .into_iter()
        .filter(|s| !s.is_zero())
        .map(|s| lattice.multiplier_a(s).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Rank tolerance scaled down by the smallest divisor in the shell.
fn float_engine(lattice: &Lattice, trunc: &Truncation) -> FloatEngine {
    let scale = min_divisor(lattice, trunc).min(1.0);
    FloatEngine { tol: trunc.tol * if scale > 0.0 { scale } else { 1.0 } }
}

type SymbolFn<'a, S> = Box<dyn Fn(ModeIndex) -> Result<BlockSymbol<S>, CohomoError> + Sync + 'a>;

/// Per-mode driver shared by both engines.
struct Driver<'a, E: RankEngine> {
    engine: E,
    lattice: &'a Lattice,
    trunc: Truncation,
    symbol: SymbolFn<'a, E::S>,
}

impl<E: RankEngine> Driver<'_, E> {
    fn block<'b>(&'b self, sym: &'b BlockSymbol<E::S>, m: i64) -> Block<'b, E> {
        Block { engine: &self.engine, sym, m, k: self.trunc.k, k_big: self.trunc.k + self.trunc.headroom }
    }

    fn quotient(
        &self,
        b: &Block<'_, E>,
        theory: Theory,
        key: Grading,
        g_route: bool,
    ) -> Result<Quotient<E::S>, CohomoError> {
        if g_route {
            b.g_route_quotient(key)
        } else {
            b.theory_quotient(theory, key)
        }
    }

    fn mode_dims(
        &self,
        theory: Theory,
        sigma: ModeIndex,
        keys: &[Grading],
        g_route: bool,
    ) -> Result<Vec<(Grading, usize)>, CohomoError> {
        let sym = (self.symbol)(sigma)?;
        let mm = self.trunc.m as i64;
        keys.iter()
            .map(|&key| {
                let mut total = 0;
                for m in -mm..=mm {
                    let b = self.block(&sym, m);
                    total += self.quotient(&b, theory, key, g_route)?.dim(&self.engine)?;
                }
                Ok((key, total))
            })
            .collect()
    }

    fn table(&self, theory: Theory, keys: &[Grading], g_route: bool) -> Result<CohomologyTable, CohomoError> {
        let modes = self.trunc.modes();
        let per_mode: Vec<Vec<(Grading, usize)>> =
            modes.par_iter().map(|&s| self.mode_dims(theory, s, keys, g_route)).collect::<Result<_, _>>()?;
        let mut dims: BTreeMap<Grading, usize> = keys.iter().map(|&k| (k, 0)).collect();
        let mut blocks = BTreeMap::new();
        for (sigma, entries) in modes.iter().zip(per_mode) {
            for (key, d) in entries {
                *dims.get_mut(&key).expect("requested key") += d;
                if d > 0 {
                    blocks.insert((*sigma, key), d);
                }
            }
        }
        Ok(CohomologyTable {
            theory,
            dims,
            hausdorff_completed: theory == Theory::Aeppli,
            formal: !is_theta(self.lattice),
            truncation: self.trunc,
            blocks,
            representatives: None,
        })
    }

    /// Quotient basis at `sigma`: standard basis vectors lying in the numerator first, then the
    /// numerator basis, each kept when independent of the denominator and of earlier choices.
    fn representatives(
        &self,
        theory: Theory,
        sigma: ModeIndex,
        key: Grading,
        g_route: bool,
    ) -> Result<Vec<(i64, Vec<Complex64>)>, CohomoError> {
        let sym = (self.symbol)(sigma)?;
        let mm = self.trunc.m as i64;
        let mut out = Vec::new();
        for m in -mm..=mm {
            let b = self.block(&sym, m);
            let q = self.quotient(&b, theory, key, g_route)?;
            let want = q.dim(&self.engine)?;
            if want == 0 {
                continue;
            }
            let n = &q.numerator;
            let mut candidates: Vec<Vec<E::S>> = (0..n.rows())
                .map(|i| {
                    let mut e = vec![E::S::zero(); n.rows()];
                    e[i] = E::S::from_i64(1);
                    e
                })
                .filter(|e| {
                    let ext = n.hcat(&Mat::from_columns(n.rows(), std::slice::from_ref(e)));
                    self.engine.rank(&ext).map(|r| r == n.cols()).unwrap_or(false)
                })
                .collect();
            candidates.extend((0..n.cols()).map(|j| n.column(j).to_vec()));
            let mut chosen = self.engine.image(&q.denominator)?;
            let base_rank = chosen.cols();
            let mut picked = Vec::new();
            for c in candidates {
                if picked.len() == want {
                    break;
                }
                let big = Mat::from_columns(n.rows(), std::slice::from_ref(&c)).embed_rows(q.big_dim, &q.embedding);
                let ext = chosen.hcat(&big);
                if self.engine.rank(&ext)? > base_rank + picked.len() {
                    chosen = ext;
                    picked.push(c);
                }
            }
            out.extend(picked.into_iter().map(|c| (m, c.iter().map(Scalar::to_complex).collect())));
        }
        Ok(out)
    }
}

fn with_driver<T>(
    lattice: &Lattice,
    trunc: &Truncation,
    opts: &EngineOptions,
    float: impl FnOnce(&Driver<'_, FloatEngine>) -> Result<T, CohomoError>,
    exact: impl FnOnce(&Driver<'_, ExactEngine>) -> Result<T, CohomoError>,
) -> Result<T, CohomoError> {
    trunc.validate()?;
    match opts.engine {
        EngineKind::Float => {
            let bits = opts.precision_bits;
            let d = Driver {
                engine: float_engine(lattice, trunc),
                lattice,
                trunc: *trunc,
                symbol: Box::new(move |s| Ok(BlockSymbol::float(lattice, s, bits))),
            };
            float(&d)
        }
        EngineKind::Exact => {
            BlockSymbol::exact(lattice, ModeIndex::ZERO)?;
            let d = Driver {
                engine: ExactEngine,
                lattice,
                trunc: *trunc,
                symbol: Box::new(|s| BlockSymbol::exact(lattice, s)),
            };
            exact(&d)
        }
    }
}

pub fn cohomology_dims(theory: Theory, lattice: &Lattice, trunc: &Truncation) -> Result<CohomologyTable, CohomoError> {
    cohomology_dims_with(theory, lattice, trunc, &EngineOptions::default())
}

pub fn cohomology_dims_with(
    theory: Theory,
    lattice: &Lattice,
    trunc: &Truncation,
    opts: &EngineOptions,
) -> Result<CohomologyTable, CohomoError> {
    let keys = theory.keys();
    with_driver(lattice, trunc, opts, |d| d.table(theory, &keys, false), |d| d.table(theory, &keys, false))
}

/// Bidegrees with a `G`-complex description of the Aeppli group.
pub const G_ROUTE_BIDEGREES: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Aeppli dimensions at `G_ROUTE_BIDEGREES` computed through the `G`-complex quotients.
pub fn aeppli_g_route(
    lattice: &Lattice,
    trunc: &Truncation,
    opts: &EngineOptions,
) -> Result<BTreeMap<Grading, usize>, CohomoError> {
    let keys: Vec<Grading> = G_ROUTE_BIDEGREES.iter().map(|&(p, q)| Grading::Bidegree(p, q)).collect();
    let t = with_driver(
        lattice,
        trunc,
        opts,
        |d| d.table(Theory::Aeppli, &keys, true),
        |d| d.table(Theory::Aeppli, &keys, true),
    )?;
    Ok(t.dims)
}

/// Cohomology of the single mode block `sigma` at every key of `theory`.
pub fn block_cohomology(
    theory: Theory,
    lattice: &Lattice,
    sigma: ModeIndex,
    trunc: &Truncation,
    opts: &EngineOptions,
) -> Result<BTreeMap<Grading, usize>, CohomoError> {
    let keys = theory.keys();
    let v = with_driver(
        lattice,
        trunc,
        opts,
        |d| d.mode_dims(theory, sigma, &keys, false),
        |d| d.mode_dims(theory, sigma, &keys, false),
    )?;
    Ok(v.into_iter().collect())
}

/// Converts scaled sub-block coordinates at `(sigma, m)` into a form.
fn block_form(
    lattice: &Arc<Lattice>,
    sigma: ModeIndex,
    m: i64,
    key: Grading,
    trunc: &Truncation,
    x: &[Complex64],
) -> SpectralForm {
    let space = BlockSpace::new(key, trunc.k);
    let mut f = SpectralForm::zero(lattice.clone(), key)
        .with_bounds(crate::specform::CoeffBounds { k_max: trunc.k.max(4), m_max: trunc.m.max(4) });
    blocks::add_block_coords(&mut f, sigma, m, &space, x, 1e-13).expect("within bounds");
    normalize_representative(f)
}

/// Scales so the largest coefficient is real and positive with magnitude one.
fn normalize_representative(f: SpectralForm) -> SpectralForm {
    let Some(big) = f
        .entries()
        .flat_map(|(_, _, a)| a.terms().map(|(_, _, c)| c).collect::<Vec<_>>())
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
    else {
        return f;
    };
    f.scale(big.conj() / big.norm_sqr()).pruned(1e-12)
}

/// A basis of the quotient at `key`, as forms, from the zero-mode block.
pub fn representatives(
    theory: Theory,
    lattice: &Arc<Lattice>,
    trunc: &Truncation,
    key: Grading,
    opts: &EngineOptions,
) -> Result<Vec<SpectralForm>, CohomoError> {
    let vecs = with_driver(
        lattice,
        trunc,
        opts,
        |d| d.representatives(theory, ModeIndex::ZERO, key, false),
        |d| d.representatives(theory, ModeIndex::ZERO, key, false),
    )?;
    Ok(vecs.into_iter().map(|(m, x)| block_form(lattice, ModeIndex::ZERO, m, key, trunc, &x)).collect())
}

/// Table with a representative basis attached at every nonzero key.
pub fn cohomology_with_representatives(
    theory: Theory,
    lattice: &Arc<Lattice>,
    trunc: &Truncation,
    opts: &EngineOptions,
) -> Result<CohomologyTable, CohomoError> {
    let mut t = cohomology_dims_with(theory, lattice, trunc, opts)?;
    let mut reps = BTreeMap::new();
    for (&key, &d) in &t.dims {
        if d > 0 {
            reps.insert(key, representatives(theory, lattice, trunc, key, opts)?);
        }
    }
    t.representatives = Some(reps);
    Ok(t)
}

/// Whether `a` and `b` span the same subspace modulo the denominator of `theory` at `key`.
/// All forms must be supported at the zero mode with coefficient class inside the truncation.
pub fn same_quotient_span(
    theory: Theory,
    lattice: &Lattice,
    trunc: &Truncation,
    key: Grading,
    a: &[SpectralForm],
    b: &[SpectralForm],
) -> Result<bool, CohomoError> {
    let d = Driver {
        engine: float_engine(lattice, trunc),
        lattice,
        trunc: *trunc,
        symbol: Box::new(|s| Ok(BlockSymbol::float(lattice, s, DEFAULT_PRECISION_BITS))),
    };
    let sym = BlockSymbol::float(lattice, ModeIndex::ZERO, DEFAULT_PRECISION_BITS);
    let space = BlockSpace::new(key, trunc.k);
    let coords = |f: &SpectralForm, m: i64| -> Vec<Complex64> {
        assert!(f.modes().iter().all(|s| s.is_zero()), "zero-mode forms only");
        blocks::block_coords(f, ModeIndex::ZERO, m, &space)
    };
    let mm = trunc.m as i64;
    for m in -mm..=mm {
        let bl = d.block(&sym, m);
        let q = bl.theory_quotient(theory, key)?;
        let w = d.engine.image(&q.denominator)?;
        let span = |fs: &[SpectralForm]| -> Result<Mat<Complex64>, CohomoError> {
            let cols: Vec<Vec<Complex64>> = fs.iter().map(|f| coords(f, m)).collect();
            Ok(w.hcat(&Mat::from_columns(space.dim(), &cols).embed_rows(q.big_dim, &q.embedding)))
        };
        let (sa, sb) = (span(a)?, span(b)?);
        let ra = d.engine.rank(&sa)?;
        if ra != d.engine.rank(&sb)? || ra != d.engine.rank(&sa.hcat(&sb))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Delta^k = h^k_BC + h^k_A - 2 b_k` for `k = 0..=4`.
pub fn nondeldelbar_degrees(
    bott_chern: &CohomologyTable,
    aeppli: &CohomologyTable,
    de_rham: &CohomologyTable,
) -> [i64; 5] {
    std::array::from_fn(|k| {
        let k = k as u8;
        bott_chern.total(k) as i64 + aeppli.total(k) as i64 - 2 * de_rham.total(k) as i64
    })
}

/// One differing key between a truncation's table and the first table of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub truncation: Truncation,
    pub key: Grading,
    pub expected: usize,
    pub found: usize,
    /// Mode blocks whose contributions differ, with `(expected, found)`.
    pub blocks: Vec<(ModeIndex, usize, usize)>,
}

#[derive(Clone, Debug, Default)]
pub struct StabilityReport {
    pub tables: Vec<CohomologyTable>,
    pub discrepancies: Vec<Discrepancy>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

pub fn stability_scan(
    theory: Theory,
    lattice: &Lattice,
    truncations: &[Truncation],
    opts: &EngineOptions,
) -> Result<StabilityReport, CohomoError> {
    let tables: Vec<CohomologyTable> =
        truncations.iter().map(|t| cohomology_dims_with(theory, lattice, t, opts)).collect::<Result<_, _>>()?;
    let mut discrepancies = Vec::new();
    if let Some((first, rest)) = tables.split_first() {
        for t in rest {
            for key in theory.keys() {
                let (e, f) = (first.dim(key), t.dim(key));
                if e == f {
                    continue;
                }
                let mut modes: Vec<ModeIndex> =
                    first.blocks.keys().chain(t.blocks.keys()).filter(|(_, k)| *k == key).map(|(s, _)| *s).collect();
                modes.sort();
                modes.dedup();
                let blocks = modes
                    .into_iter()
                    .map(|s| {
                        let get = |tb: &CohomologyTable| tb.blocks.get(&(s, key)).copied().unwrap_or(0);
                        (s, get(first), get(t))
                    })
                    .filter(|(_, a, b)| a != b)
                    .collect();
                discrepancies.push(Discrepancy { truncation: t.truncation, key, expected: e, found: f, blocks });
            }
        }
    }
    Ok(StabilityReport { tables, discrepancies })
}
