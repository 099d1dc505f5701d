//! Constructive solvers: Umeno decomposition, `del delbar`-primitives of d-exact forms, Dolbeault
//! primitives and the Aeppli reductions, each with a uniquely determined residual and a
//! convergence certificate.

mod certificate;
mod cover;
mod linear;
mod solvers;
#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::calculus::{apply, OperatorKind};
use crate::cohomo::{CohomoError, Truncation};
use crate::lattice::{ModeIndex, DEFAULT_PRECISION_BITS};
use crate::specform::{form_to_json, serialize_form, CoefficientSheaf, FormError, Grading, SpectralForm};

pub use certificate::{certify_convergence, BoundKind, ConvergenceCertificate, ModeAmplitudes};
pub use cover::{CoverForm, CoverKey};
pub use solvers::{
    aeppli00_reduce, aeppli01_primitive, aeppli10_primitive, aeppli11_primitive, deldelbar_primitive,
    dolbeault_primitive, umeno_decompose,
};

/// Relative recomposition tolerance.
pub const RECOMPOSITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("input is not {op}-closed: max |{op}(input)| = {size:e}")]
    NotClosed { op: OperatorKind, size: f64 },
    #[error("input coefficients do not lie in the sheaf {sheaf}")]
    NotInSheaf { sheaf: CoefficientSheaf },
    #[error("input is not d-exact: its Umeno residual is {residual}")]
    NotExact { residual: String },
    #[error("mode {mode} carries coefficients that del_z1 delbar_z1-closure forces to vanish")]
    Inconsistent { mode: ModeIndex },
    #[error("input grading {found} does not suit the solver, which needs {expected}")]
    WrongGrading { expected: String, found: Grading },
    #[error("truncation overflow: {0}")]
    Overflow(String),
    #[error("input is outside the solvable class: mismatch {mismatch:e} on mode {mode}, m = {m}")]
    OutsideClass { mode: ModeIndex, m: i64, mismatch: f64 },
    #[error(transparent)]
    Rank(#[from] CohomoError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("recomposition error {error:e} exceeds the tolerance {tol:e}")]
    Recomposition { error: f64, tol: f64 },
}

impl SolveError {
    /// Whether the error is a violated solver precondition rather than a numerical failure.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            SolveError::NotClosed { .. }
                | SolveError::NotInSheaf { .. }
                | SolveError::NotExact { .. }
                | SolveError::Inconsistent { .. }
                | SolveError::WrongGrading { .. }
                | SolveError::OutsideClass { .. }
        )
    }
}

/// Choice of solution in the underdetermined per-block systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// Minimum-norm solutions on float blocks, echelon solutions with zero free variables on exact blocks.
    Canonical,
    /// The canonical solution plus a seeded random element of the block kernel.
    Seeded(u64),
}

/// Which construction the `(1,1)` Aeppli solver uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aeppli11Path {
    /// Per-block linear solve inside the periodic `t4`-class.
    Periodic,
    /// Closed-form coefficients, polynomial in `z2` and `conj(z2)` at modes with `sigma2 = 0`.
    Cover,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub trunc: Truncation,
    pub precision_bits: u32,
    pub gauge: Gauge,
    pub aeppli11_path: Aeppli11Path,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            trunc: Truncation::default(),
            precision_bits: DEFAULT_PRECISION_BITS,
            gauge: Gauge::Canonical,
            aeppli11_path: Aeppli11Path::Periodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Umeno,
    DelDelbar,
    Dolbeault,
    Aeppli00,
    Aeppli01,
    Aeppli10,
    Aeppli11,
}

impl SolverKind {
    pub const ALL: [SolverKind; 7] = [
        SolverKind::Umeno,
        SolverKind::DelDelbar,
        SolverKind::Dolbeault,
        SolverKind::Aeppli00,
        SolverKind::Aeppli01,
        SolverKind::Aeppli10,
        SolverKind::Aeppli11,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Umeno => "umeno",
            SolverKind::DelDelbar => "deldelbar",
            SolverKind::Dolbeault => "dolbeault",
            SolverKind::Aeppli00 => "aeppli00",
            SolverKind::Aeppli01 => "aeppli01",
            SolverKind::Aeppli10 => "aeppli10",
            SolverKind::Aeppli11 => "aeppli11",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SolverKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown solver \"{s}\""))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverFlag {
    /// Every primitive is a form on the torus group itself.
    Periodic,
    /// Some primitive is polynomial in `z2` or `conj(z2)` and lives on the universal cover only.
    UniversalCoverOnly,
}

impl CoverFlag {
    pub fn name(self) -> &'static str {
        match self {
            CoverFlag::Periodic => "Periodic",
            CoverFlag::UniversalCoverOnly => "UniversalCoverOnly",
        }
    }
}

/// Solver output: `input = sum of operator(primitive) + residual`.
#[derive(Clone, Debug)]
pub struct PrimitiveSolution {
    pub solver: SolverKind,
    /// Named primitives on the torus group.
    pub primitives: Vec<(String, SpectralForm)>,
    /// Named primitives of the cover construction, when it was used.
    pub cover_primitives: Vec<(String, CoverForm)>,
    pub residual: SpectralForm,
    /// Coefficients of the residual on the solver's generators, in a fixed order.
    pub residual_coefficients: Vec<(String, Complex64)>,
    pub certificate: ConvergenceCertificate,
    pub cover_flag: CoverFlag,
}

impl PrimitiveSolution {
    pub fn primitive(&self, name: &str) -> Option<&SpectralForm> {
        self.primitives.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn coefficient(&self, name: &str) -> Option<Complex64> {
        self.residual_coefficients.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    /// Which operator each primitive enters the recomposition through.
    fn operator_of(&self, name: &str) -> Option<OperatorKind> {
        match (self.solver, name) {
            (SolverKind::Umeno, _) => Some(OperatorKind::D),
            (SolverKind::DelDelbar, _) => Some(OperatorKind::DelDelbar),
            (SolverKind::Dolbeault, _) => Some(OperatorKind::Delbar),
            (SolverKind::Aeppli00, _) | (_, "eta") => None,
            (SolverKind::Aeppli01, _) | (SolverKind::Aeppli11, "psi1") => Some(OperatorKind::Delbar),
            (SolverKind::Aeppli10, _) | (SolverKind::Aeppli11, _) => Some(OperatorKind::Del),
        }
    }

    /// Relative error of `input = sum of op(primitive) + residual`, through the cover
    /// primitives when the solution has them.
    pub fn recomposition_error(&self, input: &SpectralForm) -> Result<f64, FormError> {
        if !self.cover_primitives.is_empty() {
            let bits = self.cover_primitives[0].1.bits();
            let mut image = CoverForm::from_periodic(&self.residual, bits);
            for (name, f) in &self.cover_primitives {
                image = match self.operator_of(name) {
                    Some(op) => image.plus(&f.apply(op)),
                    None => image.plus(f),
                };
            }
            let diff = image.sub(&CoverForm::from_periodic(input, bits)).expand_t4();
            return Ok(diff.max_abs() / (1.0 + input.max_abs()));
        }
        let terms: Vec<(Option<OperatorKind>, &SpectralForm)> =
            self.primitives.iter().map(|(n, f)| (self.operator_of(n), f)).collect();
        recomposition_error(input, &terms, &self.residual)
    }

    /// `solution.json`: solver, cover flag, residual coefficients and the file of each primitive.
    pub fn summary_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .residual_coefficients
            .iter()
            .map(|(n, c)| json!({"generator": n, "re": decimal(c.re), "im": decimal(c.im)}))
            .collect();
        let mut files: Vec<String> = self.primitives.iter().map(|(n, _)| format!("{n}.json")).collect();
        files.extend(self.cover_primitives.iter().map(|(n, _)| format!("{n}.cover.json")));
        json!({
            "solver": self.solver.name(),
            "cover_flag": self.cover_flag.name(),
            "residual_coefficients": coeffs,
            "primitives": files,
            "residual": "residual.json",
            "certificate": "certificate.json",
        })
    }

    /// Files of the solution bundle as `(file name, contents)`, in a fixed order.
    pub fn bundle_files(&self) -> Vec<(String, String)> {
        let pretty = |v: &Value| {
            let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
            s.push('\n');
            s
        };
        let mut out: Vec<(String, String)> =
            self.primitives.iter().map(|(n, f)| (format!("{n}.json"), serialize_form(f))).collect();
        out.extend(self.cover_primitives.iter().map(|(n, f)| (format!("{n}.cover.json"), pretty(&f.to_json()))));
        out.push(("residual.json".into(), serialize_form(&self.residual)));
        out.push(("certificate.json".into(), pretty(&self.certificate.to_json())));
        out.push(("solution.json".into(), pretty(&self.summary_json())));
        out
    }

    /// One line per residual generator, `name = value`.
    pub fn residual_summary(&self) -> String {
        let mut out = format!("{} residual (cover flag {}):\n", self.solver, self.cover_flag.name());
        if self.residual_coefficients.is_empty() {
            out.push_str("  none\n");
        }
        for (n, c) in &self.residual_coefficients {
            out.push_str(&format!("  {n} = {}\n", complex_text(*c)));
        }
        out
    }

    pub fn residual_json(&self) -> Value {
        form_to_json(&self.residual)
    }
}

/// Shortest round-trip decimal, with `-0` written as `0`.
pub(crate) fn decimal(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn complex_text(c: Complex64) -> String {
    if c.im == 0.0 {
        decimal(c.re)
    } else {
        format!("{} + {}i", decimal(c.re), decimal(c.im))
    }
}

/// Runs the named solver.
pub fn solve(kind: SolverKind, input: &SpectralForm, opts: &SolveOptions) -> Result<PrimitiveSolution, SolveError> {
    match kind {
        SolverKind::Umeno => umeno_decompose(input, opts),
        SolverKind::DelDelbar => deldelbar_primitive(input, opts),
        SolverKind::Dolbeault => dolbeault_primitive(input, opts),
        SolverKind::Aeppli00 => aeppli00_reduce(input, opts),
        SolverKind::Aeppli01 => aeppli01_primitive(input, opts),
        SolverKind::Aeppli10 => aeppli10_primitive(input, opts),
        SolverKind::Aeppli11 => aeppli11_primitive(input, opts),
    }
}

/// Largest coefficient of `input - (sum of op(primitive) + residual)`, relative to `1 + max |input|`.
pub fn recomposition_error(
    input: &SpectralForm,
    terms: &[(Option<OperatorKind>, &SpectralForm)],
    residual: &SpectralForm,
) -> Result<f64, FormError> {
    let mut total = residual.clone().into_total();
    for (op, f) in terms {
        let image = match op {
            Some(op) => apply(*op, f),
            None => (*f).clone(),
        };
        total = total.add(&image.into_total())?;
    }
    Ok(total.max_abs_diff(&input.clone().into_total()) / (1.0 + input.max_abs()))
}

/// Checks the recomposition identity at [`RECOMPOSITION_TOL`].
pub(crate) fn check_recomposition(
    input: &SpectralForm,
    terms: &[(Option<OperatorKind>, &SpectralForm)],
    residual: &SpectralForm,
) -> Result<(), SolveError> {
    let error = recomposition_error(input, terms, residual)?;
    if error > RECOMPOSITION_TOL {
        return Err(SolveError::Recomposition { error, tol: RECOMPOSITION_TOL });
    }
    Ok(())
}
