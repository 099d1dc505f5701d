//! Run configuration: lattice, truncation, precision, output format and seed.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use tcohom::cohomo::Truncation;
use tcohom::Lattice;

/// Malformed input or configuration.
pub const EXIT_USAGE: u8 = 64;
/// Classification without a decision.
pub const EXIT_INCONCLUSIVE: u8 = 2;
/// Solver precondition violated.
pub const EXIT_PRECONDITION: u8 = 3;
/// Numerical or suite failure.
pub const EXIT_FAILURE: u8 = 1;

/// Precision bounds accepted from the flag or the environment.
pub const PRECISION_RANGE: std::ops::RangeInclusive<u32> = 53..=4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub lattice: Arc<Lattice>,
    pub trunc: Truncation,
    pub precision_bits: u32,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

/// Reads the lattice file, or the reference lattice `tau = i, p = sqrt 2, q = 0` without one.
pub fn load_lattice(path: Option<&PathBuf>) -> Result<Arc<Lattice>, String> {
    match path {
        Some(p) => Lattice::load(p).map(Arc::new).map_err(|e| e.to_string()),
        None => Ok(Arc::new(Lattice::reference())),
    }
}

pub fn parse_truncation(trunc: &str, tol: Option<f64>) -> Result<Truncation, String> {
    let t = Truncation::from_str(trunc).map_err(|e| e.to_string())?;
    match tol {
        Some(x) => t.with_tol(x).map_err(|e| e.to_string()),
        None => Ok(t),
    }
}

pub fn check_precision(bits: u32) -> Result<u32, String> {
    if PRECISION_RANGE.contains(&bits) {
        Ok(bits)
    } else {
        Err(format!("precision {bits} is outside {}..={} bits", PRECISION_RANGE.start(), PRECISION_RANGE.end()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_flags() {
        let t = parse_truncation("3,3,3", Some(1e-8)).unwrap();
        assert_eq!((t.n, t.k, t.m, t.tol), (3, 3, 3, 1e-8));
        assert!(parse_truncation("3,3", None).is_err());
        assert!(parse_truncation("2,2,2", Some(0.5)).is_err());
    }

    #[test]
    fn precision_range() {
        assert_eq!(check_precision(128), Ok(128));
        assert!(check_precision(8).is_err());
    }

    #[test]
    fn missing_lattice_file() {
        assert!(load_lattice(Some(&PathBuf::from("/nonexistent/lattice.json"))).is_err());
        assert!(load_lattice(None).unwrap().is_toroidal());
    }
}
