use std::fmt;

use super::{CoeffFunction, Frame, Leg, SpectralForm};
use crate::lattice::mode_multiplier_b;

/// The three coefficient sheaves: `ker dbar_z2`, `ker d_z2`, `ker d_z2 dbar_z2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientSheaf {
    F,
    FBar,
    G,
}

impl fmt::Display for CoefficientSheaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientSheaf::F => "F",
            CoefficientSheaf::FBar => "Fbar",
            CoefficientSheaf::G => "G",
        })
    }
}

impl CoefficientSheaf {
    /// Frames allowed in the sheaf's forms.
    pub fn admits_frame(self, frame: Frame) -> bool {
        let (h2, a2) = (frame.contains(Leg::Dz2), frame.contains(Leg::Dzb2));
        match self {
            CoefficientSheaf::F => !a2,
            CoefficientSheaf::FBar => !h2,
            CoefficientSheaf::G => !(h2 && a2),
        }
    }

    /// Sheaf a coefficient on `frame` must lie in for the form to be a `G`-form.
    pub fn g_component(frame: Frame) -> Option<CoefficientSheaf> {
        match (frame.contains(Leg::Dz2), frame.contains(Leg::Dzb2)) {
            (true, false) => Some(CoefficientSheaf::F),
            (false, true) => Some(CoefficientSheaf::FBar),
            (false, false) => Some(CoefficientSheaf::G),
            (true, true) => None,
        }
    }

    /// Whether `a` at a mode with `sigma2` is annihilated, up to `tol` relative to its size.
    pub fn contains_coeff(self, a: &CoeffFunction, sigma2: i32, tol: f64) -> bool {
        let b = mode_multiplier_b(crate::lattice::ModeIndex::new(0, sigma2, 0));
        let image = match self {
            CoefficientSheaf::F => a.delbar_z2(b),
            CoefficientSheaf::FBar => a.del_z2(b),
            CoefficientSheaf::G => a.delbar_z2(b).del_z2(b),
        };
        let scale =
            (1.0 + std::f64::consts::TAU * (sigma2.unsigned_abs() + a.max_abs_m()) as f64 + a.max_k() as f64).powi(2);
        image.max_abs() <= tol * scale * a.max_abs()
    }
}

/// Membership flags for the three coefficient sheaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SheafMembership {
    pub in_f: bool,
    pub in_fbar: bool,
    pub in_g: bool,
}

impl SheafMembership {
    pub fn get(&self, sheaf: CoefficientSheaf) -> bool {
        match sheaf {
            CoefficientSheaf::F => self.in_f,
            CoefficientSheaf::FBar => self.in_fbar,
            CoefficientSheaf::G => self.in_g,
        }
    }
}

const MEMBERSHIP_TOL: f64 = 1e-12;

pub fn sheaf_membership(f: &SpectralForm) -> SheafMembership {
    sheaf_membership_tol(f, MEMBERSHIP_TOL)
}

pub fn sheaf_membership_tol(f: &SpectralForm, tol: f64) -> SheafMembership {
    let uniform = |sheaf: CoefficientSheaf| {
        f.entries().all(|(s, frame, a)| sheaf.admits_frame(frame) && sheaf.contains_coeff(a, s.s2(), tol))
    };
    let in_g = f.entries().all(|(s, frame, a)| match CoefficientSheaf::g_component(frame) {
        Some(sheaf) => sheaf.contains_coeff(a, s.s2(), tol),
        None => false,
    });
    SheafMembership { in_f: uniform(CoefficientSheaf::F), in_fbar: uniform(CoefficientSheaf::FBar), in_g }
}
