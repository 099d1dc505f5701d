//! Forms on X as finite Fourier-mode sums with exp-polynomial coefficients in `t4 = Im z2`.

mod coeff;
mod form;
mod io;
pub mod random;
mod sheaf;

use std::fmt;

pub use coeff::CoeffFunction;
pub use form::SpectralForm;
pub use io::{form_to_json, parse_form, serialize_form};
pub use sheaf::{sheaf_membership, sheaf_membership_tol, CoefficientSheaf, SheafMembership};

/// One of the four basic 1-forms, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leg {
    Dz1 = 0,
    Dz2 = 1,
    Dzb1 = 2,
    Dzb2 = 3,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::Dz1, Leg::Dz2, Leg::Dzb1, Leg::Dzb2];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn conjugate(self) -> Leg {
        match self {
            Leg::Dz1 => Leg::Dzb1,
            Leg::Dz2 => Leg::Dzb2,
            Leg::Dzb1 => Leg::Dz1,
            Leg::Dzb2 => Leg::Dz2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Leg::Dz1 => "dz1",
            Leg::Dz2 => "dz2",
            Leg::Dzb1 => "dzb1",
            Leg::Dzb2 => "dzb2",
        }
    }
}

/// `dz_I ^ dzbar_J` stored as a set of legs in canonical order `dz1 < dz2 < dzb1 < dzb2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frame(u8);

impl Frame {
    pub const EMPTY: Frame = Frame(0);

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Frame {
        Frame(bits & 0xf)
    }

    pub fn from_legs(legs: &[Leg]) -> Option<(Frame, i8)> {
        legs.iter().try_fold((Frame::EMPTY, 1i8), |(f, s), &l| {
            let (g, t) = f.wedge(Frame(l.bit()))?;
            Some((g, s * t))
        })
    }

    /// `dz_I ^ dzbar_J` for index sets drawn from `{1, 2}`.
    pub fn from_indices(holo: &[u8], anti: &[u8]) -> Option<Frame> {
        let mut bits = 0u8;
        for (&i, off) in holo.iter().map(|i| (i, 0u8)).chain(anti.iter().map(|j| (j, 2u8))) {
            if !(1..=2).contains(&i) {
                return None;
            }
            let b = 1 << (i - 1 + off);
            if bits & b != 0 {
                return None;
            }
            bits |= b;
        }
        Some(Frame(bits))
    }

    pub fn contains(self, leg: Leg) -> bool {
        self.0 & leg.bit() != 0
    }

    pub fn legs(self) -> impl Iterator<Item = Leg> {
        Leg::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    /// Holomorphic indices `I`.
    pub fn holo(self) -> Vec<u8> {
        [(Leg::Dz1, 1), (Leg::Dz2, 2)].into_iter().filter(|(l, _)| self.contains(*l)).map(|(_, i)| i).collect()
    }

    /// Antiholomorphic indices `J`.
    pub fn anti(self) -> Vec<u8> {
        [(Leg::Dzb1, 1), (Leg::Dzb2, 2)].into_iter().filter(|(l, _)| self.contains(*l)).map(|(_, i)| i).collect()
    }

    pub fn p(self) -> u8 {
        (self.0 & 0b11).count_ones() as u8
    }

    pub fn q(self) -> u8 {
        (self.0 & 0b1100).count_ones() as u8
    }

    pub fn degree(self) -> u8 {
        self.0.count_ones() as u8
    }

    /// `self ^ other` in canonical order with its sign; `None` when a leg repeats.
    pub fn wedge(self, other: Frame) -> Option<(Frame, i8)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let mut inversions = 0;
        for a in self.legs() {
            for b in other.legs() {
                if a > b {
                    inversions += 1;
                }
            }
        }
        Some((Frame(self.0 | other.0), if inversions % 2 == 0 { 1 } else { -1 }))
    }

    /// `leg ^ self`.
    pub fn with_leg_front(self, leg: Leg) -> Option<(Frame, i8)> {
        Frame(leg.bit()).wedge(self)
    }

    /// Complex conjugate frame with the reordering sign.
    pub fn conjugate(self) -> (Frame, i8) {
        let swapped = Frame(((self.0 & 0b11) << 2) | ((self.0 & 0b1100) >> 2));
        let sign = if (self.p() * self.q()).is_multiple_of(2) { 1 } else { -1 };
        (swapped, sign)
    }

    pub fn all() -> impl Iterator<Item = Frame> {
        (0u8..16).map(Frame)
    }

    pub fn of_bidegree(p: u8, q: u8) -> Vec<Frame> {
        Frame::all().filter(|f| f.p() == p && f.q() == q).collect()
    }

    pub fn of_degree(k: u8) -> Vec<Frame> {
        Frame::all().filter(|f| f.degree() == k).collect()
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "1");
        }
        let names: Vec<&str> = self.legs().map(Leg::name).collect();
        write!(f, "{}", names.join("^"))
    }
}

/// Degree bookkeeping of a form: pure bidegree, or total degree for mixed sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grading {
    Bidegree(u8, u8),
    Degree(u8),
}

impl Grading {
    pub fn admits(self, frame: Frame) -> bool {
        match self {
            Grading::Bidegree(p, q) => frame.p() == p && frame.q() == q,
            Grading::Degree(k) => frame.degree() == k,
        }
    }

    pub fn degree(self) -> u8 {
        match self {
            Grading::Bidegree(p, q) => p + q,
            Grading::Degree(k) => k,
        }
    }

    /// Frames compatible with the grading (empty for formal out-of-range gradings).
    pub fn frames(self) -> Vec<Frame> {
        Frame::all().filter(|f| self.admits(*f)).collect()
    }

    pub fn is_in_range(self) -> bool {
        match self {
            Grading::Bidegree(p, q) => p <= 2 && q <= 2,
            Grading::Degree(k) => k <= 4,
        }
    }

    pub fn total(self) -> Grading {
        Grading::Degree(self.degree())
    }
}

impl fmt::Display for Grading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grading::Bidegree(p, q) => write!(f, "({p},{q})"),
            Grading::Degree(k) => write!(f, "degree {k}"),
        }
    }
}

/// Limits on the coefficient class: `k <= k_max`, `|m| <= m_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoeffBounds {
    pub k_max: u32,
    pub m_max: u32,
}

impl Default for CoeffBounds {
    fn default() -> Self {
        CoeffBounds { k_max: 4, m_max: 4 }
    }
}

impl CoeffBounds {
    pub fn admits(&self, k: u32, m: i32) -> bool {
        k <= self.k_max && m.unsigned_abs() <= self.m_max
    }

    pub fn union(self, o: CoeffBounds) -> CoeffBounds {
        CoeffBounds { k_max: self.k_max.max(o.k_max), m_max: self.m_max.max(o.m_max) }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormError {
    #[error("bidegree mismatch: {left} vs {right}")]
    GradingMismatch { left: Grading, right: Grading },
    #[error("forms live on different lattices")]
    LatticeMismatch,
    #[error("frame {frame} does not have grading {grading}")]
    FrameGrading { frame: Frame, grading: Grading },
    #[error("term t4^{k} exp(2 pi {m} t4) exceeds the coefficient bounds k <= {}, |m| <= {}", bounds.k_max, bounds.m_max)]
    CoeffOverflow { k: u32, m: i32, bounds: CoeffBounds },
    #[error("form file, {location}: {message}")]
    Parse { location: String, message: String },
}
