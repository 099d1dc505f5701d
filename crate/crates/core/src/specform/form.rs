use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_complex::Complex64;

use super::{CoeffBounds, CoeffFunction, FormError, Frame, Grading};
use crate::lattice::{Lattice, ModeIndex};

/// `sum over (sigma, frame) of coeff(t4) * exp<sigma, t'> * frame`.
#[derive(Clone, Debug)]
pub struct SpectralForm {
    lattice: Arc<Lattice>,
    grading: Grading,
    bounds: CoeffBounds,
    entries: BTreeMap<(ModeIndex, Frame), CoeffFunction>,
}

fn same_lattice(a: &Arc<Lattice>, b: &Arc<Lattice>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl SpectralForm {
    pub fn zero(lattice: Arc<Lattice>, grading: Grading) -> Self {
        SpectralForm { lattice, grading, bounds: CoeffBounds::default(), entries: BTreeMap::new() }
    }

    pub fn with_bounds(mut self, bounds: CoeffBounds) -> Self {
        self.bounds = bounds;
        self
    }

    /// Single entry `coeff * e_sigma * frame`, graded by the frame's bidegree.
    pub fn single(
        lattice: Arc<Lattice>,
        sigma: ModeIndex,
        frame: Frame,
        coeff: CoeffFunction,
    ) -> Result<Self, FormError> {
        let mut f = SpectralForm::zero(lattice, Grading::Bidegree(frame.p(), frame.q()));
        f.add_coeff(sigma, frame, &coeff)?;
        Ok(f)
    }

    /// Constant `c * frame` at the zero mode.
    pub fn constant(lattice: Arc<Lattice>, frame: Frame, c: Complex64) -> Self {
        SpectralForm::single(lattice, ModeIndex::ZERO, frame, CoeffFunction::constant(c))
            .expect("constant term fits any bounds")
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn bounds(&self) -> CoeffBounds {
        self.bounds
    }

    /// Pure bidegree, when the form has one.
    pub fn bidegree(&self) -> Option<(u8, u8)> {
        match self.grading {
            Grading::Bidegree(p, q) => Some((p, q)),
            Grading::Degree(_) => {
                let mut it = self.entries.keys().map(|(_, f)| (f.p(), f.q()));
                let first = it.next()?;
                it.all(|b| b == first).then_some(first)
            }
        }
    }

    pub fn degree(&self) -> u8 {
        self.grading.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (ModeIndex, Frame, &CoeffFunction)> {
        self.entries.iter().map(|(&(s, f), c)| (s, f, c))
    }

    pub fn coefficient(&self, sigma: ModeIndex, frame: Frame) -> Option<&CoeffFunction> {
        self.entries.get(&(sigma, frame))
    }

    pub fn modes(&self) -> BTreeSet<ModeIndex> {
        self.entries.keys().map(|(s, _)| *s).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(CoeffFunction::max_abs).fold(0.0, f64::max)
    }

    pub fn max_k(&self) -> u32 {
        self.entries.values().map(CoeffFunction::max_k).max().unwrap_or(0)
    }

    pub fn max_abs_m(&self) -> u32 {
        self.entries.values().map(CoeffFunction::max_abs_m).max().unwrap_or(0)
    }

    pub fn max_mode_radius(&self) -> u32 {
        self.entries.keys().map(|(s, _)| s.norm_inf()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, sigma: ModeIndex, frame: Frame, c: Complex64, k: u32, m: i32) -> Result<(), FormError> {
        if !self.grading.admits(frame) {
            return Err(FormError::FrameGrading { frame, grading: self.grading });
        }
        if !self.bounds.admits(k, m) {
            return Err(FormError::CoeffOverflow { k, m, bounds: self.bounds });
        }
        let key = (sigma, frame);
        let e = self.entries.entry(key).or_default();
        e.add_term(c, k, m);
        if e.is_zero() {
            self.entries.remove(&key);
        }
        Ok(())
    }

    pub fn add_coeff(&mut self, sigma: ModeIndex, frame: Frame, coeff: &CoeffFunction) -> Result<(), FormError> {
        for (k, m, c) in coeff.terms() {
            self.add_term(sigma, frame, c, k, m)?;
        }
        Ok(())
    }

    /// The same form graded by total degree, so it can be added to other bidegrees.
    pub fn into_total(mut self) -> Self {
        self.grading = self.grading.total();
        self
    }

    /// Bidegree grading if all entries share one, leaving the form unchanged otherwise.
    pub fn into_pure(mut self) -> Self {
        if let Some((p, q)) = self.bidegree() {
            self.grading = Grading::Bidegree(p, q);
        }
        self
    }

    fn check_compatible(&self, o: &SpectralForm) -> Result<Grading, FormError> {
        if !same_lattice(&self.lattice, &o.lattice) {
            return Err(FormError::LatticeMismatch);
        }
        match (self.grading, o.grading) {
            (a, b) if a == b => Ok(a),
            (Grading::Degree(k), b) | (b, Grading::Degree(k)) if b.degree() == k => Ok(Grading::Degree(k)),
            (a, b) => Err(FormError::GradingMismatch { left: a, right: b }),
        }
    }

    pub fn add(&self, o: &SpectralForm) -> Result<SpectralForm, FormError> {
        let grading = self.check_compatible(o)?;
        let mut out = self.clone();
        out.grading = grading;
        out.bounds = self.bounds.union(o.bounds);
        for (s, f, c) in o.entries() {
            out.add_coeff(s, f, c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, o: &SpectralForm) -> Result<SpectralForm, FormError> {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> SpectralForm {
        let mut out = SpectralForm::zero(self.lattice.clone(), self.grading).with_bounds(self.bounds);
        for (s, f, a) in self.entries() {
            let b = a.scale(c);
            if !b.is_zero() {
                out.entries.insert((s, f), b);
            }
        }
        out
    }

    /// Scales each coefficient function by a mode-dependent factor.
    pub fn map_coefficients(
        &self,
        mut g: impl FnMut(ModeIndex, Frame, &CoeffFunction) -> CoeffFunction,
    ) -> SpectralForm {
        let mut out = SpectralForm::zero(self.lattice.clone(), self.grading).with_bounds(self.bounds);
        for (s, f, a) in self.entries() {
            let b = g(s, f, a);
            if !b.is_zero() {
                out.entries.insert((s, f), b);
            }
        }
        out
    }

    /// `self ^ o`; a result outside the admissible degrees is the zero form.
    pub fn wedge(&self, o: &SpectralForm) -> Result<SpectralForm, FormError> {
        Ok(self.wedge_checked(o)?.0)
    }

    /// `self ^ o` together with a flag telling whether the degree overflowed.
    pub fn wedge_checked(&self, o: &SpectralForm) -> Result<(SpectralForm, bool), FormError> {
        if !same_lattice(&self.lattice, &o.lattice) {
            return Err(FormError::LatticeMismatch);
        }
        let grading = match (self.grading, o.grading) {
            (Grading::Bidegree(p, q), Grading::Bidegree(p2, q2)) => Grading::Bidegree(p + p2, q + q2),
            (a, b) => Grading::Degree(a.degree() + b.degree()),
        };
        let bounds = self.bounds.union(o.bounds);
        if !grading.is_in_range() {
            let clamped = match grading {
                Grading::Bidegree(p, q) => Grading::Bidegree(p.min(2), q.min(2)),
                Grading::Degree(k) => Grading::Degree(k.min(4)),
            };
            return Ok((SpectralForm::zero(self.lattice.clone(), clamped).with_bounds(bounds), true));
        }
        let mut out = SpectralForm::zero(self.lattice.clone(), grading).with_bounds(bounds);
        for (s1, f1, a1) in self.entries() {
            for (s2, f2, a2) in o.entries() {
                let Some((f, sign)) = f1.wedge(f2) else { continue };
                let prod = (a1 * a2).scale(Complex64::new(sign as f64, 0.0));
                out.add_coeff(s1 + s2, f, &prod)?;
            }
        }
        Ok((out, false))
    }

    pub fn conjugate(&self) -> SpectralForm {
        let grading = match self.grading {
            Grading::Bidegree(p, q) => Grading::Bidegree(q, p),
            g => g,
        };
        let mut out = SpectralForm::zero(self.lattice.clone(), grading).with_bounds(self.bounds);
        for (s, f, a) in self.entries() {
            let (g, sign) = f.conjugate();
            out.entries.insert((-s, g), a.conj().scale(Complex64::new(sign as f64, 0.0)));
        }
        out
    }

    /// Value of each frame coefficient at `(z1, z2)`.
    pub fn evaluate(&self, z1: Complex64, z2: Complex64) -> BTreeMap<Frame, Complex64> {
        let t = self.lattice.to_real_coords(z1, z2);
        let mut out: BTreeMap<Frame, Complex64> =
            self.grading.frames().into_iter().map(|f| (f, Complex64::new(0.0, 0.0))).collect();
        for (s, f, a) in self.entries() {
            *out.entry(f).or_default() += a.eval(t[3]) * self.lattice.character(s, t);
        }
        out
    }

    /// The part supported on one mode.
    pub fn mode_part(&self, sigma: ModeIndex) -> SpectralForm {
        let mut out = SpectralForm::zero(self.lattice.clone(), self.grading).with_bounds(self.bounds);
        for (s, f, a) in self.entries() {
            if s == sigma {
                out.entries.insert((s, f), a.clone());
            }
        }
        out
    }

    /// Largest coefficient magnitude of `self - o`.
    pub fn max_abs_diff(&self, o: &SpectralForm) -> f64 {
        let mut keys: BTreeSet<(ModeIndex, Frame)> = self.entries.keys().copied().collect();
        keys.extend(o.entries.keys().copied());
        let zero = CoeffFunction::zero();
        keys.into_iter()
            .map(|key| {
                let a = self.entries.get(&key).unwrap_or(&zero);
                let b = o.entries.get(&key).unwrap_or(&zero);
                (a - b).max_abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max |self - o| <= tol * (1 + max |self|)`.
    pub fn approx_eq(&self, o: &SpectralForm, tol: f64) -> bool {
        self.max_abs_diff(o) <= tol * (1.0 + self.max_abs().max(o.max_abs()))
    }

    /// Drops terms with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> SpectralForm {
        self.map_coefficients(|_, _, a| a.pruned(tol))
    }
}

impl PartialEq for SpectralForm {
    fn eq(&self, o: &SpectralForm) -> bool {
        same_lattice(&self.lattice, &o.lattice) && self.grading == o.grading && self.entries == o.entries
    }
}
