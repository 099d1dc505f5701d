//! Seeded generators of forms for property tests and the invariant suites.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CoeffBounds, CoeffFunction, CoefficientSheaf, Frame, Grading, SpectralForm};
use crate::lattice::{Lattice, ModeIndex};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of randomly generated forms.
#[derive(Clone, Copy, Debug)]
pub struct RandomFormConfig {
    /// Modes are drawn from `|sigma|_inf <= mode_radius`.
    pub mode_radius: u32,
    /// Number of `(mode, frame)` entries attempted.
    pub entries: usize,
    /// Terms per coefficient function.
    pub terms: usize,
    pub k_max: u32,
    pub m_max: u32,
}

impl Default for RandomFormConfig {
    fn default() -> Self {
        RandomFormConfig { mode_radius: 2, entries: 3, terms: 2, k_max: 1, m_max: 1 }
    }
}

/// Complex value with real and imaginary parts in `{-1, -3/4, ..., 1}`, so sums and
/// products of a few of them stay exact in binary floating point.
pub fn dyadic_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let mut part = || rng.gen_range(-4i32..=4) as f64 / 4.0;
    Complex64::new(part(), part())
}

/// Nonzero dyadic complex value.
pub fn nonzero_dyadic_complex<R: Rng>(rng: &mut R) -> Complex64 {
    loop {
        let c = dyadic_complex(rng);
        if c.norm() > 0.0 {
            return c;
        }
    }
}

pub fn random_mode<R: Rng>(rng: &mut R, radius: u32) -> ModeIndex {
    let r = radius as i32;
    ModeIndex::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

pub fn random_nonzero_mode<R: Rng>(rng: &mut R, radius: u32) -> ModeIndex {
    assert!(radius > 0, "no nonzero modes in the zero shell");
    loop {
        let s = random_mode(rng, radius);
        if !s.is_zero() {
            return s;
        }
    }
}

pub fn random_coeff<R: Rng>(rng: &mut R, cfg: &RandomFormConfig) -> CoeffFunction {
    let m = cfg.m_max as i32;
    CoeffFunction::from_terms(
        (0..cfg.terms).map(|_| (nonzero_dyadic_complex(rng), rng.gen_range(0..=cfg.k_max), rng.gen_range(-m..=m))),
    )
}

/// Random element of a coefficient sheaf at a mode with `sigma2`.
pub fn random_sheaf_coeff<R: Rng>(rng: &mut R, sheaf: CoefficientSheaf, sigma2: i32) -> CoeffFunction {
    let c1 = nonzero_dyadic_complex(rng);
    match sheaf {
        CoefficientSheaf::F => CoeffFunction::monomial(c1, 0, -sigma2),
        CoefficientSheaf::FBar => CoeffFunction::monomial(c1, 0, sigma2),
        CoefficientSheaf::G if sigma2 == 0 => CoeffFunction::from_terms([(c1, 0, 0), (dyadic_complex(rng), 1, 0)]),
        CoefficientSheaf::G => CoeffFunction::from_terms([(c1, 0, sigma2), (dyadic_complex(rng), 0, -sigma2)]),
    }
}

fn frames_for(grading: Grading) -> Vec<Frame> {
    grading.frames()
}

pub fn random_form<R: Rng>(
    rng: &mut R,
    lattice: &Arc<Lattice>,
    grading: Grading,
    cfg: &RandomFormConfig,
) -> SpectralForm {
    let bounds = CoeffBounds::default().union(CoeffBounds { k_max: cfg.k_max, m_max: cfg.m_max });
    let mut f = SpectralForm::zero(lattice.clone(), grading).with_bounds(bounds);
    let frames = frames_for(grading);
    if frames.is_empty() {
        return f;
    }
    for _ in 0..cfg.entries {
        let s = random_mode(rng, cfg.mode_radius);
        let fr = frames[rng.gen_range(0..frames.len())];
        f.add_coeff(s, fr, &random_coeff(rng, cfg)).expect("generated terms respect the bounds");
    }
    f
}

/// Random form whose coefficients lie in the given sheaf, on frames the sheaf allows.
/// For `G` each frame's coefficient is drawn from the sheaf that frame requires.
pub fn random_sheaf_form<R: Rng>(
    rng: &mut R,
    lattice: &Arc<Lattice>,
    grading: Grading,
    sheaf: CoefficientSheaf,
    cfg: &RandomFormConfig,
) -> SpectralForm {
    let bounds = CoeffBounds::default().union(CoeffBounds { k_max: 1, m_max: cfg.mode_radius });
    let mut f = SpectralForm::zero(lattice.clone(), grading).with_bounds(bounds);
    let frames: Vec<Frame> = frames_for(grading).into_iter().filter(|fr| sheaf.admits_frame(*fr)).collect();
    if frames.is_empty() {
        return f;
    }
    for _ in 0..cfg.entries {
        let s = random_mode(rng, cfg.mode_radius);
        let fr = frames[rng.gen_range(0..frames.len())];
        let component = match sheaf {
            CoefficientSheaf::G => CoefficientSheaf::g_component(fr).expect("filtered frames"),
            other => other,
        };
        f.add_coeff(s, fr, &random_sheaf_coeff(rng, component, s.s2())).expect("generated terms respect the bounds");
    }
    f
}

/// Random point `(z1, z2)` with components in the unit box.
pub fn random_point<R: Rng>(rng: &mut R) -> (Complex64, Complex64) {
    let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    (c(), c())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specform::sheaf_membership;

    #[test]
    fn same_seed_same_form() {
        let l = Arc::new(Lattice::reference());
        let cfg = RandomFormConfig::default();
        let a = random_form(&mut seeded_rng(7), &l, Grading::Bidegree(1, 1), &cfg);
        let b = random_form(&mut seeded_rng(7), &l, Grading::Bidegree(1, 1), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn sheaf_forms_are_members() {
        let l = Arc::new(Lattice::reference());
        let cfg = RandomFormConfig::default();
        let mut rng = seeded_rng(11);
        for _ in 0..50 {
            let g = Grading::Bidegree(rng.gen_range(0..=2), rng.gen_range(0..=2));
            assert!(sheaf_membership(&random_sheaf_form(&mut rng, &l, g, CoefficientSheaf::F, &cfg)).in_f);
            assert!(sheaf_membership(&random_sheaf_form(&mut rng, &l, g, CoefficientSheaf::FBar, &cfg)).in_fbar);
            assert!(sheaf_membership(&random_sheaf_form(&mut rng, &l, g, CoefficientSheaf::G, &cfg)).in_g);
        }
    }
}
