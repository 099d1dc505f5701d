//! Small-divisor decay profile with a fitted `c / n` envelope.

use std::fmt::Write as _;

/// Geometric envelope `floor^n` a wild lattice eventually beats.
pub const GEOMETRIC_FLOOR: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decay {
    ThetaLike,
    WildLike,
    Inconclusive,
}

impl Decay {
    pub fn summary(self) -> &'static str {
        match self {
            Decay::ThetaLike => "theta-like decay: shell minima stay above a polynomial floor c/n",
            Decay::WildLike => "wild-like decay: shell minima beat the geometric envelope floor^n",
            Decay::Inconclusive => "inconclusive decay: neither a polynomial floor nor a geometric witness",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    /// `(n, min |A| over 0 < |sigma|_inf <= n, c / n)`.
    pub rows: Vec<(u32, f64, f64)>,
    /// `c = min n * min |A|`.
    pub c: Option<f64>,
    pub decay: Option<Decay>,
}

pub fn fit(profile: &[(u32, f64)]) -> Profile {
    let Some(&(_, first)) = profile.first() else {
        return Profile { rows: Vec::new(), c: None, decay: None };
    };
    let c = profile.iter().map(|&(n, m)| n as f64 * m).fold(f64::INFINITY, f64::min);
    let rows = profile.iter().map(|&(n, m)| (n, m, c / n as f64)).collect();
    let wild = profile.iter().any(|&(n, m)| m.ln() < n as f64 * GEOMETRIC_FLOOR.ln());
    let decay = if wild {
        Decay::WildLike
    } else if c >= GEOMETRIC_FLOOR * first {
        Decay::ThetaLike
    } else {
        Decay::Inconclusive
    };
    Profile { rows, c: Some(c), decay: Some(decay) }
}

/// `n,min_abs_A,fitted_envelope` rows.
pub fn csv(p: &Profile) -> String {
    let mut out = String::from("n,min_abs_A,fitted_envelope\n");
    for (n, m, e) in &p.rows {
        let _ = writeln!(out, "{n},{m:e},{e:e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_profile_is_theta_like() {
        let p = fit(&[(1, 1.0), (2, 0.6), (3, 0.34), (4, 0.3)]);
        assert_eq!(p.decay, Some(Decay::ThetaLike));
        assert!((p.c.unwrap() - 1.0).abs() < 1e-12);
        assert!(p.rows.iter().all(|(_, m, e)| m >= e));
    }

    #[test]
    fn geometric_profile_is_wild_like() {
        let p = fit(&[(1, 0.5), (2, 1e-5), (3, 1e-9)]);
        assert_eq!(p.decay, Some(Decay::WildLike));
    }

    #[test]
    fn empty_profile() {
        let p = fit(&[]);
        assert_eq!(csv(&p), "n,min_abs_A,fitted_envelope\n");
        assert_eq!(p.decay, None);
    }
}
