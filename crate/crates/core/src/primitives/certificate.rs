//! Convergence certificates for the mode series `sum over sigma2 != 0 of |a^sigma| / |A^sigma|`.
//!
//! On a theta lattice `dist((s2 p, s2 q), Z^2) >= C delta^|s2|` and `dist <= D |A^sigma|` with
//! `D = (1 + |Re tau| + Im tau) / pi`, so `1 / |A^sigma| <= (D / C) delta^-n` on the shell
//! `max |s_i| = n`. A family whose shell maxima decay like `rho^n` with `rho < delta` is then
//! dominated by a convergent geometric series.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::decimal;
use crate::lattice::{classify_theta, Classification, ClassifyOptions, DiophantineCertificate, Lattice, ModeIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    FiniteInput,
    GeometricMajorant,
    NotCertified,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::FiniteInput => "FiniteInput",
            BoundKind::GeometricMajorant => "GeometricMajorant",
            BoundKind::NotCertified => "NotCertified",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceCertificate {
    pub kind: BoundKind,
    /// `D` in `dist <= D |A^sigma|`.
    pub d: Option<f64>,
    /// `C` and `delta` of the lattice's theta bound.
    pub c: Option<f64>,
    pub delta: Option<f64>,
    /// Decay rate fitted to the shell maxima of the amplitudes.
    pub rate: Option<f64>,
    /// `S_n = sum over sigma2 != 0, max |s_i| <= n of |a^sigma| / |A^sigma|`, for `n = 1, 2, ...`.
    pub shell_sums: Vec<f64>,
    /// Bound on the full series, for a geometric majorant.
    pub majorant: Option<f64>,
}

impl ConvergenceCertificate {
    pub fn to_json(&self) -> Value {
        let num = |x: Option<f64>| x.map_or(Value::Null, |v| Value::String(decimal(v)));
        json!({
            "kind": self.kind.name(),
            "D": num(self.d),
            "C": num(self.c),
            "delta": num(self.delta),
            "rate": num(self.rate),
            "majorant": num(self.majorant),
            "shell_sums": self.shell_sums.iter().map(|s| decimal(*s)).collect::<Vec<_>>(),
        })
    }
}

/// Coefficient sizes per mode. `finite` marks the complete data of a finitely supported form;
/// otherwise the values are the first shells of an infinite family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeAmplitudes {
    pub values: BTreeMap<ModeIndex, f64>,
    pub finite: bool,
}

/// `D` for the lattice.
pub fn distance_constant(lattice: &Lattice) -> f64 {
    let tau = lattice.tau();
    (1.0 + tau.re.abs() + tau.im) / std::f64::consts::PI
}

/// Number of modes with `max |s_i| = n` and `s2 != 0`.
fn shell_count(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let cube = |r: u64| ((2 * r + 1) as f64).powi(3);
    let square = |r: u64| ((2 * r + 1) as f64).powi(2);
    (cube(n) - cube(n - 1)) - (square(n) - square(n - 1))
}

/// The theta certificate used for the bound; the scan is short because only the exact
/// continued-fraction bound is relied on.
pub(crate) fn theta_certificate(lattice: &Lattice, bits: u32) -> Option<DiophantineCertificate> {
    let opts = ClassifyOptions { max_n: 64, precision_bits: bits, ..ClassifyOptions::default() };
    let cert = classify_theta(lattice, &opts);
    (cert.classification == Classification::Theta).then_some(cert)
}

pub fn certify_convergence(
    lattice: &Lattice,
    data: &ModeAmplitudes,
    theta: Option<&DiophantineCertificate>,
    bits: u32,
) -> ConvergenceCertificate {
    let radius = data.values.keys().map(|s| s.norm_inf()).max().unwrap_or(0) as usize;
    let mut per_shell = vec![0.0; radius + 1];
    let mut shell_max = vec![0.0f64; radius + 1];
    for (&s, &amp) in &data.values {
        if s.s2() == 0 {
            continue;
        }
        let n = s.norm_inf() as usize;
        per_shell[n] += amp / lattice.multiplier_a_precise(s, bits).norm();
        shell_max[n] = shell_max[n].max(amp);
    }
    let shell_sums: Vec<f64> = per_shell[1.min(per_shell.len())..]
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let (c, delta) = match theta {
        Some(t) => (t.c_est, t.delta_est),
        None => (None, None),
    };
    let mut cert = ConvergenceCertificate {
        kind: BoundKind::NotCertified,
        d: Some(distance_constant(lattice)),
        c,
        delta,
        rate: None,
        shell_sums,
        majorant: None,
    };
    if data.finite {
        cert.kind = BoundKind::FiniteInput;
        return cert;
    }
    let (Some(c), Some(delta)) = (c, delta) else { return cert };
    let Some(n0) = (1..=radius).find(|&n| shell_max[n] > 0.0) else {
        cert.kind = BoundKind::GeometricMajorant;
        cert.rate = Some(0.0);
        cert.majorant = Some(0.0);
        return cert;
    };
    if radius <= n0 {
        // One nonzero shell fixes no decay rate.
        return cert;
    }
    let base = shell_max[n0];
    let rate = (n0 + 1..=radius).map(|n| (shell_max[n] / base).powf(1.0 / (n - n0) as f64)).fold(0.0, f64::max);
    cert.rate = Some(rate);
    if rate >= delta {
        return cert;
    }
    let ratio = rate / delta;
    let scale = cert.d.expect("set above") / c;
    let mut sum = 0.0;
    let mut n = n0 as u64;
    loop {
        let term = shell_count(n) * base * ratio.powi((n - n0 as u64) as i32) * delta.powi(-(n0 as i32));
        sum += term;
        if (n > radius as u64 && term <= 1e-17 * sum && ratio * shell_count(n + 1) / shell_count(n) < 1.0)
            || n > 100_000
        {
            break;
        }
        n += 1;
    }
    cert.majorant = Some(scale * sum);
    cert.kind = BoundKind::GeometricMajorant;
    cert
}

/// Certificate of a solver input: finite data, with the lattice constants recorded when known.
pub(crate) fn finite_certificate(
    lattice: &Lattice,
    values: BTreeMap<ModeIndex, f64>,
    bits: u32,
) -> ConvergenceCertificate {
    let theta = theta_certificate(lattice, bits);
    certify_convergence(lattice, &ModeAmplitudes { values, finite: true }, theta.as_ref(), bits)
}
