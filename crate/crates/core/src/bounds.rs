//! Explicit constants of the UMD envelope for `L^Φ(T; X)` and certification
//! of empirical transform ratios against it.
//!
//! The chain is
//! `C_h = 2 + ‖h_Φ‖₁ + ‖h_Ψ‖₁/K_Ψ`,
//! `C_{K,X} ≤ 2(M K^{M+1} + 1)` with `M = ⌊log₂(48K/ζ(0,0))⌋ + 1`,
//! `ζ(0,0) ≥ 1/(6 K_Ψ C_{K_Φ,X} C_h)` and
//! `β_p ≤ 432 K_Ψ C_{K_Φ,X} C_h (p+1)²/(p-1)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::martingale::UmdEstimate;
use crate::young::Delta2Certificate;

/// Floor on any transform ratio, witnessed by `ϵ ≡ +1`.
pub const RATIO_FLOOR: f64 = 1.0 - 1e-9;
/// `ζ(0,0)` of the scalar fiber `X = ℝ`, witnessed by `ζ(x, y) = 1 + xy`.
pub const SCALAR_ZETA00: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("Δ₂ constant K must be a finite number > 1, got {0}")]
    InvalidK(f64),
    #[error("ζ(0,0) must lie in (0, 1], got {0}")]
    InvalidZeta(f64),
    #[error("{name} must be a finite positive number, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be a finite nonnegative number, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("UMD exponent p must lie in (1, ∞), got {0}")]
    InvalidP(f64),
    #[error("hypotheses not met: {0}")]
    Hypotheses(String),
    #[error("constants report violates an invariant: {0}")]
    Invariant(String),
}

fn positive(name: &'static str, value: f64) -> Result<f64, BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64, BoundsError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundsError::Negative { name, value })
    }
}

fn check_k(k: f64) -> Result<f64, BoundsError> {
    if k > 1.0 && k.is_finite() {
        Ok(k)
    } else {
        Err(BoundsError::InvalidK(k))
    }
}

pub fn c_h(h_phi_l1: f64, k_psi: f64, h_psi_l1: f64) -> Result<f64, BoundsError> {
    let h_phi = nonnegative("‖h_Φ‖₁", h_phi_l1)?;
    let h_psi = nonnegative("‖h_Ψ‖₁", h_psi_l1)?;
    Ok(2.0 + h_phi + h_psi / check_k(k_psi)?)
}

/// `(M, 2(M K^{M+1} + 1))` with `M` the least integer such that
/// `2^M > 48K/ζ(0,0)`.
pub fn c_kx_bound(k: f64, zeta00: f64) -> Result<(u32, f64), BoundsError> {
    let k = check_k(k)?;
    if !(zeta00 > 0.0 && zeta00 <= 1.0) {
        return Err(BoundsError::InvalidZeta(zeta00));
    }
    let r = 48.0 * k / zeta00;
    if !r.is_finite() {
        return Err(BoundsError::InvalidZeta(zeta00));
    }
    let mut m: u32 = 1;
    while 2f64.powi(m as i32) <= r {
        m += 1;
    }
    let c_kx = 2.0 * (f64::from(m) * k.powi(m as i32 + 1) + 1.0);
    Ok((m, c_kx))
}

pub fn zeta_lower(k_psi: f64, c_kx: f64, c_h: f64) -> Result<f64, BoundsError> {
    let k = positive("K_Ψ", k_psi)?;
    let c = positive("C_KX", c_kx)?;
    let h = positive("C_h", c_h)?;
    Ok(1.0 / (6.0 * k * c * h))
}

pub fn beta_upper(p: f64, k_psi: f64, c_kx: f64, c_h: f64) -> Result<f64, BoundsError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(BoundsError::InvalidP(p));
    }
    let k = positive("K_Ψ", k_psi)?;
    let c = positive("C_KX", c_kx)?;
    let h = positive("C_h", c_h)?;
    Ok(432.0 * k * c * h * (p + 1.0).powi(2) / (p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub p: f64,
    pub beta_upper: f64,
}

/// Constants of `L^{p(·)}` read with `K_Φ = p₊`, `K_Ψ = p₋'` (no
/// exponentiation), reported next to the proven `2^{p₊}`, `2^{p₋'}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralVariant {
    pub k_phi: f64,
    pub k_psi: f64,
    pub c_h: f64,
    pub m: u32,
    pub c_kx: f64,
    /// `1/(6 K_Ψ C_{K_Φ,X} C_h)` with the literal constants.
    pub zeta00_lower: f64,
    /// `1/(3 p₋' C_{p₊,X})` as written, which differs from the line above
    /// by the factor `2 C_h = 4`.
    pub zeta00_lower_as_written: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableExponentData {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_minus_conj: f64,
    pub literal: LiteralVariant,
    /// True when the literal reading disagrees with the proven one.
    pub discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub k_phi: f64,
    pub h_phi_l1: f64,
    pub k_psi: f64,
    pub h_psi_l1: f64,
    pub c_h: f64,
    pub zeta00_fiber: f64,
    pub m: u32,
    pub c_kx: f64,
    pub zeta00_lower: f64,
    pub beta_upper: Vec<BetaEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_exponent: Option<VariableExponentData>,
}

impl ConstantsReport {
    pub fn from_constants(
        k_phi: f64,
        h_phi_l1: f64,
        k_psi: f64,
        h_psi_l1: f64,
        zeta00_fiber: f64,
        ps: &[f64],
    ) -> Result<Self, BoundsError> {
        let c_h = c_h(h_phi_l1, k_psi, h_psi_l1)?;
        let (m, c_kx) = c_kx_bound(k_phi, zeta00_fiber)?;
        let zeta00_lower = zeta_lower(k_psi, c_kx, c_h)?;
        let beta_upper = ps
            .iter()
            .map(|&p| {
                Ok(BetaEntry {
                    p,
                    beta_upper: beta_upper(p, k_psi, c_kx, c_h)?,
                })
            })
            .collect::<Result<_, BoundsError>>()?;
        Ok(ConstantsReport {
            k_phi,
            h_phi_l1,
            k_psi,
            h_psi_l1,
            c_h,
            zeta00_fiber,
            m,
            c_kx,
            zeta00_lower,
            beta_upper,
            variable_exponent: None,
        })
    }

    pub fn from_certificates(
        phi: &Delta2Certificate,
        psi: &Delta2Certificate,
        zeta00_fiber: f64,
        ps: &[f64],
    ) -> Result<Self, BoundsError> {
        for (name, cert) in [("Φ", phi), ("Ψ", psi)] {
            if let Some(failure) = &cert.failure {
                return Err(BoundsError::Hypotheses(format!(
                    "{name} is not in Δ₂: {failure}"
                )));
            }
        }
        Self::from_constants(phi.k, phi.h_l1_norm, psi.k, psi.h_l1_norm, zeta00_fiber, ps)
    }

    pub fn beta_at(&self, p: f64) -> Result<f64, BoundsError> {
        beta_upper(p, self.k_psi, self.c_kx, self.c_h)
    }

    /// Re-derives every dependent constant and compares exactly.
    pub fn check_invariants(&self) -> Result<(), BoundsError> {
        let fail = |msg: String| Err(BoundsError::Invariant(msg));
        let c_h = c_h(self.h_phi_l1, self.k_psi, self.h_psi_l1)?;
        if c_h != self.c_h {
            return fail(format!("C_h = {} but recomputes to {c_h}", self.c_h));
        }
        let (m, c_kx) = c_kx_bound(self.k_phi, self.zeta00_fiber)?;
        if self.m < 1 || m != self.m || c_kx != self.c_kx {
            return fail(format!(
                "(M, C_KX) = ({}, {}) but recomputes to ({m}, {c_kx})",
                self.m, self.c_kx
            ));
        }
        let z = zeta_lower(self.k_psi, self.c_kx, self.c_h)?;
        if z != self.zeta00_lower {
            return fail(format!(
                "ζ lower bound {} but recomputes to {z}",
                self.zeta00_lower
            ));
        }
        for e in &self.beta_upper {
            let b = self.beta_at(e.p)?;
            if b != e.beta_upper {
                return fail(format!(
                    "β_upper({}) = {} but recomputes to {b}",
                    e.p, e.beta_upper
                ));
            }
            if b < 1.0 / self.zeta00_lower {
                return fail(format!("β_upper({}) = {b} below 1/ζ lower bound", e.p));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ConstantsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row =
            |f: &mut fmt::Formatter<'_>, k: &str, v: &dyn fmt::Display| writeln!(f, "{k:<28} {v}");
        row(f, "K_Phi", &self.k_phi)?;
        row(f, "||h_Phi||_1", &self.h_phi_l1)?;
        row(f, "K_Psi", &self.k_psi)?;
        row(f, "||h_Psi||_1", &self.h_psi_l1)?;
        row(f, "C_h", &self.c_h)?;
        row(f, "zeta00 (fiber)", &self.zeta00_fiber)?;
        row(f, "M", &self.m)?;
        row(f, "C_KX", &self.c_kx)?;
        row(f, "zeta00 lower bound", &self.zeta00_lower)?;
        for e in &self.beta_upper {
            row(f, &format!("beta_upper(p={})", e.p), &e.beta_upper)?;
        }
        if let Some(v) = &self.variable_exponent {
            row(f, "p_plus", &v.p_plus)?;
            row(f, "p_minus", &v.p_minus)?;
            row(f, "p_minus'", &v.p_minus_conj)?;
            row(f, "literal K_Phi = p_plus", &v.literal.k_phi)?;
            row(f, "literal K_Psi = p_minus'", &v.literal.k_psi)?;
            row(f, "literal M", &v.literal.m)?;
            row(f, "literal C_KX", &v.literal.c_kx)?;
            row(f, "literal zeta00 lower", &v.literal.zeta00_lower)?;
            row(f, "1/(3 p_minus' C_KX)", &v.literal.zeta00_lower_as_written)?;
            row(f, "readings disagree", &v.discrepancy)?;
        }
        Ok(())
    }
}

/// Constants for `Φ(t, λ) = λ^{p(t)}`: `K_Φ = 2^{p₊}`, `K_Ψ = 2^{p₋'}`,
/// `h = 0`.
pub fn variable_lebesgue_report(
    p_map: &[f64],
    zeta00_fiber: f64,
    ps: &[f64],
) -> Result<ConstantsReport, BoundsError> {
    if p_map.is_empty() {
        return Err(BoundsError::Hypotheses("no exponents given".into()));
    }
    if let Some(p) = p_map.iter().find(|p| !p.is_finite() || **p < 1.0) {
        return Err(BoundsError::Hypotheses(format!(
            "exponent {p} is not in [1, ∞)"
        )));
    }
    let p_plus = p_map.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_minus = p_map.iter().copied().fold(f64::INFINITY, f64::min);
    if p_minus <= 1.0 {
        return Err(BoundsError::Hypotheses(format!(
            "ess inf p = {p_minus}; the complementary function is not in Δ₂ unless ess inf p > 1"
        )));
    }
    let p_minus_conj = p_minus / (p_minus - 1.0);
    let mut report = ConstantsReport::from_constants(
        2f64.powf(p_plus),
        0.0,
        2f64.powf(p_minus_conj),
        0.0,
        zeta00_fiber,
        ps,
    )?;

    let c_h_lit = c_h(0.0, p_minus_conj, 0.0)?;
    let (m, c_kx) = c_kx_bound(p_plus, zeta00_fiber)?;
    let literal = LiteralVariant {
        k_phi: p_plus,
        k_psi: p_minus_conj,
        c_h: c_h_lit,
        m,
        c_kx,
        zeta00_lower: zeta_lower(p_minus_conj, c_kx, c_h_lit)?,
        zeta00_lower_as_written: 1.0 / (3.0 * p_minus_conj * c_kx),
    };
    let discrepancy = literal.k_phi != report.k_phi
        || literal.k_psi != report.k_psi
        || literal.zeta00_lower != literal.zeta00_lower_as_written;
    report.variable_exponent = Some(VariableExponentData {
        p_plus,
        p_minus,
        p_minus_conj,
        literal,
        discrepancy,
    });
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub certified: bool,
    pub p: f64,
    pub best_ratio: f64,
    pub beta_upper: f64,
    /// `best_ratio − (1 − 1e-9)`.
    pub lower_margin: f64,
    /// `beta_upper − best_ratio`.
    pub upper_margin: f64,
}

pub fn certify_ratio(
    best_ratio: f64,
    report: &ConstantsReport,
    p: f64,
) -> Result<Certification, BoundsError> {
    let beta = report.beta_at(p)?;
    let lower_margin = best_ratio - RATIO_FLOOR;
    let upper_margin = beta - best_ratio;
    Ok(Certification {
        certified: lower_margin >= 0.0 && upper_margin >= 0.0,
        p,
        best_ratio,
        beta_upper: beta,
        lower_margin,
        upper_margin,
    })
}

pub fn certify(
    estimate: &UmdEstimate,
    report: &ConstantsReport,
    p: f64,
) -> Result<Certification, BoundsError> {
    certify_ratio(estimate.best_ratio, report, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_h_examples() {
        assert_eq!(c_h(0.0, 2.0, 0.0).unwrap(), 2.0);
        assert_eq!(c_h(1.0, 2.0, 4.0).unwrap(), 5.0);
        assert!(c_h(0.0, 1.0, 0.0).is_err());
        assert!(c_h(-1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn c_kx_examples() {
        assert_eq!(c_kx_bound(2.0, 1.0).unwrap(), (7, 3586.0));
        assert_eq!(c_kx_bound(4.0, 1.0).unwrap(), (8, 4_194_306.0));
        assert_eq!(c_kx_bound(8.0, 1.0).unwrap().0, 9);
        assert!(c_kx_bound(2.0, 0.0).is_err());
        assert!(c_kx_bound(2.0, 1.5).is_err());
        assert!(c_kx_bound(1.0, 1.0).is_err());
    }

    #[test]
    fn zeta_and_beta_examples() {
        assert_eq!(zeta_lower(2.0, 3586.0, 2.0).unwrap(), 1.0 / 86064.0);
        assert_eq!(beta_upper(2.0, 2.0, 3586.0, 2.0).unwrap(), 55_769_472.0);
        assert_eq!(
            beta_upper(1.0, 2.0, 3586.0, 2.0),
            Err(BoundsError::InvalidP(1.0))
        );
    }

    #[test]
    fn variable_lebesgue_examples() {
        let r = variable_lebesgue_report(&[1.5, 3.0], 1.0, &[2.0]).unwrap();
        assert_eq!((r.k_phi, r.k_psi, r.c_h), (8.0, 8.0, 2.0));
        assert_eq!(r.m, 9);
        r.check_invariants().unwrap();
        let v = r.variable_exponent.as_ref().unwrap();
        assert_eq!((v.p_plus, v.p_minus, v.p_minus_conj), (3.0, 1.5, 3.0));
        assert_eq!((v.literal.k_phi, v.literal.k_psi), (3.0, 3.0));
        assert!(v.discrepancy);

        let c = variable_lebesgue_report(&[2.0, 2.0], 1.0, &[]).unwrap();
        assert_eq!((c.k_phi, c.k_psi), (4.0, 4.0));
        assert!(matches!(
            variable_lebesgue_report(&[1.0, 3.0], 1.0, &[]),
            Err(BoundsError::Hypotheses(_))
        ));
        assert!(variable_lebesgue_report(&[f64::INFINITY], 1.0, &[]).is_err());
    }

    #[test]
    fn tampered_report_fails_invariants() {
        let mut r = variable_lebesgue_report(&[1.5, 3.0], 1.0, &[2.0, 4.0]).unwrap();
        r.c_kx += 1.0;
        assert!(r.check_invariants().is_err());
    }

    #[test]
    fn certify_contract() {
        let r = ConstantsReport::from_constants(4.0, 0.0, 4.0, 0.0, 1.0, &[2.0]).unwrap();
        assert!(certify_ratio(1.0, &r, 2.0).unwrap().certified);
        assert!(!certify_ratio(0.5, &r, 2.0).unwrap().certified);
        let beyond = r.beta_at(2.0).unwrap() * 2.0;
        let c = certify_ratio(beyond, &r, 2.0).unwrap();
        assert!(!c.certified && c.upper_margin < 0.0);
    }
}
