//! Young-function calculus on a finite set of atoms.
//!
//! A [`YoungFunction`] is a family of convex, nondecreasing, left-continuous
//! maps `Φ(t, ·): [0, ∞) → [0, ∞]` with `Φ(t, 0) = 0`, one per atom `t`.
//! Besides evaluation this module provides the right-continuous derivative
//! `φ`, the Legendre conjugate (complemented function) `Ψ`, the generalized
//! inverse `φ⁻¹(y) = sup{x : φ(x) ≤ y}`, Young's inequality, Δ₂ certificates
//! and the complement-derivative bound `Ψ(x) ≤ (K-1)/K · x ψ(x) + h/K`.

mod delta2;
mod extended;
mod spec;
mod table;

pub use delta2::{estimate_delta2, Delta2Certificate, Delta2Failure, Delta2Mode, Delta2Record};
pub use extended::ExtReal;
pub use spec::FamilySpec;
pub use table::{PiecewiseLinear, Tail};

use thiserror::Error;

use crate::solve::{self, Tolerance, BRACKET_CAP_LOG2};

/// Relative tolerance of the conjugation search.
pub const CONJUGATE_REL_TOL: f64 = 1e-10;
/// Relative tolerance of the generalized-inverse bisection.
pub const INVERSE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YoungError {
    #[error("argument must be a nonnegative real, got {0}")]
    NegativeArgument(f64),
    #[error("atom {atom} out of range (function has {atoms} atoms)")]
    AtomOutOfRange { atom: usize, atoms: usize },
    #[error("Φ(t={atom}, {x}) is infinite")]
    InfiniteValue { atom: usize, x: f64 },
    #[error("right derivative at t={atom}, x={x} is infinite")]
    InfiniteDerivative { atom: usize, x: f64 },
    #[error("exponent {p} at atom {atom} is outside [1, ∞)")]
    InvalidExponent { atom: usize, p: f64 },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid λ-grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} atoms, found {found}")]
    AtomMismatch { expected: usize, found: usize },
    #[error("Δ₂ constant K must exceed 1, got {0}")]
    InvalidK(f64),
    #[error("invalid family spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `λ^p` on every atom.
    Power {
        p: f64,
    },
    /// `λ^{p(t)}`.
    VariableExponent {
        p: Vec<f64>,
    },
    /// `e^λ - 1` on every atom.
    ExpMinusOne,
    Tabulated(Vec<PiecewiseLinear>),
    /// The closed form `x^{p'(t)}` commonly quoted as the complement of
    /// `λ^{p(t)}`, with `0` on `[0, 1]` and `+∞` beyond when `p(t) = 1`. It is
    /// the exact conjugate only up to the factor `(p-1)·p^{-p'}`.
    HolderDual {
        p: Vec<f64>,
    },
    /// Numerical Legendre transform of another Young function.
    ExactConjugateOf(Box<YoungFunction>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    family: Family,
    atoms: usize,
}

fn check_exponents(p: &[f64]) -> Result<(), YoungError> {
    match p.iter().position(|&v| !(v >= 1.0 && v.is_finite())) {
        Some(atom) => Err(YoungError::InvalidExponent { atom, p: p[atom] }),
        None => Ok(()),
    }
}

fn holder_conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_arg(x: f64) -> Result<(), YoungError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(YoungError::NegativeArgument(x))
    }
}

impl YoungFunction {
    pub fn power(p: f64, atoms: usize) -> Result<Self, YoungError> {
        check_exponents(&[p])?;
        Ok(YoungFunction {
            family: Family::Power { p },
            atoms,
        })
    }

    pub fn variable_exponent(p: Vec<f64>) -> Result<Self, YoungError> {
        check_exponents(&p)?;
        let atoms = p.len();
        Ok(YoungFunction {
            family: Family::VariableExponent { p },
            atoms,
        })
    }

    pub fn exp_minus_one(atoms: usize) -> Self {
        YoungFunction {
            family: Family::ExpMinusOne,
            atoms,
        }
    }

    pub fn tabulated(tables: Vec<PiecewiseLinear>) -> Self {
        let atoms = tables.len();
        YoungFunction {
            family: Family::Tabulated(tables),
            atoms,
        }
    }

    pub fn holder_dual(p: Vec<f64>) -> Result<Self, YoungError> {
        check_exponents(&p)?;
        let atoms = p.len();
        Ok(YoungFunction {
            family: Family::HolderDual { p },
            atoms,
        })
    }

    /// The complemented function `Ψ(t, x) = sup_{y ≥ 0} (xy - Φ(t, y))`,
    /// evaluated numerically on demand.
    pub fn conjugate(&self) -> YoungFunction {
        YoungFunction {
            family: Family::ExactConjugateOf(Box::new(self.clone())),
            atoms: self.atoms,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    fn check_atom(&self, t: usize) -> Result<(), YoungError> {
        if t < self.atoms {
            Ok(())
        } else {
            Err(YoungError::AtomOutOfRange {
                atom: t,
                atoms: self.atoms,
            })
        }
    }

    /// Degree `d` when `Φ(t, cλ) = c^d Φ(t, λ)` holds identically.
    pub fn homogeneity_degree(&self, t: usize) -> Option<f64> {
        match &self.family {
            Family::Power { p } => Some(*p),
            Family::VariableExponent { p } => Some(p[t]),
            Family::HolderDual { p } if p[t] > 1.0 => Some(holder_conjugate(p[t])),
            Family::ExactConjugateOf(inner) => inner
                .homogeneity_degree(t)
                .filter(|&d| d > 1.0)
                .map(holder_conjugate),
            _ => None,
        }
    }

    /// `Φ(t, x)`.
    pub fn eval(&self, t: usize, x: f64) -> Result<ExtReal, YoungError> {
        self.check_atom(t)?;
        check_arg(x)?;
        Ok(self.value(t, x))
    }

    fn value(&self, t: usize, x: f64) -> ExtReal {
        if x == 0.0 {
            return ExtReal::ZERO;
        }
        match &self.family {
            Family::Power { p } => ExtReal::from_f64(x.powf(*p)),
            Family::VariableExponent { p } => ExtReal::from_f64(x.powf(p[t])),
            Family::ExpMinusOne => ExtReal::from_f64(x.exp_m1()),
            Family::Tabulated(tables) => tables[t].eval(x),
            Family::HolderDual { p } => {
                if p[t] == 1.0 {
                    if x <= 1.0 {
                        ExtReal::ZERO
                    } else {
                        ExtReal::Infinity
                    }
                } else {
                    ExtReal::from_f64(x.powf(holder_conjugate(p[t])))
                }
            }
            Family::ExactConjugateOf(inner) => inner.conjugate_value(t, x),
        }
    }

    /// Right-continuous derivative `φ(t, x)`, possibly infinite.
    fn slope(&self, t: usize, x: f64) -> ExtReal {
        match &self.family {
            Family::Power { p } => power_slope(*p, x),
            Family::VariableExponent { p } => power_slope(p[t], x),
            Family::ExpMinusOne => ExtReal::from_f64(x.exp()),
            Family::Tabulated(tables) => tables[t].right_slope(x),
            Family::HolderDual { p } => {
                if p[t] == 1.0 {
                    if x < 1.0 {
                        ExtReal::ZERO
                    } else {
                        ExtReal::Infinity
                    }
                } else {
                    power_slope(holder_conjugate(p[t]), x)
                }
            }
            // ψ = φ⁻¹ with the right-continuous choice on both sides.
            Family::ExactConjugateOf(inner) => inner.inverse_value(t, x),
        }
    }

    /// `φ(t, x)`, the right-continuous version of `∂ₓΦ(t, x)`.
    pub fn right_derivative(&self, t: usize, x: f64) -> Result<f64, YoungError> {
        self.check_atom(t)?;
        check_arg(x)?;
        if self.value(t, x).is_infinite() {
            return Err(YoungError::InfiniteValue { atom: t, x });
        }
        self.slope(t, x)
            .finite()
            .ok_or(YoungError::InfiniteDerivative { atom: t, x })
    }

    /// Legendre transform `sup_{y ≥ 0} (xy - Φ(t, y))`.
    pub fn conjugate_at(&self, t: usize, x: f64) -> Result<ExtReal, YoungError> {
        self.check_atom(t)?;
        check_arg(x)?;
        Ok(self.conjugate_value(t, x))
    }

    fn conjugate_value(&self, t: usize, x: f64) -> ExtReal {
        if x == 0.0 {
            return ExtReal::ZERO;
        }
        let objective = |y: f64| x * y - self.value(t, y).to_f64();
        // Concave in y: double until the objective stops increasing.
        let cap = 2f64.powi(BRACKET_CAP_LOG2);
        let (mut lower, mut upper) = (0.0, 1.0);
        let mut f_upper = objective(upper);
        loop {
            let next = 2.0 * upper;
            let f_next = objective(next);
            if f_next <= f_upper || f_next.is_nan() {
                upper = next;
                break;
            }
            if next >= cap {
                return ExtReal::Infinity;
            }
            lower = upper;
            upper = next;
            f_upper = f_next;
        }
        let r = solve::golden_max(
            objective,
            lower,
            upper,
            Tolerance::Relative(CONJUGATE_REL_TOL),
        );
        // y = 0 always contributes 0 since Φ(t, 0) = 0.
        ExtReal::Finite(r.value.max(0.0))
    }

    /// Generalized inverse `sup{x ≥ 0 : φ(t, x) ≤ y}`; `+∞` when `φ` never
    /// exceeds `y`, and `0` when the set is empty. At jumps of `φ` the right
    /// end of the flat region is returned.
    pub fn inverse_derivative(&self, t: usize, y: f64) -> Result<ExtReal, YoungError> {
        self.check_atom(t)?;
        check_arg(y)?;
        Ok(self.inverse_value(t, y))
    }

    fn inverse_value(&self, t: usize, y: f64) -> ExtReal {
        let above = |x: f64| self.slope(t, x) > y;
        if above(0.0) {
            return ExtReal::ZERO;
        }
        let cap = 2f64.powi(BRACKET_CAP_LOG2);
        let (mut lo, mut hi) = (0.0, 1.0);
        while !above(hi) {
            if hi >= cap {
                return ExtReal::Infinity;
            }
            lo = hi;
            hi *= 2.0;
        }
        let b = solve::bisect(above, lo, hi, Tolerance::Relative(INVERSE_REL_TOL));
        ExtReal::Finite(b.lo)
    }
}

fn power_slope(p: f64, x: f64) -> ExtReal {
    if p == 1.0 {
        ExtReal::Finite(1.0)
    } else if x == 0.0 {
        ExtReal::ZERO
    } else {
        ExtReal::from_f64(p * x.powf(p - 1.0))
    }
}

/// `Φ(t, x) + Ψ(t, y) - xy`; nonnegative when `Ψ` is the complement of `Φ`,
/// and zero exactly when `y = φ(t, x)`.
pub fn young_margin(
    phi: &YoungFunction,
    psi: &YoungFunction,
    t: usize,
    x: f64,
    y: f64,
) -> Result<ExtReal, YoungError> {
    let a = phi.eval(t, x)?;
    let b = psi.eval(t, y)?;
    Ok((a + b).minus(x * y))
}

/// Worst margins of `Ψ(t, x) ≤ c · x ψ(t, x) + h(t)/K` over atoms and grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementBound {
    /// With `c = (K-1)/K`, the constant the argument actually delivers.
    pub proof_margin: f64,
    /// With `c = K/(K-1)`, the weaker constant.
    pub stated_margin: f64,
    pub worst_atom: usize,
    pub worst_x: f64,
    /// Grid points where both sides were finite.
    pub points: usize,
}

/// Checks the complement-derivative bound for `Ψ` (the complement of `Φ`)
/// using a Δ₂ certificate of `Φ`. Points where the right-hand side is
/// infinite satisfy the bound trivially and are skipped.
pub fn complement_derivative_bound(
    phi: &YoungFunction,
    psi: &YoungFunction,
    cert: &Delta2Certificate,
    grid: &[f64],
) -> Result<ComplementBound, YoungError> {
    if phi.atoms() != psi.atoms() {
        return Err(YoungError::AtomMismatch {
            expected: phi.atoms(),
            found: psi.atoms(),
        });
    }
    if cert.h.len() != phi.atoms() {
        return Err(YoungError::AtomMismatch {
            expected: phi.atoms(),
            found: cert.h.len(),
        });
    }
    let k = cert.k;
    if !(k > 1.0) {
        return Err(YoungError::InvalidK(k));
    }
    let proof_c = (k - 1.0) / k;
    let stated_c = k / (k - 1.0);
    let mut out = ComplementBound {
        proof_margin: f64::INFINITY,
        stated_margin: f64::INFINITY,
        worst_atom: 0,
        worst_x: 0.0,
        points: 0,
    };
    for t in 0..psi.atoms() {
        let offset = cert.h[t] / k;
        for &x in grid {
            check_arg(x)?;
            let slope = psi.slope(t, x);
            let Some(slope) = slope.finite() else {
                continue;
            };
            let lhs = psi.value(t, x);
            let (proof, stated) = match lhs {
                ExtReal::Finite(v) => (
                    proof_c * x * slope + offset - v,
                    stated_c * x * slope + offset - v,
                ),
                ExtReal::Infinity => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            };
            out.points += 1;
            if proof < out.proof_margin {
                out.proof_margin = proof;
                out.worst_atom = t;
                out.worst_x = x;
            }
            out.stated_margin = out.stated_margin.min(stated);
        }
    }
    Ok(out)
}
