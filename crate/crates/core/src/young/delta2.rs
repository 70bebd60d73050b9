//! Grid-based Δ₂ certificates: `Φ(t, 2λ) ≤ K Φ(t, λ) + h(t)`.
//!
//! Δ₂ quantifies over all `λ ≥ 0`; a certificate only covers the grid it
//! carries. Unbounded growth is recognised from the grid tail: if the
//! doubling ratio (or the offset needed for a fixed `K`) is still rising over
//! the last octave of the grid, no finite constant is reported.

use serde::{Deserialize, Serialize};

use super::{ExtReal, YoungError, YoungFunction};
use crate::modular::AtomicMeasureSpace;

/// Relative growth over the last octave that counts as "still increasing".
pub const TAIL_GROWTH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta2Mode {
    /// Find the least `K` on the grid with `h ≡ 0`.
    RatioOnly,
    /// For the given `K`, find the least `h(t) ≥ 0` on the grid.
    WithOffset { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Delta2Failure {
    /// `Φ(t, 2λ) = +∞` at a grid point.
    InfiniteValue { atom: usize, lambda: f64 },
    /// `Φ(t, λ) = 0 < Φ(t, 2λ)`: no multiplicative constant works.
    ZeroThenPositive { atom: usize, lambda: f64 },
    /// The doubling ratio is still growing at the end of the grid.
    UnboundedRatio {
        atom: usize,
        ratio_at_max: f64,
        ratio_at_half: f64,
    },
    /// The required offset is still growing at the end of the grid.
    UnboundedOffset {
        atom: usize,
        excess_at_max: f64,
        excess_at_half: f64,
    },
}

impl std::fmt::Display for Delta2Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Delta2Failure::InfiniteValue { atom, lambda } => {
                write!(f, "Φ(t={atom}, 2·{lambda}) is infinite")
            }
            Delta2Failure::ZeroThenPositive { atom, lambda } => {
                write!(f, "Φ(t={atom}, {lambda}) = 0 < Φ(t, 2λ)")
            }
            Delta2Failure::UnboundedRatio { atom, ratio_at_max, ratio_at_half } => write!(
                f,
                "doubling ratio at t={atom} grows over the last octave ({ratio_at_half} -> {ratio_at_max})"
            ),
            Delta2Failure::UnboundedOffset { atom, excess_at_max, excess_at_half } => write!(
                f,
                "required offset at t={atom} grows over the last octave ({excess_at_half} -> {excess_at_max})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delta2Certificate {
    pub k: f64,
    pub h: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Largest scale-relative violation `(Φ(2λ) - KΦ(λ) - h)₊ / max(1, Φ(2λ))`
    /// re-evaluated on the grid.
    pub max_violation: f64,
    /// `∫ h dμ`.
    pub h_l1_norm: f64,
    pub failure: Option<Delta2Failure>,
}

/// Flat serializable form of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Record {
    pub certified: bool,
    pub k: f64,
    pub h: Vec<f64>,
    pub h_l1_norm: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    pub max_violation: f64,
    pub failure: Option<String>,
}

impl Delta2Certificate {
    pub fn is_certified(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_record(&self) -> Delta2Record {
        Delta2Record {
            certified: self.is_certified(),
            k: self.k,
            h: self.h.clone(),
            h_l1_norm: self.h_l1_norm,
            grid_min: self.lambda_grid.first().copied().unwrap_or(f64::NAN),
            grid_max: self.lambda_grid.last().copied().unwrap_or(f64::NAN),
            grid_count: self.lambda_grid.len(),
            max_violation: self.max_violation,
            failure: self.failure.as_ref().map(|f| f.to_string()),
        }
    }

    /// Re-evaluates the certified inequality on another grid and returns the
    /// largest scale-relative violation.
    pub fn replay(&self, phi: &YoungFunction, grid: &[f64]) -> Result<f64, YoungError> {
        replay_violation(phi, self.k, &self.h, grid)
    }
}

fn replay_violation(
    phi: &YoungFunction,
    k: f64,
    h: &[f64],
    grid: &[f64],
) -> Result<f64, YoungError> {
    let mut worst: f64 = 0.0;
    for (t, &ht) in h.iter().enumerate() {
        for &lambda in grid {
            let (ExtReal::Finite(lo), ExtReal::Finite(hi)) =
                (phi.eval(t, lambda)?, phi.eval(t, 2.0 * lambda)?)
            else {
                continue;
            };
            let excess = hi - k * lo - ht;
            worst = worst.max(excess / hi.max(1.0));
        }
    }
    Ok(worst)
}

fn check_grid(grid: &[f64]) -> Result<(), YoungError> {
    if grid.is_empty() {
        return Err(YoungError::InvalidGrid("empty".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(YoungError::InvalidGrid(
            "points must be positive and finite".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(YoungError::InvalidGrid(
            "points must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Index of the largest grid point not exceeding `half`, if any.
fn half_index(grid: &[f64], upto: usize, half: f64) -> Option<usize> {
    grid[..upto].iter().rposition(|&l| l <= half)
}

/// Estimates a Δ₂ certificate for `phi` on `grid` (positive, sorted).
///
/// Failures (no finite constant on the grid) are reported inside the
/// certificate; errors are reserved for invalid input.
pub fn estimate_delta2(
    phi: &YoungFunction,
    space: &AtomicMeasureSpace,
    grid: &[f64],
    mode: Delta2Mode,
) -> Result<Delta2Certificate, YoungError> {
    check_grid(grid)?;
    if space.len() != phi.atoms() {
        return Err(YoungError::AtomMismatch {
            expected: phi.atoms(),
            found: space.len(),
        });
    }
    let mut failure = None;
    let mut h = vec![0.0_f64; phi.atoms()];
    let k = match mode {
        Delta2Mode::RatioOnly => {
            let mut k_max: f64 = 0.0;
            for t in 0..phi.atoms() {
                let mut ratios: Vec<(usize, f64)> = Vec::with_capacity(grid.len());
                for (i, &lambda) in grid.iter().enumerate() {
                    let lo = phi.eval(t, lambda)?;
                    let ExtReal::Finite(hi) = phi.eval(t, 2.0 * lambda)? else {
                        failure.get_or_insert(Delta2Failure::InfiniteValue { atom: t, lambda });
                        continue;
                    };
                    let lo = lo.finite().expect("Φ nondecreasing");
                    if lo == 0.0 {
                        if hi > 0.0 {
                            failure
                                .get_or_insert(Delta2Failure::ZeroThenPositive { atom: t, lambda });
                        }
                        continue;
                    }
                    let r = match phi.homogeneity_degree(t) {
                        Some(d) => 2f64.powf(d),
                        None => hi / lo,
                    };
                    ratios.push((i, r));
                }
                let atom_max = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
                if let Some(&(last_i, r_last)) = ratios.last() {
                    let half = half_index(grid, last_i, grid[last_i] / 2.0)
                        .and_then(|hi| ratios.iter().rev().find(|r| r.0 <= hi));
                    if let Some(&(_, r_half)) = half {
                        if r_last >= atom_max && r_last > r_half * (1.0 + TAIL_GROWTH_TOL) {
                            failure.get_or_insert(Delta2Failure::UnboundedRatio {
                                atom: t,
                                ratio_at_max: r_last,
                                ratio_at_half: r_half,
                            });
                        }
                    }
                }
                k_max = k_max.max(atom_max);
            }
            // Convexity with Φ(0) = 0 forces Φ(2λ) ≥ 2Φ(λ).
            if k_max > 1.0 {
                k_max
            } else {
                2.0
            }
        }
        Delta2Mode::WithOffset { k } => {
            if !(k > 1.0 && k.is_finite()) {
                return Err(YoungError::InvalidK(k));
            }
            for (t, ht) in h.iter_mut().enumerate() {
                let mut excess: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
                for &lambda in grid {
                    let lo = phi.eval(t, lambda)?;
                    let ExtReal::Finite(hi) = phi.eval(t, 2.0 * lambda)? else {
                        failure.get_or_insert(Delta2Failure::InfiniteValue { atom: t, lambda });
                        continue;
                    };
                    let lo = lo.finite().expect("Φ nondecreasing");
                    let e = hi - k * lo;
                    excess.push((e, hi));
                    *ht = ht.max(e);
                }
                let n = excess.len();
                if n == grid.len() && n >= 2 {
                    if let Some(hi_idx) = half_index(grid, n - 1, grid[n - 1] / 2.0) {
                        let (e_last, scale) = excess[n - 1];
                        let e_half = excess[hi_idx].0;
                        if e_last > 0.0 && e_last > e_half + TAIL_GROWTH_TOL * scale.max(1.0) {
                            failure.get_or_insert(Delta2Failure::UnboundedOffset {
                                atom: t,
                                excess_at_max: e_last,
                                excess_at_half: e_half,
                            });
                        }
                    }
                }
            }
            k
        }
    };
    let max_violation = replay_violation(phi, k, &h, grid)?;
    let h_l1_norm = space.integrate(&h);
    Ok(Delta2Certificate {
        k,
        h,
        lambda_grid: grid.to_vec(),
        max_violation,
        h_l1_norm,
        failure,
    })
}
