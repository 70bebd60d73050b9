//! Paley-Walsh martingales on the full dyadic tree.
//!
//! `Ω = {−1, +1}^n` with the uniform measure; level `k` of a tree holds one
//! [`SimpleFunction`] per node `{−1, +1}^k`. Node `i` at level `k` has
//! children `2i` (sign −1) and `2i + 1` (sign +1), so the level-`k` node on
//! leaf path `ω` is `ω >> (n − k)`. Expectations are exact path averages.

mod checks;
mod io;
mod search;

pub use checks::{
    doob_check, main_estimate_check, scalar_zeta_witness_margin, DoobReport, MainEstimate,
};
pub use io::{read_tree_csv, write_tree_csv};
pub use search::{estimate_umd, random_martingale, Budget, UmdEstimate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::modular::{ModularError, MusielakOrlicz};
use crate::young::YoungError;

/// Deepest tree accepted (1024 leaf paths).
pub const MAX_DEPTH: usize = 10;
/// Residual tolerance of the martingale and submartingale checks, relative
/// to the largest absolute value in the tree.
pub const MARTINGALE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MartingaleError {
    #[error("depth must lie in 1..={MAX_DEPTH}, got {0}")]
    InvalidDepth(usize),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sign {0} is not ±1")]
    InvalidSign(i64),
    #[error("value at level {level}, node {node} is not finite")]
    NonFinite { level: usize, node: usize },
    #[error("root value is not zero (residual {0:e})")]
    RootNotZero(f64),
    #[error("martingale property fails at level {level}, node {node} (residual {residual:e})")]
    NotMartingale {
        level: usize,
        node: usize,
        residual: f64,
    },
    #[error("submartingale property fails at level {level}, node {node} (excess {excess:e})")]
    NotSubmartingale {
        level: usize,
        node: usize,
        excess: f64,
    },
    #[error("negative value {value} at level {level}, node {node}")]
    NegativeValue {
        level: usize,
        node: usize,
        value: f64,
    },
    #[error("exponent must lie in (1, ∞), got {0}")]
    InvalidExponent(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition Φ(λ) ≤ λφ(λ)/q + c fails at λ = {lambda}: {lhs} > {rhs}")]
    DoobPrecondition { lambda: f64, lhs: f64, rhs: f64 },
    #[error("Δ₂ certificate for {0} is not valid")]
    Uncertified(&'static str),
    #[error("sup of leaf norms is {0}, must be ≤ 1")]
    NotNormalised(f64),
    #[error("atom {atom} outside 0..{atoms}")]
    AtomOutOfRange { atom: usize, atoms: usize },
    #[error("search budget must have positive restarts and steps")]
    ZeroBudget,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Modular(#[from] ModularError),
    #[error(transparent)]
    Young(#[from] YoungError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

fn check_depth(depth: usize) -> Result<(), MartingaleError> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(MartingaleError::InvalidDepth(depth))
    }
}

/// `(ϵ_1, …, ϵ_n)` with entries ±1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignSequence(Vec<i8>);

impl SignSequence {
    pub fn new(signs: Vec<i64>) -> Result<Self, MartingaleError> {
        signs
            .into_iter()
            .map(|s| match s {
                1 => Ok(1),
                -1 => Ok(-1),
                other => Err(MartingaleError::InvalidSign(other)),
            })
            .collect::<Result<_, _>>()
            .map(SignSequence)
    }

    pub fn constant(n: usize, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1);
        SignSequence(vec![sign; n])
    }

    /// Bit `k − 1` of `bits` set means `ϵ_k = −1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        SignSequence(
            (0..n)
                .map(|k| if bits >> k & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }
}

/// Norm on `Y` used along paths.
#[derive(Debug, Clone, Copy)]
pub enum YNorm<'a> {
    /// `|v(t)|` at one atom.
    Fiber(usize),
    /// Luxemburg norm of the whole simple function.
    Luxemburg(&'a MusielakOrlicz),
}

impl YNorm<'_> {
    pub fn eval(&self, v: &[f64]) -> Result<f64, MartingaleError> {
        match *self {
            YNorm::Fiber(t) => v
                .get(t)
                .map(|x| x.abs())
                .ok_or(MartingaleError::AtomOutOfRange {
                    atom: t,
                    atoms: v.len(),
                }),
            YNorm::Luxemburg(space) => {
                if v.len() != space.atoms() {
                    return Err(MartingaleError::LengthMismatch {
                        expected: space.atoms(),
                        found: v.len(),
                    });
                }
                Ok(space.luxemburg_values(v)?.value)
            }
        }
    }
}

/// Martingale on the dyadic filtration with `f_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaleyWalshMartingale {
    depth: usize,
    atoms: usize,
    /// `levels[k][i * atoms + t]` is `f_k` at node `i`, atom `t`.
    levels: Vec<Vec<f64>>,
}

fn average_up(depth: usize, atoms: usize, leaves: Vec<f64>) -> Vec<Vec<f64>> {
    let mut levels = vec![Vec::new(); depth + 1];
    levels[depth] = leaves;
    for k in (0..depth).rev() {
        let below = &levels[k + 1];
        let level: Vec<f64> = (0..(1usize << k) * atoms)
            .map(|j| {
                let (i, t) = (j / atoms, j % atoms);
                0.5 * (below[2 * i * atoms + t] + below[(2 * i + 1) * atoms + t])
            })
            .collect();
        levels[k] = level;
    }
    levels
}

impl PaleyWalshMartingale {
    pub fn from_levels(atoms: usize, levels: Vec<Vec<f64>>) -> Result<Self, MartingaleError> {
        let depth = levels.len().saturating_sub(1);
        check_depth(depth)?;
        for (k, level) in levels.iter().enumerate() {
            let expected = (1usize << k) * atoms;
            if level.len() != expected {
                return Err(MartingaleError::LengthMismatch {
                    expected,
                    found: level.len(),
                });
            }
        }
        let tree = PaleyWalshMartingale {
            depth,
            atoms,
            levels,
        };
        tree.check()?;
        Ok(tree)
    }

    /// Builds the martingale whose terminal values are `leaves` shifted by
    /// their mean, so that `f_0 = 0`. Leaf `ω` occupies
    /// `leaves[ω * atoms .. (ω + 1) * atoms]`.
    pub fn from_leaves_centered(
        depth: usize,
        atoms: usize,
        mut leaves: Vec<f64>,
    ) -> Result<Self, MartingaleError> {
        check_depth(depth)?;
        let expected = (1usize << depth) * atoms;
        if leaves.len() != expected || atoms == 0 {
            return Err(MartingaleError::LengthMismatch {
                expected,
                found: leaves.len(),
            });
        }
        if let Some(j) = leaves.iter().position(|v| !v.is_finite()) {
            return Err(MartingaleError::NonFinite {
                level: depth,
                node: j / atoms,
            });
        }
        center(&mut leaves, atoms);
        let mut levels = average_up(depth, atoms, leaves);
        levels[0].iter_mut().for_each(|v| *v = 0.0);
        Ok(PaleyWalshMartingale {
            depth,
            atoms,
            levels,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn paths(&self) -> usize {
        1 << self.depth
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn value(&self, k: usize, node: usize) -> &[f64] {
        &self.levels[k][node * self.atoms..(node + 1) * self.atoms]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.levels[self.depth]
    }

    fn scale(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .fold(1.0_f64, |m, v| m.max(v.abs()))
    }

    /// Verifies `f_0 = 0`, finiteness and the averaging property; returns the
    /// largest averaging residual.
    pub fn check(&self) -> Result<f64, MartingaleError> {
        for (k, level) in self.levels.iter().enumerate() {
            if let Some(j) = level.iter().position(|v| !v.is_finite()) {
                return Err(MartingaleError::NonFinite {
                    level: k,
                    node: j / self.atoms,
                });
            }
        }
        let tol = MARTINGALE_TOL * self.scale();
        let root = self.levels[0].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if root > tol {
            return Err(MartingaleError::RootNotZero(root));
        }
        let mut worst = 0.0_f64;
        for k in 0..self.depth {
            for i in 0..1usize << k {
                let (lo, hi) = (self.value(k + 1, 2 * i), self.value(k + 1, 2 * i + 1));
                for (t, v) in self.value(k, i).iter().enumerate() {
                    let residual = (v - 0.5 * (lo[t] + hi[t])).abs();
                    if residual > tol {
                        return Err(MartingaleError::NotMartingale {
                            level: k,
                            node: i,
                            residual,
                        });
                    }
                    worst = worst.max(residual);
                }
            }
        }
        Ok(worst)
    }

    /// `(ϵ*f)_k = Σ_{j≤k} ϵ_j (f_j − f_{j−1})`.
    pub fn transform(&self, signs: &SignSequence) -> Result<Self, MartingaleError> {
        if signs.len() != self.depth {
            return Err(MartingaleError::LengthMismatch {
                expected: self.depth,
                found: signs.len(),
            });
        }
        let a = self.atoms;
        let mut levels = vec![vec![0.0; a]];
        for k in 1..=self.depth {
            let eps = f64::from(signs.signs()[k - 1]);
            let (f_prev, f_cur, g_prev) = (&self.levels[k - 1], &self.levels[k], &levels[k - 1]);
            let level: Vec<f64> = (0..f_cur.len())
                .map(|j| {
                    let parent = (j / a / 2) * a + j % a;
                    g_prev[parent] + eps * (f_cur[j] - f_prev[parent])
                })
                .collect();
            levels.push(level);
        }
        let g = PaleyWalshMartingale {
            depth: self.depth,
            atoms: a,
            levels,
        };
        g.check()?;
        Ok(g)
    }

    /// `c·f`, again a martingale.
    pub fn scaled(&self, c: f64) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| l.iter().map(|v| c * v).collect())
            .collect();
        PaleyWalshMartingale { levels, ..*self }
    }

    /// `‖f_k(node)‖` for every level and node.
    pub fn node_norms(&self, norm: &YNorm) -> Result<Vec<Vec<f64>>, MartingaleError> {
        (0..=self.depth)
            .map(|k| {
                (0..1usize << k)
                    .map(|i| norm.eval(self.value(k, i)))
                    .collect()
            })
            .collect()
    }

    pub fn leaf_norms(&self, norm: &YNorm) -> Result<Vec<f64>, MartingaleError> {
        (0..self.paths())
            .map(|w| norm.eval(self.value(self.depth, w)))
            .collect()
    }

    /// `f*(ω) = max_{k ≤ n} ‖f_k(ω)‖` for every leaf path `ω`.
    pub fn maximal(&self, norm: &YNorm) -> Result<Vec<f64>, MartingaleError> {
        Ok(running_max(&self.node_norms(norm)?))
    }

    /// `(2^{−n} Σ_ω ‖f_n(ω)‖^p)^{1/p}`.
    pub fn lp_omega_norm(&self, p: f64, norm: &YNorm) -> Result<f64, MartingaleError> {
        lp_mean(&self.leaf_norms(norm)?, p)
    }

    /// The scalar process `|f_k(t)|` on the same tree.
    pub fn abs_fiber(&self, t: usize) -> Result<ScalarTree, MartingaleError> {
        if t >= self.atoms {
            return Err(MartingaleError::AtomOutOfRange {
                atom: t,
                atoms: self.atoms,
            });
        }
        let levels = self
            .levels
            .iter()
            .map(|level| {
                level
                    .iter()
                    .skip(t)
                    .step_by(self.atoms)
                    .map(|v| v.abs())
                    .collect()
            })
            .collect();
        Ok(ScalarTree {
            depth: self.depth,
            levels,
        })
    }
}

pub(crate) fn center(leaves: &mut [f64], atoms: usize) {
    let paths = leaves.len() / atoms;
    for t in 0..atoms {
        let mean = leaves.iter().skip(t).step_by(atoms).sum::<f64>() / paths as f64;
        leaves
            .iter_mut()
            .skip(t)
            .step_by(atoms)
            .for_each(|v| *v -= mean);
    }
}

pub(crate) fn lp_mean(values: &[f64], p: f64) -> Result<f64, MartingaleError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(MartingaleError::InvalidExponent(p));
    }
    let mean = values.iter().map(|v| v.powf(p)).sum::<f64>() / values.len() as f64;
    Ok(mean.powf(1.0 / p))
}

fn running_max(levels: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = levels[0].clone();
    for level in &levels[1..] {
        acc = level
            .iter()
            .enumerate()
            .map(|(i, v)| v.max(acc[i / 2]))
            .collect();
    }
    acc
}

/// Real-valued process on the dyadic tree, one value per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarTree {
    depth: usize,
    levels: Vec<Vec<f64>>,
}

impl ScalarTree {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self, MartingaleError> {
        let depth = levels.len().saturating_sub(1);
        check_depth(depth)?;
        for (k, level) in levels.iter().enumerate() {
            if level.len() != 1 << k {
                return Err(MartingaleError::LengthMismatch {
                    expected: 1 << k,
                    found: level.len(),
                });
            }
        }
        Ok(ScalarTree { depth, levels })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.levels[self.depth]
    }

    /// Checks `f ≥ 0` and `f(node) ≤ mean of children`.
    pub fn check_nonnegative_submartingale(&self) -> Result<(), MartingaleError> {
        let scale = self
            .levels
            .iter()
            .flatten()
            .fold(1.0_f64, |m, v| m.max(v.abs()));
        let tol = MARTINGALE_TOL * scale;
        for (k, level) in self.levels.iter().enumerate() {
            for (i, &v) in level.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(MartingaleError::NegativeValue {
                        level: k,
                        node: i,
                        value: v,
                    });
                }
                if k < self.depth {
                    let below = &self.levels[k + 1];
                    let excess = v - 0.5 * (below[2 * i] + below[2 * i + 1]);
                    if excess > tol {
                        return Err(MartingaleError::NotSubmartingale {
                            level: k,
                            node: i,
                            excess,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Pathwise running maximum.
    pub fn maximal(&self) -> Vec<f64> {
        running_max(&self.levels)
    }
}
