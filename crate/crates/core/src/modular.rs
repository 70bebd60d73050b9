//! Finite atomic measure spaces, the Musielak-Orlicz modular and the two
//! norms built on it.
//!
//! Every integral over `T` is an exact weighted sum over atoms. The
//! Luxemburg norm `inf{λ > 0 : ∫ Φ(t, |f|/λ) dμ ≤ 1}` is found by monotone
//! bisection; the Amemiya norm `inf_λ λ⁻¹ (1 + ∫ Φ(t, λ|f|) dμ)` by
//! golden-section search over `log λ`. The two satisfy
//! `‖f‖_Lux ≤ ‖f‖_Am ≤ 2‖f‖_Lux`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solve::{self, Tolerance, BRACKET_CAP_LOG2};
use crate::young::{ExtReal, YoungError, YoungFunction};

/// Relative bracket width at which Luxemburg bisection stops.
pub const LUXEMBURG_REL_TOL: f64 = 1e-12;
/// Width in `log λ` at which the Amemiya golden-section search stops.
pub const AMEMIYA_LOG_TOL: f64 = 1e-10;
/// Slack allowed on the `[1, 2]` equivalence contract.
pub const EQUIVALENCE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModularError {
    #[error(transparent)]
    Young(#[from] YoungError),
    #[error("scale λ must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("atom {atom} has invalid weight {weight}; weights must be positive and finite")]
    InvalidWeight { atom: usize, weight: f64 },
    #[error("measure space needs at least one atom")]
    EmptySpace,
    #[error("duplicate atom id {0:?}")]
    DuplicateAtom(String),
    #[error("expected {expected} atom values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("function value at atom {atom} is not finite")]
    NonFiniteValue { atom: usize },
    #[error("the zero function has no norm ratio")]
    ZeroFunction,
    #[error("Amemiya/Luxemburg ratio {ratio} outside [1, 2]")]
    EquivalenceViolated { ratio: f64 },
    #[error("modular stays infinite for every λ up to the bracket cap")]
    Unbounded,
    #[error("csv: {0}")]
    Csv(String),
}

/// Finite list of atoms with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasureSpace {
    ids: Vec<String>,
    weights: Vec<f64>,
}

impl AtomicMeasureSpace {
    pub fn new(ids: Vec<String>, weights: Vec<f64>) -> Result<Self, ModularError> {
        if ids.is_empty() {
            return Err(ModularError::EmptySpace);
        }
        if ids.len() != weights.len() {
            return Err(ModularError::LengthMismatch {
                expected: ids.len(),
                found: weights.len(),
            });
        }
        if let Some(atom) = weights.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(ModularError::InvalidWeight {
                atom,
                weight: weights[atom],
            });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(ModularError::DuplicateAtom(dup.clone()));
        }
        Ok(AtomicMeasureSpace { ids, weights })
    }

    /// `n` atoms named `0..n`, each of mass `weight`.
    pub fn uniform(n: usize, weight: f64) -> Result<Self, ModularError> {
        Self::new((0..n).map(|i| i.to_string()).collect(), vec![weight; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫ g dμ` for per-atom values `g`.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.len());
        g.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// One real value per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleFunction(Vec<f64>);

impl SimpleFunction {
    pub fn new(values: Vec<f64>) -> Self {
        SimpleFunction(values)
    }

    pub fn zeros(n: usize) -> Self {
        SimpleFunction(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn sup_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> SimpleFunction {
        SimpleFunction(self.0.iter().map(|v| c * v).collect())
    }

    pub fn plus(&self, other: &SimpleFunction) -> SimpleFunction {
        SimpleFunction(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<f64>> for SimpleFunction {
    fn from(v: Vec<f64>) -> Self {
        SimpleFunction(v)
    }
}

/// Solver outcome for a norm computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: usize,
    /// Final relative bracket width (Luxemburg) or width in `log λ` (Amemiya).
    pub residual: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
}

impl NormResult {
    fn zero() -> Self {
        NormResult {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
            bracket_lo: 0.0,
            bracket_hi: 0.0,
        }
    }
}

/// `L^Φ(T)` over an atomic measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct MusielakOrlicz {
    space: AtomicMeasureSpace,
    phi: YoungFunction,
}

impl MusielakOrlicz {
    pub fn new(space: AtomicMeasureSpace, phi: YoungFunction) -> Result<Self, ModularError> {
        if space.len() != phi.atoms() {
            return Err(ModularError::LengthMismatch {
                expected: space.len(),
                found: phi.atoms(),
            });
        }
        Ok(MusielakOrlicz { space, phi })
    }

    pub fn space(&self) -> &AtomicMeasureSpace {
        &self.space
    }

    pub fn phi(&self) -> &YoungFunction {
        &self.phi
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    fn check(&self, values: &[f64]) -> Result<(), ModularError> {
        if values.len() != self.atoms() {
            return Err(ModularError::LengthMismatch {
                expected: self.atoms(),
                found: values.len(),
            });
        }
        if let Some(atom) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModularError::NonFiniteValue { atom });
        }
        Ok(())
    }

    /// `Σ Φ(t, c·|f(t)|) μ(t)`; unchecked.
    fn integral_at(&self, values: &[f64], c: f64) -> ExtReal {
        values
            .iter()
            .zip(self.space.weights())
            .enumerate()
            .map(|(t, (v, w))| {
                self.phi
                    .eval(t, c * v.abs())
                    .expect("atom index and argument validated")
                    .scale(*w)
            })
            .sum()
    }

    /// `∫ Φ(t, |f(t)|/λ) dμ(t)`.
    pub fn modular(&self, f: &SimpleFunction, lambda: f64) -> Result<ExtReal, ModularError> {
        self.check(f.values())?;
        if !(lambda > 0.0) {
            return Err(ModularError::NonPositiveScale(lambda));
        }
        Ok(self.integral_at(f.values(), 1.0 / lambda))
    }

    pub fn luxemburg_norm(&self, f: &SimpleFunction) -> Result<NormResult, ModularError> {
        self.check(f.values())?;
        self.luxemburg_values(f.values())
    }

    pub(crate) fn luxemburg_values(&self, values: &[f64]) -> Result<NormResult, ModularError> {
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(NormResult::zero());
        }
        let admissible = |lambda: f64| self.integral_at(values, 1.0 / lambda) <= 1.0;
        let mut iterations = 0;
        let (lo, hi) = if admissible(scale) {
            let mut hi = scale;
            let mut lo = 0.5 * scale;
            while admissible(lo) {
                hi = lo;
                lo *= 0.5;
                iterations += 1;
                if lo < f64::MIN_POSITIVE {
                    return Ok(NormResult {
                        value: hi,
                        iterations,
                        ..NormResult::zero()
                    });
                }
            }
            (lo, hi)
        } else {
            let cap = scale * 2f64.powi(BRACKET_CAP_LOG2);
            let mut lo = scale;
            let mut hi = 2.0 * scale;
            while !admissible(hi) {
                if hi >= cap {
                    return Err(ModularError::Unbounded);
                }
                lo = hi;
                hi *= 2.0;
                iterations += 1;
            }
            (lo, hi)
        };
        let b = solve::bisect(admissible, lo, hi, Tolerance::Relative(LUXEMBURG_REL_TOL));
        Ok(NormResult {
            value: b.hi,
            iterations: iterations + b.iterations,
            residual: (b.hi - b.lo) / b.hi,
            bracket_lo: b.lo,
            bracket_hi: b.hi,
        })
    }

    /// Amemiya objective `λ⁻¹ (1 + ∫ Φ(t, λ|f|) dμ)`.
    pub fn amemiya_objective(
        &self,
        f: &SimpleFunction,
        lambda: f64,
    ) -> Result<ExtReal, ModularError> {
        self.check(f.values())?;
        if !(lambda > 0.0) {
            return Err(ModularError::NonPositiveScale(lambda));
        }
        Ok((self.integral_at(f.values(), lambda) + 1.0).scale(1.0 / lambda))
    }

    pub fn amemiya_norm(&self, f: &SimpleFunction) -> Result<NormResult, ModularError> {
        self.check(f.values())?;
        let values = f.values();
        let scale = f.sup_abs();
        if scale == 0.0 {
            return Ok(NormResult::zero());
        }
        // Quasiconvex in u = log λ (it is the perspective of the modular in 1/λ).
        let objective = |u: f64| {
            let lambda = u.exp();
            (self.integral_at(values, lambda) + 1.0).to_f64() / lambda
        };
        let step = std::f64::consts::LN_2;
        let max_steps = BRACKET_CAP_LOG2 as usize;
        let mut iterations = 0;

        let mut mid = -scale.ln();
        let mut f_mid = objective(mid);
        while f_mid.is_infinite() {
            mid -= step;
            f_mid = objective(mid);
            iterations += 1;
            if iterations > max_steps {
                return Err(ModularError::Unbounded);
            }
        }
        let (mut lo, mut hi) = (mid - step, mid + step);
        let (mut f_lo, mut f_hi) = (objective(lo), objective(hi));
        let mut expansions = 0;
        if f_hi < f_mid {
            while f_hi < f_mid {
                if expansions >= max_steps {
                    // Infimum approached as λ → ∞.
                    return Ok(NormResult {
                        value: f_hi,
                        iterations: iterations + expansions,
                        residual: 0.0,
                        bracket_lo: mid.exp(),
                        bracket_hi: hi.exp(),
                    });
                }
                lo = mid;
                mid = hi;
                f_mid = f_hi;
                hi += step;
                f_hi = objective(hi);
                expansions += 1;
            }
        } else {
            while f_lo < f_mid {
                if expansions >= max_steps {
                    return Err(ModularError::Unbounded);
                }
                hi = mid;
                mid = lo;
                f_mid = f_lo;
                lo -= step;
                f_lo = objective(lo);
                expansions += 1;
            }
        }
        let r = solve::golden_min(objective, lo, hi, Tolerance::Absolute(AMEMIYA_LOG_TOL));
        Ok(NormResult {
            value: r.value.min(f_mid),
            iterations: iterations + expansions + r.iterations,
            residual: r.hi - r.lo,
            bracket_lo: r.lo.exp(),
            bracket_hi: r.hi.exp(),
        })
    }

    /// `‖f‖_Am / ‖f‖_Lux`, required to lie in `[1, 2]` up to
    /// [`EQUIVALENCE_SLACK`].
    pub fn check_equivalence(&self, f: &SimpleFunction) -> Result<f64, ModularError> {
        self.check(f.values())?;
        if f.is_zero() {
            return Err(ModularError::ZeroFunction);
        }
        let ratio = self.amemiya_norm(f)?.value / self.luxemburg_norm(f)?.value;
        if (1.0 - EQUIVALENCE_SLACK..=2.0 + EQUIVALENCE_SLACK).contains(&ratio) {
            Ok(ratio)
        } else {
            Err(ModularError::EquivalenceViolated { ratio })
        }
    }
}

/// `L^{p(·)}` data: `Φ(t, λ) = λ^{p(t)}` with both complements.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLebesgue {
    pub space: MusielakOrlicz,
    pub phi: YoungFunction,
    /// Numerical Legendre transform of `phi`.
    pub psi_exact: YoungFunction,
    /// Closed form `x^{p'(t)}` (indicator branch where `p(t) = 1`).
    pub psi_paper: YoungFunction,
    pub p_plus: f64,
    pub p_minus: f64,
}

pub fn variable_lebesgue(
    space: &AtomicMeasureSpace,
    p: &[f64],
) -> Result<VariableLebesgue, ModularError> {
    if p.len() != space.len() {
        return Err(ModularError::LengthMismatch {
            expected: space.len(),
            found: p.len(),
        });
    }
    let phi = YoungFunction::variable_exponent(p.to_vec())?;
    let psi_paper = YoungFunction::holder_dual(p.to_vec())?;
    let p_plus = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_minus = p.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(VariableLebesgue {
        space: MusielakOrlicz::new(space.clone(), phi.clone())?,
        psi_exact: phi.conjugate(),
        phi,
        psi_paper,
        p_plus,
        p_minus,
    })
}

/// A space plus named per-atom columns, as read from
/// `atom_id,weight,<col>...` CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomTable {
    pub space: AtomicMeasureSpace,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl AtomTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.0 == name)
            .map(|c| c.1.as_slice())
    }
}

pub fn read_atom_table<R: Read>(reader: R) -> Result<AtomTable, ModularError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| ModularError::Csv(e.to_string()))?
        .clone();
    if headers.len() < 2 || &headers[0] != "atom_id" || &headers[1] != "weight" {
        return Err(ModularError::Csv(format!(
            "header must start with atom_id,weight; got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_owned).collect();
    let mut ids = Vec::new();
    let mut weights = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| ModularError::Csv(format!("line {line}: {e}")))?;
        let num = |i: usize| -> Result<f64, ModularError> {
            record[i].parse::<f64>().map_err(|_| {
                ModularError::Csv(format!(
                    "line {line}, column {:?}: {:?} is not a number",
                    &headers[i], &record[i]
                ))
            })
        };
        ids.push(record[0].to_owned());
        weights.push(num(1)?);
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(num(j + 2)?);
        }
    }
    let space = AtomicMeasureSpace::new(ids, weights)?;
    Ok(AtomTable {
        space,
        columns: names.into_iter().zip(cols).collect(),
    })
}

pub fn write_atom_table<W: Write>(writer: W, table: &AtomTable) -> Result<(), ModularError> {
    let csv_err = |e: csv::Error| ModularError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["atom_id".to_owned(), "weight".to_owned()];
    header.extend(table.columns.iter().map(|c| c.0.clone()));
    w.write_record(&header).map_err(csv_err)?;
    for (t, (id, weight)) in table
        .space
        .ids()
        .iter()
        .zip(table.space.weights())
        .enumerate()
    {
        let mut row = vec![id.clone(), weight.to_string()];
        row.extend(table.columns.iter().map(|c| c.1[t].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ModularError::Csv(e.to_string()))
}
