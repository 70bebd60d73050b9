use serde::{Deserialize, Serialize};

use super::{PiecewiseLinear, Tail, YoungError, YoungFunction};

/// Key-value description of a Young-function family.
///
/// ```toml
/// family = "variable_exponent"
/// exponents = [1.5, 3.0, 3.0, 1.5]
/// ```
///
/// Recognised families: `power` (`exponent`), `variable_exponent`
/// (`exponents`, one per atom), `exp_minus_one`, `holder_dual` (`exponents`)
/// and `tabulated` (`table`: per atom a list of `[x, Φ(x)]` knots starting at
/// `[0, 0]`, plus `table_tail = "linear" | "infinite"`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_tail: Option<String>,
}

impl FamilySpec {
    pub const KEYS: [&'static str; 5] = ["family", "exponent", "exponents", "table", "table_tail"];

    pub fn parse(text: &str) -> Result<Self, YoungError> {
        toml::from_str(text).map_err(|e| YoungError::Spec(e.to_string()))
    }

    /// Builds the function on `atoms` atoms. Per-atom exponents not given in
    /// the spec are taken from `fallback_exponents` (e.g. a `p` column of the
    /// space file).
    pub fn build(
        &self,
        atoms: usize,
        fallback_exponents: Option<&[f64]>,
    ) -> Result<YoungFunction, YoungError> {
        let exponents = || -> Result<Vec<f64>, YoungError> {
            let p = match (&self.exponents, fallback_exponents) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => p.to_vec(),
                (None, None) => {
                    return Err(YoungError::Spec(format!(
                        "family {:?} needs `exponents` (or a `p` column in the space file)",
                        self.family
                    )))
                }
            };
            if p.len() != atoms {
                return Err(YoungError::AtomMismatch {
                    expected: atoms,
                    found: p.len(),
                });
            }
            Ok(p)
        };
        match self.family.as_str() {
            "power" => {
                let p = self
                    .exponent
                    .ok_or_else(|| YoungError::Spec("family \"power\" needs `exponent`".into()))?;
                YoungFunction::power(p, atoms)
            }
            "variable_exponent" => YoungFunction::variable_exponent(exponents()?),
            "holder_dual" => YoungFunction::holder_dual(exponents()?),
            "exp_minus_one" => Ok(YoungFunction::exp_minus_one(atoms)),
            "tabulated" => {
                let tables = self
                    .table
                    .as_ref()
                    .ok_or_else(|| YoungError::Spec("family \"tabulated\" needs `table`".into()))?;
                let tail = match self.table_tail.as_deref() {
                    None | Some("linear") => Tail::Linear,
                    Some("infinite") => Tail::Infinite,
                    Some(other) => {
                        return Err(YoungError::Spec(format!(
                            "table_tail must be \"linear\" or \"infinite\", got {other:?}"
                        )))
                    }
                };
                let tables = match tables.len() {
                    1 => vec![tables[0].clone(); atoms],
                    n if n == atoms => tables.clone(),
                    n => {
                        return Err(YoungError::AtomMismatch {
                            expected: atoms,
                            found: n,
                        })
                    }
                };
                let tables = tables
                    .iter()
                    .map(|knots| {
                        let knots: Vec<(f64, f64)> = knots.iter().map(|k| (k[0], k[1])).collect();
                        PiecewiseLinear::new(&knots, tail)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(YoungFunction::tabulated(tables))
            }
            other => Err(YoungError::Spec(format!("unknown family {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_each_family() {
        let spec = FamilySpec::parse("family = \"power\"\nexponent = 2.0\n").unwrap();
        let f = spec.build(3, None).unwrap();
        assert_eq!(f.eval(2, 3.0).unwrap(), 9.0);

        let spec = FamilySpec::parse("family = \"variable_exponent\"").unwrap();
        assert!(spec.build(2, None).is_err());
        let f = spec.build(2, Some(&[1.5, 3.0])).unwrap();
        assert_eq!(f.eval(1, 2.0).unwrap(), 8.0);

        let spec = FamilySpec::parse(
            "family = \"tabulated\"\ntable = [[[0.0, 0.0], [1.0, 1.0], [2.0, 4.0]]]\n",
        )
        .unwrap();
        let f = spec.build(2, None).unwrap();
        assert_eq!(f.eval(1, 1.5).unwrap(), 2.5);

        assert!(FamilySpec::parse("family = \"cosh\"")
            .unwrap()
            .build(1, None)
            .is_err());
        assert!(FamilySpec::parse("family = ").is_err());
    }
}
