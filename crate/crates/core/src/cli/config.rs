//! Flat TOML experiment configuration.
//!
//! ```toml
//! space = "space.csv"          # atom_id,weight[,p]
//! family = "variable_exponent" # exponents default to the space's p column
//! grid_min = 0.01
//! grid_max = 100.0
//! grid_count = 60
//! grid_spacing = "log"
//! depth = 4
//! p = 2.0
//! budget = "4x50"
//! seed = 7
//! out = "out"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::martingale::{Budget, MAX_DEPTH};
use crate::modular::{read_atom_table, AtomicMeasureSpace};
use crate::solve;
use crate::young::{Delta2Mode, FamilySpec, YoungFunction};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    space: String,
    family: String,
    exponent: Option<f64>,
    exponents: Option<Vec<f64>>,
    table: Option<Vec<Vec<[f64; 2]>>>,
    table_tail: Option<String>,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_count: Option<usize>,
    grid_spacing: Option<String>,
    delta2_offset_k: Option<f64>,
    depth: Option<usize>,
    p: Option<f64>,
    budget: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
    function: Option<String>,
    doob_trials: Option<usize>,
    doob_q: Option<f64>,
    doob_c: Option<f64>,
    main_trials: Option<usize>,
    zeta00: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        solve::grid(self.min, self.max, self.count, self.log)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub space: PathBuf,
    pub family: FamilySpec,
    pub grid: GridSpec,
    pub delta2_offset_k: Option<f64>,
    pub depth: usize,
    pub p: f64,
    pub budget: Budget,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub function: Option<PathBuf>,
    pub doob_trials: usize,
    pub doob_q: Option<f64>,
    pub doob_c: f64,
    pub main_trials: usize,
    pub zeta00: f64,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Usage(m) => usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| usage(e.to_string()))?;
        let resolve = |p: &str| base.join(p);
        let grid = GridSpec {
            min: raw.grid_min.unwrap_or(0.01),
            max: raw.grid_max.unwrap_or(100.0),
            count: raw.grid_count.unwrap_or(60),
            log: match raw.grid_spacing.as_deref() {
                None | Some("log") => true,
                Some("linear") => false,
                Some(other) => {
                    return Err(usage(format!(
                        "field grid_spacing: expected \"log\" or \"linear\", got {other:?}"
                    )))
                }
            },
        };
        if !(grid.min > 0.0 && grid.max > grid.min && grid.max.is_finite()) || grid.count < 2 {
            return Err(usage(format!(
                "fields grid_min/grid_max/grid_count: need 0 < grid_min < grid_max and grid_count ≥ 2, got {}, {}, {}",
                grid.min, grid.max, grid.count
            )));
        }
        let budget = match &raw.budget {
            Some(b) => b.parse().map_err(|e| usage(format!("field budget: {e}")))?,
            None => Budget {
                restarts: 4,
                steps: 50,
            },
        };
        let cfg = ExperimentConfig {
            space: resolve(&raw.space),
            family: FamilySpec {
                family: raw.family,
                exponent: raw.exponent,
                exponents: raw.exponents,
                table: raw.table,
                table_tail: raw.table_tail,
            },
            grid,
            delta2_offset_k: raw.delta2_offset_k,
            depth: raw.depth.unwrap_or(4),
            p: raw.p.unwrap_or(2.0),
            budget,
            seed: raw.seed,
            out: resolve(raw.out.as_deref().unwrap_or("out")),
            function: raw.function.as_deref().map(resolve),
            doob_trials: raw.doob_trials.unwrap_or(200),
            doob_q: raw.doob_q,
            doob_c: raw.doob_c.unwrap_or(0.0),
            main_trials: raw.main_trials.unwrap_or(100),
            zeta00: raw.zeta00.unwrap_or(crate::bounds::SCALAR_ZETA00),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return Err(usage(format!(
                "field depth: must lie in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(usage(format!("field p: must exceed 1, got {}", self.p)));
        }
        if self.budget.restarts == 0 || self.budget.steps == 0 {
            return Err(usage("field budget: restarts and steps must be positive"));
        }
        if !(self.zeta00 > 0.0 && self.zeta00 <= 1.0) {
            return Err(usage(format!(
                "field zeta00: must lie in (0, 1], got {}",
                self.zeta00
            )));
        }
        if let Some(k) = self.delta2_offset_k {
            if !(k > 1.0 && k.is_finite()) {
                return Err(usage(format!(
                    "field delta2_offset_k: must exceed 1, got {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn delta2_mode(&self) -> Delta2Mode {
        match self.delta2_offset_k {
            Some(k) => Delta2Mode::WithOffset { k },
            None => Delta2Mode::RatioOnly,
        }
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| usage("field seed: required by this command (or pass --seed)"))
    }

    /// Reads the space file and builds `Φ`.
    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let file = fs::File::open(&self.space).map_err(|e| {
            usage(format!(
                "field space: cannot open {}: {e}",
                self.space.display()
            ))
        })?;
        let table = read_atom_table(file)
            .map_err(|e| CliError::Schema(format!("{}: {e}", self.space.display())))?;
        let p_column = table.column("p").map(<[f64]>::to_vec);
        let phi = self
            .family
            .build(table.space.len(), p_column.as_deref())
            .map_err(|e| usage(format!("family: {e}")))?;
        Ok(Experiment {
            space: table.space,
            phi,
            p_column,
            grid: self.grid.points(),
        })
    }
}

pub struct Experiment {
    pub space: AtomicMeasureSpace,
    pub phi: YoungFunction,
    pub p_column: Option<Vec<f64>>,
    pub grid: Vec<f64>,
}

impl Experiment {
    /// Per-atom exponents when `Φ = λ^{p(t)}`.
    pub fn exponents(&self) -> Option<Vec<f64>> {
        (0..self.phi.atoms())
            .map(|t| match self.phi.family() {
                crate::young::Family::Power { .. }
                | crate::young::Family::VariableExponent { .. } => self.phi.homogeneity_degree(t),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let cfg = ExperimentConfig::parse(
            "space = \"s.csv\"\nfamily = \"power\"\nexponent = 2.0\nseed = 3\nbudget = \"2x5\"\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(cfg.space, Path::new("/cfg/s.csv"));
        assert_eq!(cfg.out, Path::new("/cfg/out"));
        assert_eq!(
            cfg.budget,
            Budget {
                restarts: 2,
                steps: 5
            }
        );
        assert_eq!(cfg.require_seed().unwrap(), 3);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = ExperimentConfig::parse(
            "space = \"s.csv\"\nfamily = \"power\"\ncolour = 1\n",
            Path::new("."),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("line 3") && err.contains("colour"), "{err}");
        let err = ExperimentConfig::parse(
            "space = \"s.csv\"\nfamily = \"power\"\ndepth = 12\n",
            Path::new("."),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("depth"), "{err}");
        let err = ExperimentConfig::parse(
            "space = \"s.csv\"\nfamily = \"power\"\nbudget = \"0x3\"\n",
            Path::new("."),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("budget"), "{err}");
        assert!(ExperimentConfig::parse("family = \"power\"\n", Path::new(".")).is_err());
    }
}
