use std::fs;

use super::{create_dir, num, write_csv, CliError, ExperimentConfig};
use crate::modular::{MusielakOrlicz, SimpleFunction};
use crate::solve::BRACKET_CAP_LOG2;
use crate::young::{complement_derivative_bound, estimate_delta2, ExtReal, YoungFunction};

const BICONJUGATE_REL_TOL: f64 = 1e-6;
const MARGIN_REL_TOL: f64 = 1e-9;

fn ext(v: ExtReal) -> String {
    v.to_string()
}

/// Writes `conjugate.csv`, `delta2.csv`, `young_margin.csv` and
/// `complement.csv`.
pub(super) fn cmd_young(cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let exp = cfg.experiment()?;
    let phi = &exp.phi;
    let psi = phi.conjugate();
    let ids = exp.space.ids();
    create_dir(&cfg.out)?;
    let mut violations = Vec::new();
    let cap = 2f64.powi(BRACKET_CAP_LOG2);

    let mut rows = Vec::new();
    for (t, id) in ids.iter().enumerate() {
        for &lambda in &exp.grid {
            let value = phi.eval(t, lambda)?;
            let slope = phi.right_derivative(t, lambda).ok();
            let conj = psi.eval(t, lambda)?;
            let conj_slope = psi.right_derivative(t, lambda).ok();
            let (bi, rel) = match (value, slope) {
                (ExtReal::Finite(v), Some(s)) if s < cap => {
                    let bi = psi.conjugate_at(t, lambda)?;
                    let rel = bi
                        .finite()
                        .map(|b| if v > 0.0 { (b - v).abs() / v } else { b.abs() });
                    (Some(bi), rel)
                }
                _ => (None, None),
            };
            if let Some(r) = rel {
                if r > BICONJUGATE_REL_TOL {
                    violations.push(format!(
                        "biconjugate of atom {id} at λ={lambda} off by {r:e}"
                    ));
                }
            }
            rows.push(vec![
                id.clone(),
                lambda.to_string(),
                ext(value),
                num(slope),
                ext(conj),
                num(conj_slope),
                bi.map(ext).unwrap_or_default(),
                num(rel),
            ]);
        }
    }
    write_csv(
        &cfg.out.join("conjugate.csv"),
        &[
            "atom_id",
            "lambda",
            "phi",
            "phi_prime",
            "psi",
            "psi_prime",
            "biconjugate",
            "biconjugate_rel_err",
        ],
        &rows,
    )?;

    let mode = cfg.delta2_mode();
    let cert_phi = estimate_delta2(phi, &exp.space, &exp.grid, mode)?;
    let cert_psi = estimate_delta2(&psi, &exp.space, &exp.grid, mode)?;
    let rows: Vec<Vec<String>> = [("phi", &cert_phi), ("psi", &cert_psi)]
        .iter()
        .map(|(name, c)| {
            let r = c.to_record();
            vec![
                name.to_string(),
                r.certified.to_string(),
                r.k.to_string(),
                r.h_l1_norm.to_string(),
                r.grid_min.to_string(),
                r.grid_max.to_string(),
                r.grid_count.to_string(),
                r.max_violation.to_string(),
                r.failure.unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out.join("delta2.csv"),
        &[
            "function",
            "certified",
            "K",
            "h_l1",
            "grid_min",
            "grid_max",
            "grid_count",
            "max_violation",
            "failure",
        ],
        &rows,
    )?;

    let mut rows = Vec::new();
    for (t, id) in ids.iter().enumerate() {
        let psi_at: Vec<ExtReal> = exp
            .grid
            .iter()
            .map(|&y| psi.eval(t, y))
            .collect::<Result<_, _>>()?;
        let mut min_rel = f64::INFINITY;
        let mut pairs = 0usize;
        for &x in &exp.grid {
            let Some(fx) = phi.eval(t, x)?.finite() else {
                continue;
            };
            for (&y, py) in exp.grid.iter().zip(&psi_at) {
                let Some(py) = py.finite() else { continue };
                pairs += 1;
                min_rel = min_rel.min((fx + py - x * y) / (x * y).max(1.0));
            }
        }
        let mut max_gap = 0.0_f64;
        for &x in &exp.grid {
            let (Some(fx), Ok(y)) = (phi.eval(t, x)?.finite(), phi.right_derivative(t, x)) else {
                continue;
            };
            if let Some(py) = psi.eval(t, y)?.finite() {
                max_gap = max_gap.max((fx + py - x * y).abs() / (x * y).max(1.0));
            }
        }
        if min_rel < -MARGIN_REL_TOL {
            violations.push(format!(
                "Young's inequality fails at atom {id} (relative margin {min_rel:e})"
            ));
        }
        rows.push(vec![
            id.clone(),
            pairs.to_string(),
            min_rel.to_string(),
            max_gap.to_string(),
        ]);
    }
    write_csv(
        &cfg.out.join("young_margin.csv"),
        &["atom_id", "pairs", "min_rel_margin", "max_equality_gap"],
        &rows,
    )?;

    let row = if cert_phi.is_certified() {
        let b = complement_derivative_bound(phi, &psi, &cert_phi, &exp.grid)?;
        if b.proof_margin < -MARGIN_REL_TOL {
            violations.push(format!(
                "complement bound fails (margin {})",
                b.proof_margin
            ));
        }
        vec![
            cert_phi.k.to_string(),
            b.proof_margin.to_string(),
            b.stated_margin.to_string(),
            ids[b.worst_atom].clone(),
            b.worst_x.to_string(),
            b.points.to_string(),
        ]
    } else {
        vec![String::new(); 6]
    };
    write_csv(
        &cfg.out.join("complement.csv"),
        &[
            "K_phi",
            "proof_margin",
            "stated_margin",
            "worst_atom_id",
            "worst_lambda",
            "points",
        ],
        &[row],
    )?;

    if violations.is_empty() {
        Ok(0)
    } else {
        Err(CliError::Invariant(violations.join("; ")))
    }
}

/// Reads `atom_id,<name>...` with atoms in the order of the space file.
fn read_functions(
    path: &std::path::Path,
    ids: &[String],
) -> Result<Vec<(String, SimpleFunction)>, CliError> {
    let schema = |m: String| CliError::Schema(format!("{}: {m}", path.display()));
    let file = fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("field function: {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "atom_id" {
        return Err(schema("header must be atom_id,<function names>".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); names.len()];
    let mut seen = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| schema(format!("line {line}: {e}")))?;
        seen.push(record[0].to_owned());
        for (j, col) in columns.iter_mut().enumerate() {
            let v: f64 = record[j + 1].parse().map_err(|_| {
                schema(format!("line {line}: {:?} is not a number", &record[j + 1]))
            })?;
            col.push(v);
        }
    }
    if seen != ids {
        return Err(schema(format!(
            "atom ids {seen:?} do not match the space atoms {ids:?}"
        )));
    }
    Ok(names
        .into_iter()
        .zip(columns.into_iter().map(SimpleFunction::new))
        .collect())
}

fn constant_exponent(phi: &YoungFunction) -> Option<f64> {
    let p0 = phi.homogeneity_degree(0)?;
    let same = (1..phi.atoms()).all(|t| phi.homogeneity_degree(t) == Some(p0));
    matches!(
        phi.family(),
        crate::young::Family::Power { .. } | crate::young::Family::VariableExponent { .. }
    )
    .then_some(p0)
    .filter(|_| same)
}

/// Writes `norms.csv`.
pub(super) fn cmd_norm(cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let path = cfg
        .function
        .as_ref()
        .ok_or_else(|| CliError::Usage("field function: required by `norm`".into()))?;
    let exp = cfg.experiment()?;
    let functions = read_functions(path, exp.space.ids())?;
    let classical_p = constant_exponent(&exp.phi);
    let weights = exp.space.weights().to_vec();
    let mo = MusielakOrlicz::new(exp.space, exp.phi)?;
    create_dir(&cfg.out)?;
    let mut violations = Vec::new();
    let mut rows = Vec::new();
    for (name, f) in &functions {
        let lux = mo.luxemburg_norm(f)?;
        let am = mo.amemiya_norm(f)?;
        let ratio = (!f.is_zero()).then(|| am.value / lux.value);
        if let Some(r) = ratio {
            if !(1.0 - 1e-9..=2.0 + 1e-9).contains(&r) {
                violations.push(format!("{name}: Amemiya/Luxemburg ratio {r}"));
            }
        }
        let classical = classical_p.map(|p| {
            f.values()
                .iter()
                .zip(&weights)
                .map(|(v, w)| v.abs().powf(p) * w)
                .sum::<f64>()
                .powf(1.0 / p)
        });
        if let Some(c) = classical {
            if (lux.value - c).abs() > 1e-10 * c.max(f64::MIN_POSITIVE) {
                violations.push(format!(
                    "{name}: Luxemburg {} differs from classical {c}",
                    lux.value
                ));
            }
        }
        rows.push(vec![
            name.clone(),
            lux.value.to_string(),
            am.value.to_string(),
            num(ratio),
            lux.iterations.to_string(),
            lux.residual.to_string(),
            am.iterations.to_string(),
            am.residual.to_string(),
            num(classical),
        ]);
    }
    write_csv(
        &cfg.out.join("norms.csv"),
        &[
            "function",
            "luxemburg",
            "amemiya",
            "ratio",
            "luxemburg_iterations",
            "luxemburg_residual",
            "amemiya_iterations",
            "amemiya_residual",
            "classical_lp",
        ],
        &rows,
    )?;
    if violations.is_empty() {
        Ok(0)
    } else {
        Err(CliError::Invariant(violations.join("; ")))
    }
}
