use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::mart::write_umd;
use super::{create_dir, write_file, write_json, CliError, ExperimentConfig, SCHEMA_VERSION};
use crate::bounds::{self, certify_ratio, Certification, ConstantsReport};
use crate::martingale::{estimate_umd, SignSequence, YNorm};
use crate::modular::MusielakOrlicz;
use crate::young::{estimate_delta2, Delta2Record};

/// Relative agreement required between grid certificates and the closed-form
/// `2^{p₊}`, `2^{p₋'}`.
const ROUND_TRIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EstimateSummary {
    best_ratio: f64,
    best_signs: SignSequence,
    restarts: usize,
    steps: usize,
    seed: u64,
    depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Payload {
    schema_version: u32,
    atoms: Vec<String>,
    family: String,
    p: f64,
    delta2_phi: Delta2Record,
    delta2_psi: Delta2Record,
    hypotheses: Option<String>,
    constants: Option<ConstantsReport>,
    estimate: Option<EstimateSummary>,
    certification: Option<Certification>,
}

fn digest(payload: &Value) -> Result<String, CliError> {
    let text = serde_json::to_string(payload)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn write_report(path: &Path, payload: &Payload) -> Result<(), CliError> {
    let value = serde_json::to_value(payload)?;
    let sha = digest(&value)?;
    write_json(path, &json!({ "payload": value, "sha256": sha }))
}

/// Writes `certify.json` (checksummed), `constants.txt`, `umd.json`,
/// `umd_signs.csv` and `best_martingale.csv`.
pub(super) fn cmd_certify(cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let exp = cfg.experiment()?;
    let psi = exp.phi.conjugate();
    let mode = cfg.delta2_mode();
    let cert_phi = estimate_delta2(&exp.phi, &exp.space, &exp.grid, mode)?;
    let cert_psi = estimate_delta2(&psi, &exp.space, &exp.grid, mode)?;
    create_dir(&cfg.out)?;
    let report_path = cfg.out.join("certify.json");
    let mut payload = Payload {
        schema_version: SCHEMA_VERSION,
        atoms: exp.space.ids().to_vec(),
        family: cfg.family.family.clone(),
        p: cfg.p,
        delta2_phi: cert_phi.to_record(),
        delta2_psi: cert_psi.to_record(),
        hypotheses: None,
        constants: None,
        estimate: None,
        certification: None,
    };

    let mut constants =
        match ConstantsReport::from_certificates(&cert_phi, &cert_psi, cfg.zeta00, &[cfg.p]) {
            Ok(c) => c,
            Err(bounds::BoundsError::Hypotheses(msg)) => {
                let msg = format!("the space is not covered by the UMD theorem ({msg})");
                payload.hypotheses = Some(msg.clone());
                write_report(&report_path, &payload)?;
                return Err(CliError::Hypotheses(msg));
            }
            Err(e) => return Err(e.into()),
        };
    if let Some(p_map) = exp.exponents() {
        let closed = bounds::variable_lebesgue_report(&p_map, cfg.zeta00, &[cfg.p])?;
        for (name, grid_k, exact) in [
            ("K_Φ", constants.k_phi, closed.k_phi),
            ("K_Ψ", constants.k_psi, closed.k_psi),
        ] {
            if (grid_k - exact).abs() > ROUND_TRIP_TOL * exact {
                return Err(CliError::Invariant(format!(
                    "{name} from the grid certificate is {grid_k}, closed form gives {exact}"
                )));
            }
        }
        constants.variable_exponent = closed.variable_exponent;
    }
    constants.check_invariants()?;
    write_file(
        &cfg.out.join("constants.txt"),
        constants.to_string().as_bytes(),
    )?;

    let seed = cfg.require_seed()?;
    let ids = exp.space.ids().to_vec();
    let mo = MusielakOrlicz::new(exp.space, exp.phi)?;
    let norm = YNorm::Luxemburg(&mo);
    let estimate = estimate_umd(&norm, ids.len(), cfg.p, cfg.depth, cfg.budget, seed)?;
    write_umd(cfg, &estimate, &norm, &ids)?;
    let certification = bounds::certify(&estimate, &constants, cfg.p)?;

    payload.constants = Some(constants);
    payload.estimate = Some(EstimateSummary {
        best_ratio: estimate.best_ratio,
        best_signs: estimate.best_signs.clone(),
        restarts: cfg.budget.restarts,
        steps: cfg.budget.steps,
        seed,
        depth: cfg.depth,
    });
    payload.certification = Some(certification);
    write_report(&report_path, &payload)?;

    println!(
        "best ratio {} in [{}, {}]: {}",
        certification.best_ratio,
        bounds::RATIO_FLOOR,
        certification.beta_upper,
        if certification.certified {
            "certified"
        } else {
            "NOT certified"
        }
    );
    if certification.certified {
        Ok(0)
    } else {
        Err(CliError::Invariant(format!(
            "empirical ratio {} outside [{}, {}]",
            certification.best_ratio,
            bounds::RATIO_FLOOR,
            certification.beta_upper
        )))
    }
}

/// Re-checks a `certify.json`: checksum, constant invariants and the
/// certification arithmetic. Exit code mirrors the original run.
pub(super) fn cmd_verify(path: &Path) -> Result<u8, CliError> {
    let bad = |m: String| CliError::Integrity(format!("{}: {m}", path.display()));
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| bad(format!("not JSON: {e}")))?;
    let (Some(value), Some(sha)) = (
        doc.get("payload"),
        doc.get("sha256").and_then(Value::as_str),
    ) else {
        return Err(bad("missing payload or sha256".into()));
    };
    if digest(value)? != sha {
        return Err(bad("checksum mismatch".into()));
    }
    if value.get("schema_version").and_then(Value::as_u64) != Some(u64::from(SCHEMA_VERSION)) {
        return Err(bad("unsupported schema_version".into()));
    }
    // Failed certificates may carry non-finite numbers, serialized as null.
    if let Some(h) = value.get("hypotheses").and_then(Value::as_str) {
        return Err(CliError::Hypotheses(h.to_owned()));
    }
    let payload: Payload = serde_json::from_value(value.clone())
        .map_err(|e| bad(format!("malformed payload: {e}")))?;
    let (Some(constants), Some(estimate), Some(stored)) =
        (payload.constants, payload.estimate, payload.certification)
    else {
        return Err(bad("incomplete report".into()));
    };
    constants
        .check_invariants()
        .map_err(|e| bad(e.to_string()))?;
    let recomputed = certify_ratio(estimate.best_ratio, &constants, payload.p)?;
    if recomputed != stored {
        return Err(bad(
            "certification does not follow from the reported constants".into(),
        ));
    }
    println!(
        "verified: {}",
        if stored.certified {
            "certified"
        } else {
            "NOT certified"
        }
    );
    Ok(if stored.certified { 0 } else { 1 })
}
