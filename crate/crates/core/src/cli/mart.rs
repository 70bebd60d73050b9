use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{
    create_dir, write_csv, write_file, write_json, CliError, ExperimentConfig, SCHEMA_VERSION,
};
use crate::martingale::{
    doob_check, estimate_umd, main_estimate_check, random_martingale, write_tree_csv,
    PaleyWalshMartingale, SignSequence, UmdEstimate, YNorm,
};
use crate::modular::MusielakOrlicz;
use crate::young::estimate_delta2;

const DOOB_TOL: f64 = 1e-9;
const DOOB_STREAM: u64 = 1;
const MAIN_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_signs(rng: &mut ChaCha8Rng, n: usize) -> SignSequence {
    SignSequence::from_bits(n, rng.gen_range(0..1u64 << n))
}

/// Rescales `f` so that its largest leaf norm is 1.
pub(super) fn normalise(
    f: &PaleyWalshMartingale,
    norm: &YNorm,
) -> Result<PaleyWalshMartingale, CliError> {
    let sup = f.leaf_norms(norm)?.into_iter().fold(0.0, f64::max);
    Ok(if sup > 0.0 {
        f.scaled(1.0 / sup)
    } else {
        f.clone()
    })
}

/// Writes `doob.csv`, `main_estimate.csv`, `umd.json`, `umd_signs.csv` and
/// `best_martingale.csv`.
pub(super) fn cmd_mart(cfg: &ExperimentConfig) -> Result<u8, CliError> {
    let seed = cfg.require_seed()?;
    let exp = cfg.experiment()?;
    let atoms = exp.space.len();
    let ids = exp.space.ids().to_vec();
    let psi = exp.phi.conjugate();
    let mode = cfg.delta2_mode();
    let cert_phi = estimate_delta2(&exp.phi, &exp.space, &exp.grid, mode)?;
    let cert_psi = estimate_delta2(&psi, &exp.space, &exp.grid, mode)?;
    let grid = exp.grid.clone();
    let phi = exp.phi.clone();
    let mo = MusielakOrlicz::new(exp.space, exp.phi)?;
    let norm = YNorm::Luxemburg(&mo);
    create_dir(&cfg.out)?;
    let mut violations = Vec::new();

    // Doob campaign on the fibers |f_k(t)| of random martingales.
    let mut rng = stream(seed, DOOB_STREAM);
    let mut rows = Vec::new();
    for trial in 0..cfg.doob_trials {
        let t = rng.gen_range(0..atoms);
        let depth = rng.gen_range(1..=cfg.depth);
        let scale = rng.gen_range(-2.0_f64..2.0).exp();
        let tree_seed: u64 = rng.gen();
        let Some(q) = cfg
            .doob_q
            .or_else(|| phi.homogeneity_degree(t))
            .filter(|&q| q > 1.0)
        else {
            continue;
        };
        let f = random_martingale(depth, atoms, scale, &YNorm::Fiber(t), tree_seed)?;
        let r = doob_check(&phi, t, q, cfg.doob_c, &f.abs_fiber(t)?, &grid)?;
        if r.margin < -DOOB_TOL {
            violations.push(format!("Doob trial {trial}: margin {}", r.margin));
        }
        rows.push(vec![
            trial.to_string(),
            depth.to_string(),
            ids[t].clone(),
            q.to_string(),
            cfg.doob_c.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.margin.to_string(),
        ]);
    }
    write_csv(
        &cfg.out.join("doob.csv"),
        &[
            "trial",
            "depth",
            "atom_id",
            "q",
            "c",
            "E_phi_fstar",
            "E_phi_qconj_fn_plus_c",
            "margin",
        ],
        &rows,
    )?;

    let estimate = estimate_umd(&norm, atoms, cfg.p, cfg.depth, cfg.budget, seed)?;
    write_umd(cfg, &estimate, &norm, &ids)?;

    let hypotheses = (!cert_phi.is_certified() || !cert_psi.is_certified()).then(|| {
        let which = if cert_phi.is_certified() {
            &cert_psi
        } else {
            &cert_phi
        };
        format!(
            "main estimate skipped, Φ and Ψ must both satisfy Δ₂: {}",
            which
                .failure
                .as_ref()
                .map(ToString::to_string)
                .unwrap_or_default()
        )
    });
    let mut rows = Vec::new();
    if hypotheses.is_none() {
        let mut rng = stream(seed, MAIN_STREAM);
        let mut cases: Vec<(String, PaleyWalshMartingale, SignSequence)> = Vec::new();
        for trial in 0..cfg.main_trials {
            let depth = rng.gen_range(1..=cfg.depth);
            let tree_seed: u64 = rng.gen();
            let f = random_martingale(depth, atoms, 1.0, &norm, tree_seed)?;
            cases.push((trial.to_string(), f, random_signs(&mut rng, depth)));
        }
        cases.push((
            "adversarial".into(),
            normalise(&estimate.best_martingale, &norm)?,
            estimate.best_signs.clone(),
        ));
        for (label, f, signs) in &cases {
            let r = main_estimate_check(f, signs, &mo, &cert_phi, &cert_psi, cfg.zeta00)?;
            if !(r.margin >= 0.0) {
                violations.push(format!("main estimate case {label}: margin {}", r.margin));
            }
            rows.push(vec![
                label.clone(),
                f.depth().to_string(),
                r.lhs.to_string(),
                r.bound.to_string(),
                r.margin.to_string(),
            ]);
        }
    }
    write_csv(
        &cfg.out.join("main_estimate.csv"),
        &["case", "depth", "E_sup_norm_g", "bound", "margin"],
        &rows,
    )?;

    if !violations.is_empty() {
        return Err(CliError::Invariant(violations.join("; ")));
    }
    match hypotheses {
        Some(h) => Err(CliError::Hypotheses(h)),
        None => Ok(0),
    }
}

pub(super) fn write_umd(
    cfg: &ExperimentConfig,
    estimate: &UmdEstimate,
    norm: &YNorm,
    ids: &[String],
) -> Result<(), CliError> {
    write_json(
        &cfg.out.join("umd.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "budget": cfg.budget.to_string(),
            "estimate": estimate,
        }),
    )?;
    let f = &estimate.best_martingale;
    let base = f.lp_omega_norm(cfg.p, norm)?;
    let mut rows = Vec::new();
    for signs in [
        SignSequence::constant(f.depth(), 1),
        estimate.best_signs.clone(),
    ] {
        let ratio = f.transform(&signs)?.lp_omega_norm(cfg.p, norm)? / base;
        let text: String = signs
            .signs()
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect();
        rows.push(vec![text, ratio.to_string()]);
    }
    write_csv(&cfg.out.join("umd_signs.csv"), &["signs", "ratio"], &rows)?;
    let mut buf = Vec::new();
    write_tree_csv(&mut buf, f, ids)?;
    write_file(&cfg.out.join("best_martingale.csv"), &buf)
}
