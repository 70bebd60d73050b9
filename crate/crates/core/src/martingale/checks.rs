use serde::{Deserialize, Serialize};

use super::{MartingaleError, PaleyWalshMartingale, ScalarTree, SignSequence, YNorm};
use crate::bounds;
use crate::modular::MusielakOrlicz;
use crate::young::{Delta2Certificate, ExtReal, YoungFunction};

const PRECONDITION_REL_TOL: f64 = 1e-12;
const NORMALISATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoobReport {
    /// `E Φ(f_n*)`.
    pub lhs: f64,
    /// `E Φ(q' f_n) + c`.
    pub rhs: f64,
    pub margin: f64,
    pub q_conj: f64,
}

fn finite(v: ExtReal, what: &str) -> Result<f64, MartingaleError> {
    v.finite()
        .ok_or_else(|| MartingaleError::InvalidParameter(format!("{what} is infinite")))
}

/// `E Φ(q' f_n) + c − E Φ(f_n*)` for a nonnegative submartingale `f`, after
/// checking `Φ(λ) ≤ λφ(λ)/q + c` on `grid`.
pub fn doob_check(
    phi: &YoungFunction,
    atom: usize,
    q: f64,
    c: f64,
    tree: &ScalarTree,
    grid: &[f64],
) -> Result<DoobReport, MartingaleError> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(MartingaleError::InvalidParameter(format!(
            "q must exceed 1, got {q}"
        )));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(MartingaleError::InvalidParameter(format!(
            "c must be ≥ 0, got {c}"
        )));
    }
    for &lambda in grid {
        let lhs = finite(phi.eval(atom, lambda)?, "Φ on the grid")?;
        let rhs = lambda * phi.right_derivative(atom, lambda)? / q + c;
        if lhs > rhs + PRECONDITION_REL_TOL * rhs.abs().max(1.0) {
            return Err(MartingaleError::DoobPrecondition { lambda, lhs, rhs });
        }
    }
    tree.check_nonnegative_submartingale()?;

    let q_conj = q / (q - 1.0);
    let paths = tree.leaves().len() as f64;
    let mut lhs = 0.0;
    for v in tree.maximal() {
        lhs += finite(phi.eval(atom, v)?, "Φ(f*)")?;
    }
    let mut rhs = 0.0;
    for &v in tree.leaves() {
        rhs += finite(phi.eval(atom, q_conj * v)?, "Φ(q' f_n)")?;
    }
    let (lhs, rhs) = (lhs / paths, rhs / paths + c);
    Ok(DoobReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        q_conj,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainEstimate {
    /// `E sup_k ‖(ϵ*f)_k‖_Y`.
    pub lhs: f64,
    /// `K_Ψ · C_{K_Φ,X} · C_h`.
    pub bound: f64,
    pub margin: f64,
    pub sup_leaf_norm: f64,
    pub m: u32,
    pub c_kx: f64,
    pub c_h: f64,
}

/// `K_Ψ C_{K_Φ,X} C_h − E sup_k ‖g_k‖_Y` for `g = ϵ*f`, where
/// `sup_ω ‖f_n(ω)‖_Y ≤ 1`.
pub fn main_estimate_check(
    f: &PaleyWalshMartingale,
    signs: &SignSequence,
    space: &MusielakOrlicz,
    cert_phi: &Delta2Certificate,
    cert_psi: &Delta2Certificate,
    zeta00: f64,
) -> Result<MainEstimate, MartingaleError> {
    if !cert_phi.is_certified() {
        return Err(MartingaleError::Uncertified("Φ"));
    }
    if !cert_psi.is_certified() {
        return Err(MartingaleError::Uncertified("Ψ"));
    }
    let norm = YNorm::Luxemburg(space);
    let sup_leaf_norm = f.leaf_norms(&norm)?.into_iter().fold(0.0, f64::max);
    if sup_leaf_norm > 1.0 + NORMALISATION_TOL {
        return Err(MartingaleError::NotNormalised(sup_leaf_norm));
    }
    let c_h = bounds::c_h(cert_phi.h_l1_norm, cert_psi.k, cert_psi.h_l1_norm)?;
    let (m, c_kx) = bounds::c_kx_bound(cert_phi.k, zeta00)?;
    let bound = cert_psi.k * c_kx * c_h;

    let g = f.transform(signs)?;
    let star = g.maximal(&norm)?;
    let lhs = star.iter().sum::<f64>() / star.len() as f64;
    Ok(MainEstimate {
        lhs,
        bound,
        margin: bound - lhs,
        sup_leaf_norm,
        m,
        c_kx,
        c_h,
    })
}

/// Smallest slack of the scalar witness `ζ(x, y) = 1 + xy`: the minimum of
/// `|x + y| − ζ(x, y)` over unit pairs and of the midpoint-convexity defect
/// of `ζ` in each variable on a `points × points` grid of `[−2, 2]²`.
/// Nonnegative iff the witness is admissible on the grid.
pub fn scalar_zeta_witness_margin(points: usize) -> f64 {
    let zeta = |x: f64, y: f64| 1.0 + x * y;
    let mut margin = f64::INFINITY;
    for x in [-1.0_f64, 1.0] {
        for y in [-1.0, 1.0] {
            margin = margin.min((x + y).abs() - zeta(x, y));
        }
    }
    let axis = crate::solve::grid(-2.0, 2.0, points.max(2), false);
    for &a in &axis {
        for &b in &axis {
            for &y in &axis {
                let m = 0.5 * (a + b);
                margin = margin.min(0.5 * (zeta(a, y) + zeta(b, y)) - zeta(m, y));
                margin = margin.min(0.5 * (zeta(y, a) + zeta(y, b)) - zeta(y, m));
            }
        }
    }
    margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::AtomicMeasureSpace;
    use crate::solve::grid;
    use crate::young::{estimate_delta2, Delta2Mode};

    #[test]
    fn doob_constant_and_symmetric_trees() {
        let phi = YoungFunction::power(2.0, 1).unwrap();
        let g = grid(0.01, 100.0, 50, true);
        let constant = ScalarTree::new(vec![vec![1.5], vec![1.5, 1.5]]).unwrap();
        let r = doob_check(&phi, 0, 2.0, 0.0, &constant, &g).unwrap();
        // Φ(2·1.5) − Φ(1.5).
        assert!((r.margin - (9.0 - 2.25)).abs() < 1e-12);

        let pm = ScalarTree::new(vec![vec![0.0], vec![1.0, 1.0]]).unwrap();
        let r = doob_check(&phi, 0, 2.0, 0.0, &pm, &g).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 4.0));
    }

    #[test]
    fn doob_rejects_bad_precondition() {
        // x² with q = 3 needs x² ≤ (2/3)x², false for x > 0.
        let phi = YoungFunction::power(2.0, 1).unwrap();
        let tree = ScalarTree::new(vec![vec![0.0], vec![1.0, 1.0]]).unwrap();
        let err = doob_check(&phi, 0, 3.0, 0.0, &tree, &[0.5, 1.0]).unwrap_err();
        assert!(matches!(err, MartingaleError::DoobPrecondition { .. }));
        let not_sub = ScalarTree::new(vec![vec![2.0], vec![1.0, 1.0]]).unwrap();
        assert!(doob_check(&phi, 0, 2.0, 0.0, &not_sub, &[1.0]).is_err());
    }

    #[test]
    fn main_estimate_trivial_signs() {
        let p = vec![1.5, 3.0, 3.0, 1.5];
        let space = AtomicMeasureSpace::uniform(4, 0.25).unwrap();
        let phi = YoungFunction::variable_exponent(p).unwrap();
        let psi = phi.conjugate();
        let lambda = grid(0.01, 100.0, 40, true);
        let cp = estimate_delta2(&phi, &space, &lambda, Delta2Mode::RatioOnly).unwrap();
        let cq = estimate_delta2(&psi, &space, &lambda, Delta2Mode::RatioOnly).unwrap();
        let mo = MusielakOrlicz::new(space, phi).unwrap();
        let f = PaleyWalshMartingale::from_leaves_centered(
            1,
            4,
            vec![0.5, 0.0, -0.2, 0.1, -0.5, 0.0, 0.2, -0.1],
        )
        .unwrap();
        let r = main_estimate_check(&f, &SignSequence::constant(1, 1), &mo, &cp, &cq, 1.0).unwrap();
        assert!(r.margin > 0.0 && r.bound > 2.0);
        assert_eq!(r.m, 9);

        let big = PaleyWalshMartingale::from_leaves_centered(
            1,
            4,
            vec![50.0, 0.0, 0.0, 0.0, -50.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            main_estimate_check(&big, &SignSequence::constant(1, 1), &mo, &cp, &cq, 1.0),
            Err(MartingaleError::NotNormalised(_))
        ));
    }

    #[test]
    fn zeta_witness_is_admissible() {
        assert!(scalar_zeta_witness_margin(21) >= -1e-12);
    }
}
