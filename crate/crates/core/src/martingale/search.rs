use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    average_up, center, check_depth, lp_mean, MartingaleError, PaleyWalshMartingale, SignSequence,
    YNorm,
};

/// `restarts × steps` of the coordinate-ascent search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub steps: usize,
}

impl Budget {
    pub fn new(restarts: usize, steps: usize) -> Result<Self, MartingaleError> {
        if restarts == 0 || steps == 0 {
            return Err(MartingaleError::ZeroBudget);
        }
        Ok(Budget { restarts, steps })
    }
}

impl FromStr for Budget {
    type Err = MartingaleError;

    /// Parses `"RxS"`, e.g. `"8x200"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad =
            || MartingaleError::InvalidParameter(format!("budget {s:?} is not of the form RxS"));
        let (r, st) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let r = r.trim().parse().map_err(|_| bad())?;
        let st = st.trim().parse().map_err(|_| bad())?;
        Budget::new(r, st)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.restarts, self.steps)
    }
}

/// Best transform ratio found by [`estimate_umd`], with everything needed to
/// replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmdEstimate {
    pub best_ratio: f64,
    pub best_signs: SignSequence,
    pub best_martingale: PaleyWalshMartingale,
    pub best_restart: usize,
    pub restarts: usize,
    pub ascent_steps: usize,
    pub seed: u64,
    pub depth: usize,
    pub p: f64,
}

fn draw_leaves(rng: &mut ChaCha8Rng, depth: usize, atoms: usize) -> Vec<f64> {
    let sparsity: f64 = rng.gen_range(0.0..0.5);
    loop {
        let mut leaves: Vec<f64> = (0..(1usize << depth) * atoms)
            .map(|_| {
                let v = rng.gen_range(-1.0..1.0) * rng.gen_range(-2.0_f64..2.0).exp();
                if rng.gen_bool(sparsity) {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        center(&mut leaves, atoms);
        if leaves.iter().any(|&v| v != 0.0) {
            return leaves;
        }
    }
}

/// Random mean-zero martingale with `sup_ω ‖f_n(ω)‖ = scale`; deterministic
/// per `seed`.
pub fn random_martingale(
    depth: usize,
    atoms: usize,
    scale: f64,
    norm: &YNorm,
    seed: u64,
) -> Result<PaleyWalshMartingale, MartingaleError> {
    check_depth(depth)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(MartingaleError::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let tree = PaleyWalshMartingale::from_leaves_centered(
            depth,
            atoms,
            draw_leaves(&mut rng, depth, atoms),
        )?;
        let sup = tree.leaf_norms(norm)?.into_iter().fold(0.0, f64::max);
        if sup > 0.0 {
            return Ok(tree.scaled(scale / sup));
        }
    }
}

/// Evaluates `max_ϵ ‖(ϵ*f)_n‖_p / ‖f_n‖_p` over all sign sequences. Since
/// `−ϵ` gives the same ratio, only `ϵ_1 = +1` is enumerated.
struct RatioEvaluator<'a> {
    depth: usize,
    atoms: usize,
    p: f64,
    norm: &'a YNorm<'a>,
}

impl RatioEvaluator<'_> {
    fn best(&self, leaves: &[f64]) -> Result<Option<(f64, u64)>, MartingaleError> {
        let (n, a) = (self.depth, self.atoms);
        let paths = 1usize << n;
        let levels = average_up(n, a, leaves.to_vec());
        // increments[ω][k - 1] = f_k − f_{k−1} along ω.
        let mut increments = vec![0.0; paths * n * a];
        for w in 0..paths {
            for k in 1..=n {
                let (node, parent) = (w >> (n - k), w >> (n - k + 1));
                for t in 0..a {
                    increments[(w * n + k - 1) * a + t] =
                        levels[k][node * a + t] - levels[k - 1][parent * a + t];
                }
            }
        }
        let mut norms = vec![0.0; paths];
        let mut value = vec![0.0; a];
        let mut ratio_of = |bits: u64| -> Result<f64, MartingaleError> {
            for (w, slot) in norms.iter_mut().enumerate() {
                value.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..n {
                    let eps = if bits >> k & 1 == 1 { -1.0 } else { 1.0 };
                    let d = &increments[(w * n + k) * a..(w * n + k + 1) * a];
                    value.iter_mut().zip(d).for_each(|(v, d)| *v += eps * d);
                }
                *slot = self.norm.eval(&value)?;
            }
            lp_mean(&norms, self.p)
        };
        let denom = ratio_of(0)?;
        if !(denom > 0.0) {
            return Ok(None);
        }
        let mut best = (1.0, 0);
        for half in 1..1u64 << (n - 1) {
            let bits = half << 1;
            let r = ratio_of(bits)? / denom;
            if r > best.0 {
                best = (r, bits);
            }
        }
        Ok(Some(best))
    }
}

struct RestartResult {
    ratio: f64,
    bits: u64,
    leaves: Vec<f64>,
}

fn run_restart(
    eval: &RatioEvaluator,
    seed: u64,
    restart: usize,
    steps: usize,
) -> Result<Option<RestartResult>, MartingaleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let mut leaves = draw_leaves(&mut rng, eval.depth, eval.atoms);
    let mut best = eval.best(&leaves)?.map(|(ratio, bits)| RestartResult {
        ratio,
        bits,
        leaves: leaves.clone(),
    });
    let mut step = 0.5;
    for _ in 0..steps {
        let j = rng.gen_range(0..leaves.len());
        let size = leaves
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let delta = step * size * rng.gen_range(0.5..1.5);
        let mut improved = false;
        for d in [delta, -delta] {
            let mut candidate = leaves.clone();
            candidate[j] += d;
            center(&mut candidate, eval.atoms);
            if let Some((ratio, bits)) = eval.best(&candidate)? {
                if best.as_ref().is_none_or(|b| ratio > b.ratio) {
                    best = Some(RestartResult {
                        ratio,
                        bits,
                        leaves: candidate.clone(),
                    });
                    leaves = candidate;
                    improved = true;
                    break;
                }
            }
        }
        step = if improved {
            (step * 1.5).min(4.0)
        } else {
            (step * 0.9).max(1e-4)
        };
    }
    Ok(best)
}

/// Lower bound on the UMD constant of `(Y, ‖·‖)` at exponent `p` from
/// random restarts and coordinate ascent over depth-`depth` trees.
/// Restarts run in parallel on independent ChaCha streams; the result is
/// deterministic per `seed` and nondecreasing in both budget components.
pub fn estimate_umd(
    norm: &YNorm,
    atoms: usize,
    p: f64,
    depth: usize,
    budget: Budget,
    seed: u64,
) -> Result<UmdEstimate, MartingaleError> {
    check_depth(depth)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(MartingaleError::InvalidExponent(p));
    }
    Budget::new(budget.restarts, budget.steps)?;
    let eval = RatioEvaluator {
        depth,
        atoms,
        p,
        norm,
    };
    let results = (0..budget.restarts)
        .into_par_iter()
        .map(|r| run_restart(&eval, seed, r, budget.steps))
        .collect::<Result<Vec<_>, _>>()?;
    let (best_restart, best) = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .fold(None::<(usize, RestartResult)>, |acc, (i, r)| match acc {
            Some((_, ref b)) if r.ratio <= b.ratio => acc,
            _ => Some((i, r)),
        })
        .ok_or_else(|| {
            MartingaleError::InvalidParameter("every candidate martingale vanished".into())
        })?;
    Ok(UmdEstimate {
        best_ratio: best.ratio,
        best_signs: SignSequence::from_bits(depth, best.bits),
        best_martingale: PaleyWalshMartingale::from_leaves_centered(depth, atoms, best.leaves)?,
        best_restart,
        restarts: budget.restarts,
        ascent_steps: budget.steps,
        seed,
        depth,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_martingale_examples() {
        let norm = YNorm::Fiber(0);
        let f = random_martingale(1, 1, 1.0, &norm, 7).unwrap();
        assert_eq!(f.value(1, 1)[0], -f.value(1, 0)[0]);
        let g = random_martingale(5, 3, 2.0, &norm, 11).unwrap();
        g.check().unwrap();
        let sup = g.leaf_norms(&norm).unwrap().into_iter().fold(0.0, f64::max);
        assert!((sup - 2.0).abs() < 1e-12);
        for t in 0..3 {
            let mean: f64 = g.leaves().iter().skip(t).step_by(3).sum::<f64>() / 32.0;
            assert!(mean.abs() < 1e-12);
        }
        assert_eq!(random_martingale(5, 3, 2.0, &norm, 11).unwrap(), g);
    }

    #[test]
    fn budget_parsing() {
        assert_eq!(
            "8x200".parse::<Budget>().unwrap(),
            Budget {
                restarts: 8,
                steps: 200
            }
        );
        assert!("0x10".parse::<Budget>().is_err());
        assert!("8".parse::<Budget>().is_err());
        assert_eq!(Budget::new(2, 3).unwrap().to_string(), "2x3");
    }

    #[test]
    fn scalar_l2_is_an_isometry() {
        let e = estimate_umd(&YNorm::Fiber(0), 1, 2.0, 4, Budget::new(2, 20).unwrap(), 3).unwrap();
        assert!((e.best_ratio - 1.0).abs() < 1e-9, "{}", e.best_ratio);
        assert_eq!(e.best_signs.signs()[0], 1);
    }

    #[test]
    fn estimate_is_deterministic() {
        let b = Budget::new(3, 15).unwrap();
        let a = estimate_umd(&YNorm::Fiber(0), 1, 3.0, 4, b, 5).unwrap();
        let c = estimate_umd(&YNorm::Fiber(0), 1, 3.0, 4, b, 5).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
        assert!(a.best_ratio >= 1.0 - 1e-9);
    }
}
