//! One-dimensional search primitives shared by conjugation, generalized
//! inverses and the two norms.
//!
//! Objectives here are plain `f64` with IEEE infinities standing in for the
//! extended range; callers convert to [`ExtReal`](crate::young::ExtReal) at
//! their public boundary.

/// Brackets never grow past `2^BRACKET_CAP_LOG2` times their starting scale.
pub const BRACKET_CAP_LOG2: i32 = 60;

/// Hard ceiling on refinement steps for any solver in this module.
pub const MAX_REFINE_ITERATIONS: usize = 400;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy)]
pub enum Tolerance {
    /// Stop once `hi - lo <= tol * max(|lo|, |hi|)`.
    Relative(f64),
    /// Stop once `hi - lo <= tol`.
    Absolute(f64),
}

impl Tolerance {
    fn converged(self, lo: f64, hi: f64) -> bool {
        match self {
            Tolerance::Relative(tol) => hi - lo <= tol * lo.abs().max(hi.abs()),
            Tolerance::Absolute(tol) => hi - lo <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Bisection {
    /// Largest probed point where the predicate was false.
    pub lo: f64,
    /// Smallest probed point where the predicate was true.
    pub hi: f64,
    pub iterations: usize,
}

/// Bisects a monotone predicate: `pred(lo)` must be false and `pred(hi)` true.
pub fn bisect<P>(mut pred: P, mut lo: f64, mut hi: f64, tol: Tolerance) -> Bisection
where
    P: FnMut(f64) -> bool,
{
    let mut iterations = 0;
    while iterations < MAX_REFINE_ITERATIONS && !tol.converged(lo, hi) {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Bisection { lo, hi, iterations }
}

#[derive(Debug, Clone, Copy)]
pub struct GoldenResult {
    pub arg: f64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal (quasiconcave)
/// objective on `[lo, hi]`. Ties, including two `-inf` probes, shrink the
/// bracket towards `lo`, so objectives that are `-inf` on a right tail are
/// handled. Returns the best point evaluated.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: Tolerance) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    let mut c = hi - INV_GOLDEN * (hi - lo);
    let mut d = lo + INV_GOLDEN * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut arg, mut value) = if fc >= fd { (c, fc) } else { (d, fd) };
    let mut iterations = 0;
    while iterations < MAX_REFINE_ITERATIONS && !tol.converged(lo, hi) {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_GOLDEN * (hi - lo);
            fc = f(c);
            if fc > value {
                arg = c;
                value = fc;
            }
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_GOLDEN * (hi - lo);
            fd = f(d);
            if fd > value {
                arg = d;
                value = fd;
            }
        }
        iterations += 1;
    }
    GoldenResult {
        arg,
        value,
        lo,
        hi,
        iterations,
    }
}

/// Golden-section minimization; see [`golden_max`].
pub fn golden_min<F>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    let r = golden_max(|x| -f(x), lo, hi, tol);
    GoldenResult {
        value: -r.value,
        ..r
    }
}

/// Evenly spaced grid on `[min, max]` (inclusive), linear or logarithmic.
pub fn grid(min: f64, max: f64, count: usize, log: bool) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = if log {
                (min.ln(), max.ln())
            } else {
                (min, max)
            };
            let last = count - 1;
            (0..count)
                .map(|i| match i {
                    0 => min,
                    i if i == last => max,
                    i => {
                        let v = a + (b - a) * i as f64 / last as f64;
                        if log {
                            v.exp()
                        } else {
                            v
                        }
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let b = bisect(|x| x * x >= 2.0, 0.0, 2.0, Tolerance::Relative(1e-14));
        assert!((b.hi - 2f64.sqrt()).abs() < 1e-13);
        assert!(b.lo <= b.hi);
    }

    #[test]
    fn golden_max_of_parabola() {
        let r = golden_max(
            |x| -(x - 0.3) * (x - 0.3),
            0.0,
            2.0,
            Tolerance::Absolute(1e-12),
        );
        assert!((r.arg - 0.3).abs() < 1e-6);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn golden_max_with_infinite_tail_moves_left() {
        let f = |x: f64| if x > 0.5 { f64::NEG_INFINITY } else { x };
        let r = golden_max(f, 0.0, 2.0, Tolerance::Absolute(1e-12));
        assert!((r.arg - 0.5).abs() < 1e-9);
    }

    #[test]
    fn log_grid_endpoints_are_exact() {
        let g = grid(1e-3, 1e3, 7, true);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!((g[3] - 1.0).abs() < 1e-12);
    }
}
