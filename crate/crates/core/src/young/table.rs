use super::{ExtReal, YoungError};

/// Behaviour past the last knot of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Extrapolate with the slope of the last segment.
    Linear,
    /// The function is `+∞` strictly beyond the last knot.
    Infinite,
}

/// Convex piecewise-linear interpolant through `(x, Φ(x))` knots, starting at
/// the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail: Tail,
}

const CONVEXITY_SLACK: f64 = 1e-12;

impl PiecewiseLinear {
    pub fn new(knots: &[(f64, f64)], tail: Tail) -> Result<Self, YoungError> {
        let invalid = |msg: String| Err(YoungError::InvalidTable(msg));
        if knots.len() < 2 {
            return invalid("need at least two knots".into());
        }
        if knots[0] != (0.0, 0.0) {
            return invalid(format!("first knot must be (0, 0), got {:?}", knots[0]));
        }
        if knots.iter().any(|&(x, v)| !x.is_finite() || !v.is_finite()) {
            return invalid("knots must be finite".into());
        }
        let mut slopes: Vec<f64> = Vec::with_capacity(knots.len() - 1);
        for (i, w) in knots.windows(2).enumerate() {
            let ((x0, v0), (x1, v1)) = (w[0], w[1]);
            if x1 <= x0 {
                return invalid(format!(
                    "abscissae must increase strictly at knot {}",
                    i + 1
                ));
            }
            let s = (v1 - v0) / (x1 - x0);
            if s < 0.0 {
                return invalid(format!("values decrease on segment {i}"));
            }
            if let Some(&prev) = slopes.last() {
                if s < prev - CONVEXITY_SLACK * prev.abs().max(1.0) {
                    return invalid(format!("slopes decrease at knot {i}; table is not convex"));
                }
            }
            slopes.push(s);
        }
        if tail == Tail::Linear && *slopes.last().unwrap() <= 0.0 {
            return invalid("identically zero function".into());
        }
        Ok(PiecewiseLinear {
            xs: knots.iter().map(|k| k.0).collect(),
            values: knots.iter().map(|k| k.1).collect(),
            slopes,
            tail,
        })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    fn last_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Index of the segment whose half-open interval `[x_i, x_{i+1})` holds `x`.
    fn segment(&self, x: f64) -> usize {
        let idx = self.xs.partition_point(|&k| k <= x);
        idx.saturating_sub(1).min(self.slopes.len() - 1)
    }

    pub fn eval(&self, x: f64) -> ExtReal {
        let last = self.last_x();
        if x > last && self.tail == Tail::Infinite {
            return ExtReal::Infinity;
        }
        let i = self.segment(x);
        ExtReal::Finite(self.values[i] + self.slopes[i] * (x - self.xs[i]))
    }

    /// Right derivative; infinite at and past the last knot of an
    /// `Infinite`-tailed table.
    pub fn right_slope(&self, x: f64) -> ExtReal {
        if x >= self.last_x() {
            return match self.tail {
                Tail::Linear => ExtReal::Finite(*self.slopes.last().unwrap()),
                Tail::Infinite => ExtReal::Infinity,
            };
        }
        ExtReal::Finite(self.slopes[self.segment(x)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floor_table() -> PiecewiseLinear {
        // Φ with right derivative ⌊x⌋: values k(k-1)/2 at integer k.
        let knots: Vec<(f64, f64)> = (0..6)
            .map(|k| (k as f64, (k * (k - 1) / 2) as f64))
            .collect();
        PiecewiseLinear::new(&knots, Tail::Linear).unwrap()
    }

    #[test]
    fn evaluates_and_extrapolates() {
        let t = PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)], Tail::Linear).unwrap();
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(3.0), 7.0);
        let inf = PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 1.0)], Tail::Infinite).unwrap();
        assert_eq!(inf.eval(1.0), 1.0);
        assert_eq!(inf.eval(1.0 + 1e-12), ExtReal::Infinity);
    }

    #[test]
    fn right_slope_takes_right_limit_at_knots() {
        let t = floor_table();
        assert_eq!(t.right_slope(0.0), 0.0);
        assert_eq!(t.right_slope(1.0), 1.0);
        assert_eq!(t.right_slope(1.999), 1.0);
        assert_eq!(t.right_slope(2.0), 2.0);
        assert_eq!(t.right_slope(40.0), 4.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(PiecewiseLinear::new(&[(0.0, 0.0)], Tail::Linear).is_err());
        assert!(PiecewiseLinear::new(&[(0.0, 1.0), (1.0, 2.0)], Tail::Linear).is_err());
        assert!(PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)], Tail::Linear).is_err());
        assert!(PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 0.0)], Tail::Linear).is_err());
        assert!(PiecewiseLinear::new(&[(0.0, 0.0), (1.0, 0.0)], Tail::Infinite).is_ok());
    }
}
