//! Piecewise-linear concave functions on a half-line.
//!
//! Used for tabulated utilities and for the per-node value surfaces produced
//! by the wealth-grid recursion.  A function is described by breakpoints
//! `xs[0] < xs[1] < ...` with values `vs`; left of `xs[0]` the function is
//! minus infinity (infeasible wealth), right of the last breakpoint it either
//! continues with the final slope ([`Extend::LastSlope`]) or saturates flat
//! ([`Extend::Saturate`]).

use thiserror::Error;

/// Behaviour to the right of the last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extend {
    LastSlope,
    Saturate,
}

#[derive(Debug, Error, PartialEq)]
pub enum PwError {
    #[error("breakpoints must be finite and strictly increasing (x[{0}] = {1})")]
    BadBreakpoint(usize, f64),
    #[error("values must be finite (v[{0}] = {1})")]
    BadValue(usize, f64),
    #[error("need at least one breakpoint")]
    Empty,
    #[error("slopes increase by {0} between segments {1} and {2}: not concave")]
    NotConcave(f64, usize, usize),
    #[error("function decreases by {0} on segment {1}: not non-decreasing")]
    Decreasing(f64, usize),
}

/// Slope violations up to this size are attributed to solver noise and
/// repaired (monotonically downward) instead of rejected.
const REPAIR_TOL: f64 = 5e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PwConcave {
    xs: Vec<f64>,
    vs: Vec<f64>,
    extend: Extend,
}

impl PwConcave {
    /// Build from breakpoints, enforcing concavity and monotonicity
    /// (non-decreasing).  Violations within `REPAIR_TOL` are projected out;
    /// anything larger is an error.
    pub fn new(xs: Vec<f64>, vs: Vec<f64>, extend: Extend) -> Result<Self, PwError> {
        if xs.is_empty() {
            return Err(PwError::Empty);
        }
        assert_eq!(xs.len(), vs.len());
        for (i, &x) in xs.iter().enumerate() {
            if !x.is_finite() || (i > 0 && x <= xs[i - 1]) {
                return Err(PwError::BadBreakpoint(i, x));
            }
        }
        for (i, &v) in vs.iter().enumerate() {
            if !v.is_finite() {
                return Err(PwError::BadValue(i, v));
            }
        }
        if xs.len() == 1 {
            return Ok(PwConcave { xs, vs, extend });
        }
        let mut slopes: Vec<f64> = (1..xs.len())
            .map(|i| (vs[i] - vs[i - 1]) / (xs[i] - xs[i - 1]))
            .collect();
        for i in 1..slopes.len() {
            if slopes[i] > slopes[i - 1] {
                if slopes[i] - slopes[i - 1] > REPAIR_TOL {
                    return Err(PwError::NotConcave(slopes[i] - slopes[i - 1], i - 1, i));
                }
                slopes[i] = slopes[i - 1];
            }
        }
        for (i, s) in slopes.iter_mut().enumerate() {
            if *s < 0.0 {
                if *s < -REPAIR_TOL {
                    return Err(PwError::Decreasing(-*s, i));
                }
                *s = 0.0;
            }
        }
        // slopes were only ever lowered toward earlier segments and raised to
        // zero at the tail; rebuild values so both properties hold exactly.
        let mut fixed = Vec::with_capacity(vs.len());
        fixed.push(vs[0]);
        for i in 1..vs.len() {
            fixed.push(fixed[i - 1] + slopes[i - 1] * (xs[i] - xs[i - 1]));
        }
        Ok(PwConcave {
            xs,
            vs: fixed,
            extend,
        })
    }

    /// Smallest admissible argument.
    pub fn floor(&self) -> f64 {
        self.xs[0]
    }

    pub fn breakpoints(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.vs)
    }

    fn last_slope(&self) -> f64 {
        match self.extend {
            Extend::Saturate => 0.0,
            Extend::LastSlope => {
                let n = self.xs.len();
                if n >= 2 {
                    (self.vs[n - 1] - self.vs[n - 2]) / (self.xs[n - 1] - self.xs[n - 2])
                } else {
                    0.0
                }
            }
        }
    }

    /// Value at `w`; minus infinity below the floor.
    pub fn eval(&self, w: f64) -> f64 {
        if w < self.xs[0] {
            return f64::NEG_INFINITY;
        }
        let n = self.xs.len();
        if w >= self.xs[n - 1] {
            return self.vs[n - 1] + self.last_slope() * (w - self.xs[n - 1]);
        }
        // first index with xs[i] > w; w sits in segment [i-1, i]
        let i = self.xs.partition_point(|&x| x <= w);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (w - x0) / (x1 - x0);
        self.vs[i - 1] + t * (self.vs[i] - self.vs[i - 1])
    }

    /// Value with a feasibility grace band: arguments within `tol` below the
    /// floor are clamped up to it; anything lower stays minus infinity.
    pub fn eval_clamped(&self, w: f64, tol: f64) -> f64 {
        if w < self.xs[0] - tol {
            f64::NEG_INFINITY
        } else {
            self.eval(w.max(self.xs[0]))
        }
    }

    /// A supergradient at `w` (the right-hand slope; at or below the floor,
    /// the first segment's slope).
    pub fn slope_at(&self, w: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 {
            return 0.0;
        }
        if w < self.xs[0] {
            return (self.vs[1] - self.vs[0]) / (self.xs[1] - self.xs[0]);
        }
        if w >= self.xs[n - 1] {
            return self.last_slope();
        }
        let i = self.xs.partition_point(|&x| x <= w);
        (self.vs[i] - self.vs[i - 1]) / (self.xs[i] - self.xs[i - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_extends() {
        let f = PwConcave::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0], Extend::LastSlope)
            .unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(2.0), 2.5);
        assert_eq!(f.eval(5.0), 4.0); // last slope 0.5
        assert_eq!(f.eval(-0.5), f64::NEG_INFINITY);
        let g = PwConcave::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0], Extend::Saturate)
            .unwrap();
        assert_eq!(g.eval(5.0), 3.0);
    }

    #[test]
    fn clamp_band_is_narrow() {
        let f = PwConcave::new(vec![1.0, 2.0], vec![0.0, 1.0], Extend::Saturate).unwrap();
        assert_eq!(f.eval_clamped(1.0 - 1e-13, 1e-12), 0.0);
        assert_eq!(f.eval_clamped(0.9, 1e-12), f64::NEG_INFINITY);
    }

    #[test]
    fn slopes_are_right_continuous() {
        let f = PwConcave::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5], Extend::Saturate)
            .unwrap();
        assert_eq!(f.slope_at(0.0), 1.0);
        assert_eq!(f.slope_at(1.0), 0.5);
        assert_eq!(f.slope_at(10.0), 0.0);
    }

    #[test]
    fn rejects_convex_tables() {
        let err = PwConcave::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0], Extend::LastSlope);
        assert!(matches!(err, Err(PwError::NotConcave(..))));
    }

    #[test]
    fn repairs_solver_noise() {
        let f = PwConcave::new(
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0, 2.0 + 1e-9],
            Extend::LastSlope,
        )
        .unwrap();
        // slope bump of 1e-9 gets flattened to the earlier slope
        assert!(f.eval(2.0) <= 2.0 + 1e-9);
        let s1 = f.slope_at(0.5);
        let s2 = f.slope_at(1.5);
        assert!(s2 <= s1);
    }

    #[test]
    fn rejects_decreasing_tables() {
        let err = PwConcave::new(vec![0.0, 1.0], vec![1.0, 0.0], Extend::Saturate);
        assert!(matches!(err, Err(PwError::Decreasing(..))));
    }
}
