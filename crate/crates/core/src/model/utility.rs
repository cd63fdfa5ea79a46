//! Consumption utilities: one-dimensional concave, non-decreasing functions
//! on `[0, ∞)`, bounded above, with `u(x) = -∞` for `x < 0`.

use crate::pw::{Extend, PwConcave};

use super::ModelError;

/// One-period utility.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility1d {
    /// `1 - exp(-gamma x)`, `gamma > 0`.
    Exponential { gamma: f64 },
    /// `x / (1 + x)`.
    PowerBounded,
    /// Tabulated concave non-decreasing function, flat beyond the last
    /// breakpoint (which keeps it bounded above).
    Piecewise(PwConcave),
}

impl Utility1d {
    pub fn exponential(gamma: f64) -> Result<Self, ModelError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(ModelError::Utility(format!(
                "exponential utility needs gamma > 0, got {gamma}"
            )));
        }
        Ok(Utility1d::Exponential { gamma })
    }

    /// `points` are `(x, u(x))` pairs; x must start at 0 and increase.
    pub fn piecewise(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::Utility("piecewise utility needs points".into()));
        }
        if points[0].0 != 0.0 {
            return Err(ModelError::Utility(format!(
                "piecewise utility domain must start at 0, got {}",
                points[0].0
            )));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let vs: Vec<f64> = points.iter().map(|p| p.1).collect();
        let pw = PwConcave::new(xs, vs, Extend::Saturate)
            .map_err(|e| ModelError::Utility(e.to_string()))?;
        Ok(Utility1d::Piecewise(pw))
    }

    /// Utility of consuming `x`; minus infinity below zero.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Utility1d::Exponential { gamma } => 1.0 - (-gamma * x).exp(),
            Utility1d::PowerBounded => x / (1.0 + x),
            Utility1d::Piecewise(pw) => pw.eval(x),
        }
    }

    /// Like [`eval`](Self::eval) but with a grace band for solver noise:
    /// arguments within `tol` below zero are treated as zero.
    pub fn eval_clamped(&self, x: f64, tol: f64) -> f64 {
        if x < -tol {
            f64::NEG_INFINITY
        } else {
            self.eval(x.max(0.0))
        }
    }

    /// Right derivative (a supergradient selection).
    pub fn slope(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Utility1d::Exponential { gamma } => gamma * (-gamma * x).exp(),
            Utility1d::PowerBounded => 1.0 / ((1.0 + x) * (1.0 + x)),
            Utility1d::Piecewise(pw) => pw.slope_at(x),
        }
    }

    /// Whether the utility is strictly concave on its domain (piecewise-linear
    /// tables never are).  Drives the uniqueness guarantee of the probe.
    pub fn is_strictly_concave(&self) -> bool {
        !matches!(self, Utility1d::Piecewise(_))
    }
}

/// Utilities per consumption date `t = 1..=T`.  Time-0 consumption is pinned
/// to zero by the optimiser, so no utility is stored for it (equivalently,
/// the time-0 utility is the zero function, normalised to `u(0) = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityProfile {
    per_time: Vec<Utility1d>,
}

impl UtilityProfile {
    /// Same utility at every consumption date `1..=T`.
    pub fn uniform(u: Utility1d, horizon: u32) -> Self {
        UtilityProfile {
            per_time: vec![u; horizon as usize],
        }
    }

    /// One utility per date `1..=T`, in order.
    pub fn from_sequence(seq: Vec<Utility1d>) -> Result<Self, ModelError> {
        if seq.is_empty() {
            return Err(ModelError::Utility(
                "utility profile needs at least one date".into(),
            ));
        }
        Ok(UtilityProfile { per_time: seq })
    }

    pub fn horizon(&self) -> u32 {
        self.per_time.len() as u32
    }

    /// Utility for consumption at date `t ∈ 1..=T`.
    pub fn at(&self, t: u32) -> &Utility1d {
        assert!(
            (1..=self.per_time.len() as u32).contains(&t),
            "utility requested for date {t}, profile covers 1..={}",
            self.per_time.len()
        );
        &self.per_time[(t - 1) as usize]
    }

    pub fn all_strictly_concave(&self) -> bool {
        self.per_time.iter().all(|u| u.is_strictly_concave())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_shape() {
        let u = Utility1d::exponential(1.0).unwrap();
        assert_eq!(u.eval(0.0), 0.0);
        assert!((u.eval(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(u.eval(-0.1), f64::NEG_INFINITY);
        assert!(u.slope(0.0) > u.slope(1.0));
        assert!(u.is_strictly_concave());
    }

    #[test]
    fn power_bounded_saturates() {
        let u = Utility1d::PowerBounded;
        assert_eq!(u.eval(0.0), 0.0);
        assert!(u.eval(1e9) < 1.0);
        assert!(u.is_strictly_concave());
    }

    #[test]
    fn piecewise_requires_zero_start_and_concavity() {
        assert!(Utility1d::piecewise(&[(0.5, 0.0), (1.0, 1.0)]).is_err());
        assert!(Utility1d::piecewise(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]).is_err());
        let u = Utility1d::piecewise(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)]).unwrap();
        assert_eq!(u.eval(3.0), 1.5); // saturates flat
        assert!(!u.is_strictly_concave());
    }

    #[test]
    fn profile_indexing_is_one_based() {
        let profile = UtilityProfile::uniform(Utility1d::PowerBounded, 2);
        assert_eq!(profile.horizon(), 2);
        profile.at(1);
        profile.at(2);
    }

    #[test]
    #[should_panic]
    fn profile_rejects_time_zero() {
        let profile = UtilityProfile::uniform(Utility1d::PowerBounded, 2);
        profile.at(0);
    }
}
