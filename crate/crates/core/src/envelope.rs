//! One-step concave envelope of a function given on finitely many support
//! points, evaluated at the current price.
//!
//! Two linear programs describe the same number:
//!
//! * primal — cheapest superhedge: `min x` over `(x, H)` subject to
//!   `x + H · (y_i - s) ≥ f_i` for every support point;
//! * dual — best martingale weights: `max Σ q_i f_i` over probability
//!   vectors `q` with barycenter `Σ q_i y_i = s`.
//!
//! Both are solved every time; their values must agree to `1e-9` and the dual
//! barycenter must reproduce the current price, otherwise the call fails
//! rather than returning an unverified number.  The hedge is reported as the
//! minimal-norm representative modulo directions orthogonal to the increment
//! span (only gains `H · (y - s)` are determined by the problem).

use crate::lp::{Cmp, LpBuilder, LpStatus};
use crate::na;
use crate::span::Span;
use crate::{Error, Result};

/// Agreement tolerance between the primal and dual optimal values.
pub const DUALITY_TOL: f64 = 1e-9;

/// Result of a one-step envelope evaluation.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    /// Optimal superhedging cost (primal LP value).
    pub value: f64,
    /// Optimal martingale-weight objective (dual LP value).
    pub dual_value: f64,
    /// A cheapest hedge, minimal-norm within its gain class.
    pub hedge: Vec<f64>,
    /// Optimal weights, one per support point (a martingale measure).
    pub support_weights: Vec<f64>,
}

/// Superdifferential description at the evaluation point: every optimal
/// hedge, not just the one reported by [`envelope_at`].
#[derive(Debug, Clone)]
pub struct SuperdiffBox {
    pub value: f64,
    /// In one dimension, the closed interval of optimal hedge slopes
    /// (infinite endpoints when the support leaves the slope free).
    pub interval: Option<(f64, f64)>,
    /// Support points carrying positive dual weight: their superhedge
    /// constraints bind at every optimal hedge.
    pub forced_active: Vec<usize>,
}

fn validate_inputs(prices: &[Vec<f64>], values: &[f64], current: &[f64]) -> Result<()> {
    if prices.is_empty() || prices.len() != values.len() {
        return Err(Error::Infeasible(format!(
            "envelope needs matching non-empty support: {} prices, {} values",
            prices.len(),
            values.len()
        )));
    }
    let d = current.len();
    if prices.iter().any(|p| p.len() != d) {
        return Err(Error::Infeasible(
            "support points must share the dimension of the current price".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite())
        || prices.iter().flatten().any(|v| !v.is_finite())
        || current.iter().any(|v| !v.is_finite())
    {
        return Err(Error::Infeasible(
            "envelope inputs must be finite".into(),
        ));
    }
    Ok(())
}

fn increments(prices: &[Vec<f64>], current: &[f64]) -> Vec<Vec<f64>> {
    crate::model::snapped_increments(prices, current)
}

fn require_na(prices: &[Vec<f64>], current: &[f64]) -> Result<()> {
    let check = na::check_node(prices, current)?;
    if !check.ok {
        return Err(Error::Arbitrage(na::NaReport {
            global_ok: false,
            failures: vec![na::NaFailure {
                node: "one-step input".into(),
                certificate: check.certificate.unwrap_or_default(),
            }],
        }));
    }
    Ok(())
}

/// Value of the dual (martingale-weight) LP alone.  Used by the engine to
/// propagate the dual surface independently of the primal one.
pub fn dual_value_at(prices: &[Vec<f64>], values: &[f64], current: &[f64]) -> Result<f64> {
    validate_inputs(prices, values, current)?;
    let incs = increments(prices, current);
    let sol = dual_lp(&incs, values)?;
    Ok(sol.0)
}

fn dual_lp(incs: &[Vec<f64>], values: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = incs.len();
    let d = incs[0].len();
    let mut lp = LpBuilder::new(values.to_vec(), vec![true; n]);
    for k in 0..d {
        lp.row(incs.iter().map(|v| v[k]).collect(), Cmp::Eq, 0.0);
    }
    lp.row(vec![1.0; n], Cmp::Eq, 1.0);
    let sol = lp.solve().map_err(Error::Lp)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.value, sol.primal)),
        LpStatus::Infeasible => Err(Error::NonConvergence(
            "no martingale weights exist although the arbitrage check passed".into(),
        )),
        s => Err(Error::NonConvergence(format!(
            "martingale-weight LP ended with status {s:?}"
        ))),
    }
}

/// Evaluate the one-step envelope.  `prices[i]` and `values[i]` describe the
/// support; `current` is the evaluation point.  Fails when the support admits
/// a one-step arbitrage.
pub fn envelope_at(
    prices: &[Vec<f64>],
    values: &[f64],
    current: &[f64],
) -> Result<EnvelopeResult> {
    validate_inputs(prices, values, current)?;
    require_na(prices, current)?;
    let incs = increments(prices, current);
    let d = current.len();

    // Primal: min x over (x, H); maximise -x.
    let mut objective = vec![0.0; 1 + d];
    objective[0] = -1.0;
    let mut lp = LpBuilder::new(objective, vec![false; 1 + d]);
    for (v, &f) in incs.iter().zip(values.iter()) {
        let mut row = vec![0.0; 1 + d];
        row[0] = 1.0;
        row[1..].copy_from_slice(v);
        lp.row(row, Cmp::Ge, f);
    }
    let primal = lp.solve().map_err(Error::Lp)?;
    if primal.status != LpStatus::Optimal {
        return Err(Error::NonConvergence(format!(
            "superhedge LP ended with status {:?}",
            primal.status
        )));
    }
    let value = primal.primal[0];
    let hedge_raw = primal.primal[1..].to_vec();

    let (dual_value, support_weights) = dual_lp(&incs, values)?;

    let scale = 1.0 + value.abs().max(dual_value.abs());
    if (value - dual_value).abs() > DUALITY_TOL * scale {
        return Err(Error::NonConvergence(format!(
            "superhedge and martingale-weight values disagree: {value} vs {dual_value}"
        )));
    }

    // Barycenter consistency of the weights.
    let inc_scale = 1.0
        + incs
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, &x| a.max(x.abs()));
    for k in 0..d {
        let bary: f64 = support_weights
            .iter()
            .zip(incs.iter())
            .map(|(q, v)| q * v[k])
            .sum();
        if bary.abs() > DUALITY_TOL * inc_scale {
            return Err(Error::NonConvergence(format!(
                "martingale weights violate the barycenter identity by {bary}"
            )));
        }
    }

    // Superhedge feasibility of the reported pair.
    let hedge = Span::of(&incs, d).project(&hedge_raw);
    let val_scale = 1.0
        + values
            .iter()
            .fold(0.0f64, |a, &x| a.max(x.abs()))
            .max(value.abs());
    for (v, &f) in incs.iter().zip(values.iter()) {
        let gain: f64 = v.iter().zip(hedge.iter()).map(|(a, b)| a * b).sum();
        if value + gain - f < -DUALITY_TOL * val_scale {
            return Err(Error::NonConvergence(
                "reported hedge fails a superhedge constraint".into(),
            ));
        }
    }

    Ok(EnvelopeResult {
        value,
        dual_value,
        hedge,
        support_weights,
    })
}

/// Two-point envelope shortcut for a move to `ω·u` or `ω·d`: the weight on
/// the up state solves the martingale identity directly.  Requires
/// `d < 1 < u`; anything else is a domain error.
pub fn crr_step(pi_up: f64, pi_down: f64, u: f64, d: f64) -> Result<f64> {
    if !(d < 1.0 && 1.0 < u) {
        return Err(Error::Infeasible(format!(
            "two-point factors must satisfy d < 1 < u, got d = {d}, u = {u}"
        )));
    }
    let alpha = (1.0 - d) / (u - d);
    Ok(alpha * pi_up + (1.0 - alpha) * pi_down)
}

/// Describe the set of optimal hedges at the evaluation point.
pub fn superdifferential_box(
    prices: &[Vec<f64>],
    values: &[f64],
    current: &[f64],
) -> Result<SuperdiffBox> {
    let env = envelope_at(prices, values, current)?;
    let incs = increments(prices, current);
    let d = current.len();
    let forced_active: Vec<usize> = env
        .support_weights
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 1e-9)
        .map(|(i, _)| i)
        .collect();
    if d != 1 {
        return Ok(SuperdiffBox {
            value: env.value,
            interval: None,
            forced_active,
        });
    }

    // One dimension: extremal optimal slopes from two LPs over
    // { H : value + H v_i ≥ f_i }.
    let mut endpoints = [f64::NAN; 2];
    for (slot, sign) in [(0usize, -1.0f64), (1usize, 1.0f64)] {
        let mut lp = LpBuilder::new(vec![sign], vec![false]);
        for (v, &f) in incs.iter().zip(values.iter()) {
            lp.row(vec![v[0]], Cmp::Ge, f - env.value);
        }
        let sol = lp.solve().map_err(Error::Lp)?;
        endpoints[slot] = match sol.status {
            LpStatus::Optimal => sign * sol.value,
            LpStatus::Unbounded => sign * f64::INFINITY,
            s => {
                return Err(Error::NonConvergence(format!(
                    "hedge-interval LP ended with status {s:?}"
                )))
            }
        };
    }
    Ok(SuperdiffBox {
        value: env.value,
        interval: Some((endpoints[0], endpoints[1])),
        forced_active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn running_min_root_case() {
        // support (0 -> 0), (2 -> 2), (4 -> 2) around s = 2
        let env = envelope_at(&pts(&[0.0, 2.0, 4.0]), &[0.0, 2.0, 2.0], &[2.0]).unwrap();
        assert!((env.value - 2.0).abs() < 1e-9);
        assert!((env.value - env.dual_value).abs() < 1e-9);
        let h = env.hedge[0];
        assert!((-1e-9..=1.0 + 1e-9).contains(&h), "hedge {h} outside [0,1]");
        let box_ = superdifferential_box(&pts(&[0.0, 2.0, 4.0]), &[0.0, 2.0, 2.0], &[2.0])
            .unwrap();
        let (lo, hi) = box_.interval.unwrap();
        assert!((lo - 0.0).abs() < 1e-9);
        assert!((hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_point_support_replicates() {
        // f(80) = 2, f(120) = 14 around s = 100: unique slope 0.3
        let env = envelope_at(&pts(&[80.0, 120.0]), &[2.0, 14.0], &[100.0]).unwrap();
        let expected = 2.0 + 0.3 * 20.0; // line through the points at s
        assert!((env.value - expected).abs() < 1e-9);
        assert!((env.hedge[0] - 0.3).abs() < 1e-9);
        let box_ =
            superdifferential_box(&pts(&[80.0, 120.0]), &[2.0, 14.0], &[100.0]).unwrap();
        let (lo, hi) = box_.interval.unwrap();
        assert!((lo - 0.3).abs() < 1e-9 && (hi - 0.3).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_crr_alpha() {
        let (u, d, s) = (1.2, 0.8, 100.0);
        let (fu, fd) = (20.0, 0.0);
        let env = envelope_at(&pts(&[s * u, s * d]), &[fu, fd], &[s]).unwrap();
        let shortcut = crr_step(fu, fd, u, d).unwrap();
        assert!((env.value - shortcut).abs() < 1e-9);
        assert!((shortcut - 10.0).abs() < 1e-12); // alpha = 1/2
    }

    #[test]
    fn crr_step_domain_errors() {
        assert!(crr_step(1.0, 0.0, 1.2, 1.1).is_err());
        assert!(crr_step(1.0, 0.0, 0.9, 0.8).is_err());
    }

    #[test]
    fn refuses_arbitrage_support() {
        let err = envelope_at(&pts(&[110.0, 120.0]), &[1.0, 2.0], &[100.0]).unwrap_err();
        assert!(matches!(err, Error::Arbitrage(_)));
    }

    #[test]
    fn absorbing_support_takes_the_max() {
        let env = envelope_at(&pts(&[5.0, 5.0 + 4e-13]), &[3.0, 7.0], &[5.0]).unwrap();
        assert!((env.value - 7.0).abs() < 1e-9);
        assert_eq!(env.hedge, vec![0.0]);
    }

    #[test]
    fn barycenter_of_weights_is_the_current_price() {
        let prices = vec![
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![0.0, 0.0],
            vec![2.0, 2.0],
        ];
        let values = vec![0.0, 0.0, 0.0, 2.0];
        let env = envelope_at(&prices, &values, &[1.0, 1.0]).unwrap();
        assert!((env.value - 1.0).abs() < 1e-9);
        for k in 0..2 {
            let bary: f64 = env
                .support_weights
                .iter()
                .zip(prices.iter())
                .map(|(q, y)| q * y[k])
                .sum();
            assert!((bary - 1.0).abs() < 1e-9);
        }
        // the unique optimal weights sit on the diagonal pair {(0,0), (2,2)}
        let b = superdifferential_box(&prices, &values, &[1.0, 1.0]).unwrap();
        assert_eq!(b.forced_active, vec![2, 3]);
    }
}
