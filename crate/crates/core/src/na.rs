//! One-step no-arbitrage checks with explicit certificates.
//!
//! A node admits no one-step arbitrage exactly when the zero vector lies in
//! the relative interior of the convex hull of its price increments
//! `y_i - S_t`.  Equivalently: the LP  `max ε  s.t.  Σ λ_i (y_i - S_t) = 0,
//! Σ λ_i = 1, λ_i ≥ ε`  is feasible with a strictly positive optimum (a
//! polytope's relative interior is the set of all-positive convex mixes of
//! its generators).  When the check fails there is a hedge `H` with
//! `H · (y - S_t) ≥ 0` on every successor and `> 0` on at least one; that
//! vector is extracted from a second LP and re-verified arithmetically
//! before it is reported.

use crate::lp::{Cmp, LpBuilder, LpStatus};
use crate::model::Lattice;
use crate::span::Span;
use crate::{par, Error, Result};

/// Strict-positivity threshold for the interior weight ε.
pub const INTERIOR_TOL: f64 = 1e-10;
/// Certificate slack tolerances (after increment normalisation).
const CERT_TOL: f64 = 1e-9;

/// Verdict for a single node.
#[derive(Debug, Clone)]
pub struct NodeCheck {
    pub ok: bool,
    /// Optimal interior weight ε (0 when the weight LP is infeasible).
    pub margin: f64,
    /// Arbitrage direction when `ok` is false.
    pub certificate: Option<Vec<f64>>,
}

/// One failing node of a lattice sweep.
#[derive(Debug, Clone)]
pub struct NaFailure {
    pub node: String,
    pub certificate: Vec<f64>,
}

/// Outcome of a lattice sweep.
#[derive(Debug, Clone)]
pub struct NaReport {
    pub global_ok: bool,
    pub failures: Vec<NaFailure>,
}

impl NaReport {
    pub fn failing_ids(&self) -> Vec<String> {
        self.failures.iter().map(|f| f.node.clone()).collect()
    }
}

/// Check a single one-step market: successor price vectors against the
/// current price.  Scale-invariant up to floating-point rounding.
pub fn check_node(support: &[Vec<f64>], current: &[f64]) -> Result<NodeCheck> {
    assert!(!support.is_empty(), "support must be non-empty");
    let d = current.len();
    let n = support.len();
    let mut incs = crate::model::snapped_increments(support, current);
    // Normalise so the tolerances mean the same thing at every price scale.
    let scale = incs
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |a, &x| a.max(x.abs()));
    if scale > 0.0 {
        for v in incs.iter_mut() {
            for x in v.iter_mut() {
                *x /= scale;
            }
        }
    }

    // Interior-weight LP over variables (λ_1..λ_n, ε).
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut nonneg = vec![true; n + 1];
    nonneg[n] = false;
    let mut lp = LpBuilder::new(objective, nonneg);
    for k in 0..d {
        let mut row = vec![0.0; n + 1];
        for (i, v) in incs.iter().enumerate() {
            row[i] = v[k];
        }
        lp.row(row, Cmp::Eq, 0.0);
    }
    let mut ones = vec![1.0; n + 1];
    ones[n] = 0.0;
    lp.row(ones, Cmp::Eq, 1.0);
    for i in 0..n {
        let mut row = vec![0.0; n + 1];
        row[i] = 1.0;
        row[n] = -1.0;
        lp.row(row, Cmp::Ge, 0.0);
    }
    let sol = lp.solve().map_err(Error::Lp)?;
    let (feasible, margin) = match sol.status {
        LpStatus::Optimal => (true, sol.value),
        LpStatus::Infeasible => (false, 0.0),
        _ => {
            return Err(Error::NonConvergence(
                "no-arbitrage weight LP failed numerically".into(),
            ))
        }
    };
    if feasible && margin > INTERIOR_TOL {
        return Ok(NodeCheck {
            ok: true,
            margin,
            certificate: None,
        });
    }

    // Arbitrage direction: maximise total gain subject to per-successor
    // gains in [0, 1].
    let certificate = extract_certificate(&incs, d)?;
    Ok(NodeCheck {
        ok: false,
        margin,
        certificate: Some(certificate),
    })
}

fn extract_certificate(incs: &[Vec<f64>], d: usize) -> Result<Vec<f64>> {
    let objective: Vec<f64> = (0..d).map(|k| incs.iter().map(|v| v[k]).sum()).collect();
    let mut lp = LpBuilder::new(objective, vec![false; d]);
    for v in incs {
        lp.row(v.clone(), Cmp::Ge, 0.0);
        lp.row(v.clone(), Cmp::Le, 1.0);
    }
    let sol = lp.solve().map_err(Error::Lp)?;
    if sol.status != LpStatus::Optimal || sol.value <= CERT_TOL {
        return Err(Error::NonConvergence(
            "arbitrage certificate extraction failed".into(),
        ));
    }
    // Strip components orthogonal to the increment span, then re-verify the
    // defining inequalities by plain dot products.
    let h = Span::of(incs, d).project(&sol.primal);
    let gains: Vec<f64> = incs
        .iter()
        .map(|v| v.iter().zip(h.iter()).map(|(a, b)| a * b).sum())
        .collect();
    let min_gain = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gain = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min_gain < -CERT_TOL || max_gain <= CERT_TOL {
        return Err(Error::NonConvergence(
            "arbitrage certificate failed verification".into(),
        ));
    }
    Ok(h)
}

/// Sweep every non-terminal node of a lattice.  Failures are listed in node
/// storage order; the certificates are expressed in original price units
/// (direction only — certificates are scale-free).
pub fn check_lattice(lattice: &Lattice) -> Result<NaReport> {
    let interior: Vec<usize> = (0..lattice.len())
        .filter(|&ix| !lattice.is_terminal(ix))
        .collect();
    let checks = par::map(&interior, |&ix| {
        let prices: Vec<Vec<f64>> = lattice
            .node(ix)
            .successors
            .iter()
            .map(|&j| lattice.node(j).price.clone())
            .collect();
        check_node(&prices, &lattice.node(ix).price)
    });
    let mut failures = Vec::new();
    for (&ix, check) in interior.iter().zip(checks.into_iter()) {
        let check = check?;
        if !check.ok {
            failures.push(NaFailure {
                node: lattice.node(ix).id.clone(),
                certificate: check.certificate.unwrap_or_default(),
            });
        }
    }
    Ok(NaReport {
        global_ok: failures.is_empty(),
        failures,
    })
}
