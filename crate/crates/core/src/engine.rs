//! Backward induction over the whole lattice: price surfaces, the minimal
//! hedge plan with its consumption stream, wealth-path simulation and
//! path-wise superhedge verification.
//!
//! The price surface is computed twice over, by independent recursions: the
//! cheapest-superhedge value propagates through the primal envelope LP and
//! the best-martingale-expectation value through the dual weight LP.  The two
//! must agree node-wise to [`SURFACE_TOL`]; disagreement is reported as
//! non-convergence instead of silently trusting either side.

use crate::envelope;
use crate::model::{Lattice, ModelError, PayoffSpec};
use crate::na;
use crate::par;
use crate::{Error, Result};

/// Required node-wise agreement between the primal and dual surfaces.
pub const SURFACE_TOL: f64 = 1e-7;
/// Superhedge slack and wealth-recursion tolerance.
pub const PLAN_TOL: f64 = 1e-9;
/// Consumption may dip below zero by at most this much before the plan is
/// rejected as inconsistent.
pub const CONSUMPTION_TOL: f64 = 1e-10;

/// Superhedging price and its dual value at every node, indexed like
/// [`Lattice::nodes`].
#[derive(Debug, Clone)]
pub struct PriceSurface {
    /// Cheapest-superhedge value per node; equals the payoff at leaves.
    pub pi: Vec<f64>,
    /// Best martingale expectation per node, propagated independently.
    pub dual: Vec<f64>,
}

/// The minimal superhedging strategy: start from the root price, hold the
/// envelope hedge at every node, and withdraw the surplus so that wealth sits
/// exactly on the price surface.
#[derive(Debug, Clone)]
pub struct HedgePlan {
    /// Wealth the plan starts from (the root superhedging price).
    pub initial_capital: f64,
    /// Hedge chosen at each non-terminal node, held over the following step.
    pub hedge: Vec<Option<Vec<f64>>>,
    /// Portfolio value on arrival at each node, after the withdrawal there.
    pub wealth: Vec<f64>,
    /// Cumulative consumption up to and including each node; zero at the root.
    pub consumption: Vec<f64>,
}

/// Outcome of checking a strategy against the payoff on every path.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// True when every path ends with wealth ≥ payoff and no withdrawal is
    /// negative (both within [`PLAN_TOL`]).
    pub pass: bool,
    /// Minimum over paths of terminal wealth minus payoff.
    pub min_slack: f64,
    /// Node ids of a path attaining the minimum slack.
    pub worst_path: Vec<String>,
    /// Smallest single withdrawal encountered on any edge.
    pub min_consumption_step: f64,
}

struct Surfaces {
    pi: Vec<f64>,
    dual: Vec<f64>,
    hedge: Vec<Option<Vec<f64>>>,
}

fn root_path(lattice: &Lattice, leaf: usize) -> Vec<usize> {
    let mut path = vec![leaf];
    let mut cur = leaf;
    while let Some(p) = lattice.parent(cur) {
        path.push(p);
        cur = p;
    }
    path.reverse();
    path
}

/// Payoff value at each leaf.  On a tree every leaf determines its path; a
/// merged lattice admits only payoffs that are well defined per leaf.
fn terminal_values(lattice: &Lattice, payoff: &PayoffSpec) -> Result<Vec<f64>> {
    let mut out = vec![0.0; lattice.len()];
    if lattice.is_tree() {
        for &leaf in lattice.leaves() {
            let path = root_path(lattice, leaf);
            out[leaf] = payoff.evaluate(lattice, &path)?;
        }
    } else {
        if !payoff.is_terminal_price_function() && !matches!(payoff, PayoffSpec::Table(_)) {
            return Err(Error::Model(ModelError::RecombineNeedsPricePayoff));
        }
        for &leaf in lattice.leaves() {
            out[leaf] = payoff.evaluate(lattice, &[leaf])?;
        }
    }
    Ok(out)
}

fn solve_all(lattice: &Lattice, payoff: &PayoffSpec, sequential: bool) -> Result<Surfaces> {
    payoff.validate(lattice)?;
    let report = na::check_lattice(lattice)?;
    if !report.global_ok {
        return Err(Error::Arbitrage(report));
    }

    let n = lattice.len();
    let mut pi = vec![0.0; n];
    let mut dual = vec![0.0; n];
    let mut hedge: Vec<Option<Vec<f64>>> = vec![None; n];
    let term = terminal_values(lattice, payoff)?;
    for &leaf in lattice.leaves() {
        pi[leaf] = term[leaf];
        dual[leaf] = term[leaf];
    }

    for t in (0..lattice.horizon()).rev() {
        let slice = lattice.at_time(t);
        let step = |&ix: &usize| -> Result<(f64, f64, Vec<f64>)> {
            let node = lattice.node(ix);
            let prices: Vec<Vec<f64>> = node
                .successors
                .iter()
                .map(|&j| lattice.node(j).price.clone())
                .collect();
            let vals: Vec<f64> = node.successors.iter().map(|&j| pi[j]).collect();
            let dvals: Vec<f64> = node.successors.iter().map(|&j| dual[j]).collect();
            let env = envelope::envelope_at(&prices, &vals, &node.price)?;
            let dv = envelope::dual_value_at(&prices, &dvals, &node.price)?;
            let scale = 1.0 + env.value.abs().max(dv.abs());
            if (env.value - dv).abs() > SURFACE_TOL * scale {
                return Err(Error::NonConvergence(format!(
                    "price and dual surfaces disagree at node {}: {} vs {}",
                    node.id, env.value, dv
                )));
            }
            Ok((env.value, dv, env.hedge))
        };
        let results = if sequential {
            par::map_seq(slice, step)
        } else {
            par::map(slice, step)
        };
        for (&ix, r) in slice.iter().zip(results) {
            let (p, dv, h) = r?;
            pi[ix] = p;
            dual[ix] = dv;
            hedge[ix] = Some(h);
        }
    }
    Ok(Surfaces { pi, dual, hedge })
}

/// Compute the superhedging price surface.  Fails when any node admits a
/// one-step arbitrage (the error lists the offending nodes).
pub fn price(lattice: &Lattice, payoff: &PayoffSpec) -> Result<PriceSurface> {
    let s = solve_all(lattice, payoff, false)?;
    Ok(PriceSurface {
        pi: s.pi,
        dual: s.dual,
    })
}

/// Sequential baseline of [`price`], kept as a public entry point so the
/// benchmark suite can compare it against the data-parallel default.
pub fn price_seq(lattice: &Lattice, payoff: &PayoffSpec) -> Result<PriceSurface> {
    let s = solve_all(lattice, payoff, true)?;
    Ok(PriceSurface {
        pi: s.pi,
        dual: s.dual,
    })
}

/// Compute the minimal superhedging strategy.  Only defined on trees:
/// consumption is path-dependent and has no single value on a merged node.
pub fn minimal_strategy(lattice: &Lattice, payoff: &PayoffSpec) -> Result<HedgePlan> {
    if !lattice.is_tree() {
        return Err(Error::Infeasible(
            "hedge plans are path-dependent; recombined lattices support pricing only".into(),
        ));
    }
    let s = solve_all(lattice, payoff, false)?;
    let mut consumption = vec![0.0; lattice.len()];
    for t in 0..lattice.horizon() {
        for &ix in lattice.at_time(t) {
            let h = s.hedge[ix].as_ref().expect("hedge at non-terminal node");
            for (&j, inc) in lattice
                .node(ix)
                .successors
                .iter()
                .zip(lattice.increments(ix))
            {
                let gain: f64 = h.iter().zip(inc.iter()).map(|(a, b)| a * b).sum();
                let dc = s.pi[ix] + gain - s.pi[j];
                let scale = 1.0 + s.pi[ix].abs().max(s.pi[j].abs());
                if dc < -CONSUMPTION_TOL * scale {
                    return Err(Error::NonConvergence(format!(
                        "negative withdrawal {dc} on edge {} -> {}",
                        lattice.node(ix).id,
                        lattice.node(j).id
                    )));
                }
                consumption[j] = consumption[ix] + dc.max(0.0);
            }
        }
    }
    Ok(HedgePlan {
        initial_capital: s.pi[lattice.root()],
        hedge: s.hedge,
        wealth: s.pi,
        consumption,
    })
}

/// Apply the self-financing-with-consumption wealth recursion to explicit
/// step data, starting from capital `x`.  Returns all of `V_0 ..= V_T`.
pub fn wealth_path_raw(
    x: f64,
    hedges: &[Vec<f64>],
    increments: &[Vec<f64>],
    withdrawals: &[f64],
) -> Vec<f64> {
    assert_eq!(hedges.len(), increments.len());
    assert_eq!(hedges.len(), withdrawals.len());
    let mut out = Vec::with_capacity(hedges.len() + 1);
    let mut v = x;
    out.push(v);
    for ((h, inc), dc) in hedges.iter().zip(increments).zip(withdrawals) {
        let gain: f64 = h.iter().zip(inc.iter()).map(|(a, b)| a * b).sum();
        v = v + gain - dc;
        out.push(v);
    }
    out
}

/// Wealth of a plan along a root-to-leaf node index path, starting from `x`.
pub fn wealth_path(lattice: &Lattice, plan: &HedgePlan, x: f64, path: &[usize]) -> Vec<f64> {
    let zero = vec![0.0; lattice.dim()];
    let mut hedges = Vec::new();
    let mut incs = Vec::new();
    let mut dcs = Vec::new();
    for w in path.windows(2) {
        let (p, c) = (w[0], w[1]);
        hedges.push(plan.hedge[p].clone().unwrap_or_else(|| zero.clone()));
        incs.push(
            lattice
                .node(c)
                .price
                .iter()
                .zip(lattice.node(p).price.iter())
                .map(|(a, b)| a - b)
                .collect(),
        );
        dcs.push(plan.consumption[c] - plan.consumption[p]);
    }
    wealth_path_raw(x, &hedges, &incs, &dcs)
}

/// Check an arbitrary strategy: start from `x`, hold `hedge[ix]` at each
/// non-terminal node, withdraw the per-node cumulative `consumption`, and
/// compare terminal wealth to the payoff on every path.
pub fn verify_superhedge(
    lattice: &Lattice,
    payoff: &PayoffSpec,
    x: f64,
    hedge: &[Option<Vec<f64>>],
    consumption: &[f64],
) -> Result<VerifyReport> {
    if !lattice.is_tree() {
        return Err(Error::Infeasible(
            "path-wise verification requires a tree lattice".into(),
        ));
    }
    payoff.validate(lattice)?;
    if hedge.len() != lattice.len() || consumption.len() != lattice.len() {
        return Err(Error::Infeasible(format!(
            "strategy arrays must have one entry per node ({})",
            lattice.len()
        )));
    }

    let mut min_slack = f64::INFINITY;
    let mut worst_path = Vec::new();
    let mut min_dc = f64::INFINITY;
    for path in lattice.enumerate_paths() {
        let mut v = x;
        for w in path.windows(2) {
            let (p, c) = (w[0], w[1]);
            let gain: f64 = match &hedge[p] {
                Some(h) => h
                    .iter()
                    .zip(lattice.node(c).price.iter().zip(lattice.node(p).price.iter()))
                    .map(|(hk, (a, b))| hk * (a - b))
                    .sum(),
                None => 0.0,
            };
            let dc = consumption[c] - consumption[p];
            min_dc = min_dc.min(dc);
            v = v + gain - dc;
        }
        let slack = v - payoff.evaluate(lattice, &path)?;
        if slack < min_slack {
            min_slack = slack;
            worst_path = path.iter().map(|&ix| lattice.node(ix).id.clone()).collect();
        }
    }
    if !min_dc.is_finite() {
        min_dc = 0.0; // no edges: impossible, horizon ≥ 1
    }
    Ok(VerifyReport {
        pass: min_slack >= -PLAN_TOL && min_dc >= -PLAN_TOL,
        min_slack,
        worst_path,
        min_consumption_step: min_dc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawNode;

    fn raw(id: &str, time: u32, price: f64, succ: &[&str]) -> RawNode {
        RawNode {
            id: id.into(),
            time,
            price: vec![price],
            successors: succ.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Binary tree with multiplicative factors u/d, ids by move history.
    fn crr_tree(t_max: u32, u: f64, d: f64, s0: f64) -> Lattice {
        let mut raw_nodes = Vec::new();
        let mut frontier = vec![("s".to_string(), s0)];
        for t in 0..=t_max {
            let mut next = Vec::new();
            for (id, price) in &frontier {
                let succ: Vec<String> = if t < t_max {
                    vec![format!("{id}u"), format!("{id}d")]
                } else {
                    vec![]
                };
                raw_nodes.push(RawNode {
                    id: id.clone(),
                    time: t,
                    price: vec![*price],
                    successors: succ.clone(),
                });
                if t < t_max {
                    next.push((format!("{id}u"), price * u));
                    next.push((format!("{id}d"), price * d));
                }
            }
            frontier = next;
        }
        Lattice::assemble(t_max, 1, &[s0], raw_nodes, false).unwrap()
    }

    fn absorbing_three_state() -> Lattice {
        // root at 2; time-1 support {0, 2, 4}; each state absorbing to time 2
        let nodes = vec![
            raw("r", 0, 2.0, &["a", "b", "c"]),
            raw("a", 1, 0.0, &["a2"]),
            raw("b", 1, 2.0, &["b2"]),
            raw("c", 1, 4.0, &["c2"]),
            raw("a2", 2, 0.0, &[]),
            raw("b2", 2, 2.0, &[]),
            raw("c2", 2, 4.0, &[]),
        ];
        Lattice::assemble(2, 1, &[2.0], nodes, false).unwrap()
    }

    #[test]
    fn running_min_on_absorbing_lattice() {
        let lat = absorbing_three_state();
        let surf = price(&lat, &PayoffSpec::RunningMin).unwrap();
        let root = lat.root();
        assert!((surf.pi[root] - 2.0).abs() < 1e-9);
        for id in ["a", "b", "c"] {
            let ix = lat.index_of(id).unwrap();
            let expect = lat.node(ix).price[0].min(2.0);
            assert!((surf.pi[ix] - expect).abs() < 1e-9, "pi at {id}");
            assert!((surf.pi[ix] - surf.dual[ix]).abs() < 1e-7);
        }

        let plan = minimal_strategy(&lat, &PayoffSpec::RunningMin).unwrap();
        let h = plan.hedge[root].as_ref().unwrap()[0];
        assert!((-1e-9..=1.0 + 1e-9).contains(&h));
        // withdrawals on arrival at time 1, per branch
        let dc_at = |id: &str| plan.consumption[lat.index_of(id).unwrap()];
        assert!((dc_at("a") - (2.0 - 2.0 * h)).abs() < 1e-9);
        assert!(dc_at("b").abs() < 1e-9);
        assert!((dc_at("c") - 2.0 * h).abs() < 1e-9);

        let report =
            verify_superhedge(&lat, &PayoffSpec::RunningMin, plan.initial_capital, &plan.hedge, &plan.consumption)
                .unwrap();
        assert!(report.pass);
        assert!(report.min_slack.abs() < 1e-9);
    }

    #[test]
    fn crr_convex_payoffs_replicate() {
        let lat = crr_tree(3, 1.2, 0.8, 100.0);
        for (payoff, expect) in [
            (PayoffSpec::Call { strike: 100.0 }, 14.8),
            (PayoffSpec::Put { strike: 100.0 }, 14.8),
            (PayoffSpec::Straddle { strike: 100.0 }, 29.6),
        ] {
            let plan = minimal_strategy(&lat, &payoff).unwrap();
            assert!((plan.initial_capital - expect).abs() < 1e-9);
            // convex payoff on a two-point support replicates: no withdrawals
            for c in &plan.consumption {
                assert!(c.abs() < 1e-9);
            }
            let report =
                verify_superhedge(&lat, &payoff, plan.initial_capital, &plan.hedge, &plan.consumption).unwrap();
            assert!(report.pass && report.min_slack.abs() < 1e-8);
        }
    }

    #[test]
    fn constant_and_linear_payoffs() {
        let lat = crr_tree(2, 1.3, 0.7, 50.0);
        let constant = PayoffSpec::Linear {
            weights: vec![0.0],
            offset: 7.5,
        };
        let surf = price(&lat, &constant).unwrap();
        for ix in 0..lat.len() {
            assert!((surf.pi[ix] - 7.5).abs() < 1e-9);
        }
        let linear = PayoffSpec::Linear {
            weights: vec![2.0],
            offset: 3.0,
        };
        let surf = price(&lat, &linear).unwrap();
        for ix in 0..lat.len() {
            let expect = 2.0 * lat.node(ix).price[0] + 3.0;
            assert!((surf.pi[ix] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn underfunded_strategy_fails_verification() {
        let lat = crr_tree(2, 1.2, 0.8, 100.0);
        let payoff = PayoffSpec::Call { strike: 100.0 };
        let plan = minimal_strategy(&lat, &payoff).unwrap();
        let zero_consumption = vec![0.0; lat.len()];
        let report = verify_superhedge(
            &lat,
            &payoff,
            plan.initial_capital - 0.01,
            &plan.hedge,
            &zero_consumption,
        )
        .unwrap();
        assert!(!report.pass);
        assert!((report.min_slack + 0.01).abs() < 1e-9);
        assert!(!report.worst_path.is_empty());

        let report = verify_superhedge(
            &lat,
            &payoff,
            plan.initial_capital + 1.0,
            &plan.hedge,
            &zero_consumption,
        )
        .unwrap();
        assert!(report.pass && report.min_slack >= 1.0 - 1e-9);
    }

    #[test]
    fn wealth_path_recursion() {
        let v = wealth_path_raw(3.0, &[], &[], &[]);
        assert_eq!(v, vec![3.0]);
        let v = wealth_path_raw(
            10.0,
            &[vec![1.0], vec![0.0]],
            &[vec![-5.0], vec![2.0]],
            &[0.0, 0.5],
        );
        assert_eq!(v, vec![10.0, 5.0, 4.5]);

        let lat = crr_tree(3, 1.2, 0.8, 100.0);
        let payoff = PayoffSpec::Call { strike: 100.0 };
        let plan = minimal_strategy(&lat, &payoff).unwrap();
        for path in lat.enumerate_paths() {
            let v = wealth_path(&lat, &plan, plan.initial_capital, &path);
            for (k, &ix) in path.iter().enumerate() {
                assert!(
                    (v[k] - plan.wealth[ix]).abs() < 1e-9,
                    "wealth tracks the price surface"
                );
            }
        }
    }

    #[test]
    fn recombined_lattice_prices_but_has_no_plan() {
        // two-period recombining binary tree, 3 leaves
        let nodes = vec![
            raw("r", 0, 100.0, &["u", "d"]),
            raw("u", 1, 120.0, &["uu", "ud"]),
            raw("d", 1, 80.0, &["ud", "dd"]),
            raw("uu", 2, 144.0, &[]),
            raw("ud", 2, 96.0, &[]),
            raw("dd", 2, 64.0, &[]),
        ];
        let lat = Lattice::assemble(2, 1, &[100.0], nodes, true).unwrap();
        let payoff = PayoffSpec::Call { strike: 100.0 };
        let surf = price(&lat, &payoff).unwrap();
        assert!((surf.pi[lat.root()] - 11.0).abs() < 1e-9);
        let err = minimal_strategy(&lat, &payoff).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        // path-dependent payoffs are rejected outright on merged lattices
        let err = price(&lat, &PayoffSpec::RunningMin).unwrap_err();
        assert!(matches!(
            err,
            Error::Model(ModelError::RecombineNeedsPricePayoff)
        ));
    }

    #[test]
    fn parallel_and_sequential_agree_exactly() {
        let lat = crr_tree(5, 1.15, 0.85, 100.0);
        let payoff = PayoffSpec::Straddle { strike: 105.0 };
        let a = price(&lat, &payoff).unwrap();
        let b = price_seq(&lat, &payoff).unwrap();
        assert_eq!(a.pi, b.pi);
        assert_eq!(a.dual, b.dual);
    }
}
