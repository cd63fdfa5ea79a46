//! Multi-period value recursion on wealth grids, policy extraction, exact
//! policy pricing, worst-case kernels and the uniqueness probe.

use crate::engine;
use crate::model::{Lattice, ModelError, PayoffSpec, PriorFamily, UtilityProfile};
use crate::par;
use crate::pw::{Extend, PwConcave};
use crate::{Error, Result};

use super::onestep::{solve_with_hints, Continuation, SolveOptions, StepProblem};
use super::{
    OptimalPolicy, ProbeReport, RecursionOptions, RobustSolution, WorstCaseMeasure, PROBE_TOL,
};

/// Successor probabilities below this are treated as uncharged by the
/// worst-case measure.
const CHARGE_TOL: f64 = 1e-9;
/// Relative drift allowed between the forward wealth and the node floor
/// before the run is declared broken.
const DRIFT_TOL: f64 = 1e-7;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Deterministic per-solve seed derived from the run seed and solve indices.
fn mix_seed(seed: u64, parts: [u64; 3]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for p in parts {
        h = (h ^ p).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
        h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

fn at_node(e: Error, id: &str) -> Error {
    match e {
        Error::Infeasible(m) => Error::Infeasible(format!("node {id}: {m}")),
        Error::NonConvergence(m) => Error::NonConvergence(format!("node {id}: {m}")),
        other => other,
    }
}

fn validate(
    lattice: &Lattice,
    priors: &PriorFamily,
    utilities: &UtilityProfile,
    opts: &RecursionOptions,
) -> Result<()> {
    if !lattice.is_tree() {
        return Err(Error::Infeasible(
            "optimisation needs a tree lattice: recombining nodes merge paths with \
             different consumption histories"
                .into(),
        ));
    }
    if utilities.horizon() != lattice.horizon() {
        return Err(Error::Model(ModelError::Utility(format!(
            "utility profile covers {} dates, lattice horizon is {}",
            utilities.horizon(),
            lattice.horizon()
        ))));
    }
    if opts.grid_n < 2 {
        return Err(Error::Infeasible(format!(
            "wealth grid needs at least 2 points, got {}",
            opts.grid_n
        )));
    }
    if let Some(w) = opts.w_max {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Infeasible(format!(
                "wealth grid width must be positive, got {w}"
            )));
        }
    }
    for ix in 0..lattice.len() {
        if lattice.is_terminal(ix) {
            continue;
        }
        let node = lattice.node(ix);
        let list = priors.at(ix);
        if list.is_empty() {
            return Err(Error::Model(ModelError::PriorMissing {
                node: node.id.clone(),
            }));
        }
        for p in list {
            if p.len() != node.successors.len() {
                return Err(Error::Model(ModelError::PriorLength {
                    node: node.id.clone(),
                    got: p.len(),
                    expected: node.successors.len(),
                }));
            }
            if p.iter().any(|&w| !w.is_finite() || w < 0.0) {
                return Err(Error::Model(ModelError::NegativeProbability {
                    node: node.id.clone(),
                }));
            }
            let mass: f64 = p.iter().sum();
            if (mass - 1.0).abs() > 1e-9 {
                return Err(Error::Model(ModelError::ProbabilityMass {
                    mass,
                    node: node.id.clone(),
                }));
            }
        }
    }
    Ok(())
}

/// Assemble the one-step problem seen from `ix` with wealth `x`.
fn make_problem<'a>(
    lattice: &Lattice,
    pi: &[f64],
    surfaces: &'a [Option<PwConcave>],
    priors: &PriorFamily,
    utilities: &'a UtilityProfile,
    ix: usize,
    x: f64,
) -> StepProblem<'a> {
    let node = lattice.node(ix);
    let horizon = lattice.horizon();
    let continuations: Vec<Continuation<'a>> = node
        .successors
        .iter()
        .map(|&j| {
            if lattice.is_terminal(j) {
                Continuation::Terminal {
                    utility: utilities.at(horizon),
                    liability: pi[j],
                }
            } else {
                Continuation::Value(
                    surfaces[j]
                        .as_ref()
                        .expect("successor surfaces are sealed before their parents solve"),
                )
            }
        })
        .collect();
    StepProblem {
        current: node.price.clone(),
        successor_prices: node
            .successors
            .iter()
            .map(|&j| lattice.node(j).price.clone())
            .collect(),
        continuations,
        priors: priors.at(ix).to_vec(),
        wealth: x,
        consumption_utility: (node.time >= 1).then(|| utilities.at(node.time)),
    }
}

/// Tabulate the value function at one node over its wealth grid.
fn node_surface(
    lattice: &Lattice,
    pi: &[f64],
    surfaces: &[Option<PwConcave>],
    priors: &PriorFamily,
    utilities: &UtilityProfile,
    ix: usize,
    width: f64,
    opts: &RecursionOptions,
) -> Result<(PwConcave, f64)> {
    let id = &lattice.node(ix).id;
    let floor = pi[ix];
    let n = opts.grid_n;
    let mut prob = make_problem(lattice, pi, surfaces, priors, utilities, ix, floor);
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let mut cert = 0.0f64;
    let mut hint: Vec<(Vec<f64>, f64)> = Vec::new();
    for k in 0..n {
        let x = floor + width * k as f64 / (n - 1) as f64;
        prob.wealth = x;
        let sopts = SolveOptions {
            tol: opts.tol,
            multistarts: opts.multistarts,
            seed: mix_seed(opts.seed, [ix as u64, k as u64, 0]),
            compute_gap: false,
            ..SolveOptions::default()
        };
        let sol = solve_with_hints(&prob, &sopts, &hint).map_err(|e| at_node(e, id))?;
        cert = cert.max(sol.certificate);
        hint = vec![(sol.hedge, sol.consumption)];
        xs.push(x);
        vs.push(sol.value);
    }
    let pw = PwConcave::new(xs, vs, Extend::LastSlope).map_err(|e| {
        Error::NonConvergence(format!(
            "value table at node {id} violates concavity beyond solver tolerance: {e}"
        ))
    })?;
    Ok((pw, cert))
}

/// Robust max-min expected utility of consumption over a tree.
///
/// Backward pass: tabulate every node's value function on a wealth grid of
/// `opts.grid_n` points spanning `[floor, floor + w_max]` above the node's
/// superhedging price.  Forward pass: starting from the root price, re-solve
/// each visited node at its exact wealth, record the policy and worst-case
/// measure, and consume the terminal surplus.  The extracted policy is then
/// priced exactly (minimum over per-node prior selections), giving an
/// independent lower bound that must track the grid value.
pub fn value_recursion(
    lattice: &Lattice,
    payoff: &PayoffSpec,
    priors: &PriorFamily,
    utilities: &UtilityProfile,
    opts: &RecursionOptions,
) -> Result<RobustSolution> {
    validate(lattice, priors, utilities, opts)?;
    let surface = engine::price(lattice, payoff)?;
    let pi = surface.pi;
    let root = lattice.root();
    let horizon = lattice.horizon();
    let width = opts.w_max.unwrap_or_else(|| (pi[root] + 10.0).max(1.0));

    let nn = lattice.len();
    let mut surfaces: Vec<Option<PwConcave>> = vec![None; nn];
    let mut grid_cert = 0.0f64;
    for t in (0..horizon).rev() {
        let slice = lattice.at_time(t);
        let results = par::map(slice, |&ix| {
            node_surface(lattice, &pi, &surfaces, priors, utilities, ix, width, opts)
        });
        for (&ix, res) in slice.iter().zip(results) {
            let (pw, cert) = res?;
            grid_cert = grid_cert.max(cert);
            surfaces[ix] = Some(pw);
        }
    }

    let mut consumption = vec![0.0; nn];
    let mut hedge: Vec<Option<Vec<f64>>> = vec![None; nn];
    let mut wealth = vec![f64::NEG_INFINITY; nn];
    let mut vertex: Vec<Option<usize>> = vec![None; nn];
    let mut mixture: Vec<Option<Vec<f64>>> = vec![None; nn];
    wealth[root] = pi[root];
    let mut value = f64::NAN;
    let mut max_gap = 0.0f64;
    let mut max_cert = grid_cert;
    for t in 0..horizon {
        for &ix in lattice.at_time(t) {
            let id = &lattice.node(ix).id;
            let scale = 1.0 + wealth[ix].abs() + pi[ix].abs();
            if wealth[ix] < pi[ix] - DRIFT_TOL * scale {
                return Err(Error::NonConvergence(format!(
                    "forward wealth {} drifted below the floor {} at node {id}",
                    wealth[ix], pi[ix]
                )));
            }
            let x = wealth[ix].max(pi[ix]);
            let prob = make_problem(lattice, &pi, &surfaces, priors, utilities, ix, x);
            let sopts = SolveOptions {
                tol: opts.tol,
                multistarts: opts.multistarts,
                seed: mix_seed(opts.seed, [ix as u64, u64::MAX, 1]),
                compute_gap: true,
                ..SolveOptions::default()
            };
            let sol = solve_with_hints(&prob, &sopts, &[]).map_err(|e| at_node(e, id))?;
            if t == 0 {
                value = sol.value;
            }
            consumption[ix] = if t >= 1 { sol.consumption } else { 0.0 };
            for (&j, inc) in lattice
                .node(ix)
                .successors
                .iter()
                .zip(lattice.increments(ix))
            {
                wealth[j] = x - consumption[ix] + dot(&sol.hedge, &inc);
            }
            hedge[ix] = Some(sol.hedge);
            vertex[ix] = Some(sol.worst_index);
            mixture[ix] = Some(sol.mixture);
            max_gap = max_gap.max(sol.minimax_gap.unwrap_or(0.0));
            max_cert = max_cert.max(sol.certificate);
        }
    }
    for &leaf in lattice.leaves() {
        let slack = wealth[leaf] - pi[leaf];
        let scale = 1.0 + wealth[leaf].abs() + pi[leaf].abs();
        if slack < -DRIFT_TOL * scale {
            return Err(Error::NonConvergence(format!(
                "terminal wealth misses the liability by {} at node {}",
                -slack,
                lattice.node(leaf).id
            )));
        }
        consumption[leaf] = slack.max(0.0);
    }

    // Exact robust value of the frozen policy: consumption utilities are now
    // constants, so the product-measure minimum factorises node by node.
    let mut rv = vec![0.0f64; nn];
    for t in (0..=horizon).rev() {
        for &ix in lattice.at_time(t) {
            let own = if t == 0 {
                0.0
            } else {
                utilities.at(t).eval_clamped(consumption[ix], 1e-9)
            };
            if lattice.is_terminal(ix) {
                rv[ix] = own;
            } else {
                let succ_rv: Vec<f64> = lattice
                    .node(ix)
                    .successors
                    .iter()
                    .map(|&j| rv[j])
                    .collect();
                let worst = priors
                    .at(ix)
                    .iter()
                    .map(|p| dot(p, &succ_rv))
                    .fold(f64::INFINITY, f64::min);
                rv[ix] = own + worst;
            }
        }
    }

    Ok(RobustSolution {
        value,
        floors: pi,
        surfaces,
        policy: OptimalPolicy {
            consumption,
            hedge,
            wealth,
        },
        worst_case: WorstCaseMeasure { vertex, mixture },
        minimax_gap: max_gap,
        certificate: max_cert,
        policy_robust_value: rv[root],
    })
}

/// Collapse a worst-case measure into a single-kernel prior family: at every
/// non-terminal node the mixture of the prior list found by the saddle
/// search.  Feeding this family back into the optimiser must reproduce the
/// robust value.
pub fn worst_case_kernel(
    lattice: &Lattice,
    priors: &PriorFamily,
    wc: &WorstCaseMeasure,
) -> Result<PriorFamily> {
    let mut lists: Vec<Vec<Vec<f64>>> = vec![Vec::new(); lattice.len()];
    for ix in 0..lattice.len() {
        if lattice.is_terminal(ix) {
            continue;
        }
        let id = &lattice.node(ix).id;
        let mu = wc.mixture[ix].as_ref().ok_or_else(|| {
            Error::Infeasible(format!("worst-case measure has no mixture at node {id}"))
        })?;
        let list = priors.at(ix);
        if mu.len() != list.len() {
            return Err(Error::Infeasible(format!(
                "mixture over {} entries against {} priors at node {id}",
                mu.len(),
                list.len()
            )));
        }
        let arms = lattice.node(ix).successors.len();
        let mut p = vec![0.0; arms];
        for (m, pv) in mu.iter().zip(list.iter()) {
            for (pj, v) in p.iter_mut().zip(pv.iter()) {
                *pj += m * v;
            }
        }
        let mass: f64 = p.iter().sum();
        if mass > 0.0 {
            for v in &mut p {
                *v /= mass;
            }
        }
        lists[ix] = vec![p];
    }
    Ok(PriorFamily::from_lists(lists))
}

/// Nodes reachable from the root with positive probability under the
/// worst-case mixtures of `sol`.
fn charged_set(lattice: &Lattice, priors: &PriorFamily, sol: &RobustSolution) -> Vec<bool> {
    let mut charged = vec![false; lattice.len()];
    charged[lattice.root()] = true;
    for t in 0..lattice.horizon() {
        for &ix in lattice.at_time(t) {
            if !charged[ix] {
                continue;
            }
            let Some(mu) = sol.worst_case.mixture[ix].as_ref() else {
                continue;
            };
            let list = priors.at(ix);
            for (si, &j) in lattice.node(ix).successors.iter().enumerate() {
                let p_mixed: f64 = mu.iter().zip(list.iter()).map(|(m, pv)| m * pv[si]).sum();
                if p_mixed > CHARGE_TOL {
                    charged[j] = true;
                }
            }
        }
    }
    charged
}

/// Run the optimiser twice (normally with different seeds and multistart
/// budgets) and compare what is provably unique: consumption everywhere the
/// worst-case measure charges, and hedge *gains* on charged edges.  Hedges
/// themselves may differ freely orthogonally to the increments.  With
/// utilities that are not strictly concave the comparison is reported but
/// not asserted.
pub fn uniqueness_probe(
    lattice: &Lattice,
    payoff: &PayoffSpec,
    priors: &PriorFamily,
    utilities: &UtilityProfile,
    opts_a: &RecursionOptions,
    opts_b: &RecursionOptions,
) -> Result<(ProbeReport, RobustSolution, RobustSolution)> {
    let a = value_recursion(lattice, payoff, priors, utilities, opts_a)?;
    let b = value_recursion(lattice, payoff, priors, utilities, opts_b)?;
    let charged = charged_set(lattice, priors, &a);

    let mut max_c = 0.0f64;
    let mut max_g = 0.0f64;
    for ix in 0..lattice.len() {
        if !charged[ix] {
            continue;
        }
        max_c = max_c.max((a.policy.consumption[ix] - b.policy.consumption[ix]).abs());
        if lattice.is_terminal(ix) {
            continue;
        }
        let ha = a.policy.hedge[ix].as_ref().expect("policy covers the node");
        let hb = b.policy.hedge[ix].as_ref().expect("policy covers the node");
        for (si, inc) in lattice.increments(ix).iter().enumerate() {
            let j = lattice.node(ix).successors[si];
            if charged[j] {
                max_g = max_g.max((dot(ha, inc) - dot(hb, inc)).abs());
            }
        }
    }

    let guaranteed = utilities.all_strictly_concave();
    let pass = if guaranteed {
        max_c <= PROBE_TOL && max_g <= PROBE_TOL
    } else {
        true
    };
    let note = (!guaranteed)
        .then(|| "uniqueness not guaranteed: utilities are not strictly concave".to_string());
    Ok((
        ProbeReport {
            guaranteed,
            max_consumption_diff: max_c,
            max_charged_gain_diff: max_g,
            pass,
            note,
        },
        a,
        b,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RawNode, Utility1d};

    /// Trinomial tree: factors (1.3, 1.0, 0.75) from s0 over `t_max` periods.
    fn trinomial(t_max: u32, s0: f64) -> Lattice {
        let factors = [1.3, 1.0, 0.75];
        let letters = ["u", "m", "d"];
        let mut raw = Vec::new();
        let mut frontier: Vec<(String, f64)> = vec![("s".to_string(), s0)];
        for t in 0..=t_max {
            let mut next = Vec::new();
            for (id, price) in &frontier {
                let succ: Vec<String> = if t == t_max {
                    Vec::new()
                } else {
                    letters.iter().map(|l| format!("{id}{l}")).collect()
                };
                raw.push(RawNode {
                    id: id.clone(),
                    time: t,
                    price: vec![*price],
                    successors: succ.clone(),
                });
                if t < t_max {
                    for (s, f) in succ.iter().zip(factors.iter()) {
                        next.push((s.clone(), price * f));
                    }
                }
            }
            frontier = next;
        }
        Lattice::assemble(t_max, 1, &[s0], raw, false).unwrap()
    }

    /// Root 2 with children {0, 2, 4}; one period.
    fn three_state() -> Lattice {
        let raw = vec![
            RawNode {
                id: "s".into(),
                time: 0,
                price: vec![2.0],
                successors: vec!["sd".into(), "sm".into(), "su".into()],
            },
            RawNode {
                id: "sd".into(),
                time: 1,
                price: vec![0.0],
                successors: vec![],
            },
            RawNode {
                id: "sm".into(),
                time: 1,
                price: vec![2.0],
                successors: vec![],
            },
            RawNode {
                id: "su".into(),
                time: 1,
                price: vec![4.0],
                successors: vec![],
            },
        ];
        Lattice::assemble(1, 1, &[2.0], raw, false).unwrap()
    }

    fn exp_profile(horizon: u32) -> UtilityProfile {
        UtilityProfile::uniform(Utility1d::exponential(1.0).unwrap(), horizon)
    }

    #[test]
    fn trinomial_policy_tracks_grid_value() {
        let lat = trinomial(2, 4.0);
        let payoff = PayoffSpec::Call { strike: 4.0 };
        let priors = PriorFamily::uniform(&lat, &[vec![0.3, 0.4, 0.3]]).unwrap();
        let utilities = exp_profile(2);
        let opts = RecursionOptions {
            grid_n: 65,
            ..RecursionOptions::default()
        };
        let sol = value_recursion(&lat, &payoff, &priors, &utilities, &opts).unwrap();
        assert!(sol.value > 1e-3, "convex payoff on a trinomial leaves slack");
        assert!(
            (sol.policy_robust_value - sol.value).abs() <= 5e-3,
            "policy value {} vs grid value {}",
            sol.policy_robust_value,
            sol.value
        );
        assert!(sol.minimax_gap <= 1e-6);
        for ix in 0..lat.len() {
            assert!(sol.policy.consumption[ix] >= 0.0);
        }
        for &leaf in lat.leaves() {
            let surplus = sol.policy.wealth[leaf] - sol.policy.consumption[leaf];
            assert!(
                (surplus - sol.floors[leaf]).abs() <= 1e-8,
                "terminal wealth after consumption must hit the liability"
            );
        }
        // value functions are non-decreasing: more wealth never hurts
        let root_surface = sol.surfaces[lat.root()].as_ref().unwrap();
        let (_, vs) = root_surface.breakpoints();
        assert!(vs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn adversarial_vertex_lowers_the_value() {
        let lat = trinomial(2, 4.0);
        let payoff = PayoffSpec::Call { strike: 4.0 };
        let utilities = exp_profile(2);
        let opts = RecursionOptions {
            grid_n: 49,
            ..RecursionOptions::default()
        };
        let single = PriorFamily::uniform(&lat, &[vec![0.3, 0.4, 0.3]]).unwrap();
        let family = PriorFamily::uniform(
            &lat,
            &[vec![0.3, 0.4, 0.3], vec![0.05, 0.05, 0.9]],
        )
        .unwrap();
        let a = value_recursion(&lat, &payoff, &single, &utilities, &opts).unwrap();
        let b = value_recursion(&lat, &payoff, &family, &utilities, &opts).unwrap();
        assert!(
            b.value <= a.value + 1e-9,
            "a larger prior family cannot raise the robust value"
        );
    }

    #[test]
    fn probe_ignores_hedge_freedom_off_the_charged_set() {
        // the middle arm has zero increment and carries all the mass: every
        // hedge in [0,1] is optimal, but its gain on the charged arm is 0
        let lat = three_state();
        let payoff = PayoffSpec::RunningMin;
        let priors = PriorFamily::uniform(&lat, &[vec![0.0, 1.0, 0.0]]).unwrap();
        let utilities = exp_profile(1);
        let opts_a = RecursionOptions {
            grid_n: 33,
            seed: 1,
            ..RecursionOptions::default()
        };
        let opts_b = RecursionOptions {
            grid_n: 33,
            seed: 42,
            multistarts: 9,
            ..RecursionOptions::default()
        };
        let (report, a, b) =
            uniqueness_probe(&lat, &payoff, &priors, &utilities, &opts_a, &opts_b).unwrap();
        assert!(report.guaranteed);
        assert!(report.pass, "{report:?}");
        assert!(report.max_charged_gain_diff <= 1e-9);
        assert!(a.value.abs() <= 1e-6, "no surplus can be consumed: {}", a.value);
        for sol in [&a, &b] {
            let h = sol.policy.hedge[lat.root()].as_ref().unwrap()[0];
            assert!((-1e-6..=1.0 + 1e-6).contains(&h), "hedge {h}");
        }
    }

    #[test]
    fn probe_declines_to_assert_without_strict_concavity() {
        let lat = three_state();
        let payoff = PayoffSpec::RunningMin;
        let priors = PriorFamily::uniform(&lat, &[vec![0.2, 0.6, 0.2]]).unwrap();
        let linearish = Utility1d::piecewise(&[(0.0, 0.0), (10.0, 10.0)]).unwrap();
        let utilities = UtilityProfile::uniform(linearish, 1);
        let opts = RecursionOptions {
            grid_n: 17,
            ..RecursionOptions::default()
        };
        let (report, _, _) =
            uniqueness_probe(&lat, &payoff, &priors, &utilities, &opts, &opts).unwrap();
        assert!(!report.guaranteed);
        assert!(report.pass);
        assert!(report.note.as_deref().unwrap().contains("not strictly concave"));
    }

    #[test]
    fn worst_case_kernel_mixes_the_list() {
        let lat = three_state();
        let payoff = PayoffSpec::RunningMin;
        let priors =
            PriorFamily::uniform(&lat, &[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let utilities = exp_profile(1);
        let opts = RecursionOptions {
            grid_n: 33,
            ..RecursionOptions::default()
        };
        let sol = value_recursion(&lat, &payoff, &priors, &utilities, &opts).unwrap();
        let kernel = worst_case_kernel(&lat, &priors, &sol.worst_case).unwrap();
        let list = kernel.at(lat.root());
        assert_eq!(list.len(), 1);
        let mass: f64 = list[0].iter().sum();
        assert!((mass - 1.0).abs() <= 1e-9);
        for (&m, _) in list[0].iter().zip(0..) {
            assert!(m >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let lat = three_state();
        let payoff = PayoffSpec::RunningMin;
        let priors = PriorFamily::uniform(&lat, &[vec![0.2, 0.6, 0.2]]).unwrap();

        let short_profile = exp_profile(3);
        let err = value_recursion(
            &lat,
            &payoff,
            &priors,
            &short_profile,
            &RecursionOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("horizon"), "{err}");

        let opts = RecursionOptions {
            grid_n: 1,
            ..RecursionOptions::default()
        };
        let err = value_recursion(&lat, &payoff, &priors, &exp_profile(1), &opts).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));

        let lists = PriorFamily::from_lists(vec![
            vec![vec![0.7, 0.7, -0.4]],
            Vec::new(),
            Vec::new(),
            Vec::new(),
        ]);
        let err = value_recursion(
            &lat,
            &payoff,
            &lists,
            &exp_profile(1),
            &RecursionOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Model(ModelError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn more_initial_width_never_hurts_the_surface() {
        // U is non-decreasing in wealth: sampling the root surface at larger
        // wealth gives larger values
        let lat = three_state();
        let payoff = PayoffSpec::RunningMin;
        let priors = PriorFamily::uniform(&lat, &[vec![0.25, 0.5, 0.25]]).unwrap();
        let utilities = exp_profile(1);
        let opts = RecursionOptions {
            grid_n: 41,
            w_max: Some(6.0),
            ..RecursionOptions::default()
        };
        let sol = value_recursion(&lat, &payoff, &priors, &utilities, &opts).unwrap();
        let surf = sol.surfaces[lat.root()].as_ref().unwrap();
        let lo = surf.eval(sol.floors[lat.root()] + 0.5);
        let hi = surf.eval(sol.floors[lat.root()] + 3.0);
        assert!(hi >= lo - 1e-10);
    }
}
