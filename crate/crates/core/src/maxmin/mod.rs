//! Robust consumption-investment optimisation on top of the superhedging
//! layer.
//!
//! At each node the investor holds wealth `x`, withdraws `c ≥ 0` (pinned to
//! zero at time 0), picks a hedge `H`, and faces a finite list of priors over
//! the successor states.  The one-step problem maximises
//!
//! ```text
//! min over priors P of  Σ_i P_i · g_i(x − c + H·ΔS_i)  +  u_t(c)
//! ```
//!
//! over the feasible set `x − c + H·ΔS_i ≥ floor_i` (the superhedging floors
//! keep every continuation solvent), where `g_i` is the successor's value
//! function — or, for terminal successors, utility of the surplus over the
//! liability.  [`one_step_maxmin`] solves this with a certified cutting-plane
//! scheme and also reports the minimax gap against the opposite order of
//! optimisation: the infimum over *mixtures* of the prior list of the best
//! single-measure response.  The infimum must range over the convex hull —
//! over the bare list the two orders genuinely differ.
//!
//! [`value_recursion`] chains these solves backwards over a tree on per-node
//! wealth grids, extracts the optimal policy by a forward pass at exact
//! wealth, prices the policy's exact robust value by a separate recursion,
//! and records the worst-case measure found at every visited node.
//! [`uniqueness_probe`] reruns the whole pipeline under different seeds and
//! checks that consumption and hedge gains agree wherever the worst-case
//! measure charges — the only sense in which optimisers are unique.

mod onestep;
mod recursion;

pub use onestep::{one_step_maxmin, Continuation, SolveOptions, StepProblem};
pub use recursion::{uniqueness_probe, value_recursion, worst_case_kernel};

use crate::pw::PwConcave;

/// Agreement tolerance asserted by the uniqueness probe on consumption and
/// hedge gains across runs.
pub const PROBE_TOL: f64 = 1e-4;

/// Result of a certified one-step solve.
#[derive(Debug, Clone)]
pub struct OneStepSolution {
    /// Robust value: best worst-case expected reward over the prior list.
    pub value: f64,
    /// An optimal hedge (ambient coordinates, minimal-norm in its gain class).
    pub hedge: Vec<f64>,
    /// Optimal withdrawal (zero when consumption is pinned).
    pub consumption: f64,
    /// Index of a prior vector attaining the inner minimum at the optimum.
    pub worst_index: usize,
    /// Mixture over the prior list minimising the best single-measure
    /// response; the worst-case measure in the saddle sense.
    pub mixture: Vec<f64>,
    /// |sup-inf − inf-sup| over the prior hull; `None` when the solve was
    /// asked to skip the hull minimisation.
    pub minimax_gap: Option<f64>,
    /// Largest certified optimality gap among the internal solves.
    pub certificate: f64,
}

/// Parameters of the multi-period value recursion.
#[derive(Debug, Clone)]
pub struct RecursionOptions {
    /// Width of the wealth grid above each node's superhedging floor.
    /// Defaults to the root floor plus 10.
    pub w_max: Option<f64>,
    /// Grid points per node (≥ 2).
    pub grid_n: usize,
    /// Extra random vertex seeds per one-step solve.
    pub multistarts: usize,
    /// Seed for all multistart randomness; fully determines the run.
    pub seed: u64,
    /// Certification tolerance for every one-step solve.
    pub tol: f64,
}

impl Default for RecursionOptions {
    fn default() -> Self {
        RecursionOptions {
            w_max: None,
            grid_n: 129,
            multistarts: 5,
            seed: 0,
            tol: 1e-10,
        }
    }
}

/// The extracted optimal policy, indexed like the lattice nodes.
#[derive(Debug, Clone)]
pub struct OptimalPolicy {
    /// Withdrawal on arrival: zero at the root, the optimal `ĉ` at interior
    /// nodes, the whole surplus over the liability at terminal nodes.
    pub consumption: Vec<f64>,
    /// Hedge held from each non-terminal node over the following step.
    pub hedge: Vec<Option<Vec<f64>>>,
    /// Wealth on arrival at each node, before the withdrawal there.
    pub wealth: Vec<f64>,
}

/// Worst-case measure: at every non-terminal node, the prior-vertex index and
/// the hull mixture attaining the inner minimum at the optimal action.
#[derive(Debug, Clone)]
pub struct WorstCaseMeasure {
    pub vertex: Vec<Option<usize>>,
    pub mixture: Vec<Option<Vec<f64>>>,
}

/// Everything the value recursion produces.
#[derive(Debug, Clone)]
pub struct RobustSolution {
    /// `U_0` at the root superhedging price — the robust value of the model.
    pub value: f64,
    /// Superhedging price per node (the wealth floors of the recursion).
    pub floors: Vec<f64>,
    /// Value function per non-terminal node as a concave piecewise-linear
    /// function of wealth on `[floor, floor + w_max]`.
    pub surfaces: Vec<Option<PwConcave>>,
    pub policy: OptimalPolicy,
    pub worst_case: WorstCaseMeasure,
    /// Largest minimax gap among the forward-pass solves.
    pub minimax_gap: f64,
    /// Largest one-step certificate among the forward-pass solves.
    pub certificate: f64,
    /// Exact robust value of the extracted policy (minimum over product
    /// selections from the prior lists), computed by direct recursion.
    pub policy_robust_value: f64,
}

/// Outcome of running the optimiser twice and comparing the answers.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// True when every utility is strictly concave, which is what makes the
    /// comparison a theorem rather than a hope.
    pub guaranteed: bool,
    /// Largest per-node withdrawal difference on worst-case-charged nodes.
    pub max_consumption_diff: f64,
    /// Largest difference of hedge gains `H·ΔS` on worst-case-charged edges.
    pub max_charged_gain_diff: f64,
    /// Whether the probe asserts agreement (always true when uniqueness is
    /// not guaranteed — then the report is informational).
    pub pass: bool,
    pub note: Option<String>,
}
