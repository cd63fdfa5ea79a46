//! Robust superhedging on finite scenario lattices.
//!
//! The library prices a contingent claim under model uncertainty described by
//! a finite tree of price scenarios, and recovers the cheapest superhedging
//! strategy together with the consumption (withdrawal) stream it affords.
//! On top of the pricing layer it solves the robust consumption-investment
//! problem: maximise, over hedges and consumption plans financed by the
//! superhedging capital, the worst-case expected utility over a finite family
//! of priors attached to every node.
//!
//! Pipeline, bottom to top:
//!
//! * [`lp`] — self-contained dense two-phase simplex used by every layer.
//! * [`model`] — scenario lattices, payoffs, prior families, utilities, JSON I/O.
//! * [`na`] — one-step no-arbitrage checks with explicit certificates.
//! * [`envelope`] — one-step concave envelope: primal hedge LP vs. dual
//!   martingale-weight LP, solved and cross-checked per node.
//! * [`engine`] — backward induction for the price surface, minimal hedge plan,
//!   consumption extraction and path-wise verification.
//! * [`maxmin`] — robust utility optimisation: certified one-step max-min
//!   solves, wealth-grid value recursion, worst-case measure and policy
//!   extraction, uniqueness probing.
//!
//! Node-level work within a time slice is independent; with the `parallel`
//! feature (default) those loops run on rayon, otherwise sequentially.

pub mod envelope;
pub mod engine;
pub mod lp;
pub mod maxmin;
pub mod model;
pub mod na;
mod par;
pub mod pw;
mod span;

pub use engine::{HedgePlan, PriceSurface, VerifyReport};
pub use envelope::EnvelopeResult;
pub use maxmin::{OneStepSolution, OptimalPolicy, RobustSolution, WorstCaseMeasure};
pub use model::{Lattice, PayoffSpec, PriorFamily, UtilityProfile};
pub use na::NaReport;
pub use par::configure_threads;

/// Crate-wide error type.
///
/// Variants map onto the process exit codes used by the CLI: model problems
/// are validation failures, `Arbitrage` is the dedicated no-arbitrage failure,
/// and LP/optimizer breakdowns surface as non-convergence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    /// One-step no-arbitrage fails somewhere on the lattice; the report lists
    /// every offending node with an arbitrage certificate.
    #[error("arbitrage detected at node(s): {}", .0.failing_ids().join(", "))]
    Arbitrage(na::NaReport),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    /// An iterative solve stopped without reaching its certificate tolerance.
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    /// A request is inconsistent with the model (e.g. wealth below the
    /// superhedging price, missing priors or utilities).
    #[error("infeasible request: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
