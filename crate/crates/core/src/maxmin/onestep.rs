//! Certified one-step robust max-min solves.
//!
//! The objective `φ(H, c) = min_k Σ_i P^k_i g_i(x − c + H·ΔS_i) + u(c)` is a
//! finite minimum of concave functions, maximised over the polytope of
//! solvent actions.  The solver is a cutting-plane loop: every evaluated
//! point contributes one tangent per prior vertex, the master LP maximises
//! the cut envelope over the polytope, and the loop stops when the master
//! bound meets the best evaluated value.  Hedges are reduced to coordinates
//! in the span of the increments first, which makes the polytope compact and
//! the master LP bounded.
//!
//! The same evaluation pool serves the opposite optimisation order: the best
//! single-measure response `G(μ)` for a mixture `μ` of the priors reuses
//! every stored per-vertex value and gradient, so the outer minimisation
//! over the mixture simplex (convex, cut from below by best-response values)
//! converges with few fresh evaluations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lp::{Cmp, LpBuilder, LpStatus};
use crate::model::Utility1d;
use crate::pw::PwConcave;
use crate::span::Span;
use crate::{envelope, Error, Result};

use super::OneStepSolution;

/// Reward earned at a successor state as a function of arrival wealth.
#[derive(Debug, Clone)]
pub enum Continuation<'a> {
    /// Terminal successor: consume the surplus over the liability.
    Terminal {
        utility: &'a Utility1d,
        liability: f64,
    },
    /// Interior successor: tabulated value of wealth.
    Value(&'a PwConcave),
}

impl Continuation<'_> {
    /// Arrival wealth below this makes the successor insolvent.
    fn floor(&self) -> f64 {
        match self {
            Continuation::Terminal { liability, .. } => *liability,
            Continuation::Value(pw) => pw.floor(),
        }
    }

    fn eval(&self, w: f64, tol: f64) -> f64 {
        match self {
            Continuation::Terminal { utility, liability } => {
                utility.eval_clamped(w - liability, tol)
            }
            Continuation::Value(pw) => pw.eval_clamped(w, tol),
        }
    }

    fn slope(&self, w: f64) -> f64 {
        match self {
            Continuation::Terminal { utility, liability } => utility.slope(w - liability),
            Continuation::Value(pw) => pw.slope_at(w),
        }
    }
}

/// A one-step robust optimisation problem.
#[derive(Debug)]
pub struct StepProblem<'a> {
    /// Current price vector.
    pub current: Vec<f64>,
    /// Successor price vectors, one per arm.
    pub successor_prices: Vec<Vec<f64>>,
    /// Reward per arm.
    pub continuations: Vec<Continuation<'a>>,
    /// Finite prior list; each entry is a probability vector over the arms.
    pub priors: Vec<Vec<f64>>,
    /// Wealth before withdrawing.
    pub wealth: f64,
    /// Utility of withdrawing now; `None` pins the withdrawal to zero.
    pub consumption_utility: Option<&'a Utility1d>,
}

/// Knobs of the one-step solver.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Certification tolerance, scaled by `1 + |value|`.
    pub tol: f64,
    /// Cutting-plane iteration cap per solve.
    pub max_iters: usize,
    /// Extra random vertex seeds.
    pub multistarts: usize,
    pub seed: u64,
    /// Also run the mixture-simplex minimisation and report the minimax gap.
    pub compute_gap: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iters: 160,
            multistarts: 5,
            seed: 0,
            compute_gap: true,
        }
    }
}

const MAX_POOL: usize = 140;
const MAX_OUTER: usize = 60;
/// Iterations without meaningful bound progress before the loop gives up.
const STALL_WINDOW: usize = 25;

/// An evaluated action, with enough per-vertex detail to rebuild the
/// objective and its gradient for any prior mixture.
struct EvalPoint {
    /// Coordinates: hedge in the span basis, then the withdrawal if allowed.
    pt: Vec<f64>,
    /// Per prior vertex: `Σ_i P^k_i g_i(w_i)` (without the withdrawal term).
    raw: Vec<f64>,
    /// Per prior vertex: gradient of `raw` w.r.t. `pt`.
    raw_grad: Vec<Vec<f64>>,
    /// Withdrawal utility and its slope at this point.
    ucons: f64,
    ucons_slope: f64,
}

enum Weighting<'m> {
    /// Minimum over the prior vertices (the robust objective).
    VertexMin,
    /// A fixed mixture of the prior list.
    Mixture(&'m [f64]),
}

struct SupOutcome {
    value: f64,
    point: Vec<f64>,
    pool_ix: usize,
    cert: f64,
}

struct Workspace<'p, 'a> {
    prob: &'p StepProblem<'a>,
    span: Span,
    /// Increment coordinates in the span basis, one per arm.
    acoords: Vec<Vec<f64>>,
    floors: Vec<f64>,
    r: usize,
    with_c: bool,
    nvars: usize,
    /// Wealth after the tiny-infeasibility clamp.
    x: f64,
    /// Grace band for continuation evaluations at the floors.
    clamp: f64,
    /// Per-coordinate extent of the feasible polytope (∞ when unknown).
    widths: Vec<f64>,
    pool: Vec<EvalPoint>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}


impl<'p, 'a> Workspace<'p, 'a> {
    fn build(
        prob: &'p StepProblem<'a>,
        opts: &SolveOptions,
        hints: &[(Vec<f64>, f64)],
    ) -> Result<Self> {
        let n = prob.successor_prices.len();
        let d = prob.current.len();
        if n == 0 || prob.continuations.len() != n {
            return Err(Error::Infeasible(format!(
                "one-step problem needs matching arms: {} prices, {} continuations",
                n,
                prob.continuations.len()
            )));
        }
        if prob.priors.is_empty() {
            return Err(Error::Infeasible("one-step problem needs priors".into()));
        }
        for p in &prob.priors {
            if p.len() != n {
                return Err(Error::Infeasible(format!(
                    "prior vector has {} entries for {} arms",
                    p.len(),
                    n
                )));
            }
            let mass: f64 = p.iter().sum();
            if (mass - 1.0).abs() > 1e-9 || p.iter().any(|&q| q < -1e-12) {
                return Err(Error::Infeasible(
                    "prior vectors must be probability vectors".into(),
                ));
            }
        }
        if !prob.wealth.is_finite() {
            return Err(Error::Infeasible("wealth must be finite".into()));
        }

        let floors: Vec<f64> = prob.continuations.iter().map(|c| c.floor()).collect();

        // Solvency precheck doubles as the first seed: the cheapest
        // superhedge of the floors is a feasible hedge whenever any exists.
        let env = envelope::envelope_at(&prob.successor_prices, &floors, &prob.current)?;
        let price_floor = env.value;
        let scale = 1.0 + price_floor.abs().max(prob.wealth.abs());
        if prob.wealth < price_floor - 1e-12 * scale {
            return Err(Error::Infeasible(format!(
                "wealth {} is below the superhedging floor {}",
                prob.wealth, price_floor
            )));
        }
        let x = prob.wealth.max(price_floor);

        let incs = crate::model::snapped_increments(&prob.successor_prices, &prob.current);
        let span = Span::of(&incs, d);
        let r = span.rank();
        let acoords: Vec<Vec<f64>> = incs.iter().map(|v| span.coords(v)).collect();
        let with_c = prob.consumption_utility.is_some();
        let nvars = r + usize::from(with_c);

        let wscale = 1.0
            + x.abs()
            + floors.iter().fold(0.0f64, |a, &f| a.max(f.abs()));
        let mut ws = Workspace {
            prob,
            span,
            acoords,
            floors,
            r,
            with_c,
            nvars,
            x,
            clamp: 1e-6 * wscale,
            widths: vec![f64::INFINITY; nvars],
            pool: Vec::new(),
        };

        // Coordinate extents of the feasible polytope, used by the master to
        // recognise cut-gradient components with negligible reach.  A failed
        // extent solve leaves the width infinite, disabling that coordinate's
        // snapping — never wrong, just less robust.
        for jdim in 0..ws.nvars {
            let mut obj = vec![0.0; ws.nvars];
            obj[jdim] = 1.0;
            let hi = ws.polytope_vertex(&obj)?.map(|p| p[jdim]);
            obj[jdim] = -1.0;
            let lo = ws.polytope_vertex(&obj)?.map(|p| p[jdim]);
            if let (Some(h), Some(l)) = (hi, lo) {
                ws.widths[jdim] = (h - l).max(0.0);
            }
        }

        // Seeds: the superhedge hedge, random polytope vertices, caller hints.
        let mut z0 = ws.span.coords(&env.hedge);
        z0.resize(ws.nvars, 0.0);
        ws.insert(z0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.multistarts {
            let objective: Vec<f64> = (0..ws.nvars).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if let Some(v) = ws.polytope_vertex(&objective)? {
                ws.insert(v)?;
            }
        }
        for (hedge, c) in hints {
            let mut pt = ws.span.coords(hedge);
            if ws.with_c {
                pt.push(c.max(0.0));
            }
            if ws.feasible(&pt) {
                ws.insert(pt)?;
            }
        }
        Ok(ws)
    }

    fn feasible(&self, pt: &[f64]) -> bool {
        let c = if self.with_c { pt[self.r] } else { 0.0 };
        if c < 0.0 {
            return false;
        }
        self.acoords
            .iter()
            .zip(self.floors.iter())
            .all(|(a, &lo)| self.x - c + dot(&pt[..self.r], a) >= lo - self.clamp)
    }

    /// Maximise a linear objective over the feasible polytope.
    fn polytope_vertex(&self, objective: &[f64]) -> Result<Option<Vec<f64>>> {
        let mut nonneg = vec![false; self.nvars];
        if self.with_c {
            nonneg[self.r] = true;
        }
        let mut lp = LpBuilder::new(objective.to_vec(), nonneg);
        for (a, &lo) in self.acoords.iter().zip(self.floors.iter()) {
            let mut row = vec![0.0; self.nvars];
            row[..self.r].copy_from_slice(a);
            if self.with_c {
                row[self.r] = -1.0;
            }
            lp.row(row, Cmp::Ge, lo - self.x);
        }
        let sol = lp.solve().map_err(Error::Lp)?;
        if sol.status != LpStatus::Optimal {
            eprintln!("TRACE master status={:?} x={} dump {lp:?}", sol.status, self.x);
        }
        match sol.status {
            LpStatus::Optimal => Ok(Some(sol.primal)),
            _ => Ok(None),
        }
    }

    /// Evaluate an action and append it to the pool.  Returns its index, or
    /// `None` when a continuation is insolvent beyond the grace band.
    fn insert(&mut self, pt: Vec<f64>) -> Result<Option<usize>> {
        if let Some(existing) = self.pool.iter().rposition(|p| p.pt == pt) {
            return Ok(Some(existing));
        }
        let kk = self.prob.priors.len();
        let c = if self.with_c { pt[self.r].max(0.0) } else { 0.0 };
        let mut vals = Vec::with_capacity(self.acoords.len());
        let mut slopes = Vec::with_capacity(self.acoords.len());
        for (a, cont) in self.acoords.iter().zip(self.prob.continuations.iter()) {
            let w = self.x - c + dot(&pt[..self.r], a);
            let v = cont.eval(w, self.clamp);
            if !v.is_finite() {
                return Ok(None);
            }
            vals.push(v);
            slopes.push(cont.slope(w.max(cont.floor())));
        }
        let mut raw = Vec::with_capacity(kk);
        let mut raw_grad = Vec::with_capacity(kk);
        for p in &self.prob.priors {
            raw.push(dot(p, &vals));
            let mut g = vec![0.0; self.nvars];
            for ((pi, a), sl) in p.iter().zip(self.acoords.iter()).zip(slopes.iter()) {
                for (gj, aj) in g[..self.r].iter_mut().zip(a.iter()) {
                    *gj += pi * sl * aj;
                }
                if self.with_c {
                    g[self.r] -= pi * sl;
                }
            }
            raw_grad.push(g);
        }
        let (ucons, ucons_slope) = match self.prob.consumption_utility {
            Some(u) => (u.eval(c), u.slope(c)),
            None => (0.0, 0.0),
        };
        if !ucons.is_finite() {
            return Ok(None);
        }
        self.pool.push(EvalPoint {
            pt,
            raw,
            raw_grad,
            ucons,
            ucons_slope,
        });
        if self.pool.len() > MAX_POOL {
            self.pool.drain(..self.pool.len() - MAX_POOL / 2);
        }
        Ok(Some(self.pool.len() - 1))
    }

    /// Objective value of a pooled point under a weighting.
    fn composed(&self, j: usize, mode: &Weighting) -> f64 {
        let p = &self.pool[j];
        let base = match mode {
            Weighting::VertexMin => p.raw.iter().cloned().fold(f64::INFINITY, f64::min),
            Weighting::Mixture(mu) => dot(mu, &p.raw),
        };
        base + p.ucons
    }

    /// Direct (pool-free) objective evaluation, used by the polish passes.
    fn direct(&self, pt: &[f64], mode: &Weighting) -> f64 {
        let c = if self.with_c { pt[self.r].max(0.0) } else { 0.0 };
        let mut vals = Vec::with_capacity(self.acoords.len());
        for (a, cont) in self.acoords.iter().zip(self.prob.continuations.iter()) {
            let w = self.x - c + dot(&pt[..self.r], a);
            let v = cont.eval(w, self.clamp);
            if !v.is_finite() {
                return f64::NEG_INFINITY;
            }
            vals.push(v);
        }
        let base = match mode {
            Weighting::VertexMin => self
                .prob
                .priors
                .iter()
                .map(|p| dot(p, &vals))
                .fold(f64::INFINITY, f64::min),
            Weighting::Mixture(mu) => {
                let mut acc = 0.0;
                for (m, p) in mu.iter().zip(self.prob.priors.iter()) {
                    acc += m * dot(p, &vals);
                }
                acc
            }
        };
        base + match self.prob.consumption_utility {
            Some(u) => u.eval(c),
            None => 0.0,
        }
    }

    /// Solve the cut-envelope master LP: maximise θ over the polytope subject
    /// to every tangent cut in the pool.  Returns `(θ*, argmax point, slack)`,
    /// where `slack` bounds how far cut flattening may have lifted θ* — an
    /// honest floor on the gap this model can still certify.
    fn master(&self, mode: &Weighting) -> Result<Option<(f64, Vec<f64>, f64)>> {
        let nv = self.nvars;
        let mut objective = vec![0.0; nv + 1];
        objective[nv] = 1.0;
        let mut nonneg = vec![false; nv + 1];
        if self.with_c {
            nonneg[self.r] = true;
        }
        let mut lp = LpBuilder::new(objective, nonneg);
        for (a, &lo) in self.acoords.iter().zip(self.floors.iter()) {
            let mut row = vec![0.0; nv + 1];
            row[..self.r].copy_from_slice(a);
            if self.with_c {
                row[self.r] = -1.0;
            }
            lp.row(row, Cmp::Ge, lo - self.x);
        }
        let mut max_slack = 0.0f64;
        let mut cut = |val: f64, grad_raw: &[f64], ucons_slope: f64, pt: &[f64]| {
            // θ ≤ val + g·(· − pt)  ⇔  θ − g·(·) ≤ val − g·pt
            let mut g = grad_raw.to_vec();
            if self.with_c {
                g[self.r] += ucons_slope;
            }
            // Gradient components whose reach across the whole polytope is far
            // below the convergence certificate become exact zeros, with the
            // bound |g_j|·width_j moved into the right-hand side to keep the
            // cut an overestimate.  Saturated utility tails and near-peak
            // tangent noise otherwise leave near-zero coefficients against
            // O(1) solvency entries, which is exactly the mixed-magnitude
            // pattern the tableau cannot pivot cleanly.
            let mut slack = 0.0;
            let budget = 1e-7 * (1.0 + val.abs()) / self.nvars as f64;
            for (gj, &w) in g.iter_mut().zip(self.widths.iter()) {
                let reach = gj.abs() * w;
                if reach <= budget && *gj != 0.0 {
                    slack += reach;
                    *gj = 0.0;
                }
            }
            max_slack = max_slack.max(slack);
            let mut row = vec![0.0; nv + 1];
            for (rj, gj) in row[..nv].iter_mut().zip(g.iter()) {
                *rj = -gj;
            }
            row[nv] = 1.0;
            (row, val - dot(&g, pt) + slack)
        };
        // Kelley iterates cluster around the peak; cuts from actions closer
        // than `sep` are numerically parallel rows that break the tableau's
        // pivot tolerances.  Keep the newest representative of each cluster —
        // dropping a cut only loosens the model, so the bound stays valid.
        let scale = self
            .pool
            .iter()
            .flat_map(|p| p.pt.iter())
            .fold(1.0f64, |a, &x| a.max(x.abs()));
        let sep = 1e-6 * scale;
        let mut keep: Vec<&EvalPoint> = Vec::with_capacity(self.pool.len());
        for p in self.pool.iter().rev() {
            let distinct = keep
                .iter()
                .all(|q| q.pt.iter().zip(p.pt.iter()).any(|(a, b)| (a - b).abs() > sep));
            if distinct {
                keep.push(p);
            }
        }
        for p in keep {
            match mode {
                Weighting::VertexMin => {
                    for (raw, grad) in p.raw.iter().zip(p.raw_grad.iter()) {
                        let (row, rhs) = cut(raw + p.ucons, grad, p.ucons_slope, &p.pt);
                        lp.row(row, Cmp::Le, rhs);
                    }
                }
                Weighting::Mixture(mu) => {
                    let val = dot(mu, &p.raw) + p.ucons;
                    let mut grad = vec![0.0; self.nvars];
                    for (m, g) in mu.iter().zip(p.raw_grad.iter()) {
                        for (gj, gg) in grad.iter_mut().zip(g.iter()) {
                            *gj += m * gg;
                        }
                    }
                    let (row, rhs) = cut(val, &grad, p.ucons_slope, &p.pt);
                    lp.row(row, Cmp::Le, rhs);
                }
            }
        }
        let sol = lp.solve().map_err(Error::Lp)?;
        if sol.status != LpStatus::Optimal {
            eprintln!("TRACE master status={:?} x={} dump {lp:?}", sol.status, self.x);
        }
        match sol.status {
            LpStatus::Optimal => {
                let mut pt = sol.primal[..nv].to_vec();
                if self.with_c {
                    // The solver certifies consumption to a signed tolerance;
                    // downstream it must be exactly non-negative.
                    pt[self.r] = pt[self.r].max(0.0);
                }
                Ok(Some((sol.value, pt, max_slack)))
            }
            LpStatus::Infeasible => Err(Error::Infeasible(
                "no solvent action exists at this wealth".into(),
            )),
            LpStatus::Unbounded => Err(Error::NonConvergence(
                "cut master is unbounded; increments do not pin the hedge".into(),
            )),
            LpStatus::NumericalFailure => Ok(None),
        }
    }

    /// Golden-section maximisation of the objective along the withdrawal at a
    /// fixed hedge, then (for one-dimensional spans) along the hedge.
    fn polish(&mut self, best: &mut SupOutcome, mode: &Weighting) -> Result<()> {
        for _ in 0..2 {
            if self.with_c {
                let z = best.point[..self.r].to_vec();
                let mut hi = f64::INFINITY;
                for (a, &lo) in self.acoords.iter().zip(self.floors.iter()) {
                    hi = hi.min(self.x - lo + dot(&z, a));
                }
                if hi.is_finite() && hi > 0.0 {
                    let f = |c: f64| {
                        let mut pt = z.clone();
                        pt.push(c);
                        self.direct(&pt, mode)
                    };
                    let (c_star, v) = golden_max(0.0, hi, 90, &f);
                    let mut pt = z.clone();
                    pt.push(c_star);
                    self.adopt(pt, v, best, mode)?;
                }
            }
            if self.r == 1 {
                let c = if self.with_c { best.point[self.r] } else { 0.0 };
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                let mut ok = true;
                for (a, &fl) in self.acoords.iter().zip(self.floors.iter()) {
                    let a0 = a[0];
                    let bound = fl - self.x + c;
                    if a0 > 1e-12 {
                        lo = lo.max(bound / a0);
                    } else if a0 < -1e-12 {
                        hi = hi.min(bound / a0);
                    } else if bound > self.clamp {
                        ok = false;
                    }
                }
                if ok && lo.is_finite() && hi.is_finite() && hi >= lo {
                    let f = |z: f64| {
                        let mut pt = vec![z];
                        if self.with_c {
                            pt.push(c);
                        }
                        self.direct(&pt, mode)
                    };
                    let (z_star, v) = golden_max(lo, hi, 90, &f);
                    let mut pt = vec![z_star];
                    if self.with_c {
                        pt.push(c);
                    }
                    self.adopt(pt, v, best, mode)?;
                }
            }
        }
        Ok(())
    }

    fn adopt(
        &mut self,
        pt: Vec<f64>,
        value: f64,
        best: &mut SupOutcome,
        mode: &Weighting,
    ) -> Result<()> {
        if let Some(ix) = self.insert(pt)? {
            let v = self.composed(ix, mode);
            debug_assert!((v - value).abs() <= 1e-9 * (1.0 + value.abs()));
            if v >= best.value {
                best.value = v;
                best.point = self.pool[ix].pt.clone();
                best.pool_ix = ix;
            }
        }
        Ok(())
    }

    /// Cutting-plane maximisation of the composed objective.
    fn solve_sup(&mut self, mode: &Weighting, opts: &SolveOptions) -> Result<SupOutcome> {
        let mut best = SupOutcome {
            value: f64::NEG_INFINITY,
            point: Vec::new(),
            pool_ix: usize::MAX,
            cert: f64::INFINITY,
        };
        for j in 0..self.pool.len() {
            let v = self.composed(j, mode);
            if v > best.value {
                best.value = v;
                best.point = self.pool[j].pt.clone();
                best.pool_ix = j;
            }
        }
        if !best.value.is_finite() {
            return Err(Error::NonConvergence(
                "no feasible evaluation point survived seeding".into(),
            ));
        }
        // A line-search pass up front hands the master a tangent cut at (or
        // near) the peak, which collapses one-dimensional instances quickly.
        self.polish(&mut best, mode)?;

        let mut ub = f64::INFINITY;
        let mut stall = 0usize;
        let mut master_failures = 0usize;
        for _ in 0..opts.max_iters {
            let Some((theta, pt, snap_slack)) = self.master(mode)? else {
                // Numerically bad master: tighten the cut model near the
                // incumbent and retry on a different LP, a few times.
                master_failures += 1;
                if master_failures > 3 {
                    break;
                }
                self.polish(&mut best, mode)?;
                continue;
            };
            let prev_gap = ub - best.value;
            ub = ub.min(theta);
            // Cut flattening caps how small a gap this model can prove;
            // grinding below that floor only reproduces the same θ*.
            let brk = opts.tol * (1.0 + best.value.abs()) + snap_slack;
            if ub - best.value <= brk {
                break;
            }
            match self.insert(pt.clone())? {
                Some(ix) => {
                    let v = self.composed(ix, mode);
                    if v > best.value {
                        best.value = v;
                        best.point = self.pool[ix].pt.clone();
                        best.pool_ix = ix;
                    }
                }
                None => {
                    // Insolvent beyond the grace band: pull towards the best
                    // point and try once; then give up on this direction.
                    let mid: Vec<f64> = pt
                        .iter()
                        .zip(best.point.iter())
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect();
                    if let Some(ix) = self.insert(mid)? {
                        let v = self.composed(ix, mode);
                        if v > best.value {
                            best.value = v;
                            best.point = self.pool[ix].pt.clone();
                            best.pool_ix = ix;
                        }
                    } else {
                        break;
                    }
                }
            }
            let gap = ub - best.value;
            if gap <= brk {
                break;
            }
            if gap > 0.9 * prev_gap {
                stall += 1;
                if stall >= 3 {
                    // Plain cutting planes zigzag on smooth objectives; a
                    // line-search pass pins the peak and donates tight cuts.
                    self.polish(&mut best, mode)?;
                }
                if stall >= STALL_WINDOW {
                    break;
                }
            } else {
                stall = 0;
            }
        }
        self.polish(&mut best, mode)?;
        best.cert = (ub - best.value).max(0.0);
        let loose = (1e-6f64).max(1e3 * opts.tol) * (1.0 + best.value.abs());
        if best.cert > loose {
            return Err(Error::NonConvergence(format!(
                "one-step solve stalled with certified gap {} (value {}, wealth {})",
                best.cert, best.value, self.x
            )));
        }
        // Refresh the pool index in case pruning moved the best point.
        if best.pool_ix >= self.pool.len() || self.pool[best.pool_ix].pt != best.point {
            match self.pool.iter().position(|p| p.pt == best.point) {
                Some(ix) => best.pool_ix = ix,
                None => match self.insert(best.point.clone())? {
                    Some(ix) => best.pool_ix = ix,
                    None => {
                        return Err(Error::NonConvergence(
                            "best point became insolvent on re-evaluation".into(),
                        ))
                    }
                },
            }
        }
        Ok(best)
    }

    /// Best response to a fixed mixture.  Returns `(mixture, value,
    /// per-vertex values at the maximiser, certified gap)`; the per-vertex
    /// values are a subgradient of `μ ↦ G(μ)` by the envelope theorem.
    fn best_response(
        &mut self,
        mu: Vec<f64>,
        opts: &SolveOptions,
    ) -> Result<(Vec<f64>, f64, Vec<f64>, f64)> {
        let r = self.solve_sup(&Weighting::Mixture(&mu), opts)?;
        let p = &self.pool[r.pool_ix];
        let subgrad: Vec<f64> = p.raw.iter().map(|rw| rw + p.ucons).collect();
        Ok((mu, r.value, subgrad, r.cert))
    }

    /// Minimise the best-response value over the mixture simplex.  Returns
    /// the minimising mixture, its value and the certified outer gap.
    fn solve_inf_sup(&mut self, opts: &SolveOptions) -> Result<(Vec<f64>, f64, f64)> {
        let kk = self.prob.priors.len();
        if kk == 1 {
            let r = self.solve_sup(&Weighting::Mixture(&[1.0]), opts)?;
            return Ok((vec![1.0], r.value, r.cert));
        }
        // (mixture, best-response value, subgradient)
        let mut evals: Vec<(Vec<f64>, f64, Vec<f64>)> = Vec::new();
        let mut inner_cert = 0.0f64;
        let first = self.best_response(vec![1.0 / kk as f64; kk], opts)?;
        inner_cert = inner_cert.max(first.3);
        evals.push((first.0, first.1, first.2));

        let mut lb = f64::NEG_INFINITY;
        for _ in 0..MAX_OUTER {
            let ub = evals
                .iter()
                .map(|e| e.1)
                .fold(f64::INFINITY, f64::min);
            // master: minimise t over the simplex, t ≥ every tangent from below
            let mut objective = vec![0.0; kk + 1];
            objective[kk] = -1.0;
            let mut nonneg = vec![true; kk + 1];
            nonneg[kk] = false;
            let mut lp = LpBuilder::new(objective, nonneg);
            lp.row(
                (0..=kk).map(|i| if i < kk { 1.0 } else { 0.0 }).collect(),
                Cmp::Eq,
                1.0,
            );
            for (mu_j, g_j, sg_j) in &evals {
                let mut row = vec![0.0; kk + 1];
                for (rj, s) in row[..kk].iter_mut().zip(sg_j.iter()) {
                    *rj = -s;
                }
                row[kk] = 1.0;
                lp.row(row, Cmp::Ge, g_j - dot(sg_j, mu_j));
            }
            let sol = lp.solve().map_err(Error::Lp)?;
            if sol.status != LpStatus::Optimal {
                break;
            }
            lb = lb.max(-sol.value);
            if ub - lb <= opts.tol.max(1e-9) * (1.0 + ub.abs()) {
                break;
            }
            let mut mu: Vec<f64> = sol.primal[..kk].iter().map(|&m| m.max(0.0)).collect();
            let mass: f64 = mu.iter().sum();
            if mass > 0.0 {
                for m in &mut mu {
                    *m /= mass;
                }
            } else {
                mu = vec![1.0 / kk as f64; kk];
            }
            let next = self.best_response(mu, opts)?;
            inner_cert = inner_cert.max(next.3);
            evals.push((next.0, next.1, next.2));
        }
        let (best_mu, best_val, _) = evals
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite best responses"))
            .expect("at least one mixture evaluated")
            .clone();
        let outer_gap = if lb.is_finite() {
            (best_val - lb).max(0.0)
        } else {
            0.0
        };
        Ok((best_mu, best_val, outer_gap.max(inner_cert)))
    }
}

/// Golden-section search for the maximum of a concave function on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, iters: usize, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if !(hi > lo) {
        return (lo, f(lo));
    }
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Solve a one-step robust max-min problem with certificates.
///
/// Returns the robust value (worst case over the prior list), an optimal
/// action, the worst prior vertex and hull mixture, and — unless disabled —
/// the minimax gap between the two optimisation orders.
pub fn one_step_maxmin(prob: &StepProblem, opts: &SolveOptions) -> Result<OneStepSolution> {
    solve_with_hints(prob, opts, &[])
}

/// [`one_step_maxmin`] with warm-start actions `(hedge, withdrawal)`.
pub(crate) fn solve_with_hints(
    prob: &StepProblem,
    opts: &SolveOptions,
    hints: &[(Vec<f64>, f64)],
) -> Result<OneStepSolution> {
    let mut ws = Workspace::build(prob, opts, hints)?;
    let sup = ws.solve_sup(&Weighting::VertexMin, opts)?;
    let raws = &ws.pool[sup.pool_ix].raw;
    let worst_index = raws
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite vertex values"))
        .map(|(k, _)| k)
        .expect("non-empty prior list");

    let (mixture, minimax_gap, outer_cert) = if opts.compute_gap {
        let (mu, inf_sup, cert) = ws.solve_inf_sup(opts)?;
        (mu, Some((inf_sup - sup.value).abs()), cert)
    } else {
        let mut e = vec![0.0; prob.priors.len()];
        e[worst_index] = 1.0;
        (e, None, 0.0)
    };

    let hedge = ws.span.from_coords(&sup.point[..ws.r]);
    let consumption = if ws.with_c { sup.point[ws.r].max(0.0) } else { 0.0 };
    Ok(OneStepSolution {
        value: sup.value,
        hedge,
        consumption,
        worst_index,
        mixture,
        minimax_gap,
        certificate: sup.cert.max(outer_cert),
    })
}
