//! Dense two-phase simplex for the small linear programs that drive every
//! layer above: no-arbitrage certificates, one-step envelope solves and the
//! cutting-plane masters of the robust utility optimiser.
//!
//! The kernel is deliberately self-contained: problems here are tiny (tens of
//! rows), arrive in bursts, and the rest of the crate relies on bitwise
//! reproducible answers and certified optimality.  Bland's rule makes the
//! pivot sequence deterministic and cycle-free, and every optimal answer is
//! re-checked against primal feasibility, dual feasibility and strong duality
//! before it is returned; anything that fails those checks is reported as a
//! numerical failure rather than passed along.

use thiserror::Error;

/// Pivot entries smaller than this are treated as zero; a forced pivot below
/// the floor is a numerical breakdown.
pub const PIVOT_FLOOR: f64 = 1e-13;

/// A column whose largest tableau entry falls below this fraction of its
/// original infinity-norm is treated as numerically annihilated (roughly the
/// square root of machine epsilon, the cancellation noise floor of a couple
/// of eliminations against O(1) coefficients).
const DUST_REL: f64 = 1e-7;
/// Feasibility / optimality tolerance for the certification checks.
pub const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for entering-variable selection.
const COST_TOL: f64 = 1e-11;
/// Hard cap on simplex pivots (either phase); tripping it is a failure.
const MAX_PIVOTS: usize = 100_000;

/// Equality-form linear program: maximise `objective . x` subject to
/// `rows[i] . x = rhs[i]` and `x[j] >= 0` wherever `nonneg[j]` is set
/// (remaining variables are free).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub nonneg: Vec<bool>,
}

/// Outcome classification for a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot sequence broke down numerically or the candidate answer
    /// failed its optimality certificate.  Never a silently wrong answer.
    NumericalFailure,
}

/// Solver answer.  `value`, `primal` and `dual` are meaningful only when
/// `status == Optimal`; `dual` carries one multiplier per input row.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        LpSolution {
            status,
            value: f64::NAN,
            primal: Vec::new(),
            dual: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Structural problems with the LP input (as opposed to solve outcomes,
/// which are reported through [`LpStatus`]).
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("lp dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lp input contains a non-finite number")]
    NonFinite,
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.objective.len();
    if lp.nonneg.len() != n {
        return Err(LpError::DimensionMismatch(format!(
            "{} objective coefficients but {} sign flags",
            n,
            lp.nonneg.len()
        )));
    }
    if lp.rows.len() != lp.rhs.len() {
        return Err(LpError::DimensionMismatch(format!(
            "{} rows but {} right-hand sides",
            lp.rows.len(),
            lp.rhs.len()
        )));
    }
    for row in &lp.rows {
        if row.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "row has {} coefficients, expected {}",
                row.len(),
                n
            )));
        }
    }
    let finite = lp
        .objective
        .iter()
        .chain(lp.rhs.iter())
        .chain(lp.rows.iter().flatten())
        .all(|v| v.is_finite());
    if !finite {
        return Err(LpError::NonFinite);
    }
    Ok(())
}

/// Dense simplex tableau over the transformed (split + artificial) columns.
struct Tableau {
    m: usize,
    /// structural columns (after splitting free variables)
    n_struct: usize,
    /// column-major is unnecessary at this scale; rows of length n_struct + m + 1
    /// (artificials, then rhs in the last slot)
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// reduced-cost row, length n_struct + m + 1 (last slot = objective value)
    cost: Vec<f64>,
    /// original infinity-norm of each column, for recognising columns whose
    /// tableau image has collapsed to cancellation residue
    scale: Vec<f64>,
    /// per-row infeasibility allowance for the ratio test, matching the
    /// tolerance the optimality certificate applies at the end
    eps: f64,
}

impl Tableau {
    fn n_cols(&self) -> usize {
        self.n_struct + self.m
    }

    fn rhs(&self, i: usize) -> f64 {
        let w = self.rows[i].len();
        self.rows[i][w - 1]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.rows[row].len();
        let p = self.rows[row][col];
        let inv = 1.0 / p;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        self.rows[row][col] = 1.0;
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for k in 0..w {
                    let d = self.rows[row][k];
                    if d != 0.0 {
                        self.rows[i][k] -= f * d;
                    }
                }
                self.rows[i][col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for k in 0..w {
                let d = self.rows[row][k];
                if d != 0.0 {
                    self.cost[k] -= f * d;
                }
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Rebuild the reduced-cost row for objective `c` (length n_cols) from the
    /// current basis: cost[j] = c_j - sum_i c_B(i) * T[i][j].
    fn set_objective(&mut self, c: &[f64]) {
        let w = self.n_cols() + 1;
        let mut cost = vec![0.0; w];
        cost[..self.n_cols()].copy_from_slice(c);
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for k in 0..w {
                    cost[k] -= cb * self.rows[i][k];
                }
            }
        }
        self.cost = cost;
    }

    /// Rebuild every tableau column from the original data for the current
    /// basis (one LU factorisation of the basis matrix, one solve per
    /// column), then re-derive the reduced-cost row.  The incremental
    /// updates in `pivot` accumulate rounding from every elimination on the
    /// pivot path; a refactorisation discards that history, which is what
    /// lets suspicious conclusions (rays, stalls) be re-examined on clean
    /// numbers.  `false` when the basis matrix cannot be factored.
    fn refresh(&mut self, orig: &[Vec<f64>], c: &[f64]) -> bool {
        let bmat: Vec<Vec<f64>> = (0..self.m)
            .map(|r| self.basis.iter().map(|&col| orig[r][col]).collect())
            .collect();
        let Some(f) = lu_factor(bmat) else {
            return false;
        };
        let w = self.n_cols() + 1;
        let mut fresh = vec![vec![0.0; w]; self.m];
        let mut col = vec![0.0; self.m];
        for j in 0..w {
            for (i, cv) in col.iter_mut().enumerate() {
                *cv = orig[i][j];
            }
            let t = f.solve(&col);
            if t.iter().any(|v| !v.is_finite()) {
                return false;
            }
            for i in 0..self.m {
                fresh[i][j] = t[i];
            }
        }
        self.rows = fresh;
        self.set_objective(c);
        true
    }

    /// Pivot to optimality for the current cost row.  `allowed` marks
    /// columns permitted to enter the basis.  `dust` is set when an
    /// apparently improving column had to be passed over because its
    /// tableau image has degenerated; "optimal" then means "stalled", and
    /// the caller must not draw structural conclusions (like infeasibility)
    /// from it -- the final certificate arbitrates instead.
    fn optimize(
        &mut self,
        allowed: &[bool],
        budget: &mut usize,
        dust: &mut bool,
        orig: &[Vec<f64>],
        cvec: &[f64],
    ) -> LpStatus {
        // Set after a refactorisation and cleared by the next pivot: a
        // conclusion is only allowed to stand when the tableau backing it is
        // freshly rebuilt from the original data.
        let mut fresh = false;
        loop {
            // Entering: the lowest-index allowed column with positive
            // reduced cost that survives two hygiene screens.  A column
            // whose entries have all collapsed far below the column's
            // original magnitude is cancellation residue; one whose only
            // blocking entries sit below the trust floor would force a pivot
            // that amplifies rounding noise by the reciprocal of a dust
            // entry.  Either way the advertised improvement is itself noise,
            // so the column is skipped rather than treated as a ray: in
            // exact arithmetic a positive-cost column with no blocker is
            // unbounded, but a noise-cost column with dust blockers is not
            // evidence of anything.
            let mut chosen: Option<(usize, usize)> = None;
            let mut ray = None;
            'cols: for j in 0..self.n_cols() {
                if !allowed[j] || self.cost[j] <= COST_TOL {
                    continue;
                }
                if self.scale[j] > 0.0 {
                    let cmax = (0..self.m).fold(0.0f64, |a, i| a.max(self.rows[i][j].abs()));
                    if cmax <= DUST_REL * self.scale[j] {
                        *dust = true;
                        continue 'cols;
                    }
                }

                // Two-pass ratio test.  Rows whose basic variable is an
                // artificial pinned at zero block immediately on any
                // non-negligible entry (of either sign) so that artificials
                // can never re-enter at a positive level.  The first pass
                // finds the longest step that lets every basic variable dip
                // a fraction of the certificate's per-row allowance below
                // zero; the second picks the largest pivot among rows whose
                // exact ratio fits within that step.  Near-degenerate ties
                // are routine in these models, and always resolving them by
                // index will sooner or later eliminate against the one tied
                // entry that is pure cancellation residue.
                let mut theta = f64::INFINITY;
                let mut blocked = false;
                let mut tiny_only = true;
                for i in 0..self.m {
                    let a = self.rows[i][j];
                    let pinned =
                        self.basis[i] >= self.n_struct && self.rhs(i).abs() <= FEAS_TOL;
                    let blocking = if pinned {
                        a.abs() > PIVOT_FLOOR
                    } else {
                        a > PIVOT_FLOOR
                    };
                    if !blocking {
                        continue;
                    }
                    blocked = true;
                    if a.abs() <= 1e-11 {
                        continue;
                    }
                    tiny_only = false;
                    let step = if pinned {
                        0.0
                    } else {
                        (self.rhs(i).max(0.0) + self.eps) / a
                    };
                    if step < theta {
                        theta = step;
                    }
                }
                if !blocked {
                    ray = Some(j);
                    break 'cols;
                }
                if tiny_only {
                    *dust = true;
                    continue 'cols;
                }
                let mut leave: Option<(usize, f64)> = None;
                for i in 0..self.m {
                    let a = self.rows[i][j];
                    let pinned =
                        self.basis[i] >= self.n_struct && self.rhs(i).abs() <= FEAS_TOL;
                    let blocking = if pinned {
                        a.abs() > PIVOT_FLOOR
                    } else {
                        a > PIVOT_FLOOR
                    };
                    if !blocking || a.abs() <= 1e-11 {
                        continue;
                    }
                    let ratio = if pinned { 0.0 } else { self.rhs(i).max(0.0) / a };
                    if ratio > theta {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some((bi, ba)) => {
                            a.abs() > ba * (1.0 + 1e-12)
                                || (a.abs() >= ba * (1.0 - 1e-12)
                                    && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        leave = Some((i, a.abs()));
                    }
                }
                let Some((r, _)) = leave else {
                    // Unreachable in exact arithmetic (the smallest-ratio
                    // row always qualifies); treat like a degenerate column.
                    *dust = true;
                    continue 'cols;
                };
                chosen = Some((r, j));
                break 'cols;
            }

            if ray.is_some() {
                if !fresh && self.refresh(orig, cvec) {
                    fresh = true;
                    continue;
                }
                return LpStatus::Unbounded;
            }
            let Some((r, j)) = chosen else {
                if *dust && !fresh && self.refresh(orig, cvec) {
                    fresh = true;
                    *dust = false;
                    continue;
                }
                return LpStatus::Optimal;
            };
            if *budget == 0 {
                return LpStatus::NumericalFailure;
            }
            *budget -= 1;
            self.pivot(r, j);
            fresh = false;
        }
    }
}

/// Solve an equality-form LP (maximisation).  Structural errors are `Err`;
/// infeasibility, unboundedness and numerical breakdown come back as the
/// corresponding [`LpStatus`].
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    validate(lp)?;
    let n = lp.objective.len();
    let m = lp.rows.len();

    // Split free variables into positive/negative parts.
    // col_of[j] = first transformed column of variable j; free variables own
    // two adjacent columns (plus, minus).
    let mut col_of = Vec::with_capacity(n);
    let mut n_struct = 0usize;
    for &nn in &lp.nonneg {
        col_of.push(n_struct);
        n_struct += if nn { 1 } else { 2 };
    }

    // Rows with the sign flipped so that every rhs is non-negative.
    let mut flip = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let s = if lp.rhs[i] < 0.0 {
            flip[i] = true;
            -1.0
        } else {
            1.0
        };
        let mut row = vec![0.0; n_struct + m + 1];
        for j in 0..n {
            let a = s * lp.rows[i][j];
            row[col_of[j]] = a;
            if !lp.nonneg[j] {
                row[col_of[j] + 1] = -a;
            }
        }
        row[n_struct + i] = 1.0; // artificial
        row[n_struct + m] = s * lp.rhs[i];
        rows.push(row);
    }

    let mut scale = vec![0.0f64; n_struct + m];
    for row in &rows {
        for (j, s) in scale.iter_mut().enumerate() {
            *s = s.max(row[j].abs());
        }
    }
    let orig = rows.clone();
    let b_scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut tab = Tableau {
        m,
        n_struct,
        rows,
        basis: (n_struct..n_struct + m).collect(),
        cost: Vec::new(),
        scale,
        // A tenth of the certificate's per-row allowance, so that ratio-test
        // dips plus elimination rounding stay comfortably certifiable.
        eps: 0.1 * FEAS_TOL * b_scale,
    };

    // Phase 1: maximise minus the sum of artificials.
    let mut c1 = vec![0.0; n_struct + m];
    for j in n_struct..n_struct + m {
        c1[j] = -1.0;
    }
    tab.set_objective(&c1);
    let allowed_all = vec![true; n_struct + m];
    let mut budget = MAX_PIVOTS;
    let mut dust = false;
    match tab.optimize(&allowed_all, &mut budget, &mut dust, &orig, &c1) {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => {
            eprintln!("LPDBG p1 unbounded");
            return Ok(LpSolution::non_optimal(LpStatus::NumericalFailure));
        }
        s => {
            eprintln!("LPDBG p1 {s:?}");
            return Ok(LpSolution::non_optimal(s));
        }
    }
    let phase1 = tab.cost[tab.n_cols()];
    // cost row stores -(objective value); objective here is -(sum artificials)
    if -phase1 < -FEAS_TOL * b_scale {
        // convention check below; recompute directly to be safe
    }
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n_struct)
        .map(|i| tab.rhs(i).abs())
        .sum();
    if infeas > FEAS_TOL * b_scale {
        // Residual infeasibility after a dust stall is a numerical verdict,
        // not a structural one.
        return Ok(LpSolution::non_optimal(if dust {
            LpStatus::NumericalFailure
        } else {
            LpStatus::Infeasible
        }));
    }

    // Drive remaining zero-level artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] < n_struct {
            continue;
        }
        let col = (0..n_struct)
            .filter(|&j| {
                tab.scale[j] > 0.0 && tab.rows[i][j].abs() > DUST_REL * tab.scale[j]
            })
            .max_by(|&a, &b| {
                let ra = tab.rows[i][a].abs() / tab.scale[a];
                let rb = tab.rows[i][b].abs() / tab.scale[b];
                ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
            });
        if let Some(j) = col {
            if budget == 0 {
                return Ok(LpSolution::non_optimal(LpStatus::NumericalFailure));
            }
            budget -= 1;
            tab.pivot(i, j);
        }
        // A fully zero row is redundant; its artificial stays basic at level
        // zero and the blocking rule in `optimize` keeps it pinned there.
    }

    // Phase 2: original objective on structural columns only.
    let mut c2 = vec![0.0; n_struct + m];
    for j in 0..n {
        c2[col_of[j]] = lp.objective[j];
        if !lp.nonneg[j] {
            c2[col_of[j] + 1] = -lp.objective[j];
        }
    }
    tab.set_objective(&c2);
    let mut allowed = vec![true; n_struct + m];
    for a in allowed.iter_mut().skip(n_struct) {
        *a = false;
    }
    match tab.optimize(&allowed, &mut budget, &mut dust, &orig, &c2) {
        LpStatus::Optimal => {}
        s => {
            eprintln!("LPDBG p2 {s:?}");
            return Ok(LpSolution::non_optimal(s));
        }
    }

    // Refactorise once at the end.  The tableau's running copies carry the
    // rounding of every elimination on the pivot path, and that history is
    // what the certificate would otherwise end up measuring.  The basis
    // itself is clean: recompute the basic values and the duals directly
    // from the original columns, falling back to the tableau copies when
    // the basis matrix is too degenerate to factor.
    let bmat: Vec<Vec<f64>> = (0..m)
        .map(|r| tab.basis.iter().map(|&c| orig[r][c]).collect())
        .collect();
    let btr: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|i| bmat[i][r]).collect()).collect();
    let bvec: Vec<f64> = (0..m).map(|r| orig[r][n_struct + m]).collect();
    let cb: Vec<f64> = tab.basis.iter().map(|&c| c2[c]).collect();

    let mut x_t = vec![0.0; n_struct];
    match lu_solve(bmat, bvec) {
        Some(xb) => {
            for i in 0..m {
                if tab.basis[i] < n_struct {
                    x_t[tab.basis[i]] = xb[i];
                }
            }
        }
        None => {
            for i in 0..m {
                if tab.basis[i] < n_struct {
                    x_t[tab.basis[i]] = tab.rhs(i);
                }
            }
        }
    }
    let mut primal = Vec::with_capacity(n);
    for j in 0..n {
        let v = if lp.nonneg[j] {
            x_t[col_of[j]]
        } else {
            x_t[col_of[j]] - x_t[col_of[j] + 1]
        };
        primal.push(v);
    }

    // Dual multipliers solve B^T y = c_B; the phase-2 reduced cost of
    // artificial i (-y_i) is the fallback, undoing the row flip either way.
    let dual: Vec<f64> = match lu_solve(btr, cb) {
        Some(y) => (0..m).map(|i| if flip[i] { -y[i] } else { y[i] }).collect(),
        None => (0..m)
            .map(|i| {
                let y = -tab.cost[n_struct + i];
                if flip[i] { -y } else { y }
            })
            .collect(),
    };

    let value: f64 = lp
        .objective
        .iter()
        .zip(primal.iter())
        .map(|(c, x)| c * x)
        .sum();

    if !certify(lp, value, &primal, &dual) {
        eprintln!("LPDBG certify fail value={value} primal={primal:?} dual={dual:?}");
        return Ok(LpSolution::non_optimal(LpStatus::NumericalFailure));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        dual,
    })
}

/// Optimality certificate: primal feasibility, dual feasibility,
/// complementary slackness (via the duality gap) — all scaled.
fn certify(lp: &LinearProgram, value: f64, x: &[f64], y: &[f64]) -> bool {
    let b_scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (i, row) in lp.rows.iter().enumerate() {
        let ax: f64 = row.iter().zip(x.iter()).map(|(a, v)| a * v).sum();
        if (ax - lp.rhs[i]).abs() > FEAS_TOL * b_scale {
            eprintln!("CERTDBG primal row {i} viol {:.3e}", (ax - lp.rhs[i]).abs());
            return false;
        }
    }
    // Sign dips are admitted on the same scale as row residuals: the ratio
    // test lets a basic variable sit a fraction of the row allowance below
    // zero, and the exact basis solve surfaces that dip undamped.
    let x_scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (j, &xv) in x.iter().enumerate() {
        if lp.nonneg[j] && xv < -FEAS_TOL * (x_scale + b_scale) {
            return false;
        }
    }
    let c_scale = 1.0
        + lp.objective.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for j in 0..lp.objective.len() {
        let ya: f64 = y
            .iter()
            .zip(lp.rows.iter())
            .map(|(yi, row)| yi * row[j])
            .sum();
        let reduced = lp.objective[j] - ya;
        let ok = if lp.nonneg[j] {
            reduced <= FEAS_TOL * c_scale
        } else {
            reduced.abs() <= FEAS_TOL * c_scale
        };
        if !ok {
            eprintln!("CERTDBG dual col {j} reduced {reduced:.3e}");
            return false;
        }
    }
    let yb: f64 = y.iter().zip(lp.rhs.iter()).map(|(yi, b)| yi * b).sum();
    let ok = (value - yb).abs() <= FEAS_TOL * (1.0 + value.abs());
    if !ok {
        eprintln!("CERTDBG gap {:.3e} value {value:.8e} yb {yb:.8e}", (value - yb).abs());
    }
    ok
}

/// Dense LU factors with partial pivoting, for refactorising a basis.
struct Lu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

/// Factor the square matrix `a`.  `None` signals a matrix too degenerate to
/// factor; callers fall back to less accurate paths and let the certificate
/// arbitrate.
fn lu_factor(mut a: Vec<Vec<f64>>) -> Option<Lu> {
    let n = a.len();
    let mut perm = Vec::with_capacity(n);
    for k in 0..n {
        let piv = (k..n).max_by(|&p, &q| {
            a[p][k]
                .abs()
                .partial_cmp(&a[q][k].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][k].abs() <= f64::MIN_POSITIVE {
            return None;
        }
        a.swap(k, piv);
        perm.push(piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            a[i][k] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    let d = a[k][j];
                    if d != 0.0 {
                        a[i][j] -= f * d;
                    }
                }
            }
        }
    }
    Some(Lu { lu: a, perm })
}

impl Lu {
    /// Solve `A v = b` given the factors of `A`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut v = b.to_vec();
        for k in 0..n {
            v.swap(k, self.perm[k]);
            for i in k + 1..n {
                let f = self.lu[i][k];
                if f != 0.0 {
                    v[i] -= f * v[k];
                }
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| self.lu[k][j] * v[j]).sum();
            v[k] = (v[k] - s) / self.lu[k][k];
        }
        v
    }
}

/// Solve the square system `a v = b` by Gaussian elimination with partial
/// pivoting.  `None` signals a matrix too degenerate to factor.
fn lu_solve(a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<Vec<f64>> {
    lu_factor(a).map(|f| f.solve(&b))
}

/// Row comparison for the inequality-form builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Convenience builder for the mixed-form problems the upper layers produce
/// (inequalities become equalities with appended slack columns).  Dual
/// multipliers are reported per builder row, in insertion order.
#[derive(Debug, Clone)]
pub struct LpBuilder {
    n_vars: usize,
    objective: Vec<f64>,
    nonneg: Vec<bool>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

impl LpBuilder {
    /// `nonneg[j]` constrains variable j to be non-negative; others are free.
    pub fn new(objective: Vec<f64>, nonneg: Vec<bool>) -> Self {
        assert_eq!(objective.len(), nonneg.len());
        LpBuilder {
            n_vars: objective.len(),
            objective,
            nonneg,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars);
        self.rows.push((coeffs, cmp, rhs));
        self
    }

    /// Solve, returning (status, value, x over the builder variables, dual per row).
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n_slack = self
            .rows
            .iter()
            .filter(|(_, c, _)| *c != Cmp::Eq)
            .count();
        let n_total = self.n_vars + n_slack;
        let mut objective = self.objective.clone();
        objective.resize(n_total, 0.0);
        let mut nonneg = self.nonneg.clone();
        nonneg.resize(n_total, true);
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut rhs = Vec::with_capacity(self.rows.len());
        let mut slack_at = self.n_vars;
        for (coeffs, cmp, b) in &self.rows {
            let mut row = coeffs.clone();
            row.resize(n_total, 0.0);
            match cmp {
                Cmp::Eq => {}
                Cmp::Le => {
                    row[slack_at] = 1.0;
                    slack_at += 1;
                }
                Cmp::Ge => {
                    row[slack_at] = -1.0;
                    slack_at += 1;
                }
            }
            rows.push(row);
            rhs.push(*b);
        }
        let lp = LinearProgram {
            objective,
            rows,
            rhs,
            nonneg,
        };
        let mut sol = solve(&lp)?;
        if sol.is_optimal() {
            sol.primal.truncate(self.n_vars);
        }
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn simple_equality_problem() {
        // maximise 3x + 2y subject to x + y = 4
        let lp = LinearProgram {
            objective: vec![3.0, 2.0],
            rows: vec![vec![1.0, 1.0]],
            rhs: vec![4.0],
            nonneg: vec![true, true],
        };
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.value, 12.0, 1e-9);
        assert_close(sol.primal[0], 4.0, 1e-9);
        assert_close(sol.primal[1], 0.0, 1e-9);
        assert_close(sol.dual[0], 3.0, 1e-9);
    }

    #[test]
    fn martingale_weight_problem_on_four_support_points() {
        // Support points (2,0), (0,2), (0,0), (2,2) around the spot (1,1);
        // maximise the weight-average of the payoff (0,0,0,2).
        let lp = LinearProgram {
            objective: vec![0.0, 0.0, 0.0, 2.0],
            rows: vec![
                vec![2.0, 0.0, 0.0, 2.0],
                vec![0.0, 2.0, 0.0, 2.0],
                vec![1.0, 1.0, 1.0, 1.0],
            ],
            rhs: vec![1.0, 1.0, 1.0],
            nonneg: vec![true; 4],
        };
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.value, 1.0, 1e-9);
        assert_close(sol.primal[3], 0.5, 1e-9);
        assert_close(sol.primal[2], 0.5, 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            rows: vec![vec![1.0, 1.0]],
            rhs: vec![-1.0],
            nonneg: vec![true, true],
        };
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // maximise x subject to x - y = 0: ray x = y -> infinity.
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            rows: vec![vec![1.0, -1.0]],
            rhs: vec![0.0],
            nonneg: vec![true, true],
        };
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_round_trip() {
        // maximise -|style| problem: max -x1 with free x2: x1 + x2 = 3, x1 - x2 = 1
        // forces x2 = 1, x1 = 2.
        let lp = LinearProgram {
            objective: vec![-1.0, 0.0],
            rows: vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            rhs: vec![3.0, 1.0],
            nonneg: vec![false, false],
        };
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.primal[0], 2.0, 1e-9);
        assert_close(sol.primal[1], 1.0, 1e-9);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            rows: vec![
                vec![1.0, 1.0],
                vec![2.0, 2.0], // duplicate of the first, scaled
            ],
            rhs: vec![4.0, 8.0],
            nonneg: vec![true, true],
        };
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.value, 8.0, 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let lp = LinearProgram {
            objective: vec![1.0],
            rows: vec![vec![1.0, 2.0]],
            rhs: vec![1.0],
            nonneg: vec![true],
        };
        assert!(matches!(solve(&lp), Err(LpError::DimensionMismatch(_))));
    }

    #[test]
    fn non_finite_input_is_an_error() {
        let lp = LinearProgram {
            objective: vec![f64::NAN],
            rows: vec![vec![1.0]],
            rhs: vec![1.0],
            nonneg: vec![true],
        };
        assert!(matches!(solve(&lp), Err(LpError::NonFinite)));
    }

    #[test]
    fn builder_handles_inequalities() {
        // maximise x + y subject to x <= 2, y <= 3, x + y >= 1.
        let mut b = LpBuilder::new(vec![1.0, 1.0], vec![true, true]);
        b.row(vec![1.0, 0.0], Cmp::Le, 2.0)
            .row(vec![0.0, 1.0], Cmp::Le, 3.0)
            .row(vec![1.0, 1.0], Cmp::Ge, 1.0);
        let sol = b.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.value, 5.0, 1e-9);
        assert_eq!(sol.primal.len(), 2);
    }

    #[test]
    fn deterministic_bit_for_bit() {
        let lp = LinearProgram {
            objective: vec![1.3, -0.7, 2.1, 0.4],
            rows: vec![
                vec![1.0, 1.0, 1.0, 1.0],
                vec![0.5, -1.0, 2.0, 0.0],
            ],
            rhs: vec![2.0, 1.0],
            nonneg: vec![true, true, true, false],
        };
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        for (x, y) in a.primal.iter().zip(b.primal.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.dual.iter().zip(b.dual.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn random_feasible_problems_satisfy_strong_duality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5ea1);
        for case in 0..500 {
            let m = rng.gen_range(1..=5);
            let n = rng.gen_range(m + 1..=m + 6);
            // Random constraint matrix and a random non-negative feasible point
            // define the rhs, so phase 1 always succeeds; an extra simplex row
            // keeps the feasible set bounded.
            let mut rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            let mut rhs: Vec<f64> = rows
                .iter()
                .map(|r| r.iter().zip(x0.iter()).map(|(a, x)| a * x).sum())
                .collect();
            rows.push(vec![1.0; n]);
            rhs.push(x0.iter().sum());
            let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let lp = LinearProgram {
                objective,
                rows,
                rhs,
                nonneg: vec![true; n],
            };
            let sol = solve(&lp).unwrap();
            assert_eq!(
                sol.status,
                LpStatus::Optimal,
                "case {case}: bounded feasible LP must solve"
            );
            let yb: f64 = sol
                .dual
                .iter()
                .zip(lp.rhs.iter())
                .map(|(y, b)| y * b)
                .sum();
            let gap = (sol.value - yb).abs();
            assert!(
                gap <= 1e-8 * (1.0 + sol.value.abs()),
                "case {case}: duality gap {gap}"
            );
        }
    }
}
