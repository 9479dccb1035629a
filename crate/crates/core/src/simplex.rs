//! Linear-programming core: a revised primal simplex for the covering-form
//! restricted master problem
//!
//! ```text
//!   min  sum_p x_p   s.t.  sum_p a_kp x_p >= b_k  for all k,   x >= 0
//! ```
//!
//! The inequality is converted to equality with surplus variables. The
//! starting basis is crashed from single-item columns where available
//! (their basis matrix is diagonal); rows without one get a phase-1
//! artificial. Duals come straight out of the basis inverse.
//!
//! Variables may carry finite upper bounds; the integer module relies on
//! this for its branching subproblems. The RMP itself never passes bounds.

use crate::error::{CspError, Result};
use crate::model::{ColumnPool, DualVector};

/// Feasibility/optimality tolerance of the LP core.
pub const LP_TOL: f64 = 1e-7;

/// Threshold on reduced costs for entering-variable selection.
const ENTER_TOL: f64 = 1e-9;
/// Minimal acceptable pivot element magnitude in the ratio test.
const RATIO_TOL: f64 = 1e-9;
/// A step below this is treated as a degenerate pivot.
const DEGEN_TOL: f64 = 1e-10;
/// Degenerate pivots in a row before Bland's rule takes over.
const STALL_LIMIT: usize = 50;
/// Rebuild the basis inverse from scratch this often.
const REFACTOR_EVERY: usize = 100;
/// Hard pivot cap; exceeding it is reported as a solver failure, never a
/// silent wrong answer.
const MAX_PIVOTS: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Primal/dual solution of the covering LP over a column pool.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// One value per pool column, `>= 0`.
    pub primal: Vec<f64>,
    /// `sum x_p`.
    pub objective: f64,
    /// Covering-constraint duals.
    pub duals: DualVector,
    /// Indices of pool columns with `x_p > LP_TOL`.
    pub basis: Vec<usize>,
    pub status: LpStatus,
}

impl LpSolution {
    fn infeasible(num_cols: usize, num_rows: usize) -> Self {
        LpSolution {
            primal: vec![0.0; num_cols],
            objective: f64::INFINITY,
            duals: DualVector::zeros(num_rows),
            basis: Vec::new(),
            status: LpStatus::Infeasible,
        }
    }
}

/// Opaque warm-start token: the structural/surplus split of the last basis.
#[derive(Debug, Clone, Default)]
pub struct WarmBasis {
    vars: Vec<BasisVar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BasisVar {
    Column(usize),
    Surplus(usize),
}

/// Reusable RMP solver that warm-starts from the previous optimal basis.
/// Columns may be appended to the pool between calls; the old basis stays
/// primal feasible and phase 1 is skipped.
#[derive(Debug, Default)]
pub struct RmpSolver {
    warm: Option<WarmBasis>,
}

impl RmpSolver {
    pub fn new() -> Self {
        RmpSolver::default()
    }

    pub fn reset(&mut self) {
        self.warm = None;
    }

    pub fn solve(&mut self, pool: &ColumnPool, demands: &[u32]) -> Result<LpSolution> {
        let (solution, warm) = solve_rmp_inner(pool, demands, self.warm.as_ref())?;
        self.warm = warm;
        Ok(solution)
    }
}

/// One-shot cold solve of the RMP.
pub fn solve_rmp(pool: &ColumnPool, demands: &[u32]) -> Result<LpSolution> {
    Ok(solve_rmp_inner(pool, demands, None)?.0)
}

fn solve_rmp_inner(
    pool: &ColumnPool,
    demands: &[u32],
    warm: Option<&WarmBasis>,
) -> Result<(LpSolution, Option<WarmBasis>)> {
    if pool.is_empty() {
        return Err(CspError::InvalidInput("empty column pool".into()));
    }
    if demands.len() != pool.num_items() {
        return Err(CspError::DimensionMismatch {
            expected: pool.num_items(),
            got: demands.len(),
        });
    }
    // Structural coverage check: a row no column touches makes the LP infeasible.
    if !pool.uncovered_items().is_empty() {
        return Ok((
            LpSolution::infeasible(pool.len(), demands.len()),
            None,
        ));
    }
    let k = demands.len();
    let cols: Vec<Vec<f64>> = pool
        .iter()
        .map(|p| p.counts().iter().map(|&a| a as f64).collect())
        .collect();
    let rhs: Vec<f64> = demands.iter().map(|&b| b as f64).collect();
    let upper = vec![f64::INFINITY; cols.len()];
    let mut tableau = Simplex::new(k, &cols, &rhs, &upper);
    match tableau.solve(warm)? {
        SolveOutcome::Optimal => {}
        SolveOutcome::Infeasible => {
            // Coverage holds, so the covering LP is always feasible; reaching
            // this point means the pivoting went numerically wrong.
            return Err(CspError::SolverFailure(
                "phase 1 failed on a covered instance".into(),
            ));
        }
    }
    let (solution, warm) = tableau.extract(pool.len())?;
    Ok((solution, Some(warm)))
}

/// Covering LP with optional finite upper bounds on the structural columns.
/// Used by the integer module's branch-and-bound nodes. Right-hand sides may
/// be negative (rows already over-covered by fixed lower bounds).
pub(crate) struct BoundedCoveringLp<'a> {
    pub num_rows: usize,
    pub cols: &'a [Vec<f64>],
    pub rhs: &'a [f64],
    pub upper: &'a [f64],
}

pub(crate) enum BoundedLpResult {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

pub(crate) fn solve_bounded_covering(lp: &BoundedCoveringLp) -> Result<BoundedLpResult> {
    let mut tableau = Simplex::new(lp.num_rows, lp.cols, lp.rhs, lp.upper);
    match tableau.solve(None)? {
        SolveOutcome::Infeasible => Ok(BoundedLpResult::Infeasible),
        SolveOutcome::Optimal => {
            let (solution, _) = tableau.extract(lp.cols.len())?;
            Ok(BoundedLpResult::Optimal {
                objective: solution.objective,
                x: solution.primal,
            })
        }
    }
}

enum SolveOutcome {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Dense revised simplex state. Variable layout: `0..p` structural columns
/// (cost 1), `p..p+k` surplus (cost 0, column `-e_r`), then phase-1
/// artificials (`+/-e_r`, cost 1 in phase 1 only).
struct Simplex<'a> {
    k: usize,
    p: usize,
    cols: &'a [Vec<f64>],
    rhs: &'a [f64],
    upper: &'a [f64],

    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>, // k x k, row-major
    xb: Vec<f64>,
    art_rows: Vec<usize>, // artificial j -> its row
    in_phase1: bool,
    pivots: usize,
    stall: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn new(k: usize, cols: &'a [Vec<f64>], rhs: &'a [f64], upper: &'a [f64]) -> Self {
        Simplex {
            k,
            p: cols.len(),
            cols,
            rhs,
            upper,
            state: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            xb: Vec::new(),
            art_rows: Vec::new(),
            in_phase1: false,
            pivots: 0,
            stall: 0,
            bland: false,
        }
    }

    fn num_vars(&self) -> usize {
        self.p + self.k + self.art_rows.len()
    }

    fn upper_of(&self, j: usize) -> f64 {
        if j < self.p {
            self.upper[j]
        } else {
            f64::INFINITY
        }
    }

    fn cost_of(&self, j: usize) -> f64 {
        if self.in_phase1 {
            if j >= self.p + self.k {
                1.0
            } else {
                0.0
            }
        } else if j < self.p {
            1.0
        } else {
            0.0
        }
    }

    /// Column entry `A[row][j]`.
    fn col_entry(&self, j: usize, row: usize) -> f64 {
        if j < self.p {
            self.cols[j][row]
        } else if j < self.p + self.k {
            if j - self.p == row {
                -1.0
            } else {
                0.0
            }
        } else {
            let r = self.art_rows[j - self.p - self.k];
            if r == row {
                if self.rhs[r] >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        }
    }

    fn col_dense(&self, j: usize) -> Vec<f64> {
        (0..self.k).map(|r| self.col_entry(j, r)).collect()
    }

    fn solve(&mut self, warm: Option<&WarmBasis>) -> Result<SolveOutcome> {
        if !self.try_warm_start(warm)? {
            self.crash_basis()?;
        }
        if !self.art_rows.is_empty() {
            self.in_phase1 = true;
            self.run_simplex()?;
            let art_value: f64 = (0..self.num_vars())
                .filter(|&j| j >= self.p + self.k)
                .map(|j| self.var_value(j))
                .sum();
            if art_value > LP_TOL * (1.0 + self.rhs.iter().map(|b| b.abs()).sum::<f64>()) {
                return Ok(SolveOutcome::Infeasible);
            }
            self.drive_out_artificials()?;
            self.in_phase1 = false;
        }
        self.run_simplex()?;
        Ok(SolveOutcome::Optimal)
    }

    fn try_warm_start(&mut self, warm: Option<&WarmBasis>) -> Result<bool> {
        let Some(warm) = warm else {
            return Ok(false);
        };
        if warm.vars.len() != self.k {
            return Ok(false);
        }
        let mut basis = Vec::with_capacity(self.k);
        for &v in &warm.vars {
            let j = match v {
                BasisVar::Column(i) if i < self.p => i,
                BasisVar::Surplus(r) if r < self.k => self.p + r,
                _ => return Ok(false),
            };
            basis.push(j);
        }
        self.basis = basis;
        self.state = vec![VarState::AtLower; self.p + self.k];
        for (row, &j) in self.basis.clone().iter().enumerate() {
            self.state[j] = VarState::Basic(row);
        }
        if self.refactor().is_err() {
            return Ok(false);
        }
        self.compute_xb();
        // Warm bases are only reused when still primal feasible (true in the
        // CG loop, where the pool only grows).
        let feasible = self.xb.iter().enumerate().all(|(row, &v)| {
            v >= -LP_TOL && v <= self.upper_of(self.basis[row]) + LP_TOL
        });
        if !feasible {
            return Ok(false);
        }
        Ok(true)
    }

    /// Diagonal crash: surplus for over-covered rows, a single-item column
    /// where one exists, a phase-1 artificial otherwise.
    fn crash_basis(&mut self) -> Result<()> {
        let mut single: Vec<Option<usize>> = vec![None; self.k];
        for (j, col) in self.cols.iter().enumerate() {
            let mut nz = col.iter().enumerate().filter(|(_, &a)| a != 0.0);
            if let (Some((row, &a)), None) = (nz.next(), nz.next()) {
                if a > 0.0 && single[row].is_none() && self.rhs[row] / a <= self.upper[j] + LP_TOL
                {
                    single[row] = Some(j);
                }
            }
        }
        self.basis = Vec::with_capacity(self.k);
        self.art_rows.clear();
        let mut arts = Vec::new();
        for row in 0..self.k {
            if self.rhs[row] <= 0.0 {
                self.basis.push(self.p + row); // surplus at -rhs >= 0
            } else if let Some(j) = single[row] {
                self.basis.push(j);
            } else {
                arts.push(row);
                self.basis.push(usize::MAX); // placeholder, filled below
            }
        }
        self.art_rows = arts;
        for (a, &row) in self.art_rows.clone().iter().enumerate() {
            self.basis[row] = self.p + self.k + a;
        }
        self.state = vec![VarState::AtLower; self.num_vars()];
        for (row, &j) in self.basis.clone().iter().enumerate() {
            self.state[j] = VarState::Basic(row);
        }
        self.refactor()?;
        self.compute_xb();
        Ok(())
    }

    /// Rebuild `binv` by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<()> {
        let k = self.k;
        let mut mat = vec![0.0; k * k];
        for (col_pos, &j) in self.basis.iter().enumerate() {
            for row in 0..k {
                mat[row * k + col_pos] = self.col_entry(j, row);
            }
        }
        let mut inv = vec![0.0; k * k];
        for i in 0..k {
            inv[i * k + i] = 1.0;
        }
        for col in 0..k {
            let mut piv_row = col;
            let mut piv_val = mat[col * k + col].abs();
            for r in col + 1..k {
                let v = mat[r * k + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-10 {
                return Err(CspError::SolverFailure("singular basis".into()));
            }
            if piv_row != col {
                // Row swaps are plain row operations on [B | I]; the right
                // block still comes out as B^{-1} in basis-column order.
                for c in 0..k {
                    mat.swap(col * k + c, piv_row * k + c);
                    inv.swap(col * k + c, piv_row * k + c);
                }
            }
            let d = mat[col * k + col];
            for c in 0..k {
                mat[col * k + c] /= d;
                inv[col * k + c] /= d;
            }
            for r in 0..k {
                if r != col {
                    let f = mat[r * k + col];
                    if f != 0.0 {
                        for c in 0..k {
                            mat[r * k + c] -= f * mat[col * k + c];
                            inv[r * k + c] -= f * inv[col * k + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        Ok(())
    }

    /// Effective right-hand side: `b` minus contributions of nonbasic
    /// variables sitting at finite upper bounds.
    fn effective_rhs(&self) -> Vec<f64> {
        let mut rhs = self.rhs.to_vec();
        for j in 0..self.num_vars() {
            if self.state[j] == VarState::AtUpper {
                let u = self.upper_of(j);
                for row in 0..self.k {
                    rhs[row] -= self.col_entry(j, row) * u;
                }
            }
        }
        rhs
    }

    fn compute_xb(&mut self) {
        let rhs = self.effective_rhs();
        let k = self.k;
        self.xb = (0..k)
            .map(|r| (0..k).map(|c| self.binv[r * k + c] * rhs[c]).sum())
            .collect();
    }

    fn var_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(row) => self.xb[row],
            VarState::AtLower => 0.0,
            VarState::AtUpper => self.upper_of(j),
        }
    }

    fn dual_row(&self) -> Vec<f64> {
        let k = self.k;
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost_of(j)).collect();
        (0..k)
            .map(|c| (0..k).map(|r| cb[r] * self.binv[r * k + c]).sum())
            .collect()
    }

    fn run_simplex(&mut self) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(CspError::SolverFailure(format!(
                    "pivot cap {MAX_PIVOTS} exceeded (cycling?)"
                )));
            }
            let y = self.dual_row();
            let entering = self.choose_entering(&y);
            let Some((j_enter, _)) = entering else {
                return Ok(()); // optimal for the current phase
            };
            self.pivot(j_enter)?;
        }
    }

    /// Entering variable: most negative reduced cost (Dantzig), or the
    /// lowest-index violation when Bland's rule is engaged after a stall.
    fn choose_entering(&self, y: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.num_vars() {
            // artificials never re-enter once nonbasic
            if j >= self.p + self.k && self.state[j] != VarState::AtLower {
                continue;
            }
            if j >= self.p + self.k && !self.in_phase1 {
                continue;
            }
            let score = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => {
                    if self.upper_of(j) <= 0.0 {
                        continue; // fixed variable
                    }
                    let d = self.reduced_cost(j, y);
                    if d < -ENTER_TOL {
                        -d
                    } else {
                        continue;
                    }
                }
                VarState::AtUpper => {
                    let d = self.reduced_cost(j, y);
                    if d > ENTER_TOL {
                        d
                    } else {
                        continue;
                    }
                }
            };
            if self.bland {
                return Some((j, score));
            }
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost_of(j);
        if j < self.p {
            for row in 0..self.k {
                d -= y[row] * self.cols[j][row];
            }
        } else if j < self.p + self.k {
            d += y[j - self.p];
        } else {
            let r = self.art_rows[j - self.p - self.k];
            let sign = if self.rhs[r] >= 0.0 { 1.0 } else { -1.0 };
            d -= y[r] * sign;
        }
        d
    }

    fn pivot(&mut self, j_enter: usize) -> Result<()> {
        let k = self.k;
        let a = self.col_dense(j_enter);
        // w = B^{-1} A_e
        let w: Vec<f64> = (0..k)
            .map(|r| (0..k).map(|c| self.binv[r * k + c] * a[c]).sum())
            .collect();
        let sigma = match self.state[j_enter] {
            VarState::AtLower => 1.0,
            VarState::AtUpper => -1.0,
            VarState::Basic(_) => unreachable!(),
        };

        // Ratio test: basic vars hitting a bound, or the entering variable
        // flipping to its own opposite bound.
        let mut t_best = self.upper_of(j_enter); // bound-flip step, may be INFINITY
        let mut leave_row: Option<usize> = None;
        for r in 0..k {
            let delta = sigma * w[r];
            let t = if delta > RATIO_TOL {
                self.xb[r].max(0.0) / delta
            } else if delta < -RATIO_TOL {
                let ub = self.upper_of(self.basis[r]);
                if !ub.is_finite() {
                    continue;
                }
                (ub - self.xb[r]).max(0.0) / (-delta)
            } else {
                continue;
            };
            let take = match leave_row {
                // a row pivot is preferred over a bound flip at equal step
                None => t <= t_best,
                Some(lr) => {
                    if t < t_best - 1e-12 {
                        true
                    } else if t > t_best + 1e-12 {
                        false
                    } else if self.bland {
                        self.basis[r] < self.basis[lr]
                    } else {
                        // larger pivot first for stability, then low index
                        let wr = (sigma * w[r]).abs();
                        let wl = (sigma * w[lr]).abs();
                        wr > wl + 1e-12
                            || ((wr - wl).abs() <= 1e-12 && self.basis[r] < self.basis[lr])
                    }
                }
            };
            if take {
                t_best = t;
                leave_row = Some(r);
            }
        }
        if t_best.is_infinite() {
            return Err(CspError::SolverFailure("unbounded direction".into()));
        }
        let t = t_best.max(0.0);

        self.pivots += 1;
        if t <= DEGEN_TOL {
            self.stall += 1;
            if self.stall >= STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }

        match leave_row {
            None => {
                // Bound flip: no basis change.
                self.state[j_enter] = match self.state[j_enter] {
                    VarState::AtLower => VarState::AtUpper,
                    VarState::AtUpper => VarState::AtLower,
                    VarState::Basic(_) => unreachable!(),
                };
                for r in 0..k {
                    self.xb[r] -= sigma * t * w[r];
                }
            }
            Some(r) => {
                let j_leave = self.basis[r];
                let delta = sigma * w[r];
                self.state[j_leave] = if delta > 0.0 {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                for i in 0..k {
                    if i != r {
                        self.xb[i] -= sigma * t * w[i];
                    }
                }
                self.xb[r] = match self.state[j_enter] {
                    VarState::AtLower => t,
                    VarState::AtUpper => self.upper_of(j_enter) - t,
                    VarState::Basic(_) => unreachable!(),
                };
                self.basis[r] = j_enter;
                self.state[j_enter] = VarState::Basic(r);
                // Product-form update of B^{-1}.
                let piv = w[r];
                for c in 0..k {
                    self.binv[r * k + c] /= piv;
                }
                for i in 0..k {
                    if i != r && w[i] != 0.0 {
                        let f = w[i];
                        for c in 0..k {
                            self.binv[i * k + c] -= f * self.binv[r * k + c];
                        }
                    }
                }
            }
        }

        if self.pivots % REFACTOR_EVERY == 0 {
            self.refactor()?;
            self.compute_xb();
        }
        Ok(())
    }

    /// After phase 1: pivot zero-valued artificials out of the basis where
    /// possible; a remaining one marks a dependent row and stays at zero.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let k = self.k;
        for row in 0..k {
            if self.basis[row] < self.p + self.k {
                continue;
            }
            let mut pivoted = false;
            for j in 0..self.p + self.k {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let a = self.col_dense(j);
                let w_r: f64 = (0..k).map(|c| self.binv[row * k + c] * a[c]).sum();
                if w_r.abs() > 1e-7 {
                    // Degenerate pivot bringing j in at value ~0.
                    let j_out = self.basis[row];
                    let w: Vec<f64> = (0..k)
                        .map(|r| (0..k).map(|c| self.binv[r * k + c] * a[c]).sum())
                        .collect();
                    self.state[j_out] = VarState::AtLower;
                    self.basis[row] = j;
                    self.state[j] = VarState::Basic(row);
                    let piv = w[row];
                    for c in 0..k {
                        self.binv[row * k + c] /= piv;
                    }
                    for i in 0..k {
                        if i != row && w[i] != 0.0 {
                            let f = w[i];
                            for c in 0..k {
                                self.binv[i * k + c] -= f * self.binv[row * k + c];
                            }
                        }
                    }
                    self.compute_xb();
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                // Row is linearly dependent; the artificial stays basic at
                // zero with zero cost and does not perturb the solution.
            }
        }
        Ok(())
    }

    fn extract(&mut self, num_cols: usize) -> Result<(LpSolution, WarmBasis)> {
        // Final refactorization for clean numbers.
        self.refactor()?;
        self.compute_xb();
        let y = self.dual_row();
        let mut primal = vec![0.0; num_cols];
        for (j, val) in primal.iter_mut().enumerate() {
            let v = self.var_value(j);
            *val = if v.abs() < 1e-11 { 0.0 } else { v };
        }
        let objective: f64 = primal.iter().sum();
        for (r, &yr) in y.iter().enumerate() {
            if yr < -crate::model::DUAL_TOL {
                return Err(CspError::SolverFailure(format!(
                    "negative covering dual {yr} at row {r}"
                )));
            }
        }
        let duals = DualVector::new(y.iter().map(|&v| if v.abs() < 1e-13 { 0.0 } else { v }).collect())?;
        let basis: Vec<usize> = primal
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > LP_TOL)
            .map(|(j, _)| j)
            .collect();
        let warm = WarmBasis {
            vars: self
                .basis
                .iter()
                .map(|&j| {
                    if j < self.p {
                        BasisVar::Column(j)
                    } else {
                        // artificial left basic at zero maps to its row's surplus;
                        // the warm start validity check will reject it if wrong
                        BasisVar::Surplus(if j < self.p + self.k {
                            j - self.p
                        } else {
                            self.art_rows[j - self.p - self.k]
                        })
                    }
                })
                .collect(),
        };
        Ok((
            LpSolution {
                primal,
                objective,
                duals,
                basis,
                status: LpStatus::Optimal,
            },
            warm,
        ))
    }
}
