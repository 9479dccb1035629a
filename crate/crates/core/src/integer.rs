//! Integer solves and test oracles: the final integer RMP by branch and
//! bound, full pattern enumeration for tiny instances, and an independent
//! dense-LP oracle.
//!
//! The branch and bound relaxes to the covering LP, branches on the most
//! fractional variable (`x_j <= floor` / `x_j >= ceil`), and prunes with the
//! integrality-rounded LP bound. Lower branches are folded into the
//! right-hand side; upper branches become variable bounds of the LP core.

use std::time::{Duration, Instant};

use crate::error::{CspError, Result};
use crate::model::{ColumnPool, Instance, Pattern};
use crate::simplex::{self, BoundedCoveringLp, BoundedLpResult};

/// Enumeration refuses instances whose estimated pattern count exceeds this.
pub const ORACLE_BUDGET: u64 = 1_000_000;

const INT_TOL: f64 = 1e-6;
/// Depth-first exploration restarts from the best open bound this often.
const BEST_FIRST_EVERY: u64 = 10_000;

/// An integer solution over a column pool.
#[derive(Debug, Clone)]
pub struct IpSolution {
    /// Pattern usage counts, one per pool column.
    pub values: Vec<u64>,
    pub objective: u64,
    /// Optimality certificate; `false` means a time-limited incumbent.
    pub proven: bool,
    /// Best lower bound at termination.
    pub lower_bound: f64,
    /// Branch-and-bound nodes explored.
    pub nodes: u64,
}

struct Node {
    lower: Vec<u32>,
    upper: Vec<Option<u32>>,
    parent_bound: f64,
}

/// Solve the integer RMP `min sum x_p : A x >= b, x integer >= 0` over the
/// pooled columns.
pub fn solve_irmp(pool: &ColumnPool, demands: &[u32], time_limit: Duration) -> Result<IpSolution> {
    if pool.is_empty() {
        return Err(CspError::InvalidInput("empty column pool".into()));
    }
    if demands.len() != pool.num_items() {
        return Err(CspError::DimensionMismatch {
            expected: pool.num_items(),
            got: demands.len(),
        });
    }
    if !pool.uncovered_items().is_empty() {
        return Err(CspError::InvalidInput(
            "pool does not cover every item".into(),
        ));
    }
    let started = Instant::now();
    let k = demands.len();
    let p = pool.len();
    let cols: Vec<Vec<f64>> = pool
        .iter()
        .map(|pat| pat.counts().iter().map(|&a| a as f64).collect())
        .collect();

    let node_lp = |lower: &[u32], upper: &[Option<u32>]| -> Result<Option<(Vec<f64>, f64)>> {
        let mut rhs: Vec<f64> = demands.iter().map(|&b| b as f64).collect();
        for (j, &lo) in lower.iter().enumerate() {
            if lo > 0 {
                for (r, rv) in rhs.iter_mut().enumerate() {
                    *rv -= cols[j][r] * lo as f64;
                }
            }
        }
        let ubs: Vec<f64> = upper
            .iter()
            .zip(lower)
            .map(|(u, &lo)| match u {
                Some(u) => (*u as f64 - lo as f64).max(0.0),
                None => f64::INFINITY,
            })
            .collect();
        let lp = BoundedCoveringLp {
            num_rows: k,
            cols: &cols,
            rhs: &rhs,
            upper: &ubs,
        };
        match simplex::solve_bounded_covering(&lp)? {
            BoundedLpResult::Infeasible => Ok(None),
            BoundedLpResult::Optimal { x, objective } => {
                let shift: f64 = lower.iter().map(|&l| l as f64).sum();
                let full: Vec<f64> = x.iter().zip(lower).map(|(&v, &l)| v + l as f64).collect();
                Ok(Some((full, objective + shift)))
            }
        }
    };

    let covers = |values: &[u64]| -> bool {
        (0..k).all(|r| {
            let lhs: u64 = values
                .iter()
                .enumerate()
                .map(|(j, &x)| x * pool.get(j).counts()[r] as u64)
                .sum();
            lhs >= demands[r] as u64
        })
    };

    // Rounding heuristic: floor the LP point, then cover the residual demand
    // greedily. Far tighter than ceiling everything, and cheap enough to run
    // at every node; incumbents only need to satisfy the original rows, so
    // node bounds are irrelevant here.
    let round_and_repair = |x: &[f64]| -> (Vec<u64>, u64) {
        let mut values: Vec<u64> = x.iter().map(|&v| v.floor().max(0.0) as u64).collect();
        let mut residual: Vec<i64> = (0..k)
            .map(|r| {
                let covered: u64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v * pool.get(j).counts()[r] as u64)
                    .sum();
                demands[r] as i64 - covered as i64
            })
            .collect();
        let mut guard = 0usize;
        while residual.iter().any(|&r| r > 0) {
            guard += 1;
            if guard > 100_000 {
                // fall back to the always-feasible ceiling
                let values: Vec<u64> = x.iter().map(|&v| v.ceil().max(0.0) as u64).collect();
                let obj = values.iter().sum();
                return (values, obj);
            }
            let mut best_j = usize::MAX;
            let mut best_cover = 0i64;
            for j in 0..p {
                let cover: i64 = (0..k)
                    .map(|r| (pool.get(j).counts()[r] as i64).min(residual[r].max(0)))
                    .sum();
                if cover > best_cover {
                    best_cover = cover;
                    best_j = j;
                }
            }
            if best_j == usize::MAX {
                let values: Vec<u64> = x.iter().map(|&v| v.ceil().max(0.0) as u64).collect();
                let obj = values.iter().sum();
                return (values, obj);
            }
            values[best_j] += 1;
            for r in 0..k {
                residual[r] -= pool.get(best_j).counts()[r] as i64;
            }
        }
        let obj = values.iter().sum();
        (values, obj)
    };

    let root = node_lp(&vec![0; p], &vec![None; p])?
        .ok_or_else(|| CspError::SolverFailure("covered RMP root is infeasible".into()))?;
    let root_bound = root.1;

    let (mut best_values, mut best_obj) = round_and_repair(&root.0);
    debug_assert!(covers(&best_values));

    let mut open: Vec<Node> = vec![Node {
        lower: vec![0; p],
        upper: vec![None; p],
        parent_bound: root_bound,
    }];
    let mut proven = true;
    let mut pops: u64 = 0;
    while let Some(node) = {
        pops += 1;
        if pops % BEST_FIRST_EVERY == 0 && open.len() > 1 {
            // best-first restart: bring the lowest-bound node to the top
            let (idx, _) = open
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.parent_bound.partial_cmp(&b.1.parent_bound).unwrap())
                .unwrap();
            let last = open.len() - 1;
            open.swap(idx, last);
        }
        open.pop()
    } {
        if started.elapsed() > time_limit {
            open.push(node);
            proven = false;
            break;
        }
        if (node.parent_bound - INT_TOL).ceil() as u64 >= best_obj {
            continue;
        }
        let Some((x, bound)) = node_lp(&node.lower, &node.upper)? else {
            continue;
        };
        let (cand_values, cand_obj) = round_and_repair(&x);
        if cand_obj < best_obj && covers(&cand_values) {
            best_obj = cand_obj;
            best_values = cand_values;
        }
        if (bound - INT_TOL).ceil() as u64 >= best_obj {
            continue;
        }
        // most fractional variable, ties by lowest index
        let mut branch: Option<(usize, f64)> = None;
        for (j, &v) in x.iter().enumerate() {
            let frac = (v - v.round()).abs();
            if frac > INT_TOL {
                let dist = (v - v.floor()).min(v.ceil() - v);
                if branch.map_or(true, |(_, d)| dist > d + 1e-12) {
                    branch = Some((j, dist));
                }
            }
        }
        match branch {
            None => {
                let cand: Vec<u64> = x.iter().map(|&v| v.round().max(0.0) as u64).collect();
                let obj: u64 = cand.iter().sum();
                if covers(&cand) && obj < best_obj {
                    best_obj = obj;
                    best_values = cand;
                }
            }
            Some((j, _)) => {
                let v = x[j];
                let mut floor_child = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                    parent_bound: bound,
                };
                floor_child.upper[j] = Some(v.floor().max(0.0) as u32);
                let mut ceil_child = Node {
                    lower: node.lower,
                    upper: node.upper,
                    parent_bound: bound,
                };
                ceil_child.lower[j] = v.ceil().max(0.0) as u32;
                let ceil_valid = ceil_child.upper[j].is_none_or(|u| ceil_child.lower[j] <= u);
                // LIFO stack: push floor first so the ceil branch dives first
                open.push(floor_child);
                if ceil_valid {
                    open.push(ceil_child);
                }
            }
        }
    }
    let lower_bound = if proven {
        best_obj as f64
    } else {
        open.iter()
            .map(|n| n.parent_bound)
            .fold(root_bound, f64::min)
    };
    debug_assert!(covers(&best_values));
    Ok(IpSolution {
        values: best_values,
        objective: best_obj,
        proven,
        lower_bound,
        nodes: pops,
    })
}

/// Estimated pattern count: the product of singleton multiplicities plus one.
pub fn enumeration_estimate(instance: &Instance) -> f64 {
    (0..instance.num_items())
        .map(|k| instance.singleton_pattern(k).counts()[k] as f64 + 1.0)
        .product()
}

/// Enumerate every feasible nonzero pattern of a tiny instance, in
/// lexicographically ascending order. Refuses when the estimate exceeds
/// [`ORACLE_BUDGET`].
pub fn oracle_enumerate_patterns(instance: &Instance) -> Result<ColumnPool> {
    let estimate = enumeration_estimate(instance);
    if !(estimate <= ORACLE_BUDGET as f64) {
        return Err(CspError::BudgetExceeded {
            estimate,
            limit: ORACLE_BUDGET,
        });
    }
    let k = instance.num_items();
    let mut pool = ColumnPool::new(k);
    let mut counts = vec![0u32; k];
    // prefix-feasible DFS; monotonicity of the load makes the cut exact
    fn rec(
        instance: &Instance,
        depth: usize,
        counts: &mut Vec<u32>,
        pool: &mut ColumnPool,
    ) -> Result<()> {
        if depth == instance.num_items() {
            if counts.iter().any(|&c| c > 0) {
                pool.insert(instance, Pattern::new(counts.clone())?)?;
            }
            return Ok(());
        }
        let mut c = 0;
        loop {
            counts[depth] = c;
            if !instance.pattern_feasible(counts)? {
                break;
            }
            rec(instance, depth + 1, counts, pool)?;
            c += 1;
        }
        counts[depth] = 0;
        Ok(())
    }
    rec(instance, 0, &mut counts, &mut pool)?;
    Ok(pool)
}

/// Exact optimum of the full problem: enumerate all patterns, then solve the
/// integer program over them.
pub fn oracle_solve_exact(instance: &Instance, time_limit: Duration) -> Result<IpSolution> {
    let pool = oracle_enumerate_patterns(instance)?;
    solve_irmp(&pool, &instance.demands(), time_limit)
}

/// Independent LP oracle: optimal value of the covering LP over a pool,
/// computed by a dense tableau dual simplex (slack basis is dual feasible,
/// so no phase 1 is needed). Shares no code with the revised simplex.
pub fn oracle_lp_optimum(pool: &ColumnPool, demands: &[u32]) -> Result<f64> {
    if pool.is_empty() {
        return Err(CspError::InvalidInput("empty column pool".into()));
    }
    if !pool.uncovered_items().is_empty() {
        return Err(CspError::InvalidInput(
            "pool does not cover every item".into(),
        ));
    }
    let k = demands.len();
    let p = pool.len();
    let n = p + k; // structural + slack
    // rows: -A x + s = -b  (from A x >= b)
    let width = n + 1;
    let mut t = vec![0.0f64; k * width];
    for r in 0..k {
        for j in 0..p {
            t[r * width + j] = -(pool.get(j).counts()[r] as f64);
        }
        t[r * width + p + r] = 1.0;
        t[r * width + n] = -(demands[r] as f64);
    }
    // cost row: reduced costs (start: c itself, dual feasible), then -objective
    let mut cost = vec![0.0f64; width];
    for j in 0..p {
        cost[j] = 1.0;
    }
    let mut basis: Vec<usize> = (p..n).collect();
    let tol = 1e-9;
    for _round in 0..100_000 {
        // leaving: most negative rhs
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..k {
            let rhs = t[r * width + n];
            if rhs < -tol && leave.map_or(true, |(_, v)| rhs < v) {
                leave = Some((r, rhs));
            }
        }
        let Some((r, _)) = leave else {
            // primal feasible and dual feasible: optimal
            return Ok(-cost[n]);
        };
        // entering: dual ratio test over negative row entries
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..n {
            let a = t[r * width + j];
            if a < -tol {
                let ratio = cost[j] / (-a);
                let better = match enter {
                    None => true,
                    Some((je, re)) => ratio < re - 1e-12 || (ratio <= re + 1e-12 && j < je),
                };
                if better {
                    enter = Some((j, ratio));
                }
            }
        }
        let Some((j, _)) = enter else {
            return Err(CspError::SolverFailure(
                "dual simplex oracle: primal infeasible row".into(),
            ));
        };
        // pivot on (r, j)
        let piv = t[r * width + j];
        for c in 0..width {
            t[r * width + c] /= piv;
        }
        for rr in 0..k {
            if rr != r {
                let f = t[rr * width + j];
                if f != 0.0 {
                    for c in 0..width {
                        t[rr * width + c] -= f * t[r * width + c];
                    }
                }
            }
        }
        let f = cost[j];
        if f != 0.0 {
            for c in 0..width {
                cost[c] -= f * t[r * width + c];
            }
        }
        basis[r] = j;
    }
    Err(CspError::SolverFailure(
        "dual simplex oracle: iteration cap exceeded".into(),
    ))
}
