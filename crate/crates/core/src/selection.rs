//! Column selection: repeatedly solve the LP over the working pool, harvest
//! the columns carrying positive primal value, remove them, repair coverage,
//! and repeat. The harvested set keeps the optimal basis of the first pass,
//! so its LP value matches the input pool's.

use crate::error::{CspError, Result};
use crate::model::{ColumnPool, Instance};
use crate::simplex::{self, LpStatus};

/// Primal values above this count as "used by the LP" and get selected.
pub const SELECT_TOL: f64 = 1e-7;

/// Insert a maximal singleton for every item the pool leaves uncovered.
pub fn feasibility_check(pool: &ColumnPool, instance: &Instance) -> ColumnPool {
    let mut repaired = pool.clone();
    for k in repaired.uncovered_items() {
        repaired
            .insert(instance, instance.singleton_pattern(k))
            .expect("maximal singletons are feasible");
    }
    repaired
}

/// Run `s` selection passes over the pool and return the harvested columns,
/// insertion-ordered and deduplicated.
pub fn select_columns(pool: &ColumnPool, instance: &Instance, s: usize) -> Result<ColumnPool> {
    if s < 1 {
        return Err(CspError::InvalidInput(
            "column selection requires s >= 1".into(),
        ));
    }
    let demands = instance.demands();
    let mut working = pool.clone();
    let mut selected = ColumnPool::new(instance.num_items());
    for _ in 0..s {
        working = feasibility_check(&working, instance);
        let lp = simplex::solve_rmp(&working, &demands)?;
        if lp.status != LpStatus::Optimal {
            return Err(CspError::SolverFailure(
                "selection LP infeasible after repair".into(),
            ));
        }
        let take: Vec<usize> = lp
            .primal
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > SELECT_TOL)
            .map(|(j, _)| j)
            .collect();
        for &j in &take {
            selected.insert(instance, working.get(j).clone())?;
        }
        working.remove_indices(&take);
    }
    Ok(selected)
}
