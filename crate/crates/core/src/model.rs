//! Domain types shared by all modules: instances, patterns, column pools,
//! dual vectors, solver configuration and the final report.
//!
//! An instance is the covering formulation: satisfy demand `b_k` for each of
//! `K` item kinds by cutting the fewest bins of capacity `V`. A pattern says
//! how many pieces of each kind one bin yields; it is feasible when its total
//! load fits the capacity. With deterministic sizes the load is `sum a_k v_k`;
//! with Gaussian sizes the chance constraint turns into
//! `sum a_k mu_k + D(alpha) * sqrt(sum a_k sigma_k^2) <= V`.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{CspError, Result};

/// Relative feasibility tolerance on the capacity: a load `<= V * (1 + FEAS_REL_TOL)`
/// counts as fitting, so integer-size instances with fractional capacity behave exactly.
pub const FEAS_REL_TOL: f64 = 1e-9;

/// Covering duals are nonnegative up to numerical noise; entries below
/// `-DUAL_TOL` are rejected as solver bugs.
pub const DUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    /// Deterministic sizes, linear capacity constraint.
    Linear,
    /// Gaussian sizes under a chance constraint with confidence `alpha`.
    Chance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ItemSize {
    Deterministic(f64),
    Gaussian { mean: f64, std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Item {
    pub size: ItemSize,
    pub demand: u32,
}

/// A validated problem instance. Items are homogeneous in kind: all
/// deterministic or all Gaussian, never mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct Instance {
    items: Vec<Item>,
    capacity: f64,
    alpha: Option<f64>,
    safety_factor: f64,
    kind: InstanceKind,
}

impl Instance {
    /// Build a deterministic-size instance from `(size, demand)` pairs.
    pub fn linear(items: &[(f64, u32)], capacity: f64) -> Result<Self> {
        let items = items
            .iter()
            .map(|&(size, demand)| Item {
                size: ItemSize::Deterministic(size),
                demand,
            })
            .collect();
        Self::validated(items, capacity, None, InstanceKind::Linear)
    }

    /// Build a chance-constrained instance from `(mean, std, demand)` triples.
    pub fn chance(items: &[(f64, f64, u32)], capacity: f64, alpha: f64) -> Result<Self> {
        let items = items
            .iter()
            .map(|&(mean, std, demand)| Item {
                size: ItemSize::Gaussian { mean, std },
                demand,
            })
            .collect();
        Self::validated(items, capacity, Some(alpha), InstanceKind::Chance)
    }

    fn validated(
        items: Vec<Item>,
        capacity: f64,
        alpha: Option<f64>,
        kind: InstanceKind,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(CspError::InvalidInstance("no items".into()));
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(CspError::InvalidInstance(format!(
                "capacity must be positive, got {capacity}"
            )));
        }
        let safety_factor = match (kind, alpha) {
            (InstanceKind::Linear, None) => 0.0,
            (InstanceKind::Chance, Some(a)) => {
                if !(a > 0.5 && a < 1.0) {
                    return Err(CspError::InvalidInstance(format!(
                        "alpha must lie in (0.5, 1), got {a}"
                    )));
                }
                // Standard normal quantile: the Gaussian chance constraint
                // P(load <= V) >= alpha becomes mu·a + D(alpha)·sqrt(sigma²·a) <= V.
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                normal.inverse_cdf(a)
            }
            (InstanceKind::Linear, Some(_)) => {
                return Err(CspError::InvalidInstance(
                    "alpha is only valid for chance-constrained instances".into(),
                ))
            }
            (InstanceKind::Chance, None) => {
                return Err(CspError::InvalidInstance(
                    "chance-constrained instances require alpha".into(),
                ))
            }
        };
        for (k, item) in items.iter().enumerate() {
            if item.demand < 1 {
                return Err(CspError::InvalidInstance(format!(
                    "item {k}: demand must be >= 1"
                )));
            }
            match item.size {
                ItemSize::Deterministic(v) => {
                    if kind != InstanceKind::Linear {
                        return Err(CspError::InvalidInstance(
                            "mixed deterministic and gaussian items".into(),
                        ));
                    }
                    if !(v.is_finite() && v > 0.0) {
                        return Err(CspError::InvalidInstance(format!(
                            "item {k}: size must be positive, got {v}"
                        )));
                    }
                }
                ItemSize::Gaussian { mean, std } => {
                    if kind != InstanceKind::Chance {
                        return Err(CspError::InvalidInstance(
                            "mixed deterministic and gaussian items".into(),
                        ));
                    }
                    if !(mean.is_finite() && mean > 0.0) {
                        return Err(CspError::InvalidInstance(format!(
                            "item {k}: mean must be positive, got {mean}"
                        )));
                    }
                    if !(std.is_finite() && std >= 0.0) {
                        return Err(CspError::InvalidInstance(format!(
                            "item {k}: std must be nonnegative, got {std}"
                        )));
                    }
                }
            }
        }
        let inst = Instance {
            items,
            capacity,
            alpha,
            safety_factor,
            kind,
        };
        // Every item must fit in a bin on its own, otherwise no packing exists.
        for k in 0..inst.num_items() {
            let load = inst.unit_load(k);
            if load > inst.capacity_tol() {
                return Err(CspError::InfeasibleInstance {
                    item: k,
                    detail: format!("single-piece load {load:.6} exceeds capacity {capacity}"),
                });
            }
        }
        Ok(inst)
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// The safety factor `D(alpha)` of the chance constraint; 0 for linear instances.
    pub fn safety_factor(&self) -> f64 {
        self.safety_factor
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn demands(&self) -> Vec<u32> {
        self.items.iter().map(|it| it.demand).collect()
    }

    /// Capacity with the relative feasibility tolerance applied.
    pub fn capacity_tol(&self) -> f64 {
        self.capacity * (1.0 + FEAS_REL_TOL)
    }

    /// Effective load of a single piece of item `k` (size, or mean + D·std).
    fn unit_load(&self, k: usize) -> f64 {
        match self.items[k].size {
            ItemSize::Deterministic(v) => v,
            ItemSize::Gaussian { mean, std } => mean + self.safety_factor * std,
        }
    }

    /// Total load of a count vector: `sum a_k v_k`, or
    /// `sum a_k mu_k + D(alpha) * sqrt(sum a_k sigma_k^2)` for Gaussian sizes.
    pub fn load(&self, counts: &[u32]) -> f64 {
        match self.kind {
            InstanceKind::Linear => counts
                .iter()
                .zip(&self.items)
                .map(|(&a, it)| match it.size {
                    ItemSize::Deterministic(v) => a as f64 * v,
                    ItemSize::Gaussian { .. } => unreachable!("homogeneous kind"),
                })
                .sum(),
            InstanceKind::Chance => {
                let mut mean_sum = 0.0;
                let mut var_sum = 0.0;
                for (&a, it) in counts.iter().zip(&self.items) {
                    if let ItemSize::Gaussian { mean, std } = it.size {
                        mean_sum += a as f64 * mean;
                        var_sum += a as f64 * std * std;
                    }
                }
                mean_sum + self.safety_factor * var_sum.sqrt()
            }
        }
    }

    /// Whether `counts` describes a feasible pattern for this instance.
    pub fn pattern_feasible(&self, counts: &[u32]) -> Result<bool> {
        if counts.len() != self.num_items() {
            return Err(CspError::DimensionMismatch {
                expected: self.num_items(),
                got: counts.len(),
            });
        }
        Ok(self.load(counts) <= self.capacity_tol())
    }

    /// The maximal feasible single-item pattern `m * e_k`. The instance
    /// invariant guarantees `m >= 1`.
    pub fn singleton_pattern(&self, k: usize) -> Pattern {
        assert!(k < self.num_items(), "item index out of range");
        let m = match self.items[k].size {
            ItemSize::Deterministic(v) => (self.capacity_tol() / v).floor() as u32,
            ItemSize::Gaussian { mean, std } => {
                // Largest m with m*mean + D*std*sqrt(m) <= V: the load is
                // monotone in m, so bracket then bisect on integers.
                let fits = |m: u64| -> bool {
                    m as f64 * mean + self.safety_factor * std * (m as f64).sqrt()
                        <= self.capacity_tol()
                };
                let mut hi: u64 = 1;
                while fits(hi * 2) {
                    hi *= 2;
                }
                let mut lo = hi; // fits(lo) holds
                hi *= 2; // !fits(hi)
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if fits(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo as u32
            }
        };
        debug_assert!(m >= 1);
        let mut counts = vec![0u32; self.num_items()];
        counts[k] = m;
        Pattern::new(counts).expect("singleton is nonzero")
    }
}

/// A cutting pattern: how many pieces of each item kind one bin yields.
/// At least one entry is positive. Lexicographic order on the count vector
/// is the deterministic tie-break used throughout.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    counts: Vec<u32>,
}

impl Pattern {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(CspError::InvalidInput("empty pattern".into()));
        }
        Ok(Pattern { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Reduced cost `1 - sum pi_k a_k` under the given duals.
    pub fn reduced_cost(&self, duals: &DualVector) -> Result<f64> {
        if duals.len() != self.counts.len() {
            return Err(CspError::DimensionMismatch {
                expected: self.counts.len(),
                got: duals.len(),
            });
        }
        let dot: f64 = self
            .counts
            .iter()
            .zip(duals.values())
            .map(|(&a, &pi)| a as f64 * pi)
            .sum();
        Ok(1.0 - dot)
    }
}

/// Nonnegative duals of the RMP covering constraints. Small negative entries
/// (numerical noise) are tolerated and clamped before pricing.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    values: Vec<f64>,
}

impl DualVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&v) = values.iter().find(|&&v| !(v >= -DUAL_TOL)) {
            return Err(CspError::InvalidInput(format!(
                "dual value {v} below -{DUAL_TOL}"
            )));
        }
        Ok(DualVector { values })
    }

    pub fn zeros(len: usize) -> Self {
        DualVector {
            values: vec![0.0; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with negative noise clamped to exactly zero.
    pub fn clamped(&self) -> DualVector {
        DualVector {
            values: self.values.iter().map(|&v| v.max(0.0)).collect(),
        }
    }

    pub fn dot_counts(&self, counts: &[u32]) -> f64 {
        self.values
            .iter()
            .zip(counts)
            .map(|(&pi, &a)| pi * a as f64)
            .sum()
    }

    pub fn dot_demands(&self, demands: &[u32]) -> f64 {
        self.values
            .iter()
            .zip(demands)
            .map(|(&pi, &b)| pi * b as f64)
            .sum()
    }
}

/// Ordered, deduplicated set of feasible patterns; the evolving column set of
/// the master problem. Insertion order is preserved.
#[derive(Debug, Clone)]
pub struct ColumnPool {
    num_items: usize,
    patterns: Vec<Pattern>,
    index: HashMap<Vec<u32>, usize>,
}

impl PartialEq for ColumnPool {
    fn eq(&self, other: &Self) -> bool {
        self.num_items == other.num_items && self.patterns == other.patterns
    }
}

impl ColumnPool {
    pub fn new(num_items: usize) -> Self {
        ColumnPool {
            num_items,
            patterns: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, i: usize) -> &Pattern {
        &self.patterns[i]
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pattern> {
        self.patterns.iter()
    }

    pub fn contains(&self, pattern: &Pattern) -> bool {
        self.index.contains_key(pattern.counts())
    }

    /// Insert a pattern, enforcing feasibility for the owning instance.
    /// Returns `false` when an identical pattern is already pooled.
    pub fn insert(&mut self, instance: &Instance, pattern: Pattern) -> Result<bool> {
        if pattern.len() != self.num_items {
            return Err(CspError::DimensionMismatch {
                expected: self.num_items,
                got: pattern.len(),
            });
        }
        if !instance.pattern_feasible(pattern.counts())? {
            return Err(CspError::InvalidInput(format!(
                "infeasible pattern {:?}",
                pattern.counts()
            )));
        }
        if self.index.contains_key(pattern.counts()) {
            return Ok(false);
        }
        self.index
            .insert(pattern.counts().to_vec(), self.patterns.len());
        self.patterns.push(pattern);
        Ok(true)
    }

    /// Item kinds not covered by any pooled column.
    pub fn uncovered_items(&self) -> Vec<usize> {
        (0..self.num_items)
            .filter(|&k| !self.patterns.iter().any(|p| p.counts()[k] > 0))
            .collect()
    }

    /// Remove the patterns at the given indices, preserving the order of the rest.
    pub fn remove_indices(&mut self, indices: &[usize]) {
        if indices.is_empty() {
            return;
        }
        let mut drop = vec![false; self.patterns.len()];
        for &i in indices {
            drop[i] = true;
        }
        let old = std::mem::take(&mut self.patterns);
        self.index.clear();
        for (i, p) in old.into_iter().enumerate() {
            if !drop[i] {
                self.index.insert(p.counts().to_vec(), self.patterns.len());
                self.patterns.push(p);
            }
        }
    }
}

mod duration_secs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        if !(secs.is_finite() && secs >= 0.0) {
            return Err(serde::de::Error::custom("duration must be nonnegative"));
        }
        Ok(Duration::from_secs_f64(secs))
    }
}

/// Hyperparameters of the column-generation run. Field names follow the
/// config-file schema; time limits are JSON numbers in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgConfig {
    /// Columns returned per pricing call (`n`).
    pub num_column: usize,
    /// Exploration restarts (`e`); 0 disables multi-path.
    pub num_path: usize,
    /// Iterations per exploration path (`d`); `None` defaults to the item count.
    pub depth: Option<usize>,
    /// Column-selection passes (`s`); 0 skips selection.
    pub selection_times: usize,
    /// Early-stop threshold on objective improvement (epsilon).
    pub dual_objective_threshold: f64,
    /// Consecutive small improvements before an early stop (`t`).
    pub dual_throttles: usize,
    /// Time limit per pricing call.
    #[serde(with = "duration_secs")]
    pub sub_time_limit: Duration,
    /// Consecutive pricing timeouts before giving up on generation.
    pub sub_throttles: usize,
    /// Time limit for the final integer solve.
    #[serde(with = "duration_secs")]
    pub csp_time_limit: Duration,
    /// Iterate strictly to convergence (`true`) or allow early stopping.
    pub convergence: bool,
    /// Fraction of the pool sampled for each multi-path restart.
    pub sample_fraction: f64,
    /// Seed for all run-internal randomness (path sampling).
    pub seed: u64,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            num_column: 3,
            num_path: 10,
            depth: None,
            selection_times: 6,
            dual_objective_threshold: 0.05,
            dual_throttles: 4,
            sub_time_limit: Duration::from_secs(10),
            sub_throttles: 3,
            csp_time_limit: Duration::from_secs(60),
            convergence: true,
            sample_fraction: 0.1,
            seed: 0,
        }
    }
}

impl CgConfig {
    /// Defaults tuned per constraint family: chance-constrained pricing is
    /// expensive, so fewer exploration paths are used there.
    pub fn default_for(kind: InstanceKind) -> Self {
        let mut cfg = CgConfig::default();
        if kind == InstanceKind::Chance {
            cfg.num_path = 4;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_column < 1 {
            return Err(CspError::InvalidConfig("num_column must be >= 1".into()));
        }
        if let Some(d) = self.depth {
            if d < 1 {
                return Err(CspError::InvalidConfig("depth must be >= 1".into()));
            }
        }
        if self.dual_throttles < 1 {
            return Err(CspError::InvalidConfig(
                "dual_throttles must be >= 1".into(),
            ));
        }
        if self.sub_throttles < 1 {
            return Err(CspError::InvalidConfig("sub_throttles must be >= 1".into()));
        }
        if !(self.dual_objective_threshold >= 0.0 && self.dual_objective_threshold.is_finite()) {
            return Err(CspError::InvalidConfig(
                "dual_objective_threshold must be nonnegative".into(),
            ));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(CspError::InvalidConfig(
                "sample_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Effective exploration depth for an instance with `k` items.
    pub fn depth_for(&self, k: usize) -> usize {
        self.depth.unwrap_or(k).max(1)
    }
}

/// Wall-clock seconds spent per pipeline stage. Recorded, never asserted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub exploration_s: f64,
    pub convergence_s: f64,
    pub selection_s: f64,
    pub integer_s: f64,
}

/// Outcome of a full solve: bounds, gap, counters and the objective trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgReport {
    /// Final RMP objective (the LP value reached by column generation).
    pub z_rmp: f64,
    /// Integer objective over the final column set.
    pub z_irmp: u64,
    /// Farley lower bound at the last exactly-priced iterate; `None` when vacuous.
    pub farley_lb: Option<f64>,
    /// Absolute gap `z_irmp - z_rmp`.
    pub abs_gap: f64,
    /// Whether the gap certifies integer optimality (`abs_gap < 1`).
    pub proven_optimal: bool,
    pub iterations: usize,
    pub pricing_calls: usize,
    pub columns_generated: usize,
    pub columns_selected: usize,
    pub early_stopped: bool,
    pub timings: StageTimings,
    /// Per-iteration RMP objective of the convergence-stage loop.
    pub dual_objective_trace: Vec<f64>,
}

/// Gap threshold certifying optimality: integer values make `gap < 1` exact,
/// the margin only absorbs LP noise.
pub const OPTIMALITY_GAP: f64 = 1.0 - 1e-6;

// ---------------------------------------------------------------------------
// JSON instance schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    kind: InstanceKind,
    capacity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    items: Vec<ItemJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum ItemJson {
    Deterministic { size: f64, demand: u32 },
    Gaussian { mean: f64, std: f64, demand: u32 },
}

impl From<Instance> for InstanceJson {
    fn from(inst: Instance) -> Self {
        InstanceJson {
            kind: inst.kind,
            capacity: inst.capacity,
            alpha: inst.alpha,
            items: inst
                .items
                .iter()
                .map(|it| match it.size {
                    ItemSize::Deterministic(size) => ItemJson::Deterministic {
                        size,
                        demand: it.demand,
                    },
                    ItemSize::Gaussian { mean, std } => ItemJson::Gaussian {
                        mean,
                        std,
                        demand: it.demand,
                    },
                })
                .collect(),
        }
    }
}

impl TryFrom<InstanceJson> for Instance {
    type Error = CspError;

    fn try_from(j: InstanceJson) -> Result<Self> {
        let items = j
            .items
            .into_iter()
            .map(|it| match it {
                ItemJson::Deterministic { size, demand } => Item {
                    size: ItemSize::Deterministic(size),
                    demand,
                },
                ItemJson::Gaussian { mean, std, demand } => Item {
                    size: ItemSize::Gaussian { mean, std },
                    demand,
                },
            })
            .collect();
        Instance::validated(items, j.capacity, j.alpha, j.kind)
    }
}

impl Instance {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d233_alpha() -> f64 {
        // alpha such that the safety factor is (almost exactly) 2.33
        Normal::new(0.0, 1.0).unwrap().cdf(2.33)
    }

    fn tiny_linear() -> Instance {
        Instance::linear(&[(3.0, 2), (4.0, 2), (5.0, 2)], 10.0).unwrap()
    }

    fn tiny_gaussian() -> Instance {
        Instance::chance(&[(1.0, 0.5, 4)], 31.58, d233_alpha()).unwrap()
    }

    #[test]
    fn pattern_feasible_exact_capacity() {
        let inst = tiny_linear();
        assert!(inst.pattern_feasible(&[2, 1, 0]).unwrap());
        assert!(!inst.pattern_feasible(&[0, 0, 3]).unwrap());
    }

    #[test]
    fn pattern_feasible_gaussian() {
        let inst = tiny_gaussian();
        // 25 + 2.33*0.5*sqrt(25) = 30.825 <= 31.58
        assert!(inst.pattern_feasible(&[25]).unwrap());
        // 26 + 2.33*0.5*sqrt(26) ~= 31.94 > 31.58
        assert!(!inst.pattern_feasible(&[26]).unwrap());
    }

    #[test]
    fn pattern_feasible_dimension_mismatch() {
        let inst = tiny_linear();
        assert!(matches!(
            inst.pattern_feasible(&[1, 1]),
            Err(CspError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reduced_cost_examples() {
        let duals = DualVector::new(vec![0.4, 0.5, 0.6]).unwrap();
        let p = Pattern::new(vec![2, 1, 0]).unwrap();
        assert!((p.reduced_cost(&duals).unwrap() - (-0.3)).abs() < 1e-12);
        let q = Pattern::new(vec![0, 0, 2]).unwrap();
        assert!((q.reduced_cost(&duals).unwrap() - (-0.2)).abs() < 1e-12);
        let zeros = DualVector::zeros(3);
        assert_eq!(p.reduced_cost(&zeros).unwrap(), 1.0);
    }

    #[test]
    fn singleton_patterns() {
        let inst = tiny_linear();
        assert_eq!(inst.singleton_pattern(0).counts(), &[3, 0, 0]);
        assert_eq!(inst.singleton_pattern(1).counts(), &[0, 2, 0]);
        assert_eq!(inst.singleton_pattern(2).counts(), &[0, 0, 2]);

        let wide = Instance::linear(&[(70.0, 1)], 127.58).unwrap();
        assert_eq!(wide.singleton_pattern(0).counts(), &[1]);

        let g = tiny_gaussian();
        assert_eq!(g.singleton_pattern(0).counts(), &[25]);
    }

    #[test]
    fn gaussian_singleton_matches_exhaustive() {
        let g = tiny_gaussian();
        let m = g.singleton_pattern(0).counts()[0];
        let best = (1..200)
            .filter(|&c| g.pattern_feasible(&[c]).unwrap())
            .max()
            .unwrap();
        assert_eq!(m, best);
    }

    #[test]
    fn instance_rejects_oversized_item() {
        let err = Instance::linear(&[(11.0, 1)], 10.0).unwrap_err();
        assert!(matches!(err, CspError::InfeasibleInstance { item: 0, .. }));
    }

    #[test]
    fn instance_rejects_bad_alpha() {
        assert!(Instance::chance(&[(1.0, 0.1, 1)], 10.0, 0.4).is_err());
        assert!(Instance::chance(&[(1.0, 0.1, 1)], 10.0, 1.0).is_err());
    }

    #[test]
    fn pool_dedup_and_coverage() {
        let inst = tiny_linear();
        let mut pool = ColumnPool::new(3);
        assert!(pool
            .insert(&inst, Pattern::new(vec![2, 1, 0]).unwrap())
            .unwrap());
        assert!(!pool
            .insert(&inst, Pattern::new(vec![2, 1, 0]).unwrap())
            .unwrap());
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.uncovered_items(), vec![2]);
        assert!(pool
            .insert(&inst, Pattern::new(vec![0, 0, 2]).unwrap())
            .unwrap());
        assert!(pool.uncovered_items().is_empty());
        // infeasible insert is rejected
        assert!(pool
            .insert(&inst, Pattern::new(vec![0, 0, 3]).unwrap())
            .is_err());
    }

    #[test]
    fn pool_remove_preserves_order() {
        let inst = tiny_linear();
        let mut pool = ColumnPool::new(3);
        for counts in [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]] {
            pool.insert(&inst, Pattern::new(counts).unwrap()).unwrap();
        }
        pool.remove_indices(&[0, 2]);
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.get(0).counts(), &[0, 1, 0]);
        assert_eq!(pool.get(1).counts(), &[1, 1, 0]);
        assert!(pool.contains(&Pattern::new(vec![1, 1, 0]).unwrap()));
        assert!(!pool.contains(&Pattern::new(vec![1, 0, 0]).unwrap()));
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = tiny_linear();
        let s = inst.to_json_string().unwrap();
        let back = Instance::from_json_str(&s).unwrap();
        assert_eq!(inst, back);

        let g = Instance::chance(&[(1.0, 0.5, 4), (2.0, 0.1, 2)], 31.58, 0.99).unwrap();
        let s = g.to_json_string().unwrap();
        let back = Instance::from_json_str(&s).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn instance_json_schema_shape() {
        let inst = Instance::linear(&[(3.0, 2)], 10.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&inst.to_json_string().unwrap()).unwrap();
        assert_eq!(v["kind"], "linear");
        assert_eq!(v["capacity"], 10.0);
        assert_eq!(v["items"][0]["size"], 3.0);
        assert_eq!(v["items"][0]["demand"], 2);
        assert!(v.get("alpha").is_none());

        let parsed = Instance::from_json_str(
            r#"{"kind":"chance","capacity":31.58,"alpha":0.99,
                "items":[{"mean":1.0,"std":0.5,"demand":4}]}"#,
        )
        .unwrap();
        assert_eq!(parsed.kind(), InstanceKind::Chance);
        assert_eq!(parsed.demands(), vec![4]);
    }

    #[test]
    fn mixed_kind_rejected() {
        let err = Instance::from_json_str(
            r#"{"kind":"linear","capacity":10.0,
                "items":[{"size":3.0,"demand":2},{"mean":1.0,"std":0.5,"demand":4}]}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = CgConfig::default();
        assert_eq!(cfg.num_column, 3);
        assert_eq!(cfg.num_path, 10);
        assert_eq!(cfg.selection_times, 6);
        assert_eq!(cfg.dual_throttles, 4);
        assert!((cfg.dual_objective_threshold - 0.05).abs() < 1e-12);
        cfg.validate().unwrap();

        let chance = CgConfig::default_for(InstanceKind::Chance);
        assert_eq!(chance.num_path, 4);

        let mut bad = CgConfig::default();
        bad.num_column = 0;
        assert!(bad.validate().is_err());
        bad = CgConfig::default();
        bad.sample_fraction = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_partial() {
        let cfg: CgConfig =
            serde_json::from_str(r#"{"num_column":2,"sub_time_limit":2.5}"#).unwrap();
        assert_eq!(cfg.num_column, 2);
        assert_eq!(cfg.sub_time_limit, Duration::from_secs_f64(2.5));
        assert_eq!(cfg.num_path, 10);
    }
}
