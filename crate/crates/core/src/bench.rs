//! Benchmark harness: instance generators for both constraint families, an
//! experiment runner over instance/strategy cells, and report emission.
//!
//! Linear instances draw integer sizes from [1, 70] and integer demands from
//! [50, 200] with bin capacity 127.58. Chance-constrained instances sample
//! services without replacement from a fixed pool of 30 (mean, std, count)
//! statistics with bin capacity 31.58.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{CspError, Result};
use crate::model::{CgConfig, CgReport, Instance, InstanceKind, OPTIMALITY_GAP};

/// Linear-family bin capacity.
pub const LINEAR_CAPACITY: f64 = 127.58;
/// Chance-family bin capacity.
pub const CHANCE_CAPACITY: f64 = 31.58;
/// Default confidence level of generated chance instances.
pub const DEFAULT_ALPHA: f64 = 0.99;

/// One row of the 30-entry service pool backing the chance-constrained
/// generator: container size distribution and container count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceStat {
    pub mean: f64,
    pub std: f64,
    pub number: u32,
}

/// The embedded service pool of the nonlinear dataset.
pub const SERVICE_POOL: [ServiceStat; 30] = [
    ServiceStat { mean: 0.73, std: 1.73, number: 270 },
    ServiceStat { mean: 0.84, std: 0.47, number: 55 },
    ServiceStat { mean: 0.97, std: 0.43, number: 1618 },
    ServiceStat { mean: 1.01, std: 2.69, number: 904 },
    ServiceStat { mean: 1.06, std: 0.85, number: 576 },
    ServiceStat { mean: 1.06, std: 0.19, number: 1085 },
    ServiceStat { mean: 1.06, std: 0.9, number: 1035 },
    ServiceStat { mean: 1.07, std: 0.82, number: 118 },
    ServiceStat { mean: 1.12, std: 0.97, number: 1450 },
    ServiceStat { mean: 1.17, std: 0.62, number: 313 },
    ServiceStat { mean: 1.51, std: 0.31, number: 44 },
    ServiceStat { mean: 1.52, std: 0.62, number: 544 },
    ServiceStat { mean: 1.56, std: 0.84, number: 697 },
    ServiceStat { mean: 1.57, std: 0.57, number: 427 },
    ServiceStat { mean: 1.94, std: 0.7, number: 363 },
    ServiceStat { mean: 1.96, std: 0.55, number: 360 },
    ServiceStat { mean: 2.41, std: 0.9, number: 701 },
    ServiceStat { mean: 2.42, std: 1.15, number: 1425 },
    ServiceStat { mean: 2.46, std: 1.95, number: 305 },
    ServiceStat { mean: 2.47, std: 0.99, number: 228 },
    ServiceStat { mean: 2.48, std: 0.66, number: 1552 },
    ServiceStat { mean: 2.48, std: 0.75, number: 378 },
    ServiceStat { mean: 2.49, std: 0.25, number: 606 },
    ServiceStat { mean: 2.52, std: 1.23, number: 180 },
    ServiceStat { mean: 2.59, std: 1.21, number: 293 },
    ServiceStat { mean: 3.33, std: 0.47, number: 1424 },
    ServiceStat { mean: 3.81, std: 0.87, number: 501 },
    ServiceStat { mean: 4.12, std: 1.28, number: 1019 },
    ServiceStat { mean: 6.18, std: 0.46, number: 1580 },
    ServiceStat { mean: 6.97, std: 0.62, number: 405 },
];

/// Generate a linear instance: `k` items, sizes uniform in [1, 70], demands
/// uniform in [50, 200], capacity 127.58. Deterministic per seed.
pub fn gen_linear(k: usize, seed: u64) -> Instance {
    assert!(k >= 1, "k must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items: Vec<(f64, u32)> = (0..k)
        .map(|_| {
            let size = rng.random_range(1..=70u32) as f64;
            let demand = rng.random_range(50..=200u32);
            (size, demand)
        })
        .collect();
    Instance::linear(&items, LINEAR_CAPACITY).expect("sizes in [1,70] always fit 127.58")
}

/// Generate a chance-constrained instance: `k` distinct services sampled
/// without replacement from the pool, demands taken from the pool's counts,
/// capacity 31.58, alpha 0.99.
pub fn gen_chance(k: usize, seed: u64) -> Result<Instance> {
    if k < 1 || k > SERVICE_POOL.len() {
        return Err(CspError::InvalidInput(format!(
            "chance instances need 1 <= k <= {}, got {k}",
            SERVICE_POOL.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, SERVICE_POOL.len(), k).into_vec();
    picked.sort_unstable();
    let items: Vec<(f64, f64, u32)> = picked
        .iter()
        .map(|&i| {
            let s = SERVICE_POOL[i];
            (s.mean, s.std, s.number)
        })
        .collect();
    Instance::chance(&items, CHANCE_CAPACITY, DEFAULT_ALPHA)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Chance,
}

impl Family {
    pub fn kind(self) -> InstanceKind {
        match self {
            Family::Linear => InstanceKind::Linear,
            Family::Chance => InstanceKind::Chance,
        }
    }
}

/// A named strategy: which ensemble dimensions are active and whether early
/// stopping is allowed. Parsed from names like `baseline`, `mc3`, `mp10`,
/// `mcmp`, `mcmp3x10`, with an optional `+es` suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySpec {
    pub name: String,
    pub kind: StrategyKind,
    pub early_stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Baseline,
    MultiColumn { n: Option<usize> },
    MultiPath { e: Option<usize> },
    Combined { n: Option<usize>, e: Option<usize> },
}

impl StrategySpec {
    pub fn parse(name: &str) -> Result<Self> {
        let full = name.trim().to_ascii_lowercase();
        let (body, early_stop) = match full.strip_suffix("+es") {
            Some(b) => (b.to_string(), true),
            None => (full.clone(), false),
        };
        let parse_num = |s: &str| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<usize>().map(Some).map_err(|_| {
                    CspError::InvalidInput(format!("unknown strategy name: {name}"))
                })
            }
        };
        let kind = if body == "baseline" {
            StrategyKind::Baseline
        } else if let Some(rest) = body.strip_prefix("mcmp") {
            match rest.split_once('x') {
                None => StrategyKind::Combined {
                    n: parse_num(rest)?,
                    e: None,
                },
                Some((n, e)) => StrategyKind::Combined {
                    n: parse_num(n)?,
                    e: parse_num(e)?,
                },
            }
        } else if let Some(rest) = body.strip_prefix("mcmt") {
            // accepted alias for the combined strategy
            match rest.split_once('x') {
                None => StrategyKind::Combined {
                    n: parse_num(rest)?,
                    e: None,
                },
                Some((n, e)) => StrategyKind::Combined {
                    n: parse_num(n)?,
                    e: parse_num(e)?,
                },
            }
        } else if let Some(rest) = body.strip_prefix("mc") {
            StrategyKind::MultiColumn { n: parse_num(rest)? }
        } else if let Some(rest) = body.strip_prefix("mp") {
            StrategyKind::MultiPath { e: parse_num(rest)? }
        } else {
            return Err(CspError::InvalidInput(format!(
                "unknown strategy name: {name}"
            )));
        };
        Ok(StrategySpec {
            name: full,
            kind,
            early_stop,
        })
    }

    /// Concrete configuration for this strategy on top of a base config.
    pub fn apply(&self, base: &CgConfig) -> CgConfig {
        let mut cfg = base.clone();
        match self.kind {
            StrategyKind::Baseline => {
                cfg.num_column = 1;
                cfg.num_path = 0;
            }
            StrategyKind::MultiColumn { n } => {
                cfg.num_column = n.unwrap_or(base.num_column).max(1);
                cfg.num_path = 0;
            }
            StrategyKind::MultiPath { e } => {
                cfg.num_column = 1;
                cfg.num_path = e.unwrap_or(base.num_path).max(1);
            }
            StrategyKind::Combined { n, e } => {
                cfg.num_column = n.unwrap_or(base.num_column).max(1);
                cfg.num_path = e.unwrap_or(base.num_path).max(1);
            }
        }
        if self.early_stop {
            cfg.convergence = false;
        }
        cfg
    }
}

/// Experiment description, also the schema of the bench config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub ks: Vec<usize>,
    pub cases_per_k: usize,
    /// Strategy names; see [`StrategySpec::parse`].
    pub strategies: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Base configuration strategies are applied on top of. Defaults to the
    /// family defaults when absent.
    #[serde(default)]
    pub config: Option<CgConfig>,
}

/// One (instance, strategy) result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub instance_id: String,
    pub k: usize,
    pub family: Family,
    pub strategy: String,
    pub seed: u64,
    pub report: CgReport,
    /// Optimality certified by a valid lower bound: the converged LP value,
    /// or Farley's bound when the run early-stopped.
    pub certified_optimal: bool,
}

/// Aggregate metrics for one (k, strategy) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySummary {
    pub k: usize,
    pub strategy: String,
    pub cases: usize,
    /// Win/tie/lose on `z_irmp` against the baseline strategy, when present.
    pub wins: usize,
    pub ties: usize,
    pub loses: usize,
    pub mean_abs_gap: f64,
    /// Mean gap restricted to cases where the baseline gap is >= 1.
    pub mean_abs_gap_baseline_ge1: Option<f64>,
    pub proven_optimal_ratio: f64,
    pub certified_optimal_ratio: f64,
    pub mean_iterations: f64,
    pub mean_pricing_calls: f64,
    pub mean_columns_generated: f64,
    pub mean_columns_selected: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub family: Family,
    pub seed: u64,
    /// Fraction of baseline runs with absolute gap >= 1, per k.
    pub baseline_gap_ge1_fraction: Vec<(usize, f64)>,
    pub strategies: Vec<StrategySummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub summary: ExperimentSummary,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed for case `case` at size `k` under a master seed.
pub fn case_seed(master: u64, k: usize, case: usize) -> u64 {
    splitmix64(master ^ splitmix64(k as u64) ^ splitmix64((case as u64) << 20))
}

pub fn generate_instance(family: Family, k: usize, seed: u64) -> Result<Instance> {
    match family {
        Family::Linear => Ok(gen_linear(k, seed)),
        Family::Chance => gen_chance(k, seed),
    }
}

/// Run the full experiment grid. Cells run in a worker pool; output ordering
/// is canonical (k, case, strategy order) regardless of completion order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    if spec.ks.is_empty() || spec.cases_per_k == 0 || spec.strategies.is_empty() {
        return Err(CspError::InvalidInput(
            "experiment needs at least one k, one case and one strategy".into(),
        ));
    }
    let strategies: Vec<StrategySpec> = spec
        .strategies
        .iter()
        .map(|s| StrategySpec::parse(s))
        .collect::<Result<_>>()?;
    let base = spec
        .config
        .clone()
        .unwrap_or_else(|| CgConfig::default_for(spec.family.kind()));
    base.validate()?;

    let mut cells = Vec::new();
    for &k in &spec.ks {
        for case in 0..spec.cases_per_k {
            for (si, strat) in strategies.iter().enumerate() {
                cells.push((k, case, si, strat.clone()));
            }
        }
    }
    let rows: Result<Vec<(usize, usize, usize, ExperimentRow)>> = cells
        .into_par_iter()
        .map(|(k, case, si, strat)| {
            let seed = case_seed(spec.seed, k, case);
            let instance = generate_instance(spec.family, k, seed)?;
            let mut cfg = strat.apply(&base);
            cfg.seed = seed;
            let outcome = engine::solve_pipeline(&instance, &cfg)?;
            let report = outcome.report;
            let valid_lb = if report.early_stopped {
                report.farley_lb
            } else {
                // converged: the final LP value is the master optimum
                Some(report.z_rmp.max(report.farley_lb.unwrap_or(f64::NEG_INFINITY)))
            };
            let certified_optimal =
                valid_lb.is_some_and(|lb| (report.z_irmp as f64 - lb) < OPTIMALITY_GAP);
            let row = ExperimentRow {
                instance_id: format!("{:?}-k{k}-c{case:03}", spec.family).to_lowercase(),
                k,
                family: spec.family,
                strategy: strat.name.clone(),
                seed,
                report,
                certified_optimal,
            };
            Ok((k, case, si, row))
        })
        .collect();
    let mut rows = rows?;
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let rows: Vec<ExperimentRow> = rows.into_iter().map(|(_, _, _, r)| r).collect();

    let summary = summarize(spec, &strategies, &rows);
    Ok(ExperimentOutput { rows, summary })
}

fn summarize(
    spec: &ExperimentSpec,
    strategies: &[StrategySpec],
    rows: &[ExperimentRow],
) -> ExperimentSummary {
    let baseline_name = strategies
        .iter()
        .find(|s| s.kind == StrategyKind::Baseline && !s.early_stop)
        .map(|s| s.name.clone());
    let find = |k: usize, strat: &str| -> Vec<&ExperimentRow> {
        rows.iter()
            .filter(|r| r.k == k && r.strategy == strat)
            .collect()
    };
    let mut baseline_fraction = Vec::new();
    let mut summaries = Vec::new();
    for &k in &spec.ks {
        let baseline_rows: Option<Vec<&ExperimentRow>> =
            baseline_name.as_ref().map(|n| find(k, n));
        if let Some(ref b) = baseline_rows {
            if !b.is_empty() {
                let frac = b
                    .iter()
                    .filter(|r| r.report.abs_gap >= OPTIMALITY_GAP)
                    .count() as f64
                    / b.len() as f64;
                baseline_fraction.push((k, frac));
            }
        }
        for strat in strategies {
            let cell = find(k, &strat.name);
            if cell.is_empty() {
                continue;
            }
            let n = cell.len();
            let (mut wins, mut ties, mut loses) = (0usize, 0usize, 0usize);
            let mut restricted = Vec::new();
            if let Some(ref b) = baseline_rows {
                for (row, base) in cell.iter().zip(b.iter()) {
                    debug_assert_eq!(row.instance_id, base.instance_id);
                    match row.report.z_irmp.cmp(&base.report.z_irmp) {
                        std::cmp::Ordering::Less => wins += 1,
                        std::cmp::Ordering::Equal => ties += 1,
                        std::cmp::Ordering::Greater => loses += 1,
                    }
                    if base.report.abs_gap >= OPTIMALITY_GAP {
                        restricted.push(row.report.abs_gap);
                    }
                }
            }
            let mean = |xs: &[f64]| -> f64 {
                if xs.is_empty() {
                    0.0
                } else {
                    xs.iter().sum::<f64>() / xs.len() as f64
                }
            };
            summaries.push(StrategySummary {
                k,
                strategy: strat.name.clone(),
                cases: n,
                wins,
                ties,
                loses,
                mean_abs_gap: mean(&cell.iter().map(|r| r.report.abs_gap).collect::<Vec<_>>()),
                mean_abs_gap_baseline_ge1: if restricted.is_empty() {
                    None
                } else {
                    Some(mean(&restricted))
                },
                proven_optimal_ratio: cell.iter().filter(|r| r.report.proven_optimal).count()
                    as f64
                    / n as f64,
                certified_optimal_ratio: cell.iter().filter(|r| r.certified_optimal).count()
                    as f64
                    / n as f64,
                mean_iterations: cell.iter().map(|r| r.report.iterations as f64).sum::<f64>()
                    / n as f64,
                mean_pricing_calls: cell
                    .iter()
                    .map(|r| r.report.pricing_calls as f64)
                    .sum::<f64>()
                    / n as f64,
                mean_columns_generated: cell
                    .iter()
                    .map(|r| r.report.columns_generated as f64)
                    .sum::<f64>()
                    / n as f64,
                mean_columns_selected: cell
                    .iter()
                    .map(|r| r.report.columns_selected as f64)
                    .sum::<f64>()
                    / n as f64,
            });
        }
    }
    ExperimentSummary {
        family: spec.family,
        seed: spec.seed,
        baseline_gap_ge1_fraction: baseline_fraction,
        strategies: summaries,
    }
}

/// Nine significant digits, locale-free.
fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub const CSV_HEADER: &str = "instance_id,k,family,strategy,seed,z_rmp,z_irmp,farley_lb,abs_gap,\
proven_optimal,certified_optimal,early_stopped,iterations,pricing_calls,columns_generated,\
columns_selected,exploration_s,convergence_s,selection_s,integer_s";

/// Columns whose values are wall-clock measurements and therefore not
/// reproducible across runs.
pub const CSV_TIMING_COLUMNS: [&str; 4] =
    ["exploration_s", "convergence_s", "selection_s", "integer_s"];

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let rep = &r.report;
        let family = match r.family {
            Family::Linear => "linear",
            Family::Chance => "chance",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.instance_id,
            r.k,
            family,
            r.strategy,
            r.seed,
            fmt_f64(rep.z_rmp),
            rep.z_irmp,
            rep.farley_lb.map_or("-inf".to_string(), fmt_f64),
            fmt_f64(rep.abs_gap),
            rep.proven_optimal,
            r.certified_optimal,
            rep.early_stopped,
            rep.iterations,
            rep.pricing_calls,
            rep.columns_generated,
            rep.columns_selected,
            fmt_f64(rep.timings.exploration_s),
            fmt_f64(rep.timings.convergence_s),
            fmt_f64(rep.timings.selection_s),
            fmt_f64(rep.timings.integer_s),
        );
    }
    out
}

pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), rows_to_csv(&output.rows))?;
    let json = serde_json::to_string_pretty(&output.summary)?;
    std::fs::write(dir.join("summary.json"), json)?;
    Ok(())
}

/// Plain-text summary table: win/tie/lose and optimal ratios per strategy.
pub fn render_summary_table(summary: &ExperimentSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:<12} {:>5} {:>5} {:>5} {:>5} {:>10} {:>10} {:>9} {:>9} {:>9}",
        "k",
        "strategy",
        "cases",
        "win",
        "tie",
        "lose",
        "mean_gap",
        "gap|bl>=1",
        "opt",
        "cert",
        "columns"
    );
    for s in &summary.strategies {
        let _ = writeln!(
            out,
            "{:>4} {:<12} {:>5} {:>5} {:>5} {:>5} {:>10.4} {:>10} {:>8.0}% {:>8.0}% {:>9.1}",
            s.k,
            s.strategy,
            s.cases,
            s.wins,
            s.ties,
            s.loses,
            s.mean_abs_gap,
            s.mean_abs_gap_baseline_ge1
                .map_or("-".to_string(), |g| format!("{g:.4}")),
            100.0 * s.proven_optimal_ratio,
            100.0 * s.certified_optimal_ratio,
            s.mean_columns_generated,
        );
    }
    for (k, frac) in &summary.baseline_gap_ge1_fraction {
        let _ = writeln!(
            out,
            "baseline abs_gap >= 1 at k={k}: {:.1}% of cases",
            100.0 * frac
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_generator_ranges() {
        for seed in 0..20u64 {
            let inst = gen_linear(50, seed);
            assert_eq!(inst.num_items(), 50);
            assert_eq!(inst.capacity(), LINEAR_CAPACITY);
            for item in inst.items() {
                match item.size {
                    crate::model::ItemSize::Deterministic(v) => {
                        assert!((1.0..=70.0).contains(&v));
                        assert_eq!(v, v.round());
                    }
                    _ => panic!("linear instance must have deterministic sizes"),
                }
                assert!((50..=200).contains(&item.demand));
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_linear(10, 7), gen_linear(10, 7));
        assert_eq!(gen_chance(10, 7).unwrap(), gen_chance(10, 7).unwrap());
    }

    #[test]
    fn chance_generator_contract() {
        let full = gen_chance(30, 123).unwrap();
        assert_eq!(full.num_items(), 30);
        // exhaustive sample is the whole pool, in pool order
        for (item, stat) in full.items().iter().zip(SERVICE_POOL.iter()) {
            match item.size {
                crate::model::ItemSize::Gaussian { mean, std } => {
                    assert_eq!(mean, stat.mean);
                    assert_eq!(std, stat.std);
                }
                _ => panic!("chance instance must have gaussian sizes"),
            }
            assert_eq!(item.demand, stat.number);
        }
        assert!(gen_chance(31, 0).is_err());
        assert!(gen_chance(0, 0).is_err());

        let sampled = gen_chance(20, 5).unwrap();
        assert_eq!(sampled.num_items(), 20);
        for item in sampled.items() {
            let found = SERVICE_POOL.iter().any(|s| match item.size {
                crate::model::ItemSize::Gaussian { mean, std } => {
                    s.mean == mean && s.std == std && s.number == item.demand
                }
                _ => false,
            });
            assert!(found, "sampled service not in the pool");
        }
    }

    #[test]
    fn pool_first_row() {
        assert_eq!(SERVICE_POOL[0].mean, 0.73);
        assert_eq!(SERVICE_POOL[0].std, 1.73);
        assert_eq!(SERVICE_POOL[0].number, 270);
    }

    #[test]
    fn strategy_parsing() {
        let s = StrategySpec::parse("baseline").unwrap();
        assert_eq!(s.kind, StrategyKind::Baseline);
        assert!(!s.early_stop);

        let s = StrategySpec::parse("mc3").unwrap();
        assert_eq!(s.kind, StrategyKind::MultiColumn { n: Some(3) });

        let s = StrategySpec::parse("mp10").unwrap();
        assert_eq!(s.kind, StrategyKind::MultiPath { e: Some(10) });

        let s = StrategySpec::parse("mcmp3x10").unwrap();
        assert_eq!(
            s.kind,
            StrategyKind::Combined {
                n: Some(3),
                e: Some(10)
            }
        );

        let s = StrategySpec::parse("mcmp+es").unwrap();
        assert_eq!(s.kind, StrategyKind::Combined { n: None, e: None });
        assert!(s.early_stop);

        assert!(StrategySpec::parse("nonsense").is_err());
    }

    #[test]
    fn strategy_apply_overrides() {
        let base = CgConfig::default();
        let b = StrategySpec::parse("baseline").unwrap().apply(&base);
        assert_eq!((b.num_column, b.num_path), (1, 0));
        let mc = StrategySpec::parse("mc5").unwrap().apply(&base);
        assert_eq!((mc.num_column, mc.num_path), (5, 0));
        let mp = StrategySpec::parse("mp4").unwrap().apply(&base);
        assert_eq!((mp.num_column, mp.num_path), (1, 4));
        let both = StrategySpec::parse("mcmp").unwrap().apply(&base);
        assert_eq!((both.num_column, both.num_path), (3, 10));
        let es = StrategySpec::parse("mcmp+es").unwrap().apply(&base);
        assert!(!es.convergence);
    }

    #[test]
    fn baseline_vs_baseline_all_ties() {
        let spec = ExperimentSpec {
            family: Family::Linear,
            ks: vec![3],
            cases_per_k: 4,
            strategies: vec!["baseline".into(), "baseline".into()],
            seed: 99,
            config: Some(CgConfig {
                num_path: 0,
                ..CgConfig::default()
            }),
        };
        let out = run_experiment(&spec).unwrap();
        for s in &out.summary.strategies {
            assert_eq!(s.ties, s.cases);
            assert_eq!(s.wins + s.ties + s.loses, s.cases);
        }
    }

    #[test]
    fn experiment_rows_canonical_and_reproducible() {
        let spec = ExperimentSpec {
            family: Family::Linear,
            ks: vec![3, 4],
            cases_per_k: 2,
            strategies: vec!["baseline".into(), "mc2".into()],
            seed: 7,
            config: None,
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        let strip = |csv: &str| -> String {
            // timing columns are the last four by schema
            csv.lines()
                .map(|l| {
                    let cells: Vec<&str> = l.split(',').collect();
                    cells[..cells.len() - CSV_TIMING_COLUMNS.len()].join(",")
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&rows_to_csv(&a.rows)), strip(&rows_to_csv(&b.rows)));
        // rows sorted by (k, case, strategy order)
        let ids: Vec<(usize, String, String)> = a
            .rows
            .iter()
            .map(|r| (r.k, r.instance_id.clone(), r.strategy.clone()))
            .collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        // prop-2 weak form on every row
        for r in &a.rows {
            assert!(r.report.z_rmp <= r.report.z_irmp as f64 + 1e-6);
        }
    }

    #[test]
    fn csv_has_nine_significant_digits() {
        assert_eq!(fmt_f64(127.58), "1.27580000e2");
        assert_eq!(fmt_f64(2.5), "2.50000000e0");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }
}
