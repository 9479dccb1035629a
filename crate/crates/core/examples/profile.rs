//! Scratch profiling harness for desk-scale runs.

use std::time::{Duration, Instant};

use cutstock::bench::gen_linear;
use cutstock::engine;
use cutstock::integer;
use cutstock::model::CgConfig;

fn main() {
    let inst = gen_linear(50, 1);
    let cfg = CgConfig {
        num_column: 1,
        num_path: 0,
        seed: 5,
        ..CgConfig::default()
    };
    let t0 = Instant::now();
    let state = engine::run_baseline(&inst, &cfg).unwrap();
    println!(
        "CG: {:?}, iters {}, pool {}, z_rmp {:.4}",
        t0.elapsed(),
        state.iterations,
        state.pool.len(),
        state.last_lp.objective
    );
    let t = Instant::now();
    let ip = integer::solve_irmp(&state.pool, &inst.demands(), Duration::from_secs(20)).unwrap();
    println!(
        "IP: {:?}, nodes {}, obj {}, proven {}, lb {:.4}",
        t.elapsed(),
        ip.nodes,
        ip.objective,
        ip.proven,
        ip.lower_bound
    );
}
