//! Seed-averaged final metrics for each algorithm on one environment.
//!
//!     cargo run --release -p qdlab --example compare -- hardmaze 20000 3

use std::collections::BTreeMap;

use qdlab::harness::run_algorithm;
use qdlab::{Algo, EnvSpec, SereneConfig};

fn main() -> qdlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let env = EnvSpec::resolve(args.first().map_or("hardmaze", String::as_str))?;
    let bud: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);

    for algo in Algo::ALL {
        let mut cov = 0.0;
        let mut max_r: BTreeMap<u32, f64> = BTreeMap::new();
        for seed in 0..seeds {
            let cfg = SereneConfig { bud, seed, ..Default::default() };
            let out = run_algorithm(algo, &cfg, &env, 1000, false);
            let row = out.final_row().expect("at least one snapshot");
            cov += row.coverage / seeds as f64;
            for (id, r) in &row.max_reward_per_area {
                *max_r.entry(*id).or_default() += r / seeds as f64;
            }
        }
        let areas: Vec<String> = max_r.iter().map(|(id, r)| format!("{id}:{r:.3}")).collect();
        println!("{:7} coverage {cov:.3}  max reward [{}]", algo.name(), areas.join(" "));
    }
    Ok(())
}
