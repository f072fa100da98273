//! Estimates the transfer entropy matrix of the five-process benchmark network.
//!
//! Usage: `cargo run --release --example benchmark_matrix -- [length] [seed] [max_lag]`

use std::time::Instant;

use redundancy_core::{simulate_benchmark, te_matrix, EmbeddingSpec, LinSysParams, ProcessId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let length = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5000);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let max_lag = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);

    let panel = simulate_benchmark(&LinSysParams::example_one(length, seed))?;
    let ids: Vec<ProcessId> = (0..panel.channel_count()).map(ProcessId).collect();
    let started = Instant::now();
    let m = te_matrix(
        &panel,
        &ids,
        &ids,
        &EmbeddingSpec {
            max_lag,
            ..EmbeddingSpec::default()
        },
    )?;
    let elapsed = started.elapsed();

    print!("{:>6}", "from/to");
    for id in &ids {
        print!("{:>9}", panel.label(*id));
    }
    println!();
    for r in &ids {
        print!("{:>7}", panel.label(*r));
        for c in &ids {
            match m.get_raw(*r, *c) {
                Some(v) => print!("{v:>9.4}"),
                None => print!("{:>9}", "-"),
            }
        }
        println!();
    }
    eprintln!("elapsed: {elapsed:.2?}");
    Ok(())
}
