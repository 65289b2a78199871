//! Prints mean discovery per strategy for one simulation configuration.
//!
//! `cargo run --release --example sweep -- <n> <attrs> <m> [candidates] [runs] [seed] [family]`
//! where `attrs` is a spec such as `9int` or `5int,2qual,2ord`.

use std::time::Instant;

use critique_core::sim::{run_sweep, CatalogSource, SimConfig};
use critique_core::{CatalogSpec, Strategy};

fn main() -> critique_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.into());
    let n: usize = arg(0, "50").parse().expect("n");
    let spec = CatalogSpec::parse_attrs(n, &arg(1, "9int"))?;
    let m: usize = arg(2, "9").parse().expect("m");
    let mut config = SimConfig::new(
        CatalogSource::Generated(spec),
        m,
        arg(4, "100").parse().expect("runs"),
        arg(5, "1").parse().expect("seed"),
    );
    config.session.display_candidates = arg(3, "0").parse().expect("candidates");
    config.hidden_family = arg(6, "peaked").parse()?;
    let start = Instant::now();
    for result in run_sweep(&config, &Strategy::ALL)? {
        let cycles: f64 = result.runs.iter().map(|r| r.cycles as f64).sum::<f64>()
            / result.runs.len() as f64;
        println!(
            "{:<10} {:.3}  cycles {:.2}",
            result.strategy.name(),
            result.mean_fraction,
            cycles
        );
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
