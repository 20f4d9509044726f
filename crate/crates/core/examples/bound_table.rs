//! A small grid of bounds A_q(n, d) next to the printed values, through the
//! same pipeline the `table` command uses.
//!
//! cargo run --release --example bound_table [q] [n_max]

use subspace_sdp::cli::{compute_cell, RunConfig};

fn main() -> subspace_sdp::Result<()> {
    let mut args = std::env::args().skip(1);
    let q: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let n_max: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let cfg = RunConfig::fast();
    let table = cfg.bound_table()?;
    for n in 6..=n_max {
        for d in 3..=n - 2 {
            let c = compute_cell(&cfg, &table, q, n, d)?;
            let printed = c.printed.map(|p| format!("printed {p}")).unwrap_or_else(|| "not printed".into());
            println!("A_{q}({n}, {d}) <= {:>10}   {printed}", c.bound.unwrap_or_default());
        }
    }
    Ok(())
}
