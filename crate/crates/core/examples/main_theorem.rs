//! Certified SDP bound for binary subspace codes of length 7, distance 4.

use std::time::Instant;

use subspace_sdp::coherent::build_config;
use subspace_sdp::irreps::compute_irreps;
use subspace_sdp::qcalc::QParams;
use subspace_sdp::sdp_model::{build_sdp, solve_bound, BoundMode, DimensionBoundTable};
use subspace_sdp::solver::SolverSettings;

fn main() -> subspace_sdp::Result<()> {
    let q: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let t = Instant::now();
    let settings = SolverSettings::default();
    let cfg = build_config(7, QParams::new(q)?, &[1, 2, 3, 4, 5, 6])?;
    let tab = compute_irreps(&cfg, settings.precision)?;
    let p = build_sdp(&cfg, &tab, 4, &cfg.fibers, &DimensionBoundTable::new())?;
    println!("{}", p.summary());
    let (sol, res) = solve_bound(&p, &settings, BoundMode::Certified)?;
    println!("status {} after {} iterations", sol.status, sol.iterations);
    println!("{}", serde_json::to_string_pretty(&res.to_json()).unwrap());
    println!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
