//! SDP bounds for codes whose dimensions are confined to a set K of fibers
//! in F_q^7, distance 4. For K = {1,3,4}, {3,4} and {2,3} the optimum is
//! the line-counting value (q^2-q+1)[7]; K = {2,4} goes above it.

use subspace_sdp::analytic::cdc_bound;
use subspace_sdp::coherent::build_config;
use subspace_sdp::irreps::compute_irreps;
use subspace_sdp::qcalc::QParams;
use subspace_sdp::sdp_model::{build_sdp, solve_bound, BoundMode, DimensionBoundTable};
use subspace_sdp::solver::SolverSettings;

fn main() -> subspace_sdp::Result<()> {
    let settings = SolverSettings::default();
    for q in [2u32, 3, 4] {
        println!("q = {q}, (q^2-q+1)[7] = {}", cdc_bound(q));
        for k in [vec![1usize, 3, 4], vec![3, 4], vec![2, 3], vec![2, 4]] {
            let cfg = build_config(7, QParams::new(q)?, &k)?;
            let tab = compute_irreps(&cfg, settings.precision)?;
            let p = build_sdp(&cfg, &tab, 4, &cfg.fibers, &DimensionBoundTable::new())?;
            let (_, r) = solve_bound(&p, &settings, BoundMode::Certified)?;
            let v = r.bound_value.map(|v| v.to_decimal(12)).unwrap_or_else(|| "-".into());
            println!("  K = {k:?}: {v} -> {}", r.bound.map(|b| b.to_string()).unwrap_or_default());
        }
    }
    Ok(())
}
