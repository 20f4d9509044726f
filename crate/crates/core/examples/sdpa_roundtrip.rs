//! Export the main SDP in SDPA sparse format, solve it, write the result in
//! an SDPA-style log, read the log back as an external solution, and
//! extract the certified bound from it.

use subspace_sdp::coherent::build_config;
use subspace_sdp::irreps::compute_irreps;
use subspace_sdp::qcalc::QParams;
use subspace_sdp::sdp_model::{build_sdp, export_sdpa, extract_bound, lower, solve_via_export, BoundMode, DimensionBoundTable};
use subspace_sdp::sdpa::{format_log, read_sdpa};
use subspace_sdp::solver::{solve, SolverSettings};

fn main() -> subspace_sdp::Result<()> {
    let settings = SolverSettings::default();
    let cfg = build_config(7, QParams::new(2)?, &[1, 2, 3, 4, 5, 6])?;
    let tab = compute_irreps(&cfg, settings.precision)?;
    let p = build_sdp(&cfg, &tab, 4, &cfg.fibers, &DimensionBoundTable::new())?;
    let dir = std::env::temp_dir();
    let dat = dir.join("a2_7_4.dat-s");
    let log = dir.join("a2_7_4.out");
    export_sdpa(&p, &dat)?;
    let data = read_sdpa(&dat, settings.precision)?;
    println!("{}: {} variables, {} blocks", dat.display(), data.num_vars(), data.blocks.len());
    let sol = solve(&data, &settings)?;
    std::fs::write(&log, format_log(&sol, 60)).map_err(|e| subspace_sdp::Error::Config(e.to_string()))?;
    let back = solve_via_export(&p, &log, true)?;
    let res = extract_bound(&back, &p, BoundMode::Certified)?;
    println!("from the log: bound {:?}, value {}", res.bound, res.bound_value.map(|v| v.to_decimal(30)).unwrap_or_default());
    let direct = extract_bound(&solve(&lower(&p).data, &settings)?, &p, BoundMode::Certified)?;
    println!("direct:       bound {:?}", direct.bound);
    Ok(())
}
