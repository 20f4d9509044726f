//! Pin the dimension distribution of a putative 388-word code in F_2^7 and
//! enumerate the integer (b2,4,1, b4,4,2) cells that survive.

use std::collections::BTreeMap;
use std::time::Instant;

use rug::Integer;
use subspace_sdp::coherent::build_config;
use subspace_sdp::irreps::compute_irreps;
use subspace_sdp::qcalc::QParams;
use subspace_sdp::sdp_model::{
    build_sdp, feasible_cells, fix_distribution, fix_distribution_exact, pinned_feasibility, DimensionBoundTable,
    PairVariable,
};
use subspace_sdp::solver::SolverSettings;

fn main() -> subspace_sdp::Result<()> {
    let t = Instant::now();
    let settings = SolverSettings::default();
    let cfg = build_config(7, QParams::new(2)?, &[1, 2, 3, 4, 5, 6])?;
    let tab = compute_irreps(&cfg, settings.precision)?;
    let p = build_sdp(&cfg, &tab, 4, &cfg.fibers, &DimensionBoundTable::new())?;
    let a = PairVariable::new(2, 4, 1);
    let b = PairVariable::new(4, 4, 2);
    for (x2, x4) in [(41, 347), (40, 348), (39, 349)] {
        let counts = BTreeMap::from([(2, Integer::from(x2)), (4, Integer::from(x4))]);
        let relaxed = pinned_feasibility(&fix_distribution(&p, &counts)?, &settings)?;
        let exact = pinned_feasibility(&fix_distribution_exact(&p, &counts)?, &settings)?;
        println!("x2={x2} x4={x4}: pinned counts {relaxed:?}");
        println!("  with pair totals {exact:?}");
        let cells = feasible_cells(&fix_distribution(&p, &counts)?, a, b, &settings)?;
        let mut rows: BTreeMap<Integer, Vec<Integer>> = BTreeMap::new();
        for (x, y, _) in cells {
            rows.entry(x).or_default().push(y);
        }
        println!("  {} rows of integer cells", rows.len());
        for (x, ys) in rows {
            println!("  ({x}, {}..={})  [{} cells]", ys[0], ys[ys.len() - 1], ys.len());
        }
    }
    println!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
