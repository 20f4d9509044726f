//! Build the coherent configuration of F_q^7 on fibers 1..6, compute the
//! irreducible blocks, and compare them with the closed forms cell by cell.

use subspace_sdp::coherent::{build_config, VerifyMode};
use subspace_sdp::irreps::{compare_table1, compute_irreps};
use subspace_sdp::qcalc::QParams;
use subspace_sdp::real::Real;

fn main() -> subspace_sdp::Result<()> {
    let prec = 256;
    let tol = Real::pow2(-100, prec);
    for q in [2u32, 3, 5] {
        let cfg = build_config(7, QParams::new(q)?, &[1, 2, 3, 4, 5, 6])?;
        let axioms = cfg.verify_axioms(VerifyMode::FormulaIdentities)?;
        let tab = compute_irreps(&cfg, prec)?;
        let rep = compare_table1(&tab, &cfg, &tol)?;
        let ids = tab.verify_identities(&cfg, &tol);
        println!(
            "q={q}: {} relations, axioms {}/{} ok, {} irreps, table cells {} (max residual {}), identities {} (max residual {})",
            cfg.relations.len(),
            axioms.checks - axioms.failures.len(),
            axioms.checks,
            tab.s_count,
            rep.cells,
            rep.max_residual.to_decimal(3),
            ids.checks,
            ids.max_residual.to_decimal(3)
        );
    }
    Ok(())
}
