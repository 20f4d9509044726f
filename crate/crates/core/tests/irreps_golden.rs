use std::time::Instant;

use subspace_sdp::coherent::{build_config, build_full};
use subspace_sdp::irreps::{compare_table1, compute_irreps};
use subspace_sdp::qcalc::QParams;
use subspace_sdp::real::Real;

#[test]
fn printed_table_matches_for_q_2_3_5() {
    let start = Instant::now();
    let tol = Real::parse("1e-30", 256).unwrap();
    for q in [2, 3, 5] {
        let cfg = build_config(7, QParams::new(q).unwrap(), &[1, 2, 3, 4, 5, 6]).unwrap();
        let tab = compute_irreps(&cfg, 256).unwrap();
        let rep = compare_table1(&tab, &cfg, &tol).unwrap();
        assert!(rep.passed(), "q={q}: {:?}", rep.failures);
        assert!(rep.max_residual < tol);
        assert!(rep.cells > 150);
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn algebra_identities_hold() {
    let tol = Real::parse("1e-30", 256).unwrap();
    for (n, q) in [(7, 2), (7, 3), (8, 2), (9, 2)] {
        let cfg = build_full(n, QParams::new(q).unwrap()).unwrap();
        let tab = compute_irreps(&cfg, 256).unwrap();
        let rep = tab.verify_identities(&cfg, &tol);
        assert!(rep.passed(), "(n,q)=({n},{q}): {:?}", &rep.failures[..rep.failures.len().min(5)]);
        assert!(rep.max_residual < tol);
    }
}

#[test]
fn q3_row_value() {
    let cfg = build_config(7, QParams::new(3).unwrap(), &[1, 2, 3, 4, 5, 6]).unwrap();
    let tab = compute_irreps(&cfg, 256).unwrap();
    let v = tab.get(2, subspace_sdp::coherent::RelationId::new(2, 2, 2));
    assert!((v.to_f64() - 3.0).abs() < 1e-30);
    assert_eq!(cfg.valency(subspace_sdp::coherent::RelationId::new(2, 4, 2)), 793881);
}
