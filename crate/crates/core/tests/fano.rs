use std::sync::OnceLock;

use proptest::prelude::*;
use subspace_sdp::fano::{
    block_diagonalize, build_plane_configuration, classify, enumerate_planes, family_totals, table7, FamilyMode,
    FanoSdpSpec, Plane, PlaneRelation, PLANE_COUNT,
};
use subspace_sdp::solver::SolverSettings;

fn planes() -> &'static Vec<Plane> {
    static P: OnceLock<Vec<Plane>> = OnceLock::new();
    P.get_or_init(|| enumerate_planes().unwrap())
}

#[test]
fn binary_totals() {
    let t = family_totals(2);
    assert_eq!(t.size, 381);
    assert_eq!((t.fiber2.to_u32(), t.fiber3.to_u32()), (Some(140), Some(240)));
    let fam: Vec<u32> = [&t.t222, &t.t223, &t.t232, &t.t233, &t.t332, &t.t333].iter().map(|v| v.to_u32().unwrap()).collect();
    assert_eq!(fam, [7700, 11760, 11760, 21840, 21840, 35520]);
    assert!(FanoSdpSpec::binary(FamilyMode::Cap).caps_are_tight());
}

#[test]
fn totals_count_every_ordered_pair() {
    for q in [2u32, 3, 4, 5, 7] {
        let t = family_totals(q);
        let two = |v: &rug::Integer| rug::Integer::from(v * 2u32);
        let sum = rug::Integer::from(1u32)
            + two(&t.fiber2)
            + two(&t.fiber3)
            + &t.fiber2
            + &t.fiber3
            + &t.t222
            + &t.t223
            + two(&t.t232)
            + two(&t.t233)
            + &t.t332
            + &t.t333;
        assert_eq!(sum, t.size.clone().square(), "q={q}");
    }
}

#[test]
fn census_blocks_and_brackets() {
    let cfg = build_plane_configuration().unwrap();
    assert_eq!(cfg.planes.len(), PLANE_COUNT);
    assert_eq!(cfg.fiber_sizes, [1, 210, 3920, 7680]);
    assert_eq!(cfg.rank(), 56);
    let (missing, extra) = cfg.census_difference();
    assert_eq!(missing, vec![PlaneRelation::new(1, 2, 1, 2, 0)]);
    assert!(extra.is_empty());
    let blocks = block_diagonalize(&cfg, 256, 11).unwrap();
    assert_eq!(blocks.dimension_count(), 56);
    assert!(blocks.residual.to_f64() < 1e-60, "{}", blocks.residual.to_f64());

    let report = table7(FamilyMode::Exact, &SolverSettings::default()).unwrap();
    assert_eq!(report.rows.len(), 18);
    for row in &report.rows {
        assert_eq!(row.verdict, "equal", "{}", row.relation);
    }
    assert!(report.row("22222").unwrap().within_printed());
    assert!(report.row("33331").unwrap().within_printed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn classification_respects_transposition(a in 0..PLANE_COUNT, b in 0..PLANE_COUNT, c in 0..PLANE_COUNT) {
        let p = planes();
        let r = classify(&p[a], &p[b], &p[c]);
        prop_assert_eq!(r.transpose(), classify(&p[a], &p[c], &p[b]));
        prop_assert_eq!(classify(&p[a], &p[b], &p[b]).is_diagonal(), true);
        prop_assert_eq!(PlaneRelation::parse(&r.to_string()).unwrap(), r);
    }
}
