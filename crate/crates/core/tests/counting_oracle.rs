use std::time::Instant;

use subspace_sdp::coherent::{build_full, VerifyMode};
use subspace_sdp::oracle::{dim_intersection, enumerate_subspaces, oracle_triple_count, standard_pair, AmbientSpace, SubspaceRep};
use subspace_sdp::qcalc::{chi_count, psi_count, triple_count, varphi_count, QParams};

fn first_vectors(space: AmbientSpace, t: usize) -> SubspaceRep {
    let vs = (0..t)
        .map(|i| {
            let mut v = vec![0u8; space.n];
            v[i] = 1;
            v
        })
        .collect();
    SubspaceRep::from_vectors(space, vs).unwrap()
}

#[test]
fn triple_count_matches_enumeration_for_small_spaces() {
    let start = Instant::now();
    let mut compared = 0;
    for q in [2u8, 3] {
        let qp = QParams::new(q as u32).unwrap();
        for n in 0..=4usize {
            let space = AmbientSpace::new(n, q).unwrap();
            for a in 0..=n {
                for b in 0..=n {
                    let kmax = a.min(b).min(n - a.max(b));
                    for k in 0..=kmax {
                        let (sa, sb) = standard_pair(space, a, b, a.min(b) - k).unwrap();
                        for d in 0..=n {
                            for i in 0..=a.min(d) {
                                for j in 0..=b.min(d) {
                                    let want = oracle_triple_count(&sa, &sb, d, i, j).unwrap();
                                    let got = triple_count(a as i64, b as i64, k as i64, d as i64, n as i64, i as i64, j as i64, qp);
                                    assert_eq!(got, want, "q={q} n={n} (a,b,k)=({a},{b},{k}) d={d} i={i} j={j}");
                                    compared += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(compared > 1000);
    assert!(start.elapsed().as_secs() < 120);
}

#[test]
fn chi_matches_enumeration() {
    for q in [2u8, 3] {
        let qp = QParams::new(q as u32).unwrap();
        let n = 4;
        let space = AmbientSpace::new(n, q).unwrap();
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=a.min(b) {
                    if a + b - c > n {
                        continue;
                    }
                    let (sa, sb) = standard_pair(space, a, b, c).unwrap();
                    let sab = first_vectors(space, c);
                    for d in 0..=n {
                        let mut tally = std::collections::HashMap::new();
                        for dsp in enumerate_subspaces(space, d).unwrap() {
                            let key = (
                                dim_intersection(&dsp, &sa).unwrap(),
                                dim_intersection(&dsp, &sb).unwrap(),
                                dim_intersection(&dsp, &sab).unwrap(),
                            );
                            *tally.entry(key).or_insert(0u64) += 1;
                        }
                        for al in 0..=d {
                            for be in 0..=d {
                                for ga in 0..=d {
                                    let want = tally.get(&(al, be, ga)).copied().unwrap_or(0);
                                    let got = chi_count(a as i64, b as i64, c as i64, d as i64, n as i64, al as i64, be as i64, ga as i64, qp);
                                    assert_eq!(got, want, "q={q} a={a} b={b} c={c} d={d} ({al},{be},{ga})");
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn psi_and_varphi_match_enumeration_inside_the_span() {
    for q in [2u8, 3] {
        let qp = QParams::new(q as u32).unwrap();
        for a in 0..=3usize {
            for b in 0..=3usize {
                for c in 0..=a.min(b) {
                    let n = a + b - c;
                    if n > 4 {
                        continue;
                    }
                    let space = AmbientSpace::new(n, q).unwrap();
                    let (sa, sb) = standard_pair(space, a, b, c).unwrap();
                    let sab = first_vectors(space, c);
                    for d in 0..=n {
                        let all = enumerate_subspaces(space, d).unwrap();
                        let trivial = all
                            .iter()
                            .filter(|x| dim_intersection(x, &sa).unwrap() == 0 && dim_intersection(x, &sb).unwrap() == 0)
                            .count() as u64;
                        assert_eq!(psi_count(a as i64, b as i64, c as i64, d as i64, qp).unwrap(), trivial, "psi q={q} {a} {b} {c} {d}");
                        for al in 0..=d {
                            for be in 0..=d {
                                for ga in 0..=al.min(be) {
                                    let want = all
                                        .iter()
                                        .filter(|x| {
                                            dim_intersection(x, &sa).unwrap() == al
                                                && dim_intersection(x, &sb).unwrap() == be
                                                && dim_intersection(x, &sab).unwrap() == ga
                                        })
                                        .count() as u64;
                                    let got = varphi_count(a as i64, b as i64, c as i64, d as i64, al as i64, be as i64, ga as i64, qp);
                                    assert_eq!(got, want, "varphi q={q} {a} {b} {c} {d} ({al},{be},{ga})");
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn axioms_hold_against_the_oracle_in_dimension_four() {
    let cfg = build_full(4, QParams::new(2).unwrap()).unwrap();
    let rep = cfg.verify_axioms(VerifyMode::Oracle).unwrap();
    assert!(rep.passed(), "{:?}", rep.failures);
}

#[test]
fn axioms_hold_by_identities_in_dimension_seven() {
    let cfg = build_full(7, QParams::new(2).unwrap()).unwrap();
    let rep = cfg.verify_axioms(VerifyMode::FormulaIdentities).unwrap();
    assert!(rep.passed(), "{:?}", &rep.failures[..rep.failures.len().min(5)]);
    assert!(rep.checks > 1000);
}

#[test]
fn plane_triple_count_in_dimension_seven() {
    let space = AmbientSpace::new(7, 2).unwrap();
    let (a, b) = standard_pair(space, 3, 3, 1).unwrap();
    let want = oracle_triple_count(&a, &b, 3, 0, 2).unwrap();
    let got = triple_count(3, 3, 2, 3, 7, 0, 2, QParams::new(2).unwrap());
    assert_eq!(got, want);
}
