use proptest::prelude::*;
use rug::Integer;
use subspace_sdp::coherent::build_config;
use subspace_sdp::irreps::compute_irreps;
use subspace_sdp::qcalc::{chi_count, gauss_binomial, QParams};
use subspace_sdp::real::Real;
use subspace_sdp::sdp_model::{build_sdp, is_zeroed, is_zeroed_min_form, lower, solve_bound, BoundMode, DimensionBoundTable};
use subspace_sdp::solver::{solve, BlockSpec, Entry, SdpData, SolveStatus, SolverSettings};

const PREC: u32 = 256;

fn tol() -> Real {
    Real::parse("1e-30", PREC).unwrap()
}

fn r(v: i64) -> Real {
    Real::from_i64(v, PREC)
}

/// max b.x subject to |x_i| <= 10 and I + Σ x_i G_i ⪰ 0.
fn random_sdp(b: &[i64], g: &[Vec<i64>], size: usize) -> SdpData {
    let m = b.len();
    let blocks = vec![BlockSpec { size: 2 * m, diagonal: true }, BlockSpec { size, diagonal: false }];
    let mut f0 = Vec::new();
    for k in 0..2 * m {
        f0.push(Entry { block: 0, row: k, col: k, value: r(-10) });
    }
    for k in 0..size {
        f0.push(Entry { block: 1, row: k, col: k, value: r(-1) });
    }
    let mut constraints = vec![f0];
    for (i, gi) in g.iter().enumerate() {
        let mut f = vec![
            Entry { block: 0, row: 2 * i, col: 2 * i, value: r(1) },
            Entry { block: 0, row: 2 * i + 1, col: 2 * i + 1, value: r(-1) },
        ];
        let mut it = gi.iter();
        for row in 0..size {
            for col in row..size {
                let v = *it.next().unwrap();
                if v != 0 {
                    f.push(Entry { block: 1, row, col, value: r(v) });
                }
            }
        }
        constraints.push(f);
    }
    SdpData { blocks, objective: b.iter().map(|&v| r(v)).collect(), constraints, var_scale: vec![r(1); m] }
}

fn instance() -> impl Strategy<Value = (Vec<i64>, Vec<Vec<i64>>, usize)> {
    (1usize..4, 2usize..4).prop_flat_map(|(m, size)| {
        let tri = size * (size + 1) / 2;
        (prop::collection::vec(-5i64..=5, m), prop::collection::vec(prop::collection::vec(-3i64..=3, tri), m), Just(size))
    })
}

fn fast() -> SolverSettings {
    SolverSettings { gap_tol: 1e-30, feas_tol: 1e-30, ..SolverSettings::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weak_duality((b, g, size) in instance()) {
        let data = random_sdp(&b, &g, size);
        let sol = solve(&data, &fast()).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        let bx = data.objective.iter().zip(&sol.x).fold(Real::zero(PREC), |acc, (c, x)| acc + c * x);
        for lam in data.slack_min_eigenvalues(&sol.x) {
            prop_assert!(lam > -tol());
        }
        prop_assert!(bx <= &sol.dual_objective + &tol());
        prop_assert!(sol.primal_objective <= &sol.dual_objective + &tol());
        let y = sol.y.as_ref().unwrap();
        for blk in y {
            prop_assert!(blk.min_eigenvalue() > -tol());
        }
        // an independent certificate: b.x <= -F_0•Y whenever F_i•Y = -b_i
        let cert = -data.dot(0, y);
        for i in 0..b.len() {
            let res = (data.dot(i + 1, y) + &data.objective[i]).abs();
            prop_assert!(res < Real::parse("1e-20", PREC).unwrap());
        }
        prop_assert!(bx <= &cert + &Real::parse("1e-20", PREC).unwrap());
    }

    #[test]
    fn optimum_is_scale_invariant((b, g, size) in instance(), k in 2i64..50) {
        let data = random_sdp(&b, &g, size);
        let base = solve(&data, &fast()).unwrap();
        let mut scaled = data.clone();
        scaled.scale_block(1, &r(k));
        let s1 = solve(&scaled, &fast()).unwrap();
        prop_assert!((&s1.dual_objective - &base.dual_objective).abs() < Real::parse("1e-20", PREC).unwrap());
        let mut obj = data.clone();
        for c in obj.objective.iter_mut() {
            *c = &*c * &r(k);
        }
        let s2 = solve(&obj, &fast()).unwrap();
        prop_assert!((&s2.dual_objective - &(&base.dual_objective * &r(k))).abs() < Real::parse("1e-18", PREC).unwrap());
    }

    #[test]
    fn gauss_binomial_duality(q in prop::sample::select(vec![2u32, 3, 4, 5, 7, 8, 9, 11, 13]), n in 0i64..24, k in 0i64..24) {
        let qp = QParams::new(q).unwrap();
        let k = k.min(n);
        prop_assert_eq!(gauss_binomial(n, k, qp), gauss_binomial(n, n - k, qp));
        if n >= 1 && k >= 1 {
            // Pascal: [n k] = [n-1 k-1] + q^k [n-1 k]
            let rhs = gauss_binomial(n - 1, k - 1, qp) + qp.pow(k as u32) * gauss_binomial(n - 1, k, qp);
            prop_assert_eq!(gauss_binomial(n, k, qp), rhs);
        }
    }

    #[test]
    fn chi_total_law(q in prop::sample::select(vec![2u32, 3, 4, 5]), n in 1i64..9, a in 0i64..9, b in 0i64..9, c in 0i64..9, d in 0i64..9) {
        let (a, b, d) = (a.min(n), b.min(n), d.min(n));
        let c = c.min(a).min(b);
        prop_assume!(a + b - c <= n);
        let qp = QParams::new(q).unwrap();
        let mut total = Integer::new();
        for al in 0..=a {
            for be in 0..=b {
                for ga in 0..=c {
                    total += chi_count(a, b, c, d, n, al, be, ga, qp);
                }
            }
        }
        prop_assert_eq!(total, gauss_binomial(n, d, qp));
    }
}

#[test]
fn zeroing_rule_forms_agree_for_n_up_to_16() {
    let mut checked = 0;
    for n in 1..=16usize {
        for d in 1..=n {
            for i in 0..=n {
                for j in 0..=n {
                    for l in 0..=i.min(j).min(n - i.max(j)) {
                        assert_eq!(is_zeroed(i, j, l, d), is_zeroed_min_form(i, j, l, d), "n={n} d={d} ({i},{j},{l})");
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 10_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_sdps_admit_the_zero_assignment(
        q in prop::sample::select(vec![2u32, 3]),
        n in 4usize..7,
        d in 2usize..7,
        mask in 1u32..128,
    ) {
        let d = d.min(n);
        let fibers: Vec<usize> = (0..=n).filter(|k| mask >> k & 1 == 1).collect();
        prop_assume!(!fibers.is_empty());
        let cfg = build_config(n, QParams::new(q).unwrap(), &fibers).unwrap();
        let tab = compute_irreps(&cfg, PREC).unwrap();
        let p = build_sdp(&cfg, &tab, d, &cfg.fibers, &DimensionBoundTable::literature()).unwrap();
        prop_assert!(p.zero_assignment_margin() > -tol());
    }

    #[test]
    fn more_fibers_never_lower_the_bound(mask in 1u32..32, extra in 1usize..6) {
        let settings = SolverSettings::default();
        let small: Vec<usize> = (1..6).filter(|k| mask >> (k - 1) & 1 == 1).collect();
        let mut big = small.clone();
        big.push(extra);
        let value = |k: &[usize]| {
            let cfg = build_config(6, QParams::new(2).unwrap(), k).unwrap();
            let tab = compute_irreps(&cfg, PREC).unwrap();
            let p = build_sdp(&cfg, &tab, 4, &cfg.fibers, &DimensionBoundTable::new()).unwrap();
            let (sol, res) = solve_bound(&p, &settings, BoundMode::Fast).unwrap();
            // weak duality on the model solutions as well
            assert!(sol.primal_objective <= &sol.dual_objective + &tol());
            res.bound_value.unwrap()
        };
        prop_assert!(value(&small) <= &value(&big) + &Real::parse("1e-20", PREC).unwrap());
    }
}

#[test]
fn lowered_model_has_consistent_shapes() {
    let cfg = build_config(6, QParams::new(3).unwrap(), &[1, 2, 3, 4, 5]).unwrap();
    let tab = compute_irreps(&cfg, PREC).unwrap();
    let p = build_sdp(&cfg, &tab, 3, &cfg.fibers, &DimensionBoundTable::literature()).unwrap();
    let data = lower(&p).data;
    assert!(data.validate().is_ok());
    assert_eq!(data.constraints.len(), data.num_vars() + 1);
}
