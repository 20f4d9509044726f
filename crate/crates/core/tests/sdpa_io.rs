use subspace_sdp::coherent::build_config;
use subspace_sdp::irreps::compute_irreps;
use subspace_sdp::qcalc::QParams;
use subspace_sdp::real::Real;
use subspace_sdp::sdp_model::{build_sdp, extract_bound, lower, solve_via_export, BoundMode, DimensionBoundTable};
use subspace_sdp::sdpa::{format_log, format_sdpa, parse_log, parse_sdpa, read_log, significant_digits};
use subspace_sdp::solver::{solve, BlockMat, SolveStatus, SolverSettings};
use subspace_sdp::Error;

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn pdinf_log_is_infeasible() {
    let sol = read_log(fixture("pdinf.out"), 256, true).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert_eq!(sol.iterations, 41);
}

#[test]
fn truncated_log_is_a_parse_error() {
    let err = read_log(fixture("truncated.out"), 256, false).unwrap_err();
    assert!(matches!(err, Error::Parse(_)), "{err}");
}

#[test]
fn forty_digit_log_is_accepted_in_certified_mode() {
    let sol = read_log(fixture("digits40.out"), 256, true).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.x.len(), 2);
    let y = sol.y.unwrap();
    assert!(matches!(&y[0], BlockMat::Diag(d) if d.len() == 2));
    assert!(matches!(&y[1], BlockMat::Dense(m) if m.rows() == 2));
    // objectives are stored in the maximisation sense
    assert!(sol.dual_objective > Real::from_i64(388, 256));
}

#[test]
fn short_log_is_refused_in_certified_mode_only() {
    let text = std::fs::read_to_string(fixture("short.out")).unwrap();
    assert!(matches!(parse_log(&text, 256, true), Err(Error::Numerical(_))));
    assert!(parse_log(&text, 256, false).is_ok());
    assert_eq!(significant_digits("-3.8822589e+02"), 8);
}

#[test]
fn export_solve_log_roundtrip_keeps_the_bound() {
    let settings = SolverSettings::default();
    let cfg = build_config(7, QParams::new(2).unwrap(), &[1, 2, 3, 4, 5, 6]).unwrap();
    let tab = compute_irreps(&cfg, settings.precision).unwrap();
    let p = build_sdp(&cfg, &tab, 4, &cfg.fibers, &DimensionBoundTable::new()).unwrap();
    let data = lower(&p).data;

    let text = format_sdpa(&data);
    let back = parse_sdpa(&text, settings.precision).unwrap();
    assert_eq!(back.num_vars(), data.num_vars());
    assert_eq!(back.blocks, data.blocks);
    assert_eq!(format_sdpa(&back), text);

    let sol = solve(&data, &settings).unwrap();
    let direct = extract_bound(&sol, &p, BoundMode::Certified).unwrap();
    let dir = std::env::temp_dir().join(format!("sdpa_io_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let log = dir.join("run.out");
    std::fs::write(&log, format_log(&sol, 60)).unwrap();
    let ext = solve_via_export(&p, &log, true).unwrap();
    let via_log = extract_bound(&ext, &p, BoundMode::Certified).unwrap();
    assert_eq!(direct.bound.as_ref().map(|b| b.to_string()).as_deref(), Some("388"));
    assert_eq!(via_log.bound, direct.bound);
    std::fs::remove_dir_all(&dir).ok();
}
