//! Closed-form checks: the x_2 + x_4 scan against F(q), coefficient
//! positivity, and the binary f'/g'/h' maximization.
//!
//!     cargo run --release --example analytic_suite -- [q_max] [t_max]

use std::time::Instant;

use subspace_sdp::analytic::analytic_suite;

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u32>().expect("integer argument"));
    let q_max = args.next().unwrap_or(13);
    let t_max = args.next().unwrap_or(101);
    let t = Instant::now();
    let report = analytic_suite(q_max, t_max);
    print!("{}", report.to_markdown());
    println!("\nall passed: {}  ({:.1?})", report.passed(), t.elapsed());
}
