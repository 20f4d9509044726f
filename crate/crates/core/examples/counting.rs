//! Exact subspace counting: Gaussian binomials, and triple intersection
//! numbers checked against brute-force enumeration in a small space.

use subspace_sdp::oracle::{oracle_triple_count, standard_pair, AmbientSpace};
use subspace_sdp::qcalc::{gauss_binomial, triple_count, QParams};

fn main() -> subspace_sdp::Result<()> {
    let q = QParams::new(2)?;
    for n in 0..=7 {
        let row: Vec<String> = (0..=n).map(|k| gauss_binomial(n, k, q).to_string()).collect();
        println!("[{n} k]_2: {}", row.join(" "));
    }
    // planes A, B of F_2^4 meeting in a line; lines D with given intersections
    let space = AmbientSpace::new(4, 2)?;
    let (a, b) = standard_pair(space, 2, 2, 1)?;
    for i in 0..=2 {
        for j in 0..=2 {
            let formula = triple_count(2, 2, 1, 2, 4, i, j, q);
            let brute = oracle_triple_count(&a, &b, 2, i as usize, j as usize)?;
            println!("dim(D∩A) = {}, dim(D∩B) = {}: formula {formula}, enumeration {brute}", 2 - i, 2 - j);
        }
    }
    Ok(())
}
