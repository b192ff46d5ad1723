//! Two functions within ε of each other everywhere that still order almost
//! every pair of points in opposite directions.

use multirank::synthgen::counterexample_pair;

fn main() {
    for eps in [0.5, 0.1, 0.01] {
        let c = counterexample_pair(eps);
        println!(
            "eps={eps}: sup|f-g| = {:.4}, agreement over 1e5 pairs = {:.5}",
            c.sup_gap(100_001),
            c.agreement_rate(100_000, 1)
        );
    }
}
