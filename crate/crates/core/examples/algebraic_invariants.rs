//! Run the deterministic invariant checks that back `epr verify`.
//!
//! ```bash
//! cargo run -p epr-chain --example algebraic_invariants -- 4 2
//! ```

use epr_chain::invariants::algebraic_suite;

fn main() -> epr_chain::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("expected an integer"));
    let d = args.next().unwrap_or(3);
    let depth = args.next().unwrap_or(2);
    let checks = algebraic_suite(d, depth, 0)?;
    for c in &checks {
        println!("[{}] {:<28} {:.2e} (tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("{}/{} passed", checks.iter().filter(|c| c.passed).count(), checks.len());
    Ok(())
}
