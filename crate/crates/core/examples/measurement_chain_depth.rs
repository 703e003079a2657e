//! Longer chains of devices give the same reading statistics.
//!
//! ```bash
//! cargo run -p epr-chain --example measurement_chain_depth
//! ```

use epr_chain::analysis::{empirical_distribution, total_variation, two_sample_tv_bound};
use epr_chain::protocol::{run_chain, ChainConfig};
use epr_chain::C64;

fn main() -> epr_chain::Result<()> {
    let probs = [0.36, 0.64];
    let shots = 50_000;
    let mut first = None;
    for depth in 1..=5 {
        let config = ChainConfig::builder(2, vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)])
            .chain_depth(depth)
            .shots(shots)
            .seed(depth as u64)
            .build()?;
        let f = empirical_distribution(&run_chain(&config)?)?.frequencies();
        let base = first.get_or_insert_with(|| f.clone());
        println!(
            "depth {depth} ({} registers, dim {}): freq {:.4?}, TV vs depth 1 {:.2e}",
            depth + 1,
            config.layout().total_dim(),
            f,
            total_variation(base, &f)?
        );
    }
    println!("two-sample bound {:.2e}", two_sample_tv_bound(&probs, shots, shots, 4.0));
    Ok(())
}
