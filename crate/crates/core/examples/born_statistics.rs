//! Sample the chain many times and compare the reading histogram with |a_i|².
//!
//! ```bash
//! cargo run -p epr-chain --example born_statistics
//! ```

use epr_chain::analysis::{chi_square_gof, empirical_distribution, frequency_band, one_sample_tv_bound, total_variation};
use epr_chain::protocol::{run_chain, ChainConfig};
use epr_chain::C64;

fn main() -> epr_chain::Result<()> {
    let config = ChainConfig::builder(3, vec![C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)])
        .shots(100_000)
        .seed(11)
        .build()?;
    let probs = config.amplitude_probabilities();
    let hist = empirical_distribution(&run_chain(&config)?)?;
    let freqs = hist.frequencies();

    println!("outcome  expected  observed  4-sigma band");
    for (k, (p, f)) in probs.iter().zip(&freqs).enumerate() {
        println!("{k:>7}  {p:>8.4}  {f:>8.4}  ±{:.4}", frequency_band(*p, hist.shots, 4.0));
    }
    let chi = chi_square_gof(&hist, &probs)?;
    println!("chi-square {:.3} on {} dof, p = {:.4}", chi.statistic, chi.dof, chi.pvalue);
    println!(
        "TV distance {:.2e} (4-sigma bound {:.2e})",
        total_variation(&freqs, &probs)?,
        one_sample_tv_bound(&probs, hist.shots, 4.0)
    );
    Ok(())
}
