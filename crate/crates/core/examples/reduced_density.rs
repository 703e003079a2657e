//! Entangle the particle with one device and look at what is left of the particle.
//!
//! ```bash
//! cargo run -p epr-chain --example reduced_density
//! ```

use epr_chain::protocol::{prepare_initial, reduced_particle_state, run_step1, ChainConfig};
use epr_chain::state::{partial_trace, purity, to_density};
use epr_chain::C64;

fn main() -> epr_chain::Result<()> {
    let config = ChainConfig::builder(2, vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).build()?;
    let prepared = prepare_initial(&config)?;
    let entangled = run_step1(&prepared, &config)?;

    println!("joint amplitudes after the coupling:");
    for (i, a) in entangled.amps().iter().enumerate() {
        println!("  |{}{}>  {a:.4}", i / 2, i % 2);
    }

    let rho = reduced_particle_state(&entangled)?;
    println!("particle state:");
    for row in rho.to_rows() {
        println!("  {}", row.iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im + 0.0)).collect::<Vec<_>>().join("  "));
    }
    println!("purity {:.6} (before the coupling {:.6})", purity(&rho), purity(&reduced_particle_state(&prepared)?));

    // same thing the long way round
    let full = partial_trace(&to_density(&entangled), &[0])?;
    println!("max difference from full partial trace {:.1e}", rho.max_abs_diff(&full)?);
    println!("device state purity {:.6}", purity(&entangled.reduced_density(&[1])?));
    Ok(())
}
