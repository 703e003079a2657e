//! Supply your own coupling unitary. A permutation with phases still measures;
//! a scrambling unitary does not.
//!
//! ```bash
//! cargo run -p epr-chain --example explicit_coupling
//! ```

use epr_chain::analysis::{correlation_rate, run_and_verify};
use epr_chain::measurement::{pointer_map, verify_one_to_one};
use epr_chain::protocol::{ChainConfig, Coupling};
use epr_chain::state::{random_unitary, unitarity_error, UnitaryMatrix};
use epr_chain::C64;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> epr_chain::Result<()> {
    let d = 3;
    // |i>|j> -> i^i |i>|j + sigma(i)>, sigma = (2, 0, 1)
    let sigma = [2, 0, 1];
    let mut m = DMatrix::zeros(d * d, d * d);
    for (i, s) in sigma.iter().enumerate() {
        for j in 0..d {
            m[(i * d + (j + s) % d, i * d + j)] = C64::new(0.0, 1.0).powi(i as i32);
        }
    }
    let permuted = UnitaryMatrix::new(m)?;
    println!("unitarity error {:.1e}", unitarity_error(permuted.matrix()));
    println!("pointer map {:?}, one-to-one {}", pointer_map(&permuted, d)?, verify_one_to_one(&permuted, d)?);

    let amps = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)];
    let config = ChainConfig::builder(d, amps.clone())
        .coupling(Coupling::Explicit(permuted))
        .shots(20_000)
        .measure_particle_after(true)
        .build()?;
    let (trajectories, report) = run_and_verify(&config)?;
    println!("permuted coupling: correlation {:.4}, all checks {}", correlation_rate(&trajectories)?, report.all_passed());

    let scrambler = random_unitary(d * d, &mut ChaCha8Rng::seed_from_u64(5));
    let config = config.to_builder().coupling(Coupling::Explicit(scrambler)).build()?;
    let (trajectories, report) = run_and_verify(&config)?;
    println!(
        "random coupling: one-to-one {}, correlation {:.4}, flags {:?}",
        config.is_one_to_one(),
        correlation_rate(&trajectories)?,
        report.pass_flags
    );
    Ok(())
}
