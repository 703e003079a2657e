//! Walk through one shot stage by stage: prepare, couple, separate, read the device.
//!
//! ```bash
//! cargo run -p epr-chain --example two_stage_collapse
//! ```

use epr_chain::measurement::RngStream;
use epr_chain::protocol::{
    mark_separation, particle_state, prepare_initial, reduced_particle_state, run_step1, run_step2, ChainConfig,
};
use epr_chain::state::{fidelity_pure, purity, StateVector};
use epr_chain::C64;

fn main() -> epr_chain::Result<()> {
    let config = ChainConfig::builder(3, vec![C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)])
        .chain_depth(2)
        .build()?;
    let prepared = prepare_initial(&config)?;
    println!("prepared   purity {:.4}", purity(&reduced_particle_state(&prepared)?));
    let entangled = run_step1(&prepared, &config)?;
    println!("entangled  purity {:.4}", purity(&reduced_particle_state(&entangled)?));
    let separated = mark_separation(entangled);
    println!("separated  purity {:.4}", purity(&reduced_particle_state(&separated)?));

    for shot in 0..5 {
        let (outcome, post) = run_step2(&separated, &config, &mut RngStream::new(config.seed(), shot))?;
        let k = outcome.outcome_index;
        let target = StateVector::product_basis(config.layout().clone(), &[k; 3])?;
        let particle = particle_state(&post)?;
        println!(
            "shot {shot}: device reads {k} (p = {:.4}), particle inferred {}, fidelity {:.12}, particle amps {:?}",
            outcome.probability,
            config.infer_particle_index(k),
            fidelity_pure(&post, &target)?,
            particle.amps().iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
