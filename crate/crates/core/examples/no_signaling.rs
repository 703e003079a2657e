//! The far device's statistics do not depend on whether the particle is measured first.
//!
//! ```bash
//! cargo run -p epr-chain --example no_signaling
//! ```

use epr_chain::analysis::{no_signaling_algebraic, no_signaling_check};
use epr_chain::protocol::{ChainConfig, Coupling};
use epr_chain::state::random_unitary;
use epr_chain::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> epr_chain::Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ideal = ChainConfig::builder(2, vec![C64::new(h, 0.0), C64::new(0.0, h)]).build()?;
    let r = no_signaling_check(&ideal)?;
    println!("direct        {:?}", r.direct.frequencies());
    println!("through chain {:?}", r.through_chain.frequencies());
    println!("TV {:.2e}, bound {:.2e}, algebraic {:.1e}", r.tv, r.tv_bound, r.algebraic);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in 2..=4 {
        let config = ChainConfig::builder(d, vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d])
            .chain_depth(2)
            .coupling(Coupling::Explicit(random_unitary(d * d, &mut rng)))
            .build()?;
        println!("random coupling d={d}: algebraic deviation {:.1e}", no_signaling_algebraic(&config)?);
    }
    Ok(())
}
