//! Sampling-free invariant suite behind `epr verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{diagonality_check, no_signaling_algebraic, DIAGONAL_TOL, FIDELITY_TOL};
use crate::error::Result;
use crate::measurement::{born_probabilities, collapse_onto, ideal_coupling_unitary, verify_one_to_one};
use crate::protocol::{
    mark_separation, prepare_initial, propagate_chain, reduced_particle_state, run_step1, ChainConfig, Coupling,
};
use crate::state::{
    fidelity_pure, partial_trace, purity, random_unitary, to_density, unitarity_error, StateVector, ALGEBRA_TOL,
    C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Amplitude families exercised by the suite: a basis state, the uniform
/// superposition and a few seeded random vectors.
pub fn amplitude_families(d: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut basis = vec![C64::new(0.0, 0.0); d];
    basis[d - 1] = C64::new(1.0, 0.0);
    out.push(basis);
    let u = 1.0 / (d as f64).sqrt();
    out.push(vec![C64::new(u, 0.0); d]);
    for _ in 0..3 {
        let raw: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        out.push(raw.into_iter().map(|a| a / n).collect());
    }
    out
}

/// Checks every algebraic claim of the chain at dimension `d` and depth
/// `depth` without drawing samples.
pub fn algebraic_suite(d: usize, depth: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut checks = Vec::new();
    let u = ideal_coupling_unitary(d)?;
    checks.push(CheckResult::at_most("coupling_unitarity", unitarity_error(u.matrix()), 1e-12));
    checks.push(CheckResult {
        name: "coupling_one_to_one".into(),
        value: if verify_one_to_one(&u, d)? { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: verify_one_to_one(&u, d)?,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut norm_err = 0.0f64;
    let mut diag_err = 0.0f64;
    let mut purity_err = 0.0f64;
    let mut completeness_err = 0.0f64;
    let mut collapse_err = 0.0f64;
    let mut collapse_purity_err = 0.0f64;
    let mut ns_ideal = 0.0f64;
    let mut ns_explicit = 0.0f64;
    let mut trace_routes = 0.0f64;

    for amps in amplitude_families(d, seed) {
        let cfg = ChainConfig::builder(d, amps).chain_depth(depth).build()?;
        let prepared = prepare_initial(&cfg)?;
        let entangled = mark_separation(run_step1(&prepared, &cfg)?);
        let propagated = propagate_chain(&entangled, &cfg)?;
        for s in [&prepared, &entangled, &propagated] {
            norm_err = norm_err.max((s.norm() - 1.0).abs());
        }

        let rho = reduced_particle_state(&entangled)?;
        diag_err = diag_err.max(diagonality_check(&rho, cfg.particle_observable().eigenbasis())?);
        let expected: f64 = cfg.amplitude_probabilities().iter().map(|p| p * p).sum();
        purity_err = purity_err.max((purity(&rho) - expected).abs());
        let via_full = partial_trace(&to_density(&entangled), &[0])?;
        trace_routes = trace_routes.max(rho.max_abs_diff(&via_full)?);

        let obs = cfg.pointer_observable();
        let probs = born_probabilities(&propagated, &obs, depth)?;
        completeness_err = completeness_err.max((probs.iter().sum::<f64>() - 1.0).abs());
        for (k, &p) in probs.iter().enumerate() {
            if p <= 1e-14 {
                continue;
            }
            let (_, post) = collapse_onto(&propagated, &obs, depth, k)?;
            let target = StateVector::product_basis(cfg.layout().clone(), &vec![k; depth + 1])?;
            collapse_err = collapse_err.max((fidelity_pure(&post, &target)? - 1.0).abs());
            collapse_purity_err =
                collapse_purity_err.max((purity(&reduced_particle_state(&post)?) - 1.0).abs());
        }
        ns_ideal = ns_ideal.max(no_signaling_algebraic(&cfg)?);

        let explicit = cfg
            .to_builder()
            .coupling(Coupling::Explicit(random_unitary(d * d, &mut rng)))
            .build()?;
        ns_explicit = ns_explicit.max(no_signaling_algebraic(&explicit)?);
    }

    checks.push(CheckResult::at_most("normalization", norm_err, ALGEBRA_TOL));
    checks.push(CheckResult::at_most("reduced_state_diagonal", diag_err, DIAGONAL_TOL));
    checks.push(CheckResult::at_most("reduced_state_purity", purity_err, ALGEBRA_TOL));
    checks.push(CheckResult::at_most("partial_trace_routes_agree", trace_routes, ALGEBRA_TOL));
    checks.push(CheckResult::at_most("born_completeness", completeness_err, ALGEBRA_TOL));
    checks.push(CheckResult::at_most("collapse_fidelity", collapse_err, FIDELITY_TOL));
    checks.push(CheckResult::at_most("collapse_purity", collapse_purity_err, ALGEBRA_TOL));
    checks.push(CheckResult::at_most("no_signaling_ideal", ns_ideal, ALGEBRA_TOL));
    checks.push(CheckResult::at_most("no_signaling_explicit", ns_explicit, ALGEBRA_TOL));
    Ok(checks)
}
