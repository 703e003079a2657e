//! The two-stage measurement chain: a particle is coupled to device A, the
//! pair is left alone while the particle travels away, and then device A
//! is read out through further devices (B, ...) whose last pointer is what
//! the observer sees.
//!
//! Register layout is `[particle, device_1, ..., device_m]`, every register of
//! dimension `d`, all devices starting in the ready state |0⟩.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    ideal_coupling_unitary, measure_and_collapse, pointer_map, MeasurementOutcome, Observable, RngStream,
};
use crate::state::{
    apply_unitary, tensor_product, DensityMatrix, Layout, StateVector, UnitaryMatrix, C64, INPUT_NORM_TOL,
};

pub const PARTICLE: &str = "particle";

/// Label of the `j`-th device (1-based).
pub fn device_label(j: usize) -> String {
    format!("device_{j}")
}

/// Interaction used in step 1.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// Generalized controlled shift, see [`ideal_coupling_unitary`].
    Ideal,
    /// Arbitrary unitary on (particle, device_1).
    Explicit(UnitaryMatrix),
}

/// Statistical acceptance knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Width of per-outcome frequency bands in standard deviations.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Upper bound on the Born total variation distance. When absent it is
    /// derived from `sigma` and the shot count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_max: Option<f64>,
}

fn default_sigma() -> f64 {
    4.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sigma: default_sigma(),
            tv_max: None,
        }
    }
}

pub const DEFAULT_SHOTS: u64 = 100_000;

/// Validated experiment configuration. Build with [`ChainConfig::builder`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    dimension: usize,
    amplitudes: Vec<C64>,
    chain_depth: usize,
    coupling: Coupling,
    shots: u64,
    seed: u64,
    measure_particle_after: bool,
    thresholds: Thresholds,
    pointers: Option<Vec<usize>>,
    layout: Layout,
}

#[derive(Debug, Clone)]
pub struct ChainConfigBuilder {
    dimension: usize,
    amplitudes: Vec<C64>,
    chain_depth: usize,
    coupling: Coupling,
    shots: u64,
    seed: u64,
    measure_particle_after: bool,
    thresholds: Thresholds,
}

impl ChainConfigBuilder {
    pub fn chain_depth(mut self, depth: usize) -> Self {
        self.chain_depth = depth;
        self
    }

    pub fn coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn measure_particle_after(mut self, yes: bool) -> Self {
        self.measure_particle_after = yes;
        self
    }

    pub fn thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn build(self) -> Result<ChainConfig> {
        let d = self.dimension;
        if d < 2 {
            return Err(Error::Argument(format!("dimension must be at least 2, got {d}")));
        }
        if self.amplitudes.len() != d {
            return Err(Error::Shape(format!(
                "{} amplitudes for dimension {d}",
                self.amplitudes.len()
            )));
        }
        if self.amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("amplitudes"));
        }
        let norm = self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::NotNormalized {
                norm,
                tolerance: INPUT_NORM_TOL,
            });
        }
        if self.chain_depth < 1 {
            return Err(Error::Argument("chain_depth must be at least 1".into()));
        }
        if self.shots < 1 {
            return Err(Error::Argument("shots must be at least 1".into()));
        }
        let t = self.thresholds;
        if !t.sigma.is_finite() || t.sigma < 0.0 {
            return Err(Error::Argument(format!("thresholds.sigma must be >= 0, got {}", t.sigma)));
        }
        if let Some(tv) = t.tv_max {
            if !tv.is_finite() || tv < 0.0 {
                return Err(Error::Argument(format!("thresholds.tv_max must be >= 0, got {tv}")));
            }
        }
        let labels: Vec<String> = std::iter::once(PARTICLE.to_string())
            .chain((1..=self.chain_depth).map(device_label))
            .collect();
        let layout = Layout::new(vec![d; self.chain_depth + 1], labels)?;
        let pointers = match &self.coupling {
            Coupling::Ideal => Some((0..d).collect()),
            Coupling::Explicit(u) => pointer_map(u, d)?,
        };
        // skip rescaling at rounding level so rebuilding a built config is a no-op
        let amplitudes = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            self.amplitudes
        } else {
            self.amplitudes.iter().map(|a| a / norm).collect()
        };
        Ok(ChainConfig {
            dimension: d,
            amplitudes,
            chain_depth: self.chain_depth,
            coupling: self.coupling,
            shots: self.shots,
            seed: self.seed,
            measure_particle_after: self.measure_particle_after,
            thresholds: self.thresholds,
            pointers,
            layout,
        })
    }
}

impl ChainConfig {
    /// Starts a config with defaults: depth 1, ideal coupling, 100000 shots,
    /// seed 0, no post-collapse particle measurement.
    pub fn builder(dimension: usize, amplitudes: Vec<C64>) -> ChainConfigBuilder {
        ChainConfigBuilder {
            dimension,
            amplitudes,
            chain_depth: 1,
            coupling: Coupling::Ideal,
            shots: DEFAULT_SHOTS,
            seed: 0,
            measure_particle_after: false,
            thresholds: Thresholds::default(),
        }
    }

    /// Re-opens the config for modification.
    pub fn to_builder(&self) -> ChainConfigBuilder {
        ChainConfigBuilder {
            dimension: self.dimension,
            amplitudes: self.amplitudes.clone(),
            chain_depth: self.chain_depth,
            coupling: self.coupling.clone(),
            shots: self.shots,
            seed: self.seed,
            measure_particle_after: self.measure_particle_after,
            thresholds: self.thresholds,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn chain_depth(&self) -> usize {
        self.chain_depth
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn measure_particle_after(&self) -> bool {
        self.measure_particle_after
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    /// Layout `[particle, device_1, ..., device_m]`.
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// |aᵢ|²
    pub fn amplitude_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Pointer index σ(i) recorded by device 1 for particle eigenstate i, when
    /// the step-1 coupling is a genuine one-to-one measurement.
    pub fn pointer_map(&self) -> Option<&[usize]> {
        self.pointers.as_deref()
    }

    pub fn is_one_to_one(&self) -> bool {
        self.pointers.is_some()
    }

    /// Step-1 coupling as a unitary on (particle, device_1).
    pub fn coupling_unitary(&self) -> Result<UnitaryMatrix> {
        match &self.coupling {
            Coupling::Ideal => ideal_coupling_unitary(self.dimension),
            Coupling::Explicit(u) => Ok(u.clone()),
        }
    }

    /// Particle observable F: computational basis, F_i = i.
    pub fn particle_observable(&self) -> Observable {
        Observable::computational(self.dimension).expect("dimension >= 2")
    }

    /// Pointer-basis observable of a device register.
    pub fn pointer_observable(&self) -> Observable {
        Observable::computational(self.dimension).expect("dimension >= 2")
    }

    /// Particle eigenstate index implied by a reading `k` of the last device.
    pub fn infer_particle_index(&self, k: usize) -> usize {
        self.pointers
            .as_ref()
            .and_then(|s| s.iter().position(|&x| x == k))
            .unwrap_or(k)
    }
}

/// Narrative stage of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Prepared,
    Entangled,
    Separated,
    Collapsed,
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub stage: Stage,
    pub joint_state_norm: f64,
    pub particle_reduced: Arc<DensityMatrix>,
    /// Present exactly on the collapsed record.
    pub outcome: Option<MeasurementOutcome>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub shot_index: u64,
    pub records: Vec<StepRecord>,
    pub final_particle_state: StateVector,
    /// Particle eigenstate index implied by the device reading.
    pub inferred_particle_index: usize,
    pub final_particle_measurement: Option<MeasurementOutcome>,
}

impl Trajectory {
    /// Reading of the last device.
    pub fn outcome(&self) -> &MeasurementOutcome {
        self.records
            .iter()
            .find_map(|r| r.outcome.as_ref())
            .expect("trajectory has a collapsed record")
    }

    pub fn record(&self, stage: Stage) -> Option<&StepRecord> {
        self.records.iter().find(|r| r.stage == stage)
    }
}

fn check_layout(state: &StateVector, config: &ChainConfig) -> Result<()> {
    if state.layout() != config.layout() {
        return Err(Error::Shape(format!(
            "state layout {:?} does not match the chain layout {:?}",
            state.layout().labels(),
            config.layout().labels()
        )));
    }
    Ok(())
}

/// Ψₚ⁰ ⊗ |0⟩^⊗m
pub fn prepare_initial(config: &ChainConfig) -> Result<StateVector> {
    let d = config.dimension();
    let mut state = StateVector::new(Layout::single(PARTICLE, d)?, config.amplitudes().to_vec())?;
    for j in 1..=config.chain_depth() {
        let ready = StateVector::basis(Layout::single(&device_label(j), d)?, 0)?;
        state = tensor_product(&state, &ready)?;
    }
    Ok(state)
}

/// Step 1: device 1 measures F on the particle.
pub fn run_step1(state: &StateVector, config: &ChainConfig) -> Result<StateVector> {
    check_layout(state, config)?;
    apply_unitary(state, &config.coupling_unitary()?, &[0, 1])
}

/// The wait while the particle moves away. No dynamics.
pub fn mark_separation(state: StateVector) -> StateVector {
    state
}

/// Deterministic part of step 2: each device j is measured by device j + 1
/// through the ideal coupling.
pub fn propagate_chain(state: &StateVector, config: &ChainConfig) -> Result<StateVector> {
    check_layout(state, config)?;
    let copy = ideal_coupling_unitary(config.dimension())?;
    let mut state = state.clone();
    for j in 1..config.chain_depth() {
        state = apply_unitary(&state, &copy, &[j, j + 1])?;
    }
    Ok(state)
}

/// Step 2: propagate the reading down the chain and let the observer read
/// the last device in its pointer basis.
pub fn run_step2(
    state: &StateVector,
    config: &ChainConfig,
    rng: &mut RngStream,
) -> Result<(MeasurementOutcome, StateVector)> {
    let propagated = propagate_chain(state, config)?;
    measure_and_collapse(&propagated, &config.pointer_observable(), config.chain_depth(), rng)
}

/// Particle density operator: trace over every device register.
pub fn reduced_particle_state(state: &StateVector) -> Result<DensityMatrix> {
    let p = state
        .layout()
        .index_of(PARTICLE)
        .ok_or_else(|| Error::Argument(format!("layout has no `{PARTICLE}` register")))?;
    state.reduced_density(&[p])
}

/// Particle state of a joint state in which the particle is unentangled
/// with the devices, read off the largest-weight slice of the device
/// registers.
pub fn particle_state(state: &StateVector) -> Result<StateVector> {
    let layout = state.layout();
    let p = layout
        .index_of(PARTICLE)
        .ok_or_else(|| Error::Argument(format!("layout has no `{PARTICLE}` register")))?;
    let poff = layout.offsets(&[p]);
    let roff = layout.offsets(&layout.complement(&[p]));
    let amps = state.amps();
    let weight = |base: usize| poff.iter().map(|&o| amps[base + o].norm_sqr()).sum::<f64>();
    let best = roff
        .iter()
        .copied()
        .max_by(|&a, &b| weight(a).total_cmp(&weight(b)))
        .expect("non-empty layout");
    let w = weight(best).sqrt();
    let slice = poff.iter().map(|&o| amps[best + o] / w).collect();
    StateVector::new(layout.select(&[p]), slice)
}

/// Runs `shots` independent trajectories, shot `s` drawing from stream `s`.
///
/// The deterministic prefix (prepare, step 1, separation) is computed once
/// and shared by all trajectories.
pub fn run_chain(config: &ChainConfig) -> Result<Vec<Trajectory>> {
    let prepared = prepare_initial(config)?;
    let prepared_rec = record(Stage::Prepared, &prepared, None)?;
    let entangled = run_step1(&prepared, config)?;
    let entangled_rec = record(Stage::Entangled, &entangled, None)?;
    let separated = mark_separation(entangled);
    let separated_rec = record(Stage::Separated, &separated, None)?;

    (0..config.shots())
        .into_par_iter()
        .map(|shot| {
            let mut rng = RngStream::new(config.seed(), shot);
            let (outcome, post) = run_step2(&separated, config, &mut rng)?;
            let collapsed = record(Stage::Collapsed, &post, Some(outcome))?;
            let final_particle_measurement = if config.measure_particle_after() {
                let (m, _) = measure_and_collapse(&post, &config.particle_observable(), 0, &mut rng)?;
                Some(m)
            } else {
                None
            };
            Ok(Trajectory {
                shot_index: shot,
                records: vec![
                    prepared_rec.clone(),
                    entangled_rec.clone(),
                    separated_rec.clone(),
                    collapsed,
                ],
                final_particle_state: particle_state(&post)?,
                inferred_particle_index: config.infer_particle_index(outcome.outcome_index),
                final_particle_measurement,
            })
        })
        .collect()
}

fn record(stage: Stage, state: &StateVector, outcome: Option<MeasurementOutcome>) -> Result<StepRecord> {
    Ok(StepRecord {
        stage,
        joint_state_norm: state.norm(),
        particle_reduced: Arc::new(reduced_particle_state(state)?),
        outcome,
    })
}
