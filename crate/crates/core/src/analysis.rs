//! Statistical and algebraic checks over trajectory sets.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{born_probabilities, collapse_onto, measure_and_collapse, RngStream};
use crate::protocol::{
    mark_separation, prepare_initial, propagate_chain, reduced_particle_state, run_chain, run_step1,
    ChainConfig, Trajectory,
};
use crate::state::{fidelity_pure, purity, DensityMatrix, StateVector, UnitaryMatrix, ALGEBRA_TOL, C64};
use crate::special::chi_square_sf;

/// Bins with expected count below this are pooled.
pub const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;
/// Goodness-of-fit passes when the p-value exceeds this.
pub const CHI_SQUARE_MIN_PVALUE: f64 = 1e-4;
/// Off-diagonal magnitude allowed in the post-step-1 particle state.
pub const DIAGONAL_TOL: f64 = 1e-12;
/// Fidelity slack for collapse checks.
pub const FIDELITY_TOL: f64 = 1e-12;

/// Stream indices of the no-signaling arms, kept disjoint from each other
/// and from the main run's `0..shots`.
const ARM_DIRECT: u64 = 1 << 63;
const ARM_THROUGH_CHAIN: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeHistogram {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl OutcomeHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let shots = counts.iter().sum();
        Self { counts, shots }
    }

    pub fn from_outcomes(bins: usize, outcomes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts = vec![0u64; bins];
        for k in outcomes {
            *counts
                .get_mut(k)
                .ok_or_else(|| Error::Argument(format!("outcome {k} outside {bins} bins")))? += 1;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect()
    }
}

/// Histogram of last-device readings.
pub fn empirical_distribution(trajectories: &[Trajectory]) -> Result<OutcomeHistogram> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Argument("empirical distribution of zero trajectories".into()))?;
    let bins = first.final_particle_state.dim();
    OutcomeHistogram::from_outcomes(bins, trajectories.iter().map(|t| t.outcome().outcome_index))
}

/// Histogram of post-collapse particle F readings.
pub fn particle_distribution(trajectories: &[Trajectory]) -> Result<OutcomeHistogram> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Argument("particle distribution of zero trajectories".into()))?;
    let bins = first.final_particle_state.dim();
    let outcomes = trajectories
        .iter()
        .map(|t| {
            t.final_particle_measurement
                .map(|m| m.outcome_index)
                .ok_or_else(|| Error::Argument(format!("shot {} has no particle measurement", t.shot_index)))
        })
        .collect::<Result<Vec<_>>>()?;
    OutcomeHistogram::from_outcomes(bins, outcomes)
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-8 || p.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::Argument(format!("{name} is not a probability vector (sum {sum})")));
    }
    Ok(())
}

/// ½ Σ |pᵢ − qᵢ|
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub pvalue: f64,
    pub dof: usize,
}

/// Pearson goodness of fit. Bins whose expected count is below
/// [`CHI_SQUARE_MIN_EXPECTED`] are pooled into one bin; if that pool is
/// itself too small it is merged into the smallest retained bin. Any count
/// in a bin of probability zero makes the statistic infinite.
pub fn chi_square_gof(hist: &OutcomeHistogram, probs: &[f64]) -> Result<ChiSquare> {
    if hist.counts.len() != probs.len() {
        return Err(Error::Shape(format!(
            "{} bins against {} probabilities",
            hist.counts.len(),
            probs.len()
        )));
    }
    check_distribution(probs, "expected distribution")?;
    let n = hist.shots as f64;
    if probs
        .iter()
        .zip(&hist.counts)
        .any(|(&p, &c)| p <= 0.0 && c > 0)
    {
        return Ok(ChiSquare {
            statistic: f64::INFINITY,
            pvalue: 0.0,
            dof: probs.len().saturating_sub(1),
        });
    }

    // (observed, expected) per retained bin
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&p, &c) in probs.iter().zip(&hist.counts) {
        let e = n * p;
        if e >= CHI_SQUARE_MIN_EXPECTED {
            bins.push((c as f64, e));
        } else {
            pooled.0 += c as f64;
            pooled.1 += e;
        }
    }
    if pooled.1 >= CHI_SQUARE_MIN_EXPECTED {
        bins.push(pooled);
    } else if pooled.1 > 0.0 || pooled.0 > 0.0 {
        let smallest = bins
            .iter_mut()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::DegenerateInput("every bin has expected count below 5".into()))?;
        smallest.0 += pooled.0;
        smallest.1 += pooled.1;
    }
    if bins.is_empty() {
        return Err(Error::DegenerateInput("every bin has expected count below 5".into()));
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    Ok(ChiSquare {
        statistic,
        pvalue: chi_square_sf(statistic, dof),
        dof,
    })
}

/// Fraction of shots whose particle F reading matches the particle
/// eigenstate implied by the device reading.
pub fn correlation_rate(trajectories: &[Trajectory]) -> Result<f64> {
    if trajectories.is_empty() {
        return Err(Error::Argument("correlation rate of zero trajectories".into()));
    }
    let mut agree = 0u64;
    for t in trajectories {
        let m = t
            .final_particle_measurement
            .ok_or_else(|| Error::Argument(format!("shot {} has no particle measurement", t.shot_index)))?;
        if m.outcome_index == t.inferred_particle_index {
            agree += 1;
        }
    }
    Ok(agree as f64 / trajectories.len() as f64)
}

/// max |(V†ρV)ᵢⱼ| over i ≠ j.
pub fn diagonality_check(rho: &DensityMatrix, basis: &UnitaryMatrix) -> Result<f64> {
    if rho.dim() != basis.dim() {
        return Err(Error::Shape(format!(
            "{}-dim density matrix in a {}-dim basis",
            rho.dim(),
            basis.dim()
        )));
    }
    let v = basis.matrix();
    let rotated: DMatrix<C64> = v.adjoint() * rho.matrix() * v;
    let n = rho.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(rotated[(i, j)].norm());
            }
        }
    }
    Ok(worst)
}

/// Allowed |f − p| for one outcome of probability `p` over `n` shots.
pub fn frequency_band(p: f64, n: u64, sigma: f64) -> f64 {
    sigma * (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Bound on the total variation between an empirical distribution over `n`
/// shots and the true `probs`.
pub fn one_sample_tv_bound(probs: &[f64], n: u64, sigma: f64) -> f64 {
    0.5 * probs.iter().map(|&p| frequency_band(p, n, sigma)).sum::<f64>()
}

/// Bound on the total variation between two independent empirical
/// distributions of sizes `n1`, `n2` drawn from the same `probs`.
pub fn two_sample_tv_bound(probs: &[f64], n1: u64, n2: u64, sigma: f64) -> f64 {
    let scale = 1.0 / n1 as f64 + 1.0 / n2 as f64;
    0.5 * sigma
        * probs
            .iter()
            .map(|&p| (p * (1.0 - p) * scale).max(0.0).sqrt())
            .sum::<f64>()
}

/// Both sides of the no-signaling comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignaling {
    /// Particle F histogram without step 2.
    pub direct: OutcomeHistogram,
    /// Particle F histogram after step 2, device reading discarded.
    pub through_chain: OutcomeHistogram,
    pub tv: f64,
    pub tv_bound: f64,
    /// ‖ρ − Σₖ pₖ ρ|ₖ‖_max
    pub algebraic: f64,
}

impl NoSignaling {
    pub fn statistical_pass(&self) -> bool {
        self.tv <= self.tv_bound
    }

    pub fn algebraic_pass(&self) -> bool {
        self.algebraic <= ALGEBRA_TOL
    }
}

/// Exact part: the particle's reduced state before step 2 against the
/// probability-weighted mixture of its post-readout states.
pub fn no_signaling_algebraic(config: &ChainConfig) -> Result<f64> {
    let separated = mark_separation(run_step1(&prepare_initial(config)?, config)?);
    let before = reduced_particle_state(&separated)?;
    let propagated = propagate_chain(&separated, config)?;
    let last = config.chain_depth();
    let obs = config.pointer_observable();
    let probs = born_probabilities(&propagated, &obs, last)?;
    let d = before.dim();
    let mut mixture = DMatrix::<C64>::zeros(d, d);
    for (k, &p) in probs.iter().enumerate() {
        if p <= 1e-14 {
            continue;
        }
        let (pk, branch) = collapse_onto(&propagated, &obs, last, k)?;
        mixture += reduced_particle_state(&branch)?.matrix() * C64::new(pk, 0.0);
    }
    Ok(before
        .matrix()
        .iter()
        .zip(mixture.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Runs the two arms (particle measured directly after the separation, or
/// after the device chain has been read out) with `shots` each and compares
/// their particle F distributions, alongside the exact check.
pub fn no_signaling_check(config: &ChainConfig) -> Result<NoSignaling> {
    let d = config.dimension();
    let shots = config.shots();
    let separated = mark_separation(run_step1(&prepare_initial(config)?, config)?);
    let propagated = propagate_chain(&separated, config)?;
    let particle_obs = config.particle_observable();
    let pointer_obs = config.pointer_observable();
    let last = config.chain_depth();

    let direct: Vec<usize> = (0..shots)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(config.seed(), ARM_DIRECT | s);
            measure_and_collapse(&separated, &particle_obs, 0, &mut rng).map(|(m, _)| m.outcome_index)
        })
        .collect::<Result<_>>()?;
    let through: Vec<usize> = (0..shots)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(config.seed(), ARM_THROUGH_CHAIN | s);
            let (_, post) = measure_and_collapse(&propagated, &pointer_obs, last, &mut rng)?;
            measure_and_collapse(&post, &particle_obs, 0, &mut rng).map(|(m, _)| m.outcome_index)
        })
        .collect::<Result<_>>()?;

    let direct = OutcomeHistogram::from_outcomes(d, direct)?;
    let through_chain = OutcomeHistogram::from_outcomes(d, through)?;
    let exact = born_probabilities(&separated, &particle_obs, 0)?;
    let tv = total_variation(&direct.frequencies(), &through_chain.frequencies())?;
    Ok(NoSignaling {
        tv,
        tv_bound: two_sample_tv_bound(&exact, shots, shots, config.thresholds().sigma),
        algebraic: no_signaling_algebraic(config)?,
        direct,
        through_chain,
    })
}

/// Everything a run is judged on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Exact distribution of the last device reading.
    pub born_probabilities: Vec<f64>,
    pub born_tv_distance: f64,
    pub born_tv_max: f64,
    pub chi_square_stat: f64,
    pub chi_square_pvalue: f64,
    pub chi_square_dof: usize,
    /// Present when the particle was measured after collapse.
    pub correlation_rate: Option<f64>,
    pub reduced_offdiag_max: f64,
    pub no_signaling_tv: f64,
    pub no_signaling_tv_bound: f64,
    pub no_signaling_algebraic: f64,
    pub purity_before: f64,
    /// Smallest post-collapse particle purity over all shots.
    pub purity_after: f64,
    pub pass_flags: BTreeMap<String, bool>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.pass_flags.values().all(|&ok| ok)
    }
}

/// Analyses a finished run against the exact predictions for `config`.
///
/// Claims that only hold for a genuine measuring device (diagonal reduced
/// state, collapse onto an F eigenstate, perfect correlation) are only
/// flagged when the step-1 coupling is one-to-one.
pub fn verify_run(config: &ChainConfig, trajectories: &[Trajectory]) -> Result<VerificationReport> {
    let thresholds = config.thresholds();
    let sigma = thresholds.sigma;
    let hist = empirical_distribution(trajectories)?;
    let n = hist.shots;

    let separated = mark_separation(run_step1(&prepare_initial(config)?, config)?);
    let propagated = propagate_chain(&separated, config)?;
    let born = born_probabilities(&propagated, &config.pointer_observable(), config.chain_depth())?;

    let freqs = hist.frequencies();
    let born_tv_distance = total_variation(&freqs, &born)?;
    let born_tv_max = thresholds
        .tv_max
        .unwrap_or_else(|| one_sample_tv_bound(&born, n, sigma));
    let chi = chi_square_gof(&hist, &born)?;

    let correlation_rate = if config.measure_particle_after() {
        Some(correlation_rate(trajectories)?)
    } else {
        None
    };

    let before = reduced_particle_state(&separated)?;
    let purity_before = purity(&before);
    let reduced_offdiag_max =
        diagonality_check(&before, config.particle_observable().eigenbasis())?;
    let purity_after = trajectories
        .iter()
        .map(|t| purity(&t.records.last().expect("collapsed record").particle_reduced))
        .fold(f64::INFINITY, f64::min);

    let ns = no_signaling_check(config)?;

    let mut flags = BTreeMap::new();
    flags.insert(
        "born_frequencies".to_string(),
        freqs
            .iter()
            .zip(&born)
            .all(|(&f, &p)| (f - p).abs() <= frequency_band(p, n, sigma)),
    );
    flags.insert("born_tv".to_string(), born_tv_distance <= born_tv_max);
    flags.insert("chi_square".to_string(), chi.pvalue > CHI_SQUARE_MIN_PVALUE);
    flags.insert("collapse_purity".to_string(), purity_after >= 1.0 - ALGEBRA_TOL);
    flags.insert("no_signaling_algebraic".to_string(), ns.algebraic_pass());
    flags.insert("no_signaling_statistical".to_string(), ns.statistical_pass());
    if config.is_one_to_one() {
        let expected_purity: f64 = config.amplitude_probabilities().iter().map(|p| p * p).sum();
        flags.insert(
            "reduced_purity".to_string(),
            (purity_before - expected_purity).abs() <= ALGEBRA_TOL,
        );
        flags.insert("reduced_diagonal".to_string(), reduced_offdiag_max <= DIAGONAL_TOL);
        let d = config.dimension();
        let layout = trajectories[0].final_particle_state.layout().clone();
        let mut collapse_ok = true;
        for t in trajectories {
            let phi = StateVector::basis(layout.clone(), t.inferred_particle_index)?;
            if (fidelity_pure(&t.final_particle_state, &phi)? - 1.0).abs() > FIDELITY_TOL {
                collapse_ok = false;
                break;
            }
        }
        debug_assert_eq!(layout.total_dim(), d);
        flags.insert("collapse_fidelity".to_string(), collapse_ok);
        if let Some(rate) = correlation_rate {
            flags.insert("correlation".to_string(), rate == 1.0);
        }
    }

    Ok(VerificationReport {
        born_probabilities: born,
        born_tv_distance,
        born_tv_max,
        chi_square_stat: chi.statistic,
        chi_square_pvalue: chi.pvalue,
        chi_square_dof: chi.dof,
        correlation_rate,
        reduced_offdiag_max,
        no_signaling_tv: ns.tv,
        no_signaling_tv_bound: ns.tv_bound,
        no_signaling_algebraic: ns.algebraic,
        purity_before,
        purity_after,
        pass_flags: flags,
    })
}

/// Convenience: run the chain and verify it.
pub fn run_and_verify(config: &ChainConfig) -> Result<(Vec<Trajectory>, VerificationReport)> {
    let trajectories = run_chain(config)?;
    let report = verify_run(config, &trajectories)?;
    Ok((trajectories, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Layout;

    #[test]
    fn histogram_counts() {
        let h = OutcomeHistogram::from_outcomes(2, [0, 0, 1]).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.shots, 3);
        let h = OutcomeHistogram::from_outcomes(3, [2, 2, 2]).unwrap();
        assert_eq!(h.counts, vec![0, 0, 3]);
        assert!(OutcomeHistogram::from_outcomes(2, [2]).is_err());
    }

    #[test]
    fn empty_trajectories_rejected() {
        assert!(matches!(empirical_distribution(&[]), Err(Error::Argument(_))));
        assert!(matches!(correlation_rate(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((total_variation(&[0.36, 0.64], &[0.5, 0.5]).unwrap() - 0.14).abs() < 1e-15);
        assert!(matches!(total_variation(&[1.0], &[0.5, 0.5]), Err(Error::Shape(_))));
        assert!(matches!(total_variation(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::Argument(_))));
    }

    #[test]
    fn chi_square_exact_match() {
        let h = OutcomeHistogram::from_counts(vec![36_000, 64_000]);
        let r = chi_square_gof(&h, &[0.36, 0.64]).unwrap();
        assert!(r.statistic.abs() < 1e-18);
        assert_eq!(r.pvalue, 1.0);
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn chi_square_detects_bias() {
        let h = OutcomeHistogram::from_counts(vec![35_000, 65_000]);
        let r = chi_square_gof(&h, &[0.36, 0.64]).unwrap();
        let hand = 1000.0f64.powi(2) / 36_000.0 + 1000.0f64.powi(2) / 64_000.0;
        assert!((r.statistic - hand).abs() < 1e-9);
        assert!((r.statistic - 43.4).abs() < 0.01);
        assert!(r.pvalue < 1e-9);
    }

    #[test]
    fn chi_square_pooling() {
        // last two bins (expected 2 and 3) pool into one bin of expected 5
        let h = OutcomeHistogram::from_counts(vec![50, 45, 2, 3]);
        let r = chi_square_gof(&h, &[0.5, 0.45, 0.02, 0.03]).unwrap();
        assert_eq!(r.dof, 2);
        assert!(r.statistic.abs() < 1e-12);

        // impossible bin hit
        let h = OutcomeHistogram::from_counts(vec![99, 1]);
        let r = chi_square_gof(&h, &[1.0, 0.0]).unwrap();
        assert!(r.statistic.is_infinite() && r.pvalue == 0.0);

        let h = OutcomeHistogram::from_counts(vec![2, 2]);
        assert!(matches!(chi_square_gof(&h, &[0.5, 0.5]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn diagonality_examples() {
        let l = Layout::single("p", 2).unwrap();
        let diag = DensityMatrix::diagonal(l.clone(), &[0.36, 0.64]).unwrap();
        assert_eq!(diagonality_check(&diag, &UnitaryMatrix::identity(2)).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::new(l, vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let rho = crate::state::to_density(&plus);
        assert!((diagonality_check(&rho, &UnitaryMatrix::identity(2)).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            diagonality_check(&rho, &UnitaryMatrix::identity(3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn two_sample_bound_matches_qubit_formula() {
        let b = two_sample_tv_bound(&[0.5, 0.5], 100_000, 100_000, 4.0);
        assert!((b - 4.0 * (0.25f64 * 2.0 / 1e5).sqrt()).abs() < 1e-15);
    }
}
