//! Measurement couplings, Born distributions and sampled projective collapse.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{StateVector, UnitaryMatrix, ALGEBRA_TOL, C64};

/// Minimum spacing between eigenvalues of a nondegenerate observable.
pub const EIGENVALUE_GAP: f64 = 1e-9;

/// Born probabilities below this (in magnitude) are clamped to zero.
const PROB_CLAMP: f64 = 1e-12;

/// Observable with discrete, nondegenerate spectrum. Column `i` of the
/// eigenbasis is the eigenvector belonging to `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    eigenvalues: Vec<f64>,
    eigenbasis: UnitaryMatrix,
}

impl Observable {
    pub fn new(eigenvalues: Vec<f64>, eigenbasis: UnitaryMatrix) -> Result<Self> {
        if eigenvalues.len() != eigenbasis.dim() {
            return Err(Error::Shape(format!(
                "{} eigenvalues for a {}-dim eigenbasis",
                eigenvalues.len(),
                eigenbasis.dim()
            )));
        }
        if eigenvalues.len() < 2 {
            return Err(Error::Argument("observable dimension must be at least 2".into()));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observable eigenvalues"));
        }
        for (i, &a) in eigenvalues.iter().enumerate() {
            for &b in &eigenvalues[..i] {
                if (a - b).abs() <= EIGENVALUE_GAP {
                    return Err(Error::Degenerate(b, a));
                }
            }
        }
        Ok(Self {
            eigenvalues,
            eigenbasis,
        })
    }

    /// Computational-basis observable with F_i = i.
    pub fn computational(dim: usize) -> Result<Self> {
        Self::new((0..dim).map(|i| i as f64).collect(), UnitaryMatrix::identity(dim))
    }

    /// Computational basis with caller-chosen eigenvalues.
    pub fn with_eigenvalues(eigenvalues: Vec<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        Self::new(eigenvalues, UnitaryMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &UnitaryMatrix {
        &self.eigenbasis
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenbasis.column(k)
    }
}

/// Result of one projective measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub outcome_index: usize,
    pub eigenvalue: f64,
    pub probability: f64,
}

/// Counter-based random stream: one independent ChaCha stream per
/// `(seed, stream_index)` pair, so shots can run in any order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw in [0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Generalized controlled shift on (particle, device), both of dimension
/// `d`: U|i⟩|j⟩ = |i⟩|(j + i) mod d⟩.
pub fn ideal_coupling_unitary(d: usize) -> Result<UnitaryMatrix> {
    if d < 2 {
        return Err(Error::Argument(format!("coupling dimension {d} < 2")));
    }
    let n = d * d;
    let mut mat = DMatrix::<C64>::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            mat[(i * d + (j + i) % d, i * d + j)] = C64::new(1.0, 0.0);
        }
    }
    UnitaryMatrix::new(mat)
}

/// Pointer map of a coupling on (particle, device): returns σ with
/// u(|i⟩⊗|0⟩) = e^{iθᵢ}|i⟩⊗|σ(i)⟩ for every i, or `None` when some
/// column is not of that form or σ is not injective.
pub fn pointer_map(u: &UnitaryMatrix, d: usize) -> Result<Option<Vec<usize>>> {
    if d < 2 || u.dim() != d * d {
        return Err(Error::Shape(format!(
            "coupling of dim {} is not a {d}x{d} two-register operator",
            u.dim()
        )));
    }
    let mut sigma = Vec::with_capacity(d);
    for i in 0..d {
        let col = u.column(i * d);
        let (peak, amp) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(k, a)| (k, *a))
            .expect("non-empty column");
        if peak / d != i || (amp.norm() - 1.0).abs() > ALGEBRA_TOL {
            return Ok(None);
        }
        let stray = col
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != peak)
            .any(|(_, a)| a.norm() > ALGEBRA_TOL);
        if stray {
            return Ok(None);
        }
        let s = peak % d;
        if sigma.contains(&s) {
            return Ok(None);
        }
        sigma.push(s);
    }
    Ok(Some(sigma))
}

/// Whether `u` couples particle eigenstates one-to-one to orthogonal
/// pointer states of a device started in |0⟩.
pub fn verify_one_to_one(u: &UnitaryMatrix, d: usize) -> Result<bool> {
    Ok(pointer_map(u, d)?.is_some())
}

fn check_target(psi: &StateVector, obs: &Observable, target: usize) -> Result<()> {
    let dims = psi.layout().dims();
    if target >= dims.len() {
        return Err(Error::Argument(format!(
            "target register {target} out of range (layout has {})",
            dims.len()
        )));
    }
    if dims[target] != obs.dim() {
        return Err(Error::Shape(format!(
            "observable of dim {} on register `{}` of dim {}",
            obs.dim(),
            psi.layout().labels()[target],
            dims[target]
        )));
    }
    Ok(())
}

/// pₖ = ⟨ψ|Πₖ|ψ⟩ with Πₖ the projector on eigenvector k of `obs`, acting on
/// register `target`.
pub fn born_probabilities(psi: &StateVector, obs: &Observable, target: usize) -> Result<Vec<f64>> {
    check_target(psi, obs, target)?;
    let layout = psi.layout();
    let toff = layout.offsets(&[target]);
    let roff = layout.offsets(&layout.complement(&[target]));
    let basis = obs.eigenbasis().matrix();
    let amps = psi.amps();
    let d = obs.dim();
    let mut probs = vec![0.0; d];
    for &base in &roff {
        for (k, p) in probs.iter_mut().enumerate() {
            let c: C64 = toff
                .iter()
                .enumerate()
                .map(|(t, &off)| basis[(t, k)].conj() * amps[base + off])
                .sum();
            *p += c.norm_sqr();
        }
    }
    for p in &mut probs {
        if *p < PROB_CLAMP && *p > -PROB_CLAMP {
            *p = p.max(0.0);
        }
        *p = p.max(0.0);
    }
    Ok(probs)
}

/// Index chosen by inverse CDF over ascending outcome index for a uniform
/// draw `u ∈ [0, 1)`. Falls back to the last outcome with nonzero
/// probability when rounding leaves `u` above the final cumulative sum.
pub fn sample_inverse_cdf(probs: &[f64], u: f64) -> Option<usize> {
    let mut cum = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        cum += p;
        if p > 0.0 && u < cum {
            return Some(k);
        }
    }
    probs.iter().rposition(|&p| p > 0.0)
}

/// Projects `target` onto eigenvector `k` of `obs` and renormalizes.
/// Returns the branch probability alongside the post-measurement state.
pub fn collapse_onto(
    psi: &StateVector,
    obs: &Observable,
    target: usize,
    k: usize,
) -> Result<(f64, StateVector)> {
    check_target(psi, obs, target)?;
    if k >= obs.dim() {
        return Err(Error::Argument(format!("outcome {k} >= dimension {}", obs.dim())));
    }
    let layout = psi.layout();
    let toff = layout.offsets(&[target]);
    let roff = layout.offsets(&layout.complement(&[target]));
    let v = obs.eigenvector(k);
    let amps = psi.amps();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    let mut prob = 0.0;
    for &base in &roff {
        let c: C64 = toff
            .iter()
            .zip(&v)
            .map(|(&off, vt)| vt.conj() * amps[base + off])
            .sum();
        prob += c.norm_sqr();
        for (&off, vt) in toff.iter().zip(&v) {
            out[base + off] = vt * c;
        }
    }
    if prob <= PROB_CLAMP {
        return Err(Error::Invariant(format!(
            "outcome {k} has vanishing probability {prob:e}"
        )));
    }
    let scale = 1.0 / prob.sqrt();
    out.iter_mut().for_each(|a| *a *= scale);
    Ok((prob, StateVector::from_raw(layout.clone(), out)))
}

/// Samples an outcome with one uniform draw from `rng` and returns it with
/// the collapsed, renormalized state.
pub fn measure_and_collapse(
    psi: &StateVector,
    obs: &Observable,
    target: usize,
    rng: &mut RngStream,
) -> Result<(MeasurementOutcome, StateVector)> {
    let probs = born_probabilities(psi, obs, target)?;
    let k = sample_inverse_cdf(&probs, rng.next_uniform())
        .ok_or_else(|| Error::Invariant("all Born probabilities vanish".into()))?;
    let (_, post) = collapse_onto(psi, obs, target, k)?;
    Ok((
        MeasurementOutcome {
            outcome_index: k,
            eigenvalue: obs.eigenvalues()[k],
            probability: probs[k],
        },
        post,
    ))
}
