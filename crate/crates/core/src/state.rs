//! Dense composite states, density operators and unitaries.
//!
//! Amplitudes are stored row-major over the register order of a [`Layout`]:
//! the first register is the most significant digit of the flat index.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for algebraic identities (normalization, Hermiticity, unitarity).
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Constructors reject inputs whose norm is further than this from 1.
pub const INPUT_NORM_TOL: f64 = 1e-6;
/// Smallest eigenvalue a density operator may have.
pub const PSD_TOL: f64 = 1e-8;
/// Dense storage cap on the total Hilbert space dimension.
pub const MAX_TOTAL_DIM: usize = 1 << 14;

/// Ordered list of named registers and their dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl Layout {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if dims.is_empty() {
            return Err(Error::Argument("layout needs at least one register".into()));
        }
        if dims.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} dims but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Argument(format!("register dimension {d} < 2")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::LabelCollision(l.clone()));
            }
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= MAX_TOTAL_DIM)
            .ok_or_else(|| Error::TooLarge(dims.iter().fold(1usize, |a, &d| a.saturating_mul(d))))?;
        debug_assert!(total >= 2);
        Ok(Self { dims, labels })
    }

    /// A single register.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new(vec![dim], vec![label])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_registers(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Flat-index stride of each register.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for r in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[r] = strides[r + 1] * self.dims[r + 1];
        }
        strides
    }

    /// Registers of `self` followed by those of `other`.
    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        if let Some(l) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(Error::LabelCollision(l.clone()));
        }
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        let labels: Vec<String> = self.labels.iter().chain(&other.labels).cloned().collect();
        Layout::new(dims, labels)
    }

    /// Sub-layout made of `regs`, in the given order.
    pub fn select(&self, regs: &[usize]) -> Layout {
        Layout {
            dims: regs.iter().map(|&r| self.dims[r]).collect(),
            labels: regs.iter().map(|&r| self.labels[r].clone()).collect(),
        }
    }

    /// Flat offsets of every basis state of `regs` (first listed register most
    /// significant), with all other registers at index 0.
    pub fn offsets(&self, regs: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &r in regs {
            let (dim, stride) = (self.dims[r], strides[r]);
            out = out
                .iter()
                .flat_map(|&o| (0..dim).map(move |x| o + x * stride))
                .collect();
        }
        out
    }

    /// Registers not contained in `regs`, ascending.
    pub fn complement(&self, regs: &[usize]) -> Vec<usize> {
        (0..self.dims.len()).filter(|r| !regs.contains(r)).collect()
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "multi-index of length {} for {} registers",
                digits.len(),
                self.dims.len()
            )));
        }
        digits.iter().zip(&self.dims).try_fold(0usize, |acc, (&x, &d)| {
            if x < d {
                Ok(acc * d + x)
            } else {
                Err(Error::Argument(format!("digit {x} out of range for dim {d}")))
            }
        })
    }

    fn check_registers(&self, regs: &[usize], what: &str) -> Result<()> {
        for (i, &r) in regs.iter().enumerate() {
            if r >= self.dims.len() {
                return Err(Error::Argument(format!(
                    "{what} register {r} out of range (layout has {})",
                    self.dims.len()
                )));
            }
            if regs[..i].contains(&r) {
                return Err(Error::Argument(format!("{what} register {r} listed twice")));
            }
        }
        Ok(())
    }
}

/// Normalized amplitude vector over a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Layout,
    amps: Vec<C64>,
}

impl StateVector {
    /// Validates length and finiteness; renormalizes norm deviations up to
    /// [`INPUT_NORM_TOL`] and rejects anything larger.
    pub fn new(layout: Layout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for total dimension {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = norm_of(&amps);
        if (norm - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::NotNormalized {
                norm,
                tolerance: INPUT_NORM_TOL,
            });
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { layout, amps })
    }

    /// Computational basis state at a flat index.
    pub fn basis(layout: Layout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::Argument(format!("basis index {index} >= {n}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// Computational basis state given one digit per register.
    pub fn product_basis(layout: Layout, digits: &[usize]) -> Result<Self> {
        let index = layout.flat_index(digits)?;
        Self::basis(layout, index)
    }

    /// Caller guarantees normalization within [`ALGEBRA_TOL`].
    pub(crate) fn from_raw(layout: Layout, amps: Vec<C64>) -> Self {
        debug_assert_eq!(layout.total_dim(), amps.len());
        Self { layout, amps }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::Shape("inner product of states with different layouts".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Reduced density operator on `keep`, computed straight from the
    /// amplitudes without forming the full |ψ⟩⟨ψ|.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = sorted_keep(&self.layout, keep)?;
        let traced = self.layout.complement(&keep);
        let koff = self.layout.offsets(&keep);
        let toff = self.layout.offsets(&traced);
        let n = koff.len();
        let mut mat = DMatrix::<C64>::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v: C64 = toff
                    .iter()
                    .map(|&t| self.amps[koff[a] + t] * self.amps[koff[b] + t].conj())
                    .sum();
                mat[(a, b)] = v;
                mat[(b, a)] = v.conj();
            }
        }
        Ok(DensityMatrix {
            layout: self.layout.select(&keep),
            mat,
        })
    }
}

fn norm_of(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn sorted_keep(layout: &Layout, keep: &[usize]) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::Argument("partial trace needs at least one kept register".into()));
    }
    layout.check_registers(keep, "kept")?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    Ok(keep)
}

/// Square matrix satisfying ‖U†U − I‖_max ≤ [`ALGEBRA_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    mat: DMatrix<C64>,
}

impl UnitaryMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::Shape(format!(
                "unitary must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("unitary matrix"));
        }
        let deviation = unitarity_error(&mat);
        if deviation > ALGEBRA_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { mat })
    }

    /// Builds from row-major rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("unitary rows must all have length equal to the row count".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub(crate) fn from_raw(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    /// `self · other`
    pub fn compose(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "cannot compose {}-dim and {}-dim unitaries",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    /// `self ⊗ other`
    pub fn kron(&self, other: &UnitaryMatrix) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.mat.column(j).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| self.mat.row(i).iter().copied().collect())
            .collect()
    }
}

/// max |(M†M − I)ᵢⱼ|
pub fn unitarity_error(mat: &DMatrix<C64>) -> f64 {
    let n = mat.nrows();
    let prod = mat.adjoint() * mat;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Hermitian, unit-trace operator on a layout.
///
/// Positive semidefiniteness is not checked on construction; see
/// [`DensityMatrix::min_eigenvalue`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: Layout,
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(layout: Layout, mat: DMatrix<C64>) -> Result<Self> {
        let n = layout.total_dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Shape(format!(
                "{}x{} matrix for total dimension {n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        let herm = hermiticity_error(&mat);
        if herm > ALGEBRA_TOL {
            return Err(Error::NotDensity(format!("max |M - M\u{2020}| = {herm:e}")));
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > ALGEBRA_TOL {
            return Err(Error::NotDensity(format!("trace = {tr}")));
        }
        Ok(Self { layout, mat })
    }

    /// Diagonal operator from a probability vector on a single register.
    pub fn diagonal(layout: Layout, probs: &[f64]) -> Result<Self> {
        let n = layout.total_dim();
        if probs.len() != n {
            return Err(Error::Shape(format!("{} probabilities for dimension {n}", probs.len())));
        }
        let mat = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(probs[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(layout, mat)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Smallest eigenvalue of the Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    /// max |ρᵢⱼ − σᵢⱼ|
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("density matrices of different dimension".into()));
        }
        Ok(self
            .mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Row-major entries.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| self.mat.row(i).iter().copied().collect())
            .collect()
    }
}

fn hermiticity_error(mat: &DMatrix<C64>) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Product state with `a`'s registers followed by `b`'s.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let layout = a.layout.concat(&b.layout)?;
    let amps: Vec<C64> = a
        .amps
        .iter()
        .flat_map(|&x| b.amps.iter().map(move |&y| x * y))
        .collect();
    let norm = norm_of(&amps);
    Ok(StateVector::from_raw(
        layout,
        amps.into_iter().map(|x| x / norm).collect(),
    ))
}

/// Applies `u` to the composite of `targets` (first target most significant
/// in `u`'s basis), leaving every other register untouched.
pub fn apply_unitary(psi: &StateVector, u: &UnitaryMatrix, targets: &[usize]) -> Result<StateVector> {
    let layout = &psi.layout;
    if targets.is_empty() {
        return Err(Error::Shape("apply_unitary needs at least one target".into()));
    }
    layout.check_registers(targets, "target")?;
    let sub: usize = targets.iter().map(|&r| layout.dims[r]).product();
    if sub != u.dim() {
        return Err(Error::Shape(format!(
            "unitary of dim {} applied to target registers of total dim {sub}",
            u.dim()
        )));
    }
    let toff = layout.offsets(targets);
    let roff = layout.offsets(&layout.complement(targets));
    let mut out = vec![C64::new(0.0, 0.0); psi.amps.len()];
    let mut gathered = vec![C64::new(0.0, 0.0); sub];
    for &base in &roff {
        for (g, &t) in gathered.iter_mut().zip(&toff) {
            *g = psi.amps[base + t];
        }
        for (row, &t) in toff.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (col, g) in gathered.iter().enumerate() {
                let m = u.mat[(row, col)];
                if m.re != 0.0 || m.im != 0.0 {
                    acc += m * g;
                }
            }
            out[base + t] = acc;
        }
    }
    Ok(StateVector::from_raw(layout.clone(), out))
}

/// |ψ⟩⟨ψ|
pub fn to_density(psi: &StateVector) -> DensityMatrix {
    let n = psi.dim();
    DensityMatrix {
        layout: psi.layout.clone(),
        mat: DMatrix::from_fn(n, n, |i, j| psi.amps[i] * psi.amps[j].conj()),
    }
}

/// Traces out every register not in `keep`; kept registers stay in their
/// original relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let keep = sorted_keep(&rho.layout, keep)?;
    let traced = rho.layout.complement(&keep);
    let koff = rho.layout.offsets(&keep);
    let toff = rho.layout.offsets(&traced);
    let n = koff.len();
    let mat = DMatrix::from_fn(n, n, |a, b| {
        toff.iter()
            .map(|&t| rho.mat[(koff[a] + t, koff[b] + t)])
            .sum()
    });
    Ok(DensityMatrix {
        layout: rho.layout.select(&keep),
        mat,
    })
}

/// tr(ρ²)
pub fn purity(rho: &DensityMatrix) -> f64 {
    let n = rho.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (rho.mat[(i, j)] * rho.mat[(j, i)]).re;
        }
    }
    acc
}

/// |⟨ψ|φ⟩|²
pub fn fidelity_pure(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr())
}

/// Haar-ish random unitary: Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryMatrix {
    loop {
        let mut cols: Vec<Vec<C64>> = (0..dim)
            .map(|_| (0..dim).map(|_| gaussian_c64(rng)).collect())
            .collect();
        let mut ok = true;
        for j in 0..dim {
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for k in 0..j {
                    let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                    let (head, tail) = cols.split_at_mut(j);
                    for (x, q) in tail[0].iter_mut().zip(&head[k]) {
                        *x -= proj * q;
                    }
                }
            }
            let n = norm_of(&cols[j]);
            if n < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|x| *x /= n);
        }
        if ok {
            return UnitaryMatrix::from_raw(DMatrix::from_fn(dim, dim, |i, j| cols[j][i]));
        }
    }
}

/// Random normalized state on `layout`.
pub fn random_state<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> StateVector {
    let amps: Vec<C64> = (0..layout.total_dim()).map(|_| gaussian_c64(rng)).collect();
    let norm = norm_of(&amps);
    StateVector::from_raw(layout, amps.into_iter().map(|a| a / norm).collect())
}

/// Random full-rank density operator G G† / tr(G G†).
pub fn random_density<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> DensityMatrix {
    let n = layout.total_dim();
    let g = DMatrix::from_fn(n, n, |_, _| gaussian_c64(rng));
    let mut m = &g * g.adjoint();
    let tr = m.trace();
    m /= tr;
    // symmetrize away rounding
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix { layout, mat: m }
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}
