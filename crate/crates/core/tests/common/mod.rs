//! Definitional oracles shared by the integration tests. These work on plain
//! multi-index loops and never call the library's contraction routines.
#![allow(dead_code)]

use epr_chain::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major digits of a flat index.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for r in (0..dims.len()).rev() {
        out[r] = index % dims[r];
        index /= dims[r];
    }
    out
}

fn flat(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// out[i·len(b) + j] = a[i]·b[j]
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); a.len() * b.len()];
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Full operator on the whole space acting as `u` (row-major rows) on
/// `targets` and identity elsewhere, built entry by entry.
pub fn embed_operator(u: &[Vec<C64>], dims: &[usize], targets: &[usize]) -> Vec<Vec<C64>> {
    let n: usize = dims.iter().product();
    let sub_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let mut m = vec![vec![c(0.0, 0.0); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        let di = digits(i, dims);
        for (j, entry) in row.iter_mut().enumerate() {
            let dj = digits(j, dims);
            let rest_equal = (0..dims.len())
                .filter(|r| !targets.contains(r))
                .all(|r| di[r] == dj[r]);
            if !rest_equal {
                continue;
            }
            let ti: Vec<usize> = targets.iter().map(|&t| di[t]).collect();
            let tj: Vec<usize> = targets.iter().map(|&t| dj[t]).collect();
            *entry = u[flat(&ti, &sub_dims)][flat(&tj, &sub_dims)];
        }
    }
    m
}

pub fn mat_vec(m: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// ρ_keep[a][b] = Σ over full index pairs whose traced digits agree.
pub fn partial_trace_oracle(rho: &[Vec<C64>], dims: &[usize], keep: &[usize]) -> Vec<Vec<C64>> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let kdims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kn: usize = kdims.iter().product();
    let n: usize = dims.iter().product();
    let mut out = vec![vec![c(0.0, 0.0); kn]; kn];
    for i in 0..n {
        let di = digits(i, dims);
        for j in 0..n {
            let dj = digits(j, dims);
            let traced_equal = (0..dims.len())
                .filter(|r| !keep.contains(r))
                .all(|r| di[r] == dj[r]);
            if traced_equal {
                let a = flat(&keep.iter().map(|&k| di[k]).collect::<Vec<_>>(), &kdims);
                let b = flat(&keep.iter().map(|&k| dj[k]).collect::<Vec<_>>(), &kdims);
                out[a][b] += rho[i][j];
            }
        }
    }
    out
}

pub fn outer(v: &[C64]) -> Vec<Vec<C64>> {
    v.iter()
        .map(|a| v.iter().map(|b| a * b.conj()).collect())
        .collect()
}

pub fn max_diff_vec(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_diff_mat(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| max_diff_vec(x, y))
        .fold(0.0, f64::max)
}

/// Binomial standard deviation of a frequency.
pub fn binomial_sd(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
