//! Spectrum of the linearized flow v̇ = −(∂r/∂v) v at the flat torus state.
//!
//! The operator is self-adjoint for ⟨u, v⟩ = Σ_i w_i ∫ u_i v_i with the
//! pairing weights w, so Rayleigh quotients are taken in that product.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::backend::{jvp, SolverBackend};
use crate::error::Result;
use crate::moment::ccsck::{CoupledSystem, TorusSystem};

/// The flow linearization restricted to one real Fourier mode cos(ξ·x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRates {
    pub wavevector: Vec<i64>,
    /// L(ξ)_{ij}: the cos(ξ·x) coefficient of component i of ∂r/∂v applied
    /// to cos(ξ·x) in component j.
    pub block: Vec<Vec<f64>>,
    /// Eigenvalues of −L(ξ), ascending: the decay rates of the mode.
    pub rates: Vec<f64>,
    /// Relative size of the response outside cos(ξ·x); zero when the state
    /// is translation invariant.
    pub leakage: f64,
}

pub fn mode_rates(sys: &TorusSystem, wavevector: &[i64]) -> Result<ModeRates> {
    let grid = &sys.geom.grid;
    let len = grid.len();
    let k1 = sys.components();
    let mut x = vec![0.0; grid.dim()];
    let mode: Vec<f64> = (0..len)
        .map(|i| {
            grid.point(i, &mut x);
            x.iter().zip(wavevector).map(|(a, &k)| a * k as f64).sum::<f64>().cos()
        })
        .collect();
    let norm2: f64 = mode.iter().map(|v| v * v).sum();
    let zero = sys.zero_potentials();
    let mut block = vec![vec![0.0; k1]; k1];
    let (mut leak, mut total) = (0.0f64, 0.0f64);
    for j in 0..k1 {
        let mut dir = vec![0.0; k1 * len];
        dir[j * len..(j + 1) * len].copy_from_slice(&mode);
        let out = jvp(sys, &zero, &dir)?;
        for i in 0..k1 {
            let part = &out[i * len..(i + 1) * len];
            let c = part.iter().zip(&mode).map(|(a, b)| a * b).sum::<f64>() / norm2;
            block[i][j] = c;
            leak += part.iter().zip(&mode).map(|(a, b)| (a - c * b).powi(2)).sum::<f64>();
            total += part.iter().map(|a| a * a).sum::<f64>();
        }
    }
    let m = DMatrix::from_fn(k1, k1, |i, j| -block[i][j]);
    let mut rates: Vec<f64> = eigenvalues(&m.map(|v| Complex64::new(v, 0.0))).iter().map(|z| z.re).collect();
    rates.sort_by(|a, b| a.total_cmp(b));
    Ok(ModeRates { wavevector: wavevector.to_vec(), block, rates, leakage: if total > 0.0 { (leak / total).sqrt() } else { 0.0 } })
}

fn eigenvalues(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    m.clone().schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Largest real part among eigenvalues of −L(ξ), ξ ≠ 0, from the
    /// impulse-assembled blocks; nonpositive means every mode decays.
    pub max_rate: f64,
    /// Most negative rate from the blocks and from power iteration.
    pub min_rate_blocks: f64,
    pub min_rate_power: f64,
    /// Rate of smallest magnitude off the kernel, from the blocks and from
    /// inverse iteration.
    pub slowest_rate_blocks: f64,
    pub slowest_rate_power: f64,
    /// Eigenvalues with |λ| below 1e−8·max|λ| over all blocks.
    pub kernel_dimension: usize,
    pub largest_imaginary_part: f64,
    pub iterations: usize,
}

fn weighted_dot(w: &[f64], len: usize, a: &[f64], b: &[f64]) -> f64 {
    a.chunks(len).zip(b.chunks(len)).zip(w).map(|((x, y), wi)| wi * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}

fn remove_means(v: &mut [f64], len: usize) {
    for chunk in v.chunks_mut(len) {
        let m = chunk.iter().sum::<f64>() / len as f64;
        chunk.iter_mut().for_each(|x| *x -= m);
    }
}

/// Power iteration on −L and inverse iteration through the exact flat
/// inverse, both on the mean-zero subspace, checked against the blocks.
pub fn flat_spectrum(sys: &TorusSystem, iterations: usize, seed: u64) -> Result<SpectrumReport> {
    let len = sys.geom.len();
    let k1 = sys.components();
    let w = sys.coupling().pairing_weights();
    let zero = sys.zero_potentials();
    let blocks = sys.impulse_symbol(&zero)?;
    let mut all = Vec::with_capacity(len * k1);
    for b in &blocks {
        all.extend(eigenvalues(&(-b.clone())));
    }
    let scale = all.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let kernel_dimension = all.iter().filter(|z| z.norm() < 1e-8 * scale).count();
    let off: Vec<&Complex64> = blocks.iter().enumerate().filter(|(m, _)| *m != 0).flat_map(|(m, _)| &all[m * k1..(m + 1) * k1]).collect();
    let max_rate = off.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min_rate_blocks = off.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let slowest = off.iter().min_by(|a, b| a.norm().total_cmp(&b.norm())).map(|z| z.re).unwrap_or(0.0);
    let largest_imaginary_part = all.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..k1 * len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let rayleigh = |op: &dyn Fn(&[f64]) -> Result<Vec<f64>>| -> Result<f64> {
        let mut v = start.clone();
        remove_means(&mut v, len);
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let nv = weighted_dot(&w, len, &v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            let mut av = op(&v)?;
            remove_means(&mut av, len);
            lambda = weighted_dot(&w, len, &v, &av);
            v = av;
        }
        Ok(lambda)
    };
    let min_rate_power = rayleigh(&|v| Ok(jvp(sys, &zero, v)?.into_iter().map(|x| -x).collect()))?;
    let pc = sys.build_preconditioner()?;
    let inv = rayleigh(&|v| Ok(sys.precondition(&pc, v).into_iter().map(|x| -x).collect()))?;
    Ok(SpectrumReport {
        max_rate,
        min_rate_blocks,
        min_rate_power,
        slowest_rate_blocks: slowest,
        slowest_rate_power: 1.0 / inv,
        kernel_dimension,
        largest_imaginary_part,
        iterations,
    })
}
