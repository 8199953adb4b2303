//! Per-backend pieces of the solver: linearizations, preconditioners,
//! automorphism gauge and random initial data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::krylov::{gmres, GmresInfo};
use super::SolveConfig;
use crate::error::{Error, Result};
use crate::geometry::toric::random_smooth;
use crate::geometry::trig::TrigPoly;
use crate::moment::ccsck::{CoupledResidual, CoupledSystem, ToricSystem, TorusSystem};
use crate::tol::FD_STEP;

pub fn flatten(parts: &[Vec<f64>]) -> Vec<f64> {
    parts.iter().flatten().copied().collect()
}

pub fn unflatten<S: CoupledSystem + ?Sized>(sys: &S, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(sys.components());
    let mut at = 0;
    for i in 0..sys.components() {
        let m = sys.nodes(i);
        out.push(flat[at..at + m].to_vec());
        at += m;
    }
    out
}

pub fn axpy(potentials: &[Vec<f64>], t: f64, dir: &[f64]) -> Vec<Vec<f64>> {
    let mut at = 0;
    potentials
        .iter()
        .map(|p| {
            let q = p.iter().zip(&dir[at..at + p.len()]).map(|(a, b)| a + t * b).collect();
            at += p.len();
            q
        })
        .collect()
}

/// ∂r/∂v · dir by central differences, r the residual scalars and v the
/// stored potentials.
pub fn jvp<S: CoupledSystem + ?Sized>(sys: &S, potentials: &[Vec<f64>], dir: &[f64]) -> Result<Vec<f64>> {
    let dmax = dir.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if dmax == 0.0 {
        return Ok(vec![0.0; dir.len()]);
    }
    let pmax = potentials.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let h = FD_STEP * (1.0 + pmax) / dmax;
    let plus = sys.residual(&axpy(potentials, h, dir))?;
    let minus = sys.residual(&axpy(potentials, -h, dir))?;
    Ok(flatten(&plus.scalars).iter().zip(flatten(&minus.scalars)).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Approximate inverse of ∂r/∂v applied to residual scalars.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    /// Inverse blocks of the flat-state Fourier symbol, one (k+1)² block
    /// per frequency; the zero frequency maps to zero.
    Fourier { blocks: Vec<DMatrix<Complex64>> },
    /// Pseudo-inverse of the gauge-bordered reference Jacobian.
    Dense { pinv: DMatrix<f64>, border: usize },
}

/// Outcome of a linear solve inside a Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl From<GmresInfo> for LinearSolveInfo {
    fn from(g: GmresInfo) -> Self {
        LinearSolveInfo { iterations: g.iterations, relative_residual: g.relative_residual }
    }
}

pub trait SolverBackend: CoupledSystem {
    fn build_preconditioner(&self) -> Result<Preconditioner>;
    fn precondition(&self, pc: &Preconditioner, r: &[f64]) -> Vec<f64>;
    /// δv solving ∂r/∂v δv = −r at `potentials`.
    fn newton_direction(&self, potentials: &[Vec<f64>], res: &CoupledResidual, pc: &Preconditioner, cfg: &SolveConfig) -> Result<(Vec<f64>, LinearSolveInfo)>;
    /// Largest violation of the gauge conditions Newton relies on.
    fn gauge_defect(&self, potentials: &[Vec<f64>]) -> f64;
    fn fix_gauge(&self, potentials: &[Vec<f64>]) -> Vec<Vec<f64>>;
    /// The automorphism group acting on potentials, `s` its parameters.
    fn apply_automorphism(&self, potentials: &[Vec<f64>], s: &[f64]) -> Vec<Vec<f64>>;
    fn random_potentials(&self, seed: u64, amplitude: f64) -> Vec<Vec<f64>>;
}

impl TorusSystem {
    /// Frequency blocks L(ξ) of ∂r/∂v at `potentials`, from responses to a
    /// unit impulse at node 0 of each component. Exact when the state is
    /// translation invariant.
    pub fn impulse_symbol(&self, potentials: &[Vec<f64>]) -> Result<Vec<DMatrix<Complex64>>> {
        let k1 = self.components();
        let len = self.geom.len();
        let mut blocks = vec![DMatrix::<Complex64>::zeros(k1, k1); len];
        for j in 0..k1 {
            let mut dir = vec![0.0; k1 * len];
            dir[j * len] = 1.0;
            let out = jvp(self, potentials, &dir)?;
            for i in 0..k1 {
                let spec = self.geom.grid.forward(&out[i * len..(i + 1) * len]);
                for (m, c) in spec.into_iter().enumerate() {
                    blocks[m][(i, j)] = c;
                }
            }
        }
        Ok(blocks)
    }
}

impl SolverBackend for TorusSystem {
    fn build_preconditioner(&self) -> Result<Preconditioner> {
        let blocks = self
            .impulse_symbol(&self.zero_potentials())?
            .into_iter()
            .enumerate()
            .map(|(m, b)| {
                let k1 = b.nrows();
                if m == 0 {
                    DMatrix::zeros(k1, k1)
                } else {
                    b.try_inverse().unwrap_or_else(|| DMatrix::zeros(k1, k1))
                }
            })
            .collect();
        Ok(Preconditioner::Fourier { blocks })
    }

    fn precondition(&self, pc: &Preconditioner, r: &[f64]) -> Vec<f64> {
        let Preconditioner::Fourier { blocks } = pc else { return r.to_vec() };
        let len = self.geom.len();
        let k1 = self.components();
        let specs: Vec<Vec<Complex64>> = (0..k1).map(|i| self.geom.grid.forward(&r[i * len..(i + 1) * len])).collect();
        let mut out_specs = vec![vec![Complex64::new(0.0, 0.0); len]; k1];
        for m in 0..len {
            let v = DVector::from_iterator(k1, (0..k1).map(|i| specs[i][m]));
            let y = &blocks[m] * v;
            for i in 0..k1 {
                out_specs[i][m] = y[i];
            }
        }
        out_specs.into_iter().flat_map(|s| self.geom.grid.backward(s)).collect()
    }

    fn newton_direction(&self, potentials: &[Vec<f64>], res: &CoupledResidual, pc: &Preconditioner, cfg: &SolveConfig) -> Result<(Vec<f64>, LinearSolveInfo)> {
        let rhs: Vec<f64> = flatten(&res.scalars).iter().map(|v| -v).collect();
        let (mut dx, info) = gmres(|v| jvp(self, potentials, v), |v| self.precondition(pc, v), &rhs, cfg.gmres_tolerance, cfg.gmres_restart, cfg.gmres_max_iterations)?;
        // constants are in the kernel
        let len = self.geom.len();
        for chunk in dx.chunks_mut(len) {
            let mean = self.geom.grid.mean(chunk);
            chunk.iter_mut().for_each(|v| *v -= mean);
        }
        Ok((dx, info.into()))
    }

    fn gauge_defect(&self, potentials: &[Vec<f64>]) -> f64 {
        potentials.iter().map(|p| self.geom.grid.mean(p).abs()).fold(0.0, f64::max)
    }

    /// Zero means, then one joint translation making the first Fourier
    /// coefficient of φ₀ along each axis real and nonnegative. An axis whose
    /// first harmonic vanishes is left unfixed.
    fn fix_gauge(&self, potentials: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let grid = &self.geom.grid;
        let d = grid.dim();
        let spec = grid.forward(&potentials[0]);
        let len = grid.len() as f64;
        let shift: Vec<f64> = (0..d)
            .map(|a| {
                let idx = grid.side().pow((d - 1 - a) as u32);
                let c = spec[idx];
                if c.norm() / len > 1e-13 {
                    c.arg()
                } else {
                    0.0
                }
            })
            .collect();
        self.apply_automorphism(potentials, &shift)
            .into_iter()
            .map(|p| {
                let mean = grid.mean(&p);
                p.into_iter().map(|v| v - mean).collect()
            })
            .collect()
    }

    /// Joint translation x ↦ x − s.
    fn apply_automorphism(&self, potentials: &[Vec<f64>], s: &[f64]) -> Vec<Vec<f64>> {
        if s.iter().all(|v| *v == 0.0) {
            return potentials.to_vec();
        }
        potentials.iter().map(|p| self.geom.grid.translate(p, s)).collect()
    }

    /// Each component a sum of 4 random modes with |ξ|∞ ≤ 2 and
    /// coefficients of size `amplitude`.
    fn random_potentials(&self, seed: u64, amplitude: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.components()).map(|_| self.geom.sample(&TrigPoly::random(self.geom.dim(), &mut rng, 4, 2, amplitude))).collect()
    }
}

impl ToricSystem {
    /// Rows of the gauge functionals: ∫ψ_i dx for each i and ∫(x − a₀/2)ψ₀ dx.
    pub fn gauge_rows(&self) -> DMatrix<f64> {
        let k1 = self.components();
        let cols: usize = (0..k1).map(|i| self.nodes(i)).sum();
        let mut g = DMatrix::zeros(k1 + 1, cols);
        let mut at = 0;
        for (i, iv) in self.intervals.iter().enumerate() {
            for (j, q) in iv.q.iter().enumerate() {
                g[(i, at + j)] = *q;
                if i == 0 {
                    g[(k1, j)] = q * (iv.x[j] - 0.5 * iv.a);
                }
            }
            at += iv.len();
        }
        g
    }

    /// Dense ∂r/∂v by central differences, one column per stored value.
    pub fn dense_jacobian(&self, potentials: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = potentials.iter().map(|p| p.len()).sum();
        let mut jac = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let col = jvp(self, potentials, &e)?;
            e[c] = 0.0;
            jac.set_column(c, &DVector::from_vec(col));
        }
        Ok(jac)
    }

    fn bordered_pinv(&self, jac: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let g = self.gauge_rows();
        let (n, b) = (jac.ncols(), g.nrows());
        let mut m = DMatrix::zeros(n + b, n);
        m.view_mut((0, 0), (n, n)).copy_from(&jac);
        m.view_mut((n, 0), (b, n)).copy_from(&g);
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        svd.pseudo_inverse(1e-13 * smax).map_err(|e| Error::Diverged(format!("pseudo-inverse failed: {e}")))
    }
}

impl SolverBackend for ToricSystem {
    fn build_preconditioner(&self) -> Result<Preconditioner> {
        let jac = self.dense_jacobian(&self.zero_potentials())?;
        Ok(Preconditioner::Dense { pinv: self.bordered_pinv(jac)?, border: self.components() + 1 })
    }

    fn precondition(&self, pc: &Preconditioner, r: &[f64]) -> Vec<f64> {
        let Preconditioner::Dense { pinv, border } = pc else { return r.to_vec() };
        let mut rhs = r.to_vec();
        rhs.extend(std::iter::repeat(0.0).take(*border));
        (pinv * DVector::from_vec(rhs)).iter().copied().collect()
    }

    /// Least-squares solve of the gauge-bordered Jacobian: the gauge rows
    /// remove the constants and the joint linear shift from the kernel.
    fn newton_direction(&self, potentials: &[Vec<f64>], res: &CoupledResidual, _pc: &Preconditioner, _cfg: &SolveConfig) -> Result<(Vec<f64>, LinearSolveInfo)> {
        let jac = self.dense_jacobian(potentials)?;
        let rhs: Vec<f64> = flatten(&res.scalars).iter().map(|v| -v).collect();
        let pinv = self.bordered_pinv(jac.clone())?;
        let mut b = rhs.clone();
        b.extend(std::iter::repeat(0.0).take(self.components() + 1));
        let dx = &pinv * DVector::from_vec(b);
        let resid = &jac * &dx - DVector::from_vec(rhs.clone());
        let rn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = if rn > 0.0 { resid.norm() / rn } else { 0.0 };
        Ok((dx.iter().copied().collect(), LinearSolveInfo { iterations: 1, relative_residual: rel }))
    }

    fn gauge_defect(&self, potentials: &[Vec<f64>]) -> f64 {
        let g = self.gauge_rows();
        let v = DVector::from_vec(flatten(potentials));
        (g * v).amax()
    }

    /// Joint shift ψ_i += s·x_i making ∫(x − a₀/2)ψ₀ dx = 0, then zero means.
    fn fix_gauge(&self, potentials: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let iv0 = &self.intervals[0];
        let h0: Vec<f64> = iv0.x.iter().map(|x| x - 0.5 * iv0.a).collect();
        let num = iv0.quad(&h0.iter().zip(&potentials[0]).map(|(h, p)| h * p).collect::<Vec<_>>());
        let den = iv0.quad(&h0.iter().zip(&iv0.x).map(|(h, x)| h * x).collect::<Vec<_>>());
        let shifted = self.apply_automorphism(potentials, &[-num / den]);
        shifted
            .into_iter()
            .zip(&self.intervals)
            .map(|(p, iv)| {
                let mean = iv.quad(&p) / iv.a;
                p.into_iter().map(|v| v - mean).collect()
            })
            .collect()
    }

    /// The ℂ* action: u_i ↦ u_i + s·x_i on every component.
    fn apply_automorphism(&self, potentials: &[Vec<f64>], s: &[f64]) -> Vec<Vec<f64>> {
        let s = s.first().copied().unwrap_or(0.0);
        potentials.iter().zip(&self.intervals).map(|(p, iv)| p.iter().zip(&iv.x).map(|(v, x)| v + s * x).collect()).collect()
    }

    fn random_potentials(&self, seed: u64, amplitude: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.intervals.iter().map(|iv| random_smooth(iv, &mut rng, amplitude)).collect()
    }
}
