//! Diffeomorphisms of the torus isotopic to the identity, described by a
//! composable map specification and sampled (values and Jacobians) at the
//! grid nodes. Maps act on lifts ℝ^{2n} → ℝ^{2n}, so displacements are
//! honest differences and never wrapped.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::linalg::{self, Mat, MAXD};
use super::torus::{AnalyticKahler, FormField, TorusGeometry};
use super::trig::{TrigPoly, TrigVectorField};
use crate::error::{Error, Result};
use crate::tol::{INVERSE_MAX_ITER, INVERSE_TOL};

/// Displacements beyond this many periods count as blow-up.
const BLOWUP_PERIODS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Identity,
    Translation(Vec<f64>),
    /// x ↦ c; not a diffeomorphism, kept so domain checks can reject it.
    Constant(Vec<f64>),
    /// Time-`time` map of X_h, ι_X ω = dh, by `steps` RK4 steps.
    Flow { hamiltonian: TrigPoly, form: AnalyticKahler, time: f64, steps: usize },
    /// x ↦ x + t·v(x).
    Shear { field: TrigVectorField, t: f64 },
    /// Applied left to right: the first entry acts first.
    Compose(Vec<MapSpec>),
    Inverse(Box<MapSpec>),
}

/// The Hamiltonian vector field X = −W⁻¹∇h and its Jacobian.
fn hamiltonian_field(h: &TrigPoly, form: &AnalyticKahler, x: &[f64], xv: &mut [f64], dx: &mut [f64]) -> Result<()> {
    let d = form.dim();
    let mut grad = [0.0; MAXD];
    let mut hess = [0.0; MAXD * MAXD];
    h.jet2_into(x, &mut grad[..d], &mut hess[..d * d]);
    let w = form.matrix_at(x);
    let winv = linalg::inverse(d, &w).ok_or_else(|| Error::FlowBlowup("degenerate symplectic form".into()))?;
    linalg::mul_vec(d, &winv, &grad, xv);
    xv[..d].iter_mut().for_each(|v| *v = -*v);
    // DX[:, l] = −W⁻¹ (∂_l W) X − W⁻¹ Hess[:, l]
    let dw = form.matrix_derivatives_at(x);
    let mut col = [0.0; MAXD];
    let mut tmp = [0.0; MAXD];
    for l in 0..d {
        for r in 0..d {
            tmp[r] = hess[r * d + l] + if form.is_constant() { 0.0 } else { (0..d).map(|c| dw[l][r * d + c] * xv[c]).sum() };
        }
        linalg::mul_vec(d, &winv, &tmp, &mut col);
        for r in 0..d {
            dx[r * d + l] = -col[r];
        }
    }
    Ok(())
}

impl MapSpec {
    pub fn is_identity(&self) -> bool {
        matches!(self, MapSpec::Identity)
    }

    /// Forward value and Jacobian (row-major) at a point of the lift.
    pub fn apply(&self, d: usize, x: &[f64], y: &mut [f64], jac: &mut [f64]) -> Result<()> {
        match self {
            MapSpec::Identity => {
                y[..d].copy_from_slice(&x[..d]);
                jac[..d * d].copy_from_slice(&linalg::identity(d)[..d * d]);
            }
            MapSpec::Translation(s) => {
                for a in 0..d {
                    y[a] = x[a] + s[a];
                }
                jac[..d * d].copy_from_slice(&linalg::identity(d)[..d * d]);
            }
            MapSpec::Constant(c) => {
                y[..d].copy_from_slice(&c[..d]);
                jac[..d * d].iter_mut().for_each(|v| *v = 0.0);
            }
            MapSpec::Shear { field, t } => {
                let mut v = [0.0; MAXD];
                let mut dv = [0.0; MAXD * MAXD];
                field.eval_with_jacobian(x, &mut v[..d], &mut dv[..d * d]);
                let id = linalg::identity(d);
                for a in 0..d {
                    y[a] = x[a] + t * v[a];
                }
                for k in 0..d * d {
                    jac[k] = id[k] + t * dv[k];
                }
            }
            MapSpec::Flow { hamiltonian, form, time, steps } => {
                let steps = (*steps).max(1);
                let dt = time / steps as f64;
                let mut p = [0.0; MAXD];
                p[..d].copy_from_slice(&x[..d]);
                let mut j = linalg::identity(d);
                let mut kx = [[0.0; MAXD]; 4];
                let mut kj = [[0.0; MAXD * MAXD]; 4];
                let mut xv = [0.0; MAXD];
                let mut dx = [0.0; MAXD * MAXD];
                for _ in 0..steps {
                    for s in 0..4 {
                        let c = match s {
                            0 => 0.0,
                            1 | 2 => 0.5 * dt,
                            _ => dt,
                        };
                        let mut ps = [0.0; MAXD];
                        let mut js = [0.0; MAXD * MAXD];
                        for a in 0..d {
                            ps[a] = p[a] + if s == 0 { 0.0 } else { c * kx[s - 1][a] };
                        }
                        for k in 0..d * d {
                            js[k] = j[k] + if s == 0 { 0.0 } else { c * kj[s - 1][k] };
                        }
                        hamiltonian_field(hamiltonian, form, &ps[..d], &mut xv, &mut dx)?;
                        kx[s][..d].copy_from_slice(&xv[..d]);
                        let prod = linalg::mul(d, &dx, &js);
                        kj[s][..d * d].copy_from_slice(&prod[..d * d]);
                    }
                    for a in 0..d {
                        p[a] += dt / 6.0 * (kx[0][a] + 2.0 * kx[1][a] + 2.0 * kx[2][a] + kx[3][a]);
                    }
                    for k in 0..d * d {
                        j[k] += dt / 6.0 * (kj[0][k] + 2.0 * kj[1][k] + 2.0 * kj[2][k] + kj[3][k]);
                    }
                }
                let disp = (0..d).map(|a| (p[a] - x[a]).abs()).fold(0.0, f64::max);
                if !p[..d].iter().chain(&j[..d * d]).all(|v| v.is_finite()) || disp > BLOWUP_PERIODS * std::f64::consts::TAU {
                    return Err(Error::FlowBlowup(format!("displacement {disp:e} at x = {:?}", &x[..d])));
                }
                y[..d].copy_from_slice(&p[..d]);
                jac[..d * d].copy_from_slice(&j[..d * d]);
            }
            MapSpec::Compose(list) => {
                let mut cur = [0.0; MAXD];
                cur[..d].copy_from_slice(&x[..d]);
                let mut jc = linalg::identity(d);
                let mut next = [0.0; MAXD];
                let mut jn = [0.0; MAXD * MAXD];
                for m in list {
                    m.apply(d, &cur[..d], &mut next, &mut jn)?;
                    jc = linalg::mul(d, &jn, &jc);
                    cur = next;
                }
                y[..d].copy_from_slice(&cur[..d]);
                jac[..d * d].copy_from_slice(&jc[..d * d]);
            }
            MapSpec::Inverse(m) => {
                let mut guess = [0.0; MAXD];
                m.approx_inverse(d, x, &mut guess)?;
                let (z, jz) = m.solve_preimage(d, x, &guess)?;
                y[..d].copy_from_slice(&z[..d]);
                let inv = linalg::inverse(d, &jz).ok_or_else(|| Error::Inverse("singular Jacobian".into()))?;
                jac[..d * d].copy_from_slice(&inv[..d * d]);
            }
        }
        Ok(())
    }

    /// A cheap approximate inverse used to seed Newton.
    pub fn approx_inverse(&self, d: usize, y: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            MapSpec::Identity => out[..d].copy_from_slice(&y[..d]),
            MapSpec::Translation(s) => {
                for a in 0..d {
                    out[a] = y[a] - s[a];
                }
            }
            MapSpec::Constant(_) => return Err(Error::Inverse("constant map has no inverse".into())),
            MapSpec::Shear { field, t } => {
                let mut v = [0.0; MAXD];
                field.eval(y, &mut v[..d]);
                for a in 0..d {
                    out[a] = y[a] - t * v[a];
                }
            }
            MapSpec::Flow { hamiltonian, form, time, steps } => {
                let back = MapSpec::Flow { hamiltonian: hamiltonian.clone(), form: form.clone(), time: -time, steps: *steps };
                let mut j = [0.0; MAXD * MAXD];
                back.apply(d, y, out, &mut j)?;
            }
            MapSpec::Compose(list) => {
                let mut cur = [0.0; MAXD];
                cur[..d].copy_from_slice(&y[..d]);
                for m in list.iter().rev() {
                    let mut next = [0.0; MAXD];
                    m.approx_inverse(d, &cur[..d], &mut next)?;
                    cur = next;
                }
                out[..d].copy_from_slice(&cur[..d]);
            }
            MapSpec::Inverse(m) => {
                let mut j = [0.0; MAXD * MAXD];
                m.apply(d, y, out, &mut j)?;
            }
        }
        Ok(())
    }

    /// Damped Newton for self(z) = y from `guess`; returns z and Df(z).
    pub fn solve_preimage(&self, d: usize, y: &[f64], guess: &[f64]) -> Result<([f64; MAXD], Mat)> {
        let mut z = [0.0; MAXD];
        z[..d].copy_from_slice(&guess[..d]);
        let mut fz = [0.0; MAXD];
        let mut jz = [0.0; MAXD * MAXD];
        self.apply(d, &z[..d], &mut fz, &mut jz)?;
        let resid = |fz: &[f64]| (0..d).map(|a| (fz[a] - y[a]).abs()).fold(0.0, f64::max);
        let mut r = resid(&fz);
        for _ in 0..INVERSE_MAX_ITER {
            if r <= INVERSE_TOL {
                return Ok((z, jz));
            }
            let inv = linalg::inverse(d, &jz).ok_or_else(|| Error::Inverse("singular Jacobian".into()))?;
            let mut delta = [0.0; MAXD];
            let mut rv = [0.0; MAXD];
            for a in 0..d {
                rv[a] = fz[a] - y[a];
            }
            linalg::mul_vec(d, &inv, &rv, &mut delta);
            let mut lambda = 1.0;
            loop {
                let mut zn = z;
                for a in 0..d {
                    zn[a] -= lambda * delta[a];
                }
                let mut fzn = [0.0; MAXD];
                let mut jzn = [0.0; MAXD * MAXD];
                self.apply(d, &zn[..d], &mut fzn, &mut jzn)?;
                let rn = resid(&fzn);
                if rn < r || lambda < 1e-4 {
                    z = zn;
                    fz = fzn;
                    jz = jzn;
                    r = rn;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if r <= INVERSE_TOL {
            return Ok((z, jz));
        }
        Err(Error::Inverse(format!("residual {r:e} after {INVERSE_MAX_ITER} iterations at y = {:?}", &y[..d])))
    }
}

/// Values and Jacobians of `spec` at every node, in parallel over fixed
/// chunks; the first failing node in index order decides the error.
fn sample_nodes(geom: &TorusGeometry, spec: &MapSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    const CHUNK: usize = 256;
    let d = geom.dim();
    let len = geom.len();
    let mut values = vec![0.0; len * d];
    let mut jac = vec![0.0; len * d * d];
    let results: Vec<Result<()>> = values
        .par_chunks_mut(CHUNK * d)
        .zip(jac.par_chunks_mut(CHUNK * d * d))
        .enumerate()
        .map(|(c, (vals, jacs))| {
            let mut x = [0.0; MAXD];
            for (k, (v, j)) in vals.chunks_mut(d).zip(jacs.chunks_mut(d * d)).enumerate() {
                geom.grid.point(c * CHUNK + k, &mut x[..d]);
                spec.apply(d, &x[..d], v, j)?;
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<Result<()>>()?;
    Ok((values, jac))
}

/// A map sampled at the grid nodes of a torus.
#[derive(Debug)]
pub struct DiffeoField {
    pub geom: TorusGeometry,
    pub spec: MapSpec,
    /// f(x_i), node-major, on the lift.
    pub values: Vec<f64>,
    /// Df(x_i), row-major d×d per node.
    pub jac: Vec<f64>,
    inverse: OnceLock<std::result::Result<(Vec<f64>, Vec<f64>), Error>>,
}

impl Clone for DiffeoField {
    fn clone(&self) -> Self {
        let inverse = OnceLock::new();
        if let Some(v) = self.inverse.get() {
            let _ = inverse.set(v.clone());
        }
        DiffeoField { geom: self.geom.clone(), spec: self.spec.clone(), values: self.values.clone(), jac: self.jac.clone(), inverse }
    }
}

impl DiffeoField {
    pub fn new(geom: &TorusGeometry, spec: MapSpec) -> Result<Self> {
        let (values, jac) = sample_nodes(geom, &spec)?;
        Ok(DiffeoField { geom: geom.clone(), spec, values, jac, inverse: OnceLock::new() })
    }

    pub fn identity(geom: &TorusGeometry) -> Result<Self> {
        Self::new(geom, MapSpec::Identity)
    }

    pub fn hamiltonian_flow(geom: &TorusGeometry, h: &TrigPoly, form: &AnalyticKahler, time: f64, steps: usize) -> Result<Self> {
        if h.dim != geom.dim() || form.dim() != geom.dim() {
            return Err(Error::Dimension(h.dim, geom.dim()));
        }
        Self::new(geom, MapSpec::Flow { hamiltonian: h.clone(), form: form.clone(), time, steps })
    }

    pub fn dim(&self) -> usize {
        self.geom.dim()
    }

    pub fn value_at(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn jac_at(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.jac[i * d * d..(i + 1) * d * d]
    }

    /// f(x_i) − x_i.
    pub fn displacement(&self) -> Vec<f64> {
        let d = self.dim();
        let mut x = [0.0; MAXD];
        let mut out = self.values.clone();
        for i in 0..self.geom.len() {
            self.geom.grid.point(i, &mut x[..d]);
            for a in 0..d {
                out[i * d + a] -= x[a];
            }
        }
        out
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &DiffeoField) -> Result<DiffeoField> {
        DiffeoField::new(&self.geom, MapSpec::Compose(vec![inner.spec.clone(), self.spec.clone()]))
    }

    /// Preimages f⁻¹(y_i) and Jacobians D(f⁻¹)(y_i), computed once.
    pub fn inverse_nodes(&self) -> Result<(&[f64], &[f64])> {
        let res = self.inverse.get_or_init(|| sample_nodes(&self.geom, &MapSpec::Inverse(Box::new(self.spec.clone()))));
        match res {
            Ok((v, j)) => Ok((v.as_slice(), j.as_slice())),
            Err(e) => Err(e.clone()),
        }
    }

    pub fn inverse(&self) -> Result<DiffeoField> {
        let (v, j) = self.inverse_nodes()?;
        let inverse = OnceLock::new();
        let _ = inverse.set(Ok((self.values.clone(), self.jac.clone())));
        Ok(DiffeoField {
            geom: self.geom.clone(),
            spec: MapSpec::Inverse(Box::new(self.spec.clone())),
            values: v.to_vec(),
            jac: j.to_vec(),
            inverse,
        })
    }
}

fn pull_at(d: usize, jac: &[f64], w: &Mat, out: &mut [f64]) {
    linalg::congruence_form(d, jac, w, out);
}

/// f^*ω for an analytically given form: Dfᵀ W(f(x)) Df at every node.
pub fn pullback_analytic(form: &AnalyticKahler, f: &DiffeoField) -> FormField {
    pullback_points(f.dim(), &f.values, &f.jac, |y| form.matrix_at(y))
}

/// f^*β for grid data β; off-node values by trigonometric interpolation.
pub fn pullback_grid(beta: &FormField, f: &DiffeoField) -> FormField {
    pull_grid_points(beta, &f.geom, &f.values, &f.jac)
}

/// f_*ω = (f⁻¹)^*ω.
pub fn pushforward_analytic(form: &AnalyticKahler, f: &DiffeoField) -> Result<FormField> {
    let (v, j) = f.inverse_nodes()?;
    Ok(pullback_points(f.dim(), v, j, |y| form.matrix_at(y)))
}

pub fn pushforward_grid(beta: &FormField, f: &DiffeoField) -> Result<FormField> {
    let (v, j) = f.inverse_nodes()?;
    Ok(pull_grid_points(beta, &f.geom, v, j))
}

/// Pullback along arbitrary sample points and Jacobians.
pub fn pullback_points<F: Fn(&[f64]) -> Mat>(d: usize, points: &[f64], jacs: &[f64], eval: F) -> FormField {
    let c = d * (d - 1) / 2;
    let len = points.len() / d;
    let mut data = vec![0.0; len * c];
    for i in 0..len {
        let w = eval(&points[i * d..(i + 1) * d]);
        pull_at(d, &jacs[i * d * d..(i + 1) * d * d], &w, &mut data[i * c..(i + 1) * c]);
    }
    FormField { dim: d, data }
}

fn pull_grid_points(beta: &FormField, geom: &TorusGeometry, points: &[f64], jacs: &[f64]) -> FormField {
    let d = beta.dim;
    let c = beta.ncoef();
    let first = beta.at(0).to_vec();
    let constant = (0..beta.len()).all(|i| beta.at(i).iter().zip(&first).all(|(a, b)| a == b));
    if constant {
        let w = linalg::matrix_from_form(d, &first);
        return pullback_points(d, points, jacs, |_| w);
    }
    let interps: Vec<_> = (0..c)
        .map(|k| {
            let comp: Vec<f64> = (0..beta.len()).map(|i| beta.at(i)[k]).collect();
            geom.grid.interpolant(&comp)
        })
        .collect();
    pullback_points(d, points, jacs, |y| {
        let coeffs: Vec<f64> = interps.iter().map(|it| it.eval(y)).collect();
        linalg::matrix_from_form(d, &coeffs)
    })
}
