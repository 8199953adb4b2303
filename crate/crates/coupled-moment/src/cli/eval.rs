//! `cmm eval`: one quantity on the configured state, as a JSON body plus
//! optional per-node CSV dumps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::config::{Backend, EvalTarget, RunConfig, System};
use super::report::columns_csv;
use crate::error::{Error, Result};
use crate::functionals::{calabi, futaki, mabuchi, FunctionalReport, HolomorphicFieldData};
use crate::geometry::diffeo::{DiffeoField, MapSpec};
use crate::geometry::torus::{metric_from_potential, metric_from_potential_unchecked, AnalyticKahler, TorusGeometry};
use crate::geometry::trig::TrigVectorField;
use crate::moment::ccsck::{CoupledResidual, CoupledSystem};
use crate::moment::dhym::{coupled_dhym_residual, dhym_residual, phase_angle, CoupledDhymSystem, DhymData};
use crate::moment::graph::graph_mu_p;
use crate::moment::kym::{KymCoefficients, KymSystem};
use crate::moment::mu_p::{mu_p, MomentMapValue};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentNorms {
    pub l2: f64,
    pub linf: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub p_vector: Vec<usize>,
    pub constants: Vec<f64>,
    pub components: Vec<ComponentNorms>,
}

impl ResidualSummary {
    pub fn new(r: &CoupledResidual) -> Self {
        ResidualSummary {
            p_vector: r.p_vector.clone(),
            constants: r.constants.clone(),
            components: (0..r.components()).map(|i| ComponentNorms { l2: r.l2(i), linf: r.linf(i), integral: r.integral(i) }).collect(),
        }
    }

    pub fn max_linf(&self) -> f64 {
        self.components.iter().map(|c| c.linf).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySummary {
    pub integral: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    pub p: usize,
    pub prefactor: f64,
    pub c1: f64,
    pub c2: f64,
    pub x_density: DensitySummary,
    pub y_density: DensitySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KymSummary {
    pub coefficients: KymCoefficients,
    pub c: f64,
    pub d: f64,
    pub z: f64,
    pub alpha1_consistent: f64,
    pub alpha1_mismatch: f64,
    pub residual: ResidualSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DhymSummary {
    pub theta: f64,
    /// "closed-form" when θ is the angle of the base classes.
    pub theta_source: &'static str,
    pub max_abs_imaginary: f64,
    pub min_real_part: f64,
    pub coupled: ResidualSummary,
}

/// Body and CSV files (suffix, bytes) of one evaluation.
pub struct EvalOutput {
    pub body: Value,
    pub csv: Vec<(String, Vec<u8>)>,
}

fn value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn torus_only(cfg: &RunConfig, target: EvalTarget) -> Result<TorusGeometry> {
    if cfg.geometry.backend != Backend::Torus {
        return Err(Error::Usage(format!("eval {} needs the torus backend", target.name())));
    }
    cfg.torus_geometry()
}

fn two_components(cfg: &RunConfig, target: EvalTarget) -> Result<()> {
    if cfg.components() != 2 {
        return Err(Error::Usage(format!("eval {} needs exactly two components (one coupling entry)", target.name())));
    }
    Ok(())
}

fn summarize(geom: &TorusGeometry, m: &MomentMapValue) -> Result<MomentSummary> {
    let dens = |v: &[f64]| -> Result<DensitySummary> { Ok(DensitySummary { integral: geom.integrate(v)?, sup: v.iter().map(|x| x.abs()).fold(0.0, f64::max) }) };
    Ok(MomentSummary { p: m.p, prefactor: m.prefactor, c1: m.c1, c2: m.c2, x_density: dens(&m.x_density)?, y_density: dens(&m.y_density)? })
}

/// The map for `mu-p` and `graph`: a seeded shear x ↦ x + v(x).
fn random_map(cfg: &RunConfig, geom: &TorusGeometry) -> Result<DiffeoField> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.potential_seed());
    DiffeoField::new(geom, MapSpec::Shear { field: TrigVectorField::random(geom.dim(), &mut rng, 2, 1, cfg.eval.map_amplitude), t: 1.0 })
}

fn points(geom: &TorusGeometry) -> Vec<Vec<f64>> {
    geom.grid.points().chunks(geom.dim()).map(|c| c.to_vec()).collect()
}

fn functional<S: CoupledSystem>(sys: &S, target: EvalTarget, pots: &[Vec<f64>], cfg: &RunConfig, field: Option<HolomorphicFieldData>) -> Result<(FunctionalReport, Vec<(String, Vec<u8>)>)> {
    let mut csv = Vec::new();
    let report = match target {
        EvalTarget::Futaki => futaki(sys, pots, &field.expect("futaki needs a field"))?,
        EvalTarget::Calabi => calabi(sys, pots)?,
        _ => {
            let r = mabuchi(sys, pots)?;
            if cfg.eval.csv {
                let mut buf = Vec::new();
                r.write_trace_csv(&mut buf)?;
                csv.push(("trace".to_string(), buf));
            }
            r
        }
    };
    Ok((report, csv))
}

pub fn evaluate(cfg: &RunConfig, target: EvalTarget) -> Result<EvalOutput> {
    let want_csv = cfg.eval.csv;
    let mut csv = Vec::new();
    let body = match target {
        EvalTarget::Ccsck => {
            let sys = cfg.system()?;
            let pots = cfg.potentials(&sys)?;
            let res = match &sys {
                System::Torus(t) => t.residual(&pots)?,
                System::Toric(t) => t.residual(&pots)?,
            };
            if want_csv {
                for (i, coords) in cfg.coordinates(&sys).iter().enumerate() {
                    csv.push((format!("c{i}"), columns_csv(coords, &[("density", &res.densities[i]), ("scalar", &res.scalars[i])])?));
                }
            }
            value(&ResidualSummary::new(&res))?
        }
        EvalTarget::Futaki | EvalTarget::Calabi | EvalTarget::Mabuchi => {
            let sys = cfg.system()?;
            let pots = cfg.potentials(&sys)?;
            let lambda = cfg.eval.lambda;
            let (report, files) = match &sys {
                System::Torus(t) => {
                    // translations: constant Hamiltonians, so F vanishes identically
                    let field = HolomorphicFieldData::torus(t, vec![vec![lambda; t.geom.len()]; t.components()])?;
                    functional(t, target, &pots, cfg, Some(field))?
                }
                System::Toric(t) => functional(t, target, &pots, cfg, Some(HolomorphicFieldData::rotation(t, lambda)))?,
            };
            csv.extend(files);
            value(&report)?
        }
        EvalTarget::MuP | EvalTarget::Graph => {
            let geom = torus_only(cfg, target)?;
            two_components(cfg, target)?;
            let bases = cfg.bases()?;
            let (ox, oy) = (AnalyticKahler::flat(bases[0]), AnalyticKahler::flat(bases[1]));
            let f = random_map(cfg, &geom)?;
            let p = cfg.coupling.p[0];
            let m = if target == EvalTarget::MuP { mu_p(&geom, &ox, &oy, &f, p)? } else { graph_mu_p(&geom, &ox, &oy, &f, p)? };
            if want_csv {
                csv.push(("densities".to_string(), columns_csv(&points(&geom), &[("x_density", &m.x_density), ("y_density", &m.y_density)])?));
            }
            value(&summarize(&geom, &m)?)?
        }
        EvalTarget::Kym => {
            let geom = torus_only(cfg, target)?;
            two_components(cfg, target)?;
            let bases = cfg.bases()?;
            let pots = cfg.torus_potentials(&geom)?;
            let sys = KymSystem::new(geom, bases[0], bases[1])?;
            let e = &cfg.eval;
            let mut coeffs = KymCoefficients { alpha0: e.alpha0, alpha1: e.alpha1.unwrap_or(1.0), alpha2: e.alpha2 };
            let mut r = sys.residual(&pots[0], &pots[1], coeffs)?;
            if e.alpha1.is_none() {
                coeffs.alpha1 = r.alpha1_consistent;
                r = sys.residual(&pots[0], &pots[1], coeffs)?;
            }
            if want_csv {
                csv.push(("densities".to_string(), columns_csv(&points(&sys.geom), &[("r1", &r.residual.densities[0]), ("r2", &r.residual.densities[1])])?));
            }
            value(&KymSummary {
                coefficients: coeffs,
                c: r.c,
                d: r.d,
                z: r.z,
                alpha1_consistent: r.alpha1_consistent,
                alpha1_mismatch: r.alpha1_mismatch,
                residual: ResidualSummary::new(&r.residual),
            })?
        }
        EvalTarget::Dhym => {
            let geom = torus_only(cfg, target)?;
            two_components(cfg, target)?;
            let bases = cfg.dhym_bases()?;
            let pots = cfg.torus_potentials(&geom)?;
            let (theta, theta_source) = match cfg.eval.theta {
                Some(t) => (t, "config"),
                None => (phase_angle(&bases[0], &bases[1]), "closed-form"),
            };
            let omega = metric_from_potential(&geom, &bases[0], &pots[0], 0)?;
            let alpha = metric_from_potential_unchecked(&geom, &bases[1], &pots[1])?.form_field();
            let single = dhym_residual(&DhymData::new(omega, alpha, theta)?)?;
            let sys = CoupledDhymSystem { geom: geom.clone(), base_omega: bases[0], base_alpha: bases[1] };
            let coupled = coupled_dhym_residual(&sys, &pots[0], &pots[1], theta)?;
            if want_csv {
                csv.push(("densities".to_string(), columns_csv(&points(&geom), &[("imaginary", &single.imaginary), ("real_part", &single.real_part)])?));
            }
            value(&DhymSummary {
                theta,
                theta_source,
                max_abs_imaginary: single.max_abs_imaginary(),
                min_real_part: single.real_part.iter().copied().fold(f64::INFINITY, f64::min),
                coupled: ResidualSummary::new(&coupled),
            })?
        }
    };
    Ok(EvalOutput { body, csv })
}
