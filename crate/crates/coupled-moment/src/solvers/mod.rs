//! Zeros of the coupled residual: a preconditioned downhill flow for the
//! Mabuchi functional with a Calabi line search, automorphism gauge fixing,
//! and Newton refinement on the finite-difference linearization.
//!
//! The flow velocity in Kähler potentials is φ̇ = −P r with P the inverse
//! of the linearization at the reference state (the zero tuple). Since the
//! weighted linearization is symmetric positive there, dM(φ̇) ≤ 0 to first
//! order; `FlowKind::Plain` takes P = 1.

pub mod backend;
pub mod krylov;
pub mod spectrum;

use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

pub use backend::{Preconditioner, SolverBackend};
use backend::{axpy, flatten};

use crate::error::{Error, Result};
use crate::functionals::{mabuchi, segment_integral, PATH_QUADRATURE};
use crate::moment::ccsck::{CoupledResidual, CoupledSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Plain,
    Preconditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub max_iterations: usize,
    /// Stop when every residual scalar is below this in absolute value.
    pub tolerance: f64,
    /// Newton takes over below this L∞ residual.
    pub newton_switch: f64,
    pub step_initial: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Consecutive rejected trial steps before declaring divergence.
    pub max_rejections: usize,
    pub flow: FlowKind,
    pub gauge_fixing: bool,
    pub gmres_tolerance: f64,
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iterations: 200,
            tolerance: 1e-10,
            newton_switch: 1e-2,
            step_initial: 0.5,
            step_min: 1e-10,
            step_max: 1.0,
            max_rejections: 10,
            flow: FlowKind::Preconditioned,
            gauge_fixing: true,
            gmres_tolerance: 1e-10,
            gmres_restart: 40,
            gmres_max_iterations: 200,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerance", self.tolerance),
            ("newton_switch", self.newton_switch),
            ("step_initial", self.step_initial),
            ("step_min", self.step_min),
            ("step_max", self.step_max),
            ("gmres_tolerance", self.gmres_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.step_min <= self.step_initial && self.step_initial <= self.step_max) {
            return Err(Error::InvalidInput(format!(
                "step bounds must satisfy step_min ≤ step_initial ≤ step_max, got {} ≤ {} ≤ {}",
                self.step_min, self.step_initial, self.step_max
            )));
        }
        if self.max_iterations == 0 || self.max_rejections == 0 || self.gmres_restart == 0 || self.gmres_max_iterations == 0 {
            return Err(Error::InvalidInput("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Converged,
    Diverged,
    Stalled,
    NotKahler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    Flow,
    Gauge,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub phase: Phase,
    /// Accepted step length; 0 for the initial and gauge entries.
    pub step: f64,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub calabi: f64,
    pub mabuchi: f64,
    /// Trial steps rejected before this one was accepted.
    pub rejections: usize,
    /// Linear-solve iterations and relative residual for Newton entries.
    pub linear_iterations: usize,
    pub linear_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveState {
    pub potentials: Vec<Vec<f64>>,
    pub iteration: usize,
    pub step: f64,
    pub history: Vec<HistoryEntry>,
    pub status: Status,
    pub message: Option<String>,
    #[serde(skip)]
    residual: Option<CoupledResidual>,
    #[serde(skip)]
    error: Option<Error>,
}

impl SolveState {
    pub fn residual(&self) -> Option<&CoupledResidual> {
        self.residual.as_ref()
    }

    /// The error behind a non-converged status.
    pub fn error(&self) -> Option<&Error> {
        self.error.as_ref()
    }

    /// None only when the initial potentials could not be evaluated.
    pub fn last(&self) -> Option<&HistoryEntry> {
        self.history.last()
    }

    /// NaN when the history is empty, as are `calabi` and `mabuchi`.
    pub fn max_linf(&self) -> f64 {
        self.last().map_or(f64::NAN, |h| h.linf.iter().copied().fold(0.0, f64::max))
    }

    pub fn calabi(&self) -> f64 {
        self.last().map_or(f64::NAN, |h| h.calabi)
    }

    pub fn mabuchi(&self) -> f64 {
        self.last().map_or(f64::NAN, |h| h.mabuchi)
    }

    /// Largest per-step Mabuchi increase over flow and Newton steps.
    pub fn max_mabuchi_increase(&self) -> f64 {
        self.history
            .windows(2)
            .filter(|w| matches!(w[1].phase, Phase::Flow | Phase::Newton))
            .map(|w| w[1].mabuchi - w[0].mabuchi)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest per-step Calabi increase over accepted flow steps.
    pub fn max_calabi_increase(&self) -> f64 {
        self.history
            .windows(2)
            .filter(|w| w[1].phase == Phase::Flow)
            .map(|w| w[1].calabi - w[0].calabi)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn entry(iteration: usize, phase: Phase, step: f64, res: &CoupledResidual, mabuchi: f64) -> HistoryEntry {
    HistoryEntry {
        iteration,
        phase,
        step,
        l2: (0..res.components()).map(|i| res.l2(i)).collect(),
        linf: (0..res.components()).map(|i| res.linf(i)).collect(),
        calabi: res.calabi(),
        mabuchi,
        rejections: 0,
        linear_iterations: 0,
        linear_residual: 0.0,
    }
}

/// ∫ dM along the straight segment from `a` to `b`.
pub fn segment_mabuchi<S: CoupledSystem + ?Sized>(sys: &S, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    segment_integral(sys, a, b, PATH_QUADRATURE)
}

fn is_positivity_loss(e: &Error) -> bool {
    matches!(e, Error::NotKahler { .. } | Error::NotInCone { .. } | Error::Interpolation(_) | Error::DegenerateVolume { .. })
}

/// A system plus validated configuration; caches the reference
/// preconditioner.
pub struct Solver<'a, S: SolverBackend> {
    pub sys: &'a S,
    pub config: SolveConfig,
    pc: OnceCell<Preconditioner>,
}

impl<'a, S: SolverBackend> Solver<'a, S> {
    pub fn new(sys: &'a S, config: SolveConfig) -> Result<Self> {
        config.validate()?;
        Ok(Solver { sys, config, pc: OnceCell::new() })
    }

    fn preconditioner(&self) -> Result<&Preconditioner> {
        if let Some(pc) = self.pc.get() {
            return Ok(pc);
        }
        let pc = self.sys.build_preconditioner()?;
        Ok(self.pc.get_or_init(|| pc))
    }

    /// Evaluates the initial tuple; positivity failure is an error.
    pub fn start(&self, initial: Vec<Vec<f64>>) -> Result<SolveState> {
        let res = self.sys.residual(&initial)?;
        let m = mabuchi(self.sys, &initial)?.value;
        Ok(SolveState {
            history: vec![entry(0, Phase::Initial, 0.0, &res, m)],
            potentials: initial,
            iteration: 0,
            step: self.config.step_initial,
            status: Status::Running,
            message: None,
            residual: Some(res),
            error: None,
        })
    }

    fn current_residual(&self, state: &SolveState) -> Result<CoupledResidual> {
        match &state.residual {
            Some(r) => Ok(r.clone()),
            None => self.sys.residual(&state.potentials),
        }
    }

    /// Stored-potential flow direction for a step of length 1.
    fn flow_direction(&self, res: &CoupledResidual) -> Result<Vec<f64>> {
        let r = flatten(&res.scalars);
        Ok(match self.config.flow {
            // φ̇ = −r and φ̇ = sign·v̇
            FlowKind::Plain => r.iter().map(|v| -self.sys.potential_sign() * v).collect(),
            // P approximates (∂r/∂v)⁻¹, so this is already in stored units
            FlowKind::Preconditioned => self.sys.precondition(self.preconditioner()?, &r).into_iter().map(|v| -v).collect(),
        })
    }

    /// Backtracking from `state.step` until Calabi decreases; grows the
    /// step by 1.5 after an accepted first trial.
    fn line_search(&self, state: &SolveState, res: &CoupledResidual, dir: &[f64], phase: Phase, start: f64) -> Result<(SolveState, usize)> {
        let calabi0 = res.calabi();
        let mut tau = start;
        let mut rejections = 0;
        loop {
            if tau < self.config.step_min {
                return Err(Error::Stall(format!("step {tau:e} fell below {:e} at iteration {}", self.config.step_min, state.iteration)));
            }
            if rejections >= self.config.max_rejections {
                return Err(Error::Diverged(format!("{rejections} consecutive rejected steps at iteration {}", state.iteration)));
            }
            let trial = axpy(&state.potentials, tau, dir);
            match self.sys.residual(&trial) {
                Ok(tr) if tr.calabi() < calabi0 => {
                    let dm = segment_mabuchi(self.sys, &state.potentials, &trial)?;
                    let mut e = entry(state.iteration + 1, phase, tau, &tr, state.mabuchi() + dm);
                    e.rejections = rejections;
                    let mut next = state.clone();
                    next.history.push(e);
                    next.potentials = trial;
                    next.iteration += 1;
                    next.residual = Some(tr);
                    if phase == Phase::Flow {
                        next.step = if rejections == 0 { (tau * 1.5).min(self.config.step_max) } else { tau };
                    }
                    return Ok((next, rejections));
                }
                Ok(_) => {}
                Err(e) if is_positivity_loss(&e) => {}
                Err(e) => return Err(e),
            }
            rejections += 1;
            tau *= 0.5;
        }
    }

    /// One explicit flow step with Calabi backtracking. At a solution the
    /// update is zero.
    pub fn flow_step(&self, state: &SolveState) -> Result<SolveState> {
        let res = self.current_residual(state)?;
        if res.max_linf() == 0.0 {
            return Ok(state.clone());
        }
        let dir = self.flow_direction(&res)?;
        Ok(self.line_search(state, &res, &dir, Phase::Flow, state.step)?.0)
    }

    /// One damped Newton step on all potentials jointly. Requires the
    /// automorphism gauge to be fixed.
    pub fn newton_refine(&self, state: &SolveState) -> Result<SolveState> {
        let defect = self.sys.gauge_defect(&state.potentials);
        if defect > GAUGE_TOL {
            return Err(Error::GaugeNotFixed(format!("gauge defect {defect:e}; fix the automorphism gauge before Newton")));
        }
        let res = self.current_residual(state)?;
        if res.max_linf() == 0.0 {
            return Ok(state.clone());
        }
        let (dir, info) = self.sys.newton_direction(&state.potentials, &res, self.preconditioner()?, &self.config)?;
        let (mut next, _) = self.line_search(state, &res, &dir, Phase::Newton, 1.0)?;
        let e = next.history.last_mut().expect("line search pushes an entry");
        e.linear_iterations = info.iterations;
        e.linear_residual = info.relative_residual;
        Ok(next)
    }

    pub fn fix_automorphism_gauge(&self, state: &SolveState) -> Result<SolveState> {
        let fixed = self.sys.fix_gauge(&state.potentials);
        let res = self.sys.residual(&fixed)?;
        let dm = segment_mabuchi(self.sys, &state.potentials, &fixed)?;
        let mut next = state.clone();
        next.history.push(entry(state.iteration, Phase::Gauge, 0.0, &res, state.mabuchi() + dm));
        next.potentials = fixed;
        next.residual = Some(res);
        Ok(next)
    }

    /// Flow until the switch-over, gauge fix, Newton to tolerance. Failures
    /// are recorded in the returned state's status.
    pub fn run(&self, initial: Vec<Vec<f64>>) -> SolveState {
        let mut state = match self.start(initial.clone()) {
            Ok(s) => s,
            Err(e) => {
                let empty = SolveState {
                    potentials: initial,
                    iteration: 0,
                    step: self.config.step_initial,
                    history: Vec::new(),
                    status: Status::Running,
                    message: None,
                    residual: None,
                    error: None,
                };
                return fail(empty, e);
            }
        };
        loop {
            if state.max_linf() < self.config.tolerance {
                if self.config.gauge_fixing && self.sys.gauge_defect(&state.potentials) > GAUGE_TOL {
                    match self.fix_automorphism_gauge(&state) {
                        Ok(s) => state = s,
                        Err(e) => return fail(state, e),
                    }
                }
                state.status = Status::Converged;
                return state;
            }
            if state.iteration >= self.config.max_iterations {
                let msg = format!("no convergence in {} iterations (L∞ {:e})", state.iteration, state.max_linf());
                return fail(state, Error::Diverged(msg));
            }
            let step = if state.max_linf() < self.config.newton_switch {
                let gauged = if self.sys.gauge_defect(&state.potentials) > GAUGE_TOL {
                    if !self.config.gauge_fixing {
                        return fail(state, Error::GaugeNotFixed("gauge fixing is disabled".into()));
                    }
                    self.fix_automorphism_gauge(&state)
                } else {
                    Ok(state.clone())
                };
                // a failed Newton step falls back to the flow
                gauged.and_then(|g| self.newton_refine(&g).or_else(|_| self.flow_step(&g)))
            } else {
                self.flow_step(&state)
            };
            match step {
                Ok(s) => state = s,
                Err(e) => return fail(state, e),
            }
        }
    }

    pub fn solve(&self, initial: Vec<Vec<f64>>) -> Result<SolveState> {
        let state = self.run(initial);
        match state.status {
            Status::Converged => Ok(state),
            _ => Err(state.error.unwrap_or_else(|| Error::Diverged("solver stopped without converging".into()))),
        }
    }
}

/// Gauge conditions count as satisfied below this.
pub const GAUGE_TOL: f64 = 1e-9;

fn fail(mut state: SolveState, e: Error) -> SolveState {
    state.status = match &e {
        Error::Stall(_) => Status::Stalled,
        e if is_positivity_loss(e) => Status::NotKahler,
        _ => Status::Diverged,
    };
    state.message = Some(e.to_string());
    state.error = Some(e);
    state
}

pub fn flow_step<S: SolverBackend>(sys: &S, state: &SolveState, config: &SolveConfig) -> Result<SolveState> {
    Solver::new(sys, config.clone())?.flow_step(state)
}

pub fn newton_refine<S: SolverBackend>(sys: &S, state: &SolveState, config: &SolveConfig) -> Result<SolveState> {
    Solver::new(sys, config.clone())?.newton_refine(state)
}

pub fn fix_automorphism_gauge<S: SolverBackend>(sys: &S, state: &SolveState) -> Result<SolveState> {
    Solver::new(sys, SolveConfig::default())?.fix_automorphism_gauge(state)
}

pub fn solve<S: SolverBackend>(sys: &S, initial: Vec<Vec<f64>>, config: &SolveConfig) -> Result<SolveState> {
    Solver::new(sys, config.clone())?.solve(initial)
}
