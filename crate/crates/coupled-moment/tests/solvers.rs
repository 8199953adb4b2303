use coupled_moment::geometry::torus::{Hermitian, TorusGeometry};
use coupled_moment::moment::ccsck::{CoupledSystem, CouplingSpec, ToricSystem, TorusSystem};
use coupled_moment::solvers::spectrum::{flat_spectrum, mode_rates};
use coupled_moment::solvers::{FlowKind, Phase, SolveConfig, Solver, SolverBackend, Status};
use coupled_moment::Error;

fn torus(side: usize, weight: f64) -> TorusSystem {
    let geom = TorusGeometry::new(1, side).unwrap();
    TorusSystem::new(geom, vec![Hermitian::identity(1); 2], CouplingSpec::new(vec![0], vec![weight]).unwrap()).unwrap()
}

fn cp1(nodes: usize) -> ToricSystem {
    ToricSystem::new(&[2.0, 2.0], nodes, CouplingSpec::new(vec![0], vec![1.0]).unwrap()).unwrap()
}

fn sup(p: &[Vec<f64>]) -> f64 {
    p.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Hand linearization at the flat state with unit bases, p = 0 and weight a,
/// on cos(ξ·x) with κ = |ξ|²: δr₀ = (κ²/4 + aκ/2)φ₀ − (aκ/2)φ₁ and
/// δr₁ = (κ/2)(φ₁ − φ₀).
#[test]
fn linearized_flow_damps_each_mode() {
    let a = 0.5;
    let sys = torus(16, a);
    let symbol = sys.impulse_symbol(&sys.zero_potentials()).unwrap();
    for xi in [[1i64, 0], [0, 1], [1, 1], [2, -1], [3, 2]] {
        let m = mode_rates(&sys, &xi).unwrap();
        let kappa = (xi[0] * xi[0] + xi[1] * xi[1]) as f64;
        let oracle = [[kappa * kappa / 4.0 + a * kappa / 2.0, -a * kappa / 2.0], [-kappa / 2.0, kappa / 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                let scale = oracle[i][j].abs().max(1.0);
                assert!((m.block[i][j] - oracle[i][j]).abs() < 1e-6 * scale, "ξ = {xi:?} ({i},{j}): {} vs {}", m.block[i][j], oracle[i][j]);
            }
        }
        assert!(m.leakage < 1e-8, "ξ = {xi:?} leakage {}", m.leakage);
        assert!(m.rates.iter().all(|r| *r < 0.0), "ξ = {xi:?} rates {:?}", m.rates);
        // same block from the impulse assembly
        let idx = xi.iter().map(|&k| k.rem_euclid(16) as usize).fold(0, |acc, k| acc * 16 + k);
        for i in 0..2 {
            for j in 0..2 {
                let z = symbol[idx][(i, j)];
                assert!((z.re - m.block[i][j]).abs() < 1e-5 * m.block[i][j].abs().max(1.0) && z.im.abs() < 1e-6, "ξ = {xi:?}");
            }
        }
    }
}

#[test]
fn flat_torus_flow_spectrum_is_nonpositive() {
    let sys = torus(16, 1.0);
    let rep = flat_spectrum(&sys, 300, 7).unwrap();
    assert!(rep.max_rate < 0.0, "{rep:?}");
    assert_eq!(rep.kernel_dimension, 2, "{rep:?}");
    assert!(rep.largest_imaginary_part < 1e-6 * rep.min_rate_blocks.abs());
    assert!((rep.min_rate_power - rep.min_rate_blocks).abs() < 1e-2 * rep.min_rate_blocks.abs(), "{rep:?}");
    assert!((rep.slowest_rate_power - rep.slowest_rate_blocks).abs() < 1e-6 * rep.slowest_rate_blocks.abs(), "{rep:?}");
}

#[test]
fn flat_torus_solve_converges_to_zero() {
    let sys = torus(32, 1.0);
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let st = solver.solve(sys.random_potentials(1, 0.05)).unwrap();
    assert_eq!(st.status, Status::Converged);
    assert!(st.max_linf() < 1e-8);
    assert!(st.iteration <= 200);
    assert!(sup(&st.potentials) < 1e-8, "{}", sup(&st.potentials));
    assert!(st.max_calabi_increase() <= 0.0);
    assert!(st.max_mabuchi_increase() <= 1e-10);
    let res = st.residual().unwrap();
    for i in 0..2 {
        assert!(res.integral(i).abs() < 1e-12);
    }
}

/// Errors e_k = L∞ residual after k Newton steps from a small perturbation.
/// The first step is preasymptotic; log(e₃/e₂)/log(e₂/e₁) estimates the order.
#[test]
fn newton_converges_quadratically_on_the_torus() {
    let sys = torus(32, 1.0);
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let init = sys.fix_gauge(&sys.random_potentials(3, 0.01));
    let mut st = solver.start(init).unwrap();
    let mut errs = vec![st.max_linf()];
    for _ in 0..3 {
        st = solver.newton_refine(&st).unwrap();
        errs.push(st.max_linf());
    }
    let order = (errs[3] / errs[2]).ln() / (errs[2] / errs[1]).ln();
    assert!(errs[3] < 1e-7, "errors {errs:?}");
    assert!(order > 1.7, "errors {errs:?}, order {order}");
    // at the solution Newton is a no-op
    let done = solver.start(sys.zero_potentials()).unwrap();
    assert_eq!(solver.newton_refine(&done).unwrap().potentials, done.potentials);
    assert_eq!(solver.flow_step(&done).unwrap().potentials, done.potentials);
}

#[test]
fn coupled_kahler_einstein_on_cp1_is_fubini_study() {
    let sys = cp1(32);
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let a = solver.solve(sys.random_potentials(1, 0.05)).unwrap();
    let b = solver.solve(sys.random_potentials(2, 0.05)).unwrap();
    assert!(sup(&a.potentials) < 1e-6, "sup |u − u_FS| = {}", sup(&a.potentials));
    assert!(sup_diff(&a.potentials, &b.potentials) < 1e-6);
    for st in [&a, &b] {
        assert!(st.max_mabuchi_increase() <= 1e-10);
        // Calabi strictly decreases per accepted flow step
        for w in st.history.windows(2).filter(|w| w[1].phase == Phase::Flow) {
            assert!(w[1].calabi < w[0].calabi);
        }
    }
}

#[test]
fn solve_is_invariant_under_automorphisms() {
    let sys = cp1(32);
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let init = sys.random_potentials(4, 0.04);
    let moved = sys.apply_automorphism(&init, &[0.3]);
    let a = solver.solve(init).unwrap();
    let b = solver.solve(moved).unwrap();
    assert!(sup_diff(&a.potentials, &b.potentials) < 1e-6);

    let t = torus(16, 1.0);
    let solver = Solver::new(&t, SolveConfig::default()).unwrap();
    let init = t.random_potentials(5, 0.05);
    let moved = t.apply_automorphism(&init, &[0.7, -1.1]);
    let a = solver.solve(init).unwrap();
    let b = solver.solve(moved).unwrap();
    assert!(sup_diff(&a.potentials, &b.potentials) < 1e-6);
}

#[test]
fn gauge_fixing_normalizes_automorphism_orbits() {
    let sys = cp1(24);
    let zero = sys.zero_potentials();
    assert_eq!(sys.fix_gauge(&zero), zero);
    let st = sys.random_potentials(6, 0.05);
    let fixed = sys.fix_gauge(&st);
    assert!(sys.gauge_defect(&fixed) < 1e-12);
    let moved = sys.fix_gauge(&sys.apply_automorphism(&st, &[-0.8]));
    assert!(sup_diff(&fixed, &moved) < 1e-8);
    // the automorphism maps back to the reference normalization
    assert!(sup(&sys.fix_gauge(&sys.apply_automorphism(&zero, &[0.5]))) < 1e-8);

    // the torus gauge reads the phase of the first harmonic along each axis
    let t = torus(16, 1.0);
    let pts = t.geom.grid.points();
    let mut st = t.random_potentials(7, 0.05);
    for (v, x) in st[0].iter_mut().zip(pts.chunks(2)) {
        *v += 0.02 * ((x[0] - 0.3).cos() + (x[1] + 0.5).cos());
    }
    let shifted: Vec<Vec<f64>> = t.apply_automorphism(&st, &[0.4, 2.0]).into_iter().map(|p| p.into_iter().map(|v| v + 3.0).collect()).collect();
    assert!(sup_diff(&t.fix_gauge(&st), &t.fix_gauge(&shifted)) < 1e-8);
}

#[test]
fn newton_requires_the_rotation_gauge() {
    let sys = cp1(24);
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let st = solver.start(sys.apply_automorphism(&sys.zero_potentials(), &[0.2])).unwrap();
    assert!(matches!(solver.newton_refine(&st), Err(Error::GaugeNotFixed(_))));
    let fixed = solver.fix_automorphism_gauge(&st).unwrap();
    assert!(solver.newton_refine(&fixed).is_ok());
}

#[test]
fn failures_are_classified() {
    let sys = cp1(24);
    let solver = Solver::new(&sys, SolveConfig::default()).unwrap();
    let st = solver.run(sys.random_potentials(1, 5.0));
    assert_eq!(st.status, Status::NotKahler, "{:?}", st.message);
    assert!(matches!(solver.solve(sys.random_potentials(1, 5.0)), Err(Error::NotKahler { .. })));

    let short = Solver::new(&sys, SolveConfig { max_iterations: 1, ..SolveConfig::default() }).unwrap();
    let st = short.run(sys.random_potentials(1, 0.05));
    assert_eq!(st.status, Status::Diverged);

    // an unpreconditioned unit step on the stiff torus flow is always rejected
    let t = torus(16, 1.0);
    let rigid = SolveConfig { flow: FlowKind::Plain, step_initial: 1.0, step_min: 1.0, step_max: 1.0, ..SolveConfig::default() };
    let st = Solver::new(&t, rigid).unwrap().run(t.random_potentials(1, 0.05));
    assert_eq!(st.status, Status::Stalled, "{:?}", st.message);
}

#[test]
fn config_validation() {
    assert!(SolveConfig::default().validate().is_ok());
    assert!(SolveConfig { tolerance: -1.0, ..SolveConfig::default() }.validate().is_err());
    assert!(SolveConfig { step_min: 2.0, ..SolveConfig::default() }.validate().is_err());
    assert!(SolveConfig { step_initial: 5.0, ..SolveConfig::default() }.validate().is_err());
    let parsed: SolveConfig = toml::from_str("tolerance = 1e-9\nflow = \"plain\"").unwrap();
    assert_eq!(parsed.tolerance, 1e-9);
    assert_eq!(parsed.flow, FlowKind::Plain);
    assert!(toml::from_str::<SolveConfig>("tolerence = 1e-9").is_err());
}
