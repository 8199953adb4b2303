//! Run invariant suites in-process at a reduced scale and print every check.
//! Suite names may be given as arguments; the fast ones run by default.

use coupled_moment::cli::suites::{run, Suite, VerifyConfig};

fn main() {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let wanted: Vec<Suite> = if names.is_empty() {
        vec![Suite::Futaki, Suite::Mabuchi, Suite::Duality]
    } else {
        Suite::ALL.iter().copied().filter(|s| names.iter().any(|n| n == s.name())).collect()
    };
    let cfg = VerifyConfig { instances: Some(100), ..VerifyConfig::default() };
    for s in wanted {
        let rep = run(s, &cfg, 1).unwrap();
        for c in &rep.checks {
            let tag = if !c.gating { "diag" } else if c.passed { "PASS" } else { "FAIL" };
            println!("{tag} {} | {}: {:.3e} (tolerance {:.1e})", s.name(), c.name, c.measured, c.tolerance);
        }
    }
}
