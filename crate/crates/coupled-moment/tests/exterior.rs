use coupled_moment::exterior::{binomial, check_interior_identity, factorial, mixed_top, AlternatingForm, TangentVector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn antisym(d: usize, rng: &mut ChaCha8Rng, shift: bool) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for j in 0..d {
        for k in j + 1..d {
            let v = 0.3 * rng.gen_range(-1.0..1.0) + if shift && k == j + 1 && j % 2 == 0 { 1.0 } else { 0.0 };
            m[j * d + k] = v;
            m[k * d + j] = -v;
        }
    }
    m
}

fn perm_sign(p: &[usize]) -> f64 {
    let mut s = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// top(ω₁∧…∧ω_n) = 2^{−n} Σ_σ sgn σ Π_l M_l[σ(2l), σ(2l+1)].
fn permutation_oracle(d: usize, mats: &[Vec<f64>]) -> f64 {
    let n = d / 2;
    permutations(d)
        .iter()
        .map(|s| perm_sign(s) * (0..n).map(|l| mats[l][s[2 * l] * d + s[2 * l + 1]]).product::<f64>())
        .sum::<f64>()
        / 2f64.powi(n as i32)
}

#[test]
fn wedge_matches_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2, 4, 6] {
        for _ in 0..5 {
            let mats: Vec<Vec<f64>> = (0..d / 2).map(|_| antisym(d, &mut rng, false)).collect();
            let forms: Vec<AlternatingForm> = mats.iter().map(|m| AlternatingForm::from_matrix(d, m).unwrap()).collect();
            let mut acc = AlternatingForm::one(d).unwrap();
            for f in &forms {
                acc = acc.wedge(f).unwrap();
            }
            let oracle = permutation_oracle(d, &mats);
            assert!((acc.top().unwrap() - oracle).abs() < 1e-12, "d = {d}");
            let slices: Vec<&[f64]> = forms.iter().map(|f| f.coeffs()).collect();
            assert!((mixed_top(d, &slices) - oracle).abs() < 1e-12, "mixed_top d = {d}");
        }
    }
}

#[test]
fn basis_counts() {
    assert_eq!(binomial(6, 3), 20);
    assert_eq!(factorial(5), 120.0);
    let f = AlternatingForm::basis_element(4, &[2, 0]).unwrap();
    assert_eq!(f.coeff(&[0, 2]).unwrap(), -1.0);
    assert!(AlternatingForm::basis_element(4, &[1, 1]).unwrap().max_abs() == 0.0);
}

/// The pointwise identity n ι_uα∧ι_vβ∧γ_p = −β(u,v) α∧γ_p as printed fails:
/// at p = 0 both sides agree up to an overall sign, and at p ≥ 1 they are
/// not proportional.
#[test]
fn interior_identity_counterexamples() {
    let d = 2;
    let w = AlternatingForm::standard_symplectic(1).unwrap();
    let u = TangentVector::basis(d, 0).unwrap();
    let v = TangentVector::basis(d, 1).unwrap();
    let r = check_interior_identity(&w, &w, &u, &v, 0).unwrap();
    assert_eq!((r.lhs, r.rhs), (1.0, -1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2usize, 3] {
        let d = 2 * n;
        let a = AlternatingForm::from_matrix(d, &antisym(d, &mut rng, true)).unwrap();
        let b = AlternatingForm::from_matrix(d, &antisym(d, &mut rng, true)).unwrap();
        for _ in 0..4 {
            let u = TangentVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let v = TangentVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            // p = 0 with β = α: lhs = +α(u,v) α^n, the opposite sign
            let r = check_interior_identity(&a, &a, &u, &v, 0).unwrap();
            assert!((r.lhs + r.rhs).abs() < 1e-12 * r.lhs.abs().max(1.0), "n = {n}");
        }
        let ratios: Vec<f64> = (0..6)
            .map(|_| {
                let u = TangentVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
                let v = TangentVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
                let r = check_interior_identity(&a, &b, &u, &v, 1).unwrap();
                r.lhs / r.rhs
            })
            .collect();
        let spread = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 1e-3, "p = 1 ratios {ratios:?} look proportional");
    }
}

#[test]
fn interior_identity_rejects_degenerate_data() {
    let z = AlternatingForm::zero(4, 2).unwrap();
    let u = TangentVector::basis(4, 0).unwrap();
    assert!(check_interior_identity(&z, &z, &u, &u, 0).is_err());
}

fn small_form(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d * (d - 1) / 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graded_commutativity(a in prop::collection::vec(-1.0f64..1.0, 4), b in small_form(4)) {
        let one = AlternatingForm::new(4, 1, a).unwrap();
        let two = AlternatingForm::new(4, 2, b).unwrap();
        let ab = one.wedge(&two).unwrap();
        let ba = two.wedge(&one).unwrap();
        prop_assert!(ab.try_sub(&ba).unwrap().max_abs() < 1e-14);
        let aa = one.wedge(&one).unwrap();
        prop_assert!(aa.max_abs() < 1e-14);
    }

    #[test]
    fn associativity(a in small_form(6), b in small_form(6), c in small_form(6)) {
        let (a, b, c) = (
            AlternatingForm::new(6, 2, a).unwrap(),
            AlternatingForm::new(6, 2, b).unwrap(),
            AlternatingForm::new(6, 2, c).unwrap(),
        );
        let l = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let r = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert!(l.try_sub(&r).unwrap().max_abs() < 1e-12);
    }

    /// top(ωⁿ)/n! is the Pfaffian, whose square is det M.
    #[test]
    fn power_is_pfaffian(c in small_form(6)) {
        let f = AlternatingForm::new(6, 2, c).unwrap();
        let m = f.to_matrix().unwrap();
        let pf = f.power(3).unwrap().top().unwrap() / factorial(3);
        let det = DMatrix::from_row_slice(6, 6, &m).determinant();
        prop_assert!((pf * pf - det).abs() < 1e-10 * (1.0 + det.abs()));
        let mut acc = AlternatingForm::one(6).unwrap();
        for _ in 0..3 {
            acc = acc.wedge(&f).unwrap();
        }
        prop_assert!((acc.top().unwrap() - pf * factorial(3)).abs() < 1e-12);
    }

    #[test]
    fn interior_is_an_antiderivation(a in small_form(4), b in small_form(4), u in prop::collection::vec(-1.0f64..1.0, 4)) {
        let (a, b) = (AlternatingForm::new(4, 2, a).unwrap(), AlternatingForm::new(4, 2, b).unwrap());
        let u = TangentVector::new(u).unwrap();
        let lhs = a.wedge(&b).unwrap().interior(&u).unwrap();
        let rhs = a.interior(&u).unwrap().wedge(&b).unwrap().try_add(&a.wedge(&b.interior(&u).unwrap()).unwrap()).unwrap();
        prop_assert!(lhs.try_sub(&rhs).unwrap().max_abs() < 1e-13);
    }
}
