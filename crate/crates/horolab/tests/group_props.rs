use horolab::homspace::{
    eval_testfn, haar_integral_quotient, translate, AutoBumpFactor, Factor, FactorizableTestFn, GElem, QuotientSampler,
};
use horolab::par;
use horolab::sl2::{
    coset_point, lattice_enumerate, make_a, make_k, make_n, make_u, moebius, reduce, IwasawaCoords, Mat2,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn sl2_from(x: f64, y: f64, theta: f64) -> Mat2 {
    make_n(x) * make_a(y).unwrap() * make_k(theta)
}

fn arb_sl2() -> impl Strategy<Value = Mat2> {
    (-3.0..3.0f64, 0.05..5.0f64, 0.0..std::f64::consts::TAU).prop_map(|(x, y, t)| sl2_from(x, y, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn multiplication_is_associative(g1 in arb_sl2(), g2 in arb_sl2(), g3 in arb_sl2()) {
        let l = (g1 * g2) * g3;
        let r = g1 * (g2 * g3);
        prop_assert!(l.max_diff(&r) <= 1e-12 * (1.0 + l.frob2()));
        prop_assert!((l.det() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diagonal_conjugates_lower_unipotent(y in 1e-4..1.0f64, w in -10.0..10.0f64) {
        let l = make_a(y).unwrap() * make_u(w);
        let r = make_u(w / y) * make_a(y).unwrap();
        prop_assert!(l.max_diff(&r) <= 1e-12 * (1.0 + r.frob()));
    }

    #[test]
    fn reduction_is_idempotent(g in arb_sl2()) {
        let red = reduce(&g).unwrap();
        prop_assert!(red.gamma.is_integral());
        prop_assert!((red.gamma.det() - 1.0).abs() < 1e-12);
        prop_assert!(red.z.re.abs() <= 0.5 + 1e-9 && red.z.norm() >= 1.0 - 1e-9);
        let again = reduce(&red.rep).unwrap();
        let id = Mat2::IDENTITY;
        prop_assert!(again.gamma == id || again.gamma == id.neg(), "{:?}", again.gamma);
    }

    #[test]
    fn moebius_is_a_left_action(g in arb_sl2(), h in arb_sl2(), x in -2.0..2.0f64, y in 0.1..3.0f64) {
        let z = Complex64::new(x, y);
        let lhs = moebius(&(g * h), z).unwrap();
        let rhs = moebius(&g, moebius(&h, z).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn translate_matches_factorwise_product(
        a in arb_sl2(), b in arb_sl2(), c in arb_sl2(), e in arb_sl2()
    ) {
        let g = GElem::new(vec![a, b]).unwrap();
        let h1 = GElem::new(vec![c, e]).unwrap();
        let h2 = GElem::new(vec![e, c]).unwrap();
        let step = translate(&translate(&g, &h1).unwrap(), &h2).unwrap();
        let joint = translate(&g, &GElem::new(vec![e * c, c * e]).unwrap()).unwrap();
        for j in 0..2 {
            let (s, t) = (step.factor(j), joint.factor(j));
            prop_assert!(s.max_diff(t) <= 1e-12 * (1.0 + s.frob2()));
        }
    }
}

fn brute_force(g: &Mat2, radius: f64) -> Vec<Mat2> {
    let bound = (g.inverse().frob() * radius).ceil() as i64 + 1;
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in -bound..=bound {
                for d in -bound..=bound {
                    if a * d - b * c != 1 {
                        continue;
                    }
                    let gamma = Mat2::integer(a, b, c, d).unwrap();
                    if (*g * gamma).frob2() <= r2 {
                        out.push(gamma);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn enumeration_matches_brute_force() {
    let points = [Mat2::IDENTITY, sl2_from(0.3, 1.4, 0.7), sl2_from(-0.45, 0.9, 2.0)];
    for g in &points {
        for r2 in [2.0, 3.0, 5.0, 10.0, 20.0] {
            let r = f64::sqrt(r2);
            let fast = lattice_enumerate(g, r).unwrap();
            let slow = brute_force(g, r);
            assert_eq!(fast.len(), slow.len(), "R²={r2}");
            for m in &slow {
                assert!(fast.contains(m), "missing {m:?} at R²={r2}");
            }
        }
    }
}

fn bump(x: f64, y: f64, r: f64) -> Factor {
    Factor::Bump(AutoBumpFactor::from_iwasawa(IwasawaCoords { x, y, theta: 0.3 }, r).unwrap())
}

#[test]
fn testfn_is_right_invariant() {
    let f = FactorizableTestFn::new(vec![bump(0.1, 1.1, 0.8), bump(-0.2, 1.5, 0.6)]).unwrap();
    let sampler = QuotientSampler::new(11, 2);
    let gammas = [
        Mat2::integer(1, 1, 0, 1).unwrap(),
        Mat2::integer(0, -1, 1, 0).unwrap(),
        Mat2::integer(2, 1, 1, 1).unwrap(),
        Mat2::integer(1, -3, 0, 1).unwrap(),
    ];
    for i in 0..400 {
        let p = sampler.point(i);
        let v = eval_testfn(&f, &p).unwrap();
        for gamma in &gammas {
            let moved = GElem::new(vec![*p.factor(0) * *gamma, *p.factor(1)]).unwrap();
            let w = eval_testfn(&f, &moved).unwrap();
            assert!((v - w).abs() < 1e-9, "{v} {w}");
        }
    }
}

#[test]
fn quotient_average_matches_unfolding() {
    let factors = [bump(0.0, 1.0, 0.8), bump(0.3, 1.6, 0.5), bump(-0.1, 1.2, 1.1)];
    let sampler = QuotientSampler::new(5, 1);
    let n = 1_000_000u64;
    for fac in &factors {
        let f = FactorizableTestFn::new(vec![fac.clone()]).unwrap();
        let s = par::sum_vec(n, 2, |i, acc| {
            let v = eval_testfn(&f, &sampler.point(i)).unwrap();
            acc[0] += v;
            acc[1] += v * v;
        });
        let mean = s[0] / n as f64;
        let se = ((s[1] / n as f64 - mean * mean) / (n - 1) as f64).sqrt();
        let exact = haar_integral_quotient(&f);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} {exact} {se}");
    }
}

#[test]
fn sampler_ignores_worker_count() {
    let sampler = QuotientSampler::new(9, 3);
    let one = par::with_workers(1, || sampler.sample(5000));
    let four = par::with_workers(4, || sampler.sample(5000));
    assert_eq!(one, four);
    assert!(one.iter().all(|g| {
        let z = coset_point(g.factor(0));
        z.re.abs() <= 0.5 && z.norm() >= 1.0
    }));
}
