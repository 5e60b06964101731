use horolab::equidist::{discrepancy_curve, translate_integral, SampleSchedule, TranslateExperiment};
use horolab::homspace::{AutoBumpFactor, Factor, FactorizableTestFn, GElem};
use horolab::par;
use horolab::poly::Poly;
use horolab::sl2::{make_a, make_n, IwasawaCoords};
use horolab::submanifold::{Density, PolyGraphMap, SurfaceMeasure};
use proptest::prelude::*;

fn parabola() -> SurfaceMeasure {
    let w = Poly::new(1, vec![(vec![2], 1.0)]).unwrap();
    SurfaceMeasure::new(PolyGraphMap::new(1, vec![w]).unwrap(), Density::bump(1, 1.0).unwrap()).unwrap()
}

fn bump_at_i(radius: f64) -> Factor {
    Factor::Bump(
        AutoBumpFactor::from_iwasawa(
            IwasawaCoords {
                x: 0.0,
                y: 1.0,
                theta: 0.0,
            },
            radius,
        )
        .unwrap(),
    )
}

fn headline(basepoint: GElem, schedule: SampleSchedule) -> TranslateExperiment {
    let f = FactorizableTestFn::new(vec![bump_at_i(0.8), bump_at_i(0.8)]).unwrap();
    let ys = (2..=12).map(|k| 0.5f64.powi(k)).collect();
    TranslateExperiment::new(parabola(), basepoint, f, ys, schedule, 2024).unwrap()
}

fn small(base: u64) -> SampleSchedule {
    SampleSchedule {
        base,
        cap: 1 << 18,
        replicates: 8,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaging_is_contractive(
        x in -0.5..0.5f64, y in 0.6..2.0f64, r in 0.3..1.2f64, k in 1..10i32, scale in 0.5..3.0f64
    ) {
        let fac = Factor::Bump(AutoBumpFactor::from_iwasawa(IwasawaCoords { x, y, theta: 0.0 }, r).unwrap());
        let f = FactorizableTestFn::new(vec![fac.clone(), fac]).unwrap().scaled(scale);
        let sup = scale;
        let t = 0.5f64.powi(k);
        let exp = TranslateExperiment::new(parabola(), GElem::identity(2), f, vec![t], small(32), 1).unwrap();
        let v = translate_integral(&exp, t).unwrap();
        prop_assert!(v.value.abs() <= sup + 3.0 * v.stderr);
    }
}

#[test]
fn identical_across_worker_counts() {
    let exp = headline(GElem::identity(2), small(64));
    let run = |w| par::with_workers(w, || discrepancy_curve(&exp).unwrap());
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    for (a, b) in one.values.iter().zip(&three.values) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn stderr_shrinks_with_budget() {
    let lo = headline(GElem::identity(2), small(64));
    let hi = lo.with_schedule(small(256));
    for &y in &lo.ys()[..8] {
        let a = translate_integral(&lo, y).unwrap();
        let b = translate_integral(&hi, y).unwrap();
        assert!(b.samples > a.samples);
        assert!(b.stderr < a.stderr, "y = {y}: {} then {}", a.stderr, b.stderr);
    }
}

#[test]
fn exponent_independent_of_basepoint() {
    let other = GElem::new(vec![
        make_n(0.3) * make_a(1.2).unwrap(),
        make_n(-0.2) * make_a(0.9).unwrap(),
    ])
    .unwrap();
    let a = discrepancy_curve(&headline(GElem::identity(2), SampleSchedule::default())).unwrap();
    let b = discrepancy_curve(&headline(other, SampleSchedule::default())).unwrap();
    let (fa, fb) = (a.fit.unwrap(), b.fit.unwrap());
    let slack = fa.ci_half_width().unwrap() + fb.ci_half_width().unwrap();
    assert!(
        (fa.exponent - fb.exponent).abs() < slack,
        "{} vs {} with slack {slack}",
        fa.exponent,
        fb.exponent
    );
}
