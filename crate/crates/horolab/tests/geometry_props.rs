use horolab::curvature::{analytic_diagonalize, char_poly_coeffs, e_star, PhiFamily, SphereSearch};
use horolab::linalg::{det, SymMatrix};
use horolab::poly::Poly;
use horolab::submanifold::{integrate_against, Density, PolyGraphMap, QmcConfig, SurfaceMeasure};
use num_complex::Complex64;
use proptest::prelude::*;

fn p(m: usize, terms: &[(&[u32], f64)]) -> Poly {
    Poly::new(m, terms.iter().map(|(e, c)| (e.to_vec(), *c)).collect()).unwrap()
}

fn arb_sym(max_dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| {
            (0..n)
                .map(|i| (0..n).map(|j| 0.5 * (v[i * n + j] + v[j * n + i])).collect())
                .collect()
        })
    })
}

/// `det(s I - H)` at `s`, from a brute-force determinant.
fn char_at(h: &[Vec<f64>], s: f64) -> f64 {
    let n = h.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { s - h[i][j] } else { -h[i][j] }).collect())
        .collect();
    det(&rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn char_poly_matches_determinant(rows in arb_sym(4), s in -2.0..2.0f64) {
        let h = SymMatrix::from_rows(&rows, 1e-12).unwrap();
        let c = char_poly_coeffs(&h);
        let n = rows.len();
        // Σ_j s_j λ^j with leading coefficient one
        let mut val = s.powi(n as i32);
        for (j, cj) in c.s.iter().enumerate().take(n) {
            val += cj * s.powi(j as i32);
        }
        let brute = char_at(&rows, s);
        let scale = 1.0 + rows.iter().flatten().map(|x| x.abs()).sum::<f64>().powi(n as i32);
        prop_assert!((val - brute).abs() <= 1e-9 * scale, "{val} {brute}");
    }

    #[test]
    fn gram_factor_at_least_one(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, t0 in -0.99..0.99f64, t1 in -0.99..0.99f64) {
        let map = PolyGraphMap::new(2, vec![
            p(2, &[(&[2, 0], a), (&[1, 1], b)]),
            p(2, &[(&[0, 3], c), (&[1, 0], 1.0)]),
        ]).unwrap();
        prop_assert!(map.gram_factor(&[t0, t1]) >= 1.0);
    }

    #[test]
    fn derivative_tables_match_finite_differences(
        coef in prop::collection::vec(-2.0..2.0f64, 4), t0 in -0.9..0.9f64, t1 in -0.9..0.9f64
    ) {
        let w = p(2, &[(&[2, 1], coef[0]), (&[0, 3], coef[1]), (&[1, 1], coef[2]), (&[1, 0], coef[3])]);
        let map = PolyGraphMap::new(2, vec![w.clone()]).unwrap();
        let t = [t0, t1];
        let h = 1e-4;
        for i in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[i] += h;
            tm[i] -= h;
            let fd = (w.eval(&tp) - w.eval(&tm)) / (2.0 * h);
            let exact = map.dw(0, i).eval(&t);
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
            for j in 0..2 {
                let fd2 = (map.dw(0, j).eval(&tp) - map.dw(0, j).eval(&tm)) / (2.0 * h);
                let exact2 = map.d2w(0, i, j).eval(&t);
                prop_assert!((fd2 - exact2).abs() <= 1e-6 * (1.0 + exact2.abs()));
            }
        }
    }

    #[test]
    fn diagonalization_near_identity(
        lam in prop::collection::vec(0.5..3.0f64, 3),
        coef in prop::collection::vec(-1.0..1.0f64, 6),
        x in prop::collection::vec(-0.5..0.5f64, 3),
        log_delta in -3.0..-1.0f64,
    ) {
        let delta = 10f64.powf(log_delta);
        let mut k = 0;
        let entries = (0..3)
            .map(|i| {
                (i..3)
                    .map(|_| {
                        let c = coef[k];
                        k += 1;
                        p(3, &[(&[0, 0, 0], c), (&[1, 0, 0], 0.5 * c), (&[0, 1, 1], 0.3)])
                    })
                    .collect()
            })
            .collect();
        let phi = PhiFamily::new(3, entries).unwrap();
        let r = analytic_diagonalize(&lam, &phi, delta, &x).unwrap();
        prop_assert!(r.residual < 1e-10);
        prop_assert!((r.jacobian_det - 1.0).abs() <= 5.0 * delta, "{} {}", r.jacobian_det, delta);
    }
}

#[test]
fn e_star_is_homogeneous() {
    let search = SphereSearch::default();
    let maps = [
        PolyGraphMap::new(2, vec![p(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])]).unwrap(),
        PolyGraphMap::new(2, vec![p(2, &[(&[2, 0], 1.0), (&[0, 2], -0.5), (&[1, 1], 0.3)])]).unwrap(),
        PolyGraphMap::new(
            2,
            vec![p(2, &[(&[2, 0], 1.0)]), p(2, &[(&[0, 2], 1.0), (&[1, 1], 0.5)])],
        )
        .unwrap(),
    ];
    for map in &maps {
        for t in [[0.0, 0.0], [0.3, -0.4]] {
            let base = e_star(map, &t, &search).unwrap().value;
            for c in [2.0, 10.0] {
                let scaled = e_star(&map.scaled(c), &t, &search).unwrap().value;
                assert!((scaled - c * base).abs() <= 1e-6 * (1.0 + c * base), "{scaled} {base}");
            }
            let neg = e_star(&map.scaled(-1.0), &t, &search).unwrap().value;
            assert!((neg - base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}

#[test]
fn doubling_samples_stays_within_error_bound() {
    let corpus = [
        PolyGraphMap::new(1, vec![p(1, &[(&[2], 1.0)])]).unwrap(),
        PolyGraphMap::new(2, vec![p(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])]).unwrap(),
        PolyGraphMap::new(2, vec![p(2, &[(&[2, 0], 1.0), (&[0, 2], -1.0)])]).unwrap(),
    ];
    for map in corpus {
        let m = map.m();
        let mu = SurfaceMeasure::new(map, Density::bump(m, 1.0).unwrap()).unwrap();
        let g = |x: &[f64]| Complex64::new((3.0 * x[0]).cos() + x[x.len() - 1].powi(2), 0.0);
        let cfg = QmcConfig {
            points: 1 << 16,
            replicates: 8,
            seed: 4,
        };
        let a = integrate_against(&mu, g, &cfg).unwrap();
        let b = integrate_against(&mu, g, &QmcConfig { points: 1 << 17, ..cfg }).unwrap();
        assert!(
            (a.value - b.value).norm() < a.error_bound(),
            "{} {} {}",
            a.value,
            b.value,
            a.error_bound()
        );
    }
}
