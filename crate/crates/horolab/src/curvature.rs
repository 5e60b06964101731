//! Curvature certificates for polynomial graphs.

use crate::error::{domain, Error, Result};
use crate::fit::{line, LineFit};
use crate::linalg::{det, jacobi_eigenvalues, SymMatrix};
use crate::policy::NumericPolicy;
use crate::poly::Poly;
use crate::qmc::ScrambledHalton;
use crate::rng::Substream;
use crate::submanifold::PolyGraphMap;
use std::f64::consts::PI;

/// Coefficients of `det(λI - H) = λ^m + s[m-1] λ^{m-1} + … + s[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyCoeffs {
    pub s: Vec<f64>,
}

/// Characteristic polynomial by Newton's identities on power traces.
pub fn char_poly_coeffs(h: &SymMatrix) -> CharPolyCoeffs {
    let m = h.dim();
    // p[k] = tr(H^k)
    let mut p = vec![0.0; m + 1];
    let mut power = SymMatrix::identity(m);
    for pk in p.iter_mut().skip(1) {
        let next = power.matmul(h);
        *pk = (0..m).map(|i| next[i * m + i]).sum();
        power = SymMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                // powers of a symmetric matrix are symmetric
                if j >= i {
                    power.set(i, j, 0.5 * (next[i * m + j] + next[j * m + i]));
                }
            }
        }
    }
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for k in 1..=m {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i];
        }
        e[k] = acc / k as f64;
    }
    let s = (0..m)
        .map(|j| {
            let k = m - j;
            if k.is_multiple_of(2) {
                e[k]
            } else {
                -e[k]
            }
        })
        .collect();
    CharPolyCoeffs { s }
}

/// Absolute eigenvalues in ascending order.
pub fn eigen_abs_sorted(h: &SymMatrix) -> Result<Vec<f64>> {
    let p = NumericPolicy::DEFAULT;
    let mut v: Vec<f64> = jacobi_eigenvalues(h, p.jacobi_offdiag, p.jacobi_max_sweeps)?
        .into_iter()
        .map(f64::abs)
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Grid-then-descent minimization over the unit sphere of `R^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSearch {
    /// Minimum number of coarse grid points.
    pub grid_points: usize,
    /// Refinement stops once the step falls below this.
    pub min_step: f64,
    pub max_iters: usize,
}

impl Default for SphereSearch {
    fn default() -> Self {
        SphereSearch {
            grid_points: 2000,
            min_step: 1e-11,
            max_iters: 10_000,
        }
    }
}

/// Best value found; an upper bound for the infimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMin {
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Best value on the coarse grid before refinement.
    pub grid_value: f64,
    pub grid_points: usize,
    /// Refinement moved the minimum by more than 10 %.
    pub flagged: bool,
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Even-symmetric coarse grid on the unit sphere of `R^n`, `n ≤ 4`.
fn sphere_grid(n: usize, min_points: usize) -> Result<Vec<Vec<f64>>> {
    match n {
        1 => Ok(vec![vec![1.0]]),
        2 => {
            let k = min_points.max(1000);
            Ok((0..k)
                .map(|i| {
                    let a = PI * i as f64 / k as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect())
        }
        3 => {
            // Fibonacci lattice on the whole sphere
            let k = (2 * min_points).max(2000);
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..k)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect())
        }
        4 => {
            // product grid in hyperspherical angles
            let k = ((min_points.max(1000) as f64).cbrt().ceil() as usize).max(10);
            let mut out = Vec::with_capacity(k * k * 2 * k);
            for i in 0..k {
                let a = PI * (i as f64 + 0.5) / k as f64;
                for j in 0..k {
                    let b = PI * (j as f64 + 0.5) / k as f64;
                    for l in 0..2 * k {
                        let c = PI * l as f64 / k as f64;
                        out.push(vec![
                            a.cos(),
                            a.sin() * b.cos(),
                            a.sin() * b.sin() * c.cos(),
                            a.sin() * b.sin() * c.sin(),
                        ]);
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!(
            "sphere search in dimension {n} (grid size grows too fast)"
        ))),
    }
}

/// Minimizes `obj` over the unit sphere.
pub fn sphere_minimize<F>(n: usize, search: &SphereSearch, obj: F) -> Result<SphereMin>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let grid = sphere_grid(n, search.grid_points)?;
    let mut best = grid[0].clone();
    let mut best_v = f64::INFINITY;
    for z in &grid {
        let v = obj(z)?;
        if v < best_v {
            best_v = v;
            best = z.clone();
        }
    }
    let grid_value = best_v;
    if n > 1 {
        let mut step = (4.0 * PI / grid.len() as f64).powf(1.0 / (n - 1) as f64);
        let mut iters = 0;
        while step > search.min_step && iters < search.max_iters {
            iters += 1;
            let mut improved = false;
            for k in 0..n {
                for sgn in [1.0, -1.0] {
                    let mut z = best.clone();
                    z[k] += sgn * step;
                    normalize(&mut z);
                    let v = obj(&z)?;
                    if v < best_v {
                        best_v = v;
                        best = z;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }
    let flagged = grid_value > 0.0 && (grid_value - best_v) > 0.1 * grid_value;
    Ok(SphereMin {
        value: best_v,
        argmin: best,
        grid_value,
        grid_points: grid.len(),
        flagged,
    })
}

fn check_point(map: &PolyGraphMap, t: &[f64]) -> Result<()> {
    map.eval_graph(t).map(|_| ())
}

/// `min_{|z|=1} β_n(H_z(t))` with `β_n` the `n`-th smallest absolute
/// eigenvalue of the Hessian of `z·w`.
pub fn e_star(map: &PolyGraphMap, t: &[f64], search: &SphereSearch) -> Result<SphereMin> {
    check_point(map, t)?;
    let (m, n) = (map.m(), map.n());
    if n > m {
        return domain(format!("β_n needs n <= m, got n = {n}, m = {m}"));
    }
    if n > 4 {
        return Err(Error::Unsupported(format!("codimension {n} > 4")));
    }
    sphere_minimize(n, search, |z| {
        Ok(eigen_abs_sorted(&map.hessian_z_unchecked(z, t))?[n - 1])
    })
}

/// `min_{|z|=1} Σ_{j<n} s_j(z)²` for the characteristic polynomial of `H_z`.
pub fn coeff_system_min(map: &PolyGraphMap, t: &[f64], search: &SphereSearch) -> Result<SphereMin> {
    check_point(map, t)?;
    let (m, n) = (map.m(), map.n());
    if n > m {
        return domain(format!("coefficient system needs n <= m, got n = {n}, m = {m}"));
    }
    if n > 4 {
        return Err(Error::Unsupported(format!("codimension {n} > 4")));
    }
    sphere_minimize(n, search, |z| {
        let c = char_poly_coeffs(&map.hessian_z_unchecked(z, t));
        Ok(c.s[..n].iter().map(|x| x * x).sum())
    })
}

/// Largest `k` such that every `k` of the component gradients of `φ` at `t`
/// are linearly independent.
pub fn primitive_dimension(map: &PolyGraphMap, t: &[f64]) -> Result<usize> {
    check_point(map, t)?;
    let (m, d) = (map.m(), map.d());
    if d > 12 {
        return Err(Error::Unsupported(format!("subset enumeration for d = {d} > 12")));
    }
    let mut grads: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for r in 0..map.n() {
        grads.push((0..m).map(|i| map.dw(r, i).eval(t)).collect());
    }
    let thr = NumericPolicy::DEFAULT.rank_threshold;
    let mut best = 0;
    for k in 1..=d.min(m) {
        let all_full = subsets(d, k).all(|sub| {
            let mut gram = SymMatrix::zeros(k);
            for (a, &i) in sub.iter().enumerate() {
                for (b, &j) in sub.iter().enumerate().skip(a) {
                    let v: f64 = grads[i].iter().zip(&grads[j]).map(|(x, y)| x * y).sum();
                    gram.set(a, b, v);
                }
            }
            eigen_abs_sorted(&gram).map(|ev| ev[0] > thr).unwrap_or(false)
        });
        if !all_full {
            break;
        }
        best = k;
    }
    Ok(best)
}

fn subsets(d: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1u32 << d))
        .filter(move |mask| mask.count_ones() as usize == k)
        .map(move |mask| (0..d).filter(|i| mask & (1 << i) != 0).collect())
}

/// Certificate at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub t: Vec<f64>,
    pub e_star: f64,
    pub argmin_z: Vec<f64>,
    pub coeff_system_min: f64,
    pub delta: f64,
    pub is_delta_curved: bool,
    pub primitive_dim: usize,
    /// Sphere refinement moved either minimum by more than 10 %.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCertificate {
    pub reports: Vec<CurvatureReport>,
    pub non_curved_fraction: f64,
}

pub fn certify_point(map: &PolyGraphMap, t: &[f64], delta: f64, search: &SphereSearch) -> Result<CurvatureReport> {
    let e = e_star(map, t, search)?;
    let c = coeff_system_min(map, t, search)?;
    Ok(CurvatureReport {
        t: t.to_vec(),
        e_star: e.value,
        argmin_z: e.argmin,
        coeff_system_min: c.value,
        delta,
        is_delta_curved: e.value > delta,
        primitive_dim: primitive_dimension(map, t)?,
        flagged: e.flagged || c.flagged,
    })
}

pub fn certify_region(
    map: &PolyGraphMap,
    grid: &[Vec<f64>],
    delta: f64,
    search: &SphereSearch,
) -> Result<RegionCertificate> {
    if grid.is_empty() {
        return domain("empty certification grid");
    }
    if grid.iter().flatten().any(|x| !(x.abs() < 1.0)) {
        return domain("certification grid must lie inside (-1, 1)^m");
    }
    let reports = crate::par::map_indexed(grid.len(), |i| certify_point(map, &grid[i], delta, search))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let bad = reports.iter().filter(|r| !r.is_delta_curved).count();
    Ok(RegionCertificate {
        non_curved_fraction: bad as f64 / reports.len() as f64,
        reports,
    })
}

/// Cell-centered grid with `per_axis` points per axis on `(-h, h)^m`.
pub fn cell_centered_grid(m: usize, per_axis: usize, h: f64) -> Vec<Vec<f64>> {
    let total = per_axis.pow(m as u32);
    (0..total)
        .map(|mut k| {
            (0..m)
                .map(|_| {
                    let i = k % per_axis;
                    k /= per_axis;
                    h * (-1.0 + (2.0 * i as f64 + 1.0) / per_axis as f64)
                })
                .collect()
        })
        .collect()
}

/// Measured sublevel fractions and the fitted exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SublevelFit {
    pub deltas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub hits: Vec<u64>,
    /// Whether each δ had enough hits to enter the fit.
    pub used: Vec<bool>,
    pub exponent: f64,
    pub residual: f64,
}

/// Fraction of `(-1, 1)^m` where `|u| < δ`, for each δ, and the slope of
/// log-fraction against log δ.
///
/// All δ share one scrambled-Halton point set, so the fractions are exactly
/// monotone in δ.
pub fn sublevel_exponent(u: &Poly, deltas: &[f64], samples: u64, seed: u64) -> Result<SublevelFit> {
    if u.is_zero() {
        return domain("sublevel sets of the zero polynomial are everything");
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return domain("δ grid must be non-empty and positive");
    }
    let m = u.nvars();
    let seq = ScrambledHalton::new(m, Substream::new(seed, "curvature.sublevel"))?;
    let counts = crate::par::sum_vec(samples, deltas.len(), |i, acc| {
        let mut x = [0.0; 16];
        seq.point(i, &mut x[..m]);
        for v in &mut x[..m] {
            *v = 2.0 * *v - 1.0;
        }
        let a = u.eval(&x[..m]).abs();
        for (c, d) in acc.iter_mut().zip(deltas) {
            if a < *d {
                *c += 1.0;
            }
        }
    });
    let hits: Vec<u64> = counts.iter().map(|&c| c as u64).collect();
    let fractions: Vec<f64> = hits.iter().map(|&h| h as f64 / samples as f64).collect();
    let min_hits = NumericPolicy::DEFAULT.sublevel_min_hits;
    let used: Vec<bool> = hits.iter().map(|&h| h >= min_hits).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(&fractions)
        .zip(&used)
        .filter(|(_, &ok)| ok)
        .map(|((d, f), _)| (d.ln(), f.ln()))
        .unzip();
    let LineFit { slope, residual, .. } = line(&lx, &ly).map_err(|e| Error::Fit(format!("sublevel fit: {e}")))?;
    Ok(SublevelFit {
        deltas: deltas.to_vec(),
        fractions,
        hits,
        used,
        exponent: slope,
        residual,
    })
}

/// Symmetric family `φ_ij(x)`, `i ≤ j`, of polynomials in `l` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFamily {
    l: usize,
    entries: Vec<Vec<Poly>>,
}

impl PhiFamily {
    /// `entries[i][j - i]` holds `φ_ij`.
    pub fn new(l: usize, entries: Vec<Vec<Poly>>) -> Result<Self> {
        if entries.len() != l || entries.iter().enumerate().any(|(i, row)| row.len() != l - i) {
            return domain("φ family must be upper triangular with l rows");
        }
        if entries.iter().flatten().any(|p| p.nvars() != l) {
            return domain("φ entries must be polynomials in l variables");
        }
        Ok(PhiFamily { l, entries })
    }

    /// Constant family from a symmetric matrix (upper triangle used).
    pub fn constant(c: &[Vec<f64>]) -> Result<Self> {
        let l = c.len();
        let entries = (0..l)
            .map(|i| (i..l).map(|j| Poly::constant(l, c[i][j])).collect())
            .collect();
        Self::new(l, entries)
    }

    pub fn dim(&self) -> usize {
        self.l
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.entries[i][j - i]
    }
}

/// Output of the completing-the-square change of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizationResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `|F(x) - Σ λ_i y_i²|`.
    pub residual: f64,
    /// Finite-difference determinant of `∂y/∂x`.
    pub jacobian_det: f64,
}

/// `F(x) = Σ λ_i x_i² + 2δ Σ_{i≤j} x_i x_j φ_ij(x)`.
pub fn quadratic_form(lambda: &[f64], phi: &PhiFamily, delta: f64, x: &[f64]) -> f64 {
    let l = lambda.len();
    let mut f: f64 = lambda.iter().zip(x).map(|(a, b)| a * b * b).sum();
    for i in 0..l {
        for j in i..l {
            f += 2.0 * delta * x[i] * x[j] * phi.get(i, j).eval(x);
        }
    }
    f
}

fn diagonal_change(lambda: &[f64], phi: &PhiFamily, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
    let l = lambda.len();
    let floor = NumericPolicy::DEFAULT.denominator_floor;
    // current coefficients φ*_pq at x, upper triangle
    let mut c: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| if j >= i { phi.get(i, j).eval(x) } else { 0.0 })
                .collect()
        })
        .collect();
    let mut xs = x.to_vec();
    let mut y = vec![0.0; l];
    for i in 0..l {
        let a = lambda[i] + 2.0 * delta * c[i][i];
        if a.abs() < floor * lambda[i].abs() || a / lambda[i] <= floor {
            return domain(format!(
                "δ too large: completing-the-square denominator {a} at step {i}"
            ));
        }
        let s: f64 = (i + 1..l).map(|q| xs[q] * c[i][q]).sum();
        xs[i] += delta * s / a;
        for p in i + 1..l {
            for q in p..l {
                let upd = delta * c[i][p] * c[i][q] / a;
                c[p][q] -= if p == q { 0.5 * upd } else { upd };
            }
        }
        y[i] = xs[i] * (a / lambda[i]).sqrt();
    }
    Ok(y)
}

/// Completes the square one coordinate at a time with the coefficients
/// `φ_ij` frozen at `x`, so `F(x) = Σ λ_i y_i²` holds at every point.
pub fn analytic_diagonalize(lambda: &[f64], phi: &PhiFamily, delta: f64, x: &[f64]) -> Result<DiagonalizationResult> {
    let l = lambda.len();
    if l == 0 || phi.dim() != l || x.len() != l {
        return domain("λ, φ and x must share one dimension l >= 1");
    }
    if lambda.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return domain("all λ_i must be nonzero");
    }
    if !(0.0..1.0).contains(&delta) {
        return domain(format!("δ must lie in [0, 1), got {delta}"));
    }
    let y = diagonal_change(lambda, phi, delta, x)?;
    let fx = quadratic_form(lambda, phi, delta, x);
    let fy: f64 = lambda.iter().zip(&y).map(|(a, b)| a * b * b).sum();
    let mut jac = vec![vec![0.0; l]; l];
    for j in 0..l {
        let h = 1e-5 * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let yp = diagonal_change(lambda, phi, delta, &xp)?;
        let ym = diagonal_change(lambda, phi, delta, &xm)?;
        for i in 0..l {
            jac[i][j] = (yp[i] - ym[i]) / (2.0 * h);
        }
    }
    Ok(DiagonalizationResult {
        x: x.to_vec(),
        y,
        residual: (fx - fy).abs(),
        jacobian_det: det(&jac),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(m: usize, terms: &[(&[u32], f64)]) -> Poly {
        Poly::new(m, terms.iter().map(|(e, c)| (e.to_vec(), *c)).collect()).unwrap()
    }

    fn graph(m: usize, w: Vec<Poly>) -> PolyGraphMap {
        PolyGraphMap::new(m, w).unwrap()
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly_coeffs(&SymMatrix::diag(&[2.0, 2.0])).s, vec![4.0, -4.0]);
        assert_eq!(char_poly_coeffs(&SymMatrix::zeros(3)).s, vec![0.0; 3]);
        assert_eq!(char_poly_coeffs(&SymMatrix::diag(&[2.0, 0.0])).s, vec![0.0, -2.0]);
    }

    #[test]
    fn eigen_abs_examples() {
        assert_eq!(
            eigen_abs_sorted(&SymMatrix::diag(&[2.0, -3.0])).unwrap(),
            vec![2.0, 3.0]
        );
        let swap = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 0.0).unwrap();
        let ev = eigen_abs_sorted(&swap).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        assert_eq!(eigen_abs_sorted(&SymMatrix::identity(3)).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn e_star_examples() {
        let s = SphereSearch::default();
        let parab = graph(2, vec![poly(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])]);
        assert!((e_star(&parab, &[0.3, -0.2], &s).unwrap().value - 2.0).abs() < 1e-12);
        let cyl = graph(2, vec![poly(2, &[(&[2, 0], 1.0)])]);
        assert!(e_star(&cyl, &[0.3, -0.2], &s).unwrap().value.abs() < 1e-12);
        let hyp = graph(2, vec![poly(2, &[(&[2, 0], 1.0), (&[0, 2], -1.0)])]);
        assert!((e_star(&hyp, &[0.5, 0.5], &s).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coeff_system_examples() {
        let s = SphereSearch::default();
        let sq = graph(2, vec![poly(2, &[(&[2, 0], 1.0)]), poly(2, &[(&[0, 2], 1.0)])]);
        let c = coeff_system_min(&sq, &[0.1, 0.2], &s).unwrap();
        assert!((c.value - 3.0).abs() < 1e-9, "{}", c.value);
        let parab = graph(2, vec![poly(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])]);
        assert!((coeff_system_min(&parab, &[0.0, 0.0], &s).unwrap().value - 16.0).abs() < 1e-9);
        let flat = graph(2, vec![Poly::zero(2)]);
        assert_eq!(coeff_system_min(&flat, &[0.0, 0.0], &s).unwrap().value, 0.0);
    }

    #[test]
    fn unsupported_codimension() {
        let w: Vec<Poly> = (0..5).map(|_| poly(5, &[(&[2, 0, 0, 0, 0], 1.0)])).collect();
        let map = graph(5, w);
        assert!(matches!(
            e_star(&map, &[0.0; 5], &SphereSearch::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn primitive_dimension_examples() {
        let parabola = graph(1, vec![poly(1, &[(&[2], 1.0)])]);
        assert_eq!(primitive_dimension(&parabola, &[1.0]).unwrap(), 1);
        assert_eq!(primitive_dimension(&parabola, &[0.0]).unwrap(), 0);
        let sq = graph(2, vec![poly(2, &[(&[2, 0], 1.0)]), poly(2, &[(&[0, 2], 1.0)])]);
        assert_eq!(primitive_dimension(&sq, &[0.3, 0.7]).unwrap(), 1);
    }

    #[test]
    fn cubic_non_curved_fraction() {
        let cubic = graph(1, vec![poly(1, &[(&[3], 1.0)])]);
        let grid = cell_centered_grid(1, 2000, 1.0);
        let s = SphereSearch::default();
        for delta in [0.06, 0.3, 1.2] {
            let cert = certify_region(&cubic, &grid, delta, &s).unwrap();
            assert!((cert.non_curved_fraction - delta / 6.0).abs() < 1e-3);
        }
    }

    #[test]
    fn sublevel_linear_and_square() {
        let deltas: Vec<f64> = (4..=12).map(|k| 2f64.powi(-k)).collect();
        let lin = sublevel_exponent(&Poly::var(1, 0), &deltas, 1 << 16, 1).unwrap();
        assert!((lin.exponent - 1.0).abs() < 0.02);
        let sq = sublevel_exponent(&poly(1, &[(&[2], 1.0)]), &deltas, 1 << 16, 1).unwrap();
        assert!((sq.exponent - 0.5).abs() < 0.02);
        assert!(sublevel_exponent(&Poly::zero(1), &deltas, 100, 1).is_err());
    }

    #[test]
    fn diagonalize_identity_when_delta_zero() {
        let phi = PhiFamily::constant(&[vec![0.3, 1.0], vec![1.0, -0.2]]).unwrap();
        let r = analytic_diagonalize(&[1.0, 2.0], &phi, 0.0, &[0.4, 0.6]).unwrap();
        assert_eq!(r.y, vec![0.4, 0.6]);
        assert_eq!(r.residual, 0.0);
        assert!((r.jacobian_det - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diagonalize_closed_form() {
        let phi = PhiFamily::constant(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for delta in [0.01, 0.1, 0.5] {
            let x = [0.3, 0.8];
            let r = analytic_diagonalize(&[1.0, 1.0], &phi, delta, &x).unwrap();
            assert!((r.y[0] - (x[0] + delta * x[1])).abs() < 1e-15);
            assert!((r.y[1] - x[1] * (1.0 - delta * delta).sqrt()).abs() < 1e-15);
            assert!(r.residual < 1e-14);
            assert!((r.jacobian_det - (1.0 - delta * delta).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn diagonalize_rejects_large_delta() {
        let phi = PhiFamily::constant(&[vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(analytic_diagonalize(&[1.0, 1.0], &phi, 0.5, &[0.1, 0.1]).is_err());
    }
}
