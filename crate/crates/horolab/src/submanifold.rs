//! Graphs `φ(t) = (t, w(t))` of polynomial maps and measures on them.

use crate::bump::{bump, bump_sq};
use crate::error::{domain, Result};
use crate::fit::mean_stderr;
use crate::linalg::{det, SymMatrix};
use crate::poly::Poly;
use crate::qmc::ScrambledHalton;
use crate::quad::GaussLegendre;
use crate::rng::Substream;
use num_complex::Complex64;

/// `φ: R^m → R^{m+n}`, `φ(t) = (t, w(t))` with polynomial `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGraphMap {
    m: usize,
    w: Vec<Poly>,
    // dw[r][i] = ∂w_r/∂t_i
    dw: Vec<Vec<Poly>>,
    // d2w[r][i][j] = ∂²w_r/∂t_i∂t_j
    d2w: Vec<Vec<Vec<Poly>>>,
}

impl PolyGraphMap {
    pub const MAX_DEGREE: u32 = 12;

    pub fn new(m: usize, w: Vec<Poly>) -> Result<Self> {
        if m == 0 || w.is_empty() {
            return domain("graph map needs m >= 1 and n >= 1");
        }
        if let Some(p) = w.iter().find(|p| p.nvars() != m) {
            return domain(format!("component has {} variables, expected {m}", p.nvars()));
        }
        if let Some(p) = w.iter().find(|p| p.degree() > Self::MAX_DEGREE) {
            return domain(format!("degree {} exceeds cap {}", p.degree(), Self::MAX_DEGREE));
        }
        let dw: Vec<Vec<Poly>> = w.iter().map(|p| (0..m).map(|i| p.derivative(i)).collect()).collect();
        let d2w = dw
            .iter()
            .map(|row| row.iter().map(|p| (0..m).map(|j| p.derivative(j)).collect()).collect())
            .collect();
        Ok(PolyGraphMap { m, w, dw, d2w })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn d(&self) -> usize {
        self.m + self.w.len()
    }

    pub fn w(&self) -> &[Poly] {
        &self.w
    }

    /// Exact `∂w_r/∂t_i`.
    pub fn dw(&self, r: usize, i: usize) -> &Poly {
        &self.dw[r][i]
    }

    /// Exact `∂²w_r/∂t_i∂t_j`.
    pub fn d2w(&self, r: usize, i: usize, j: usize) -> &Poly {
        &self.d2w[r][i][j]
    }

    /// Exact mixed partial of `w_r` for an arbitrary multi-index.
    pub fn partial(&self, r: usize, orders: &[u32]) -> Result<Poly> {
        if orders.len() != self.m {
            return domain("multi-index has wrong length");
        }
        let mut p = self.w[r].clone();
        for (i, &k) in orders.iter().enumerate() {
            for _ in 0..k {
                p = p.derivative(i);
            }
        }
        Ok(p)
    }

    /// The map with `w` replaced by `c·w`.
    pub fn scaled(&self, c: f64) -> PolyGraphMap {
        PolyGraphMap::new(self.m, self.w.iter().map(|p| p.scaled(c)).collect()).expect("scaling preserves validity")
    }

    fn check_t(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.m {
            return domain(format!("parameter has length {}, expected {}", t.len(), self.m));
        }
        if t.iter().any(|x| !(x.abs() < 2.0)) {
            return domain("parameter outside (-2, 2)^m");
        }
        Ok(())
    }

    /// `φ(t)` written into `out` (length `d`); no validation.
    #[inline]
    pub fn eval_into(&self, t: &[f64], out: &mut [f64]) {
        out[..self.m].copy_from_slice(t);
        for (o, p) in out[self.m..].iter_mut().zip(&self.w) {
            *o = p.eval(t);
        }
    }

    pub fn eval_graph(&self, t: &[f64]) -> Result<Vec<f64>> {
        self.check_t(t)?;
        let mut out = vec![0.0; self.d()];
        self.eval_into(t, &mut out);
        Ok(out)
    }

    /// `d × m` Jacobian; the top block is the identity.
    pub fn jacobian(&self, t: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_t(t)?;
        let mut j = vec![vec![0.0; self.m]; self.d()];
        for (i, row) in j.iter_mut().enumerate().take(self.m) {
            row[i] = 1.0;
        }
        for r in 0..self.n() {
            for i in 0..self.m {
                j[self.m + r][i] = self.dw[r][i].eval(t);
            }
        }
        Ok(j)
    }

    /// Hessian of `z·w` at `t`.
    pub fn hessian_z(&self, z: &[f64], t: &[f64]) -> Result<SymMatrix> {
        self.check_t(t)?;
        if z.len() != self.n() {
            return domain(format!("normal has length {}, expected {}", z.len(), self.n()));
        }
        Ok(self.hessian_z_unchecked(z, t))
    }

    pub(crate) fn hessian_z_unchecked(&self, z: &[f64], t: &[f64]) -> SymMatrix {
        let mut h = SymMatrix::zeros(self.m);
        for i in 0..self.m {
            for j in i..self.m {
                let v: f64 = z.iter().enumerate().map(|(r, zr)| zr * self.d2w[r][i][j].eval(t)).sum();
                h.set(i, j, v);
            }
        }
        h
    }

    /// Gram volume element `√det(I + DwᵀDw)`.
    pub fn gram_factor(&self, t: &[f64]) -> f64 {
        let m = self.m;
        if m > 8 {
            return self.gram_factor_general(t);
        }
        let mut grad = [0.0; 8];
        let mut g = [[0.0; 8]; 8];
        for (i, row) in g.iter_mut().enumerate().take(m) {
            row[i] = 1.0;
        }
        for row in &self.dw {
            for (gi, p) in grad.iter_mut().zip(row) {
                *gi = p.eval(t);
            }
            for i in 0..m {
                for j in 0..=i {
                    g[i][j] += grad[i] * grad[j];
                }
            }
        }
        // Cholesky on the lower triangle; I + DwᵀDw keeps every pivot >= 1
        let mut det_sqrt = 1.0;
        for j in 0..m {
            let mut djj = g[j][j];
            for k in 0..j {
                djj -= g[j][k] * g[j][k];
            }
            let ljj = djj.sqrt();
            det_sqrt *= ljj;
            g[j][j] = ljj;
            for i in j + 1..m {
                let mut v = g[i][j];
                for k in 0..j {
                    v -= g[i][k] * g[j][k];
                }
                g[i][j] = v / ljj;
            }
        }
        det_sqrt
    }

    fn gram_factor_general(&self, t: &[f64]) -> f64 {
        let m = self.m;
        let grads: Vec<Vec<f64>> = self
            .dw
            .iter()
            .map(|row| row.iter().map(|p| p.eval(t)).collect())
            .collect();
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                let s: f64 = grads.iter().map(|gr| gr[i] * gr[j]).sum();
                g[i][j] = s + if i == j { 1.0 } else { 0.0 };
            }
        }
        det(&g).max(0.0).sqrt()
    }
}

/// Smooth weight on the parameter cube: `Π bump(t_i/h) · p(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    half_width: f64,
    factor: Poly,
}

impl Density {
    pub fn new(half_width: f64, factor: Poly) -> Result<Self> {
        if !(half_width > 0.0 && half_width <= 1.0) {
            return domain(format!("density half-width must lie in (0, 1], got {half_width}"));
        }
        let dens = Density { half_width, factor };
        // the polynomial factor must be non-negative on the support
        let m = dens.factor.nvars();
        let n = 21usize;
        let total = n.pow(m as u32);
        for k in 0..total {
            let mut idx = k;
            let t: Vec<f64> = (0..m)
                .map(|_| {
                    let i = idx % n;
                    idx /= n;
                    half_width * (-1.0 + 2.0 * i as f64 / (n - 1) as f64)
                })
                .collect();
            if dens.factor.eval(&t) < 0.0 {
                return domain("density factor is negative on the support");
            }
        }
        Ok(dens)
    }

    /// Plain bump on `(-h, h)^m`.
    pub fn bump(m: usize, half_width: f64) -> Result<Self> {
        Self::new(half_width, Poly::constant(m, 1.0))
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn factor(&self) -> &Poly {
        &self.factor
    }

    #[inline]
    pub fn eval(&self, t: &[f64]) -> f64 {
        let mut v = 1.0;
        for &x in t {
            v *= bump(x / self.half_width);
            if v == 0.0 {
                return 0.0;
            }
        }
        v * self.factor.eval(t)
    }
}

/// A measure on the graph, given through its density in the parameter `t`.
pub trait Measure: Sync + Send {
    fn map(&self) -> &PolyGraphMap;
    /// Parameter box containing the support; empty when `lo >= hi` on an axis.
    fn support_box(&self) -> Vec<(f64, f64)>;
    /// Density with respect to `dt`.
    fn density(&self, t: &[f64]) -> f64;
    /// True when the total mass is one by construction.
    fn is_probability(&self) -> bool;
}

fn tensor_nodes(m: usize) -> usize {
    match m {
        1 => 400,
        2 => 200,
        3 => 60,
        4 => 24,
        _ => 12,
    }
}

/// Deterministic tensor Gauss–Legendre integral of `g` over a box.
pub fn tensor_integrate<F>(bx: &[(f64, f64)], nodes_per_axis: usize, g: F) -> Complex64
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    if bx.iter().any(|(lo, hi)| hi <= lo) {
        return Complex64::new(0.0, 0.0);
    }
    let order = 10;
    let panels = nodes_per_axis.div_ceil(order).max(1);
    let gl = GaussLegendre::new(order);
    let axes: Vec<Vec<(f64, f64)>> = bx.iter().map(|&(lo, hi)| gl.composite_nodes(lo, hi, panels)).collect();
    let m = bx.len();
    let len0 = axes[0].len() as u64;
    let rest: u64 = axes[1..].iter().map(|a| a.len() as u64).product();
    let s = crate::par::sum_vec(len0 * rest, 2, |k, acc| {
        let mut idx = k;
        let mut t = vec![0.0; m];
        let mut w = 1.0;
        for (ti, ax) in t.iter_mut().zip(&axes) {
            let (x, wx) = ax[(idx % ax.len() as u64) as usize];
            idx /= ax.len() as u64;
            *ti = x;
            w *= wx;
        }
        let v = g(&t) * w;
        acc[0] += v.re;
        acc[1] += v.im;
    });
    Complex64::new(s[0], s[1])
}

/// Probability measure `λ_S` with density `q(t)/Z`, `q = bump · factor · gram`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMeasure {
    map: PolyGraphMap,
    density: Density,
    norm: f64,
}

impl SurfaceMeasure {
    pub fn new(map: PolyGraphMap, density: Density) -> Result<Self> {
        if density.factor.nvars() != map.m() {
            return domain("density and map have different parameter dimensions");
        }
        let mut s = SurfaceMeasure {
            map,
            density,
            norm: 1.0,
        };
        let h = s.density.half_width;
        let bx = vec![(-h, h); s.map.m()];
        let z = tensor_integrate(&bx, tensor_nodes(s.map.m()), |t| Complex64::new(s.unnormalized(t), 0.0)).re;
        if !(z > 0.0) {
            return domain("density integrates to zero");
        }
        s.norm = z;
        Ok(s)
    }

    pub fn density_spec(&self) -> &Density {
        &self.density
    }

    /// `∫ q dt`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    #[inline]
    pub fn unnormalized(&self, t: &[f64]) -> f64 {
        let b = self.density.eval(t);
        if b == 0.0 {
            0.0
        } else {
            b * self.map.gram_factor(t)
        }
    }
}

impl Measure for SurfaceMeasure {
    fn map(&self) -> &PolyGraphMap {
        &self.map
    }
    fn support_box(&self) -> Vec<(f64, f64)> {
        let h = self.density.half_width;
        vec![(-h, h); self.map.m()]
    }
    fn density(&self, t: &[f64]) -> f64 {
        self.unnormalized(t) / self.norm
    }
    fn is_probability(&self) -> bool {
        true
    }
}

/// `λ_{S,x₀,β}`: the surface measure times `β^{-m} ψ((φ(t) - x₀)/β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedMeasure {
    base: SurfaceMeasure,
    x0: Vec<f64>,
    beta: f64,
}

/// Window on the unit ball of `R^d`, peak value one.
#[inline]
pub fn window(x2: f64) -> f64 {
    bump_sq(x2, 1.0)
}

pub fn localize(mu: &SurfaceMeasure, x0: &[f64], beta: f64) -> Result<LocalizedMeasure> {
    if !(beta > 0.0 && beta <= 0.5) {
        return domain(format!("β must lie in (0, 1/2], got {beta}"));
    }
    if x0.len() != mu.map.d() {
        return domain(format!("x₀ has length {}, expected {}", x0.len(), mu.map.d()));
    }
    Ok(LocalizedMeasure {
        base: mu.clone(),
        x0: x0.to_vec(),
        beta,
    })
}

impl LocalizedMeasure {
    pub fn base(&self) -> &SurfaceMeasure {
        &self.base
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Total mass by tensor quadrature.
    pub fn mass(&self) -> f64 {
        tensor_integrate(&self.support_box(), tensor_nodes(self.base.map.m()), |t| {
            Complex64::new(self.density(t), 0.0)
        })
        .re
    }
}

impl Measure for LocalizedMeasure {
    fn map(&self) -> &PolyGraphMap {
        &self.base.map
    }
    fn support_box(&self) -> Vec<(f64, f64)> {
        let h = self.base.density.half_width;
        (0..self.base.map.m())
            .map(|i| ((self.x0[i] - self.beta).max(-h), (self.x0[i] + self.beta).min(h)))
            .collect()
    }
    fn density(&self, t: &[f64]) -> f64 {
        let map = &self.base.map;
        let m = map.m();
        let mut x2 = 0.0;
        for i in 0..m {
            x2 += (t[i] - self.x0[i]).powi(2);
        }
        let b2 = self.beta * self.beta;
        if x2 >= b2 {
            return 0.0;
        }
        for (r, p) in map.w.iter().enumerate() {
            x2 += (p.eval(t) - self.x0[m + r]).powi(2);
        }
        let win = window(x2 / b2);
        if win == 0.0 {
            return 0.0;
        }
        win * self.beta.powi(-(m as i32)) * self.base.density(t)
    }
    fn is_probability(&self) -> bool {
        false
    }
}

/// Sampling configuration for quasi-Monte Carlo integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcConfig {
    /// Total points across all replicates.
    pub points: u64,
    /// Independent scramblings used for the error estimate.
    pub replicates: u32,
    pub seed: u64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            points: 1 << 20,
            replicates: 8,
            seed: 0,
        }
    }
}

/// A randomized estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    /// Three standard errors.
    pub fn error_bound(&self) -> f64 {
        3.0 * self.stderr
    }
}

/// `∫ f(φ(t)) dμ(t)` by scrambled-Halton quasi-Monte Carlo over the
/// parameter support box. Probability measures use the self-normalized
/// ratio `Σ f ρ / Σ ρ`, so constants integrate exactly.
pub fn integrate_against<M, F>(mu: &M, f: F, cfg: &QmcConfig) -> Result<Estimate>
where
    M: Measure + ?Sized,
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    let map = mu.map();
    let m = map.m();
    let d = map.d();
    if cfg.replicates < 2 {
        return domain("need at least two replicates for an error estimate");
    }
    let bx = mu.support_box();
    if bx.iter().any(|(lo, hi)| hi <= lo) {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            stderr: 0.0,
            samples: 0,
        });
    }
    let vol: f64 = bx.iter().map(|(lo, hi)| hi - lo).product();
    let per = (cfg.points / cfg.replicates as u64).max(1);
    let stream = Substream::new(cfg.seed, "submanifold.integrate");
    let mut re = Vec::with_capacity(cfg.replicates as usize);
    let mut im = Vec::with_capacity(cfg.replicates as usize);
    for r in 0..cfg.replicates {
        let seq = ScrambledHalton::new(m, stream.child(r as u64))?;
        let s = crate::par::sum_vec(per, 3, |i, acc| {
            let mut u = [0.0; 16];
            seq.point(i, &mut u[..m]);
            let mut t = [0.0; 16];
            for k in 0..m {
                t[k] = bx[k].0 + (bx[k].1 - bx[k].0) * u[k];
            }
            let rho = mu.density(&t[..m]);
            if rho == 0.0 {
                return;
            }
            let mut x = [0.0; 32];
            map.eval_into(&t[..m], &mut x[..d]);
            let v = f(&x[..d]) * rho;
            acc[0] += v.re;
            acc[1] += v.im;
            acc[2] += rho;
        });
        let (vr, vi) = if mu.is_probability() {
            if s[2] == 0.0 {
                (0.0, 0.0)
            } else {
                (s[0] / s[2], s[1] / s[2])
            }
        } else {
            (vol * s[0] / per as f64, vol * s[1] / per as f64)
        };
        re.push(vr);
        im.push(vi);
    }
    let (mr, sr) = mean_stderr(&re);
    let (mi, si) = mean_stderr(&im);
    Ok(Estimate {
        value: Complex64::new(mr, mi),
        stderr: sr.hypot(si),
        samples: per * cfg.replicates as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola() -> PolyGraphMap {
        PolyGraphMap::new(1, vec![Poly::new(1, vec![(vec![2], 1.0)]).unwrap()]).unwrap()
    }

    fn squares() -> PolyGraphMap {
        PolyGraphMap::new(
            2,
            vec![
                Poly::new(2, vec![(vec![2, 0], 1.0)]).unwrap(),
                Poly::new(2, vec![(vec![0, 2], 1.0)]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hessian_examples() {
        let h = parabola().hessian_z(&[1.0], &[0.37]).unwrap();
        assert_eq!(h.get(0, 0), 2.0);
        let h = squares().hessian_z(&[0.3, -2.0], &[0.1, 0.9]).unwrap();
        assert_eq!((h.get(0, 0), h.get(1, 1), h.get(0, 1)), (0.6, -4.0, 0.0));
    }

    #[test]
    fn jacobian_top_block_identity() {
        let j = squares().jacobian(&[0.5, -0.25]).unwrap();
        assert_eq!(j[0], vec![1.0, 0.0]);
        assert_eq!(j[1], vec![0.0, 1.0]);
        assert_eq!(j[2], vec![1.0, 0.0]);
        assert_eq!(j[3], vec![0.0, -0.5]);
    }

    #[test]
    fn dimension_checks() {
        let p = parabola();
        assert!(p.eval_graph(&[0.1, 0.2]).is_err());
        assert!(p.eval_graph(&[2.5]).is_err());
        assert!(p.hessian_z(&[1.0, 1.0], &[0.0]).is_err());
        assert!(PolyGraphMap::new(2, vec![Poly::var(1, 0)]).is_err());
    }

    #[test]
    fn gram_factor_at_least_one() {
        let s = squares();
        for t in [[0.0, 0.0], [0.5, -0.7], [0.9, 0.9]] {
            assert!(s.gram_factor(&t) >= 1.0);
        }
        // (t, t²): sqrt(1 + 4t²)
        assert!((parabola().gram_factor(&[0.5]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constants_integrate_to_one() {
        let mu = SurfaceMeasure::new(squares(), Density::bump(2, 0.9).unwrap()).unwrap();
        let cfg = QmcConfig {
            points: 1 << 14,
            replicates: 4,
            seed: 2,
        };
        let e = integrate_against(&mu, |_| Complex64::new(1.0, 0.0), &cfg).unwrap();
        assert!((e.value.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn localized_far_away_is_zero() {
        let mu = SurfaceMeasure::new(parabola(), Density::bump(1, 1.0).unwrap()).unwrap();
        let loc = localize(&mu, &[0.0, 3.0], 0.25).unwrap();
        assert_eq!(loc.mass(), 0.0);
        assert!(localize(&mu, &[0.0, 0.0], 0.6).is_err());
        assert!(localize(&mu, &[0.0], 0.25).is_err());
    }

    #[test]
    fn negative_density_factor_rejected() {
        assert!(Density::new(0.5, Poly::var(1, 0)).is_err());
    }
}
