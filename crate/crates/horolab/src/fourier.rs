//! Fourier transforms of graph measures and frequency-space bookkeeping.
//!
//! Convention: `μ̂(ξ) = ∫ e(-ξ·x) dμ(x)` with `e(s) = exp(2πis)`.
//!
//! The parameter-space integrals use a randomly shifted trapezoid rule on the
//! support box. Every density here vanishes to infinite order at the box
//! boundary, so the rule is spectrally accurate once the per-axis point count
//! exceeds the local frequency of the phase `ξ·φ(t)`.

use crate::bump::{bump, cutoff};
use crate::error::{domain, resource, Error, Result};
use crate::fit::{loglog, mean_stderr};
use crate::policy::NumericPolicy;
use crate::qmc::ScrambledHalton;
use crate::quad::GaussLegendre;
use crate::rng::Substream;
use crate::submanifold::{tensor_integrate, LocalizedMeasure, Measure};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Resolution and budget of the parameter-space trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierConfig {
    /// Points per axis added beyond the phase-frequency requirement.
    pub margin: usize,
    /// Maximum grid points for a single transform.
    pub budget: u64,
    pub seed: u64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            margin: 256,
            budget: NumericPolicy::DEFAULT.oscillatory_budget,
            seed: 0,
        }
    }
}

/// A tensor trapezoid grid over the support box of a measure.
struct PhaseGrid<'a, M: Measure + ?Sized> {
    mu: &'a M,
    lo: Vec<f64>,
    step: Vec<f64>,
    shift: Vec<f64>,
    n: Vec<usize>,
}

impl<'a, M: Measure + ?Sized> PhaseGrid<'a, M> {
    /// Grid resolving phase frequencies up to `g[i]` along axis `i`.
    fn new(mu: &'a M, g: &[f64], cfg: &FourierConfig, shift: Vec<f64>) -> Result<Self> {
        let bx = mu.support_box();
        let n: Vec<usize> = bx
            .iter()
            .zip(g)
            .map(|((lo, hi), gi)| ((hi - lo).max(0.0) * gi).ceil() as usize + cfg.margin)
            .collect();
        let total: f64 = n.iter().map(|&k| k as f64).product();
        if total > cfg.budget as f64 {
            return resource("oscillatory quadrature points", total, cfg.budget as f64);
        }
        Ok(PhaseGrid {
            mu,
            lo: bx.iter().map(|b| b.0).collect(),
            step: bx
                .iter()
                .zip(&n)
                .map(|((lo, hi), &k)| (hi - lo).max(0.0) / k as f64)
                .collect(),
            shift,
            n,
        })
    }

    fn len(&self) -> u64 {
        self.n.iter().map(|&k| k as u64).product()
    }

    /// Weight and image point of grid node `k`, or `None` off the support.
    fn node(&self, mut k: u64, t: &mut [f64], x: &mut [f64]) -> Option<f64> {
        let mut w = 1.0;
        for i in 0..t.len() {
            let j = k % self.n[i] as u64;
            k /= self.n[i] as u64;
            t[i] = self.lo[i] + (j as f64 + self.shift[i]) * self.step[i];
            w *= self.step[i];
        }
        let rho = self.mu.density(t);
        if rho == 0.0 {
            return None;
        }
        self.mu.map().eval_into(t, x);
        Some(w * rho)
    }

    /// Transforms at every `ξ` in `xis` in one pass over the grid.
    fn transform(&self, xis: &[Vec<f64>]) -> Vec<Complex64> {
        let map = self.mu.map();
        let (m, d) = (map.m(), map.d());
        if self.step.iter().any(|&h| h <= 0.0) {
            return vec![Complex64::new(0.0, 0.0); xis.len()];
        }
        let flat: Vec<f64> = xis.iter().flatten().copied().collect();
        let s = crate::par::sum_vec(self.len(), 2 * xis.len(), |k, acc| {
            let mut t = [0.0; 16];
            let mut x = [0.0; 32];
            let Some(w) = self.node(k, &mut t[..m], &mut x[..d]) else {
                return;
            };
            let x = &x[..d];
            for (a, xi) in acc.chunks_exact_mut(2).zip(flat.chunks_exact(d)) {
                let ph: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                let (sn, cs) = (TAU * (ph - ph.round())).sin_cos();
                a[0] += w * cs;
                a[1] -= w * sn;
            }
        });
        s.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
    }
}

/// Per-axis bounds on `|∂_i (ξ·φ)|` over the box for each `ξ`, with a 5 %
/// safety factor.
fn phase_frequency_bounds<M: Measure + ?Sized>(mu: &M, xis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let bx = mu.support_box();
    let map = mu.map();
    let m = map.m();
    let per = match m {
        1 => 257,
        2 => 33,
        3 => 13,
        _ => 7,
    };
    let total = (per as u64).pow(m as u32);
    let mut g = vec![vec![0.0f64; m]; xis.len()];
    let mut t = vec![0.0; m];
    for mut k in 0..total {
        for i in 0..m {
            let j = k % per as u64;
            k /= per as u64;
            t[i] = bx[i].0 + (bx[i].1 - bx[i].0) * j as f64 / (per - 1) as f64;
        }
        for i in 0..m {
            let grads: Vec<f64> = (0..map.n()).map(|r| map.dw(r, i).eval(&t)).collect();
            for (xi, gx) in xis.iter().zip(g.iter_mut()) {
                let v = xi[i] + grads.iter().zip(&xi[m..]).map(|(a, b)| a * b).sum::<f64>();
                gx[i] = gx[i].max(v.abs());
            }
        }
    }
    for gx in &mut g {
        gx.iter_mut().for_each(|v| *v *= 1.05);
    }
    g
}

fn elementwise_max(gs: &[&Vec<f64>]) -> Vec<f64> {
    let mut out = gs[0].clone();
    for g in &gs[1..] {
        out.iter_mut().zip(g.iter()).for_each(|(a, b)| *a = a.max(*b));
    }
    out
}

fn random_shift(stream: &Substream, m: usize, replicate: u64) -> Vec<f64> {
    let mut rng = stream.at(replicate);
    (0..m).map(|_| rng.gen::<f64>()).collect()
}

fn check_xi<M: Measure + ?Sized>(mu: &M, xi: &[f64]) -> Result<()> {
    if xi.len() != mu.map().d() {
        return domain(format!("ξ has length {}, expected {}", xi.len(), mu.map().d()));
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return domain("ξ must be finite");
    }
    Ok(())
}

/// Transform with its standard error from two independent random shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierValue {
    pub value: Complex64,
    pub stderr: f64,
    /// Grid points per shift.
    pub samples: u64,
}

/// `μ̂(ξ)` by the randomly shifted trapezoid rule.
pub fn measure_fourier<M: Measure + ?Sized>(mu: &M, xi: &[f64], cfg: &FourierConfig) -> Result<FourierValue> {
    check_xi(mu, xi)?;
    let m = mu.map().m();
    let stream = Substream::new(cfg.seed, "fourier.shift");
    let xis = [xi.to_vec()];
    let g = phase_frequency_bounds(mu, &xis).remove(0);
    let mut vals = [Complex64::new(0.0, 0.0); 2];
    let mut samples = 0;
    for (r, v) in vals.iter_mut().enumerate() {
        let grid = PhaseGrid::new(mu, &g, cfg, random_shift(&stream, m, r as u64))?;
        samples = grid.len();
        *v = grid.transform(&xis)[0];
    }
    Ok(FourierValue {
        value: (vals[0] + vals[1]) * 0.5,
        stderr: (vals[0] - vals[1]).norm() * 0.5,
        samples,
    })
}

/// Frequencies sharing one grid pass in [`measure_fourier_batch`].
const GROUP: usize = 32;

/// Transforms at many frequencies with one random shift.
///
/// Frequencies are sorted by the grid size they need and processed in groups
/// of similar resolution, so high frequencies do not inflate the grid used for
/// low ones.
pub fn measure_fourier_batch<M: Measure + ?Sized>(
    mu: &M,
    xis: &[Vec<f64>],
    cfg: &FourierConfig,
) -> Result<Vec<Complex64>> {
    for xi in xis {
        check_xi(mu, xi)?;
    }
    if xis.is_empty() {
        return Ok(Vec::new());
    }
    let m = mu.map().m();
    let stream = Substream::new(cfg.seed, "fourier.shift");
    let shift = random_shift(&stream, m, 0);
    let bounds = phase_frequency_bounds(mu, xis);
    let bx = mu.support_box();
    let cost = |g: &Vec<f64>| -> f64 {
        g.iter()
            .zip(&bx)
            .map(|(gi, (lo, hi))| (hi - lo) * gi + cfg.margin as f64)
            .product()
    };
    let mut order: Vec<usize> = (0..xis.len()).collect();
    order.sort_by(|&a, &b| cost(&bounds[a]).total_cmp(&cost(&bounds[b])).then(a.cmp(&b)));
    let mut out = vec![Complex64::new(0.0, 0.0); xis.len()];
    for group in order.chunks(GROUP) {
        let g = elementwise_max(&group.iter().map(|&i| &bounds[i]).collect::<Vec<_>>());
        let grid = PhaseGrid::new(mu, &g, cfg, shift.clone())?;
        let sub: Vec<Vec<f64>> = group.iter().map(|&i| xis[i].clone()).collect();
        for (&i, v) in group.iter().zip(grid.transform(&sub)) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// A fitted power law `value ∝ K^slope` on a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub ks: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Checks that `ks` has length ≥ 5 and a constant ratio `2^{1/j}` for some
/// integer `j ≥ 1` (dyadic, or a dyadic grid refined `j` times per octave).
pub fn check_dyadic(ks: &[f64]) -> Result<()> {
    if ks.len() < 5 {
        return domain(format!("need at least 5 dyadic K values, got {}", ks.len()));
    }
    if ks.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return domain("K values must be positive");
    }
    let r0 = ks[1] / ks[0];
    let j = (std::f64::consts::LN_2 / r0.ln()).round();
    if !(j >= 1.0) || (r0 - 2f64.powf(1.0 / j)).abs() > 1e-9 {
        return domain(format!("K grid ratio {r0} is not 2^(1/j)"));
    }
    for w in ks.windows(2) {
        if (w[1] / w[0] - r0).abs() > 1e-9 {
            return domain(format!("K grid is not geometric: {} then {}", w[0], w[1]));
        }
    }
    Ok(())
}

fn fit(ks: &[f64], values: Vec<f64>, stderrs: Vec<f64>) -> Result<DecayFit> {
    let l = loglog(ks, &values)?;
    Ok(DecayFit {
        ks: ks.to_vec(),
        values,
        stderrs,
        slope: l.slope,
        intercept: l.intercept,
        residual: l.residual,
    })
}

/// Sampling of the frequency shell `1 ≤ |ξ| ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellConfig {
    /// Shell points per K, split evenly over replicates.
    pub samples: u64,
    pub replicates: u32,
    pub fourier: FourierConfig,
}

impl Default for ShellConfig {
    fn default() -> Self {
        ShellConfig {
            samples: 256,
            replicates: 8,
            fourier: FourierConfig::default(),
        }
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI * PI / 2.0,
    }
}

/// Maps a point of `[0, 1)^d` to the shell `1 ≤ |ξ| ≤ 2`, uniformly.
fn shell_point(u: &[f64], out: &mut [f64]) {
    let d = out.len();
    let r = (1.0 + u[0] * (2f64.powi(d as i32) - 1.0)).powf(1.0 / d as f64);
    match d {
        1 => out[0] = if u[1] < 0.5 { r } else { -r },
        2 => {
            let a = TAU * u[1];
            out[0] = r * a.cos();
            out[1] = r * a.sin();
        }
        3 => {
            let z = 2.0 * u[1] - 1.0;
            let s = (1.0 - z * z).sqrt();
            let a = TAU * u[2];
            out[0] = r * s * a.cos();
            out[1] = r * s * a.sin();
            out[2] = r * z;
        }
        _ => {
            let (p, q) = ((1.0 - u[1]).sqrt(), u[1].sqrt());
            let (a, b) = (TAU * u[2], TAU * u[3]);
            out[0] = r * p * a.cos();
            out[1] = r * p * a.sin();
            out[2] = r * q * b.cos();
            out[3] = r * q * b.sin();
        }
    }
}

/// `‖ 1_{[1,2]}(|ξ|) μ̂(Kξ) ‖_{L²}` for each K, and its log-log slope.
pub fn l2_shell_decay(mu: &LocalizedMeasure, ks: &[f64], cfg: &ShellConfig) -> Result<DecayFit> {
    check_dyadic(ks)?;
    let beta = mu.beta();
    if let Some(k) = ks.iter().find(|&&k| k * beta < 4.0) {
        return domain(format!("K·β must be at least 4, got K = {k}"));
    }
    let d = mu.map().d();
    if d > 4 {
        return Err(Error::Unsupported(format!("shell sampling in dimension {d} > 4")));
    }
    if cfg.replicates < 2 || cfg.samples < cfg.replicates as u64 {
        return domain("shell sampling needs at least two replicates with one point each");
    }
    let per = cfg.samples / cfg.replicates as u64;
    let vol = unit_ball_volume(d) * (2f64.powi(d as i32) - 1.0);
    let dims = d.max(2);
    let stream = Substream::new(cfg.fourier.seed, "fourier.shell");
    let mut values = Vec::with_capacity(ks.len());
    let mut stderrs = Vec::with_capacity(ks.len());
    for (ki, &k) in ks.iter().enumerate() {
        let mut xis = Vec::with_capacity((per * cfg.replicates as u64) as usize);
        for r in 0..cfg.replicates {
            let seq = ScrambledHalton::new(dims, stream.child(ki as u64).child(r as u64))?;
            for i in 0..per {
                let mut u = [0.0; 4];
                seq.point(i, &mut u[..dims]);
                let mut xi = vec![0.0; d];
                shell_point(&u[..dims], &mut xi);
                xi.iter_mut().for_each(|v| *v *= k);
                xis.push(xi);
            }
        }
        let fc = FourierConfig {
            seed: cfg.fourier.seed ^ (ki as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..cfg.fourier
        };
        let ft = measure_fourier_batch(mu, &xis, &fc)?;
        let means: Vec<f64> = ft
            .chunks(per as usize)
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>() / per as f64)
            .collect();
        let (mean, se) = mean_stderr(&means);
        let norm = (vol * mean).sqrt();
        values.push(norm);
        stderrs.push(if norm > 0.0 { vol * se / (2.0 * norm) } else { 0.0 });
    }
    fit(ks, values, stderrs)
}

/// Angle between `dir` and the normal space of the graph at parameter `t`.
pub fn normal_angle(map: &crate::submanifold::PolyGraphMap, t: &[f64], dir: &[f64]) -> f64 {
    let (m, n) = (map.m(), map.n());
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for r in 0..n {
        let mut v: Vec<f64> = (0..m).map(|i| -map.dw(r, i).eval(t)).collect();
        v.extend((0..n).map(|s| if s == r { 1.0 } else { 0.0 }));
        for q in &basis {
            let p: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
        let l = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= l);
        basis.push(v);
    }
    let len = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
    let proj2: f64 = basis
        .iter()
        .map(|q| q.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>().powi(2))
        .sum();
    (proj2.sqrt() / len).min(1.0).acos()
}

/// `|μ̂(K·dir)|` on a dyadic K grid and its log-log slope, for any direction.
pub fn directional_decay<M: Measure + ?Sized>(
    mu: &M,
    dir: &[f64],
    ks: &[f64],
    cfg: &FourierConfig,
) -> Result<DecayFit> {
    check_dyadic(ks)?;
    check_xi(mu, dir)?;
    let len = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(len > 0.0) {
        return domain("direction must be nonzero");
    }
    let mut values = Vec::with_capacity(ks.len());
    let mut stderrs = Vec::with_capacity(ks.len());
    for &k in ks {
        let xi: Vec<f64> = dir.iter().map(|a| a * k / len).collect();
        let v = measure_fourier(mu, &xi, cfg)?;
        values.push(v.value.norm());
        stderrs.push(v.stderr);
    }
    fit(ks, values, stderrs)
}

/// Largest admissible angle between the probe direction and the normal space.
pub const NORMAL_ANGLE_TOLERANCE: f64 = 0.2;

/// Directional decay along a direction close to the normal space at the
/// localization center.
pub fn stationary_scaling(mu: &LocalizedMeasure, dir: &[f64], ks: &[f64], cfg: &FourierConfig) -> Result<DecayFit> {
    check_xi(mu, dir)?;
    let m = mu.map().m();
    let angle = normal_angle(mu.map(), &mu.x0()[..m], dir);
    if angle > NORMAL_ANGLE_TOLERANCE {
        return domain(format!(
            "direction is {angle:.3} rad from the normal space (limit {NORMAL_ANGLE_TOLERANCE})"
        ));
    }
    directional_decay(mu, dir, ks, cfg)
}

/// Radial partition `η_l + η_m + η_h = 1` at scales `ρT` and `T/ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySplit {
    rho: f64,
    t: f64,
}

impl FrequencySplit {
    pub fn new(rho: f64, t: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return domain(format!("ρ must lie in (0, 1), got {rho}"));
        }
        if !(t > 1.0) || !t.is_finite() {
            return domain(format!("T must exceed 1, got {t}"));
        }
        Ok(FrequencySplit { rho, t })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `(η_l, η_m, η_h)` at radius `r`; the last two are built by differences.
    pub fn weights(&self, r: f64) -> [f64; 3] {
        let low = cutoff(r / (self.rho * self.t));
        let inner = cutoff(r / (self.t / self.rho));
        [low, inner - low, 1.0 - inner]
    }
}

/// Test functions on `R^d` with closed-form or tabulated transforms.
#[derive(Debug, Clone, PartialEq)]
pub enum TestWave {
    /// `exp(-π|x - c|²/σ²) e(k·x)`.
    Gaussian {
        sigma: f64,
        center: Vec<f64>,
        freq: Vec<f64>,
    },
    /// `Π_i bump((x_i - c_i)/a) e(k·x)`.
    BumpWave {
        half_width: f64,
        center: Vec<f64>,
        freq: Vec<f64>,
    },
}

/// `∫_{-1}^{1} bump(u) cos(2πsu) du`.
pub fn bump_transform(s: f64) -> f64 {
    let panels = 40 + (4.0 * s.abs()).ceil() as usize;
    GaussLegendre::new(10).integrate(-1.0, 1.0, panels, |u| bump(u) * (TAU * s * u).cos())
}

impl TestWave {
    pub fn dim(&self) -> usize {
        match self {
            TestWave::Gaussian { center, .. } | TestWave::BumpWave { center, .. } => center.len(),
        }
    }

    fn parts(&self) -> (&[f64], &[f64]) {
        match self {
            TestWave::Gaussian { center, freq, .. } | TestWave::BumpWave { center, freq, .. } => (center, freq),
        }
    }

    fn validate(&self) -> Result<()> {
        let (c, k) = self.parts();
        if c.len() != k.len() {
            return domain("test wave center and frequency differ in length");
        }
        let w = match self {
            TestWave::Gaussian { sigma, .. } => *sigma,
            TestWave::BumpWave { half_width, .. } => *half_width,
        };
        if !(w > 0.0) || !w.is_finite() {
            return domain("test wave width must be positive");
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let (c, k) = self.parts();
        let env = match self {
            TestWave::Gaussian { sigma, .. } => {
                let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                (-PI * r2 / (sigma * sigma)).exp()
            }
            TestWave::BumpWave { half_width, .. } => x.iter().zip(c).map(|(a, b)| bump((a - b) / half_width)).product(),
        };
        if env == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ph: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
        Complex64::from_polar(env, TAU * ph)
    }

    /// One-dimensional factor of `f̂` along axis `i` at `ξ_i`.
    fn axis_transform(&self, i: usize, xi: f64) -> Complex64 {
        let (c, k) = self.parts();
        let s = xi - k[i];
        let env = match self {
            TestWave::Gaussian { sigma, .. } => sigma * (-PI * sigma * sigma * s * s).exp(),
            TestWave::BumpWave { half_width, .. } => half_width * bump_transform(half_width * s),
        };
        Complex64::from_polar(1.0, -TAU * s * c[i]) * env
    }

    /// `f̂(ξ) = Π_i` of the axis factors.
    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        (0..xi.len()).map(|i| self.axis_transform(i, xi[i])).product()
    }

    /// `∫ |axis factor|` over all of `R` and over `|ξ_i - k_i| > a`.
    fn axis_l1(&self, a: f64) -> (f64, f64) {
        match self {
            TestWave::Gaussian { sigma, .. } => (1.0, erfc_bound(PI.sqrt() * sigma * a)),
            TestWave::BumpWave { half_width, .. } => {
                let cum = bump_transform_l1();
                let full = cum[cum.len() - 1];
                let k = ((half_width * a) / L1_STEP).floor() as usize;
                let tail = if k >= cum.len() { 0.0 } else { full - cum[k] };
                (2.0 * full, 2.0 * tail)
            }
        }
    }
}

const L1_STEP: f64 = 0.02;
const L1_POINTS: usize = 10_001;

/// Running trapezoid integral of `|bump_transform|` on `[0, 200]`; the
/// transform is below 1e-20 beyond.
fn bump_transform_l1() -> &'static [f64] {
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let vals = crate::par::map_indexed(L1_POINTS, |k| bump_transform(k as f64 * L1_STEP).abs());
        let mut cum = Vec::with_capacity(L1_POINTS);
        let mut acc = 0.0;
        cum.push(0.0);
        for w in vals.windows(2) {
            acc += 0.5 * L1_STEP * (w[0] + w[1]);
            cum.push(acc);
        }
        cum
    })
}

/// Upper bound for `erfc(x)`, `x ≥ 0`.
fn erfc_bound(x: f64) -> f64 {
    (-x * x).exp()
}

/// Settings for the frequency-side quadrature of [`split_eval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Admissible truncation error, relative to `‖μ‖ ‖f̂‖_1`.
    pub tail_tol: f64,
    /// Maximum frequency nodes.
    pub budget: u64,
    pub fourier: FourierConfig,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            tail_tol: 1e-6,
            budget: 4_000_000,
            fourier: FourierConfig::default(),
        }
    }
}

/// The three frequency pieces of `μ(f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEval {
    pub low: Complex64,
    pub mid: Complex64,
    pub high: Complex64,
    /// Bound on the contribution of frequencies outside the truncation box.
    pub truncation: f64,
    pub nodes: u64,
}

impl SplitEval {
    pub fn total(&self) -> Complex64 {
        self.low + self.mid + self.high
    }
}

/// `μ_*(f) = ∫ f̂(ξ) conj(μ̂(ξ)) η_*(|ξ|) dξ` for `* ∈ {l, m, h}`.
pub fn split_eval<M: Measure + ?Sized>(
    mu: &M,
    f: &TestWave,
    split: &FrequencySplit,
    cfg: &SplitConfig,
) -> Result<SplitEval> {
    f.validate()?;
    let d = mu.map().d();
    if f.dim() != d {
        return domain(format!("test wave has dimension {}, measure has {d}", f.dim()));
    }
    let (center, freq) = f.parts();
    let bx = mu.support_box();
    if bx.iter().any(|(lo, hi)| hi <= lo) {
        let z = Complex64::new(0.0, 0.0);
        return Ok(SplitEval {
            low: z,
            mid: z,
            high: z,
            truncation: 0.0,
            nodes: 0,
        });
    }
    // total variation of μ and the extent of its support image
    let nodes_per_axis = match bx.len() {
        1 => 400,
        2 => 100,
        _ => 30,
    };
    let mass = tensor_integrate(&bx, nodes_per_axis, |t| Complex64::new(mu.density(t).abs(), 0.0)).re;
    let extent = image_extent(mu, &bx);

    // frequency half-width per axis from the tail of the axis factors
    let mut a = 1.0
        / match f {
            TestWave::Gaussian { sigma, .. } => *sigma,
            TestWave::BumpWave { half_width, .. } => *half_width,
        };
    let truncation = loop {
        let (full, tail) = f.axis_l1(a);
        let bound = mass * d as f64 * tail * full.powi(d as i32 - 1);
        let scale = mass * full.powi(d as i32);
        if bound <= cfg.tail_tol * scale {
            break bound;
        }
        a *= 1.25;
        if a > 1e4 {
            return resource("frequency truncation half-width", a, 1e4);
        }
    };

    let gl = GaussLegendre::new(10);
    let axes: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|i| {
            let osc = extent[i] + center[i].abs() + 1.0;
            let width = (2.0 / osc).min(split.rho * split.t / 4.0);
            let panels = ((2.0 * a) / width).ceil().max(1.0) as usize;
            gl.composite_nodes(freq[i] - a, freq[i] + a, panels)
        })
        .collect();
    let nodes: u64 = axes.iter().map(|v| v.len() as u64).product();
    if nodes > cfg.budget {
        return resource("frequency quadrature nodes", nodes as f64, cfg.budget as f64);
    }
    let factors: Vec<Vec<Complex64>> = axes
        .iter()
        .enumerate()
        .map(|(i, ax)| ax.iter().map(|&(x, w)| f.axis_transform(i, x) * w).collect())
        .collect();

    let mut acc = [Complex64::new(0.0, 0.0); 3];
    const BATCH: u64 = 512;
    let mut start = 0;
    while start < nodes {
        let end = (start + BATCH).min(nodes);
        let mut xis = Vec::with_capacity((end - start) as usize);
        let mut fw = Vec::with_capacity((end - start) as usize);
        for mut k in start..end {
            let mut xi = vec![0.0; d];
            let mut v = Complex64::new(1.0, 0.0);
            for i in 0..d {
                let j = (k % axes[i].len() as u64) as usize;
                k /= axes[i].len() as u64;
                xi[i] = axes[i][j].0;
                v *= factors[i][j];
            }
            xis.push(xi);
            fw.push(v);
        }
        let ft = measure_fourier_batch(mu, &xis, &cfg.fourier)?;
        for ((xi, v), m) in xis.iter().zip(&fw).zip(&ft) {
            let r = xi.iter().map(|a| a * a).sum::<f64>().sqrt();
            let term = v * m.conj();
            for (a, w) in acc.iter_mut().zip(split.weights(r)) {
                *a += term * w;
            }
        }
        start = end;
    }
    Ok(SplitEval {
        low: acc[0],
        mid: acc[1],
        high: acc[2],
        truncation,
        nodes,
    })
}

/// `max |x_i|` over the image of the support box.
fn image_extent<M: Measure + ?Sized>(mu: &M, bx: &[(f64, f64)]) -> Vec<f64> {
    let map = mu.map();
    let (m, d) = (map.m(), map.d());
    let per: u64 = 65;
    let mut ext = vec![0.0f64; d];
    let mut t = vec![0.0; m];
    let mut x = vec![0.0; d];
    for mut k in 0..per.pow(m as u32) {
        for i in 0..m {
            let j = k % per;
            k /= per;
            t[i] = bx[i].0 + (bx[i].1 - bx[i].0) * j as f64 / (per - 1) as f64;
        }
        map.eval_into(&t, &mut x);
        for (e, v) in ext.iter_mut().zip(&x) {
            *e = e.max(v.abs());
        }
    }
    ext
}

/// `μ(f) = ∫ f(φ(t)) dμ(t)` by tensor Gauss–Legendre quadrature.
pub fn direct_eval<M: Measure + ?Sized>(mu: &M, f: &TestWave, nodes_per_axis: usize) -> Result<Complex64> {
    f.validate()?;
    let map = mu.map();
    if f.dim() != map.d() {
        return domain("test wave and measure differ in dimension");
    }
    let d = map.d();
    Ok(tensor_integrate(&mu.support_box(), nodes_per_axis, |t| {
        let rho = mu.density(t);
        if rho == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut x = [0.0; 32];
        map.eval_into(t, &mut x[..d]);
        f.eval(&x[..d]) * rho
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::submanifold::{localize, Density, PolyGraphMap, SurfaceMeasure};

    fn parabola_measure(h: f64) -> SurfaceMeasure {
        let w = Poly::new(1, vec![(vec![2], 1.0)]).unwrap();
        let map = PolyGraphMap::new(1, vec![w]).unwrap();
        SurfaceMeasure::new(map, Density::bump(1, h).unwrap()).unwrap()
    }

    #[test]
    fn zero_frequency_is_mass() {
        let mu = parabola_measure(0.8);
        let v = measure_fourier(&mu, &[0.0, 0.0], &FourierConfig::default()).unwrap();
        assert!((v.value.re - 1.0).abs() < 1e-9, "{:?}", v);
        assert!(v.value.im.abs() < 1e-12);
    }

    #[test]
    fn even_measure_has_real_transform() {
        let mu = parabola_measure(0.8);
        let v = measure_fourier(&mu, &[3.0, 0.0], &FourierConfig::default()).unwrap();
        assert!(v.value.im.abs() < 1e-10, "{:?}", v);
        let w = Poly::new(1, vec![(vec![3], 1.0)]).unwrap();
        let map = PolyGraphMap::new(1, vec![w]).unwrap();
        let odd = SurfaceMeasure::new(map, Density::bump(1, 0.8).unwrap()).unwrap();
        let v = measure_fourier(&odd, &[3.0, 5.0], &FourierConfig::default()).unwrap();
        assert!(v.value.im.abs() < 1e-10, "{:?}", v);
    }

    #[test]
    fn parabola_matches_dense_quadrature() {
        let mu = parabola_measure(0.8);
        let xi = [0.0, 8.0];
        let v = measure_fourier(&mu, &xi, &FourierConfig::default()).unwrap();
        // dense composite trapezoid oracle
        let n = 1_000_000;
        let h = 1.6 / n as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let t = -0.8 + (k as f64 + 0.5) * h;
            s += Complex64::from_polar(mu.density(&[t]) * h, -TAU * 8.0 * t * t);
        }
        assert!((v.value - s).norm() < 1e-8, "{} vs {}", v.value, s);
    }

    #[test]
    fn budget_is_enforced() {
        let mu = parabola_measure(0.8);
        let cfg = FourierConfig {
            budget: 100,
            ..FourierConfig::default()
        };
        assert!(matches!(
            measure_fourier(&mu, &[0.0, 1e3], &cfg),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn partition_is_exact() {
        let s = FrequencySplit::new(0.5, 10.0).unwrap();
        for k in 0..10_000 {
            let r = k as f64 * 0.01;
            let w = s.weights(r);
            assert_eq!(w.iter().sum::<f64>(), 1.0);
            assert!(w.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn gaussian_transform_closed_form() {
        let f = TestWave::Gaussian {
            sigma: 0.7,
            center: vec![0.2],
            freq: vec![1.5],
        };
        let xi = 2.1;
        let gl = GaussLegendre::new(10);
        let re = gl.integrate(-8.0, 8.0, 400, |x| {
            (f.eval(&[x]) * Complex64::from_polar(1.0, -TAU * xi * x)).re
        });
        let im = gl.integrate(-8.0, 8.0, 400, |x| {
            (f.eval(&[x]) * Complex64::from_polar(1.0, -TAU * xi * x)).im
        });
        assert!((f.fourier(&[xi]) - Complex64::new(re, im)).norm() < 1e-12);
    }

    #[test]
    fn stationary_rejects_tangent_direction() {
        let mu = parabola_measure(0.8);
        let loc = localize(&mu, &[0.0, 0.0], 0.25).unwrap();
        let ks: Vec<f64> = (0..5).map(|i| 16.0 * 2f64.powi(i)).collect();
        assert!(stationary_scaling(&loc, &[1.0, 0.0], &ks, &FourierConfig::default()).is_err());
        assert!(check_dyadic(&[1.0, 2.0, 4.0, 8.0]).is_err());
        assert!(check_dyadic(&[1.0, 2.0, 4.0, 8.0, 15.0]).is_err());
        assert!(check_dyadic(&[1.0, 1.5, 2.25, 3.375, 5.0625]).is_err());
        let fine: Vec<f64> = (0..9).map(|i| 16.0 * 2f64.powf(i as f64 / 2.0)).collect();
        assert!(check_dyadic(&fine).is_ok());
    }
}
