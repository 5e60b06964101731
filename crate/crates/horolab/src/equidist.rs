//! Translates of graph measures on `(SL(2,R)/SL(2,Z))^d` and the decay of
//! their discrepancy, plus the mixing and horocycle probes.

use crate::error::{domain, resource, Error, Result};
use crate::fit::{mean_stderr, quantile, scatter_line, slope_stderr, weighted_line};
use crate::homspace::{haar_integral_quotient, Factor, FactorizableTestFn, GElem, QuotientSampler};
use crate::policy::NumericPolicy;
use crate::qmc::{ScrambledHalton, ShiftedLattice};
use crate::rng::Substream;
use crate::sl2::{make_a, make_u, Mat2};
use crate::submanifold::{Measure, SurfaceMeasure};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// `N(y) = min(N_max, N₀ ⌈1/y⌉^{min(m, 2)})`, split over replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSchedule {
    pub base: u64,
    pub cap: u64,
    pub replicates: u32,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        SampleSchedule {
            base: 512,
            cap: 1 << 22,
            replicates: 8,
        }
    }
}

impl SampleSchedule {
    pub fn count(&self, y: f64, m: usize) -> u64 {
        let expand = (1.0 / y).ceil();
        let n = self.base as f64 * expand.powi(m.min(2) as i32);
        n.min(self.cap as f64) as u64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SampleSchedule {
            base: ((self.base as f64 * factor).round() as u64).max(1),
            cap: ((self.cap as f64 * factor).round() as u64).max(1),
            replicates: self.replicates,
        }
    }
}

/// `y ↦ ∫ f(a_y u_{φ(t)} x₀) dλ_S(t)` for a fixed measure, basepoint and
/// test function.
#[derive(Debug, Clone)]
pub struct TranslateExperiment {
    measure: SurfaceMeasure,
    basepoint: GElem,
    testfn: FactorizableTestFn,
    ys: Vec<f64>,
    schedule: SampleSchedule,
    seed: u64,
}

impl TranslateExperiment {
    pub fn new(
        measure: SurfaceMeasure,
        basepoint: GElem,
        testfn: FactorizableTestFn,
        ys: Vec<f64>,
        schedule: SampleSchedule,
        seed: u64,
    ) -> Result<Self> {
        let d = measure.map().d();
        if basepoint.dim() != d || testfn.dim() != d {
            return domain(format!(
                "measure lives in dimension {d}, basepoint has {} factors, test function {}",
                basepoint.dim(),
                testfn.dim()
            ));
        }
        check_y_grid(&ys)?;
        if schedule.replicates < 2 || schedule.base == 0 {
            return domain("schedule needs a positive base and at least two replicates");
        }
        Ok(TranslateExperiment {
            measure,
            basepoint,
            testfn,
            ys,
            schedule,
            seed,
        })
    }

    pub fn measure(&self) -> &SurfaceMeasure {
        &self.measure
    }

    pub fn basepoint(&self) -> &GElem {
        &self.basepoint
    }

    pub fn testfn(&self) -> &FactorizableTestFn {
        &self.testfn
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn schedule(&self) -> &SampleSchedule {
        &self.schedule
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_schedule(&self, schedule: SampleSchedule) -> Self {
        TranslateExperiment {
            schedule,
            ..self.clone()
        }
    }
}

fn check_y_grid(ys: &[f64]) -> Result<()> {
    if ys.is_empty() {
        return domain("y grid is empty");
    }
    if ys.iter().any(|y| !(*y > 0.0 && *y <= 1.0)) {
        return domain("y values must lie in (0, 1]");
    }
    if ys.windows(2).any(|w| w[1] >= w[0]) {
        return domain("y grid must be strictly decreasing");
    }
    Ok(())
}

/// A randomized estimate together with its replicate values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedValue {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub replicates: Vec<f64>,
}

enum PointSet {
    Lattice(ShiftedLattice),
    Halton(ScrambledHalton),
}

impl PointSet {
    fn new(m: usize, min_points: u64, stream: Substream) -> Result<Self> {
        if m <= 2 {
            Ok(PointSet::Lattice(ShiftedLattice::random(m, min_points, stream)?))
        } else {
            Ok(PointSet::Halton(ScrambledHalton::new(m, stream)?))
        }
    }

    fn len(&self, min_points: u64) -> u64 {
        match self {
            PointSet::Lattice(l) => l.len(),
            PointSet::Halton(_) => min_points,
        }
    }

    fn point(&self, i: u64, out: &mut [f64]) {
        match self {
            PointSet::Lattice(l) => l.point(i, out),
            PointSet::Halton(h) => h.point(i, out),
        }
    }
}

/// Sums `(f ρ, ρ)` over a point set, propagating the first evaluation error
/// in index order.
fn weighted_sum<F>(n: u64, f: F) -> Result<[f64; 2]>
where
    F: Fn(u64) -> Result<(f64, f64)> + Sync + Send,
{
    crate::par::map_reduce(
        n,
        crate::par::CHUNK,
        |r| {
            let mut acc = [0.0; 2];
            for i in r {
                let (v, w) = f(i)?;
                acc[0] += v;
                acc[1] += w;
            }
            Ok(acc)
        },
        |a: Result<[f64; 2]>, b: Result<[f64; 2]>| {
            let a = a?;
            let b = b?;
            Ok([a[0] + b[0], a[1] + b[1]])
        },
    )
    .unwrap_or(Ok([0.0; 2]))
}

/// Randomized lattice (or scrambled Halton for `m > 2`) estimate of the
/// translate integral at `y`, self-normalized so constants are exact.
pub fn translate_integral(exp: &TranslateExperiment, y: f64) -> Result<ReplicatedValue> {
    let a = make_a(y)?;
    let map = exp.measure.map();
    let (m, d) = (map.m(), map.d());
    let total = exp.schedule.count(y, m);
    let reps = exp.schedule.replicates as u64;
    let per = (total / reps).max(1);
    let bx = exp.measure.support_box();
    let stream = Substream::new(exp.seed, "equidist.translate");
    let x0 = exp.basepoint.factors();
    let factors = exp.testfn.factors();
    let scale = exp.testfn.scale();
    let mut values = Vec::with_capacity(reps as usize);
    let mut samples = 0;
    for r in 0..reps {
        let set = PointSet::new(m, per, stream.child(r))?;
        let n = set.len(per);
        samples += n;
        let s = weighted_sum(n, |i| {
            let mut u = [0.0; 16];
            set.point(i, &mut u[..m]);
            let mut t = [0.0; 16];
            for k in 0..m {
                t[k] = bx[k].0 + (bx[k].1 - bx[k].0) * u[k];
            }
            let rho = exp.measure.unnormalized(&t[..m]);
            if rho == 0.0 {
                return Ok((0.0, 0.0));
            }
            let mut x = [0.0; 32];
            map.eval_into(&t[..m], &mut x[..d]);
            let mut v = scale;
            for j in 0..d {
                let g = a * make_u(x[j]) * x0[j];
                v *= factors[j].eval(&g)?;
                if v == 0.0 {
                    break;
                }
            }
            Ok((v * rho, rho))
        })?;
        values.push(if s[1] > 0.0 { s[0] / s[1] } else { 0.0 });
    }
    let (value, stderr) = mean_stderr(&values);
    Ok(ReplicatedValue {
        value,
        stderr,
        samples,
        replicates: values,
    })
}

/// Power-law exponent with its bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    /// `c` in `value ∝ scale^{-c}`.
    pub exponent: f64,
    /// 95 % percentile bootstrap interval: replicate resampling plus a
    /// random-sign perturbation of size `scatter` on each log value.
    pub ci: Option<(f64, f64)>,
    pub slope_stderr: f64,
    /// Excess scatter of `log value` about the line beyond sampling noise.
    pub scatter: f64,
    pub residual: f64,
}

impl ExponentFit {
    /// False when the interval contains zero.
    pub fn distinguishable_from_zero(&self) -> bool {
        match self.ci {
            Some((lo, hi)) => lo > 0.0 || hi < 0.0,
            None => false,
        }
    }

    pub fn ci_half_width(&self) -> Option<f64> {
        self.ci.map(|(lo, hi)| 0.5 * (hi - lo))
    }
}

/// Per-`y` measurements and the fitted decay exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub ys: Vec<f64>,
    /// Measured magnitudes (discrepancy, correlation or integral modulus).
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub samples: Vec<u64>,
    /// Fit abscissa: `1/y` for translates and horocycles, `‖a(y)‖` for mixing.
    pub scales: Vec<f64>,
    /// Points entering the fit (`stderr < 0.25 · value`).
    pub used: Vec<bool>,
    pub fit: Option<ExponentFit>,
}

/// Bootstrap draws for rate intervals.
pub const BOOTSTRAP_DRAWS: usize = 2000;

struct RateInput<'a> {
    ys: &'a [f64],
    scales: Vec<f64>,
    /// Replicate estimates per y, mapped to magnitudes by `magnitude`.
    replicates: Vec<Vec<f64>>,
    values: Vec<f64>,
    stderrs: Vec<f64>,
    samples: Vec<u64>,
}

fn rate_fit(input: RateInput, magnitude: &(dyn Fn(f64) -> f64 + Sync), seed: u64, bootstrap: bool) -> RateFit {
    let max_rel = NumericPolicy::DEFAULT.rate_fit_max_rel_stderr;
    let used: Vec<bool> = input
        .values
        .iter()
        .zip(&input.stderrs)
        .map(|(v, s)| *v > 0.0 && v.is_finite() && *s < max_rel * v)
        .collect();
    let idx: Vec<usize> = (0..used.len()).filter(|&i| used[i]).collect();
    let x: Vec<f64> = idx.iter().map(|&i| input.scales[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| input.values[i].ln()).collect();
    let var: Vec<f64> = idx
        .iter()
        .map(|&i| (input.stderrs[i] / input.values[i]).powi(2))
        .collect();
    let fit = if idx.len() < 2 {
        None
    } else {
        scatter_line(&x, &ly, &var).ok().map(|(line, scatter)| {
            let w: Vec<f64> = var.iter().map(|v| 1.0 / (v + scatter).max(1e-300)).collect();
            let resample = bootstrap && idx.iter().all(|&i| input.replicates[i].len() >= 2);
            let stream = Substream::new(seed, "equidist.bootstrap");
            let sigma = scatter.sqrt();
            let draws: Vec<f64> = crate::par::map_indexed(BOOTSTRAP_DRAWS, |b| {
                let mut rng = stream.at(b as u64);
                let mut yb = Vec::with_capacity(idx.len());
                for (k, &i) in idx.iter().enumerate() {
                    let base = if resample {
                        let reps = &input.replicates[i];
                        let n = reps.len();
                        let mean = (0..n).map(|_| reps[rng.gen_range(0..n)]).sum::<f64>() / n as f64;
                        magnitude(mean).ln()
                    } else {
                        ly[k]
                    };
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    yb.push(base + sign * sigma);
                }
                if yb.iter().any(|v| !v.is_finite()) {
                    return f64::NAN;
                }
                weighted_line(&x, &yb, &w).map(|l| -l.slope).unwrap_or(f64::NAN)
            });
            let mut sorted: Vec<f64> = draws.into_iter().filter(|v| v.is_finite()).collect();
            sorted.sort_by(f64::total_cmp);
            let ci =
                (sorted.len() * 2 >= BOOTSTRAP_DRAWS).then(|| (quantile(&sorted, 0.025), quantile(&sorted, 0.975)));
            ExponentFit {
                exponent: -line.slope,
                ci,
                slope_stderr: slope_stderr(&x, &w),
                scatter: sigma,
                residual: line.residual,
            }
        })
    };
    RateFit {
        ys: input.ys.to_vec(),
        values: input.values,
        stderrs: input.stderrs,
        samples: input.samples,
        scales: input.scales,
        used,
        fit,
    }
}

/// Minimum usable points for a discrepancy fit.
pub const MIN_FIT_POINTS: usize = 4;

/// `D(y) = |translate_integral(y) - ∫ f dμ|` over the y grid and its decay
/// exponent, with a bootstrap interval over the randomization replicates.
pub fn discrepancy_curve(exp: &TranslateExperiment) -> Result<RateFit> {
    let (fit, _) = discrepancy_curve_with_values(exp)?;
    Ok(fit)
}

/// As [`discrepancy_curve`], also returning the raw translate estimates.
pub fn discrepancy_curve_with_values(exp: &TranslateExperiment) -> Result<(RateFit, Vec<ReplicatedValue>)> {
    let target = haar_integral_quotient(&exp.testfn);
    let raw: Vec<ReplicatedValue> = exp
        .ys
        .iter()
        .map(|&y| translate_integral(exp, y))
        .collect::<Result<_>>()?;
    let input = RateInput {
        ys: &exp.ys,
        scales: exp.ys.iter().map(|y| 1.0 / y).collect(),
        replicates: raw.iter().map(|r| r.replicates.clone()).collect(),
        values: raw.iter().map(|r| (r.value - target).abs()).collect(),
        stderrs: raw.iter().map(|r| r.stderr).collect(),
        samples: raw.iter().map(|r| r.samples).collect(),
    };
    let fit = rate_fit(input, &|v| (v - target).abs(), exp.seed, true);
    let n_used = fit.used.iter().filter(|&&u| u).count();
    if n_used < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "only {n_used} y values have stderr below a quarter of D(y); need {MIN_FIT_POINTS}"
        )));
    }
    Ok((fit, raw))
}

/// `‖a(y)‖` in the Frobenius norm.
pub fn diagonal_norm(y: f64) -> f64 {
    (y + 1.0 / y).sqrt()
}

/// Sample correlation `mean[f₁(a(y)g) f₂(g)] - mean[f₁(a(y)g)] mean[f₂(g)]`
/// over Haar-random `g`, for each `y`, with the decay exponent against
/// `‖a(y)‖`. The same samples are used at every `y`.
pub fn mixing_probe(f1: &Factor, f2: &Factor, ys: &[f64], samples: u64, replicates: u32, seed: u64) -> Result<RateFit> {
    check_y_grid(ys)?;
    if replicates < 2 || samples < 2 * replicates as u64 {
        return domain("mixing probe needs at least two replicates with two samples each");
    }
    let sampler = QuotientSampler::new(seed, 1);
    let per = samples / replicates as u64;
    let mut replicate_vals = Vec::with_capacity(ys.len());
    let mut values = Vec::with_capacity(ys.len());
    let mut stderrs = Vec::with_capacity(ys.len());
    for &y in ys {
        let a = make_a(y)?;
        let mut cors = Vec::with_capacity(replicates as usize);
        for r in 0..replicates as u64 {
            // Σ f₁f₂, Σ f₁, Σ f₂ over replicate r
            let s = crate::par::map_reduce(
                per,
                crate::par::CHUNK,
                |range| -> Result<[f64; 3]> {
                    let mut acc = [0.0; 3];
                    for i in range {
                        let g = sampler.point(r * per + i);
                        let g = g.factor(0);
                        let v2 = f2.eval(g)?;
                        let v1 = f1.eval(&(a * *g))?;
                        acc[0] += v1 * v2;
                        acc[1] += v1;
                        acc[2] += v2;
                    }
                    Ok(acc)
                },
                |a, b| {
                    let (a, b) = (a?, b?);
                    Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                },
            )
            .unwrap_or(Ok([0.0; 3]))?;
            let n = per as f64;
            cors.push(s[0] / n - (s[1] / n) * (s[2] / n));
        }
        let (mean, se) = mean_stderr(&cors);
        values.push(mean);
        stderrs.push(se);
        replicate_vals.push(cors);
    }
    let input = RateInput {
        ys,
        scales: ys.iter().map(|&y| diagonal_norm(y)).collect(),
        replicates: replicate_vals,
        values: values.iter().map(|v| v.abs()).collect(),
        stderrs,
        samples: vec![per * replicates as u64; ys.len()],
    };
    Ok(rate_fit(input, &f64::abs, seed, true))
}

/// Compactly supported weight `ψ(t) = bump((t - center)/half_width)` on `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: f64,
    pub half_width: f64,
}

impl Window {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() || !half_width.is_finite() {
            return domain("window needs a finite center and positive half-width");
        }
        Ok(Window { center, half_width })
    }

    pub fn eval(&self, t: f64) -> f64 {
        crate::bump::bump((t - self.center) / self.half_width)
    }

    /// `∫ ψ(t) e(ct) dt`.
    pub fn fourier(&self, c: f64) -> Complex64 {
        let s = self.half_width * crate::fourier::bump_transform(c * self.half_width);
        Complex64::from_polar(s, 2.0 * PI * c * self.center)
    }
}

/// Resolution of the horocycle quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorocycleConfig {
    /// Points per unit `t` per unit of `1/y + |c|`.
    pub density: f64,
    /// Maximum points.
    pub cap: u64,
    /// Subtract the quotient mean of `f₀` before integrating.
    pub centered: bool,
}

impl Default for HorocycleConfig {
    fn default() -> Self {
        HorocycleConfig {
            density: 64.0,
            cap: 1 << 26,
            centered: true,
        }
    }
}

/// Value of the horocycle integral at one `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorocycleValue {
    pub value: Complex64,
    /// Half the gap between the two interleaved trapezoid grids.
    pub stderr: f64,
    pub samples: u64,
}

/// `∫ f₀(a(y) u(t) x₀) ψ(t) e(ct) dt` by the trapezoid rule on the support of
/// `ψ`.
pub fn horocycle_integral(
    f0: &Factor,
    x0: &Mat2,
    psi: &Window,
    c: f64,
    y: f64,
    cfg: &HorocycleConfig,
) -> Result<HorocycleValue> {
    let a = make_a(y)?;
    let mean = if cfg.centered { f0.quotient_mean() } else { 0.0 };
    let len = 2.0 * psi.half_width;
    let n = (cfg.density * len * (1.0 / y + c.abs())).ceil().max(16.0);
    if n * 2.0 > cfg.cap as f64 {
        return resource("horocycle quadrature points", 2.0 * n, cfg.cap as f64);
    }
    let n = n as u64;
    let h = len / n as f64;
    let lo = psi.center - psi.half_width;
    let s = crate::par::map_reduce(
        2 * n,
        crate::par::CHUNK,
        |range| -> Result<[f64; 4]> {
            let mut acc = [0.0; 4];
            for k in range {
                // even k: nodes lo + j h; odd k: midpoints
                let t = lo + 0.5 * k as f64 * h;
                let w = psi.eval(t);
                if w == 0.0 {
                    continue;
                }
                let v = (f0.eval(&(a * make_u(t) * *x0))? - mean) * w * h;
                let (sn, cs) = (2.0 * PI * c * t).sin_cos();
                let slot = 2 * (k % 2) as usize;
                acc[slot] += v * cs;
                acc[slot + 1] += v * sn;
            }
            Ok(acc)
        },
        |a, b| {
            let (a, b) = (a?, b?);
            Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
        },
    )
    .unwrap_or(Ok([0.0; 4]))?;
    let even = Complex64::new(s[0], s[1]);
    let odd = Complex64::new(s[2], s[3]);
    Ok(HorocycleValue {
        value: (even + odd) * 0.5,
        stderr: (even - odd).norm() * 0.5,
        samples: 2 * n,
    })
}

/// Horocycle integrals over a y grid and the decay exponent of their modulus
/// in `1/y`.
pub fn horocycle_character_probe(
    f0: &Factor,
    x0: &Mat2,
    psi: &Window,
    c: f64,
    ys: &[f64],
    cfg: &HorocycleConfig,
) -> Result<(RateFit, Vec<HorocycleValue>)> {
    check_y_grid(ys)?;
    let vals: Vec<HorocycleValue> = ys
        .iter()
        .map(|&y| horocycle_integral(f0, x0, psi, c, y, cfg))
        .collect::<Result<_>>()?;
    let input = RateInput {
        ys,
        scales: ys.iter().map(|y| 1.0 / y).collect(),
        replicates: vec![Vec::new(); ys.len()],
        values: vals.iter().map(|v| v.value.norm()).collect(),
        stderrs: vals.iter().map(|v| v.stderr).collect(),
        samples: vals.iter().map(|v| v.samples).collect(),
    };
    Ok((rate_fit(input, &f64::abs, 0, false), vals))
}
