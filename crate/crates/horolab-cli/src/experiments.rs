//! One runner per experiment kind.

use horolab::curvature::{
    analytic_diagonalize, cell_centered_grid, certify_region, sublevel_exponent, PhiFamily, SphereSearch,
};
use horolab::equidist::{
    discrepancy_curve_with_values, horocycle_character_probe, mixing_probe, HorocycleConfig as ProbeConfig, RateFit,
    SampleSchedule, TranslateExperiment, Window,
};
use horolab::fourier::{directional_decay, l2_shell_decay, DecayFit, FourierConfig, ShellConfig};
use horolab::homspace::{AutoBumpFactor, Factor, FactorizableTestFn, GElem};
use horolab::poly::Poly;
use horolab::qmc::ScrambledHalton;
use horolab::rng::Substream;
use horolab::sl2::{iwasawa_recompose, IwasawaCoords, Mat2};
use horolab::submanifold::{localize, Density, PolyGraphMap, SurfaceMeasure};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    ExperimentConfig, ExperimentKind, FactorConfig, FourierMode, IwasawaPoint, PolyConfig, SubmanifoldConfig,
};
use crate::CliError;

/// Rows of the CSV data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// A declared threshold and whether the run met it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: ">=",
            threshold,
            passed: value >= threshold,
        }
    }

    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            comparison: "<=",
            threshold,
            passed: value <= threshold,
        }
    }

    fn flag(name: &str, value: bool, expected: bool) -> Self {
        Check {
            name: name.into(),
            value: f64::from(u8::from(value)),
            comparison: "==",
            threshold: f64::from(u8::from(expected)),
            passed: value == expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub results: Value,
    pub checks: Vec<Check>,
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

fn poly(p: &PolyConfig, nvars: usize) -> Result<Poly, CliError> {
    Ok(Poly::new(
        nvars,
        p.terms.iter().map(|t| (t.exp.clone(), t.coef)).collect(),
    )?)
}

fn graph_map(s: &SubmanifoldConfig) -> Result<PolyGraphMap, CliError> {
    let w = s.w.iter().map(|p| poly(p, s.m)).collect::<Result<_, _>>()?;
    Ok(PolyGraphMap::new(s.m, w)?)
}

fn surface_measure(cfg: &ExperimentConfig) -> Result<SurfaceMeasure, CliError> {
    let s = cfg.submanifold.as_ref().expect("validated");
    let map = graph_map(s)?;
    let d = cfg.density.clone().unwrap_or_default();
    let density = match &d.factor {
        Some(f) => Density::new(d.half_width, poly(f, s.m)?)?,
        None => Density::bump(s.m, d.half_width)?,
    };
    Ok(SurfaceMeasure::new(map, density)?)
}

fn factor(f: &FactorConfig) -> Result<Factor, CliError> {
    Ok(match *f {
        FactorConfig::One => Factor::One,
        FactorConfig::Bump { x, y, theta, radius } => {
            Factor::Bump(AutoBumpFactor::from_iwasawa(IwasawaCoords { x, y, theta }, radius)?)
        }
    })
}

fn point(p: &IwasawaPoint) -> Result<Mat2, CliError> {
    Ok(iwasawa_recompose(&IwasawaCoords {
        x: p.x,
        y: p.y,
        theta: p.theta,
    })?)
}

fn scaled(n: u64, scale: f64) -> u64 {
    ((n as f64 * scale).round() as u64).max(1)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.experiment {
        ExperimentKind::CertifyCurvature => certify(cfg),
        ExperimentKind::Sublevel => sublevel(cfg),
        ExperimentKind::DiagonalizeDemo => diagonalize(cfg),
        ExperimentKind::FourierDecay => fourier(cfg),
        ExperimentKind::Equidistribute => equidistribute(cfg),
        ExperimentKind::Mixing => mixing(cfg),
        ExperimentKind::Horocycle => horocycle(cfg),
    }
}

fn certify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = cfg.submanifold.as_ref().expect("validated");
    let c = cfg.curvature.as_ref().expect("validated");
    let map = graph_map(s)?;
    let grid = cell_centered_grid(s.m, c.grid_per_axis, c.grid_half_width);
    let search = SphereSearch {
        grid_points: c.sphere_points,
        ..SphereSearch::default()
    };
    let cert = certify_region(&map, &grid, c.delta, &search)?;
    let mut header: Vec<String> = (1..=s.m).map(|i| format!("t{i}")).collect();
    header.extend(["e_star", "coeff_system_min", "delta_curved", "primitive_dim", "flagged"].map(String::from));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for r in &cert.reports {
        let mut row: Vec<String> = r.t.iter().copied().map(num).collect();
        row.push(num(r.e_star));
        row.push(num(r.coeff_system_min));
        row.push(r.is_delta_curved.to_string());
        row.push(r.primitive_dim.to_string());
        row.push(r.flagged.to_string());
        table.rows.push(row);
    }
    let e_min = cert.reports.iter().map(|r| r.e_star).fold(f64::INFINITY, f64::min);
    let e_max = cert.reports.iter().map(|r| r.e_star).fold(f64::NEG_INFINITY, f64::max);
    let t = &cfg.thresholds;
    let mut checks = Vec::new();
    if let Some(b) = t.e_star_min {
        checks.push(Check::at_least("e_star_min", e_min, b));
    }
    if let Some(b) = t.e_star_max {
        checks.push(Check::at_most("e_star_max", e_max, b));
    }
    if let Some(b) = t.max_non_curved_fraction {
        checks.push(Check::at_most("max_non_curved_fraction", cert.non_curved_fraction, b));
    }
    Ok(Outcome {
        table,
        results: json!({
            "points": cert.reports.len(),
            "e_star_min": e_min,
            "e_star_max": e_max,
            "non_curved_fraction": cert.non_curved_fraction,
            "flagged_points": cert.reports.iter().filter(|r| r.flagged).count(),
        }),
        checks,
    })
}

fn sublevel(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.sublevel.as_ref().expect("validated");
    let u = poly(&c.u, c.nvars)?;
    let samples = scaled(c.samples, cfg.budget_scale);
    let fit = sublevel_exponent(&u, &c.deltas, samples, cfg.seed)?;
    let mut table = Table::new(&["delta", "fraction", "stderr", "hits", "used"]);
    for i in 0..fit.deltas.len() {
        let p = fit.fractions[i];
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        table.rows.push(vec![
            num(fit.deltas[i]),
            num(p),
            num(se),
            fit.hits[i].to_string(),
            fit.used[i].to_string(),
        ]);
    }
    let t = &cfg.thresholds;
    let mut checks = Vec::new();
    if let Some(b) = t.exponent_min {
        checks.push(Check::at_least("exponent_min", fit.exponent, b));
    }
    if let Some(b) = t.exponent_max {
        checks.push(Check::at_most("exponent_max", fit.exponent, b));
    }
    Ok(Outcome {
        table,
        results: json!({
            "exponent": fit.exponent,
            "residual": fit.residual,
            "samples": samples,
        }),
        checks,
    })
}

fn diagonalize(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.diagonalize.as_ref().expect("validated");
    let l = c.lambda.len();
    let rows = c
        .phi
        .iter()
        .map(|row| row.iter().map(|p| poly(p, l)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let phi = PhiFamily::new(l, rows)?;
    let seq = ScrambledHalton::new(l, Substream::new(cfg.seed, "cli.diagonalize"))?;
    let points: Vec<Vec<f64>> = (0..c.points as u64)
        .map(|i| {
            let mut u = vec![0.0; l];
            seq.point(i, &mut u);
            u.iter().map(|v| c.radius * (2.0 * v - 1.0)).collect()
        })
        .collect();
    let mut header = vec!["delta".to_string(), "point".to_string()];
    header.extend((1..=l).map(|i| format!("x{i}")));
    header.extend(["residual", "jacobian_det"].map(String::from));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut max_residual: f64 = 0.0;
    let mut det_slope: f64 = 0.0;
    for &delta in &c.deltas {
        for (k, x) in points.iter().enumerate() {
            let r = analytic_diagonalize(&c.lambda, &phi, delta, x)?;
            max_residual = max_residual.max(r.residual);
            if delta > 0.0 {
                det_slope = det_slope.max((r.jacobian_det - 1.0).abs() / delta);
            }
            let mut row = vec![num(delta), k.to_string()];
            row.extend(x.iter().copied().map(num));
            row.push(num(r.residual));
            row.push(num(r.jacobian_det));
            table.rows.push(row);
        }
    }
    let t = &cfg.thresholds;
    let mut checks = Vec::new();
    if let Some(b) = t.max_residual {
        checks.push(Check::at_most("max_residual", max_residual, b));
    }
    if let Some(b) = t.max_det_slope {
        checks.push(Check::at_most("max_det_slope", det_slope, b));
    }
    Ok(Outcome {
        table,
        results: json!({ "max_residual": max_residual, "det_slope": det_slope }),
        checks,
    })
}

fn decay_outcome(fit: &DecayFit, cfg: &ExperimentConfig) -> Outcome {
    let mut table = Table::new(&["K", "value", "stderr"]);
    for i in 0..fit.ks.len() {
        table
            .rows
            .push(vec![num(fit.ks[i]), num(fit.values[i]), num(fit.stderrs[i])]);
    }
    let t = &cfg.thresholds;
    let mut checks = Vec::new();
    if let Some(b) = t.slope_min {
        checks.push(Check::at_least("slope_min", fit.slope, b));
    }
    if let Some(b) = t.slope_max {
        checks.push(Check::at_most("slope_max", fit.slope, b));
    }
    Outcome {
        table,
        results: json!({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual": fit.residual,
        }),
        checks,
    }
}

fn fourier(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.fourier.as_ref().expect("validated");
    let mu = surface_measure(cfg)?;
    let fc = FourierConfig {
        margin: c.margin as usize,
        seed: cfg.seed,
        ..FourierConfig::default()
    };
    let loc = match (&c.x0, c.beta) {
        (Some(x0), Some(beta)) => Some(localize(&mu, x0, beta)?),
        _ => None,
    };
    let fit = match c.mode {
        FourierMode::Shell => {
            let shell = ShellConfig {
                samples: scaled(c.samples, cfg.budget_scale),
                replicates: c.replicates,
                fourier: fc,
            };
            l2_shell_decay(loc.as_ref().expect("validated"), &c.ks, &shell)?
        }
        FourierMode::Direction => {
            let dir = c.direction.as_ref().expect("validated");
            match &loc {
                Some(l) => directional_decay(l, dir, &c.ks, &fc)?,
                None => directional_decay(&mu, dir, &c.ks, &fc)?,
            }
        }
    };
    Ok(decay_outcome(&fit, cfg))
}

fn rate_checks(fit: &RateFit, cfg: &ExperimentConfig, checks: &mut Vec<Check>) {
    let t = &cfg.thresholds;
    let exponent = fit.fit.map(|f| f.exponent).unwrap_or(f64::NAN);
    if let Some(b) = t.exponent_min {
        checks.push(Check::at_least("exponent_min", exponent, b));
    }
    if let Some(b) = t.exponent_max {
        checks.push(Check::at_most("exponent_max", exponent, b));
    }
    if let Some(b) = t.min_drop {
        let last = fit.values.len() - 1;
        checks.push(Check::at_least("min_drop", fit.values[0] / fit.values[last], b));
    }
}

fn rate_json(fit: &RateFit) -> Value {
    match fit.fit {
        Some(f) => json!({
            "exponent": f.exponent,
            "ci95": f.ci.map(|(a, b)| vec![a, b]),
            "slope_stderr": f.slope_stderr,
            "scatter": f.scatter,
            "residual": f.residual,
            "used_points": fit.used.iter().filter(|&&u| u).count(),
        }),
        None => json!({ "exponent": null, "used_points": fit.used.iter().filter(|&&u| u).count() }),
    }
}

fn equidistribute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.equidistribute.as_ref().expect("validated");
    let f = cfg.testfn.as_ref().expect("validated");
    let mu = surface_measure(cfg)?;
    let d = f.factors.len();
    let testfn = FactorizableTestFn::new(f.factors.iter().map(factor).collect::<Result<_, _>>()?)?.scaled(f.scale);
    let basepoint = match &c.basepoint {
        Some(pts) => GElem::new(pts.iter().map(point).collect::<Result<_, _>>()?)?,
        None => GElem::identity(d),
    };
    let schedule = SampleSchedule {
        base: scaled(c.base_samples, cfg.budget_scale),
        cap: scaled(c.max_samples, cfg.budget_scale),
        replicates: c.replicates,
    };
    let exp = TranslateExperiment::new(mu, basepoint, testfn, c.ys.clone(), schedule, cfg.seed)?;
    let target = horolab::homspace::haar_integral_quotient(exp.testfn());
    let (fit, raw) = discrepancy_curve_with_values(&exp)?;
    let mut table = Table::new(&["y", "value", "stderr", "samples", "discrepancy", "used"]);
    for (i, r) in raw.iter().enumerate() {
        table.rows.push(vec![
            num(fit.ys[i]),
            num(r.value),
            num(r.stderr),
            r.samples.to_string(),
            num(fit.values[i]),
            fit.used[i].to_string(),
        ]);
    }
    let mut checks = Vec::new();
    rate_checks(&fit, cfg, &mut checks);
    let t = &cfg.thresholds;
    if let Some(want) = t.ci_excludes_zero {
        let excludes = fit.fit.is_some_and(|f| f.distinguishable_from_zero());
        checks.push(Check::flag("ci_excludes_zero", excludes, want));
    }
    let last = fit.values.len() - 1;
    let ratio = fit.values[last] / fit.values[0];
    if let Some(b) = t.max_discrepancy_ratio {
        checks.push(Check::at_most("max_discrepancy_ratio", ratio, b));
    }
    let worst_rel = fit
        .values
        .iter()
        .zip(&fit.stderrs)
        .map(|(v, s)| s / v)
        .fold(0.0, f64::max);
    if let Some(b) = t.max_rel_stderr {
        checks.push(Check::at_most("max_rel_stderr", worst_rel, b));
    }
    let mut results = rate_json(&fit);
    results["target"] = json!(target);
    results["discrepancy_ratio"] = json!(ratio);
    results["max_rel_stderr"] = json!(worst_rel);
    Ok(Outcome { table, results, checks })
}

fn mixing(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.mixing.as_ref().expect("validated");
    let samples = scaled(c.samples, cfg.budget_scale);
    let fit = mixing_probe(&factor(&c.f1)?, &factor(&c.f2)?, &c.ys, samples, c.replicates, cfg.seed)?;
    let mut table = Table::new(&["y", "norm_a", "correlation", "stderr", "samples", "used"]);
    for i in 0..fit.ys.len() {
        table.rows.push(vec![
            num(fit.ys[i]),
            num(fit.scales[i]),
            num(fit.values[i]),
            num(fit.stderrs[i]),
            fit.samples[i].to_string(),
            fit.used[i].to_string(),
        ]);
    }
    let mut checks = Vec::new();
    rate_checks(&fit, cfg, &mut checks);
    Ok(Outcome {
        table,
        results: rate_json(&fit),
        checks,
    })
}

fn horocycle(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = cfg.horocycle.as_ref().expect("validated");
    let psi = Window::new(c.psi_center, c.psi_half_width)?;
    let probe = ProbeConfig {
        density: c.density * cfg.budget_scale,
        cap: c.max_points,
        centered: c.centered,
    };
    let (fit, vals) = horocycle_character_probe(&factor(&c.f0)?, &point(&c.x0)?, &psi, c.c, &c.ys, &probe)?;
    let mut table = Table::new(&["y", "re", "im", "magnitude", "stderr", "samples", "used"]);
    for (i, v) in vals.iter().enumerate() {
        table.rows.push(vec![
            num(fit.ys[i]),
            num(v.value.re),
            num(v.value.im),
            num(fit.values[i]),
            num(v.stderr),
            v.samples.to_string(),
            fit.used[i].to_string(),
        ]);
    }
    let mut checks = Vec::new();
    rate_checks(&fit, cfg, &mut checks);
    Ok(Outcome {
        table,
        results: rate_json(&fit),
        checks,
    })
}
