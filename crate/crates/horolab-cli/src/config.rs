//! TOML experiment configuration.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CertifyCurvature,
    Sublevel,
    DiagonalizeDemo,
    FourierDecay,
    Equidistribute,
    Mixing,
    Horocycle,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CertifyCurvature => "certify-curvature",
            ExperimentKind::Sublevel => "sublevel",
            ExperimentKind::DiagonalizeDemo => "diagonalize-demo",
            ExperimentKind::FourierDecay => "fourier-decay",
            ExperimentKind::Equidistribute => "equidistribute",
            ExperimentKind::Mixing => "mixing",
            ExperimentKind::Horocycle => "horocycle",
        }
    }
}

/// One monomial `coef · t^exp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exp: Vec<u32>,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyConfig {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmanifoldConfig {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    /// Graph components `w_1, …, w_n` as polynomials in `m` variables.
    pub w: Vec<PolyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub half_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<PolyConfig>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            half_width: 1.0,
            factor: None,
        }
    }
}

/// A factor of the test function: constant one, or a bump centered at the
/// Iwasawa point `n(x) a(y) k(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FactorConfig {
    One,
    Bump {
        x: f64,
        y: f64,
        #[serde(default)]
        theta: f64,
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFnConfig {
    pub factors: Vec<FactorConfig>,
    #[serde(default = "one")]
    pub scale: f64,
}

/// A point `n(x) a(y) k(θ)` of one factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IwasawaPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    /// Cell-centered grid points per axis on `(-h, h)^m`.
    pub grid_per_axis: usize,
    pub grid_half_width: f64,
    pub delta: f64,
    #[serde(default = "default_sphere_points")]
    pub sphere_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SublevelConfig {
    pub nvars: usize,
    pub u: PolyConfig,
    pub deltas: Vec<f64>,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalizeConfig {
    pub lambda: Vec<f64>,
    /// Upper-triangular rows: `phi[i][j - i]` is `φ_ij`.
    pub phi: Vec<Vec<PolyConfig>>,
    pub deltas: Vec<f64>,
    pub points: usize,
    /// Points are drawn from `[-radius, radius]^l`.
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierMode {
    /// L² norm over the shell `K ≤ |ξ| ≤ 2K`.
    Shell,
    /// `|μ̂(Kξ₀)|` along a fixed direction.
    Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDecayConfig {
    pub mode: FourierMode,
    pub ks: Vec<f64>,
    /// Localization center in `R^d`; shell mode requires it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default = "default_shell_samples")]
    pub samples: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    #[serde(default = "default_margin")]
    pub margin: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquidistConfig {
    pub ys: Vec<f64>,
    /// One point per factor; defaults to the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<Vec<IwasawaPoint>>,
    pub base_samples: u64,
    pub max_samples: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    pub f1: FactorConfig,
    pub f2: FactorConfig,
    pub ys: Vec<f64>,
    pub samples: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorocycleConfig {
    pub f0: FactorConfig,
    pub x0: IwasawaPoint,
    pub psi_center: f64,
    pub psi_half_width: f64,
    pub c: f64,
    pub ys: Vec<f64>,
    #[serde(default = "yes")]
    pub centered: bool,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_horocycle_cap")]
    pub max_points: u64,
}

/// Declared pass/fail thresholds; each applies to specific experiments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_star_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_star_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_non_curved_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_det_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_max: Option<f64>,
    /// `true`: the 95 % interval of the exponent must exclude zero;
    /// `false`: it must contain zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_excludes_zero: Option<bool>,
    /// Upper bound on `D(y_last) / D(y_first)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_discrepancy_ratio: Option<f64>,
    /// Upper bound on `stderr / D` at every y.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rel_stderr: Option<f64>,
    /// Lower bound on `|value(y_first)| / |value(y_last)|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_drop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem for `<stem>.csv` and `<stem>.json`; defaults to the
    /// experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            stem: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "one")]
    pub budget_scale: f64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submanifold: Option<SubmanifoldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testfn: Option<TestFnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sublevel: Option<SublevelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonalize: Option<DiagonalizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierDecayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equidistribute: Option<EquidistConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horocycle: Option<HorocycleConfig>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_sphere_points() -> usize {
    2000
}

fn default_shell_samples() -> u64 {
    256
}

fn default_replicates() -> u32 {
    8
}

fn default_margin() -> u64 {
    256
}

fn default_density() -> f64 {
    64.0
}

fn default_horocycle_cap() -> u64 {
    1 << 26
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Invalid {
        field: field.to_string(),
        message: message.into(),
    })
}

fn require<'a, T>(section: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| CliError::Invalid {
        field: field.to_string(),
        message: "section is required for this experiment".into(),
    })
}

fn check_grid(field: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return invalid(field, "grid must be nonempty");
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid(field, "grid values must be positive and finite");
    }
    Ok(())
}

fn check_ys(field: &str, ys: &[f64]) -> Result<(), CliError> {
    check_grid(field, ys)?;
    if ys.iter().any(|&y| y > 1.0) {
        return invalid(field, "y values must lie in (0, 1]");
    }
    if ys.windows(2).any(|w| w[1] >= w[0]) {
        return invalid(field, "y grid must be strictly decreasing");
    }
    Ok(())
}

fn check_poly(field: &str, p: &PolyConfig, nvars: usize) -> Result<(), CliError> {
    for (i, t) in p.terms.iter().enumerate() {
        if t.exp.len() != nvars {
            return invalid(
                &format!("{field}.terms[{i}].exp"),
                format!("has {} exponents, expected {nvars}", t.exp.len()),
            );
        }
        if !t.coef.is_finite() {
            return invalid(&format!("{field}.terms[{i}].coef"), "must be finite");
        }
    }
    Ok(())
}

fn check_factor(field: &str, f: &FactorConfig) -> Result<(), CliError> {
    if let FactorConfig::Bump { y, radius, .. } = f {
        if !(*y > 0.0) {
            return invalid(&format!("{field}.y"), "must be positive");
        }
        if !(*radius > 0.0) {
            return invalid(&format!("{field}.radius"), "must be positive");
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn stem(&self) -> String {
        self.output
            .stem
            .clone()
            .unwrap_or_else(|| self.experiment.name().to_string())
    }

    fn check_submanifold(&self) -> Result<&SubmanifoldConfig, CliError> {
        let s = require(&self.submanifold, "submanifold")?;
        if s.d != s.m + s.n {
            return invalid("submanifold.d", format!("d = {} but m + n = {}", s.d, s.m + s.n));
        }
        if s.m == 0 || s.n == 0 {
            return invalid("submanifold", "m and n must be positive");
        }
        if s.w.len() != s.n {
            return invalid(
                "submanifold.w",
                format!("has {} components, expected n = {}", s.w.len(), s.n),
            );
        }
        for (r, p) in s.w.iter().enumerate() {
            check_poly(&format!("submanifold.w[{r}]"), p, s.m)?;
        }
        if let Some(d) = &self.density {
            if !(d.half_width > 0.0) {
                return invalid("density.half_width", "must be positive");
            }
            if let Some(f) = &d.factor {
                check_poly("density.factor", f, s.m)?;
            }
        }
        Ok(s)
    }

    fn allowed_thresholds(&self) -> &'static [&'static str] {
        match self.experiment {
            ExperimentKind::CertifyCurvature => &["e_star_min", "e_star_max", "max_non_curved_fraction"],
            ExperimentKind::Sublevel => &["exponent_min", "exponent_max"],
            ExperimentKind::DiagonalizeDemo => &["max_residual", "max_det_slope"],
            ExperimentKind::FourierDecay => &["slope_min", "slope_max"],
            ExperimentKind::Equidistribute => &[
                "exponent_min",
                "exponent_max",
                "ci_excludes_zero",
                "max_discrepancy_ratio",
                "max_rel_stderr",
            ],
            ExperimentKind::Mixing | ExperimentKind::Horocycle => &["exponent_min", "exponent_max", "min_drop"],
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.budget_scale > 0.0 && self.budget_scale.is_finite()) {
            return invalid("budget_scale", "must be positive and finite");
        }
        let set = serde_json::to_value(&self.thresholds).expect("thresholds serialize");
        let allowed = self.allowed_thresholds();
        if let Some(map) = set.as_object() {
            for key in map.keys() {
                if !allowed.contains(&key.as_str()) {
                    return invalid(
                        &format!("thresholds.{key}"),
                        format!("does not apply to {}", self.experiment.name()),
                    );
                }
            }
        }
        match self.experiment {
            ExperimentKind::CertifyCurvature => {
                let s = self.check_submanifold()?;
                let c = require(&self.curvature, "curvature")?;
                if c.grid_per_axis == 0 {
                    return invalid("curvature.grid_per_axis", "grid must be nonempty");
                }
                if !(c.grid_half_width > 0.0 && c.grid_half_width < 1.0) {
                    return invalid("curvature.grid_half_width", "must lie in (0, 1)");
                }
                if !(c.delta >= 0.0) {
                    return invalid("curvature.delta", "must be non-negative");
                }
                if s.n > 4 {
                    return invalid("submanifold.n", "sphere search supports n <= 4");
                }
            }
            ExperimentKind::Sublevel => {
                let c = require(&self.sublevel, "sublevel")?;
                if c.nvars == 0 || c.nvars > 16 {
                    return invalid("sublevel.nvars", "must lie in 1..=16");
                }
                check_poly("sublevel.u", &c.u, c.nvars)?;
                check_grid("sublevel.deltas", &c.deltas)?;
                if c.samples == 0 {
                    return invalid("sublevel.samples", "must be positive");
                }
            }
            ExperimentKind::DiagonalizeDemo => {
                let c = require(&self.diagonalize, "diagonalize")?;
                let l = c.lambda.len();
                if l == 0 {
                    return invalid("diagonalize.lambda", "must be nonempty");
                }
                if c.phi.len() != l {
                    return invalid("diagonalize.phi", format!("needs {l} rows"));
                }
                for (i, row) in c.phi.iter().enumerate() {
                    if row.len() != l - i {
                        return invalid(&format!("diagonalize.phi[{i}]"), format!("needs {} entries", l - i));
                    }
                    for (j, p) in row.iter().enumerate() {
                        check_poly(&format!("diagonalize.phi[{i}][{j}]"), p, l)?;
                    }
                }
                if c.deltas.is_empty() || c.deltas.iter().any(|d| !(0.0..1.0).contains(d)) {
                    return invalid("diagonalize.deltas", "must be a nonempty grid in [0, 1)");
                }
                if c.points == 0 {
                    return invalid("diagonalize.points", "must be positive");
                }
                if !(c.radius > 0.0) {
                    return invalid("diagonalize.radius", "must be positive");
                }
            }
            ExperimentKind::FourierDecay => {
                let s = self.check_submanifold()?;
                let c = require(&self.fourier, "fourier")?;
                check_grid("fourier.ks", &c.ks)?;
                if let Some(x0) = &c.x0 {
                    if x0.len() != s.d {
                        return invalid("fourier.x0", format!("needs {} coordinates", s.d));
                    }
                }
                if c.x0.is_some() != c.beta.is_some() {
                    return invalid("fourier.beta", "x0 and beta must be given together");
                }
                match c.mode {
                    FourierMode::Shell => {
                        if c.x0.is_none() {
                            return invalid("fourier.x0", "shell mode needs a localization");
                        }
                    }
                    FourierMode::Direction => match &c.direction {
                        Some(dir) if dir.len() == s.d => {}
                        _ => return invalid("fourier.direction", format!("needs {} coordinates", s.d)),
                    },
                }
            }
            ExperimentKind::Equidistribute => {
                let s = self.check_submanifold()?;
                let f = require(&self.testfn, "testfn")?;
                if f.factors.len() != s.d {
                    return invalid("testfn.factors", format!("needs {} factors", s.d));
                }
                for (j, fac) in f.factors.iter().enumerate() {
                    check_factor(&format!("testfn.factors[{j}]"), fac)?;
                }
                let c = require(&self.equidistribute, "equidistribute")?;
                check_ys("equidistribute.ys", &c.ys)?;
                if let Some(b) = &c.basepoint {
                    if b.len() != s.d {
                        return invalid("equidistribute.basepoint", format!("needs {} points", s.d));
                    }
                    if b.iter().any(|p| !(p.y > 0.0)) {
                        return invalid("equidistribute.basepoint", "heights must be positive");
                    }
                }
                if c.base_samples == 0 || c.max_samples < c.base_samples {
                    return invalid("equidistribute.max_samples", "need 0 < base_samples <= max_samples");
                }
                if c.replicates < 2 {
                    return invalid("equidistribute.replicates", "need at least two");
                }
            }
            ExperimentKind::Mixing => {
                let c = require(&self.mixing, "mixing")?;
                check_factor("mixing.f1", &c.f1)?;
                check_factor("mixing.f2", &c.f2)?;
                check_ys("mixing.ys", &c.ys)?;
                if c.replicates < 2 || c.samples < 2 * c.replicates as u64 {
                    return invalid("mixing.samples", "need two replicates with two samples each");
                }
            }
            ExperimentKind::Horocycle => {
                let c = require(&self.horocycle, "horocycle")?;
                check_factor("horocycle.f0", &c.f0)?;
                check_ys("horocycle.ys", &c.ys)?;
                if !(c.x0.y > 0.0) {
                    return invalid("horocycle.x0.y", "must be positive");
                }
                if !(c.psi_half_width > 0.0) {
                    return invalid("horocycle.psi_half_width", "must be positive");
                }
                if !(c.density > 0.0) {
                    return invalid("horocycle.density", "must be positive");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_match_serde() {
        for kind in [
            ExperimentKind::CertifyCurvature,
            ExperimentKind::Sublevel,
            ExperimentKind::DiagonalizeDemo,
            ExperimentKind::FourierDecay,
            ExperimentKind::Equidistribute,
            ExperimentKind::Mixing,
            ExperimentKind::Horocycle,
        ] {
            let v = serde_json::to_value(kind).unwrap();
            assert_eq!(v, kind.name());
        }
    }

    #[test]
    fn y_grids_must_decrease_inside_unit_interval() {
        assert!(check_ys("ys", &[0.5, 0.25]).is_ok());
        assert!(check_ys("ys", &[0.25, 0.5]).is_err());
        assert!(check_ys("ys", &[2.0, 0.5]).is_err());
        assert!(check_ys("ys", &[]).is_err());
    }

    #[test]
    fn polynomial_arity_is_checked() {
        let p = PolyConfig {
            terms: vec![Term {
                exp: vec![1, 0],
                coef: 1.0,
            }],
        };
        assert!(check_poly("u", &p, 2).is_ok());
        assert!(check_poly("u", &p, 3).is_err());
    }

    #[test]
    fn missing_section_names_field() {
        let err = ExperimentConfig::from_toml("experiment = \"mixing\"\nseed = 1\n").unwrap_err();
        assert!(err.to_string().contains("`mixing`"), "{err}");
    }
}
