//! The product group `SL(2,R)^d`, its quotient by `SL(2,Z)^d`, and
//! automorphized factorizable test functions.

use crate::bump::bump_sq;
use crate::error::{domain, Error, Result};
use crate::rng::Substream;
use crate::sl2::{
    covolume, haar_integrate_sl2, lattice_enumerate, make_a, make_k, make_n, make_u, reduce, HaarBox, HaarResolution,
    IwasawaCoords, Mat2,
};
use rand::Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// A point of `G = SL(2,R)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GElem {
    factors: Vec<Mat2>,
}

impl GElem {
    pub fn new(factors: Vec<Mat2>) -> Result<Self> {
        if factors.is_empty() {
            return domain("group element needs at least one factor");
        }
        Ok(GElem { factors })
    }

    pub fn identity(d: usize) -> Self {
        GElem {
            factors: vec![Mat2::IDENTITY; d.max(1)],
        }
    }

    /// `(a(y), …, a(y))`.
    pub fn a_y(d: usize, y: f64) -> Result<Self> {
        Ok(GElem {
            factors: vec![make_a(y)?; d.max(1)],
        })
    }

    /// `(u(t_1), …, u(t_d))`.
    pub fn u_t(t: &[f64]) -> Result<Self> {
        GElem::new(t.iter().map(|&x| make_u(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Mat2] {
        &self.factors
    }

    pub fn factor(&self, j: usize) -> &Mat2 {
        &self.factors[j]
    }
}

/// Componentwise left multiplication: factor `j` of the result is `by_j · g_j`.
pub fn translate(g: &GElem, by: &GElem) -> Result<GElem> {
    if g.dim() != by.dim() {
        return domain(format!("dimension mismatch: {} vs {}", g.dim(), by.dim()));
    }
    Ok(GElem {
        factors: by.factors.iter().zip(&g.factors).map(|(b, x)| *b * *x).collect(),
    })
}

/// Smooth bump on `SL(2,R)` around `center`, automorphized over `SL(2,Z)`.
#[derive(Debug, Clone)]
pub struct AutoBumpFactor {
    center: Mat2,
    radius: f64,
    sharpness: f64,
    amplitude: f64,
    integral: OnceLock<f64>,
}

impl PartialEq for AutoBumpFactor {
    fn eq(&self, o: &Self) -> bool {
        self.center == o.center
            && self.radius == o.radius
            && self.sharpness == o.sharpness
            && self.amplitude == o.amplitude
    }
}

/// Quadrature resolution used for the full-group integral of a bump.
pub const BUMP_HAAR_RESOLUTION: HaarResolution = HaarResolution {
    panels: [16, 16, 16],
    order: 10,
};

impl AutoBumpFactor {
    pub const DEFAULT_RADIUS: f64 = 0.4;

    pub fn new(center: Mat2, radius: f64, sharpness: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("bump radius must be positive, got {radius}"));
        }
        if !(sharpness > 0.0) || !(amplitude > 0.0) {
            return domain("bump sharpness and amplitude must be positive");
        }
        Ok(AutoBumpFactor {
            center: Mat2::new(center.a, center.b, center.c, center.d)?,
            radius,
            sharpness,
            amplitude,
            integral: OnceLock::new(),
        })
    }

    /// Bump centered at `n(x) a(y) k(θ)`.
    pub fn from_iwasawa(c: IwasawaCoords, radius: f64) -> Result<Self> {
        let center = make_n(c.x) * make_a(c.y)? * make_k(c.theta);
        Self::new(center, radius, 1.0, 1.0)
    }

    pub fn center(&self) -> &Mat2 {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// The compactly supported function `F` on `SL(2,R)`.
    #[inline]
    pub fn raw(&self, h: &Mat2) -> f64 {
        let s2 = h.dist2(&self.center) / (self.radius * self.radius);
        self.amplitude * bump_sq(s2, self.sharpness)
    }

    /// `Σ_γ F(gγ)`.
    pub fn eval(&self, g: &Mat2) -> Result<f64> {
        let red = reduce(g)?;
        let reach = self.center.frob() + self.radius;
        // the reduced representative has the least Frobenius norm in its coset
        if red.rep.frob() > reach * (1.0 + 1e-12) {
            return Ok(0.0);
        }
        let list = lattice_enumerate(&red.rep, reach)?;
        Ok(list.iter().map(|gamma| self.raw(&(red.rep * *gamma))).sum())
    }

    /// Iwasawa box containing the support of `F`: a guaranteed box from
    /// interval bounds, shrunk to the extent of the support seen on a grid
    /// plus two grid cells.
    pub fn support_box(&self) -> HaarBox {
        let outer = self.outer_box();
        const N: usize = 48;
        let axis = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (N - 1) as f64;
        let mut ext = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        for iy in 0..N {
            let y = axis(outer.y, iy);
            let ay = make_a(y).expect("positive y");
            for ix in 0..N {
                let x = axis(outer.x, ix);
                let na = make_n(x) * ay;
                for it in 0..N {
                    let t = axis(outer.theta, it);
                    if self.raw(&(na * make_k(t))) > 0.0 {
                        for (e, v) in ext.iter_mut().zip([x, y, t]) {
                            e.0 = e.0.min(v);
                            e.1 = e.1.max(v);
                        }
                    }
                }
            }
        }
        if !ext[0].0.is_finite() {
            return outer;
        }
        let pad = |(lo, hi): (f64, f64), (olo, ohi): (f64, f64)| {
            let cell = 2.0 * (ohi - olo) / (N - 1) as f64;
            ((lo - cell).max(olo), (hi + cell).min(ohi))
        };
        HaarBox {
            x: pad(ext[0], outer.x),
            y: pad(ext[1], outer.y),
            theta: pad(ext[2], outer.theta),
        }
    }

    fn outer_box(&self) -> HaarBox {
        let c = &self.center;
        let r = self.radius;
        let cb = c.c.hypot(c.d);
        let reach = c.frob() + r;
        let y_lo = 1.0 / (cb + r).powi(2);
        let y_hi = if cb > r {
            (1.0 / (cb - r).powi(2)).min(reach * reach)
        } else {
            reach * reach
        };
        let theta = if cb > r {
            let mid = c.c.atan2(c.d);
            let dev = (r / cb).asin();
            (mid - dev, mid + dev)
        } else {
            (0.0, 2.0 * PI)
        };
        // x / y = h11 h21 + h12 h22, bounded entrywise by interval arithmetic
        let iv = |v: f64| (v - r, v + r);
        let p = add_iv(mul_iv(iv(c.a), iv(c.c)), mul_iv(iv(c.b), iv(c.d)));
        let x = mul_iv(p, (y_lo, y_hi));
        HaarBox {
            x,
            y: (y_lo, y_hi),
            theta,
        }
    }

    /// `∫_{SL(2,R)} F dh`, cached.
    pub fn full_integral(&self) -> f64 {
        *self.integral.get_or_init(|| {
            haar_integrate_sl2(|h| self.raw(h), &self.support_box(), &BUMP_HAAR_RESOLUTION)
                .expect("support box has positive y")
        })
    }
}

fn mul_iv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let p = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (
        p.iter().copied().fold(f64::INFINITY, f64::min),
        p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn add_iv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

/// One factor of a factorizable test function.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    One,
    Bump(AutoBumpFactor),
}

impl Factor {
    pub fn eval(&self, g: &Mat2) -> Result<f64> {
        match self {
            Factor::One => Ok(1.0),
            Factor::Bump(b) => b.eval(g),
        }
    }

    /// Mean over the quotient with probability Haar measure.
    pub fn quotient_mean(&self) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Bump(b) => b.full_integral() / covolume(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            Factor::One => 1.0,
            Factor::Bump(b) => b.amplitude(),
        }
    }
}

/// `f(g_1Γ, …, g_dΓ) = scale · Π_j f_j(g_jΓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizableTestFn {
    factors: Vec<Factor>,
    scale: f64,
}

impl FactorizableTestFn {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return domain("test function needs at least one factor");
        }
        Ok(FactorizableTestFn { factors, scale: 1.0 })
    }

    pub fn constant_one(d: usize) -> Self {
        FactorizableTestFn {
            factors: vec![Factor::One; d.max(1)],
            scale: 1.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        FactorizableTestFn {
            factors: self.factors.clone(),
            scale: self.scale * c,
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Upper bound for `|f|` implied by the construction when every
    /// automorphized sum has a single nonzero term.
    pub fn amplitude_product(&self) -> f64 {
        self.scale.abs() * self.factors.iter().map(Factor::amplitude).product::<f64>()
    }
}

pub fn eval_testfn(f: &FactorizableTestFn, p: &GElem) -> Result<f64> {
    if f.dim() != p.dim() {
        return domain(format!("test function has {} factors, point has {}", f.dim(), p.dim()));
    }
    let mut v = f.scale;
    for (fj, gj) in f.factors.iter().zip(p.factors()) {
        v *= fj.eval(gj)?;
        if v == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(v)
}

/// Exact Haar expectation of `f` on `G/Γ` by unfolding.
pub fn haar_integral_quotient(f: &FactorizableTestFn) -> f64 {
    f.scale * f.factors.iter().map(Factor::quotient_mean).product::<f64>()
}

/// Haar-random points of `G/Γ` addressed by sample index.
#[derive(Debug, Clone)]
pub struct QuotientSampler {
    d: usize,
    stream: Substream,
}

/// Lowest height of the modular fundamental domain.
const Y_FLOOR: f64 = 0.866_025_403_784_438_6;

impl QuotientSampler {
    pub fn new(seed: u64, d: usize) -> Self {
        QuotientSampler {
            d: d.max(1),
            stream: Substream::new(seed, "homspace.sampler"),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Iwasawa coordinates `(x, y, θ)` of sample `index`, per factor, with
    /// `x + iy` in the fundamental domain.
    pub fn coords(&self, index: u64) -> Vec<IwasawaCoords> {
        let mut rng = self.stream.at(index);
        (0..self.d)
            .map(|_| loop {
                let x: f64 = rng.gen::<f64>() - 0.5;
                let u: f64 = 1.0 - rng.gen::<f64>();
                let y = Y_FLOOR / u;
                if x * x + y * y >= 1.0 {
                    let theta = 2.0 * PI * rng.gen::<f64>();
                    break IwasawaCoords { x, y, theta };
                }
            })
            .collect()
    }

    /// Sample `index` as a group element `g` with `g⁻¹·i` in the
    /// fundamental domain.
    pub fn point(&self, index: u64) -> GElem {
        let factors = self
            .coords(index)
            .into_iter()
            .map(|c| {
                let h = make_n(c.x) * make_a(c.y).expect("y above floor") * make_k(c.theta);
                h.inverse()
            })
            .collect();
        GElem { factors }
    }

    pub fn sample(&self, count: usize) -> Vec<GElem> {
        crate::par::map_indexed(count, |i| self.point(i as u64))
    }
}

/// Generators of the three one-parameter flows on a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// `s ↦ a(e^s)`
    Diagonal,
    /// `s ↦ u(s)`
    Lower,
    /// `s ↦ u(s)ᵀ`
    Upper,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Diagonal, Generator::Lower, Generator::Upper];

    pub fn flow(&self, s: f64) -> Mat2 {
        match self {
            Generator::Diagonal => make_a(s.exp()).expect("positive"),
            Generator::Lower => make_u(s),
            Generator::Upper => make_u(s).transpose(),
        }
    }
}

fn moved(p: &GElem, moves: &[(usize, Generator, f64)]) -> GElem {
    let mut out = p.clone();
    for &(j, gen, s) in moves {
        out.factors[j] = gen.flow(s) * out.factors[j];
    }
    out
}

/// Sampled lower bound for the `L^∞` Sobolev norm of order `j ≤ 2`:
/// the sum over derivative monomials of degree `≤ j` in the basis
/// `{Diagonal, Lower, Upper}` of every factor of the largest finite-difference
/// value over `points`.
pub fn sobolev_estimate(f: &FactorizableTestFn, j: u32, points: &[GElem], step: f64) -> Result<f64> {
    if j > 2 {
        return Err(Error::Unsupported(format!(
            "Sobolev order {j}: finite differences are only used up to order 2"
        )));
    }
    if points.is_empty() {
        return domain("Sobolev estimate needs sample points");
    }
    if !(step > 0.0) {
        return domain("finite-difference step must be positive");
    }
    let dirs: Vec<(usize, Generator)> = (0..f.dim())
        .flat_map(|k| Generator::ALL.iter().map(move |&g| (k, g)))
        .collect();
    let h = step;
    let sup = |op: &dyn Fn(&GElem) -> Result<f64>| -> Result<f64> {
        points
            .iter()
            .map(|p| op(p).map(f64::abs))
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    };
    let mut total = sup(&|p| eval_testfn(f, p))?;
    if j >= 1 {
        for &(k, g) in &dirs {
            total += sup(&|p| {
                let plus = eval_testfn(f, &moved(p, &[(k, g, h)]))?;
                let minus = eval_testfn(f, &moved(p, &[(k, g, -h)]))?;
                Ok((plus - minus) / (2.0 * h))
            })?;
        }
    }
    if j >= 2 {
        for &(k1, g1) in &dirs {
            for &(k2, g2) in &dirs {
                total += sup(&|p| {
                    let e = |s1: f64, s2: f64| {
                        // D_X D_Y f(p) = d/ds d/dt f(exp(sX) exp(tY) p)
                        eval_testfn(f, &moved(p, &[(k2, g2, s2), (k1, g1, s1)]))
                    };
                    Ok((e(h, h)? - e(h, -h)? - e(-h, h)? + e(-h, -h)?) / (4.0 * h * h))
                })?;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_at(x: f64, y: f64, theta: f64) -> AutoBumpFactor {
        AutoBumpFactor::from_iwasawa(IwasawaCoords { x, y, theta }, 0.4).unwrap()
    }

    #[test]
    fn translate_examples() {
        let x0 = GElem::new(vec![make_k(0.3), make_n(0.2)]).unwrap();
        assert_eq!(translate(&x0, &GElem::a_y(2, 1.0).unwrap()).unwrap(), x0);
        let t = [0.5, -1.5];
        let y = 0.25;
        let g = translate(
            &translate(&x0, &GElem::u_t(&t).unwrap()).unwrap(),
            &GElem::a_y(2, y).unwrap(),
        )
        .unwrap();
        for j in 0..2 {
            let want = make_a(y).unwrap() * make_u(t[j]) * *x0.factor(j);
            assert!(g.factor(j).max_diff(&want) < 1e-15);
        }
        assert!(translate(&x0, &GElem::identity(3)).is_err());
    }

    #[test]
    fn constant_function_is_one() {
        let f = FactorizableTestFn::constant_one(3);
        let p = QuotientSampler::new(1, 3).point(5);
        assert_eq!(eval_testfn(&f, &p).unwrap(), 1.0);
        assert_eq!(haar_integral_quotient(&f), 1.0);
    }

    #[test]
    fn single_term_near_center() {
        let b = bump_at(0.1, 1.3, 0.7);
        // a point whose coset point lies deep inside the fundamental domain
        let p = *b.center() * make_a(1.05).unwrap();
        let red = reduce(&p).unwrap();
        let list = lattice_enumerate(&red.rep, b.center().frob() + b.radius()).unwrap();
        let nonzero: Vec<_> = list.iter().filter(|g| b.raw(&(red.rep * **g)) > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((b.eval(&p).unwrap() - b.raw(&p)).abs() < 1e-15);
    }

    #[test]
    fn support_box_contains_support() {
        let b = bump_at(-0.2, 1.1, 2.0);
        let bx = b.support_box();
        let s = QuotientSampler::new(9, 1);
        let mut inside = 0;
        for i in 0..20000 {
            // points near the center
            let c = &s.coords(i)[0];
            let h = *b.center()
                * make_n(0.3 * (c.x))
                * make_a(1.0 + 0.3 * (c.theta / 6.3 - 0.5)).unwrap()
                * make_k(0.4 * (c.y.fract() - 0.5));
            if b.raw(&h) > 0.0 {
                inside += 1;
                let ic = crate::sl2::iwasawa_decompose(&h);
                let th = ic.theta;
                let in_theta = [th, th - 2.0 * PI, th + 2.0 * PI]
                    .iter()
                    .any(|t| *t >= bx.theta.0 && *t <= bx.theta.1);
                assert!(ic.x >= bx.x.0 && ic.x <= bx.x.1);
                assert!(ic.y >= bx.y.0 && ic.y <= bx.y.1);
                assert!(in_theta);
            }
        }
        assert!(inside > 100);
    }

    #[test]
    fn full_integral_converged() {
        let b = bump_at(0.0, 1.0, 0.0);
        let v = b.full_integral();
        let fine = haar_integrate_sl2(|h| b.raw(h), &b.support_box(), &BUMP_HAAR_RESOLUTION.doubled()).unwrap();
        assert!(v > 0.0);
        assert!((v - fine).abs() < 1e-9 * fine, "{v} vs {fine}");
    }

    #[test]
    fn sampler_is_deterministic_and_in_domain() {
        let s = QuotientSampler::new(11, 2);
        assert_eq!(s.point(17), QuotientSampler::new(11, 2).point(17));
        for i in 0..1000 {
            for c in s.coords(i) {
                assert!(c.x.abs() <= 0.5 && c.x * c.x + c.y * c.y >= 1.0);
            }
            let red = reduce(s.point(i).factor(0)).unwrap();
            assert!(
                red.gamma.max_diff(&Mat2::IDENTITY) == 0.0
                    || red.gamma.max_diff(&Mat2::IDENTITY.neg()) == 0.0
                    || (red.z.re.abs() - 0.5).abs() < 1e-9
                    || (red.z.norm() - 1.0).abs() < 1e-9
            );
        }
    }

    #[test]
    fn sobolev_basic_properties() {
        let pts = QuotientSampler::new(3, 1).sample(50);
        let one = FactorizableTestFn::constant_one(1);
        for j in 0..=2 {
            assert!((sobolev_estimate(&one, j, &pts, 1e-3).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(matches!(
            sobolev_estimate(&one, 3, &pts, 1e-3),
            Err(Error::Unsupported(_))
        ));
        let f = FactorizableTestFn::new(vec![Factor::Bump(bump_at(0.0, 1.2, 0.5))]).unwrap();
        let s0 = sobolev_estimate(&f, 0, &pts, 1e-3).unwrap();
        assert!(s0 <= f.amplitude_product() + 1e-12);
        let s1 = sobolev_estimate(&f, 1, &pts, 1e-3).unwrap();
        let s1c = sobolev_estimate(&f.scaled(2.5), 1, &pts, 1e-3).unwrap();
        assert!((s1c - 2.5 * s1).abs() < 1e-12 * s1c.max(1.0));
    }
}
