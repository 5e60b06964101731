//! Arithmetic in SL(2, R), the Möbius action, Iwasawa coordinates and
//! reduction modulo SL(2, Z).
//!
//! Points of `SL(2,R)/SL(2,Z)` are right cosets `g Γ`. The coset determines
//! `g⁻¹·i` up to the action of `Γ` on the upper half-plane, so reduction
//! moves `g⁻¹·i` into the modular fundamental domain by right
//! multiplication of `g`.

use crate::error::{domain, resource, Error, Result};
use crate::policy::NumericPolicy;
use crate::quad::GaussLegendre;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::Mul;

/// A 2×2 real matrix `[[a, b], [c, d]]` of determinant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };
    /// `T = [[1, 1], [0, 1]]`.
    pub const T: Mat2 = Mat2 {
        a: 1.0,
        b: 1.0,
        c: 0.0,
        d: 1.0,
    };
    /// `S = [[0, -1], [1, 0]]`.
    pub const S: Mat2 = Mat2 {
        a: 0.0,
        b: -1.0,
        c: 1.0,
        d: 0.0,
    };

    /// Checked constructor; the determinant must be within the structural
    /// tolerance of one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Mat2> {
        let m = Mat2 { a, b, c, d };
        if !m.entries().iter().all(|x| x.is_finite()) {
            return domain("non-finite matrix entry");
        }
        if (m.det() - 1.0).abs() > NumericPolicy::DEFAULT.structural {
            return domain(format!("determinant {} is not 1", m.det()));
        }
        Ok(m)
    }

    /// Constructor for entries known to have unit determinant.
    pub const fn new_unchecked(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        Mat2 { a, b, c, d }
    }

    /// Integer matrix; the determinant must be exactly one.
    pub fn integer(a: i64, b: i64, c: i64, d: i64) -> Result<Mat2> {
        if a * d - b * c != 1 {
            return domain(format!("[[{a},{b}],[{c},{d}]] is not unimodular"));
        }
        Ok(Mat2::new_unchecked(a as f64, b as f64, c as f64, d as f64))
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse of a unit-determinant matrix.
    pub fn inverse(&self) -> Mat2 {
        Mat2::new_unchecked(self.d, -self.b, -self.c, self.a)
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new_unchecked(self.a, self.c, self.b, self.d)
    }

    pub fn neg(&self) -> Mat2 {
        Mat2::new_unchecked(-self.a, -self.b, -self.c, -self.d)
    }

    /// Squared Frobenius norm.
    pub fn frob2(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn frob(&self) -> f64 {
        self.frob2().sqrt()
    }

    /// Squared Frobenius distance to `other`.
    pub fn dist2(&self, other: &Mat2) -> f64 {
        (self.a - other.a).powi(2)
            + (self.b - other.b).powi(2)
            + (self.c - other.c).powi(2)
            + (self.d - other.d).powi(2)
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &Mat2) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Product with the determinant re-checked.
    pub fn checked_mul(&self, rhs: &Mat2) -> Result<Mat2> {
        let p = *self * *rhs;
        let scale = self.frob2() * rhs.frob2();
        if (p.det() - 1.0).abs() > NumericPolicy::DEFAULT.structural * scale.max(1.0) {
            return Err(Error::Numerical(format!("product determinant {}", p.det())));
        }
        Ok(p)
    }

    pub fn is_integral(&self) -> bool {
        self.entries().iter().all(|x| x.fract() == 0.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new_unchecked(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

/// `a(y) = diag(√y, 1/√y)`.
pub fn make_a(y: f64) -> Result<Mat2> {
    if !(y > 0.0) || !y.is_finite() {
        return domain(format!("a(y) needs y > 0, got {y}"));
    }
    let s = y.sqrt();
    Ok(Mat2::new_unchecked(s, 0.0, 0.0, 1.0 / s))
}

/// Lower unipotent `u(t) = [[1, 0], [t, 1]]`.
pub fn make_u(t: f64) -> Mat2 {
    Mat2::new_unchecked(1.0, 0.0, t, 1.0)
}

/// Upper unipotent `n(x) = [[1, x], [0, 1]]`.
pub fn make_n(x: f64) -> Mat2 {
    Mat2::new_unchecked(1.0, x, 0.0, 1.0)
}

/// Rotation `k(θ) = [[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn make_k(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new_unchecked(c, -s, s, c)
}

/// `z ↦ (az + b)/(cz + d)`.
pub fn moebius(g: &Mat2, z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() || !g.entries().iter().all(|x| x.is_finite()) {
        return domain("non-finite input to Möbius action");
    }
    if z.im <= 0.0 {
        return domain(format!("Möbius action needs Im z > 0, got {z}"));
    }
    Ok(moebius_raw(g, z))
}

#[inline]
fn moebius_raw(g: &Mat2, z: Complex64) -> Complex64 {
    (z * g.a + g.b) / (z * g.c + g.d)
}

/// `g⁻¹·i`, the half-plane point attached to the coset `gΓ`.
#[inline]
pub fn coset_point(g: &Mat2) -> Complex64 {
    // g⁻¹ = [[d, -b], [-c, a]]
    let den = Complex64::new(g.a, -g.c);
    Complex64::new(-g.b, g.d) / den
}

/// Coordinates of `g = n(x) a(y) k(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwasawaCoords {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

pub fn iwasawa_decompose(g: &Mat2) -> IwasawaCoords {
    // The bottom row of n(x)a(y)k(θ) is (sin θ, cos θ)/√y and g·i = x + iy.
    let r2 = g.c * g.c + g.d * g.d;
    let y = 1.0 / r2;
    let x = (g.a * g.c + g.b * g.d) / r2;
    let mut theta = g.c.atan2(g.d);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    if theta >= 2.0 * PI {
        theta -= 2.0 * PI;
    }
    IwasawaCoords { x, y, theta }
}

pub fn iwasawa_recompose(c: &IwasawaCoords) -> Result<Mat2> {
    Ok(make_n(c.x) * make_a(c.y)? * make_k(c.theta))
}

/// A coset representative moved into the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPoint {
    /// `g·gamma`.
    pub rep: Mat2,
    /// Integer unimodular matrix.
    pub gamma: Mat2,
    /// `rep⁻¹·i`, in the closed fundamental domain.
    pub z: Complex64,
}

pub fn reduce(g: &Mat2) -> Result<ReducedPoint> {
    reduce_with(g, NumericPolicy::DEFAULT.reduction_max_steps)
}

pub fn reduce_with(g: &Mat2, max_steps: usize) -> Result<ReducedPoint> {
    if !g.entries().iter().all(|x| x.is_finite()) {
        return domain("non-finite matrix in reduction");
    }
    let mut w = coset_point(g);
    let (mut p, mut q, mut r, mut s) = (1i64, 0i64, 0i64, 1i64);
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > max_steps {
            return Err(Error::Numerical(format!("reduction exceeded {max_steps} steps")));
        }
        let n = w.re.round();
        if n != 0.0 {
            if n.abs() > 9.0e15 {
                return Err(Error::Numerical("translation overflow in reduction".into()));
            }
            let k = n as i64;
            w.re -= n;
            // gamma <- gamma * T^k
            q += p * k;
            s += r * k;
        }
        if w.norm_sqr() < 1.0 {
            w = -w.inv();
            // gamma <- gamma * S
            let (np, nq, nr, ns) = (q, -p, s, -r);
            p = np;
            q = nq;
            r = nr;
            s = ns;
        } else {
            break;
        }
    }
    let gamma = Mat2::new_unchecked(p as f64, q as f64, r as f64, s as f64);
    let rep = *g * gamma;
    Ok(ReducedPoint {
        rep,
        gamma,
        z: coset_point(&rep),
    })
}

/// Every `γ ∈ SL(2,Z)` with `‖gγ‖_F ≤ radius`, in lexicographic order of
/// `(a, b, c, d)`.
pub fn lattice_enumerate(g: &Mat2, radius: f64) -> Result<Vec<Mat2>> {
    lattice_enumerate_with_cap(g, radius, NumericPolicy::DEFAULT.enumeration_cap)
}

pub fn lattice_enumerate_with_cap(g: &Mat2, radius: f64, cap: u64) -> Result<Vec<Mat2>> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return domain(format!("enumeration radius must be >= 0, got {radius}"));
    }
    let r2 = radius * radius * (1.0 + 1e-12);
    if r2 < 2.0 {
        return Ok(Vec::new());
    }
    // Columns v of γ satisfy |g v| ≤ R, hence |v_i| ≤ ‖g⁻¹‖ R.
    let bound_f = (g.frob() * radius * (1.0 + 1e-12)).floor();
    let side = 2.0 * bound_f + 1.0;
    if side * side > cap as f64 {
        return resource("lattice enumeration candidates", side * side, cap as f64);
    }
    let bound = bound_f as i64;
    let mut cols: Vec<(i64, i64, f64)> = Vec::new();
    for x in -bound..=bound {
        for y in -bound..=bound {
            if x == 0 && y == 0 {
                continue;
            }
            let (xf, yf) = (x as f64, y as f64);
            let n2 = (g.a * xf + g.b * yf).powi(2) + (g.c * xf + g.d * yf).powi(2);
            if n2 <= r2 {
                cols.push((x, y, n2));
            }
        }
    }
    let mut out = Vec::new();
    for &(p, r, n1) in &cols {
        for &(q, s, n2) in &cols {
            if p * s - q * r == 1 && n1 + n2 <= r2 {
                out.push((p, q, r, s));
            }
        }
    }
    out.sort_unstable();
    Ok(out
        .into_iter()
        .map(|(a, b, c, d)| Mat2::new_unchecked(a as f64, b as f64, c as f64, d as f64))
        .collect())
}

/// `min_γ ‖gγ‖_F`.
pub fn quotient_norm(g: &Mat2) -> Result<f64> {
    let red = reduce(g)?;
    let r = red.rep.frob() * (1.0 + 1e-9);
    let list = lattice_enumerate(&red.rep, r)?;
    list.iter()
        .map(|gamma| (red.rep * *gamma).frob())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Numerical("reduced representative not enumerated".into()))
}

/// Axis-aligned box in Iwasawa coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub theta: (f64, f64),
}

/// Composite Gauss–Legendre resolution: panels per axis and nodes per panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarResolution {
    pub panels: [usize; 3],
    pub order: usize,
}

impl HaarResolution {
    pub fn uniform(panels: usize, order: usize) -> Self {
        HaarResolution {
            panels: [panels; 3],
            order,
        }
    }

    pub fn doubled(&self) -> Self {
        HaarResolution {
            panels: self.panels.map(|p| 2 * p),
            order: self.order,
        }
    }
}

/// `∫ F(n(x)a(y)k(θ)) y⁻² dx dy dθ` over `bx`.
pub fn haar_integrate_sl2<F: Fn(&Mat2) -> f64 + Sync + Send>(f: F, bx: &HaarBox, res: &HaarResolution) -> Result<f64> {
    if !(bx.y.0 > 0.0) || bx.y.1 < bx.y.0 {
        return domain(format!("Haar box needs 0 < y_min <= y_max, got {:?}", bx.y));
    }
    if bx.x.1 < bx.x.0 || bx.theta.1 < bx.theta.0 {
        return domain("Haar box has reversed bounds");
    }
    let gl = GaussLegendre::new(res.order.max(1));
    let xs = gl.composite_nodes(bx.x.0, bx.x.1, res.panels[0].max(1));
    let ys = gl.composite_nodes(bx.y.0, bx.y.1, res.panels[1].max(1));
    let ts: Vec<(Mat2, f64)> = gl
        .composite_nodes(bx.theta.0, bx.theta.1, res.panels[2].max(1))
        .into_iter()
        .map(|(t, w)| (make_k(t), w))
        .collect();
    let rows = crate::par::map_indexed(ys.len(), |iy| {
        let (y, wy) = ys[iy];
        let ay = make_a(y).expect("positive y");
        let mut s = 0.0;
        for &(x, wx) in &xs {
            let na = make_n(x) * ay;
            for (k, wt) in &ts {
                s += wx * wt * f(&(na * *k));
            }
        }
        s * wy / (y * y)
    });
    Ok(rows.iter().sum())
}

/// `∫∫ y⁻² dx dy` over the part of the modular fundamental domain with
/// `y ≥ y_floor`, by nested adaptive quadrature.
pub fn fundamental_domain_integral(y_floor: f64, tol: f64) -> f64 {
    // With u = 1/y the inner integral runs over u ∈ [0, 1/max(y_floor, √(1-x²))].
    let inner = |x: f64| {
        let lower = y_floor.max((1.0 - x * x).max(0.0).sqrt());
        let top = 1.0 / lower;
        crate::quad::adaptive_simpson(&|_u: f64| 1.0, 0.0, top, tol)
    };
    crate::quad::adaptive_simpson(&inner, -0.5, 0.5, tol)
}

/// Haar volume of `SL(2,R)/SL(2,Z)` in the normalization `y⁻² dx dy dθ`.
///
/// The circle of rotations has length 2π, but `-I ∈ SL(2,Z)` identifies
/// `g` with `-g`, so each coset is swept twice: the volume is π·(π/3).
pub fn covolume() -> f64 {
    static V: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *V.get_or_init(|| PI * fundamental_domain_integral(0.0, 1e-13))
}
