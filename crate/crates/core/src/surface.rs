//! Hypersurface families in `ℂ²` given by polarized real-analytic defining
//! functions, with deterministic sampling of their level sets.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::jet::{Jet, JetError, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point outside the domain of {family}: {reason}")]
    Domain {
        family: &'static str,
        reason: String,
    },
    #[error("level {level} is not attainable on {family}")]
    InvalidLevel { family: &'static str, level: f64 },
    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("gradient of the defining function vanishes at z={z}, w={w}")]
    VanishingGradient { z: Complex64, w: Complex64 },
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    FlatTube,
    LogTube,
    Sphere,
    Ellipsoid,
    CartanMu,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::FlatTube,
        FamilyKind::LogTube,
        FamilyKind::Sphere,
        FamilyKind::Ellipsoid,
        FamilyKind::CartanMu,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FamilyKind::FlatTube => "flat-tube",
            FamilyKind::LogTube => "log-tube",
            FamilyKind::Sphere => "sphere",
            FamilyKind::Ellipsoid => "ellipsoid",
            FamilyKind::CartanMu => "cartan-mu",
        }
    }

    pub fn from_tag(tag: &str) -> Option<FamilyKind> {
        FamilyKind::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A hypersurface family together with its real parameters.
///
/// * `FlatTube { eps }`: `(Im z)² + (Im w)² = ε²`.
/// * `LogTube { eps }`: `(log|z|)² + (log|w|)² = ε²`, the image of the flat
///   tube over the torus `ℝ²/2πℤ²` under `(X, Y) ↦ (e^{iX}, e^{iY})`.
/// * `Sphere { r }`: `|z|² + |w|² = r²`.
/// * `Ellipsoid { a, b, c, d }`: `a x² + b x′² + c y² + d y′² = 1` with
///   `z = x + i x′`, `w = y + i y′`. Equal parameters give a round sphere.
/// * `CartanMu { alpha }`: the affine chart `z₀ = 1` of
///   `|z₀|² + |z₁|² + |z₂|² = α |z₀² + z₁² + z₂²|`, `α > 1`. Points of the
///   projective hypersurface with `z₀ = 0` are not represented.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    FlatTube { eps: f64 },
    LogTube { eps: f64 },
    Sphere { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64, d: f64 },
    CartanMu { alpha: f64 },
}

fn positive(name: &str, v: f64) -> Result<(), SurfaceError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SurfaceError::InvalidParameter(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl Family {
    pub fn flat_tube(eps: f64) -> Result<Family, SurfaceError> {
        Family::FlatTube { eps }.validated()
    }

    pub fn log_tube(eps: f64) -> Result<Family, SurfaceError> {
        Family::LogTube { eps }.validated()
    }

    pub fn sphere(r: f64) -> Result<Family, SurfaceError> {
        Family::Sphere { r }.validated()
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64, d: f64) -> Result<Family, SurfaceError> {
        Family::Ellipsoid { a, b, c, d }.validated()
    }

    pub fn cartan_mu(alpha: f64) -> Result<Family, SurfaceError> {
        Family::CartanMu { alpha }.validated()
    }

    pub fn validated(self) -> Result<Family, SurfaceError> {
        match self {
            Family::FlatTube { eps } | Family::LogTube { eps } => positive("eps", eps)?,
            Family::Sphere { r } => positive("r", r)?,
            Family::Ellipsoid { a, b, c, d } => {
                for (n, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
                    positive(n, v)?;
                }
            }
            Family::CartanMu { alpha } => {
                if !(alpha.is_finite() && alpha > 1.0) {
                    return Err(SurfaceError::InvalidParameter(format!(
                        "alpha must exceed 1, got {alpha}"
                    )));
                }
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::FlatTube { .. } => FamilyKind::FlatTube,
            Family::LogTube { .. } => FamilyKind::LogTube,
            Family::Sphere { .. } => FamilyKind::Sphere,
            Family::Ellipsoid { .. } => FamilyKind::Ellipsoid,
            Family::CartanMu { .. } => FamilyKind::CartanMu,
        }
    }

    /// The level at which the raw defining function cuts out the family's
    /// hypersurface: `ε²` for the tubes, `0` otherwise.
    pub fn level(&self) -> f64 {
        match *self {
            Family::FlatTube { eps } | Family::LogTube { eps } => eps * eps,
            _ => 0.0,
        }
    }

    /// Maps three real parameters onto the level set `{ρ = level}`.
    ///
    /// * flat tube: `(θ, Re z, Re w)`, with `(Im z, Im w) = √level (cos θ, sin θ)`;
    /// * log tube: `(θ, arg z, arg w)`, with `(log|z|, log|w|) = √level (cos θ, sin θ)`;
    /// * sphere, ellipsoid: Hopf angles `(η, φ₁, φ₂)` of the unit 3-sphere
    ///   `(cos η e^{iφ₁}, sin η e^{iφ₂})`, rescaled onto the quadric;
    /// * Cartan μ_α: the same Hopf angles give a direction `u`, and the point
    ///   is the first root of `ρ(t u) = level` along the ray `t > 0`.
    pub fn parameterize(
        &self,
        p: [f64; 3],
        level: f64,
    ) -> Result<(Complex64, Complex64), SurfaceError> {
        match *self {
            Family::FlatTube { .. } => {
                let r = tube_radius(self, level)?;
                let (s, c) = p[0].sin_cos();
                Ok((Complex64::new(p[1], r * c), Complex64::new(p[2], r * s)))
            }
            Family::LogTube { .. } => {
                let r = tube_radius(self, level)?;
                let (s, c) = p[0].sin_cos();
                Ok((
                    Complex64::from_polar((r * c).exp(), p[1]),
                    Complex64::from_polar((r * s).exp(), p[2]),
                ))
            }
            Family::Sphere { r } => {
                let radius2 = r * r + level;
                if radius2 <= 0.0 {
                    return Err(self.bad_level(level));
                }
                let (z, w) = hopf(p);
                Ok((z * radius2.sqrt(), w * radius2.sqrt()))
            }
            Family::Ellipsoid { a, b, c, d } => {
                let rhs = 1.0 + level;
                if rhs <= 0.0 {
                    return Err(self.bad_level(level));
                }
                let s = rhs.sqrt();
                let (u, v) = hopf(p);
                Ok((
                    Complex64::new(s * u.re / a.sqrt(), s * u.im / b.sqrt()),
                    Complex64::new(s * v.re / c.sqrt(), s * v.im / d.sqrt()),
                ))
            }
            Family::CartanMu { alpha } => {
                let (u, v) = hopf(p);
                let t = cartan_ray_root(alpha, u, v, level).ok_or_else(|| self.bad_level(level))?;
                Ok((u * t, v * t))
            }
        }
    }

    fn bad_level(&self, level: f64) -> SurfaceError {
        SurfaceError::InvalidLevel {
            family: self.kind().tag(),
            level,
        }
    }

    /// Draws parameterization coordinates for sample `index` of stream `seed`.
    fn draw_params(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        match self {
            Family::FlatTube { .. } => [
                rng.random::<f64>() * TAU,
                (2.0 * rng.random::<f64>() - 1.0) * PI,
                (2.0 * rng.random::<f64>() - 1.0) * PI,
            ],
            Family::LogTube { .. } => [
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
            ],
            // |z|² = cos²η is uniform on [0, 1] for the uniform measure on S³.
            _ => [
                rng.random::<f64>().sqrt().acos(),
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
            ],
        }
    }
}

fn tube_radius(family: &Family, level: f64) -> Result<f64, SurfaceError> {
    if level > 0.0 && level.is_finite() {
        Ok(level.sqrt())
    } else {
        Err(family.bad_level(level))
    }
}

fn hopf(p: [f64; 3]) -> (Complex64, Complex64) {
    let (s, c) = p[0].sin_cos();
    (
        Complex64::from_polar(c, p[1]),
        Complex64::from_polar(s, p[2]),
    )
}

fn cartan_rho(alpha: f64, z: Complex64, w: Complex64) -> f64 {
    alpha * (1.0 + z * z + w * w).norm() - (1.0 + z.norm_sqr() + w.norm_sqr())
}

// Rays leaving this ball are rejected; far points of the chart lose precision.
const CARTAN_MAX_RADIUS: f64 = 10.0;

/// Smallest positive root of `ρ(t u, t v) = level`, located by scanning and bisection.
fn cartan_ray_root(alpha: f64, u: Complex64, v: Complex64, level: f64) -> Option<f64> {
    let g = |t: f64| cartan_rho(alpha, u * t, v * t) - level;
    let mut lo = 0.0;
    let mut g_lo = g(lo);
    if g_lo == 0.0 {
        return Some(0.0);
    }
    let mut step = 0.05;
    let mut hi = lo + step;
    let mut g_hi = g(hi);
    while g_lo.signum() == g_hi.signum() {
        lo = hi;
        g_lo = g_hi;
        step *= 1.25;
        hi = lo + step;
        if hi > CARTAN_MAX_RADIUS {
            return None;
        }
        g_hi = g(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// A point of `ℂ²` with its residual `ρ(p) − level` and, when it was
/// generated from a parameterization, the parameter values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub z: Complex64,
    pub w: Complex64,
    pub residual: f64,
    pub param: Option<[f64; 3]>,
}

fn polarized_vars(z: Complex64, w: Complex64, degree: usize) -> Result<[Jet; 4], SurfaceError> {
    let base = [z, w, z.conj(), w.conj()];
    let mut out = Vec::with_capacity(4);
    for (var, b) in Var::ALL.into_iter().zip(base) {
        out.push(Jet::variable(var, b, degree)?.with_base(base));
    }
    Ok(out.try_into().expect("four variables"))
}

/// Jet of the raw polarized defining function of `family` at `(z, w)`.
///
/// Polarized forms:
/// * flat tube: `−((z−ζ)² + (w−ω)²)/4`
/// * log tube: `(½ log zζ)² + (½ log wω)²`
/// * sphere: `zζ + wω − r²`
/// * ellipsoid: `a x² + b x′² + c y² + d y′² − 1` with `x = (z+ζ)/2`, `x′ = (z−ζ)/2i`
/// * Cartan μ_α: `α √(q q̃) − (1 + zζ + wω)` with `q = 1 + z² + w²`, `q̃ = 1 + ζ² + ω²`
pub fn rho_jet(
    family: &Family,
    z: Complex64,
    w: Complex64,
    degree: usize,
) -> Result<Jet, SurfaceError> {
    let [zj, wj, zeta, omega] = polarized_vars(z, w, degree)?;
    let one = Complex64::new(1.0, 0.0);
    let jet = match *family {
        Family::FlatTube { .. } => {
            let u = zj.sub(&zeta)?;
            let v = wj.sub(&omega)?;
            u.mul(&u)?.add(&v.mul(&v)?)?.scale_re(-0.25)
        }
        Family::LogTube { .. } => {
            if z.norm() == 0.0 || w.norm() == 0.0 {
                return Err(SurfaceError::Domain {
                    family: "log-tube",
                    reason: "z and w must be non-zero".into(),
                });
            }
            let lz = zj.mul(&zeta)?.log()?.scale_re(0.5);
            let lw = wj.mul(&omega)?.log()?.scale_re(0.5);
            lz.mul(&lz)?.add(&lw.mul(&lw)?)?
        }
        Family::Sphere { r } => zj
            .mul(&zeta)?
            .add(&wj.mul(&omega)?)?
            .add_scalar(Complex64::new(-r * r, 0.0)),
        Family::Ellipsoid { a, b, c, d } => {
            let half_i = Complex64::new(0.0, -0.5);
            let x = zj.add(&zeta)?.scale_re(0.5);
            let xp = zj.sub(&zeta)?.scale(half_i);
            let y = wj.add(&omega)?.scale_re(0.5);
            let yp = wj.sub(&omega)?.scale(half_i);
            x.mul(&x)?
                .scale_re(a)
                .add(&xp.mul(&xp)?.scale_re(b))?
                .add(&y.mul(&y)?.scale_re(c))?
                .add(&yp.mul(&yp)?.scale_re(d))?
                .add_scalar(-one)
        }
        Family::CartanMu { alpha } => {
            let q = zj.mul(&zj)?.add(&wj.mul(&wj)?)?.add_scalar(one);
            let qt = zeta.mul(&zeta)?.add(&omega.mul(&omega)?)?.add_scalar(one);
            let qq = q.mul(&qt)?;
            if qq.value().norm() == 0.0 {
                return Err(SurfaceError::Domain {
                    family: "cartan-mu",
                    reason: "1 + z² + w² vanishes".into(),
                });
            }
            qq.sqrt()?
                .scale_re(alpha)
                .sub(&zj.mul(&zeta)?.add(&wj.mul(&omega)?)?.add_scalar(one))?
        }
    };
    Ok(jet)
}

/// Value of the raw defining function at `(z, w)`.
pub fn rho_value(family: &Family, z: Complex64, w: Complex64) -> Result<f64, SurfaceError> {
    Ok(rho_jet(family, z, w, 1)?.value().re)
}

/// Newton projection onto `{ρ = level}` along the real gradient of `ρ`.
///
/// In complex notation the real gradient is `2(ρ_ζ, ρ_ω)`, so each step is
/// `p ← p + (level − ρ) (ρ_ζ, ρ_ω) / (2 (|ρ_ζ|² + |ρ_ω|²))`.
pub fn project_to_level(
    family: &Family,
    level: f64,
    start: (Complex64, Complex64),
    tol: f64,
    max_iter: usize,
) -> Result<SurfacePoint, SurfaceError> {
    let (mut z, mut w) = start;
    for iter in 0..=max_iter {
        let rho = rho_jet(family, z, w, 1)?;
        let residual = rho.value().re - level;
        if residual.abs() <= tol {
            return Ok(SurfacePoint {
                z,
                w,
                residual,
                param: None,
            });
        }
        if iter == max_iter {
            return Err(SurfaceError::NoConvergence {
                iterations: max_iter,
                residual,
            });
        }
        let gz = rho.coeff([0, 0, 1, 0]);
        let gw = rho.coeff([0, 0, 0, 1]);
        let norm2 = gz.norm_sqr() + gw.norm_sqr();
        if !(norm2 > 1e-300) {
            return Err(SurfaceError::VanishingGradient { z, w });
        }
        let step = -residual / (2.0 * norm2);
        z += gz * step;
        w += gw * step;
    }
    unreachable!("loop returns on its last iteration")
}

/// Projection tolerance used when sampling.
pub const SAMPLE_TOL: f64 = 1e-12;
const SAMPLE_MAX_ITER: usize = 50;
const MAX_REJECTIONS: usize = 64;

/// Generates sample `index` of the deterministic stream `seed`.
///
/// Every index draws from its own ChaCha8 stream (`seed`, stream `index`),
/// so a sample does not depend on how many others are drawn or on which
/// worker draws it.
pub fn sample_point(
    family: &Family,
    level: f64,
    seed: u64,
    index: u64,
) -> Result<SurfacePoint, SurfaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut last_err = None;
    for _ in 0..MAX_REJECTIONS {
        let params = family.draw_params(&mut rng);
        let start = match family.parameterize(params, level) {
            Ok(p) => p,
            Err(e @ SurfaceError::InvalidLevel { .. }) if family.kind() == FamilyKind::CartanMu => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut point = project_to_level(family, level, start, SAMPLE_TOL, SAMPLE_MAX_ITER)?;
        point.param = Some(params);
        return Ok(point);
    }
    Err(last_err.unwrap_or_else(|| family.bad_level(level)))
}

/// `count` deterministic pseudo-random points on `{ρ = level}`.
pub fn sample_points(
    family: &Family,
    level: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SurfacePoint>, SurfaceError> {
    (0..count as u64)
        .map(|i| sample_point(family, level, seed, i))
        .collect()
}
