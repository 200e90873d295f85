//! The Robertson-Walker ambient `L⁴₁(f, c) = I ×_f R³(c)` with metric
//! `-dt² + f(t)² g_c`.
//!
//! The Levi-Civita connection is evaluated as
//!
//! ```text
//! ∇̃_X Y = ∇⁰_X Y + (f'/f) ( g(X̄, Ȳ) ∂/∂t + X₀ Ȳ + Y₀ X̄ )
//! ```
//!
//! where `∇⁰` is the connection of the unwarped product `I × R³(c)`, realized
//! by flat coordinate differencing plus the space-form correction, and
//! `g(X̄, Ȳ) = f² g_c(X̄, Ȳ)` is the fiber part of the warped metric. The
//! curvature tensor is evaluated in closed form by multilinear expansion into
//! `∂/∂t` and fiber parts.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::GeomError;
use crate::numerics::{self, d1, d1_richardson, Linear};
use crate::space_forms::{fiber_connection_correction, fiber_tangent_project, FiberPoint, SpaceForm, Vec4};

fn default_one() -> f64 {
    1.0
}

/// Analytic warping profile; all derivatives are hand-coded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WarpKind {
    /// `f(t) = value`
    Constant { value: f64 },
    /// `f(t) = scale · e^{rate t}`
    Exponential {
        #[serde(default = "default_one")]
        scale: f64,
        #[serde(default = "default_one")]
        rate: f64,
    },
    /// `f(t) = scale · cosh(rate t)`
    Cosh {
        #[serde(default = "default_one")]
        scale: f64,
        #[serde(default = "default_one")]
        rate: f64,
    },
    /// `f(t) = Σ coeffs[k] t^k`
    Polynomial { coeffs: Vec<f64> },
    /// `f(t) = scale · (t + shift)^power`
    PowerShifted {
        shift: f64,
        power: f64,
        #[serde(default = "default_one")]
        scale: f64,
    },
}

impl WarpKind {
    fn eval(&self, t: f64) -> f64 {
        match self {
            WarpKind::Constant { value } => *value,
            WarpKind::Exponential { scale, rate } => scale * (rate * t).exp(),
            WarpKind::Cosh { scale, rate } => scale * (rate * t).cosh(),
            WarpKind::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            WarpKind::PowerShifted { shift, power, scale } => scale * (t + shift).powf(*power),
        }
    }

    fn deriv1(&self, t: f64) -> f64 {
        match self {
            WarpKind::Constant { .. } => 0.0,
            WarpKind::Exponential { scale, rate } => scale * rate * (rate * t).exp(),
            WarpKind::Cosh { scale, rate } => scale * rate * (rate * t).sinh(),
            WarpKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c),
            WarpKind::PowerShifted { shift, power, scale } => {
                scale * power * (t + shift).powf(power - 1.0)
            }
        }
    }

    fn deriv2(&self, t: f64) -> f64 {
        match self {
            WarpKind::Constant { .. } => 0.0,
            WarpKind::Exponential { scale, rate } => scale * rate * rate * (rate * t).exp(),
            WarpKind::Cosh { scale, rate } => scale * rate * rate * (rate * t).cosh(),
            WarpKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + (k * (k - 1)) as f64 * c),
            WarpKind::PowerShifted { shift, power, scale } => {
                scale * power * (power - 1.0) * (t + shift).powf(power - 2.0)
            }
        }
    }
}

/// Smooth non-vanishing warping function `f` on an open interval `I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpingFunction {
    kind: WarpKind,
    interval: (f64, f64),
}

impl WarpingFunction {
    /// Validates that `f` stays away from zero (|f| ≥ 1e-9 on a dense grid).
    pub fn new(kind: WarpKind, interval: (f64, f64)) -> Result<WarpingFunction, GeomError> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GeomError::Invalid(format!(
                "warping interval ({lo}, {hi}) is not a finite non-empty interval"
            )));
        }
        let samples = 1024;
        for i in 0..=samples {
            let t = lo + (hi - lo) * i as f64 / samples as f64;
            let value = kind.eval(t);
            if !value.is_finite() || value.abs() < 1e-9 {
                return Err(GeomError::VanishingWarp { t, value });
            }
        }
        Ok(WarpingFunction { kind, interval })
    }

    pub fn constant(value: f64, interval: (f64, f64)) -> Result<WarpingFunction, GeomError> {
        WarpingFunction::new(WarpKind::Constant { value }, interval)
    }

    pub fn kind(&self) -> &WarpKind {
        &self.kind
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.interval.0 && t <= self.interval.1
    }

    pub fn check_contains(&self, t: f64) -> Result<(), GeomError> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(GeomError::OutOfDomain {
                value: t,
                lo: self.interval.0,
                hi: self.interval.1,
            })
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.kind.eval(t)
    }

    pub fn deriv1(&self, t: f64) -> f64 {
        self.kind.deriv1(t)
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        self.kind.deriv2(t)
    }
}

/// A point `(t, x)` of the warped product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientPoint {
    pub t: f64,
    pub fiber: FiberPoint,
}

impl AmbientPoint {
    pub fn new(warp: &WarpingFunction, t: f64, fiber: FiberPoint) -> Result<AmbientPoint, GeomError> {
        warp.check_contains(t)?;
        Ok(AmbientPoint { t, fiber })
    }
}

/// Orthogonal decomposition `X = X₀ ∂/∂t + X̄` of an ambient tangent vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AmbientVector {
    /// Component along the comoving observer field `∂/∂t`.
    pub t0: f64,
    /// Fiber part, tangent to the model at the carrying point.
    pub bar: Vec4,
}

impl AmbientVector {
    pub const ZERO: AmbientVector = AmbientVector {
        t0: 0.0,
        bar: Vec4::ZERO,
    };

    pub fn new(t0: f64, bar: Vec4) -> AmbientVector {
        AmbientVector { t0, bar }
    }

    /// The comoving observer field `∂/∂t`.
    pub fn dt() -> AmbientVector {
        AmbientVector::new(1.0, Vec4::ZERO)
    }

    pub fn coords(self) -> [f64; 5] {
        [self.t0, self.bar[0], self.bar[1], self.bar[2], self.bar[3]]
    }

    pub fn from_coords(c: [f64; 5]) -> AmbientVector {
        AmbientVector::new(c[0], Vec4::new(c[1], c[2], c[3], c[4]))
    }

    pub fn max_abs(self) -> f64 {
        self.t0.abs().max(self.bar.max_abs())
    }
}

impl Add for AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: AmbientVector) -> AmbientVector {
        AmbientVector::new(self.t0 + rhs.t0, self.bar + rhs.bar)
    }
}

impl Sub for AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: AmbientVector) -> AmbientVector {
        AmbientVector::new(self.t0 - rhs.t0, self.bar - rhs.bar)
    }
}

impl Mul<f64> for AmbientVector {
    type Output = AmbientVector;
    fn mul(self, k: f64) -> AmbientVector {
        AmbientVector::new(self.t0 * k, self.bar * k)
    }
}

impl Neg for AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        self * -1.0
    }
}

impl Linear for AmbientVector {
    fn zero() -> Self {
        AmbientVector::ZERO
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Warped metric `⟨X, Y⟩ = -X₀Y₀ + f(t)² g_c(X̄, Ȳ)` at `p`.
pub fn ambient_metric(
    warp: &WarpingFunction,
    p: &AmbientPoint,
    x: &AmbientVector,
    y: &AmbientVector,
) -> f64 {
    let f = warp.eval(p.t);
    -x.t0 * y.t0 + f * f * p.fiber.form.embed_inner(x.bar, y.bar)
}

/// Covariant derivative `∇̃_{γ'(s)} V` of a vector field `V` along a curve
/// `γ`, by 4th-order differencing plus the connection corrections.
///
/// The result is returned at `γ(s)` with its fiber part projected back to the
/// model tangent space.
pub fn ambient_covariant_derivative<G, V>(
    warp: &WarpingFunction,
    gamma: G,
    field: V,
    s: f64,
) -> Result<AmbientVector, GeomError>
where
    G: Fn(f64) -> Result<AmbientPoint, GeomError>,
    V: Fn(f64) -> Result<AmbientVector, GeomError>,
{
    covariant_along(warp, &gamma, &field, s, false)
}

/// Assembles `∇̃_{velocity} V` at `p` from the raw coordinate derivative of
/// the field `V` along a curve through `p` with the given velocity.
///
/// `raw_derivative` are the plain componentwise derivatives `(V₀', V̄')` in
/// product coordinates. This is the warped-product connection expansion with `∇⁰` realized as
/// flat differencing plus the space-form correction; the fiber part of the
/// result is projected back onto the model.
pub fn covariant_from_raw(
    warp: &WarpingFunction,
    p: &AmbientPoint,
    velocity: &AmbientVector,
    value: &AmbientVector,
    raw_derivative: [f64; 5],
) -> AmbientVector {
    let x = p.fiber;
    let dvalue = AmbientVector::from_coords(raw_derivative);

    // Product connection: flat t-derivative plus the fiber correction.
    let bar0 = dvalue.bar + fiber_connection_correction(&x, velocity.bar, value.bar);

    let f = warp.eval(p.t);
    let lam = warp.deriv1(p.t) / f;
    let g_fiber = f * f * x.form.embed_inner(velocity.bar, value.bar);

    AmbientVector::new(
        dvalue.t0 + lam * g_fiber,
        fiber_tangent_project(&x, bar0) + (value.bar * velocity.t0 + velocity.bar * value.t0) * lam,
    )
}

pub(crate) fn covariant_along(
    warp: &WarpingFunction,
    gamma: &dyn Fn(f64) -> Result<AmbientPoint, GeomError>,
    field: &dyn Fn(f64) -> Result<AmbientVector, GeomError>,
    s: f64,
    richardson: bool,
) -> Result<AmbientVector, GeomError> {
    let h = numerics::step_for(s);
    let p = gamma(s)?;
    warp.check_contains(p.t)?;

    let coords = |r: f64| -> Result<[f64; 5], GeomError> {
        let q = gamma(r)?;
        warp.check_contains(q.t)?;
        Ok([q.t, q.fiber.coords[0], q.fiber.coords[1], q.fiber.coords[2], q.fiber.coords[3]])
    };
    let field_coords = |r: f64| -> Result<[f64; 5], GeomError> { Ok(field(r)?.coords()) };

    let (dgamma, dfield) = if richardson {
        (d1_richardson(&coords, s, h)?, d1_richardson(&field_coords, s, h)?)
    } else {
        (d1(&coords, s, h)?, d1(&field_coords, s, h)?)
    };

    let x = p.fiber;
    let velocity = AmbientVector::new(
        dgamma[0],
        fiber_tangent_project(&x, Vec4::new(dgamma[1], dgamma[2], dgamma[3], dgamma[4])),
    );
    let value = field(s)?;
    Ok(covariant_from_raw(warp, &p, &velocity, &value, dfield))
}

/// Closed-form curvature tensor `R̃(X, Y) Z` of the warped product.
pub fn ambient_curvature(
    warp: &WarpingFunction,
    p: &AmbientPoint,
    x: &AmbientVector,
    y: &AmbientVector,
    z: &AmbientVector,
) -> AmbientVector {
    let form = p.fiber.form;
    let f = warp.eval(p.t);
    let radial = warp.deriv2(p.t) / f;
    let fp = warp.deriv1(p.t);
    let sectional = (fp * fp + form.c()) / (f * f);
    let f2 = f * f;

    let yz = f2 * form.embed_inner(y.bar, z.bar);
    let xz = f2 * form.embed_inner(x.bar, z.bar);

    // R̃(∂t, Ȳ)∂t = (f''/f) Ȳ,       R̃(∂t, Ȳ) Z̄ = (f''/f) ⟨Ȳ, Z̄⟩ ∂t,
    // R̃(X̄, Ȳ)∂t = 0,               R̃(X̄, Ȳ) Z̄ = k (⟨Ȳ,Z̄⟩ X̄ - ⟨X̄,Z̄⟩ Ȳ).
    let t0 = radial * (x.t0 * yz - y.t0 * xz);
    let bar = y.bar * (radial * x.t0 * z.t0) - x.bar * (radial * y.t0 * z.t0)
        + x.bar * (sectional * yz)
        - y.bar * (sectional * xz);

    AmbientVector::new(t0, bar)
}

/// Deviation of `L⁴₁(f, c)` from constant sectional curvature at `t`:
/// `f''/f - (f'² + c)/f²`. The classification assumes this never vanishes.
pub fn constant_curvature_defect(warp: &WarpingFunction, form: SpaceForm, t: f64) -> f64 {
    let f = warp.eval(t);
    let fp = warp.deriv1(t);
    warp.deriv2(t) / f - (fp * fp + form.c()) / (f * f)
}

/// Curvature by second-order connection differencing, the independent oracle
/// for [`ambient_curvature`].
///
/// Evaluates `R̃(X, Y) Z = D₁D₂ Z̃ - D₂D₁ Z̃` on a two-parameter surface
/// through `p` with coordinate velocities `X` and `Y`, where `Z̃` extends `Z`
/// with constant coordinates projected to the fiber tangent space.
pub fn curvature_by_differencing(
    warp: &WarpingFunction,
    p: &AmbientPoint,
    x: &AmbientVector,
    y: &AmbientVector,
    z: &AmbientVector,
) -> Result<AmbientVector, GeomError> {
    let form = p.fiber.form;
    let base = *p;
    let sigma = move |s1: f64, s2: f64| -> Result<AmbientPoint, GeomError> {
        let coords = base.fiber.coords + x.bar * s1 + y.bar * s2;
        Ok(AmbientPoint {
            t: base.t + s1 * x.t0 + s2 * y.t0,
            fiber: FiberPoint {
                form,
                coords: form.project_to_model(coords)?,
            },
        })
    };
    let extend = move |q: &AmbientPoint| -> AmbientVector {
        AmbientVector::new(z.t0, fiber_tangent_project(&q.fiber, z.bar))
    };

    // D_a D_b Z̃ at (0, 0) for coordinate directions (a, b) of σ.
    let second = |first: usize| -> Result<AmbientVector, GeomError> {
        let inner = |s_outer: f64| -> Result<AmbientVector, GeomError> {
            let curve = |s_inner: f64| {
                if first == 0 {
                    sigma(s_outer, s_inner)
                } else {
                    sigma(s_inner, s_outer)
                }
            };
            let fld = |s_inner: f64| Ok(extend(&curve(s_inner)?));
            covariant_along(warp, &curve, &fld, 0.0, false)
        };
        let outer_curve = |s_outer: f64| {
            if first == 0 {
                sigma(s_outer, 0.0)
            } else {
                sigma(0.0, s_outer)
            }
        };
        covariant_along(warp, &outer_curve, &inner, 0.0, true)
    };

    let d12 = second(0)?;
    let d21 = second(1)?;
    Ok(d12 - d21)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat_unit() -> WarpingFunction {
        WarpingFunction::constant(1.0, (-10.0, 10.0)).unwrap()
    }

    fn e3_point(t: f64, x: f64, y: f64, z: f64) -> AmbientPoint {
        AmbientPoint {
            t,
            fiber: FiberPoint::new(SpaceForm::Euclidean, Vec4::from3(x, y, z)).unwrap(),
        }
    }

    #[test]
    fn metric_timelike_unit() {
        let w = flat_unit();
        let p = e3_point(0.0, 0.0, 0.0, 0.0);
        let dt = AmbientVector::dt();
        assert_eq!(ambient_metric(&w, &p, &dt, &dt), -1.0);
    }

    #[test]
    fn metric_scales_with_f_squared() {
        let w = WarpingFunction::constant(2.0, (-1.0, 1.0)).unwrap();
        let p = e3_point(0.0, 0.0, 0.0, 0.0);
        let x = AmbientVector::new(0.0, Vec4::from3(1.0, 0.0, 0.0));
        assert_eq!(ambient_metric(&w, &p, &x, &x), 4.0);
    }

    #[test]
    fn metric_orthogonal_split() {
        let w = flat_unit();
        let p = e3_point(0.0, 0.0, 0.0, 0.0);
        let x = AmbientVector::dt();
        let y = AmbientVector::new(0.0, Vec4::from3(0.3, -2.0, 1.0));
        assert_eq!(ambient_metric(&w, &p, &x, &y), 0.0);
    }

    #[test]
    fn warping_derivatives_are_consistent() {
        let kinds = vec![
            WarpKind::Exponential { scale: 1.0, rate: 1.0 },
            WarpKind::Cosh { scale: 1.0, rate: 0.7 },
            WarpKind::Polynomial { coeffs: vec![2.0, 1.0, -0.3] },
            WarpKind::PowerShifted { shift: 3.0, power: 1.5, scale: 0.5 },
        ];
        for kind in kinds {
            let w = WarpingFunction::new(kind, (-1.0, 1.0)).unwrap();
            for &t in &[-0.5, 0.0, 0.8] {
                let h = 1e-4;
                let fd1 = (w.eval(t + h) - w.eval(t - h)) / (2.0 * h);
                let fd2 = (w.eval(t + h) - 2.0 * w.eval(t) + w.eval(t - h)) / (h * h);
                assert_abs_diff_eq!(fd1, w.deriv1(t), epsilon = 1e-6);
                assert_abs_diff_eq!(fd2, w.deriv2(t), epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn warping_rejects_vanishing_profile() {
        let err = WarpingFunction::new(WarpKind::Polynomial { coeffs: vec![0.0, 1.0] }, (-1.0, 1.0));
        assert!(matches!(err, Err(GeomError::VanishingWarp { .. })));
    }

    #[test]
    fn t_line_transports_dt_flat() {
        let w = WarpingFunction::new(WarpKind::Exponential { scale: 1.0, rate: 1.0 }, (-2.0, 2.0))
            .unwrap();
        let gamma = |s: f64| Ok(e3_point(s, 0.4, -0.1, 0.2));
        let field = |_s: f64| Ok(AmbientVector::dt());
        let out = ambient_covariant_derivative(&w, gamma, field, 0.3).unwrap();
        assert!(out.max_abs() < 1e-10);
    }

    #[test]
    fn t_line_scales_constant_fiber_field() {
        // Warp term X₀ Ȳ with X₀ = 1, Y₀ = 0: result (f'/f) Ȳ.
        let w = WarpingFunction::new(WarpKind::Exponential { scale: 1.0, rate: 1.0 }, (-2.0, 2.0))
            .unwrap();
        let bar = Vec4::from3(0.7, -0.2, 1.1);
        let gamma = |s: f64| Ok(e3_point(s, 0.0, 0.0, 0.0));
        let field = move |_s: f64| Ok(AmbientVector::new(0.0, bar));
        let out = ambient_covariant_derivative(&w, gamma, field, 0.5).unwrap();
        // f'/f = 1 for f = e^t.
        assert!((out - AmbientVector::new(0.0, bar)).max_abs() < 1e-9);
    }

    #[test]
    fn flat_product_reduces_to_componentwise_derivative() {
        let w = flat_unit();
        let gamma = |s: f64| Ok(e3_point(0.2 * s, s, s * s, 1.0 - s));
        let field = |s: f64| {
            Ok(AmbientVector::new(
                s * s - 0.3,
                Vec4::from3(s.powi(3), 2.0 * s, -1.0),
            ))
        };
        let s = 0.4;
        let got = ambient_covariant_derivative(&w, gamma, field, s).unwrap();
        let expected = AmbientVector::new(2.0 * s, Vec4::from3(3.0 * s * s, 2.0, 0.0));
        assert!((got - expected).max_abs() < 1e-9);
    }

    #[test]
    fn covariant_derivative_reports_domain_exit() {
        // Stencil points leave the warping interval near its boundary.
        let w = WarpingFunction::new(WarpKind::Exponential { scale: 1.0, rate: 1.0 }, (-2.0, 2.0))
            .unwrap();
        let gamma = |s: f64| Ok(e3_point(s, 0.0, 0.0, 0.0));
        let field = |_s: f64| Ok(AmbientVector::dt());
        let err = ambient_covariant_derivative(&w, gamma, field, 2.0 - 1e-5);
        assert!(matches!(err, Err(GeomError::OutOfDomain { .. })));
    }

    #[test]
    fn curvature_radial_term_cosh() {
        // R̃(∂t, X̄)∂t = (f''/f) X̄; for f = cosh t at t = 0 this is X̄ exactly.
        let w = WarpingFunction::new(WarpKind::Cosh { scale: 1.0, rate: 1.0 }, (-2.0, 2.0)).unwrap();
        let p = e3_point(0.0, 0.0, 0.0, 0.0);
        let xbar = AmbientVector::new(0.0, Vec4::from3(0.3, 0.4, -0.2));
        let got = ambient_curvature(&w, &p, &AmbientVector::dt(), &xbar, &AmbientVector::dt());
        assert!((got - xbar).max_abs() < 1e-14);
    }

    #[test]
    fn curvature_fiber_pair_kills_dt() {
        let w = WarpingFunction::new(WarpKind::Cosh { scale: 1.0, rate: 1.0 }, (-2.0, 2.0)).unwrap();
        let p = e3_point(0.3, 0.0, 0.0, 0.0);
        let x = AmbientVector::new(0.0, Vec4::from3(1.0, 0.0, 0.0));
        let y = AmbientVector::new(0.0, Vec4::from3(0.0, 1.0, 0.0));
        let got = ambient_curvature(&w, &p, &x, &y, &AmbientVector::dt());
        assert!(got.max_abs() < 1e-14);
    }

    #[test]
    fn curvature_vanishes_in_flat_product() {
        let w = flat_unit();
        let p = e3_point(0.1, 0.4, 0.0, -0.3);
        let x = AmbientVector::new(0.5, Vec4::from3(1.0, -0.2, 0.0));
        let y = AmbientVector::new(-1.0, Vec4::from3(0.3, 0.9, 0.4));
        let z = AmbientVector::new(0.2, Vec4::from3(-0.6, 0.1, 1.2));
        assert_eq!(ambient_curvature(&w, &p, &x, &y, &z), AmbientVector::ZERO);
    }

    #[test]
    fn defect_examples() {
        let exp = WarpingFunction::new(WarpKind::Exponential { scale: 1.0, rate: 1.0 }, (-1.0, 1.0))
            .unwrap();
        assert_abs_diff_eq!(
            constant_curvature_defect(&exp, SpaceForm::Euclidean, 0.4),
            0.0,
            epsilon = 1e-14
        );

        let one = flat_unit();
        assert_abs_diff_eq!(
            constant_curvature_defect(&one, SpaceForm::Sphere, 0.0),
            -1.0,
            epsilon = 1e-14
        );

        let lin = WarpingFunction::new(WarpKind::Polynomial { coeffs: vec![0.0, 1.0] }, (1.0, 3.0))
            .unwrap();
        assert_abs_diff_eq!(
            constant_curvature_defect(&lin, SpaceForm::Euclidean, 2.0),
            -0.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn differencing_oracle_matches_closed_form_flat() {
        let w = flat_unit();
        let p = e3_point(0.1, 0.2, -0.4, 0.5);
        let x = AmbientVector::new(0.4, Vec4::from3(1.0, 0.1, -0.3));
        let y = AmbientVector::new(-0.2, Vec4::from3(0.0, 1.0, 0.7));
        let z = AmbientVector::new(0.9, Vec4::from3(0.5, -0.5, 0.2));
        let got = curvature_by_differencing(&w, &p, &x, &y, &z).unwrap();
        assert!(got.max_abs() < 1e-6);
    }

    #[test]
    fn differencing_oracle_matches_closed_form_warped_sphere() {
        let w = WarpingFunction::new(WarpKind::Cosh { scale: 1.0, rate: 1.0 }, (-2.0, 2.0)).unwrap();
        let fiber = FiberPoint::new(
            SpaceForm::Sphere,
            SpaceForm::Sphere
                .project_to_model(Vec4::new(0.9, 0.3, -0.2, 0.4))
                .unwrap(),
        )
        .unwrap();
        let p = AmbientPoint { t: 0.3, fiber };
        let tangent = |v: Vec4| fiber_tangent_project(&fiber, v);
        let x = AmbientVector::new(0.4, tangent(Vec4::new(1.0, 0.1, -0.3, 0.2)));
        let y = AmbientVector::new(-0.2, tangent(Vec4::new(0.0, 1.0, 0.7, -0.5)));
        let z = AmbientVector::new(0.9, tangent(Vec4::new(0.5, -0.5, 0.2, 0.8)));
        let numeric = curvature_by_differencing(&w, &p, &x, &y, &z).unwrap();
        let closed = ambient_curvature(&w, &p, &x, &y, &z);
        assert!(
            (numeric - closed).max_abs() < 1e-4,
            "residual {}",
            (numeric - closed).max_abs()
        );
    }
}
