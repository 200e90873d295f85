//! Constructors for the classified families of surfaces with positive
//! relative nullity, their closed-form invariants `(ω, h³₂₂, h⁴₂₂)`, and
//! admissibility validation.
//!
//! Seven kinds are built:
//!
//! * `SpacelikeRw0` / `TimelikeRw0` — warped flat fiber, parametrized by
//!   `φ(u, v) = (u, φ₁α₁ + (∫ a/(f √(a² ∓ f²)) + φ₂) α₂ + φ₃ α₃)` with the
//!   3-frame `αᵢ(v)` driven by `a₁, a₂` and `φ₂' = -a₁φ₁`, `φ₃' = -a₂φ₁`;
//! * `ProductCurve` — `φ(u, v) = (u, α(v))` over a curve `α` in `R³(c)`;
//! * `SpacelikeS3` / `TimelikeS3` — trigonometric combinations of a 4-frame
//!   in `E⁴` over the unit sphere, with constant angle `θ₀`;
//! * `SpacelikeH3` / `TimelikeH3` — hyperbolic combinations of a 4-frame in
//!   `E⁴₁` over the unit hyperbolic space, with constant angle `θ₀`.
//!
//! Constructed immersions carry analytic first partials (frame derivatives
//! come from the ODE right-hand sides, `u`-derivatives are closed-form);
//! second partials are produced by one differencing level over those firsts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ambient::{
    constant_curvature_defect, AmbientPoint, AmbientVector, WarpKind, WarpingFunction,
};
use crate::error::GeomError;
use crate::ode::{
    integrate_frame, phi23_from_ode, warp_integral, CoefficientFunction, FrameOdeSystem,
    FrameTemplate, WarpSign,
};
use crate::space_forms::{FiberPoint, SpaceForm, Vec4};
use crate::surface::{adapted_frame, Immersion};

/// Kind tag of a classified family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    SpacelikeRw0,
    TimelikeRw0,
    ProductCurve,
    SpacelikeS3,
    TimelikeS3,
    SpacelikeH3,
    TimelikeH3,
}

impl FamilyKind {
    pub fn is_spacelike(self) -> bool {
        matches!(
            self,
            FamilyKind::SpacelikeRw0 | FamilyKind::SpacelikeS3 | FamilyKind::SpacelikeH3
        )
    }

    pub fn is_rw0(self) -> bool {
        matches!(self, FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0)
    }

    pub fn is_constant_angle(self) -> bool {
        matches!(
            self,
            FamilyKind::SpacelikeS3
                | FamilyKind::TimelikeS3
                | FamilyKind::SpacelikeH3
                | FamilyKind::TimelikeH3
        )
    }
}

/// A curve in the fiber model, the generator of product surfaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CurveSpec {
    /// Unit-speed circle. `radius` is the Euclidean radius in `E³`, the
    /// Euclidean radius of the parallel in `S³` (1 = great circle), and the
    /// hyperbolic center distance in `H³`.
    Circle { form: SpaceForm, radius: f64 },
    /// Sampled curve, interpolated by a natural cubic spline per coordinate
    /// and projected back onto the model.
    Sampled {
        form: SpaceForm,
        nodes: Vec<f64>,
        points: Vec<[f64; 4]>,
    },
}

impl CurveSpec {
    pub fn form(&self) -> SpaceForm {
        match self {
            CurveSpec::Circle { form, .. } | CurveSpec::Sampled { form, .. } => *form,
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        match self {
            CurveSpec::Circle { form, radius } => {
                if *radius <= 0.0 {
                    return Err(GeomError::Invalid("circle radius must be positive".into()));
                }
                if *form == SpaceForm::Sphere && *radius > 1.0 {
                    return Err(GeomError::Invalid(
                        "sphere circle radius must be at most 1".into(),
                    ));
                }
                Ok(())
            }
            CurveSpec::Sampled { nodes, points, .. } => {
                if nodes.len() < 4 || nodes.len() != points.len() {
                    return Err(GeomError::Invalid(
                        "sampled curve needs at least four matching nodes/points".into(),
                    ));
                }
                if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(GeomError::Invalid(
                        "sampled curve nodes must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Geodesic curvature norm `‖∇_{α'} α'‖` of the builtin circles.
    pub fn circle_curvature(&self) -> Option<f64> {
        match self {
            CurveSpec::Circle { form, radius } => Some(match form {
                SpaceForm::Euclidean => 1.0 / radius,
                SpaceForm::Sphere => (1.0 - radius * radius).max(0.0).sqrt() / radius,
                SpaceForm::Hyperbolic => radius.cosh() / radius.sinh(),
            }),
            CurveSpec::Sampled { .. } => None,
        }
    }

    pub fn build(&self) -> Result<Curve, GeomError> {
        self.validate()?;
        match self {
            CurveSpec::Circle { form, radius } => Ok(Curve::Circle {
                form: *form,
                radius: *radius,
            }),
            CurveSpec::Sampled {
                form,
                nodes,
                points,
            } => {
                let mut splines = Vec::with_capacity(4);
                for k in 0..4 {
                    let values: Vec<f64> = points.iter().map(|p| p[k]).collect();
                    splines.push(CubicSpline::natural(nodes.clone(), values)?);
                }
                Ok(Curve::Spline {
                    form: *form,
                    splines: Arc::new(splines),
                })
            }
        }
    }
}

/// Runtime evaluator for a [`CurveSpec`].
#[derive(Clone)]
pub enum Curve {
    Circle {
        form: SpaceForm,
        radius: f64,
    },
    Spline {
        form: SpaceForm,
        splines: Arc<Vec<CubicSpline>>,
    },
}

impl Curve {
    pub fn point(&self, s: f64) -> Result<FiberPoint, GeomError> {
        match self {
            Curve::Circle { form, radius } => {
                let coords = circle_coords(*form, *radius, s).0;
                FiberPoint::new(*form, coords)
            }
            Curve::Spline { form, splines } => {
                let raw = Vec4::new(
                    splines[0].eval(s),
                    splines[1].eval(s),
                    splines[2].eval(s),
                    splines[3].eval(s),
                );
                FiberPoint::new(*form, form.project_to_model(raw)?)
            }
        }
    }

    pub fn velocity(&self, s: f64) -> Result<Vec4, GeomError> {
        match self {
            Curve::Circle { form, radius } => Ok(circle_coords(*form, *radius, s).1),
            Curve::Spline { form, splines } => {
                let raw = Vec4::new(
                    splines[0].eval(s),
                    splines[1].eval(s),
                    splines[2].eval(s),
                    splines[3].eval(s),
                );
                let draw = Vec4::new(
                    splines[0].deriv(s),
                    splines[1].deriv(s),
                    splines[2].deriv(s),
                    splines[3].deriv(s),
                );
                Ok(model_projection_differential(*form, raw, draw))
            }
        }
    }
}

fn circle_coords(form: SpaceForm, radius: f64, s: f64) -> (Vec4, Vec4) {
    match form {
        SpaceForm::Euclidean => {
            let w = s / radius;
            (
                Vec4::from3(radius * w.cos(), radius * w.sin(), 0.0),
                Vec4::from3(-w.sin(), w.cos(), 0.0),
            )
        }
        SpaceForm::Sphere => {
            let w = s / radius;
            let height = (1.0 - radius * radius).max(0.0).sqrt();
            (
                Vec4::new(radius * w.cos(), radius * w.sin(), height, 0.0),
                Vec4::new(-w.sin(), w.cos(), 0.0, 0.0),
            )
        }
        SpaceForm::Hyperbolic => {
            let rho = radius;
            let w = s / rho.sinh();
            (
                Vec4::new(rho.cosh(), rho.sinh() * w.cos(), rho.sinh() * w.sin(), 0.0),
                Vec4::new(0.0, -w.sin(), w.cos(), 0.0),
            )
        }
    }
}

/// Differential of the radial model projection at `raw`, applied to `w`.
fn model_projection_differential(form: SpaceForm, raw: Vec4, w: Vec4) -> Vec4 {
    match form {
        SpaceForm::Euclidean => Vec4::from3(w[0], w[1], w[2]),
        SpaceForm::Sphere => {
            let n = raw.norm();
            (w - raw * (w.dot(raw) / (n * n))) * (1.0 / n)
        }
        SpaceForm::Hyperbolic => {
            let q = -raw.minkowski_dot(raw);
            w * (1.0 / q.sqrt()) + raw * (w.minkowski_dot(raw) / q.powf(1.5))
        }
    }
}

/// Natural cubic spline on strictly increasing nodes.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    nodes: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(nodes: Vec<f64>, values: Vec<f64>) -> Result<CubicSpline, GeomError> {
        let n = nodes.len();
        if n < 3 || values.len() != n {
            return Err(GeomError::Invalid(
                "natural spline needs at least three matching nodes/values".into(),
            ));
        }
        // Tridiagonal solve for the interior second derivatives.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = nodes[i] - nodes[i - 1];
            let h1 = nodes[i + 1] - nodes[i];
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
        }
        for i in 1..n {
            let m = sub[i] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - sup[i] * second[i + 1]) / diag[i];
        }
        Ok(CubicSpline {
            nodes,
            values,
            second,
        })
    }

    fn segment(&self, s: f64) -> usize {
        let n = self.nodes.len();
        if s <= self.nodes[0] {
            return 0;
        }
        if s >= self.nodes[n - 1] {
            return n - 2;
        }
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let i = self.segment(s);
        let h = self.nodes[i + 1] - self.nodes[i];
        let a = (self.nodes[i + 1] - s) / h;
        let b = (s - self.nodes[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let i = self.segment(s);
        let h = self.nodes[i + 1] - self.nodes[i];
        let a = (self.nodes[i + 1] - s) / h;
        let b = (s - self.nodes[i]) / h;
        (self.values[i + 1] - self.values[i]) / h
            + ((3.0 * b * b - 1.0) * self.second[i + 1] - (3.0 * a * a - 1.0) * self.second[i]) * h
                / 6.0
    }
}

/// Parameters of one classified family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    /// Ambient warping; required for RW0 and product-curve kinds. The
    /// constant-angle kinds live in the unwarped product (`f ≡ 1` is implied and
    /// enforced when a warping is given).
    #[serde(default)]
    pub warping: Option<WarpingFunction>,
    /// Constant `a` of the RW0 constructions.
    #[serde(default)]
    pub a: Option<f64>,
    /// Constant angle `θ₀` of the unwarped product constructions.
    #[serde(default)]
    pub theta0: Option<f64>,
    #[serde(default)]
    pub a1: Option<CoefficientFunction>,
    #[serde(default)]
    pub a2: Option<CoefficientFunction>,
    #[serde(default)]
    pub a3: Option<CoefficientFunction>,
    #[serde(default)]
    pub phi1: Option<CoefficientFunction>,
    #[serde(default)]
    pub phi2_init: f64,
    #[serde(default)]
    pub phi3_init: f64,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    /// Initial frame vectors `Cᵢ` (three for the RW0 kinds, four for the
    /// constant-angle kinds; unused for product curves).
    #[serde(default)]
    pub init: Vec<Vec4>,
    #[serde(default)]
    pub u0: f64,
    #[serde(default)]
    pub v0: f64,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
}

/// Closed-form invariants of a family at a parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictedInvariants {
    pub omega: f64,
    pub h3_22: f64,
    pub h4_22: f64,
}

impl FamilySpec {
    /// Curvature flag of the fiber the family lives in.
    pub fn form(&self) -> SpaceForm {
        match self.kind {
            FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0 => SpaceForm::Euclidean,
            FamilyKind::SpacelikeS3 | FamilyKind::TimelikeS3 => SpaceForm::Sphere,
            FamilyKind::SpacelikeH3 | FamilyKind::TimelikeH3 => SpaceForm::Hyperbolic,
            FamilyKind::ProductCurve => self
                .curve
                .as_ref()
                .map(|c| c.form())
                .unwrap_or(SpaceForm::Euclidean),
        }
    }

    /// The warping function the constructed ambient uses.
    pub fn ambient_warping(&self) -> Result<WarpingFunction, GeomError> {
        if self.kind.is_constant_angle() {
            let kappa = self.time_scale()?;
            let lo = (kappa * self.u_range.0).min(kappa * self.u_range.1) - 1.0;
            let hi = (kappa * self.u_range.0).max(kappa * self.u_range.1) + 1.0;
            return WarpingFunction::constant(1.0, (lo, hi));
        }
        self.warping
            .clone()
            .ok_or_else(|| GeomError::Invalid("family needs a warping function".into()))
    }

    /// Scale of the `t`-coordinate: `sinh θ₀` (space-like) or `cosh θ₀`
    /// (time-like) for constant-angle kinds.
    fn time_scale(&self) -> Result<f64, GeomError> {
        let theta0 = self
            .theta0
            .ok_or_else(|| GeomError::Invalid("family needs theta0".into()))?;
        Ok(if self.kind.is_spacelike() {
            theta0.sinh()
        } else {
            theta0.cosh()
        })
    }

    /// Rate of the fiber angle: `cosh θ₀` (space-like) or `sinh θ₀`
    /// (time-like).
    fn fiber_rate(&self) -> Result<f64, GeomError> {
        let theta0 = self
            .theta0
            .ok_or_else(|| GeomError::Invalid("family needs theta0".into()))?;
        Ok(if self.kind.is_spacelike() {
            theta0.cosh()
        } else {
            theta0.sinh()
        })
    }

    fn coefficient(
        c: &Option<CoefficientFunction>,
        name: &str,
    ) -> Result<CoefficientFunction, GeomError> {
        c.clone()
            .ok_or_else(|| GeomError::Invalid(format!("family needs coefficient function {name}")))
    }

    /// Frame ODE system of the construction (absent for product curves).
    pub fn frame_system(&self) -> Result<Option<FrameOdeSystem>, GeomError> {
        let template = match self.kind {
            FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0 => FrameTemplate::Rw0,
            FamilyKind::SpacelikeS3 | FamilyKind::TimelikeS3 => FrameTemplate::S3,
            FamilyKind::SpacelikeH3 | FamilyKind::TimelikeH3 => FrameTemplate::H3,
            FamilyKind::ProductCurve => return Ok(None),
        };
        let a1 = Self::coefficient(&self.a1, "a1")?;
        let a2 = Self::coefficient(&self.a2, "a2")?;
        let a3 = if template.uses_a3() {
            Some(Self::coefficient(&self.a3, "a3")?)
        } else {
            None
        };
        Ok(Some(FrameOdeSystem::new(
            template, a1, a2, a3, &self.init, self.v0,
        )?))
    }

    /// Whether `η` vanishes identically (product surfaces and the time-like
    /// sphere kind at `θ₀ = 0`): invariant-based comparison is used there.
    pub fn eta_vanishes(&self) -> bool {
        match self.kind {
            FamilyKind::ProductCurve => true,
            FamilyKind::TimelikeS3 => self.theta0.map_or(false, |t| t == 0.0),
            _ => false,
        }
    }

    /// Expected constant of the θ-law: `a` for RW0 kinds, `θ₀` for
    /// constant-angle kinds, `0` for product curves.
    pub fn theta_law_constant(&self) -> f64 {
        if self.kind.is_rw0() {
            self.a.unwrap_or(0.0)
        } else if self.kind.is_constant_angle() {
            self.theta0.unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

// Family evaluators feed second-order differencing, so they must depend on
// their parameters smoothly down to machine precision. Integrating from v0
// with a query-dependent step count would make the tiny integration error
// jump discontinuously where the count switches; those jumps blow up under
// 1/h² amplification. The evaluators therefore precompute dense node
// solutions anchored at the base parameter and take a single short step from
// the nearest node, which keeps the error a smooth function of the query.
const DENSE_NODE_STEP: f64 = 1e-3;
// Covers the deepest nested differencing stencil around the rectangle.
const DENSE_PAD: f64 = 0.01;

/// Dense frame solution on a node grid anchored at `v0`.
struct DenseFrame {
    system: FrameOdeSystem,
    v0: f64,
    k_min: isize,
    k_max: isize,
    states: Vec<[Vec4; 4]>,
}

impl DenseFrame {
    fn build(system: FrameOdeSystem, lo: f64, hi: f64) -> Result<DenseFrame, GeomError> {
        let v0 = system.v0();
        let n = system.template().dim();
        let eta = system.template().eta();
        let h = DENSE_NODE_STEP;
        let k_min = ((lo - DENSE_PAD - v0) / h).floor() as isize - 1;
        let k_max = ((hi + DENSE_PAD - v0) / h).ceil() as isize + 1;
        let len = (k_max - k_min + 1) as usize;
        let mut states = vec![[Vec4::ZERO; 4]; len];
        let mut init = [Vec4::ZERO; 4];
        for (i, c) in integrate_frame(&system, v0)?.iter().enumerate() {
            init[i] = *c;
        }
        states[(-k_min) as usize] = init;
        let mut forward = init;
        for k in 1..=k_max.max(0) {
            let v = v0 + (k - 1) as f64 * h;
            forward = crate::ode::rk4_step(&system, v, h, &forward);
            crate::ode::eta_gram_schmidt(&mut forward, &eta, n)?;
            if k >= k_min {
                states[(k - k_min) as usize] = forward;
            }
        }
        let mut backward = init;
        for k in 1..=(-k_min).max(0) {
            let v = v0 - (k - 1) as f64 * h;
            backward = crate::ode::rk4_step(&system, v, -h, &backward);
            crate::ode::eta_gram_schmidt(&mut backward, &eta, n)?;
            if -k <= k_max {
                states[(-k - k_min) as usize] = backward;
            }
        }
        Ok(DenseFrame {
            system,
            v0,
            k_min,
            k_max,
            states,
        })
    }

    fn at(&self, v: f64) -> Result<[Vec4; 4], GeomError> {
        let h = DENSE_NODE_STEP;
        let k = ((v - self.v0) / h).floor() as isize;
        if k < self.k_min || k > self.k_max {
            return Err(GeomError::OutOfDomain {
                value: v,
                lo: self.v0 + self.k_min as f64 * h,
                hi: self.v0 + self.k_max as f64 * h,
            });
        }
        let node_v = self.v0 + k as f64 * h;
        let mut state = self.states[(k - self.k_min) as usize];
        let delta = v - node_v;
        if delta != 0.0 {
            state = crate::ode::rk4_step(&self.system, node_v, delta, &state);
            let eta = self.system.template().eta();
            crate::ode::eta_gram_schmidt(&mut state, &eta, self.system.template().dim())?;
        }
        Ok(state)
    }
}

/// Dense antiderivative of a smooth scalar integrand, anchored at `x0`.
struct DenseIntegral<F: Fn(f64) -> f64> {
    integrand: F,
    x0: f64,
    k_min: isize,
    k_max: isize,
    values: Vec<f64>,
}

impl<F: Fn(f64) -> f64> DenseIntegral<F> {
    fn build(integrand: F, x0: f64, lo: f64, hi: f64) -> DenseIntegral<F> {
        let h = DENSE_NODE_STEP;
        let k_min = ((lo - DENSE_PAD - x0) / h).floor() as isize - 1;
        let k_max = ((hi + DENSE_PAD - x0) / h).ceil() as isize + 1;
        let len = (k_max - k_min + 1) as usize;
        let mut values = vec![0.0; len];
        let mut acc = 0.0;
        for k in 1..=k_max.max(0) {
            let a = x0 + (k - 1) as f64 * h;
            acc += crate::ode::qk15(&|x| integrand(x), a, a + h).0;
            if k >= k_min {
                values[(k - k_min) as usize] = acc;
            }
        }
        acc = 0.0;
        for k in 1..=(-k_min).max(0) {
            let a = x0 - (k - 1) as f64 * h;
            acc += crate::ode::qk15(&|x| integrand(x), a, a - h).0;
            if -k <= k_max {
                values[(-k - k_min) as usize] = acc;
            }
        }
        DenseIntegral {
            integrand,
            x0,
            k_min,
            k_max,
            values,
        }
    }

    fn at(&self, x: f64) -> Result<f64, GeomError> {
        let h = DENSE_NODE_STEP;
        let k = ((x - self.x0) / h).floor() as isize;
        if k < self.k_min || k > self.k_max {
            return Err(GeomError::OutOfDomain {
                value: x,
                lo: self.x0 + self.k_min as f64 * h,
                hi: self.x0 + self.k_max as f64 * h,
            });
        }
        let node_x = self.x0 + k as f64 * h;
        let base = self.values[(k - self.k_min) as usize];
        if x == node_x {
            return Ok(base);
        }
        Ok(base + crate::ode::qk15(&|t| (self.integrand)(t), node_x, x).0)
    }
}

/// Dense solution of `φ₂' = -a₁φ₁`, `φ₃' = -a₂φ₁` anchored at `v0`.
struct DensePhi {
    a1: CoefficientFunction,
    a2: CoefficientFunction,
    phi1: CoefficientFunction,
    v0: f64,
    k_min: isize,
    k_max: isize,
    values: Vec<(f64, f64)>,
}

impl DensePhi {
    fn build(
        a1: CoefficientFunction,
        a2: CoefficientFunction,
        phi1: CoefficientFunction,
        v0: f64,
        init: (f64, f64),
        lo: f64,
        hi: f64,
    ) -> DensePhi {
        let h = DENSE_NODE_STEP;
        let k_min = ((lo - DENSE_PAD - v0) / h).floor() as isize - 1;
        let k_max = ((hi + DENSE_PAD - v0) / h).ceil() as isize + 1;
        let len = (k_max - k_min + 1) as usize;
        let mut values = vec![(0.0, 0.0); len];
        let rhs = |v: f64| {
            let p1 = phi1.eval(v);
            (-a1.eval(v) * p1, -a2.eval(v) * p1)
        };
        let simpson_step = |v: f64, y: (f64, f64), dv: f64| {
            let k1 = rhs(v);
            let k2 = rhs(v + 0.5 * dv);
            let k4 = rhs(v + dv);
            (
                y.0 + dv / 6.0 * (k1.0 + 4.0 * k2.0 + k4.0),
                y.1 + dv / 6.0 * (k1.1 + 4.0 * k2.1 + k4.1),
            )
        };
        values[(-k_min) as usize] = init;
        let mut acc = init;
        for k in 1..=k_max.max(0) {
            let v = v0 + (k - 1) as f64 * h;
            acc = simpson_step(v, acc, h);
            if k >= k_min {
                values[(k - k_min) as usize] = acc;
            }
        }
        acc = init;
        for k in 1..=(-k_min).max(0) {
            let v = v0 - (k - 1) as f64 * h;
            acc = simpson_step(v, acc, -h);
            if -k <= k_max {
                values[(-k - k_min) as usize] = acc;
            }
        }
        DensePhi {
            a1,
            a2,
            phi1,
            v0,
            k_min,
            k_max,
            values,
        }
    }

    fn at(&self, v: f64) -> Result<(f64, f64), GeomError> {
        let h = DENSE_NODE_STEP;
        let k = ((v - self.v0) / h).floor() as isize;
        if k < self.k_min || k > self.k_max {
            return Err(GeomError::OutOfDomain {
                value: v,
                lo: self.v0 + self.k_min as f64 * h,
                hi: self.v0 + self.k_max as f64 * h,
            });
        }
        let node_v = self.v0 + k as f64 * h;
        let base = self.values[(k - self.k_min) as usize];
        let delta = v - node_v;
        if delta == 0.0 {
            return Ok(base);
        }
        let rhs = |vv: f64| {
            let p1 = self.phi1.eval(vv);
            (-self.a1.eval(vv) * p1, -self.a2.eval(vv) * p1)
        };
        let k1 = rhs(node_v);
        let k2 = rhs(node_v + 0.5 * delta);
        let k4 = rhs(v);
        Ok((
            base.0 + delta / 6.0 * (k1.0 + 4.0 * k2.0 + k4.0),
            base.1 + delta / 6.0 * (k1.1 + 4.0 * k2.1 + k4.1),
        ))
    }
}

/// Builds the immersion of an admissible family.
///
/// Validation runs first; any violation aborts with
/// [`GeomError::Inadmissible`] carrying the diagnostics.
pub fn construct(spec: &FamilySpec) -> Result<Immersion, GeomError> {
    let diagnostics = validate_spec(spec);
    if !diagnostics.is_empty() {
        return Err(GeomError::Inadmissible(
            diagnostics.into_iter().map(|d| d.message).collect(),
        ));
    }
    construct_unchecked(spec)
}

/// Builds the immersion without the admissibility gate.
///
/// The parametrizations are well defined on any ambient; the gate encodes
/// the standing assumptions of the classification, which closed-form
/// comparisons may deliberately bypass. Pointwise geometric validity (model
/// membership, warp domain) is still enforced during evaluation.
pub fn construct_unchecked(spec: &FamilySpec) -> Result<Immersion, GeomError> {
    match spec.kind {
        FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0 => build_rw0(spec),
        FamilyKind::ProductCurve => build_product(spec),
        _ => build_constant_angle(spec),
    }
}

fn build_rw0(spec: &FamilySpec) -> Result<Immersion, GeomError> {
    let warp = spec.ambient_warping()?;
    let a = spec
        .a
        .ok_or_else(|| GeomError::Invalid("RW0 family needs the constant a".into()))?;
    let sign = if spec.kind == FamilyKind::SpacelikeRw0 {
        WarpSign::Minus
    } else {
        WarpSign::Plus
    };
    let a1 = FamilySpec::coefficient(&spec.a1, "a1")?;
    let a2 = FamilySpec::coefficient(&spec.a2, "a2")?;
    let phi1 = FamilySpec::coefficient(&spec.phi1, "phi1")?;

    let u_lo = spec.u_range.0.min(spec.u0);
    let u_hi = spec.u_range.1.max(spec.u0);
    let v_lo = spec.v_range.0.min(spec.v0);
    let v_hi = spec.v_range.1.max(spec.v0);

    // The dense antiderivative must stay inside the warping domain and, for
    // the space-like kind, away from a² = f².
    let (w_lo, w_hi) = warp.interval();
    if u_lo - DENSE_PAD - 2.0 * DENSE_NODE_STEP < w_lo || u_hi + DENSE_PAD + 2.0 * DENSE_NODE_STEP > w_hi
    {
        return Err(GeomError::OutOfDomain {
            value: u_lo,
            lo: w_lo,
            hi: w_hi,
        });
    }
    if sign == WarpSign::Minus {
        let margin2 = (1e-4 * a.abs()).powi(2);
        let samples = 1024;
        let scan_lo = u_lo - DENSE_PAD;
        let scan_hi = u_hi + DENSE_PAD;
        for i in 0..=samples {
            let u = scan_lo + (scan_hi - scan_lo) * i as f64 / samples as f64;
            let f = warp.eval(u);
            let q = a * a - f * f;
            if q < margin2 {
                return Err(GeomError::IntegrandMargin {
                    at: u,
                    sign: '-',
                    value: q,
                    margin: margin2,
                });
            }
        }
    }

    let integrand = {
        let warp = warp.clone();
        move |u: f64| {
            let f = warp.eval(u);
            let q = match sign {
                WarpSign::Minus => a * a - f * f,
                WarpSign::Plus => a * a + f * f,
            };
            a / (f * q.sqrt())
        }
    };
    let integral = Arc::new(DenseIntegral::build(integrand.clone(), spec.u0, u_lo, u_hi));
    let frames = Arc::new(DenseFrame::build(
        spec.frame_system()?.unwrap(),
        v_lo,
        v_hi,
    )?);
    let phi = Arc::new(DensePhi::build(
        a1.clone(),
        a2.clone(),
        phi1.clone(),
        spec.v0,
        (spec.phi2_init, spec.phi3_init),
        v_lo,
        v_hi,
    ));

    let warp_pt = warp.clone();
    let frames_pt = frames.clone();
    let integral_pt = integral.clone();
    let phi_pt = phi.clone();
    let phi1_pt = phi1.clone();
    let point = move |u: f64, v: f64| -> Result<AmbientPoint, GeomError> {
        let alphas = frames_pt.at(v)?;
        let w = integral_pt.at(u)?;
        let (phi2, phi3) = phi_pt.at(v)?;
        let bar = alphas[0] * phi1_pt.eval(v) + alphas[1] * (w + phi2) + alphas[2] * phi3;
        AmbientPoint::new(&warp_pt, u, FiberPoint::new(SpaceForm::Euclidean, bar)?)
    };

    let first = move |u: f64, v: f64| -> Result<(AmbientVector, AmbientVector), GeomError> {
        let alphas = frames.at(v)?;
        let w = integral.at(u)?;
        let (phi2, phi3) = phi.at(v)?;
        let (c1, c2) = (a1.eval(v), a2.eval(v));
        let p1 = phi1.eval(v);
        // Frame and scalar derivatives from the defining ODEs.
        let d_alpha1 = alphas[1] * c1 + alphas[2] * c2;
        let d_alpha2 = alphas[0] * (-c1);
        let d_alpha3 = alphas[0] * (-c2);
        let d_phi2 = -c1 * p1;
        let d_phi3 = -c2 * p1;
        let du = AmbientVector::new(1.0, alphas[1] * integrand(u));
        let dv_bar = d_alpha1 * p1
            + alphas[0] * phi1.deriv1(v)
            + d_alpha2 * (w + phi2)
            + alphas[1] * d_phi2
            + d_alpha3 * phi3
            + alphas[2] * d_phi3;
        Ok((du, AmbientVector::new(0.0, dv_bar)))
    };

    Ok(Immersion::new(spec.u_range, spec.v_range, point).with_first_partials(first))
}

fn build_constant_angle(spec: &FamilySpec) -> Result<Immersion, GeomError> {
    let warp = spec.ambient_warping()?;
    let form = spec.form();
    let kappa = spec.time_scale()?;
    let m = spec.fiber_rate()?;
    let trig = form == SpaceForm::Sphere;
    let a1 = FamilySpec::coefficient(&spec.a1, "a1")?;
    let a2 = FamilySpec::coefficient(&spec.a2, "a2")?;
    let v_lo = spec.v_range.0.min(spec.v0);
    let v_hi = spec.v_range.1.max(spec.v0);
    let frames = Arc::new(DenseFrame::build(
        spec.frame_system()?.unwrap(),
        v_lo,
        v_hi,
    )?);

    let ab = move |u: f64| -> (f64, f64, f64, f64) {
        // (A, B, A', B') at the fiber angle m·u.
        let arg = m * u;
        if trig {
            (arg.cos(), arg.sin(), -m * arg.sin(), m * arg.cos())
        } else {
            (arg.cosh(), arg.sinh(), m * arg.sinh(), m * arg.cosh())
        }
    };

    let frames_pt = frames.clone();
    let warp_pt = warp.clone();
    let point = move |u: f64, v: f64| -> Result<AmbientPoint, GeomError> {
        let alphas = frames_pt.at(v)?;
        let (big_a, big_b, _, _) = ab(u);
        let bar = alphas[0] * big_a + alphas[1] * big_b;
        AmbientPoint::new(&warp_pt, kappa * u, FiberPoint::new(form, bar)?)
    };

    let first = move |u: f64, v: f64| -> Result<(AmbientVector, AmbientVector), GeomError> {
        let alphas = frames.at(v)?;
        let (big_a, big_b, da, db) = ab(u);
        let du = AmbientVector::new(kappa, alphas[0] * da + alphas[1] * db);
        // α₁' = a₁ α₃, α₂' = a₂ α₃ in both fiber templates; α₃, α₄ do not
        // enter φ, so only α₃ shows up in φ_v.
        let coeff = big_a * a1.eval(v) + big_b * a2.eval(v);
        Ok((du, AmbientVector::new(0.0, alphas[2] * coeff)))
    };

    Ok(Immersion::new(spec.u_range, spec.v_range, point).with_first_partials(first))
}

fn build_product(spec: &FamilySpec) -> Result<Immersion, GeomError> {
    let warp = spec.ambient_warping()?;
    let curve = spec
        .curve
        .as_ref()
        .ok_or_else(|| GeomError::Invalid("product family needs a curve".into()))?
        .build()?;

    let warp_pt = warp.clone();
    let curve_pt = curve.clone();
    let point = move |u: f64, v: f64| -> Result<AmbientPoint, GeomError> {
        AmbientPoint::new(&warp_pt, u, curve_pt.point(v)?)
    };
    let first = move |_u: f64, v: f64| -> Result<(AmbientVector, AmbientVector), GeomError> {
        Ok((
            AmbientVector::dt(),
            AmbientVector::new(0.0, curve.velocity(v)?),
        ))
    };

    Ok(Immersion::new(spec.u_range, spec.v_range, point).with_first_partials(first))
}

/// Closed-form `(ω, h³₂₂, h⁴₂₂)` of the family at `(u, v)`.
///
/// Denominators within `1e-10` of zero raise a singular-point error that
/// grid sweeps record and skip.
pub fn predicted_invariants(
    spec: &FamilySpec,
    u: f64,
    v: f64,
) -> Result<PredictedInvariants, GeomError> {
    const DENOM_TOL: f64 = 1e-10;
    match spec.kind {
        FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0 => {
            let warp = spec.ambient_warping()?;
            let a = spec
                .a
                .ok_or_else(|| GeomError::Invalid("RW0 family needs the constant a".into()))?;
            let sign = if spec.kind == FamilyKind::SpacelikeRw0 {
                WarpSign::Minus
            } else {
                WarpSign::Plus
            };
            let a1 = FamilySpec::coefficient(&spec.a1, "a1")?;
            let a2 = FamilySpec::coefficient(&spec.a2, "a2")?;
            let phi1 = FamilySpec::coefficient(&spec.phi1, "phi1")?;
            let w = warp_integral(&warp, a, sign, spec.u0, u)?;
            let (phi2, phi3) = phi23_from_ode(
                &a1,
                &a2,
                &phi1,
                spec.v0,
                v,
                spec.phi2_init,
                spec.phi3_init,
            );
            let f = warp.eval(u);
            let fp = warp.deriv1(u);
            let (c1, c2) = (a1.eval(v), a2.eval(v));
            let d = c1 * (w + phi2) + c2 * phi3 - phi1.deriv1(v);
            let sqrt_g = (f * d).abs();
            if sqrt_g < DENOM_TOL {
                return Err(GeomError::SingularPoint {
                    u,
                    v,
                    what: "sqrt(G) vanishes".into(),
                });
            }
            let q = match sign {
                WarpSign::Minus => a * a - f * f,
                WarpSign::Plus => a * a + f * f,
            };
            if q <= 0.0 {
                return Err(GeomError::SingularPoint {
                    u,
                    v,
                    what: "a^2 - f^2 is not positive".into(),
                });
            }
            let root = q.sqrt();
            Ok(PredictedInvariants {
                omega: (fp * sqrt_g * root + a * c1 * f) / (sqrt_g * f * f),
                h3_22: (c1 * f * root + a * sqrt_g * fp) / (sqrt_g * f * f),
                h4_22: c2 / sqrt_g,
            })
        }
        FamilyKind::ProductCurve => {
            let warp = spec.ambient_warping()?;
            let curve = spec
                .curve
                .as_ref()
                .ok_or_else(|| GeomError::Invalid("product family needs a curve".into()))?;
            let kappa = curve.circle_curvature().ok_or_else(|| {
                GeomError::Invalid("no closed-form invariants for sampled curves".into())
            })?;
            let f = warp.eval(u);
            Ok(PredictedInvariants {
                omega: warp.deriv1(u) / f,
                h3_22: kappa / f,
                h4_22: 0.0,
            })
        }
        _ => {
            let theta0 = spec
                .theta0
                .ok_or_else(|| GeomError::Invalid("family needs theta0".into()))?;
            let m = spec.fiber_rate()?;
            let arg = m * u;
            let trig = spec.form() == SpaceForm::Sphere;
            let (big_a, big_b) = if trig {
                (arg.cos(), arg.sin())
            } else {
                (arg.cosh(), arg.sinh())
            };
            let a1 = FamilySpec::coefficient(&spec.a1, "a1")?.eval(v);
            let a2 = FamilySpec::coefficient(&spec.a2, "a2")?.eval(v);
            let a3 = FamilySpec::coefficient(&spec.a3, "a3")?.eval(v);
            let den = a1 * big_a + a2 * big_b;
            if den.abs() < DENOM_TOL {
                return Err(GeomError::SingularPoint {
                    u,
                    v,
                    what: "a1 A + a2 B vanishes".into(),
                });
            }
            let (omega, h3) = match spec.kind {
                FamilyKind::SpacelikeS3 => (
                    theta0.cosh() * (a1 * big_b - a2 * big_a) / den,
                    theta0.sinh() * (a2 * big_a - a1 * big_b) / den,
                ),
                FamilyKind::TimelikeS3 => (
                    theta0.sinh() * (a2 * big_a - a1 * big_b) / den,
                    theta0.cosh() * (a2 * big_a - a1 * big_b) / den,
                ),
                FamilyKind::SpacelikeH3 => (
                    -theta0.cosh() * (a1 * big_b + a2 * big_a) / den,
                    theta0.sinh() * (a1 * big_b + a2 * big_a) / den,
                ),
                FamilyKind::TimelikeH3 => (
                    theta0.sinh() * (a1 * big_b + a2 * big_a) / den,
                    theta0.cosh() * (a1 * big_b + a2 * big_a) / den,
                ),
                _ => unreachable!(),
            };
            Ok(PredictedInvariants {
                omega,
                h3_22: h3,
                h4_22: -a3 / den,
            })
        }
    }
}

/// One admissibility violation.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub message: String,
}

fn diag(message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        message: message.into(),
    }
}

/// Validates a family spec; an empty list means admissible.
pub fn validate_spec(spec: &FamilySpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !(spec.u_range.0 < spec.u_range.1) || !(spec.v_range.0 < spec.v_range.1) {
        out.push(diag("parameter rectangle is empty"));
        return out;
    }

    // Frame system: counts, orthonormality, coefficient sanity.
    match spec.frame_system() {
        Ok(_) => {}
        Err(e) => out.push(diag(e.to_string())),
    }

    match spec.kind {
        FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0 => {
            validate_rw0(spec, &mut out);
        }
        FamilyKind::ProductCurve => {
            validate_product(spec, &mut out);
        }
        _ => validate_constant_angle(spec, &mut out),
    }
    out
}

fn validate_rw0(spec: &FamilySpec, out: &mut Vec<Diagnostic>) {
    let warp = match &spec.warping {
        Some(w) => w.clone(),
        None => {
            out.push(diag("RW0 family needs a warping function"));
            return;
        }
    };
    let (lo, hi) = warp.interval();
    let margin = DENSE_PAD + 2.0 * DENSE_NODE_STEP;
    if spec.u_range.0.min(spec.u0) - margin < lo || spec.u_range.1.max(spec.u0) + margin > hi {
        out.push(diag(format!(
            "u-range ({}, {}) is not interior to the warping domain ({lo}, {hi}) by {margin}",
            spec.u_range.0, spec.u_range.1
        )));
    }
    if spec.phi1.is_none() {
        out.push(diag("RW0 family needs the coefficient function phi1"));
    }
    for (i, c) in spec.init.iter().enumerate() {
        if c[3].abs() > 1e-12 {
            out.push(diag(format!(
                "initial vector C{} of a flat-fiber family must lie in E^3",
                i + 1
            )));
        }
    }

    // Ambient validity: the defect must not vanish anywhere on I.
    let samples = 1024;
    let mut all_constant = true;
    let mut zeros: Vec<f64> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in 0..=samples {
        let t = lo + (hi - lo) * i as f64 / samples as f64;
        let d = constant_curvature_defect(&warp, SpaceForm::Euclidean, t);
        if d.abs() > 1e-12 {
            all_constant = false;
        } else {
            zeros.push(t);
        }
        if let Some(p) = prev {
            if p * d < 0.0 {
                zeros.push(t);
            }
        }
        prev = Some(d);
    }
    if all_constant {
        out.push(diag(
            "constant-curvature ambient: the defect f''/f - (f'^2 + c)/f^2 vanishes identically on I",
        ));
    } else if let Some(t) = zeros.first() {
        out.push(diag(format!(
            "ambient has constant sectional curvature near t = {t}: defect vanishes or changes sign"
        )));
    }

    match spec.a {
        None => out.push(diag("RW0 family needs the constant a")),
        Some(a) => {
            if spec.kind == FamilyKind::TimelikeRw0 && a.abs() <= 1e-12 {
                out.push(diag("time-like RW0 family needs a nonzero a"));
            }
            if spec.kind == FamilyKind::SpacelikeRw0 {
                let margin2 = (1e-4 * a.abs()).powi(2);
                let span_lo = spec.u_range.0.min(spec.u0);
                let span_hi = spec.u_range.1.max(spec.u0);
                for i in 0..=samples {
                    let u = span_lo + (span_hi - span_lo) * i as f64 / samples as f64;
                    let f = warp.eval(u);
                    if a * a - f * f <= margin2 {
                        out.push(diag(format!(
                            "a^2 - f(u)^2 = {:.3e} is not positive (margin {margin2:.3e}) at u = {u}",
                            a * a - f * f
                        )));
                        break;
                    }
                }
            }
        }
    }
}

fn validate_constant_angle(spec: &FamilySpec, out: &mut Vec<Diagnostic>) {
    match spec.theta0 {
        None => out.push(diag("constant-angle family needs theta0")),
        Some(theta0) => {
            let needs_nonzero = matches!(
                spec.kind,
                FamilyKind::SpacelikeS3 | FamilyKind::SpacelikeH3 | FamilyKind::TimelikeH3
            );
            if needs_nonzero && theta0.abs() < 1e-12 {
                out.push(diag("theta0 must be nonzero for this family"));
            }
        }
    }
    if let Some(w) = &spec.warping {
        let ok = matches!(w.kind(), WarpKind::Constant { value } if (value - 1.0).abs() <= 1e-12);
        if !ok {
            out.push(diag(
                "constant-angle families live in the unwarped product: the warping must be the constant 1",
            ));
        }
    }
    // Interior of {v : a3(v) = 0} must be empty, else the surface has an open
    // part inside a totally geodesic hypersurface.
    match &spec.a3 {
        None => out.push(diag("constant-angle family needs the coefficient function a3")),
        Some(a3) => {
            let samples = 1024;
            let (lo, hi) = spec.v_range;
            let mut consecutive = 0usize;
            for i in 0..=samples {
                let v = lo + (hi - lo) * i as f64 / samples as f64;
                if a3.eval(v).abs() <= 1e-12 {
                    consecutive += 1;
                    if consecutive >= 2 {
                        out.push(diag(format!(
                            "a3 vanishes on an open interval near v = {v}: the surface has an open part on a totally geodesic hypersurface (h^4_22 = 0)"
                        )));
                        break;
                    }
                } else {
                    consecutive = 0;
                }
            }
        }
    }
    if spec.form() == SpaceForm::Hyperbolic {
        if let Some(c1) = spec.init.first() {
            if c1.minkowski_dot(*c1) >= 0.0 {
                out.push(diag("C1 must be time-like for the hyperbolic fiber"));
            }
            if c1[0] <= 0.0 {
                out.push(diag("C1 must point into the upper sheet (positive first coordinate)"));
            }
        }
    }
}

fn validate_product(spec: &FamilySpec, out: &mut Vec<Diagnostic>) {
    let warp = match &spec.warping {
        Some(w) => w.clone(),
        None => {
            out.push(diag("product family needs a warping function"));
            return;
        }
    };
    let (lo, hi) = warp.interval();
    let margin = 4.0 * crate::numerics::BASE_STEP * spec.u_range.1.abs().max(1.0);
    if spec.u_range.0 - margin < lo || spec.u_range.1 + margin > hi {
        out.push(diag(format!(
            "u-range ({}, {}) is not interior to the warping domain ({lo}, {hi})",
            spec.u_range.0, spec.u_range.1
        )));
    }
    match &spec.curve {
        None => out.push(diag("product family needs a curve")),
        Some(c) => {
            if let Err(e) = c.validate() {
                out.push(diag(e.to_string()));
            }
            if let CurveSpec::Sampled { nodes, .. } = c {
                if let (Some(first), Some(last)) = (nodes.first(), nodes.last()) {
                    if spec.v_range.0 < *first || spec.v_range.1 > *last {
                        out.push(diag("v-range exceeds the sampled curve's node range"));
                    }
                }
            }
        }
    }
}

/// Wraps an immersion with a normal offset `ε sin(u) e₄`, the perturbation
/// the verification battery must detect.
///
/// The perturbed immersion carries no analytic partials; its jets come from
/// pure differencing.
pub fn perturb_normal(warp: &WarpingFunction, base: &Immersion, eps: f64) -> Immersion {
    let warp = warp.clone();
    let inner = base.clone();
    Immersion::new(base.u_range(), base.v_range(), move |u, v| {
        let j = crate::surface::first_order_jet(&inner, u, v)?;
        let frame = adapted_frame(&warp, &j)?;
        let offset = frame.e4() * (eps * u.sin());
        let p = j.point;
        let coords = p.fiber.coords + offset.bar;
        Ok(AmbientPoint {
            t: p.t + offset.t0,
            fiber: FiberPoint::new(p.fiber.form, p.fiber.form.project_to_model(coords)?)?,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::WarpKind;
    use crate::surface::{
        adapted_frame, forms_from_jet, induced_metric, jet, relative_nullity_dim,
        second_fundamental_form, t_eta_split, CausalType,
    };
    use approx::assert_abs_diff_eq;

    fn e(i: usize) -> Vec4 {
        let mut v = Vec4::ZERO;
        v[i] = 1.0;
        v
    }

    pub(crate) fn spacelike_s3_spec() -> FamilySpec {
        // cosh θ₀ = 1.25 (θ₀ = ln 2), a₁ ≡ 1, a₂ ≡ 0, a₃ ≡ 1.
        FamilySpec {
            kind: FamilyKind::SpacelikeS3,
            warping: None,
            a: None,
            theta0: Some(2.0f64.ln()),
            a1: Some(CoefficientFunction::constant(1.0)),
            a2: Some(CoefficientFunction::constant(0.0)),
            a3: Some(CoefficientFunction::constant(1.0)),
            phi1: None,
            phi2_init: 0.0,
            phi3_init: 0.0,
            curve: None,
            init: vec![e(0), e(1), e(2), e(3)],
            u0: 0.0,
            v0: 0.0,
            u_range: (-1.0, 1.0),
            v_range: (0.0, 1.0),
        }
    }

    pub(crate) fn spacelike_rw0_spec() -> FamilySpec {
        // f(u) = u + 2 keeps the defect -1/(u+2)² away from zero.
        FamilySpec {
            kind: FamilyKind::SpacelikeRw0,
            warping: Some(
                WarpingFunction::new(WarpKind::Polynomial { coeffs: vec![2.0, 1.0] }, (-1.0, 0.5))
                    .unwrap(),
            ),
            a: Some(4.0),
            theta0: None,
            a1: Some(CoefficientFunction::constant(1.0)),
            a2: Some(CoefficientFunction::constant(1.0)),
            a3: None,
            phi1: Some(CoefficientFunction::constant(1.0)),
            phi2_init: 3.0,
            phi3_init: 0.0,
            curve: None,
            init: vec![e(0), e(1), e(2)],
            u0: -0.25,
            v0: 0.0,
            u_range: (-0.95, 0.45),
            v_range: (0.0, 1.0),
        }
    }

    #[test]
    fn s3_construction_hits_initial_point() {
        let spec = spacelike_s3_spec();
        let imm = construct(&spec).unwrap();
        let p = imm.point(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.t, 0.0, epsilon = 1e-15);
        assert!((p.fiber.coords - e(0)).max_abs() < 1e-12);
    }

    #[test]
    fn rw0_construction_at_base_u() {
        let spec = spacelike_rw0_spec();
        let imm = construct(&spec).unwrap();
        // At u = u0 the warp integral vanishes: fiber = φ₁α₁ + φ₂α₂ + φ₃α₃.
        let p = imm.point(spec.u0, 0.3).unwrap();
        let a1 = CoefficientFunction::constant(1.0);
        let phi1 = CoefficientFunction::constant(1.0);
        let (phi2, phi3) = phi23_from_ode(&a1, &a1, &phi1, 0.0, 0.3, 3.0, 0.0);
        let system = spec.frame_system().unwrap().unwrap();
        let alphas = integrate_frame(&system, 0.3).unwrap();
        let expected = alphas[0] * 1.0 + alphas[1] * phi2 + alphas[2] * phi3;
        assert!((p.fiber.coords - expected).max_abs() < 1e-9);
    }

    #[test]
    fn timelike_h3_time_coordinate() {
        let theta0 = 0.5f64;
        let spec = FamilySpec {
            kind: FamilyKind::TimelikeH3,
            warping: None,
            a: None,
            theta0: Some(theta0),
            a1: Some(CoefficientFunction::constant(1.0)),
            a2: Some(CoefficientFunction::constant(0.0)),
            a3: Some(CoefficientFunction::constant(1.0)),
            phi1: None,
            phi2_init: 0.0,
            phi3_init: 0.0,
            curve: None,
            init: vec![e(0), e(1), e(2), e(3)],
            u0: 0.0,
            v0: 0.0,
            u_range: (-1.5, 1.5),
            v_range: (0.0, 1.0),
        };
        let imm = construct(&spec).unwrap();
        let p = imm.point(1.0, 0.4).unwrap();
        assert_abs_diff_eq!(p.t, theta0.cosh(), epsilon = 1e-12);
    }

    #[test]
    fn predicted_invariants_s3_at_origin() {
        let spec = spacelike_s3_spec();
        let p = predicted_invariants(&spec, 0.0, 0.3).unwrap();
        assert_abs_diff_eq!(p.omega, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h3_22, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h4_22, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn predicted_invariants_timelike_s3_flat_angle() {
        let mut spec = spacelike_s3_spec();
        spec.kind = FamilyKind::TimelikeS3;
        spec.theta0 = Some(0.0);
        let p = predicted_invariants(&spec, 0.7, 0.2).unwrap();
        assert_abs_diff_eq!(p.omega, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h3_22, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h4_22, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn predicted_invariants_h3_at_origin() {
        let mut spec = spacelike_s3_spec();
        spec.kind = FamilyKind::SpacelikeH3;
        let p = predicted_invariants(&spec, 0.0, 0.5).unwrap();
        assert_abs_diff_eq!(p.omega, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h3_22, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h4_22, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn validate_accepts_the_rw0_instance() {
        let spec = spacelike_rw0_spec();
        let diags = validate_spec(&spec);
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:?}");
    }

    #[test]
    fn validate_rejects_constant_curvature_ambient() {
        let mut spec = spacelike_rw0_spec();
        // f = e^t with c = 0 has defect ≡ 0.
        spec.warping = Some(
            WarpingFunction::new(WarpKind::Exponential { scale: 1.0, rate: 1.0 }, (-1.0, 0.5))
                .unwrap(),
        );
        spec.a = Some(2.0);
        let diags = validate_spec(&spec);
        assert!(
            diags.iter().any(|d| d.message.contains("constant-curvature")),
            "missing constant-curvature diagnostic: {diags:?}"
        );
    }

    #[test]
    fn validate_rejects_vanishing_a3() {
        let mut spec = spacelike_s3_spec();
        spec.a3 = Some(CoefficientFunction::constant(0.0));
        let diags = validate_spec(&spec);
        assert!(
            diags.iter().any(|d| d.message.contains("totally geodesic")),
            "missing totally-geodesic diagnostic: {diags:?}"
        );
        assert!(matches!(construct(&spec), Err(GeomError::Inadmissible(_))));
    }

    #[test]
    fn validate_allows_isolated_a3_zero() {
        let mut spec = spacelike_s3_spec();
        // a3(v) = v - 1/2 has an isolated zero inside the range.
        spec.a3 = Some(CoefficientFunction::Polynomial {
            coeffs: vec![-0.5, 1.0],
        });
        let diags = validate_spec(&spec);
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:?}");
    }

    #[test]
    fn analytic_and_differenced_jets_agree_on_rw0() {
        let spec = spacelike_rw0_spec();
        let imm = construct(&spec).unwrap();
        let blind = imm.without_analytic_partials();
        for &(u, v) in &[(0.0, 0.3), (-0.5, 0.7), (0.3, 0.5)] {
            let ja = jet(&imm, u, v).unwrap();
            let jd = jet(&blind, u, v).unwrap();
            assert!((ja.du - jd.du).max_abs() < 1e-6);
            assert!((ja.dv - jd.dv).max_abs() < 1e-6);
            assert!((ja.duu - jd.duu).max_abs() < 1e-5);
            assert!((ja.duv - jd.duv).max_abs() < 1e-5);
            assert!((ja.dvv - jd.dvv).max_abs() < 1e-5);
        }
    }

    #[test]
    fn s3_frame_recovers_theta0() {
        let spec = spacelike_s3_spec();
        let imm = construct(&spec).unwrap();
        let w = spec.ambient_warping().unwrap();
        for &(u, v) in &[(0.0, 0.2), (0.4, 0.5), (-0.6, 0.8)] {
            let j = jet(&imm, u, v).unwrap();
            let (_, _, _, causal) = induced_metric(&w, &j);
            assert_eq!(causal, CausalType::Spacelike);
            let frame = adapted_frame(&w, &j).unwrap();
            assert_abs_diff_eq!(frame.theta, 2.0f64.ln(), epsilon = 1e-8);
            // ⟨T, T⟩ = sinh²θ₀ (T is space-like on a space-like surface).
            let (t_field, _) = t_eta_split(&w, &j).unwrap();
            let tt = crate::ambient::ambient_metric(&w, &j.point, &t_field, &t_field);
            assert_abs_diff_eq!(tt, 0.75f64 * 0.75, epsilon = 1e-10);
        }
    }

    #[test]
    fn rw0_frame_satisfies_cosh_theta_law() {
        let spec = spacelike_rw0_spec();
        let imm = construct(&spec).unwrap();
        let w = spec.warping.clone().unwrap();
        for &(u, v) in &[(-0.5, 0.3), (0.0, 0.6), (0.3, 0.9)] {
            let j = jet(&imm, u, v).unwrap();
            let frame = adapted_frame(&w, &j).unwrap();
            assert_abs_diff_eq!(frame.theta.cosh() * w.eval(u), 4.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn s3_instance_has_positive_relative_nullity() {
        let spec = spacelike_s3_spec();
        let imm = construct(&spec).unwrap();
        let w = spec.ambient_warping().unwrap();
        let forms = second_fundamental_form(&w, &imm, 0.2, 0.4).unwrap();
        assert_eq!(relative_nullity_dim(&forms, 1e-6, 1e-10), 1);
        // |h³₂₂| and |h⁴₂₂| against the closed form (signs are orientation
        // conventions).
        let p = predicted_invariants(&spec, 0.2, 0.4).unwrap();
        assert_abs_diff_eq!(forms.h[0][1][1].abs(), p.h3_22.abs(), epsilon = 1e-7);
        assert_abs_diff_eq!(forms.h[1][1][1].abs(), p.h4_22.abs(), epsilon = 1e-7);
    }

    #[test]
    fn unit_circle_product_surface() {
        // f ≡ 1, unit circle in E³: the single nonzero frame component of h
        // has norm 1.
        let spec = FamilySpec {
            kind: FamilyKind::ProductCurve,
            warping: Some(WarpingFunction::constant(1.0, (-5.0, 5.0)).unwrap()),
            a: None,
            theta0: None,
            a1: None,
            a2: None,
            a3: None,
            phi1: None,
            phi2_init: 0.0,
            phi3_init: 0.0,
            curve: Some(CurveSpec::Circle {
                form: SpaceForm::Euclidean,
                radius: 1.0,
            }),
            init: vec![],
            u0: 0.0,
            v0: 0.0,
            u_range: (-1.0, 1.0),
            v_range: (0.0, 6.0),
        };
        let imm = construct(&spec).unwrap();
        let w = spec.warping.clone().unwrap();
        let j = jet(&imm, 0.1, 1.3).unwrap();
        let frame = adapted_frame(&w, &j).unwrap();
        assert!((frame.e1() - AmbientVector::dt()).max_abs() < 1e-10);
        assert_abs_diff_eq!(frame.theta, 0.0, epsilon = 1e-12);
        let forms = forms_from_jet(&w, &j, &frame).unwrap();
        assert!(forms.h[0][0][0].abs() < 1e-8 && forms.h[1][0][0].abs() < 1e-8);
        assert!(forms.h[0][0][1].abs() < 1e-8 && forms.h[1][0][1].abs() < 1e-8);
        let xi = (forms.h[0][1][1].powi(2) + forms.h[1][1][1].powi(2)).sqrt();
        assert_abs_diff_eq!(xi, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn spline_curve_is_consistent_with_circle() {
        let nodes: Vec<f64> = (0..33).map(|i| i as f64 * 0.1).collect();
        let points: Vec<[f64; 4]> = nodes.iter().map(|s| [s.cos(), s.sin(), 0.0, 0.0]).collect();
        let curve = CurveSpec::Sampled {
            form: SpaceForm::Euclidean,
            nodes,
            points,
        }
        .build()
        .unwrap();
        let p = curve.point(1.5).unwrap();
        assert!((p.coords - Vec4::from3(1.5f64.cos(), 1.5f64.sin(), 0.0)).max_abs() < 1e-5);
        let vel = curve.velocity(1.5).unwrap();
        assert!((vel - Vec4::from3(-1.5f64.sin(), 1.5f64.cos(), 0.0)).max_abs() < 1e-4);
    }

    #[test]
    fn causal_types_match_family_names() {
        let mut timelike_s3 = spacelike_s3_spec();
        timelike_s3.kind = FamilyKind::TimelikeS3;
        timelike_s3.theta0 = Some(0.5);
        let mut spacelike_h3 = spacelike_s3_spec();
        spacelike_h3.kind = FamilyKind::SpacelikeH3;
        let mut timelike_h3 = spacelike_s3_spec();
        timelike_h3.kind = FamilyKind::TimelikeH3;
        timelike_h3.theta0 = Some(0.5);
        let mut timelike_rw0 = spacelike_rw0_spec();
        timelike_rw0.kind = FamilyKind::TimelikeRw0;
        timelike_rw0.a = Some(1.5);
        let cases: Vec<(FamilySpec, CausalType)> = vec![
            (spacelike_s3_spec(), CausalType::Spacelike),
            (timelike_s3, CausalType::Timelike),
            (spacelike_h3, CausalType::Spacelike),
            (timelike_h3, CausalType::Timelike),
            (spacelike_rw0_spec(), CausalType::Spacelike),
            (timelike_rw0, CausalType::Timelike),
        ];
        for (spec, expected) in cases {
            let imm = construct(&spec).unwrap();
            let w = spec.ambient_warping().unwrap();
            for &(u, v) in &[(-0.4, 0.3), (0.1, 0.8)] {
                let j = jet(&imm, u, v).unwrap();
                let (_, _, _, causal) = induced_metric(&w, &j);
                assert_eq!(causal, expected, "{:?} at ({u}, {v})", spec.kind);
            }
        }
    }

    #[test]
    fn perturbation_moves_the_surface() {
        let spec = spacelike_s3_spec();
        let imm = construct(&spec).unwrap();
        let w = spec.ambient_warping().unwrap();
        let perturbed = perturb_normal(&w, &imm, 0.01);
        let p0 = imm.point(0.5, 0.5).unwrap();
        let p1 = perturbed.point(0.5, 0.5).unwrap();
        let delta = (p0.fiber.coords - p1.fiber.coords).max_abs();
        assert!(delta > 1e-4, "perturbation too small: {delta}");
    }
}

