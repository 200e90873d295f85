//! Second-order surface data in `L⁴₁(f, c)`: jets of immersions, the induced
//! metric, the `T + η` split of the comoving observer field, adapted
//! orthonormal frames with their angle function `θ`, and the second
//! fundamental form with its derived quantities.
//!
//! Frame conventions. For a space-like surface the causal signs are
//! `ε = (+, +, -, +)` and `∂/∂t = sinh θ e₁ + cosh θ e₃` with `e₃` time-like;
//! for a time-like surface `ε = (-, +, +, +)` and
//! `∂/∂t = cosh θ e₁ + sinh θ e₃` with `e₁` time-like. `e₁` points along the
//! tangential part `T`, which normalizes the measured `θ` to be non-negative.
//! `e₄` is the unit normal orthogonal to `e₃` whose sign makes the frame
//! positively oriented against the ambient coordinate orientation.

use std::sync::Arc;

use crate::ambient::{
    ambient_metric, covariant_from_raw, AmbientPoint, AmbientVector, WarpingFunction,
};
use crate::error::GeomError;
use crate::numerics::{d1, d2, step_for};
use crate::space_forms::{fiber_tangent_project, Vec4};

/// Causal character of the induced metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalType {
    Spacelike,
    Timelike,
    Degenerate,
}

/// Determinant threshold under which the induced metric counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Threshold on `‖T‖` under which a point counts as horizontal.
pub const HORIZONTAL_TOL: f64 = 1e-8;

type PointFn = dyn Fn(f64, f64) -> Result<AmbientPoint, GeomError> + Send + Sync;
type FirstFn = dyn Fn(f64, f64) -> Result<(AmbientVector, AmbientVector), GeomError> + Send + Sync;
type SecondFn = dyn Fn(f64, f64) -> Result<(AmbientVector, AmbientVector, AmbientVector), GeomError>
    + Send
    + Sync;

/// A parametrized surface `φ: I_u × I_v → L⁴₁(f, c)`.
///
/// Analytic partial evaluators are optional; whatever is missing is recovered
/// by 4th-order central differencing in [`jet`].
#[derive(Clone)]
pub struct Immersion {
    u_range: (f64, f64),
    v_range: (f64, f64),
    point: Arc<PointFn>,
    first: Option<Arc<FirstFn>>,
    second: Option<Arc<SecondFn>>,
}

impl Immersion {
    pub fn new<F>(u_range: (f64, f64), v_range: (f64, f64), point: F) -> Immersion
    where
        F: Fn(f64, f64) -> Result<AmbientPoint, GeomError> + Send + Sync + 'static,
    {
        Immersion {
            u_range,
            v_range,
            point: Arc::new(point),
            first: None,
            second: None,
        }
    }

    pub fn with_first_partials<F>(mut self, first: F) -> Immersion
    where
        F: Fn(f64, f64) -> Result<(AmbientVector, AmbientVector), GeomError>
            + Send
            + Sync
            + 'static,
    {
        self.first = Some(Arc::new(first));
        self
    }

    pub fn with_second_partials<F>(mut self, second: F) -> Immersion
    where
        F: Fn(f64, f64) -> Result<(AmbientVector, AmbientVector, AmbientVector), GeomError>
            + Send
            + Sync
            + 'static,
    {
        self.second = Some(Arc::new(second));
        self
    }

    /// Copy with all analytic partials dropped, forcing pure differencing.
    pub fn without_analytic_partials(&self) -> Immersion {
        Immersion {
            u_range: self.u_range,
            v_range: self.v_range,
            point: self.point.clone(),
            first: None,
            second: None,
        }
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.first.is_some()
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.u_range
    }

    pub fn v_range(&self) -> (f64, f64) {
        self.v_range
    }

    pub fn point(&self, u: f64, v: f64) -> Result<AmbientPoint, GeomError> {
        (self.point)(u, v)
    }

    fn check_interior(&self, u: f64, v: f64, margin_u: f64, margin_v: f64) -> Result<(), GeomError> {
        if u - margin_u < self.u_range.0 || u + margin_u > self.u_range.1 {
            return Err(GeomError::OutOfDomain {
                value: u,
                lo: self.u_range.0,
                hi: self.u_range.1,
            });
        }
        if v - margin_v < self.v_range.0 || v + margin_v > self.v_range.1 {
            return Err(GeomError::OutOfDomain {
                value: v,
                lo: self.v_range.0,
                hi: self.v_range.1,
            });
        }
        Ok(())
    }
}

/// Second-order jet of an immersion at a parameter point.
///
/// `du`, `dv` are fiber-tangent; the second partials are raw coordinate
/// vectors in product coordinates (no projection, no connection correction).
#[derive(Clone, Copy, Debug)]
pub struct SurfaceJet2 {
    pub u: f64,
    pub v: f64,
    pub point: AmbientPoint,
    pub du: AmbientVector,
    pub dv: AmbientVector,
    pub duu: AmbientVector,
    pub duv: AmbientVector,
    pub dvv: AmbientVector,
}

/// Evaluates the second-order jet at `(u, v)`.
///
/// Analytic partial evaluators are used when the immersion provides them;
/// missing orders fall back to 4th-order central differences (second partials
/// difference the analytic firsts once when those exist). Fiber components of
/// the first partials are re-projected onto the model.
pub fn jet(imm: &Immersion, u: f64, v: f64) -> Result<SurfaceJet2, GeomError> {
    let hu = step_for(u);
    let hv = step_for(v);
    let needs_differencing = imm.first.is_none() || imm.second.is_none();
    if needs_differencing {
        imm.check_interior(u, v, 2.0 * hu, 2.0 * hv)?;
    } else {
        imm.check_interior(u, v, 0.0, 0.0)?;
    }

    let p = imm.point(u, v)?;
    let coords = |q: &AmbientPoint| -> [f64; 5] {
        [q.t, q.fiber.coords[0], q.fiber.coords[1], q.fiber.coords[2], q.fiber.coords[3]]
    };

    let (du_raw, dv_raw) = match &imm.first {
        Some(first) => first(u, v)?,
        None => {
            let along_u = |s: f64| Ok(coords(&imm.point(s, v)?));
            let along_v = |s: f64| Ok(coords(&imm.point(u, s)?));
            (
                AmbientVector::from_coords(d1(&along_u, u, hu)?),
                AmbientVector::from_coords(d1(&along_v, v, hv)?),
            )
        }
    };
    let du = AmbientVector::new(du_raw.t0, fiber_tangent_project(&p.fiber, du_raw.bar));
    let dv = AmbientVector::new(dv_raw.t0, fiber_tangent_project(&p.fiber, dv_raw.bar));

    let (duu, duv, dvv) = match (&imm.second, &imm.first) {
        (Some(second), _) => second(u, v)?,
        (None, Some(first)) => {
            let first_u = |s: f64| Ok(first(s, v)?.0.coords());
            let first_u_along_v = |s: f64| Ok(first(u, s)?.0.coords());
            let first_v_along_v = |s: f64| Ok(first(u, s)?.1.coords());
            (
                AmbientVector::from_coords(d1(&first_u, u, hu)?),
                AmbientVector::from_coords(d1(&first_u_along_v, v, hv)?),
                AmbientVector::from_coords(d1(&first_v_along_v, v, hv)?),
            )
        }
        (None, None) => {
            let along_u = |s: f64| Ok(coords(&imm.point(s, v)?));
            let along_v = |s: f64| Ok(coords(&imm.point(u, s)?));
            let dv_at = |uu: f64| -> Result<[f64; 5], GeomError> {
                let slice = |s: f64| Ok(coords(&imm.point(uu, s)?));
                d1(&slice, v, hv)
            };
            (
                AmbientVector::from_coords(d2(&along_u, u, hu)?),
                AmbientVector::from_coords(d1(&dv_at, u, hu)?),
                AmbientVector::from_coords(d2(&along_v, v, hv)?),
            )
        }
    };

    // Rank-2 check on the Euclidean Gram matrix of the coordinate velocities.
    let c1 = du.coords();
    let c2 = dv.coords();
    let g11: f64 = c1.iter().map(|a| a * a).sum();
    let g22: f64 = c2.iter().map(|a| a * a).sum();
    let g12: f64 = c1.iter().zip(c2.iter()).map(|(a, b)| a * b).sum();
    let tr = g11 + g22;
    let det = g11 * g22 - g12 * g12;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let lam_max = tr / 2.0 + disc;
    let lam_min = tr / 2.0 - disc;
    if lam_max <= 0.0 || lam_min <= 1e-20 * lam_max {
        return Err(GeomError::RankDeficient { u, v });
    }

    Ok(SurfaceJet2 {
        u,
        v,
        point: p,
        du,
        dv,
        duu,
        duv,
        dvv,
    })
}

/// First-order jet with zeroed second partials, enough for metric and frame
/// computations. Needs no interior margin when analytic first partials exist.
pub fn first_order_jet(imm: &Immersion, u: f64, v: f64) -> Result<SurfaceJet2, GeomError> {
    let p = imm.point(u, v)?;
    let (du_raw, dv_raw) = match &imm.first {
        Some(first) => {
            imm.check_interior(u, v, 0.0, 0.0)?;
            first(u, v)?
        }
        None => {
            let hu = step_for(u);
            let hv = step_for(v);
            imm.check_interior(u, v, 2.0 * hu, 2.0 * hv)?;
            let coords = |q: &AmbientPoint| -> [f64; 5] {
                [q.t, q.fiber.coords[0], q.fiber.coords[1], q.fiber.coords[2], q.fiber.coords[3]]
            };
            let along_u = |s: f64| Ok(coords(&imm.point(s, v)?));
            let along_v = |s: f64| Ok(coords(&imm.point(u, s)?));
            (
                AmbientVector::from_coords(d1(&along_u, u, hu)?),
                AmbientVector::from_coords(d1(&along_v, v, hv)?),
            )
        }
    };
    Ok(SurfaceJet2 {
        u,
        v,
        point: p,
        du: AmbientVector::new(du_raw.t0, fiber_tangent_project(&p.fiber, du_raw.bar)),
        dv: AmbientVector::new(dv_raw.t0, fiber_tangent_project(&p.fiber, dv_raw.bar)),
        duu: AmbientVector::ZERO,
        duv: AmbientVector::ZERO,
        dvv: AmbientVector::ZERO,
    })
}

/// Induced metric coefficients and causal type at a jet.
pub fn induced_metric(warp: &WarpingFunction, jet: &SurfaceJet2) -> (f64, f64, f64, CausalType) {
    let g11 = ambient_metric(warp, &jet.point, &jet.du, &jet.du);
    let g12 = ambient_metric(warp, &jet.point, &jet.du, &jet.dv);
    let g22 = ambient_metric(warp, &jet.point, &jet.dv, &jet.dv);
    let det = g11 * g22 - g12 * g12;
    let causal = if det.abs() < DEGENERACY_TOL {
        CausalType::Degenerate
    } else if det > 0.0 {
        CausalType::Spacelike
    } else {
        CausalType::Timelike
    };
    (g11, g12, g22, causal)
}

/// Splits `∂/∂t` at the jet's point into its tangential part `T` and normal
/// part `η`.
pub fn t_eta_split(
    warp: &WarpingFunction,
    jet: &SurfaceJet2,
) -> Result<(AmbientVector, AmbientVector), GeomError> {
    let (g11, g12, g22, causal) = induced_metric(warp, jet);
    if causal == CausalType::Degenerate {
        return Err(GeomError::DegenerateMetric {
            u: jet.u,
            v: jet.v,
            det: g11 * g22 - g12 * g12,
        });
    }
    let dt = AmbientVector::dt();
    let b1 = ambient_metric(warp, &jet.point, &dt, &jet.du);
    let b2 = ambient_metric(warp, &jet.point, &dt, &jet.dv);
    let det = g11 * g22 - g12 * g12;
    let x = (g22 * b1 - g12 * b2) / det;
    let y = (g11 * b2 - g12 * b1) / det;
    let t_field = jet.du * x + jet.dv * y;
    Ok((t_field, dt - t_field))
}

/// Adapted orthonormal frame `{e₁, e₂; e₃, e₄}` with angle `θ` and causal
/// signs.
#[derive(Clone, Copy, Debug)]
pub struct MovingFrame {
    pub point: AmbientPoint,
    pub e: [AmbientVector; 4],
    pub eps: [f64; 4],
    pub theta: f64,
    pub causal: CausalType,
}

impl MovingFrame {
    pub fn e1(&self) -> AmbientVector {
        self.e[0]
    }
    pub fn e2(&self) -> AmbientVector {
        self.e[1]
    }
    pub fn e3(&self) -> AmbientVector {
        self.e[2]
    }
    pub fn e4(&self) -> AmbientVector {
        self.e[3]
    }

    /// Plain inner products `⟨x, eᵢ⟩` of an ambient vector with the frame.
    pub fn components(&self, warp: &WarpingFunction, x: &AmbientVector) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, e) in self.e.iter().enumerate() {
            out[i] = ambient_metric(warp, &self.point, x, e);
        }
        out
    }

    /// Positive-definite norm of `x` through its frame components.
    pub fn frame_norm(&self, warp: &WarpingFunction, x: &AmbientVector) -> f64 {
        self.components(warp, x)
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Reconstructs a vector from its plain components: `Σ εᵢ ⟨x, eᵢ⟩ eᵢ`.
    pub fn reconstruct(&self, comps: [f64; 4]) -> AmbientVector {
        let mut out = AmbientVector::ZERO;
        for i in 0..4 {
            out = out + self.e[i] * (self.eps[i] * comps[i]);
        }
        out
    }

    /// Norm restricted to the normal components `(e₃, e₄)`.
    pub fn normal_norm(&self, warp: &WarpingFunction, x: &AmbientVector) -> f64 {
        let c = self.components(warp, x);
        (c[2] * c[2] + c[3] * c[3]).sqrt()
    }
}

fn gauss_det<const N: usize>(cols: [[f64; N]; N]) -> f64 {
    let mut m = cols;
    let mut det = 1.0;
    for k in 0..N {
        let mut pivot = k;
        for r in k + 1..N {
            if m[r][k].abs() > m[pivot][k].abs() {
                pivot = r;
            }
        }
        if m[pivot][k] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            m.swap(pivot, k);
            det = -det;
        }
        det *= m[k][k];
        for r in k + 1..N {
            let factor = m[r][k] / m[k][k];
            for c in k..N {
                m[r][c] -= factor * m[k][c];
            }
        }
    }
    det
}

/// Orientation of the frame against the ambient coordinate orientation:
/// determinant of `[e₁ e₂ e₃ e₄]` (augmented with the model position normal
/// for the embedded fibers).
fn frame_orientation(frame_vectors: &[AmbientVector; 4], p: &AmbientPoint) -> f64 {
    match p.fiber.form {
        crate::space_forms::SpaceForm::Euclidean => {
            let col = |v: &AmbientVector| [v.t0, v.bar[0], v.bar[1], v.bar[2]];
            gauss_det::<4>([
                col(&frame_vectors[0]),
                col(&frame_vectors[1]),
                col(&frame_vectors[2]),
                col(&frame_vectors[3]),
            ])
        }
        _ => {
            let col = |v: &AmbientVector| v.coords();
            let normal = AmbientVector::new(0.0, p.fiber.coords);
            gauss_det::<5>([
                col(&frame_vectors[0]),
                col(&frame_vectors[1]),
                col(&frame_vectors[2]),
                col(&frame_vectors[3]),
                col(&normal),
            ])
        }
    }
}

/// Gram-Schmidt completion candidates: `∂/∂t` and the projected fiber axes.
fn completion_candidates(p: &AmbientPoint) -> Vec<AmbientVector> {
    let mut out = vec![AmbientVector::dt()];
    for k in 0..4 {
        let mut axis = Vec4::ZERO;
        axis[k] = 1.0;
        let bar = fiber_tangent_project(&p.fiber, axis);
        if bar.norm() > 1e-10 {
            out.push(AmbientVector::new(0.0, bar * (1.0 / bar.norm())));
        }
    }
    out
}

/// Builds the adapted frame of the `T + η` decomposition at a jet.
///
/// Fails with a "horizontal point" error when `T` vanishes and with a
/// degeneracy error when the induced metric is degenerate.
pub fn adapted_frame(warp: &WarpingFunction, jet: &SurfaceJet2) -> Result<MovingFrame, GeomError> {
    let (g11, g12, g22, causal) = induced_metric(warp, jet);
    if causal == CausalType::Degenerate {
        return Err(GeomError::DegenerateMetric {
            u: jet.u,
            v: jet.v,
            det: g11 * g22 - g12 * g12,
        });
    }
    let (t_field, eta_field) = t_eta_split(warp, jet)?;
    let p = jet.point;
    let metric = |a: &AmbientVector, b: &AmbientVector| ambient_metric(warp, &p, a, b);

    let tt = metric(&t_field, &t_field);
    let eps: [f64; 4];
    let e1: AmbientVector;
    let mut e3 = AmbientVector::ZERO;
    let sinh_theta: f64;
    let cosh_theta: f64;
    let mut normals_found = 0usize;
    match causal {
        CausalType::Spacelike => {
            if tt <= HORIZONTAL_TOL * HORIZONTAL_TOL {
                return Err(GeomError::HorizontalPoint { u: jet.u, v: jet.v });
            }
            eps = [1.0, 1.0, -1.0, 1.0];
            sinh_theta = tt.sqrt();
            e1 = t_field * (1.0 / sinh_theta);
            let ee = -metric(&eta_field, &eta_field);
            if ee <= 0.0 {
                return Err(GeomError::FrameFailure {
                    u: jet.u,
                    v: jet.v,
                    what: format!(
                        "eta is not time-like on a space-like surface (<eta,eta> = {})",
                        -ee
                    ),
                });
            }
            cosh_theta = ee.sqrt();
            e3 = eta_field * (1.0 / cosh_theta);
            normals_found = 1;
        }
        CausalType::Timelike => {
            if tt >= 0.0 {
                return Err(GeomError::FrameFailure {
                    u: jet.u,
                    v: jet.v,
                    what: format!("T is not time-like on a time-like surface (<T,T> = {tt})"),
                });
            }
            eps = [-1.0, 1.0, 1.0, 1.0];
            cosh_theta = (-tt).sqrt();
            e1 = t_field * (1.0 / cosh_theta);
            let ee = metric(&eta_field, &eta_field).max(0.0);
            if ee.sqrt() > HORIZONTAL_TOL {
                sinh_theta = ee.sqrt();
                e3 = eta_field * (1.0 / sinh_theta);
                normals_found = 1;
            } else {
                // η = 0: θ = 0 and the normal plane carries no preferred
                // direction; complete it from the deterministic candidates.
                sinh_theta = 0.0;
            }
        }
        CausalType::Degenerate => unreachable!(),
    }

    // e₂ completes the tangent frame; Gram-Schmidt from φ_v, falling back to
    // φ_u when φ_v is parallel to e₁.
    let orthogonalize_tangent = |w: &AmbientVector| -> Option<AmbientVector> {
        let cand = *w - e1 * (eps[0] * metric(w, &e1) / 1.0);
        let cand = AmbientVector::new(cand.t0, cand.bar);
        let q = metric(&cand, &cand);
        let scale = cand.max_abs();
        if q > 1e-12 * scale * scale {
            Some(cand * (1.0 / q.sqrt()))
        } else {
            None
        }
    };
    let e2 = orthogonalize_tangent(&jet.dv)
        .or_else(|| orthogonalize_tangent(&jet.du))
        .ok_or_else(|| GeomError::FrameFailure {
            u: jet.u,
            v: jet.v,
            what: "tangent completion failed".into(),
        })?;

    // Complete the normal frame from deterministic candidates.
    let mut e = [e1, e2, e3, AmbientVector::ZERO];
    let mut have = 2 + normals_found;
    for cand in completion_candidates(&p) {
        if have == 4 {
            break;
        }
        let mut w = cand;
        for j in 0..have {
            let coeff = metric(&w, &e[j]) / eps[j];
            w = w - e[j] * coeff;
        }
        let q = metric(&w, &w);
        if q > 1e-6 {
            e[have] = w * (1.0 / q.sqrt());
            have += 1;
        }
    }
    if have != 4 {
        return Err(GeomError::FrameFailure {
            u: jet.u,
            v: jet.v,
            what: "normal completion failed".into(),
        });
    }

    // Fix the e₄ sign by the orientation rule.
    if frame_orientation(&e, &p) < 0.0 {
        e[3] = -e[3];
    }

    let frame = MovingFrame {
        point: p,
        e,
        eps,
        theta: sinh_theta.asinh(),
        causal,
    };

    // Orthonormality residual.
    let mut residual = 0.0f64;
    for i in 0..4 {
        for j in 0..=i {
            let target = if i == j { eps[i] } else { 0.0 };
            residual = residual.max((metric(&e[i], &e[j]) - target).abs());
        }
    }
    if residual > 1e-9 {
        return Err(GeomError::FrameFailure {
            u: jet.u,
            v: jet.v,
            what: format!("orthonormality residual {residual:.3e}"),
        });
    }

    // θ-decomposition residual against ∂/∂t.
    let reconstructed = match causal {
        CausalType::Spacelike => e[0] * sinh_theta + e[2] * cosh_theta,
        _ => e[0] * cosh_theta + e[2] * sinh_theta,
    };
    let dev = frame.frame_norm(warp, &(AmbientVector::dt() - reconstructed));
    if dev > 1e-8 {
        return Err(GeomError::FrameFailure {
            u: jet.u,
            v: jet.v,
            what: format!("theta decomposition residual {dev:.3e}"),
        });
    }

    Ok(frame)
}

/// Coordinate coefficients of the tangent frame: `eᵢ = aᵢ ∂u + bᵢ ∂v`.
pub fn frame_coordinates(
    warp: &WarpingFunction,
    jet: &SurfaceJet2,
    frame: &MovingFrame,
) -> Result<[[f64; 2]; 2], GeomError> {
    let (g11, g12, g22, _) = induced_metric(warp, jet);
    let det = g11 * g22 - g12 * g12;
    if det.abs() < DEGENERACY_TOL {
        return Err(GeomError::DegenerateMetric {
            u: jet.u,
            v: jet.v,
            det,
        });
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        let b1 = ambient_metric(warp, &jet.point, &frame.e[i], &jet.du);
        let b2 = ambient_metric(warp, &jet.point, &frame.e[i], &jet.dv);
        out[i][0] = (g22 * b1 - g12 * b2) / det;
        out[i][1] = (g11 * b2 - g12 * b1) / det;
    }
    Ok(out)
}

/// Covariant derivatives of the adapted frame field along the tangent frame
/// directions, with the directional derivatives of `θ`.
#[derive(Clone, Debug)]
pub struct FrameDerivatives {
    pub jet: SurfaceJet2,
    pub frame: MovingFrame,
    /// `eᵢ = coord_coeffs[i][0] ∂u + coord_coeffs[i][1] ∂v`
    pub coord_coeffs: [[f64; 2]; 2],
    /// `nabla[i][a] = ∇̃_{e_{i+1}} e_{a+1}`
    pub nabla: [[AmbientVector; 4]; 2],
    /// `theta_grad[i] = e_{i+1}(θ)`
    pub theta_grad: [f64; 2],
}

impl FrameDerivatives {
    /// Connection form `ω = ε₂ ⟨∇̃_{e₂} e₁, e₂⟩`.
    pub fn omega(&self, warp: &WarpingFunction) -> f64 {
        self.frame.eps[1]
            * ambient_metric(warp, &self.frame.point, &self.nabla[1][0], &self.frame.e[1])
    }
}

/// Differentiates the canonical adapted frame field along both coordinate
/// directions and converts to frame directions through the inverse metric.
pub fn frame_derivatives(
    warp: &WarpingFunction,
    imm: &Immersion,
    u: f64,
    v: f64,
) -> Result<FrameDerivatives, GeomError> {
    let base_jet = jet(imm, u, v)?;
    let frame = adapted_frame(warp, &base_jet)?;
    let coord_coeffs = frame_coordinates(warp, &base_jet, &frame)?;

    let hu = step_for(u);
    let hv = step_for(v);

    // Frames at the stencil points of each coordinate direction.
    let frame_at = |uu: f64, vv: f64| -> Result<MovingFrame, GeomError> {
        adapted_frame(warp, &jet(imm, uu, vv)?)
    };
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let mut frames_u = Vec::with_capacity(4);
    let mut frames_v = Vec::with_capacity(4);
    for &k in &offsets {
        frames_u.push(frame_at(u + k * hu, v)?);
        frames_v.push(frame_at(u, v + k * hv)?);
    }

    let d1_weights = [1.0, -8.0, 8.0, -1.0];
    let mut coord_nabla = [[AmbientVector::ZERO; 4]; 2];
    let mut coord_theta = [0.0f64; 2];
    for (dir, (frames, h, velocity)) in [
        (&frames_u, hu, base_jet.du),
        (&frames_v, hv, base_jet.dv),
    ]
    .into_iter()
    .enumerate()
    {
        for a in 0..4 {
            let mut raw = [0.0; 5];
            for (w, fr) in d1_weights.iter().zip(frames.iter()) {
                let c = fr.e[a].coords();
                for (acc, val) in raw.iter_mut().zip(c.iter()) {
                    *acc += w * val / (12.0 * h);
                }
            }
            coord_nabla[dir][a] =
                covariant_from_raw(warp, &base_jet.point, &velocity, &frame.e[a], raw);
        }
        let mut dtheta = 0.0;
        for (w, fr) in d1_weights.iter().zip(frames.iter()) {
            dtheta += w * fr.theta / (12.0 * h);
        }
        coord_theta[dir] = dtheta;
    }

    let mut nabla = [[AmbientVector::ZERO; 4]; 2];
    let mut theta_grad = [0.0f64; 2];
    for i in 0..2 {
        for a in 0..4 {
            nabla[i][a] =
                coord_nabla[0][a] * coord_coeffs[i][0] + coord_nabla[1][a] * coord_coeffs[i][1];
        }
        theta_grad[i] = coord_coeffs[i][0] * coord_theta[0] + coord_coeffs[i][1] * coord_theta[1];
    }

    Ok(FrameDerivatives {
        jet: base_jet,
        frame,
        coord_coeffs,
        nabla,
        theta_grad,
    })
}

/// Frame components of the second fundamental form together with the metric
/// and the `T + η` split.
#[derive(Clone, Debug)]
pub struct FundamentalForms {
    /// `(g₁₁, g₁₂, g₂₂)`
    pub g: (f64, f64, f64),
    /// `h[α-3][i][j] = ⟨h(eᵢ, eⱼ), e_α⟩`, `α ∈ {3, 4}` (plain inner
    /// products; the expansion of `h` carries the causal signs `ε_α`).
    pub h: [[[f64; 2]; 2]; 2],
    /// Independent-computation residual `max_α |h^α₁₂ - h^α₂₁|`.
    pub h_symmetry_residual: f64,
    pub t_field: AmbientVector,
    pub eta_field: AmbientVector,
    pub frame: MovingFrame,
}

impl FundamentalForms {
    /// `h(X, Y)` for tangent vectors given by frame coefficients.
    pub fn h_of(&self, x: [f64; 2], y: [f64; 2]) -> AmbientVector {
        let mut out = AmbientVector::ZERO;
        for (alpha, h_alpha) in self.h.iter().enumerate() {
            let mut comp = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    comp += x[i] * y[j] * h_alpha[i][j];
                }
            }
            out = out + self.frame.e[2 + alpha] * (self.frame.eps[2 + alpha] * comp);
        }
        out
    }

    /// `⟨ξ, ξ⟩` of `ξ = h(e₂, e₂)` (recorded, not sign-asserted).
    pub fn xi_norm2(&self) -> f64 {
        let h3 = self.h[0][1][1];
        let h4 = self.h[1][1][1];
        self.frame.eps[2] * h3 * h3 + self.frame.eps[3] * h4 * h4
    }
}

fn forms_from_nabla(
    warp: &WarpingFunction,
    jet: &SurfaceJet2,
    frame: &MovingFrame,
    nabla_tangent: &[[AmbientVector; 4]; 2],
) -> Result<FundamentalForms, GeomError> {
    let (g11, g12, g22, _) = induced_metric(warp, jet);
    let (t_field, eta_field) = t_eta_split(warp, jet)?;
    let mut h = [[[0.0; 2]; 2]; 2];
    let mut asym = 0.0f64;
    for alpha in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                h[alpha][i][j] = ambient_metric(
                    warp,
                    &jet.point,
                    &nabla_tangent[i][j],
                    &frame.e[2 + alpha],
                );
            }
        }
        asym = asym.max((h[alpha][0][1] - h[alpha][1][0]).abs());
        let sym = 0.5 * (h[alpha][0][1] + h[alpha][1][0]);
        h[alpha][0][1] = sym;
        h[alpha][1][0] = sym;
    }
    Ok(FundamentalForms {
        g: (g11, g12, g22),
        h,
        h_symmetry_residual: asym,
        t_field,
        eta_field,
        frame: *frame,
    })
}

/// Second fundamental form by differentiating the adapted frame field along
/// the coordinate directions (`h^α_{ij} = ⟨∇̃_{eᵢ} eⱼ, e_α⟩`).
pub fn second_fundamental_form(
    warp: &WarpingFunction,
    imm: &Immersion,
    u: f64,
    v: f64,
) -> Result<FundamentalForms, GeomError> {
    let fd = frame_derivatives(warp, imm, u, v)?;
    forms_from_nabla(warp, &fd.jet, &fd.frame, &fd.nabla)
}

/// Second fundamental form from precomputed frame derivatives.
pub fn forms_from_derivatives(
    warp: &WarpingFunction,
    fd: &FrameDerivatives,
) -> Result<FundamentalForms, GeomError> {
    forms_from_nabla(warp, &fd.jet, &fd.frame, &fd.nabla)
}

/// Covariant coordinate Hessian `(∇̃_{∂u}∂u φ, ∇̃_{∂u}∂v φ, ∇̃_{∂v}∂v φ)`
/// assembled in closed form from the jet.
pub fn coordinate_hessian(warp: &WarpingFunction, jet: &SurfaceJet2) -> [AmbientVector; 3] {
    let pairs = [
        (jet.du, jet.du, jet.duu),
        (jet.du, jet.dv, jet.duv),
        (jet.dv, jet.dv, jet.dvv),
    ];
    pairs.map(|(va, vb, raw)| covariant_from_raw(warp, &jet.point, &va, &vb, raw.coords()))
}

/// Second fundamental form through the coordinate Hessian (independent of
/// frame-field differencing; also usable on mesh-sampled jets).
pub fn forms_from_jet(
    warp: &WarpingFunction,
    jet: &SurfaceJet2,
    frame: &MovingFrame,
) -> Result<FundamentalForms, GeomError> {
    let hess = coordinate_hessian(warp, jet);
    let (g11, g12, g22, _) = induced_metric(warp, jet);
    let det = g11 * g22 - g12 * g12;
    if det.abs() < DEGENERACY_TOL {
        return Err(GeomError::DegenerateMetric {
            u: jet.u,
            v: jet.v,
            det,
        });
    }
    // Remove tangential parts to get h(∂a, ∂b).
    let normal_part = |w: &AmbientVector| -> AmbientVector {
        let b1 = ambient_metric(warp, &jet.point, w, &jet.du);
        let b2 = ambient_metric(warp, &jet.point, w, &jet.dv);
        let x = (g22 * b1 - g12 * b2) / det;
        let y = (g11 * b2 - g12 * b1) / det;
        *w - jet.du * x - jet.dv * y
    };
    let h_coord = [
        normal_part(&hess[0]),
        normal_part(&hess[1]),
        normal_part(&hess[2]),
    ];
    let coeffs = frame_coordinates(warp, jet, frame)?;
    let (t_field, eta_field) = t_eta_split(warp, jet)?;
    let mut h = [[[0.0; 2]; 2]; 2];
    for alpha in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let (ai, bi) = (coeffs[i][0], coeffs[i][1]);
                let (aj, bj) = (coeffs[j][0], coeffs[j][1]);
                let vec = h_coord[0] * (ai * aj)
                    + h_coord[1] * (ai * bj + aj * bi)
                    + h_coord[2] * (bi * bj);
                h[alpha][i][j] = ambient_metric(warp, &jet.point, &vec, &frame.e[2 + alpha]);
            }
        }
    }
    Ok(FundamentalForms {
        g: (g11, g12, g22),
        h,
        h_symmetry_residual: 0.0,
        t_field,
        eta_field,
        frame: *frame,
    })
}

/// Matrix of the shape operator `A_{e_α}` in the tangent frame:
/// `A_{e_α} e_j = Σᵢ εᵢ h^α_{ij} eᵢ`.
pub fn shape_operator(forms: &FundamentalForms, alpha: usize) -> [[f64; 2]; 2] {
    assert!(alpha == 3 || alpha == 4, "alpha must be 3 or 4");
    let h = &forms.h[alpha - 3];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = forms.frame.eps[i] * h[i][j];
        }
    }
    out
}

/// Dimension of the relative null space at the point: kernel of the stacked
/// `4×2` matrix `[h³ᵢⱼ; h⁴ᵢⱼ]` by singular-value thresholding at
/// `max(tol_rel · σ₁, tol_abs)`.
pub fn relative_nullity_dim(forms: &FundamentalForms, tol_rel: f64, tol_abs: f64) -> usize {
    // Singular values of the stacked matrix via its 2×2 Gram matrix.
    let mut gram = [[0.0f64; 2]; 2];
    for h_alpha in &forms.h {
        for j in 0..2 {
            for i in 0..2 {
                for k in 0..2 {
                    gram[i][k] += h_alpha[j][i] * h_alpha[j][k];
                }
            }
        }
    }
    let tr = gram[0][0] + gram[1][1];
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let s1 = (tr / 2.0 + disc).max(0.0).sqrt();
    let s2 = (tr / 2.0 - disc).max(0.0).sqrt();
    let cut = (tol_rel * s1).max(tol_abs);
    [s1, s2].iter().filter(|s| **s <= cut).count()
}

/// Mean curvature vector `H = ½ Σᵢ εᵢ h(eᵢ, eᵢ)`.
pub fn mean_curvature_vector(forms: &FundamentalForms) -> AmbientVector {
    let mut out = AmbientVector::ZERO;
    for alpha in 0..2 {
        let mut comp = 0.0;
        for i in 0..2 {
            comp += forms.frame.eps[i] * forms.h[alpha][i][i];
        }
        out = out + forms.frame.e[2 + alpha] * (0.5 * forms.frame.eps[2 + alpha] * comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space_forms::{FiberPoint, SpaceForm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flat_unit() -> WarpingFunction {
        WarpingFunction::constant(1.0, (-10.0, 10.0)).unwrap()
    }

    fn e3_immersion<F>(point: F) -> Immersion
    where
        F: Fn(f64, f64) -> (f64, [f64; 3]) + Send + Sync + 'static,
    {
        Immersion::new((-5.0, 5.0), (-5.0, 5.0), move |u, v| {
            let (t, x) = point(u, v);
            Ok(AmbientPoint {
                t,
                fiber: FiberPoint::new(SpaceForm::Euclidean, Vec4::from3(x[0], x[1], x[2]))?,
            })
        })
    }

    #[test]
    fn jet_of_linear_map() {
        let imm = e3_immersion(|u, v| (u, [v, 0.0, 0.0]));
        let j = jet(&imm, 0.3, -0.2).unwrap();
        assert!((j.du - AmbientVector::dt()).max_abs() < 1e-10);
        assert!((j.dv - AmbientVector::new(0.0, Vec4::from3(1.0, 0.0, 0.0))).max_abs() < 1e-10);
        for second in [j.duu, j.duv, j.dvv] {
            assert!(second.max_abs() < 1e-7);
        }
    }

    #[test]
    fn jet_rejects_rank_deficiency() {
        let imm = e3_immersion(|u, v| (u + v, [u + v, 0.0, 0.0]));
        assert!(matches!(
            jet(&imm, 0.0, 0.0),
            Err(GeomError::RankDeficient { .. })
        ));
    }

    #[test]
    fn jet_rejects_out_of_domain_points() {
        let imm = e3_immersion(|u, v| (u, [v, 0.0, 0.0]));
        assert!(matches!(
            jet(&imm, 5.5, 0.0),
            Err(GeomError::OutOfDomain { .. })
        ));
        // Differencing needs an interior margin.
        assert!(matches!(
            jet(&imm, 5.0, 0.0),
            Err(GeomError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn induced_metric_vertical_plane_is_timelike() {
        let w = flat_unit();
        let imm = e3_immersion(|u, v| (u, [v, 0.0, 0.0]));
        let j = jet(&imm, 0.0, 0.0).unwrap();
        let (g11, g12, g22, causal) = induced_metric(&w, &j);
        assert_abs_diff_eq!(g11, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g12, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g22, 1.0, epsilon = 1e-12);
        assert_eq!(causal, CausalType::Timelike);
    }

    #[test]
    fn horizontal_slice_is_spacelike_with_t_zero() {
        let w = flat_unit();
        let imm = e3_immersion(|u, v| (0.7, [u, v, 0.2 * u * v]));
        let j = jet(&imm, 0.1, 0.3).unwrap();
        let (_, _, _, causal) = induced_metric(&w, &j);
        assert_eq!(causal, CausalType::Spacelike);
        let (t_field, eta_field) = t_eta_split(&w, &j).unwrap();
        assert!(t_field.max_abs() < 1e-9);
        assert!((eta_field - AmbientVector::dt()).max_abs() < 1e-9);
        assert!(matches!(
            adapted_frame(&w, &j),
            Err(GeomError::HorizontalPoint { .. })
        ));
    }

    #[test]
    fn degenerate_metric_is_reported() {
        // φ_u = ∂t + ∂x is null.
        let w = flat_unit();
        let imm = e3_immersion(|u, v| (u, [u, v, 0.0]));
        let j = jet(&imm, 0.0, 0.0).unwrap();
        let (_, _, _, causal) = induced_metric(&w, &j);
        assert_eq!(causal, CausalType::Degenerate);
        assert!(t_eta_split(&w, &j).is_err());
    }

    #[test]
    fn product_slab_frame_and_vanishing_h() {
        // Vertical slab t × line: totally geodesic, T = ∂t, θ = 0.
        let w = flat_unit();
        let imm = e3_immersion(|u, v| (u, [v, 0.0, 0.0]));
        let fd = frame_derivatives(&w, &imm, 0.2, 0.4).unwrap();
        let frame = &fd.frame;
        assert_eq!(frame.causal, CausalType::Timelike);
        assert!((frame.e1() - AmbientVector::dt()).max_abs() < 1e-9);
        assert_abs_diff_eq!(frame.theta, 0.0, epsilon = 1e-9);
        let forms = forms_from_derivatives(&w, &fd).unwrap();
        for alpha in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(forms.h[alpha][i][j].abs() < 1e-8);
                }
            }
        }
        assert_eq!(relative_nullity_dim(&forms, 1e-6, 1e-10), 2);
    }

    #[test]
    fn frame_route_matches_hessian_route() {
        // A curved time-like graph in L⁴₁(1, 0).
        let w = flat_unit();
        let imm = e3_immersion(|u, v| (u, [v, 0.3 * v * v, 0.1 * u * u + 0.2 * v]));
        let (u, v) = (0.15, 0.25);
        let fd = frame_derivatives(&w, &imm, u, v).unwrap();
        let frame_route = forms_from_derivatives(&w, &fd).unwrap();
        let hessian_route = forms_from_jet(&w, &fd.jet, &fd.frame).unwrap();
        for alpha in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(
                        frame_route.h[alpha][i][j],
                        hessian_route.h[alpha][i][j],
                        epsilon = 1e-6
                    );
                }
            }
        }
        assert!(frame_route.h_symmetry_residual <= 1e-9);
    }

    #[test]
    fn h_is_normal_valued() {
        let w = flat_unit();
        let imm = e3_immersion(|u, v| (u, [v, 0.4 * v * v + 0.1 * u, 0.3 * u * u]));
        let fd = frame_derivatives(&w, &imm, 0.1, 0.2).unwrap();
        let forms = forms_from_derivatives(&w, &fd).unwrap();
        // Tangential components of ∇̃_{eᵢ}eⱼ - h(eᵢ,eⱼ) reconstruct ∇, so the
        // difference must have no residual normal component.
        for i in 0..2 {
            for j in 0..2 {
                let xi = [(i == 0) as u8 as f64, (i == 1) as u8 as f64];
                let yj = [(j == 0) as u8 as f64, (j == 1) as u8 as f64];
                let diff = fd.nabla[i][j] - forms.h_of(xi, yj);
                let c = fd.frame.components(&w, &diff);
                assert!(c[2].abs() < 1e-6 && c[3].abs() < 1e-6);
            }
        }
    }

    fn dummy_forms(h3: [[f64; 2]; 2], h4: [[f64; 2]; 2]) -> FundamentalForms {
        let p = AmbientPoint {
            t: 0.0,
            fiber: FiberPoint::base(SpaceForm::Euclidean),
        };
        let frame = MovingFrame {
            point: p,
            e: [
                AmbientVector::new(0.0, Vec4::from3(1.0, 0.0, 0.0)),
                AmbientVector::new(0.0, Vec4::from3(0.0, 1.0, 0.0)),
                AmbientVector::dt(),
                AmbientVector::new(0.0, Vec4::from3(0.0, 0.0, 1.0)),
            ],
            eps: [1.0, 1.0, -1.0, 1.0],
            theta: 0.0,
            causal: CausalType::Spacelike,
        };
        FundamentalForms {
            g: (1.0, 0.0, 1.0),
            h: [h3, h4],
            h_symmetry_residual: 0.0,
            t_field: AmbientVector::ZERO,
            eta_field: AmbientVector::dt(),
            frame,
        }
    }

    #[test]
    fn shape_operator_prn_form_is_diagonal() {
        let forms = dummy_forms([[0.0, 0.0], [0.0, 1.5]], [[0.0, 0.0], [0.0, -0.4]]);
        assert_eq!(shape_operator(&forms, 3), [[0.0, 0.0], [0.0, 1.5]]);
        assert_eq!(shape_operator(&forms, 4), [[0.0, 0.0], [0.0, -0.4]]);
    }

    #[test]
    fn nullity_dimension_examples() {
        let zero = dummy_forms([[0.0; 2]; 2], [[0.0; 2]; 2]);
        assert_eq!(relative_nullity_dim(&zero, 1e-6, 1e-10), 2);

        let prn = dummy_forms([[0.0, 0.0], [0.0, 1.0]], [[0.0; 2]; 2]);
        assert_eq!(relative_nullity_dim(&prn, 1e-6, 1e-10), 1);

        let full = dummy_forms([[1.0, 0.0], [0.0, 1.0]], [[0.0; 2]; 2]);
        assert_eq!(relative_nullity_dim(&full, 1e-6, 1e-10), 0);
    }

    #[test]
    fn mean_curvature_examples() {
        let zero = dummy_forms([[0.0; 2]; 2], [[0.0; 2]; 2]);
        assert_eq!(mean_curvature_vector(&zero), AmbientVector::ZERO);

        let prn = dummy_forms([[0.0, 0.0], [0.0, 2.0]], [[0.0, 0.0], [0.0, -1.0]]);
        // ½ ε₂ (ε₃ h³₂₂ e₃ + ε₄ h⁴₂₂ e₄) with ε₂ = 1.
        let expected = prn.frame.e[2] * (0.5 * -1.0 * 2.0) + prn.frame.e[3] * (0.5 * -1.0);
        assert!((mean_curvature_vector(&prn) - expected).max_abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shape_operator_is_self_adjoint(
            h3 in prop::array::uniform4(-3.0f64..3.0),
            h4 in prop::array::uniform4(-3.0f64..3.0),
        ) {
            let sym = |m: [f64;4]| [[m[0], m[1]], [m[1], m[3]]];
            let forms = dummy_forms(sym(h3), sym(h4));
            for alpha in [3usize, 4] {
                let a = shape_operator(&forms, alpha);
                // ⟨A e_j, e_k⟩ = ε_k A[k][j] must be symmetric in (j, k).
                let eps = forms.frame.eps;
                let m01 = eps[0] * a[0][1];
                let m10 = eps[1] * a[1][0];
                prop_assert!((m01 - m10).abs() < 1e-12);
            }
        }

        #[test]
        fn nullity_is_scale_invariant(
            h3 in prop::array::uniform4(-3.0f64..3.0),
            h4 in prop::array::uniform4(-3.0f64..3.0),
            lambda in prop_oneof![(-1e3f64..-1e-3), (1e-3f64..1e3)],
        ) {
            let sym = |m: [f64;4], s: f64| [[s*m[0], s*m[1]], [s*m[1], s*m[3]]];
            let base = dummy_forms(sym(h3, 1.0), sym(h4, 1.0));
            let scaled = dummy_forms(sym(h3, lambda), sym(h4, lambda));
            prop_assert_eq!(
                relative_nullity_dim(&base, 1e-6, 1e-10),
                relative_nullity_dim(&scaled, 1e-6, 1e-10)
            );
        }
    }
}
