//! The fiber space forms `R³(c)`: Euclidean 3-space (`c = 0`), the unit
//! 3-sphere `S³ ⊂ E⁴` (`c = +1`) and the upper sheet of the unit hyperbolic
//! space `H³ ⊂ E⁴₁` (`c = -1`).
//!
//! All three are handled through their embedded models: points and tangent
//! vectors are stored as length-4 coordinate vectors (the last entry is zero
//! for `c = 0`), and the Levi-Civita connection of the model is realized as
//! flat coordinate differentiation plus the correction
//! `∇_{w₁} w₂ = D_{w₁} w₂ + c ⟨w₁, w₂⟩ x`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::GeomError;
use crate::numerics::Linear;

/// Tolerance for membership and tangency residuals on the embedded models.
pub const MODEL_TOL: f64 = 1e-12;

/// Coordinate vector in the embedding space of the fiber model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec4(pub [f64; 4]);

impl Vec4 {
    pub const ZERO: Vec4 = Vec4([0.0; 4]);

    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Vec4([x, y, z, w])
    }

    /// Embeds a coordinate triple with a trailing zero.
    pub fn from3(x: f64, y: f64, z: f64) -> Self {
        Vec4([x, y, z, 0.0])
    }

    /// Euclidean dot product of the raw coordinates.
    pub fn dot(self, other: Vec4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Minkowski product `-x₁y₁ + x₂y₂ + x₃y₃ + x₄y₄`.
    pub fn minkowski_dot(self, other: Vec4) -> f64 {
        -self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
            + self.0[3] * other.0[3]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl Add for Vec4 {
    type Output = Vec4;
    fn add(self, rhs: Vec4) -> Vec4 {
        Linear::add(self.0, rhs.0).into()
    }
}

impl Sub for Vec4 {
    type Output = Vec4;
    fn sub(self, rhs: Vec4) -> Vec4 {
        Linear::sub(self.0, rhs.0).into()
    }
}

impl Mul<f64> for Vec4 {
    type Output = Vec4;
    fn mul(self, rhs: f64) -> Vec4 {
        self.0.scale(rhs).into()
    }
}

impl Neg for Vec4 {
    type Output = Vec4;
    fn neg(self) -> Vec4 {
        self * -1.0
    }
}

impl Index<usize> for Vec4 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec4 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<[f64; 4]> for Vec4 {
    fn from(a: [f64; 4]) -> Self {
        Vec4(a)
    }
}

impl Linear for Vec4 {
    fn zero() -> Self {
        Vec4::ZERO
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Curvature flag of the fiber: `c ∈ {-1, 0, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceForm {
    /// `H³`, `c = -1` (upper sheet of the unit hyperboloid in `E⁴₁`).
    Hyperbolic,
    /// `E³`, `c = 0`.
    Euclidean,
    /// `S³`, `c = +1` (unit sphere in `E⁴`).
    Sphere,
}

impl SpaceForm {
    pub fn from_c(c: i8) -> Result<SpaceForm, GeomError> {
        match c {
            -1 => Ok(SpaceForm::Hyperbolic),
            0 => Ok(SpaceForm::Euclidean),
            1 => Ok(SpaceForm::Sphere),
            _ => Err(GeomError::Invalid(format!(
                "curvature flag must be -1, 0 or +1, got {c}"
            ))),
        }
    }

    pub fn c(self) -> f64 {
        match self {
            SpaceForm::Hyperbolic => -1.0,
            SpaceForm::Euclidean => 0.0,
            SpaceForm::Sphere => 1.0,
        }
    }

    /// Inner product of the embedding space (Euclidean for `c ∈ {0, 1}`,
    /// Minkowski for `c = -1`).
    pub fn embed_inner(self, a: Vec4, b: Vec4) -> f64 {
        match self {
            SpaceForm::Hyperbolic => a.minkowski_dot(b),
            _ => a.dot(b),
        }
    }

    /// Residual of the model constraint at `x` (zero on the model).
    pub fn membership_residual(self, x: Vec4) -> f64 {
        match self {
            SpaceForm::Euclidean => x[3].abs(),
            SpaceForm::Sphere => (x.dot(x) - 1.0).abs(),
            SpaceForm::Hyperbolic => (x.minkowski_dot(x) + 1.0).abs(),
        }
    }

    /// Radially rescales `x` back onto the model (identity for `c = 0`).
    pub fn project_to_model(self, x: Vec4) -> Result<Vec4, GeomError> {
        match self {
            SpaceForm::Euclidean => Ok(x),
            SpaceForm::Sphere => {
                let n = x.norm();
                if n < 1e-13 {
                    return Err(GeomError::ModelViolation {
                        model: "S^3",
                        residual: 1.0,
                    });
                }
                Ok(x * (1.0 / n))
            }
            SpaceForm::Hyperbolic => {
                let q = -x.minkowski_dot(x);
                if q <= 0.0 || x[0] <= 0.0 {
                    return Err(GeomError::ModelViolation {
                        model: "H^3",
                        residual: q.abs().max(1e-30),
                    });
                }
                Ok(x * (1.0 / q.sqrt()))
            }
        }
    }
}

/// A point of the fiber model `R³(c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub form: SpaceForm,
    pub coords: Vec4,
}

impl FiberPoint {
    /// Validates the model constraint (`Σxᵢ² = 1` on `S³`; `⟨x,x⟩ = -1`,
    /// `x₁ > 0` on `H³`; no constraint on `E³`).
    pub fn new(form: SpaceForm, coords: Vec4) -> Result<FiberPoint, GeomError> {
        let residual = form.membership_residual(coords);
        if residual > MODEL_TOL {
            return Err(GeomError::ModelViolation {
                model: match form {
                    SpaceForm::Euclidean => "E^3",
                    SpaceForm::Sphere => "S^3",
                    SpaceForm::Hyperbolic => "H^3",
                },
                residual,
            });
        }
        if form == SpaceForm::Hyperbolic && coords[0] <= 0.0 {
            return Err(GeomError::ModelViolation {
                model: "H^3 (upper sheet)",
                residual: -coords[0],
            });
        }
        Ok(FiberPoint { form, coords })
    }

    /// Origin-like base point of each model.
    pub fn base(form: SpaceForm) -> FiberPoint {
        let coords = match form {
            SpaceForm::Euclidean => Vec4::ZERO,
            SpaceForm::Sphere | SpaceForm::Hyperbolic => Vec4::new(1.0, 0.0, 0.0, 0.0),
        };
        FiberPoint { form, coords }
    }

    /// Residual of tangency of `w` at this point.
    pub fn tangency_residual(&self, w: Vec4) -> f64 {
        match self.form {
            SpaceForm::Euclidean => w[3].abs(),
            _ => self.form.embed_inner(w, self.coords).abs(),
        }
    }
}

/// Induced metric `g_c` on tangent vectors at `x`.
///
/// For `c = -1` this is the Minkowski product restricted to the tangent
/// space, where it is positive definite. Inputs must be tangent to the model
/// at `x`.
pub fn fiber_inner(x: &FiberPoint, w1: Vec4, w2: Vec4) -> Result<f64, GeomError> {
    for w in [w1, w2] {
        let scale = 1.0f64.max(w.max_abs()) ;
        let residual = x.tangency_residual(w) / scale;
        if residual > 1e-8 {
            return Err(GeomError::NotTangent { residual });
        }
    }
    Ok(x.form.embed_inner(w1, w2))
}

/// Orthogonal projection of `w` onto the tangent space of the model at `x`
/// (identity for `c = 0`).
pub fn fiber_tangent_project(x: &FiberPoint, w: Vec4) -> Vec4 {
    match x.form {
        SpaceForm::Euclidean => Vec4::from3(w[0], w[1], w[2]),
        SpaceForm::Sphere => w - x.coords * w.dot(x.coords),
        // ⟨x, x⟩ = -1, so the position component of w is -⟨w, x⟩ x.
        SpaceForm::Hyperbolic => w + x.coords * w.minkowski_dot(x.coords),
    }
}

/// Correction term turning the flat embedding derivative into the model
/// connection: `∇^{R³(c)}_{w₁} w₂ = D_{w₁} w₂ + c ⟨w₁, w₂⟩ x`.
///
/// Returns `c ⟨w₁, w₂⟩ x` (the zero vector for `c = 0`).
pub fn fiber_connection_correction(x: &FiberPoint, w1: Vec4, w2: Vec4) -> Vec4 {
    match x.form {
        SpaceForm::Euclidean => Vec4::ZERO,
        _ => x.coords * (x.form.c() * x.form.embed_inner(w1, w2)),
    }
}
