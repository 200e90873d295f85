//! Numerical toolkit for surfaces with positive relative nullity in
//! Robertson-Walker space-times `L⁴₁(f, c) = I ×_f R³(c)`.
//!
//! The ambient space is a Lorentzian warped product: an interval `I` carrying
//! `-dt²`, warped by a non-vanishing scale `f(t)` over a Riemannian space form
//! `R³(c)` (Euclidean 3-space, the unit 3-sphere, or the unit hyperbolic
//! 3-space in its embedded model). The crate provides
//!
//! * the ambient geometry: metric, Levi-Civita connection and curvature
//!   tensor of the warped product ([`ambient`]),
//! * second-order surface data: jets of immersions, adapted orthonormal
//!   frames, the second fundamental form and relative nullity ([`surface`]),
//! * structure-preserving integration of the moving-frame ODE systems and the
//!   warp integrals that enter the constructions ([`ode`]),
//! * constructors for each classified family of surfaces with positive
//!   relative nullity together with their closed-form invariants
//!   ([`families`]),
//! * an independent battery of numeric checkers producing structured residual
//!   reports ([`verify`]).
//!
//! All operations are pure functions over immutable value types and may be
//! called concurrently.

pub mod ambient;
pub mod error;
pub mod families;
pub mod numerics;
pub mod ode;
pub mod space_forms;
pub mod surface;
pub mod verify;

pub use ambient::{AmbientPoint, AmbientVector, WarpingFunction};
pub use error::GeomError;
pub use families::{CurveSpec, FamilySpec};
pub use ode::{CoefficientFunction, FrameOdeSystem, FrameTemplate};
pub use space_forms::{FiberPoint, SpaceForm, Vec4};
pub use surface::{CausalType, FundamentalForms, Immersion, MovingFrame, SurfaceJet2};
pub use verify::{CheckReport, GridSpec, VerificationReport};
