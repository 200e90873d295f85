use thiserror::Error;

/// Errors surfaced by geometric and numeric operations.
#[derive(Debug, Clone, Error)]
pub enum GeomError {
    #[error("point violates the {model} model constraint (residual {residual:.3e})")]
    ModelViolation { model: &'static str, residual: f64 },

    #[error("vector is not tangent to the model at its base point (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("parameter {value} lies outside the domain ({lo}, {hi})")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("warping function vanishes near t = {t} (|f| = {value:.3e})")]
    VanishingWarp { t: f64, value: f64 },

    #[error("immersion is rank-deficient at (u, v) = ({u}, {v})")]
    RankDeficient { u: f64, v: f64 },

    #[error("induced metric is degenerate at (u, v) = ({u}, {v}), det = {det:.3e}")]
    DegenerateMetric { u: f64, v: f64, det: f64 },

    #[error("horizontal point at (u, v) = ({u}, {v}): T = 0, no adapted frame exists")]
    HorizontalPoint { u: f64, v: f64 },

    #[error("frame construction failed at (u, v) = ({u}, {v}): {what}")]
    FrameFailure { u: f64, v: f64, what: String },

    #[error("eta-Gram-Schmidt breakdown on vector {index} (pivot {pivot:.3e})")]
    GramSchmidtBreakdown { index: usize, pivot: f64 },

    #[error("warp integrand leaves its domain at u = {at}: a^2 {sign} f(u)^2 = {value:.3e} under margin {margin:.3e}")]
    IntegrandMargin {
        at: f64,
        sign: char,
        value: f64,
        margin: f64,
    },

    #[error("singular point at (u, v) = ({u}, {v}): {what}")]
    SingularPoint { u: f64, v: f64, what: String },

    #[error("family spec is inadmissible: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("{0}")]
    Invalid(String),
}

impl GeomError {
    /// True for the per-point conditions a grid sweep records as "skipped"
    /// rather than treating as fatal.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            GeomError::DegenerateMetric { .. }
                | GeomError::HorizontalPoint { .. }
                | GeomError::SingularPoint { .. }
                | GeomError::RankDeficient { .. }
                | GeomError::FrameFailure { .. }
        )
    }
}
