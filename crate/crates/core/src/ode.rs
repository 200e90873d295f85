//! Moving-frame ODE systems and the warp integrals of the surface
//! constructions.
//!
//! The frame systems are linear ODEs `α'ᵢ = Σⱼ Aᵢⱼ(v) αⱼ` whose coefficient
//! matrix is skew with respect to a diagonal signature `η`, so the exact flow
//! preserves the `η`-Gram matrix of the frame. Integration is classical RK4
//! with a fixed step followed by `η`-Gram-Schmidt re-orthonormalization after
//! every step, which enforces the structural invariant exactly.

use serde::{Deserialize, Serialize};

use crate::ambient::WarpingFunction;
use crate::error::GeomError;
use crate::space_forms::Vec4;

/// Scalar coefficient function of the frame systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CoefficientFunction {
    Constant { value: f64 },
    /// `Σ coeffs[k] v^k`
    Polynomial { coeffs: Vec<f64> },
    /// `amplitude · sin(frequency·v + phase) + offset`
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Piecewise-linear interpolation of `(nodes[k], values[k])`; linear
    /// extension beyond the end segments.
    Sampled { nodes: Vec<f64>, values: Vec<f64> },
}

impl CoefficientFunction {
    pub fn constant(value: f64) -> Self {
        CoefficientFunction::Constant { value }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if let CoefficientFunction::Sampled { nodes, values } = self {
            if nodes.len() < 2 || nodes.len() != values.len() {
                return Err(GeomError::Invalid(
                    "sampled coefficient needs at least two matching nodes/values".into(),
                ));
            }
            if nodes.windows(2).any(|w| w[1] <= w[0]) {
                return Err(GeomError::Invalid(
                    "sampled coefficient nodes must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    fn segment(nodes: &[f64], v: f64) -> usize {
        if v <= nodes[0] {
            return 0;
        }
        if v >= nodes[nodes.len() - 1] {
            return nodes.len() - 2;
        }
        match nodes.binary_search_by(|n| n.partial_cmp(&v).unwrap()) {
            Ok(i) => i.min(nodes.len() - 2),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self {
            CoefficientFunction::Constant { value } => *value,
            CoefficientFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * v + c)
            }
            CoefficientFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                offset,
            } => amplitude * (frequency * v + phase).sin() + offset,
            CoefficientFunction::Sampled { nodes, values } => {
                let k = Self::segment(nodes, v);
                let w = (v - nodes[k]) / (nodes[k + 1] - nodes[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    pub fn deriv1(&self, v: f64) -> f64 {
        match self {
            CoefficientFunction::Constant { .. } => 0.0,
            CoefficientFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * v + k as f64 * c),
            CoefficientFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                ..
            } => amplitude * frequency * (frequency * v + phase).cos(),
            CoefficientFunction::Sampled { nodes, values } => {
                let k = Self::segment(nodes, v);
                (values[k + 1] - values[k]) / (nodes[k + 1] - nodes[k])
            }
        }
    }

    pub fn deriv2(&self, v: f64) -> f64 {
        match self {
            CoefficientFunction::Constant { .. } | CoefficientFunction::Sampled { .. } => 0.0,
            CoefficientFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * v + (k * (k - 1)) as f64 * c),
            CoefficientFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                ..
            } => -amplitude * frequency * frequency * (frequency * v + phase).sin(),
        }
    }
}

/// Skew-coefficient template of the frame system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameTemplate {
    /// 3-frame in `E³`: `α₁' = a₁α₂ + a₂α₃`, `α₂' = -a₁α₁`, `α₃' = -a₂α₁`.
    Rw0,
    /// 4-frame in `E⁴`: `α₁' = a₁α₃`, `α₂' = a₂α₃`,
    /// `α₃' = -a₁α₁ - a₂α₂ + a₃α₄`, `α₄' = -a₃α₃`.
    S3,
    /// 4-frame in `E⁴₁` (η = diag(-1,1,1,1)): `α₁' = a₁α₃`, `α₂' = a₂α₃`,
    /// `α₃' = a₁α₁ - a₂α₂ + a₃α₄`, `α₄' = -a₃α₃`.
    H3,
}

impl FrameTemplate {
    pub fn dim(self) -> usize {
        match self {
            FrameTemplate::Rw0 => 3,
            FrameTemplate::S3 | FrameTemplate::H3 => 4,
        }
    }

    /// Diagonal signature preserved by the flow.
    pub fn eta(self) -> [f64; 4] {
        match self {
            FrameTemplate::H3 => [-1.0, 1.0, 1.0, 1.0],
            _ => [1.0, 1.0, 1.0, 1.0],
        }
    }

    pub fn uses_a3(self) -> bool {
        !matches!(self, FrameTemplate::Rw0)
    }

    fn matrix(self, a1: f64, a2: f64, a3: f64) -> [[f64; 4]; 4] {
        match self {
            FrameTemplate::Rw0 => [
                [0.0, a1, a2, 0.0],
                [-a1, 0.0, 0.0, 0.0],
                [-a2, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
            ],
            FrameTemplate::S3 => [
                [0.0, 0.0, a1, 0.0],
                [0.0, 0.0, a2, 0.0],
                [-a1, -a2, 0.0, a3],
                [0.0, 0.0, -a3, 0.0],
            ],
            FrameTemplate::H3 => [
                [0.0, 0.0, a1, 0.0],
                [0.0, 0.0, a2, 0.0],
                [a1, -a2, 0.0, a3],
                [0.0, 0.0, -a3, 0.0],
            ],
        }
    }
}

/// `η`-inner product on the coordinates used by a template.
pub fn eta_inner(eta: &[f64; 4], a: Vec4, b: Vec4) -> f64 {
    eta.iter()
        .enumerate()
        .map(|(k, e)| e * a[k] * b[k])
        .sum()
}

/// A moving-frame ODE system with `η`-orthonormal initial vectors.
#[derive(Clone, Debug)]
pub struct FrameOdeSystem {
    template: FrameTemplate,
    a1: CoefficientFunction,
    a2: CoefficientFunction,
    a3: Option<CoefficientFunction>,
    init: [Vec4; 4],
    v0: f64,
}

impl FrameOdeSystem {
    pub fn new(
        template: FrameTemplate,
        a1: CoefficientFunction,
        a2: CoefficientFunction,
        a3: Option<CoefficientFunction>,
        init: &[Vec4],
        v0: f64,
    ) -> Result<FrameOdeSystem, GeomError> {
        a1.validate()?;
        a2.validate()?;
        if let Some(a3) = &a3 {
            a3.validate()?;
        }
        if template.uses_a3() != a3.is_some() {
            return Err(GeomError::Invalid(format!(
                "template {template:?} {} a third coefficient function",
                if template.uses_a3() { "requires" } else { "does not take" }
            )));
        }
        let n = template.dim();
        if init.len() != n {
            return Err(GeomError::Invalid(format!(
                "template {template:?} needs {n} initial vectors, got {}",
                init.len()
            )));
        }
        let eta = template.eta();
        let mut vecs = [Vec4::ZERO; 4];
        vecs[..n].copy_from_slice(init);
        for i in 0..n {
            for j in 0..=i {
                let target = if i == j { eta[i] } else { 0.0 };
                let got = eta_inner(&eta, vecs[i], vecs[j]);
                if (got - target).abs() > 1e-12 {
                    return Err(GeomError::Invalid(format!(
                        "initial vectors are not eta-orthonormal: <C{}, C{}> = {got}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(FrameOdeSystem {
            template,
            a1,
            a2,
            a3,
            init: vecs,
            v0,
        })
    }

    pub fn template(&self) -> FrameTemplate {
        self.template
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn coefficients(&self, v: f64) -> (f64, f64, f64) {
        (
            self.a1.eval(v),
            self.a2.eval(v),
            self.a3.as_ref().map_or(0.0, |a| a.eval(v)),
        )
    }

    /// Coefficient matrix `A(v)`; satisfies `ηA + Aᵀη = 0`.
    pub fn coefficient_matrix(&self, v: f64) -> [[f64; 4]; 4] {
        let (a1, a2, a3) = self.coefficients(v);
        self.template.matrix(a1, a2, a3)
    }

    fn rhs(&self, v: f64, state: &[Vec4; 4]) -> [Vec4; 4] {
        let a = self.coefficient_matrix(v);
        let n = self.template.dim();
        let mut out = [Vec4::ZERO; 4];
        for (i, row) in a.iter().enumerate().take(n) {
            let mut acc = Vec4::ZERO;
            for (j, coeff) in row.iter().enumerate().take(n) {
                if *coeff != 0.0 {
                    acc = acc + state[j] * *coeff;
                }
            }
            out[i] = acc;
        }
        out
    }
}

pub(crate) fn rk4_step(system: &FrameOdeSystem, v: f64, h: f64, state: &[Vec4; 4]) -> [Vec4; 4] {
    let add = |s: &[Vec4; 4], k: &[Vec4; 4], w: f64| {
        let mut out = *s;
        for i in 0..4 {
            out[i] = out[i] + k[i] * w;
        }
        out
    };
    let k1 = system.rhs(v, state);
    let k2 = system.rhs(v + 0.5 * h, &add(state, &k1, 0.5 * h));
    let k3 = system.rhs(v + 0.5 * h, &add(state, &k2, 0.5 * h));
    let k4 = system.rhs(v + h, &add(state, &k3, h));
    let mut out = *state;
    for i in 0..4 {
        out[i] = out[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
    out
}

/// In-place `η`-Gram-Schmidt in pivot order `α₁ … α_n`.
pub fn eta_gram_schmidt(state: &mut [Vec4; 4], eta: &[f64; 4], n: usize) -> Result<(), GeomError> {
    for i in 0..n {
        let mut w = state[i];
        for j in 0..i {
            let coeff = eta[j] * eta_inner(eta, w, state[j]);
            w = w - state[j] * coeff;
        }
        let q = eta_inner(eta, w, w);
        if q.abs() < 1e-12 || q.signum() != eta[i].signum() {
            return Err(GeomError::GramSchmidtBreakdown {
                index: i,
                pivot: q,
            });
        }
        state[i] = w * (1.0 / q.abs().sqrt());
    }
    Ok(())
}

/// Number of RK4 steps used between `v0` and `v`.
pub fn step_count(v0: f64, v: f64) -> usize {
    64usize.max(((v - v0).abs() / 0.01).ceil() as usize)
}

/// Integrates the frame system to `v` with per-step re-orthonormalization.
pub fn integrate_frame(system: &FrameOdeSystem, v: f64) -> Result<Vec<Vec4>, GeomError> {
    integrate_frame_opts(system, v, step_count(system.v0, v), true)
}

/// Integration with explicit step count and optional re-orthonormalization
/// (used by convergence and drift diagnostics).
pub fn integrate_frame_opts(
    system: &FrameOdeSystem,
    v: f64,
    steps: usize,
    reorthonormalize: bool,
) -> Result<Vec<Vec4>, GeomError> {
    let n = system.template.dim();
    let eta = system.template.eta();
    let mut state = system.init;
    if v == system.v0 {
        return Ok(state[..n].to_vec());
    }
    let steps = steps.max(1);
    let h = (v - system.v0) / steps as f64;
    let mut vc = system.v0;
    for _ in 0..steps {
        state = rk4_step(system, vc, h, &state);
        if reorthonormalize {
            eta_gram_schmidt(&mut state, &eta, n)?;
        }
        vc += h;
    }
    Ok(state[..n].to_vec())
}

/// Maximal entrywise deviation of the frame Gram matrix from `η`.
pub fn gram_deviation(template: FrameTemplate, state: &[Vec4]) -> f64 {
    let eta = template.eta();
    let n = template.dim();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { eta[i] } else { 0.0 };
            dev = dev.max((eta_inner(&eta, state[i], state[j]) - target).abs());
        }
    }
    dev
}

/// Sign selecting the warp integrand of the space-like (`-`) or time-like
/// (`+`) construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpSign {
    Minus,
    Plus,
}

/// `∫_{u0}^{u} a / (f(ū) √(a² ∓ f(ū)²)) dū` by adaptive Gauss-Kronrod with
/// absolute tolerance 1e-10.
///
/// For [`WarpSign::Minus`] the hypothesis `a² - f(ū)² > 0` is enforced with a
/// hard margin (default `1e-4 |a|`); a violation reports the offending `ū`.
pub fn warp_integral(
    warp: &WarpingFunction,
    a: f64,
    sign: WarpSign,
    u0: f64,
    u: f64,
) -> Result<f64, GeomError> {
    warp.check_contains(u0)?;
    warp.check_contains(u)?;
    let margin = 1e-4 * a.abs();
    if sign == WarpSign::Minus {
        let (lo, hi) = if u0 <= u { (u0, u) } else { (u, u0) };
        let samples = 512;
        for i in 0..=samples {
            let t = lo + (hi - lo) * i as f64 / samples as f64;
            let f = warp.eval(t);
            let q = a * a - f * f;
            if q < margin * margin {
                return Err(GeomError::IntegrandMargin {
                    at: t,
                    sign: '-',
                    value: q,
                    margin: margin * margin,
                });
            }
        }
    }
    if u0 == u {
        return Ok(0.0);
    }
    let integrand = |t: f64| {
        let f = warp.eval(t);
        let q = match sign {
            WarpSign::Minus => a * a - f * f,
            WarpSign::Plus => a * a + f * f,
        };
        a / (f * q.sqrt())
    };
    Ok(adaptive_gk15(&integrand, u0, u, 1e-10, 0))
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

pub(crate) fn qk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

fn adaptive_gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (value, err) = qk15(f, a, b);
    if err <= tol || depth >= 40 || (b - a).abs() < 1e-12 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adaptive_gk15(f, a, mid, 0.5 * tol, depth + 1) + adaptive_gk15(f, mid, b, 0.5 * tol, depth + 1)
}

/// Integrates `φ₂' = -a₁ φ₁`, `φ₃' = -a₂ φ₁` from `v0` to `v` by RK4.
pub fn phi23_from_ode(
    a1: &CoefficientFunction,
    a2: &CoefficientFunction,
    phi1: &CoefficientFunction,
    v0: f64,
    v: f64,
    phi2_init: f64,
    phi3_init: f64,
) -> (f64, f64) {
    if v == v0 {
        return (phi2_init, phi3_init);
    }
    let steps = step_count(v0, v);
    let h = (v - v0) / steps as f64;
    let rhs = |vv: f64| {
        let p1 = phi1.eval(vv);
        (-a1.eval(vv) * p1, -a2.eval(vv) * p1)
    };
    let mut y = (phi2_init, phi3_init);
    let mut vc = v0;
    for _ in 0..steps {
        // The right-hand side does not depend on y; RK4 reduces to Simpson.
        let k1 = rhs(vc);
        let k2 = rhs(vc + 0.5 * h);
        let k4 = rhs(vc + h);
        y.0 += h / 6.0 * (k1.0 + 4.0 * k2.0 + k4.0);
        y.1 += h / 6.0 * (k1.1 + 4.0 * k2.1 + k4.1);
        vc += h;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn e(i: usize) -> Vec4 {
        let mut v = Vec4::ZERO;
        v[i] = 1.0;
        v
    }

    fn s3_system(a1: f64, a2: f64, a3: f64) -> FrameOdeSystem {
        FrameOdeSystem::new(
            FrameTemplate::S3,
            CoefficientFunction::constant(a1),
            CoefficientFunction::constant(a2),
            Some(CoefficientFunction::constant(a3)),
            &[e(0), e(1), e(2), e(3)],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn coefficient_matrix_is_eta_skew() {
        let systems = vec![
            FrameOdeSystem::new(
                FrameTemplate::Rw0,
                CoefficientFunction::Polynomial { coeffs: vec![0.3, 1.0] },
                CoefficientFunction::Sinusoid {
                    amplitude: 0.8,
                    frequency: 2.0,
                    phase: 0.4,
                    offset: 0.1,
                },
                None,
                &[e(0), e(1), e(2)],
                0.0,
            )
            .unwrap(),
            s3_system(1.3, -0.4, 0.9),
            FrameOdeSystem::new(
                FrameTemplate::H3,
                CoefficientFunction::constant(0.7),
                CoefficientFunction::constant(-1.1),
                Some(CoefficientFunction::constant(0.5)),
                &[e(0), e(1), e(2), e(3)],
                0.0,
            )
            .unwrap(),
        ];
        for system in systems {
            let eta = system.template().eta();
            for &v in &[-0.7, 0.0, 1.9] {
                let a = system.coefficient_matrix(v);
                for i in 0..4 {
                    for j in 0..4 {
                        let s = eta[i] * a[i][j] + a[j][i] * eta[j];
                        assert!(s.abs() < 1e-15, "etaA + A^T eta nonzero at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_coefficients_freeze_the_frame() {
        let system = s3_system(0.0, 0.0, 0.0);
        let state = integrate_frame(&system, 1.7).unwrap();
        for (i, alpha) in state.iter().enumerate() {
            assert!((*alpha - e(i)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn s3_rotation_closed_form() {
        // a₁ ≡ 1, a₂ = a₃ ≡ 0 rotates the (α₁, α₃) plane.
        let system = s3_system(1.0, 0.0, 0.0);
        let v = 1.0;
        let state = integrate_frame(&system, v).unwrap();
        let exp1 = e(0) * v.cos() + e(2) * v.sin();
        let exp3 = e(0) * (-v.sin()) + e(2) * v.cos();
        assert!((state[0] - exp1).max_abs() < 1e-9);
        assert!((state[2] - exp3).max_abs() < 1e-9);
        assert!((state[1] - e(1)).max_abs() < 1e-12);
        assert!((state[3] - e(3)).max_abs() < 1e-12);
    }

    #[test]
    fn h3_gram_matrix_stays_eta() {
        let system = FrameOdeSystem::new(
            FrameTemplate::H3,
            CoefficientFunction::Sinusoid {
                amplitude: 1.0,
                frequency: 1.5,
                phase: 0.0,
                offset: 0.3,
            },
            CoefficientFunction::constant(0.8),
            Some(CoefficientFunction::Polynomial { coeffs: vec![0.2, -0.5] }),
            &[e(0), e(1), e(2), e(3)],
            0.0,
        )
        .unwrap();
        let state = integrate_frame(&system, 1.0).unwrap();
        assert!(gram_deviation(FrameTemplate::H3, &state) < 1e-9);
    }

    #[test]
    fn rk4_halving_gains_an_order() {
        let system = s3_system(1.0, 0.0, 0.0);
        let v = 1.0f64;
        let exact1 = e(0) * v.cos() + e(2) * v.sin();
        let err = |steps: usize| {
            let state = integrate_frame_opts(&system, v, steps, false).unwrap();
            (state[0] - exact1).max_abs()
        };
        let coarse = err(8);
        let fine = err(16);
        assert!(
            coarse / fine >= 12.0,
            "convergence ratio {} below 12",
            coarse / fine
        );
    }

    #[test]
    fn rejects_non_orthonormal_init() {
        let bad = FrameOdeSystem::new(
            FrameTemplate::S3,
            CoefficientFunction::constant(1.0),
            CoefficientFunction::constant(0.0),
            Some(CoefficientFunction::constant(0.0)),
            &[e(0), e(0), e(2), e(3)],
            0.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn warp_integral_vanishes_at_base() {
        let w = WarpingFunction::constant(1.0, (-2.0, 2.0)).unwrap();
        assert_eq!(warp_integral(&w, 2.0, WarpSign::Minus, 0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn warp_integral_constant_integrands() {
        let w = WarpingFunction::constant(1.0, (-2.0, 2.0)).unwrap();
        // f ≡ 1, a = √2, sign -: integrand ≡ √2.
        let a = 2.0f64.sqrt();
        let got = warp_integral(&w, a, WarpSign::Minus, -0.5, 1.0).unwrap();
        assert_abs_diff_eq!(got, a * 1.5, epsilon = 1e-10);
        // f ≡ 1, a = 1, sign +: integrand ≡ 1/√2.
        let got = warp_integral(&w, 1.0, WarpSign::Plus, -0.5, 1.0).unwrap();
        assert_abs_diff_eq!(got, 1.5 / 2.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn warp_integral_reports_margin_violation() {
        let w = WarpingFunction::new(
            crate::ambient::WarpKind::Exponential { scale: 1.0, rate: 1.0 },
            (-1.0, 1.0),
        )
        .unwrap();
        // a = 1.5 < f(u) near u = 1: the margin must trip.
        let err = warp_integral(&w, 1.5, WarpSign::Minus, 0.0, 0.9);
        assert!(matches!(err, Err(GeomError::IntegrandMargin { .. })));
    }

    #[test]
    fn phi23_constant_when_phi1_vanishes() {
        let zero = CoefficientFunction::constant(0.0);
        let one = CoefficientFunction::constant(1.0);
        let got = phi23_from_ode(&one, &one, &zero, 0.0, 2.0, 0.7, -0.3);
        assert_eq!(got, (0.7, -0.3));
    }

    #[test]
    fn phi23_linear_case() {
        let one = CoefficientFunction::constant(1.0);
        let zero = CoefficientFunction::constant(0.0);
        let (phi2, _) = phi23_from_ode(&one, &zero, &one, 0.5, 2.0, 0.0, 0.0);
        assert_abs_diff_eq!(phi2, -1.5, epsilon = 1e-12);
    }

    #[test]
    fn phi23_quadrature_oracle() {
        // a₂(v) = v, φ₁ ≡ 1: φ₃(v) = -v²/2.
        let a2 = CoefficientFunction::Polynomial { coeffs: vec![0.0, 1.0] };
        let one = CoefficientFunction::constant(1.0);
        let zero = CoefficientFunction::constant(0.0);
        let (_, phi3) = phi23_from_ode(&zero, &a2, &one, 0.0, 1.3, 0.0, 0.0);
        assert_abs_diff_eq!(phi3, -1.3 * 1.3 / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn sampled_coefficient_interpolates() {
        let c = CoefficientFunction::Sampled {
            nodes: vec![0.0, 1.0, 2.0],
            values: vec![1.0, 3.0, 2.0],
        };
        c.validate().unwrap();
        assert_abs_diff_eq!(c.eval(0.5), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(1.5), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.deriv1(0.25), 2.0, epsilon = 1e-15);
        // linear extension beyond the last node
        assert_abs_diff_eq!(c.eval(2.5), 1.5, epsilon = 1e-15);
    }

    fn arb_coefficient() -> impl Strategy<Value = CoefficientFunction> {
        (
            -1.5f64..1.5,
            0.3f64..2.5,
            0.0f64..6.2,
            -0.8f64..0.8,
        )
            .prop_map(|(amplitude, frequency, phase, offset)| CoefficientFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                offset,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn eta_gram_is_conserved_for_all_templates(
            a1 in arb_coefficient(),
            a2 in arb_coefficient(),
            a3 in arb_coefficient(),
            v in -2.0f64..2.0,
        ) {
            for template in [FrameTemplate::Rw0, FrameTemplate::S3, FrameTemplate::H3] {
                let n = template.dim();
                let init: Vec<Vec4> = (0..n).map(e).collect();
                let a3_opt = template.uses_a3().then(|| a3.clone());
                let system = FrameOdeSystem::new(template, a1.clone(), a2.clone(), a3_opt, &init, 0.0).unwrap();
                let state = integrate_frame(&system, v).unwrap();
                prop_assert!(gram_deviation(template, &state) <= 1e-9);
            }
        }

        #[test]
        fn gram_drift_stays_small_without_reorthonormalization(
            a1 in arb_coefficient(),
            a2 in arb_coefficient(),
        ) {
            let system = FrameOdeSystem::new(
                FrameTemplate::S3,
                a1,
                a2,
                Some(CoefficientFunction::constant(0.4)),
                &[e(0), e(1), e(2), e(3)],
                0.0,
            ).unwrap();
            // step 1e-3 over |v - v0| = 2
            let state = integrate_frame_opts(&system, 2.0, 2000, false).unwrap();
            prop_assert!(gram_deviation(FrameTemplate::S3, &state) <= 1e-6);
        }

        #[test]
        fn warp_integral_is_additive(u1 in -0.8f64..0.8, u2 in -0.8f64..0.8) {
            let w = WarpingFunction::new(
                crate::ambient::WarpKind::Polynomial { coeffs: vec![2.0, 1.0] },
                (-1.0, 1.0),
            ).unwrap();
            let a = 4.0;
            let i = |p: f64, q: f64| warp_integral(&w, a, WarpSign::Minus, p, q).unwrap();
            let lhs = i(-0.9, u1) + i(u1, u2);
            let rhs = i(-0.9, u2);
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }
}
