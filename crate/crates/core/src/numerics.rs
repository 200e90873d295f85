//! Finite-difference stencils shared by the geometric operations.
//!
//! Fourth-order central stencils with step `h = max(1e-4, 1e-4 |x|)`; one
//! optional Richardson extrapolation level on top for the curvature oracles.

use crate::error::GeomError;

/// Base step of the differencing stencils.
pub const BASE_STEP: f64 = 1e-4;

/// Step rule: `max(1e-4, 1e-4 |x|)`.
pub fn step_for(x: f64) -> f64 {
    BASE_STEP * x.abs().max(1.0)
}

/// Values with a linear structure the stencils can combine.
pub trait Linear: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    fn sub(self, other: Self) -> Self {
        self.add(other.scale(-1.0))
    }
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

impl<const N: usize> Linear for [f64; N] {
    fn zero() -> Self {
        [0.0; N]
    }
    fn add(self, other: Self) -> Self {
        let mut out = self;
        for (a, b) in out.iter_mut().zip(other.iter()) {
            *a += b;
        }
        out
    }
    fn scale(self, k: f64) -> Self {
        let mut out = self;
        for a in out.iter_mut() {
            *a *= k;
        }
        out
    }
}

/// First derivative, 4th-order central: `(-f₂ + 8f₁ - 8f₋₁ + f₋₂) / 12h`.
pub fn d1<T, F>(f: F, x: f64, h: f64) -> Result<T, GeomError>
where
    T: Linear,
    F: Fn(f64) -> Result<T, GeomError>,
{
    let fp2 = f(x + 2.0 * h)?;
    let fp1 = f(x + h)?;
    let fm1 = f(x - h)?;
    let fm2 = f(x - 2.0 * h)?;
    Ok(fm2
        .sub(fp2)
        .add(fp1.sub(fm1).scale(8.0))
        .scale(1.0 / (12.0 * h)))
}

/// Second derivative, 4th-order central:
/// `(-f₂ + 16f₁ - 30f₀ + 16f₋₁ - f₋₂) / 12h²`.
pub fn d2<T, F>(f: F, x: f64, h: f64) -> Result<T, GeomError>
where
    T: Linear,
    F: Fn(f64) -> Result<T, GeomError>,
{
    let fp2 = f(x + 2.0 * h)?;
    let fp1 = f(x + h)?;
    let f0 = f(x)?;
    let fm1 = f(x - h)?;
    let fm2 = f(x - 2.0 * h)?;
    Ok(fp1
        .add(fm1)
        .scale(16.0)
        .sub(fp2.add(fm2))
        .sub(f0.scale(30.0))
        .scale(1.0 / (12.0 * h * h)))
}

/// One Richardson level over [`d1`]: `(16 d1(h/2) - d1(h)) / 15`.
pub fn d1_richardson<T, F>(f: F, x: f64, h: f64) -> Result<T, GeomError>
where
    T: Linear,
    F: Fn(f64) -> Result<T, GeomError> + Copy,
{
    let coarse = d1(f, x, h)?;
    let fine = d1(f, x, h / 2.0)?;
    Ok(fine.scale(16.0 / 15.0).sub(coarse.scale(1.0 / 15.0)))
}

/// Outermost parameter offset touched by one stencil level at `x`.
pub fn stencil_reach(x: f64) -> f64 {
    2.0 * step_for(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_matches_cos() {
        let f = |x: f64| Ok(x.sin());
        let got = d1(f, 0.7, step_for(0.7)).unwrap();
        assert!((got - 0.7f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn d2_matches_neg_sin() {
        let f = |x: f64| Ok(x.sin());
        let got = d2(f, 0.7, step_for(0.7)).unwrap();
        assert!((got + 0.7f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn richardson_refines_d1() {
        let f = |x: f64| Ok((3.0 * x).exp());
        let got = d1_richardson(f, 0.2, step_for(0.2)).unwrap();
        assert!((got - 3.0 * (0.6f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn array_stencil_works_componentwise() {
        let f = |x: f64| Ok([x * x, x.cos()]);
        let got = d1(f, 0.3, step_for(0.3)).unwrap();
        assert!((got[0] - 0.6).abs() < 1e-11);
        assert!((got[1] + 0.3f64.sin()).abs() < 1e-11);
    }
}
