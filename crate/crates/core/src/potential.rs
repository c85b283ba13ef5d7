use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bulk energy density `W(u)` and its derivatives.
pub trait Potential: Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    fn second_derivative(&self, t: f64) -> f64;
}

/// Quartic double well `w0 (t - alpha)^2 (t - beta)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell {
    pub alpha: f64,
    pub beta: f64,
    pub well_scale: f64,
}

impl DoubleWell {
    pub fn new(alpha: f64, beta: f64, well_scale: f64) -> Result<Self> {
        if !(alpha < beta) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidWells { alpha, beta });
        }
        crate::error::positive("well_scale", well_scale)?;
        Ok(Self {
            alpha,
            beta,
            well_scale,
        })
    }

    pub fn standard() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            well_scale: 1.0,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn jump(&self) -> f64 {
        self.beta - self.alpha
    }

    /// Curvature at either well, `2 w0 (beta - alpha)^2`.
    pub fn well_curvature(&self) -> f64 {
        2.0 * self.well_scale * self.jump().powi(2)
    }
}

impl Potential for DoubleWell {
    fn value(&self, t: f64) -> f64 {
        let p = (t - self.alpha) * (t - self.beta);
        self.well_scale * p * p
    }

    fn derivative(&self, t: f64) -> f64 {
        let a = t - self.alpha;
        let b = t - self.beta;
        2.0 * self.well_scale * a * b * (a + b)
    }

    fn second_derivative(&self, t: f64) -> f64 {
        let a = t - self.alpha;
        let b = t - self.beta;
        2.0 * self.well_scale * ((a + b) * (a + b) + 2.0 * a * b)
    }
}

/// `W = 0`: pure Dirichlet energy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoPotential;

impl Potential for NoPotential {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _: f64) -> f64 {
        0.0
    }
    fn second_derivative(&self, _: f64) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wells_and_midpoint() {
        let w = DoubleWell::standard();
        assert_eq!(w.value(0.0), 0.0);
        assert_eq!(w.value(1.0), 0.0);
        assert!((w.value(0.5) - 1.0 / 16.0).abs() < 1e-16);
        assert_eq!(w.derivative(0.0), 0.0);
        assert_eq!(w.derivative(0.5), 0.0);
        assert!((w.derivative(0.25) - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn rejects_inverted_wells() {
        assert!(DoubleWell::new(1.0, 0.0, 1.0).is_err());
        assert!(DoubleWell::new(0.0, 0.0, 1.0).is_err());
        assert!(DoubleWell::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn zeros_only_at_wells() {
        let w = DoubleWell::new(-0.3, 1.7, 2.5).unwrap();
        let n = 20_000;
        for i in 0..=n {
            let t = -1.3 + 4.0 * i as f64 / n as f64;
            let v = w.value(t);
            assert!(v >= 0.0);
            if (t - w.alpha).abs() > 1e-3 && (t - w.beta).abs() > 1e-3 {
                assert!(v > 0.0, "W({t}) = {v}");
            }
        }
        assert_eq!(w.value(w.alpha), 0.0);
        assert_eq!(w.value(w.beta), 0.0);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let w = DoubleWell::new(-0.5, 1.5, 1.3).unwrap();
        let h = 1e-5;
        let n = 400;
        for i in 0..=n {
            let t = w.alpha - 1.0 + (w.jump() + 2.0) * i as f64 / n as f64;
            let fd = (w.value(t + h) - w.value(t - h)) / (2.0 * h);
            let an = w.derivative(t);
            let scale = an.abs().max(1.0);
            assert!((fd - an).abs() / scale <= 1e-6, "t={t}: {fd} vs {an}");
            let fd2 = (w.derivative(t + h) - w.derivative(t - h)) / (2.0 * h);
            assert!((fd2 - w.second_derivative(t)).abs() / w.second_derivative(t).abs().max(1.0) < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn nonnegative(a in -3.0f64..3.0, gap in 0.01f64..4.0, s in 0.01f64..10.0, t in -10.0f64..10.0) {
            let w = DoubleWell::new(a, a + gap, s).unwrap();
            prop_assert!(w.value(t) >= 0.0);
        }
    }
}
