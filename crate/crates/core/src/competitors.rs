//! Explicit competitor fields and their closed-form Dirichlet energies.
//!
//! Prolate spheroidal coordinates `(mu, nu, phi)` have foci at `(0, +-a, 0)`;
//! level sets of `mu` are confocal ellipsoids elongated along `y`. Half
//! ellipsoidal shells are attached to the two mouths of the neck, and a
//! harmonic function of `mu` alone interpolates between the shell boundary
//! values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{DumbbellGrid, NeckParams, Region};

pub fn prolate_map(a: f64, mu: f64, nu: f64, phi: f64) -> [f64; 3] {
    let (sh, ch) = (mu.sinh(), mu.cosh());
    let (sn, cn) = nu.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [a * sh * sn * cp, a * ch * cn, a * sh * sn * sp]
}

pub fn prolate_jacobian_det(a: f64, mu: f64, nu: f64) -> f64 {
    let sh = mu.sinh();
    let sn = nu.sin();
    -a.powi(3) * sh * sn * (sn * sn + sh * sh)
}

/// Focal half-distance `a` and inner coordinate `m` such that the inner
/// ellipse `mu = 2m` has semi-axes `2 delta` (along `y`) and `2 eta`.
pub fn fit_shell_to_neck(neck: &NeckParams) -> Result<(f64, f64)> {
    if !(neck.eta < neck.delta) {
        return Err(Error::LogSingularity {
            delta: neck.delta,
            eta: neck.eta,
        });
    }
    let a = 2.0 * (neck.delta * neck.delta - neck.eta * neck.eta).sqrt();
    let m = 0.5 * (neck.eta / neck.delta).atanh();
    Ok((a, m))
}

/// Outer coordinate placing the outer ellipsoid at `a cosh(2M) = r0 / 2`.
pub fn default_outer(a: f64, m: f64, flat_radius: f64) -> Result<f64> {
    let c = 0.5 * flat_radius / a;
    let outer = 0.5 * c.max(1.0).acosh();
    if !(outer > m) {
        return Err(Error::InvalidShell(format!(
            "flat radius {flat_radius} leaves no room for a shell beyond the inner coordinate {m}"
        )));
    }
    Ok(outer)
}

/// Half ellipsoidal shell `2m < mu < 2M` with boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProlateShell {
    pub a: f64,
    pub m: f64,
    #[serde(rename = "outer")]
    pub big_m: f64,
    pub v_inner: f64,
    pub v_outer: f64,
}

impl ProlateShell {
    pub fn new(a: f64, m: f64, big_m: f64, v_inner: f64, v_outer: f64) -> Result<Self> {
        let shell = Self {
            a,
            m,
            big_m,
            v_inner,
            v_outer,
        };
        shell.validate()?;
        Ok(shell)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidShell(format!("focal distance {} must be positive", self.a)));
        }
        if !(self.m > 0.0 && self.big_m > self.m && self.big_m.is_finite()) {
            return Err(Error::InvalidShell(format!(
                "need 0 < m < M, got m={} M={}",
                self.m, self.big_m
            )));
        }
        if !(self.v_inner.is_finite() && self.v_outer.is_finite()) {
            return Err(Error::InvalidShell("boundary values must be finite".into()));
        }
        Ok(())
    }

    /// `ln(tanh M / tanh m)`, the capacity denominator.
    pub fn log_ratio(&self) -> f64 {
        (self.big_m.tanh() / self.m.tanh()).ln()
    }

    pub fn jump(&self) -> f64 {
        self.v_outer - self.v_inner
    }

    /// Farthest reach of the outer ellipsoid along `y`.
    pub fn reach(&self) -> f64 {
        self.a * (2.0 * self.big_m).cosh()
    }

    pub fn check_fits(&self, flat_radius: f64) -> Result<()> {
        if self.reach() >= flat_radius {
            return Err(Error::ShellDoesNotFit {
                reach: self.reach(),
                flat_radius,
            });
        }
        Ok(())
    }

    /// Profile value without range checks; `mu` is clamped to the shell.
    fn value_clamped(&self, mu: f64) -> f64 {
        if mu <= 2.0 * self.m {
            return self.v_inner;
        }
        if mu >= 2.0 * self.big_m {
            return self.v_outer;
        }
        let t = ((0.5 * mu).tanh() / self.m.tanh()).ln() / self.log_ratio();
        self.v_inner + self.jump() * t
    }
}

/// Harmonic radial profile of a shell at coordinate `mu in [2m, 2M]`.
pub fn shell_profile(shell: &ProlateShell, mu: f64) -> Result<f64> {
    shell.validate()?;
    let (lo, hi) = (2.0 * shell.m, 2.0 * shell.big_m);
    if !(mu >= lo && mu <= hi) {
        return Err(Error::OutsideShell { mu, lo, hi });
    }
    Ok(shell.value_clamped(mu))
}

/// Exact Dirichlet energy of the harmonic profile on a half shell.
pub fn half_shell_energy(shell: &ProlateShell) -> Result<f64> {
    shell.validate()?;
    Ok(std::f64::consts::PI * shell.a * shell.jump().powi(2) / shell.log_ratio())
}

/// Dirichlet energy of the affine neck field with end values `left`, `right`.
pub fn affine_energy(neck: &NeckParams, left: f64, right: f64) -> f64 {
    neck.delta * neck.eta * (right - left).powi(2) / neck.eps
}

/// Neck end values of the mixed competitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedChoice {
    pub left: f64,
    pub right: f64,
}

impl MixedChoice {
    pub fn new(left: f64, right: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha <= left && left <= right && right <= beta) {
            return Err(Error::InvalidShell(format!(
                "need alpha <= A <= B <= beta, got A={left} B={right} on [{alpha}, {beta}]"
            )));
        }
        Ok(Self { left, right })
    }
}

/// Minimiser of the asymptotic mixed energy, with `L = |ln(eta/delta)|`.
pub fn optimal_ab(neck: &NeckParams, alpha: f64, beta: f64) -> Result<MixedChoice> {
    let l = log_gap(neck)?;
    let shell_weight = std::f64::consts::PI / l;
    let neck_weight = neck.eta / neck.eps;
    let mid = 0.5 * (alpha + beta);
    let denom = shell_weight + neck_weight;
    Ok(MixedChoice {
        left: (shell_weight * alpha + neck_weight * mid) / denom,
        right: (shell_weight * beta + neck_weight * mid) / denom,
    })
}

fn log_gap(neck: &NeckParams) -> Result<f64> {
    if !(neck.eta < neck.delta) {
        return Err(Error::LogSingularity {
            delta: neck.delta,
            eta: neck.eta,
        });
    }
    Ok((neck.eta / neck.delta).ln().abs())
}

/// Exact energy of the mixed competitor with outer coordinate `outer`.
pub fn mixed_energy(
    neck: &NeckParams,
    choice: &MixedChoice,
    alpha: f64,
    beta: f64,
    outer: f64,
) -> Result<f64> {
    let (a, m) = fit_shell_to_neck(neck)?;
    let left = ProlateShell::new(a, m, outer, choice.left, alpha)?;
    let right = ProlateShell::new(a, m, outer, choice.right, beta)?;
    Ok(half_shell_energy(&left)?
        + half_shell_energy(&right)?
        + affine_energy(neck, choice.left, choice.right))
}

/// Leading-order mixed energy with `a ~ 2 delta` and the capacity
/// denominator replaced by `|ln(eta/delta)|`.
pub fn mixed_energy_asymptotic(
    neck: &NeckParams,
    choice: &MixedChoice,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let l = log_gap(neck)?;
    let shell = 2.0 * std::f64::consts::PI * neck.delta / l
        * ((choice.left - alpha).powi(2) + (choice.right - beta).powi(2));
    Ok(shell + affine_energy(neck, choice.left, choice.right))
}

/// Solves `y^2/(a^2 cosh^2 mu) + rho^2/(a^2 sinh^2 mu) = 1` for `mu` by
/// bisection on `(0, 40]`.
pub fn prolate_mu(a: f64, y: f64, rho: f64) -> f64 {
    let f = |mu: f64| {
        let (ch, sh) = (a * mu.cosh(), a * mu.sinh());
        y * y / (ch * ch) + rho * rho / (sh * sh) - 1.0
    };
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    if f(hi) > 0.0 {
        return hi;
    }
    if rho == 0.0 && y.abs() <= a {
        return 0.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CompetitorKind {
    /// Constant `left`/`right` in the bulks, affine in the neck.
    Affine { left: f64, right: f64 },
    /// Harmonic half shells from the wells to the midpoint, constant neck.
    Shell,
    /// Affine neck between `left` and `right` joined to the wells by shells.
    Mixed(MixedChoice),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitorParams {
    pub alpha: f64,
    pub beta: f64,
    pub flat_radius: f64,
    /// Outer shell coordinate; defaults to [`default_outer`].
    pub outer: Option<f64>,
}

/// Samples a competitor at the active cell centres of a dumbbell grid.
pub fn build_competitor_field(
    grid: &DumbbellGrid,
    kind: CompetitorKind,
    params: &CompetitorParams,
) -> Result<ScalarField> {
    let neck = *grid
        .neck()
        .ok_or_else(|| Error::InvalidShell("grid carries no neck".into()))?;
    let CompetitorParams { alpha, beta, .. } = *params;
    let (left, right, shells) = match kind {
        CompetitorKind::Affine { left, right } => (left, right, None),
        CompetitorKind::Shell => {
            let mid = 0.5 * (alpha + beta);
            (mid, mid, Some(()))
        }
        CompetitorKind::Mixed(c) => (c.left, c.right, Some(())),
    };
    let shells = match shells {
        None => None,
        Some(()) => {
            let (a, m) = fit_shell_to_neck(&neck)?;
            let outer = match params.outer {
                Some(o) => o,
                None => default_outer(a, m, params.flat_radius)?,
            };
            let l = ProlateShell::new(a, m, outer, left, alpha)?;
            let r = ProlateShell::new(a, m, outer, right, beta)?;
            l.check_fits(params.flat_radius)?;
            Some((l, r))
        }
    };

    let values: Vec<f64> = (0..grid.active_count())
        .into_par_iter()
        .map(|c| {
            let [x, y, z] = grid.centre(c);
            match grid.region(c) {
                Region::Neck => (right - left) * x / (2.0 * neck.eps) + 0.5 * (left + right),
                Region::LeftBulk => match &shells {
                    None => left,
                    Some((s, _)) => sample_shell(s, x + neck.eps, y, z),
                },
                Region::RightBulk => match &shells {
                    None => right,
                    Some((_, s)) => sample_shell(s, x - neck.eps, y, z),
                },
            }
        })
        .collect();
    ScalarField::new(grid, values)
}

fn sample_shell(shell: &ProlateShell, x: f64, y: f64, z: f64) -> f64 {
    let a = shell.a;
    let rho2 = x * x + z * z;
    // cheap exits outside the outer and inside the inner ellipsoid
    let outer = |mu: f64| {
        let (ch, sh) = (a * mu.cosh(), a * mu.sinh());
        y * y / (ch * ch) + rho2 / (sh * sh)
    };
    if outer(2.0 * shell.big_m) >= 1.0 {
        return shell.v_outer;
    }
    if outer(2.0 * shell.m) <= 1.0 {
        return shell.v_inner;
    }
    shell.value_clamped(prolate_mu(a, y, rho2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn map_axis_points() {
        let p = prolate_map(1.0, 0.7, 0.0, 1.3);
        assert!(p[0].abs() < 1e-15 && p[2].abs() < 1e-15);
        assert!((p[1] - 0.7f64.cosh()).abs() < 1e-15);
        let q = prolate_map(1.0, 0.7, PI / 2.0, 0.0);
        assert!((q[0] - 0.7f64.sinh()).abs() < 1e-15);
        assert!(q[1].abs() < 1e-15);
    }

    #[test]
    fn foci() {
        let p = prolate_map(2.0, 1e-9, 0.0, 0.0);
        assert!((p[1] - 2.0).abs() < 1e-12);
        let q = prolate_map(2.0, 1e-9, PI, 0.0);
        assert!((q[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_values() {
        assert_eq!(prolate_jacobian_det(1.0, 0.5, 0.0), 0.0);
        let s = 1f64.sinh();
        let expect = -s * 1f64.cosh().powi(2);
        assert!((prolate_jacobian_det(1.0, 1.0, PI / 2.0) - expect).abs() < 1e-14);
        assert!((expect + 2.798269).abs() < 1e-6);
        let r = prolate_jacobian_det(2.0, 0.4, 1.1) / prolate_jacobian_det(1.0, 0.4, 1.1);
        assert!((r - 8.0).abs() < 1e-12);
    }

    #[test]
    fn shell_fit_example() {
        let neck = NeckParams::new(0.1, 0.1, 0.06).unwrap();
        let (a, m) = fit_shell_to_neck(&neck).unwrap();
        assert!((a - 0.16).abs() < 1e-14);
        assert!((2.0 * m - 0.6f64.atanh()).abs() < 1e-14);
        assert!((a * (2.0 * m).sinh() - 0.12).abs() < 1e-12 * 0.12);
        assert!((a * (2.0 * m).cosh() - 0.2).abs() < 1e-12 * 0.2);
        let flat = NeckParams::new(0.1, 0.1, 0.1).unwrap();
        assert!(fit_shell_to_neck(&flat).is_err());
    }

    #[test]
    fn profile_boundaries_and_midpoint() {
        let s = ProlateShell::new(1.0, 0.2, 1.1, 0.3, 0.9).unwrap();
        assert!((shell_profile(&s, 0.4).unwrap() - 0.3).abs() < 1e-14);
        assert!((shell_profile(&s, 2.2).unwrap() - 0.9).abs() < 1e-14);
        let t = (0.2f64.tanh() * 1.1f64.tanh()).sqrt();
        let mu = 2.0 * t.atanh();
        assert!((shell_profile(&s, mu).unwrap() - 0.6).abs() < 1e-13);
        assert!(matches!(shell_profile(&s, 0.1), Err(Error::OutsideShell { .. })));
    }

    #[test]
    fn profile_reproduces_log_form() {
        // c ln|k tanh(mu/2)| with k = 1/tanh m and c = jump / (2 ln(tanh M / tanh m))
        let (m, big) = (0.15, 0.9);
        let jump = 1.0;
        let s = ProlateShell::new(1.0, m, big, 0.0, 0.5 * jump).unwrap();
        let c = jump / (2.0 * (big.tanh() / m.tanh()).ln());
        let k = 1.0 / m.tanh();
        for i in 0..=20 {
            let mu = 2.0 * m + (2.0 * big - 2.0 * m) * i as f64 / 20.0;
            let expect = c * (k * (0.5 * mu).tanh()).ln();
            assert!((shell_profile(&s, mu).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_shell_energy() {
        // ln(tanh M / tanh m) = 1 gives pi
        let m: f64 = 0.3;
        let big = (m.tanh() * std::f64::consts::E).atanh();
        let s = ProlateShell::new(1.0, m, big, 0.0, 1.0).unwrap();
        assert!((half_shell_energy(&s).unwrap() - PI).abs() < 1e-12);
        let flat = ProlateShell::new(1.0, m, big, 0.4, 0.4).unwrap();
        assert_eq!(half_shell_energy(&flat).unwrap(), 0.0);
        assert!(ProlateShell::new(1.0, 0.5, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn affine_energy_example() {
        let neck = NeckParams::new(1e-2, 1e-3, 1e-4).unwrap();
        assert!((affine_energy(&neck, 0.0, 1.0) - 1e-5).abs() < 1e-18);
        assert_eq!(affine_energy(&neck, 0.3, 0.3), 0.0);
    }

    #[test]
    fn optimal_ab_equal_weights() {
        // choose eps so that pi / L = eta / eps
        let (delta, eta) = (0.1f64, 0.01);
        let l = (eta / delta).ln().abs();
        let eps = eta * l / PI;
        let neck = NeckParams::new(eps, delta, eta).unwrap();
        let c = optimal_ab(&neck, 0.0, 1.0).unwrap();
        assert!((c.left - 0.25).abs() < 1e-14);
        assert!((c.right - 0.75).abs() < 1e-14);
    }

    #[test]
    fn optimal_ab_limits() {
        let inside = NeckParams::new(1.0, 0.1, 1e-8).unwrap();
        let c = optimal_ab(&inside, 0.0, 1.0).unwrap();
        assert!(c.left < 1e-6 && c.right > 1.0 - 1e-6);
        let outside = NeckParams::new(1e-8, 0.1, 0.01).unwrap();
        let c = optimal_ab(&outside, 0.0, 1.0).unwrap();
        assert!((c.left - 0.5).abs() < 1e-5 && (c.right - 0.5).abs() < 1e-5);
    }

    #[test]
    fn mixed_energy_extremes() {
        let neck = NeckParams::new(0.01, 0.05, 0.005).unwrap();
        let (a, m) = fit_shell_to_neck(&neck).unwrap();
        let outer = default_outer(a, m, 0.5).unwrap();
        let pure_affine = mixed_energy(&neck, &MixedChoice { left: 0.0, right: 1.0 }, 0.0, 1.0, outer).unwrap();
        assert!((pure_affine - affine_energy(&neck, 0.0, 1.0)).abs() < 1e-15);
        let mid = MixedChoice { left: 0.5, right: 0.5 };
        let shells = mixed_energy(&neck, &mid, 0.0, 1.0, outer).unwrap();
        let half = half_shell_energy(&ProlateShell::new(a, m, outer, 0.5, 0.0).unwrap()).unwrap();
        assert!((shells - 2.0 * half).abs() < 1e-15);
    }

    #[test]
    fn mu_inversion_round_trip() {
        for &(mu, nu, phi) in &[(0.3, 0.4, 0.1), (1.2, 2.0, 3.0), (0.05, 1.5, 5.0), (3.0, 0.2, 1.0)] {
            let [x, y, z] = prolate_map(0.7, mu, nu, phi);
            let got = prolate_mu(0.7, y, (x * x + z * z).sqrt());
            assert!((got - mu).abs() < 1e-9, "{mu} vs {got}");
        }
    }

    #[test]
    fn shell_asymptotics() {
        // the capacity denominator is |ln(eta/delta)| + ln 2 + o(1), so the
        // ratio approaches 1 only logarithmically
        let ratio = |r: f64| {
            let neck = NeckParams::new(1.0, 1.0, r).unwrap();
            let (a, m) = fit_shell_to_neck(&neck).unwrap();
            let s = ProlateShell::new(a, m, 2.0, 0.0, 1.0).unwrap();
            half_shell_energy(&s).unwrap() * r.ln().abs() / (PI * a)
        };
        let mut prev = 0.0;
        for k in [4, 8, 16, 32, 64] {
            let r = 10f64.powi(-k);
            let q = ratio(r);
            let offset = 2.0 * 2f64.tanh();
            let predicted = r.ln().abs() / (r.ln().abs() + offset.ln());
            assert!((q - predicted).abs() < 1e-6, "{k}: {q} vs {predicted}");
            assert!(q > prev && q < 1.0);
            prev = q;
        }
        assert!((ratio(1e-4) - 1.0).abs() < 0.08);
        assert!((ratio(1e-64) - 1.0).abs() < 0.01);
    }
}
