//! Brute-force reference computations used to cross-check closed forms.

use serde::{Deserialize, Serialize};

use crate::competitors::{prolate_jacobian_det, MixedChoice, ProlateShell};
use crate::error::{Error, Result};
use crate::geometry::NeckParams;
use crate::reduce::chunked_sum;

/// Midpoint-rule node counts in `(mu, nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_mu: usize,
    pub n_nu: usize,
}

impl QuadratureSpec {
    pub fn new(n_mu: usize, n_nu: usize) -> Result<Self> {
        if n_mu < 16 || n_nu < 16 {
            return Err(Error::InvalidResolution(format!(
                "quadrature needs at least 16 nodes per direction, got {n_mu} x {n_nu}"
            )));
        }
        Ok(Self { n_mu, n_nu })
    }
}

/// Half-shell Dirichlet energy by midpoint quadrature of the full integrand
/// `1/2 |grad h|^2 |det J|` in prolate coordinates.
pub fn quad_shell_energy(shell: &ProlateShell, spec: &QuadratureSpec) -> f64 {
    let a = shell.a;
    let c = shell.jump() / shell.log_ratio();
    let (lo, hi) = (2.0 * shell.m, 2.0 * shell.big_m);
    let h_mu = (hi - lo) / spec.n_mu as f64;
    let h_nu = std::f64::consts::PI / spec.n_nu as f64;
    let sum = chunked_sum::<1, _>(spec.n_mu, |range| {
        let mut acc = 0.0;
        for i in range {
            let mu = lo + (i as f64 + 0.5) * h_mu;
            let (sh, ch) = (mu.sinh(), mu.cosh());
            let mut row = 0.0;
            for j in 0..spec.n_nu {
                let nu = (j as f64 + 0.5) * h_nu;
                let (sn, cn) = nu.sin_cos();
                let s2 = sn * sn + sh * sh;
                let grad2 = (ch * ch * sn * sn + sh * sh * cn * cn) / (sh * sh * s2 * s2);
                row += grad2 * prolate_jacobian_det(a, mu, nu).abs();
            }
            acc += row;
        }
        [acc]
    })[0];
    let full = c * c / (2.0 * a * a) * sum * h_mu * h_nu * 2.0 * std::f64::consts::PI;
    0.5 * full
}

/// Discrete 1D Dirichlet problem on `n` equally spaced nodes with the end
/// values fixed; returns all node values.
pub fn solve_1d_chain(n: usize, left: f64, right: f64) -> Vec<f64> {
    match n {
        0 => return Vec::new(),
        1 => return vec![0.5 * (left + right)],
        2 => return vec![left, right],
        _ => {}
    }
    let k = n - 2;
    let lower = vec![-1.0; k];
    let diag = vec![2.0; k];
    let upper = vec![-1.0; k];
    let mut rhs = vec![0.0; k];
    rhs[0] += left;
    rhs[k - 1] += right;
    let inner = thomas(&lower, &diag, &upper, &rhs);
    let mut out = Vec::with_capacity(n);
    out.push(left);
    out.extend(inner);
    out.push(right);
    out
}

/// Tridiagonal solve; `lower[0]` and `upper[k-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..k {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; k];
    x[k - 1] = d[k - 1];
    for i in (0..k - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Exhaustive minimisation of the asymptotic mixed energy over an `n x n`
/// grid on `[alpha, beta]^2` restricted to `A <= B`.
pub fn grid_search_ab(neck: &NeckParams, alpha: f64, beta: f64, n: usize) -> Result<MixedChoice> {
    if n < 100 {
        return Err(Error::InvalidResolution(format!("grid search needs n >= 100, got {n}")));
    }
    if !(neck.eta < neck.delta) {
        return Err(Error::LogSingularity {
            delta: neck.delta,
            eta: neck.eta,
        });
    }
    let l = (neck.eta / neck.delta).ln().abs();
    let shell = 2.0 * std::f64::consts::PI * neck.delta / l;
    let inside = neck.delta * neck.eta / neck.eps;
    let step = (beta - alpha) / (n - 1) as f64;
    let value = |i: usize| alpha + step * i as f64;
    let mut best = (f64::INFINITY, alpha, beta);
    for i in 0..n {
        let a = value(i);
        for j in i..n {
            let b = value(j);
            let e = shell * ((a - alpha).powi(2) + (b - beta).powi(2)) + inside * (b - a).powi(2);
            if e < best.0 {
                best = (e, a, b);
            }
        }
    }
    Ok(MixedChoice {
        left: best.1,
        right: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::competitors::half_shell_energy;

    #[test]
    fn zero_jump() {
        let s = ProlateShell::new(1.0, 0.2, 1.0, 0.3, 0.3).unwrap();
        assert_eq!(quad_shell_energy(&s, &QuadratureSpec::new(32, 32).unwrap()), 0.0);
    }

    #[test]
    fn second_order_convergence() {
        let s = ProlateShell::new(1.0, 0.2, 1.0, 0.0, 1.0).unwrap();
        let exact = half_shell_energy(&s).unwrap();
        let e1 = (quad_shell_energy(&s, &QuadratureSpec::new(100, 100).unwrap()) - exact).abs();
        let e2 = (quad_shell_energy(&s, &QuadratureSpec::new(200, 200).unwrap()) - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn chain_is_affine() {
        let v = solve_1d_chain(11, 0.0, 1.0);
        for (i, x) in v.iter().enumerate() {
            assert!((x - i as f64 / 10.0).abs() < 1e-14);
        }
        assert!(solve_1d_chain(7, 0.4, 0.4).iter().all(|&x| (x - 0.4).abs() < 1e-15));
    }

    #[test]
    fn rejects_small_specs() {
        assert!(QuadratureSpec::new(8, 100).is_err());
    }
}
