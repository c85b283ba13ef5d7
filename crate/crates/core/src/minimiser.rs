//! Constrained descent for the discrete energy.
//!
//! Projected, diagonally preconditioned gradient descent. Trial steps come
//! from the Barzilai-Borwein formula and are backtracked until the Armijo
//! condition holds. Iterates are clamped to a box and then radially projected
//! onto an `L^2` ball around the starting field.

use serde::{Deserialize, Serialize};

use crate::energy::{energy_of, gradient_into, total_energy, EnergyBreakdown, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{DumbbellGrid, Region};
use crate::potential::Potential;
use crate::reduce::{chunked_sum, weighted_dot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop when the max-norm of the gradient per unit volume drops below.
    pub grad_tol: f64,
    /// Stop when the relative energy decrease stays below this for
    /// `stall_window` consecutive steps.
    pub energy_tol: f64,
    pub stall_window: usize,
    /// Radius of the `L^2` ball around the initial field.
    pub ball_radius: Option<f64>,
    /// Box the iterates are clamped to.
    pub bounds: Option<(f64, f64)>,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Use Barzilai-Borwein trial steps instead of a unit step.
    pub spectral_step: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            grad_tol: 1e-7,
            energy_tol: 1e-13,
            stall_window: 10,
            ball_radius: None,
            bounds: None,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            spectral_step: true,
        }
    }
}

impl SolveOptions {
    /// Defaults scaled to the wells: gradient tolerance `1e-7 (beta - alpha)`
    /// and iterates clamped to `[alpha - 1, beta + 1]`.
    pub fn for_wells(alpha: f64, beta: f64) -> Self {
        Self {
            grad_tol: 1e-7 * (beta - alpha).abs().max(f64::MIN_POSITIVE),
            bounds: Some((alpha - 1.0, beta + 1.0)),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if !(self.grad_tol > 0.0) || !(self.energy_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_iters == 0 || self.stall_window == 0 || self.max_backtracks == 0 {
            return bad("iteration limits must be positive".into());
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad(format!("Armijo constant {} outside (0, 0.5)", self.armijo));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad(format!("backtrack factor {} outside (0, 1)", self.backtrack));
        }
        if let Some(d) = self.ball_radius {
            if !(d > 0.0) {
                return bad(format!("ball radius {d} must be positive"));
            }
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo < hi) {
                return bad(format!("empty bounds [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    /// The ball must not contain the constant states: `d` below
    /// `min(|alpha| |left|^1/2, |beta| |right|^1/2)`. The bound is vacuous
    /// when a well sits at zero and is then not enforced.
    pub fn check_ball_radius(&self, grid: &DumbbellGrid, alpha: f64, beta: f64) -> Result<()> {
        let Some(d) = self.ball_radius else {
            return Ok(());
        };
        let v = grid.region_volumes();
        let limit = (alpha.abs() * v.left.sqrt()).min(beta.abs() * v.right.sqrt());
        if limit > 0.0 && d >= limit {
            return Err(Error::InvalidOptions(format!(
                "ball radius {d} must be below {limit}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradTol,
    EnergyTol,
    MaxIters,
    /// Energy changes fell below floating-point resolution.
    Precision,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::EnergyTol => "energy_tol",
            Termination::MaxIters => "max_iters",
            Termination::Precision => "precision",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Projected gradient per unit volume, max-norm.
    pub residual: f64,
    pub termination: Termination,
    /// Energy after each accepted step, starting with the initial energy.
    pub history: Vec<f64>,
    /// Final `L^2` distance from the initial field.
    pub distance: f64,
    pub ball_radius: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ScalarField,
    pub energy: EnergyBreakdown,
    pub diagnostics: Diagnostics,
}

/// `alpha` on the left bulk, `beta` on the right bulk, the midpoint in the neck.
pub fn initial_state(grid: &DumbbellGrid, alpha: f64, beta: f64) -> ScalarField {
    let mid = 0.5 * (alpha + beta);
    let values = grid
        .regions()
        .iter()
        .map(|r| match r {
            Region::LeftBulk => alpha,
            Region::Neck => mid,
            Region::RightBulk => beta,
        })
        .collect();
    ScalarField::new(grid, values).expect("finite by construction")
}

/// Discrete Euler-Lagrange residual: max of `|dE/du_c| / vol_c`.
pub fn el_residual<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    field: &ScalarField,
    potential: &P,
) -> Result<f64> {
    let g = crate::energy::energy_gradient(grid, field, potential)?;
    Ok(g
        .values()
        .iter()
        .zip(grid.volumes())
        .map(|(g, v)| (g / v).abs())
        .fold(0.0, f64::max))
}

pub fn minimise<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    potential: &P,
    init: &ScalarField,
    options: &SolveOptions,
) -> Result<Solution> {
    minimise_with_frozen(grid, potential, init, options, None)
}

/// As [`minimise`], keeping the cells flagged in `frozen` at their initial
/// values.
pub fn minimise_with_frozen<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    potential: &P,
    init: &ScalarField,
    options: &SolveOptions,
    frozen: Option<&[bool]>,
) -> Result<Solution> {
    options.validate()?;
    let n = grid.active_count();
    if init.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: init.len(),
        });
    }
    if let Some(f) = frozen {
        if f.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: f.len(),
            });
        }
    }
    let is_frozen = |c: usize| frozen.is_some_and(|f| f[c]);
    let vol = grid.volumes();

    let mut centre = init.values().to_vec();
    if let Some((lo, hi)) = options.bounds {
        for v in &mut centre {
            *v = v.clamp(lo, hi);
        }
    }
    let centre = centre;

    // static Jacobi scaling: stiffness diagonal plus the convex part of W''
    let diag: Vec<f64> = grid
        .stiffness_diagonal()
        .into_iter()
        .enumerate()
        .map(|(c, s)| {
            let d = s + vol[c] * potential.second_derivative(centre[c]).max(0.0);
            if d > 0.0 {
                d
            } else {
                vol[c]
            }
        })
        .collect();

    let project = |u: &mut [f64]| {
        if let Some((lo, hi)) = options.bounds {
            for v in u.iter_mut() {
                *v = v.clamp(lo, hi);
            }
        }
        if let Some(d) = options.ball_radius {
            let dist = l2_dist(vol, u, &centre);
            if dist > d {
                let s = d / dist;
                for (v, c) in u.iter_mut().zip(&centre) {
                    *v = c + (*v - c) * s;
                }
            }
        }
    };

    let mut u = centre.clone();
    let mut g = vec![0.0; n];
    gradient_into(grid, &u, potential, &mut g);
    let mut e = total_energy(grid, &u, potential);
    if !e.is_finite() {
        return Err(Error::NonFiniteEnergy { iteration: 0 });
    }
    let mut history = vec![e];
    let mut step = 1.0;
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut stalled = 0;
    let mut iterations = 0;

    let residual_of = |u: &[f64], g: &[f64]| -> f64 {
        projected_residual(vol, u, g, &centre, options, frozen)
    };

    let termination = loop {
        let residual = residual_of(&u, &g);
        if residual <= options.grad_tol {
            break Termination::GradTol;
        }
        if iterations >= options.max_iters {
            break Termination::MaxIters;
        }

        let mut t = step;
        let mut accepted = false;
        let mut precision = false;
        for _ in 0..options.max_backtracks {
            for c in 0..n {
                trial[c] = if is_frozen(c) { u[c] } else { u[c] - t * g[c] / diag[c] };
            }
            project(&mut trial);
            for c in 0..n {
                delta[c] = trial[c] - u[c];
            }
            let slope = dot(&g, &delta);
            if !(slope < 0.0) {
                // projection killed the descent direction or it is numerically zero
                precision = true;
                break;
            }
            let e_new = total_energy(grid, &trial, potential);
            if !e_new.is_finite() {
                t *= options.backtrack;
                continue;
            }
            if e_new <= e + options.armijo * slope {
                gradient_into(grid, &trial, potential, &mut g_trial);
                accepted = true;
            } else if e_new <= e && (e - e_new).abs() <= 1e-10 * e.abs().max(f64::MIN_POSITIVE) {
                // energy differences are at rounding level: accept on the
                // directional derivative at the trial point instead
                gradient_into(grid, &trial, potential, &mut g_trial);
                let slope_new = dot(&g_trial, &delta);
                if slope_new <= (1.0 - 2.0 * options.armijo) * slope.abs() {
                    accepted = true;
                }
            }
            if accepted {
                let s_d_s: f64 = (0..n).map(|c| delta[c] * delta[c] * diag[c]).sum();
                let s_y: f64 = (0..n).map(|c| delta[c] * (g_trial[c] - g[c])).sum();
                step = if options.spectral_step && s_y > 0.0 {
                    (s_d_s / s_y).clamp(1e-10, 1e10)
                } else {
                    (2.0 * t).min(1e10)
                };
                let decrease = e - e_new;
                std::mem::swap(&mut u, &mut trial);
                std::mem::swap(&mut g, &mut g_trial);
                e = e_new;
                history.push(e);
                if decrease <= options.energy_tol * e.abs() {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                break;
            }
            t *= options.backtrack;
        }
        iterations += 1;
        if !accepted {
            let scale = e.abs().max(f64::MIN_POSITIVE);
            let predicted = dot(&g, &g.iter().zip(&diag).map(|(g, d)| g / d).collect::<Vec<_>>());
            if precision || predicted * t <= 1e-12 * scale {
                break Termination::Precision;
            }
            return Err(Error::NoDescent {
                iteration: iterations,
                residual,
            });
        }
        if stalled >= options.stall_window {
            break Termination::EnergyTol;
        }
    };

    let residual = residual_of(&u, &g);
    let distance = l2_dist(vol, &u, &centre);
    let energy = energy_of(grid, &u, potential);
    if !energy.total.is_finite() {
        return Err(Error::NonFiniteEnergy { iteration: iterations });
    }
    Ok(Solution {
        field: ScalarField::new(grid, u)?,
        energy,
        diagnostics: Diagnostics {
            iterations,
            residual,
            termination,
            history,
            distance,
            ball_radius: options.ball_radius,
        },
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    chunked_sum::<1, _>(a.len(), |r| {
        let mut s = 0.0;
        for i in r {
            s += a[i] * b[i];
        }
        [s]
    })[0]
}

fn l2_dist(vol: &[f64], u: &[f64], centre: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(centre).map(|(a, b)| a - b).collect();
    weighted_dot(vol, &d, &d).sqrt()
}

/// Max-norm of the projected `L^2` gradient: components blocked by an active
/// bound are dropped, and on the ball boundary the outward normal part is
/// removed.
fn projected_residual(
    vol: &[f64],
    u: &[f64],
    g: &[f64],
    centre: &[f64],
    options: &SolveOptions,
    frozen: Option<&[bool]>,
) -> f64 {
    let n = u.len();
    let mut lambda = 0.0;
    if let Some(d) = options.ball_radius {
        let dist = l2_dist(vol, u, centre);
        if dist >= d * (1.0 - 1e-12) && dist > 0.0 {
            let radial: f64 = (0..n).map(|c| g[c] * (u[c] - centre[c])).sum();
            lambda = (-radial / (dist * dist)).max(0.0);
        }
    }
    let mut r = 0.0f64;
    for c in 0..n {
        if frozen.is_some_and(|f| f[c]) {
            continue;
        }
        let gc = g[c] / vol[c] + lambda * (u[c] - centre[c]);
        if let Some((lo, hi)) = options.bounds {
            if (u[c] <= lo && gc > 0.0) || (u[c] >= hi && gc < 0.0) {
                continue;
            }
        }
        r = r.max(gc.abs());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NeckParams;
    use crate::potential::{DoubleWell, NoPotential};

    #[test]
    fn initial_state_values() {
        let grid = DumbbellGrid::full_box([5, 2, 2], [0.1, 0.1, 0.1]).unwrap();
        let u = initial_state(&grid, 0.0, 1.0);
        assert!(u.values().iter().all(|&v| v == 0.0 || v == 0.5 || v == 1.0));
        assert_eq!(u.l2_distance(&u, &grid), 0.0);
    }

    #[test]
    fn minimum_is_fixed_point() {
        let grid = DumbbellGrid::full_box([4, 4, 4], [0.1, 0.1, 0.1]).unwrap();
        let w = DoubleWell::standard();
        let init = ScalarField::constant(&grid, 0.0);
        let sol = minimise(&grid, &w, &init, &SolveOptions::for_wells(0.0, 1.0)).unwrap();
        assert_eq!(sol.field, init);
        assert_eq!(sol.diagnostics.iterations, 0);
        assert_eq!(sol.diagnostics.termination, Termination::GradTol);
    }

    #[test]
    fn affine_residual_is_potential_slope() {
        let neck = NeckParams::new(0.1, 0.05, 0.02).unwrap();
        let grid = DumbbellGrid::neck_only(neck, [8, 8, 8]).unwrap();
        let w = DoubleWell::standard();
        let u = ScalarField::from_fn(&grid, |p| p[0] / (2.0 * neck.eps) + 0.5);
        let g = crate::energy::energy_gradient(&grid, &u, &w).unwrap();
        // away from the two end slabs, which only see one neighbour in x, the
        // discrete Laplacian of an affine field vanishes
        let mut interior_max = 0.0f64;
        for c in 0..grid.active_count() {
            if grid.centre(c)[0].abs() < neck.eps - 1e-12 {
                let per_volume = g.values()[c] / grid.volume(c);
                let expect = w.derivative(u.values()[c]);
                assert!((per_volume - expect).abs() < 1e-9, "{per_volume} vs {expect}");
                interior_max = interior_max.max(expect.abs());
            }
        }
        assert!(el_residual(&grid, &u, &w).unwrap() >= interior_max);
    }

    #[test]
    fn ball_constraint_respected() {
        let grid = DumbbellGrid::full_box([6, 3, 3], [0.1, 0.1, 0.1]).unwrap();
        let init = initial_state(&grid, 0.0, 1.0);
        let opts = SolveOptions {
            ball_radius: Some(0.01),
            ..SolveOptions::for_wells(0.0, 1.0)
        };
        let sol = minimise(&grid, &NoPotential, &init, &opts).unwrap();
        assert!(sol.diagnostics.distance <= 0.01 + 1e-12);
        assert!(sol.diagnostics.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bad_options() {
        let o = SolveOptions {
            armijo: 0.7,
            ..SolveOptions::default()
        };
        assert!(o.validate().is_err());
        let o = SolveOptions {
            grad_tol: 0.0,
            ..SolveOptions::default()
        };
        assert!(o.validate().is_err());
    }
}
