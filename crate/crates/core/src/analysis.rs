//! Wall profiles, plateau values, eps-sweeps and log-log rate fits.

use serde::{Deserialize, Serialize};

use crate::energy::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{build_domain, rasterize, BulkSpec, DumbbellGrid, NeckParams, Region, Resolution};
use crate::minimiser::{initial_state, minimise, SolveOptions};
use crate::potential::Potential;
use crate::regimes::{classify, Limit, Rate, RegimeReport, RegimeTag, ScalingFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Rescaled coordinate `x / eps` in `[-1, 1]`.
    pub s: f64,
    pub value: f64,
}

/// Volume-weighted cross-sectional averages over the neck slabs.
pub fn neck_profile(grid: &DumbbellGrid, field: &ScalarField) -> Result<Vec<ProfilePoint>> {
    check_len(grid, field)?;
    let neck = grid.neck().ok_or(Error::EmptySlab)?;
    let nx = grid.dims()[0];
    let mut sum = vec![0.0; nx];
    let mut vol = vec![0.0; nx];
    for c in 0..grid.active_count() {
        if grid.region(c) == Region::Neck {
            let i = grid.cell_index(c)[0];
            let v = grid.volume(c);
            sum[i] += v * field.values()[c];
            vol[i] += v;
        }
    }
    let first = vol.iter().position(|&v| v > 0.0).ok_or(Error::EmptySlab)?;
    let last = vol.iter().rposition(|&v| v > 0.0).ok_or(Error::EmptySlab)?;
    (first..=last)
        .map(|i| {
            if vol[i] == 0.0 {
                return Err(Error::EmptySlab);
            }
            Ok(ProfilePoint {
                s: grid.axes()[0].centre(i) / neck.eps,
                value: sum[i] / vol[i],
            })
        })
        .collect()
}

/// Default plateau shell `[2, 4] * max(delta, eta)`.
pub fn default_plateau_radii(neck: &NeckParams) -> (f64, f64) {
    let r = neck.delta.max(neck.eta);
    (2.0 * r, 4.0 * r)
}

/// Average field over bulk cells at distance `[r1, r2]` from the centre of
/// each mouth, as `(left, right)`.
pub fn plateau_values(
    grid: &DumbbellGrid,
    field: &ScalarField,
    radii: (f64, f64),
) -> Result<(f64, f64)> {
    check_len(grid, field)?;
    let (r1, r2) = radii;
    let eps = grid.neck().map_or(0.0, |n| n.eps);
    let mut acc = [[0.0; 2]; 2];
    for c in 0..grid.active_count() {
        let side = match grid.region(c) {
            Region::LeftBulk => 0,
            Region::RightBulk => 1,
            Region::Neck => continue,
        };
        let [x, y, z] = grid.centre(c);
        let dx = if side == 0 { x + eps } else { x - eps };
        let r = (dx * dx + y * y + z * z).sqrt();
        if r >= r1 && r <= r2 {
            let v = grid.volume(c);
            acc[side][0] += v * field.values()[c];
            acc[side][1] += v;
        }
    }
    if acc[0][1] == 0.0 || acc[1][1] == 0.0 {
        return Err(Error::EmptyShell { r1, r2 });
    }
    Ok((acc[0][0] / acc[0][1], acc[1][0] / acc[1][1]))
}

/// Limiting neck profile at `s = x / eps`, where the regime predicts one.
pub fn limit_profile(report: &RegimeReport, alpha: f64, beta: f64, s: f64) -> Option<f64> {
    let mid = 0.5 * (alpha + beta);
    match report.tag {
        RegimeTag::SuperThin | RegimeTag::LetterBoxSub => Some(0.5 * (beta - alpha) * s + mid),
        RegimeTag::WindowThick | RegimeTag::NarrowThick | RegimeTag::LetterBoxSuper => Some(mid),
        RegimeTag::LetterBoxCritical => {
            let (m1, m2) = critical_plateaus(report.ell.finite()?, alpha, beta);
            Some(0.5 * (m2 - m1) * s + 0.5 * (m1 + m2))
        }
        RegimeTag::FlatThin | RegimeTag::OutOfScopeKS => None,
    }
}

/// Plateau values `(m1, m2)` of the critical letter-box regime.
pub fn critical_plateaus(ell: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let mid = 0.5 * (alpha + beta);
    (
        (pi * alpha + ell * mid) / (pi + ell),
        (pi * beta + ell * mid) / (pi + ell),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alpha: f64,
    pub beta: f64,
    pub bulk: BulkSpec,
    pub resolution: Resolution,
    pub solve: SolveOptions,
    /// Uniform factor applied to `(eps, delta, eta)` from the family.
    pub length_scale: f64,
    /// Plateau shell in multiples of `max(delta, eta)`.
    pub plateau_shell: (f64, f64),
}

impl SweepConfig {
    pub fn new(alpha: f64, beta: f64, bulk: BulkSpec) -> Self {
        Self {
            alpha,
            beta,
            bulk,
            resolution: Resolution::default(),
            solve: SolveOptions::for_wells(alpha, beta),
            length_scale: 1.0,
            plateau_shell: (2.0, 4.0),
        }
    }
}

/// One sweep point. Measured quantities are `None` when the point failed
/// or the quantity is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Family parameter before the length scale is applied.
    pub eps_param: f64,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub cells: usize,
    pub total: Option<f64>,
    pub neck: Option<f64>,
    pub outside: Option<f64>,
    pub neck_fraction: Option<f64>,
    pub scaled_total: Option<f64>,
    pub scaled_neck: Option<f64>,
    pub scaled_outside: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub profile_deviation: Option<f64>,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub status: String,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "eps_param,eps,delta,eta,cells,total,neck,outside,\
        neck_fraction,scaled_total,scaled_neck,scaled_outside,m1,m2,profile_deviation,\
        iterations,residual,status";

    pub fn neck_params(&self) -> Result<NeckParams> {
        NeckParams::new(self.eps, self.delta, self.eta)
    }

    pub fn failed(&self) -> bool {
        self.status.starts_with("failed")
    }

    pub fn to_csv(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{:e},{:e},{:e},{:e},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.eps_param,
            self.eps,
            self.delta,
            self.eta,
            self.cells,
            o(self.total),
            o(self.neck),
            o(self.outside),
            o(self.neck_fraction),
            o(self.scaled_total),
            o(self.scaled_neck),
            o(self.scaled_outside),
            o(self.m1),
            o(self.m2),
            o(self.profile_deviation),
            self.iterations,
            o(self.residual),
            self.status.replace(',', ";"),
        )
    }
}

/// Rasterises, minimises from the piecewise-constant state, and measures
/// each point of the sweep. Failed points are reported in their row.
pub fn sweep<P: Potential + ?Sized>(
    family: &ScalingFamily,
    eps_list: &[f64],
    config: &SweepConfig,
    potential: &P,
) -> Result<Vec<SweepRow>> {
    let report = classify(family)?;
    if !(config.length_scale > 0.0 && config.length_scale.is_finite()) {
        return Err(Error::NonPositive {
            name: "length_scale",
            value: config.length_scale,
        });
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let neck = family.neck(eps).and_then(|n| n.scaled(config.length_scale));
        let mut row = SweepRow {
            eps_param: eps,
            eps: eps * config.length_scale,
            delta: family.delta_law.eval(eps) * config.length_scale,
            eta: family.eta_law.eval(eps) * config.length_scale,
            cells: 0,
            total: None,
            neck: None,
            outside: None,
            neck_fraction: None,
            scaled_total: None,
            scaled_neck: None,
            scaled_outside: None,
            m1: None,
            m2: None,
            profile_deviation: None,
            iterations: 0,
            residual: None,
            status: String::new(),
        };
        match neck.and_then(|n| measure(&n, &report, config, potential, &mut row)) {
            Ok(()) => {}
            Err(e) => row.status = format!("failed: {e}"),
        }
        rows.push(row);
    }
    Ok(rows)
}

fn measure<P: Potential + ?Sized>(
    neck: &NeckParams,
    report: &RegimeReport,
    config: &SweepConfig,
    potential: &P,
    row: &mut SweepRow,
) -> Result<()> {
    let (alpha, beta) = (config.alpha, config.beta);
    let domain = build_domain(*neck, config.bulk)?;
    let grid = rasterize(&domain, &config.resolution)?;
    row.cells = grid.active_count();
    let init = initial_state(&grid, alpha, beta);
    let sol = minimise(&grid, potential, &init, &config.solve)?;
    let e = sol.energy;
    row.iterations = sol.diagnostics.iterations;
    row.residual = Some(sol.diagnostics.residual);
    row.status = sol.diagnostics.termination.as_str().to_string();
    row.total = Some(e.total);
    row.neck = Some(e.neck);
    row.outside = Some(e.outside());
    if e.total > 0.0 {
        row.neck_fraction = Some((e.neck / e.total).clamp(0.0, 1.0));
    } else {
        row.status = format!("{} (degenerate: zero energy)", row.status);
    }
    if let Some(rate) = report.rate {
        let rho = rate.eval(neck);
        row.scaled_total = Some(rho * e.total);
        row.scaled_neck = Some(rho * e.neck);
    }
    if let Some(rate) = report.outside_rate {
        row.scaled_outside = Some(rate.eval(neck) * e.outside());
    }
    let r = neck.delta.max(neck.eta);
    let shell = (config.plateau_shell.0 * r, config.plateau_shell.1 * r);
    if let Ok((m1, m2)) = plateau_values(&grid, &sol.field, shell) {
        row.m1 = Some(m1);
        row.m2 = Some(m2);
    }
    let profile = neck_profile(&grid, &sol.field)?;
    let jump = (beta - alpha).abs();
    if jump > 0.0 {
        let mut dev = Some(0.0f64);
        for p in &profile {
            match limit_profile(report, alpha, beta, p.s) {
                Some(v) => dev = dev.map(|d| d.max((p.value - v).abs() / jump)),
                None => dev = None,
            }
        }
        row.profile_deviation = dev;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Least-squares fit `ln(total) = exponent * ln(1/rate) + ln(prefactor)`.
pub fn fit_scaling(rows: &[SweepRow], rate: Rate) -> Result<ScalingFit> {
    let mut points = Vec::new();
    for r in rows {
        if let Some(t) = r.total.filter(|&t| t > 0.0) {
            points.push((rate.eval(&r.neck_params()?), t));
        }
    }
    fit_loglog(&points)
}

/// Fit on raw `(rate, total)` pairs.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateRegression(format!(
            "need at least 3 points with positive energy, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(rho, _)| -rho.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, t)| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-24 * (1.0 + mx * mx)) {
        return Err(Error::DegenerateRegression("all rates are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - exponent * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ScalingFit {
        exponent,
        prefactor: intercept.exp(),
        residual,
    })
}

fn check_len(grid: &DumbbellGrid, field: &ScalarField) -> Result<()> {
    if field.len() != grid.active_count() {
        return Err(Error::SizeMismatch {
            expected: grid.active_count(),
            got: field.len(),
        });
    }
    Ok(())
}

/// The plateau limit of a regime, `(m1, m2)`, where one is predicted.
pub fn predicted_plateaus(report: &RegimeReport, alpha: f64, beta: f64) -> Option<(f64, f64)> {
    let mid = 0.5 * (alpha + beta);
    match report.tag {
        RegimeTag::WindowThick | RegimeTag::NarrowThick | RegimeTag::LetterBoxSuper => Some((mid, mid)),
        RegimeTag::LetterBoxCritical => match report.ell {
            Limit::Finite(l) => Some(critical_plateaus(l, alpha, beta)),
            _ => None,
        },
        _ => None,
    }
}
