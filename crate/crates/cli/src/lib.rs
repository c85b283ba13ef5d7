//! Batch front end for the `neckwall` library.
//!
//! Every subcommand takes its parameters from flags and, optionally, from a
//! TOML file given with `--config`; flags override file values. Results go
//! to `--output` (written atomically) or standard output, and a one-line
//! summary goes to standard error.
//!
//! Exit codes: 0 on success, 1 on a numerical failure (a JSON error object
//! is printed to standard output), 2 on a usage error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use neckwall::{
    affine_energy, build_competitor_field, build_domain, classify, energy, fit_scaling,
    fit_shell_to_neck, initial_state, minimise, mixed_energy, neck_profile,
    optimal_ab, plateau_values, predicted_limits, rasterize, sweep, BulkSpec, CompetitorKind,
    CompetitorParams, Diagnostics, DoubleWell, DumbbellGrid, EnergyBreakdown, Limit, MixedChoice,
    NeckParams, NoPotential, Potential, PowerLogLaw, Prediction, ProfilePoint, ProlateShell, Rate,
    RegimeReport, RegimeTag, Resolution, ScalingFamily, SolveOptions, SweepConfig, SweepRow,
};

pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "neckwall", version, about = "Domain walls in thin-necked dumbbells")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a neck family delta(eps), eta(eps) into its regime.
    Classify(WithCommon<ClassifyParams>),
    /// Closed-form energy of an explicit competitor.
    Competitor(WithCommon<CompetitorArgs>),
    /// Minimise the discrete energy for one neck.
    Minimise(WithCommon<MinimiseParams>),
    /// Minimise along a list of eps values of a family.
    Sweep(WithCommon<SweepParams>),
    /// Neck profile of the minimiser as (x/eps, value) pairs.
    Profile(WithCommon<MinimiseParams>),
}

#[derive(Debug, Args)]
pub struct WithCommon<T: Args> {
    /// TOML file with parameter defaults; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonParams,
    #[command(flatten)]
    pub params: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CommonParams {
    /// Output format; json for single results and csv for sweeps and
    /// profiles by default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ClassifyParams {
    /// Law for delta as `prefactor,power[,log_power]`.
    #[arg(long)]
    pub delta: Option<String>,
    /// Law for eta as `prefactor,power[,log_power]`.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Affine,
    Shell,
    Mixed,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct CompetitorArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Neck-end value on the left (affine and mixed kinds).
    #[arg(long)]
    pub left: Option<f64>,
    /// Neck-end value on the right (affine and mixed kinds).
    #[arg(long)]
    pub right: Option<f64>,
    /// Outer shell coordinate; by default the shell reaches half the flat
    /// radius.
    #[arg(long)]
    pub outer: Option<f64>,
    /// Bulk length `L`; defaults to the smallest admissible value.
    #[arg(long)]
    pub bulk: Option<f64>,
    #[arg(long)]
    pub flat_radius: Option<f64>,
    /// Also rasterise the competitor and report its discrete energy.
    #[arg(long)]
    pub discrete: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridParams,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GridParams {
    /// Cells per neck half-length on every axis.
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub cells_x: Option<usize>,
    #[arg(long)]
    pub cells_y: Option<usize>,
    #[arg(long)]
    pub cells_z: Option<usize>,
    /// Width ratio of consecutive bulk cells.
    #[arg(long)]
    pub growth: Option<f64>,
    /// Largest bulk cell as a fraction of `L`.
    #[arg(long)]
    pub max_spacing: Option<f64>,
    #[arg(long)]
    pub max_cells: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SolveParams {
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub energy_tol: Option<f64>,
    #[arg(long)]
    pub stall_window: Option<usize>,
    /// Radius of the `L^2` ball around the initial state.
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Scale `w0` of the double well; 0 turns the potential off.
    #[arg(long)]
    pub well_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MinimiseParams {
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub bulk: Option<f64>,
    #[arg(long)]
    pub flat_radius: Option<f64>,
    /// Write the grid description here (text format).
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    /// Write the minimised field here (binary format).
    #[arg(long)]
    pub field_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub solve: SolveParams,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SweepParams {
    /// Law for delta as `prefactor,power[,log_power]`.
    #[arg(long)]
    pub delta: Option<String>,
    /// Law for eta as `prefactor,power[,log_power]`.
    #[arg(long)]
    pub eta: Option<String>,
    /// Comma-separated family parameters.
    #[arg(long)]
    pub eps_list: Option<String>,
    /// Uniform factor applied to every neck length.
    #[arg(long)]
    pub length_scale: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Bulk length `L`; defaults to the smallest value admissible for every
    /// sweep point.
    #[arg(long)]
    pub bulk: Option<f64>,
    #[arg(long)]
    pub flat_radius: Option<f64>,
    /// Plateau shell, inner radius in multiples of `max(delta, eta)`.
    #[arg(long)]
    pub plateau_inner: Option<f64>,
    /// Plateau shell, outer radius in multiples of `max(delta, eta)`.
    #[arg(long)]
    pub plateau_outer: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub solve: SolveParams,
}

/// `classify` output. Limit constants appear both symbolically and as
/// numbers in units of `(beta - alpha)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutput {
    pub tag: RegimeTag,
    pub ell: Limit,
    pub m_flat: Option<f64>,
    pub l_narrow: Option<f64>,
    pub rate: Option<Rate>,
    pub outside_rate: Option<Rate>,
    pub kappa_total: Option<String>,
    pub kappa_neck: Option<String>,
    pub kappa_outside: Option<String>,
    pub kappa_values: KappaValues,
    pub alpha: f64,
    pub beta: f64,
    pub prediction: Option<Prediction>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaValues {
    pub total: Option<f64>,
    pub neck: Option<f64>,
    pub outside: Option<f64>,
}

impl ClassifyOutput {
    pub fn new(report: &RegimeReport, alpha: f64, beta: f64) -> Self {
        use neckwall::regimes::{kappa_symbol, KappaPart};
        let sym = |v, part| kappa_symbol(v, report.tag, part);
        Self {
            tag: report.tag,
            ell: report.ell,
            m_flat: report.m_flat,
            l_narrow: report.l_narrow,
            rate: report.rate,
            outside_rate: report.outside_rate,
            kappa_total: sym(report.kappa_total, KappaPart::Total),
            kappa_neck: sym(report.kappa_neck, KappaPart::Neck),
            kappa_outside: sym(report.kappa_outside, KappaPart::Outside),
            kappa_values: KappaValues {
                total: report.kappa_total,
                neck: report.kappa_neck,
                outside: report.kappa_outside,
            },
            alpha,
            beta,
            prediction: predicted_limits(report, alpha, beta).ok(),
            notes: report.notes.clone(),
        }
    }

    /// The report this output was built from.
    pub fn report(&self) -> RegimeReport {
        RegimeReport {
            tag: self.tag,
            ell: self.ell,
            m_flat: self.m_flat,
            l_narrow: self.l_narrow,
            rate: self.rate,
            outside_rate: self.outside_rate,
            kappa_total: self.kappa_values.total,
            kappa_neck: self.kappa_values.neck,
            kappa_outside: self.kappa_values.outside,
            notes: self.notes.clone(),
        }
    }
}

/// `competitor` output. Energies are Dirichlet energies of the closed-form
/// competitor; `discrete` is the full energy of its rasterisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorOutput {
    pub kind: KindArg,
    pub neck: NeckParams,
    pub alpha: f64,
    pub beta: f64,
    pub left: f64,
    pub right: f64,
    pub outer: Option<f64>,
    pub energy: f64,
    pub neck_energy: f64,
    pub outside_energy: f64,
    pub discrete: Option<EnergyBreakdown>,
    pub cells: Option<usize>,
}

/// `minimise` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimiseOutput {
    pub neck: NeckParams,
    pub bulk: BulkSpec,
    pub alpha: f64,
    pub beta: f64,
    pub cells: usize,
    pub energy: EnergyBreakdown,
    pub neck_fraction: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// JSON object printed on numerical failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorOutput {
    pub error: String,
    pub message: String,
}

/// Failure of a run, mapped to an exit code.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Numerical(neckwall::Error),
    Io(String),
}

impl From<neckwall::Error> for RunError {
    fn from(e: neckwall::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Numerical(_) | RunError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

/// Parses the arguments, runs the subcommand and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(e) => {
            match &e {
                RunError::Usage(m) => eprintln!("error: {m}"),
                RunError::Numerical(err) => {
                    let obj = ErrorOutput {
                        error: err.kind().to_string(),
                        message: err.to_string(),
                    };
                    println!("{}", serde_json::to_string(&obj).expect("serialisable"));
                    eprintln!("failed: {err}");
                }
                RunError::Io(m) => {
                    let obj = ErrorOutput {
                        error: "Io".into(),
                        message: m.clone(),
                    };
                    println!("{}", serde_json::to_string(&obj).expect("serialisable"));
                    eprintln!("failed: {m}");
                }
            }
            e.exit_code()
        }
    }
}

/// Runs one subcommand and returns its one-line summary.
pub fn run(command: Command) -> RunResult<String> {
    match command {
        Command::Classify(a) => {
            let (common, p) = resolve(a, "classify")?;
            run_classify(&common, &p)
        }
        Command::Competitor(a) => {
            let (common, p) = resolve(a, "competitor")?;
            run_competitor(&common, &p)
        }
        Command::Minimise(a) => {
            let (common, p) = resolve(a, "minimise")?;
            run_minimise(&common, &p)
        }
        Command::Sweep(a) => {
            let (common, p) = resolve(a, "sweep")?;
            run_sweep(&common, &p)
        }
        Command::Profile(a) => {
            let (common, p) = resolve(a, "profile")?;
            run_profile(&common, &p)
        }
    }
}

/// Overlays flag values on the config file. The file may hold the keys at
/// top level or in a table named after the subcommand.
fn resolve<T>(args: WithCommon<T>, name: &str) -> RunResult<(CommonParams, T)>
where
    T: Args + Serialize + DeserializeOwned,
{
    let Some(path) = &args.config else {
        return Ok((args.common, args.params));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = toml::from_str(&text)
        .map_err(|e| RunError::Usage(format!("bad config {}: {e}", path.display())))?;
    if let Some(toml::Value::Table(section)) = table.remove(name) {
        table = section;
    }
    let mut file = serde_json::to_value(table).expect("toml tables map to json");
    let file_obj = file.as_object_mut().expect("table is an object");
    // keys may use dashes like the flags
    let normalised: serde_json::Map<String, serde_json::Value> = file_obj
        .iter()
        .map(|(k, v)| (k.replace('-', "_"), v.clone()))
        .collect();
    let (common_keys, param_keys): (Vec<_>, Vec<_>) = normalised
        .into_iter()
        .partition(|(k, _)| k == "format" || k == "output");
    let common = overlay(&args.common, common_keys)?;
    let params = overlay(&args.params, param_keys)?;
    Ok((common, params))
}

fn overlay<T: Serialize + DeserializeOwned>(
    flags: &T,
    file: Vec<(String, serde_json::Value)>,
) -> RunResult<T> {
    let flags = serde_json::to_value(flags).expect("flag structs serialise");
    let flags = flags.as_object().expect("flag struct is an object");
    let mut merged = serde_json::Map::new();
    for (k, v) in file {
        if !flags.contains_key(&k) {
            return Err(RunError::Usage(format!("config: unknown key {k:?}")));
        }
        merged.insert(k, v);
    }
    for (k, v) in flags {
        if !v.is_null() {
            merged.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(serde_json::Value::Object(merged))
        .map_err(|e| RunError::Usage(format!("config: {e}")))
}

fn require<T: Copy>(v: Option<T>, name: &str) -> RunResult<T> {
    v.ok_or_else(|| RunError::Usage(format!("missing required parameter --{name}")))
}

fn require_ref<'a, T>(v: &'a Option<T>, name: &str) -> RunResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| RunError::Usage(format!("missing required parameter --{name}")))
}

/// Parses `prefactor,power[,log_power]`.
pub fn parse_law(s: &str) -> std::result::Result<PowerLogLaw, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?} in law {s:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [c, p] => Ok(PowerLogLaw::power(c, p)),
        [c, p, r] => Ok(PowerLogLaw::new(c, p, r)),
        _ => Err(format!("law {s:?} needs `prefactor,power[,log_power]`")),
    }
}

fn law(v: &Option<String>, name: &str) -> RunResult<PowerLogLaw> {
    parse_law(require_ref(v, name)?).map_err(RunError::Usage)
}

fn wells(alpha: Option<f64>, beta: Option<f64>) -> RunResult<(f64, f64)> {
    let (a, b) = (alpha.unwrap_or(0.0), beta.unwrap_or(1.0));
    if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) || !a.is_finite() || !b.is_finite() {
        return Err(RunError::Numerical(neckwall::Error::InvalidWells {
            alpha: a,
            beta: b,
        }));
    }
    Ok((a, b))
}

fn resolution(p: &GridParams) -> Resolution {
    let d = Resolution::default();
    let base = p.cells.map(|c| [c; 3]).unwrap_or(d.cells_per_half);
    Resolution {
        cells_per_half: [
            p.cells_x.unwrap_or(base[0]),
            p.cells_y.unwrap_or(base[1]),
            p.cells_z.unwrap_or(base[2]),
        ],
        growth: p.growth.unwrap_or(d.growth),
        max_spacing_frac: p.max_spacing.unwrap_or(d.max_spacing_frac),
        max_cells: p.max_cells.unwrap_or(d.max_cells),
    }
}

fn bulk_spec(bulk: Option<f64>, flat: Option<f64>, neck: &NeckParams) -> RunResult<BulkSpec> {
    let l = bulk.unwrap_or_else(|| BulkSpec::required_extent(neck));
    Ok(match flat {
        Some(r) => BulkSpec::with_flat_radius(l, r)?,
        None => BulkSpec::new(l)?,
    })
}

fn solve_options(p: &SolveParams, alpha: f64, beta: f64) -> SolveOptions {
    let mut o = SolveOptions::for_wells(alpha, beta);
    if let Some(v) = p.max_iters {
        o.max_iters = v;
    }
    if let Some(v) = p.grad_tol {
        o.grad_tol = v;
    }
    if let Some(v) = p.energy_tol {
        o.energy_tol = v;
    }
    if let Some(v) = p.stall_window {
        o.stall_window = v;
    }
    o.ball_radius = p.ball_radius;
    o
}

fn potential(p: &SolveParams, alpha: f64, beta: f64) -> RunResult<Box<dyn Potential>> {
    Ok(match p.well_scale {
        Some(0.0) => Box::new(NoPotential),
        w => Box::new(DoubleWell::new(alpha, beta, w.unwrap_or(1.0))?),
    })
}

fn run_classify(common: &CommonParams, p: &ClassifyParams) -> RunResult<String> {
    let family = ScalingFamily::new(law(&p.delta, "delta")?, law(&p.eta, "eta")?)?;
    let (alpha, beta) = wells(p.alpha, p.beta)?;
    let report = classify(&family)?;
    let out = ClassifyOutput::new(&report, alpha, beta);
    emit_single(common, &out)?;
    Ok(format!(
        "classify: {:?}, rate {}",
        out.tag,
        out.rate.map(|r| r.symbol()).unwrap_or("none")
    ))
}

fn run_competitor(common: &CommonParams, p: &CompetitorArgs) -> RunResult<String> {
    let kind = require(p.kind, "kind")?;
    let neck = NeckParams::new(
        require(p.eps, "eps")?,
        require(p.delta, "delta")?,
        require(p.eta, "eta")?,
    )?;
    let (alpha, beta) = wells(p.alpha, p.beta)?;
    let bulk = bulk_spec(p.bulk, p.flat_radius, &neck)?;
    let mid = 0.5 * (alpha + beta);
    let (left, right) = match kind {
        KindArg::Affine => (p.left.unwrap_or(alpha), p.right.unwrap_or(beta)),
        KindArg::Shell => (mid, mid),
        KindArg::Mixed => match (p.left, p.right) {
            (Some(l), Some(r)) => (l, r),
            (None, None) => {
                let c = optimal_ab(&neck, alpha, beta)?;
                (c.left, c.right)
            }
            _ => return Err(RunError::Usage("give both --left and --right or neither".into())),
        },
    };
    let neck_energy = affine_energy(&neck, left, right);
    let (outer, outside_energy) = match kind {
        KindArg::Affine => (None, 0.0),
        KindArg::Shell | KindArg::Mixed => {
            let choice = MixedChoice::new(left, right, alpha, beta)?;
            let (a, m) = fit_shell_to_neck(&neck)?;
            let outer = match p.outer {
                Some(o) => o,
                None => neckwall::competitors::default_outer(a, m, bulk.flat_radius)?,
            };
            ProlateShell::new(a, m, outer, choice.left, alpha)?.check_fits(bulk.flat_radius)?;
            let total = mixed_energy(&neck, &choice, alpha, beta, outer)?;
            (Some(outer), total - neck_energy)
        }
    };
    let (discrete, cells) = if p.discrete.unwrap_or(false) {
        let grid = rasterize(&build_domain(neck, bulk)?, &resolution(&p.grid))?;
        let ck = match kind {
            KindArg::Affine => CompetitorKind::Affine { left, right },
            KindArg::Shell => CompetitorKind::Shell,
            KindArg::Mixed => CompetitorKind::Mixed(MixedChoice::new(left, right, alpha, beta)?),
        };
        let params = CompetitorParams {
            alpha,
            beta,
            flat_radius: bulk.flat_radius,
            outer,
        };
        let field = build_competitor_field(&grid, ck, &params)?;
        let pot = DoubleWell::new(alpha, beta, 1.0)?;
        (Some(energy(&grid, &field, &pot)?), Some(grid.active_count()))
    } else {
        (None, None)
    };
    let out = CompetitorOutput {
        kind,
        neck,
        alpha,
        beta,
        left,
        right,
        outer,
        energy: neck_energy + outside_energy,
        neck_energy,
        outside_energy,
        discrete,
        cells,
    };
    emit_single(common, &out)?;
    Ok(format!("competitor {kind:?}: energy {:.6e}", out.energy))
}

struct Minimised {
    grid: DumbbellGrid,
    output: MinimiseOutput,
    field: neckwall::ScalarField,
}

fn minimise_neck(p: &MinimiseParams) -> RunResult<Minimised> {
    let neck = NeckParams::new(
        require(p.eps, "eps")?,
        require(p.delta, "delta")?,
        require(p.eta, "eta")?,
    )?;
    let (alpha, beta) = wells(p.alpha, p.beta)?;
    let bulk = bulk_spec(p.bulk, p.flat_radius, &neck)?;
    let grid = rasterize(&build_domain(neck, bulk)?, &resolution(&p.grid))?;
    let options = solve_options(&p.solve, alpha, beta);
    options.check_ball_radius(&grid, alpha, beta)?;
    let pot = potential(&p.solve, alpha, beta)?;
    let init = initial_state(&grid, alpha, beta);
    let sol = minimise(&grid, pot.as_ref(), &init, &options)?;
    let r = neck.delta.max(neck.eta);
    let plateaus = plateau_values(&grid, &sol.field, (2.0 * r, 4.0 * r)).ok();
    let e = sol.energy;
    let output = MinimiseOutput {
        neck,
        bulk,
        alpha,
        beta,
        cells: grid.active_count(),
        energy: e,
        neck_fraction: (e.total > 0.0).then(|| (e.neck / e.total).clamp(0.0, 1.0)),
        m1: plateaus.map(|p| p.0),
        m2: plateaus.map(|p| p.1),
        diagnostics: sol.diagnostics,
    };
    if let Some(path) = &p.grid_out {
        write_atomic(path, |w| neckwall::io::write_grid(&grid, w))?;
    }
    if let Some(path) = &p.field_out {
        write_atomic(path, |w| neckwall::io::write_field(&grid, &sol.field, w))?;
    }
    Ok(Minimised {
        grid,
        output,
        field: sol.field,
    })
}

fn run_minimise(common: &CommonParams, p: &MinimiseParams) -> RunResult<String> {
    let m = minimise_neck(p)?;
    emit_single(common, &m.output)?;
    let d = &m.output.diagnostics;
    Ok(format!(
        "minimise: {} cells, energy {:.6e}, {} iterations, {}",
        m.output.cells,
        m.output.energy.total,
        d.iterations,
        d.termination.as_str()
    ))
}

fn run_profile(common: &CommonParams, p: &MinimiseParams) -> RunResult<String> {
    let m = minimise_neck(p)?;
    let profile = neck_profile(&m.grid, &m.field)?;
    let body = match common.format.unwrap_or(Format::Csv) {
        Format::Json => json_string(&profile),
        Format::Csv => profile_csv(&profile),
    };
    emit(common, &body)?;
    Ok(format!(
        "profile: {} slabs, energy {:.6e}",
        profile.len(),
        m.output.energy.total
    ))
}

pub fn profile_csv(profile: &[ProfilePoint]) -> String {
    let mut s = String::from("s,value\n");
    for p in profile {
        s.push_str(&format!("{:e},{:e}\n", p.s, p.value));
    }
    s
}

fn run_sweep(common: &CommonParams, p: &SweepParams) -> RunResult<String> {
    let family = ScalingFamily::new(law(&p.delta, "delta")?, law(&p.eta, "eta")?)?;
    let eps_list: Vec<f64> = require_ref(&p.eps_list, "eps-list")?
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| RunError::Usage(format!("bad eps value {t:?}")))
        })
        .collect::<RunResult<_>>()?;
    if eps_list.is_empty() {
        return Err(RunError::Usage("empty --eps-list".into()));
    }
    let (alpha, beta) = wells(p.alpha, p.beta)?;
    let scale = p.length_scale.unwrap_or(1.0);
    let l = match p.bulk {
        Some(l) => l,
        None => {
            let mut l = 0.0f64;
            for &e in &eps_list {
                l = l.max(BulkSpec::required_extent(&family.neck(e)?.scaled(scale)?));
            }
            l
        }
    };
    let bulk = match p.flat_radius {
        Some(r) => BulkSpec::with_flat_radius(l, r)?,
        None => BulkSpec::new(l)?,
    };
    let mut config = SweepConfig::new(alpha, beta, bulk);
    config.resolution = resolution(&p.grid);
    config.solve = solve_options(&p.solve, alpha, beta);
    config.length_scale = scale;
    config.plateau_shell = (
        p.plateau_inner.unwrap_or(config.plateau_shell.0),
        p.plateau_outer.unwrap_or(config.plateau_shell.1),
    );
    let pot = potential(&p.solve, alpha, beta)?;
    let rows = sweep(&family, &eps_list, &config, pot.as_ref())?;
    let body = match common.format.unwrap_or(Format::Csv) {
        Format::Json => json_string(&rows),
        Format::Csv => sweep_csv(&rows),
    };
    emit(common, &body)?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    let report = classify(&family)?;
    let fit = report
        .rate
        .and_then(|rate| fit_scaling(&rows, rate).ok())
        .map(|f| format!(", fit exponent {:.3} prefactor {:.3e}", f.exponent, f.prefactor))
        .unwrap_or_default();
    Ok(format!(
        "sweep: {:?}, {} rows, {failed} failed{fit}",
        report.tag,
        rows.len()
    ))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SweepRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialise");
    s.push('\n');
    s
}

fn emit_single<T: Serialize>(common: &CommonParams, value: &T) -> RunResult<()> {
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => json_string(value),
        Format::Csv => flat_csv(&serde_json::to_value(value).expect("outputs serialise")),
    };
    emit(common, &body)
}

/// One header line and one value line; nested objects use dotted keys.
pub fn flat_csv(value: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<usize, (String, String)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, v, out);
                }
            }
            serde_json::Value::Null => {
                out.insert(out.len(), (prefix.to_string(), String::new()));
            }
            serde_json::Value::String(s) => {
                out.insert(out.len(), (prefix.to_string(), csv_field(s)));
            }
            other => {
                out.insert(out.len(), (prefix.to_string(), csv_field(&other.to_string())));
            }
        }
    }
    let mut cols = BTreeMap::new();
    walk("", value, &mut cols);
    let (keys, values): (Vec<_>, Vec<_>) = cols.into_values().unzip();
    format!("{}\n{}\n", keys.join(","), values.join(","))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit(common: &CommonParams, body: &str) -> RunResult<()> {
    match &common.output {
        Some(path) => write_atomic(path, |w| {
            w.write_all(body.as_bytes())
                .map_err(|e| neckwall::Error::Format(e.to_string()))
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| RunError::Io(e.to_string()))
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run leaves no partial file.
fn write_atomic<F>(path: &Path, write: F) -> RunResult<()>
where
    F: FnOnce(&mut std::io::BufWriter<&std::fs::File>) -> neckwall::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush().map_err(io)?;
    }
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws_parse_with_optional_log_power() {
        assert_eq!(parse_law("0.5, 1.5").unwrap(), PowerLogLaw::power(0.5, 1.5));
        assert_eq!(parse_law("2,1,-1").unwrap(), PowerLogLaw::new(2.0, 1.0, -1.0));
        assert!(parse_law("1").is_err());
        assert!(parse_law("1,2,3,4").is_err());
        assert!(parse_law("a,2").is_err());
    }

    #[test]
    fn flat_csv_uses_dotted_keys_and_quotes() {
        let v = serde_json::json!({"a": 1, "b": {"c": "x,y", "d": null}});
        assert_eq!(flat_csv(&v), "a,b.c,b.d\n1,\"x,y\",\n");
    }

    #[test]
    fn flags_override_file_values() {
        let flags = ClassifyParams {
            delta: Some("1,1".into()),
            ..Default::default()
        };
        let file = vec![
            ("delta".to_string(), serde_json::json!("1,2")),
            ("eta".to_string(), serde_json::json!("1,3")),
        ];
        let merged = overlay(&flags, file).unwrap();
        assert_eq!(merged.delta.as_deref(), Some("1,1"));
        assert_eq!(merged.eta.as_deref(), Some("1,3"));
        let bad = overlay(&flags, vec![("zeta".to_string(), serde_json::json!(1))]);
        assert!(matches!(bad, Err(RunError::Usage(_))));
    }

    #[test]
    fn resolution_flags_refine_the_default() {
        let r = resolution(&GridParams {
            cells: Some(4),
            cells_y: Some(6),
            ..Default::default()
        });
        assert_eq!(r.cells_per_half, [4, 6, 4]);
        assert_eq!(r.growth, Resolution::default().growth);
    }
}
