//! Subcommands of the `scatterplane` binary.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use scatterplane::census::{
    self, census_line_trace, injective_census, radial_return, scatter_errors, scatter_experiment, CensusReport,
};
use scatterplane::config::RunConfig;
use scatterplane::geodesic_flow::{trace, write_csv, write_events_json, GeodesicState, Stop};
use scatterplane::metric_forge::{
    construct_phi, export_grid, forge, import_grid, verify_construction, Forged, MetricGrid,
};
use scatterplane::report::Report;
use scatterplane::Error;

pub const OUTPUT_ENV: &str = "SCATTERPLANE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "scatterplane", version, about = "Forge, trace and census a scattering plane")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Values that replace the matching config entries.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = OUTPUT_ENV)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    #[arg(long, global = true)]
    pub flatness: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub n_r: Option<usize>,
    #[arg(long, global = true)]
    pub n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    #[arg(long, global = true)]
    pub max_step: Option<f64>,
    #[arg(long, global = true)]
    pub census_n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub escape_radius: Option<f64>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the metric grid and its verification report.
    Forge,
    /// Re-check a saved grid against the construction.
    Verify {
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Trace one geodesic on a saved grid.
    Trace {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Direction measured from `∂_r` towards `∂_θ`.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        angle: f64,
        #[arg(long, default_value_t = 20.0)]
        s_max: f64,
        /// Stop when the trace leaves through this radius.
        #[arg(long)]
        stop_outward: Option<f64>,
        #[arg(long, default_value = "trace")]
        name: String,
        #[arg(long)]
        svg: bool,
    },
    /// Scattering check and injective-line census on a saved grid.
    Census {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Census over a ladder of ε values, forging each grid in memory.
    Sweep {
        /// Defaults to ε and ε/2.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        epsilons: Vec<f64>,
        /// Azimuth at which the radial-return deviation is compared.
        #[arg(long, default_value_t = FRAC_PI_4)]
        probe_theta: f64,
    },
}

/// A failure with its exit code: 1 for validation, 2 for numerics.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() { 1 } else { 2 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Loads the config and applies command-line overrides, then validates.
pub fn resolve_config(o: &Overrides) -> CliResult<RunConfig> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($src:ident => $($dst:tt)+) => {
            if let Some(v) = o.$src.clone() {
                c.$($dst)+ = v;
            }
        };
    }
    set!(output_dir => output_dir);
    set!(epsilon => deflection.epsilon);
    set!(amplitude => deflection.amplitude);
    set!(flatness => deflection.flatness);
    set!(delta => grid.delta);
    set!(n_r => grid.n_r);
    set!(n_theta => grid.n_theta);
    set!(rtol => tracer.rtol);
    set!(atol => tracer.atol);
    set!(max_step => tracer.max_step);
    set!(census_n_theta => census.n_theta);
    set!(escape_radius => census.escape_radius);
    set!(seed => seed);
    if o.horizon.is_some() {
        c.census.horizon = o.horizon;
    }
    c.validate()?;
    Ok(c)
}

/// Runs a parsed command line; `Ok` carries the lines printed on success.
pub fn run(cli: Cli) -> CliResult<Vec<String>> {
    let cfg = resolve_config(&cli.overrides)?;
    fs::create_dir_all(&cfg.output_dir)?;
    match cli.command {
        Command::Forge => cmd_forge(&cfg),
        Command::Verify { grid } => cmd_verify(&cfg, &grid_path(&cfg, grid)),
        Command::Trace {
            grid,
            r,
            theta,
            angle,
            s_max,
            stop_outward,
            name,
            svg,
        } => cmd_trace(
            &cfg,
            &grid_path(&cfg, grid),
            r,
            theta,
            angle,
            s_max,
            stop_outward,
            &name,
            svg,
        ),
        Command::Census { grid, svg } => cmd_census(&cfg, &grid_path(&cfg, grid), svg),
        Command::Sweep { epsilons, probe_theta } => cmd_sweep(&cfg, &epsilons, probe_theta),
    }
}

fn grid_path(cfg: &RunConfig, given: Option<PathBuf>) -> PathBuf {
    given.unwrap_or_else(|| cfg.output_dir.join("grid.bin"))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::numerical(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn report_lines(report: &Report) -> Vec<String> {
    report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: {:.3e} (tol {:.0e})",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            )
        })
        .collect()
}

fn check_report(report: &Report) -> CliResult<()> {
    match report.failures().next() {
        None => Ok(()),
        Some(c) => Err(CliError::numerical(format!(
            "verification check '{}' failed: {:.3e} over {:.0e}",
            c.name, c.residual, c.tolerance
        ))),
    }
}

pub fn cmd_forge(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let Forged { spec, phi, grid, .. } = forge(&cfg.forge_params())?;
    let report = verify_construction(&grid, &phi, &spec);
    let grid_file = cfg.output_dir.join("grid.bin");
    export_grid(&grid, &grid_file)?;
    cfg.save(&cfg.output_dir.join("config.toml"))?;
    write_json(&cfg.output_dir.join("verify.json"), &report)?;
    let mut lines = vec![format!("wrote {}", grid_file.display())];
    lines.extend(report_lines(&report));
    check_report(&report)?;
    Ok(lines)
}

fn load_grid(cfg: &RunConfig, path: &Path) -> CliResult<MetricGrid> {
    if !path.exists() {
        return Err(CliError::validation(format!(
            "grid file {} not found; run `forge` first",
            path.display()
        )));
    }
    let grid = import_grid(path)?;
    let m = grid.meta();
    let d = &cfg.deflection;
    let dims = grid.dims();
    if m.epsilon != d.epsilon
        || m.amplitude != d.amplitude
        || m.flatness != d.flatness
        || m.delta != cfg.grid.delta
        || dims != (cfg.grid.n_r, cfg.grid.n_theta)
    {
        return Err(CliError::validation(format!(
            "grid {} was forged with ε = {}, {}×{}; config asks for ε = {}, {}×{}",
            path.display(),
            m.epsilon,
            dims.0,
            dims.1,
            d.epsilon,
            cfg.grid.n_r,
            cfg.grid.n_theta
        )));
    }
    Ok(grid)
}

pub fn cmd_verify(cfg: &RunConfig, grid_file: &Path) -> CliResult<Vec<String>> {
    let grid = load_grid(cfg, grid_file)?;
    let (spec, _, phi) = construct_phi(&cfg.forge_params())?;
    let report = verify_construction(&grid, &phi, &spec);
    write_json(&cfg.output_dir.join("verify.json"), &report)?;
    let lines = report_lines(&report);
    check_report(&report)?;
    Ok(lines)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_trace(
    cfg: &RunConfig,
    grid_file: &Path,
    r: f64,
    theta: f64,
    angle: f64,
    s_max: f64,
    stop_outward: Option<f64>,
    name: &str,
    svg: bool,
) -> CliResult<Vec<String>> {
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(CliError::validation(format!("bad trace name '{name}'")));
    }
    let grid = load_grid(cfg, grid_file)?;
    let start = GeodesicState::launch(&grid, r, theta, angle);
    let mut opts = cfg.trace_options();
    if let Some(rs) = stop_outward {
        opts = opts.with_stop(Stop::Outward(rs));
    }
    let t = trace(&grid, &start, s_max, opts)?;
    let dir = &cfg.output_dir;
    write_csv(&t, create(&dir.join(format!("{name}.csv")))?)?;
    write_events_json(&t, create(&dir.join(format!("{name}_events.json")))?)?;
    if svg {
        let extent = t.samples.iter().map(|s| s.r).fold(0.0, f64::max).min(8.0) * 1.05;
        census::write_svg(&[(name, &t)], extent, create(&dir.join(format!("{name}.svg")))?)?;
    }
    Ok(vec![format!(
        "{} samples, {} events, length {:.6}, {:?}",
        t.samples.len(),
        t.events.len(),
        t.length(),
        t.termination
    )])
}

fn census_lines(report: &CensusReport) -> Vec<String> {
    let mut lines = vec![format!(
        "ε = {}: {} both-ends-radial azimuths, {} undetermined, threshold {:.2e}",
        report.epsilon,
        report.radial_azimuths.len(),
        report.undetermined,
        report.threshold
    )];
    if report.degenerate {
        lines.push("degenerate: all radial".into());
    } else {
        lines.push(format!("injective lines: {}", report.injective_lines));
    }
    lines
}

fn census_outcome(report: &CensusReport) -> CliResult<()> {
    if report.degenerate || report.confirms_two_lines() {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "census found {} injective lines with {} undetermined azimuths",
            report.injective_lines, report.undetermined
        )))
    }
}

pub fn cmd_census(cfg: &RunConfig, grid_file: &Path, svg: bool) -> CliResult<Vec<String>> {
    let grid = load_grid(cfg, grid_file)?;
    let (spec, _, _) = construct_phi(&cfg.forge_params())?;
    let topts = cfg.trace_options();
    let copts = cfg.census_options();
    let dir = &cfg.output_dir;

    let scatter = scatter_experiment(&grid, &spec, copts.n_theta, &topts)?;
    census::write_scatter_csv(&scatter, create(&dir.join("scatter.csv"))?)?;
    let (az, ang) = scatter_errors(&scatter);

    let report = injective_census(&grid, &spec, &copts, &topts)?;
    census::write_census_json(&report, create(&dir.join("census.json"))?)?;
    census::write_census_csv(&report, create(&dir.join("census.csv"))?)?;
    if svg {
        let thetas = [0.0, FRAC_PI_4, 5.0 * FRAC_PI_4];
        let traces = thetas
            .iter()
            .map(|&t| census_line_trace(&grid, t, &copts, &topts))
            .collect::<Result<Vec<_>, _>>()?;
        let labels: Vec<String> = thetas.iter().map(|t| format!("θ₋ = {t:.4}")).collect();
        let items: Vec<(&str, _)> = labels.iter().map(String::as_str).zip(traces.iter()).collect();
        census::write_svg(&items, 4.0, create(&dir.join("census.svg"))?)?;
    }
    let mut lines = vec![format!(
        "scatter: max azimuth error {az:.2e}, max angle error {ang:.2e}"
    )];
    lines.extend(census_lines(&report));
    census_outcome(&report)?;
    Ok(lines)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    epsilon: f64,
    injective_lines: usize,
    undetermined: usize,
    special_set_matches: bool,
    probe_theta: f64,
    probe_deviation: f64,
    /// Probe deviation relative to the first rung, divided by the ε ratio.
    linearity: f64,
}

pub fn cmd_sweep(cfg: &RunConfig, epsilons: &[f64], probe_theta: f64) -> CliResult<Vec<String>> {
    let ladder: Vec<f64> = if epsilons.is_empty() {
        vec![cfg.deflection.epsilon, cfg.deflection.epsilon / 2.0]
    } else {
        epsilons.to_vec()
    };
    if ladder.iter().any(|e| *e == 0.0 || !e.is_finite()) {
        return Err(CliError::validation("sweep needs finite nonzero ε values"));
    }
    let topts = cfg.trace_options();
    let copts = cfg.census_options();
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut lines = Vec::new();
    for &eps in &ladder {
        let mut c = cfg.clone();
        c.deflection.epsilon = eps;
        let f = forge(&c.forge_params())?;
        let report = injective_census(&f.grid, &f.spec, &copts, &topts)?;
        let dev = radial_return(&f.grid, probe_theta, &topts)?.deviation;
        let linearity = match rows.first() {
            Some(first) => (dev / first.probe_deviation) / (eps / first.epsilon),
            None => 1.0,
        };
        lines.push(format!(
            "ε = {eps}: {} lines, {} undetermined, deviation at θ = {probe_theta:.4}: {dev:.6e} (linearity {linearity:.4})",
            report.injective_lines, report.undetermined
        ));
        rows.push(SweepRow {
            epsilon: eps,
            injective_lines: report.injective_lines,
            undetermined: report.undetermined,
            special_set_matches: report.special_set_matches,
            probe_theta,
            probe_deviation: dev,
            linearity,
        });
    }
    write_json(&cfg.output_dir.join("sweep.json"), &rows)?;
    let mut csv = String::from(
        "epsilon,injective_lines,undetermined,special_set_matches,probe_theta,probe_deviation,linearity\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{:e},{},{},{},{:e},{:e},{:e}\n",
            r.epsilon,
            r.injective_lines,
            r.undetermined,
            r.special_set_matches,
            r.probe_theta,
            r.probe_deviation,
            r.linearity
        ));
    }
    fs::write(cfg.output_dir.join("sweep.csv"), csv)?;
    if let Some(bad) = rows
        .iter()
        .find(|r| r.injective_lines != 2 || r.undetermined != 0 || !r.special_set_matches)
    {
        return Err(CliError::numerical(format!(
            "census at ε = {} did not confirm two lines",
            bad.epsilon
        )));
    }
    Ok(lines)
}
