use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gradlase::config::{resolve_workers, AxisParam, Config, OutputKind, SCHEMA_VERSION};
use gradlase::constants::ordinary;
use gradlase::cumulant::{
    occupation_ratio, output_flux, steady_state_with, SteadyOptions, COMPONENT_NAMES,
};
use gradlase::oracle::{run_check_suite, DEFAULT_CUTOFF};
use gradlase::spectrum::{auto_spectrum, pole_linewidth, regression_matrix};
use gradlase::sweep::{base_point_spectrum, run_sweep, threshold_curve, CurveKind};
use gradlase::threshold::n_threshold;
use gradlase::{Error, Model};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "gradlase",
    version,
    about = "Thermally driven two-well cavity laser simulator"
)]
struct Cli {
    /// JSON configuration document. Without it the reference point is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file. Defaults to the document's `output`, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "GRADLASE_WORKERS")]
    workers: Option<usize>,
    /// Use the absorptive-injection pump scheme and its rate set.
    #[arg(long, global = true)]
    variant: bool,
    /// Initial cross-structure correlation for the steady-state search.
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed_correlation: Option<f64>,
    /// Exit 0 even when some sweep points fail.
    #[arg(long, global = true)]
    allow_partial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady state at one parameter point.
    Steady,
    /// Parameter grid to CSV.
    Sweep,
    /// Emission spectrum at one point to CSV.
    Spectrum,
    /// Analytic threshold curve to CSV.
    Threshold {
        #[arg(long, value_enum, default_value = "t1")]
        axis: CurveAxis,
    },
    /// Compare the cumulant model with the exact single-structure solution.
    OracleCheck {
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CurveAxis {
    T1,
    NStructures,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. }
                | Error::InvalidParam { .. }
                | Error::InconsistentLevels { .. } => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            })
        }
    }
}

fn load_config(cli: &Cli) -> gradlase::Result<Config> {
    let mut c = match &cli.config {
        Some(path) => Config::from_path(path, cli.variant)?,
        None => Config::from_json(
            &format!("{{\"schema_version\": {SCHEMA_VERSION}}}"),
            cli.variant,
        )?,
    };
    if let Some(s) = cli.seed_correlation {
        if !s.is_finite() {
            return Err(Error::Config {
                field: "--seed-correlation".into(),
                reason: "must be finite".into(),
            });
        }
        c.seed_correlation = s;
    }
    Ok(c)
}

fn output_path(cli: &Cli, config: &Config) -> Option<PathBuf> {
    cli.out.clone().or_else(|| config.output.clone())
}

fn open_output(path: Option<&Path>) -> gradlase::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `dir/name.csv` becomes `dir/name_<suffix>.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn run(cli: &Cli) -> gradlase::Result<u8> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Steady => steady(cli, &config),
        Command::Sweep => sweep(cli, &config),
        Command::Spectrum => spectrum(cli, &config),
        Command::Threshold { axis } => threshold(cli, &config, *axis),
        Command::OracleCheck { cutoff } => oracle_check(&config, *cutoff),
    }
}

fn steady(cli: &Cli, config: &Config) -> gradlase::Result<u8> {
    let model = Model::new(config.params.clone())?;
    let opts = SteadyOptions {
        seed_correlation: config.seed_correlation,
        ..SteadyOptions::default()
    };
    let ss = steady_state_with(&model, &opts)?;
    let p = &model.params;
    let mut w = open_output(output_path(cli, config).as_deref())?;
    writeln!(w, "t1_k = {}", p.t1)?;
    writeln!(w, "t2_k = {}", p.t2)?;
    writeln!(w, "n_structures = {}", p.n_structures)?;
    writeln!(w, "flag = {}", ss.path)?;
    writeln!(w, "residual = {:.6e}", ss.residual)?;
    writeln!(w, "max_growth_rate_per_s = {:.6e}", ss.max_growth_rate)?;
    let v = ss.state.to_vector();
    for (name, x) in COMPONENT_NAMES.iter().zip(v.iter()) {
        writeln!(w, "{name} = {x:.12e}")?;
    }
    writeln!(w, "inversion = {:.12e}", ss.state.inversion())?;
    match occupation_ratio(&ss.state, &model) {
        Ok(r) => {
            writeln!(w, "ratio_i3_i2 = {:.12e}", r.ratio)?;
            writeln!(w, "ratio_uncoupled = {:.12e}", r.uncoupled)?;
            writeln!(w, "ratio_below_uncoupled = {}", r.ratio < r.uncoupled)?;
        }
        Err(e) => writeln!(w, "ratio_i3_i2 = unavailable ({e})")?,
    }
    let flux = output_flux(&ss.state, &model);
    writeln!(w, "flux_total_per_s = {:.12e}", flux.total)?;
    writeln!(w, "flux_net_per_s = {:.12e}", flux.net)?;
    match n_threshold(p, p.t1) {
        Ok(t) => writeln!(
            w,
            "n_threshold = {:.6e} (closed form {})",
            t.n_th,
            if t.valid {
                "valid"
            } else {
                "outside its assumptions"
            }
        )?,
        Err(e) => writeln!(w, "n_threshold = unavailable ({e})")?,
    }
    w.flush()?;
    Ok(0)
}

fn sweep(cli: &Cli, config: &Config) -> gradlase::Result<u8> {
    config.validate_sweep()?;
    // clap folds GRADLASE_WORKERS into `--workers`.
    let workers = resolve_workers(cli.workers, None, config.workers)?;
    let out = output_path(cli, config).ok_or_else(|| Error::Config {
        field: "output".into(),
        reason: "a sweep needs --out or an `output` path".into(),
    })?;
    let result = run_sweep(config, workers)?;
    let mut w = open_output(Some(&out))?;
    result.write_csv(&mut w)?;
    w.flush()?;
    if let Some(curve) = &result.threshold {
        let path = sibling(&out, "threshold");
        let mut w = open_output(Some(&path))?;
        curve.write_csv(&mut w, &config.params)?;
        w.flush()?;
        eprintln!("threshold curve written to {}", path.display());
    }
    let mut failures = result.failures();
    if config.wants(OutputKind::SpectrumAtPoint) {
        let path = sibling(&out, "spectrum");
        match base_point_spectrum(config) {
            Ok(sp) => {
                let mut w = open_output(Some(&path))?;
                sp.write_csv(&mut w)?;
                w.flush()?;
                eprintln!("spectrum written to {}", path.display());
            }
            Err(e) => {
                eprintln!("spectrum at the base point failed: {e}");
                failures += 1;
            }
        }
    }
    eprintln!(
        "{} points written to {}, {failures} incomplete",
        result.points.len(),
        out.display()
    );
    if failures > 0 && !cli.allow_partial {
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn spectrum(cli: &Cli, config: &Config) -> gradlase::Result<u8> {
    let model = Model::new(config.params.clone())?;
    let opts = SteadyOptions {
        seed_correlation: config.seed_correlation,
        ..SteadyOptions::default()
    };
    let ss = steady_state_with(&model, &opts)?;
    let sys = regression_matrix(&ss, &model)?;
    let sp = auto_spectrum(&sys)?;
    let mut w = open_output(output_path(cli, config).as_deref())?;
    sp.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("fwhm_hz = {:.6e}", sp.fwhm);
    eprintln!("pole_linewidth_hz = {:.6e}", pole_linewidth(&sys));
    eprintln!("peak_offset_hz = {:.6e}", sp.peak);
    eprintln!("n_phot = {:.6e}", ss.state.n_phot);
    eprintln!(
        "empty_cavity_fwhm_hz = {:.6e}",
        2.0 * ordinary(model.params.kappa)
    );
    Ok(0)
}

fn threshold(cli: &Cli, config: &Config, axis: CurveAxis) -> gradlase::Result<u8> {
    let param = match axis {
        CurveAxis::T1 => AxisParam::T1,
        CurveAxis::NStructures => AxisParam::NStructures,
    };
    let kind = CurveKind::for_axis(param, config.params.variant)?;
    let axis_spec = config
        .axes
        .iter()
        .find(|a| a.parameter == param)
        .cloned()
        .unwrap_or_else(|| kind.default_axis());
    let curve = threshold_curve(&config.params, kind, &axis_spec.values());
    let mut w = open_output(output_path(cli, config).as_deref())?;
    curve.write_csv(&mut w, &config.params)?;
    w.flush()?;
    Ok(0)
}

fn oracle_check(config: &Config, cutoff: usize) -> gradlase::Result<u8> {
    let checks = run_check_suite(&config.params, cutoff)?;
    println!(
        "{:<6} {:<48} {:>12} {:>10}",
        "result", "check", "measured", "tolerance"
    );
    for c in &checks {
        println!(
            "{:<6} {:<48} {:>12.3e} {:>10.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed == 0 { 0 } else { EXIT_ORACLE })
}
