//! Parameter grids, threshold curves and their CSV export.

use std::fmt;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::config::{AxisParam, AxisSpec, Config, OutputKind, Spacing, SCHEMA_VERSION};
use crate::constants::ordinary;
use crate::cumulant::{
    noncooperative_steady_state, occupation_ratio, output_flux, steady_state_with, OccupationRatio,
    OutputFlux, SolvePath, SteadyOptions,
};
use crate::error::{Error, Result};
use crate::model::{Model, PhysicalParams, Variant};
use crate::spectrum::{auto_spectrum, regression_matrix, Spectrum};
use crate::threshold::{n_threshold, t1_threshold, t2_threshold_variant};

/// Convergence status of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFlag {
    ConvergedNewton,
    ConvergedIntegration,
    Failed,
}

impl fmt::Display for PointFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointFlag::ConvergedNewton => "converged-newton",
            PointFlag::ConvergedIntegration => "converged-integration",
            PointFlag::Failed => "failed",
        })
    }
}

impl From<SolvePath> for PointFlag {
    fn from(p: SolvePath) -> Self {
        match p {
            SolvePath::Newton => PointFlag::ConvergedNewton,
            SolvePath::Integration => PointFlag::ConvergedIntegration,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub coords: Vec<f64>,
    pub params: PhysicalParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSummary {
    pub n_phot: f64,
    /// Photon number with the cross-structure correlation held at zero.
    pub n_phot_uncorrelated: Option<f64>,
    pub c_luul: f64,
    pub populations: [f64; 6],
    pub ratio: Option<OccupationRatio>,
    pub flux: OutputFlux,
    pub fwhm_hz: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub index: usize,
    pub coords: Vec<f64>,
    pub flag: PointFlag,
    /// Absent exactly when the steady state failed.
    pub summary: Option<PointSummary>,
    /// Why the point or one of its requested outputs failed.
    pub diagnostics: Vec<String>,
}

impl PointResult {
    pub fn failed(point: &GridPoint, reason: String) -> Self {
        PointResult {
            index: point.index,
            coords: point.coords.clone(),
            flag: PointFlag::Failed,
            summary: None,
            diagnostics: vec![reason],
        }
    }

    /// Converged with every requested output present.
    pub fn complete(&self) -> bool {
        self.flag != PointFlag::Failed && self.diagnostics.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// `N_th` against `T1`.
    StructuresVsT1,
    /// `T1,th` against `N`.
    T1VsStructures,
    /// `T2,th` against `T1` (absorptive injection).
    T2VsT1,
    /// `T2,th` against `N` at fixed `T1` (absorptive injection).
    T2VsStructures,
}

impl CurveKind {
    pub fn columns(&self) -> (&'static str, &'static str) {
        match self {
            CurveKind::StructuresVsT1 => ("t1_k", "n_threshold"),
            CurveKind::T1VsStructures => ("n_structures", "t1_threshold_k"),
            CurveKind::T2VsT1 => ("t1_k", "t2_threshold_k"),
            CurveKind::T2VsStructures => ("n_structures", "t2_threshold_k"),
        }
    }

    /// Curve natural to an axis quantity under the given pump scheme.
    pub fn for_axis(axis: AxisParam, variant: Variant) -> Result<Self> {
        match (variant, axis) {
            (Variant::Standard, AxisParam::T1) => Ok(CurveKind::StructuresVsT1),
            (Variant::Standard, AxisParam::NStructures) => Ok(CurveKind::T1VsStructures),
            (Variant::AbsorptiveInjection, AxisParam::T1) => Ok(CurveKind::T2VsT1),
            (Variant::AbsorptiveInjection, AxisParam::NStructures) => Ok(CurveKind::T2VsStructures),
            (_, AxisParam::T2) => Err(Error::config(
                "axis",
                "no threshold curve is parametrized by t2",
            )),
        }
    }

    /// Default abscissa when the configuration holds no matching axis.
    pub fn default_axis(&self) -> AxisSpec {
        match self {
            CurveKind::StructuresVsT1 => {
                AxisSpec::new(AxisParam::T1, 50.0, 1000.0, 40, Spacing::Log)
            }
            CurveKind::T2VsT1 => AxisSpec::new(AxisParam::T1, 500.0, 3000.0, 40, Spacing::Log),
            CurveKind::T1VsStructures | CurveKind::T2VsStructures => {
                AxisSpec::new(AxisParam::NStructures, 1e5, 1e9, 40, Spacing::Log)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve {
    pub kind: CurveKind,
    pub points: Vec<(f64, std::result::Result<f64, String>)>,
}

pub fn threshold_curve(params: &PhysicalParams, kind: CurveKind, xs: &[f64]) -> ThresholdCurve {
    let eval = |x: f64| -> Result<f64> {
        match kind {
            CurveKind::StructuresVsT1 => n_threshold(params, x).map(|r| r.n_th),
            CurveKind::T1VsStructures => t1_threshold(params, x),
            CurveKind::T2VsT1 => t2_threshold_variant(params, params.n(), x),
            CurveKind::T2VsStructures => t2_threshold_variant(params, x, params.t1),
        }
    };
    let points = xs
        .iter()
        .map(|&x| {
            let y = match eval(x) {
                Ok(y) if y.is_finite() => Ok(y),
                Ok(y) => Err(format!("threshold is {y}")),
                Err(e) => Err(e.to_string()),
            };
            (x, y)
        })
        .collect();
    ThresholdCurve { kind, points }
}

impl ThresholdCurve {
    /// Two-column CSV. Points without a threshold are listed as comments.
    pub fn write_csv<W: Write>(&self, mut w: W, params: &PhysicalParams) -> Result<()> {
        let (x, y) = self.kind.columns();
        writeln!(
            w,
            "# gradlase threshold curve, schema_version={SCHEMA_VERSION}"
        )?;
        write_param_comment(&mut w, params)?;
        for (xv, y) in &self.points {
            if let Err(reason) = y {
                writeln!(
                    w,
                    "# no threshold at {x}={xv:.10e}: {}",
                    reason.replace('\n', " ")
                )?;
            }
        }
        writeln!(w, "{x},{y}")?;
        for (xv, y) in &self.points {
            if let Ok(y) = y {
                writeln!(w, "{xv:.10e},{y:.10e}")?;
            }
        }
        Ok(())
    }
}

fn write_param_comment<W: Write>(w: &mut W, p: &PhysicalParams) -> Result<()> {
    writeln!(
        w,
        "# kappa_hz={:.6e} g_hz={:.6e} delta_u_hz={:.6e} j1_hz={:.6e}{:+.6e}i j2_hz={:.6e}{:+.6e}i",
        ordinary(p.kappa),
        ordinary(p.g),
        ordinary(p.delta_u),
        ordinary(p.j1.re),
        ordinary(p.j1.im),
        ordinary(p.j2.re),
        ordinary(p.j2.im),
    )?;
    let g = p.gamma.map(ordinary);
    let o = p.omega.map(ordinary);
    writeln!(
        w,
        "# gamma_hz=[{:.6e},{:.6e},{:.6e},{:.6e}] omega_hz=[{:.6e},{:.6e},{:.6e},{:.6e}]",
        g[0], g[1], g[2], g[3], o[0], o[1], o[2], o[3]
    )?;
    let variant = match p.variant {
        Variant::Standard => "standard",
        Variant::AbsorptiveInjection => "absorptive_injection",
    };
    writeln!(
        w,
        "# variant={variant} omega_u_shift_hz={:.6e} t1_k={} t2_k={} n_structures={}",
        ordinary(p.omega_u_shift),
        p.t1,
        p.t2,
        p.n_structures
    )?;
    Ok(())
}

/// Grid points in row-major order of the axes.
pub fn grid_points(config: &Config) -> Vec<GridPoint> {
    let values: Vec<Vec<f64>> = config.axes.iter().map(AxisSpec::values).collect();
    let mut coords: Vec<Vec<f64>> = vec![Vec::new()];
    for vals in &values {
        coords = coords
            .into_iter()
            .flat_map(|c| {
                vals.iter().map(move |&v| {
                    let mut c = c.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    coords
        .into_iter()
        .enumerate()
        .map(|(index, coords)| {
            let mut params = config.params.clone();
            for (axis, &v) in config.axes.iter().zip(&coords) {
                axis.parameter.apply(&mut params, v);
            }
            GridPoint {
                index,
                coords,
                params,
            }
        })
        .collect()
}

/// Steady state and the requested derived quantities at one point.
pub fn evaluate_point(config: &Config, point: &GridPoint) -> PointResult {
    let model = match Model::new(point.params.clone()) {
        Ok(m) => m,
        Err(e) => return PointResult::failed(point, e.to_string()),
    };
    let opts = SteadyOptions {
        seed_correlation: config.seed_correlation,
        ..SteadyOptions::default()
    };
    let ss = match steady_state_with(&model, &opts) {
        Ok(s) => s,
        Err(e) => return PointResult::failed(point, e.to_string()),
    };
    let s = &ss.state;
    let mut diagnostics = Vec::new();
    let n_phot_uncorrelated = if config.wants(OutputKind::PhotonNumber) {
        match noncooperative_steady_state(&model) {
            Ok(nc) => Some(nc.state.n_phot),
            Err(e) => {
                diagnostics.push(format!("uncorrelated baseline: {e}"));
                None
            }
        }
    } else {
        None
    };
    let ratio = if config.wants(OutputKind::OccupationRatio) {
        match occupation_ratio(s, &model) {
            Ok(r) => Some(r),
            Err(e) => {
                diagnostics.push(format!("occupation ratio: {e}"));
                None
            }
        }
    } else {
        None
    };
    let fwhm_hz = if config.wants(OutputKind::Linewidth) {
        match regression_matrix(&ss, &model).and_then(|sys| auto_spectrum(&sys)) {
            Ok(sp) => Some(sp.fwhm),
            Err(e) => {
                diagnostics.push(format!("linewidth: {e}"));
                None
            }
        }
    } else {
        None
    };
    PointResult {
        index: point.index,
        coords: point.coords.clone(),
        flag: ss.path.into(),
        summary: Some(PointSummary {
            n_phot: s.n_phot,
            n_phot_uncorrelated,
            c_luul: s.c_luul,
            populations: s.populations(),
            ratio,
            flux: output_flux(s, &model),
            fwhm_hz,
            residual: ss.residual,
        }),
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<AxisSpec>,
    pub outputs: Vec<OutputKind>,
    pub params: PhysicalParams,
    pub points: Vec<PointResult>,
    pub threshold: Option<ThresholdCurve>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.complete()).count()
    }

    pub fn all_complete(&self) -> bool {
        self.failures() == 0
    }

    fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    /// Writes the grid as CSV with `#` comment lines ahead of a fixed
    /// header. Output depends only on the configuration.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# gradlase sweep, schema_version={SCHEMA_VERSION}")?;
        write_param_comment(&mut w, &self.params)?;
        for a in &self.axes {
            let sp = match a.spacing {
                Spacing::Linear => "linear",
                Spacing::Log => "log",
            };
            writeln!(
                w,
                "# axis {} {sp} [{}, {}] x {}",
                a.parameter.column(),
                a.min,
                a.max,
                a.points
            )?;
        }
        writeln!(w, "# gnuplot: set datafile separator ','")?;
        let mut header: Vec<&str> = vec!["index"];
        header.extend(self.axes.iter().map(|a| a.parameter.column()));
        header.extend([
            "flag",
            "n_phot",
            "log10_n_phot",
            "c_luul",
            "p_i1",
            "p_i2",
            "p_i3",
            "p_i4",
            "p_u",
            "p_l",
            "flux_total",
            "flux_net",
            "residual",
        ]);
        if self.wants(OutputKind::PhotonNumber) {
            header.extend(["n_phot_uncorrelated", "log10_n_phot_uncorrelated"]);
        }
        if self.wants(OutputKind::OccupationRatio) {
            header.extend(["ratio_i3_i2", "ratio_uncoupled"]);
        }
        if self.wants(OutputKind::Linewidth) {
            header.extend(["fwhm_hz", "log10_fwhm_hz"]);
        }
        header.push("diagnostic");

        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(&header).map_err(csv_error)?;
        for p in &self.points {
            let mut row: Vec<String> = vec![p.index.to_string()];
            row.extend(p.coords.iter().map(|&c| num(c)));
            row.push(p.flag.to_string());
            let s = p.summary.as_ref();
            let field = |f: &dyn Fn(&PointSummary) -> Option<f64>| {
                s.and_then(f).map(num).unwrap_or_default()
            };
            row.push(field(&|s| Some(s.n_phot)));
            row.push(field(&|s| log10(s.n_phot)));
            row.push(field(&|s| Some(s.c_luul)));
            for i in 0..6 {
                row.push(field(&|s| Some(s.populations[i])));
            }
            row.push(field(&|s| Some(s.flux.total)));
            row.push(field(&|s| Some(s.flux.net)));
            row.push(field(&|s| Some(s.residual)));
            if self.wants(OutputKind::PhotonNumber) {
                row.push(field(&|s| s.n_phot_uncorrelated));
                row.push(field(&|s| s.n_phot_uncorrelated.and_then(log10)));
            }
            if self.wants(OutputKind::OccupationRatio) {
                row.push(field(&|s| s.ratio.map(|r| r.ratio)));
                row.push(field(&|s| s.ratio.map(|r| r.uncoupled)));
            }
            if self.wants(OutputKind::Linewidth) {
                row.push(field(&|s| s.fwhm_hz));
                row.push(field(&|s| s.fwhm_hz.and_then(log10)));
            }
            row.push(p.diagnostics.join("; ").replace('\n', " "));
            csv.write_record(&row).map_err(csv_error)?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn log10(x: f64) -> Option<f64> {
    (x > 0.0).then(|| x.log10())
}

/// Runs every grid point on a pool of `workers` threads.
pub fn run_sweep(config: &Config, workers: usize) -> Result<SweepResult> {
    run_sweep_with(config, workers, &evaluate_point)
}

/// As [`run_sweep`] with a custom point evaluator. A panicking evaluator
/// fails only its own point.
pub fn run_sweep_with(
    config: &Config,
    workers: usize,
    eval: &(dyn Fn(&Config, &GridPoint) -> PointResult + Sync),
) -> Result<SweepResult> {
    config.validate_sweep()?;
    if workers == 0 {
        return Err(Error::config("workers", "must be >= 1"));
    }
    let points = grid_points(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                catch_unwind(AssertUnwindSafe(|| eval(config, p)))
                    .unwrap_or_else(|_| PointResult::failed(p, "evaluation panicked".into()))
            })
            .collect()
    });
    let threshold = config
        .wants(OutputKind::Thresholds)
        .then(|| sweep_threshold_curve(config));
    Ok(SweepResult {
        axes: config.axes.clone(),
        outputs: config.outputs.clone(),
        params: config.params.clone(),
        points: results,
        threshold,
    })
}

/// Threshold overlay matching the sweep axes: along the `t1` axis when
/// present, else along `n_structures`, else at the base point.
pub fn sweep_threshold_curve(config: &Config) -> ThresholdCurve {
    let p = &config.params;
    let find = |which: AxisParam| config.axes.iter().find(|a| a.parameter == which);
    let (kind, xs) = if let Some(a) = find(AxisParam::T1) {
        (CurveKind::for_axis(AxisParam::T1, p.variant), a.values())
    } else if let Some(a) = find(AxisParam::NStructures) {
        (
            CurveKind::for_axis(AxisParam::NStructures, p.variant),
            a.values(),
        )
    } else {
        (CurveKind::for_axis(AxisParam::T1, p.variant), vec![p.t1])
    };
    threshold_curve(
        p,
        kind.expect("t1 and n_structures always have a curve"),
        &xs,
    )
}

/// Spectrum at the configuration's base point.
pub fn base_point_spectrum(config: &Config) -> Result<Spectrum> {
    let model = Model::new(config.params.clone())?;
    let opts = SteadyOptions {
        seed_correlation: config.seed_correlation,
        ..SteadyOptions::default()
    };
    let ss = steady_state_with(&model, &opts)?;
    auto_spectrum(&regression_matrix(&ss, &model)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(axes: Vec<AxisSpec>, outputs: Vec<OutputKind>) -> Config {
        let mut c = Config::from_params(PhysicalParams::reference(300.0, 0.1, 1000));
        c.axes = axes;
        c.outputs = outputs;
        c
    }

    #[test]
    fn grid_is_row_major() {
        let c = config(
            vec![
                AxisSpec::new(AxisParam::T1, 100.0, 200.0, 2, Spacing::Linear),
                AxisSpec::new(AxisParam::NStructures, 10.0, 30.0, 3, Spacing::Linear),
            ],
            vec![OutputKind::PhotonNumber],
        );
        let g = grid_points(&c);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1].coords, vec![100.0, 20.0]);
        assert_eq!(g[3].coords, vec![200.0, 10.0]);
        assert_eq!(g[5].params.n_structures, 30);
        assert_eq!(g[5].params.t1, 200.0);
    }

    #[test]
    fn sweep_needs_axes_and_outputs() {
        let c = config(vec![], vec![OutputKind::PhotonNumber]);
        assert!(matches!(run_sweep(&c, 1), Err(Error::Config { .. })));
        let c = config(
            vec![AxisSpec::new(AxisParam::T1, 1.0, 2.0, 2, Spacing::Linear)],
            vec![],
        );
        assert!(matches!(run_sweep(&c, 1), Err(Error::Config { .. })));
    }

    #[test]
    fn panics_stay_in_their_point() {
        let c = config(
            vec![AxisSpec::new(
                AxisParam::T1,
                100.0,
                300.0,
                3,
                Spacing::Linear,
            )],
            vec![OutputKind::PhotonNumber],
        );
        let r = run_sweep_with(&c, 2, &|c, p| {
            if p.index == 1 {
                panic!("injected");
            }
            evaluate_point(c, p)
        })
        .unwrap();
        assert_eq!(r.points[1].flag, PointFlag::Failed);
        assert!(r.points[0].complete() && r.points[2].complete());
    }
}
