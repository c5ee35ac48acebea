//! Cavity output spectrum from the quantum regression theorem.
//!
//! The two-time correlations `G1(tau) = <a^dag(tau) a(0)>` and
//! `G2(tau) = <|u><l|(tau) a(0)>` obey the linear system
//!
//! ```text
//! d/dtau (G1, G2) = [[-kappa,          +i g N],
//!                    [-i g (pu - pl),  i Delta - Gamma]] (G1, G2)
//! ```
//!
//! with `G1(0) = <a^dag a>` and `G2(0) = <a |u><l|>`. The Laplace transform
//! of `G1` is rational and the spectrum is `S(w) = 2 Re G1(s = -i w)`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::cumulant::{CumulantState, SteadyState};
use crate::error::{Error, Result};
use crate::model::Model;

/// Scaled resolvent denominators below this are treated as poles.
pub const POLE_GUARD: f64 = 1e-30;

/// Steady states with a larger scaled residual are refused.
const MAX_STEADY_RESIDUAL: f64 = 1e-8;

/// Relative FWHM change at which peak refinement stops.
const FWHM_RTOL: f64 = 1e-3;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSystem {
    pub matrix: Matrix2<Complex64>,
    /// `(<a^dag a>, <a |u><l|>)`.
    pub initial: Vector2<Complex64>,
    pub kappa: f64,
    /// Decay of the dipole, `out_of_u + out_of_l`.
    pub big_gamma: f64,
    pub delta_u: f64,
    pub g: f64,
    pub n_structures: f64,
    pub inversion: f64,
}

/// Builds the regression system at a converged steady state. Fails when
/// the steady state is not converged or the system has a growing mode.
pub fn regression_matrix(steady: &SteadyState, model: &Model) -> Result<RegressionSystem> {
    if !(steady.residual <= MAX_STEADY_RESIDUAL) {
        return Err(Error::NotConverged(format!(
            "regression needs a converged steady state (scaled residual {:.3e})",
            steady.residual
        )));
    }
    let sys = regression_from_state(&steady.state, model);
    let growth = sys.max_growth_rate();
    if growth > 1e-9 * (sys.kappa + sys.big_gamma) {
        return Err(Error::Domain(format!(
            "regression system has a growing mode, Re lambda = {growth:.6e}"
        )));
    }
    Ok(sys)
}

/// Builds the regression system from arbitrary moments without checks.
pub fn regression_from_state(state: &CumulantState, model: &Model) -> RegressionSystem {
    let p = &model.params;
    let kappa = model.rates.field_damping();
    let big_gamma = model.rates.dipole_damping();
    let inversion = state.inversion();
    let gn = p.g * p.n();
    let matrix = Matrix2::new(
        Complex64::from(-kappa),
        I * gn,
        -I * (p.g * inversion),
        Complex64::new(-big_gamma, p.delta_u),
    );
    RegressionSystem {
        matrix,
        initial: Vector2::new(Complex64::from(state.n_phot), state.c_aul),
        kappa,
        big_gamma,
        delta_u: p.delta_u,
        g: p.g,
        n_structures: p.n(),
        inversion,
    }
}

impl RegressionSystem {
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let m = &self.matrix;
        let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let root = (half_tr * half_tr - det).sqrt();
        [half_tr + root, half_tr - root]
    }

    pub fn max_growth_rate(&self) -> f64 {
        let [a, b] = self.eigenvalues();
        a.re.max(b.re)
    }

    /// Laplace transform of `<a^dag(tau) a(0)>` at complex `s` (rad/s).
    pub fn laplace_value(&self, s: Complex64) -> Result<Complex64> {
        let dip = s - I * self.delta_u + self.big_gamma;
        let den = (s + self.kappa) * dip - self.g * self.g * self.n_structures * self.inversion;
        let scale = (s.norm() + self.kappa + self.big_gamma + self.delta_u.abs()).powi(2);
        if !(den.norm() / scale >= POLE_GUARD) {
            return Err(Error::Pole { re: s.re, im: s.im });
        }
        let num = self.initial[0] * dip + I * self.g * self.n_structures * self.initial[1];
        Ok(num / den)
    }

    /// Spectral density at angular frequency `w` relative to the frame.
    pub fn density(&self, w: f64) -> Result<f64> {
        Ok(2.0 * self.laplace_value(Complex64::new(0.0, -w))?.re)
    }
}

/// `2 |Re lambda| / 2 pi` of the slowest regression eigenvalue, in Hz.
pub fn pole_linewidth(system: &RegressionSystem) -> f64 {
    let [a, b] = system.eigenvalues();
    let slow = if a.re.abs() <= b.re.abs() { a } else { b };
    2.0 * slow.re.abs() / TAU
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz, relative to the rotating frame.
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    /// Peak position, Hz.
    pub peak: f64,
    pub fwhm: f64,
}

impl Spectrum {
    /// Trapezoidal integral of the density over angular frequency.
    pub fn integrated_weight(&self) -> f64 {
        self.frequencies
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(f, d)| 0.5 * (d[0] + d[1]) * TAU * (f[1] - f[0]))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fwhm_hz = {:.10e}", self.fwhm)?;
        writeln!(w, "# peak_hz = {:.10e}", self.peak)?;
        writeln!(w, "frequency_hz,density")?;
        for (f, d) in self.frequencies.iter().zip(&self.density) {
            writeln!(w, "{f:.10e},{d:.10e}")?;
        }
        Ok(())
    }
}

/// Uniform grid in Hz centred on the frame frequency, spanning `half_widths`
/// pole linewidths on either side.
pub fn default_grid(system: &RegressionSystem, half_widths: f64, points: usize) -> Vec<f64> {
    let width = pole_linewidth(system).max(1e-9 * system.kappa / TAU);
    let centre = system.delta_u / TAU;
    let span = half_widths * width;
    let n = points.max(3);
    (0..n)
        .map(|i| centre - span + 2.0 * span * i as f64 / (n - 1) as f64)
        .collect()
}

/// Spectrum on [`default_grid`] at 20 pole half-widths with 801 points,
/// widened tenfold when the half-maximum falls outside.
pub fn auto_spectrum(system: &RegressionSystem) -> Result<Spectrum> {
    match emission_spectrum(system, &default_grid(system, 20.0, 801)) {
        Err(Error::Range(_)) => emission_spectrum(system, &default_grid(system, 200.0, 2001)),
        other => other,
    }
}

/// Evaluates `S` on `grid` (Hz, increasing) and measures the FWHM.
pub fn emission_spectrum(system: &RegressionSystem, grid: &[f64]) -> Result<Spectrum> {
    spectrum_from_density(&|f| system.density(TAU * f), grid)
}

/// Samples an arbitrary density (argument in Hz) on `grid` and measures
/// the peak and FWHM. The peak is polished by golden-section search and the
/// half-maximum crossings by bisection on the density itself; a finer grid
/// around the peak is then laid until the width changes by less than 0.1%.
pub fn spectrum_from_density(s: &dyn Fn(f64) -> Result<f64>, grid: &[f64]) -> Result<Spectrum> {
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Range(
            "grid needs at least 3 strictly increasing points".into(),
        ));
    }
    let density = grid.iter().map(|&f| s(f)).collect::<Result<Vec<_>>>()?;
    if density.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("spectral density".into()));
    }
    let k = argmax(&density);
    if !(density[k] > 0.0) {
        return Err(Error::Range(
            "no positive spectral density on the grid".into(),
        ));
    }
    if k == 0 || k == grid.len() - 1 {
        return Err(Error::Range(format!(
            "peak at the grid edge ({:.6e} Hz)",
            grid[k]
        )));
    }
    let (mut peak, mut fwhm) = measure(s, grid, &density, k)?;
    for _ in 0..20 {
        let lo = peak - fwhm;
        let fine: Vec<f64> = (0..201)
            .map(|i| lo + 2.0 * fwhm * i as f64 / 200.0)
            .collect();
        let dens = fine.iter().map(|&f| s(f)).collect::<Result<Vec<_>>>()?;
        let k = argmax(&dens);
        if k == 0 || k == fine.len() - 1 {
            break;
        }
        let (p, w) = measure(s, &fine, &dens, k)?;
        let change = (w - fwhm).abs() / fwhm;
        peak = p;
        fwhm = w;
        if change < FWHM_RTOL {
            break;
        }
    }
    Ok(Spectrum {
        frequencies: grid.to_vec(),
        density,
        peak,
        fwhm,
    })
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

/// Peak position and FWHM from the grid maximum at index `k`.
fn measure(
    s: &dyn Fn(f64) -> Result<f64>,
    grid: &[f64],
    dens: &[f64],
    k: usize,
) -> Result<(f64, f64)> {
    let (peak, top) = golden_max(s, grid[k - 1], grid[k + 1])?;
    let half = 0.5 * top;
    let left = (0..k).rev().find(|&i| dens[i] < half);
    let right = (k + 1..grid.len()).find(|&i| dens[i] < half);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::Range(
            "half-maximum crossing not inside the grid".into(),
        ));
    };
    let fl = bisect_level(s, half, grid[l], peak)?;
    let fr = bisect_level(s, half, grid[r], peak)?;
    let fwhm = fr - fl;
    if !(fwhm > 0.0) {
        return Err(Error::Range(format!("degenerate width {fwhm:.3e} Hz")));
    }
    Ok((peak, fwhm))
}

fn golden_max(s: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut sc, mut sd) = (s(c)?, s(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if sc > sd {
            b = d;
            d = c;
            sd = sc;
            c = b - r * (b - a);
            sc = s(c)?;
        } else {
            a = c;
            c = d;
            sc = sd;
            d = a + r * (b - a);
            sd = s(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, s(x)?))
}

/// Point between `outside` (below `level`) and `inside` (above) where the
/// density crosses `level`.
fn bisect_level(
    s: &dyn Fn(f64) -> Result<f64>,
    level: f64,
    mut outside: f64,
    mut inside: f64,
) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (outside + inside);
        if (inside - outside).abs() <= 1e-12 * mid.abs().max((inside - outside).abs() * 1e-3) {
            break;
        }
        if s(mid)? < level {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    Ok(0.5 * (outside + inside))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhysicalParams;

    fn decoupled() -> RegressionSystem {
        let mut p = PhysicalParams::reference(300.0, 60.0, 1000);
        p.g = 0.0;
        let model = Model::new(p).unwrap();
        let mut st = CumulantState::seeded(0.0);
        st.n_phot = model.occ.n1;
        regression_from_state(&st, &model)
    }

    #[test]
    fn decoupled_laplace_value() {
        let sys = decoupled();
        let s = Complex64::new(1e5, 3e6);
        let v = sys.laplace_value(s).unwrap();
        let exact = sys.initial[0] / (s + sys.kappa);
        assert!((v - exact).norm() <= 1e-14 * exact.norm());
    }

    #[test]
    fn empty_cavity_linewidth_is_one_megahertz() {
        let sys = decoupled();
        assert!((pole_linewidth(&sys) - 1e6).abs() < 1e-6);
        let grid = default_grid(&sys, 20.0, 801);
        let spec = emission_spectrum(&sys, &grid).unwrap();
        assert!((spec.fwhm - 1e6).abs() < 1e-3, "{}", spec.fwhm);
        assert!(spec.peak.abs() < 1.0);
    }

    #[test]
    fn pole_is_reported() {
        let sys = decoupled();
        let err = sys.laplace_value(Complex64::from(-sys.kappa)).unwrap_err();
        assert!(matches!(err, Error::Pole { .. }));
    }

    #[test]
    fn peak_on_edge_is_a_range_error() {
        let sys = decoupled();
        let grid: Vec<f64> = (0..50).map(|i| 1e6 + 1e4 * i as f64).collect();
        assert!(matches!(
            emission_spectrum(&sys, &grid),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn csv_has_header() {
        let sys = decoupled();
        let spec = emission_spectrum(&sys, &default_grid(&sys, 10.0, 101)).unwrap();
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# fwhm_hz"));
        assert_eq!(text.lines().count(), 3 + 101);
    }
}
