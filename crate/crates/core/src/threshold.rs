//! Approximate steady-state solutions near the onset of cooperative
//! emission.
//!
//! With the cold bath switched off (`n1 = n3 = n4 = 0`) and the field
//! adiabatically slaved, `<a |u><l|> = -i g N C / kappa`, the cumulant
//! equations reduce to `dC/dt = 2 C [(g^2 N / kappa) D(C) - Gamma]` where the
//! inversion `D = p_u - p_l` is affine in `C`. The bracket has a single root
//! which is the stable steady correlation whenever it is positive.

use nalgebra::{SMatrix, SVector};

use crate::cumulant::{idx, MomentEquations, StateVector};
use crate::error::{Error, Result};
use crate::model::{bose_einstein, Model, PhysicalParams, Variant};

/// Bath occupations below this count as zero for the closed forms.
pub const NEGLIGIBLE_OCCUPATION: f64 = 1e-6;

/// Temperature bracket scanned by the threshold root finders, kelvin.
pub const SCAN_RANGE: (f64, f64) = (0.05, 2000.0);
const SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Structures needed for the onset. Infinite when the pump vanishes.
    pub n_th: f64,
    /// Hot-bath temperature the threshold refers to, kelvin.
    pub t_threshold: f64,
    /// The closed form's assumptions held: negligible cold-bath occupations,
    /// resonant cavity and the standard injection step.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooperativeCorrelation {
    /// Stable steady value of `<|l><u| (x) |u><l|>`; zero below threshold.
    pub value: f64,
    pub valid: bool,
}

fn assumptions_hold(model: &Model) -> bool {
    let o = &model.occ;
    o.n1 < NEGLIGIBLE_OCCUPATION
        && o.n3 < NEGLIGIBLE_OCCUPATION
        && o.n4 < NEGLIGIBLE_OCCUPATION
        && model.params.delta_u == 0.0
        && model.params.variant == Variant::Standard
}

/// Common denominator of the closed forms.
fn den(p: &PhysicalParams, n2: f64) -> f64 {
    let [_, g2, g3, g4] = p.gamma;
    let (a1, a2) = (p.j1.norm_sqr(), p.j2.norm_sqr());
    a2 * (2.0 + 3.0 * n2) * g2 * g3 * (g2 + n2 * g2 + g3) * g4
        + a1 * (n2 * n2 * g2 * g2 * g3 * g4
            + 2.0 * a2 * ((g2 + g3) * g4 + n2 * g2 * (g3 + 2.0 * g4)))
}

/// Closed-form threshold number of structures for pump occupation `n2`.
pub fn n_threshold_closed(p: &PhysicalParams, n2: f64) -> Result<f64> {
    let [g1, g2, g3, g4] = p.gamma;
    if g4 <= g1 {
        return Err(Error::NoThreshold(format!(
            "no threshold in this rate ordering (gamma4 = {g4:.6e} <= gamma1 = {g1:.6e})"
        )));
    }
    let (a1, a2) = (p.j1.norm_sqr(), p.j2.norm_sqr());
    let num = (g1 + g4)
        * p.kappa
        * (a2 * (2.0 + 3.0 * n2) * g1 * g2 * g3 * (g2 + n2 * g2 + g3) * g4
            + a1 * (n2 * n2 * g1 * g2 * g2 * g3 * g4
                + a2 * (2.0 * g1 * (g2 + g3) * g4
                    + n2 * g2 * (g1 * g3 + 4.0 * g1 * g4 + g3 * g4))));
    let denom = p.g * p.g * n2 * g2 * g3 * (g4 - g1) * a1 * a2;
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / denom)
}

/// Closed-form root of the bracketed factor. May be negative.
pub fn correlation_root_closed(p: &PhysicalParams, n2: f64) -> f64 {
    let [g1, g2, g3, g4] = p.gamma;
    let (k, g, n) = (p.kappa, p.g, p.n());
    let d = den(p, n2);
    let a12 = p.j1.norm_sqr() * p.j2.norm_sqr();
    let top = (g1 + g4) * g1 * k * k * d
        + a12 * n2 * g2 * g3 * (g1 - g4) * k * (g * g * n - (g1 + g4) * k);
    -top / (g.powi(4) * n * n * d)
}

/// Stable steady cooperative correlation from the closed form.
pub fn cooperative_correlation_st(model: &Model) -> CooperativeCorrelation {
    let p = &model.params;
    let valid = assumptions_hold(model);
    if p.g == 0.0 || p.n() < 2.0 {
        return CooperativeCorrelation { value: 0.0, valid };
    }
    let root = correlation_root_closed(p, model.occ.n2);
    CooperativeCorrelation {
        value: root.max(0.0),
        valid,
    }
}

/// Closed-form `N_th` at hot-bath temperature `t1`.
pub fn n_threshold(params: &PhysicalParams, t1: f64) -> Result<ThresholdResult> {
    let n2 = bose_einstein(params.omega[1], t1)?;
    let n_th = n_threshold_closed(params, n2)?;
    let model = Model::new(params.clone().with_temperatures(t1, params.t2))?;
    Ok(ThresholdResult {
        n_th,
        t_threshold: t1,
        valid: assumptions_hold(&model),
    })
}

/// Hot-bath temperature at which the closed-form `N_th` equals
/// `n_structures`.
pub fn t1_threshold(params: &PhysicalParams, n_structures: f64) -> Result<f64> {
    let f = |t: f64| -> Result<f64> {
        let n2 = bose_einstein(params.omega[1], t)?;
        Ok(n_threshold_closed(params, n2)?.ln() - n_structures.ln())
    };
    let grid = log_grid(SCAN_RANGE.0, SCAN_RANGE.1, SCAN_POINTS);
    let mut prev = f(grid[0])?;
    for w in grid.windows(2) {
        let next = f(w[1])?;
        if next > prev && next.is_finite() && prev.is_finite() {
            return Err(Error::ThresholdOutOfRange(format!(
                "N_th(T1) is not decreasing near T1 = {:.4} K",
                w[1]
            )));
        }
        if prev > 0.0 && next <= 0.0 {
            return bisect(&f, w[0], w[1]);
        }
        prev = next;
    }
    Err(Error::ThresholdOutOfRange(format!(
        "N = {n_structures:.4e} not reached for T1 in [{}, {}] K",
        SCAN_RANGE.0, SCAN_RANGE.1
    )))
}

/// Linear steady state of the structure variables at fixed cooperative
/// correlation, with the field slaved as `Im <a |u><l|> = -g N C / kappa`.
/// Uses the complete rate table, so bath occupations and the injection
/// variant are retained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedModel {
    /// `D(C) = inversion0 + inversion_slope * C`.
    pub inversion0: f64,
    pub inversion_slope: f64,
    /// `g^2 / kappa`.
    pub gain_per_structure: f64,
    pub structures: f64,
    /// `Gamma`, the decay of the correlation without gain.
    pub loss: f64,
}

const STRUCT: [usize; 10] = [
    idx::P_I1,
    idx::P_I2,
    idx::P_I3,
    idx::P_I4,
    idx::P_U,
    idx::P_L,
    idx::I12_RE,
    idx::I12_IM,
    idx::I34_RE,
    idx::I34_IM,
];

impl ReducedModel {
    pub fn new(model: &Model) -> Result<Self> {
        let eq = MomentEquations::new(model);
        let p = &model.params;
        let kappa = model.rates.field_damping();
        let inv = |c: f64| -> Result<f64> {
            let mut base = StateVector::zeros();
            base[idx::AUL_IM] = -p.g * p.n() * c / kappa;
            let f0 = eq.rhs(&base);
            let jac = eq.jacobian(&base);
            let mut m = SMatrix::<f64, 10, 10>::from_fn(|i, j| jac[(STRUCT[i], STRUCT[j])]);
            let mut b = SVector::<f64, 10>::from_fn(|i, _| -f0[STRUCT[i]]);
            // Trace row replaces the `p_I2` balance.
            for j in 0..10 {
                m[(1, j)] = if j < 6 { 1.0 } else { 0.0 };
            }
            b[1] = 1.0;
            let x = m.lu().solve(&b).ok_or_else(|| {
                Error::NoThreshold("reduced structure equations are singular".into())
            })?;
            Ok(x[4] - x[5])
        };
        let d0 = inv(0.0)?;
        let d1 = inv(1.0)? - d0;
        Ok(ReducedModel {
            inversion0: d0,
            inversion_slope: d1,
            gain_per_structure: p.g * p.g / kappa,
            structures: p.n(),
            loss: model.rates.dipole_damping(),
        })
    }

    /// Structures needed for net gain at vanishing correlation.
    pub fn n_threshold(&self) -> f64 {
        if self.inversion0 <= 0.0 || self.gain_per_structure == 0.0 {
            return f64::INFINITY;
        }
        self.loss / (self.gain_per_structure * self.inversion0)
    }

    /// Root of the bracket; positive above threshold.
    pub fn correlation_root(&self) -> f64 {
        let gain = self.gain_per_structure * self.structures;
        if gain == 0.0 {
            return 0.0;
        }
        (self.loss / gain - self.inversion0) / self.inversion_slope
    }

    /// Linearized rate of `dC/dt` about `c`; negative means stable.
    pub fn linearized_rate(&self, c: f64) -> f64 {
        let gain = self.gain_per_structure * self.structures;
        let d = self.inversion0 + self.inversion_slope * c;
        2.0 * (gain * d - self.loss) + 2.0 * c * gain * self.inversion_slope
    }
}

/// Lowest cold-bath temperature at which the absorptive-injection variant
/// reaches cooperative emission, from the reduced linear model.
pub fn t2_threshold_variant(params: &PhysicalParams, n_structures: f64, t1: f64) -> Result<f64> {
    if params.variant != Variant::AbsorptiveInjection {
        return Err(Error::Domain(
            "T2 threshold requires the absorptive-injection variant".into(),
        ));
    }
    let base = params.clone().with_structures(n_structures as u64);
    let f = |t2: f64| -> Result<f64> {
        let model = Model::new(base.clone().with_temperatures(t1, t2))?;
        let red = ReducedModel::new(&model)?;
        Ok(red.n_threshold().ln() - n_structures.ln())
    };
    let grid = log_grid(SCAN_RANGE.0, SCAN_RANGE.1, SCAN_POINTS);
    let mut prev = f(grid[0])?;
    for w in grid.windows(2) {
        let next = f(w[1])?;
        if prev > 0.0 && next <= 0.0 {
            return bisect(&f, w[0], w[1]);
        }
        prev = next;
    }
    Err(Error::NoThreshold(format!(
        "no lasing window for T2 in [{}, {}] K at T1 = {t1} K, N = {n_structures:.4e}",
        SCAN_RANGE.0, SCAN_RANGE.1
    )))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Bisection in log temperature to relative tolerance `1e-6`. `f(lo) > 0`
/// and `f(hi) <= 0` on entry.
fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    while (hi - lo) > 1e-7 * hi {
        let mid = (lo * hi).sqrt();
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
