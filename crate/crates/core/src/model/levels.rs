use crate::error::{Error, Result};

use super::params::{PhysicalParams, Variant};

/// Relative tolerance on `w1 + w3 = w2 - w4`.
pub const CLOSURE_TOLERANCE: f64 = 1e-12;

/// Absolute level energies (angular frequency, rad/s) referenced to `l`, and
/// the effective bath-coupled transition frequencies.
///
/// For [`Variant::AbsorptiveInjection`] `e_u` is the raised upper level and
/// `transitions[0]`, `transitions[2]` follow it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelScheme {
    pub e_l: f64,
    pub e_u: f64,
    pub e_i1: f64,
    pub e_i2: f64,
    pub e_i3: f64,
    pub e_i4: f64,
    /// `[u-l, I3-I2, |I4-u|, l-I1]`.
    pub transitions: [f64; 4],
}

impl LevelScheme {
    /// The same scheme with every energy shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> LevelScheme {
        LevelScheme {
            e_l: self.e_l + offset,
            e_u: self.e_u + offset,
            e_i1: self.e_i1 + offset,
            e_i2: self.e_i2 + offset,
            e_i3: self.e_i3 + offset,
            e_i4: self.e_i4 + offset,
            transitions: self.transitions,
        }
    }

    /// Transition frequencies recomputed from the absolute energies.
    pub fn energy_differences(&self) -> [f64; 4] {
        [
            self.e_u - self.e_l,
            self.e_i3 - self.e_i2,
            (self.e_i4 - self.e_u).abs(),
            self.e_l - self.e_i1,
        ]
    }

    /// Detuning of the `I3 <-> I4` tunneling pair, `e_I4 - e_I3`.
    pub fn detuning_34(&self) -> f64 {
        self.e_i4 - self.e_i3
    }

    /// Detuning of the `I1 <-> I2` tunneling pair, `e_I2 - e_I1`.
    pub fn detuning_12(&self) -> f64 {
        self.e_i2 - self.e_i1
    }
}

pub fn build_level_scheme(params: &PhysicalParams) -> Result<LevelScheme> {
    let [w1, w2, w3, w4] = params.omega;
    let residual = (w1 + w3 - w2 + w4).abs();
    let scale = w1
        .abs()
        .max(w2.abs())
        .max(w3.abs())
        .max(w4.abs())
        .max(f64::MIN_POSITIVE);
    if residual > CLOSURE_TOLERANCE * scale {
        return Err(Error::InconsistentLevels { residual });
    }
    let e_l = 0.0;
    let e_u_base = w1;
    let e_i1 = -w4;
    let e_i2 = e_i1;
    let e_i3 = e_i2 + w2;
    let e_i4 = e_u_base + w3;
    let (e_u, transitions) = match params.variant {
        Variant::Standard => (e_u_base, [w1, w2, w3, w4]),
        Variant::AbsorptiveInjection => {
            let e_u = e_u_base + params.omega_u_shift;
            (e_u, [e_u - e_l, w2, (e_u - e_i4).abs(), w4])
        }
    };
    Ok(LevelScheme {
        e_l,
        e_u,
        e_i1,
        e_i2,
        e_i3,
        e_i4,
        transitions,
    })
}
