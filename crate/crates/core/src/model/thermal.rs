use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};

use super::levels::LevelScheme;
use super::params::PhysicalParams;

/// Mean Bose-Einstein occupation `1 / (exp(hbar w / k_B T) - 1)` of a bath
/// mode at angular frequency `omega` (rad/s) and temperature `temperature` (K).
///
/// Exactly zero at `T = 0`; underflows smoothly to zero for `hbar w >> k_B T`.
pub fn bose_einstein(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!(
            "bose_einstein needs omega > 0, got {omega}"
        )));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::Domain(format!(
            "bose_einstein needs temperature >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Thermal occupations of the four bath-coupled transitions.
///
/// `n2` belongs to the hot well (`t1`); the others to the cold well and the
/// mirrors (`t2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOccupations {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
}

impl ThermalOccupations {
    pub fn zero() -> Self {
        ThermalOccupations {
            n1: 0.0,
            n2: 0.0,
            n3: 0.0,
            n4: 0.0,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.n1, self.n2, self.n3, self.n4]
    }
}

pub fn thermal_occupations(
    scheme: &LevelScheme,
    params: &PhysicalParams,
) -> Result<ThermalOccupations> {
    let w = scheme.transitions;
    Ok(ThermalOccupations {
        n1: bose_einstein(w[0], params.t2)?,
        n2: bose_einstein(w[1], params.t1)?,
        n3: bose_einstein(w[2], params.t2)?,
        n4: bose_einstein(w[3], params.t2)?,
    })
}
