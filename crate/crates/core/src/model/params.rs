use num_complex::Complex64;

use crate::constants::angular;
use crate::error::{Error, Result};

/// Which pump scheme the second well implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Injection `I4 -> u` is a downhill (phonon-emitting) step.
    #[default]
    Standard,
    /// The upper laser level sits above `I4`, so injection needs a thermal
    /// quantum to be absorbed. The `I4 <-> u` rates are swapped.
    AbsorptiveInjection,
}

/// Complete set of model constants. All rates and frequencies are angular
/// (rad/s); temperatures in kelvin.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Cavity field decay rate.
    pub kappa: f64,
    /// Single-structure vacuum Rabi coupling on the `u -> l` transition.
    pub g: f64,
    /// Detuning of the upper laser level from the cavity, `w_u - w_m`.
    pub delta_u: f64,
    /// Spontaneous rates of the `u->l`, `I3->I2`, `I4->u`, `l->I1` transitions.
    pub gamma: [f64; 4],
    /// Transition frequencies `w1 = u-l`, `w2 = I3-I2`, `w3 = I4-u`, `w4 = l-I1`.
    pub omega: [f64; 4],
    /// Tunneling `I3 <-> I4`.
    pub j1: Complex64,
    /// Tunneling `I1 <-> I2`.
    pub j2: Complex64,
    pub n_structures: u64,
    /// Hot-well bath temperature.
    pub t1: f64,
    /// Cold-well and mirror bath temperature.
    pub t2: f64,
    pub variant: Variant,
    /// Shift of the upper laser level used by [`Variant::AbsorptiveInjection`].
    pub omega_u_shift: f64,
}

/// Default tunneling strength relative to the hot-well rate `gamma2`.
pub const DEFAULT_TUNNELING_PER_GAMMA2: f64 = 10.0;

impl PhysicalParams {
    /// The fixed rate/frequency set of the two-well laser with the given bath
    /// temperatures and number of structures. Tunneling defaults to
    /// `|J1| = |J2| = 10 gamma2`.
    pub fn reference(t1: f64, t2: f64, n_structures: u64) -> Self {
        let kappa = angular(5.0e5);
        let gamma1 = angular(4.0e2);
        let gamma_other = gamma1 * 1.0e2;
        let j = Complex64::new(DEFAULT_TUNNELING_PER_GAMMA2 * gamma_other, 0.0);
        PhysicalParams {
            kappa,
            g: kappa / 3.0 * 1.0e-3,
            delta_u: 0.0,
            gamma: [gamma1, gamma_other, gamma_other, gamma_other],
            omega: [
                angular(7.9e12),
                angular(9.0e12),
                angular(0.1e12),
                angular(1.0e12),
            ],
            j1: j,
            j2: j,
            n_structures,
            t1,
            t2,
            variant: Variant::Standard,
            omega_u_shift: 0.0,
        }
    }

    /// Absorptive-injection variant: `gamma3 = gamma1` and the upper laser
    /// level raised by `2 pi x 0.2 THz`.
    pub fn reference_absorptive(t1: f64, t2: f64, n_structures: u64) -> Self {
        let mut p = Self::reference(t1, t2, n_structures);
        p.gamma[2] = p.gamma[0];
        p.variant = Variant::AbsorptiveInjection;
        p.omega_u_shift = angular(0.2e12);
        p
    }

    pub fn n(&self) -> f64 {
        self.n_structures as f64
    }

    pub fn with_temperatures(mut self, t1: f64, t2: f64) -> Self {
        self.t1 = t1;
        self.t2 = t2;
        self
    }

    pub fn with_structures(mut self, n: u64) -> Self {
        self.n_structures = n;
        self
    }

    pub fn with_tunneling(mut self, j1: f64, j2: f64) -> Self {
        self.j1 = Complex64::new(j1, 0.0);
        self.j2 = Complex64::new(j2, 0.0);
        self
    }

    /// Checks the value-level invariants. The level-closure invariant is
    /// checked by [`crate::model::build_level_scheme`].
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("kappa", self.kappa),
            ("g", self.g),
            ("delta_u", self.delta_u),
            ("t1", self.t1),
            ("t2", self.t2),
            ("omega_u_shift", self.omega_u_shift),
            ("j1", self.j1.re),
            ("j1", self.j1.im),
            ("j2", self.j2.re),
            ("j2", self.j2.im),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::param("kappa", "must be > 0"));
        }
        if self.g < 0.0 {
            return Err(Error::param("g", "must be >= 0"));
        }
        for (i, &gm) in self.gamma.iter().enumerate() {
            if !(gm.is_finite() && gm > 0.0) {
                return Err(Error::param(
                    &format!("gamma{}", i + 1),
                    "must be finite and > 0",
                ));
            }
        }
        for (i, &w) in self.omega.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::param(
                    &format!("omega{}", i + 1),
                    "must be finite and >= 0",
                ));
            }
        }
        if self.n_structures == 0 {
            return Err(Error::param("n_structures", "must be >= 1"));
        }
        if self.t1 < 0.0 {
            return Err(Error::param("t1", "must be >= 0"));
        }
        if self.t2 < 0.0 {
            return Err(Error::param("t2", "must be >= 0"));
        }
        if self.omega_u_shift < 0.0 {
            return Err(Error::param("omega_u_shift", "must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let p = PhysicalParams::reference(300.0, 0.1, 10_000_000);
        assert!((p.kappa / (std::f64::consts::TAU * 5e5) - 1.0).abs() < 1e-15);
        assert!((p.g - p.kappa / 3000.0).abs() < 1e-12);
        assert_eq!(p.gamma[1], p.gamma[0] * 100.0);
        assert_eq!(p.j1.re, 10.0 * p.gamma[1]);
        p.validate().unwrap();
    }

    #[test]
    fn validation_names_the_field() {
        let mut p = PhysicalParams::reference(300.0, 0.1, 1);
        p.n_structures = 0;
        match p.validate() {
            Err(Error::InvalidParam { field, .. }) => assert_eq!(field, "n_structures"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = PhysicalParams::reference(300.0, 0.1, 1);
        p.t2 = -1.0;
        assert!(p.validate().is_err());
        let mut p = PhysicalParams::reference(300.0, 0.1, 1);
        p.gamma[3] = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn absorptive_reference() {
        let p = PhysicalParams::reference_absorptive(400.0, 2.0, 10_000_000);
        assert_eq!(p.gamma[2], p.gamma[0]);
        assert_eq!(p.variant, Variant::AbsorptiveInjection);
        assert!((p.omega_u_shift - angular(0.2e12)).abs() < 1.0);
    }
}
