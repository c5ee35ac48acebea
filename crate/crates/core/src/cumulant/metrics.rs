use super::state::CumulantState;
use crate::error::{Error, Result};
use crate::model::Model;

/// Smallest `p_I2` for which the hot-well ratio is reported.
pub const RATIO_GUARD: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationRatio {
    /// `p_I3 / p_I2` in the coupled system.
    pub ratio: f64,
    /// `n2 / (1 + n2)`, the value with the second well detached.
    pub uncoupled: f64,
}

pub fn occupation_ratio(state: &CumulantState, model: &Model) -> Result<OccupationRatio> {
    if !(state.p_i2 >= RATIO_GUARD) {
        return Err(Error::Domain(format!(
            "p_I2 = {:e} below {RATIO_GUARD:e}",
            state.p_i2
        )));
    }
    let n2 = model.occ.n2;
    Ok(OccupationRatio {
        ratio: state.p_i3 / state.p_i2,
        uncoupled: n2 / (1.0 + n2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFlux {
    /// `2 kappa n_phot`, photons per second leaving through the mirror.
    pub total: f64,
    /// `2 kappa (n_phot - n1)`, the part above what the mirror bath feeds back.
    pub net: f64,
}

pub fn output_flux(state: &CumulantState, model: &Model) -> OutputFlux {
    let k2 = 2.0 * model.params.kappa;
    OutputFlux {
        total: k2 * state.n_phot,
        net: k2 * (state.n_phot - model.occ.n1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhysicalParams;

    #[test]
    fn zero_photons_zero_flux() {
        let model = Model::new(PhysicalParams::reference(300.0, 0.0, 10)).unwrap();
        let s = CumulantState::seeded(0.0);
        let f = output_flux(&s, &model);
        assert_eq!(f.total, 0.0);
        assert_eq!(f.net, 0.0);
    }

    #[test]
    fn ratio_guard() {
        let model = Model::new(PhysicalParams::reference(300.0, 0.1, 10)).unwrap();
        let mut s = CumulantState::seeded(0.0);
        s.p_i2 = 0.0;
        assert!(occupation_ratio(&s, &model).is_err());
    }

    #[test]
    fn ratio_and_baseline() {
        let model = Model::new(PhysicalParams::reference(300.0, 0.1, 10)).unwrap();
        let mut s = CumulantState::seeded(0.0);
        s.p_i2 = 0.5;
        s.p_i3 = 0.1;
        let r = occupation_ratio(&s, &model).unwrap();
        assert!((r.ratio - 0.2).abs() < 1e-15);
        let n2 = model.occ.n2;
        assert!((r.uncoupled - n2 / (1.0 + n2)).abs() < 1e-15);
    }
}
