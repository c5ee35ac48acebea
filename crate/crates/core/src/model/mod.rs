//! Physical data model: parameters, level scheme, bath occupations and the
//! dissipative rate table.

mod levels;
mod params;
mod rates;
mod thermal;

pub use levels::{build_level_scheme, LevelScheme, CLOSURE_TOLERANCE};
pub use params::{PhysicalParams, Variant, DEFAULT_TUNNELING_PER_GAMMA2};
pub use rates::{apply_variant, rate_table, RateTable};
pub use thermal::{bose_einstein, thermal_occupations, ThermalOccupations};

use crate::error::Result;

/// Parameters together with everything derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: PhysicalParams,
    pub scheme: LevelScheme,
    pub occ: ThermalOccupations,
    pub rates: RateTable,
}

impl Model {
    pub fn new(params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let scheme = build_level_scheme(&params)?;
        let occ = thermal_occupations(&scheme, &params)?;
        let rates = rate_table(&params, &occ);
        Ok(Model {
            params,
            scheme,
            occ,
            rates,
        })
    }
}
