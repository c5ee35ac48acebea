use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

/// Number of real components in the packed moment vector. One of them is
/// slaved to the others by the trace constraint.
pub const DIM: usize = 14;

pub type StateVector = SVector<f64, DIM>;
pub type StateMatrix = SMatrix<f64, DIM, DIM>;

/// Offsets into [`StateVector`].
pub mod idx {
    pub const P_I1: usize = 0;
    pub const P_I2: usize = 1;
    pub const P_I3: usize = 2;
    pub const P_I4: usize = 3;
    pub const P_U: usize = 4;
    pub const P_L: usize = 5;
    pub const N_PHOT: usize = 6;
    pub const AUL_RE: usize = 7;
    pub const AUL_IM: usize = 8;
    pub const LUUL: usize = 9;
    pub const I12_RE: usize = 10;
    pub const I12_IM: usize = 11;
    pub const I34_RE: usize = 12;
    pub const I34_IM: usize = 13;

    pub const POPULATIONS: [usize; 6] = [P_I1, P_I2, P_I3, P_I4, P_U, P_L];
}

/// Column names matching the packed layout.
pub const COMPONENT_NAMES: [&str; DIM] = [
    "p_I1", "p_I2", "p_I3", "p_I4", "p_u", "p_l", "n_phot", "c_aul_re", "c_aul_im", "c_luul",
    "c_I12_re", "c_I12_im", "c_I34_re", "c_I34_im",
];

/// Truncated second-order moments of one representative structure and the
/// cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantState {
    pub p_i1: f64,
    pub p_i2: f64,
    pub p_i3: f64,
    pub p_i4: f64,
    pub p_u: f64,
    pub p_l: f64,
    /// `<a^dag a>`.
    pub n_phot: f64,
    /// `<a |u><l|>`.
    pub c_aul: Complex64,
    /// `<|l_j><u_j| |u_k><l_k|>`, `j != k`.
    pub c_luul: f64,
    /// `<|I1><I2|>`.
    pub c_i12: Complex64,
    /// `<|I3><I4|>`.
    pub c_i34: Complex64,
}

impl CumulantState {
    /// All population in `I2`, empty cavity, no coherences except a seed
    /// cross-structure correlation.
    pub fn seeded(seed_correlation: f64) -> Self {
        CumulantState {
            p_i1: 0.0,
            p_i2: 1.0,
            p_i3: 0.0,
            p_i4: 0.0,
            p_u: 0.0,
            p_l: 0.0,
            n_phot: 0.0,
            c_aul: Complex64::new(0.0, 0.0),
            c_luul: seed_correlation,
            c_i12: Complex64::new(0.0, 0.0),
            c_i34: Complex64::new(0.0, 0.0),
        }
    }

    pub fn populations(&self) -> [f64; 6] {
        [
            self.p_i1, self.p_i2, self.p_i3, self.p_i4, self.p_u, self.p_l,
        ]
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn inversion(&self) -> f64 {
        self.p_u - self.p_l
    }

    pub fn to_vector(&self) -> StateVector {
        let mut v = StateVector::zeros();
        v[idx::P_I1] = self.p_i1;
        v[idx::P_I2] = self.p_i2;
        v[idx::P_I3] = self.p_i3;
        v[idx::P_I4] = self.p_i4;
        v[idx::P_U] = self.p_u;
        v[idx::P_L] = self.p_l;
        v[idx::N_PHOT] = self.n_phot;
        v[idx::AUL_RE] = self.c_aul.re;
        v[idx::AUL_IM] = self.c_aul.im;
        v[idx::LUUL] = self.c_luul;
        v[idx::I12_RE] = self.c_i12.re;
        v[idx::I12_IM] = self.c_i12.im;
        v[idx::I34_RE] = self.c_i34.re;
        v[idx::I34_IM] = self.c_i34.im;
        v
    }

    pub fn from_vector(v: &StateVector) -> Self {
        CumulantState {
            p_i1: v[idx::P_I1],
            p_i2: v[idx::P_I2],
            p_i3: v[idx::P_I3],
            p_i4: v[idx::P_I4],
            p_u: v[idx::P_U],
            p_l: v[idx::P_L],
            n_phot: v[idx::N_PHOT],
            c_aul: Complex64::new(v[idx::AUL_RE], v[idx::AUL_IM]),
            c_luul: v[idx::LUUL],
            c_i12: Complex64::new(v[idx::I12_RE], v[idx::I12_IM]),
            c_i34: Complex64::new(v[idx::I34_RE], v[idx::I34_IM]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_round_trip() {
        let mut s = CumulantState::seeded(1e-6);
        s.c_aul = Complex64::new(0.25, -3.0);
        s.c_i34 = Complex64::new(-1e-3, 2e-3);
        s.n_phot = 42.0;
        assert_eq!(CumulantState::from_vector(&s.to_vector()), s);
        assert_eq!(s.trace(), 1.0);
    }
}
