use super::params::{PhysicalParams, Variant};
use super::thermal::ThermalOccupations;

/// Lindblad coefficients of every dissipative channel, each multiplying
/// `2 A rho A^dag - A^dag A rho - rho A^dag A`. Population moves at twice
/// the listed rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTable {
    /// `kappa (n1 + 1)`, jump operator `a`.
    pub cavity_loss: f64,
    /// `kappa n1`, jump operator `a^dag`.
    pub cavity_gain: f64,
    pub u_to_l: f64,
    pub l_to_u: f64,
    pub i3_to_i2: f64,
    pub i2_to_i3: f64,
    pub i4_to_u: f64,
    pub u_to_i4: f64,
    pub l_to_i1: f64,
    pub i1_to_l: f64,
}

impl RateTable {
    /// Rates for the standard (downhill injection) level ordering.
    pub fn standard(params: &PhysicalParams, occ: &ThermalOccupations) -> Self {
        let [g1, g2, g3, g4] = params.gamma;
        RateTable {
            cavity_loss: params.kappa * (occ.n1 + 1.0),
            cavity_gain: params.kappa * occ.n1,
            u_to_l: g1 * (occ.n1 + 1.0),
            l_to_u: g1 * occ.n1,
            i3_to_i2: g2 * (occ.n2 + 1.0),
            i2_to_i3: g2 * occ.n2,
            i4_to_u: g3 * (occ.n3 + 1.0),
            u_to_i4: g3 * occ.n3,
            l_to_i1: g4 * (occ.n4 + 1.0),
            i1_to_l: g4 * occ.n4,
        }
    }

    /// Exchanges the two directions of the `I4 <-> u` channel.
    pub fn swap_injection(mut self) -> Self {
        std::mem::swap(&mut self.i4_to_u, &mut self.u_to_i4);
        self
    }

    /// Net field amplitude damping, `kappa`.
    pub fn field_damping(&self) -> f64 {
        self.cavity_loss - self.cavity_gain
    }

    pub fn out_of_u(&self) -> f64 {
        self.u_to_l + self.u_to_i4
    }

    pub fn out_of_l(&self) -> f64 {
        self.l_to_u + self.l_to_i1
    }

    pub fn out_of_i1(&self) -> f64 {
        self.i1_to_l
    }

    pub fn out_of_i2(&self) -> f64 {
        self.i2_to_i3
    }

    pub fn out_of_i3(&self) -> f64 {
        self.i3_to_i2
    }

    pub fn out_of_i4(&self) -> f64 {
        self.i4_to_u
    }

    /// Dephasing rate of the `u-l` dipole, `Gamma`.
    pub fn dipole_damping(&self) -> f64 {
        self.out_of_u() + self.out_of_l()
    }

    pub fn all(&self) -> [f64; 10] {
        [
            self.cavity_loss,
            self.cavity_gain,
            self.u_to_l,
            self.l_to_u,
            self.i3_to_i2,
            self.i2_to_i3,
            self.i4_to_u,
            self.u_to_i4,
            self.l_to_i1,
            self.i1_to_l,
        ]
    }
}

/// Effective rate table for the configured variant: identity for
/// [`Variant::Standard`], `I4 <-> u` directions exchanged otherwise.
pub fn apply_variant(variant: Variant, table: RateTable) -> RateTable {
    match variant {
        Variant::Standard => table,
        Variant::AbsorptiveInjection => table.swap_injection(),
    }
}

pub fn rate_table(params: &PhysicalParams, occ: &ThermalOccupations) -> RateTable {
    apply_variant(params.variant, RateTable::standard(params, occ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(n3: f64) -> ThermalOccupations {
        ThermalOccupations {
            n1: 0.01,
            n2: 0.3,
            n3,
            n4: 0.02,
        }
    }

    #[test]
    fn standard_is_identity() {
        let p = PhysicalParams::reference(300.0, 0.1, 1);
        let base = RateTable::standard(&p, &occ(0.5));
        assert_eq!(apply_variant(Variant::Standard, base), base);
    }

    #[test]
    fn zero_occupation_swap() {
        let p = PhysicalParams::reference_absorptive(300.0, 0.0, 1);
        let t = rate_table(&p, &occ(0.0));
        assert_eq!(t.i4_to_u, 0.0);
        assert_eq!(t.u_to_i4, p.gamma[2]);
    }

    #[test]
    fn swap_is_an_involution_touching_only_injection() {
        let p = PhysicalParams::reference(300.0, 0.1, 1);
        let base = RateTable::standard(&p, &occ(0.7));
        let once = base.swap_injection();
        assert_eq!(once.swap_injection(), base);
        let (a, b) = (base.all(), once.all());
        for i in 0..10 {
            if i == 6 || i == 7 {
                continue;
            }
            assert_eq!(a[i], b[i]);
        }
        assert_eq!(once.i4_to_u, base.u_to_i4);
    }

    #[test]
    fn gamma_matches_dipole_damping() {
        let p = PhysicalParams::reference(300.0, 0.1, 1);
        let o = occ(0.4);
        let t = RateTable::standard(&p, &o);
        let [g1, _, g3, g4] = p.gamma;
        let expect = g3 * o.n3 + g1 * (2.0 * o.n1 + 1.0) + g4 * (o.n4 + 1.0);
        assert!((t.dipole_damping() - expect).abs() < 1e-9 * expect);
        assert!((t.field_damping() - p.kappa).abs() < 1e-9 * p.kappa);
    }
}
