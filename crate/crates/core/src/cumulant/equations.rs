//! Closed second-order moment equations.
//!
//! Every line follows from `d<O>/dt = i<[H, O]> + sum_c r_c <2 A_c^dag O A_c
//! - A_c^dag A_c O - O A_c^dag A_c>` with third-order moments factorized
//! under phase invariance (`<a> = <|u><l|> = 0`) and identical structures.
//! See `docs/moment-equations.md` for the derivation.

use num_complex::Complex64;

use super::state::{idx::*, CumulantState, StateMatrix, StateVector};
use crate::error::{Error, Result};
use crate::model::{Model, RateTable};

/// Coefficients of the moment equations for one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct MomentEquations {
    pub rates: RateTable,
    pub g: f64,
    pub n_structures: f64,
    pub delta_u: f64,
    /// `e_I2 - e_I1`.
    pub detuning_12: f64,
    /// `e_I4 - e_I3`.
    pub detuning_34: f64,
    pub j1: Complex64,
    pub j2: Complex64,
    /// When false the `(N - 1) <l u u l>` feedback into `<a |u><l|>` is
    /// dropped, leaving independent emitters.
    pub cooperative: bool,
}

impl MomentEquations {
    pub fn new(model: &Model) -> Self {
        MomentEquations {
            rates: model.rates,
            g: model.params.g,
            n_structures: model.params.n(),
            delta_u: model.params.delta_u,
            detuning_12: model.scheme.detuning_12(),
            detuning_34: model.scheme.detuning_34(),
            j1: model.params.j1,
            j2: model.params.j2,
            cooperative: true,
        }
    }

    fn kappa(&self) -> f64 {
        self.rates.field_damping()
    }

    fn big_gamma(&self) -> f64 {
        self.rates.dipole_damping()
    }

    fn partners(&self) -> f64 {
        if self.cooperative {
            self.n_structures - 1.0
        } else {
            0.0
        }
    }

    pub fn rhs(&self, y: &StateVector) -> StateVector {
        let r = &self.rates;
        let (g, n_s) = (self.g, self.n_structures);
        let (p1, p2, p3, p4, pu, pl) = (y[P_I1], y[P_I2], y[P_I3], y[P_I4], y[P_U], y[P_L]);
        let n = y[N_PHOT];
        let (ar, ai) = (y[AUL_RE], y[AUL_IM]);
        let c = y[LUUL];
        let (x12r, x12i, x34r, x34i) = (y[I12_RE], y[I12_IM], y[I34_RE], y[I34_IM]);

        let tun12 = 2.0 * (self.j2.re * x12i - self.j2.im * x12r);
        let tun34 = 2.0 * (self.j1.re * x34i - self.j1.im * x34r);
        let field = 2.0 * g * ai;
        let kappa = self.kappa();
        let gam = self.big_gamma();
        let gam12 = r.out_of_i1() + r.out_of_i2();
        let gam34 = r.out_of_i3() + r.out_of_i4();

        let mut d = StateVector::zeros();
        d[P_I1] = tun12 + 2.0 * r.l_to_i1 * pl - 2.0 * r.i1_to_l * p1;
        d[P_I2] = -tun12 + 2.0 * r.i3_to_i2 * p3 - 2.0 * r.i2_to_i3 * p2;
        d[P_I3] = tun34 - 2.0 * r.i3_to_i2 * p3 + 2.0 * r.i2_to_i3 * p2;
        d[P_I4] = -tun34 - 2.0 * r.i4_to_u * p4 + 2.0 * r.u_to_i4 * pu;
        d[P_U] = field - 2.0 * r.out_of_u() * pu + 2.0 * r.l_to_u * pl + 2.0 * r.i4_to_u * p4;
        d[P_L] = -field + 2.0 * r.u_to_l * pu - 2.0 * r.out_of_l() * pl + 2.0 * r.i1_to_l * p1;
        d[N_PHOT] = -2.0 * kappa * n + 2.0 * r.cavity_gain - 2.0 * g * n_s * ai;
        let drive = (1.0 + n) * pu - n * pl;
        d[AUL_RE] = -self.delta_u * ai - (kappa + gam) * ar;
        d[AUL_IM] = self.delta_u * ar - g * drive - (kappa + gam) * ai - g * self.partners() * c;
        d[LUUL] = -2.0 * g * ai * (pu - pl) - 2.0 * gam * c;
        let (dj12, dj34) = (p2 - p1, p4 - p3);
        d[I12_RE] = self.detuning_12 * x12i - self.j2.im * dj12 - gam12 * x12r;
        d[I12_IM] = -self.detuning_12 * x12r + self.j2.re * dj12 - gam12 * x12i;
        d[I34_RE] = self.detuning_34 * x34i - self.j1.im * dj34 - gam34 * x34r;
        d[I34_IM] = -self.detuning_34 * x34r + self.j1.re * dj34 - gam34 * x34i;
        d
    }

    /// Sum of the absolute values of the individual terms of each equation.
    /// Dividing the right-hand side by this gives a scale-free residual.
    pub fn term_magnitudes(&self, y: &StateVector) -> StateVector {
        let r = &self.rates;
        let (g, n_s) = (self.g, self.n_structures);
        let a = |v: f64| v.abs();
        let (p1, p2, p3, p4, pu, pl) = (y[P_I1], y[P_I2], y[P_I3], y[P_I4], y[P_U], y[P_L]);
        let n = y[N_PHOT];
        let (ar, ai) = (y[AUL_RE], y[AUL_IM]);
        let c = y[LUUL];
        let (x12r, x12i, x34r, x34i) = (y[I12_RE], y[I12_IM], y[I34_RE], y[I34_IM]);
        let tun12 = 2.0 * (a(self.j2.re * x12i) + a(self.j2.im * x12r));
        let tun34 = 2.0 * (a(self.j1.re * x34i) + a(self.j1.im * x34r));
        let field = 2.0 * a(g * ai);
        let kappa = self.kappa();
        let gam = self.big_gamma();
        let gam12 = r.out_of_i1() + r.out_of_i2();
        let gam34 = r.out_of_i3() + r.out_of_i4();
        let mut m = StateVector::zeros();
        m[P_I1] = tun12 + 2.0 * a(r.l_to_i1 * pl) + 2.0 * a(r.i1_to_l * p1);
        m[P_I2] = tun12 + 2.0 * a(r.i3_to_i2 * p3) + 2.0 * a(r.i2_to_i3 * p2);
        m[P_I3] = tun34 + 2.0 * a(r.i3_to_i2 * p3) + 2.0 * a(r.i2_to_i3 * p2);
        m[P_I4] = tun34 + 2.0 * a(r.i4_to_u * p4) + 2.0 * a(r.u_to_i4 * pu);
        m[P_U] =
            field + 2.0 * a(r.out_of_u() * pu) + 2.0 * a(r.l_to_u * pl) + 2.0 * a(r.i4_to_u * p4);
        m[P_L] =
            field + 2.0 * a(r.u_to_l * pu) + 2.0 * a(r.out_of_l() * pl) + 2.0 * a(r.i1_to_l * p1);
        m[N_PHOT] = 2.0 * a(kappa * n) + 2.0 * r.cavity_gain + 2.0 * a(g * n_s * ai);
        let drive = a(pu) + a(n * pu) + a(n * pl);
        m[AUL_RE] = a(self.delta_u * ai) + (kappa + gam) * a(ar);
        m[AUL_IM] =
            a(self.delta_u * ar) + g * drive + (kappa + gam) * a(ai) + g * self.partners() * a(c);
        m[LUUL] = 2.0 * a(g * ai) * (a(pu) + a(pl)) + 2.0 * gam * a(c);
        let (dj12, dj34) = (a(p2) + a(p1), a(p4) + a(p3));
        m[I12_RE] = a(self.detuning_12 * x12i) + a(self.j2.im) * dj12 + gam12 * a(x12r);
        m[I12_IM] = a(self.detuning_12 * x12r) + a(self.j2.re) * dj12 + gam12 * a(x12i);
        m[I34_RE] = a(self.detuning_34 * x34i) + a(self.j1.im) * dj34 + gam34 * a(x34r);
        m[I34_IM] = a(self.detuning_34 * x34r) + a(self.j1.re) * dj34 + gam34 * a(x34i);
        m
    }

    pub fn jacobian(&self, y: &StateVector) -> StateMatrix {
        let r = &self.rates;
        let (g, n_s) = (self.g, self.n_structures);
        let (pu, pl, n, ai) = (y[P_U], y[P_L], y[N_PHOT], y[AUL_IM]);
        let kappa = self.kappa();
        let gam = self.big_gamma();
        let gam12 = r.out_of_i1() + r.out_of_i2();
        let gam34 = r.out_of_i3() + r.out_of_i4();
        let (j1, j2) = (self.j1, self.j2);

        let mut jac = StateMatrix::zeros();
        let mut set = |i: usize, j: usize, v: f64| jac[(i, j)] += v;

        // tunneling terms 2 (Re J x_im - Im J x_re)
        set(P_I1, I12_IM, 2.0 * j2.re);
        set(P_I1, I12_RE, -2.0 * j2.im);
        set(P_I2, I12_IM, -2.0 * j2.re);
        set(P_I2, I12_RE, 2.0 * j2.im);
        set(P_I3, I34_IM, 2.0 * j1.re);
        set(P_I3, I34_RE, -2.0 * j1.im);
        set(P_I4, I34_IM, -2.0 * j1.re);
        set(P_I4, I34_RE, 2.0 * j1.im);

        set(P_I1, P_L, 2.0 * r.l_to_i1);
        set(P_I1, P_I1, -2.0 * r.i1_to_l);
        set(P_I2, P_I3, 2.0 * r.i3_to_i2);
        set(P_I2, P_I2, -2.0 * r.i2_to_i3);
        set(P_I3, P_I3, -2.0 * r.i3_to_i2);
        set(P_I3, P_I2, 2.0 * r.i2_to_i3);
        set(P_I4, P_I4, -2.0 * r.i4_to_u);
        set(P_I4, P_U, 2.0 * r.u_to_i4);

        set(P_U, AUL_IM, 2.0 * g);
        set(P_U, P_U, -2.0 * r.out_of_u());
        set(P_U, P_L, 2.0 * r.l_to_u);
        set(P_U, P_I4, 2.0 * r.i4_to_u);
        set(P_L, AUL_IM, -2.0 * g);
        set(P_L, P_U, 2.0 * r.u_to_l);
        set(P_L, P_L, -2.0 * r.out_of_l());
        set(P_L, P_I1, 2.0 * r.i1_to_l);

        set(N_PHOT, N_PHOT, -2.0 * kappa);
        set(N_PHOT, AUL_IM, -2.0 * g * n_s);

        set(AUL_RE, AUL_IM, -self.delta_u);
        set(AUL_RE, AUL_RE, -(kappa + gam));
        set(AUL_IM, AUL_RE, self.delta_u);
        set(AUL_IM, P_U, -g * (1.0 + n));
        set(AUL_IM, P_L, g * n);
        set(AUL_IM, N_PHOT, -g * (pu - pl));
        set(AUL_IM, AUL_IM, -(kappa + gam));
        set(AUL_IM, LUUL, -g * self.partners());

        set(LUUL, AUL_IM, -2.0 * g * (pu - pl));
        set(LUUL, P_U, -2.0 * g * ai);
        set(LUUL, P_L, 2.0 * g * ai);
        set(LUUL, LUUL, -2.0 * gam);

        set(I12_RE, I12_IM, self.detuning_12);
        set(I12_RE, P_I2, -j2.im);
        set(I12_RE, P_I1, j2.im);
        set(I12_RE, I12_RE, -gam12);
        set(I12_IM, I12_RE, -self.detuning_12);
        set(I12_IM, P_I2, j2.re);
        set(I12_IM, P_I1, -j2.re);
        set(I12_IM, I12_IM, -gam12);

        set(I34_RE, I34_IM, self.detuning_34);
        set(I34_RE, P_I4, -j1.im);
        set(I34_RE, P_I3, j1.im);
        set(I34_RE, I34_RE, -gam34);
        set(I34_IM, I34_RE, -self.detuning_34);
        set(I34_IM, P_I4, j1.re);
        set(I34_IM, P_I3, -j1.re);
        set(I34_IM, I34_IM, -gam34);
        jac
    }

    /// Imaginary part of the cross-structure correlation's drive, evaluated
    /// in complex arithmetic. Vanishes identically for real initial data.
    pub fn luul_imaginary_drive(&self, y: &StateVector) -> f64 {
        let a = Complex64::new(y[AUL_RE], y[AUL_IM]);
        let i = Complex64::i();
        let drive = -i * self.g * (a.conj() - a) * (y[P_U] - y[P_L])
            - 2.0 * self.big_gamma() * Complex64::new(y[LUUL], 0.0);
        drive.im
    }
}

/// Time derivative of `state` at the parameter point described by `model`.
pub fn rhs(state: &CumulantState, model: &Model) -> Result<CumulantState> {
    if !state.is_finite() {
        return Err(Error::NonFinite("cumulant state".into()));
    }
    let eq = MomentEquations::new(model);
    let d = eq.rhs(&state.to_vector());
    Ok(CumulantState::from_vector(&d))
}
