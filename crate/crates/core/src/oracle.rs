//! Exact master-equation reference for a single structure.
//!
//! The density matrix lives on `{I1, I2, I3, I4, u, l} (x) {0..=cutoff}`.
//! Every term of the generator conserves the charge `n + [level = u]`
//! difference between the row and column index of `rho`, so the steady
//! state is found in the zero-difference sector and the first-order field
//! correlation in the `-1` sector. Both are small dense problems.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Hessenberg, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::cumulant::{steady_state, CumulantState};
use crate::error::{Error, Result};
use crate::model::{Model, PhysicalParams};
use crate::spectrum::{spectrum_from_density, Spectrum};

pub const DEFAULT_CUTOFF: usize = 6;
/// Largest tolerated population of the top Fock level.
pub const LEAKAGE_LIMIT: f64 = 1e-6;
/// Agreement required between the null-space and integration methods.
pub const METHOD_TOLERANCE: f64 = 1e-8;

pub const LEVEL_NAMES: [&str; 6] = ["I1", "I2", "I3", "I4", "u", "l"];
const I1: usize = 0;
const I2: usize = 1;
const I3: usize = 2;
const I4: usize = 3;
const U: usize = 4;
const L: usize = 5;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const IM: C = C::new(0.0, 1.0);

/// Sparse operator stored by columns: `cols[j]` lists `(i, A_ij)`.
#[derive(Debug, Clone)]
struct SparseOp {
    cols: Vec<Vec<(usize, C)>>,
}

impl SparseOp {
    fn zeros(dim: usize) -> Self {
        SparseOp {
            cols: vec![Vec::new(); dim],
        }
    }

    fn push(&mut self, i: usize, j: usize, v: C) {
        if v != ZERO {
            self.cols[j].push((i, v));
        }
    }

    /// `A^dag A`, which is diagonal for every operator used here.
    fn number_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.cols.len()];
        for (j, col) in self.cols.iter().enumerate() {
            d[j] = col.iter().map(|(_, v)| v.norm_sqr()).sum();
        }
        d
    }

    fn to_dense(&self) -> DMatrix<C> {
        let n = self.cols.len();
        let mut m = DMatrix::zeros(n, n);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Composite basis `level (x) Fock`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Basis {
    pub cutoff: usize,
}

impl Basis {
    pub fn dim(&self) -> usize {
        6 * (self.cutoff + 1)
    }

    pub fn index(&self, level: usize, n: usize) -> usize {
        level * (self.cutoff + 1) + n
    }

    pub fn level(&self, i: usize) -> usize {
        i / (self.cutoff + 1)
    }

    pub fn photons(&self, i: usize) -> usize {
        i % (self.cutoff + 1)
    }

    fn charge(&self, i: usize) -> i64 {
        self.photons(i) as i64 + i64::from(self.level(i) == U)
    }

    fn annihilation(&self) -> SparseOp {
        let mut a = SparseOp::zeros(self.dim());
        for lev in 0..6 {
            for n in 1..=self.cutoff {
                a.push(
                    self.index(lev, n - 1),
                    self.index(lev, n),
                    C::from((n as f64).sqrt()),
                );
            }
        }
        a
    }

    fn creation(&self) -> SparseOp {
        let mut a = SparseOp::zeros(self.dim());
        for lev in 0..6 {
            for n in 0..self.cutoff {
                a.push(
                    self.index(lev, n + 1),
                    self.index(lev, n),
                    C::from(((n + 1) as f64).sqrt()),
                );
            }
        }
        a
    }

    /// `|to><from| (x) 1`.
    fn transition(&self, to: usize, from: usize) -> SparseOp {
        let mut a = SparseOp::zeros(self.dim());
        for n in 0..=self.cutoff {
            a.push(self.index(to, n), self.index(from, n), C::from(1.0));
        }
        a
    }
}

/// The generator `rho -> i [rho, H] + sum_c r_c (2 A rho A^dag - {A^dag A, rho})`
/// for one structure, in the frame rotating at the mode frequency.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub basis: Basis,
    hamiltonian: SparseOp,
    channels: Vec<(f64, SparseOp)>,
    /// `sum_c r_c A_c^dag A_c`, diagonal.
    decay: Vec<f64>,
}

/// Subset of matrix elements `(row, col)` closed under the generator.
#[derive(Debug, Clone)]
pub struct Sector {
    pub charge_difference: i64,
    pub pairs: Vec<(usize, usize)>,
    lookup: Vec<usize>,
    pub generator: DMatrix<C>,
}

impl Sector {
    fn position(&self, dim: usize, i: usize, j: usize) -> Option<usize> {
        let p = self.lookup[i * dim + j];
        (p != usize::MAX).then_some(p)
    }
}

impl Liouvillian {
    pub fn new(model: &Model, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::param("cutoff", "photon cutoff must be >= 1"));
        }
        if model.params.n_structures != 1 {
            return Err(Error::Domain(format!(
                "the exact reference handles one structure, got N = {}",
                model.params.n_structures
            )));
        }
        let basis = Basis { cutoff };
        let dim = basis.dim();
        let p = &model.params;
        let r = &model.rates;

        // Level energies in the rotating frame; each tunneling pair is
        // referred to its lower member so only the pair detunings remain.
        let energy = [
            0.0,
            model.scheme.detuning_12(),
            0.0,
            model.scheme.detuning_34(),
            p.delta_u,
            0.0,
        ];
        let mut h = SparseOp::zeros(dim);
        for (lev, &e) in energy.iter().enumerate() {
            for n in 0..=cutoff {
                let i = basis.index(lev, n);
                h.push(i, i, C::from(e));
            }
        }
        for n in 1..=cutoff {
            // g (a |u><l| + a^dag |l><u|)
            let c = C::from(p.g * (n as f64).sqrt());
            h.push(basis.index(U, n - 1), basis.index(L, n), c);
            h.push(basis.index(L, n), basis.index(U, n - 1), c);
        }
        for n in 0..=cutoff {
            // J1 |I4><I3| + J2 |I2><I1| + h.c.
            h.push(basis.index(I4, n), basis.index(I3, n), p.j1);
            h.push(basis.index(I3, n), basis.index(I4, n), p.j1.conj());
            h.push(basis.index(I2, n), basis.index(I1, n), p.j2);
            h.push(basis.index(I1, n), basis.index(I2, n), p.j2.conj());
        }

        let channels = vec![
            (r.cavity_loss, basis.annihilation()),
            (r.cavity_gain, basis.creation()),
            (r.u_to_l, basis.transition(L, U)),
            (r.l_to_u, basis.transition(U, L)),
            (r.i3_to_i2, basis.transition(I2, I3)),
            (r.i2_to_i3, basis.transition(I3, I2)),
            (r.i4_to_u, basis.transition(U, I4)),
            (r.u_to_i4, basis.transition(I4, U)),
            (r.l_to_i1, basis.transition(I1, L)),
            (r.i1_to_l, basis.transition(L, I1)),
        ];
        let mut decay = vec![0.0; dim];
        for (rate, op) in &channels {
            for (d, m) in decay.iter_mut().zip(op.number_diagonal()) {
                *d += rate * m;
            }
        }
        Ok(Liouvillian {
            basis,
            hamiltonian: h,
            channels,
            decay,
        })
    }

    /// Image of `|i><j|`, delivered entry by entry.
    fn column(&self, i: usize, j: usize, out: &mut dyn FnMut(usize, usize, C)) {
        // i (E H - H E) with H hermitian: (E H)_{i l} = H_{j l} = conj(H_{l j}).
        for &(k, hk) in &self.hamiltonian.cols[i] {
            out(k, j, -IM * hk);
        }
        for &(l, hl) in &self.hamiltonian.cols[j] {
            out(i, l, IM * hl.conj());
        }
        out(i, j, C::from(-(self.decay[i] + self.decay[j])));
        for (rate, op) in &self.channels {
            if *rate == 0.0 {
                continue;
            }
            for &(k, a) in &op.cols[i] {
                for &(l, b) in &op.cols[j] {
                    out(k, l, a * b.conj() * (2.0 * rate));
                }
            }
        }
    }

    /// Full action on a dense density matrix.
    pub fn apply(&self, rho: &DMatrix<C>) -> DMatrix<C> {
        let dim = self.basis.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let x = rho[(i, j)];
                if x == ZERO {
                    continue;
                }
                self.column(i, j, &mut |k, l, v| out[(k, l)] += v * x);
            }
        }
        out
    }

    /// Dense generator on the elements with `charge(row) - charge(col) = delta`.
    pub fn sector(&self, delta: i64) -> Sector {
        let b = self.basis;
        let dim = b.dim();
        let mut pairs = Vec::new();
        let mut lookup = vec![usize::MAX; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                if b.charge(i) - b.charge(j) == delta {
                    lookup[i * dim + j] = pairs.len();
                    pairs.push((i, j));
                }
            }
        }
        let m = pairs.len();
        let mut gen = DMatrix::zeros(m, m);
        for (c, &(i, j)) in pairs.iter().enumerate() {
            self.column(i, j, &mut |k, l, v| {
                let r = lookup[k * dim + l];
                debug_assert!(r != usize::MAX, "generator leaves its sector");
                gen[(r, c)] += v;
            });
        }
        Sector {
            charge_difference: delta,
            pairs,
            lookup,
            generator: gen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    /// Kernel of the sector generator with the trace fixed to one.
    NullSpace,
    /// Propagation to long times with repeatedly squared propagators.
    Integration,
}

/// The thirteen independent single-structure moments shared with the
/// cumulant state. The cross-structure correlation has no counterpart for
/// one structure and is absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub populations: [f64; 6],
    pub n_phot: f64,
    pub c_aul: C,
    pub c_i12: C,
    pub c_i34: C,
}

impl MomentSet {
    pub fn from_state(s: &CumulantState) -> Self {
        MomentSet {
            populations: s.populations(),
            n_phot: s.n_phot,
            c_aul: s.c_aul,
            c_i12: s.c_i12,
            c_i34: s.c_i34,
        }
    }

    /// Name/value pairs in a fixed order.
    pub fn components(&self) -> [(&'static str, f64); 13] {
        let p = self.populations;
        [
            ("p_i1", p[0]),
            ("p_i2", p[1]),
            ("p_i3", p[2]),
            ("p_i4", p[3]),
            ("p_u", p[4]),
            ("p_l", p[5]),
            ("n_phot", self.n_phot),
            ("c_aul_re", self.c_aul.re),
            ("c_aul_im", self.c_aul.im),
            ("c_i12_re", self.c_i12.re),
            ("c_i12_im", self.c_i12.im),
            ("c_i34_re", self.c_i34.re),
            ("c_i34_im", self.c_i34.im),
        ]
    }

    pub fn max_abs_difference(&self, other: &MomentSet) -> f64 {
        self.components()
            .iter()
            .zip(other.components().iter())
            .map(|(a, b)| (a.1 - b.1).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_population_difference(&self, other: &MomentSet) -> f64 {
        self.populations
            .iter()
            .zip(&other.populations)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "component,value")?;
        for (name, v) in self.components() {
            writeln!(w, "{name},{v:.15e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OracleSteadyState {
    pub rho: DMatrix<C>,
    pub moments: MomentSet,
    pub method: OracleMethod,
    /// Population of the top Fock level.
    pub leakage: f64,
}

impl OracleSteadyState {
    fn new(l: &Liouvillian, rho: DMatrix<C>, method: OracleMethod) -> Self {
        let b = l.basis;
        let leakage = (0..6)
            .map(|lev| rho[(b.index(lev, b.cutoff), b.index(lev, b.cutoff))].re)
            .sum();
        let moments = moments_of(&b, &rho);
        OracleSteadyState {
            rho,
            moments,
            method,
            leakage,
        }
    }

    /// Hermiticity defect, trace defect and most negative eigenvalue.
    pub fn validity(&self) -> (f64, f64, f64) {
        let herm = cmax(&(&self.rho - self.rho.adjoint()));
        let trace = (self.rho.trace() - C::from(1.0)).norm();
        let sym = (&self.rho + self.rho.adjoint()) * C::from(0.5);
        let eig = SymmetricEigen::new(sym).eigenvalues;
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        (herm, trace, min)
    }
}

fn moments_of(b: &Basis, rho: &DMatrix<C>) -> MomentSet {
    let mut pops = [0.0; 6];
    let mut n_phot = 0.0;
    let mut c_aul = ZERO;
    let (mut c12, mut c34) = (ZERO, ZERO);
    for n in 0..=b.cutoff {
        for (lev, p) in pops.iter_mut().enumerate() {
            let d = rho[(b.index(lev, n), b.index(lev, n))].re;
            *p += d;
            n_phot += n as f64 * d;
        }
        // Tr(rho |x><y|) = rho_yx
        c12 += rho[(b.index(I2, n), b.index(I1, n))];
        c34 += rho[(b.index(I4, n), b.index(I3, n))];
        if n < b.cutoff {
            // <a |u><l|> = sum_n sqrt(n+1) rho_{(l,n+1),(u,n)}
            c_aul += rho[(b.index(L, n + 1), b.index(U, n))] * ((n + 1) as f64).sqrt();
        }
    }
    MomentSet {
        populations: pops,
        n_phot,
        c_aul,
        c_i12: c12,
        c_i34: c34,
    }
}

fn unpack(b: &Basis, sector: &Sector, v: &DVector<C>) -> DMatrix<C> {
    let dim = b.dim();
    let mut rho = DMatrix::zeros(dim, dim);
    for (k, &(i, j)) in sector.pairs.iter().enumerate() {
        rho[(i, j)] = v[k];
    }
    rho
}

fn pack(b: &Basis, sector: &Sector, rho: &DMatrix<C>) -> DVector<C> {
    let dim = b.dim();
    let mut v = DVector::zeros(sector.pairs.len());
    for i in 0..dim {
        for j in 0..dim {
            if let Some(k) = sector.position(dim, i, j) {
                v[k] = rho[(i, j)];
            } else if rho[(i, j)] != ZERO {
                debug_assert!(false, "state outside sector");
            }
        }
    }
    v
}

fn sector_trace(sector: &Sector, v: &DVector<C>) -> C {
    sector
        .pairs
        .iter()
        .zip(v.iter())
        .filter(|((i, j), _)| i == j)
        .map(|(_, x)| *x)
        .sum()
}

pub fn oracle_steady_state(l: &Liouvillian, method: OracleMethod) -> Result<OracleSteadyState> {
    let sector = l.sector(0);
    let v = match method {
        OracleMethod::NullSpace => null_space(&sector)?,
        OracleMethod::Integration => {
            let b = l.basis;
            let mut rho0 = DMatrix::zeros(b.dim(), b.dim());
            let i = b.index(I2, 0);
            rho0[(i, i)] = C::from(1.0);
            propagate_to_steady(&sector, pack(&b, &sector, &rho0))?
        }
    };
    let mut rho = unpack(&l.basis, &sector, &v);
    rho = (&rho + rho.adjoint()) * C::from(0.5);
    let st = OracleSteadyState::new(l, rho, method);
    if st.leakage > LEAKAGE_LIMIT {
        return Err(Error::Oracle(format!(
            "photon cutoff {} too small: top-level population {:.3e}",
            l.basis.cutoff, st.leakage
        )));
    }
    Ok(st)
}

/// Long-time limit from an arbitrary initial density matrix.
pub fn oracle_relax(l: &Liouvillian, rho0: &DMatrix<C>) -> Result<OracleSteadyState> {
    let sector = l.sector(0);
    let v = propagate_to_steady(&sector, pack(&l.basis, &sector, rho0))?;
    let rho = unpack(&l.basis, &sector, &v);
    Ok(OracleSteadyState::new(
        l,
        (&rho + rho.adjoint()) * C::from(0.5),
        OracleMethod::Integration,
    ))
}

/// Both methods, cross-checked. The null-space state is returned.
pub fn oracle_steady_state_checked(l: &Liouvillian) -> Result<(OracleSteadyState, f64)> {
    let a = oracle_steady_state(l, OracleMethod::NullSpace)?;
    let b = oracle_steady_state(l, OracleMethod::Integration)?;
    let diff = a.moments.max_abs_difference(&b.moments);
    if diff > METHOD_TOLERANCE {
        let mut dump = String::new();
        for ((name, x), (_, y)) in a
            .moments
            .components()
            .iter()
            .zip(b.moments.components().iter())
        {
            dump.push_str(&format!(" {name}: {x:.12e} vs {y:.12e};"));
        }
        return Err(Error::Oracle(format!(
            "methods disagree by {diff:.3e}:{dump}"
        )));
    }
    Ok((a, diff))
}

fn null_space(sector: &Sector) -> Result<DVector<C>> {
    let m = sector.pairs.len();
    let mut a = sector.generator.clone();
    let anchor = sector
        .pairs
        .iter()
        .position(|(i, j)| i == j)
        .ok_or_else(|| Error::Oracle("sector holds no populations".into()))?;
    for c in 0..m {
        let (i, j) = sector.pairs[c];
        a[(anchor, c)] = if i == j { C::from(1.0) } else { ZERO };
    }
    let mut rhs = DVector::zeros(m);
    rhs[anchor] = C::from(1.0);
    let v = a.lu().solve(&rhs).ok_or_else(|| {
        Error::Oracle("generator kernel is degenerate: steady state not unique".into())
    })?;
    if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Oracle("non-finite null vector".into()));
    }
    Ok(v)
}

fn propagate_to_steady(sector: &Sector, v0: DVector<C>) -> Result<DVector<C>> {
    let g = &sector.generator;
    let scale = (0..g.nrows()).map(|i| g[(i, i)].norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(v0);
    }
    let mut prop = (g * C::from(1.0 / scale)).exp();
    let mut v = v0;
    let mut quiet = 0;
    for _ in 0..120 {
        let mut next = &prop * &v;
        let tr = sector_trace(sector, &next);
        next /= tr;
        let change = cmax(&(&next - &v));
        v = next;
        if change <= 1e-14 {
            quiet += 1;
            if quiet >= 3 {
                return Ok(v);
            }
        } else {
            quiet = 0;
        }
        prop = &prop * &prop;
    }
    Err(Error::Oracle("long-time propagation did not settle".into()))
}

/// Eigenvalues of the steady-state sector generator.
pub fn generator_spectrum(l: &Liouvillian) -> Vec<C> {
    let s = Schur::new(l.sector(0).generator);
    s.eigenvalues()
        .map(|e| e.iter().copied().collect())
        .unwrap_or_default()
}

/// First-order field correlation `<a^dag(tau) a(0)>` in the steady state.
pub struct FieldCorrelation {
    sector: Sector,
    /// `a rho_st` packed into the `-1` sector.
    source: DVector<C>,
    /// Coefficients of `Tr(a^dag X)`.
    probe: DVector<C>,
    q: DMatrix<C>,
    h: DMatrix<C>,
    q_source: DVector<C>,
    probe_q: DVector<C>,
}

impl FieldCorrelation {
    pub fn new(l: &Liouvillian, steady: &OracleSteadyState) -> Self {
        let b = l.basis;
        let sector = l.sector(-1);
        let a = b.annihilation().to_dense();
        let src = &a * &steady.rho;
        let source = pack(&b, &sector, &src);
        let dim = b.dim();
        let mut probe = DVector::zeros(sector.pairs.len());
        for (k, &(i, j)) in sector.pairs.iter().enumerate() {
            // Tr(a^dag X) = sum_ij X_ij (a^dag)_ji = sum_ij X_ij conj(a_ij)
            probe[k] = a[(i, j)].conj();
        }
        let _ = dim;
        let (q, h) = Hessenberg::new(sector.generator.clone()).unpack();
        let q_source = q.adjoint() * &source;
        let probe_q = q.transpose() * &probe;
        FieldCorrelation {
            sector,
            source,
            probe,
            q,
            h,
            q_source,
            probe_q,
        }
    }

    pub fn at(&self, tau: f64) -> C {
        let v = (&self.sector.generator * C::from(tau)).exp() * &self.source;
        self.probe.dot(&v)
    }

    /// Laplace transform at complex `s` (rad/s).
    pub fn laplace(&self, s: C) -> Result<C> {
        let m = self.h.nrows();
        let mut t = -self.h.clone();
        for i in 0..m {
            t[(i, i)] += s;
        }
        let y =
            hessenberg_solve(t, self.q_source.clone()).ok_or(Error::Pole { re: s.re, im: s.im })?;
        let _ = &self.q;
        Ok(self.probe_q.dot(&y))
    }

    /// `S(w) = 2 Re F(-i w)` sampled on `grid` (Hz).
    pub fn spectrum(&self, grid: &[f64]) -> Result<Spectrum> {
        spectrum_from_density(
            &|f| Ok(2.0 * self.laplace(C::new(0.0, -std::f64::consts::TAU * f))?.re),
            grid,
        )
    }
}

fn cmax<R: nalgebra::Dim, Cc: nalgebra::Dim, S: nalgebra::RawStorage<C, R, Cc>>(
    m: &nalgebra::Matrix<C, R, Cc, S>,
) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Solves an upper-Hessenberg system by Gaussian elimination with adjacent
/// row pivoting.
fn hessenberg_solve(mut t: DMatrix<C>, mut b: DVector<C>) -> Option<DVector<C>> {
    let m = t.nrows();
    for k in 0..m.saturating_sub(1) {
        if t[(k + 1, k)].norm() > t[(k, k)].norm() {
            t.swap_rows(k, k + 1);
            b.swap_rows(k, k + 1);
        }
        let piv = t[(k, k)];
        if piv == ZERO {
            return None;
        }
        let f = t[(k + 1, k)] / piv;
        if f != ZERO {
            for c in k..m {
                let v = t[(k, c)];
                t[(k + 1, c)] -= f * v;
            }
            let bk = b[k];
            b[k + 1] -= f * bk;
        }
    }
    for k in (0..m).rev() {
        let mut acc = b[k];
        for c in k + 1..m {
            acc -= t[(k, c)] * b[c];
        }
        let piv = t[(k, k)];
        if piv == ZERO {
            return None;
        }
        b[k] = acc / piv;
    }
    b.iter()
        .all(|x| x.re.is_finite() && x.im.is_finite())
        .then_some(b)
}

/// One line of the comparison suite.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: String, measured: f64, tolerance: f64) -> Self {
        OracleCheck {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

/// Below-threshold `(T1, T2)` points used by the comparison suite.
pub const SUITE_POINTS: [(f64, f64); 12] = [
    (50.0, 0.1),
    (100.0, 0.1),
    (200.0, 0.1),
    (300.0, 0.1),
    (400.0, 0.1),
    (300.0, 5.0),
    (300.0, 20.0),
    (300.0, 50.0),
    (150.0, 80.0),
    (400.0, 120.0),
    (100.0, 100.0),
    (250.0, 30.0),
];

/// Per-level population tolerance between cumulant and exact states.
pub const POPULATION_TOLERANCE: f64 = 1e-3;
/// Relative FWHM tolerance between regression and exact spectra.
pub const LINEWIDTH_TOLERANCE: f64 = 0.05;

/// Compares the cumulant steady state at `N = 1` with the exact one at
/// every suite point, plus one spectrum comparison at the first point
/// with thermal photons.
pub fn run_check_suite(base: &PhysicalParams, cutoff: usize) -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    for &(t1, t2) in &SUITE_POINTS {
        let model = Model::new(base.clone().with_structures(1).with_temperatures(t1, t2))?;
        let tag = format!("T1={t1} K T2={t2} K");
        let l = Liouvillian::new(&model, cutoff)?;
        let (exact, diff) = match oracle_steady_state_checked(&l) {
            Ok(v) => v,
            Err(e) => {
                checks.push(OracleCheck {
                    name: format!("{tag}: oracle ({e})"),
                    measured: f64::INFINITY,
                    tolerance: 0.0,
                    passed: false,
                });
                continue;
            }
        };
        checks.push(OracleCheck::new(
            format!("{tag}: null space vs integration"),
            diff,
            METHOD_TOLERANCE,
        ));
        checks.push(OracleCheck::new(
            format!("{tag}: cutoff leakage"),
            exact.leakage,
            LEAKAGE_LIMIT,
        ));
        match steady_state(&model) {
            Ok(ss) => {
                let d = exact
                    .moments
                    .max_population_difference(&MomentSet::from_state(&ss.state));
                checks.push(OracleCheck::new(
                    format!("{tag}: populations"),
                    d,
                    POPULATION_TOLERANCE,
                ));
            }
            Err(e) => checks.push(OracleCheck {
                name: format!("{tag}: populations ({e})"),
                measured: f64::INFINITY,
                tolerance: POPULATION_TOLERANCE,
                passed: false,
            }),
        }
    }
    let (t1, t2) = (300.0, 50.0);
    let model = Model::new(base.clone().with_structures(1).with_temperatures(t1, t2))?;
    let l = Liouvillian::new(&model, cutoff)?;
    let exact = oracle_steady_state(&l, OracleMethod::NullSpace)?;
    let corr = FieldCorrelation::new(&l, &exact);
    let ss = steady_state(&model)?;
    let sys = crate::spectrum::regression_matrix(&ss, &model)?;
    let grid = crate::spectrum::default_grid(&sys, 20.0, 801);
    let w_exact = corr.spectrum(&grid)?.fwhm;
    let w_reg = crate::spectrum::emission_spectrum(&sys, &grid)?.fwhm;
    checks.push(OracleCheck::new(
        format!("T1={t1} K T2={t2} K: linewidth"),
        (w_reg - w_exact).abs() / w_exact,
        LINEWIDTH_TOLERANCE,
    ));
    Ok(checks)
}
