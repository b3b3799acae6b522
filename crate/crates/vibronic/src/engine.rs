//! Exact dynamics in the truncated Fock ⊗ qubit space.
//!
//! Amplitudes are Fock-major: index = v * 2^n_qubits + s.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::electronic::ModelParams;
use crate::error::{Error, Result};
use crate::fermion::CmqbHamiltonian;
use crate::io::{fmt_full, CsvTable};
use crate::linalg::{self, eigh_hermitian, expm, hermitian_deviation, hermitize, identity_c, kron};
use crate::pauli::QubitOperator;

pub const DIMENSION_GUARD: usize = 1 << 20;
pub const TRUNCATION_TOL: f64 = 1e-6;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub fn annihilation(n_fock: usize) -> Array2<f64> {
    let mut b = Array2::zeros((n_fock, n_fock));
    for v in 1..n_fock {
        b[[v - 1, v]] = (v as f64).sqrt();
    }
    b
}

/// b + b† in the truncated Fock basis.
pub fn boson_position(n_fock: usize) -> Array2<f64> {
    let b = annihilation(n_fock);
    &b + &b.t()
}

pub fn boson_number(n_fock: usize) -> Array2<f64> {
    Array2::from_diag(&Array1::from_iter((0..n_fock).map(|v| v as f64)))
}

fn check_dim(n_fock: usize, n_qubits: usize) -> Result<usize> {
    if n_fock < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_fock must be >= 2, got {n_fock}"
        )));
    }
    let dim = n_fock
        .checked_mul(1usize << n_qubits)
        .ok_or(Error::DimensionTooLarge {
            dim: usize::MAX,
            limit: DIMENSION_GUARD,
        })?;
    if dim > DIMENSION_GUARD {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: DIMENSION_GUARD,
        });
    }
    Ok(dim)
}

/// Dense matrix of a qubit operator with (b + b†)-linear coefficients.
pub fn symbolic_matrix(op: &QubitOperator, n_fock: usize) -> Result<Array2<Complex64>> {
    check_dim(n_fock, op.n_qubits())?;
    let (m0, m1) = op.qubit_matrices();
    let x = linalg::to_complex(&boson_position(n_fock));
    let out = kron(&identity_c(n_fock), &m0) + kron(&x, &m1);
    finish_hermitian(out)
}

/// Symmetrizes matrices that are Hermitian up to rounding; others are returned unchanged.
fn finish_hermitian(m: Array2<Complex64>) -> Result<Array2<Complex64>> {
    let dev = hermitian_deviation(&m);
    if dev <= 1e-13 * m.iter().map(|x| x.norm()).fold(1.0, f64::max) {
        return Ok(hermitize(&m));
    }
    Ok(m)
}

/// Dense matrix of omega b†b + sum (V0 + V1 (b + b†)) P.
pub fn cmqb_matrix(h: &CmqbHamiltonian, n_fock: usize) -> Result<Array2<Complex64>> {
    let mut m = symbolic_matrix(&h.to_operator(), n_fock)?;
    let nq = 1usize << h.n_qubits;
    for v in 0..n_fock {
        for s in 0..nq {
            m[[v * nq + s, v * nq + s]] += h.omega * v as f64;
        }
    }
    Ok(m)
}

/// Qubit-space operator extended by the Fock identity.
pub fn lift_qubit_matrix(m: &Array2<Complex64>, n_fock: usize) -> Array2<Complex64> {
    kron(&identity_c(n_fock), m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibronicState {
    pub amplitudes: Array1<Complex64>,
    pub n_fock: usize,
    pub n_qubits: usize,
}

impl VibronicState {
    pub fn new(amplitudes: Array1<Complex64>, n_fock: usize, n_qubits: usize) -> Result<Self> {
        let dim = check_dim(n_fock, n_qubits)?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        Ok(VibronicState {
            amplitudes,
            n_fock,
            n_qubits,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_sectors(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn amp(&self, v: usize, s: usize) -> Complex64 {
        self.amplitudes[v * self.n_sectors() + s]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(self.amplitudes.as_slice().unwrap())
    }

    pub fn top_level_population(&self) -> f64 {
        let ns = self.n_sectors();
        let v = self.n_fock - 1;
        (0..ns).map(|s| self.amp(v, s).norm_sqr()).sum()
    }

    /// Occupation probability of each qubit being |1>.
    pub fn qubit_occupations(&self) -> Vec<f64> {
        let ns = self.n_sectors();
        let mut occ = vec![0.0; self.n_qubits];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let s = i % ns;
            let p = a.norm_sqr();
            for (k, o) in occ.iter_mut().enumerate() {
                if s >> (self.n_qubits - 1 - k) & 1 == 1 {
                    *o += p;
                }
            }
        }
        occ
    }

    /// Population of each Fock level.
    pub fn fock_populations(&self) -> Vec<f64> {
        let ns = self.n_sectors();
        (0..self.n_fock)
            .map(|v| (0..ns).map(|s| self.amp(v, s).norm_sqr()).sum())
            .collect()
    }

    /// Same state embedded in a larger Fock space.
    pub fn padded(&self, n_fock: usize) -> Result<VibronicState> {
        if n_fock < self.n_fock {
            return Err(Error::InvalidParameter(
                "cannot pad to a smaller Fock space".into(),
            ));
        }
        let mut a = Array1::zeros(n_fock * self.n_sectors());
        a.slice_mut(ndarray::s![..self.dim()])
            .assign(&self.amplitudes);
        VibronicState::new(a, n_fock, self.n_qubits)
    }
}

/// Parses a qubit occupation bitstring such as "1100" (qubit 0 leftmost).
pub fn parse_occupation(bits: &str) -> Result<(usize, usize)> {
    if bits.is_empty() || bits.len() > 20 || !bits.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::InvalidParameter(format!(
            "bad occupation bitstring `{bits}`"
        )));
    }
    Ok((usize::from_str_radix(bits, 2).unwrap(), bits.len()))
}

/// Coherent amplitude alpha = R0 sqrt(M omega / 2).
pub fn coherent_amplitude(params: &ModelParams, r0: f64) -> f64 {
    r0 * (params.mass * params.omega() / 2.0).sqrt()
}

/// Population of a coherent state above level n_fock - 1.
pub fn coherent_tail(alpha: f64, n_fock: usize) -> f64 {
    let mut p = (-alpha * alpha).exp();
    let mut inside = 0.0;
    for k in 0..n_fock {
        if k > 0 {
            p *= alpha * alpha / k as f64;
        }
        inside += p;
    }
    (1.0 - inside).max(0.0)
}

fn suggested_fock(alpha: f64) -> usize {
    let mut n = 2usize;
    loop {
        let mut p = (-alpha * alpha).exp();
        let mut tail = 0.0;
        for k in 0..n + 200 {
            if k > 0 {
                p *= alpha * alpha / k as f64;
            }
            if k + 1 >= n {
                tail += p;
            }
        }
        if tail < 1e-8 || n > 4096 {
            return n;
        }
        n += 1;
    }
}

/// D(alpha)|0> ⊗ |occupation>, with D built by exponentiating alpha (b† - b).
pub fn prepare_initial_state(
    params: &ModelParams,
    r0: f64,
    occupation: &str,
    n_fock: usize,
) -> Result<VibronicState> {
    let (s0, nq) = parse_occupation(occupation)?;
    check_dim(n_fock, nq)?;
    let alpha = coherent_amplitude(params, r0);
    let b = annihilation(n_fock);
    let gen = (&b.t() - &b).mapv(|x| Complex64::new(alpha * x, 0.0));
    let d = expm(&gen)?;
    let ns = 1usize << nq;
    let mut a = Array1::zeros(n_fock * ns);
    for v in 0..n_fock {
        a[v * ns + s0] = d[[v, 0]];
    }
    let state = VibronicState::new(a, n_fock, nq)?;
    // A truncated exponential folds weight back into low levels, so the
    // Poisson tail of the untruncated coherent state is the real measure.
    let tail = coherent_tail(alpha, n_fock);
    let top = state.top_level_population();
    if tail > TRUNCATION_TOL || top > TRUNCATION_TOL {
        return Err(Error::Truncation {
            population: tail.max(top),
            suggested: suggested_fock(alpha),
        });
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Trotter,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<Array1<Complex64>>,
    pub method: Method,
}

/// Cached eigendecomposition of a Hermitian generator.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    pub energies: Array1<f64>,
    pub vectors: Array2<Complex64>,
}

impl SpectralPropagator {
    pub fn new(h: &Array2<Complex64>) -> Result<Self> {
        let dev = hermitian_deviation(h);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        let (energies, vectors) = eigh_hermitian(h)?;
        Ok(SpectralPropagator { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Coefficients of `psi` in the eigenbasis.
    pub fn project(&self, psi: &Array1<Complex64>) -> Result<Array1<Complex64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        Ok(self.vectors.t().mapv(|x| x.conj()).dot(psi))
    }

    /// exp(-i H t) applied through eigenbasis coefficients `c0`.
    pub fn evolve_coefficients(&self, c0: &Array1<Complex64>, t: f64) -> Array1<Complex64> {
        let c: Array1<Complex64> = c0
            .iter()
            .zip(self.energies.iter())
            .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t))
            .collect();
        self.vectors.dot(&c)
    }

    pub fn evolve(&self, psi: &Array1<Complex64>, t: f64) -> Result<Array1<Complex64>> {
        Ok(self.evolve_coefficients(&self.project(psi)?, t))
    }
}

/// psi(t) = exp(-i H t) psi0 on each time of `times` (strictly increasing).
pub fn exact_evolve(
    h: &Array2<Complex64>,
    psi0: &Array1<Complex64>,
    times: &[f64],
) -> Result<PropagationResult> {
    check_times(times)?;
    let prop = SpectralPropagator::new(h)?;
    let c0 = prop.project(psi0)?;
    let states = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                psi0.clone()
            } else {
                prop.evolve_coefficients(&c0, t)
            }
        })
        .collect();
    Ok(PropagationResult {
        times: times.to_vec(),
        states,
        method: Method::Exact,
    })
}

pub fn check_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "times must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Uniform time grid 0, dt, 2dt, ... up to t_final (inclusive within 1e-9).
pub fn time_grid(t_final: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad time grid t_final={t_final}, dt={dt}"
        )));
    }
    let n = (t_final / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

pub fn expectation(psi: &Array1<Complex64>, op: &Array2<Complex64>) -> Result<Complex64> {
    if op.nrows() != psi.len() || op.ncols() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            got: op.nrows(),
        });
    }
    Ok(linalg::vdot(
        psi.as_slice().unwrap(),
        op.dot(psi).as_slice().unwrap(),
    ))
}

pub fn fidelity(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    for v in [a, b] {
        let n = linalg::norm(v.as_slice().unwrap());
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(n));
        }
    }
    Ok(linalg::vdot(a.as_slice().unwrap(), b.as_slice().unwrap())
        .norm_sqr()
        .min(1.0))
}

/// Harmonic-oscillator eigenfunctions chi_0..chi_{n-1} at mass-weighted
/// coordinate q for unit mass and frequency omega.
pub fn hermite_functions(n: usize, omega: f64, q: f64) -> Vec<f64> {
    let y = omega.sqrt() * q;
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = (omega / PI).powf(0.25) * (-0.5 * y * y).exp();
    if n > 1 {
        out[1] = 2f64.sqrt() * y * out[0];
    }
    for v in 1..n.saturating_sub(1) {
        out[v + 1] = (2.0 / (v + 1) as f64).sqrt() * y * out[v]
            - (v as f64 / (v + 1) as f64).sqrt() * out[v - 1];
    }
    out
}

#[derive(Debug, Clone)]
pub struct NuclearWavefunction {
    pub r: Vec<f64>,
    /// psi_s(R) per point (rows) and qubit sector (columns), normalized in R.
    pub amplitudes: Array2<Complex64>,
    /// sum over sectors of |psi_s(R)|².
    pub density: Vec<f64>,
}

/// Nuclear wavefunction in R = Q / sqrt(M) from the Fock amplitudes.
pub fn nuclear_wavefunction(
    state: &VibronicState,
    params: &ModelParams,
    r_points: &[f64],
) -> NuclearWavefunction {
    let ns = state.n_sectors();
    let omega = params.omega();
    let jac = params.mass.powf(0.25);
    let mut amps: Array2<Complex64> = Array2::zeros((r_points.len(), ns));
    for (i, &r) in r_points.iter().enumerate() {
        let chi = hermite_functions(state.n_fock, omega, params.mass.sqrt() * r);
        for v in 0..state.n_fock {
            let c = chi[v] * jac;
            for s in 0..ns {
                amps[[i, s]] += state.amp(v, s) * c;
            }
        }
    }
    let density = amps
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    NuclearWavefunction {
        r: r_points.to_vec(),
        amplitudes: amps,
        density,
    }
}

/// Observables written to `trajectory.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub fon: [f64; 4],
    pub r_mean: f64,
    pub r2_mean: f64,
}

/// Precomputed operators for trajectory observables.
pub struct ObservableSet {
    h: Array2<Complex64>,
    n_fock: usize,
    n_qubits: usize,
    r_scale: f64,
}

impl ObservableSet {
    pub fn new(h: &CmqbHamiltonian, params: &ModelParams, n_fock: usize) -> Result<Self> {
        Ok(ObservableSet {
            h: cmqb_matrix(h, n_fock)?,
            n_fock,
            n_qubits: h.n_qubits,
            r_scale: 1.0 / (2.0 * params.mass * params.omega()).sqrt(),
        })
    }

    pub fn evaluate(&self, t: f64, psi: &Array1<Complex64>) -> Result<TrajectoryRow> {
        let state = VibronicState::new(psi.clone(), self.n_fock, self.n_qubits)?;
        let energy = expectation(psi, &self.h)?.re;
        let occ = state.qubit_occupations();
        let mut fon = [0.0; 4];
        for (k, f) in fon.iter_mut().enumerate().take(occ.len()) {
            *f = occ[k];
        }
        let (r1, r2) = position_moments(&state);
        Ok(TrajectoryRow {
            t,
            norm: state.norm(),
            energy,
            fon,
            r_mean: r1 * self.r_scale,
            r2_mean: r2 * self.r_scale * self.r_scale,
        })
    }
}

/// <b + b†> and <(b + b†)²>.
pub fn position_moments(state: &VibronicState) -> (f64, f64) {
    let ns = state.n_sectors();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for s in 0..ns {
        // x psi for this sector
        let col: Vec<Complex64> = (0..state.n_fock).map(|v| state.amp(v, s)).collect();
        let mut xc = vec![C0; state.n_fock];
        for v in 0..state.n_fock {
            if v > 0 {
                xc[v] += col[v - 1] * (v as f64).sqrt();
            }
            if v + 1 < state.n_fock {
                xc[v] += col[v + 1] * ((v + 1) as f64).sqrt();
            }
        }
        m1 += linalg::vdot(&col, &xc).re;
        m2 += xc.iter().map(|x| x.norm_sqr()).sum::<f64>();
    }
    (m1, m2)
}

pub fn trajectory_csv(rows: &[TrajectoryRow], label: &str) -> CsvTable {
    let header = [
        "t", "norm", "energy", "FON_1", "FON_2", "FON_3", "FON_4", "R_mean", "R2_mean",
    ];
    let mut t = CsvTable::new(header.iter().map(|s| s.to_string()).collect())
        .with_comment(format!("method: {label}"));
    for r in rows {
        let mut row = vec![fmt_full(r.t), fmt_full(r.norm), fmt_full(r.energy)];
        row.extend(r.fon.iter().map(|&x| fmt_full(x)));
        row.push(fmt_full(r.r_mean));
        row.push(fmt_full(r.r2_mean));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{BosonPoly, PauliString};

    #[test]
    fn oscillator_diagonal() {
        let h = CmqbHamiltonian {
            omega: 0.3,
            n_qubits: 1,
            n_modes: 1,
            terms: vec![],
        };
        let m = cmqb_matrix(&h, 4).unwrap();
        for v in 0..4 {
            for s in 0..2 {
                assert!((m[[2 * v + s, 2 * v + s]].re - 0.3 * v as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_string_constant() {
        let op = QubitOperator::from_term(PauliString::identity(2), BosonPoly::real(1.7, 0.0));
        let m = symbolic_matrix(&op, 3).unwrap();
        assert!(linalg::max_abs_diff(&m, &identity_c(12).mapv(|x| x * 1.7)) < 1e-15);
    }

    #[test]
    fn dimension_guard() {
        let op = QubitOperator::identity(20);
        assert!(matches!(
            symbolic_matrix(&op, 2),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(symbolic_matrix(&QubitOperator::identity(1), 1).is_err());
    }

    #[test]
    fn vacuum_preparation() {
        let p = ModelParams::default();
        let s = prepare_initial_state(&p, 0.0, "1100", 20).unwrap();
        assert!((s.amp(0, 12).re - 1.0).abs() < 1e-15);
        assert!(position_moments(&s).0.abs() < 1e-15);
    }

    #[test]
    fn coherent_amplitude_value() {
        let p = ModelParams::default();
        assert!((p.omega() - 0.046676).abs() < 1e-6);
        assert!((coherent_amplitude(&p, 0.1) - 0.6546).abs() < 1e-4);
    }

    #[test]
    fn truncation_error_suggests_size() {
        let p = ModelParams::default();
        match prepare_initial_state(&p, 1.0, "1100", 10) {
            Err(Error::Truncation { suggested, .. }) => assert!(suggested > 10),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn hermite_functions_orthonormal() {
        let omega = 0.05;
        let n = 12;
        let dq = 0.05;
        let mut gram = Array2::<f64>::zeros((n, n));
        let mut q = -60.0;
        while q <= 60.0 {
            let chi = hermite_functions(n, omega, q);
            for i in 0..n {
                for j in 0..n {
                    gram[[i, j]] += chi[i] * chi[j] * dq;
                }
            }
            q += dq;
        }
        for i in 0..n {
            for j in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - t).abs() < 1e-8, "{i} {j} {}", gram[[i, j]]);
            }
        }
    }

    #[test]
    fn fidelity_checks() {
        let mut a = Array1::zeros(4);
        a[0] = Complex64::new(1.0, 0.0);
        let mut b = Array1::zeros(4);
        b[1] = Complex64::new(1.0, 0.0);
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert!(fidelity(&a, &(&b * Complex64::new(2.0, 0.0))).is_err());
    }

    #[test]
    fn time_grid_inclusive() {
        let g = time_grid(11.2, 5.6).unwrap();
        assert_eq!(g.len(), 3);
        assert!(check_times(&[0.0, 0.0]).is_err());
    }
}
