//! Measurement emulation: 1RDM from Pauli expectations, displacement-operator
//! characteristic functions, Fourier reconstruction of densities, and
//! shot-sampled Hadamard tests.

use std::f64::consts::PI;

use log::warn;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::density::{joint_density, JointDensity, NuclearDensity, SpinSummedGamma, N_ELECTRONS};
use crate::electronic::{ModelParams, OrbitalSet};
use crate::engine::{boson_position, VibronicState};
use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, spin_orbital, FermionTerm};
use crate::io::CsvTable;
use crate::linalg::{eigh, eigh_hermitian, hermitize, unitary_deviation};
use crate::pauli::{PauliString, QubitOperator};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Population allowed on the top padded Fock levels after the largest displacement.
pub const LEAKAGE_TOL: f64 = 1e-6;

/// Symmetric grid k_j = (j - (n_k - 1)/2) dk, with k conjugate to R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub n_k: usize,
    pub dk: f64,
}

impl MomentumGrid {
    pub fn new(n_k: usize, dk: f64) -> Result<Self> {
        let g = MomentumGrid { n_k, dk };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_k < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 k-points, got {}",
                self.n_k
            )));
        }
        if !(self.dk > 0.0) || !self.dk.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "k spacing must be > 0, got {}",
                self.dk
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let c = (self.n_k as f64 - 1.0) / 2.0;
        (0..self.n_k).map(|j| (j as f64 - c) * self.dk).collect()
    }

    pub fn k_max(&self) -> f64 {
        (self.n_k as f64 - 1.0) / 2.0 * self.dk
    }

    /// Nuclear-coordinate resolution 2 pi / (n_k dk).
    pub fn resolution(&self) -> f64 {
        2.0 * PI / (self.n_k as f64 * self.dk)
    }

    /// Frequency-weighted displacement xi = k / sqrt(2 M omega).
    pub fn xi(&self, params: &ModelParams) -> Vec<f64> {
        let s = (2.0 * params.mass * params.omega()).sqrt();
        self.points().into_iter().map(|k| k / s).collect()
    }

    /// Default reconstruction grid: n_k points at the resolution, centred on 0.
    pub fn r_points(&self) -> Vec<f64> {
        let c = (self.n_k as f64 - 1.0) / 2.0;
        let h = self.resolution();
        (0..self.n_k).map(|m| (m as f64 - c) * h).collect()
    }
}

/// <a†_p a_q> over the spin orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdm1(pub Array2<Complex64>);

impl Rdm1 {
    pub fn trace(&self) -> f64 {
        (0..self.0.nrows()).map(|i| self.0[[i, i]].re).sum()
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        Ok(eigh_hermitian(&self.0)?.0)
    }

    /// Checks hermiticity, trace and eigenvalue bounds.
    pub fn validate(&self, n_electrons: f64) -> Result<()> {
        let dev = crate::linalg::hermitian_deviation(&self.0);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        if (self.trace() - n_electrons).abs() > 1e-8 {
            return Err(Error::Density(format!(
                "1RDM trace {} != {n_electrons}",
                self.trace()
            )));
        }
        let ev = self.eigenvalues()?;
        if ev.iter().any(|&x| !(-1e-8..=1.0 + 1e-8).contains(&x)) {
            return Err(Error::Density(format!(
                "1RDM eigenvalues {ev} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Jordan-Wigner image of a†_p a_q as (Pauli string, complex weight) pairs.
pub fn hopping_strings(
    p: usize,
    q: usize,
    n_qubits: usize,
) -> Result<Vec<(PauliString, Complex64)>> {
    let op = jordan_wigner(&FermionTerm::hopping(p, q), n_qubits)?;
    Ok(op.terms().map(|(s, c)| (*s, c.c0)).collect())
}

/// <psi| P ⊗ 1 |psi> for a Pauli string acting on the qubits only.
pub fn pauli_expectation(state: &VibronicState, p: &PauliString) -> Complex64 {
    let ns = state.n_sectors();
    let mut acc = C0;
    for v in 0..state.n_fock {
        for s in 0..ns {
            let (ph, t) = p.apply_to_basis(s);
            acc += state.amp(v, t).conj() * ph * state.amp(v, s);
        }
    }
    acc
}

fn operator_expectation(state: &VibronicState, op: &QubitOperator) -> Result<Complex64> {
    let mut acc = C0;
    for (s, c) in op.terms() {
        if !c.is_scalar() {
            return Err(Error::UnsupportedPolynomial(
                "measured operators must be qubit-only".into(),
            ));
        }
        acc += c.c0 * pauli_expectation(state, s);
    }
    Ok(acc)
}

/// 1RDM from exact Pauli-string expectations, Hermitized.
pub fn measure_rdm1(state: &VibronicState) -> Result<Rdm1> {
    let n = state.n_qubits;
    let mut m = Array2::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            let op = jordan_wigner(&FermionTerm::hopping(p, q), n)?;
            m[[p, q]] = operator_expectation(state, &op)?;
        }
    }
    Ok(Rdm1(hermitize(&m)))
}

/// Outcome of a Hadamard test for <U>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardEstimate {
    pub re: f64,
    pub im: f64,
    /// Exact ancilla P(0) without and with the phase gate.
    pub p0_re: f64,
    pub p0_im: f64,
    pub shots: u64,
}

/// Ancilla P(0) for the real-part circuit (H, controlled-U, H) and the
/// imaginary-part circuit (H, controlled-U, S†, H), from the extended state.
pub fn hadamard_probabilities(psi: &[Complex64], u_psi: &[Complex64]) -> (f64, f64) {
    let mut p_re = 0.0;
    let mut p_im = 0.0;
    let mi = Complex64::new(0.0, -1.0);
    for (a, b) in psi.iter().zip(u_psi) {
        // ancilla |0> branch: (psi + U psi)/2, and (psi - i U psi)/2 with S†
        p_re += ((a + b) * 0.5).norm_sqr();
        p_im += ((a + mi * b) * 0.5).norm_sqr();
    }
    (p_re, p_im)
}

fn sample_fraction(p0: f64, shots: u64, rng: &mut ChaCha20Rng) -> Result<f64> {
    let p = p0.clamp(0.0, 1.0);
    let dist =
        Binomial::new(shots, p).map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

/// Estimates <U> from ancilla statistics; `shots = 0` returns the exact value.
pub fn hadamard_estimate(
    psi: &[Complex64],
    u_psi: &[Complex64],
    shots: u64,
    rng: &mut ChaCha20Rng,
) -> Result<HadamardEstimate> {
    let (p_re, p_im) = hadamard_probabilities(psi, u_psi);
    let (f_re, f_im) = if shots == 0 {
        (p_re, p_im)
    } else {
        (
            sample_fraction(p_re, shots, rng)?,
            sample_fraction(p_im, shots, rng)?,
        )
    };
    Ok(HadamardEstimate {
        re: 2.0 * f_re - 1.0,
        im: 2.0 * f_im - 1.0,
        p0_re: p_re,
        p0_im: p_im,
        shots,
    })
}

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Hadamard test of a full-space unitary on a vibronic state.
pub fn hadamard_test_sample(
    state: &VibronicState,
    u: &Array2<Complex64>,
    shots: u64,
    seed: u64,
) -> Result<HadamardEstimate> {
    if u.nrows() != state.dim() || u.ncols() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: u.nrows(),
        });
    }
    let dev = unitary_deviation(u);
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    let u_psi = u.dot(&state.amplitudes);
    let mut rng = seeded_rng(seed, 0);
    hadamard_estimate(
        state.amplitudes.as_slice().unwrap(),
        u_psi.as_slice().unwrap(),
        shots,
        &mut rng,
    )
}

/// 1RDM assembled from Hadamard-test estimates of every Pauli string in the
/// expansion of a†_p a_q. Each string gets its own deterministic RNG stream.
pub fn sampled_rdm1(state: &VibronicState, shots: u64, seed: u64) -> Result<Rdm1> {
    let n = state.n_qubits;
    let psi = state.amplitudes.as_slice().unwrap();
    let mut m = Array2::zeros((n, n));
    let mut stream = 0u64;
    for p in 0..n {
        for q in 0..n {
            let mut acc = C0;
            for (s, w) in hopping_strings(p, q, n)? {
                let u_psi = apply_qubit_string(state, &s);
                let mut rng = seeded_rng(seed, stream);
                stream += 1;
                let e = hadamard_estimate(psi, &u_psi, shots, &mut rng)?;
                acc += w * Complex64::new(e.re, e.im);
            }
            m[[p, q]] = acc;
        }
    }
    Ok(Rdm1(hermitize(&m)))
}

fn apply_qubit_string(state: &VibronicState, p: &PauliString) -> Vec<Complex64> {
    let ns = state.n_sectors();
    let mut out = vec![C0; state.dim()];
    for v in 0..state.n_fock {
        for s in 0..ns {
            let (ph, t) = p.apply_to_basis(s);
            out[v * ns + t] = ph * state.amp(v, s);
        }
    }
    out
}

/// Which operator multiplies the displacement in C(k) = <O ⊗ D(i xi)>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pair {
    /// Nuclear-only characteristic function.
    None,
    /// a†_p a_q on spin orbitals p, q.
    Hopping(usize, usize),
}

/// C(k) samples on a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSamples {
    pub grid: MomentumGrid,
    pub pair: Pair,
    pub values: Vec<Complex64>,
    /// Shots per estimate; 0 for exact expectation values.
    pub shots: u64,
}

/// State expanded in the eigenbasis of (b + b†) on a padded Fock space, so
/// D(i xi) = exp(i xi (b + b†)) is diagonal.
pub struct CharacteristicEngine {
    grid: MomentumGrid,
    xi: Vec<f64>,
    lambda: Array1<f64>,
    /// Rows: padded eigenvectors j; columns: qubit sectors.
    coords: Array2<Complex64>,
    n_qubits: usize,
    pub n_pad: usize,
    /// Population on the top padded levels after the largest displacement.
    pub leakage: f64,
}

/// Padded Fock size large enough for displacements up to |xi|.
pub fn padded_fock_size(n_fock: usize, xi_max: f64) -> usize {
    let need = n_fock as f64 + (xi_max.abs() + 6.0).powi(2);
    (4 * n_fock).max(need.ceil() as usize)
}

impl CharacteristicEngine {
    pub fn new(state: &VibronicState, grid: MomentumGrid, params: &ModelParams) -> Result<Self> {
        grid.validate()?;
        let xi = grid.xi(params);
        let xi_max = xi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let n_pad = padded_fock_size(state.n_fock, xi_max);
        let (lambda, phi) = eigh(&boson_position(n_pad))?;
        let ns = state.n_sectors();
        let mut coords = Array2::zeros((n_pad, ns));
        for j in 0..n_pad {
            for s in 0..ns {
                let mut acc = C0;
                for v in 0..state.n_fock {
                    acc += state.amp(v, s) * phi[[v, j]];
                }
                coords[[j, s]] = acc;
            }
        }
        // leakage of D(i xi_max) psi into the top tenth of the padded space
        let top = (n_pad / 10).max(1);
        let mut leakage = 0.0;
        for v in n_pad - top..n_pad {
            for s in 0..ns {
                let mut acc = C0;
                for j in 0..n_pad {
                    acc += phi[[v, j]]
                        * Complex64::from_polar(1.0, xi_max * lambda[j])
                        * coords[[j, s]];
                }
                leakage += acc.norm_sqr();
            }
        }
        if leakage > LEAKAGE_TOL {
            warn!(
                "displacement |xi| = {xi_max:.3} leaks {leakage:e} population to the top of a {n_pad}-level Fock space; \
                 reduce k_max below {:.3}",
                grid.k_max()
            );
        }
        Ok(CharacteristicEngine {
            grid,
            xi,
            lambda,
            coords,
            n_qubits: state.n_qubits,
            n_pad,
            leakage,
        })
    }

    fn strings(&self, pair: Pair) -> Result<Vec<(PauliString, Complex64)>> {
        match pair {
            Pair::None => Ok(vec![(
                PauliString::identity(self.n_qubits),
                Complex64::new(1.0, 0.0),
            )]),
            Pair::Hopping(p, q) => hopping_strings(p, q, self.n_qubits),
        }
    }

    /// Per-eigenvector weights m_j = sum_s conj(u_s[j]) (P u)_s[j].
    fn weights(&self, p: &PauliString) -> Vec<Complex64> {
        let ns = 1usize << self.n_qubits;
        (0..self.n_pad)
            .map(|j| {
                let mut acc = C0;
                for s in 0..ns {
                    let (ph, t) = p.apply_to_basis(s);
                    acc += self.coords[[j, t]].conj() * ph * self.coords[[j, s]];
                }
                acc
            })
            .collect()
    }

    /// Exact C(k) = <O ⊗ D(i xi_k)>.
    pub fn exact(&self, pair: Pair) -> Result<CharacteristicSamples> {
        let mut total = vec![C0; self.n_pad];
        for (s, w) in self.strings(pair)? {
            for (t, m) in total.iter_mut().zip(self.weights(&s)) {
                *t += w * m;
            }
        }
        let values = self
            .xi
            .iter()
            .map(|&x| {
                total
                    .iter()
                    .zip(self.lambda.iter())
                    .map(|(m, &l)| m * Complex64::from_polar(1.0, x * l))
                    .sum()
            })
            .collect();
        Ok(CharacteristicSamples {
            grid: self.grid,
            pair,
            values,
            shots: 0,
        })
    }

    /// C(k) from shot-sampled Hadamard tests of each unitary P ⊗ D(i xi_k).
    /// `stream_base` separates RNG streams between pairs. For a Hermitian
    /// operator C(-k) = C(k)*, so only k >= 0 is measured and the rest mirrored.
    pub fn sampled(
        &self,
        pair: Pair,
        shots: u64,
        seed: u64,
        stream_base: u64,
    ) -> Result<CharacteristicSamples> {
        let ns = 1usize << self.n_qubits;
        let psi: Vec<Complex64> = self.coords.iter().copied().collect();
        let n_k = self.xi.len();
        let mirrored = matches!(pair, Pair::None) || matches!(pair, Pair::Hopping(p, q) if p == q);
        let measured: Vec<usize> = if mirrored {
            (0..n_k).filter(|&i| 2 * i + 1 >= n_k).collect()
        } else {
            (0..n_k).collect()
        };
        let mut values = vec![C0; n_k];
        for (i_s, (s, w)) in self.strings(pair)?.into_iter().enumerate() {
            // P applied in eigen coordinates (row-major j, s)
            let mut p_psi = vec![C0; psi.len()];
            for j in 0..self.n_pad {
                for sec in 0..ns {
                    let (ph, t) = s.apply_to_basis(sec);
                    p_psi[j * ns + t] = ph * self.coords[[j, sec]];
                }
            }
            for &i_k in &measured {
                let x = self.xi[i_k];
                let u_psi: Vec<Complex64> = p_psi
                    .iter()
                    .enumerate()
                    .map(|(idx, a)| a * Complex64::from_polar(1.0, x * self.lambda[idx / ns]))
                    .collect();
                let stream = stream_base
                    .wrapping_mul(1 << 20)
                    .wrapping_add((i_s as u64) << 12)
                    .wrapping_add(i_k as u64);
                let mut rng = seeded_rng(seed, stream);
                let e = hadamard_estimate(&psi, &u_psi, shots, &mut rng)?;
                values[i_k] += w * Complex64::new(e.re, e.im);
            }
        }
        if mirrored {
            for &i_k in &measured {
                let mirror = n_k - 1 - i_k;
                if mirror == i_k {
                    values[i_k].im = 0.0;
                } else {
                    values[mirror] = values[i_k].conj();
                }
            }
        }
        Ok(CharacteristicSamples {
            grid: self.grid,
            pair,
            values,
            shots,
        })
    }
}

/// rho(R) = (dk / 2 pi) sum_j C(k_j) exp(-i k_j R), complex.
pub fn fourier_invert(samples: &CharacteristicSamples, r_points: &[f64]) -> Vec<Complex64> {
    let ks = samples.grid.points();
    let pref = samples.grid.dk / (2.0 * PI);
    r_points
        .iter()
        .map(|&r| {
            ks.iter()
                .zip(&samples.values)
                .map(|(&k, c)| c * Complex64::from_polar(1.0, -k * r))
                .sum::<Complex64>()
                * pref
        })
        .collect()
}

/// Nuclear density from the nuclear-only characteristic function.
pub fn reconstruct_nuclear_density(
    samples: &CharacteristicSamples,
    r_points: &[f64],
) -> Result<NuclearDensity> {
    if samples.pair != Pair::None {
        return Err(Error::Density(
            "nuclear density needs the nuclear-only characteristic function".into(),
        ));
    }
    let raw = fourier_invert(samples, r_points);
    let imag = raw.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    if imag > 1e-6 && samples.shots == 0 {
        return Err(Error::Density(format!(
            "reconstructed density has imaginary residue {imag:e}"
        )));
    }
    let rho: Vec<f64> = raw.iter().map(|z| z.re).collect();
    check_density_values(&rho, samples.shots)?;
    let d = NuclearDensity {
        r_nuc: r_points.to_vec(),
        rho,
    };
    check_aliasing(&d);
    Ok(d)
}

/// Negative values are an error for exact expectations and expected shot
/// noise otherwise.
fn check_density_values(rho: &[f64], shots: u64) -> Result<()> {
    let min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-3 && shots == 0 {
        return Err(Error::Density(format!(
            "reconstructed density reaches {min:e} < -1e-3"
        )));
    }
    if min < -1e-6 {
        warn!("reconstructed density has negative excursion {min:e}");
    }
    Ok(())
}

fn check_aliasing(d: &NuclearDensity) {
    let n = d.rho.len();
    if n < 8 {
        return;
    }
    let h = (d.r_nuc[n - 1] - d.r_nuc[0]) / (n - 1) as f64;
    let edge: f64 = d.rho[..3]
        .iter()
        .chain(&d.rho[n - 3..])
        .map(|x| x.abs())
        .sum::<f64>()
        * h;
    if edge > 1e-3 {
        warn!("density mass {edge:e} within 3 cells of the reconstruction window edge; possible aliasing");
    }
}

/// Number of distinct Hadamard-test measurement settings for the joint
/// density: two Pauli strings per independent 1RDM element.
pub fn measurement_set_count(spin_symmetry: bool) -> usize {
    density_pairs(spin_symmetry).len() * 2
}

/// Spin-orbital pairs needed for the joint density.
pub fn density_pairs(spin_symmetry: bool) -> Vec<(usize, usize)> {
    let spins: &[usize] = if spin_symmetry { &[0] } else { &[0, 1] };
    let mut out = Vec::new();
    for &s in spins {
        out.push((spin_orbital(0, s), spin_orbital(0, s)));
        out.push((spin_orbital(1, s), spin_orbital(1, s)));
        out.push((spin_orbital(0, s), spin_orbital(1, s)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyOptions {
    pub grid: MomentumGrid,
    /// 0 = exact expectations.
    pub shots: u64,
    pub seed: u64,
    /// Measure spin-up pairs only and double them.
    pub spin_symmetry: bool,
}

/// Reconstructed densities at one time.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub nuclear: NuclearDensity,
    pub joint: JointDensity,
    pub gamma: SpinSummedGamma,
    pub leakage: f64,
    pub n_pad: usize,
    pub measurement_sets: usize,
}

/// Nuclear density on the DFT grid and joint density on `r_nuc` from characteristic functions.
pub fn reconstruct_densities(
    state: &VibronicState,
    params: &ModelParams,
    orbitals: &OrbitalSet,
    r_nuc: &[f64],
    opts: &TomographyOptions,
) -> Result<TomographyResult> {
    let engine = CharacteristicEngine::new(state, opts.grid, params)?;
    let sample = |pair: Pair, stream: u64| {
        if opts.shots == 0 {
            engine.exact(pair)
        } else {
            engine.sampled(pair, opts.shots, opts.seed, stream)
        }
    };
    let c_n = sample(Pair::None, 0)?;
    let nuclear = reconstruct_nuclear_density(&c_n, &opts.grid.r_points())?;

    let pairs = density_pairs(opts.spin_symmetry);
    let factor = if opts.spin_symmetry { 2.0 } else { 1.0 };
    let n = r_nuc.len();
    let mut gamma = SpinSummedGamma {
        r_nuc: r_nuc.to_vec(),
        aa: vec![0.0; n],
        bb: vec![0.0; n],
        ab: vec![C0; n],
    };
    for (i, &(p, q)) in pairs.iter().enumerate() {
        let c = sample(Pair::Hopping(p, q), 1 + i as u64)?;
        let g = fourier_invert(&c, r_nuc);
        let (x, y) = (p / 2, q / 2);
        for (m, z) in g.into_iter().enumerate() {
            let z = z * factor;
            match (x, y) {
                (0, 0) => gamma.aa[m] += z.re,
                (1, 1) => gamma.bb[m] += z.re,
                _ => gamma.ab[m] += z,
            }
        }
    }
    let joint = joint_density(&gamma, orbitals)?;
    let min = joint.rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let peak = joint.rho.iter().cloned().fold(0.0f64, f64::max);
    if min < -1e-3 * peak.max(1.0) && opts.shots == 0 {
        return Err(Error::Density(format!("joint density reaches {min:e}")));
    }
    Ok(TomographyResult {
        nuclear,
        joint,
        gamma,
        leakage: engine.leakage,
        n_pad: engine.n_pad,
        measurement_sets: measurement_set_count(opts.spin_symmetry),
    })
}

pub fn rdm1_csv(rdm: &Rdm1, t: f64) -> CsvTable {
    let mut table = CsvTable::new(vec!["p".into(), "q".into(), "re".into(), "im".into()])
        .with_comment(format!(
            "t = {t}; spin orbitals 1..4 = a-up, a-down, b-up, b-down; N_e = {N_ELECTRONS}"
        ));
    let n = rdm.0.nrows();
    for p in 0..n {
        for q in 0..n {
            let z = rdm.0[[p, q]];
            table.push(vec![
                (p + 1).to_string(),
                (q + 1).to_string(),
                crate::io::fmt_full(z.re),
                crate::io::fmt_full(z.im),
            ]);
        }
    }
    table
}
