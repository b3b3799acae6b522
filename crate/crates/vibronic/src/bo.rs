//! Born-Oppenheimer reference: CSF Hamiltonian, BO surfaces and
//! nonadiabatic couplings, Born-Huang dynamics on a sinc-DVR grid, group-BO
//! truncation, BO-frame densities, and CSF counting.

use std::f64::consts::SQRT_2;

use log::warn;
use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{gamma_from_sector_amplitudes, joint_density, JointDensity, NuclearDensity};
use crate::electronic::{nuclear_potential, IntegralLabel, ModelParams, OrbitalSet, TaylorFit};
use crate::error::{Error, Result};
use crate::grid::{
    interp_weights, sinc_dvr_first_derivative, sinc_dvr_second_derivative, SpatialGrid,
};
use crate::io::CsvTable;
use crate::linalg::eigh;

/// Largest Born-Huang matrix dimension accepted.
pub const BH_DIMENSION_GUARD: usize = 6000;
/// Largest initial-state weight that may be discarded by a state subset.
pub const MAX_DISCARDED_WEIGHT: f64 = 0.05;

pub type Mat3 = [[f64; 3]; 3];

/// Electronic CSF matrix in the basis (|1100>, |0011>, open-shell singlet).
pub fn csf_electronic_matrix(fit: &TaylorFit, r_nuc: f64) -> Result<Mat3> {
    fit.require_all()?;
    let v = |l: IntegralLabel| fit.value(l, r_nuc).unwrap();
    use IntegralLabel::*;
    let h11 = 2.0 * v(Haa) + v(Vaaaa);
    let h12 = v(Vaabb);
    let h13 = SQRT_2 * (v(Hab) + v(Vaaab));
    let h22 = 2.0 * v(Hbb) + v(Vbbbb);
    let h23 = SQRT_2 * (v(Hab) + v(Vabbb));
    let h33 = v(Haa) + v(Hbb) + v(Vabab) + v(Vaabb);
    Ok([[h11, h12, h13], [h12, h22, h23], [h13, h23, h33]])
}

/// d/dR of the electronic CSF matrix (the fits are linear in R).
pub fn csf_electronic_slope(fit: &TaylorFit) -> Result<Mat3> {
    let a = csf_electronic_matrix(fit, 0.0)?;
    let b = csf_electronic_matrix(fit, 1.0)?;
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = b[i][j] - a[i][j];
        }
    }
    Ok(d)
}

/// Electronic CSF matrix plus the nuclear harmonic potential on the diagonal.
pub fn csf_hamiltonian(fit: &TaylorFit, params: &ModelParams, r_nuc: f64) -> Result<Mat3> {
    let mut h = csf_electronic_matrix(fit, r_nuc)?;
    let vn = nuclear_potential(params, r_nuc);
    for (i, row) in h.iter_mut().enumerate() {
        row[i] += vn;
    }
    Ok(h)
}

fn mat3_to_array(m: &Mat3) -> Array2<f64> {
    Array2::from_shape_fn((3, 3), |(i, j)| m[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NacMethod {
    /// Hellmann-Feynman form <i|H'|j> / (E_j - E_i).
    Analytic,
    /// Central differences of the sign-continuous eigenvectors.
    FiniteDifference,
}

/// BO energies, CSF->BO rotations and couplings along a nuclear grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoSurfaces {
    pub grid: SpatialGrid,
    /// Ascending per point.
    pub energies: Vec<[f64; 3]>,
    /// vectors[k][csf][state].
    pub vectors: Vec<Mat3>,
    /// nacs[k][i][j] = <i | d/dR j>, antisymmetric.
    pub nacs: Vec<Mat3>,
}

fn diagonalize3(h: &Mat3) -> Result<([f64; 3], Mat3)> {
    let (w, v) = eigh(&mat3_to_array(h))?;
    let mut u = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            u[i][j] = v[[i, j]];
        }
    }
    Ok(([w[0], w[1], w[2]], u))
}

/// Diagonalizes the CSF Hamiltonian pointwise. Column signs follow the
/// previous point; the first point makes each column's largest component
/// positive (ties resolved by the CSF-1 amplitude).
pub fn diagonalize_bo(
    fit: &TaylorFit,
    params: &ModelParams,
    grid: &SpatialGrid,
    method: NacMethod,
) -> Result<BoSurfaces> {
    grid.validate()?;
    let mut energies = Vec::with_capacity(grid.n);
    let mut vectors: Vec<Mat3> = Vec::with_capacity(grid.n);
    for r in grid.points() {
        let (e, mut u) = diagonalize3(&csf_hamiltonian(fit, params, r)?)?;
        for j in 0..3 {
            let flip = match vectors.last() {
                Some(prev) => (0..3).map(|i| prev[i][j] * u[i][j]).sum::<f64>() < 0.0,
                None => {
                    let imax = (0..3)
                        .max_by(|&a, &b| u[a][j].abs().total_cmp(&u[b][j].abs()).then(b.cmp(&a)))
                        .unwrap();
                    let lead = if (u[imax][j].abs() - u[0][j].abs()).abs() < 1e-12 {
                        u[0][j]
                    } else {
                        u[imax][j]
                    };
                    lead < 0.0
                }
            };
            if flip {
                for row in u.iter_mut() {
                    row[j] = -row[j];
                }
            }
        }
        energies.push(e);
        vectors.push(u);
    }
    let nacs = match method {
        NacMethod::Analytic => analytic_nacs(fit, params, grid, &energies, &vectors)?,
        NacMethod::FiniteDifference => finite_difference_nacs(grid, &vectors),
    };
    let h = grid.spacing();
    let peak = nacs
        .iter()
        .flat_map(|d| d.iter().flatten())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if peak * h > 0.5 {
        warn!("NAC peak {peak:.3} is undersampled by the R spacing {h:.3e}; refine the grid");
    }
    Ok(BoSurfaces {
        grid: *grid,
        energies,
        vectors,
        nacs,
    })
}

fn analytic_nacs(
    fit: &TaylorFit,
    params: &ModelParams,
    grid: &SpatialGrid,
    energies: &[[f64; 3]],
    vectors: &[Mat3],
) -> Result<Vec<Mat3>> {
    let slope = csf_electronic_slope(fit)?;
    let mut out = Vec::with_capacity(grid.n);
    for (k, r) in grid.points().into_iter().enumerate() {
        let mut hp = slope;
        for (i, row) in hp.iter_mut().enumerate() {
            row[i] += params.spring * r;
        }
        let u = &vectors[k];
        let mut d = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let mut num = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        num += u[a][i] * hp[a][b] * u[b][j];
                    }
                }
                let gap = energies[k][j] - energies[k][i];
                if gap.abs() < 1e-14 {
                    return Err(Error::Degenerate(format!(
                        "BO states {i} and {j} at R = {r}"
                    )));
                }
                d[i][j] = num / gap;
            }
        }
        out.push(antisymmetrize(&d));
    }
    Ok(out)
}

fn finite_difference_nacs(grid: &SpatialGrid, vectors: &[Mat3]) -> Vec<Mat3> {
    let n = grid.n;
    let h = grid.spacing();
    (0..n)
        .map(|k| {
            let (lo, hi, span) = if k == 0 {
                (0, 1, h)
            } else if k + 1 == n {
                (n - 2, n - 1, h)
            } else {
                (k - 1, k + 1, 2.0 * h)
            };
            let mut d = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    d[i][j] = (0..3)
                        .map(|a| vectors[k][a][i] * (vectors[hi][a][j] - vectors[lo][a][j]) / span)
                        .sum();
                }
            }
            antisymmetrize(&d)
        })
        .collect()
}

fn antisymmetrize(d: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = 0.5 * (d[i][j] - d[j][i]);
        }
    }
    out
}

pub fn surfaces_csv(s: &BoSurfaces) -> CsvTable {
    let header = ["R", "E1", "E2", "E3", "D12", "D13", "D23"];
    let mut t = CsvTable::new(header.iter().map(|h| h.to_string()).collect());
    for (k, r) in s.grid.points().into_iter().enumerate() {
        let e = s.energies[k];
        let d = s.nacs[k];
        t.push_f64(&[r, e[0], e[1], e[2], d[0][1], d[0][2], d[1][2]]);
    }
    t
}

/// Parses a 1-based state list such as "2,3" into sorted 0-based indices.
pub fn parse_states(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let i: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad BO state `{part}`")))?;
        if !(1..=3).contains(&i) {
            return Err(Error::InvalidParameter(format!(
                "BO state {i} outside 1..3"
            )));
        }
        if out.contains(&(i - 1)) {
            return Err(Error::InvalidParameter(format!("BO state {i} repeated")));
        }
        out.push(i - 1);
    }
    out.sort_unstable();
    if out.is_empty() {
        return Err(Error::InvalidParameter("empty BO state subset".into()));
    }
    Ok(out)
}

/// Born-Huang Hamiltonian restricted to a subset of BO states.
#[derive(Debug, Clone)]
pub struct BhHamiltonian {
    pub states: Vec<usize>,
    pub n_grid: usize,
    pub matrix: Array2<f64>,
}

impl BhHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_full(&self) -> bool {
        self.states.len() == 3
    }
}

/// Block (a, b) = delta_ab (T + E_a) - (1/2M)(K1 D_ab + D_ab K1) - (1/2M)(D²)_ab,
/// with K1 the sinc-DVR d/dR matrix, T the sinc-DVR kinetic energy and D²
/// summed over the subset. Equivalent to -(1/M) D d/dR - (1/2M)(dD/dR + D²).
pub fn build_bh_hamiltonian(
    surfaces: &BoSurfaces,
    params: &ModelParams,
    states: &[usize],
) -> Result<BhHamiltonian> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("empty BO state subset".into()));
    }
    if states.iter().any(|&s| s >= 3) {
        return Err(Error::IndexOutOfRange("BO state index".into()));
    }
    let n = surfaces.grid.n;
    let dim = n * states.len();
    if dim > BH_DIMENSION_GUARD {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: BH_DIMENSION_GUARD,
        });
    }
    let h = surfaces.grid.spacing();
    let m = params.mass;
    let k2 = sinc_dvr_second_derivative(n, h);
    let k1 = sinc_dvr_first_derivative(n, h);
    let mut out = Array2::zeros((dim, dim));
    for (ia, &a) in states.iter().enumerate() {
        for (ib, &b) in states.iter().enumerate() {
            let mut block = out.slice_mut(ndarray::s![ia * n..(ia + 1) * n, ib * n..(ib + 1) * n]);
            if a == b {
                block.assign(&(&k2 * (-0.5 / m)));
                for i in 0..n {
                    block[[i, i]] += surfaces.energies[i][a];
                }
            }
            if a != b {
                for i in 0..n {
                    for j in 0..n {
                        let dab_i = surfaces.nacs[i][a][b];
                        let dab_j = surfaces.nacs[j][a][b];
                        block[[i, j]] -= (k1[[i, j]] * dab_j + dab_i * k1[[i, j]]) / (2.0 * m);
                    }
                }
            }
            for i in 0..n {
                let d2: f64 = states
                    .iter()
                    .map(|&c| surfaces.nacs[i][a][c] * surfaces.nacs[i][c][b])
                    .sum();
                block[[i, i]] -= d2 / (2.0 * m);
            }
        }
    }
    let asym = (&out - &out.t())
        .mapv(f64::abs)
        .fold(0.0f64, |x, &y| x.max(y));
    if asym > 1e-10 {
        return Err(Error::NotHermitian(asym));
    }
    let sym = (&out + &out.t()) * 0.5;
    Ok(BhHamiltonian {
        states: states.to_vec(),
        n_grid: n,
        matrix: sym,
    })
}

/// Wavepacket on the DVR grid, block-ordered by BO state; sum |c|² = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DvrState {
    pub states: Vec<usize>,
    pub n_grid: usize,
    pub amplitudes: Array1<Complex64>,
}

impl DvrState {
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn amp(&self, state_slot: usize, i: usize) -> Complex64 {
        self.amplitudes[state_slot * self.n_grid + i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoInitialState {
    pub state: DvrState,
    pub discarded_weight: f64,
}

/// Displaced Gaussian times the |1100> configuration, rotated to BO states
/// pointwise and projected on the subset.
pub fn initial_state_bo(
    r0: f64,
    params: &ModelParams,
    surfaces: &BoSurfaces,
    states: &[usize],
) -> Result<BoInitialState> {
    let n = surfaces.grid.n;
    let sigma2 = 1.0 / (2.0 * params.mass * params.omega());
    let chi: Vec<f64> = surfaces
        .grid
        .points()
        .iter()
        .map(|r| (-(r - r0) * (r - r0) / (4.0 * sigma2)).exp())
        .collect();
    let norm = chi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let edge = (chi[0] / norm).powi(2).max((chi[n - 1] / norm).powi(2));
    if edge > 1e-6 {
        warn!("initial wavepacket has {edge:e} probability at the DVR boundary");
    }
    let mut amps = Array1::zeros(n * states.len());
    let mut kept = 0.0;
    for (slot, &j) in states.iter().enumerate() {
        for i in 0..n {
            let c = surfaces.vectors[i][0][j] * chi[i] / norm;
            amps[slot * n + i] = Complex64::new(c, 0.0);
            kept += c * c;
        }
    }
    let discarded = (1.0 - kept).max(0.0);
    if discarded > MAX_DISCARDED_WEIGHT {
        return Err(Error::DiscardedWeight(discarded));
    }
    let s = kept.sqrt();
    amps.mapv_inplace(|a| a / s);
    Ok(BoInitialState {
        state: DvrState {
            states: states.to_vec(),
            n_grid: n,
            amplitudes: amps,
        },
        discarded_weight: discarded,
    })
}

/// Spectral propagator of a Born-Huang Hamiltonian.
pub struct BhPropagator {
    pub energies: Array1<f64>,
    pub vectors: Array2<f64>,
    states: Vec<usize>,
    n_grid: usize,
}

impl BhPropagator {
    pub fn new(h: &BhHamiltonian) -> Result<Self> {
        let (energies, vectors) = eigh(&h.matrix)?;
        Ok(BhPropagator {
            energies,
            vectors,
            states: h.states.clone(),
            n_grid: h.n_grid,
        })
    }

    /// States at all requested times via one pair of real matrix products.
    pub fn propagate(&self, psi0: &DvrState, times: &[f64]) -> Result<Vec<DvrState>> {
        if psi0.amplitudes.len() != self.vectors.nrows() || psi0.states != self.states {
            return Err(Error::DimensionMismatch {
                expected: self.vectors.nrows(),
                got: psi0.amplitudes.len(),
            });
        }
        let re0 = psi0.amplitudes.mapv(|a| a.re);
        let im0 = psi0.amplitudes.mapv(|a| a.im);
        let c_re = self.vectors.t().dot(&re0);
        let c_im = self.vectors.t().dot(&im0);
        let nt = times.len();
        let dim = self.energies.len();
        let mut ev_re = Array2::zeros((dim, nt));
        let mut ev_im = Array2::zeros((dim, nt));
        for (col, &t) in times.iter().enumerate() {
            for j in 0..dim {
                let ph = Complex64::from_polar(1.0, -self.energies[j] * t);
                let c = Complex64::new(c_re[j], c_im[j]) * ph;
                ev_re[[j, col]] = c.re;
                ev_im[[j, col]] = c.im;
            }
        }
        let out_re = self.vectors.dot(&ev_re);
        let out_im = self.vectors.dot(&ev_im);
        Ok((0..nt)
            .map(|col| DvrState {
                states: self.states.clone(),
                n_grid: self.n_grid,
                amplitudes: out_re
                    .index_axis(Axis(1), col)
                    .iter()
                    .zip(out_im.index_axis(Axis(1), col).iter())
                    .map(|(&r, &i)| Complex64::new(r, i))
                    .collect(),
            })
            .collect())
    }

    pub fn energy(&self, psi: &DvrState) -> f64 {
        let re = psi.amplitudes.mapv(|a| a.re);
        let im = psi.amplitudes.mapv(|a| a.im);
        let c_re = self.vectors.t().dot(&re);
        let c_im = self.vectors.t().dot(&im);
        (0..self.energies.len())
            .map(|j| self.energies[j] * (c_re[j] * c_re[j] + c_im[j] * c_im[j]))
            .sum()
    }
}

/// CSF amplitudes c(R_i) = sum_j U[i][., j] chi_j(R_i), rows = grid points.
pub fn csf_amplitudes(psi: &DvrState, surfaces: &BoSurfaces) -> Array2<Complex64> {
    let n = psi.n_grid;
    let mut out = Array2::zeros((n, 3));
    for (slot, &j) in psi.states.iter().enumerate() {
        for i in 0..n {
            let a = psi.amp(slot, i);
            for csf in 0..3 {
                out[[i, csf]] += a * surfaces.vectors[i][csf][j];
            }
        }
    }
    out
}

/// Spin-orbital occupations (a-up, a-down, b-up, b-down) from CSF weights.
pub fn bo_fon(psi: &DvrState, surfaces: &BoSurfaces) -> [f64; 4] {
    let c = csf_amplitudes(psi, surfaces);
    let (mut w1, mut w2, mut w3) = (0.0, 0.0, 0.0);
    for row in c.rows() {
        w1 += row[0].norm_sqr();
        w2 += row[1].norm_sqr();
        w3 += row[2].norm_sqr();
    }
    let fa = w1 + 0.5 * w3;
    let fb = w2 + 0.5 * w3;
    [fa, fa, fb, fb]
}

/// <R> and <R²> of a DVR wavepacket.
pub fn bo_position_moments(psi: &DvrState, surfaces: &BoSurfaces) -> (f64, f64) {
    let r = surfaces.grid.points();
    let (mut m1, mut m2) = (0.0, 0.0);
    for slot in 0..psi.states.len() {
        for (i, x) in r.iter().enumerate() {
            let p = psi.amp(slot, i).norm_sqr();
            m1 += p * x;
            m2 += p * x * x;
        }
    }
    (m1, m2)
}

/// Qubit-sector wavefunction psi_s(R) (per unit length) at the DVR points:
/// |1100> = c1, |0011> = c2, |1001> = c3/sqrt2, |0110> = -c3/sqrt2.
pub fn sector_amplitudes(psi: &DvrState, surfaces: &BoSurfaces) -> Array2<Complex64> {
    let c = csf_amplitudes(psi, surfaces);
    let scale = 1.0 / surfaces.grid.spacing().sqrt();
    let mut out = Array2::zeros((psi.n_grid, 16));
    for i in 0..psi.n_grid {
        out[[i, 0b1100]] = c[[i, 0]] * scale;
        out[[i, 0b0011]] = c[[i, 1]] * scale;
        out[[i, 0b1001]] = c[[i, 2]] * (scale / SQRT_2);
        out[[i, 0b0110]] = -c[[i, 2]] * (scale / SQRT_2);
    }
    out
}

fn interpolate_rows(
    grid: &SpatialGrid,
    values: &Array2<Complex64>,
    r_points: &[f64],
) -> Array2<Complex64> {
    let mut out = Array2::zeros((r_points.len(), values.ncols()));
    for (k, &r) in r_points.iter().enumerate() {
        let (i, w, clamped) = interp_weights(grid, r);
        if clamped {
            continue;
        }
        for c in 0..values.ncols() {
            out[[k, c]] = values[[i, c]] * (1.0 - w) + values[[i + 1, c]] * w;
        }
    }
    out
}

/// Joint density of a BO wavepacket on the requested nuclear points.
pub fn bo_joint_density(
    psi: &DvrState,
    surfaces: &BoSurfaces,
    orbitals: &OrbitalSet,
    r_points: &[f64],
) -> Result<JointDensity> {
    let sectors = interpolate_rows(&surfaces.grid, &sector_amplitudes(psi, surfaces), r_points);
    let gamma = gamma_from_sector_amplitudes(r_points, &sectors)?;
    joint_density(&gamma, orbitals)
}

/// Nuclear density sum over states of |chi_j(R)|² / dR, interpolated.
pub fn bo_nuclear_density(
    psi: &DvrState,
    surfaces: &BoSurfaces,
    r_points: &[f64],
) -> NuclearDensity {
    let n = psi.n_grid;
    let h = surfaces.grid.spacing();
    let dens: Array2<Complex64> = Array2::from_shape_fn((n, 1), |(i, _)| {
        Complex64::new(
            (0..psi.states.len())
                .map(|s| psi.amp(s, i).norm_sqr())
                .sum::<f64>()
                / h,
            0.0,
        )
    });
    let v = interpolate_rows(&surfaces.grid, &dens, r_points);
    NuclearDensity {
        r_nuc: r_points.to_vec(),
        rho: v.column(0).iter().map(|z| z.re).collect(),
    }
}

/// Number of spin-adapted configurations with total spin two_s/2 for
/// n_electrons in n_spin_orbitals/2 spatial orbitals.
pub fn weyl_count(two_s: u32, n_spin_orbitals: u32, n_electrons: u32) -> Result<u128> {
    if !n_spin_orbitals.is_multiple_of(2) {
        return Err(Error::Parity(format!(
            "orbital count {n_spin_orbitals} must be even"
        )));
    }
    if n_electrons > n_spin_orbitals {
        return Err(Error::InvalidParameter(format!(
            "{n_electrons} electrons exceed {n_spin_orbitals} spin orbitals"
        )));
    }
    if two_s > n_electrons || !(n_electrons - two_s).is_multiple_of(2) {
        return Err(Error::Parity(format!(
            "2S = {two_s} incompatible with {n_electrons} electrons"
        )));
    }
    let n = (n_spin_orbitals / 2) as u128;
    let lower = ((n_electrons - two_s) / 2) as u128;
    let upper = lower + two_s as u128 + 1;
    let num = (two_s as u128 + 1) * binomial(n + 1, lower) * binomial(n + 1, upper);
    if !num.is_multiple_of(n + 1) {
        return Err(Error::Parity("non-integer CSF count".into()));
    }
    Ok(num / (n + 1))
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_fit() -> TaylorFit {
        use IntegralLabel::*;
        TaylorFit::from_coefficients(&[
            (Haa, -2.66, 0.2),
            (Hbb, -2.66, -0.2),
            (Hab, -0.005, 0.0),
            (Vaaaa, 0.2236, 0.0),
            (Vbbbb, 0.2236, 0.0),
            (Vabab, 0.1652, 0.0),
            (Vaaab, 1.8e-4, 0.0),
            (Vabbb, 1.7e-4, 0.0),
            (Vaabb, 1.5e-6, 0.0),
        ])
    }

    #[test]
    fn csf_matrix_entries() {
        let h = csf_electronic_matrix(&toy_fit(), 0.0).unwrap();
        assert!((h[0][0] - (2.0 * -2.66 + 0.2236)).abs() < 1e-12);
        assert!((h[0][1] - 1.5e-6).abs() < 1e-18);
        assert!((h[1][2] - SQRT_2 * (-0.005 + 1.7e-4)).abs() < 1e-15);
    }

    #[test]
    fn surfaces_ordered_orthogonal_antisymmetric() {
        let p = ModelParams::default();
        let g = SpatialGrid::new(-1.0, 1.0, 201).unwrap();
        let s = diagonalize_bo(&toy_fit(), &p, &g, NacMethod::Analytic).unwrap();
        for k in 0..g.n {
            let e = s.energies[k];
            assert!(e[0] <= e[1] && e[1] <= e[2]);
            let u = s.vectors[k];
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|a| u[a][i] * u[a][j]).sum();
                    assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                    assert!((s.nacs[k][i][j] + s.nacs[k][j][i]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn analytic_and_finite_difference_nacs_agree() {
        let p = ModelParams::default();
        let g = SpatialGrid::new(-1.0, 1.0, 10001).unwrap();
        let a = diagonalize_bo(&toy_fit(), &p, &g, NacMethod::Analytic).unwrap();
        let f = diagonalize_bo(&toy_fit(), &p, &g, NacMethod::FiniteDifference).unwrap();
        for k in 1..g.n - 1 {
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let (x, y) = (a.nacs[k][i][j], f.nacs[k][i][j]);
                assert!(
                    (x - y).abs() < 1e-2 * (1.0 + x.abs()),
                    "R index {k}: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn weyl_examples() {
        assert_eq!(weyl_count(0, 4, 2).unwrap(), 3);
        assert_eq!(weyl_count(0, 2, 2).unwrap(), 1);
        assert_eq!(weyl_count(0, 12, 4).unwrap(), 105);
        assert!(weyl_count(1, 4, 2).is_err());
        assert!(weyl_count(0, 5, 2).is_err());
    }

    #[test]
    fn state_subset_parsing() {
        assert_eq!(parse_states("2,3").unwrap(), vec![1, 2]);
        assert_eq!(parse_states("3, 1,2").unwrap(), vec![0, 1, 2]);
        assert!(parse_states("4").is_err());
        assert!(parse_states("2,2").is_err());
    }

    #[test]
    fn harmonic_dvr_spectrum() {
        let n = 301;
        let g = SpatialGrid::new(-1.0, 1.0, n).unwrap();
        let p = ModelParams::default();
        let surfaces = BoSurfaces {
            grid: g,
            energies: g
                .points()
                .iter()
                .map(|&r| [nuclear_potential(&p, r); 3])
                .collect(),
            vectors: vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]; n],
            nacs: vec![[[0.0; 3]; 3]; n],
        };
        let bh = build_bh_hamiltonian(&surfaces, &p, &[0]).unwrap();
        let (w, _) = eigh(&bh.matrix).unwrap();
        for m in 0..4 {
            let exact = p.omega() * (m as f64 + 0.5);
            assert!(
                (w[m] - exact).abs() < 1e-9,
                "level {m}: {} vs {exact}",
                w[m]
            );
        }
    }
}
