//! Joint electron-nuclear and nuclear densities, shared by the statevector,
//! tomography and Born-Oppenheimer paths.

use log::warn;
use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::electronic::{ModelParams, OrbitalSet};
use crate::engine::{nuclear_wavefunction, VibronicState};
use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, spin_orbital, FermionTerm};
use crate::grid::left_side_weight;
use crate::io::CsvTable;

/// Electron count; joint densities integrate to this value.
pub const N_ELECTRONS: f64 = 2.0;

/// Relative tolerance for treating two coordinate grids as identical.
const GRID_TOL: f64 = 1e-9;

/// Spin-summed one-electron density matrix over the spatial orbitals {a, b}
/// as a function of the nuclear coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSummedGamma {
    pub r_nuc: Vec<f64>,
    pub aa: Vec<f64>,
    pub bb: Vec<f64>,
    /// <a†_a a_b> summed over spin; the (b, a) element is its conjugate.
    pub ab: Vec<Complex64>,
}

impl SpinSummedGamma {
    /// Nuclear density: the trace divided by the electron count.
    pub fn nuclear(&self) -> Vec<f64> {
        self.aa
            .iter()
            .zip(&self.bb)
            .map(|(a, b)| (a + b) / N_ELECTRONS)
            .collect()
    }
}

/// Qubit-space matrices of sum_sigma a†_{x sigma} a_{y sigma} for (x, y) = (a, a), (b, b), (a, b).
pub fn spin_summed_operators(n_qubits: usize) -> Result<[Array2<Complex64>; 3]> {
    if n_qubits != 4 {
        return Err(Error::InvalidParameter(format!(
            "spin-summed densities need 4 qubits (two spatial orbitals), got {n_qubits}"
        )));
    }
    let op = |x: usize, y: usize| -> Result<Array2<Complex64>> {
        let mut m = Array2::zeros((16, 16));
        for spin in 0..2 {
            let term = FermionTerm::hopping(spin_orbital(x, spin), spin_orbital(y, spin));
            m = m + jordan_wigner(&term, n_qubits)?.matrix()?;
        }
        Ok(m)
    };
    Ok([op(0, 0)?, op(1, 1)?, op(0, 1)?])
}

fn quadratic(psi: &[Complex64], m: &Array2<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((i, j), &x) in m.indexed_iter() {
        if x != Complex64::new(0.0, 0.0) {
            acc += psi[i].conj() * x * psi[j];
        }
    }
    acc
}

/// Gamma(R) from sector amplitudes psi_s(R) (rows: R points, columns: qubit sectors).
pub fn gamma_from_sector_amplitudes(
    r_nuc: &[f64],
    amps: &Array2<Complex64>,
) -> Result<SpinSummedGamma> {
    if amps.nrows() != r_nuc.len() {
        return Err(Error::DimensionMismatch {
            expected: r_nuc.len(),
            got: amps.nrows(),
        });
    }
    if amps.ncols() != 16 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            got: amps.ncols(),
        });
    }
    let [g_aa, g_bb, g_ab] = spin_summed_operators(4)?;
    let mut out = SpinSummedGamma {
        r_nuc: r_nuc.to_vec(),
        aa: Vec::with_capacity(r_nuc.len()),
        bb: Vec::with_capacity(r_nuc.len()),
        ab: Vec::with_capacity(r_nuc.len()),
    };
    for row in amps.rows() {
        let psi: Vec<Complex64> = row.to_vec();
        out.aa.push(quadratic(&psi, &g_aa).re);
        out.bb.push(quadratic(&psi, &g_bb).re);
        out.ab.push(quadratic(&psi, &g_ab));
    }
    Ok(out)
}

/// rho(r, R) on an electron grid times a nuclear grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    pub r: Vec<f64>,
    pub r_nuc: Vec<f64>,
    /// Rows: nuclear points; columns: electron points.
    pub rho: Array2<f64>,
    /// Integral before normalization to the electron count.
    pub raw_integral: f64,
}

fn spacing(x: &[f64]) -> f64 {
    if x.len() < 2 {
        1.0
    } else {
        (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= GRID_TOL * x.abs().max(y.abs()).max(1.0))
}

impl JointDensity {
    pub fn cell(&self) -> f64 {
        spacing(&self.r) * spacing(&self.r_nuc)
    }

    pub fn integral(&self) -> f64 {
        self.rho.sum() * self.cell()
    }

    fn side_fraction(&self, sign: f64) -> f64 {
        let h = spacing(&self.r);
        let mut part = 0.0;
        for row in self.rho.rows() {
            for (x, v) in self.r.iter().zip(row) {
                part += left_side_weight(sign * x, h) * v;
            }
        }
        part / self.rho.sum()
    }

    /// Fraction of the electron density at r < 0 (a point at r = 0 counts half).
    pub fn left_fraction(&self) -> f64 {
        self.side_fraction(1.0)
    }

    /// Fraction of the electron density at r > 0 (a point at r = 0 counts half).
    pub fn right_fraction(&self) -> f64 {
        self.side_fraction(-1.0)
    }

    /// Integral over r divided by the electron count.
    pub fn nuclear_marginal(&self) -> Vec<f64> {
        let dr = spacing(&self.r);
        self.rho
            .rows()
            .into_iter()
            .map(|row| row.sum() * dr / N_ELECTRONS)
            .collect()
    }

    /// Integral of |rho_A - rho_B| over both coordinates.
    pub fn l1(&self, other: &JointDensity) -> Result<f64> {
        if !same_grid(&self.r, &other.r) || !same_grid(&self.r_nuc, &other.r_nuc) {
            return Err(Error::Compare(
                "joint densities are on different grids".into(),
            ));
        }
        Ok((&self.rho - &other.rho).mapv(f64::abs).sum() * self.cell())
    }

    pub fn to_csv(&self, t: f64, source: &str) -> CsvTable {
        let mut table = CsvTable::new(vec!["r".into(), "R".into(), "rho".into()]).with_comment(
            format!("t = {t}; source: {source}; integral normalized to {N_ELECTRONS}"),
        );
        for (i, big) in self.r_nuc.iter().enumerate() {
            for (j, small) in self.r.iter().enumerate() {
                table.push_f64(&[*small, *big, self.rho[[i, j]]]);
            }
        }
        table
    }

    /// Reads the r-fastest layout written by [`JointDensity::to_csv`].
    pub fn from_csv(table: &CsvTable) -> Result<Self> {
        let r_all = table.column_f64("r")?;
        let big_all = table.column_f64("R")?;
        let rho_all = table.column_f64("rho")?;
        if r_all.is_empty() {
            return Err(Error::Density("empty joint density table".into()));
        }
        let nr = r_all
            .iter()
            .skip(1)
            .position(|&x| x == r_all[0])
            .map_or(r_all.len(), |p| p + 1);
        if r_all.len() % nr != 0 {
            return Err(Error::Density(
                "joint density table is not a full grid".into(),
            ));
        }
        let n_nuc = r_all.len() / nr;
        let r = r_all[..nr].to_vec();
        let r_nuc: Vec<f64> = (0..n_nuc).map(|i| big_all[i * nr]).collect();
        for i in 0..n_nuc {
            if !same_grid(&r_all[i * nr..(i + 1) * nr], &r)
                || big_all[i * nr..(i + 1) * nr].iter().any(|&x| x != r_nuc[i])
            {
                return Err(Error::Density(
                    "joint density table is not r-fastest row-major".into(),
                ));
            }
        }
        let rho = Array2::from_shape_vec((n_nuc, nr), rho_all).expect("shape");
        let mut d = JointDensity {
            r,
            r_nuc,
            rho,
            raw_integral: 0.0,
        };
        d.raw_integral = d.integral();
        Ok(d)
    }
}

/// rho(r, R) = gamma_aa eta_a² + gamma_bb eta_b² + 2 Re(gamma_ab) eta_a eta_b,
/// normalized to the electron count. Orbitals are linearly interpolated in R.
pub fn joint_density(gamma: &SpinSummedGamma, orbitals: &OrbitalSet) -> Result<JointDensity> {
    let r = orbitals.electron_grid.points();
    let n_nuc = gamma.r_nuc.len();
    let mut rho = Array2::zeros((n_nuc, r.len()));
    let mut clamped_any = false;
    for (i, &big) in gamma.r_nuc.iter().enumerate() {
        let (eta, clamped) = orbitals.interpolate(big);
        clamped_any |= clamped;
        let (g_aa, g_bb, g_ab) = (gamma.aa[i], gamma.bb[i], gamma.ab[i].re);
        for j in 0..r.len() {
            let (a, b) = (eta[[j, 0]], eta[[j, 1]]);
            rho[[i, j]] = g_aa * a * a + g_bb * b * b + 2.0 * g_ab * a * b;
        }
    }
    if clamped_any {
        warn!(
            "density R grid [{}, {}] exceeds the orbital table [{}, {}]; orbitals clamped",
            gamma.r_nuc.first().unwrap_or(&0.0),
            gamma.r_nuc.last().unwrap_or(&0.0),
            orbitals.nuclear_grid.lo,
            orbitals.nuclear_grid.hi
        );
    }
    let mut d = JointDensity {
        r,
        r_nuc: gamma.r_nuc.clone(),
        rho,
        raw_integral: 0.0,
    };
    let raw = d.integral();
    if !(raw.is_finite() && raw > 0.0) {
        return Err(Error::Density(format!("joint density integral {raw}")));
    }
    d.rho.mapv_inplace(|x| x * N_ELECTRONS / raw);
    d.raw_integral = raw;
    Ok(d)
}

/// Statevector joint density of a vibronic state.
pub fn exact_joint_density(
    state: &VibronicState,
    params: &ModelParams,
    orbitals: &OrbitalSet,
    r_nuc: &[f64],
) -> Result<JointDensity> {
    let wf = nuclear_wavefunction(state, params, r_nuc);
    let gamma = gamma_from_sector_amplitudes(r_nuc, &wf.amplitudes)?;
    joint_density(&gamma, orbitals)
}

/// rho_n(R) on a nuclear grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NuclearDensity {
    pub r_nuc: Vec<f64>,
    pub rho: Vec<f64>,
}

impl NuclearDensity {
    pub fn integral(&self) -> f64 {
        self.rho.iter().sum::<f64>() * spacing(&self.r_nuc)
    }

    pub fn l1(&self, other: &NuclearDensity) -> Result<f64> {
        if !same_grid(&self.r_nuc, &other.r_nuc) {
            return Err(Error::Compare(
                "nuclear densities are on different grids".into(),
            ));
        }
        Ok(self
            .rho
            .iter()
            .zip(&other.rho)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * spacing(&self.r_nuc))
    }

    pub fn to_csv(&self, t: f64, source: &str) -> CsvTable {
        let mut table = CsvTable::new(vec!["R".into(), "rho".into()])
            .with_comment(format!("t = {t}; source: {source}"));
        for (x, v) in self.r_nuc.iter().zip(&self.rho) {
            table.push_f64(&[*x, *v]);
        }
        table
    }

    pub fn from_csv(table: &CsvTable) -> Result<Self> {
        Ok(NuclearDensity {
            r_nuc: table.column_f64("R")?,
            rho: table.column_f64("rho")?,
        })
    }
}

/// Statevector nuclear density sum_s |psi_s(R)|².
pub fn exact_nuclear_density(
    state: &VibronicState,
    params: &ModelParams,
    r_nuc: &[f64],
) -> NuclearDensity {
    let wf = nuclear_wavefunction(state, params, r_nuc);
    NuclearDensity {
        r_nuc: r_nuc.to_vec(),
        rho: wf.density,
    }
}

/// Uniform grid helper used for density outputs.
pub fn uniform_points(lo: f64, hi: f64, n: usize) -> Array1<f64> {
    Array1::linspace(lo, hi, n)
}
