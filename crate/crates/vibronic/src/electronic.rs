//! Two-electron Shin-Metiu model: one-electron Hamiltonian on a real-space
//! grid, adiabatic and diabatic orbitals, and diabatic electron integrals.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{interp_weights, left_side_weight, sinc_dvr_kinetic, SpatialGrid};
use crate::io::{fmt_sig12, CsvTable};
use crate::linalg::eigh_lowest;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Nuclear mass.
    pub mass: f64,
    /// Harmonic spring constant of the moving ion.
    pub spring: f64,
    /// Separation of the fixed ions.
    pub ion_separation: f64,
    pub c_left: f64,
    pub c_right: f64,
    /// Softening of the moving-ion attraction.
    pub c_moving: f64,
    /// Softening of the electron-electron repulsion.
    pub c_electron: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            mass: 1836.0,
            spring: 4.0,
            ion_separation: 5.4,
            c_left: 0.3,
            c_right: 0.3,
            c_moving: 0.6,
            c_electron: 5.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("spring", self.spring),
            ("ion_separation", self.ion_separation),
            ("c_left", self.c_left),
            ("c_right", self.c_right),
            ("c_moving", self.c_moving),
            ("c_electron", self.c_electron),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Harmonic frequency sqrt(k/M).
    pub fn omega(&self) -> f64 {
        (self.spring / self.mass).sqrt()
    }
}

/// erf(|x|/c)/|x| with its x -> 0 limit 2/(c sqrt(pi)).
pub fn soft_coulomb(x: f64, c: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-12 {
        2.0 / (c * PI.sqrt())
    } else {
        libm::erf(ax / c) / ax
    }
}

/// Harmonic nuclear potential k R²/2.
pub fn nuclear_potential(params: &ModelParams, r_nuc: f64) -> f64 {
    0.5 * params.spring * r_nuc * r_nuc
}

/// Electron-ion attraction on the electron grid for the moving ion at `r_nuc`.
pub fn h1e_potential(grid: &SpatialGrid, params: &ModelParams, r_nuc: f64) -> Vec<f64> {
    let half = 0.5 * params.ion_separation;
    grid.points()
        .iter()
        .map(|&r| {
            -soft_coulomb(r - r_nuc, params.c_moving)
                - soft_coulomb(r - half, params.c_right)
                - soft_coulomb(r + half, params.c_left)
        })
        .collect()
}

fn check_electron_grid(grid: &SpatialGrid, params: &ModelParams, r_nuc: f64) -> Result<()> {
    grid.validate()?;
    params.validate()?;
    let half = 0.5 * params.ion_separation;
    if grid.lo > -half - 3.0 || grid.hi < half + 3.0 {
        return Err(Error::Grid(format!(
            "electron grid [{}, {}] must extend 3 a.u. beyond the fixed ions at ±{half}",
            grid.lo, grid.hi
        )));
    }
    if !r_nuc.is_finite() || r_nuc.abs() >= half {
        return Err(Error::InvalidParameter(format!(
            "moving-ion position {r_nuc} must lie between the fixed ions"
        )));
    }
    Ok(())
}

/// One-electron Hamiltonian (sinc-DVR kinetic plus the three attraction wells).
pub fn build_h1e(grid: &SpatialGrid, params: &ModelParams, r_nuc: f64) -> Result<Array2<f64>> {
    check_electron_grid(grid, params, r_nuc)?;
    let mut h = sinc_dvr_kinetic(grid.n, grid.spacing(), 1.0);
    for (i, v) in h1e_potential(grid, params, r_nuc).into_iter().enumerate() {
        h[[i, i]] += v;
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("one-electron Hamiltonian".into()));
    }
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct AdiabaticPair {
    pub energies: [f64; 2],
    /// n x 2, columns normalized so that sum |psi|² dx = 1.
    pub orbitals: Array2<f64>,
}

/// Two lowest eigenpairs of `h1e`, normalized on the grid, positive at max |psi|.
pub fn solve_adiabatic_orbitals(h1e: &Array2<f64>, dx: f64) -> Result<AdiabaticPair> {
    let (e, v) = eigh_lowest(h1e, 2)?;
    let gap = e[1] - e[0];
    if gap.abs() < 1e-10 * e[0].abs().max(1.0) {
        return Err(Error::Degenerate(format!(
            "lowest pair separated by {gap:e}"
        )));
    }
    let mut orb = v.mapv(|x| x / dx.sqrt());
    for mut col in orb.columns_mut() {
        let imax = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, &x)| {
                if x.abs() > acc.1 {
                    (i, x.abs())
                } else {
                    acc
                }
            })
            .0;
        if col[imax] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
    Ok(AdiabaticPair {
        energies: [e[0], e[1]],
        orbitals: orb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitalKind {
    Adiabatic,
    Diabatic,
}

/// Two real orbitals per nuclear grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitalSet {
    pub kind: OrbitalKind,
    pub electron_grid: SpatialGrid,
    pub nuclear_grid: SpatialGrid,
    /// One n_e x 2 block per nuclear grid point.
    pub orbitals: Vec<Array2<f64>>,
    /// Orbital energies (adiabatic sets only).
    pub energies: Option<Vec<[f64; 2]>>,
}

impl OrbitalSet {
    pub fn dx(&self) -> f64 {
        self.electron_grid.spacing()
    }

    pub fn overlap(&self, i_nuc: usize, p: usize, j_nuc: usize, q: usize) -> f64 {
        let a = self.orbitals[i_nuc].column(p);
        let b = self.orbitals[j_nuc].column(q);
        a.dot(&b) * self.dx()
    }

    /// Weight of orbital `k` at nuclear index `i` on r < 0.
    pub fn left_weight(&self, i: usize, k: usize) -> f64 {
        let r = self.electron_grid.points();
        let dx = self.dx();
        let col = self.orbitals[i].column(k);
        r.iter()
            .zip(col.iter())
            .map(|(&r, x)| left_side_weight(r, dx) * x * x)
            .sum::<f64>()
            * dx
    }

    /// Orbitals linearly interpolated to nuclear position `r_nuc`.
    /// Positions outside the table are clamped; the flag reports clamping.
    pub fn interpolate(&self, r_nuc: f64) -> (Array2<f64>, bool) {
        let (i, w, clamped) = interp_weights(&self.nuclear_grid, r_nuc);
        let out = &self.orbitals[i] * (1.0 - w) + &self.orbitals[i + 1] * w;
        (out, clamped)
    }
}

/// Adiabatic orbitals over the nuclear grid, sign-continuous along R.
pub fn adiabatic_orbital_set(
    params: &ModelParams,
    electron_grid: &SpatialGrid,
    nuclear_grid: &SpatialGrid,
) -> Result<OrbitalSet> {
    nuclear_grid.validate()?;
    let dx = electron_grid.spacing();
    let mut orbitals: Vec<Array2<f64>> = Vec::with_capacity(nuclear_grid.n);
    let mut energies = Vec::with_capacity(nuclear_grid.n);
    for r_nuc in nuclear_grid.points() {
        let h = build_h1e(electron_grid, params, r_nuc)?;
        let mut pair = solve_adiabatic_orbitals(&h, dx)?;
        if let Some(prev) = orbitals.last() {
            for k in 0..2 {
                if prev.column(k).dot(&pair.orbitals.column(k)) < 0.0 {
                    pair.orbitals.column_mut(k).mapv_inplace(|x| -x);
                }
            }
        }
        orbitals.push(pair.orbitals);
        energies.push(pair.energies);
    }
    Ok(OrbitalSet {
        kind: OrbitalKind::Adiabatic,
        electron_grid: *electron_grid,
        nuclear_grid: *nuclear_grid,
        orbitals,
        energies: Some(energies),
    })
}

/// Finite-difference <p|d/dR q> over the nuclear grid (central inside, one-sided at the ends).
pub fn derivative_coupling(set: &OrbitalSet, p: usize, q: usize) -> Vec<f64> {
    let n = set.nuclear_grid.n;
    let h = set.nuclear_grid.spacing();
    (0..n)
        .map(|i| {
            let (lo, hi, span) = stencil(i, n, h);
            let dq = (&set.orbitals[hi].column(q) - &set.orbitals[lo].column(q)) / span;
            set.orbitals[i].column(p).dot(&dq) * set.dx()
        })
        .collect()
}

fn stencil(i: usize, n: usize, h: f64) -> (usize, usize, f64) {
    if i == 0 {
        (0, 1, h)
    } else if i + 1 == n {
        (n - 2, n - 1, h)
    } else {
        (i - 1, i + 1, 2.0 * h)
    }
}

#[derive(Debug, Clone)]
pub struct Diabatization {
    pub orbitals: OrbitalSet,
    /// Rotation angle per nuclear grid point.
    pub mixing_angle: Vec<f64>,
}

/// Rotates the adiabatic pair into diabatic orbitals with vanishing derivative coupling.
///
/// eta_a = cos(t) psi_1 - sin(t) psi_2, eta_b = sin(t) psi_1 + cos(t) psi_2 with
/// dt/dR = -d_12. Increments are taken from the 2x2 overlap between neighbouring
/// grid points, which equals -d_12 dR at the interval midpoint to leading order.
/// The integration constant maximizes the r < 0 weight of eta_a summed over both
/// ends of the nuclear grid.
pub fn diabatize(adiabatic: &OrbitalSet) -> Result<Diabatization> {
    if adiabatic.kind != OrbitalKind::Adiabatic {
        return Err(Error::InvalidParameter(
            "diabatize expects adiabatic orbitals".into(),
        ));
    }
    let n = adiabatic.nuclear_grid.n;
    let mut path = vec![0.0; n];
    for k in 0..n - 1 {
        let s = |p, q| adiabatic.overlap(k, p, k + 1, q);
        let (s11, s12, s21, s22) = (s(0, 0), s(0, 1), s(1, 0), s(1, 1));
        if s11 <= 0.0 || s22 <= 0.0 {
            return Err(Error::Grid(format!(
                "adiabatic orbitals not sign-continuous between nuclear points {k} and {}",
                k + 1
            )));
        }
        let step = (-(s12 - s21) / 2.0).atan2((s11 + s22) / 2.0);
        if step.abs() >= 0.5 {
            return Err(Error::Grid(format!(
                "nuclear grid too coarse: mixing-angle step {step} at point {k}"
            )));
        }
        path[k + 1] = path[k] + step;
    }

    let r = adiabatic.electron_grid.points();
    let dx = adiabatic.dx();
    let left_matrix = |i: usize| {
        let o = &adiabatic.orbitals[i];
        let mut m = [[0.0; 2]; 2];
        for (idx, &ri) in r.iter().enumerate() {
            let w = left_side_weight(ri, dx);
            for p in 0..2 {
                for q in 0..2 {
                    m[p][q] += w * o[[idx, p]] * o[[idx, q]] * dx;
                }
            }
        }
        m
    };
    // Left weight of eta_a at angle t: const + (A-B)/2 cos 2t - C sin 2t.
    let (mut zr, mut zi) = (0.0, 0.0);
    for &e in &[0, n - 1] {
        let m = left_matrix(e);
        let (x, y) = ((m[0][0] - m[1][1]) / 2.0, m[0][1]);
        let (c, s) = ((2.0 * path[e]).cos(), (2.0 * path[e]).sin());
        zr += x * c - y * s;
        zi += x * s + y * c;
    }
    if zr.hypot(zi) < 1e-3 {
        return Err(Error::AnchorAmbiguous(format!(
            "localization contrast {:.3e} at the nuclear-grid ends",
            zr.hypot(zi)
        )));
    }
    let offset = -zi.atan2(zr) / 2.0;
    let theta: Vec<f64> = path.iter().map(|p| p + offset).collect();

    let orbitals: Vec<Array2<f64>> = adiabatic
        .orbitals
        .iter()
        .zip(&theta)
        .map(|(o, &t)| {
            let (c, s) = (t.cos(), t.sin());
            let mut out = Array2::zeros(o.raw_dim());
            for i in 0..o.nrows() {
                out[[i, 0]] = c * o[[i, 0]] - s * o[[i, 1]];
                out[[i, 1]] = s * o[[i, 0]] + c * o[[i, 1]];
            }
            out
        })
        .collect();
    let set = OrbitalSet {
        kind: OrbitalKind::Diabatic,
        electron_grid: adiabatic.electron_grid,
        nuclear_grid: adiabatic.nuclear_grid,
        orbitals,
        energies: None,
    };
    let best = set.left_weight(0, 0).max(set.left_weight(n - 1, 0));
    if best < 0.75 {
        return Err(Error::AnchorAmbiguous(format!(
            "no end of the nuclear grid localizes eta_a (best left weight {best:.3})"
        )));
    }
    Ok(Diabatization {
        orbitals: set,
        mixing_angle: theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntegralLabel {
    #[serde(rename = "h_aa")]
    Haa,
    #[serde(rename = "h_bb")]
    Hbb,
    #[serde(rename = "h_ab")]
    Hab,
    #[serde(rename = "v_aaaa")]
    Vaaaa,
    #[serde(rename = "v_bbbb")]
    Vbbbb,
    #[serde(rename = "v_abab")]
    Vabab,
    #[serde(rename = "v_aaab")]
    Vaaab,
    #[serde(rename = "v_abbb")]
    Vabbb,
    #[serde(rename = "v_aabb")]
    Vaabb,
}

impl IntegralLabel {
    pub const ALL: [IntegralLabel; 9] = [
        IntegralLabel::Haa,
        IntegralLabel::Hbb,
        IntegralLabel::Hab,
        IntegralLabel::Vaaaa,
        IntegralLabel::Vbbbb,
        IntegralLabel::Vabab,
        IntegralLabel::Vaaab,
        IntegralLabel::Vabbb,
        IntegralLabel::Vaabb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegralLabel::Haa => "h_aa",
            IntegralLabel::Hbb => "h_bb",
            IntegralLabel::Hab => "h_ab",
            IntegralLabel::Vaaaa => "v_aaaa",
            IntegralLabel::Vbbbb => "v_bbbb",
            IntegralLabel::Vabab => "v_abab",
            IntegralLabel::Vaaab => "v_aaab",
            IntegralLabel::Vabbb => "v_abbb",
            IntegralLabel::Vaabb => "v_aabb",
        }
    }

    /// Spatial orbital indices (a = 0, b = 1): (p, q) for h, (p, q, r, s) for v.
    pub fn indices(self) -> Vec<usize> {
        self.name()[2..]
            .chars()
            .map(|c| if c == 'a' { 0 } else { 1 })
            .collect()
    }

    fn index(self) -> usize {
        IntegralLabel::ALL.iter().position(|&l| l == self).unwrap()
    }
}

impl fmt::Display for IntegralLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegralLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IntegralLabel::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::MissingLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralTables {
    pub nuclear_grid: SpatialGrid,
    values: Vec<Vec<f64>>,
    /// <eta_a | d/dR eta_b> (antisymmetrized).
    pub d_ab: Vec<f64>,
    /// <eta_a | d²/dR² eta_b>.
    pub g_ab: Vec<f64>,
}

impl IntegralTables {
    pub fn get(&self, label: IntegralLabel) -> &[f64] {
        &self.values[label.index()]
    }

    /// Full 2x2 first-derivative coupling matrix at nuclear index `i`.
    pub fn d_matrix(&self, i: usize) -> [[f64; 2]; 2] {
        [[0.0, self.d_ab[i]], [-self.d_ab[i], 0.0]]
    }
}

/// One- and two-electron integrals and derivative couplings of a diabatic orbital set.
pub fn compute_electron_integrals(
    diabatic: &OrbitalSet,
    params: &ModelParams,
) -> Result<IntegralTables> {
    if diabatic.kind != OrbitalKind::Diabatic {
        warn!("electron integrals requested for a non-diabatic orbital set");
    }
    let eg = diabatic.electron_grid;
    let dx = eg.spacing();
    let r = eg.points();
    let n = eg.n;
    let w = Array2::from_shape_fn((n, n), |(i, j)| {
        soft_coulomb(r[i] - r[j], params.c_electron)
    });
    let ng = diabatic.nuclear_grid;
    let mut values = vec![Vec::with_capacity(ng.n); 9];
    for (k, r_nuc) in ng.points().into_iter().enumerate() {
        let h = build_h1e(&eg, params, r_nuc)?;
        let o = &diabatic.orbitals[k];
        let a = o.column(0);
        let b = o.column(1);
        let ha = h.dot(&a);
        let hb = h.dot(&b);
        let aa: Array1<f64> = &a * &a;
        let ab: Array1<f64> = &a * &b;
        let bb: Array1<f64> = &b * &b;
        let waa = w.dot(&aa);
        let wab = w.dot(&ab);
        let wbb = w.dot(&bb);
        let dx2 = dx * dx;
        let row = [
            a.dot(&ha) * dx,
            b.dot(&hb) * dx,
            0.5 * (a.dot(&hb) + b.dot(&ha)) * dx,
            aa.dot(&waa) * dx2,
            bb.dot(&wbb) * dx2,
            aa.dot(&wbb) * dx2,
            aa.dot(&wab) * dx2,
            ab.dot(&wbb) * dx2,
            ab.dot(&wab) * dx2,
        ];
        for (col, v) in values.iter_mut().zip(row) {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("integrals at R = {r_nuc}")));
            }
            col.push(v);
        }
    }

    let nr = ng.n;
    let hr = ng.spacing();
    warn!(
        "derivative couplings at the nuclear-grid ends use one-sided stencils (R = {}, {})",
        ng.lo, ng.hi
    );
    let mut d_ab = Vec::with_capacity(nr);
    let mut g_ab = Vec::with_capacity(nr);
    for i in 0..nr {
        let (lo, hi, span) = stencil(i, nr, hr);
        let oa = diabatic.orbitals[i].column(0);
        let ob = diabatic.orbitals[i].column(1);
        let dab = oa.dot(&(&diabatic.orbitals[hi].column(1) - &diabatic.orbitals[lo].column(1)))
            * dx
            / span;
        let dba = ob.dot(&(&diabatic.orbitals[hi].column(0) - &diabatic.orbitals[lo].column(0)))
            * dx
            / span;
        d_ab.push(0.5 * (dab - dba));
        let (l2, c2, h2) = if i == 0 {
            (0, 1, 2)
        } else if i + 1 == nr {
            (nr - 3, nr - 2, nr - 1)
        } else {
            (i - 1, i, i + 1)
        };
        let second = (&diabatic.orbitals[h2].column(1) - &(&diabatic.orbitals[c2].column(1) * 2.0)
            + diabatic.orbitals[l2].column(1))
            / (hr * hr);
        g_ab.push(oa.dot(&second) * dx);
    }
    Ok(IntegralTables {
        nuclear_grid: ng,
        values,
        d_ab,
        g_ab,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelFit {
    pub v0: f64,
    pub v1: f64,
    pub residual: f64,
}

/// First-order expansion v(R) = v0 + v1 R per integral label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TaylorFit {
    pub labels: BTreeMap<IntegralLabel, LabelFit>,
}

impl TaylorFit {
    pub fn from_coefficients(coeffs: &[(IntegralLabel, f64, f64)]) -> Self {
        TaylorFit {
            labels: coeffs
                .iter()
                .map(|&(l, v0, v1)| {
                    (
                        l,
                        LabelFit {
                            v0,
                            v1,
                            residual: 0.0,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn get(&self, label: IntegralLabel) -> Result<LabelFit> {
        self.labels
            .get(&label)
            .copied()
            .ok_or_else(|| Error::MissingLabel(label.name().to_string()))
    }

    pub fn require_all(&self) -> Result<()> {
        for l in IntegralLabel::ALL {
            self.get(l)?;
        }
        Ok(())
    }

    pub fn value(&self, label: IntegralLabel, r_nuc: f64) -> Result<f64> {
        let f = self.get(label)?;
        Ok(f.v0 + f.v1 * r_nuc)
    }

    pub fn slope(&self, label: IntegralLabel) -> Result<f64> {
        Ok(self.get(label)?.v1)
    }
}

/// v0 = table value at R = 0, v1 = centered difference slope at R = 0,
/// residual = max |v(R) - v0 - v1 R| over the window.
pub fn taylor_fit(tables: &IntegralTables, window: (f64, f64)) -> Result<TaylorFit> {
    let g = tables.nuclear_grid;
    let (lo, hi) = window;
    let tol = 1e-9 * g.spacing();
    if !(lo <= 0.0 && hi >= 0.0) || lo < g.lo - tol || hi > g.hi + tol {
        return Err(Error::Grid(format!(
            "fit window [{lo}, {hi}] must contain 0 and lie inside [{}, {}]",
            g.lo, g.hi
        )));
    }
    let i0 = g
        .index_of(0.0, 1e-9)
        .ok_or_else(|| Error::Grid("R = 0 is not a nuclear grid point".into()))?;
    if i0 == 0 || i0 + 1 == g.n {
        return Err(Error::Grid("R = 0 has no centered stencil".into()));
    }
    let h = g.spacing();
    let pts = g.points();
    let mut labels = BTreeMap::new();
    for l in IntegralLabel::ALL {
        let v = tables.get(l);
        let v0 = v[i0];
        let v1 = (v[i0 + 1] - v[i0 - 1]) / (2.0 * h);
        let residual = pts
            .iter()
            .zip(v)
            .filter(|(r, _)| **r >= lo - tol && **r <= hi + tol)
            .map(|(r, x)| (x - v0 - v1 * r).abs())
            .fold(0.0, f64::max);
        labels.insert(l, LabelFit { v0, v1, residual });
    }
    Ok(TaylorFit { labels })
}

/// Everything the downstream stages need from the electronic-structure step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectronicStructure {
    pub diabatic: OrbitalSet,
    pub mixing_angle: Vec<f64>,
    pub adiabatic_coupling: Vec<f64>,
    pub tables: IntegralTables,
    pub fit: TaylorFit,
}

pub fn run_electronic_structure(
    params: &ModelParams,
    electron_grid: &SpatialGrid,
    nuclear_grid: &SpatialGrid,
    window: (f64, f64),
) -> Result<ElectronicStructure> {
    let adiabatic = adiabatic_orbital_set(params, electron_grid, nuclear_grid)?;
    let adiabatic_coupling = derivative_coupling(&adiabatic, 0, 1);
    let dia = diabatize(&adiabatic)?;
    let tables = compute_electron_integrals(&dia.orbitals, params)?;
    let fit = taylor_fit(&tables, window)?;
    Ok(ElectronicStructure {
        diabatic: dia.orbitals,
        mixing_angle: dia.mixing_angle,
        adiabatic_coupling,
        tables,
        fit,
    })
}

pub fn integrals_csv(tables: &IntegralTables) -> CsvTable {
    let mut header = vec!["R".to_string()];
    header.extend(IntegralLabel::ALL.iter().map(|l| l.name().to_string()));
    header.push("d_ab".into());
    header.push("g_ab".into());
    let mut t = CsvTable::new(header);
    for (i, r) in tables.nuclear_grid.points().into_iter().enumerate() {
        let mut row = vec![fmt_sig12(r)];
        row.extend(
            IntegralLabel::ALL
                .iter()
                .map(|&l| fmt_sig12(tables.get(l)[i])),
        );
        row.push(fmt_sig12(tables.d_ab[i]));
        row.push(fmt_sig12(tables.g_ab[i]));
        t.push(row);
    }
    t
}

pub fn taylor_csv(fit: &TaylorFit) -> CsvTable {
    let mut t = CsvTable::new(vec![
        "label".into(),
        "v0".into(),
        "v1".into(),
        "residual".into(),
    ]);
    for (l, f) in &fit.labels {
        t.push(vec![
            l.name().to_string(),
            fmt_sig12(f.v0),
            fmt_sig12(f.v1),
            fmt_sig12(f.residual),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_setup() -> (ModelParams, SpatialGrid) {
        (
            ModelParams::default(),
            SpatialGrid::new(-9.0, 9.0, 301).unwrap(),
        )
    }

    #[test]
    fn soft_coulomb_limit_and_tail() {
        let c = 0.6;
        assert!((soft_coulomb(0.0, c) - 2.0 / (c * PI.sqrt())).abs() < 1e-15);
        assert!((soft_coulomb(1e-7, c) - 2.0 / (c * PI.sqrt())).abs() < 1e-10);
        assert!((soft_coulomb(50.0, c) - 1.0 / 50.0).abs() < 1e-15);
        assert_eq!(soft_coulomb(-1.3, c), soft_coulomb(1.3, c));
    }

    #[test]
    fn coincident_point_attraction() {
        let (p, g) = small_setup();
        let v = h1e_potential(&g, &p, 0.0);
        let i0 = g.index_of(0.0, 1e-12).unwrap();
        let wells = -soft_coulomb(2.7, 0.3) * 2.0;
        assert!((v[i0] - (-2.0 / (0.6 * PI.sqrt()) + wells)).abs() < 1e-14);
    }

    #[test]
    fn potential_even_at_origin() {
        let (p, g) = small_setup();
        let v = h1e_potential(&g, &p, 0.0);
        for i in 0..g.n {
            assert!((v[i] - v[g.n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn nuclear_potential_values() {
        let p = ModelParams::default();
        assert_eq!(nuclear_potential(&p, 0.0), 0.0);
        assert!((nuclear_potential(&p, 0.1) - 0.02).abs() < 1e-15);
        assert_eq!(nuclear_potential(&p, 0.3), nuclear_potential(&p, -0.3));
    }

    #[test]
    fn rejects_narrow_grid_and_bad_params() {
        let p = ModelParams::default();
        let g = SpatialGrid::new(-4.0, 4.0, 101).unwrap();
        assert!(build_h1e(&g, &p, 0.0).is_err());
        let mut bad = p;
        bad.c_moving = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn adiabatic_residual_and_parity() {
        let (p, g) = small_setup();
        let h = build_h1e(&g, &p, 0.0).unwrap();
        let pair = solve_adiabatic_orbitals(&h, g.spacing()).unwrap();
        for k in 0..2 {
            let psi = pair.orbitals.column(k);
            let res = h.dot(&psi) - psi.mapv(|x| x * pair.energies[k]);
            let rn = res.dot(&res).sqrt();
            assert!(rn <= 1e-8 * psi.dot(&psi).sqrt(), "residual {rn}");
            let norm = psi.dot(&psi) * g.spacing();
            assert!((norm - 1.0).abs() < 1e-10);
        }
        // ground state even, first excited odd
        let n = g.n;
        for i in 0..n {
            let (e, o) = (pair.orbitals.column(0), pair.orbitals.column(1));
            assert!((e[i] - e[n - 1 - i]).abs() < 1e-6);
            assert!((o[i] + o[n - 1 - i]).abs() < 1e-6);
        }
    }

    #[test]
    fn label_roundtrip() {
        for l in IntegralLabel::ALL {
            assert_eq!(l.name().parse::<IntegralLabel>().unwrap(), l);
        }
        assert_eq!(IntegralLabel::Vaaab.indices(), vec![0, 0, 0, 1]);
        assert!("v_xyz".parse::<IntegralLabel>().is_err());
    }

    #[test]
    fn taylor_fit_of_linear_table_is_exact() {
        let g = SpatialGrid::new(-0.4, 0.4, 81).unwrap();
        let pts = g.points();
        let values = (0..9)
            .map(|k| pts.iter().map(|r| k as f64 + 0.5 * k as f64 * r).collect())
            .collect();
        let t = IntegralTables {
            nuclear_grid: g,
            values,
            d_ab: vec![0.0; 81],
            g_ab: vec![0.0; 81],
        };
        let fit = taylor_fit(&t, (-0.1, 0.1)).unwrap();
        let f = fit.get(IntegralLabel::Vabab).unwrap();
        assert!((f.v0 - 5.0).abs() < 1e-12 && (f.v1 - 2.5).abs() < 1e-10);
        assert!(f.residual < 1e-12);
        assert!(taylor_fit(&t, (-0.1, 0.5)).is_err());
        assert!(taylor_fit(&t, (0.05, 0.1)).is_err());
    }

    #[test]
    fn missing_label_error() {
        let fit = TaylorFit::from_coefficients(&[(IntegralLabel::Haa, 1.0, 0.0)]);
        assert!(fit.require_all().is_err());
        assert!(fit.value(IntegralLabel::Haa, 0.3).is_ok());
    }
}
