//! Second-quantized fermion terms, the Jordan-Wigner map, and assembly of the
//! model's coupled qubit-boson Hamiltonian.
//!
//! Spin orbitals are ordered (a↑, a↓, b↑, b↓) onto qubits 0..4. A qubit in |1>
//! means the spin orbital is occupied; a_p = Z_0 ... Z_{p-1} (X_p + i Y_p)/2.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::electronic::{IntegralLabel, ModelParams, TaylorFit};
use crate::error::{Error, Result};
use crate::pauli::{BosonPoly, Pauli, PauliString, QubitOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderKind {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderOp {
    /// Spin-orbital index, 0-based.
    pub orbital: usize,
    pub kind: LadderKind,
}

impl LadderOp {
    pub fn create(orbital: usize) -> Self {
        LadderOp {
            orbital,
            kind: LadderKind::Create,
        }
    }

    pub fn annihilate(orbital: usize) -> Self {
        LadderOp {
            orbital,
            kind: LadderKind::Annihilate,
        }
    }
}

/// coefficient * op_0 op_1 ... (leftmost acts last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionTerm {
    pub coefficient: BosonPoly,
    pub ops: Vec<LadderOp>,
}

impl FermionTerm {
    pub fn new(coefficient: BosonPoly, ops: Vec<LadderOp>) -> Self {
        FermionTerm { coefficient, ops }
    }

    /// a†_p a_q with unit coefficient.
    pub fn hopping(p: usize, q: usize) -> Self {
        FermionTerm::new(
            BosonPoly::real(1.0, 0.0),
            vec![LadderOp::create(p), LadderOp::annihilate(q)],
        )
    }
}

/// Pauli image of a single ladder operator.
pub fn ladder_image(op: LadderOp, n_qubits: usize) -> Result<QubitOperator> {
    if op.orbital >= n_qubits {
        return Err(Error::IndexOutOfRange(format!(
            "spin orbital {} with {n_qubits} qubits",
            op.orbital
        )));
    }
    let mut base = PauliString::identity(n_qubits);
    for k in 0..op.orbital {
        base.set(k, Pauli::Z)?;
    }
    let mut xs = base;
    xs.set(op.orbital, Pauli::X)?;
    let mut ys = base;
    ys.set(op.orbital, Pauli::Y)?;
    let half = Complex64::new(0.5, 0.0);
    let iy = match op.kind {
        LadderKind::Annihilate => Complex64::new(0.0, 0.5),
        LadderKind::Create => Complex64::new(0.0, -0.5),
    };
    let mut out = QubitOperator::zero(n_qubits);
    out.add_term(xs, BosonPoly::constant(half));
    out.add_term(ys, BosonPoly::constant(iy));
    Ok(out)
}

/// Jordan-Wigner image of a fermion term, canonicalized.
pub fn jordan_wigner(term: &FermionTerm, n_qubits: usize) -> Result<QubitOperator> {
    let mut acc = QubitOperator::from_term(PauliString::identity(n_qubits), term.coefficient);
    for op in &term.ops {
        acc = acc.try_mul(&ladder_image(*op, n_qubits)?)?;
    }
    Ok(acc.canonical())
}

pub fn spin_orbital(spatial: usize, spin: usize) -> usize {
    2 * spatial + spin
}

/// Total number operator sum_p a†_p a_p.
pub fn number_operator(n_qubits: usize) -> Result<QubitOperator> {
    let mut out = QubitOperator::zero(n_qubits);
    for p in 0..n_qubits {
        out = &out + &jordan_wigner(&FermionTerm::hopping(p, p), n_qubits)?;
    }
    Ok(out)
}

/// S_z = (n_up - n_down)/2 with even qubits spin-up and odd qubits spin-down.
pub fn sz_operator(n_qubits: usize) -> Result<QubitOperator> {
    let mut out = QubitOperator::zero(n_qubits);
    for p in 0..n_qubits {
        let sign = if p % 2 == 0 { 0.5 } else { -0.5 };
        out = &out
            + &jordan_wigner(&FermionTerm::hopping(p, p), n_qubits)?
                .scale(Complex64::new(sign, 0.0));
    }
    Ok(out)
}

/// Real two-electron tensor v[p][q][r][s] over spatial orbitals {a, b},
/// filled from the six labelled integrals by the eight-fold permutation symmetry.
pub fn two_electron_tensor(
    value: impl Fn(IntegralLabel) -> BosonPoly,
) -> [[[[BosonPoly; 2]; 2]; 2]; 2] {
    let mut v = [[[[BosonPoly::default(); 2]; 2]; 2]; 2];
    for label in [
        IntegralLabel::Vaaaa,
        IntegralLabel::Vbbbb,
        IntegralLabel::Vabab,
        IntegralLabel::Vaaab,
        IntegralLabel::Vabbb,
        IntegralLabel::Vaabb,
    ] {
        let x = value(label);
        let i = label.indices();
        let (p, q, r, s) = (i[0], i[1], i[2], i[3]);
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, s, r),
            (r, q, p, s),
            (p, s, r, q),
            (r, s, p, q),
            (s, r, q, p),
            (q, r, s, p),
            (s, p, q, r),
        ] {
            v[a][b][c][d] = x;
        }
    }
    v
}

/// sum h_pq a†_pσ a_qσ + 1/2 sum v_pqrs a†_pσ a†_qτ a_sτ a_rσ over four spin orbitals.
pub fn molecular_fermion_terms(
    h: &[[BosonPoly; 2]; 2],
    v: &[[[[BosonPoly; 2]; 2]; 2]; 2],
) -> Vec<FermionTerm> {
    let mut terms = Vec::new();
    for sigma in 0..2 {
        for p in 0..2 {
            for q in 0..2 {
                terms.push(FermionTerm::new(
                    h[p][q],
                    vec![
                        LadderOp::create(spin_orbital(p, sigma)),
                        LadderOp::annihilate(spin_orbital(q, sigma)),
                    ],
                ));
            }
        }
    }
    for sigma in 0..2 {
        for tau in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    for r in 0..2 {
                        for s in 0..2 {
                            terms.push(FermionTerm::new(
                                v[p][q][r][s].scale(Complex64::new(0.5, 0.0)),
                                vec![
                                    LadderOp::create(spin_orbital(p, sigma)),
                                    LadderOp::create(spin_orbital(q, tau)),
                                    LadderOp::annihilate(spin_orbital(s, tau)),
                                    LadderOp::annihilate(spin_orbital(r, sigma)),
                                ],
                            ));
                        }
                    }
                }
            }
        }
    }
    terms
}

fn map_terms(terms: &[FermionTerm], n_qubits: usize) -> Result<QubitOperator> {
    let mut out = QubitOperator::zero(n_qubits);
    for t in terms {
        for (s, c) in jordan_wigner(t, n_qubits)?.terms() {
            out.add_term_raw(*s, *c);
        }
    }
    Ok(out.canonical())
}

fn one_electron_matrix(value: &impl Fn(IntegralLabel) -> BosonPoly) -> [[BosonPoly; 2]; 2] {
    let hab = value(IntegralLabel::Hab);
    [
        [value(IntegralLabel::Haa), hab],
        [hab, value(IntegralLabel::Hbb)],
    ]
}

/// Electronic qubit Hamiltonian with integrals evaluated at nuclear position `r_nuc`.
pub fn electronic_hamiltonian_at(fit: &TaylorFit, r_nuc: f64) -> Result<QubitOperator> {
    fit.require_all()?;
    let value = |l: IntegralLabel| BosonPoly::real(fit.value(l, r_nuc).unwrap(), 0.0);
    let h = one_electron_matrix(&value);
    let v = two_electron_tensor(value);
    map_terms(&molecular_fermion_terms(&h, &v), 4)
}

/// Mapped electronic Hamiltonian with coefficients v0 + v1 R, R = (b + b†)/sqrt(2 M omega).
pub fn electronic_hamiltonian_symbolic(
    fit: &TaylorFit,
    params: &ModelParams,
) -> Result<QubitOperator> {
    fit.require_all()?;
    let scale = 1.0 / (2.0 * params.mass * params.omega()).sqrt();
    let value = |l: IntegralLabel| {
        let f = fit.get(l).unwrap();
        BosonPoly::real(f.v0, f.v1 * scale)
    };
    let h = one_electron_matrix(&value);
    let v = two_electron_tensor(value);
    map_terms(&molecular_fermion_terms(&h, &v), 4)
}

/// Term grouping of the model Hamiltonian; fixes the Trotter term order.
pub const TERM_GROUPS: [&[&str]; 11] = [
    &["IIII"],
    &["ZIII", "IZII"],
    &["IIZI", "IIIZ"],
    &["ZZII"],
    &["IIZZ"],
    &["ZIIZ", "IZZI"],
    &["ZIZI", "IZIZ"],
    &["XZXI", "YZYI", "IXZX", "IYZY"],
    &["ZXZX", "ZYZY", "XIXI", "YIYI"],
    &["XZXZ", "YZYZ", "IXIX", "IYIY"],
    &["XXYY", "YYXX", "XYYX", "YXXY"],
];

/// Group index of a Pauli string in [`TERM_GROUPS`].
pub fn group_of(s: &PauliString) -> Option<usize> {
    let text = s.to_string();
    TERM_GROUPS.iter().position(|g| g.contains(&text.as_str()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmqbTerm {
    pub pauli: PauliString,
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "V1")]
    pub v1: f64,
}

/// H = omega b†b + sum_I (V0_I + V1_I (b + b†)) P_I.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmqbHamiltonian {
    pub omega: f64,
    pub n_qubits: usize,
    pub n_modes: usize,
    pub terms: Vec<CmqbTerm>,
}

impl CmqbHamiltonian {
    /// Orders a real-coefficient qubit operator by [`TERM_GROUPS`] (others appended).
    pub fn from_operator(op: &QubitOperator, omega: f64) -> Result<Self> {
        let imag = op.max_imag();
        if imag > 1e-12 {
            return Err(Error::NotHermitian(imag));
        }
        let mut grouped: Vec<(usize, usize, CmqbTerm)> = Vec::new();
        for (s, c) in op.terms() {
            let text = s.to_string();
            let key = match group_of(s) {
                Some(g) => (g, TERM_GROUPS[g].iter().position(|x| *x == text).unwrap()),
                None => (TERM_GROUPS.len(), 0),
            };
            grouped.push((
                key.0,
                key.1,
                CmqbTerm {
                    pauli: *s,
                    v0: c.c0.re,
                    v1: c.c1.re,
                },
            ));
        }
        grouped.sort_by_key(|a| (a.0, a.1, a.2.pauli));
        Ok(CmqbHamiltonian {
            omega,
            n_qubits: op.n_qubits(),
            n_modes: 1,
            terms: grouped.into_iter().map(|g| g.2).collect(),
        })
    }

    pub fn to_operator(&self) -> QubitOperator {
        let mut op = QubitOperator::zero(self.n_qubits);
        for t in &self.terms {
            op.add_term_raw(t.pauli, BosonPoly::real(t.v0, t.v1));
        }
        op.canonical()
    }

    pub fn term(&self, s: &str) -> Option<&CmqbTerm> {
        self.terms.iter().find(|t| t.pauli.to_string() == s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Full model Hamiltonian: mapped electronic part plus omega b†b, with the
/// oscillator zero-point energy omega/2 folded into the identity term.
pub fn build_molecular_qubit_hamiltonian(
    fit: &TaylorFit,
    params: &ModelParams,
) -> Result<CmqbHamiltonian> {
    params.validate()?;
    let mut op = electronic_hamiltonian_symbolic(fit, params)?;
    op.add_term(
        PauliString::identity(4),
        BosonPoly::real(0.5 * params.omega(), 0.0),
    );
    CmqbHamiltonian::from_operator(&op, params.omega())
}

/// The three singlet configurations (|1100>, |0011>, (|1001> - |0110>)/sqrt 2)
/// as 16-component amplitude vectors over the qubit basis.
pub fn singlet_csf_vectors() -> [[f64; 16]; 3] {
    let mut out = [[0.0; 16]; 3];
    out[0][0b1100] = 1.0;
    out[1][0b0011] = 1.0;
    out[2][0b1001] = 1.0 / SQRT_2;
    out[2][0b0110] = -1.0 / SQRT_2;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn number_operator_image() {
        let op = jordan_wigner(&FermionTerm::hopping(0, 0), 4).unwrap();
        assert_eq!(op.len(), 2);
        assert!((op.coefficient(&"IIII".parse().unwrap()).c0.re - 0.5).abs() < 1e-15);
        assert!((op.coefficient(&"ZIII".parse().unwrap()).c0.re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn hopping_pair_image() {
        let a = jordan_wigner(&FermionTerm::hopping(0, 2), 4).unwrap();
        let b = jordan_wigner(&FermionTerm::hopping(2, 0), 4).unwrap();
        let sum = &a + &b;
        assert_eq!(sum.len(), 2);
        assert!((sum.coefficient(&"XZXI".parse().unwrap()).c0.re - 0.5).abs() < 1e-15);
        assert!((sum.coefficient(&"YZYI".parse().unwrap()).c0.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_orbital() {
        assert!(jordan_wigner(&FermionTerm::hopping(0, 4), 4).is_err());
    }

    #[test]
    fn anticommutation_as_matrices() {
        let n = 4;
        for p in 0..n {
            for q in 0..n {
                let a = ladder_image(LadderOp::annihilate(p), n)
                    .unwrap()
                    .matrix()
                    .unwrap();
                let ad = ladder_image(LadderOp::create(q), n)
                    .unwrap()
                    .matrix()
                    .unwrap();
                let ac = a.dot(&ad) + ad.dot(&a);
                let target = if p == q {
                    crate::linalg::identity_c(16)
                } else {
                    ndarray::Array2::zeros((16, 16))
                };
                assert!(max_abs_diff(&ac, &target) < 1e-14);
            }
        }
    }

    #[test]
    fn annihilator_lowers_occupied_qubit() {
        // |1000> (index 8) -> |0000>
        let a = ladder_image(LadderOp::annihilate(0), 4)
            .unwrap()
            .matrix()
            .unwrap();
        assert!((a[[0, 8]] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_integrals_reduce_to_oscillator() {
        let fit = TaylorFit::from_coefficients(&IntegralLabel::ALL.map(|l| (l, 0.0, 0.0)));
        let p = ModelParams::default();
        let h = build_molecular_qubit_hamiltonian(&fit, &p).unwrap();
        assert_eq!(h.terms.len(), 1);
        assert_eq!(h.terms[0].pauli.to_string(), "IIII");
        assert!((h.terms[0].v0 - 0.5 * p.omega()).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let fit = TaylorFit::from_coefficients(&IntegralLabel::ALL.map(|l| (l, 0.1, -0.02)));
        let h = build_molecular_qubit_hamiltonian(&fit, &ModelParams::default()).unwrap();
        let back = CmqbHamiltonian::from_json(&h.to_json().unwrap()).unwrap();
        assert_eq!(back, h);
    }
}
