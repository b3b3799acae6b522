//! Pauli strings and qubit operators whose coefficients are linear boson
//! polynomials c0 + c1 (b + b†).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PRUNE_TOL: f64 = 1e-14;
pub const MAX_QUBITS: usize = 32;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Single-qubit product self * other = phase * result.
    pub fn mul(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::{X, Y, Z};
        match (self, other) {
            (Pauli::I, p) | (p, Pauli::I) => (ONE, p),
            (a, b) if a == b => (ONE, Pauli::I),
            (X, Y) => (I, Z),
            (Y, X) => (-I, Z),
            (Y, Z) => (I, X),
            (Z, Y) => (-I, X),
            (Z, X) => (I, Y),
            (X, Z) => (-I, Y),
            _ => unreachable!(),
        }
    }

    pub fn matrix(self) -> Array2<Complex64> {
        let mut m = Array2::zeros((2, 2));
        match self {
            Pauli::I => {
                m[[0, 0]] = ONE;
                m[[1, 1]] = ONE;
            }
            Pauli::X => {
                m[[0, 1]] = ONE;
                m[[1, 0]] = ONE;
            }
            Pauli::Y => {
                m[[0, 1]] = -I;
                m[[1, 0]] = I;
            }
            Pauli::Z => {
                m[[0, 0]] = ONE;
                m[[1, 1]] = -ONE;
            }
        }
        m
    }
}

/// Tensor product of single-qubit Paulis. Qubit 0 is the leftmost letter and
/// the most significant bit of a computational-basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString { n, x: 0, z: 0 }
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        let mut s = PauliString::identity(n);
        s.set(qubit, p)?;
        Ok(s)
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut s = PauliString::identity(letters.len());
        for (k, &p) in letters.iter().enumerate() {
            s.set(k, p).unwrap();
        }
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn letter(&self, k: usize) -> Pauli {
        Pauli::from_bits(self.x >> k & 1 == 1, self.z >> k & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|k| self.letter(k)).collect()
    }

    pub fn set(&mut self, k: usize, p: Pauli) -> Result<()> {
        if k >= self.n {
            return Err(Error::IndexOutOfRange(format!("qubit {k} of {}", self.n)));
        }
        let (x, z) = p.bits();
        self.x = (self.x & !(1 << k)) | ((x as u64) << k);
        self.z = (self.z & !(1 << k)) | ((z as u64) << k);
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Indices of non-identity qubits, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&k| self.letter(k) != Pauli::I)
            .collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Product self * other = phase * string.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        assert_eq!(self.n, other.n, "qubit count mismatch");
        let mut phase = ONE;
        let mut out = PauliString::identity(self.n);
        for k in 0..self.n {
            let (ph, p) = self.letter(k).mul(other.letter(k));
            phase *= ph;
            out.set(k, p).unwrap();
        }
        (phase, out)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        anti.is_multiple_of(2)
    }

    /// Bit mask of the basis-index bits flipped by this string.
    pub fn flip_mask(&self) -> usize {
        (0..self.n)
            .filter(|&k| self.x >> k & 1 == 1)
            .map(|k| 1usize << (self.n - 1 - k))
            .sum()
    }

    /// P |s> = phase |s'>.
    pub fn apply_to_basis(&self, s: usize) -> (Complex64, usize) {
        let mut phase = ONE;
        for k in 0..self.n {
            let bit = s >> (self.n - 1 - k) & 1 == 1;
            match self.letter(k) {
                Pauli::I | Pauli::X => {}
                Pauli::Z => {
                    if bit {
                        phase = -phase;
                    }
                }
                Pauli::Y => {
                    phase *= if bit { -I } else { I };
                }
            }
        }
        (phase, s ^ self.flip_mask())
    }

    pub fn matrix(&self) -> Array2<Complex64> {
        let dim = 1usize << self.n;
        let mut m = Array2::zeros((dim, dim));
        for s in 0..dim {
            let (ph, t) = self.apply_to_basis(s);
            m[[t, s]] = ph;
        }
        m
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.letters().cmp(&other.letters()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n {
            write!(f, "{}", self.letter(k).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let letters: Result<Vec<Pauli>> = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidParameter(format!(
                    "bad Pauli letter `{other}`"
                ))),
            })
            .collect();
        let letters = letters?;
        if letters.is_empty() || letters.len() > MAX_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "bad Pauli string length {}",
                letters.len()
            )));
        }
        Ok(PauliString::from_letters(&letters))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Linear boson polynomial c0 + c1 (b + b†).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BosonPoly {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl BosonPoly {
    pub fn constant(c: Complex64) -> Self {
        BosonPoly { c0: c, c1: ZERO }
    }

    pub fn real(c0: f64, c1: f64) -> Self {
        BosonPoly {
            c0: Complex64::new(c0, 0.0),
            c1: Complex64::new(c1, 0.0),
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.c1 == ZERO
    }

    pub fn is_negligible(&self, tol: f64) -> bool {
        self.c0.norm() < tol && self.c1.norm() < tol
    }

    pub fn scale(&self, f: Complex64) -> Self {
        BosonPoly {
            c0: self.c0 * f,
            c1: self.c1 * f,
        }
    }

    pub fn conj(&self) -> Self {
        BosonPoly {
            c0: self.c0.conj(),
            c1: self.c1.conj(),
        }
    }

    /// Product of two polynomials; fails if the result exceeds degree 1.
    pub fn try_mul(&self, other: &BosonPoly) -> Result<BosonPoly> {
        if !self.is_scalar() && !other.is_scalar() {
            return Err(Error::UnsupportedPolynomial(
                "product of two (b + b†)-linear coefficients has degree 2".into(),
            ));
        }
        Ok(BosonPoly {
            c0: self.c0 * other.c0,
            c1: self.c0 * other.c1 + self.c1 * other.c0,
        })
    }

    pub fn max_imag(&self) -> f64 {
        self.c0.im.abs().max(self.c1.im.abs())
    }
}

impl Add for BosonPoly {
    type Output = BosonPoly;
    fn add(self, o: BosonPoly) -> BosonPoly {
        BosonPoly {
            c0: self.c0 + o.c0,
            c1: self.c1 + o.c1,
        }
    }
}

impl Sub for BosonPoly {
    type Output = BosonPoly;
    fn sub(self, o: BosonPoly) -> BosonPoly {
        BosonPoly {
            c0: self.c0 - o.c0,
            c1: self.c1 - o.c1,
        }
    }
}

impl Neg for BosonPoly {
    type Output = BosonPoly;
    fn neg(self) -> BosonPoly {
        BosonPoly {
            c0: -self.c0,
            c1: -self.c1,
        }
    }
}

/// Sum of Pauli strings with boson-polynomial coefficients, kept canonical:
/// one entry per string, entries below [`PRUNE_TOL`] dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOperator {
    n: usize,
    terms: BTreeMap<PauliString, BosonPoly>,
}

impl QubitOperator {
    pub fn zero(n: usize) -> Self {
        QubitOperator {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        QubitOperator::from_term(PauliString::identity(n), BosonPoly::constant(ONE))
    }

    pub fn from_term(s: PauliString, c: BosonPoly) -> Self {
        let mut op = QubitOperator::zero(s.n_qubits());
        op.add_term(s, c);
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &BosonPoly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> BosonPoly {
        self.terms.get(s).copied().unwrap_or_default()
    }

    /// Adds without pruning; call [`QubitOperator::canonicalize`] afterwards.
    pub fn add_term_raw(&mut self, s: PauliString, c: BosonPoly) {
        assert_eq!(s.n_qubits(), self.n, "qubit count mismatch");
        let e = self.terms.entry(s).or_default();
        *e = *e + c;
    }

    pub fn add_term(&mut self, s: PauliString, c: BosonPoly) {
        self.add_term_raw(s, c);
        if self.terms[&s].is_negligible(PRUNE_TOL) {
            self.terms.remove(&s);
        }
    }

    pub fn canonicalize(&mut self) {
        self.terms.retain(|_, c| !c.is_negligible(PRUNE_TOL));
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn scale(&self, f: Complex64) -> Self {
        let mut out = QubitOperator::zero(self.n);
        for (s, c) in &self.terms {
            out.add_term(*s, c.scale(f));
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = QubitOperator::zero(self.n);
        for (s, c) in &self.terms {
            out.add_term(*s, c.conj());
        }
        out
    }

    pub fn try_mul(&self, other: &QubitOperator) -> Result<QubitOperator> {
        let mut out = QubitOperator::zero(self.n);
        for (s1, c1) in &self.terms {
            for (s2, c2) in &other.terms {
                let (ph, s) = s1.mul(s2);
                out.add_term_raw(s, c1.try_mul(c2)?.scale(ph));
            }
        }
        out.canonicalize();
        Ok(out)
    }

    /// Largest imaginary part over all coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.max_imag())
            .fold(0.0, f64::max)
    }

    /// Qubit-space matrices (M0, M1) of the constant and (b + b†) parts.
    pub fn qubit_matrices(&self) -> (Array2<Complex64>, Array2<Complex64>) {
        let dim = 1usize << self.n;
        let mut m0 = Array2::zeros((dim, dim));
        let mut m1 = Array2::zeros((dim, dim));
        for (s, c) in &self.terms {
            for col in 0..dim {
                let (ph, row) = s.apply_to_basis(col);
                m0[[row, col]] += c.c0 * ph;
                m1[[row, col]] += c.c1 * ph;
            }
        }
        (m0, m1)
    }

    /// Matrix of a purely scalar operator.
    pub fn matrix(&self) -> Result<Array2<Complex64>> {
        if self.terms.values().any(|c| !c.is_scalar()) {
            return Err(Error::UnsupportedPolynomial(
                "operator has boson-dependent coefficients; use the cMQB matrix builder".into(),
            ));
        }
        Ok(self.qubit_matrices().0)
    }
}

impl Add for &QubitOperator {
    type Output = QubitOperator;
    fn add(self, o: &QubitOperator) -> QubitOperator {
        let mut out = self.clone();
        for (s, c) in &o.terms {
            out.add_term_raw(*s, *c);
        }
        out.canonical()
    }
}

impl Sub for &QubitOperator {
    type Output = QubitOperator;
    fn sub(self, o: &QubitOperator) -> QubitOperator {
        let mut out = self.clone();
        for (s, c) in &o.terms {
            out.add_term_raw(*s, -*c);
        }
        out.canonical()
    }
}

impl Mul<Complex64> for &QubitOperator {
    type Output = QubitOperator;
    fn mul(self, f: Complex64) -> QubitOperator {
        self.scale(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff};

    #[test]
    fn parse_and_display() {
        let s: PauliString = "XZYI".parse().unwrap();
        assert_eq!(s.to_string(), "XZYI");
        assert_eq!(s.support(), vec![0, 1, 2]);
        assert_eq!(s.weight(), 3);
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn single_qubit_algebra() {
        let (ph, p) = Pauli::X.mul(Pauli::Y);
        assert_eq!((ph, p), (I, Pauli::Z));
        let xy = Pauli::X.matrix().dot(&Pauli::Y.matrix());
        assert!(max_abs_diff(&xy, &Pauli::Z.matrix().mapv(|v| v * I)) < 1e-15);
    }

    #[test]
    fn string_matrix_is_kron_product() {
        let s: PauliString = "YZX".parse().unwrap();
        let k = kron(
            &kron(&Pauli::Y.matrix(), &Pauli::Z.matrix()),
            &Pauli::X.matrix(),
        );
        assert!(max_abs_diff(&s.matrix(), &k) < 1e-15);
    }

    #[test]
    fn string_product_matches_matrices() {
        let a: PauliString = "XYZI".parse().unwrap();
        let b: PauliString = "YYXZ".parse().unwrap();
        let (ph, c) = a.mul(&b);
        let lhs = a.matrix().dot(&b.matrix());
        assert!(max_abs_diff(&lhs, &c.matrix().mapv(|v| v * ph)) < 1e-14);
        let comm = a.commutes_with(&b);
        let ab = a.matrix().dot(&b.matrix());
        let ba = b.matrix().dot(&a.matrix());
        assert_eq!(comm, max_abs_diff(&ab, &ba) < 1e-14);
    }

    #[test]
    fn operator_pruning_and_adjoint() {
        let s: PauliString = "XI".parse().unwrap();
        let mut op = QubitOperator::from_term(s, BosonPoly::real(1.0, 0.5));
        op.add_term(s, BosonPoly::real(-1.0, -0.5));
        assert!(op.is_empty());
        let y: PauliString = "YI".parse().unwrap();
        let op = QubitOperator::from_term(y, BosonPoly::constant(I));
        assert_eq!(op.adjoint().coefficient(&y).c0, -I);
    }

    #[test]
    fn degree_two_product_rejected() {
        let s = PauliString::identity(1);
        let a = QubitOperator::from_term(s, BosonPoly::real(0.0, 1.0));
        assert!(a.try_mul(&a).is_err());
    }

    #[test]
    fn serde_string_form() {
        let s: PauliString = "IXYZ".parse().unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "\"IXYZ\"");
        let back: PauliString = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
