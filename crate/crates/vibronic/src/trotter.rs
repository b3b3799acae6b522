//! Trotterized digital-analog circuits: each Hamiltonian term becomes a
//! Clifford-conjugated spin-dependent displacement pulse.

use std::fmt;

use log::warn;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{boson_position, check_times, Method, PropagationResult, VibronicState};
use crate::error::{Error, Result};
use crate::fermion::{CmqbHamiltonian, CmqbTerm};
use crate::io::{fmt_full, CsvTable};
use crate::linalg::eigh;
use crate::pauli::{Pauli, PauliString};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Qubit indices are 0-based; text output is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Hadamard(usize),
    /// S = diag(1, i).
    Phase(usize),
    PhaseDagger(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// exp(-i angle P).
    PauliRotation {
        pauli: PauliString,
        angle: f64,
    },
    /// exp(-i dt (v0 + v1 (b + b†)) X_pivot).
    SpinDependentDisplacement {
        mode: usize,
        pivot: usize,
        v0: f64,
        v1: f64,
        dt: f64,
    },
    /// exp(-i dt (v0 + v1 (b + b†))) on the boson only.
    Displacement {
        mode: usize,
        v0: f64,
        v1: f64,
        dt: f64,
    },
    /// exp(-i phase b†b), phase = omega dt.
    FreeEvolution {
        mode: usize,
        phase: f64,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Hadamard(q) | Gate::Phase(q) | Gate::PhaseDagger(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::PauliRotation { pauli, .. } => pauli.support(),
            Gate::SpinDependentDisplacement { pivot, .. } => vec![*pivot],
            Gate::Displacement { .. } | Gate::FreeEvolution { .. } => vec![],
        }
    }

    /// True for the per-term core operations (pulses and rotations).
    pub fn is_core(&self) -> bool {
        matches!(
            self,
            Gate::PauliRotation { .. }
                | Gate::SpinDependentDisplacement { .. }
                | Gate::Displacement { .. }
        )
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (i, q) in qs.iter().enumerate() {
            if *q >= n_qubits {
                return Err(Error::IndexOutOfRange(format!("qubit {q} of {n_qubits}")));
            }
            if qs[..i].contains(q) {
                return Err(Error::InvalidParameter(format!(
                    "repeated qubit {q} in {self}"
                )));
            }
        }
        let finite = match self {
            Gate::PauliRotation { angle, .. } => angle.is_finite(),
            Gate::SpinDependentDisplacement { v0, v1, dt, .. }
            | Gate::Displacement { v0, v1, dt, .. } => {
                v0.is_finite() && v1.is_finite() && dt.is_finite()
            }
            Gate::FreeEvolution { phase, .. } => phase.is_finite(),
            _ => true,
        };
        if !finite {
            return Err(Error::NonFinite(format!("gate {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Hadamard(q) => write!(f, "H {}", q + 1),
            Gate::Phase(q) => write!(f, "S {}", q + 1),
            Gate::PhaseDagger(q) => write!(f, "SDG {}", q + 1),
            Gate::Cnot { control, target } => write!(f, "CNOT {} {}", control + 1, target + 1),
            Gate::PauliRotation { pauli, angle } => {
                write!(f, "ROT {pauli} angle={}", fmt_full(*angle))
            }
            Gate::SpinDependentDisplacement {
                mode,
                pivot,
                v0,
                v1,
                dt,
            } => write!(
                f,
                "SDD mode={} pivot={} V0={} V1={} dt={}",
                mode + 1,
                pivot + 1,
                fmt_full(*v0),
                fmt_full(*v1),
                fmt_full(*dt)
            ),
            Gate::Displacement { mode, v0, v1, dt } => write!(
                f,
                "DISP mode={} V0={} V1={} dt={}",
                mode + 1,
                fmt_full(*v0),
                fmt_full(*v1),
                fmt_full(*dt)
            ),
            Gate::FreeEvolution { mode, phase } => {
                write!(f, "FREE mode={} phase={}", mode + 1, fmt_full(*phase))
            }
        }
    }
}

/// Gate sequence (time order) for exp(-i dt (V0 + V1 (b + b†)) P).
///
/// The pivot is the lowest non-identity qubit. Basis changes map each letter to X
/// (Y via S, Z via H), CNOTs fan out from the pivot, the core pulse acts with
/// X on the pivot, and the conjugation is undone in reverse order.
pub fn compile_term(term: &CmqbTerm, dt: f64) -> Result<Vec<Gate>> {
    if !(term.v0.is_finite() && term.v1.is_finite() && dt.is_finite()) {
        return Err(Error::NonFinite(format!("term {}", term.pauli)));
    }
    let p = term.pauli;
    if p.is_identity() {
        return Ok(vec![Gate::Displacement {
            mode: 0,
            v0: term.v0,
            v1: term.v1,
            dt,
        }]);
    }
    if term.v1 == 0.0 {
        return Ok(vec![Gate::PauliRotation {
            pauli: p,
            angle: dt * term.v0,
        }]);
    }
    let support = p.support();
    let pivot = support[0];
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for &q in &support {
        match p.letter(q) {
            Pauli::Y => {
                pre.push(Gate::PhaseDagger(q));
                post.push(Gate::Phase(q));
            }
            Pauli::Z => {
                pre.push(Gate::Hadamard(q));
                post.push(Gate::Hadamard(q));
            }
            _ => {}
        }
    }
    let cnots: Vec<Gate> = support[1..]
        .iter()
        .map(|&t| Gate::Cnot {
            control: pivot,
            target: t,
        })
        .collect();
    let mut out = pre;
    out.extend(cnots.iter().cloned());
    out.push(Gate::SpinDependentDisplacement {
        mode: 0,
        pivot,
        v0: term.v0,
        v1: term.v1,
        dt,
    });
    out.extend(cnots.into_iter().rev());
    out.extend(post);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    /// Gates of one Trotter step, time order.
    pub step: Vec<Gate>,
    pub n_steps: usize,
    pub dt: f64,
    pub order: u8,
    pub ordering: String,
    pub n_qubits: usize,
}

impl GateSchedule {
    pub fn total_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// Core operations per step.
    pub fn operations_per_step(&self) -> usize {
        self.step.iter().filter(|g| g.is_core()).count()
    }

    pub fn cnots_per_step(&self) -> usize {
        self.step
            .iter()
            .filter(|g| matches!(g, Gate::Cnot { .. }))
            .count()
    }

    pub fn dump(&self) -> String {
        let mut s = format!(
            "# steps={} dt={} order={} ordering={} qubits={}\n# the gates below form one step, repeated {} times\n",
            self.n_steps,
            fmt_full(self.dt),
            self.order,
            self.ordering,
            self.n_qubits,
            self.n_steps
        );
        for g in &self.step {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}

/// Lie (order 1) or Strang (order 2) product over the Hamiltonian terms in their stored order.
pub fn trotterize(h: &CmqbHamiltonian, t: f64, dt: f64, order: u8) -> Result<GateSchedule> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be > 0, got {dt}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "total time must be > 0, got {t}"
        )));
    }
    let n_steps = (t / dt).round() as usize;
    if n_steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "time step {dt} exceeds total time {t}"
        )));
    }
    if (n_steps as f64 * dt - t).abs() > 1e-9 * t.max(1.0) {
        warn!(
            "t = {t} is not a multiple of dt = {dt}; using {n_steps} steps (t = {})",
            n_steps as f64 * dt
        );
    }
    let free = Gate::FreeEvolution {
        mode: 0,
        phase: h.omega * dt,
    };
    let mut step = Vec::new();
    match order {
        1 => {
            step.push(free);
            for term in &h.terms {
                step.extend(compile_term(term, dt)?);
            }
        }
        2 => {
            for term in &h.terms {
                step.extend(compile_term(term, dt / 2.0)?);
            }
            step.push(free);
            for term in h.terms.iter().rev() {
                step.extend(compile_term(term, dt / 2.0)?);
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "Trotter order must be 1 or 2, got {other}"
            )))
        }
    }
    for g in &step {
        g.validate(h.n_qubits)?;
    }
    Ok(GateSchedule {
        step,
        n_steps,
        dt,
        order,
        ordering: "grouped".into(),
        n_qubits: h.n_qubits,
    })
}

/// Gate with boson-space factors precomputed for a given Fock truncation.
enum Prepared {
    Qubit(Gate),
    Rotation {
        pauli: PauliString,
        c: f64,
        s: f64,
    },
    /// exp(-i dt (v0 + v1 x)) for the +1 and -1 eigenvalues of X_pivot.
    Pulse {
        pivot: usize,
        plus: Array2<Complex64>,
        minus: Array2<Complex64>,
    },
    Boson(Array2<Complex64>),
    Free(Vec<Complex64>),
}

/// Applies gates to Fock-major amplitude vectors without building full matrices.
pub struct GateExecutor {
    n_fock: usize,
    n_qubits: usize,
    x_vals: Array1<f64>,
    x_vecs: Array2<f64>,
}

impl GateExecutor {
    pub fn new(n_fock: usize, n_qubits: usize) -> Result<Self> {
        let (x_vals, x_vecs) = eigh(&boson_position(n_fock))?;
        Ok(GateExecutor {
            n_fock,
            n_qubits,
            x_vals,
            x_vecs,
        })
    }

    /// exp(-i dt (v0 + v1 x)) in the Fock basis.
    fn boson_exp(&self, v0: f64, v1: f64, dt: f64) -> Array2<Complex64> {
        let n = self.n_fock;
        let ph: Vec<Complex64> = self
            .x_vals
            .iter()
            .map(|&mu| Complex64::from_polar(1.0, -dt * (v0 + v1 * mu)))
            .collect();
        Array2::from_shape_fn((n, n), |(i, j)| {
            (0..n)
                .map(|k| ph[k] * (self.x_vecs[[i, k]] * self.x_vecs[[j, k]]))
                .sum()
        })
    }

    fn prepare(&self, g: &Gate) -> Result<Prepared> {
        g.validate(self.n_qubits)?;
        Ok(match g {
            Gate::PauliRotation { pauli, angle } => Prepared::Rotation {
                pauli: *pauli,
                c: angle.cos(),
                s: angle.sin(),
            },
            Gate::SpinDependentDisplacement {
                pivot, v0, v1, dt, ..
            } => Prepared::Pulse {
                pivot: *pivot,
                plus: self.boson_exp(*v0, *v1, *dt),
                minus: self.boson_exp(-*v0, -*v1, *dt),
            },
            Gate::Displacement { v0, v1, dt, .. } => Prepared::Boson(self.boson_exp(*v0, *v1, *dt)),
            Gate::FreeEvolution { phase, .. } => Prepared::Free(
                (0..self.n_fock)
                    .map(|v| Complex64::from_polar(1.0, -phase * v as f64))
                    .collect(),
            ),
            other => Prepared::Qubit(other.clone()),
        })
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    fn apply(&self, g: &Prepared, psi: &mut [Complex64]) {
        let ns = 1usize << self.n_qubits;
        let nf = self.n_fock;
        match g {
            Prepared::Qubit(Gate::Hadamard(q)) => {
                let m = self.bit(*q);
                for v in 0..nf {
                    for s in 0..ns {
                        if s & m == 0 {
                            let (i0, i1) = (v * ns + s, v * ns + (s | m));
                            let (a, b) = (psi[i0], psi[i1]);
                            psi[i0] = (a + b) * FRAC_1_SQRT_2;
                            psi[i1] = (a - b) * FRAC_1_SQRT_2;
                        }
                    }
                }
            }
            Prepared::Qubit(Gate::Phase(q)) | Prepared::Qubit(Gate::PhaseDagger(q)) => {
                let f = if matches!(g, Prepared::Qubit(Gate::Phase(_))) {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, -1.0)
                };
                let m = self.bit(*q);
                for (i, a) in psi.iter_mut().enumerate() {
                    if (i % ns) & m != 0 {
                        *a *= f;
                    }
                }
            }
            Prepared::Qubit(Gate::Cnot { control, target }) => {
                let (mc, mt) = (self.bit(*control), self.bit(*target));
                for v in 0..nf {
                    for s in 0..ns {
                        if s & mc != 0 && s & mt == 0 {
                            psi.swap(v * ns + s, v * ns + (s | mt));
                        }
                    }
                }
            }
            Prepared::Qubit(_) => unreachable!("non-qubit gates are prepared separately"),
            Prepared::Rotation { pauli, c, s: sn } => {
                let old = psi.to_vec();
                let mi = Complex64::new(0.0, -*sn);
                for v in 0..nf {
                    for s in 0..ns {
                        let (ph, t) = pauli.apply_to_basis(s);
                        psi[v * ns + t] = old[v * ns + t] * *c + mi * ph * old[v * ns + s];
                    }
                }
            }
            Prepared::Pulse { pivot, plus, minus } => {
                let m = self.bit(*pivot);
                let mut up = vec![C0; nf];
                let mut dn = vec![C0; nf];
                for s in 0..ns {
                    if s & m != 0 {
                        continue;
                    }
                    for v in 0..nf {
                        let (a, b) = (psi[v * ns + s], psi[v * ns + (s | m)]);
                        up[v] = (a + b) * FRAC_1_SQRT_2;
                        dn[v] = (a - b) * FRAC_1_SQRT_2;
                    }
                    for v in 0..nf {
                        let mut p = C0;
                        let mut q = C0;
                        for w in 0..nf {
                            p += plus[[v, w]] * up[w];
                            q += minus[[v, w]] * dn[w];
                        }
                        psi[v * ns + s] = (p + q) * FRAC_1_SQRT_2;
                        psi[v * ns + (s | m)] = (p - q) * FRAC_1_SQRT_2;
                    }
                }
            }
            Prepared::Boson(e) => {
                let mut col = vec![C0; nf];
                for s in 0..ns {
                    for v in 0..nf {
                        col[v] = psi[v * ns + s];
                    }
                    for v in 0..nf {
                        psi[v * ns + s] = (0..nf).map(|w| e[[v, w]] * col[w]).sum();
                    }
                }
            }
            Prepared::Free(ph) => {
                for (i, a) in psi.iter_mut().enumerate() {
                    *a *= ph[i / ns];
                }
            }
        }
    }

    /// Applies a gate sequence in time order.
    pub fn apply_sequence(&self, gates: &[Gate], psi: &mut [Complex64]) -> Result<()> {
        if psi.len() != self.n_fock << self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_fock << self.n_qubits,
                got: psi.len(),
            });
        }
        for g in gates {
            let p = self.prepare(g)?;
            self.apply(&p, psi);
        }
        Ok(())
    }

    /// Dense unitary of a gate sequence.
    pub fn sequence_matrix(&self, gates: &[Gate]) -> Result<Array2<Complex64>> {
        let dim = self.n_fock << self.n_qubits;
        let prepared: Vec<Prepared> = gates
            .iter()
            .map(|g| self.prepare(g))
            .collect::<Result<_>>()?;
        let mut m = Array2::zeros((dim, dim));
        let mut col = vec![C0; dim];
        for j in 0..dim {
            col.iter_mut().for_each(|x| *x = C0);
            col[j] = Complex64::new(1.0, 0.0);
            for p in &prepared {
                self.apply(p, &mut col);
            }
            for i in 0..dim {
                m[[i, j]] = col[i];
            }
        }
        Ok(m)
    }
}

/// Propagates through the schedule, recording the state at every step boundary.
pub fn propagate_schedule(
    psi0: &VibronicState,
    schedule: &GateSchedule,
) -> Result<PropagationResult> {
    if psi0.n_qubits != schedule.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: schedule.n_qubits,
            got: psi0.n_qubits,
        });
    }
    let ex = GateExecutor::new(psi0.n_fock, psi0.n_qubits)?;
    let prepared: Vec<Prepared> = schedule
        .step
        .iter()
        .map(|g| ex.prepare(g))
        .collect::<Result<_>>()?;
    let mut psi = psi0.amplitudes.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![psi0.amplitudes.clone()];
    for k in 1..=schedule.n_steps {
        for p in &prepared {
            ex.apply(p, &mut psi);
        }
        times.push(k as f64 * schedule.dt);
        states.push(Array1::from(psi.clone()));
    }
    Ok(PropagationResult {
        times,
        states,
        method: Method::Trotter,
    })
}

/// Trotter states at arbitrary increasing times: whole steps of `dt`, then
/// one shorter step for any remainder (applied to a copy, so the step grid
/// is never shifted).
pub fn trotter_evolve(
    h: &CmqbHamiltonian,
    psi0: &VibronicState,
    times: &[f64],
    dt: f64,
    order: u8,
) -> Result<PropagationResult> {
    check_times(times)?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("negative propagation time".into()));
    }
    if psi0.n_qubits != h.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits,
            got: psi0.n_qubits,
        });
    }
    let ex = GateExecutor::new(psi0.n_fock, psi0.n_qubits)?;
    let full = trotterize(h, dt, dt, order)?;
    let step: Vec<Prepared> = full
        .step
        .iter()
        .map(|g| ex.prepare(g))
        .collect::<Result<_>>()?;
    let mut psi = psi0.amplitudes.to_vec();
    let mut done = 0usize;
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let n = (t / dt + 1e-9).floor() as usize;
        while done < n {
            for p in &step {
                ex.apply(p, &mut psi);
            }
            done += 1;
        }
        let rem = t - n as f64 * dt;
        if rem > 1e-9 * t.max(1.0) {
            let part = trotterize(h, rem, rem, order)?;
            let mut tmp = psi.clone();
            ex.apply_sequence(&part.step, &mut tmp)?;
            states.push(Array1::from(tmp));
        } else {
            states.push(Array1::from(psi.clone()));
        }
    }
    Ok(PropagationResult {
        times: times.to_vec(),
        states,
        method: Method::Trotter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub t: f64,
    pub dt: f64,
    pub fidelity: f64,
}

pub fn fidelity_csv(rows: &[FidelityRow]) -> CsvTable {
    let mut t = CsvTable::new(vec!["t".into(), "dt".into(), "fidelity".into()]);
    for r in rows {
        t.push_f64(&[r.t, r.dt, r.fidelity]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian, identity_c, kron, max_abs_diff, to_complex};

    fn term(s: &str, v0: f64, v1: f64) -> CmqbTerm {
        CmqbTerm {
            pauli: s.parse().unwrap(),
            v0,
            v1,
        }
    }

    fn exact_term_unitary(t: &CmqbTerm, dt: f64, nf: usize) -> Array2<Complex64> {
        let x = to_complex(&boson_position(nf));
        let gen = kron(
            &(identity_c(nf).mapv(|z| z * t.v0) + x.mapv(|z| z * t.v1)),
            &t.pauli.matrix(),
        );
        expm_hermitian(&gen, dt).unwrap()
    }

    #[test]
    fn compiled_terms_match_exponentials() {
        let nf = 6;
        let ex = GateExecutor::new(nf, 4).unwrap();
        for (s, v0, v1) in [
            ("ZIII", 0.3, 0.1),
            ("XZXI", -0.2, 0.05),
            ("IYZY", 0.1, -0.3),
            ("XXYY", 0.07, 0.02),
            ("IIII", 1.1, 0.4),
            ("ZIZI", 0.5, 0.0),
        ] {
            let t = term(s, v0, v1);
            let gates = compile_term(&t, 0.7).unwrap();
            let u = ex.sequence_matrix(&gates).unwrap();
            let d = max_abs_diff(&u, &exact_term_unitary(&t, 0.7, nf));
            assert!(d < 1e-12, "{s}: {d}");
        }
    }

    #[test]
    fn cnot_count_and_pivot() {
        let gates = compile_term(&term("IYZY", 0.1, 0.2), 1.0).unwrap();
        let cnots = gates
            .iter()
            .filter(|g| matches!(g, Gate::Cnot { .. }))
            .count();
        assert_eq!(cnots, 2 * (3 - 1));
        assert!(gates
            .iter()
            .any(|g| matches!(g, Gate::SpinDependentDisplacement { pivot: 1, .. })));
    }

    #[test]
    fn zero_step_is_identity() {
        let ex = GateExecutor::new(5, 4).unwrap();
        let gates = compile_term(&term("XZXZ", 0.4, 0.3), 0.0).unwrap();
        let u = ex.sequence_matrix(&gates).unwrap();
        assert!(max_abs_diff(&u, &identity_c(80)) < 1e-13);
    }

    #[test]
    fn single_z_rotation() {
        let gates = compile_term(&term("ZIII", 0.25, 0.0), 2.0).unwrap();
        assert_eq!(gates.len(), 1);
        assert!(matches!(gates[0], Gate::PauliRotation { .. }));
    }

    #[test]
    fn schedule_dump_format() {
        let h = CmqbHamiltonian {
            omega: 0.05,
            n_qubits: 4,
            n_modes: 1,
            terms: vec![term("IXIX", 0.1, 0.2)],
        };
        let s = trotterize(&h, 5.6, 5.6, 1).unwrap();
        let d = s.dump();
        assert!(d.contains("CNOT 2 4"));
        assert!(d.contains("SDD mode=1 pivot=2"));
        assert_eq!(s.operations_per_step(), 1);
        assert!(trotterize(&h, 5.6, 0.0, 1).is_err());
        assert!(trotterize(&h, 5.6, 1.0, 3).is_err());
    }

    #[test]
    fn arbitrary_times_reuse_step_grid() {
        let h = CmqbHamiltonian {
            omega: 0.05,
            n_qubits: 4,
            n_modes: 1,
            terms: vec![
                term("ZIII", 0.3, 0.1),
                term("XZXI", 0.02, 0.0),
                term("IIZZ", 0.1, -0.05),
            ],
        };
        let mut a = Array1::zeros(8 * 16);
        a[12] = Complex64::new(1.0, 0.0);
        let psi0 = VibronicState::new(a, 8, 4).unwrap();
        let sched = trotterize(&h, 4.0, 1.0, 1).unwrap();
        let steps = propagate_schedule(&psi0, &sched).unwrap();
        let vdiff = |x: &Array1<Complex64>, y: &Array1<Complex64>| {
            (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        let res = trotter_evolve(&h, &psi0, &[0.0, 2.0, 2.5, 4.0], 1.0, 1).unwrap();
        assert!(vdiff(&res.states[1], &steps.states[2]) < 1e-13);
        assert!(vdiff(&res.states[3], &steps.states[4]) < 1e-13);
        let ex = GateExecutor::new(8, 4).unwrap();
        let mut mid = steps.states[2].to_vec();
        ex.apply_sequence(&trotterize(&h, 0.5, 0.5, 1).unwrap().step, &mut mid)
            .unwrap();
        assert!(vdiff(&res.states[2], &Array1::from(mid)) < 1e-13);
    }
}
