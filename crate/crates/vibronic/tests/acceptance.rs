//! One test per acceptance criterion. Each prints a single `ACnn PASS|FAIL`
//! line straight to stdout (bypassing the capture) and then asserts.
//!
//! Run with `cargo test --release -p vibronic --test acceptance -- --test-threads 1`
//! for ordered output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use vibronic::bo::{csf_electronic_matrix, weyl_count};
use vibronic::config::{RunMethod, ScenarioConfig};
use vibronic::density::{exact_joint_density, exact_nuclear_density};
use vibronic::electronic::{
    run_electronic_structure, ElectronicStructure, IntegralLabel, TaylorFit,
};
use vibronic::engine::{fidelity, prepare_initial_state, VibronicState};
use vibronic::fermion::{
    build_molecular_qubit_hamiltonian, electronic_hamiltonian_at, CmqbHamiltonian, CmqbTerm,
};
use vibronic::linalg::eigh;
use vibronic::pauli::PauliString;
use vibronic::scenario::{Scenario, SimulationOutput};
use vibronic::tomography::{reconstruct_nuclear_density, CharacteristicEngine};
use vibronic::trotter::{compile_term, trotter_evolve, GateExecutor};

const T_EARLY: f64 = 56.1;
const T_LATE: f64 = 1514.4;
const T_FINAL: f64 = 2500.0;

fn report(id: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "AC{id:02} {verdict}: {detail}");
    let _ = out.flush();
}

struct Shared {
    config: ScenarioConfig,
    es: ElectronicStructure,
    es_seconds: f64,
    h: CmqbHamiltonian,
}

fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = ScenarioConfig::default();
        let start = Instant::now();
        let es = run_electronic_structure(
            &config.model,
            &config.grids.electron,
            &config.grids.nuclear,
            config.fit_window(),
        )
        .expect("electronic structure");
        let es_seconds = start.elapsed().as_secs_f64();
        let h = build_molecular_qubit_hamiltonian(&es.fit, &config.model).expect("hamiltonian");
        Shared {
            config,
            es,
            es_seconds,
            h,
        }
    })
}

/// Scenario that is only used in memory; nothing is written.
fn in_memory(config: ScenarioConfig) -> Scenario {
    Scenario {
        out: config.output_dir.clone(),
        config,
    }
}

/// Density times shared by the exact and Born-Huang runs: every 100 a.u.
/// plus the two reference times.
fn trajectory_density_times() -> Vec<f64> {
    let mut times: Vec<f64> = (0..=25).map(|k| 100.0 * k as f64).collect();
    times.extend([T_EARLY, T_LATE]);
    times.sort_by(f64::total_cmp);
    times
}

fn run_method(method: RunMethod, density_times: Vec<f64>) -> SimulationOutput {
    let s = shared();
    let mut config = s.config.clone();
    config.dynamics.method = method;
    config.dynamics.density_times = density_times;
    in_memory(config)
        .simulate(&s.es, &s.h)
        .unwrap_or_else(|e| panic!("{method} run: {e}"))
}

fn exact_run() -> &'static SimulationOutput {
    static CELL: OnceLock<SimulationOutput> = OnceLock::new();
    CELL.get_or_init(|| run_method(RunMethod::Exact, trajectory_density_times()))
}

fn bo_full_run() -> &'static SimulationOutput {
    static CELL: OnceLock<SimulationOutput> = OnceLock::new();
    CELL.get_or_init(|| run_method(RunMethod::BoFull, trajectory_density_times()))
}

fn gboa_run() -> &'static SimulationOutput {
    static CELL: OnceLock<SimulationOutput> = OnceLock::new();
    CELL.get_or_init(|| run_method(RunMethod::BoGboa, vec![T_EARLY, T_LATE]))
}

fn initial_state(n_fock: usize) -> VibronicState {
    let c = &shared().config;
    prepare_initial_state(&c.model, c.dynamics.r0, &c.dynamics.occupation, n_fock).unwrap()
}

fn joint_at(run: &SimulationOutput, t: f64) -> &vibronic::density::JointDensity {
    run.joint
        .iter()
        .find(|(s, _)| (s - t).abs() < 1e-9)
        .map(|(_, d)| d)
        .unwrap_or_else(|| panic!("no joint density at t = {t}"))
}

fn state_at(run: &SimulationOutput, t: f64) -> &VibronicState {
    run.states
        .iter()
        .find(|(s, _)| (s - t).abs() < 1e-9)
        .map(|(_, st)| st)
        .unwrap_or_else(|| panic!("no state at t = {t}"))
}

// ---------------------------------------------------------------------------
// Closed-form Pauli expansion of the two-orbital Hamiltonian, written out
// term by term (qubit 1 leftmost).

fn closed_form_expression(v: &BTreeMap<IntegralLabel, f64>) -> BTreeMap<&'static str, f64> {
    use IntegralLabel::*;
    let g = |l| v[&l];
    let (haa, hbb, hab) = (g(Haa), g(Hbb), g(Hab));
    let (vaaaa, vbbbb, vabab) = (g(Vaaaa), g(Vbbbb), g(Vabab));
    let (vaaab, vabbb, vaabb) = (g(Vaaab), g(Vabbb), g(Vaabb));
    let mut m = BTreeMap::new();
    m.insert(
        "IIII",
        haa + hbb + 0.25 * (vaaaa + vbbbb + 4.0 * vabab - 2.0 * vaabb),
    );
    let za = -(haa / 2.0 + 0.25 * (vaaaa + 2.0 * vabab - vaabb));
    let zb = -(hbb / 2.0 + 0.25 * (vbbbb + 2.0 * vabab - vaabb));
    m.insert("ZIII", za);
    m.insert("IZII", za);
    m.insert("IIZI", zb);
    m.insert("IIIZ", zb);
    m.insert("ZZII", 0.25 * vaaaa);
    m.insert("IIZZ", 0.25 * vbbbb);
    m.insert("ZIIZ", 0.25 * vabab);
    m.insert("IZZI", 0.25 * vabab);
    m.insert("ZIZI", 0.25 * (vabab - vaabb));
    m.insert("IZIZ", 0.25 * (vabab - vaabb));
    let hop = hab / 2.0 + 0.25 * (vaaab + vabbb);
    for s in ["XZXI", "YZYI", "IXZX", "IYZY"] {
        m.insert(s, hop);
    }
    for s in ["ZXZX", "ZYZY", "XIXI", "YIYI"] {
        m.insert(s, -0.25 * vaaab);
    }
    for s in ["XZXZ", "YZYZ", "IXIX", "IYIY"] {
        m.insert(s, -0.25 * vabbb);
    }
    m.insert("XXYY", -0.25 * vaabb);
    m.insert("YYXX", -0.25 * vaabb);
    m.insert("XYYX", 0.25 * vaabb);
    m.insert("YXXY", 0.25 * vaabb);
    m
}

/// Largest coefficient mismatch over the union of strings.
fn expression_mismatch(
    computed: &BTreeMap<String, f64>,
    reference: &BTreeMap<&'static str, f64>,
) -> f64 {
    let mut keys: Vec<String> = computed.keys().cloned().collect();
    keys.extend(reference.keys().map(|s| s.to_string()));
    keys.iter()
        .map(|k| {
            let a = computed.get(k).copied().unwrap_or(0.0);
            let b = reference.get(k.as_str()).copied().unwrap_or(0.0);
            (a - b).abs()
        })
        .fold(0.0, f64::max)
}

fn synthetic_fit() -> TaylorFit {
    use IntegralLabel::*;
    TaylorFit::from_coefficients(&[
        (Haa, -2.1, 0.3),
        (Hbb, -1.7, -0.25),
        (Hab, -0.03, 0.011),
        (Vaaaa, 0.41, 0.02),
        (Vbbbb, 0.37, -0.015),
        (Vabab, 0.19, 0.007),
        (Vaaab, 0.013, -0.004),
        (Vabbb, 0.021, 0.006),
        (Vaabb, 0.009, 0.003),
    ])
}

fn values_at(fit: &TaylorFit, r: f64) -> BTreeMap<IntegralLabel, f64> {
    IntegralLabel::ALL
        .iter()
        .map(|&l| (l, fit.value(l, r).unwrap()))
        .collect()
}

#[test]
fn ac01_mapped_hamiltonian_identity() {
    let computed_fit = shared().es.fit.clone();
    let start = Instant::now();
    let params = shared().config.model;
    let omega = params.omega();
    let scale = (2.0 * params.mass * omega).sqrt();
    let mut worst = 0.0f64;
    let mut max_imag = 0.0f64;
    for fit in [synthetic_fit(), computed_fit] {
        for r in [-0.3, -0.1, 0.0, 0.05, 0.2] {
            let op = electronic_hamiltonian_at(&fit, r).unwrap();
            let mut computed = BTreeMap::new();
            for (s, c) in op.terms() {
                max_imag = max_imag.max(c.c0.im.abs()).max(c.c1.norm());
                computed.insert(s.to_string(), c.c0.re);
            }
            worst = worst.max(expression_mismatch(
                &computed,
                &closed_form_expression(&values_at(&fit, r)),
            ));
        }
        let h = build_molecular_qubit_hamiltonian(&fit, &params).unwrap();
        let mut v0 = BTreeMap::new();
        let mut v1 = BTreeMap::new();
        for t in &h.terms {
            let s = t.pauli.to_string();
            let shift = if t.pauli.is_identity() {
                omega / 2.0
            } else {
                0.0
            };
            v0.insert(s.clone(), t.v0 - shift);
            v1.insert(s, t.v1 * scale);
        }
        let slopes = IntegralLabel::ALL
            .iter()
            .map(|&l| (l, fit.get(l).unwrap().v1))
            .collect();
        let offsets = values_at(&fit, 0.0);
        worst = worst.max(expression_mismatch(&v0, &closed_form_expression(&offsets)));
        worst = worst.max(expression_mismatch(&v1, &closed_form_expression(&slopes)));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && max_imag <= 1e-12 && secs < 1.0;
    report(
        1,
        pass,
        &format!("max coefficient mismatch {worst:.2e} (tol 1e-12), imag {max_imag:.1e}, {secs:.3} s (< 1 s)"),
    );
    assert!(pass);
}

#[test]
fn ac02_taylor_table() {
    use IntegralLabel::*;
    let s = shared();
    let f = |l| s.es.fit.get(l).unwrap();
    let large = [
        (Haa, -2.66),
        (Hbb, -2.66),
        (Vaaaa, 0.2236),
        (Vbbbb, 0.2236),
        (Vabab, 0.1652),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (l, reference) in large {
        let rel = (f(l).v0 - reference).abs() / reference.abs();
        if rel > 0.02 {
            pass = false;
            notes.push(format!("v0({}) off by {:.1}%", l.name(), 100.0 * rel));
        }
    }
    let slope = f(Haa).v1;
    let slope_rel = (slope - 0.2).abs() / 0.2;
    if slope_rel > 0.05 {
        pass = false;
    }
    let anti_slope = (f(Hbb).v1 + f(Haa).v1).abs();
    let anti_offset = (f(Hbb).v0 - f(Haa).v0).abs();
    if anti_slope > 1e-6 || anti_offset > 1e-6 {
        pass = false;
    }
    let small = [
        (Vaaab, 1e-4),
        (Vabbb, 1e-4),
        (Vaabb, 1.5e-6),
        (Hab, -4.6e-3),
    ];
    for (l, reference) in small {
        let ratio = f(l).v0 / reference;
        if !(0.1..=10.0).contains(&ratio) {
            pass = false;
            notes.push(format!("v0({}) ratio {ratio:.2}", l.name()));
        }
    }
    let minutes_ok = s.es_seconds < 600.0;
    pass &= minutes_ok;
    report(
        2,
        pass,
        &format!(
            "v1(h_aa) = {slope:.4} vs 0.2 ({:.1}% off, tol 5%); antisymmetry {anti_slope:.1e}/{anti_offset:.1e} (tol 1e-6); \
             v0(h_aa) = {:.4}, v0(v_aaaa) = {:.4}, v0(v_abab) = {:.4}; small couplings v_aaab {:.2e}, v_abbb {:.2e}, v_aabb {:.2e}, h_ab {:.2e}; {:.1} s{}",
            100.0 * slope_rel,
            f(Haa).v0,
            f(Vaaaa).v0,
            f(Vabab).v0,
            f(Vaaab).v0,
            f(Vabbb).v0,
            f(Vaabb).v0,
            f(Hab).v0,
            s.es_seconds,
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join(", ")) }
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Independent Jordan-Wigner oracle for the spin operators: qubit 0 is the
// most significant bit, |1> is occupied, spin orbital 2i + sigma.

fn kron_all(factors: &[Array2<f64>]) -> Array2<f64> {
    let mut out = Array2::from_elem((1, 1), 1.0);
    for f in factors {
        let (ra, ca) = out.dim();
        let (rb, cb) = f.dim();
        let mut next = Array2::zeros((ra * rb, ca * cb));
        for i in 0..ra {
            for j in 0..ca {
                for k in 0..rb {
                    for l in 0..cb {
                        next[[i * rb + k, j * cb + l]] = out[[i, j]] * f[[k, l]];
                    }
                }
            }
        }
        out = next;
    }
    out
}

fn oracle_annihilator(p: usize, n: usize) -> Array2<f64> {
    let z = Array2::from_diag(&Array1::from(vec![1.0, -1.0]));
    let id = Array2::eye(2);
    let mut lower = Array2::zeros((2, 2));
    lower[[0, 1]] = 1.0;
    let factors: Vec<Array2<f64>> = (0..n)
        .map(|q| match q.cmp(&p) {
            std::cmp::Ordering::Less => z.clone(),
            std::cmp::Ordering::Equal => lower.clone(),
            std::cmp::Ordering::Greater => id.clone(),
        })
        .collect();
    kron_all(&factors)
}

fn oracle_spin_squared() -> Array2<f64> {
    let a: Vec<Array2<f64>> = (0..4).map(|p| oracle_annihilator(p, 4)).collect();
    let num = |p: usize| a[p].t().dot(&a[p]);
    let mut s_plus = Array2::<f64>::zeros((16, 16));
    let mut s_z = Array2::<f64>::zeros((16, 16));
    for i in 0..2 {
        s_plus = s_plus + a[2 * i].t().dot(&a[2 * i + 1]);
        s_z = s_z + (num(2 * i) - num(2 * i + 1)) * 0.5;
    }
    s_plus.t().dot(&s_plus) + s_z.dot(&s_z) + &s_z
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn ac03_csf_fock_sector() {
    let fit = &shared().es.fit;
    let s2 = oracle_spin_squared();
    let two_electron: Vec<usize> = (0..16usize).filter(|s| s.count_ones() == 2).collect();
    let n6 = two_electron.len();
    let mut s2_sector = Array2::zeros((n6, n6));
    for (i, &a) in two_electron.iter().enumerate() {
        for (j, &b) in two_electron.iter().enumerate() {
            s2_sector[[i, j]] = s2[[a, b]];
        }
    }
    let (s2_vals, s2_vecs) = eigh(&s2_sector).unwrap();
    let singlets: Vec<usize> = (0..n6).filter(|&k| s2_vals[k].abs() < 1e-8).collect();
    assert_eq!(singlets.len(), 3, "singlet count");
    let mut worst = 0.0f64;
    let mut worst_imag = 0.0f64;
    for k in 0..21 {
        let r = -0.4 + 0.04 * k as f64;
        let op = electronic_hamiltonian_at(fit, r).unwrap();
        let mut h = Array2::<Complex64>::zeros((16, 16));
        for (s, c) in op.terms() {
            h = h + s.matrix().mapv(|x| x * c.c0);
        }
        worst_imag = worst_imag.max(h.iter().map(|x| x.im.abs()).fold(0.0, f64::max));
        let mut sector = Array2::zeros((3, 3));
        for (i, &u) in singlets.iter().enumerate() {
            for (j, &v) in singlets.iter().enumerate() {
                let mut acc = 0.0;
                for (p, &a) in two_electron.iter().enumerate() {
                    for (q, &b) in two_electron.iter().enumerate() {
                        acc += s2_vecs[[p, u]] * h[[a, b]].re * s2_vecs[[q, v]];
                    }
                }
                sector[[i, j]] = acc;
            }
        }
        let fock = sorted(eigh(&sector).unwrap().0.to_vec());
        let csf = csf_electronic_matrix(fit, r).unwrap();
        let csf = Array2::from_shape_fn((3, 3), |(i, j)| csf[i][j]);
        let csf = sorted(eigh(&csf).unwrap().0.to_vec());
        for (a, b) in fock.iter().zip(&csf) {
            worst = worst.max((a - b).abs());
        }
    }
    let pass = worst <= 1e-10 && worst_imag <= 1e-12;
    report(
        3,
        pass,
        &format!("max |E_csf - E_fock| over 21 R = {worst:.2e} (tol 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn ac04_exact_propagation_health() {
    let run = exact_run();
    let rows = &run.trajectory;
    let e0 = rows[0].energy;
    let norm_drift = rows
        .iter()
        .map(|r| (r.norm - 1.0).abs())
        .fold(0.0, f64::max);
    let energy_drift = rows
        .iter()
        .map(|r| (r.energy - e0).abs() / e0.abs())
        .fold(0.0, f64::max);
    let n_dev = rows
        .iter()
        .map(|r| (r.fon.iter().sum::<f64>() - 2.0).abs())
        .fold(0.0, f64::max);
    let t_last = rows.last().unwrap().t;

    let s = shared();
    let mut big = s.config.clone();
    big.grids.n_fock = 28;
    big.dynamics.density_times = vec![];
    let larger = in_memory(big).simulate(&s.es, &s.h).unwrap();
    let mut fon_change = 0.0f64;
    let mut matched = 0;
    for a in rows {
        if let Some(b) = larger.trajectory.iter().find(|b| (b.t - a.t).abs() < 1e-9) {
            matched += 1;
            for p in 0..4 {
                fon_change = fon_change.max((a.fon[p] - b.fon[p]).abs());
            }
        }
    }
    let pass = norm_drift <= 1e-10
        && energy_drift <= 1e-8
        && n_dev <= 1e-8
        && fon_change <= 1e-6
        && t_last >= T_FINAL - 1e-9
        && matched == larger.trajectory.len();
    report(
        4,
        pass,
        &format!(
            "norm drift {norm_drift:.1e} (1e-10), rel energy drift {energy_drift:.1e} (1e-8), |<N>-2| {n_dev:.1e} (1e-8), \
             FON change n_fock 20->28 {fon_change:.1e} (1e-6) over [0, {t_last}]"
        ),
    );
    assert!(pass);
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn ac05_trotter_convergence() {
    let start = Instant::now();
    let s = shared();
    let psi0 = initial_state(s.config.grids.n_fock);
    let reference = state_at(exact_run(), T_FINAL);
    let steps = [22.4, 11.2, 5.6, 2.8];
    let infidelity = |order: u8| -> Vec<f64> {
        steps
            .iter()
            .map(|&dt| {
                let r = trotter_evolve(&s.h, &psi0, &[T_FINAL], dt, order).unwrap();
                1.0 - fidelity(&reference.amplitudes, r.states.last().unwrap()).unwrap()
            })
            .collect()
    };
    let first = infidelity(1);
    let slope = log_log_slope(&steps, &first);
    let f56 = 1.0 - first[2];
    let secs = start.elapsed().as_secs_f64();
    let pass = f56 >= 0.99 && slope >= 1.8 && secs < 300.0;
    let second = infidelity(2);
    report(
        5,
        pass,
        &format!(
            "F(5.6) = {f56:.4} (>= 0.99), infidelities {:?}, log-log slope {slope:.2} (>= 1.8), {secs:.1} s; \
             info: second-order infidelities {:?}, slope {:.2}",
            first.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(),
            second.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(),
            log_log_slope(&steps, &second)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// Closed-form term exponential: with P² = 1 and A = v0 + v1 (b + b†),
// exp(-i dt A ⊗ P) = cos(dt A) ⊗ 1 - i sin(dt A) ⊗ P.

fn term_exponential(term: &CmqbTerm, dt: f64, n_fock: usize) -> Array2<Complex64> {
    let mut x = Array2::zeros((n_fock, n_fock));
    for v in 1..n_fock {
        let s = (v as f64).sqrt();
        x[[v - 1, v]] = s;
        x[[v, v - 1]] = s;
    }
    let a = x * term.v1 + Array2::<f64>::eye(n_fock) * term.v0;
    let (vals, vecs) = eigh(&a).unwrap();
    let func = |g: fn(f64) -> f64| {
        let d = Array2::from_diag(&vals.mapv(|l| g(dt * l)));
        vecs.dot(&d).dot(&vecs.t())
    };
    let cos = func(f64::cos);
    let sin = func(f64::sin);
    let p = term.pauli.matrix();
    let nq = p.nrows();
    let mut out = Array2::zeros((n_fock * nq, n_fock * nq));
    for v in 0..n_fock {
        for w in 0..n_fock {
            for s in 0..nq {
                out[[v * nq + s, w * nq + s]] += Complex64::new(cos[[v, w]], 0.0);
                for t in 0..nq {
                    out[[v * nq + s, w * nq + t]] += Complex64::new(0.0, -sin[[v, w]]) * p[[s, t]];
                }
            }
        }
    }
    out
}

#[test]
fn ac06_circuit_compilation() {
    let start = Instant::now();
    let n_fock = 8;
    let dt = 5.6;
    let mut terms = shared().h.terms.clone();
    terms.push(CmqbTerm {
        pauli: "IYZY".parse::<PauliString>().unwrap(),
        v0: 0.0,
        v1: 0.37,
    });
    let ex = GateExecutor::new(n_fock, 4).unwrap();
    let mut worst = 0.0f64;
    let mut worst_term = String::new();
    for term in &terms {
        let gates = compile_term(term, dt).unwrap();
        let u = ex.sequence_matrix(&gates).unwrap();
        let target = term_exponential(term, dt, n_fock);
        let diff = (&u - &target).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if diff > worst {
            worst = diff;
            worst_term = term.pauli.to_string();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 10.0;
    report(
        6,
        pass,
        &format!(
            "{} terms incl. theta (b+b†) Y2 Z3 Y4: max |U - exp| = {worst:.2e} at {worst_term} (tol 1e-12), {secs:.2} s",
            terms.len()
        ),
    );
    assert!(pass);
}

#[test]
fn ac07_tomography_round_trip() {
    let s = shared();
    let grid = s.config.momentum_grid();
    assert_eq!((grid.n_k, grid.dk), (250, 1.26));
    let r_points = grid.r_points();
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [T_EARLY, T_LATE] {
        let state = state_at(exact_run(), t);
        let engine = CharacteristicEngine::new(state, grid, &s.config.model).unwrap();
        let samples = engine.exact(vibronic::tomography::Pair::None).unwrap();
        let rec = reconstruct_nuclear_density(&samples, &r_points).unwrap();
        let truth = exact_nuclear_density(state, &s.config.model, &r_points);
        let l1 = rec.l1(&truth).unwrap();
        let integral = rec.integral();
        pass &= l1 <= 1e-2 && (integral - 1.0).abs() <= 1e-3;
        parts.push(format!("t = {t}: L1 {l1:.2e}, integral {integral:.6}"));
    }
    report(
        7,
        pass,
        &format!("{} (tol L1 1e-2, integral 1 +- 1e-3)", parts.join("; ")),
    );
    assert!(pass);
}

#[test]
fn ac08_density_snapshots() {
    let s = shared();
    let exact = exact_run();
    let psi0 = initial_state(s.config.grids.n_fock);
    let trotter = trotter_evolve(&s.h, &psi0, &[T_EARLY], 5.6, 1).unwrap();
    let trotter_state = VibronicState::new(
        trotter.states.last().unwrap().clone(),
        psi0.n_fock,
        psi0.n_qubits,
    )
    .unwrap();
    let r_nuc = s.config.grids.density_nuclear.points();
    let trotter_joint =
        exact_joint_density(&trotter_state, &s.config.model, &s.es.diabatic, &r_nuc).unwrap();
    let exact_early = joint_at(exact, T_EARLY);
    let l1_trotter = exact_early.l1(&trotter_joint).unwrap();
    let left_exact = exact_early.left_fraction();
    let left_trotter = trotter_joint.left_fraction();

    let gboa = gboa_run();
    let excess = joint_at(gboa, T_EARLY).right_fraction() - exact_early.right_fraction();
    let l1_gboa = joint_at(gboa, T_LATE).l1(joint_at(exact, T_LATE)).unwrap();
    let l1_full = joint_at(bo_full_run(), T_LATE)
        .l1(joint_at(exact, T_LATE))
        .unwrap();

    let checks = [
        l1_trotter <= 0.05,
        left_exact > 0.8 && left_trotter > 0.8,
        excess >= 0.05,
        l1_gboa > 10.0 * l1_full,
    ];
    let pass = checks.iter().all(|&c| c);
    report(
        8,
        pass,
        &format!(
            "t = {T_EARLY}: L1(exact, trotter 5.6) {l1_trotter:.3} (<= 0.05) [{}], left weight exact {left_exact:.3} / trotter {left_trotter:.3} (> 0.8) [{}], \
             GBOA right excess {excess:.3} (>= 0.05) [{}]; t = {T_LATE}: L1 GBOA {l1_gboa:.3} vs 10 x full {:.3} [{}]",
            ok(checks[0]),
            ok(checks[1]),
            ok(checks[2]),
            10.0 * l1_full,
            ok(checks[3]),
        ),
    );
    assert!(pass);
}

fn ok(c: bool) -> &'static str {
    if c {
        "ok"
    } else {
        "fail"
    }
}

#[test]
fn ac09_pipeline_equivalence() {
    let exact = exact_run();
    let bo = bo_full_run();
    let mut fon_dev = 0.0f64;
    let mut matched = 0;
    for a in &exact.trajectory {
        if let Some(b) = bo.trajectory.iter().find(|b| (b.t - a.t).abs() < 1e-9) {
            matched += 1;
            for p in 0..4 {
                fon_dev = fon_dev.max((a.fon[p] - b.fon[p]).abs());
            }
        }
    }
    let mut l1_max = 0.0f64;
    let mut l1_at = 0.0;
    for (t, d) in &exact.joint {
        let l1 = d.l1(joint_at(bo, *t)).unwrap();
        if l1 > l1_max {
            l1_max = l1;
            l1_at = *t;
        }
    }
    let pass = fon_dev <= 0.02 && l1_max <= 0.05 && matched == exact.trajectory.len();
    report(
        9,
        pass,
        &format!(
            "FON max deviation {fon_dev:.2e} over {matched} times (<= 0.02); joint-density L1 max {l1_max:.2e} at t = {l1_at} over {} times (<= 0.05)",
            exact.joint.len()
        ),
    );
    assert!(pass);
}

/// Spin-S configuration count by enumerating determinants: the number with
/// M_S = S minus the number with M_S = S + 1.
fn enumerated_csf_count(two_s: u32, n_spin_orbitals: u32, n_electrons: u32) -> u128 {
    let mut at = [0i64; 2];
    for det in 0u32..(1 << n_spin_orbitals) {
        if det.count_ones() != n_electrons {
            continue;
        }
        let up = (0..n_spin_orbitals)
            .step_by(2)
            .filter(|&p| det >> p & 1 == 1)
            .count() as i64;
        let two_ms = 2 * up - n_electrons as i64;
        if two_ms == two_s as i64 {
            at[0] += 1;
        } else if two_ms == two_s as i64 + 2 {
            at[1] += 1;
        }
    }
    (at[0] - at[1]) as u128
}

#[test]
fn ac10_weyl_counting() {
    let start = Instant::now();
    let mut pass = weyl_count(0, 4, 2).ok() == Some(3);
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for n_o in (2..=12u32).step_by(2) {
        for n_e in 0..=n_o {
            for two_s in 0..=2u32 {
                if two_s > n_e || (n_e - two_s) % 2 != 0 {
                    continue;
                }
                cases += 1;
                let brute = enumerated_csf_count(two_s, n_o, n_e);
                if weyl_count(two_s, n_o, n_e).ok() != Some(brute) {
                    mismatches.push((two_s, n_o, n_e));
                }
            }
        }
    }
    pass &= mismatches.is_empty();
    let secs = start.elapsed().as_secs_f64();
    report(
        10,
        pass,
        &format!(
            "weyl_count(0,4,2) = {:?}; {cases} cases vs determinant enumeration, mismatches {mismatches:?}; {secs:.3} s",
            weyl_count(0, 4, 2).ok()
        ),
    );
    assert!(pass);
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, std::fs::read(&path).unwrap());
        }
    }
    out
}

fn determinism_run(dir: &Path, seed: u64) -> BTreeMap<String, Vec<u8>> {
    let mut config = ScenarioConfig::default();
    config.output_dir = dir.to_path_buf();
    config.measurement.shots = 2000;
    config.measurement.seed = seed;
    config.dynamics.method = RunMethod::Trotter;
    config.dynamics.t_final = 112.0;
    config.dynamics.density_times = vec![T_EARLY];
    let scenario = Scenario::new(config).unwrap();
    scenario.run_simulate().unwrap();
    scenario.run_tomography().unwrap();
    csv_files(dir)
}

#[test]
fn ac11_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = determinism_run(a.path(), 7);
    let second = determinism_run(b.path(), 7);
    let other_seed = determinism_run(c.path(), 8);
    let differing: Vec<&String> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(*v))
        .map(|(k, _)| k)
        .collect();
    let sampled_changed = first
        .iter()
        .any(|(k, v)| other_seed.get(k).is_some_and(|w| w != v));
    let pass = !first.is_empty() && first.len() == second.len() && differing.is_empty();
    report(
        11,
        pass,
        &format!(
            "{} CSV files byte-identical across two seed-7 runs (differing: {differing:?}); a different seed changes sampled output: {sampled_changed}",
            first.len()
        ),
    );
    assert!(pass);
    assert!(sampled_changed);
}
