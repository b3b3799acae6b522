//! Scenario runner: integrals -> mapping -> propagation -> measurement, with
//! a content-addressed integral cache and a manifest of every run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bo::{
    bo_fon, bo_joint_density, bo_position_moments, build_bh_hamiltonian, diagonalize_bo,
    initial_state_bo, surfaces_csv, BhPropagator, BoSurfaces, DvrState,
};
use crate::config::{RunMethod, ScenarioConfig};
use crate::density::{exact_joint_density, exact_nuclear_density, JointDensity, NuclearDensity};
use crate::electronic::{integrals_csv, run_electronic_structure, taylor_csv, ElectronicStructure};
use crate::engine::{
    cmqb_matrix, fidelity, prepare_initial_state, time_grid, trajectory_csv, ObservableSet,
    SpectralPropagator, TrajectoryRow, VibronicState,
};
use crate::error::{Error, Result};
use crate::fermion::{build_molecular_qubit_hamiltonian, CmqbHamiltonian};
use crate::io::{blob_hash, file_hash, fmt_full, time_label, CsvTable};
use crate::tomography::{
    measure_rdm1, rdm1_csv, reconstruct_densities, sampled_rdm1, TomographyOptions,
};
use crate::trotter::{fidelity_csv, trotter_evolve, trotterize, FidelityRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const MANIFEST: &str = "manifest.json";
const TIME_TOL: f64 = 1e-9;

/// One row per command invocation in `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub method: Option<String>,
    pub dt: Option<f64>,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub runs: Vec<RunRecord>,
}

/// Sorted union of the trajectory grid, the density times and t_final.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePlan {
    pub times: Vec<f64>,
    pub trajectory: Vec<bool>,
    pub snapshot: Vec<bool>,
}

impl TimePlan {
    pub fn new(t_final: f64, interval: f64, snapshots: &[f64]) -> Result<Self> {
        let mut grid = time_grid(t_final, interval)?;
        if (grid.last().copied().unwrap_or(0.0) - t_final).abs() > TIME_TOL * t_final.max(1.0) {
            grid.push(t_final);
        }
        let mut all: Vec<(f64, bool, bool)> = grid.iter().map(|&t| (t, true, false)).collect();
        for &s in snapshots.iter().chain(std::iter::once(&t_final)) {
            match all
                .iter_mut()
                .find(|e| (e.0 - s).abs() <= TIME_TOL * s.max(1.0))
            {
                Some(e) => e.2 = true,
                None => all.push((s, false, true)),
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(TimePlan {
            times: all.iter().map(|e| e.0).collect(),
            trajectory: all.iter().map(|e| e.1).collect(),
            snapshot: all.iter().map(|e| e.2).collect(),
        })
    }
}

/// Trajectory, fidelities and densities of one propagation.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub method: RunMethod,
    pub trajectory: Vec<TrajectoryRow>,
    /// Snapshot times with their statevectors (pre-BO methods only).
    pub states: Vec<(f64, VibronicState)>,
    pub joint: Vec<(f64, JointDensity)>,
    pub nuclear: Vec<(f64, NuclearDensity)>,
    pub fidelity: Vec<FidelityRow>,
    pub surfaces: Option<BoSurfaces>,
    pub discarded_weight: Option<f64>,
}

pub struct Scenario {
    pub config: ScenarioConfig,
    pub out: PathBuf,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let out = config.output_dir.clone();
        fs::create_dir_all(&out)?;
        Ok(Scenario { config, out })
    }

    fn config_hash(&self) -> Result<String> {
        Ok(blob_hash(self.config.to_toml()?.as_bytes()))
    }

    pub fn cache_key(&self) -> Result<String> {
        let c = &self.config;
        let key = serde_json::to_vec(&(
            VERSION,
            &c.model,
            &c.grids.electron,
            &c.grids.nuclear,
            &c.grids.fit_window,
        ))?;
        Ok(blob_hash(&key))
    }

    pub fn cache_path(&self) -> Result<PathBuf> {
        Ok(self
            .out
            .join("cache")
            .join(format!("electronic-{}.json", self.cache_key()?)))
    }

    /// Electronic structure from the cache, recomputed when missing or unreadable.
    pub fn electronic(&self) -> Result<ElectronicStructure> {
        let path = self.cache_path()?;
        if let Ok(bytes) = fs::read(&path) {
            match serde_json::from_slice(&bytes) {
                Ok(es) => return Ok(es),
                Err(e) => warn!("ignoring unreadable cache {}: {e}", path.display()),
            }
        }
        let c = &self.config;
        info!("computing electronic structure (cache miss)");
        let es = run_electronic_structure(
            &c.model,
            &c.grids.electron,
            &c.grids.nuclear,
            c.fit_window(),
        )?;
        fs::create_dir_all(path.parent().unwrap())?;
        fs::write(&path, serde_json::to_vec(&es)?)?;
        Ok(es)
    }

    pub fn hamiltonian(&self, es: &ElectronicStructure) -> Result<CmqbHamiltonian> {
        build_molecular_qubit_hamiltonian(&es.fit, &self.config.model)
    }

    fn stage_electronic(&self) -> Result<ElectronicStructure> {
        self.electronic().map_err(|e| e.in_stage("integrals"))
    }

    fn stage_mapping(&self, es: &ElectronicStructure) -> Result<CmqbHamiltonian> {
        self.hamiltonian(es).map_err(|e| e.in_stage("mapping"))
    }

    fn base_inputs(&self) -> Result<BTreeMap<String, String>> {
        let mut m = BTreeMap::new();
        let path = self.cache_path()?;
        if path.exists() {
            m.insert(rel(&self.out, &path), file_hash(&path)?);
        }
        Ok(m)
    }

    fn write(
        &self,
        outputs: &mut BTreeMap<String, String>,
        name: &str,
        content: &str,
    ) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, content)?;
        outputs.insert(name.to_string(), blob_hash(content.as_bytes()));
        Ok(())
    }

    fn write_csv(
        &self,
        outputs: &mut BTreeMap<String, String>,
        name: &str,
        table: &CsvTable,
    ) -> Result<()> {
        self.write(outputs, name, &table.render())
    }

    fn record(
        &self,
        command: &str,
        method: Option<RunMethod>,
        dt: Option<f64>,
        outputs: BTreeMap<String, String>,
    ) -> Result<RunRecord> {
        let rec = RunRecord {
            command: command.to_string(),
            method: method.map(|m| m.name().to_string()),
            dt,
            config_hash: self.config_hash()?,
            config: self.config.clone(),
            inputs: self.base_inputs()?,
            outputs,
        };
        let path = self.out.join(MANIFEST);
        let mut manifest = match fs::read(&path) {
            Ok(b) => serde_json::from_slice::<Manifest>(&b).unwrap_or_else(|e| {
                warn!("rewriting unreadable manifest: {e}");
                self.empty_manifest()
            }),
            Err(_) => self.empty_manifest(),
        };
        manifest.version = VERSION.to_string();
        manifest
            .runs
            .retain(|r| !(r.command == rec.command && r.method == rec.method && r.dt == rec.dt));
        manifest.runs.push(rec.clone());
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(rec)
    }

    fn empty_manifest(&self) -> Manifest {
        Manifest {
            version: VERSION.to_string(),
            runs: Vec::new(),
        }
    }

    /// `integrals`: integral tables and Taylor coefficients.
    pub fn run_integrals(&self) -> Result<RunRecord> {
        let es = self.stage_electronic()?;
        let mut out = BTreeMap::new();
        self.write_csv(&mut out, "integrals.csv", &integrals_csv(&es.tables))?;
        self.write_csv(&mut out, "taylor.csv", &taylor_csv(&es.fit))?;
        self.record("integrals", None, None, out)
    }

    /// `map`: the qubit-boson Hamiltonian as JSON.
    pub fn run_map(&self) -> Result<RunRecord> {
        let es = self.stage_electronic()?;
        let h = self.stage_mapping(&es)?;
        let mut out = BTreeMap::new();
        self.write(&mut out, "hamiltonian.json", &(h.to_json()? + "\n"))?;
        self.record("map", None, None, out)
    }

    /// Runs the configured method without writing files.
    pub fn simulate(
        &self,
        es: &ElectronicStructure,
        h: &CmqbHamiltonian,
    ) -> Result<SimulationOutput> {
        let m = self.config.dynamics.method;
        match m {
            RunMethod::Exact | RunMethod::Trotter => self.simulate_pre_bo(es, h, m),
            RunMethod::BoFull | RunMethod::BoGboa => self.simulate_bo(es, &m.bo_states(), m),
        }
        .map_err(|e| e.in_stage("propagation"))
    }

    fn density_r_points(&self) -> Vec<f64> {
        self.config.grids.density_nuclear.points()
    }

    fn nuclear_r_points(&self) -> Vec<f64> {
        self.config.momentum_grid().r_points()
    }

    fn initial_state(&self) -> Result<VibronicState> {
        let c = &self.config;
        prepare_initial_state(
            &c.model,
            c.dynamics.r0,
            &c.dynamics.occupation,
            c.grids.n_fock,
        )
    }

    fn simulate_pre_bo(
        &self,
        es: &ElectronicStructure,
        h: &CmqbHamiltonian,
        method: RunMethod,
    ) -> Result<SimulationOutput> {
        let c = &self.config;
        let d = &c.dynamics;
        let plan = TimePlan::new(d.t_final, d.output_interval, &d.density_times)?;
        let psi0 = self.initial_state()?;
        let hm = cmqb_matrix(h, c.grids.n_fock)?;
        let prop = SpectralPropagator::new(&hm)?;
        let c0 = prop.project(&psi0.amplitudes)?;
        let exact: Vec<Array1<Complex64>> = plan
            .times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    psi0.amplitudes.clone()
                } else {
                    prop.evolve_coefficients(&c0, t)
                }
            })
            .collect();
        let (states, fid) = if method == RunMethod::Trotter {
            let res = trotter_evolve(h, &psi0, &plan.times, d.dt, d.order)?;
            let mut rows = Vec::new();
            for (k, &t) in plan.times.iter().enumerate() {
                if plan.trajectory[k] {
                    rows.push(FidelityRow {
                        t,
                        dt: d.dt,
                        fidelity: fidelity(&exact[k], &res.states[k])?,
                    });
                }
            }
            (res.states, rows)
        } else {
            (exact, Vec::new())
        };
        let obs = ObservableSet::new(h, &c.model, c.grids.n_fock)?;
        let mut trajectory = Vec::new();
        let mut snaps = Vec::new();
        let mut joint = Vec::new();
        let mut nuclear = Vec::new();
        let r_joint = self.density_r_points();
        let r_nuc = self.nuclear_r_points();
        for (k, &t) in plan.times.iter().enumerate() {
            if plan.trajectory[k] {
                trajectory.push(obs.evaluate(t, &states[k])?);
            }
            if plan.snapshot[k] {
                let st = VibronicState::new(states[k].clone(), c.grids.n_fock, h.n_qubits)?;
                if d.density_times
                    .iter()
                    .any(|&x| (x - t).abs() <= TIME_TOL * t.max(1.0))
                {
                    joint.push((
                        t,
                        exact_joint_density(&st, &c.model, &es.diabatic, &r_joint)?,
                    ));
                    nuclear.push((t, exact_nuclear_density(&st, &c.model, &r_nuc)));
                }
                snaps.push((t, st));
            }
        }
        Ok(SimulationOutput {
            method,
            trajectory,
            states: snaps,
            joint,
            nuclear,
            fidelity: fid,
            surfaces: None,
            discarded_weight: None,
        })
    }

    /// Born-Huang dynamics on the BO `states` subset (0-based).
    pub fn simulate_bo(
        &self,
        es: &ElectronicStructure,
        states: &[usize],
        method: RunMethod,
    ) -> Result<SimulationOutput> {
        let c = &self.config;
        let d = &c.dynamics;
        let plan = TimePlan::new(d.t_final, d.output_interval, &d.density_times)?;
        let surfaces = diagonalize_bo(&es.fit, &c.model, &c.grids.dvr, d.nac)?;
        let bh = build_bh_hamiltonian(&surfaces, &c.model, states)?;
        let init = initial_state_bo(d.r0, &c.model, &surfaces, states)?;
        let prop = BhPropagator::new(&bh)?;
        let psis = prop.propagate(&init.state, &plan.times)?;
        let r_joint = self.density_r_points();
        let mut trajectory = Vec::new();
        let mut joint = Vec::new();
        for (k, &t) in plan.times.iter().enumerate() {
            let psi = &psis[k];
            if plan.trajectory[k] {
                trajectory.push(bo_row(t, psi, &prop, &surfaces));
            }
            if d.density_times
                .iter()
                .any(|&x| (x - t).abs() <= TIME_TOL * t.max(1.0))
            {
                joint.push((t, bo_joint_density(psi, &surfaces, &es.diabatic, &r_joint)?));
            }
        }
        Ok(SimulationOutput {
            method,
            trajectory,
            states: Vec::new(),
            joint,
            nuclear: Vec::new(),
            fidelity: Vec::new(),
            surfaces: Some(surfaces),
            discarded_weight: Some(init.discarded_weight),
        })
    }

    fn write_simulation(
        &self,
        h: &CmqbHamiltonian,
        sim: &SimulationOutput,
        out: &mut BTreeMap<String, String>,
    ) -> Result<()> {
        let label = sim.method.name();
        self.write_csv(
            out,
            "trajectory.csv",
            &trajectory_csv(&sim.trajectory, label),
        )?;
        let joint_prefix = if sim.method.is_bo() {
            "bo_density"
        } else {
            "density_joint"
        };
        for (t, j) in &sim.joint {
            self.write_csv(
                out,
                &format!("{joint_prefix}_t{}.csv", time_label(*t)),
                &j.to_csv(*t, label),
            )?;
        }
        for (t, n) in &sim.nuclear {
            self.write_csv(
                out,
                &format!("density_nuclear_t{}.csv", time_label(*t)),
                &n.to_csv(*t, label),
            )?;
        }
        if !sim.states.is_empty() {
            self.write_csv(out, "states.csv", &states_csv(&sim.states, label))?;
        }
        if let Some(s) = &sim.surfaces {
            self.write_csv(out, "surfaces.csv", &surfaces_csv(s))?;
        }
        if sim.method == RunMethod::Trotter {
            let d = &self.config.dynamics;
            let mut sched = trotterize(h, d.dt, d.dt, d.order)?;
            sched.n_steps = (d.t_final / d.dt + TIME_TOL).floor() as usize;
            self.write(out, "schedule.txt", &sched.dump())?;
            let merged = merge_fidelity(&self.out.join("fidelity.csv"), &sim.fidelity)?;
            self.write_csv(out, "fidelity.csv", &fidelity_csv(&merged))?;
        }
        self.write(out, "hamiltonian.json", &(h.to_json()? + "\n"))?;
        Ok(())
    }

    /// `simulate`: propagation plus statevector densities.
    pub fn run_simulate(&self) -> Result<(RunRecord, SimulationOutput)> {
        let es = self.stage_electronic()?;
        let h = self.stage_mapping(&es)?;
        let sim = self.simulate(&es, &h)?;
        let mut out = BTreeMap::new();
        self.write_simulation(&h, &sim, &mut out)
            .map_err(|e| e.in_stage("output"))?;
        let d = &self.config.dynamics;
        let dt = (d.method == RunMethod::Trotter).then_some(d.dt);
        Ok((self.record("simulate", Some(d.method), dt, out)?, sim))
    }

    /// `bo`: BO surfaces and Born-Huang dynamics on a state subset.
    pub fn run_bo(&self, states: &[usize]) -> Result<(RunRecord, SimulationOutput)> {
        let es = self.stage_electronic()?;
        let h = self.stage_mapping(&es)?;
        let method = if states.len() == 3 {
            RunMethod::BoFull
        } else {
            RunMethod::BoGboa
        };
        let sim = self
            .simulate_bo(&es, states, method)
            .map_err(|e| e.in_stage("propagation"))?;
        let mut out = BTreeMap::new();
        self.write_simulation(&h, &sim, &mut out)
            .map_err(|e| e.in_stage("output"))?;
        let label: Vec<String> = states.iter().map(|s| (s + 1).to_string()).collect();
        Ok((
            self.record(
                &format!("bo --states {}", label.join(",")),
                Some(method),
                None,
                out,
            )?,
            sim,
        ))
    }

    /// `tomography`: characteristic-function reconstruction at the density times.
    pub fn run_tomography(&self) -> Result<RunRecord> {
        let c = &self.config;
        let d = &c.dynamics;
        if d.method.is_bo() {
            return Err(Error::Config(
                "tomography needs a qubit-register method (exact or trotter)".into(),
            ));
        }
        let es = self.stage_electronic()?;
        let h = self.stage_mapping(&es)?;
        let psi0 = self
            .initial_state()
            .map_err(|e| e.in_stage("propagation"))?;
        let mut times = d.density_times.clone();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= TIME_TOL);
        let states = self
            .states_at(&h, &psi0, &times)
            .map_err(|e| e.in_stage("propagation"))?;
        let mut out = BTreeMap::new();
        let r_joint = self.density_r_points();
        let label = format!("tomography ({})", d.method);
        for (i, (&t, st)) in times.iter().zip(&states).enumerate() {
            let seed = c
                .measurement
                .seed
                .wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let opts = TomographyOptions {
                grid: c.momentum_grid(),
                shots: c.measurement.shots,
                seed,
                spin_symmetry: c.measurement.spin_symmetry,
            };
            let res = reconstruct_densities(st, &c.model, &es.diabatic, &r_joint, &opts)
                .map_err(|e| e.in_stage("measurement"))?;
            let rdm = if c.measurement.shots == 0 {
                measure_rdm1(st)
            } else {
                sampled_rdm1(st, c.measurement.shots, seed)
            }
            .map_err(|e| e.in_stage("measurement"))?;
            let tl = time_label(t);
            self.write_csv(
                &mut out,
                &format!("density_nuclear_t{tl}.csv"),
                &res.nuclear.to_csv(t, &label),
            )?;
            self.write_csv(
                &mut out,
                &format!("density_joint_t{tl}.csv"),
                &res.joint.to_csv(t, &label),
            )?;
            self.write_csv(&mut out, &format!("rdm1_t{tl}.csv"), &rdm1_csv(&rdm, t))?;
        }
        self.record(
            "tomography",
            Some(d.method),
            (d.method == RunMethod::Trotter).then_some(d.dt),
            out,
        )
    }

    /// Register states at `times` by the configured qubit method.
    pub fn states_at(
        &self,
        h: &CmqbHamiltonian,
        psi0: &VibronicState,
        times: &[f64],
    ) -> Result<Vec<VibronicState>> {
        let c = &self.config;
        let d = &c.dynamics;
        let amps = match d.method {
            RunMethod::Trotter => trotter_evolve(h, psi0, times, d.dt, d.order)?.states,
            _ => {
                let prop = SpectralPropagator::new(&cmqb_matrix(h, c.grids.n_fock)?)?;
                let c0 = prop.project(&psi0.amplitudes)?;
                times
                    .iter()
                    .map(|&t| prop.evolve_coefficients(&c0, t))
                    .collect()
            }
        };
        amps.into_iter()
            .map(|a| VibronicState::new(a, psi0.n_fock, psi0.n_qubits))
            .collect()
    }
}

fn rel(base: &Path, p: &Path) -> String {
    p.strip_prefix(base)
        .unwrap_or(p)
        .to_string_lossy()
        .replace('\\', "/")
}

fn bo_row(t: f64, psi: &DvrState, prop: &BhPropagator, surfaces: &BoSurfaces) -> TrajectoryRow {
    let (r1, r2) = bo_position_moments(psi, surfaces);
    TrajectoryRow {
        t,
        norm: psi.norm(),
        energy: prop.energy(psi),
        fon: bo_fon(psi, surfaces),
        r_mean: r1,
        r2_mean: r2,
    }
}

/// Existing fidelity rows with a different step size, plus `rows`, sorted by (t, dt).
pub fn merge_fidelity(path: &Path, rows: &[FidelityRow]) -> Result<Vec<FidelityRow>> {
    let mut merged = Vec::new();
    if path.exists() {
        let table = CsvTable::read(path)?;
        let (t, dt, f) = (
            table.column_f64("t")?,
            table.column_f64("dt")?,
            table.column_f64("fidelity")?,
        );
        for i in 0..t.len() {
            if !rows.iter().any(|r| r.dt == dt[i]) {
                merged.push(FidelityRow {
                    t: t[i],
                    dt: dt[i],
                    fidelity: f[i],
                });
            }
        }
    }
    merged.extend_from_slice(rows);
    merged.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.dt.total_cmp(&b.dt)));
    Ok(merged)
}

/// Snapshot statevectors: one row per (t, basis index), Fock-major.
pub fn states_csv(states: &[(f64, VibronicState)], label: &str) -> CsvTable {
    let mut table = CsvTable::new(vec!["t".into(), "index".into(), "re".into(), "im".into()])
        .with_comment(format!(
            "method: {label}; index = fock * 2^qubits + register, qubit 1 most significant"
        ));
    for (t, s) in states {
        for (i, a) in s.amplitudes.iter().enumerate() {
            table.push(vec![
                fmt_full(*t),
                i.to_string(),
                fmt_full(a.re),
                fmt_full(a.im),
            ]);
        }
    }
    table
}

fn read_states(path: &Path) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let table = CsvTable::read(path)?;
    let (t, idx, re, im) = (
        table.column_f64("t")?,
        table.column_f64("index")?,
        table.column_f64("re")?,
        table.column_f64("im")?,
    );
    let mut out: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for i in 0..t.len() {
        if idx[i] == 0.0 {
            out.push((t[i], Vec::new()));
        }
        let last = out.last_mut().ok_or_else(|| {
            Error::Compare(format!("{} does not start at index 0", path.display()))
        })?;
        last.1.push(Complex64::new(re[i], im[i]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMetric {
    L1Density,
    Fidelity,
    FonMaxDev,
}

impl std::str::FromStr for CompareMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1-density" => Ok(CompareMetric::L1Density),
            "fidelity" => Ok(CompareMetric::Fidelity),
            "fon-max-dev" => Ok(CompareMetric::FonMaxDev),
            other => Err(Error::Compare(format!(
                "unknown metric `{other}` (expected l1-density, fidelity or fon-max-dev)"
            ))),
        }
    }
}

impl CompareMetric {
    pub fn name(self) -> &'static str {
        match self {
            CompareMetric::L1Density => "l1-density",
            CompareMetric::Fidelity => "fidelity",
            CompareMetric::FonMaxDev => "fon-max-dev",
        }
    }
}

/// Joint-density files of a run directory keyed by their time label.
fn joint_density_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut m = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        for prefix in ["density_joint_t", "bo_density_t"] {
            if let Some(rest) = name
                .strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(".csv"))
            {
                m.insert(rest.to_string(), p.clone());
            }
        }
    }
    Ok(m)
}

/// Per-time comparison of two run directories.
pub fn compare_runs(a: &Path, b: &Path, metric: CompareMetric) -> Result<CsvTable> {
    let mut table = CsvTable::new(vec!["t".into(), metric.name().into()]).with_comment(format!(
        "A = {}; B = {}",
        a.display(),
        b.display()
    ));
    let mut rows: Vec<(f64, f64)> = Vec::new();
    match metric {
        CompareMetric::L1Density => {
            let fa = joint_density_files(a)?;
            let fb = joint_density_files(b)?;
            for (label, pa) in &fa {
                let Some(pb) = fb.get(label) else { continue };
                let da = JointDensity::from_csv(&CsvTable::read(pa)?)?;
                let db = JointDensity::from_csv(&CsvTable::read(pb)?)?;
                let t: f64 = label
                    .parse()
                    .map_err(|_| Error::Compare(format!("bad time label `{label}`")))?;
                rows.push((t, da.l1(&db)?));
            }
        }
        CompareMetric::Fidelity => {
            let sa = read_states(&a.join("states.csv"))?;
            let sb = read_states(&b.join("states.csv"))?;
            for (t, va) in &sa {
                if let Some((_, vb)) = sb
                    .iter()
                    .find(|(u, _)| (u - t).abs() <= TIME_TOL * t.max(1.0))
                {
                    if va.len() != vb.len() {
                        return Err(Error::Compare(format!(
                            "state dimensions {} and {} differ",
                            va.len(),
                            vb.len()
                        )));
                    }
                    rows.push((
                        *t,
                        fidelity(&Array1::from(va.clone()), &Array1::from(vb.clone()))?,
                    ));
                }
            }
        }
        CompareMetric::FonMaxDev => {
            let ta = CsvTable::read(&a.join("trajectory.csv"))?;
            let tb = CsvTable::read(&b.join("trajectory.csv"))?;
            let cols = ["FON_1", "FON_2", "FON_3", "FON_4"];
            let (t_a, t_b) = (ta.column_f64("t")?, tb.column_f64("t")?);
            let fa: Vec<Vec<f64>> = cols
                .iter()
                .map(|c| ta.column_f64(c))
                .collect::<Result<_>>()?;
            let fb: Vec<Vec<f64>> = cols
                .iter()
                .map(|c| tb.column_f64(c))
                .collect::<Result<_>>()?;
            for (i, t) in t_a.iter().enumerate() {
                if let Some(j) = t_b
                    .iter()
                    .position(|u| (u - t).abs() <= TIME_TOL * t.max(1.0))
                {
                    let dev = (0..4)
                        .map(|k| (fa[k][i] - fb[k][j]).abs())
                        .fold(0.0, f64::max);
                    rows.push((*t, dev));
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Compare(format!(
            "runs share no comparable times for {}",
            metric.name()
        )));
    }
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (t, v) in rows {
        table.push_f64(&[t, v]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_plan_union() {
        let p = TimePlan::new(20.0, 5.6, &[11.2, 12.0]).unwrap();
        assert_eq!(p.times, vec![0.0, 5.6, 11.2, 12.0, 5.6 * 3.0, 20.0]);
        assert_eq!(p.trajectory, vec![true, true, true, false, true, true]);
        assert_eq!(p.snapshot, vec![false, false, true, true, false, true]);
    }

    #[test]
    fn fidelity_merge_replaces_same_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fidelity.csv");
        let a = [FidelityRow {
            t: 5.6,
            dt: 5.6,
            fidelity: 0.9,
        }];
        fidelity_csv(&merge_fidelity(&path, &a).unwrap())
            .write(&path)
            .unwrap();
        let b = [
            FidelityRow {
                t: 2.8,
                dt: 2.8,
                fidelity: 0.99,
            },
            FidelityRow {
                t: 5.6,
                dt: 2.8,
                fidelity: 0.98,
            },
        ];
        let m = merge_fidelity(&path, &b).unwrap();
        assert_eq!(m.len(), 3);
        fidelity_csv(&m).write(&path).unwrap();
        let again = merge_fidelity(&path, &b).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn metric_names_parse() {
        for m in [
            CompareMetric::L1Density,
            CompareMetric::Fidelity,
            CompareMetric::FonMaxDev,
        ] {
            assert_eq!(m.name().parse::<CompareMetric>().unwrap(), m);
        }
        assert!("l2".parse::<CompareMetric>().is_err());
    }
}
