use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vibronic::bo::{parse_states, weyl_count};
use vibronic::config::{RunMethod, ScenarioConfig};
use vibronic::linalg::backend_self_check;
use vibronic::scenario::{compare_runs, CompareMetric, Scenario};
use vibronic::{Error, Result};

const CORETYPE_VAR: &str = "OPENBLAS_CORETYPE";
const FALLBACK_CORETYPE: &str = "Haswell";

#[derive(Parser, Debug)]
#[command(
    name = "vibronic",
    version,
    about = "Pre-Born-Oppenheimer vibronic dynamics on a qubit-boson model"
)]
struct Cli {
    /// TOML scenario file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Measurement seed (overrides `measurement.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orbitals, integral tables and Taylor coefficients.
    Integrals,
    /// Jordan-Wigner mapping to the qubit-boson Hamiltonian.
    Map,
    /// Propagate and write trajectory, densities and (Trotter) fidelities.
    Simulate {
        /// exact | trotter | bo-full | bo-gboa
        #[arg(long)]
        method: Option<RunMethod>,
        /// Final time.
        #[arg(long = "t")]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Trotter splitting order (1 or 2).
        #[arg(long)]
        order: Option<u8>,
    },
    /// Reconstruct densities from emulated Hadamard-test measurements.
    Tomography {
        #[arg(long)]
        kpoints: Option<usize>,
        #[arg(long)]
        kspacing: Option<f64>,
        /// Shots per circuit; 0 = exact expectation values.
        #[arg(long)]
        shots: Option<u64>,
        /// exact | trotter
        #[arg(long)]
        method: Option<RunMethod>,
    },
    /// BO surfaces and Born-Huang dynamics on a subset of BO states.
    Bo {
        /// 1-based BO states, e.g. `2,3` for the group-BO subset.
        #[arg(long, default_value = "1,2,3")]
        states: String,
        #[arg(long = "t")]
        t_final: Option<f64>,
    },
    /// Per-time comparison of two run directories, written to compare.csv.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// l1-density | fidelity | fon-max-dev
        #[arg(long, default_value = "l1-density")]
        metric: CompareMetric,
    },
    /// Number of spin-adapted configurations.
    Weyl {
        /// Total spin S (integer or half-integer).
        #[arg(long)]
        spin: f64,
        /// Number of spin orbitals.
        #[arg(long)]
        orbitals: u32,
        #[arg(long)]
        electrons: u32,
    },
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.measurement.seed = seed;
    }
    Ok(cfg)
}

fn scenario(cfg: ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    Scenario::new(cfg)
}

fn report(files: impl IntoIterator<Item = String>, out: &Path) {
    for f in files {
        println!("{}", out.join(f).display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Integrals => {
            let s = scenario(cfg)?;
            report(s.run_integrals()?.outputs.into_keys(), &s.out);
        }
        Command::Map => {
            let s = scenario(cfg)?;
            report(s.run_map()?.outputs.into_keys(), &s.out);
        }
        Command::Simulate {
            method,
            t_final,
            dt,
            order,
        } => {
            let d = &mut cfg.dynamics;
            if let Some(m) = method {
                d.method = m;
            }
            if let Some(t) = t_final {
                d.t_final = t;
                d.density_times.retain(|&x| x <= t);
            }
            if let Some(dt) = dt {
                d.dt = dt;
                if d.method == RunMethod::Trotter {
                    d.output_interval = dt;
                }
            }
            if let Some(o) = order {
                d.order = o;
            }
            let s = scenario(cfg)?;
            let (rec, sim) = s.run_simulate()?;
            if let Some(w) = sim.discarded_weight {
                println!("# discarded initial weight: {w:e}");
            }
            report(rec.outputs.into_keys(), &s.out);
        }
        Command::Tomography {
            kpoints,
            kspacing,
            shots,
            method,
        } => {
            if let Some(k) = kpoints {
                cfg.grids.k_points = k;
            }
            if let Some(dk) = kspacing {
                cfg.grids.k_spacing = dk;
            }
            if let Some(n) = shots {
                cfg.measurement.shots = n;
            }
            if let Some(m) = method {
                cfg.dynamics.method = m;
            }
            let s = scenario(cfg)?;
            report(s.run_tomography()?.outputs.into_keys(), &s.out);
        }
        Command::Bo { states, t_final } => {
            let subset = parse_states(&states)?;
            if let Some(t) = t_final {
                cfg.dynamics.t_final = t;
                cfg.dynamics.density_times.retain(|&x| x <= t);
            }
            let s = scenario(cfg)?;
            let (rec, sim) = s.run_bo(&subset)?;
            if let Some(w) = sim.discarded_weight {
                println!("# discarded initial weight: {w:e}");
            }
            report(rec.outputs.into_keys(), &s.out);
        }
        Command::Compare {
            run_a,
            run_b,
            metric,
        } => {
            let table = compare_runs(&run_a, &run_b, metric)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("compare.csv");
            table.write(&path)?;
            print!("{}", table.render());
            println!("{}", path.display());
        }
        Command::Weyl {
            spin,
            orbitals,
            electrons,
        } => {
            let two_s = 2.0 * spin;
            if two_s < 0.0 || two_s.fract() != 0.0 {
                return Err(Error::Parity(format!(
                    "spin {spin} is not a non-negative half-integer"
                )));
            }
            println!("{}", weyl_count(two_s as u32, orbitals, electrons)?);
        }
    }
    Ok(())
}

/// Restarts the process with a portable BLAS kernel when the auto-detected
/// one fails the eigensolver check and the caller has not chosen a kernel.
#[cfg(unix)]
fn reexec_with_portable_blas() {
    use std::os::unix::process::CommandExt;
    if backend_self_check().is_ok() || std::env::var_os(CORETYPE_VAR).is_some() {
        return;
    }
    let Ok(exe) = std::env::current_exe() else {
        return;
    };
    eprintln!(
        "warning: BLAS self-check failed; restarting with {CORETYPE_VAR}={FALLBACK_CORETYPE}"
    );
    let err = std::process::Command::new(exe)
        .args(std::env::args_os().skip(1))
        .env(CORETYPE_VAR, FALLBACK_CORETYPE)
        .exec();
    eprintln!("warning: restart failed: {err}");
}

#[cfg(not(unix))]
fn reexec_with_portable_blas() {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if !matches!(cli.command, Command::Weyl { .. }) {
        reexec_with_portable_blas();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
