//! `regilap`: runs, ε sweeps and verification suites from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 solver error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use regilap_core::config::{Overrides, RunConfig, CONFIG_KEYS};
use regilap_core::continuation::{eps_sweep, integrability_probe, richardson_limit};
use regilap_core::io::{write_run, write_sweep, REPORT_FILE};
use regilap_core::scenario::{PressureDrop, ScenarioSpec};
use regilap_core::solver::{run, Scheme};
use regilap_core::verify::{run_all, VerifyOptions};
use regilap_core::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "regilap",
    version,
    about = "Regularized infinity-Laplacian evolution on a periodic box",
    after_help = concat!(
        "Exit codes: 0 success, 1 verification failure, 2 configuration error, 3 solver error.\n\n",
        "Configuration file keys (TOML; every key is optional):\n"
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a single trajectory and write ledger.csv, fields/ and report.json.
    Run(Common),
    /// Run the ε continuation sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also run the L^b integrability probe (needs a < 2/(d+1)).
        #[arg(long)]
        probe: bool,
        /// Flux exponent b for the probe when d = 1.
        #[arg(long)]
        b: Option<f64>,
        /// Comma-separated, strictly decreasing list of epsilons.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Run the property suites of every module.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Acceptance-sized samples and grids instead of the quick profile.
        #[arg(long)]
        full: bool,
    },
    /// Shear flow under a pressure drop (one-dimensional run).
    Poiseuille {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Profile::Constant)]
        profile: Profile,
        /// Magnitude of the pressure drop.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Switch-on time of the step profile.
        #[arg(long, default_value_t = 0.0)]
        t_on: f64,
        /// Angular frequency of the sine profile.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    Constant,
    Step,
    Sine,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Implicit,
    Explicit,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the random smooth scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Exponent a of the constitutive law.
    #[arg(long)]
    a: Option<f64>,
    /// Regularization epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Spatial dimension, 1 or 2.
    #[arg(long)]
    d: Option<usize>,
    /// Grid points per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Sup of |grad u0| for random smooth data.
    #[arg(long = "U")]
    u_bound: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_configuration() {
            EXIT_CONFIG
        } else {
            EXIT_SOLVER
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn config_failure(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error,
    }
}

fn solver_failure(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_SOLVER,
        error,
    }
}

type Outcome = Result<bool, Failure>;

impl Common {
    fn load(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            a: self.a,
            epsilon: self.epsilon,
            d: self.d,
            n: self.n,
            dt: self.dt,
            t_end: self.t_end,
            u_bound: self.u_bound,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::Implicit => Scheme::Implicit,
                SchemeArg::Explicit => Scheme::Explicit,
            }),
        });
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

fn run_single(cfg: &RunConfig) -> Outcome {
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let traj = run(&scenario, &cfg.model, &cfg.grid()?, &cfg.solver.config())?;
    let dir = &cfg.output.dir;
    let report = write_run(dir, &traj, scenario.declared_u(), cfg.output.fields).map_err(|e| {
        solver_failure(anyhow::Error::new(e).context(format!("writing {}", dir.display())))
    })?;

    println!(
        "{}: {} steps to t = {}, {} Newton / {} CG iterations",
        report.scenario_id,
        report.stats.steps,
        report.final_time,
        report.stats.newton_iterations,
        report.stats.linear_iterations
    );
    println!("max constitutive defect {:.3e}", report.max_identity_defect);
    let mut ok = true;
    if let Some(e) = &report.energy {
        let failing = e.failures().count();
        println!(
            "energy ledger: {} steps, {} failing, l2 monotone {}",
            e.entries.len(),
            failing,
            e.l2_monotone
        );
        ok &= failing == 0;
    }
    if let Some(b) = &report.initial_bound {
        println!(
            "initial flux bound: max|q0| = {:.6} <= {:.6}: {}",
            b.max_flux, b.threshold, b.passed
        );
        ok &= b.passed;
    }
    println!("wrote {}", dir.join(REPORT_FILE).display());
    Ok(ok)
}

fn run_sweep(
    cfg: &mut RunConfig,
    probe: bool,
    b: Option<f64>,
    epsilons: Option<Vec<f64>>,
) -> Outcome {
    if epsilons.is_some() {
        cfg.sweep.epsilons = epsilons;
    }
    if b.is_some() {
        cfg.sweep.b = b;
    }
    cfg.sweep.probe |= probe;
    cfg.validate()?;
    let plan = cfg.sweep_plan()?;
    let (mut report, verdict) = if cfg.sweep.probe {
        let (r, p) = integrability_probe(&plan)?;
        (r, Some(p))
    } else {
        (eps_sweep(&plan)?, None)
    };
    let dir = cfg.output.dir.clone();
    let path = write_sweep(&dir, &mut report, cfg.output.fields).map_err(|e| {
        solver_failure(anyhow::Error::new(e).context(format!("writing {}", dir.display())))
    })?;

    for (entry, cauchy) in report
        .entries
        .iter()
        .zip(report.cauchy.iter().map(Some).chain([None]))
    {
        match (&entry.summary, &entry.error) {
            (Some(s), _) => println!(
                "eps {:.4e}: max|q| {:.4e}, residual {:.4e} (eps max|q| {:.4e}), cauchy {}",
                s.epsilon,
                s.max_q,
                s.residual,
                s.predicted_residual,
                match cauchy {
                    Some(Some(c)) => format!("{c:.4e}"),
                    _ => "-".into(),
                }
            ),
            (None, Some(e)) => println!("eps {:.4e}: failed: {e}", entry.epsilon),
            (None, None) => {}
        }
    }
    if report.entries.len() >= 3 {
        match richardson_limit(&report) {
            Ok(x) => println!("extrapolated limit: defect {:.4e}", x.defect),
            Err(e) => println!("no extrapolation: {e}"),
        }
    }
    let mut ok = true;
    if let Some(p) = verdict {
        println!(
            "integrability probe: b = {}, spread {:.4}, bounded {}",
            p.b, p.spread, p.bounded
        );
        ok &= p.bounded;
    }
    println!("wrote {}", path.display());
    let failed = report.failures().count();
    if failed > 0 {
        return Err(solver_failure(anyhow::anyhow!(
            "{failed} of {} sweep entries failed; see {}",
            report.entries.len(),
            path.display()
        )));
    }
    Ok(ok)
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run(common) => run_single(&common.load()?),
        Command::Sweep {
            common,
            probe,
            b,
            epsilons,
        } => run_sweep(&mut common.load()?, probe, b, epsilons),
        Command::Verify { seed, full } => {
            let opts = if full {
                VerifyOptions::full(seed)
            } else {
                VerifyOptions::quick(seed)
            };
            let report = run_all(&opts);
            println!("{report}");
            Ok(report.passed())
        }
        Command::Poiseuille {
            common,
            profile,
            gamma,
            t_on,
            omega,
        } => {
            let mut cfg = common.load()?;
            if common.d.is_some_and(|d| d != 1) || (common.config.is_some() && cfg.model.d != 1) {
                return Err(config_failure(anyhow::anyhow!(
                    "the Poiseuille scenario is one-dimensional, got d = {}",
                    cfg.model.d
                )));
            }
            cfg.model.d = 1;
            let drop = match profile {
                Profile::Constant => PressureDrop::Constant { gamma },
                Profile::Step => PressureDrop::Step { gamma, t_on },
                Profile::Sine => PressureDrop::Sine { gamma, omega },
            };
            cfg.scenario = ScenarioSpec::Poiseuille { drop };
            run_single(&cfg)
        }
    }
}

fn help_with_keys() -> clap::Command {
    use clap::CommandFactory;
    let cmd = Cli::command();
    let after = format!(
        "{}{CONFIG_KEYS}",
        cmd.get_after_help()
            .map(|s| s.to_string())
            .unwrap_or_default()
    );
    let keys = format!("Configuration file keys:\n{CONFIG_KEYS}");
    ["run", "sweep", "poiseuille"]
        .into_iter()
        .fold(cmd.after_help(after), |c, name| {
            c.mut_subcommand(name, |s| s.after_help(keys.clone()))
        })
}

fn main() -> ExitCode {
    use clap::FromArgMatches;
    let matches = match help_with_keys().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches).context("parsing arguments") {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(f) => {
            // core errors already spell out their sources
            let mut msg = f.error.to_string();
            for cause in f.error.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(f.code)
        }
    }
}
