use cee_core::baselines::baseline_thresholds;
use cee_core::bounds::{bound_constants, step_requirement, BoundVariant, BoundsError, Regime, RegretCurve};
use cee_core::concentration::{run_suite, CheckError};
use cee_core::sim::config::{ConfigError, ScenarioConfig, SCENARIO_S};
use cee_core::sim::export::{export_all, ExportError};
use cee_core::sim::{simulate, PolicyKind, SimError};
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cee",
    version,
    about = "Restless bandit policies, regret bounds and simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a policy on a scenario and write regret tables and plots.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// cee, rca, rucb or all
        #[arg(long, default_value = "all")]
        policy: String,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "CEE_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Print the regret-bound constants and write the bound curves.
    Bounds {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "CEE_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Print the parameter thresholds of CEE and the comparison policies.
    Thresholds {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run the concentration-inequality suite.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        replications: u64,
        /// Arms to test; defaults to the bundled five-channel scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, env = "CEE_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
}

enum CliError {
    Config(ConfigError),
    Bounds(BoundsError),
    Simulation(SimError),
    Export(ExportError),
    Check(CheckError),
    Usage(String),
    ValidationFailed(usize),
}

impl CliError {
    fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Bounds(_) => "bounds",
            CliError::Simulation(_) => "simulation",
            CliError::Export(_) => "export",
            CliError::Check(_) => "check",
            CliError::ValidationFailed(_) => "validation-failed",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Bounds(_) => 4,
            CliError::Simulation(_) => 5,
            CliError::Export(_) => 6,
            CliError::Check(_) => 7,
            CliError::ValidationFailed(_) => 8,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(e) => e.to_string(),
            CliError::Bounds(e) => e.to_string(),
            CliError::Simulation(e) => e.to_string(),
            CliError::Export(e) => e.to_string(),
            CliError::Check(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
            CliError::ValidationFailed(n) => format!("{n} check(s) failed"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}
impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        CliError::Bounds(e)
    }
}
impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Simulation(e)
    }
}
impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        CliError::Export(e)
    }
}
impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        CliError::Check(e)
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let cfg = ScenarioConfig::load(path)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| {
            CliError::Export(ExportError::Write {
                path: dir.display().to_string(),
                source,
            })
        })?;
    }
    std::fs::write(path, text).map_err(|source| {
        CliError::Export(ExportError::Write {
            path: path.display().to_string(),
            source,
        })
    })
}

fn cmd_simulate(
    scenario: &Path,
    policy: &str,
    horizon: Option<u64>,
    runs: Option<u64>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load(scenario)?.with_overrides(horizon, runs, seed)?;
    let kinds: Vec<PolicyKind> = if policy == "all" {
        PolicyKind::ALL
            .into_iter()
            .filter(|k| match k {
                PolicyKind::Cee => cfg.cee.is_some(),
                PolicyKind::Rca => cfg.rca.is_some(),
                PolicyKind::Rucb => cfg.rucb.is_some(),
            })
            .collect()
    } else {
        vec![policy.parse().map_err(CliError::Usage)?]
    };
    let mut traces = Vec::new();
    for k in kinds {
        let r = simulate(&cfg, k)?;
        let tag = if r.trace.reconstruction {
            " (reconstructed baseline)"
        } else {
            ""
        };
        println!(
            "{k}{tag}: {} runs, horizon {}, seed {}",
            cfg.runs, cfg.horizon, cfg.seed
        );
        if let Some(last) = r.trace.rows.last() {
            println!(
                "  n = {}: regret {:.3}, regret/ln n {}, reward variance {:.3}",
                last.n,
                last.regret,
                last.regret_over_ln_n.map_or("-".into(), |v| format!("{v:.4}")),
                last.reward_variance
            );
        }
        traces.push(r.trace);
    }
    for p in export_all(&traces, out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_bounds(scenario: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = load(scenario)?;
    let params = cfg
        .cee
        .as_ref()
        .ok_or_else(|| CliError::Usage("scenario has no [policy.cee] section".into()))?;
    let truth = cfg.truth_for(params)?;
    println!("required constant step length: {:.4}", step_requirement(&truth));
    let (theorem, corollary) = if cfg.select == 1 {
        (BoundVariant::Theorem1, BoundVariant::Corollary1)
    } else {
        (BoundVariant::Theorem2, BoundVariant::Corollary2)
    };
    for regime in [Regime::Theorem, Regime::Corollary] {
        match bound_constants(&truth, regime) {
            Ok(c) => {
                println!("{regime:?} regime:");
                if let Some(s) = &c.single {
                    let t = &s.thresholds;
                    println!(
                        "  q = {}, B_q = {}, C_P/B_q = {:.6}, w* = {:.6}, alpha* = {}, gamma = {}",
                        t.q.index, t.q.block, t.drift, t.w_star, t.alpha_star, t.gamma
                    );
                    println!(
                        "  Z1 = {:.6}, Z2 = {:.6}, Z3 = {}, Z4 = {}",
                        s.z.log_step, s.z.log, s.z.step, s.z.constant
                    );
                }
                let t = &c.multi.thresholds;
                println!(
                    "  q' = {}, B_q' = {}, gamma' = {}",
                    t.q_prime.index, t.q_prime.block, t.gamma_prime
                );
                let z = &c.multi.z;
                println!(
                    "  Z5 = {:.6}, Z6 = {:.6}, Z7 = {}, Z8 = {}",
                    z.log_step, z.log, z.step, z.constant
                );
            }
            Err(e) => println!("{regime:?} regime: not available ({e})"),
        }
    }
    let theorem_curve = RegretCurve::new(&truth, theorem)?;
    let corollary_curve = RegretCurve::new(&truth, corollary).ok();
    let mut csv = String::from("n,theorem_bound,corollary_bound\n");
    for &n in cfg.sample_points.iter().filter(|&&n| n >= 2) {
        let _ = writeln!(
            csv,
            "{n},{},{}",
            theorem_curve.at(n),
            corollary_curve
                .as_ref()
                .map(|c| c.at(n).to_string())
                .unwrap_or_default()
        );
    }
    let path = out.join("bounds.csv");
    write(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_thresholds(scenario: &Path) -> Result<(), CliError> {
    let cfg = load(scenario)?;
    let chains = cfg.chains();
    let chosen = cfg.rucb.as_ref().map(|p| p.exploration);
    let t = baseline_thresholds(&chains, cfg.select, chosen)?;
    if let Some(p) = &cfg.cee {
        let truth = cfg.truth_for(p)?;
        println!("cee   required constant step length  {:.4}", step_requirement(&truth));
    }
    println!("rca   L >= {:.4}  (reconstructed baseline)", t.rca_l_min);
    println!("rucb  L >= {:.4}  (reconstructed baseline)", t.rucb_l_min);
    println!("rucb  D >= {:.4}  at L = L_min", t.rucb_d_min);
    if let (Some(l), Some(d)) = (chosen, t.rucb_d_at_chosen_l) {
        println!("rucb  D >= {d:.4}  at configured L = {l}");
    }
    println!(
        "inputs: S_max = {}, r_max = {}, pi_hat_max = {:.6}, eps_min = {:.6}, eps* = {:.6}, gap = {:.6}",
        t.s_max, t.r_max, t.pi_hat_max, t.eps_min, t.eps_star, t.top_gap
    );
    Ok(())
}

fn cmd_validate(seed: u64, replications: u64, scenario: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let cfg = match scenario {
        Some(p) => load(p)?,
        None => ScenarioConfig::parse(SCENARIO_S)?,
    };
    let suite = run_suite(&cfg.chains(), replications, seed)?;
    for line in suite.lines() {
        println!("{line}");
    }
    let path = out.join("validation.csv");
    write(&path, &suite.to_csv())?;
    println!("wrote {}", path.display());
    if !suite.pass() {
        return Err(CliError::ValidationFailed(suite.failures()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            scenario,
            policy,
            horizon,
            runs,
            seed,
            out,
        } => cmd_simulate(scenario, policy, *horizon, *runs, *seed, out),
        Command::Bounds { scenario, out } => cmd_bounds(scenario, out),
        Command::Thresholds { scenario } => cmd_thresholds(scenario),
        Command::Validate {
            seed,
            replications,
            scenario,
            out,
        } => cmd_validate(*seed, *replications, scenario.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), e.message());
            ExitCode::from(e.code())
        }
    }
}
