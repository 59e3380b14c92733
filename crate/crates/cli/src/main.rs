use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hapcache::harness::{
    report, run_method, sweep_and_report, train_method, verify, Axis, Method, RunRecord, Scenario, ScenarioConfig,
    RESULTS_DIR_ENV,
};
use hapcache::ppo::checkpoint;

#[derive(Parser)]
#[command(name = "hapcache", version, about = "Multi-HAP caching, routing and beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate methods on one scenario and seed.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated methods (proposed, b1, b2, b3, b4).
        #[arg(long, value_delimiter = ',', default_value = "proposed,b1,b2,b3,b4")]
        methods: Vec<Method>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep one parameter over values and seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Defaults to the seeds listed in the configuration.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "proposed,b1,b2,b3,b4")]
        methods: Vec<Method>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Train the caching policy only and store a checkpoint.
    Train {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "proposed")]
        method: Method,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rebuild tables and plots of a sweep directory.
    Report {
        dir: PathBuf,
    },
    /// Re-check the invariants of stored run records.
    Verify {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Configuration the records were produced from.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutArgs {
    /// Results directory.
    #[arg(long, env = RESULTS_DIR_ENV, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting profile when no configuration file is given.
    #[arg(long, default_value = "full")]
    profile: String,
    #[arg(long)]
    haps: Option<usize>,
    #[arg(long)]
    dcs: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    altitude_m: Option<f64>,
    #[arg(long)]
    contents: Option<usize>,
    #[arg(long)]
    mu_cac: Option<f64>,
    #[arg(long)]
    mu_acc: Option<f64>,
    #[arg(long)]
    zipf_min: Option<f64>,
    #[arg(long)]
    zipf_max: Option<f64>,
    #[arg(long)]
    n_sto: Option<usize>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    b_fso: Option<f64>,
    #[arg(long)]
    b_rf: Option<f64>,
    /// Visibility in km.
    #[arg(long)]
    visibility: Option<f64>,
    #[arg(long)]
    fso_noise: Option<f64>,
    #[arg(long)]
    rf_noise: Option<f64>,
    #[arg(long)]
    rician_k: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    iter_max: Option<usize>,
    #[arg(long)]
    iter_mb: Option<usize>,
    #[arg(long)]
    minibatch: Option<usize>,
    #[arg(long)]
    lr_actor: Option<f64>,
    #[arg(long)]
    lr_critic: Option<f64>,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    trace_decay: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
}

impl ScenarioArgs {
    fn resolve(&self) -> hapcache::Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::profile(&self.profile)?,
        };
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = self.$flag {
                    c.$($field).+ = v;
                }
            };
        }
        set!(haps => geometry.haps);
        set!(dcs => geometry.dcs);
        set!(users => geometry.users);
        set!(altitude_m => geometry.altitude_m);
        set!(contents => catalog.contents);
        set!(mu_cac => catalog.mu_cac);
        set!(mu_acc => catalog.mu_acc);
        set!(zipf_min => catalog.zipf_min);
        set!(zipf_max => catalog.zipf_max);
        set!(n_sto => n_sto);
        set!(omega => omega);
        set!(antennas => rf.antennas);
        set!(b_fso => fso.bandwidth_hz);
        set!(b_rf => rf.bandwidth_hz);
        set!(visibility => fso.visibility_km);
        set!(fso_noise => fso.noise_var);
        set!(rician_k => rf.rician_k);
        set!(horizon => ppo.horizon);
        set!(iter_max => ppo.iter_max);
        set!(iter_mb => ppo.iter_mb);
        set!(minibatch => ppo.minibatch);
        set!(lr_actor => ppo.lr_actor);
        set!(lr_critic => ppo.lr_critic);
        set!(discount => ppo.discount);
        set!(trace_decay => ppo.trace_decay);
        set!(clip => ppo.clip);
        set!(eval_episodes => eval_episodes);
        set!(candidates => candidates);
        if self.rf_noise.is_some() {
            c.rf.noise_power = self.rf_noise;
        }
        if self.p_max.is_some() {
            c.fso.p_max = self.p_max;
        }
        c.validate()?;
        Ok(c)
    }
}

fn first_seed(cfg: &ScenarioConfig, seed: Option<u64>) -> u64 {
    seed.or_else(|| cfg.seeds.first().copied()).unwrap_or(0)
}

fn write_config(dir: &Path, cfg: &ScenarioConfig) -> hapcache::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn run(cli: Cli) -> hapcache::Result<bool> {
    match cli.command {
        Command::Run {
            scenario,
            methods,
            seed,
            out,
        } => {
            let cfg = scenario.resolve()?;
            let seed = first_seed(&cfg, seed);
            let dir = out.out.join(format!("run_{}_s{seed}", cfg.name));
            write_config(&dir, &cfg)?;
            let sc = Scenario::new(&cfg, seed)?;
            println!("{:>10} {:>12} {:>12} {:>12} {:>12} {:>9}", "method", "pc", "p_dc", "p_hap", "p_rf", "feasible");
            for m in methods {
                let (record, _) = run_method(&sc, m)?;
                let s = record.summary();
                println!(
                    "{:>10} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>9.3}",
                    m.name(),
                    s.mean_pc,
                    s.mean_p_dc,
                    s.mean_p_hap,
                    s.mean_p_rf,
                    s.feasibility
                );
                record.save(&dir.join(format!("{}.json", m.name())))?;
            }
            println!("records in {}", dir.display());
            Ok(true)
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            seeds,
            methods,
            out,
        } => {
            let cfg = scenario.resolve()?;
            let seeds = if seeds.is_empty() { cfg.seeds.clone() } else { seeds };
            let dir = out.out.join(format!("sweep_{}_{}", cfg.name, axis.name()));
            write_config(&dir, &cfg)?;
            let result = sweep_and_report(&cfg, axis, &values, &seeds, &methods, Some(&dir), |row| {
                eprintln!(
                    "{} {}={} seed {}: {}",
                    row.method,
                    row.axis,
                    row.value,
                    row.seed,
                    if row.ok() { format!("{:.5e} W", row.mean_pc) } else { row.status.clone() }
                );
            })?;
            print!("{}", report::text_table(&result.rows));
            println!("tables and plots in {}", dir.display());
            Ok(result.rows.iter().all(|r| r.ok()))
        }
        Command::Train {
            scenario,
            method,
            seed,
            out,
        } => {
            let cfg = scenario.resolve()?;
            let seed = first_seed(&cfg, seed);
            let dir = out.out.join(format!("train_{}_{}_s{seed}", cfg.name, method.name()));
            write_config(&dir, &cfg)?;
            let sc = Scenario::new(&cfg, seed)?;
            let trained = train_method(&sc, method)?;
            let meta = checkpoint::save(&dir.join("agent.bin"), &trained.agent, &cfg.hash(), cfg.ppo.iter_max, seed)?;
            std::fs::write(dir.join("learning_curve.json"), serde_json::to_string(&trained.curve)?)?;
            report::learning_curves(&dir.join("learning_curve.svg"), &[(method.name().into(), trained.curve.clone())], 10)?;
            let first = trained.curve.first().copied().unwrap_or(f64::NAN);
            let last = hapcache::ppo::moving_average(&trained.curve, 10).last().copied().unwrap_or(f64::NAN);
            println!(
                "iterations {} first {first:.5e} final moving average {last:.5e} infeasible slots {}",
                trained.curve.len(),
                trained.infeasible_slots
            );
            println!("checkpoint {} ({})", dir.join("agent.bin").display(), meta.blob_sha256);
            Ok(true)
        }
        Command::Report { dir } => {
            print!("{}", report::render(&dir)?);
            Ok(true)
        }
        Command::Verify { records, config } => {
            let cfg = config.as_deref().map(ScenarioConfig::load).transpose()?;
            let mut all = true;
            for path in records {
                let record = RunRecord::load(&path)?;
                for check in verify(&record, cfg.as_ref()) {
                    all &= check.passed;
                    println!(
                        "{} {}: {} {}",
                        path.display(),
                        check.name,
                        if check.passed { "ok" } else { "FAILED" },
                        check.detail
                    );
                }
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
