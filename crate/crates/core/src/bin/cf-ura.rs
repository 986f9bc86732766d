use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cf_ura::config::{dbm_to_watts, validate_config, SystemConfig};
use cf_ura::error::{Error, Result};
use cf_ura::harness::{
    emit_ebn0, emit_results, required_ebn0, run_sweep, Bracket, ExperimentSpec, Mode, Simulator,
    SweepVariable,
};

#[derive(Parser)]
#[command(name = "cf-ura", version, about = "Unsourced random access over cell-free massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// PUPE at a fixed configuration.
    Simulate(Common),
    /// PUPE against the number of active users.
    Sweep(Common),
    /// Required Eb/N0 against the number of active users.
    Ebn0 {
        #[command(flatten)]
        common: Common,
        /// Target PUPE.
        #[arg(long, default_value_t = 0.05)]
        target: f64,
        /// Search bracket, dB around the configured power.
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        lo_db: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        hi_db: f64,
    },
    /// Topology and large-scale gains of one trial.
    DumpEnv {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Also write the pilot codebook and pattern matrix.
        #[arg(long)]
        codebook: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Coop,
    Nocoop,
    Central,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Coop => Mode::Cooperative,
            ModeArg::Nocoop => Mode::NoCooperation,
            ModeArg::Central => Mode::Centralized,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated active-user counts.
    #[arg(long, value_delimiter = ',')]
    ka: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Coop)]
    mode: ModeArg,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    mr: Option<usize>,
    #[arg(long)]
    km: Option<usize>,
    /// Average symbol power (pilot and data), dBm.
    #[arg(long, allow_hyphen_values = true)]
    power_dbm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    noise_dbm: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Start from the full-size deployment (slow).
    #[arg(long)]
    paper_scale: bool,
}

impl Common {
    fn config(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io { context: format!("reading {}", path.display()), source: e })?;
                serde_json::from_str(&text).map_err(|e| Error::Json { path: path.clone(), source: e })?
            }
            None if self.paper_scale => SystemConfig::paper_scale(),
            None => SystemConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(m) = self.m {
            cfg.num_aps = m;
        }
        if let Some(mr) = self.mr {
            cfg.antennas_per_ap = mr;
        }
        if let Some(km) = self.km {
            cfg.users_per_ap = km;
        }
        if let Some(p) = self.power_dbm {
            cfg.pilot_power = dbm_to_watts(p);
            cfg.data_power = dbm_to_watts(p);
        }
        if let Some(n) = self.noise_dbm {
            cfg.noise_power = dbm_to_watts(n);
        }
        if let [ka] = self.ka.as_slice() {
            cfg.active_users = *ka;
        }
        let v = validate_config(&cfg);
        if !v.is_empty() {
            return Err(Error::InvalidConfig(v));
        }
        Ok(cfg)
    }

    fn spec(&self, target: f64) -> Result<ExperimentSpec> {
        let base = self.config()?;
        let ka = if self.ka.is_empty() { vec![base.active_users] } else { self.ka.clone() };
        Ok(ExperimentSpec {
            base,
            sweep: SweepVariable::ActiveUsers(ka),
            trials: self.trials,
            target_pupe: target,
            mode: self.mode.into(),
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let spec = ExperimentSpec {
                sweep: SweepVariable::ActiveUsers(vec![c.config()?.active_users]),
                ..c.spec(0.05)?
            };
            let points = run_sweep(&spec)?;
            let e = &points[0].estimate;
            println!(
                "K_a={} Eb/N0={:.2} dB p_md={:.5} p_fa={:.5} p_e={:.5} std_err={:.5} trials={}",
                points[0].config.active_users,
                points[0].config.ebn0_db(),
                e.p_md,
                e.p_fa,
                e.p_e,
                e.std_err,
                e.trials
            );
            for f in emit_results(&points, &spec, &c.out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep(c) => {
            let spec = c.spec(0.05)?;
            let points = run_sweep(&spec)?;
            for p in &points {
                println!("K_a={} p_e={:.5} ± {:.5}", p.label, p.estimate.p_e, p.estimate.std_err);
            }
            for f in emit_results(&points, &spec, &c.out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Ebn0 { common, target, lo_db, hi_db } => {
            let spec = common.spec(target)?;
            let bracket = Bracket { lo_db, hi_db, ..Bracket::default() };
            let points = required_ebn0(&spec, bracket)?;
            for p in &points {
                match p.ebn0_db {
                    Some(v) => println!("K_a={} Eb/N0={v:.2} dB p_e={:.5}", p.label, p.estimate.p_e),
                    None => println!("K_a={} infeasible", p.label),
                }
            }
            for f in emit_ebn0(&points, &spec, &common.out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::DumpEnv { common, trial, codebook } => {
            let cfg = common.config()?;
            let sim = Simulator::new(&cfg, common.mode.into())?;
            let topo = sim.draw_topology(trial);
            let beta = sim.large_scale(trial, &topo)?;
            std::fs::create_dir_all(&common.out).map_err(|e| Error::Io {
                context: format!("creating {}", common.out.display()),
                source: e,
            })?;
            let path = common.out.join("environment.csv");
            cf_ura::channel::write_environment_csv(&path, &topo, &beta)?;
            println!("wrote {}", path.display());
            if codebook {
                let path = common.out.join("codebook.bin");
                cf_ura::codebook::write_codebook_dump(&path, sim.pilots(), sim.patterns())?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
