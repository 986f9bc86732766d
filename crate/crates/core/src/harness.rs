//! Monte Carlo orchestration: single trials, PUPE estimation, sweeps,
//! the required-Eb/N0 search and result files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap::ApState;
use crate::channel::{
    apply_channel, draw_realization, large_scale, place_points, shadow_fading, Point, Topology,
    MIN_DISTANCE_M,
};
use crate::codebook::{
    generate_pattern_matrix, generate_pilot_codebook, PatternMatrix, PilotCodebook,
    PilotDistribution,
};
use crate::config::{
    derive_seed, structural_violations, stream_rng, Message, SystemConfig, TrialResult,
    Violation,
};
use crate::cpu::{run_decoding_loop, Cooperation, Genie, Receiver};
use crate::error::{Error, Result};
use crate::polar::{construct_info_set, CrcSpec, PolarCodeSpec};
use crate::tx::{Transmitter, UserFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cooperative,
    NoCooperation,
    /// All `M·M_r` antennas on one AP at the centre of the area.
    Centralized,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Cooperative => "coop",
            Mode::NoCooperation => "nocoop",
            Mode::Centralized => "central",
        }
    }
}

/// The deployment a mode actually simulates.
pub fn effective_config(cfg: &SystemConfig, mode: Mode) -> SystemConfig {
    match mode {
        Mode::Centralized => SystemConfig {
            num_aps: 1,
            antennas_per_ap: cfg.num_aps * cfg.antennas_per_ap,
            ..cfg.clone()
        },
        _ => cfg.clone(),
    }
}

/// Codebooks and code shared by every trial of one configuration.
#[derive(Debug)]
pub struct Simulator {
    /// Effective configuration (after the mode's antenna regrouping).
    pub cfg: SystemConfig,
    pub mode: Mode,
    /// Replace combined symbol estimates by the transmitted symbols.
    pub genie: bool,
    pilots: PilotCodebook,
    patterns: PatternMatrix,
    polar: PolarCodeSpec,
    crc: CrcSpec,
}

fn physical_violations(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, rule: &'static str, v: f64| {
        if !ok {
            out.push(Violation {
                rule,
                detail: format!("got {v}"),
            });
        }
    };
    let p = cfg.pilot_power;
    let d = cfg.data_power;
    let s = cfg.noise_power;
    check(p.is_finite() && p >= 0.0, "P_p ≥ 0", p);
    check(d.is_finite() && d >= 0.0, "P_d ≥ 0", d);
    check(s.is_finite() && s > 0.0, "sigma2 > 0", s);
    check(cfg.area_side.is_finite() && cfg.area_side >= 0.0, "D ≥ 0", cfg.area_side);
    check(cfg.asd_deg.is_finite() && cfg.asd_deg >= 0.0, "asd_deg ≥ 0", cfg.asd_deg);
    out
}

impl Simulator {
    /// Zero transmit powers are accepted; they simulate silence.
    pub fn new(cfg: &SystemConfig, mode: Mode) -> Result<Self> {
        let mut v = structural_violations(cfg);
        v.extend(physical_violations(cfg));
        if !v.is_empty() {
            return Err(Error::InvalidConfig(v));
        }
        let cfg = effective_config(cfg, mode);
        let dist = if cfg.complex_pilots {
            PilotDistribution::ComplexGaussian
        } else {
            PilotDistribution::RealGaussian
        };
        let pilots = generate_pilot_codebook(
            derive_seed(cfg.master_seed, "pilot", 0),
            cfg.pilot_len,
            cfg.num_pilots(),
            cfg.pilot_power,
            dist,
        )?;
        let patterns = generate_pattern_matrix(
            derive_seed(cfg.master_seed, "pattern", 0),
            cfg.data_slots(),
            cfg.num_pilots(),
            cfg.data_symbols(),
        )?;
        let polar = construct_info_set(cfg.code_len, cfg.payload_bits() + cfg.crc_len)?;
        let crc = CrcSpec::new(cfg.crc_len, cfg.crc);
        Ok(Simulator {
            cfg,
            mode,
            genie: false,
            pilots,
            patterns,
            polar,
            crc,
        })
    }

    pub fn pilots(&self) -> &PilotCodebook {
        &self.pilots
    }

    pub fn patterns(&self) -> &PatternMatrix {
        &self.patterns
    }

    pub fn transmitter(&self) -> Transmitter<'_> {
        Transmitter {
            pilots: &self.pilots,
            patterns: &self.patterns,
            polar: &self.polar,
            crc: &self.crc,
            data_power: self.cfg.data_power,
            pilot_bits: self.cfg.pilot_bits,
        }
    }

    /// Uniform random `B`-bit messages of trial `index`.
    pub fn draw_messages(&self, index: u64) -> Vec<Message> {
        let mut rng = stream_rng(trial_seed(&self.cfg, index), "messages", 0);
        (0..self.cfg.active_users)
            .map(|u| Message {
                bits: (0..self.cfg.message_bits).map(|_| rng.gen_range(0..2u8)).collect(),
                origin_user: u,
            })
            .collect()
    }

    /// Placement of trial `index`. The centralized AP sits at the centre.
    pub fn draw_topology(&self, index: u64) -> Topology {
        let seed = trial_seed(&self.cfg, index);
        let side = self.cfg.area_side;
        let aps: Vec<Point> = match self.mode {
            Mode::Centralized => vec![[side / 2.0, side / 2.0]; self.cfg.num_aps],
            _ => place_points(derive_seed(seed, "ap_positions", 0), self.cfg.num_aps, side),
        };
        let users = place_points(
            derive_seed(seed, "user_positions", 0),
            self.cfg.active_users,
            side,
        );
        Topology::new(aps, users)
    }

    /// Large-scale gains of trial `index`, `K_a × M`.
    pub fn large_scale(&self, index: u64, topology: &Topology) -> Result<DMatrix<f64>> {
        let seed = trial_seed(&self.cfg, index);
        let shadow = shadow_fading(derive_seed(seed, "shadow", 0), topology)?;
        large_scale(&topology.floored_distances(MIN_DISTANCE_M), &shadow)
    }

    /// Received signals of every AP for trial `index`, with the frames sent.
    pub fn received(
        &self,
        index: u64,
        messages: &[Message],
    ) -> Result<(Vec<UserFrame>, Vec<DMatrix<Complex64>>)> {
        let cfg = &self.cfg;
        let seed = trial_seed(cfg, index);
        let tx = self.transmitter();
        let frames = messages
            .iter()
            .map(|m| tx.encode_user(m))
            .collect::<Result<Vec<_>>>()?;
        let topology = self.draw_topology(index);
        let beta = self.large_scale(index, &topology)?;
        let chan = draw_realization(
            derive_seed(seed, "small_scale", 0),
            &topology,
            beta,
            cfg.antennas_per_ap,
            cfg.correlation_model,
            cfg.asd_deg,
        );
        let signals: Vec<Vec<Complex64>> = frames.iter().map(|f| f.signal.clone()).collect();
        let y = apply_channel(
            derive_seed(seed, "noise", 0),
            &signals,
            &chan.g,
            cfg.frame_len,
            cfg.noise_power,
        )?;
        Ok((frames, y))
    }

    /// One Monte Carlo trial; deterministic in `(master_seed, index)`.
    pub fn run_trial(&self, index: u64) -> Result<TrialResult> {
        let messages = self.draw_messages(index);
        let (frames, y) = self.received(index, &messages)?;
        let aps = y
            .into_iter()
            .map(|ym| ApState::new(ym, &self.pilots))
            .collect::<Result<Vec<_>>>()?;
        let genie = self.genie.then(|| {
            let mut symbols = BTreeMap::new();
            for f in &frames {
                symbols
                    .entry(f.pilot_index)
                    .or_insert_with(|| f.codeword_symbols.values.clone());
            }
            Genie { symbols }
        });
        let rx = Receiver {
            tx: self.transmitter(),
            users_per_ap: self.cfg.users_per_ap,
            list_size: self.cfg.list_size,
            noise_power: self.cfg.noise_power,
            max_iterations: self.cfg.max_iterations,
        };
        let coop = match self.mode {
            Mode::NoCooperation => Cooperation::None,
            _ => Cooperation::Level2,
        };
        run_decoding_loop(aps, &rx, coop, genie.as_ref(), &messages)
    }

    /// Runs trials `0..n_trials` in parallel.
    pub fn run_trials(&self, n_trials: usize) -> Result<Vec<TrialResult>> {
        (0..n_trials as u64)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect()
    }

    pub fn estimate_pupe(&self, n_trials: usize) -> Result<PupeEstimate> {
        if n_trials == 0 {
            return Err(Error::contract("at least one trial is required"));
        }
        Ok(PupeEstimate::from_trials(&self.run_trials(n_trials)?))
    }
}

fn trial_seed(cfg: &SystemConfig, index: u64) -> u64 {
    derive_seed(cfg.master_seed, "trial", index)
}

/// Cooperative-mode trial of `cfg`.
pub fn run_trial(cfg: &SystemConfig, index: u64) -> Result<TrialResult> {
    Simulator::new(cfg, Mode::Cooperative)?.run_trial(index)
}

pub fn estimate_pupe(cfg: &SystemConfig, mode: Mode, n_trials: usize) -> Result<PupeEstimate> {
    Simulator::new(cfg, mode)?.estimate_pupe(n_trials)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PupeEstimate {
    pub p_md: f64,
    pub p_fa: f64,
    pub p_e: f64,
    pub trials: usize,
    /// Sample standard error of the per-trial `p_e`.
    pub std_err: f64,
}

impl PupeEstimate {
    pub fn from_trials(results: &[TrialResult]) -> Self {
        let n = results.len();
        if n == 0 {
            return PupeEstimate {
                p_md: 0.0,
                p_fa: 0.0,
                p_e: 0.0,
                trials: 0,
                std_err: 0.0,
            };
        }
        let nf = n as f64;
        let p_md = results.iter().map(TrialResult::md_ratio).sum::<f64>() / nf;
        let p_fa = results.iter().map(TrialResult::fa_ratio).sum::<f64>() / nf;
        let p_e = p_md + p_fa;
        let std_err = if n > 1 {
            let ss: f64 = results
                .iter()
                .map(|r| (r.md_ratio() + r.fa_ratio() - p_e).powi(2))
                .sum();
            (ss / (nf - 1.0)).sqrt() / nf.sqrt()
        } else {
            0.0
        };
        PupeEstimate {
            p_md,
            p_fa,
            p_e,
            trials: n,
            std_err,
        }
    }
}

/// What an experiment varies from point to point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    ActiveUsers(Vec<usize>),
    /// Common average symbol power, dBm.
    PowerDbm(Vec<f64>),
    /// `(M, M_r)` pairs.
    ApSplit(Vec<(usize, usize)>),
}

impl SweepVariable {
    pub fn len(&self) -> usize {
        match self {
            SweepVariable::ActiveUsers(v) => v.len(),
            SweepVariable::PowerDbm(v) => v.len(),
            SweepVariable::ApSplit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::ActiveUsers(_) => "K_a",
            SweepVariable::PowerDbm(_) => "power_dbm",
            SweepVariable::ApSplit(_) => "M_x_M_r",
        }
    }

    /// Configuration and label of point `i`.
    pub fn apply(&self, base: &SystemConfig, i: usize) -> (SystemConfig, String) {
        let mut cfg = base.clone();
        let label = match self {
            SweepVariable::ActiveUsers(v) => {
                cfg.active_users = v[i];
                v[i].to_string()
            }
            SweepVariable::PowerDbm(v) => {
                let w = crate::config::dbm_to_watts(v[i]);
                cfg.pilot_power = w;
                cfg.data_power = w;
                v[i].to_string()
            }
            SweepVariable::ApSplit(v) => {
                cfg.num_aps = v[i].0;
                cfg.antennas_per_ap = v[i].1;
                format!("{}x{}", v[i].0, v[i].1)
            }
        };
        (cfg, label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub sweep: SweepVariable,
    pub trials: usize,
    pub target_pupe: f64,
    pub mode: Mode,
}

impl ExperimentSpec {
    pub fn check(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.trials == 0 {
            v.push(Violation {
                rule: "trials ≥ 1",
                detail: "no trials".into(),
            });
        }
        if !(self.target_pupe > 0.0 && self.target_pupe < 1.0) {
            v.push(Violation {
                rule: "target_pupe in (0,1)",
                detail: format!("got {}", self.target_pupe),
            });
        }
        if self.sweep.is_empty() {
            v.push(Violation {
                rule: "non-empty sweep",
                detail: "no sweep points".into(),
            });
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// One evaluated sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    pub config: SystemConfig,
    pub estimate: PupeEstimate,
}

/// PUPE at every sweep point.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    spec.check()?;
    (0..spec.sweep.len())
        .map(|i| {
            let (cfg, label) = spec.sweep.apply(&spec.base, i);
            let estimate = estimate_pupe(&cfg, spec.mode, spec.trials)?;
            Ok(SweepPoint {
                label,
                config: cfg,
                estimate,
            })
        })
        .collect()
}

/// Outcome of the required-Eb/N0 search at one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ebn0Point {
    pub label: String,
    /// Configuration at the reported crossing (scaled powers).
    pub config: SystemConfig,
    /// `None` when the target is not reached inside the bracket.
    pub ebn0_db: Option<f64>,
    pub estimate: PupeEstimate,
}

/// Search bracket for the power scale factor, dB relative to the base powers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo_db: f64,
    pub hi_db: f64,
    /// Largest downward extension when the low end already meets the target.
    pub max_widen_db: f64,
    pub tol_db: f64,
}

impl Default for Bracket {
    fn default() -> Self {
        Bracket {
            lo_db: -10.0,
            hi_db: 10.0,
            max_widen_db: 20.0,
            tol_db: 0.25,
        }
    }
}

/// `P_p` and `P_d` multiplied by `10^(db/10)`.
pub fn scale_powers(cfg: &SystemConfig, db: f64) -> SystemConfig {
    let f = 10f64.powf(db / 10.0);
    SystemConfig {
        pilot_power: cfg.pilot_power * f,
        data_power: cfg.data_power * f,
        ..cfg.clone()
    }
}

/// Bisection on a common power scale until `p_e` crosses the target.
/// The same trial seeds are reused at every probe.
pub fn search_ebn0(
    cfg: &SystemConfig,
    mode: Mode,
    trials: usize,
    target: f64,
    bracket: Bracket,
) -> Result<(Option<f64>, SystemConfig, PupeEstimate)> {
    let eval = |db: f64| -> Result<(SystemConfig, PupeEstimate)> {
        let c = scale_powers(cfg, db);
        let e = estimate_pupe(&c, mode, trials)?;
        Ok((c, e))
    };
    let mut hi = bracket.hi_db;
    let mut best = eval(hi)?;
    if best.1.p_e > target {
        return Ok((None, best.0, best.1));
    }
    let step = (bracket.hi_db - bracket.lo_db).max(bracket.tol_db);
    let mut lo = bracket.lo_db;
    let mut widened = 0.0;
    loop {
        let probe = eval(lo)?;
        if probe.1.p_e > target {
            break;
        }
        best = probe;
        hi = lo;
        if widened >= bracket.max_widen_db {
            return Ok((Some(best.0.ebn0_db()), best.0, best.1));
        }
        lo -= step;
        widened += step;
    }
    while hi - lo > bracket.tol_db {
        let mid = 0.5 * (lo + hi);
        let probe = eval(mid)?;
        if probe.1.p_e <= target {
            hi = mid;
            best = probe;
        } else {
            lo = mid;
        }
    }
    Ok((Some(best.0.ebn0_db()), best.0, best.1))
}

/// Required `E_b/N_0` at every sweep point.
pub fn required_ebn0(spec: &ExperimentSpec, bracket: Bracket) -> Result<Vec<Ebn0Point>> {
    spec.check()?;
    (0..spec.sweep.len())
        .map(|i| {
            let (cfg, label) = spec.sweep.apply(&spec.base, i);
            let (ebn0_db, config, estimate) =
                search_ebn0(&cfg, spec.mode, spec.trials, spec.target_pupe, bracket)?;
            Ok(Ebn0Point {
                label,
                config,
                ebn0_db,
                estimate,
            })
        })
        .collect()
}

/// Version string of the running build.
pub fn version_string() -> String {
    let pkg = env!("CARGO_PKG_VERSION");
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    match git {
        Some(g) => format!("v{pkg}-g{g}"),
        None => format!("v{pkg}"),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: String,
    command: &'a str,
    mode: Mode,
    master_seed: u64,
    trials: usize,
    target_pupe: f64,
    sweep_variable: &'static str,
    sweep: &'a SweepVariable,
    config: &'a SystemConfig,
    config_hash: String,
    files: Vec<String>,
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

pub fn pupe_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("sweep_value,p_md,p_fa,p_e,std_err,trials,config_hash\n");
    for p in points {
        let e = &p.estimate;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.label,
            e.p_md,
            e.p_fa,
            e.p_e,
            e.std_err,
            e.trials,
            p.config.fingerprint()
        );
    }
    s
}

pub fn ebn0_csv(points: &[Ebn0Point]) -> String {
    let mut s = String::from(
        "sweep_value,ebn0_db,status,pilot_power_w,data_power_w,p_md,p_fa,p_e,std_err,trials,config_hash\n",
    );
    for p in points {
        let e = &p.estimate;
        let (db, status) = match p.ebn0_db {
            Some(v) => (v.to_string(), "ok"),
            None => (String::new(), "infeasible"),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.label,
            db,
            status,
            p.config.pilot_power,
            p.config.data_power,
            e.p_md,
            e.p_fa,
            e.p_e,
            e.std_err,
            e.trials,
            p.config.fingerprint()
        );
    }
    s
}

/// Writes `pupe.csv`, `manifest.json` and `pupe.svg` into `dir`.
pub fn emit_results(points: &[SweepPoint], spec: &ExperimentSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    if points.is_empty() {
        return Err(Error::contract("no results to write"));
    }
    ensure_dir(dir)?;
    let csv = dir.join("pupe.csv");
    write_file(&csv, &pupe_csv(points))?;
    let floor = points
        .iter()
        .map(|p| 1.0 / (p.config.active_users.max(1) * p.estimate.trials.max(1)) as f64)
        .fold(f64::INFINITY, f64::min);
    let series: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (axis_value(&p.label, i), p.estimate.p_e))
        .collect();
    let svg = dir.join("pupe.svg");
    write_file(
        &svg,
        &svg_plot(&series, spec.sweep.name(), "PUPE", Some(floor), spec.mode.label()),
    )?;
    let manifest = dir.join("manifest.json");
    write_manifest(&manifest, "sweep", spec, &[&csv, &svg])?;
    Ok(vec![csv, svg, manifest])
}

/// Writes `ebn0.csv`, `manifest.json` and `ebn0.svg` into `dir`.
pub fn emit_ebn0(points: &[Ebn0Point], spec: &ExperimentSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    if points.is_empty() {
        return Err(Error::contract("no results to write"));
    }
    ensure_dir(dir)?;
    let csv = dir.join("ebn0.csv");
    write_file(&csv, &ebn0_csv(points))?;
    let series: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.ebn0_db.map(|v| (axis_value(&p.label, i), v)))
        .collect();
    let svg = dir.join("ebn0.svg");
    write_file(
        &svg,
        &svg_plot(&series, spec.sweep.name(), "required Eb/N0 (dB)", None, spec.mode.label()),
    )?;
    let manifest = dir.join("manifest.json");
    write_manifest(&manifest, "ebn0", spec, &[&csv, &svg])?;
    Ok(vec![csv, svg, manifest])
}

fn write_manifest(path: &Path, command: &str, spec: &ExperimentSpec, files: &[&PathBuf]) -> Result<()> {
    let m = Manifest {
        version: version_string(),
        command,
        mode: spec.mode,
        master_seed: spec.base.master_seed,
        trials: spec.trials,
        target_pupe: spec.target_pupe,
        sweep_variable: spec.sweep.name(),
        sweep: &spec.sweep,
        config: &spec.base,
        config_hash: spec.base.fingerprint(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
    };
    let body = serde_json::to_string_pretty(&m).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_file(path, &(body + "\n"))
}

fn axis_value(label: &str, i: usize) -> f64 {
    label.parse().unwrap_or(i as f64)
}

/// Minimal line plot. With `log_floor` the y axis is logarithmic and values
/// below the floor are drawn at the floor.
pub fn svg_plot(
    series: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
    log_floor: Option<f64>,
    title: &str,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 30.0;
    const B: f64 = 50.0;
    let ty = |v: f64| match log_floor {
        Some(f) => v.max(f).log10(),
        None => v,
    };
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.iter().map(|p| ty(p.1)).collect();
    let span = |v: &[f64], dflt: (f64, f64)| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            dflt
        } else if hi - lo < 1e-12 {
            (lo - 1.0, hi + 1.0)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(&xs, (0.0, 1.0));
    let (y0, y1) = match log_floor {
        Some(f) => {
            let (a, b) = span(&ys, (f.log10(), 0.0));
            (a.min(f.log10()).floor(), b.max(a + 1.0).ceil().min(1.0).max(a.floor() + 1.0))
        }
        None => span(&ys, (0.0, 1.0)),
    };
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| T + (1.0 - (y - y0) / (y1 - y0)) * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    match log_floor {
        Some(_) => {
            let mut d = y0;
            while d <= y1 + 1e-9 {
                let y = py(d);
                let _ = writeln!(
                    s,
                    r##"<line x1="{L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
                    W - R,
                    L - 6.0,
                    y + 4.0,
                    d as i64
                );
                d += 1.0;
            }
        }
        None => {
            for k in 0..=4 {
                let v = y0 + (y1 - y0) * k as f64 / 4.0;
                let y = py(v);
                let _ = writeln!(
                    s,
                    r##"<line x1="{L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
                    W - R,
                    L - 6.0,
                    y + 4.0
                );
            }
        }
    }
    for &x in &xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            px(x),
            H - B + 16.0
        );
    }
    let pts: Vec<String> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    if !pts.is_empty() {
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##,
            pts.join(" ")
        );
        for p in &pts {
            let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, r##"<circle cx="{cx}" cy="{cy}" r="3" fill="#1f5fa8"/>"##);
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        (L + W - R) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        (T + H - B) / 2.0,
        (T + H - B) / 2.0
    );
    let _ = writeln!(s, r#"<text x="{L}" y="20">{title}</text>"#);
    s.push_str("</svg>\n");
    s
}
