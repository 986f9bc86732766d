//! Scenario parameters, shared domain types and the seeding policy.
//!
//! Every quantity is stored in SI units (watts, meters). Field names on the
//! wire (JSON config files, run manifests) are the short symbolic names used
//! throughout the project documentation: `n`, `B`, `B_p`, `n_p`, `K_a`, ...

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Length of the 5G polar reliability table shipped with the crate.
pub const MAX_CODE_LEN: usize = 1024;

/// Largest supported pilot-selector width. `2^B_p` pilots are materialized.
pub const MAX_PILOT_BITS: usize = 20;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    GaussianLocalScattering,
    Identity,
}

/// CRC generator parameters. The register width is the config's `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrcParams {
    /// Generator polynomial without the implicit leading `x^r` term.
    pub poly: u32,
    pub init: u32,
    pub reflect_in: bool,
    pub reflect_out: bool,
    pub xor_out: u32,
}

impl Default for CrcParams {
    /// x^16 + x^12 + x^5 + 1, zero initial value, no reflection.
    fn default() -> Self {
        CrcParams {
            poly: 0x1021,
            init: 0,
            reflect_in: false,
            reflect_out: false,
            xor_out: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Frame length in channel uses.
    #[serde(rename = "n")]
    pub frame_len: usize,
    /// Message bits per user.
    #[serde(rename = "B")]
    pub message_bits: usize,
    /// Leading message bits that select the pilot and the on-off pattern.
    #[serde(rename = "B_p")]
    pub pilot_bits: usize,
    #[serde(rename = "n_p")]
    pub pilot_len: usize,
    /// Polar code length in bits.
    #[serde(rename = "n_c")]
    pub code_len: usize,
    #[serde(rename = "r")]
    pub crc_len: usize,
    #[serde(rename = "K_a")]
    pub active_users: usize,
    #[serde(rename = "K_tot")]
    pub total_users: usize,
    #[serde(rename = "M")]
    pub num_aps: usize,
    #[serde(rename = "M_r")]
    pub antennas_per_ap: usize,
    /// Users recovered per AP and decoding iteration.
    #[serde(rename = "K_m")]
    pub users_per_ap: usize,
    /// Side of the square deployment area, meters.
    #[serde(rename = "D")]
    pub area_side: f64,
    /// Average pilot symbol power, watts.
    #[serde(rename = "P_p")]
    pub pilot_power: f64,
    /// Average data symbol power, watts.
    #[serde(rename = "P_d")]
    pub data_power: f64,
    /// Noise power per complex sample, watts.
    #[serde(rename = "sigma2")]
    pub noise_power: f64,
    #[serde(rename = "L_list")]
    pub list_size: usize,
    /// Maximum number of decoding (SIC) iterations.
    #[serde(rename = "n_dec")]
    pub max_iterations: usize,
    /// Angular standard deviation of the local scattering model, degrees.
    pub asd_deg: f64,
    pub master_seed: u64,
    /// Draw pilot entries from CN(0,1) instead of real N(0,1).
    pub complex_pilots: bool,
    pub correlation_model: CorrelationModel,
    pub crc: CrcParams,
}

impl Default for SystemConfig {
    /// Desk-scale scenario: the reference frame and code parameters with a
    /// 25-AP single-antenna deployment.
    fn default() -> Self {
        SystemConfig {
            frame_len: 3200,
            message_bits: 100,
            pilot_bits: 12,
            pilot_len: 1152,
            code_len: 1024,
            crc_len: 16,
            active_users: 100,
            total_users: 10_000,
            num_aps: 25,
            antennas_per_ap: 1,
            users_per_ap: 7,
            area_side: 550.0,
            pilot_power: 0.01,
            data_power: 0.01,
            noise_power: dbm_to_watts(-84.0),
            list_size: 8,
            max_iterations: 10,
            asd_deg: 10.0,
            master_seed: 0x5eed_cafe,
            complex_pilots: false,
            correlation_model: CorrelationModel::GaussianLocalScattering,
            crc: CrcParams::default(),
        }
    }
}

impl SystemConfig {
    /// Full-size deployment: 100 single-antenna APs, `K_m = 10`, `K_a = 200`.
    pub fn paper_scale() -> Self {
        SystemConfig {
            num_aps: 100,
            antennas_per_ap: 1,
            users_per_ap: 10,
            active_users: 200,
            ..SystemConfig::default()
        }
    }

    /// Number of QPSK data symbols per user.
    pub fn data_symbols(&self) -> usize {
        self.code_len / 2
    }

    /// Number of candidate pilots, `2^B_p`.
    pub fn num_pilots(&self) -> usize {
        1usize << self.pilot_bits
    }

    /// Message bits carried by the polar codeword.
    pub fn payload_bits(&self) -> usize {
        self.message_bits - self.pilot_bits
    }

    pub fn data_slots(&self) -> usize {
        self.frame_len - self.pilot_len
    }

    /// Transmit energy per frame, `n_p P_p + n_d P_d`.
    pub fn frame_energy(&self) -> f64 {
        self.pilot_len as f64 * self.pilot_power
            + self.data_symbols() as f64 * self.data_power
    }

    /// Transmit `E_b/N_0` in linear scale.
    pub fn ebn0(&self) -> f64 {
        self.frame_energy() / (self.message_bits as f64 * self.noise_power)
    }

    pub fn ebn0_db(&self) -> f64 {
        10.0 * self.ebn0().log10()
    }

    /// Short stable fingerprint of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One violated configuration invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.rule, self.detail)
    }
}

/// Checks every configuration invariant and returns all violations.
///
/// Total over its input: never panics, whatever the integer and float
/// values. An empty list means the configuration is usable.
pub fn validate_config(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_structure(cfg, &mut out);
    validate_physics(cfg, &mut out);
    out
}

/// Dimension and code-parameter checks only. Physical quantities (powers,
/// noise, area) may be degenerate and still simulate.
pub(crate) fn structural_violations(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_structure(cfg, &mut out);
    out
}

fn validate_structure(cfg: &SystemConfig, out: &mut Vec<Violation>) {
    let mut push = |rule: &'static str, detail: String| out.push(Violation { rule, detail });

    if cfg.frame_len == 0 {
        push("n ≥ 1", "frame length is zero".into());
    }
    if cfg.code_len % 2 != 0 {
        push("n_c even", format!("n_c = {}", cfg.code_len));
    }
    if !cfg.code_len.is_power_of_two() || cfg.code_len < 2 {
        push("n_c power of two", format!("n_c = {}", cfg.code_len));
    }
    if cfg.code_len > MAX_CODE_LEN {
        push(
            "n_c ≤ 1024",
            format!("n_c = {} exceeds the reliability table", cfg.code_len),
        );
    }
    let n_d = cfg.code_len / 2;
    match cfg.pilot_len.checked_add(n_d) {
        Some(used) if used <= cfg.frame_len => {}
        _ => push(
            "n_p + n_d ≤ n",
            format!("n_p = {}, n_d = {}, n = {}", cfg.pilot_len, n_d, cfg.frame_len),
        ),
    }
    if cfg.pilot_len == 0 {
        push("n_p ≥ 1", "pilot length is zero".into());
    }
    if cfg.pilot_bits >= cfg.message_bits {
        push(
            "B_c > 0",
            format!("B = {}, B_p = {}", cfg.message_bits, cfg.pilot_bits),
        );
    } else {
        let b_c = cfg.message_bits - cfg.pilot_bits;
        match b_c.checked_add(cfg.crc_len) {
            Some(k) if k <= cfg.code_len => {}
            _ => push(
                "B_c + r ≤ n_c",
                format!("B_c = {}, r = {}, n_c = {}", b_c, cfg.crc_len, cfg.code_len),
            ),
        }
    }
    if cfg.pilot_bits > MAX_PILOT_BITS {
        push(
            "B_p ≤ 20",
            format!("B_p = {} would materialize too many pilots", cfg.pilot_bits),
        );
    }
    if cfg.crc_len > 32 {
        push("r ≤ 32", format!("r = {}", cfg.crc_len));
    } else if cfg.crc_len < 32 && (cfg.crc.poly >> cfg.crc_len) != 0 {
        push(
            "CRC polynomial fits in r bits",
            format!("poly = {:#x}, r = {}", cfg.crc.poly, cfg.crc_len),
        );
    }
    if cfg.num_aps == 0 {
        push("M ≥ 1", "no access points".into());
    }
    if cfg.antennas_per_ap == 0 {
        push("M_r ≥ 1", "no antennas per AP".into());
    }
    let n_pilots = if cfg.pilot_bits <= MAX_PILOT_BITS {
        Some(1usize << cfg.pilot_bits)
    } else {
        None
    };
    if cfg.users_per_ap == 0 || n_pilots.is_some_and(|n| cfg.users_per_ap > n) {
        push(
            "1 ≤ K_m ≤ N",
            format!("K_m = {}, B_p = {}", cfg.users_per_ap, cfg.pilot_bits),
        );
    }
    if cfg.active_users > cfg.total_users {
        push(
            "K_a ≤ K_tot",
            format!("K_a = {}, K_tot = {}", cfg.active_users, cfg.total_users),
        );
    }
    if cfg.list_size == 0 {
        push("L_list ≥ 1", "empty decoder list".into());
    }
    if cfg.max_iterations == 0 {
        push("n_dec ≥ 1", "no decoding iterations".into());
    }
}

fn validate_physics(cfg: &SystemConfig, out: &mut Vec<Violation>) {
    let mut positive = |rule: &'static str, v: f64| {
        if !(v.is_finite() && v > 0.0) {
            out.push(Violation {
                rule,
                detail: format!("got {v}"),
            });
        }
    };
    positive("P_p > 0", cfg.pilot_power);
    positive("P_d > 0", cfg.data_power);
    positive("sigma2 > 0", cfg.noise_power);
    positive("D > 0", cfg.area_side);
    if !(cfg.asd_deg.is_finite() && cfg.asd_deg >= 0.0) {
        out.push(Violation {
            rule: "asd_deg ≥ 0",
            detail: format!("got {}", cfg.asd_deg),
        });
    }
}

/// Mixes `(master_seed, stream_label, index)` into an independent 64-bit seed.
pub fn derive_seed(master_seed: u64, stream_label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((stream_label.len() as u64).to_le_bytes());
    h.update(stream_label.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Deterministic generator for one named stream.
pub fn stream_rng(master_seed: u64, stream_label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, stream_label, index))
}

/// A `B`-bit message. `origin_user` is simulation ground truth only.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub bits: Vec<u8>,
    pub origin_user: usize,
}

/// Outcome of one Monte Carlo trial.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Recovered messages, sorted, without duplicates.
    pub decoded: Vec<Vec<u8>>,
    pub active_users: usize,
    pub n_md: usize,
    pub n_fa: usize,
    pub iterations_used: usize,
    /// Newly decoded messages per decoding iteration.
    pub per_iteration_decoded: Vec<usize>,
}

impl TrialResult {
    pub fn md_ratio(&self) -> f64 {
        if self.active_users == 0 {
            0.0
        } else {
            self.n_md as f64 / self.active_users as f64
        }
    }

    /// False-alarm ratio; zero for an empty output list.
    pub fn fa_ratio(&self) -> f64 {
        if self.decoded.is_empty() {
            0.0
        } else {
            self.n_fa as f64 / self.decoded.len() as f64
        }
    }
}
