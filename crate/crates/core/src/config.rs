//! System and scheme parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All parameters of one coded pilot access setup.
///
/// The frame length is stored as an integer slot count; the overhead factor
/// `alpha = tau * frame_len / users` and the mean factor degree
/// `beta = p_active * users / tau` are derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Number of single-antenna users, K.
    pub users: usize,
    /// Base station antennas, M.
    pub antennas: usize,
    /// Symbols per coherence slot, L.
    pub coherence: usize,
    /// Pilot length and number of orthogonal pilots, tau.
    pub pilots: usize,
    /// Noise power per complex dimension.
    pub noise_var: f64,
    /// Physical-layer code rate R.
    pub code_rate: f64,
    /// Modulation bits per symbol (2 for QPSK).
    pub bits_per_symbol: u32,
    /// Per-slot activation probability p_a.
    pub p_active: f64,
    /// Frame length in slots, Delta.
    pub frame_len: usize,
    pub seed: u64,
}

/// Configuration keys accepted by [`SystemConfig::set_key`] and config files.
pub const CONFIG_KEYS: [&str; 10] = [
    "users",
    "antennas",
    "coherence",
    "pilots",
    "noise_var",
    "code_rate",
    "bits_per_symbol",
    "p_active",
    "frame_len",
    "seed",
];

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            users: 1000,
            antennas: 400,
            coherence: 64,
            pilots: 4,
            noise_var: 0.1,
            code_rate: 1.0,
            bits_per_symbol: 2,
            p_active: 0.004,
            frame_len: 275,
            seed: 2016,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if self.antennas == 0 {
            return bad("antennas must be at least 1".into());
        }
        if self.pilots == 0 || self.pilots >= self.coherence {
            return bad(format!(
                "need 1 <= pilots < coherence, got pilots={} coherence={}",
                self.pilots, self.coherence
            ));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return bad(format!("noise_var must be finite and >= 0, got {}", self.noise_var));
        }
        if !(self.code_rate > 0.0 && self.code_rate <= 1.0) {
            return bad(format!("code_rate must lie in (0, 1], got {}", self.code_rate));
        }
        if self.bits_per_symbol == 0 {
            return bad("bits_per_symbol must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p_active) {
            return bad(format!("p_active must lie in [0, 1], got {}", self.p_active));
        }
        if self.frame_len == 0 {
            return bad("frame_len must be at least 1".into());
        }
        Ok(())
    }

    /// Data symbols per slot, D = L - tau.
    pub fn data_len(&self) -> usize {
        self.coherence - self.pilots
    }

    /// Overhead factor tau * Delta / K.
    pub fn alpha(&self) -> f64 {
        (self.pilots * self.frame_len) as f64 / self.users as f64
    }

    /// Mean factor-node degree p_a * K / tau.
    pub fn beta(&self) -> f64 {
        self.p_active * self.users as f64 / self.pilots as f64
    }

    /// Returns a copy with `(frame_len, p_active)` set from scheme parameters:
    /// `Delta = round(alpha K / tau)` (at least one slot) and
    /// `p_a = min(1, beta tau / K)`.
    pub fn with_scheme(&self, alpha: f64, beta: f64, pilots: usize) -> Self {
        let mut cfg = self.clone();
        cfg.pilots = pilots;
        let k = cfg.users as f64;
        cfg.frame_len = ((alpha * k / pilots as f64).round() as usize).max(1);
        cfg.p_active = (beta * pilots as f64 / k).clamp(0.0, 1.0);
        cfg
    }

    /// Minimum SINR for a rate-R code on b-bit symbols:
    /// `log2(1 + sinr) >= b R`, optionally hardened by a margin in dB.
    pub fn sinr_threshold(&self, margin_db: f64) -> f64 {
        let base = (self.bits_per_symbol as f64 * self.code_rate).exp2() - 1.0;
        base * 10f64.powf(margin_db / 10.0)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Overrides one field from its textual value. Does not re-validate.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "users" => self.users = parse(key, value)?,
            "antennas" => self.antennas = parse(key, value)?,
            "coherence" => self.coherence = parse(key, value)?,
            "pilots" => self.pilots = parse(key, value)?,
            "noise_var" => self.noise_var = parse(key, value)?,
            "code_rate" => self.code_rate = parse(key, value)?,
            "bits_per_symbol" => self.bits_per_symbol = parse(key, value)?,
            "p_active" => self.p_active = parse(key, value)?,
            "frame_len" => self.frame_len = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }
}
