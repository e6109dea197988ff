use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::channel::LinkParams;
use crate::harness::codec::synthetic_bytes;
use crate::lt::CodingParams;
use crate::wire::MAX_SYMBOL_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lt,
    Arq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssistantConfig {
    /// Client id; 0 is reserved for the RU.
    pub id: u32,
    /// Server to AU (the AU's cellular link).
    pub uplink: LinkParams,
    /// AU to RU (the local hotspot link).
    pub relay: LinkParams,
    #[serde(default = "yes")]
    pub present_at_start: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChurnAction {
    Leave,
    Join,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChurnEvent {
    /// Virtual seconds since session start.
    pub at: f64,
    pub au: u32,
    pub action: ChurnAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArqParams {
    pub window: usize,
    pub max_retries: u32,
}

impl Default for ArqParams {
    fn default() -> Self {
        Self { window: 8, max_retries: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Synthetic file length, ignored when `payload` is set.
    #[serde(default)]
    pub file_size: usize,
    #[serde(default)]
    pub file_seed: u64,
    /// Explicit file contents.
    #[serde(skip)]
    pub payload: Option<Vec<u8>>,
    #[serde(default)]
    pub coding: CodingParams,
    /// Server to RU.
    pub direct: LinkParams,
    #[serde(default)]
    pub assistants: Vec<AssistantConfig>,
    #[serde(default)]
    pub churn: Vec<ChurnEvent>,
    #[serde(default = "default_control_latency")]
    pub control_latency_ms: f64,
    /// Blocks in flight per configured path (direct plus assistants).
    #[serde(default = "default_block_window")]
    pub block_window: usize,
    #[serde(default = "default_monitor_window")]
    pub monitor_window: f64,
    /// Abort when virtual time passes this many seconds.
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    #[serde(default)]
    pub session_seed: u64,
    #[serde(default)]
    pub arq: ArqParams,
}

fn default_mode() -> Mode {
    Mode::Lt
}
fn default_control_latency() -> f64 {
    10.0
}
fn default_block_window() -> usize {
    4
}
fn default_monitor_window() -> f64 {
    1.0
}
fn default_max_time() -> f64 {
    3600.0
}

impl SessionConfig {
    /// `assistants` AUs whose uplinks match the direct link; relays run 4x faster.
    ///
    /// Every link gets its own loss seed derived from `seed`.
    pub fn equal_paths(assistants: usize, rate: f64, loss: f64, latency_ms: f64, file_size: usize, seed: u64) -> Self {
        let link = |k: u64| LinkParams::new(loss, rate, latency_ms, crate::exec::trial_seed(seed, k as usize));
        let assistants = (0..assistants)
            .map(|i| {
                let mut relay = link(2 * i as u64 + 2);
                relay.rate_limit = rate * 4.0;
                AssistantConfig { id: i as u32 + 1, uplink: link(2 * i as u64 + 1), relay, present_at_start: true }
            })
            .collect();
        Self {
            mode: Mode::Lt,
            file_size,
            file_seed: seed,
            payload: None,
            coding: CodingParams::default(),
            direct: link(0),
            assistants,
            churn: Vec::new(),
            control_latency_ms: default_control_latency(),
            block_window: default_block_window(),
            monitor_window: default_monitor_window(),
            max_time: default_max_time(),
            session_seed: seed,
            arq: ArqParams::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SessionError> {
        let cfg: Self = toml::from_str(s).map_err(|e| SessionError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SessionError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The bytes to transfer.
    pub fn file_bytes(&self) -> Vec<u8> {
        match &self.payload {
            Some(p) => p.clone(),
            None => synthetic_bytes(self.file_size, self.file_seed),
        }
    }

    pub fn file_len(&self) -> usize {
        self.payload.as_ref().map_or(self.file_size, Vec::len)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::Config(m));
        if self.file_len() == 0 {
            return bad("file is empty".into());
        }
        if self.coding.n == 0 || self.coding.n > u16::MAX as usize {
            return bad(format!("n = {} outside 1..=65535", self.coding.n));
        }
        if self.coding.symbol_size == 0 || self.coding.symbol_size > MAX_SYMBOL_SIZE {
            return bad(format!("symbol size {} outside 1..={MAX_SYMBOL_SIZE}", self.coding.symbol_size));
        }
        self.direct.validate()?;
        let mut ids = HashSet::new();
        for a in &self.assistants {
            if a.id == 0 || !ids.insert(a.id) {
                return bad(format!("assistant id {} is reserved or repeated", a.id));
            }
            a.uplink.validate()?;
            a.relay.validate()?;
        }
        for ev in &self.churn {
            if !ids.contains(&ev.au) {
                return bad(format!("churn event names unknown assistant {}", ev.au));
            }
            if !(ev.at >= 0.0 && ev.at.is_finite()) {
                return bad(format!("churn time {} invalid", ev.at));
            }
        }
        if self.block_window == 0 {
            return bad("block window must be positive".into());
        }
        if !(self.monitor_window > 0.0) || !(self.max_time > 0.0) || !(self.control_latency_ms >= 0.0) {
            return bad("monitor window, max time and control latency must be positive".into());
        }
        if self.arq.window == 0 {
            return bad("ARQ window must be positive".into());
        }
        Ok(())
    }
}
