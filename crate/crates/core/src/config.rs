//! Simulation configuration: defaults model an Ampere-class SM, every knob
//! overridable from an INI-style file whose sections mirror the subsystems.

use crate::isa::{BankMap, LatencyTable};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepsMechanism {
    ControlBits,
    Scoreboard,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefetchKind {
    None,
    Stream,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitWidth {
    Full,
    Half,
}

/// Pipeline-depth constants the model was calibrated with. They are part
/// of the configuration record so that a run's JSON output documents the
/// exact timing assumptions it was produced under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    /// Version tag of this constant set.
    pub version: u32,
    /// Cycles from issue to the Control stage.
    pub issue_to_control: u64,
    /// Cycles from Control to the Allocate stage.
    pub control_to_allocate: u64,
    /// Length of the operand read window reserved by Allocate.
    pub read_window: u64,
    /// CLOCK captures the cycle counter in the Control stage.
    pub clock_at_control: bool,
    /// Cycles before a freed LSU slot becomes visible to the issue stage.
    pub lsu_visibility: u64,
    /// Cycles from issue to arrival in the LSU queue (Control + 1).
    pub lsu_entry_offset: u64,
    /// Cycles from LSU-queue arrival to the earliest AGU entry.
    pub agu_entry_delay: u64,
    /// Cycles from issue to the fixed-latency operand capture point.
    pub operand_capture_offset: u64,
    /// Visibility delay of dependence-counter updates at the issue stage:
    /// a release scheduled for cycle `t` is observable at `t + 1`.
    pub readiness_offset: u64,
    /// Cycles from issue to arrival at an execution-unit input latch.
    pub unit_arrival_offset: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            version: 1,
            issue_to_control: 1,
            control_to_allocate: 1,
            read_window: 3,
            clock_at_control: true,
            lsu_visibility: 2,
            lsu_entry_offset: 2,
            agu_entry_delay: 3,
            operand_capture_offset: 3,
            readiness_offset: 1,
            unit_arrival_offset: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmConfig {
    // [sim]
    pub sub_cores: usize,
    pub warps: usize,
    pub cycle_cap: u64,
    // [deps]
    pub deps_mechanism: DepsMechanism,
    /// Maximum in-flight consumers per register in scoreboard mode;
    /// `None` models unbounded counters.
    pub max_consumers: Option<u32>,
    // [icache]
    pub l0_lines: usize,
    pub line_bytes: usize,
    pub l0_assoc: usize,
    pub miss_latency: u64,
    pub perfect_icache: bool,
    /// Instruction-buffer entries per warp (buffered plus in-flight).
    pub ibuffer_entries: usize,
    // [prefetch]
    pub prefetch_kind: PrefetchKind,
    pub prefetch_depth: usize,
    /// Cycles between successive stream-buffer prefetch requests.
    pub prefetch_interval: u64,
    // [regfile]
    pub read_ports_per_bank: usize,
    pub rfc_enabled: bool,
    pub bank_map: BankMap,
    // [exec]
    pub fp32_width: UnitWidth,
    pub int32_width: UnitWidth,
    /// FP32 instructions may dispatch to the INT32 unit as well.
    pub fp32_dual_dispatch: bool,
    // [mem]
    pub lsu_queue: usize,
    pub agu_latency: u64,
    pub shared_accept_period: u64,
    // [const]
    pub const_fl_miss_delay: u64,
    pub const_line_bytes: usize,
    // timing constants
    pub calibration: Calibration,
    #[serde(skip)]
    pub latency_table: LatencyTable,
}

impl Default for SmConfig {
    fn default() -> Self {
        SmConfig {
            sub_cores: 4,
            warps: 4,
            cycle_cap: 10_000_000,
            deps_mechanism: DepsMechanism::ControlBits,
            max_consumers: Some(63),
            l0_lines: 16,
            line_bytes: 128,
            l0_assoc: 4,
            miss_latency: 20,
            perfect_icache: false,
            ibuffer_entries: 3,
            prefetch_kind: PrefetchKind::Stream,
            prefetch_depth: 16,
            prefetch_interval: 10,
            read_ports_per_bank: 1,
            rfc_enabled: true,
            bank_map: BankMap::Parity,
            fp32_width: UnitWidth::Full,
            int32_width: UnitWidth::Full,
            fp32_dual_dispatch: true,
            lsu_queue: 4,
            agu_latency: 4,
            shared_accept_period: 2,
            const_fl_miss_delay: 79,
            const_line_bytes: 64,
            calibration: Calibration::default(),
            latency_table: LatencyTable::builtin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl SmConfig {
    /// Total LSU-side occupancy a sub-core may hold (queue plus AGU slot).
    pub fn lsu_capacity(&self) -> usize {
        self.lsu_queue + 1
    }

    pub fn warps_of_subcore(&self, sc: usize) -> Vec<usize> {
        (0..self.warps).filter(|w| w % self.sub_cores == sc).collect()
    }

    /// Apply one `section.key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let bad = || ConfigError(format!("invalid value `{v}` for `{key}`"));
        let parse_u64 = |v: &str| v.parse::<u64>().map_err(|_| bad());
        let parse_usize = |v: &str| v.parse::<usize>().map_err(|_| bad());
        let parse_bool = |v: &str| match v {
            "true" | "on" | "1" | "yes" => Ok(true),
            "false" | "off" | "0" | "no" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "sim.sub_cores" => self.sub_cores = parse_usize(v)?,
            "sim.warps" => self.warps = parse_usize(v)?,
            "sim.cycle_cap" => self.cycle_cap = parse_u64(v)?,
            "deps.mechanism" => {
                self.deps_mechanism = match v {
                    "control_bits" => DepsMechanism::ControlBits,
                    "scoreboard" => DepsMechanism::Scoreboard,
                    "hybrid" => DepsMechanism::Hybrid,
                    _ => return Err(bad()),
                }
            }
            "deps.max_consumers" => {
                self.max_consumers = match v {
                    "unlimited" => None,
                    _ => Some(v.parse::<u32>().map_err(|_| bad())?),
                }
            }
            "icache.l0_lines" => self.l0_lines = parse_usize(v)?,
            "icache.line_bytes" => self.line_bytes = parse_usize(v)?,
            "icache.assoc" => self.l0_assoc = parse_usize(v)?,
            "icache.miss_latency" => self.miss_latency = parse_u64(v)?,
            "icache.perfect" => self.perfect_icache = parse_bool(v)?,
            "icache.ibuffer_entries" => self.ibuffer_entries = parse_usize(v)?,
            "prefetch.kind" => {
                self.prefetch_kind = match v {
                    "none" => PrefetchKind::None,
                    "stream" => PrefetchKind::Stream,
                    _ => return Err(bad()),
                }
            }
            "prefetch.depth" => self.prefetch_depth = parse_usize(v)?,
            "prefetch.interval" => self.prefetch_interval = parse_u64(v)?,
            "regfile.read_ports_per_bank" => self.read_ports_per_bank = parse_usize(v)?,
            "regfile.rfc" => self.rfc_enabled = parse_bool(v)?,
            "regfile.bank_map" => {
                self.bank_map = match v {
                    "parity" => BankMap::Parity,
                    "half" => BankMap::Half,
                    _ => return Err(bad()),
                }
            }
            "exec.fp32_width" => self.fp32_width = parse_width(v).ok_or_else(bad)?,
            "exec.int32_width" => self.int32_width = parse_width(v).ok_or_else(bad)?,
            "exec.fp32_dual_dispatch" => self.fp32_dual_dispatch = parse_bool(v)?,
            "mem.lsu_queue" => self.lsu_queue = parse_usize(v)?,
            "mem.agu_throughput" | "mem.agu_latency" => self.agu_latency = parse_u64(v)?,
            "mem.shared_accept_period" => self.shared_accept_period = parse_u64(v)?,
            "const.fl_miss_delay" => self.const_fl_miss_delay = parse_u64(v)?,
            "const.line_bytes" => self.const_line_bytes = parse_usize(v)?,
            _ => return Err(ConfigError(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Parse an INI-style config file and apply it over the defaults.
    pub fn from_ini(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SmConfig::default();
        cfg.apply_ini(text)?;
        Ok(cfg)
    }

    pub fn apply_ini(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", no + 1)))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if key == "mem.latency_table" {
                let text = std::fs::read_to_string(v.trim())
                    .map_err(|e| ConfigError(format!("latency table `{}`: {e}", v.trim())))?;
                self.latency_table =
                    LatencyTable::from_ini(&text).map_err(|e| ConfigError(e.to_string()))?;
                continue;
            }
            self.set(&key, v)?;
        }
        self.check()
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.sub_cores == 0 || self.warps == 0 {
            return Err(ConfigError("sub_cores and warps must be positive".into()));
        }
        if self.read_ports_per_bank == 0 {
            return Err(ConfigError("read_ports_per_bank must be positive".into()));
        }
        if self.line_bytes == 0 || !self.line_bytes.is_multiple_of(16) {
            return Err(ConfigError("line_bytes must be a positive multiple of 16".into()));
        }
        if self.shared_accept_period == 0 || self.agu_latency == 0 {
            return Err(ConfigError("mem periods must be positive".into()));
        }
        if self.ibuffer_entries == 0 {
            return Err(ConfigError("ibuffer_entries must be positive".into()));
        }
        self.latency_table.validate().map_err(|e| ConfigError(e.to_string()))
    }
}

fn parse_width(v: &str) -> Option<UnitWidth> {
    match v {
        "full" => Some(UnitWidth::Full),
        "half" => Some(UnitWidth::Half),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_selfconsistent() {
        let c = SmConfig::default();
        c.check().unwrap();
        assert_eq!(c.lsu_capacity(), 5);
        assert_eq!(c.warps_of_subcore(0), vec![0]);
        assert_eq!(c.warps_of_subcore(3), vec![3]);
    }

    #[test]
    fn ini_overrides() {
        let cfg = SmConfig::from_ini(
            "[sim]\nsub_cores = 1\nwarps = 4\n[prefetch]\nkind = none\n[deps]\nmax_consumers = unlimited\n",
        )
        .unwrap();
        assert_eq!(cfg.sub_cores, 1);
        assert_eq!(cfg.prefetch_kind, PrefetchKind::None);
        assert_eq!(cfg.max_consumers, None);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = SmConfig::from_ini("[sim]\nbogus = 1\n").unwrap_err();
        assert!(e.0.contains("unknown config key"), "{e}");
    }

    #[test]
    fn shipped_example_config_equals_defaults() {
        let cfg = SmConfig::from_ini(include_str!("../../../configs/ampere_sm.ini")).unwrap();
        assert_eq!(cfg, SmConfig::default());
    }

    #[test]
    fn dotted_key_set() {
        let mut c = SmConfig::default();
        c.set("regfile.read_ports_per_bank", "2").unwrap();
        assert_eq!(c.read_ports_per_bank, 2);
    }
}
