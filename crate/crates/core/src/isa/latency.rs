use super::types::{AddrClass, Instruction, MemSpace, Opcode};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Release latencies of a variable-latency (memory) instruction, counted
/// from its issue cycle.
///
/// `war_release`: earliest cycle offset at which an instruction overwriting
/// one of its source registers may issue. `raw_waw_release`: earliest cycle
/// offset at which a consumer of its destination (or an overwriter of it)
/// may issue; absent for stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemLatency {
    pub war_release: u32,
    pub raw_waw_release: Option<u32>,
}

/// Memory-instruction kind for latency lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemKind {
    Load,
    Store,
    Ldgsts,
}

fn row_order(a: &(MemKind, MemSpace, u8, AddrClass, MemLatency)) -> (u8, u8, u8, u8) {
    let kind = match a.0 {
        MemKind::Load => 0,
        MemKind::Store => 1,
        MemKind::Ldgsts => 2,
    };
    let space = match a.1 {
        MemSpace::Global => 0,
        MemSpace::Shared => 1,
        MemSpace::Constant => 2,
    };
    let addr = match a.3 {
        AddrClass::Uniform => 0,
        AddrClass::Regular => 1,
        AddrClass::Immediate => 2,
    };
    (kind, space, a.2, addr)
}

/// Timing class of an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatencyClass {
    Fixed(u32),
    Memory(MemLatency),
}

type MemKey = (MemKind, MemSpace, u8, AddrClass);

/// Latency table: result latencies for fixed-latency opcodes and release
/// latencies for every memory row the simulator accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyTable {
    fixed: BTreeMap<String, u32>,
    memory: Vec<(MemKind, MemSpace, u8, AddrClass, MemLatency)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyError(pub String);

impl fmt::Display for LatencyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "latency table: {}", self.0)
    }
}

impl std::error::Error for LatencyError {}

impl Default for LatencyTable {
    fn default() -> Self {
        LatencyTable::builtin()
    }
}

impl LatencyTable {
    /// The default table, calibrated to measured Ampere hit latencies.
    pub fn builtin() -> Self {
        use AddrClass::*;
        use MemKind::*;
        use MemSpace::*;
        let mut fixed = BTreeMap::new();
        for op in ["FFMA", "FADD", "FMUL", "IADD3", "IMAD", "MOV"] {
            fixed.insert(op.to_string(), 4);
        }
        for op in ["NOP", "CLOCK", "BRA", "EXIT", "BAR", "DEPBAR"] {
            fixed.insert(op.to_string(), 1);
        }
        let m = |war, raw: Option<u32>| MemLatency { war_release: war, raw_waw_release: raw };
        let memory = vec![
            (Load, Global, 32, Uniform, m(9, Some(29))),
            (Load, Global, 64, Uniform, m(9, Some(31))),
            (Load, Global, 128, Uniform, m(9, Some(35))),
            (Load, Global, 32, Regular, m(11, Some(32))),
            (Load, Global, 64, Regular, m(11, Some(34))),
            (Load, Global, 128, Regular, m(11, Some(38))),
            (Store, Global, 32, Uniform, m(10, None)),
            (Store, Global, 64, Uniform, m(12, None)),
            (Store, Global, 128, Uniform, m(16, None)),
            (Store, Global, 32, Regular, m(14, None)),
            (Store, Global, 64, Regular, m(16, None)),
            (Store, Global, 128, Regular, m(20, None)),
            (Load, Shared, 32, Uniform, m(9, Some(23))),
            (Load, Shared, 64, Uniform, m(9, Some(23))),
            (Load, Shared, 128, Uniform, m(9, Some(25))),
            (Load, Shared, 32, Regular, m(9, Some(24))),
            (Load, Shared, 64, Regular, m(9, Some(24))),
            (Load, Shared, 128, Regular, m(9, Some(26))),
            (Store, Shared, 32, Uniform, m(10, None)),
            (Store, Shared, 64, Uniform, m(12, None)),
            (Store, Shared, 128, Uniform, m(16, None)),
            (Store, Shared, 32, Regular, m(12, None)),
            (Store, Shared, 64, Regular, m(14, None)),
            (Store, Shared, 128, Regular, m(18, None)),
            (Load, Constant, 32, Immediate, m(10, Some(26))),
            (Load, Constant, 32, Regular, m(29, Some(29))),
            (Load, Constant, 64, Regular, m(29, Some(29))),
            (Ldgsts, Global, 32, Regular, m(13, Some(39))),
            (Ldgsts, Global, 64, Regular, m(13, Some(39))),
            (Ldgsts, Global, 128, Regular, m(13, Some(39))),
        ];
        let mut t = LatencyTable { fixed, memory };
        t.memory.sort_by_key(row_order);
        t
    }

    fn mem_key(inst: &Instruction) -> MemKey {
        let kind = match inst.opcode {
            Opcode::LDGSTS => MemKind::Ldgsts,
            o if o.is_store() => MemKind::Store,
            _ => MemKind::Load,
        };
        let space = inst.opcode.mem_space().expect("memory opcode");
        (kind, space, inst.mem_width(), inst.addr_class())
    }

    fn mem_get(&self, key: &MemKey) -> Option<MemLatency> {
        self.memory
            .iter()
            .find(|(k, s, w, a, _)| (*k, *s, *w, *a) == *key)
            .map(|(_, _, _, _, l)| *l)
    }

    /// Latency class of an instruction; errs when the table lacks a row.
    pub fn lookup(&self, inst: &Instruction) -> Result<LatencyClass, LatencyError> {
        if inst.opcode.is_memory() {
            let key = Self::mem_key(inst);
            self.mem_get(&key).map(LatencyClass::Memory).ok_or_else(|| {
                LatencyError(format!(
                    "no entry for {:?} {:?} {} bit {:?}",
                    key.0, key.1, key.2, key.3
                ))
            })
        } else {
            self.fixed
                .get(inst.opcode.mnemonic())
                .map(|l| LatencyClass::Fixed(*l))
                .ok_or_else(|| LatencyError(format!("no fixed entry for {}", inst.opcode.mnemonic())))
        }
    }

    pub fn fixed_latency(&self, op: Opcode) -> u32 {
        *self.fixed.get(op.mnemonic()).unwrap_or(&4)
    }

    pub fn rows(&self) -> impl Iterator<Item = (MemKind, MemSpace, u8, AddrClass, MemLatency)> + '_ {
        self.memory.iter().copied()
    }

    /// Structural checks run once at load time so lookups never fail later:
    /// every load row must satisfy `war <= raw` and loads of one space and
    /// addressing class must share the WAR value across widths.
    pub fn validate(&self) -> Result<(), LatencyError> {
        for (k, s, w, a, l) in &self.memory {
            if let Some(raw) = l.raw_waw_release {
                if l.war_release > raw {
                    return Err(LatencyError(format!(
                        "row {k:?} {s:?} {w} {a:?}: WAR {} exceeds RAW {}",
                        l.war_release, raw
                    )));
                }
            } else if *k == MemKind::Load || *k == MemKind::Ldgsts {
                return Err(LatencyError(format!("load row {k:?} {s:?} {w} {a:?} lacks RAW value")));
            }
            if *k == MemKind::Load {
                for (k2, s2, _, a2, l2) in &self.memory {
                    if k2 == k && s2 == s && a2 == a && l2.war_release != l.war_release {
                        return Err(LatencyError(format!(
                            "load WAR must not depend on width ({s:?} {a:?})"
                        )));
                    }
                }
            }
        }
        for op in ["FFMA", "FADD", "FMUL", "IADD3", "IMAD", "MOV", "NOP", "CLOCK"] {
            if !self.fixed.contains_key(op) {
                return Err(LatencyError(format!("missing fixed latency for {op}")));
            }
        }
        Ok(())
    }

    /// Parse the INI-style table format (`[fixed]` and `[memory]` sections).
    pub fn from_ini(text: &str) -> Result<Self, LatencyError> {
        let mut table = LatencyTable { fixed: BTreeMap::new(), memory: Vec::new() };
        let mut raw_mem: BTreeMap<String, (Option<u32>, Option<u32>)> = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LatencyError(format!("line {}: expected key = value", no + 1)))?;
            let key = key.trim();
            let value: u32 = value
                .trim()
                .parse()
                .map_err(|_| LatencyError(format!("line {}: invalid value", no + 1)))?;
            match section.as_str() {
                "fixed" => {
                    table.fixed.insert(key.to_uppercase(), value);
                }
                "memory" => {
                    let (row, which) = key
                        .rsplit_once('.')
                        .ok_or_else(|| LatencyError(format!("line {}: bad memory key", no + 1)))?;
                    let entry = raw_mem.entry(row.to_string()).or_default();
                    match which {
                        "war" => entry.0 = Some(value),
                        "raw" => entry.1 = Some(value),
                        _ => return Err(LatencyError(format!("line {}: key must end .war or .raw", no + 1))),
                    }
                }
                other => return Err(LatencyError(format!("unknown section [{other}]"))),
            }
        }
        for (row, (war, raw)) in raw_mem {
            let parts: Vec<&str> = row.split('.').collect();
            if parts.len() != 4 {
                return Err(LatencyError(format!("memory row `{row}` must be kind.space.width.addr")));
            }
            let kind = match parts[0] {
                "load" => MemKind::Load,
                "store" => MemKind::Store,
                "ldgsts" => MemKind::Ldgsts,
                o => return Err(LatencyError(format!("unknown kind `{o}`"))),
            };
            let space = match parts[1] {
                "global" => MemSpace::Global,
                "shared" => MemSpace::Shared,
                "constant" => MemSpace::Constant,
                o => return Err(LatencyError(format!("unknown space `{o}`"))),
            };
            let width: u8 = parts[2]
                .parse()
                .map_err(|_| LatencyError(format!("bad width in `{row}`")))?;
            let addr = match parts[3] {
                "regular" => AddrClass::Regular,
                "uniform" => AddrClass::Uniform,
                "immediate" => AddrClass::Immediate,
                o => return Err(LatencyError(format!("unknown addr class `{o}`"))),
            };
            let war = war.ok_or_else(|| LatencyError(format!("row `{row}` missing .war")))?;
            table.memory.push((kind, space, width, addr, MemLatency { war_release: war, raw_waw_release: raw }));
        }
        table.memory.sort_by_key(row_order);
        table.validate()?;
        Ok(table)
    }

    /// Emit the table in the INI text format accepted by `from_ini`.
    pub fn to_ini(&self) -> String {
        let mut out = String::from("[fixed]\n");
        for (k, v) in &self.fixed {
            out.push_str(&format!("{} = {}\n", k.to_lowercase(), v));
        }
        out.push_str("\n[memory]\n");
        for (k, s, w, a, l) in &self.memory {
            let kind = match k {
                MemKind::Load => "load",
                MemKind::Store => "store",
                MemKind::Ldgsts => "ldgsts",
            };
            let space = match s {
                MemSpace::Global => "global",
                MemSpace::Shared => "shared",
                MemSpace::Constant => "constant",
            };
            let addr = match a {
                AddrClass::Regular => "regular",
                AddrClass::Uniform => "uniform",
                AddrClass::Immediate => "immediate",
            };
            out.push_str(&format!("{kind}.{space}.{w}.{addr}.war = {}\n", l.war_release));
            if let Some(raw) = l.raw_waw_release {
                out.push_str(&format!("{kind}.{space}.{w}.{addr}.raw = {raw}\n"));
            }
        }
        out
    }
}
