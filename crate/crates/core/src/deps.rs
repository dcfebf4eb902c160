//! Dependence management: the compiler-driven counter mechanism, the
//! classic dual-scoreboard alternative, and the hardware-area comparison
//! between them.

use crate::isa::validate::ArchReg;
use crate::isa::{ControlBits, DepbarArgs};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const COUNTER_MAX: u8 = 63;
pub const NUM_COUNTERS: usize = 6;

/// Scoreboard entry count per warp: 255 regular + 63 uniform + 7 predicate
/// + 7 uniform-predicate writable registers.
pub const SCOREBOARD_ENTRIES: u64 = 255 + 63 + 7 + 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepsFault {
    CounterOverflow { warp: usize, counter: u8, cycle: u64 },
    ConsumerOverflow { warp: usize, reg: ArchReg, cycle: u64 },
}

impl fmt::Display for DepsFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepsFault::CounterOverflow { warp, counter, cycle } => write!(
                f,
                "dependence counter SB{counter} of warp {warp} overflowed past {COUNTER_MAX} at cycle {cycle}"
            ),
            DepsFault::ConsumerOverflow { warp, reg, cycle } => write!(
                f,
                "consumer count of {reg:?} in warp {warp} overflowed at cycle {cycle}"
            ),
        }
    }
}

/// The six per-warp dependence counters SB0-SB5.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependenceCounters {
    values: [u8; NUM_COUNTERS],
}

impl DependenceCounters {
    pub fn get(&self, idx: u8) -> u8 {
        self.values[idx as usize]
    }

    /// Increment past 63 is a hard fault: the hardware gives no overflow
    /// semantics and silent saturation would hide program bugs.
    pub fn increment(&mut self, idx: u8, warp: usize, cycle: u64) -> Result<(), DepsFault> {
        let v = &mut self.values[idx as usize];
        if *v >= COUNTER_MAX {
            return Err(DepsFault::CounterOverflow { warp, counter: idx, cycle });
        }
        *v += 1;
        Ok(())
    }

    pub fn decrement(&mut self, idx: u8) {
        let v = &mut self.values[idx as usize];
        debug_assert!(*v > 0, "counter decrement below zero");
        *v = v.saturating_sub(1);
    }

    pub fn all_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0)
    }

    /// Readiness under the control-bits mechanism: every counter selected
    /// by the wait mask must be zero, and a DEPBAR form must satisfy its
    /// threshold plus any listed extra counters.
    pub fn ready(&self, control: &ControlBits, depbar: Option<&DepbarArgs>) -> bool {
        for c in control.wait_counters() {
            if self.get(c) != 0 {
                return false;
            }
        }
        if let Some(d) = depbar {
            if self.get(d.counter) > d.threshold {
                return false;
            }
            for e in &d.extra {
                if self.get(*e) != 0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Dual scoreboard: pending-write bits for RAW/WAW plus per-register
/// consumer counts for WAR.
#[derive(Debug, Clone, Default)]
pub struct Scoreboard {
    pending_write: BTreeMap<ArchReg, u32>,
    consumers: BTreeMap<ArchReg, u32>,
}

impl Scoreboard {
    pub fn ready(&self, reads: &[ArchReg], writes: &[ArchReg]) -> bool {
        for r in reads {
            if self.pending_write.get(r).copied().unwrap_or(0) > 0 {
                return false;
            }
        }
        for w in writes {
            if self.pending_write.get(w).copied().unwrap_or(0) > 0 {
                return false;
            }
            if self.consumers.get(w).copied().unwrap_or(0) > 0 {
                return false;
            }
        }
        true
    }

    pub fn on_issue(
        &mut self,
        reads: &[ArchReg],
        writes: &[ArchReg],
        max_consumers: Option<u32>,
        warp: usize,
        cycle: u64,
    ) -> Result<(), DepsFault> {
        for w in writes {
            *self.pending_write.entry(*w).or_default() += 1;
        }
        for r in reads {
            let c = self.consumers.entry(*r).or_default();
            if let Some(max) = max_consumers {
                if *c >= max {
                    return Err(DepsFault::ConsumerOverflow { warp, reg: *r, cycle });
                }
            }
            *c += 1;
        }
        Ok(())
    }

    pub fn clear_write(&mut self, reg: ArchReg) {
        if let Some(v) = self.pending_write.get_mut(&reg) {
            *v = v.saturating_sub(1);
        }
    }

    pub fn release_consumer(&mut self, reg: ArchReg) {
        if let Some(v) = self.consumers.get_mut(&reg) {
            *v = v.saturating_sub(1);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pending_write.values().all(|v| *v == 0) && self.consumers.values().all(|v| *v == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Read,
    Write,
}

/// One architectural register access observed by the timing model.
#[derive(Debug, Clone, Copy)]
pub struct RegAccess {
    pub seq: u64,
    pub warp: usize,
    pub pc: u64,
    pub reg: ArchReg,
    pub kind: AccessKind,
    pub cycle: u64,
}

/// Runtime hazard monitor for control-bits mode: flags every register
/// access whose timing exposes a RAW, WAR or WAW race that the control
/// bits failed to cover. The simulation itself continues with the stale
/// values those races produce.
pub fn hazard_monitor(accesses: &[RegAccess]) -> Vec<crate::isa::Diagnostic> {
    use crate::isa::Diagnostic;
    // Per (warp, register): last write as (cycle, pc) plus the reads since.
    type RegState = (Option<(u64, u64)>, Vec<(u64, u64)>);
    let mut diags = Vec::new();
    let mut sorted: Vec<&RegAccess> = accesses.iter().collect();
    sorted.sort_by_key(|a| a.seq);
    let mut per_reg: BTreeMap<(usize, ArchReg), RegState> = BTreeMap::new();
    for a in sorted {
        let state = per_reg.entry((a.warp, a.reg)).or_default();
        match a.kind {
            AccessKind::Read => {
                if let Some((wcycle, wpc)) = state.0 {
                    if a.cycle <= wcycle {
                        diags.push(Diagnostic::error(
                            a.pc,
                            "raw_violation",
                            format!(
                                "warp {} reads {:?} at cycle {} before the write from pc 0x{:x} lands at cycle {}",
                                a.warp, a.reg, a.cycle, wpc, wcycle
                            ),
                        ));
                    }
                }
                state.1.push((a.cycle, a.pc));
            }
            AccessKind::Write => {
                for (rcycle, rpc) in &state.1 {
                    if a.cycle < *rcycle {
                        diags.push(Diagnostic::error(
                            a.pc,
                            "war_violation",
                            format!(
                                "warp {} overwrites {:?} at cycle {} before the read at pc 0x{:x} (cycle {})",
                                a.warp, a.reg, a.cycle, rpc, rcycle
                            ),
                        ));
                    }
                }
                if let Some((wcycle, wpc)) = state.0 {
                    if a.cycle < wcycle {
                        diags.push(Diagnostic::error(
                            a.pc,
                            "waw_violation",
                            format!(
                                "warp {} writes {:?} at cycle {} out of order with pc 0x{:x} (cycle {})",
                                a.warp, a.reg, a.cycle, wpc, wcycle
                            ),
                        ));
                    }
                }
                state.0 = Some((a.cycle, a.pc));
                state.1.clear();
            }
        }
    }
    diags.sort_by(|a, b| (a.pc, &a.kind).cmp(&(b.pc, &b.kind)));
    diags
}

/// Hardware mechanism compared by the area model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    ControlBits,
    /// Scoreboard with a bounded consumer count per entry (`None` means
    /// unbounded, whose area is not defined).
    Scoreboard { max_consumers: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub mechanism: Mechanism,
    pub warps_per_sm: u64,
    pub regfile_bytes: u64,
    pub bits_per_warp: u64,
    pub bits_per_sm: u64,
    /// Mechanism bits relative to register-file bits, in percent rounded
    /// to two decimals; absent for unbounded scoreboards.
    pub overhead_pct: Option<f64>,
}

/// Exact area arithmetic for both mechanisms.
///
/// Control bits: six 6-bit dependence counters, a 4-bit stall counter and
/// a yield bit = 41 bits per warp. Scoreboard: one pending-write bit plus
/// a log2(max+1)-bit consumer count for each of the 332 entries.
pub fn area_report(mechanism: Mechanism, warps_per_sm: u64, regfile_bytes: u64) -> AreaReport {
    let bits_per_warp = match mechanism {
        Mechanism::ControlBits => 6 * 6 + 4 + 1,
        Mechanism::Scoreboard { max_consumers: Some(max) } => {
            let width = 64 - u64::from(max + 1).leading_zeros() as u64 - 1;
            SCOREBOARD_ENTRIES + SCOREBOARD_ENTRIES * width
        }
        Mechanism::Scoreboard { max_consumers: None } => 0,
    };
    let bits_per_sm = bits_per_warp * warps_per_sm;
    let overhead_pct = match mechanism {
        Mechanism::Scoreboard { max_consumers: None } => None,
        _ => {
            let rf_bits = regfile_bytes as f64 * 8.0;
            Some((bits_per_sm as f64 / rf_bits * 100.0 * 100.0).round() / 100.0)
        }
    };
    AreaReport { mechanism, warps_per_sm, regfile_bytes, bits_per_warp, bits_per_sm, overhead_pct }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::parse_program;

    #[test]
    fn counters_wait_mask_readiness() {
        let mut c = DependenceCounters::default();
        c.increment(3, 0, 0).unwrap();
        let p = parse_program("[B0--3--:R-:W-:Y0:S00] NOP ;").unwrap();
        let ctl = &p.instructions[0].control;
        assert!(!c.ready(ctl, None));
        c.decrement(3);
        assert!(c.ready(ctl, None));
    }

    #[test]
    fn empty_mask_is_ready() {
        let mut c = DependenceCounters::default();
        c.increment(0, 0, 0).unwrap();
        assert!(c.ready(&ControlBits::default(), None));
    }

    #[test]
    fn depbar_threshold_form() {
        let mut c = DependenceCounters::default();
        for _ in 0..3 {
            c.increment(1, 0, 0).unwrap();
        }
        let d = DepbarArgs { counter: 1, threshold: 3, extra: vec![] };
        assert!(c.ready(&ControlBits::default(), Some(&d)));
        c.increment(1, 0, 0).unwrap();
        assert!(!c.ready(&ControlBits::default(), Some(&d)));
    }

    #[test]
    fn depbar_extra_counters_must_be_zero() {
        let mut c = DependenceCounters::default();
        c.increment(4, 0, 0).unwrap();
        let d = DepbarArgs { counter: 1, threshold: 3, extra: vec![4, 3, 2] };
        assert!(!c.ready(&ControlBits::default(), Some(&d)));
        c.decrement(4);
        assert!(c.ready(&ControlBits::default(), Some(&d)));
    }

    #[test]
    fn overflow_is_a_fault() {
        let mut c = DependenceCounters::default();
        for _ in 0..63 {
            c.increment(2, 1, 10).unwrap();
        }
        let e = c.increment(2, 1, 10).unwrap_err();
        assert!(matches!(e, DepsFault::CounterOverflow { counter: 2, warp: 1, .. }));
    }

    #[test]
    fn scoreboard_raw_waw_war() {
        let mut sb = Scoreboard::default();
        let r6 = ArchReg::Regular(6);
        let r2 = ArchReg::Regular(2);
        sb.on_issue(&[r2], &[r6], Some(63), 0, 0).unwrap();
        // RAW: reading r6 blocked until write-back.
        assert!(!sb.ready(&[r6], &[]));
        // WAW: overwriting r6 blocked too.
        assert!(!sb.ready(&[], &[r6]));
        // WAR: overwriting r2 blocked until the source read releases it.
        assert!(!sb.ready(&[], &[r2]));
        sb.clear_write(r6);
        assert!(sb.ready(&[r6], &[]));
        sb.release_consumer(r2);
        assert!(sb.ready(&[], &[r2]));
        assert!(sb.is_empty());
    }

    #[test]
    fn scoreboard_consumer_overflow_bounded() {
        let mut sb = Scoreboard::default();
        let r = ArchReg::Regular(9);
        for _ in 0..63 {
            sb.on_issue(&[r], &[], Some(63), 0, 0).unwrap();
        }
        let e = sb.on_issue(&[r], &[], Some(63), 0, 5).unwrap_err();
        assert!(matches!(e, DepsFault::ConsumerOverflow { .. }));
        let mut unbounded = Scoreboard::default();
        for _ in 0..100 {
            unbounded.on_issue(&[r], &[], None, 0, 0).unwrap();
        }
    }

    #[test]
    fn area_control_bits_48_warps() {
        let r = area_report(Mechanism::ControlBits, 48, 256 * 1024);
        assert_eq!(r.bits_per_warp, 41);
        assert_eq!(r.bits_per_sm, 1968);
        assert_eq!(r.overhead_pct, Some(0.09));
    }

    #[test]
    fn area_scoreboard_63_consumers() {
        let r = area_report(Mechanism::Scoreboard { max_consumers: Some(63) }, 48, 256 * 1024);
        assert_eq!(r.bits_per_warp, 2324);
        assert_eq!(r.bits_per_sm, 111_552);
        assert_eq!(r.overhead_pct, Some(5.32));
    }

    #[test]
    fn area_64_warp_sm() {
        let sb = area_report(Mechanism::Scoreboard { max_consumers: Some(63) }, 64, 256 * 1024);
        assert_eq!(sb.overhead_pct, Some(7.09));
        let cb = area_report(Mechanism::ControlBits, 64, 256 * 1024);
        assert_eq!(cb.overhead_pct, Some(0.13));
    }

    #[test]
    fn area_unbounded_has_no_ratio() {
        let r = area_report(Mechanism::Scoreboard { max_consumers: None }, 48, 256 * 1024);
        assert_eq!(r.overhead_pct, None);
    }

    #[test]
    fn monitor_flags_raw_and_stays_quiet_when_ordered() {
        let r5 = ArchReg::Regular(5);
        let mk = |seq, kind, cycle| RegAccess { seq, warp: 0, pc: seq * 16, reg: r5, kind, cycle };
        // Write lands at cycle 6, read happens at cycle 4: stale.
        let bad = vec![mk(0, AccessKind::Write, 6), mk(1, AccessKind::Read, 4)];
        let d = hazard_monitor(&bad);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, "raw_violation");
        let good = vec![mk(0, AccessKind::Write, 6), mk(1, AccessKind::Read, 9)];
        assert!(hazard_monitor(&good).is_empty());
    }

    #[test]
    fn monitor_flags_war_and_waw() {
        let r2 = ArchReg::Regular(2);
        let mk = |seq, kind, cycle| RegAccess { seq, warp: 0, pc: seq * 16, reg: r2, kind, cycle };
        let war = vec![mk(0, AccessKind::Read, 10), mk(1, AccessKind::Write, 8)];
        assert_eq!(hazard_monitor(&war)[0].kind, "war_violation");
        // Same-cycle write is safe: reads happen before writes in a cycle.
        let same = vec![mk(0, AccessKind::Read, 10), mk(1, AccessKind::Write, 10)];
        assert!(hazard_monitor(&same).is_empty());
        let waw = vec![mk(0, AccessKind::Write, 10), mk(1, AccessKind::Write, 8)];
        assert_eq!(hazard_monitor(&waw)[0].kind, "waw_violation");
    }
}
