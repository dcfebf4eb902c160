//! Issue-stage policy pieces: per-warp readiness evaluation, the
//! greedy-then-youngest selection, and the Control/Allocate latch types.

use crate::regfile::PortDemand;
use serde::{Deserialize, Serialize};

/// Why a warp is or is not a candidate to issue this cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadinessReport {
    pub warp: usize,
    pub valid_instruction: bool,
    pub stall_counter_zero: bool,
    pub deps_clear: bool,
    pub unit_latch_free: bool,
    pub constant_cache_ok: bool,
    /// True when a yield from the previous instruction blocks this cycle.
    pub yield_block: bool,
    pub eligible: bool,
}

impl ReadinessReport {
    pub fn ineligible(warp: usize) -> Self {
        ReadinessReport {
            warp,
            valid_instruction: false,
            stall_counter_zero: true,
            deps_clear: true,
            unit_latch_free: true,
            constant_cache_ok: true,
            yield_block: false,
            eligible: false,
        }
    }

    pub fn seal(mut self) -> Self {
        self.eligible = self.valid_instruction
            && self.stall_counter_zero
            && self.deps_clear
            && self.unit_latch_free
            && self.constant_cache_ok
            && !self.yield_block;
        self
    }
}

/// Greedy-then-youngest warp selection: keep the last issued warp while it
/// stays eligible, otherwise the eligible warp with the highest id.
pub fn cggty_select(reports: &[ReadinessReport], last_issued: Option<usize>) -> Option<usize> {
    if let Some(last) = last_issued {
        if reports.iter().any(|r| r.warp == last && r.eligible) {
            return Some(last);
        }
    }
    reports.iter().filter(|r| r.eligible).map(|r| r.warp).max()
}

/// Per-warp stall countdown. The counter is loaded at issue and decreases
/// by one every following cycle, so a warp that issues with stall `s`
/// becomes a candidate again `s + 1` cycles later (next cycle when `s`
/// is zero).
#[derive(Debug, Clone, Copy, Default)]
pub struct StallCounter {
    set_cycle: u64,
    value: u8,
}

impl StallCounter {
    pub fn load(&mut self, cycle: u64, value: u8) {
        self.set_cycle = cycle;
        self.value = value;
    }

    pub fn value_at(&self, cycle: u64) -> u8 {
        if cycle <= self.set_cycle {
            self.value
        } else {
            let elapsed = cycle - self.set_cycle - 1;
            self.value.saturating_sub(elapsed.min(u8::MAX as u64) as u8)
        }
    }
}

/// Occupant of the Control pipeline latch.
#[derive(Debug, Clone, Copy)]
pub struct ControlLatch {
    pub seq: u64,
    pub process_cycle: u64,
    pub effects_done: bool,
}

/// Occupant of the Allocate pipeline latch.
#[derive(Debug, Clone)]
pub struct AllocateLatch {
    pub seq: u64,
    pub process_cycle: u64,
    /// RFC lookups and port demand resolved on the first attempt.
    pub resolved: bool,
    pub demand: PortDemand,
    pub hold_cycles: u64,
}
