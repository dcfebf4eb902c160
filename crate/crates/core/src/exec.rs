//! Execution units and the functional semantics of the mini-SASS opcodes.
//! Lane arithmetic is IEEE-754 single precision for F-ops and wrapping
//! two's complement for I-ops; predicated-off lanes keep their old value.

use crate::config::{SmConfig, UnitWidth};
use crate::isa::{Opcode, UnitClass};
use crate::regfile::{LaneValues, LANES};

/// Input-latch state of the execution units of one sub-core.
#[derive(Debug, Clone, Default)]
pub struct UnitLatches {
    fp32_busy_until: u64,
    int32_busy_until: u64,
    misc_busy_until: u64,
}

fn width_cycles(w: &UnitWidth) -> u64 {
    match w {
        UnitWidth::Full => 1,
        UnitWidth::Half => 2,
    }
}

impl UnitLatches {
    /// Whether an instruction issued now (arriving at `arrival`) finds a
    /// free input latch.
    pub fn free_for(&self, class: UnitClass, arrival: u64, cfg: &SmConfig) -> bool {
        match class {
            UnitClass::Fp32 => {
                arrival >= self.fp32_busy_until
                    || (cfg.fp32_dual_dispatch && arrival >= self.int32_busy_until)
            }
            UnitClass::Int32 => arrival >= self.int32_busy_until,
            UnitClass::FixedMisc | UnitClass::Control => arrival >= self.misc_busy_until,
            UnitClass::Memory => true,
        }
    }

    /// Reserve the latch for an accepted instruction.
    pub fn occupy(&mut self, class: UnitClass, arrival: u64, cfg: &SmConfig) {
        match class {
            UnitClass::Fp32 => {
                let hold = width_cycles(&cfg.fp32_width);
                if arrival >= self.fp32_busy_until {
                    self.fp32_busy_until = arrival + hold;
                } else {
                    debug_assert!(cfg.fp32_dual_dispatch, "dispatch without a free unit");
                    self.int32_busy_until = arrival + width_cycles(&cfg.int32_width);
                }
            }
            UnitClass::Int32 => self.int32_busy_until = arrival + width_cycles(&cfg.int32_width),
            UnitClass::FixedMisc | UnitClass::Control => self.misc_busy_until = arrival + 1,
            UnitClass::Memory => {}
        }
    }
}

fn f(bits: u32) -> f32 {
    f32::from_bits(bits)
}

/// Lane-wise functional result of a fixed-latency arithmetic opcode.
/// Inputs are the captured source values in positional order.
#[allow(clippy::needless_range_loop)]
pub fn execute_lanes(op: Opcode, inputs: &[LaneValues]) -> LaneValues {
    let mut out = [0u32; LANES];
    let src = |i: usize, lane: usize| inputs.get(i).map_or(0, |v| v[lane]);
    for lane in 0..LANES {
        out[lane] = match op {
            Opcode::FFMA => (f(src(0, lane)) * f(src(1, lane)) + f(src(2, lane))).to_bits(),
            Opcode::FADD => (f(src(0, lane)) + f(src(1, lane))).to_bits(),
            Opcode::FMUL => (f(src(0, lane)) * f(src(1, lane))).to_bits(),
            Opcode::IADD3 => src(0, lane)
                .wrapping_add(src(1, lane))
                .wrapping_add(src(2, lane)),
            Opcode::IMAD => src(0, lane)
                .wrapping_mul(src(1, lane))
                .wrapping_add(src(2, lane)),
            Opcode::MOV => src(0, lane),
            _ => 0,
        };
    }
    out
}

/// Merge an execution result into the old destination under a lane mask.
pub fn merge_masked(old: LaneValues, new: LaneValues, mask: u32) -> LaneValues {
    let mut out = old;
    for (lane, slot) in out.iter_mut().enumerate() {
        if mask & (1 << lane) != 0 {
            *slot = new[lane];
        }
    }
    out
}
