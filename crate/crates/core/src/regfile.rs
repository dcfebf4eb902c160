//! Sub-core register files: two regular banks with single 1024-bit read
//! and write ports, the compiler-managed register file cache, the result
//! queue that absorbs write-port conflicts, and the architectural value
//! store backing the timing model.

use crate::isa::{bank_of, BankMap, Operand, REG_RZ, UREG_URZ};
use std::collections::BTreeMap;

pub const LANES: usize = 32;

/// One warp's 32 lane values for a register.
pub type LaneValues = [u32; LANES];

/// Read/write port reservation calendar of one bank.
#[derive(Debug, Clone, Default)]
pub struct PortCalendar {
    taken: BTreeMap<u64, usize>,
}

impl PortCalendar {
    pub fn count_at(&self, cycle: u64) -> usize {
        self.taken.get(&cycle).copied().unwrap_or(0)
    }

    pub fn reserve(&mut self, cycle: u64) {
        *self.taken.entry(cycle).or_default() += 1;
    }

    pub fn release(&mut self, cycle: u64) {
        if let Some(v) = self.taken.get_mut(&cycle) {
            *v -= 1;
            if *v == 0 {
                self.taken.remove(&cycle);
            }
        }
    }

    /// Drop bookkeeping for cycles long past; reservations never look back.
    pub fn trim_before(&mut self, cycle: u64) {
        self.taken = self.taken.split_off(&cycle);
    }
}

/// Outcome of planning the read-port slots of one instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadPlan {
    /// (bank, cycle) slot per port-consuming operand register.
    Feasible(Vec<(u8, u64)>),
    Infeasible,
}

/// Read-port demand of one instruction: one entry per regular register
/// that must come from a bank port (reuse hits are excluded).
#[derive(Debug, Clone, Default)]
pub struct PortDemand {
    pub regs: Vec<u8>,
}

/// Plan reads for the demand within `[start, start+window)`, placing each
/// register at the latest free cycle of its bank, in operand order. The
/// latest-free policy is what reproduces the measured conflict bubbles of
/// back-to-back same-bank pairs.
pub fn plan_reads(
    demand: &PortDemand,
    banks: &[PortCalendar; 2],
    ports_per_bank: usize,
    bank_map: BankMap,
    start: u64,
    window: u64,
) -> ReadPlan {
    let mut extra: BTreeMap<(u8, u64), usize> = BTreeMap::new();
    let mut slots = Vec::with_capacity(demand.regs.len());
    'regs: for &reg in &demand.regs {
        let bank = bank_of(reg, bank_map);
        for off in (0..window).rev() {
            let cycle = start + off;
            let used =
                banks[bank as usize].count_at(cycle) + extra.get(&(bank, cycle)).copied().unwrap_or(0);
            if used < ports_per_bank {
                *extra.entry((bank, cycle)).or_default() += 1;
                slots.push((bank, cycle));
                continue 'regs;
            }
        }
        return ReadPlan::Infeasible;
    }
    ReadPlan::Feasible(slots)
}

/// One sub-entry of the register file cache, keyed by (warp, register).
#[derive(Debug, Clone, Default)]
struct RfcSlot {
    valid: bool,
    warp: usize,
    reg: u8,
    value: Option<LaneValues>,
}

/// The software-managed register file cache: one entry per bank, three
/// positional sub-entries per entry (source operand positions 1-3).
#[derive(Debug, Clone)]
#[derive(Default)]
pub struct RegFileCache {
    slots: [[RfcSlot; 3]; 2],
    pub hits: u64,
    pub misses: u64,
}


/// RFC lookup outcome for one operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfcOutcome {
    Hit,
    Miss,
    /// Operand does not participate (position > 3, or not a regular
    /// single-bank register source).
    Bypass,
}

impl RegFileCache {
    /// Resolve one source operand at `position` (0-based). Applies the
    /// access side effects: any read request to the same bank and position
    /// invalidates the sub-entry unless the reuse bit retains it, and a
    /// reuse-tagged miss allocates the register in that slot.
    pub fn access(
        &mut self,
        warp: usize,
        position: usize,
        reg: u8,
        reuse: bool,
        bank_map: BankMap,
    ) -> RfcOutcome {
        if position >= 3 {
            return RfcOutcome::Bypass;
        }
        let bank = bank_of(reg, bank_map) as usize;
        let slot = &mut self.slots[bank][position];
        let hit = slot.valid && slot.warp == warp && slot.reg == reg;
        if hit {
            self.hits += 1;
            if !reuse {
                slot.valid = false;
            }
            RfcOutcome::Hit
        } else {
            self.misses += 1;
            if reuse {
                slot.valid = true;
                slot.warp = warp;
                slot.reg = reg;
                slot.value = None;
            } else {
                slot.valid = false;
            }
            RfcOutcome::Miss
        }
    }

    /// Number of valid sub-entries, bounded by the capacity of six.
    pub fn valid_entries(&self) -> usize {
        self.slots.iter().flatten().filter(|s| s.valid).count()
    }

    pub fn store_value(&mut self, warp: usize, position: usize, reg: u8, bank_map: BankMap, v: LaneValues) {
        if position >= 3 {
            return;
        }
        let bank = bank_of(reg, bank_map) as usize;
        let slot = &mut self.slots[bank][position];
        if slot.valid && slot.warp == warp && slot.reg == reg {
            slot.value = Some(v);
        }
    }

    pub fn cached_value(&self, warp: usize, position: usize, reg: u8, bank_map: BankMap) -> Option<LaneValues> {
        if position >= 3 {
            return None;
        }
        let bank = bank_of(reg, bank_map) as usize;
        let slot = &self.slots[bank][position];
        if slot.warp == warp && slot.reg == reg {
            slot.value
        } else {
            None
        }
    }
}

/// Write-back machinery of one bank: fixed-latency results drain through
/// a queue at one write per cycle and loads yield the port to them.
#[derive(Debug, Clone, Default)]
pub struct ResultQueue {
    fixed: BTreeMap<u64, u64>,
    load: BTreeMap<u64, u64>,
    pub load_write_delays: u64,
    pub write_port_writes: u64,
}

impl ResultQueue {
    /// Record a write request and return the cycle the port actually
    /// carries it. Consumers never observe this cycle (results bypass),
    /// it exists for port-discipline accounting.
    pub fn schedule_write(&mut self, cycle: u64, is_load: bool) -> u64 {
        let mut c = cycle;
        if is_load {
            loop {
                let fixed_here = self.fixed.get(&c).copied().unwrap_or(0);
                let load_here = self.load.get(&c).copied().unwrap_or(0);
                if fixed_here == 0 && load_here == 0 {
                    break;
                }
                c += 1;
            }
            if c != cycle {
                self.load_write_delays += c - cycle;
            }
            *self.load.entry(c).or_default() += 1;
        } else {
            // The result queue drains one fixed-latency value per cycle;
            // a same-cycle load write is the one that moves.
            loop {
                let fixed_here = self.fixed.get(&c).copied().unwrap_or(0);
                if fixed_here == 0 {
                    break;
                }
                c += 1;
            }
            if let Some(n) = self.load.remove(&c) {
                let mut lc = c + 1;
                while self.load.contains_key(&lc) || self.fixed.contains_key(&lc) {
                    lc += 1;
                }
                self.load_write_delays += (lc - c) * n;
                *self.load.entry(lc).or_default() += n;
            }
            *self.fixed.entry(c).or_default() += 1;
        }
        self.write_port_writes += 1;
        c
    }

    pub fn trim_before(&mut self, cycle: u64) {
        self.fixed = self.fixed.split_off(&cycle);
        self.load = self.load.split_off(&cycle);
    }
}

/// Architectural register values of one warp.
#[derive(Debug, Clone)]
#[derive(Default)]
pub struct WarpRegisters {
    pub regular: BTreeMap<u8, LaneValues>,
    pub uniform: BTreeMap<u8, u32>,
    pub predicate: BTreeMap<u8, u32>,
    pub upredicate: BTreeMap<u8, bool>,
}


impl WarpRegisters {
    pub fn read_regular(&self, idx: u8) -> LaneValues {
        if idx == REG_RZ {
            return [0; LANES];
        }
        self.regular.get(&idx).copied().unwrap_or([0; LANES])
    }

    /// Writes to RZ are discarded.
    pub fn write_regular(&mut self, idx: u8, v: LaneValues) {
        if idx == REG_RZ {
            return;
        }
        self.regular.insert(idx, v);
    }

    pub fn read_uniform(&self, idx: u8) -> u32 {
        if idx == UREG_URZ {
            return 0;
        }
        self.uniform.get(&idx).copied().unwrap_or(0)
    }

    pub fn write_uniform(&mut self, idx: u8, v: u32) {
        if idx == UREG_URZ {
            return;
        }
        self.uniform.insert(idx, v);
    }

    pub fn read_predicate(&self, idx: u8) -> u32 {
        if idx == 7 {
            return u32::MAX;
        }
        self.predicate.get(&idx).copied().unwrap_or(0)
    }

    pub fn write_predicate(&mut self, idx: u8, v: u32) {
        if idx == 7 {
            return;
        }
        self.predicate.insert(idx, v);
    }

    pub fn read_upredicate(&self, idx: u8) -> bool {
        if idx == 7 {
            return true;
        }
        self.upredicate.get(&idx).copied().unwrap_or(false)
    }

    /// Uniform registers hold one value replicated across all lanes.
    pub fn broadcast_uniform(&self, idx: u8) -> LaneValues {
        [self.read_uniform(idx); LANES]
    }

    /// Operand value as seen by the lanes, for operands that do not need
    /// bank ports (uniform, predicate, immediate, special).
    pub fn portless_value(&self, op: &Operand, warp: usize) -> Option<LaneValues> {
        match op {
            Operand::UReg { index } => Some(self.broadcast_uniform(*index)),
            Operand::Imm { bits } => Some([*bits; LANES]),
            Operand::Special { index } => Some(match index {
                0 => {
                    let mut v = [0u32; LANES];
                    for (lane, slot) in v.iter_mut().enumerate() {
                        *slot = lane as u32;
                    }
                    v
                }
                1 => [warp as u32; LANES],
                _ => [0; LANES],
            }),
            Operand::Pred { index } => Some([self.read_predicate(*index); LANES]),
            Operand::UPred { index } => Some([self.read_upredicate(*index) as u32; LANES]),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demand(regs: &[u8]) -> PortDemand {
        PortDemand { regs: regs.to_vec() }
    }

    #[test]
    fn plan_three_same_bank_fills_whole_window() {
        let banks: [PortCalendar; 2] = Default::default();
        match plan_reads(&demand(&[10, 12, 14]), &banks, 1, BankMap::Parity, 5, 3) {
            ReadPlan::Feasible(slots) => {
                assert_eq!(slots, vec![(0, 7), (0, 6), (0, 5)]);
            }
            ReadPlan::Infeasible => panic!("should fit"),
        }
    }

    #[test]
    fn plan_reports_infeasible_when_bank_saturated() {
        let mut banks: [PortCalendar; 2] = Default::default();
        banks[0].reserve(5);
        banks[0].reserve(6);
        banks[0].reserve(7);
        assert_eq!(
            plan_reads(&demand(&[2, 4]), &banks, 1, BankMap::Parity, 5, 3),
            ReadPlan::Infeasible
        );
        // A second port per bank makes it fit again.
        assert!(matches!(
            plan_reads(&demand(&[2, 4]), &banks, 2, BankMap::Parity, 5, 3),
            ReadPlan::Feasible(_)
        ));
    }

    #[test]
    fn rfc_listing_example_1() {
        // Allocate R2 at position 0; plain hit invalidates; third misses.
        let mut rfc = RegFileCache::default();
        assert_eq!(rfc.access(0, 0, 2, true, BankMap::Parity), RfcOutcome::Miss);
        assert_eq!(rfc.access(0, 0, 2, false, BankMap::Parity), RfcOutcome::Hit);
        assert_eq!(rfc.access(0, 0, 2, false, BankMap::Parity), RfcOutcome::Miss);
    }

    #[test]
    fn rfc_listing_example_2() {
        // Reuse on the hit retains the entry.
        let mut rfc = RegFileCache::default();
        rfc.access(0, 0, 2, true, BankMap::Parity);
        assert_eq!(rfc.access(0, 0, 2, true, BankMap::Parity), RfcOutcome::Hit);
        assert_eq!(rfc.access(0, 0, 2, false, BankMap::Parity), RfcOutcome::Hit);
    }

    #[test]
    fn rfc_listing_example_3() {
        // R7 (other bank) at position 0 leaves R2's slot alone; R2 at
        // position 1 misses in its own slot.
        let mut rfc = RegFileCache::default();
        rfc.access(0, 0, 2, true, BankMap::Parity);
        assert_eq!(rfc.access(0, 0, 7, false, BankMap::Parity), RfcOutcome::Miss);
        assert_eq!(rfc.access(0, 1, 2, false, BankMap::Parity), RfcOutcome::Miss);
        assert_eq!(rfc.access(0, 0, 2, false, BankMap::Parity), RfcOutcome::Hit);
    }

    #[test]
    fn rfc_listing_example_4() {
        // R4 (same bank, same position) missing still knocks R2 out.
        let mut rfc = RegFileCache::default();
        rfc.access(0, 0, 2, true, BankMap::Parity);
        assert_eq!(rfc.access(0, 0, 4, false, BankMap::Parity), RfcOutcome::Miss);
        assert_eq!(rfc.access(0, 0, 2, false, BankMap::Parity), RfcOutcome::Miss);
    }

    #[test]
    fn rfc_capacity_is_six() {
        let mut rfc = RegFileCache::default();
        for pos in 0..4 {
            rfc.access(0, pos, 2, true, BankMap::Parity);
            rfc.access(0, pos, 3, true, BankMap::Parity);
        }
        assert!(rfc.valid_entries() <= 6);
        assert_eq!(rfc.valid_entries(), 6);
    }

    #[test]
    fn rfc_other_warp_misses() {
        let mut rfc = RegFileCache::default();
        rfc.access(0, 0, 2, true, BankMap::Parity);
        assert_eq!(rfc.access(1, 0, 2, false, BankMap::Parity), RfcOutcome::Miss);
    }

    #[test]
    fn result_queue_two_fixed_same_cycle() {
        let mut rq = ResultQueue::default();
        let a = rq.schedule_write(10, false);
        let b = rq.schedule_write(10, false);
        assert_eq!(a, 10);
        assert_eq!(b, 11);
        assert_eq!(rq.load_write_delays, 0);
    }

    #[test]
    fn result_queue_load_yields_to_fixed() {
        let mut rq = ResultQueue::default();
        let f = rq.schedule_write(10, false);
        let l = rq.schedule_write(10, true);
        assert_eq!(f, 10);
        assert_eq!(l, 11);
        assert_eq!(rq.load_write_delays, 1);
    }

    #[test]
    fn result_queue_fixed_displaces_scheduled_load() {
        let mut rq = ResultQueue::default();
        let l = rq.schedule_write(10, true);
        assert_eq!(l, 10);
        let f = rq.schedule_write(10, false);
        assert_eq!(f, 10);
        assert_eq!(rq.load_write_delays, 1);
    }

    #[test]
    fn rz_reads_zero_and_discards_writes() {
        let mut r = WarpRegisters::default();
        r.write_regular(REG_RZ, [7; LANES]);
        assert_eq!(r.read_regular(REG_RZ), [0; LANES]);
        r.write_regular(5, [9; LANES]);
        assert_eq!(r.read_regular(5), [9; LANES]);
    }

    #[test]
    fn uniform_broadcasts() {
        let mut r = WarpRegisters::default();
        r.write_uniform(4, 0x42);
        assert_eq!(r.broadcast_uniform(4), [0x42; LANES]);
    }
}
