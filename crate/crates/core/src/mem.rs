//! The memory pipeline: per-sub-core LSU queue and address-generation
//! unit, the shared memory structure arbiter, and the two constant-cache
//! paths (L0-FL for fixed-latency operands, L0-VL for LDC).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// One memory instruction buffered ahead of the shared structures.
#[derive(Debug, Clone, Copy)]
pub struct MemEntry {
    pub seq: u64,
    pub warp: usize,
    pub pc: u64,
    /// Cycle the instruction arrived in the LSU queue.
    pub arrival: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct AguEntry {
    pub seq: u64,
    pub warp: usize,
    pub pc: u64,
    /// Cycle address generation completes.
    pub ready_at: u64,
}

/// Per-sub-core memory front: a queue of `capacity` entries plus the AGU
/// slot. The issue stage additionally tracks an occupancy view that lags
/// slot releases by the calibrated visibility delay.
#[derive(Debug, Clone, Default)]
pub struct MemPipe {
    pub queue: VecDeque<MemEntry>,
    pub agu: Option<AguEntry>,
    /// Occupancy as seen by the issue stage (includes in-flight issues).
    pub issue_view: usize,
}

impl MemPipe {
    /// Move the queue head into the AGU once its entry delay elapsed.
    pub fn try_enter_agu(&mut self, cycle: u64, entry_delay: u64, agu_latency: u64) -> Option<AguEntry> {
        if self.agu.is_some() {
            return None;
        }
        let head = *self.queue.front()?;
        if cycle < head.arrival + entry_delay {
            return None;
        }
        self.queue.pop_front();
        let e = AguEntry {
            seq: head.seq,
            warp: head.warp,
            pc: head.pc,
            ready_at: cycle + agu_latency,
        };
        self.agu = Some(e);
        Some(e)
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len() + usize::from(self.agu.is_some())
    }
}

/// Round-robin arbiter of the shared memory structures: accepts one
/// request every `period` cycles from any sub-core.
#[derive(Debug, Clone)]
pub struct SharedMemPipe {
    last_accept: Option<u64>,
    rr: usize,
    pub grants_per_subcore: Vec<u64>,
}

impl SharedMemPipe {
    pub fn new(sub_cores: usize) -> Self {
        SharedMemPipe { last_accept: None, rr: 0, grants_per_subcore: vec![0; sub_cores] }
    }

    pub fn can_accept(&self, cycle: u64, period: u64) -> bool {
        self.last_accept.is_none_or(|t| cycle >= t + period)
    }

    /// Sub-core whose AGU occupant wins the grant this cycle, round-robin
    /// among those whose address generation has completed.
    pub fn pick(&self, cycle: u64, period: u64, ready: &[bool]) -> Option<usize> {
        if !self.can_accept(cycle, period) {
            return None;
        }
        let n = ready.len();
        for off in 0..n {
            let sc = (self.rr + off) % n;
            if ready[sc] {
                return Some(sc);
            }
        }
        None
    }

    pub fn commit_grant(&mut self, sc: usize, cycle: u64) {
        self.last_accept = Some(cycle);
        self.rr = (sc + 1) % self.grants_per_subcore.len();
        self.grants_per_subcore[sc] += 1;
    }

    /// Accept the AGU occupant of one sub-core.
    pub fn accept(&mut self, cycle: u64, period: u64, pipes: &mut [MemPipe]) -> Option<AguEntry> {
        let ready: Vec<bool> =
            pipes.iter().map(|p| p.agu.is_some_and(|a| a.ready_at <= cycle)).collect();
        let sc = self.pick(cycle, period, &ready)?;
        let e = pipes[sc].agu.take().unwrap();
        self.commit_grant(sc, cycle);
        Some(e)
    }
}

/// The two constant-cache paths. Lines warmed through one path are not
/// thereby resident in the other.
#[derive(Debug, Clone, Default)]
pub struct ConstCaches {
    fl_resident: BTreeSet<u64>,
    fl_pending: BTreeMap<u64, u64>,
    vl_resident: BTreeSet<u64>,
    pub fl_misses: u64,
}

impl ConstCaches {
    pub fn fl_line(addr: u64, line_bytes: usize) -> u64 {
        addr / line_bytes as u64
    }

    pub fn fl_resident(&self, line: u64) -> bool {
        self.fl_resident.contains(&line)
    }

    pub fn fl_fill_pending(&self, line: u64) -> Option<u64> {
        self.fl_pending.get(&line).copied()
    }

    pub fn fl_start_fill(&mut self, line: u64, done: u64) {
        self.fl_misses += 1;
        self.fl_pending.insert(line, done);
    }

    pub fn fl_apply_fill(&mut self, line: u64) {
        self.fl_pending.remove(&line);
        self.fl_resident.insert(line);
    }

    pub fn vl_touch(&mut self, line: u64) {
        self.vl_resident.insert(line);
    }

    pub fn vl_resident(&self, line: u64) -> bool {
        self.vl_resident.contains(&line)
    }
}

/// Word-granular backing store for one address space.
#[derive(Debug, Clone, Default)]
pub struct MemStore {
    words: BTreeMap<u64, u32>,
}

impl MemStore {
    pub fn read(&self, addr: u64) -> u32 {
        self.words.get(&(addr & !3)).copied().unwrap_or(0)
    }

    pub fn write(&mut self, addr: u64, value: u32) {
        self.words.insert(addr & !3, value);
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(seq: u64, arrival: u64) -> MemEntry {
        MemEntry { seq, warp: 0, pc: seq * 16, arrival }
    }

    #[test]
    fn agu_entry_waits_for_delay_and_slot() {
        let mut p = MemPipe::default();
        p.queue.push_back(entry(0, 4));
        assert!(p.try_enter_agu(6, 3, 4).is_none());
        let e = p.try_enter_agu(7, 3, 4).unwrap();
        assert_eq!(e.ready_at, 11);
        p.queue.push_back(entry(1, 5));
        assert!(p.try_enter_agu(8, 3, 4).is_none(), "AGU busy");
    }

    #[test]
    fn shared_pipe_paces_and_round_robins() {
        let mut pipes = vec![MemPipe::default(), MemPipe::default()];
        pipes[0].agu = Some(AguEntry { seq: 0, warp: 0, pc: 0, ready_at: 11 });
        pipes[1].agu = Some(AguEntry { seq: 1, warp: 1, pc: 0, ready_at: 11 });
        let mut sp = SharedMemPipe::new(2);
        assert_eq!(sp.accept(11, 2, &mut pipes).unwrap().seq, 0);
        assert!(sp.accept(12, 2, &mut pipes).is_none(), "pacing");
        assert_eq!(sp.accept(13, 2, &mut pipes).unwrap().seq, 1);
    }

    #[test]
    fn const_paths_are_disjoint() {
        let mut c = ConstCaches::default();
        c.vl_touch(3);
        assert!(c.vl_resident(3));
        assert!(!c.fl_resident(3));
        c.fl_start_fill(3, 100);
        assert_eq!(c.fl_fill_pending(3), Some(100));
        c.fl_apply_fill(3);
        assert!(c.fl_resident(3));
    }

    #[test]
    fn memstore_word_aligned() {
        let mut m = MemStore::default();
        m.write(0x103, 7);
        assert_eq!(m.read(0x100), 7);
        assert_eq!(m.read(0x104), 0);
    }
}
