//! Per-sub-core fetch machinery: L0 instruction cache, stream-buffer
//! prefetcher, and the shared L1 arbiter.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Set-associative L0 instruction cache with LRU replacement, tracked at
/// line-address granularity.
#[derive(Debug, Clone)]
pub struct L0ICache {
    sets: usize,
    assoc: usize,
    ways: Vec<Vec<(u64, u64)>>,
    lru_tick: u64,
    pub perfect: bool,
}

impl L0ICache {
    pub fn new(lines: usize, assoc: usize, perfect: bool) -> Self {
        let assoc = assoc.max(1).min(lines.max(1));
        let sets = (lines / assoc).max(1);
        L0ICache { sets, assoc, ways: vec![Vec::new(); sets], lru_tick: 0, perfect }
    }

    pub fn contains(&self, line: u64) -> bool {
        if self.perfect {
            return true;
        }
        let set = (line % self.sets as u64) as usize;
        self.ways[set].iter().any(|(l, _)| *l == line)
    }

    pub fn touch(&mut self, line: u64) {
        if self.perfect {
            return;
        }
        self.lru_tick += 1;
        let tick = self.lru_tick;
        let set = (line % self.sets as u64) as usize;
        if let Some(e) = self.ways[set].iter_mut().find(|(l, _)| *l == line) {
            e.1 = tick;
        }
    }

    pub fn install(&mut self, line: u64) {
        if self.perfect || self.contains(line) {
            return;
        }
        self.lru_tick += 1;
        let tick = self.lru_tick;
        let set = (line % self.sets as u64) as usize;
        if self.ways[set].len() >= self.assoc {
            let victim = self
                .ways[set]
                .iter()
                .enumerate()
                .min_by_key(|(_, (_, t))| *t)
                .map(|(i, _)| i)
                .unwrap();
            self.ways[set].remove(victim);
        }
        self.ways[set].push((line, tick));
    }
}

/// Sequential-line prefetcher restarted on every demand miss: it requests
/// the `depth` lines after the missing one, one request per `interval`
/// cycles.
#[derive(Debug, Clone, Default)]
pub struct StreamBuffer {
    pub active: bool,
    next_line: u64,
    remaining: usize,
    last_issue: Option<u64>,
    pub issued: u64,
}

impl StreamBuffer {
    pub fn restart(&mut self, missed_line: u64, depth: usize, cycle: u64) {
        self.active = depth > 0;
        self.next_line = missed_line + 1;
        self.remaining = depth;
        self.last_issue = Some(cycle);
    }

    /// Line to prefetch this cycle, if the pacing interval elapsed.
    /// `skip` decides which candidate lines are not worth requesting.
    pub fn next_request(
        &mut self,
        cycle: u64,
        interval: u64,
        end_line: u64,
        skip: impl Fn(u64) -> bool,
    ) -> Option<u64> {
        if !self.active || self.remaining == 0 {
            return None;
        }
        if let Some(last) = self.last_issue {
            if cycle < last + interval {
                return None;
            }
        }
        while self.remaining > 0 && self.next_line < end_line {
            let line = self.next_line;
            self.next_line += 1;
            if skip(line) {
                continue;
            }
            self.remaining -= 1;
            self.last_issue = Some(cycle);
            self.issued += 1;
            return Some(line);
        }
        self.active = false;
        None
    }
}

/// Fill request queued at the shared L1 instruction cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillRequest {
    pub line: u64,
    pub demand: bool,
}

/// Arbiter in front of the shared L1 instruction cache: one grant per
/// cycle, round-robin across sub-cores, demand misses before prefetches.
#[derive(Debug, Clone)]
pub struct L1Arbiter {
    demand: Vec<VecDeque<FillRequest>>,
    prefetch: Vec<VecDeque<FillRequest>>,
    rr: usize,
    pub grants: u64,
}

impl L1Arbiter {
    pub fn new(sub_cores: usize) -> Self {
        L1Arbiter {
            demand: vec![VecDeque::new(); sub_cores],
            prefetch: vec![VecDeque::new(); sub_cores],
            rr: 0,
            grants: 0,
        }
    }

    pub fn enqueue(&mut self, subcore: usize, req: FillRequest) {
        if req.demand {
            self.demand[subcore].push_back(req);
        } else {
            self.prefetch[subcore].push_back(req);
        }
    }

    /// Grant at most one request; returns (subcore, request).
    pub fn grant(&mut self) -> Option<(usize, FillRequest)> {
        let n = self.demand.len();
        for class in [true, false] {
            for off in 0..n {
                let sc = (self.rr + off) % n;
                let q = if class { &mut self.demand[sc] } else { &mut self.prefetch[sc] };
                if let Some(req) = q.pop_front() {
                    self.rr = (sc + 1) % n;
                    self.grants += 1;
                    return Some((sc, req));
                }
            }
        }
        None
    }

    pub fn pending(&self) -> usize {
        self.demand.iter().map(|q| q.len()).sum::<usize>()
            + self.prefetch.iter().map(|q| q.len()).sum::<usize>()
    }
}

/// Per-sub-core frontend state shared by fetch and fill handling.
#[derive(Debug, Clone)]
pub struct Frontend {
    pub l0: L0ICache,
    pub stream: StreamBuffer,
    /// Lines with a fill in flight (demand or prefetch).
    pub pending_lines: BTreeSet<u64>,
    /// Fill completion bookkeeping for prefetch accounting.
    pub pending_kind: BTreeMap<u64, bool>,
    pub demand_misses: u64,
    pub prefetch_fills: u64,
}

impl Frontend {
    pub fn new(lines: usize, assoc: usize, perfect: bool) -> Self {
        Frontend {
            l0: L0ICache::new(lines, assoc, perfect),
            stream: StreamBuffer::default(),
            pending_lines: BTreeSet::new(),
            pending_kind: BTreeMap::new(),
            demand_misses: 0,
            prefetch_fills: 0,
        }
    }

    pub fn line_ready(&self, line: u64) -> bool {
        self.l0.contains(line)
    }

    pub fn line_pending(&self, line: u64) -> bool {
        self.pending_lines.contains(&line)
    }

    pub fn fill(&mut self, line: u64) {
        if let Some(prefetch) = self.pending_kind.remove(&line) {
            if prefetch {
                self.prefetch_fills += 1;
            }
        }
        self.pending_lines.remove(&line);
        self.l0.install(line);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l0_lru_eviction() {
        let mut c = L0ICache::new(2, 2, false);
        c.install(0);
        c.install(2);
        assert!(c.contains(0) && c.contains(2));
        c.touch(0);
        c.install(4);
        assert!(c.contains(4));
        assert!(c.contains(0), "recently touched line survives");
        assert!(!c.contains(2));
    }

    #[test]
    fn perfect_cache_always_hits() {
        let c = L0ICache::new(1, 1, true);
        assert!(c.contains(12345));
    }

    #[test]
    fn stream_restarts_and_paces() {
        let mut s = StreamBuffer::default();
        s.restart(0, 4, 0);
        assert_eq!(s.next_request(5, 10, 100, |_| false), None);
        assert_eq!(s.next_request(10, 10, 100, |_| false), Some(1));
        assert_eq!(s.next_request(11, 10, 100, |_| false), None);
        assert_eq!(s.next_request(20, 10, 100, |_| false), Some(2));
    }

    #[test]
    fn stream_skips_resident_lines() {
        let mut s = StreamBuffer::default();
        s.restart(0, 2, 0);
        assert_eq!(s.next_request(10, 10, 100, |l| l == 1), Some(2));
        assert_eq!(s.next_request(20, 10, 100, |_| false), Some(3));
        assert_eq!(s.next_request(30, 10, 100, |_| false), None);
    }

    #[test]
    fn stream_stops_at_program_end() {
        let mut s = StreamBuffer::default();
        s.restart(0, 16, 0);
        assert_eq!(s.next_request(10, 10, 2, |_| false), Some(1));
        assert_eq!(s.next_request(20, 10, 2, |_| false), None);
        assert!(!s.active);
    }

    #[test]
    fn arbiter_single_grant_demand_first() {
        let mut a = L1Arbiter::new(4);
        a.enqueue(2, FillRequest { line: 7, demand: false });
        a.enqueue(1, FillRequest { line: 3, demand: true });
        let (sc, req) = a.grant().unwrap();
        assert_eq!((sc, req.line, req.demand), (1, 3, true));
        let (sc2, req2) = a.grant().unwrap();
        assert_eq!((sc2, req2.line), (2, 7));
        assert!(a.grant().is_none());
    }

    #[test]
    fn arbiter_round_robin_order() {
        let mut a = L1Arbiter::new(4);
        for sc in 0..4 {
            a.enqueue(sc, FillRequest { line: sc as u64, demand: true });
        }
        let order: Vec<usize> = (0..4).map(|_| a.grant().unwrap().0).collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }
}
