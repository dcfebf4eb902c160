//! Top-level SM model: sub-cores, warp placement, the cycle loop,
//! timeline recording and statistics.
//!
//! Everything is deterministic: identical program and configuration give
//! byte-identical output. Within a cycle the phases run in a fixed order
//! (allocate, control-advance, issue, control effects, memory, fetch,
//! end-of-cycle events) so that state mutated during cycle `c` first
//! becomes observable to issue decisions at `c + 1`.

use crate::config::{DepsMechanism, PrefetchKind, SmConfig};
use crate::deps::{
    hazard_monitor, AccessKind, DependenceCounters, DepsFault, RegAccess, Scoreboard,
};
use crate::exec::{execute_lanes, merge_masked, UnitLatches};
use crate::frontend::{FillRequest, Frontend, L1Arbiter};
use crate::isa::validate::{regs_read, regs_written, ArchReg};
use crate::isa::{
    bank_of, ConstAddr, Diagnostic, Instruction, LatencyClass, Opcode, Operand, Program, UnitClass,
};
use crate::issue::{cggty_select, AllocateLatch, ControlLatch, ReadinessReport, StallCounter};
use crate::mem::{ConstCaches, MemEntry, MemPipe, MemStore, SharedMemPipe};
use crate::regfile::{
    plan_reads, LaneValues, PortCalendar, PortDemand, ReadPlan, RegFileCache, ResultQueue,
    RfcOutcome, WarpRegisters, LANES,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

/// One record of the per-run event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub cycle: u64,
    pub subcore: usize,
    pub warp: Option<usize>,
    pub pc: Option<u64>,
    pub stage: String,
    pub detail: String,
}

/// A captured CLOCK destination value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockCapture {
    pub warp: usize,
    pub pc: u64,
    pub cycle: u64,
    pub value: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcoreStats {
    pub issued: u64,
    pub bubbles: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub total_cycles: u64,
    pub instructions_issued: u64,
    pub issued_per_warp: Vec<u64>,
    pub bubbles: BTreeMap<String, u64>,
    pub per_subcore: Vec<SubcoreStats>,
    pub rfc_hits: u64,
    pub rfc_misses: u64,
    pub allocate_hold_cycles: u64,
    pub load_write_delays: u64,
    pub lsu_block_cycles: u64,
    pub icache_demand_misses: u64,
    pub prefetch_requests: u64,
    pub prefetch_fills: u64,
    pub const_fl_misses: u64,
    pub shared_grants: Vec<u64>,
}

/// Final architectural register values of one warp; zero-valued registers
/// are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarpRegDump {
    pub warp: usize,
    pub regular: BTreeMap<u8, Vec<u32>>,
    pub uniform: BTreeMap<u8, u32>,
    pub predicate: BTreeMap<u8, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: SmConfig,
    pub stats: RunStats,
    pub events: Vec<TimelineEvent>,
    pub registers: Vec<WarpRegDump>,
    pub diagnostics: Vec<Diagnostic>,
    pub clocks: Vec<ClockCapture>,
}

impl RunResult {
    /// Issue cycles of one warp's instructions in issue order: (pc, cycle).
    pub fn issue_trace(&self, warp: usize) -> Vec<(u64, u64)> {
        self.events
            .iter()
            .filter(|e| e.stage == "issue" && e.warp == Some(warp))
            .map(|e| (e.pc.unwrap_or(0), e.cycle))
            .collect()
    }

    /// Issue order across all warps of one sub-core: (warp, pc, cycle).
    pub fn issue_order(&self, subcore: usize) -> Vec<(usize, u64, u64)> {
        self.events
            .iter()
            .filter(|e| e.stage == "issue" && e.subcore == subcore)
            .map(|e| (e.warp.unwrap_or(0), e.pc.unwrap_or(0), e.cycle))
            .collect()
    }
}

/// Initial architectural state applied before a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegInit {
    Regular { warp: usize, index: u8, lanes: [u32; LANES] },
    Uniform { warp: usize, index: u8, value: u32 },
    Predicate { warp: usize, index: u8, mask: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimFault {
    CycleCapExceeded { cap: u64 },
    Deps(DepsFault),
    DivergentBranch { warp: usize, pc: u64, cycle: u64 },
    PopOnEmpty { warp: usize, cycle: u64 },
    MissingLatency { pc: u64, detail: String },
}

impl fmt::Display for SimFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimFault::CycleCapExceeded { cap } => write!(f, "cycle cap of {cap} exceeded"),
            SimFault::Deps(d) => write!(f, "{d}"),
            SimFault::DivergentBranch { warp, pc, cycle } => {
                write!(f, "divergent branch in warp {warp} at pc 0x{pc:x}, cycle {cycle}")
            }
            SimFault::PopOnEmpty { warp, cycle } => {
                write!(f, "instruction buffer underflow in warp {warp} at cycle {cycle}")
            }
            SimFault::MissingLatency { pc, detail } => {
                write!(f, "instruction at pc 0x{pc:x} has no latency entry: {detail}")
            }
        }
    }
}

impl std::error::Error for SimFault {}

impl From<DepsFault> for SimFault {
    fn from(d: DepsFault) -> Self {
        SimFault::Deps(d)
    }
}

struct WarpState {
    id: usize,
    subcore: usize,
    ib: VecDeque<usize>,
    fetch_in_flight: VecDeque<(u64, usize)>,
    next_fetch_pc: u64,
    fetch_done: bool,
    flushed_at: Option<u64>,
    counters: DependenceCounters,
    scoreboard: Scoreboard,
    stall: StallCounter,
    yield_block_at: Option<u64>,
    pending_cf: bool,
    at_barrier: bool,
    exited: bool,
    const_blocked_line: Option<u64>,
    regs: WarpRegisters,
    issued: u64,
    fetch_occupancy: usize,
}

struct SubCore {
    warps: Vec<usize>,
    control: Option<ControlLatch>,
    incoming_control: Option<ControlLatch>,
    control_advances: bool,
    allocate: Option<AllocateLatch>,
    allocate_departs: bool,
    units: UnitLatches,
    mem: MemPipe,
    const_stall: Option<(usize, u64)>,
    banks: [PortCalendar; 2],
    rqueues: [ResultQueue; 2],
    rfc: RegFileCache,
    frontend: Frontend,
    consts: ConstCaches,
    last_issued: Option<usize>,
    issued: u64,
    bubbles: BTreeMap<&'static str, u64>,
}

struct Inflight {
    warp: usize,
    inst_idx: usize,
    rfc_hits: Vec<bool>,
    captured: Vec<Vec<LaneValues>>,
    guard_mask: u32,
    clock_value: Option<u32>,
}

#[derive(Default)]
struct CycleEvents {
    icache_fills: Vec<(usize, u64)>,
    const_fills: Vec<(usize, u64)>,
    captures: Vec<u64>,
    commits: Vec<u64>,
    counter_decs: Vec<(usize, u8)>,
    slot_frees: Vec<usize>,
}

impl CycleEvents {
    fn functional_count(&self) -> usize {
        self.captures.len() + self.commits.len() + self.counter_decs.len() + self.slot_frees.len()
    }
}

pub struct Simulator<'p> {
    cfg: SmConfig,
    program: &'p Program,
    warps: Vec<WarpState>,
    subcores: Vec<SubCore>,
    arbiter: L1Arbiter,
    shared_pipe: SharedMemPipe,
    global_mem: MemStore,
    shared_mem: MemStore,
    inflight: BTreeMap<u64, Inflight>,
    events: BTreeMap<u64, CycleEvents>,
    pending_functional: usize,
    allocate_hold_total: u64,
    next_seq: u64,
    cycle: u64,
    use_scoreboard: bool,
    timeline: Vec<TimelineEvent>,
    accesses: Vec<RegAccess>,
    clocks: Vec<ClockCapture>,
}

/// Run `program` under `config` with zeroed architectural state.
pub fn run(program: &Program, config: &SmConfig) -> Result<RunResult, SimFault> {
    run_with_init(program, config, &[])
}

pub fn run_with_init(
    program: &Program,
    config: &SmConfig,
    init: &[RegInit],
) -> Result<RunResult, SimFault> {
    let mut sim = Simulator::new(program, config.clone());
    sim.apply_init(init);
    sim.run_to_completion()
}

impl<'p> Simulator<'p> {
    pub fn new(program: &'p Program, cfg: SmConfig) -> Self {
        let warps: Vec<WarpState> = (0..cfg.warps)
            .map(|id| WarpState {
                id,
                subcore: id % cfg.sub_cores,
                ib: VecDeque::new(),
                fetch_in_flight: VecDeque::new(),
                next_fetch_pc: program.base,
                fetch_done: program.instructions.is_empty(),
                flushed_at: None,
                counters: DependenceCounters::default(),
                scoreboard: Scoreboard::default(),
                stall: StallCounter::default(),
                yield_block_at: None,
                pending_cf: false,
                at_barrier: false,
                exited: program.instructions.is_empty(),
                const_blocked_line: None,
                regs: WarpRegisters::default(),
                issued: 0,
                fetch_occupancy: 0,
            })
            .collect();
        let subcores = (0..cfg.sub_cores)
            .map(|id| SubCore {
                warps: cfg.warps_of_subcore(id),
                control: None,
                incoming_control: None,
                control_advances: false,
                allocate: None,
                allocate_departs: false,
                units: UnitLatches::default(),
                mem: MemPipe::default(),
                const_stall: None,
                banks: Default::default(),
                rqueues: Default::default(),
                rfc: RegFileCache::default(),
                frontend: Frontend::new(cfg.l0_lines, cfg.l0_assoc, cfg.perfect_icache),
                consts: ConstCaches::default(),
                last_issued: None,
                issued: 0,
                bubbles: BTreeMap::new(),
            })
            .collect();
        let use_scoreboard = match cfg.deps_mechanism {
            DepsMechanism::Scoreboard => true,
            DepsMechanism::ControlBits => false,
            DepsMechanism::Hybrid => matches!(program.hazards_hint.as_deref(), Some("scoreboard")),
        };
        Simulator {
            arbiter: L1Arbiter::new(cfg.sub_cores),
            shared_pipe: SharedMemPipe::new(cfg.sub_cores),
            cfg,
            program,
            warps,
            subcores,
            global_mem: MemStore::default(),
            shared_mem: MemStore::default(),
            inflight: BTreeMap::new(),
            events: BTreeMap::new(),
            pending_functional: 0,
            allocate_hold_total: 0,
            next_seq: 0,
            cycle: 0,
            use_scoreboard,
            timeline: Vec::new(),
            accesses: Vec::new(),
            clocks: Vec::new(),
        }
    }

    pub fn apply_init(&mut self, init: &[RegInit]) {
        for i in init {
            match *i {
                RegInit::Regular { warp, index, lanes } => {
                    self.warps[warp].regs.write_regular(index, lanes)
                }
                RegInit::Uniform { warp, index, value } => {
                    self.warps[warp].regs.write_uniform(index, value)
                }
                RegInit::Predicate { warp, index, mask } => {
                    self.warps[warp].regs.write_predicate(index, mask)
                }
            }
        }
    }

    fn inst(&self, idx: usize) -> &'p Instruction {
        &self.program.instructions[idx]
    }

    fn note(&mut self, subcore: usize, warp: Option<usize>, pc: Option<u64>, stage: &str, detail: String) {
        self.timeline.push(TimelineEvent {
            cycle: self.cycle,
            subcore,
            warp,
            pc,
            stage: stage.to_string(),
            detail,
        });
    }

    fn ev(&mut self, cycle: u64) -> &mut CycleEvents {
        self.events.entry(cycle).or_default()
    }

    fn schedule_counter_dec(&mut self, cycle: u64, warp: usize, counter: u8) {
        self.pending_functional += 1;
        self.ev(cycle).counter_decs.push((warp, counter));
    }

    fn schedule_capture(&mut self, cycle: u64, seq: u64) {
        self.pending_functional += 1;
        self.ev(cycle).captures.push(seq);
    }

    fn schedule_commit(&mut self, cycle: u64, seq: u64) {
        self.pending_functional += 1;
        self.ev(cycle).commits.push(seq);
    }

    fn schedule_slot_free(&mut self, cycle: u64, sc: usize) {
        self.pending_functional += 1;
        self.ev(cycle).slot_frees.push(sc);
    }

    pub fn run_to_completion(mut self) -> Result<RunResult, SimFault> {
        for inst in &self.program.instructions {
            if let Err(e) = self.cfg.latency_table.lookup(inst) {
                return Err(SimFault::MissingLatency { pc: inst.pc, detail: e.to_string() });
            }
        }
        if self.program.instructions.is_empty() {
            return Ok(self.finish());
        }
        loop {
            if self.cycle > self.cfg.cycle_cap {
                return Err(SimFault::CycleCapExceeded { cap: self.cfg.cycle_cap });
            }
            // Fetch room is judged on start-of-cycle occupancy: a slot
            // freed by this cycle's issue is not visible to this cycle's
            // fetch, which is what makes the third buffer entry matter.
            for w in 0..self.warps.len() {
                self.warps[w].fetch_occupancy =
                    self.warps[w].ib.len() + self.warps[w].fetch_in_flight.len();
            }
            self.phase_allocate();
            self.phase_control_advance();
            self.phase_issue()?;
            self.phase_control_effects()?;
            self.phase_mem();
            self.phase_fetch();
            self.phase_end_of_cycle();
            let done = self.pending_functional == 0
                && self.warps.iter().all(|w| w.exited)
                && self.subcores.iter().all(|s| {
                    s.control.is_none()
                        && s.allocate.is_none()
                        && s.mem.queue.is_empty()
                        && s.mem.agu.is_none()
                });
            self.cycle += 1;
            if done {
                break;
            }
        }
        Ok(self.finish())
    }

    // ----- phase A: Allocate reservation attempts -----

    fn phase_allocate(&mut self) {
        let window = self.cfg.calibration.read_window;
        for sc_idx in 0..self.subcores.len() {
            if self.subcores[sc_idx].allocate.is_none() {
                self.subcores[sc_idx].allocate_departs = true;
                continue;
            }
            let mut alloc = self.subcores[sc_idx].allocate.take().unwrap();
            if !alloc.resolved {
                alloc.demand = self.resolve_rfc(sc_idx, alloc.seq);
                alloc.resolved = true;
            }
            let (warp, pc) = {
                let fl = &self.inflight[&alloc.seq];
                (fl.warp, self.inst(fl.inst_idx).pc)
            };
            let cycle = self.cycle;
            let plan = plan_reads(
                &alloc.demand,
                &self.subcores[sc_idx].banks,
                self.cfg.read_ports_per_bank,
                self.cfg.bank_map,
                cycle + 1,
                window,
            );
            match plan {
                ReadPlan::Feasible(slots) => {
                    for (bank, slot_cycle) in &slots {
                        self.subcores[sc_idx].banks[*bank as usize].reserve(*slot_cycle);
                        debug_assert!(
                            self.subcores[sc_idx].banks[*bank as usize].count_at(*slot_cycle)
                                <= self.cfg.read_ports_per_bank
                        );
                    }
                    self.subcores[sc_idx].allocate = Some(alloc);
                    self.subcores[sc_idx].allocate_departs = true;
                    self.note(sc_idx, Some(warp), Some(pc), "allocate", format!("{slots:?}"));
                }
                ReadPlan::Infeasible => {
                    alloc.hold_cycles += 1;
                    self.allocate_hold_total += 1;
                    self.subcores[sc_idx].allocate = Some(alloc);
                    self.subcores[sc_idx].allocate_departs = false;
                    self.note(sc_idx, Some(warp), Some(pc), "allocate_hold", String::new());
                }
            }
        }
    }

    /// RFC lookups for the instruction entering Allocate; returns the bank
    /// port demand of the operands the cache did not serve.
    fn resolve_rfc(&mut self, sc_idx: usize, seq: u64) -> PortDemand {
        let (warp, inst_idx) = {
            let fl = &self.inflight[&seq];
            (fl.warp, fl.inst_idx)
        };
        let inst = self.inst(inst_idx);
        let pc = inst.pc;
        let mut demand = PortDemand::default();
        let mut hits: Vec<bool> = Vec::new();
        let reads: Vec<Operand> = inst.read_operands().into_iter().cloned().collect();
        for (pos, op) in reads.iter().enumerate() {
            let mut hit = false;
            if let Operand::Reg { index, width_regs, reuse } = op {
                if *width_regs == 1 && pos < 3 && self.cfg.rfc_enabled {
                    let outcome = self.subcores[sc_idx].rfc.access(
                        warp,
                        pos,
                        *index,
                        *reuse,
                        self.cfg.bank_map,
                    );
                    hit = outcome == RfcOutcome::Hit;
                    let stage = if hit { "rfc_hit" } else { "rfc_miss" };
                    self.note(sc_idx, Some(warp), Some(pc), stage, format!("R{index} pos{pos}"));
                }
                if !hit {
                    for r in op.reg_indices() {
                        if r != crate::isa::REG_RZ {
                            demand.regs.push(r);
                        }
                    }
                }
            }
            hits.push(hit);
        }
        if let Some(fl) = self.inflight.get_mut(&seq) {
            fl.rfc_hits = hits;
        }
        demand
    }

    // ----- phase B: will the Control occupant move on? -----

    fn phase_control_advance(&mut self) {
        for sc_idx in 0..self.subcores.len() {
            let advances = match &self.subcores[sc_idx].control {
                None => true,
                Some(ctl) => {
                    let fl = &self.inflight[&ctl.seq];
                    if self.inst(fl.inst_idx).opcode.is_memory() {
                        true
                    } else {
                        self.subcores[sc_idx].allocate_departs
                    }
                }
            };
            self.subcores[sc_idx].control_advances = advances;
        }
    }

    // ----- phase C: issue -----

    fn phase_issue(&mut self) -> Result<(), SimFault> {
        for sc_idx in 0..self.subcores.len() {
            // Unblock warps whose constant-cache fill has landed.
            for w in self.subcores[sc_idx].warps.clone() {
                if let Some(line) = self.warps[w].const_blocked_line {
                    if self.subcores[sc_idx].consts.fl_resident(line) {
                        self.warps[w].const_blocked_line = None;
                    }
                }
            }

            // An unserviced constant miss freezes the sub-core for up to
            // four cycles before the warp is set aside.
            if let Some((w, since)) = self.subcores[sc_idx].const_stall {
                match self.head_const_miss(sc_idx, w) {
                    None => self.subcores[sc_idx].const_stall = None,
                    Some(line) => {
                        if self.cycle - since < 4 {
                            self.bubble(sc_idx, "const_cache");
                            continue;
                        }
                        self.warps[w].const_blocked_line = Some(line);
                        self.subcores[sc_idx].const_stall = None;
                    }
                }
            }

            if !(self.subcores[sc_idx].control.is_none() || self.subcores[sc_idx].control_advances)
            {
                self.bubble(sc_idx, "allocate_hold");
                continue;
            }

            let reports: Vec<ReadinessReport> = self.subcores[sc_idx]
                .warps
                .clone()
                .into_iter()
                .map(|w| self.readiness(sc_idx, w))
                .collect();
            let Some(w) = cggty_select(&reports, self.subcores[sc_idx].last_issued) else {
                let reason = self.classify_bubble(sc_idx, &reports);
                self.bubble(sc_idx, reason);
                continue;
            };

            // Constant-cache tag lookup of the selected instruction.
            if let Some(line) = self.head_const_miss(sc_idx, w) {
                if self.subcores[sc_idx].consts.fl_fill_pending(line).is_none() {
                    let done = self.cycle + self.cfg.const_fl_miss_delay;
                    self.subcores[sc_idx].consts.fl_start_fill(line, done);
                    self.ev(done.saturating_sub(1)).const_fills.push((sc_idx, line));
                    self.note(sc_idx, Some(w), None, "const_fl_miss", format!("line {line}"));
                }
                self.subcores[sc_idx].const_stall = Some((w, self.cycle));
                self.bubble(sc_idx, "const_cache");
                continue;
            }

            self.issue_instruction(sc_idx, w)?;
        }
        Ok(())
    }

    fn head_inst_idx(&self, w: usize) -> Option<usize> {
        self.warps[w].ib.front().copied()
    }

    /// Missing L0-FL line referenced by the warp's head instruction.
    fn head_const_miss(&self, sc_idx: usize, w: usize) -> Option<u64> {
        let idx = self.head_inst_idx(w)?;
        let inst = self.inst(idx);
        if inst.opcode.is_memory() {
            return None;
        }
        for op in inst.read_operands() {
            if let Operand::ConstRef { bank, offset, addr: ConstAddr::ImmediateOffset } = op {
                let line =
                    ((*bank as u64) << 48) | (*offset as u64 / self.cfg.const_line_bytes as u64);
                if !self.subcores[sc_idx].consts.fl_resident(line) {
                    return Some(line);
                }
            }
        }
        None
    }

    fn readiness(&self, sc_idx: usize, w: usize) -> ReadinessReport {
        let warp = &self.warps[w];
        let mut r = ReadinessReport::ineligible(w);
        if warp.exited || warp.at_barrier || warp.pending_cf {
            return r;
        }
        let Some(idx) = warp.ib.front().copied() else { return r };
        let inst = self.inst(idx);
        r.valid_instruction = true;
        r.stall_counter_zero = warp.stall.value_at(self.cycle) == 0;
        r.yield_block = warp.yield_block_at == Some(self.cycle);
        r.deps_clear = if self.use_scoreboard {
            warp.scoreboard.ready(&regs_read(inst), &regs_written(inst))
        } else {
            warp.counters.ready(&inst.control, inst.depbar.as_ref())
        };
        let sc = &self.subcores[sc_idx];
        r.unit_latch_free = match inst.opcode.unit_class() {
            UnitClass::Memory => sc.mem.issue_view < self.cfg.lsu_capacity(),
            UnitClass::Control => true,
            class => sc.units.free_for(
                class,
                self.cycle + self.cfg.calibration.unit_arrival_offset,
                &self.cfg,
            ),
        };
        r.constant_cache_ok = warp.const_blocked_line.is_none();
        r.seal()
    }

    fn classify_bubble(&self, sc_idx: usize, reports: &[ReadinessReport]) -> &'static str {
        let sc = &self.subcores[sc_idx];
        if sc.warps.is_empty() {
            return "idle";
        }
        if sc.warps.iter().all(|&w| self.warps[w].exited) {
            return "drain";
        }
        match reports.iter().rev().find(|r| r.valid_instruction) {
            None => {
                if sc.warps.iter().any(|&w| self.warps[w].at_barrier) {
                    "barrier"
                } else {
                    "icache"
                }
            }
            Some(r) => {
                if !r.stall_counter_zero || r.yield_block {
                    "stall"
                } else if !r.deps_clear {
                    "deps"
                } else if !r.constant_cache_ok {
                    "const_cache"
                } else if !r.unit_latch_free {
                    let idx = self.head_inst_idx(r.warp).unwrap();
                    if self.inst(idx).opcode.is_memory() {
                        "lsu"
                    } else {
                        "unit"
                    }
                } else {
                    "icache"
                }
            }
        }
    }

    fn bubble(&mut self, sc_idx: usize, reason: &'static str) {
        *self.subcores[sc_idx].bubbles.entry(reason).or_default() += 1;
    }

    fn issue_instruction(&mut self, sc_idx: usize, w: usize) -> Result<(), SimFault> {
        let cycle = self.cycle;
        let Some(inst_idx) = self.warps[w].ib.pop_front() else {
            return Err(SimFault::PopOnEmpty { warp: w, cycle });
        };
        let inst = self.inst(inst_idx);
        let seq = self.next_seq;
        self.next_seq += 1;

        {
            let warp = &mut self.warps[w];
            warp.stall.load(cycle, inst.control.stall);
            if inst.control.yield_flag && inst.control.stall <= 1 {
                warp.yield_block_at = Some(cycle + 1);
            }
            if matches!(inst.opcode, Opcode::BRA | Opcode::EXIT | Opcode::BAR) {
                warp.pending_cf = true;
            }
            warp.issued += 1;
        }

        let class =
            self.cfg.latency_table.lookup(inst).expect("latency coverage checked before the run");

        {
            let sc = &mut self.subcores[sc_idx];
            sc.issued += 1;
            sc.last_issued = Some(w);
            if inst.opcode.is_memory() {
                sc.mem.issue_view += 1;
            } else if inst.opcode.unit_class() != UnitClass::Control {
                let arrival = cycle + self.cfg.calibration.unit_arrival_offset;
                sc.units.occupy(inst.opcode.unit_class(), arrival, &self.cfg);
            }
            sc.incoming_control = Some(ControlLatch {
                seq,
                process_cycle: cycle + self.cfg.calibration.issue_to_control,
                effects_done: false,
            });
        }

        self.inflight.insert(
            seq,
            Inflight {
                warp: w,
                inst_idx,
                rfc_hits: Vec::new(),
                captured: Vec::new(),
                guard_mask: u32::MAX,
                clock_value: None,
            },
        );

        match class {
            LatencyClass::Fixed(latency) => {
                let lat = (latency as u64).max(1);
                if !self.use_scoreboard {
                    if let Some(rb) = inst.control.read_barrier {
                        let release = cycle
                            + self.cfg.calibration.issue_to_control
                            + self.cfg.calibration.control_to_allocate
                            + self.cfg.calibration.read_window;
                        self.schedule_counter_dec(release, w, rb);
                    }
                    if let Some(wb) = inst.control.write_barrier {
                        self.schedule_counter_dec(cycle + lat, w, wb);
                    }
                }
                let has_reads = !inst.read_operands().is_empty() || inst.guard.is_some();
                if has_reads {
                    let cap_off = self.cfg.calibration.operand_capture_offset.min(lat.max(2) - 1);
                    self.schedule_capture(cycle + cap_off, seq);
                }
                if inst.dest.is_some() {
                    self.schedule_commit(cycle + lat, seq);
                }
            }
            LatencyClass::Memory(ml) => {
                let war = (ml.war_release as u64).max(1);
                let raw = ml.raw_waw_release.map(|r| r as u64);
                if !self.use_scoreboard {
                    if let Some(rb) = inst.control.read_barrier {
                        self.schedule_counter_dec(cycle + war - 1, w, rb);
                    }
                    if let Some(wb) = inst.control.write_barrier {
                        let at = raw.unwrap_or(war);
                        self.schedule_counter_dec(cycle + at - 1, w, wb);
                    }
                }
                self.schedule_capture(cycle + war - 1, seq);
                if let Some(raw) = raw {
                    if inst.dest.is_some() || inst.opcode == Opcode::LDGSTS {
                        self.schedule_commit(cycle + raw - 1, seq);
                    }
                }
            }
        }

        if self.use_scoreboard {
            let reads = regs_read(inst);
            let writes = regs_written(inst);
            self.warps[w].scoreboard.on_issue(&reads, &writes, self.cfg.max_consumers, w, cycle)?;
        }

        let pc = inst.pc;
        let mnemonic = inst.opcode.mnemonic();
        self.note(sc_idx, Some(w), Some(pc), "issue", mnemonic.to_string());
        Ok(())
    }

    // ----- phase D: Control-stage effects -----

    fn phase_control_effects(&mut self) -> Result<(), SimFault> {
        for sc_idx in 0..self.subcores.len() {
            let Some(mut ctl) = self.subcores[sc_idx].control else { continue };
            if ctl.process_cycle != self.cycle || ctl.effects_done {
                continue;
            }
            ctl.effects_done = true;
            self.subcores[sc_idx].control = Some(ctl);

            let (w, inst_idx) = {
                let fl = &self.inflight[&ctl.seq];
                (fl.warp, fl.inst_idx)
            };
            let inst = self.inst(inst_idx);
            let pc = inst.pc;
            let cycle = self.cycle;

            if !self.use_scoreboard {
                for bar in
                    [inst.control.write_barrier, inst.control.read_barrier].into_iter().flatten()
                {
                    self.warps[w].counters.increment(bar, w, cycle)?;
                    let v = self.warps[w].counters.get(bar);
                    self.note(sc_idx, Some(w), Some(pc), "counter_inc", format!("SB{bar}={v}"));
                }
            }

            match inst.opcode {
                Opcode::CLOCK => {
                    let value = cycle as u32;
                    if let Some(fl) = self.inflight.get_mut(&ctl.seq) {
                        fl.clock_value = Some(value);
                    }
                    self.clocks.push(ClockCapture { warp: w, pc, cycle, value });
                    self.note(sc_idx, Some(w), Some(pc), "clock_capture", format!("{value}"));
                }
                Opcode::EXIT => {
                    let warp = &mut self.warps[w];
                    warp.exited = true;
                    warp.pending_cf = false;
                    warp.ib.clear();
                    warp.fetch_in_flight.clear();
                    warp.fetch_done = true;
                    self.note(sc_idx, Some(w), Some(pc), "exit", String::new());
                }
                Opcode::BRA => {
                    let taken = match &inst.guard {
                        None => true,
                        Some((neg, p)) => {
                            let mask = self.guard_mask_now(w, *neg, p);
                            if mask != 0 && mask != u32::MAX {
                                return Err(SimFault::DivergentBranch { warp: w, pc, cycle });
                            }
                            mask == u32::MAX
                        }
                    };
                    let end_pc = self.program.end_pc();
                    let base = self.program.base;
                    let warp = &mut self.warps[w];
                    warp.pending_cf = false;
                    if taken {
                        let target = inst.target.unwrap_or(pc);
                        warp.ib.clear();
                        warp.fetch_in_flight.clear();
                        warp.next_fetch_pc = target;
                        warp.fetch_done = target >= end_pc || target < base;
                        warp.flushed_at = Some(cycle);
                        self.note(sc_idx, Some(w), Some(pc), "branch", format!("0x{target:x}"));
                    }
                }
                Opcode::BAR => {
                    self.warps[w].at_barrier = true;
                    self.warps[w].pending_cf = false;
                    self.note(sc_idx, Some(w), Some(pc), "barrier", String::new());
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn guard_mask_now(&self, w: usize, neg: bool, p: &Operand) -> u32 {
        let regs = &self.warps[w].regs;
        let mask = match p {
            Operand::Pred { index } => regs.read_predicate(*index),
            Operand::UPred { index } => {
                if regs.read_upredicate(*index) {
                    u32::MAX
                } else {
                    0
                }
            }
            _ => u32::MAX,
        };
        if neg {
            !mask
        } else {
            mask
        }
    }

    // ----- phase E: memory pipeline -----

    fn phase_mem(&mut self) {
        let cycle = self.cycle;
        let ready: Vec<bool> = self
            .subcores
            .iter()
            .map(|s| s.mem.agu.is_some_and(|a| a.ready_at <= cycle))
            .collect();
        if let Some(sc_idx) = self.shared_pipe.pick(cycle, self.cfg.shared_accept_period, &ready) {
            let entry = self.subcores[sc_idx].mem.agu.take().unwrap();
            self.shared_pipe.commit_grant(sc_idx, cycle);
            let vis = self.cfg.calibration.lsu_visibility;
            self.schedule_slot_free(cycle + vis.saturating_sub(1), sc_idx);
            self.note(sc_idx, Some(entry.warp), Some(entry.pc), "shared_grant", String::new());
        }
        for sc_idx in 0..self.subcores.len() {
            let entered = self.subcores[sc_idx].mem.try_enter_agu(
                cycle,
                self.cfg.calibration.agu_entry_delay,
                self.cfg.agu_latency,
            );
            if let Some(e) = entered {
                self.note(sc_idx, Some(e.warp), Some(e.pc), "agu", format!("ready {}", e.ready_at));
            }
        }
    }

    // ----- phase F: fetch -----

    fn phase_fetch(&mut self) {
        let cycle = self.cycle;
        let line_bytes = self.cfg.line_bytes as u64;
        let end_pc = self.program.end_pc();
        let end_line = end_pc.div_ceil(line_bytes);

        for sc_idx in 0..self.subcores.len() {
            if self.cfg.prefetch_kind == PrefetchKind::Stream && !self.cfg.perfect_icache {
                let interval = self.cfg.prefetch_interval;
                let fe = &mut self.subcores[sc_idx].frontend;
                let Frontend { l0, stream, pending_lines, .. } = fe;
                let req = {
                    let resident = |l: u64| l0.contains(l) || pending_lines.contains(&l);
                    stream.next_request(cycle, interval, end_line, resident)
                };
                if let Some(line) = req {
                    fe.pending_lines.insert(line);
                    fe.pending_kind.insert(line, true);
                    self.arbiter.enqueue(sc_idx, FillRequest { line, demand: false });
                    self.note(sc_idx, None, None, "prefetch_req", format!("line {line}"));
                }
            }

            // One fetch action per cycle, targets chosen by the fetch
            // policy below.
            for w in fetch_policy_order(&self.subcores[sc_idx].warps, self.subcores[sc_idx].last_issued) {
                let (pc, line) = {
                    let warp = &self.warps[w];
                    if warp.exited || warp.fetch_done || warp.flushed_at == Some(cycle) {
                        continue;
                    }
                    if warp.fetch_occupancy >= self.cfg.ibuffer_entries {
                        continue;
                    }
                    (warp.next_fetch_pc, warp.next_fetch_pc / line_bytes)
                };
                if self.subcores[sc_idx].frontend.line_ready(line) {
                    self.subcores[sc_idx].frontend.l0.touch(line);
                    let inst_idx = ((pc - self.program.base) / 16) as usize;
                    let warp = &mut self.warps[w];
                    warp.fetch_in_flight.push_back((cycle + 1, inst_idx));
                    warp.fetch_occupancy += 1;
                    warp.next_fetch_pc += 16;
                    if warp.next_fetch_pc >= end_pc {
                        warp.fetch_done = true;
                    }
                    self.note(sc_idx, Some(w), Some(pc), "fetch", String::new());
                    break;
                } else if self.subcores[sc_idx].frontend.line_pending(line) {
                    continue;
                } else {
                    let depth = self.cfg.prefetch_depth;
                    let fe = &mut self.subcores[sc_idx].frontend;
                    fe.pending_lines.insert(line);
                    fe.pending_kind.insert(line, false);
                    fe.demand_misses += 1;
                    if self.cfg.prefetch_kind == PrefetchKind::Stream {
                        fe.stream.restart(line, depth, cycle);
                    }
                    self.arbiter.enqueue(sc_idx, FillRequest { line, demand: true });
                    self.note(sc_idx, Some(w), Some(pc), "fetch_miss", format!("line {line}"));
                    break;
                }
            }
        }

        if let Some((sc_idx, req)) = self.arbiter.grant() {
            let done = (cycle + self.cfg.miss_latency).saturating_sub(1);
            self.ev(done).icache_fills.push((sc_idx, req.line));
            self.note(sc_idx, None, None, "l1_grant", format!("line {}", req.line));
        }
    }

    // ----- phase G: end-of-cycle events and latch movement -----

    fn phase_end_of_cycle(&mut self) {
        let cycle = self.cycle;
        if let Some(ev) = self.events.remove(&cycle) {
            for (sc_idx, line) in &ev.icache_fills {
                self.subcores[*sc_idx].frontend.fill(*line);
            }
            for (sc_idx, line) in &ev.const_fills {
                self.subcores[*sc_idx].consts.fl_apply_fill(*line);
                self.note(*sc_idx, None, None, "const_fl_fill", format!("line {line}"));
            }
            let mut captures = ev.captures.clone();
            captures.sort_unstable();
            for seq in captures {
                self.apply_capture(seq);
            }
            let mut commits = ev.commits.clone();
            commits.sort_unstable();
            for seq in commits {
                self.apply_commit(seq);
            }
            for (w, counter) in &ev.counter_decs {
                self.warps[*w].counters.decrement(*counter);
                let v = self.warps[*w].counters.get(*counter);
                let sc = self.warps[*w].subcore;
                self.note(sc, Some(*w), None, "counter_dec", format!("SB{counter}={v}"));
            }
            for sc_idx in &ev.slot_frees {
                let m = &mut self.subcores[*sc_idx].mem;
                debug_assert!(m.issue_view > 0);
                m.issue_view = m.issue_view.saturating_sub(1);
            }
            self.pending_functional -= ev.functional_count();
        }

        for sc_idx in 0..self.subcores.len() {
            if self.subcores[sc_idx].allocate_departs {
                self.subcores[sc_idx].allocate = None;
            }
            if self.subcores[sc_idx].control_advances {
                if let Some(ctl) = self.subcores[sc_idx].control.take() {
                    let (w, inst_idx) = {
                        let fl = &self.inflight[&ctl.seq];
                        (fl.warp, fl.inst_idx)
                    };
                    let inst = self.inst(inst_idx);
                    if inst.opcode.is_memory() {
                        self.subcores[sc_idx].mem.queue.push_back(MemEntry {
                            seq: ctl.seq,
                            warp: w,
                            pc: inst.pc,
                            arrival: cycle + 1,
                        });
                        debug_assert!(
                            self.subcores[sc_idx].mem.occupancy() <= self.cfg.lsu_capacity()
                        );
                    } else {
                        self.subcores[sc_idx].allocate = Some(AllocateLatch {
                            seq: ctl.seq,
                            process_cycle: cycle + self.cfg.calibration.control_to_allocate,
                            resolved: false,
                            demand: PortDemand::default(),
                            hold_cycles: 0,
                        });
                    }
                }
            }
            if let Some(incoming) = self.subcores[sc_idx].incoming_control.take() {
                debug_assert!(self.subcores[sc_idx].control.is_none());
                self.subcores[sc_idx].control = Some(incoming);
            }
        }

        for w in 0..self.warps.len() {
            loop {
                let warp = &mut self.warps[w];
                match warp.fetch_in_flight.front() {
                    Some(&(arrival, inst_idx)) if arrival <= cycle => {
                        warp.fetch_in_flight.pop_front();
                        warp.ib.push_back(inst_idx);
                    }
                    _ => break,
                }
            }
        }

        let live: Vec<usize> = self.warps.iter().filter(|w| !w.exited).map(|w| w.id).collect();
        if !live.is_empty() && live.iter().all(|&w| self.warps[w].at_barrier) {
            for w in live {
                self.warps[w].at_barrier = false;
            }
        }

        if cycle > 0 && cycle.is_multiple_of(1024) {
            for sc in &mut self.subcores {
                for b in &mut sc.banks {
                    b.trim_before(cycle);
                }
                for q in &mut sc.rqueues {
                    q.trim_before(cycle);
                }
            }
        }
    }

    // ----- functional dataflow -----

    fn apply_capture(&mut self, seq: u64) {
        let (w, inst_idx, rfc_hits) = {
            let fl = &self.inflight[&seq];
            (fl.warp, fl.inst_idx, fl.rfc_hits.clone())
        };
        let inst = self.inst(inst_idx);
        let cycle = self.cycle;
        let sc_idx = self.warps[w].subcore;

        let guard_mask = match &inst.guard {
            None => u32::MAX,
            Some((neg, p)) => self.guard_mask_now(w, *neg, p),
        };

        let reads: Vec<Operand> = inst.read_operands().into_iter().cloned().collect();
        let mut captured: Vec<Vec<LaneValues>> = Vec::with_capacity(reads.len());
        for (pos, op) in reads.iter().enumerate() {
            let mut regs_of_op: Vec<LaneValues> = Vec::new();
            match op {
                Operand::Reg { index, width_regs, reuse } => {
                    let rfc_hit = rfc_hits.get(pos).copied().unwrap_or(false);
                    for k in 0..*width_regs {
                        let reg = index.wrapping_add(k);
                        let value = if rfc_hit && k == 0 {
                            self.subcores[sc_idx]
                                .rfc
                                .cached_value(w, pos, reg, self.cfg.bank_map)
                                .unwrap_or_else(|| self.warps[w].regs.read_regular(reg))
                        } else {
                            self.warps[w].regs.read_regular(reg)
                        };
                        regs_of_op.push(value);
                    }
                    if *reuse && *width_regs == 1 && pos < 3 && self.cfg.rfc_enabled {
                        let v = regs_of_op[0];
                        self.subcores[sc_idx].rfc.store_value(w, pos, *index, self.cfg.bank_map, v);
                    }
                }
                other => {
                    let v = self.warps[w].regs.portless_value(other, w).unwrap_or([0; LANES]);
                    regs_of_op.push(v);
                }
            }
            captured.push(regs_of_op);
        }

        let read_regs = regs_read(inst);
        for reg in &read_regs {
            self.accesses.push(RegAccess {
                seq,
                warp: w,
                pc: inst.pc,
                reg: *reg,
                kind: AccessKind::Read,
                cycle,
            });
        }
        if self.use_scoreboard {
            for reg in &read_regs {
                self.warps[w].scoreboard.release_consumer(*reg);
            }
        }

        // Stores move their data to memory once the pipeline has read it.
        match inst.opcode {
            Opcode::STG | Opcode::STS => {
                let addr_lanes = captured[0][0];
                let data = captured.get(1).cloned().unwrap_or_default();
                let shared = inst.opcode == Opcode::STS;
                for lane in 0..LANES {
                    if guard_mask & (1 << lane) == 0 {
                        continue;
                    }
                    for (k, regv) in data.iter().enumerate() {
                        let addr = addr_lanes[lane] as u64 + 4 * k as u64;
                        if shared {
                            self.shared_mem.write(addr, regv[lane]);
                        } else {
                            self.global_mem.write(addr, regv[lane]);
                        }
                    }
                }
            }
            _ => {}
        }

        if let Some(fl) = self.inflight.get_mut(&seq) {
            fl.captured = captured;
            fl.guard_mask = guard_mask;
        }
    }

    fn apply_commit(&mut self, seq: u64) {
        let (w, inst_idx, captured, guard_mask, clock_value) = {
            let fl = &self.inflight[&seq];
            (fl.warp, fl.inst_idx, fl.captured.clone(), fl.guard_mask, fl.clock_value)
        };
        let inst = self.inst(inst_idx);
        let cycle = self.cycle;
        let sc_idx = self.warps[w].subcore;

        match inst.opcode {
            Opcode::LDG | Opcode::LDS | Opcode::LDC => {
                let width_regs = (inst.mem_width() / 32).max(1);
                let dest = match &inst.dest {
                    Some(Operand::Reg { index, .. }) => *index,
                    _ => return,
                };
                let addr_lanes: Vec<u64> = if inst.opcode == Opcode::LDC {
                    let (bank, offset, areg) = match inst.sources.first() {
                        Some(Operand::ConstRef { bank, offset, addr }) => (*bank, *offset, *addr),
                        _ => (0, 0, ConstAddr::ImmediateOffset),
                    };
                    let base = ((bank as u64) << 32) | offset as u64;
                    let idx: LaneValues = match areg {
                        ConstAddr::ImmediateOffset => [0; LANES],
                        _ => captured.first().map(|v| v[0]).unwrap_or([0; LANES]),
                    };
                    let line = ConstCaches::fl_line(base, self.cfg.const_line_bytes);
                    self.subcores[sc_idx].consts.vl_touch(line);
                    idx.iter().map(|v| base + *v as u64).collect()
                } else {
                    captured
                        .first()
                        .map(|v| v[0])
                        .unwrap_or([0; LANES])
                        .iter()
                        .map(|v| *v as u64)
                        .collect()
                };
                let shared = inst.opcode == Opcode::LDS;
                for k in 0..width_regs {
                    let reg = dest.wrapping_add(k);
                    let mut lanes = self.warps[w].regs.read_regular(reg);
                    for lane in 0..LANES {
                        if guard_mask & (1 << lane) == 0 {
                            continue;
                        }
                        let addr = addr_lanes[lane] + 4 * k as u64;
                        lanes[lane] = if inst.opcode == Opcode::LDC {
                            // Constant memory reads as a hash of the address
                            // so distinct addresses observe distinct data.
                            (addr as u32).wrapping_mul(0x9e37_79b1)
                        } else if shared {
                            self.shared_mem.read(addr)
                        } else {
                            self.global_mem.read(addr)
                        };
                    }
                    self.warps[w].regs.write_regular(reg, lanes);
                    self.write_accounting(seq, sc_idx, w, inst.pc, reg, cycle, true);
                }
            }
            Opcode::LDGSTS => {
                let dst = captured.first().map(|v| v[0]).unwrap_or([0; LANES]);
                let src = captured.get(1).map(|v| v[0]).unwrap_or([0; LANES]);
                let words = (inst.mem_width() / 32).max(1) as u64;
                for lane in 0..LANES {
                    if guard_mask & (1 << lane) == 0 {
                        continue;
                    }
                    for k in 0..words {
                        let v = self.global_mem.read(src[lane] as u64 + 4 * k);
                        self.shared_mem.write(dst[lane] as u64 + 4 * k, v);
                    }
                }
            }
            Opcode::CLOCK => {
                let dest = match &inst.dest {
                    Some(Operand::Reg { index, .. }) => *index,
                    _ => return,
                };
                let value = clock_value.unwrap_or(cycle as u32);
                self.warps[w].regs.write_regular(dest, [value; LANES]);
                self.write_accounting(seq, sc_idx, w, inst.pc, dest, cycle, false);
            }
            _ => {
                let inputs: Vec<LaneValues> =
                    captured.iter().map(|v| v.first().copied().unwrap_or([0; LANES])).collect();
                let outputs = execute_lanes(inst.opcode, &inputs);
                match &inst.dest {
                    Some(Operand::Reg { index, .. }) => {
                        let old = self.warps[w].regs.read_regular(*index);
                        let merged = merge_masked(old, outputs, guard_mask);
                        self.warps[w].regs.write_regular(*index, merged);
                        self.write_accounting(seq, sc_idx, w, inst.pc, *index, cycle, false);
                    }
                    Some(Operand::UReg { index }) => {
                        self.warps[w].regs.write_uniform(*index, outputs[0]);
                        let reg = ArchReg::Uniform(*index);
                        if !reg.is_constant() {
                            self.accesses.push(RegAccess {
                                seq,
                                warp: w,
                                pc: inst.pc,
                                reg,
                                kind: AccessKind::Write,
                                cycle,
                            });
                            if self.use_scoreboard {
                                self.warps[w].scoreboard.clear_write(reg);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        let pc = inst.pc;
        self.note(sc_idx, Some(w), Some(pc), "commit", String::new());
    }

    /// Regular-register write bookkeeping: write-port accounting through
    /// the result queue, hazard-monitor record, scoreboard clear.
    #[allow(clippy::too_many_arguments)]
    fn write_accounting(
        &mut self,
        seq: u64,
        sc_idx: usize,
        w: usize,
        pc: u64,
        reg: u8,
        cycle: u64,
        is_load: bool,
    ) {
        let reg_key = ArchReg::Regular(reg);
        if reg_key.is_constant() {
            return;
        }
        let bank = bank_of(reg, self.cfg.bank_map) as usize;
        self.subcores[sc_idx].rqueues[bank].schedule_write(cycle, is_load);
        self.accesses.push(RegAccess {
            seq,
            warp: w,
            pc,
            reg: reg_key,
            kind: AccessKind::Write,
            cycle,
        });
        if self.use_scoreboard {
            self.warps[w].scoreboard.clear_write(reg_key);
        }
    }

    fn finish(self) -> RunResult {
        let total_cycles = self.cycle;
        for w in &self.warps {
            debug_assert!(w.counters.all_zero(), "counter conservation violated");
            debug_assert!(!self.use_scoreboard || w.scoreboard.is_empty());
        }

        let mut bubbles: BTreeMap<String, u64> = BTreeMap::new();
        let mut per_subcore = Vec::new();
        for sc in &self.subcores {
            let recorded: u64 = sc.bubbles.values().sum();
            debug_assert_eq!(sc.issued + recorded, total_cycles, "issue accounting must close");
            for (k, v) in &sc.bubbles {
                *bubbles.entry((*k).to_string()).or_default() += *v;
            }
            per_subcore.push(SubcoreStats { issued: sc.issued, bubbles: recorded });
        }

        let stats = RunStats {
            total_cycles,
            instructions_issued: self.warps.iter().map(|w| w.issued).sum(),
            issued_per_warp: self.warps.iter().map(|w| w.issued).collect(),
            bubbles,
            per_subcore,
            rfc_hits: self.subcores.iter().map(|s| s.rfc.hits).sum(),
            rfc_misses: self.subcores.iter().map(|s| s.rfc.misses).sum(),
            allocate_hold_cycles: self.allocate_hold_total,
            load_write_delays: self
                .subcores
                .iter()
                .flat_map(|s| s.rqueues.iter())
                .map(|q| q.load_write_delays)
                .sum(),
            lsu_block_cycles: self
                .subcores
                .iter()
                .map(|s| s.bubbles.get("lsu").copied().unwrap_or(0))
                .sum(),
            icache_demand_misses: self.subcores.iter().map(|s| s.frontend.demand_misses).sum(),
            prefetch_requests: self.subcores.iter().map(|s| s.frontend.stream.issued).sum(),
            prefetch_fills: self.subcores.iter().map(|s| s.frontend.prefetch_fills).sum(),
            const_fl_misses: self.subcores.iter().map(|s| s.consts.fl_misses).sum(),
            shared_grants: self.shared_pipe.grants_per_subcore.clone(),
        };

        let registers = self
            .warps
            .iter()
            .map(|w| WarpRegDump {
                warp: w.id,
                regular: w
                    .regs
                    .regular
                    .iter()
                    .filter(|(_, v)| v.iter().any(|x| *x != 0))
                    .map(|(k, v)| (*k, v.to_vec()))
                    .collect(),
                uniform: w
                    .regs
                    .uniform
                    .iter()
                    .filter(|(_, v)| **v != 0)
                    .map(|(k, v)| (*k, *v))
                    .collect(),
                predicate: w
                    .regs
                    .predicate
                    .iter()
                    .filter(|(_, v)| **v != 0)
                    .map(|(k, v)| (*k, *v))
                    .collect(),
            })
            .collect();

        let diagnostics =
            if self.use_scoreboard { Vec::new() } else { hazard_monitor(&self.accesses) };

        RunResult {
            config: self.cfg,
            stats,
            events: self.timeline,
            registers,
            diagnostics,
            clocks: self.clocks,
        }
    }
}

/// Fetch-scheduler policy: serve the warp that issued most recently, then
/// the youngest warp with room. The real fetch policy could not be
/// observed directly; this reconstruction is deliberately isolated so an
/// alternative can be swapped in.
fn fetch_policy_order(warps: &[usize], last_issued: Option<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::new();
    if let Some(last) = last_issued {
        order.push(last);
    }
    let mut rest = warps.to_vec();
    rest.sort_unstable_by(|a, b| b.cmp(a));
    for w in rest {
        if !order.contains(&w) {
            order.push(w);
        }
    }
    order
}

/// Difference between two captured CLOCK values of one warp, by capture
/// index in program order.
pub fn measure_clock_delta(
    result: &RunResult,
    warp: usize,
    first: usize,
    second: usize,
) -> Result<i64, String> {
    let caps: Vec<&ClockCapture> = result.clocks.iter().filter(|c| c.warp == warp).collect();
    let a = caps.get(first).ok_or_else(|| format!("warp {warp} has no CLOCK capture {first}"))?;
    let b = caps.get(second).ok_or_else(|| format!("warp {warp} has no CLOCK capture {second}"))?;
    Ok(b.value as i64 - a.value as i64)
}

/// Run one configuration axis over a list of values; one result per value,
/// in order.
pub fn sweep(
    axis: &str,
    values: &[String],
    program: &Program,
    base: &SmConfig,
) -> Result<Vec<(String, RunStats)>, String> {
    if values.is_empty() {
        return Err("sweep needs at least one value".into());
    }
    let mut out = Vec::new();
    for v in values {
        let mut cfg = base.clone();
        apply_axis(&mut cfg, axis, v)?;
        let result = run(program, &cfg).map_err(|e| e.to_string())?;
        out.push((v.clone(), result.stats));
    }
    Ok(out)
}

/// Interpret one sweep axis value, with the prefetch axis accepting the
/// special `none` and `perfect` points.
pub fn apply_axis(cfg: &mut SmConfig, axis: &str, value: &str) -> Result<(), String> {
    if axis == "prefetch.depth" {
        match value {
            "none" => cfg.prefetch_kind = PrefetchKind::None,
            "perfect" => cfg.perfect_icache = true,
            n => {
                cfg.prefetch_kind = PrefetchKind::Stream;
                cfg.prefetch_depth = n.parse().map_err(|_| format!("bad depth value `{n}`"))?;
            }
        }
        return Ok(());
    }
    cfg.set(axis, value).map_err(|e| e.to_string())
}
