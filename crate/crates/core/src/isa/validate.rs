use super::latency::{LatencyClass, LatencyTable};
use super::types::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

/// One linter or runtime-monitor finding. Diagnostics are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub pc: u64,
    pub kind: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pc: u64, kind: &str, message: String) -> Self {
        Diagnostic { severity: Severity::Error, pc, kind: kind.to_string(), message }
    }

    pub fn warning(pc: u64, kind: &str, message: String) -> Self {
        Diagnostic { severity: Severity::Warning, pc, kind: kind.to_string(), message }
    }
}

/// Architectural register key used for hazard tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArchReg {
    Regular(u8),
    Uniform(u8),
    Pred(u8),
    UPred(u8),
}

impl ArchReg {
    /// Constant registers (RZ and friends) never carry hazards.
    pub fn is_constant(&self) -> bool {
        matches!(
            self,
            ArchReg::Regular(REG_RZ) | ArchReg::Uniform(UREG_URZ) | ArchReg::Pred(7) | ArchReg::UPred(7)
        )
    }
}

fn operand_regs(op: &Operand) -> Vec<ArchReg> {
    match op {
        Operand::Reg { .. } => op.reg_indices().into_iter().map(ArchReg::Regular).collect(),
        Operand::UReg { index } => vec![ArchReg::Uniform(*index)],
        Operand::Pred { index } => vec![ArchReg::Pred(*index)],
        Operand::UPred { index } => vec![ArchReg::UPred(*index)],
        Operand::ConstRef { addr, .. } => match addr {
            ConstAddr::Regular(r) => vec![ArchReg::Regular(*r)],
            ConstAddr::Uniform(u) => vec![ArchReg::Uniform(*u)],
            ConstAddr::ImmediateOffset => vec![],
        },
        _ => vec![],
    }
}

/// Registers an instruction reads, hazard-relevant only.
pub fn regs_read(inst: &Instruction) -> Vec<ArchReg> {
    let mut v: Vec<ArchReg> = Vec::new();
    for op in inst.read_operands() {
        v.extend(operand_regs(op).into_iter().filter(|r| !r.is_constant()));
    }
    if let Some((_, p)) = &inst.guard {
        v.extend(operand_regs(p).into_iter().filter(|r| !r.is_constant()));
    }
    v
}

/// Registers an instruction writes, hazard-relevant only.
pub fn regs_written(inst: &Instruction) -> Vec<ArchReg> {
    match &inst.dest {
        Some(d) => operand_regs(d).into_iter().filter(|r| !r.is_constant()).collect(),
        None => vec![],
    }
}

/// Guaranteed issue-distance contribution of one instruction under the
/// stall/yield rules: a warp that issues an instruction with stall `s`
/// becomes eligible again `s + 1` cycles later (`1` cycle when `s` is 0,
/// 2 when only yield is set).
fn issue_gap(c: &ControlBits) -> u64 {
    if c.stall == 0 && c.yield_flag {
        2
    } else {
        c.stall as u64 + 1
    }
}

/// Static hazard linter. Checks that the control bits of a straight-line
/// program provably cover every producer/consumer latency, mirroring the
/// compiler's obligations that the hardware itself never re-checks.
pub fn validate_program(prog: &Program, table: &LatencyTable) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let insts = &prog.instructions;

    // Table coverage and per-instruction shape checks.
    let mut classes: Vec<Option<LatencyClass>> = Vec::with_capacity(insts.len());
    for inst in insts {
        match table.lookup(inst) {
            Ok(c) => classes.push(Some(c)),
            Err(e) => {
                diags.push(Diagnostic::error(inst.pc, "missing_latency", e.to_string()));
                classes.push(None);
            }
        }
        if let (Some(w), Some(r)) = (inst.control.write_barrier, inst.control.read_barrier) {
            if w == r {
                diags.push(Diagnostic::warning(
                    inst.pc,
                    "shared_counter",
                    format!("SB{w} is used for both write-back and read release"),
                ));
            }
        }
    }

    // Consecutive CLOCKs are not issueable on the modeled hardware.
    for pair in insts.windows(2) {
        if pair[0].opcode == Opcode::CLOCK && pair[1].opcode == Opcode::CLOCK {
            diags.push(Diagnostic::error(
                pair[1].pc,
                "clock_consecutive",
                "two CLOCK instructions cannot issue back to back".into(),
            ));
        }
    }

    // Fixed-latency RAW/WAW coverage via stall chains.
    for (p_idx, p) in insts.iter().enumerate() {
        let latency = match classes.get(p_idx).and_then(|c| *c) {
            Some(LatencyClass::Fixed(l)) => l as u64,
            _ => continue,
        };
        let written = regs_written(p);
        if written.is_empty() {
            continue;
        }
        let mut dist: u64 = issue_gap(&p.control);
        let mut live: Vec<ArchReg> = written.clone();
        for (c_idx, c) in insts.iter().enumerate().skip(p_idx + 1) {
            if live.is_empty() || dist >= latency + 4 {
                break;
            }
            let reads = regs_read(c);
            let writes = regs_written(c);
            for r in &live {
                if reads.contains(r) && dist < latency {
                    diags.push(Diagnostic::error(
                        c.pc,
                        "raw_uncovered",
                        format!(
                            "consumes {:?} only {} cycle(s) after its producer at pc 0x{:x} (latency {})",
                            r, dist, p.pc, latency
                        ),
                    ));
                }
                if writes.contains(r) {
                    if let Some(LatencyClass::Fixed(lc)) = classes.get(c_idx).and_then(|x| *x) {
                        let need = (latency + 1).saturating_sub(lc as u64);
                        if dist < need {
                            diags.push(Diagnostic::error(
                                c.pc,
                                "waw_uncovered",
                                format!(
                                    "overwrites {:?} only {} cycle(s) after its producer at pc 0x{:x}",
                                    r, dist, p.pc
                                ),
                            ));
                        }
                    }
                }
            }
            // A rewrite ends the dependence chain for that register.
            live.retain(|r| !writes.contains(r));
            dist += issue_gap(&c.control);
        }
    }

    // Short-window WAR against fixed-latency readers: a very short-latency
    // writer (CLOCK) can commit before an older reader's operand capture.
    for (q_idx, q) in insts.iter().enumerate() {
        let reads = regs_read(q);
        if reads.is_empty() {
            continue;
        }
        let mut dist: u64 = issue_gap(&q.control);
        for (c_idx, c) in insts.iter().enumerate().skip(q_idx + 1) {
            if dist >= 3 {
                break;
            }
            if let Some(LatencyClass::Fixed(lc)) = classes.get(c_idx).and_then(|x| *x) {
                for r in regs_written(c) {
                    if reads.contains(&r) && dist + (lc as u64) <= 3 {
                        diags.push(Diagnostic::error(
                            c.pc,
                            "war_uncovered",
                            format!(
                                "overwrites {:?} before the reader at pc 0x{:x} captures it",
                                r, q.pc
                            ),
                        ));
                    }
                }
            }
            dist += issue_gap(&c.control);
        }
    }

    // Variable-latency coverage through dependence counters.
    variable_latency_checks(insts, &classes, &mut diags);

    diags.sort_by(|a, b| (a.pc, &a.kind).cmp(&(b.pc, &b.kind)));
    diags
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PendKind {
    WriteBack,
    ReadRelease,
}

fn variable_latency_checks(
    insts: &[Instruction],
    classes: &[Option<LatencyClass>],
    diags: &mut Vec<Diagnostic>,
) {
    // pending[k]: instruction indices holding an un-waited increment of SBk.
    let mut pending: [Vec<(usize, PendKind)>; 6] = Default::default();
    // released[i] per kind: the wait that cleared it has already ordered us
    // after the release event.
    let mut wb_released: Vec<bool> = vec![false; insts.len()];
    let mut rd_released: Vec<bool> = vec![false; insts.len()];
    let mut last_writer: BTreeMap<ArchReg, usize> = BTreeMap::new();
    let mut readers: BTreeMap<ArchReg, Vec<usize>> = BTreeMap::new();

    for (i, inst) in insts.iter().enumerate() {
        // Counters this instruction is guaranteed to observe as zero.
        let mut cleared: Vec<u8> = inst.control.wait_counters().collect();
        if let Some(d) = &inst.depbar {
            if d.threshold == 0 {
                cleared.push(d.counter);
            }
            cleared.extend(d.extra.iter().copied());
        }

        // The increment of the immediately preceding instruction only
        // becomes visible one cycle after its issue.
        if i > 0 {
            let prev = &insts[i - 1];
            let prev_incs: Vec<u8> =
                prev.control.write_barrier.iter().chain(prev.control.read_barrier.iter()).copied().collect();
            if cleared.iter().any(|k| prev_incs.contains(k))
                && prev.control.stall < 2
                && !prev.control.yield_flag
            {
                diags.push(Diagnostic::error(
                    inst.pc,
                    "distance1_visibility",
                    format!(
                        "waits on a counter incremented by the previous instruction (pc 0x{:x}), which needs stall >= 2 or yield",
                        prev.pc
                    ),
                ));
            }
        }

        for k in &cleared {
            for (idx, kind) in pending[*k as usize].drain(..) {
                match kind {
                    PendKind::WriteBack => wb_released[idx] = true,
                    PendKind::ReadRelease => rd_released[idx] = true,
                }
            }
        }

        let variable = matches!(classes.get(i).and_then(|c| *c), Some(LatencyClass::Memory(_)));

        // RAW/WAW against variable-latency producers.
        let reads = regs_read(inst);
        let writes = regs_written(inst);
        for r in reads.iter().chain(writes.iter()) {
            if let Some(&p) = last_writer.get(r) {
                let p_inst = &insts[p];
                let p_variable =
                    matches!(classes.get(p).and_then(|c| *c), Some(LatencyClass::Memory(_)));
                if p_variable && !wb_released[p] {
                    let kind = if reads.contains(r) { "raw_unwaited" } else { "waw_unwaited" };
                    let detail = match p_inst.control.write_barrier {
                        None => format!(
                            "variable-latency producer at pc 0x{:x} sets no write barrier for {:?}",
                            p_inst.pc, r
                        ),
                        Some(wb) => format!(
                            "depends on {:?} from pc 0x{:x} without waiting on SB{wb}",
                            r, p_inst.pc
                        ),
                    };
                    diags.push(Diagnostic::error(inst.pc, kind, detail));
                }
            }
        }

        // WAR against variable-latency readers still holding the register.
        for r in &writes {
            if let Some(rs) = readers.get(r) {
                for &q in rs {
                    let q_inst = &insts[q];
                    let q_variable =
                        matches!(classes.get(q).and_then(|c| *c), Some(LatencyClass::Memory(_)));
                    if !q_variable {
                        continue;
                    }
                    let safe = rd_released[q] || wb_released[q];
                    if !safe {
                        let detail = if q_inst.control.read_barrier.is_none()
                            && q_inst.control.write_barrier.is_none()
                        {
                            format!(
                                "variable-latency reader at pc 0x{:x} sets no barrier protecting {:?}",
                                q_inst.pc, r
                            )
                        } else {
                            format!(
                                "overwrites {:?} still being read by pc 0x{:x} (wait on its barrier first)",
                                r, q_inst.pc
                            )
                        };
                        diags.push(Diagnostic::error(inst.pc, "war_unwaited", detail));
                    }
                }
            }
        }

        // Record this instruction's effects.
        if variable || inst.control.write_barrier.is_some() || inst.control.read_barrier.is_some() {
            if let Some(w) = inst.control.write_barrier {
                pending[w as usize].push((i, PendKind::WriteBack));
            }
            if let Some(rb) = inst.control.read_barrier {
                pending[rb as usize].push((i, PendKind::ReadRelease));
            }
        }
        for r in reads {
            readers.entry(r).or_default().push(i);
        }
        for r in writes {
            last_writer.insert(r, i);
            readers.remove(&r);
        }
    }
}
