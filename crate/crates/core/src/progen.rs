//! Deterministic generator of hazard-correct mini-SASS programs, used by
//! the mechanism-equivalence property test and the synthetic benchmark
//! kernels. The control bits it assigns must always satisfy the static
//! linter; tests assert that.

use crate::isa::{
    encode_program, parse_program, ControlBits, Instruction, Opcode, Operand, Program,
};

/// Small deterministic PRNG (xorshift64*), stable across platforms.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn step(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.step() % n.max(1)
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub seed: u64,
    /// Number of generated body instructions (EXIT is appended).
    pub len: usize,
    /// Percentage of memory instructions.
    pub memory_pct: u64,
    /// Emit RFC reuse bits on repeated operands.
    pub reuse: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { seed: 1, len: 40, memory_pct: 30, reuse: false }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ProducerKind {
    Fixed(u32),
    Variable,
}

#[derive(Clone, Copy)]
struct Producer {
    idx: usize,
    kind: ProducerKind,
    write_barrier: Option<u8>,
}

#[derive(Clone, Copy)]
struct Reader {
    idx: usize,
    read_barrier: Option<u8>,
    write_barrier: Option<u8>,
    variable: bool,
}

/// Generate one validated program. Register pools: values in R1-R40,
/// addresses in R48-R79, memory addresses unique per instruction so that
/// no load ever aliases a store.
pub fn generate(params: &GenParams) -> Program {
    let mut rng = Rng::new(params.seed);
    let mut insts: Vec<Instruction> = Vec::new();
    let mut last_writer: Vec<Option<Producer>> = vec![None; 256];
    let mut readers: Vec<Vec<Reader>> = vec![Vec::new(); 256];
    // Per emitted instruction: write-back release observed / source-read
    // release observed (distinct, like the linter tracks them).
    let mut retired: Vec<(bool, bool)> = Vec::new();
    let mut pending: [Vec<(usize, bool)>; 6] = Default::default();
    let mut next_wb = 0u8;
    let mut next_rb = 3u8;
    let mut next_addr: u32 = 0x1000;

    let value_reg = |rng: &mut Rng| 1 + rng.below(40) as u8;
    let addr_reg = |rng: &mut Rng| 48 + rng.below(32) as u8;

    let mut emit = |insts: &mut Vec<Instruction>,
                    retired: &mut Vec<(bool, bool)>,
                    pending: &mut [Vec<(usize, bool)>; 6],
                    last_writer: &mut Vec<Option<Producer>>,
                    readers: &mut Vec<Vec<Reader>>,
                    opcode: Opcode,
                    width: Option<u8>,
                    dest: Option<u8>,
                    srcs: Vec<Operand>,
                    addrs: Vec<u8>,
                    kind: ProducerKind| {
        let idx = insts.len();
        let mut inst = Instruction::new(16 * idx as u64, opcode);
        inst.width = width;
        let mut mask = 0u8;
        let mut src_regs: Vec<u8> = Vec::new();
        for s in &srcs {
            if let Operand::Reg { index, .. } = s {
                src_regs.push(*index);
            }
        }
        src_regs.extend(addrs.iter().copied());

        // RAW against variable-latency producers of every source.
        for r in &src_regs {
            if let Some(p) = last_writer[*r as usize] {
                if p.kind == ProducerKind::Variable && !retired[p.idx].0 {
                    if let Some(wb) = p.write_barrier {
                        mask |= 1 << wb;
                    }
                }
            }
        }
        let dest_regs: Vec<u8> = match (dest, width) {
            (Some(d), Some(64)) => vec![d, d + 1],
            (Some(d), Some(128)) => vec![d, d + 1, d + 2, d + 3],
            (Some(d), _) => vec![d],
            (None, _) => vec![],
        };
        // WAW against variable producers and WAR against variable readers.
        for d in &dest_regs {
            if let Some(p) = last_writer[*d as usize] {
                if p.kind == ProducerKind::Variable && !retired[p.idx].0 {
                    if let Some(wb) = p.write_barrier {
                        mask |= 1 << wb;
                    }
                }
            }
            for rd in &readers[*d as usize] {
                if rd.variable && !(retired[rd.idx].0 || retired[rd.idx].1) {
                    if let Some(rb) = rd.read_barrier.or(rd.write_barrier) {
                        mask |= 1 << rb;
                    }
                }
            }
        }

        inst.control = ControlBits { wait_mask: mask, ..ControlBits::default() };
        // A waited counter retires everything currently pending on it,
        // write-back releases and read releases separately.
        for k in 0..6u8 {
            if mask & (1 << k) != 0 {
                for (idx, is_wb) in pending[k as usize].drain(..) {
                    if is_wb {
                        retired[idx].0 = true;
                    } else {
                        retired[idx].1 = true;
                    }
                }
            }
        }

        match kind {
            ProducerKind::Variable => {
                let wb = if opcode.is_store() {
                    None
                } else {
                    let b = next_wb;
                    next_wb = (next_wb + 1) % 3;
                    Some(b)
                };
                let rb = {
                    let b = next_rb;
                    next_rb = 3 + (next_rb + 1 - 3) % 3;
                    Some(b)
                };
                inst.control.write_barrier = wb;
                inst.control.read_barrier = rb;
                if let Some(b) = wb {
                    pending[b as usize].push((idx, true));
                }
                if let Some(b) = rb {
                    pending[b as usize].push((idx, false));
                }
            }
            ProducerKind::Fixed(_) => {}
        }

        inst.dest = dest.map(|d| Operand::Reg {
            index: d,
            width_regs: width.map_or(1, |w| (w / 32).max(1)),
            reuse: false,
        });
        inst.sources = srcs;
        for a in &addrs {
            inst.addrs.push(Operand::Reg { index: *a, width_regs: 1, reuse: false });
        }
        retired.push((false, false));
        for r in src_regs {
            readers[r as usize].push(Reader {
                idx,
                read_barrier: inst.control.read_barrier,
                write_barrier: inst.control.write_barrier,
                variable: kind == ProducerKind::Variable,
            });
        }
        for d in dest_regs {
            last_writer[d as usize] = Some(Producer {
                idx,
                kind,
                write_barrier: inst.control.write_barrier,
            });
            readers[d as usize].clear();
        }
        insts.push(inst);
    };

    for _ in 0..params.len {
        if rng.chance(params.memory_pct) {
            // Memory instruction with a unique address materialized first.
            let a = addr_reg(&mut rng);
            let addr_val = next_addr;
            next_addr += 0x100;
            emit(
                &mut insts,
                &mut retired,
                &mut pending,
                &mut last_writer,
                &mut readers,
                Opcode::MOV,
                None,
                Some(a),
                vec![Operand::Imm { bits: addr_val }],
                vec![],
                ProducerKind::Fixed(4),
            );
            match rng.below(4) {
                0 => {
                    let d = value_reg(&mut rng);
                    emit(
                        &mut insts,
                        &mut retired,
                        &mut pending,
                        &mut last_writer,
                        &mut readers,
                        Opcode::LDG,
                        Some(32),
                        Some(d),
                        vec![],
                        vec![a],
                        ProducerKind::Variable,
                    );
                }
                1 => {
                    let d = value_reg(&mut rng);
                    emit(
                        &mut insts,
                        &mut retired,
                        &mut pending,
                        &mut last_writer,
                        &mut readers,
                        Opcode::LDS,
                        Some(32),
                        Some(d),
                        vec![],
                        vec![a],
                        ProducerKind::Variable,
                    );
                }
                2 => {
                    let v = value_reg(&mut rng);
                    emit(
                        &mut insts,
                        &mut retired,
                        &mut pending,
                        &mut last_writer,
                        &mut readers,
                        Opcode::STG,
                        Some(32),
                        None,
                        vec![Operand::Reg { index: v, width_regs: 1, reuse: false }],
                        vec![a],
                        ProducerKind::Variable,
                    );
                }
                _ => {
                    let v = value_reg(&mut rng);
                    emit(
                        &mut insts,
                        &mut retired,
                        &mut pending,
                        &mut last_writer,
                        &mut readers,
                        Opcode::STS,
                        Some(32),
                        None,
                        vec![Operand::Reg { index: v, width_regs: 1, reuse: false }],
                        vec![a],
                        ProducerKind::Variable,
                    );
                }
            }
        } else {
            let op = match rng.below(5) {
                0 => Opcode::FFMA,
                1 => Opcode::FADD,
                2 => Opcode::FMUL,
                3 => Opcode::IADD3,
                _ => Opcode::IMAD,
            };
            let nsrc = match op {
                Opcode::FFMA | Opcode::IADD3 | Opcode::IMAD => 3,
                _ => 2,
            };
            let d = value_reg(&mut rng);
            let mut srcs = Vec::new();
            for _ in 0..nsrc {
                if rng.chance(20) {
                    srcs.push(Operand::Imm { bits: rng.below(1 << 20) as u32 });
                } else {
                    srcs.push(Operand::Reg {
                        index: value_reg(&mut rng),
                        width_regs: 1,
                        reuse: false,
                    });
                }
            }
            emit(
                &mut insts,
                &mut retired,
                &mut pending,
                &mut last_writer,
                &mut readers,
                op,
                None,
                Some(d),
                srcs,
                vec![],
                ProducerKind::Fixed(4),
            );
        }
    }
    insts.push(Instruction::new(16 * insts.len() as u64, Opcode::EXIT));

    assign_stalls(&mut insts);
    let prog = Program { base: 0, instructions: insts, hazards_hint: None };
    // Round through the canonical text form so generated programs are
    // bit-identical to their parsed representation.
    parse_program(&encode_program(&prog)).expect("generated program parses")
}

/// Stall assignment pass: cover fixed-latency RAW/WAW chains and the
/// one-cycle visibility of dependence-counter increments.
fn assign_stalls(insts: &mut [Instruction]) {
    let table = crate::isa::LatencyTable::builtin();
    let n = insts.len();
    for i in 0..n {
        let (latency, variable) = match table.lookup(&insts[i]) {
            Ok(crate::isa::LatencyClass::Fixed(l)) => (l as u64, false),
            Ok(crate::isa::LatencyClass::Memory(_)) => (0, true),
            Err(_) => (4, false),
        };
        if variable {
            // The next instruction may wait on a counter this one bumps;
            // the increment needs a cycle to become visible.
            if let Some(next) = insts.get(i + 1) {
                let incs: Vec<u8> = insts[i]
                    .control
                    .write_barrier
                    .iter()
                    .chain(insts[i].control.read_barrier.iter())
                    .copied()
                    .collect();
                if next.control.wait_counters().any(|k| incs.contains(&k))
                    && insts[i].control.stall < 2
                {
                    insts[i].control.stall = 2;
                }
            }
            continue;
        }
        let written = crate::isa::validate::regs_written(&insts[i]);
        if written.is_empty() {
            continue;
        }
        // Effective distance to the first dependent instruction.
        let mut dist = gap(&insts[i]);
        let mut live = written;
        for j in i + 1..n {
            if live.is_empty() || dist >= latency {
                break;
            }
            let reads = crate::isa::validate::regs_read(&insts[j]);
            let writes = crate::isa::validate::regs_written(&insts[j]);
            let depends = live.iter().any(|r| reads.contains(r) || writes.contains(r));
            if depends {
                let deficit = latency - dist;
                let s = insts[i].control.stall as u64 + deficit;
                insts[i].control.stall = s.min(15) as u8;
                break;
            }
            live.retain(|r| !writes.contains(r));
            dist += gap(&insts[j]);
        }
    }
}

fn gap(inst: &Instruction) -> u64 {
    if inst.control.stall == 0 && inst.control.yield_flag {
        2
    } else {
        inst.control.stall as u64 + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{validate_program, LatencyTable, Severity};

    #[test]
    fn generated_programs_pass_the_linter() {
        for seed in 1..40 {
            let p = generate(&GenParams { seed, len: 30, memory_pct: 35, reuse: false });
            let errs: Vec<_> = validate_program(&p, &LatencyTable::builtin())
                .into_iter()
                .filter(|d| d.severity == Severity::Error)
                .collect();
            assert!(errs.is_empty(), "seed {seed}: {errs:?}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&GenParams { seed: 7, ..Default::default() });
        let b = generate(&GenParams { seed: 7, ..Default::default() });
        assert_eq!(a, b);
        let c = generate(&GenParams { seed: 8, ..Default::default() });
        assert_ne!(a, c);
    }

    #[test]
    fn generated_program_ends_with_exit() {
        let p = generate(&GenParams::default());
        assert_eq!(p.instructions.last().unwrap().opcode, Opcode::EXIT);
    }
}
