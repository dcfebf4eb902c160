use super::types::*;
use std::fmt::Write;

/// Emit a program in canonical mini-SASS text. `parse_program` of the
/// result reproduces the instruction list exactly.
pub fn encode_program(prog: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".base 0x{:x}", prog.base);
    if let Some(h) = &prog.hazards_hint {
        let _ = writeln!(out, ".hazards {h}");
    }
    for inst in &prog.instructions {
        let _ = writeln!(out, "{}", encode_instruction(inst));
    }
    out
}

pub fn encode_instruction(inst: &Instruction) -> String {
    let mut s = String::new();
    let c = &inst.control;
    s.push_str("[B");
    for i in 0..6 {
        if c.wait_mask & (1 << i) != 0 {
            s.push(char::from_digit(i, 10).unwrap());
        } else {
            s.push('-');
        }
    }
    let bar = |b: Option<u8>| b.map_or('-', |v| char::from_digit(v as u32, 10).unwrap());
    let _ = write!(
        s,
        ":R{}:W{}:Y{}:S{:02}] ",
        bar(c.read_barrier),
        bar(c.write_barrier),
        if c.yield_flag { '1' } else { '0' },
        c.stall
    );

    if let Some((neg, p)) = &inst.guard {
        s.push('@');
        if *neg {
            s.push('!');
        }
        s.push_str(&operand(p));
        s.push(' ');
    }

    s.push_str(inst.opcode.mnemonic());
    if matches!(inst.opcode, Opcode::LDG | Opcode::STG | Opcode::LDGSTS) {
        s.push_str(".E");
    }
    if inst.opcode == Opcode::DEPBAR {
        s.push_str(".LE");
    }
    if let Some(w) = inst.width {
        let _ = write!(s, ".{w}");
    }

    let mut ops: Vec<String> = Vec::new();
    match inst.opcode {
        Opcode::STG | Opcode::STS => {
            ops.push(format!("[{}]", operand(&inst.addrs[0])));
            ops.push(operand(&inst.sources[0]));
        }
        Opcode::LDGSTS => {
            for a in &inst.addrs {
                ops.push(format!("[{}]", operand(a)));
            }
        }
        Opcode::BRA => {
            ops.push(format!("0x{:x}", inst.target.unwrap_or(0)));
        }
        Opcode::DEPBAR => {
            let d = inst.depbar.as_ref().expect("DEPBAR args");
            ops.push(format!("SB{}", d.counter));
            ops.push(format!("0x{:x}", d.threshold));
            if !d.extra.is_empty() {
                let ids: Vec<String> = d.extra.iter().map(|e| e.to_string()).collect();
                ops.push(format!("{{{}}}", ids.join(",")));
            }
        }
        _ => {
            if let Some(d) = &inst.dest {
                ops.push(operand(d));
            }
            for src in &inst.sources {
                ops.push(operand(src));
            }
            for a in &inst.addrs {
                ops.push(format!("[{}]", operand(a)));
            }
        }
    }
    if !ops.is_empty() {
        s.push(' ');
        s.push_str(&ops.join(", "));
    }
    s.push_str(" ;");
    s
}

fn operand(op: &Operand) -> String {
    match op {
        Operand::Reg { index, reuse, .. } => {
            let base = if *index == REG_RZ { "RZ".to_string() } else { format!("R{index}") };
            if *reuse {
                format!("{base}.reuse")
            } else {
                base
            }
        }
        Operand::UReg { index } => {
            if *index == UREG_URZ {
                "URZ".to_string()
            } else {
                format!("UR{index}")
            }
        }
        Operand::Pred { index } => {
            if *index == 7 {
                "PT".to_string()
            } else {
                format!("P{index}")
            }
        }
        Operand::UPred { index } => {
            if *index == 7 {
                "UPT".to_string()
            } else {
                format!("UP{index}")
            }
        }
        Operand::BReg { index } => format!("B{index}"),
        Operand::Special { index } => format!("SR{index}"),
        Operand::Imm { bits } => format!("0x{bits:x}"),
        Operand::ConstRef { bank, offset, addr } => match addr {
            ConstAddr::ImmediateOffset => format!("c[0x{bank:x}][0x{offset:x}]"),
            ConstAddr::Regular(r) => format!("c[0x{bank:x}][R{r}]"),
            ConstAddr::Uniform(u) => format!("c[0x{bank:x}][UR{u}]"),
        },
    }
}
