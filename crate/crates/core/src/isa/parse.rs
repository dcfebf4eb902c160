use super::types::*;
use std::fmt;

/// Syntax or range error with source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.pos + 1, msg: msg.into() }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with([' ', '\t']) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.rest().chars().next() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.text[start..self.pos]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.text.len()
    }
}

fn parse_uint(cur: &mut Cursor, what: &str) -> Result<u64, ParseError> {
    let s = cur.take_while(|c| c.is_ascii_alphanumeric() || c == 'x' || c == 'X');
    if s.is_empty() {
        return Err(cur.err(format!("expected {what}")));
    }
    let v = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        s.parse::<u64>()
    };
    v.map_err(|_| cur.err(format!("invalid {what}: `{s}`")))
}

fn reg_index(cur: &mut Cursor, prefix: &str, max: u8, name: &str) -> Result<u8, ParseError> {
    let n = parse_uint(cur, &format!("{name} index"))?;
    if n > max as u64 {
        return Err(cur.err(format!("{name} index {n} out of range (max {max}) after `{prefix}`")));
    }
    Ok(n as u8)
}

/// Parse one register-like operand token (no brackets, no immediates).
fn parse_reg_operand(cur: &mut Cursor) -> Result<Operand, ParseError> {
    if cur.eat("RZ") {
        return Ok(Operand::Reg { index: REG_RZ, width_regs: 1, reuse: false });
    }
    if cur.eat("URZ") {
        return Ok(Operand::UReg { index: UREG_URZ });
    }
    if cur.eat("UPT") {
        return Ok(Operand::UPred { index: 7 });
    }
    if cur.eat("PT") {
        return Ok(Operand::Pred { index: 7 });
    }
    if cur.eat("UR") {
        return Ok(Operand::UReg { index: reg_index(cur, "UR", 63, "uniform register")? });
    }
    if cur.eat("UP") {
        return Ok(Operand::UPred { index: reg_index(cur, "UP", 7, "uniform predicate")? });
    }
    if cur.eat("SR") {
        return Ok(Operand::Special { index: reg_index(cur, "SR", 255, "special register")? });
    }
    if cur.eat("R") {
        let index = reg_index(cur, "R", 255, "regular register")?;
        let reuse = cur.eat(".reuse");
        return Ok(Operand::Reg { index, width_regs: 1, reuse });
    }
    if cur.eat("P") {
        return Ok(Operand::Pred { index: reg_index(cur, "P", 7, "predicate")? });
    }
    if cur.eat("B") {
        return Ok(Operand::BReg { index: reg_index(cur, "B", 15, "B register")? });
    }
    Err(cur.err("expected register operand"))
}

fn parse_operand(cur: &mut Cursor) -> Result<Operand, ParseError> {
    cur.skip_ws();
    let c = cur.rest().chars().next().ok_or_else(|| cur.err("expected operand"))?;
    if c == 'c' && cur.rest().starts_with("c[") {
        cur.expect("c[")?;
        let bank = parse_uint(cur, "constant bank")?;
        if bank > 17 {
            return Err(cur.err(format!("constant bank {bank} out of range")));
        }
        cur.expect("]")?;
        cur.expect("[")?;
        let next = cur.rest().chars().next().unwrap_or(' ');
        let (offset, addr) = if next.is_ascii_digit() {
            (parse_uint(cur, "constant offset")? as u32, ConstAddr::ImmediateOffset)
        } else {
            let r = parse_reg_operand(cur)?;
            match r {
                Operand::Reg { index, .. } => (0, ConstAddr::Regular(index)),
                Operand::UReg { index } => (0, ConstAddr::Uniform(index)),
                _ => return Err(cur.err("constant address register must be R or UR")),
            }
        };
        cur.expect("]")?;
        return Ok(Operand::ConstRef { bank: bank as u8, offset, addr });
    }
    if c == '-' || c.is_ascii_digit() {
        let s = cur.take_while(|ch| {
            ch.is_ascii_alphanumeric() || ch == '.' || ch == '-' || ch == '+'
        });
        if s.contains('.') {
            let f: f32 = s.parse().map_err(|_| cur.err(format!("invalid float `{s}`")))?;
            return Ok(Operand::Imm { bits: f.to_bits() });
        }
        let bits = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            u32::from_str_radix(hex, 16).map_err(|_| cur.err(format!("invalid immediate `{s}`")))?
        } else {
            let v: i64 = s.parse().map_err(|_| cur.err(format!("invalid immediate `{s}`")))?;
            v as u32
        };
        return Ok(Operand::Imm { bits });
    }
    parse_reg_operand(cur)
}

fn parse_addr_operand(cur: &mut Cursor) -> Result<Operand, ParseError> {
    cur.skip_ws();
    cur.expect("[")?;
    let op = parse_reg_operand(cur)?;
    match op {
        Operand::Reg { .. } | Operand::UReg { .. } => {}
        _ => return Err(cur.err("address register must be R or UR")),
    }
    cur.expect("]")?;
    Ok(op)
}

/// Control-bits prefix `[B<mask6>:R<i|->:W<i|->:Y<0|1>:S<nn>]`.
fn parse_control(cur: &mut Cursor) -> Result<ControlBits, ParseError> {
    cur.expect("[B")?;
    let mut mask = 0u8;
    for i in 0..6u32 {
        let c = cur.rest().chars().next().ok_or_else(|| cur.err("truncated wait mask"))?;
        cur.pos += 1;
        if c == '-' {
            continue;
        }
        match c.to_digit(10) {
            Some(d) if d == i => mask |= 1 << i,
            Some(d) if d > 5 => return Err(cur.err(format!("wait-mask bit {d} out of range"))),
            Some(d) => {
                return Err(cur.err(format!("wait-mask digit {d} at position {i} (must be {i} or `-`)")))
            }
            None => return Err(cur.err(format!("invalid wait-mask character `{c}`"))),
        }
    }
    cur.expect(":R")?;
    let read_barrier = parse_barrier_idx(cur)?;
    cur.expect(":W")?;
    let write_barrier = parse_barrier_idx(cur)?;
    cur.expect(":Y")?;
    let y = cur.rest().chars().next().ok_or_else(|| cur.err("truncated yield flag"))?;
    cur.pos += 1;
    let yield_flag = match y {
        '0' => false,
        '1' => true,
        _ => return Err(cur.err("yield flag must be 0 or 1")),
    };
    cur.expect(":S")?;
    let digits = cur.take_while(|c| c.is_ascii_digit());
    if digits.len() != 2 {
        return Err(cur.err("stall count must be two digits"));
    }
    let stall: u8 = digits.parse().unwrap();
    if stall > 15 {
        return Err(cur.err(format!("stall count {stall} out of range (max 15)")));
    }
    cur.expect("]")?;
    Ok(ControlBits { stall, yield_flag, write_barrier, read_barrier, wait_mask: mask, reuse: [false; 4] })
}

fn parse_barrier_idx(cur: &mut Cursor) -> Result<Option<u8>, ParseError> {
    let c = cur.rest().chars().next().ok_or_else(|| cur.err("truncated barrier index"))?;
    cur.pos += 1;
    match c {
        '-' => Ok(None),
        d if d.is_ascii_digit() => {
            let v = d.to_digit(10).unwrap() as u8;
            if v > 5 {
                Err(cur.err(format!("barrier index {v} out of range (SB0-SB5)")))
            } else {
                Ok(Some(v))
            }
        }
        _ => Err(cur.err("barrier index must be a digit or `-`")),
    }
}

fn opcode_from_str(s: &str) -> Option<Opcode> {
    Some(match s {
        "FFMA" => Opcode::FFMA,
        "FADD" => Opcode::FADD,
        "FMUL" => Opcode::FMUL,
        "IADD3" => Opcode::IADD3,
        "IMAD" => Opcode::IMAD,
        "MOV" => Opcode::MOV,
        "NOP" => Opcode::NOP,
        "CLOCK" => Opcode::CLOCK,
        "BRA" => Opcode::BRA,
        "EXIT" => Opcode::EXIT,
        "BAR" => Opcode::BAR,
        "DEPBAR" => Opcode::DEPBAR,
        "LDG" => Opcode::LDG,
        "STG" => Opcode::STG,
        "LDS" => Opcode::LDS,
        "STS" => Opcode::STS,
        "LDC" => Opcode::LDC,
        "LDGSTS" => Opcode::LDGSTS,
        _ => return None,
    })
}

fn source_count(op: Opcode) -> usize {
    match op {
        Opcode::FFMA | Opcode::IADD3 | Opcode::IMAD => 3,
        Opcode::FADD | Opcode::FMUL => 2,
        Opcode::MOV => 1,
        _ => 0,
    }
}

/// Parse a mini-SASS program. Instructions receive pcs at a 16-byte stride
/// from the `.base` directive (default 0x0).
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut prog = Program::default();
    let mut saw_instruction = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let line = line.split("//").next().unwrap_or("").trim_end();
        let mut cur = Cursor { text: line, pos: 0, line: lineno + 1 };
        cur.skip_ws();
        if cur.at_end() {
            continue;
        }
        if cur.eat(".base") {
            if saw_instruction {
                return Err(cur.err(".base directive must precede instructions"));
            }
            cur.skip_ws();
            prog.base = parse_uint(&mut cur, "base address")?;
            if prog.base % 16 != 0 {
                return Err(cur.err("base address must be 16-byte aligned"));
            }
            continue;
        }
        if cur.eat(".hazards") {
            cur.skip_ws();
            let word = cur.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            prog.hazards_hint = Some(word.to_string());
            continue;
        }
        let pc = prog.base + 16 * prog.instructions.len() as u64;
        let inst = parse_instruction_line(&mut cur, pc)?;
        prog.instructions.push(inst);
        saw_instruction = true;
    }
    Ok(prog)
}

fn parse_instruction_line(cur: &mut Cursor, pc: u64) -> Result<Instruction, ParseError> {
    let control = if cur.rest().starts_with("[B") {
        let c = parse_control(cur)?;
        cur.skip_ws();
        c
    } else {
        ControlBits::default()
    };

    let guard = if cur.eat("@") {
        let neg = cur.eat("!");
        let p = parse_reg_operand(cur)?;
        match p {
            Operand::Pred { .. } | Operand::UPred { .. } => {}
            _ => return Err(cur.err("guard must be a predicate register")),
        }
        cur.skip_ws();
        Some((neg, p))
    } else {
        None
    };

    let mnem = cur.take_while(|c| c.is_ascii_alphanumeric() || c == '.');
    if mnem.is_empty() {
        return Err(cur.err("expected mnemonic"));
    }
    let mut parts = mnem.split('.');
    let base = parts.next().unwrap();
    let opcode = opcode_from_str(base).ok_or_else(|| cur.err(format!("unknown mnemonic `{base}`")))?;
    let mut width: Option<u8> = None;
    let mut le = false;
    for suffix in parts {
        match suffix {
            "E" => {}
            "32" => width = Some(32),
            "64" => width = Some(64),
            "128" => width = Some(128),
            "LE" => le = true,
            other => return Err(cur.err(format!("unknown mnemonic suffix `.{other}`"))),
        }
    }
    if width.is_some() && !opcode.is_memory() {
        return Err(cur.err("width suffix only valid on memory opcodes"));
    }
    if le && opcode != Opcode::DEPBAR {
        return Err(cur.err(".LE suffix only valid on DEPBAR"));
    }
    if opcode == Opcode::DEPBAR && !le {
        return Err(cur.err("DEPBAR requires the .LE form"));
    }

    let mut inst = Instruction::new(pc, opcode);
    inst.control = control;
    inst.guard = guard;
    inst.width = width;
    cur.skip_ws();

    match opcode {
        Opcode::NOP | Opcode::EXIT | Opcode::BAR => {}
        Opcode::CLOCK => {
            let d = parse_reg_operand(cur)?;
            if !d.is_reg() {
                return Err(cur.err("CLOCK destination must be a regular register"));
            }
            inst.dest = Some(d);
        }
        Opcode::BRA => {
            cur.skip_ws();
            let t = parse_uint(cur, "branch target")?;
            if t % 16 != 0 {
                return Err(cur.err("branch target must be 16-byte aligned"));
            }
            inst.target = Some(t);
        }
        Opcode::DEPBAR => {
            cur.skip_ws();
            cur.expect("SB")?;
            let counter = reg_index(cur, "SB", 5, "dependence counter")?;
            cur.skip_ws();
            cur.expect(",")?;
            cur.skip_ws();
            let thr = parse_uint(cur, "threshold")?;
            if thr > 63 {
                return Err(cur.err(format!("DEPBAR threshold {thr} out of range (max 63)")));
            }
            let mut extra = Vec::new();
            cur.skip_ws();
            if cur.eat(",") {
                cur.skip_ws();
                cur.expect("{")?;
                loop {
                    cur.skip_ws();
                    let v = parse_uint(cur, "counter id")?;
                    if v > 5 {
                        return Err(cur.err(format!("counter id {v} out of range")));
                    }
                    extra.push(v as u8);
                    cur.skip_ws();
                    if cur.eat("}") {
                        break;
                    }
                    cur.expect(",")?;
                }
            }
            inst.depbar = Some(DepbarArgs { counter, threshold: thr as u8, extra });
        }
        Opcode::FFMA | Opcode::FADD | Opcode::FMUL | Opcode::IADD3 | Opcode::IMAD | Opcode::MOV => {
            let d = parse_operand(cur)?;
            match d {
                Operand::Reg { .. } | Operand::UReg { .. } => {}
                _ => return Err(cur.err("destination must be R or UR")),
            }
            inst.dest = Some(d);
            for _ in 0..source_count(opcode) {
                cur.skip_ws();
                cur.expect(",")?;
                inst.sources.push(parse_operand(cur)?);
            }
        }
        Opcode::LDG | Opcode::LDS => {
            let d = parse_operand(cur)?;
            let d = widen_reg(d, inst.mem_width(), cur)?;
            inst.dest = Some(d);
            cur.skip_ws();
            cur.expect(",")?;
            inst.addrs.push(parse_addr_operand(cur)?);
        }
        Opcode::LDC => {
            let d = parse_operand(cur)?;
            if inst.mem_width() == 128 {
                return Err(cur.err("LDC supports widths 32 and 64 only"));
            }
            let d = widen_reg(d, inst.mem_width(), cur)?;
            inst.dest = Some(d);
            cur.skip_ws();
            cur.expect(",")?;
            cur.skip_ws();
            let c = parse_operand(cur)?;
            match &c {
                Operand::ConstRef { addr, .. } => {
                    if inst.mem_width() == 64 && *addr == ConstAddr::ImmediateOffset {
                        return Err(cur.err("LDC.64 requires a register-addressed constant"));
                    }
                }
                _ => return Err(cur.err("LDC source must be a c[][] reference")),
            }
            inst.sources.push(c);
        }
        Opcode::STG | Opcode::STS => {
            inst.addrs.push(parse_addr_operand(cur)?);
            cur.skip_ws();
            cur.expect(",")?;
            cur.skip_ws();
            let v = parse_reg_operand(cur)?;
            let v = widen_reg(v, inst.mem_width(), cur)?;
            inst.sources.push(v);
        }
        Opcode::LDGSTS => {
            inst.addrs.push(parse_addr_operand(cur)?);
            cur.skip_ws();
            cur.expect(",")?;
            inst.addrs.push(parse_addr_operand(cur)?);
            for a in &inst.addrs {
                if !a.is_reg() {
                    return Err(cur.err("LDGSTS addresses must be regular registers"));
                }
            }
        }
    }

    // Reuse flags mirror the positional source operands.
    let reuse_flags: Vec<bool> = inst
        .read_operands()
        .iter()
        .take(4)
        .map(|op| matches!(op, Operand::Reg { reuse: true, .. }))
        .collect();
    for (i, f) in reuse_flags.into_iter().enumerate() {
        inst.control.reuse[i] = f;
    }

    cur.skip_ws();
    cur.expect(";")?;
    cur.skip_ws();
    if !cur.at_end() {
        return Err(cur.err("trailing text after `;`"));
    }
    Ok(inst)
}

fn widen_reg(op: Operand, width: u8, cur: &Cursor) -> Result<Operand, ParseError> {
    let regs = match width {
        32 => 1,
        64 => 2,
        128 => 4,
        _ => return Err(cur.err(format!("unsupported width {width}"))),
    };
    match op {
        Operand::Reg { index, reuse, .. } => {
            if regs == 2 && index % 2 != 0 {
                return Err(cur.err(format!("64-bit operand R{index} must use an even base register")));
            }
            if regs == 4 && index % 4 != 0 {
                return Err(cur.err(format!("128-bit operand R{index} must be 4-register aligned")));
            }
            if index != REG_RZ && index as u16 + regs as u16 - 1 > 255 {
                return Err(cur.err(format!("multi-register operand R{index} exceeds R255")));
            }
            Ok(Operand::Reg { index, width_regs: regs, reuse })
        }
        other => Ok(other),
    }
}
