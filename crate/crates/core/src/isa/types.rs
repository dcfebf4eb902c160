use serde::{Deserialize, Serialize};

/// Index of the constant-zero regular register (`RZ`).
pub const REG_RZ: u8 = 255;
/// Index of the constant-zero uniform register (`URZ`).
pub const UREG_URZ: u8 = 63;

/// How a regular-register index maps onto the two banks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum BankMap {
    /// Even indices to bank 0, odd to bank 1 (default).
    #[default]
    Parity,
    /// Low half of the index space to bank 0, high half to bank 1.
    Half,
}


/// Addressing-register class of a memory operand, which selects the
/// latency-table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddrClass {
    Regular,
    Uniform,
    Immediate,
}

/// One source or destination operand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    /// Regular register. `width_regs` is 1, 2 or 4 consecutive registers.
    Reg { index: u8, width_regs: u8, reuse: bool },
    /// Uniform register (shared by all threads of the warp).
    UReg { index: u8 },
    /// Predicate register.
    Pred { index: u8 },
    /// Uniform predicate register.
    UPred { index: u8 },
    /// Control-flow reconvergence register.
    BReg { index: u8 },
    /// Special read-only register (SR0 = lane id, SR1 = warp id).
    Special { index: u8 },
    /// Immediate value (raw 32-bit pattern).
    Imm { bits: u32 },
    /// Constant-memory reference `c[bank][...]`.
    ConstRef { bank: u8, offset: u32, addr: ConstAddr },
}

/// Addressing mode of a constant-memory reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstAddr {
    ImmediateOffset,
    Regular(u8),
    Uniform(u8),
}

impl Operand {
    pub fn is_reg(&self) -> bool {
        matches!(self, Operand::Reg { .. })
    }

    /// Regular-register indices this operand touches (1, 2 or 4 registers).
    pub fn reg_indices(&self) -> Vec<u8> {
        match self {
            Operand::Reg { index, width_regs, .. } => {
                (0..*width_regs).map(|k| index.wrapping_add(k)).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Per-instruction compiler control bits.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControlBits {
    /// Stall countdown applied to the warp at issue, 0-15.
    pub stall: u8,
    /// Forbid issuing the same warp in the next cycle.
    pub yield_flag: bool,
    /// Dependence counter incremented at issue, decremented at write-back.
    pub write_barrier: Option<u8>,
    /// Dependence counter incremented at issue, decremented at source read.
    pub read_barrier: Option<u8>,
    /// Counters SB0-SB5 that must be zero before issue.
    pub wait_mask: u8,
    /// Per-source-operand register-file-cache reuse flags (positions 1-4).
    pub reuse: [bool; 4],
}

impl ControlBits {
    pub fn waits_on(&self, counter: u8) -> bool {
        self.wait_mask & (1 << counter) != 0
    }

    pub fn wait_counters(&self) -> impl Iterator<Item = u8> + '_ {
        (0..6u8).filter(move |c| self.waits_on(*c))
    }
}

/// `DEPBAR.LE SBx, threshold [, {extra counters}]` arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepbarArgs {
    pub counter: u8,
    pub threshold: u8,
    pub extra: Vec<u8>,
}

/// Memory address space of a memory opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemSpace {
    Global,
    Shared,
    Constant,
}

/// Execution-unit class an opcode dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitClass {
    Fp32,
    Int32,
    FixedMisc,
    Memory,
    Control,
}

/// Instruction mnemonics of the mini-SASS ISA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum Opcode {
    FFMA,
    FADD,
    FMUL,
    IADD3,
    IMAD,
    MOV,
    NOP,
    CLOCK,
    BRA,
    EXIT,
    BAR,
    DEPBAR,
    LDG,
    STG,
    LDS,
    STS,
    LDC,
    LDGSTS,
}

impl Opcode {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Opcode::FFMA => "FFMA",
            Opcode::FADD => "FADD",
            Opcode::FMUL => "FMUL",
            Opcode::IADD3 => "IADD3",
            Opcode::IMAD => "IMAD",
            Opcode::MOV => "MOV",
            Opcode::NOP => "NOP",
            Opcode::CLOCK => "CLOCK",
            Opcode::BRA => "BRA",
            Opcode::EXIT => "EXIT",
            Opcode::BAR => "BAR",
            Opcode::DEPBAR => "DEPBAR",
            Opcode::LDG => "LDG",
            Opcode::STG => "STG",
            Opcode::LDS => "LDS",
            Opcode::STS => "STS",
            Opcode::LDC => "LDC",
            Opcode::LDGSTS => "LDGSTS",
        }
    }

    pub fn unit_class(&self) -> UnitClass {
        match self {
            Opcode::FFMA | Opcode::FADD | Opcode::FMUL => UnitClass::Fp32,
            Opcode::IADD3 | Opcode::IMAD => UnitClass::Int32,
            Opcode::MOV | Opcode::NOP | Opcode::CLOCK => UnitClass::FixedMisc,
            Opcode::BRA | Opcode::EXIT | Opcode::BAR | Opcode::DEPBAR => UnitClass::Control,
            Opcode::LDG | Opcode::STG | Opcode::LDS | Opcode::STS | Opcode::LDC
            | Opcode::LDGSTS => UnitClass::Memory,
        }
    }

    pub fn mem_space(&self) -> Option<MemSpace> {
        match self {
            Opcode::LDG | Opcode::STG | Opcode::LDGSTS => Some(MemSpace::Global),
            Opcode::LDS | Opcode::STS => Some(MemSpace::Shared),
            Opcode::LDC => Some(MemSpace::Constant),
            _ => None,
        }
    }

    pub fn is_memory(&self) -> bool {
        self.unit_class() == UnitClass::Memory
    }

    pub fn is_load(&self) -> bool {
        matches!(self, Opcode::LDG | Opcode::LDS | Opcode::LDC)
    }

    pub fn is_store(&self) -> bool {
        matches!(self, Opcode::STG | Opcode::STS)
    }
}

/// One decoded mini-SASS instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    /// Byte address, a multiple of 16.
    pub pc: u64,
    pub opcode: Opcode,
    /// Access width in bits for memory opcodes (32, 64 or 128).
    pub width: Option<u8>,
    pub dest: Option<Operand>,
    pub sources: Vec<Operand>,
    /// Address operand of a memory instruction (the `[R2]` part). For
    /// LDGSTS the first entry is the shared-memory destination address and
    /// the second the global source address.
    pub addrs: Vec<Operand>,
    pub control: ControlBits,
    /// Optional guard: (negated, predicate operand).
    pub guard: Option<(bool, Operand)>,
    pub depbar: Option<DepbarArgs>,
    /// BRA target pc.
    pub target: Option<u64>,
}

impl Instruction {
    pub fn new(pc: u64, opcode: Opcode) -> Self {
        Instruction {
            pc,
            opcode,
            width: None,
            dest: None,
            sources: Vec::new(),
            addrs: Vec::new(),
            control: ControlBits::default(),
            guard: None,
            depbar: None,
            target: None,
        }
    }

    /// Width in bits actually accessed by a memory opcode.
    pub fn mem_width(&self) -> u8 {
        self.width.unwrap_or(32)
    }

    /// Addressing class used for latency lookup of a memory instruction.
    pub fn addr_class(&self) -> AddrClass {
        if self.opcode == Opcode::LDC {
            return match self.sources.iter().chain(self.addrs.iter()).find_map(|s| match s {
                Operand::ConstRef { addr, .. } => Some(*addr),
                _ => None,
            }) {
                Some(super::types::ConstAddr::Regular(_)) => AddrClass::Regular,
                Some(super::types::ConstAddr::Uniform(_)) => AddrClass::Uniform,
                _ => AddrClass::Immediate,
            };
        }
        // LDGSTS: the global source address governs the row; both address
        // operands are regular registers in this ISA.
        for a in &self.addrs {
            match a {
                Operand::UReg { .. } => return AddrClass::Uniform,
                Operand::Reg { .. } => return AddrClass::Regular,
                _ => {}
            }
        }
        AddrClass::Regular
    }

    /// All source-side operands in positional order, including address
    /// registers and store data (used for reads, reuse slots and hazards).
    pub fn read_operands(&self) -> Vec<&Operand> {
        let mut v: Vec<&Operand> = Vec::new();
        match self.opcode {
            Opcode::STG | Opcode::STS => {
                v.extend(self.addrs.iter());
                v.extend(self.sources.iter());
            }
            Opcode::LDGSTS => {
                v.extend(self.addrs.iter());
            }
            _ => {
                v.extend(self.sources.iter());
                v.extend(self.addrs.iter());
            }
        }
        v
    }
}

/// A parsed program: instructions in program order at a 16-byte pc stride.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Program {
    pub base: u64,
    pub instructions: Vec<Instruction>,
    /// Hazard-mechanism hint from a `.hazards` directive, used by the
    /// hybrid dependence mode.
    pub hazards_hint: Option<String>,
}

impl Program {
    pub fn at_pc(&self, pc: u64) -> Option<&Instruction> {
        if pc < self.base {
            return None;
        }
        let idx = (pc - self.base) / 16;
        if !(pc - self.base).is_multiple_of(16) {
            return None;
        }
        self.instructions.get(idx as usize)
    }

    pub fn end_pc(&self) -> u64 {
        self.base + 16 * self.instructions.len() as u64
    }
}
