//! The mini-SASS instruction set: operand model, control bits, opcodes,
//! latency tables, and the text parser/encoder for programs.

mod encode;
mod latency;
mod parse;
mod types;
pub mod validate;

pub use encode::{encode_instruction, encode_program};
pub use latency::{LatencyClass, LatencyTable, MemKind, MemLatency};
pub use parse::{parse_program, ParseError};
pub use types::{
    AddrClass, BankMap, ConstAddr, ControlBits, DepbarArgs, Instruction, MemSpace, Opcode,
    Operand, Program, UnitClass, REG_RZ, UREG_URZ,
};
pub use validate::{validate_program, Diagnostic, Severity};

/// Register-file bank for a regular register index.
pub fn bank_of(reg: u8, map: BankMap) -> u8 {
    match map {
        BankMap::Parity => reg % 2,
        BankMap::Half => {
            if reg < 128 {
                0
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_parity_mapping() {
        assert_eq!(bank_of(18, BankMap::Parity), 0);
        assert_eq!(bank_of(19, BankMap::Parity), 1);
        assert_eq!(bank_of(0, BankMap::Parity), 0);
        assert_eq!(bank_of(255, BankMap::Parity), 1);
    }

    #[test]
    fn bank_half_mapping() {
        assert_eq!(bank_of(0, BankMap::Half), 0);
        assert_eq!(bank_of(127, BankMap::Half), 0);
        assert_eq!(bank_of(128, BankMap::Half), 1);
    }
}
