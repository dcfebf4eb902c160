//! Cycle-level model of an Ampere-class GPU SM sub-core cluster.
//!
//! The crate models the compiler/hardware contract of a modern NVIDIA-style
//! streaming multiprocessor at desk scale: per-instruction control bits
//! (stall counter, yield, dependence counters, wait mask, reuse flags), the
//! greedy-then-youngest issue scheduler with its Control and Allocate
//! stages, a banked register file with a software-managed operand cache,
//! an L0 instruction cache with stream-buffer prefetching, and the memory
//! pipeline with its measured release latencies. Programs are written in a
//! small SASS-like text format; every run is fully deterministic.

pub mod bench;
pub mod config;
pub mod deps;
pub mod exec;
pub mod frontend;
pub mod isa;
pub mod issue;
pub mod mem;
pub mod progen;
pub mod regfile;
pub mod sim;

pub use config::{Calibration, DepsMechanism, PrefetchKind, SmConfig};
pub use deps::{area_report, AreaReport, Mechanism};
pub use isa::{
    bank_of, encode_program, parse_program, validate_program, BankMap, ControlBits, Diagnostic,
    Instruction, LatencyTable, Opcode, Operand, Program, Severity,
};
pub use sim::{
    measure_clock_delta, run, run_with_init, sweep, RegInit, RunResult, RunStats, SimFault,
    Simulator, TimelineEvent,
};
