//! Computation models: tape machines with configurations, straight-line step
//! programs with explicit read-sets, and the compiler between them.

pub mod compile;
pub mod format;
pub mod program;
pub mod stock;
pub mod vm;

pub use compile::compile_vm_trace;
pub use program::{
    eval_step_with, sp_eval_step, sp_run, sp_run_with, Cell, DetOp, QueryPart, Readings, Step, StepKind, StepProgram,
    Transcript,
};
pub use vm::{vm_advance, vm_run, vm_run_with, vm_step, Configuration, ConfigurationMachine, Move, QueryConvention, VmRun};
