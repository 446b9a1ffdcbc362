//! The dual stability programs: assembly, feasibility checks and margin
//! bisection.

mod assemble;
mod check;
mod margin;

pub use assemble::{
    assemble, assemble_multi, assemble_single, default_epsilon, symmetric_equalities,
    AssemblyOptions, AssemblyPath, DegreeMap, StabilityProgram,
};
pub use check::{check_feasible, Certificate, StabilityReport, PSD_TOLERANCE};
pub use margin::{
    margin_bisection, probe, BisectionOptions, BracketEntry, FamilyKind, MarginResult,
    ParameterizedFamily,
};
