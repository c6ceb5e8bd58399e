//! Coefficient recursions, success-probability decomposition, bound
//! functions and grid scans for the general family.

pub mod bounds;
pub mod recursion;
pub mod scan;

pub use bounds::{
    a_value, bound_parts, c_value, h_value, increasing_schedule_check, BoundParts, ScheduleReport,
    ScheduleViolation,
};
pub use recursion::{
    calibrate_success_normalization, correlators_via_r, q_breakdown, q_from_state, r_step,
    sign_table_violations, success_from_q, QBreakdown, RState, SignViolation,
    SUCCESS_NORMALIZATION,
};
pub use scan::{
    scan_function, Axis, FunctionId, ScanCell, ScanGrid, ScanSpec, ScanSummary, DEFAULT_INSET,
    DEFAULT_POINTS,
};
