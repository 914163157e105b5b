use std::fmt::Write as _;

use super::Trajectory;

pub const CSV_HEADER: &str = "tau,S,I,C,R";

/// Formats with 17 significant digits; Rust float formatting is locale independent.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory as CSV with header `tau,S,I,C,R`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for smp in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(smp.tau),
            fmt17(smp.state.s),
            fmt17(smp.state.i),
            fmt17(smp.state.c),
            fmt17(smp.r)
        );
    }
    out
}

/// Trajectory as pretty-printed JSON (samples and events).
pub fn trajectory_json(traj: &Trajectory) -> String {
    serde_json::to_string_pretty(traj).expect("trajectory serializes")
}
