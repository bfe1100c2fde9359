pub mod binding;
pub mod coeffs;
pub mod fock_sweep;
pub mod verify;

use serde::Serialize;

use crate::report::{Report, Status, Table};

/// Flags shared by all commands that can change what a command computes.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub negative_control: bool,
}

/// A finished command: its report and an optional table for CSV export.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub table: Option<Table>,
}

pub(crate) fn echo<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).expect("configs serialize")
}

/// Exit status for a library error: 2 for numerical non-convergence or a
/// missing resonance bracket, 1 for anything else.
pub fn error_status(e: &pflab_core::Error) -> Status {
    match e {
        pflab_core::Error::NoBracket { .. } => Status::NonConvergence,
        e if e.is_non_convergence() => Status::NonConvergence,
        _ => Status::CheckFailed,
    }
}

/// Successive ratios q(α_hi)/q(α_lo) over sorted α with the observed
/// exponent ln(ratio)/ln(α_hi/α_lo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingStep {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub ratio: f64,
    pub exponent: f64,
}

pub fn scaling_steps(points: &[(f64, f64)]) -> Vec<ScalingStep> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    p.windows(2)
        .map(|w| {
            let ratio = w[1].1 / w[0].1;
            ScalingStep {
                alpha_lo: w[0].0,
                alpha_hi: w[1].0,
                ratio,
                exponent: ratio.abs().ln() / (w[1].0 / w[0].0).ln(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_recovers_power() {
        let pts: Vec<(f64, f64)> = [4e-3, 1e-3, 2e-3].iter().map(|&a: &f64| (a, -3.0 * a.powi(3))).collect();
        let s = scaling_steps(&pts);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].alpha_lo, 1e-3);
        for st in s {
            assert!((st.ratio - 8.0).abs() < 1e-12);
            assert!((st.exponent - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_bracket_is_non_convergence() {
        let e = pflab_core::Error::NoBracket { lo: 0.0, hi: 1.0 };
        assert_eq!(error_status(&e), Status::NonConvergence);
        let e = pflab_core::Error::InvalidArgument("x".into());
        assert_eq!(error_status(&e), Status::CheckFailed);
    }
}
