use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;

use pflab_core::binding::{
    bracket_first_resonance, field_coefficient, find_resonance_coupling_with, scan_epsilon, BindingReport,
    PotentialProfile, RadialPotential, ShootOptions, IDENTITY_TOL,
};
use pflab_core::{Cutoff, Result};

use super::{echo, error_status, Outcome, RunOptions};
use crate::config::BindingConfig;
use crate::report::{fmt_f64, Num, Report, Route, Table};

pub const ZERORR_TOL: f64 = 1e-6;
pub const SQUARE_WELL_TOL: f64 = 1e-6;
pub const FIELD_COEFFICIENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct Resonance {
    pub g_star: Num,
    /// π²/(4r0²) for the square well; absent otherwise.
    pub g_star_closed: Option<Num>,
    pub bracket: [f64; 2],
    pub shoot_residual: f64,
    pub integral_equation_residual: f64,
    pub tail_deviation: f64,
    pub tail_constant: f64,
    pub grad_sq: f64,
    pub resonance_energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldTerm {
    pub closed: Num,
    pub quadrature_3d: Num,
    pub quadrature_2d: Num,
    pub max_relative_deviation: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub epsilon: f64,
    pub margin: f64,
    pub delta: f64,
    pub nu: f64,
    pub d: f64,
    pub c1: f64,
    pub c2: f64,
    pub norm_sq: f64,
    pub grad_sq: f64,
    pub field_term: f64,
    pub identity_residual: f64,
    pub binding: bool,
}

impl From<&BindingReport> for ScanPoint {
    fn from(b: &BindingReport) -> Self {
        ScanPoint {
            epsilon: b.epsilon,
            margin: b.margin,
            delta: b.delta,
            nu: b.nu,
            d: b.d,
            c1: b.truncated.c1,
            c2: b.truncated.c2,
            norm_sq: b.truncated.norm_sq,
            grad_sq: b.truncated.grad_sq,
            field_term: b.field_term,
            identity_residual: b.localization_terms.identity_residual,
            binding: b.binding,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Scan {
    pub alpha: f64,
    pub binding: bool,
    pub best: ScanPoint,
    pub best_delta: ScanPoint,
    pub max_identity_residual: f64,
    pub points: Vec<ScanPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BindingResults {
    pub potential: PotentialProfile,
    pub r0: f64,
    pub lambda: f64,
    pub resonance: Resonance,
    pub field_coefficient: FieldTerm,
    pub scans: Vec<Scan>,
}

pub fn compute(cfg: &BindingConfig) -> Result<BindingResults> {
    let pot = RadialPotential::new(cfg.potential, cfg.r0)?;
    let bracket = match cfg.bracket {
        Some([lo, hi]) => (lo, hi),
        None => bracket_first_resonance(&pot, cfg.g_max, cfg.bracket_samples)?,
    };
    let res = find_resonance_coupling_with(&pot, bracket, cfg.resonance_tol, &ShootOptions { steps: cfg.steps })?;
    let g_star_closed = match cfg.potential {
        PotentialProfile::SquareWell => Some(Num::closed(PI * PI / (4.0 * cfg.r0 * cfg.r0))),
        _ => None,
    };
    let cutoff = Cutoff::new(cfg.lambda)?;
    let fc = field_coefficient(cutoff)?;
    let mut scans = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        let s = scan_epsilon(&res, cutoff, alpha, cfg.eps_j_min, cfg.eps_j_max)?;
        let points: Vec<ScanPoint> = s.points.iter().map(ScanPoint::from).collect();
        scans.push(Scan {
            alpha,
            binding: s.binding(),
            best: points[s.best],
            best_delta: points[s.best_delta],
            max_identity_residual: points.iter().map(|p| p.identity_residual).fold(0.0, f64::max),
            points,
        });
    }
    Ok(BindingResults {
        potential: cfg.potential,
        r0: cfg.r0,
        lambda: cfg.lambda,
        resonance: Resonance {
            g_star: Num::new(res.g_star, res.shoot_residual.abs(), Route::Discrete),
            g_star_closed,
            bracket: [bracket.0, bracket.1],
            shoot_residual: res.shoot_residual,
            integral_equation_residual: res.integral_equation_residual,
            tail_deviation: res.tail_deviation,
            tail_constant: res.tail_constant(),
            grad_sq: res.grad_sq(),
            resonance_energy: res.resonance_energy(),
            iterations: res.iterations,
        },
        field_coefficient: FieldTerm {
            closed: Num::closed(fc.closed_form),
            quadrature_3d: Num::new(fc.quadrature_3d, (fc.quadrature_3d - fc.closed_form).abs(), Route::Quad),
            quadrature_2d: Num::new(fc.quadrature_2d, (fc.quadrature_2d - fc.closed_form).abs(), Route::Quad),
            max_relative_deviation: fc.max_relative_deviation(),
        },
        scans,
    })
}

pub fn run(cfg: &BindingConfig, opts: &RunOptions) -> Outcome {
    let mut report = Report::new("binding", echo(cfg), json!({}));
    if opts.seed.is_some() {
        report.warn("--seed has no effect on binding (no random sampling)");
    }
    if opts.negative_control {
        report.warn("--negative-control has no effect on binding");
    }
    let mut table = Table::new(&["alpha", "epsilon", "margin", "delta", "identity_residual"]);
    match compute(cfg) {
        Ok(r) => {
            let rr = &r.resonance;
            report.check("zero_resonance.integral_equation", rr.integral_equation_residual <= ZERORR_TOL, rr.integral_equation_residual, ZERORR_TOL, None);
            if let Some(c) = rr.g_star_closed {
                let d = (rr.g_star.value - c.value).abs();
                report.check("zero_resonance.square_well_closed_form", d <= SQUARE_WELL_TOL, d, SQUARE_WELL_TOL, None);
            }
            let fc = r.field_coefficient.max_relative_deviation;
            report.check("field_coefficient.closed_vs_quadrature", fc <= FIELD_COEFFICIENT_TOL, fc, FIELD_COEFFICIENT_TOL, None);
            for s in &r.scans {
                report.check(
                    &format!("localization_identity.alpha={}", fmt_f64(s.alpha)),
                    s.max_identity_residual <= IDENTITY_TOL,
                    s.max_identity_residual,
                    IDENTITY_TOL,
                    None,
                );
                if !s.binding {
                    report.warn(format!("alpha = {}: no epsilon gives a negative margin (no binding)", s.alpha));
                }
                for p in &s.points {
                    table.push(vec![
                        fmt_f64(s.alpha),
                        fmt_f64(p.epsilon),
                        fmt_f64(p.margin),
                        fmt_f64(p.delta),
                        fmt_f64(p.identity_residual),
                    ]);
                }
            }
            report.results = serde_json::to_value(&r).expect("results serialize");
        }
        Err(e) => report.fail(error_status(&e), &e),
    }
    Outcome {
        report,
        table: Some(table),
    }
}
