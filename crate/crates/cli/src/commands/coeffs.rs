use serde::Serialize;
use serde_json::json;

use pflab_core::coeffs::{e1_closed, e2_total, sigma_prediction, SelfEnergyCoefficients, Vev2Options};
use pflab_core::kernels::KernelName;
use pflab_core::{Cutoff, Error};

use super::{echo, error_status, Outcome, RunOptions};
use crate::config::CoeffsConfig;
use crate::report::{fmt_f64, Num, Report, Route, Table};

/// Route agreement threshold in units of the Monte Carlo standard error.
pub const N_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct IntegralRow {
    pub name: KernelName,
    pub quad: Num,
    pub mc: Num,
    pub deviation_sigmas: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaResult {
    pub lambda: f64,
    pub e1: Num,
    /// Λ²/π − IEE with IEE by quadrature.
    pub e1_quad: Num,
    pub iee_identity_residual: f64,
    pub integrals: Vec<IntegralRow>,
    pub e2: Num,
    pub e2_mc: Num,
    /// EE/EP cross term, expected to vanish.
    pub cross_ep: Num,
    pub routes_agree: bool,
}

impl LambdaResult {
    pub fn from_coefficients(c: &SelfEnergyCoefficients) -> Self {
        let integrals: Vec<IntegralRow> = KernelName::ALL
            .iter()
            .map(|&n| {
                let rp = c.component(n);
                IntegralRow {
                    name: n,
                    quad: Num::quad(&rp.quad),
                    mc: Num::mc(&rp.mc),
                    deviation_sigmas: rp.deviation_sigmas(),
                    agrees: rp.agrees(N_SIGMA),
                }
            })
            .collect();
        let iee_err = c.component(KernelName::IEE).quad.error_estimate;
        LambdaResult {
            lambda: c.lambda,
            e1: Num::closed(c.e1),
            e1_quad: Num::new(c.e1_quad, iee_err, Route::Quad),
            iee_identity_residual: (c.e1_quad - c.e1).abs(),
            routes_agree: integrals.iter().all(|r| r.agrees),
            integrals,
            e2: Num::new(c.e2, c.e2_error, Route::Quad),
            e2_mc: Num::new(c.e2_mc, c.e2_mc_std_error, Route::Mc),
            cross_ep: Num::mc(&c.cross_ep),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaRow {
    pub lambda: f64,
    pub alpha: f64,
    /// αE₁ + α²E₂ with E₂ by quadrature; the error covers the E₂ estimate only.
    pub sigma: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedLambda {
    pub lambda: f64,
    pub error: String,
    /// Integrals finished before the failure: (name, value, error estimate).
    pub partial: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CoeffsResults {
    pub lambdas: Vec<LambdaResult>,
    pub sigma: Vec<SigmaRow>,
    pub failed: Vec<FailedLambda>,
}

pub fn run(cfg: &CoeffsConfig, opts: &RunOptions) -> Outcome {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let mut report = Report::new("coeffs", echo(&cfg), json!({ "mc": cfg.seed }));
    if opts.negative_control {
        report.warn("--negative-control has no effect on coeffs");
    }
    let vopts = Vev2Options {
        quad_tol: cfg.quad_tol,
        quad_tol_1d: cfg.quad_tol_1d,
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
    };
    let mut res = CoeffsResults::default();
    let mut table = Table::new(&[
        "lambda", "e1", "e1_quad", "e1_quad_error", "e2", "e2_error", "e2_mc", "e2_mc_error",
    ]);
    for &lambda in &cfg.lambdas {
        let outcome = Cutoff::new(lambda).and_then(|c| e2_total(c, &vopts));
        match outcome {
            Ok(c) => {
                let row = LambdaResult::from_coefficients(&c);
                for i in &row.integrals {
                    report.check(
                        &format!("route_agreement.{}.lambda={}", i.name.as_str(), fmt_f64(lambda)),
                        i.agrees,
                        i.deviation_sigmas,
                        N_SIGMA,
                        None,
                    );
                }
                table.push(vec![
                    fmt_f64(lambda),
                    fmt_f64(row.e1.value),
                    fmt_f64(row.e1_quad.value),
                    fmt_f64(row.e1_quad.error),
                    fmt_f64(row.e2.value),
                    fmt_f64(row.e2.error),
                    fmt_f64(row.e2_mc.value),
                    fmt_f64(row.e2_mc.error),
                ]);
                for &alpha in &cfg.alphas {
                    if let Ok(p) = sigma_prediction(row.e1.value, row.e2.value, alpha) {
                        res.sigma.push(SigmaRow {
                            lambda,
                            alpha,
                            sigma: Num::new(p.sigma, alpha * alpha * row.e2.error, Route::Quad),
                        });
                    }
                }
                res.lambdas.push(row);
            }
            Err(e) => {
                let partial = match &e {
                    Error::Component { partial, .. } => partial.clone(),
                    _ => Vec::new(),
                };
                report.warn(format!("lambda = {lambda}: {e}"));
                report.fail(error_status(&e), &e);
                res.failed.push(FailedLambda {
                    lambda,
                    error: e.to_string(),
                    partial,
                });
            }
        }
    }
    let mut e1_prev = f64::NEG_INFINITY;
    let mut sorted: Vec<f64> = cfg.lambdas.clone();
    sorted.sort_by(f64::total_cmp);
    for l in sorted {
        let e1 = Cutoff::new(l).map(e1_closed).unwrap_or(f64::NAN);
        if e1 < e1_prev {
            report.warn(format!("e1 is not monotone in lambda at {l}"));
        }
        e1_prev = e1;
    }
    report.set("lambdas", &res.lambdas);
    report.set("sigma", &res.sigma);
    report.set("failed", &res.failed);
    Outcome {
        report,
        table: Some(table),
    }
}
