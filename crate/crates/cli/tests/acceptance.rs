//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use pflab_cli::commands::fock_sweep::{sweep_grid, GridResult};
use pflab_cli::config::{FockSweepConfig, GridSize};
use pflab_core::binding::{
    bracket_first_resonance, field_coefficient, find_resonance_coupling, scan_epsilon, RadialPotential,
};
use pflab_core::coeffs::{e1_closed, e2_combination, e2_total, iee, Vev2Options};
use pflab_core::fock::{
    assemble, build_grid, build_grid_with, check_auxiliary_bounds, check_epstens, discrete_coeffs,
    energy_identity_residuals, ground_state, photon_density, random_grid, self_adjointness, GridOptions,
};
use pflab_core::integrate::quad_vev;
use pflab_core::kernels::KernelName;
use pflab_core::Cutoff;

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass_if(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn cut(l: f64) -> Cutoff {
    Cutoff::new(l).expect("valid cutoff")
}

/// 1. Λ²/π − iee(Λ) against the closed form (2/π)(Λ − ln(1+Λ)), within 1e-8, in under 1 s.
fn first_order() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for l in [0.5, 1.0, 5.0, 10.0] {
        let q = iee(cut(l)).expect("iee quadrature");
        let closed = 2.0 / PI * (l - (1.0 + l).ln());
        worst = worst.max((l * l / PI - q.value - closed).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    pass_if(
        worst <= 1e-8 && secs < 1.0,
        format!("max residual {worst:.2e} (tol 1e-8), {secs:.3} s (limit 1 s)"),
    )
}

/// 2. |quad − MC| ≤ 3σ for all six integrals at 10⁷ samples, Λ ∈ {0.5, 1, 5}.
fn route_agreement() -> Outcome {
    let opts = Vev2Options {
        mc_samples: 10_000_000,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for l in [0.5, 1.0, 5.0] {
        let c = e2_total(cut(l), &opts).expect("e2_total");
        for n in KernelName::ALL {
            let s = c.component(n).deviation_sigmas();
            worst = worst.max(s);
            if s > 3.0 {
                failures.push(format!("{n}@{l}: {s:.2}σ"));
            }
        }
    }
    pass_if(
        failures.is_empty(),
        format!("max deviation {worst:.2} sigma (tol 3) over 18 integrals {failures:?}"),
    )
}

/// 3. Discrete coefficients on (2,2,4), (4,4,8), (8,8,16) converge to the
/// continuum values with observed order ≥ 1; the Richardson estimate from
/// the finest two grids is within 1%.
fn refinement() -> Outcome {
    let c = cut(1.0);
    let q = |n: KernelName, tol: f64| quad_vev(n, c, tol).expect("quadrature").value;
    use KernelName::*;
    let e2_ref = e2_combination(q(DD, 1e-9), q(EEEE, 1e-9), q(EPD, 1e-9), q(EEDD, 1e-9), q(IEE, 1e-12), q(N1, 1e-12));
    let e1_ref = e1_closed(c);
    let grids = [(2, 2, 4), (4, 4, 8), (8, 8, 16)];
    let coeffs: Vec<_> = grids
        .iter()
        .map(|&(a, b, d)| discrete_coeffs(&build_grid(c, a, b, d).expect("grid")))
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, reference, vals) in [
        ("e1", e1_ref, coeffs.iter().map(|d| d.e1).collect::<Vec<_>>()),
        ("e2", e2_ref, coeffs.iter().map(|d| d.e2).collect::<Vec<_>>()),
    ] {
        let err: Vec<f64> = vals.iter().map(|v| (v - reference).abs()).collect();
        // radial nodes double at each step
        let orders: Vec<f64> = err.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        // extrapolation order from successive differences, independent of the reference
        let p = ((vals[1] - vals[0]) / (vals[2] - vals[1])).abs().log2().max(1.0);
        let rich = vals[2] + (vals[2] - vals[1]) / (2f64.powf(p) - 1.0);
        let rel = ((rich - reference) / reference).abs();
        let finest = err[2] / reference.abs();
        ok &= orders.iter().all(|&o| o >= 1.0) && rel <= 1e-2 && finest <= 1e-2;
        parts.push(format!(
            "{name}: errors {:.1e}/{:.1e}/{:.1e}, orders {:.1}/{:.1}, Richardson rel {rel:.1e}",
            err[0], err[1], err[2], orders[0], orders[1]
        ));
    }
    pass_if(ok, parts.join("; "))
}

fn sweep() -> GridResult {
    let cfg = FockSweepConfig {
        grids: vec![GridSize { n_r: 8, n_t: 4, n_phi: 8 }],
        alphas: vec![1e-3, 2e-3, 4e-3, 8e-3],
        ..Default::default()
    };
    sweep_grid(&cfg, &cfg.grids[0]).expect("fock sweep")
}

/// 4. Fitted c₁ within 1e-3 and c₂ within 5e-2 (relative) of the discrete coefficients.
fn fit_consistency(g: &GridResult) -> Outcome {
    pass_if(
        g.fit.c1_rel_error <= 1e-3 && g.fit.c2_rel_error <= 5e-2,
        format!(
            "{} modes: c1 rel {:.2e} (tol 1e-3), c2 rel {:.2e} (tol 5e-2)",
            g.n_modes, g.fit.c1_rel_error, g.fit.c2_rel_error
        ),
    )
}

/// 5. ground ≤ tf2 ≤ one-photon at every α; tf2 − (αe1 + α²e2) changes by 8 ± 30% per α doubling.
fn variational(g: &GridResult) -> Outcome {
    let ordered = g.points.iter().all(|p| p.variational_ordering);
    let ratios: Vec<f64> = g.tf2_scaling.iter().map(|s| s.ratio).collect();
    let in_band = ratios.iter().all(|r| (r - 8.0).abs() <= 0.3 * 8.0);
    pass_if(
        ordered && in_band,
        format!("ordering {}, tf2 residual ratios {:.2?} (8 ± 30%)", if ordered { "holds" } else { "violated" }, ratios),
    )
}

/// 6. Σ(h_n, L h_n) changes by 4 ± 30% per α doubling.
fn remainder(g: &GridResult) -> Outcome {
    let ratios: Vec<f64> = g.remainder_scaling.iter().map(|s| s.ratio).collect();
    let exps: Vec<f64> = g.remainder_scaling.iter().map(|s| s.exponent).collect();
    pass_if(
        ratios.iter().all(|r| (r - 4.0).abs() <= 0.3 * 4.0),
        format!("ratios {ratios:.2?} (4 ± 30%), observed exponents {exps:.2?}"),
    )
}

/// 7. Photon density and epsilon-tensor residuals ≤ 1e-12; self-adjointness and
/// energy decompositions ≤ 1e-10 relative.
fn structural() -> Outcome {
    let c = cut(1.0);
    let mut eps: f64 = 0.0;
    for (a, b, d) in [(3, 2, 4), (4, 4, 8), (8, 4, 8)] {
        eps = eps.max(check_epstens(&build_grid_with(c, a, b, d, &GridOptions::default()).expect("grid")));
    }
    let grid = build_grid(c, 4, 2, 4).expect("grid");
    let (mut dens, mut sa, mut sec, mut sq) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for alpha in [1e-3, 1e-2, 0.1] {
        let op = assemble(&grid, alpha, [0.0; 3], None).expect("operator");
        let gs = ground_state(&op, 1e-10, 400).expect("ground state");
        for n in 1..=2 {
            let d = photon_density(&op, &gs.state, n).expect("photon density");
            dens = dens.max(d.residual() / d.field_energy.abs().max(1.0));
        }
        sa = sa.max(self_adjointness(&op, 100, 11));
        let (a, b) = energy_identity_residuals(&op, 20, 13);
        sec = sec.max(a);
        sq = sq.max(b);
    }
    pass_if(
        dens <= 1e-12 && eps <= 1e-12 && sa <= 1e-10 && sec <= 1e-10 && sq <= 1e-10,
        format!(
            "density {dens:.1e}, epstens {eps:.1e} (tol 1e-12); self-adjoint {sa:.1e}, sectors {sec:.1e}, completed square {sq:.1e} (tol 1e-10)"
        ),
    )
}

/// 8. min-eig of the |D| and |E| bound operators ≥ −1e-10 on sectors 1, 2 over 20 random grids.
fn auxiliary_bounds() -> Outcome {
    let c = cut(1.0);
    let sizes = [(2, 2, 4), (3, 2, 4), (2, 3, 4), (2, 2, 6)];
    let (mut d, mut e) = (f64::INFINITY, f64::INFINITY);
    let mut modes = Vec::new();
    for i in 0..20u64 {
        let (a, b, p) = sizes[i as usize % sizes.len()];
        let g = random_grid(c, a, b, p, 1000 + i).expect("grid");
        let r = check_auxiliary_bounds(&g, 0.01).expect("bounds");
        d = d.min(r.d_bound.min_eig());
        e = e.min(r.e_bound.min_eig());
        modes.push(r.n_modes);
    }
    modes.sort();
    modes.dedup();
    pass_if(
        d >= -1e-10 && e >= -1e-10,
        format!("min eig |D| bound {d:.2e}, |E| bound {e:.2e} (tol -1e-10), grids of {modes:?} modes"),
    )
}

/// 9. Square-well g* = π²/4 within 1e-6; bump integral-equation residual ≤ 1e-6.
fn resonance() -> Outcome {
    let sw = RadialPotential::square_well();
    let br = bracket_first_resonance(&sw, 40.0, 40).expect("bracket");
    let g = find_resonance_coupling(&sw, br, 1e-12).expect("square well resonance").g_star;
    let dg = (g - PI * PI / 4.0).abs();
    let bump = RadialPotential::bump();
    let br = bracket_first_resonance(&bump, 40.0, 40).expect("bracket");
    let r = find_resonance_coupling(&bump, br, 1e-12).expect("bump resonance");
    pass_if(
        dg <= 1e-6 && r.integral_equation_residual <= 1e-6,
        format!(
            "square well |g* - pi^2/4| = {dg:.1e} (tol 1e-6); bump g* = {:.9}, residual {:.1e} (tol 1e-6)",
            r.g_star, r.integral_equation_residual
        ),
    )
}

/// 10. Bump at resonance, Λ = 1, α = 1e-2: the ε-scan finds a negative margin and the
/// field coefficient closed form matches quadrature within 1e-8.
fn binding() -> Outcome {
    let bump = RadialPotential::bump();
    let br = bracket_first_resonance(&bump, 40.0, 40).expect("bracket");
    let r = find_resonance_coupling(&bump, br, 1e-12).expect("bump resonance");
    let s = scan_epsilon(&r, cut(1.0), 1e-2, 0, 30).expect("scan");
    let best = s.best();
    let fc = field_coefficient(cut(1.0)).expect("field coefficient").max_relative_deviation();
    pass_if(
        s.binding() && best.margin < 0.0 && fc <= 1e-8,
        format!(
            "best margin {:.3e} at eps = 2^{:.0}; field coefficient rel deviation {fc:.1e} (tol 1e-8)",
            best.margin,
            best.epsilon.log2()
        ),
    )
}

/// 11. Two runs of the binary with the same config and seeds give identical bytes.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let configs = [
        ("coeffs", r#"{"lambdas": [0.5, 1], "mc_samples": 1000000, "alphas": [0.01], "seed": 424242}"#),
        ("fock-sweep", r#"{"grids": [{"n_r": 3, "n_t": 2, "n_phi": 4}]}"#),
        ("binding", r#"{"alphas": [0, 0.01]}"#),
        ("verify", r#"{"random_grids": 4, "mc_samples": 200000, "seed": 424242}"#),
    ];
    let mut differing = Vec::new();
    for (cmd, cfg) in configs {
        let cfg_path = dir.path().join(format!("{cmd}.json"));
        std::fs::write(&cfg_path, cfg).expect("write config");
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{cmd}-{run}.json"));
            let o = Command::new(env!("CARGO_BIN_EXE_pflab"))
                .arg(cmd)
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(&out)
                .env_remove("PFLAB_THREADS")
                .output()
                .expect("run pflab");
            if o.status.code() != Some(0) {
                differing.push(format!("{cmd} exited {}", o.status));
            }
            let json = std::fs::read(&out).unwrap_or_default();
            let csv = std::fs::read(out.with_extension("csv")).unwrap_or_default();
            outputs.push((json, csv));
        }
        if outputs[0] != outputs[1] || outputs[0].0.is_empty() {
            differing.push(cmd.to_string());
        }
    }
    pass_if(
        differing.is_empty(),
        format!("coeffs, fock-sweep, binding, verify reports and tables byte-identical across two runs {differing:?}"),
    )
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("first-order coefficient identity", Box::new(first_order)),
        ("route agreement of the six integrals", Box::new(route_agreement)),
        ("discrete to continuum convergence", Box::new(refinement)),
    ];
    let mut results = Vec::new();
    let mut run = |n: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "{} {:>2} {name}: {} [{:.1} s]",
            if o.passed { "PASS" } else { "FAIL" },
            n,
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push(o.passed);
    };
    for (i, (name, f)) in criteria.iter().enumerate() {
        run(i + 1, name, f.as_ref());
    }
    let g = sweep();
    run(4, "eigensolver vs perturbation coefficients", &|| fit_consistency(&g));
    run(5, "variational ordering and tf2 scaling", &|| variational(&g));
    run(6, "remainder scaling", &|| remainder(&g));
    run(7, "structural identities", &structural);
    run(8, "auxiliary operator bounds", &auxiliary_bounds);
    run(9, "zero resonance", &resonance);
    run(10, "binding margin", &binding);
    run(11, "determinism", &determinism);
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
