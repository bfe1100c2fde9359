//! Enhanced binding at a zero-energy resonance: shooting for the resonance
//! coupling, the smooth truncation ψ_ε = ψ·u(εα|x|), and the binding margin.
//!
//! Radial functions are stored through u(r) = rψ(r). The radial ODE is
//! integrated together with the running integrals needed later, so every
//! norm is computed at the same order as the profile itself. Outside the
//! support ψ = C/r exactly, so the annulus contributions are closed forms in
//! R = 1/(εα) times fixed integrals of the cutoff pair over [1, 2].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrate::{quad_1d, quad_3d};
use crate::kernels::{Cutoff, FormFactorTable};
use crate::vec3::{dot, from_spherical};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialProfile {
    /// v = −1 on [0, r0]. Discontinuous; used as a closed-form oracle.
    SquareWell,
    /// v = −(1 − (r/r0)²)² on [0, r0].
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    pub profile: PotentialProfile,
    pub r0: f64,
    /// Coupling multiplier; the potential is g·v(r).
    pub g: f64,
}

impl RadialPotential {
    pub fn new(profile: PotentialProfile, r0: f64) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidArgument(format!("support radius must be positive, got {r0}")));
        }
        Ok(RadialPotential { profile, r0, g: 1.0 })
    }

    pub fn square_well() -> Self {
        RadialPotential {
            profile: PotentialProfile::SquareWell,
            r0: 1.0,
            g: 1.0,
        }
    }

    pub fn bump() -> Self {
        RadialPotential {
            profile: PotentialProfile::Bump,
            r0: 1.0,
            g: 1.0,
        }
    }

    /// Unscaled profile v(r) ≤ 0, zero beyond r0.
    pub fn v(&self, r: f64) -> f64 {
        if r > self.r0 || r < 0.0 {
            return 0.0;
        }
        match self.profile {
            PotentialProfile::SquareWell => -1.0,
            PotentialProfile::Bump => {
                let x = r / self.r0;
                let a = 1.0 - x * x;
                -a * a
            }
        }
    }

    pub fn with_g(self, g: f64) -> Self {
        RadialPotential { g, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// RK4 steps on [0, r0]; the tail [r0, 3r0] uses twice as many.
    pub steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { steps: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialNode {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

/// Running integrals over [0, r0] accumulated with the profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileIntegrals {
    /// ∫ u² dr.
    pub uu: f64,
    /// ∫ (u′ − u/r)² dr, i.e. ∫ |ψ′|² r² dr.
    pub grad: f64,
    /// ∫ v u² dr.
    pub vuu: f64,
    /// ∫ (v u)² dr.
    pub vu_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub g: f64,
    /// Nodes on [0, 3r0].
    pub nodes: Vec<RadialNode>,
    /// Index of the node at r0.
    pub support_index: usize,
    pub u_prime_at_r0: f64,
    pub integrals: ProfileIntegrals,
    /// ∫₀^r v u s ds and ∫₀^r v u ds at each node.
    pub moments: Vec<[f64; 2]>,
}

const STATE: usize = 8;

fn rhs(p: &RadialPotential, g: f64, r: f64, y: &[f64; STATE]) -> [f64; STATE] {
    let v = p.v(r);
    let (u, du) = (y[0], y[1]);
    let grad = if r > 0.0 {
        let w = du - u / r;
        w * w
    } else {
        0.0
    };
    [du, g * v * u, v * u * r, v * u, u * u, grad, v * u * u, v * v * u * u]
}

fn rk4_step(p: &RadialPotential, g: f64, r: f64, h: f64, y: &[f64; STATE]) -> [f64; STATE] {
    let add = |a: &[f64; STATE], b: &[f64; STATE], s: f64| {
        let mut o = *a;
        for i in 0..STATE {
            o[i] += s * b[i];
        }
        o
    };
    let k1 = rhs(p, g, r, y);
    let k2 = rhs(p, g, r + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = rhs(p, g, r + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = rhs(p, g, r + h, &add(y, &k3, h));
    let mut o = *y;
    for i in 0..STATE {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

/// Integrates u″ = g v u from u(0) = 0, u′(0) = 1 with fixed-step RK4.
pub fn radial_shoot(potential: &RadialPotential, g: f64) -> Result<Shot> {
    radial_shoot_with(potential, g, &ShootOptions::default())
}

pub fn radial_shoot_with(potential: &RadialPotential, g: f64, opts: &ShootOptions) -> Result<Shot> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::Domain(format!("coupling must be finite and ≥ 0, got {g}")));
    }
    let r0 = potential.r0;
    let n = opts.steps;
    let h = if n == 0 { 0.0 } else { r0 / n as f64 };
    if !(h > 1e3 * f64::EPSILON * r0) {
        return Err(Error::StepUnderflow(h));
    }
    let total = 3 * n;
    let mut y = [0.0; STATE];
    y[1] = 1.0;
    let mut nodes = Vec::with_capacity(total + 1);
    let mut moments = Vec::with_capacity(total + 1);
    nodes.push(RadialNode { r: 0.0, u: 0.0, du: 1.0 });
    moments.push([0.0, 0.0]);
    let mut integrals = ProfileIntegrals::default();
    for i in 0..total {
        let r = i as f64 * h;
        y = rk4_step(potential, g, r, h, &y);
        nodes.push(RadialNode {
            r: (i + 1) as f64 * h,
            u: y[0],
            du: y[1],
        });
        moments.push([y[2], y[3]]);
        if i + 1 == n {
            integrals = ProfileIntegrals {
                uu: y[4],
                grad: y[5],
                vuu: y[6],
                vu_sq: y[7],
            };
        }
    }
    if nodes.iter().any(|nd| !nd.u.is_finite()) {
        return Err(Error::Domain(format!("radial profile overflowed at g = {g}")));
    }
    Ok(Shot {
        g,
        u_prime_at_r0: nodes[n].du,
        support_index: n,
        nodes,
        integrals,
        moments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceResult {
    pub potential: RadialPotential,
    pub g_star: f64,
    /// u′(r0) at g*.
    pub shoot_residual: f64,
    /// Largest relative residual of the integral equation
    /// ψ(r) = −g ∫ v(s) u(s) s / max(r, s) ds over 200 check radii in (0, 3r0].
    pub integral_equation_residual: f64,
    /// max |u(r) − u(r0)| / |u(r0)| on [r0, 3r0].
    pub tail_deviation: f64,
    pub iterations: usize,
    pub shot: Shot,
}

impl ResonanceResult {
    /// C in ψ = C/r beyond the support.
    pub fn tail_constant(&self) -> f64 {
        self.shot.nodes[self.shot.support_index].u
    }

    /// ‖pψ‖² = 4π ∫ |ψ′|² r² dr over [0, ∞).
    pub fn grad_sq(&self) -> f64 {
        let c = self.tail_constant();
        4.0 * PI * (self.shot.integrals.grad + c * c / self.potential.r0)
    }

    /// (ψ, [p² + V]ψ); zero at an exact resonance.
    pub fn resonance_energy(&self) -> f64 {
        4.0 * PI * self.g_star * self.shot.integrals.vuu + self.grad_sq()
    }

    /// ψ(r) from the profile (Hermite interpolation inside the support,
    /// C/r beyond it).
    pub fn psi(&self, r: f64) -> f64 {
        let nodes = &self.shot.nodes;
        let n = self.shot.support_index;
        let r0 = self.potential.r0;
        if r <= 0.0 {
            return nodes[0].du;
        }
        if r >= r0 {
            return self.tail_constant() / r;
        }
        let h = r0 / n as f64;
        let i = ((r / h) as usize).min(n - 1);
        let (a, b) = (nodes[i], nodes[i + 1]);
        let s = (r - a.r) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (h00 * a.u + h10 * h * a.du + h01 * b.u + h11 * h * b.du) / r
    }
}

/// Number of radii used for the a-posteriori integral-equation check.
pub const CHECK_POINTS: usize = 200;

fn integral_equation_residual(shot: &Shot) -> f64 {
    let n_total = shot.nodes.len() - 1;
    let [_, j2_end] = shot.moments[shot.support_index];
    let mut worst: f64 = 0.0;
    for k in 1..=CHECK_POINTS {
        let i = k * n_total / CHECK_POINTS;
        let nd = shot.nodes[i];
        let [j1, j2] = shot.moments[i];
        let lhs = nd.u / nd.r;
        let rhs = -shot.g * (j1 / nd.r + (j2_end - j2));
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    worst
}

/// Bisection on u′(r0) within `bracket` until |u′(r0)| ≤ tol.
pub fn find_resonance_coupling(potential: &RadialPotential, bracket: (f64, f64), tol: f64) -> Result<ResonanceResult> {
    find_resonance_coupling_with(potential, bracket, tol, &ShootOptions::default())
}

pub fn find_resonance_coupling_with(
    potential: &RadialPotential,
    bracket: (f64, f64),
    tol: f64,
    opts: &ShootOptions,
) -> Result<ResonanceResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need lo < hi and tol > 0, got ({lo}, {hi}), tol {tol}"
        )));
    }
    let f = |g: f64| radial_shoot_with(potential, g, opts).map(|s| s.u_prime_at_r0);
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut g = if flo.abs() <= fhi.abs() { lo } else { hi };
    let mut iterations = 0;
    let mut fg = f(g)?;
    while fg.abs() > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        iterations += 1;
        g = mid;
        fg = fm;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let shot = radial_shoot_with(potential, g, opts)?;
    let c = shot.nodes[shot.support_index].u;
    let tail_deviation = shot.nodes[shot.support_index..]
        .iter()
        .map(|nd| (nd.u - c).abs() / c.abs())
        .fold(0.0, f64::max);
    Ok(ResonanceResult {
        potential: potential.with_g(g),
        g_star: g,
        shoot_residual: shot.u_prime_at_r0,
        integral_equation_residual: integral_equation_residual(&shot),
        tail_deviation,
        iterations,
        shot,
    })
}

/// Scans g = g_max·i/n for the first sign change of u′(r0).
pub fn bracket_first_resonance(potential: &RadialPotential, g_max: f64, n: usize) -> Result<(f64, f64)> {
    let mut prev = (0.0, radial_shoot(potential, 0.0)?.u_prime_at_r0);
    for i in 1..=n.max(1) {
        let g = g_max * i as f64 / n.max(1) as f64;
        let f = radial_shoot(potential, g)?.u_prime_at_r0;
        if f.signum() != prev.1.signum() {
            return Ok((prev.0, g));
        }
        prev = (g, f);
    }
    Err(Error::NoBracket { lo: 0.0, hi: g_max })
}

/// Quintic smoothstep on [1, 2]: 0 below, 1 above, C² at both ends.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    let x = (t - 1.0).clamp(0.0, 1.0);
    if t <= 1.0 || t >= 2.0 {
        return (x, 0.0, 0.0);
    }
    let s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (s, ds, dds)
}

/// Cutoff pair (u, v) = (cos(πs/2), sin(πs/2)) with first and second derivatives.
pub fn cutoff_pair(t: f64) -> ([f64; 3], [f64; 3]) {
    let (s, ds, dds) = smoothstep(t);
    let a = 0.5 * PI;
    let (sn, cs) = (a * s).sin_cos();
    let u = [cs, -a * ds * sn, -a * dds * sn - a * a * ds * ds * cs];
    let v = [sn, a * ds * cs, a * dds * cs - a * a * ds * ds * sn];
    (u, v)
}

/// Fixed integrals of the cutoff pair over t ∈ [1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffIntegrals {
    /// ∫ u².
    pub u_sq: f64,
    /// ∫ (u′ − u/t)².
    pub u_grad: f64,
    /// ∫ (v′ − v/t)².
    pub v_grad: f64,
    /// ∫ u″².
    pub u_lap: f64,
    /// ∫ (u′² + v′²).
    pub localization: f64,
}

impl CutoffIntegrals {
    pub fn compute() -> Result<Self> {
        let q = |f: &dyn Fn(f64) -> f64| quad_1d(f, 1.0, 2.0, 1e-13).map(|r| r.value);
        Ok(CutoffIntegrals {
            u_sq: q(&|t| cutoff_pair(t).0[0].powi(2))?,
            u_grad: q(&|t| {
                let u = cutoff_pair(t).0;
                (u[1] - u[0] / t).powi(2)
            })?,
            v_grad: q(&|t| {
                let v = cutoff_pair(t).1;
                (v[1] - v[0] / t).powi(2)
            })?,
            u_lap: q(&|t| cutoff_pair(t).0[2].powi(2))?,
            localization: q(&|t| {
                let (u, v) = cutoff_pair(t);
                u[1] * u[1] + v[1] * v[1]
            })?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedState {
    pub epsilon: f64,
    pub alpha: f64,
    /// Inner cutoff radius R = 1/(εα); ψ_ε = ψ for r ≤ R and 0 beyond 2R.
    pub radius: f64,
    pub tail_constant: f64,
    /// ‖ψ_ε‖².
    pub norm_sq: f64,
    /// ‖pψ_ε‖².
    pub grad_sq: f64,
    /// ‖p²ψ_ε‖².
    pub lap_sq: f64,
    /// ‖p²ψ_ε‖² / ‖pψ_ε‖².
    pub c1: f64,
    /// ‖pψ_ε‖² / (αε‖ψ_ε‖²).
    pub c2: f64,
    /// max |u² + v² − 1| over the sampled partition.
    pub partition_error: f64,
    pub cutoff_integrals: CutoffIntegrals,
}

impl TruncatedState {
    /// ψ_ε(r).
    pub fn psi(&self, res: &ResonanceResult, r: f64) -> f64 {
        if self.radius.is_infinite() {
            return res.psi(r);
        }
        res.psi(r) * cutoff_pair(r / self.radius).0[0]
    }
}

pub fn partition_error(samples: usize) -> f64 {
    (0..=samples)
        .map(|i| {
            let t = 3.0 * i as f64 / samples as f64;
            let (u, v) = cutoff_pair(t);
            (u[0] * u[0] + v[0] * v[0] - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

pub fn truncate_state(res: &ResonanceResult, alpha: f64, epsilon: f64) -> Result<TruncatedState> {
    truncate_state_with(res, alpha, epsilon, &CutoffIntegrals::compute()?)
}

fn truncate_state_with(res: &ResonanceResult, alpha: f64, epsilon: f64, ci: &CutoffIntegrals) -> Result<TruncatedState> {
    if !(epsilon > 0.0) || !epsilon.is_finite() || !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need ε > 0 and α ≥ 0, got ε = {epsilon}, α = {alpha}"
        )));
    }
    let r0 = res.potential.r0;
    let radius = 1.0 / (epsilon * alpha);
    if radius < 2.0 * r0 {
        return Err(Error::InvalidArgument(format!(
            "1/(εα) = {radius} is below twice the support radius {r0}"
        )));
    }
    let c = res.tail_constant();
    let c2 = c * c;
    let it = &res.shot.integrals;
    let g = res.g_star;
    let four_pi = 4.0 * PI;
    let (norm_sq, grad_sq, lap_sq) = if radius.is_infinite() {
        (
            f64::INFINITY,
            four_pi * (it.grad + c2 / r0),
            four_pi * g * g * it.vu_sq,
        )
    } else {
        (
            four_pi * (it.uu + c2 * (radius - r0) + c2 * radius * ci.u_sq),
            four_pi * (it.grad + c2 * (1.0 / r0 - 1.0 / radius) + c2 / radius * ci.u_grad),
            four_pi * (g * g * it.vu_sq + c2 / radius.powi(3) * ci.u_lap),
        )
    };
    Ok(TruncatedState {
        epsilon,
        alpha,
        radius,
        tail_constant: c,
        norm_sq,
        grad_sq,
        lap_sq,
        c1: lap_sq / grad_sq,
        c2: grad_sq / (alpha * epsilon * norm_sq),
        partition_error: partition_error(3000),
        cutoff_integrals: *ci,
    })
}

/// Closed form (2/(3π))ln(1+Λ) of Σ_λ ∫ (l̂·G^λ)²/(|k|² + |k|) d³k against
/// quadratures of the 3D integrand and of the reduced 2D form
/// π⁻¹ ∫₀^Λ ∫₋₁¹ x²/(1 + r) dx dr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldCoefficient {
    pub closed_form: f64,
    pub quadrature_3d: f64,
    pub quadrature_2d: f64,
}

impl FieldCoefficient {
    pub fn max_relative_deviation(&self) -> f64 {
        let c = self.closed_form;
        if c == 0.0 {
            return self.quadrature_3d.abs().max(self.quadrature_2d.abs());
        }
        ((self.quadrature_3d - c).abs() / c).max((self.quadrature_2d - c).abs() / c)
    }
}

pub fn field_coefficient_closed(cutoff: Cutoff) -> f64 {
    2.0 / (3.0 * PI) * cutoff.lambda().ln_1p()
}

pub fn field_coefficient(cutoff: Cutoff) -> Result<FieldCoefficient> {
    let lam = cutoff.lambda();
    let closed_form = field_coefficient_closed(cutoff);
    if cutoff.is_empty() {
        return Ok(FieldCoefficient {
            closed_form,
            quadrature_3d: 0.0,
            quadrature_2d: 0.0,
        });
    }
    let table = FormFactorTable::new(cutoff);
    let l = [1.0 / 3.0, 2.0 / 3.0, -2.0 / 3.0];
    let q3 = quad_3d(
        |r, t, phi| {
            let k = from_spherical(r, t, phi);
            let gs = match table.g_amplitude(k) {
                Ok(g) => g,
                Err(_) => return 0.0,
            };
            let s: f64 = gs.iter().map(|g| dot(*g, l).powi(2)).sum();
            s * r * r / (r * r + r)
        },
        [(0.0, lam), (-1.0, 1.0), (0.0, 2.0 * PI)],
        1e-12,
    )?;
    let q2 = quad_1d(
        |r| {
            let inner = quad_1d(|x| x * x, -1.0, 1.0, 1e-14).map(|v| v.value).unwrap_or(f64::NAN);
            inner / (PI * (1.0 + r))
        },
        0.0,
        lam,
        1e-13,
    )?;
    Ok(FieldCoefficient {
        closed_form,
        quadrature_3d: q3.value,
        quadrature_2d: q2.value,
    })
}

/// Terms of the localization identity
/// (ψ_ε,[p²+V]ψ_ε) = (ψ,[p²+V]ψ) − (ψv,[p²+V]ψv) + (ψ,[|∇u|²+|∇v|²]ψ).
/// The residual is relative to the largest of the terms, ‖pψ_ε‖² and |(ψ_ε,Vψ_ε)|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationTerms {
    /// ‖pψ_ε‖² + (ψ_ε, Vψ_ε).
    pub direct: f64,
    pub resonance_energy: f64,
    pub outer_energy: f64,
    pub gradient_energy: f64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BindingReport {
    pub lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub truncated: TruncatedState,
    pub d: f64,
    /// (2/(3π))ln(1+Λ).
    pub field_coefficient: f64,
    /// α ln(1+Λ)/(6π(C₁+1)) ‖pψ_ε‖².
    pub field_term: f64,
    pub margin: f64,
    /// −margin/(α²‖ψ_ε‖²).
    pub delta: f64,
    /// −margin/(α‖pψ‖²).
    pub nu: f64,
    pub binding: bool,
    pub localization_terms: LocalizationTerms,
}

/// Tolerance of the localization identity (relative) and of the resonance
/// energy (relative to ‖pψ‖²).
pub const IDENTITY_TOL: f64 = 1e-8;

/// Binding is asserted only for margin < −MARGIN_FLOOR·‖pψ_ε‖², which keeps
/// resonance roundoff (the α = 0 margin is zero up to it) from counting.
pub const MARGIN_FLOOR: f64 = 1e-9;

pub fn binding_margin(res: &ResonanceResult, cutoff: Cutoff, alpha: f64, epsilon: f64) -> Result<BindingReport> {
    binding_margin_with(res, cutoff, alpha, epsilon, &CutoffIntegrals::compute()?)
}

fn binding_margin_with(
    res: &ResonanceResult,
    cutoff: Cutoff,
    alpha: f64,
    epsilon: f64,
    ci: &CutoffIntegrals,
) -> Result<BindingReport> {
    let ts = truncate_state_with(res, alpha, epsilon, ci)?;
    let four_pi = 4.0 * PI;
    let c2 = ts.tail_constant * ts.tail_constant;
    let potential_energy = four_pi * res.g_star * res.shot.integrals.vuu;
    let direct = ts.grad_sq + potential_energy;
    let resonance_energy = res.resonance_energy();
    let inv_r = 1.0 / ts.radius;
    let outer_energy = four_pi * c2 * inv_r * (ci.v_grad + 0.5);
    let gradient_energy = four_pi * c2 * inv_r * ci.localization;
    let ims = resonance_energy - outer_energy + gradient_energy;
    // relative to the largest constituent; both sides are small differences of O(1) terms
    let scale = [direct, outer_energy, gradient_energy, ts.grad_sq, potential_energy]
        .iter()
        .fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
    let identity_residual = (direct - ims).abs() / scale;
    let p_sq = res.grad_sq();
    if identity_residual > IDENTITY_TOL {
        return Err(Error::Consistency(format!(
            "localization identity residual {identity_residual:e} exceeds {IDENTITY_TOL:e}"
        )));
    }
    if resonance_energy.abs() > IDENTITY_TOL * p_sq.max(1.0) {
        return Err(Error::Consistency(format!(
            "(ψ,[p²+V]ψ) = {resonance_energy:e} is not at a resonance"
        )));
    }
    let lam = cutoff.lambda();
    let field_term = alpha * lam.ln_1p() / (6.0 * PI * (ts.c1 + 1.0)) * ts.grad_sq;
    let margin = direct - field_term;
    Ok(BindingReport {
        lambda: lam,
        alpha,
        epsilon,
        truncated: ts,
        d: 1.0 / (2.0 * (ts.c1 + 1.0)),
        field_coefficient: field_coefficient_closed(cutoff),
        field_term,
        margin,
        delta: -margin / (alpha * alpha * ts.norm_sq),
        nu: -margin / (alpha * p_sq),
        binding: margin < -MARGIN_FLOOR * ts.grad_sq,
        localization_terms: LocalizationTerms {
            direct,
            resonance_energy,
            outer_energy,
            gradient_energy,
            identity_residual,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub lambda: f64,
    pub alpha: f64,
    /// One report per ε = 2^{−j} satisfying 1/(εα) ≥ 2r0, in increasing j.
    pub points: Vec<BindingReport>,
    /// Index of the most negative margin.
    pub best: usize,
    /// Index of the largest δ (the margin shrinks with ε while ‖ψ_ε‖² grows).
    pub best_delta: usize,
}

impl EpsilonScan {
    pub fn best(&self) -> &BindingReport {
        &self.points[self.best]
    }

    pub fn binding(&self) -> bool {
        self.best().binding
    }
}

/// Margin over ε = 2^{−j}, j = j_min..=j_max, evaluated in parallel.
pub fn scan_epsilon(res: &ResonanceResult, cutoff: Cutoff, alpha: f64, j_min: i32, j_max: i32) -> Result<EpsilonScan> {
    if j_min > j_max {
        return Err(Error::InvalidArgument(format!("empty ε range j ∈ [{j_min}, {j_max}]")));
    }
    let ci = CutoffIntegrals::compute()?;
    let r0 = res.potential.r0;
    let eps: Vec<f64> = (j_min..=j_max)
        .map(|j| 2f64.powi(-j))
        .filter(|e| 1.0 / (e * alpha) >= 2.0 * r0)
        .collect();
    if eps.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no ε = 2^-j with j ∈ [{j_min}, {j_max}] satisfies 1/(εα) ≥ 2r0"
        )));
    }
    let points: Vec<BindingReport> = eps
        .par_iter()
        .map(|&e| binding_margin_with(res, cutoff, alpha, e, &ci))
        .collect::<Result<_>>()?;
    let best = points
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.margin < points[b].margin { i } else { b });
    let best_delta = points
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.delta > points[b].delta { i } else { b });
    Ok(EpsilonScan {
        lambda: cutoff.lambda(),
        alpha,
        points,
        best,
        best_delta,
    })
}
