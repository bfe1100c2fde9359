//! Adaptive Gauss-Kronrod (7/15) quadrature in 1D and tensorized 3D, and
//! seeded Monte Carlo over one or two cutoff balls.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gauss::kronrod15_on;
use crate::integrand::{self, TwoPhotonTerms};
use crate::kernels::{Cutoff, FormFactorTable, KernelName};
use crate::vec3::{dot, Vec3};
use crate::{Error, Result};

pub const DEFAULT_TOL_1D: f64 = 1e-9;
pub const DEFAULT_TOL_3D: f64 = 1e-6;
pub const DEFAULT_MC_SAMPLES: u64 = 10_000_000;
pub const MIN_MC_SAMPLES: u64 = 10_000;
/// Samples per Monte Carlo block; each block owns an independent ChaCha stream.
pub const MC_BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub const ZERO: QuadratureResult = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
    };
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub tol: f64,
    /// Maximum bisection depth of a panel.
    pub max_depth: u32,
    /// Maximum number of accepted panels per 1D integral.
    pub max_panels: usize,
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            tol,
            max_depth: 50,
            max_panels: 20_000,
        }
    }
}

struct Outcome {
    result: QuadratureResult,
    converged: bool,
}

/// Core adaptive integrator. `f` returns (value, inner error estimate, evaluations)
/// so that nested integrals propagate their own error estimates outward.
fn adaptive<F>(f: &mut F, a: f64, b: f64, opts: &QuadOptions) -> Result<Outcome>
where
    F: FnMut(f64) -> (f64, f64, usize),
{
    let total = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evals = 0usize;
    let mut panels = 0usize;
    let mut converged = true;
    while let Some((lo, hi, depth)) = stack.pop() {
        let mut k = 0.0;
        let mut g = 0.0;
        let mut inner = 0.0;
        for (x, wk, wg) in kronrod15_on(lo, hi) {
            let (v, e, n) = f(x);
            if !v.is_finite() {
                return Err(Error::Domain(format!("integrand is not finite at x = {x}")));
            }
            k += wk * v;
            g += wg * v;
            inner += wk * e;
            evals += n;
        }
        let err = (k - g).abs() + inner.abs();
        let local_tol = if total > 0.0 {
            opts.tol * (hi - lo) / total
        } else {
            opts.tol
        };
        let exhausted = depth >= opts.max_depth || panels + stack.len() >= opts.max_panels;
        if err <= local_tol || exhausted {
            if err > local_tol {
                converged = false;
            }
            value += k;
            error += err;
            panels += 1;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    let converged = converged || error <= opts.tol;
    Ok(Outcome {
        result: QuadratureResult {
            value,
            error_estimate: error,
            evaluations: evals,
        },
        converged,
    })
}

fn check_interval(a: f64, b: f64, tol: f64) -> Result<()> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn finish(o: Outcome, tol: f64) -> Result<QuadratureResult> {
    if o.converged {
        Ok(o.result)
    } else {
        Err(Error::QuadratureNonConvergence {
            partial: o.result,
            tol,
        })
    }
}

/// Adaptive ∫_a^b f with absolute tolerance `tol`.
pub fn quad_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    quad_1d_with(f, a, b, &QuadOptions::with_tol(tol))
}

pub fn quad_1d_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadratureResult> {
    check_interval(a, b, opts.tol)?;
    let mut g = |x: f64| (f(x), 0.0, 1);
    finish(adaptive(&mut g, a, b, opts)?, opts.tol)
}

/// Tensorized adaptive integral over a box `[a₀,b₀]×[a₁,b₁]×[a₂,b₂]`, the
/// first coordinate outermost. The tolerance is split equally between the
/// three levels, each inner budget scaled by the measure of the outer range.
pub fn quad_3d<F: Fn(f64, f64, f64) -> f64>(
    f: F,
    bounds: [(f64, f64); 3],
    tol: f64,
) -> Result<QuadratureResult> {
    for &(a, b) in &bounds {
        check_interval(a, b, tol)?;
    }
    let l0 = bounds[0].1 - bounds[0].0;
    let l1 = bounds[1].1 - bounds[1].0;
    let tol2 = tol / 3.0 / (l0 * l1).max(f64::MIN_POSITIVE);
    let tol1 = 2.0 * tol / 3.0 / l0.max(f64::MIN_POSITIVE);
    let o2 = QuadOptions::with_tol(tol2);
    let o1 = QuadOptions::with_tol(tol1);
    let o0 = QuadOptions::with_tol(tol);
    let mut failure: Option<Error> = None;
    let mut outer = |x0: f64| {
        let mut mid = |x1: f64| {
            let mut inner = |x2: f64| (f(x0, x1, x2), 0.0, 1);
            match adaptive(&mut inner, bounds[2].0, bounds[2].1, &o2) {
                Ok(o) => (o.result.value, o.result.error_estimate, o.result.evaluations),
                Err(e) => {
                    failure.get_or_insert(e);
                    (0.0, 0.0, 0)
                }
            }
        };
        match adaptive(&mut mid, bounds[1].0, bounds[1].1, &o1) {
            Ok(o) => (o.result.value, o.result.error_estimate, o.result.evaluations),
            Err(e) => {
                failure.get_or_insert(e);
                (0.0, 0.0, 0)
            }
        }
    };
    let o = adaptive(&mut outer, bounds[0].0, bounds[0].1, &o0)?;
    if let Some(e) = failure {
        return Err(e);
    }
    finish(o, tol)
}

/// ∫∫∫ f(r₁, r₂, t) over (0,Λ]²×[-1,1]. Both radial variables are integrated
/// as r = s², which removes the square-root behaviour at the origin.
pub fn quad_3d_box<F: Fn(f64, f64, f64) -> f64>(
    f: F,
    cutoff: Cutoff,
    tol: f64,
) -> Result<QuadratureResult> {
    let sl = cutoff.lambda().sqrt();
    quad_3d(
        |s1, s2, t| 4.0 * s1 * s2 * f(s1 * s1, s2 * s2, t),
        [(0.0, sl), (0.0, sl), (-1.0, 1.0)],
        tol,
    )
}

/// Monte Carlo estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Running mean and centred second moment.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }

    fn estimate(&self, volume: f64, n_samples: u64, seed: u64) -> MCEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        MCEstimate {
            mean: volume * self.mean,
            std_error: volume * (var / self.n).sqrt(),
            n_samples,
            seed,
        }
    }
}

#[inline]
fn sample_ball<R: Rng>(rng: &mut R, lambda: f64) -> Vec3 {
    loop {
        let k = [
            lambda * (2.0 * rng.random::<f64>() - 1.0),
            lambda * (2.0 * rng.random::<f64>() - 1.0),
            lambda * (2.0 * rng.random::<f64>() - 1.0),
        ];
        if dot(k, k) <= lambda * lambda {
            return k;
        }
    }
}

fn ball_volume(lambda: f64) -> f64 {
    4.0 / 3.0 * PI * lambda.powi(3)
}

fn check_samples(n: u64) -> Result<()> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// Blockwise sampling: block b draws from ChaCha8(seed) on stream b, blocks
/// are evaluated in parallel and merged in block order.
fn run_blocks<const N: usize, F>(cutoff: Cutoff, balls: usize, n: u64, seed: u64, f: F) -> Result<[Moments; N]>
where
    F: Fn(Vec3, Vec3) -> Result<[f64; N]> + Sync,
{
    let lambda = cutoff.lambda();
    let blocks = n.div_ceil(MC_BLOCK);
    let parts: Vec<Result<[Moments; N]>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = MC_BLOCK.min(n - b * MC_BLOCK);
            let mut m = [Moments::default(); N];
            for _ in 0..count {
                let k1 = sample_ball(&mut rng, lambda);
                let k2 = if balls == 2 { sample_ball(&mut rng, lambda) } else { [0.0; 3] };
                let v = f(k1, k2)?;
                for i in 0..N {
                    m[i].push(v[i]);
                }
            }
            Ok(m)
        })
        .collect();
    let mut acc = [Moments::default(); N];
    for p in parts {
        let p = p?;
        for i in 0..N {
            acc[i].merge(&p[i]);
        }
    }
    Ok(acc)
}

/// Monte Carlo estimates of the four two-photon integrals and the EE/EP
/// cross term from one common sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonMC {
    pub dd: MCEstimate,
    pub eeee: MCEstimate,
    pub epd: MCEstimate,
    pub eedd: MCEstimate,
    pub cross_ep: MCEstimate,
}

impl TwoPhotonMC {
    pub fn get(&self, name: KernelName) -> Option<MCEstimate> {
        match name {
            KernelName::DD => Some(self.dd),
            KernelName::EEEE => Some(self.eeee),
            KernelName::EPD => Some(self.epd),
            KernelName::EEDD => Some(self.eedd),
            _ => None,
        }
    }
}

fn zero_estimate(n: u64, seed: u64) -> MCEstimate {
    MCEstimate {
        mean: 0.0,
        std_error: 0.0,
        n_samples: n,
        seed,
    }
}

/// Joint two-photon Monte Carlo over the ball pair |k₁|, |k₂| ≤ Λ.
pub fn mc_two_photon(cutoff: Cutoff, n_samples: u64, seed: u64) -> Result<TwoPhotonMC> {
    check_samples(n_samples)?;
    if cutoff.is_empty() {
        let z = zero_estimate(n_samples, seed);
        return Ok(TwoPhotonMC { dd: z, eeee: z, epd: z, eedd: z, cross_ep: z });
    }
    let table = FormFactorTable::new(cutoff);
    let m = run_blocks::<5, _>(cutoff, 2, n_samples, seed, |k1, k2| {
        let t: TwoPhotonTerms = integrand::two_photon(k1, k2, &table)?;
        Ok([t.dd, t.eeee, t.epd, t.eedd, t.cross_ep])
    })?;
    let vol = ball_volume(cutoff.lambda()).powi(2);
    let e = |i: usize| m[i].estimate(vol, n_samples, seed);
    Ok(TwoPhotonMC {
        dd: e(0),
        eeee: e(1),
        epd: e(2),
        eedd: e(3),
        cross_ep: e(4),
    })
}

/// Joint one-photon Monte Carlo of (IEE, N1) over the ball |k| ≤ Λ.
pub fn mc_one_photon(cutoff: Cutoff, n_samples: u64, seed: u64) -> Result<(MCEstimate, MCEstimate)> {
    check_samples(n_samples)?;
    if cutoff.is_empty() {
        let z = zero_estimate(n_samples, seed);
        return Ok((z, z));
    }
    let table = FormFactorTable::new(cutoff);
    let m = run_blocks::<2, _>(cutoff, 1, n_samples, seed, |k, _| {
        let (a, b) = integrand::one_photon(k, &table)?;
        Ok([a, b])
    })?;
    let vol = ball_volume(cutoff.lambda());
    Ok((
        m[0].estimate(vol, n_samples, seed),
        m[1].estimate(vol, n_samples, seed),
    ))
}

/// Monte Carlo of the named vacuum expectation value from its unreduced,
/// spin-resolved integrand.
pub fn mc_vev(name: KernelName, cutoff: Cutoff, n_samples: u64, seed: u64) -> Result<MCEstimate> {
    match name {
        KernelName::IEE => Ok(mc_one_photon(cutoff, n_samples, seed)?.0),
        KernelName::N1 => Ok(mc_one_photon(cutoff, n_samples, seed)?.1),
        _ => Ok(mc_two_photon(cutoff, n_samples, seed)?
            .get(name)
            .expect("two-photon name")),
    }
}

/// Quadrature of a named integral from its reduced kernel.
pub fn quad_vev(name: KernelName, cutoff: Cutoff, tol: f64) -> Result<QuadratureResult> {
    let lam = cutoff.lambda();
    if name.is_two_photon() {
        quad_3d_box(|r1, r2, t| name.eval(r1, r2, t, lam), cutoff, tol)
    } else {
        quad_1d(|r| name.eval(r, 0.0, 0.0, lam), 0.0, lam, tol)
    }
}
