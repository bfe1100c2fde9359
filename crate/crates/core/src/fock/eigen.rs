//! Lowest eigenpairs of Hermitian operators: Davidson with diagonal
//! preconditioning (default) and Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::{inner, norm_sqr};
use super::operator::FockOperator;
use crate::{Error, Result};

type C = Complex64;

pub trait HermitianOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C], y: &mut [C]);
    fn diagonal(&self) -> Vec<f64>;
}

impl HermitianOperator for FockOperator {
    fn dim(&self) -> usize {
        FockOperator::dim(self)
    }
    fn apply(&self, x: &[C], y: &mut [C]) {
        FockOperator::apply(self, x, y)
    }
    fn diagonal(&self) -> Vec<f64> {
        FockOperator::diagonal(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eigensolver {
    Davidson,
    Lanczos,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Residual norm target ‖Tx − θx‖ for a normalized x.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: Eigensolver,
    /// Davidson subspace size before restart.
    pub max_subspace: usize,
    /// Also solve for the second level (deflated) to report the gap.
    pub compute_gap: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: 400,
            solver: Eigensolver::Davidson,
            max_subspace: 14,
            compute_gap: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    /// Normalized eigenvector.
    pub state: Vec<C>,
    pub residual: f64,
    /// Second level minus the lowest, from a solve deflated against `state`;
    /// ≈ 0 signals the two-fold spin degeneracy. NaN if not computed.
    pub degeneracy_gap: f64,
    pub second_residual: f64,
    pub iterations: usize,
}

/// Lowest eigenpair of T (Davidson, spin-up vacuum start).
pub fn ground_state(op: &FockOperator, tol: f64, max_iter: usize) -> Result<GroundStateResult> {
    ground_state_with(
        op,
        &EigenOptions {
            tol,
            max_iter,
            ..Default::default()
        },
    )
}

pub fn ground_state_with<A: HermitianOperator + ?Sized>(op: &A, opts: &EigenOptions) -> Result<GroundStateResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let n = op.dim();
    let mut up = vec![C::new(0.0, 0.0); n];
    up[0] = C::new(1.0, 0.0);
    let first = match opts.solver {
        Eigensolver::Davidson => davidson(op, &up, &[], opts)?,
        Eigensolver::Lanczos => lanczos(op, &up, opts)?,
    };
    let (gap, r2) = if opts.compute_gap && n > 1 {
        let mut down = vec![C::new(0.0, 0.0); n];
        down[1.min(n - 1)] = C::new(1.0, 0.0);
        let second = davidson(op, &down, std::slice::from_ref(&first.vector), opts)?;
        (second.value - first.value, second.residual)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(GroundStateResult {
        energy: first.value,
        state: first.vector,
        residual: first.residual,
        degeneracy_gap: gap,
        second_residual: r2,
        iterations: first.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<C>,
    pub residual: f64,
    pub iterations: usize,
}

fn axpy(a: C, x: &[C], y: &mut [C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale_in_place(s: f64, x: &mut [C]) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// Orthogonalize `x` against orthonormal `basis` twice (classical Gram-Schmidt
/// with one reorthogonalization pass). Returns the remaining norm.
fn orthogonalize(x: &mut [C], basis: &[Vec<C>]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = inner(q, x);
            axpy(-c, q, x);
        }
    }
    norm_sqr(x).sqrt()
}

/// Lowest eigenpair of a small Hermitian matrix via its real symmetric embedding.
fn lowest_hermitian(h: &DMatrix<C>) -> (f64, Vec<C>) {
    let k = h.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let z = h[(i, j)];
            r[(i, j)] = z.re;
            r[(i + k, j + k)] = z.re;
            r[(i, j + k)] = -z.im;
            r[(i + k, j)] = z.im;
        }
    }
    let e = SymmetricEigen::new(r);
    let (imin, _) = e
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let col = e.eigenvectors.column(imin);
    let mut y: Vec<C> = (0..k).map(|i| C::new(col[i], col[i + k])).collect();
    let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    y.iter_mut().for_each(|z| *z /= nrm);
    (e.eigenvalues[imin], y)
}

/// Davidson iteration for the lowest eigenpair in the orthogonal complement
/// of `deflate` (orthonormal vectors).
pub fn davidson<A: HermitianOperator + ?Sized>(
    op: &A,
    start: &[C],
    deflate: &[Vec<C>],
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let n = op.dim();
    let diag = op.diagonal();
    let mut v0 = start.to_vec();
    if orthogonalize(&mut v0, deflate) < 1e-12 {
        v0 = diag.iter().map(|d| C::new(1.0 + 1e-3 * d, 0.0)).collect();
        orthogonalize(&mut v0, deflate);
    }
    let nv = norm_sqr(&v0).sqrt();
    scale_in_place(1.0 / nv, &mut v0);

    let mut vs: Vec<Vec<C>> = Vec::new();
    let mut ws: Vec<Vec<C>> = Vec::new();
    let mut best = (f64::INFINITY, f64::INFINITY, v0.clone());
    let mut next = v0;
    let maxk = opts.max_subspace.max(3);
    for iter in 1..=opts.max_iter {
        let mut w = vec![C::new(0.0, 0.0); n];
        op.apply(&next, &mut w);
        vs.push(next);
        ws.push(w);
        let k = vs.len();
        let mut h = DMatrix::<C>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let z = inner(&vs[i], &ws[j]);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
            h[(i, i)] = C::new(h[(i, i)].re, 0.0);
        }
        let (theta, y) = lowest_hermitian(&h);
        let mut x = vec![C::new(0.0, 0.0); n];
        let mut ax = vec![C::new(0.0, 0.0); n];
        for i in 0..k {
            axpy(y[i], &vs[i], &mut x);
            axpy(y[i], &ws[i], &mut ax);
        }
        let mut r: Vec<C> = ax.iter().zip(&x).map(|(a, b)| a - b * theta).collect();
        for q in deflate {
            let c = inner(q, &r);
            axpy(-c, q, &mut r);
        }
        let res = norm_sqr(&r).sqrt();
        if res < best.1 {
            best = (theta, res, x.clone());
        }
        if res <= opts.tol {
            let nx = norm_sqr(&x).sqrt();
            scale_in_place(1.0 / nx, &mut x);
            return Ok(EigenPair {
                value: theta,
                vector: x,
                residual: res,
                iterations: iter,
            });
        }
        let mut t: Vec<C> = r
            .iter()
            .zip(&diag)
            .map(|(ri, di)| {
                let den = theta - di;
                let den = if den.abs() < 1e-12 { 1e-12_f64.copysign(den) } else { den };
                ri / den
            })
            .collect();
        if k >= maxk {
            // restart from the current Ritz vector
            let nx = norm_sqr(&x).sqrt();
            scale_in_place(1.0 / nx, &mut x);
            scale_in_place(1.0 / nx, &mut ax);
            vs = vec![x];
            ws = vec![ax];
        }
        let mut all: Vec<Vec<C>> = deflate.to_vec();
        all.extend(vs.iter().cloned());
        let mut nt = orthogonalize(&mut t, &all);
        if nt < 1e-14 {
            t = r;
            nt = orthogonalize(&mut t, &all);
            if nt < 1e-300 {
                break;
            }
        }
        scale_in_place(1.0 / nt, &mut t);
        next = t;
    }
    Err(Error::EigenNonConvergence {
        iterations: opts.max_iter,
        residual: best.1,
        energy: best.0,
    })
}

/// Lanczos with full reorthogonalization; all Krylov vectors are stored, so
/// this is meant for small spaces and cross-checks.
pub fn lanczos<A: HermitianOperator + ?Sized>(op: &A, start: &[C], opts: &EigenOptions) -> Result<EigenPair> {
    let n = op.dim();
    let mut q = start.to_vec();
    let nq = norm_sqr(&q).sqrt();
    scale_in_place(1.0 / nq, &mut q);
    let mut qs: Vec<Vec<C>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best = (f64::INFINITY, f64::INFINITY);
    let steps = opts.max_iter.min(n);
    for j in 0..steps {
        let mut w = vec![C::new(0.0, 0.0); n];
        op.apply(&qs[j], &mut w);
        let a = inner(&qs[j], &w).re;
        alphas.push(a);
        let beta_next = orthogonalize(&mut w, &qs);
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let e = SymmetricEigen::new(t);
        let (imin, theta) = e
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let s = e.eigenvectors.column(imin);
        let res = beta_next * s[m - 1].abs();
        if res < best.1 {
            best = (theta, res);
        }
        let exhausted = beta_next < 1e-14 || j + 1 == n;
        if res <= opts.tol || exhausted {
            let mut x = vec![C::new(0.0, 0.0); n];
            for i in 0..m {
                axpy(C::new(s[i], 0.0), &qs[i], &mut x);
            }
            let nx = norm_sqr(&x).sqrt();
            scale_in_place(1.0 / nx, &mut x);
            let mut ax = vec![C::new(0.0, 0.0); n];
            op.apply(&x, &mut ax);
            let rho = inner(&x, &ax).re;
            let r: Vec<C> = ax.iter().zip(&x).map(|(a, b)| a - b * rho).collect();
            return Ok(EigenPair {
                value: rho,
                vector: x,
                residual: norm_sqr(&r).sqrt(),
                iterations: j + 1,
            });
        }
        betas.push(beta_next);
        scale_in_place(1.0 / beta_next, &mut w);
        qs.push(w);
    }
    Err(Error::EigenNonConvergence {
        iterations: steps,
        residual: best.1,
        energy: best.0,
    })
}
