//! Matrix-free truncated operator at fixed total momentum ℓ:
//!
//! `T = L + √α (F + F*) + α (c + 2 D*·D + D*·D* + D·D)`, with
//! `L = |ℓ − P_f|² + H_f`, `F* = 2𝒫·D* + σ·E*`, `𝒫 = ℓ − P_f` and
//! `c = Σ_m |g_m|²`, restricted to at most two photons.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::FockBasis;
use super::grid::ModeGrid;
use crate::spin::{self, Spinor};
use crate::vec3::{add, dot, sub, Vec3};
use crate::{Error, Result};

type C = Complex64;

/// Amplitude of a one-photon creation term on mode m with electron-field
/// momentum 𝒫 of the output state: `p·2𝒫·g_m + e·(−iσ·h_m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub p: f64,
    pub e: f64,
}

impl Coupling {
    /// F* = 2𝒫·D* + σ·E*.
    pub const F_STAR: Coupling = Coupling { p: 1.0, e: 1.0 };
    /// σ·E* alone.
    pub const E_STAR: Coupling = Coupling { p: 0.0, e: 1.0 };
    /// 2𝒫·D* alone.
    pub const P_D_STAR: Coupling = Coupling { p: 1.0, e: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleOptions {
    /// Constant added to every sector's diagonal (α³ for the infrared-regularized L_α).
    pub infrared_shift: Option<f64>,
    /// Keep doubly occupied modes in sector 2.
    pub include_diagonal_pairs: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            infrared_shift: None,
            include_diagonal_pairs: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockOperator {
    pub alpha: f64,
    pub total_momentum: Vec3,
    pub infrared_shift: Option<f64>,
    pub vacuum_constant: f64,
    basis: FockBasis,
    k: Vec<Vec3>,
    r: Vec<f64>,
    g: Vec<Vec3>,
    h: Vec<Vec3>,
    l0: f64,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

/// Assemble T on the grid. `infrared_shift` is the diagonal constant, usually α³.
pub fn assemble(grid: &ModeGrid, alpha: f64, ell: Vec3, infrared_shift: Option<f64>) -> Result<FockOperator> {
    assemble_with(
        grid,
        alpha,
        ell,
        &AssembleOptions {
            infrared_shift,
            ..Default::default()
        },
    )
}

pub fn assemble_with(grid: &ModeGrid, alpha: f64, ell: Vec3, opts: &AssembleOptions) -> Result<FockOperator> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
    }
    let m = grid.len();
    let basis = FockBasis::new(m, opts.include_diagonal_pairs);
    let k: Vec<Vec3> = grid.modes.iter().map(|x| x.k).collect();
    let r: Vec<f64> = grid.modes.iter().map(|x| x.r).collect();
    let g: Vec<Vec3> = grid.modes.iter().map(|x| x.g).collect();
    let h: Vec<Vec3> = grid.modes.iter().map(|x| x.h).collect();
    let l1 = (0..m)
        .map(|i| {
            let p = sub(ell, k[i]);
            dot(p, p) + r[i]
        })
        .collect();
    let l2 = basis
        .pairs()
        .map(|(a, b)| {
            let p = sub(ell, add(k[a], k[b]));
            dot(p, p) + r[a] + r[b]
        })
        .collect();
    Ok(FockOperator {
        alpha,
        total_momentum: ell,
        infrared_shift: opts.infrared_shift,
        vacuum_constant: grid.vacuum_constant(),
        basis,
        k,
        r,
        g,
        h,
        l0: dot(ell, ell),
        l1,
        l2,
    })
}

#[inline]
fn spinor_at(x: &[C], i: usize) -> Spinor {
    [x[2 * i], x[2 * i + 1]]
}

#[inline]
fn add_spinor(y: &mut [C], i: usize, v: Spinor) {
    y[2 * i] += v[0];
    y[2 * i + 1] += v[1];
}

impl FockOperator {
    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    pub fn mode_k(&self, m: usize) -> Vec3 {
        self.k[m]
    }

    pub fn mode_r(&self, m: usize) -> f64 {
        self.r[m]
    }

    pub fn mode_g(&self, m: usize) -> Vec3 {
        self.g[m]
    }

    pub fn mode_h(&self, m: usize) -> Vec3 {
        self.h[m]
    }

    /// Diagonal of L on sector n (spin-independent, one entry per mode or pair).
    pub fn l_diagonal(&self, n: usize) -> &[f64] {
        match n {
            0 => std::slice::from_ref(&self.l0),
            1 => &self.l1,
            _ => &self.l2,
        }
    }

    /// αc plus the optional infrared shift, present on every sector.
    pub fn diagonal_constant(&self) -> f64 {
        self.alpha * self.vacuum_constant + self.infrared_shift.unwrap_or(0.0)
    }

    /// Full diagonal of T (per flat index).
    pub fn diagonal(&self) -> Vec<f64> {
        let c = self.diagonal_constant();
        let mut d = Vec::with_capacity(self.dim());
        d.extend([self.l0 + c; 2]);
        for v in self.l1.iter().chain(&self.l2) {
            d.push(v + c);
            d.push(v + c);
        }
        d
    }

    #[inline]
    fn amp(&self, m: usize, pvec: Vec3, c: Coupling, psi: Spinor) -> Spinor {
        let a = 2.0 * c.p * dot(pvec, self.g[m]);
        let s = spin::sigma_dot_h(self.h[m], psi);
        [psi[0] * a + s[0] * c.e, psi[1] * a + s[1] * c.e]
    }

    #[inline]
    fn amp_adj(&self, m: usize, pvec: Vec3, c: Coupling, psi: Spinor) -> Spinor {
        let a = 2.0 * c.p * dot(pvec, self.g[m]);
        let s = spin::sigma_dot_h(self.h[m], psi);
        [psi[0] * a - s[0] * c.e, psi[1] * a - s[1] * c.e]
    }

    /// y₁ += s·C x₀ (creation from the vacuum sector).
    pub fn create_01(&self, c: Coupling, x0: &[C], y1: &mut [C], s: f64) {
        let psi = spinor_at(x0, 0);
        for m in 0..self.n_modes() {
            let p = sub(self.total_momentum, self.k[m]);
            add_spinor(y1, m, spin::scale(s, self.amp(m, p, c, psi)));
        }
    }

    /// y₀ += s·C† x₁ (adjoint of [`create_01`](Self::create_01)).
    pub fn annihilate_10(&self, c: Coupling, x1: &[C], y0: &mut [C], s: f64) {
        let mut acc = spin::ZERO;
        for m in 0..self.n_modes() {
            let p = sub(self.total_momentum, self.k[m]);
            acc = spin::add(acc, self.amp_adj(m, p, c, spinor_at(x1, m)));
        }
        add_spinor(y0, 0, spin::scale(s, acc));
    }

    fn rows_mut<'a>(&self, y2: &'a mut [C]) -> Vec<(usize, &'a mut [C])> {
        let mut out = Vec::with_capacity(self.n_modes());
        let mut rest = y2;
        for a in 0..self.n_modes() {
            let len = 2 * self.basis.row(a).len();
            let (head, tail) = rest.split_at_mut(len);
            out.push((a, head));
            rest = tail;
        }
        out
    }

    /// y₂ += s·C x₁, the symmetrized creation of a second photon.
    pub fn create_12(&self, c: Coupling, x1: &[C], y2: &mut [C], s: f64) {
        let m = self.n_modes();
        let ell = self.total_momentum;
        self.rows_mut(y2).into_par_iter().for_each(|(a, row)| {
            let b0 = self.basis.row_first_partner(a);
            let xa = spinor_at(x1, a);
            for (j, b) in (b0..m).enumerate() {
                let p = sub(ell, add(self.k[a], self.k[b]));
                let v = if a == b {
                    spin::scale(SQRT_2, self.amp(a, p, c, xa))
                } else {
                    spin::add(self.amp(a, p, c, spinor_at(x1, b)), self.amp(b, p, c, xa))
                };
                add_spinor(row, j, spin::scale(s, v));
            }
        });
    }

    /// y₁ += s·C† x₂ (adjoint of [`create_12`](Self::create_12)).
    pub fn annihilate_21(&self, c: Coupling, x2: &[C], y1: &mut [C], s: f64) {
        let mm = self.n_modes();
        let ell = self.total_momentum;
        y1.par_chunks_mut(2).enumerate().for_each(|(m, out)| {
            let mut acc = spin::ZERO;
            for n in 0..mm {
                let Some(p) = self.basis.pair_index(m, n) else { continue };
                let pv = sub(ell, add(self.k[m], self.k[n]));
                let xv = spinor_at(x2, p);
                let v = self.amp_adj(n, pv, c, xv);
                acc = if n == m { spin::add(acc, spin::scale(SQRT_2, v)) } else { spin::add(acc, v) };
            }
            out[0] += acc[0] * s;
            out[1] += acc[1] * s;
        });
    }

    /// y₂ += s·D*·D* x₀.
    pub fn dd_create_02(&self, x0: &[C], y2: &mut [C], s: f64) {
        let psi = spinor_at(x0, 0);
        for (p, (a, b)) in self.basis.pairs().enumerate() {
            let f = if a == b { SQRT_2 * dot(self.g[a], self.g[a]) } else { 2.0 * dot(self.g[a], self.g[b]) };
            add_spinor(y2, p, spin::scale(s * f, psi));
        }
    }

    /// y₀ += s·D·D x₂.
    pub fn dd_annihilate_20(&self, x2: &[C], y0: &mut [C], s: f64) {
        let mut acc = spin::ZERO;
        for (p, (a, b)) in self.basis.pairs().enumerate() {
            let f = if a == b { SQRT_2 * dot(self.g[a], self.g[a]) } else { 2.0 * dot(self.g[a], self.g[b]) };
            acc = spin::add(acc, spin::scale(f, spinor_at(x2, p)));
        }
        add_spinor(y0, 0, spin::scale(s, acc));
    }

    /// y₁ += s·D*·D x₁.
    pub fn dstar_d_1(&self, x1: &[C], y1: &mut [C], s: f64) {
        let mut sum = [spin::ZERO; 3];
        for n in 0..self.n_modes() {
            let xv = spinor_at(x1, n);
            for (i, si) in sum.iter_mut().enumerate() {
                *si = spin::add(*si, spin::scale(self.g[n][i], xv));
            }
        }
        for m in 0..self.n_modes() {
            let g = self.g[m];
            let v = spin::add(spin::add(spin::scale(g[0], sum[0]), spin::scale(g[1], sum[1])), spin::scale(g[2], sum[2]));
            add_spinor(y1, m, spin::scale(s, v));
        }
    }

    /// y₂ += s·D*·D x₂.
    pub fn dstar_d_2(&self, x2: &[C], y2: &mut [C], s: f64) {
        let mm = self.n_modes();
        // χ(n) = √2 Σ_j g_j ψ(j, n) in terms of the stored coefficients.
        let chi: Vec<[Spinor; 3]> = (0..mm)
            .into_par_iter()
            .map(|n| {
                let mut acc = [spin::ZERO; 3];
                for j in 0..mm {
                    let Some(p) = self.basis.pair_index(j, n) else { continue };
                    let xv = spinor_at(x2, p);
                    let xv = if j == n { spin::scale(SQRT_2, xv) } else { xv };
                    for (i, ai) in acc.iter_mut().enumerate() {
                        *ai = spin::add(*ai, spin::scale(self.g[j][i], xv));
                    }
                }
                acc
            })
            .collect();
        let gdot = |m: usize, v: &[Spinor; 3]| {
            let g = self.g[m];
            spin::add(spin::add(spin::scale(g[0], v[0]), spin::scale(g[1], v[1])), spin::scale(g[2], v[2]))
        };
        self.rows_mut(y2).into_par_iter().for_each(|(a, row)| {
            let b0 = self.basis.row_first_partner(a);
            for (j, b) in (b0..mm).enumerate() {
                let v = if a == b {
                    spin::scale(SQRT_2, gdot(a, &chi[a]))
                } else {
                    spin::add(gdot(a, &chi[b]), gdot(b, &chi[a]))
                };
                add_spinor(row, j, spin::scale(s, v));
            }
        });
    }

    /// Split a flat vector into sector slices.
    pub fn split<'a>(&self, x: &'a [C]) -> (&'a [C], &'a [C], &'a [C]) {
        let b = &self.basis;
        (&x[b.sector_range(0)], &x[b.sector_range(1)], &x[b.sector_range(2)])
    }

    pub fn split_mut<'a>(&self, y: &'a mut [C]) -> (&'a mut [C], &'a mut [C], &'a mut [C]) {
        let n1 = self.basis.sector_dim(1);
        let (y0, rest) = y.split_at_mut(2);
        let (y1, y2) = rest.split_at_mut(n1);
        (y0, y1, y2)
    }

    /// y = T x.
    pub fn apply(&self, x: &[C], y: &mut [C]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let d = self.diagonal_constant();
        let sa = self.alpha.sqrt();
        let al = self.alpha;
        let (x0, x1, x2) = self.split(x);
        {
            let (y0, y1, y2) = self.split_mut(y);
            for s in 0..2 {
                y0[s] = x0[s] * (self.l0 + d);
            }
            for (i, l) in self.l1.iter().enumerate() {
                y1[2 * i] = x1[2 * i] * (l + d);
                y1[2 * i + 1] = x1[2 * i + 1] * (l + d);
            }
            y2.par_chunks_mut(2).zip(x2.par_chunks(2)).zip(self.l2.par_iter()).for_each(|((yo, xi), l)| {
                yo[0] = xi[0] * (l + d);
                yo[1] = xi[1] * (l + d);
            });
            if al == 0.0 {
                return;
            }
            let f = Coupling::F_STAR;
            self.create_01(f, x0, y1, sa);
            self.annihilate_10(f, x1, y0, sa);
            self.create_12(f, x1, y2, sa);
            self.annihilate_21(f, x2, y1, sa);
            self.dd_create_02(x0, y2, al);
            self.dd_annihilate_20(x2, y0, al);
            self.dstar_d_1(x1, y1, 2.0 * al);
            self.dstar_d_2(x2, y2, 2.0 * al);
        }
    }

    pub fn apply_new(&self, x: &[C]) -> Vec<C> {
        let mut y = self.basis.zeros();
        self.apply(x, &mut y);
        y
    }

    /// Dense matrix by columns; intended for small test spaces.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        let mut e = self.basis.zeros();
        for j in 0..n {
            e[j] = C::new(1.0, 0.0);
            let col = self.apply_new(&e);
            e[j] = C::new(0.0, 0.0);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::grid::{build_grid, ModeGrid};
    use crate::kernels::Cutoff;
    use nalgebra::DMatrix;

    fn small_grid() -> ModeGrid {
        let c = Cutoff::new(1.0).unwrap();
        ModeGrid::from_nodes(
            c,
            &[([0.3, -0.2, 0.5], 0.7), ([-0.1, 0.6, 0.2], 0.4), ([0.5, 0.1, -0.4], 0.9)],
            [0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    /// T from dense ladder operators, built independently of the
    /// matrix-free primitives.
    fn dense_reference(grid: &ModeGrid, alpha: f64, ell: Vec3) -> DMatrix<C> {
        let mm = grid.len();
        let basis = FockBasis::new(mm, true);
        let n = basis.dim();
        let zero = C::new(0.0, 0.0);
        // annihilators a_m (spin-diagonal)
        let mut a: Vec<DMatrix<C>> = vec![DMatrix::zeros(n, n); mm];
        for m in 0..mm {
            for s in 0..2 {
                a[m][(basis.index0(s), basis.index1(m, s))] = C::new(1.0, 0.0);
                for q in 0..mm {
                    let col = basis.index2(m, q, s).unwrap();
                    let f = if q == m { SQRT_2 } else { 1.0 };
                    a[m][(basis.index1(q, s), col)] += C::new(f, 0.0);
                }
            }
        }
        let adag: Vec<DMatrix<C>> = a.iter().map(|x| x.adjoint()).collect();
        // P_f and H_f as diagonal matrices
        let mut pf = [DMatrix::<C>::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        let mut hf = DMatrix::<C>::zeros(n, n);
        for m in 0..mm {
            let num = &adag[m] * &a[m];
            for i in 0..3 {
                pf[i] += &num * C::new(grid.modes[m].k[i], 0.0);
            }
            hf += &num * C::new(grid.modes[m].r, 0.0);
        }
        let id = DMatrix::<C>::identity(n, n);
        let pi: Vec<DMatrix<C>> = (0..3).map(|i| &id * C::new(ell[i], 0.0) - &pf[i]).collect();
        let mut d = vec![DMatrix::<C>::zeros(n, n); 3];
        let mut dstar = vec![DMatrix::<C>::zeros(n, n); 3];
        let mut bfield = vec![DMatrix::<C>::zeros(n, n); 3];
        for m in 0..mm {
            for i in 0..3 {
                d[i] += &a[m] * C::new(grid.modes[m].g[i], 0.0);
                dstar[i] += &adag[m] * C::new(grid.modes[m].g[i], 0.0);
                // B = Σ (-i h) a* + (i h) a
                bfield[i] += &adag[m] * C::new(0.0, -grid.modes[m].h[i]) + &a[m] * C::new(0.0, grid.modes[m].h[i]);
            }
        }
        // spin matrices acting on the flat layout
        let mut sig = vec![DMatrix::<C>::zeros(n, n); 3];
        for blk in 0..n / 2 {
            let (u, v) = (2 * blk, 2 * blk + 1);
            sig[0][(u, v)] = C::new(1.0, 0.0);
            sig[0][(v, u)] = C::new(1.0, 0.0);
            sig[1][(u, v)] = C::new(0.0, -1.0);
            sig[1][(v, u)] = C::new(0.0, 1.0);
            sig[2][(u, u)] = C::new(1.0, 0.0);
            sig[2][(v, v)] = C::new(-1.0, 0.0);
        }
        let c = grid.vacuum_constant();
        let sa = C::new(alpha.sqrt(), 0.0);
        let al = C::new(alpha, 0.0);
        let mut t = hf.clone();
        for i in 0..3 {
            let ai = &d[i] + &dstar[i];
            t += &pi[i] * &pi[i];
            t += (&pi[i] * &ai + &ai * &pi[i]) * sa;
            t += (&dstar[i] * &d[i] * C::new(2.0, 0.0) + &dstar[i] * &dstar[i] + &d[i] * &d[i]) * al;
            t += &sig[i] * &bfield[i] * sa;
        }
        t += &id * (al * c);
        let _ = zero;
        t
    }

    #[test]
    fn matches_dense_ladder_construction() {
        let grid = small_grid();
        for ell in [[0.0; 3], [0.2, -0.1, 0.3]] {
            let op = assemble(&grid, 0.3, ell, None).unwrap();
            let t = op.to_dense();
            let r = dense_reference(&grid, 0.3, ell);
            let diff = (&t - &r).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-13, "ℓ={ell:?} diff {diff}");
        }
    }

    #[test]
    fn hermitian() {
        let grid = small_grid();
        let op = assemble(&grid, 0.7, [0.1, 0.2, -0.3], Some(0.01)).unwrap();
        let t = op.to_dense();
        assert!((&t - t.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-14);
    }

    #[test]
    fn alpha_zero_is_diagonal() {
        let grid = build_grid(Cutoff::new(1.0).unwrap(), 2, 2, 4).unwrap();
        let op = assemble(&grid, 0.0, [0.0; 3], None).unwrap();
        let t = op.to_dense();
        let d = op.diagonal();
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                let expect = if i == j { d[i] } else { 0.0 };
                assert_eq!(t[(i, j)], C::new(expect, 0.0));
            }
        }
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn vacuum_expectation() {
        let grid = small_grid();
        let ell = [0.2, 0.0, -0.1];
        let op = assemble(&grid, 0.05, ell, None).unwrap();
        let mut x = op.basis().zeros();
        x[0] = C::new(1.0, 0.0);
        let y = op.apply_new(&x);
        let expect = dot(ell, ell) + 0.05 * grid.vacuum_constant();
        assert!((y[0].re - expect).abs() < 1e-15);
    }

    #[test]
    fn no_diagonal_variant_is_compression() {
        let grid = small_grid();
        let full = assemble(&grid, 0.4, [0.0; 3], None).unwrap();
        let nod = assemble_with(
            &grid,
            0.4,
            [0.0; 3],
            &AssembleOptions {
                infrared_shift: None,
                include_diagonal_pairs: false,
            },
        )
        .unwrap();
        let tf = full.to_dense();
        let tn = nod.to_dense();
        // map reduced indices into full indices
        let bf = full.basis();
        let bn = nod.basis();
        let mut map = vec![0; bn.dim()];
        for s in 0..2 {
            map[bn.index0(s)] = bf.index0(s);
            for m in 0..bn.n_modes() {
                map[bn.index1(m, s)] = bf.index1(m, s);
            }
            for (a, b) in bn.pairs() {
                map[bn.index2(a, b, s).unwrap()] = bf.index2(a, b, s).unwrap();
            }
        }
        for i in 0..bn.dim() {
            for j in 0..bn.dim() {
                assert!((tn[(i, j)] - tf[(map[i], map[j])]).norm() < 1e-14);
            }
        }
    }
}
