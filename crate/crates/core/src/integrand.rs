//! Unreduced integrands of the vacuum expectation values, with the spin
//! algebra carried out explicitly on the spin-up vacuum `↑⊗|0⟩`.
//!
//! For photon momenta k₁, k₂ write Q₁ = |k₁|²+|k₁|, R₂ = |k₂|²+|k₂|,
//! Q₂ = |k₁+k₂|²+|k₁|+|k₂| and K = k₁+k₂. The two-photon amplitudes are
//!
//! - ζ   = √2 (G₁·G₂) ↑
//! - ξ_E = [σ·H₁ σ·H₂ ↑ / R₂ + σ·H₂ σ·H₁ ↑ / Q₁] / √2
//! - ξ_P = [(K·G₂) σ·H₁ ↑ / Q₁ + (K·G₁) σ·H₂ ↑ / R₂] / √2
//!
//! and the integrands are |ζ|²/Q₂ (DD), |ξ_E|²/Q₂ (EEEE), |ξ_P|²/Q₂ (EPD),
//! Re⟨ζ, ξ_E⟩/Q₂ (EEDD), with Re⟨ξ_E, ξ_P⟩/Q₂ as a cross term expected to
//! integrate to zero.

use std::f64::consts::{PI, SQRT_2};

use crate::kernels::{g_from_frame, Cutoff, FormFactorTable, KernelName};
use crate::spin::{self, Spinor};
use crate::vec3::{add, cross, dot, norm, scale, Vec3};
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TwoPhotonTerms {
    pub dd: f64,
    pub eeee: f64,
    pub epd: f64,
    pub eedd: f64,
    pub cross_ep: f64,
}

impl TwoPhotonTerms {
    pub fn get(&self, name: KernelName) -> f64 {
        match name {
            KernelName::DD => self.dd,
            KernelName::EEEE => self.eeee,
            KernelName::EPD => self.epd,
            KernelName::EEDD => self.eedd,
            _ => 0.0,
        }
    }

    #[inline]
    pub fn accumulate(&mut self, o: &TwoPhotonTerms) {
        self.dd += o.dd;
        self.eeee += o.eeee;
        self.epd += o.epd;
        self.eedd += o.eedd;
        self.cross_ep += o.cross_ep;
    }
}

/// Two-photon integrand for one pair of polarized amplitudes.
/// `g` are the vector-potential amplitudes and `h = k∧g` (physical `H = -i h`).
#[inline]
pub fn pair_terms(k1: Vec3, g1: Vec3, h1: Vec3, k2: Vec3, g2: Vec3, h2: Vec3) -> TwoPhotonTerms {
    let r1 = norm(k1);
    let r2 = norm(k2);
    let q1 = r1 * r1 + r1;
    let rr2 = r2 * r2 + r2;
    let kk = add(k1, k2);
    let q2 = dot(kk, kk) + r1 + r2;

    let s1 = spin::sigma_dot_h(h1, spin::UP);
    let s2 = spin::sigma_dot_h(h2, spin::UP);
    let s12 = spin::sigma_dot_h(h1, s2);
    let s21 = spin::sigma_dot_h(h2, s1);

    let c = 1.0 / SQRT_2;
    let xi_e: Spinor = spin::add(spin::scale(c / rr2, s12), spin::scale(c / q1, s21));
    let xi_p: Spinor = spin::add(
        spin::scale(c * dot(kk, g2) / q1, s1),
        spin::scale(c * dot(kk, g1) / rr2, s2),
    );
    let zeta: Spinor = spin::scale(SQRT_2 * dot(g1, g2), spin::UP);

    let inv = 1.0 / q2;
    TwoPhotonTerms {
        dd: spin::norm_sqr(zeta) * inv,
        eeee: spin::norm_sqr(xi_e) * inv,
        epd: spin::norm_sqr(xi_p) * inv,
        eedd: spin::inner(zeta, xi_e).re * inv,
        cross_ep: spin::inner(xi_e, xi_p).re * inv,
    }
}

/// Polarization-summed two-photon integrand at (k₁, k₂). Zero if either
/// momentum vanishes or lies outside the cutoff.
pub fn two_photon(k1: Vec3, k2: Vec3, table: &FormFactorTable) -> Result<TwoPhotonTerms> {
    let mut acc = TwoPhotonTerms::default();
    let (r1, r2) = (norm(k1), norm(k2));
    let lam = table.cutoff.lambda();
    if r1 == 0.0 || r2 == 0.0 || r1 > lam || r2 > lam {
        return Ok(acc);
    }
    let g1 = g_from_frame(k1, &table.frame(k1)?, table.cutoff);
    let g2 = g_from_frame(k2, &table.frame(k2)?, table.cutoff);
    for a in g1 {
        let ha = cross(k1, a);
        for b in g2 {
            acc.accumulate(&pair_terms(k1, a, ha, k2, b, cross(k2, b)));
        }
    }
    Ok(acc)
}

/// Polarization-summed one-photon integrands (IEE, N1) at k:
/// Σ_λ |σ·H^λ ↑|²/Q and Σ_λ |σ·H^λ ↑|²/Q².
pub fn one_photon(k: Vec3, table: &FormFactorTable) -> Result<(f64, f64)> {
    let r = norm(k);
    if r == 0.0 || r > table.cutoff.lambda() {
        return Ok((0.0, 0.0));
    }
    let q = r * r + r;
    let mut s = 0.0;
    for g in g_from_frame(k, &table.frame(k)?, table.cutoff) {
        s += spin::norm_sqr(spin::sigma_dot_h(cross(k, g), spin::UP));
    }
    Ok((s / q, s / (q * q)))
}

/// Unreduced integrand by name. One-photon names ignore `k2`.
pub fn by_name(name: KernelName, k1: Vec3, k2: Vec3, table: &FormFactorTable) -> Result<f64> {
    Ok(match name {
        KernelName::IEE => one_photon(k1, table)?.0,
        KernelName::N1 => one_photon(k1, table)?.1,
        _ => two_photon(k1, k2, table)?.get(name),
    })
}

/// Integral over orientations at fixed (r₁, r₂, t): k₁ at polar angle θ₁ and
/// azimuth φ₁, k₂ at azimuth ψ about k₁. The integrand is invariant under rotations
/// about the spin axis, so φ₁ is fixed and the 2D (cos θ₁, ψ) integral is
/// done with Gauss-Legendre × periodic trapezoid. The reduced kernel equals
/// 2π r₁² r₂² times this integral.
pub fn angular_integral(r1: f64, r2: f64, t: f64, phi1: f64, table: &FormFactorTable) -> Result<TwoPhotonTerms> {
    let (cs, wc) = crate::gauss::gauss_legendre(24);
    let n_psi = 48;
    let st = (1.0 - t * t).sqrt();
    let mut acc = TwoPhotonTerms::default();
    for (c, w) in cs.iter().zip(&wc) {
        let s = (1.0 - c * c).sqrt();
        let n1 = [s * phi1.cos(), s * phi1.sin(), *c];
        let e1 = [c * phi1.cos(), c * phi1.sin(), -s];
        let e2 = [-phi1.sin(), phi1.cos(), 0.0];
        for j in 0..n_psi {
            let psi = 2.0 * PI * j as f64 / n_psi as f64;
            let dir = add(scale(t, n1), add(scale(st * psi.cos(), e1), scale(st * psi.sin(), e2)));
            let v = two_photon(scale(r1, n1), scale(r2, dir), table)?;
            let f = w * 2.0 * PI / n_psi as f64;
            acc.accumulate(&TwoPhotonTerms {
                dd: f * v.dd,
                eeee: f * v.eeee,
                epd: f * v.epd,
                eedd: f * v.eedd,
                cross_ep: f * v.cross_ep,
            });
        }
    }
    Ok(acc)
}

/// Largest relative deviation between the reduced kernels and the angular
/// integrals of the unreduced integrands over random (r₁, r₂, t, φ₁), with
/// the one-photon kernels checked against 4πr²·(one-photon integrand).
/// Deviations are relative to each kernel value, floored at 1e-6 of the
/// sum of the two-photon kernel magnitudes at that point.
pub fn reduction_deviation(cutoff: Cutoff, points: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let lam = cutoff.lambda();
    if cutoff.is_empty() {
        return Ok(0.0);
    }
    let table = FormFactorTable::with_reference(cutoff, [0.2, 0.9, -0.3]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let r1 = lam * rng.random::<f64>().max(1e-3);
        let r2 = lam * rng.random::<f64>().max(1e-3);
        let t = 2.0 * rng.random::<f64>() - 1.0;
        let phi1 = 2.0 * PI * rng.random::<f64>();
        let avg = angular_integral(r1, r2, t, phi1, &table)?;
        let jac = 2.0 * PI * r1 * r1 * r2 * r2;
        let floor: f64 = KernelName::TWO_PHOTON.iter().map(|n| n.eval(r1, r2, t, lam).abs()).sum();
        for name in KernelName::TWO_PHOTON {
            let want = name.eval(r1, r2, t, lam);
            let got = jac * avg.get(name);
            worst = worst.max((got - want).abs() / want.abs().max(1e-6 * floor));
        }
        let k = scale(r1, [0.6, 0.0, 0.8]);
        let (iee, n1) = one_photon(k, &table)?;
        for (name, v) in [(KernelName::IEE, iee), (KernelName::N1, n1)] {
            let want = name.eval(r1, 0.0, 0.0, lam);
            worst = worst.max((4.0 * PI * r1 * r1 * v - want).abs() / want);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::pol_sum_hh;

    #[test]
    fn one_photon_matches_polarization_sum() {
        let t = FormFactorTable::new(Cutoff::new(2.0).unwrap());
        let k = [0.3, 0.5, -0.9];
        let r = norm(k);
        let (iee, n1) = one_photon(k, &t).unwrap();
        let q = r * r + r;
        assert!((iee - pol_sum_hh(k, t.cutoff) / q).abs() < 1e-15);
        assert!((n1 - pol_sum_hh(k, t.cutoff) / (q * q)).abs() < 1e-15);
    }

    #[test]
    fn dd_integrand_is_twice_squared_overlap() {
        let t = FormFactorTable::new(Cutoff::new(2.0).unwrap());
        let k1 = [0.3, 0.5, -0.9];
        let k2 = [-0.2, 0.6, 0.1];
        let v = two_photon(k1, k2, &t).unwrap();
        let (r1, r2) = (norm(k1), norm(k2));
        let ct = dot(k1, k2) / (r1 * r2);
        let kk = add(k1, k2);
        let q2 = dot(kk, kk) + r1 + r2;
        let expect = 2.0 * (1.0 + ct * ct) / (16.0 * PI.powi(4) * r1 * r2) / q2;
        assert!((v.dd - expect).abs() < 1e-15 * expect.max(1.0));
    }

    #[test]
    fn frame_rotation_leaves_sums_unchanged() {
        let c = Cutoff::new(2.0).unwrap();
        let a = FormFactorTable::new(c);
        let b = FormFactorTable::with_reference(c, [0.3, -0.8, 0.5]);
        let k1 = [0.3, 0.5, -0.9];
        let k2 = [-0.2, 0.6, 0.1];
        let va = two_photon(k1, k2, &a).unwrap();
        let vb = two_photon(k1, k2, &b).unwrap();
        for (x, y) in [(va.dd, vb.dd), (va.eeee, vb.eeee), (va.epd, vb.epd), (va.eedd, vb.eedd)] {
            assert!((x - y).abs() < 1e-14 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn outside_cutoff_is_zero() {
        let t = FormFactorTable::new(Cutoff::new(0.5).unwrap());
        let v = two_photon([0.1, 0.0, 0.0], [0.0, 0.6, 0.0], &t).unwrap();
        assert_eq!(v, TwoPhotonTerms::default());
    }

    #[test]
    fn reduced_kernels_equal_angular_integrals() {
        use crate::kernels::KernelName;
        use rand::{Rng, SeedableRng};
        let lam = 2.0;
        let c = Cutoff::new(lam).unwrap();
        let table = FormFactorTable::with_reference(c, [0.2, 0.9, -0.3]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for i in 0..100 {
            let r1 = lam * rng.random::<f64>().max(1e-3);
            let r2 = lam * rng.random::<f64>().max(1e-3);
            let t = 2.0 * rng.random::<f64>() - 1.0;
            let phi1 = if i % 10 == 0 { 2.0 * PI * rng.random::<f64>() } else { 0.0 };
            let avg = angular_integral(r1, r2, t, phi1, &table).unwrap();
            let jac = 2.0 * PI * r1 * r1 * r2 * r2;
            let mut floor = 0.0;
            for name in KernelName::TWO_PHOTON {
                floor += name.eval(r1, r2, t, lam).abs();
            }
            for name in KernelName::TWO_PHOTON {
                let want = name.eval(r1, r2, t, lam);
                let got = jac * avg.get(name);
                assert!(
                    (got - want).abs() <= 1e-8 * want.abs().max(1e-6 * floor),
                    "{name} at ({r1}, {r2}, {t}): {got} vs {want}"
                );
            }
            assert!(jac * avg.cross_ep.abs() <= 1e-12 * floor);
            let k = scale(r1, [0.6, 0.0, 0.8]);
            let (iee, n1) = one_photon(k, &table).unwrap();
            let want = KernelName::IEE.eval(r1, 0.0, 0.0, lam);
            assert!((4.0 * PI * r1 * r1 * iee - want).abs() <= 1e-8 * want);
            let want = KernelName::N1.eval(r1, 0.0, 0.0, lam);
            assert!((4.0 * PI * r1 * r1 * n1 - want).abs() <= 1e-8 * want);
        }
    }

    #[test]
    fn reduction_deviation_is_small_and_vacuous_when_empty() {
        let d = reduction_deviation(Cutoff::new(1.0).unwrap(), 20, 3).unwrap();
        assert!(d <= 1e-8, "{d}");
        assert_eq!(reduction_deviation(Cutoff::new(0.0).unwrap(), 20, 3).unwrap(), 0.0);
    }
}
