//! Photon form factors, polarization frames and sums, and the angularly
//! reduced kernels of the first and second order self-energy integrals.
//!
//! Conventions: `G^λ(k) = χ(|k|)/(2π|k|^{1/2}) ε^λ(k)` and `H^λ(k) = -i k∧G^λ(k)`.
//! The magnetic amplitude is stored as the real vector `h = k∧G`, the physical
//! amplitude being `-i h` (see [`H_PHASE_IS_MINUS_I`]).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::vec3::{cross, dot, norm, scale, sub, Vec3};
use crate::{Error, Result};

/// Bookkeeping flag: stored magnetic amplitudes carry an implicit factor `-i`.
pub const H_PHASE_IS_MINUS_I: bool = true;

/// Sharp ultraviolet cutoff `χ(|k|) = Θ(Λ - |k|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    lambda: f64,
}

impl Cutoff {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cutoff must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(Cutoff { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// χ(r); the cutoff sphere itself is included.
    #[inline]
    pub fn chi(&self, r: f64) -> f64 {
        if r <= self.lambda {
            1.0
        } else {
            0.0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lambda == 0.0
    }
}

/// Orthonormal transverse frame (ε¹, ε²) attached to a nonzero k, with
/// ε² = k̂∧ε¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationFrame {
    pub e1: Vec3,
    pub e2: Vec3,
}

impl PolarizationFrame {
    /// ε¹ = e_z∧k/|e_z∧k|, or e_x when k ∥ e_z.
    pub fn standard(k: Vec3) -> Result<Self> {
        Self::with_reference(k, [0.0, 0.0, 1.0])
    }

    /// ε¹ = a∧k/|a∧k| for a reference axis `a`; when k ∥ a, ε¹ is the
    /// transverse part of the first coordinate axis not parallel to k.
    pub fn with_reference(k: Vec3, reference: Vec3) -> Result<Self> {
        let kn = norm(k);
        if kn == 0.0 || !kn.is_finite() {
            return Err(Error::Domain(
                "polarization frame undefined at k = 0".into(),
            ));
        }
        let khat = scale(1.0 / kn, k);
        let a = cross(reference, khat);
        let an = norm(a);
        let e1 = if an > 1e-12 * norm(reference) {
            scale(1.0 / an, a)
        } else {
            let axis = if khat[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let p = sub(axis, scale(dot(axis, khat), khat));
            scale(1.0 / norm(p), p)
        };
        let e2 = cross(khat, e1);
        Ok(PolarizationFrame { e1, e2 })
    }

    /// Rotate ε¹ by `theta` within the transverse plane of `k`.
    pub fn rotated(&self, k: Vec3, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let e1 = [
            c * self.e1[0] + s * self.e2[0],
            c * self.e1[1] + s * self.e2[1],
            c * self.e1[2] + s * self.e2[2],
        ];
        let khat = scale(1.0 / norm(k), k);
        PolarizationFrame {
            e1,
            e2: cross(khat, e1),
        }
    }

    pub fn vectors(&self) -> [Vec3; 2] {
        [self.e1, self.e2]
    }
}

/// Form factors evaluated in a chosen polarization convention.
#[derive(Debug, Clone, Copy)]
pub struct FormFactorTable {
    pub cutoff: Cutoff,
    /// Reference axis of the polarization convention (e_z by default).
    pub reference: Vec3,
}

impl FormFactorTable {
    pub fn new(cutoff: Cutoff) -> Self {
        FormFactorTable {
            cutoff,
            reference: [0.0, 0.0, 1.0],
        }
    }

    pub fn with_reference(cutoff: Cutoff, reference: Vec3) -> Self {
        FormFactorTable { cutoff, reference }
    }

    pub fn frame(&self, k: Vec3) -> Result<PolarizationFrame> {
        PolarizationFrame::with_reference(k, self.reference)
    }

    /// G^λ(k) for λ = 1, 2.
    pub fn g_amplitude(&self, k: Vec3) -> Result<[Vec3; 2]> {
        let f = self.frame(k)?;
        Ok(g_from_frame(k, &f, self.cutoff))
    }

    /// Real vectors h^λ = k∧G^λ; the amplitude is H^λ = -i h^λ.
    pub fn h_amplitude(&self, k: Vec3) -> Result<[Vec3; 2]> {
        let g = self.g_amplitude(k)?;
        Ok([cross(k, g[0]), cross(k, g[1])])
    }
}

/// G^λ(k) from an explicit frame.
#[inline]
pub fn g_from_frame(k: Vec3, f: &PolarizationFrame, cutoff: Cutoff) -> [Vec3; 2] {
    let r = norm(k);
    let a = cutoff.chi(r) / (2.0 * PI * r.sqrt());
    [scale(a, f.e1), scale(a, f.e2)]
}

/// Σ_λ G^λ_i G^λ_j = χ²/(4π²|k|)(δ_ij - k_i k_j/|k|²).
pub fn pol_sum_gg(k: Vec3, cutoff: Cutoff) -> Result<[[f64; 3]; 3]> {
    let r = norm(k);
    if r == 0.0 {
        return Err(Error::Domain("pol_sum_gg undefined at k = 0".into()));
    }
    let c = cutoff.chi(r);
    let a = c * c / (4.0 * PI * PI * r);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[i][j] = a * (delta - k[i] * k[j] / (r * r));
        }
    }
    Ok(m)
}

/// Σ_λ |H^λ(k)|² = χ²|k|/(2π²).
pub fn pol_sum_hh(k: Vec3, cutoff: Cutoff) -> f64 {
    let r = norm(k);
    let c = cutoff.chi(r);
    c * c * r / (2.0 * PI * PI)
}

/// tr[P(k₁)P(k₂)] = 1 + t² with t = k̂₁·k̂₂.
pub fn projector_trace_product(t: f64) -> f64 {
    debug_assert!(t.abs() <= 1.0 + 1e-12);
    1.0 + t * t
}

/// The six scalar integrals entering the first and second order coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KernelName {
    #[serde(rename = "DD")]
    DD,
    #[serde(rename = "EEEE")]
    EEEE,
    #[serde(rename = "EPD")]
    EPD,
    #[serde(rename = "EEDD")]
    EEDD,
    #[serde(rename = "IEE")]
    IEE,
    #[serde(rename = "N1")]
    N1,
}

impl KernelName {
    pub const ALL: [KernelName; 6] = [
        KernelName::DD,
        KernelName::EEEE,
        KernelName::EPD,
        KernelName::EEDD,
        KernelName::IEE,
        KernelName::N1,
    ];

    pub const TWO_PHOTON: [KernelName; 4] = [
        KernelName::DD,
        KernelName::EEEE,
        KernelName::EPD,
        KernelName::EEDD,
    ];

    pub fn is_two_photon(self) -> bool {
        !matches!(self, KernelName::IEE | KernelName::N1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::DD => "DD",
            KernelName::EEEE => "EEEE",
            KernelName::EPD => "EPD",
            KernelName::EEDD => "EEDD",
            KernelName::IEE => "IEE",
            KernelName::N1 => "N1",
        }
    }

    /// Kernel value without argument validation. One-photon kernels ignore
    /// `r2` and `t`. Returns 0 outside the cutoff and at r = 0.
    #[inline]
    pub fn eval(self, r1: f64, r2: f64, t: f64, lambda: f64) -> f64 {
        const PI2: f64 = PI * PI;
        if r1 > lambda || r1 <= 0.0 {
            return 0.0;
        }
        match self {
            KernelName::IEE => return 2.0 / PI * r1 * r1 / (1.0 + r1),
            KernelName::N1 => return 2.0 / PI * r1 / ((1.0 + r1) * (1.0 + r1)),
            _ => {}
        }
        if r2 > lambda || r2 <= 0.0 {
            return 0.0;
        }
        let q2 = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * t + r1 + r2;
        match self {
            KernelName::DD => r1 * r2 * (1.0 + t * t) / (PI2 * q2),
            _ => 0.5 * (self.ordered(r1, r2, t) + self.ordered(r2, r1, t)) / (PI2 * q2),
        }
    }

    /// Two-photon numerator in the ordering where photon 1 is emitted first,
    /// without the common 1/(π² Q₂). Symmetrizing over (r₁, r₂) gives the
    /// angular average of the integrand.
    fn ordered(self, r1: f64, r2: f64, t: f64) -> f64 {
        let s = 1.0 - t * t;
        let a = 1.0 + r1;
        match self {
            KernelName::EEEE => 2.0 * r1 * r2 * r2 * r2 / (a * a) - r1 * r1 * r2 * r2 * s / (a * (1.0 + r2)),
            KernelName::EPD => r1 * r1 * r1 * r2 * s / (a * a) - 0.5 * r1 * r1 * r2 * r2 * s / (a * (1.0 + r2)),
            KernelName::EEDD => -2.0 * r1 * r2 * r2 * t / a,
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelName::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown kernel name {s:?}")))
    }
}

/// Reduced kernel such that the corresponding vacuum expectation value is
/// ∫∫∫ kernel dr₁ dr₂ dt (two-photon) or ∫ kernel dr (one-photon). Two-photon
/// kernels are symmetric in (r₁, r₂) and equal the angular average of the
/// polarization-summed integrand times 8π² r₁² r₂².
pub fn reduced_kernel(name: KernelName, r1: f64, r2: f64, t: f64, cutoff: Cutoff) -> Result<f64> {
    if !(r1 >= 0.0) || !(r2 >= 0.0) || !r1.is_finite() || !r2.is_finite() {
        return Err(Error::Domain(format!(
            "radial arguments must be finite and non-negative, got ({r1}, {r2})"
        )));
    }
    if !(t.abs() <= 1.0) {
        return Err(Error::Domain(format!("|t| must be at most 1, got {t}")));
    }
    Ok(name.eval(r1, r2, t, cutoff.lambda()))
}

/// Reduced kernel looked up by name.
pub fn reduced_kernel_by_name(name: &str, r1: f64, r2: f64, t: f64, cutoff: Cutoff) -> Result<f64> {
    reduced_kernel(name.parse()?, r1, r2, t, cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(l: f64) -> Cutoff {
        Cutoff::new(l).unwrap()
    }

    #[test]
    fn pol_sum_gg_on_z_axis() {
        let m = pol_sum_gg([0.0, 0.0, 1.0], cut(2.0)).unwrap();
        let a = 1.0 / (4.0 * PI * PI);
        let expect = [[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - expect[i][j]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn pol_sum_gg_vanishes_above_cutoff() {
        let m = pol_sum_gg([1.0, 1.0, 1.0], cut(1.5)).unwrap();
        assert!(m.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn pol_sum_gg_trace_at_unit_momentum() {
        let m = pol_sum_gg([0.6, 0.0, 0.8], cut(1.0)).unwrap();
        let tr = m[0][0] + m[1][1] + m[2][2];
        assert!((tr - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((tr - 0.0506606).abs() < 1e-7);
    }

    #[test]
    fn pol_sum_gg_rejects_zero() {
        assert!(matches!(pol_sum_gg([0.0; 3], cut(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn pol_sum_hh_examples() {
        assert!((pol_sum_hh([0.0, 1.0, 0.0], cut(1.0)) - 1.0 / (2.0 * PI * PI)).abs() < 1e-16);
        assert_eq!(pol_sum_hh([0.0; 3], cut(1.0)), 0.0);
        assert_eq!(pol_sum_hh([3.0, 0.0, 0.0], cut(2.0)), 0.0);
    }

    #[test]
    fn projector_trace_product_examples() {
        assert_eq!(projector_trace_product(0.0), 1.0);
        assert_eq!(projector_trace_product(1.0), 2.0);
        assert_eq!(projector_trace_product(-1.0), 2.0);
    }

    #[test]
    fn projector_trace_product_matches_matrices() {
        let k1 = [0.3, -0.4, 0.9];
        let k2 = [-0.7, 0.1, 0.2];
        let c = cut(10.0);
        let p1 = pol_sum_gg(k1, c).unwrap();
        let p2 = pol_sum_gg(k2, c).unwrap();
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += p1[i][j] * p2[j][i];
            }
        }
        let s1 = 4.0 * PI * PI * norm(k1);
        let s2 = 4.0 * PI * PI * norm(k2);
        let t = dot(k1, k2) / (norm(k1) * norm(k2));
        assert!((tr * s1 * s2 - projector_trace_product(t)).abs() < 1e-13);
    }

    #[test]
    fn standard_frame_conventions() {
        let f = PolarizationFrame::standard([0.0, 0.0, 2.0]).unwrap();
        assert_eq!(f.e1, [1.0, 0.0, 0.0]);
        assert_eq!(f.e2, [0.0, 1.0, 0.0]);
        let k = [1.0, 0.0, 0.0];
        let f = PolarizationFrame::standard(k).unwrap();
        assert!(norm(sub(f.e1, [0.0, 1.0, 0.0])) < 1e-15);
        assert!(norm(sub(f.e2, cross(k, f.e1))) < 1e-15);
    }

    #[test]
    fn transversality_of_form_factors() {
        let t = FormFactorTable::new(cut(3.0));
        let k = [0.4, -1.1, 0.7];
        for g in t.g_amplitude(k).unwrap() {
            assert!(dot(k, g).abs() < 1e-15);
        }
        let g = t.g_amplitude(k).unwrap();
        assert!(dot(g[0], g[1]).abs() < 1e-15);
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in KernelName::ALL {
            assert_eq!(k.as_str().parse::<KernelName>().unwrap(), k);
        }
        assert!(matches!("XYZ".parse::<KernelName>(), Err(Error::Domain(_))));
    }

    #[test]
    fn kernels_vanish_outside_cutoff_and_at_origin() {
        let c = cut(1.0);
        for k in KernelName::ALL {
            assert_eq!(reduced_kernel(k, 1.5, 0.5, 0.2, c).unwrap(), 0.0);
            assert_eq!(reduced_kernel(k, 0.0, 0.0, 0.2, c).unwrap(), 0.0);
        }
        assert_eq!(reduced_kernel(KernelName::DD, 0.5, 1.5, 0.2, c).unwrap(), 0.0);
    }

    #[test]
    fn reduced_kernel_rejects_bad_arguments() {
        let c = cut(1.0);
        assert!(reduced_kernel(KernelName::DD, -0.1, 0.5, 0.0, c).is_err());
        assert!(reduced_kernel(KernelName::DD, 0.1, 0.5, 1.5, c).is_err());
        assert!(reduced_kernel_by_name("nope", 0.1, 0.5, 0.0, c).is_err());
    }

    #[test]
    fn dd_kernel_matches_trace_formula() {
        let (r1, r2, t) = (0.3, 0.7, -0.4);
        let q2 = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * t + r1 + r2;
        // 2 Σ(G1·G2)² · 8π² r1² r2² / Q2 with Σ(G1·G2)² = (1+t²)/(16π⁴ r1 r2)
        let expect = 2.0 * (1.0 + t * t) / (16.0 * PI.powi(4) * r1 * r2) * 8.0 * PI * PI * r1 * r1 * r2 * r2 / q2;
        let v = reduced_kernel(KernelName::DD, r1, r2, t, cut(1.0)).unwrap();
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn epsilon_tensor_angular_sum_vanishes() {
        // Σ over a symmetric angular grid of χ(δ_il − k_i k_l/|k|²) ε_jln k_n / (|k|³ + |k|²)
        let (ts, wt) = crate::gauss::gauss_legendre(6);
        let n_phi = 8;
        let c = cut(1.0);
        for r in [0.2, 0.7, 1.0] {
            let mut sum = [[0.0; 3]; 3];
            for (t, w) in ts.iter().zip(&wt) {
                for p in 0..n_phi {
                    let phi = 2.0 * PI * (p as f64 + 0.5) / n_phi as f64;
                    let k = crate::vec3::from_spherical(r, *t, phi);
                    let f = w * c.chi(r) / (r * r * r + r * r);
                    for i in 0..3 {
                        for j in 0..3 {
                            for l in 0..3 {
                                let proj = if i == l { 1.0 } else { 0.0 } - k[i] * k[l] / (r * r);
                                let e = (0..3)
                                        .map(|n| levi_civita(j, l, n) * k[n])
                                        .sum::<f64>();
                                sum[i][j] += f * proj * e;
                            }
                        }
                    }
                }
            }
            for row in sum {
                for v in row {
                    assert!(v.abs() <= 1e-12, "{v}");
                }
            }
        }
    }

    fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }
}
