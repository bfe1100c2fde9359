//! First and second order coefficients of the self-energy expansion
//! `Σ_α = α e₁ + α² e₂ + O(α^{5/2} ln(1/α))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::integrate::{
    self, MCEstimate, QuadratureResult, DEFAULT_MC_SAMPLES, DEFAULT_TOL_1D, DEFAULT_TOL_3D,
};
use crate::kernels::{Cutoff, KernelName};
use crate::{Error, Result};

/// e₁(Λ) = (2/π)(Λ − ln(1+Λ)).
pub fn e1_closed(cutoff: Cutoff) -> f64 {
    let l = cutoff.lambda();
    2.0 / PI * (l - l.ln_1p())
}

/// ⟨0|E𝒜⁻¹E*|0⟩ = (2/π)∫₀^Λ r²/(1+r) dr.
pub fn iee(cutoff: Cutoff) -> Result<QuadratureResult> {
    integrate::quad_vev(KernelName::IEE, cutoff, DEFAULT_TOL_1D)
}

/// ‖𝒜⁻¹E*|0⟩‖² = (2/π)∫₀^Λ r/(1+r)² dr.
pub fn n1(cutoff: Cutoff) -> Result<QuadratureResult> {
    integrate::quad_vev(KernelName::N1, cutoff, DEFAULT_TOL_1D)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Vev2Options {
    pub quad_tol: f64,
    pub quad_tol_1d: f64,
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for Vev2Options {
    fn default() -> Self {
        Vev2Options {
            quad_tol: DEFAULT_TOL_3D,
            quad_tol_1d: DEFAULT_TOL_1D,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 20_240_601,
        }
    }
}

/// Both evaluation routes of one integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutePair {
    pub quad: QuadratureResult,
    pub mc: MCEstimate,
}

impl RoutePair {
    /// |quad − mc| in units of the MC standard error (∞ if the error is 0
    /// and the routes differ).
    pub fn deviation_sigmas(&self) -> f64 {
        let d = (self.quad.value - self.mc.mean).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.mc.std_error
        }
    }

    pub fn agrees(&self, n_sigma: f64) -> bool {
        self.deviation_sigmas() <= n_sigma
    }
}

/// Quadrature and Monte Carlo values of a two-photon integral.
pub fn vev2(name: KernelName, cutoff: Cutoff, opts: &Vev2Options) -> Result<(QuadratureResult, MCEstimate)> {
    if !name.is_two_photon() {
        return Err(Error::InvalidArgument(format!("{name} is not a two-photon integral")));
    }
    let q = integrate::quad_vev(name, cutoff, opts.quad_tol)?;
    let mc = integrate::mc_vev(name, cutoff, opts.mc_samples, opts.seed)?;
    Ok((q, mc))
}

/// e₂ = −(DD + EEEE + 4 EPD − 2 EEDD − IEE·N1).
pub fn e2_combination(dd: f64, eeee: f64, epd: f64, eedd: f64, iee: f64, n1: f64) -> f64 {
    0.0 - (dd + eeee + 4.0 * epd - 2.0 * eedd - iee * n1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfEnergyCoefficients {
    pub lambda: f64,
    /// Closed form (2/π)(Λ − ln(1+Λ)).
    pub e1: f64,
    /// Λ²/π − IEE from quadrature.
    pub e1_quad: f64,
    pub e2: f64,
    /// Linear sum of the component quadrature error estimates.
    pub e2_error: f64,
    pub e2_mc: f64,
    /// Linear sum of the component standard errors (components share samples).
    pub e2_mc_std_error: f64,
    pub breakdown: BTreeMap<KernelName, RoutePair>,
    /// Monte Carlo of Re⟨ξ_E, ξ_P⟩/Q₂, expected to vanish.
    pub cross_ep: MCEstimate,
}

impl SelfEnergyCoefficients {
    pub fn component(&self, name: KernelName) -> &RoutePair {
        &self.breakdown[&name]
    }
}

/// Assemble e₁, e₂ and the per-integral breakdown by both routes.
pub fn e2_total(cutoff: Cutoff, opts: &Vev2Options) -> Result<SelfEnergyCoefficients> {
    let mut quads: BTreeMap<KernelName, QuadratureResult> = BTreeMap::new();
    let partial = |q: &BTreeMap<KernelName, QuadratureResult>| {
        q.iter()
            .map(|(k, v)| (k.to_string(), v.value, v.error_estimate))
            .collect::<Vec<_>>()
    };
    for name in KernelName::ALL {
        let tol = if name.is_two_photon() { opts.quad_tol } else { opts.quad_tol_1d };
        match integrate::quad_vev(name, cutoff, tol) {
            Ok(q) => {
                quads.insert(name, q);
            }
            Err(e) => {
                return Err(Error::Component {
                    component: format!("quadrature of {name}"),
                    partial: partial(&quads),
                    source: Box::new(e),
                })
            }
        }
    }
    let mc2 = integrate::mc_two_photon(cutoff, opts.mc_samples, opts.seed)?;
    let (mc_iee, mc_n1) = integrate::mc_one_photon(cutoff, opts.mc_samples, opts.seed)?;
    let mc = |n: KernelName| match n {
        KernelName::IEE => mc_iee,
        KernelName::N1 => mc_n1,
        _ => mc2.get(n).expect("two-photon"),
    };
    let breakdown: BTreeMap<KernelName, RoutePair> = KernelName::ALL
        .into_iter()
        .map(|n| (n, RoutePair { quad: quads[&n], mc: mc(n) }))
        .collect();

    let v = |n: KernelName| quads[&n].value;
    let e = |n: KernelName| quads[&n].error_estimate;
    use KernelName::*;
    let e2 = e2_combination(v(DD), v(EEEE), v(EPD), v(EEDD), v(IEE), v(N1));
    let e2_error = e(DD) + e(EEEE) + 4.0 * e(EPD) + 2.0 * e(EEDD) + v(IEE).abs() * e(N1) + v(N1).abs() * e(IEE);
    let m = |n: KernelName| mc(n).mean;
    let s = |n: KernelName| mc(n).std_error;
    let e2_mc = e2_combination(m(DD), m(EEEE), m(EPD), m(EEDD), m(IEE), m(N1));
    let e2_mc_std_error =
        s(DD) + s(EEEE) + 4.0 * s(EPD) + 2.0 * s(EEDD) + m(IEE).abs() * s(N1) + m(N1).abs() * s(IEE);
    let l = cutoff.lambda();
    Ok(SelfEnergyCoefficients {
        lambda: l,
        e1: e1_closed(cutoff),
        e1_quad: l * l / PI - v(IEE),
        e2,
        e2_error,
        e2_mc,
        e2_mc_std_error,
        breakdown,
        cross_ep: mc2.cross_ep,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfEnergyPrediction {
    pub alpha: f64,
    pub sigma: f64,
    pub error_order_note: String,
}

/// Σ_α ≈ α e₁ + α² e₂.
pub fn sigma_prediction(e1: f64, e2: f64, alpha: f64) -> Result<SelfEnergyPrediction> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(SelfEnergyPrediction {
        alpha,
        sigma: alpha * e1 + alpha * alpha * e2,
        error_order_note: "remainder O(alpha^(5/2) ln(1/alpha))".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(l: f64) -> Cutoff {
        Cutoff::new(l).unwrap()
    }

    #[test]
    fn e1_closed_examples() {
        assert!((e1_closed(cut(1.0)) - 2.0 / PI * (1.0 - 2f64.ln())).abs() < 1e-16);
        assert!((e1_closed(cut(1.0)) - 0.195348).abs() < 1e-6);
        assert_eq!(e1_closed(cut(0.0)), 0.0);
        assert!((e1_closed(cut(10.0)) - 4.839650).abs() < 1e-6);
    }

    #[test]
    fn e1_small_cutoff_asymptotics() {
        let l = 1e-3;
        let ratio = e1_closed(cut(l)) / (l * l) * PI;
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn iee_and_n1_closed_forms() {
        let a = iee(cut(1.0)).unwrap();
        assert!((a.value - (2.0 * 2f64.ln() - 1.0) / PI).abs() < 1e-9);
        let b = n1(cut(1.0)).unwrap();
        assert!((b.value - 2.0 / PI * (2f64.ln() - 0.5)).abs() < 1e-9);
        assert_eq!(iee(cut(0.0)).unwrap().value, 0.0);
    }

    #[test]
    fn first_order_identity() {
        for l in [0.5, 1.0, 5.0, 10.0] {
            let c = cut(l);
            let d = l * l / PI - iee(c).unwrap().value - e1_closed(c);
            assert!(d.abs() < 1e-8, "Λ={l}: {d}");
        }
    }

    #[test]
    fn vev2_rejects_one_photon_names() {
        assert!(vev2(KernelName::IEE, cut(1.0), &Vev2Options::default()).is_err());
    }

    #[test]
    fn vev2_zero_cutoff() {
        let o = Vev2Options { mc_samples: 10_000, ..Default::default() };
        let (q, m) = vev2(KernelName::DD, cut(0.0), &o).unwrap();
        assert_eq!(q.value, 0.0);
        assert_eq!(m.mean, 0.0);
    }

    #[test]
    fn e2_total_zero_cutoff() {
        let o = Vev2Options { mc_samples: 10_000, ..Default::default() };
        let c = e2_total(cut(0.0), &o).unwrap();
        assert_eq!(c.e1, 0.0);
        assert_eq!(c.e2, 0.0);
    }

    #[test]
    fn sigma_prediction_definition() {
        let p = sigma_prediction(0.2, -0.03, 1e-3).unwrap();
        assert!((p.sigma - (1e-3 * 0.2 - 1e-6 * 0.03)).abs() < 1e-18);
        assert!(sigma_prediction(0.2, -0.03, 0.0).is_err());
        let small = sigma_prediction(0.2, -0.03, 1e-9).unwrap();
        assert!((small.sigma / 1e-9 - 0.2).abs() < 1e-9);
    }
}
