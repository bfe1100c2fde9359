//! Mode-sum analogues of the first and second order coefficients and the
//! eigenvalue fit that cross-checks them.

use serde::{Deserialize, Serialize};

use super::grid::ModeGrid;
use super::{assemble, ground_state_with, EigenOptions};
use crate::coeffs::e2_combination;
use crate::integrand::{pair_terms, TwoPhotonTerms};
use crate::vec3::dot;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCoefficients {
    pub e1: f64,
    pub e2: f64,
    pub vacuum: f64,
    pub iee: f64,
    pub n1: f64,
    pub dd: f64,
    pub eeee: f64,
    pub epd: f64,
    pub eedd: f64,
    pub cross_ep: f64,
}

/// e1 = Σ|g|² − Σ|h|²/Q and e2 from mode sums over ordered pairs, with
/// the same denominators as the continuum integrals evaluated at the nodes.
pub fn discrete_coeffs(grid: &ModeGrid) -> DiscreteCoefficients {
    discrete_coeffs_with(grid, true)
}

/// As [`discrete_coeffs`]; `include_diagonal = false` drops the same-mode
/// pairs (a convergence control matching the reduced Fock basis).
pub fn discrete_coeffs_with(grid: &ModeGrid, include_diagonal: bool) -> DiscreteCoefficients {
    let modes = &grid.modes;
    let vacuum = grid.vacuum_constant();
    let mut iee = 0.0;
    let mut n1 = 0.0;
    for m in modes {
        let q = m.r * m.r + m.r;
        let hh = dot(m.h, m.h);
        iee += hh / q;
        n1 += hh / (q * q);
    }
    let mut acc = TwoPhotonTerms::default();
    for (a, ma) in modes.iter().enumerate() {
        let mut row = TwoPhotonTerms::default();
        for (b, mb) in modes.iter().enumerate() {
            if a == b && !include_diagonal {
                continue;
            }
            row.accumulate(&pair_terms(ma.k, ma.g, ma.h, mb.k, mb.g, mb.h));
        }
        acc.accumulate(&row);
    }
    DiscreteCoefficients {
        e1: vacuum - iee,
        e2: e2_combination(acc.dd, acc.eeee, acc.epd, acc.eedd, iee, n1),
        vacuum,
        iee,
        n1,
        dd: acc.dd,
        eeee: acc.eeee,
        epd: acc.epd,
        eedd: acc.eedd,
        cross_ep: acc.cross_ep,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub alpha: f64,
    pub energy: f64,
    pub residual: f64,
    pub degeneracy_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub c1: f64,
    pub c2: f64,
    /// Root of the sum of squared fit residuals.
    pub fit_residual: f64,
    pub points: Vec<FitPoint>,
}

/// Least-squares fit of E(α) = c₁α + c₂α² through given points.
pub fn fit_points(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidArgument("singular design matrix: all alpha are zero".into()));
    }
    // columns u = α/s and u², solve normal equations
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, e) in points {
        let u = a / scale;
        s11 += u * u;
        s12 += u * u * u;
        s22 += u * u * u * u;
        b1 += u * e;
        b2 += u * u * e;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-12 * s11 * s22 {
        return Err(Error::InvalidArgument("singular design matrix".into()));
    }
    let x1 = (b1 * s22 - b2 * s12) / det;
    let x2 = (s11 * b2 - s12 * b1) / det;
    let c1 = x1 / scale;
    let c2 = x2 / (scale * scale);
    let res = points
        .iter()
        .map(|&(a, e)| (e - c1 * a - c2 * a * a).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((c1, c2, res))
}

/// Ground energies at each α on a fixed grid (ℓ = 0), fitted by c₁α + c₂α².
pub fn fit_expansion(grid: &ModeGrid, alphas: &[f64], tol: f64) -> Result<ExpansionFit> {
    fit_expansion_with(
        grid,
        alphas,
        &EigenOptions {
            tol,
            compute_gap: false,
            ..Default::default()
        },
    )
}

pub fn fit_expansion_with(grid: &ModeGrid, alphas: &[f64], opts: &EigenOptions) -> Result<ExpansionFit> {
    let mut distinct: Vec<f64> = alphas.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument("singular design matrix: need distinct alpha values".into()));
    }
    if distinct.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 distinct alpha values, got {}",
            distinct.len()
        )));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1e-2)) {
        return Err(Error::InvalidArgument(format!("alpha values must lie in (0, 1e-2], got {a}")));
    }
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let op = assemble(grid, alpha, [0.0; 3], None)?;
        let gs = ground_state_with(&op, opts)?;
        points.push(FitPoint {
            alpha,
            energy: gs.energy,
            residual: gs.residual,
            degeneracy_gap: gs.degeneracy_gap,
        });
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.alpha, p.energy)).collect();
    let (c1, c2, fit_residual) = fit_points(&xy)?;
    Ok(ExpansionFit {
        c1,
        c2,
        fit_residual,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_grid;
    use crate::kernels::Cutoff;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_first_order_by_hand() {
        let c = Cutoff::new(2.0).unwrap();
        let k = [0.0, 0.6, 0.8];
        let w = 0.25;
        let g = ModeGrid::from_nodes(c, &[(k, w)], [0.0, 0.0, 1.0]).unwrap();
        let d = discrete_coeffs(&g);
        // both polarizations: Σ|g|² = 2w/(4π²r), Σ|h|² = r² Σ|g|²
        let r = 1.0;
        let vac = 2.0 * w / (4.0 * PI * PI * r);
        let hand = vac - r * r * vac / (r * r + r);
        assert!((d.e1 - hand).abs() < 1e-16);
    }

    #[test]
    fn fit_recovers_exact_quadratic() {
        let pts: Vec<(f64, f64)> = [1e-3, 2e-3, 4e-3, 8e-3].iter().map(|&a| (a, 0.2 * a - 0.03 * a * a)).collect();
        let (c1, c2, r) = fit_points(&pts).unwrap();
        assert!((c1 - 0.2).abs() < 1e-12);
        assert!((c2 + 0.03).abs() < 1e-8);
        assert!(r < 1e-15);
    }

    #[test]
    fn fit_rejects_equal_alphas() {
        let g = build_grid(Cutoff::new(1.0).unwrap(), 2, 2, 4).unwrap();
        let e = fit_expansion(&g, &[1e-3; 4], 1e-10).unwrap_err();
        assert!(e.to_string().contains("singular"));
        assert!(fit_expansion(&g, &[1e-3, 2e-3, 3e-3], 1e-10).is_err());
        assert!(fit_expansion(&g, &[1e-3, 2e-3, 3e-3, 0.5], 1e-10).is_err());
    }

    #[test]
    fn cross_term_vanishes_on_grid() {
        let g = build_grid(Cutoff::new(1.0).unwrap(), 3, 2, 4).unwrap();
        let d = discrete_coeffs(&g);
        assert!(d.cross_ep.abs() < 1e-15);
    }

    #[test]
    fn fit_matches_mode_sums_on_small_grid() {
        let g = build_grid(Cutoff::new(1.0).unwrap(), 3, 2, 4).unwrap();
        let d = discrete_coeffs(&g);
        let f = fit_expansion(&g, &[1e-3, 2e-3, 4e-3, 8e-3], 1e-11).unwrap();
        assert!(((f.c1 - d.e1) / d.e1).abs() < 1e-3, "{} {}", f.c1, d.e1);
        assert!(((f.c2 - d.e2) / d.e2).abs() < 5e-2, "{} {}", f.c2, d.e2);
    }
}
