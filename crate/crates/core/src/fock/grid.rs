//! Discrete photon modes: tensorized radial × polar × azimuthal quadrature
//! nodes, each carrying both polarizations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::gauss::{gauss_legendre, gauss_legendre_on};
use crate::kernels::{g_from_frame, Cutoff, PolarizationFrame};
use crate::vec3::{cross, dot, from_spherical, mat_vec, norm, scale, Vec3};
use crate::{Error, Result};

/// One discrete photon mode. `g = √w G^λ(k)`, `h = k∧g` (physical `-i h`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: Vec3,
    pub r: f64,
    pub weight: f64,
    /// 1 or 2.
    pub polarization: u8,
    pub g: Vec3,
    pub h: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n_r: usize,
    pub n_t: usize,
    pub n_phi: usize,
    pub lambda: f64,
}

/// Variations of the standard tensor grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Reference axis of the polarization convention.
    pub reference: Vec3,
    /// Rotation applied to every node.
    pub rotation: Option<[[f64; 3]; 3]>,
    /// Shift t ↦ t + δ(1 − t²) of the polar nodes with unchanged weights;
    /// any δ ≠ 0 breaks the t ↦ −t symmetry (negative control).
    pub t_skew: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            reference: [0.0, 0.0, 1.0],
            rotation: None,
            t_skew: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeGrid {
    pub modes: Vec<Mode>,
    pub params: GridParams,
    pub cutoff: Cutoff,
}

/// Standard grid: Gauss-Legendre in r on (0,Λ) and in t = cos θ, equally
/// spaced midpoint azimuths, two polarizations per node.
pub fn build_grid(cutoff: Cutoff, n_r: usize, n_t: usize, n_phi: usize) -> Result<ModeGrid> {
    build_grid_with(cutoff, n_r, n_t, n_phi, &GridOptions::default())
}

pub fn build_grid_with(
    cutoff: Cutoff,
    n_r: usize,
    n_t: usize,
    n_phi: usize,
    opts: &GridOptions,
) -> Result<ModeGrid> {
    if n_r < 2 || n_t < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n_r ≥ 2 and n_t ≥ 2, got ({n_r}, {n_t})"
        )));
    }
    if n_phi < 4 || n_phi % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "n_phi must be even and ≥ 4, got {n_phi}"
        )));
    }
    let params = GridParams {
        n_r,
        n_t,
        n_phi,
        lambda: cutoff.lambda(),
    };
    if cutoff.is_empty() {
        return Ok(ModeGrid {
            modes: Vec::new(),
            params,
            cutoff,
        });
    }
    let (rs, wr) = gauss_legendre_on(n_r, 0.0, cutoff.lambda());
    let (ts, wt) = gauss_legendre(n_t);
    let wphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_r * n_t * n_phi);
    for (r, w_r) in rs.iter().zip(&wr) {
        for (t, w_t) in ts.iter().zip(&wt) {
            let t = t + opts.t_skew * (1.0 - t * t);
            for p in 0..n_phi {
                let phi = wphi * (p as f64 + 0.5);
                let mut k = from_spherical(*r, t, phi);
                if let Some(rot) = &opts.rotation {
                    k = mat_vec(rot, k);
                }
                nodes.push((k, r * r * w_r * w_t * wphi));
            }
        }
    }
    let mut g = ModeGrid::from_nodes(cutoff, &nodes, opts.reference)?;
    g.params = params;
    Ok(g)
}

impl ModeGrid {
    /// Grid from explicit (k, weight) nodes; both polarizations are added
    /// for each node. Nodes outside the cutoff get zero amplitudes.
    pub fn from_nodes(cutoff: Cutoff, nodes: &[(Vec3, f64)], reference: Vec3) -> Result<ModeGrid> {
        let mut modes = Vec::with_capacity(2 * nodes.len());
        for &(k, w) in nodes {
            if !(w > 0.0) {
                return Err(Error::InvalidArgument(format!("mode weight must be positive, got {w}")));
            }
            let frame = PolarizationFrame::with_reference(k, reference)?;
            let gs = g_from_frame(k, &frame, cutoff);
            for (i, gl) in gs.into_iter().enumerate() {
                let g = scale(w.sqrt(), gl);
                modes.push(Mode {
                    k,
                    r: norm(k),
                    weight: w,
                    polarization: i as u8 + 1,
                    g,
                    h: cross(k, g),
                });
            }
        }
        Ok(ModeGrid {
            modes,
            params: GridParams {
                n_r: 0,
                n_t: 0,
                n_phi: 0,
                lambda: cutoff.lambda(),
            },
            cutoff,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Discrete vacuum constant Σ_m |g_m|², the grid analogue of Λ²/π.
    pub fn vacuum_constant(&self) -> f64 {
        self.modes.iter().map(|m| dot(m.g, m.g)).sum()
    }
}
