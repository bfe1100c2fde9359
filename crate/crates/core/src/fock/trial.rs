//! Trial states, Rayleigh quotients with their sector decompositions, and
//! the perturbative remainder of a ground state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::{inner, norm_sqr};
use super::operator::{Coupling, FockOperator};
use super::GroundStateResult;
use crate::vec3::norm;
use crate::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TrialKind {
    /// ↑⊗|0⟩ − √α L⁻¹ F* ↑⊗|0⟩.
    OnePhoton,
    /// Second-order state: one-photon part plus −√α L⁻¹F*ψ₁ − α L⁻¹D*·D*ψ₀.
    Tf2,
    /// As Tf2 with the two-photon momentum term taken as +2P_f·D* instead
    /// of 2(ℓ − P_f)·D*.
    Tf2Literal,
    /// Binding form at fixed ℓ: an extra one-photon component −d√α L⁻¹𝒫·D*ψ₀.
    Sepp { d: f64 },
}

#[derive(Debug, Clone)]
pub struct TrialState {
    pub kind: TrialKind,
    /// Unnormalized amplitudes.
    pub state: Vec<C>,
}

fn apply_l_inverse(op: &FockOperator, n: usize, x: &mut [C]) {
    let l = op.l_diagonal(n);
    for (i, li) in l.iter().enumerate() {
        x[2 * i] /= *li;
        x[2 * i + 1] /= *li;
    }
}

/// Trial state on the operator's grid and coupling.
pub fn build_trial(op: &FockOperator, kind: TrialKind) -> TrialState {
    let b = op.basis();
    let sa = op.alpha.sqrt();
    let al = op.alpha;
    let mut psi = b.zeros();
    psi[0] = C::new(1.0, 0.0);
    let x0 = psi[0..2].to_vec();
    let n1 = b.sector_dim(1);
    let n2 = b.sector_dim(2);

    // L⁻¹ σ·E* ψ₀ and L⁻¹ 𝒫·D* ψ₀
    let mut e1 = vec![C::new(0.0, 0.0); n1];
    op.create_01(Coupling::E_STAR, &x0, &mut e1, 1.0);
    apply_l_inverse(op, 1, &mut e1);
    let mut p1 = vec![C::new(0.0, 0.0); n1];
    op.create_01(Coupling { p: 0.5, e: 0.0 }, &x0, &mut p1, 1.0);
    apply_l_inverse(op, 1, &mut p1);

    let mut psi1 = vec![C::new(0.0, 0.0); n1];
    let mut psi2 = vec![C::new(0.0, 0.0); n2];
    let fill_two_photon = |psi2: &mut Vec<C>, from: &[C], momentum_sign: f64| {
        // α L⁻¹ [σ·E* + 2𝒫·D*] L⁻¹σ·E*ψ₀ − α L⁻¹ D*·D* ψ₀
        let mut t = vec![C::new(0.0, 0.0); n2];
        op.create_12(Coupling { p: momentum_sign, e: 1.0 }, from, &mut t, al);
        op.dd_create_02(&x0, &mut t, -al);
        apply_l_inverse(op, 2, &mut t);
        *psi2 = t;
    };
    match kind {
        TrialKind::OnePhoton => {
            // at ℓ = 0 the 𝒫·D* part vanishes on the vacuum; keep the full F*
            op.create_01(Coupling::F_STAR, &x0, &mut psi1, -sa);
            apply_l_inverse(op, 1, &mut psi1);
        }
        TrialKind::Tf2 | TrialKind::Tf2Literal => {
            op.create_01(Coupling::F_STAR, &x0, &mut psi1, -sa);
            apply_l_inverse(op, 1, &mut psi1);
            let mut inner1 = vec![C::new(0.0, 0.0); n1];
            op.create_01(Coupling::F_STAR, &x0, &mut inner1, 1.0);
            apply_l_inverse(op, 1, &mut inner1);
            if kind == TrialKind::Tf2 {
                fill_two_photon(&mut psi2, &inner1, 1.0);
            } else {
                literal_two_photon(op, &inner1, &x0, &mut psi2);
            }
        }
        TrialKind::Sepp { d } => {
            for i in 0..n1 {
                psi1[i] = -sa * (e1[i] + p1[i] * d);
            }
            fill_two_photon(&mut psi2, &e1, 1.0);
        }
    }
    let r1 = b.sector_range(1);
    let r2 = b.sector_range(2);
    psi[r1].copy_from_slice(&psi1);
    psi[r2].copy_from_slice(&psi2);
    TrialState { kind, state: psi }
}

/// α L⁻¹[σ·E* + 2P_f·D*]L⁻¹σ·E*ψ₀ − α L⁻¹D*·D*ψ₀ with P_f the field momentum
/// of the two-photon output. With ℓ set to zero, 𝒫 = −P_f, so the momentum
/// term is −2𝒫·D* on a zero-momentum copy of the operator.
fn literal_two_photon(op: &FockOperator, inner1: &[C], x0: &[C], out: &mut Vec<C>) {
    let n2 = op.basis().sector_dim(2);
    let al = op.alpha;
    let mut at_rest = op.clone();
    at_rest.total_momentum = [0.0; 3];
    let mut t = vec![C::new(0.0, 0.0); n2];
    at_rest.create_12(Coupling::E_STAR, inner1, &mut t, al);
    at_rest.create_12(Coupling::P_D_STAR, inner1, &mut t, -al);
    op.dd_create_02(x0, &mut t, -al);
    apply_l_inverse(op, 2, &mut t);
    *out = t;
}

/// Pieces of ⟨Ψ, TΨ⟩ grouped by sector (unnormalized).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorEnergies {
    /// Σ_n (ψ_n, L ψ_n).
    pub kinetic: [f64; 3],
    /// (αc + shift)‖Ψ‖².
    pub constant: f64,
    /// 2√α Re(ψ_{n+1}, F* ψ_n) for n = 0, 1.
    pub linear: [f64; 2],
    /// 2α Re(ψ₂, D*·D* ψ₀).
    pub pair: f64,
    /// 2α (ψ_n, D*·D ψ_n) for n = 1, 2.
    pub normal: [f64; 2],
}

impl SectorEnergies {
    pub fn total(&self) -> f64 {
        self.kinetic.iter().sum::<f64>() + self.constant + self.linear.iter().sum::<f64>() + self.pair + self.normal.iter().sum::<f64>()
    }
}

/// Completed-square form of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletedSquare {
    /// (ψ₀, L ψ₀) + (αc + shift)‖Ψ‖².
    pub vacuum: f64,
    /// −α‖L^{-1/2}F*ψ₀‖².
    pub first: f64,
    /// −‖L^{-1/2}(√α F*ψ₁ + α D*·D*ψ₀)‖².
    pub second: f64,
    /// (h₁, L h₁) and (h₂, L h₂).
    pub remainder: [f64; 2],
    /// 2α Σ (ψ_n, D*·D ψ_n).
    pub normal: f64,
}

impl CompletedSquare {
    pub fn total(&self) -> f64 {
        self.vacuum + self.first + self.second + self.remainder[0] + self.remainder[1] + self.normal
    }
}

/// Extracted remainders h₁ = ψ₁ + √αL⁻¹F*ψ₀, h₂ = ψ₂ + √αL⁻¹F*ψ₁ + αL⁻¹D*·D*ψ₀.
pub fn extract_remainders(op: &FockOperator, x: &[C]) -> (Vec<C>, Vec<C>) {
    let (x0, x1, x2) = op.split(x);
    let sa = op.alpha.sqrt();
    let mut t1 = vec![C::new(0.0, 0.0); x1.len()];
    op.create_01(Coupling::F_STAR, x0, &mut t1, sa);
    apply_l_inverse(op, 1, &mut t1);
    let h1: Vec<C> = x1.iter().zip(&t1).map(|(a, b)| a + b).collect();
    let mut t2 = vec![C::new(0.0, 0.0); x2.len()];
    op.create_12(Coupling::F_STAR, x1, &mut t2, sa);
    op.dd_create_02(x0, &mut t2, op.alpha);
    apply_l_inverse(op, 2, &mut t2);
    let h2: Vec<C> = x2.iter().zip(&t2).map(|(a, b)| a + b).collect();
    (h1, h2)
}

fn l_form(op: &FockOperator, n: usize, x: &[C]) -> f64 {
    op.l_diagonal(n)
        .iter()
        .enumerate()
        .map(|(i, l)| l * (x[2 * i].norm_sqr() + x[2 * i + 1].norm_sqr()))
        .sum()
}

fn l_inv_form(op: &FockOperator, n: usize, x: &[C]) -> f64 {
    op.l_diagonal(n)
        .iter()
        .enumerate()
        .map(|(i, l)| (x[2 * i].norm_sqr() + x[2 * i + 1].norm_sqr()) / l)
        .sum()
}

pub fn sector_energies(op: &FockOperator, x: &[C]) -> SectorEnergies {
    let (x0, x1, x2) = op.split(x);
    let sa = op.alpha.sqrt();
    let al = op.alpha;
    let f = Coupling::F_STAR;
    let mut fx0 = vec![C::new(0.0, 0.0); x1.len()];
    op.create_01(f, x0, &mut fx0, 1.0);
    let mut fx1 = vec![C::new(0.0, 0.0); x2.len()];
    op.create_12(f, x1, &mut fx1, 1.0);
    let mut ddx0 = vec![C::new(0.0, 0.0); x2.len()];
    op.dd_create_02(x0, &mut ddx0, 1.0);
    let mut n1 = vec![C::new(0.0, 0.0); x1.len()];
    op.dstar_d_1(x1, &mut n1, 1.0);
    let mut n2 = vec![C::new(0.0, 0.0); x2.len()];
    op.dstar_d_2(x2, &mut n2, 1.0);
    SectorEnergies {
        kinetic: [l_form(op, 0, x0), l_form(op, 1, x1), l_form(op, 2, x2)],
        constant: op.diagonal_constant() * norm_sqr(x),
        linear: [2.0 * sa * inner(x1, &fx0).re, 2.0 * sa * inner(x2, &fx1).re],
        pair: 2.0 * al * inner(x2, &ddx0).re,
        normal: [2.0 * al * inner(x1, &n1).re, 2.0 * al * inner(x2, &n2).re],
    }
}

pub fn completed_square(op: &FockOperator, x: &[C]) -> CompletedSquare {
    let (x0, x1, x2) = op.split(x);
    let sa = op.alpha.sqrt();
    let al = op.alpha;
    let f = Coupling::F_STAR;
    let mut fx0 = vec![C::new(0.0, 0.0); x1.len()];
    op.create_01(f, x0, &mut fx0, 1.0);
    let mut s2 = vec![C::new(0.0, 0.0); x2.len()];
    op.create_12(f, x1, &mut s2, sa);
    op.dd_create_02(x0, &mut s2, al);
    let (h1, h2) = extract_remainders(op, x);
    let mut n1 = vec![C::new(0.0, 0.0); x1.len()];
    op.dstar_d_1(x1, &mut n1, 1.0);
    let mut n2 = vec![C::new(0.0, 0.0); x2.len()];
    op.dstar_d_2(x2, &mut n2, 1.0);
    CompletedSquare {
        vacuum: l_form(op, 0, x0) + op.diagonal_constant() * norm_sqr(x),
        first: -al * l_inv_form(op, 1, &fx0),
        second: -l_inv_form(op, 2, &s2),
        remainder: [l_form(op, 1, &h1), l_form(op, 2, &h2)],
        normal: 2.0 * al * (inner(x1, &n1).re + inner(x2, &n2).re),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighQuotient {
    /// ⟨Ψ, TΨ⟩/‖Ψ‖² by operator application.
    pub value: f64,
    /// Same quotient from the sector decomposition.
    pub sector_formula: f64,
    /// Same quotient from the completed-square form.
    pub completed_square: f64,
    pub norm_sqr: f64,
}

/// Rayleigh quotient by three routes; fails if they disagree beyond
/// 1e-10 relative (with an absolute floor of 1e-15 times the scale of the terms).
pub fn rayleigh_quotient(op: &FockOperator, x: &[C]) -> Result<RayleighQuotient> {
    let nn = norm_sqr(x);
    if !(nn > 0.0) {
        return Err(Error::InvalidArgument("zero-norm trial state".into()));
    }
    let tx = op.apply_new(x);
    let direct = inner(x, &tx).re / nn;
    let se = sector_energies(op, x);
    let cs = completed_square(op, x);
    let sector = se.total() / nn;
    let square = cs.total() / nn;
    let scale = (se.kinetic.iter().map(|v| v.abs()).sum::<f64>()
        + se.constant.abs()
        + se.linear.iter().map(|v| v.abs()).sum::<f64>()
        + se.pair.abs()
        + se.normal.iter().map(|v| v.abs()).sum::<f64>())
        / nn;
    let tol = 1e-10 * direct.abs() + 1e-14 * scale;
    if (sector - direct).abs() > tol || (square - direct).abs() > tol {
        return Err(Error::Consistency(format!(
            "Rayleigh quotient routes disagree: direct {direct:e}, sector {sector:e}, completed square {square:e}"
        )));
    }
    Ok(RayleighQuotient {
        value: direct,
        sector_formula: sector,
        completed_square: square,
        norm_sqr: nn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub alpha: f64,
    /// (h₁, L h₁), (h₂, L h₂) for the normalized state.
    pub h_energy: [f64; 2],
    pub total: f64,
    /// total / α² (NaN at α = 0).
    pub ratio_to_alpha2: f64,
    /// ‖pψ₀‖ = |ℓ|‖ψ₀‖; zero at ℓ = 0.
    pub p_psi0_norm: f64,
    /// ‖ψ_n‖² for n = 0, 1, 2.
    pub sector_norms: [f64; 3],
    /// shift · Σ_{n≥2}‖ψ_n‖² when an infrared shift is set, else 0.
    pub infrared_bookkeeping: f64,
}

pub fn remainder_diagnostics(op: &FockOperator, gs: &GroundStateResult) -> RemainderReport {
    let nn = norm_sqr(&gs.state);
    let x: Vec<C> = gs.state.iter().map(|z| z / nn.sqrt()).collect();
    let (h1, h2) = extract_remainders(op, &x);
    let e = [l_form(op, 1, &h1), l_form(op, 2, &h2)];
    let (x0, x1, x2) = op.split(&x);
    let total = e[0] + e[1];
    let a2 = op.alpha * op.alpha;
    RemainderReport {
        alpha: op.alpha,
        h_energy: e,
        total,
        ratio_to_alpha2: if a2 > 0.0 { total / a2 } else { f64::NAN },
        p_psi0_norm: norm(op.total_momentum) * norm_sqr(x0).sqrt(),
        sector_norms: [norm_sqr(x0), norm_sqr(x1), norm_sqr(x2)],
        infrared_bookkeeping: op.infrared_shift.unwrap_or(0.0) * norm_sqr(x2),
    }
}
