//! Run configurations. Every command reads an optional JSON file; missing
//! keys take the defaults below and unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pflab_core::binding::PotentialProfile;
use pflab_core::fock::Eigensolver;

/// A configuration or input error; maps to exit code 1.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Invalid> {
    Err(Invalid(msg.into()))
}

fn check_positive(name: &str, v: f64) -> Result<(), Invalid> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<(), Invalid> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be non-negative and finite, got {v}"))
    }
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Invalid(format!("cannot read {}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text).map_err(|e| Invalid(format!("invalid config {}: {e}", p.display())))?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub lambdas: Vec<f64>,
    pub quad_tol: f64,
    pub quad_tol_1d: f64,
    pub mc_samples: u64,
    pub seed: u64,
    /// Optional coupling values for a Σ_α ≈ αE₁ + α²E₂ table.
    pub alphas: Vec<f64>,
    pub csv: Option<PathBuf>,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        CoeffsConfig {
            lambdas: vec![1.0],
            quad_tol: 1e-6,
            quad_tol_1d: 1e-9,
            mc_samples: 10_000_000,
            seed: 20240601,
            alphas: Vec::new(),
            csv: None,
        }
    }
}

impl CoeffsConfig {
    pub fn validate(&self) -> Result<(), Invalid> {
        if self.lambdas.is_empty() {
            return invalid("lambdas must not be empty");
        }
        for &l in &self.lambdas {
            check_nonnegative("lambda", l)?;
        }
        check_positive("quad_tol", self.quad_tol)?;
        check_positive("quad_tol_1d", self.quad_tol_1d)?;
        if self.mc_samples < pflab_core::integrate::MIN_MC_SAMPLES {
            return invalid(format!(
                "mc_samples must be at least {}, got {}",
                pflab_core::integrate::MIN_MC_SAMPLES,
                self.mc_samples
            ));
        }
        for &a in &self.alphas {
            check_positive("alpha", a)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub n_r: usize,
    pub n_t: usize,
    pub n_phi: usize,
}

impl GridSize {
    pub fn n_modes(&self) -> usize {
        2 * self.n_r * self.n_t * self.n_phi
    }

    pub fn label(&self) -> String {
        format!("{}x{}x{}", self.n_r, self.n_t, self.n_phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockSweepConfig {
    pub lambda: f64,
    pub grids: Vec<GridSize>,
    pub alphas: Vec<f64>,
    pub eig_tol: f64,
    pub max_iter: usize,
    pub solver: Eigensolver,
    pub include_diagonal_pairs: bool,
    /// Add α³ to every sector's diagonal.
    pub infrared_shift: bool,
    /// Upper bound for the estimated eigensolver memory, in MiB.
    pub memory_budget_mib: f64,
    pub csv: Option<PathBuf>,
}

impl Default for FockSweepConfig {
    fn default() -> Self {
        FockSweepConfig {
            lambda: 1.0,
            grids: vec![GridSize { n_r: 8, n_t: 4, n_phi: 8 }],
            alphas: vec![1e-3, 2e-3, 4e-3, 8e-3],
            eig_tol: 1e-12,
            max_iter: 400,
            solver: Eigensolver::Davidson,
            include_diagonal_pairs: true,
            infrared_shift: false,
            memory_budget_mib: 4096.0,
            csv: None,
        }
    }
}

/// Complex vectors held by the eigensolver: a Davidson basis and its image
/// (2 × 14) plus work vectors.
const VECTORS_HELD: f64 = 36.0;

pub fn estimated_memory_mib(g: &GridSize) -> f64 {
    let m = g.n_modes() as f64;
    let dim = 2.0 * (1.0 + m + m * (m + 1.0) / 2.0);
    dim * 16.0 * VECTORS_HELD / (1024.0 * 1024.0)
}

impl FockSweepConfig {
    pub fn validate(&self) -> Result<(), Invalid> {
        check_positive("lambda", self.lambda)?;
        if self.grids.is_empty() {
            return invalid("grids must not be empty");
        }
        for g in &self.grids {
            if g.n_r < 2 || g.n_t < 2 || g.n_phi < 4 || g.n_phi % 2 != 0 {
                return invalid(format!("grid {} needs n_r, n_t ≥ 2 and even n_phi ≥ 4", g.label()));
            }
            let mem = estimated_memory_mib(g);
            if mem > self.memory_budget_mib {
                return invalid(format!(
                    "grid {} needs about {mem:.0} MiB, above the budget of {} MiB",
                    g.label(),
                    self.memory_budget_mib
                ));
            }
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1e-2) {
                return invalid(format!("alpha values must lie in (0, 1e-2], got {a}"));
            }
        }
        let distinct: BTreeSet<u64> = self.alphas.iter().map(|a| a.to_bits()).collect();
        if distinct.len() < 4 {
            return invalid(format!(
                "the expansion fit needs at least 4 distinct alpha values, got {}",
                distinct.len()
            ));
        }
        check_positive("eig_tol", self.eig_tol)?;
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        check_positive("memory_budget_mib", self.memory_budget_mib)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BindingConfig {
    pub potential: PotentialProfile,
    pub r0: f64,
    /// Explicit (lo, hi) coupling bracket; scanned from 0 to g_max if absent.
    pub bracket: Option<[f64; 2]>,
    pub g_max: f64,
    pub bracket_samples: usize,
    pub resonance_tol: f64,
    pub steps: usize,
    pub lambda: f64,
    pub alphas: Vec<f64>,
    /// ε = 2^-j for j in [eps_j_min, eps_j_max].
    pub eps_j_min: i32,
    pub eps_j_max: i32,
    pub csv: Option<PathBuf>,
}

impl Default for BindingConfig {
    fn default() -> Self {
        BindingConfig {
            potential: PotentialProfile::Bump,
            r0: 1.0,
            bracket: None,
            g_max: 40.0,
            bracket_samples: 40,
            resonance_tol: 1e-12,
            steps: 4000,
            lambda: 1.0,
            alphas: vec![1e-2],
            eps_j_min: 0,
            eps_j_max: 30,
            csv: None,
        }
    }
}

impl BindingConfig {
    pub fn validate(&self) -> Result<(), Invalid> {
        check_positive("r0", self.r0)?;
        if let Some([lo, hi]) = self.bracket {
            check_nonnegative("bracket.lo", lo)?;
            if !(hi > lo) || !hi.is_finite() {
                return invalid(format!("bracket needs lo < hi, got [{lo}, {hi}]"));
            }
        }
        check_positive("g_max", self.g_max)?;
        if self.bracket_samples == 0 {
            return invalid("bracket_samples must be positive");
        }
        check_positive("resonance_tol", self.resonance_tol)?;
        if self.steps < 16 {
            return invalid(format!("steps must be at least 16, got {}", self.steps));
        }
        check_nonnegative("lambda", self.lambda)?;
        if self.alphas.is_empty() {
            return invalid("alphas must not be empty");
        }
        for &a in &self.alphas {
            check_nonnegative("alpha", a)?;
        }
        if self.eps_j_min > self.eps_j_max || self.eps_j_min < -30 || self.eps_j_max > 60 {
            return invalid(format!(
                "need -30 ≤ eps_j_min ≤ eps_j_max ≤ 60, got [{}, {}]",
                self.eps_j_min, self.eps_j_max
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub lambda: f64,
    pub alpha: f64,
    /// Grid for the operator-level checks.
    pub grid: GridSize,
    /// Random grids for the auxiliary-operator bounds.
    pub random_grids: usize,
    pub random_grid_sizes: Vec<GridSize>,
    pub bound_tol: f64,
    pub mc_samples: u64,
    pub kernel_points: usize,
    pub random_pairs: usize,
    pub seed: u64,
    /// Polar-node skew applied to the epsilon-tensor grid under --negative-control.
    pub negative_control_skew: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            lambda: 1.0,
            alpha: 0.01,
            grid: GridSize { n_r: 3, n_t: 2, n_phi: 4 },
            random_grids: 20,
            random_grid_sizes: vec![
                GridSize { n_r: 2, n_t: 2, n_phi: 4 },
                GridSize { n_r: 3, n_t: 2, n_phi: 4 },
                GridSize { n_r: 2, n_t: 3, n_phi: 4 },
                GridSize { n_r: 2, n_t: 2, n_phi: 6 },
            ],
            bound_tol: 1e-10,
            mc_samples: 1_000_000,
            kernel_points: 100,
            random_pairs: 100,
            seed: 7,
            negative_control_skew: 0.05,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), Invalid> {
        check_nonnegative("lambda", self.lambda)?;
        check_nonnegative("alpha", self.alpha)?;
        for g in std::iter::once(&self.grid).chain(&self.random_grid_sizes) {
            if g.n_r < 2 || g.n_t < 2 || g.n_phi < 4 || g.n_phi % 2 != 0 {
                return invalid(format!("grid {} needs n_r, n_t ≥ 2 and even n_phi ≥ 4", g.label()));
            }
        }
        if self.grid.n_modes() > 128 {
            return invalid(format!(
                "verify grid {} has {} modes; at most 128 are supported for the dense-free checks",
                self.grid.label(),
                self.grid.n_modes()
            ));
        }
        if self.random_grids > 0 && self.random_grid_sizes.is_empty() {
            return invalid("random_grid_sizes must not be empty when random_grids > 0");
        }
        check_positive("bound_tol", self.bound_tol)?;
        if self.mc_samples < pflab_core::integrate::MIN_MC_SAMPLES {
            return invalid(format!(
                "mc_samples must be at least {}, got {}",
                pflab_core::integrate::MIN_MC_SAMPLES,
                self.mc_samples
            ));
        }
        check_nonnegative("negative_control_skew", self.negative_control_skew)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        CoeffsConfig::default().validate().unwrap();
        FockSweepConfig::default().validate().unwrap();
        BindingConfig::default().validate().unwrap();
        VerifyConfig::default().validate().unwrap();
    }

    #[test]
    fn missing_keys_take_defaults() {
        let c: FockSweepConfig = serde_json::from_str(r#"{"lambda": 2.0}"#).unwrap();
        assert_eq!(c.lambda, 2.0);
        assert_eq!(c.alphas, FockSweepConfig::default().alphas);
    }

    #[test]
    fn unknown_keys_fail() {
        assert!(serde_json::from_str::<CoeffsConfig>(r#"{"lambda": [1]}"#).is_err());
        assert!(serde_json::from_str::<FockSweepConfig>(r#"{"grids": [{"n_r": 2, "n_t": 2, "n_phi": 4, "x": 1}]}"#).is_err());
    }

    #[test]
    fn alpha_list_needs_four_distinct_small_values() {
        let mut c = FockSweepConfig::default();
        c.alphas = vec![1e-3, 1e-3, 2e-3, 4e-3];
        assert!(c.validate().is_err());
        c.alphas = vec![1e-3, 2e-3, 4e-3, 8e-3, 1e-2];
        assert!(c.validate().is_ok());
        c.alphas.push(1.1e-2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn memory_estimate_matches_dimension() {
        let g = GridSize { n_r: 8, n_t: 4, n_phi: 8 };
        let m = 512.0;
        let dim = 2.0 * (1.0 + m + m * (m + 1.0) / 2.0);
        assert!((estimated_memory_mib(&g) - dim * 16.0 * 36.0 / 1048576.0).abs() < 1e-9);
        let mut c = FockSweepConfig::default();
        c.memory_budget_mib = 1.0;
        assert!(c.validate().unwrap_err().0.contains("budget"));
    }

    #[test]
    fn binding_bracket_must_be_ordered() {
        let mut c = BindingConfig::default();
        c.bracket = Some([3.0, 2.0]);
        assert!(c.validate().is_err());
        c.bracket = Some([2.0, 3.0]);
        assert!(c.validate().is_ok());
    }
}
