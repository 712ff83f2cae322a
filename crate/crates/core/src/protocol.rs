//! Storing and retrieving qubit content with the decoupling rotations of the
//! Λ and V configurations, and the two-frame Rabi oscillation.
//!
//! Frames are changed by rotating states: the stored frame of a state ψ is
//! U(α₁)ψ and the retrieved frame U(α₂)ψ, where α₁, α₂ are the two
//! decoupling angles. At equal detuning the ground state of the stored frame
//! has no atoms in the isolated level.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{BasisSet, Level};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, Branch, Configuration, ModelConfig};
use crate::rotations::{decoupling_angle, rotation_matrix, RotationSpec};
use crate::solver::{diagonalize, evolve, populations, Populations, QuantumState};

/// Amplitudes c_{ν, n_s} of the component of a state with no atoms in the
/// isolated level. `n_s` counts atoms in the upper level of the active pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitContent {
    pub pair: (Level, Level),
    pub isolated: Level,
    /// ((ν, n_s), c) in basis order.
    pub coefficients: Vec<((usize, usize), Complex64)>,
    /// Weight outside the n_ℓ = 0 sector.
    pub leakage: f64,
}

impl QubitContent {
    pub fn extract(s: &QuantumState, isolated: Level, pair: (Level, Level)) -> Self {
        let upper = pair.0.max(pair.1);
        let mut coefficients = Vec::new();
        let mut leakage = 0.0;
        for (st, &c) in s.basis().states().iter().zip(s.amplitudes()) {
            if st.occupation(isolated) == 0 {
                coefficients.push(((st.nu, st.occupation(upper)), c));
            } else {
                leakage += c.norm_sqr();
            }
        }
        QubitContent { pair, isolated, coefficients, leakage }
    }

    pub fn weight(&self) -> f64 {
        self.coefficients.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    /// |Σ c̄ c'|² over matching (ν, n_s) labels.
    pub fn overlap(&self, other: &QubitContent) -> f64 {
        let lookup: std::collections::HashMap<(usize, usize), Complex64> = other.coefficients.iter().copied().collect();
        self.coefficients
            .iter()
            .filter_map(|(key, c)| lookup.get(key).map(|d| c.conj() * d))
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Result of a frame change.
#[derive(Clone, Debug)]
pub struct FrameState {
    pub state: QuantumState,
    pub content: QubitContent,
    /// ⟨A_ℓℓ⟩ of the isolated level.
    pub isolated_population: f64,
    /// Set when the levels of the active pair are not degenerate, so the
    /// isolation is only approximate.
    pub approximate: bool,
}

fn check_protocol(m: &ModelConfig, b: &BasisSet) -> Result<()> {
    m.validate()?;
    if m.configuration == Configuration::Xi {
        return Err(Error::InvalidConfig(
            "the Ξ configuration has no decoupled level that can store a qubit; use Λ or V".into(),
        ));
    }
    if b.na() != m.na {
        return Err(Error::BasisMismatch);
    }
    Ok(())
}

fn rotate(m: &ModelConfig, s: &QuantumState, alpha: f64, branch: Branch) -> Result<FrameState> {
    let (j, k) = m.configuration.rotation_pair();
    let u = rotation_matrix(&RotationSpec::new(j, k, alpha)?, s.basis())?;
    let state = s.transformed(&u)?;
    let isolated = m.configuration.isolated_level(branch);
    let content = QubitContent::extract(&state, isolated, m.configuration.active_pair(branch));
    let isolated_population = populations(&state).level(isolated);
    Ok(FrameState { state, content, isolated_population, approximate: !m.equal_detuning() })
}

/// Rotates `s` into the stored frame (first branch), isolating level 1 for Λ
/// and level 3 for V.
pub fn store(m: &ModelConfig, s: &QuantumState) -> Result<FrameState> {
    check_protocol(m, s.basis())?;
    rotate(m, s, decoupling_angle(m, Branch::First)?, Branch::First)
}

/// Carries a stored-frame state into the retrieved frame (second branch)
/// with U(α₂) U(α₁)⁻¹ = U(α₂ − α₁).
pub fn retrieve(m: &ModelConfig, stored: &QuantumState) -> Result<FrameState> {
    check_protocol(m, stored.basis())?;
    let a1 = decoupling_angle(m, Branch::First)?;
    let a2 = decoupling_angle(m, Branch::Second)?;
    rotate(m, stored, a2 - a1, Branch::Second)
}

/// 1 when ⟨A_ℓℓ⟩ exceeds the threshold (default 10⁻⁶ Na), else 0.
pub fn classical_bit(s: &QuantumState, level: Level, threshold: Option<f64>) -> Result<u8> {
    let t = threshold.unwrap_or(1e-6 * s.basis().na() as f64);
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {t}")));
    }
    Ok(u8::from(populations(s).level(level) > t))
}

/// Populations of the Rabi demonstration in both frames.
#[derive(Clone, Debug, Serialize)]
pub struct RabiSeries {
    pub times: Vec<f64>,
    /// Stored frame, where level 1 is isolated.
    pub stored: Vec<Populations>,
    /// Retrieved frame, where level 2 is isolated.
    pub retrieved: Vec<Populations>,
}

/// Starts from |ν₀; n₁=0, n₂=0, n₃=1⟩ in the stored frame of a single Λ atom
/// at equal detuning and follows it in both frames.
///
/// The lab-frame state U(α₁)ᵀψ₀ is evolved with H; the two frames are
/// U(α₁)ψ(t) and U(α₂)ψ(t).
pub fn rabi_demo(m: &ModelConfig, nu0: usize, times: &[f64]) -> Result<RabiSeries> {
    m.validate()?;
    if m.configuration != Configuration::Lambda || !m.equal_detuning() {
        return Err(Error::InvalidConfig("the Rabi demonstration needs Λ atoms at equal detuning".into()));
    }
    if m.na != 1 {
        return Err(Error::InvalidConfig(format!("the Rabi demonstration uses one atom, got {}", m.na)));
    }
    if nu0 >= m.nmax {
        return Err(Error::InvalidParameter(format!("ν₀ = {nu0} must lie below the cutoff {}", m.nmax)));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("times must be finite".into()));
    }
    let b = Arc::new(crate::basis::enumerate_basis_with_limit(m.na, m.nmax, usize::MAX)?);
    let (j, k) = m.configuration.rotation_pair();
    let u1 = rotation_matrix(&RotationSpec::new(j, k, decoupling_angle(m, Branch::First)?)?, &b)?;
    let u2 = rotation_matrix(&RotationSpec::new(j, k, decoupling_angle(m, Branch::Second)?)?, &b)?;

    let prepared = QuantumState::basis_state(b.clone(), &crate::basis::BasisState::new(nu0, 0, 0, 1))?;
    let lab = prepared.transformed(&u1.transpose())?;
    let sp = diagonalize(&build_hamiltonian(m, &b)?)?;

    let mut stored = Vec::with_capacity(times.len());
    let mut retrieved = Vec::with_capacity(times.len());
    for &t in times {
        let psi = evolve(&sp, &lab, t)?;
        stored.push(populations(&psi.transformed(&u1)?));
        retrieved.push(populations(&psi.transformed(&u2)?));
    }
    Ok(RabiSeries { times: times.to_vec(), stored, retrieved })
}
