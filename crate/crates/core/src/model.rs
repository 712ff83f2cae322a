//! The generalised Dicke Hamiltonian for three-level atoms, its rotated-frame
//! parameters, and the effective two-level Hamiltonian of the decoupled frame.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_sector, BasisSet, Level};
use crate::error::{Error, Result};
use crate::operators::{collective_a, collective_x, field_quadrature, photon_number, OperatorMatrix};
use crate::rotations::decoupling_angle;

/// Absolute tolerance on |ω_j − ω_k| below which two levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Atomic configuration, named after the pattern of allowed dipole transitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    /// Ladder: μ₁₃ = 0.
    Xi,
    /// μ₁₂ = 0.
    Lambda,
    /// μ₂₃ = 0.
    V,
}

impl Configuration {
    pub const ALL: [Configuration; 3] = [Configuration::Xi, Configuration::Lambda, Configuration::V];

    pub fn forbidden(self) -> Coupling {
        match self {
            Configuration::Xi => Coupling::Mu13,
            Configuration::Lambda => Coupling::Mu12,
            Configuration::V => Coupling::Mu23,
        }
    }

    /// The allowed couplings as the (x, y) pair of the decoupling angle:
    /// the first branch has tan α = y/x, the second tan α = −x/y.
    pub fn angle_pair(self) -> (Coupling, Coupling) {
        match self {
            Configuration::Xi => (Coupling::Mu12, Coupling::Mu23),
            Configuration::Lambda => (Coupling::Mu23, Coupling::Mu13),
            Configuration::V => (Coupling::Mu12, Coupling::Mu13),
        }
    }

    /// Axes (μ_a, μ_b) of the coupling plane used for sweeps and plots.
    pub fn plane(self) -> (Coupling, Coupling) {
        match self {
            Configuration::Xi => (Coupling::Mu12, Coupling::Mu23),
            Configuration::Lambda => (Coupling::Mu13, Coupling::Mu23),
            Configuration::V => (Coupling::Mu12, Coupling::Mu13),
        }
    }

    /// Level pair (j, k) of the rotation generator K_jk, set by the
    /// forbidden transition.
    pub fn rotation_pair(self) -> (Level, Level) {
        match self {
            Configuration::Xi => (Level::Three, Level::One),
            Configuration::Lambda => (Level::One, Level::Two),
            Configuration::V => (Level::Three, Level::Two),
        }
    }

    /// Level left without a field coupling by the rotation of `branch`.
    pub fn isolated_level(self, branch: Branch) -> Level {
        use Branch::*;
        match (self, branch) {
            (Configuration::Xi, First) => Level::Three,
            (Configuration::Xi, Second) => Level::One,
            (Configuration::Lambda, First) => Level::One,
            (Configuration::Lambda, Second) => Level::Two,
            (Configuration::V, First) => Level::Three,
            (Configuration::V, Second) => Level::Two,
        }
    }

    /// Levels still coupled to the field after the rotation of `branch`.
    pub fn active_pair(self, branch: Branch) -> (Level, Level) {
        let l = self.isolated_level(branch);
        let mut rest = Level::ALL.into_iter().filter(|&x| x != l);
        (rest.next().unwrap(), rest.next().unwrap())
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Configuration::Xi => "xi",
            Configuration::Lambda => "lambda",
            Configuration::V => "v",
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xi" | "ξ" | "ladder" | "cascade" => Ok(Configuration::Xi),
            "lambda" | "λ" => Ok(Configuration::Lambda),
            "v" => Ok(Configuration::V),
            other => Err(Error::InvalidConfig(format!("unknown configuration '{other}'"))),
        }
    }
}

/// Which of the two decoupling angles of a configuration is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    First,
    Second,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::First, Branch::Second];
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::First => "first",
            Branch::Second => "second",
        })
    }
}

/// Dipolar coupling label μ_jk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Mu12,
    Mu13,
    Mu23,
}

impl Coupling {
    pub const ALL: [Coupling; 3] = [Coupling::Mu12, Coupling::Mu13, Coupling::Mu23];

    pub fn levels(self) -> (Level, Level) {
        match self {
            Coupling::Mu12 => (Level::One, Level::Two),
            Coupling::Mu13 => (Level::One, Level::Three),
            Coupling::Mu23 => (Level::Two, Level::Three),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Coupling::Mu12 => 0,
            Coupling::Mu13 => 1,
            Coupling::Mu23 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Coupling::Mu12 => "mu12",
            Coupling::Mu13 => "mu13",
            Coupling::Mu23 => "mu23",
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_omega() -> f64 {
    1.0
}

/// Physical parameters plus truncation of one model instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub configuration: Configuration,
    /// Field frequency Ω; energies are in units of ħΩ when it is 1.
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    #[serde(default)]
    pub mu12: f64,
    #[serde(default)]
    pub mu13: f64,
    #[serde(default)]
    pub mu23: f64,
    pub na: usize,
    pub nmax: usize,
}

impl ModelConfig {
    pub fn new(configuration: Configuration, levels: [f64; 3], na: usize, nmax: usize) -> Self {
        ModelConfig {
            configuration,
            omega: 1.0,
            omega1: levels[0],
            omega2: levels[1],
            omega3: levels[2],
            mu12: 0.0,
            mu13: 0.0,
            mu23: 0.0,
            na,
            nmax,
        }
    }

    pub fn with_coupling(mut self, c: Coupling, value: f64) -> Self {
        self.set_coupling(c, value);
        self
    }

    pub fn with_nmax(mut self, nmax: usize) -> Self {
        self.nmax = nmax;
        self
    }

    pub fn coupling(&self, c: Coupling) -> f64 {
        match c {
            Coupling::Mu12 => self.mu12,
            Coupling::Mu13 => self.mu13,
            Coupling::Mu23 => self.mu23,
        }
    }

    pub fn set_coupling(&mut self, c: Coupling, value: f64) {
        match c {
            Coupling::Mu12 => self.mu12 = value,
            Coupling::Mu13 => self.mu13 = value,
            Coupling::Mu23 => self.mu23 = value,
        }
    }

    pub fn level_energy(&self, l: Level) -> f64 {
        match l {
            Level::One => self.omega1,
            Level::Two => self.omega2,
            Level::Three => self.omega3,
        }
    }

    /// ω_jk = |ω_j − ω_k|.
    pub fn gap(&self, j: Level, k: Level) -> f64 {
        (self.level_energy(j) - self.level_energy(k)).abs()
    }

    /// Places a point (s cos θ, s sin θ) of the configuration's coupling plane.
    pub fn at_plane_point(mut self, mu_a: f64, mu_b: f64) -> Self {
        let (a, b) = self.configuration.plane();
        self.set_coupling(a, mu_a);
        self.set_coupling(b, mu_b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let values = [self.omega, self.omega1, self.omega2, self.omega3, self.mu12, self.mu13, self.mu23];
        if values.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if self.omega <= 0.0 {
            return bad(format!("field frequency must be positive, got {}", self.omega));
        }
        if !(self.omega1 <= self.omega2 && self.omega2 <= self.omega3) {
            return bad(format!(
                "level frequencies must satisfy ω1 ≤ ω2 ≤ ω3, got ({}, {}, {})",
                self.omega1, self.omega2, self.omega3
            ));
        }
        for c in Coupling::ALL {
            if self.coupling(c) < 0.0 {
                return bad(format!("{c} must be non-negative, got {}", self.coupling(c)));
            }
        }
        let forbidden = self.configuration.forbidden();
        if self.coupling(forbidden) != 0.0 {
            return bad(format!(
                "{forbidden} is a forbidden transition in the {} configuration and must be zero",
                self.configuration
            ));
        }
        if self.na == 0 {
            return bad("atom count must be at least 1".into());
        }
        Ok(())
    }

    /// True when the two levels sharing a transition in Λ (ω₁, ω₂) or V
    /// (ω₂, ω₃) are degenerate, so both transitions have the same detuning.
    pub fn equal_detuning(&self) -> bool {
        match self.configuration {
            Configuration::Xi => false,
            Configuration::Lambda => self.gap(Level::One, Level::Two) <= DEGENERACY_TOL,
            Configuration::V => self.gap(Level::Two, Level::Three) <= DEGENERACY_TOL,
        }
    }

    fn check_basis(&self, b: &BasisSet) -> Result<()> {
        if b.na() != self.na || b.nmax() != self.nmax {
            return Err(Error::InvalidConfig(format!(
                "basis (Na={}, nmax={}) does not match the model (Na={}, nmax={})",
                b.na(),
                b.nmax(),
                self.na,
                self.nmax
            )));
        }
        Ok(())
    }
}

/// Δ_jk = Ω − |ω_j − ω_k| for j < k.
pub fn detuning(m: &ModelConfig, j: Level, k: Level) -> Result<f64> {
    if j >= k {
        return Err(Error::InvalidParameter(format!("detuning needs j < k, got ({j}, {k})")));
    }
    Ok(m.omega - m.gap(j, k))
}

/// Coefficients of the rotated Hamiltonian for one decoupling choice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotatedParameters {
    pub configuration: Configuration,
    pub branch: Branch,
    pub alpha: f64,
    /// ω̃₁, ω̃₂, ω̃₃.
    pub omega_t: [f64; 3],
    /// λ̃ on the forbidden transition `lambda_levels`.
    pub lambda_t: f64,
    pub lambda_levels: (Level, Level),
    /// μ̃₁₂, μ̃₁₃, μ̃₂₃.
    pub mu_t: [f64; 3],
}

impl RotatedParameters {
    pub fn mu(&self, c: Coupling) -> f64 {
        self.mu_t[c.index()]
    }

    pub fn omega(&self, l: Level) -> f64 {
        self.omega_t[l.index()]
    }
}

/// Rotated-frame parameters in closed form, as rational functions of the
/// couplings.
pub fn rotated_parameters(m: &ModelConfig, branch: Branch) -> Result<RotatedParameters> {
    m.validate()?;
    let alpha = decoupling_angle(m, branch)?;
    let (w1, w2, w3) = (m.omega1, m.omega2, m.omega3);
    let (m12, m13, m23) = (m.mu12, m.mu13, m.mu23);
    let first = branch == Branch::First;
    let sign = if first { 1.0 } else { -1.0 };

    let (omega_t, lambda_t, lambda_levels, mu_t) = match m.configuration {
        Configuration::Xi => {
            let r2 = m12 * m12 + m23 * m23;
            let (a, b) = if first { (m12 * m12, m23 * m23) } else { (m23 * m23, m12 * m12) };
            let omega_t = [(w1 * a + w3 * b) / r2, w2, (w1 * b + w3 * a) / r2];
            let lambda = sign * (w3 - w1) * m12 * m23 / r2;
            let mu = if first { [r2.sqrt(), 0.0, 0.0] } else { [0.0, 0.0, r2.sqrt()] };
            (omega_t, lambda, (Level::One, Level::Three), mu)
        }
        Configuration::Lambda => {
            let r2 = m13 * m13 + m23 * m23;
            let (a, b) = if first { (m23 * m23, m13 * m13) } else { (m13 * m13, m23 * m23) };
            let omega_t = [(w1 * a + w2 * b) / r2, (w1 * b + w2 * a) / r2, w3];
            let lambda = -sign * (w2 - w1) * m13 * m23 / r2;
            let mu = if first { [0.0, 0.0, r2.sqrt()] } else { [0.0, r2.sqrt(), 0.0] };
            (omega_t, lambda, (Level::One, Level::Two), mu)
        }
        Configuration::V => {
            let r2 = m12 * m12 + m13 * m13;
            let (a, b) = if first { (m12 * m12, m13 * m13) } else { (m13 * m13, m12 * m12) };
            let omega_t = [w1, (w2 * a + w3 * b) / r2, (w2 * b + w3 * a) / r2];
            let lambda = sign * (w3 - w2) * m12 * m13 / r2;
            let mu = if first { [r2.sqrt(), 0.0, 0.0] } else { [0.0, r2.sqrt(), 0.0] };
            (omega_t, lambda, (Level::Two, Level::Three), mu)
        }
    };
    let lambda_t = if m.equal_detuning() { 0.0 } else { lambda_t };
    Ok(RotatedParameters {
        configuration: m.configuration,
        branch,
        alpha,
        omega_t,
        lambda_t,
        lambda_levels,
        mu_t,
    })
}

/// Building blocks shared by every Hamiltonian on one basis.
#[derive(Clone, Debug)]
pub struct ModelOperators {
    basis: Arc<BasisSet>,
    photons: OperatorMatrix,
    populations: [OperatorMatrix; 3],
    /// A_jk + A_kj for the three pairs, ordered like [`Coupling::ALL`].
    transitions: [OperatorMatrix; 3],
    /// (â† + â)(A_jk + A_kj), same order.
    dipoles: [OperatorMatrix; 3],
}

impl ModelOperators {
    pub fn new(basis: Arc<BasisSet>) -> Self {
        let q = field_quadrature(&basis);
        let transitions = Coupling::ALL.map(|c| {
            let (j, k) = c.levels();
            collective_x(&basis, j, k)
        });
        let dipoles = [0, 1, 2].map(|i| q.mul(&transitions[i]).expect("same basis"));
        ModelOperators {
            photons: photon_number(&basis),
            populations: Level::ALL.map(|l| collective_a(&basis, l, l)),
            transitions,
            dipoles,
            basis,
        }
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn population(&self, l: Level) -> &OperatorMatrix {
        &self.populations[l.index()]
    }

    pub fn photons(&self) -> &OperatorMatrix {
        &self.photons
    }

    /// Ω â†â + Σ ω_ℓ A_ℓℓ + λ (A_jk + A_kj) − (1/√Na)(â† + â) Σ μ_jk (A_jk + A_kj).
    fn assemble(
        &self,
        cfg: Configuration,
        omega: f64,
        levels: [f64; 3],
        one_body: Option<(f64, Coupling)>,
        mu: [f64; 3],
    ) -> Result<OperatorMatrix> {
        let g = -1.0 / (self.basis.na() as f64).sqrt();
        let mut terms: Vec<(f64, &OperatorMatrix)> = vec![(omega, &self.photons)];
        for l in Level::ALL {
            terms.push((levels[l.index()], &self.populations[l.index()]));
        }
        if let Some((lambda, c)) = one_body {
            terms.push((lambda, &self.transitions[c.index()]));
        }
        for c in Coupling::ALL {
            terms.push((g * mu[c.index()], &self.dipoles[c.index()]));
        }
        Ok(OperatorMatrix::linear_combination(&terms)?.into_hermitian()?.with_parity(cfg))
    }

    pub fn hamiltonian(&self, m: &ModelConfig) -> Result<OperatorMatrix> {
        m.validate()?;
        m.check_basis(&self.basis)?;
        self.assemble(
            m.configuration,
            m.omega,
            [m.omega1, m.omega2, m.omega3],
            None,
            [m.mu12, m.mu13, m.mu23],
        )
    }

    pub fn rotated_hamiltonian(&self, m: &ModelConfig, branch: Branch) -> Result<OperatorMatrix> {
        m.check_basis(&self.basis)?;
        let p = rotated_parameters(m, branch)?;
        let lambda_coupling = match p.lambda_levels {
            (Level::One, Level::Two) => Coupling::Mu12,
            (Level::One, Level::Three) => Coupling::Mu13,
            _ => Coupling::Mu23,
        };
        self.assemble(m.configuration, m.omega, p.omega_t, Some((p.lambda_t, lambda_coupling)), p.mu_t)
    }
}

/// H = Ω â†â + Σ ω_j A_jj − (1/√Na)(â† + â) Σ_{j<k} μ_jk (A_jk + A_kj).
pub fn build_hamiltonian(m: &ModelConfig, b: &Arc<BasisSet>) -> Result<OperatorMatrix> {
    m.validate()?;
    m.check_basis(b)?;
    ModelOperators::new(b.clone()).hamiltonian(m)
}

/// H′ = U H U† assembled term by term from [`rotated_parameters`].
pub fn build_rotated_hamiltonian(m: &ModelConfig, b: &Arc<BasisSet>, branch: Branch) -> Result<OperatorMatrix> {
    m.validate()?;
    m.check_basis(b)?;
    ModelOperators::new(b.clone()).rotated_hamiltonian(m, branch)
}

/// Effective two-level Hamiltonian of the rotated frame on the sector with
/// `n_isolated` atoms in the decoupled level:
/// h_jk + ω̃_ℓ n_ℓ with μ_eff = √(n_a/Na) μ̃_jk and n_a = Na − n_ℓ.
/// The one-body λ̃ term, which leaves the sector, is not part of h_jk.
pub fn build_effective_two_level(m: &ModelConfig, n_isolated: usize, branch: Branch) -> Result<OperatorMatrix> {
    m.validate()?;
    if n_isolated > m.na {
        return Err(Error::InvalidParameter(format!(
            "isolated-level occupation {n_isolated} exceeds the atom count {}",
            m.na
        )));
    }
    let p = rotated_parameters(m, branch)?;
    let isolated = m.configuration.isolated_level(branch);
    let (j, k) = m.configuration.active_pair(branch);
    let b = Arc::new(enumerate_sector(m.na, m.nmax, isolated, n_isolated)?);

    let n_active = m.na - n_isolated;
    let active = Coupling::ALL
        .into_iter()
        .find(|c| c.levels() == (j, k) || c.levels() == (k, j))
        .expect("active pair is a coupling");
    let mu_active = p.mu(active);
    let mu_eff = (n_active as f64 / m.na as f64).sqrt() * mu_active;
    let coupling = if n_active == 0 { 0.0 } else { -mu_eff / (n_active as f64).sqrt() };

    let q = field_quadrature(&b);
    let dipole = collective_x(&b, j, k).mul(&q)?;
    let shift = OperatorMatrix::identity(b.clone());
    let h = OperatorMatrix::linear_combination(&[
        (m.omega, &photon_number(&b)),
        (p.omega(j), &collective_a(&b, j, j)),
        (p.omega(k), &collective_a(&b, k, k)),
        (coupling, &dipole),
        (p.omega(isolated) * n_isolated as f64, &shift),
    ])?;
    Ok(h.into_hermitian()?.with_parity(m.configuration))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, BasisState};
    use crate::operators::parity;
    use approx::assert_abs_diff_eq;

    fn b(na: usize, nmax: usize) -> Arc<BasisSet> {
        Arc::new(enumerate_basis(na, nmax).unwrap())
    }

    #[test]
    fn detuning_examples() {
        let m = ModelConfig::new(Configuration::V, [0.0, 0.8, 1.0], 1, 0);
        assert_abs_diff_eq!(detuning(&m, Level::One, Level::Three).unwrap(), 0.0);
        assert_abs_diff_eq!(detuning(&m, Level::One, Level::Two).unwrap(), 0.2, epsilon = 1e-15);
        let l = ModelConfig::new(Configuration::Lambda, [0.3, 0.3, 1.0], 1, 0);
        assert_eq!(
            detuning(&l, Level::One, Level::Three).unwrap(),
            detuning(&l, Level::Two, Level::Three).unwrap()
        );
        assert!(detuning(&m, Level::Three, Level::One).is_err());
    }

    #[test]
    fn validation() {
        let ok = ModelConfig::new(Configuration::Xi, [0.0, 1.0, 2.0], 2, 4).with_coupling(Coupling::Mu12, 0.3);
        assert!(ok.validate().is_ok());
        assert!(ok.with_coupling(Coupling::Mu13, 0.1).validate().is_err());
        let mut unordered = ok;
        unordered.omega2 = 3.0;
        assert!(unordered.validate().is_err());
        assert!(ok.with_coupling(Coupling::Mu23, -0.1).validate().is_err());
        let mut dark = ok;
        dark.omega = 0.0;
        assert!(dark.validate().is_err());
        let v = ModelConfig::new(Configuration::V, [0.0, 0.5, 1.0], 1, 1).with_coupling(Coupling::Mu23, 1.0);
        assert!(v.validate().is_err());
        let l = ModelConfig::new(Configuration::Lambda, [0.0, 0.5, 1.0], 1, 1).with_coupling(Coupling::Mu12, 1.0);
        assert!(l.validate().is_err());
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let m = ModelConfig::new(Configuration::Xi, [0.1, 0.4, 0.9], 1, 0);
        let h = build_hamiltonian(&m, &b(1, 0)).unwrap();
        let d = h.to_dense();
        assert_eq!(d, nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.4, 0.9])));
    }

    #[test]
    fn xi_rejects_forbidden_coupling() {
        let m = ModelConfig::new(Configuration::Xi, [0.0, 1.0, 2.0], 1, 1).with_coupling(Coupling::Mu13, 0.5);
        assert!(matches!(build_hamiltonian(&m, &b(1, 1)), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn basis_mismatch_rejected() {
        let m = ModelConfig::new(Configuration::Xi, [0.0, 1.0, 2.0], 2, 3);
        assert!(matches!(build_hamiltonian(&m, &b(2, 4)), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn hand_expanded_v_element() {
        // ⟨1;1,0,0| −(â†+â) μ12 (A12+A21) |0;0,1,0⟩ = −μ12 · √1 · √1
        let m = ModelConfig::new(Configuration::V, [0.0, 0.8, 1.0], 1, 1)
            .with_coupling(Coupling::Mu12, 0.3)
            .with_coupling(Coupling::Mu13, 0.2);
        let basis = b(1, 1);
        let h = build_hamiltonian(&m, &basis).unwrap();
        let i = basis.index_of(&BasisState::new(1, 1, 0, 0)).unwrap();
        let j = basis.index_of(&BasisState::new(0, 0, 1, 0)).unwrap();
        assert_abs_diff_eq!(h.get(i, j), -0.3, epsilon = 1e-15);
        let k = basis.index_of(&BasisState::new(1, 0, 0, 1)).unwrap();
        let g = basis.index_of(&BasisState::new(0, 1, 0, 0)).unwrap();
        assert_abs_diff_eq!(h.get(k, g), -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(i, i), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.get(j, j), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_commutes_with_parity() {
        for cfg in Configuration::ALL {
            let (x, y) = cfg.angle_pair();
            let m = ModelConfig::new(cfg, [0.0, 0.6, 1.3], 3, 6).with_coupling(x, 0.7).with_coupling(y, 1.1);
            let basis = b(3, 6);
            let p = parity(&basis, cfg);
            let h = build_hamiltonian(&m, &basis).unwrap();
            assert!(h.commutator(&p).unwrap().max_abs() < 1e-12);
            for br in Branch::BOTH {
                let hr = build_rotated_hamiltonian(&m, &basis, br).unwrap();
                assert!(hr.commutator(&p).unwrap().max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_entries() {
        let xi = ModelConfig::new(Configuration::Xi, [0.0, 1.0, 2.0], 1, 0)
            .with_coupling(Coupling::Mu12, 3.0)
            .with_coupling(Coupling::Mu23, 4.0);
        let p = rotated_parameters(&xi, Branch::First).unwrap();
        assert_abs_diff_eq!(p.mu(Coupling::Mu12), 5.0, epsilon = 1e-14);
        assert_eq!(p.mu(Coupling::Mu23), 0.0);
        assert_eq!(p.mu(Coupling::Mu13), 0.0);

        let lam = ModelConfig::new(Configuration::Lambda, [0.2, 0.2, 1.0], 1, 0)
            .with_coupling(Coupling::Mu13, 0.4)
            .with_coupling(Coupling::Mu23, 0.9);
        for br in Branch::BOTH {
            assert_eq!(rotated_parameters(&lam, br).unwrap().lambda_t, 0.0);
        }

        let v = ModelConfig::new(Configuration::V, [0.0, 0.8, 1.0], 1, 0)
            .with_coupling(Coupling::Mu12, 1.0)
            .with_coupling(Coupling::Mu13, 1.0);
        let p = rotated_parameters(&v, Branch::First).unwrap();
        assert_abs_diff_eq!(p.lambda_t, 0.1, epsilon = 1e-15);
        assert_eq!(p.lambda_levels, (Level::Two, Level::Three));
    }

    #[test]
    fn exactly_one_rotated_coupling_survives() {
        for cfg in Configuration::ALL {
            let (x, y) = cfg.angle_pair();
            let m = ModelConfig::new(cfg, [0.0, 0.5, 1.0], 1, 0).with_coupling(x, 0.3).with_coupling(y, 0.4);
            for br in Branch::BOTH {
                let p = rotated_parameters(&m, br).unwrap();
                let nonzero: Vec<_> = p.mu_t.iter().filter(|v| **v != 0.0).collect();
                assert_eq!(nonzero.len(), 1);
                assert_abs_diff_eq!(*nonzero[0], 0.5, epsilon = 1e-15);
                let (j, k) = cfg.active_pair(br);
                let surviving = Coupling::ALL.into_iter().find(|c| c.levels() == (j, k)).unwrap();
                assert_eq!(p.mu(surviving), *nonzero[0]);
            }
        }
    }

    #[test]
    fn undefined_angle_is_an_error() {
        let m = ModelConfig::new(Configuration::V, [0.0, 0.5, 1.0], 1, 0);
        assert!(matches!(rotated_parameters(&m, Branch::First), Err(Error::UndefinedAngle(_))));
    }

    #[test]
    fn effective_two_level_limits() {
        let m = ModelConfig::new(Configuration::Lambda, [0.0, 0.0, 1.0], 2, 3)
            .with_coupling(Coupling::Mu13, 0.6)
            .with_coupling(Coupling::Mu23, 0.8);
        // all atoms parked in the isolated level: only the field remains
        let h = build_effective_two_level(&m, 2, Branch::First).unwrap();
        let p = rotated_parameters(&m, Branch::First).unwrap();
        for (i, s) in h.basis().states().iter().enumerate() {
            assert_abs_diff_eq!(h.get(i, i), s.nu as f64 + 2.0 * p.omega(Level::One), epsilon = 1e-15);
        }
        assert!(h.entries().iter().all(|&(r, c, _)| r == c));

        // n_ℓ = 0 keeps the full rotated coupling: compare with H′ on the sector
        let h0 = build_effective_two_level(&m, 0, Branch::First).unwrap();
        let full = b(2, 3);
        let hr = build_rotated_hamiltonian(&m, &full, Branch::First).unwrap();
        let sb = h0.basis();
        for &(r, c, v) in h0.entries() {
            let fr = full.index_of(&sb.state(r)).unwrap();
            let fc = full.index_of(&sb.state(c)).unwrap();
            assert_abs_diff_eq!(hr.get(fr, fc), v, epsilon = 1e-14);
        }
        assert!(build_effective_two_level(&m, 3, Branch::First).is_err());
    }
}
