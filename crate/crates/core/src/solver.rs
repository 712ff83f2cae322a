//! Eigensolvers, ground states, observables, photon-cutoff convergence and
//! unitary time evolution.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{enumerate_basis_with_limit, BasisSet, BasisState, Level};
use crate::blocktri::BlockTridiagonal;
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModelConfig};
use crate::operators::{excitation_count, OperatorMatrix};

/// Eigenvalue separation below which two levels are reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Normalized state vector over a basis.
#[derive(Clone, Debug)]
pub struct QuantumState {
    basis: Arc<BasisSet>,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps `amplitudes`, which must already be normalized to within 1e-10.
    pub fn new(basis: Arc<BasisSet>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::BasisMismatch);
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state norm {norm} differs from 1")));
        }
        Ok(QuantumState { basis, amplitudes })
    }

    /// Normalizes `amplitudes`; rejects the zero vector.
    pub fn normalized(basis: Arc<BasisSet>, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        QuantumState::new(basis, amplitudes)
    }

    pub fn from_real(basis: Arc<BasisSet>, v: &[f64]) -> Result<Self> {
        QuantumState::normalized(basis, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis_state(basis: Arc<BasisSet>, s: &BasisState) -> Result<Self> {
        let i = basis.index_of(s)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[i] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { basis, amplitudes: amps })
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_basis(&self, other: &BasisSet) -> Result<()> {
        if self.basis.same_as(other) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        self.check_basis(&other.basis)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// ⟨self|X|other⟩.
    pub fn matrix_element(&self, x: &OperatorMatrix, other: &QuantumState) -> Result<Complex64> {
        self.check_basis(x.basis())?;
        other.check_basis(x.basis())?;
        let xo = x.apply_complex(&other.amplitudes);
        Ok(self.amplitudes.iter().zip(&xo).map(|(a, b)| a.conj() * b).sum())
    }

    /// Re ⟨X⟩.
    pub fn expectation(&self, x: &OperatorMatrix) -> Result<f64> {
        Ok(self.matrix_element(x, self)?.re)
    }

    /// Applies a real operator; the result is renormalized only by the caller.
    pub fn transformed(&self, u: &OperatorMatrix) -> Result<QuantumState> {
        self.check_basis(u.basis())?;
        Ok(QuantumState { basis: self.basis.clone(), amplitudes: u.apply_complex(&self.amplitudes) })
    }

    /// Σ |c_i|² f(state_i).
    pub fn diagonal_expectation(&self, f: impl Fn(&BasisState) -> f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(self.basis.states())
            .map(|(a, s)| a.norm_sqr() * f(s))
            .sum()
    }

    /// Probability carried by states with at least `nu` photons.
    pub fn photon_tail(&self, nu: usize) -> f64 {
        self.diagonal_expectation(|s| if s.nu >= nu { 1.0 } else { 0.0 })
    }
}

/// Flips `v` so that its largest-magnitude component (lowest index on ties)
/// is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full eigendecomposition with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    basis: Arc<BasisSet>,
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    pub fn state(&self, k: usize) -> QuantumState {
        QuantumState {
            basis: self.basis.clone(),
            amplitudes: self.eigenvectors.column(k).iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

fn require_hermitian(h: &OperatorMatrix) -> Result<()> {
    if h.is_hermitian() {
        return Ok(());
    }
    let asym = h.max_asymmetry();
    if asym == 0.0 {
        Ok(())
    } else {
        Err(Error::NotHermitian(asym))
    }
}

/// Index sets of the parity sectors (even first) if the matrix carries a
/// parity tag, otherwise the whole space.
fn sectors(h: &OperatorMatrix) -> Vec<Vec<usize>> {
    let b = h.basis();
    match h.parity() {
        Some(cfg) => {
            let (even, odd): (Vec<usize>, Vec<usize>) =
                (0..b.dim()).partition(|&i| excitation_count(cfg, &b.state(i)) % 2 == 0);
            [even, odd].into_iter().filter(|s| !s.is_empty()).collect()
        }
        None => vec![(0..b.dim()).collect()],
    }
}

/// Dense symmetric eigendecomposition, sector by sector when the matrix
/// carries a parity tag, so every eigenvector has definite parity.
pub fn diagonalize(h: &OperatorMatrix) -> Result<Spectrum> {
    require_hermitian(h)?;
    let n = h.dim();
    let dense = h.to_dense();
    let mut pairs: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(n);
    for (sector_id, idx) in sectors(h).iter().enumerate() {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| dense[(idx[r], idx[c])]);
        let eig = SymmetricEigen::new(sub);
        for k in 0..idx.len() {
            let mut v = vec![0.0; n];
            for (p, &g) in idx.iter().enumerate() {
                v[g] = eig.eigenvectors[(p, k)];
            }
            fix_sign(&mut v);
            pairs.push((eig.eigenvalues[k], sector_id, v));
        }
    }
    if pairs.iter().any(|p| !p.0.is_finite()) {
        return Err(Error::Numerical("eigensolver produced non-finite eigenvalues".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| pairs[c].2[r]);
    Ok(Spectrum { basis: h.basis().clone(), eigenvalues, eigenvectors })
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: QuantumState,
    pub energy: f64,
    /// Another eigenvalue lies within [`DEGENERACY_GAP`] of `energy`.
    pub degenerate: bool,
}

/// Lowest eigenvector under the sign convention.
///
/// Parity-tagged Hamiltonians are solved sector by sector with the
/// block-tridiagonal solver; when the two sector minima coincide to within
/// [`DEGENERACY_GAP`] the even-sector state is reported and the degeneracy
/// flag set. Other matrices go through the dense solver.
pub fn ground_state(h: &OperatorMatrix) -> Result<GroundState> {
    require_hermitian(h)?;
    let secs = sectors(h);
    let mut found = Vec::with_capacity(secs.len());
    for idx in &secs {
        let mut keep = vec![false; h.dim()];
        idx.iter().for_each(|&i| keep[i] = true);
        match BlockTridiagonal::from_operator(h, |i| keep[i]).and_then(|bt| bt.lowest(DEGENERACY_GAP)) {
            Some(pair) if pair.residual <= 1e-9 * h.max_abs().max(1.0) => found.push(pair),
            _ => return dense_ground_state(h),
        }
    }
    let mut best = 0;
    for (i, p) in found.iter().enumerate() {
        if p.value < found[best].value - DEGENERACY_GAP {
            best = i;
        }
    }
    let energy = found[best].value;
    let degenerate = found[best].multiplicity > 1
        || found.iter().enumerate().any(|(i, p)| i != best && (p.value - energy).abs() < DEGENERACY_GAP);
    let mut v = std::mem::take(&mut found[best].vector);
    v.resize(h.dim(), 0.0);
    fix_sign(&mut v);
    let state = QuantumState::from_real(h.basis().clone(), &v)?;
    Ok(GroundState { state, energy, degenerate })
}

fn dense_ground_state(h: &OperatorMatrix) -> Result<GroundState> {
    let sp = diagonalize(h)?;
    let e = sp.eigenvalues();
    let degenerate = e.len() > 1 && e[1] - e[0] < DEGENERACY_GAP;
    Ok(GroundState { state: sp.state(0), energy: e[0], degenerate })
}

/// ⟨A₁₁⟩, ⟨A₂₂⟩, ⟨A₃₃⟩ and ⟨â†â⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Populations {
    pub a11: f64,
    pub a22: f64,
    pub a33: f64,
    pub photons: f64,
}

impl Populations {
    pub fn level(&self, l: Level) -> f64 {
        match l {
            Level::One => self.a11,
            Level::Two => self.a22,
            Level::Three => self.a33,
        }
    }
}

pub fn populations(s: &QuantumState) -> Populations {
    Populations {
        a11: s.diagonal_expectation(|b| b.n1 as f64),
        a22: s.diagonal_expectation(|b| b.n2 as f64),
        a33: s.diagonal_expectation(|b| b.n3 as f64),
        photons: s.diagonal_expectation(|b| b.nu as f64),
    }
}

/// Doubling schedule and tolerances for [`converge_cutoff`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffPolicy {
    pub start: usize,
    pub cap: usize,
    /// Tolerance on |E₀(n) − E₀(2n)|.
    pub etol: f64,
    /// Tolerance on the ground-state weight in the two highest photon blocks.
    pub ptol: f64,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy { start: 8, cap: 512, etol: 1e-8, ptol: 1e-10 }
    }
}

/// Smallest cutoff on the doubling schedule whose ground state is converged.
pub fn converge_cutoff(m: &ModelConfig, etol: f64, ptol: f64) -> Result<usize> {
    converge_cutoff_with(m, &CutoffPolicy { etol, ptol, ..CutoffPolicy::default() })
}

pub fn converge_cutoff_with(m: &ModelConfig, policy: &CutoffPolicy) -> Result<usize> {
    if !(policy.etol > 0.0 && policy.ptol > 0.0) {
        return Err(Error::InvalidParameter("cutoff tolerances must be positive".into()));
    }
    m.validate()?;
    let solve = |nmax: usize| -> Result<GroundState> {
        let b = Arc::new(enumerate_basis_with_limit(m.na, nmax, usize::MAX)?);
        ground_state(&build_hamiltonian(&m.with_nmax(nmax), &b)?)
    };
    let mut nmax = policy.start.max(1);
    let mut current = solve(nmax)?;
    while nmax <= policy.cap {
        let doubled = solve(2 * nmax)?;
        let tail = current.state.photon_tail(nmax.saturating_sub(1));
        if (current.energy - doubled.energy).abs() < policy.etol && tail < policy.ptol {
            return Ok(nmax);
        }
        nmax *= 2;
        current = doubled;
    }
    Err(Error::NonConvergence { cap: policy.cap })
}

/// Σ_k exp(−i E_k t) ⟨v_k|s₀⟩ v_k.
pub fn evolve(sp: &Spectrum, s0: &QuantumState, t: f64) -> Result<QuantumState> {
    s0.check_basis(sp.basis())?;
    let v = &sp.eigenvectors;
    let n = sp.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let col = v.column(k);
        let overlap: Complex64 = col.iter().zip(&s0.amplitudes).map(|(&x, a)| a * x).sum();
        if overlap.norm_sqr() == 0.0 {
            continue;
        }
        let c = overlap * Complex64::from_polar(1.0, -sp.eigenvalues[k] * t);
        for (o, &x) in out.iter_mut().zip(col.iter()) {
            *o += c * x;
        }
    }
    Ok(QuantumState { basis: s0.basis.clone(), amplitudes: out })
}
