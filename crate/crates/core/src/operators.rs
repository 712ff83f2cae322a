//! Real sparse matrices over a [`BasisSet`]: field operators, the collective
//! generators A_jk = b_j† b_k, and the excitation-number / parity operators.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::basis::{BasisSet, Level};
use crate::error::{Error, Result};
use crate::model::Configuration;

/// Coordinate-list real matrix bound to a basis.
///
/// Entries are kept sorted by (row, col) with duplicates merged and exact
/// zeros removed. `parity` records the configuration whose parity operator
/// is known to commute with the matrix; solvers use it to split sectors.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: Arc<BasisSet>,
    entries: Vec<(usize, usize, f64)>,
    hermitian: bool,
    parity: Option<Configuration>,
}

impl OperatorMatrix {
    pub fn from_entries(basis: Arc<BasisSet>, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut acc: HashMap<(usize, usize), f64> = HashMap::with_capacity(entries.len());
        for (r, c, v) in entries {
            *acc.entry((r, c)).or_insert(0.0) += v;
        }
        Self::from_map(basis, acc)
    }

    fn from_map(basis: Arc<BasisSet>, acc: HashMap<(usize, usize), f64>) -> Self {
        let dim = basis.dim();
        let mut entries: Vec<_> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| {
                assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
                (r, c, v)
            })
            .collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        OperatorMatrix { basis, entries, hermitian: false, parity: None }
    }

    pub fn zeros(basis: Arc<BasisSet>) -> Self {
        OperatorMatrix { basis, entries: Vec::new(), hermitian: true, parity: None }
    }

    pub fn identity(basis: Arc<BasisSet>) -> Self {
        let entries = (0..basis.dim()).map(|i| (i, i, 1.0)).collect();
        OperatorMatrix { basis, entries, hermitian: true, parity: None }
    }

    /// Diagonal matrix with `f(state)` on the diagonal.
    pub fn diagonal_from(basis: Arc<BasisSet>, f: impl Fn(&crate::basis::BasisState) -> f64) -> Self {
        let entries = basis
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (i, i, f(s)))
            .filter(|&(_, _, v)| v != 0.0)
            .collect();
        OperatorMatrix { basis, entries, hermitian: true, parity: None }
    }

    pub fn from_dense(basis: Arc<BasisSet>, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), basis.dim());
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        OperatorMatrix { basis, entries, hermitian: false, parity: None }
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn parity(&self) -> Option<Configuration> {
        self.parity
    }

    /// Marks the matrix hermitian after an exact symmetry check.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let asym = self.max_asymmetry();
        if asym != 0.0 {
            return Err(Error::NotHermitian(asym));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Records that the matrix commutes with the parity of `cfg`.
    pub fn with_parity(mut self, cfg: Configuration) -> Self {
        self.parity = Some(cfg);
        self
    }

    /// Largest |M_rc − M_cr|.
    pub fn max_asymmetry(&self) -> f64 {
        let map = self.as_map();
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - map.get(&(c, r)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
            .map(|i| self.entries[i].2)
            .unwrap_or(0.0)
    }

    fn as_map(&self) -> HashMap<(usize, usize), f64> {
        self.entries.iter().map(|&(r, c, v)| ((r, c), v)).collect()
    }

    fn check_basis(&self, other: &OperatorMatrix) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    pub fn transpose(&self) -> OperatorMatrix {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        OperatorMatrix { entries, ..self.clone() }
    }

    pub fn scale(&self, s: f64) -> OperatorMatrix {
        if s == 0.0 {
            return OperatorMatrix { entries: Vec::new(), ..self.clone() };
        }
        let entries = self.entries.iter().map(|&(r, c, v)| (r, c, s * v)).collect();
        OperatorMatrix { entries, ..self.clone() }
    }

    /// Σ cᵢ Mᵢ over matrices sharing one basis.
    pub fn linear_combination(terms: &[(f64, &OperatorMatrix)]) -> Result<OperatorMatrix> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?
            .1;
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for &(coef, m) in terms {
            first.check_basis(m)?;
            if coef == 0.0 {
                continue;
            }
            for &(r, c, v) in &m.entries {
                *acc.entry((r, c)).or_insert(0.0) += coef * v;
            }
        }
        Ok(Self::from_map(first.basis.clone(), acc))
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        Self::linear_combination(&[(1.0, self), (1.0, other)])
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        Self::linear_combination(&[(1.0, self), (-1.0, other)])
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_basis(other)?;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.dim()];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, k, v) in &self.entries {
            for &(j, w) in &rows[k] {
                *acc.entry((i, j)).or_insert(0.0) += v * w;
            }
        }
        Ok(Self::from_map(self.basis.clone(), acc))
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// max |A_rc − B_rc|.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn apply_complex(&self, x: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        let mut y = vec![num_complex::Complex64::new(0.0, 0.0); self.dim()];
        for &(r, c, v) in &self.entries {
            y[r] += x[c] * v;
        }
        y
    }
}

/// â† truncated at the photon cutoff.
pub fn boson_create(b: &Arc<BasisSet>) -> OperatorMatrix {
    let mut entries = Vec::new();
    for (i, s) in b.states().iter().enumerate() {
        if let Some(j) = b.find(&s.with_photons(s.nu + 1)) {
            entries.push((j, i, ((s.nu + 1) as f64).sqrt()));
        }
    }
    OperatorMatrix::from_entries(b.clone(), entries)
}

pub fn boson_annihilate(b: &Arc<BasisSet>) -> OperatorMatrix {
    boson_create(b).transpose()
}

/// â†â, exact on the truncated space.
pub fn photon_number(b: &Arc<BasisSet>) -> OperatorMatrix {
    OperatorMatrix::diagonal_from(b.clone(), |s| s.nu as f64)
}

/// â† + â.
pub fn field_quadrature(b: &Arc<BasisSet>) -> OperatorMatrix {
    let up = boson_create(b);
    let down = up.transpose();
    up.add(&down)
        .expect("same basis")
        .into_hermitian()
        .expect("â† + â is symmetric by construction")
}

/// Collective generator A_jk = b_j† b_k. Transitions leaving a sector basis
/// are dropped.
pub fn collective_a(b: &Arc<BasisSet>, j: Level, k: Level) -> OperatorMatrix {
    if j == k {
        let mut op = OperatorMatrix::diagonal_from(b.clone(), |s| s.occupation(j) as f64);
        op.hermitian = true;
        return op;
    }
    let mut entries = Vec::new();
    for (i, s) in b.states().iter().enumerate() {
        let Some(t) = s.transfer(j, k) else { continue };
        if let Some(target) = b.find(&t) {
            let amp = ((s.occupation(j) + 1) * s.occupation(k)) as f64;
            entries.push((target, i, amp.sqrt()));
        }
    }
    OperatorMatrix::from_entries(b.clone(), entries)
}

/// A_jk + A_kj.
pub fn collective_x(b: &Arc<BasisSet>, j: Level, k: Level) -> OperatorMatrix {
    let a = collective_a(b, j, k);
    let at = a.transpose();
    a.add(&at).expect("same basis").into_hermitian().expect("symmetric by construction")
}

/// Eigenvalue of the configuration's total-excitation operator M on `s`.
pub fn excitation_count(cfg: Configuration, s: &crate::basis::BasisState) -> usize {
    match cfg {
        Configuration::Xi => s.nu + s.n2 + 2 * s.n3,
        Configuration::V => s.nu + s.n2 + s.n3,
        Configuration::Lambda => s.nu + s.n3,
    }
}

pub fn excitation_number(b: &Arc<BasisSet>, cfg: Configuration) -> OperatorMatrix {
    OperatorMatrix::diagonal_from(b.clone(), |s| excitation_count(cfg, s) as f64)
}

/// Π = exp(iπM), diagonal with entries (−1)^M.
pub fn parity(b: &Arc<BasisSet>, cfg: Configuration) -> OperatorMatrix {
    OperatorMatrix::diagonal_from(b.clone(), |s| {
        if excitation_count(cfg, s) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, BasisState};
    use Level::*;

    fn basis(na: usize, nmax: usize) -> Arc<BasisSet> {
        Arc::new(enumerate_basis(na, nmax).unwrap())
    }

    fn element(op: &OperatorMatrix, b: &BasisSet, to: BasisState, from: BasisState) -> f64 {
        op.get(b.index_of(&to).unwrap(), b.index_of(&from).unwrap())
    }

    #[test]
    fn creation_matrix_elements() {
        let b = basis(1, 1);
        let ad = boson_create(&b);
        assert_eq!(element(&ad, &b, BasisState::new(1, 1, 0, 0), BasisState::new(0, 1, 0, 0)), 1.0);
        let b3 = basis(1, 3);
        let ad = boson_create(&b3);
        let v = element(&ad, &b3, BasisState::new(2, 0, 1, 0), BasisState::new(1, 0, 1, 0));
        assert!((v - 1.41421356).abs() < 1e-8);
        // truncation: nothing leaves the top block
        let top = b3.photon_block(3);
        assert!(ad.entries().iter().all(|&(_, c, _)| !top.contains(&c)));
    }

    #[test]
    fn annihilation_kills_vacuum() {
        let b = basis(2, 3);
        let a = boson_annihilate(&b);
        for c in b.photon_block(0) {
            assert!(a.entries().iter().all(|&(_, col, _)| col != c));
        }
        assert_eq!(a.max_abs_diff(&boson_create(&b).transpose()).unwrap(), 0.0);
    }

    #[test]
    fn collective_elements() {
        let b = basis(1, 0);
        let a11 = collective_a(&b, One, One);
        assert_eq!(element(&a11, &b, BasisState::new(0, 1, 0, 0), BasisState::new(0, 1, 0, 0)), 1.0);
        let a12 = collective_a(&b, One, Two);
        assert_eq!(element(&a12, &b, BasisState::new(0, 1, 0, 0), BasisState::new(0, 0, 1, 0)), 1.0);
        let b2 = basis(2, 0);
        let a31 = collective_a(&b2, Three, One);
        let v = element(&a31, &b2, BasisState::new(0, 1, 0, 1), BasisState::new(0, 2, 0, 0));
        assert_eq!(v, 2f64.sqrt());
    }

    #[test]
    fn excitation_and_parity_values() {
        let b = basis(1, 2);
        let s = |nu, a, c, d| b.index_of(&BasisState::new(nu, a, c, d)).unwrap();
        let mx = excitation_number(&b, Configuration::Xi);
        assert_eq!(mx.get(s(1, 0, 0, 1), s(1, 0, 0, 1)), 3.0);
        let mv = excitation_number(&b, Configuration::V);
        assert_eq!(mv.get(s(0, 1, 0, 0), s(0, 1, 0, 0)), 0.0);
        let ml = excitation_number(&b, Configuration::Lambda);
        assert_eq!(ml.get(s(2, 0, 1, 0), s(2, 0, 1, 0)), 2.0);

        assert_eq!(parity(&b, Configuration::Xi).get(s(1, 0, 0, 1), s(1, 0, 0, 1)), -1.0);
        for cfg in [Configuration::Xi, Configuration::Lambda, Configuration::V] {
            assert_eq!(parity(&b, cfg).get(s(0, 1, 0, 0), s(0, 1, 0, 0)), 1.0);
        }
        assert_eq!(parity(&b, Configuration::V).get(s(1, 0, 1, 0), s(1, 0, 1, 0)), 1.0);
    }

    #[test]
    fn su3_commutators() {
        for (na, nmax) in [(1, 1), (2, 0), (3, 1)] {
            let b = basis(na, nmax);
            let gens: Vec<_> = Level::ALL
                .iter()
                .flat_map(|&j| Level::ALL.iter().map(move |&k| (j, k)))
                .map(|(j, k)| ((j, k), collective_a(&b, j, k)))
                .collect();
            let get = |j: Level, k: Level| &gens[j.index() * 3 + k.index()].1;
            for ((j, k), ajk) in &gens {
                for ((l, m), alm) in &gens {
                    let lhs = ajk.commutator(alm).unwrap();
                    let mut terms = Vec::new();
                    if l == k {
                        terms.push((1.0, get(*j, *m)));
                    }
                    if j == m {
                        terms.push((-1.0, get(*l, *k)));
                    }
                    let rhs = if terms.is_empty() {
                        OperatorMatrix::zeros(b.clone())
                    } else {
                        OperatorMatrix::linear_combination(&terms).unwrap()
                    };
                    assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12, "[A{j}{k}, A{l}{m}]");
                }
            }
        }
    }

    #[test]
    fn diagonal_generators_sum_to_atom_number() {
        let b = basis(3, 2);
        let sum = OperatorMatrix::linear_combination(&[
            (1.0, &collective_a(&b, One, One)),
            (1.0, &collective_a(&b, Two, Two)),
            (1.0, &collective_a(&b, Three, Three)),
        ])
        .unwrap();
        let n = OperatorMatrix::identity(b.clone()).scale(3.0);
        assert_eq!(sum.max_abs_diff(&n).unwrap(), 0.0);
    }

    #[test]
    fn sector_basis_drops_outgoing_transitions() {
        let b = Arc::new(crate::basis::enumerate_sector(2, 1, One, 0).unwrap());
        let a12 = collective_a(&b, One, Two);
        assert_eq!(a12.nnz(), 0);
        let a23 = collective_a(&b, Two, Three);
        assert!(a23.nnz() > 0);
    }

    #[test]
    fn symmetric_operators_are_exactly_symmetric() {
        let b = basis(3, 4);
        assert_eq!(field_quadrature(&b).max_asymmetry(), 0.0);
        assert_eq!(collective_x(&b, One, Three).max_asymmetry(), 0.0);
        assert!(collective_a(&b, One, Three).into_hermitian().is_err());
    }
}
