//! Lowest eigenpair of a symmetric block-tridiagonal matrix.
//!
//! With photon-major ordering the Hamiltonian only couples neighbouring
//! photon blocks. Positive definiteness of H − σ is decided by a block
//! Cholesky factorization in O(blocks · d³), which brackets the lowest
//! eigenvalue by bisection; shifted inverse iteration then yields the vector.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::operators::OperatorMatrix;

pub(crate) struct BlockTridiagonal {
    /// Global basis indices of each (non-empty) block, ascending.
    indices: Vec<Vec<usize>>,
    diag: Vec<DMatrix<f64>>,
    /// `upper[i]` couples block i (rows) to block i + 1 (columns).
    upper: Vec<DMatrix<f64>>,
    scale: f64,
}

struct Factor {
    chol: Vec<Cholesky<f64, Dyn>>,
    /// L_i⁻¹ B_i.
    g: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Eigenpair {
    pub value: f64,
    /// Global-index amplitudes (zero outside the sector).
    pub vector: Vec<f64>,
    pub residual: f64,
    /// Number of eigenvalues of the sector below `value + tol` (≥ 1).
    pub multiplicity: usize,
}

impl BlockTridiagonal {
    /// Restriction of `h` to the states selected by `keep`, blocked by photon
    /// number. `None` if `h` couples the selection to its complement or
    /// couples photon numbers further apart than one.
    pub fn from_operator(h: &OperatorMatrix, keep: impl Fn(usize) -> bool) -> Option<Self> {
        let basis = h.basis();
        let nblocks = basis.nmax() + 1;
        let mut by_photon: Vec<Vec<usize>> = vec![Vec::new(); nblocks];
        for i in 0..basis.dim() {
            if keep(i) {
                by_photon[basis.state(i).nu].push(i);
            }
        }
        let photon_of: Vec<usize> = (0..nblocks).collect();
        let nonempty: Vec<usize> = photon_of.into_iter().filter(|&nu| !by_photon[nu].is_empty()).collect();
        if nonempty.is_empty() {
            return None;
        }
        // global index -> (block, local position)
        let mut slot = vec![usize::MAX; basis.dim()];
        let mut block_of = vec![usize::MAX; basis.dim()];
        for (bi, &nu) in nonempty.iter().enumerate() {
            for (p, &g) in by_photon[nu].iter().enumerate() {
                slot[g] = p;
                block_of[g] = bi;
            }
        }
        let mut diag: Vec<DMatrix<f64>> = nonempty
            .iter()
            .map(|&nu| DMatrix::zeros(by_photon[nu].len(), by_photon[nu].len()))
            .collect();
        let mut upper: Vec<DMatrix<f64>> = nonempty
            .windows(2)
            .map(|w| DMatrix::zeros(by_photon[w[0]].len(), by_photon[w[1]].len()))
            .collect();
        let mut scale: f64 = 0.0;
        for &(r, c, v) in h.entries() {
            let (kr, kc) = (keep(r), keep(c));
            if kr != kc {
                return None;
            }
            if !kr {
                continue;
            }
            scale = scale.max(v.abs());
            let (br, bc) = (block_of[r], block_of[c]);
            let (nr, nc) = (basis.state(r).nu, basis.state(c).nu);
            if br == bc {
                diag[br][(slot[r], slot[c])] = v;
            } else if bc == br + 1 && nc == nr + 1 {
                upper[br][(slot[r], slot[c])] = v;
            } else if br == bc + 1 && nr == nc + 1 {
                // lower triangle mirrors the upper one
            } else {
                return None;
            }
        }
        let indices = nonempty.into_iter().map(|nu| std::mem::take(&mut by_photon[nu])).collect();
        Some(BlockTridiagonal { indices, diag, upper, scale: scale.max(f64::MIN_POSITIVE) })
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.indices.iter().map(|b| b.len()).sum()
    }

    fn shifted(&self, i: usize, sigma: f64) -> DMatrix<f64> {
        let mut d = self.diag[i].clone();
        for p in 0..d.nrows() {
            d[(p, p)] -= sigma;
        }
        d
    }

    /// Block Cholesky of H − σ; `None` unless positive definite.
    fn factor(&self, sigma: f64) -> Option<Factor> {
        let n = self.diag.len();
        let mut chol = Vec::with_capacity(n);
        let mut g: Vec<DMatrix<f64>> = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut s = self.shifted(i, sigma);
            if i > 0 {
                let gp = &g[i - 1];
                s -= gp.transpose() * gp;
            }
            let c = Cholesky::new(s)?;
            if i + 1 < n {
                let mut gi = self.upper[i].clone();
                c.l_dirty().solve_lower_triangular_mut(&mut gi);
                g.push(gi);
            }
            chol.push(c);
        }
        Some(Factor { chol, g })
    }

    /// Number of eigenvalues below σ, by Sylvester inertia of the block LDLᵀ.
    pub fn count_below(&self, sigma: f64) -> usize {
        let tiny = f64::EPSILON * self.scale;
        let mut count = 0;
        let mut prev_inv: Option<DMatrix<f64>> = None;
        for i in 0..self.diag.len() {
            let mut s = self.shifted(i, sigma);
            if let Some(inv) = &prev_inv {
                let b = &self.upper[i - 1];
                s -= b.transpose() * inv * b;
            }
            let eig = SymmetricEigen::new(s);
            let mut lam = eig.eigenvalues.clone();
            for v in lam.iter_mut() {
                if *v < 0.0 {
                    count += 1;
                }
                if v.abs() < tiny {
                    *v = if *v < 0.0 { -tiny } else { tiny };
                }
            }
            let q = &eig.eigenvectors;
            let inv_lam = DMatrix::from_diagonal(&lam.map(|x| 1.0 / x));
            prev_inv = Some(q * inv_lam * q.transpose());
        }
        count
    }

    fn solve(&self, f: &Factor, rhs: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let n = self.diag.len();
        let mut y: Vec<DVector<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = rhs[i].clone();
            if i > 0 {
                r -= f.g[i - 1].transpose() * &y[i - 1];
            }
            f.chol[i].l_dirty().solve_lower_triangular_mut(&mut r);
            y.push(r);
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                let next = f.g[i].clone() * &y[i + 1];
                y[i] -= next;
            }
            f.chol[i].l_dirty().tr_solve_lower_triangular_mut(&mut y[i]);
        }
        y
    }

    fn apply(&self, x: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = &self.diag[i] * &x[i];
                if i + 1 < n {
                    y += &self.upper[i] * &x[i + 1];
                }
                if i > 0 {
                    y += self.upper[i - 1].transpose() * &x[i - 1];
                }
                y
            })
            .collect()
    }

    fn gershgorin_lower(&self) -> f64 {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        for i in 0..n {
            for p in 0..self.diag[i].nrows() {
                let mut radius: f64 = self.diag[i].row(p).iter().map(|v| v.abs()).sum::<f64>() - self.diag[i][(p, p)].abs();
                if i + 1 < n {
                    radius += self.upper[i].row(p).iter().map(|v| v.abs()).sum::<f64>();
                }
                if i > 0 {
                    radius += self.upper[i - 1].column(p).iter().map(|v| v.abs()).sum::<f64>();
                }
                lo = lo.min(self.diag[i][(p, p)] - radius);
            }
        }
        lo
    }

    fn min_diagonal(&self) -> f64 {
        self.diag
            .iter()
            .flat_map(|d| (0..d.nrows()).map(move |p| d[(p, p)]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Lowest eigenpair; `degeneracy_tol` sets the window used to count
    /// eigenvalues coinciding with it.
    pub fn lowest(&self, degeneracy_tol: f64) -> Option<Eigenpair> {
        let mut lo = self.gershgorin_lower() - self.scale * 1e-9 - 1e-300;
        let mut hi = self.min_diagonal();
        let width = self.scale * 1e-10;
        let mut factor = None;
        // H − lo is positive definite throughout; H − hi is not (hi ≥ E₀).
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            match self.factor(mid) {
                Some(f) => {
                    lo = mid;
                    factor = Some(f);
                }
                None => hi = mid,
            }
        }
        let f = match factor {
            Some(f) => f,
            None => self.factor(lo)?,
        };

        let mut x: Vec<DVector<f64>> = self
            .indices
            .iter()
            .map(|b| DVector::from_iterator(b.len(), b.iter().map(|&g| 1.0 + 0.25 * ((g as f64) * 0.7).sin())))
            .collect();
        let mut value = hi;
        let mut residual = f64::INFINITY;
        for _ in 0..60 {
            x = self.solve(&f, &x);
            let norm = x.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|v| *v /= norm);
            let hx = self.apply(&x);
            value = x.iter().zip(&hx).map(|(a, b)| a.dot(b)).sum();
            residual = hx
                .iter()
                .zip(&x)
                .map(|(h, v)| (h - v * value).norm_squared())
                .sum::<f64>()
                .sqrt();
            if residual < 1e-13 * self.scale {
                break;
            }
        }
        let multiplicity = self.count_below(value + degeneracy_tol).max(1);
        let dim = self.indices.iter().flatten().copied().max().unwrap() + 1;
        let mut vector = vec![0.0; dim];
        for (b, v) in self.indices.iter().zip(&x) {
            for (&g, a) in b.iter().zip(v.iter()) {
                vector[g] = *a;
            }
        }
        Some(Eigenpair { value, vector, residual, multiplicity })
    }
}
