//! SU(2) rotations U_jk(α) = exp(−α K_jk) with K_jk = A_jk − A_kj, their
//! closed-form action on the collective generators, and the matrix
//! exponential used to check it.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::basis::{BasisSet, Level};
use crate::error::{Error, Result};
use crate::model::{Branch, ModelConfig};
use crate::operators::{collective_a, OperatorMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationSpec {
    pub j: Level,
    pub k: Level,
    pub alpha: f64,
}

impl RotationSpec {
    pub fn new(j: Level, k: Level, alpha: f64) -> Result<Self> {
        if j == k {
            return Err(Error::InvalidParameter(format!("rotation needs two distinct levels, got ({j}, {k})")));
        }
        Ok(RotationSpec { j, k, alpha })
    }

    pub fn inverse(&self) -> Self {
        RotationSpec { alpha: -self.alpha, ..*self }
    }
}

/// K_jk = A_jk − A_kj, real antisymmetric.
pub fn generator_k(b: &Arc<BasisSet>, j: Level, k: Level) -> Result<OperatorMatrix> {
    if j == k {
        return Err(Error::InvalidParameter(format!("K_{j}{k} needs j ≠ k")));
    }
    collective_a(b, j, k).sub(&collective_a(b, k, j))
}

/// exp(M) by scaling and squaring of a truncated Taylor series.
pub(crate) fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for i in 1..=24 {
        term = &term * &a / i as f64;
        sum += &term;
        if term.iter().all(|v| v.abs() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// U = exp(−αK) restricted to one photon block. K never touches the field, so
/// the full matrix repeats this block along the diagonal.
pub fn atomic_rotation_block(spec: &RotationSpec, b: &Arc<BasisSet>) -> Result<DMatrix<f64>> {
    let k = generator_k(b, spec.j, spec.k)?;
    let block = b.photon_block(0);
    let n = block.len();
    let mut kd = DMatrix::zeros(n, n);
    for &(r, c, v) in k.entries() {
        if block.contains(&r) && block.contains(&c) {
            kd[(r - block.start, c - block.start)] = v;
        }
    }
    Ok(expm(&(kd * -spec.alpha)))
}

/// U_jk(α) = exp(−α K_jk), orthogonal.
pub fn rotation_matrix(spec: &RotationSpec, b: &Arc<BasisSet>) -> Result<OperatorMatrix> {
    let u = atomic_rotation_block(spec, b)?;
    let size = b.block_size();
    let mut entries = Vec::with_capacity((b.nmax() + 1) * size * size);
    for nu in 0..=b.nmax() {
        let off = b.photon_block(nu).start;
        for c in 0..size {
            for r in 0..size {
                let v = u[(r, c)];
                if v != 0.0 {
                    entries.push((off + r, off + c, v));
                }
            }
        }
    }
    Ok(OperatorMatrix::from_entries(b.clone(), entries))
}

/// Ã_ℓm = U A_ℓm U† as a combination of untransformed generators,
/// coefficients paired with (row level, column level).
pub fn closed_form_terms(spec: &RotationSpec, l: Level, m: Level) -> Vec<(f64, Level, Level)> {
    let (j, k) = (spec.j, spec.k);
    let (c, s) = (spec.alpha.cos(), spec.alpha.sin());
    let (cc, ss, cs) = (c * c, s * s, c * s);
    let outside = |x: Level| x != j && x != k;
    match (l, m) {
        _ if l == j && m == j => vec![(cc, j, j), (ss, k, k), (cs, j, k), (cs, k, j)],
        _ if l == k && m == k => vec![(cc, k, k), (ss, j, j), (-cs, j, k), (-cs, k, j)],
        _ if l == j && m == k => vec![(cc, j, k), (-ss, k, j), (cs, k, k), (-cs, j, j)],
        _ if l == k && m == j => vec![(cc, k, j), (-ss, j, k), (cs, k, k), (-cs, j, j)],
        _ if l == j && outside(m) => vec![(c, j, m), (s, k, m)],
        _ if l == k && outside(m) => vec![(c, k, m), (-s, j, m)],
        _ if m == j && outside(l) => vec![(c, l, j), (s, l, k)],
        _ if m == k && outside(l) => vec![(c, l, k), (-s, l, j)],
        _ => vec![(1.0, l, m)],
    }
}

pub fn transform_generator_closed_form(spec: &RotationSpec, l: Level, m: Level, b: &Arc<BasisSet>) -> Result<OperatorMatrix> {
    let mats: Vec<(f64, OperatorMatrix)> = closed_form_terms(spec, l, m)
        .into_iter()
        .map(|(coef, r, c)| (coef, collective_a(b, r, c)))
        .collect();
    let terms: Vec<(f64, &OperatorMatrix)> = mats.iter().map(|(c, m)| (*c, m)).collect();
    OperatorMatrix::linear_combination(&terms)
}

/// U X Uᵀ through the matrix exponential.
pub fn transform_exact(spec: &RotationSpec, x: &OperatorMatrix, b: &Arc<BasisSet>) -> Result<OperatorMatrix> {
    if x.dim() != b.dim() {
        return Err(Error::BasisMismatch);
    }
    let u = rotation_matrix(spec, b)?.to_dense();
    let y = &u * x.to_dense() * u.transpose();
    Ok(OperatorMatrix::from_dense(b.clone(), &y))
}

/// Angle that removes one field coupling of the configuration.
///
/// With (x, y) the configuration's coupling pair, the first branch is
/// α = arctan(y/x) and the second α = −arctan(x/y); a vanishing denominator
/// gives the ±π/2 limit.
pub fn decoupling_angle(m: &ModelConfig, branch: Branch) -> Result<f64> {
    let (xc, yc) = m.configuration.angle_pair();
    let (x, y) = (m.coupling(xc), m.coupling(yc));
    if x == 0.0 && y == 0.0 {
        return Err(Error::UndefinedAngle(format!("{xc} and {yc}")));
    }
    Ok(match branch {
        Branch::First => y.atan2(x),
        Branch::Second => -x.atan2(y),
    })
}

/// Rotation that decouples a level for the given model and branch.
pub fn decoupling_rotation(m: &ModelConfig, branch: Branch) -> Result<RotationSpec> {
    let (j, k) = m.configuration.rotation_pair();
    RotationSpec::new(j, k, decoupling_angle(m, branch)?)
}
