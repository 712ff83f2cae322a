//! Ground-state fidelity, its second-order expansion in the rotated frame,
//! phase-diagram scans over the coupling plane and the variational
//! separatrices.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::enumerate_basis_with_limit;
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, build_rotated_hamiltonian, Branch, Coupling, ModelConfig};
use crate::operators::OperatorMatrix;
use crate::solver::{converge_cutoff_with, ground_state, populations, CutoffPolicy, Populations, QuantumState};

/// Minima with 1 − F below this are treated as numerical noise.
pub const FIDELITY_NOISE_FLOOR: f64 = 1e-9;

/// |⟨s1|s2⟩|².
pub fn fidelity(s1: &QuantumState, s2: &QuantumState) -> Result<f64> {
    Ok(s1.inner(s2)?.norm_sqr())
}

/// dα/dμ for the decoupling angle, identical for both branches.
///
/// With (x, y) the configuration's angle pair, dα/dx = −y/(x²+y²) and
/// dα/dy = x/(x²+y²).
pub fn dalpha_dmu(m: &ModelConfig, which: Coupling) -> Result<f64> {
    let (xc, yc) = m.configuration.angle_pair();
    let (x, y) = (m.coupling(xc), m.coupling(yc));
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Err(Error::UndefinedAngle(format!("{xc} and {yc}")));
    }
    if which == xc {
        Ok(-y / r2)
    } else if which == yc {
        Ok(x / r2)
    } else {
        Err(Error::InvalidParameter(format!(
            "{which} is forbidden in the {} configuration",
            m.configuration
        )))
    }
}

/// Second-order rotated fidelity
/// |⟨ψ'|ψ⟩|² + δμ² (dα/dμ)² [⟨ψ'|ψ⟩⟨ψ'|K²|ψ⟩ + ⟨ψ'|K|ψ⟩²]
/// where ψ = ψ(μ), ψ' = ψ(μ + δμ) are unrotated ground states and K the
/// rotation generator. All brackets must be real.
pub fn fidelity_rot_second_order(
    s_mu: &QuantumState,
    s_mu_dmu: &QuantumState,
    k: &OperatorMatrix,
    dalpha_dmu: f64,
    dmu: f64,
) -> Result<f64> {
    let (x, y, z) = real_brackets(s_mu, s_mu_dmu, k)?;
    let c = dmu * dalpha_dmu;
    Ok(x * x + c * c * (x * z + y * y))
}

/// Expansion of the rotated fidelity to second order that keeps the
/// first-order cross term 2 δμ α' ⟨ψ'|ψ⟩⟨ψ'|K|ψ⟩ arising from the
/// antisymmetry of K. Its remainder against the exact value is third order.
pub fn fidelity_rot_expansion_with_cross_term(
    s_mu: &QuantumState,
    s_mu_dmu: &QuantumState,
    k: &OperatorMatrix,
    dalpha_dmu: f64,
    dmu: f64,
) -> Result<f64> {
    let (x, y, z) = real_brackets(s_mu, s_mu_dmu, k)?;
    let c = dmu * dalpha_dmu;
    Ok(x * x + 2.0 * c * x * y + c * c * (x * z + y * y))
}

/// (⟨ψ'|ψ⟩, ⟨ψ'|K|ψ⟩, ⟨ψ'|K²|ψ⟩), checked to be real.
fn real_brackets(s_mu: &QuantumState, s_mu_dmu: &QuantumState, k: &OperatorMatrix) -> Result<(f64, f64, f64)> {
    let x = s_mu_dmu.inner(s_mu)?;
    let y = s_mu_dmu.matrix_element(k, s_mu)?;
    let k2 = k.mul(k)?;
    let z = s_mu_dmu.matrix_element(&k2, s_mu)?;
    for (name, v) in [("overlap", x), ("K", y), ("K²", z)] {
        if v.im.abs() > 1e-10 * (1.0 + v.re.abs()) {
            return Err(Error::Numerical(format!("{name} bracket is not real: {v}")));
        }
    }
    Ok((x.re, y.re, z.re))
}

/// |⟨U₂ s₂|U₁ s₁⟩|², the fidelity between two states each carried into its
/// own rotated frame.
pub fn rotated_fidelity(
    s1: &QuantumState,
    u1: &OperatorMatrix,
    s2: &QuantumState,
    u2: &OperatorMatrix,
) -> Result<f64> {
    fidelity(&s2.transformed(u2)?, &s1.transformed(u1)?)
}

/// Which Hamiltonian a scan diagonalizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Unrotated,
    Rotated(Branch),
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frame::Unrotated => write!(f, "H"),
            Frame::Rotated(Branch::First) => write!(f, "H'1"),
            Frame::Rotated(Branch::Second) => write!(f, "H'2"),
        }
    }
}

/// Path through the coupling plane (μ_a, μ_b) of the configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ScanPath {
    /// (s cos θ, s sin θ).
    Ray { theta: f64 },
    /// One plane coupling held at `value`, the other equal to s.
    Line { fixed: Coupling, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanOptions {
    pub s_max: f64,
    pub dmu: f64,
    pub frame: Frame,
    /// Replace the grid locus by the vertex of the parabola through the
    /// three bracketing fidelity values.
    pub refine: bool,
    pub keep_states: bool,
    pub cutoff: CutoffPolicy,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            s_max: 2.0,
            dmu: 0.01,
            frame: Frame::Unrotated,
            refine: false,
            keep_states: false,
            cutoff: CutoffPolicy::default(),
        }
    }
}

/// A strict local minimum of the fidelity series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityMinimum {
    /// Path parameter of the locus (midpoint of the bracketing pair).
    pub s: f64,
    pub mu_a: f64,
    pub mu_b: f64,
    pub fidelity: f64,
    pub susceptibility: f64,
}

#[derive(Clone, Debug)]
pub struct RaySweep {
    pub path: ScanPath,
    pub frame: Frame,
    pub dmu: f64,
    /// Photon cutoff used along the whole path.
    pub nmax: usize,
    pub s_values: Vec<f64>,
    /// (μ_a, μ_b) at each s.
    pub points: Vec<(f64, f64)>,
    pub energies: Vec<f64>,
    pub populations: Vec<Populations>,
    /// Ground states; empty unless requested.
    pub states: Vec<QuantumState>,
    /// F between points i and i + 1.
    pub fidelity: Vec<f64>,
    /// χ = 2(1 − F)/δμ².
    pub susceptibility: Vec<f64>,
    pub minima: Vec<FidelityMinimum>,
}

impl RaySweep {
    /// Minimum with the lowest fidelity.
    pub fn deepest(&self) -> Option<&FidelityMinimum> {
        self.minima.iter().min_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
    }

    pub fn theta(&self) -> Option<f64> {
        match self.path {
            ScanPath::Ray { theta } => Some(theta),
            ScanPath::Line { .. } => None,
        }
    }
}

fn path_point(m: &ModelConfig, path: ScanPath, s: f64) -> Result<(f64, f64)> {
    match path {
        ScanPath::Ray { theta } => Ok((s * theta.cos(), s * theta.sin())),
        ScanPath::Line { fixed, value } => {
            let (a, b) = m.configuration.plane();
            if fixed == a {
                Ok((value, s))
            } else if fixed == b {
                Ok((s, value))
            } else {
                Err(Error::InvalidParameter(format!(
                    "{fixed} is not a coupling of the {} plane",
                    m.configuration
                )))
            }
        }
    }
}

/// Grid i·δμ for i = 1 ..= ⌊s_max/δμ⌋. The origin is excluded because the
/// rotated frames are undefined there.
fn radial_grid(s_max: f64, dmu: f64) -> Vec<f64> {
    let n = (s_max / dmu + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * dmu).collect()
}

fn check_scan(template: &ModelConfig, path: ScanPath, opts: &ScanOptions) -> Result<()> {
    if !(opts.dmu > 0.0 && opts.dmu.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {}", opts.dmu)));
    }
    if !(opts.s_max.is_finite() && opts.s_max >= 3.0 * opts.dmu * (1.0 - 1e-9)) {
        return Err(Error::InvalidParameter(format!(
            "scan range {} must cover at least three steps of {}",
            opts.s_max, opts.dmu
        )));
    }
    if let ScanPath::Ray { theta } = path {
        if !(-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
            return Err(Error::InvalidParameter(format!("ray angle {theta} leaves the μ ≥ 0 quadrant")));
        }
    }
    template.validate()
}

/// Ground states along a path, their fidelities and the strict local minima.
///
/// One photon cutoff, converged at the far end of the path, is used for all
/// points; the cutoff needed grows with the coupling strength.
pub fn scan_path(template: &ModelConfig, path: ScanPath, opts: &ScanOptions) -> Result<RaySweep> {
    check_scan(template, path, opts)?;
    let s_values = radial_grid(opts.s_max, opts.dmu);
    let points = s_values.iter().map(|&s| path_point(template, path, s)).collect::<Result<Vec<_>>>()?;

    let far = points.iter().copied().fold((0.0f64, 0.0f64), |acc, p| (acc.0.max(p.0), acc.1.max(p.1)));
    let nmax = converge_cutoff_with(&template.at_plane_point(far.0, far.1), &opts.cutoff)?;
    let basis = Arc::new(enumerate_basis_with_limit(template.na, nmax, usize::MAX)?);
    let base = template.with_nmax(nmax);

    let mut energies = Vec::with_capacity(points.len());
    let mut pops = Vec::with_capacity(points.len());
    let mut states: Vec<QuantumState> = Vec::with_capacity(points.len());
    let mut fid = Vec::with_capacity(points.len().saturating_sub(1));
    let mut prev: Option<QuantumState> = None;
    for &(a, b) in &points {
        let m = base.at_plane_point(a, b);
        let h = match opts.frame {
            Frame::Unrotated => build_hamiltonian(&m, &basis)?,
            Frame::Rotated(branch) => build_rotated_hamiltonian(&m, &basis, branch)?,
        };
        let gs = ground_state(&h)?;
        energies.push(gs.energy);
        pops.push(populations(&gs.state));
        if let Some(p) = &prev {
            fid.push(fidelity(p, &gs.state)?);
        }
        if opts.keep_states {
            states.push(gs.state.clone());
        }
        prev = Some(gs.state);
    }

    let chi: Vec<f64> = fid.iter().map(|f| 2.0 * (1.0 - f) / (opts.dmu * opts.dmu)).collect();
    let mut minima = Vec::new();
    for i in 1..fid.len().saturating_sub(1) {
        let (l, c, r) = (fid[i - 1], fid[i], fid[i + 1]);
        if !(c < l && c < r) || 1.0 - c < FIDELITY_NOISE_FLOOR {
            continue;
        }
        let mid = 0.5 * (s_values[i] + s_values[i + 1]);
        let (s, f) = if opts.refine {
            let denom = l - 2.0 * c + r;
            let shift = 0.5 * (l - r) / denom;
            (mid + shift * opts.dmu, c - 0.25 * (l - r) * shift)
        } else {
            (mid, c)
        };
        let (mu_a, mu_b) = path_point(template, path, s)?;
        minima.push(FidelityMinimum { s, mu_a, mu_b, fidelity: f, susceptibility: 2.0 * (1.0 - f) / (opts.dmu * opts.dmu) });
    }

    Ok(RaySweep {
        path,
        frame: opts.frame,
        dmu: opts.dmu,
        nmax,
        s_values,
        points,
        energies,
        populations: pops,
        states,
        fidelity: fid,
        susceptibility: chi,
        minima,
    })
}

pub fn scan_ray(template: &ModelConfig, theta: f64, opts: &ScanOptions) -> Result<RaySweep> {
    scan_path(template, ScanPath::Ray { theta }, opts)
}

/// `n` equally spaced angles covering [0, π/2].
pub fn pencil(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64).collect(),
    }
}

pub const DEFAULT_PENCIL: usize = 37;

#[derive(Clone, Debug)]
pub struct PhaseDiagram {
    pub model: ModelConfig,
    pub frame: Frame,
    /// Minima of all rays, in ray order then along each ray.
    pub minima: Vec<(f64, FidelityMinimum)>,
    pub rays: Vec<RaySweep>,
}

/// Scans every ray of the pencil in parallel; the result does not depend on
/// the evaluation order or the number of worker threads.
pub fn phase_diagram(template: &ModelConfig, thetas: &[f64], opts: &ScanOptions) -> Result<PhaseDiagram> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("the ray pencil is empty".into()));
    }
    let rays = thetas
        .par_iter()
        .map(|&t| scan_ray(template, t, opts))
        .collect::<Result<Vec<_>>>()?;
    let minima = rays
        .iter()
        .flat_map(|r| {
            let theta = r.theta().unwrap_or(f64::NAN);
            r.minima.iter().map(move |m| (theta, *m))
        })
        .collect();
    Ok(PhaseDiagram { model: *template, frame: opts.frame, minima, rays })
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Positive root of rhs = 4x² + [2|μ| − √g]² Θ(2|μ| − √g).
fn heaviside_boundary(rhs: f64, g: f64, mu: f64) -> Option<f64> {
    let t = 2.0 * mu.abs() - g.sqrt();
    let rem = rhs - if t > 0.0 { t * t } else { 0.0 };
    (rem >= 0.0).then(|| 0.5 * rem.sqrt())
}

/// Ξ boundary: μ₁₂ solving Ωω₂₁ = 4μ₁₂² + [2|μ₂₃| − √(Ωω₃₁)]² Θ(·), or
/// `None` when no non-negative μ₁₂ does.
pub fn separatrix_xi(omega: f64, omega21: f64, omega31: f64, mu23: f64) -> Result<Option<f64>> {
    check_positive("Ω", omega)?;
    check_positive("ω21", omega21)?;
    check_positive("ω31", omega31)?;
    Ok(heaviside_boundary(omega * omega21, omega * omega31, mu23))
}

/// Radius along angle θ of the V ellipse 4μ₁₂²/(Ωω₂₁) + 4μ₁₃²/(Ωω₃₁) = 1.
pub fn separatrix_v(omega: f64, omega21: f64, omega31: f64, theta: f64) -> Result<f64> {
    check_positive("Ω", omega)?;
    if omega21 <= 0.0 || omega31 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degenerate ellipse: ω21 = {omega21}, ω31 = {omega31}"
        )));
    }
    let (c, s) = (theta.cos(), theta.sin());
    Ok(1.0 / (4.0 * c * c / (omega * omega21) + 4.0 * s * s / (omega * omega31)).sqrt())
}

/// Λ boundary: μ₁₃ solving Ωω₃₁ = 4μ₁₃² + [2|μ₂₃| − √(Ωω₂₁)]² Θ(·).
pub fn separatrix_lambda(omega: f64, omega21: f64, omega31: f64, mu23: f64) -> Result<Option<f64>> {
    check_positive("Ω", omega)?;
    check_positive("ω31", omega31)?;
    if !(omega21 >= 0.0 && omega21.is_finite()) {
        return Err(Error::InvalidParameter(format!("ω21 must be non-negative, got {omega21}")));
    }
    Ok(heaviside_boundary(omega * omega31, omega * omega21, mu23))
}
