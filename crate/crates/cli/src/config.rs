//! Run configuration: a JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use dicke3_core::analysis::Frame;
use dicke3_core::basis::DEFAULT_MAX_DIM;
use dicke3_core::model::{Branch, Configuration, ModelConfig};
use dicke3_core::solver::CutoffPolicy;
use serde::{Deserialize, Serialize};

/// Every parameter any subcommand reads. Unset fields take command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Atomic configuration: xi, lambda or v
    #[arg(long = "cfg")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configuration: Option<Configuration>,
    /// Level energies ω1,ω2,ω3
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// Field frequency Ω
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu12: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu13: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu23: Option<f64>,
    /// Number of atoms
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub na: Option<usize>,
    /// Photon cutoff; converged automatically when absent
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    /// Energy tolerance of the cutoff convergence
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etol: Option<f64>,
    /// Photon-tail tolerance of the cutoff convergence
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ptol: Option<f64>,
    /// Largest cutoff tried before giving up
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax_cap: Option<usize>,
    /// Hamiltonian frame: unrotated, branch1 or branch2
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
    /// Upper end of coupling grids and scans
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_max: Option<f64>,
    /// Points per axis of population grids
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Radial step of fidelity scans
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dmu: Option<f64>,
    /// Number of rays in the pencil over [0, π/2]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rays: Option<usize>,
    /// Refine minima with a parabola through the bracketing points
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// Samples of analytic curves, or random angles per check
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Initial basis state ν,n1,n2,n3 for evolution
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<usize>>,
    /// Final time of evolution
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Time step of evolution output
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Evolve the two-frame Rabi demonstration instead of a basis state
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi: Option<bool>,
    /// Photon number of the Rabi initial state
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu0: Option<usize>,
    /// Seed for randomized checks
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output file, or directory for commands writing several files
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads for scans
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $flags:ident, $($field:ident),*) => {
        $( if $flags.$field.is_some() { $base.$field = $flags.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::Error::new(InvalidInput(format!("{}: {e}", path.display()))))
    }

    /// Fields set in `flags` replace those of `self`.
    pub fn overlaid(mut self, flags: &RunConfig) -> Self {
        overlay!(
            self, flags, configuration, levels, omega, mu12, mu13, mu23, na, nmax, etol, ptol, nmax_cap, frame,
            mu_max, grid_points, dmu, rays, refine, samples, initial, t_max, dt, rabi, nu0, seed, out, threads
        );
        self
    }

    pub fn model(&self) -> anyhow::Result<ModelConfig> {
        let cfg = self
            .configuration
            .ok_or_else(|| invalid("the atomic configuration is required (--cfg xi|lambda|v)"))?;
        let levels = match &self.levels {
            Some(l) if l.len() == 3 => [l[0], l[1], l[2]],
            Some(l) => return Err(invalid(format!("expected three level energies, got {}", l.len()))),
            None => return Err(invalid("level energies are required (--levels w1,w2,w3)")),
        };
        let mut m = ModelConfig::new(cfg, levels, self.na.unwrap_or(1), self.nmax.unwrap_or(0));
        m.omega = self.omega.unwrap_or(1.0);
        m.mu12 = self.mu12.unwrap_or(0.0);
        m.mu13 = self.mu13.unwrap_or(0.0);
        m.mu23 = self.mu23.unwrap_or(0.0);
        m.validate()?;
        Ok(m)
    }

    pub fn cutoff_policy(&self) -> CutoffPolicy {
        let d = CutoffPolicy::default();
        CutoffPolicy {
            start: d.start,
            cap: self.nmax_cap.unwrap_or(d.cap),
            etol: self.etol.unwrap_or(d.etol),
            ptol: self.ptol.unwrap_or(d.ptol),
        }
    }

    pub fn frame(&self) -> anyhow::Result<Frame> {
        match self.frame.as_deref().unwrap_or("unrotated") {
            "unrotated" | "h" | "H" => Ok(Frame::Unrotated),
            "branch1" | "1" => Ok(Frame::Rotated(Branch::First)),
            "branch2" | "2" => Ok(Frame::Rotated(Branch::Second)),
            other => Err(invalid(format!("unknown frame '{other}', expected unrotated, branch1 or branch2"))),
        }
    }
}

/// Marks an error that should exit with the invalid-configuration code.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InvalidInput(msg.into()))
}

/// Dense-matrix dimension limit, overridable through `DICKE3_MAX_DIM`.
pub fn max_dim() -> anyhow::Result<usize> {
    match std::env::var("DICKE3_MAX_DIM") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("DICKE3_MAX_DIM must be a positive integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_MAX_DIM),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file_values() {
        let file: RunConfig = serde_json::from_str(r#"{"configuration": "xi", "levels": [0, 1, 2], "mu12": 0.3, "na": 2}"#).unwrap();
        let flags = RunConfig { mu12: Some(0.7), ..RunConfig::default() };
        let merged = file.overlaid(&flags);
        assert_eq!(merged.mu12, Some(0.7));
        assert_eq!(merged.na, Some(2));
        let m = merged.model().unwrap();
        assert_eq!(m.configuration, Configuration::Xi);
        assert_eq!(m.mu12, 0.7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"mu21": 1.0}"#).is_err());
    }

    #[test]
    fn model_validation_errors() {
        let rc = RunConfig {
            configuration: Some(Configuration::Lambda),
            levels: Some(vec![0.0, 0.0, 1.0]),
            mu12: Some(0.5),
            ..RunConfig::default()
        };
        assert!(rc.model().is_err());
        assert!(RunConfig::default().model().is_err());
        assert!(RunConfig { frame: Some("sideways".into()), ..RunConfig::default() }.frame().is_err());
    }
}
