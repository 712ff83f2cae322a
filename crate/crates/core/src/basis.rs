//! Product basis |ν; n₁, n₂, n₃⟩ of a single field mode and the symmetric
//! (Schwinger boson) representation of `Na` three-level atoms.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis accepted when no explicit limit is given. A dense real
/// matrix of this order takes 512 MiB.
pub const DEFAULT_MAX_DIM: usize = 8192;

/// One of the three atomic levels, ordered by energy (ω₁ ≤ ω₂ ≤ ω₃).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::One, Level::Two, Level::Three];

    /// Zero-based slot in occupation arrays.
    pub fn index(self) -> usize {
        match self {
            Level::One => 0,
            Level::Two => 1,
            Level::Three => 2,
        }
    }

    /// One-based label as used in operator subscripts.
    pub fn label(self) -> usize {
        self.index() + 1
    }

    pub fn from_label(label: usize) -> Result<Level> {
        match label {
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            3 => Ok(Level::Three),
            _ => Err(Error::InvalidParameter(format!("atomic level {label} not in 1..=3"))),
        }
    }

    /// The level that is neither `a` nor `b`. Requires `a != b`.
    pub fn third(a: Level, b: Level) -> Level {
        debug_assert_ne!(a, b);
        Level::ALL.into_iter().find(|&l| l != a && l != b).unwrap()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Photon number plus the occupations of the three atomic levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub nu: usize,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl BasisState {
    pub fn new(nu: usize, n1: usize, n2: usize, n3: usize) -> Self {
        BasisState { nu, n1, n2, n3 }
    }

    pub fn occupation(&self, level: Level) -> usize {
        match level {
            Level::One => self.n1,
            Level::Two => self.n2,
            Level::Three => self.n3,
        }
    }

    pub fn atoms(&self) -> usize {
        self.n1 + self.n2 + self.n3
    }

    /// Moves one atom from `from` to `to`; `None` if `from` is empty.
    pub fn transfer(&self, to: Level, from: Level) -> Option<BasisState> {
        if self.occupation(from) == 0 {
            return None;
        }
        let mut occ = [self.n1, self.n2, self.n3];
        occ[from.index()] -= 1;
        occ[to.index()] += 1;
        Some(BasisState::new(self.nu, occ[0], occ[1], occ[2]))
    }

    pub fn with_photons(&self, nu: usize) -> BasisState {
        BasisState { nu, ..*self }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{};{},{},{}>", self.nu, self.n1, self.n2, self.n3)
    }
}

/// Deterministically ordered set of basis states.
///
/// States are grouped in contiguous photon blocks (ν major); inside a block
/// `n1` and then `n2` run downwards, so the first state of every block has all
/// atoms in level 1. A set may be restricted to a fixed occupation of one
/// level, which is how the effective two-level problems are represented.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    na: usize,
    nmax: usize,
    fixed: Option<(Level, usize)>,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

/// Number of ways to place `na` bosons in three modes.
pub fn atomic_dimension(na: usize) -> usize {
    (na + 1) * (na + 2) / 2
}

/// Full basis for `na` atoms and photon numbers `0..=nmax`, subject to
/// [`DEFAULT_MAX_DIM`].
pub fn enumerate_basis(na: usize, nmax: usize) -> Result<BasisSet> {
    enumerate_basis_with_limit(na, nmax, DEFAULT_MAX_DIM)
}

pub fn enumerate_basis_with_limit(na: usize, nmax: usize, max_dim: usize) -> Result<BasisSet> {
    if na == 0 {
        return Err(Error::InvalidParameter("atom count must be at least 1".into()));
    }
    let dim = (nmax + 1) * atomic_dimension(na);
    if dim > max_dim {
        return Err(Error::BasisTooLarge { dim, limit: max_dim });
    }
    let mut states = Vec::with_capacity(dim);
    for nu in 0..=nmax {
        for n1 in (0..=na).rev() {
            for n2 in (0..=na - n1).rev() {
                states.push(BasisState::new(nu, n1, n2, na - n1 - n2));
            }
        }
    }
    Ok(BasisSet::from_states(na, nmax, None, states))
}

/// Basis of the sector where `level` holds exactly `occupation` atoms.
pub fn enumerate_sector(na: usize, nmax: usize, level: Level, occupation: usize) -> Result<BasisSet> {
    if occupation > na {
        return Err(Error::InvalidParameter(format!(
            "level {level} occupation {occupation} exceeds the atom count {na}"
        )));
    }
    let full = enumerate_basis_with_limit(na, nmax, usize::MAX)?;
    let states: Vec<_> = full
        .states
        .into_iter()
        .filter(|s| s.occupation(level) == occupation)
        .collect();
    if states.len() > DEFAULT_MAX_DIM {
        return Err(Error::BasisTooLarge { dim: states.len(), limit: DEFAULT_MAX_DIM });
    }
    Ok(BasisSet::from_states(na, nmax, Some((level, occupation)), states))
}

impl BasisSet {
    fn from_states(na: usize, nmax: usize, fixed: Option<(Level, usize)>, states: Vec<BasisState>) -> Self {
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        BasisSet { na, nmax, fixed, states, index }
    }

    pub fn na(&self) -> usize {
        self.na
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// Level and occupation held fixed, for sector bases.
    pub fn fixed(&self) -> Option<(Level, usize)> {
        self.fixed
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> BasisState {
        self.states[i]
    }

    /// Atomic states per photon block.
    pub fn block_size(&self) -> usize {
        self.dim() / (self.nmax + 1)
    }

    /// Index range of the states carrying `nu` photons.
    pub fn photon_block(&self, nu: usize) -> Range<usize> {
        let size = self.block_size();
        nu * size..(nu + 1) * size
    }

    pub fn index_of(&self, s: &BasisState) -> Result<usize> {
        self.find(s).ok_or_else(|| Error::StateOutOfRange(s.to_string()))
    }

    pub fn find(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Same truncation and sector, regardless of identity.
    pub fn same_as(&self, other: &BasisSet) -> bool {
        self.na == other.na && self.nmax == other.nmax && self.fixed == other.fixed
    }
}
