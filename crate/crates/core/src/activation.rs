use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One active candidate per waveguide, stored as 0-based candidate indices.
///
/// This is the compact form of the one-hot activation matrix: row `n` of the
/// matrix has its single 1 in column `selected[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Activation {
    selected: Vec<usize>,
}

impl Activation {
    pub fn new(selected: Vec<usize>) -> Self {
        Activation { selected }
    }

    /// Builds from 1-based indices as they appear in files and on the CLI.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        indices
            .iter()
            .map(|&m| {
                m.checked_sub(1)
                    .ok_or_else(|| Error::Usage("candidate indices are 1-based".into()))
            })
            .collect::<Result<Vec<_>>>()
            .map(Activation::new)
    }

    /// Parses a binary `N×M` matrix, rejecting rows that are not one-hot.
    pub fn from_one_hot(rows: &[Vec<u8>]) -> Result<Self> {
        let mut selected = Vec::with_capacity(rows.len());
        for (n, row) in rows.iter().enumerate() {
            let ones: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0)
                .map(|(m, _)| m)
                .collect();
            if ones.len() != 1 || row.iter().any(|a| *a > 1) {
                return Err(Error::Usage(format!(
                    "activation row {} is not one-hot: {row:?}",
                    n + 1
                )));
            }
            selected.push(ones[0]);
        }
        Ok(Activation { selected })
    }

    /// `m_n = ⌈M/2⌉` (1-based) on every waveguide.
    pub fn centered(n_waveguides: usize, n_candidates: usize) -> Self {
        Activation {
            selected: vec![n_candidates.div_ceil(2).saturating_sub(1); n_waveguides],
        }
    }

    /// Independent uniform choice per waveguide from a seeded stream.
    pub fn random(n_waveguides: usize, n_candidates: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n_waveguides, n_candidates, &mut rng)
    }

    pub fn random_with<R: Rng>(n_waveguides: usize, n_candidates: usize, rng: &mut R) -> Self {
        Activation {
            selected: (0..n_waveguides).map(|_| rng.random_range(0..n_candidates)).collect(),
        }
    }

    pub fn to_one_hot(&self, n_candidates: usize) -> Vec<Vec<u8>> {
        self.selected
            .iter()
            .map(|&m| (0..n_candidates).map(|k| u8::from(k == m)).collect())
            .collect()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.selected.iter().map(|m| m + 1).collect()
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn get(&self, n: usize) -> usize {
        self.selected[n]
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Copy with waveguide `n` switched to candidate `m`.
    pub fn with(&self, n: usize, m: usize) -> Self {
        let mut next = self.clone();
        next.selected[n] = m;
        next
    }

    pub(crate) fn set(&mut self, n: usize, m: usize) {
        self.selected[n] = m;
    }

    pub fn check(&self, n_waveguides: usize, n_candidates: usize) -> Result<()> {
        if self.selected.len() != n_waveguides {
            return Err(Error::Usage(format!(
                "activation has {} rows, expected {n_waveguides}",
                self.selected.len()
            )));
        }
        if let Some(n) = self.selected.iter().position(|&m| m >= n_candidates) {
            return Err(Error::Usage(format!(
                "waveguide {} selects candidate {} but only {n_candidates} exist",
                n + 1,
                self.selected[n] + 1
            )));
        }
        Ok(())
    }
}

/// Lexicographic odometer over all `M^N` activations.
pub(crate) fn enumeration_size(n_waveguides: usize, n_candidates: usize) -> u128 {
    (n_candidates as u128)
        .checked_pow(n_waveguides as u32)
        .unwrap_or(u128::MAX)
}

pub(crate) fn check_budget(n_waveguides: usize, n_candidates: usize, budget: u64) -> Result<()> {
    let required = enumeration_size(n_waveguides, n_candidates);
    if required > budget as u128 {
        return Err(Error::Budget { required, budget });
    }
    Ok(())
}
