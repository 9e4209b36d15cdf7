//! Finite families of finite sets over a ground set `0..ground_size`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A family of distinct sets. Each set is sorted ascending and the sets are
/// kept in lexicographic order, so two families are equal iff they hold the
/// same sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsetFamily {
    ground_size: usize,
    sets: Vec<Vec<u32>>,
}

impl SubsetFamily {
    /// Fails on out-of-range elements and on repeated sets. Elements within a
    /// set may be given in any order; repeats inside one set are merged.
    pub fn new(ground_size: usize, sets: Vec<Vec<u32>>) -> Result<Self> {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Self::from_sorted_sets(ground_size, sets)
    }

    pub(crate) fn from_sorted_sets(ground_size: usize, mut sets: Vec<Vec<u32>>) -> Result<Self> {
        for (i, s) in sets.iter().enumerate() {
            if let Some(&x) = s.last() {
                if x as usize >= ground_size {
                    return Err(Error::ElementOutOfRange {
                        set: i,
                        element: x,
                        ground_size,
                    });
                }
            }
        }
        sets.sort_unstable();
        if let Some(w) = sets.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateSet(w[0].clone()));
        }
        Ok(SubsetFamily { ground_size, sets })
    }

    /// Like [`SubsetFamily::new`] but collapses repeated sets, returning how
    /// many copies were dropped.
    pub fn new_dedup(ground_size: usize, sets: Vec<Vec<u32>>) -> Result<(Self, usize)> {
        let mut sets: Vec<Vec<u32>> = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let before = sets.len();
        sets.sort_unstable();
        sets.dedup();
        let dropped = before - sets.len();
        Ok((Self::from_sorted_sets(ground_size, sets)?, dropped))
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Sum of set cardinalities.
    pub fn total_size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, set: &[u32]) -> bool {
        self.sets.binary_search_by(|s| s.as_slice().cmp(set)).is_ok()
    }

    /// How many sets contain each element.
    pub fn element_frequencies(&self) -> Vec<usize> {
        let mut freq = vec![0usize; self.ground_size];
        for s in &self.sets {
            for &x in s {
                freq[x as usize] += 1;
            }
        }
        freq
    }

    /// Parses one set per line (space-separated element ids). Blank lines and
    /// `#` comments are skipped. The ground size is `max element + 1` unless a
    /// larger `ground_size` is given.
    pub fn parse(text: &str, ground_size: Option<usize>) -> Result<Self> {
        let mut sets = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let set = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| Error::parse(idx + 1, format!("bad element `{t}`")))
                })
                .collect::<Result<Vec<u32>>>()?;
            sets.push((idx + 1, set));
        }
        let max_elem = sets
            .iter()
            .flat_map(|(_, s)| s.iter())
            .map(|&x| x as usize + 1)
            .max()
            .unwrap_or(0);
        let ground = ground_size.unwrap_or(0).max(max_elem);
        let mut normalized: Vec<(Vec<u32>, usize)> = sets
            .into_iter()
            .map(|(l, mut s)| {
                s.sort_unstable();
                s.dedup();
                (s, l)
            })
            .collect();
        normalized.sort();
        if let Some(w) = normalized.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(
                w[1].1,
                format!("set {:?} repeats line {}", w[1].0, w[0].1),
            ));
        }
        Self::from_sorted_sets(ground, normalized.into_iter().map(|(s, _)| s).collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sets {
            let mut first = true;
            for x in s {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, None)
    }
}
