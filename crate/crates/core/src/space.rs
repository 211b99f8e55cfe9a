//! Finite measurable spaces.
//!
//! A [`FinSpace`] is an ordered list of distinct state ids; its sigma-algebra
//! is always the full powerset, so every map between spaces is measurable.
//! Subsets are handled as sets of state *indices* into the fixed order, which
//! keeps all downstream iteration deterministic.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::Error;

/// A state name. Nonempty; unique within its space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(String);

impl StateId {
    pub fn new(id: impl Into<String>) -> Self {
        StateId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_string())
    }
}

impl From<String> for StateId {
    fn from(s: String) -> Self {
        StateId(s)
    }
}

/// A subset of a space, as indices into its state order.
pub type StateSet = BTreeSet<usize>;

/// A finite measurable space: a fixed, duplicate-free order of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinSpace {
    states: Vec<StateId>,
}

impl FinSpace {
    pub fn new(states: Vec<StateId>) -> Result<Self, Error> {
        if states.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if s.as_str().is_empty() {
                return Err(Error::DuplicateState(StateId::new("")));
            }
            if !seen.insert(s.clone()) {
                return Err(Error::DuplicateState(s.clone()));
            }
        }
        Ok(FinSpace { states })
    }

    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self, Error> {
        FinSpace::new(ids.iter().map(|s| StateId::new(s.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn id(&self, idx: usize) -> &StateId {
        &self.states[idx]
    }

    pub fn index_of(&self, id: &StateId) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    pub fn contains(&self, id: &StateId) -> bool {
        self.index_of(id).is_some()
    }

    /// All state indices as a set.
    pub fn full_set(&self) -> StateSet {
        (0..self.len()).collect()
    }

    /// Resolves a list of ids into an index set.
    pub fn subset(&self, ids: &[StateId]) -> Result<StateSet, Error> {
        ids.iter()
            .map(|id| self.index_of(id).ok_or_else(|| Error::UnknownState(id.clone())))
            .collect()
    }

    /// Renders an index set back to sorted state ids (for reports).
    pub fn render_set(&self, set: &StateSet) -> Vec<StateId> {
        set.iter().map(|&i| self.states[i].clone()).collect()
    }

    /// The complement of `set` within this space.
    pub fn complement(&self, set: &StateSet) -> StateSet {
        (0..self.len()).filter(|i| !set.contains(i)).collect()
    }
}
