//! (Sub)probability kernels and labelled Markov processes over finite spaces.

use std::fmt;

use num_traits::One;

use crate::error::Error;
use crate::rational::{format_rat, in_unit_interval, Rat};
use crate::space::{FinSpace, StateId, StateSet};

/// Whether each row must sum to exactly 1 or at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Probability,
    Subprobability,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Probability => f.write_str("probability"),
            KernelKind::Subprobability => f.write_str("subprobability"),
        }
    }
}

/// A kernel from an index space `X` to a target space `S`: one measure row
/// per index state, each row a vector of rationals over the target states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    source: FinSpace,
    target: FinSpace,
    kind: KernelKind,
    rows: Vec<Vec<Rat>>,
}

impl Kernel {
    /// Shape-checks only; mass constraints are the business of
    /// [`validate_kernel`].
    pub fn new(
        source: FinSpace,
        target: FinSpace,
        kind: KernelKind,
        rows: Vec<Vec<Rat>>,
    ) -> Result<Self, Error> {
        if rows.len() != source.len() {
            return Err(Error::KernelShape(format!(
                "{} rows for {} source states",
                rows.len(),
                source.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != target.len() {
                return Err(Error::KernelShape(format!(
                    "row `{}` has {} entries for {} target states",
                    source.id(i),
                    row.len(),
                    target.len()
                )));
            }
        }
        Ok(Kernel { source, target, kind, rows })
    }

    pub fn source(&self) -> &FinSpace {
        &self.source
    }

    pub fn target(&self) -> &FinSpace {
        &self.target
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[Rat] {
        &self.rows[x]
    }

    /// Mass the row at `x` assigns to a target subset.
    pub fn mass(&self, x: usize, set: &StateSet) -> Rat {
        set.iter().map(|&s| self.rows[x][s].clone()).sum()
    }

    /// Total mass of the row at `x`.
    pub fn total(&self, x: usize) -> Rat {
        self.rows[x].iter().cloned().sum()
    }
}

/// A single violated kernel constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelViolation {
    EntryOutOfRange { x: StateId, state: StateId, value: Rat },
    RowSumNotOne { x: StateId, sum: Rat },
    RowSumExceedsOne { x: StateId, sum: Rat },
}

impl fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelViolation::EntryOutOfRange { x, state, value } => write!(
                f,
                "row `{x}`: entry at `{state}` is {} (outside [0,1])",
                format_rat(value)
            ),
            KernelViolation::RowSumNotOne { x, sum } => {
                write!(f, "row `{x}`: row sum {} != 1", format_rat(sum))
            }
            KernelViolation::RowSumExceedsOne { x, sum } => {
                write!(f, "row `{x}`: row sum {} > 1", format_rat(sum))
            }
        }
    }
}

/// Report of every violated row-sum or range constraint; empty iff the
/// kernel invariants hold. Pure: never fails, same input gives same report.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<KernelViolation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return f.write_str("ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_kernel(kernel: &Kernel) -> ValidationReport {
    let mut violations = Vec::new();
    for (x, row) in kernel.rows().iter().enumerate() {
        let x_id = kernel.source().id(x).clone();
        for (s, value) in row.iter().enumerate() {
            if !in_unit_interval(value) {
                violations.push(KernelViolation::EntryOutOfRange {
                    x: x_id.clone(),
                    state: kernel.target().id(s).clone(),
                    value: value.clone(),
                });
            }
        }
        let sum: Rat = row.iter().cloned().sum();
        match kernel.kind() {
            KernelKind::Probability => {
                if !sum.is_one() {
                    violations.push(KernelViolation::RowSumNotOne { x: x_id, sum });
                }
            }
            KernelKind::Subprobability => {
                if sum > Rat::one() {
                    violations.push(KernelViolation::RowSumExceedsOne { x: x_id, sum });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// A labelled Markov process: one subprobability square kernel per label,
/// all over the same state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lmp {
    space: FinSpace,
    labels: Vec<String>,
    kernels: Vec<Kernel>,
}

impl Lmp {
    pub fn new(space: FinSpace, labels: Vec<String>, kernels: Vec<Kernel>) -> Result<Self, Error> {
        if labels.is_empty() {
            return Err(Error::LabelMismatch("label set must be nonempty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::LabelMismatch(format!("duplicate label `{l}`")));
            }
        }
        if kernels.len() != labels.len() {
            return Err(Error::LabelMismatch(format!(
                "{} kernels for {} labels",
                kernels.len(),
                labels.len()
            )));
        }
        for (l, k) in labels.iter().zip(&kernels) {
            if k.source() != &space || k.target() != &space {
                return Err(Error::SpaceMismatch(format!(
                    "kernel for label `{l}` is not a square kernel over the LMP space"
                )));
            }
            if k.kind() != KernelKind::Subprobability {
                return Err(Error::InvalidKernel(format!(
                    "kernel for label `{l}` must be flagged subprobability"
                )));
            }
        }
        Ok(Lmp { space, labels, kernels })
    }

    pub fn space(&self) -> &FinSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn kernel(&self, label: &str) -> Option<&Kernel> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| &self.kernels[i])
    }

    /// Transition mass from state `s` into a subset under `label`.
    pub fn mass(&self, label: &str, s: usize, set: &StateSet) -> Option<Rat> {
        self.kernel(label).map(|k| k.mass(s, set))
    }

    /// Report across all per-label kernels.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for k in &self.kernels {
            violations.extend(validate_kernel(k).violations);
        }
        ValidationReport { violations }
    }
}

/// Builds a kernel from integer fractions; test and example convenience.
pub fn kernel_from_fractions(
    source: &FinSpace,
    target: &FinSpace,
    kind: KernelKind,
    rows: &[&[(i64, i64)]],
) -> Result<Kernel, Error> {
    let rows = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&(p, q)| crate::rational::rat(p, q))
                .collect()
        })
        .collect();
    Kernel::new(source.clone(), target.clone(), kind, rows)
}
