use thiserror::Error;

use crate::rational::Rat;
use crate::space::StateId;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unparsable rational `{0}`")]
    BadRational(String),

    #[error("space must contain at least one state")]
    EmptySpace,

    #[error("duplicate state id `{0}`")]
    DuplicateState(StateId),

    #[error("state `{0}` is not a member of the space")]
    UnknownState(StateId),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("kernel shape invalid: {0}")]
    KernelShape(String),

    #[error("kernel invalid: {0}")]
    InvalidKernel(String),

    #[error("morphism is not total: state `{0}` has no image")]
    NotTotal(StateId),

    #[error("morphism is not surjective: `{0}` has no preimage")]
    NotSurjective(StateId),

    #[error("leg is not a kernel morphism (x = `{x}`, state = `{state}`)")]
    NotKernelMorphism { x: StateId, state: StateId },

    #[error("leg is not a zigzag (label `{label}`, state `{state}`, target `{target}`)")]
    NotZigzag {
        label: String,
        state: StateId,
        target: StateId,
    },

    #[error("blocks do not form a partition of the ground set: {0}")]
    BadPartition(String),

    #[error("set is not in the algebra: it splits atom {{{0}}}")]
    NotInAlgebra(String),

    #[error("simple function is not measurable: non-constant on atom {{{0}}}")]
    NotMeasurable(String),

    #[error("not a subalgebra: atom {{{0}}} is not a union of ambient atoms")]
    NotSubalgebra(String),

    #[error("measure mass must be nonnegative (atom {{{atom}}} has mass {mass})")]
    NegativeMass { atom: String, mass: String },

    #[error("total mass {0} exceeds 1")]
    MassExceedsOne(String),

    #[error("measure is not a probability measure: total mass {0}")]
    NotProbability(String),

    #[error("no common extension exists (Strassen condition fails)")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("functional is ill-defined: inconsistent values on dependent basis elements")]
    IllDefinedFunctional,

    #[error("functional is not positive on the nonnegative cone (violation value {0})")]
    NotPositive(String),

    #[error("functional is not normalized: value on constants is {0}")]
    NotNormalized(String),

    #[error("subspace does not contain the constant functions")]
    ConstantsMissing,

    #[error("function is outside the spanned subspace")]
    NotInSpan,

    #[error("morphism is not measure-preserving at `{0}`")]
    NotMeasurePreserving(StateId),

    #[error("measure algebra atoms are not singletons")]
    NotSingletonAtoms,

    #[error("reserved state id `{0}` already present in the space")]
    ReservedIdCollision(StateId),

    #[error("construction pipeline failed unexpectedly at {stage}: {detail}")]
    PipelineInfeasible { stage: String, detail: String },

    #[error("invalid parameter: {0}")]
    ParamError(String),
}

impl Error {
    pub(crate) fn pipeline(stage: &str, detail: impl Into<String>) -> Self {
        Error::PipelineInfeasible {
            stage: stage.to_string(),
            detail: detail.into(),
        }
    }
}

/// Outcome of a checked structural property: either it holds or a finite
/// counterexample witness explains where it fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W> {
    Holds,
    Fails(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds => None,
            Verdict::Fails(w) => Some(w),
        }
    }
}

/// Where a kernel-morphism check fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelMorphismFailure {
    NotSurjective { missing: StateId },
    MassMismatch { x: StateId, state: StateId, expected: Rat, actual: Rat },
}

/// Where a zigzag check fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZigzagFailure {
    NotSurjective {
        missing: StateId,
    },
    MassMismatch {
        label: String,
        state: StateId,
        target: StateId,
        expected: Rat,
        actual: Rat,
    },
}
