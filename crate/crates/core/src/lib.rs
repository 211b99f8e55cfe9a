//! Semipullbacks of finite labelled Markov processes.
//!
//! Two LMPs are *behaviorally equivalent* when a cospan of zigzag morphisms
//! `S -> U <- S'` connects them, and *bisimilar* when a span `S <- T -> S'`
//! does. This crate completes every cospan of finite LMPs (and of
//! probability or subprobability kernels over a fixed index space) to a
//! commutative square, with exact rational arithmetic end to end:
//!
//! * the vertex is built over the set pullback of the two legs;
//! * the two fiber algebras are pulled back and their induced measures are
//!   joined by a common finitely additive extension, found as an exact
//!   linear feasibility problem with a deterministic objective;
//! * the extension is re-derived through a positivity-preserving,
//!   one-dimension-at-a-time functional extension whose infima are exact
//!   linear programs, so the output is a fixed function of the input;
//! * subprobability kernels are routed through a one-point completion and
//!   restricted afterwards.
//!
//! Every construction returns certificates of its intermediate measures and
//! functional values, and re-checks the marginal, support, normalization and
//! commutation properties it claims.
//!
//! The [`bisim`] module derives behavioral-equivalence witnesses (largest
//! zigzag quotients, joined cospans) and converts them to bisimilarity
//! witnesses through the semipullback. The [`counterexample`] module walks
//! through the countable-cocountable obstruction showing why the finite
//! (standard Borel) setting matters.

pub mod algebra;
pub mod bisim;
pub mod construct;
pub mod counterexample;
pub mod error;
pub mod extend;
pub mod kernel;
mod linalg;
pub mod lp;
pub mod morphism;
pub mod rational;
pub mod space;

pub use algebra::{
    generated_algebra, integral, preimage_algebra, FinAddMeasure, PositiveFunctional, SetAlgebra,
    SimpleFunction,
};
pub use bisim::{
    bisimilarity_partition, cospan_from_quotients, largest_zigzag_quotient, span_from_cospan,
    Partition,
};
pub use construct::{
    complement_rectangles, extend_to_completion, image_minorant, independent_coupling,
    one_point_completion, semipullback_lmp, semipullback_prob_kernels,
    semipullback_subprob_kernels, set_pullback, ExtensionCertificate, KernelCospan, LmpCospan,
    PipelineCertificate, Pullback, SemipullbackResult, Vertex, DEAD_STATE_PREFIX,
};
pub use counterexample::{
    demonstrate_obstruction, exhaustive_additivity_check, generate_family, mu0, mu_i,
    verify_finite_additivity, AdditivityReport, CocoMode, CocoSet, ObstructionReport, SigmaVSet,
};
pub use error::{Error, KernelMorphismFailure, Verdict, ZigzagFailure};
pub use extend::{
    common_extension, hahn_banach_extend, promote_to_sigma_additive, strassen_condition,
    StrassenViolation,
};
pub use kernel::{
    kernel_from_fractions, validate_kernel, Kernel, KernelKind, KernelViolation, Lmp,
    ValidationReport,
};
pub use lp::{LinearConstraint, LinearFeasibilityProblem, LpOutcome, LpSolution, Relation};
pub use morphism::{is_kernel_morphism, is_zigzag, Morphism};
pub use rational::{format_rat, parse_rat, rat, rat_int, Rat};
pub use space::{FinSpace, StateId, StateSet};
