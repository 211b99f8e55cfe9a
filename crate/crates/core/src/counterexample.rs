//! The countable-cocountable obstruction, mechanized at desk scale.
//!
//! The ambient set is an abstract uncountable ground (think the unit
//! interval); "countable" is modeled as "finite witness set of abstract
//! points", which preserves every boolean and measure computation the
//! construction performs. A distinguished uncountable, co-uncountable set
//! `V` is adjoined; sets of the enlarged sigma-algebra are traces on `V` and
//! its complement. The two-parameter family of extensions of the 0/1
//! measure disagrees on `V`, and completing the identity cospan to a
//! commutative square of zigzags would force the two parameters to be equal.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::rational::{format_rat, Rat};

/// An abstract point of the uncountable ground set.
pub type PointId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CocoMode {
    /// A finite set (stand-in for countable): exactly the witness points.
    Small,
    /// A cofinite set (stand-in for co-countable): everything but the witness.
    Cosmall,
}

/// A set in the countable-cocountable algebra over one component of the
/// ground: finite or cofinite, identified by its finite witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocoSet {
    pub mode: CocoMode,
    pub witness: BTreeSet<PointId>,
}

impl CocoSet {
    pub fn small(points: impl IntoIterator<Item = PointId>) -> Self {
        CocoSet { mode: CocoMode::Small, witness: points.into_iter().collect() }
    }

    pub fn cosmall(points: impl IntoIterator<Item = PointId>) -> Self {
        CocoSet { mode: CocoMode::Cosmall, witness: points.into_iter().collect() }
    }

    pub fn empty() -> Self {
        CocoSet::small([])
    }

    pub fn full() -> Self {
        CocoSet::cosmall([])
    }

    pub fn is_small(&self) -> bool {
        self.mode == CocoMode::Small
    }

    pub fn is_empty_set(&self) -> bool {
        self.is_small() && self.witness.is_empty()
    }

    /// Complement flips the mode and keeps the witness.
    pub fn complement(&self) -> CocoSet {
        CocoSet {
            mode: match self.mode {
                CocoMode::Small => CocoMode::Cosmall,
                CocoMode::Cosmall => CocoMode::Small,
            },
            witness: self.witness.clone(),
        }
    }

    pub fn intersect(&self, other: &CocoSet) -> CocoSet {
        match (self.mode, other.mode) {
            (CocoMode::Small, CocoMode::Small) => {
                CocoSet::small(self.witness.intersection(&other.witness).copied())
            }
            (CocoMode::Small, CocoMode::Cosmall) => {
                CocoSet::small(self.witness.difference(&other.witness).copied())
            }
            (CocoMode::Cosmall, CocoMode::Small) => {
                CocoSet::small(other.witness.difference(&self.witness).copied())
            }
            (CocoMode::Cosmall, CocoMode::Cosmall) => {
                CocoSet::cosmall(self.witness.union(&other.witness).copied())
            }
        }
    }

    pub fn union(&self, other: &CocoSet) -> CocoSet {
        self.complement()
            .intersect(&other.complement())
            .complement()
    }

    pub fn is_disjoint(&self, other: &CocoSet) -> bool {
        self.intersect(other).is_empty_set()
    }
}

impl fmt::Display for CocoSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts: Vec<String> = self.witness.iter().map(|p| format!("p{p}")).collect();
        match self.mode {
            CocoMode::Small => write!(f, "{{{}}}", pts.join(",")),
            CocoMode::Cosmall => write!(f, "ground\\{{{}}}", pts.join(",")),
        }
    }
}

/// The two-valued measure on the countable-cocountable algebra: 1 exactly on
/// the co-countable (here: cofinite) sets.
pub fn mu0(q: &CocoSet) -> Rat {
    match q.mode {
        CocoMode::Small => Rat::zero(),
        CocoMode::Cosmall => Rat::one(),
    }
}

/// A set of the enlarged sigma-algebra generated by adjoining `V`:
/// `(inside_v as a trace on V) union (outside_v as a trace on V-complement)`.
/// Witness points on the two sides live in separate abstract pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaVSet {
    pub inside_v: CocoSet,
    pub outside_v: CocoSet,
}

impl SigmaVSet {
    pub fn new(inside_v: CocoSet, outside_v: CocoSet) -> Self {
        SigmaVSet { inside_v, outside_v }
    }

    /// The distinguished set `V` itself.
    pub fn v() -> Self {
        SigmaVSet::new(CocoSet::full(), CocoSet::empty())
    }

    pub fn full() -> Self {
        SigmaVSet::new(CocoSet::full(), CocoSet::full())
    }

    pub fn empty() -> Self {
        SigmaVSet::new(CocoSet::empty(), CocoSet::empty())
    }

    pub fn complement(&self) -> SigmaVSet {
        SigmaVSet::new(self.inside_v.complement(), self.outside_v.complement())
    }

    pub fn intersect(&self, other: &SigmaVSet) -> SigmaVSet {
        SigmaVSet::new(
            self.inside_v.intersect(&other.inside_v),
            self.outside_v.intersect(&other.outside_v),
        )
    }

    pub fn union(&self, other: &SigmaVSet) -> SigmaVSet {
        SigmaVSet::new(
            self.inside_v.union(&other.inside_v),
            self.outside_v.union(&other.outside_v),
        )
    }

    pub fn is_empty_set(&self) -> bool {
        self.inside_v.is_empty_set() && self.outside_v.is_empty_set()
    }

    pub fn is_disjoint(&self, other: &SigmaVSet) -> bool {
        self.intersect(other).is_empty_set()
    }

    /// Membership in the original algebra: the set is (co)countable as a
    /// whole exactly when both traces have the same coco type.
    pub fn in_sigma(&self) -> bool {
        self.inside_v.mode == self.outside_v.mode
    }

    /// The set minus `V` is countable?
    pub fn difference_with_v_is_small(&self) -> bool {
        self.outside_v.is_small()
    }
}

impl fmt::Display for SigmaVSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} in V) u ({} in Vc)", self.inside_v, self.outside_v)
    }
}

fn check_parameter(r: &Rat) -> Result<(), Error> {
    if *r <= Rat::zero() || *r >= Rat::one() {
        return Err(Error::ParamError(format!(
            "parameter {} must lie strictly between 0 and 1",
            format_rat(r)
        )));
    }
    Ok(())
}

/// The extension of `mu0` to the enlarged algebra with parameter `r`:
/// `mu0` on old sets, `r` when the set deviates from `V` only countably,
/// `1 - r` otherwise.
pub fn mu_i(q: &SigmaVSet, r: &Rat) -> Result<Rat, Error> {
    check_parameter(r)?;
    if q.in_sigma() {
        // Both traces share a mode; the whole set is small or cosmall.
        return Ok(match q.inside_v.mode {
            CocoMode::Small => Rat::zero(),
            CocoMode::Cosmall => Rat::one(),
        });
    }
    if q.difference_with_v_is_small() {
        Ok(r.clone())
    } else {
        Ok(Rat::one() - r)
    }
}

/// One additivity failure found by [`verify_finite_additivity`].
#[derive(Debug, Clone)]
pub struct AdditivityFailure {
    pub a: SigmaVSet,
    pub b: SigmaVSet,
    pub lhs: Rat,
    pub rhs: Rat,
}

/// Outcome of the additivity and extension verification.
#[derive(Debug, Clone, Default)]
pub struct AdditivityReport {
    pub pairs_checked: usize,
    pub sigma_sets_checked: usize,
    pub failures: Vec<AdditivityFailure>,
}

impl AdditivityReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// All symbolic sets whose per-side witnesses draw from pools of
/// `points_per_side` abstract points (both modes, all subsets).
pub fn generate_family(points_per_side: u32) -> Vec<SigmaVSet> {
    let pool: Vec<PointId> = (0..points_per_side).collect();
    let mut cocos = Vec::new();
    for mask in 0u32..(1 << pool.len()) {
        let pts: Vec<PointId> = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &p)| p)
            .collect();
        cocos.push(CocoSet::small(pts.clone()));
        cocos.push(CocoSet::cosmall(pts));
    }
    let mut family = Vec::new();
    for inside in &cocos {
        for outside in &cocos {
            family.push(SigmaVSet::new(inside.clone(), outside.clone()));
        }
    }
    family
}

/// Checks `mu_i(A u B) = mu_i(A) + mu_i(B)` on every supplied disjoint pair
/// and that `mu_i` agrees with `mu0` on every set of the original algebra
/// encountered. Reports failures rather than erroring.
pub fn verify_finite_additivity(
    r: &Rat,
    pairs: &[(SigmaVSet, SigmaVSet)],
) -> Result<AdditivityReport, Error> {
    check_parameter(r)?;
    let mut report = AdditivityReport::default();
    for (a, b) in pairs {
        assert!(a.is_disjoint(b), "sampled pairs must be disjoint");
        let lhs = mu_i(&a.union(b), r)?;
        let rhs = mu_i(a, r)? + mu_i(b, r)?;
        report.pairs_checked += 1;
        if lhs != rhs {
            report.failures.push(AdditivityFailure {
                a: a.clone(),
                b: b.clone(),
                lhs,
                rhs,
            });
        }
        for q in [a, b] {
            if q.in_sigma() {
                report.sigma_sets_checked += 1;
                let global_mode = q.inside_v.mode;
                let as_coco = CocoSet {
                    mode: global_mode,
                    witness: BTreeSet::new(),
                };
                let expected = mu0(&as_coco);
                if mu_i(q, r)? != expected {
                    report.failures.push(AdditivityFailure {
                        a: q.clone(),
                        b: SigmaVSet::empty(),
                        lhs: mu_i(q, r)?,
                        rhs: expected,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Exhaustive additivity check over all disjoint pairs from the generated
/// family with witness pools of the given size.
pub fn exhaustive_additivity_check(r: &Rat, points_per_side: u32) -> Result<AdditivityReport, Error> {
    let family = generate_family(points_per_side);
    let mut pairs = Vec::new();
    for a in &family {
        for b in &family {
            if a.is_disjoint(b) {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    verify_finite_additivity(r, &pairs)
}

/// One step of the obstruction derivation.
#[derive(Debug, Clone)]
pub struct DerivationStep {
    pub claim: String,
    pub because: String,
}

/// The mechanized obstruction: completing the identity cospan of the
/// two-parameter LMPs to a commutative square of zigzags forces `r1 = r2`.
#[derive(Debug, Clone)]
pub struct ObstructionReport {
    pub r1: Rat,
    pub r2: Rat,
    pub steps: Vec<DerivationStep>,
    /// The two values forced equal by the square, in exact form.
    pub forced_equal: (Rat, Rat),
}

impl fmt::Display for ObstructionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "obstruction for r1 = {}, r2 = {}:",
            format_rat(&self.r1),
            format_rat(&self.r2)
        )?;
        for (i, step) in self.steps.iter().enumerate() {
            writeln!(f, "  {}. {}  [{}]", i + 1, step.claim, step.because)?;
        }
        writeln!(
            f,
            "contradiction: {} = {} is false",
            format_rat(&self.forced_equal.0),
            format_rat(&self.forced_equal.1)
        )
    }
}

/// Builds the two extensions `mu_1`, `mu_2` of `mu0` and derives that any
/// semipullback of the identity cospan of the associated LMPs would force
/// `tau(t, g^{-1}(V))` to equal both `mu_1(V) = r1` and `mu_2(V) = r2`.
/// Errors when `r1 = r2` (no obstruction) or a parameter leaves `(0,1)`.
pub fn demonstrate_obstruction(r1: &Rat, r2: &Rat) -> Result<ObstructionReport, Error> {
    check_parameter(r1)?;
    check_parameter(r2)?;
    if r1 == r2 {
        return Err(Error::ParamError(
            "the obstruction needs two different parameters in (0,1)".into(),
        ));
    }

    let v = SigmaVSet::v();
    // tau_i(s0, A) = mu_i(A); evaluate both extensions at A = V symbolically.
    let mu1_of_v = mu_i(&v, r1)?;
    let mu2_of_v = mu_i(&v, r2)?;
    debug_assert_eq!(mu1_of_v, *r1);
    debug_assert_eq!(mu2_of_v, *r2);

    let steps = vec![
        DerivationStep {
            claim: "suppose an LMP T with zigzags g1: T -> S1 and g2: T -> S2 \
                    completes the identity cospan Id: S_i -> S0"
                .into(),
            because: "semipullback assumption".into(),
        },
        DerivationStep {
            claim: "Id . g1 = Id . g2, hence g1 = g2 =: g as state maps".into(),
            because: "the square commutes over identity legs".into(),
        },
        DerivationStep {
            claim: "some t in T has g(t) = s0".into(),
            because: "zigzags are surjective".into(),
        },
        DerivationStep {
            claim: format!(
                "tau(t, g1^-1(V)) = tau_1(s0, V) = mu_1(V) = {}",
                format_rat(&mu1_of_v)
            ),
            because: "zigzag equation for g1 at the set V, evaluated symbolically".into(),
        },
        DerivationStep {
            claim: format!(
                "tau(t, g2^-1(V)) = tau_2(s0, V) = mu_2(V) = {}",
                format_rat(&mu2_of_v)
            ),
            because: "zigzag equation for g2 at the set V, evaluated symbolically".into(),
        },
        DerivationStep {
            claim: "g1 = g2 gives g1^-1(V) = g2^-1(V), so the two masses coincide".into(),
            because: "preimages of equal maps agree".into(),
        },
    ];

    Ok(ObstructionReport {
        r1: r1.clone(),
        r2: r2.clone(),
        steps,
        forced_equal: (mu1_of_v, mu2_of_v),
    })
}
