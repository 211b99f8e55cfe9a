//! The semipullback construction.
//!
//! Given a cospan of kernels (or LMPs) the pipeline builds the set pullback,
//! pulls the two fiber algebras back onto it, extends the induced pair of
//! measures to a common finitely additive measure, re-derives a deterministic
//! extension through the positive-functional machinery, promotes the result
//! to a kernel row, and re-checks every claimed property: the complement
//! rectangles carry no mass, the square commutes, and both projections are
//! measure-preserving. Certificates of all intermediate objects are retained
//! in the result.

use num_traits::{One, Signed, Zero};

use crate::algebra::{
    generated_algebra, preimage_algebra, FinAddMeasure, PositiveFunctional, SetAlgebra,
    SimpleFunction,
};
use crate::error::{Error, KernelMorphismFailure, Verdict, ZigzagFailure};
use crate::extend::{common_extension, hahn_banach_extend, promote_to_sigma_additive, strassen_condition};
use crate::kernel::{validate_kernel, Kernel, KernelKind, Lmp};
use crate::morphism::{is_kernel_morphism, is_zigzag, Morphism};
use crate::rational::{format_rat, Rat};
use crate::space::{FinSpace, StateId, StateSet};

/// Reserved prefix of the absorbing state added by one-point completion.
pub const DEAD_STATE_PREFIX: &str = "\u{22a5}dead";

fn dead_state_id(tag: &str) -> StateId {
    StateId::new(format!("{DEAD_STATE_PREFIX}:{tag}"))
}

fn pair_id(s1: &StateId, s2: &StateId) -> StateId {
    StateId::new(format!("({s1},{s2})"))
}

/// A cospan of kernels sharing one index space: `left -> apex <- right`.
/// Both legs are verified kernel morphisms.
#[derive(Debug, Clone)]
pub struct KernelCospan {
    apex: Kernel,
    left: Kernel,
    right: Kernel,
    leg1: Morphism,
    leg2: Morphism,
}

impl KernelCospan {
    pub fn new(
        apex: Kernel,
        left: Kernel,
        leg1: Morphism,
        right: Kernel,
        leg2: Morphism,
    ) -> Result<Self, Error> {
        for (name, leg, side) in [("leg1", &leg1, &left), ("leg2", &leg2, &right)] {
            let verdict = is_kernel_morphism(leg, side, &apex).map_err(|e| match e {
                Error::SpaceMismatch(m) => Error::SpaceMismatch(format!("{name}: {m}")),
                other => other,
            })?;
            match verdict {
                Verdict::Holds => {}
                Verdict::Fails(KernelMorphismFailure::NotSurjective { missing }) => {
                    return Err(Error::NotSurjective(missing))
                }
                Verdict::Fails(KernelMorphismFailure::MassMismatch { x, state, .. }) => {
                    return Err(Error::NotKernelMorphism { x, state })
                }
            }
        }
        Ok(KernelCospan { apex, left, right, leg1, leg2 })
    }

    pub fn apex(&self) -> &Kernel {
        &self.apex
    }

    pub fn left(&self) -> &Kernel {
        &self.left
    }

    pub fn right(&self) -> &Kernel {
        &self.right
    }

    pub fn leg1(&self) -> &Morphism {
        &self.leg1
    }

    pub fn leg2(&self) -> &Morphism {
        &self.leg2
    }
}

/// A cospan of LMPs with zigzag legs: `left -> apex <- right`.
#[derive(Debug, Clone)]
pub struct LmpCospan {
    apex: Lmp,
    left: Lmp,
    right: Lmp,
    leg1: Morphism,
    leg2: Morphism,
}

impl LmpCospan {
    pub fn new(
        apex: Lmp,
        left: Lmp,
        leg1: Morphism,
        right: Lmp,
        leg2: Morphism,
    ) -> Result<Self, Error> {
        for (leg, side) in [(&leg1, &left), (&leg2, &right)] {
            match is_zigzag(leg, side, &apex)? {
                Verdict::Holds => {}
                Verdict::Fails(ZigzagFailure::NotSurjective { missing }) => {
                    return Err(Error::NotSurjective(missing))
                }
                Verdict::Fails(ZigzagFailure::MassMismatch { label, state, target, .. }) => {
                    return Err(Error::NotZigzag { label, state, target })
                }
            }
        }
        Ok(LmpCospan { apex, left, right, leg1, leg2 })
    }

    pub fn apex(&self) -> &Lmp {
        &self.apex
    }

    pub fn left(&self) -> &Lmp {
        &self.left
    }

    pub fn right(&self) -> &Lmp {
        &self.right
    }

    pub fn leg1(&self) -> &Morphism {
        &self.leg1
    }

    pub fn leg2(&self) -> &Morphism {
        &self.leg2
    }
}

/// The set pullback of two morphisms into a common codomain.
#[derive(Debug, Clone)]
pub struct Pullback {
    /// Pair states `(s1,s2)` with `h1(s1) = h2(s2)`, in lexicographic order.
    pub space: FinSpace,
    /// Index pairs into the two leg domains, aligned with `space`.
    pub pairs: Vec<(usize, usize)>,
    pub k1: Morphism,
    pub k2: Morphism,
}

/// Computes the set pullback `{(x1,x2) : h1(x1) = h2(x2)}` with its
/// coordinate projections. Both maps must be surjections onto the shared
/// codomain, which makes the projections surjective too.
pub fn set_pullback(h1: &Morphism, h2: &Morphism) -> Result<Pullback, Error> {
    if h1.codomain() != h2.codomain() {
        return Err(Error::SpaceMismatch(
            "pullback legs must share their codomain".into(),
        ));
    }
    for h in [h1, h2] {
        if let Some(missing) = h.missing_from_image() {
            return Err(Error::NotSurjective(missing));
        }
    }
    let mut pairs = Vec::new();
    let mut ids = Vec::new();
    for i1 in 0..h1.domain().len() {
        for i2 in 0..h2.domain().len() {
            if h1.apply(i1) == h2.apply(i2) {
                pairs.push((i1, i2));
                ids.push(pair_id(h1.domain().id(i1), h2.domain().id(i2)));
            }
        }
    }
    let space = FinSpace::new(ids)?;
    let k1 = Morphism::from_fn(space.clone(), h1.domain().clone(), |p| pairs[p].0);
    let k2 = Morphism::from_fn(space.clone(), h2.domain().clone(), |p| pairs[p].1);
    debug_assert!(k1.is_surjective() && k2.is_surjective());
    Ok(Pullback { space, pairs, k1, k2 })
}

/// The measurable-image minorant: for a measure-preserving `h` and a subset
/// `A` of its domain, returns `D = h(A)` which satisfies `mu0(D) >= mu(A)`.
/// On finite spaces images are measurable, so the minorant is the image
/// itself; measure preservation is checked, the inequality is then automatic.
pub fn image_minorant(
    h: &Morphism,
    mu: &[Rat],
    mu0: &[Rat],
    a: &StateSet,
) -> Result<StateSet, Error> {
    assert_eq!(mu.len(), h.domain().len());
    assert_eq!(mu0.len(), h.codomain().len());
    for (s0, expected) in mu0.iter().enumerate() {
        let fiber_mass: Rat = (0..h.domain().len())
            .filter(|&s| h.apply(s) == s0)
            .map(|s| mu[s].clone())
            .sum();
        if fiber_mass != *expected {
            return Err(Error::NotMeasurePreserving(h.codomain().id(s0).clone()));
        }
    }
    let image = h.image(a);
    debug_assert!(
        image.iter().map(|&i| mu0[i].clone()).sum::<Rat>()
            >= a.iter().map(|&i| mu[i].clone()).sum::<Rat>()
    );
    Ok(image)
}

/// One-point completion: adjoins a fresh absorbing state to the target and
/// routes each row's mass deficit `1 - mu^x(S)` into it, producing a
/// probability kernel. The new state id is the reserved prefix suffixed with
/// `tag`; a collision with an existing id is an error, never a rename.
pub fn one_point_completion(kernel: &Kernel, tag: &str) -> Result<Kernel, Error> {
    let report = validate_kernel(kernel);
    if !report.is_clean() {
        return Err(Error::InvalidKernel(report.to_string()));
    }
    let dead = dead_state_id(tag);
    if kernel.target().contains(&dead) {
        return Err(Error::ReservedIdCollision(dead));
    }
    let mut ids = kernel.target().states().to_vec();
    ids.push(dead);
    let target = FinSpace::new(ids)?;
    let rows = kernel
        .rows()
        .iter()
        .map(|row| {
            let deficit = Rat::one() - row.iter().cloned().sum::<Rat>();
            let mut new_row = row.clone();
            new_row.push(deficit);
            new_row
        })
        .collect();
    Kernel::new(kernel.source().clone(), target, KernelKind::Probability, rows)
}

/// Extends a morphism to the one-point completions of its spaces, sending
/// the fresh absorbing state to the fresh absorbing state.
pub fn extend_to_completion(
    h: &Morphism,
    completed_domain: &FinSpace,
    completed_codomain: &FinSpace,
) -> Morphism {
    assert_eq!(completed_domain.len(), h.domain().len() + 1);
    assert_eq!(completed_codomain.len(), h.codomain().len() + 1);
    let last = completed_codomain.len() - 1;
    let h = h.clone();
    Morphism::from_fn(completed_domain.clone(), completed_codomain.clone(), move |i| {
        if i < h.domain().len() {
            h.apply(i)
        } else {
            last
        }
    })
}

/// The fiberwise product coupling: mass `mu1(s1) * mu2(s2) / mu0(s0)` on
/// each matching pair over a positive-mass apex state, zero elsewhere.
/// Marginals along the projections equal the side kernels exactly; used as
/// an independent cross-check of the extension pipeline. Zero-mass fibers
/// contribute zero mass; no division by zero is performed.
pub fn independent_coupling(cospan: &KernelCospan) -> Result<Kernel, Error> {
    let pb = set_pullback(cospan.leg1(), cospan.leg2())?;
    let x_space = cospan.apex().source().clone();
    let mut rows = Vec::with_capacity(x_space.len());
    for x in 0..x_space.len() {
        let mut row = Vec::with_capacity(pb.space.len());
        for &(i1, i2) in &pb.pairs {
            let s0 = cospan.leg1().apply(i1);
            let m = &cospan.apex().row(x)[s0];
            if m.is_zero() {
                row.push(Rat::zero());
            } else {
                row.push(&cospan.left().row(x)[i1] * &cospan.right().row(x)[i2] / m);
            }
        }
        rows.push(row);
    }
    Kernel::new(x_space, pb.space.clone(), cospan.apex().kind(), rows)
}

/// The rectangles that carve the pullback out of the product: for every
/// subset `B0` of the apex, `h1^{-1}(B0) x h2^{-1}(S0 \ B0)` misses the
/// pullback, and the union of all such rectangles is exactly the complement
/// of the pullback inside the product.
pub fn complement_rectangles(
    h1: &Morphism,
    h2: &Morphism,
) -> Result<Vec<(StateSet, StateSet)>, Error> {
    if h1.codomain() != h2.codomain() {
        return Err(Error::SpaceMismatch(
            "rectangle legs must share their codomain".into(),
        ));
    }
    let s0 = h1.codomain();
    assert!(s0.len() <= 20, "apex too large to enumerate subsets");
    let mut rects = Vec::with_capacity(1 << s0.len());
    for mask in 0u32..(1 << s0.len()) {
        let b0: StateSet = (0..s0.len()).filter(|&i| mask & (1 << i) != 0).collect();
        let complement = s0.complement(&b0);
        rects.push((h1.preimage(&b0), h2.preimage(&complement)));
    }
    Ok(rects)
}

fn rectangles_cover_complement(h1: &Morphism, h2: &Morphism, pb: &Pullback) -> Result<bool, Error> {
    let rects = complement_rectangles(h1, h2)?;
    let pullback_pairs: std::collections::BTreeSet<(usize, usize)> =
        pb.pairs.iter().copied().collect();
    let mut covered = std::collections::BTreeSet::new();
    for (r1, r2) in &rects {
        for &i1 in r1 {
            for &i2 in r2 {
                if pullback_pairs.contains(&(i1, i2)) {
                    // A rectangle meeting the pullback would carry mass.
                    return Ok(false);
                }
                covered.insert((i1, i2));
            }
        }
    }
    let n1 = h1.domain().len();
    let n2 = h2.domain().len();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let in_pullback = pullback_pairs.contains(&(i1, i2));
            if !in_pullback && !covered.contains(&(i1, i2)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Per-index-state record of the extension pipeline. All vectors are aligned
/// with the canonical atom orders of the certificate's algebras.
#[derive(Debug, Clone)]
pub struct ExtensionCertificate {
    pub x: StateId,
    /// Induced measure on the first pulled-back algebra.
    pub nu1: Vec<Rat>,
    /// Induced measure on the second pulled-back algebra.
    pub nu2: Vec<Rat>,
    /// Common extension on the ambient algebra (the feasibility step).
    pub common: Vec<Rat>,
    /// Functional values on the full extension basis (first-algebra atoms,
    /// then second-algebra atoms, then ambient atoms).
    pub phi: Vec<Rat>,
    /// Final measure on the ambient algebra.
    pub nu3: Vec<Rat>,
    /// Total mass of `nu3` (1 in the probability pipeline).
    pub total: Rat,
}

/// Per-label (or single, for kernel cospans) certificate: the algebras the
/// construction ran over, the rectangle check, and the per-x records.
#[derive(Debug, Clone)]
pub struct PipelineCertificate {
    pub label: Option<String>,
    /// Ground space of the algebras below (the completed pullback for the
    /// subprobability pipeline).
    pub ground: FinSpace,
    pub algebra1: Vec<Vec<StateId>>,
    pub algebra2: Vec<Vec<StateId>>,
    pub ambient: Vec<Vec<StateId>>,
    pub rectangle_count: usize,
    pub rectangles_cover_complement: bool,
    pub per_x: Vec<ExtensionCertificate>,
}

/// The constructed semipullback vertex.
#[derive(Debug, Clone)]
pub enum Vertex {
    Kernel(Kernel),
    Lmp(Lmp),
}

/// A completed square: vertex, projections, the pullback pairs, and the
/// certificates of every extension step.
#[derive(Debug, Clone)]
pub struct SemipullbackResult {
    pub vertex: Vertex,
    pub k1: Morphism,
    pub k2: Morphism,
    pub pullback_pairs: Vec<(StateId, StateId)>,
    pub certificates: Vec<PipelineCertificate>,
}

impl SemipullbackResult {
    pub fn vertex_kernel(&self) -> Option<&Kernel> {
        match &self.vertex {
            Vertex::Kernel(k) => Some(k),
            Vertex::Lmp(_) => None,
        }
    }

    pub fn vertex_lmp(&self) -> Option<&Lmp> {
        match &self.vertex {
            Vertex::Lmp(l) => Some(l),
            Vertex::Kernel(_) => None,
        }
    }

    /// `h1 . k1 == h2 . k2` as maps.
    pub fn square_commutes(&self, leg1: &Morphism, leg2: &Morphism) -> bool {
        match (self.k1.then(leg1), self.k2.then(leg2)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }
}

fn require_probability(kernel: &Kernel, name: &str) -> Result<(), Error> {
    if kernel.kind() != KernelKind::Probability {
        return Err(Error::InvalidKernel(format!(
            "{name} must be a probability kernel"
        )));
    }
    let report = validate_kernel(kernel);
    if !report.is_clean() {
        return Err(Error::InvalidKernel(format!("{name}: {report}")));
    }
    Ok(())
}

/// Measure induced on a pulled-back fiber algebra by a kernel row: each atom
/// is one fiber of the projection and receives the kernel mass of the state
/// it projects to.
fn fiber_measure(
    algebra: &SetAlgebra,
    projection: &Morphism,
    kernel: &Kernel,
    x: usize,
) -> Result<FinAddMeasure, Error> {
    let masses = algebra
        .atoms()
        .iter()
        .map(|atom| {
            let &first = atom.iter().next().expect("atoms are nonempty");
            let target = projection.apply(first);
            debug_assert!(atom.iter().all(|&i| projection.apply(i) == target));
            kernel.row(x)[target].clone()
        })
        .collect();
    FinAddMeasure::new(algebra.clone(), masses)
}

/// The Strassen condition derived the long way round, through the image
/// minorant: for every pair of disjoint pulled-back sets, the minorants of
/// their projections are disjoint in the apex, so the two masses are summed
/// against disjoint apex sets and stay below 1.
fn strassen_via_minorant(cospan: &KernelCospan, pb: &Pullback, x: usize) -> Result<bool, Error> {
    let s1 = cospan.left().target();
    assert!(s1.len() <= 20, "side space too large to enumerate subsets");
    let mu1 = cospan.left().row(x);
    let mu2 = cospan.right().row(x);
    let mu0 = cospan.apex().row(x);
    for mask in 0u32..(1 << s1.len()) {
        let b1: StateSet = (0..s1.len()).filter(|&i| mask & (1 << i) != 0).collect();
        // Largest B2 with disjoint pullback preimages.
        let d1_bound = cospan.leg1().image(&b1);
        let b2: StateSet = (0..cospan.right().target().len())
            .filter(|&i| !d1_bound.contains(&cospan.leg2().apply(i)))
            .collect();
        let d1 = image_minorant(cospan.leg1(), mu1, mu0, &b1)?;
        let d2 = image_minorant(cospan.leg2(), mu2, mu0, &b2)?;
        if !d1.is_disjoint(&d2) {
            return Ok(false);
        }
        let a1 = pb.k1.preimage(&b1);
        let a2 = pb.k2.preimage(&b2);
        debug_assert!(a1.is_disjoint(&a2));
        let lhs: Rat = b1.iter().map(|&i| mu1[i].clone()).sum::<Rat>()
            + b2.iter().map(|&i| mu2[i].clone()).sum::<Rat>();
        let bound: Rat = d1.iter().map(|&i| mu0[i].clone()).sum::<Rat>()
            + d2.iter().map(|&i| mu0[i].clone()).sum::<Rat>();
        if lhs > bound || bound > Rat::one() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Semipullback of a cospan of probability kernels.
///
/// For each index state the pipeline (i) induces the two fiber measures on
/// the pullback, (ii) checks the Strassen condition both directly and via
/// the image-minorant route, (iii) finds the deterministic common extension,
/// (iv) extends the resulting functional from the sum of the two simple-
/// function spaces to the full ambient algebra one dimension at a time,
/// (v) promotes the extension to a kernel row, and (vi) re-verifies the
/// rectangle, marginal and commutation properties.
pub fn semipullback_prob_kernels(cospan: &KernelCospan) -> Result<SemipullbackResult, Error> {
    require_probability(cospan.apex(), "apex")?;
    require_probability(cospan.left(), "left kernel")?;
    require_probability(cospan.right(), "right kernel")?;

    let pb = set_pullback(cospan.leg1(), cospan.leg2())?;
    let algebra1 = preimage_algebra(&pb.k1, &SetAlgebra::powerset(cospan.left().target()))?;
    let algebra2 = preimage_algebra(&pb.k2, &SetAlgebra::powerset(cospan.right().target()))?;
    let generators: Vec<StateSet> = algebra1
        .atoms()
        .iter()
        .chain(algebra2.atoms())
        .cloned()
        .collect();
    let ambient = generated_algebra(&pb.space, &generators);
    // Fixing both coordinates pins a pair, so the ambient atoms are exactly
    // the pullback singletons.
    if ambient.atom_count() != pb.space.len() {
        return Err(Error::pipeline(
            "ambient algebra",
            "refinement of the two fiber algebras is not the powerset",
        ));
    }

    let rectangles_ok = rectangles_cover_complement(cospan.leg1(), cospan.leg2(), &pb)?;
    if !rectangles_ok {
        return Err(Error::pipeline(
            "definability rectangles",
            "rectangle union does not match the pullback complement",
        ));
    }
    let rectangle_count = 1usize << cospan.apex().target().len();

    let w_basis: Vec<SimpleFunction> = algebra1
        .atoms()
        .iter()
        .chain(algebra2.atoms())
        .map(|atom| SimpleFunction::indicator(&pb.space, atom))
        .collect();
    let v_basis: Vec<SimpleFunction> = w_basis
        .iter()
        .cloned()
        .chain(
            ambient
                .atoms()
                .iter()
                .map(|atom| SimpleFunction::indicator(&pb.space, atom)),
        )
        .collect();
    let w_len = w_basis.len();

    let x_space = cospan.apex().source().clone();
    let mut per_x = Vec::with_capacity(x_space.len());
    let mut rows = Vec::with_capacity(x_space.len());
    for x in 0..x_space.len() {
        let nu1 = fiber_measure(&algebra1, &pb.k1, cospan.left(), x)?;
        let nu2 = fiber_measure(&algebra2, &pb.k2, cospan.right(), x)?;

        if !strassen_condition(&nu1, &nu2, &ambient)?.holds() {
            return Err(Error::pipeline(
                "strassen (direct)",
                format!("condition fails at x = `{}`", x_space.id(x)),
            ));
        }
        if !strassen_via_minorant(cospan, &pb, x)? {
            return Err(Error::pipeline(
                "strassen (image minorant)",
                format!("condition fails at x = `{}`", x_space.id(x)),
            ));
        }

        let common = common_extension(&nu1, &nu2, &ambient).map_err(|e| match e {
            Error::Infeasible => Error::pipeline(
                "common extension",
                format!("infeasible at x = `{}`", x_space.id(x)),
            ),
            other => other,
        })?;

        let psi_values: Vec<Rat> = nu1
            .atom_mass()
            .iter()
            .chain(nu2.atom_mass())
            .cloned()
            .collect();
        let psi = PositiveFunctional::new(pb.space.clone(), w_basis.clone(), psi_values)?;
        let phi = hahn_banach_extend(&psi, &v_basis)?;

        let nu3_masses: Vec<Rat> = phi.values()[w_len..].to_vec();
        let total: Rat = nu3_masses.iter().cloned().sum();
        if nu3_masses.iter().any(|m| m.is_negative()) || !total.is_one() {
            return Err(Error::pipeline(
                "normalization",
                format!(
                    "extension is not a probability measure at x = `{}` (total {})",
                    x_space.id(x),
                    format_rat(&total)
                ),
            ));
        }
        let nu3 = FinAddMeasure::new(ambient.clone(), nu3_masses.clone())?;
        if nu3.restrict_to(&algebra1)? != nu1 || nu3.restrict_to(&algebra2)? != nu2 {
            return Err(Error::pipeline(
                "extension restriction",
                format!("final measure does not extend both sides at x = `{}`", x_space.id(x)),
            ));
        }

        rows.push(promote_to_sigma_additive(&nu3)?);
        per_x.push(ExtensionCertificate {
            x: x_space.id(x).clone(),
            nu1: nu1.atom_mass().to_vec(),
            nu2: nu2.atom_mass().to_vec(),
            common: common.atom_mass().to_vec(),
            phi: phi.values().to_vec(),
            nu3: nu3_masses,
            total,
        });
    }

    let mu3 = Kernel::new(x_space, pb.space.clone(), KernelKind::Probability, rows)?;
    let certificate = PipelineCertificate {
        label: None,
        ground: pb.space.clone(),
        algebra1: render_atoms(&algebra1),
        algebra2: render_atoms(&algebra2),
        ambient: render_atoms(&ambient),
        rectangle_count,
        rectangles_cover_complement: rectangles_ok,
        per_x,
    };
    finish_kernel_result(cospan, pb, mu3, vec![certificate])
}

fn render_atoms(algebra: &SetAlgebra) -> Vec<Vec<StateId>> {
    algebra
        .atoms()
        .iter()
        .map(|a| algebra.ground().render_set(a))
        .collect()
}

fn finish_kernel_result(
    cospan: &KernelCospan,
    pb: Pullback,
    mu3: Kernel,
    certificates: Vec<PipelineCertificate>,
) -> Result<SemipullbackResult, Error> {
    for (name, k, side) in [("k1", &pb.k1, cospan.left()), ("k2", &pb.k2, cospan.right())] {
        if !is_kernel_morphism(k, &mu3, side)?.holds() {
            return Err(Error::pipeline(
                "projection check",
                format!("{name} is not a kernel morphism onto its side"),
            ));
        }
    }
    if pb.k1.then(cospan.leg1())? != pb.k2.then(cospan.leg2())? {
        return Err(Error::pipeline("commutation", "square does not commute"));
    }
    let pullback_pairs = pb
        .pairs
        .iter()
        .map(|&(i1, i2)| {
            (
                cospan.leg1().domain().id(i1).clone(),
                cospan.leg2().domain().id(i2).clone(),
            )
        })
        .collect();
    Ok(SemipullbackResult {
        vertex: Vertex::Kernel(mu3),
        k1: pb.k1,
        k2: pb.k2,
        pullback_pairs,
        certificates,
    })
}

/// Semipullback of a cospan of subprobability kernels: complete all three
/// kernels and both legs with an absorbing state, run the probability
/// pipeline, drop the absorbing pair, and restrict.
pub fn semipullback_subprob_kernels(cospan: &KernelCospan) -> Result<SemipullbackResult, Error> {
    let bar_apex = one_point_completion(cospan.apex(), "S0")?;
    let bar_left = one_point_completion(cospan.left(), "S1")?;
    let bar_right = one_point_completion(cospan.right(), "S2")?;
    let bar_leg1 = extend_to_completion(cospan.leg1(), bar_left.target(), bar_apex.target());
    let bar_leg2 = extend_to_completion(cospan.leg2(), bar_right.target(), bar_apex.target());
    let completed = KernelCospan::new(bar_apex, bar_left, bar_leg1, bar_right, bar_leg2)?;
    let inner = semipullback_prob_kernels(&completed)?;

    let pb = set_pullback(cospan.leg1(), cospan.leg2())?;
    let bar_mu3 = inner
        .vertex_kernel()
        .expect("probability pipeline returns a kernel vertex");

    // The completed pullback is the original one plus the trailing absorbing
    // pair; restriction drops its column.
    if bar_mu3.target().len() != pb.space.len() + 1 {
        return Err(Error::pipeline(
            "restriction",
            "completed pullback does not extend the original by one pair",
        ));
    }
    for (i, id) in pb.space.states().iter().enumerate() {
        if bar_mu3.target().id(i) != id {
            return Err(Error::pipeline(
                "restriction",
                "completed pullback pairs are not a prefix-aligned extension",
            ));
        }
    }

    let rows: Vec<Vec<Rat>> = bar_mu3
        .rows()
        .iter()
        .map(|row| row[..pb.space.len()].to_vec())
        .collect();
    let mu3 = Kernel::new(
        bar_mu3.source().clone(),
        pb.space.clone(),
        KernelKind::Subprobability,
        rows,
    )?;

    // Restriction keeps exactly the apex mass.
    for x in 0..mu3.source().len() {
        if mu3.total(x) != cospan.apex().total(x) {
            return Err(Error::pipeline(
                "restriction",
                format!(
                    "restricted mass differs from apex mass at x = `{}`",
                    mu3.source().id(x)
                ),
            ));
        }
    }

    finish_kernel_result(cospan, pb, mu3, inner.certificates)
}

/// Semipullback of a cospan of LMPs.
///
/// The pullback of the state maps serves as the index space; for each label
/// the transition kernels are reindexed along the projections and the
/// subprobability pipeline supplies the vertex kernel. The pullback does not
/// depend on the label, so a single state space carries every label's kernel;
/// both projections are verified zigzags of the assembled LMP.
pub fn semipullback_lmp(cospan: &LmpCospan) -> Result<SemipullbackResult, Error> {
    let pb = set_pullback(cospan.leg1(), cospan.leg2())?;
    let x_space = pb.space.clone();

    let mut label_kernels = Vec::new();
    let mut certificates = Vec::new();
    for label in cospan.apex().labels() {
        let tau1 = cospan.left().kernel(label).expect("shared labels");
        let tau2 = cospan.right().kernel(label).expect("shared labels");
        let tau0 = cospan.apex().kernel(label).expect("shared labels");

        let reindex = |tau: &Kernel, proj: &Morphism| -> Result<Kernel, Error> {
            let rows = (0..x_space.len())
                .map(|x| tau.row(proj.apply(x)).to_vec())
                .collect();
            Kernel::new(
                x_space.clone(),
                tau.target().clone(),
                KernelKind::Subprobability,
                rows,
            )
        };
        let mu1 = reindex(tau1, &pb.k1)?;
        let mu2 = reindex(tau2, &pb.k2)?;
        let through_apex = pb.k1.then(cospan.leg1())?;
        let mu0 = reindex(tau0, &through_apex)?;

        let kernel_cospan = KernelCospan::new(
            mu0,
            mu1,
            cospan.leg1().clone(),
            mu2,
            cospan.leg2().clone(),
        )?;
        let sub = semipullback_subprob_kernels(&kernel_cospan)?;
        let vertex = sub
            .vertex_kernel()
            .expect("kernel pipeline returns a kernel vertex");
        if vertex.target() != &x_space {
            return Err(Error::pipeline(
                "label assembly",
                format!("pullback for label `{label}` differs from the shared pullback"),
            ));
        }
        label_kernels.push(vertex.clone());
        certificates.extend(sub.certificates.into_iter().map(|mut c| {
            c.label = Some(label.clone());
            c
        }));
    }

    let vertex = Lmp::new(
        x_space.clone(),
        cospan.apex().labels().to_vec(),
        label_kernels,
    )?;
    for (name, k, side) in [("k1", &pb.k1, cospan.left()), ("k2", &pb.k2, cospan.right())] {
        if !is_zigzag(k, &vertex, side)?.holds() {
            return Err(Error::pipeline(
                "projection check",
                format!("{name} is not a zigzag onto its side"),
            ));
        }
    }
    if pb.k1.then(cospan.leg1())? != pb.k2.then(cospan.leg2())? {
        return Err(Error::pipeline("commutation", "square does not commute"));
    }

    let pullback_pairs = pb
        .pairs
        .iter()
        .map(|&(i1, i2)| {
            (
                cospan.left().space().id(i1).clone(),
                cospan.right().space().id(i2).clone(),
            )
        })
        .collect();
    Ok(SemipullbackResult {
        vertex: Vertex::Lmp(vertex),
        k1: pb.k1,
        k2: pb.k2,
        pullback_pairs,
        certificates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_from_fractions;
    use crate::rational::rat;

    fn space(ids: &[&str]) -> FinSpace {
        FinSpace::from_ids(ids).unwrap()
    }

    fn morphism(dom: &FinSpace, cod: &FinSpace, pairs: &[(&str, &str)]) -> Morphism {
        let pairs: Vec<(StateId, StateId)> = pairs
            .iter()
            .map(|&(a, b)| (StateId::new(a), StateId::new(b)))
            .collect();
        Morphism::new(dom.clone(), cod.clone(), &pairs).unwrap()
    }

    #[test]
    fn pullback_of_bijections_is_a_graph() {
        let s1 = space(&["a", "b"]);
        let s2 = space(&["c", "d"]);
        let s0 = space(&["u", "v"]);
        let h1 = morphism(&s1, &s0, &[("a", "u"), ("b", "v")]);
        let h2 = morphism(&s2, &s0, &[("c", "u"), ("d", "v")]);
        let pb = set_pullback(&h1, &h2).unwrap();
        assert_eq!(pb.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(pb.space.states()[0].as_str(), "(a,c)");
        assert_eq!(pb.space.states()[1].as_str(), "(b,d)");
    }

    #[test]
    fn pullback_over_a_point_is_the_product() {
        let s1 = space(&["a", "b"]);
        let s2 = space(&["c", "d"]);
        let s0 = space(&["u"]);
        let h1 = morphism(&s1, &s0, &[("a", "u"), ("b", "u")]);
        let h2 = morphism(&s2, &s0, &[("c", "u"), ("d", "u")]);
        let pb = set_pullback(&h1, &h2).unwrap();
        assert_eq!(pb.pairs.len(), 4);
    }

    #[test]
    fn pullback_filters_matching_pairs() {
        let s1 = space(&["a", "b", "c"]);
        let s2 = space(&["d", "e", "f"]);
        let s0 = space(&["u", "v"]);
        let h1 = morphism(&s1, &s0, &[("a", "u"), ("b", "u"), ("c", "v")]);
        let h2 = morphism(&s2, &s0, &[("d", "u"), ("e", "v"), ("f", "v")]);
        let pb = set_pullback(&h1, &h2).unwrap();
        let ids: Vec<&str> = pb.space.states().iter().map(|s| s.as_str()).collect();
        assert_eq!(ids, vec!["(a,d)", "(b,d)", "(c,e)", "(c,f)"]);
    }

    #[test]
    fn pullback_requires_surjective_legs() {
        let s1 = space(&["a"]);
        let s0 = space(&["u", "v"]);
        let h1 = morphism(&s1, &s0, &[("a", "u")]);
        assert!(matches!(
            set_pullback(&h1, &h1),
            Err(Error::NotSurjective(id)) if id.as_str() == "v"
        ));
    }

    #[test]
    fn image_minorant_on_total_space_and_empty_set() {
        let dom = space(&["a", "b"]);
        let cod = space(&["u"]);
        let h = morphism(&dom, &cod, &[("a", "u"), ("b", "u")]);
        let mu = vec![rat(1, 4), rat(1, 4)];
        let mu0 = vec![rat(1, 2)];
        let d = image_minorant(&h, &mu, &mu0, &dom.full_set()).unwrap();
        assert_eq!(d, StateSet::from([0]));
        let empty = image_minorant(&h, &mu, &mu0, &StateSet::new()).unwrap();
        assert!(empty.is_empty());
        let single = image_minorant(&h, &mu, &mu0, &StateSet::from([0])).unwrap();
        assert_eq!(single, StateSet::from([0]));
    }

    #[test]
    fn image_minorant_rejects_nonpreserving_maps() {
        let dom = space(&["a", "b"]);
        let cod = space(&["u"]);
        let h = morphism(&dom, &cod, &[("a", "u"), ("b", "u")]);
        let mu = vec![rat(1, 4), rat(1, 4)];
        let mu0 = vec![rat(1, 3)];
        assert!(matches!(
            image_minorant(&h, &mu, &mu0, &StateSet::new()),
            Err(Error::NotMeasurePreserving(_))
        ));
    }

    #[test]
    fn one_point_completion_routes_the_deficit() {
        let x = space(&["x"]);
        let s = space(&["a", "b"]);
        let k = kernel_from_fractions(&x, &s, KernelKind::Subprobability, &[&[(1, 3), (1, 3)]])
            .unwrap();
        let bar = one_point_completion(&k, "S").unwrap();
        assert_eq!(bar.kind(), KernelKind::Probability);
        assert_eq!(bar.row(0), &[rat(1, 3), rat(1, 3), rat(1, 3)]);

        let p = kernel_from_fractions(&x, &s, KernelKind::Probability, &[&[(1, 2), (1, 2)]])
            .unwrap();
        let bar = one_point_completion(&p, "S").unwrap();
        assert_eq!(bar.row(0), &[rat(1, 2), rat(1, 2), rat(0, 1)]);

        let z = kernel_from_fractions(&x, &s, KernelKind::Subprobability, &[&[(0, 1), (0, 1)]])
            .unwrap();
        let bar = one_point_completion(&z, "S").unwrap();
        assert_eq!(bar.row(0), &[rat(0, 1), rat(0, 1), rat(1, 1)]);
    }

    #[test]
    fn completed_morphisms_send_dead_to_dead() {
        let x = space(&["x"]);
        let s = space(&["a", "b"]);
        let u = space(&["u"]);
        let k = kernel_from_fractions(&x, &s, KernelKind::Subprobability, &[&[(1, 4), (1, 4)]])
            .unwrap();
        let k0 =
            kernel_from_fractions(&x, &u, KernelKind::Subprobability, &[&[(1, 2)]]).unwrap();
        let h = morphism(&s, &u, &[("a", "u"), ("b", "u")]);
        let bar = one_point_completion(&k, "S1").unwrap();
        let bar0 = one_point_completion(&k0, "S0").unwrap();
        let bar_h = extend_to_completion(&h, bar.target(), bar0.target());
        assert_eq!(bar_h.apply_id(&StateId::new("a")).unwrap().as_str(), "u");
        assert_eq!(
            bar_h
                .apply_id(&StateId::new(format!("{DEAD_STATE_PREFIX}:S1")))
                .unwrap()
                .as_str(),
            format!("{DEAD_STATE_PREFIX}:S0")
        );
        assert!(is_kernel_morphism(&bar_h, &bar, &bar0).unwrap().holds());
    }

    #[test]
    fn one_point_completion_rejects_reserved_ids() {
        let x = space(&["x"]);
        let s = FinSpace::from_ids(&["a", &format!("{DEAD_STATE_PREFIX}:S")]).unwrap();
        let k = kernel_from_fractions(&x, &s, KernelKind::Subprobability, &[&[(1, 3), (1, 3)]])
            .unwrap();
        assert!(matches!(
            one_point_completion(&k, "S"),
            Err(Error::ReservedIdCollision(_))
        ));
    }

    fn product_cospan() -> KernelCospan {
        let x = space(&["x"]);
        let s0 = space(&["u"]);
        let s1 = space(&["a", "b"]);
        let s2 = space(&["c", "d"]);
        let mu0 = kernel_from_fractions(&x, &s0, KernelKind::Probability, &[&[(1, 1)]]).unwrap();
        let mu1 = kernel_from_fractions(&x, &s1, KernelKind::Probability, &[&[(1, 2), (1, 2)]])
            .unwrap();
        let mu2 = kernel_from_fractions(&x, &s2, KernelKind::Probability, &[&[(1, 3), (2, 3)]])
            .unwrap();
        let h1 = morphism(&s1, &s0, &[("a", "u"), ("b", "u")]);
        let h2 = morphism(&s2, &s0, &[("c", "u"), ("d", "u")]);
        KernelCospan::new(mu0, mu1, h1, mu2, h2).unwrap()
    }

    #[test]
    fn independent_coupling_over_a_point_is_the_product_measure() {
        let cospan = product_cospan();
        let coupling = independent_coupling(&cospan).unwrap();
        assert_eq!(
            coupling.row(0),
            &[rat(1, 6), rat(1, 3), rat(1, 6), rat(1, 3)]
        );
    }

    #[test]
    fn identity_cospan_yields_the_diagonal() {
        let x = space(&["x", "y"]);
        let s = space(&["a", "b"]);
        let mu = kernel_from_fractions(
            &x,
            &s,
            KernelKind::Probability,
            &[&[(1, 4), (3, 4)], &[(1, 2), (1, 2)]],
        )
        .unwrap();
        let id = Morphism::identity(&s);
        let cospan = KernelCospan::new(mu.clone(), mu.clone(), id.clone(), mu.clone(), id).unwrap();
        let result = semipullback_prob_kernels(&cospan).unwrap();
        let mu3 = result.vertex_kernel().unwrap();
        assert_eq!(mu3.target().len(), 2);
        assert_eq!(mu3.row(0), &[rat(1, 4), rat(3, 4)]);
        assert_eq!(mu3.row(1), &[rat(1, 2), rat(1, 2)]);
        assert!(result.square_commutes(cospan.leg1(), cospan.leg2()));
    }

    #[test]
    fn product_cospan_pipeline_is_deterministic_with_exact_marginals() {
        let cospan = product_cospan();
        let first = semipullback_prob_kernels(&cospan).unwrap();
        let second = semipullback_prob_kernels(&cospan).unwrap();
        let mu3 = first.vertex_kernel().unwrap();
        assert_eq!(mu3.rows(), second.vertex_kernel().unwrap().rows());
        // Maximal mass on the least-index pair, then forced linear fill:
        // (a,c) gets min(1/2, 1/3) = 1/3 and the rest follows.
        assert_eq!(mu3.row(0), &[rat(1, 3), rat(1, 6), rat(0, 1), rat(1, 2)]);
        assert!(is_kernel_morphism(&first.k1, mu3, cospan.left())
            .unwrap()
            .holds());
        assert!(is_kernel_morphism(&first.k2, mu3, cospan.right())
            .unwrap()
            .holds());
    }

    #[test]
    fn deterministic_fiber_leg_transports_the_apex() {
        // S1 = S0 via the identity; the coupling is supported on the graph
        // of the second leg's fibers and the marginal onto S1 equals mu1.
        let x = space(&["x"]);
        let s0 = space(&["u", "v"]);
        let s2 = space(&["c", "d", "e"]);
        let mu0 = kernel_from_fractions(&x, &s0, KernelKind::Probability, &[&[(1, 2), (1, 2)]])
            .unwrap();
        let mu2 = kernel_from_fractions(
            &x,
            &s2,
            KernelKind::Probability,
            &[&[(1, 4), (1, 4), (1, 2)]],
        )
        .unwrap();
        let h1 = Morphism::identity(&s0);
        let h2 = morphism(&s2, &s0, &[("c", "u"), ("d", "u"), ("e", "v")]);
        let cospan = KernelCospan::new(mu0.clone(), mu0.clone(), h1, mu2, h2).unwrap();
        let result = semipullback_prob_kernels(&cospan).unwrap();
        let mu3 = result.vertex_kernel().unwrap();
        let expected = independent_coupling(&cospan).unwrap();
        assert_eq!(mu3.rows(), expected.rows());
    }

    #[test]
    fn subprobability_pipeline_preserves_apex_mass() {
        let x = space(&["x"]);
        let s0 = space(&["u"]);
        let s1 = space(&["a", "b"]);
        let s2 = space(&["c"]);
        let mu0 =
            kernel_from_fractions(&x, &s0, KernelKind::Subprobability, &[&[(1, 2)]]).unwrap();
        let mu1 = kernel_from_fractions(&x, &s1, KernelKind::Subprobability, &[&[(1, 4), (1, 4)]])
            .unwrap();
        let mu2 =
            kernel_from_fractions(&x, &s2, KernelKind::Subprobability, &[&[(1, 2)]]).unwrap();
        let h1 = morphism(&s1, &s0, &[("a", "u"), ("b", "u")]);
        let h2 = morphism(&s2, &s0, &[("c", "u")]);
        let cospan = KernelCospan::new(mu0, mu1, h1, mu2, h2).unwrap();
        let result = semipullback_subprob_kernels(&cospan).unwrap();
        let mu3 = result.vertex_kernel().unwrap();
        assert_eq!(mu3.total(0), rat(1, 2));
        assert_eq!(mu3.target().len(), 2);
        assert!(is_kernel_morphism(&result.k1, mu3, cospan.left())
            .unwrap()
            .holds());
    }

    #[test]
    fn zero_kernels_give_a_zero_semipullback() {
        let x = space(&["x"]);
        let s = space(&["a"]);
        let zero =
            kernel_from_fractions(&x, &s, KernelKind::Subprobability, &[&[(0, 1)]]).unwrap();
        let id = Morphism::identity(&s);
        let cospan =
            KernelCospan::new(zero.clone(), zero.clone(), id.clone(), zero.clone(), id).unwrap();
        let result = semipullback_subprob_kernels(&cospan).unwrap();
        let mu3 = result.vertex_kernel().unwrap();
        assert!(mu3.row(0).iter().all(|m| m.is_zero()));
    }

    #[test]
    fn probability_input_through_subprob_pipeline_matches_prob_pipeline() {
        let cospan = product_cospan();
        // Re-flag the same data as subprobability kernels.
        let as_subprob = |k: &Kernel| {
            Kernel::new(
                k.source().clone(),
                k.target().clone(),
                KernelKind::Subprobability,
                k.rows().to_vec(),
            )
            .unwrap()
        };
        let sub_cospan = KernelCospan::new(
            as_subprob(cospan.apex()),
            as_subprob(cospan.left()),
            cospan.leg1().clone(),
            as_subprob(cospan.right()),
            cospan.leg2().clone(),
        )
        .unwrap();
        let via_sub = semipullback_subprob_kernels(&sub_cospan).unwrap();
        let via_prob = semipullback_prob_kernels(&cospan).unwrap();
        assert_eq!(
            via_sub.vertex_kernel().unwrap().rows(),
            via_prob.vertex_kernel().unwrap().rows()
        );
    }

    #[test]
    fn rectangles_partition_the_complement() {
        let s1 = space(&["a", "b", "c"]);
        let s2 = space(&["d", "e", "f"]);
        let s0 = space(&["u", "v"]);
        let h1 = morphism(&s1, &s0, &[("a", "u"), ("b", "u"), ("c", "v")]);
        let h2 = morphism(&s2, &s0, &[("d", "u"), ("e", "v"), ("f", "v")]);
        let pb = set_pullback(&h1, &h2).unwrap();
        assert!(rectangles_cover_complement(&h1, &h2, &pb).unwrap());
    }

    #[test]
    fn lmp_identity_cospan_is_diagonal() {
        let s = space(&["p", "q"]);
        let tau = kernel_from_fractions(
            &s,
            &s,
            KernelKind::Subprobability,
            &[&[(1, 2), (1, 4)], &[(0, 1), (1, 1)]],
        )
        .unwrap();
        let lmp = Lmp::new(s.clone(), vec!["a".into()], vec![tau]).unwrap();
        let id = Morphism::identity(&s);
        let cospan =
            LmpCospan::new(lmp.clone(), lmp.clone(), id.clone(), lmp.clone(), id).unwrap();
        let result = semipullback_lmp(&cospan).unwrap();
        let vertex = result.vertex_lmp().unwrap();
        assert_eq!(vertex.space().len(), 2);
        let tau3 = vertex.kernel("a").unwrap();
        assert_eq!(tau3.row(0), &[rat(1, 2), rat(1, 4)]);
        assert_eq!(tau3.row(1), &[rat(0, 1), rat(1, 1)]);
        assert!(is_zigzag(&result.k1, vertex, cospan.left()).unwrap().holds());
    }

    #[test]
    fn lmp_zero_label_stays_zero() {
        let s = space(&["p", "q"]);
        let live = kernel_from_fractions(
            &s,
            &s,
            KernelKind::Subprobability,
            &[&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]],
        )
        .unwrap();
        let zero = kernel_from_fractions(
            &s,
            &s,
            KernelKind::Subprobability,
            &[&[(0, 1), (0, 1)], &[(0, 1), (0, 1)]],
        )
        .unwrap();
        let lmp = Lmp::new(s.clone(), vec!["a".into(), "b".into()], vec![live, zero]).unwrap();
        let id = Morphism::identity(&s);
        let cospan =
            LmpCospan::new(lmp.clone(), lmp.clone(), id.clone(), lmp.clone(), id).unwrap();
        let result = semipullback_lmp(&cospan).unwrap();
        let vertex = result.vertex_lmp().unwrap();
        let tau_b = vertex.kernel("b").unwrap();
        assert!(tau_b.rows().iter().all(|r| r.iter().all(|m| m.is_zero())));
    }
}
