//! Maps between finite spaces, kernel morphisms and zigzag morphisms.
//!
//! On finite powerset spaces every total map is measurable, so a morphism is
//! just a total function on states. Measure preservation is checked on
//! singletons only: by finite additivity this is equivalent to checking every
//! measurable set.

use crate::error::{Error, KernelMorphismFailure, Verdict, ZigzagFailure};
use crate::kernel::{Kernel, Lmp};
use crate::space::{FinSpace, StateId, StateSet};

/// A total function between two finite spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    domain: FinSpace,
    codomain: FinSpace,
    map: Vec<usize>, // domain index -> codomain index
}

impl Morphism {
    pub fn new(
        domain: FinSpace,
        codomain: FinSpace,
        pairs: &[(StateId, StateId)],
    ) -> Result<Self, Error> {
        let mut map = vec![usize::MAX; domain.len()];
        for (from, to) in pairs {
            let d = domain
                .index_of(from)
                .ok_or_else(|| Error::UnknownState(from.clone()))?;
            let c = codomain
                .index_of(to)
                .ok_or_else(|| Error::UnknownState(to.clone()))?;
            map[d] = c;
        }
        for (d, &c) in map.iter().enumerate() {
            if c == usize::MAX {
                return Err(Error::NotTotal(domain.id(d).clone()));
            }
        }
        Ok(Morphism { domain, codomain, map })
    }

    /// Builds from an index-level function; panics on out-of-range images.
    pub fn from_fn(
        domain: FinSpace,
        codomain: FinSpace,
        f: impl Fn(usize) -> usize,
    ) -> Self {
        let map: Vec<usize> = (0..domain.len()).map(f).collect();
        assert!(map.iter().all(|&c| c < codomain.len()), "image out of range");
        Morphism { domain, codomain, map }
    }

    pub fn identity(space: &FinSpace) -> Self {
        Morphism::from_fn(space.clone(), space.clone(), |i| i)
    }

    pub fn domain(&self) -> &FinSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &FinSpace {
        &self.codomain
    }

    pub fn apply(&self, idx: usize) -> usize {
        self.map[idx]
    }

    pub fn apply_id(&self, id: &StateId) -> Result<&StateId, Error> {
        let d = self
            .domain
            .index_of(id)
            .ok_or_else(|| Error::UnknownState(id.clone()))?;
        Ok(self.codomain.id(self.map[d]))
    }

    pub fn image(&self, set: &StateSet) -> StateSet {
        set.iter().map(|&i| self.map[i]).collect()
    }

    pub fn preimage(&self, set: &StateSet) -> StateSet {
        (0..self.domain.len())
            .filter(|&i| set.contains(&self.map[i]))
            .collect()
    }

    /// First codomain state with empty fiber, if any.
    pub fn missing_from_image(&self) -> Option<StateId> {
        let image: StateSet = (0..self.domain.len()).map(|i| self.map[i]).collect();
        (0..self.codomain.len())
            .find(|i| !image.contains(i))
            .map(|i| self.codomain.id(i).clone())
    }

    pub fn is_surjective(&self) -> bool {
        self.missing_from_image().is_none()
    }

    /// `g` after `self`; requires `self.codomain == g.domain`.
    pub fn then(&self, g: &Morphism) -> Result<Morphism, Error> {
        if &self.codomain != g.domain() {
            return Err(Error::SpaceMismatch(
                "composition: codomain of the first map must equal the domain of the second".into(),
            ));
        }
        Ok(Morphism {
            domain: self.domain.clone(),
            codomain: g.codomain.clone(),
            map: self.map.iter().map(|&i| g.map[i]).collect(),
        })
    }
}

/// Checks that `h` is a kernel morphism from `mu1` to `mu2`: surjective and
/// mass-preserving on every fiber, for every index state.
pub fn is_kernel_morphism(
    h: &Morphism,
    mu1: &Kernel,
    mu2: &Kernel,
) -> Result<Verdict<KernelMorphismFailure>, Error> {
    if mu1.source() != mu2.source() {
        return Err(Error::SpaceMismatch(
            "kernels must share the same index space".into(),
        ));
    }
    if h.domain() != mu1.target() {
        return Err(Error::SpaceMismatch(
            "morphism domain must be the target of the first kernel".into(),
        ));
    }
    if h.codomain() != mu2.target() {
        return Err(Error::SpaceMismatch(
            "morphism codomain must be the target of the second kernel".into(),
        ));
    }
    if let Some(missing) = h.missing_from_image() {
        return Ok(Verdict::Fails(KernelMorphismFailure::NotSurjective { missing }));
    }
    for x in 0..mu1.source().len() {
        for s2 in 0..mu2.target().len() {
            let fiber = h.preimage(&StateSet::from([s2]));
            let pushed = mu1.mass(x, &fiber);
            let expected = mu2.row(x)[s2].clone();
            if pushed != expected {
                return Ok(Verdict::Fails(KernelMorphismFailure::MassMismatch {
                    x: mu1.source().id(x).clone(),
                    state: mu2.target().id(s2).clone(),
                    expected,
                    actual: pushed,
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

/// Checks that `f` is a zigzag morphism between two LMPs: surjective and, for
/// every label, every state and every singleton of the codomain, the mass of
/// the fiber equals the codomain transition mass.
pub fn is_zigzag(f: &Morphism, s: &Lmp, t: &Lmp) -> Result<Verdict<ZigzagFailure>, Error> {
    if f.domain() != s.space() {
        return Err(Error::SpaceMismatch(
            "morphism domain must be the source LMP space".into(),
        ));
    }
    if f.codomain() != t.space() {
        return Err(Error::SpaceMismatch(
            "morphism codomain must be the target LMP space".into(),
        ));
    }
    if s.labels() != t.labels() {
        return Err(Error::LabelMismatch(format!(
            "source labels {:?} vs target labels {:?}",
            s.labels(),
            t.labels()
        )));
    }
    if let Some(missing) = f.missing_from_image() {
        return Ok(Verdict::Fails(ZigzagFailure::NotSurjective { missing }));
    }
    for label in s.labels() {
        let tau_s = s.kernel(label).expect("validated label");
        let tau_t = t.kernel(label).expect("validated label");
        for st in 0..s.space().len() {
            let image = f.apply(st);
            for q in 0..t.space().len() {
                let fiber = f.preimage(&StateSet::from([q]));
                let lhs = tau_s.mass(st, &fiber);
                let rhs = tau_t.row(image)[q].clone();
                if lhs != rhs {
                    return Ok(Verdict::Fails(ZigzagFailure::MassMismatch {
                        label: label.clone(),
                        state: s.space().id(st).clone(),
                        target: t.space().id(q).clone(),
                        expected: rhs,
                        actual: lhs,
                    }));
                }
            }
        }
    }
    Ok(Verdict::Holds)
}
