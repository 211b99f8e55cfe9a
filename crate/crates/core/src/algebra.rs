//! Finite set algebras, finitely additive measures, simple functions and
//! positive functionals.
//!
//! An algebra of subsets of a finite ground space is represented by its atom
//! partition: a subset belongs to the algebra iff it is a union of atoms.
//! Atoms are kept in canonical order (by least ground-state index) so that
//! every downstream iteration — extension order, LP variable order — is a
//! fixed function of the input data.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::Error;
use crate::linalg::SpannedFunctional;
use crate::morphism::Morphism;
use crate::rational::{format_rat, Rat};
use crate::space::{FinSpace, StateSet};

/// A finite algebra of subsets, as an atom partition of the ground space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetAlgebra {
    ground: FinSpace,
    atoms: Vec<StateSet>,
}

fn canonical_atom_order(atoms: &mut [StateSet]) {
    atoms.sort_by_key(|a| *a.iter().next().expect("atoms are nonempty"));
}

impl SetAlgebra {
    /// Builds from an explicit partition; blocks must be disjoint, nonempty
    /// and cover the ground set. Blocks are reordered canonically.
    pub fn from_partition(ground: FinSpace, blocks: Vec<StateSet>) -> Result<Self, Error> {
        let mut covered = StateSet::new();
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::BadPartition("empty block".into()));
            }
            for &i in block {
                if i >= ground.len() {
                    return Err(Error::BadPartition(format!("index {i} out of range")));
                }
                if !covered.insert(i) {
                    return Err(Error::BadPartition(format!(
                        "state `{}` appears in two blocks",
                        ground.id(i)
                    )));
                }
            }
        }
        if covered.len() != ground.len() {
            return Err(Error::BadPartition("blocks do not cover the ground set".into()));
        }
        let mut atoms = blocks;
        canonical_atom_order(&mut atoms);
        Ok(SetAlgebra { ground, atoms })
    }

    /// The full powerset: atoms are singletons.
    pub fn powerset(ground: &FinSpace) -> Self {
        let atoms = (0..ground.len()).map(|i| StateSet::from([i])).collect();
        SetAlgebra { ground: ground.clone(), atoms }
    }

    /// The trivial algebra: one atom, the whole ground set.
    pub fn trivial(ground: &FinSpace) -> Self {
        SetAlgebra {
            ground: ground.clone(),
            atoms: vec![ground.full_set()],
        }
    }

    pub fn ground(&self) -> &FinSpace {
        &self.ground
    }

    pub fn atoms(&self) -> &[StateSet] {
        &self.atoms
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Index of the atom containing ground-state index `i`.
    pub fn atom_of(&self, i: usize) -> usize {
        self.atoms
            .iter()
            .position(|a| a.contains(&i))
            .expect("atoms cover the ground set")
    }

    /// A set belongs to the algebra iff it is a union of atoms.
    pub fn contains_set(&self, set: &StateSet) -> bool {
        self.atoms
            .iter()
            .all(|atom| atom.is_subset(set) || atom.is_disjoint(set))
    }

    /// Indices of the atoms making up `set`, or `None` if `set` splits an atom.
    pub fn decompose(&self, set: &StateSet) -> Option<Vec<usize>> {
        let mut parts = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.is_subset(set) {
                parts.push(i);
            } else if !atom.is_disjoint(set) {
                return None;
            }
        }
        Some(parts)
    }

    /// Every element of the algebra, as unions over atom subsets.
    /// Enumerates `2^atom_count` sets; intended for desk-scale algebras.
    pub fn enumerate_elements(&self) -> Vec<StateSet> {
        assert!(self.atom_count() <= 20, "algebra too large to enumerate");
        let n = self.atom_count();
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0u32..(1 << n) {
            let mut set = StateSet::new();
            for (i, atom) in self.atoms.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    set.extend(atom.iter().copied());
                }
            }
            out.push(set);
        }
        out
    }

    /// True when every atom of `self` is a union of atoms of `finer`
    /// (i.e. `self` is a subalgebra of `finer`).
    pub fn is_subalgebra_of(&self, finer: &SetAlgebra) -> bool {
        self.ground == finer.ground && self.atoms.iter().all(|a| finer.contains_set(a))
    }

    fn render_atom(&self, idx: usize) -> String {
        self.atoms[idx]
            .iter()
            .map(|&i| self.ground.id(i).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// The smallest algebra containing all `generators`: atoms are the nonempty
/// cells of the common refinement (states with identical membership pattern).
pub fn generated_algebra(ground: &FinSpace, generators: &[StateSet]) -> SetAlgebra {
    let mut cells: Vec<(Vec<bool>, StateSet)> = Vec::new();
    for i in 0..ground.len() {
        let pattern: Vec<bool> = generators.iter().map(|g| g.contains(&i)).collect();
        match cells.iter_mut().find(|(p, _)| *p == pattern) {
            Some((_, cell)) => {
                cell.insert(i);
            }
            None => {
                cells.push((pattern, StateSet::from([i])));
            }
        }
    }
    let mut atoms: Vec<StateSet> = cells.into_iter().map(|(_, c)| c).collect();
    canonical_atom_order(&mut atoms);
    SetAlgebra { ground: ground.clone(), atoms }
}

/// Pulls an algebra on the codomain of `h` back to its domain: atoms are the
/// nonempty preimages of the codomain atoms.
pub fn preimage_algebra(h: &Morphism, algebra: &SetAlgebra) -> Result<SetAlgebra, Error> {
    if algebra.ground() != h.codomain() {
        return Err(Error::SpaceMismatch(
            "algebra ground must be the morphism codomain".into(),
        ));
    }
    let mut atoms: Vec<StateSet> = algebra
        .atoms()
        .iter()
        .map(|a| h.preimage(a))
        .filter(|p| !p.is_empty())
        .collect();
    canonical_atom_order(&mut atoms);
    Ok(SetAlgebra { ground: h.domain().clone(), atoms })
}

/// A finitely additive measure on a finite algebra, as per-atom masses.
/// Finite additivity holds by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinAddMeasure {
    algebra: SetAlgebra,
    atom_mass: Vec<Rat>,
}

impl FinAddMeasure {
    pub fn new(algebra: SetAlgebra, atom_mass: Vec<Rat>) -> Result<Self, Error> {
        assert_eq!(atom_mass.len(), algebra.atom_count(), "one mass per atom");
        for (i, m) in atom_mass.iter().enumerate() {
            if m < &Rat::zero() {
                return Err(Error::NegativeMass {
                    atom: algebra.render_atom(i),
                    mass: format_rat(m),
                });
            }
        }
        let total: Rat = atom_mass.iter().cloned().sum();
        if total > Rat::one() {
            return Err(Error::MassExceedsOne(format_rat(&total)));
        }
        Ok(FinAddMeasure { algebra, atom_mass })
    }

    pub fn algebra(&self) -> &SetAlgebra {
        &self.algebra
    }

    pub fn atom_mass(&self) -> &[Rat] {
        &self.atom_mass
    }

    pub fn total(&self) -> Rat {
        self.atom_mass.iter().cloned().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.total().is_one()
    }

    /// Measure of an algebra set; `NotInAlgebra` if `set` splits an atom.
    pub fn eval(&self, set: &StateSet) -> Result<Rat, Error> {
        let parts = self.algebra.decompose(set).ok_or_else(|| {
            let split = self
                .algebra
                .atoms()
                .iter()
                .position(|a| !a.is_subset(set) && !a.is_disjoint(set))
                .expect("some atom is split");
            Error::NotInAlgebra(self.algebra.render_atom(split))
        })?;
        Ok(parts.iter().map(|&i| self.atom_mass[i].clone()).sum())
    }

    /// Restriction to a subalgebra of this measure's algebra.
    pub fn restrict_to(&self, sub: &SetAlgebra) -> Result<FinAddMeasure, Error> {
        if !sub.is_subalgebra_of(&self.algebra) {
            let offending = sub
                .atoms()
                .iter()
                .find(|a| !self.algebra.contains_set(a))
                .expect("some atom offends");
            return Err(Error::NotSubalgebra(
                offending
                    .iter()
                    .map(|&i| sub.ground().id(i).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ));
        }
        let masses = sub
            .atoms()
            .iter()
            .map(|a| self.eval(a))
            .collect::<Result<Vec<_>, _>>()?;
        FinAddMeasure::new(sub.clone(), masses)
    }
}

/// Integral of a simple function against a finitely additive measure.
/// `NotMeasurable` if the function is not constant on some atom.
pub fn integral(nu: &FinAddMeasure, f: &SimpleFunction) -> Result<Rat, Error> {
    if f.ground() != nu.algebra().ground() {
        return Err(Error::SpaceMismatch(
            "function and measure must share the ground space".into(),
        ));
    }
    let mut sum = Rat::zero();
    for (i, atom) in nu.algebra().atoms().iter().enumerate() {
        let mut values = atom.iter().map(|&s| &f.values()[s]);
        let first = values.next().expect("atoms are nonempty").clone();
        if values.any(|v| *v != first) {
            return Err(Error::NotMeasurable(nu.algebra().render_atom(i)));
        }
        sum += first * &nu.atom_mass()[i];
    }
    Ok(sum)
}

/// A rational-valued function on a finite ground space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleFunction {
    ground: FinSpace,
    values: Vec<Rat>,
}

impl SimpleFunction {
    pub fn new(ground: FinSpace, values: Vec<Rat>) -> Self {
        assert_eq!(values.len(), ground.len(), "one value per state");
        SimpleFunction { ground, values }
    }

    pub fn constant(ground: &FinSpace, value: Rat) -> Self {
        SimpleFunction::new(ground.clone(), vec![value; ground.len()])
    }

    pub fn one(ground: &FinSpace) -> Self {
        SimpleFunction::constant(ground, Rat::one())
    }

    pub fn indicator(ground: &FinSpace, set: &StateSet) -> Self {
        let values = (0..ground.len())
            .map(|i| if set.contains(&i) { Rat::one() } else { Rat::zero() })
            .collect();
        SimpleFunction::new(ground.clone(), values)
    }

    pub fn ground(&self) -> &FinSpace {
        &self.ground
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= Rat::zero())
    }

    /// Constant on every atom of `algebra`?
    pub fn is_measurable_wrt(&self, algebra: &SetAlgebra) -> bool {
        self.ground == *algebra.ground()
            && algebra.atoms().iter().all(|atom| {
                let mut vals = atom.iter().map(|&i| &self.values[i]);
                let first = vals.next().expect("nonempty atom");
                vals.all(|v| v == first)
            })
    }

    /// Pointwise `self + scale * other`.
    pub fn add_scaled(&self, other: &SimpleFunction, scale: &Rat) -> SimpleFunction {
        assert_eq!(self.ground, other.ground);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        SimpleFunction::new(self.ground.clone(), values)
    }

    pub fn scale(&self, by: &Rat) -> SimpleFunction {
        SimpleFunction::new(
            self.ground.clone(),
            self.values.iter().map(|v| v * by).collect(),
        )
    }

    /// Pointwise `self >= other`.
    pub fn dominates(&self, other: &SimpleFunction) -> bool {
        self.ground == other.ground
            && self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

impl fmt::Display for SimpleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .ground
            .states()
            .iter()
            .zip(&self.values)
            .map(|(s, v)| format!("{s}:{}", format_rat(v)))
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// A linear functional on the subspace spanned by `basis`, given by its
/// values on the basis elements. Well-definedness (values vanish on every
/// linear relation among basis elements) is checked, not assumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveFunctional {
    ground: FinSpace,
    basis: Vec<SimpleFunction>,
    values: Vec<Rat>,
}

impl PositiveFunctional {
    pub fn new(
        ground: FinSpace,
        basis: Vec<SimpleFunction>,
        values: Vec<Rat>,
    ) -> Result<Self, Error> {
        assert_eq!(basis.len(), values.len(), "one value per basis element");
        for f in &basis {
            if f.ground() != &ground {
                return Err(Error::SpaceMismatch(
                    "basis functions must live on the functional's ground space".into(),
                ));
            }
        }
        let pf = PositiveFunctional { ground, basis, values };
        pf.spanned()?;
        Ok(pf)
    }

    pub fn ground(&self) -> &FinSpace {
        &self.ground
    }

    pub fn basis(&self) -> &[SimpleFunction] {
        &self.basis
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Reduced form; errors if two representations of the same function
    /// would receive different values.
    pub(crate) fn spanned(&self) -> Result<SpannedFunctional, Error> {
        let mut span = SpannedFunctional::new(self.ground.len());
        for (f, v) in self.basis.iter().zip(&self.values) {
            span.insert(f.values(), v.clone())
                .map(|_| ())
                .map_err(|_| Error::IllDefinedFunctional)?;
        }
        Ok(span)
    }

    /// Evaluates at a function in the span; `NotInSpan` otherwise.
    pub fn eval(&self, f: &SimpleFunction) -> Result<Rat, Error> {
        if f.ground() != &self.ground {
            return Err(Error::SpaceMismatch(
                "function lives on a different ground space".into(),
            ));
        }
        self.spanned()?.express(f.values()).ok_or(Error::NotInSpan)
    }

    /// Whether the all-ones function lies in the span.
    pub fn contains_constants(&self) -> bool {
        match self.spanned() {
            Ok(span) => span.express(SimpleFunction::one(&self.ground).values()).is_some(),
            Err(_) => false,
        }
    }
}
