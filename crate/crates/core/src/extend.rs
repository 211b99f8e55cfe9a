//! The measure-extension engine.
//!
//! Three executable procedures back the construction: the Strassen condition
//! check for a pair of finitely additive measures on subalgebras, the common
//! extension of such a pair to the ambient algebra (an exact linear
//! feasibility problem with a fixed index-weighted objective, so the chosen
//! extension is deterministic rather than an invocation of choice), and a
//! positivity-preserving one-dimension-at-a-time extension of positive linear
//! functionals where each step's infimum is computed by an exact LP. On a
//! finite powerset algebra finite additivity already implies countable
//! additivity, so the final promotion to a kernel row is a checked identity.

use num_traits::{One, Signed, Zero};

use crate::algebra::{FinAddMeasure, PositiveFunctional, SetAlgebra, SimpleFunction};
use crate::error::{Error, Verdict};
use crate::linalg::SpannedFunctional;
use crate::lp::{LinearFeasibilityProblem, LpOutcome, Relation};
use crate::rational::{format_rat, rat_int, Rat};
use crate::space::StateSet;

/// A disjoint pair violating the Strassen condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrassenViolation {
    pub set1: StateSet,
    pub set2: StateSet,
    pub sum: Rat,
}

fn check_extension_inputs(
    nu1: &FinAddMeasure,
    nu2: &FinAddMeasure,
    ambient: &SetAlgebra,
) -> Result<(), Error> {
    for nu in [nu1, nu2] {
        if nu.algebra().ground() != ambient.ground() {
            return Err(Error::SpaceMismatch(
                "measures and ambient algebra must share the ground space".into(),
            ));
        }
        if !nu.algebra().is_subalgebra_of(ambient) {
            let offending = nu
                .algebra()
                .atoms()
                .iter()
                .find(|a| !ambient.contains_set(a))
                .expect("some atom offends");
            return Err(Error::NotSubalgebra(
                offending
                    .iter()
                    .map(|&i| ambient.ground().id(i).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ));
        }
        if !nu.is_probability() {
            return Err(Error::NotProbability(format_rat(&nu.total())));
        }
    }
    Ok(())
}

/// Checks `nu1(A1) + nu2(A2) <= 1` for every disjoint pair of subalgebra
/// sets. For each `A1` only the largest disjoint `A2` (the union of the
/// `nu2`-atoms missing `A1`) needs testing, by monotonicity; the full
/// quadratic enumeration is kept as a test oracle.
pub fn strassen_condition(
    nu1: &FinAddMeasure,
    nu2: &FinAddMeasure,
    ambient: &SetAlgebra,
) -> Result<Verdict<StrassenViolation>, Error> {
    check_extension_inputs(nu1, nu2, ambient)?;
    for set1 in nu1.algebra().enumerate_elements() {
        let mut set2 = StateSet::new();
        let mut mass2 = Rat::zero();
        for (atom, mass) in nu2.algebra().atoms().iter().zip(nu2.atom_mass()) {
            if atom.is_disjoint(&set1) {
                set2.extend(atom.iter().copied());
                mass2 += mass.clone();
            }
        }
        let sum = nu1.eval(&set1).expect("subalgebra element") + mass2;
        if sum > Rat::one() {
            return Ok(Verdict::Fails(StrassenViolation { set1, set2, sum }));
        }
    }
    Ok(Verdict::Holds)
}

/// A finitely additive probability measure on `ambient` extending both `nu1`
/// and `nu2`. Exists iff the Strassen condition holds (`Infeasible`
/// otherwise). Among all extensions, the one minimizing the index-weighted
/// mass `sum_i i * mass_i` found by Bland-rule simplex is returned, so the
/// output is a fixed function of the input data.
pub fn common_extension(
    nu1: &FinAddMeasure,
    nu2: &FinAddMeasure,
    ambient: &SetAlgebra,
) -> Result<FinAddMeasure, Error> {
    check_extension_inputs(nu1, nu2, ambient)?;
    let n = ambient.atom_count();
    let mut lp = LinearFeasibilityProblem::new(n);
    for nu in [nu1, nu2] {
        for (atom, mass) in nu.algebra().atoms().iter().zip(nu.atom_mass()) {
            let parts = ambient.decompose(atom).expect("subalgebra atom");
            let mut coeffs = vec![Rat::zero(); n];
            for p in parts {
                coeffs[p] = Rat::one();
            }
            lp.push(coeffs, Relation::Eq, mass.clone());
        }
    }
    lp.minimize((0..n).map(|i| rat_int(i as i64)).collect());
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            debug_assert!(lp.is_satisfied_by(&sol.values));
            let nu = FinAddMeasure::new(ambient.clone(), sol.values)?;
            debug_assert!(nu.is_probability());
            Ok(nu)
        }
        LpOutcome::Infeasible => Err(Error::Infeasible),
        LpOutcome::Unbounded => unreachable!("mass variables are bounded"),
    }
}

/// `inf { phi(h) : h in span(generators), h >= f0 pointwise }` as an exact LP
/// over the coefficients of `h`.
fn minimal_majorant_value(
    span: &SpannedFunctional,
    f0: &[Rat],
) -> Result<Rat, Error> {
    let gens: Vec<(&[Rat], &Rat)> = span.generators().collect();
    let k = gens.len();
    let mut lp = LinearFeasibilityProblem::all_free(k);
    for (point, bound) in f0.iter().enumerate() {
        let coeffs = gens.iter().map(|(g, _)| g[point].clone()).collect();
        lp.push(coeffs, Relation::Ge, bound.clone());
    }
    lp.minimize(gens.iter().map(|(_, v)| (*v).clone()).collect());
    match lp.solve() {
        LpOutcome::Optimal(sol) => Ok(sol.objective),
        LpOutcome::Infeasible => unreachable!("constants majorize every function"),
        LpOutcome::Unbounded => Err(Error::Unbounded),
    }
}

/// Extends a positive normalized functional from its subspace `W` to the
/// span of `v_basis`, one dimension at a time in the given order.
///
/// For each basis element not yet in the current span `U`, the new value is
/// `inf { Phi(h) : h in U, h >= f0 }`, the collapsed form of the two-step
/// infimum of the textbook positive-extension proof. The result is linear on
/// `V`, agrees with the input on `W`, keeps `Phi(1) = 1`, and stays
/// nonnegative on the nonnegative cone; nonnegativity is re-checked on every
/// atom indicator of the common level-set refinement that lies in `V`.
///
/// Validation order: ill-defined input, missing constants, wrong
/// normalization, and failure of positivity on `W+` are each rejected.
pub fn hahn_banach_extend(
    psi: &PositiveFunctional,
    v_basis: &[SimpleFunction],
) -> Result<PositiveFunctional, Error> {
    let ground = psi.ground().clone();
    let mut span = psi.spanned()?; // rejects ill-defined input

    let one = SimpleFunction::one(&ground);
    let psi_one = span.express(one.values()).ok_or(Error::ConstantsMissing)?;
    if !psi_one.is_one() {
        return Err(Error::NotNormalized(format_rat(&psi_one)));
    }
    check_positive_on_cone(psi)?;

    // W must sit inside span(V).
    let mut v_span = SpannedFunctional::new(ground.len());
    for f in v_basis {
        if f.ground() != &ground {
            return Err(Error::SpaceMismatch(
                "extension basis must live on the functional's ground space".into(),
            ));
        }
        let _ = v_span.insert(f.values(), Rat::zero());
    }
    for f in psi.basis() {
        if v_span.express(f.values()).is_none() {
            return Err(Error::NotInSpan);
        }
    }

    let mut values = Vec::with_capacity(v_basis.len());
    for f0 in v_basis {
        let value = match span.express(f0.values()) {
            Some(v) => v,
            None => {
                let v = minimal_majorant_value(&span, f0.values())?;
                span.insert(f0.values(), v.clone())
                    .expect("f0 is independent of the current span");
                v
            }
        };
        values.push(value);
    }

    let phi = PositiveFunctional::new(ground.clone(), v_basis.to_vec(), values)?;

    // Positivity re-check on the atom indicators of the level-set refinement
    // (these are exactly the indicators the construction consumes downstream).
    let mut generators: Vec<StateSet> = Vec::new();
    for f in v_basis.iter().chain(psi.basis()) {
        let mut distinct: Vec<&Rat> = f.values().iter().collect();
        distinct.sort();
        distinct.dedup();
        for v in distinct {
            generators.push(
                (0..ground.len())
                    .filter(|&i| &f.values()[i] == v)
                    .collect(),
            );
        }
    }
    let refinement = crate::algebra::generated_algebra(&ground, &generators);
    for atom in refinement.atoms() {
        let chi = SimpleFunction::indicator(&ground, atom);
        if let Ok(v) = phi.eval(&chi) {
            if v.is_negative() {
                return Err(Error::NotPositive(format_rat(&v)));
            }
        }
    }
    Ok(phi)
}

/// Positivity of a functional on its cone `W+`: the minimum of `psi(f)` over
/// `f in W` with `0 <= f <= 1` pointwise is 0 exactly when `psi >= 0` on
/// `W+` (the box is a base of the cone).
fn check_positive_on_cone(psi: &PositiveFunctional) -> Result<(), Error> {
    let span = psi.spanned()?;
    let gens: Vec<(&[Rat], &Rat)> = span.generators().collect();
    let k = gens.len();
    if k == 0 {
        return Ok(());
    }
    let n = psi.ground().len();
    let mut lp = LinearFeasibilityProblem::all_free(k);
    for point in 0..n {
        let coeffs: Vec<Rat> = gens.iter().map(|(g, _)| g[point].clone()).collect();
        lp.push(coeffs.clone(), Relation::Ge, Rat::zero());
        lp.push(coeffs, Relation::Le, Rat::one());
    }
    lp.minimize(gens.iter().map(|(_, v)| (*v).clone()).collect());
    match lp.solve() {
        LpOutcome::Optimal(sol) => {
            if sol.objective.is_negative() {
                Err(Error::NotPositive(format_rat(&sol.objective)))
            } else {
                Ok(())
            }
        }
        LpOutcome::Infeasible | LpOutcome::Unbounded => {
            unreachable!("the box program is feasible and bounded")
        }
    }
}

/// Re-types a finitely additive measure on the full powerset algebra as a
/// kernel row. For finite spaces finite additivity already gives countable
/// additivity, so this is an identity conversion with its precondition
/// checked: the algebra atoms must be singletons.
pub fn promote_to_sigma_additive(nu: &FinAddMeasure) -> Result<Vec<Rat>, Error> {
    let ground = nu.algebra().ground();
    if nu.algebra().atom_count() != ground.len() {
        return Err(Error::NotSingletonAtoms);
    }
    let mut row = vec![Rat::zero(); ground.len()];
    for (atom, mass) in nu.algebra().atoms().iter().zip(nu.atom_mass()) {
        debug_assert_eq!(atom.len(), 1);
        let &i = atom.iter().next().ok_or(Error::NotSingletonAtoms)?;
        row[i] = mass.clone();
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{generated_algebra, SetAlgebra};
    use crate::rational::rat;
    use crate::space::FinSpace;

    fn space(ids: &[&str]) -> FinSpace {
        FinSpace::from_ids(ids).unwrap()
    }

    fn set(items: &[usize]) -> StateSet {
        items.iter().copied().collect()
    }

    fn measure(ground: &FinSpace, blocks: Vec<StateSet>, masses: &[(i64, i64)]) -> FinAddMeasure {
        let algebra = SetAlgebra::from_partition(ground.clone(), blocks).unwrap();
        let masses = masses.iter().map(|&(p, q)| rat(p, q)).collect();
        FinAddMeasure::new(algebra, masses).unwrap()
    }

    #[test]
    fn strassen_holds_for_equal_measures_on_one_algebra() {
        let g = space(&["1", "2"]);
        let nu = measure(&g, vec![set(&[0]), set(&[1])], &[(1, 2), (1, 2)]);
        let ambient = SetAlgebra::powerset(&g);
        assert!(strassen_condition(&nu, &nu, &ambient).unwrap().holds());
    }

    #[test]
    fn strassen_detects_direct_violation() {
        let g = space(&["1", "2", "3", "4"]);
        let nu1 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(9, 10), (1, 10)]);
        let nu2 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(1, 10), (9, 10)]);
        let ambient = SetAlgebra::powerset(&g);
        let verdict = strassen_condition(&nu1, &nu2, &ambient).unwrap();
        let violation = verdict.witness().unwrap();
        assert_eq!(violation.set1, set(&[0, 1]));
        assert_eq!(violation.set2, set(&[2, 3]));
        assert_eq!(violation.sum, rat(9, 5));
    }

    #[test]
    fn strassen_holds_for_crossing_halves() {
        let g = space(&["1", "2", "3", "4"]);
        let nu1 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(1, 2), (1, 2)]);
        let nu2 = measure(&g, vec![set(&[0, 2]), set(&[1, 3])], &[(1, 2), (1, 2)]);
        let ambient = SetAlgebra::powerset(&g);
        assert!(strassen_condition(&nu1, &nu2, &ambient).unwrap().holds());
    }

    #[test]
    fn common_extension_of_crossing_halves_restricts_to_both() {
        let g = space(&["1", "2", "3", "4"]);
        let nu1 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(1, 2), (1, 2)]);
        let nu2 = measure(&g, vec![set(&[0, 2]), set(&[1, 3])], &[(1, 2), (1, 2)]);
        let ambient = SetAlgebra::powerset(&g);
        let nu = common_extension(&nu1, &nu2, &ambient).unwrap();
        assert!(nu.is_probability());
        assert_eq!(nu.restrict_to(nu1.algebra()).unwrap(), nu1);
        assert_eq!(nu.restrict_to(nu2.algebra()).unwrap(), nu2);
        // The objective ties on this instance (additive cost over a
        // transportation polytope); the pivot rule still pins one vertex.
        let again = common_extension(&nu1, &nu2, &ambient).unwrap();
        assert_eq!(nu, again);
    }

    #[test]
    fn common_extension_restricts_correctly_when_measures_coincide() {
        let g = space(&["1", "2", "3", "4"]);
        let nu = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(1, 3), (2, 3)]);
        let ambient = SetAlgebra::powerset(&g);
        let ext = common_extension(&nu, &nu, &ambient).unwrap();
        assert_eq!(ext.restrict_to(nu.algebra()).unwrap(), nu);
        // Mass piles on the least-index atom within each block.
        assert_eq!(ext.atom_mass(), &[rat(1, 3), rat(0, 1), rat(2, 3), rat(0, 1)]);
    }

    #[test]
    fn common_extension_fails_exactly_when_strassen_fails() {
        let g = space(&["1", "2", "3", "4"]);
        let nu1 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(9, 10), (1, 10)]);
        let nu2 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(1, 10), (9, 10)]);
        let ambient = SetAlgebra::powerset(&g);
        assert_eq!(common_extension(&nu1, &nu2, &ambient), Err(Error::Infeasible));
    }

    #[test]
    fn common_extension_rejects_subprobability_inputs() {
        let g = space(&["1", "2"]);
        let nu = measure(&g, vec![set(&[0]), set(&[1])], &[(1, 4), (1, 4)]);
        let ambient = SetAlgebra::powerset(&g);
        assert!(matches!(
            common_extension(&nu, &nu, &ambient),
            Err(Error::NotProbability(_))
        ));
    }

    #[test]
    fn extension_requires_subalgebras_of_the_ambient() {
        // nu lives on {1,2}|{3}, ambient atoms {1}|{2,3}: the atom {1,2}
        // splits the ambient atom {2,3}.
        let g = space(&["1", "2", "3"]);
        let nu = measure(&g, vec![set(&[0, 1]), set(&[2])], &[(1, 2), (1, 2)]);
        let ambient =
            SetAlgebra::from_partition(g.clone(), vec![set(&[0]), set(&[1, 2])]).unwrap();
        assert!(matches!(
            strassen_condition(&nu, &nu, &ambient),
            Err(Error::NotSubalgebra(_))
        ));
        assert!(matches!(
            common_extension(&nu, &nu, &ambient),
            Err(Error::NotSubalgebra(_))
        ));
    }

    #[test]
    fn hahn_banach_with_nothing_to_extend_is_identity() {
        let g = space(&["1", "2"]);
        let e0 = SimpleFunction::indicator(&g, &set(&[0]));
        let one = SimpleFunction::one(&g);
        let psi = PositiveFunctional::new(
            g.clone(),
            vec![one.clone(), e0.clone()],
            vec![rat(1, 1), rat(1, 4)],
        )
        .unwrap();
        let phi = hahn_banach_extend(&psi, &[one.clone(), e0.clone()]).unwrap();
        assert_eq!(phi.eval(&one).unwrap(), rat(1, 1));
        assert_eq!(phi.eval(&e0).unwrap(), rat(1, 4));
    }

    #[test]
    fn hahn_banach_extends_constants_minimally() {
        // W = constants on {1,2}; extending by chi_{1} gives the minimal
        // majorant value 1, hence chi_{2} gets 0.
        let g = space(&["1", "2"]);
        let one = SimpleFunction::one(&g);
        let psi = PositiveFunctional::new(g.clone(), vec![one.clone()], vec![rat(1, 1)]).unwrap();
        let e0 = SimpleFunction::indicator(&g, &set(&[0]));
        let e1 = SimpleFunction::indicator(&g, &set(&[1]));
        let phi = hahn_banach_extend(&psi, &[one, e0.clone(), e1.clone()]).unwrap();
        assert_eq!(phi.eval(&e0).unwrap(), rat(1, 1));
        assert_eq!(phi.eval(&e1).unwrap(), rat(0, 1));
    }

    #[test]
    fn hahn_banach_three_point_example() {
        // W = span{1, chi_{1,2}} on {1,2,3} with psi(chi_{1,2}) = 1/2;
        // extending by chi_{1} yields 1/2.
        let g = space(&["1", "2", "3"]);
        let one = SimpleFunction::one(&g);
        let chi12 = SimpleFunction::indicator(&g, &set(&[0, 1]));
        let psi = PositiveFunctional::new(
            g.clone(),
            vec![one.clone(), chi12.clone()],
            vec![rat(1, 1), rat(1, 2)],
        )
        .unwrap();
        let chi1 = SimpleFunction::indicator(&g, &set(&[0]));
        let phi = hahn_banach_extend(&psi, &[one, chi12, chi1.clone()]).unwrap();
        assert_eq!(phi.eval(&chi1).unwrap(), rat(1, 2));
    }

    #[test]
    fn hahn_banach_rejects_unnormalized_input() {
        let g = space(&["1", "2"]);
        let one = SimpleFunction::one(&g);
        let psi =
            PositiveFunctional::new(g.clone(), vec![one.clone()], vec![rat(2, 1)]).unwrap();
        assert!(matches!(
            hahn_banach_extend(&psi, &[one]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn hahn_banach_rejects_missing_constants() {
        let g = space(&["1", "2"]);
        let e0 = SimpleFunction::indicator(&g, &set(&[0]));
        let psi = PositiveFunctional::new(g.clone(), vec![e0.clone()], vec![rat(1, 1)]).unwrap();
        let one = SimpleFunction::one(&g);
        assert_eq!(hahn_banach_extend(&psi, &[one, e0]), Err(Error::ConstantsMissing));
    }

    #[test]
    fn hahn_banach_rejects_negative_functionals() {
        // psi(chi_{1}) = -1/2 is negative on W+.
        let g = space(&["1", "2"]);
        let one = SimpleFunction::one(&g);
        let e0 = SimpleFunction::indicator(&g, &set(&[0]));
        let psi = PositiveFunctional::new(
            g.clone(),
            vec![one.clone(), e0.clone()],
            vec![rat(1, 1), rat(-1, 2)],
        )
        .unwrap();
        let e1 = SimpleFunction::indicator(&g, &set(&[1]));
        assert!(matches!(
            hahn_banach_extend(&psi, &[one, e0, e1]),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn promote_requires_singleton_atoms() {
        let g = space(&["1", "2"]);
        let nu = measure(&g, vec![set(&[0, 1])], &[(1, 1)]);
        assert_eq!(promote_to_sigma_additive(&nu), Err(Error::NotSingletonAtoms));
    }

    #[test]
    fn promote_is_the_identity_on_singleton_masses() {
        let g = space(&["1", "2"]);
        let nu = measure(&g, vec![set(&[0]), set(&[1])], &[(1, 3), (2, 3)]);
        assert_eq!(promote_to_sigma_additive(&nu).unwrap(), vec![rat(1, 3), rat(2, 3)]);

        let zero = measure(&g, vec![set(&[0]), set(&[1])], &[(0, 1), (0, 1)]);
        assert_eq!(
            promote_to_sigma_additive(&zero).unwrap(),
            vec![rat(0, 1), rat(0, 1)]
        );

        let g4 = space(&["1", "2", "3", "4"]);
        let nu4 = measure(
            &g4,
            vec![set(&[0]), set(&[1]), set(&[2]), set(&[3])],
            &[(1, 6), (1, 3), (1, 6), (1, 3)],
        );
        let row = promote_to_sigma_additive(&nu4).unwrap();
        assert_eq!(row.iter().cloned().sum::<Rat>(), rat(1, 1));
    }

    #[test]
    fn generated_algebra_connects_to_extension() {
        // The ambient algebra generated by the two subalgebras is fine enough
        // to host the common extension of both.
        let g = space(&["1", "2", "3", "4"]);
        let nu1 = measure(&g, vec![set(&[0, 1]), set(&[2, 3])], &[(1, 2), (1, 2)]);
        let nu2 = measure(&g, vec![set(&[0, 2]), set(&[1, 3])], &[(1, 2), (1, 2)]);
        let generators: Vec<StateSet> = nu1
            .algebra()
            .atoms()
            .iter()
            .chain(nu2.algebra().atoms())
            .cloned()
            .collect();
        let ambient = generated_algebra(&g, &generators);
        let nu = common_extension(&nu1, &nu2, &ambient).unwrap();
        assert!(nu.is_probability());
    }
}
