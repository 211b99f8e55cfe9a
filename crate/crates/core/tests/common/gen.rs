//! Seeded random generators for cospans, LMPs, measures and functions.
//! Every kernel morphism and zigzag is built as a quotient map (mass split
//! exactly across fibers), so legs satisfy their defining equations by
//! construction and the library re-derives them from scratch.

use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use semipullback::{
    FinAddMeasure, FinSpace, Kernel, KernelCospan, KernelKind, Lmp, Morphism, Rat, SetAlgebra,
    SimpleFunction, StateSet,
};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn rand_rat_unit(rng: &mut StdRng, max_den: i64) -> Rat {
    let den = rng.gen_range(1..=max_den);
    let num = rng.gen_range(0..=den);
    semipullback::rat(num, den)
}

/// A probability row: positive integer weights, normalized exactly.
pub fn rand_prob_row(rng: &mut StdRng, n: usize) -> Vec<Rat> {
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
    let total: i64 = weights.iter().sum();
    if total == 0 {
        let mut row = vec![Rat::zero(); n];
        row[rng.gen_range(0..n)] = semipullback::rat(1, 1);
        return row;
    }
    weights
        .into_iter()
        .map(|w| semipullback::rat(w, total))
        .collect()
}

/// A subprobability row: like a probability row with an extra weight of
/// lost mass.
pub fn rand_subprob_row(rng: &mut StdRng, n: usize) -> Vec<Rat> {
    let mut weights: Vec<i64> = (0..=n).map(|_| rng.gen_range(0..=6)).collect();
    let total: i64 = weights.iter().sum();
    if total == 0 {
        return vec![Rat::zero(); n];
    }
    weights.pop();
    weights
        .into_iter()
        .map(|w| semipullback::rat(w, total))
        .collect()
}

/// Splits `mass` into `parts` nonnegative rationals summing to it exactly.
pub fn split_mass(rng: &mut StdRng, mass: &Rat, parts: usize) -> Vec<Rat> {
    assert!(parts > 0);
    if mass.is_zero() {
        return vec![Rat::zero(); parts];
    }
    let mut weights: Vec<i64> = (0..parts).map(|_| rng.gen_range(0..=4)).collect();
    if weights.iter().all(|&w| w == 0) {
        weights[rng.gen_range(0..parts)] = 1;
    }
    let total: i64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| mass * semipullback::rat(w, total))
        .collect()
}

pub fn rand_space(prefix: &str, n: usize) -> FinSpace {
    let ids: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    FinSpace::from_ids(&ids).unwrap()
}

pub struct CospanParams {
    pub max_apex: usize,
    pub max_fiber: usize,
    pub max_x: usize,
    pub probability: bool,
    /// Force singleton fibers on the first leg (a deterministic leg).
    pub deterministic_leg1: bool,
}

impl Default for CospanParams {
    fn default() -> Self {
        CospanParams {
            max_apex: 3,
            max_fiber: 2,
            max_x: 4,
            probability: true,
            deterministic_leg1: false,
        }
    }
}

/// A random cospan whose legs are quotient maps: each side state space is a
/// disjoint union of fibers over the apex states and each side row splits
/// the corresponding apex mass across its fiber.
pub fn rand_quotient_cospan(rng: &mut StdRng, params: &CospanParams) -> KernelCospan {
    let n0 = rng.gen_range(1..=params.max_apex);
    let s0 = rand_space("u", n0);
    let nx = rng.gen_range(1..=params.max_x);
    let x = rand_space("x", nx);
    let kind = if params.probability {
        KernelKind::Probability
    } else {
        KernelKind::Subprobability
    };
    let mu0_rows: Vec<Vec<Rat>> = (0..nx)
        .map(|_| {
            if params.probability {
                rand_prob_row(rng, n0)
            } else {
                rand_subprob_row(rng, n0)
            }
        })
        .collect();
    let mu0 = Kernel::new(x.clone(), s0.clone(), kind, mu0_rows.clone()).unwrap();

    let mut side = |prefix: &str, deterministic: bool| -> (Kernel, Morphism) {
        let fibers: Vec<usize> = (0..n0)
            .map(|_| {
                if deterministic {
                    1
                } else {
                    rng.gen_range(1..=params.max_fiber)
                }
            })
            .collect();
        let mut ids = Vec::new();
        let mut to_apex = Vec::new();
        for (apex_state, &f) in fibers.iter().enumerate() {
            for c in 0..f {
                ids.push(format!("{prefix}{apex_state}_{c}"));
                to_apex.push(apex_state);
            }
        }
        let space = FinSpace::from_ids(&ids).unwrap();
        let rows: Vec<Vec<Rat>> = (0..nx)
            .map(|xi| {
                let mut row = Vec::with_capacity(space.len());
                for (apex_state, &f) in fibers.iter().enumerate() {
                    row.extend(split_mass(rng, &mu0_rows[xi][apex_state], f));
                }
                row
            })
            .collect();
        let kernel = Kernel::new(x.clone(), space.clone(), kind, rows).unwrap();
        let leg = Morphism::from_fn(space, s0.clone(), |i| to_apex[i]);
        (kernel, leg)
    };

    let (mu1, h1) = side("a", params.deterministic_leg1);
    let (mu2, h2) = side("b", false);
    KernelCospan::new(mu0, mu1, h1, mu2, h2).expect("legs are quotient maps by construction")
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("l{i}")).collect()
}

/// A random LMP with subprobability rows.
pub fn rand_lmp(rng: &mut StdRng, prefix: &str, n_states: usize, labels: &[String]) -> Lmp {
    let space = rand_space(prefix, n_states);
    let kernels = labels
        .iter()
        .map(|_| {
            let rows = (0..n_states).map(|_| rand_subprob_row(rng, n_states)).collect();
            Kernel::new(
                space.clone(),
                space.clone(),
                KernelKind::Subprobability,
                rows,
            )
            .unwrap()
        })
        .collect();
    Lmp::new(space, labels.to_vec(), kernels).unwrap()
}

/// Blows an LMP up along random fibers, splitting each transition mass
/// exactly across the target fiber: the projection is a zigzag by
/// construction.
pub fn rand_blowup(rng: &mut StdRng, base: &Lmp, prefix: &str, max_fiber: usize) -> (Lmp, Morphism) {
    let n = base.space().len();
    let fibers: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_fiber)).collect();
    let mut ids = Vec::new();
    let mut to_base = Vec::new();
    for (b, &f) in fibers.iter().enumerate() {
        for c in 0..f {
            ids.push(format!("{prefix}{}_{c}", base.space().id(b)));
            to_base.push(b);
        }
    }
    let space = FinSpace::from_ids(&ids).unwrap();
    let kernels = base
        .labels()
        .iter()
        .map(|label| {
            let tau = base.kernel(label).unwrap();
            let rows: Vec<Vec<Rat>> = (0..space.len())
                .map(|s| {
                    let b = to_base[s];
                    let mut row = Vec::with_capacity(space.len());
                    for (b_target, &f) in fibers.iter().enumerate() {
                        row.extend(split_mass(rng, &tau.row(b)[b_target], f));
                    }
                    row
                })
                .collect();
            Kernel::new(
                space.clone(),
                space.clone(),
                KernelKind::Subprobability,
                rows,
            )
            .unwrap()
        })
        .collect();
    let lmp = Lmp::new(space.clone(), base.labels().to_vec(), kernels).unwrap();
    let q = Morphism::from_fn(space, base.space().clone(), |i| to_base[i]);
    (lmp, q)
}

/// All partitions of `{0, .., n-1}` (Bell-number many).
pub fn all_partitions(n: usize) -> Vec<Vec<StateSet>> {
    fn go(i: usize, n: usize, current: &mut Vec<StateSet>, out: &mut Vec<Vec<StateSet>>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for b in 0..current.len() {
            current[b].insert(i);
            go(i + 1, n, current, out);
            current[b].remove(&i);
        }
        current.push(StateSet::from([i]));
        go(i + 1, n, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// A random probability measure on the atoms of an algebra.
pub fn rand_prob_measure(rng: &mut StdRng, algebra: &SetAlgebra) -> FinAddMeasure {
    FinAddMeasure::new(algebra.clone(), rand_prob_row(rng, algebra.atom_count())).unwrap()
}

/// A random rational-valued function with values in `0..=max_value` halves.
pub fn rand_simple_function(rng: &mut StdRng, ground: &FinSpace, max_den: i64) -> SimpleFunction {
    let values = (0..ground.len())
        .map(|_| rand_rat_unit(rng, max_den))
        .collect();
    SimpleFunction::new(ground.clone(), values)
}
