//! Independent oracles, deliberately sharing no code with the solver paths
//! they check: a vertex-enumeration LP minimizer with its own Gaussian
//! elimination, and brute-force set-quantified versions of the singleton
//! morphism checks and the Strassen condition.

use num_traits::Zero;

use semipullback::{FinAddMeasure, Kernel, Lmp, Morphism, Rat, StateSet};

/// Solves a square rational system `m x = rhs`; `None` when singular.
fn solve_square(m: &[Vec<Rat>], rhs: &[Rat]) -> Option<Vec<Rat>> {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m
        .iter()
        .zip(rhs)
        .map(|(row, r)| {
            assert_eq!(row.len(), n);
            let mut v = row.clone();
            v.push(r.clone());
            v
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot_row);
        let pivot = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &pivot;
        }
        let eliminated = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, p) in row.iter_mut().zip(&eliminated) {
                    *x -= &factor * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            go(i + 1, n, k, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `min { c . x : A x >= b, x free }` by enumerating basic solutions: every
/// nonsingular square subsystem yields a candidate vertex. Requires a
/// pointed feasible region (full column rank) and a bounded objective, both
/// of which hold for the majorant programs this oracle is used on. `None`
/// when no vertex is feasible.
pub fn minimize_by_vertex_enumeration(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> Option<Rat> {
    let k = c.len();
    assert!(a.iter().all(|row| row.len() == k));
    let mut best: Option<Rat> = None;
    for rows in combinations(a.len(), k) {
        let sub_a: Vec<Vec<Rat>> = rows.iter().map(|&r| a[r].clone()).collect();
        let sub_b: Vec<Rat> = rows.iter().map(|&r| b[r].clone()).collect();
        let Some(x) = solve_square(&sub_a, &sub_b) else {
            continue;
        };
        let feasible = a
            .iter()
            .zip(b)
            .all(|(row, bound)| row.iter().zip(&x).map(|(r, v)| r * v).sum::<Rat>() >= *bound);
        if !feasible {
            continue;
        }
        let value: Rat = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        best = Some(match best {
            None => value,
            Some(current) => {
                if value < current {
                    value
                } else {
                    current
                }
            }
        });
    }
    best
}

/// Kernel-morphism property quantified over all measurable sets (every
/// subset of the codomain), not just singletons.
pub fn kernel_morphism_brute_force(h: &Morphism, mu1: &Kernel, mu2: &Kernel) -> bool {
    if !h.is_surjective() {
        return false;
    }
    let n = h.codomain().len();
    assert!(n <= 16);
    for mask in 0u32..(1 << n) {
        let set: StateSet = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let fiber = h.preimage(&set);
        for x in 0..mu1.source().len() {
            if mu1.mass(x, &fiber) != mu2.mass(x, &set) {
                return false;
            }
        }
    }
    true
}

/// Zigzag property quantified over all subsets of the codomain, per label.
pub fn zigzag_brute_force(f: &Morphism, s: &Lmp, t: &Lmp) -> bool {
    if !f.is_surjective() {
        return false;
    }
    let n = f.codomain().len();
    assert!(n <= 16);
    for label in s.labels() {
        let tau_s = s.kernel(label).unwrap();
        let tau_t = t.kernel(label).unwrap();
        for mask in 0u32..(1 << n) {
            let set: StateSet = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let fiber = f.preimage(&set);
            for st in 0..s.space().len() {
                if tau_s.mass(st, &fiber) != tau_t.mass(f.apply(st), &set) {
                    return false;
                }
            }
        }
    }
    true
}

/// The Strassen condition by full quadratic enumeration of both algebras.
pub fn strassen_brute_force(nu1: &FinAddMeasure, nu2: &FinAddMeasure) -> bool {
    let one = semipullback::rat(1, 1);
    for a1 in nu1.algebra().enumerate_elements() {
        for a2 in nu2.algebra().enumerate_elements() {
            if a1.is_disjoint(&a2) {
                let sum = nu1.eval(&a1).unwrap() + nu2.eval(&a2).unwrap();
                if sum > one {
                    return false;
                }
            }
        }
    }
    true
}
