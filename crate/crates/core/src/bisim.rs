//! Behavioral equivalence and bisimilarity for finite LMPs.
//!
//! Partition refinement computes the largest zigzag quotient of an LMP.
//! Joint refinement on a disjoint union decides whether two LMPs share that
//! quotient (behavioral equivalence, witnessed by a cospan), and the
//! semipullback turns the cospan into a span of zigzags (bisimilarity).

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::construct::{semipullback_lmp, LmpCospan, SemipullbackResult};
use crate::error::Error;
use crate::kernel::{Kernel, KernelKind, Lmp};
use crate::morphism::{is_zigzag, Morphism};
use crate::rational::Rat;
use crate::space::{FinSpace, StateId, StateSet};

/// A partition of an LMP state space with canonical block order (by least
/// member in ground order). Refinement only ever splits blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    space: FinSpace,
    blocks: Vec<StateSet>,
}

impl Partition {
    pub fn trivial(space: &FinSpace) -> Self {
        Partition {
            space: space.clone(),
            blocks: vec![space.full_set()],
        }
    }

    pub fn space(&self) -> &FinSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[StateSet] {
        &self.blocks
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&state))
            .expect("blocks cover the space")
    }

    /// Blocks as sets of ids, for order-insensitive comparisons.
    pub fn as_id_sets(&self) -> Vec<Vec<StateId>> {
        let mut sets: Vec<Vec<StateId>> = self
            .blocks
            .iter()
            .map(|b| self.space.render_set(b))
            .collect();
        for s in &mut sets {
            s.sort();
        }
        sets.sort();
        sets
    }

    fn canonicalize(&mut self) {
        self.blocks
            .sort_by_key(|b| *b.iter().next().expect("blocks are nonempty"));
    }

    /// One refinement round: split every block by the signature of its
    /// states (transition mass into every current block, per label).
    /// Returns whether anything changed.
    fn refine_step(&mut self, lmp: &Lmp) -> bool {
        let mut new_blocks = Vec::new();
        let mut changed = false;
        for block in &self.blocks {
            let mut groups: BTreeMap<Vec<Rat>, StateSet> = BTreeMap::new();
            for &s in block {
                let mut signature = Vec::new();
                for kernel in lmp.kernels() {
                    for target in &self.blocks {
                        signature.push(kernel.mass(s, target));
                    }
                }
                groups.entry(signature).or_default().insert(s);
            }
            if groups.len() > 1 {
                changed = true;
            }
            new_blocks.extend(groups.into_values());
        }
        self.blocks = new_blocks;
        self.canonicalize();
        changed
    }

    /// Refines to the coarsest partition where states in one block have
    /// equal mass into every block, for every label.
    pub fn refine_to_fixpoint(&mut self, lmp: &Lmp) {
        let mut rounds = 0;
        while self.refine_step(lmp) {
            rounds += 1;
            assert!(rounds <= lmp.space().len(), "refinement failed to converge");
        }
    }
}

/// Builds the quotient LMP of a stable partition, naming each block after
/// its least member, plus the quotient map.
fn quotient_of_partition(lmp: &Lmp, partition: &Partition) -> (Lmp, Morphism) {
    let block_names: Vec<StateId> = partition
        .blocks()
        .iter()
        .map(|b| lmp.space().id(*b.iter().next().expect("nonempty")).clone())
        .collect();
    let quotient_space = FinSpace::new(block_names).expect("block names are distinct");

    let kernels = lmp
        .kernels()
        .iter()
        .map(|kernel| {
            let rows = partition
                .blocks()
                .iter()
                .map(|block| {
                    let representative = *block.iter().next().expect("nonempty");
                    partition
                        .blocks()
                        .iter()
                        .map(|target| kernel.mass(representative, target))
                        .collect()
                })
                .collect();
            Kernel::new(
                quotient_space.clone(),
                quotient_space.clone(),
                KernelKind::Subprobability,
                rows,
            )
            .expect("quotient rows are square")
        })
        .collect();
    let quotient = Lmp::new(quotient_space.clone(), lmp.labels().to_vec(), kernels)
        .expect("quotient kernels share the quotient space");
    let q = Morphism::from_fn(lmp.space().clone(), quotient_space, |s| {
        partition.block_of(s)
    });
    (quotient, q)
}

/// The largest zigzag quotient of an LMP: refine the trivial partition to
/// the fixpoint and quotient by it. The returned map always passes the
/// zigzag check.
pub fn largest_zigzag_quotient(lmp: &Lmp) -> (Lmp, Morphism) {
    let mut partition = Partition::trivial(lmp.space());
    partition.refine_to_fixpoint(lmp);
    let (quotient, q) = quotient_of_partition(lmp, &partition);
    debug_assert!(is_zigzag(&q, lmp, &quotient)
        .expect("quotient shares labels and spaces")
        .holds());
    (quotient, q)
}

/// The fixpoint partition alone (for tests of refinement behavior).
pub fn bisimilarity_partition(lmp: &Lmp) -> Partition {
    let mut partition = Partition::trivial(lmp.space());
    partition.refine_to_fixpoint(lmp);
    partition
}

fn tag_space(space: &FinSpace, tag: &str) -> FinSpace {
    FinSpace::new(
        space
            .states()
            .iter()
            .map(|s| StateId::new(format!("{tag}{s}")))
            .collect(),
    )
    .expect("tagging preserves distinctness")
}

/// Disjoint union of two LMPs over the shared label set, with states of the
/// left operand first.
fn disjoint_union(s1: &Lmp, s2: &Lmp) -> Lmp {
    let n1 = s1.space().len();
    let n2 = s2.space().len();
    let left = tag_space(s1.space(), "1:");
    let right = tag_space(s2.space(), "2:");
    let mut ids = left.states().to_vec();
    ids.extend(right.states().iter().cloned());
    let space = FinSpace::new(ids).expect("tags keep sides apart");

    let kernels = s1
        .labels()
        .iter()
        .map(|label| {
            let k1 = s1.kernel(label).expect("shared labels");
            let k2 = s2.kernel(label).expect("shared labels");
            let mut rows = Vec::with_capacity(n1 + n2);
            for x in 0..n1 {
                let mut row = k1.row(x).to_vec();
                row.resize(n1 + n2, Rat::zero());
                rows.push(row);
            }
            for x in 0..n2 {
                let mut row = vec![Rat::zero(); n1];
                row.extend(k2.row(x).iter().cloned());
                rows.push(row);
            }
            Kernel::new(space.clone(), space.clone(), KernelKind::Subprobability, rows)
                .expect("square by construction")
        })
        .collect();
    Lmp::new(space, s1.labels().to_vec(), kernels).expect("labels shared")
}

/// Computes the largest quotients of both LMPs and, when they are isomorphic
/// (joint refinement on the disjoint union pairs every block across the two
/// sides), returns the witnessing cospan. `None` means the two LMPs are not
/// behaviorally equivalent.
pub fn cospan_from_quotients(s1: &Lmp, s2: &Lmp) -> Result<Option<LmpCospan>, Error> {
    if s1.labels() != s2.labels() {
        return Err(Error::LabelMismatch(format!(
            "left labels {:?} vs right labels {:?}",
            s1.labels(),
            s2.labels()
        )));
    }
    let union = disjoint_union(s1, s2);
    let partition = bisimilarity_partition(&union);
    let n1 = s1.space().len();

    // Behavioral equivalence at finite scale: every joint block must pair
    // states from both sides.
    let paired = partition
        .blocks()
        .iter()
        .all(|b| b.iter().any(|&i| i < n1) && b.iter().any(|&i| i >= n1));
    if !paired {
        return Ok(None);
    }

    // Apex: blocks named by their least left-side member's original id;
    // transition masses read off any representative.
    let block_names: Vec<StateId> = partition
        .blocks()
        .iter()
        .map(|b| {
            let least_left = *b.iter().find(|&&i| i < n1).expect("paired block");
            s1.space().id(least_left).clone()
        })
        .collect();
    let apex_space = FinSpace::new(block_names)?;
    let kernels = union
        .labels()
        .iter()
        .map(|label| {
            let k = union.kernel(label).expect("shared labels");
            let rows = partition
                .blocks()
                .iter()
                .map(|block| {
                    let representative = *block.iter().next().expect("nonempty");
                    partition
                        .blocks()
                        .iter()
                        .map(|target| k.mass(representative, target))
                        .collect()
                })
                .collect();
            Kernel::new(
                apex_space.clone(),
                apex_space.clone(),
                KernelKind::Subprobability,
                rows,
            )
            .expect("square by construction")
        })
        .collect();
    let apex = Lmp::new(apex_space.clone(), union.labels().to_vec(), kernels)?;

    let q1 = Morphism::from_fn(s1.space().clone(), apex_space.clone(), |s| {
        partition.block_of(s)
    });
    let q2 = Morphism::from_fn(s2.space().clone(), apex_space, |s| {
        partition.block_of(n1 + s)
    });
    LmpCospan::new(apex, s1.clone(), q1, s2.clone(), q2).map(Some)
}

/// Completes a behavioral-equivalence witness to a bisimilarity witness:
/// the semipullback span `S1 <- S3 -> S2`, both legs verified zigzags.
pub fn span_from_cospan(cospan: &LmpCospan) -> Result<SemipullbackResult, Error> {
    let result = semipullback_lmp(cospan)?;
    let vertex = result
        .vertex_lmp()
        .ok_or_else(|| Error::pipeline("span", "LMP pipeline must return an LMP vertex"))?;
    for (k, side) in [(&result.k1, cospan.left()), (&result.k2, cospan.right())] {
        if !is_zigzag(k, vertex, side)?.holds() {
            return Err(Error::pipeline("span", "projection is not a zigzag"));
        }
    }
    Ok(result)
}
