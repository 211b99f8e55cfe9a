//! Small exact linear algebra: incremental row reduction with an attached
//! linear-functional value per row. Supports span membership, functional
//! evaluation and consistency checking for functionals given by (basis,
//! values) pairs.

use num_traits::Zero;

use crate::rational::Rat;

/// One reduced generator together with the functional value it carries.
#[derive(Debug, Clone)]
struct ReducedRow {
    pivot: usize,
    vector: Vec<Rat>, // vector[pivot] == 1
    value: Rat,
}

/// Maintains a row-reduced spanning set of a subspace of Q^n along with a
/// linear functional defined on it.
#[derive(Debug, Clone, Default)]
pub(crate) struct SpannedFunctional {
    dim: usize,
    rows: Vec<ReducedRow>,
}

/// Result of reducing a vector against the current span.
pub(crate) enum Reduction {
    /// The vector lies in the span and the functional takes this value on it.
    InSpan(Rat),
    /// Residual after reduction, plus the functional value accumulated on the
    /// subtracted span component.
    Residual { vector: Vec<Rat>, partial_value: Rat },
}

impl SpannedFunctional {
    pub fn new(dim: usize) -> Self {
        SpannedFunctional { dim, rows: Vec::new() }
    }

    /// The independent generators currently stored, with their values.
    pub fn generators(&self) -> impl Iterator<Item = (&[Rat], &Rat)> {
        self.rows.iter().map(|r| (r.vector.as_slice(), &r.value))
    }

    pub fn reduce(&self, vector: &[Rat]) -> Reduction {
        assert_eq!(vector.len(), self.dim);
        let mut v = vector.to_vec();
        let mut value = Rat::zero();
        for row in &self.rows {
            let coeff = v[row.pivot].clone();
            if coeff.is_zero() {
                continue;
            }
            for (a, b) in v.iter_mut().zip(&row.vector) {
                *a -= &coeff * b;
            }
            value += coeff * &row.value;
        }
        if v.iter().all(Rat::is_zero) {
            Reduction::InSpan(value)
        } else {
            Reduction::Residual { vector: v, partial_value: value }
        }
    }

    /// Value of the functional if `vector` is in the span.
    pub fn express(&self, vector: &[Rat]) -> Option<Rat> {
        match self.reduce(vector) {
            Reduction::InSpan(v) => Some(v),
            Reduction::Residual { .. } => None,
        }
    }

    /// Extends the functional by `(vector, value)`.
    ///
    /// Returns `Ok(true)` if the vector was independent and got inserted,
    /// `Ok(false)` if it was already in the span with a matching value, and
    /// `Err(conflicting_value)` if it was in the span but the functional
    /// already assigns a different value (ill-defined input).
    pub fn insert(&mut self, vector: &[Rat], value: Rat) -> Result<bool, Rat> {
        match self.reduce(vector) {
            Reduction::InSpan(existing) => {
                if existing == value {
                    Ok(false)
                } else {
                    Err(existing)
                }
            }
            Reduction::Residual { vector: mut v, partial_value } => {
                let pivot = v
                    .iter()
                    .position(|c| !c.is_zero())
                    .expect("residual is nonzero");
                let lead = v[pivot].clone();
                for c in v.iter_mut() {
                    *c /= &lead;
                }
                let row_value = (value - partial_value) / lead;
                self.rows.push(ReducedRow { pivot, vector: v, value: row_value });
                Ok(true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn evaluates_linear_combinations() {
        let mut f = SpannedFunctional::new(3);
        assert!(f.insert(&v(&[1, 1, 1]), rat_int(1)).unwrap());
        assert!(f.insert(&v(&[1, 0, 0]), rat(1, 2)).unwrap());
        // 2*(1,1,1) - (1,0,0) = (1,2,2) with value 2 - 1/2
        assert_eq!(f.express(&v(&[1, 2, 2])), Some(rat(3, 2)));
        assert_eq!(f.express(&v(&[0, 0, 1])), None);
    }

    #[test]
    fn detects_inconsistent_values() {
        let mut f = SpannedFunctional::new(2);
        f.insert(&v(&[1, 0]), rat_int(1)).unwrap();
        f.insert(&v(&[0, 1]), rat_int(2)).unwrap();
        // (1,1) already has value 3; inserting with value 4 conflicts.
        assert_eq!(f.insert(&v(&[1, 1]), rat_int(4)), Err(rat_int(3)));
        assert_eq!(f.insert(&v(&[1, 1]), rat_int(3)), Ok(false));
    }
}
