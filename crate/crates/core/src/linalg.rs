//! Sparse Gaussian elimination over the rationals.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::rational::Rational;

/// A sparse row: column key to nonzero coefficient.
pub type SparseRow<C> = BTreeMap<C, Rational>;

/// Adds `factor * source` into `target`, dropping entries that cancel.
pub fn axpy<C: Ord + Clone>(target: &mut SparseRow<C>, factor: &Rational, source: &SparseRow<C>) {
    if factor.is_zero() {
        return;
    }
    for (col, value) in source {
        let entry = target.entry(col.clone()).or_insert_with(Rational::zero);
        *entry += factor * value;
        if entry.is_zero() {
            target.remove(col);
        }
    }
}

/// Pivot rows keyed by their pivot column, and the leftover rows.
pub type Reduction<C> = (Vec<(C, SparseRow<C>)>, Vec<SparseRow<C>>);

/// Fully reduces `rows`, choosing pivot columns in the order given by
/// `preference`.
///
/// Returns `(pivot column, row)` pairs where each row has coefficient 1 in
/// its pivot column and 0 in every other pivot column.  Rows that become
/// zero are dropped; rows with no entry in any preferred column are
/// returned in `leftover`.
pub fn reduce_rows<C: Ord + Clone>(rows: Vec<SparseRow<C>>, preference: &[C]) -> Reduction<C> {
    let mut pending: Vec<SparseRow<C>> = rows.into_iter().filter(|r| !r.is_empty()).collect();
    let mut pivots: Vec<(C, SparseRow<C>)> = Vec::new();
    for col in preference {
        let Some(pos) = pending.iter().position(|r| r.contains_key(col)) else {
            continue;
        };
        let mut row = pending.swap_remove(pos);
        let scale = row[col].recip();
        for value in row.values_mut() {
            *value *= &scale;
        }
        for other in pending.iter_mut() {
            if let Some(c) = other.get(col).cloned() {
                axpy(other, &-c, &row);
            }
        }
        for (_, other) in pivots.iter_mut() {
            if let Some(c) = other.get(col).cloned() {
                axpy(other, &-c, &row);
            }
        }
        pending.retain(|r| !r.is_empty());
        pivots.push((col.clone(), row));
    }
    (pivots, pending)
}

/// Rank of a set of sparse rows.
pub fn rank<C: Ord + Clone>(rows: Vec<SparseRow<C>>) -> usize {
    let mut columns: Vec<C> = rows.iter().flat_map(|r| r.keys().cloned()).collect();
    columns.sort();
    columns.dedup();
    reduce_rows(rows, &columns).0.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn row(entries: &[(u32, i64)]) -> SparseRow<u32> {
        entries.iter().map(|&(c, v)| (c, int(v))).collect()
    }

    #[test]
    fn reduces_with_preference() {
        let rows = vec![row(&[(0, 1), (1, 1)]), row(&[(1, 1), (2, 2)])];
        let (pivots, leftover) = reduce_rows(rows, &[2, 1]);
        assert!(leftover.is_empty());
        assert_eq!(pivots.len(), 2);
        assert_eq!(pivots[0].0, 2);
        // Pivot rows are cleared in each other's pivot columns.
        assert!(!pivots[0].1.contains_key(&1));
        assert_eq!(rank(vec![row(&[(0, 1)]), row(&[(0, 2)])]), 1);
    }
}
