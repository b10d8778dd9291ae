//! Weight tuples `(d | d₁, …, dₙ)`, admissibility, and the GIT stability
//! tests for boundary and fixed-point divisors.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::markings::MarkingSet;
use crate::rational::{format_rational, int, rat, Rational};

/// Map degree together with the nonnegative rational marking weights.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightTuple {
    degree: u32,
    weights: Vec<Rational>,
}

impl WeightTuple {
    pub fn new(degree: u32, weights: Vec<Rational>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::NegativeWeight(format_rational(w)));
        }
        if weights.len() > 62 {
            return Err(Error::Parse("at most 62 markings are supported".into()));
        }
        Ok(WeightTuple { degree, weights })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_pairs(degree: u32, weights: &[(i64, i64)]) -> Result<Self> {
        Self::new(degree, weights.iter().map(|&(p, q)| rat(p, q)).collect())
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Weight of marking `i` (1-based).
    pub fn weight(&self, i: usize) -> Result<&Rational> {
        self.check_marking(i)?;
        Ok(&self.weights[i - 1])
    }

    /// Dimension `2d − 2 + n` of the quotient.
    pub fn dimension(&self) -> i64 {
        2 * self.degree as i64 - 2 + self.n() as i64
    }

    /// `d_T = d + 1 + Σ dᵢ`.
    pub fn total_weight(&self) -> Rational {
        self.weights.iter().fold(int(self.degree as i64 + 1), |acc, w| acc + w)
    }

    /// Least common multiple of the weight denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()))
    }

    /// `L · d_T` with `L` the denominator lcm; always an integer.
    pub fn scaled_total(&self) -> BigInt {
        let scaled = self.total_weight() * Rational::from_integer(self.denominator_lcm());
        debug_assert!(scaled.is_integer());
        scaled.to_integer()
    }

    /// Admissible iff some integer multiple clears the denominators and makes
    /// `k(d+1) + Σ k dᵢ` odd, which happens exactly when `L · d_T` is odd.
    pub fn is_admissible(&self) -> bool {
        self.scaled_total().is_odd()
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::Inadmissible(self.scaled_total().to_string()))
        }
    }

    fn check_marking(&self, i: usize) -> Result<()> {
        if (1..=self.n()).contains(&i) {
            Ok(())
        } else {
            Err(Error::MarkingOutOfRange { index: i, n: self.n() })
        }
    }

    fn check_label(&self, set: MarkingSet, k: u32) -> Result<()> {
        if !is_valid_label(self.degree, self.n(), set, k) {
            return Err(Error::InvalidLabel {
                set: set.to_string(),
                k,
                d: self.degree,
            });
        }
        Ok(())
    }

    fn subset_weight(&self, set: MarkingSet) -> Rational {
        set.iter().fold(Rational::zero(), |acc, i| acc + &self.weights[i - 1])
    }

    /// The boundary divisor `D_{B,k}` meets the stable locus iff
    /// `k + Σ_{i∈B} dᵢ < d_T / 2`.
    pub fn boundary_stable(&self, set: MarkingSet, k: u32) -> Result<bool> {
        self.check_label(set, k)?;
        let lhs = int(k as i64) + self.subset_weight(set);
        let half = self.total_weight() / int(2);
        if self.is_admissible() {
            assert!(lhs != half, "equality in the stability test for an admissible tuple");
        }
        Ok(lhs < half)
    }

    /// The fixed-point divisor of marking `i` meets the stable locus iff
    /// `dᵢ < d_T / 2 − 1`.
    pub fn fix_stable(&self, i: usize) -> Result<bool> {
        self.check_marking(i)?;
        let rhs = self.total_weight() / int(2) - int(1);
        if self.is_admissible() {
            assert!(
                self.weights[i - 1] != rhs,
                "equality in the fixed-point test for an admissible tuple"
            );
        }
        Ok(self.weights[i - 1] < rhs)
    }

    /// Weights on the horizontal side of `D_{B,k}`: degree `d − k`, the
    /// weights of the complement of `B` in order, then `k + Σ_{b∈B} d_b` for
    /// the gluing point.
    pub fn restrict_weights(&self, set: MarkingSet, k: u32) -> Result<WeightTuple> {
        if !self.boundary_stable(set, k)? {
            return Err(Error::UnstableBoundary {
                set: set.to_string(),
                k,
            });
        }
        let mut weights: Vec<Rational> = (1..=self.n())
            .filter(|&i| !set.contains(i))
            .map(|i| self.weights[i - 1].clone())
            .collect();
        weights.push(int(k as i64) + self.subset_weight(set));
        Ok(WeightTuple {
            degree: self.degree - k,
            weights,
        })
    }

    /// Whether the quotient has stable points.
    ///
    /// The generic point of `Y_{d,n}` (no vertical components, markings at
    /// distinct non-fixed points) is stable iff every `dᵢ < d_T/2` and the
    /// fixed points pass, i.e. `1 < d_T/2`.  Stability is open and the
    /// generic locus is dense, so this decides nonemptiness.
    pub fn is_nonempty(&self) -> bool {
        let half = self.total_weight() / int(2);
        half > int(1) && self.weights.iter().all(|w| *w < half)
    }
}

/// Valid boundary labels: `0 ≤ k ≤ d` and (`k ≥ 1` or `|B| ≥ 2`), with `B`
/// inside `{1, …, n}`.
pub fn is_valid_label(d: u32, n: usize, set: MarkingSet, k: u32) -> bool {
    k <= d && (k >= 1 || set.len() >= 2) && set.is_subset(MarkingSet::full(n))
}

impl fmt::Display for WeightTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(format_rational).collect();
        write!(f, "({}|{})", self.degree, parts.join(","))
    }
}

impl fmt::Debug for WeightTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wt(d: u32, w: &[(i64, i64)]) -> WeightTuple {
        WeightTuple::from_pairs(d, w).unwrap()
    }

    /// Literal reading of the definition: search for a multiplier `k`.
    fn admissible_by_search(t: &WeightTuple) -> bool {
        let l = t.denominator_lcm();
        let bound = i64::try_from(l * 2).unwrap();
        (1..=bound).any(|k| {
            let kq = int(k);
            let scaled: Vec<Rational> = t.weights().iter().map(|w| w * &kq).collect();
            if !scaled.iter().all(|w| w.is_integer()) {
                return false;
            }
            let total = scaled.iter().fold(int(k * (t.degree() as i64 + 1)), |a, w| a + w);
            total.to_integer().is_odd()
        })
    }

    #[test]
    fn admissibility_examples() {
        assert!(wt(2, &[]).is_admissible());
        assert!(!wt(1, &[]).is_admissible());
        assert!(wt(1, &[(1, 1)]).is_admissible());
        assert!(!wt(0, &[(1, 1), (1, 1), (1, 1)]).is_admissible());
        assert!(wt(0, &[(1, 2), (1, 2), (1, 2)]).is_admissible());
    }

    #[test]
    fn total_weight_examples() {
        assert_eq!(wt(2, &[]).total_weight(), int(3));
        assert_eq!(wt(0, &[(1, 1), (1, 1)]).total_weight(), int(3));
        assert_eq!(wt(0, &[(1, 2), (1, 2), (1, 2)]).total_weight(), rat(5, 2));
    }

    #[test]
    fn stability_examples() {
        assert!(wt(2, &[]).boundary_stable(MarkingSet::EMPTY, 1).unwrap());
        assert!(!wt(2, &[]).boundary_stable(MarkingSet::EMPTY, 2).unwrap());
        assert!(!wt(1, &[(1, 1)]).boundary_stable(MarkingSet::singleton(1), 1).unwrap());
        assert!(wt(2, &[]).boundary_stable(MarkingSet::EMPTY, 0).is_err());
        assert!(!wt(1, &[(1, 1)]).fix_stable(1).unwrap());
        assert!(wt(2, &[(0, 1)]).fix_stable(1).unwrap());
        assert!(!wt(0, &[(1, 1), (1, 1)]).fix_stable(1).unwrap());
        assert!(wt(0, &[(1, 1), (1, 1)]).fix_stable(3).is_err());
    }

    #[test]
    fn restriction_examples() {
        assert_eq!(
            wt(2, &[]).restrict_weights(MarkingSet::EMPTY, 1).unwrap(),
            wt(1, &[(1, 1)])
        );
        assert_eq!(
            wt(3, &[]).restrict_weights(MarkingSet::EMPTY, 1).unwrap(),
            wt(2, &[(1, 1)])
        );
        assert_eq!(
            wt(2, &[(1, 2), (1, 2)])
                .restrict_weights(MarkingSet::singleton(2), 1)
                .unwrap(),
            wt(1, &[(1, 2), (3, 2)])
        );
        assert!(wt(2, &[]).restrict_weights(MarkingSet::EMPTY, 2).is_err());
    }

    #[test]
    fn nonemptiness_matches_small_cases() {
        assert!(wt(0, &[(1, 1), (1, 1)]).is_nonempty());
        assert!(!wt(0, &[(3, 1), (1, 1)]).is_nonempty());
        assert!(wt(1, &[(1, 1)]).is_nonempty());
        assert!(!wt(1, &[(3, 1)]).is_nonempty());
        assert!(wt(2, &[]).is_nonempty());
    }

    /// Every tuple with `d ≤ 3`, `n ≤ 3` and weights in `{0, 1/4, …, 2}`.
    fn desk_scale_tuples() -> Vec<WeightTuple> {
        let grid: Vec<Rational> = (0..=8).map(|p| rat(p, 4)).collect();
        let mut out = Vec::new();
        for d in 0..=3u32 {
            for n in 0..=3usize {
                let mut idx = vec![0usize; n];
                loop {
                    out.push(WeightTuple::new(d, idx.iter().map(|&i| grid[i].clone()).collect()).unwrap());
                    let mut pos = 0;
                    while pos < n && idx[pos] == grid.len() - 1 {
                        idx[pos] = 0;
                        pos += 1;
                    }
                    if pos == n {
                        break;
                    }
                    idx[pos] += 1;
                }
            }
        }
        out
    }

    #[test]
    fn restriction_preserves_total_and_admissibility_exhaustively() {
        for t in desk_scale_tuples() {
            let admissible = t.is_admissible();
            for set in MarkingSet::all_subsets(t.n()) {
                for k in 0..=t.degree() {
                    if !is_valid_label(t.degree(), t.n(), set, k) || !admissible {
                        continue;
                    }
                    if t.boundary_stable(set, k).unwrap() {
                        let r = t.restrict_weights(set, k).unwrap();
                        assert_eq!(r.total_weight(), t.total_weight());
                        assert!(r.is_admissible(), "{t} restricted along {set},{k}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn admissibility_agrees_with_search(
            d in 0u32..4,
            w in proptest::collection::vec((0i64..9, 1i64..7), 0..4)
        ) {
            let t = WeightTuple::from_pairs(d, &w).unwrap();
            prop_assert_eq!(t.is_admissible(), admissible_by_search(&t));
        }
    }
}
