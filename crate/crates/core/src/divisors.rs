//! Closed-form classes of the standard geometric divisors on `Y_{d,n}`.
//!
//! Every constructor returns a basis-reduced [`DivClass`].

use crate::error::{Error, Result};
use crate::markings::MarkingSet;
use crate::picard::{identify, reduce_to_basis, DivClass, GeneratorId, Profile};
use crate::rational::{int, pow, rat, Rational};
use crate::weights::is_valid_label;

/// Which coordinate of `P¹ × P¹` an evaluation class pulls back from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    /// The domain coordinate: `𝓗_{i,1}`.
    First,
    /// The target coordinate: `𝓗_{i,2}`.
    Second,
}

fn check_marking(n: usize, i: usize) -> Result<()> {
    if (1..=n).contains(&i) {
        Ok(())
    } else {
        Err(Error::MarkingOutOfRange { index: i, n })
    }
}

/// Valid boundary labels `(B, k)` with `k ≥ 1`.
fn positive_degree_labels(d: u32, n: usize) -> impl Iterator<Item = (MarkingSet, u32)> {
    (1..=d).flat_map(move |k| {
        MarkingSet::all_subsets(n)
            .filter(move |&s| is_valid_label(d, n, s, k))
            .map(move |s| (s, k))
    })
}

/// `𝓗_{i,1}` or `𝓗_{i,2}`.
pub fn class_h(d: u32, n: usize, i: usize, axis: Axis) -> Result<DivClass> {
    check_marking(n, i)?;
    let first = identify(&Profile::from_fn(d, n, |set, _| int(set.contains(i) as i64), int(0)));
    Ok(match axis {
        Axis::First => first,
        Axis::Second => &first.scaled(&int(d as i64)) + &class_hprime(d, n, i)?,
    })
}

/// `𝓗'_{i,2} = 𝓗_{i,2} − d·𝓗_{i,1}`.
pub fn class_hprime(d: u32, n: usize, i: usize) -> Result<DivClass> {
    check_marking(n, i)?;
    if d == 0 {
        return Ok(DivClass::generator(d, n, GeneratorId::G));
    }
    let mut out = DivClass::zero(d, n);
    for (set, k) in positive_degree_labels(d, n) {
        let mut c = rat((k * k) as i64, 2 * d as i64);
        if set.contains(i) {
            c -= int(k as i64);
        }
        out.add_term(GeneratorId::boundary(set, k), &c);
    }
    Ok(out)
}

/// The divisor `D_p` of maps through a fixed general point.
pub fn class_dp(d: u32, n: usize) -> DivClass {
    if d == 0 {
        return DivClass::generator(d, n, GeneratorId::G);
    }
    let mut out = DivClass::zero(d, n);
    for (set, k) in positive_degree_labels(d, n) {
        out.add_term(GeneratorId::boundary(set, k), &rat((k * k) as i64, 2 * d as i64));
    }
    out
}

/// The fixed-point divisor `D_{i=fix} = 𝓗_{i,1} + 𝓗_{i,2}`.
pub fn class_fix(d: u32, n: usize, i: usize) -> Result<DivClass> {
    Ok(&class_h(d, n, i, Axis::First)? + &class_h(d, n, i, Axis::Second)?)
}

/// The cotangent class `ψ_i`.  For `n ≥ 3` the two auxiliary markings are
/// the smallest indices different from `i`.
pub fn class_psi(d: u32, n: usize, i: usize) -> Result<DivClass> {
    check_marking(n, i)?;
    if n >= 3 {
        let mut others = (1..=n).filter(|&j| j != i);
        let (a, b) = (others.next().unwrap(), others.next().unwrap());
        return class_psi_with(d, n, i, a, b);
    }
    let mut out = class_h(d, n, i, Axis::First)?.scaled(&int(-2));
    for k in 0..=d {
        for set in MarkingSet::all_subsets(n) {
            if set.contains(i) && is_valid_label(d, n, set, k) {
                out.add_term(GeneratorId::boundary(set, k), &int(1));
            }
        }
    }
    Ok(out)
}

/// `ψ_i` on `Y_{d,n}` (`n ≥ 3`) through the auxiliary pair `(a, b)`: the
/// sum of `D_{B,k}` with `B` separating `i` from `{a, b}`.
pub fn class_psi_with(d: u32, n: usize, i: usize, a: usize, b: usize) -> Result<DivClass> {
    for j in [i, a, b] {
        check_marking(n, j)?;
    }
    if n < 3 || a == b || a == i || b == i {
        return Err(Error::InvalidExpression(format!(
            "psi needs three distinct markings, got i={i}, a={a}, b={b} with n={n}"
        )));
    }
    let mut out = DivClass::zero(d, n);
    for k in 0..=d {
        for set in MarkingSet::all_subsets(n) {
            let separates = if set.contains(i) {
                !set.contains(a) && !set.contains(b)
            } else {
                set.contains(a) && set.contains(b)
            };
            if separates && is_valid_label(d, n, set, k) {
                out.add_term(GeneratorId::boundary(set, k), &int(1));
            }
        }
    }
    Ok(reduce_to_basis(&out))
}

/// The class of `Per_m(λ)`, independent of the multiplier `λ ≠ 0`.
pub fn class_per(d: u32, n: usize, m: u32) -> Result<DivClass> {
    if m == 0 {
        return Err(Error::InvalidExpression("period must be at least 1".into()));
    }
    let scale = int(m as i64) * pow(&int(d as i64), m as i64 - 1);
    let mut out = DivClass::zero(d, n);
    for (set, k) in positive_degree_labels(d, n) {
        out.add_term(GeneratorId::boundary(set, k), &(&scale * int(k as i64)));
    }
    Ok(out)
}

/// The divisor of the pulled-back resultant, `Σ k² D_{B,k}`.
pub fn class_resultant(d: u32, n: usize) -> DivClass {
    let mut out = DivClass::zero(d, n);
    for (set, k) in positive_degree_labels(d, n) {
        out.add_term(GeneratorId::boundary(set, k), &int((k * k) as i64));
    }
    out
}

/// Tabulated coefficients of `𝓗'_{i,2}` at `(B, k)`, as a standalone oracle.
pub fn hprime_coefficient(d: u32, set: MarkingSet, k: u32, i: usize) -> Rational {
    if k == 0 {
        return int(0);
    }
    let base = rat((k * k) as i64, 2 * d as i64);
    if set.contains(i) {
        base - int(k as i64)
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picard::{basis, profile_of};

    fn parse(d: u32, n: usize, text: &str) -> DivClass {
        DivClass::parse(d, n, text).unwrap()
    }

    #[test]
    fn evaluation_classes() {
        assert_eq!(class_h(2, 1, 1, Axis::First).unwrap(), parse(2, 1, "H"));
        assert_eq!(class_h(0, 1, 1, Axis::Second).unwrap(), parse(0, 1, "G"));
        let h = class_h(2, 3, 1, Axis::First).unwrap();
        assert!(h.terms().all(|(g, _)| g.as_boundary().is_some()));
        assert!(!h.is_zero());
        assert!(class_h(2, 3, 4, Axis::First).is_err());
        for d in 0..=3 {
            for n in 1..=4 {
                for i in 1..=n {
                    let p = profile_of(&class_h(d, n, i, Axis::First).unwrap());
                    for (set, _, v) in p.entries() {
                        assert_eq!(*v, int(set.contains(i) as i64));
                    }
                }
            }
        }
    }

    #[test]
    fn hprime_examples() {
        assert_eq!(
            class_hprime(2, 1, 1).unwrap(),
            parse(2, 1, "1/4*D|B=|k=1 + D|B=|k=2 - 3/4*D|B=1|k=1 - D|B=1|k=2")
        );
        assert_eq!(class_hprime(0, 2, 1).unwrap(), parse(0, 2, "G"));
    }

    #[test]
    fn hprime_profile_matches_pairing_formula() {
        for d in 1..=3 {
            for n in 1..=4 {
                for i in 1..=n {
                    let p = profile_of(&class_hprime(d, n, i).unwrap());
                    for (set, k, v) in p.entries() {
                        let chi = set.contains(i) as i64;
                        assert_eq!(*v, int(k as i64 * (1 - 2 * chi)), "d={d} n={n} i={i} B={set} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn dp_examples() {
        assert_eq!(class_dp(2, 0), parse(2, 0, "1/4*D|B=|k=1 + D|B=|k=2"));
        assert_eq!(class_dp(0, 1), parse(0, 1, "G"));
        assert_eq!(class_dp(1, 0), parse(1, 0, "1/2*D|B=|k=1"));
    }

    #[test]
    fn fix_examples() {
        // Up to the unstable D_{{1},1}, which vanishes on M(1|1).
        let fix = class_fix(1, 1, 1).unwrap();
        assert_eq!(&fix + &parse(1, 1, "1/2*D|B=1|k=1"), parse(1, 1, "2*H + 1/2*D|B=|k=1"));
        let fix = class_fix(0, 2, 1).unwrap();
        assert_eq!(fix.coeff(GeneratorId::H), int(1));
        assert_eq!(fix.coeff(GeneratorId::G), int(1));
        for d in 0..=3 {
            for n in 1..=3 {
                for i in 1..=n {
                    let p = profile_of(&class_fix(d, n, i).unwrap());
                    for (set, k, v) in p.entries() {
                        let chi = set.contains(i) as i64;
                        let expected = chi * (1 + d as i64) + k as i64 * (1 - 2 * chi);
                        assert_eq!(*v, int(expected));
                    }
                }
            }
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(class_psi(2, 1, 1).unwrap(), parse(2, 1, "-2*H + D|B=1|k=1 + D|B=1|k=2"));
        assert_eq!(
            class_psi_with(0, 3, 1, 2, 3).unwrap(),
            class_psi_with(0, 3, 1, 3, 2).unwrap()
        );
        assert!(class_psi_with(1, 3, 1, 1, 2).is_err());
    }

    #[test]
    fn psi_independent_of_auxiliary_pair() {
        for d in 0..=2 {
            for n in 3..=5 {
                for i in 1..=n {
                    let reference = class_psi(d, n, i).unwrap();
                    for a in 1..=n {
                        for b in a + 1..=n {
                            if a != i && b != i {
                                assert_eq!(class_psi_with(d, n, i, a, b).unwrap(), reference);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn per_and_resultant() {
        assert_eq!(class_per(2, 0, 1).unwrap(), parse(2, 0, "D|B=|k=1 + 2*D|B=|k=2"));
        assert_eq!(class_per(2, 0, 2).unwrap(), parse(2, 0, "4*D|B=|k=1 + 8*D|B=|k=2"));
        assert_eq!(
            class_per(3, 1, 1).unwrap(),
            parse(
                3,
                1,
                "D|B=|k=1 + 2*D|B=|k=2 + 3*D|B=|k=3 + D|B=1|k=1 + 2*D|B=1|k=2 + 3*D|B=1|k=3"
            )
        );
        for d in 1..=3 {
            for m in 1..=4 {
                let scale = int(m as i64) * pow(&int(d as i64), m as i64 - 1);
                assert_eq!(class_per(d, 2, m).unwrap(), class_per(d, 2, 1).unwrap().scaled(&scale));
            }
        }
        assert!(class_per(2, 0, 0).is_err());
        assert_eq!(class_resultant(2, 0), parse(2, 0, "D|B=|k=1 + 4*D|B=|k=2"));
        assert_eq!(class_resultant(1, 1), parse(1, 1, "D|B=|k=1 + D|B=1|k=1"));
    }

    #[test]
    fn resultant_profile() {
        for d in 1..=3 {
            for n in 0..=3 {
                let p = profile_of(&class_resultant(d, n));
                for (set, k, v) in p.entries() {
                    let own = if is_valid_label(d, n, set, k) && k >= 1 {
                        2 * (k * k) as i64
                    } else {
                        0
                    };
                    let expected = own + 2 * k as i64 * (d as i64 - k as i64);
                    assert_eq!(*v, int(expected), "d={d} n={n} B={set} k={k}");
                }
            }
        }
    }

    #[test]
    fn constructors_are_basis_supported() {
        for d in 0..=3 {
            for n in 1..=4 {
                let gens = basis(d, n);
                for i in 1..=n {
                    for cls in [class_h(d, n, i, Axis::Second).unwrap(), class_psi(d, n, i).unwrap()] {
                        assert!(cls.terms().all(|(g, _)| gens.contains(&g)));
                    }
                }
            }
        }
    }

    #[test]
    fn hprime_table_oracle() {
        for d in 1..=3 {
            for n in 0..=3 {
                for i in 1..=n {
                    let cls = class_hprime(d, n, i).unwrap();
                    for (set, k) in positive_degree_labels(d, n) {
                        assert_eq!(
                            cls.coeff(GeneratorId::boundary(set, k)),
                            hprime_coefficient(d, set, k, i)
                        );
                    }
                }
            }
        }
    }
}
