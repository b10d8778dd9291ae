//! Pullbacks of divisor classes along the composition map, the m-fold
//! self-composition map and the forgetful maps.

use crate::divisors::{class_dp, class_h, Axis};
use crate::error::{Error, Result};
use crate::markings::MarkingSet;
use crate::picard::{forgetful_boundary_pullback, reduce_to_basis, DivClass, GeneratorId};
use crate::rational::{int, Rational};
use crate::weights::is_valid_label;

/// Pullback along the composition `Y_{d1,n1} × Y_{d2,0} → Y_{d1·d2,n1}`.
///
/// Returns the components on the two factors; the input may mention
/// generators outside the basis.
pub fn pullback_compose(d1: u32, n1: usize, d2: u32, cls: &DivClass) -> Result<(DivClass, DivClass)> {
    cls.check_space(d1 * d2, n1)?;
    let mut first = DivClass::zero(d1, n1);
    let mut second = DivClass::zero(d2, 0);
    for (g, c) in cls.terms() {
        match g {
            GeneratorId::H => first.add_term(GeneratorId::H, c),
            GeneratorId::Boundary { set, k } => {
                for l in 0..=d1 {
                    if d2 * l == k && is_valid_label(d1, n1, set, l) {
                        first.add_term(GeneratorId::boundary(set, l), c);
                    }
                }
                if set.is_empty() && k >= 1 && k <= d2 {
                    second.add_term(GeneratorId::boundary(set, k), &(c * int(d1 as i64)));
                }
            }
            GeneratorId::G if d1 == 0 => {
                first.add_term(GeneratorId::G, &(c * int(d2 as i64)));
                second.add_scaled(&class_dp(d2, 0), c);
            }
            GeneratorId::G => second.add_term(GeneratorId::G, c),
        }
    }
    Ok((reduce_to_basis(&first), reduce_to_basis(&second)))
}

/// Pullback along `𝔰𝔠_m : Y_{d,n} → Y_{d^m,n}`, `f ↦ f^{∘m}`.
pub fn pullback_selfcompose(d: u32, n: usize, m: u32, cls: &DivClass) -> Result<DivClass> {
    if m == 0 {
        return Err(Error::InvalidExpression("self-composition needs m ≥ 1".into()));
    }
    let big = d
        .checked_pow(m)
        .ok_or_else(|| Error::InvalidExpression(format!("{d}^{m} overflows")))?;
    cls.check_space(big, n)?;
    let mut out = DivClass::zero(d, n);
    for (g, c) in cls.terms() {
        add_selfcompose_generator(d, n, m, g, c, &mut out);
    }
    Ok(reduce_to_basis(&out))
}

fn add_selfcompose_generator(d: u32, n: usize, m: u32, g: GeneratorId, c: &Rational, out: &mut DivClass) {
    if m == 1 {
        out.add_term(g, c);
        return;
    }
    let step = d.pow(m - 1);
    match g {
        GeneratorId::H | GeneratorId::G => out.add_term(g, c),
        GeneratorId::Boundary { set, k } if !set.is_empty() => {
            if let Some(l) = exact_quotient(k, step) {
                if is_valid_label(d, n, set, l) {
                    out.add_term(GeneratorId::boundary(set, l), c);
                }
            }
        }
        GeneratorId::Boundary { k, .. } => {
            if k <= d {
                let scaled = c * int(step as i64);
                for set in MarkingSet::all_subsets(n) {
                    if is_valid_label(d, n, set, k) {
                        out.add_term(GeneratorId::boundary(set, k), &scaled);
                    }
                }
            }
            if let Some(l) = exact_quotient(k, d).filter(|&l| l >= 1) {
                add_selfcompose_generator(d, n, m - 1, GeneratorId::boundary(MarkingSet::EMPTY, l), c, out);
            }
        }
    }
}

fn exact_quotient(k: u32, step: u32) -> Option<u32> {
    match step {
        0 => (k == 0).then_some(0),
        _ => k.is_multiple_of(step).then_some(k / step),
    }
}

/// Pullback of the boundary divisor `D(A;B)` of `M̄_{0,n}` to `Y_{d,n}`
/// (raw vector, not reduced).
pub fn pullback_forgetful_m0n(d: u32, n: usize, a: MarkingSet, b: MarkingSet) -> Result<DivClass> {
    if a.intersection(b) != MarkingSet::EMPTY || a.union(b) != MarkingSet::full(n) {
        return Err(Error::InvalidExpression(format!(
            "{a} and {b} do not partition {{1..{n}}}"
        )));
    }
    forgetful_boundary_pullback(d, n, a)
}

/// Pullback along the map `Y_{d,n+1} → Y_{d,n}` forgetting the last marking.
pub fn pullback_forget_last(cls: &DivClass) -> Result<DivClass> {
    let (d, n) = (cls.d(), cls.n());
    let extra = n + 1;
    let mut out = DivClass::zero(d, extra);
    for (g, c) in cls.terms() {
        match g {
            GeneratorId::Boundary { set, k } => {
                out.add_term(GeneratorId::boundary(set, k), c);
                out.add_term(GeneratorId::boundary(set.with(extra), k), c);
            }
            GeneratorId::H => out.add_scaled(&class_h(d, extra, 1, Axis::First)?, c),
            GeneratorId::G => out.add_term(GeneratorId::G, c),
        }
    }
    Ok(reduce_to_basis(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisors::class_per;
    use crate::picard::{basis, generators};
    use crate::rational::pow;

    fn parse(d: u32, n: usize, text: &str) -> DivClass {
        DivClass::parse(d, n, text).unwrap()
    }

    #[test]
    fn compose_examples() {
        let (a, b) = pullback_compose(2, 1, 2, &parse(4, 1, "H")).unwrap();
        assert_eq!((a, b), (parse(2, 1, "H"), DivClass::zero(2, 0)));
        let (a, b) = pullback_compose(2, 0, 2, &parse(4, 0, "D|B=|k=2")).unwrap();
        assert_eq!((a, b), (parse(2, 0, "D|B=|k=1"), parse(2, 0, "2*D|B=|k=2")));
        let (a, b) = pullback_compose(2, 1, 2, &parse(4, 1, "D|B=1|k=3")).unwrap();
        assert!(a.is_zero() && b.is_zero());
        assert!(pullback_compose(2, 1, 2, &parse(3, 1, "H")).is_err());
    }

    #[test]
    fn compose_constant_maps() {
        let (a, b) = pullback_compose(0, 3, 2, &parse(0, 3, "G")).unwrap();
        assert_eq!(a, parse(0, 3, "2*G"));
        assert_eq!(b, class_dp(2, 0));
        let (a, b) = pullback_compose(2, 3, 0, &parse(0, 3, "G")).unwrap();
        assert!(a.is_zero());
        assert_eq!(b, parse(0, 0, "G"));
    }

    #[test]
    fn selfcompose_examples() {
        for d in 1..=3u32 {
            for n in 0..=2 {
                for g in basis(d, n) {
                    let cls = DivClass::generator(d, n, g);
                    assert_eq!(pullback_selfcompose(d, n, 1, &cls).unwrap(), cls);
                }
            }
        }
        assert_eq!(
            pullback_selfcompose(2, 0, 2, &parse(4, 0, "D|B=|k=2")).unwrap(),
            parse(2, 0, "2*D|B=|k=2 + D|B=|k=1")
        );
        assert!(pullback_selfcompose(2, 0, 0, &parse(1, 0, "D|B=|k=1")).is_err());
    }

    #[test]
    fn selfcompose_of_per_one() {
        for d in 2..=3u32 {
            for m in 1..=3 {
                for n in 0..=1 {
                    let big = d.pow(m);
                    let per_one = class_per(big, n, 1).unwrap();
                    assert_eq!(
                        pullback_selfcompose(d, n, m, &per_one).unwrap(),
                        class_per(d, n, m).unwrap(),
                        "d={d} m={m} n={n}"
                    );
                }
            }
        }
    }

    /// `𝔰𝔠_m = 𝔠 ∘ (𝔰𝔠_{m−1} × F)` where `F : Y_{d,n} → Y_{d,0}` forgets
    /// every marking.
    fn factorized(d: u32, n: usize, m: u32, cls: &DivClass) -> DivClass {
        let (alpha, beta) = pullback_compose(d.pow(m - 1), n, d, cls).unwrap();
        let mut out = pullback_selfcompose(d, n, m - 1, &alpha).unwrap();
        for (g, c) in beta.terms() {
            match g {
                GeneratorId::Boundary { k, .. } => {
                    for set in MarkingSet::all_subsets(n) {
                        if is_valid_label(d, n, set, k) {
                            out.add_term(GeneratorId::boundary(set, k), c);
                        }
                    }
                }
                GeneratorId::G => out.add_term(GeneratorId::G, c),
                GeneratorId::H => unreachable!("Y_{{d,0}} has no H"),
            }
        }
        reduce_to_basis(&out)
    }

    #[test]
    fn selfcompose_factors_through_composition() {
        for d in 1..=3u32 {
            for m in 2..=3 {
                for n in 0..=3 {
                    for g in generators(d.pow(m), n) {
                        let cls = DivClass::generator(d.pow(m), n, g);
                        assert_eq!(
                            pullback_selfcompose(d, n, m, &cls).unwrap(),
                            factorized(d, n, m, &cls),
                            "d={d} m={m} n={n} g={g}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn selfcompose_of_target_evaluation_class() {
        for d in 2..=3u32 {
            for m in 1..=3 {
                for n in 1..=2 {
                    for i in 1..=n {
                        let big = class_h(d.pow(m), n, i, Axis::Second).unwrap();
                        let pulled = pullback_selfcompose(d, n, m, &big).unwrap();
                        let scale = pow(&int(d as i64), m as i64 - 1);
                        let geometric: Rational = (0..m.saturating_sub(1)).map(|j| pow(&int(d as i64), j as i64)).sum();
                        let expected = &class_h(d, n, i, Axis::Second).unwrap().scaled(&scale)
                            + &class_dp(d, n).scaled(&geometric);
                        assert_eq!(pulled, expected, "d={d} m={m} n={n} i={i}");
                        let rest = &pulled - &class_h(d, n, i, Axis::Second).unwrap().scaled(&scale);
                        assert_eq!(rest.coeff(GeneratorId::H), int(0));
                    }
                }
            }
        }
    }

    #[test]
    fn forgetful_m0n_examples() {
        let a = MarkingSet::from_indices([1, 2]);
        let b = MarkingSet::from_indices([3, 4]);
        let cls = pullback_forgetful_m0n(2, 4, a, b).unwrap();
        assert_eq!(cls.num_terms(), 6);
        let b = MarkingSet::from_indices([3, 4, 5]);
        for d in 0..=3 {
            assert_eq!(
                pullback_forgetful_m0n(d, 5, a, b).unwrap().num_terms(),
                2 * (d as usize + 1)
            );
        }
        assert!(pullback_forgetful_m0n(2, 5, a, MarkingSet::from_indices([3, 4])).is_err());
    }

    #[test]
    fn forget_last_preserves_profiles_on_old_curves() {
        use crate::picard::profile_of;
        for d in 0..=2 {
            for n in 1..=3 {
                for g in basis(d, n) {
                    let cls = DivClass::generator(d, n, g);
                    let lifted = pullback_forget_last(&cls).unwrap();
                    let (p, q) = (profile_of(&cls), profile_of(&lifted));
                    for (set, k, v) in p.entries() {
                        // The curve C_{B,k} with the new marking added on the
                        // side away from B maps onto C_{B,k}.
                        assert_eq!(q.value(set, k), *v, "d={d} n={n} g={g} B={set} k={k}");
                    }
                }
            }
        }
    }
}
