use num_traits::Zero;
use proptest::prelude::*;
use selfmap_chow::divisors::{class_h, class_psi, Axis};
use selfmap_chow::engine::{intersect, intersect_restricting_along, surviving_generators};
use selfmap_chow::pullbacks::pullback_forget_last;
use selfmap_chow::rational::{int, rat};
use selfmap_chow::selfcheck::{divisor_equation_holds, monomials};
use selfmap_chow::{DivClass, GeneratorId, Rational, WeightTuple};

fn wt(d: u32, weights: &[(i64, i64)]) -> WeightTuple {
    WeightTuple::from_pairs(d, weights).unwrap()
}

fn generator_factors(wt: &WeightTuple, monomial: &[GeneratorId]) -> Vec<DivClass> {
    monomial
        .iter()
        .map(|&g| DivClass::generator(wt.degree(), wt.n(), g))
        .collect()
}

fn small_spaces() -> Vec<WeightTuple> {
    vec![
        wt(2, &[]),
        wt(2, &[(0, 1)]),
        wt(2, &[(0, 1), (0, 1)]),
        wt(1, &[(1, 2), (1, 1)]),
        wt(1, &[(1, 2), (0, 1), (1, 1)]),
        wt(0, &[(1, 2), (1, 2), (1, 2)]),
        wt(1, &[(1, 1)]),
    ]
}

#[test]
fn every_restriction_choice_agrees_on_small_spaces() {
    for space in small_spaces() {
        let survivors = surviving_generators(&space).unwrap();
        for monomial in monomials(&survivors, space.dimension() as usize) {
            let factors = generator_factors(&space, &monomial);
            let value = intersect(&space, &factors).unwrap();
            for (i, g) in monomial.iter().enumerate() {
                if g.as_boundary().is_some() {
                    let along = intersect_restricting_along(&space, &factors, i).unwrap();
                    assert_eq!(along, value, "{space} {monomial:?} along {g}");
                }
            }
        }
    }
}

#[test]
fn degree_three_restrictions_agree() {
    let space = wt(3, &[(1, 1)]);
    let survivors = surviving_generators(&space).unwrap();
    let all = monomials(&survivors, space.dimension() as usize);
    for monomial in all.iter().step_by(11) {
        let factors = generator_factors(&space, monomial);
        let value = intersect(&space, &factors).unwrap();
        for (i, g) in monomial.iter().enumerate() {
            if g.as_boundary().is_some() {
                assert_eq!(intersect_restricting_along(&space, &factors, i).unwrap(), value);
            }
        }
    }
}

#[test]
fn divisor_equations_for_a_new_marking() {
    for space in small_spaces() {
        let survivors = surviving_generators(&space).unwrap();
        for monomial in monomials(&survivors, space.dimension() as usize) {
            let factors = generator_factors(&space, &monomial);
            assert!(
                divisor_equation_holds(&space, &factors).unwrap(),
                "{space} {monomial:?}"
            );
        }
    }
}

#[test]
fn pulled_back_classes_vanish_above_the_base_dimension() {
    for space in [wt(2, &[]), wt(1, &[(1, 2), (1, 1)]), wt(0, &[(1, 1), (1, 1), (2, 1)])] {
        let (d, n) = (space.degree(), space.n());
        let mut weights = space.weights().to_vec();
        weights.push(Rational::zero());
        let big = WeightTuple::new(d, weights).unwrap();
        let survivors = surviving_generators(&space).unwrap();
        for monomial in monomials(&survivors, space.dimension() as usize + 1)
            .into_iter()
            .take(40)
        {
            let pulled: Vec<DivClass> = monomial
                .iter()
                .map(|&g| pullback_forget_last(&DivClass::generator(d, n, g)).unwrap())
                .collect();
            assert!(intersect(&big, &pulled).unwrap().is_zero(), "{space} {monomial:?}");
        }
    }
}

#[test]
fn dilaton_on_the_unmarked_quadratic_space() {
    let space = wt(2, &[(0, 1)]);
    let psi = class_psi(2, 2, 2).unwrap();
    let survivors = surviving_generators(&space).unwrap();
    for monomial in monomials(&survivors, 3) {
        let factors = generator_factors(&space, &monomial);
        let base = intersect(&space, &factors).unwrap();
        let big = wt(2, &[(0, 1), (0, 1)]);
        let mut pulled: Vec<DivClass> = factors.iter().map(|f| pullback_forget_last(f).unwrap()).collect();
        pulled.push(psi.clone());
        assert_eq!(intersect(&big, &pulled).unwrap(), -base);
    }
}

fn swap_markings(cls: &DivClass) -> DivClass {
    let (d, n) = (cls.d(), cls.n());
    let mut out = DivClass::zero(d, n);
    for (g, c) in cls.terms() {
        match g {
            GeneratorId::Boundary { set, k } => {
                let swapped = set.relabel(|i| match i {
                    1 => 2,
                    2 => 1,
                    other => other,
                });
                out.add_term(GeneratorId::boundary(swapped, k), c);
            }
            GeneratorId::H => out.add_scaled(&class_h(d, n, 2, Axis::First).unwrap(), c),
            GeneratorId::G => out.add_term(GeneratorId::G, c),
        }
    }
    out
}

#[test]
fn swapping_equal_weight_markings_preserves_numbers() {
    let space = wt(2, &[(0, 1), (0, 1)]);
    let survivors = surviving_generators(&space).unwrap();
    for monomial in monomials(&survivors, space.dimension() as usize).into_iter().step_by(3) {
        let factors = generator_factors(&space, &monomial);
        let swapped: Vec<DivClass> = factors.iter().map(swap_markings).collect();
        assert_eq!(
            intersect(&space, &swapped).unwrap(),
            intersect(&space, &factors).unwrap(),
            "{monomial:?}"
        );
    }
}

#[test]
fn reported_values() {
    let h = DivClass::parse(2, 1, "H").unwrap();
    assert_eq!(intersect(&wt(2, &[(0, 1)]), &vec![h; 3]).unwrap(), rat(-5, 48));
    let d2 = DivClass::parse(2, 2, "D|B=1,2|k=0").unwrap();
    assert_eq!(intersect(&wt(2, &[(0, 1), (0, 1)]), &vec![d2; 4]).unwrap(), rat(1, 6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn intersection_is_multilinear(
        picks in proptest::collection::vec(0usize..64, 3),
        a in -4i64..=4,
        b in 1i64..=3,
        c in -3i64..=3,
    ) {
        let space = wt(1, &[(1, 2), (0, 1), (1, 1)]);
        let survivors = surviving_generators(&space).unwrap();
        let g = |i: usize| DivClass::generator(1, 3, survivors[i % survivors.len()]);
        let rest: Vec<DivClass> = picks[2..].iter().map(|&i| g(i)).chain(std::iter::once(g(picks[1] + 1))).collect();
        let (x, y) = (g(picks[0]), g(picks[1]));
        let combo = x.scaled(&rat(a, b)) + y.scaled(&int(c));
        let with = |f: DivClass| {
            let mut all = vec![f];
            all.extend(rest.iter().cloned());
            intersect(&space, &all).unwrap()
        };
        let lhs = if combo.is_zero() { Rational::zero() } else { with(combo) };
        prop_assert_eq!(lhs, with(x) * rat(a, b) + with(y) * int(c));
    }
}
