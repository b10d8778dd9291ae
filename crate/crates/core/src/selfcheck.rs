//! Invariant suites shared by the acceptance tests and the `selfcheck`
//! command.  Each suite returns a [`SuiteReport`] rather than panicking.

use std::time::Instant;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divisors::{
    class_dp, class_h, class_hprime, class_per, class_psi, class_psi_with, hprime_coefficient, Axis,
};
use crate::engine::{intersect, intersect_restricting_along, intersect_unreduced, surviving_generators};
use crate::equivloc::{integrate_ev_psi, EquivPoly};
use crate::error::Result;
use crate::markings::MarkingSet;
use crate::picard::{
    basis, closed_rank_formula, generators, identify, keel_relations, profile_of, DivClass, GeneratorId,
};
use crate::pullbacks::{pullback_forget_last, pullback_selfcompose};
use crate::rational::{int, rat, Rational};
use crate::weights::{is_valid_label, WeightTuple};

/// How much of each suite to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Degrees up to 2.
    Quick,
    /// Adds randomized degree-3 cases.
    Full,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }
}

struct Recorder {
    checks: usize,
    failures: Vec<String>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(describe());
        }
    }

    fn result<T: PartialEq + std::fmt::Display>(
        &mut self,
        got: Result<T>,
        expected: &T,
        what: impl FnOnce() -> String,
    ) {
        match got {
            Ok(v) => {
                let ok = v == *expected;
                self.check(ok, || format!("{}: got {v}, expected {expected}", what()));
            }
            Err(e) => self.check(false, || format!("{}: error {e}", what())),
        }
    }
}

fn run(name: &'static str, body: impl FnOnce(&mut Recorder) -> Result<()>) -> SuiteReport {
    let start = Instant::now();
    let mut rec = Recorder::new();
    if let Err(e) = body(&mut rec) {
        rec.failures.push(format!("aborted: {e}"));
    }
    SuiteReport {
        name,
        checks: rec.checks,
        failures: rec.failures,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// All suites in acceptance order.
pub fn run_all(level: Level) -> Vec<SuiteReport> {
    vec![
        picard_rank(),
        identification_round_trip(),
        closed_form_classes(),
        pullback_identities(),
        base_intersections(),
        localization_oracles(level),
        boundary_choice_independence(level),
        relation_annihilation(level),
        psi_consistency(level),
    ]
}

/// Basis sizes against the closed rank formula (`n ≥ 3`) and the direct
/// generator count (`n ≤ 2`).
pub fn picard_rank() -> SuiteReport {
    run("picard rank", |rec| {
        for d in 0..=3 {
            for n in 3..=5 {
                let size = basis(d, n).len() as i64;
                rec.check(size == closed_rank_formula(d, n), || {
                    format!("d={d} n={n}: |basis| = {size}")
                });
            }
            for n in 0..=2 {
                let (size, count) = (basis(d, n).len(), generators(d, n).len());
                rec.check(size == count, || {
                    format!("d={d} n={n}: |basis| = {size}, generators = {count}")
                });
            }
        }
        Ok(())
    })
}

pub fn identification_round_trip() -> SuiteReport {
    run("identification round trip", |rec| {
        for d in 0..=3 {
            for n in 0..=4 {
                for g in basis(d, n) {
                    let cls = DivClass::generator(d, n, g);
                    rec.check(identify(&profile_of(&cls)) == cls, || format!("d={d} n={n} {g}"));
                }
            }
        }
        Ok(())
    })
}

/// `𝓗'_{i,2}` and `D_p` against their coefficient tables.
pub fn closed_form_classes() -> SuiteReport {
    run("closed-form classes", |rec| {
        for d in 0..=3u32 {
            for n in 0..=3 {
                let mut dp = DivClass::zero(d, n);
                if d == 0 {
                    dp.add_term(GeneratorId::G, &int(1));
                }
                for k in 1..=d {
                    for set in MarkingSet::all_subsets(n) {
                        if is_valid_label(d, n, set, k) {
                            dp.add_term(GeneratorId::boundary(set, k), &rat((k * k) as i64, 2 * d as i64));
                        }
                    }
                }
                rec.check(class_dp(d, n) == dp, || format!("D_p on Y_{{{d},{n}}}"));
                for i in 1..=n {
                    let mut table = DivClass::zero(d, n);
                    if d == 0 {
                        table.add_term(GeneratorId::G, &int(1));
                    }
                    for k in 1..=d {
                        for set in MarkingSet::all_subsets(n) {
                            if is_valid_label(d, n, set, k) {
                                table.add_term(GeneratorId::boundary(set, k), &hprime_coefficient(d, set, k, i));
                            }
                        }
                    }
                    rec.check(class_hprime(d, n, i)? == table, || {
                        format!("H'_{{{i},2}} on Y_{{{d},{n}}}")
                    });
                }
            }
        }
        let d2 = DivClass::parse(2, 0, "1/4*D|B=|k=1 + D|B=|k=2")?;
        rec.check(class_dp(2, 0) == d2, || "D_p on Y_{2,0}".into());
        Ok(())
    })
}

/// `𝔰𝔠_m*(Per₁) = Per_m`.
pub fn pullback_identities() -> SuiteReport {
    run("pullback identities", |rec| {
        for d in 2..=3u32 {
            for m in 1..=3u32 {
                for n in 0..=1 {
                    let per_one = class_per(d.pow(m), n, 1)?;
                    let pulled = pullback_selfcompose(d, n, m, &per_one)?;
                    let expected = class_per(d, n, m)?;
                    rec.check(pulled == expected, || {
                        format!("d={d} m={m} n={n}: {pulled} vs {expected}")
                    });
                }
            }
        }
        Ok(())
    })
}

pub fn base_intersections() -> SuiteReport {
    run("base intersection numbers", |rec| {
        type Case = (u32, &'static [(i64, i64)], &'static [&'static str], Rational);
        let cases: [Case; 6] = [
            (2, &[], &["D|B=|k=1", "D|B=|k=1"], int(1)),
            (1, &[(1, 1)], &["H"], rat(-1, 4)),
            (1, &[(1, 1)], &["D|B=|k=1"], int(1)),
            (0, &[(1, 1), (1, 1)], &[], int(1)),
            (0, &[(2, 1), (2, 1), (2, 1)], &["G"], int(1)),
            (0, &[(1, 2), (1, 2), (1, 2)], &["G"], rat(-1, 2)),
        ];
        for (d, weights, factors, expected) in cases {
            let wt = WeightTuple::from_pairs(d, weights)?;
            let factors = factors
                .iter()
                .map(|f| DivClass::parse(d, wt.n(), f))
                .collect::<Result<Vec<_>>>()?;
            rec.result(intersect(&wt, &factors), &expected, || format!("{wt} {factors:?}"));
        }
        Ok(())
    })
}

pub fn localization_oracles(level: Level) -> SuiteReport {
    run("localization oracles", |rec| {
        rec.result(
            integrate_ev_psi(2, 1, &[1, 1], &[0, 0]),
            &EquivPoly::constant(int(1)),
            || "ev1 ev2".into(),
        );
        rec.result(
            integrate_ev_psi(1, 1, &[0], &[1]),
            &EquivPoly::constant(int(-2)),
            || "psi1".into(),
        );
        rec.result(integrate_ev_psi(1, 1, &[2], &[0]), &EquivPoly::zero(), || {
            "ev1^2".into()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let samples = if level == Level::Full { 400 } else { 150 };
        for _ in 0..samples {
            let k = rng.gen_range(1..=3u32);
            let n = rng.gen_range(0..=4usize);
            let dim = (2 * k as usize + n).saturating_sub(2);
            let target = dim + rng.gen_range(0..=3usize);
            let (mut ev, mut psi) = (vec![0u32; n], vec![0u32; n]);
            if n > 0 {
                for _ in 0..target {
                    let i = rng.gen_range(0..n);
                    if rng.gen_bool(0.5) {
                        ev[i] += 1;
                    } else {
                        psi[i] += 1;
                    }
                }
            }
            match integrate_ev_psi(n, k, &ev, &psi) {
                Ok(p) => rec.check(!p.has_odd_terms(), || {
                    format!("odd t-power: n={n} k={k} {ev:?} {psi:?} -> {p}")
                }),
                Err(e) => rec.check(false, || format!("n={n} k={k} {ev:?} {psi:?}: {e}")),
            }
        }
        Ok(())
    })
}

/// Small admissible, nonempty weight tuples with weights in `{0, ½, 1, 3/2, 2}`.
pub fn small_weight_tuples(max_degree: u32, max_markings: usize) -> Vec<WeightTuple> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for n in 0..=max_markings {
            let mut halves = vec![0i64; n];
            loop {
                let pairs: Vec<(i64, i64)> = halves.iter().map(|&h| (h, 2)).collect();
                if let Ok(wt) = WeightTuple::from_pairs(d, &pairs) {
                    if wt.is_admissible() && wt.is_nonempty() {
                        out.push(wt);
                    }
                }
                // Non-decreasing weight vectors only: markings are symmetric.
                let Some(pos) = (0..n).rev().find(|&i| halves[i] < 4) else {
                    break;
                };
                halves[pos] += 1;
                for j in pos + 1..n {
                    halves[j] = halves[pos];
                }
            }
        }
    }
    out
}

/// A random query on `wt` with at least two distinct boundary factors.
fn random_boundary_query(rng: &mut ChaCha8Rng, wt: &WeightTuple) -> Result<Option<Vec<DivClass>>> {
    let survivors = surviving_generators(wt)?;
    let boundary: Vec<GeneratorId> = survivors
        .iter()
        .copied()
        .filter(|g| g.as_boundary().is_some())
        .collect();
    let dim = wt.dimension() as usize;
    if boundary.len() < 2 || dim < 2 {
        return Ok(None);
    }
    let (d, n) = (wt.degree(), wt.n());
    let picked: Vec<GeneratorId> = boundary.choose_multiple(rng, 2).copied().collect();
    let mut factors: Vec<DivClass> = picked.iter().map(|&g| DivClass::generator(d, n, g)).collect();
    while factors.len() < dim {
        let g = *survivors.choose(rng).unwrap();
        if rng.gen_bool(0.3) {
            // Occasionally a genuine linear combination.
            let h = *survivors.choose(rng).unwrap();
            let mut f = DivClass::generator(d, n, g);
            f.add_term(h, &rat(rng.gen_range(-3..=3), rng.gen_range(1..=3)));
            if f.is_zero() {
                continue;
            }
            factors.push(f);
        } else {
            factors.push(DivClass::generator(d, n, g));
        }
    }
    factors.shuffle(rng);
    Ok(Some(factors))
}

/// Restricting along different boundary factors gives the same number.
pub fn boundary_choice_independence(level: Level) -> SuiteReport {
    run("recursion-order independence", |rec| {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut pool = small_weight_tuples(2, 3);
        if level == Level::Full {
            pool.extend(small_weight_tuples(3, 1).into_iter().filter(|w| w.degree() == 3));
        }
        let wanted = if level == Level::Full { 80 } else { 30 };
        let mut attempts = 0;
        let mut done = 0;
        while done < wanted && attempts < 50 * wanted {
            attempts += 1;
            let wt = pool.choose(&mut rng).unwrap().clone();
            let Some(factors) = random_boundary_query(&mut rng, &wt)? else {
                continue;
            };
            let along: Vec<usize> = factors
                .iter()
                .enumerate()
                .filter(|(_, f)| matches!(f.single_term(), Some((GeneratorId::Boundary { .. }, _))))
                .map(|(i, _)| i)
                .collect();
            let reference = intersect(&wt, &factors)?;
            for &i in &along {
                rec.result(intersect_restricting_along(&wt, &factors, i), &reference, || {
                    format!("{wt} {factors:?} along {i}")
                });
            }
            done += 1;
        }
        rec.check(done >= 20, || format!("only {done} queries with two boundary factors"));
        Ok(())
    })
}

/// Keel relations have zero profile and intersect to zero when restricted
/// term by term.  Completed factor lists are exhaustive for `d ≤ 1` and
/// sampled for `d = 2`.
pub fn relation_annihilation(level: Level) -> SuiteReport {
    run("relation annihilation", |rec| {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let tuples: Vec<WeightTuple> = small_weight_tuples(2, 4).into_iter().filter(|w| w.n() == 4).collect();
        let mut nontrivial = 0;
        for d in 0..=2u32 {
            let relations = keel_relations(d, 4);
            for rel in &relations {
                rec.check(profile_of(rel).is_zero(), || format!("profile of {rel}"));
            }
            let candidates: Vec<&WeightTuple> = tuples.iter().filter(|w| w.degree() == d).collect();
            let chosen: Vec<&WeightTuple> = match (d, level) {
                (0, _) => candidates,
                (1, Level::Quick) => candidates.choose_multiple(&mut rng, 2).copied().collect(),
                (1, Level::Full) => candidates.choose_multiple(&mut rng, 6).copied().collect(),
                _ => candidates.choose_multiple(&mut rng, 3).copied().collect(),
            };
            for wt in chosen {
                let survivors = surviving_generators(wt)?;
                let all = monomials(&survivors, wt.dimension() as usize - 1);
                let lists: Vec<Vec<GeneratorId>> = if d <= 1 {
                    all
                } else {
                    let samples = if level == Level::Full { 60 } else { 15 };
                    all.choose_multiple(&mut rng, samples).cloned().collect()
                };
                for monomial in lists {
                    let factors: Vec<DivClass> = monomial.iter().map(|&g| DivClass::generator(d, 4, g)).collect();
                    for rel in &relations {
                        // A relation term pairing nontrivially makes the cancellation meaningful.
                        let mut any_term = false;
                        for (g, _) in rel.terms() {
                            let mut single = factors.clone();
                            single.push(DivClass::generator(d, 4, g));
                            any_term |= !intersect_unreduced(wt, &single)?.is_zero();
                        }
                        nontrivial += any_term as usize;
                        let mut full = factors.clone();
                        full.push(rel.clone());
                        rec.result(intersect_unreduced(wt, &full), &Rational::zero(), || {
                            format!("{wt} {rel} against {monomial:?}")
                        });
                    }
                }
            }
        }
        rec.check(nontrivial > 0, || "no relation term ever paired nontrivially".into());
        Ok(())
    })
}

/// `ψ_i` independent of the auxiliary pair, and the Dilaton equation
/// `∫_{M(wt,0)} ψ_{n+1} Π π*Dⱼ = (n − 2) ∫_{M(wt)} Π Dⱼ`.
pub fn psi_consistency(level: Level) -> SuiteReport {
    run("psi consistency", |rec| {
        for d in 0..=2 {
            for n in 3..=4 {
                for i in 1..=n {
                    let reference = class_psi(d, n, i)?;
                    for a in 1..=n {
                        for b in 1..=n {
                            if a != b && a != i && b != i {
                                let other = class_psi_with(d, n, i, a, b)?;
                                rec.check(other == reference, || format!("psi_{i} on Y_{{{d},{n}}} via ({a},{b})"));
                            }
                        }
                    }
                }
            }
        }
        // Exhaustive except on the largest spaces, where monomials are sampled.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for wt in small_weight_tuples(2, 3) {
            let limit = match (wt.degree(), wt.n(), level) {
                (2, 3, Level::Quick) => 10,
                (2, 3, Level::Full) => 80,
                _ => usize::MAX,
            };
            dilaton_on(rec, &mut rng, &wt, limit)?;
        }
        Ok(())
    })
}

fn dilaton_on(rec: &mut Recorder, rng: &mut ChaCha8Rng, wt: &WeightTuple, limit: usize) -> Result<()> {
    let (d, n) = (wt.degree(), wt.n());
    let mut extended = wt.weights().to_vec();
    extended.push(Rational::zero());
    let big = WeightTuple::new(d, extended)?;
    let psi = class_psi(d, n + 1, n + 1)?;
    let survivors = surviving_generators(wt)?;
    let dim = wt.dimension() as usize;
    let mut all = monomials(&survivors, dim);
    if all.len() > limit {
        all = all.choose_multiple(rng, limit).cloned().collect();
    }
    for monomial in all {
        let factors: Vec<DivClass> = monomial.iter().map(|&g| DivClass::generator(d, n, g)).collect();
        let base = intersect(wt, &factors)?;
        let mut pulled = factors.iter().map(pullback_forget_last).collect::<Result<Vec<_>>>()?;
        pulled.push(psi.clone());
        let expected = base * int(n as i64 - 2);
        rec.result(intersect(&big, &pulled), &expected, || {
            format!("dilaton on {wt} for {monomial:?}")
        });
    }
    Ok(())
}

/// Multisets of size `len` drawn from `items`, in lexicographic order.
pub fn monomials<T: Copy>(items: &[T], len: usize) -> Vec<Vec<T>> {
    fn go<T: Copy>(items: &[T], start: usize, len: usize, current: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if len == 0 {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            go(items, i, len - 1, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    go(items, 0, len, &mut Vec::new(), &mut out);
    out
}

/// The divisor equations for the new marking of `(wt, 0)`:
/// `∫ 𝓗_{n+1,1} Π π*Dⱼ = ∫ Π Dⱼ` and `∫ 𝓗_{n+1,2} Π π*Dⱼ = d ∫ Π Dⱼ`.
pub fn divisor_equation_holds(wt: &WeightTuple, factors: &[DivClass]) -> Result<bool> {
    let (d, n) = (wt.degree(), wt.n());
    let mut extended = wt.weights().to_vec();
    extended.push(Rational::zero());
    let big = WeightTuple::new(d, extended)?;
    let base = intersect(wt, factors)?;
    let pulled = factors.iter().map(pullback_forget_last).collect::<Result<Vec<_>>>()?;
    let mut first = pulled.clone();
    first.push(class_h(d, n + 1, n + 1, Axis::First)?);
    let mut second = pulled;
    second.push(class_h(d, n + 1, n + 1, Axis::Second)?);
    Ok(intersect(&big, &first)? == base && intersect(&big, &second)? == base * int(d as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_pool_is_admissible() {
        let pool = small_weight_tuples(2, 2);
        assert!(pool.iter().all(|w| w.is_admissible() && w.is_nonempty()));
        assert!(pool.contains(&WeightTuple::from_pairs(2, &[]).unwrap()));
        assert!(pool.contains(&WeightTuple::from_pairs(1, &[(1, 1)]).unwrap()));
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(&[1, 2, 3], 2).len(), 6);
        assert_eq!(monomials(&[1], 0), vec![Vec::<i32>::new()]);
    }
}
