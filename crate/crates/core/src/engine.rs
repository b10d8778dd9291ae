//! Top intersection numbers on `M(d | d₁,…,dₙ)`.
//!
//! Factors are reduced to the quotient Picard group and expanded lazily into
//! generators.  A boundary generator `D_{B,k}` is eliminated by restricting
//! every other factor to it: the divisor is a fibre product over `P¹` of a
//! smaller quotient (the A-side, markings off `B` plus a node `p`) and a
//! stable-maps space `M̄_{0,|B|+1}(P¹,k)` (the B-side).  B-side integrals are
//! equivariant; each surviving `t²` becomes a pair of `𝓗_{p,1}` factors on
//! the A-side.  Monomials in `H` and `G` alone are rewritten with the square
//! identities until a base case remains.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{OnceLock, RwLock};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::divisors::{class_fix, class_h, class_hprime, class_psi, Axis};
use crate::equivloc::{boundary_atom, integrate_expr, BAtom, EquivPoly};
use crate::error::{Error, Result};
use crate::markings::MarkingSet;
use crate::picard::{quotient_reducer, to_quotient, DivClass, GeneratorId};
use crate::rational::{int, rat, Rational};
use crate::weights::WeightTuple;

/// A top-intersection query on `M(d | d₁,…,dₙ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionQuery {
    pub wt: WeightTuple,
    pub factors: Vec<DivClass>,
}

impl IntersectionQuery {
    pub fn new(wt: WeightTuple, factors: Vec<DivClass>) -> Self {
        IntersectionQuery { wt, factors }
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.wt, &self.factors)
    }

    /// The query with every factor replaced by its quotient representative
    /// and the factors sorted.
    pub fn canonical(&self) -> Result<IntersectionQuery> {
        self.validate()?;
        let mut factors = self
            .factors
            .iter()
            .map(|f| to_quotient(f, &self.wt))
            .collect::<Result<Vec<_>>>()?;
        factors.sort();
        Ok(IntersectionQuery {
            wt: self.wt.clone(),
            factors,
        })
    }

    pub fn evaluate(&self) -> Result<Rational> {
        intersect(&self.wt, &self.factors)
    }
}

static PARALLEL: AtomicBool = AtomicBool::new(true);
static MEMO_HITS: AtomicU64 = AtomicU64::new(0);
static MEMO_MISSES: AtomicU64 = AtomicU64::new(0);

/// Whether independent monomials are evaluated on the rayon thread pool.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

/// Memo-table statistics since the last [`reset_stats`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub memo_hits: u64,
    pub memo_misses: u64,
}

pub fn stats() -> EngineStats {
    EngineStats {
        memo_hits: MEMO_HITS.load(Ordering::Relaxed),
        memo_misses: MEMO_MISSES.load(Ordering::Relaxed),
    }
}

pub fn reset_stats() {
    MEMO_HITS.store(0, Ordering::Relaxed);
    MEMO_MISSES.store(0, Ordering::Relaxed);
}

type MemoKey = (WeightTuple, Vec<DivClass>);

fn memo() -> &'static RwLock<HashMap<MemoKey, Rational>> {
    static CELL: OnceLock<RwLock<HashMap<MemoKey, Rational>>> = OnceLock::new();
    CELL.get_or_init(Default::default)
}

/// Drops all memoized intersection numbers.
pub fn clear_memo() {
    memo().write().unwrap().clear();
}

fn validate(wt: &WeightTuple, factors: &[DivClass]) -> Result<()> {
    wt.require_admissible()?;
    if !wt.is_nonempty() {
        return Err(Error::EmptySpace(format!(
            "{wt}: needs total weight above 2 and every marking weight below half of it"
        )));
    }
    if wt.dimension() != factors.len() as i64 {
        return Err(Error::DimensionMismatch {
            expected: wt.dimension(),
            found: factors.len(),
        });
    }
    for f in factors {
        f.check_space(wt.degree(), wt.n())?;
    }
    Ok(())
}

/// The top intersection of `factors` on `M(wt)`.
pub fn intersect(wt: &WeightTuple, factors: &[DivClass]) -> Result<Rational> {
    validate(wt, factors)?;
    intersect_reduced(wt, factors)
}

/// Like [`intersect`], but the first restriction is along `factors[index]`,
/// which must reduce to a single boundary generator.
pub fn intersect_restricting_along(wt: &WeightTuple, factors: &[DivClass], index: usize) -> Result<Rational> {
    validate(wt, factors)?;
    let mut reduced = factors.iter().map(|f| to_quotient(f, wt)).collect::<Result<Vec<_>>>()?;
    let scale = normalize(&mut reduced);
    if scale.is_zero() {
        return Ok(scale);
    }
    match reduced.get(index).and_then(|f| f.single_term()) {
        Some((GeneratorId::Boundary { .. }, _)) => Ok(scale * restrict_and_combine(wt, &reduced, index)?),
        _ => Err(Error::InvalidExpression(format!(
            "factor {index} is not a single boundary generator"
        ))),
    }
}

/// Intersects factors that may mention generators outside the basis.
///
/// Only unstable boundary generators are dropped; nothing is rewritten
/// through the relations, so a relation vector is genuinely restricted
/// term by term.
pub fn intersect_unreduced(wt: &WeightTuple, factors: &[DivClass]) -> Result<Rational> {
    validate(wt, factors)?;
    let mut stripped = Vec::with_capacity(factors.len());
    for f in factors {
        let mut out = DivClass::zero(f.d(), f.n());
        for (g, c) in f.terms() {
            let keep = match g {
                GeneratorId::Boundary { set, k } => wt.boundary_stable(set, k)?,
                _ => true,
            };
            if keep {
                out.add_term(g, c);
            }
        }
        stripped.push(out);
    }
    let scale = normalize(&mut stripped);
    if scale.is_zero() {
        return Ok(scale);
    }
    Ok(scale * eval(wt, stripped)?)
}

/// Reduces to the quotient and evaluates, without re-validating.
fn intersect_reduced(wt: &WeightTuple, factors: &[DivClass]) -> Result<Rational> {
    let mut reduced = Vec::with_capacity(factors.len());
    for f in factors {
        let q = to_quotient(f, wt)?;
        if q.is_zero() {
            return Ok(Rational::zero());
        }
        reduced.push(q);
    }
    let scale = normalize(&mut reduced);
    if scale.is_zero() {
        return Ok(scale);
    }
    Ok(scale * eval(wt, reduced)?)
}

/// Pulls scalars out of single-term factors; returns their product.
fn normalize(factors: &mut [DivClass]) -> Rational {
    let mut scale = Rational::one();
    for f in factors.iter_mut() {
        if f.is_zero() {
            return Rational::zero();
        }
        if let Some((g, c)) = f.single_term() {
            if !c.is_one() {
                scale *= c;
                *f = DivClass::generator(f.d(), f.n(), g);
            }
        }
    }
    scale
}

fn eval(wt: &WeightTuple, mut factors: Vec<DivClass>) -> Result<Rational> {
    factors.sort();
    let key = (wt.clone(), factors);
    if let Some(v) = memo().read().unwrap().get(&key) {
        MEMO_HITS.fetch_add(1, Ordering::Relaxed);
        return Ok(v.clone());
    }
    MEMO_MISSES.fetch_add(1, Ordering::Relaxed);
    let value = eval_uncached(wt, &key.1)?;
    memo().write().unwrap().insert(key, value.clone());
    Ok(value)
}

fn eval_uncached(wt: &WeightTuple, factors: &[DivClass]) -> Result<Rational> {
    if factors.is_empty() {
        return base_case(wt, factors);
    }
    let boundary = factors
        .iter()
        .enumerate()
        .filter_map(|(idx, f)| match f.single_term() {
            Some((GeneratorId::Boundary { set, k }, _)) => Some((idx, set, k)),
            _ => None,
        })
        .min_by(|a, b| b.2.cmp(&a.2).then_with(|| a.1.cmp(&b.1)));
    if let Some((idx, _, _)) = boundary {
        return restrict_and_combine(wt, factors, idx);
    }
    if factors.iter().all(|f| f.single_term().is_some()) {
        return reduce_h_powers(wt, factors);
    }
    let (idx, _) = factors
        .iter()
        .enumerate()
        .filter(|(_, f)| f.num_terms() > 1)
        .min_by_key(|(_, f)| f.num_terms())
        .expect("some factor has several terms");
    let terms: Vec<(GeneratorId, Rational)> = factors[idx].terms().map(|(g, c)| (g, c.clone())).collect();
    let run = |(g, c): &(GeneratorId, Rational)| -> Result<Rational> {
        let mut next = factors.to_vec();
        next[idx] = DivClass::generator(wt.degree(), wt.n(), *g);
        Ok(c * eval(wt, next)?)
    };
    let parts: Vec<Result<Rational>> = if PARALLEL.load(Ordering::Relaxed) {
        terms.par_iter().map(run).collect()
    } else {
        terms.iter().map(run).collect()
    };
    parts
        .into_iter()
        .try_fold(Rational::zero(), |acc, part| Ok(acc + part?))
}

/// One factor restricted to a boundary divisor: its A-side class and its
/// B-side atoms.
#[derive(Clone, Debug)]
pub struct RestrictedFactor {
    pub a_side: DivClass,
    pub b_side: Vec<(Rational, BAtom)>,
}

/// The data of a boundary restriction.
#[derive(Clone, Debug)]
pub struct Restriction {
    /// Weights of the A-side quotient; its last marking is the node.
    pub wt_a: WeightTuple,
    /// Number of markings on the B-side, the node last.
    pub n_b: usize,
    /// Degree of the B-side maps.
    pub degree_b: u32,
    /// The other factors followed by the diagonal class of the gluing.
    pub factors: Vec<RestrictedFactor>,
}

/// Restricts every factor except `factors[index]` (a single boundary
/// generator `D_{B,k}`) to that divisor and appends the diagonal class.
pub fn restrict_monomial(wt: &WeightTuple, factors: &[DivClass], index: usize) -> Result<Restriction> {
    let (d, n) = (wt.degree(), wt.n());
    let Some((GeneratorId::Boundary { set: b, k }, _)) = factors.get(index).and_then(|f| f.single_term()) else {
        return Err(Error::InvalidExpression(format!(
            "factor {index} is not a boundary generator"
        )));
    };
    if !wt.boundary_stable(b, k)? {
        return Err(Error::UnstableBoundary { set: b.to_string(), k });
    }
    let wt_a = wt.restrict_weights(b, k)?;
    let a = b.complement(n);
    let ctx = Gluing {
        d,
        b,
        a,
        k,
        d_a: d - k,
        n_a: a.len() + 1,
        n_b: b.len() + 1,
    };

    let mut restricted = Vec::with_capacity(factors.len());
    for (pos, f) in factors.iter().enumerate() {
        if pos == index {
            continue;
        }
        let mut out = RestrictedFactor {
            a_side: DivClass::zero(ctx.d_a, ctx.n_a),
            b_side: Vec::new(),
        };
        for (g, c) in f.terms() {
            ctx.route(g, c, &mut out)?;
        }
        restricted.push(out);
    }
    restricted.push(RestrictedFactor {
        a_side: class_h(ctx.d_a, ctx.n_a, ctx.n_a, Axis::Second)?,
        b_side: vec![(Rational::one(), BAtom::Ev(ctx.n_b))],
    });
    Ok(Restriction {
        wt_a,
        n_b: ctx.n_b,
        degree_b: k,
        factors: restricted,
    })
}

struct Gluing {
    d: u32,
    b: MarkingSet,
    a: MarkingSet,
    k: u32,
    d_a: u32,
    n_a: usize,
    n_b: usize,
}

impl Gluing {
    fn on_a(&self, set: MarkingSet) -> MarkingSet {
        set.relabel(|i| self.a.iter().position(|m| m == i).expect("marking on the A-side") + 1)
    }

    fn on_b(&self, set: MarkingSet) -> MarkingSet {
        set.relabel(|i| self.b.iter().position(|m| m == i).expect("marking on the B-side") + 1)
    }

    fn route(&self, g: GeneratorId, c: &Rational, out: &mut RestrictedFactor) -> Result<()> {
        let node_a = self.n_a;
        match g {
            GeneratorId::H => {
                let i = if self.a.contains(1) {
                    self.on_a(MarkingSet::singleton(1)).max().unwrap()
                } else {
                    node_a
                };
                out.a_side.add_scaled(&class_h(self.d_a, self.n_a, i, Axis::First)?, c);
            }
            GeneratorId::G => out.a_side.add_term(GeneratorId::G, c),
            GeneratorId::Boundary { set, k } => {
                if set == self.b && k == self.k {
                    out.a_side.add_scaled(&class_psi(self.d_a, self.n_a, node_a)?, &-c);
                    out.b_side.push((-c, BAtom::Psi(self.n_b)));
                }
                if set.is_subset(self.a) && k <= self.d - self.k {
                    out.a_side.add_term(GeneratorId::boundary(self.on_a(set), k), c);
                }
                if self.b.is_subset(set) && self.k <= k && (set, k) != (self.b, self.k) {
                    let rest = self.on_a(set.difference(self.b)).with(node_a);
                    out.a_side.add_term(GeneratorId::boundary(rest, k - self.k), c);
                }
                if set.is_subset(self.b) && k <= self.k && (k < self.k || set != self.b) {
                    let atom = boundary_atom(self.n_b, self.k, self.on_b(set), k)?;
                    out.b_side.push((c.clone(), atom));
                }
            }
        }
        Ok(())
    }
}

fn restrict_and_combine(wt: &WeightTuple, factors: &[DivClass], index: usize) -> Result<Rational> {
    combine_sides(&restrict_monomial(wt, factors, index)?)
}

/// Sums over the ways of sending restricted factors to the B-side.
///
/// A subset `S` sent to the B-side integrates to `c·t^{|S| − dim B}`; the
/// remaining factors and `r = (|S| − dim B)/2` copies of `𝓗_{p,1}²` are
/// intersected on the A-side.
pub fn combine_sides(restriction: &Restriction) -> Result<Rational> {
    let factors = &restriction.factors;
    let dim_b = 2 * restriction.degree_b as i64 - 2 + restriction.n_b as i64;
    let count = factors.len();
    let wt_a = &restriction.wt_a;
    let (d_a, n_a) = (wt_a.degree(), wt_a.n());
    let h_node = class_h(d_a, n_a, n_a, Axis::First)?;

    let mut total = Rational::zero();
    for mask in 0u64..(1u64 << count) {
        let chosen = mask.count_ones() as i64;
        if chosen < dim_b || (chosen - dim_b) % 2 == 1 {
            continue;
        }
        let in_b = |j: usize| mask >> j & 1 == 1;
        if (0..count).any(|j| {
            if in_b(j) {
                factors[j].b_side.is_empty()
            } else {
                factors[j].a_side.is_zero()
            }
        }) {
            continue;
        }
        let parts: Vec<&[(Rational, BAtom)]> = (0..count)
            .filter(|&j| in_b(j))
            .map(|j| factors[j].b_side.as_slice())
            .collect();
        let poly = integrate_products(restriction.n_b, restriction.degree_b, &parts)?;
        if poly.has_odd_terms() {
            return Err(Error::Invariant(format!("odd power of t on the B-side: {poly}")));
        }
        let r = (chosen - dim_b) as u32;
        let coeff = poly.coeff(r);
        if coeff.is_zero() {
            continue;
        }
        let mut a_factors: Vec<DivClass> = (0..count)
            .filter(|&j| !in_b(j))
            .map(|j| factors[j].a_side.clone())
            .collect();
        a_factors.extend(std::iter::repeat_n(h_node.clone(), r as usize));
        total += coeff * intersect_reduced(wt_a, &a_factors)?;
    }
    Ok(total)
}

/// `∫ Π_j (Σ c·atom)` on `M̄_{0,n}(P¹,k)`.
fn integrate_products(n: usize, k: u32, parts: &[&[(Rational, BAtom)]]) -> Result<EquivPoly> {
    let mut monomials: HashMap<Vec<BAtom>, Rational> = HashMap::new();
    let mut stack: Vec<(usize, Rational, Vec<BAtom>)> = vec![(0, Rational::one(), Vec::new())];
    while let Some((depth, coeff, atoms)) = stack.pop() {
        if depth == parts.len() {
            let mut atoms = atoms;
            atoms.sort();
            *monomials.entry(atoms).or_insert_with(Rational::zero) += coeff;
            continue;
        }
        for (c, atom) in parts[depth] {
            let mut next = atoms.clone();
            next.push(*atom);
            stack.push((depth + 1, &coeff * c, next));
        }
    }
    let mut out = EquivPoly::zero();
    for (atoms, coeff) in monomials {
        if !coeff.is_zero() {
            out.add_scaled(&integrate_expr(n, k, &atoms)?, &coeff);
        }
    }
    Ok(out)
}

/// Evaluates a monomial in `H` and `G` only.
pub fn reduce_h_powers(wt: &WeightTuple, factors: &[DivClass]) -> Result<Rational> {
    let (d, n) = (wt.degree(), wt.n());
    let count = |target: GeneratorId| {
        factors
            .iter()
            .filter(|f| matches!(f.single_term(), Some((g, _)) if g == target))
            .count()
    };
    let (h_count, g_count) = (count(GeneratorId::H), count(GeneratorId::G));
    if h_count + g_count != factors.len() {
        return Err(Error::Invariant("reduce_h_powers needs a monomial in H and G".into()));
    }
    let replace_pair = |target: GeneratorId, with: Vec<DivClass>| -> Vec<DivClass> {
        let mut rest: Vec<DivClass> = Vec::with_capacity(factors.len());
        let mut skipped = 0;
        for f in factors {
            if skipped < 2 && f.single_term().map(|(g, _)| g) == Some(target) {
                skipped += 1;
            } else {
                rest.push(f.clone());
            }
        }
        rest.extend(with);
        rest
    };
    match (d, n) {
        (0, 3) if g_count == 1 => base_case(wt, factors),
        (0, _) if g_count >= 2 => {
            // G = 𝓗_{1,2} and 𝓗_{1,2}² = 𝓗_{1,1}².
            let h = to_quotient(&class_h(0, n, 1, Axis::First)?, wt)?;
            let terms = square_identity(wt, GeneratorId::G, &h, &Rational::zero())?;
            sum_substitutions(wt, &terms, |with| replace_pair(GeneratorId::G, with))
        }
        (1, 1) => base_case(wt, factors),
        (1, 2) if h_count >= 1 => {
            let mut fallback = None;
            for i in 1..=2 {
                if wt.fix_stable(i)? {
                    continue;
                }
                let fix = class_fix(1, 2, i)?;
                let c = fix.coeff(GeneratorId::H);
                if c.is_zero() {
                    continue;
                }
                let rest = to_quotient(&fix.without(GeneratorId::H), wt)?;
                if !rest.coeff(GeneratorId::H).is_zero() {
                    continue;
                }
                fallback = Some(rest.scaled(&(-Rational::one() / c)));
                break;
            }
            let Some(h) = fallback else {
                return Err(Error::Invariant(format!("{wt}: no fixed-point relation eliminates H")));
            };
            let mut rest: Vec<DivClass> = factors.to_vec();
            let pos = rest
                .iter()
                .position(|f| f.single_term().map(|(g, _)| g) == Some(GeneratorId::H))
                .unwrap();
            rest[pos] = h;
            intersect_reduced(wt, &rest)
        }
        (_, _) if d >= 2 && h_count >= 2 => {
            // 𝓗_{1,2} = d·H + 𝓗'_{1,2} and 𝓗_{1,2}² = H².
            let hprime = to_quotient(&class_hprime(d, n, 1)?, wt)?;
            let terms = square_identity(wt, GeneratorId::H, &hprime, &int(d as i64))?;
            sum_substitutions(wt, &terms, |with| replace_pair(GeneratorId::H, with))
        }
        _ => Err(Error::Invariant(format!(
            "{wt}: no reduction for H^{h_count} G^{g_count}"
        ))),
    }
}

/// Solves `X² = (s·X + Y)²` for `X²`, where `Y = other` in the quotient.
///
/// Writing `Y = a·X + β` with `β` free of `X`, and `u = s + a`, the identity
/// gives `(1 − u²)X² = 2u·X·β + β²`.  Returns the two products on the right
/// with their coefficients.
fn square_identity(
    wt: &WeightTuple,
    x: GeneratorId,
    other: &DivClass,
    s: &Rational,
) -> Result<Vec<(Rational, Vec<DivClass>)>> {
    let u = s + other.coeff(x);
    let denominator = Rational::one() - &u * &u;
    if denominator.is_zero() {
        return Err(Error::Invariant(format!("{wt}: degenerate square identity for {x}")));
    }
    let beta = other.without(x);
    let x_class = DivClass::generator(wt.degree(), wt.n(), x);
    Ok(vec![
        (int(2) * &u / &denominator, vec![x_class, beta.clone()]),
        (Rational::one() / &denominator, vec![beta.clone(), beta]),
    ])
}

fn sum_substitutions(
    wt: &WeightTuple,
    terms: &[(Rational, Vec<DivClass>)],
    substitute: impl Fn(Vec<DivClass>) -> Vec<DivClass>,
) -> Result<Rational> {
    let mut total = Rational::zero();
    for (c, with) in terms {
        if c.is_zero() || with.iter().any(DivClass::is_zero) {
            continue;
        }
        total += c * intersect_reduced(wt, &substitute(with.clone()))?;
    }
    Ok(total)
}

/// Intersection numbers on the spaces where the recursion bottoms out.
pub fn base_case(wt: &WeightTuple, factors: &[DivClass]) -> Result<Rational> {
    let (d, n) = (wt.degree(), wt.n());
    let single = match factors {
        [] => None,
        [f] => f.single_term().map(|(g, c)| (g, c.clone())),
        _ => return Err(Error::NotBaseCase(format!("{wt} with {} factors", factors.len()))),
    };
    match (d, n, single) {
        (0, 2, None) => Ok(int(1)),
        (1, 1, Some((GeneratorId::H, c))) => Ok(c * rat(-1, 4)),
        (1, 1, Some((GeneratorId::Boundary { set, k: 1 }, c))) if set.is_empty() => Ok(c),
        (0, 3, Some((GeneratorId::G, c))) => Ok(c * three_point_g(wt)),
        _ => Err(Error::NotBaseCase(format!("{wt} with factors {factors:?}"))),
    }
}

/// `∫_{M(0|c,d,e)} 𝓖`.
fn three_point_g(wt: &WeightTuple) -> Rational {
    let mut w: Vec<Rational> = wt.weights().to_vec();
    w.sort();
    let one = Rational::one();
    let (c, d, e) = (&w[0], &w[1], &w[2]);
    if c + d > &one + e {
        return one;
    }
    let flag = |b: bool| if b { one.clone() } else { Rational::zero() };
    (&one - flag(c + e < &one + d) - flag(d + e < &one + c)) / int(2)
}

/// Basis generators of `Y_{d,n}` that survive in the quotient `M(wt)`.
pub fn surviving_generators(wt: &WeightTuple) -> Result<Vec<GeneratorId>> {
    Ok(quotient_reducer(wt)?.survivors().to_vec())
}
