//! The canonical basis of `Pic(Y_{d,n}) ⊗ Q` with its relations.
//!
//! Classes are identified from their test-curve pairings, and
//! [`to_quotient`] reduces them to the Picard group of the GIT quotient.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num_traits::{One, Signed, Zero};

use crate::divisors;
use crate::error::{Error, Result};
use crate::linalg::{axpy, reduce_rows, SparseRow};
use crate::markings::MarkingSet;
use crate::rational::{format_rational, int, parse_rational, Rational};
use crate::weights::{is_valid_label, WeightTuple};

/// A generator of the rational Picard group of `Y_{d,n}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorId {
    /// The boundary divisor `D_{B,k}`.
    Boundary { set: MarkingSet, k: u32 },
    /// The first-coordinate evaluation class at marking 1 (only `n ∈ {1,2}`).
    H,
    /// The constant-map class (only `d = 0`).
    G,
}

impl GeneratorId {
    pub fn boundary(set: MarkingSet, k: u32) -> Self {
        GeneratorId::Boundary { set, k }
    }

    pub fn as_boundary(self) -> Option<(MarkingSet, u32)> {
        match self {
            GeneratorId::Boundary { set, k } => Some((set, k)),
            _ => None,
        }
    }

    fn rank(self) -> u8 {
        match self {
            GeneratorId::Boundary { .. } => 0,
            GeneratorId::H => 1,
            GeneratorId::G => 2,
        }
    }
}

impl Ord for GeneratorId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (GeneratorId::Boundary { set: s1, k: k1 }, GeneratorId::Boundary { set: s2, k: k2 }) => {
                k1.cmp(k2).then_with(|| s1.cmp(s2))
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for GeneratorId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorId::Boundary { set, k } => {
                let parts: Vec<String> = set.iter().map(|i| i.to_string()).collect();
                write!(f, "D|B={}|k={}", parts.join(","), k)
            }
            GeneratorId::H => f.write_str("H"),
            GeneratorId::G => f.write_str("G"),
        }
    }
}

impl fmt::Debug for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GeneratorId {
    type Err = Error;

    /// Parses `D|B=i1,i2,…|k=K`, `H` or `G` (the listing order of `B` is
    /// not significant on input).
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "H" => return Ok(GeneratorId::H),
            "G" => return Ok(GeneratorId::G),
            _ => {}
        }
        let bad = || Error::Parse(format!("not a generator key: {text:?}"));
        let rest = text.strip_prefix("D|B=").ok_or_else(bad)?;
        let (set_text, k_text) = rest.split_once("|k=").ok_or_else(bad)?;
        let mut set = MarkingSet::EMPTY;
        if !set_text.is_empty() {
            for part in set_text.split(',') {
                let i: usize = part.trim().parse().map_err(|_| bad())?;
                if !(1..=62).contains(&i) || set.contains(i) {
                    return Err(bad());
                }
                set = set.with(i);
            }
        }
        let k: u32 = k_text.trim().parse().map_err(|_| bad())?;
        Ok(GeneratorId::Boundary { set, k })
    }
}

/// Whether `g` is one of the generators of `Y_{d,n}`.
pub fn is_generator(d: u32, n: usize, g: GeneratorId) -> bool {
    match g {
        GeneratorId::Boundary { set, k } => is_valid_label(d, n, set, k),
        GeneratorId::H => n == 1 || n == 2,
        GeneratorId::G => d == 0,
    }
}

/// Generators of `Pic(Y_{d,n}) ⊗ Q` in canonical order: boundary divisors
/// by `(k, |B|, B)`, then `H`, then `G`.
pub fn generators(d: u32, n: usize) -> Vec<GeneratorId> {
    let mut out = Vec::new();
    let mut sets: Vec<MarkingSet> = MarkingSet::all_subsets(n).collect();
    sets.sort();
    for k in 0..=d {
        for &set in &sets {
            if is_valid_label(d, n, set, k) {
                out.push(GeneratorId::Boundary { set, k });
            }
        }
    }
    if n == 1 || n == 2 {
        out.push(GeneratorId::H);
    }
    if d == 0 {
        out.push(GeneratorId::G);
    }
    out
}

/// Generators left out of the basis: `D_{B,0}` with `B ⊆ {2,…,n}`,
/// `|B| = 2` and `B ≠ {n−1, n}`.
pub fn removed_generators(_d: u32, n: usize) -> Vec<GeneratorId> {
    if n < 4 {
        return Vec::new();
    }
    let last_pair = MarkingSet::from_indices([n - 1, n]);
    let mut out = Vec::new();
    for a in 2..=n {
        for b in a + 1..=n {
            let set = MarkingSet::from_indices([a, b]);
            if set != last_pair {
                out.push(GeneratorId::Boundary { set, k: 0 });
            }
        }
    }
    out.sort();
    out
}

pub fn is_removed(n: usize, g: GeneratorId) -> bool {
    match g {
        GeneratorId::Boundary { set, k: 0 } => {
            n >= 4 && set.len() == 2 && !set.contains(1) && set != MarkingSet::from_indices([n - 1, n])
        }
        _ => false,
    }
}

/// The canonical basis of `Pic(Y_{d,n}) ⊗ Q`.
pub fn basis(d: u32, n: usize) -> Vec<GeneratorId> {
    generators(d, n).into_iter().filter(|&g| !is_removed(n, g)).collect()
}

/// Closed rank formula, meaningful for `n ≥ 3`.
pub fn closed_rank_formula(d: u32, n: usize) -> i64 {
    let delta = |b: bool| b as i64;
    (1i64 << n) * (d as i64 + 1) - (n * n.saturating_sub(1) / 2) as i64 - 1
        + delta(n == 1)
        + delta(n == 2)
        + delta(d == 0)
}

/// A rational linear combination of generators of `Y_{d,n}`.
///
/// Library constructors return classes supported on [`basis`]; vectors that
/// may mention removed generators (pullbacks, relations) are brought back to
/// the basis with [`reduce_to_basis`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DivClass {
    d: u32,
    n: usize,
    coeffs: BTreeMap<GeneratorId, Rational>,
}

impl DivClass {
    pub fn zero(d: u32, n: usize) -> Self {
        DivClass {
            d,
            n,
            coeffs: BTreeMap::new(),
        }
    }

    /// The class of a single generator.
    pub fn generator(d: u32, n: usize, g: GeneratorId) -> Self {
        assert!(is_generator(d, n, g), "{g} is not a generator of Y_{{{d},{n}}}");
        let mut out = Self::zero(d, n);
        out.coeffs.insert(g, Rational::one());
        out
    }

    pub fn boundary(d: u32, n: usize, set: MarkingSet, k: u32) -> Self {
        Self::generator(d, n, GeneratorId::Boundary { set, k })
    }

    /// Builds a class from `(generator, coefficient)` terms, checking that
    /// every generator belongs to `Y_{d,n}`.
    pub fn from_terms<I>(d: u32, n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GeneratorId, Rational)>,
    {
        let mut out = Self::zero(d, n);
        for (g, c) in terms {
            if !is_generator(d, n, g) {
                return Err(Error::Parse(format!("{g} is not a generator of Y_{{{d},{n}}}")));
            }
            out.add_term(g, &c);
        }
        Ok(out)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, g: GeneratorId) -> Rational {
        self.coeffs.get(&g).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (GeneratorId, &Rational)> {
        self.coeffs.iter().map(|(g, c)| (*g, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Some((g, c))` when the class is `c·g`.
    pub fn single_term(&self) -> Option<(GeneratorId, &Rational)> {
        if self.coeffs.len() == 1 {
            self.coeffs.iter().next().map(|(g, c)| (*g, c))
        } else {
            None
        }
    }

    pub fn add_term(&mut self, g: GeneratorId, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(g).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&g);
        }
    }

    pub fn add_scaled(&mut self, other: &DivClass, c: &Rational) {
        self.assert_same_space(other);
        axpy(&mut self.coeffs, c, &other.coeffs);
    }

    pub fn scaled(&self, c: &Rational) -> DivClass {
        let mut out = DivClass::zero(self.d, self.n);
        if !c.is_zero() {
            out.coeffs = self.coeffs.iter().map(|(g, v)| (*g, v * c)).collect();
        }
        out
    }

    /// Drops the given generator.
    pub fn without(&self, g: GeneratorId) -> DivClass {
        let mut out = self.clone();
        out.coeffs.remove(&g);
        out
    }

    pub fn is_basis_supported(&self) -> bool {
        self.coeffs.keys().all(|&g| !is_removed(self.n, g))
    }

    pub fn check_space(&self, d: u32, n: usize) -> Result<()> {
        if self.d == d && self.n == n {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected_d: d,
                expected_n: n,
                found_d: self.d,
                found_n: self.n,
            })
        }
    }

    fn assert_same_space(&self, other: &DivClass) {
        assert!(
            self.d == other.d && self.n == other.n,
            "classes on different spaces: Y_{{{},{}}} vs Y_{{{},{}}}",
            self.d,
            self.n,
            other.d,
            other.n
        );
    }

    pub(crate) fn from_row(d: u32, n: usize, coeffs: SparseRow<GeneratorId>) -> Self {
        DivClass { d, n, coeffs }
    }

    /// Parses a linear expression such as `2*D|B=1|k=1 - 1/2*H + G`.
    pub fn parse(d: u32, n: usize, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut rest = text.trim();
        if rest.is_empty() || rest == "0" {
            return Ok(Self::zero(d, n));
        }
        let mut sign = Rational::one();
        if let Some(r) = rest.strip_prefix('-') {
            sign = -sign;
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r.trim_start();
        }
        loop {
            let end = next_operator(rest);
            let term = rest[..end].trim();
            let (coeff, key) = match term.split_once('*') {
                Some((c, k)) => (parse_rational(c)?, k.trim()),
                None => (Rational::one(), term),
            };
            terms.push((key.parse::<GeneratorId>()?, sign.clone() * coeff));
            if end == rest.len() {
                break;
            }
            sign = if rest[end..].starts_with('-') {
                -Rational::one()
            } else {
                Rational::one()
            };
            rest = rest[end + 1..].trim_start();
        }
        Self::from_terms(d, n, terms)
    }
}

/// Position of the next top-level `+`/`-` separating terms (keys never
/// contain either sign).
fn next_operator(text: &str) -> usize {
    text.char_indices()
        .skip(1)
        .find(|&(i, ch)| (ch == '+' || ch == '-') && text[..i].trim_end().len() < i)
        .map(|(i, _)| i)
        .unwrap_or(text.len())
}

impl fmt::Display for DivClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (idx, (g, c)) in self.coeffs.iter().enumerate() {
            let magnitude = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            match (idx, c.is_negative()) {
                (0, false) => {}
                (0, true) => f.write_str("-")?,
                _ => write!(f, " {sign} ")?,
            }
            if magnitude.is_one() {
                write!(f, "{g}")?;
            } else {
                write!(f, "{}*{g}", format_rational(&magnitude))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DivClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[Y_{{{},{}}}] {}", self.d, self.n, self)
    }
}

impl Add<&DivClass> for &DivClass {
    type Output = DivClass;
    fn add(self, rhs: &DivClass) -> DivClass {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl Add for DivClass {
    type Output = DivClass;
    fn add(self, rhs: DivClass) -> DivClass {
        &self + &rhs
    }
}

impl AddAssign<&DivClass> for DivClass {
    fn add_assign(&mut self, rhs: &DivClass) {
        self.add_scaled(rhs, &Rational::one());
    }
}

impl Sub<&DivClass> for &DivClass {
    type Output = DivClass;
    fn sub(self, rhs: &DivClass) -> DivClass {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Rational::one());
        out
    }
}

impl Sub for DivClass {
    type Output = DivClass;
    fn sub(self, rhs: DivClass) -> DivClass {
        &self - &rhs
    }
}

impl Neg for &DivClass {
    type Output = DivClass;
    fn neg(self) -> DivClass {
        self.scaled(&-Rational::one())
    }
}

impl Neg for DivClass {
    type Output = DivClass;
    fn neg(self) -> DivClass {
        -&self
    }
}

impl Mul<&DivClass> for &Rational {
    type Output = DivClass;
    fn mul(self, rhs: &DivClass) -> DivClass {
        rhs.scaled(self)
    }
}

impl Mul<DivClass> for Rational {
    type Output = DivClass;
    fn mul(self, rhs: DivClass) -> DivClass {
        rhs.scaled(&self)
    }
}

// ---------------------------------------------------------------------------
// Relations and reduction to the basis
// ---------------------------------------------------------------------------

/// `Σ_m D_{S,m}` over all valid `m`.
fn add_all_degrees(out: &mut DivClass, set: MarkingSet, sign: &Rational) {
    for m in 0..=out.d {
        if is_valid_label(out.d, out.n, set, m) {
            out.add_term(GeneratorId::Boundary { set, k: m }, sign);
        }
    }
}

/// Pullback of the boundary divisor `D(A;B)` of `M̄_{0,n}` under the
/// forgetful map: `Σ_m D_{A,m} + Σ_m D_{B,m}` (raw, not reduced).
pub fn forgetful_boundary_pullback(d: u32, n: usize, a: MarkingSet) -> Result<DivClass> {
    let b = a.complement(n);
    if a.len() < 2 || b.len() < 2 || !a.is_subset(MarkingSet::full(n)) {
        return Err(Error::InvalidLabel {
            set: a.to_string(),
            k: 0,
            d,
        });
    }
    let mut out = DivClass::zero(d, n);
    add_all_degrees(&mut out, a, &Rational::one());
    add_all_degrees(&mut out, b, &Rational::one());
    Ok(out)
}

/// Sum of `F*D(A;B)` over all partitions separating `{i,j}` from `{k,l}`.
fn separating_sum(d: u32, n: usize, i: usize, j: usize, k: usize, l: usize) -> DivClass {
    let mut out = DivClass::zero(d, n);
    for a in MarkingSet::all_subsets(n) {
        let b = a.complement(n);
        if a.contains(i) && a.contains(j) && b.contains(k) && b.contains(l) {
            // Each unordered partition is visited once because i is pinned to A.
            out += &forgetful_boundary_pullback(d, n, a).expect("both sides have two points");
        }
    }
    out
}

/// Keel relations pulled back to `Y_{d,n}` (raw vectors over the generators).
///
/// For every 4-subset `{a<b<c<e}` the two differences
/// `R(ab|ce) − R(ac|be)` and `R(ab|ce) − R(ae|bc)` are listed.
pub fn keel_relations(d: u32, n: usize) -> Vec<DivClass> {
    let mut out = Vec::new();
    if n < 4 {
        return out;
    }
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                for e in c + 1..=n {
                    let first = separating_sum(d, n, a, b, c, e);
                    out.push(&first - &separating_sum(d, n, a, c, b, e));
                    out.push(&first - &separating_sum(d, n, a, e, b, c));
                }
            }
        }
    }
    out
}

type Reducer = BTreeMap<GeneratorId, DivClass>;

type ReducerTable = RwLock<HashMap<(u32, usize), Arc<Reducer>>>;

fn reducers() -> &'static ReducerTable {
    static CELL: OnceLock<ReducerTable> = OnceLock::new();
    CELL.get_or_init(Default::default)
}

/// Basis expansion of every removed generator, computed once per `(d, n)`.
fn reducer(d: u32, n: usize) -> Arc<Reducer> {
    if let Some(r) = reducers().read().unwrap().get(&(d, n)) {
        return r.clone();
    }
    let removed = removed_generators(d, n);
    let rows: Vec<SparseRow<GeneratorId>> = keel_relations(d, n).into_iter().map(|r| r.coeffs).collect();
    let (pivots, _) = reduce_rows(rows, &removed);
    assert_eq!(
        pivots.len(),
        removed.len(),
        "keel relations must eliminate every removed generator"
    );
    let mut map = Reducer::new();
    for (g, row) in pivots {
        // row = g + (basis terms), hence g ≡ −(basis terms).
        let mut expansion = DivClass::from_row(d, n, row).without(g);
        expansion = -expansion;
        debug_assert!(expansion.is_basis_supported());
        map.insert(g, expansion);
    }
    let map = Arc::new(map);
    reducers().write().unwrap().insert((d, n), map.clone());
    map
}

/// The unique basis representative of a raw vector over the generators.
pub fn reduce_to_basis(raw: &DivClass) -> DivClass {
    if raw.is_basis_supported() {
        return raw.clone();
    }
    let table = reducer(raw.d, raw.n);
    let mut out = DivClass::zero(raw.d, raw.n);
    for (g, c) in raw.terms() {
        match table.get(&g) {
            Some(expansion) => out.add_scaled(expansion, c),
            None => out.add_term(g, c),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Test curves and identification
// ---------------------------------------------------------------------------

/// A test curve: `C_{B,k}` for any `B ⊆ {1..n}` and `0 ≤ k ≤ d`, or the
/// constant-map curve `C_G` (only `d = 0`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TestCurve {
    Boundary { set: MarkingSet, k: u32 },
    Constant,
}

/// All test curves of `Y_{d,n}`.  The family `C_{B,k}` is used for every
/// subset, including `|B| ≤ 1` with `k = 0`, since identification reads off
/// `N_{{j},0}`.
pub fn test_curves(d: u32, n: usize) -> Vec<TestCurve> {
    let mut sets: Vec<MarkingSet> = MarkingSet::all_subsets(n).collect();
    sets.sort();
    let mut out: Vec<TestCurve> = (0..=d)
        .flat_map(|k| sets.iter().map(move |&set| TestCurve::Boundary { set, k }))
        .collect();
    if d == 0 {
        out.push(TestCurve::Constant);
    }
    out
}

/// Intersection number of a test curve with a generator.
pub fn pairing(d: u32, n: usize, curve: TestCurve, g: GeneratorId) -> Rational {
    let (b, k) = match curve {
        TestCurve::Constant => return if g == GeneratorId::G { int(1) } else { int(0) },
        TestCurve::Boundary { set, k } => (set, k),
    };
    match g {
        GeneratorId::G => int(0),
        GeneratorId::H => int(b.contains(1) as i64),
        GeneratorId::Boundary { set, k: j } => {
            let mut value = 0i64;
            if set == b && j == k && is_valid_label(d, n, b, k) {
                value += 2;
            }
            if j == 0 && set.len() == 2 && set.intersection(b).len() == 1 {
                value += 1;
            }
            if set.is_empty() && j == 1 {
                value += 2 * k as i64 * (d as i64 - k as i64);
            }
            int(value)
        }
    }
}

/// Intersection numbers of a class with every test curve.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Profile {
    d: u32,
    n: usize,
    values: BTreeMap<(MarkingSet, u32), Rational>,
    constant: Option<Rational>,
}

impl Profile {
    /// Builds a profile from a function on `(B, k)`; `constant` is `N_G`
    /// and is used only when `d = 0`.
    pub fn from_fn(d: u32, n: usize, f: impl Fn(MarkingSet, u32) -> Rational, constant: Rational) -> Self {
        let mut values = BTreeMap::new();
        for set in MarkingSet::all_subsets(n) {
            for k in 0..=d {
                values.insert((set, k), f(set, k));
            }
        }
        Profile {
            d,
            n,
            values,
            constant: (d == 0).then_some(constant),
        }
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N_{B,k}`.
    pub fn value(&self, set: MarkingSet, k: u32) -> Rational {
        self.values.get(&(set, k)).cloned().unwrap_or_else(Rational::zero)
    }

    /// `N_G` (present only for `d = 0`).
    pub fn constant(&self) -> Option<&Rational> {
        self.constant.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().all(Zero::is_zero) && self.constant.as_ref().is_none_or(Zero::is_zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (MarkingSet, u32, &Rational)> {
        self.values.iter().map(|((s, k), v)| (*s, *k, v))
    }
}

/// Pairs a class with every test curve.
pub fn profile_of(cls: &DivClass) -> Profile {
    let (d, n) = (cls.d, cls.n);
    let mut values = BTreeMap::new();
    for set in MarkingSet::all_subsets(n) {
        for k in 0..=d {
            let curve = TestCurve::Boundary { set, k };
            let v = cls
                .terms()
                .fold(Rational::zero(), |acc, (g, c)| acc + c * pairing(d, n, curve, g));
            values.insert((set, k), v);
        }
    }
    let constant = (d == 0).then(|| {
        cls.terms().fold(Rational::zero(), |acc, (g, c)| {
            acc + c * pairing(d, n, TestCurve::Constant, g)
        })
    });
    Profile { d, n, values, constant }
}

/// Recovers the basis representation of a class from its profile.
pub fn identify(profile: &Profile) -> DivClass {
    let (d, n) = (profile.d, profile.n);
    let single = |i: usize| profile.value(MarkingSet::singleton(i), 0);
    let pair = |a: usize, b: usize| MarkingSet::from_indices([a, b]);
    let mut out = DivClass::zero(d, n);

    if d == 0 {
        out.add_term(
            GeneratorId::G,
            profile.constant.as_ref().expect("d = 0 profile carries N_G"),
        );
    }
    let c_h = match n {
        1 => single(1),
        2 => single(1) - single(2),
        _ => Rational::zero(),
    };
    if n == 1 || n == 2 {
        out.add_term(GeneratorId::H, &c_h);
    }

    // Coefficients of the D_{{a,b},0}; pairs not listed are zero.
    let mut pairs: BTreeMap<MarkingSet, Rational> = BTreeMap::new();
    if n == 2 {
        pairs.insert(pair(1, 2), single(2));
    } else if n >= 3 {
        for j in 2..=n - 2 {
            pairs.insert(pair(1, j), single(j));
        }
        let middle = (2..=n - 2).fold(Rational::zero(), |acc, j| acc + single(j));
        let half = Rational::new(1.into(), 2.into());
        let (first, prev, last) = (single(1), single(n - 1), single(n));
        pairs.insert(pair(1, n - 1), &half * (&first - &middle + &prev - &last));
        pairs.insert(pair(1, n), &half * (&first - &middle - &prev + &last));
        pairs.insert(pair(n - 1, n), &half * (-&first + &middle + &prev + &last));
    }
    for (set, c) in &pairs {
        out.add_term(GeneratorId::Boundary { set: *set, k: 0 }, c);
    }

    let n_empty_one = profile.value(MarkingSet::EMPTY, 1);
    for g in basis(d, n) {
        let GeneratorId::Boundary { set, k } = g else { continue };
        if set.len() == 2 && k == 0 {
            continue;
        }
        let mut c = profile.value(set, k);
        if d > 0 {
            c -= int(k as i64 * (d as i64 - k as i64)) / int(d as i64) * &n_empty_one;
        }
        if set.contains(1) {
            c -= &c_h;
        }
        for (pair_set, pc) in &pairs {
            if pair_set.intersection(set).len() == 1 {
                c -= pc;
            }
        }
        out.add_term(g, &(c / int(2)));
    }
    out
}

// ---------------------------------------------------------------------------
// Quotient reduction
// ---------------------------------------------------------------------------

/// Elimination data for one weight tuple.
#[derive(Debug)]
pub struct QuotientReducer {
    pivots: Vec<(GeneratorId, SparseRow<GeneratorId>)>,
    survivors: Vec<GeneratorId>,
}

impl QuotientReducer {
    /// Basis generators that remain free in the quotient.
    pub fn survivors(&self) -> &[GeneratorId] {
        &self.survivors
    }

    /// Generators expressed through the survivors.
    pub fn eliminated(&self) -> impl Iterator<Item = GeneratorId> + '_ {
        self.pivots.iter().map(|(g, _)| *g)
    }

    fn apply(&self, cls: &DivClass) -> DivClass {
        let mut row = reduce_to_basis(cls).coeffs;
        for (g, pivot_row) in &self.pivots {
            if let Some(c) = row.get(g).cloned() {
                axpy(&mut row, &-c, pivot_row);
            }
        }
        DivClass::from_row(cls.d, cls.n, row)
    }
}

fn quotient_reducers() -> &'static RwLock<HashMap<WeightTuple, Arc<QuotientReducer>>> {
    static CELL: OnceLock<RwLock<HashMap<WeightTuple, Arc<QuotientReducer>>>> = OnceLock::new();
    CELL.get_or_init(Default::default)
}

/// The elimination used by [`to_quotient`] for an admissible tuple.
///
/// The quotient Picard group is `Pic(Y_{d,n}) ⊗ Q` modulo the span of every
/// unstable boundary generator (removed ones included, through their basis
/// expansion) and of the fixed-point classes of the markings whose fixed
/// locus is unstable.  Pivots are chosen among unstable basis generators
/// first, then `H`, then `G`, then the remaining boundary generators from
/// the end of the basis order.
pub fn quotient_reducer(wt: &WeightTuple) -> Result<Arc<QuotientReducer>> {
    wt.require_admissible()?;
    if let Some(r) = quotient_reducers().read().unwrap().get(wt) {
        return Ok(r.clone());
    }
    let (d, n) = (wt.degree(), wt.n());
    let mut relations: Vec<SparseRow<GeneratorId>> = Vec::new();
    let mut unstable_basis = Vec::new();
    for g in generators(d, n) {
        if let GeneratorId::Boundary { set, k } = g {
            if !wt.boundary_stable(set, k)? {
                relations.push(reduce_to_basis(&DivClass::generator(d, n, g)).coeffs);
                if !is_removed(n, g) {
                    unstable_basis.push(g);
                }
            }
        }
    }
    for i in 1..=n {
        if !wt.fix_stable(i)? {
            relations.push(divisors::class_fix(d, n, i)?.coeffs);
        }
    }
    let mut preference = unstable_basis;
    preference.extend([GeneratorId::H, GeneratorId::G]);
    preference.extend(basis(d, n).into_iter().rev().filter(|g| g.as_boundary().is_some()));
    let (pivots, leftover) = reduce_rows(relations, &preference);
    if !leftover.is_empty() {
        return Err(Error::InconsistentElimination(format!(
            "{wt}: relation outside the basis"
        )));
    }
    let eliminated: Vec<GeneratorId> = pivots.iter().map(|(g, _)| *g).collect();
    let survivors: Vec<GeneratorId> = basis(d, n).into_iter().filter(|g| !eliminated.contains(g)).collect();
    if survivors.is_empty() && wt.dimension() > 0 {
        return Err(Error::InconsistentElimination(format!(
            "{wt}: every generator is eliminated on a space of dimension {}",
            wt.dimension()
        )));
    }
    let reducer = Arc::new(QuotientReducer { pivots, survivors });
    quotient_reducers().write().unwrap().insert(wt.clone(), reducer.clone());
    Ok(reducer)
}

/// Canonical representative of `cls` in the Picard group of the quotient
/// `M(d | d₁, …, dₙ)`.
pub fn to_quotient(cls: &DivClass, wt: &WeightTuple) -> Result<DivClass> {
    cls.check_space(wt.degree(), wt.n())?;
    Ok(quotient_reducer(wt)?.apply(cls))
}
