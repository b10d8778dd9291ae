//! Torus-equivariant integrals on `M̄_{0,n}(P¹, k)` by fixed-point
//! localization, with boundary divisors eliminated by recursive splitting.
//!
//! The torus acts on `P¹` with weights `+t` at `0` and `−t` at `∞`; the
//! hyperplane class restricts to those weights, so `h² = t²`.  Every graph
//! contribution is homogeneous in `t` of degree `deg − dim`, which lets the
//! graph sum be evaluated at `t = 1` and reattached to a single power of `t`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::markings::MarkingSet;
use crate::rational::{factorial, format_rational, int, pow, Rational};

/// A polynomial in the equivariant parameter `t`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivPoly {
    coeffs: BTreeMap<u32, Rational>,
}

impl EquivPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(coeff: Rational, exponent: u32) -> Self {
        let mut out = Self::zero();
        if !coeff.is_zero() {
            out.coeffs.insert(exponent, coeff);
        }
        out
    }

    pub fn constant(coeff: Rational) -> Self {
        Self::monomial(coeff, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, exponent: u32) -> Rational {
        self.coeffs.get(&exponent).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Rational)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn has_odd_terms(&self) -> bool {
        self.coeffs.keys().any(|e| e % 2 == 1)
    }

    pub fn add_scaled(&mut self, other: &EquivPoly, factor: &Rational) {
        for (e, c) in &other.coeffs {
            let entry = self.coeffs.entry(*e).or_insert_with(Rational::zero);
            *entry += c * factor;
            if entry.is_zero() {
                self.coeffs.remove(e);
            }
        }
    }

    pub fn scaled(&self, factor: &Rational) -> EquivPoly {
        let mut out = EquivPoly::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn mul(&self, other: &EquivPoly) -> EquivPoly {
        let mut out = EquivPoly::zero();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                out.add_scaled(&EquivPoly::monomial(c1 * c2, e1 + e2), &Rational::one());
            }
        }
        out
    }
}

impl fmt::Display for EquivPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(e, c)| match e {
                0 => format_rational(c),
                1 => format!("{}*t", format_rational(c)),
                _ => format!("{}*t^{e}", format_rational(c)),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// A torus-fixed point of `P¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FixedPoint {
    Zero,
    Infinity,
}

impl FixedPoint {
    /// Weight of the hyperplane class at this point, at `t = 1`.
    fn weight(self) -> i64 {
        match self {
            FixedPoint::Zero => 1,
            FixedPoint::Infinity => -1,
        }
    }

    /// Tangent weight of `P¹` at this point, at `t = 1`.
    fn tangent(self) -> i64 {
        2 * self.weight()
    }

    fn opposite(self) -> Self {
        match self {
            FixedPoint::Zero => FixedPoint::Infinity,
            FixedPoint::Infinity => FixedPoint::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphVertex {
    pub point: FixedPoint,
    pub markings: MarkingSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub ends: (usize, usize),
    pub degree: u32,
}

/// A decorated tree indexing a fixed locus of `M̄_{0,n}(P¹, k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
}

impl FixedGraph {
    pub fn degree(&self) -> u32 {
        self.edges.iter().map(|e| e.degree).sum()
    }

    /// Edges at vertex `v` as `(edge index, other end)`.
    fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().enumerate().filter_map(move |(idx, e)| {
            if e.ends.0 == v {
                Some((idx, e.ends.1))
            } else if e.ends.1 == v {
                Some((idx, e.ends.0))
            } else {
                None
            }
        })
    }

    fn valence(&self, v: usize) -> usize {
        self.incident(v).count() + self.vertices[v].markings.len()
    }

    fn rooted_code(&self, v: usize, parent: Option<usize>) -> String {
        let mut children: Vec<String> = self
            .incident(v)
            .filter(|&(_, u)| Some(u) != parent)
            .map(|(idx, u)| format!("{}:{}", self.edges[idx].degree, self.rooted_code(u, Some(v))))
            .collect();
        children.sort();
        let vertex = &self.vertices[v];
        let point = if vertex.point == FixedPoint::Zero { '0' } else { 'i' };
        format!("({point}{:x}[{}])", vertex.markings.bits(), children.join(","))
    }

    /// A complete isomorphism invariant.
    fn canonical_code(&self) -> String {
        (0..self.vertices.len())
            .map(|root| self.rooted_code(root, None))
            .min()
            .unwrap_or_default()
    }
}

type GraphList = Arc<Vec<(FixedGraph, u64)>>;

fn graph_cache() -> &'static RwLock<HashMap<(usize, u32), GraphList>> {
    static CELL: OnceLock<RwLock<HashMap<(usize, u32), GraphList>>> = OnceLock::new();
    CELL.get_or_init(Default::default)
}

fn check_stable(n: usize, k: u32) -> Result<()> {
    if k == 0 && n < 3 {
        return Err(Error::InvalidExpression(format!("M_0,{n}(P1,0) is unstable")));
    }
    Ok(())
}

/// Fixed graphs of `M̄_{0,n}(P¹, k)` up to isomorphism, with the order of
/// their automorphism groups.
pub fn enumerate_fixed_graphs(n: usize, k: u32) -> Result<GraphList> {
    check_stable(n, k)?;
    if let Some(list) = graph_cache().read().unwrap().get(&(n, k)) {
        return Ok(list.clone());
    }
    let list = Arc::new(build_graphs(n, k));
    graph_cache().write().unwrap().insert((n, k), list.clone());
    Ok(list)
}

fn build_graphs(n: usize, k: u32) -> Vec<(FixedGraph, u64)> {
    if k == 0 {
        return [FixedPoint::Zero, FixedPoint::Infinity]
            .into_iter()
            .map(|point| {
                let vertex = GraphVertex {
                    point,
                    markings: MarkingSet::full(n),
                };
                (
                    FixedGraph {
                        vertices: vec![vertex],
                        edges: Vec::new(),
                    },
                    1,
                )
            })
            .collect();
    }
    // Orbits of labelled graphs under relabelling the vertices: an orbit
    // of size s has V!/s automorphisms.
    let mut orbits: BTreeMap<String, (FixedGraph, u64)> = BTreeMap::new();
    for vertex_count in 2..=(k as usize + 1) {
        let labelled_total = factorial_u64(vertex_count);
        for tree in labelled_trees(vertex_count) {
            for root_point in [FixedPoint::Zero, FixedPoint::Infinity] {
                let points = two_colouring(vertex_count, &tree, root_point);
                for degrees in compositions(k, tree.len()) {
                    for assignment in assignments(n, vertex_count) {
                        let graph = FixedGraph {
                            vertices: (0..vertex_count)
                                .map(|v| GraphVertex {
                                    point: points[v],
                                    markings: assignment[v],
                                })
                                .collect(),
                            edges: tree
                                .iter()
                                .zip(&degrees)
                                .map(|(&ends, &degree)| GraphEdge { ends, degree })
                                .collect(),
                        };
                        orbits.entry(graph.canonical_code()).or_insert((graph, 0)).1 += 1;
                    }
                }
            }
        }
        for (graph, count) in orbits.values_mut() {
            if graph.vertices.len() == vertex_count {
                *count = labelled_total / *count;
            }
        }
    }
    orbits.into_values().collect()
}

fn factorial_u64(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Labelled trees on `count ≥ 2` vertices via Prüfer sequences.
fn labelled_trees(count: usize) -> Vec<Vec<(usize, usize)>> {
    let len = count - 2;
    let total = count.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<usize> = (0..len)
                .map(|_| {
                    let digit = code % count;
                    code /= count;
                    digit
                })
                .collect();
            prufer_decode(count, &seq)
        })
        .collect()
}

fn prufer_decode(count: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; count];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(count - 1);
    for &s in seq {
        let leaf = (0..count).find(|&v| degree[v] == 1).expect("a leaf exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..count).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

fn two_colouring(count: usize, tree: &[(usize, usize)], root: FixedPoint) -> Vec<FixedPoint> {
    let mut points: Vec<Option<FixedPoint>> = vec![None; count];
    points[0] = Some(root);
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in tree {
            match (points[a], points[b]) {
                (Some(p), None) => {
                    points[b] = Some(p.opposite());
                    changed = true;
                }
                (None, Some(p)) => {
                    points[a] = Some(p.opposite());
                    changed = true;
                }
                _ => {}
            }
        }
    }
    points.into_iter().map(|p| p.expect("trees are connected")).collect()
}

/// Ordered compositions of `total` into `parts` positive integers.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts as u32 - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All ways of placing markings `1..=n` on `count` vertices.
fn assignments(n: usize, count: usize) -> Vec<Vec<MarkingSet>> {
    let mut out = vec![vec![MarkingSet::EMPTY; count]];
    for i in 1..=n {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..count).map(move |v| {
                    let mut next = a.clone();
                    next[v] = next[v].with(i);
                    next
                })
            })
            .collect();
    }
    out
}

/// `∫_{M̄_{0,m}} Π ψ^{a}` for the given exponents.
fn vertex_integral(exponents: &[u32]) -> Rational {
    let m = exponents.len();
    let total: u32 = exponents.iter().sum();
    if m < 3 || total as usize != m - 3 {
        return Rational::zero();
    }
    exponents
        .iter()
        .fold(factorial((m - 3) as u32), |acc, &a| acc / factorial(a))
}

/// Contribution of one graph to `∫ Π ev_i^{e_i} ψ_i^{p_i}` at `t = 1`,
/// before dividing by `|Aut|`.
fn graph_contribution(graph: &FixedGraph, ev: &[u32], psi: &[u32]) -> Rational {
    let mut value = Rational::one();
    for edge in &graph.edges {
        let d = edge.degree;
        // Edge moving part, with the 1/d from the edge's cyclic automorphisms.
        let numerator = pow(&int(d as i64), 2 * d as i64);
        let sign = if d % 2 == 0 { 1 } else { -1 };
        let denominator = factorial(d) * factorial(d) * pow(&int(4), d as i64) * int(sign) * int(d as i64);
        value *= numerator / denominator;
    }
    for (v, vertex) in graph.vertices.iter().enumerate() {
        let w = int(vertex.point.tangent());
        let flags: Vec<Rational> = graph
            .incident(v)
            .map(|(idx, _)| int(vertex.point.tangent()) / int(graph.edges[idx].degree as i64))
            .collect();
        value *= pow(&w, flags.len() as i64 - 1);
        for i in vertex.markings.iter() {
            value *= pow(&int(vertex.point.weight()), ev[i - 1] as i64);
        }
        match (graph.valence(v), flags.len()) {
            (1, _) => value *= &flags[0],
            (2, 2) => value /= &flags[0] + &flags[1],
            (2, 1) => {
                let i = vertex.markings.iter().next().expect("one marking");
                value *= pow(&-&flags[0], psi[i - 1] as i64);
            }
            (valence, _) => value *= vertex_factor(valence, vertex.markings, &flags, psi),
        }
        if value.is_zero() {
            break;
        }
    }
    value
}

/// `∫_{M̄_{0,val}} Π_{i} ψ_i^{p_i} Π_F 1/(ω_F − ψ_F)`.
fn vertex_factor(valence: usize, markings: MarkingSet, flags: &[Rational], psi: &[u32]) -> Rational {
    let marked: Vec<u32> = markings.iter().map(|i| psi[i - 1]).collect();
    let used: u32 = marked.iter().sum();
    let Some(free) = (valence as u32 - 3).checked_sub(used) else {
        return Rational::zero();
    };
    let mut total = Rational::zero();
    for split in weak_compositions(free, flags.len()) {
        let mut exponents = marked.clone();
        exponents.extend(&split);
        let mut term = vertex_integral(&exponents);
        for (omega, &j) in flags.iter().zip(&split) {
            term /= pow(omega, j as i64 + 1);
        }
        total += term;
    }
    total
}

fn weak_compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in weak_compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn dimension(n: usize, k: u32) -> i64 {
    2 * k as i64 - 2 + n as i64
}

/// `∫_{M̄_{0,n}(P¹,k)} Π ev_i^{ev[i-1]} ψ_i^{psi[i-1]}` as a polynomial in `t`.
pub fn integrate_ev_psi(n: usize, k: u32, ev: &[u32], psi: &[u32]) -> Result<EquivPoly> {
    check_stable(n, k)?;
    if ev.len() != n || psi.len() != n {
        return Err(Error::InvalidExpression(format!(
            "expected {n} exponents for ev and psi"
        )));
    }
    let degree: i64 = ev.iter().chain(psi).map(|&e| e as i64).sum();
    let excess = degree - dimension(n, k);
    let graphs = enumerate_fixed_graphs(n, k)?;
    let mut sum = Rational::zero();
    for (graph, aut) in graphs.iter() {
        sum += graph_contribution(graph, ev, psi) / int(*aut as i64);
    }
    if excess < 0 || excess % 2 == 1 {
        if !sum.is_zero() {
            return Err(Error::Invariant(format!(
                "localization on M_0,{n}(P1,{k}) left a nonzero t^{excess} term {sum}"
            )));
        }
        return Ok(EquivPoly::zero());
    }
    Ok(EquivPoly::monomial(sum, excess as u32))
}

/// A factor of an integrand on `M̄_{0,n}(P¹,k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BAtom {
    /// The hyperplane class pulled back by the evaluation at a marking.
    Ev(usize),
    /// The cotangent class at a marking.
    Psi(usize),
    /// The boundary divisor whose side `set` carries degree `k`; stored with
    /// the canonical side (see [`boundary_atom`]).
    Bdry { set: MarkingSet, k: u32 },
}

impl fmt::Display for BAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BAtom::Ev(i) => write!(f, "ev{i}"),
            BAtom::Psi(i) => write!(f, "psi{i}"),
            BAtom::Bdry { set, k } => write!(f, "D({set},{k})"),
        }
    }
}

/// Whether a side `(set, j)` of a node has enough special points.
fn side_stable(set: MarkingSet, j: u32) -> bool {
    j >= 1 || set.len() >= 2
}

/// The boundary divisor `D(set, j; complement, k − j)` of `M̄_{0,n}(P¹,k)`
/// in canonical form: the side without marking `n`, or for `n = 0` the
/// side of smaller degree.
pub fn boundary_atom(n: usize, k: u32, set: MarkingSet, j: u32) -> Result<BAtom> {
    let full = MarkingSet::full(n);
    let other = set.complement(n);
    if !set.is_subset(full) || j > k || !side_stable(set, j) || !side_stable(other, k - j) {
        return Err(Error::UnstableBoundary {
            set: set.to_string(),
            k: j,
        });
    }
    let flip = if n == 0 { j > k - j } else { set.contains(n) };
    Ok(if flip {
        BAtom::Bdry { set: other, k: k - j }
    } else {
        BAtom::Bdry { set, k: j }
    })
}

fn validate_atoms(n: usize, k: u32, atoms: &[BAtom]) -> Result<Vec<BAtom>> {
    check_stable(n, k)?;
    atoms
        .iter()
        .map(|&atom| match atom {
            BAtom::Ev(i) | BAtom::Psi(i) if (1..=n).contains(&i) => Ok(atom),
            BAtom::Ev(i) | BAtom::Psi(i) => Err(Error::MarkingOutOfRange { index: i, n }),
            BAtom::Bdry { set, k: j } => boundary_atom(n, k, set, j),
        })
        .collect()
}

type ExprKey = (usize, u32, Vec<BAtom>);

fn expr_memo() -> &'static RwLock<HashMap<ExprKey, EquivPoly>> {
    static CELL: OnceLock<RwLock<HashMap<ExprKey, EquivPoly>>> = OnceLock::new();
    CELL.get_or_init(Default::default)
}

/// `∫_{M̄_{0,n}(P¹,k)}` of a product of atoms.
pub fn integrate_expr(n: usize, k: u32, atoms: &[BAtom]) -> Result<EquivPoly> {
    let mut atoms = validate_atoms(n, k, atoms)?;
    atoms.sort();
    integrate_sorted(n, k, atoms)
}

/// Like [`integrate_expr`], but splits along the boundary atom at
/// `index` first.
pub fn integrate_expr_splitting(n: usize, k: u32, atoms: &[BAtom], index: usize) -> Result<EquivPoly> {
    let atoms = validate_atoms(n, k, atoms)?;
    match atoms.get(index) {
        Some(BAtom::Bdry { .. }) => split_along(n, k, &atoms, index),
        _ => Err(Error::InvalidExpression(format!(
            "atom {index} is not a boundary divisor"
        ))),
    }
}

fn integrate_sorted(n: usize, k: u32, atoms: Vec<BAtom>) -> Result<EquivPoly> {
    let key = (n, k, atoms);
    if let Some(hit) = expr_memo().read().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let atoms = &key.2;
    let result = match atoms.iter().position(|a| matches!(a, BAtom::Bdry { .. })) {
        Some(index) => split_along(n, k, atoms, index)?,
        None => {
            let (mut ev, mut psi) = (vec![0u32; n], vec![0u32; n]);
            for atom in atoms {
                match *atom {
                    BAtom::Ev(i) => ev[i - 1] += 1,
                    BAtom::Psi(i) => psi[i - 1] += 1,
                    BAtom::Bdry { .. } => unreachable!(),
                }
            }
            integrate_ev_psi(n, k, &ev, &psi)?
        }
    };
    expr_memo().write().unwrap().insert(key, result.clone());
    Ok(result)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// One of the two halves of a boundary divisor, as its own stable-maps
/// space with the node marking last.
struct Half {
    markings: MarkingSet,
    degree: u32,
}

impl Half {
    fn n(&self) -> usize {
        self.markings.len() + 1
    }

    fn node(&self) -> usize {
        self.n()
    }

    fn index_of(&self, i: usize) -> usize {
        self.markings.iter().position(|m| m == i).expect("marking on this half") + 1
    }

    fn relabel(&self, set: MarkingSet) -> MarkingSet {
        set.relabel(|i| self.index_of(i))
    }

    /// The restriction of the side `(set, j)` of another divisor, if it
    /// lies on this half.
    fn restrict_side(&self, set: MarkingSet, j: u32) -> Option<BAtom> {
        if !set.is_subset(self.markings) || j > self.degree {
            return None;
        }
        let rest = self.markings.difference(set);
        if self.degree - j == 0 && rest.is_empty() {
            return None;
        }
        let atom = boundary_atom(self.n(), self.degree, self.relabel(set), j).expect("restricted sides stay stable");
        Some(atom)
    }
}

type Term = (Rational, Side, BAtom);

fn split_along(n: usize, k: u32, atoms: &[BAtom], index: usize) -> Result<EquivPoly> {
    let BAtom::Bdry { set, k: j } = atoms[index] else {
        unreachable!("caller checked");
    };
    let left = Half {
        markings: set,
        degree: j,
    };
    let right = Half {
        markings: set.complement(n),
        degree: k - j,
    };

    let mut factors: Vec<Vec<Term>> = Vec::new();
    for (pos, &atom) in atoms.iter().enumerate() {
        if pos == index {
            continue;
        }
        let mut terms: Vec<Term> = Vec::new();
        match atom {
            BAtom::Ev(i) | BAtom::Psi(i) => {
                let (side, half) = if left.markings.contains(i) {
                    (Side::Left, &left)
                } else {
                    (Side::Right, &right)
                };
                let local = half.index_of(i);
                let moved = if matches!(atom, BAtom::Ev(_)) {
                    BAtom::Ev(local)
                } else {
                    BAtom::Psi(local)
                };
                terms.push((Rational::one(), side, moved));
            }
            BAtom::Bdry { set: other, k: jj } => {
                let mut sides = vec![(other, jj)];
                let flipped = (other.complement(n), k - jj);
                if flipped != (other, jj) {
                    sides.push(flipped);
                }
                for (s, deg) in sides {
                    if let Some(a) = left.restrict_side(s, deg) {
                        terms.push((Rational::one(), Side::Left, a));
                    }
                    if let Some(a) = right.restrict_side(s, deg) {
                        terms.push((Rational::one(), Side::Right, a));
                    }
                }
                if atom == atoms[index] {
                    terms.push((-Rational::one(), Side::Left, BAtom::Psi(left.node())));
                    terms.push((-Rational::one(), Side::Right, BAtom::Psi(right.node())));
                }
            }
        }
        factors.push(terms);
    }
    factors.push(vec![
        (Rational::one(), Side::Left, BAtom::Ev(left.node())),
        (Rational::one(), Side::Right, BAtom::Ev(right.node())),
    ]);

    let mut expanded: HashMap<(Vec<BAtom>, Vec<BAtom>), Rational> = HashMap::new();
    expand(&factors, Rational::one(), Vec::new(), Vec::new(), &mut expanded);

    let mut total = EquivPoly::zero();
    for ((mut l_atoms, mut r_atoms), coeff) in expanded {
        if coeff.is_zero() {
            continue;
        }
        if (l_atoms.len() as i64) < dimension(left.n(), left.degree)
            || (r_atoms.len() as i64) < dimension(right.n(), right.degree)
        {
            continue;
        }
        l_atoms.sort();
        r_atoms.sort();
        let l = integrate_sorted(left.n(), left.degree, l_atoms)?;
        if l.is_zero() {
            continue;
        }
        let r = integrate_sorted(right.n(), right.degree, r_atoms)?;
        total.add_scaled(&l.mul(&r), &coeff);
    }
    if n == 0 && j == k - j {
        // The two halves are interchangeable, so gluing is 2:1 onto the divisor.
        total = total.scaled(&Rational::new(1.into(), 2.into()));
    }
    Ok(total)
}

fn expand(
    factors: &[Vec<Term>],
    coeff: Rational,
    left: Vec<BAtom>,
    right: Vec<BAtom>,
    out: &mut HashMap<(Vec<BAtom>, Vec<BAtom>), Rational>,
) {
    let Some((first, rest)) = factors.split_first() else {
        let mut key = (left, right);
        key.0.sort();
        key.1.sort();
        *out.entry(key).or_insert_with(Rational::zero) += coeff;
        return;
    };
    for (c, side, atom) in first {
        let (mut l, mut r) = (left.clone(), right.clone());
        match side {
            Side::Left => l.push(*atom),
            Side::Right => r.push(*atom),
        }
        expand(rest, &coeff * c, l, r, out);
    }
}
