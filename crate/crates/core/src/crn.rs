//! Static analysis of reaction networks.
//!
//! Builds the stoichiometric matrix `U[s][r] = b_{r,s} - a_{r,s}`, the graph
//! of complexes, linkage classes and weak reversibility, and evaluates the
//! deficiency `|C| - l - rank(U)`. A weakly reversible network with zero
//! deficiency has a unique, asymptotically stable fixed point; otherwise
//! the test is inconclusive.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::chem::{Reaction, SpeciesId};
use crate::topology::NetworkGraph;

/// Integer species-by-reaction matrix of net molecule changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoichiometricMatrix {
    pub species: Vec<SpeciesId>,
    pub reactions: Vec<usize>,
    pub entries: Vec<Vec<i64>>,
}

impl StoichiometricMatrix {
    pub fn entry(&self, species: SpeciesId, reaction: usize) -> i64 {
        let s = self.species.iter().position(|&x| x == species);
        let r = self.reactions.iter().position(|&x| x == reaction);
        match (s, r) {
            (Some(s), Some(r)) => self.entries[s][r],
            _ => 0,
        }
    }

    pub fn rank(&self) -> usize {
        integer_rank(&self.entries)
    }

    /// `U * v` for a rate vector in reaction order.
    pub fn apply(&self, rates: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(rates)
                    .fold(0.0, |acc, (&u, &v)| acc + u as f64 * v)
            })
            .collect()
    }
}

/// Species occurring in the reactions, sorted.
pub fn species_of(reactions: &[Reaction]) -> Vec<SpeciesId> {
    let set: BTreeSet<SpeciesId> = reactions
        .iter()
        .flat_map(|r| r.reactants.iter().chain(&r.products).map(|t| t.0))
        .collect();
    set.into_iter().collect()
}

pub fn stoichiometric_matrix(reactions: &[Reaction]) -> StoichiometricMatrix {
    let species = species_of(reactions);
    let entries = species
        .iter()
        .map(|&s| {
            reactions
                .iter()
                .map(|r| i64::from(r.produced(s)) - i64::from(r.consumed(s)))
                .collect()
        })
        .collect();
    StoichiometricMatrix {
        species,
        reactions: reactions.iter().map(|r| r.id).collect(),
        entries,
    }
}

/// One side of a reaction as a canonical (sorted) multiset. The empty
/// complex stands for the zero complex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Complex(pub Vec<(SpeciesId, u32)>);

impl Complex {
    pub fn from_side(side: &[(SpeciesId, u32)]) -> Self {
        let mut m: BTreeMap<SpeciesId, u32> = BTreeMap::new();
        for &(s, c) in side {
            *m.entry(s).or_default() += c;
        }
        Complex(m.into_iter().filter(|&(_, c)| c > 0).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

/// Complexes as vertices, one directed edge per reaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexGraph {
    pub complexes: Vec<Complex>,
    pub edges: Vec<(usize, usize)>,
}

pub fn complex_graph(reactions: &[Reaction]) -> ComplexGraph {
    let mut index: BTreeMap<Complex, usize> = BTreeMap::new();
    let mut complexes = Vec::new();
    let mut id_of = |c: Complex, complexes: &mut Vec<Complex>| {
        *index.entry(c.clone()).or_insert_with(|| {
            complexes.push(c);
            complexes.len() - 1
        })
    };
    let mut edges = Vec::with_capacity(reactions.len());
    for r in reactions {
        let a = id_of(Complex::from_side(&r.reactants), &mut complexes);
        let b = id_of(Complex::from_side(&r.products), &mut complexes);
        edges.push((a, b));
    }
    ComplexGraph { complexes, edges }
}

pub fn complexes(reactions: &[Reaction]) -> BTreeSet<Complex> {
    complex_graph(reactions).complexes.into_iter().collect()
}

/// Weakly connected components of the complex graph.
pub fn linkage_classes(cg: &ComplexGraph) -> usize {
    let n = cg.complexes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in &cg.edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Strongly connected component label per complex (Kosaraju).
fn strong_components(cg: &ComplexGraph) -> Vec<usize> {
    let n = cg.complexes.len();
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for &(a, b) in &cg.edges {
        fwd[a].push(b);
        bwd[b].push(a);
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next < fwd[u].len() {
                let v = fwd[u][*next];
                *next += 1;
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut label = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let mut stack = vec![root];
        comp[root] = label;
        while let Some(u) = stack.pop() {
            for &v in &bwd[u] {
                if comp[v] == usize::MAX {
                    comp[v] = label;
                    stack.push(v);
                }
            }
        }
        label += 1;
    }
    comp
}

/// Every reaction edge lies inside a strongly connected component.
pub fn is_weakly_reversible(cg: &ComplexGraph) -> bool {
    let comp = strong_components(cg);
    cg.edges.iter().all(|&(a, b)| comp[a] == comp[b])
}

/// Rank over the rationals via fraction-free elimination; rows are reduced
/// by their gcd after each step so entries stay small.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| i128::from(x)).collect())
        .collect();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let p = m[rank][col];
        for i in rank + 1..m.len() {
            let f = m[i][col];
            if f == 0 {
                continue;
            }
            let (top, rest) = m.split_at_mut(i);
            for (x, &y) in rest[0][col..ncols].iter_mut().zip(&top[rank][col..ncols]) {
                *x = *x * p - y * f;
            }
            let g = m[i].iter().fold(0i128, |g, &x| gcd(g, x));
            if g > 1 {
                for x in m[i].iter_mut() {
                    *x /= g;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn deficiency(reactions: &[Reaction]) -> usize {
    analyze(reactions).deficiency
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    StableUniqueFixedPoint,
    Inconclusive,
}

/// Summary of a deficiency analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnalysisReport {
    pub complexes: usize,
    pub linkage_classes: usize,
    pub rank: usize,
    pub deficiency: usize,
    pub weakly_reversible: bool,
    pub verdict: Verdict,
}

pub fn analyze(reactions: &[Reaction]) -> AnalysisReport {
    let cg = complex_graph(reactions);
    let c = cg.complexes.len();
    let l = linkage_classes(&cg);
    let rank = stoichiometric_matrix(reactions).rank();
    assert!(
        c >= l + rank,
        "negative deficiency: |C|={c}, l={l}, rank={rank}"
    );
    let deficiency = c - l - rank;
    let weakly_reversible = is_weakly_reversible(&cg);
    let verdict = if weakly_reversible && deficiency == 0 {
        Verdict::StableUniqueFixedPoint
    } else {
        Verdict::Inconclusive
    };
    AnalysisReport {
        complexes: c,
        linkage_classes: l,
        rank,
        deficiency,
        weakly_reversible,
        verdict,
    }
}

pub fn zero_deficiency_verdict(reactions: &[Reaction]) -> Verdict {
    analyze(reactions).verdict
}

/// One unicast reaction `S_i -> S_j` per edge `i -> j`, unit coefficient.
/// Its mean-field dynamics coincide with the broadcast + drain chemistry.
pub fn equivalent_unicast_form(g: &NetworkGraph) -> Vec<Reaction> {
    g.edges()
        .into_iter()
        .enumerate()
        .map(|(id, (i, j))| {
            Reaction::new(id, i, 1.0)
                .reactant(SpeciesId::s(i), 1)
                .product(SpeciesId::s(j), 1)
        })
        .collect()
}

/// `coefficient * prod(c_s ^ e_s)` over species indices of an [`OdeSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub monomial: Vec<(usize, u32)>,
}

/// Polynomial mass-action vector field, one polynomial per species.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    pub species: Vec<SpeciesId>,
    pub fields: Vec<Vec<Term>>,
}

impl OdeSystem {
    pub fn index(&self, s: SpeciesId) -> Option<usize> {
        self.species.iter().position(|&x| x == s)
    }

    pub fn field(&self, s: SpeciesId) -> Option<&[Term]> {
        self.index(s).map(|i| self.fields[i].as_slice())
    }

    pub fn eval(&self, state: &[f64]) -> Vec<f64> {
        self.fields
            .iter()
            .map(|poly| {
                poly.iter().fold(0.0, |acc, t| {
                    acc + t.monomial.iter().fold(t.coefficient, |p, &(s, e)| {
                        p * libm::pow(state[s], f64::from(e))
                    })
                })
            })
            .collect()
    }

    /// Replaces a species by a constant. The species keeps its (now
    /// irrelevant) row; monomials no longer mention it.
    pub fn substitute(&self, species: SpeciesId, value: f64) -> Self {
        let Some(idx) = self.index(species) else {
            return self.clone();
        };
        let fields = self
            .fields
            .iter()
            .map(|poly| {
                let terms = poly.iter().map(|t| {
                    let mut coefficient = t.coefficient;
                    let monomial = t
                        .monomial
                        .iter()
                        .filter(|&&(s, e)| {
                            if s == idx {
                                coefficient *= libm::pow(value, f64::from(e));
                                false
                            } else {
                                true
                            }
                        })
                        .copied()
                        .collect();
                    Term {
                        coefficient,
                        monomial,
                    }
                });
                normalize(terms)
            })
            .collect();
        Self {
            species: self.species.clone(),
            fields,
        }
    }
}

fn normalize(terms: impl Iterator<Item = Term>) -> Vec<Term> {
    let mut merged: BTreeMap<Vec<(usize, u32)>, f64> = BTreeMap::new();
    for t in terms {
        *merged.entry(t.monomial).or_insert(0.0) += t.coefficient;
    }
    merged
        .into_iter()
        .filter(|&(_, c)| c != 0.0)
        .map(|(monomial, coefficient)| Term {
            coefficient,
            monomial,
        })
        .collect()
}

/// `dc_s/dt = sum_r (b_{r,s} - a_{r,s}) v_r(c)`, with like monomials merged.
pub fn extract_odes(reactions: &[Reaction]) -> OdeSystem {
    let species = species_of(reactions);
    let index: BTreeMap<SpeciesId, usize> =
        species.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut raw: Vec<Vec<Term>> = vec![Vec::new(); species.len()];
    for r in reactions {
        let mut monomial: Vec<(usize, u32)> =
            r.reactants.iter().map(|&(s, a)| (index[&s], a)).collect();
        monomial.sort_unstable();
        for (i, &s) in species.iter().enumerate() {
            let net = i64::from(r.produced(s)) - i64::from(r.consumed(s));
            if net != 0 {
                raw[i].push(Term {
                    coefficient: net as f64 * r.coefficient,
                    monomial: monomial.clone(),
                });
            }
        }
    }
    OdeSystem {
        species,
        fields: raw.into_iter().map(|p| normalize(p.into_iter())).collect(),
    }
}

/// Mass-action rates of every reaction at a state given in
/// [`species_of`] order.
pub fn rate_vector(reactions: &[Reaction], species: &[SpeciesId], state: &[f64]) -> Vec<f64> {
    reactions
        .iter()
        .map(|r| {
            r.reactants.iter().fold(r.coefficient, |v, &(s, a)| {
                let i = species.iter().position(|&x| x == s).expect("species listed");
                v * libm::pow(state[i], f64::from(a))
            })
        })
        .collect()
}
