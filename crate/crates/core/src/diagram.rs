//! Persistence diagrams, virtual persistence diagrams and graph persistence.
//!
//! [`Diagram`] and [`VpdElement`] are multiplicity maps over the generators
//! of a [`GroundSpace`](crate::metric::GroundSpace), keyed by generator index.
//! [`PointDiagram`] is the coordinate form used in files: a list of
//! birth-death points with (possibly signed) multiplicities.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{birth_death_space, BirthDeathPoint, BirthDeathSpace, GroundSpace};

/// A finite persistence diagram: positive multiplicities on generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagram {
    counts: BTreeMap<usize, u32>,
}

impl Diagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut d = Self::new();
        for (g, m) in counts {
            d.insert(g, m);
        }
        d
    }

    pub fn insert(&mut self, generator: usize, multiplicity: u32) {
        if multiplicity > 0 {
            *self.counts.entry(generator).or_insert(0) += multiplicity;
        }
    }

    pub fn get(&self, generator: usize) -> u32 {
        self.counts.get(&generator).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts.iter().map(|(&g, &m)| (g, m))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of points counted with multiplicity.
    pub fn cardinality(&self) -> u64 {
        self.counts.values().map(|&m| m as u64).sum()
    }

    pub fn to_vpd(&self) -> VpdElement {
        VpdElement::from_coeffs(self.iter().map(|(g, m)| (g, m as i64)))
    }

    pub fn check_support(&self, space: &GroundSpace) -> Result<()> {
        check_support(self.counts.keys().copied(), space)
    }
}

/// An element of the virtual persistence diagram group: a finitely supported
/// integer combination of generators with no stored zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VpdElement {
    coeffs: BTreeMap<usize, i64>,
}

impl VpdElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Basis element `e_x`.
    pub fn basis(generator: usize) -> Self {
        Self::from_coeffs([(generator, 1)])
    }

    pub fn from_coeffs(coeffs: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut map = BTreeMap::new();
        for (g, n) in coeffs {
            *map.entry(g).or_insert(0) += n;
        }
        map.retain(|_, n| *n != 0);
        Self { coeffs: map }
    }

    /// Element with the given coordinates in `Z^rank`.
    pub fn from_lattice(point: &[i32]) -> Self {
        Self::from_coeffs(point.iter().enumerate().map(|(g, &n)| (g, n as i64)))
    }

    /// Coordinates in `Z^rank`.
    pub fn to_lattice(&self, rank: usize) -> Result<Vec<i32>> {
        let mut out = vec![0i32; rank];
        for (&g, &n) in &self.coeffs {
            if g >= rank {
                return Err(Error::UnknownGenerator { index: g, rank });
            }
            out[g] = i32::try_from(n).map_err(|_| Error::InvalidArgument(format!("coefficient {n} overflows i32")))?;
        }
        Ok(out)
    }

    pub fn coeff(&self, generator: usize) -> i64 {
        self.coeffs.get(&generator).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.coeffs.iter().map(|(&g, &n)| (g, n))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, k: i64) -> Self {
        Self::from_coeffs(self.iter().map(|(g, n)| (g, n * k)))
    }

    /// Positive and negative parts `(α', β')` with disjoint supports and
    /// `self = α' - β'`.
    pub fn split(&self) -> (Diagram, Diagram) {
        let mut pos = Diagram::new();
        let mut neg = Diagram::new();
        for (g, n) in self.iter() {
            let m = u32::try_from(n.unsigned_abs()).unwrap_or(u32::MAX);
            if n > 0 {
                pos.insert(g, m);
            } else {
                neg.insert(g, m);
            }
        }
        (pos, neg)
    }

    /// Mass functional: `Σ |n_u| d1(u, [A])`.
    pub fn mass(&self, space: &GroundSpace) -> f64 {
        self.iter()
            .map(|(g, n)| n.unsigned_abs() as f64 * space.to_base(g))
            .sum()
    }

    pub fn check_support(&self, space: &GroundSpace) -> Result<()> {
        check_support(self.coeffs.keys().copied(), space)
    }
}

fn check_support(mut keys: impl Iterator<Item = usize>, space: &GroundSpace) -> Result<()> {
    match keys.find(|&g| g >= space.rank()) {
        Some(index) => Err(Error::UnknownGenerator {
            index,
            rank: space.rank(),
        }),
        None => Ok(()),
    }
}

impl Add for &VpdElement {
    type Output = VpdElement;

    fn add(self, rhs: &VpdElement) -> VpdElement {
        VpdElement::from_coeffs(self.iter().chain(rhs.iter()))
    }
}

impl Add for VpdElement {
    type Output = VpdElement;

    fn add(self, rhs: VpdElement) -> VpdElement {
        &self + &rhs
    }
}

impl Neg for &VpdElement {
    type Output = VpdElement;

    fn neg(self) -> VpdElement {
        self.scale(-1)
    }
}

impl Neg for VpdElement {
    type Output = VpdElement;

    fn neg(self) -> VpdElement {
        self.scale(-1)
    }
}

impl Sub for &VpdElement {
    type Output = VpdElement;

    fn sub(self, rhs: &VpdElement) -> VpdElement {
        VpdElement::from_coeffs(self.iter().chain(rhs.iter().map(|(g, n)| (g, -n))))
    }
}

impl Sub for VpdElement {
    type Output = VpdElement;

    fn sub(self, rhs: VpdElement) -> VpdElement {
        &self - &rhs
    }
}

/// `a - b` as an element of the group completion.
pub fn vpd_diff(a: &Diagram, b: &Diagram) -> VpdElement {
    &a.to_vpd() - &b.to_vpd()
}

/// A diagram in coordinates: birth-death points with signed multiplicities.
///
/// Serialized as `{"points": [[birth, death, multiplicity], ...]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointDiagramFile", into = "PointDiagramFile")]
pub struct PointDiagram {
    points: Vec<(BirthDeathPoint, i64)>,
}

#[derive(Serialize, Deserialize)]
struct PointDiagramFile {
    points: Vec<(f64, f64, i64)>,
}

impl TryFrom<PointDiagramFile> for PointDiagram {
    type Error = Error;

    fn try_from(file: PointDiagramFile) -> Result<Self> {
        let pts = file
            .points
            .into_iter()
            .map(|(b, d, m)| Ok((BirthDeathPoint::new(b, d)?, m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointDiagram::new(pts))
    }
}

impl From<PointDiagram> for PointDiagramFile {
    fn from(d: PointDiagram) -> Self {
        PointDiagramFile {
            points: d.points.into_iter().map(|(p, m)| (p.birth, p.death, m)).collect(),
        }
    }
}

impl PointDiagram {
    /// Collects points, merging repeated coordinates and dropping zero
    /// multiplicities. Points are kept sorted by `(death, birth)`.
    pub fn new(points: impl IntoIterator<Item = (BirthDeathPoint, i64)>) -> Self {
        let mut pts: Vec<(BirthDeathPoint, i64)> = points.into_iter().collect();
        pts.sort_by(|a, b| a.0.death.total_cmp(&b.0.death).then(a.0.birth.total_cmp(&b.0.birth)));
        let mut merged: Vec<(BirthDeathPoint, i64)> = Vec::with_capacity(pts.len());
        for (p, m) in pts {
            match merged.last_mut() {
                Some((q, n)) if q.total_cmp(&p).is_eq() => *n += m,
                _ => merged.push((p, m)),
            }
        }
        merged.retain(|(_, m)| *m != 0);
        Self { points: merged }
    }

    pub fn points(&self) -> &[(BirthDeathPoint, i64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when every multiplicity is positive (an ordinary diagram).
    pub fn is_plain(&self) -> bool {
        self.points.iter().all(|(_, m)| *m > 0)
    }

    pub fn support(&self) -> impl Iterator<Item = BirthDeathPoint> + '_ {
        self.points.iter().map(|(p, _)| *p)
    }

    pub fn to_vpd(&self, space: &BirthDeathSpace) -> Result<VpdElement> {
        let coeffs = self
            .points
            .iter()
            .map(|(p, m)| {
                space.index_of(p).map(|g| (g, *m)).ok_or(Error::UnknownPoint {
                    birth: p.birth,
                    death: p.death,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VpdElement::from_coeffs(coeffs))
    }

    pub fn to_diagram(&self, space: &BirthDeathSpace) -> Result<Diagram> {
        if !self.is_plain() {
            return Err(Error::InvalidArgument("diagram has non-positive multiplicities".into()));
        }
        let (pos, _) = self.to_vpd(space)?.split();
        Ok(pos)
    }

    pub fn from_vpd(g: &VpdElement, space: &BirthDeathSpace) -> Self {
        Self::new(g.iter().map(|(i, n)| (space.points()[i], n)))
    }
}

/// Ground space spanned by the union of the supports of several diagrams.
pub fn union_space<'a>(diagrams: impl IntoIterator<Item = &'a PointDiagram>) -> Result<BirthDeathSpace> {
    let pts: Vec<BirthDeathPoint> = diagrams.into_iter().flat_map(|d| d.support()).collect();
    birth_death_space(&pts)
}

/// An undirected graph with positive edge weights.
///
/// Serialized as `{"vertices": n, "edges": [[u, v, w], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct WeightedGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphFile> for WeightedGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        WeightedGraph::new(f.vertices, f.edges)
    }
}

impl From<WeightedGraph> for GraphFile {
    fn from(g: WeightedGraph) -> Self {
        GraphFile {
            vertices: g.vertex_count,
            edges: g.edges,
        }
    }
}

impl WeightedGraph {
    /// Validates and normalizes edges to `u < v`.
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if b >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) has weight {w}")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            norm.push((a, b, w));
        }
        Ok(Self {
            vertex_count,
            edges: norm,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the classes of `a` and `b`; false if they were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (hi, lo) = if self.rank[a] >= self.rank[b] { (a, b) } else { (b, a) };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        true
    }
}

/// Zero-dimensional persistence of the edge-weight filtration.
///
/// All vertices are born at 0. Edges are processed by increasing weight
/// (ties in input order); every edge joining two components kills one of
/// them and emits `(0, weight)`. Essential classes are omitted.
pub fn h0_persistence(graph: &WeightedGraph) -> PointDiagram {
    let mut order: Vec<usize> = (0..graph.edges.len()).collect();
    order.sort_by(|&i, &j| graph.edges[i].2.total_cmp(&graph.edges[j].2));
    let mut dsu = DisjointSet::new(graph.vertex_count);
    let mut points = Vec::new();
    for i in order {
        let (u, v, w) = graph.edges[i];
        // Every vertex has the same birth, so the elder rule only decides
        // which label survives; the emitted point is (0, w) either way.
        if dsu.union(u, v) {
            points.push((BirthDeathPoint { birth: 0.0, death: w }, 1));
        }
    }
    PointDiagram::new(points)
}
