//! Dual-neighbourhood hypergraph over fine-scale regions.
//!
//! Each vertex `i` spawns one hyperedge `E_i = {i} ∪ N1(i) ∪ N2(i)` where
//! `N1` holds the regions spatially adjacent to `i` and `N2` the regions that
//! share its coarse-scale parent. Hyperedge weights are the mean pairwise
//! feature similarity `exp(−‖v_j − v_k‖ / bandwidth)` inside the edge.
//!
//! The propagation operator `P = Dv^{-1/2} H W De^{-1} Hᵀ Dv^{-1/2}` is
//! assembled once as a sparse symmetric matrix; `Λ = I − P` is the
//! normalised hypergraph Laplacian.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::NodeFeatures;
use crate::scalar::Scalar;
use crate::segmentation::Hierarchy;
use crate::sparse::Csr;

/// 0/1 incidence stored column-wise: `edges[j]` lists the members of `E_j`,
/// ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    vertices: usize,
    edges: Vec<Vec<usize>>,
}

impl Incidence {
    pub fn new(vertices: usize, mut edges: Vec<Vec<usize>>) -> Result<Self> {
        for (j, members) in edges.iter_mut().enumerate() {
            members.sort_unstable();
            members.dedup();
            if members.is_empty() {
                return Err(Error::DegenerateGraph(format!("hyperedge {j} is empty")));
            }
            if let Some(&bad) = members.iter().find(|&&v| v >= vertices) {
                return Err(Error::Dimension(format!("hyperedge {j} names vertex {bad} >= {vertices}")));
            }
        }
        Ok(Self { vertices, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, j: usize) -> &[usize] {
        &self.edges[j]
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn contains(&self, vertex: usize, edge: usize) -> bool {
        self.edges[edge].binary_search(&vertex).is_ok()
    }

    /// Hyperedges containing each vertex, ascending.
    pub fn vertex_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices];
        for (j, members) in self.edges.iter().enumerate() {
            for &v in members {
                out[v].push(j);
            }
        }
        out
    }

    /// `H` as an `N x L` sparse matrix.
    pub fn to_csr<T: Scalar>(&self) -> Csr<T> {
        let rows = self
            .vertex_edges()
            .into_iter()
            .map(|es| es.into_iter().map(|j| (j, T::one())).collect())
            .collect();
        Csr::from_sorted_rows(self.edges.len(), rows)
    }
}

fn check_vertex(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::Dimension(format!("vertex {i} out of range 0..{n}")));
    }
    Ok(())
}

/// Regions 4-adjacent to region `i` in the fine segmentation.
pub fn spatial_neighborhood(adjacency: &[Vec<usize>], i: usize) -> Result<Vec<usize>> {
    check_vertex(i, adjacency.len())?;
    Ok(adjacency[i].iter().copied().filter(|&j| j != i).collect())
}

/// Regions sharing `i`'s coarse parent, excluding `i`.
pub fn structural_neighborhood(hier: &Hierarchy, i: usize) -> Result<Vec<usize>> {
    check_vertex(i, hier.fine_count())?;
    let p = hier.parent(i);
    Ok((0..hier.fine_count()).filter(|&j| j != i && hier.parent(j) == p).collect())
}

pub fn build_hyperedges(adjacency: &[Vec<usize>], hier: &Hierarchy) -> Result<Incidence> {
    let n = adjacency.len();
    if hier.fine_count() != n {
        return Err(Error::Dimension(format!(
            "adjacency covers {n} regions, hierarchy covers {}",
            hier.fine_count()
        )));
    }
    let siblings = hier.children();
    let edges = (0..n)
        .map(|i| {
            let mut members = vec![i];
            members.extend(adjacency[i].iter().copied());
            members.extend(siblings[hier.parent(i)].iter().copied());
            members
        })
        .collect();
    Incidence::new(n, edges)
}

/// Distance scale for the hyperedge similarity kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth<T> {
    Fixed(T),
    /// Median pairwise distance over all within-edge pairs.
    Auto,
}

impl<T: Scalar> FromStr for Bandwidth<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "auto" {
            return Ok(Bandwidth::Auto);
        }
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bandwidth must be a number or \"auto\", got {s:?}")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("bandwidth must be positive, got {v}")));
        }
        Ok(Bandwidth::Fixed(T::of(v)))
    }
}

fn distance<T: Scalar>(features: &NodeFeatures<T>, a: usize, b: usize) -> T {
    let m = features.matrix();
    m.row(a)
        .iter()
        .zip(m.row(b).iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

pub fn resolve_bandwidth<T: Scalar>(inc: &Incidence, features: &NodeFeatures<T>, bw: Bandwidth<T>) -> T {
    match bw {
        Bandwidth::Fixed(b) => b,
        Bandwidth::Auto => {
            let mut dists: Vec<T> = Vec::new();
            for members in inc.edges() {
                for (k, &a) in members.iter().enumerate() {
                    for &b in &members[k + 1..] {
                        dists.push(distance(features, a, b));
                    }
                }
            }
            if dists.is_empty() {
                return T::one();
            }
            dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            let mid = dists.len() / 2;
            let median = if dists.len() % 2 == 1 {
                dists[mid]
            } else {
                (dists[mid - 1] + dists[mid]) / T::of(2.0)
            };
            if median > T::zero() {
                median
            } else {
                T::one()
            }
        }
    }
}

/// Mean pairwise similarity inside each hyperedge; singletons weigh 1.
pub fn hyperedge_weights<T: Scalar>(
    inc: &Incidence,
    features: &NodeFeatures<T>,
    bandwidth: Bandwidth<T>,
) -> Result<Vec<T>> {
    if features.nodes() != inc.vertex_count() {
        return Err(Error::Dimension(format!(
            "{} feature rows for {} vertices",
            features.nodes(),
            inc.vertex_count()
        )));
    }
    let bw = resolve_bandwidth(inc, features, bandwidth);
    if !(bw > T::zero()) {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {bw}")));
    }
    Ok(inc
        .edges()
        .iter()
        .map(|members| {
            let n = members.len();
            if n == 1 {
                return T::one();
            }
            let mut total = T::zero();
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k + 1..] {
                    total += (-distance(features, a, b) / bw).exp();
                }
            }
            T::of(2.0) * total / T::of_usize(n * (n - 1))
        })
        .collect())
}

/// Weighted vertex degrees `d` and edge cardinalities `δ`.
pub fn degrees<T: Scalar>(inc: &Incidence, weights: &[T]) -> (Vec<T>, Vec<usize>) {
    let mut d = vec![T::zero(); inc.vertex_count()];
    for (members, &w) in inc.edges().iter().zip(weights) {
        for &v in members {
            d[v] += w;
        }
    }
    let delta = inc.edges().iter().map(Vec::len).collect();
    (d, delta)
}

/// `P` and `Λ = I − P` together with `Dv^{1/2}`.
#[derive(Debug, Clone)]
pub struct PropagationOperator<T> {
    p: Csr<T>,
    laplacian: Csr<T>,
    sqrt_degrees: Vec<T>,
}

impl<T: Scalar> PropagationOperator<T> {
    pub fn matrix(&self) -> &Csr<T> {
        &self.p
    }

    pub fn laplacian(&self) -> &Csr<T> {
        &self.laplacian
    }

    /// `Dv^{1/2}·1`, the fixed point of `P`.
    pub fn sqrt_degrees(&self) -> &[T] {
        &self.sqrt_degrees
    }

    pub fn size(&self) -> usize {
        self.p.rows()
    }
}

pub fn propagation_operator<T: Scalar>(
    inc: &Incidence,
    weights: &[T],
    vertex_degrees: &[T],
    edge_degrees: &[usize],
) -> Result<PropagationOperator<T>> {
    let n = inc.vertex_count();
    if weights.len() != inc.edge_count() || edge_degrees.len() != inc.edge_count() || vertex_degrees.len() != n {
        return Err(Error::Dimension("hypergraph arrays disagree in length".into()));
    }
    if let Some(i) = vertex_degrees.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::DegenerateGraph(format!("vertex {i} has degree {}", vertex_degrees[i])));
    }
    if let Some(j) = edge_degrees.iter().position(|&d| d == 0) {
        return Err(Error::DegenerateGraph(format!("hyperedge {j} is empty")));
    }
    let sqrt_d: Vec<T> = vertex_degrees.iter().map(|d| d.sqrt()).collect();
    let edge_scale: Vec<T> = weights
        .iter()
        .zip(edge_degrees)
        .map(|(&w, &delta)| w / T::of_usize(delta))
        .collect();

    let vertex_edges = inc.vertex_edges();
    let mut acc = vec![T::zero(); n];
    let mut touched = vec![false; n];
    let mut cols = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        for &e in &vertex_edges[i] {
            for &k in inc.edge(e) {
                if !touched[k] {
                    touched[k] = true;
                    cols.push(k);
                }
                acc[k] += edge_scale[e];
            }
        }
        cols.sort_unstable();
        let row: Vec<(usize, T)> = cols
            .iter()
            .map(|&k| (k, acc[k] / (sqrt_d[i] * sqrt_d[k])))
            .collect();
        for &k in &cols {
            acc[k] = T::zero();
            touched[k] = false;
        }
        cols.clear();
        rows.push(row);
    }
    let p = Csr::from_sorted_rows(n, rows);
    let laplacian = p.identity_minus();
    Ok(PropagationOperator {
        p,
        laplacian,
        sqrt_degrees: sqrt_d,
    })
}

/// Incidence, weights and degrees of a built hypergraph.
#[derive(Debug, Clone)]
pub struct Hypergraph<T> {
    incidence: Incidence,
    weights: Vec<T>,
    vertex_degrees: Vec<T>,
    edge_degrees: Vec<usize>,
}

impl<T: Scalar> Hypergraph<T> {
    pub fn from_parts(incidence: Incidence, weights: Vec<T>) -> Result<Self> {
        if weights.len() != incidence.edge_count() {
            return Err(Error::Dimension(format!(
                "{} weights for {} hyperedges",
                weights.len(),
                incidence.edge_count()
            )));
        }
        if let Some(j) = weights.iter().position(|&w| !(w > T::zero() && w.is_finite())) {
            return Err(Error::DegenerateGraph(format!("hyperedge {j} has weight {}", weights[j])));
        }
        let (vertex_degrees, edge_degrees) = degrees(&incidence, &weights);
        Ok(Self {
            incidence,
            weights,
            vertex_degrees,
            edge_degrees,
        })
    }

    /// Dual-neighbourhood construction from fine adjacency and hierarchy.
    pub fn build(
        adjacency: &[Vec<usize>],
        hier: &Hierarchy,
        features: &NodeFeatures<T>,
        bandwidth: Bandwidth<T>,
    ) -> Result<Self> {
        let incidence = build_hyperedges(adjacency, hier)?;
        let weights = hyperedge_weights(&incidence, features, bandwidth)?;
        Self::from_parts(incidence, weights)
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn vertex_degrees(&self) -> &[T] {
        &self.vertex_degrees
    }

    pub fn edge_degrees(&self) -> &[usize] {
        &self.edge_degrees
    }

    pub fn vertex_count(&self) -> usize {
        self.incidence.vertex_count()
    }

    pub fn operator(&self) -> Result<PropagationOperator<T>> {
        propagation_operator(&self.incidence, &self.weights, &self.vertex_degrees, &self.edge_degrees)
    }

    /// `N L` header, then `edge_id weight member_ids...` per hyperedge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_count(), self.incidence.edge_count());
        for (j, (members, w)) in self.incidence.edges().iter().zip(&self.weights).enumerate() {
            write!(out, "{j} {w}").unwrap();
            for m in members {
                write!(out, " {m}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::format("header", "empty hypergraph file"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format("header", format!("expected \"N L\", got {header:?}")))?;
        let [n, l] = nums[..] else {
            return Err(Error::format("header", format!("expected \"N L\", got {header:?}")));
        };
        let mut edges = Vec::with_capacity(l);
        let mut weights = Vec::with_capacity(l);
        for (j, line) in lines.enumerate() {
            let mut fields = line.split_whitespace();
            let bad = || Error::format("hyperedge", format!("malformed line for edge {j}: {line:?}"));
            if fields.next().and_then(|s| s.parse::<usize>().ok()) != Some(j) {
                return Err(bad());
            }
            let w: f64 = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let members = fields
                .map(str::parse)
                .collect::<std::result::Result<Vec<usize>, _>>()
                .map_err(|_| bad())?;
            weights.push(T::of(w));
            edges.push(members);
        }
        if edges.len() != l {
            return Err(Error::format("hyperedge", format!("header promises {l} edges, found {}", edges.len())));
        }
        Self::from_parts(Incidence::new(n, edges)?, weights)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| e.in_file(path))
    }
}
