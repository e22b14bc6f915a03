//! Bottom-up region-merging segmentation at two nested scales.
//!
//! Regions start as single pixels and are merged pairwise while the increase
//! in heterogeneity stays below `scale²`. Heterogeneity combines a spectral
//! term (pixel-count weighted standard deviation per channel) with a shape
//! term built from compactness (`l·√n`) and smoothness (`n·l/b`), where `l`
//! is the region perimeter in pixel edges and `b` its bounding-box perimeter.
//!
//! Merging follows local mutual best fitting: a region proposes its cheapest
//! neighbour and the pair merges only when the neighbour's cheapest partner
//! is the proposer. The coarse scale continues merging from the fine result,
//! so every coarse region is an exact union of fine regions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{DType, Raster};

/// Merge-threshold parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegParams {
    pub scale: f64,
    pub shape: f64,
    pub compactness: f64,
}

impl SegParams {
    pub const DEFAULT_SHAPE: f64 = 0.1;
    pub const DEFAULT_COMPACTNESS: f64 = 0.5;

    pub fn new(scale: f64, shape: f64, compactness: f64) -> Result<Self> {
        let p = Self {
            scale,
            shape,
            compactness,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_scale(scale: f64) -> Result<Self> {
        Self::new(scale, Self::DEFAULT_SHAPE, Self::DEFAULT_COMPACTNESS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {}", self.scale)));
        }
        if !(0.0..1.0).contains(&self.shape) {
            return Err(Error::Parameter(format!("shape must lie in [0, 1), got {}", self.shape)));
        }
        if !(0.0..=1.0).contains(&self.compactness) {
            return Err(Error::Parameter(format!(
                "compactness must lie in [0, 1], got {}",
                self.compactness
            )));
        }
        Ok(())
    }

    fn threshold(&self) -> f64 {
        self.scale * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_y: usize,
    pub min_x: usize,
    pub max_y: usize,
    pub max_x: usize,
}

impl BoundingBox {
    fn pixel(y: usize, x: usize) -> Self {
        Self {
            min_y: y,
            min_x: x,
            max_y: y,
            max_x: x,
        }
    }

    fn union(&self, o: &BoundingBox) -> Self {
        Self {
            min_y: self.min_y.min(o.min_y),
            min_x: self.min_x.min(o.min_x),
            max_y: self.max_y.max(o.max_y),
            max_x: self.max_x.max(o.max_x),
        }
    }

    pub fn perimeter(&self) -> usize {
        2 * ((self.max_y - self.min_y + 1) + (self.max_x - self.min_x + 1))
    }
}

/// Per-region accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub pixel_count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    /// Boundary length in pixel edges, image border included.
    pub perimeter: usize,
    pub bbox: BoundingBox,
}

impl Region {
    fn pixel(id: usize, y: usize, x: usize, values: &[f32]) -> Self {
        Self {
            id,
            pixel_count: 1,
            sum: values.iter().map(|&v| v as f64).collect(),
            sum_sq: values.iter().map(|&v| (v as f64) * (v as f64)).collect(),
            perimeter: 4,
            bbox: BoundingBox::pixel(y, x),
        }
    }

    pub fn mean(&self, channel: usize) -> f64 {
        self.sum[channel] / self.pixel_count as f64
    }

    /// Population standard deviation of one channel.
    pub fn std_dev(&self, channel: usize) -> f64 {
        self.weighted_std(channel) / self.pixel_count as f64
    }

    /// `n·σ`, computed as `sqrt(n·Σx² − (Σx)²)`.
    fn weighted_std(&self, channel: usize) -> f64 {
        let n = self.pixel_count as f64;
        let s = self.sum[channel];
        (n * self.sum_sq[channel] - s * s).max(0.0).sqrt()
    }

    fn compactness(&self) -> f64 {
        self.perimeter as f64 * (self.pixel_count as f64).sqrt()
    }

    fn smoothness(&self) -> f64 {
        self.pixel_count as f64 * self.perimeter as f64 / self.bbox.perimeter() as f64
    }

    fn merged(&self, other: &Region, shared_edges: usize) -> Region {
        Region {
            id: self.id.min(other.id),
            pixel_count: self.pixel_count + other.pixel_count,
            sum: self.sum.iter().zip(&other.sum).map(|(a, b)| a + b).collect(),
            sum_sq: self.sum_sq.iter().zip(&other.sum_sq).map(|(a, b)| a + b).collect(),
            perimeter: self.perimeter + other.perimeter - 2 * shared_edges,
            bbox: self.bbox.union(&other.bbox),
        }
    }
}

/// Heterogeneity increase caused by merging `a` and `b`, which share
/// `shared_edges` pixel edges. Symmetric in its region arguments.
pub fn merge_cost(a: &Region, b: &Region, shared_edges: usize, params: &SegParams) -> f64 {
    let (a, b) = if a.id <= b.id { (a, b) } else { (b, a) };
    let m = a.merged(b, shared_edges);
    let color: f64 = (0..m.sum.len())
        .map(|c| m.weighted_std(c) - (a.weighted_std(c) + b.weighted_std(c)))
        .sum();
    let cmpct = m.compactness() - (a.compactness() + b.compactness());
    let smooth = m.smoothness() - (a.smoothness() + b.smoothness());
    let shape = params.compactness * cmpct + (1.0 - params.compactness) * smooth;
    (1.0 - params.shape) * color + params.shape * shape
}

/// A partition of the pixel grid into 4-connected regions.
#[derive(Debug, Clone)]
pub struct Segmentation {
    label_map: Raster,
    regions: Vec<Region>,
    adjacency: Vec<Vec<usize>>,
    params: SegParams,
}

impl Segmentation {
    /// Builds a segmentation from contiguous labels `0..N`.
    pub fn from_labels(image: &Raster, labels: Vec<u32>, params: SegParams) -> Result<Self> {
        let values = image
            .as_f32()
            .ok_or_else(|| Error::Dimension("segmentation needs a float32 image".into()))?;
        if labels.len() != image.pixels() {
            return Err(Error::Dimension(format!(
                "label map has {} pixels, image has {}",
                labels.len(),
                image.pixels()
            )));
        }
        let state = MergeState::from_labels(image, values, &labels)?;
        let regions = state.into_regions();
        let label_map = Raster::from_u32(image.height(), image.width(), 1, labels)?;
        let adjacency = adjacency_of(&label_map, regions.len());
        Ok(Self {
            label_map,
            regions,
            adjacency,
            params,
        })
    }

    pub fn label_map(&self) -> &Raster {
        &self.label_map
    }

    pub fn labels(&self) -> &[u32] {
        self.label_map.as_u32().expect("label maps are uint32")
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn params(&self) -> &SegParams {
        &self.params
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn height(&self) -> usize {
        self.label_map.height()
    }

    pub fn width(&self) -> usize {
        self.label_map.width()
    }

    /// Merge cost of every adjacent region pair `(i, j)` with `i < j`.
    pub fn pair_costs(&self, params: &SegParams) -> Vec<(usize, usize, f64)> {
        let shared = shared_edges(self.labels(), self.height(), self.width());
        shared
            .into_iter()
            .map(|((i, j), e)| (i, j, merge_cost(&self.regions[i], &self.regions[j], e, params)))
            .collect()
    }
}

/// Fine-to-coarse parent map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    parent: Vec<usize>,
    coarse_count: usize,
}

impl Hierarchy {
    pub fn new(parent: Vec<usize>) -> Result<Self> {
        let coarse_count = parent.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; coarse_count];
        parent.iter().for_each(|&p| seen[p] = true);
        if seen.iter().any(|s| !s) {
            return Err(Error::Parameter("hierarchy parents must cover 0..M".into()));
        }
        Ok(Self {
            parent,
            coarse_count,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            coarse_count: n,
        }
    }

    pub fn parent(&self, fine: usize) -> usize {
        self.parent[fine]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn fine_count(&self) -> usize {
        self.parent.len()
    }

    pub fn coarse_count(&self) -> usize {
        self.coarse_count
    }

    /// Fine ids grouped by parent, each group ascending.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.coarse_count];
        for (i, &p) in self.parent.iter().enumerate() {
            groups[p].push(i);
        }
        groups
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.parent.iter().enumerate() {
            writeln!(out, "{i} {p}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut parent = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut fields = line.split_whitespace().map(str::parse::<usize>);
            match (fields.next(), fields.next(), fields.next()) {
                (Some(Ok(f)), Some(Ok(c)), None) if f == parent.len() => parent.push(c),
                _ => {
                    return Err(Error::format(
                        "hierarchy",
                        format!("line {}: expected \"{} <coarse_id>\"", lineno + 1, parent.len()),
                    ))
                }
            }
        }
        Self::new(parent)
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

/// Segments a float32 image starting from single-pixel regions.
pub fn segment(image: &Raster, params: &SegParams) -> Result<Segmentation> {
    params.validate()?;
    let values = image
        .as_f32()
        .ok_or_else(|| Error::Dimension("segmentation needs a float32 image".into()))?;
    let singletons: Vec<u32> = (0..image.pixels() as u32).collect();
    let mut state = MergeState::from_labels(image, values, &singletons)?;
    state.merge_until_stable(params);
    let labels = relabel(&state.resolve(&singletons));
    Segmentation::from_labels(image, labels, *params)
}

/// Continues merging from `fine` under a larger scale.
pub fn coarsen(
    fine: &Segmentation,
    image: &Raster,
    coarse_params: &SegParams,
) -> Result<(Segmentation, Hierarchy)> {
    coarse_params.validate()?;
    let fp = fine.params();
    if coarse_params.scale <= fp.scale {
        return Err(Error::Parameter(format!(
            "coarse scale must exceed fine scale ({} <= {})",
            coarse_params.scale, fp.scale
        )));
    }
    if coarse_params.shape != fp.shape || coarse_params.compactness != fp.compactness {
        return Err(Error::Parameter(
            "coarse and fine scales must share shape and compactness".into(),
        ));
    }
    if !image.same_grid(fine.label_map()) {
        return Err(Error::Dimension("image and fine segmentation differ in size".into()));
    }
    let values = image
        .as_f32()
        .ok_or_else(|| Error::Dimension("segmentation needs a float32 image".into()))?;
    let mut state = MergeState::from_labels(image, values, fine.labels())?;
    state.merge_until_stable(coarse_params);

    let fine_ids: Vec<u32> = (0..fine.region_count() as u32).collect();
    let roots = state.resolve(&fine_ids);
    // coarse ids follow first appearance in raster order
    let pixel_roots: Vec<u32> = fine.labels().iter().map(|&l| roots[l as usize]).collect();
    let mut remap = BTreeMap::new();
    for &r in &pixel_roots {
        let next = remap.len() as u32;
        remap.entry(r).or_insert(next);
    }
    let coarse_labels: Vec<u32> = pixel_roots.iter().map(|r| remap[r]).collect();
    let parent = roots.iter().map(|r| remap[r] as usize).collect();
    let coarse = Segmentation::from_labels(image, coarse_labels, *coarse_params)?;
    Ok((coarse, Hierarchy::new(parent)?))
}

/// 4-connected neighbour sets, sorted ascending.
pub fn region_adjacency(seg: &Segmentation) -> Vec<Vec<usize>> {
    adjacency_of(seg.label_map(), seg.region_count())
}

/// Adjacency of a stored label map after checking its invariants.
pub fn label_adjacency(label_map: &Raster) -> Result<Vec<Vec<usize>>> {
    let n = validate_label_map(label_map)?;
    Ok(adjacency_of(label_map, n))
}

fn adjacency_of(label_map: &Raster, n: usize) -> Vec<Vec<usize>> {
    let labels = label_map.as_u32().expect("label maps are uint32");
    let mut adj = vec![Vec::new(); n];
    for (i, j) in shared_edges(labels, label_map.height(), label_map.width()).into_keys() {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    adj
}

/// Shared boundary length (pixel edges) for each adjacent pair `(lo, hi)`.
fn shared_edges(labels: &[u32], h: usize, w: usize) -> BTreeMap<(usize, usize), usize> {
    let mut shared = BTreeMap::new();
    let mut add = |a: u32, b: u32| {
        if a != b {
            let key = (a.min(b) as usize, a.max(b) as usize);
            *shared.entry(key).or_insert(0) += 1;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if x + 1 < w {
                add(l, labels[y * w + x + 1]);
            }
            if y + 1 < h {
                add(l, labels[(y + 1) * w + x]);
            }
        }
    }
    shared
}

/// Renumbers arbitrary ids to `0..N` in order of first appearance.
fn relabel(ids: &[u32]) -> Vec<u32> {
    let mut remap = BTreeMap::new();
    ids.iter()
        .map(|id| {
            let next = remap.len() as u32;
            *remap.entry(*id).or_insert(next)
        })
        .collect()
}

struct Node {
    region: Region,
    /// neighbour id -> shared edge count
    neighbors: BTreeMap<usize, usize>,
}

struct MergeState {
    nodes: Vec<Option<Node>>,
    owner: Vec<usize>,
}

impl MergeState {
    fn from_labels(image: &Raster, values: &[f32], labels: &[u32]) -> Result<Self> {
        let (h, w, c) = (image.height(), image.width(), image.channels());
        let n = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut regions: Vec<Option<Region>> = vec![None; n];
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let l = labels[p] as usize;
                let px = &values[p * c..(p + 1) * c];
                match &mut regions[l] {
                    None => regions[l] = Some(Region::pixel(l, y, x, px)),
                    Some(r) => {
                        r.pixel_count += 1;
                        for (k, &v) in px.iter().enumerate() {
                            r.sum[k] += v as f64;
                            r.sum_sq[k] += (v as f64) * (v as f64);
                        }
                        r.bbox = r.bbox.union(&BoundingBox::pixel(y, x));
                    }
                }
            }
        }
        let mut regions: Vec<Region> = regions
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.ok_or_else(|| Error::Parameter(format!("labels are not contiguous: id {i} is unused")))
            })
            .collect::<Result<_>>()?;

        let shared = shared_edges(labels, h, w);
        let mut internal = vec![0usize; n];
        for y in 0..h {
            for x in 0..w {
                let l = labels[y * w + x] as usize;
                if x + 1 < w && labels[y * w + x + 1] as usize == l {
                    internal[l] += 1;
                }
                if y + 1 < h && labels[(y + 1) * w + x] as usize == l {
                    internal[l] += 1;
                }
            }
        }
        for (r, inner) in regions.iter_mut().zip(&internal) {
            r.perimeter = 4 * r.pixel_count - 2 * inner;
        }

        let mut nodes: Vec<Option<Node>> = regions
            .into_iter()
            .map(|region| {
                Some(Node {
                    region,
                    neighbors: BTreeMap::new(),
                })
            })
            .collect();
        for ((a, b), e) in shared {
            nodes[a].as_mut().unwrap().neighbors.insert(b, e);
            nodes[b].as_mut().unwrap().neighbors.insert(a, e);
        }
        Ok(Self {
            nodes,
            owner: (0..n).collect(),
        })
    }

    fn node(&self, id: usize) -> &Node {
        self.nodes[id].as_ref().expect("live region")
    }

    /// Cheapest neighbour of `a`; ties go to the lower id.
    fn best_partner(&self, a: usize, params: &SegParams) -> Option<(usize, f64)> {
        let node = self.node(a);
        let mut best: Option<(usize, f64)> = None;
        for (&b, &e) in &node.neighbors {
            let cost = merge_cost(&node.region, &self.node(b).region, e, params);
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((b, cost));
            }
        }
        best
    }

    fn merge(&mut self, keep: usize, gone: usize) {
        let gone_node = self.nodes[gone].take().expect("live region");
        let shared = gone_node.neighbors[&keep];
        let mut keep_node = self.nodes[keep].take().expect("live region");
        keep_node.region = keep_node.region.merged(&gone_node.region, shared);
        keep_node.neighbors.remove(&gone);
        for (&n, &e) in &gone_node.neighbors {
            if n == keep {
                continue;
            }
            *keep_node.neighbors.entry(n).or_insert(0) += e;
            let nb = self.nodes[n].as_mut().expect("live neighbour");
            nb.neighbors.remove(&gone);
            *nb.neighbors.entry(keep).or_insert(0) += e;
        }
        self.nodes[keep] = Some(keep_node);
        self.owner[gone] = keep;
    }

    fn merge_until_stable(&mut self, params: &SegParams) {
        let threshold = params.threshold();
        loop {
            let mut merged = false;
            for a in 0..self.nodes.len() {
                if self.nodes[a].is_none() {
                    continue;
                }
                let Some((b, cost)) = self.best_partner(a, params) else {
                    continue;
                };
                if cost >= threshold {
                    continue;
                }
                if self.best_partner(b, params).map(|(p, _)| p) == Some(a) {
                    self.merge(a.min(b), a.max(b));
                    merged = true;
                }
            }
            if !merged {
                break;
            }
        }
    }

    fn find(&mut self, mut id: usize) -> usize {
        let mut root = id;
        while self.owner[root] != root {
            root = self.owner[root];
        }
        while self.owner[id] != root {
            let next = self.owner[id];
            self.owner[id] = root;
            id = next;
        }
        root
    }

    /// Maps initial region ids to surviving ids.
    fn resolve(&mut self, initial: &[u32]) -> Vec<u32> {
        initial.iter().map(|&l| self.find(l as usize) as u32).collect()
    }

    fn into_regions(self) -> Vec<Region> {
        self.nodes.into_iter().map(|n| n.expect("fresh state").region).collect()
    }
}

/// Checks label-map invariants: contiguous ids and 4-connected regions.
pub fn validate_label_map(label_map: &Raster) -> Result<usize> {
    if label_map.dtype() != DType::U32 || label_map.channels() != 1 {
        return Err(Error::format("dtype", "label map must be single-channel uint32"));
    }
    let labels = label_map.as_u32().unwrap();
    let (h, w) = (label_map.height(), label_map.width());
    let n = labels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut count = vec![0usize; n];
    labels.iter().for_each(|&l| count[l as usize] += 1);
    if let Some(missing) = count.iter().position(|&c| c == 0) {
        return Err(Error::Parameter(format!("label {missing} does not occur")));
    }
    let mut seen = vec![false; labels.len()];
    let mut started = vec![false; n];
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        let l = labels[start] as usize;
        if started[l] {
            return Err(Error::Parameter(format!("region {l} is not 4-connected")));
        }
        started[l] = true;
        seen[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (y, x) = (p / w, p % w);
            let mut visit = |q: usize| {
                if !seen[q] && labels[q] as usize == l {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(h: usize, w: usize, c: usize, f: impl Fn(usize, usize, usize) -> f32) -> Raster {
        let mut v = Vec::with_capacity(h * w * c);
        for y in 0..h {
            for x in 0..w {
                for k in 0..c {
                    v.push(f(y, x, k));
                }
            }
        }
        Raster::from_f32(h, w, c, v).unwrap()
    }

    #[test]
    fn single_pixel_region_has_zero_std_and_unit_perimeter() {
        let r = Region::pixel(0, 0, 0, &[0.3, 0.7]);
        assert_eq!(r.std_dev(0), 0.0);
        assert_eq!(r.std_dev(1), 0.0);
        assert_eq!(r.perimeter, 4);
    }

    #[test]
    fn merge_cost_of_two_pixels_matches_hand_evaluation() {
        // identical pixels side by side: colour term vanishes
        let p = SegParams::new(1.0, 0.1, 0.5).unwrap();
        let a = Region::pixel(0, 0, 0, &[0.5]);
        let b = Region::pixel(1, 0, 1, &[0.5]);
        let cmpct = 6.0 * 2f64.sqrt() - 8.0;
        let smooth = 2.0 * 6.0 / 6.0 - 2.0;
        let expected = 0.1 * (0.5 * cmpct + 0.5 * smooth);
        assert!((merge_cost(&a, &b, 1, &p) - expected).abs() < 1e-15);
        assert_eq!(merge_cost(&a, &b, 1, &p), merge_cost(&b, &a, 1, &p));
    }

    #[test]
    fn constant_image_collapses_to_one_region() {
        let img = image(8, 8, 2, |_, _, _| 0.4);
        let seg = segment(&img, &SegParams::with_scale(50.0).unwrap()).unwrap();
        assert_eq!(seg.region_count(), 1);
        assert!(seg.adjacency()[0].is_empty());
    }

    #[test]
    fn tiny_scale_keeps_every_pixel() {
        let img = image(6, 5, 1, |y, x, _| ((y * 7 + x * 3) % 5) as f32 / 5.0);
        let seg = segment(&img, &SegParams::with_scale(1e-6).unwrap()).unwrap();
        assert_eq!(seg.region_count(), 30);
    }

    #[test]
    fn adjacency_of_four_pixels_has_no_diagonals() {
        let img = image(2, 2, 1, |y, x, _| (y * 2 + x) as f32);
        let seg = Segmentation::from_labels(&img, vec![0, 1, 2, 3], SegParams::with_scale(1.0).unwrap()).unwrap();
        assert_eq!(region_adjacency(&seg), vec![vec![1, 2], vec![0, 3], vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn perimeter_from_labels_counts_pixel_edges() {
        let img = image(3, 3, 1, |_, _, _| 0.0);
        // an L-shaped region of three pixels plus the rest
        let labels = vec![0, 1, 1, 0, 1, 1, 0, 0, 1];
        let seg = Segmentation::from_labels(&img, labels, SegParams::with_scale(1.0).unwrap()).unwrap();
        assert_eq!(seg.regions()[0].pixel_count, 4);
        assert_eq!(seg.regions()[0].perimeter, 10);
        assert_eq!(seg.regions()[1].perimeter, 10);
    }

    #[test]
    fn coarsen_rejects_smaller_scale() {
        let img = image(4, 4, 1, |y, _, _| y as f32);
        let fine = segment(&img, &SegParams::with_scale(0.5).unwrap()).unwrap();
        let err = coarsen(&fine, &img, &SegParams::with_scale(0.5).unwrap()).unwrap_err();
        assert!(err.to_string().contains("coarse scale must exceed fine scale"));
    }

    #[test]
    fn hierarchy_text_round_trip() {
        let h = Hierarchy::new(vec![0, 0, 1, 1, 2]).unwrap();
        assert_eq!(h.to_text(), "0 0\n1 0\n2 1\n3 1\n4 2\n");
        assert_eq!(Hierarchy::from_text(&h.to_text()).unwrap(), h);
        assert!(Hierarchy::from_text("0 0\n2 1\n").is_err());
        assert!(Hierarchy::new(vec![0, 2]).is_err());
    }

    #[test]
    fn disconnected_labels_are_detected() {
        let r = Raster::from_u32(1, 3, 1, vec![0, 1, 0]).unwrap();
        assert!(validate_label_map(&r).is_err());
        let r = Raster::from_u32(1, 3, 1, vec![0, 0, 1]).unwrap();
        assert_eq!(validate_label_map(&r).unwrap(), 2);
    }
}
