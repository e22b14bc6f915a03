#![allow(dead_code)]

use std::collections::BTreeSet;

use hgcd_core::features::NodeFeatures;
use hgcd_core::hgnn::{FocalLoss, LabelMask, Model};
use hgcd_core::hypergraph::{Bandwidth, Hypergraph};
use hgcd_core::raster::Raster;
use hgcd_core::segmentation::{coarsen, segment, Hierarchy, SegParams, Segmentation};
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Blocky float32 image: random rectangles of a few colours plus noise.
pub fn blocky_image(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> Raster {
    let colors: Vec<Vec<f32>> = (0..4).map(|_| (0..c).map(|_| rng.random::<f32>()).collect()).collect();
    let mut base = vec![0usize; h * w];
    for _ in 0..rng.random_range(2..6) {
        let (y0, x0) = (rng.random_range(0..h), rng.random_range(0..w));
        let (y1, x1) = (rng.random_range(y0..h) + 1, rng.random_range(x0..w) + 1);
        let col = rng.random_range(0..colors.len());
        for y in y0..y1 {
            for x in x0..x1 {
                base[y * w + x] = col;
            }
        }
    }
    let data = (0..h * w)
        .flat_map(|p| colors[base[p]].clone())
        .map(|v| v + rng.random_range(-0.03f32..0.03))
        .collect();
    Raster::from_f32(h, w, c, data).unwrap()
}

pub struct Instance {
    pub image: Raster,
    pub fine: Segmentation,
    pub coarse: Segmentation,
    pub hierarchy: Hierarchy,
    pub features: NodeFeatures<f64>,
    pub graph: Hypergraph<f64>,
}

/// A random dual-neighbourhood hypergraph over a segmented blocky image.
pub fn random_instance(seed: u64, h: usize, w: usize) -> Instance {
    let mut r = rng(seed);
    let image = blocky_image(&mut r, h, w, 2);
    let fine_scale = r.random_range(0.05..0.4);
    let coarse_scale = fine_scale * r.random_range(1.5..5.0);
    let fine = segment(&image, &SegParams::with_scale(fine_scale).unwrap()).unwrap();
    let (coarse, hierarchy) = coarsen(&fine, &image, &SegParams::with_scale(coarse_scale).unwrap()).unwrap();
    let d = r.random_range(1..6);
    let features = NodeFeatures::new(Array2::from_shape_simple_fn((fine.region_count(), d), || {
        r.random_range(-1.0..1.0)
    }))
    .unwrap();
    let bandwidth = if r.random::<bool>() { Bandwidth::Auto } else { Bandwidth::Fixed(1.0) };
    let graph = Hypergraph::build(fine.adjacency(), &hierarchy, &features, bandwidth).unwrap();
    Instance {
        image,
        fine,
        coarse,
        hierarchy,
        features,
        graph,
    }
}

/// Neighbour sets found by scanning every horizontally or vertically
/// adjacent pixel pair.
pub fn brute_adjacency(labels: &[u32], h: usize, w: usize, n: usize) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for y in 0..h {
        for x in 0..w {
            let a = labels[y * w + x] as usize;
            for (yy, xx) in [(y + 1, x), (y, x + 1)] {
                if yy < h && xx < w {
                    let b = labels[yy * w + xx] as usize;
                    if a != b {
                        adj[a].insert(b);
                        adj[b].insert(a);
                    }
                }
            }
        }
    }
    adj
}

/// `D_v^{-1/2} H W D_E^{-1} H^T D_v^{-1/2}` by dense products.
pub fn dense_operator(graph: &Hypergraph<f64>) -> DMatrix<f64> {
    let inc = graph.incidence();
    let (n, l) = (inc.vertex_count(), inc.edge_count());
    let mut hm = DMatrix::<f64>::zeros(n, l);
    for (j, members) in inc.edges().iter().enumerate() {
        for &i in members {
            hm[(i, j)] = 1.0;
        }
    }
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(graph.weights()));
    let delta: Vec<f64> = (0..l).map(|j| hm.column(j).sum()).collect();
    let de_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(l, delta.iter().map(|d| 1.0 / d)));
    let d = &hm * nalgebra::DVector::from_column_slice(graph.weights());
    let dv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, d.iter().map(|v| 1.0 / v.sqrt())));
    &dv * &hm * w * de_inv * hm.transpose() * &dv
}

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Smallest eigenvalue of `I − P`, from a dense symmetric eigensolve.
pub fn min_laplacian_eigenvalue(graph: &Hypergraph<f64>) -> f64 {
    let p = dense_operator(graph);
    let n = p.nrows();
    let lap = DMatrix::<f64>::identity(n, n) - p;
    nalgebra::SymmetricEigen::new(lap).eigenvalues.min()
}

/// Per-node propagation: `Y_i = Σ_j Σ_k H(i,k) H(j,k) w_k Z_j / (sqrt(d_i d_j) δ_k)`.
pub fn per_node_propagation(graph: &Hypergraph<f64>, z: &Array2<f64>) -> Array2<f64> {
    let inc = graph.incidence();
    let n = inc.vertex_count();
    let w = graph.weights();
    let d: Vec<f64> = (0..n)
        .map(|i| (0..inc.edge_count()).filter(|&k| inc.contains(i, k)).map(|k| w[k]).sum())
        .collect();
    let mut out = Array2::<f64>::zeros((n, z.ncols()));
    for i in 0..n {
        for k in 0..inc.edge_count() {
            if !inc.contains(i, k) {
                continue;
            }
            let delta = inc.edge(k).len() as f64;
            for &j in inc.edge(k) {
                let coef = w[k] / ((d[i] * d[j]).sqrt() * delta);
                for c in 0..z.ncols() {
                    out[[i, c]] += coef * z[[j, c]];
                }
            }
        }
    }
    out
}

/// Binary cross-entropy of one prediction.
pub fn cross_entropy(p: f64, changed: bool) -> f64 {
    if changed {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Random labels covering both classes, roughly `fraction` of the nodes.
pub fn random_mask(rng: &mut ChaCha8Rng, n: usize, fraction: f64) -> LabelMask {
    assert!(n >= 2);
    loop {
        let labels = (0..n)
            .map(|_| rng.random_bool(fraction).then(|| rng.random::<bool>()))
            .collect();
        let mask = LabelMask::new(labels);
        if mask.has_both_classes() {
            return mask;
        }
    }
}

pub struct GradCheck {
    pub max_relative_error: f64,
    pub entries: usize,
    pub dropout: f64,
    pub weight_decay: f64,
}

/// Central differences (ε = 1e−5) against the analytic gradient for every
/// weight of a `[d, hidden, 1]` model. Dropout masks are held fixed by
/// reseeding the generator before every forward pass.
pub fn gradient_check(inst: &Instance, hidden: usize, dropout: f64, weight_decay: f64, seed: u64) -> GradCheck {
    let mut r = rng(seed);
    let op = inst.graph.operator().unwrap();
    let x = inst.features.matrix();
    let n = x.nrows();
    let mask = random_mask(&mut r, n, 0.6);
    let loss = FocalLoss::new(r.random_range(0.1..1.0), r.random_range(0.0..3.0)).unwrap();
    let model: Model<f64> = Model::glorot(&[x.ncols(), hidden, 1], dropout, &mut r).unwrap();
    let dropout_seed = r.random::<u64>();
    let objective = |m: &Model<f64>| {
        let (probs, _) = m.forward(&op, x.view(), true, &mut rng(dropout_seed)).unwrap();
        m.objective(&probs, &mask, &loss, weight_decay).unwrap()
    };
    let (_, cache) = model.forward(&op, x.view(), true, &mut rng(dropout_seed)).unwrap();
    let grads = model.backward(&op, &cache, &mask, &loss, weight_decay).unwrap();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    let mut entries = 0;
    for (l, g) in grads.iter().enumerate() {
        for idx in ndarray::indices(g.raw_dim()) {
            let mut plus = model.clone();
            plus.weights_mut()[l][idx] += eps;
            let mut minus = model.clone();
            minus.weights_mut()[l][idx] -= eps;
            let numeric = (objective(&plus) - objective(&minus)) / (2.0 * eps);
            let analytic = g[idx];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(rel);
            entries += 1;
        }
    }
    GradCheck {
        max_relative_error: worst,
        entries,
        dropout,
        weight_decay,
    }
}

/// True when every label's pixels form one 4-connected component.
pub fn regions_are_connected(labels: &[u32], h: usize, w: usize, n: usize) -> bool {
    let mut seen = vec![false; h * w];
    let mut components = vec![0usize; n];
    for start in 0..h * w {
        if seen[start] {
            continue;
        }
        let l = labels[start];
        components[l as usize] += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            let (y, x) = (p / w, p % w);
            let mut visit = |q: usize| {
                if !seen[q] && labels[q] == l {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
        }
    }
    components.iter().all(|&c| c == 1)
}
