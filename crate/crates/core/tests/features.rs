mod common;

use hgcd_core::features::{baseline_features, pool, pool_labels, NodeFeatures};
use hgcd_core::raster::Raster;
use hgcd_core::segmentation::{segment, SegParams};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

use common::{blocky_image, rng};

fn random_raster(seed: u64, h: usize, w: usize, c: usize) -> Raster {
    let mut r = rng(seed);
    Raster::from_f32(h, w, c, (0..h * w * c).map(|_| r.random_range(-1.0f32..1.0)).collect()).unwrap()
}

/// Window values around `(y, x)` in channel `k` with replicated borders.
fn window(img: &Raster, y: usize, x: usize, k: usize, radius: usize) -> Vec<f64> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let v = img.as_f32().unwrap();
    let mut out = Vec::new();
    for dy in -(radius as isize)..=radius as isize {
        for dx in -(radius as isize)..=radius as isize {
            let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            out.push(v[(yy * w + xx) * c + k] as f64);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pooling_matches_region_means(seed in any::<u64>(), h in 1usize..12, w in 1usize..12, d in 1usize..5) {
        let img = blocky_image(&mut rng(seed), h, w, 1);
        let seg = segment(&img, &SegParams::with_scale(0.3).unwrap()).unwrap();
        let fm = random_raster(seed ^ 7, h, w, d);
        let pooled = pool::<f64>(&fm, &seg).unwrap();
        let v = fm.as_f32().unwrap();
        prop_assert_eq!(pooled.nodes(), seg.region_count());
        for region in 0..seg.region_count() {
            for k in 0..d {
                let members: Vec<f64> = seg
                    .labels()
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l as usize == region)
                    .map(|(p, _)| v[p * d + k] as f64)
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                prop_assert!((pooled.matrix()[[region, k]] - mean).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn windowed_statistics_match_brute_force(seed in any::<u64>(), h in 1usize..7, w in 1usize..7, c in 1usize..3, radius in 0usize..3) {
        let img = random_raster(seed, h, w, c);
        let f = baseline_features(&img, radius).unwrap();
        prop_assert_eq!(f.channels(), 4 * c);
        let out = f.as_f32().unwrap();
        for y in 0..h {
            for x in 0..w {
                for k in 0..c {
                    let win = window(&img, y, x, k, radius);
                    let n = win.len() as f64;
                    let mean = win.iter().sum::<f64>() / n;
                    let std = (win.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                    let lo = win.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = win.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let base = ((y * w + x) * c + k) * 4;
                    let centre = img.as_f32().unwrap()[(y * w + x) * c + k];
                    prop_assert_eq!(out[base], centre);
                    prop_assert!((out[base + 1] as f64 - mean).abs() <= 1e-6);
                    prop_assert!((out[base + 2] as f64 - std).abs() <= 1e-5);
                    prop_assert!((out[base + 3] as f64 - (hi - lo)).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance(seed in any::<u64>(), n in 2usize..30, d in 1usize..5) {
        let mut r = rng(seed);
        let m = Array2::from_shape_simple_fn((n, d), || r.random_range(-5.0..5.0));
        let s = NodeFeatures::new(m).unwrap().standardized();
        for col in s.matrix().columns() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 1e-12);
            prop_assert!((var - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn hand_window_on_a_three_by_three() {
    let img = Raster::from_f32(3, 3, 1, (1..=9).map(|v| v as f32).collect()).unwrap();
    let f = baseline_features(&img, 1).unwrap();
    let centre = &f.as_f32().unwrap()[4 * 4..4 * 5];
    assert_eq!(centre[0], 5.0);
    assert!((centre[1] - 5.0).abs() < 1e-6);
    assert!((centre[2] as f64 - (60.0f64 / 9.0).sqrt()).abs() < 1e-6);
    assert_eq!(centre[3], 8.0);
    // top-left corner replicates: window 1 1 2 / 1 1 2 / 4 4 5
    let corner = &f.as_f32().unwrap()[..4];
    assert!((corner[1] as f64 - 21.0 / 9.0).abs() < 1e-6);
    assert_eq!(corner[3], 4.0);
}

#[test]
fn constant_column_standardizes_to_zero() {
    let m = ndarray::array![[3.0, 1.0], [3.0, 2.0], [3.0, 6.0]];
    let s = NodeFeatures::new(m).unwrap().standardized();
    assert!(s.matrix().column(0).iter().all(|&v| v == 0.0));
}

#[test]
fn node_features_round_trip_through_a_raster() {
    let m = ndarray::array![[0.5, -2.0, 1.25], [3.0, 0.0, -0.75]];
    let f = NodeFeatures::new(m.clone()).unwrap();
    let back = NodeFeatures::<f64>::from_raster(&f.to_raster().unwrap()).unwrap();
    assert_eq!(back.matrix(), &m);
}

#[test]
fn pooling_rejects_labels_outside_the_region_count() {
    let fm = Raster::from_f32(1, 3, 1, vec![0.0; 3]).unwrap();
    assert!(pool_labels::<f64>(&fm, &[0, 1, 2], 1, 3, 2).is_err());
    assert!(pool_labels::<f64>(&fm, &[0, 0, 2], 1, 3, 3).is_err());
    let u8_map = Raster::from_u8(1, 3, 1, vec![0; 3]).unwrap();
    assert!(pool_labels::<f64>(&u8_map, &[0, 0, 0], 1, 3, 1).is_err());
}
