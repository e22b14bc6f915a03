mod common;

use std::collections::BTreeSet;

use hgcd_core::raster::Raster;
use hgcd_core::segmentation::{
    coarsen, merge_cost, region_adjacency, segment, validate_label_map, Hierarchy, SegParams, Segmentation,
};
use proptest::prelude::*;

use common::{blocky_image, brute_adjacency, regions_are_connected, rng};

fn params(scale: f64) -> SegParams {
    SegParams::with_scale(scale).unwrap()
}

fn assert_partition(seg: &Segmentation) {
    let n = validate_label_map(seg.label_map()).unwrap();
    assert_eq!(n, seg.region_count());
    let total: usize = seg.regions().iter().map(|r| r.pixel_count).sum();
    assert_eq!(total, seg.height() * seg.width());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fine_and_coarse_partitions_nest(seed in any::<u64>(), h in 2usize..14, w in 2usize..14, fine in 0.05f64..0.5, ratio in 1.2f64..6.0) {
        let img = blocky_image(&mut rng(seed), h, w, 2);
        let f = segment(&img, &params(fine)).unwrap();
        let (c, hier) = coarsen(&f, &img, &params(fine * ratio)).unwrap();
        assert_partition(&f);
        assert_partition(&c);
        prop_assert!(regions_are_connected(f.labels(), h, w, f.region_count()));
        prop_assert!(regions_are_connected(c.labels(), h, w, c.region_count()));
        prop_assert!(c.region_count() <= f.region_count());
        prop_assert_eq!(hier.fine_count(), f.region_count());
        for (&fl, &cl) in f.labels().iter().zip(c.labels()) {
            prop_assert_eq!(hier.parent(fl as usize), cl as usize);
        }
    }

    #[test]
    fn adjacency_matches_pixel_scan(seed in any::<u64>(), h in 1usize..12, w in 1usize..12, scale in 0.05f64..0.6) {
        let img = blocky_image(&mut rng(seed), h, w, 1);
        let seg = segment(&img, &params(scale)).unwrap();
        let brute = brute_adjacency(seg.labels(), h, w, seg.region_count());
        for (i, nb) in region_adjacency(&seg).iter().enumerate() {
            prop_assert!(!nb.contains(&i));
            prop_assert_eq!(nb.iter().copied().collect::<BTreeSet<_>>(), brute[i].clone());
        }
    }

    #[test]
    fn segmentation_is_deterministic(seed in any::<u64>(), scale in 0.05f64..0.6) {
        let img = blocky_image(&mut rng(seed), 10, 9, 3);
        let a = segment(&img, &params(scale)).unwrap();
        let b = segment(&img, &params(scale)).unwrap();
        prop_assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn region_count_falls_with_scale(seed in any::<u64>(), s in 0.05f64..0.3) {
        let img = blocky_image(&mut rng(seed), 12, 12, 2);
        let f = segment(&img, &params(s)).unwrap();
        let (c1, _) = coarsen(&f, &img, &params(s * 2.0)).unwrap();
        let (c2, _) = coarsen(&c1, &img, &params(s * 4.0)).unwrap();
        prop_assert!(f.region_count() >= c1.region_count());
        prop_assert!(c1.region_count() >= c2.region_count());
    }

    #[test]
    fn converged_pairs_respect_the_threshold(seed in any::<u64>(), scale in 0.05f64..0.6) {
        // local mutual best fitting stops when no mutually best pair is below scale²
        let img = blocky_image(&mut rng(seed), 9, 9, 2);
        let p = params(scale);
        let seg = segment(&img, &p).unwrap();
        let costs = seg.pair_costs(&p);
        let n = seg.region_count();
        let mut best = vec![None::<(f64, usize)>; n];
        for &(i, j, c) in &costs {
            for (a, b) in [(i, j), (j, i)] {
                if best[a].is_none_or(|(bc, bj)| c < bc || (c == bc && b < bj)) {
                    best[a] = Some((c, b));
                }
            }
        }
        for a in 0..n {
            if let Some((c, b)) = best[a] {
                let mutual = best[b].map(|(_, bb)| bb) == Some(a);
                prop_assert!(!(mutual && c < scale * scale), "regions {a} and {b} should have merged at cost {c}");
            }
        }
    }
}

#[test]
fn vanishing_scale_keeps_every_pixel() {
    let img = blocky_image(&mut rng(4), 7, 5, 2);
    let seg = segment(&img, &params(1e-9)).unwrap();
    assert_eq!(seg.region_count(), 35);
    let constant = Raster::from_f32(6, 6, 1, vec![0.25; 36]).unwrap();
    assert_eq!(segment(&constant, &params(1e-9)).unwrap().region_count(), 36);
}

#[test]
fn constant_image_becomes_one_region() {
    let img = Raster::from_f32(8, 8, 2, vec![0.5; 128]).unwrap();
    let seg = segment(&img, &params(8.0)).unwrap();
    assert_eq!(seg.region_count(), 1);
    assert!(seg.labels().iter().all(|&l| l == 0));
}

#[test]
fn constant_image_coarsens_to_one_parent() {
    let img = Raster::from_f32(8, 8, 1, vec![0.3; 64]).unwrap();
    let fine = segment(&img, &params(0.5)).unwrap();
    assert!(fine.region_count() > 1);
    let (coarse, hier) = coarsen(&fine, &img, &params(100.0)).unwrap();
    assert_eq!(coarse.region_count(), 1);
    assert!(hier.parents().iter().all(|&p| p == 0));
}

#[test]
fn half_planes_split_on_their_boundary() {
    let (h, w) = (6, 8);
    let data = (0..h * w).map(|p| if p % w < 3 { 0.1 } else { 0.9 }).collect();
    let img = Raster::from_f32(h, w, 1, data).unwrap();
    let p = params(2.0);
    let seg = segment(&img, &p).unwrap();
    assert_eq!(seg.region_count(), 2);
    for (idx, &l) in seg.labels().iter().enumerate() {
        assert_eq!(l, u32::from(idx % w >= 3));
    }
    // the two halves as regions: merging them must cost at least scale²
    let (a, b) = (&seg.regions()[0], &seg.regions()[1]);
    assert!(merge_cost(a, b, h, &p) >= p.scale * p.scale);
}

#[test]
fn coarsening_without_costs_in_the_gap_is_the_identity() {
    for seed in 0..10 {
        let img = blocky_image(&mut rng(seed), 10, 10, 2);
        let p = params(0.2);
        let fine = segment(&img, &p).unwrap();
        let f2 = p.scale * p.scale;
        let next = fine.pair_costs(&p).iter().map(|c| c.2).filter(|&c| c >= f2).fold(f64::INFINITY, f64::min);
        let c2 = if next.is_finite() { (f2 + next) / 2.0 } else { f2 * 2.0 };
        let (coarse, hier) = coarsen(&fine, &img, &params(c2.sqrt())).unwrap();
        assert_eq!(coarse.region_count(), fine.region_count());
        assert_eq!(hier, Hierarchy::identity(fine.region_count()));
    }
}

#[test]
fn four_pixels_have_two_neighbours_each() {
    let img = Raster::from_f32(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let seg = Segmentation::from_labels(&img, vec![0, 1, 2, 3], params(1.0)).unwrap();
    assert!(region_adjacency(&seg).iter().all(|n| n.len() == 2));
}

#[test]
fn vertical_stripes_touch_only_their_neighbours() {
    let n = 6;
    let img = Raster::from_f32(n, n, 1, vec![0.0; n * n]).unwrap();
    let labels = (0..n * n).map(|p| (p % n) as u32).collect();
    let seg = Segmentation::from_labels(&img, labels, params(1.0)).unwrap();
    for (k, nb) in region_adjacency(&seg).iter().enumerate() {
        let expected: Vec<usize> = [k.checked_sub(1), Some(k + 1)].into_iter().flatten().filter(|&j| j < n).collect();
        assert_eq!(nb, &expected);
    }
}

#[test]
fn single_region_has_no_neighbours() {
    let img = Raster::from_f32(3, 3, 1, vec![0.0; 9]).unwrap();
    let seg = Segmentation::from_labels(&img, vec![0; 9], params(1.0)).unwrap();
    assert_eq!(region_adjacency(&seg), vec![Vec::<usize>::new()]);
}

#[test]
fn coarse_regions_are_unions_of_their_children() {
    let img = blocky_image(&mut rng(99), 16, 16, 2);
    let fine = segment(&img, &params(0.15)).unwrap();
    let (coarse, hier) = coarsen(&fine, &img, &params(0.6)).unwrap();
    for (m, children) in hier.children().iter().enumerate() {
        let from_children: BTreeSet<usize> = fine
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| children.contains(&(l as usize)))
            .map(|(p, _)| p)
            .collect();
        let direct: BTreeSet<usize> = coarse
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l as usize == m)
            .map(|(p, _)| p)
            .collect();
        assert_eq!(from_children, direct);
    }
}

#[test]
fn single_pixels_have_perimeter_four() {
    let img = blocky_image(&mut rng(5), 4, 4, 1);
    let seg = segment(&img, &params(1e-9)).unwrap();
    assert!(seg.regions().iter().all(|r| r.pixel_count == 1 && r.perimeter == 4));
}

#[test]
fn hierarchy_text_round_trip() {
    let img = blocky_image(&mut rng(8), 12, 12, 2);
    let fine = segment(&img, &params(0.1)).unwrap();
    let (_, hier) = coarsen(&fine, &img, &params(0.5)).unwrap();
    assert_eq!(Hierarchy::from_text(&hier.to_text()).unwrap(), hier);
}

#[test]
fn connectivity_oracle_flags_split_labels() {
    assert!(regions_are_connected(&[0, 0, 1, 1], 2, 2, 2));
    assert!(!regions_are_connected(&[0, 1, 1, 0], 2, 2, 2));
}
