mod support;

use nestseg_core::features::PixelFeatureField;
use nestseg_core::hierarchy::{
    attention_term, build_hierarchy, extract_partition, phase1_cost, phase2_cost, HierarchyParams, Phase,
};
use nestseg_core::label::LabelMap;
use nestseg_core::metrics::{asa, contour_density, nestedness};
use nestseg_core::rag::{build_rag, AttentionMode, RegionRecord};
use proptest::prelude::*;
use support::*;

#[test]
fn engine_matches_naive_rescan() {
    let mut r = rng(7);
    for _ in 0..60 {
        let inst = random_instance(&mut r, 40);
        let graph = inst.graph();
        let seq = build_hierarchy(&graph, &inst.params).unwrap();
        let naive = naive_hierarchy(&inst.fine, &graph, &inst.params);
        assert_eq!(seq.records.len(), naive.len());
        for (got, want) in seq.records.iter().zip(&naive) {
            assert_eq!((got.u, got.v, got.phase), (want.u, want.v, want.phase));
            assert_eq!(got.cost.to_bits(), want.cost.to_bits());
        }
    }
}

#[test]
fn quadrant_sequence_from_pinned_means() {
    #[rustfmt::skip]
    let fine = LabelMap::new(4, 4, vec![
        0, 0, 2, 2,
        0, 0, 2, 2,
        1, 1, 3, 3,
        1, 1, 3, 3,
    ]).unwrap();
    let objects = LabelMap::new(4, 4, (0..16).map(|p| ((p % 4) >= 2) as u32).collect()).unwrap();
    let means = [0.0, 0.1, 0.9, 1.0];
    let data = fine
        .labels()
        .iter()
        .flat_map(|&l| [means[l as usize], 0.0, 0.0, 0.0, 0.0])
        .collect();
    let field = PixelFeatureField::from_pixel_major(4, 4, 5, data).unwrap();
    let params = HierarchyParams {
        w_pos: 0.0,
        ..HierarchyParams::default()
    };
    let graph = build_rag(&fine, &objects, &field, None, AttentionMode::Off).unwrap();
    let seq = build_hierarchy(&graph, &params).unwrap();
    let naive = naive_hierarchy(&fine, &graph, &params);
    let got: Vec<_> = seq.records.iter().map(|r| (r.u, r.v, r.phase)).collect();
    let want: Vec<_> = naive.iter().map(|m| (m.u, m.v, m.phase)).collect();
    assert_eq!(got, want);
    // two intra-object merges, then the two objects meet
    assert_eq!(got[0].2, Phase::Intra);
    assert_eq!(got[1].2, Phase::Intra);
    assert_eq!((got[2].0, got[2].1, got[2].2), (4, 5, Phase::Inter));
    let mut firsts: Vec<_> = got[..2].iter().map(|m| (m.0, m.1)).collect();
    firsts.sort();
    assert_eq!(firsts, vec![(0, 1), (2, 3)]);
}

#[test]
fn phase_one_stops_at_object_components() {
    let mut r = rng(11);
    for _ in 0..40 {
        let m = r_range(&mut r, 1, 5);
        let objects = voronoi(&mut r, 14, 12, m);
        let fine = object_aligned(&mut r, &objects, 30);
        let field = random_field(&mut r, 14, 12, 5);
        let graph = build_rag(&fine, &objects, &field, None, AttentionMode::Off).unwrap();
        let seq = build_hierarchy(&graph, &HierarchyParams::default()).unwrap();
        assert_eq!(seq.phase_boundary(), fine.count() - same_object_components(&graph));

        // every phase-1 prefix stays inside single objects
        for k in (fine.count() - seq.phase_boundary()..=fine.count()).rev() {
            let level = extract_partition(&seq, &fine, k).unwrap();
            assert_eq!(nestedness(&level, &objects).unwrap(), 1.0);
        }
    }
}

fn r_range(r: &mut impl rand::Rng, lo: usize, hi: usize) -> usize {
    r.random_range(lo..hi)
}

#[test]
fn stored_means_match_pixel_means() {
    let mut r = rng(3);
    for _ in 0..10 {
        let inst = random_instance(&mut r, 30);
        let mut graph = inst.graph();
        let seq = build_hierarchy(&graph, &inst.params).unwrap();
        let mut members: Vec<Vec<u32>> = (0..inst.fine.count() as u32).map(|l| vec![l]).collect();
        for rec in &seq.records {
            // replay also checks adjacency at merge time
            let w = graph.merge_regions(rec.u, rec.v).unwrap();
            assert_eq!(w, rec.w);
            let mut joined = members[rec.u as usize].clone();
            joined.extend(&members[rec.v as usize]);
            members.push(joined);

            let group = &members[w as usize];
            let d = inst.field.channels();
            let mut sum = vec![0.0; d];
            let mut n = 0usize;
            for (p, l) in inst.fine.labels().iter().enumerate() {
                if group.contains(l) {
                    n += 1;
                    for (s, f) in sum.iter_mut().zip(inst.field.pixel(p)) {
                        *s += f;
                    }
                }
            }
            let stored = &graph.region(w).mu;
            for (s, m) in sum.iter().zip(stored) {
                let exact = s / n as f64;
                assert!((exact - m).abs() <= 1e-5 * exact.abs().max(1e-12), "{exact} vs {m}");
            }
            assert_eq!(graph.region(w).size as usize, n);
            assert_eq!(graph.alive_count(), rec.level_after);
        }
    }
}

#[test]
fn rebuilding_is_deterministic() {
    let mut r = rng(5);
    let inst = random_instance(&mut r, 50);
    let graph = inst.graph();
    let a = build_hierarchy(&graph, &inst.params).unwrap();
    let b = build_hierarchy(&inst.graph(), &inst.params).unwrap();
    assert_eq!(a, b);
}

fn region(mu: Vec<f64>, size: u64, object: u32, attention: f64) -> RegionRecord {
    RegionRecord {
        id: 0,
        mu,
        size,
        object,
        attention,
        alive: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn levels_are_nested_and_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 40);
        let seq = build_hierarchy(&inst.graph(), &inst.params).unwrap();
        let n_f = inst.fine.count();
        let levels: Vec<LabelMap> = (1..=n_f)
            .map(|k| extract_partition(&seq, &inst.fine, k).unwrap())
            .collect();
        for (i, level) in levels.iter().enumerate() {
            prop_assert_eq!(level.count(), i + 1);
        }
        let gt = voronoi(&mut r, inst.fine.width(), inst.fine.height(), 4);
        for fine_idx in 0..levels.len() {
            for coarse_idx in 0..fine_idx {
                prop_assert_eq!(nestedness(&levels[fine_idx], &levels[coarse_idx]).unwrap(), 1.0);
            }
            if fine_idx > 0 {
                let (finer, coarser) = (&levels[fine_idx], &levels[fine_idx - 1]);
                prop_assert!(asa(finer, &gt).unwrap() >= asa(coarser, &gt).unwrap());
                prop_assert!(contour_density(finer) >= contour_density(coarser));
            }
        }
    }

    #[test]
    fn attention_only_raises_costs(
        a in proptest::collection::vec(0.0f64..1.0, 7),
        b in proptest::collection::vec(0.0f64..1.0, 7),
        att_a in 0.0f64..1.0, att_b in 0.0f64..1.0, bump in 0.0f64..0.5,
        w_att in 0.0f64..2.0, w_pos in 0.0f64..10.0, s in 1usize..50,
    ) {
        let (ra, rb) = (region(a, 3, 0, att_a), region(b, 5, 0, att_b));
        let off = HierarchyParams { w_pos, ..HierarchyParams::default() };
        let on = HierarchyParams { w_att, ..off };
        prop_assert!(phase1_cost(&ra, &rb, s, 50, &on) >= phase1_cost(&ra, &rb, s, 50, &off));
        prop_assert!(phase2_cost(&ra, &rb, &on) >= phase2_cost(&ra, &rb, &off));
        let base = attention_term(att_a, att_b, w_att);
        prop_assert!(attention_term((att_a + bump).min(1.0), att_b, w_att) >= base);
        prop_assert!(attention_term(att_a, (att_b + bump).min(1.0), w_att) >= base);
    }
}
