use lczmap::autolabel::{derive_noisy_mask, LabelRuleConfig, NoisyClass};
use lczmap::geogrid::Raster;
use lczmap::pointcloud::{StatsStack, STATS_NODATA};
use lczmap::GridHeader;
use proptest::prelude::*;

fn stats_strategy() -> impl Strategy<Value = StatsStack<f64>> {
    (1usize..16, 1usize..16).prop_flat_map(|(c, r)| {
        let h = GridHeader::new(c, r, 0.0, 0.0, 0.5).unwrap();
        let cell = prop_oneof![
            1 => Just((STATS_NODATA, STATS_NODATA, 0.0)),
            8 => (-1.0f64..40.0, 0.0f64..5.0, 1u32..30).prop_map(|(m, s, n)| (m, s, f64::from(n))),
        ];
        prop::collection::vec(cell, h.len()).prop_map(move |cells| {
            let layer = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
                Raster::new(h, STATS_NODATA, cells.iter().map(f).collect()).unwrap()
            };
            StatsStack {
                min: layer(&|c| c.0),
                max: layer(&|c| c.0),
                mean: layer(&|c| c.0),
                std: layer(&|c| c.1),
                count: layer(&|c| c.2),
            }
        })
    })
}

fn config_strategy() -> impl Strategy<Value = LabelRuleConfig> {
    (
        0.0f64..10.0,
        0.0f64..3.0,
        0.0f64..10.0,
        0.0f64..3.0,
        0.0f64..2.0,
        0.0f64..1.0,
        1u32..5,
    )
        .prop_map(|(bh, bs, th, ts, rh, rs, mc)| LabelRuleConfig {
            building_min_height: bh,
            building_max_std: bs,
            tree_min_height: th,
            tree_min_std: ts,
            road_max_height: rh,
            road_max_std: rs,
            min_count: mc,
        })
}

fn buildings(mask: &lczmap::CategoryRaster) -> usize {
    mask.raw_codes()
        .iter()
        .filter(|&&c| c == i32::from(NoisyClass::Buildings.code()))
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn codes_are_the_four_classes(stats in stats_strategy(), cfg in config_strategy()) {
        let mask = derive_noisy_mask(&stats, &cfg).unwrap();
        prop_assert!(mask.raw_codes().iter().all(|c| (0..=3).contains(c)));
    }

    #[test]
    fn deterministic(stats in stats_strategy(), cfg in config_strategy()) {
        prop_assert_eq!(derive_noisy_mask(&stats, &cfg).unwrap(), derive_noisy_mask(&stats, &cfg).unwrap());
    }

    #[test]
    fn raising_building_height_never_adds_buildings(
        stats in stats_strategy(), cfg in config_strategy(), bump in 0.0f64..10.0,
    ) {
        let higher = LabelRuleConfig { building_min_height: cfg.building_min_height + bump, ..cfg.clone() };
        let base = buildings(&derive_noisy_mask(&stats, &cfg).unwrap());
        prop_assert!(buildings(&derive_noisy_mask(&stats, &higher).unwrap()) <= base);
    }
}
