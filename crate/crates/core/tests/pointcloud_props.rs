use lczmap::geogrid::Raster;
use lczmap::pointcloud::{rasterize_stats, Point3, StatsStack, DEFAULT_CELLSIZE, DEFAULT_RADIUS};
use lczmap::GridHeader;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

/// Direct per-cell scan: every point against every cell center.
struct Oracle {
    count: Vec<usize>,
    min: Vec<f64>,
    max: Vec<f64>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

fn oracle(points: &[Point3<f64>], h: &GridHeader, radius: f64) -> Oracle {
    let n = h.len();
    let mut o = Oracle {
        count: vec![0; n],
        min: vec![f64::NAN; n],
        max: vec![f64::NAN; n],
        mean: vec![f64::NAN; n],
        std: vec![f64::NAN; n],
    };
    for r in 0..h.nrows {
        for c in 0..h.ncols {
            let (cx, cy) = h.cell_center(r, c);
            let zs: Vec<f64> = points
                .iter()
                .filter(|p| (p.x - cx).powi(2) + (p.y - cy).powi(2) <= radius * radius)
                .map(|p| p.z)
                .collect();
            let i = h.index(r, c);
            o.count[i] = zs.len();
            if zs.is_empty() {
                continue;
            }
            let m = zs.iter().sum::<f64>() / zs.len() as f64;
            o.mean[i] = m;
            o.std[i] = (zs.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / zs.len() as f64).sqrt();
            o.min[i] = zs.iter().copied().fold(f64::INFINITY, f64::min);
            o.max[i] = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    o
}

fn cloud(seed: u64, n: usize, h: &GridHeader) -> Vec<Point3<f64>> {
    let mut rng = Pcg64::seed_from_u64(seed);
    // Spread a little beyond the grid so edge handling is exercised.
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(h.xll - 1.0..h.xll + h.width() + 1.0),
                rng.random_range(h.yll - 1.0..h.yll + h.height() + 1.0),
                rng.random_range(-5.0..40.0),
            )
        })
        .collect()
}

fn grid_strategy() -> impl Strategy<Value = GridHeader> {
    (1usize..14, 1usize..14, -50i32..50, -50i32..50).prop_map(|(c, r, x, y)| {
        GridHeader::new(c, r, f64::from(x) * 0.25, f64::from(y) * 0.25, DEFAULT_CELLSIZE).unwrap()
    })
}

fn with_threads<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

fn assert_close_stacks(a: &StatsStack<f64>, b: &StatsStack<f64>) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.min.values(), b.min.values());
    prop_assert_eq!(a.max.values(), b.max.values());
    prop_assert_eq!(a.count.values(), b.count.values());
    for (x, y) in a.mean.values().iter().zip(b.mean.values()) {
        prop_assert!((x - y).abs() <= 1e-9, "mean {} vs {}", x, y);
    }
    for (x, y) in a.std.values().iter().zip(b.std.values()) {
        prop_assert!((x - y).abs() <= 1e-9, "std {} vs {}", x, y);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_brute_force(h in grid_strategy(), seed in any::<u64>(), n in 0usize..300) {
        let pts = cloud(seed, n, &h);
        let s = rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap();
        let o = oracle(&pts, &h, DEFAULT_RADIUS);
        for i in 0..h.len() {
            prop_assert_eq!(s.count.raw(i) as usize, o.count[i]);
            if o.count[i] == 0 {
                prop_assert!(s.mean.at(i).is_none());
                continue;
            }
            prop_assert_eq!(s.min.raw(i), o.min[i]);
            prop_assert_eq!(s.max.raw(i), o.max[i]);
            prop_assert!((s.mean.raw(i) - o.mean[i]).abs() <= 1e-9);
            prop_assert!((s.std.raw(i) - o.std[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn permutation_invariant(h in grid_strategy(), seed in any::<u64>(), n in 0usize..300) {
        let pts = cloud(seed, n, &h);
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut Pcg64::seed_from_u64(seed ^ 0x5eed));
        let a = rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap();
        let b = rasterize_stats(&shuffled, &h, DEFAULT_RADIUS).unwrap();
        assert_close_stacks(&a, &b)?;
    }

    #[test]
    fn circles_overlap_cells(h in grid_strategy(), seed in any::<u64>(), n in 0usize..300) {
        let pts = cloud(seed, n, &h);
        let s = rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap();
        let total: f64 = s.count.values().iter().sum();
        let inside = pts
            .iter()
            .filter(|p| p.x >= h.xll && p.x < h.xll + h.width() && p.y >= h.yll && p.y < h.yll + h.height())
            .count();
        prop_assert!(total >= inside as f64);
    }

    #[test]
    fn mean_within_min_max(h in grid_strategy(), seed in any::<u64>(), n in 1usize..300) {
        let pts = cloud(seed, n, &h);
        let s = rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap();
        for i in 0..h.len() {
            if let Some(m) = s.mean.at(i) {
                prop_assert!(s.min.raw(i) <= m && m <= s.max.raw(i));
                prop_assert!(s.std.raw(i) >= 0.0);
            }
        }
    }

    #[test]
    fn thread_count_does_not_matter(
        c in 1usize..40, r in 1usize..120, seed in any::<u64>(), n in 0usize..1500, w in 2usize..9,
    ) {
        let h = GridHeader::new(c, r, 0.0, 0.0, DEFAULT_CELLSIZE).unwrap();
        let pts = cloud(seed, n, &h);
        let one = with_threads(1, || rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap());
        let many = with_threads(w, || rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap());
        assert_close_stacks(&one, &many)?;
    }
}

#[test]
fn flat_plane_has_flat_statistics() {
    let h = GridHeader::new(20, 20, 0.0, 0.0, 0.5).unwrap();
    let mut rng = Pcg64::seed_from_u64(7);
    let pts: Vec<Point3<f64>> = (0..1000)
        .map(|_| Point3::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 5.0))
        .collect();
    let s = rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap();
    for r in 2..18 {
        for c in 2..18 {
            assert!((s.mean.get(r, c).unwrap() - 5.0).abs() <= 1e-9);
            assert!(s.std.get(r, c).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn f32_matches_f64_on_coarse_values() {
    let h = GridHeader::new(6, 6, 0.0, 0.0, 0.5).unwrap();
    let pts64 = cloud(3, 200, &h);
    let pts32: Vec<Point3<f32>> = pts64
        .iter()
        .map(|p| Point3::new(p.x as f32, p.y as f32, p.z.round() as f32))
        .collect();
    let s32 = rasterize_stats(&pts32, &h, DEFAULT_RADIUS).unwrap();
    let rounded: Vec<Point3<f64>> = pts32
        .iter()
        .map(|p| Point3::new(f64::from(p.x), f64::from(p.y), f64::from(p.z)))
        .collect();
    let s64 = rasterize_stats(&rounded, &h, DEFAULT_RADIUS).unwrap();
    assert_eq!(
        s32.count.values().iter().map(|&v| f64::from(v)).collect::<Vec<_>>(),
        s64.count.values()
    );
}

#[test]
fn stats_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let h = GridHeader::new(5, 4, 100.0, 200.0, 0.5).unwrap();
    let pts: Vec<Point3<f64>> = cloud(11, 100, &h);
    let s = rasterize_stats(&pts, &h, DEFAULT_RADIUS).unwrap();
    let prefix = format!("{}/stats/", dir.path().display());
    s.write_prefix(&prefix).unwrap();
    let back = StatsStack::<f64>::read_prefix(&prefix).unwrap();
    assert_eq!(back, s);
    let _: &Raster<f64> = &back.count;
}
