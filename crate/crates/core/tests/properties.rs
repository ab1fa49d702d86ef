use lanescan_core::imaging::{luma, rotated_dims, FILL};
use lanescan_core::{
    analyze_run, compute_profile, compute_rf, crop, find_apex, integrate_peak, make_marks,
    make_rect, rotate, snap_click, BaselineMode, Chromatogram, GrayImage, LaneMarks, LaneRect,
    PeakBounds,
};
use proptest::prelude::*;

fn gray_image() -> impl Strategy<Value = GrayImage> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h)
            .prop_map(move |px| GrayImage::new(w, h, px).unwrap())
    })
}

fn signal(min_len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=255.0, min_len..60)
}

fn chrom_from(signal: Vec<f64>) -> Chromatogram {
    let n = signal.len();
    Chromatogram::new(signal, 0, n - 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn luma_neutral_fixed_point(v in any::<u8>()) {
        prop_assert_eq!(luma([v, v, v]), v);
    }

    #[test]
    fn rotate_quarter_cycle_and_half_turn(img in gray_image()) {
        prop_assert_eq!(&rotate(&img, 0.0).unwrap(), &img);
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, 90.0).unwrap();
        }
        prop_assert_eq!(&r, &img);
        let half = rotate(&rotate(&img, 180.0).unwrap(), 180.0).unwrap();
        prop_assert_eq!(&half, &img);
    }

    #[test]
    fn rotate_uniform_stays_uniform(w in 1usize..30, h in 1usize..30, v in any::<u8>(), angle in -360.0f64..360.0) {
        let img = GrayImage::filled(w, h, v).unwrap();
        let r = rotate(&img, angle).unwrap();
        prop_assert_eq!((r.width(), r.height()), rotated_dims(w, h, angle));
        prop_assert!(r.pixels().iter().all(|&p| p == v || p == FILL));
        prop_assert!(r.pixels().contains(&v));
    }

    #[test]
    fn rect_corner_symmetry(ax in -10.0f64..110.0, ay in -10.0f64..110.0, bx in -10.0f64..110.0, by in -10.0f64..110.0) {
        let r1 = make_rect((ax, ay), (bx, by), 100, 90);
        let r2 = make_rect((bx, by), (ax, ay), 100, 90);
        prop_assert_eq!(&r1, &r2);
        if let Ok(r) = r1 {
            prop_assert!(r.x0 < r.x1 && r.x1 <= 100 && r.y0 + 2 <= r.y1 && r.y1 <= 90);
        }
    }

    #[test]
    fn marks_order_invariant(a in -5.0f64..70.0, b in -5.0f64..70.0, h in 2usize..64) {
        let m1 = make_marks(a, b, h);
        prop_assert_eq!(&m1, &make_marks(b, a, h));
        if let Ok(m) = m1 {
            prop_assert!(m.front_row < m.seed_row && m.seed_row < h);
        }
    }

    #[test]
    fn crop_full_extent_idempotent(img in gray_image().prop_filter("tall", |i| i.height() >= 2)) {
        let rect = LaneRect::new(0, 0, img.width(), img.height()).unwrap();
        let once = crop(&img, rect).unwrap();
        let twice = crop(once.pixels(), rect).unwrap();
        prop_assert_eq!(once.pixels(), &img);
        prop_assert_eq!(twice.pixels(), once.pixels());
    }

    #[test]
    fn profile_is_width_invariant_and_bounded(img in gray_image().prop_filter("tall", |i| i.height() >= 2)) {
        let (w, h) = (img.width(), img.height());
        let marks = LaneMarks { seed_row: h - 1, front_row: 0 };
        let mut doubled = Vec::with_capacity(2 * w * h);
        for y in 0..h {
            for &p in img.row(y) {
                doubled.extend([p, p]);
            }
        }
        let doubled = GrayImage::new(2 * w, h, doubled).unwrap();
        let full = |g: &GrayImage| {
            let c = crop(g, LaneRect::new(0, 0, g.width(), h).unwrap()).unwrap();
            compute_profile(&c.with_marks(marks).unwrap()).unwrap()
        };
        let a = full(&img);
        let b = full(&doubled);
        prop_assert_eq!(a.signal(), b.signal());
        prop_assert!(a.signal().iter().all(|v| (0.0..=255.0).contains(v)));
        prop_assert_eq!(a.row_of(a.seed_idx()), marks.seed_row);
    }

    #[test]
    fn profile_monotone_response(img in gray_image().prop_filter("tall", |i| i.height() >= 2), pick in any::<prop::sample::Index>()) {
        let (w, h) = (img.width(), img.height());
        let k = pick.index(w * h);
        prop_assume!(img.pixels()[k] > 0);
        let mut px = img.pixels().to_vec();
        px[k] -= 1;
        let darker = GrayImage::new(w, h, px).unwrap();
        let marks = LaneMarks { seed_row: h - 1, front_row: 0 };
        let prof = |g: &GrayImage| {
            let c = crop(g, LaneRect::new(0, 0, w, h).unwrap()).unwrap();
            compute_profile(&c.with_marks(marks).unwrap()).unwrap()
        };
        let (a, b) = (prof(&img), prof(&darker));
        let changed: Vec<usize> = (0..h).filter(|&i| a.signal()[i] != b.signal()[i]).collect();
        prop_assert_eq!(changed.len(), 1);
        let i = changed[0];
        prop_assert!(b.signal()[i] > a.signal()[i]);
        prop_assert_eq!(a.row_of(i), k / w);
    }

    #[test]
    fn snap_ignores_y(sig in signal(2), x in -20.0f64..80.0, y1 in -1e6f64..1e6, y2 in -1e6f64..1e6) {
        let c = chrom_from(sig);
        prop_assert_eq!(snap_click(&c, x, y1), snap_click(&c, x, y2));
    }

    #[test]
    fn raw_area_is_additive(sig in signal(3), cuts in any::<[prop::sample::Index; 3]>()) {
        let c = chrom_from(sig);
        let mut idx: Vec<usize> = cuts.iter().map(|i| i.index(c.len())).collect();
        idx.sort_unstable();
        idx.dedup();
        prop_assume!(idx.len() == 3);
        let area = |a, b| integrate_peak(&c, PeakBounds::new(a, b), BaselineMode::Raw).unwrap();
        let whole = area(idx[0], idx[2]);
        let parts = area(idx[0], idx[1]) + area(idx[1], idx[2]);
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn scaling_preserves_percent_apex_rf(sig in signal(8), scale in 0.01f64..1.0, cut in 2usize..6) {
        let n = sig.len();
        let c = Chromatogram::new(sig.clone(), 1, n - 1).unwrap();
        let scaled = Chromatogram::new(sig.iter().map(|v| v * scale).collect(), 1, n - 1).unwrap();
        let clicks = [[(0.0, 0.0), (cut as f64, 0.0)], [(cut as f64, 0.0), ((n - 1) as f64, 0.0)]];
        for mode in [BaselineMode::Raw, BaselineMode::LinearChord] {
            let (Ok(a), Ok(b)) = (analyze_run(&c, &clicks, mode), analyze_run(&scaled, &clicks, mode)) else {
                continue;
            };
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((q.area - scale * p.area).abs() <= 1e-9 * p.area.max(1.0));
                prop_assert!((q.percent - p.percent).abs() <= 1e-9);
                prop_assert_eq!(q.apex_idx, p.apex_idx);
                prop_assert_eq!(q.rf, p.rf);
            }
            let total: f64 = a.iter().map(|p| p.percent).sum();
            prop_assert!((total - 100.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn areas_are_non_negative(sig in signal(2), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let c = chrom_from(sig);
        let (a, b) = (a.index(c.len()), b.index(c.len()));
        prop_assume!(a != b);
        let bounds = PeakBounds::new(a.min(b), a.max(b));
        for mode in [BaselineMode::Raw, BaselineMode::LinearChord] {
            prop_assert!(integrate_peak(&c, bounds, mode).unwrap() >= 0.0);
        }
        let apex = find_apex(&c, bounds).unwrap();
        prop_assert!(bounds.start_idx <= apex && apex <= bounds.end_idx);
    }

    #[test]
    fn rf_bounded_and_monotone(seed in 0usize..50, span in 2usize..100, k in 0usize..200) {
        let front = seed + span;
        let rf = compute_rf(k, seed, front).unwrap();
        prop_assert!((0.0..=1.0).contains(&rf));
        if k > seed && k + 1 < front {
            prop_assert!(compute_rf(k + 1, seed, front).unwrap() > rf);
        }
    }
}
