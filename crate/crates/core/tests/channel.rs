use pinch_noma::{
    build_channel_table, build_layout, cross_channel_gain, derive_params, own_channel_gain, FeedConvention, Position3D,
    SystemLayout, WaveguideParams,
};
use proptest::prelude::*;

const C: f64 = 299_792_458.0;

// Straight evaluation of the phasor sums with plain tuples and std
// trigonometry, sharing nothing with the crate beyond the layout.
fn reference_term(user: [f64; 3], pinch: [f64; 3], feed: [f64; 3], fc: f64, ratio: f64) -> (f64, f64) {
    let dist =
        |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let lambda = C / fc;
    let lambda_g = lambda / ratio;
    let eta = C * C / (16.0 * std::f64::consts::PI.powi(2) * fc * fc);
    let r = dist(user, pinch);
    // whole cycles dropped before scaling by 2 pi; the full angle is ~1e4 rad
    let cycles = (r / lambda + dist(feed, pinch) / lambda_g).rem_euclid(1.0);
    let phase = -2.0 * std::f64::consts::PI * cycles;
    let amp = eta.sqrt() / r;
    (amp * phase.cos(), amp * phase.sin())
}

fn arr(p: &Position3D) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn reference_own_sq(layout: &SystemLayout, n: usize, m: usize, fc: f64, ratio: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..layout.users_per_waveguide() {
        let (a, b) = reference_term(arr(layout.user(n, m)), arr(layout.pinch(n, i)), arr(layout.feed(n)), fc, ratio);
        re += a;
        im += b;
    }
    re * re + im * im
}

#[test]
fn own_gain_matches_reference_evaluation() {
    let params = derive_params(28e9, 1.4).unwrap();
    for feed in [FeedConvention::SharedOrigin, FeedConvention::PerWaveguideAxis] {
        let layout = build_layout(2, 2, 20.0, 3.0, feed).unwrap();
        for n in 0..2 {
            for m in 0..2 {
                let ours = own_channel_gain(&layout, &params, n, m).unwrap().norm_sqr();
                let reference = reference_own_sq(&layout, n, m, 28e9, 1.4);
                assert!((ours - reference).abs() <= 1e-12 * reference, "{n},{m}: {ours} vs {reference}");
            }
        }
    }
}

#[test]
fn cross_gain_phase_matches_reference() {
    let params = derive_params(28e9, 1.4).unwrap();
    let layout = build_layout(3, 2, 13.5, 3.0, FeedConvention::PerWaveguideAxis).unwrap();
    for (src, dst, i, m) in [(0, 1, 0, 1), (2, 0, 1, 0), (1, 2, 1, 1)] {
        let h = cross_channel_gain(&layout, &params, src, dst, i, m).unwrap();
        let (re, im) =
            reference_term(arr(layout.user(dst, m)), arr(layout.pinch(src, i)), arr(layout.feed(src)), 28e9, 1.4);
        let scale = (re * re + im * im).sqrt();
        assert!((h.re - re).abs() <= 1e-10 * scale);
        assert!((h.im - im).abs() <= 1e-10 * scale);
    }
}

#[test]
fn cross_terms_vanish_with_spacing() {
    let params = derive_params(28e9, 1.4).unwrap();
    let mut previous = f64::INFINITY;
    for spacing in [20.0, 100.0, 1_000.0, 10_000.0] {
        let layout = build_layout(2, 2, spacing, 3.0, FeedConvention::SharedOrigin).unwrap();
        let table = build_channel_table(&layout, &params, 1e-12).unwrap();
        let worst = (0..2)
            .flat_map(|i| (0..2).map(move |m| (i, m)))
            .map(|(i, m)| table.normalized_cross_gain_sq(1, 0, i, m).unwrap())
            .fold(0.0, f64::max);
        assert!(worst < previous);
        previous = worst;
    }
    assert!(previous < 1e-6);
}

fn params_strategy() -> impl Strategy<Value = WaveguideParams> {
    (1e9..100e9f64, 1.0..2.0f64).prop_map(|(fc, ratio)| derive_params(fc, ratio).unwrap())
}

proptest! {
    #[test]
    fn magnitude_bounded_by_term_sum(
        params in params_strategy(),
        n_wg in 1usize..4,
        m_users in 1usize..4,
        spacing in 0.5..60.0f64,
        height in 0.5..10.0f64,
    ) {
        let layout = build_layout(n_wg, m_users, spacing, height, FeedConvention::SharedOrigin).unwrap();
        for n in 0..n_wg {
            for m in 0..m_users {
                let h = own_channel_gain(&layout, &params, n, m).unwrap().norm();
                let bound: f64 = (0..m_users)
                    .map(|i| params.eta.sqrt() / layout.user(n, m).distance(layout.pinch(n, i)))
                    .sum();
                prop_assert!(h <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn single_pinch_gain_is_reciprocal_distance(
        params in params_strategy(),
        x in -50.0..50.0f64, y in -50.0..50.0f64, height in 0.5..10.0f64,
        ux in -50.0..50.0f64, uy in -50.0..50.0f64,
    ) {
        let layout = SystemLayout::from_positions(
            vec![Position3D::new(0.0, 0.0, height)],
            vec![Position3D::new(x, y, height)],
            vec![Position3D::new(ux, uy, 0.0)],
            1,
            1.0,
        ).unwrap();
        let r = layout.user(0, 0).distance(layout.pinch(0, 0));
        let h = own_channel_gain(&layout, &params, 0, 0).unwrap().norm();
        prop_assert!((h * r - params.eta.sqrt()).abs() <= 1e-13 * params.eta.sqrt());
    }

    #[test]
    fn translation_leaves_gains_unchanged(
        shift in (-100.0..100.0f64, -100.0..100.0f64, -5.0..5.0f64),
        grid_shift in (-200i32..200, -200i32..200, -8i32..8),
        quarter_steps in 4u32..160,
    ) {
        let params = derive_params(28e9, 1.4).unwrap();
        let spacing = quarter_steps as f64 * 0.25;
        let layout = build_layout(2, 2, spacing, 3.0, FeedConvention::PerWaveguideAxis).unwrap();
        let base = build_channel_table(&layout, &params, 1e-12).unwrap();
        // On a quarter-meter lattice every shifted coordinate is exact, so
        // only the phase arithmetic could differ. Arbitrary shifts also move
        // distances by an ulp, ~1e-12 cycles at these path lengths.
        let exact = Position3D::new(grid_shift.0 as f64 * 0.5, grid_shift.1 as f64 * 0.5, grid_shift.2 as f64 * 0.5);
        let any = Position3D::new(shift.0, shift.1, shift.2);
        for (by, tol) in [(exact, 1e-12), (any, 1e-9)] {
            let moved = build_channel_table(&layout.translated(&by), &params, 1e-12).unwrap();
            for n in 0..2 {
                for m in 0..2 {
                    let (x, y) = (base.own_gain_sq(n, m), moved.own_gain_sq(n, m));
                    prop_assert!((x - y).abs() <= tol * x, "{} vs {}", x, y);
                    let (x, y) = (
                        base.normalized_cross_gain_sq(1 - n, n, m, 1 - m).unwrap(),
                        moved.normalized_cross_gain_sq(1 - n, n, m, 1 - m).unwrap(),
                    );
                    prop_assert!((x - y).abs() <= tol * x);
                }
            }
        }
    }

    #[test]
    fn cross_magnitude_ignores_phase(
        params in params_strategy(),
        spacing in 1.0..40.0f64,
    ) {
        let layout = build_layout(3, 2, spacing, 3.0, FeedConvention::SharedOrigin).unwrap();
        for (src, dst, i, m) in [(0, 1, 0, 0), (2, 1, 1, 0), (1, 0, 1, 1)] {
            let h = cross_channel_gain(&layout, &params, src, dst, i, m).unwrap().norm();
            let r = layout.user(dst, m).distance(layout.pinch(src, i));
            prop_assert!((h - params.eta.sqrt() / r).abs() <= 1e-13 * h);
        }
    }
}
