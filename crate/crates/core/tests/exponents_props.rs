use gasket_core::exponents::{fit_dimension, fit_power_law, median_normalizer, theory_constants};
use gasket_core::gasket::{extract_clusters, sample_percolation, volume_profile, BallMetric};
use proptest::prelude::*;

proptest! {
    #[test]
    fn exact_power_laws_are_recovered(slope in -3.0f64..3.0, c in 0.01f64..100.0, n in 3usize..10, base in 1.0f64..20.0) {
        let scales: Vec<f64> = (0..n).map(|k| base * 2f64.powi(k as i32)).collect();
        let values: Vec<f64> = scales.iter().map(|s| c * s.powf(slope)).collect();
        let f = fit_power_law("x", &scales, &values).unwrap();
        prop_assert!((f.slope - slope).abs() <= 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() <= 1e-9);
    }

    #[test]
    fn median_ignores_order(mut xs in proptest::collection::vec(0.0f64..1e3, 10..60), inf in 0usize..4, seed in any::<u64>()) {
        xs.extend(std::iter::repeat_n(f64::INFINITY, inf));
        let m = median_normalizer(&xs).unwrap();
        let mut perm = xs.clone();
        let mut s = seed;
        for i in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(median_normalizer(&perm).unwrap(), m);
        perm.reverse();
        prop_assert_eq!(median_normalizer(&perm).unwrap(), m);
    }

    #[test]
    fn bracket_is_ordered(k in 4.0f64..8.0) {
        prop_assume!(k > 4.0);
        let c = theory_constants(k).unwrap();
        prop_assert!(c.d_double < c.d_sle);
        prop_assert!(c.d_cle > 1.0 && c.d_cle < 2.0);
    }
}

#[test]
fn critical_volume_growth_is_fractal() {
    let radii = [8, 11, 16, 23, 32, 45, 64];
    let profiles: Vec<_> = (0..6)
        .map(|seed| {
            let cfg = sample_percolation(512, 0.5, seed).unwrap();
            let g = extract_clusters(&cfg).remove(0);
            volume_profile(&g, &radii, 40, seed, BallMetric::Lattice, 64).unwrap()
        })
        .collect();
    let fit = fit_dimension(&profiles, 8, 64).unwrap();
    assert!((1.6..=2.0).contains(&fit.slope), "slope {}", fit.slope);
}
