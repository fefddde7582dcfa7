//! Property tests for the library-wide invariants.

use proptest::prelude::*;
use wpc_secrecy::numerics::{mixture_entropy_general, GaussComponent};
use wpc_secrecy::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn db_roundtrip(x in -200.0f64..200.0) {
        let back = linear_to_db(db_to_linear(x));
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn dbm_roundtrip(x in -120.0f64..60.0) {
        let back = watts_to_dbm(dbm_to_watts(x));
        prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn path_loss_power_law(d in 0.5f64..50.0, gamma in 0.5f64..5.0) {
        let a = path_loss(2.4e9, d, gamma).unwrap();
        let b = path_loss(2.4e9, 2.0 * d, gamma).unwrap();
        let ratio = a / b;
        let expect = 2f64.powf(gamma);
        prop_assert!((ratio - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn exponential_grid_preserves_mean(omega in 1e-9f64..1e3, n in 1usize..200) {
        let d = discretize_exponential(omega, n).unwrap();
        let s: f64 = d.probs.iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
        prop_assert!((d.mean() - omega).abs() <= 1e-12 * omega);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // entropy invariances: translation and sign flip of all means
    #[test]
    fn mixture_entropy_translation_and_flip(
        m1 in -3.0f64..3.0,
        m2 in -3.0f64..3.0,
        w in 0.05f64..0.95,
        sigma in 0.2f64..2.0,
        shift in -5.0f64..5.0,
    ) {
        let spec = MixtureSpec {
            means: vec![m1, m2],
            probs: vec![w, 1.0 - w],
            sigma_sq: sigma * sigma,
        };
        let h0 = mixture_entropy(&spec).unwrap();
        let shifted = MixtureSpec {
            means: vec![m1 + shift, m2 + shift],
            probs: spec.probs.clone(),
            sigma_sq: spec.sigma_sq,
        };
        let flipped = MixtureSpec {
            means: vec![-m1, -m2],
            probs: spec.probs.clone(),
            sigma_sq: spec.sigma_sq,
        };
        prop_assert!((mixture_entropy(&shifted).unwrap() - h0).abs() <= 2e-9);
        prop_assert!((mixture_entropy(&flipped).unwrap() - h0).abs() <= 2e-9);
    }

    // scaling: h(k mu, k^2 s^2) = h(mu, s^2) + ln k
    #[test]
    fn mixture_entropy_scaling(k in 1e-6f64..1e3) {
        let h0 = mixture_entropy_general(&[
            GaussComponent { mean: -1.0, sigma: 0.8, weight: 0.3 },
            GaussComponent { mean: 2.0, sigma: 0.8, weight: 0.7 },
        ]).unwrap();
        let h1 = mixture_entropy_general(&[
            GaussComponent { mean: -k, sigma: 0.8 * k, weight: 0.3 },
            GaussComponent { mean: 2.0 * k, sigma: 0.8 * k, weight: 0.7 },
        ]).unwrap();
        prop_assert!((h1 - (h0 + k.ln())).abs() <= 1e-7 * (1.0 + k.ln().abs()));
    }
}

#[test]
fn bounds_nondecreasing_in_transmit_power() {
    // both bounds grow with the transmit budget over a small sweep (upper
    // within the granularity of its search grid)
    let n = 8;
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for dbm in [-8.0, -4.0, 0.0, 2.0] {
        let mut params = SystemParams {
            p_p: 1e-12,
            ..SystemParams::default()
        };
        params.p_et = dbm_to_watts(dbm);
        let fading = FadingGrid::rayleigh(&params, n).unwrap();
        let (lo, _, _) = lower_bound(&params, &fading, EvalOptions::default()).unwrap();
        let search = SearchConfig {
            j_max: 2,
            amp_levels: 8,
            prob_resolution: 4,
            ..SearchConfig::default()
        };
        let (up, _, _) = upper_bound(&params, &fading, &search, EvalOptions::default()).unwrap();
        lowers.push(lo.c_s_lower.unwrap());
        uppers.push(up.c_s_upper.unwrap());
    }
    for w in lowers.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "lower not monotone: {lowers:?}");
    }
    for w in uppers.windows(2) {
        assert!(
            w[1] >= w[0] * (1.0 - 0.02) - 1e-12,
            "upper not monotone within search granularity: {uppers:?}"
        );
    }
}

#[test]
fn widening_the_search_never_decreases_the_bound() {
    let params = SystemParams {
        p_p: 1e-12,
        ..SystemParams::default()
    };
    let fading = FadingGrid::rayleigh(&params, 6).unwrap();
    let narrow = SearchConfig {
        j_max: 1,
        amp_levels: 6,
        prob_resolution: 2,
        ..SearchConfig::default()
    };
    // strict superset: doubled simplex resolution, amplitude levels refined
    // to 2L-1 over the same span, one more pair allowed
    let wide = SearchConfig {
        j_max: 2,
        amp_levels: 11,
        prob_resolution: 4,
        ..SearchConfig::default()
    };
    let (u_narrow, _, _) = upper_bound(&params, &fading, &narrow, EvalOptions::default()).unwrap();
    let (u_wide, _, _) = upper_bound(&params, &fading, &wide, EvalOptions::default()).unwrap();
    let (a, b) = (u_narrow.c_s_upper.unwrap(), u_wide.c_s_upper.unwrap());
    assert!(b >= a - 1e-12, "widening decreased the bound: {a} -> {b}");
}

#[test]
fn printed_formula_switch_keeps_ordering() {
    for printed in [false, true] {
        let params = SystemParams {
            p_p: 1e-12,
            ..SystemParams::default()
        };
        let fading = FadingGrid::rayleigh(&params, 6).unwrap();
        let opts = EvalOptions {
            printed_formulas: printed,
        };
        let (lo, _, _) = lower_bound(&params, &fading, opts).unwrap();
        let search = SearchConfig {
            j_max: 1,
            amp_levels: 4,
            prob_resolution: 2,
            ..SearchConfig::default()
        };
        let (up, _, _) = upper_bound(&params, &fading, &search, opts).unwrap();
        let (l, u) = (lo.c_s_lower.unwrap(), up.c_s_upper.unwrap());
        assert!(u >= l - 1e-6, "printed={printed}: upper {u} < lower {l}");
    }
}
