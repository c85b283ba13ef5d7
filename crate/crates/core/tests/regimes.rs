use std::f64::consts::PI;

use neckwall::{
    classify, finite_ratio, predicted_limits, Limit, NeckParams, PowerLogLaw, Rate, RegimeTag,
    ScalingFamily,
};
use proptest::prelude::*;

fn family(d: PowerLogLaw, e: PowerLogLaw) -> ScalingFamily {
    ScalingFamily::new(d, e).unwrap()
}

fn critical(ell0: f64) -> ScalingFamily {
    family(PowerLogLaw::power(1.0, 0.5), PowerLogLaw::new(ell0, 1.0, -1.0))
}

#[test]
fn tags_cover_the_regime_table() {
    let cases = [
        (PowerLogLaw::power(1.0, 2.0), PowerLogLaw::power(1.0, 3.0), RegimeTag::SuperThin),
        (PowerLogLaw::power(1.0, 1.0), PowerLogLaw::power(1.0, 2.0), RegimeTag::FlatThin),
        (PowerLogLaw::power(1.0, 0.5), PowerLogLaw::power(1.0, 0.75), RegimeTag::WindowThick),
        (PowerLogLaw::power(1.0, 0.5), PowerLogLaw::power(1.0, 1.0), RegimeTag::NarrowThick),
        (PowerLogLaw::power(1.0, 0.5), PowerLogLaw::power(1.0, 2.0), RegimeTag::LetterBoxSub),
        (PowerLogLaw::power(1.0, 0.5), PowerLogLaw::new(1.0, 1.0, -1.0), RegimeTag::LetterBoxCritical),
        (PowerLogLaw::power(1.0, 0.5), PowerLogLaw::power(1.0, 0.5), RegimeTag::OutOfScopeKS),
    ];
    for (d, e, tag) in cases {
        assert_eq!(classify(&family(d, e)).unwrap().tag, tag, "{d:?} {e:?}");
    }
}

#[test]
fn neck_and_total_agree_for_in_neck_regimes() {
    for (d, e) in [(2.0, 3.0), (1.0, 2.0), (0.5, 2.0)] {
        let r = classify(&family(PowerLogLaw::power(1.0, d), PowerLogLaw::power(1.0, e))).unwrap();
        assert!(r.tag.wall_in_neck());
        assert_eq!(r.kappa_neck, r.kappa_total);
        assert_eq!(r.kappa_outside, Some(0.0));
    }
    for (d, e) in [(0.5, 0.75), (0.5, 1.0)] {
        let r = classify(&family(PowerLogLaw::power(1.0, d), PowerLogLaw::power(1.0, e))).unwrap();
        assert!(r.tag.wall_outside());
        assert_eq!(r.kappa_neck, Some(0.0));
        assert_eq!(r.rate, Some(Rate::LogRatioOverDelta));
    }
}

#[test]
fn critical_ell_tracks_prefactor() {
    for ell0 in [0.5, 1.0, 2.0 * PI, 10.0] {
        let r = classify(&critical(ell0)).unwrap();
        assert_eq!(r.tag, RegimeTag::LetterBoxCritical);
        let ell = r.ell.finite().unwrap();
        assert!((ell - ell0 / 2.0).abs() < 1e-12);
    }
}

#[test]
fn equal_wells_predict_nothing() {
    for f in [critical(3.0), family(PowerLogLaw::power(1.0, 2.0), PowerLogLaw::power(1.0, 3.0))] {
        let p = predicted_limits(&classify(&f).unwrap(), 0.3, 0.3).unwrap();
        assert_eq!((p.total, p.neck, p.outside), (0.0, 0.0, 0.0));
    }
}

#[test]
fn out_of_scope_has_no_prediction() {
    let r = classify(&family(PowerLogLaw::power(1.0, 0.5), PowerLogLaw::power(0.5, 0.5))).unwrap();
    assert_eq!(r.tag, RegimeTag::OutOfScopeKS);
    assert!(predicted_limits(&r, 0.0, 1.0).is_err());
}

#[test]
fn critical_constants_approach_the_neighbouring_regimes() {
    let total = |ell0: f64| {
        predicted_limits(&classify(&critical(ell0)).unwrap(), 0.0, 1.0)
            .unwrap()
            .total
    };
    assert!((total(1e-9) - 1.0).abs() < 1e-9);
    assert!(total(1e12) < 1e-11);
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let t = total(0.01 * 1.5f64.powi(k));
        assert!(t < prev);
        prev = t;
    }
}

#[test]
fn finite_ratio_matches_direct_evaluation() {
    let n = NeckParams::new(1e-4, 0.1, 1e-3).unwrap();
    assert!((finite_ratio(&n).unwrap() - 10.0 * 100f64.ln()).abs() < 1e-10);
    let near = NeckParams::new(0.01, 0.1, 0.1 * (1.0 - 1e-9)).unwrap();
    assert!(finite_ratio(&near).unwrap() < 1e-6);
}

proptest! {
    #[test]
    fn critical_split_is_exact(ell0 in 1e-3f64..1e3) {
        let r = classify(&critical(ell0)).unwrap();
        let ell = r.ell.finite().unwrap();
        let p = predicted_limits(&r, -0.5, 1.5).unwrap();
        let err = (p.neck + p.outside / ell - p.total).abs() / p.total;
        prop_assert!(err <= 1e-12);
        let identity = PI * PI / (PI + ell).powi(2) + ell * PI / (PI + ell).powi(2) - PI / (PI + ell);
        prop_assert!(identity.abs() <= 1e-12);
    }

    #[test]
    fn pure_power_tags_ignore_prefactors(
        pd in 0.2f64..3.0,
        gap in 0.05f64..2.0,
        cd in 0.1f64..10.0,
        ce in 0.1f64..10.0,
    ) {
        let base = classify(&family(PowerLogLaw::power(1.0, pd), PowerLogLaw::power(1.0, pd + gap))).unwrap();
        let scaled = classify(&family(PowerLogLaw::power(cd, pd), PowerLogLaw::power(ce, pd + gap))).unwrap();
        prop_assert_eq!(base.tag, scaled.tag);
        prop_assert!(!matches!(scaled.ell, Limit::Finite(_)));
    }
}
