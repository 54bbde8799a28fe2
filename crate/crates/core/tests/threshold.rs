use proptest::prelude::*;

use rplguard_core::detect::{
    confirm_sinkhole, update_threshold, Confirmation, PdrProbeRecord, PdrThresholdState,
};
use rplguard_core::NodeId;

/// Two-pass mean and population SD, accumulated in a different order than the
/// code under test.
fn oracle(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().rev().fold(0.0, |a, x| a + x) / n;
    let var = xs
        .iter()
        .rev()
        .map(|x| (x - mean).powi(2))
        .fold(0.0, |a, x| a + x)
        / n;
    (mean, var.sqrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn threshold_tracks_history(xs in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        let mut s = PdrThresholdState::default();
        for (i, &x) in xs.iter().enumerate() {
            s = update_threshold(s, x);
            let (m, sd) = oracle(&xs[..=i]);
            prop_assert!((s.pdr_a - m).abs() <= 1e-12);
            prop_assert!((s.sd - sd).abs() <= 1e-12);
            prop_assert!((s.pdr_t - (m - sd)).abs() <= 1e-12);
            prop_assert!((s.lt_p - (m - 2.0 * sd).clamp(0.0, 1.0)).abs() <= 1e-12);
            prop_assert!((s.ut_p - (m + 2.0 * sd).clamp(0.0, 1.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn confirmation_is_strictly_below(xs in prop::collection::vec(0.0f64..=1.0, 1..20), acks in 0u32..=10) {
        let s = xs.iter().fold(PdrThresholdState::default(), |s, &x| update_threshold(s, x));
        let rec = PdrProbeRecord::new(vec![NodeId(0), NodeId(1)], 10, acks);
        let got = confirm_sinkhole(&rec, &s).unwrap();
        let below = f64::from(acks) / 10.0 < s.pdr_t;
        prop_assert_eq!(got == Confirmation::Confirmed, below);
    }
}
