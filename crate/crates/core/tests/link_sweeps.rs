use mdmsim::link::{
    calibrate_default, run_link, sweep_crosstalk, sweep_rate, Channels, NoiseConfig, Scenario,
    DEFAULT_RATE_POINTS,
};
use mdmsim::metrics::{xt_penalty_montecarlo, InterfererModel};
use mdmsim::photonic::Mode;

/// Two error counts differ by more than the 95% counting interval.
fn significant(more: u64, fewer: u64) -> bool {
    let (a, b) = (more as f64, fewer as f64);
    a - b > 1.96 * (a + b).max(1.0).sqrt()
}

#[test]
fn rate_sweep_rises_with_rate_and_crosses_the_7pct_threshold() {
    let s = calibrate_default();
    let points = sweep_rate(&s, &DEFAULT_RATE_POINTS).unwrap();
    assert_eq!(points.len(), DEFAULT_RATE_POINTS.len());
    let errs: Vec<u64> = points.iter().map(|p| p.errors.unwrap()).collect();
    let bits: Vec<u64> = points.iter().map(|p| p.bits.unwrap()).collect();
    let mut inversions = 0;
    for k in 1..points.len() {
        // compare counts scaled to the lower point's bit budget
        let scaled = (errs[k] as f64 * bits[k - 1] as f64 / bits[k] as f64).round() as u64;
        if scaled < errs[k - 1] {
            assert!(!significant(errs[k - 1], scaled), "{points:?}");
            inversions += 1;
        }
    }
    assert!(inversions <= 1);

    let ber_at = |n: usize| {
        points
            .iter()
            .find(|p| p.n_data_sc == n)
            .unwrap()
            .ber
            .unwrap()
    };
    assert!(points
        .iter()
        .all(|p| p.line_rate > 60e9 && p.line_rate < 130e9));
    assert!(ber_at(204) <= 3.8e-3 && ber_at(255) > 3.8e-3);
}

#[test]
fn noiseless_rate_sweep_is_error_free() {
    let mut s = calibrate_default();
    s.noise = NoiseConfig::off();
    // a digitizer ranged to the record: nothing clips
    s.adc.full_scale_v = None;
    for p in sweep_rate(&s, &DEFAULT_RATE_POINTS).unwrap() {
        assert_eq!(p.errors, Some(0), "{p:?}");
    }
}

#[test]
fn sweep_output_is_sorted_and_deduplicated() {
    let s = calibrate_default();
    let p = sweep_rate(&s, &[160, 64, 160]).unwrap();
    let n: Vec<usize> = p.iter().map(|p| p.n_data_sc).collect();
    assert_eq!(n, vec![64, 160]);
    assert!(sweep_rate(&s, &[300]).is_err());
}

#[test]
fn without_crosstalk_dual_channel_equals_single_channel() {
    let mut both = Scenario {
        channels: Channels::Both,
        ..calibrate_default()
    };
    both.mux.xt_db = f64::NEG_INFINITY;
    let dual = run_link(&both).unwrap();
    for (channels, m) in [(Channels::Te0, Mode::Te0), (Channels::Te1, Mode::Te1)] {
        let single = run_link(&Scenario {
            channels,
            ..both.clone()
        })
        .unwrap();
        assert_eq!(
            single.channel(m).unwrap().errors,
            dual.channel(m).unwrap().errors
        );
    }
}

#[test]
fn crosstalk_sweep_penalties() {
    let s = Scenario {
        channels: Channels::Both,
        ..calibrate_default()
    };
    let pts = sweep_crosstalk(&s, &[-22.2, -60.0, -30.0]).unwrap();
    let xt: Vec<f64> = pts.iter().map(|p| p.xt_db).collect();
    assert_eq!(xt, vec![-60.0, -30.0, -22.2]);
    assert!(pts[0].measured_penalty_db <= 0.05);
    assert!(pts
        .windows(2)
        .all(|w| w[1].measured_penalty_db >= w[0].measured_penalty_db));

    // the Monte-Carlo interferer carries the crosstalk the receiver actually saw
    let p = &pts[2];
    let mc = xt_penalty_montecarlo(
        p.effective_xt_db,
        16,
        p.baseline_ber,
        InterfererModel::Gaussian,
        s.seed.derive("xt.mc"),
    )
    .unwrap();
    assert_eq!(p.montecarlo_penalty_db, Some(mc));
    assert!((p.measured_penalty_db - mc).abs() <= 0.3, "{p:?}");
}

#[test]
fn crosstalk_sweep_needs_two_channels() {
    assert!(sweep_crosstalk(&calibrate_default(), &[-30.0]).is_err());
}
