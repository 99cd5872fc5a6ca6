use ajscc::channel::{self, rng_from_seed};
use ajscc::circuit::{Circuit, CircuitConfig, Region};
use ajscc::mapping::{
    decode, encode, quantize_level, MappingParams, NormalizedReading, SensorReading,
};
use ajscc::power::{estimate_cost, estimate_power, format_bom, parse_bom, ComponentSpec};
use proptest::prelude::*;

/// Valid parameter sets well away from the paper's numbers.
fn params_strategy() -> impl Strategy<Value = MappingParams> {
    (
        0.05f64..1.0,  // delta_h
        1u32..16,      // num_levels
        0.1f64..2.0,   // v_r
        0.5f64..4.0,   // t span
        0.0f64..1.5,   // connector_len
        0.0f64..2.0,   // t_offset
        0.0f64..2.0,   // h_offset
        0.0f64..0.5,   // extra humidity span
    )
        .prop_map(|(delta_h, levels, v_r, t_span, connector_len, t_off, h_off, extra)| {
            MappingParams {
                delta_h,
                v_r,
                num_levels: levels,
                gain: v_r / t_span,
                connector_len,
                t_offset: t_off,
                t_max_raw: t_off + t_span,
                h_offset: h_off,
                h_max_raw: h_off + f64::from(levels - 1) * delta_h + extra + 1e-6,
            }
        })
        .prop_filter("valid", |p| p.validate().is_ok())
}

fn point_in(p: &MappingParams) -> impl Strategy<Value = NormalizedReading> {
    (0.0..=p.t_span(), 0.0..=p.h_span()).prop_map(|(t, h)| NormalizedReading::new(t, h))
}

fn params_and_point() -> impl Strategy<Value = (MappingParams, NormalizedReading)> {
    params_strategy().prop_flat_map(|p| (Just(p), point_in(&p)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn roundtrip((p, n) in params_and_point()) {
        let e = encode(n, &p).unwrap();
        let d = decode(e.s, &p).unwrap();
        prop_assert!((d.v_t0_hat - n.v_t0).abs() <= 1e-9);
        prop_assert!((d.v_h0_hat - n.v_h0).abs() <= p.delta_h / 2.0 + 1e-12 || d.level_hat == p.num_levels);
        prop_assert_eq!(d.level_hat, quantize_level(n.v_h0, &p).unwrap());
        prop_assert_eq!(d.v_h0_hat, p.level_center(d.level_hat));
    }

    #[test]
    fn encoded_range((p, n) in params_and_point()) {
        let s = encode(n, &p).unwrap().s;
        prop_assert!(s >= 0.0 && s <= p.s_max() + 1e-12, "s = {} s_max = {}", s, p.s_max());
    }

    #[test]
    fn parity_slope((p, n) in params_and_point(), other in 0.0f64..1.0) {
        let t2 = other * p.t_span();
        prop_assume!((t2 - n.v_t0).abs() > 1e-3);
        let a = encode(n, &p).unwrap();
        let b = encode(NormalizedReading::new(t2, n.v_h0), &p).unwrap();
        let slope = (b.s - a.s) / (t2 - n.v_t0);
        let expected = if a.level % 2 == 1 { p.gain } else { -p.gain };
        prop_assert!((slope - expected).abs() < 1e-9, "slope {} expected {}", slope, expected);
    }

    #[test]
    fn traversal_strictly_increasing(p in params_strategy(), frac in prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]) {
        let v_t0 = frac * p.t_span();
        let mut last = -1.0;
        for level in 1..=p.num_levels {
            let s = encode(NormalizedReading::new(v_t0, p.level_center(level)), &p).unwrap().s;
            // Zero-length connectors make adjacent line ends coincide.
            let edge = frac == 0.0 || frac == 1.0;
            if p.connector_len > 0.0 || !edge {
                prop_assert!(s > last, "level {} s {} previous {}", level, s, last);
            } else {
                prop_assert!(s >= last);
            }
            last = s;
        }
    }

    #[test]
    fn decode_clamps_above(p in params_strategy(), delta in 1e-9f64..1e6) {
        prop_assert_eq!(decode(p.s_max() + delta, &p).unwrap(), decode(p.s_max(), &p).unwrap());
    }

    #[test]
    fn ideal_circuit_equivalence((p, n) in params_and_point()) {
        let c = Circuit::new(p, CircuitConfig::ideal(&p)).unwrap();
        let reading = SensorReading::new(n.v_t0 + p.t_offset, n.v_h0 + p.h_offset);
        prop_assume!(reading.validate(&p).is_ok());
        let s_circuit = c.encode(reading).unwrap();
        let norm = ajscc::mapping::remove_offset(reading, &p).unwrap();
        prop_assert!((s_circuit - encode(norm, &p).unwrap().s).abs() <= 1e-9);
    }

    #[test]
    fn staircase_monotone(v_t in 1.375f64..=3.625, tol in 0.0f64..0.2, seed in any::<u64>()) {
        let p = MappingParams::paper();
        let config = CircuitConfig { threshold_tolerance: tol, seed, ..CircuitConfig::paper(&p) };
        let c = Circuit::new(p, config).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..=600 {
            let v_h = 0.8 + 3.0 * f64::from(i) / 600.0;
            let s = c.encode(SensorReading::new(v_t, v_h.min(3.8))).unwrap();
            prop_assert!(s >= last - 1e-12, "v_h {} s {} < {}", v_h, s, last);
            last = s;
        }
    }

    #[test]
    fn regions_tile_the_axis(v_h0 in -0.5f64..3.5) {
        let p = MappingParams::paper();
        let c = Circuit::new(p, CircuitConfig::paper(&p)).unwrap();
        let bank = c.comparator_bank(v_h0);
        // Saturated levels, then at most one linear level, then off levels.
        let linear = bank.iter().filter(|&&r| r == Region::Linear).count();
        prop_assert!(linear <= 1);
        if (0.0..=3.0).contains(&v_h0) {
            prop_assert_eq!(linear, 1);
            let idx = bank.iter().position(|&r| r == Region::Linear).unwrap();
            prop_assert_eq!(idx as u32 + 1, quantize_level(v_h0, &p).unwrap());
        }
        let order = |r: &Region| match r { Region::Saturated => 0, Region::Linear => 1, Region::Off => 2 };
        prop_assert!(bank.windows(2).all(|w| order(&w[0]) <= order(&w[1])));
    }

    #[test]
    fn stage_locality(v_t0 in 0.0f64..=2.25, a in 0.4501f64..0.75, b in 0.4501f64..0.75) {
        // Both humidities fall inside level 3's linear interval (0.45, 0.75].
        let p = MappingParams::paper();
        let c = Circuit::new(p, CircuitConfig::paper(&p)).unwrap();
        let sa = c.level_states(v_t0, a);
        let sb = c.level_states(v_t0, b);
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn tolerance_determinism(tol in 0.0f64..0.5, seed in any::<u64>()) {
        let p = MappingParams::paper();
        let config = CircuitConfig { threshold_tolerance: tol, seed, ..CircuitConfig::paper(&p) };
        let a = Circuit::new(p, config).unwrap().stage_surface(2, 9, 31).unwrap();
        let b = Circuit::new(p, config).unwrap().stage_surface(2, 9, 31).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bom_totals_linear(items in prop::collection::vec(("[a-z]{1,8}", 0u64..1000, 0.0f64..1e-3, 0.0f64..100.0), 0..8)) {
        let bom: Vec<_> = items.iter().map(|(n, c, p, k)| ComponentSpec::new(n.clone(), *c, *p, *k)).collect();
        let doubled: Vec<_> = bom.iter().map(|c| ComponentSpec { count: c.count * 2, ..c.clone() }).collect();
        let (p1, p2) = (estimate_power(&bom).unwrap(), estimate_power(&doubled).unwrap());
        let (c1, c2) = (estimate_cost(&bom).unwrap(), estimate_cost(&doubled).unwrap());
        prop_assert!((p2 - 2.0 * p1).abs() <= 1e-12 * p1.max(1.0));
        prop_assert!((c2 - 2.0 * c1).abs() <= 1e-9 * c1.max(1.0));
        prop_assert_eq!(parse_bom(format_bom(&bom).as_bytes()).unwrap(), bom);
    }
}

#[test]
fn empirical_csnr_within_tolerance() {
    let p = MappingParams::paper();
    let mut rng = rng_from_seed(77);
    let sent: Vec<f64> = (0..200_000)
        .map(|_| {
            use rand::Rng;
            let n = NormalizedReading::new(
                rng.random_range(0.0..=p.t_span()),
                rng.random_range(0.0..=p.h_span()),
            );
            encode(n, &p).unwrap().s
        })
        .collect();
    let power = channel::measure_signal_power(&sent).unwrap();
    for db in [0.0, 12.5, 30.0, 45.0] {
        let sigma = channel::noise_sigma(db, power).unwrap();
        let received: Vec<f64> = sent.iter().map(|&s| channel::transmit(s, sigma, &mut rng)).collect();
        let snr = channel::measure_snr_db(&sent, &received).unwrap();
        assert!((snr - db).abs() < 0.2, "target {db} dB, measured {snr} dB");
    }
}

#[test]
fn deterministic_noise_sequence() {
    let draw = |seed| {
        let mut rng = rng_from_seed(seed);
        (0..1000).map(|i| channel::transmit(f64::from(i), 0.7, &mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}
