use ionsps::bloch::WavepacketDensity;
use ionsps::detect::*;
use ionsps::tags::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: f64 = 200e-9;
const PERIOD: f64 = 5e-6;

fn models(p_emit: f64, dark: f64, p_multi: f64) -> (SourceModel, DetectorModel, DetectorModel) {
    (
        SourceModel {
            p_emit,
            arrival: WavepacketDensity::exponential(30e-9, 1.0, 400e-9, 1e-9).unwrap(),
            modes: ModeEfficiencies::Reflected { eta: 0.4 },
            p_multi,
        },
        DetectorModel::new(Channel::A, 0.70, dark).unwrap(),
        DetectorModel::new(Channel::B, 0.73, dark).unwrap(),
    )
}

fn cfg(n_triggers: u64, seed: u64) -> RunConfig {
    RunConfig { configuration: Configuration::Reflected, period: PERIOD, window: WINDOW, n_triggers, seed }
}

fn simulated(p_emit: f64, dark: f64, n: u64, seed: u64) -> TagStream {
    let (s, a, b) = models(p_emit, dark, 0.0);
    simulate_run(&s, &a, &b, &cfg(n, seed)).unwrap()
}

fn arb_stream() -> impl Strategy<Value = TagStream> {
    prop::collection::vec((0u8..3, 0u64..1 << 40), 0..200).prop_map(|mut v| {
        v.sort_by_key(|e| e.1);
        TagStream::new(v.into_iter().map(|(c, t)| Tag::new(Channel::from_code(c).unwrap(), t)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn ttag_round_trip_is_bit_exact(s in arb_stream()) {
        let bytes = to_ttag_bytes(&s);
        let back = parse_tags(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(to_ttag_bytes(&back), bytes);
    }

    #[test]
    fn histogram_total_equals_qualifying_pairs(s in arb_stream(), lo in -2_000_000i64..0, span in 1i64..4_000_000, width in 1u64..50_000) {
        let h = g2_histogram(&s, lo, lo + span, width, None).unwrap();
        let a = s.times(Channel::A);
        let b = s.times(Channel::B);
        let brute = a.iter().flat_map(|&ta| b.iter().map(move |&tb| tb as i64 - ta as i64)).filter(|d| *d >= lo && *d < lo + span).count();
        prop_assert_eq!(h.total() as usize, brute);
    }
}

#[test]
fn fuzzed_files_give_structured_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let base = to_ttag_bytes(&simulated(0.5, 1e5, 2000, 1));
    let mut rejected = 0;
    for i in 0..10_000 {
        let mut bytes = base.clone();
        match i % 4 {
            0 => bytes.truncate(rng.random_range(0..bytes.len())),
            1 => {
                for _ in 0..rng.random_range(1..8) {
                    let k = rng.random_range(0..bytes.len());
                    bytes[k] ^= 1 << rng.random_range(0..8);
                }
            }
            2 => bytes = (0..rng.random_range(0..200)).map(|_| rng.random()).collect(),
            _ => {
                bytes.truncate(rng.random_range(16..bytes.len()));
                bytes.extend((0..rng.random_range(1..40)).map(|_| rng.random::<u8>()));
            }
        }
        let outcome = std::panic::catch_unwind(|| parse_tags(&bytes));
        match outcome.expect("parser panicked") {
            Ok(s) => assert_eq!(to_ttag_bytes(&s), bytes, "accepted input must re-encode exactly"),
            Err(ionsps::Error::Format { .. } | ionsps::Error::Unsorted { .. }) => rejected += 1,
            Err(e) => panic!("unexpected error kind {e}"),
        }
    }
    assert!(rejected > 9000);
}

#[test]
fn empty_file_parses_to_empty_stream() {
    assert!(parse_tags(&to_ttag_bytes(&TagStream::default())).unwrap().is_empty());
}

#[test]
fn window_statistics_ignore_a_common_time_shift() {
    let s = simulated(0.3, 1e5, 50_000, 3);
    let a = window_statistics(&s, WINDOW).unwrap();
    let b = window_statistics(&s.shifted(123_456_789_000).unwrap(), WINDOW).unwrap();
    assert_eq!(a, b);
}

#[test]
fn disjoint_streams_add() {
    let first = simulated(0.3, 1e5, 40_000, 4);
    let offset = first.tags().last().unwrap().time_ps + 1_000_000;
    let second = simulated(0.3, 1e5, 30_000, 5).shifted(offset).unwrap();
    let mut merged = first.clone();
    merged.append(&second).unwrap();
    let sum = window_statistics(&first, WINDOW).unwrap().counts + window_statistics(&second, WINDOW).unwrap().counts;
    assert_eq!(window_statistics(&merged, WINDOW).unwrap().counts, sum);
}

#[test]
fn parallel_and_sequential_analysis_agree() {
    let s = simulated(0.3, 1e5, 200_000, 6);
    let seq = window_statistics_with(&s, WINDOW, ionsps::par::Exec::Sequential).unwrap();
    assert_eq!(window_statistics_with(&s, WINDOW, ionsps::par::Exec::Workers(4)).unwrap(), seq);
    let h1 = g2_histogram_with(&s, -20_000_000, 20_000_000, 100_000, None, ionsps::par::Exec::Sequential).unwrap();
    let h2 = g2_histogram_with(&s, -20_000_000, 20_000_000, 100_000, None, ionsps::par::Exec::Workers(3)).unwrap();
    assert_eq!(h1, h2);
}

#[test]
fn simulated_statistics_match_the_analytic_model() {
    let (src, a, b) = models(0.3, 5e4, 0.1);
    let c = cfg(1_000_000, 7);
    let st = window_statistics(&simulate_run(&src, &a, &b, &c).unwrap(), WINDOW).unwrap();
    let p = analytic_click_probs(&src, &a, &b, &c).unwrap();
    let n = c.n_triggers as f64;
    assert!((st.ps.value - p.ps).abs() < 4.0 * (p.ps * (1.0 - p.ps) / n).sqrt());
    assert!((st.pc.value - p.pc).abs() < 4.0 * (p.pc * (1.0 - p.pc) / n).sqrt());
    assert!(st.ps.lower < st.ps.value && st.ps.value < st.ps.upper);
}

#[test]
fn dark_counts_alone_are_poissonian() {
    // both the pulsed g²(0) and α of independent backgrounds are 1
    let st = window_statistics(&simulated(0.0, 2e5, 2_000_000, 8), WINDOW).unwrap();
    for r in [st.alpha.unwrap(), st.g2_zero.unwrap()] {
        assert!((r.value - 1.0).abs() < 3.0 * r.sigma, "{r:?}");
    }
}

#[test]
fn uncorrelated_continuous_streams_have_flat_g2() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let duration: u64 = 10_000_000_000_000;
    let mut tags = Vec::new();
    for ch in [Channel::A, Channel::B] {
        for _ in 0..40_000 {
            tags.push(Tag::new(ch, rng.random_range(0..duration)));
        }
    }
    let s = TagStream::from_unsorted(tags);
    let h = g2_histogram(&s, -50_000_000_000, 50_000_000_000, 5_000_000_000, None).unwrap();
    let g = h.cw_normalized(duration);
    for (k, v) in g.iter().enumerate() {
        let sigma = 1.0 / (h.counts[k] as f64).sqrt();
        assert!((v - 1.0).abs() < 4.0 * sigma + 0.02, "bin {k}: {v}");
    }
}

#[test]
fn single_photons_suppress_the_central_pulse() {
    let s = simulated(1.0, 1.0, 300_000, 10);
    let period_ps = cfg(1, 0).period_ps();
    let gate = Gate { offset_ps: 0, length_ps: 200_000 };
    let h = g2_histogram(&s, -(5 * period_ps as i64 + period_ps as i64 / 2), 5 * period_ps as i64 + period_ps as i64 / 2, 4_000, Some(gate)).unwrap();
    let areas = h.pulse_areas(period_ps, 200_000);
    assert_eq!(areas.len(), 11);
    assert!(areas.iter().filter(|a| a.0 != 0).all(|a| a.1 > 1000));
    let ratio = h.central_to_side_ratio(period_ps, 200_000).unwrap();
    assert!(ratio < 0.05, "{ratio}");
    assert!(h.pulsed_g2_zero(period_ps, 200_000).unwrap() < 0.05);
}
