//! Cross-module properties against the brute-force references.

use crate::compaction::{compute_dest_indices, scatter, ReverseButterfly};
use crate::oracle::{oracle_cardinality, oracle_groupby, oracle_swag};
use crate::perf::simulate;
use crate::sorter::{sort_stream, sort_window};
use crate::{
    CompareMode, EngineError, GroupByEngine, Operator, SorterConfig, SwagConfig, SwagEngine, Tuple, Widths,
};
use alloc::vec::Vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted_stream(seed: u64, n: usize, groups: u64) -> Vec<Tuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vec<Tuple> = (0..n).map(|_| Tuple::new(rng.gen_range(0..groups), rng.gen_range(0..100))).collect();
    s.sort_unstable();
    s
}

#[test]
fn ten_thousand_tuples_every_operator() {
    let s = sorted_stream(11, 10_000, 700);
    for op in Operator::SCALAR {
        for p in [2, 4, 8, 16] {
            let got = GroupByEngine::new(p, op).unwrap().run(&s).unwrap();
            let want = oracle_groupby(&s, op, Widths::default());
            assert_eq!(got.len(), want.len(), "{op} P={p}");
            assert!(got.iter().zip(&want).all(|(g, w)| (g.group, g.value) == *w), "{op} P={p}");
        }
    }
}

#[test]
fn narrow_keys_wrap_sums() {
    let w = Widths::new(32, 8).unwrap();
    let s: Vec<Tuple> = (0..40).map(|i| Tuple::new(i / 10, 200 + i % 50)).collect();
    for op in [Operator::Sum, Operator::Average] {
        let got = GroupByEngine::with_widths(4, op, w).unwrap().run(&s).unwrap();
        let want = oracle_groupby(&s, op, w);
        assert_eq!(got.iter().map(|r| (r.group, r.value)).collect::<Vec<_>>(), want);
    }
    // a key that does not fit is refused
    let err = GroupByEngine::with_widths(4, Operator::Sum, w).unwrap().run(&[Tuple::new(0, 256)]).unwrap_err();
    assert_eq!(err, EngineError::ValueOutOfRange { position: 0 });
}

#[test]
fn structural_sorter_all_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [2usize, 4, 8] {
        for k in [8usize, 16] {
            let cfg = SorterConfig::new(k, p, CompareMode::GroupKey).unwrap();
            for ws in (1..=k * k).filter(|&w| cfg.supports(w)) {
                let groups = rng.gen_range(1..=ws as u64);
                let w: Vec<Tuple> = (0..ws).map(|_| Tuple::new(rng.gen_range(0..groups), rng.gen_range(0..8))).collect();
                let got: Vec<(Tuple, u32)> = sort_window(&w, &cfg).unwrap().iter().map(|c| (c.tuple, c.card)).collect();
                assert_eq!(got, oracle_cardinality(&w, CompareMode::GroupKey), "P={p} k={k} ws={ws}");
            }
        }
    }
}

#[test]
fn presort_then_groupby() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let s: Vec<Tuple> = (0..5000).map(|_| Tuple::new(rng.gen_range(0..300), rng.gen_range(0..50))).collect();
    let sorted = sort_stream(&s, &SorterConfig::new(16, 4, CompareMode::GroupKey).unwrap()).unwrap();
    let mut want = s.clone();
    want.sort();
    assert_eq!(sorted, want);
    let got = GroupByEngine::new(4, Operator::DistinctCount).unwrap().run(&sorted).unwrap();
    assert_eq!(got.len(), 300);
}

#[test]
fn windows_emit_groups_in_ascending_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s: Vec<Tuple> = (0..600).map(|_| Tuple::new(rng.gen_range(0..40), rng.gen_range(0..20))).collect();
    for op in [Operator::Sum, Operator::MinMedMax] {
        let out = SwagEngine::configure(SwagConfig::new(64, 16, op, 4, 16)).unwrap().run(&s).unwrap();
        for w in out.windows(2) {
            if w[0].window_id == w[1].window_id {
                assert!(w[0].group <= w[1].group);
            } else {
                assert_eq!(w[0].window_id + 1, w[1].window_id);
            }
        }
    }
}

#[test]
fn composed_window_results_follow_round_robin_ports() {
    // base carries across windows: the count of results so far, mod P
    let s: Vec<Tuple> = (0..64).map(|i| Tuple::new(i % 5, i)).collect();
    let mut e = SwagEngine::configure(SwagConfig::new(16, 8, Operator::Count, 4, 16)).unwrap();
    let out = e.run(&s).unwrap();
    assert_eq!(e.base(), out.len() % 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn routing_equals_scatter_for_any_stream_of_masks(p_exp in 1u32..5, masks in proptest::collection::vec(any::<u16>(), 1..30)) {
        let p = 1usize << p_exp;
        let net = ReverseButterfly::new(p).unwrap();
        let mut base = 0;
        for m in masks {
            let valid: Vec<bool> = (0..p).map(|i| m >> i & 1 == 1).collect();
            let values: Vec<Option<u16>> = valid.iter().enumerate().map(|(i, &v)| v.then_some(i as u16)).collect();
            let (dest, next) = compute_dest_indices(&valid, base);
            prop_assert_eq!(net.route(values.clone(), &dest, base).unwrap(), scatter(&values, &dest, base));
            base = next;
        }
    }

    #[test]
    fn groupby_output_count_is_group_count(seed in any::<u64>(), n in 0usize..3000, groups in 1u64..400, p_exp in 1u32..4) {
        let s = sorted_stream(seed, n, groups);
        let out = GroupByEngine::new(1 << p_exp, Operator::Count).unwrap().run(&s).unwrap();
        let mut g: Vec<u64> = s.iter().map(|t| t.group).collect();
        g.dedup();
        prop_assert_eq!(out.len(), g.len());
        prop_assert_eq!(out.iter().map(|r| r.value).sum::<u64>(), n as u64);
    }

    #[test]
    fn sim_rates_and_result_counts(ws_exp in 2u32..9, wa_exp in 2u32..9, op in 0usize..7, seed in any::<u64>()) {
        prop_assume!(wa_exp <= ws_exp);
        let (ws, wa) = (1usize << ws_exp, 1usize << wa_exp);
        let cfg = SwagConfig::new(ws, wa, Operator::ALL[op], 4, 16);
        prop_assume!(cfg.validate().is_ok());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<Tuple> = (0..4 * ws + 100).map(|_| Tuple::new(rng.gen_range(0..20), rng.gen_range(0..9))).collect();
        let stats = simulate(&cfg, &s).unwrap();
        prop_assert!(stats.input_rate <= 4.0);
        let want = oracle_swag(&s, ws, wa, cfg.op, true, cfg.widths).len() as u64;
        prop_assert_eq!(stats.tuples_out, want);
        // latency is a function of (P, k, WS) alone
        let tumbling = simulate(&SwagConfig { wa: ws, ..cfg }, &s).unwrap();
        prop_assert_eq!(stats.first_out_latency_cycles, tumbling.first_out_latency_cycles);
    }
}
