//! Property tests and independent oracles for the core pipeline.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use pivot_core::analysis::{fightin_words, mann_whitney, run_batch, u_complement, Backends, BatchConfig};
use pivot_core::backends::{CachedForecaster, CachedSimulator, DiskCache, FnForecaster, Forecaster, RetryPolicy, SimulatorParams};
use pivot_core::conversation::{
    flatten_turns, merge_turns, pair_by_length, parse_corpus, truncate_ending, write_corpus, Conversation, Outcome,
    Role, Utterance,
};
use pivot_core::measures::{calibrate, compute_piv, discretize, nearest_rank, piv_from_probs, PivLabel};
use pivot_core::synthetic::{
    exact_piv, generate_corpus, oracle_forecast, EnumerateSimulator, MovePolicy, OracleForecaster, WorldParams,
    WorldSimulator,
};
use proptest::prelude::*;

fn conversation(id: String, roles: &[bool], outcome: Outcome) -> Conversation {
    Conversation {
        id,
        outcome,
        utterances: roles
            .iter()
            .enumerate()
            .map(|(i, &seeker)| {
                let role = if seeker { Role::Seeker } else { Role::Responder };
                Utterance::new(role.as_str(), role, format!("message {i}"), 1_000 * i as u64)
            })
            .collect(),
        metadata: BTreeMap::new(),
    }
}

fn roles() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 1..30)
}

/// Minimum total length gap over all injective matchings of the smaller side.
fn brute_min_gap(a: &[usize], b: &[usize]) -> usize {
    fn go(a: &[usize], b: &[usize], used: &mut Vec<bool>) -> usize {
        let Some((&first, rest)) = a.split_first() else {
            return 0;
        };
        let mut best = usize::MAX;
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(first.abs_diff(b[j]) + go(rest, b, used));
                used[j] = false;
            }
        }
        best
    }
    if a.len() <= b.len() {
        go(a, b, &mut vec![false; b.len()])
    } else {
        go(b, a, &mut vec![false; a.len()])
    }
}

fn sized(prefix: &str, lengths: &[usize], outcome: Outcome) -> Vec<Conversation> {
    lengths
        .iter()
        .enumerate()
        .map(|(i, &n)| conversation(format!("{prefix}{i}"), &vec![true; n], outcome))
        .collect()
}

proptest! {
    #[test]
    fn merge_then_flatten_is_identity(r in roles()) {
        let c = conversation("c".into(), &r, Outcome::Unknown);
        let turns = merge_turns(&c).unwrap();
        prop_assert_eq!(flatten_turns(&turns), c.utterances.clone());
        for (i, pair) in turns.windows(2).enumerate() {
            prop_assert_ne!(pair[0].role, pair[1].role, "turns {} and {} share a role", i, i + 1);
        }
        prop_assert!(turns.iter().enumerate().all(|(i, t)| t.index == i));
    }

    #[test]
    fn truncation_composes(r in roles(), a in 0usize..5, b in 0usize..5) {
        let c = conversation("c".into(), &r, Outcome::Unknown);
        let n = merge_turns(&c).unwrap().len();
        let once = truncate_ending(&c, a + b);
        let twice = truncate_ending(&c, a).and_then(|x| truncate_ending(&x, b));
        if a + b < n {
            prop_assert_eq!(once.unwrap(), twice.unwrap());
        } else {
            prop_assert!(once.is_err());
        }
    }

    #[test]
    fn corpus_round_trips(rs in prop::collection::vec(roles(), 1..6)) {
        let corpus: Vec<_> = rs
            .iter()
            .enumerate()
            .map(|(i, r)| conversation(format!("c{i}"), r, if i % 2 == 0 { Outcome::Success } else { Outcome::Disengaged }))
            .collect();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        prop_assert_eq!(parse_corpus(buf.as_slice()).unwrap(), corpus);
    }

    #[test]
    fn pairing_is_optimal(a in prop::collection::vec(1usize..15, 1..6), b in prop::collection::vec(1usize..15, 1..6)) {
        let succ = sized("s", &a, Outcome::Success);
        let fail = sized("f", &b, Outcome::Disengaged);
        let pairs = pair_by_length(&succ, &fail).unwrap();
        prop_assert_eq!(pairs.len(), a.len().min(b.len()));
        let gap: usize = pairs.iter().map(|(s, f)| s.utterances.len().abs_diff(f.utterances.len())).sum();
        prop_assert_eq!(gap, brute_min_gap(&a, &b));
        let mut seen = std::collections::HashSet::new();
        for (s, f) in &pairs {
            prop_assert_eq!(s.outcome, Outcome::Success);
            prop_assert_eq!(f.outcome, Outcome::Disengaged);
            prop_assert!(seen.insert(s.id.clone()) && seen.insert(f.id.clone()));
        }
    }

    #[test]
    fn u_statistics_sum_to_product(a in prop::collection::vec(0u8..8, 1..15), b in prop::collection::vec(0u8..8, 1..15)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let ab = mann_whitney(&a, &b).unwrap();
        let ba = mann_whitney(&b, &a).unwrap();
        prop_assert!((ab.statistic + u_complement(&ab) - (a.len() * b.len()) as f64).abs() < 1e-9);
        prop_assert!((ba.statistic - u_complement(&ab)).abs() < 1e-9);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn labels_are_monotone(mut scores in prop::collection::vec(0.0f64..0.25, 10..60), lo in 1.0f64..49.0, hi in 51.0f64..99.0) {
        let t = calibrate(&scores, lo, hi).unwrap();
        scores.sort_by(f64::total_cmp);
        prop_assert_eq!(t.low_cut, nearest_rank(&scores, lo));
        let labels: Vec<PivLabel> = scores.iter().map(|s| discretize(*s, &t)).collect();
        prop_assert!(labels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn piv_matches_two_pass_variance(probs in prop::collection::vec(0.0f64..=1.0, 2..40)) {
        let n = probs.len() as f64;
        let mean = probs.iter().sum::<f64>() / n;
        let oracle = probs.iter().map(|p| p * p).sum::<f64>() / n - mean * mean;
        prop_assert!((piv_from_probs(&probs).unwrap() - oracle.max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn fightin_is_antisymmetric(a in prop::collection::vec("[a-d ]{1,12}", 1..4), b in prop::collection::vec("[a-d ]{1,12}", 1..4)) {
        let has_word = |v: &[String]| v.iter().any(|s| s.chars().any(|c| c.is_alphanumeric()));
        prop_assume!(has_word(&a) && has_word(&b));
        let ab: BTreeMap<String, f64> = fightin_words(&a, &b, 500.0).unwrap().into_iter().map(|t| (t.term, t.z)).collect();
        let ba: BTreeMap<String, f64> = fightin_words(&b, &a, 500.0).unwrap().into_iter().map(|t| (t.term, t.z)).collect();
        prop_assert_eq!(ab.len(), ba.len());
        for (term, z) in &ab {
            prop_assert!((z + ba[term]).abs() < 1e-9, "{}: {} vs {}", term, z, ba[term]);
        }
    }

    #[test]
    fn oracle_is_strictly_inside_unit_interval(seed in 0u64..500) {
        let params = WorldParams::default();
        let corpus = generate_corpus(seed, &params, 2, 12).unwrap();
        for c in &corpus.conversations {
            let turns = merge_turns(c).unwrap();
            for k in 1..=turns.len() {
                let p = oracle_forecast(&turns[..k], &params).unwrap();
                prop_assert!(p > 0.0 && p < 1.0);
                prop_assert!(exact_piv(&turns[..k], &params).unwrap() <= 0.25);
            }
        }
    }
}

#[test]
fn generation_is_deterministic_and_bounded() {
    let params = WorldParams::default();
    let a = generate_corpus(7, &params, 200, 12).unwrap();
    let b = generate_corpus(7, &params, 200, 12).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_corpus(&mut x, &a.conversations).unwrap();
    write_corpus(&mut y, &b.conversations).unwrap();
    assert_eq!(x, y);
    assert_eq!(a.annotations, b.annotations);
    assert_eq!(a.conversations.len(), 200);
    assert!(a.conversations.iter().all(|c| merge_turns(c).unwrap().len() <= 12));
    assert!(a.annotations.iter().any(|x| x.planted));
}

#[test]
fn widening_move_spread_does_not_lower_exact_piv() {
    // Near p = 0.5 the logistic is close to linear, so spreading weights spreads outcomes.
    let base = WorldParams {
        theta1: 0.1,
        ..WorldParams::default()
    };
    let context = merge_turns(&Conversation {
        id: "w".into(),
        outcome: Outcome::Unknown,
        utterances: vec![Utterance::new("s", Role::Seeker, "up", 0)],
        metadata: BTreeMap::new(),
    })
    .unwrap();
    let mean = base.moves.iter().map(|m| m.weight).sum::<f64>() / base.moves.len() as f64;
    let mut previous = exact_piv(&context, &base).unwrap();
    for c in [1.1, 1.25, 1.5] {
        let mut wider = base.clone();
        for m in &mut wider.moves {
            m.weight = mean + c * (m.weight - mean) * 0.3;
        }
        let mut narrower = wider.clone();
        for m in &mut narrower.moves {
            m.weight = mean + (m.weight - mean) / c;
        }
        let (w, n) = (exact_piv(&context, &wider).unwrap(), exact_piv(&context, &narrower).unwrap());
        assert!(w >= n, "c={c}: {w} < {n}");
        previous = previous.max(w);
    }
    assert!(previous > 0.0);
}

#[test]
fn table_world_examples() {
    let params = WorldParams::probability_table(&[("a", 0.2), ("b", 0.4), ("c", 0.6), ("d", 0.8)], 0.5);
    let context = merge_turns(&conversation("t".into(), &[true], Outcome::Unknown)).unwrap();
    assert!((exact_piv(&context, &params).unwrap() - 0.05).abs() < 1e-15);
    let moment = pivot_core::conversation::extract_moments("t", &context).remove(0);
    let score = compute_piv(
        &moment,
        &EnumerateSimulator::new(&params),
        &OracleForecaster::new(params.clone()),
        &params.enumerate_params(),
        &RetryPolicy::immediate(),
    )
    .unwrap();
    assert!((score.value - 0.05).abs() < 1e-15);
}

struct Counting<F> {
    inner: F,
    calls: Arc<AtomicUsize>,
}

impl<F: Forecaster> Forecaster for Counting<F> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn predict(&self, context: &[pivot_core::Turn]) -> Result<f64, pivot_core::BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.predict(context)
    }
}

#[test]
fn cached_batch_matches_uncached_and_replays_from_disk() {
    let params = WorldParams::default();
    let corpus = generate_corpus(11, &params, 25, 10).unwrap().conversations;
    let config = BatchConfig {
        params: SimulatorParams {
            seed: Some(3),
            ..SimulatorParams::default()
        },
        retry: RetryPolicy::immediate(),
        ..BatchConfig::default()
    };
    let plain = Backends {
        simulator: Arc::new(WorldSimulator::new(&params, MovePolicy::Uniform)),
        forecaster: Arc::new(OracleForecaster::new(params.clone())),
        embedder: None,
    };
    let expected = run_batch(&corpus, &plain, &config).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    let cached = |calls: Arc<AtomicUsize>| {
        let cache = Arc::new(DiskCache::open(dir.path()).unwrap());
        let oracle = OracleForecaster::new(params.clone());
        let inner = FnForecaster::new("oracle", move |ctx| oracle.predict(ctx));
        Backends {
            simulator: Arc::new(CachedSimulator::new(WorldSimulator::new(&params, MovePolicy::Uniform), cache.clone())),
            forecaster: Arc::new(CachedForecaster::new(Counting { inner, calls }, cache)),
            embedder: None,
        }
    };
    let first = run_batch(&corpus, &cached(calls.clone()), &config).unwrap();
    assert_eq!(first.records, expected.records);
    assert!(calls.load(Ordering::SeqCst) > 0);

    let replay_calls = Arc::new(AtomicUsize::new(0));
    let second = run_batch(&corpus, &cached(replay_calls.clone()), &config).unwrap();
    assert_eq!(second.records, expected.records);
    assert_eq!(replay_calls.load(Ordering::SeqCst), 0);
}
