use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unate::oracle::random_function;
use unate::search::{ae_search, ae_search_bound, binary_search, binary_search_bound};
use unate::{make_oracle, FunctionSpec, Ordering, Orientation, Point, VarSet};

fn table(spec: &FunctionSpec) -> Vec<bool> {
    let ev = spec.compile().unwrap();
    (0..1u64 << spec.n).map(|k| ev.eval(&Point::from_index(spec.n, k))).collect()
}

/// Random function, point and ordered subset of `[n+1]`.
fn instance() -> impl Strategy<Value = (FunctionSpec, Point, Vec<usize>)> {
    (1usize..10, any::<u64>()).prop_flat_map(|(n, seed)| {
        let spec = random_function(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let seq = prop::sample::subsequence((1..=n + 1).collect::<Vec<_>>(), 1..=n + 1).prop_shuffle();
        (Just(spec), (0u64..1 << n).prop_map(move |k| Point::from_index(n, k)), seq)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn binary_search_finds_a_path_edge((spec, x, seq) in instance()) {
        let n = spec.n;
        let t = table(&spec);
        let pi = Ordering::from_seq(n, seq.clone()).unwrap();
        let mut h = make_oracle(&spec).unwrap();
        let got = binary_search(&mut h, &x, &pi).unwrap();
        prop_assert!(h.queries() <= binary_search_bound(seq.len()));
        let end = x.flip(pi.over()).unwrap();
        match got {
            None => prop_assert_eq!(t[x.index() as usize], t[end.index() as usize]),
            Some(e) => {
                prop_assert!(e.variable <= n && pi.over().contains(e.variable));
                prop_assert_eq!(t[e.point.index() as usize], e.value);
                prop_assert_eq!(t[e.point.flipped(e.variable).index() as usize], !e.value);
                // The edge's lower-index endpoint lies on the path.
                let on_path = (0..=seq.len()).any(|k| unate::path_point(&x, &pi, k).unwrap() == e.point);
                prop_assert!(on_path);
            }
        }
    }

    #[test]
    fn ae_search_reports_real_edges_at_x((spec, x, seq) in instance(), seed in any::<u64>()) {
        let n = spec.n;
        let t = table(&spec);
        let s = VarSet::new(n, seq.iter().copied()).unwrap();
        let mut h = make_oracle(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let got = ae_search(&mut h, &x, &s, &mut rng).unwrap();
        prop_assert!(h.queries() <= ae_search_bound(n));
        if let Some(e) = got {
            let i = e.variable();
            prop_assert!(i <= n && s.contains(i));
            let (a, b) = (t[x.index() as usize], t[x.flipped(i).index() as usize]);
            prop_assert_ne!(a, b);
            let lo_val = if x.get(i) { b } else { a };
            let expect = if lo_val { Orientation::AntiMonotone } else { Orientation::Monotone };
            prop_assert_eq!(e.orientation, expect);
        }
    }

    #[test]
    fn substitution_is_invisible_to_ignored_variables(n in 2usize..9, seed in any::<u64>(), k in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let i = 1 + pick.index(n);
        let base = table(&random_function(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap());
        let b = i - 1;
        let bits: Vec<bool> = (0..1u64 << n).map(|p| base[(p & !(1 << b)) as usize]).collect();
        let spec = FunctionSpec::from_table(n, &bits).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let pi = Ordering::random(&VarSet::full(n), &mut rng);
        let x = Point::random(n, &mut rng);
        let mut h = make_oracle(&spec).unwrap();
        let a = binary_search(&mut h, &x, &pi).unwrap();
        let c = binary_search(&mut h, &x, &pi.substitute(i).unwrap()).unwrap();
        prop_assert_eq!(a.as_ref().map(|e| (e.variable, e.value)), c.as_ref().map(|e| (e.variable, e.value)));
    }
}

#[test]
fn bound_values() {
    assert_eq!(binary_search_bound(1), 2);
    assert_eq!(binary_search_bound(2), 3);
    assert_eq!(binary_search_bound(5), 5);
    assert_eq!(binary_search_bound(8), 5);
    assert_eq!(ae_search_bound(64), 26);
    assert_eq!(ae_search_bound(2), 6);
}

#[test]
fn lone_placeholder_is_never_reported() {
    let mut h = make_oracle(&FunctionSpec::dictator(5, 2).unwrap()).unwrap();
    let s = VarSet::parse(5, "P").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = ae_search(&mut h, &Point::zeros(5), &s, &mut rng).unwrap();
    assert!(r.is_none());
}

#[test]
fn dictator_found_through_large_sets() {
    let n = 64;
    let mut hits = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = make_oracle(&FunctionSpec::dictator(n, 10).unwrap()).unwrap();
        let s = VarSet::new(n, (1..=32).chain([n + 1])).unwrap();
        let x = Point::random(n, &mut rng);
        if ae_search(&mut h, &x, &s, &mut rng).unwrap().is_some_and(|e| e.variable() == 10) {
            hits += 1;
        }
    }
    assert!(hits >= 150, "{hits}/200");
}
