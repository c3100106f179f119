use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unate::exact::{self, TruthTable};
use unate::oracle::random_function;
use unate::persistence::{
    check_persistence, check_persistence_bound, preprocess, preprocess_bound, sample_d_conditioned, sample_h,
    sample_h_conditioned, PreprocessParams,
};
use unate::{make_oracle, FunctionSpec, Ordering, Point, VarSet};

fn small_params() -> PreprocessParams {
    PreprocessParams { xi: 0.5, round_multiplier: 1.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn preprocessing_only_removes_exposed_variables(n in 2usize..9, fseed in any::<u64>(), seed in any::<u64>()) {
        let spec = random_function(n, &mut ChaCha8Rng::seed_from_u64(fseed)).unwrap();
        let tt = TruthTable::from_spec(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = Ordering::random(&VarSet::new(n, 1..=n + 1).unwrap(), &mut rng);
        let mut h = make_oracle(&spec).unwrap();
        let p = small_params();
        let out = preprocess(&mut h, &pi, &p, &mut rng).unwrap();
        prop_assert!(h.queries() <= preprocess_bound(n, n + 1, &p));
        prop_assert!(out.survivors.is_subset(&out.initial));
        prop_assert_eq!(out.survivors.len() + out.removals.len(), out.initial.len());
        prop_assert_eq!(&out.ordering, &pi.restrict(&out.survivors).unwrap());
        prop_assert!(out.survivors.has_placeholder());
        for e in &out.removals {
            prop_assert!(e.variable <= n);
            prop_assert!(!out.survivors.contains(e.variable));
            prop_assert_eq!(tt.eval(&e.point), e.value);
            prop_assert_eq!(tt.eval(&e.point.flipped(e.variable)), !e.value);
        }
    }

    #[test]
    fn runs_on_s_and_its_substitute_stay_aligned(n in 3usize..9, fseed in any::<u64>(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        // With f ignoring i, the two runs see the same query answers.
        let i = 1 + pick.index(n);
        let base = random_function(n, &mut ChaCha8Rng::seed_from_u64(fseed)).unwrap();
        let ev = base.compile().unwrap();
        let bits: Vec<bool> = (0..1u64 << n).map(|k| {
            let mut x = Point::from_index(n, k);
            x.set(i, false);
            ev.eval(&x)
        }).collect();
        let spec = FunctionSpec::from_table(n, &bits).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = Ordering::random(&VarSet::full(n), &mut rng);
        let sub = pi.substitute(i).unwrap();
        let p = small_params();
        let a = preprocess(&mut make_oracle(&spec).unwrap(), &pi, &p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = preprocess(&mut make_oracle(&spec).unwrap(), &sub, &p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let va: Vec<usize> = a.removals.iter().map(|e| e.variable).collect();
        let vb: Vec<usize> = b.removals.iter().map(|e| e.variable).collect();
        prop_assert_eq!(va, vb);
        prop_assert_eq!(a.survivors.sub(i).unwrap(), b.survivors);
    }
}

#[test]
fn conditioned_samplers_respect_membership() {
    let spec = FunctionSpec::constant(10, false);
    let mut h = make_oracle(&spec).unwrap();
    let p = small_params();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = sample_d_conditioned(&mut h, &p, 4, 7, &mut rng).unwrap();
        assert!(d.initial.contains(7) && d.initial.len() == 4 && !d.initial.has_placeholder());
        let hs = sample_h(&mut h, &p, 5, &mut rng).unwrap();
        assert!(hs.initial.has_placeholder() && hs.initial.len() == 5);
        let hc = sample_h_conditioned(&mut h, &p, 5, 3, &mut rng).unwrap();
        assert!(hc.initial.has_placeholder() && !hc.initial.contains(3) && hc.initial.len() == 5);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_h(&mut h, &p, 12, &mut rng).is_err());
    assert!(sample_d_conditioned(&mut h, &p, 4, 11, &mut rng).is_err());
}

#[test]
fn single_check_respects_its_bound() {
    let spec = FunctionSpec::parity(8, vec![1, 2, 3, 4]).unwrap();
    let p = PreprocessParams::new(0.25).unwrap();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = make_oracle(&spec).unwrap();
        let pi = Ordering::random(&VarSet::full(8), &mut rng);
        let hit = check_persistence(&mut h, &pi, &p, &mut rng).unwrap();
        assert!(h.queries() <= check_persistence_bound(8, 8, &p));
        assert!(hit.is_some_and(|e| e.variable <= 4));
    }
}

#[test]
fn survivors_are_mostly_persistent() {
    let spec = FunctionSpec::majority(7, (1..=7).collect()).unwrap();
    let tt = TruthTable::from_spec(&spec).unwrap();
    let p = PreprocessParams::new(0.5).unwrap();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = make_oracle(&spec).unwrap();
        let pi = Ordering::random(&VarSet::full(7), &mut rng);
        let out = preprocess(&mut h, &pi, &p, &mut rng).unwrap();
        let frac = exact::persistent_fraction(&tt, &out.survivors).unwrap();
        assert!(frac >= num_rational::Ratio::new(1, 2), "seed {seed}: {frac}");
    }
}
