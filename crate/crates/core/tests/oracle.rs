use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unate::oracle::{probe_edge, random_function, random_monotone};
use unate::{
    classify_edge, make_oracle, verify_certificate, EdgeClass, EdgeFinding, Error, Family, FunctionSpec, Orientation,
    Point, ViolationCertificate,
};

fn table(spec: &FunctionSpec) -> Vec<bool> {
    let ev = spec.compile().unwrap();
    (0..1u64 << spec.n).map(|k| ev.eval(&Point::from_index(spec.n, k))).collect()
}

fn spec_strategy() -> impl Strategy<Value = FunctionSpec> {
    (2usize..9).prop_flat_map(|n| {
        let var = 1..=n;
        prop_oneof![
            any::<bool>().prop_map(move |v| FunctionSpec::constant(n, v)),
            var.clone().prop_map(move |i| FunctionSpec::dictator(n, i).unwrap()),
            var.clone().prop_map(move |i| FunctionSpec::anti_dictator(n, i).unwrap()),
            prop::sample::subsequence((1..=n).collect::<Vec<_>>(), 1..=n)
                .prop_map(move |v| FunctionSpec::parity(n, v).unwrap()),
            prop::collection::vec(0.0f64..3.0, n).prop_map(|w| {
                let t = w.iter().sum::<f64>() / 2.0;
                FunctionSpec::threshold(w, t).unwrap()
            }),
            any::<u64>().prop_map(move |s| random_function(n, &mut ChaCha8Rng::seed_from_u64(s)).unwrap()),
        ]
    })
}

proptest! {
    #[test]
    fn json_round_trip(spec in spec_strategy()) {
        let back = FunctionSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(table(&back), table(&spec));
        prop_assert_eq!(back.label(), spec.label());
    }

    #[test]
    fn table_file_round_trip(spec in spec_strategy()) {
        let text = spec.to_table_file().unwrap();
        let back = FunctionSpec::from_table_file(&text).unwrap();
        prop_assert_eq!(table(&back), table(&spec));
    }

    #[test]
    fn shift_composes(spec in spec_strategy(), bits in any::<u64>()) {
        let n = spec.n;
        let a = Point::from_index(n, bits & ((1 << n) - 1));
        let shifted = FunctionSpec::xor_shift(spec.clone(), &a).unwrap();
        let (f, g) = (table(&spec), table(&shifted));
        for k in 0..1u64 << n {
            prop_assert_eq!(g[k as usize], f[(k ^ a.index()) as usize]);
        }
    }

    #[test]
    fn counter_counts_every_query(spec in spec_strategy(), picks in prop::collection::vec(any::<u64>(), 0..40)) {
        let mut h = make_oracle(&spec).unwrap();
        let t = table(&spec);
        for (k, p) in picks.iter().enumerate() {
            let idx = p & ((1 << spec.n) - 1);
            prop_assert_eq!(h.query(&Point::from_index(spec.n, idx)).unwrap(), t[idx as usize]);
            prop_assert_eq!(h.queries(), k as u64 + 1);
        }
    }

    #[test]
    fn random_monotone_is_monotone(n in 1usize..10, seed in any::<u64>()) {
        let t = table(&random_monotone(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap());
        for k in 0..1usize << n {
            for b in 0..n {
                if k >> b & 1 == 0 {
                    prop_assert!(!t[k] || t[k | 1 << b]);
                }
            }
        }
    }

    #[test]
    fn classification_matches_table(spec in spec_strategy(), idx in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let n = spec.n;
        let t = table(&spec);
        let x = Point::from_index(n, idx & ((1 << n) - 1));
        let i = 1 + pick.index(n);
        let lo = x.index() & !(1 << (i - 1));
        let expect = match (t[lo as usize], t[(lo | 1 << (i - 1)) as usize]) {
            (false, true) => EdgeClass::Monotone,
            (true, false) => EdgeClass::AntiMonotone,
            _ => EdgeClass::NonBichromatic,
        };
        let mut h = make_oracle(&spec).unwrap();
        prop_assert_eq!(classify_edge(&mut h, &x, i).unwrap(), expect);
        prop_assert_eq!(h.queries(), 2);
    }
}

#[test]
fn budget_blocks_without_counting() {
    let mut h = make_oracle(&FunctionSpec::dictator(3, 1).unwrap()).unwrap();
    let x = Point::zeros(3);
    let r = h.limited(2, |h| {
        h.query(&x)?;
        h.query(&x)?;
        h.query(&x)
    });
    assert_eq!(r, Err(Error::BudgetExhausted));
    assert_eq!(h.queries(), 2);
    // Nested limits never extend an outer one.
    let r = h.limited(1, |h| h.limited(10, |h| {
        h.query(&x)?;
        h.query(&x)
    }));
    assert_eq!(r, Err(Error::BudgetExhausted));
    assert_eq!(h.queries(), 3);
    assert_eq!(h.limit(), None);
}

#[test]
fn negation_flips_values() {
    let h = make_oracle(&FunctionSpec::dictator(4, 2).unwrap()).unwrap();
    let mut g = h.negated();
    assert_eq!(g.queries(), 0);
    assert!(g.query(&Point::zeros(4)).unwrap());
    assert!(!g.query(&Point::parse("0100").unwrap()).unwrap());
}

#[test]
fn transcripts_record_queries() {
    let mut h = make_oracle(&FunctionSpec::parity(3, vec![1, 3]).unwrap()).unwrap().with_transcript();
    h.query(&Point::parse("100").unwrap()).unwrap();
    h.query(&Point::parse("101").unwrap()).unwrap();
    let t = h.transcript().unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t[0].0.to_string(), "100");
    assert!(t[0].1);
    assert!(!t[1].1);
}

#[test]
fn certificates_are_checked_against_the_function() {
    let spec = FunctionSpec::parity(2, vec![1, 2]).unwrap();
    let mut h = make_oracle(&spec).unwrap();
    let up = probe_edge(&mut h, &Point::parse("00").unwrap(), 1).unwrap().unwrap();
    let down = probe_edge(&mut h, &Point::parse("01").unwrap(), 1).unwrap().unwrap();
    assert_eq!(up.orientation, Orientation::Monotone);
    assert_eq!(down.orientation, Orientation::AntiMonotone);
    let c = ViolationCertificate::from_pair(&up, &down).unwrap();
    let mut fresh = h.fresh();
    assert!(verify_certificate(&mut fresh, &c).unwrap());
    assert!(fresh.queries() <= 4);
    // The same certificate fails against a unate function.
    let mut other = make_oracle(&FunctionSpec::dictator(2, 1).unwrap()).unwrap();
    assert!(!verify_certificate(&mut other, &c).unwrap());
    // Same orientation twice is not a certificate.
    assert!(ViolationCertificate::from_pair(&up, &up).is_none());
}

#[test]
fn findings_need_a_bichromatic_pair() {
    let x = Point::zeros(3);
    assert!(EdgeFinding::from_values(&x, 2, true, true).is_none());
    let e = EdgeFinding::from_values(&x, 2, true, false).unwrap();
    assert_eq!(e.orientation, Orientation::AntiMonotone);
    assert_eq!(e.variable(), 2);
}

#[test]
fn malformed_specs_are_rejected() {
    assert!(FunctionSpec::dictator(3, 4).is_err());
    assert!(FunctionSpec::parity(3, vec![1, 1]).is_err());
    assert!(FunctionSpec::majority(4, vec![1, 2]).is_err());
    assert!(FunctionSpec::from_json(r#"{"family":"dictator","params":{"i":9},"n":3}"#).is_err());
    assert!(FunctionSpec::from_json("not json").is_err());
    assert!(FunctionSpec::from_table_file("n=2\n011").is_err());
    assert!(FunctionSpec::new(2, Family::TruthTable { bits: "01x0".into() }).is_err());
}
