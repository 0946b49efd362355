use proptest::prelude::*;

use softmodes::dataset::{read_csv, write_csv};
use softmodes::engine::assign;
use softmodes::rng::Streams;
use softmodes::{
    accuracy, hamming, round, run_softmodes, Center, CategoricalDataset, ClusteringConfig,
    CsvOptions, LabelColumn, RoundingSpec, SimplexPoint,
};

fn simplex(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(0.5), 0.0f64..1.0], 2..=max_len)
        .prop_filter("needs mass", |w| w.iter().any(|&v| v > 0.0))
        .prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
}

fn rounding() -> impl Strategy<Value = RoundingSpec> {
    prop_oneof![
        Just(RoundingSpec::Plurality),
        Just(RoundingSpec::Uniform),
        (1.0f64..50.0).prop_map(|t| RoundingSpec::Soft { t }),
    ]
}

fn dataset() -> impl Strategy<Value = CategoricalDataset> {
    (1usize..30, prop::collection::vec(1usize..5, 1..8)).prop_flat_map(|(n, arities)| {
        let row = arities.iter().map(|&a| 0..a).collect::<Vec<_>>();
        prop::collection::vec(row, n).prop_map(move |rows| {
            CategoricalDataset::from_rows(&rows)
                .unwrap()
                .with_declared_arities(&arities)
                .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn rounding_stays_on_the_simplex(x in simplex(9), spec in rounding()) {
        let y = round(&SimplexPoint::new(x).unwrap(), spec).unwrap();
        let sum: f64 = y.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(y.weights().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rounding_preserves_order(x in simplex(9), spec in rounding()) {
        let y = round(&SimplexPoint::new(x.clone()).unwrap(), spec).unwrap().into_weights();
        for i in 0..x.len() {
            for j in 0..x.len() {
                if x[i] >= x[j] {
                    prop_assert!(y[i] >= y[j]);
                }
            }
        }
    }

    #[test]
    fn rounding_commutes_with_permutation(x in simplex(9), spec in rounding(), shift in 0usize..9) {
        let len = x.len();
        let perm: Vec<usize> = (0..len).map(|i| (i + shift) % len).collect();
        let y = round(&SimplexPoint::new(x.clone()).unwrap(), spec).unwrap().into_weights();
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let py = round(&SimplexPoint::new(px).unwrap(), spec).unwrap().into_weights();
        for (a, &b) in perm.iter().enumerate() {
            prop_assert!((py[a] - y[b]).abs() <= 1e-12);
        }
    }

    #[test]
    fn rounding_keeps_zeros_at_zero(x in simplex(9), spec in rounding()) {
        let y = round(&SimplexPoint::new(x.clone()).unwrap(), spec).unwrap().into_weights();
        for (a, b) in x.iter().zip(&y) {
            if *a == 0.0 {
                prop_assert_eq!(*b, 0.0);
            }
        }
    }

    #[test]
    fn csv_round_trip(ds in dataset(), with_labels in any::<bool>()) {
        let ds = if with_labels {
            let labels = (0..ds.n()).map(|i| i % 3).collect();
            ds.with_labels(labels).unwrap()
        } else {
            ds
        };
        let mut bytes = Vec::new();
        write_csv(&ds, &mut bytes).unwrap();
        let label = if with_labels { LabelColumn::Name("label".into()) } else { LabelColumn::None };
        let back = read_csv(bytes.as_slice(), &CsvOptions { has_header: true, label }).unwrap();
        prop_assert_eq!(back.n(), ds.n());
        prop_assert_eq!(back.d(), ds.d());
        // categories are re-interned in first-seen order, so compare through the names
        let names = back.category_names().unwrap();
        for i in 0..ds.n() {
            for j in 0..ds.d() {
                let written = ds.row(i)[j].to_string();
                prop_assert_eq!(&names[j][back.row(i)[j] as usize], &written);
            }
        }
        if with_labels {
            let label_names = back.label_names().unwrap();
            for (i, &l) in back.labels().unwrap().iter().enumerate() {
                prop_assert_eq!(label_names[l].clone(), ds.labels().unwrap()[i].to_string());
            }
        }
    }

    #[test]
    fn accuracy_ignores_cluster_names(
        pairs in prop::collection::vec((0usize..5, 0usize..4), 1..80),
        shift in 1usize..5,
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let renamed: Vec<usize> = pred.iter().map(|p| (p + shift) % 5).collect();
        let a = accuracy(&pred, &truth).unwrap();
        prop_assert_eq!(a, accuracy(&renamed, &truth).unwrap());
        prop_assert_eq!(a, accuracy(&truth, &pred).unwrap());
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn assignment_is_nearest(ds in dataset(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..5), seed in any::<u64>()) {
        let centers: Vec<Center> = picks.iter().map(|p| Center::from_row(ds.row(p.index(ds.n())))).collect();
        let a = assign(&ds, &centers, &Streams::new(seed), 1).unwrap();
        for (i, &c) in a.iter().enumerate() {
            let mine = hamming(ds.row(i), centers[c].values()).unwrap();
            for other in &centers {
                prop_assert!(mine <= hamming(ds.row(i), other.values()).unwrap());
            }
        }
    }

    #[test]
    fn hamming_is_a_metric(a in prop::collection::vec(0u16..3, 6), b in prop::collection::vec(0u16..3, 6), c in prop::collection::vec(0u16..3, 6)) {
        let ab = hamming(&a, &b).unwrap();
        prop_assert_eq!(ab, hamming(&b, &a).unwrap());
        prop_assert_eq!(hamming(&a, &a).unwrap(), 0);
        prop_assert!(ab <= hamming(&a, &c).unwrap() + hamming(&c, &b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn soft_one_runs_exactly_like_uniform(ds in dataset(), k in 1usize..4, seed in any::<u64>()) {
        let k = k.min(ds.n());
        let base = ClusteringConfig::new(k).seed(seed).max_iter(20);
        let soft = run_softmodes(&ds, &base.clone().rounding(RoundingSpec::Soft { t: 1.0 })).unwrap();
        let uniform = run_softmodes(&ds, &base.rounding(RoundingSpec::Uniform)).unwrap();
        prop_assert_eq!(soft, uniform);
    }
}
