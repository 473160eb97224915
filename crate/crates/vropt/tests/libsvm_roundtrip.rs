use proptest::prelude::*;
use vropt::libsvm::{parse_libsvm_str, to_libsvm_string};
use vropt_core::data::{DatasetKind, SparseRow};
use vropt_core::Dataset;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -1e6..1e6f64, any::<i16>().prop_map(f64::from), 1e-300..1e-200f64]
}

fn dataset(binary: bool) -> impl Strategy<Value = Dataset> {
    (1usize..8).prop_flat_map(move |d| {
        let row = proptest::collection::vec(value(), d).prop_map(|v| SparseRow::from_dense(&v));
        let target = if binary {
            prop_oneof![Just(-1.0), Just(1.0)].boxed()
        } else {
            (-1e6..1e6f64).prop_filter("not a label", |t| ![-1.0, 0.0, 1.0].contains(t)).boxed()
        };
        proptest::collection::vec((row, target), 1..20).prop_map(move |pairs| {
            let (rows, targets): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let kind = if binary { DatasetKind::BinaryLabels } else { DatasetKind::RegressionTargets };
            Dataset::new(rows, targets, d, kind).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn regression_text_round_trips(ds in dataset(false)) {
        let back = parse_libsvm_str(&to_libsvm_string(&ds), Some(ds.dim())).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn binary_text_round_trips(ds in dataset(true)) {
        let text = to_libsvm_string(&ds);
        let back = parse_libsvm_str(&text, Some(ds.dim())).unwrap();
        prop_assert_eq!(to_libsvm_string(&back), text);
        prop_assert_eq!(back, ds);
    }
}
