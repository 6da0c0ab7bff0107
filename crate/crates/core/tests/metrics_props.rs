use phaseswap::metrics::{dsc, BinaryMask, DEFAULT_EPSILON};
use proptest::prelude::*;

fn mask_strategy(n: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), n)
}

proptest! {
    #[test]
    fn symmetric(a in mask_strategy(64), b in mask_strategy(64)) {
        let (a, b) = (BinaryMask::new(8, 8, a).unwrap(), BinaryMask::new(8, 8, b).unwrap());
        prop_assert_eq!(dsc(&a, &b, DEFAULT_EPSILON).unwrap(), dsc(&b, &a, DEFAULT_EPSILON).unwrap());
    }

    #[test]
    fn self_overlap_is_one(a in mask_strategy(64)) {
        let a = BinaryMask::new(8, 8, a).unwrap();
        prop_assert_eq!(dsc(&a, &a, DEFAULT_EPSILON).unwrap(), 1.0);
    }

    #[test]
    fn in_unit_interval(a in mask_strategy(64), b in mask_strategy(64)) {
        let v = dsc(&BinaryMask::new(8, 8, a).unwrap(), &BinaryMask::new(8, 8, b).unwrap(), DEFAULT_EPSILON).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    /// Sliding a fixed-size block toward another fixed-size block: sizes
    /// stay constant, overlap grows, DSC never drops.
    #[test]
    fn monotone_in_overlap(len in 1usize..40, n in 40usize..100) {
        let fixed = BinaryMask::new(n, 1, (0..n).map(|i| i < len).collect()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for shift in (0..=n - len).rev() {
            let moving = BinaryMask::new(n, 1, (0..n).map(|i| (shift..shift + len).contains(&i)).collect()).unwrap();
            let v = dsc(&fixed, &moving, DEFAULT_EPSILON).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
        prop_assert_eq!(prev, 1.0);
    }
}
