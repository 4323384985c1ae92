mod props;

use proptest::prelude::*;

/// States and rank with `rank >= b`, so that the random block train has
/// room for `b` orthonormal states at every site.
fn block_shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3).prop_flat_map(|b| (Just(b), b..=4))
}

fn shape() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (prop::collection::vec(2usize..=3, 2..=5)).prop_flat_map(|modes| {
        let d = modes.len();
        (Just(modes), 0..d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn shift_center_orthogonalizes((modes, p) in shape(), rank in 1usize..=5, seed in any::<u64>()) {
        let (gram, change) = props::shift_center_defect(&modes, rank, p, seed);
        prop_assert!(gram < 1e-12, "gram defect {gram:e}");
        prop_assert!(change < 1e-12, "vector changed by {change:e}");
    }

    #[test]
    fn frame_is_orthonormal((modes, p) in shape(), (b, rank) in block_shape(), seed in any::<u64>()) {
        let defect = props::frame_defect(&modes, b, rank, p, seed);
        prop_assert!(defect < 1e-11, "frame defect {defect:e}");
    }

    #[test]
    fn rounding_respects_the_bound(modes in prop::collection::vec(2usize..=4, 2..=5), rank in 1usize..=6,
                                   eps in prop::sample::select(vec![1e-1, 1e-2, 1e-4, 1e-8]), seed in any::<u64>()) {
        let ratio = props::round_ratio(&modes, rank, eps, seed);
        prop_assert!(ratio <= 1.0 + 1e-10, "error is {ratio} times the bound");
    }

    #[test]
    fn exact_block_moves_preserve_states((modes, to) in shape(), (b, rank) in block_shape(), seed in any::<u64>()) {
        let defect = props::block_move_defect(&modes, b, rank, to, seed);
        prop_assert!(defect < 1e-12, "states changed by {defect:e}");
    }

    #[test]
    fn local_matvec_matches_projection((modes, p) in shape(), op_rank in 1usize..=3, rank in 1usize..=4, seed in any::<u64>()) {
        let defect = props::local_matvec_defect(&modes, op_rank, rank, p, seed);
        prop_assert!(defect < 1e-11, "projection differs by {defect:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn deflation_states_are_orthogonal(modes in prop::collection::vec(2usize..=3, 3..=4), b in 2usize..=4, seed in any::<u64>()) {
        let overlap = props::deflation_overlap(&modes, b, seed);
        prop_assert!(overlap < 1e-8, "overlap {overlap:e}");
    }
}
