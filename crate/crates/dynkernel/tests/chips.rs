mod common;

use common::{picky, random_op};
use dynkernel::chips::{ChipIndex, ChipParams, Oracle};
use dynkernel::hypergraph::{EdgeId, VertexId};
use dynkernel::verify::brute_force_chips;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn index_matches_enumeration(seed in any::<u64>(), all_pass in any::<bool>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let params = ChipParams::new(2, 4, 2, 3).unwrap();
        let always = |_: &[EdgeId], _: &[VertexId]| true;
        let oracle: &Oracle = if all_pass { &always } else { &picky };
        let mut idx = ChipIndex::new(params);
        let (mut nv, mut ne) = (0, 0);
        for _ in 0..80 {
            let op = random_op(&mut r, &idx, &mut nv, &mut ne, 12);
            idx.apply(&op, oracle).unwrap();
            prop_assert_eq!(idx.chips(), &brute_force_chips(idx.hypergraph(), params, oracle), "after {:?}", op);
            prop_assert!(idx.check_index().is_ok());
        }
    }
}
