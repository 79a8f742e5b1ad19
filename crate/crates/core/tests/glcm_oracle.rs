mod common;

use floodkit::masking::PixelMask;
use floodkit::raster::Raster;
use floodkit::texture::{self, DEFAULT_OFFSETS, HARALICK_NAMES};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glcm_matches_brute_force(seed in any::<u64>(), w in 1usize..10, h in 1usize..10, holes in 0.0f64..0.9) {
        let mut r = common::rng(seed);
        let q = common::random_grid(&mut r, w, h, 16, holes);
        let g = texture::glcm(&q, &DEFAULT_OFFSETS).unwrap();
        let (want, valid, possible) = common::glcm_oracle(&q, &DEFAULT_OFFSETS);
        prop_assert_eq!(g.pair_count, valid);
        prop_assert_eq!(g.possible_pairs, possible);
        for (a, b) in g.matrix.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn glcm_is_symmetric_and_normalized(seed in any::<u64>(), levels in 2usize..17) {
        let mut r = common::rng(seed);
        let q = common::random_grid(&mut r, 8, 8, levels, 0.3);
        let g = texture::glcm(&q, &DEFAULT_OFFSETS).unwrap();
        for i in 0..levels {
            for j in 0..levels {
                prop_assert_eq!(g.at(i, j), g.at(j, i));
            }
        }
        let total: f64 = g.matrix.iter().sum();
        prop_assert!(g.pair_count == 0 || (total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn haralick_stays_in_range(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let q = common::random_grid(&mut r, 8, 8, 16, 0.2);
        let f = texture::haralick(&texture::glcm(&q, &DEFAULT_OFFSETS).unwrap());
        prop_assert_eq!(f.names().len(), HARALICK_NAMES.len());
        let energy = f.get("energy").unwrap();
        let homogeneity = f.get("homogeneity").unwrap();
        let correlation = f.get("correlation").unwrap();
        let valid = f.get("valid_fraction").unwrap();
        prop_assert!((0.0..=1.0).contains(&energy));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&homogeneity));
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&correlation));
        prop_assert!((0.0..=1.0).contains(&valid));
        prop_assert!(f.values().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn fully_masked_grid_is_degenerate_not_nan() {
    let gray = Raster::filled(6, 6, 1, 100).unwrap();
    let q = texture::quantize(&gray, &PixelMask::filled(6, 6, false), 16).unwrap();
    let f = texture::haralick(&texture::glcm(&q, &DEFAULT_OFFSETS).unwrap());
    for name in ["contrast", "energy", "homogeneity", "entropy", "valid_fraction"] {
        assert_eq!(f.get(name), Some(0.0), "{name}");
    }
    // zero variance reads as perfectly correlated
    assert_eq!(f.get("correlation"), Some(1.0));
}
