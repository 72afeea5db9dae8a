use fracseg::engine::Engine;
use fracseg_core::fd::BoxCountMode;
use fracseg_core::ffm::{compute_ffm, compute_ffm_label, compute_ffm_raw, FfmParams};
use fracseg_core::{BinaryMask, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn parallel_matches_single_threaded_for_any_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let image = GrayImage::new(45, 31, (0..45 * 31).map(|_| rng.random_range(0..256u16)).collect()).unwrap();
    for threads in [1, 2, 3, 8] {
        let engine = Engine::new(threads);
        for mode in [BoxCountMode::Standard, BoxCountMode::Robust] {
            for (window, step) in [(3, 1), (5, 2), (9, 3), (11, 4)] {
                let params = FfmParams { window, step, gray_levels: 256, mode };
                assert_eq!(
                    bits(engine.compute_ffm_raw(&image, &params).unwrap().as_slice()),
                    bits(compute_ffm_raw(&image, &params).unwrap().as_slice())
                );
                assert_eq!(
                    bits(engine.compute_ffm(&image, &params).unwrap().as_slice()),
                    bits(compute_ffm(&image, &params).unwrap().as_slice())
                );
            }
        }
    }
}

#[test]
fn label_maps_match_core() {
    let mask = BinaryMask::from_fn(20, 20, |x, y| x == y || x + y == 19);
    let params = FfmParams::default();
    let engine = Engine::new(3);
    assert_eq!(
        bits(engine.compute_ffm_label(&mask, &params).unwrap().as_slice()),
        bits(compute_ffm_label(&mask, &params).unwrap().as_slice())
    );
}

#[test]
fn errors_propagate() {
    let engine = Engine::new(2);
    let image = GrayImage::filled(8, 8, 3).unwrap();
    assert!(engine.compute_ffm(&image, &FfmParams { window: 4, ..FfmParams::default() }).is_err());
    let deep = GrayImage::with_gray_levels(2, 2, vec![0, 300, 5, 5], 1024).unwrap();
    assert!(engine.compute_ffm(&deep, &FfmParams::default()).is_err());
}
