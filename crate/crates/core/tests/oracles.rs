mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pli_core::codes;
use pli_core::lifting::{count_4_cycles, lift_pli, remove_4_cycles, SparsePcm};
use pli_core::protograph::quantize_distribution;
use pli_core::sim::spa_decode;

#[test]
fn c1_quantization_is_optimal_in_its_neighbourhood() {
    let pli = codes::c1();
    let dist = pli.dist(2, 3).unwrap();
    let counts = quantize_distribution(dist, 1000).unwrap();
    assert_eq!(counts.nodes(), 1000);
    assert_eq!(counts.edges(), 2000);
    let (best, _) = common::best_quantization(dist, 1000, 3);
    let ours = common::deviation(dist, &counts, 1000);
    assert!(ours <= best + 1e-9, "ours {ours}, brute force {best}");
}

#[test]
fn c2_quantizations_are_optimal_in_their_neighbourhood() {
    let pli = codes::c2();
    for (i, j) in [(1, 1), (2, 2), (2, 3)] {
        let dist = pli.dist(i, j).unwrap();
        for s in [100, 1000] {
            let counts = quantize_distribution(dist, s).unwrap();
            let (best, _) = common::best_quantization(dist, s, 3);
            assert!(
                common::deviation(dist, &counts, s) <= best + 1e-9,
                "({i},{j}) S = {s}"
            );
        }
    }
}

#[test]
fn single_parity_check_against_map() {
    let h = SparsePcm::from_rows(3, &[vec![0, 1, 2]]).unwrap();
    let llr = [5.0, 5.0, -0.1];
    let (map, margin) = common::block_map(&common::codewords(&h), &llr);
    assert_eq!(map, vec![0, 0, 0]);
    assert!(margin > 0.5);
    assert_eq!(spa_decode(&h, &llr, 10).decisions, map);
}

#[test]
fn small_codes_agree_with_bitwise_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut compared = 0;
    for _ in 0..20 {
        let n = rng.gen_range(4..=12);
        let m = common::random_rows(n, &mut rng);
        let h = common::random_code(n, m, &mut rng);
        let words = common::codewords(&h);
        for _ in 0..10 {
            let sent = &words[rng.gen_range(0..words.len())];
            let llr = common::noisy_llr(sent, 0.8, &mut rng);
            let out = common::converged_spa(&h, &llr, 200);
            let app = common::bitwise_map(&words, &llr);
            if out.syndrome_ok && app.iter().all(|a| a.abs() > 0.5) {
                compared += 1;
                let map: Vec<u8> = app.iter().map(|&a| u8::from(a <= 0.0)).collect();
                assert_eq!(out.decisions, map, "H = {h:?}, llr = {llr:?}");
            }
        }
    }
    assert!(compared > 50);
}

#[test]
fn cycle_counts_match_pair_scan() {
    let h = lift_pli(&codes::c2(), 60, 4).unwrap();
    assert_eq!(count_4_cycles(&h), common::brute_4_cycles(&h));
    let out = remove_4_cycles(&h, 100_000, 4);
    assert_eq!(common::brute_4_cycles(&out.pcm), out.residual);
}
