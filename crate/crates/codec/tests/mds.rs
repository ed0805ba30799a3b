use geokv_codec::{rs_decode, rs_encode, Chunk, ReedSolomon};
use itertools::Itertools;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_value(rng: &mut ChaCha8Rng, max: usize) -> Vec<u8> {
    let len = rng.random_range(1..=max);
    (0..len).map(|_| rng.random()).collect()
}

#[test]
fn every_k_subset_decodes_for_small_codes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=9 {
        for k in 1..=n {
            let rs = ReedSolomon::new(n, k).unwrap();
            for _ in 0..10 {
                let v = random_value(&mut rng, 300);
                let chunks = rs.encode(&v).unwrap();
                assert_eq!(chunks.len(), n);
                for c in &chunks {
                    assert_eq!(c.data.len(), v.len().div_ceil(k));
                }
                for subset in chunks.iter().cloned().combinations(k) {
                    assert_eq!(rs.decode(&subset, v.len()).unwrap(), v, "n={n} k={k}");
                }
            }
        }
    }
}

#[test]
fn four_two_subsets_agree() {
    let v: Vec<u8> = (0..97u8).collect();
    let chunks = rs_encode(&v, 4, 2).unwrap();
    let a = rs_decode(&chunks[0..2], 4, 2, v.len()).unwrap();
    let b = rs_decode(&chunks[2..4], 4, 2, v.len()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, v);
}

#[test]
fn single_chunk_of_a_replicated_value() {
    let v = b"replicated".to_vec();
    let chunks = rs_encode(&v, 3, 1).unwrap();
    for c in chunks {
        assert_eq!(rs_decode(&[c], 3, 1, v.len()).unwrap(), v);
    }
}

#[test]
fn corruption_is_not_corrected() {
    let v: Vec<u8> = (0..64u8).collect();
    let mut chunks = rs_encode(&v, 5, 3).unwrap();
    chunks[4].data[0] ^= 0x5A;
    let picked: Vec<Chunk> = vec![chunks[1].clone(), chunks[3].clone(), chunks[4].clone()];
    assert_ne!(rs_decode(&picked, 5, 3, v.len()).unwrap(), v);
}

#[test]
fn large_value_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let v: Vec<u8> = (0..64 * 1024).map(|_| rng.random()).collect();
    let chunks = rs_encode(&v, 9, 5).unwrap();
    let picked: Vec<Chunk> = chunks.into_iter().rev().take(5).collect();
    assert_eq!(rs_decode(&picked, 9, 5, v.len()).unwrap(), v);
}

proptest! {
    #[test]
    fn any_k_chunks_reconstruct(
        v in proptest::collection::vec(any::<u8>(), 1..2048),
        n in 1usize..=9,
        k_frac in 0.0f64..1.0,
        seed: u64,
    ) {
        let k = 1 + ((n as f64 * k_frac) as usize).min(n - 1);
        let chunks = rs_encode(&v, n, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let picked: Vec<Chunk> = idx[..k].iter().map(|&i| chunks[i].clone()).collect();
        prop_assert_eq!(rs_decode(&picked, n, k, v.len()).unwrap(), v);
    }
}
