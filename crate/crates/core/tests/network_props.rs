mod common;

use common::{jacobi_eigen, random_network, schur_complement, to_rows};
use gscr_core::{build_susceptance, kron_reduce, AcNetwork, BusId, BusSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn network(seed: u64, n: usize) -> AcNetwork {
    random_network(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

proptest! {
    #[test]
    fn susceptance_is_exactly_symmetric(seed in any::<u64>(), n in 1usize..=8) {
        let b = build_susceptance(&network(seed, n)).unwrap().entries;
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(b[(i, j)].to_bits(), b[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn susceptance_is_positive_definite(seed in any::<u64>(), n in 1usize..=8) {
        let b = build_susceptance(&network(seed, n)).unwrap();
        let (vals, _) = jacobi_eigen(&to_rows(&b.entries));
        prop_assert!(vals[0] > 0.0, "{vals:?}");
    }

    #[test]
    fn row_sum_is_grounding_susceptance(seed in any::<u64>(), n in 1usize..=8) {
        let net = network(seed, n);
        let b = build_susceptance(&net).unwrap().entries;
        for (i, bus) in net.buses.iter().enumerate() {
            let row: f64 = b.row(i).iter().sum();
            let expected = bus.thevenin_x.map_or(0.0, |x| 1.0 / x);
            prop_assert!((row - expected).abs() < 1e-10 * b[(i, i)].max(1.0));
        }
    }

    #[test]
    fn kron_reduction_matches_schur_complement(seed in any::<u64>(), n in 2usize..=8, keep_mask in any::<u8>()) {
        let mut net = network(seed, n);
        let mut keep: Vec<usize> = (0..n).filter(|i| keep_mask & (1 << i) != 0).collect();
        if keep.is_empty() {
            keep.push(0);
        }
        for (i, bus) in net.buses.iter_mut().enumerate() {
            bus.is_converter = keep.contains(&i);
        }
        let keep_ids: Vec<BusId> = keep.iter().map(|&i| net.buses[i].id.clone()).collect();
        let reduced = kron_reduce(&net, &keep_ids).unwrap();
        let rb = build_susceptance(&reduced).unwrap().entries;
        let full = to_rows(&build_susceptance(&net).unwrap().entries);
        let expected = schur_complement(&full, &keep);
        for (r, row) in expected.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                prop_assert!((rb[(r, c)] - v).abs() < 1e-10, "{} vs {}", rb[(r, c)], v);
            }
        }
    }

    #[test]
    fn bus_permutation_conjugates_matrix(seed in any::<u64>(), n in 2usize..=8, rot in 1usize..8) {
        let net = network(seed, n);
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let permuted = AcNetwork::new(
            perm.iter().map(|&i| net.buses[i].clone()).collect::<Vec<BusSpec>>(),
            net.branches.clone(),
        );
        let b = build_susceptance(&net).unwrap().entries;
        let pb = build_susceptance(&permuted).unwrap().entries;
        for i in 0..n {
            for j in 0..n {
                prop_assert!((pb[(i, j)] - b[(perm[i], perm[j])]).abs() < 1e-12);
            }
        }
    }
}
