mod common;

use proptest::prelude::*;
use sclf_core::polar_code::{bit_reversal_permute, crc_append, crc_check, encode, CodeSpec, CrcPoly, MessageFrame};

fn bits(len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, len)
}

fn sized_bits() -> impl Strategy<Value = (u32, Vec<u8>, Vec<u8>)> {
    (1u32..=8).prop_flat_map(|n| (Just(n), bits(1 << n), bits(1 << n)))
}

#[test]
fn matches_generator_matrix_small() {
    for n in 1..=6 {
        let g = common::generator_matrix(n);
        let len = 1usize << n;
        for w in 0..len.min(64) {
            let mut u = vec![0u8; len];
            u[w] = 1;
            assert_eq!(encode(&u).unwrap(), g[w], "row {w} of G_{len}");
        }
    }
}

#[test]
fn generator_of_two_is_kernel() {
    assert_eq!(common::generator_matrix(1), vec![vec![1, 0], vec![1, 1]]);
}

proptest! {
    #[test]
    fn encode_is_linear((_n, a, b) in sized_bits()) {
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let ea = encode(&a).unwrap();
        let eb = encode(&b).unwrap();
        let esum: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(encode(&sum).unwrap(), esum);
    }

    #[test]
    fn encode_is_an_involution((_n, a, _b) in sized_bits()) {
        prop_assert_eq!(encode(&encode(&a).unwrap()).unwrap(), a);
    }

    #[test]
    fn bit_reversal_is_an_involution((_n, a, _b) in sized_bits()) {
        prop_assert_eq!(bit_reversal_permute(&bit_reversal_permute(&a).unwrap()).unwrap(), a);
    }

    #[test]
    fn matrix_oracle_random((n, u, _b) in sized_bits()) {
        let g = common::generator_matrix(n);
        prop_assert_eq!(encode(&u).unwrap(), common::matrix_encode(&u, &g));
    }

    #[test]
    fn crc_round_trip(msg in prop::collection::vec(0u8..=1, 1..200), which in 0usize..3, flip in any::<prop::sample::Index>()) {
        let poly = [CrcPoly::CRC8, CrcPoly::CRC16, CrcPoly::CRC24C][which];
        let mut framed = crc_append(&msg, poly);
        prop_assert_eq!(framed.len(), msg.len() + poly.degree() as usize);
        prop_assert!(crc_check(&framed, poly));
        let i = flip.index(framed.len());
        framed[i] ^= 1;
        prop_assert!(!crc_check(&framed, poly));
    }

    #[test]
    fn message_frame_layout(k in 1usize..=56, seed in any::<u64>()) {
        let spec = CodeSpec::construct(7, k, 8, Some(CrcPoly::CRC8)).unwrap();
        let info: Vec<u8> = (0..k).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let frame = MessageFrame::new(&spec, &info).unwrap();
        prop_assert!(spec.frozen_set().iter().all(|&i| frame.u_vector[i] == 0));
        prop_assert_eq!(spec.message_of(&frame.u_vector), info);
        prop_assert!(spec.crc_passes(&frame.u_vector));
    }
}

#[test]
fn construction_is_nested() {
    // Higher-rate codes contain lower-rate information sets.
    let small = CodeSpec::construct(8, 60, 8, Some(CrcPoly::CRC8)).unwrap();
    let large = CodeSpec::construct(8, 120, 8, Some(CrcPoly::CRC8)).unwrap();
    assert!(small.info_set().iter().all(|i| large.info_set().contains(i)));
    assert!(!large.is_frozen(255));
    assert!(large.is_frozen(0));
}
