use proptest::prelude::*;

use stegga::bitplane::{
    adjust_nearest, alter, distance, oracle_nearest, read_bits, BitPattern, LayerMask,
};
use stegga::ga_adjust::{crossover, mutate, run_ga, GaParams, SampleChromosome};
use stegga::keystream::{permute_indices, xor_keystream, MasterKey, SplitMix64};
use stegga::msg_ga::{init_population, profile_message};
use stegga::pipeline::{embed, extract, EmbedConfig, Mode};
use stegga::wav::{parse_wav, write_wav, AudioBuffer, BitDepth};

fn depth() -> impl Strategy<Value = BitDepth> {
    prop_oneof![Just(BitDepth::Eight), Just(BitDepth::Sixteen)]
}

/// (sample, mask, pattern) at a random depth.
fn case() -> impl Strategy<Value = (i32, LayerMask, BitPattern)> {
    depth().prop_flat_map(|d| {
        (
            d.min_value()..=d.max_value(),
            1..=d.full_mask(),
            any::<u32>(),
        )
            .prop_map(move |(s, bits, p)| {
                let mask = LayerMask::from_bits(bits, d).unwrap();
                (s, mask, BitPattern::new(p, mask.width()))
            })
    })
}

fn buffer() -> impl Strategy<Value = AudioBuffer> {
    (depth(), 1u16..=2, 0usize..300, 1u32..=96_000).prop_flat_map(|(d, ch, frames, rate)| {
        prop::collection::vec(d.min_value()..=d.max_value(), frames * ch as usize)
            .prop_map(move |s| AudioBuffer::new(s, d, rate, ch).unwrap())
    })
}

proptest! {
    #[test]
    fn wav_round_trip(buf in buffer()) {
        let bytes = write_wav(&buf);
        let back = parse_wav(&bytes).unwrap();
        prop_assert_eq!(&back, &buf);
        prop_assert_eq!(write_wav(&back), bytes);
    }

    #[test]
    fn parse_wav_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_wav(&bytes);
    }

    #[test]
    fn parse_wav_survives_header_damage(buf in buffer(), at in 0usize..44, byte in any::<u8>(), cut in any::<prop::sample::Index>()) {
        let mut bytes = write_wav(&buf);
        bytes[at] = byte;
        let _ = parse_wav(&bytes);
        let _ = parse_wav(&bytes[..cut.index(bytes.len())]);
    }

    #[test]
    fn adjusters_carry_the_pattern((s, mask, p) in case()) {
        let d = mask.depth();
        for v in [alter(s, &mask, p), adjust_nearest(s, &mask, p)] {
            prop_assert!(d.contains(v));
            prop_assert_eq!(read_bits(v, &mask), p);
        }
        prop_assert!(distance(adjust_nearest(s, &mask, p), s) <= distance(alter(s, &mask, p), s));
    }

    #[test]
    fn nearest_matches_oracle((s, mask, p) in case()) {
        prop_assert_eq!(adjust_nearest(s, &mask, p), oracle_nearest(s, &mask, p));
    }

    #[test]
    fn matching_sample_is_fixed_point((s, mask, _p) in case()) {
        let p = read_bits(s, &mask);
        prop_assert_eq!(alter(s, &mask, p), s);
        prop_assert_eq!(adjust_nearest(s, &mask, p), s);
    }

    #[test]
    fn crossover_and_mutation_keep_frozen_loci(
        (s, mask, p) in case(), other in any::<u32>(), cut in any::<prop::sample::Index>(), seed in any::<u64>(), pm in 0.0f64..=1.0,
    ) {
        let a = SampleChromosome::from_value(s, mask, p);
        let b = SampleChromosome::repaired(other, mask, p);
        let cut = 1 + cut.index(mask.depth().bits() as usize - 1) as u32;
        let (c1, c2) = crossover(&a, &b, cut);
        let mut rng = SplitMix64::new(seed);
        for c in [c1, c2, mutate(&c1, pm, &mut rng)] {
            prop_assert_eq!(read_bits(c.value(), &mask), p);
        }
    }

    #[test]
    fn ga_result_is_valid_and_never_worse((s, mask, p) in case(), seed in any::<u64>()) {
        let v = run_ga(s, &mask, p, &GaParams::default(), seed);
        prop_assert_eq!(read_bits(v, &mask), p);
        prop_assert!(distance(v, s) <= distance(alter(s, &mask, p), s));
        prop_assert_eq!(v, run_ga(s, &mask, p, &GaParams::default(), seed));
    }

    #[test]
    fn permutation_is_bijection(n in 0usize..2000, key in any::<u64>()) {
        let mut perm = permute_indices(n, MasterKey(key));
        perm.sort_unstable();
        prop_assert_eq!(perm, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn xor_is_involution(data in prop::collection::vec(any::<u8>(), 0..512), key in any::<u64>()) {
        let k = MasterKey(key);
        let once = xor_keystream(&data, k);
        prop_assert_eq!(once.len(), data.len());
        prop_assert_eq!(xor_keystream(&once, k), data);
    }

    #[test]
    fn population_genes_in_range(msg in prop::collection::vec(any::<u8>(), 1..64), seed in any::<u64>()) {
        let profile = profile_message(&msg).unwrap();
        prop_assert_eq!(profile.min_val, *msg.iter().min().unwrap());
        prop_assert_eq!(profile.max_val, *msg.iter().max().unwrap());
        let pop = init_population(&profile, 10, profile.distinct.len(), &mut SplitMix64::new(seed));
        prop_assert_eq!(pop.len(), 10);
        for ind in &pop {
            prop_assert_eq!(ind.len(), profile.distinct.len());
            prop_assert!(ind.iter().all(|&g| (profile.min_val..=profile.max_val).contains(&g)));
        }
    }

    #[test]
    fn embed_extract_round_trip(
        buf in buffer(), msg in prop::collection::vec(any::<u8>(), 0..24), bits in any::<u32>(), key in any::<u64>(),
        mode in prop_oneof![Just(Mode::Plain), Just(Mode::Nearest), Just(Mode::Ga)],
    ) {
        let d = buf.bit_depth();
        let mask = LayerMask::from_bits(1 + bits % d.full_mask(), d).unwrap();
        let config = EmbedConfig { mask, mode, ..EmbedConfig::new(d, MasterKey(key)) };
        match embed(&buf, &msg, &config) {
            Ok((stego, k, _)) => prop_assert_eq!(extract(&stego, &k).unwrap(), msg),
            Err(e) => prop_assert!(msg.len() as u64 * 8 > buf.len() as u64 * mask.width() as u64, "{}", e),
        }
    }
}
