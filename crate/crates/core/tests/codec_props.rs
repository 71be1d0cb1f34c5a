mod common;

use proptest::prelude::*;
use qrmap::codec::{
    decode_bytes, decode_program, encode_program, program_stats, stats, BitStream, DecodeError,
    EncodeOptions,
};
use qrmap::ir::{parse_program, print};
use qrmap::model::{validate, ConditionToken, Instruction, Program, VertexId};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(300)
}

/// Drops vertex `gone` and every edge touching it, renumbering the rest.
/// Conditions that name the vertex are pointed at vertex 0 instead.
fn remove_vertex(p: &Program, gone: usize) -> Program {
    let remap = |v: VertexId| {
        let i = v.index();
        VertexId::from(if i > gone {
            i - 1
        } else if i == gone {
            0
        } else {
            i
        })
    };
    let mut q = p.clone();
    q.graph.vertices.remove(gone);
    for vertex in &mut q.graph.vertices {
        vertex.edges.retain(|e| e.destination.index() != gone);
        for e in &mut vertex.edges {
            e.destination = remap(e.destination);
        }
    }
    let fix = |tokens: &mut Vec<ConditionToken>| {
        for t in tokens {
            if let ConditionToken::NodeIs(v) = t {
                *v = remap(*v);
            }
        }
    };
    for qc in &mut q.quick_choices {
        fix(&mut qc.condition.tokens);
    }
    for ins in &mut q.code {
        if let Instruction::Push(c) = ins {
            fix(&mut c.tokens);
        }
    }
    q.header.origin = q.header.origin.map(remap);
    q
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn generated_programs_are_valid(seed in any::<u64>()) {
        let p = common::random_program(&mut common::rng(seed));
        let report = validate(&p);
        prop_assert!(report.is_valid(), "{}", report);
    }

    #[test]
    fn decode_inverts_encode(seed in any::<u64>()) {
        let p = common::random_program(&mut common::rng(seed));
        let stream = encode_program(&p).unwrap();
        prop_assert_eq!(decode_program(&stream).unwrap(), p.clone());
        // padded to whole bytes
        prop_assert_eq!(decode_bytes(stream.as_bytes()).unwrap(), p);
    }

    #[test]
    fn encoding_is_deterministic(seed in any::<u64>()) {
        let p = common::random_program(&mut common::rng(seed));
        prop_assert_eq!(encode_program(&p).unwrap(), encode_program(&p.clone()).unwrap());
    }

    #[test]
    fn parse_inverts_print(seed in any::<u64>()) {
        let p = common::random_program(&mut common::rng(seed));
        let text = print(&p);
        prop_assert_eq!(parse_program(&text).unwrap(), p.clone(), "{}", text);
        prop_assert_eq!(print(&p), text);
    }

    #[test]
    fn section_sizes_add_up(seed in any::<u64>()) {
        let p = common::random_program(&mut common::rng(seed));
        let stream = encode_program(&p).unwrap();
        let from_stream = stats(&stream).unwrap();
        let from_program = program_stats(&p, EncodeOptions::default()).unwrap();
        prop_assert_eq!(from_stream.bits, stream.len());
        prop_assert_eq!(from_stream.framing_bits + from_stream.sections.total(), stream.len());
        prop_assert_eq!(&from_stream.sections, &from_program.sections);
        if p.quick_choices.is_empty() {
            prop_assert_eq!(from_stream.sections.quick_choices, 0);
        }
        if p.code.is_empty() {
            prop_assert_eq!(from_stream.sections.code, 0);
        }
        if p.header.is_empty() {
            prop_assert_eq!(from_stream.sections.header, 0);
        }
    }

    #[test]
    fn removing_a_vertex_never_grows_the_stream(seed in any::<u64>(), pick in any::<usize>()) {
        let p = common::random_program(&mut common::rng(seed));
        prop_assume!(p.graph.len() > 1);
        let q = remove_vertex(&p, pick % p.graph.len());
        prop_assert!(validate(&q).is_valid());
        let before = encode_program(&p).unwrap().len();
        let after = encode_program(&q).unwrap().len();
        prop_assert!(after <= before, "{} -> {}", before, after);
    }

    #[test]
    fn decoder_survives_garbage(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode_bytes(&bytes);
    }

    #[test]
    fn decoder_survives_bit_flips(seed in any::<u64>(), flips in proptest::collection::vec(any::<usize>(), 1..4)) {
        let p = common::random_program(&mut common::rng(seed));
        let mut bytes = encode_program(&p).unwrap().into_bytes();
        for f in flips {
            let bit = f % (bytes.len() * 8);
            bytes[bit / 8] ^= 0x80 >> (bit % 8);
        }
        if let Ok(q) = decode_bytes(&bytes) {
            prop_assert!(validate(&q).is_valid());
        }
    }

    #[test]
    fn every_prefix_is_rejected(seed in any::<u64>()) {
        let p = common::random_program(&mut common::rng(seed));
        let full = encode_program(&p).unwrap();
        for len in 0..full.len() {
            let mut cut = full.clone();
            cut.truncate(len);
            prop_assert!(decode_program(&cut).is_err(), "prefix of {} bits decoded", len);
        }
    }
}

#[test]
fn minimal_program_round_trip() {
    let p = parse_program(
        r#"DEFINE_LABEL NAME ASCII7 "spot" STRING ASCII7 "name" NO_OPTIONAL
           LABEL 1 ATTRIBUTES_FLAGS FALSE ATTRIBUTES_VALUES STRING ASCII7 "Here""#,
    )
    .unwrap();
    assert!(p.code.is_empty());
    let stream = encode_program(&p).unwrap();
    assert_eq!(decode_program(&stream).unwrap(), p);
    let report = stats(&stream).unwrap();
    assert_eq!(report.sections.header, 0);
    assert_eq!(report.sections.quick_choices, 0);
    assert_eq!(report.sections.code, 0);
}

#[test]
fn wrong_magic_and_empty_input() {
    assert!(matches!(
        decode_bytes(b"https://example.com"),
        Err(DecodeError::BadMagic(_))
    ));
    assert!(matches!(
        decode_bytes(&[]),
        Err(DecodeError::TruncatedStream { .. })
    ));
    assert!(matches!(
        decode_program(&BitStream::new()),
        Err(DecodeError::TruncatedStream { .. })
    ));
}

#[test]
fn trailing_bytes_are_rejected() {
    let p = qrmap::corpus::plant();
    let mut p = p;
    p.graph.vertices[4].edges[0].values[0] = Some(qrmap::AttributeValue::Float(5.5));
    let mut bytes = encode_program(&p).unwrap().into_bytes();
    bytes.push(0);
    assert!(matches!(
        decode_bytes(&bytes),
        Err(DecodeError::TrailingData { .. })
    ));
}
