use proptest::prelude::*;

use rplguard_core::wire::{
    decode_packet, encode_packet, Ack, AckKind, Data, DataTag, DecodeError, Dio, Packet,
    ProbeOption, ReqpR, RplMc, TableClaim, Warning, WarningKind,
};
use rplguard_core::{NodeId, Rank};

fn node() -> impl Strategy<Value = NodeId> {
    any::<u32>().prop_map(NodeId)
}

fn nodes() -> impl Strategy<Value = Vec<NodeId>> {
    prop::collection::vec(node(), 0..12)
}

fn packet() -> impl Strategy<Value = Packet> {
    let dio = (
        node(),
        any::<u16>(),
        0u16..=10_000,
        any::<u16>(),
        any::<bool>(),
    )
        .prop_map(|(sender, rank, reliability, version, grounded)| {
            Packet::Dio(Dio {
                sender,
                rank: Rank(rank),
                reliability,
                version,
                grounded,
            })
        });
    let reqp = (
        node(),
        any::<u32>(),
        any::<[u8; 16]>(),
        any::<u32>(),
        nodes(),
    )
        .prop_map(|(node, energy, source, sequence, route)| {
            Packet::ReqpR(ReqpR {
                node,
                energy,
                source,
                sequence,
                route,
            })
        });
    let claim = (node(), any::<u32>(), any::<u32>(), 0u16..=10_000).prop_map(
        |(neighbor, trust, energy, veracity)| TableClaim {
            neighbor,
            trust,
            energy,
            veracity,
        },
    );
    let ack = (
        any::<bool>(),
        node(),
        any::<u32>(),
        nodes(),
        prop::collection::vec(claim, 0..8),
    )
        .prop_map(|(probe, node, sequence, return_route, table)| {
            let kind = if probe {
                AckKind::Probe
            } else {
                AckKind::Reliability
            };
            Packet::Ack(Ack {
                kind,
                node,
                sequence,
                return_route,
                table,
            })
        });
    let mc = (any::<[u8; 16]>(), prop::collection::vec(any::<u8>(), 0..40))
        .prop_map(|(base, options)| Packet::RplMc(RplMc { base, options }));
    let warn = (
        any::<bool>(),
        node(),
        any::<u16>(),
        any::<u64>(),
        node(),
        any::<u16>(),
    )
        .prop_map(|(q, malicious, rank, issue_time, origin, version)| {
            let kind = if q {
                WarningKind::Quarantine
            } else {
                WarningKind::Suspicion
            };
            Packet::Warning(Warning {
                kind,
                malicious,
                malicious_rank: Rank(rank),
                issue_time,
                origin,
                version,
            })
        });
    let tag = (node(), any::<u32>()).prop_map(|(source, sequence)| DataTag { source, sequence });
    let data = (
        any::<u8>(),
        prop::collection::vec(tag, 0..6),
        any::<u32>(),
        prop::collection::vec(any::<u8>(), 0..40),
    )
        .prop_map(|(hops, contributors, key_id, ciphertext)| {
            Packet::Data(Data {
                hops,
                contributors,
                key_id,
                ciphertext,
            })
        });
    prop_oneof![dio, reqp, ack, mc, warn, data]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn roundtrip(p in packet()) {
        let bytes = encode_packet(&p).unwrap();
        prop_assert_eq!(decode_packet(&bytes).unwrap(), p);
    }

    #[test]
    fn every_single_bit_flip_is_caught(p in packet()) {
        let bytes = encode_packet(&p).unwrap();
        for bit in 0..bytes.len() * 8 {
            let mut b = bytes.clone();
            b[bit / 8] ^= 1 << (bit % 8);
            prop_assert_eq!(decode_packet(&b), Err(DecodeError::BadChecksum));
        }
    }

    #[test]
    fn truncation_is_an_error(p in packet(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_packet(&p).unwrap();
        let n = cut.index(bytes.len());
        prop_assert!(decode_packet(&bytes[..n]).is_err());
    }

    #[test]
    fn garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..80)) {
        let _ = decode_packet(&bytes);
    }

    #[test]
    fn probe_option_roundtrip(sequence in any::<u32>(), route in nodes()) {
        let o = ProbeOption { sequence, route };
        prop_assert_eq!(ProbeOption::from_bytes(&o.to_bytes().unwrap()).unwrap(), o);
    }
}
