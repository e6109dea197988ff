use ltcoop::lt::CodingParams;
use ltcoop::wire::*;
use proptest::prelude::*;

fn packet() -> impl Strategy<Value = DataPacket> {
    (1u32.., any::<u16>(), any::<u64>(), prop::collection::vec(any::<u8>(), 1..=MAX_SYMBOL_SIZE), prop::bool::ANY)
        .prop_flat_map(|(count, n, seed, payload, lt)| {
            (0..count).prop_map(move |block_id| DataPacket {
                version: if lt { VERSION_LT_SPLITMIX } else { VERSION_UNCODED },
                block_id,
                block_count: count,
                n: n.max(1),
                seed,
                payload: payload.clone(),
            })
        })
}

fn control() -> impl Strategy<Value = ControlMessage> {
    prop_oneof![
        (any::<u32>(), -90.0f64..=90.0, -180.0f64..=180.0, 0u8..=100)
            .prop_map(|(client_id, lat, lon, battery)| ControlMessage::Register { client_id, lat, lon, battery }),
        (any::<u32>(), any::<u32>()).prop_map(|(client_id, file_id)| ControlMessage::HelpRequest { client_id, file_id }),
        ("[a-z0-9-]{0,40}", prop::bool::ANY, 1usize..=4096, 1usize..=MAX_SYMBOL_SIZE, 0.001f64..1.0, 0.001f64..1.0, prop::collection::vec(any::<u32>(), 0..20))
            .prop_map(|(ssid, ru, n, symbol_size, c, delta, peers)| ControlMessage::GroupAssign {
                ssid,
                role: if ru { Role::Requester } else { Role::Assistant },
                coding: CodingParams { n, symbol_size, c, delta },
                peers,
            }),
        any::<u32>().prop_map(|client_id| ControlMessage::Ready { client_id }),
        (any::<u32>(), any::<u32>()).prop_map(|(client_id, file_id)| ControlMessage::Terminate { client_id, file_id }),
        (any::<u32>(), any::<u32>()).prop_map(|(client_id, block_id)| ControlMessage::BlockAck { client_id, block_id }),
    ]
}

proptest! {
    #[test]
    fn data_packets_round_trip(p in packet()) {
        let bytes = encode_data_packet(&p).unwrap();
        prop_assert_eq!(bytes.len(), DATA_HEADER_LEN + p.payload.len());
        prop_assert!(bytes.len() <= MAX_DATAGRAM);
        prop_assert_eq!(decode_data_packet(&bytes).unwrap(), p);
    }

    #[test]
    fn truncated_packets_rejected(p in packet(), cut in 1usize..64) {
        let bytes = encode_data_packet(&p).unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(decode_data_packet(&bytes[..keep]).is_err());
    }

    #[test]
    fn control_round_trips(m in control()) {
        let bytes = encode_ctrl(&m).unwrap();
        let (back, used) = decode_ctrl(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(back, m);
    }

    #[test]
    fn control_streams_split_cleanly(ms in prop::collection::vec(control(), 0..8), tail in prop::collection::vec(any::<u8>(), 0..3)) {
        let mut stream = Vec::new();
        for m in &ms {
            stream.extend(encode_ctrl(m).unwrap());
        }
        let whole = stream.len();
        // A partial trailing frame is left over.
        if tail.len() >= 2 {
            stream.extend([0u8, 40]);
        }
        let (got, rest) = decode_ctrl_stream(&stream).unwrap();
        prop_assert_eq!(got, ms);
        prop_assert_eq!(rest, stream.len() - whole);
    }

    #[test]
    fn random_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..1600)) {
        let _ = decode_data_packet(&bytes);
        let _ = decode_ctrl(&bytes);
        let _ = decode_ctrl_stream(&bytes);
        let _ = decode_ack(&bytes);
    }

    #[test]
    fn mutated_packets_never_panic(p in packet(), at in any::<prop::sample::Index>(), v: u8) {
        let mut bytes = encode_data_packet(&p).unwrap();
        let i = at.index(bytes.len());
        bytes[i] = v;
        if let Ok(q) = decode_data_packet(&bytes) {
            prop_assert!(q.block_id < q.block_count);
            prop_assert_eq!(q.payload.len() + DATA_HEADER_LEN, bytes.len());
        }
    }

    #[test]
    fn acks_round_trip(c: u64) {
        let b = encode_ack(c);
        prop_assert_eq!(b.len(), ACK_LEN);
        prop_assert_eq!(decode_ack(&b).unwrap(), c);
    }
}

#[test]
fn oversized_payload_refused() {
    let p = DataPacket { version: 1, block_id: 0, block_count: 1, n: 1, seed: 0, payload: vec![0; MAX_SYMBOL_SIZE + 1] };
    assert!(matches!(encode_data_packet(&p), Err(WireError::MtuExceeded(_))));
    let mut big = encode_data_packet(&DataPacket { payload: vec![0; MAX_SYMBOL_SIZE], ..p }).unwrap();
    big.push(0);
    assert!(decode_data_packet(&big).is_err());
}

#[test]
fn header_layout_is_fixed() {
    let p = DataPacket { version: 1, block_id: 0x0102_0304, block_count: 0x0A0B_0C0D, n: 64, seed: 0x1122_3344_5566_7788, payload: vec![0xEE; 3] };
    let b = encode_data_packet(&p).unwrap();
    assert_eq!(
        b,
        [
            b'L', b'T', b'C', b'P', 1, 1, 2, 3, 4, 0x0A, 0x0B, 0x0C, 0x0D, 0, 64, 0, 3, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66,
            0x77, 0x88, 0xEE, 0xEE, 0xEE
        ]
    );
}

#[test]
fn invalid_control_fields_refused() {
    let reg = |lat, battery| ControlMessage::Register { client_id: 1, lat, lon: 0.0, battery };
    assert!(encode_ctrl(&reg(91.0, 50)).is_err());
    assert!(encode_ctrl(&reg(f64::NAN, 50)).is_err());
    assert!(encode_ctrl(&reg(0.0, 101)).is_err());
    let mut frame = encode_ctrl(&ControlMessage::Ready { client_id: 9 }).unwrap();
    frame[2] = 0x7F;
    assert!(decode_ctrl(&frame).is_err());
}
