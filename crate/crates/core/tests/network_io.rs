use derhamnet::generate;
use derhamnet::network::{NetError, Network};
use derhamnet::shapes::SpaceKind;
use derhamnet::spaces::basis_net;

#[test]
fn hand_written_affine_net() {
    let text = r#"{"input_dim": 2, "layers": [{"rows": 2, "cols": 2,
        "triplets": [[0, 0, 1.5], [0, 1, -2.0], [1, 1, 0.25]], "bias": [1.0, 0.0], "act": ["id", "id"]}]}"#;
    let net = Network::deserialize(text.as_bytes()).unwrap();
    let x = [0.3, -0.7];
    let want = [1.5 * 0.3 - 2.0 * -0.7 + 1.0, 0.25 * -0.7];
    assert_eq!(net.eval(&x), want.to_vec());
    assert_eq!(net.depth(), 1);
    assert_eq!(net.size(), 4);
}

#[test]
fn truncated_file_is_a_parse_error() {
    let net = basis_net(&generate::square_diag(1), SpaceKind::S1).unwrap().net;
    let bytes = net.serialize();
    assert!(Network::deserialize(&bytes[..bytes.len() - 5]).is_err());
}

#[test]
fn last_layer_must_be_affine() {
    let text = r#"{"input_dim": 1, "layers": [{"rows": 1, "cols": 1,
        "triplets": [[0, 0, 1.0]], "bias": [0.0], "act": ["relu"]}]}"#;
    assert!(Network::deserialize(text.as_bytes()).is_err());
}

#[test]
fn wrong_input_length_is_an_error() {
    let net = basis_net(&generate::square_diag(1), SpaceKind::S0).unwrap().net;
    assert!(matches!(net.evaluate(&[0.1]), Err(NetError::InputDimension { .. })));
}

#[test]
fn round_trip_is_bitwise_for_every_family() {
    let mesh = generate::lshape(1);
    for kind in SpaceKind::ALL {
        let net = basis_net(&mesh, kind).unwrap().net;
        let copy = Network::deserialize(&net.serialize()).unwrap();
        assert_eq!(copy, net);
        for x in derhamnet::verify::random_points(&mesh, 50, 3) {
            let (a, b) = (net.eval(&x), copy.eval(&x));
            assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}
