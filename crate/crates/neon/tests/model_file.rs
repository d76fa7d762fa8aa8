use neon::model_file::*;
use neon_core::featurize::FEATURE_DIM;
use neon_core::gat::{GatDims, GatModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SMALL: GatDims = GatDims { input: FEATURE_DIM, hidden: 16, heads: 2, layers: 2 };

fn bytes_of(m: &GatModel<f32>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_model(&mut buf, m).unwrap();
    buf
}

#[test]
fn round_trip_is_bit_exact() {
    for dims in [SMALL, GatDims::STANDARD] {
        let m = GatModel::<f32>::init(dims, &mut ChaCha8Rng::seed_from_u64(1));
        let back = read_model(&mut bytes_of(&m).as_slice()).unwrap();
        assert_eq!(back.dims, dims);
        for (a, b) in m.tensors.iter().zip(&back.tensors) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

#[test]
fn layout_on_disk() {
    let m = GatModel::<f32>::init(SMALL, &mut ChaCha8Rng::seed_from_u64(2));
    let buf = bytes_of(&m);
    assert_eq!(&buf[..8], b"NEONGAT1");
    assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 2 + 2 * 2 + 2);
    // first tensor: name, rank 2, dims, then its first value
    assert_eq!(u16::from_le_bytes(buf[16..18].try_into().unwrap()), 12);
    assert_eq!(&buf[18..30], b"input.weight");
    assert_eq!(buf[30], 2);
    assert_eq!(u32::from_le_bytes(buf[31..35].try_into().unwrap()), FEATURE_DIM as u32);
    assert_eq!(u32::from_le_bytes(buf[35..39].try_into().unwrap()), 16);
    assert_eq!(f32::from_le_bytes(buf[39..43].try_into().unwrap()), m.tensors[0][0]);
    let header_bytes: usize = SMALL.tensor_specs().iter().map(|(n, d)| 2 + n.len() + 1 + 4 * d.len()).sum();
    assert_eq!(buf.len(), 16 + header_bytes + 4 * SMALL.param_count());
}

#[test]
fn headers_list_without_data() {
    let m = GatModel::<f32>::init(GatDims::STANDARD, &mut ChaCha8Rng::seed_from_u64(3));
    let hs = read_headers(&mut bytes_of(&m).as_slice()).unwrap();
    let names: Vec<&str> = hs.iter().map(|h| h.name.as_str()).collect();
    assert_eq!(names[..4], ["input.weight", "input.bias", "layer0.weight", "layer0.attention"]);
    assert_eq!(hs[3].dims, vec![4, 128]);
    assert_eq!(hs.iter().map(TensorHeader::len).sum::<usize>(), 218_881);
    assert_eq!(dims_from_headers(&hs).unwrap(), GatDims::STANDARD);
}

#[test]
fn damaged_files_are_rejected() {
    let m = GatModel::<f32>::init(SMALL, &mut ChaCha8Rng::seed_from_u64(4));
    let good = bytes_of(&m);

    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(read_model(&mut bad.as_slice()), Err(ModelFileError::BadMagic)));

    let mut bad = good.clone();
    bad[8] = 2;
    assert!(matches!(read_model(&mut bad.as_slice()), Err(ModelFileError::UnsupportedVersion(2))));

    let cut = &good[..good.len() - 3];
    assert!(matches!(read_model(&mut &cut[..]), Err(ModelFileError::Io(_))));
    assert!(matches!(read_headers(&mut &cut[..]), Err(ModelFileError::Io(_))));

    // drop the last tensor from the count: the layout no longer matches
    let mut bad = good.clone();
    bad[12] -= 1;
    assert!(matches!(read_model(&mut bad.as_slice()), Err(ModelFileError::Layout(_))));
}

#[test]
fn save_and_load_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let m = GatModel::<f32>::init(SMALL, &mut ChaCha8Rng::seed_from_u64(5));
    save_model(&path, &m).unwrap();
    assert_eq!(load_model(&path).unwrap(), m);
    assert_eq!(list_tensors(&path).unwrap().len(), m.tensors.len());
}
