use fns_core::solver::{init_field, InitialSpec};
use fns_core::spectral::make_grid;
use fns_core::SpectralVectorField;
use fns_lab::snapshot::{decode_snapshot, encode_snapshot, HEADER_LEN};
use fns_lab::{read_field_snapshot, write_field_snapshot, LabError, SnapshotError};
use num_complex::Complex64;

fn random_field(n: usize, seed: u64) -> SpectralVectorField {
    init_field(&InitialSpec::gevrey(0.3, 0.2, seed), make_grid(2, n).unwrap()).unwrap()
}

fn bits(u: &SpectralVectorField) -> Vec<(u64, u64)> {
    u.coeffs
        .iter()
        .flatten()
        .map(|c| (c.re.to_bits(), c.im.to_bits()))
        .collect()
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.fns1");
    let u = random_field(32, 4);
    write_field_snapshot(&u, 1.5, 0.125, &path).unwrap();
    let s = read_field_snapshot(&path).unwrap();
    assert_eq!(bits(&s.field), bits(&u));
    assert_eq!((s.gamma, s.time), (1.5, 0.125));
    assert_eq!((s.field.mean_zero, s.field.div_free), (u.mean_zero, u.div_free));
    let len = std::fs::metadata(&path).unwrap().len() as usize;
    assert_eq!(len, HEADER_LEN + 2 * 32 * 32 * 16);
}

#[test]
fn header_layout_is_little_endian() {
    let u = SpectralVectorField::zeros(make_grid(3, 8).unwrap());
    let b = encode_snapshot(&u, 2.0, -1.0);
    assert_eq!(&b[..4], b"FNS1");
    assert_eq!(&b[4..8], &3u32.to_le_bytes());
    assert_eq!(&b[8..12], &8u32.to_le_bytes());
    assert_eq!(&b[12..20], &2.0f64.to_le_bytes());
    assert_eq!(&b[20..28], &(-1.0f64).to_le_bytes());
    assert_eq!(b[28], 3);
    assert_eq!(b.len(), HEADER_LEN + 3 * 512 * 16);
}

#[test]
fn payload_runs_over_ascending_wavenumbers() {
    let g = make_grid(1, 8).unwrap();
    let mut u = SpectralVectorField::zeros(g);
    u.coeffs[0][g.index_of([-4, 0, 0])] = Complex64::new(7.0, 0.0);
    u.coeffs[0][g.index_of([1, 0, 0])] = Complex64::new(0.0, 3.0);
    u.mean_zero = true;
    u.div_free = false;
    let b = encode_snapshot(&u, 1.5, 0.0);
    let at = |pos: usize| f64::from_le_bytes(b[HEADER_LEN + 8 * pos..HEADER_LEN + 8 * pos + 8].try_into().unwrap());
    // position 0 is wavenumber −4, position 5 is wavenumber 1
    assert_eq!(at(0), 7.0);
    assert_eq!(at(2 * 5 + 1), 3.0);
}

#[test]
fn truncated_file_names_both_lengths() {
    let u = random_field(16, 1);
    let mut b = encode_snapshot(&u, 1.5, 0.0);
    let full = b.len();
    b.truncate(full - 5);
    match decode_snapshot(&b) {
        Err(SnapshotError::Length { expected, actual }) => {
            assert_eq!((expected, actual), (full, full - 5));
            let msg = SnapshotError::Length { expected, actual }.to_string();
            assert!(msg.contains(&full.to_string()) && msg.contains(&(full - 5).to_string()));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn wrong_magic_is_rejected() {
    let mut b = encode_snapshot(&random_field(16, 1), 1.5, 0.0);
    b[3] = b'2';
    let e = decode_snapshot(&b).unwrap_err();
    assert_eq!(e.to_string(), "not a FNS1 snapshot");
    assert!(matches!(decode_snapshot(b"FN"), Err(SnapshotError::BadMagic)));
}

#[test]
fn flags_are_checked_against_the_data() {
    let g = make_grid(2, 16).unwrap();
    let mut u = SpectralVectorField::zeros(g);
    // (0, 1) mode in the x-component: ξ·û = 0, so solenoidal
    u.coeffs[0][g.index_of([0, 1, 0])] = Complex64::new(0.0, -0.5);
    u.coeffs[0][g.index_of([0, -1, 0])] = Complex64::new(0.0, 0.5);
    assert!(decode_snapshot(&encode_snapshot(&u, 1.5, 0.0)).is_ok());
    // the same coefficient in the y-component has divergence
    u.coeffs.swap(0, 1);
    let e = decode_snapshot(&encode_snapshot(&u, 1.5, 0.0)).unwrap_err();
    assert!(matches!(e, SnapshotError::FlagMismatch(_)), "{e}");
    u.div_free = false;
    u.coeffs[0][0] = Complex64::new(1.0, 0.0);
    let e = decode_snapshot(&encode_snapshot(&u, 1.5, 0.0)).unwrap_err();
    assert!(matches!(e, SnapshotError::FlagMismatch(_)), "{e}");
}

#[test]
fn bad_header_and_missing_file() {
    let mut b = encode_snapshot(&random_field(16, 1), 1.5, 0.0);
    b[8..12].copy_from_slice(&12u32.to_le_bytes());
    assert!(matches!(decode_snapshot(&b), Err(SnapshotError::Header(_))));
    let e = read_field_snapshot(std::path::Path::new("/nonexistent/u.fns1")).unwrap_err();
    assert!(matches!(e, LabError::Io { .. }));
}
