use cramer_wold::data::{
    generate, load_csv, load_idx, split, write_csv, write_idx_images, write_idx_labels,
    MixtureComponent, SyntheticKind, SyntheticSpec,
};
use cramer_wold::{Error, Sample};
use proptest::prelude::*;

/// Hand-assembled IDX image file: four 28×28 images whose pixel at flat
/// position `p` of image `i` is `(7i + p) mod 256`.
fn idx_fixture_bytes() -> Vec<u8> {
    let mut b = vec![0x00, 0x00, 0x08, 0x03];
    b.extend_from_slice(&[0, 0, 0, 4]);
    b.extend_from_slice(&[0, 0, 0, 28]);
    b.extend_from_slice(&[0, 0, 0, 28]);
    for i in 0..4usize {
        for p in 0..784usize {
            b.push(((7 * i + p) % 256) as u8);
        }
    }
    b
}

#[test]
fn idx_fixture_is_read_byte_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images-idx3-ubyte");
    let labels = dir.path().join("labels-idx1-ubyte");
    std::fs::write(&images, idx_fixture_bytes()).unwrap();
    std::fs::write(&labels, [0x00, 0x00, 0x08, 0x01, 0, 0, 0, 4, 3, 1, 4, 1]).unwrap();

    let d = load_idx(&images, Some(&labels)).unwrap();
    assert_eq!((d.len(), d.dim()), (4, 784));
    assert_eq!(d.labels.as_deref(), Some(&[3u32, 1, 4, 1][..]));
    for i in 0..4 {
        for p in [0usize, 1, 27, 28, 255, 256, 783] {
            let want = ((7 * i + p) % 256) as f64 / 255.0;
            assert_eq!(d.data.row(i)[p], want, "image {i} pixel {p}");
        }
    }

    // the writer produces the same bytes
    let pixels: Vec<u8> = idx_fixture_bytes()[16..].to_vec();
    let again = dir.path().join("again.idx");
    write_idx_images(&again, 28, 28, &pixels).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), idx_fixture_bytes());
    let lab2 = dir.path().join("lab2.idx");
    write_idx_labels(&lab2, &[3, 1, 4, 1]).unwrap();
    assert_eq!(std::fs::read(&lab2).unwrap(), std::fs::read(&labels).unwrap());
}

#[test]
fn idx_errors() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img.idx");

    let mut bad_magic = idx_fixture_bytes();
    bad_magic[3] = 0x01;
    std::fs::write(&images, &bad_magic).unwrap();
    assert!(matches!(load_idx(&images, None), Err(Error::Format { .. })));

    let truncated = &idx_fixture_bytes()[..16 + 784 * 3 + 10];
    std::fs::write(&images, truncated).unwrap();
    assert!(matches!(load_idx(&images, None), Err(Error::Format { .. })));

    std::fs::write(&images, idx_fixture_bytes()).unwrap();
    let labels = dir.path().join("lab.idx");
    write_idx_labels(&labels, &[1, 2, 3]).unwrap();
    let msg = load_idx(&images, Some(&labels)).unwrap_err().to_string();
    assert!(msg.contains('3') && msg.contains('4'), "{msg}");
}

#[test]
fn csv_examples() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    std::fs::write(&p, "1,2,3\n4,5,6\n").unwrap();
    let d = load_csv(&p, false).unwrap();
    assert_eq!((d.len(), d.dim()), (2, 3));

    std::fs::write(&p, "a,b,c\n1,2,3\n4,5,6\n").unwrap();
    let d = load_csv(&p, true).unwrap();
    assert_eq!((d.len(), d.dim()), (2, 3));

    std::fs::write(&p, "1,2,3\n4,5,6\n7,8\n").unwrap();
    let msg = load_csv(&p, false).unwrap_err().to_string();
    assert!(msg.contains("row 3"), "{msg}");

    std::fs::write(&p, "").unwrap();
    assert!(load_csv(&p, false).is_err());
}

#[test]
fn synthetic_examples() {
    let cube = generate(&SyntheticSpec {
        kind: SyntheticKind::UniformCube,
        dim: 2,
        count: 1000,
        seed: 4,
    })
    .unwrap();
    assert!(cube.data.as_flat().iter().all(|v| (-1.0..=1.0).contains(v)));

    let spec = SyntheticSpec {
        kind: SyntheticKind::GaussianMixture(vec![
            MixtureComponent {
                mean: vec![-2.0, 0.0],
                variance: 0.5,
                weight: 0.25,
            },
            MixtureComponent {
                mean: vec![2.0, 1.0],
                variance: 0.2,
                weight: 0.75,
            },
        ]),
        dim: 2,
        count: 400,
        seed: 9,
    };
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a, b);
    let ones = a.labels.as_ref().unwrap().iter().filter(|&&l| l == 1).count();
    assert!((250..350).contains(&ones), "{ones}");

    let zero = SyntheticSpec {
        count: 0,
        ..spec.clone()
    };
    assert!(generate(&zero).is_err());
    let bad_weights = SyntheticSpec {
        kind: SyntheticKind::GaussianMixture(vec![MixtureComponent {
            mean: vec![0.0, 0.0],
            variance: 1.0,
            weight: 0.5,
        }]),
        ..spec
    };
    assert!(generate(&bad_weights).is_err());
}

#[test]
fn default_split_is_ninety_ten() {
    let d = generate(&SyntheticSpec::standard_normal(3, 200, 1)).unwrap();
    let (tr, va) = split(&d, 0.1, 7).unwrap();
    assert_eq!((tr.len(), va.len()), (180, 20));
    let (tr2, va2) = split(&d, 0.1, 7).unwrap();
    assert_eq!((tr, va), (tr2, va2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip(
        dim in 1usize..6,
        values in prop::collection::vec(
            prop_oneof![-1e6f64..1e6, -1e-6f64..1e-6, (-300i32..300).prop_map(|e| 1.5 * 10f64.powi(e))],
            1..60,
        ),
    ) {
        let n = values.len() / dim;
        prop_assume!(n > 0);
        let s = Sample::from_flat(values[..n * dim].to_vec(), dim).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_csv(&s, &p).unwrap();
        let back = load_csv(&p, false).unwrap().data;
        prop_assert_eq!(back.len(), n);
        for (a, b) in s.as_flat().iter().zip(back.as_flat()) {
            prop_assert!(a == b || ((a - b) / a).abs() < 1e-15, "{} vs {}", a, b);
        }
    }
}
