mod common;

use fluxcell::mnist::{load_split, parse_idx_images, parse_idx_labels, Split, PIXELS};

#[test]
fn real_files_load_with_standard_statistics() {
    let Some(dir) = common::mnist_dir() else {
        eprintln!("MNIST files not found, skipping");
        return;
    };
    let train = load_split(&dir, Split::Train).unwrap();
    let test = load_split(&dir, Split::Test).unwrap();
    assert_eq!((train.len(), test.len()), (60_000, 10_000));
    assert_eq!(train.dim, PIXELS);
    assert!((train.mean_pixel() - 0.1307).abs() < 1e-3, "{}", train.mean_pixel());
    assert!(train.images.iter().all(|p| (0.0..=1.0).contains(p)));
    let mut counts = [0usize; 10];
    train.labels.iter().for_each(|&l| counts[l as usize] += 1);
    assert!(counts.iter().all(|&c| (5000..7000).contains(&c)), "{counts:?}");
}

#[test]
fn missing_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_split(dir.path(), Split::Test).unwrap_err().to_string();
    assert!(err.contains("t10k-images-idx3-ubyte"), "{err}");
}

#[test]
fn malformed_headers_are_rejected() {
    assert!(parse_idx_images(&[0, 0, 8]).is_err());
    assert!(parse_idx_labels(&[0, 0, 8, 3, 0, 0, 0, 0]).is_err());
    let mut labels = 0x0801u32.to_be_bytes().to_vec();
    labels.extend(2u32.to_be_bytes());
    labels.extend([3, 10]);
    assert!(parse_idx_labels(&labels).is_err());
    labels.pop();
    assert!(parse_idx_labels(&labels).is_err());
    labels.push(9);
    assert_eq!(parse_idx_labels(&labels).unwrap(), vec![3, 9]);
}
