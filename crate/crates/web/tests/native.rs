use qscene::data::{save_png, smooth_blob};
use qscene::Statevector;
use qscene_web::{baseline, image_dims, reconstruct, shot_noise};

#[test]
fn register_grid() {
    assert_eq!(image_dims(8), (16, 16));
    assert_eq!(image_dims(7), (8, 16));
}

#[test]
fn demo_image_reconstructs() {
    let r = reconstruct(&smooth_blob(32, 32), 6, 300, 0).unwrap();
    assert_eq!((r.height(), r.width()), (8, 8));
    assert_eq!((r.target().len(), r.prepared().len()), (64, 64));
    assert!(r.fidelity() > 0.95, "{}", r.fidelity());
    assert!((r.prepared().iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
    assert!(!r.loss_history().is_empty());
}

#[test]
fn uploaded_png_decodes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blob.png");
    save_png(&smooth_blob(20, 24), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let image = qscene::data::decode_image(&bytes, 0, "upload").unwrap();
    let r = reconstruct(&image, 4, 100, 1).unwrap();
    assert_eq!(r.target().len(), 16);
    assert!(qscene::data::decode_image(b"not an image", 0, "x").is_err());
}

#[test]
fn register_size_is_bounded() {
    let img = smooth_blob(64, 64);
    assert!(reconstruct(&img, 1, 10, 0).is_err());
    assert!(reconstruct(&img, 11, 10, 0).is_err());
}

#[test]
fn shot_noise_shrinks_like_inverse_root() {
    let r = reconstruct(&smooth_blob(16, 16), 4, 200, 0).unwrap();
    let shots = [100, 400, 1600, 6400];
    let l1 = shot_noise(r.state(), &shots, 50, 7).unwrap();
    assert!(l1.windows(2).all(|w| w[1] < w[0]), "{l1:?}");
    for (w, s) in l1.windows(2).zip(shots.windows(2)) {
        let ratio = w[0] / w[1] / (s[1] as f64 / s[0] as f64).sqrt();
        assert!((1.0 / 1.5..1.5).contains(&ratio), "{ratio}");
    }
    assert_eq!(shot_noise(&Statevector::new(3).unwrap(), &[10, 100], 3, 0).unwrap(), vec![0.0, 0.0]);
    assert!(shot_noise(r.state(), &[10], 0, 0).is_err());
}

#[test]
fn baseline_distribution() {
    let b = baseline(100, 0.5, 0.99, 100_000, 0).unwrap();
    assert_eq!(b.exact(), 0.62);
    assert!((b.monte_carlo() - b.exact()).abs() <= 0.01);
    assert_eq!(b.pmf().len(), 101);
    assert!((b.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(baseline(100, 0.0, 0.99, 10, 0).is_err());
}
