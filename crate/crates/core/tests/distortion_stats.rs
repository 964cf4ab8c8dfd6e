use hedge_core::distortion::{
    apply_gaussian_noise, apply_poisson_noise, distort, sample_spec, stage_rng, DistortionSpec, ImageBuffer,
    GAUSSIAN_SIGMA, POISSON_SCALE,
};

// 1000 x 334 RGB is just over a million channel values
const W: usize = 1000;
const H: usize = 334;

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn gaussian_stage_statistics() {
    let img = ImageBuffer::filled(W, H, [0.5; 3]);
    let out = apply_gaussian_noise(&img, GAUSSIAN_SIGMA, &mut stage_rng(17, 1));
    let (mean, var) = moments(out.pixels());
    let std = var.sqrt();
    assert!((0.0685..=0.0715).contains(&std), "std = {std}");
    assert!((mean - 0.5).abs() < 0.001, "mean = {mean}");
}

#[test]
fn poisson_stage_statistics() {
    let img = ImageBuffer::filled(W, H, [0.5; 3]);
    let out = apply_poisson_noise(&img, POISSON_SCALE, &mut stage_rng(23, 2));
    let (mean, var) = moments(out.pixels());
    let expected_var = 0.5 * POISSON_SCALE;
    assert!((mean - 0.5).abs() < 0.002, "mean = {mean}");
    assert!((var / expected_var - 1.0).abs() < 0.15, "var = {var}");
}

#[test]
fn sampled_specs_stay_in_range() {
    for seed in 0..20 {
        for variant in 0..50 {
            let spec = sample_spec(seed, variant);
            assert!(spec.in_range(), "{spec:?}");
            assert_eq!(spec.gaussian_sigma, GAUSSIAN_SIGMA);
            assert_eq!(spec.poisson_scale, POISSON_SCALE);
        }
    }
    assert_ne!(sample_spec(1, 0), sample_spec(1, 1));
    assert_ne!(sample_spec(1, 0), sample_spec(2, 0));
}

fn gradient(w: usize, h: usize) -> ImageBuffer {
    let mut px = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            px.extend([x as f64 / w as f64, y as f64 / h as f64, ((x + y) % 7) as f64 / 7.0]);
        }
    }
    ImageBuffer::from_pixels(w, h, px)
}

#[test]
fn full_pipeline_is_deterministic() {
    let img = gradient(48, 32);
    for variant in 0..5 {
        let spec = sample_spec(99, variant);
        let a = distort(&img, &spec);
        let b = distort(&img, &spec);
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }
    let a = distort(&img, &sample_spec(99, 0));
    let b = distort(&img, &sample_spec(99, 1));
    assert_ne!(a, b);
}

#[test]
fn identity_spec_is_a_no_op() {
    let img = gradient(20, 10);
    let out = distort(&img, &DistortionSpec::identity(5));
    for (a, b) in img.pixels().iter().zip(out.pixels()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn png_round_trip_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.png");
    let out = distort(&gradient(16, 16), &sample_spec(3, 0));
    out.save(&path).unwrap();
    let first = std::fs::read(&path).unwrap();
    distort(&gradient(16, 16), &sample_spec(3, 0)).save(&path).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());
    let back = ImageBuffer::load(&path).unwrap();
    assert_eq!((back.width(), back.height()), (16, 16));
}
