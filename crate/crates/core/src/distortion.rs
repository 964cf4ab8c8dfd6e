//! Deterministic visual perturbations for the noisy condition.
//!
//! A [`DistortionSpec`] is drawn from a counter-based ChaCha stream keyed by
//! `(seed, variant_index)`, so variant `k` of an image never depends on how
//! many other variants were generated. [`distort`] applies the stages in a
//! fixed order: affine, color jitter, Gaussian noise, Poisson noise.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const ROTATION_DEG: f64 = 10.0;
pub const TRANSLATE_FRAC: f64 = 0.10;
pub const SCALE_DELTA: f64 = 0.10;
pub const BRIGHTNESS: f64 = 0.20;
pub const CONTRAST: f64 = 0.20;
pub const SATURATION: f64 = 0.05;
pub const HUE_SHIFT: f64 = 0.02;
pub const GAUSSIAN_SIGMA: f64 = 0.07;
pub const POISSON_SCALE: f64 = 0.014;

const GAUSSIAN_STREAM: u64 = 1;
const POISSON_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub rotation_deg: f64,
    pub translate_frac: (f64, f64),
    pub scale_factor: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub hue_shift: f64,
    pub gaussian_sigma: f64,
    /// Shot-noise scale; `0` disables the Poisson stage.
    pub poisson_scale: f64,
    pub seed: u64,
}

impl DistortionSpec {
    /// A spec whose every stage is a no-op.
    pub fn identity(seed: u64) -> Self {
        Self {
            rotation_deg: 0.0,
            translate_frac: (0.0, 0.0),
            scale_factor: 1.0,
            brightness: 0.0,
            contrast: 0.0,
            saturation: 0.0,
            hue_shift: 0.0,
            gaussian_sigma: 0.0,
            poisson_scale: 0.0,
            seed,
        }
    }

    /// True when every sampled parameter lies inside its declared range.
    pub fn in_range(&self) -> bool {
        let within = |v: f64, r: f64| v.abs() <= r;
        within(self.rotation_deg, ROTATION_DEG)
            && within(self.translate_frac.0, TRANSLATE_FRAC)
            && within(self.translate_frac.1, TRANSLATE_FRAC)
            && within(self.scale_factor - 1.0, SCALE_DELTA + 1e-12)
            && within(self.brightness, BRIGHTNESS)
            && within(self.contrast, CONTRAST)
            && within(self.saturation, SATURATION)
            && within(self.hue_shift, HUE_SHIFT)
    }
}

pub fn sample_spec(seed: u64, variant_index: u64) -> DistortionSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(variant_index);
    let mut sym = |r: f64| rng.random_range(-r..=r);
    let rotation_deg = sym(ROTATION_DEG);
    let translate_frac = (sym(TRANSLATE_FRAC), sym(TRANSLATE_FRAC));
    let scale_factor = 1.0 + sym(SCALE_DELTA);
    let brightness = sym(BRIGHTNESS);
    let contrast = sym(CONTRAST);
    let saturation = sym(SATURATION);
    let hue_shift = sym(HUE_SHIFT);
    DistortionSpec {
        rotation_deg,
        translate_frac,
        scale_factor,
        brightness,
        contrast,
        saturation,
        hue_shift,
        gaussian_sigma: GAUSSIAN_SIGMA,
        poisson_scale: POISSON_SCALE,
        seed: rng.next_u64(),
    }
}

/// Row-major RGB image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub const CHANNELS: usize = 3;

    /// Builds an image from interleaved RGB values, clamping into `[0, 1]`.
    pub fn from_pixels(width: usize, height: usize, mut pixels: Vec<f64>) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        assert_eq!(pixels.len(), width * height * Self::CHANNELS);
        clamp_all(&mut pixels);
        Self { width, height, pixels }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.pixels[(y * self.width + x) * 3 + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.pixels[(y * self.width + x) * 3 + c] = v.clamp(0.0, 1.0);
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        let pixels = img.into_raw().into_iter().map(|b| f64::from(b) / 255.0).collect();
        Ok(Self::from_pixels(w as usize, h as usize, pixels))
    }

    /// Writes as 8-bit RGB; the format follows the file extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = RgbImage::new(self.width as u32, self.height as u32);
        for (i, px) in self.pixels.chunks_exact(3).enumerate() {
            let q = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
            let (x, y) = (i % self.width, i / self.width);
            out.put_pixel(x as u32, y as u32, Rgb([q(px[0]), q(px[1]), q(px[2])]));
        }
        out.save(path)?;
        Ok(())
    }

    fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        // edge replication
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
        let bottom = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

fn clamp_all(pixels: &mut [f64]) {
    for v in pixels {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Rotation about the image center, translation as a fraction of (W, H) and
/// uniform scaling, resampled bilinearly with edge replication.
pub fn apply_affine(img: &ImageBuffer, spec: &DistortionSpec) -> ImageBuffer {
    let (w, h) = (img.width, img.height);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let tx = spec.translate_frac.0 * w as f64;
    let ty = spec.translate_frac.1 * h as f64;
    let theta = spec.rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let inv_scale = 1.0 / spec.scale_factor;

    let mut out = vec![0.0; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            // inverse map: src = R(-theta) (dst - c - t) / s + c
            let dx = x as f64 - cx - tx;
            let dy = y as f64 - cy - ty;
            let sx = (cos * dx + sin * dy) * inv_scale + cx;
            let sy = (-sin * dx + cos * dy) * inv_scale + cy;
            for c in 0..3 {
                out[(y * w + x) * 3 + c] = img.sample_bilinear(sx, sy, c);
            }
        }
    }
    ImageBuffer::from_pixels(w, h, out)
}

/// brightness, then contrast, then saturation and hue in HSV space.
pub fn apply_color_jitter(img: &ImageBuffer, spec: &DistortionSpec) -> ImageBuffer {
    let mut pixels = img.pixels.clone();
    let do_hsv = spec.saturation != 0.0 || spec.hue_shift != 0.0;
    for px in pixels.chunks_exact_mut(3) {
        for v in px.iter_mut() {
            *v = (*v + spec.brightness).clamp(0.0, 1.0);
            *v = ((*v - 0.5) * (1.0 + spec.contrast) + 0.5).clamp(0.0, 1.0);
        }
        if do_hsv {
            let (h, s, v) = rgb_to_hsv(px[0], px[1], px[2]);
            let s = (s * (1.0 + spec.saturation)).clamp(0.0, 1.0);
            let h = (h + spec.hue_shift).rem_euclid(1.0);
            let (r, g, b) = hsv_to_rgb(h, s, v);
            px.copy_from_slice(&[r, g, b]);
        }
    }
    ImageBuffer::from_pixels(img.width, img.height, pixels)
}

pub fn apply_gaussian_noise<R: Rng + ?Sized>(img: &ImageBuffer, sigma: f64, rng: &mut R) -> ImageBuffer {
    if sigma <= 0.0 {
        return img.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    let pixels = img.pixels.iter().map(|&x| x + normal.sample(rng)).collect();
    ImageBuffer::from_pixels(img.width, img.height, pixels)
}

/// Shot noise: `x -> Poisson(x / scale) * scale`.
pub fn apply_poisson_noise<R: Rng + ?Sized>(img: &ImageBuffer, scale: f64, rng: &mut R) -> ImageBuffer {
    if scale <= 0.0 {
        return img.clone();
    }
    let pixels = img
        .pixels
        .iter()
        .map(|&x| {
            let lambda = x / scale;
            if lambda <= 0.0 {
                return 0.0;
            }
            let dist = Poisson::new(lambda).expect("finite positive rate");
            dist.sample(rng) * scale
        })
        .collect();
    ImageBuffer::from_pixels(img.width, img.height, pixels)
}

/// Seeded generator for one noise stage of a spec.
pub fn stage_rng(spec_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec_seed);
    rng.set_stream(stream);
    rng
}

pub fn distort(img: &ImageBuffer, spec: &DistortionSpec) -> ImageBuffer {
    let out = apply_affine(img, spec);
    let out = apply_color_jitter(&out, spec);
    let out = apply_gaussian_noise(&out, spec.gaussian_sigma, &mut stage_rng(spec.seed, GAUSSIAN_STREAM));
    apply_poisson_noise(&out, spec.poisson_scale, &mut stage_rng(spec.seed, POISSON_STREAM))
}

/// One generated variant, as recorded in the audit manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: String,
    pub variant_index: u64,
    pub output: String,
    pub spec: DistortionSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionManifest {
    pub seed: u64,
    pub variants_per_image: usize,
    pub entries: Vec<ManifestEntry>,
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let hp = h * 6.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> ImageBuffer {
        let mut px = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                px.push(x as f64 / w as f64);
                px.push(y as f64 / h as f64);
                px.push(((x + y) % 7) as f64 / 7.0);
            }
        }
        ImageBuffer::from_pixels(w, h, px)
    }

    fn max_abs_diff(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
        a.pixels()
            .iter()
            .zip(b.pixels())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_spec(42, 7);
        let b = sample_spec(42, 7);
        assert_eq!(a, b);
        assert_eq!(a.rotation_deg.to_bits(), b.rotation_deg.to_bits());
    }

    #[test]
    fn sampled_specs_stay_in_range() {
        for i in 0..10_000 {
            let s = sample_spec(9, i);
            assert!(s.in_range(), "{s:?}");
            assert_eq!(s.gaussian_sigma, 0.07);
            assert_eq!(s.poisson_scale, 0.014);
        }
    }

    #[test]
    fn variants_differ() {
        let specs: Vec<_> = (0..100).map(|i| sample_spec(1, i)).collect();
        for i in 0..specs.len() {
            for j in i + 1..specs.len() {
                assert_ne!(specs[i], specs[j], "variants {i} and {j} collide");
            }
        }
    }

    #[test]
    fn affine_identity() {
        let img = gradient(17, 11);
        let out = apply_affine(&img, &DistortionSpec::identity(0));
        assert!(max_abs_diff(&img, &out) < 1e-6);
    }

    #[test]
    fn rotation_keeps_constant_image() {
        let img = ImageBuffer::filled(20, 14, [0.3, 0.6, 0.9]);
        let mut spec = DistortionSpec::identity(0);
        spec.rotation_deg = 10.0;
        let once = apply_affine(&img, &spec);
        spec.rotation_deg = -10.0;
        let back = apply_affine(&once, &spec);
        assert!(max_abs_diff(&img, &back) < 1e-12);
    }

    #[test]
    fn translation_moves_centroid() {
        let (w, h) = (64, 48);
        let mut img = ImageBuffer::filled(w, h, [0.0; 3]);
        for c in 0..3 {
            img.set(20, 18, c, 1.0);
        }
        let mut spec = DistortionSpec::identity(0);
        spec.translate_frac = (0.1, -0.07);
        let out = apply_affine(&img, &spec);
        let centroid = |im: &ImageBuffer| {
            let (mut sx, mut sy, mut m) = (0.0, 0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let v = im.get(x, y, 0);
                    sx += v * x as f64;
                    sy += v * y as f64;
                    m += v;
                }
            }
            (sx / m, sy / m)
        };
        let (x0, y0) = centroid(&img);
        let (x1, y1) = centroid(&out);
        assert!((x1 - x0 - 0.1 * w as f64).abs() < 1.0);
        assert!((y1 - y0 + 0.07 * h as f64).abs() < 1.0);
    }

    #[test]
    fn jitter_identity_and_formulas() {
        let img = gradient(9, 9);
        let out = apply_color_jitter(&img, &DistortionSpec::identity(0));
        assert!(max_abs_diff(&img, &out) < 1e-6);

        let gray = ImageBuffer::filled(4, 4, [0.5; 3]);
        let mut spec = DistortionSpec::identity(0);
        spec.brightness = 0.2;
        let out = apply_color_jitter(&gray, &spec);
        assert!(out.pixels().iter().all(|&v| (v - 0.7).abs() < 1e-12));

        let mut spec = DistortionSpec::identity(0);
        spec.contrast = 0.2;
        let dark = ImageBuffer::filled(2, 2, [0.25; 3]);
        let out = apply_color_jitter(&dark, &spec);
        assert!((out.get(0, 0, 0) - 0.2).abs() < 1e-12);

        let mut spec = DistortionSpec::identity(0);
        spec.saturation = -0.05;
        let out = apply_color_jitter(&gray, &spec);
        assert!(max_abs_diff(&gray, &out) < 1e-12);
    }

    #[test]
    fn hsv_round_trip() {
        let img = gradient(13, 7);
        for px in img.pixels().chunks_exact(3) {
            let (h, s, v) = rgb_to_hsv(px[0], px[1], px[2]);
            let (r, g, b) = hsv_to_rgb(h, s, v);
            assert!((r - px[0]).abs() < 1e-9 && (g - px[1]).abs() < 1e-9 && (b - px[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_edge_cases() {
        let img = gradient(8, 8);
        let out = apply_gaussian_noise(&img, 0.0, &mut stage_rng(1, 1));
        assert_eq!(out, img);
        let black = ImageBuffer::filled(8, 8, [0.0; 3]);
        let out = apply_poisson_noise(&black, 0.014, &mut stage_rng(1, 2));
        assert!(out.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn distort_identity_and_determinism() {
        let img = gradient(24, 16);
        let out = distort(&img, &DistortionSpec::identity(3));
        assert!(max_abs_diff(&img, &out) < 1e-6);

        let spec = sample_spec(5, 0);
        let a = distort(&img, &spec);
        let b = distort(&img, &spec);
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|v| (0.0..=1.0).contains(v)));

        let other = sample_spec(6, 0);
        assert!(max_abs_diff(&a, &distort(&img, &other)) > 0.0);
    }

    #[test]
    fn png_round_trip_quantizes_to_8_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let img = gradient(10, 6);
        img.save(&path).unwrap();
        let back = ImageBuffer::load(&path).unwrap();
        assert_eq!((back.width(), back.height()), (10, 6));
        assert!(max_abs_diff(&img, &back) <= 0.5 / 255.0 + 1e-12);
    }
}
