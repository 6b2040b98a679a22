//! Image ingestion, preprocessing, synthetic datasets and splits.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{QsError, Result};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

const RASTER_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "bmp"];

/// Grayscale image with pixel values in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    pub label: usize,
    pub source_id: String,
}

impl ImageTensor {
    pub fn new(
        height: usize,
        width: usize,
        pixels: Vec<f64>,
        label: usize,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(QsError::contract("image dimensions must be nonzero"));
        }
        if pixels.len() != height * width {
            return Err(QsError::contract(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
            return Err(QsError::contract(format!(
                "pixel {i} = {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self { height, width, pixels, label, source_id: source_id.into() })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        label: usize,
        source_id: impl Into<String>,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let pixels = (0..height * width).map(|i| f(i / width, i % width)).collect();
        Self::new(height, width, pixels, label, source_id)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Row-major copy of the `h × w` window whose top-left corner is `(row, col)`.
    pub fn window(&self, row: usize, col: usize, h: usize, w: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(h * w);
        for r in row..row + h {
            out.extend_from_slice(&self.pixels[r * self.width + col..r * self.width + col + w]);
        }
        out
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<ImageTensor>,
    pub class_names: Vec<String>,
    pub split_tag: SplitTag,
}

impl Dataset {
    pub fn new(samples: Vec<ImageTensor>, class_names: Vec<String>, split_tag: SplitTag) -> Result<Self> {
        let ds = Self { samples, class_names, split_tag };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.samples.iter().find(|s| s.label >= self.class_names.len()) {
            return Err(QsError::contract(format!(
                "sample {} has label {} but only {} classes",
                s.source_id,
                s.label,
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Applies [`preprocess`] to every sample.
    pub fn preprocessed(&self, target: (usize, usize)) -> Result<Dataset> {
        let samples = self
            .samples
            .iter()
            .map(|s| preprocess(s, target))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { samples, class_names: self.class_names.clone(), split_tag: self.split_tag })
    }
}

pub fn luminance(rgb: [f32; 3]) -> f64 {
    LUMA_WEIGHTS[0] * rgb[0] as f64 + LUMA_WEIGHTS[1] * rgb[1] as f64 + LUMA_WEIGHTS[2] * rgb[2] as f64
}

/// Decodes a raster file into a grayscale [`ImageTensor`].
pub fn load_image(path: &Path, label: usize, source_id: impl Into<String>) -> Result<ImageTensor> {
    let file_err = |message: String| QsError::File { path: path.to_path_buf(), message };
    let bytes = fs::read(path).map_err(|e| file_err(e.to_string()))?;
    decode_image(&bytes, label, source_id).map_err(|e| file_err(e.to_string()))
}

/// Decodes an in-memory PNG, BMP or PNM file, format guessed from its header.
pub fn decode_image(bytes: &[u8], label: usize, source_id: impl Into<String>) -> Result<ImageTensor> {
    let img = image::load_from_memory(bytes).map_err(|e| QsError::Degenerate(format!("undecodable image: {e}")))?;
    let rgb = img.to_rgb32f();
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| luminance(p.0).clamp(0.0, 1.0)).collect();
    ImageTensor::new(h as usize, w as usize, pixels, label, source_id)
}

/// Writes `image` as a 16-bit grayscale PNG.
pub fn save_png(image: &ImageTensor, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(image.width as u32, image.height as u32, |x, y| {
            Luma([(image.pixel(y as usize, x as usize) * 65535.0).round() as u16])
        });
    buf.save(path).map_err(|e| QsError::File { path: path.to_path_buf(), message: e.to_string() })
}

/// Result of [`ingest_directory`]: the dataset plus files that could not be read.
#[derive(Debug)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub failures: Vec<QsError>,
}

/// Reads `root/<class>/*.{png,pgm,ppm,bmp}`. Classes are the given
/// subdirectories (or all of them), labelled in lexicographic order. Unreadable
/// files are reported and skipped.
pub fn ingest_directory(root: &Path, class_subdirs: Option<&[String]>) -> Result<IngestReport> {
    let mut classes: Vec<String> = match class_subdirs {
        Some(c) => c.to_vec(),
        None => {
            let mut names = Vec::new();
            for entry in fs::read_dir(root).map_err(|e| QsError::File {
                path: root.to_path_buf(),
                message: e.to_string(),
            })? {
                let entry = entry?;
                if entry.file_type()?.is_dir() {
                    names.push(entry.file_name().to_string_lossy().into_owned());
                }
            }
            names
        }
    };
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(QsError::contract(format!(
            "{} has {} class director{}, need at least 2",
            root.display(),
            classes.len(),
            if classes.len() == 1 { "y" } else { "ies" }
        )));
    }

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (label, class) in classes.iter().enumerate() {
        let dir = root.join(class);
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| QsError::File { path: dir.clone(), message: e.to_string() })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| RASTER_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        files.sort();
        let before = samples.len();
        for path in files {
            let name = path.file_name().unwrap_or_default().to_string_lossy();
            match load_image(&path, label, format!("{class}/{name}")) {
                Ok(img) => samples.push(img),
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    failures.push(e);
                }
            }
        }
        if samples.len() == before {
            return Err(QsError::contract(format!("class directory {} has no readable images", dir.display())));
        }
    }
    Ok(IngestReport {
        dataset: Dataset::new(samples, classes, SplitTag::Train)?,
        failures,
    })
}

/// Average pooling of a row-major `h × w` grid down to `th × tw`; both target
/// dimensions must divide the source dimensions.
pub fn average_pool(pixels: &[f64], h: usize, w: usize, th: usize, tw: usize) -> Result<Vec<f64>> {
    if th == 0 || tw == 0 || !h.is_multiple_of(th) || !w.is_multiple_of(tw) {
        return Err(QsError::contract(format!("cannot pool {h}x{w} to {th}x{tw}")));
    }
    let (ch, cw) = (h / th, w / tw);
    let area = (ch * cw) as f64;
    let mut out = vec![0.0; th * tw];
    for (r, row) in pixels.chunks(w).enumerate() {
        for (c, v) in row.iter().enumerate() {
            out[(r / ch) * tw + c / cw] += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= area);
    Ok(out)
}

/// Downsamples to `target = (height, width)` by average pooling, then rescales
/// so the brightest pixel is 1. Sources whose dimensions are not multiples of
/// the target are center-cropped to the largest multiple first.
pub fn preprocess(image: &ImageTensor, target: (usize, usize)) -> Result<ImageTensor> {
    let (th, tw) = target;
    if th == 0 || tw == 0 || th > image.height || tw > image.width {
        return Err(QsError::contract(format!(
            "cannot resample {}x{} to {th}x{tw}",
            image.height, image.width
        )));
    }
    let (ch, cw) = ((image.height / th) * th, (image.width / tw) * tw);
    let (r0, c0) = ((image.height - ch) / 2, (image.width - cw) / 2);
    let cropped = image.window(r0, c0, ch, cw);
    let mut pooled = average_pool(&cropped, ch, cw, th, tw)?;
    let max = pooled.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(QsError::Degenerate(format!("{} is entirely black", image.source_id)));
    }
    pooled.iter_mut().for_each(|v| *v = (*v / max).min(1.0));
    ImageTensor::new(th, tw, pooled, image.label, image.source_id.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two classes with mean intensity 0.75 and 0.25.
    BrightVsDark,
    /// Four orientations of a linear intensity ramp.
    Gradient4Class,
}

impl SyntheticKind {
    pub fn class_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            SyntheticKind::BrightVsDark => &["bright", "dark"],
            SyntheticKind::Gradient4Class => &["ramp_down", "ramp_left", "ramp_right", "ramp_up"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    fn template(self, label: usize, r: usize, c: usize, h: usize, w: usize) -> f64 {
        let frac = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let ramp = |t: f64| 0.1 + 0.8 * t;
        match (self, label) {
            (SyntheticKind::BrightVsDark, 0) => 0.75,
            (SyntheticKind::BrightVsDark, _) => 0.25,
            (SyntheticKind::Gradient4Class, 0) => ramp(frac(r, h)),
            (SyntheticKind::Gradient4Class, 1) => ramp(1.0 - frac(c, w)),
            (SyntheticKind::Gradient4Class, 2) => ramp(frac(c, w)),
            (SyntheticKind::Gradient4Class, _) => ramp(1.0 - frac(r, h)),
        }
    }
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::BrightVsDark => "bright_vs_dark",
            SyntheticKind::Gradient4Class => "gradient_4class",
        }
    }
}

impl std::fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = QsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bright_vs_dark" => Ok(SyntheticKind::BrightVsDark),
            "gradient_4class" => Ok(SyntheticKind::Gradient4Class),
            _ => Err(QsError::contract(format!("unknown synthetic kind `{s}` (bright_vs_dark, gradient_4class)"))),
        }
    }
}

/// Seeded synthetic dataset: per-class template plus uniform noise in
/// `[-noise, noise]`, clamped to `[0, 1]`.
pub fn make_synthetic(
    kind: SyntheticKind,
    n_per_class: usize,
    shape: (usize, usize),
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(QsError::contract("n_per_class must be at least 1"));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(QsError::contract(format!("noise {noise} outside [0, 1]")));
    }
    let names = kind.class_names();
    let (h, w) = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_per_class * names.len());
    for (label, name) in names.iter().enumerate() {
        for i in 0..n_per_class {
            let pixels = (0..h * w)
                .map(|p| {
                    let jitter = if noise > 0.0 { rng.random_range(-noise..=noise) } else { 0.0 };
                    (kind.template(label, p / w, p % w, h, w) + jitter).clamp(0.0, 1.0)
                })
                .collect();
            samples.push(ImageTensor::new(h, w, pixels, label, format!("{name}/{i:04}"))?);
        }
    }
    Dataset::new(samples, names, SplitTag::Train)
}

/// Smooth test image: an off-center Gaussian bump over a dim background.
pub fn smooth_blob(height: usize, width: usize) -> ImageTensor {
    let (cy, cx) = (0.4 * height as f64, 0.6 * width as f64);
    let sigma2 = 2.0 * (0.3 * height.max(width) as f64).powi(2);
    ImageTensor::from_fn(height, width, 0, "smooth_blob", |r, c| {
        let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
        0.15 + 0.85 * (-d2 / sigma2).exp()
    })
    .expect("blob pixels lie in [0, 1]")
}

/// Stratified, seeded train/val/test partition.
pub fn split(dataset: &Dataset, fractions: [f64; 3], seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    if fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(QsError::contract(format!("split fractions {fractions:?} must all be positive")));
    }
    if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(QsError::contract(format!("split fractions {fractions:?} do not sum to 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for class in 0..dataset.n_classes() {
        let mut idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.samples[i].label == class).collect();
        let n = idx.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            return Err(QsError::contract(format!(
                "class {} has {n} samples, fewer than the 3 splits",
                dataset.class_names[class]
            )));
        }
        idx.shuffle(&mut rng);
        let n_val = ((fractions[1] * n as f64).round() as usize).max(1);
        let n_test = ((fractions[2] * n as f64).round() as usize).max(1);
        let n_train = n.saturating_sub(n_val + n_test).max(1);
        let n_val = n_val.min(n - n_train - 1);
        parts[0].extend_from_slice(&idx[..n_train]);
        parts[1].extend_from_slice(&idx[n_train..n_train + n_val]);
        parts[2].extend_from_slice(&idx[n_train + n_val..]);
    }
    let tags = [SplitTag::Train, SplitTag::Val, SplitTag::Test];
    let mut out = parts.into_iter().zip(tags).map(|(mut ix, tag)| {
        ix.sort_unstable();
        Dataset {
            samples: ix.into_iter().map(|i| dataset.samples[i].clone()).collect(),
            class_names: dataset.class_names.clone(),
            split_tag: tag,
        }
    });
    Ok((out.next().unwrap(), out.next().unwrap(), out.next().unwrap()))
}

/// Magic bytes of the preprocessed-tensor cache.
pub const CACHE_MAGIC: &[u8; 8] = b"QSCNTNSR";
pub const CACHE_VERSION: u32 = 1;

/// Writes the little-endian tensor cache (layout documented in the README).
pub fn write_cache(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    let put_str = |buf: &mut Vec<u8>, s: &str| {
        buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
        buf.extend_from_slice(s.as_bytes());
    };
    buf.extend_from_slice(&(dataset.class_names.len() as u32).to_le_bytes());
    for name in &dataset.class_names {
        put_str(&mut buf, name);
    }
    buf.extend_from_slice(&(dataset.samples.len() as u64).to_le_bytes());
    for s in &dataset.samples {
        buf.extend_from_slice(&(s.label as u32).to_le_bytes());
        put_str(&mut buf, &s.source_id);
        buf.extend_from_slice(&(s.height as u32).to_le_bytes());
        buf.extend_from_slice(&(s.width as u32).to_le_bytes());
        for p in &s.pixels {
            buf.extend_from_slice(&p.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            QsError::Corrupt(format!("tensor cache truncated at byte {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| QsError::Corrupt(e.to_string()))
    }
}

pub fn read_cache(path: &Path) -> Result<Dataset> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(8)? != CACHE_MAGIC {
        return Err(QsError::Corrupt(format!("{} is not a tensor cache", path.display())));
    }
    let version = cur.u32()?;
    if version != CACHE_VERSION {
        return Err(QsError::Version { found: version.to_string(), expected: CACHE_VERSION.to_string() });
    }
    let n_classes = cur.u32()? as usize;
    let class_names = (0..n_classes).map(|_| cur.string()).collect::<Result<Vec<_>>>()?;
    let n_samples = cur.u64()? as usize;
    let mut samples = Vec::with_capacity(n_samples.min(1 << 20));
    for _ in 0..n_samples {
        let label = cur.u32()? as usize;
        let id = cur.string()?;
        let h = cur.u32()? as usize;
        let w = cur.u32()? as usize;
        let pixels = (0..h * w).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        samples.push(ImageTensor::new(h, w, pixels, label, id).map_err(|e| QsError::Corrupt(e.to_string()))?);
    }
    if cur.pos != bytes.len() {
        return Err(QsError::Corrupt("trailing bytes after tensor cache".into()));
    }
    Dataset::new(samples, class_names, SplitTag::Train)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(ImageTensor::new(1, 2, vec![0.5, 1.5], 0, "x").is_err());
        assert!(ImageTensor::new(1, 2, vec![0.5, f64::NAN], 0, "x").is_err());
        assert!(ImageTensor::new(2, 2, vec![0.5; 3], 0, "x").is_err());
    }

    #[test]
    fn synthetic_kind_names_round_trip() {
        for k in [SyntheticKind::BrightVsDark, SyntheticKind::Gradient4Class] {
            assert_eq!(k.to_string().parse::<SyntheticKind>().unwrap(), k);
        }
        assert!("stripes".parse::<SyntheticKind>().is_err());
    }

    #[test]
    fn checkerboard_pools_to_half() {
        let board: Vec<f64> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as f64).collect();
        let pooled = average_pool(&board, 4, 4, 2, 2).unwrap();
        assert!(pooled.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let img = ImageTensor::new(4, 4, board, 0, "board").unwrap();
        let out = preprocess(&img, (2, 2)).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_image_rescales_to_one() {
        let img = ImageTensor::from_fn(8, 8, 0, "c", |_, _| 0.3).unwrap();
        let out = preprocess(&img, (4, 2)).unwrap();
        assert!(out.pixels().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn black_and_upscale_rejected() {
        let black = ImageTensor::from_fn(4, 4, 0, "b", |_, _| 0.0).unwrap();
        assert!(matches!(preprocess(&black, (2, 2)), Err(QsError::Degenerate(_))));
        let small = ImageTensor::from_fn(2, 2, 0, "s", |_, _| 0.5).unwrap();
        assert!(matches!(preprocess(&small, (4, 4)), Err(QsError::Contract(_))));
    }

    #[test]
    fn non_divisible_dims_center_crop() {
        // 5x5 -> 2x2 crops the central 4x4 (rows/cols 0..4 with offset 0).
        let img = ImageTensor::from_fn(5, 5, 0, "odd", |r, c| if r == 4 || c == 4 { 1.0 } else { 0.5 }).unwrap();
        let out = preprocess(&img, (2, 2)).unwrap();
        assert!(out.pixels().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn n_equals_twenty_downsample_rule() {
        let side = 1usize << (20 / 2);
        assert_eq!((side, side), (1024, 1024));
    }

    #[test]
    fn synthetic_noise_free_templates() {
        let ds = make_synthetic(SyntheticKind::Gradient4Class, 3, (4, 4), 0.0, 1).unwrap();
        let mut distinct: Vec<Vec<u64>> = ds
            .samples
            .iter()
            .map(|s| s.pixels().iter().map(|p| p.to_bits()).collect())
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
        let ds = make_synthetic(SyntheticKind::BrightVsDark, 3, (4, 4), 0.0, 1).unwrap();
        assert_eq!(ds.class_counts(), vec![3, 3]);
    }

    #[test]
    fn bright_vs_dark_separation() {
        let ds = make_synthetic(SyntheticKind::BrightVsDark, 50, (16, 16), 0.1, 7).unwrap();
        assert_eq!(ds.len(), 100);
        let mean_of = |label| {
            let v: Vec<f64> = ds.samples.iter().filter(|s| s.label == label).map(|s| s.mean()).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_of(0) - mean_of(1) >= 0.3);
        assert_eq!(ds, make_synthetic(SyntheticKind::BrightVsDark, 50, (16, 16), 0.1, 7).unwrap());
    }

    #[test]
    fn stratified_split_counts() {
        let ds = make_synthetic(SyntheticKind::BrightVsDark, 50, (2, 2), 0.1, 3).unwrap();
        let (tr, va, te) = split(&ds, [0.6, 0.2, 0.2], 5).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (60, 20, 20));
        assert_eq!(tr.class_counts(), vec![30, 30]);
        assert_eq!(va.class_counts(), vec![10, 10]);
        assert_eq!(te.class_counts(), vec![10, 10]);
        let again = split(&ds, [0.6, 0.2, 0.2], 5).unwrap();
        assert_eq!(tr, again.0);
        assert!(split(&ds, [1.0, 0.0, 0.0], 5).is_err());
    }

    #[test]
    fn split_needs_three_per_class() {
        let ds = make_synthetic(SyntheticKind::BrightVsDark, 2, (2, 2), 0.0, 3).unwrap();
        assert!(matches!(split(&ds, [0.6, 0.2, 0.2], 1), Err(QsError::Contract(_))));
    }

    #[test]
    fn cache_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        let ds = make_synthetic(SyntheticKind::Gradient4Class, 2, (3, 5), 0.05, 9).unwrap();
        write_cache(&path, &ds).unwrap();
        assert_eq!(read_cache(&path).unwrap(), ds);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_cache(&path), Err(QsError::Corrupt(_))));
    }
}
