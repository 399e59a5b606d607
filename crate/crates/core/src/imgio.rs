//! Grayscale image loading, intensity normalization, bit-depth quantization,
//! nearest-neighbor resampling and lesion masks.
//!
//! Masked pixels model lesion regions that were cut out of an image; every
//! downstream texture operation skips them entirely.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Supported on-disk formats for [`load_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary PGM (magic `P5`), 8-bit.
    Pgm,
    /// Single-channel 8-bit PNG.
    PngGray,
}

/// Quantized 2-D intensity grid with an optional validity mask.
///
/// Pixel values are bin indices in `[0, levels-1]`. When `mask` is present,
/// `mask[i] == true` marks a valid pixel; invalid pixels are excluded from
/// statistics and pair counting.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    levels: usize,
    pixels: Vec<u16>,
    mask: Option<Vec<bool>>,
}

impl GrayImage {
    /// Build an image from raw parts, checking the type invariants.
    pub fn new(
        width: usize,
        height: usize,
        levels: usize,
        pixels: Vec<u16>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRecord("image dimensions must be >= 1".into()));
        }
        if levels < 2 {
            return Err(Error::InvalidRecord("gray level count must be >= 2".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{}", pixels.len()),
            });
        }
        if let Some(m) = &mask {
            if m.len() != pixels.len() {
                return Err(Error::DimensionMismatch {
                    expected: format!("mask of {} entries", pixels.len()),
                    actual: format!("{}", m.len()),
                });
            }
        }
        let img = GrayImage { width, height, levels, pixels, mask };
        for (idx, &v) in img.pixels.iter().enumerate() {
            if img.is_valid_index(idx) && usize::from(v) >= levels {
                return Err(Error::InvalidRecord(format!(
                    "pixel {idx} value {v} outside [0, {}]",
                    levels - 1
                )));
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of gray levels `N_g`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Row-major pixel grid.
    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }

    /// True when the pixel at `(row, col)` is unmasked.
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.is_valid_index(row * self.width + col)
    }

    fn is_valid_index(&self, idx: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[idx])
    }

    /// Count of unmasked pixels.
    pub fn valid_count(&self) -> usize {
        match &self.mask {
            None => self.pixels.len(),
            Some(m) => m.iter().filter(|&&v| v).count(),
        }
    }

    /// Copy of this image with the mask dropped (all pixels valid).
    pub fn without_mask(&self) -> GrayImage {
        GrayImage { mask: None, ..self.clone() }
    }
}

/// Load an 8-bit single-channel image; the result always has `levels = 256`
/// and no mask.
pub fn load_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<GrayImage> {
    match format {
        ImageFormat::Pgm => load_pgm(path),
        ImageFormat::PngGray => load_png_gray(path),
    }
}

/// Load choosing the format from the file extension (`.pgm` / `.png`).
pub fn load_image_auto(path: impl AsRef<Path>) -> Result<GrayImage> {
    let p = path.as_ref();
    match p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "pgm" => load_pgm(p),
        Some(ext) if ext == "png" => load_png_gray(p),
        other => Err(Error::ImageFormat(format!(
            "unrecognized extension {:?} for {}",
            other,
            p.display()
        ))),
    }
}

fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&data)
}

/// Parse a binary `P5` PGM. Comments (`#` to end of line) are allowed in the
/// header; maxval must fit in one byte.
pub fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let magic = next_token(data, &mut pos)
        .ok_or_else(|| Error::ImageFormat("truncated PGM header".into()))?;
    if magic != b"P5" {
        return Err(Error::ImageFormat(format!(
            "bad magic {:?}, only binary PGM (P5) is supported",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_header_int(data, &mut pos)?;
    let height = parse_header_int(data, &mut pos)?;
    let maxval = parse_header_int(data, &mut pos)?;
    if maxval > 255 {
        return Err(Error::BitDepth(16));
    }
    if maxval == 0 {
        return Err(Error::ImageFormat("PGM maxval must be >= 1".into()));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::ImageFormat("image dimensions overflow".into()))?;
    let raster = data
        .get(pos..pos + n)
        .ok_or_else(|| Error::ImageFormat("truncated PGM raster".into()))?;
    let pixels = raster.iter().map(|&b| u16::from(b)).collect();
    GrayImage::new(width, height, 256, pixels, None)
}

fn next_token<'a>(data: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &data[start..*pos])
}

fn parse_header_int(data: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = next_token(data, pos)
        .ok_or_else(|| Error::ImageFormat("truncated PGM header".into()))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::ImageFormat("malformed PGM header field".into()))
}

/// Write a binary `P5` PGM with maxval 255. The write is atomic
/// (temp file + rename) so reruns never expose partial output.
pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(32 + img.pixels.len());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes());
    for &v in &img.pixels {
        out.push(u8::try_from(v.min(255)).unwrap());
    }
    write_atomic(path, &out)
}

fn load_png_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let dynimg = image::load_from_memory_with_format(&buf, image::ImageFormat::Png)
        .map_err(|e| Error::ImageFormat(format!("png decode failed: {e}")))?;
    match dynimg {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let pixels = img.into_raw().into_iter().map(u16::from).collect();
            GrayImage::new(w, h, 256, pixels, None)
        }
        image::DynamicImage::ImageLuma16(_) => Err(Error::BitDepth(16)),
        _ => Err(Error::MultiChannel),
    }
}

/// Rescale intensities so that `M`, the mean of the `ceil(top_fraction * n)`
/// largest unmasked values, maps to the top bin. Values above `M` clamp to
/// the top bin; masked pixels are untouched.
pub fn normalize_intensity(img: &GrayImage, top_fraction: f64) -> Result<GrayImage> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("top_fraction {top_fraction} not in (0, 1]")));
    }
    let mut valid: Vec<u16> = match img.mask() {
        None => img.pixels.clone(),
        Some(m) => img
            .pixels
            .iter()
            .zip(m)
            .filter_map(|(&v, &ok)| ok.then_some(v))
            .collect(),
    };
    if valid.is_empty() {
        return Err(Error::AllMasked);
    }
    valid.sort_unstable_by(|a, b| b.cmp(a));
    let top_n = ((top_fraction * valid.len() as f64).ceil() as usize).max(1);
    let m: f64 = valid[..top_n].iter().map(|&v| f64::from(v)).sum::<f64>() / top_n as f64;
    let top_bin = (img.levels - 1) as f64;

    let mut out = img.clone();
    for (idx, v) in out.pixels.iter_mut().enumerate() {
        if !img.is_valid_index(idx) {
            continue;
        }
        // A uniformly zero image has M = 0; treat 0/0 as a full-scale ratio,
        // consistent with the constant-image rule.
        let ratio = if m == 0.0 { 1.0 } else { (f64::from(*v) / m).min(1.0) };
        *v = (ratio * top_bin).round() as u16;
    }
    Ok(out)
}

/// Reduce bit depth: `levels` must be a power of two (`2^source_bpp`) and the
/// target may not exceed the source. Values map via `floor(v * new / old)`.
pub fn quantize(img: &GrayImage, target_bpp: u8) -> Result<GrayImage> {
    let source_bpp = match img.levels {
        l if l.is_power_of_two() => l.trailing_zeros() as u8,
        _ => {
            return Err(Error::InvalidRecord(format!(
                "levels {} is not a power of two",
                img.levels
            )))
        }
    };
    if !(1..=8).contains(&target_bpp) || target_bpp > source_bpp {
        return Err(Error::BadBpp { target: target_bpp, source_bpp });
    }
    let new_levels = 1usize << target_bpp;
    let mut out = img.clone();
    out.levels = new_levels;
    for v in &mut out.pixels {
        *v = ((usize::from(*v) * new_levels) / img.levels) as u16;
    }
    Ok(out)
}

/// Mark lesion pixels invalid using a same-size binary mask image
/// (0 = valid, nonzero = lesion). Combines with any existing mask.
pub fn apply_mask(img: &GrayImage, mask_path: impl AsRef<Path>) -> Result<GrayImage> {
    let mask_img = load_image_auto(mask_path)?;
    apply_mask_image(img, &mask_img)
}

/// In-memory variant of [`apply_mask`].
pub fn apply_mask_image(img: &GrayImage, mask_img: &GrayImage) -> Result<GrayImage> {
    if (mask_img.width, mask_img.height) != (img.width, img.height) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", img.width, img.height),
            actual: format!("{}x{}", mask_img.width, mask_img.height),
        });
    }
    let on_value = mask_img.pixels.iter().copied().find(|&v| v != 0);
    if let Some(on) = on_value {
        if mask_img.pixels.iter().any(|&v| v != 0 && v != on) {
            return Err(Error::NonBinaryMask);
        }
    }
    let mut out = img.clone();
    let prev = img.mask.clone().unwrap_or_else(|| vec![true; img.pixels.len()]);
    out.mask = Some(
        prev.iter()
            .zip(&mask_img.pixels)
            .map(|(&was_valid, &m)| was_valid && m == 0)
            .collect(),
    );
    Ok(out)
}

/// Nearest-neighbor resample. An output pixel inherits the validity of the
/// source pixel it samples, so masked regions never bleed into valid ones.
pub fn resample(img: &GrayImage, w: usize, h: usize) -> Result<GrayImage> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidConfig("resample target must be >= 1x1".into()));
    }
    let sx = img.width as f64 / w as f64;
    let sy = img.height as f64 / h as f64;
    let src_index = |dr: usize, dc: usize| -> usize {
        let sc = (((dc as f64 + 0.5) * sx) as usize).min(img.width - 1);
        let sr = (((dr as f64 + 0.5) * sy) as usize).min(img.height - 1);
        sr * img.width + sc
    };
    let mut pixels = Vec::with_capacity(w * h);
    let mut mask = img.mask.as_ref().map(|_| Vec::with_capacity(w * h));
    for dr in 0..h {
        for dc in 0..w {
            let si = src_index(dr, dc);
            pixels.push(img.pixels[si]);
            if let Some(m) = &mut mask {
                m.push(img.mask.as_ref().unwrap()[si]);
            }
        }
    }
    GrayImage::new(w, h, img.levels, pixels, mask)
}
