//! RGBA8 raster images, 1-bit masks and PNG I/O.
//!
//! Pixels are row-major, sRGB, non-premultiplied. A [`Mask`] is the 1-bit
//! occupancy view used for contour masks; when a mask is stored as an RGBA
//! image, a pixel counts as set when its alpha is at least 128.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Cursor, Seek, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {0}x{1}")]
    EmptyImage(u32, u32),
    #[error("pixel buffer length {len} does not match {width}x{height}")]
    BufferLength { width: u32, height: u32, len: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("unsupported png layout: {0}")]
    Unsupported(String),
}

/// 8-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const BLACK: Rgb = Rgb(0, 0, 0);
    pub const WHITE: Rgb = Rgb(255, 255, 255);

    pub fn to_rgba(self, a: u8) -> Rgba {
        [self.0, self.1, self.2, a]
    }

    /// Multiply each channel by `f` (clamped), used for shading.
    pub fn scale(self, f: f64) -> Rgb {
        let s = |c: u8| (c as f64 * f).round().clamp(0.0, 255.0) as u8;
        Rgb(s(self.0), s(self.1), s(self.2))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid color {0:?}, expected #rrggbb")]
pub struct ParseRgbError(pub String);

impl FromStr for Rgb {
    type Err = ParseRgbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRgbError(s.to_string());
        let hex = s.strip_prefix('#').ok_or_else(err)?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(err());
        }
        let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| err());
        Ok(Rgb(c(0)?, c(2)?, c(4)?))
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub type Rgba = [u8; 4];

pub const TRANSPARENT: Rgba = [0, 0, 0, 0];

/// Round half up to an 8-bit channel.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Non-premultiplied source-over in sRGB space (no linearization). The
/// source alpha is scaled by `opacity`.
#[inline]
pub fn composite_over(dst: Rgba, src: Rgba, opacity: f64) -> Rgba {
    let sa = src[3] as f64 / 255.0 * opacity;
    if sa <= 0.0 {
        return dst;
    }
    if sa >= 1.0 {
        return [src[0], src[1], src[2], 255];
    }
    let da = dst[3] as f64 / 255.0;
    let oa = sa + da * (1.0 - sa);
    let ch = |i: usize| quantize((src[i] as f64 * sa + dst[i] as f64 * da * (1.0 - sa)) / oa);
    [ch(0), ch(1), ch(2), quantize(oa * 255.0)]
}

#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    /// A fully transparent image.
    pub fn new(width: u32, height: u32) -> RasterImage {
        Self::filled(width, height, TRANSPARENT)
    }

    pub fn filled(width: u32, height: u32, color: Rgba) -> RasterImage {
        assert!(width >= 1 && height >= 1, "image must be at least 1x1");
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 4);
        for _ in 0..n {
            pixels.extend_from_slice(&color);
        }
        RasterImage { width, height, pixels }
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<RasterImage, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage(width, height));
        }
        if pixels.len() != width as usize * height as usize * 4 {
            return Err(ImageError::BufferLength { width, height, len: pixels.len() });
        }
        Ok(RasterImage { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn size(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize * self.width as usize + x as usize) * 4
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgba {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2], self.pixels[o + 3]]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, px: Rgba) {
        let o = self.offset(x, y);
        self.pixels[o..o + 4].copy_from_slice(&px);
    }

    /// Pixel by linear index (row-major).
    #[inline]
    pub fn get_index(&self, i: usize) -> Rgba {
        let o = i * 4;
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2], self.pixels[o + 3]]
    }

    #[inline]
    pub fn put_index(&mut self, i: usize, px: Rgba) {
        let o = i * 4;
        self.pixels[o..o + 4].copy_from_slice(&px);
    }

    pub fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, u8> {
        let stride = self.width as usize * 4;
        self.pixels.chunks_exact_mut(stride)
    }

    pub fn opaque_count(&self) -> usize {
        self.pixels.chunks_exact(4).filter(|p| p[3] > 0).count()
    }

    /// Copy of the rectangle `[x0, x0+w) x [y0, y0+h)`; must lie inside the image.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> RasterImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height, "crop out of bounds");
        let mut out = RasterImage::new(w, h);
        for y in 0..h {
            let src = self.offset(x0, y0 + y);
            let dst = out.offset(0, y);
            out.pixels[dst..dst + w as usize * 4]
                .copy_from_slice(&self.pixels[src..src + w as usize * 4]);
        }
        out
    }

    pub fn ensure_same_size(&self, w: u32, h: u32) -> Result<(), ImageError> {
        if self.size() != (w, h) {
            return Err(ImageError::DimensionMismatch(self.width, self.height, w, h));
        }
        Ok(())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        let mut out = Vec::new();
        self.write_png_to(&mut out)?;
        Ok(out)
    }

    fn write_png_to<W: Write>(&self, w: W) -> Result<(), ImageError> {
        let mut enc = png::Encoder::new(w, self.width, self.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.pixels)?;
        writer.finish()?;
        Ok(())
    }

    pub fn decode_png<R: BufRead + Seek>(r: R) -> Result<RasterImage, ImageError> {
        let mut decoder = png::Decoder::new(r);
        decoder.set_transformations(png::Transformations::EXPAND);
        let mut reader = decoder.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf)?;
        buf.truncate(info.buffer_size());
        if info.bit_depth != png::BitDepth::Eight {
            return Err(ImageError::Unsupported(format!("bit depth {:?}", info.bit_depth)));
        }
        let n = info.width as usize * info.height as usize;
        let pixels = match info.color_type {
            png::ColorType::Rgba => buf,
            png::ColorType::Rgb => buf
                .chunks_exact(3)
                .flat_map(|c| [c[0], c[1], c[2], 255])
                .collect(),
            png::ColorType::GrayscaleAlpha => buf
                .chunks_exact(2)
                .flat_map(|c| [c[0], c[0], c[0], c[1]])
                .collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g, 255]).collect(),
            other => return Err(ImageError::Unsupported(format!("{other:?}"))),
        };
        debug_assert_eq!(pixels.len(), n * 4);
        RasterImage::from_raw(info.width, info.height, pixels)
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<RasterImage, ImageError> {
        Self::decode_png(Cursor::new(bytes))
    }

    pub fn load_png(path: &Path) -> Result<RasterImage, ImageError> {
        let f = File::open(path).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::decode_png(BufReader::new(f))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let io_err = |source| ImageError::Io { path: path.display().to_string(), source };
        let f = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(f);
        self.write_png_to(&mut w)?;
        w.flush().map_err(io_err)
    }
}

/// 1-bit occupancy grid.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Mask {
        assert!(width >= 1 && height >= 1, "mask must be at least 1x1");
        Mask { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn full(width: u32, height: u32) -> Mask {
        let mut m = Mask::new(width, height);
        m.bits.fill(true);
        m
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Mask {
        let mut m = Mask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Alpha >= 128 counts as set.
    pub fn from_image(img: &RasterImage) -> Mask {
        let bits = img.as_raw().chunks_exact(4).map(|p| p[3] >= 128).collect();
        Mask { width: img.width(), height: img.height(), bits }
    }

    /// White opaque where set, transparent elsewhere.
    pub fn to_image(&self) -> RasterImage {
        let mut img = RasterImage::new(self.width, self.height);
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                img.put_index(i, [255, 255, 255, 255]);
            }
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn size(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.size(), other.size(), "mask size mismatch");
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Mask { width: self.width, height: self.height, bits }
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn union_in_place(&mut self, other: &Mask) {
        assert_eq!(self.size(), other.size(), "mask size mismatch");
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// Integer translation; bits shifted outside the canvas are dropped.
    pub fn translated(&self, dx: i32, dy: i32) -> Mask {
        if dx == 0 && dy == 0 {
            return self.clone();
        }
        let mut out = Mask::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.get(x, y) {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx as i64, y as i64 + dy as i64);
                if nx >= 0 && ny >= 0 && nx < self.width as i64 && ny < self.height as i64 {
                    out.set(nx as u32, ny as u32, true);
                }
            }
        }
        out
    }

    /// One step of 8-neighbour dilation.
    pub fn dilate1(&self) -> Mask {
        let mut out = self.clone();
        let (w, h) = (self.width as i64, self.height as i64);
        for y in 0..h {
            for x in 0..w {
                if !self.get(x as u32, y as u32) {
                    continue;
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0 && ny >= 0 && nx < w && ny < h {
                            out.set(nx as u32, ny as u32, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// Inclusive-exclusive bounding box `(x0, y0, x1, y1)` of the set bits.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut b: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    b = Some(match b {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        b
    }

    pub fn ensure_same_size(&self, w: u32, h: u32) -> Result<(), ImageError> {
        if self.size() != (w, h) {
            return Err(ImageError::DimensionMismatch(self.width, self.height, w, h));
        }
        Ok(())
    }
}


#[cfg(test)]
mod composite_tests {
    use super::*;

    #[test]
    fn half_red_over_opaque_blue() {
        assert_eq!(composite_over([0, 0, 255, 255], [255, 0, 0, 255], 0.5), [128, 0, 128, 255]);
    }

    #[test]
    fn over_transparent_keeps_source() {
        assert_eq!(composite_over(TRANSPARENT, [10, 20, 30, 200], 1.0), [10, 20, 30, 200]);
        assert_eq!(composite_over([1, 2, 3, 4], [10, 20, 30, 0], 1.0), [1, 2, 3, 4]);
    }
}
