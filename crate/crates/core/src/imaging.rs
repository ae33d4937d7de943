//! Raster types, decoding, grayscale conversion and resizing.

use std::io::Cursor;

use crate::error::{Error, Result};

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterRgb {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterGray {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

/// Row-major binary mask with values in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidRaster(format!(
            "{len} pixels do not fill {width}x{height}"
        )));
    }
    Ok(())
}

macro_rules! raster_accessors {
    ($ty:ty, $px:ty) => {
        impl $ty {
            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn pixels(&self) -> &[$px] {
                &self.pixels
            }

            pub fn into_pixels(self) -> Vec<$px> {
                self.pixels
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> $px {
                self.pixels[y * self.width + x]
            }

            #[inline]
            pub fn set(&mut self, x: usize, y: usize, value: $px) {
                self.pixels[y * self.width + x] = value;
            }

            /// Copies the half-open window `[x0, x1) × [y0, y1)`.
            pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
                if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
                    return Err(Error::InvalidRaster(format!(
                        "crop ({x0},{y0})-({x1},{y1}) outside {}x{}",
                        self.width, self.height
                    )));
                }
                let mut pixels = Vec::with_capacity((x1 - x0) * (y1 - y0));
                for y in y0..y1 {
                    pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
                }
                Ok(Self {
                    width: x1 - x0,
                    height: y1 - y0,
                    pixels,
                })
            }
        }
    };
}

raster_accessors!(RasterRgb, [u8; 3]);
raster_accessors!(RasterGray, u8);
raster_accessors!(BinaryMask, u8);

impl RasterRgb {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }
}

impl RasterGray {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Renders the raster as an RGB image with equal channels.
    pub fn to_rgb(&self) -> RasterRgb {
        RasterRgb {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if pixels.iter().any(|&v| v > 1) {
            return Err(Error::InvalidRaster("mask values must be 0 or 1".into()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    /// Value at signed coordinates; out-of-bounds reads as background.
    #[inline]
    pub fn get_or_zero(&self, x: isize, y: isize) -> u8 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            0
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| 1 - v).collect(),
        }
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == 1).count()
    }

    /// 0 → 0, 1 → 255.
    pub fn to_gray(&self) -> RasterGray {
        RasterGray {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| v * 255).collect(),
        }
    }
}

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[inline]
pub fn luma(p: [u8; 3]) -> u8 {
    let y = LUMA_WEIGHTS[0] * p[0] as f64 + LUMA_WEIGHTS[1] * p[1] as f64 + LUMA_WEIGHTS[2] * p[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

pub fn to_grayscale(img: &RasterRgb) -> RasterGray {
    RasterGray {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| luma(p)).collect(),
    }
}

/// Bilinear downscale with half-pixel-centre alignment.
///
/// Output dimensions are `floor(width * scale) × floor(height * scale)`. A
/// scale of exactly 1.0 returns a copy of the input.
pub fn resize_scale(img: &RasterRgb, scale: f64) -> Result<RasterRgb> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidConfig(format!("resize scale {scale} not in (0, 1]")));
    }
    if scale == 1.0 {
        return Ok(img.clone());
    }
    let out_w = (img.width as f64 * scale).floor() as usize;
    let out_h = (img.height as f64 * scale).floor() as usize;
    if out_w == 0 || out_h == 0 {
        return Err(Error::DegenerateSize {
            width: out_w,
            height: out_h,
        });
    }
    let sx = img.width as f64 / out_w as f64;
    let sy = img.height as f64 / out_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;

    let mut pixels = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let wy = fy - y0 as f64;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let wx = fx - x0 as f64;
            let (a, b, c, d) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
            let mut out = [0u8; 3];
            for ch in 0..3 {
                let top = a[ch] as f64 * (1.0 - wx) + b[ch] as f64 * wx;
                let bottom = c[ch] as f64 * (1.0 - wx) + d[ch] as f64 * wx;
                out[ch] = (top * (1.0 - wy) + bottom * wy).round().clamp(0.0, 255.0) as u8;
            }
            pixels.push(out);
        }
    }
    RasterRgb::new(out_w, out_h, pixels)
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Decodes a PNG or binary PPM (P6) byte stream.
pub fn decode_image(bytes: &[u8]) -> Result<RasterRgb> {
    if bytes.is_empty() {
        return Err(Error::MalformedFile("empty input".into()));
    }
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{}",
            bytes[1] as char
        )))
    } else if bytes.len() < 8 && PNG_SIGNATURE.starts_with(bytes) {
        Err(Error::MalformedFile("truncated PNG signature".into()))
    } else {
        Err(Error::UnsupportedFormat("unrecognized container".into()))
    }
}

fn rescale_sample(v: u32, maxval: u32) -> u8 {
    if maxval == 255 {
        v as u8
    } else {
        ((v.min(maxval) as f64 * 255.0 / maxval as f64).round()) as u8
    }
}

fn decode_png(bytes: &[u8]) -> Result<RasterRgb> {
    let malformed = |e: png::DecodingError| Error::MalformedFile(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(malformed)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedFile("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(malformed)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let wide = info.bit_depth == png::BitDepth::Sixteen;

    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * info.line_size..(y + 1) * info.line_size];
        for x in 0..w {
            let sample = |c: usize| -> u8 {
                let idx = x * channels + c;
                if wide {
                    let v = u16::from_be_bytes([row[2 * idx], row[2 * idx + 1]]);
                    rescale_sample(v as u32, 65535)
                } else {
                    row[idx]
                }
            };
            let px = match info.color_type {
                png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => {
                    let g = sample(0);
                    [g, g, g]
                }
                png::ColorType::Rgb | png::ColorType::Rgba => [sample(0), sample(1), sample(2)],
                png::ColorType::Indexed => return Err(Error::UnsupportedFormat("unexpanded palette PNG".into())),
            };
            pixels.push(px);
        }
    }
    RasterRgb::new(w, h, pixels)
}

/// Splits a netpbm header into `n` whitespace-separated tokens, skipping
/// `#` comments. Returns the tokens and the offset of the raster data.
fn netpbm_header(bytes: &[u8], n: usize) -> Result<(Vec<&str>, usize)> {
    let mut tokens = Vec::with_capacity(n);
    let mut i = 0;
    while tokens.len() < n {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(Error::MalformedFile("truncated netpbm header".into()));
        }
        let token = std::str::from_utf8(&bytes[start..i])
            .map_err(|_| Error::MalformedFile("non-ASCII netpbm header".into()))?;
        tokens.push(token);
    }
    // exactly one whitespace byte separates the header from the raster
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(Error::MalformedFile("missing raster data".into()));
    }
    Ok((tokens, i + 1))
}

fn decode_ppm(bytes: &[u8]) -> Result<RasterRgb> {
    let (tokens, offset) = netpbm_header(bytes, 4)?;
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::MalformedFile(format!("bad header field {s:?}")))
    };
    let (w, h, maxval) = (parse(tokens[1])?, parse(tokens[2])?, parse(tokens[3])?);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedFile(format!("bad PPM header {w}x{h} maxval {maxval}")));
    }
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let needed = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(3 * bytes_per_sample))
        .ok_or_else(|| Error::MalformedFile("PPM dimensions overflow".into()))?;
    let data = &bytes[offset..];
    if data.len() < needed {
        return Err(Error::MalformedFile(format!(
            "PPM raster truncated: {} of {needed} bytes",
            data.len()
        )));
    }
    let sample = |i: usize| -> u8 {
        if bytes_per_sample == 2 {
            rescale_sample(u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as u32, maxval as u32)
        } else {
            rescale_sample(data[i] as u32, maxval as u32)
        }
    };
    let pixels = (0..w * h)
        .map(|p| [sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)])
        .collect();
    RasterRgb::new(w, h, pixels)
}

pub fn encode_ppm(img: &RasterRgb) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn encode_pgm(img: &RasterGray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
