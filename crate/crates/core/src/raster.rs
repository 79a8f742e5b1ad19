//! 8-bit rasters, binary PNM I/O, colourspace conversion and area downscaling.
//!
//! Every place that turns a real-valued intermediate back into an 8-bit sample
//! uses round-half-up on non-negative values (`floor(x + 0.5)`), computed in
//! integer arithmetic where possible so results are bit-exact.

use crate::error::{Error, Result};

/// Row-major 8-bit image with one (gray) or three (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!("raster dimensions must be positive, got {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::arg(format!("raster must have 1 or 3 channels, got {channels}")));
        }
        if samples.len() != width * height * channels {
            return Err(Error::arg(format!(
                "expected {} samples for {width}x{height}x{channels}, got {}",
                width * height * channels,
                samples.len()
            )));
        }
        Ok(Self { width, height, channels, samples })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn gray(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, samples)
    }

    pub fn rgb(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 3, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Samples of the pixel at `(x, y)`; one element for gray, three for RGB.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let start = (y * self.width + x) * self.channels;
        &self.samples[start..start + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let start = (y * self.width + x) * self.channels;
        &mut self.samples[start..start + self.channels]
    }
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`, one plane each.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvRaster {
    pub width: usize,
    pub height: usize,
    pub h: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Format { offset: self.pos, message: message.into() })
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        match text.parse::<usize>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.fail(format!("{what} out of range"))
            }
        }
    }
}

/// Parses a binary PGM (`P5`) or PPM (`P6`) stream with maxval 255.
pub fn load_pnm(bytes: &[u8]) -> Result<Raster> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return cur.fail("expected magic number P5 or P6"),
    };
    cur.pos = 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = {
        cur.skip_space_and_comments();
        cur.pos
    };
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        cur.pos = maxval_at;
        return cur.fail(format!("maxval must be 255, got {maxval}"));
    }
    if width == 0 || height == 0 {
        return cur.fail(format!("zero image dimension {width}x{height}"));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return cur.fail("expected a single whitespace byte before the payload"),
        None => return cur.fail("missing payload"),
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Format { offset: cur.pos, message: "image dimensions overflow".into() })?;
    let payload = &bytes[cur.pos..];
    if payload.len() < need {
        return Err(Error::Format {
            offset: bytes.len(),
            message: format!("truncated payload: expected {need} bytes, found {}", payload.len()),
        });
    }
    Raster::new(width, height, channels, payload[..need].to_vec())
}

/// Serializes with the minimal header `P5\n<w> <h>\n255\n` (or `P6`).
pub fn write_pnm(r: &Raster) -> Vec<u8> {
    let magic = if r.is_gray() { "P5" } else { "P6" };
    let header = format!("{magic}\n{} {}\n255\n", r.width, r.height);
    let mut out = Vec::with_capacity(header.len() + r.samples.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&r.samples);
    out
}

/// Luma `0.299 R + 0.587 G + 0.114 B`, rounded half-up; gray input is returned as is.
pub fn to_gray(r: &Raster) -> Raster {
    if r.is_gray() {
        return r.clone();
    }
    let samples = r
        .samples
        .chunks_exact(3)
        .map(|p| {
            let weighted = 299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]);
            ((weighted + 500) / 1000) as u8
        })
        .collect();
    Raster { width: r.width, height: r.height, channels: 1, samples }
}

pub(crate) fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = f64::from(max) / 255.0;
    if max == 0 {
        return (0.0, 0.0, v);
    }
    let chroma = f64::from(max - min);
    let s = chroma / f64::from(max);
    if max == min {
        return (0.0, s, v);
    }
    let sector = {
        let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
        if max == r {
            (gf - bf) / chroma
        } else if max == g {
            (bf - rf) / chroma + 2.0
        } else {
            (rf - gf) / chroma + 4.0
        }
    };
    let mut h = 60.0 * sector;
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    (h, s, v)
}

pub fn to_hsv(r: &Raster) -> Result<HsvRaster> {
    if r.channels != 3 {
        return Err(Error::arg(format!("HSV conversion needs 3 channels, got {}", r.channels)));
    }
    let n = r.pixel_count();
    let (mut h, mut s, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for p in r.samples.chunks_exact(3) {
        let (ph, ps, pv) = rgb_to_hsv(p[0], p[1], p[2]);
        h.push(ph);
        s.push(ps);
        v.push(pv);
    }
    Ok(HsvRaster { width: r.width, height: r.height, h, s, v })
}

/// For each output cell along one axis, the covered input cells and their
/// overlap, in units of `1 / output_len` of an input cell. Weights of one
/// output cell sum to `input_len`.
pub(crate) fn area_weights(input_len: usize, output_len: usize) -> Vec<Vec<(usize, u64)>> {
    (0..output_len)
        .map(|o| {
            let lo = (o * input_len) as u64;
            let hi = ((o + 1) * input_len) as u64;
            let first = o * input_len / output_len;
            let mut cover = Vec::new();
            let mut i = first;
            while i < input_len && ((i * output_len) as u64) < hi {
                let cell_lo = (i * output_len) as u64;
                let cell_hi = ((i + 1) * output_len) as u64;
                let overlap = hi.min(cell_hi).saturating_sub(lo.max(cell_lo));
                if overlap > 0 {
                    cover.push((i, overlap));
                }
                i += 1;
            }
            cover
        })
        .collect()
}

/// Box-filter downscale (or upscale): each output sample is the area-weighted
/// mean of the input region it covers, rounded half-up.
pub fn resize_area(r: &Raster, out_w: usize, out_h: usize) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::arg(format!("target dimensions must be positive, got {out_w}x{out_h}")));
    }
    if out_w == r.width && out_h == r.height {
        return Ok(r.clone());
    }
    let wx = area_weights(r.width, out_w);
    let wy = area_weights(r.height, out_h);
    let total = (r.width * r.height) as u64;
    let ch = r.channels;
    let mut samples = vec![0u8; out_w * out_h * ch];
    for (oy, rows) in wy.iter().enumerate() {
        for (ox, cols) in wx.iter().enumerate() {
            for c in 0..ch {
                let mut acc: u64 = 0;
                for &(iy, wyv) in rows {
                    let row = iy * r.width;
                    for &(ix, wxv) in cols {
                        acc += wyv * wxv * u64::from(r.samples[(row + ix) * ch + c]);
                    }
                }
                samples[(oy * out_w + ox) * ch + c] = ((2 * acc + total) / (2 * total)) as u8;
            }
        }
    }
    Ok(Raster { width: out_w, height: out_h, channels: ch, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
        let c = v * s;
        let hp = h / 60.0;
        let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
        let (r, g, b) = match hp as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        ((r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0)
    }

    #[test]
    fn loads_minimal_p5() {
        let mut bytes = b"P5 2 1 255\n".to_vec();
        bytes.extend([0, 255]);
        let r = load_pnm(&bytes).unwrap();
        assert_eq!((r.width(), r.height(), r.channels()), (2, 1, 1));
        assert_eq!(r.samples(), &[0, 255]);
    }

    #[test]
    fn loads_p6_with_comments() {
        let mut bytes = b"P6\n# made by hand\n2 2\n255\n".to_vec();
        bytes.extend(0..12u8);
        let r = load_pnm(&bytes).unwrap();
        assert_eq!(r.channels(), 3);
        assert_eq!(r.samples().len(), 12);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend([1, 2, 3]);
        match load_pnm(&bytes) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, bytes.len());
                assert!(message.contains("truncated"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_maxval_and_magic() {
        assert!(matches!(load_pnm(b"P5 1 1 65535\n\0\0"), Err(Error::Format { offset: 7, .. })));
        assert!(matches!(load_pnm(b"P2 1 1 255\n1"), Err(Error::Format { offset: 0, .. })));
        assert!(matches!(load_pnm(b"P5 1 x 255\n1"), Err(Error::Format { .. })));
    }

    #[test]
    fn writes_smallest_image() {
        let r = Raster::gray(1, 1, vec![7]).unwrap();
        assert_eq!(write_pnm(&r), b"P5\n1 1\n255\n\x07".to_vec());
        let rgb = Raster::filled(2, 2, 3, 9).unwrap();
        let out = write_pnm(&rgb);
        assert!(out.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(out.len() - b"P6\n2 2\n255\n".len(), 12);
    }

    #[test]
    fn gray_conversion() {
        let g = Raster::gray(2, 1, vec![3, 4]).unwrap();
        assert_eq!(to_gray(&g), g);
        let rgb = Raster::rgb(3, 1, vec![255, 255, 255, 255, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(to_gray(&rgb).samples(), &[255, 76, 0]);
    }

    #[test]
    fn hsv_examples() {
        let r = Raster::rgb(3, 1, vec![128, 128, 128, 255, 0, 0, 0, 255, 255]).unwrap();
        let hsv = to_hsv(&r).unwrap();
        assert_eq!((hsv.h[0], hsv.s[0], hsv.v[0]), (0.0, 0.0, 128.0 / 255.0));
        assert_eq!((hsv.h[1], hsv.s[1], hsv.v[1]), (0.0, 1.0, 1.0));
        assert_eq!((hsv.h[2], hsv.s[2], hsv.v[2]), (180.0, 1.0, 1.0));
        assert!(to_hsv(&Raster::filled(1, 1, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn resize_examples() {
        let r = Raster::gray(2, 2, vec![0, 0, 255, 255]).unwrap();
        assert_eq!(resize_area(&r, 1, 1).unwrap().samples(), &[128]);
        let c = Raster::filled(4, 4, 1, 42).unwrap();
        assert_eq!(resize_area(&c, 2, 2).unwrap(), Raster::filled(2, 2, 1, 42).unwrap());
        assert!(resize_area(&c, 0, 2).is_err());
    }

    #[test]
    fn area_weights_cover_input_exactly() {
        for (i, o) in [(256, 128), (7, 3), (3, 7), (5, 5), (128, 1)] {
            let w = area_weights(i, o);
            for cell in &w {
                assert_eq!(cell.iter().map(|c| c.1).sum::<u64>(), i as u64);
            }
            let mut per_input = vec![0u64; i];
            for cell in &w {
                for &(k, v) in cell {
                    per_input[k] += v;
                }
            }
            assert!(per_input.iter().all(|&v| v == o as u64));
        }
    }

    fn arb_raster() -> impl Strategy<Value = Raster> {
        (1usize..12, 1usize..12, prop::sample::select(vec![1usize, 3])).prop_flat_map(|(w, h, c)| {
            prop::collection::vec(any::<u8>(), w * h * c).prop_map(move |s| Raster::new(w, h, c, s).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pnm_round_trip(r in arb_raster()) {
            let bytes = write_pnm(&r);
            let back = load_pnm(&bytes).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(write_pnm(&back), bytes);
        }

        #[test]
        fn resize_identity_and_constant(r in arb_raster(), v in any::<u8>(), ow in 1usize..9, oh in 1usize..9) {
            prop_assert_eq!(resize_area(&r, r.width(), r.height()).unwrap(), r.clone());
            let c = Raster::filled(r.width(), r.height(), r.channels(), v).unwrap();
            prop_assert_eq!(resize_area(&c, ow, oh).unwrap(), Raster::filled(ow, oh, r.channels(), v).unwrap());
        }

        #[test]
        fn resize_preserves_mean(w in 1usize..5, h in 1usize..5, k in 1usize..5, seed in prop::collection::vec(any::<u8>(), 400)) {
            // integer downscale factor: every output mean is exact up to rounding
            let (iw, ih) = (w * k, h * k);
            let r = Raster::gray(iw, ih, seed[..iw * ih].to_vec()).unwrap();
            let out = resize_area(&r, w, h).unwrap();
            let mean_in = r.samples().iter().map(|&v| f64::from(v)).sum::<f64>() / (iw * ih) as f64;
            let mean_out = out.samples().iter().map(|&v| f64::from(v)).sum::<f64>() / (w * h) as f64;
            prop_assert!((mean_in - mean_out).abs() <= 1.0);
        }

        #[test]
        fn gray_within_channel_range(p in prop::collection::vec(any::<u8>(), 3)) {
            let r = Raster::rgb(1, 1, p.clone()).unwrap();
            let g = to_gray(&r).samples()[0];
            prop_assert!(g >= *p.iter().min().unwrap() && g <= *p.iter().max().unwrap());
        }

        #[test]
        fn hsv_inverts_within_one_level(p in prop::collection::vec(any::<u8>(), 3)) {
            let (h, s, v) = rgb_to_hsv(p[0], p[1], p[2]);
            prop_assert!((0.0..360.0).contains(&h));
            prop_assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&v));
            let (r, g, b) = hsv_to_rgb(h, s, v);
            for (orig, back) in p.iter().zip([r, g, b]) {
                prop_assert!((f64::from(*orig) - back).abs() <= 1.0, "{:?} -> {:?}", p, (r, g, b));
            }
        }
    }
}
