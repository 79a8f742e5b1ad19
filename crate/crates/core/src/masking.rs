//! Validity masks: cloud, dark/missing and saturation/value masking plus
//! median and dilation cleanup.
//!
//! A mask bit is `true` when the pixel takes part in texture analysis. All
//! window operations clip the window to in-bounds cells; no padding values
//! are invented at the border.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{area_weights, HsvRaster, Raster};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::arg(format!(
                "mask of {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, valid: bool) -> Self {
        Self { width, height, bits: vec![valid; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, valid: bool) {
        self.bits[y * self.width + x] = valid;
    }

    pub fn valid_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid_count() as f64 / self.bits.len() as f64
    }

    /// Inspection image: 255 for valid pixels, 0 for masked-out ones.
    pub fn to_raster(&self) -> Raster {
        let samples = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        Raster::gray(self.width, self.height, samples).expect("mask dimensions are positive")
    }
}

/// Thresholds for all masking stages. The defaults are tunable starting
/// points, not calibrated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskConfig {
    /// Side of the window used for the local-uniformity test.
    pub window: usize,
    /// Maximum local standard deviation (gray levels) for a "uniform" pixel.
    pub uniform_sigma_max: f64,
    /// Minimum intensity for a pixel to count toward the white reference.
    pub white_floor: u8,
    pub cloud_factor: f64,
    pub dark_ceiling: u8,
    pub s_lo: f64,
    pub s_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub median_k: usize,
    pub dilate_k: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            window: 5,
            uniform_sigma_max: 4.0,
            white_floor: 200,
            cloud_factor: 0.92,
            dark_ceiling: 15,
            s_lo: 0.02,
            s_hi: 0.98,
            v_lo: 0.08,
            v_hi: 0.97,
            median_k: 5,
            dilate_k: 3,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("window", self.window), ("median_k", self.median_k), ("dilate_k", self.dilate_k)] {
            if k == 0 || k % 2 == 0 {
                return Err(Error::arg(format!("{name} must be odd and >= 1, got {k}")));
            }
        }
        if !(0.0 <= self.s_lo && self.s_lo < self.s_hi && self.s_hi <= 1.0) {
            return Err(Error::arg("require 0 <= s_lo < s_hi <= 1"));
        }
        if !(0.0 <= self.v_lo && self.v_lo < self.v_hi && self.v_hi <= 1.0) {
            return Err(Error::arg("require 0 <= v_lo < v_hi <= 1"));
        }
        if !(self.cloud_factor > 0.0 && self.cloud_factor <= 1.0) {
            return Err(Error::arg("cloud_factor must lie in (0, 1]"));
        }
        if !(self.uniform_sigma_max >= 0.0) {
            return Err(Error::arg("uniform_sigma_max must be non-negative"));
        }
        Ok(())
    }
}

/// Summed-area table with one row/column of zero padding.
struct Integral {
    stride: usize,
    sums: Vec<u64>,
}

impl Integral {
    fn build(width: usize, height: usize, value: impl Fn(usize) -> u64) -> Self {
        let stride = width + 1;
        let mut sums = vec![0u64; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0u64;
            for x in 0..width {
                row += value(y * width + x);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { stride, sums }
    }

    /// Sum over the inclusive box `[x0, x1] × [y0, y1]`.
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let s = self.stride;
        self.sums[(y1 + 1) * s + x1 + 1] + self.sums[y0 * s + x0]
            - self.sums[y0 * s + x1 + 1]
            - self.sums[(y1 + 1) * s + x0]
    }
}

/// Inclusive clipped window bounds around `(x, y)`.
fn window_bounds(x: usize, y: usize, k: usize, width: usize, height: usize) -> (usize, usize, usize, usize) {
    let half = k / 2;
    (x.saturating_sub(half), y.saturating_sub(half), (x + half).min(width - 1), (y + half).min(height - 1))
}

fn require_gray(r: &Raster) -> Result<()> {
    if r.is_gray() {
        Ok(())
    } else {
        Err(Error::arg(format!("expected a gray raster, got {} channels", r.channels())))
    }
}

fn require_odd(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        Err(Error::arg(format!("window size must be odd and >= 1, got {k}")))
    } else {
        Ok(())
    }
}

/// Mean intensity of bright, locally uniform pixels, or `None` when there are none.
///
/// A pixel qualifies when its value is at least `white_floor` and the
/// population standard deviation of its clipped `window × window`
/// neighbourhood is at most `uniform_sigma_max`.
pub fn white_reference(gray: &Raster, cfg: &MaskConfig) -> Result<Option<f64>> {
    require_gray(gray)?;
    require_odd(cfg.window)?;
    let (w, h) = (gray.width(), gray.height());
    let px = gray.samples();
    let sum = Integral::build(w, h, |i| u64::from(px[i]));
    let sq = Integral::build(w, h, |i| u64::from(px[i]) * u64::from(px[i]));
    let sigma_sq = cfg.uniform_sigma_max * cfg.uniform_sigma_max;
    let (mut total, mut count) = (0u64, 0u64);
    for y in 0..h {
        for x in 0..w {
            let v = px[y * w + x];
            if v < cfg.white_floor {
                continue;
            }
            let (x0, y0, x1, y1) = window_bounds(x, y, cfg.window, w, h);
            let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as u64;
            let s = sum.sum(x0, y0, x1, y1);
            let q = sq.sum(x0, y0, x1, y1);
            // n² · variance, exact in integers
            let scaled_var = (n * q - s * s) as f64;
            if scaled_var <= sigma_sq * (n * n) as f64 {
                total += u64::from(v);
                count += 1;
            }
        }
    }
    Ok((count > 0).then(|| total as f64 / count as f64))
}

/// Marks pixels at least `cloud_factor · white_reference` bright as invalid.
pub fn cloud_mask(gray: &Raster, cfg: &MaskConfig) -> Result<PixelMask> {
    let reference = white_reference(gray, cfg)?;
    let bits = match reference {
        Some(r) => {
            let threshold = cfg.cloud_factor * r;
            gray.samples().iter().map(|&v| f64::from(v) < threshold).collect()
        }
        None => vec![true; gray.pixel_count()],
    };
    PixelMask::new(gray.width(), gray.height(), bits)
}

/// Marks underexposed and no-data pixels (value ≤ `dark_ceiling`) as invalid.
pub fn dark_missing_mask(gray: &Raster, cfg: &MaskConfig) -> Result<PixelMask> {
    require_gray(gray)?;
    let bits = gray.samples().iter().map(|&v| v > cfg.dark_ceiling).collect();
    PixelMask::new(gray.width(), gray.height(), bits)
}

pub fn sv_mask(hsv: &HsvRaster, cfg: &MaskConfig) -> Result<PixelMask> {
    let bits = hsv
        .s
        .iter()
        .zip(&hsv.v)
        .map(|(&s, &v)| (cfg.s_lo..=cfg.s_hi).contains(&s) && (cfg.v_lo..=cfg.v_hi).contains(&v))
        .collect();
    PixelMask::new(hsv.width, hsv.height, bits)
}

/// Boolean median: a pixel stays valid only if valid cells strictly
/// outnumber invalid cells in its clipped window. Ties go to invalid.
pub fn median_filter(m: &PixelMask, k: usize) -> Result<PixelMask> {
    require_odd(k)?;
    let (w, h) = (m.width, m.height);
    let valid = Integral::build(w, h, |i| u64::from(m.bits[i]));
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (x0, y0, x1, y1) = window_bounds(x, y, k, w, h);
            let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as u64;
            let v = valid.sum(x0, y0, x1, y1);
            bits.push(v > n - v);
        }
    }
    Ok(PixelMask { width: w, height: h, bits })
}

/// Grows the invalid region: a pixel becomes invalid if any cell of its
/// `k × k` window is invalid.
pub fn dilate_invalid(m: &PixelMask, k: usize) -> Result<PixelMask> {
    require_odd(k)?;
    let (w, h) = (m.width, m.height);
    let invalid = Integral::build(w, h, |i| u64::from(!m.bits[i]));
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (x0, y0, x1, y1) = window_bounds(x, y, k, w, h);
            bits.push(invalid.sum(x0, y0, x1, y1) == 0);
        }
    }
    Ok(PixelMask { width: w, height: h, bits })
}

/// Pixel-wise AND of all masks.
pub fn intersect(masks: &[&PixelMask]) -> Result<PixelMask> {
    let first = masks.first().ok_or_else(|| Error::arg("intersect needs at least one mask"))?;
    let mut out = (*first).clone();
    for m in &masks[1..] {
        if m.width != out.width || m.height != out.height {
            return Err(Error::arg(format!(
                "mask dimensions differ: {}x{} vs {}x{}",
                out.width, out.height, m.width, m.height
            )));
        }
        for (o, &b) in out.bits.iter_mut().zip(&m.bits) {
            *o &= b;
        }
    }
    Ok(out)
}

/// Resamples a mask by area-weighted majority of the covered region; a tie
/// (equal valid and invalid area) resolves to invalid.
pub fn downscale_mask(m: &PixelMask, out_w: usize, out_h: usize) -> Result<PixelMask> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::arg(format!("target dimensions must be positive, got {out_w}x{out_h}")));
    }
    if out_w == m.width && out_h == m.height {
        return Ok(m.clone());
    }
    let wx = area_weights(m.width, out_w);
    let wy = area_weights(m.height, out_h);
    let total = (m.width * m.height) as u64;
    let mut bits = Vec::with_capacity(out_w * out_h);
    for rows in &wy {
        for cols in &wx {
            let mut valid = 0u64;
            for &(iy, a) in rows {
                for &(ix, b) in cols {
                    if m.bits[iy * m.width + ix] {
                        valid += a * b;
                    }
                }
            }
            bits.push(2 * valid > total);
        }
    }
    Ok(PixelMask { width: out_w, height: out_h, bits })
}
