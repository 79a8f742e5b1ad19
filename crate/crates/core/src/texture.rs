//! Gray-level quantization, masked co-occurrence matrices, Haralick-style
//! statistics, and sequential-pair feature differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::masking::PixelMask;
use crate::raster::Raster;

/// Pixel offsets `(dx, dy)`: right, down, down-right, up-right.
pub const DEFAULT_OFFSETS: [(i32, i32); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

/// Feature order produced by [`haralick`].
pub const HARALICK_NAMES: [&str; 6] = ["contrast", "energy", "homogeneity", "entropy", "correlation", "valid_fraction"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureConfig {
    pub levels: usize,
    pub offsets: Vec<(i32, i32)>,
    /// Side length of the square working resolution.
    pub size: usize,
}

impl Default for TextureConfig {
    fn default() -> Self {
        Self { levels: 16, offsets: DEFAULT_OFFSETS.to_vec(), size: 128 }
    }
}

/// Quantized gray levels; `None` marks a masked-out pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedGrid {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub codes: Vec<Option<u16>>,
}

impl QuantizedGrid {
    pub fn new(width: usize, height: usize, levels: usize, codes: Vec<Option<u16>>) -> Result<Self> {
        if codes.len() != width * height {
            return Err(Error::arg("code count does not match grid dimensions"));
        }
        if let Some(c) = codes.iter().flatten().find(|&&c| usize::from(c) >= levels) {
            return Err(Error::arg(format!("code {c} out of range for {levels} levels")));
        }
        Ok(Self { width, height, levels, codes })
    }
}

/// Normalized symmetric co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    /// Row-major `levels × levels`.
    pub matrix: Vec<f64>,
    /// Pixel pairs where both ends were valid.
    pub pair_count: u64,
    /// In-bounds pixel pairs regardless of masking.
    pub possible_pairs: u64,
}

impl Glcm {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }
}

pub fn quantize(gray: &Raster, mask: &PixelMask, levels: usize) -> Result<QuantizedGrid> {
    if !(2..=256).contains(&levels) {
        return Err(Error::arg(format!("levels must be in 2..=256, got {levels}")));
    }
    if !gray.is_gray() {
        return Err(Error::arg("quantize expects a gray raster"));
    }
    if gray.width() != mask.width() || gray.height() != mask.height() {
        return Err(Error::arg(format!(
            "raster {}x{} and mask {}x{} differ",
            gray.width(),
            gray.height(),
            mask.width(),
            mask.height()
        )));
    }
    let codes = gray
        .samples()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &valid)| valid.then(|| ((usize::from(v) * levels / 256).min(levels - 1)) as u16))
        .collect();
    Ok(QuantizedGrid { width: gray.width(), height: gray.height(), levels, codes })
}

/// Pooled symmetric GLCM over all offsets, restricted to pairs whose both
/// ends are valid. An empty offset list is rejected; zero contributing pairs
/// give a zero matrix.
pub fn glcm(q: &QuantizedGrid, offsets: &[(i32, i32)]) -> Result<Glcm> {
    if offsets.is_empty() {
        return Err(Error::arg("at least one GLCM offset is required"));
    }
    let g = q.levels;
    let mut counts = vec![0u64; g * g];
    let (mut pairs, mut possible) = (0u64, 0u64);
    let (w, h) = (q.width as i64, q.height as i64);
    for &(dx, dy) in offsets {
        let (dx, dy) = (i64::from(dx), i64::from(dy));
        let (x_lo, x_hi) = ((-dx).max(0), (w - dx).min(w));
        let (y_lo, y_hi) = ((-dy).max(0), (h - dy).min(h));
        if x_lo >= x_hi || y_lo >= y_hi {
            continue;
        }
        possible += ((x_hi - x_lo) * (y_hi - y_lo)) as u64;
        for y in y_lo..y_hi {
            let row = (y * w) as usize;
            let nrow = ((y + dy) * w) as usize;
            for x in x_lo..x_hi {
                let (Some(a), Some(b)) = (q.codes[row + x as usize], q.codes[nrow + (x + dx) as usize]) else {
                    continue;
                };
                let (a, b) = (usize::from(a), usize::from(b));
                counts[a * g + b] += 1;
                counts[b * g + a] += 1;
                pairs += 1;
            }
        }
    }
    let total = (2 * pairs) as f64;
    let matrix = if pairs == 0 { vec![0.0; g * g] } else { counts.iter().map(|&c| c as f64 / total).collect() };
    Ok(Glcm { levels: g, matrix, pair_count: pairs, possible_pairs: possible })
}

/// Contrast, energy, homogeneity, entropy (natural log), correlation and
/// valid-pair coverage, in [`HARALICK_NAMES`] order.
///
/// Correlation is 1 when the marginal variance is zero, which also covers
/// the empty matrix.
pub fn haralick(g: &Glcm) -> FeatureVector {
    let n = g.levels;
    let (mut contrast, mut energy, mut homogeneity, mut entropy, mut mean) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = g.at(i, j);
            if p == 0.0 {
                continue;
            }
            let d = i as f64 - j as f64;
            contrast += p * d * d;
            energy += p * p;
            homogeneity += p / (1.0 + d.abs());
            entropy -= p * p.ln();
            mean += i as f64 * p;
        }
    }
    let (mut var, mut cov) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = g.at(i, j);
            if p == 0.0 {
                continue;
            }
            let (di, dj) = (i as f64 - mean, j as f64 - mean);
            var += di * di * p;
            cov += di * dj * p;
        }
    }
    let correlation = if var <= 1e-15 { 1.0 } else { cov / var };
    let coverage = if g.possible_pairs == 0 { 0.0 } else { g.pair_count as f64 / g.possible_pairs as f64 };
    let values = [contrast, energy, homogeneity, entropy, correlation, coverage];
    FeatureVector::from_pairs(HARALICK_NAMES.iter().copied().zip(values)).expect("fixed names, finite values")
}

pub const MIN_VALID_FRACTION: &str = "min_valid_fraction";

/// Absolute per-feature change between two frames' texture vectors, names
/// suffixed `_delta`, plus the lower of the two `valid_fraction` coverages.
///
/// When either frame has zero coverage there is no evidence to compare and
/// every delta is reported as 0.
pub fn pair_delta(a: &FeatureVector, b: &FeatureVector) -> Result<FeatureVector> {
    if a.names() != b.names() {
        return Err(Error::arg("pair_delta needs identical feature name lists"));
    }
    let cov_a = a.get("valid_fraction").ok_or_else(|| Error::arg("feature vectors lack valid_fraction"))?;
    let cov_b = b.get("valid_fraction").expect("same names");
    let min_cov = cov_a.min(cov_b);
    let mut names: Vec<String> = a.names().iter().map(|n| format!("{n}_delta")).collect();
    let mut values: Vec<f64> = if min_cov > 0.0 {
        a.values().iter().zip(b.values()).map(|(x, y)| (y - x).abs()).collect()
    } else {
        vec![0.0; a.len()]
    };
    names.push(MIN_VALID_FRACTION.into());
    values.push(min_cov);
    FeatureVector::new(names, values)
}
