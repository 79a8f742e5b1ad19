//! Seeded synthetic city sequences with the nuisances real imagery shows:
//! seasonal vegetation change, small registration offsets, clouds. Flood
//! sequences gain a contiguous patch of dark, desaturated water from an
//! onset frame onward.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CitySequence;
use crate::error::{Error, Result};
use crate::masking::PixelMask;
use crate::raster::Raster;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub size: usize,
    pub n_frames: usize,
    pub flood: bool,
    pub cloud_prob: f64,
    /// Largest cloud semi-axis in pixels.
    pub cloud_radius: f64,
    pub vegetation_drift: f64,
    pub jitter: usize,
    pub water_v: f64,
    pub water_s: f64,
    pub flood_coverage: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            size: 256,
            n_frames: 6,
            flood: false,
            cloud_prob: 0.3,
            cloud_radius: 48.0,
            vegetation_drift: 12.0,
            jitter: 2,
            water_v: 0.25,
            water_s: 0.45,
            flood_coverage: 0.35,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cloud_prob", self.cloud_prob),
            ("water_v", self.water_v),
            ("water_s", self.water_s),
            ("flood_coverage", self.flood_coverage),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::arg(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.n_frames < 2 {
            return Err(Error::arg("a sequence needs at least 2 frames"));
        }
        if self.size < 16 {
            return Err(Error::arg("synthetic frames must be at least 16 pixels wide"));
        }
        if !(self.vegetation_drift >= 0.0) || !(self.cloud_radius > 0.0) {
            return Err(Error::arg("vegetation_drift must be >= 0 and cloud_radius > 0"));
        }
        Ok(())
    }
}

/// What the generator put into the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    /// First flooded frame.
    pub onset: Option<usize>,
    /// Water region at full resolution, before jitter.
    pub water: Option<PixelMask>,
    pub cloudy_frames: Vec<bool>,
}

impl SyntheticTruth {
    /// Pair `(i, i+1)` is positive when it spans the flood onset.
    pub fn pair_labels(&self, n_frames: usize) -> Vec<u8> {
        (0..n_frames - 1).map(|i| u8::from(self.onset == Some(i + 1))).collect()
    }
}

/// Smooth noise in `[0, 1]`: random lattice values, smoothstep-interpolated.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, cell: usize) -> Vec<f64> {
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.gen()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let fy = y as f64 / cell as f64;
        let (y0, ty) = (fy.floor() as usize, smooth(fy.fract()));
        for x in 0..w {
            let fx = x as f64 / cell as f64;
            let (x0, tx) = (fx.floor() as usize, smooth(fx.fract()));
            let at = |xx: usize, yy: usize| lattice[yy * gw + xx];
            let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
            let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = (h % 360.0) / 60.0;
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
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

fn to_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Grows a 4-connected region from the lowest point of `elevation`, always
/// taking the lowest frontier pixel, until `target` pixels outside
/// `excluded` are covered.
fn lowland_region(elevation: &[f64], w: usize, h: usize, excluded: &[bool], target: usize) -> Vec<bool> {
    let mut region = vec![false; w * h];
    if target == 0 {
        return region;
    }
    let key = |i: usize| (elevation[i] * 1e9) as u64;
    let start = (0..w * h).min_by_key(|&i| (key(i), i)).expect("non-empty");
    let mut queued = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((key(start), start)));
    queued[start] = true;
    let mut covered = 0;
    while let Some(Reverse((_, i))) = heap.pop() {
        region[i] = true;
        if !excluded[i] {
            covered += 1;
            if covered >= target {
                break;
            }
        }
        let (x, y) = (i % w, i / w);
        let mut push = |j: usize| {
            if !queued[j] {
                queued[j] = true;
                heap.push(Reverse((key(j), j)));
            }
        };
        if x > 0 {
            push(i - 1);
        }
        if x + 1 < w {
            push(i + 1);
        }
        if y > 0 {
            push(i - w);
        }
        if y + 1 < h {
            push(i + w);
        }
    }
    region
}

pub fn generate_synthetic_sequence(cfg: &SynthConfig) -> Result<(CitySequence, SyntheticTruth)> {
    cfg.validate()?;
    let (w, h) = (cfg.size, cfg.size);
    let n = w * h;
    let mut rng = seed::rng(seed::derive_seed(cfg.seed, seed::tag_of("city")));

    // static city: terrain colours, fine texture, road grid
    let coarse = value_noise(&mut rng, w, h, 64);
    let fine = value_noise(&mut rng, w, h, 8);
    let elevation = value_noise(&mut rng, w, h, 64);
    let spacing = 32 + rng.gen_range(0..16);
    let (ox, oy) = (rng.gen_range(0..spacing), rng.gen_range(0..spacing));
    let road: Vec<bool> = (0..n).map(|i| (i % w + ox) % spacing < 3 || (i / w + oy) % spacing < 3).collect();
    let soil = [150.0, 120.0, 85.0];
    let vegetation = [70.0, 120.0, 55.0];
    let asphalt = [118.0, 110.0, 100.0];
    let mut greenness = vec![0.0; n];
    let mut base: Vec<[f64; 3]> = Vec::with_capacity(n);
    for i in 0..n {
        let grain: f64 = rng.gen_range(-12.0..12.0);
        if road[i] {
            let g: f64 = rng.gen_range(-4.0..4.0);
            base.push([asphalt[0] + g, asphalt[1] + g, asphalt[2] + g]);
        } else {
            let t = (0.6 * coarse[i] + 0.4 * fine[i]).clamp(0.0, 1.0);
            // vegetation cover: 0 on bare soil, 1 in vegetated zones
            greenness[i] = ((t - 0.35) / 0.3).clamp(0.0, 1.0);
            base.push([0, 1, 2].map(|c| soil[c] * (1.0 - t) + vegetation[c] * t + grain));
        }
    }

    // building footprints give the city its fine texture
    for _ in 0..(w * h) * 2 / 5 / 30 {
        let (bw, bh) = (rng.gen_range(3..9), rng.gen_range(3..9));
        let (bx, by) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let roof: f64 = rng.gen_range(80.0..185.0);
        let tint = [rng.gen_range(-8.0..8.0), 0.0, rng.gen_range(-8.0..8.0)];
        for y in by..(by + bh).min(h) {
            for x in bx..(bx + bw).min(w) {
                let i = y * w + x;
                if !road[i] {
                    base[i] = [0, 1, 2].map(|c| roof + tint[c]);
                    greenness[i] = 0.0;
                }
            }
        }
    }

    let onset = (cfg.flood).then(|| rng.gen_range(1..cfg.n_frames));
    let water = onset.map(|_| {
        let land = road.iter().filter(|&&r| !r).count();
        let target = (cfg.flood_coverage * land as f64).round() as usize;
        PixelMask::new(w, h, lowland_region(&elevation, w, h, &road, target).into_iter().collect())
            .expect("dimensions match")
    });
    let water_rgb = hsv_to_rgb(35.0, cfg.water_s, cfg.water_v);

    // frames sample a yearly vegetation cycle, six per year
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut frames = Vec::with_capacity(cfg.n_frames);
    let mut cloudy_frames = Vec::with_capacity(cfg.n_frames);
    for f in 0..cfg.n_frames {
        let mut frng = seed::rng(seed::derive_seed(cfg.seed, f as u64 + 1));
        let drift = value_noise(&mut frng, w, h, 16);
        let season = (phase + std::f64::consts::TAU * f as f64 / 6.0).sin();
        let flooded = onset.is_some_and(|o| f >= o);
        let mut scene: Vec<[f64; 3]> = Vec::with_capacity(n);
        for i in 0..n {
            let sensor: f64 = frng.gen_range(-2.0..2.0);
            let px = if flooded && water.as_ref().is_some_and(|m| m.bits()[i]) {
                let ripple: f64 = frng.gen_range(-3.0..3.0);
                water_rgb.map(|c| c + ripple)
            } else {
                let mut p = base[i];
                // within ±vegetation_drift gray levels, carried by the green channel
                let patch = (season + 0.25 * (2.0 * drift[i] - 1.0)).clamp(-1.0, 1.0);
                let d = cfg.vegetation_drift / 0.587 * patch * greenness[i];
                p[1] += d;
                p
            };
            scene.push(px.map(|c| c + sensor));
        }

        let (dx, dy) = if cfg.jitter > 0 {
            let j = cfg.jitter as i64;
            (frng.gen_range(-j..=j), frng.gen_range(-j..=j))
        } else {
            (0, 0)
        };

        let mut clouds = Vec::new();
        let cloudy = frng.gen_bool(cfg.cloud_prob);
        if cloudy {
            for _ in 0..frng.gen_range(1..=3) {
                let cx = frng.gen_range(0.0..w as f64);
                let cy = frng.gen_range(0.0..h as f64);
                let rx = frng.gen_range(cfg.cloud_radius * 0.5..=cfg.cloud_radius);
                let ry = frng.gen_range(cfg.cloud_radius * 0.5..=cfg.cloud_radius);
                clouds.push((cx, cy, rx, ry));
            }
        }
        cloudy_frames.push(cloudy);

        let mut samples = Vec::with_capacity(n * 3);
        for y in 0..h {
            for x in 0..w {
                let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                let mut p = scene[sy * w + sx];
                for &(cx, cy, rx, ry) in &clouds {
                    let r = (((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2)).sqrt();
                    if r < 1.0 {
                        let alpha = ((1.0 - r) / 0.08).min(1.0);
                        let white = 247.0;
                        p = p.map(|c| c * (1.0 - alpha) + white * alpha);
                    }
                }
                samples.extend(p.map(to_u8));
            }
        }
        frames.push(Raster::rgb(w, h, samples)?);
    }

    let seq = CitySequence {
        city_id: format!("synth-{}", cfg.seed),
        frames,
        timestamps: Some((0..cfg.n_frames).map(|f| format!("t{f}")).collect()),
        label: Some(u8::from(cfg.flood)),
        pair_labels: None,
    };
    let truth = SyntheticTruth { onset, water, cloudy_frames };
    let pair_labels = truth.pair_labels(cfg.n_frames);
    Ok((CitySequence { pair_labels: Some(pair_labels), ..seq }, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::to_hsv;

    fn small(flood: bool, seed: u64) -> SynthConfig {
        SynthConfig { size: 64, flood, seed, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic_sequence(&small(true, 4)).unwrap();
        let b = generate_synthetic_sequence(&small(true, 4)).unwrap();
        assert_eq!(a.0.frames, b.0.frames);
        assert_eq!(a.1, b.1);
        let c = generate_synthetic_sequence(&small(true, 5)).unwrap();
        assert_ne!(a.0.frames, c.0.frames);
    }

    #[test]
    fn no_flood_no_water() {
        let cfg = SynthConfig { cloud_prob: 0.0, ..small(false, 2) };
        let (seq, truth) = generate_synthetic_sequence(&cfg).unwrap();
        assert_eq!(seq.label, Some(0));
        assert!(truth.onset.is_none() && truth.water.is_none());
        assert_eq!(seq.pair_labels, Some(vec![0; 5]));
        for f in &seq.frames {
            let hsv = to_hsv(f).unwrap();
            let watery =
                hsv.s.iter().zip(&hsv.v).filter(|(&s, &v)| (v - 0.25).abs() < 0.05 && (s - 0.45).abs() < 0.1).count();
            assert!(watery * 100 < f.pixel_count(), "{watery} water-like pixels");
        }
    }

    #[test]
    fn flood_region_size_and_labels() {
        let cfg = SynthConfig { cloud_prob: 0.0, jitter: 0, ..small(true, 3) };
        let (seq, truth) = generate_synthetic_sequence(&cfg).unwrap();
        let onset = truth.onset.unwrap();
        assert!((1..6).contains(&onset));
        let labels = seq.pair_labels.unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 1);
        assert_eq!(labels[onset - 1], 1);
        let water = truth.water.unwrap();
        let frac = water.valid_fraction();
        assert!(frac > 0.25 && frac < 0.5, "water fraction {frac}");
        // water pixels take the configured colour from onset on
        let i = water.bits().iter().position(|&b| b).unwrap();
        let before = &seq.frames[onset - 1].samples()[i * 3..i * 3 + 3];
        let after = &seq.frames[onset].samples()[i * 3..i * 3 + 3];
        assert_ne!(before, after);
        assert!(after.iter().all(|&c| c < 80));
    }

    #[test]
    fn lowland_is_contiguous() {
        let mut rng = seed::rng(1);
        let elev = value_noise(&mut rng, 40, 40, 16);
        let region = lowland_region(&elev, 40, 40, &vec![false; 1600], 500);
        assert_eq!(region.iter().filter(|&&b| b).count(), 500);
        // flood fill from one region pixel reaches all of it
        let start = region.iter().position(|&b| b).unwrap();
        let mut seen = vec![false; 1600];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(i) = stack.pop() {
            count += 1;
            let (x, y) = (i % 40, i / 40);
            for (nx, ny) in [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)] {
                if nx < 40 && ny < 40 && region[ny * 40 + nx] && !seen[ny * 40 + nx] {
                    seen[ny * 40 + nx] = true;
                    stack.push(ny * 40 + nx);
                }
            }
        }
        assert_eq!(count, 500);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SynthConfig { n_frames: 1, ..Default::default() }.validate().is_err());
        assert!(SynthConfig { cloud_prob: 1.5, ..Default::default() }.validate().is_err());
    }
}
