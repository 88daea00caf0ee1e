//! Ridge degradation and occlusion recipes.
//!
//! Stages run in a fixed order: blur, dryness, moisture, overlay, line
//! occlusions, digit-like stamps.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{gaussian_blur, rank_filter, to_u8, Plane};
use crate::image::GrayImage;

const LINE_STREAM: u64 = 1;
const DIGIT_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub image: GrayImage,
    pub alpha: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DegradationRecipe {
    pub blur_sigma: f64,
    pub dryness: f64,
    pub moisture: f64,
    pub overlay: Option<Overlay>,
    pub n_lines: usize,
    pub n_digit_stamps: usize,
    pub seed: u64,
}

impl DegradationRecipe {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::InvalidArgument(format!("{what} out of range: {v}"));
        if !(self.blur_sigma.is_finite() && self.blur_sigma >= 0.0) {
            return Err(bad("blur_sigma", self.blur_sigma));
        }
        if !(0.0..=1.0).contains(&self.dryness) {
            return Err(bad("dryness", self.dryness));
        }
        if !(0.0..=1.0).contains(&self.moisture) {
            return Err(bad("moisture", self.moisture));
        }
        if let Some(o) = &self.overlay {
            if !(0.0..=1.0).contains(&o.alpha) {
                return Err(bad("overlay_alpha", o.alpha));
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines. Known keys: `blur_sigma`, `dryness`,
    /// `moisture`, `overlay` (image path, relative to `base_dir`),
    /// `overlay_alpha`, `n_lines`, `n_digit_stamps`, `seed`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut r = DegradationRecipe::default();
        let mut overlay_path: Option<String> = None;
        let mut overlay_alpha: Option<f64> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("recipe line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let err = || Error::Config(format!("recipe line {}: bad value `{value}` for `{key}`", lineno + 1));
            let float = || value.parse::<f64>().map_err(|_| err());
            let count = || value.parse::<usize>().map_err(|_| err());
            match key {
                "blur_sigma" => r.blur_sigma = float()?,
                "dryness" => r.dryness = float()?,
                "moisture" => r.moisture = float()?,
                "overlay" => overlay_path = Some(value.to_string()),
                "overlay_alpha" => overlay_alpha = Some(float()?),
                "n_lines" => r.n_lines = count()?,
                "n_digit_stamps" => r.n_digit_stamps = count()?,
                "seed" => r.seed = value.parse::<u64>().map_err(|_| err())?,
                other => return Err(Error::Config(format!("unknown recipe key `{other}`"))),
            }
        }
        match (overlay_path, overlay_alpha) {
            (Some(p), alpha) => {
                let image = GrayImage::load(base_dir.join(p))?;
                r.overlay = Some(Overlay {
                    image,
                    alpha: alpha.unwrap_or(0.5),
                });
            }
            (None, Some(_)) => return Err(Error::Config("overlay_alpha given without overlay".into())),
            (None, None) => {}
        }
        r.validate()?;
        Ok(r)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn is_identity(&self) -> bool {
        self.blur_sigma == 0.0
            && self.dryness == 0.0
            && self.moisture == 0.0
            && self.overlay.as_ref().is_none_or(|o| o.alpha == 0.0)
            && self.n_lines == 0
            && self.n_digit_stamps == 0
    }
}

/// A dark occluding stroke.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub width: f64,
    pub ink: f64,
}

/// The line occlusions a recipe draws on a `width` x `height` canvas.
pub fn line_segments(recipe: &DegradationRecipe, width: usize, height: usize) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    rng.set_stream(LINE_STREAM);
    let (w, h) = (width as f64, height as f64);
    let diag = w.hypot(h);
    (0..recipe.n_lines)
        .map(|_| {
            let cx = rng.gen_range(0.1..0.9) * w;
            let cy = rng.gen_range(0.1..0.9) * h;
            let len = rng.gen_range(0.15..0.45) * diag;
            let a = rng.gen_range(0.0..std::f64::consts::PI);
            let (dx, dy) = (a.cos() * len / 2.0, a.sin() * len / 2.0);
            Segment {
                from: (cx - dx, cy - dy),
                to: (cx + dx, cy + dy),
                width: rng.gen_range(2..=5) as f64,
                ink: rng.gen_range(0.0..60.0),
            }
        })
        .collect()
}

/// Strokes of the digit-like stamps, as short polylines.
pub fn digit_strokes(recipe: &DegradationRecipe, width: usize, height: usize) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    rng.set_stream(DIGIT_STREAM);
    let mut out = Vec::new();
    for _ in 0..recipe.n_digit_stamps {
        let size = rng.gen_range(24.0..48.0);
        let ox = rng.gen_range(0.0..(width as f64 - size).max(1.0));
        let oy = rng.gen_range(0.0..(height as f64 - size).max(1.0));
        let stroke_w = rng.gen_range(2..=3) as f64;
        let ink = rng.gen_range(0.0..50.0);
        let mut pen = (ox + rng.gen_range(0.0..size), oy + rng.gen_range(0.0..size));
        for _ in 0..rng.gen_range(2..=4) {
            // Quadratic Bezier from the pen position, flattened to 8 pieces.
            let ctrl = (ox + rng.gen_range(0.0..size), oy + rng.gen_range(0.0..size));
            let end = (ox + rng.gen_range(0.0..size), oy + rng.gen_range(0.0..size));
            let mut prev = pen;
            for i in 1..=8 {
                let t = i as f64 / 8.0;
                let u = 1.0 - t;
                let p = (
                    u * u * pen.0 + 2.0 * u * t * ctrl.0 + t * t * end.0,
                    u * u * pen.1 + 2.0 * u * t * ctrl.1 + t * t * end.1,
                );
                out.push(Segment {
                    from: prev,
                    to: p,
                    width: stroke_w,
                    ink,
                });
                prev = p;
            }
            pen = end;
        }
    }
    out
}

fn draw_segment(p: &mut Plane, seg: &Segment) {
    let r = seg.width / 2.0;
    let x0 = (seg.from.0.min(seg.to.0) - r).floor().max(0.0) as usize;
    let y0 = (seg.from.1.min(seg.to.1) - r).floor().max(0.0) as usize;
    let x1 = ((seg.from.0.max(seg.to.0) + r).ceil().max(0.0) as usize).min(p.width.saturating_sub(1));
    let y1 = ((seg.from.1.max(seg.to.1) + r).ceil().max(0.0) as usize).min(p.height.saturating_sub(1));
    let (vx, vy) = (seg.to.0 - seg.from.0, seg.to.1 - seg.from.1);
    let len2 = vx * vx + vy * vy;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (px, py) = (x as f64 - seg.from.0, y as f64 - seg.from.1);
            let t = if len2 > 0.0 {
                ((px * vx + py * vy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d = (px - t * vx).hypot(py - t * vy);
            if d <= r {
                let v = &mut p.data[y * p.width + x];
                *v = v.min(seg.ink as f32);
            }
        }
    }
}

fn apply_gamma(p: &mut Plane, gamma: f64) {
    for v in p.data.iter_mut() {
        let n = (*v as f64 / 255.0).clamp(0.0, 1.0);
        *v = (255.0 * n.powf(gamma)) as f32;
    }
}

/// Applies the recipe to `image`. The foreground mask is carried through
/// unchanged.
pub fn degrade(image: &GrayImage, recipe: &DegradationRecipe) -> Result<GrayImage> {
    recipe.validate()?;
    if let Some(o) = &recipe.overlay {
        image.check_same(&o.image)?;
    }
    if recipe.is_identity() {
        return Ok(image.clone());
    }
    let mut p = Plane::from_image(image);
    p = gaussian_blur(&p, recipe.blur_sigma);
    if recipe.dryness > 0.0 {
        // Thin dark ridges: grey-level dilation of the bright valleys, then
        // brighten.
        let radius = (recipe.dryness * 2.0).round() as usize;
        p = rank_filter(&p, radius, false);
        apply_gamma(&mut p, 1.0 / (1.0 + recipe.dryness));
    }
    if recipe.moisture > 0.0 {
        let radius = (recipe.moisture * 2.0).round() as usize;
        p = rank_filter(&p, radius, true);
        apply_gamma(&mut p, 1.0 + recipe.moisture);
    }
    if let Some(o) = &recipe.overlay {
        let a = o.alpha as f32;
        for (v, &b) in p.data.iter_mut().zip(o.image.pixels()) {
            *v = (1.0 - a) * *v + a * b as f32;
        }
    }
    for seg in line_segments(recipe, image.width(), image.height()) {
        draw_segment(&mut p, &seg);
    }
    for seg in digit_strokes(recipe, image.width(), image.height()) {
        draw_segment(&mut p, &seg);
    }
    let mut out = GrayImage::new(
        image.width(),
        image.height(),
        p.data.iter().map(|&v| to_u8(v as f64)).collect(),
    )?
    .with_ppi(image.ppi())?;
    out.set_foreground(image.foreground().cloned())?;
    Ok(out)
}
