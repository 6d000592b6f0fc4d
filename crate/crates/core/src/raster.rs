//! Orthographic heightmap rendering.
//!
//! Scenes render top-down into square "depth" rasters: each pixel reads the
//! maximum nominal height of the shapes covering its center, normalized by
//! `H_MAX`. Pixel-center sampling, no anti-aliasing, so every value is an
//! exact function of the geometry and oracle tests can predict whole rasters.

use crate::geom::{point_in_obb, Circle, Obb, Vec2};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Height ceiling for normalization: values are height / H_MAX.
pub const H_MAX: f64 = 0.1;

/// Nominal render heights (meters) by scene role.
pub const HEIGHT_TARGET_DISC: f64 = 0.03;
pub const HEIGHT_TOOL_BLOCK: f64 = 0.05;
pub const HEIGHT_CONTAINER: f64 = 0.08;
pub const HEIGHT_PARTICLE: f64 = 0.02;

/// Scene raster resolution and candidate-patch resolution (pixels per side).
pub const SCENE_RESOLUTION: usize = 64;
pub const PATCH_RESOLUTION: usize = 32;
/// Patch viewport side length in meters.
pub const PATCH_EXTENT: f64 = 0.45;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("downsample factor {factor} does not divide {width}x{height}")]
    IndivisibleFactor { factor: usize, width: usize, height: usize },
}

/// Square orthographic viewport: world window `extent` meters wide centered
/// at `center`, sampled at `resolution` pixels per side.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Viewport<R> {
    pub center: Vec2<R>,
    pub extent: R,
    pub resolution: usize,
}

impl<R: Scalar> Viewport<R> {
    pub fn new(center: Vec2<R>, extent: R, resolution: usize) -> Self {
        debug_assert!(extent > R::zero() && resolution >= 8);
        Self { center, extent, resolution }
    }

    /// World position of a pixel center. Row 0 is the top of the window.
    #[inline]
    pub fn pixel_center(&self, row: usize, col: usize) -> Vec2<R> {
        let n = R::from_usize(self.resolution).unwrap();
        let px = self.extent / n;
        let half = self.extent * R::c(0.5);
        let dx = (R::from_usize(col).unwrap() + R::c(0.5)) * px - half;
        let dy = half - (R::from_usize(row).unwrap() + R::c(0.5)) * px;
        Vec2::new(self.center.x + dx, self.center.y + dy)
    }

    /// Pixel index range [lo, hi) whose centers can fall inside a world AABB.
    fn pixel_span(&self, lo: Vec2<R>, hi: Vec2<R>) -> (usize, usize, usize, usize) {
        let n = self.resolution;
        let nf = R::from_usize(n).unwrap();
        let px = self.extent / nf;
        let half = self.extent * R::c(0.5);
        // col such that center.x >= lo.x  =>  col >= (lo.x - cx + half)/px - 0.5
        let to_col = |x: R| ((x - self.center.x + half) / px - R::c(0.5)).ceil();
        let to_row = |y: R| ((self.center.y + half - y) / px - R::c(0.5)).ceil();
        let clamp = |v: R| -> usize {
            if v < R::zero() {
                0
            } else if v > nf {
                n
            } else {
                v.to_usize().unwrap_or(n).min(n)
            }
        };
        let c0 = clamp(to_col(lo.x));
        let c1 = clamp(to_col(hi.x).max(R::zero()));
        let r0 = clamp(to_row(hi.y));
        let r1 = clamp(to_row(lo.y).max(R::zero()));
        (r0, r1.max(r0), c0, c1.max(c0))
    }
}

/// Normalized heightmap; values in [0, 1], row-major, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRaster {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl DepthRaster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0.0; width * height] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.values[row * self.width + col] = v;
    }

    pub fn max_value(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    /// (row, col) of the maximum value; row-major first on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, f32::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 / self.width, best.0 % self.width)
    }

    pub fn mean(&self) -> f64 {
        let mut acc = 0.0f64;
        for &v in &self.values {
            acc += v as f64;
        }
        acc / self.values.len() as f64
    }
}

/// Binary occupancy raster; values in {0, 1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskRaster {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u8>,
}

impl MaskRaster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0; width * height] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.width + col]
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }
}

/// A renderable shape: box or disc.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum RenderShape<R> {
    Box(Obb<R>),
    Disc(Circle<R>),
}

impl<R: Scalar> RenderShape<R> {
    fn aabb(&self) -> (Vec2<R>, Vec2<R>) {
        match self {
            RenderShape::Box(obb) => obb.aabb(),
            RenderShape::Disc(c) => (
                Vec2::new(c.center.x - c.radius, c.center.y - c.radius),
                Vec2::new(c.center.x + c.radius, c.center.y + c.radius),
            ),
        }
    }

    #[inline]
    fn covers(&self, p: Vec2<R>) -> bool {
        match self {
            RenderShape::Box(obb) => point_in_obb(p, obb),
            RenderShape::Disc(c) => p.dist(c.center) <= c.radius,
        }
    }
}

/// Render shapes with nominal heights into a normalized heightmap.
/// Pixel value = max covering height / H_MAX; empty pixels read 0.
pub fn render_depth<R: Scalar>(shapes: &[(RenderShape<R>, R)], vp: &Viewport<R>) -> DepthRaster {
    let n = vp.resolution;
    let mut out = DepthRaster::zeros(n, n);
    for (shape, height) in shapes {
        debug_assert!(*height >= R::zero() && height.f64() <= H_MAX + 1e-12);
        let v = (height.f64() / H_MAX).clamp(0.0, 1.0) as f32;
        let (lo, hi) = shape.aabb();
        let (r0, r1, c0, c1) = vp.pixel_span(lo, hi);
        for row in r0..r1 {
            for col in c0..c1 {
                if shape.covers(vp.pixel_center(row, col)) {
                    let idx = row * n + col;
                    if v > out.values[idx] {
                        out.values[idx] = v;
                    }
                }
            }
        }
    }
    out
}

/// Render boxes into a binary mask under the same pixel-center rule.
pub fn render_mask<R: Scalar>(shapes: &[Obb<R>], vp: &Viewport<R>) -> MaskRaster {
    let n = vp.resolution;
    let mut out = MaskRaster::zeros(n, n);
    for shape in shapes {
        let (lo, hi) = shape.aabb();
        let (r0, r1, c0, c1) = vp.pixel_span(lo, hi);
        for row in r0..r1 {
            for col in c0..c1 {
                if point_in_obb(vp.pixel_center(row, col), shape) {
                    out.values[row * n + col] = 1;
                }
            }
        }
    }
    out
}

/// Block-mean pooling by an integer factor that must divide both dimensions.
pub fn downsample(r: &DepthRaster, factor: usize) -> Result<DepthRaster, RasterError> {
    if factor == 0 || r.width % factor != 0 || r.height % factor != 0 {
        return Err(RasterError::IndivisibleFactor { factor, width: r.width, height: r.height });
    }
    let (w, h) = (r.width / factor, r.height / factor);
    let mut out = DepthRaster::zeros(w, h);
    let inv = 1.0f64 / (factor * factor) as f64;
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0f64;
            for dr in 0..factor {
                for dc in 0..factor {
                    acc += r.get(row * factor + dr, col * factor + dc) as f64;
                }
            }
            out.set(row, col, (acc * inv) as f32);
        }
    }
    Ok(out)
}

/// P6 PPM bytes: grayscale via round(v * 255) on each channel.
pub fn depth_to_ppm(r: &DepthRaster) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", r.width, r.height).into_bytes();
    for &v in &r.values {
        let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        out.extend_from_slice(&[g, g, g]);
    }
    out
}
