//! Drawing annotation and track overlays onto frames.

use std::path::Path;

use image::{Rgb, RgbImage};
use vice_core::geometry::ImagePoint;

pub const DOT_RADIUS: f64 = 3.0;
pub const RESPAWN_RING: (f64, f64) = (5.0, 6.5);
const BACKGROUND: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    Default,
    /// Okabe-Ito colours, distinguishable under common colour-vision deficiencies.
    ColorBlind,
}

impl Palette {
    pub fn parse(name: &str) -> Option<Palette> {
        match name {
            "default" => Some(Palette::Default),
            "colorblind" => Some(Palette::ColorBlind),
            _ => None,
        }
    }

    pub fn annotation(&self) -> Rgb<u8> {
        match self {
            Palette::Default => Rgb([0, 0, 255]),
            Palette::ColorBlind => Rgb([0, 114, 178]),
        }
    }

    /// Colour of a pose source; `mocap` and `onboard` are fixed, other
    /// names take the extra colours in order of `rank`.
    pub fn source(&self, name: &str, rank: usize) -> Rgb<u8> {
        let (mocap, onboard, extra): (_, _, &[[u8; 3]]) = match self {
            Palette::Default => ([255, 0, 0], [0, 200, 0], &[[255, 0, 255], [0, 200, 200], [255, 160, 0], [128, 0, 128]]),
            Palette::ColorBlind => (
                [213, 94, 0],
                [0, 158, 115],
                &[[230, 159, 0], [204, 121, 167], [86, 180, 233], [240, 228, 66]],
            ),
        };
        Rgb(match name {
            "mocap" => mocap,
            "onboard" => onboard,
            _ => extra[rank % extra.len()],
        })
    }
}

/// One set of same-coloured markers; `true` marks a segment start.
pub struct Layer {
    pub color: Rgb<u8>,
    pub points: Vec<(ImagePoint, bool)>,
}

fn fill(img: &mut RgbImage, p: &ImagePoint, inner: f64, outer: f64, color: Rgb<u8>) {
    if !p.is_finite() {
        return;
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = ((p.u - outer).floor() as i64).max(0);
    let x1 = ((p.u + outer).ceil() as i64).min(w - 1);
    let y0 = ((p.v - outer).floor() as i64).max(0);
    let y1 = ((p.v + outer).ceil() as i64).min(h - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d2 = (x as f64 - p.u).powi(2) + (y as f64 - p.v).powi(2);
            if d2 <= outer * outer && d2 >= inner * inner {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// Filled disc centred on `p`; pixel `(x, y)` is centred on `u = x, v = y`.
pub fn draw_dot(img: &mut RgbImage, p: &ImagePoint, color: Rgb<u8>) {
    fill(img, p, 0.0, DOT_RADIUS, color);
}

pub fn draw_layers(img: &mut RgbImage, layers: &[Layer]) {
    for layer in layers {
        for (p, respawn) in &layer.points {
            if *respawn {
                fill(img, p, RESPAWN_RING.0, RESPAWN_RING.1, Rgb([0, 0, 0]));
            }
            draw_dot(img, p, layer.color);
        }
    }
}

/// The frame image as RGB, or a flat grey canvas when it cannot be read.
pub fn base_image(path: Option<&Path>, width: u32, height: u32) -> RgbImage {
    path.and_then(|p| image::open(p).ok())
        .map(|i| i.to_rgb8())
        .filter(|i| i.width() == width && i.height() == height)
        .unwrap_or_else(|| RgbImage::from_pixel(width, height, Rgb([BACKGROUND; 3])))
}
