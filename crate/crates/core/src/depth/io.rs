//! Point clouds as ASCII PLY, depth images as raw little-endian floats.
//!
//! Depth image layout: `width: u32`, `height: u32`, then `width * height`
//! `f32` values row-major; absent pixels are stored as NaN.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use super::{DepthError, DepthImage};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DepthError + '_ {
    move |source| DepthError::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> DepthError {
    DepthError::Format { path: path.display().to_string(), message: message.into() }
}

pub fn read_ply(path: &Path) -> Result<Vec<Vector3<f64>>, DepthError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_ply(&text).map_err(|m| format_err(path, m))
}

/// Parse an ASCII PLY 1.0 body. Only the `x y z` vertex properties are
/// kept; other properties and elements are skipped.
pub fn parse_ply(text: &str) -> Result<Vec<Vector3<f64>>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err("line 1: missing 'ply' magic".into()),
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut properties: Vec<String> = Vec::new();
    let mut elements_before_vertex = false;
    loop {
        let (n, line) = lines.next().ok_or("unterminated header")?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", "1.0"] => {}
            ["format", other, ..] => return Err(format!("line {}: unsupported format '{other}'", n + 1)),
            ["element", "vertex", count] => {
                vertex_count = Some(count.parse::<usize>().map_err(|_| format!("line {}: bad vertex count", n + 1))?);
                in_vertex = true;
            }
            ["element", ..] => {
                if vertex_count.is_none() {
                    elements_before_vertex = true;
                }
                in_vertex = false;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(format!("line {}: list properties on vertices are not supported", n + 1))
            }
            ["property", _, name] if in_vertex => properties.push((*name).to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    if elements_before_vertex {
        return Err("vertex element must come first".into());
    }
    let count = vertex_count.ok_or("no vertex element")?;
    let index = |name: &str| {
        properties.iter().position(|p| p == name).ok_or(format!("vertex property '{name}' missing"))
    };
    let (ix, iy, iz) = (index("x")?, index("y")?, index("z")?);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = lines.next().ok_or(format!("expected {count} vertices, got {}", points.len()))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        if values.len() != properties.len() {
            return Err(format!("line {}: expected {} values, got {}", n + 1, properties.len(), values.len()));
        }
        points.push(Vector3::new(values[ix], values[iy], values[iz]));
    }
    Ok(points)
}

pub fn format_ply(points: &[Vector3<f64>]) -> String {
    let mut out = String::with_capacity(64 + points.len() * 32);
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", points.len()));
    out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in points {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}

pub fn write_ply(path: &Path, points: &[Vector3<f64>]) -> Result<(), DepthError> {
    fs::write(path, format_ply(points)).map_err(io_err(path))
}

pub fn encode_depth_image(image: &DepthImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + image.data().len() * 4);
    out.extend_from_slice(&image.width().to_le_bytes());
    out.extend_from_slice(&image.height().to_le_bytes());
    for d in image.data() {
        out.extend_from_slice(&d.map_or(f32::NAN, |d| d as f32).to_le_bytes());
    }
    out
}

pub fn decode_depth_image(bytes: &[u8]) -> Result<DepthImage, String> {
    if bytes.len() < 8 {
        return Err("truncated header".into());
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let expected = 8 + 4 * width as usize * height as usize;
    if bytes.len() != expected {
        return Err(format!("{width}x{height} image needs {expected} bytes, got {}", bytes.len()));
    }
    let data = bytes[8..]
        .chunks_exact(4)
        .map(|c| {
            let d = f32::from_le_bytes(c.try_into().unwrap());
            (d.is_finite() && d > 0.0).then_some(d as f64)
        })
        .collect();
    DepthImage::from_data(width, height, data).map_err(|e| e.to_string())
}

pub fn read_depth_image(path: &Path) -> Result<DepthImage, DepthError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_depth_image(&bytes).map_err(|m| format_err(path, m))
}

pub fn write_depth_image(path: &Path, image: &DepthImage) -> Result<(), DepthError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&encode_depth_image(image)).map_err(io_err(path))
}
