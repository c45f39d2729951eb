//! Anti-aliased test shapes on a black background.
//!
//! A shape lives in unit coordinates (it fits inside the unit disc) and is
//! drawn with radius `min(W, H) / 8` at scale 1, centered on [`center`],
//! then grown by `scale`, turned by `rotation_deg` (raster convention, so
//! positive angles look clockwise on screen) and offset by `(dx, dy)`
//! pixels. The offset is applied before scaling and rotation: a query drawn
//! with `(a, phi, t)` is the reference translated by `t`, then grown and
//! turned about the center.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use crate::{center, Grid};

const SUPERSAMPLE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Triangle,
    Square,
    Cross,
    Star,
    Ring,
    Ell,
    /// Several of the above at fixed offsets; a rich spectrum.
    Scene,
}

impl Shape {
    pub const ALL: [Shape; 7] = [
        Shape::Triangle,
        Shape::Square,
        Shape::Cross,
        Shape::Star,
        Shape::Ring,
        Shape::Ell,
        Shape::Scene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Triangle => "triangle",
            Shape::Square => "square",
            Shape::Cross => "cross",
            Shape::Star => "star",
            Shape::Ring => "ring",
            Shape::Ell => "ell",
            Shape::Scene => "scene",
        }
    }

    /// Whether the unit-coordinate point `(u, v)` is inside the shape.
    pub fn contains(self, u: f64, v: f64) -> bool {
        match self {
            // scalene so the spectrum has no rotational symmetry beyond pi
            Shape::Triangle => in_polygon(&[(0.0, -1.0), (0.85, 0.55), (-0.6, 0.75)], u, v),
            Shape::Square => u.abs() <= 0.7 && v.abs() <= 0.7,
            Shape::Cross => {
                (u.abs() <= 0.25 && v.abs() <= 0.95) || (u.abs() <= 0.95 && v.abs() <= 0.25)
            }
            Shape::Star => {
                let pts: Vec<(f64, f64)> = (0..10)
                    .map(|k| {
                        let r = if k % 2 == 0 { 1.0 } else { 0.4 };
                        let a = -PI / 2.0 + k as f64 * PI / 5.0;
                        (r * libm::cos(a), r * libm::sin(a))
                    })
                    .collect();
                in_polygon(&pts, u, v)
            }
            Shape::Ring => {
                let r2 = u * u + v * v;
                (0.36..=1.0).contains(&r2)
            }
            Shape::Ell => in_polygon(
                &[
                    (-0.6, -0.9),
                    (-0.2, -0.9),
                    (-0.2, 0.5),
                    (0.7, 0.5),
                    (0.7, 0.9),
                    (-0.6, 0.9),
                ],
                u,
                v,
            ),
            Shape::Scene => {
                let part =
                    |s: Shape, ox: f64, oy: f64, r: f64| s.contains((u - ox) / r, (v - oy) / r);
                part(Shape::Triangle, -0.45, -0.4, 0.5)
                    || part(Shape::Ell, 0.5, -0.35, 0.4)
                    || part(Shape::Star, 0.35, 0.55, 0.35)
                    || part(Shape::Square, -0.5, 0.5, 0.25)
            }
        }
    }
}

impl FromStr for Shape {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or(())
    }
}

/// Where and how a shape is drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub scale: f64,
    pub rotation_deg: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Placement {
            scale: 1.0,
            rotation_deg: 0.0,
            dx: 0.0,
            dy: 0.0,
        }
    }
}

pub fn render(shape: Shape, placement: &Placement, width: usize, height: usize) -> Grid<u8> {
    let (cx, cy) = center(width, height);
    let (cx, cy) = (cx as f64, cy as f64);
    let radius = width.min(height) as f64 / 8.0 * placement.scale;
    let phi = placement.rotation_deg.rem_euclid(360.0) * PI / 180.0;
    let (sin, cos) = (libm::sin(phi), libm::cos(phi));
    let n = SUPERSAMPLE;
    let total = (n * n) as f64;

    Grid::from_fn(width, height, |x, y| {
        let mut hits = 0usize;
        for sy in 0..n {
            for sx in 0..n {
                let px = x as f64 + (sx as f64 + 0.5) / n as f64 - 0.5 - cx;
                let py = y as f64 + (sy as f64 + 0.5) / n as f64 - 0.5 - cy;
                // undo rotation, then scale, then the pre-offset
                let lx = (cos * px + sin * py - placement.scale * placement.dx) / radius;
                let ly = (-sin * px + cos * py - placement.scale * placement.dy) / radius;
                if shape.contains(lx, ly) {
                    hits += 1;
                }
            }
        }
        libm::floor(hits as f64 / total * 255.0 + 0.5) as u8
    })
}

fn in_polygon(pts: &[(f64, f64)], u: f64, v: f64) -> bool {
    let mut inside = false;
    let mut j = pts.len() - 1;
    for i in 0..pts.len() {
        let (xi, yi) = pts[i];
        let (xj, yj) = pts[j];
        if (yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}
