//! Letter-shaped absorption phantoms.
//!
//! Letters make hard test inclusions: they are non-convex and carry voids.
//! Stroke geometry is shipped as a data file (`assets/glyphs.json`, unit
//! square coordinates); shapes are unions of convex quads and annulus
//! sectors, rasterized onto grid nodes after mapping into a placement box.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};
use serde::Deserialize;
use std::collections::HashMap;
use std::sync::OnceLock;

#[derive(Debug, Clone, Deserialize)]
struct Ring {
    cx: f64,
    cy: f64,
    r_outer: f64,
    r_inner: f64,
    deg_start: f64,
    deg_end: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct GlyphShape {
    quads: Vec<[[f64; 2]; 4]>,
    rings: Vec<Ring>,
}

fn glyph_table() -> &'static HashMap<String, GlyphShape> {
    static TABLE: OnceLock<HashMap<String, GlyphShape>> = OnceLock::new();
    TABLE.get_or_init(|| {
        serde_json::from_str(include_str!("../assets/glyphs.json"))
            .expect("bundled glyph table parses")
    })
}

fn in_convex_quad(q: &[[f64; 2]; 4], x: f64, y: f64) -> bool {
    let mut sign = 0.0_f64;
    for e in 0..4 {
        let a = q[e];
        let b = q[(e + 1) % 4];
        let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        if cross.abs() < 1e-15 {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

fn in_ring(r: &Ring, x: f64, y: f64) -> bool {
    let dx = x - r.cx;
    let dy = y - r.cy;
    let rad = (dx * dx + dy * dy).sqrt();
    if rad < r.r_inner || rad > r.r_outer {
        return false;
    }
    let mut deg = dy.atan2(dx).to_degrees();
    while deg < r.deg_start {
        deg += 360.0;
    }
    deg <= r.deg_end
}

fn in_glyph(shape: &GlyphShape, u: f64, v: f64) -> bool {
    shape.quads.iter().any(|q| in_convex_quad(q, u, v))
        || shape.rings.iter().any(|r| in_ring(r, u, v))
}

/// Axis-aligned placement box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy)]
pub struct Placement {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Placement {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Placement { x0, y0, x1, y1 }
    }

    /// Maps a grid point into glyph coordinates; `None` outside the box.
    fn to_unit(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        if self.x1 <= self.x0 || self.y1 <= self.y0 {
            return None;
        }
        let u = (x - self.x0) / (self.x1 - self.x0);
        let v = (y - self.y0) / (self.y1 - self.y0);
        if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
            Some((u, v))
        } else {
            None
        }
    }

    fn split_horizontal(&self, from: f64, to: f64) -> Placement {
        let w = self.x1 - self.x0;
        Placement {
            x0: self.x0 + from * w,
            y0: self.y0,
            x1: self.x0 + to * w,
            y1: self.y1,
        }
    }
}

/// Rasterizes a glyph ("A", "S", "Z", "Omega", or the two-letter "SZ")
/// onto the grid nodes inside the placement box.
pub fn rasterize_letter(glyph: &str, grid: &Grid2D, placement: Placement) -> Result<Vec<bool>> {
    let pieces: Vec<(&GlyphShape, Placement)> = if glyph == "SZ" {
        let s = glyph_table()
            .get("S")
            .ok_or_else(|| Error::UnknownGlyph("S".into()))?;
        let z = glyph_table()
            .get("Z")
            .ok_or_else(|| Error::UnknownGlyph("Z".into()))?;
        vec![
            (s, placement.split_horizontal(0.0, 0.46)),
            (z, placement.split_horizontal(0.54, 1.0)),
        ]
    } else {
        let shape = glyph_table()
            .get(glyph)
            .ok_or_else(|| Error::UnknownGlyph(glyph.to_string()))?;
        vec![(shape, placement)]
    };
    let mut mask = vec![false; grid.n_nodes()];
    for (i, k, x, y) in grid.nodes() {
        for (shape, pl) in &pieces {
            if let Some((u, v)) = pl.to_unit(x, y) {
                if in_glyph(shape, u, v) {
                    mask[grid.idx(i, k)] = true;
                    break;
                }
            }
        }
    }
    Ok(mask)
}

/// Absorption inclusion: `mu_a = c_a` on the mask, zero outside; constant
/// scattering level over the whole slab.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub grid: Grid2D,
    pub mask: Vec<bool>,
    pub c_a: f64,
    pub mu_s_level: f64,
}

impl Phantom {
    pub fn new(grid: Grid2D, mask: Vec<bool>, c_a: f64, mu_s_level: f64) -> Self {
        assert_eq!(mask.len(), grid.n_nodes());
        Phantom {
            grid,
            mask,
            c_a,
            mu_s_level,
        }
    }

    pub fn empty(grid: Grid2D, mu_s_level: f64) -> Self {
        Phantom::new(grid, vec![false; grid.n_nodes()], 0.0, mu_s_level)
    }

    pub fn mu_a_field(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid,
            values: self
                .mask
                .iter()
                .map(|&m| if m { self.c_a } else { 0.0 })
                .collect(),
        }
    }

    pub fn mu_s_field(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid,
            values: vec![self.mu_s_level; self.grid.n_nodes()],
        }
    }

    /// `a = mu_a + mu_s`.
    pub fn attenuation_field(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid,
            values: self
                .mask
                .iter()
                .map(|&m| self.mu_s_level + if m { self.c_a } else { 0.0 })
                .collect(),
        }
    }

    /// Mass centroid of the inclusion.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut n = 0.0;
        for (i, k, x, y) in self.grid.nodes() {
            if self.mask[self.grid.idx(i, k)] {
                sx += x;
                sy += y;
                n += 1.0;
            }
        }
        (n > 0.0).then(|| [sx / n, sy / n])
    }
}

/// Number of 4-connected components of `true` nodes.
pub fn count_components(grid: &Grid2D, mask: &[bool]) -> usize {
    count_components_of(grid, mask, true).0
}

/// Number of 4-connected components of `false` nodes that do not touch the
/// grid border (interior voids).
pub fn count_holes(grid: &Grid2D, mask: &[bool]) -> usize {
    let (_, interior) = count_components_of(grid, mask, false);
    interior
}

fn count_components_of(grid: &Grid2D, mask: &[bool], value: bool) -> (usize, usize) {
    let w = grid.nx + 1;
    let h = grid.ny + 1;
    let mut seen = vec![false; mask.len()];
    let mut total = 0;
    let mut interior = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if seen[start] || mask[start] != value {
            continue;
        }
        total += 1;
        let mut touches_border = false;
        stack.push(start);
        seen[start] = true;
        while let Some(at) = stack.pop() {
            let (i, k) = (at % w, at / w);
            if i == 0 || k == 0 || i == w - 1 || k == h - 1 {
                touches_border = true;
            }
            let mut push = |n: usize| {
                if !seen[n] && mask[n] == value {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                push(at - 1);
            }
            if i + 1 < w {
                push(at + 1);
            }
            if k > 0 {
                push(at - w);
            }
            if k + 1 < h {
                push(at + w);
            }
        }
        if !touches_border {
            interior += 1;
        }
    }
    (total, interior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain2D;

    fn grid() -> Grid2D {
        Grid2D::over_domain(&Domain2D::reference(), 20, 20)
    }

    fn default_placement() -> Placement {
        Placement::new(-0.35, 1.15, 0.35, 1.85)
    }

    #[test]
    fn empty_placement_gives_empty_mask() {
        let g = grid();
        let mask = rasterize_letter("A", &g, Placement::new(0.1, 1.5, 0.1, 1.5)).unwrap();
        assert!(mask.iter().all(|&m| !m));
    }

    #[test]
    fn unknown_glyph_is_an_error() {
        let g = grid();
        assert!(matches!(
            rasterize_letter("Q", &g, default_placement()),
            Err(Error::UnknownGlyph(_))
        ));
    }

    #[test]
    fn letter_a_has_one_component_and_one_hole() {
        let g = grid();
        let mask = rasterize_letter("A", &g, default_placement()).unwrap();
        assert!(mask.iter().any(|&m| m));
        assert_eq!(count_components(&g, &mask), 1, "letter body");
        assert_eq!(count_holes(&g, &mask), 1, "counter of the letter");
    }

    #[test]
    fn letters_sz_have_two_components() {
        let g = grid();
        let mask = rasterize_letter("SZ", &g, default_placement()).unwrap();
        assert_eq!(count_components(&g, &mask), 2);
    }

    #[test]
    fn omega_rasterizes_nonempty() {
        let g = grid();
        let mask = rasterize_letter("Omega", &g, default_placement()).unwrap();
        assert!(mask.iter().filter(|&&m| m).count() > 10);
        assert_eq!(count_components(&g, &mask), 1);
    }

    #[test]
    fn phantom_fields_follow_the_mask() {
        let g = grid();
        let mask = rasterize_letter("A", &g, default_placement()).unwrap();
        let ph = Phantom::new(g, mask.clone(), 5.0, 5.0);
        let mu_a = ph.mu_a_field();
        let a = ph.attenuation_field();
        for idx in 0..mask.len() {
            if mask[idx] {
                assert_eq!(mu_a.values[idx], 5.0);
                assert_eq!(a.values[idx], 10.0);
            } else {
                assert_eq!(mu_a.values[idx], 0.0);
                assert_eq!(a.values[idx], 5.0);
            }
        }
        let c = ph.centroid().unwrap();
        assert!(c[0].abs() < 0.05 && (1.15..1.85).contains(&c[1]));
    }
}
