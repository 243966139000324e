use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;

use super::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Site positions of a hexagonal grid; site 0 is the measured central cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    sites: Vec<Point>,
    inter_site_distance: f64,
    min_link_distance: f64,
}

impl NetworkLayout {
    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn inter_site_distance(&self) -> f64 {
        self.inter_site_distance
    }

    pub fn min_link_distance(&self) -> f64 {
        self.min_link_distance
    }

    /// Whether `p` lies in the hexagonal cell of the central site.
    ///
    /// The cell is bounded by the perpendicular bisectors towards the six
    /// first-ring neighbours at angles `k · 60°`.
    pub fn in_central_cell(&self, p: Point) -> bool {
        let apothem = 0.5 * self.inter_site_distance;
        (0..6).all(|k| {
            let a = core::f64::consts::FRAC_PI_3 * k as f64;
            p.x * a.cos() + p.y * a.sin() <= apothem
        })
    }

    /// Whether `p` is an admissible user position.
    pub fn admits(&self, p: Point) -> bool {
        self.in_central_cell(p) && p.norm() >= self.min_link_distance
    }
}

/// Lays out `1 + 3 r (r + 1)` sites on a hexagonal grid of `config.rings`
/// rings around the origin, ordered by ring.
pub fn build_layout(config: &SimConfig) -> NetworkLayout {
    let d = config.inter_site_distance_m;
    let rings = config.rings as i64;
    let mut axial: Vec<(i64, i64)> = Vec::new();
    for q in -rings..=rings {
        for r in (-rings).max(-q - rings)..=rings.min(-q + rings) {
            axial.push((q, r));
        }
    }
    let ring = |&(q, r): &(i64, i64)| (q.abs() + r.abs() + (q + r).abs()) / 2;
    axial.sort_by_key(|c| (ring(c), c.0, c.1));
    let half_sqrt3 = 0.5 * 3f64.sqrt();
    let sites = axial
        .iter()
        .map(|&(q, r)| Point {
            x: d * (q as f64 + 0.5 * r as f64),
            y: d * half_sqrt3 * r as f64,
        })
        .collect();
    NetworkLayout {
        sites,
        inter_site_distance: d,
        min_link_distance: config.min_link_distance_m,
    }
}

/// Draws one position uniformly over the admissible part of the central cell.
pub(crate) fn drop_user<R: Rng + ?Sized>(layout: &NetworkLayout, rng: &mut R) -> Point {
    // circumradius of the cell
    let rc = layout.inter_site_distance / 3f64.sqrt();
    loop {
        let p = Point {
            x: rng.random_range(-rc..rc),
            y: rng.random_range(-rc..rc),
        };
        if layout.admits(p) {
            return p;
        }
    }
}

/// Uniform user positions in the central cell, at least the minimum link
/// distance from its site.
pub fn drop_users<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    count: usize,
    rng: &mut R,
) -> Vec<Point> {
    (0..count).map(|_| drop_user(layout, rng)).collect()
}
