//! Box buildings, candidate sites, grid cells and exact line-of-sight tests.

use serde::{Deserialize, Serialize};

/// Distance along a link from the site within which hits on the site's own
/// host building are ignored.
pub const HOST_SKIP_M: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn axis(&self, k: usize) -> f64 {
        match k {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

/// Axis-aligned building standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub h: f64,
}

impl Building {
    pub fn is_valid(&self) -> bool {
        self.x1 > self.x0
            && self.y1 > self.y0
            && self.h > 0.0
            && [self.x0, self.y0, self.x1, self.y1, self.h]
                .iter()
                .all(|v| v.is_finite())
    }

    fn lo(&self, k: usize) -> f64 {
        [self.x0, self.y0, 0.0][k]
    }

    fn hi(&self, k: usize) -> f64 {
        [self.x1, self.y1, self.h][k]
    }

    /// Strictly interior point test.
    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|k| self.lo(k) < p.axis(k) && p.axis(k) < self.hi(k))
    }

    /// Footprint test on the ground plane, strict.
    pub fn covers_xy(&self, x: f64, y: f64) -> bool {
        self.x0 < x && x < self.x1 && self.y0 < y && y < self.y1
    }

    /// Parameter interval `(t0, t1)` of `a + t (b - a)` lying strictly inside
    /// the box, or `None` when the segment's line misses the interior.
    pub fn segment_interval(&self, a: &Point3, b: &Point3) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for k in 0..3 {
            let p = a.axis(k);
            let d = b.axis(k) - p;
            let (lo, hi) = (self.lo(k), self.hi(k));
            if d == 0.0 {
                if !(lo < p && p < hi) {
                    return None;
                }
                continue;
            }
            let (u, v) = ((lo - p) / d, (hi - p) / d);
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
            if t1 <= t0 {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// True when the open segment `a -> b` passes through the interior,
    /// ignoring the first `skip` meters from `a`.
    pub fn occludes(&self, a: &Point3, b: &Point3, skip: f64) -> bool {
        let Some((t0, t1)) = self.segment_interval(a, b) else {
            return false;
        };
        let len = a.distance(b);
        let start = if len > 0.0 {
            (skip / len).max(0.0)
        } else {
            0.0
        };
        t1.min(1.0) > t0.max(start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSite {
    /// 1-based identifier.
    pub id: usize,
    pub position: Point3,
    pub cost: f64,
    /// Index of the building whose wall carries the site, if any.
    pub host: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    /// 1-based identifier.
    pub id: usize,
    pub center: Point3,
    pub side: f64,
    pub ue_density: f64,
    pub outage_tolerance: f64,
}

impl GridCell {
    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Expected number of UEs in the cell.
    pub fn mean_ues(&self) -> f64 {
        self.ue_density * self.area()
    }

    pub fn needs_guarantee(&self) -> bool {
        self.outage_tolerance < 1.0
    }
}

/// Exact visibility between `site` and `target` among `buildings`.
pub fn segment_clear(
    buildings: &[Building],
    site: &Point3,
    host: Option<usize>,
    target: &Point3,
) -> bool {
    buildings.iter().enumerate().all(|(k, bld)| {
        let skip = if host == Some(k) { HOST_SKIP_M } else { 0.0 };
        !bld.occludes(site, target, skip)
    })
}
