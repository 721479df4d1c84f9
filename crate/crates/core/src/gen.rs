//! Synthetic scenario generator.
//!
//! Layouts are Manhattan-style: box buildings separated by streets, one grid
//! cell per 5 m square of open ground, candidate sites on building walls at
//! the default mounting height. Five vertical strips carry increasing UE
//! densities and site costs; `small` and `demo` add a dense hotspot at a
//! street crossing so that uncapped coverage overloads its RF chains.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Building;
use crate::linkmodel::RadioConfig;
use crate::scenario::{GridDoc, RegionDoc, ScenarioDoc, SiteDoc};

/// Grid side in meters.
pub const GRID_SIDE: f64 = 5.0;
/// Outage tolerance of every populated cell.
pub const DEFAULT_ZETA: f64 = 0.05;
/// Blockage intercept and slope used by generated scenarios.
pub const GEN_ALPHA: f64 = 0.01;
pub const GEN_BETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeClass {
    Tiny,
    Small,
    Demo,
}

impl SizeClass {
    /// Upper limits `(sites, grids)` of the class.
    pub fn limits(self) -> (usize, usize) {
        match self {
            SizeClass::Tiny => (10, 50),
            SizeClass::Small => (40, 400),
            SizeClass::Demo => (130, 2000),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Tiny => "tiny",
            SizeClass::Small => "small",
            SizeClass::Demo => "demo",
        }
    }
}

impl FromStr for SizeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tiny" => Ok(SizeClass::Tiny),
            "small" => Ok(SizeClass::Small),
            "demo" => Ok(SizeClass::Demo),
            other => Err(format!(
                "unknown size class '{other}' (expected tiny, small or demo)"
            )),
        }
    }
}

fn radio() -> RadioConfig {
    RadioConfig {
        alpha: GEN_ALPHA,
        beta: GEN_BETA,
        ..RadioConfig::default()
    }
}

/// Five equal strips over `[x0, x1]` with density `(2i + 2)e-4`.
fn strips(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<RegionDoc> {
    let w = (x1 - x0) / 5.0;
    (1..=5)
        .map(|i| RegionDoc {
            x0: x0 + (i - 1) as f64 * w,
            y0,
            x1: x0 + i as f64 * w,
            y1,
            lambda: (2 * i + 2) as f64 * 1e-4,
            zeta: DEFAULT_ZETA,
        })
        .collect()
}

/// Installation cost `0.2 i` of the strip containing `x`.
fn strip_cost(x: f64, x0: f64, x1: f64) -> f64 {
    let i = (((x - x0) / (x1 - x0) * 5.0).floor() as i64).clamp(0, 4) + 1;
    0.2 * i as f64
}

pub fn generate(class: SizeClass, seed: u64) -> ScenarioDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match class {
        SizeClass::Tiny => street(&mut rng),
        SizeClass::Small => manhattan(&mut rng, 3, 20.0, 10.0, Some(0.03)),
        SizeClass::Demo => manhattan(&mut rng, 5, 30.0, 10.0, Some(0.03)),
    }
}

/// A 60 m street between two building rows, 8–10 wall sites and a kiosk.
fn street(rng: &mut ChaCha8Rng) -> ScenarioDoc {
    let len = 60.0;
    let width = 10.0;
    let mut buildings = vec![
        Building {
            x0: -10.0,
            y0: -15.0,
            x1: len + 10.0,
            y1: 0.0,
            h: rng.random_range(12.0..25.0),
        },
        Building {
            x0: -10.0,
            y0: width,
            x1: len + 10.0,
            y1: width + 15.0,
            h: rng.random_range(12.0..25.0),
        },
    ];
    let kx = rng.random_range(15.0..45.0);
    buildings.push(Building {
        x0: kx,
        y0: 4.0,
        x1: kx + 2.0,
        y1: 6.0,
        h: 3.0,
    });

    let n_sites = rng.random_range(8..=10);
    let mut sites = Vec::with_capacity(n_sites);
    for k in 0..n_sites {
        let north = k % 2 == 1;
        let slot = len / n_sites as f64;
        let x = (k as f64 + rng.random_range(0.2..0.8)) * slot;
        sites.push(SiteDoc {
            x,
            y: if north { width } else { 0.0 },
            z: None,
            cost: strip_cost(x, 0.0, len),
            host: Some(if north { 1 } else { 0 }),
        });
    }
    ScenarioDoc {
        buildings,
        sites,
        grid: GridDoc {
            x0: 0.0,
            y0: 0.0,
            nx: (len / GRID_SIDE) as usize,
            ny: (width / GRID_SIDE) as usize,
            side: GRID_SIDE,
        },
        regions: strips(0.0, len, 0.0, width),
        radio: radio(),
        manifest: None,
    }
}

/// `n x n` blocks of side `block` separated by streets of width `street`,
/// with a street ring around the outside. Only the interior streets are
/// gridded; the ring sees walls on one side only and could never reach its
/// outage target. One wall site per inward-facing building face, placed at a
/// random point along the face.
fn manhattan(
    rng: &mut ChaCha8Rng,
    n: usize,
    block: f64,
    street: f64,
    hotspot: Option<f64>,
) -> ScenarioDoc {
    let pitch = block + street;
    let extent = street + n as f64 * pitch;
    let mut buildings = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x0 = street + i as f64 * pitch;
            let y0 = street + j as f64 * pitch;
            buildings.push(Building {
                x0,
                y0,
                x1: x0 + block,
                y1: y0 + block,
                h: rng.random_range(12.0..30.0),
            });
        }
    }

    let mut sites = Vec::new();
    for (k, b) in buildings.iter().enumerate() {
        let mut at = |x: f64, y: f64| {
            sites.push(SiteDoc {
                x,
                y,
                z: None,
                cost: strip_cost(x, 0.0, extent),
                host: Some(k),
            })
        };
        let t = |rng: &mut ChaCha8Rng| rng.random_range(0.15..0.85) * block;
        let (i, j) = (k % n, k / n);
        let (sx, nx_, wy, ey) = (t(rng), t(rng), t(rng), t(rng));
        if j > 0 {
            at(b.x0 + sx, b.y0);
        }
        if j + 1 < n {
            at(b.x0 + nx_, b.y1);
        }
        if i > 0 {
            at(b.x0, b.y0 + wy);
        }
        if i + 1 < n {
            at(b.x1, b.y0 + ey);
        }
    }

    let mut regions = strips(0.0, extent, 0.0, extent);
    if let Some(lambda) = hotspot {
        // The street crossing nearest the center, plus the street stubs
        // leading into it.
        let c = (n / 2) as f64 * pitch;
        regions.push(RegionDoc {
            x0: c - block / 2.0,
            y0: c - block / 2.0,
            x1: c + street + block / 2.0,
            y1: c + street + block / 2.0,
            lambda,
            zeta: DEFAULT_ZETA,
        });
    }

    let cells = ((extent - 2.0 * street) / GRID_SIDE).round() as usize;
    ScenarioDoc {
        buildings,
        sites,
        grid: GridDoc {
            x0: street,
            y0: street,
            nx: cells,
            ny: cells,
            side: GRID_SIDE,
        },
        regions,
        radio: radio(),
        manifest: None,
    }
}
