//! Independent reference computations shared by the integration suites.
//!
//! Everything here is written from the model definitions directly and only
//! borrows plain data (positions, flags, parameters) from the library.
#![allow(dead_code)]

use mmwave_core::geometry::{Building, Point3};
use mmwave_core::linkmodel::RadioParams;
use mmwave_core::{BoolMatrix, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub fn pathloss_ref(r: f64) -> f64 {
    10f64.powf(-3.24 - 2.1 * r.log10() - 2.0 * 28f64.log10())
}

pub fn blockage_ref(r: f64, los: bool, p: &RadioParams) -> f64 {
    if !los || r > p.r_max {
        1.0
    } else {
        1.0 - (-p.beta * r - p.alpha).exp()
    }
}

/// Distance and LoS flag for every pair, by brute force from the scenario.
pub struct PairData {
    pub n_sites: usize,
    pub n_grids: usize,
    pub r: Vec<f64>,
    pub los: Vec<bool>,
}

impl PairData {
    pub fn new(s: &Scenario) -> Self {
        let (nb, ng) = (s.n_sites(), s.n_grids());
        let mut r = Vec::with_capacity(nb * ng);
        let mut los = Vec::with_capacity(nb * ng);
        for b in 0..nb {
            for g in 0..ng {
                let a = s.sites[b].position;
                let c = s.grids[g].center;
                r.push(((a.x - c.x).powi(2) + (a.y - c.y).powi(2) + (a.z - c.z).powi(2)).sqrt());
                los.push(s.los_visible(b, g).unwrap());
            }
        }
        PairData {
            n_sites: nb,
            n_grids: ng,
            r,
            los,
        }
    }

    pub fn r(&self, b: usize, g: usize) -> f64 {
        self.r[b * self.n_grids + g]
    }

    pub fn los(&self, b: usize, g: usize) -> bool {
        self.los[b * self.n_grids + g]
    }
}

/// Left side of a grid's outage guarantee written out term by term: each
/// covering link fails when blocked, when denied an RF chain (probability
/// gamma) or when its worst-case SINR misses the threshold.
pub fn outage_lhs_ref(
    s: &Scenario,
    pairs: &PairData,
    cover: &BoolMatrix,
    y: &[bool],
    g: usize,
) -> f64 {
    let p = &s.radio;
    let nrf = p.n_rf as f64;
    let mut interference = 0.0;
    for i in 0..pairs.n_sites {
        if !y[i] || !pairs.los(i, g) {
            continue;
        }
        let x = if cover.get(i, g) { 1.0 } else { 0.0 };
        interference += p.p_tx * p.g_side * pathloss_ref(pairs.r(i, g)) * (1.0 - x / nrf);
    }
    let mut total = 0.0;
    for b in 0..pairs.n_sites {
        if !(y[b] && cover.get(b, g)) {
            continue;
        }
        let r = pairs.r(b, g);
        let blk = blockage_ref(r, pairs.los(b, g), p);
        let signal = p.p_tx * p.g_main * pathloss_ref(r) / nrf;
        let sinr_bad = signal / (p.noise + interference) < p.z;
        let fail = blk
            + p.gamma * (1.0 - blk)
            + if sinr_bad {
                (1.0 - p.gamma) * (1.0 - blk)
            } else {
                0.0
            };
        total += fail.ln();
    }
    total
}

/// Whether `y` meets every guarantee of the scenario under coverage `cover`.
pub fn meets_guarantees(s: &Scenario, pairs: &PairData, cover: &BoolMatrix, y: &[bool]) -> bool {
    s.grids.iter().enumerate().all(|(g, cell)| {
        cell.outage_tolerance >= 1.0
            || outage_lhs_ref(s, pairs, cover, y, g) <= cell.outage_tolerance.ln() + 1e-9
    })
}

pub fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|k| mask >> k & 1 == 1).collect()
}

/// Cheapest deployment over all `2^B` subsets, or `None` when no subset
/// meets every guarantee.
pub fn exhaustive_min_cost(s: &Scenario, pairs: &PairData, cover: &BoolMatrix) -> Option<f64> {
    let n = s.n_sites();
    assert!(n <= 16, "enumeration limited to 16 sites");
    let mut best: Option<f64> = None;
    for mask in 0..1u64 << n {
        let y = bits(mask, n);
        let cost: f64 = (0..n).filter(|&b| y[b]).map(|b| s.sites[b].cost).sum();
        if best.is_some_and(|c| c <= cost) {
            continue;
        }
        if meets_guarantees(s, pairs, cover, &y) {
            best = Some(cost);
        }
    }
    best
}

/// Coverage of site `b` by a direct scan: usable grids ordered by distance
/// (then id), admitted in equal-distance groups while the expected
/// unblocked load stays within `phi`.
pub fn prefix_scan_ref(s: &Scenario, pairs: &PairData, b: usize, phi: f64) -> Vec<usize> {
    let p = &s.radio;
    let mut order: Vec<usize> = (0..pairs.n_grids)
        .filter(|&g| blockage_ref(pairs.r(b, g), pairs.los(b, g), p) < 1.0)
        .collect();
    order.sort_by(|&a, &c| {
        pairs
            .r(b, a)
            .partial_cmp(&pairs.r(b, c))
            .unwrap()
            .then(a.cmp(&c))
    });
    let mut out = Vec::new();
    let mut load = 0.0;
    let mut k = 0;
    while k < order.len() {
        let d = pairs.r(b, order[k]);
        let mut end = k;
        let mut group_load = 0.0;
        while end < order.len() && pairs.r(b, order[end]) == d {
            let g = order[end];
            let cell = &s.grids[g];
            group_load +=
                cell.ue_density * cell.side * cell.side * (1.0 - blockage_ref(d, true, p));
            end += 1;
        }
        if load + group_load > phi {
            break;
        }
        load += group_load;
        out.extend_from_slice(&order[k..end]);
        k = end;
    }
    out.sort_unstable();
    out
}

/// Monte Carlo estimate of E[(n - n_rf)^+ / n] for n ~ Poisson(mu), with
/// its standard error.
pub fn denial_mc(mu: f64, n_rf: u32, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pois = Poisson::new(mu).unwrap();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let n = pois.sample(&mut rng) as u64;
        let v = if n > n_rf as u64 {
            (n - n_rf as u64) as f64 / n as f64
        } else {
            0.0
        };
        sum += v;
        sum2 += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Line-of-sight by dense sampling: `n` evenly spaced interior points of
/// the segment tested against every box.
pub fn los_sampled(buildings: &[Building], a: &Point3, b: &Point3, n: usize) -> bool {
    (1..n).all(|k| {
        let t = k as f64 / n as f64;
        let p = Point3::new(
            a.x + t * (b.x - a.x),
            a.y + t * (b.y - a.y),
            a.z + t * (b.z - a.z),
        );
        !buildings.iter().any(|bl| {
            bl.x0 < p.x && p.x < bl.x1 && bl.y0 < p.y && p.y < bl.y1 && 0.0 < p.z && p.z < bl.h
        })
    })
}

/// Length of the part of the segment lying inside the box, by clipping.
pub fn inside_length(bl: &Building, a: &Point3, b: &Point3) -> f64 {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let lo = [bl.x0, bl.y0, 0.0];
    let hi = [bl.x1, bl.y1, bl.h];
    let pa = [a.x, a.y, a.z];
    let pb = [b.x, b.y, b.z];
    for k in 0..3 {
        let d = pb[k] - pa[k];
        if d.abs() < 1e-300 {
            if pa[k] <= lo[k] || pa[k] >= hi[k] {
                return 0.0;
            }
            continue;
        }
        let (u, v) = ((lo[k] - pa[k]) / d, (hi[k] - pa[k]) / d);
        t0 = t0.max(u.min(v));
        t1 = t1.min(u.max(v));
    }
    (t1 - t0).max(0.0) * a.distance(b)
}

pub fn random_box(rng: &mut ChaCha8Rng) -> Building {
    let x0 = rng.random_range(-50.0..50.0);
    let y0 = rng.random_range(-50.0..50.0);
    Building {
        x0,
        y0,
        x1: x0 + rng.random_range(1.0..40.0),
        y1: y0 + rng.random_range(1.0..40.0),
        h: rng.random_range(1.0..30.0),
    }
}

/// Decides whether the linearized selection system admits a given site
/// vector, by resolving every link indicator directly.
///
/// With `y` fixed, each indicator appears alone in its own link rows, and
/// only with negative weight in its grid's outage row. So `y` is admitted
/// iff picking every indicator as 1 where its own rows allow it (else 0)
/// satisfies all rows.
pub struct LinearSystem<'a> {
    ilp: &'a mmwave_core::deploy::SelectionIlp,
    own_rows: Vec<(usize, Vec<usize>)>,
}

impl<'a> LinearSystem<'a> {
    pub fn new(ilp: &'a mmwave_core::deploy::SelectionIlp) -> Self {
        let inst = &ilp.instance;
        let outage: std::collections::BTreeSet<usize> =
            ilp.outage_rows.iter().flatten().copied().collect();
        for &row in &outage {
            for &(j, a) in &inst.constraints[row].coeffs {
                assert!(
                    j >= ilp.n_sites && a < 0.0,
                    "outage rows weigh indicators negatively"
                );
            }
        }
        let own_rows = (ilp.n_sites..inst.n_vars)
            .map(|j| {
                let rows = (0..inst.constraints.len())
                    .filter(|r| !outage.contains(r))
                    .filter(|&r| inst.constraints[r].coeffs.iter().any(|&(v, _)| v == j))
                    .collect::<Vec<_>>();
                for &r in &rows {
                    let other_s = inst.constraints[r]
                        .coeffs
                        .iter()
                        .filter(|&&(v, _)| v >= ilp.n_sites && v != j)
                        .count();
                    assert_eq!(other_s, 0, "link rows involve a single indicator");
                }
                (j, rows)
            })
            .collect();
        LinearSystem { ilp, own_rows }
    }

    pub fn admits(&self, y: &[bool]) -> bool {
        self.resolve(y).is_some()
    }

    /// The full assignment (sites then indicators) chosen for `y`, when the
    /// system admits it.
    pub fn resolve(&self, y: &[bool]) -> Option<Vec<bool>> {
        let inst = &self.ilp.instance;
        let mut a = vec![false; inst.n_vars];
        a[..y.len()].copy_from_slice(y);
        for (j, rows) in &self.own_rows {
            let ok = |a: &[bool]| rows.iter().all(|&r| inst.constraints[r].satisfied_by(a));
            a[*j] = true;
            if ok(&a) {
                continue;
            }
            a[*j] = false;
            if !ok(&a) {
                return None;
            }
        }
        inst.constraints
            .iter()
            .all(|c| c.satisfied_by(&a))
            .then_some(a)
    }
}

/// Coverage matrix built from [`prefix_scan_ref`] for every site.
pub fn coverage_ref(s: &Scenario, pairs: &PairData, phi: f64) -> BoolMatrix {
    let mut m = BoolMatrix::new(s.n_sites(), s.n_grids());
    for b in 0..s.n_sites() {
        for g in prefix_scan_ref(s, pairs, b, phi) {
            m.set(b, g, true);
        }
    }
    m
}
