//! Scenario JSON document and the validated world built from it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::geometry::{segment_clear, Building, CandidateSite, GridCell, Point3};
use crate::linkmodel::{RadioConfig, RadioParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDoc {
    pub x: f64,
    pub y: f64,
    /// Mounting height; defaults to `radio.h_bs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub cost: f64,
    /// Index into `buildings` of the wall the site is mounted on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub lambda: f64,
    pub zeta: f64,
}

impl RegionDoc {
    fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub buildings: Vec<Building>,
    pub sites: Vec<SiteDoc>,
    pub grid: GridDoc,
    #[serde(default)]
    pub regions: Vec<RegionDoc>,
    #[serde(default)]
    pub radio: RadioConfig,
    /// Free-form record of how the file was produced; ignored by the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

/// Parameter overrides layered over a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rf: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }

    /// Applies the overrides to a document. `zeta` replaces the tolerance of
    /// every region; cells outside all regions keep tolerance 1.
    pub fn apply(&self, doc: &mut ScenarioDoc) {
        if let Some(z) = self.zeta {
            for r in &mut doc.regions {
                r.zeta = z;
            }
        }
        if let Some(g) = self.gamma {
            doc.radio.gamma = g;
        }
        if let Some(n) = self.n_rf {
            doc.radio.n_rf = n;
        }
        if let Some(r) = self.r_max {
            doc.radio.r_max = r;
        }
    }
}

/// Immutable, validated scenario. Sites and grids are addressed by 0-based
/// index; their `id` fields carry the 1-based identifiers used in files.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub buildings: Vec<Building>,
    pub sites: Vec<CandidateSite>,
    pub grids: Vec<GridCell>,
    pub radio: RadioParams,
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self> {
        let radio = RadioParams::from_config(&doc.radio)?;
        let invalid = |msg: String| Err(CoreError::InvalidScenario(msg));

        for (k, b) in doc.buildings.iter().enumerate() {
            if !b.is_valid() {
                return invalid(format!(
                    "building {k} needs positive width, depth and height"
                ));
            }
        }
        let g = &doc.grid;
        if !(g.side > 0.0) || !g.side.is_finite() || g.nx == 0 || g.ny == 0 {
            return invalid("grid needs nx, ny >= 1 and a positive side".into());
        }
        for (k, r) in doc.regions.iter().enumerate() {
            if !(r.lambda >= 0.0) || !r.lambda.is_finite() {
                return invalid(format!("region {k} has negative or non-finite density"));
            }
            if !(r.zeta > 0.0 && r.zeta <= 1.0) {
                return invalid(format!("region {k} tolerance must lie in (0, 1]"));
            }
        }

        let mut sites = Vec::with_capacity(doc.sites.len());
        for (k, s) in doc.sites.iter().enumerate() {
            let z = s.z.unwrap_or(radio.h_bs);
            let position = Point3::new(s.x, s.y, z);
            if ![s.x, s.y, z, s.cost].iter().all(|v| v.is_finite()) || s.cost < 0.0 {
                return invalid(format!(
                    "site {} has a non-finite coordinate or negative cost",
                    k + 1
                ));
            }
            if z <= radio.h_ue {
                return invalid(format!(
                    "site {} is mounted at {z} m, not above the UE height",
                    k + 1
                ));
            }
            if let Some(h) = s.host {
                if h >= doc.buildings.len() {
                    return invalid(format!(
                        "site {} names host building {h}, which does not exist",
                        k + 1
                    ));
                }
            }
            if let Some(bk) = doc.buildings.iter().position(|b| b.contains(&position)) {
                return invalid(format!("site {} lies inside building {bk}", k + 1));
            }
            sites.push(CandidateSite {
                id: k + 1,
                position,
                cost: s.cost,
                host: s.host,
            });
        }

        let mut grids = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let cx = g.x0 + (i as f64 + 0.5) * g.side;
                let cy = g.y0 + (j as f64 + 0.5) * g.side;
                let center = Point3::new(cx, cy, radio.h_ue);
                if doc.buildings.iter().any(|b| b.contains(&center)) {
                    continue;
                }
                let (lambda, zeta) = doc
                    .regions
                    .iter()
                    .rev()
                    .find(|r| r.contains(cx, cy))
                    .map_or((0.0, 1.0), |r| (r.lambda, r.zeta));
                grids.push(GridCell {
                    id: grids.len() + 1,
                    center,
                    side: g.side,
                    ue_density: lambda,
                    outage_tolerance: zeta,
                });
            }
        }

        Ok(Scenario {
            buildings: doc.buildings.clone(),
            doc,
            sites,
            grids,
            radio,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Scenario::from_doc(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("scenario documents always serialize")
    }

    /// Reads and validates a scenario file, applying `overrides`.
    pub fn load(path: &Path, overrides: &Overrides) -> std::result::Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut doc: ScenarioDoc = serde_json::from_str(&text).map_err(|e| LoadError::Invalid {
            path: path.display().to_string(),
            source: e.into(),
        })?;
        overrides.apply(&mut doc);
        Scenario::from_doc(doc).map_err(|source| LoadError::Invalid {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn with_overrides(&self, overrides: &Overrides) -> Result<Self> {
        let mut doc = self.doc.clone();
        overrides.apply(&mut doc);
        Scenario::from_doc(doc)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_grids(&self) -> usize {
        self.grids.len()
    }

    fn check(&self, b: usize, g: usize) -> Result<()> {
        if b >= self.sites.len() {
            return Err(CoreError::UnknownSite(b));
        }
        if g >= self.grids.len() {
            return Err(CoreError::UnknownGrid(g));
        }
        Ok(())
    }

    /// Whether the segment from site `b` to the center of grid `g` clears
    /// every building.
    pub fn los_visible(&self, b: usize, g: usize) -> Result<bool> {
        self.check(b, g)?;
        let site = &self.sites[b];
        Ok(segment_clear(
            &self.buildings,
            &site.position,
            site.host,
            &self.grids[g].center,
        ))
    }

    pub fn link_distance(&self, b: usize, g: usize) -> Result<f64> {
        self.check(b, g)?;
        Ok(self.sites[b].position.distance(&self.grids[g].center))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario {path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: CoreError,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "buildings": [{"x0": 40, "y0": -5, "x1": 60, "y1": 5, "h": 20}],
        "sites": [{"x": 0, "y": 0, "cost": 1.0}, {"x": 3, "y": 4, "z": 12, "cost": 0.4}],
        "grid": {"x0": 0, "y0": -5, "nx": 20, "ny": 2, "side": 5},
        "regions": [{"x0": 0, "y0": -5, "x1": 100, "y1": 5, "lambda": 4e-4, "zeta": 0.05},
                    {"x0": 80, "y0": -5, "x1": 100, "y1": 5, "lambda": 1e-3, "zeta": 0.1}]
    }"#;

    #[test]
    fn grid_generation_skips_building_cells() {
        let s = Scenario::from_json(DOC).unwrap();
        // 4 columns x 2 rows fall inside the building footprint.
        assert_eq!(s.grids.len(), 40 - 8);
        assert!(s.grids.iter().enumerate().all(|(k, g)| g.id == k + 1));
        assert_eq!(s.sites[0].position.z, 10.0);
        let last = s.grids.last().unwrap();
        assert_eq!(last.ue_density, 1e-3);
        assert_eq!(last.outage_tolerance, 0.1);
        assert_eq!(s.grids[0].ue_density, 4e-4);
    }

    #[test]
    fn round_trip() {
        let s = Scenario::from_json(DOC).unwrap();
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn bad_ids_are_errors() {
        let s = Scenario::from_json(DOC).unwrap();
        assert!(matches!(
            s.los_visible(2, 0),
            Err(CoreError::UnknownSite(2))
        ));
        assert!(matches!(
            s.link_distance(0, 999),
            Err(CoreError::UnknownGrid(999))
        ));
    }

    #[test]
    fn rejects_site_inside_building() {
        let mut doc: ScenarioDoc = serde_json::from_str(DOC).unwrap();
        doc.sites.push(SiteDoc {
            x: 50.0,
            y: 0.0,
            z: None,
            cost: 1.0,
            host: None,
        });
        assert!(Scenario::from_doc(doc).is_err());
    }

    #[test]
    fn rejects_low_site() {
        let mut doc: ScenarioDoc = serde_json::from_str(DOC).unwrap();
        doc.sites[0].z = Some(1.0);
        assert!(Scenario::from_doc(doc).is_err());
    }

    #[test]
    fn overrides_layer_over_document() {
        let s = Scenario::from_json(DOC).unwrap();
        let o = Overrides {
            zeta: Some(0.2),
            n_rf: Some(4),
            ..Default::default()
        };
        let t = s.with_overrides(&o).unwrap();
        assert_eq!(t.radio.n_rf, 4);
        assert!(t.grids.iter().all(|g| g.outage_tolerance == 0.2));
    }
}
