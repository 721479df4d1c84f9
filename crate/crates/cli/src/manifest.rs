use std::time::Instant;

use mmwave_core::Overrides;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "mmwave";

/// Provenance record embedded in every artifact.
///
/// Paths are recorded exactly as given on the command line, so running the
/// same command from the same working directory reproduces the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Wall-clock seconds; only recorded with `--timing`, since it would
    /// otherwise make artifacts differ between identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, overrides: &Overrides) -> Self {
        RunManifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario: None,
            plan: None,
            class: None,
            scheme: None,
            seed: None,
            trials: None,
            overrides: overrides.clone(),
            duration_s: None,
        }
    }

    /// Stamps the elapsed time when `timing` is on.
    pub fn finish(&mut self, started: Instant, timing: bool) {
        if timing {
            self.duration_s = Some(started.elapsed().as_secs_f64());
        }
    }

    /// Single-line JSON form used as the leading `#` comment of CSV files.
    pub fn csv_comment(&self, extra: &[(&str, &str)]) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        if let Some(obj) = v.as_object_mut() {
            for (k, val) in extra {
                obj.insert((*k).to_string(), serde_json::Value::from(*val));
            }
        }
        format!("# {v}\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_duration_without_timing() {
        let mut m = RunManifest::new("optimize", &Overrides::default());
        m.finish(Instant::now(), false);
        let text = serde_json::to_string(&m).unwrap();
        assert!(!text.contains("duration"));
        m.finish(Instant::now(), true);
        assert!(m.duration_s.is_some());
    }

    #[test]
    fn csv_comment_is_one_line() {
        let m = RunManifest::new("coverage", &Overrides::default());
        let line = m.csv_comment(&[("metric", "sinr_db")]);
        assert!(line.starts_with("# {"));
        assert_eq!(line.matches('\n').count(), 1);
        let v: serde_json::Value = serde_json::from_str(line[2..].trim()).unwrap();
        assert_eq!(v["metric"], "sinr_db");
        assert_eq!(v["command"], "coverage");
    }

    #[test]
    fn round_trips() {
        let mut m = RunManifest::new(
            "evaluate",
            &Overrides {
                zeta: Some(0.1),
                ..Default::default()
            },
        );
        m.seed = Some(4);
        let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
