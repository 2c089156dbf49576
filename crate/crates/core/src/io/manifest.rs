//! JSON-Lines dataset manifests.
//!
//! Each non-blank line is one object. Lines with a `target_path` key are
//! sample pairs; a line without one sets dataset-level fields:
//!
//! ```text
//! {"dataset": "nyu", "unit_scale": 100.0, "mask_missing": true}
//! {"target_path": "d0.pgm", "guidance_path": "c0.ppm", "gt_path": "d0.pgm", "depth_scale": 10.0}
//! ```
//!
//! Relative paths resolve against the manifest's directory. Unknown keys are
//! ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::EvalConvention;
use crate::io::read_image;
use crate::train::ImagePair;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub target_path: PathBuf,
    pub guidance_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_path: Option<PathBuf>,
    /// Physical units per normalized intensity.
    #[serde(default = "one")]
    pub depth_scale: f64,
    /// Normalized ground-truth value that marks a missing pixel.
    #[serde(default)]
    pub missing_value: f64,
}

impl SamplePair {
    pub fn new(target: impl Into<PathBuf>, guidance: impl Into<PathBuf>) -> Self {
        SamplePair {
            target_path: target.into(),
            guidance_path: guidance.into(),
            gt_path: None,
            depth_scale: 1.0,
            missing_value: 0.0,
        }
    }

    /// The ground-truth image, falling back to the target.
    pub fn ground_truth_path(&self) -> &Path {
        self.gt_path.as_deref().unwrap_or(&self.target_path)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.target_path.as_os_str().is_empty() || self.guidance_path.as_os_str().is_empty() {
            return Err("paths must be non-empty".into());
        }
        if !(self.depth_scale > 0.0 && self.depth_scale.is_finite()) {
            return Err(format!("depth_scale {} must be positive", self.depth_scale));
        }
        Ok(())
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.target_path);
        join(&mut self.guidance_path);
        if let Some(p) = self.gt_path.as_mut() {
            join(p);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub dataset: String,
    pub convention: EvalConvention,
    pub pairs: Vec<SamplePair>,
}

#[derive(Deserialize)]
struct HeaderLine {
    #[serde(default)]
    dataset: Option<String>,
    #[serde(default)]
    unit_scale: Option<f64>,
    #[serde(default)]
    mask_missing: Option<bool>,
}

impl Manifest {
    /// Parses manifest text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut m = Manifest::default();
        let err = |line: usize, message: String| Error::Manifest { line, message };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(raw).map_err(|e| err(line, e.to_string()))?;
            let Value::Object(obj) = &value else {
                return Err(err(line, "expected a JSON object".into()));
            };
            let is_header = !obj.contains_key("target_path")
                && ["dataset", "unit_scale", "mask_missing"].iter().any(|k| obj.contains_key(*k));
            if is_header {
                let h: HeaderLine = serde_json::from_value(value).map_err(|e| err(line, e.to_string()))?;
                if let Some(d) = h.dataset {
                    m.dataset = d;
                }
                if let Some(s) = h.unit_scale {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(err(line, format!("unit_scale {s} must be positive")));
                    }
                    m.convention.unit_scale = s;
                }
                if let Some(mm) = h.mask_missing {
                    m.convention.mask_missing = mm;
                }
                continue;
            }
            let mut pair: SamplePair = serde_json::from_value(value).map_err(|e| err(line, e.to_string()))?;
            pair.validate().map_err(|e| err(line, e))?;
            pair.resolve(base);
            m.pairs.push(pair);
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Serializes back to JSON-Lines with a header line.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::json!({
            "dataset": self.dataset,
            "unit_scale": self.convention.unit_scale,
            "mask_missing": self.convention.mask_missing,
        })
        .to_string();
        out.push('\n');
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("pair serialises"));
            out.push('\n');
        }
        out
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Manifest::parse(&text, base)
}

/// Reads guidance and ground truth of every entry.
pub fn load_pairs(manifest: &Manifest) -> Result<Vec<ImagePair<f32>>> {
    manifest
        .pairs
        .iter()
        .map(|p| {
            let guidance = read_image(&p.guidance_path)?;
            let gt = read_image(p.ground_truth_path())?;
            if (gt.height(), gt.width()) != (guidance.height(), guidance.width()) {
                return Err(Error::shape(format!(
                    "{}: ground truth is {}x{} but guidance is {}x{}",
                    p.ground_truth_path().display(),
                    gt.height(),
                    gt.width(),
                    guidance.height(),
                    guidance.width()
                )));
            }
            Ok(ImagePair { guidance, gt })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_empty_manifest() {
        let m = Manifest::parse("", Path::new("")).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.convention, EvalConvention::default());
    }

    #[test]
    fn missing_target_path_names_line() {
        let e = Manifest::parse(r#"{"guidance_path": "g.ppm"}"#, Path::new("")).unwrap_err();
        assert!(matches!(e, Error::Manifest { line: 1, .. }), "{e}");
    }

    #[test]
    fn entries_keep_order_and_resolve_paths() {
        let text = concat!(
            r#"{"dataset": "toy", "unit_scale": 255, "mask_missing": true}"#, "\n",
            r#"{"target_path": "a.pgm", "guidance_path": "a.ppm", "extra": 1}"#, "\n",
            "\n",
            r#"{"target_path": "b.pgm", "guidance_path": "/abs/b.ppm", "depth_scale": 10}"#, "\n",
            r#"{"target_path": "c.pgm", "guidance_path": "c.ppm", "gt_path": "c_gt.pgm"}"#, "\n",
        );
        let m = Manifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.dataset, "toy");
        assert_eq!(m.convention.unit_scale, 255.0);
        assert!(m.convention.mask_missing);
        let names: Vec<_> = m.pairs.iter().map(|p| p.target_path.clone()).collect();
        assert_eq!(names, vec![PathBuf::from("/data/a.pgm"), "/data/b.pgm".into(), "/data/c.pgm".into()]);
        assert_eq!(m.pairs[1].guidance_path, PathBuf::from("/abs/b.ppm"));
        assert_eq!(m.pairs[1].depth_scale, 10.0);
        assert_eq!(m.pairs[2].ground_truth_path(), Path::new("/data/c_gt.pgm"));
        assert_eq!(m.pairs[0].ground_truth_path(), Path::new("/data/a.pgm"));
    }

    #[test]
    fn bad_lines_report_their_index() {
        let text = "{\"target_path\": \"a\", \"guidance_path\": \"b\"}\nnot json\n";
        assert!(matches!(Manifest::parse(text, Path::new("")), Err(Error::Manifest { line: 2, .. })));
        let text = "{\"target_path\": \"a\", \"guidance_path\": \"b\", \"depth_scale\": 0}";
        assert!(matches!(Manifest::parse(text, Path::new("")), Err(Error::Manifest { line: 1, .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let text = "{\"dataset\":\"x\",\"unit_scale\":100.0}\n{\"target_path\":\"/a\",\"guidance_path\":\"/b\",\"depth_scale\":2.5}\n";
        let m = Manifest::parse(text, Path::new("")).unwrap();
        let again = Manifest::parse(&m.to_jsonl(), Path::new("")).unwrap();
        assert_eq!(again, m);
    }
}
