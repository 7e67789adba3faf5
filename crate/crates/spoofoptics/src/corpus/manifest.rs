//! Line-oriented corpus manifest.
//!
//! ```text
//! spoofoptics-manifest v1
//! config\tkey=value\tkey=value\t...
//! sample\t<id>\t<label>\t<scene_seed>\t<source_id|-> \t<r00..r22 (9)>\t<a>\t<b>\t<c>\t<gamma>\t<path>
//! ```
//!
//! One record per line, tab-separated, floats with 17 significant digits so
//! every f64 round-trips exactly. Live samples carry `-` in the source and
//! spoof-parameter fields.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::CorpusConfig;
use crate::error::{Error, Result};
use crate::Label;

pub const MANIFEST_MAGIC: &str = "spoofoptics-manifest";
pub const MANIFEST_VERSION: &str = "v1";

/// Generation record of one stored image.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub label: Label,
    pub scene_seed: u64,
    /// For spoofs, the id of the live sample they were captured from.
    pub source: Option<String>,
    /// Distant-light coefficients (order 2, flat-indexed) of the scene.
    pub lighting: [f64; 9],
    /// Spoof field (a, b, c); None for live samples.
    pub field: Option<(f64, f64, f64)>,
    /// Print contrast factor; None for live samples.
    pub gamma: Option<f64>,
    /// Image path relative to the manifest directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: CorpusConfig,
    pub samples: Vec<SampleRecord>,
}

impl Manifest {
    /// Checks id uniqueness and source references.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(&s.id) {
                return Err(Error::invalid(format!("duplicate sample id '{}'", s.id)));
            }
        }
        for s in &self.samples {
            if let Some(src) = &s.source {
                if !seen.contains(src) {
                    return Err(Error::invalid(format!(
                        "sample '{}' references unknown source '{src}'",
                        s.id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{MANIFEST_MAGIC} {MANIFEST_VERSION}").unwrap();
    writeln!(out, "config\t{}", manifest.config.to_kv_line()).unwrap();
    for s in &manifest.samples {
        let mut fields: Vec<String> = vec![
            "sample".to_string(),
            s.id.clone(),
            s.label.as_str().to_string(),
            s.scene_seed.to_string(),
            s.source.clone().unwrap_or_else(|| "-".to_string()),
        ];
        fields.extend(s.lighting.iter().map(|v| fmt_f(*v)));
        match s.field {
            Some((a, b, c)) => {
                fields.push(fmt_f(a));
                fields.push(fmt_f(b));
                fields.push(fmt_f(c));
            }
            None => fields.extend(["-", "-", "-"].map(String::from)),
        }
        fields.push(s.gamma.map(fmt_f).unwrap_or_else(|| "-".to_string()));
        fields.push(s.path.clone());
        writeln!(out, "{}", fields.join("\t")).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn line_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        context: format!("{} line {line}", path.display()),
        msg: msg.into(),
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| line_err(path, 1, "empty file"))?;
    let mut hp = header.split_whitespace();
    if hp.next() != Some(MANIFEST_MAGIC) {
        return Err(line_err(
            path,
            1,
            format!("expected magic '{MANIFEST_MAGIC}'"),
        ));
    }
    let version = hp.next().unwrap_or("");
    if version != MANIFEST_VERSION {
        return Err(Error::Version(format!(
            "manifest declares '{version}', this build reads '{MANIFEST_VERSION}'"
        )));
    }

    let mut config: Option<CorpusConfig> = None;
    let mut samples = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "config" => {
                config = Some(
                    CorpusConfig::from_kv_fields(&fields[1..])
                        .map_err(|e| line_err(path, ln, e.to_string()))?,
                );
            }
            "sample" => {
                if fields.len() != 19 {
                    return Err(line_err(
                        path,
                        ln,
                        format!("expected 19 tab-separated fields, got {}", fields.len()),
                    ));
                }
                let parse_f = |s: &str, what: &str| -> Result<f64> {
                    s.parse()
                        .map_err(|_| line_err(path, ln, format!("bad {what} '{s}'")))
                };
                let label = Label::parse(fields[2]).map_err(|e| line_err(path, ln, e.to_string()))?;
                let scene_seed: u64 = fields[3]
                    .parse()
                    .map_err(|_| line_err(path, ln, format!("bad scene seed '{}'", fields[3])))?;
                let source = (fields[4] != "-").then(|| fields[4].to_string());
                let mut lighting = [0.0; 9];
                for (j, slot) in lighting.iter_mut().enumerate() {
                    *slot = parse_f(fields[5 + j], "lighting coefficient")?;
                }
                let field = if fields[14] == "-" {
                    None
                } else {
                    Some((
                        parse_f(fields[14], "field a")?,
                        parse_f(fields[15], "field b")?,
                        parse_f(fields[16], "field c")?,
                    ))
                };
                let gamma = if fields[17] == "-" {
                    None
                } else {
                    Some(parse_f(fields[17], "gamma")?)
                };
                samples.push(SampleRecord {
                    id: fields[1].to_string(),
                    label,
                    scene_seed,
                    source,
                    lighting,
                    field,
                    gamma,
                    path: fields[18].to_string(),
                });
            }
            other => return Err(line_err(path, ln, format!("unknown record type '{other}'"))),
        }
    }
    let manifest = Manifest {
        config: config.ok_or_else(|| line_err(path, 2, "missing config record"))?,
        samples,
    };
    manifest.validate()?;
    Ok(manifest)
}
