//! Versioned text serialization for trained models.
//!
//! Format: a `spoofoptics-model v1` header, `key value` option lines, then
//! named parameter blocks (`block <name> <rows> <cols>` followed by rows of
//! decimal floats), closed by `end`. Floats are written with 17 significant
//! digits so values round-trip bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::ablation::StreamMask;
use super::anomaly::AnomalyScorer;
use super::classifier::ClassifierModel;
use super::embed::{EmbeddingModel, Layer};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "spoofoptics-model";
pub const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone)]
pub enum ModelKind {
    Classifier(ClassifierModel),
    /// Contrastive embedding with a logistic head on the embeddings.
    EmbeddingClassifier {
        embedding: EmbeddingModel,
        classifier: ClassifierModel,
    },
    /// Live-only Mahalanobis prior; `liveness_threshold` is the acceptance
    /// bar on the negated distance, fixed at training time.
    Anomaly {
        scorer: AnomalyScorer,
        liveness_threshold: f64,
    },
}

/// A trained model plus the feature-pipeline options it was trained with,
/// so evaluation reproduces the same inputs.
#[derive(Debug, Clone)]
pub struct Model {
    pub streams: StreamMask,
    /// Histogram-equalization bin count applied before featurizing; 0 = off.
    pub equalize_bins: usize,
    /// Train fraction and seed of the train/eval split.
    pub split: f64,
    pub split_seed: u64,
    pub kind: ModelKind,
}

impl Model {
    /// Liveness score of a masked feature vector.
    pub fn score(&self, masked_features: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Classifier(c) => c.score(masked_features),
            ModelKind::EmbeddingClassifier {
                embedding,
                classifier,
            } => classifier.score(&embedding.embed(masked_features)),
            ModelKind::Anomaly { scorer, .. } => scorer.liveness(masked_features),
        }
    }

    /// Acceptance threshold on the liveness score.
    pub fn threshold(&self) -> f64 {
        match &self.kind {
            ModelKind::Classifier(c) => c.threshold,
            ModelKind::EmbeddingClassifier { classifier, .. } => classifier.threshold,
            ModelKind::Anomaly {
                liveness_threshold, ..
            } => *liveness_threshold,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match &self.kind {
            ModelKind::Classifier(_) => "classifier",
            ModelKind::EmbeddingClassifier { .. } => "supcon-classifier",
            ModelKind::Anomaly { .. } => "anomaly",
        }
    }
}

fn write_block(out: &mut String, name: &str, rows: usize, cols: usize, data: &[f64]) {
    debug_assert_eq!(rows * cols, data.len());
    writeln!(out, "block {name} {rows} {cols}").unwrap();
    for r in 0..rows {
        let row: Vec<String> = data[r * cols..(r + 1) * cols]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
}

fn classifier_blocks(out: &mut String, prefix: &str, c: &ClassifierModel) {
    let d = c.weights.len();
    write_block(out, &format!("{prefix}mean"), 1, d, &c.mean);
    write_block(out, &format!("{prefix}std"), 1, d, &c.std);
    write_block(out, &format!("{prefix}weights"), 1, d, &c.weights);
    write_block(out, &format!("{prefix}bias"), 1, 1, &[c.bias]);
    write_block(out, &format!("{prefix}threshold"), 1, 1, &[c.threshold]);
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}").unwrap();
    writeln!(out, "kind {}", model.kind_str()).unwrap();
    writeln!(out, "streams {}", model.streams.as_str()).unwrap();
    writeln!(out, "equalize {}", model.equalize_bins).unwrap();
    writeln!(out, "split {:.16e}", model.split).unwrap();
    writeln!(out, "split_seed {}", model.split_seed).unwrap();
    match &model.kind {
        ModelKind::Classifier(c) => classifier_blocks(&mut out, "", c),
        ModelKind::EmbeddingClassifier {
            embedding,
            classifier,
        } => {
            writeln!(out, "layers {}", embedding.layers.len()).unwrap();
            let d = embedding.feat_mean.len();
            write_block(&mut out, "feat_mean", 1, d, &embedding.feat_mean);
            write_block(&mut out, "feat_std", 1, d, &embedding.feat_std);
            for (i, layer) in embedding.layers.iter().enumerate() {
                write_block(
                    &mut out,
                    &format!("layer{i}_w"),
                    layer.rows,
                    layer.cols,
                    &layer.weights,
                );
                write_block(&mut out, &format!("layer{i}_b"), 1, layer.rows, &layer.bias);
            }
            classifier_blocks(&mut out, "cls_", classifier);
        }
        ModelKind::Anomaly {
            scorer,
            liveness_threshold,
        } => {
            let d = scorer.mean.len();
            write_block(&mut out, "mean", 1, d, &scorer.mean);
            write_block(
                &mut out,
                "covariance",
                d,
                d,
                scorer.covariance.transpose().as_slice(),
            );
            write_block(&mut out, "threshold", 1, 1, &[*liveness_threshold]);
        }
    }
    writeln!(out, "end").unwrap();
    std::fs::write(path, out)?;
    Ok(())
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    path: String,
}

impl<'a> Parser<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| self.err(0, "unexpected end of file"))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            context: format!("{} line {line}", self.path),
            msg: msg.into(),
        }
    }
}

fn parse_block(
    parser: &mut Parser,
    header: (usize, &str),
) -> Result<(String, usize, usize, Vec<f64>)> {
    let (ln, line) = header;
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "block" {
        return Err(parser.err(ln, format!("expected 'block <name> <rows> <cols>', got '{line}'")));
    }
    let name = parts[1].to_string();
    let rows: usize = parts[2]
        .parse()
        .map_err(|_| parser.err(ln, "bad row count"))?;
    let cols: usize = parts[3]
        .parse()
        .map_err(|_| parser.err(ln, "bad column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (rln, row) = parser.next_line()?;
        for tok in row.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parser.err(rln, format!("bad float '{tok}'")))?;
            data.push(v);
        }
        if data.len() % cols != 0 {
            return Err(parser.err(rln, "row width mismatch"));
        }
    }
    if data.len() != rows * cols {
        return Err(parser.err(ln, "block size mismatch"));
    }
    Ok((name, rows, cols, data))
}

fn take_row(
    blocks: &mut BTreeMap<String, (usize, usize, Vec<f64>)>,
    name: &str,
    path: &str,
) -> Result<Vec<f64>> {
    blocks
        .remove(name)
        .map(|(_, _, d)| d)
        .ok_or_else(|| Error::Parse {
            context: path.to_string(),
            msg: format!("missing block '{name}'"),
        })
}

fn classifier_from_blocks(
    blocks: &mut BTreeMap<String, (usize, usize, Vec<f64>)>,
    prefix: &str,
    path: &str,
) -> Result<ClassifierModel> {
    Ok(ClassifierModel {
        mean: take_row(blocks, &format!("{prefix}mean"), path)?,
        std: take_row(blocks, &format!("{prefix}std"), path)?,
        weights: take_row(blocks, &format!("{prefix}weights"), path)?,
        bias: take_row(blocks, &format!("{prefix}bias"), path)?[0],
        threshold: take_row(blocks, &format!("{prefix}threshold"), path)?[0],
    })
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    let pathstr = path.display().to_string();
    let mut parser = Parser {
        lines: text.lines().enumerate(),
        path: pathstr.clone(),
    };
    let (ln, header) = parser.next_line()?;
    let mut hp = header.split_whitespace();
    if hp.next() != Some(MODEL_MAGIC) {
        return Err(parser.err(ln, format!("expected magic '{MODEL_MAGIC}'")));
    }
    let version = hp.next().unwrap_or("");
    if version != MODEL_VERSION {
        return Err(Error::Version(format!(
            "model file declares '{version}', this build reads '{MODEL_VERSION}'"
        )));
    }

    let mut options: BTreeMap<String, String> = BTreeMap::new();
    let mut blocks: BTreeMap<String, (usize, usize, Vec<f64>)> = BTreeMap::new();
    loop {
        let (ln, line) = parser.next_line()?;
        if line.trim() == "end" {
            break;
        }
        if line.starts_with("block ") {
            let (name, rows, cols, data) = parse_block(&mut parser, (ln, line))?;
            blocks.insert(name, (rows, cols, data));
        } else {
            let mut kv = line.splitn(2, ' ');
            let k = kv.next().unwrap_or("").to_string();
            let v = kv.next().unwrap_or("").to_string();
            if k.is_empty() {
                return Err(parser.err(ln, "blank line inside model"));
            }
            options.insert(k, v);
        }
    }

    let get_opt = |k: &str| -> Result<String> {
        options.get(k).cloned().ok_or_else(|| Error::Parse {
            context: pathstr.clone(),
            msg: format!("missing option '{k}'"),
        })
    };
    let streams = StreamMask::parse(&get_opt("streams")?)?;
    let equalize_bins: usize = get_opt("equalize")?
        .parse()
        .map_err(|_| Error::Parse {
            context: pathstr.clone(),
            msg: "bad equalize value".to_string(),
        })?;
    let split: f64 = get_opt("split")?.parse().map_err(|_| Error::Parse {
        context: pathstr.clone(),
        msg: "bad split value".to_string(),
    })?;
    let split_seed: u64 = get_opt("split_seed")?.parse().map_err(|_| Error::Parse {
        context: pathstr.clone(),
        msg: "bad split_seed value".to_string(),
    })?;

    let kind = match get_opt("kind")?.as_str() {
        "classifier" => ModelKind::Classifier(classifier_from_blocks(&mut blocks, "", &pathstr)?),
        "supcon-classifier" => {
            let n_layers: usize = get_opt("layers")?.parse().map_err(|_| Error::Parse {
                context: pathstr.clone(),
                msg: "bad layer count".to_string(),
            })?;
            let feat_mean = take_row(&mut blocks, "feat_mean", &pathstr)?;
            let feat_std = take_row(&mut blocks, "feat_std", &pathstr)?;
            let mut layers = Vec::with_capacity(n_layers);
            for i in 0..n_layers {
                let (rows, cols, weights) =
                    blocks
                        .remove(&format!("layer{i}_w"))
                        .ok_or_else(|| Error::Parse {
                            context: pathstr.clone(),
                            msg: format!("missing block 'layer{i}_w'"),
                        })?;
                let bias = take_row(&mut blocks, &format!("layer{i}_b"), &pathstr)?;
                layers.push(Layer {
                    weights,
                    bias,
                    rows,
                    cols,
                });
            }
            ModelKind::EmbeddingClassifier {
                embedding: EmbeddingModel {
                    feat_mean,
                    feat_std,
                    layers,
                },
                classifier: classifier_from_blocks(&mut blocks, "cls_", &pathstr)?,
            }
        }
        "anomaly" => {
            let mean = take_row(&mut blocks, "mean", &pathstr)?;
            let (rows, cols, cov) =
                blocks
                    .remove("covariance")
                    .ok_or_else(|| Error::Parse {
                        context: pathstr.clone(),
                        msg: "missing block 'covariance'".to_string(),
                    })?;
            let covariance = DMatrix::from_row_slice(rows, cols, &cov);
            let liveness_threshold = take_row(&mut blocks, "threshold", &pathstr)?[0];
            ModelKind::Anomaly {
                scorer: AnomalyScorer::from_parts(mean, covariance)?,
                liveness_threshold,
            }
        }
        other => {
            return Err(Error::Parse {
                context: pathstr,
                msg: format!("unknown model kind '{other}'"),
            })
        }
    };

    Ok(Model {
        streams,
        equalize_bins,
        split,
        split_seed,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padlab::live_prior_anomaly;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classifier_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let model = Model {
            streams: StreamMask::NoAlbedo,
            equalize_bins: 256,
            split: 0.5,
            split_seed: 9,
            kind: ModelKind::Classifier(ClassifierModel {
                mean: vec![0.1, -0.2],
                std: vec![1.5, 0.3],
                weights: vec![std::f64::consts::PI, -1.0 / 3.0],
                bias: 1e-17,
                threshold: 0.5,
            }),
        };
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.streams, StreamMask::NoAlbedo);
        assert_eq!(back.equalize_bins, 256);
        match back.kind {
            ModelKind::Classifier(c) => {
                assert_eq!(c.weights, vec![std::f64::consts::PI, -1.0 / 3.0]);
                assert_eq!(c.bias, 1e-17);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn anomaly_round_trip_preserves_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let live: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let scorer = live_prior_anomaly(&live).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("anomaly.txt");
        let model = Model {
            streams: StreamMask::Full,
            equalize_bins: 0,
            split: 0.5,
            split_seed: 1,
            kind: ModelKind::Anomaly {
                scorer,
                liveness_threshold: -3.0,
            },
        };
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        let probe = vec![0.3, -0.7, 0.9];
        assert_eq!(model.score(&probe), back.score(&probe));
    }

    #[test]
    fn version_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "spoofoptics-model v9\nend\n").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Version(_))));
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.txt");
        std::fs::write(
            &path,
            "spoofoptics-model v1\nkind classifier\nstreams full\nblock mean 1 3\n",
        )
        .unwrap();
        assert!(matches!(load_model(&path), Err(Error::Parse { .. })));
    }
}
