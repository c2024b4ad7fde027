//! Supervised samples from aligned feature stacks and label grids:
//! eligibility filtering, min-max normalization fitted on training data
//! only, and a seeded, reproducible train/test split.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::FeatureStack;
use crate::raster::{assert_aligned, Grid, RasterError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("label cell ({row}, {col}) holds {value}; labels must be 0, 1, or nodata")]
    InvalidLabel { row: usize, col: usize, value: f64 },
    #[error("no eligible pixels: every pixel is nodata in the labels or the feature stack")]
    NoEligiblePixels,
    #[error("feature `{0}` is constant on the training set; cannot min-max scale")]
    ConstantFeature(String),
    #[error("sample has {got} features, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("need at least 2 samples to split, got {0}")]
    TooFewSamples(usize),
    #[error("cannot split: the input holds a single class")]
    SingleClassInput,
    #[error("split left the {side} side single-class; enable stratification (--stratify)")]
    SingleClassSplit { side: &'static str },
    #[error("split produced an empty {side} side; adjust the test fraction")]
    EmptySide { side: &'static str },
    #[error("sample table line {line}: {msg}")]
    BadTable { line: usize, msg: String },
}

/// One supervised pixel: its position, raw or normalized features, and a
/// binary label (0.0 or 1.0).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub row: usize,
    pub col: usize,
    pub x: Vec<f64>,
    pub y: f64,
}

/// Per-feature min-max parameters learned from a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub feature_names: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormParams {
    /// Scale a raw feature vector to [0, 1], clamping values outside the
    /// training range.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>, DatasetError> {
        if raw.len() != self.mins.len() {
            return Err(DatasetError::DimensionMismatch {
                expected: self.mins.len(),
                got: raw.len(),
            });
        }
        Ok(raw
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect())
    }

    /// Inverse of [`NormParams::apply`] for in-range (unclamped) values.
    pub fn invert(&self, scaled: &[f64]) -> Result<Vec<f64>, DatasetError> {
        if scaled.len() != self.mins.len() {
            return Err(DatasetError::DimensionMismatch {
                expected: self.mins.len(),
                got: scaled.len(),
            });
        }
        Ok(scaled
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| v * (hi - lo) + lo)
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("feature min max\n");
        for i in 0..self.feature_names.len() {
            let _ = writeln!(out, "{} {} {}", self.feature_names[i], self.mins[i], self.maxs[i]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DatasetError> {
        let mut names = Vec::new();
        let mut mins = Vec::new();
        let mut maxs = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(DatasetError::BadTable {
                    line: i + 1,
                    msg: format!("expected `name min max`, got `{line}`"),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| DatasetError::BadTable {
                    line: i + 1,
                    msg: format!("`{s}` is not a number"),
                })
            };
            names.push(parts[0].to_string());
            mins.push(parse(parts[1])?);
            maxs.push(parse(parts[2])?);
        }
        if names.is_empty() {
            return Err(DatasetError::BadTable {
                line: 1,
                msg: "empty normalization table".to_string(),
            });
        }
        Ok(NormParams {
            feature_names: names,
            mins,
            maxs,
        })
    }
}

/// A collection of samples plus the normalization applied to them, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub feature_names: Vec<String>,
    pub samples: Vec<Sample>,
    pub norm: Option<NormParams>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// (negatives, positives)
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.y == 1.0).count();
        (self.samples.len() - pos, pos)
    }

    /// Plain-text debug table: `row col <features...> label`.
    pub fn to_table(&self) -> String {
        let mut out = String::from("row col ");
        out.push_str(&self.feature_names.join(" "));
        out.push_str(" label\n");
        for s in &self.samples {
            let _ = write!(out, "{} {}", s.row, s.col);
            for v in &s.x {
                let _ = write!(out, " {v}");
            }
            let _ = writeln!(out, " {}", s.y);
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(DatasetError::BadTable {
            line: 1,
            msg: "empty table".to_string(),
        })?;
        let cols: Vec<&str> = header.split_whitespace().collect();
        if cols.len() < 4 || cols[0] != "row" || cols[1] != "col" || cols[cols.len() - 1] != "label"
        {
            return Err(DatasetError::BadTable {
                line: 1,
                msg: "header must be `row col <features...> label`".to_string(),
            });
        }
        let feature_names: Vec<String> =
            cols[2..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        let n_feat = feature_names.len();

        let mut samples = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != n_feat + 3 {
                return Err(DatasetError::BadTable {
                    line: i + 1,
                    msg: format!("expected {} columns, got {}", n_feat + 3, parts.len()),
                });
            }
            let bad = |s: &str| DatasetError::BadTable {
                line: i + 1,
                msg: format!("`{s}` is not a number"),
            };
            let row: usize = parts[0].parse().map_err(|_| bad(parts[0]))?;
            let col: usize = parts[1].parse().map_err(|_| bad(parts[1]))?;
            let mut x = Vec::with_capacity(n_feat);
            for p in &parts[2..2 + n_feat] {
                x.push(p.parse::<f64>().map_err(|_| bad(p))?);
            }
            let y: f64 = parts[n_feat + 2].parse().map_err(|_| bad(parts[n_feat + 2]))?;
            if y != 0.0 && y != 1.0 {
                return Err(DatasetError::BadTable {
                    line: i + 1,
                    msg: format!("label must be 0 or 1, got {y}"),
                });
            }
            samples.push(Sample { row, col, x, y });
        }
        Ok(SampleSet {
            feature_names,
            samples,
            norm: None,
        })
    }
}

/// One raw sample per pixel that is labeled 0/1 and fully valid in the
/// stack, in deterministic row-major order.
pub fn build_samples(stack: &FeatureStack, labels: &Grid) -> Result<SampleSet, DatasetError> {
    let mut layer_refs: Vec<&Grid> = stack.layers().iter().collect();
    layer_refs.push(labels);
    assert_aligned(&layer_refs)?;

    let ncols = labels.ncols();
    let mut samples = Vec::new();
    for (i, &label) in labels.cells.iter().enumerate() {
        if labels.is_nodata(label) {
            continue;
        }
        if label != 0.0 && label != 1.0 {
            return Err(DatasetError::InvalidLabel {
                row: i / ncols,
                col: i % ncols,
                value: label,
            });
        }
        if let Some(x) = stack.feature_vector(i) {
            samples.push(Sample {
                row: i / ncols,
                col: i % ncols,
                x,
                y: label,
            });
        }
    }
    if samples.is_empty() {
        return Err(DatasetError::NoEligiblePixels);
    }
    Ok(SampleSet {
        feature_names: stack.names().to_vec(),
        samples,
        norm: None,
    })
}

/// Fit min-max parameters on `train` only and scale `train` plus every set
/// in `others` to [0, 1]; out-of-range values in `others` clamp.
pub fn normalize(
    train: SampleSet,
    others: Vec<SampleSet>,
) -> Result<(SampleSet, Vec<SampleSet>, NormParams), DatasetError> {
    if train.is_empty() {
        return Err(DatasetError::NoEligiblePixels);
    }
    let n_feat = train.samples[0].x.len();
    let mut mins = vec![f64::INFINITY; n_feat];
    let mut maxs = vec![f64::NEG_INFINITY; n_feat];
    for s in &train.samples {
        for (j, &v) in s.x.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    for j in 0..n_feat {
        if maxs[j] <= mins[j] {
            let name = train
                .feature_names
                .get(j)
                .cloned()
                .unwrap_or_else(|| format!("feature {j}"));
            return Err(DatasetError::ConstantFeature(name));
        }
    }
    let params = NormParams {
        feature_names: train.feature_names.clone(),
        mins,
        maxs,
    };

    let scale = |mut set: SampleSet| -> Result<SampleSet, DatasetError> {
        for s in &mut set.samples {
            s.x = params.apply(&s.x)?;
        }
        set.norm = Some(params.clone());
        Ok(set)
    };
    let train = scale(train)?;
    let others = others.into_iter().map(scale).collect::<Result<_, _>>()?;
    Ok((train, others, params))
}

/// Seeded uniform split into train and test; `|test| = round(fraction * n)`.
///
/// With `stratify` the shuffle and rounding run per class, preserving the
/// class ratio on both sides to within one sample.
pub fn split(
    set: &SampleSet,
    test_fraction: f64,
    seed: u64,
    stratify: bool,
) -> Result<(SampleSet, SampleSet), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::BadFraction(test_fraction));
    }
    let n = set.len();
    if n < 2 {
        return Err(DatasetError::TooFewSamples(n));
    }
    let (neg, pos) = set.class_counts();
    if neg == 0 || pos == 0 {
        return Err(DatasetError::SingleClassInput);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_idx: Vec<usize>;
    let mut train_idx: Vec<usize>;
    if stratify {
        test_idx = Vec::new();
        train_idx = Vec::new();
        for class in [0.0, 1.0] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| set.samples[i].y == class).collect();
            idx.shuffle(&mut rng);
            let k = (test_fraction * idx.len() as f64).round() as usize;
            test_idx.extend_from_slice(&idx[..k]);
            train_idx.extend_from_slice(&idx[k..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let k = (test_fraction * n as f64).round() as usize;
        test_idx = idx[..k].to_vec();
        train_idx = idx[k..].to_vec();
    }

    if test_idx.is_empty() {
        return Err(DatasetError::EmptySide { side: "test" });
    }
    if train_idx.is_empty() {
        return Err(DatasetError::EmptySide { side: "train" });
    }

    let gather = |idx: &[usize]| SampleSet {
        feature_names: set.feature_names.clone(),
        samples: idx.iter().map(|&i| set.samples[i].clone()).collect(),
        norm: set.norm.clone(),
    };
    let train = gather(&train_idx);
    let test = gather(&test_idx);

    for (side, part) in [("train", &train), ("test", &test)] {
        let (n0, n1) = part.class_counts();
        if n0 == 0 || n1 == 0 {
            return Err(DatasetError::SingleClassSplit { side });
        }
    }
    Ok((train, test))
}
