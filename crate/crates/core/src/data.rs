//! Seeded long-tailed Gaussian-mixture datasets and the JSON-lines dataset
//! format.
//!
//! Class counts follow the exponential profile
//! `n_c = round(n_max · ratio^(−c/(C−1)))`, clamped to at least one sample.
//! Class means are drawn from a seeded isotropic proposal and rejection
//! re-sampled until all pairwise distances reach `sep · σ`, so the ground
//! truth mixture is available in closed form for exact scoring.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::squared_distance;
use crate::rng::rng_for;

/// Tag constants for seed sub-streams.
const TAG_MEANS: u64 = 0x01;
const TAG_SAMPLES: u64 = 0x02;

/// Attempts per class mean before placement gives up.
const PLACEMENT_RETRY_CAP: usize = 2000;

/// Labeled feature vectors with per-class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    num_classes: usize,
    class_counts: Vec<usize>,
}

impl LabeledDataset {
    /// Build a dataset, validating every structural invariant.
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        dim: usize,
        num_classes: usize,
    ) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::invalid("dim and num_classes must be positive"));
        }
        if labels.len() * dim != features.len() {
            return Err(Error::invariant(format!(
                "feature rows ({}) do not match label count ({})",
                features.len() / dim.max(1),
                labels.len()
            )));
        }
        let mut class_counts = vec![0usize; num_classes];
        for (i, &label) in labels.iter().enumerate() {
            if label >= num_classes {
                return Err(Error::invariant(format!(
                    "label {label} at row {i} out of range 0..{num_classes}"
                )));
            }
            class_counts[label] += 1;
        }
        if let Some(c) = class_counts.iter().position(|&n| n == 0) {
            return Err(Error::invariant(format!("class {c} has no samples")));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::invariant(format!(
                "non-finite feature at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            num_classes,
            class_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Row indices belonging to class `c`.
    pub fn class_rows(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == c)
            .map(|(i, _)| i)
    }

    /// Training-set class priors π_c = n_c / n.
    pub fn priors(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.class_counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// New dataset with extra rows appended; invariants re-validated.
    pub fn with_appended(&self, rows: &[(Vec<f64>, usize)]) -> Result<Self> {
        let mut features = self.features.clone();
        let mut labels = self.labels.clone();
        for (x, y) in rows {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: x.len(),
                });
            }
            features.extend_from_slice(x);
            labels.push(*y);
        }
        Self::new(features, labels, self.dim, self.num_classes)
    }
}

/// Ground-truth mixture: per-class means, one shared isotropic scale, priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    means: Vec<f64>,
    sigma: f64,
    priors: Vec<f64>,
    dim: usize,
    num_classes: usize,
}

impl MixtureSpec {
    pub fn new(means: Vec<f64>, sigma: f64, priors: Vec<f64>, dim: usize) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::invalid("sigma must be positive"));
        }
        if priors.is_empty() || means.len() != priors.len() * dim {
            return Err(Error::invalid("means shape does not match priors and dim"));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 || priors.iter().any(|&p| p < 0.0) {
            return Err(Error::invariant(format!("priors sum to {total}, expected 1")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invariant("non-finite component mean".into()));
        }
        Ok(Self {
            num_classes: priors.len(),
            means,
            sigma,
            priors,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn mean(&self, c: usize) -> &[f64] {
        &self.means[c * self.dim..(c + 1) * self.dim]
    }

    /// Draw one sample from component `c`.
    pub fn sample_class<R: Rng>(&self, c: usize, rng: &mut R) -> Vec<f64> {
        self.mean(c)
            .iter()
            .map(|&m| m + self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Replace the priors (e.g. with the counts of an actual draw).
    pub fn with_priors(mut self, priors: Vec<f64>) -> Result<Self> {
        let total: f64 = priors.iter().sum();
        if priors.len() != self.num_classes || (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("replacement priors invalid"));
        }
        self.priors = priors;
        Ok(self)
    }
}

/// Head / medium / tail class partition, ordered by descending class count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSplit {
    pub head: Vec<usize>,
    pub med: Vec<usize>,
    pub tail: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    Head,
    Med,
    Tail,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Head => "head",
            Group::Med => "med",
            Group::Tail => "tail",
        }
    }
}

impl GroupSplit {
    pub fn group_of(&self, class: usize) -> Group {
        if self.head.contains(&class) {
            Group::Head
        } else if self.med.contains(&class) {
            Group::Med
        } else {
            Group::Tail
        }
    }

    pub fn classes_of(&self, group: Group) -> &[usize] {
        match group {
            Group::Head => &self.head,
            Group::Med => &self.med,
            Group::Tail => &self.tail,
        }
    }
}

/// Exponential long-tail class counts: `round(n_max · ratio^(−c/(C−1)))`,
/// clamped to at least one sample per class.
pub fn longtail_counts(num_classes: usize, n_max: usize, ratio: f64) -> Vec<usize> {
    let c_max = (num_classes - 1) as f64;
    (0..num_classes)
        .map(|c| {
            let frac = if c_max > 0.0 { c as f64 / c_max } else { 0.0 };
            let n = (n_max as f64 * ratio.powf(-frac)).round() as usize;
            n.max(1)
        })
        .collect()
}

/// Construct a seeded long-tailed dataset together with its ground truth.
///
/// Means are drawn from N(0, r²I) with `r = σ·max(0.3·sep, 1)` and rejected
/// until every pair is at least `sep·σ` apart, so neighboring classes sit
/// near the separation floor and genuinely overlap.
pub fn make_longtail_mixture(
    num_classes: usize,
    dim: usize,
    n_max: usize,
    ratio: f64,
    sep: f64,
    sigma: f64,
    seed: u64,
) -> Result<(LabeledDataset, MixtureSpec)> {
    if num_classes < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    if n_max < num_classes {
        return Err(Error::invalid("n_max must be at least the class count"));
    }
    if !(ratio >= 1.0) {
        return Err(Error::invalid("imbalance ratio must be >= 1"));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if !(sep >= 0.0) {
        return Err(Error::invalid("sep must be non-negative"));
    }

    let counts = longtail_counts(num_classes, n_max, ratio);
    let n_total: usize = counts.iter().sum();
    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n_total as f64).collect();

    // Mean placement.
    let proposal_std = sigma * (0.3 * sep).max(1.0);
    let min_dist_sq = (sep * sigma) * (sep * sigma);
    let mut means: Vec<f64> = Vec::with_capacity(num_classes * dim);
    let mut rng = rng_for(seed, &[TAG_MEANS]);
    for c in 0..num_classes {
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRY_CAP {
            let candidate: Vec<f64> = (0..dim)
                .map(|_| proposal_std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let ok = (0..c).all(|prev| {
                squared_distance(&candidate, &means[prev * dim..(prev + 1) * dim]) >= min_dist_sq
            });
            if ok {
                means.extend_from_slice(&candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementFailure {
                classes: num_classes,
                separation: sep * sigma,
                attempts: PLACEMENT_RETRY_CAP,
            });
        }
    }

    let spec = MixtureSpec::new(means, sigma, priors, dim)?;

    // Per-class sample streams, rows ordered by class.
    let mut features = Vec::with_capacity(n_total * dim);
    let mut labels = Vec::with_capacity(n_total);
    for (c, &n_c) in counts.iter().enumerate() {
        let mut class_rng = rng_for(seed, &[TAG_SAMPLES, c as u64]);
        for _ in 0..n_c {
            features.extend(spec.sample_class(c, &mut class_rng));
            labels.push(c);
        }
    }

    let dataset = LabeledDataset::new(features, labels, dim, num_classes)?;
    Ok((dataset, spec))
}

/// Draw a balanced dataset (equal counts per class) from an existing mixture,
/// on its own seed stream. Used for balanced controls and held-out test sets.
pub fn sample_balanced(spec: &MixtureSpec, per_class: usize, seed: u64) -> Result<LabeledDataset> {
    if per_class == 0 {
        return Err(Error::invalid("per_class must be positive"));
    }
    let dim = spec.dim();
    let mut features = Vec::with_capacity(spec.num_classes() * per_class * dim);
    let mut labels = Vec::with_capacity(spec.num_classes() * per_class);
    for c in 0..spec.num_classes() {
        let mut class_rng = rng_for(seed, &[TAG_SAMPLES, c as u64]);
        for _ in 0..per_class {
            features.extend(spec.sample_class(c, &mut class_rng));
            labels.push(c);
        }
    }
    LabeledDataset::new(features, labels, dim, spec.num_classes())
}

/// Partition classes into head/med/tail thirds by descending count.
///
/// Ties break by class index; remainder classes go to the earlier groups.
pub fn split_groups(dataset: &LabeledDataset) -> Result<GroupSplit> {
    split_groups_from_counts(dataset.class_counts())
}

/// Same as [`split_groups`] but from raw per-class counts.
pub fn split_groups_from_counts(class_counts: &[usize]) -> Result<GroupSplit> {
    let num_classes = class_counts.len();
    if num_classes < 3 {
        return Err(Error::invalid("group split needs at least 3 classes"));
    }
    let mut order: Vec<usize> = (0..num_classes).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(class_counts[c]), c));

    let base = num_classes / 3;
    let rem = num_classes % 3;
    let head_len = base + usize::from(rem > 0);
    let med_len = base + usize::from(rem > 1);

    let mut head: Vec<usize> = order[..head_len].to_vec();
    let mut med: Vec<usize> = order[head_len..head_len + med_len].to_vec();
    let mut tail: Vec<usize> = order[head_len + med_len..].to_vec();
    head.sort_unstable();
    med.sort_unstable();
    tail.sort_unstable();
    Ok(GroupSplit { head, med, tail })
}

/// Generation metadata attached to sampled rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenMeta {
    pub mode: String,
    pub s: f64,
    pub y_t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_d: Option<usize>,
    pub seed: u64,
}

/// Optional per-row annotations in the dataset file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowExtra {
    pub dbg: bool,
    pub gen_meta: Option<GenMeta>,
}

#[derive(Deserialize)]
struct MetaLine {
    meta: MetaFields,
}

#[derive(Deserialize)]
struct MetaFields {
    dim: usize,
    classes: usize,
}

#[derive(Deserialize)]
struct RecordLine {
    label: usize,
    x: Vec<f64>,
    #[serde(default)]
    #[allow(dead_code)]
    dbg: Option<bool>,
    #[serde(default)]
    #[allow(dead_code)]
    gen_meta: Option<GenMeta>,
}

/// Format a float with 17 significant digits (round-trip exact for f64).
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_row<W: Write>(out: &mut W, label: usize, x: &[f64], extra: Option<&RowExtra>) -> std::io::Result<()> {
    write!(out, "{{\"label\":{label},\"x\":[")?;
    for (j, v) in x.iter().enumerate() {
        if j > 0 {
            out.write_all(b",")?;
        }
        out.write_all(fmt_f64(*v).as_bytes())?;
    }
    write!(out, "]")?;
    if let Some(extra) = extra {
        if extra.dbg {
            write!(out, ",\"dbg\":true")?;
        }
        if let Some(meta) = &extra.gen_meta {
            let json = serde_json::to_string(meta).expect("gen_meta serializes");
            write!(out, ",\"gen_meta\":{json}")?;
        }
    }
    writeln!(out, "}}")
}

/// Write a dataset in the JSON-lines format.
pub fn save_dataset(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    save_dataset_with_extras(dataset, None, path)
}

/// Write a dataset with optional per-row annotations (`extras[i]` for row i).
pub fn save_dataset_with_extras(
    dataset: &LabeledDataset,
    extras: Option<&[Option<RowExtra>]>,
    path: &Path,
) -> Result<()> {
    if let Some(extras) = extras {
        if extras.len() != dataset.len() {
            return Err(Error::invalid("extras length does not match dataset"));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(
        out,
        "{{\"meta\":{{\"dim\":{},\"classes\":{}}}}}",
        dataset.dim(),
        dataset.num_classes()
    )
    .map_err(io_err)?;
    for i in 0..dataset.len() {
        let extra = extras.and_then(|e| e[i].as_ref());
        write_row(&mut out, dataset.label(i), dataset.row(i), extra).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Write labeled rows that need not cover every class (e.g. sampled batches).
pub fn save_rows(
    rows: &[(Vec<f64>, usize)],
    dim: usize,
    num_classes: usize,
    extras: Option<&[Option<RowExtra>]>,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "{{\"meta\":{{\"dim\":{dim},\"classes\":{num_classes}}}}}").map_err(io_err)?;
    for (i, (x, label)) in rows.iter().enumerate() {
        let extra = extras.and_then(|e| e[i].as_ref());
        write_row(&mut out, *label, x, extra).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Load a dataset, validating the header, every row, and all invariants.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let (features, labels, dim, classes) = load_rows(path)?;
    LabeledDataset::new(features, labels, dim, classes)
}

/// Load raw rows without requiring every class to be present.
pub fn load_rows(path: &Path) -> Result<(Vec<f64>, Vec<usize>, usize, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty file, expected meta header".into(),
        })?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let meta: MetaLine = serde_json::from_str(&header).map_err(|e| Error::Parse {
        line: 1,
        message: format!("bad meta header: {e}"),
    })?;
    let dim = meta.meta.dim;
    let classes = meta.meta.classes;
    if dim == 0 || classes == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "meta dim and classes must be positive".into(),
        });
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.x.len() != dim {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {dim} features, got {}", record.x.len()),
            });
        }
        if record.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: line_no,
                message: "non-finite feature value".into(),
            });
        }
        features.extend_from_slice(&record.x);
        labels.push(record.label);
    }
    Ok((features, labels, dim, classes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_ratio_forces_equal_counts() {
        let counts = longtail_counts(10, 500, 1.0);
        assert!(counts.iter().all(|&c| c == 500));
    }

    #[test]
    fn count_formula_hand_values() {
        // round(500·100^(−c/9)) endpoints
        let counts = longtail_counts(10, 500, 100.0);
        assert_eq!(counts[0], 500);
        assert_eq!(counts[9], 5);
        // 100·100^(−c/2) for c = 0, 1, 2
        assert_eq!(longtail_counts(3, 100, 100.0), vec![100, 10, 1]);
    }

    #[test]
    fn counts_clamped_to_one() {
        let counts = longtail_counts(5, 10, 1000.0);
        assert!(counts.iter().all(|&c| c >= 1));
        assert_eq!(*counts.last().unwrap(), 1);
    }

    #[test]
    fn mixture_rejects_bad_arguments() {
        assert!(matches!(
            make_longtail_mixture(1, 4, 100, 10.0, 1.0, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_longtail_mixture(10, 4, 5, 10.0, 1.0, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_longtail_mixture(3, 4, 100, 0.5, 1.0, 1.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_longtail_mixture(3, 4, 100, 10.0, 1.0, 0.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn placement_fails_when_separation_is_impossible() {
        // 40 means at 100σ separation cannot fit a proposal of ~30σ radius
        // in one dimension.
        let result = make_longtail_mixture(40, 1, 100, 1.0, 100.0, 1.0, 0);
        assert!(matches!(result, Err(Error::PlacementFailure { .. })));
    }

    #[test]
    fn equal_seeds_reproduce_different_seeds_differ() {
        let (a, _) = make_longtail_mixture(4, 3, 50, 10.0, 2.0, 1.0, 7).unwrap();
        let (b, _) = make_longtail_mixture(4, 3, 50, 10.0, 2.0, 1.0, 7).unwrap();
        let (c, _) = make_longtail_mixture(4, 3, 50, 10.0, 2.0, 1.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn means_respect_separation_floor() {
        let (_, spec) = make_longtail_mixture(10, 8, 100, 100.0, 2.5, 1.0, 3).unwrap();
        for a in 0..10 {
            for b in (a + 1)..10 {
                let d = squared_distance(spec.mean(a), spec.mean(b)).sqrt();
                assert!(d >= 2.5, "classes {a},{b} at distance {d}");
            }
        }
    }

    #[test]
    fn split_groups_thirds_and_remainders() {
        let exact = split_groups_from_counts(&[90, 80, 70, 60, 50, 40, 30, 20, 10]).unwrap();
        assert_eq!(exact.head, vec![0, 1, 2]);
        assert_eq!(exact.med, vec![3, 4, 5]);
        assert_eq!(exact.tail, vec![6, 7, 8]);

        let ten = split_groups_from_counts(&[100, 90, 80, 70, 60, 50, 40, 30, 20, 10]).unwrap();
        assert_eq!(ten.head, vec![0, 1, 2, 3]);
        assert_eq!(ten.med, vec![4, 5, 6]);
        assert_eq!(ten.tail, vec![7, 8, 9]);

        let tied = split_groups_from_counts(&[5, 5, 5]).unwrap();
        assert_eq!(tied.head, vec![0]);
        assert_eq!(tied.med, vec![1]);
        assert_eq!(tied.tail, vec![2]);

        assert!(split_groups_from_counts(&[5, 5]).is_err());
    }

    #[test]
    fn class_means_converge_to_spec() {
        let (ds, spec) = make_longtail_mixture(5, 6, 200, 5.0, 2.0, 1.0, 11).unwrap();
        for c in 0..5 {
            let n_c = ds.class_counts()[c];
            if n_c < 30 {
                continue;
            }
            let mut mean = vec![0.0; ds.dim()];
            for i in ds.class_rows(c) {
                for (m, v) in mean.iter_mut().zip(ds.row(i)) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= n_c as f64;
            }
            let err = squared_distance(&mean, spec.mean(c)).sqrt();
            let bound = 5.0 * spec.sigma() / (n_c as f64).sqrt();
            assert!(err <= bound, "class {c}: {err} > {bound}");
        }
    }
}
