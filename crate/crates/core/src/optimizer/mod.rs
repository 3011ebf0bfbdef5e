//! Surrogate-driven emitter placement: solver-generated datasets, a small
//! convolutional regressor, genetic feature selection and a genetic search
//! over the offset surface.

mod dataset;
mod ga;
mod placement;
mod surrogate;

pub use dataset::{
    generate_dataset, read_records_csv, write_records_csv, DatasetReport, DatasetSpec, Sampling, TargetKind,
};
pub use ga::{evolve_masks, maximize_unit_box, GAConfig, GaOutcome};
pub use placement::{optimize_placement, PlacementResult, PlacementSpec};
pub use surrogate::{Architecture, Normalization, SurrogateModel, TrainConfig, Update};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::SourceSpec;
use crate::tensor::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmitterKind {
    EDx,
    EDy,
    EDz,
    MDx,
    MDy,
    MDz,
}

impl EmitterKind {
    pub const ALL: [EmitterKind; 6] = [
        EmitterKind::EDx,
        EmitterKind::EDy,
        EmitterKind::EDz,
        EmitterKind::MDx,
        EmitterKind::MDy,
        EmitterKind::MDz,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> Vec3 {
        let mut a = [0.0; 3];
        a[self.index() % 3] = 1.0;
        a
    }

    pub fn is_magnetic(self) -> bool {
        self.index() >= 3
    }

    pub fn source(self, position: Vec3) -> SourceSpec {
        if self.is_magnetic() {
            SourceSpec::point_md(position, self.axis())
        } else {
            SourceSpec::point_ed(position, self.axis())
        }
    }
}

impl std::str::FromStr for EmitterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EmitterKind::ALL
            .into_iter()
            .find(|k| format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown emitter kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub position: Vec3,
    pub omega: f64,
    pub b_z: f64,
    pub emitter_kind: EmitterKind,
    pub target: f64,
}

/// How frequency and bias enter the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Encoding {
    /// Raw values; the model's normalization rescales them.
    Continuous,
    /// One-hot bins over the given ranges.
    Binned {
        bins: usize,
        omega: (f64, f64),
        b_z: (f64, f64),
    },
}

fn one_hot(v: f64, (lo, hi): (f64, f64), bins: usize, out: &mut Vec<f64>) {
    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    let hit = ((t * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    out.extend((0..bins).map(|i| if i == hit { 1.0 } else { 0.0 }));
}

impl Encoding {
    pub fn len(&self) -> usize {
        match self {
            Encoding::Continuous => 11,
            Encoding::Binned { bins, .. } => 3 + 2 * bins + 6,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position in micrometres, then frequency and bias, then the emitter
    /// one-hot.
    pub fn features(&self, position: &Vec3, omega: f64, b_z: f64, kind: EmitterKind) -> Vec<f64> {
        let mut f: Vec<f64> = position.iter().map(|v| v * 1e6).collect();
        match *self {
            Encoding::Continuous => {
                f.push(omega * 1e-12);
                f.push(b_z);
            }
            Encoding::Binned {
                bins,
                omega: wr,
                b_z: br,
            } => {
                one_hot(omega, wr, bins.max(1), &mut f);
                one_hot(b_z, br, bins.max(1), &mut f);
            }
        }
        f.extend(EmitterKind::ALL.iter().map(|k| if *k == kind { 1.0 } else { 0.0 }));
        f
    }

    pub fn record_features(&self, r: &SampleRecord) -> Vec<f64> {
        self.features(&r.position, r.omega, r.b_z, r.emitter_kind)
    }
}

/// Data prepared for the surrogate: normalized and masked inputs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub norm: Normalization,
}

/// Fits normalization on `records` and zeroes the masked-out features.
/// With `log_target`, the model learns `ln(target)`.
pub fn prepare(records: &[SampleRecord], encoding: &Encoding, mask: &[bool], log_target: bool) -> Result<Prepared> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no records".into()));
    }
    if mask.len() != encoding.len() {
        return Err(Error::InvalidParameter(
            "mask length does not match the encoding".into(),
        ));
    }
    let raw: Vec<Vec<f64>> = records.iter().map(|r| encoding.record_features(r)).collect();
    let targets: Vec<f64> = records
        .iter()
        .map(|r| {
            if log_target {
                r.target.max(f64::MIN_POSITIVE).ln()
            } else {
                r.target
            }
        })
        .collect();
    let norm = Normalization::fit(&raw, &targets);
    let inputs = raw.iter().map(|x| apply_mask(&norm.apply(x), mask)).collect();
    let targets = targets.iter().map(|t| norm.target(*t)).collect();
    Ok(Prepared { inputs, targets, norm })
}

pub fn apply_mask(x: &[f64], mask: &[bool]) -> Vec<f64> {
    x.iter().zip(mask).map(|(v, &m)| if m { *v } else { 0.0 }).collect()
}

/// A trained model together with the choices needed to query it.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub model: SurrogateModel,
    pub encoding: Encoding,
    pub mask: Vec<bool>,
    pub log_target: bool,
}

impl Surrogate {
    pub fn predict(&self, position: &Vec3, omega: f64, b_z: f64, kind: EmitterKind) -> f64 {
        let x = self.encoding.features(position, omega, b_z, kind);
        let y = self
            .model
            .norm
            .untarget(self.model.forward(&apply_mask(&self.model.norm.apply(&x), &self.mask)));
        if self.log_target {
            y.exp()
        } else {
            y
        }
    }
}

pub fn train_surrogate(
    records: &[SampleRecord],
    encoding: Encoding,
    mask: Vec<bool>,
    log_target: bool,
    arch_seed: u64,
    config: &TrainConfig,
) -> Result<(Surrogate, Vec<f64>)> {
    let data = prepare(records, &encoding, &mask, log_target)?;
    let mut model = SurrogateModel::new(Architecture::new(encoding.len()), arch_seed)?;
    model.norm = data.norm;
    let history = model.train(&data.inputs, &data.targets, config)?;
    Ok((
        Surrogate {
            model,
            encoding,
            mask,
            log_target,
        },
        history,
    ))
}

/// Deterministic split: every `k`-th record (offset `k - 1`) is held out.
pub fn holdout_split(records: &[SampleRecord], k: usize) -> (Vec<SampleRecord>, Vec<SampleRecord>) {
    let k = k.max(2);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if i % k == k - 1 {
            test.push(*r);
        } else {
            train.push(*r);
        }
    }
    (train, test)
}

/// Genetic feature selection with validation MSE of a retrained surrogate
/// as fitness.
pub fn ga_feature_select(
    records: &[SampleRecord],
    encoding: Encoding,
    log_target: bool,
    ga: &GAConfig,
    train: &TrainConfig,
) -> Result<GaOutcome<Vec<bool>>> {
    let (fit, val) = holdout_split(records, 4);
    if fit.is_empty() || val.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least 4 records for feature selection".into(),
        ));
    }
    evolve_masks(encoding.len(), ga, None, |mask| {
        if !mask.iter().any(|&m| m) {
            return Ok(f64::INFINITY);
        }
        let (s, _) = train_surrogate(&fit, encoding, mask.to_vec(), log_target, ga.seed, train)?;
        let err = val
            .iter()
            .map(|r| {
                let p = s
                    .model
                    .forward(&apply_mask(&s.model.norm.apply(&encoding.record_features(r)), mask));
                let t = s.model.norm.target(if log_target { r.target.ln() } else { r.target });
                (p - t).powi(2)
            })
            .sum::<f64>()
            / val.len() as f64;
        Ok(err)
    })
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let mean = 0.5 * (i + j) as f64;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
