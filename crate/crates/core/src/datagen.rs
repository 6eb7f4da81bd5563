//! Synthetic benchmark generation.
//!
//! Each instance is standard Gaussian noise plus one contiguous
//! class-discriminating feature at a uniformly random position, followed by
//! per-instance standardization to zero mean and unit standard deviation.
//! Two contrast mechanisms distinguish the classes: amplitude (A=1 vs A=2 at
//! equal length 60) and length (L=30 vs L=60 at equal amplitude 2). Four
//! feature shapes × two contrasts give the eight benchmark datasets.
//!
//! Generation is a pure function of `(config, base_seed)`: split seeds are
//! `base_seed + {0,1,2}` and every instance owns an independently derived
//! ChaCha8 stream, so datasets are bit-identical across runs and platforms
//! and instances may be generated in parallel.

use crate::error::{Error, Result};
use crate::floatfmt::{self, fmt17};
use crate::seeds;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

/// Series length used by the benchmark grid.
pub const DEFAULT_SERIES_LEN: usize = 150;
/// Fixed sine period in timesteps.
pub const SINE_PERIOD: f64 = 10.0;

/// Shape of the class-discriminating feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Constant amplitude shift.
    Level,
    /// Gaussian-shaped transient, width `sigma = L/6`.
    Pulse,
    /// Periodic oscillation with period 10.
    Sine,
    /// Linear increase from zero to the amplitude.
    Trend,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] =
        [FeatureKind::Level, FeatureKind::Pulse, FeatureKind::Sine, FeatureKind::Trend];
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureKind::Level => "level",
            FeatureKind::Pulse => "pulse",
            FeatureKind::Sine => "sine",
            FeatureKind::Trend => "trend",
        };
        f.write_str(s)
    }
}

impl FromStr for FeatureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level" => Ok(FeatureKind::Level),
            "pulse" => Ok(FeatureKind::Pulse),
            "sine" => Ok(FeatureKind::Sine),
            "trend" => Ok(FeatureKind::Trend),
            other => Err(Error::InvalidInput(format!("unknown feature kind `{other}`"))),
        }
    }
}

/// Mechanism that separates the two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contrast {
    /// A=1 vs A=2, both windows length 60.
    Amplitude,
    /// L=30 vs L=60, both amplitude 2.
    Length,
}

impl Contrast {
    pub const ALL: [Contrast; 2] = [Contrast::Amplitude, Contrast::Length];
}

impl fmt::Display for Contrast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Contrast::Amplitude => "amplitude",
            Contrast::Length => "length",
        })
    }
}

impl FromStr for Contrast {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" => Ok(Contrast::Amplitude),
            "length" => Ok(Contrast::Length),
            other => Err(Error::InvalidInput(format!("unknown contrast `{other}`"))),
        }
    }
}

/// Parametric description of one class's feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    #[serde(serialize_with = "floatfmt::ser_f64")]
    pub amplitude: f64,
    /// Window length in timesteps.
    pub length: usize,
    /// Sine only; fixed to [`SINE_PERIOD`].
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "floatfmt::ser_opt_f64")]
    pub period: Option<f64>,
    /// Pulse only; exactly `length / 6`.
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "floatfmt::ser_opt_f64")]
    pub sigma: Option<f64>,
}

impl FeatureSpec {
    /// Builds a spec with the derived parameters filled in.
    pub fn new(kind: FeatureKind, amplitude: f64, length: usize) -> Self {
        Self {
            kind,
            amplitude,
            length,
            period: (kind == FeatureKind::Sine).then_some(SINE_PERIOD),
            sigma: (kind == FeatureKind::Pulse).then_some(length as f64 / 6.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidSpec("feature length must be positive".into()));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        match self.kind {
            FeatureKind::Sine => {
                if self.period != Some(SINE_PERIOD) {
                    return Err(Error::InvalidSpec("sine period is fixed to 10".into()));
                }
            }
            FeatureKind::Pulse => {
                if self.sigma != Some(self.length as f64 / 6.0) {
                    return Err(Error::InvalidSpec("pulse sigma must equal length/6".into()));
                }
            }
            FeatureKind::Trend => {
                if self.length < 2 {
                    return Err(Error::InvalidSpec(
                        "trend needs at least 2 timesteps".into(),
                    ));
                }
            }
            FeatureKind::Level => {}
        }
        if self.kind != FeatureKind::Sine && self.period.is_some() {
            return Err(Error::InvalidSpec("period only applies to sine".into()));
        }
        if self.kind != FeatureKind::Pulse && self.sigma.is_some() {
            return Err(Error::InvalidSpec("sigma only applies to pulse".into()));
        }
        Ok(())
    }
}

/// Evaluates the feature formula over `t = 0..length-1`.
///
/// Level `A`; pulse `A·exp(−(t−L/2)²/(2σ²))` with `σ = L/6`; sine
/// `A·sin(2πt/p)` with `p = 10`; trend `A·t/(L−1)`.
pub fn generate_feature(spec: &FeatureSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let amp = spec.amplitude;
    let len = spec.length;
    let out = match spec.kind {
        FeatureKind::Level => vec![amp; len],
        FeatureKind::Pulse => {
            let sigma = len as f64 / 6.0;
            let center = len as f64 / 2.0;
            (0..len)
                .map(|t| {
                    let d = t as f64 - center;
                    amp * (-d * d / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        }
        FeatureKind::Sine => (0..len)
            .map(|t| amp * (2.0 * std::f64::consts::PI * t as f64 / SINE_PERIOD).sin())
            .collect(),
        FeatureKind::Trend => (0..len).map(|t| amp * t as f64 / (len - 1) as f64).collect(),
    };
    Ok(out)
}

/// Which split an instance belongs to; fixes the derived seed offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    fn seed_offset(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Full description of one benchmark dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub id: String,
    pub contrast: Contrast,
    pub feature: FeatureKind,
    pub series_len: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub base_seed: u64,
    pub class0: FeatureSpec,
    pub class1: FeatureSpec,
}

impl DatasetConfig {
    /// The benchmark configuration for one (contrast, feature) cell:
    /// 150 timesteps, splits of 1000/300/300.
    pub fn benchmark(contrast: Contrast, feature: FeatureKind, base_seed: u64) -> Self {
        let (class0, class1) = match contrast {
            Contrast::Amplitude => (
                FeatureSpec::new(feature, 1.0, 60),
                FeatureSpec::new(feature, 2.0, 60),
            ),
            Contrast::Length => (
                FeatureSpec::new(feature, 2.0, 30),
                FeatureSpec::new(feature, 2.0, 60),
            ),
        };
        Self {
            id: format!("{contrast}_{feature}"),
            contrast,
            feature,
            series_len: DEFAULT_SERIES_LEN,
            n_train: 1000,
            n_val: 300,
            n_test: 300,
            base_seed,
            class0,
            class1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.class0.validate()?;
        self.class1.validate()?;
        if self.class0.kind != self.feature || self.class1.kind != self.feature {
            return Err(Error::InvalidSpec("class specs must match the dataset feature".into()));
        }
        match self.contrast {
            Contrast::Amplitude => {
                if self.class0.amplitude != 1.0
                    || self.class1.amplitude != 2.0
                    || self.class0.length != 60
                    || self.class1.length != 60
                {
                    return Err(Error::InvalidSpec(
                        "amplitude contrast requires A=1 vs A=2 at equal length 60".into(),
                    ));
                }
            }
            Contrast::Length => {
                if self.class0.length != 30
                    || self.class1.length != 60
                    || self.class0.amplitude != 2.0
                    || self.class1.amplitude != 2.0
                {
                    return Err(Error::InvalidSpec(
                        "length contrast requires L=30 vs L=60 at equal amplitude 2".into(),
                    ));
                }
            }
        }
        if self.class0.length > self.series_len || self.class1.length > self.series_len {
            return Err(Error::InvalidSpec("feature window exceeds series length".into()));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::InvalidSpec("splits must be nonempty".into()));
        }
        Ok(())
    }

    pub fn spec_for(&self, label: u8) -> &FeatureSpec {
        if label == 0 {
            &self.class0
        } else {
            &self.class1
        }
    }

    pub fn split_seed(&self, split: Split) -> u64 {
        self.base_seed.wrapping_add(split.seed_offset())
    }

    pub fn split_size(&self, split: Split) -> usize {
        match split {
            Split::Train => self.n_train,
            Split::Val => self.n_val,
            Split::Test => self.n_test,
        }
    }
}

/// One labeled series with its ground-truth feature window.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesInstance {
    pub id: usize,
    pub label: u8,
    /// Standardized values, zero mean and unit standard deviation.
    pub values: Vec<f64>,
    /// `mask[i]` is true exactly on `[t_start, t_start + feature_len - 1]`.
    pub mask: Vec<bool>,
    pub t_start: usize,
    pub feature_len: usize,
    /// Mean of the series before standardization.
    pub raw_mean: f64,
    /// Population standard deviation before standardization.
    pub raw_std: f64,
}

impl TimeSeriesInstance {
    /// Undoes standardization: `values * raw_std + raw_mean`.
    pub fn destandardized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.raw_std + self.raw_mean).collect()
    }
}

/// Draws one instance from the caller-owned stream.
///
/// Draw order is fixed: `series_len` standard normal noise values, then
/// `t_start` uniform on `{0, …, series_len − feature_len}`. The feature is
/// added onto the noise and the result standardized per instance.
pub fn generate_instance(
    config: &DatasetConfig,
    label: u8,
    id: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TimeSeriesInstance> {
    generate_instance_with_noise_scale(config, label, id, rng, 1.0)
}

/// [`generate_instance`] with the noise amplitude scaled; a scale of zero
/// isolates the feature for tests. Draw order is unchanged so `t_start`
/// placement matches the unscaled generator.
pub fn generate_instance_with_noise_scale(
    config: &DatasetConfig,
    label: u8,
    id: usize,
    rng: &mut ChaCha8Rng,
    noise_scale: f64,
) -> Result<TimeSeriesInstance> {
    let spec = config.spec_for(label);
    let feature = generate_feature(spec)?;
    let n = config.series_len;
    let len = spec.length;

    let mut x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * noise_scale).collect();
    let t_start = rng.gen_range(0..=n - len);
    for (xv, fv) in x[t_start..t_start + len].iter_mut().zip(&feature) {
        *xv += fv;
    }
    let mut mask = vec![false; n];
    mask[t_start..t_start + len].fill(true);

    let raw_mean = x.iter().sum::<f64>() / n as f64;
    let raw_std = (x.iter().map(|v| (v - raw_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    for v in &mut x {
        *v = (*v - raw_mean) / raw_std;
    }

    Ok(TimeSeriesInstance {
        id,
        label,
        values: x,
        mask,
        t_start,
        feature_len: len,
        raw_mean,
        raw_std,
    })
}

/// A generated dataset with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub train: Vec<TimeSeriesInstance>,
    pub val: Vec<TimeSeriesInstance>,
    pub test: Vec<TimeSeriesInstance>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[TimeSeriesInstance] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

fn generate_split(config: &DatasetConfig, split: Split) -> Result<Vec<TimeSeriesInstance>> {
    let seed = config.split_seed(split);
    let n = config.split_size(split);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::rng_from(seed, "instance", i as u64);
            // alternating labels keep every split balanced to within one
            generate_instance(config, (i % 2) as u8, i, &mut rng)
        })
        .collect()
}

/// Generates all three splits. Pure in `(config, base_seed)`.
pub fn generate_dataset(config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    Ok(Dataset {
        config: config.clone(),
        train: generate_split(config, Split::Train)?,
        val: generate_split(config, Split::Val)?,
        test: generate_split(config, Split::Test)?,
    })
}

impl Dataset {
    /// Writes `config.json` and `{train,val,test}.csv` into `dir`.
    ///
    /// CSV header is `id,label,t_start,L,raw_mean,raw_std,x_0,…`; the mask
    /// is reconstructed from `t_start`/`L` on load. Floats carry
    /// 17 significant digits and parse back bit-exactly.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&self.config)?)?;
        for split in Split::ALL {
            write_split_csv(&dir.join(format!("{}.csv", split.name())), self.split(split))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config: DatasetConfig =
            serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
        config.validate()?;
        let mut splits = Vec::new();
        for split in Split::ALL {
            splits.push(read_split_csv(
                &dir.join(format!("{}.csv", split.name())),
                config.series_len,
            )?);
        }
        let mut it = splits.into_iter();
        Ok(Dataset {
            config,
            train: it.next().unwrap(),
            val: it.next().unwrap(),
            test: it.next().unwrap(),
        })
    }
}

fn write_split_csv(path: &Path, instances: &[TimeSeriesInstance]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = instances.first().map_or(0, |inst| inst.values.len());
    let mut header = vec![
        "id".to_string(),
        "label".to_string(),
        "t_start".to_string(),
        "L".to_string(),
        "raw_mean".to_string(),
        "raw_std".to_string(),
    ];
    header.extend((0..n).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for inst in instances {
        let mut rec = vec![
            inst.id.to_string(),
            inst.label.to_string(),
            inst.t_start.to_string(),
            inst.feature_len.to_string(),
            fmt17(inst.raw_mean),
            fmt17(inst.raw_std),
        ];
        rec.extend(inst.values.iter().map(|v| fmt17(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn read_split_csv(path: &Path, series_len: usize) -> Result<Vec<TimeSeriesInstance>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i).ok_or_else(|| Error::InvalidInput(format!("short row in {}", path.display())))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::InvalidInput(format!("bad float `{s}` in {}", path.display())))
        };
        let id: usize = field(0)?.parse().map_err(|_| Error::InvalidInput("bad id".into()))?;
        let label: u8 = field(1)?.parse().map_err(|_| Error::InvalidInput("bad label".into()))?;
        let t_start: usize =
            field(2)?.parse().map_err(|_| Error::InvalidInput("bad t_start".into()))?;
        let feature_len: usize =
            field(3)?.parse().map_err(|_| Error::InvalidInput("bad L".into()))?;
        let raw_mean = parse_f(field(4)?)?;
        let raw_std = parse_f(field(5)?)?;
        let mut values = Vec::with_capacity(series_len);
        for i in 6..6 + series_len {
            values.push(parse_f(field(i)?)?);
        }
        let mut mask = vec![false; series_len];
        mask[t_start..t_start + feature_len].fill(true);
        out.push(TimeSeriesInstance {
            id,
            label,
            values,
            mask,
            t_start,
            feature_len,
            raw_mean,
            raw_std,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(contrast: Contrast, feature: FeatureKind) -> DatasetConfig {
        DatasetConfig::benchmark(contrast, feature, 99)
    }

    #[test]
    fn level_feature_is_constant() {
        let f = generate_feature(&FeatureSpec::new(FeatureKind::Level, 2.0, 4)).unwrap();
        assert_eq!(f, vec![2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn pulse_peaks_exactly_at_center() {
        let f = generate_feature(&FeatureSpec::new(FeatureKind::Pulse, 2.0, 60)).unwrap();
        assert_eq!(f[30], 2.0);
        assert!(f.iter().all(|&v| v <= 2.0 && v > 0.0));
    }

    #[test]
    fn sine_matches_direct_evaluation() {
        let f = generate_feature(&FeatureSpec::new(FeatureKind::Sine, 1.0, 10)).unwrap();
        let want = [
            0.0, 0.58779, 0.95106, 0.95106, 0.58779, 0.0, -0.58779, -0.95106, -0.95106, -0.58779,
        ];
        for (got, w) in f.iter().zip(want) {
            assert!((got - w).abs() < 1e-5, "{got} vs {w}");
        }
    }

    #[test]
    fn trend_hits_linear_endpoints() {
        let f = generate_feature(&FeatureSpec::new(FeatureKind::Trend, 3.0, 4)).unwrap();
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn trend_of_one_point_is_rejected() {
        assert!(generate_feature(&FeatureSpec::new(FeatureKind::Trend, 3.0, 1)).is_err());
        assert!(generate_feature(&FeatureSpec::new(FeatureKind::Level, 3.0, 0)).is_err());
    }

    #[test]
    fn feature_generation_is_pure() {
        let spec = FeatureSpec::new(FeatureKind::Pulse, 2.0, 37);
        assert_eq!(generate_feature(&spec).unwrap(), generate_feature(&spec).unwrap());
    }

    #[test]
    fn mask_sums_to_window_length() {
        let config = cfg(Contrast::Length, FeatureKind::Sine);
        for label in [0u8, 1u8] {
            let mut rng = seeds::rng_from(1, "t", u64::from(label));
            let inst = generate_instance(&config, label, 0, &mut rng).unwrap();
            let want = if label == 0 { 30 } else { 60 };
            assert_eq!(inst.mask.iter().filter(|&&m| m).count(), want);
            assert_eq!(inst.feature_len, want);
            for (i, &m) in inst.mask.iter().enumerate() {
                assert_eq!(m, i >= inst.t_start && i < inst.t_start + inst.feature_len);
            }
        }
    }

    #[test]
    fn noiseless_level_instance_steps_by_amplitude() {
        let config = cfg(Contrast::Amplitude, FeatureKind::Level);
        let mut rng = seeds::rng_from(5, "t", 0);
        // class 0 has A = 1
        let inst = generate_instance_with_noise_scale(&config, 0, 0, &mut rng, 0.0).unwrap();
        let raw = inst.destandardized();
        for (i, v) in raw.iter().enumerate() {
            let want = if inst.mask[i] { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "t={i}: {v}");
        }
    }

    #[test]
    fn instances_are_standardized() {
        let config = cfg(Contrast::Amplitude, FeatureKind::Trend);
        let mut rng = seeds::rng_from(3, "t", 0);
        let inst = generate_instance(&config, 1, 0, &mut rng).unwrap();
        let n = inst.values.len() as f64;
        let mean = inst.values.iter().sum::<f64>() / n;
        let sd = (inst.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn destandardization_reconstructs_raw_series() {
        let config = cfg(Contrast::Length, FeatureKind::Pulse);
        // regenerate the same raw draw to compare against
        let mut rng = seeds::rng_from(11, "t", 4);
        let inst = generate_instance(&config, 1, 0, &mut rng).unwrap();
        let mut rng2 = seeds::rng_from(11, "t", 4);
        let n = config.series_len;
        let mut raw: Vec<f64> =
            (0..n).map(|_| rng2.sample::<f64, _>(StandardNormal)).collect();
        let t0 = rng2.gen_range(0..=n - 60);
        assert_eq!(t0, inst.t_start);
        let feature = generate_feature(config.spec_for(1)).unwrap();
        for (v, f) in raw[t0..t0 + 60].iter_mut().zip(&feature) {
            *v += f;
        }
        for (a, b) in inst.destandardized().iter().zip(&raw) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn splits_are_balanced() {
        let mut config = cfg(Contrast::Amplitude, FeatureKind::Sine);
        config.n_train = 20;
        config.n_val = 9;
        config.n_test = 10;
        let ds = generate_dataset(&config).unwrap();
        let count = |xs: &[TimeSeriesInstance], c: u8| xs.iter().filter(|i| i.label == c).count();
        assert_eq!(count(&ds.train, 0), 10);
        assert_eq!(count(&ds.train, 1), 10);
        assert_eq!(count(&ds.val, 0), 5);
        assert_eq!(count(&ds.val, 1), 4);
        assert_eq!(count(&ds.test, 0), 5);
        assert_eq!(count(&ds.test, 1), 5);
    }

    #[test]
    fn generation_is_deterministic() {
        let mut config = cfg(Contrast::Length, FeatureKind::Level);
        config.n_train = 12;
        config.n_val = 4;
        config.n_test = 4;
        let a = generate_dataset(&config).unwrap();
        let b = generate_dataset(&config).unwrap();
        assert_eq!(a, b);
        let mut other = config.clone();
        other.base_seed = 100;
        assert_ne!(generate_dataset(&other).unwrap(), a);
    }

    #[test]
    fn length_contrast_prevalences_are_point2_and_point4() {
        let config = cfg(Contrast::Length, FeatureKind::Sine);
        let n = config.series_len as f64;
        assert_eq!(config.class0.length as f64 / n, 0.2);
        assert_eq!(config.class1.length as f64 / n, 0.4);
    }

    #[test]
    fn t_start_is_uniform_over_valid_range() {
        // chi-square goodness of fit over 10_000 placements of an L=60 window
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let config = cfg(Contrast::Amplitude, FeatureKind::Level);
        let bins = config.series_len - 60 + 1;
        let mut counts = vec![0usize; bins];
        for i in 0..10_000u64 {
            let mut rng = seeds::rng_from(77, "uniformity", i);
            let inst = generate_instance(&config, 1, i as usize, &mut rng).unwrap();
            counts[inst.t_start] += 1;
        }
        let expected = 10_000.0 / bins as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let dist = ChiSquared::new((bins - 1) as f64).unwrap();
        let p = 1.0 - dist.cdf(stat);
        assert!(p > 0.01, "chi-square p-value {p} (stat {stat})");
    }

    #[test]
    fn dataset_round_trips_through_files() {
        let mut config = cfg(Contrast::Amplitude, FeatureKind::Pulse);
        config.n_train = 6;
        config.n_val = 2;
        config.n_test = 2;
        let ds = generate_dataset(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let loaded = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds, loaded);
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let mut config = cfg(Contrast::Length, FeatureKind::Trend);
        config.n_train = 4;
        config.n_val = 2;
        config.n_test = 2;
        let ds = generate_dataset(&config).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        ds.save(d1.path()).unwrap();
        generate_dataset(&config).unwrap().save(d2.path()).unwrap();
        for name in ["config.json", "train.csv", "val.csv", "test.csv"] {
            assert_eq!(
                fs::read(d1.path().join(name)).unwrap(),
                fs::read(d2.path().join(name)).unwrap(),
                "{name} differs"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn mask_and_window_agree(
                seed in 0u64..1000,
                contrast_idx in 0usize..2,
                feature_idx in 0usize..4,
                label in 0u8..2,
            ) {
                let config = DatasetConfig::benchmark(
                    Contrast::ALL[contrast_idx],
                    FeatureKind::ALL[feature_idx],
                    0,
                );
                let mut rng = seeds::rng_from(seed, "prop", 0);
                let inst = generate_instance(&config, label, 0, &mut rng).unwrap();
                prop_assert!(inst.t_start + inst.feature_len <= config.series_len);
                for (i, &m) in inst.mask.iter().enumerate() {
                    prop_assert_eq!(m, i >= inst.t_start && i < inst.t_start + inst.feature_len);
                }
                let n = inst.values.len() as f64;
                let mean = inst.values.iter().sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
            }
        }
    }
}
