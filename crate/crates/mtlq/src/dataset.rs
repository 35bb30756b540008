//! Synthetic observation sets: generation, splitting, target normalization,
//! and CSV persistence.
//!
//! One run seed feeds independent ChaCha20 streams for generation and for the
//! split shuffle, so datasets are bit-reproducible and splits are independent
//! of generation order.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::physics::{self, PhysicsParams, NUM_FREQUENCIES, TEMP_LEVELS};

/// One synthetic measurement: 16 phase-shift ratios plus the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// The r-ratio features, one per modulation frequency.
    pub features: Vec<f64>,
    /// Oxygen concentration, % air (or its [0,1]-normalized value).
    pub o2: f64,
    /// Temperature, °C (or its [0,1]-normalized value).
    pub temp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Dev,
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitTag::Train => write!(f, "train"),
            SplitTag::Dev => write!(f, "dev"),
        }
    }
}

/// Affine map taking each target to [0, 1]. The bounds are the known domain
/// bounds, not per-dataset extrema, so the inverse map is dataset-independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaling {
    pub o2_min: f64,
    pub o2_max: f64,
    pub temp_min: f64,
    pub temp_max: f64,
}

impl Default for TargetScaling {
    fn default() -> Self {
        TargetScaling {
            o2_min: physics::O2_MIN,
            o2_max: physics::O2_MAX,
            temp_min: physics::TEMP_MIN,
            temp_max: physics::TEMP_MAX,
        }
    }
}

impl TargetScaling {
    pub fn normalize_o2(&self, o2: f64) -> f64 {
        (o2 - self.o2_min) / (self.o2_max - self.o2_min)
    }

    pub fn denormalize_o2(&self, y: f64) -> f64 {
        self.o2_min + y * (self.o2_max - self.o2_min)
    }

    pub fn normalize_temp(&self, temp: f64) -> f64 {
        (temp - self.temp_min) / (self.temp_max - self.temp_min)
    }

    pub fn denormalize_temp(&self, y: f64) -> f64 {
        self.temp_min + y * (self.temp_max - self.temp_min)
    }

    /// Target spans in physical units, used to convert normalized absolute
    /// errors back to % air and °C.
    pub fn o2_span(&self) -> f64 {
        self.o2_max - self.o2_min
    }

    pub fn temp_span(&self) -> f64 {
        self.temp_max - self.temp_min
    }
}

/// An ordered set of observations plus bookkeeping about how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub split_tag: Option<SplitTag>,
    /// Present once targets have been scaled to [0, 1].
    pub normalization: Option<TargetScaling>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Feature matrix, one row per observation. The width comes from the
    /// first observation (16 for generated data).
    pub fn feature_matrix(&self) -> Array2<f64> {
        let n = self.len();
        let width = self.observations.first().map_or(0, |o| o.features.len());
        let mut m = Array2::zeros((n, width));
        for (i, obs) in self.observations.iter().enumerate() {
            for (j, &v) in obs.features.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// Target matrix in stored units: column 0 is oxygen, column 1 temperature.
    pub fn target_matrix(&self) -> Array2<f64> {
        let n = self.len();
        let mut m = Array2::zeros((n, 2));
        for (i, obs) in self.observations.iter().enumerate() {
            m[[i, 0]] = obs.o2;
            m[[i, 1]] = obs.temp;
        }
        m
    }

    /// Targets of one column in stored units.
    pub fn target_column(&self, col: usize) -> Array1<f64> {
        self.observations
            .iter()
            .map(|o| if col == 0 { o.o2 } else { o.temp })
            .collect()
    }

    /// Return a copy with both targets mapped to [0, 1] and the scaling
    /// recorded so metrics can invert the map.
    pub fn normalize_targets(&self) -> Result<Dataset> {
        if self.normalization.is_some() {
            return Err(Error::InvalidSpec(
                "dataset targets are already normalized".into(),
            ));
        }
        let scaling = TargetScaling::default();
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                features: o.features.clone(),
                o2: scaling.normalize_o2(o.o2),
                temp: scaling.normalize_temp(o.temp),
            })
            .collect();
        Ok(Dataset {
            observations,
            split_tag: self.split_tag,
            normalization: Some(scaling),
        })
    }

    /// Write as CSV with header `r1,...,r16,o2_pct_air,temp_c`, 17 significant
    /// digits per value so parsing recovers each double exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=NUM_FREQUENCIES)
            .map(|i| format!("r{i}"))
            .chain(["o2_pct_air".to_string(), "temp_c".to_string()])
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for obs in &self.observations {
            let mut fields: Vec<String> =
                obs.features.iter().map(|v| format!("{v:.16e}")).collect();
            fields.push(format!("{:.16e}", obs.o2));
            fields.push(format!("{:.16e}", obs.temp));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Parse CSV written by [`write_csv`](Dataset::write_csv).
    pub fn read_csv<R: Read>(r: R) -> Result<Dataset> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset CSV".into()))??;
        let expected = (1..=NUM_FREQUENCIES)
            .map(|i| format!("r{i}"))
            .chain(["o2_pct_air".to_string(), "temp_c".to_string()])
            .collect::<Vec<_>>()
            .join(",");
        if header.trim() != expected {
            return Err(Error::Parse(format!(
                "unexpected dataset CSV header: {header}"
            )));
        }
        let mut observations = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != NUM_FREQUENCIES + 2 {
                return Err(Error::Parse(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 2,
                    NUM_FREQUENCIES + 2,
                    values.len()
                )));
            }
            observations.push(Observation {
                features: values[..NUM_FREQUENCIES].to_vec(),
                o2: values[NUM_FREQUENCIES],
                temp: values[NUM_FREQUENCIES + 1],
            });
        }
        Ok(Dataset {
            observations,
            split_tag: None,
            normalization: None,
        })
    }
}

/// Generate `m` observations: oxygen uniform on [0, 100] % air, temperature
/// uniform over the five discrete levels, features from the phase model.
/// `noise_sigma > 0` adds independent Gaussian noise to every feature.
pub fn generate(params: &PhysicsParams, m: usize, seed: u64, noise_sigma: f64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidSpec(
            "dataset size must be at least 1".into(),
        ));
    }
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // all target pairs are drawn before any noise, so the sampled (o2, temp)
    // sequence depends only on (m, seed), not on the noise setting
    let targets: Vec<(f64, f64)> = (0..m)
        .map(|_| {
            let o2 = rng.gen_range(0.0..=100.0);
            let temp = TEMP_LEVELS[rng.gen_range(0..TEMP_LEVELS.len())];
            (o2, temp)
        })
        .collect();
    let mut observations = Vec::with_capacity(m);
    for (o2, temp) in targets {
        let mut features = physics::feature_vector(params, temp, o2)?;
        if noise_sigma > 0.0 {
            for r in features.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *r += noise_sigma * z;
            }
        }
        observations.push(Observation { features, o2, temp });
    }
    Ok(Dataset {
        observations,
        split_tag: None,
        normalization: None,
    })
}

/// Randomly partition into train/dev. The permutation comes from its own
/// seeded generator; the first `floor(train_fraction * m)` shuffled indices
/// become the training set.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let m = ds.len();
    let n_train = (train_fraction * m as f64).floor() as usize;
    if n_train == 0 || n_train == m {
        return Err(Error::InvalidSpec(format!(
            "split of {m} observations at fraction {train_fraction} leaves an empty partition"
        )));
    }
    let mut indices: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let pick = |idx: &[usize], tag: SplitTag| Dataset {
        observations: idx.iter().map(|&i| ds.observations[i].clone()).collect(),
        split_tag: Some(tag),
        normalization: ds.normalization,
    };
    Ok((
        pick(&indices[..n_train], SplitTag::Train),
        pick(&indices[n_train..], SplitTag::Dev),
    ))
}
