//! Experiment configuration: defaults, plain-text key=value files, and the
//! resolved-config dump written next to every run's outputs.
//!
//! One flat file carries dataset settings, the architecture selector, loss
//! weights, optimizer settings, and the physics coefficients (whose keys match
//! the `PhysicsParams` field names). Command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mtlq::optimizer::TrainConfig;
use mtlq::physics::PhysicsParams;

use crate::arch::{Alphas, ArchitectureSelector};

/// Paper-scale defaults: 25000 observations, 4000 full-batch epochs.
pub const DEFAULT_M: usize = 25_000;
pub const DEFAULT_EPOCHS: usize = 4000;

/// The `--desk` preset: a reduced tier sized so the full architecture
/// comparison finishes on a small machine while still exhibiting the
/// paper-scale orderings.
pub const DESK_M: usize = 5_000;
pub const DESK_EPOCHS: usize = 6000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub physics: PhysicsParams,
    pub m: usize,
    pub seed: u64,
    /// Repeat seeds for multi-seed commands; every network in a comparison
    /// shares each seed, so all see identical data, splits, and init streams.
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub noise_sigma: f64,
    pub network: ArchitectureSelector,
    pub alphas: Option<Alphas>,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            physics: PhysicsParams::default(),
            m: DEFAULT_M,
            seed: 1,
            seeds: vec![1, 2, 3],
            train_fraction: 0.8,
            noise_sigma: 0.0,
            network: ArchitectureSelector::C,
            alphas: None,
            train: TrainConfig::default(),
            out_dir: PathBuf::from("out"),
            svg: false,
        }
    }
}

impl ExperimentConfig {
    /// Apply the desk preset to dataset size and epoch count.
    pub fn apply_desk(&mut self) {
        self.m = DESK_M;
        self.train.epochs = DESK_EPOCHS;
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.train.validate()?;
        if self.m == 0 {
            bail!("m must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie strictly between 0 and 1");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed required");
        }
        if self.noise_sigma < 0.0 {
            bail!("noise_sigma must be nonnegative");
        }
        Ok(())
    }

    /// Full key=value rendering, parseable by [`ExperimentConfig::from_file`].
    pub fn resolved_text(&self) -> String {
        let seeds = self
            .seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let alphas = match self.alphas {
            Some([a1, a2, a3]) => format!("{a1},{a2},{a3}"),
            None => "default".to_string(),
        };
        format!(
            "# dataset\n\
             m = {}\n\
             seed = {}\n\
             seeds = {seeds}\n\
             train_fraction = {}\n\
             noise_sigma = {}\n\
             # architecture\n\
             network = {}\n\
             alphas = {alphas}\n\
             # training\n\
             learning_rate = {}\n\
             epochs = {}\n\
             beta1 = {}\n\
             beta2 = {}\n\
             epsilon = {}\n\
             dev_eval_every = {}\n\
             # physics\n\
             {}",
            self.m,
            self.seed,
            self.train_fraction,
            self.noise_sigma,
            self.network,
            self.train.learning_rate,
            self.train.epochs,
            self.train.beta1,
            self.train.beta2,
            self.train.epsilon,
            self.train.dev_eval_every,
            self.physics.to_config_string(),
        )
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_str_content(&text)
    }

    pub fn from_str_content(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut physics_lines = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "m" => cfg.m = value.parse()?,
                "seed" => cfg.seed = value.parse()?,
                "seeds" => {
                    cfg.seeds = value
                        .split(',')
                        .map(|v| v.trim().parse::<u64>())
                        .collect::<std::result::Result<_, _>>()?;
                }
                "train_fraction" => cfg.train_fraction = value.parse()?,
                "noise_sigma" => cfg.noise_sigma = value.parse()?,
                "network" => cfg.network = value.parse()?,
                "alphas" => {
                    cfg.alphas = if value == "default" {
                        None
                    } else {
                        Some(parse_alphas(value)?)
                    };
                }
                "learning_rate" => cfg.train.learning_rate = value.parse()?,
                "epochs" => cfg.train.epochs = value.parse()?,
                "beta1" => cfg.train.beta1 = value.parse()?,
                "beta2" => cfg.train.beta2 = value.parse()?,
                "epsilon" => cfg.train.epsilon = value.parse()?,
                "dev_eval_every" => cfg.train.dev_eval_every = value.parse()?,
                // anything else must be a physics key; collect and parse once
                _ => {
                    physics_lines.push_str(line);
                    physics_lines.push('\n');
                }
            }
        }
        if !physics_lines.is_empty() {
            cfg.physics = PhysicsParams::from_config_str(&physics_lines)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse `a1,a2,a3`.
pub fn parse_alphas(s: &str) -> Result<Alphas> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("expected three comma-separated loss weights, got '{s}'");
    }
    Ok([parts[0].parse()?, parts[1].parse()?, parts[2].parse()?])
}

/// Parse a sweep grid `a1,a2,a3;a1,a2,a3;...`.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<Alphas>> {
    s.split(';')
        .map(str::trim)
        .filter(|row| !row.is_empty())
        .map(parse_alphas)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.m = 1234;
        cfg.seeds = vec![7, 8];
        cfg.alphas = Some([0.5, 2.0, 3.0]);
        cfg.network = ArchitectureSelector::A(30);
        cfg.train.epochs = 99;
        cfg.physics.tau0_ref = 2.5e-5;
        let text = cfg.resolved_text();
        let back = ExperimentConfig::from_str_content(&text).unwrap();
        // out_dir and svg are command-line-only concerns
        assert_eq!(back.m, cfg.m);
        assert_eq!(back.seeds, cfg.seeds);
        assert_eq!(back.alphas, cfg.alphas);
        assert_eq!(back.network, cfg.network);
        assert_eq!(back.train, cfg.train);
        assert_eq!(back.physics, cfg.physics);
    }

    #[test]
    fn unknown_keys_are_rejected_via_physics_parser() {
        assert!(ExperimentConfig::from_str_content("bogus_key = 3\n").is_err());
    }

    #[test]
    fn desk_preset_shrinks_the_run() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_desk();
        assert_eq!(cfg.m, DESK_M);
        assert_eq!(cfg.train.epochs, DESK_EPOCHS);
    }

    #[test]
    fn alpha_grid_parsing() {
        let grid = parse_alpha_grid("0.3,5,5; 0.3,5,15").unwrap();
        assert_eq!(grid, vec![[0.3, 5.0, 5.0], [0.3, 5.0, 15.0]]);
        assert!(parse_alpha_grid("1,2").is_err());
    }
}
