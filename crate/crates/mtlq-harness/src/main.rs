use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mtlq::dataset;
use mtlq_harness::config::{parse_alpha_grid, parse_alphas, ExperimentConfig};
use mtlq_harness::runner::{self, DEFAULT_SWEEP_GRID};
use mtlq_harness::ArchitectureSelector;

#[derive(Parser)]
#[command(
    name = "mtlq",
    about = "Multi-task luminescence-quenching regression experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Key=value config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of synthetic observations
    #[arg(long)]
    m: Option<usize>,
    /// Run seed (generation, split, and weight init)
    #[arg(long)]
    seed: Option<u64>,
    /// Training epochs (full-batch updates)
    #[arg(long)]
    epochs: Option<usize>,
    /// Loss weights alpha1,alpha2,alpha3 (joint, o2, t branches)
    #[arg(long)]
    alphas: Option<String>,
    /// Gaussian noise sigma added to every feature (0 = off)
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Reduced preset sized for small machines
    #[arg(long)]
    desk: bool,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also render SVG boxplots and KDE curves
    #[arg(long)]
    svg: bool,
}

impl CommonOpts {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if self.desk {
            cfg.apply_desk();
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.seeds = vec![seed];
        }
        if let Some(epochs) = self.epochs {
            cfg.train.epochs = epochs;
        }
        if let Some(alphas) = &self.alphas {
            cfg.alphas = Some(parse_alphas(alphas)?);
        }
        if let Some(sigma) = self.noise_sigma {
            cfg.noise_sigma = sigma;
        }
        cfg.out_dir = self.out.clone();
        cfg.svg = self.svg;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as CSV
    Generate {
        #[command(flatten)]
        common: CommonOpts,
        /// CSV path (default <out>/dataset.csv)
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Train one network and write reports, trace, and checkpoint
    Train {
        #[command(flatten)]
        common: CommonOpts,
        /// a10|a30|a50|a80|b|c|spec:<file> (default: the config file's network)
        #[arg(long)]
        network: Option<String>,
    },
    /// Train several networks over shared seeds and tabulate dev/train MAE
    Compare {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated selectors
        #[arg(long, default_value = "a30,a50,a80,b,c")]
        networks: String,
        /// Comma-separated seeds shared by every network
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Sweep loss-weight triples on the three-branch network
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Grid "a1,a2,a3;a1,a2,a3;..." (default: the six standard rows)
        #[arg(long)]
        grid: Option<String>,
    },
    /// Recompute reports and companion CSVs from stored predictions
    Report {
        /// A run directory (e.g. out/c_seed1)
        #[arg(long)]
        run: PathBuf,
        /// Also render SVG plots
        #[arg(long)]
        svg: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { common, file } => {
            let cfg = common.resolve()?;
            let ds = dataset::generate(&cfg.physics, cfg.m, cfg.seed, cfg.noise_sigma)?;
            let path = file.unwrap_or_else(|| cfg.out_dir.join("dataset.csv"));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            let mut f =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            ds.write_csv(&mut f)?;
            println!(
                "wrote {} observations (seed {}) to {}",
                cfg.m,
                cfg.seed,
                path.display()
            );
        }
        Command::Train { common, network } => {
            let cfg = common.resolve()?;
            let selector = match network {
                Some(n) => n.parse()?,
                None => cfg.network.clone(),
            };
            fs::create_dir_all(&cfg.out_dir)?;
            fs::write(cfg.out_dir.join("config_resolved.txt"), cfg.resolved_text())?;
            let dir = cfg
                .out_dir
                .join(format!("{}_seed{}", selector.label(), cfg.seed));
            let outcome = runner::run_single(&cfg, &selector, cfg.seed, &dir)?;
            println!(
                "{} seed {}: train MAE O2 {:.3} % air, T {:.3} C | dev MAE O2 {:.3} % air, T {:.3} C",
                outcome.network,
                outcome.seed,
                outcome.train_report.o2.mae,
                outcome.train_report.temp.mae,
                outcome.dev_report.o2.mae,
                outcome.dev_report.temp.mae,
            );
            println!("artifacts in {}", outcome.dir.display());
        }
        Command::Compare {
            common,
            networks,
            seeds,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(seeds) = seeds {
                cfg.seeds = seeds
                    .split(',')
                    .map(|s| s.trim().parse::<u64>())
                    .collect::<std::result::Result<_, _>>()?;
            }
            let selectors = networks
                .split(',')
                .map(|s| s.trim().parse::<ArchitectureSelector>())
                .collect::<Result<Vec<_>>>()?;
            let outcomes = runner::compare(&cfg, &selectors)?;
            println!("network  seed  dev MAE_O2 (% air)  dev MAE_T (C)");
            for o in &outcomes {
                println!(
                    "{:7}  {:4}  {:18.3}  {:13.3}",
                    o.network, o.seed, o.dev_report.o2.mae, o.dev_report.temp.mae
                );
            }
            println!(
                "tables: {} and {}",
                cfg.out_dir.join("compare_mae.csv").display(),
                cfg.out_dir.join("compare_table.csv").display()
            );
        }
        Command::Sweep { common, grid } => {
            let cfg = common.resolve()?;
            let grid = match grid {
                Some(g) => parse_alpha_grid(&g)?,
                None => DEFAULT_SWEEP_GRID.to_vec(),
            };
            let summary = runner::weight_sweep(&cfg, &grid)?;
            println!("alpha1  alpha2  alpha3  MAE_O2 (% air)  MAE_T (C)");
            for r in &summary.rows {
                println!(
                    "{:6}  {:6}  {:6}  {:14.3}  {:9.3}",
                    r.alpha1, r.alpha2, r.alpha3, r.mae_o2_pct_air, r.mae_t_c
                );
            }
            if let Some(note) = &summary.qualitative_note {
                println!("note: {note}");
            }
            println!("table: {}", cfg.out_dir.join("sweep.csv").display());
        }
        Command::Report { run, svg } => {
            let reports = runner::recompute_reports(&run, svg)?;
            for r in &reports {
                println!(
                    "{} ({}): MAE O2 {:.3} % air, MAE T {:.3} C over {} observations",
                    r.network,
                    r.dataset_tag,
                    r.o2.mae,
                    r.temp.mae,
                    r.o2.ae.len()
                );
            }
        }
    }
    Ok(())
}
