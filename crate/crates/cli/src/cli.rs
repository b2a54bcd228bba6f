//! Argument definitions and their translation into [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use wassdrl_core::bounds::{HypothesisBox, LightTailParams};
use wassdrl_core::neural::SpgdOptions;
use wassdrl_core::{LossSpec, SupportSet, Task};

use crate::commands::{
    cmd_crossval, cmd_interval, cmd_radius, cmd_train, cmd_worstcase, IntervalOptions, RadiusOptions, RunConfig, WorstCaseMode,
    WorstCaseOptions,
};
use crate::dataset::{load_support, read_json};
use crate::error::{CliError, Result};
use crate::model::NetConfig;
use crate::parse::{
    default_kappa_grid, default_rho_grid, parse_activation, parse_grid, parse_kappa, parse_kernel, parse_loss, parse_norm, parse_rho,
};

#[derive(Debug, Parser)]
#[command(name = "wassdrl", version, about = "Distributionally robust learning over Wasserstein balls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a linear, kernel or network model.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Select ρ, κ and the kernel by k-fold cross validation.
    Crossval {
        #[command(flatten)]
        common: Common,
        /// Comma separated ρ values [default: 1e-4,5e-4,…,0.1,0.5].
        #[arg(long)]
        rho_grid: Option<String>,
        /// Comma separated κ values, `inf` allowed [default: 0.1,0.25,0.5,0.75,inf].
        #[arg(long)]
        kappa_grid: Option<String>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Confidence interval for the error or risk of a linear model.
    Interval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Significance level η of the 1 - η interval.
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        /// JSON file with light-tail constants {a, A, c1, c2, c3, c4}.
        #[arg(long)]
        light_tail: Option<PathBuf>,
    },
    /// Worst-case distribution of a linear model and a stressed dataset.
    Worstcase {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Offset γ of the approximating sequence.
        #[arg(long, default_value_t = 0.01)]
        gamma: f64,
    },
    /// Generalization radii for given N, n and η.
    Radius {
        #[command(flatten)]
        common: Common,
        /// Sample size N (taken from --data when absent).
        #[arg(long)]
        n_samples: Option<usize>,
        /// Input dimension n (taken from --data when absent).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        #[arg(long)]
        light_tail: Option<PathBuf>,
        /// Lower bound Ω̲ on ‖w‖_* over the hypothesis box.
        #[arg(long, default_value_t = 1.0)]
        omega_lower: f64,
        /// Upper bound Ω̄ on ‖w‖_* over the hypothesis box.
        #[arg(long, default_value_t = 1.0)]
        omega_upper: f64,
        #[arg(long, default_value_t = 1.0)]
        m_n: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Reg,
    Cls,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Auto,
    Exact,
    Sequence,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TaskArg::Cls)]
    pub task: TaskArg,
    /// hinge, smooth_hinge, logloss, absolute, huber:δ, eps_insensitive:ε, pinball:τ
    /// [default: hinge for cls, absolute for reg].
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    /// Label cost; `inf` drops label flips (cls) or selects the joint metric (reg).
    #[arg(long, default_value = "inf")]
    pub kappa: String,
    #[arg(long, default_value = "inf")]
    pub p: String,
    /// linear, gaussian:γ, laplacian:γ, polynomial:γ:d[:R]; repeat for a crossval grid.
    #[arg(long)]
    pub kernel: Vec<String>,
    /// JSON polytope {"C1": [[…]], "c2": […], "d": […]}.
    #[arg(long)]
    pub support: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    /// Hidden layer widths, e.g. `16,8`; trains a network instead of a linear model.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long, default_value = "tanh")]
    pub activation: String,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
}

impl NetArgs {
    fn resolve(&self, seed: u64) -> Result<Option<NetConfig>> {
        let Some(hidden) = &self.hidden else { return Ok(None) };
        let hidden = parse_grid(hidden, |s| s.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad layer width `{s}`"))))?;
        Ok(Some(NetConfig {
            hidden,
            activation: parse_activation(&self.activation)?,
            options: SpgdOptions { epochs: self.epochs, eta0: self.step, batch_size: self.batch_size, seed, ..SpgdOptions::default() },
        }))
    }
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let task = match self.task {
            TaskArg::Reg => Task::Regression,
            TaskArg::Cls => Task::Classification,
        };
        let loss = match &self.loss {
            Some(s) => parse_loss(s)?,
            None => match task {
                Task::Classification => LossSpec::Hinge,
                Task::Regression => LossSpec::Absolute,
            },
        };
        let support = match &self.support {
            Some(path) => load_support(path, task)?,
            None => SupportSet::Unbounded,
        };
        Ok(RunConfig {
            data: self.data.clone(),
            task,
            loss,
            p: parse_norm(&self.p)?,
            kappa: parse_kappa(&self.kappa)?,
            rho: self.rho.as_deref().map(parse_rho).transpose()?,
            rho_grid: default_rho_grid(),
            kappa_grid: default_kappa_grid(),
            kernels: self.kernel.iter().map(|k| parse_kernel(k)).collect::<Result<_>>()?,
            support,
            net: None,
            seed: self.seed,
            folds: 5,
            out: self.out.clone(),
        })
    }
}

fn light_tail(path: &Option<PathBuf>) -> Result<LightTailParams> {
    let params = match path {
        Some(p) => read_json(p)?,
        None => LightTailParams::default(),
    };
    params.validate()?;
    Ok(params)
}

/// Runs a parsed command and returns its main JSON document.
pub fn run(cli: Cli) -> Result<Value> {
    match cli.command {
        Command::Train { common, net } => {
            let mut cfg = common.config()?;
            cfg.net = net.resolve(cfg.seed)?;
            cmd_train(&cfg)
        }
        Command::Crossval { common, rho_grid, kappa_grid, folds, net } => {
            let mut cfg = common.config()?;
            if let Some(g) = rho_grid {
                cfg.rho_grid = parse_grid(&g, parse_rho)?;
            } else if let Some(r) = cfg.rho {
                cfg.rho_grid = vec![r];
            }
            if let Some(g) = kappa_grid {
                cfg.kappa_grid = parse_grid(&g, parse_kappa)?;
            }
            cfg.folds = folds;
            cfg.net = net.resolve(cfg.seed)?;
            cmd_crossval(&cfg)
        }
        Command::Interval { common, model, eta, light_tail: lt } => {
            let cfg = common.config()?;
            cmd_interval(&cfg, &IntervalOptions { model, eta, params: light_tail(&lt)? })
        }
        Command::Worstcase { common, model, mode, gamma } => {
            let cfg = common.config()?;
            let mode = match mode {
                ModeArg::Auto => WorstCaseMode::Auto,
                ModeArg::Exact => WorstCaseMode::Exact,
                ModeArg::Sequence => WorstCaseMode::Sequence,
            };
            cmd_worstcase(&cfg, &WorstCaseOptions { model, mode, gamma })
        }
        Command::Radius { common, n_samples, dim, eta, light_tail: lt, omega_lower, omega_upper, m_n } => {
            let cfg = common.config()?;
            let bx = HypothesisBox::new(omega_lower, omega_upper, m_n)?;
            cmd_radius(&cfg, &RadiusOptions { n_samples, dim, eta, params: light_tail(&lt)?, bx })
        }
    }
}
