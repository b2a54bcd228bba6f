//! The five subcommands. Each writes its outputs into `out` and returns the
//! main JSON document it wrote.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use wassdrl_core::bounds::{
    error_interval, improved_sample_threshold, radius_basic, radius_improved_formula, risk_interval, HypothesisBox, LightTailParams,
};
use wassdrl_core::classification::ClassificationProblem;
use wassdrl_core::extremal::{
    worstcase_classification_exact, worstcase_classification_sequence, worstcase_regression_exact, worstcase_regression_sequence,
    WorstCaseDistribution,
};
use wassdrl_core::kernel::KernelSpec;
use wassdrl_core::regression::RegressionProblem;
use wassdrl_core::{Dataset, Error as CoreError, LossSpec, NormP, SupportSet, Task, TransportCost};

use crate::dataset::{load_dataset, write_csv, write_json, write_rows};
use crate::error::{CliError, Result};
use crate::model::{fit, FitConfig, ModelFile, NetConfig};
use crate::parse::format_kappa;

/// Resolved options of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub task: Task,
    pub loss: LossSpec,
    pub p: NormP,
    pub kappa: f64,
    pub rho: Option<f64>,
    pub rho_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    /// Kernel candidates; a `true` flag asks for the polynomial radius to be
    /// derived from the data.
    pub kernels: Vec<(KernelSpec, bool)>,
    pub support: SupportSet,
    pub net: Option<NetConfig>,
    pub seed: u64,
    pub folds: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho_grid.is_empty() || self.kappa_grid.is_empty() {
            return Err(CliError::Usage("grids must be non-empty".into()));
        }
        if self.rho.is_some_and(|r| !(r >= 0.0 && r.is_finite())) || self.rho_grid.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(CliError::Usage("rho must be finite and nonnegative".into()));
        }
        if self.folds < 2 {
            return Err(CliError::Usage("cross validation needs at least 2 folds".into()));
        }
        Ok(())
    }

    fn dataset(&self) -> Result<Dataset> {
        let path = self.data.as_ref().ok_or_else(|| CliError::Usage("--data is required for this command".into()))?;
        load_dataset(path, self.task)
    }

    fn resolve_kernel(&self, (spec, derive): (KernelSpec, bool), data: &Dataset) -> KernelSpec {
        match spec {
            KernelSpec::Polynomial { gamma, degree, .. } if derive => KernelSpec::polynomial_for(data, gamma, degree),
            s => s,
        }
    }

    fn fit_config(&self, rho: f64, kappa: f64, kernel: Option<KernelSpec>) -> FitConfig {
        FitConfig {
            task: self.task,
            loss: self.loss.clone(),
            p: self.p,
            kappa,
            rho,
            kernel,
            support: self.support.clone(),
            net: self.net.clone(),
        }
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|source| CliError::Io { path: self.out.clone(), source })
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn kappa_json(k: f64) -> Value {
    if k.is_finite() {
        json!(k)
    } else {
        Value::Null
    }
}

fn finite_or_null(v: Option<f64>) -> Value {
    v.filter(|x| x.is_finite()).map_or(Value::Null, |x| json!(x))
}

/// Trains one model; writes `model.json`, `report.json` and for networks
/// `trace.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<Value> {
    cfg.validate()?;
    let data = cfg.dataset()?;
    let kernel = match cfg.kernels.as_slice() {
        [] => None,
        [k] => Some(cfg.resolve_kernel(*k, &data)),
        _ => return Err(CliError::Usage("train takes at most one --kernel".into())),
    };
    let rho = cfg.rho.unwrap_or(0.0);
    let start = Instant::now();
    let fitted = fit(&cfg.fit_config(rho, cfg.kappa, kernel), &data)?;
    let wall_time = start.elapsed().as_secs_f64();
    cfg.prepare_out()?;
    write_json(&cfg.out_file("model.json"), &fitted.model)?;
    if !fitted.trace.is_empty() {
        let rows: Vec<Vec<String>> =
            fitted.trace.iter().map(|r| vec![r.epoch.to_string(), r.objective.to_string(), r.reg_term.to_string()]).collect();
        write_csv(&cfg.out_file("trace.csv"), &["epoch", "objective", "reg_term"], &rows)?;
    }
    let report = json!({
        "command": "train",
        "task": cfg.task,
        "loss": cfg.loss.name(),
        "p": cfg.p,
        "rho": rho,
        "kappa": kappa_json(cfg.kappa),
        "kernel": kernel.map(|k| k.name()),
        "objective": fitted.objective,
        "worst_case": finite_or_null(fitted.worst_case),
        "robust_bound": finite_or_null(fitted.robust_bound),
        "train_score": fitted.model.score_on(&data)?,
        "n_samples": data.len(),
        "wall_time": wall_time,
    });
    write_json(&cfg.out_file("report.json"), &report)?;
    Ok(report)
}

/// Seeded shuffle followed by round-robin assignment; classification
/// deals each class out separately so folds stay stratified.
pub fn assign_folds(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if data.len() < folds {
        return Err(CliError::InsufficientData(format!("{} samples cannot fill {folds} folds", data.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let mut fold = vec![0; data.len()];
    let mut next = 0;
    let classes: Vec<Option<f64>> = match data.task() {
        Task::Classification => vec![Some(-1.0), Some(1.0)],
        Task::Regression => vec![None],
    };
    for class in classes {
        for &i in order.iter().filter(|&&i| class.is_none_or(|c| data.y(i) == c)) {
            fold[i] = next % folds;
            next += 1;
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, Serialize)]
struct GridPoint {
    rho: f64,
    #[serde(serialize_with = "ser_kappa")]
    kappa: f64,
    kernel: Option<KernelSpec>,
    #[serde(skip)]
    kernel_index: usize,
}

fn ser_kappa<S: serde::Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_finite() {
        s.serialize_f64(*k)
    } else {
        s.serialize_none()
    }
}

/// Grid search with k-fold cross validation. Writes the per-fold table
/// `cv_scores.csv`, the per-point means `cv_summary.csv` and `best.json`.
/// Ties go to the smallest ρ, then the smallest κ, then the first kernel.
pub fn cmd_crossval(cfg: &RunConfig) -> Result<Value> {
    cfg.validate()?;
    let data = cfg.dataset()?;
    let folds = assign_folds(&data, cfg.folds, cfg.seed)?;
    let kernels: Vec<Option<KernelSpec>> = if cfg.kernels.is_empty() {
        vec![None]
    } else {
        cfg.kernels.iter().map(|k| Some(cfg.resolve_kernel(*k, &data))).collect()
    };
    let kappas = match cfg.task {
        Task::Classification => cfg.kappa_grid.clone(),
        Task::Regression => vec![cfg.kappa],
    };
    let mut points = Vec::new();
    for (kernel_index, kernel) in kernels.iter().enumerate() {
        for &rho in &cfg.rho_grid {
            for &kappa in &kappas {
                points.push(GridPoint { rho, kappa, kernel: *kernel, kernel_index });
            }
        }
    }
    points.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(a.kappa.total_cmp(&b.kappa)).then(a.kernel_index.cmp(&b.kernel_index)));

    let splits: Vec<(Dataset, Dataset)> = (0..cfg.folds)
        .map(|f| {
            let train: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
            if train.is_empty() || test.is_empty() {
                return Err(CliError::InsufficientData(format!("fold {f} is empty")));
            }
            Ok((data.subset(&train)?, data.subset(&test)?))
        })
        .collect::<Result<_>>()?;

    let start = Instant::now();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (k, pt) in points.iter().enumerate() {
        let mut total = 0.0;
        for (f, (train, test)) in splits.iter().enumerate() {
            let fitted = fit(&cfg.fit_config(pt.rho, pt.kappa, pt.kernel), train)?;
            let score = fitted.model.score_on(test)?;
            total += score;
            rows.push(vec![pt.rho.to_string(), format_kappa(pt.kappa), kernel_label(pt.kernel), f.to_string(), score.to_string()]);
        }
        let mean = total / cfg.folds as f64;
        summary.push(vec![pt.rho.to_string(), format_kappa(pt.kappa), kernel_label(pt.kernel), mean.to_string()]);
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((k, mean));
        }
    }
    let (bi, mean_score) = best.expect("grid is non-empty");
    cfg.prepare_out()?;
    write_csv(&cfg.out_file("cv_scores.csv"), &["rho", "kappa", "kernel", "fold", "score"], &rows)?;
    write_csv(&cfg.out_file("cv_summary.csv"), &["rho", "kappa", "kernel", "mean_score"], &summary)?;
    let report = json!({
        "command": "crossval",
        "task": cfg.task,
        "loss": cfg.loss.name(),
        "p": cfg.p,
        "folds": cfg.folds,
        "seed": cfg.seed,
        "score": match cfg.task { Task::Classification => "ccr", Task::Regression => "neg_mae" },
        "best": points[bi],
        "mean_score": mean_score,
        "grid_size": points.len(),
        "wall_time": start.elapsed().as_secs_f64(),
    });
    write_json(&cfg.out_file("best.json"), &report)?;
    Ok(report)
}

fn kernel_label(k: Option<KernelSpec>) -> String {
    match k {
        None => "none".into(),
        Some(KernelSpec::Linear) => "linear".into(),
        Some(KernelSpec::Gaussian { gamma }) => format!("gaussian:{gamma}"),
        Some(KernelSpec::Laplacian { gamma }) => format!("laplacian:{gamma}"),
        Some(KernelSpec::Polynomial { gamma, degree, radius }) => format!("polynomial:{gamma}:{degree}:{radius}"),
    }
}

fn load_linear(path: &Path, data: &Dataset) -> Result<(ModelFile, wassdrl_core::LinearHypothesis)> {
    let model: ModelFile = crate::dataset::read_json(path)?;
    if model.task != data.task() {
        return Err(CliError::Usage(format!("model was trained for {:?}, data is {:?}", model.task, data.task())));
    }
    let w = model
        .linear()
        .ok_or_else(|| CoreError::Unsupported("this command needs a linear model".into()))?;
    Ok((model, w))
}

/// Interval options besides the run config.
#[derive(Debug, Clone)]
pub struct IntervalOptions {
    pub model: PathBuf,
    pub eta: f64,
    pub params: LightTailParams,
}

/// Confidence interval for the error (regression) or misclassification
/// risk (classification) of a trained linear model. The radius is
/// `ρ_N(η/2)` unless `--rho` overrides it.
pub fn cmd_interval(cfg: &RunConfig, opts: &IntervalOptions) -> Result<Value> {
    let data = cfg.dataset()?;
    let (model, w) = load_linear(&opts.model, &data)?;
    let (radius, source) = match cfg.rho {
        Some(r) => (r, "override"),
        None => (radius_basic(data.len(), data.dim(), opts.eta / 2.0, &opts.params)?, "basic"),
    };
    let (lower, upper, kappa) = match data.task() {
        Task::Regression => {
            let (lo, hi) = error_interval(&data, &w, radius, model.p)?;
            (lo, hi, None)
        }
        Task::Classification => {
            let (lo, hi) = risk_interval(&data, &w, radius, model.kappa_value(), model.p)?;
            (lo, hi, model.kappa)
        }
    };
    let report = json!({
        "command": "interval",
        "task": data.task(),
        "quantity": match data.task() { Task::Regression => "mean_absolute_error", Task::Classification => "misclassification_risk" },
        "eta": opts.eta,
        "radius": radius,
        "radius_source": source,
        "kappa": kappa,
        "lower": lower,
        "upper": upper,
    });
    cfg.prepare_out()?;
    write_json(&cfg.out_file("interval.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCaseMode {
    Auto,
    Exact,
    Sequence,
}

#[derive(Debug, Clone)]
pub struct WorstCaseOptions {
    pub model: PathBuf,
    pub mode: WorstCaseMode,
    pub gamma: f64,
}

/// `N` rows drawn from the atoms: each atom first gets `⌊N·mass⌋` copies,
/// the remaining rows are sampled in proportion to the fractional parts,
/// and the result is shuffled.
pub fn resample_atoms(wc: &WorstCaseDistribution, n_rows: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n_rows as f64;
    let mut counts: Vec<usize> = wc.atoms.iter().map(|a| (a.mass * nf + 1e-9).floor() as usize).collect();
    let mut rest: Vec<f64> = wc.atoms.iter().zip(&counts).map(|(a, &c)| (a.mass * nf - c as f64).max(0.0)).collect();
    let mut assigned: usize = counts.iter().sum();
    while assigned > n_rows {
        let k = (0..counts.len()).filter(|&k| counts[k] > 0).min_by(|&a, &b| wc.atoms[a].mass.total_cmp(&wc.atoms[b].mass)).expect("some atom has copies");
        counts[k] -= 1;
        assigned -= 1;
    }
    while assigned < n_rows {
        let total: f64 = rest.iter().sum();
        let k = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = rest.len() - 1;
            for (k, r) in rest.iter().enumerate() {
                if u < *r {
                    pick = k;
                    break;
                }
                u -= r;
            }
            pick
        } else {
            (0..wc.atoms.len()).max_by(|&a, &b| wc.atoms[a].mass.total_cmp(&wc.atoms[b].mass)).expect("atoms are non-empty")
        };
        counts[k] += 1;
        rest[k] = 0.0;
        assigned += 1;
    }
    let mut rows: Vec<(Vec<f64>, f64)> =
        wc.atoms.iter().zip(&counts).flat_map(|(a, &c)| std::iter::repeat_n((a.x.clone(), a.y), c)).collect();
    rows.shuffle(&mut rng);
    rows
}

/// Worst-case distribution of a trained linear model. Writes
/// `worstcase.json` and a stressed dataset `stressed.csv` of N rows.
pub fn cmd_worstcase(cfg: &RunConfig, opts: &WorstCaseOptions) -> Result<Value> {
    let data = cfg.dataset()?;
    let (model, w) = load_linear(&opts.model, &data)?;
    let rho = cfg.rho.unwrap_or(model.rho);
    let kappa = model.kappa_value();
    let exact_ok = model.loss.is_pwl() && model.p != NormP::Two;
    let exact = match opts.mode {
        WorstCaseMode::Exact => true,
        WorstCaseMode::Sequence => false,
        WorstCaseMode::Auto => exact_ok,
    };
    let wc = match data.task() {
        Task::Regression => {
            let metric = if kappa.is_finite() { TransportCost::separable_regression(model.p, kappa)? } else { TransportCost::joint(model.p) };
            let prob = RegressionProblem::new(&data, model.loss.clone(), cfg.support.clone(), metric, rho)?;
            if exact {
                worstcase_regression_exact(&prob, &w)?
            } else {
                worstcase_regression_sequence(&prob, &w, opts.gamma)?
            }
        }
        Task::Classification => {
            let prob = ClassificationProblem::new(&data, model.loss.clone(), cfg.support.clone(), TransportCost::classification(model.p, kappa)?, rho)?;
            if exact {
                worstcase_classification_exact(&prob, &w)?
            } else {
                worstcase_classification_sequence(&prob, &w, opts.gamma)?
            }
        }
    };
    cfg.prepare_out()?;
    write_rows(&cfg.out_file("stressed.csv"), &resample_atoms(&wc, data.len(), cfg.seed))?;
    let report = json!({
        "command": "worstcase",
        "task": data.task(),
        "mode": if exact { "exact" } else { "sequence" },
        "gamma": if exact { Value::Null } else { json!(opts.gamma) },
        "rho": rho,
        "kappa": kappa_json(kappa),
        "value": wc.attained_value,
        "gap_bound": wc.gap_bound,
        "atoms": wc.atoms,
    });
    write_json(&cfg.out_file("worstcase.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RadiusOptions {
    pub n_samples: Option<usize>,
    pub dim: Option<usize>,
    pub eta: f64,
    pub params: LightTailParams,
    pub bx: HypothesisBox,
}

/// Basic and improved generalization radii. Never fails on an unmet
/// precondition; the report says which ones hold instead.
pub fn cmd_radius(cfg: &RunConfig, opts: &RadiusOptions) -> Result<Value> {
    let (n_samples, dim) = match (opts.n_samples, opts.dim) {
        (Some(n), Some(d)) => (n, d),
        (n, d) => {
            let data = cfg.dataset()?;
            (n.unwrap_or(data.len()), d.unwrap_or(data.dim()))
        }
    };
    if n_samples == 0 || dim == 0 {
        return Err(CliError::Usage("need N ≥ 1 and n ≥ 1".into()));
    }
    opts.params.validate()?;
    if !(opts.eta > 0.0 && opts.eta <= 1.0) {
        return Err(CliError::Usage(format!("eta {} outside (0, 1]", opts.eta)));
    }
    let basic = radius_basic(n_samples, dim, opts.eta, &opts.params);
    let (improved, ok) = radius_improved_formula(n_samples, dim, opts.eta, &opts.params, &opts.bx);
    let required = improved_sample_threshold(dim, opts.eta, &opts.params).ceil();
    let report = json!({
        "command": "radius",
        "n_samples": n_samples,
        "dim": dim,
        "eta": opts.eta,
        "rho_basic": basic.as_ref().ok(),
        "rho_improved": if ok { json!(improved) } else { Value::Null },
        "preconditions": {
            "basic": basic.is_ok(),
            "basic_reason": basic.as_ref().err().map(|e| e.to_string()),
            "improved": ok,
            "improved_required_samples": required,
        },
    });
    cfg.prepare_out()?;
    write_json(&cfg.out_file("radius.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wassdrl_core::extremal::Atom;

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64]).collect();
        let ys: Vec<f64> = (0..20).map(|i| if i < 6 { 1.0 } else { -1.0 }).collect();
        let data = Dataset::from_rows(&rows, &ys, Task::Classification).unwrap();
        let f = assign_folds(&data, 3, 11).unwrap();
        assert_eq!(f, assign_folds(&data, 3, 11).unwrap());
        for fold in 0..3 {
            let pos = (0..20).filter(|&i| f[i] == fold && ys[i] > 0.0).count();
            assert!((1..=3).contains(&pos));
        }
        assert!(assign_folds(&data.subset(&[0, 1]).unwrap(), 3, 0).is_err());
    }

    #[test]
    fn resampling_uniform_atoms_reproduces_them() {
        let atoms: Vec<Atom> = (0..7).map(|i| Atom { x: vec![i as f64], y: 1.0, mass: 1.0 / 7.0, source: i }).collect();
        let wc = WorstCaseDistribution { atoms, attained_value: 0.0, gap_bound: 0.0 };
        let mut rows = resample_atoms(&wc, 7, 3);
        rows.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
        assert_eq!(rows.iter().map(|r| r.0[0]).collect::<Vec<_>>(), (0..7).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn resampling_keeps_row_count() {
        let atoms = vec![
            Atom { x: vec![0.0], y: 1.0, mass: 0.55, source: 0 },
            Atom { x: vec![1.0], y: -1.0, mass: 0.3, source: 0 },
            Atom { x: vec![2.0], y: 1.0, mass: 0.15, source: 1 },
        ];
        let wc = WorstCaseDistribution { atoms, attained_value: 0.0, gap_bound: 0.0 };
        for n in [1, 2, 3, 10, 33] {
            assert_eq!(resample_atoms(&wc, n, 0).len(), n);
        }
    }
}
