//! Persisted models and the fitting dispatch shared by the commands.

use serde::{Deserialize, Serialize};
use wassdrl_core::classification::{self, ClassificationProblem};
use wassdrl_core::kernel::{kernel_predict, lifted_radius, train_kernel_classification, train_kernel_regression, KernelHypothesis, KernelSpec};
use wassdrl_core::neural::{drnn_objective, nn_predict, train_spgd, Activation, MlpSpec, Network, SpgdOptions, TraceRow};
use wassdrl_core::regression::{self, RegressionProblem};
use wassdrl_core::{Dataset, Error as CoreError, LinearHypothesis, LossSpec, NormP, SupportSet, Task, TransportCost};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    Linear { w: Vec<f64> },
    Kernel(KernelHypothesis),
    Network(Network),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub task: Task,
    pub loss: LossSpec,
    pub p: NormP,
    /// Label cost κ; `null` means ∞ (or the joint metric in regression).
    pub kappa: Option<f64>,
    pub rho: f64,
    pub hypothesis: Hypothesis,
}

impl ModelFile {
    pub fn kappa_value(&self) -> f64 {
        self.kappa.unwrap_or(f64::INFINITY)
    }

    pub fn linear(&self) -> Option<LinearHypothesis> {
        match &self.hypothesis {
            Hypothesis::Linear { w } => LinearHypothesis::new(w.clone()).ok(),
            _ => None,
        }
    }

    /// Raw score `h(x)`; classification labels are its sign.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(match &self.hypothesis {
            Hypothesis::Linear { w } => {
                if w.len() != x.len() {
                    return Err(CoreError::DimensionMismatch { expected: w.len(), found: x.len() }.into());
                }
                wassdrl_core::linalg::dot(w, x)
            }
            Hypothesis::Kernel(h) => kernel_predict(h, x)?,
            Hypothesis::Network(net) => {
                let (spec, w) = net.clone().into_parts()?;
                nn_predict(&spec, &w, x)?
            }
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let s = self.score(x)?;
        Ok(match self.task {
            Task::Regression => s,
            Task::Classification => if s >= 0.0 { 1.0 } else { -1.0 },
        })
    }

    /// Correct-classification rate, or minus the mean absolute error for
    /// regression, so that larger is always better.
    pub fn score_on(&self, data: &Dataset) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..data.len() {
            let pred = self.predict(data.x(i))?;
            acc += match self.task {
                Task::Classification => f64::from(u8::from(pred == data.y(i))),
                Task::Regression => -(pred - data.y(i)).abs(),
            };
        }
        Ok(acc / data.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub options: SpgdOptions,
}

/// Everything needed to fit one model besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub task: Task,
    pub loss: LossSpec,
    pub p: NormP,
    /// `∞` selects the joint metric in regression and drops label flips in
    /// classification.
    pub kappa: f64,
    pub rho: f64,
    pub kernel: Option<KernelSpec>,
    pub support: SupportSet,
    pub net: Option<NetConfig>,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: ModelFile,
    pub objective: f64,
    /// Worst-case expected loss of the returned linear hypothesis.
    pub worst_case: Option<f64>,
    /// Upper bound on the worst-case loss of a network.
    pub robust_bound: Option<f64>,
    pub trace: Vec<TraceRow>,
}

fn regression_metric(p: NormP, kappa: f64) -> Result<TransportCost> {
    Ok(if kappa.is_finite() { TransportCost::separable_regression(p, kappa)? } else { TransportCost::joint(p) })
}

fn require_unbounded(support: &SupportSet, what: &str) -> Result<()> {
    if support.is_unbounded() {
        Ok(())
    } else {
        Err(CoreError::Unsupported(format!("{what} requires an unbounded support set")).into())
    }
}

pub fn fit(cfg: &FitConfig, data: &Dataset) -> Result<Fitted> {
    let kappa_opt = cfg.kappa.is_finite().then_some(cfg.kappa);
    let wrap = |hypothesis, objective, worst_case, robust_bound, trace| Fitted {
        model: ModelFile { task: cfg.task, loss: cfg.loss.clone(), p: cfg.p, kappa: kappa_opt, rho: cfg.rho, hypothesis },
        objective,
        worst_case,
        robust_bound,
        trace,
    };
    if let Some(net) = &cfg.net {
        if cfg.kernel.is_some() {
            return Err(CoreError::Unsupported("networks cannot be combined with a kernel".into()).into());
        }
        require_unbounded(&cfg.support, "network training")?;
        let mut sizes = vec![data.dim()];
        sizes.extend(&net.hidden);
        sizes.push(1);
        let mut acts = vec![net.activation; net.hidden.len()];
        acts.push(Activation::Identity);
        let spec = MlpSpec::new(sizes, acts, cfg.p)?;
        let res = train_spgd(&spec, data, &cfg.loss, cfg.rho, &net.options, None)?;
        let objective = res.trace.last().map_or(f64::NAN, |r| r.objective);
        let c = spec.default_c().unwrap_or(2.0);
        let kappa = if cfg.task == Task::Classification { cfg.kappa } else { f64::INFINITY };
        let bound = drnn_objective(&spec, &res.weights, data, &cfg.loss, cfg.rho, kappa, c)?;
        let hyp = Hypothesis::Network(Network::from_parts(&spec, &res.weights));
        return Ok(wrap(hyp, objective, None, Some(bound), res.trace));
    }
    if let Some(spec) = &cfg.kernel {
        require_unbounded(&cfg.support, "kernel training")?;
        let lifted = lifted_radius(cfg.rho, spec, data.dim(), cfg.task);
        let (h, obj) = match cfg.task {
            Task::Regression => {
                if cfg.kappa.is_finite() {
                    return Err(CoreError::Unsupported("kernel regression uses the joint metric; drop --kappa".into()).into());
                }
                train_kernel_regression(data, spec, &cfg.loss, lifted)?
            }
            Task::Classification => train_kernel_classification(data, spec, &cfg.loss, lifted, cfg.kappa)?,
        };
        return Ok(wrap(Hypothesis::Kernel(h), obj, None, None, Vec::new()));
    }
    match cfg.task {
        Task::Regression => {
            let metric = regression_metric(cfg.p, cfg.kappa)?;
            let prob = RegressionProblem::new(data, cfg.loss.clone(), cfg.support.clone(), metric, cfg.rho)?;
            let (w, obj) = match cfg.loss {
                _ if cfg.loss.is_pwl() => regression::train_pwl_regression(&prob)?,
                LossSpec::Huber { delta } if prob.support.is_unbounded() && !cfg.kappa.is_finite() => {
                    regression::train_huber(data, delta, cfg.rho, cfg.p)?
                }
                _ => regression::train_lipschitz_regression(&prob)?,
            };
            let wc = regression::wc_expected_loss_regression(&prob, &w)?;
            Ok(wrap(Hypothesis::Linear { w: w.w }, obj, Some(wc), None, Vec::new()))
        }
        Task::Classification => {
            let metric = TransportCost::classification(cfg.p, cfg.kappa)?;
            let prob = ClassificationProblem::new(data, cfg.loss.clone(), cfg.support.clone(), metric, cfg.rho)?;
            let (w, obj) = if cfg.loss.is_pwl() && cfg.p != NormP::Two {
                classification::train_pwl_classification(&prob)?
            } else {
                classification::train_lipschitz_classification(&prob)?
            };
            let wc = classification::wc_expected_loss_classification(&prob, &w)?;
            Ok(wrap(Hypothesis::Linear { w: w.w }, obj, Some(wc), None, Vec::new()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_rows(&[[1.0, 0.5], [2.0, -1.0], [-1.0, 0.3], [-2.0, 1.0]], &[1.0, 1.0, -1.0, -1.0], Task::Classification).unwrap()
    }

    fn cfg(kappa: f64, rho: f64) -> FitConfig {
        FitConfig {
            task: Task::Classification,
            loss: LossSpec::Hinge,
            p: NormP::Inf,
            kappa,
            rho,
            kernel: None,
            support: SupportSet::Unbounded,
            net: None,
        }
    }

    #[test]
    fn model_json_round_trips() {
        let f = fit(&cfg(0.5, 0.1), &toy()).unwrap();
        let s = serde_json::to_string(&f.model).unwrap();
        let back: ModelFile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f.model);
        assert_eq!(back.score_on(&toy()).unwrap(), 1.0);
    }

    #[test]
    fn linear_objective_equals_worst_case() {
        let f = fit(&cfg(0.5, 0.1), &toy()).unwrap();
        assert!((f.objective - f.worst_case.unwrap()).abs() <= 1e-7);
    }

    #[test]
    fn kernel_model_round_trips() {
        let mut c = cfg(f64::INFINITY, 0.01);
        c.kernel = Some(KernelSpec::Gaussian { gamma: 0.5 });
        let f = fit(&c, &toy()).unwrap();
        let back: ModelFile = serde_json::from_str(&serde_json::to_string(&f.model).unwrap()).unwrap();
        assert_eq!(back.score(&[0.3, 0.1]).unwrap(), f.model.score(&[0.3, 0.1]).unwrap());
    }
}
