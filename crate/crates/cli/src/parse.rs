//! Textual specs for losses, kernels, norms and grids.
//!
//! Parameterized specs use `name:value[:value...]`, e.g. `huber:1.5`,
//! `gaussian:0.04` or `polynomial:1:3:2.5`.

use wassdrl_core::kernel::KernelSpec;
use wassdrl_core::neural::Activation;
use wassdrl_core::{LossSpec, NormP};

use crate::error::{CliError, Result};

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn number(s: &str, what: &str) -> Result<f64> {
    let v = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => f64::INFINITY,
        t => t.parse::<f64>().map_err(|_| usage(format!("{what}: cannot parse `{s}` as a number")))?,
    };
    if v.is_nan() {
        return Err(usage(format!("{what}: NaN is not allowed")));
    }
    Ok(v)
}

fn split(spec: &str) -> (String, Vec<&str>) {
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or("").trim().to_ascii_lowercase().replace('-', "_");
    (name, parts.collect())
}

fn arity(name: &str, args: &[&str], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&args.len()) {
        Ok(())
    } else {
        Err(usage(format!("`{name}` takes {allowed:?} parameters, got {}", args.len())))
    }
}

pub fn parse_loss(spec: &str) -> Result<LossSpec> {
    let (name, args) = split(spec);
    let one = |what: &str| -> Result<f64> {
        arity(&name, &args, &[1])?;
        number(args[0], what)
    };
    let loss = match name.as_str() {
        "hinge" => LossSpec::Hinge,
        "smooth_hinge" => LossSpec::SmoothHinge,
        "logloss" | "logistic" => LossSpec::Logloss,
        "absolute" => LossSpec::Absolute,
        "huber" => LossSpec::huber(one("huber delta")?)?,
        "eps_insensitive" | "svr" => LossSpec::eps_insensitive(one("epsilon")?)?,
        "pinball" | "quantile" => LossSpec::pinball(one("tau")?)?,
        _ => return Err(usage(format!("unknown loss `{spec}`"))),
    };
    if !matches!(name.as_str(), "huber" | "eps_insensitive" | "svr" | "pinball" | "quantile") {
        arity(&name, &args, &[0])?;
    }
    Ok(loss)
}

/// The flag is set for `polynomial:γ:d`, whose radius is derived from the data.
pub fn parse_kernel(spec: &str) -> Result<(KernelSpec, bool)> {
    let (name, args) = split(spec);
    let kernel = match name.as_str() {
        "linear" => {
            arity(&name, &args, &[0])?;
            KernelSpec::Linear
        }
        "gaussian" | "rbf" => {
            arity(&name, &args, &[1])?;
            KernelSpec::Gaussian { gamma: number(args[0], "gamma")? }
        }
        "laplacian" => {
            arity(&name, &args, &[1])?;
            KernelSpec::Laplacian { gamma: number(args[0], "gamma")? }
        }
        "polynomial" | "poly" => {
            arity(&name, &args, &[2, 3])?;
            let degree = args[1].trim().parse::<u32>().map_err(|_| usage(format!("polynomial degree `{}` is not a positive integer", args[1])))?;
            let radius = if args.len() == 3 { number(args[2], "radius")? } else { f64::NAN };
            KernelSpec::Polynomial { gamma: number(args[0], "gamma")?, degree, radius }
        }
        _ => return Err(usage(format!("unknown kernel `{spec}`"))),
    };
    let needs_radius = matches!(kernel, KernelSpec::Polynomial { radius, .. } if radius.is_nan());
    if !needs_radius {
        kernel.validate()?;
    }
    Ok((kernel, needs_radius))
}

pub fn parse_norm(s: &str) -> Result<NormP> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "one" => Ok(NormP::One),
        "2" | "two" => Ok(NormP::Two),
        "inf" | "infinity" => Ok(NormP::Inf),
        _ => Err(usage(format!("norm must be 1, 2 or inf, got `{s}`"))),
    }
}

pub fn parse_kappa(s: &str) -> Result<f64> {
    let k = number(s, "kappa")?;
    if k > 0.0 {
        Ok(k)
    } else {
        Err(usage(format!("kappa must be positive, got {s}")))
    }
}

pub fn parse_rho(s: &str) -> Result<f64> {
    let r = number(s, "rho")?;
    if r >= 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(usage(format!("rho must be finite and nonnegative, got {s}")))
    }
}

/// Comma separated list; an empty list is rejected.
pub fn parse_grid<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let out: Vec<T> = s.split(',').filter(|t| !t.trim().is_empty()).map(item).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(usage("grid is empty".into()));
    }
    Ok(out)
}

pub fn parse_activation(s: &str) -> Result<Activation> {
    match s.trim().to_ascii_lowercase().as_str() {
        "tanh" => Ok(Activation::Tanh),
        "sigmoid" => Ok(Activation::Sigmoid),
        "softmax" => Ok(Activation::Softmax),
        "relu" => Ok(Activation::Relu),
        "elu" => Ok(Activation::elu()),
        "identity" | "linear" => Ok(Activation::Identity),
        _ => Err(usage(format!("unknown activation `{s}`"))),
    }
}

/// `{b·10^{-e} : b ∈ {1, 5}, e ∈ {1, …, 4}}` in increasing order.
pub fn default_rho_grid() -> Vec<f64> {
    let mut g: Vec<f64> = [1.0, 5.0].iter().flat_map(|b| (1..=4).map(move |e| b * 10f64.powi(-e))).collect();
    g.sort_by(f64::total_cmp);
    g
}

pub fn default_kappa_grid() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, f64::INFINITY]
}

pub fn format_kappa(k: f64) -> String {
    if k.is_infinite() {
        "inf".into()
    } else {
        k.to_string()
    }
}
