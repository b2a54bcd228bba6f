//! Worst-case distributions for fixed linear hypotheses.
//!
//! For piecewise linear losses the worst case is attained by a discrete
//! distribution with at most J atoms per training sample, read off an LP over
//! masses `α` and mass-weighted displacements `q`. For Lipschitz losses on
//! unbounded supports the supremum is approached by moving a vanishing mass
//! `γ/N` of one sample far along the steepest direction of the loss.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classification::{lipschitz_objective_at, ClassificationProblem};
use crate::data::Dataset;
use crate::linalg::dot;
use crate::loss::LossSpec;
use crate::lpform::{norm_epigraph, Affine};
use crate::metric::{CostKind, TransportCost};
use crate::norm::NormP;
use crate::regression::{regularized_objective, RegressionProblem};
use crate::solver::{solve_lp, LinearProgram, Sense, SolveOptions};
use crate::support::SupportSet;
use crate::{Error, LinearHypothesis, Result};

const ALPHA_ZERO: f64 = 1e-12;
const Q_ZERO: f64 = 1e-9;
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atom {
    pub x: Vec<f64>,
    pub y: f64,
    pub mass: f64,
    /// Training sample this mass was transported from.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorstCaseDistribution {
    pub atoms: Vec<Atom>,
    /// Expected loss under the distribution.
    #[cfg_attr(feature = "serde", serde(rename = "value"))]
    pub attained_value: f64,
    /// Upper bound on the distance of `attained_value` to the supremum.
    pub gap_bound: f64,
}

impl WorstCaseDistribution {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Cost of the coupling that moves each atom back to its source sample.
    pub fn transport_cost(&self, dataset: &Dataset, cost: &TransportCost) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.mass * cost.distance(&a.x, a.y, dataset.x(a.source), dataset.y(a.source)))
            .sum()
    }
}

fn regression_expectation(atoms: &[Atom], loss: &LossSpec, w: &[f64]) -> f64 {
    atoms.iter().map(|a| a.mass * loss.eval(dot(w, &a.x) - a.y)).sum()
}

fn classification_expectation(atoms: &[Atom], loss: &LossSpec, w: &[f64]) -> f64 {
    atoms.iter().map(|a| a.mass * loss.eval(a.y * dot(w, &a.x))).sum()
}

/// Merges atoms of the same source and label lying within `MERGE_TOL`.
fn merge(atoms: Vec<Atom>) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        if a.mass <= 0.0 {
            continue;
        }
        let hit = out.iter_mut().find(|b| {
            b.source == a.source
                && b.y == a.y
                && b.x.iter().zip(&a.x).all(|(p, q)| (p - q).abs() <= MERGE_TOL * (1.0 + p.abs()))
        });
        match hit {
            Some(b) => b.mass += a.mass,
            None => out.push(a),
        }
    }
    out
}

/// A displacement `(q, v)` that carries no mass in the LP solution.
struct Orphan {
    sample: usize,
    q: Vec<f64>,
    v: f64,
    label: f64,
    /// Loss credited by the LP for the orphan at unit mass, evaluated at the
    /// piece: `a·z + b` with `z` the sample's residual or margin.
    floor: f64,
}

/// Places each orphan displacement on a tiny mass taken from an atom of the
/// same sample. The atom at `x̂ + q/ε` carries exactly the orphan's transport
/// budget, and its loss is at least the LP credit up to `ε·floor`.
fn adopt_orphans(atoms: &mut Vec<Atom>, orphans: Vec<Orphan>, dataset: &Dataset, big_n: f64, loss_at: &dyn Fn(&Atom) -> f64) {
    for o in orphans {
        let Some(donor) = atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.source == o.sample)
            .max_by(|a, b| a.1.mass.partial_cmp(&b.1.mass).unwrap())
            .map(|(k, _)| k)
        else {
            continue;
        };
        let spread = (loss_at(&atoms[donor]) - o.floor).abs();
        let eps = (0.5 * atoms[donor].mass * big_n).min(1e-9 / (1.0 + spread));
        let donor_atom = &mut atoms[donor];
        // the donor keeps its location, so its transport cost shrinks
        donor_atom.mass -= eps / big_n;
        let x: Vec<f64> = dataset.x(o.sample).iter().zip(&o.q).map(|(a, b)| a + b / eps).collect();
        let y = if o.label.is_nan() { dataset.y(o.sample) + o.v / eps } else { o.label };
        atoms.push(Atom { x, y, mass: eps / big_n, source: o.sample });
    }
}

fn recession_ok(support: &SupportSet, q: &[f64], v: Option<f64>) -> bool {
    match support {
        SupportSet::Unbounded => true,
        SupportSet::Polytope(poly) => {
            let mut dir = q.to_vec();
            if let Some(v) = v {
                dir.push(v);
            }
            // slack of the direction relative to the origin: C·dir ≤ 0
            let n = poly.input_dim();
            (0..poly.num_constraints()).all(|l| {
                let c = dot(poly.c_x().row(l), &dir[..n]) + if poly.has_output() { poly.c_y(l) * dir[n] } else { 0.0 };
                c <= 1e-9 * (1.0 + dir.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            })
        }
    }
}

/// Exact worst-case distribution for a piecewise linear regression loss.
pub fn worstcase_regression_exact(p: &RegressionProblem<'_>, w: &LinearHypothesis) -> Result<WorstCaseDistribution> {
    p.dataset.check_dim(w.dim())?;
    let pieces = p.loss.pwl_pieces()?;
    if p.metric.input_norm == NormP::Two {
        return Err(Error::UnsupportedNorm(NormP::Two));
    }
    let data = p.dataset;
    let (n, big_n) = (data.dim(), data.len());
    let nf = big_n as f64;
    let label_fixed = matches!(p.metric.kind, CostKind::SeparableRegression { kappa } if kappa.is_infinite());

    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut budget = Affine::default();
    // (alpha, q vars, v var)
    let mut vars: Vec<Vec<(usize, Vec<usize>, Option<usize>)>> = Vec::with_capacity(big_n);
    for i in 0..big_n {
        let (x, y) = (data.x(i), data.y(i));
        let r = dot(&w.w, x) - y;
        let mut row_vars = Vec::with_capacity(pieces.len());
        let mut simplex = Vec::with_capacity(pieces.len());
        for (j, (a, b)) in pieces.iter().enumerate() {
            let alpha = lp.add_nonneg(format!("alpha[{i},{j}]"), (a * r + b) / nf);
            let q: Vec<usize> = (0..n).map(|k| lp.add_free(format!("q[{i},{j},{k}]"), a * w.w[k] / nf)).collect();
            let v = (!label_fixed).then(|| lp.add_free(format!("v[{i},{j}]"), -a / nf));
            simplex.push((alpha, 1.0));
            let qa: Vec<Affine> = q.iter().map(|&k| Affine::default().term(k, 1.0)).collect();
            let tag = format!("c{i},{j}");
            match p.metric.kind {
                CostKind::JointRegression => {
                    let mut comps = qa;
                    if let Some(v) = v {
                        comps.push(Affine::default().term(v, 1.0));
                    }
                    let e = norm_epigraph(&mut lp, p.metric.input_norm, &comps, &tag)?;
                    budget.terms.extend(e.terms);
                }
                CostKind::SeparableRegression { kappa } => {
                    let e = norm_epigraph(&mut lp, p.metric.input_norm, &qa, &tag)?;
                    budget.terms.extend(e.terms);
                    if let Some(v) = v {
                        let t = lp.add_nonneg(format!("{tag}.y"), 0.0);
                        lp.add_le([(v, 1.0), (t, -1.0)], 0.0);
                        lp.add_le([(v, -1.0), (t, -1.0)], 0.0);
                        budget = budget.term(t, kappa);
                    }
                }
                CostKind::SeparableClassification { .. } => {
                    return Err(Error::InvalidParameter("regression needs a regression transport cost".into()))
                }
            }
            if let SupportSet::Polytope(poly) = &p.support {
                // C1 q + c2 v ≤ α (d - C1 x̂ - c2 ŷ)
                let mut point = x.to_vec();
                point.push(y);
                let slack = poly.slack(&point);
                for l in 0..poly.num_constraints() {
                    let mut row: Vec<(usize, f64)> = (0..n).map(|k| (q[k], poly.c_x()[(l, k)])).collect();
                    if let Some(v) = v {
                        row.push((v, poly.c_y(l)));
                    }
                    row.push((alpha, -slack[l]));
                    lp.add_le(row, 0.0);
                }
            }
            row_vars.push((alpha, q, v));
        }
        lp.add_eq(simplex, 1.0);
        vars.push(row_vars);
    }
    lp.add_le(budget.terms, nf * p.rho);
    let sol = solve_lp(&lp, &SolveOptions::default())?.into_optimal()?;

    let mut atoms = Vec::new();
    let mut orphans = Vec::new();
    for (i, row_vars) in vars.iter().enumerate() {
        let (x, y) = (data.x(i), data.y(i));
        for (j, (alpha, q, v)) in row_vars.iter().enumerate() {
            let a = sol.primal[*alpha].max(0.0);
            let qv: Vec<f64> = q.iter().map(|&k| sol.primal[k]).collect();
            let vv = v.map_or(0.0, |k| sol.primal[k]);
            let size = qv.iter().fold(vv.abs(), |m, z| m.max(z.abs()));
            if a <= ALPHA_ZERO {
                if size > Q_ZERO {
                    if !recession_ok(&p.support, &qv, Some(vv)) {
                        return Err(Error::Numerical(format!(
                            "LP returned displacement without mass for sample {i}, piece {j}"
                        )));
                    }
                    let (pa, pb) = pieces[j];
                    orphans.push(Orphan { sample: i, q: qv, v: vv, label: f64::NAN, floor: pa * (dot(&w.w, x) - y) + pb });
                }
                continue;
            }
            let ax: Vec<f64> = x.iter().zip(&qv).map(|(xi, qi)| xi + qi / a).collect();
            atoms.push(Atom { x: ax, y: y + vv / a, mass: a / nf, source: i });
        }
    }
    let has_orphans = !orphans.is_empty();
    let loss = p.loss.clone();
    let ww = w.w.clone();
    adopt_orphans(&mut atoms, orphans, data, nf, &|a: &Atom| loss.eval(dot(&ww, &a.x) - a.y));
    let atoms = merge(atoms);
    let attained = regression_expectation(&atoms, &p.loss, &w.w);
    let gap_bound = if has_orphans { (sol.value - attained).max(0.0) } else { 0.0 };
    Ok(WorstCaseDistribution { atoms, attained_value: attained, gap_bound })
}

/// Exact worst-case distribution for a piecewise linear classification loss.
///
/// Atoms sit at `x̂ᵢ + q⁺/α⁺` with the original label and at `x̂ᵢ + q⁻/α⁻`
/// with the flipped label; flipping costs κ per unit mass.
pub fn worstcase_classification_exact(p: &ClassificationProblem<'_>, w: &LinearHypothesis) -> Result<WorstCaseDistribution> {
    p.dataset.check_dim(w.dim())?;
    let pieces = p.loss.pwl_pieces()?;
    if p.metric.input_norm == NormP::Two {
        return Err(Error::UnsupportedNorm(NormP::Two));
    }
    let data = p.dataset;
    let (n, big_n) = (data.dim(), data.len());
    let nf = big_n as f64;
    let kappa = p.kappa();
    let signs: &[f64] = if kappa.is_finite() { &[1.0, -1.0] } else { &[1.0] };

    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut budget = Affine::default();
    let mut vars: Vec<Vec<(f64, usize, Vec<usize>, usize)>> = Vec::with_capacity(big_n);
    for i in 0..big_n {
        let (x, y) = (data.x(i), data.y(i));
        let m = y * dot(&w.w, x);
        let mut row_vars = Vec::new();
        let mut simplex = Vec::new();
        for (j, (a, b)) in pieces.iter().enumerate() {
            for &sg in signs {
                let tag = if sg > 0.0 { "p" } else { "m" };
                let alpha = lp.add_nonneg(format!("alpha{tag}[{i},{j}]"), (sg * a * m + b) / nf);
                let q: Vec<usize> =
                    (0..n).map(|k| lp.add_free(format!("q{tag}[{i},{j},{k}]"), sg * a * y * w.w[k] / nf)).collect();
                simplex.push((alpha, 1.0));
                let qa: Vec<Affine> = q.iter().map(|&k| Affine::default().term(k, 1.0)).collect();
                let e = norm_epigraph(&mut lp, p.metric.input_norm, &qa, &format!("c{tag}{i},{j}"))?;
                budget.terms.extend(e.terms);
                if sg < 0.0 {
                    budget = budget.term(alpha, kappa);
                }
                if let SupportSet::Polytope(poly) = &p.support {
                    let slack = poly.slack(x);
                    for l in 0..poly.num_constraints() {
                        let mut row: Vec<(usize, f64)> = (0..n).map(|k| (q[k], poly.c_x()[(l, k)])).collect();
                        row.push((alpha, -slack[l]));
                        lp.add_le(row, 0.0);
                    }
                }
                row_vars.push((sg, alpha, q, j));
            }
        }
        lp.add_eq(simplex, 1.0);
        vars.push(row_vars);
    }
    lp.add_le(budget.terms, nf * p.rho);
    let sol = solve_lp(&lp, &SolveOptions::default())?.into_optimal()?;

    let mut atoms = Vec::new();
    let mut orphans = Vec::new();
    for (i, row_vars) in vars.iter().enumerate() {
        let (x, y) = (data.x(i), data.y(i));
        for (sg, alpha, q, j) in row_vars {
            let a = sol.primal[*alpha].max(0.0);
            let qv: Vec<f64> = q.iter().map(|&k| sol.primal[k]).collect();
            let label = sg * y;
            if a <= ALPHA_ZERO {
                if qv.iter().any(|z| z.abs() > Q_ZERO) {
                    if !recession_ok(&p.support, &qv, None) {
                        return Err(Error::Numerical(format!(
                            "LP returned displacement without mass for sample {i}, piece {j}"
                        )));
                    }
                    let (pa, pb) = pieces[*j];
                    orphans.push(Orphan { sample: i, q: qv, v: 0.0, label, floor: pa * label * dot(&w.w, x) + pb });
                }
                continue;
            }
            let ax: Vec<f64> = x.iter().zip(&qv).map(|(xi, qi)| xi + qi / a).collect();
            atoms.push(Atom { x: ax, y: label, mass: a / nf, source: i });
        }
    }
    let has_orphans = !orphans.is_empty();
    let loss = p.loss.clone();
    let ww = w.w.clone();
    adopt_orphans(&mut atoms, orphans, data, nf, &|a: &Atom| loss.eval(a.y * dot(&ww, &a.x)));
    let atoms = merge(atoms);
    let attained = classification_expectation(&atoms, &p.loss, &w.w);
    let gap_bound = if has_orphans { (sol.value - attained).max(0.0) } else { 0.0 };
    Ok(WorstCaseDistribution { atoms, attained_value: attained, gap_bound })
}

fn check_gamma(gamma: f64, upper: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= upper {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

/// Feasible distributions approaching the worst case as γ ↓ 0: the first
/// sample keeps mass `(1 - γ)/N` and sends `γ/N` a distance `ρN/γ` along the
/// direction in which the loss grows at rate `lip(L)·‖(w, -1)‖_*`.
pub fn worstcase_regression_sequence(p: &RegressionProblem<'_>, w: &LinearHypothesis, gamma: f64) -> Result<WorstCaseDistribution> {
    p.dataset.check_dim(w.dim())?;
    check_gamma(gamma, 1.0)?;
    if !p.support.is_unbounded() {
        return Err(Error::BoundedSupportUnsupported);
    }
    let data = p.dataset;
    let nf = data.len() as f64;
    let (dx, dy) = p.metric.dual_pair_maximizer(&w.w, -1.0);
    let step = p.loss.steep_direction() * p.rho * nf / gamma;
    let mut atoms: Vec<Atom> =
        (0..data.len()).map(|i| Atom { x: data.x(i).to_vec(), y: data.y(i), mass: 1.0 / nf, source: i }).collect();
    atoms[0].mass = (1.0 - gamma) / nf;
    let x: Vec<f64> = data.x(0).iter().zip(&dx).map(|(a, b)| a + step * b).collect();
    atoms.push(Atom { x, y: data.y(0) + step * dy, mass: gamma / nf, source: 0 });
    let atoms = merge(atoms);
    let attained = regression_expectation(&atoms, &p.loss, &w.w);
    let wc = regularized_objective(data, &p.loss, &w.w, p.rho, &p.metric);
    Ok(WorstCaseDistribution { atoms, attained_value: attained, gap_bound: (wc - attained).max(0.0) })
}

/// Solution `(α, θ)` of the label-flip allocation LP with offset γ.
pub fn classification_flip_allocation(p: &ClassificationProblem<'_>, w: &LinearHypothesis, gamma: f64) -> Result<(Vec<f64>, f64, f64)> {
    let data = p.dataset;
    let nf = data.len() as f64;
    let kappa = p.kappa();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let lip_w = p.loss.lipschitz() * p.metric.input_norm.dual_norm(&w.w);
    let theta = lp.add_nonneg("theta", lip_w);
    let mut row = vec![(theta, 1.0)];
    let mut constant = 0.0;
    let alpha: Vec<usize> = (0..data.len())
        .map(|i| {
            let m = data.y(i) * dot(&w.w, data.x(i));
            let (kept, flipped) = (p.loss.eval(m), p.loss.eval(-m));
            constant += kept / nf;
            let a = lp.add_var(format!("alpha[{i}]"), (flipped - kept) / nf, 0.0, 1.0);
            row.push((a, kappa / nf));
            a
        })
        .collect();
    lp.add_eq(row, p.rho - gamma);
    let sol = solve_lp(&lp, &SolveOptions::default())?.into_optimal()?;
    Ok((alpha.iter().map(|&k| sol.primal[k]).collect(), sol.primal[theta], sol.value + constant))
}

/// Feasible distributions approaching the worst case as γ ↓ 0 for Lipschitz
/// classification losses with finite flip cost κ.
pub fn worstcase_classification_sequence(p: &ClassificationProblem<'_>, w: &LinearHypothesis, gamma: f64) -> Result<WorstCaseDistribution> {
    p.dataset.check_dim(w.dim())?;
    let kappa = p.kappa();
    if !kappa.is_finite() {
        return Err(Error::KappaInfinite);
    }
    if !p.support.is_unbounded() {
        return Err(Error::BoundedSupportUnsupported);
    }
    check_gamma(gamma, p.rho.min(1.0))?;
    let data = p.dataset;
    let nf = data.len() as f64;
    let (alpha, theta, _) = classification_flip_allocation(p, w, gamma)?;
    let mut eta = gamma / (theta + kappa - p.rho + gamma + 1.0);
    if !(eta > 0.0 && eta <= 1.0) {
        eta = gamma;
    }
    let mut atoms = Vec::with_capacity(2 * data.len() + 1);
    for i in 0..data.len() {
        let scale = if i == 0 { 1.0 - eta } else { 1.0 };
        let (x, y) = (data.x(i), data.y(i));
        atoms.push(Atom { x: x.to_vec(), y, mass: scale * (1.0 - alpha[i]) / nf, source: i });
        atoms.push(Atom { x: x.to_vec(), y: -y, mass: scale * alpha[i] / nf, source: i });
    }
    if theta > 0.0 {
        let y1 = data.y(0);
        let dir = p.metric.input_norm.dual_maximizer(&w.w);
        let step = p.loss.steep_direction() * y1 * theta * nf / eta;
        let x: Vec<f64> = data.x(0).iter().zip(&dir).map(|(a, b)| a + step * b).collect();
        atoms.push(Atom { x, y: y1, mass: eta / nf, source: 0 });
    } else {
        // nothing to move: return the mass to the first sample
        atoms[0].mass += eta * (1.0 - alpha[0]) / nf;
        atoms[1].mass += eta * alpha[0] / nf;
    }
    let atoms = merge(atoms);
    let attained = classification_expectation(&atoms, &p.loss, &w.w);
    let (wc, _) = lipschitz_objective_at(data, &p.loss, &w.w, p.rho, kappa, p.metric.input_norm);
    Ok(WorstCaseDistribution { atoms, attained_value: attained, gap_bound: (wc - attained).max(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::regression::wc_expected_loss_regression;

    #[test]
    fn zero_radius_returns_samples() {
        let d = Dataset::from_rows(&[[1.0], [2.0]], &[0.5, 1.0], Task::Regression).unwrap();
        let p = RegressionProblem::unbounded(&d, LossSpec::EpsInsensitive { eps: 0.1 }, NormP::Inf, 0.0).unwrap();
        let wc = worstcase_regression_exact(&p, &LinearHypothesis::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(wc.atoms.len(), 2);
        for (i, a) in wc.atoms.iter().enumerate() {
            assert_eq!(a.x, d.x(i));
            assert!((a.mass - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_absolute_loss_moves_along_loss() {
        let d = Dataset::from_rows(&[[1.0]], &[0.0], Task::Regression).unwrap();
        let p = RegressionProblem::unbounded(&d, LossSpec::Absolute, NormP::Inf, 0.3).unwrap();
        let w = LinearHypothesis::new(vec![1.0]).unwrap();
        let wc = worstcase_regression_exact(&p, &w).unwrap();
        let exact = wc_expected_loss_regression(&p, &w).unwrap();
        assert!((wc.attained_value - exact).abs() < 1e-9);
        assert!(wc.transport_cost(&d, &p.metric) <= 0.3 + 1e-9);
        assert!((wc.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequence_converges() {
        let d = Dataset::from_rows(&[[1.0, 0.0], [0.0, 1.0]], &[0.5, -0.5], Task::Regression).unwrap();
        let p = RegressionProblem::unbounded(&d, LossSpec::Huber { delta: 0.5 }, NormP::Two, 0.2).unwrap();
        let w = LinearHypothesis::new(vec![0.3, 0.1]).unwrap();
        let gaps: Vec<f64> =
            [1e-1, 1e-2, 1e-3].iter().map(|g| worstcase_regression_sequence(&p, &w, *g).unwrap().gap_bound).collect();
        assert!(gaps[0] >= gaps[1] && gaps[1] >= gaps[2]);
        assert!(worstcase_regression_sequence(&p, &w, 0.0).is_err());
    }
}
