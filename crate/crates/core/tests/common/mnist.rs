//! MNIST 1-vs-7 benchmark on raw IDX files: 500 training and 2000 test
//! images, linear classifier with ∞-norm transport cost, (ρ, κ) chosen by
//! stratified 5-fold cross validation.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wassdrl_core::classification::{predict, train_pwl_classification, ClassificationProblem};
use wassdrl_core::{Dataset, LossSpec, NormP, Task};

fn read_idx(path: &Path) -> Result<(Vec<usize>, Vec<u8>), String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if bytes.len() < 4 || bytes[2] != 0x08 {
        return Err(format!("{}: not an unsigned-byte IDX file", path.display()));
    }
    let ndim = bytes[3] as usize;
    let dims: Vec<usize> = (0..ndim).map(|k| u32::from_be_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize).collect();
    Ok((dims, bytes[4 + 4 * ndim..].to_vec()))
}

fn load(dir: &Path, images: &str, labels: &str) -> Result<Vec<(Vec<f64>, f64)>, String> {
    let (dims, px) = read_idx(&dir.join(images))?;
    let (_, lab) = read_idx(&dir.join(labels))?;
    let size: usize = dims[1..].iter().product();
    Ok(lab
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == 1 || **l == 7)
        .map(|(i, l)| (px[i * size..(i + 1) * size].iter().map(|v| *v as f64 / 255.0).collect(), if *l == 1 { 1.0 } else { -1.0 }))
        .collect())
}

fn dataset(rows: &[(Vec<f64>, f64)]) -> Dataset {
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Dataset::from_rows(&xs, &ys, Task::Classification).unwrap()
}

fn ccr(w: &[f64], rows: &[(Vec<f64>, f64)]) -> f64 {
    let h = wassdrl_core::LinearHypothesis::new(w.to_vec()).unwrap();
    rows.iter().filter(|(x, y)| predict(&h, x).unwrap() == *y).count() as f64 / rows.len() as f64
}

fn fit(rows: &[(Vec<f64>, f64)], rho: f64, kappa: f64) -> Result<Vec<f64>, String> {
    let d = dataset(rows);
    let p = ClassificationProblem::unbounded(&d, LossSpec::Hinge, NormP::Inf, kappa, rho).map_err(|e| e.to_string())?;
    Ok(train_pwl_classification(&p).map_err(|e| e.to_string())?.0.w)
}

pub fn run(dir: &str) -> Result<String, String> {
    let dir = Path::new(dir);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut train = load(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")?;
    let mut test = load(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?;
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    train.truncate(500);
    test.truncate(2000);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); 5];
    for label in [1.0, -1.0] {
        for (k, i) in (0..train.len()).filter(|&i| train[i].1 == label).enumerate() {
            folds[k % 5].push(i);
        }
    }
    let rhos: Vec<f64> = [-1, -2, -3, -4].iter().flat_map(|e| [1.0, 5.0].map(|b| b * 10f64.powi(*e))).collect();
    let kappas = [0.1, 0.25, 0.5, 0.75, f64::INFINITY];
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &rho in &rhos {
        for &kappa in &kappas {
            let mut score = 0.0;
            for f in &folds {
                let fit_rows: Vec<_> = (0..train.len()).filter(|i| !f.contains(i)).map(|i| train[i].clone()).collect();
                let val_rows: Vec<_> = f.iter().map(|&i| train[i].clone()).collect();
                score += ccr(&fit(&fit_rows, rho, kappa)?, &val_rows) / 5.0;
            }
            if score > best.0 {
                best = (score, rho, kappa);
            }
        }
    }
    let test_ccr = ccr(&fit(&train, best.1, best.2)?, &test);
    if test_ccr < 0.975 {
        return Err(format!("test CCR {test_ccr:.4} below 0.975 at rho={}, kappa={}", best.1, best.2));
    }
    Ok(format!("test CCR {test_ccr:.4} at rho={}, kappa={}", best.1, best.2))
}
