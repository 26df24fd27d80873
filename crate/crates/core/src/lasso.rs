//! Lasso path by cyclic coordinate descent, with three tuning rules:
//! k-fold CV over a shared lambda grid, LOOCV (k = n), and the thresholded
//! BIC refit ("Gauss-Lasso").

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::cv::make_folds;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::ols::lstsq_pivoted;
use crate::subsets::predictor_matrix;
use crate::term::TermSet;

const CD_TOL: f64 = 1e-8;
const CD_MAX_SWEEPS: usize = 100_000;
pub const GRID_LEN: usize = 100;
/// Grid floor lambda_min/lambda_max.
pub const GRID_RATIO: f64 = 1e-4;

/// Centering and scaling parameters of a standardized problem.
#[derive(Debug, Clone)]
pub struct StandardizeParams {
    pub x_centers: Vec<f64>,
    pub x_scales: Vec<f64>,
    pub y_center: f64,
}

/// Center y; center each column of X and scale to unit standard deviation
/// (1/n denominator). Errors on a constant column.
pub fn standardize(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>, StandardizeParams)> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows but {} responses",
            y.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty data".into()));
    }
    let mut centers = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    let mut xs = x.clone();
    for j in 0..p {
        let c = xs.column(j).mean();
        let mut ss = 0.0;
        for i in 0..n {
            xs[(i, j)] -= c;
            ss += xs[(i, j)] * xs[(i, j)];
        }
        let sd = (ss / n as f64).sqrt();
        if sd <= 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "column {} is constant",
                j + 1
            )));
        }
        for i in 0..n {
            xs[(i, j)] /= sd;
        }
        centers.push(c);
        scales.push(sd);
    }
    let y_center = y.mean();
    let yc = y.map(|v| v - y_center);
    Ok((
        xs,
        yc,
        StandardizeParams {
            x_centers: centers,
            x_scales: scales,
            y_center,
        },
    ))
}

/// lambda_max = max_j |x_j' y| / n on the standardized problem.
pub fn lambda_max(x_cs: &DMatrix<f64>, y_c: &DVector<f64>) -> f64 {
    let n = x_cs.nrows() as f64;
    (0..x_cs.ncols())
        .map(|j| (x_cs.column(j).dot(y_c) / n).abs())
        .fold(0.0, f64::max)
}

/// 100 log-spaced lambdas descending from lambda_max to GRID_RATIO times it.
pub fn default_grid(x_cs: &DMatrix<f64>, y_c: &DVector<f64>) -> Vec<f64> {
    let lmax = lambda_max(x_cs, y_c).max(1e-300);
    let lo = (lmax * GRID_RATIO).ln();
    let hi = lmax.ln();
    (0..GRID_LEN)
        .map(|g| (hi + (lo - hi) * g as f64 / (GRID_LEN - 1) as f64).exp())
        .collect()
}

/// Coefficients along a descending lambda grid on the standardized problem.
#[derive(Debug, Clone)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    /// p x |grid| coefficients, standardized scale.
    pub betas: DMatrix<f64>,
    pub params: StandardizeParams,
}

impl LassoPath {
    pub fn beta_at(&self, g: usize) -> DVector<f64> {
        DVector::from_fn(self.betas.nrows(), |j, _| self.betas[(j, g)])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda");
        for j in 0..self.betas.nrows() {
            out.push_str(&format!(",b{}", j + 1));
        }
        out.push('\n');
        for (g, l) in self.lambdas.iter().enumerate() {
            out.push_str(&format!("{l}"));
            for j in 0..self.betas.nrows() {
                out.push_str(&format!(",{}", self.betas[(j, g)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Cyclic coordinate descent with warm starts. Objective is
/// (1/2n)||y - Xb||^2 + lambda ||b||_1 with unit-variance columns.
pub fn lasso_path_on(
    x_cs: &DMatrix<f64>,
    y_c: &DVector<f64>,
    grid: &[f64],
    params: StandardizeParams,
) -> Result<LassoPath> {
    let (n, p) = x_cs.shape();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    for w in grid.windows(2) {
        if w[1] > w[0] {
            return Err(Error::InvalidArgument("grid must be descending".into()));
        }
    }
    let nf = n as f64;
    // unit-sd columns make every coordinate's curvature x_j'x_j/n equal 1
    let mut beta = vec![0.0f64; p];
    let mut resid = y_c.clone();
    let mut betas = DMatrix::zeros(p, grid.len());

    for (g, &lambda) in grid.iter().enumerate() {
        let mut sweeps = 0;
        loop {
            let mut max_delta = 0.0f64;
            for j in 0..p {
                let old = beta[j];
                let rho = x_cs.column(j).dot(&resid) / nf + old;
                let new = soft_threshold(rho, lambda);
                if new != old {
                    let delta = new - old;
                    for i in 0..n {
                        resid[i] -= delta * x_cs[(i, j)];
                    }
                    beta[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            sweeps += 1;
            if max_delta < CD_TOL {
                break;
            }
            if sweeps >= CD_MAX_SWEEPS {
                return Err(Error::NoConvergence(format!(
                    "coordinate descent at grid index {g} (lambda {lambda})"
                )));
            }
        }
        for j in 0..p {
            betas[(j, g)] = beta[j];
        }
    }
    Ok(LassoPath {
        lambdas: grid.to_vec(),
        betas,
        params,
    })
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Standardize, build the default grid, and run the path.
pub fn lasso_path(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LassoPath> {
    let (xs, yc, params) = standardize(x, y)?;
    let grid = default_grid(&xs, &yc);
    lasso_path_on(&xs, &yc, &grid, params)
}

/// Threshold-and-refit selection: a single path-wide threshold
/// gamma = 0.1 * max |beta| zeroes small coefficients, survivors are refit by
/// OLS per lambda, and BIC picks the grid point.
#[derive(Debug, Clone)]
pub struct GaussLassoResult {
    pub lambda_star: f64,
    pub lambda_index: usize,
    pub active_terms: TermSet,
    pub bic_by_lambda: Vec<f64>,
    pub gamma: f64,
}

impl GaussLassoResult {
    pub fn bic_csv(&self) -> String {
        let mut out = String::from("index,bic\n");
        for (g, b) in self.bic_by_lambda.iter().enumerate() {
            out.push_str(&format!("{g},{b}\n"));
        }
        out
    }
}

pub fn gauss_lasso_select(
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
) -> Result<GaussLassoResult> {
    let x = predictor_matrix(design, candidates)?;
    let path = lasso_path(&x, y)?;
    gauss_lasso_from_path(&x, y, candidates, &path)
}

pub fn gauss_lasso_from_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    candidates: &TermSet,
    path: &LassoPath,
) -> Result<GaussLassoResult> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let gamma = 0.1 * path.betas.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let ybar = y.mean();
    let tss = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>();

    let mut bic_by_lambda = Vec::with_capacity(path.lambdas.len());
    let mut survivors_by_lambda: Vec<Vec<usize>> = Vec::with_capacity(path.lambdas.len());
    for g in 0..path.lambdas.len() {
        let survivors: Vec<usize> = (0..p)
            .filter(|&j| {
                let b = path.betas[(j, g)];
                b != 0.0 && b.abs() >= gamma
            })
            .collect();
        let rss = if survivors.is_empty() {
            tss
        } else {
            let xs = DMatrix::from_fn(n, survivors.len() + 1, |i, j| {
                if j == 0 {
                    1.0
                } else {
                    x[(i, survivors[j - 1])]
                }
            });
            lstsq_pivoted(&xs, y)?.rss
        };
        let k = survivors.len() as f64 + 1.0;
        let bic = nf * (rss.max(1e-300) / nf).ln() + k * nf.ln();
        bic_by_lambda.push(bic);
        survivors_by_lambda.push(survivors);
    }
    let lambda_index = bic_by_lambda
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(g, _)| g)
        .unwrap();
    let active_terms = candidates.subset_of_predictors(&survivors_by_lambda[lambda_index]);
    Ok(GaussLassoResult {
        lambda_star: path.lambdas[lambda_index],
        lambda_index,
        active_terms,
        bic_by_lambda,
        gamma,
    })
}

/// CV-tuned lasso over the shared full-data grid.
#[derive(Debug, Clone)]
pub struct LassoCvResult {
    pub lambda_star: f64,
    pub lambda_index: usize,
    pub active_terms: TermSet,
    pub cv_mse_by_lambda: Vec<Option<f64>>,
}

/// k-fold CV (k = n gives LOOCV) over the shared grid; the active set is the
/// support of the full-data path at the winning lambda.
pub fn lasso_cv_select<R: Rng>(
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
    k: usize,
    rng: &mut R,
) -> Result<LassoCvResult> {
    let x = predictor_matrix(design, candidates)?;
    let n = design.n();
    let (xs, yc, params) = standardize(&x, y)?;
    let grid = default_grid(&xs, &yc);
    let folds = make_folds(n, k, rng)?;

    let mut fold_mse: Vec<Vec<f64>> = Vec::new();
    for f in 0..k {
        let train_rows = folds.complement(f);
        let val_rows = folds.members(f);
        let xt = DMatrix::from_fn(train_rows.len(), x.ncols(), |i, j| x[(train_rows[i], j)]);
        let yt = DVector::from_fn(train_rows.len(), |i, _| y[train_rows[i]]);
        let (xts, yts, tp) = match standardize(&xt, &yt) {
            Ok(v) => v,
            Err(_) => continue, // degenerate fold: constant column in training
        };
        let path = match lasso_path_on(&xts, &yts, &grid, tp) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let mut mse_row = Vec::with_capacity(grid.len());
        for g in 0..grid.len() {
            let mut se = 0.0;
            for &r in &val_rows {
                let mut pred = path.params.y_center;
                for j in 0..x.ncols() {
                    let b = path.betas[(j, g)];
                    if b != 0.0 {
                        pred += b * (x[(r, j)] - path.params.x_centers[j]) / path.params.x_scales[j];
                    }
                }
                se += (y[r] - pred) * (y[r] - pred);
            }
            mse_row.push(se / val_rows.len() as f64);
        }
        fold_mse.push(mse_row);
    }
    if fold_mse.is_empty() {
        return Err(Error::SelectionFailed("every CV fold degenerate".into()));
    }
    let cv_mse_by_lambda: Vec<Option<f64>> = (0..grid.len())
        .map(|g| {
            Some(fold_mse.iter().map(|row| row[g]).sum::<f64>() / fold_mse.len() as f64)
        })
        .collect();
    let lambda_index = cv_mse_by_lambda
        .iter()
        .enumerate()
        .filter_map(|(g, m)| m.map(|v| (g, v)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(g, _)| g)
        .unwrap();

    let full_path = lasso_path_on(&xs, &yc, &grid, params)?;
    let support: Vec<usize> = (0..x.ncols())
        .filter(|&j| full_path.betas[(j, lambda_index)] != 0.0)
        .collect();
    Ok(LassoCvResult {
        lambda_star: grid[lambda_index],
        lambda_index,
        active_terms: candidates.subset_of_predictors(&support),
        cv_mse_by_lambda,
    })
}
