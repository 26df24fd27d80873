//! Least-squares fitting, prediction, leave-one-out residuals, and the RMSPE
//! metrics consumed by every selector.

use nalgebra::{DMatrix, DVector};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::term::{build_model_matrix, TermSet};

/// Relative pivot threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Raw least-squares fit of a model matrix.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: DVector<f64>,
    pub rss: f64,
    pub rank: usize,
}

/// Householder QR with column pivoting. Returns the minimum-norm-style
/// rank-`r` solution (coefficients of non-pivoted columns set to zero), the
/// residual sum of squares, and the detected rank.
pub fn lstsq_pivoted(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} rows in X but {} responses",
            n,
            y.len()
        )));
    }
    if p == 0 || n == 0 {
        return Err(Error::InvalidArgument("empty model matrix".into()));
    }
    let mut a = x.clone();
    let mut b = y.clone();
    let mut perm: Vec<usize> = (0..p).collect();
    let kmax = n.min(p);
    let mut rank = 0;
    let mut tol = 0.0;

    for k in 0..kmax {
        // Pivot on the largest remaining column norm, recomputed exactly.
        let mut best = k;
        let mut best_norm = 0.0;
        for j in k..p {
            let norm: f64 = (k..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
            if norm > best_norm {
                best_norm = norm;
                best = j;
            }
        }
        if k == 0 {
            tol = RANK_TOL * best_norm;
        }
        if best_norm <= tol {
            break;
        }
        if best != k {
            a.swap_columns(best, k);
            perm.swap(best, k);
        }
        // Householder vector for column k.
        let alpha = -a[(k, k)].signum() * best_norm;
        let mut v = DVector::zeros(n - k);
        for i in k..n {
            v[i - k] = a[(i, k)];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.dot(&v);
        if vnorm2 > 0.0 {
            for j in k..p {
                let dot: f64 = (k..n).map(|i| v[i - k] * a[(i, j)]).sum();
                let scale = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[(i, j)] -= scale * v[i - k];
                }
            }
            let dot: f64 = (k..n).map(|i| v[i - k] * b[i]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in k..n {
                b[i] -= scale * v[i - k];
            }
        }
        a[(k, k)] = alpha;
        rank = k + 1;
    }

    // Back-substitute on the leading rank x rank triangle.
    let mut z = DVector::zeros(p);
    for i in (0..rank).rev() {
        let mut s = b[i];
        for j in (i + 1)..rank {
            s -= a[(i, j)] * z[j];
        }
        z[i] = s / a[(i, i)];
    }
    let mut beta = DVector::zeros(p);
    for k in 0..p {
        beta[perm[k]] = z[k];
    }
    let rss: f64 = (rank..n).map(|i| b[i] * b[i]).sum::<f64>().max(0.0);
    Ok(OlsFit { beta, rss, rank })
}

/// OLS fit requiring full column rank; rank deficiency is a clean error so
/// callers can skip aliased submodels.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let fit = lstsq_pivoted(x, y)?;
    if fit.rank < x.ncols() {
        return Err(Error::RankDeficient(format!(
            "model matrix has rank {} < {} columns",
            fit.rank,
            x.ncols()
        )));
    }
    Ok(fit)
}

/// A fitted term-set model.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub terms: TermSet,
    pub beta: DVector<f64>,
    pub rss: f64,
    pub n: usize,
    /// `rss / (n - |terms|)` when positive residual degrees of freedom exist.
    pub sigma2_hat: Option<f64>,
}

impl FittedModel {
    pub fn predict(&self, design_new: &Design) -> Result<DVector<f64>> {
        predict(self, design_new)
    }

    /// Submodel size s (non-intercept term count).
    pub fn size(&self) -> usize {
        self.terms.size()
    }
}

/// Fit a term set to a design's response by OLS.
pub fn fit_terms(design: &Design, ts: &TermSet, y: &DVector<f64>) -> Result<FittedModel> {
    let x = build_model_matrix(design, ts)?;
    let fit = fit_ols(&x, y)?;
    let n = design.n();
    let p = ts.len();
    let sigma2_hat = if n > p { Some(fit.rss / (n - p) as f64) } else { None };
    Ok(FittedModel {
        terms: ts.clone(),
        beta: fit.beta,
        rss: fit.rss,
        n,
        sigma2_hat,
    })
}

/// Predictions of a fitted model at new design points.
pub fn predict(fm: &FittedModel, design_new: &Design) -> Result<DVector<f64>> {
    if design_new.m() != fm.terms.m() {
        return Err(Error::DimensionMismatch(format!(
            "model over {} factors, design has {}",
            fm.terms.m(),
            design_new.m()
        )));
    }
    let x = build_model_matrix(design_new, &fm.terms)?;
    Ok(&x * &fm.beta)
}

/// Root mean squared prediction error.
pub fn rmspe(y_true: &DVector<f64>, y_hat: &DVector<f64>) -> Result<f64> {
    if y_true.len() != y_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} values",
            y_true.len(),
            y_hat.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("rmspe of empty vectors".into()));
    }
    let n = y_true.len() as f64;
    let ss: f64 = y_true
        .iter()
        .zip(y_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / n).sqrt())
}

/// The k-fold aggregate: the arithmetic mean of the per-fold RMSPE values
/// (mean of roots, not root of means).
pub fn rmspe_cv_aggregate(per_fold: &[f64]) -> Result<f64> {
    if per_fold.is_empty() {
        return Err(Error::InvalidArgument("no fold RMSPE values".into()));
    }
    Ok(per_fold.iter().sum::<f64>() / per_fold.len() as f64)
}

/// Leave-one-out prediction residuals `e_i / (1 - h_ii)` for a fixed model
/// matrix; equals the error from refitting without row i.
pub fn loo_residuals(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::InvalidArgument(format!(
            "loo residuals need n > p, got n={n}, p={p}"
        )));
    }
    let fit = fit_ols(x, y)?;
    let resid = y - x * &fit.beta;
    let h = leverages(x)?;
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let denom = 1.0 - h[i];
        if denom <= 1e-10 {
            return Err(Error::RankDeficient(format!(
                "row {i} has leverage 1; refit without it is impossible"
            )));
        }
        out[i] = resid[i] / denom;
    }
    Ok(out)
}

/// Hat-matrix diagonal via the thin Q factor.
pub fn leverages(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    let qr = x.clone().qr();
    let q = qr.q();
    let mut h = DVector::zeros(n);
    for i in 0..n {
        h[i] = (0..p).map(|j| q[(i, j)] * q[(i, j)]).sum();
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ccd, Design, Factorial};
    use crate::term::{full_second_order, main_effects, Term};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_problem(rng: &mut ChaCha12Rng, n: usize, p: usize) -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_fn(n, p, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        (x, y)
    }

    #[test]
    fn exact_fit_has_zero_rss() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let (x, _) = random_problem(&mut rng, 12, 4);
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = &x * &beta;
        let fit = fit_ols(&x, &y).unwrap();
        assert_relative_eq!(fit.beta, beta, epsilon = 1e-9);
        assert!(fit.rss < 1e-18);
    }

    #[test]
    fn intercept_only_is_mean() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 10.0]);
        let fit = fit_ols(&x, &y).unwrap();
        assert_relative_eq!(fit.beta[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_design_closed_form() {
        // 2^3 full factorial plus intercept: beta_j = x_j'y / n.
        let d = ccd(3, 1.0, 0, Factorial::Full).unwrap();
        let facts = d.subset_rows(&(0..8).collect::<Vec<_>>());
        let ts = main_effects(3).unwrap();
        let x = crate::term::build_model_matrix(&facts, &ts).unwrap();
        let y = DVector::from_vec(vec![1.0, -0.5, 2.0, 0.25, -1.0, 3.0, 0.0, 1.5]);
        let fit = fit_ols(&x, &y).unwrap();
        for j in 0..4 {
            let closed: f64 = x.column(j).dot(&y) / 8.0;
            assert_relative_eq!(fit.beta[j], closed, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_deficiency_is_error() {
        let mut x = DMatrix::from_element(6, 3, 1.0);
        for i in 0..6 {
            x[(i, 1)] = i as f64;
            x[(i, 2)] = 2.0 * i as f64; // aliased with column 1
        }
        let y = DVector::from_fn(6, |i, _| i as f64);
        assert!(matches!(fit_ols(&x, &y), Err(Error::RankDeficient(_))));
        let fit = lstsq_pivoted(&x, &y).unwrap();
        assert_eq!(fit.rank, 2);
        assert!(fit.rss < 1e-18);
    }

    #[test]
    fn scale_consistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let (x, y) = random_problem(&mut rng, 20, 5);
        let f1 = fit_ols(&x, &y).unwrap();
        let f2 = fit_ols(&x, &(&y * 3.5)).unwrap();
        assert_relative_eq!(&f1.beta * 3.5, f2.beta, epsilon = 1e-9);
        assert_relative_eq!(f1.rss.sqrt() * 3.5, f2.rss.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn rmspe_cases() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(rmspe(&y, &y).unwrap(), 0.0);
        let shifted = DVector::from_vec(vec![-1.0, 0.0, 1.0]);
        assert_relative_eq!(rmspe(&y, &shifted).unwrap(), 2.0, epsilon = 1e-12);
        let yh = DVector::from_vec(vec![1.0, 1.0, 5.0]);
        assert_relative_eq!(rmspe(&y, &yh).unwrap(), (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert!(rmspe(&y, &DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn rmspe_permutation_invariance() {
        let y = DVector::from_vec(vec![1.0, 4.0, -2.0, 0.5]);
        let yh = DVector::from_vec(vec![0.0, 5.0, -1.0, 0.25]);
        let yp = DVector::from_vec(vec![0.5, -2.0, 4.0, 1.0]);
        let yhp = DVector::from_vec(vec![0.25, -1.0, 5.0, 0.0]);
        assert_relative_eq!(rmspe(&y, &yh).unwrap(), rmspe(&yp, &yhp).unwrap());
    }

    #[test]
    fn aggregate_is_mean_of_folds() {
        assert_eq!(rmspe_cv_aggregate(&[2.0, 2.0, 2.0]).unwrap(), 2.0);
        assert_eq!(rmspe_cv_aggregate(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert!(rmspe_cv_aggregate(&[]).is_err());
    }

    #[test]
    fn loo_residual_hand_case() {
        // n=3 intercept-only, y=(0,0,3): leverage 1/3, residual 3 - 1 = 2
        // for row 3, LOO residual 2 / (2/3) = 3... computed against the
        // stated identity e_i/(1-h_ii).
        let x = DMatrix::from_element(3, 1, 1.0);
        let y = DVector::from_vec(vec![0.0, 0.0, 3.0]);
        let r = loo_residuals(&x, &y).unwrap();
        // refit without row 3: mean(0,0)=0, prediction error 3.
        assert_relative_eq!(r[2], 3.0, epsilon = 1e-12);
        // refit without row 1: mean(0,3)=1.5, error -1.5.
        assert_relative_eq!(r[0], -1.5, epsilon = 1e-12);
    }

    #[test]
    fn loo_duplicate_rows_zero_residual() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0]);
        let y = DVector::from_vec(vec![2.0, 2.0, -1.0, -1.0]);
        let r = loo_residuals(&x, &y).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn loo_matches_explicit_refits() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (x, y) = random_problem(&mut rng, 10, 3);
            let shortcut = loo_residuals(&x, &y).unwrap();
            for i in 0..10 {
                let rows: Vec<usize> = (0..10).filter(|&r| r != i).collect();
                let xi = DMatrix::from_fn(9, 3, |r, c| x[(rows[r], c)]);
                let yi = DVector::from_fn(9, |r, _| y[rows[r]]);
                let fit = fit_ols(&xi, &yi).unwrap();
                let pred: f64 = (0..3).map(|c| x[(i, c)] * fit.beta[c]).sum();
                let err = y[i] - pred;
                assert_relative_eq!(shortcut[i], err, epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn predict_reproduces_training_on_saturated_fit() {
        let d = ccd(2, 1.0, 1, Factorial::Full).unwrap();
        let ts = full_second_order(2).unwrap();
        // saturated-ish: 9 runs, 6 terms; make y exactly from the model
        let x = crate::term::build_model_matrix(&d, &ts).unwrap();
        let beta = DVector::from_vec(vec![0.5, 1.0, -1.0, 0.25, 0.0, 2.0]);
        let y = &x * &beta;
        let fm = fit_terms(&d, &ts, &y).unwrap();
        let yh = fm.predict(&d).unwrap();
        assert_relative_eq!(yh, y, epsilon = 1e-9);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let d2 = ccd(2, 1.0, 0, Factorial::Full).unwrap();
        let d3 = ccd(3, 1.0, 0, Factorial::Full).unwrap();
        let ts = main_effects(2).unwrap();
        let y = DVector::from_fn(d2.n(), |i, _| i as f64);
        let fm = fit_terms(&d2, &ts, &y).unwrap();
        assert!(fm.predict(&d3).is_err());
    }

    #[test]
    fn normal_equations_hold() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let (x, y) = random_problem(&mut rng, 25, 6);
        let fit = fit_ols(&x, &y).unwrap();
        let grad = x.transpose() * (y - &x * &fit.beta);
        assert!(grad.iter().all(|g| g.abs() < 1e-8));
    }

    #[test]
    fn term_eval_hand_product() {
        let pts = DMatrix::from_row_slice(1, 2, &[0.5, -1.0]);
        let t = Term::interaction(&[0, 1]).unwrap();
        let d = Design::new(pts, "t", 0).unwrap();
        assert_eq!(t.eval(&d.row(0)), -0.5);
    }
}
