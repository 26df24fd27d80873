//! Little bootstrap size selection: PE_s = RSS_s + 2*Bbar_s where the bias
//! term comes from refitting each frozen size-s subset to perturbed
//! responses. Includes the ridge fallback for the error variance when the
//! full candidate model is not estimable.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::ols::lstsq_pivoted;
use crate::subsets::{best_subsets_terms_with, predictor_matrix, Strategy, TermSubsetPath};
use crate::term::TermSet;

/// Full-model variance estimate RSS/(n - p); p counts all columns of `x`.
pub fn estimate_sigma2(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::InvalidArgument(format!(
            "need n > p for the full-model variance estimate, got n={n}, p={p}"
        )));
    }
    let fit = lstsq_pivoted(x, y)?;
    Ok(fit.rss / (n - p) as f64)
}

/// RSS and effective degrees of freedom tr(H_lambda) of a ridge fit on an
/// already-centered problem, via SVD.
pub fn ridge_rss_df(x_centered: &DMatrix<f64>, y_centered: &DVector<f64>, lambda: f64) -> (f64, f64) {
    let svd = x_centered.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let d = &svd.singular_values;
    let uty = u.transpose() * y_centered;
    let mut df = 0.0;
    let mut rss = y_centered.norm_squared();
    for i in 0..d.len() {
        let d2 = d[i] * d[i];
        let shrink = d2 / (d2 + lambda);
        df += shrink;
        // residual energy along u_i drops from uty^2 to ((1-shrink)*uty)^2
        rss += uty[i] * uty[i] * ((1.0 - shrink) * (1.0 - shrink) - 1.0);
    }
    (rss.max(0.0), df)
}

/// Ridge-based error variance for arbitrary n, p (including p >= n).
///
/// The intercept is unpenalized (handled by centering); lambda is chosen by
/// GCV over 50 log-spaced points in [1e-4, 1e4] times the mean diagonal of
/// X'X/n, and sigma2 = RSS(lambda*) / (n - 1 - tr(H_lambda*)).
pub fn ridge_variance_estimate(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows but {} responses",
            y.len()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidArgument("need at least 3 runs".into()));
    }
    let ybar = y.mean();
    let yc = y.map(|v| v - ybar);
    let mut xc = x.clone();
    for j in 0..p {
        let m = xc.column(j).mean();
        for i in 0..n {
            xc[(i, j)] -= m;
        }
    }
    let mean_diag = xc.iter().map(|v| v * v).sum::<f64>() / (n as f64 * p.max(1) as f64);
    if mean_diag <= 0.0 {
        // no usable predictors; fall back to the sample variance
        return Ok(yc.norm_squared() / (n - 1) as f64);
    }

    // The raw GCV argmin degenerates when p >= n (df can approach n - 1 with
    // RSS near 0, or drift to the no-fit end); two guards stabilize it:
    // an effective-df cap, and near-tie resolution toward the smallest
    // lambda so strong effects get fit rather than absorbed into sigma2.
    let df_cap = 0.65 * (n as f64 - 1.0);
    let near_tie = 0.10;
    let lo = (1e-4 * mean_diag).ln();
    let hi = (1e4 * mean_diag).ln();
    let mut cands: Vec<(f64, f64, f64)> = Vec::new(); // ascending lambda: (gcv, rss, df)
    for g in 0..50 {
        let lambda = (lo + (hi - lo) * g as f64 / 49.0).exp();
        let (rss, df) = ridge_rss_df(&xc, &yc, lambda);
        let denom = n as f64 - 1.0 - df;
        if denom <= 0.0 || df > df_cap {
            continue;
        }
        let gcv = n as f64 * rss / (denom * denom);
        cands.push((gcv, rss, df));
    }
    if cands.is_empty() {
        return Err(Error::SelectionFailed(
            "ridge degrees of freedom exhausted n at every grid point".into(),
        ));
    }
    let min_gcv = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let (_, rss, df) = *cands
        .iter()
        .find(|c| c.0 <= min_gcv * (1.0 + near_tie))
        .expect("min exists");
    Ok(rss / (n as f64 - 1.0 - df))
}

/// Variance estimate for a candidate set: full-model OLS when estimable,
/// ridge fallback otherwise.
pub fn sigma2_for_candidates(design: &Design, candidates: &TermSet, y: &DVector<f64>) -> Result<f64> {
    let x = predictor_matrix(design, candidates)?;
    let (n, p) = x.shape();
    if n > p + 1 {
        let with_icpt = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        estimate_sigma2(&with_icpt, y)
    } else {
        ridge_variance_estimate(&x, y)
    }
}

/// Tuning knobs for [`lb_select`].
#[derive(Debug, Clone, Copy)]
pub struct LbOptions {
    pub t: f64,
    pub n_bootstrap: usize,
    pub s_max: Option<usize>,
    pub strategy: Strategy,
    /// Use the literal variance reading (perturbation variance t*sigma2
    /// rather than t^2*sigma2). Off by default.
    pub variance_literal: bool,
}

impl Default for LbOptions {
    fn default() -> LbOptions {
        LbOptions {
            t: 0.6,
            n_bootstrap: 25,
            s_max: None,
            strategy: Strategy::Auto,
            variance_literal: false,
        }
    }
}

/// Per-size RSS, averaged bias, penalized error, and the selected size.
#[derive(Debug, Clone)]
pub struct LbTrace {
    pub rss_by_size: Vec<Option<f64>>,
    pub bbar_by_size: Vec<Option<f64>>,
    pub pe_by_size: Vec<Option<f64>>,
    pub s_star: usize,
    pub t: f64,
    pub n_bootstrap: usize,
    pub sigma2_used: f64,
}

impl LbTrace {
    pub fn s_max(&self) -> usize {
        self.pe_by_size.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,rss,bbar,pe\n");
        for s in 0..self.s_max() {
            let fmt = |v: &Option<f64>| v.map_or("NA".to_string(), |x| format!("{x}"));
            out.push_str(&format!(
                "{},{},{},{}\n",
                s + 1,
                fmt(&self.rss_by_size[s]),
                fmt(&self.bbar_by_size[s]),
                fmt(&self.pe_by_size[s]),
            ));
        }
        out
    }
}

/// Little bootstrap over a best-subsets path selected on the original y.
///
/// Subsets are frozen: each bootstrap replicate refits the same size-s model
/// to the perturbed response, never re-selecting.
pub fn lb_select<R: Rng>(
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
    opts: &LbOptions,
    sigma2: f64,
    rng: &mut R,
) -> Result<(LbTrace, TermSubsetPath)> {
    if !(opts.t > 0.0 && opts.t <= 1.0) {
        return Err(Error::InvalidArgument(format!("t={} outside (0, 1]", opts.t)));
    }
    if opts.n_bootstrap < 1 {
        return Err(Error::InvalidArgument("n_bootstrap must be >= 1".into()));
    }
    if sigma2 < 0.0 {
        return Err(Error::InvalidArgument(format!("sigma2={sigma2} < 0")));
    }
    let n = design.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} runs but {} responses",
            y.len()
        )));
    }
    let p = candidates.size();
    let s_max = opts
        .s_max
        .unwrap_or_else(|| p.min(n.saturating_sub(2)))
        .min(p)
        .min(n.saturating_sub(2));
    if s_max < 1 {
        return Err(Error::InvalidArgument("no searchable sizes".into()));
    }

    let path = best_subsets_terms_with(design, candidates, y, s_max, opts.strategy)?;
    let x_all = predictor_matrix(design, candidates)?;

    // Thin Q of each frozen size-s model matrix (with intercept), so each
    // replicate's refit is two matrix-vector products.
    let mut qs: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(s_max);
    let mut rss_by_size: Vec<Option<f64>> = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        let entry = path.path.entry(s).expect("path covers 1..=s_max");
        if entry.flagged {
            qs.push(None);
            rss_by_size.push(None);
            continue;
        }
        let xs = DMatrix::from_fn(n, s + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                x_all[(i, entry.indices[j - 1])]
            }
        });
        let qr = xs.qr();
        let q = qr.q();
        let r = qr.r();
        // guard against a numerically singular refit
        let singular = (0..s + 1).any(|j| r[(j, j)].abs() < 1e-10 * (n as f64).sqrt());
        if singular {
            qs.push(None);
            rss_by_size.push(None);
        } else {
            qs.push(Some(q));
            rss_by_size.push(Some(entry.rss));
        }
    }

    let sd = if opts.variance_literal {
        (opts.t * sigma2).sqrt()
    } else {
        opts.t * sigma2.sqrt()
    };
    let mut bsum = vec![0.0f64; s_max];
    if sd > 0.0 {
        let mut eps = DVector::zeros(n);
        for _ in 0..opts.n_bootstrap {
            for i in 0..n {
                let z: f64 = StandardNormal.sample(rng);
                eps[i] = sd * z;
            }
            let y_tilde = y + &eps;
            for s in 0..s_max {
                if let Some(q) = &qs[s] {
                    let fitted = q * (q.transpose() * &y_tilde);
                    bsum[s] += eps.dot(&fitted) / (opts.t * opts.t);
                }
            }
        }
    }

    let mut bbar_by_size = Vec::with_capacity(s_max);
    let mut pe_by_size = Vec::with_capacity(s_max);
    for s in 0..s_max {
        match rss_by_size[s] {
            Some(rss) => {
                let bbar = bsum[s] / opts.n_bootstrap as f64;
                bbar_by_size.push(Some(bbar));
                pe_by_size.push(Some(rss + 2.0 * bbar));
            }
            None => {
                bbar_by_size.push(None);
                pe_by_size.push(None);
            }
        }
    }
    let s_star = pe_by_size
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|pe| (i + 1, pe)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(s, _)| s)
        .ok_or_else(|| Error::SelectionFailed("every size degenerate".into()))?;

    Ok((
        LbTrace {
            rss_by_size,
            bbar_by_size,
            pe_by_size,
            s_star,
            t: opts.t,
            n_bootstrap: opts.n_bootstrap,
            sigma2_used: sigma2,
        },
        path,
    ))
}
