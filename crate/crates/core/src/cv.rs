//! Submodel-size selection by k-fold CV or LOOCV wrapped around per-fold
//! best-subsets searches, followed by a full-data refit.
//!
//! Within every training fold the best-subsets search is rerun from scratch;
//! full-data subsets are never reused inside fold scoring.

use nalgebra::DVector;
use rand::Rng;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::ols::{fit_terms, rmspe, FittedModel};
use crate::subsets::{best_subsets_terms_with, refit_full_data, Strategy};
use crate::term::TermSet;

/// Assignment of runs to folds.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Uniformly random balanced partition; fold sizes differ by at most one.
pub fn make_folds<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} outside [2, {n}]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut fold_of = vec![0; n];
    for (pos, &run) in order.iter().enumerate() {
        fold_of[run] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k })
}

/// The k x s_max RMSPE matrix, its column means, and the selected size.
#[derive(Debug, Clone)]
pub struct CvTrace {
    /// `rmspe_matrix[fold][s-1]`; `None` marks a degenerate cell.
    pub rmspe_matrix: Vec<Vec<Option<f64>>>,
    /// Column means over non-degenerate cells.
    pub mean_by_size: Vec<Option<f64>>,
    pub s_star: usize,
}

impl CvTrace {
    pub fn k(&self) -> usize {
        self.rmspe_matrix.len()
    }

    pub fn s_max(&self) -> usize {
        self.mean_by_size.len()
    }

    /// CSV serialization: rows = folds, columns = sizes, `NA` for degenerate
    /// cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.s_max()).map(|s| format!("s{s}")).collect();
        out.push_str("fold,");
        out.push_str(&header.join(","));
        out.push('\n');
        for (f, row) in self.rmspe_matrix.iter().enumerate() {
            out.push_str(&f.to_string());
            for cell in row {
                out.push(',');
                match cell {
                    Some(v) => out.push_str(&format!("{v}")),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Options shared by the CV selectors.
#[derive(Debug, Clone, Copy)]
pub struct CvOptions {
    /// Cap on the searched submodel size; defaults to `min(p, n - 2)`.
    pub s_max: Option<usize>,
    pub strategy: Strategy,
}

impl Default for CvOptions {
    fn default() -> CvOptions {
        CvOptions {
            s_max: None,
            strategy: Strategy::Auto,
        }
    }
}

/// Per-fold best-subsets CV: fills the RMSPE matrix and picks
/// `s* = argmin_s` of the column means (smallest s on ties).
pub fn cv_select_size<R: Rng>(
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
    k: usize,
    rng: &mut R,
    opts: CvOptions,
) -> Result<CvTrace> {
    let n = design.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} runs but {} responses",
            y.len()
        )));
    }
    let p = candidates.size();
    let s_max_global = opts
        .s_max
        .unwrap_or_else(|| p.min(n.saturating_sub(2)))
        .min(p)
        .min(n.saturating_sub(2));
    if s_max_global < 1 {
        return Err(Error::InvalidArgument("no searchable sizes".into()));
    }
    let folds = make_folds(n, k, rng)?;

    let mut matrix: Vec<Vec<Option<f64>>> = Vec::with_capacity(k);
    for f in 0..k {
        let train_rows = folds.complement(f);
        let val_rows = folds.members(f);
        let train = design.subset_rows(&train_rows);
        let val = design.subset_rows(&val_rows);
        let y_train = DVector::from_fn(train_rows.len(), |i, _| y[train_rows[i]]);
        let y_val = DVector::from_fn(val_rows.len(), |i, _| y[val_rows[i]]);

        let mut row: Vec<Option<f64>> = vec![None; s_max_global];
        let fold_cap = s_max_global.min(train_rows.len().saturating_sub(2)).min(p);
        if fold_cap >= 1 {
            if let Ok(path) =
                best_subsets_terms_with(&train, candidates, &y_train, fold_cap, opts.strategy)
            {
                for s in 1..=fold_cap {
                    let entry = match path.path.entry(s) {
                        Some(e) if !e.flagged => e,
                        _ => continue,
                    };
                    let ts = path.candidates.subset_of_predictors(&entry.indices);
                    let fitted = match fit_terms(&train, &ts, &y_train) {
                        Ok(fm) => fm,
                        Err(_) => continue,
                    };
                    if let Ok(pred) = fitted.predict(&val) {
                        row[s - 1] = rmspe(&y_val, &pred).ok();
                    }
                }
            }
        }
        matrix.push(row);
    }

    let mut mean_by_size: Vec<Option<f64>> = Vec::with_capacity(s_max_global);
    for s in 0..s_max_global {
        let cells: Vec<f64> = matrix.iter().filter_map(|row| row[s]).collect();
        mean_by_size.push(if cells.is_empty() {
            None
        } else {
            Some(cells.iter().sum::<f64>() / cells.len() as f64)
        });
    }
    let s_star = mean_by_size
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|v| (i + 1, v)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(s, _)| s)
        .ok_or_else(|| {
            Error::SelectionFailed("every size was degenerate in every fold".into())
        })?;

    Ok(CvTrace {
        rmspe_matrix: matrix,
        mean_by_size,
        s_star,
    })
}

/// CV size selection followed by a full-data best-subsets refit at s*.
pub fn cv_select_and_refit<R: Rng>(
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
    k: usize,
    rng: &mut R,
    opts: CvOptions,
) -> Result<(FittedModel, CvTrace)> {
    let trace = cv_select_size(design, y, candidates, k, rng, opts)?;
    let path = best_subsets_terms_with(design, candidates, y, trace.s_max(), opts.strategy)?;
    let fitted = refit_full_data(design, &path, y, trace.s_star)?;
    Ok((fitted, trace))
}
