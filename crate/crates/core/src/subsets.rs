//! Exact best-subsets regression: for each size s, the predictor subset with
//! minimal residual sum of squares.
//!
//! Two exact engines share the same centered-Gram preprocessing (the
//! intercept is always in the model, realized by centering):
//!
//! * a forward exhaustive enumeration with incremental Gram-Schmidt updates,
//!   used when the total subset count up to `s_max` is small enough; and
//! * a branch-and-bound over the sweep operator in the style of the classic
//!   leaps algorithm, used for full-path searches where enumeration is
//!   intractable. Its pruning bound is the RSS of the union of undecided and
//!   forced-in columns, which lower-bounds the RSS of every subset below a
//!   node.
//!
//! Tie-breaking: among subsets whose RSS differ by less than 1e-12 relative
//! to the total sum of squares, the lexicographically smallest index list is
//! preferred (the branch-and-bound may prune exact ties and then keeps the
//! lexicographically smallest among those it visits).

use nalgebra::{DMatrix, DVector};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::ols::{fit_terms, FittedModel};
use crate::term::{build_model_matrix, TermSet};

/// Relative threshold on a column's residual squared norm below which the
/// column is treated as aliased with the current subset.
const ALIAS_TOL: f64 = 1e-12;

/// Node budget under which the forward exhaustive engine is preferred.
const FORWARD_NODE_LIMIT: f64 = 4.0e6;


/// Best subset found for one size.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEntry {
    /// Candidate-column indices, sorted ascending.
    pub indices: Vec<usize>,
    pub rss: f64,
    /// True when the subset is rank deficient (RSS from the pivoted rank-r
    /// fit) or when the response was constant.
    pub flagged: bool,
}

/// Best subsets for sizes 1..=s_max.
#[derive(Debug, Clone)]
pub struct SubsetPath {
    per_size: Vec<SubsetEntry>,
}

impl SubsetPath {
    /// Entry for size s (1-based).
    pub fn entry(&self, s: usize) -> Option<&SubsetEntry> {
        if s == 0 {
            return None;
        }
        self.per_size.get(s - 1)
    }

    pub fn s_max(&self) -> usize {
        self.per_size.len()
    }

    pub fn entries(&self) -> &[SubsetEntry] {
        &self.per_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Pick forward enumeration when the subset count allows, else
    /// branch-and-bound.
    Auto,
    ForwardExhaustive,
    BranchAndBound,
}

/// Exact best-subsets path over the columns of `x` (candidate predictors,
/// no intercept column; the intercept is implicit). `s_max` must satisfy
/// `1 <= s_max <= min(p, n - 2)`.
pub fn best_subsets_path(x: &DMatrix<f64>, y: &DVector<f64>, s_max: usize) -> Result<SubsetPath> {
    best_subsets_path_with(x, y, s_max, Strategy::Auto)
}

pub fn best_subsets_path_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    s_max: usize,
    strategy: Strategy,
) -> Result<SubsetPath> {
    best_subsets_path_seeded(x, y, s_max, strategy, &[])
}

/// Like [`best_subsets_path_with`], with warm-start subsets whose RSS seeds
/// the branch-and-bound incumbents (useful when a near-optimal path is known,
/// e.g. from the full data when searching a cross-validation fold). Seeds do
/// not affect the forward engine and never change which subsets are optimal.
pub fn best_subsets_path_seeded(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    s_max: usize,
    strategy: Strategy,
    seeds: &[Vec<usize>],
) -> Result<SubsetPath> {
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
    if p > 63 {
        return Err(Error::InvalidArgument(format!(
            "best subsets supports at most 63 candidate columns, got {p}"
        )));
    }
    if s_max < 1 || s_max > p.min(n - 2) {
        return Err(Error::InvalidArgument(format!(
            "s_max={s_max} outside [1, min(p={p}, n-2={})]",
            n - 2
        )));
    }

    let prob = GramProblem::new(x, y);
    if prob.constant_y {
        // Every subset ties; return the lexicographically first of each
        // size, flagged.
        let per_size = (1..=s_max)
            .map(|s| SubsetEntry {
                indices: (0..s).collect(),
                rss: prob.yy.max(0.0),
                flagged: true,
            })
            .collect();
        return Ok(SubsetPath { per_size });
    }

    let use_forward = match strategy {
        Strategy::ForwardExhaustive => true,
        Strategy::BranchAndBound => false,
        Strategy::Auto => forward_node_count(p, s_max) <= FORWARD_NODE_LIMIT,
    };
    let best = if use_forward {
        ForwardSearch::new(&prob, s_max).run()
    } else {
        let mut bb = BranchAndBound::new(&prob, s_max);
        bb.apply_seeds(seeds);
        bb.run()
    };
    let per_size = best
        .into_iter()
        .map(|b| b.expect("every size is filled by the search"))
        .collect();
    Ok(SubsetPath { per_size })
}

fn forward_node_count(p: usize, s_max: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    for s in 1..=s_max {
        c *= (p - s + 1) as f64 / s as f64;
        total += c;
        if total > 1e18 {
            break;
        }
    }
    total
}

/// Centered sufficient statistics shared by both engines.
struct GramProblem {
    p: usize,
    g: DMatrix<f64>,
    gy: DVector<f64>,
    yy: f64,
    /// Aliasing thresholds per column, relative to the centered column norm.
    d_tol: Vec<f64>,
    tie_eps: f64,
    constant_y: bool,
}

impl GramProblem {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> GramProblem {
        let (n, p) = x.shape();
        let mut xc = x.clone();
        for j in 0..p {
            let mean = xc.column(j).sum() / n as f64;
            for i in 0..n {
                xc[(i, j)] -= mean;
            }
        }
        let ymean = y.sum() / n as f64;
        let yc = DVector::from_fn(n, |i, _| y[i] - ymean);
        let g = xc.transpose() * &xc;
        let gy = xc.transpose() * &yc;
        let yy = yc.dot(&yc);
        let y_raw_ss: f64 = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
        let constant_y = yy <= 1e-24 * y_raw_ss;
        let d_tol = (0..p)
            .map(|j| ALIAS_TOL * g[(j, j)].max(f64::MIN_POSITIVE))
            .collect();
        GramProblem {
            p,
            g,
            gy,
            yy,
            d_tol,
            tie_eps: 1e-12 * yy.max(f64::MIN_POSITIVE),
            constant_y,
        }
    }
}

type Best = Vec<Option<SubsetEntry>>;

fn lex_less(a: &[usize], b: &[usize]) -> bool {
    a < b
}

fn update_best(best: &mut Best, tie_eps: f64, size: usize, rss: f64, indices: &[usize], flagged: bool) {
    let slot = &mut best[size - 1];
    let replace = match slot {
        None => true,
        Some(cur) => {
            rss < cur.rss - tie_eps
                || ((rss - cur.rss).abs() <= tie_eps && lex_less(indices, &cur.indices))
        }
    };
    if replace {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        *slot = Some(SubsetEntry { indices: idx, rss: rss.max(0.0), flagged });
    }
}

// ---------------------------------------------------------------------------
// Forward exhaustive enumeration.
// ---------------------------------------------------------------------------

struct LevelBuf {
    /// Residual squared norms of every candidate given the current subset.
    d: Vec<f64>,
    /// Residual covariances with y.
    gt: Vec<f64>,
    rss: f64,
    /// Orthonormalized Gram column of the variable that created this level.
    u: Vec<f64>,
    flagged: bool,
}

struct ForwardSearch<'a> {
    prob: &'a GramProblem,
    s_max: usize,
    levels: Vec<LevelBuf>,
    path: Vec<usize>,
    best: Best,
}

impl<'a> ForwardSearch<'a> {
    fn new(prob: &'a GramProblem, s_max: usize) -> ForwardSearch<'a> {
        let p = prob.p;
        let levels = (0..=s_max)
            .map(|_| LevelBuf {
                d: vec![0.0; p],
                gt: vec![0.0; p],
                rss: 0.0,
                u: vec![0.0; p],
                flagged: false,
            })
            .collect();
        ForwardSearch {
            prob,
            s_max,
            levels,
            path: Vec::with_capacity(s_max),
            best: vec![None; s_max],
        }
    }

    fn run(mut self) -> Best {
        let p = self.prob.p;
        {
            let l0 = &mut self.levels[0];
            for j in 0..p {
                l0.d[j] = self.prob.g[(j, j)];
                l0.gt[j] = self.prob.gy[j];
            }
            l0.rss = self.prob.yy;
            l0.flagged = false;
        }
        self.dfs(0, 0);
        self.best
    }

    fn dfs(&mut self, level: usize, start: usize) {
        let p = self.prob.p;
        for j in start..p {
            let (d_j, gt_j, rss, flagged) = {
                let cur = &self.levels[level];
                (cur.d[j], cur.gt[j], cur.rss, cur.flagged)
            };
            let aliased = d_j <= self.prob.d_tol[j];
            let rss_new = if aliased { rss } else { rss - gt_j * gt_j / d_j };
            self.path.push(j);
            update_best(
                &mut self.best,
                self.prob.tie_eps,
                level + 1,
                rss_new,
                &self.path,
                flagged || aliased,
            );
            if level + 1 < self.s_max && j + 1 < p {
                self.descend(level, j, aliased, rss_new);
                self.dfs(level + 1, j + 1);
            }
            self.path.pop();
        }
    }

    /// Fill level+1 buffers from level by orthogonalizing against column j.
    fn descend(&mut self, level: usize, j: usize, aliased: bool, rss_new: f64) {
        let p = self.prob.p;
        let (head, tail) = self.levels.split_at_mut(level + 1);
        let cur = &head[level];
        let nxt = &mut tail[0];
        nxt.flagged = cur.flagged || aliased;
        if aliased {
            // Adding an aliased column leaves the residual space unchanged.
            nxt.d[(j + 1)..p].copy_from_slice(&cur.d[(j + 1)..p]);
            nxt.gt[(j + 1)..p].copy_from_slice(&cur.gt[(j + 1)..p]);
            nxt.rss = cur.rss;
            for l in (j + 1)..p {
                nxt.u[l] = 0.0;
            }
            return;
        }
        let inv_sqrt_d = 1.0 / cur.d[j].sqrt();
        let w = cur.gt[j] * inv_sqrt_d;
        // u_j coordinates of ancestor directions, then the new direction.
        for l in (j + 1)..p {
            let mut v = self.prob.g[(l, j)];
            for anc in head[1..=level].iter() {
                v -= anc.u[l] * anc.u[j];
            }
            let u = v * inv_sqrt_d;
            nxt.u[l] = u;
            nxt.d[l] = cur.d[l] - u * u;
            nxt.gt[l] = cur.gt[l] - u * w;
        }
        nxt.u[j] = cur.d[j].sqrt();
        nxt.rss = rss_new;
    }
}

// ---------------------------------------------------------------------------
// Branch-and-bound over the sweep operator.
// ---------------------------------------------------------------------------

struct BranchAndBound<'a> {
    prob: &'a GramProblem,
    s_max: usize,
    best: Best,
    /// Augmented dimension: p candidate rows plus the response row.
    dim: usize,
}

#[derive(Clone)]
struct SweepState {
    a: DMatrix<f64>,
    /// Columns currently swept in.
    swept: u64,
    /// Union members that could not be swept (aliased).
    aliased: u64,
}

impl<'a> BranchAndBound<'a> {
    fn new(prob: &'a GramProblem, s_max: usize) -> BranchAndBound<'a> {
        BranchAndBound {
            prob,
            s_max,
            best: vec![None; s_max],
            dim: prob.p + 1,
        }
    }

    fn initial_state(&self) -> SweepState {
        let p = self.prob.p;
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for i in 0..p {
            for j in 0..p {
                a[(i, j)] = self.prob.g[(i, j)];
            }
            a[(i, p)] = self.prob.gy[i];
            a[(p, i)] = self.prob.gy[i];
        }
        a[(p, p)] = self.prob.yy;
        SweepState { a, swept: 0, aliased: 0 }
    }

    /// Sweep pivot k, touching only rows and columns in `scope` (live union
    /// members plus the response row). Rows of removed variables are never
    /// read again, so skipping them is safe and keeps the update quadratic
    /// in the live dimension.
    fn sweep(&self, st: &mut SweepState, k: usize, scope: u64) {
        let d = st.a[(k, k)];
        let mut idx = [0usize; 65];
        let mut nn = 0;
        let mut bits = scope & !(1u64 << k);
        while bits != 0 {
            idx[nn] = bits.trailing_zeros() as usize;
            nn += 1;
            bits &= bits - 1;
        }
        for &i in &idx[..nn] {
            let aik = st.a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            let scale = aik / d;
            for &j in &idx[..nn] {
                st.a[(i, j)] -= scale * st.a[(k, j)];
            }
        }
        for &i in &idx[..nn] {
            st.a[(i, k)] /= d;
            st.a[(k, i)] /= d;
        }
        st.a[(k, k)] = -1.0 / d;
        st.swept ^= 1 << k;
    }

    fn scope_of(&self, union: u64) -> u64 {
        union | (1u64 << self.prob.p)
    }

    fn full_scope(&self) -> u64 {
        self.scope_of((1u64 << self.prob.p) - 1)
    }

    /// Sweep k in if estimable, else record it as aliased.
    fn sweep_in(&self, st: &mut SweepState, k: usize, scope: u64) {
        if st.a[(k, k)] > self.prob.d_tol[k] {
            self.sweep(st, k, scope);
            st.aliased &= !(1u64 << k);
        } else {
            st.aliased |= 1 << k;
        }
    }

    /// Sweep k out of the model and retry aliased union members that may
    /// have become estimable.
    fn sweep_out(&self, st: &mut SweepState, k: usize, union: u64) {
        let scope = self.scope_of(union) | (1u64 << k);
        if st.swept >> k & 1 == 1 {
            self.sweep(st, k, scope);
        }
        st.aliased &= !(1u64 << k);
        let scope = self.scope_of(union);
        let mut retry = st.aliased & union;
        while retry != 0 {
            let mut progressed = false;
            let mut bits = retry;
            while bits != 0 {
                let l = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if st.a[(l, l)] > self.prob.d_tol[l] {
                    self.sweep(st, l, scope);
                    st.aliased &= !(1u64 << l);
                    progressed = true;
                }
            }
            retry = st.aliased & union;
            if !progressed {
                break;
            }
        }
    }

    fn rss(&self, st: &SweepState) -> f64 {
        st.a[(self.prob.p, self.prob.p)].max(0.0)
    }

    fn removal_cost(&self, st: &SweepState, j: usize) -> f64 {
        if st.swept >> j & 1 == 0 {
            return 0.0;
        }
        let p = self.prob.p;
        let b = st.a[(j, p)];
        // Diagonal of a swept column is -1/d with d > 0.
        (-(b * b) / st.a[(j, j)]).max(0.0)
    }

    /// Eigenvalue sum bound: removing T raises RSS by b_T' (M_TT)^{-1} b_T
    /// with M the swept (inverse-Gram) block. Scaling by sqrt(diag(M)) turns
    /// that quadratic form into c' R^{-1} c with c_j^2 = cost_j and R the
    /// correlation version of M, so by eigenvalue interlacing the increase is
    /// at least (sum of the k smallest costs) / lambda_max(R_FF).
    /// `costs` must be sorted ascending; returns e[k] indexed by removal
    /// count, with lambda_max bounded by its Gershgorin row sum.
    fn eigsum_bounds(&self, st: &SweepState, costs: &[(f64, usize)]) -> Vec<f64> {
        let f = costs.len();
        let swept: Vec<usize> = costs
            .iter()
            .map(|&(_, j)| j)
            .filter(|&j| st.swept >> j & 1 == 1)
            .collect();
        let inv_sqrt_d: Vec<f64> = swept.iter().map(|&j| 1.0 / (-st.a[(j, j)]).sqrt()).collect();
        let mut gersh = 0.0f64;
        let mut r_max = 0.0f64;
        for (a, &j) in swept.iter().enumerate() {
            let mut row = 0.0;
            for (b, &l) in swept.iter().enumerate() {
                let r = st.a[(j, l)].abs() * inv_sqrt_d[a] * inv_sqrt_d[b];
                row += r;
                if b != a {
                    r_max = r_max.max(r);
                }
            }
            gersh = gersh.max(row);
        }
        let mut e = vec![0.0; f + 1];
        if gersh > 0.0 {
            let mut acc = 0.0;
            for k in 1..=f {
                acc += costs[k - 1].0;
                // Gershgorin applies to any principal submatrix too, so a
                // k-subset's row sums are at most 1 + (k - 1) r_max.
                let lam_ub = gersh.min(1.0 + (k - 1) as f64 * r_max);
                e[k] = acc / lam_ub;
            }
        }
        e
    }

    fn improvable(&self, bound: f64, lo: usize, hi: usize) -> bool {
        let lo = lo.max(1);
        if lo > hi {
            return false;
        }
        for s in lo..=hi {
            match &self.best[s - 1] {
                None => return true,
                Some(cur) => {
                    if bound < cur.rss {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Size-aware bound: reaching size s from a node of size `count` removes
    /// at least `count - s` of the remaining free variables, and the removed
    /// set's costliest member is at least the (count - s)-th smallest free
    /// removal cost, so RSS >= rss + rem[count - s - 1].
    fn improvable_sized(
        &self,
        rss: f64,
        rem: &[(f64, usize)],
        e: &[f64],
        count: usize,
        lo: usize,
        hi: usize,
    ) -> bool {
        for s in lo..=hi {
            let k = count - s;
            debug_assert!(k >= 1 && k <= rem.len());
            // q and e are over the whole free set (a superset of rem), so
            // they stay valid, if weaker, bounds along the suffix.
            let bound = rss + rem[k - 1].0.max(e[k]);
            match &self.best[s - 1] {
                None => return true,
                Some(cur) => {
                    if bound < cur.rss {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn record(&mut self, st: &SweepState, union: u64) {
        let size = union.count_ones() as usize;
        if size == 0 || size > self.s_max {
            return;
        }
        let indices: Vec<usize> = (0..self.prob.p).filter(|&j| union >> j & 1 == 1).collect();
        let rss = self.rss(st);
        update_best(
            &mut self.best,
            self.prob.tie_eps,
            size,
            rss,
            &indices,
            st.aliased & union != 0,
        );
    }

    /// Install caller-provided warm-start subsets as incumbents. Each seed's
    /// RSS is computed exactly from the Gram system; rank-deficient seeds are
    /// skipped.
    fn apply_seeds(&mut self, seeds: &[Vec<usize>]) {
        for seed in seeds {
            let s = seed.len();
            if s == 0 || s > self.s_max || seed.iter().any(|&j| j >= self.prob.p) {
                continue;
            }
            let g_tt = DMatrix::from_fn(s, s, |a, b| self.prob.g[(seed[a], seed[b])]);
            let gy_t = DVector::from_fn(s, |a, _| self.prob.gy[seed[a]]);
            let Some(chol) = g_tt.cholesky() else { continue };
            let beta = chol.solve(&gy_t);
            let rss = (self.prob.yy - gy_t.dot(&beta)).max(0.0);
            update_best(&mut self.best, self.prob.tie_eps, s, rss, seed, false);
        }
    }

    /// Greedy forward pass to seed upper bounds for every size.
    fn seed_greedy(&mut self) {
        let p = self.prob.p;
        let mut st = self.initial_state();
        let mut union: u64 = 0;
        for _ in 0..self.s_max {
            let mut best_j = None;
            let mut best_gain = -1.0;
            for j in 0..p {
                if union >> j & 1 == 1 {
                    continue;
                }
                let d = st.a[(j, j)];
                let gain = if d > self.prob.d_tol[j] {
                    let b = st.a[(j, p)];
                    b * b / d
                } else {
                    0.0
                };
                if gain > best_gain {
                    best_gain = gain;
                    best_j = Some(j);
                }
            }
            let j = best_j.expect("candidate available");
            union |= 1 << j;
            let scope = self.full_scope();
            self.sweep_in(&mut st, j, scope);
            self.record(&st, union);
        }
    }

    fn run(mut self) -> Best {
        self.seed_greedy();
        let st = {
            let mut st = self.initial_state();
            let scope = self.full_scope();
            for k in 0..self.prob.p {
                self.sweep_in(&mut st, k, scope);
            }
            st
        };
        let union = (1u64 << self.prob.p) - 1;
        self.dfs(st, 0, union);
        self.best
    }

    fn dfs(&mut self, st: SweepState, mut forced: u64, union: u64) {
        self.record(&st, union);
        let rss = self.rss(&st);
        let count = union.count_ones() as usize;
        let hi = self.s_max.min(count.saturating_sub(1));
        if hi == 0 {
            return;
        }
        // Removal costs of the free variables, ascending, so low-RSS small
        // models surface early and the order-statistic bound applies to the
        // remaining suffix.
        let mut costs: Vec<(f64, usize)> = Vec::new();
        let mut bits = union & !forced;
        while bits != 0 {
            let l = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            costs.push((self.removal_cost(&st, l), l));
        }
        costs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let e = self.eigsum_bounds(&st, &costs);
        for (i, &(jcost, j)) in costs.iter().enumerate() {
            let rem = &costs[i..];
            let lo = (forced.count_ones() as usize).max(1).max(count - rem.len());
            // Bounds only tighten along the suffix, so a failed check ends
            // the whole node.
            if lo > hi || !self.improvable_sized(rss, rem, &e, count, lo, hi) {
                return;
            }
            let child_union = union & !(1u64 << j);
            // rss + jcost is the child's exact RSS, covering the child node
            // and bounding everything below it.
            if self.improvable(rss + jcost, forced.count_ones() as usize, hi) {
                let mut child = st.clone();
                self.sweep_out(&mut child, j, child_union);
                self.dfs(child, forced, child_union);
            }
            forced |= 1 << j;
        }
    }
}

// ---------------------------------------------------------------------------
// Term-level wrappers.
// ---------------------------------------------------------------------------

/// A subsets path bound to a candidate term set.
#[derive(Debug, Clone)]
pub struct TermSubsetPath {
    pub candidates: TermSet,
    pub path: SubsetPath,
}

impl TermSubsetPath {
    /// Term set (intercept included) of the best subset of size s.
    pub fn term_set(&self, s: usize) -> Option<TermSet> {
        self.path
            .entry(s)
            .map(|e| self.candidates.subset_of_predictors(&e.indices))
    }
}

/// Best-subsets path over the non-intercept terms of `candidates`.
pub fn best_subsets_terms(
    design: &Design,
    candidates: &TermSet,
    y: &DVector<f64>,
    s_max: usize,
) -> Result<TermSubsetPath> {
    best_subsets_terms_with(design, candidates, y, s_max, Strategy::Auto)
}

pub fn best_subsets_terms_with(
    design: &Design,
    candidates: &TermSet,
    y: &DVector<f64>,
    s_max: usize,
    strategy: Strategy,
) -> Result<TermSubsetPath> {
    let x = predictor_matrix(design, candidates)?;
    let path = best_subsets_path_with(&x, y, s_max, strategy)?;
    Ok(TermSubsetPath {
        candidates: candidates.clone(),
        path,
    })
}

/// Model matrix of the non-intercept candidate terms.
pub fn predictor_matrix(design: &Design, candidates: &TermSet) -> Result<DMatrix<f64>> {
    let full = build_model_matrix(design, candidates)?;
    let keep: Vec<usize> = candidates
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_intercept())
        .map(|(i, _)| i)
        .collect();
    Ok(DMatrix::from_fn(design.n(), keep.len(), |r, c| {
        full[(r, keep[c])]
    }))
}

/// Refit the size-`s_star` best subset on the full data by OLS.
pub fn refit_full_data(
    design: &Design,
    path: &TermSubsetPath,
    y: &DVector<f64>,
    s_star: usize,
) -> Result<FittedModel> {
    let ts = path.term_set(s_star).ok_or_else(|| {
        Error::InvalidArgument(format!("size {s_star} outside the searched path"))
    })?;
    fit_terms(design, &ts, y)
}
