//! Symbolic regression model terms and expansion of a design into a model matrix.
//!
//! A [`Term`] is an intercept, a pure power of one factor, or a degree-1
//! interaction of two or three factors. A [`TermSet`] is an ordered list of
//! distinct terms over `m` factors; the submodel size `s` counts the
//! non-intercept terms only.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::design::Design;
use crate::error::{Error, Result};

/// Largest supported pure-polynomial degree.
pub const MAX_DEGREE: u8 = 6;

/// A single model term in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Intercept,
    /// `x_i^d` with 0-based factor index `i` and degree `d in [1, 6]`.
    Power { factor: usize, degree: u8 },
    /// Product of 2 or 3 distinct factors, each at degree 1.
    /// Indices are sorted ascending.
    Interaction { factors: Vec<usize> },
}

impl Term {
    pub fn intercept() -> Term {
        Term::Intercept
    }

    /// Main effect `x_i`.
    pub fn main(factor: usize) -> Term {
        Term::Power { factor, degree: 1 }
    }

    pub fn power(factor: usize, degree: u8) -> Result<Term> {
        if degree < 1 || degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "power degree {degree} outside [1, {MAX_DEGREE}]"
            )));
        }
        Ok(Term::Power { factor, degree })
    }

    /// Interaction of distinct factors; any input order is canonicalized.
    pub fn interaction(factors: &[usize]) -> Result<Term> {
        let mut f = factors.to_vec();
        f.sort_unstable();
        if f.len() < 2 || f.len() > 3 {
            return Err(Error::InvalidArgument(format!(
                "interaction order {} outside [2, 3]",
                f.len()
            )));
        }
        if f.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "interaction with repeated factor".into(),
            ));
        }
        Ok(Term::Interaction { factors: f })
    }

    /// Largest factor index referenced, if any.
    pub fn max_factor(&self) -> Option<usize> {
        match self {
            Term::Intercept => None,
            Term::Power { factor, .. } => Some(*factor),
            Term::Interaction { factors } => factors.last().copied(),
        }
    }

    pub fn is_intercept(&self) -> bool {
        matches!(self, Term::Intercept)
    }

    /// Evaluate the term at one design row of coded levels.
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            Term::Intercept => 1.0,
            Term::Power { factor, degree } => row[*factor].powi(*degree as i32),
            Term::Interaction { factors } => factors.iter().map(|&f| row[f]).product(),
        }
    }

    fn rank(&self) -> (u8, u8, usize, usize, usize) {
        match self {
            Term::Intercept => (0, 0, 0, 0, 0),
            Term::Power { factor, degree } => (1, *degree, *factor, 0, 0),
            Term::Interaction { factors } => {
                let a = factors[0];
                let b = factors[1];
                let c = factors.get(2).copied().unwrap_or(0);
                (2, factors.len() as u8, a, b, c)
            }
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Term) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Term) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Intercept => write!(f, "1"),
            Term::Power { factor, degree: 1 } => write!(f, "x{}", factor + 1),
            Term::Power { factor, degree } => write!(f, "x{}^{}", factor + 1, degree),
            Term::Interaction { factors } => {
                let labels: Vec<String> =
                    factors.iter().map(|&i| format!("x{}", i + 1)).collect();
                write!(f, "{}", labels.join("*"))
            }
        }
    }
}

impl std::str::FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Term> {
        let s = s.trim();
        if s == "1" {
            return Ok(Term::Intercept);
        }
        let parse_factor = |tok: &str| -> Result<usize> {
            let idx: usize = tok
                .strip_prefix('x')
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad factor token '{tok}'")))?;
            if idx == 0 {
                return Err(Error::Parse("factor indices are 1-based".into()));
            }
            Ok(idx - 1)
        };
        if s.contains('*') {
            let factors: Vec<usize> = s
                .split('*')
                .map(parse_factor)
                .collect::<Result<Vec<_>>>()?;
            Term::interaction(&factors)
        } else if let Some((base, deg)) = s.split_once('^') {
            let factor = parse_factor(base)?;
            let degree: u8 = deg
                .parse()
                .map_err(|_| Error::Parse(format!("bad degree '{deg}'")))?;
            Term::power(factor, degree)
        } else {
            Ok(Term::main(parse_factor(s)?))
        }
    }
}

/// Ordered list of distinct terms over `m` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSet {
    terms: Vec<Term>,
    m: usize,
}

impl TermSet {
    pub fn new(m: usize, terms: Vec<Term>) -> Result<TermSet> {
        for (i, t) in terms.iter().enumerate() {
            if let Some(f) = t.max_factor() {
                if f >= m {
                    return Err(Error::InvalidArgument(format!(
                        "term {t} references factor beyond m={m}"
                    )));
                }
            }
            if terms[..i].contains(t) {
                return Err(Error::InvalidArgument(format!("duplicate term {t}")));
            }
        }
        Ok(TermSet { terms, m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Submodel size `s`: the number of non-intercept terms.
    pub fn size(&self) -> usize {
        self.terms.iter().filter(|t| !t.is_intercept()).count()
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.terms.contains(t)
    }

    /// Non-intercept terms, in order.
    pub fn predictors(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| !t.is_intercept())
    }

    /// New set keeping the intercept plus the selected predictor positions
    /// (indices into `predictors()` order).
    pub fn subset_of_predictors(&self, picks: &[usize]) -> TermSet {
        let preds: Vec<&Term> = self.predictors().collect();
        let mut terms = vec![Term::Intercept];
        for &i in picks {
            terms.push(preds[i].clone());
        }
        TermSet { terms, m: self.m }
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.to_string()).collect()
    }
}

impl fmt::Display for TermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.labels().join(" + "))
    }
}

/// Intercept + m main effects + m quadratics + all two-factor interactions:
/// `1 + 2m + C(m,2)` columns.
pub fn full_second_order(m: usize) -> Result<TermSet> {
    if m < 1 {
        return Err(Error::InvalidArgument("need at least one factor".into()));
    }
    let mut terms = vec![Term::Intercept];
    for i in 0..m {
        terms.push(Term::main(i));
    }
    for i in 0..m {
        terms.push(Term::power(i, 2)?);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            terms.push(Term::interaction(&[i, j])?);
        }
    }
    TermSet::new(m, terms)
}

/// Intercept + pure powers up to degree 6 for every factor + all two- and
/// three-factor interactions. Requires `m >= 3`.
pub fn sixth_order_full(m: usize) -> Result<TermSet> {
    if m < 3 {
        return Err(Error::InvalidArgument(
            "sixth-order surface needs m >= 3 for three-factor interactions".into(),
        ));
    }
    let mut terms = vec![Term::Intercept];
    for d in 1..=MAX_DEGREE {
        for i in 0..m {
            terms.push(Term::power(i, d)?);
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            terms.push(Term::interaction(&[i, j])?);
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                terms.push(Term::interaction(&[i, j, k])?);
            }
        }
    }
    TermSet::new(m, terms)
}

/// Intercept + main effects + all two-factor interactions. Requires `m >= 2`.
pub fn main_effects_and_2fi(m: usize) -> Result<TermSet> {
    if m < 2 {
        return Err(Error::InvalidArgument("need m >= 2".into()));
    }
    let mut terms = vec![Term::Intercept];
    for i in 0..m {
        terms.push(Term::main(i));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            terms.push(Term::interaction(&[i, j])?);
        }
    }
    TermSet::new(m, terms)
}

/// Intercept + main effects only (the supersaturated-screening candidate set).
pub fn main_effects(m: usize) -> Result<TermSet> {
    if m < 1 {
        return Err(Error::InvalidArgument("need at least one factor".into()));
    }
    let mut terms = vec![Term::Intercept];
    for i in 0..m {
        terms.push(Term::main(i));
    }
    TermSet::new(m, terms)
}

/// Expand a design into the model matrix of `ts`, one column per term in
/// `ts` order.
pub fn build_model_matrix(design: &Design, ts: &TermSet) -> Result<DMatrix<f64>> {
    build_model_matrix_from(design.settings(), ts)
}

/// Same expansion over a raw n x m matrix of coded levels.
pub fn build_model_matrix_from(points: &DMatrix<f64>, ts: &TermSet) -> Result<DMatrix<f64>> {
    let (n, m) = points.shape();
    for t in ts.terms() {
        if let Some(f) = t.max_factor() {
            if f >= m {
                return Err(Error::DimensionMismatch(format!(
                    "term {t} out of range for {m} factors"
                )));
            }
        }
    }
    let mut x = DMatrix::zeros(n, ts.len());
    let mut row = vec![0.0; m];
    for r in 0..n {
        for (c, v) in row.iter_mut().enumerate() {
            *v = points[(r, c)];
        }
        for (c, t) in ts.terms().iter().enumerate() {
            x[(r, c)] = t.eval(&row);
        }
    }
    Ok(x)
}

/// Evaluate `X beta` for a term set at raw points.
pub fn eval_terms(points: &DMatrix<f64>, ts: &TermSet, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if beta.len() != ts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} terms",
            beta.len(),
            ts.len()
        )));
    }
    let x = build_model_matrix_from(points, ts)?;
    Ok(&x * beta)
}
