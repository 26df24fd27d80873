//! True-surface generators for the response-surface prediction study:
//! full second-order, reduced second-order with heredity-gated activity, and
//! a steep sixth-order surface.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::term::{
    eval_terms, full_second_order, sixth_order_full, Term, TermSet,
};

/// A polynomial truth: terms, their coefficients, and the observation noise.
#[derive(Debug, Clone)]
pub struct SurfaceSpec {
    pub terms: TermSet,
    pub coefficients: DVector<f64>,
    pub steepness: f64,
    pub noise_sd: f64,
}

/// Coefficient magnitude knobs; every constant is overridable from config.
#[derive(Debug, Clone, Copy)]
pub struct CoefScheme {
    pub mag_lo: f64,
    pub mag_hi: f64,
    /// Damping for pure polynomial terms of degree d >= 3: damp^(d-2).
    pub degree_damp: f64,
    pub three_fi_damp: f64,
}

impl Default for CoefScheme {
    fn default() -> CoefScheme {
        CoefScheme {
            mag_lo: 0.5,
            mag_hi: 3.0,
            degree_damp: 0.5,
            three_fi_damp: 0.5,
        }
    }
}

fn draw_coef<R: Rng>(term: &Term, scheme: &CoefScheme, steepness: f64, rng: &mut R) -> f64 {
    let mag = rng.random_range(scheme.mag_lo..scheme.mag_hi);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let damp = match term {
        Term::Intercept => 1.0,
        Term::Power { degree, .. } if *degree >= 3 => {
            scheme.degree_damp.powi(*degree as i32 - 2)
        }
        Term::Power { .. } => 1.0,
        Term::Interaction { factors } if factors.len() == 3 => scheme.three_fi_damp,
        Term::Interaction { .. } => 1.0,
    };
    sign * mag * damp * steepness
}

fn spec_from_active<R: Rng>(
    terms: TermSet,
    scheme: &CoefScheme,
    steepness: f64,
    noise_sd: f64,
    rng: &mut R,
) -> SurfaceSpec {
    let coefficients = DVector::from_iterator(
        terms.len(),
        terms
            .terms()
            .iter()
            .map(|t| draw_coef(t, scheme, steepness, rng)),
    );
    SurfaceSpec {
        terms,
        coefficients,
        steepness,
        noise_sd,
    }
}

/// Every second-order term active.
pub fn gen_full_second_order<R: Rng>(
    m: usize,
    rng: &mut R,
    steepness: f64,
    noise_sd: f64,
    scheme: &CoefScheme,
) -> Result<SurfaceSpec> {
    let terms = full_second_order(m)?;
    Ok(spec_from_active(terms, scheme, steepness, noise_sd, rng))
}

/// Activity probabilities for the reduced second-order generator.
#[derive(Debug, Clone, Copy)]
pub struct ActivityProbs {
    pub p_me: f64,
    /// P(2FI active) given at least one active parent (weak heredity).
    pub p_2fi: f64,
    /// P(quadratic active) given its linear parent active (strong heredity).
    pub p_quad: f64,
}

impl Default for ActivityProbs {
    fn default() -> ActivityProbs {
        ActivityProbs {
            p_me: 0.41,
            p_2fi: 0.11,
            p_quad: 0.10,
        }
    }
}

/// Sparse second-order truth with heredity gating. Draws with no active main
/// effect are rejected and resampled; the resample count is returned.
pub fn gen_reduced_second_order<R: Rng>(
    m: usize,
    rng: &mut R,
    probs: &ActivityProbs,
    steepness: f64,
    noise_sd: f64,
    scheme: &CoefScheme,
) -> Result<(SurfaceSpec, usize)> {
    if m < 2 {
        return Err(Error::InvalidArgument("need m >= 2".into()));
    }
    let mut resamples = 0usize;
    loop {
        let me_active: Vec<bool> = (0..m).map(|_| rng.random::<f64>() < probs.p_me).collect();
        if !me_active.iter().any(|&a| a) {
            resamples += 1;
            if resamples > 10_000 {
                return Err(Error::SelectionFailed(
                    "could not draw an active main effect".into(),
                ));
            }
            continue;
        }
        let mut terms = vec![Term::Intercept];
        for f in 0..m {
            if me_active[f] {
                terms.push(Term::power(f, 1)?);
            }
        }
        for f in 0..m {
            if me_active[f] && rng.random::<f64>() < probs.p_quad {
                terms.push(Term::power(f, 2)?);
            }
        }
        for a in 0..m {
            for b in (a + 1)..m {
                if (me_active[a] || me_active[b]) && rng.random::<f64>() < probs.p_2fi {
                    terms.push(Term::interaction(&[a, b])?);
                }
            }
        }
        let ts = TermSet::new(m, terms)?;
        return Ok((spec_from_active(ts, scheme, steepness, noise_sd, rng), resamples));
    }
}

/// All pure polynomial terms up to degree six plus all 2FIs and 3FIs.
pub fn gen_sixth_order<R: Rng>(
    m: usize,
    rng: &mut R,
    steepness: f64,
    noise_sd: f64,
    scheme: &CoefScheme,
) -> Result<SurfaceSpec> {
    let terms = sixth_order_full(m)?;
    Ok(spec_from_active(terms, scheme, steepness, noise_sd, rng))
}

impl SurfaceSpec {
    /// Noiseless surface values at the given coded points.
    pub fn truth_at(&self, points: &DMatrix<f64>) -> Result<DVector<f64>> {
        eval_terms(points, &self.terms, &self.coefficients)
    }

    /// Xb + noise with sd `noise_sd`.
    pub fn observe<R: Rng>(&self, points: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let mut y = self.truth_at(points)?;
        if self.noise_sd > 0.0 {
            for i in 0..y.len() {
                let z: f64 = StandardNormal.sample(rng);
                y[i] += self.noise_sd * z;
            }
        }
        Ok(y)
    }

    /// Text archive: one `label,coefficient` line per term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, c) in self.terms.terms().iter().zip(self.coefficients.iter()) {
            out.push_str(&format!("{t},{c}\n"));
        }
        out
    }

    pub fn non_intercept_count(&self) -> usize {
        self.terms.size()
    }
}

/// n points drawn i.i.d. U(-1, 1)^m, for out-of-sample evaluation.
pub fn uniform_points<R: Rng>(n: usize, m: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}
