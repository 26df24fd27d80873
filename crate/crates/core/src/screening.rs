//! True-model generators for the screening and supersaturated-design power
//! studies, plus the shared response realizer (unit-variance noise).

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::term::{build_model_matrix, Term, TermSet};

pub const SCREENING_MAGNITUDES: [f64; 4] = [2.0, 2.5, 3.0, 3.5];

/// Active MEs and 2FIs with signed magnitudes; weak heredity by construction.
#[derive(Debug, Clone)]
pub struct ScreeningTruth {
    pub active_terms: TermSet,
    /// Signed coefficient per non-intercept active term, in term order.
    pub beta: Vec<f64>,
}

impl ScreeningTruth {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, b) in self.active_terms.predictors().zip(self.beta.iter()) {
            out.push_str(&format!("{t},{b}\n"));
        }
        out
    }
}

fn sample_without_replacement<R: Rng>(pool: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    let mut items = pool.to_vec();
    for i in 0..k {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
    let mut out = items[..k].to_vec();
    out.sort_unstable();
    out
}

/// Sample n_me active main effects, then n_2fi interactions uniformly from
/// the pairs with at least one active parent; magnitudes uniform on
/// {2, 2.5, 3, 3.5}, signs uniform.
pub fn gen_screening_truth<R: Rng>(
    m: usize,
    n_me: usize,
    n_2fi: usize,
    rng: &mut R,
) -> Result<ScreeningTruth> {
    if n_me > m || n_me == 0 {
        return Err(Error::InvalidArgument(format!(
            "n_me={n_me} infeasible for m={m}"
        )));
    }
    let factors: Vec<usize> = (0..m).collect();
    let mes = sample_without_replacement(&factors, n_me, rng);
    let active = |f: usize| mes.binary_search(&f).is_ok();

    let mut eligible: Vec<(usize, usize)> = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            if active(a) || active(b) {
                eligible.push((a, b));
            }
        }
    }
    if n_2fi > eligible.len() {
        return Err(Error::InvalidArgument(format!(
            "n_2fi={n_2fi} exceeds the {} weak-heredity pairs",
            eligible.len()
        )));
    }
    let pair_idx = sample_without_replacement(
        &(0..eligible.len()).collect::<Vec<_>>(),
        n_2fi,
        rng,
    );

    let mut terms = vec![Term::Intercept];
    for &f in &mes {
        terms.push(Term::main(f));
    }
    for &k in &pair_idx {
        let (a, b) = eligible[k];
        terms.push(Term::interaction(&[a, b])?);
    }
    let active_terms = TermSet::new(m, terms)?;
    let beta: Vec<f64> = (0..active_terms.size())
        .map(|_| {
            let mag = SCREENING_MAGNITUDES[rng.random_range(0..4)];
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Ok(ScreeningTruth { active_terms, beta })
}

/// Active main effects of a supersaturated-design scenario.
#[derive(Debug, Clone)]
pub struct SsdTruth {
    /// Sampled factor indices, in sample order (magnitudes map in order).
    pub active_mes: Vec<usize>,
    /// Signed coefficients, aligned with `active_mes`.
    pub mu: Vec<f64>,
}

impl SsdTruth {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (f, b) in self.active_mes.iter().zip(self.mu.iter()) {
            out.push_str(&format!("x{},{b}\n", f + 1));
        }
        out
    }
}

/// Magnitude lists for scenarios 1-4.
pub fn ssd_scenario_magnitudes(scenario_id: usize) -> Result<Vec<f64>> {
    match scenario_id {
        1 => Ok(vec![3.0; 3]),
        2 => Ok(vec![4.0; 4]),
        3 => Ok(vec![6.0; 6]),
        4 => Ok(vec![10.0, 8.0, 5.0, 3.0, 2.0, 2.0, 2.0, 2.0, 2.0]),
        _ => Err(Error::InvalidArgument(format!(
            "scenario {scenario_id} outside 1..=4"
        ))),
    }
}

/// Sample the scenario's `a` factors uniformly; magnitudes map to factors in
/// sample order; signs random unless `random_signs` is off.
pub fn gen_ssd_truth<R: Rng>(
    m: usize,
    scenario_id: usize,
    random_signs: bool,
    rng: &mut R,
) -> Result<SsdTruth> {
    let mags = ssd_scenario_magnitudes(scenario_id)?;
    let a = mags.len();
    if a > m {
        return Err(Error::InvalidArgument(format!(
            "scenario {scenario_id} needs {a} factors, design has {m}"
        )));
    }
    // keep sample order (no sort): scenario 4 magnitudes map in this order
    let mut items: Vec<usize> = (0..m).collect();
    for i in 0..a {
        let j = rng.random_range(i..m);
        items.swap(i, j);
    }
    let active_mes = items[..a].to_vec();
    let mu = mags
        .into_iter()
        .map(|mag| {
            if random_signs && rng.random::<bool>() {
                -mag
            } else {
                mag
            }
        })
        .collect();
    Ok(SsdTruth { active_mes, mu })
}

impl SsdTruth {
    pub fn term_set(&self, m: usize) -> Result<TermSet> {
        let mut terms = vec![Term::Intercept];
        for &f in &self.active_mes {
            terms.push(Term::main(f));
        }
        TermSet::new(m, terms)
    }
}

/// y = X_active beta + eps with eps ~ N(0, 1); the truth's intercept is 0.
pub fn realize_screening_response<R: Rng>(
    truth: &ScreeningTruth,
    design: &Design,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let x = build_model_matrix(design, &truth.active_terms)?;
    let mut y = DVector::zeros(design.n());
    for (k, _) in truth
        .active_terms
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_intercept())
    {
        let b = truth.beta[k - 1];
        for i in 0..design.n() {
            y[i] += b * x[(i, k)];
        }
    }
    for i in 0..design.n() {
        let z: f64 = StandardNormal.sample(rng);
        y[i] += z;
    }
    Ok(y)
}

pub fn realize_ssd_response<R: Rng>(
    truth: &SsdTruth,
    design: &Design,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let m = design.m();
    for &f in &truth.active_mes {
        if f >= m {
            return Err(Error::DimensionMismatch(format!(
                "active factor x{} outside design with m={m}",
                f + 1
            )));
        }
    }
    let s = design.settings();
    let mut y = DVector::zeros(design.n());
    for (k, &f) in truth.active_mes.iter().enumerate() {
        for i in 0..design.n() {
            y[i] += truth.mu[k] * s[(i, f)];
        }
    }
    for i in 0..design.n() {
        let z: f64 = StandardNormal.sample(rng);
        y[i] += z;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::random_ssd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn active_factors(t: &ScreeningTruth) -> Vec<usize> {
        t.active_terms
            .terms()
            .iter()
            .filter_map(|t| match t {
                Term::Power { factor, degree: 1 } => Some(*factor),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn screening_truth_shape_and_magnitudes() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let t = gen_screening_truth(7, 2, 2, &mut rng).unwrap();
        assert_eq!(t.active_terms.size(), 4);
        assert_eq!(active_factors(&t).len(), 2);
        for b in &t.beta {
            assert!(SCREENING_MAGNITUDES.contains(&b.abs()), "beta {b}");
        }
    }

    #[test]
    fn screening_weak_heredity_always() {
        for seed in 0..500u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let t = gen_screening_truth(7, 2, 4, &mut rng).unwrap();
            let mes = active_factors(&t);
            for term in t.active_terms.terms() {
                if let Term::Interaction { factors } = term {
                    assert!(factors.iter().any(|f| mes.contains(f)));
                }
            }
        }
    }

    #[test]
    fn screening_all_me_makes_all_pairs_eligible() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let t = gen_screening_truth(5, 5, 10, &mut rng).unwrap();
        assert_eq!(t.active_terms.size(), 15);
    }

    #[test]
    fn screening_magnitude_frequencies_uniform() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut counts = [0usize; 4];
        let mut total = 0usize;
        for _ in 0..10_000 {
            let t = gen_screening_truth(7, 2, 2, &mut rng).unwrap();
            for b in &t.beta {
                let k = SCREENING_MAGNITUDES
                    .iter()
                    .position(|m| *m == b.abs())
                    .unwrap();
                counts[k] += 1;
                total += 1;
            }
        }
        let se = (0.25 * 0.75 / total as f64).sqrt();
        for c in counts {
            let freq = c as f64 / total as f64;
            assert!((freq - 0.25).abs() < 3.0 * se, "freq {freq}");
        }
    }

    #[test]
    fn screening_infeasible_2fi_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        // m=3, 1 active ME: eligible pairs = 2 < 3
        assert!(gen_screening_truth(3, 1, 3, &mut rng).is_err());
    }

    #[test]
    fn ssd_scenarios() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let t2 = gen_ssd_truth(24, 2, true, &mut rng).unwrap();
        assert_eq!(t2.active_mes.len(), 4);
        assert!(t2.mu.iter().all(|b| b.abs() == 4.0));

        let t4 = gen_ssd_truth(24, 4, true, &mut rng).unwrap();
        let mut mags: Vec<f64> = t4.mu.iter().map(|b| b.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(mags, vec![10.0, 8.0, 5.0, 3.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        // magnitudes map in sample order
        assert_eq!(t4.mu[0].abs(), 10.0);

        assert!(gen_ssd_truth(24, 5, true, &mut rng).is_err());
        assert!(gen_ssd_truth(24, 0, true, &mut rng).is_err());
        assert!(gen_ssd_truth(4, 3, true, &mut rng).is_err()); // a=3 ok, a<=m... m=4 fine
    }

    #[test]
    fn ssd_truth_deterministic_and_signs() {
        let a = gen_ssd_truth(24, 1, true, &mut ChaCha12Rng::seed_from_u64(6)).unwrap();
        let b = gen_ssd_truth(24, 1, true, &mut ChaCha12Rng::seed_from_u64(6)).unwrap();
        assert_eq!(a.active_mes, b.active_mes);
        assert_eq!(a.mu, b.mu);

        let c = gen_ssd_truth(24, 1, false, &mut ChaCha12Rng::seed_from_u64(7)).unwrap();
        assert!(c.mu.iter().all(|b| *b == 3.0));
    }

    #[test]
    fn realize_zero_truth_pure_noise() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let d = random_ssd(14, 24, 200, &mut rng).unwrap();
        let truth = SsdTruth {
            active_mes: vec![],
            mu: vec![],
        };
        let mut draws = Vec::new();
        for _ in 0..100_000 / 14 {
            let y = realize_ssd_response(&truth, &d, &mut rng).unwrap();
            draws.extend(y.iter().copied());
        }
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn realize_reproducible() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let d = random_ssd(12, 26, 100, &mut rng).unwrap();
        let t = gen_ssd_truth(26, 3, true, &mut ChaCha12Rng::seed_from_u64(10)).unwrap();
        let y1 = realize_ssd_response(&t, &d, &mut ChaCha12Rng::seed_from_u64(11)).unwrap();
        let y2 = realize_ssd_response(&t, &d, &mut ChaCha12Rng::seed_from_u64(11)).unwrap();
        assert_eq!(y1, y2);
    }
}
