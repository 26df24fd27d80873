//! Simulation harness: the RSM prediction study and the screening / SSD
//! power studies, emitting one metrics record per replication and method.
//!
//! Reproducibility: every replication derives its own ChaCha stream from the
//! master seed, so records are identical regardless of thread count or
//! execution order.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::cv::{cv_select_and_refit, CvOptions};
use crate::design::Design;
use crate::error::{Error, Result};
use crate::lasso::{gauss_lasso_select, lasso_cv_select};
use crate::lb::{lb_select, sigma2_for_candidates, LbOptions};
use crate::ols::{fit_terms, rmspe, FittedModel};
use crate::screening::{
    gen_screening_truth, gen_ssd_truth, realize_screening_response, realize_ssd_response,
};
use crate::subsets::{refit_full_data, Strategy};
use crate::surface::{
    gen_full_second_order, gen_reduced_second_order, gen_sixth_order, uniform_points,
    ActivityProbs, CoefScheme, SurfaceSpec,
};
use crate::term::{
    build_model_matrix_from, full_second_order, main_effects, main_effects_and_2fi, TermSet,
};

/// Analysis method of a simulation arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FullModel,
    RegressionCv { k: usize },
    RegressionLoocv,
    RegressionLb,
    LassoCv { k: usize },
    LassoLoocv,
    GaussLasso,
    /// Test stub: declares exactly the truth.
    OracleStub,
    /// Test stub: declares every candidate.
    DeclareAllStub,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::FullModel => "full_model",
            Method::RegressionCv { .. } => "regression_cv",
            Method::RegressionLoocv => "regression_loocv",
            Method::RegressionLb => "regression_lb",
            Method::LassoCv { .. } => "lasso_cv",
            Method::LassoLoocv => "lasso_loocv",
            Method::GaussLasso => "gauss_lasso",
            Method::OracleStub => "oracle_stub",
            Method::DeclareAllStub => "declare_all_stub",
        }
    }

    pub fn parse(s: &str, k: usize) -> Result<Method> {
        Ok(match s {
            "full_model" => Method::FullModel,
            "regression_cv" => Method::RegressionCv { k },
            "regression_loocv" => Method::RegressionLoocv,
            "regression_lb" => Method::RegressionLb,
            "lasso_cv" => Method::LassoCv { k },
            "lasso_loocv" => Method::LassoLoocv,
            "gauss_lasso" => Method::GaussLasso,
            "oracle_stub" => Method::OracleStub,
            "declare_all_stub" => Method::DeclareAllStub,
            other => {
                return Err(Error::InvalidArgument(format!("unknown method '{other}'")))
            }
        })
    }
}

/// One replication x method outcome. For RSM studies metric1 is the RMSPE
/// and metric2 is unused; for screening/SSD studies (metric1, metric2) =
/// (power, type1).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub scenario: String,
    pub method: String,
    pub design: String,
    pub rep: usize,
    pub metric1: Option<f64>,
    pub metric2: Option<f64>,
    pub model_size: Option<usize>,
    pub flags: String,
}

pub const RECORD_HEADER: &str = "scenario,method,design,rep,metric1,metric2,model_size,flags";

fn fmt_opt_f(v: &Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{x:.10}"))
}

pub fn records_to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.method,
            r.design,
            r.rep,
            fmt_opt_f(&r.metric1),
            fmt_opt_f(&r.metric2),
            r.model_size.map_or("NA".into(), |s| s.to_string()),
            r.flags,
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty records file".into()))?;
    if header.trim() != RECORD_HEADER {
        return Err(Error::Parse(format!("unexpected header '{header}'")));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s == "NA" {
            Ok(None)
        } else {
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| Error::Parse(format!("bad number '{s}': {e}")))
        }
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(Error::Parse(format!("line {}: expected 8 fields", i + 2)));
        }
        out.push(MetricsRecord {
            scenario: cells[0].into(),
            method: cells[1].into(),
            design: cells[2].into(),
            rep: cells[3]
                .parse()
                .map_err(|e| Error::Parse(format!("bad rep '{}': {e}", cells[3])))?,
            metric1: parse_opt(cells[4])?,
            metric2: parse_opt(cells[5])?,
            model_size: if cells[6] == "NA" {
                None
            } else {
                Some(cells[6].parse().map_err(|e| {
                    Error::Parse(format!("bad model_size '{}': {e}", cells[6]))
                })?)
            },
            flags: cells[7].into(),
        });
    }
    Ok(out)
}

/// Per-replication RNG stream; lane 0 carries truth and response draws,
/// lanes 1.. are one per method.
fn stream_rng(master_seed: u64, rep: usize, lane: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream((rep as u64) << 8 | lane);
    rng
}

/// Shared tuning knobs.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub s_max: Option<usize>,
    pub strategy: Strategy,
    pub lb: LbOptions,
    /// Evaluate RMSPE against noisy out-of-sample responses instead of the
    /// noiseless truth.
    pub oos_noise: bool,
    /// Generate the RSM surface once instead of per replication.
    pub fixed_surface: bool,
    pub random_ssd_signs: bool,
}

impl Default for SimOptions {
    fn default() -> SimOptions {
        SimOptions {
            s_max: None,
            strategy: Strategy::Auto,
            lb: LbOptions::default(),
            oos_noise: false,
            fixed_surface: false,
            random_ssd_signs: true,
        }
    }
}

/// Truth family of an RSM scenario.
#[derive(Debug, Clone)]
pub enum RsmTruth {
    FullSecondOrder { steepness: f64 },
    ReducedSecondOrder { probs: ActivityProbs, steepness: f64 },
    SixthOrder { steepness: f64 },
}

#[derive(Debug, Clone)]
pub struct RsmScenario {
    pub name: String,
    pub design: Design,
    pub truth: RsmTruth,
    pub methods: Vec<Method>,
    pub n_reps: usize,
    pub n_oos: usize,
    pub noise_sd: f64,
    pub coef_scheme: CoefScheme,
    pub master_seed: u64,
    pub options: SimOptions,
}

fn gen_rsm_surface(
    truth: &RsmTruth,
    m: usize,
    noise_sd: f64,
    scheme: &CoefScheme,
    rng: &mut ChaCha12Rng,
) -> Result<SurfaceSpec> {
    match truth {
        RsmTruth::FullSecondOrder { steepness } => {
            gen_full_second_order(m, rng, *steepness, noise_sd, scheme)
        }
        RsmTruth::ReducedSecondOrder { probs, steepness } => Ok(gen_reduced_second_order(
            m, rng, probs, *steepness, noise_sd, scheme,
        )?
        .0),
        RsmTruth::SixthOrder { steepness } => gen_sixth_order(m, rng, *steepness, noise_sd, scheme),
    }
}

fn rsm_fit_method(
    method: Method,
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
    opts: &SimOptions,
    rng: &mut ChaCha12Rng,
) -> Result<FittedModel> {
    let n = design.n();
    match method {
        Method::FullModel => fit_terms(design, candidates, y),
        Method::RegressionCv { k } => {
            let cv = CvOptions { s_max: opts.s_max, strategy: opts.strategy };
            Ok(cv_select_and_refit(design, y, candidates, k, rng, cv)?.0)
        }
        Method::RegressionLoocv => {
            let cv = CvOptions { s_max: opts.s_max, strategy: opts.strategy };
            Ok(cv_select_and_refit(design, y, candidates, n, rng, cv)?.0)
        }
        Method::RegressionLb => {
            let sigma2 = sigma2_for_candidates(design, candidates, y)?;
            let lb = LbOptions {
                s_max: opts.s_max,
                strategy: opts.strategy,
                ..opts.lb
            };
            let (trace, path) = lb_select(design, y, candidates, &lb, sigma2, rng)?;
            refit_full_data(design, &path, y, trace.s_star)
        }
        other => Err(Error::InvalidArgument(format!(
            "method {} is not RSM-compatible",
            other.name()
        ))),
    }
}

pub fn run_rsm_scenario(spec: &RsmScenario) -> Result<Vec<MetricsRecord>> {
    if spec.n_reps < 1 || spec.n_oos < 1 {
        return Err(Error::InvalidArgument(
            "rsm scenarios need n_reps >= 1 and n_oos >= 1".into(),
        ));
    }
    if spec.methods.len() > 200 {
        return Err(Error::InvalidArgument("too many methods".into()));
    }
    for m in &spec.methods {
        if matches!(
            m,
            Method::LassoCv { .. } | Method::LassoLoocv | Method::GaussLasso
        ) {
            return Err(Error::InvalidArgument(format!(
                "method {} is not RSM-compatible",
                m.name()
            )));
        }
    }
    let m = spec.design.m();
    let candidates = full_second_order(m)?;
    let fixed = if spec.options.fixed_surface {
        let mut rng = stream_rng(spec.master_seed, 0, u8::MAX as u64);
        Some(gen_rsm_surface(
            &spec.truth,
            m,
            spec.noise_sd,
            &spec.coef_scheme,
            &mut rng,
        )?)
    } else {
        None
    };

    let per_rep: Vec<Vec<MetricsRecord>> = (0..spec.n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng0 = stream_rng(spec.master_seed, rep, 0);
            let surface = match &fixed {
                Some(s) => Ok(s.clone()),
                None => gen_rsm_surface(&spec.truth, m, spec.noise_sd, &spec.coef_scheme, &mut rng0),
            };
            let mut recs = Vec::with_capacity(spec.methods.len());
            let surface = match surface {
                Ok(s) => s,
                Err(e) => {
                    for method in &spec.methods {
                        recs.push(failed_record(spec, rep, method.name(), &e));
                    }
                    return recs;
                }
            };
            let y = surface.observe(spec.design.settings(), &mut rng0);
            let oos = uniform_points(spec.n_oos, m, &mut rng0);
            let target = if spec.options.oos_noise {
                surface.observe(&oos, &mut rng0)
            } else {
                surface.truth_at(&oos)
            };
            let (y, target) = match (y, target) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    for method in &spec.methods {
                        recs.push(failed_record(spec, rep, method.name(), &e));
                    }
                    return recs;
                }
            };
            for (mi, method) in spec.methods.iter().enumerate() {
                let mut rng = stream_rng(spec.master_seed, rep, mi as u64 + 1);
                let rec = rsm_fit_method(*method, &spec.design, &y, &candidates, &spec.options, &mut rng)
                    .and_then(|fm| {
                        let xoos = build_model_matrix_from(&oos, &fm.terms)?;
                        let pred = &xoos * &fm.beta;
                        let err = rmspe(&target, &pred)?;
                        Ok(MetricsRecord {
                            scenario: spec.name.clone(),
                            method: method.name().into(),
                            design: spec.design.name().into(),
                            rep,
                            metric1: Some(err),
                            metric2: None,
                            model_size: Some(fm.size()),
                            flags: String::new(),
                        })
                    });
                recs.push(rec.unwrap_or_else(|e| failed_record(spec, rep, method.name(), &e)));
            }
            recs
        })
        .collect();
    Ok(per_rep.into_iter().flatten().collect())
}

fn failed_record(spec: &RsmScenario, rep: usize, method: &str, e: &Error) -> MetricsRecord {
    MetricsRecord {
        scenario: spec.name.clone(),
        method: method.into(),
        design: spec.design.name().into(),
        rep,
        metric1: None,
        metric2: None,
        model_size: None,
        flags: flag_of(e),
    }
}

fn flag_of(e: &Error) -> String {
    let s = format!("failed:{e}");
    // flags live in a comma-separated CSV; strip separators
    s.replace([',', '\n'], ";")
}

/// Truth family of a screening-type scenario.
#[derive(Debug, Clone)]
pub enum ScreeningKind {
    /// n_me active main effects and n_2fi interactions; candidates are all
    /// MEs + 2FIs.
    Screening { n_me: usize, n_2fi: usize },
    /// Marley-Woods style scenario over main effects only.
    Ssd { scenario_id: usize },
}

#[derive(Debug, Clone)]
pub struct ScreeningScenario {
    pub name: String,
    pub design: Design,
    pub kind: ScreeningKind,
    pub methods: Vec<Method>,
    pub n_reps: usize,
    pub master_seed: u64,
    pub options: SimOptions,
}

fn declared_terms(
    method: Method,
    design: &Design,
    y: &DVector<f64>,
    candidates: &TermSet,
    truth_terms: &TermSet,
    opts: &SimOptions,
    rng: &mut ChaCha12Rng,
) -> Result<TermSet> {
    let n = design.n();
    match method {
        Method::RegressionCv { k } => {
            let cv = CvOptions { s_max: opts.s_max, strategy: opts.strategy };
            Ok(cv_select_and_refit(design, y, candidates, k, rng, cv)?.0.terms)
        }
        Method::RegressionLoocv => {
            let cv = CvOptions { s_max: opts.s_max, strategy: opts.strategy };
            Ok(cv_select_and_refit(design, y, candidates, n, rng, cv)?.0.terms)
        }
        Method::RegressionLb => {
            let sigma2 = sigma2_for_candidates(design, candidates, y)?;
            let lb = LbOptions {
                s_max: opts.s_max,
                strategy: opts.strategy,
                ..opts.lb
            };
            let (trace, path) = lb_select(design, y, candidates, &lb, sigma2, rng)?;
            Ok(refit_full_data(design, &path, y, trace.s_star)?.terms)
        }
        Method::LassoCv { k } => Ok(lasso_cv_select(design, y, candidates, k, rng)?.active_terms),
        Method::LassoLoocv => Ok(lasso_cv_select(design, y, candidates, n, rng)?.active_terms),
        Method::GaussLasso => Ok(gauss_lasso_select(design, y, candidates)?.active_terms),
        Method::OracleStub => Ok(truth_terms.clone()),
        Method::DeclareAllStub => Ok(candidates.clone()),
        Method::FullModel => Err(Error::InvalidArgument(
            "full_model is not screening-compatible".into(),
        )),
    }
}

/// Effect-level power and type-1 rate of a declared set against a truth.
pub fn power_type1(candidates: &TermSet, truth: &TermSet, declared: &TermSet) -> (f64, f64) {
    let mut active = 0usize;
    let mut inactive = 0usize;
    let mut hits = 0usize;
    let mut false_pos = 0usize;
    for t in candidates.predictors() {
        let is_active = truth.contains(t);
        let is_declared = declared.contains(t);
        if is_active {
            active += 1;
            if is_declared {
                hits += 1;
            }
        } else {
            inactive += 1;
            if is_declared {
                false_pos += 1;
            }
        }
    }
    let power = if active == 0 { 1.0 } else { hits as f64 / active as f64 };
    let type1 = if inactive == 0 {
        0.0
    } else {
        false_pos as f64 / inactive as f64
    };
    (power, type1)
}

pub fn run_screening_scenario(spec: &ScreeningScenario) -> Result<Vec<MetricsRecord>> {
    if spec.n_reps < 1 {
        return Err(Error::InvalidArgument("n_reps must be >= 1".into()));
    }
    for m in &spec.methods {
        if matches!(m, Method::FullModel) {
            return Err(Error::InvalidArgument(
                "full_model is not screening-compatible".into(),
            ));
        }
    }
    let m = spec.design.m();
    let candidates = match spec.kind {
        ScreeningKind::Screening { .. } => main_effects_and_2fi(m)?,
        ScreeningKind::Ssd { .. } => main_effects(m)?,
    };

    let per_rep: Vec<Vec<MetricsRecord>> = (0..spec.n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng0 = stream_rng(spec.master_seed, rep, 0);
            let mut recs = Vec::with_capacity(spec.methods.len());
            let truth_and_y: Result<(TermSet, DVector<f64>)> = (|| match spec.kind {
                ScreeningKind::Screening { n_me, n_2fi } => {
                    let truth = gen_screening_truth(m, n_me, n_2fi, &mut rng0)?;
                    let y = realize_screening_response(&truth, &spec.design, &mut rng0)?;
                    Ok((truth.active_terms, y))
                }
                ScreeningKind::Ssd { scenario_id } => {
                    let truth =
                        gen_ssd_truth(m, scenario_id, spec.options.random_ssd_signs, &mut rng0)?;
                    let y = realize_ssd_response(&truth, &spec.design, &mut rng0)?;
                    Ok((truth.term_set(m)?, y))
                }
            })();
            let (truth_terms, y) = match truth_and_y {
                Ok(v) => v,
                Err(e) => {
                    for method in &spec.methods {
                        recs.push(MetricsRecord {
                            scenario: spec.name.clone(),
                            method: method.name().into(),
                            design: spec.design.name().into(),
                            rep,
                            metric1: None,
                            metric2: None,
                            model_size: None,
                            flags: flag_of(&e),
                        });
                    }
                    return recs;
                }
            };
            for (mi, method) in spec.methods.iter().enumerate() {
                let mut rng = stream_rng(spec.master_seed, rep, mi as u64 + 1);
                let rec = declared_terms(
                    *method,
                    &spec.design,
                    &y,
                    &candidates,
                    &truth_terms,
                    &spec.options,
                    &mut rng,
                )
                .map(|declared| {
                    let (power, type1) = power_type1(&candidates, &truth_terms, &declared);
                    MetricsRecord {
                        scenario: spec.name.clone(),
                        method: method.name().into(),
                        design: spec.design.name().into(),
                        rep,
                        metric1: Some(power),
                        metric2: Some(type1),
                        model_size: Some(declared.size()),
                        flags: String::new(),
                    }
                });
                recs.push(rec.unwrap_or_else(|e| MetricsRecord {
                    scenario: spec.name.clone(),
                    method: method.name().into(),
                    design: spec.design.name().into(),
                    rep,
                    metric1: None,
                    metric2: None,
                    model_size: None,
                    flags: flag_of(&e),
                }));
            }
            recs
        })
        .collect();
    Ok(per_rep.into_iter().flatten().collect())
}

/// Per scenario x method aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub design: String,
    pub n_records: usize,
    pub n_failed: usize,
    pub mean1: Option<f64>,
    pub sd1: Option<f64>,
    pub mean2: Option<f64>,
    pub sd2: Option<f64>,
    pub mean_model_size: Option<f64>,
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        Some(
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt(),
        )
    } else {
        None
    };
    (Some(mean), sd)
}

/// Group by (scenario, method, design); flagged records are excluded from
/// the means but counted.
pub fn summarize(records: &[MetricsRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to summarize".into()));
    }
    let mut keys: Vec<(String, String, String)> = Vec::new();
    for r in records {
        let key = (r.scenario.clone(), r.method.clone(), r.design.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows = Vec::with_capacity(keys.len());
    for (scenario, method, design) in keys {
        let group: Vec<&MetricsRecord> = records
            .iter()
            .filter(|r| r.scenario == scenario && r.method == method && r.design == design)
            .collect();
        let ok: Vec<&&MetricsRecord> = group.iter().filter(|r| r.flags.is_empty()).collect();
        let m1: Vec<f64> = ok.iter().filter_map(|r| r.metric1).collect();
        let m2: Vec<f64> = ok.iter().filter_map(|r| r.metric2).collect();
        let sizes: Vec<f64> = ok.iter().filter_map(|r| r.model_size.map(|s| s as f64)).collect();
        let (mean1, sd1) = mean_sd(&m1);
        let (mean2, sd2) = mean_sd(&m2);
        let (mean_model_size, _) = mean_sd(&sizes);
        rows.push(SummaryRow {
            scenario,
            method,
            design,
            n_records: group.len(),
            n_failed: group.len() - ok.len(),
            mean1,
            sd1,
            mean2,
            sd2,
            mean_model_size,
        });
    }
    Ok(rows)
}

pub const SUMMARY_HEADER: &str =
    "scenario,method,design,n_records,n_failed,mean1,sd1,mean2,sd2,mean_model_size";

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.method,
            r.design,
            r.n_records,
            r.n_failed,
            fmt_opt_f(&r.mean1),
            fmt_opt_f(&r.sd1),
            fmt_opt_f(&r.mean2),
            fmt_opt_f(&r.sd2),
            fmt_opt_f(&r.mean_model_size),
        ));
    }
    out
}

pub fn summary_row<'a>(
    rows: &'a [SummaryRow],
    scenario: &str,
    method: &str,
) -> Option<&'a SummaryRow> {
    rows.iter()
        .find(|r| r.scenario == scenario && r.method == method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ccd, random_ssd, Factorial};
    use approx::assert_relative_eq;

    fn small_rsm_spec(methods: Vec<Method>, seed: u64) -> RsmScenario {
        RsmScenario {
            name: "rsm_test".into(),
            design: ccd(3, 1.0, 3, Factorial::Full).unwrap(),
            truth: RsmTruth::FullSecondOrder { steepness: 1.0 },
            methods,
            n_reps: 4,
            n_oos: 50,
            noise_sd: 1.0,
            coef_scheme: CoefScheme::default(),
            master_seed: seed,
            options: SimOptions::default(),
        }
    }

    #[test]
    fn full_model_noiseless_rmspe_zero() {
        let mut spec = small_rsm_spec(vec![Method::FullModel], 1);
        spec.noise_sd = 0.0;
        let recs = run_rsm_scenario(&spec).unwrap();
        assert_eq!(recs.len(), 4);
        for r in &recs {
            assert!(r.flags.is_empty(), "{}", r.flags);
            assert!(r.metric1.unwrap() < 1e-8, "rmspe {}", r.metric1.unwrap());
            assert_eq!(r.model_size, Some(9));
        }
    }

    #[test]
    fn rsm_records_reproducible_and_parallel_invariant() {
        let spec = small_rsm_spec(
            vec![Method::RegressionCv { k: 5 }, Method::RegressionLb],
            7,
        );
        let a = run_rsm_scenario(&spec).unwrap();
        let b = run_rsm_scenario(&spec).unwrap();
        assert_eq!(records_to_csv(&a), records_to_csv(&b));

        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let c = pool.install(|| run_rsm_scenario(&spec)).unwrap();
        assert_eq!(records_to_csv(&a), records_to_csv(&c));
    }

    #[test]
    fn rsm_rejects_lasso_methods() {
        let spec = small_rsm_spec(vec![Method::GaussLasso], 1);
        assert!(run_rsm_scenario(&spec).is_err());
    }

    #[test]
    fn method_order_does_not_change_per_method_results() {
        let s1 = small_rsm_spec(vec![Method::FullModel, Method::RegressionLb], 5);
        let s2 = small_rsm_spec(vec![Method::RegressionLb, Method::FullModel], 5);
        let r1 = run_rsm_scenario(&s1).unwrap();
        let r2 = run_rsm_scenario(&s2).unwrap();
        // lane assignment follows list position, so compare matching lanes
        let lb1: Vec<&MetricsRecord> = r1.iter().filter(|r| r.method == "full_model").collect();
        let lb2: Vec<&MetricsRecord> = r2.iter().filter(|r| r.method == "full_model").collect();
        for (a, b) in lb1.iter().zip(lb2.iter()) {
            assert_eq!(a.metric1, b.metric1);
        }
    }

    fn stub_screening_spec(kind: ScreeningKind, design: Design, methods: Vec<Method>) -> ScreeningScenario {
        ScreeningScenario {
            name: "scr_test".into(),
            design,
            kind,
            methods,
            n_reps: 10,
            master_seed: 3,
            options: SimOptions::default(),
        }
    }

    #[test]
    fn oracle_and_declare_all_stubs() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let d = random_ssd(14, 24, 200, &mut rng).unwrap();
        let spec = stub_screening_spec(
            ScreeningKind::Ssd { scenario_id: 2 },
            d,
            vec![Method::OracleStub, Method::DeclareAllStub],
        );
        let recs = run_screening_scenario(&spec).unwrap();
        for r in &recs {
            assert!(r.flags.is_empty());
            match r.method.as_str() {
                "oracle_stub" => {
                    assert_eq!(r.metric1, Some(1.0));
                    assert_eq!(r.metric2, Some(0.0));
                    assert_eq!(r.model_size, Some(4));
                }
                "declare_all_stub" => {
                    assert_eq!(r.metric1, Some(1.0));
                    assert_eq!(r.metric2, Some(1.0));
                    assert_eq!(r.model_size, Some(24));
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn conservation_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let d = random_ssd(14, 24, 200, &mut rng).unwrap();
        let mut spec = stub_screening_spec(
            ScreeningKind::Ssd { scenario_id: 1 },
            d,
            vec![Method::GaussLasso, Method::LassoCv { k: 5 }],
        );
        spec.n_reps = 20;
        let recs = run_screening_scenario(&spec).unwrap();
        let n_active = 3.0;
        let n_inactive = 21.0;
        for r in recs.iter().filter(|r| r.flags.is_empty()) {
            let declared =
                r.metric1.unwrap() * n_active + r.metric2.unwrap() * n_inactive;
            assert_relative_eq!(declared, r.model_size.unwrap() as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn records_csv_roundtrip_and_summary() {
        let spec = small_rsm_spec(vec![Method::FullModel, Method::RegressionCv { k: 5 }], 11);
        let recs = run_rsm_scenario(&spec).unwrap();
        let csv = records_to_csv(&recs);
        let back = records_from_csv(&csv).unwrap();
        assert_eq!(recs.len(), back.len());
        let s1 = summarize(&recs).unwrap();
        let s2 = summarize(&back).unwrap();
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert_eq!(a.scenario, b.scenario);
            assert_eq!(a.method, b.method);
            assert_eq!(a.n_records, b.n_records);
            assert_relative_eq!(a.mean1.unwrap(), b.mean1.unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn summary_excludes_flagged_but_counts() {
        let recs = vec![
            MetricsRecord {
                scenario: "s".into(),
                method: "m".into(),
                design: "d".into(),
                rep: 0,
                metric1: Some(2.0),
                metric2: None,
                model_size: Some(3),
                flags: String::new(),
            },
            MetricsRecord {
                scenario: "s".into(),
                method: "m".into(),
                design: "d".into(),
                rep: 1,
                metric1: None,
                metric2: None,
                model_size: None,
                flags: "failed:x".into(),
            },
        ];
        let rows = summarize(&recs).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_records, 2);
        assert_eq!(rows[0].n_failed, 1);
        assert_eq!(rows[0].mean1, Some(2.0));
        assert_eq!(rows[0].sd1, None);
    }

    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
}
