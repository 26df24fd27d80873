//! Flat key-value config with one `[scenario NAME]` section per scenario.
//! Parsing normalizes every scenario to a full key set (defaults filled), so
//! the echoed effective config re-parses to an equivalent run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use doeselect::design::{bbd, ccd, load_design_csv, random_ssd, Design, Factorial};
use doeselect::lb::LbOptions;
use doeselect::sim::{
    Method, RsmScenario, RsmTruth, ScreeningKind, ScreeningScenario, SimOptions,
};
use doeselect::subsets::Strategy;
use doeselect::surface::{ActivityProbs, CoefScheme};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug)]
pub enum ConfigError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Usage(m) => write!(f, "config error: {m}"),
            ConfigError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

type CResult<T> = Result<T, ConfigError>;

fn usage(msg: impl Into<String>) -> ConfigError {
    ConfigError::Usage(msg.into())
}

/// A parsed scenario: the core spec plus its normalized key-value block.
pub enum ScenarioSpec {
    Rsm(RsmScenario),
    Screening(ScreeningScenario),
}

impl ScenarioSpec {
    pub fn name(&self) -> &str {
        match self {
            ScenarioSpec::Rsm(s) => &s.name,
            ScenarioSpec::Screening(s) => &s.name,
        }
    }
}

pub struct RunConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub scenarios: Vec<(ScenarioSpec, BTreeMap<String, String>)>,
}

/// FNV-1a hash of the raw config text, echoed for reproducibility.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

struct RawSection {
    name: String,
    keys: BTreeMap<String, String>,
}

fn parse_sections(text: &str) -> CResult<(BTreeMap<String, String>, Vec<RawSection>)> {
    let mut globals = BTreeMap::new();
    let mut sections: Vec<RawSection> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| usage(format!("line {}: unterminated section", lineno + 1)))?;
            let mut parts = inner.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some("scenario"), Some(name), None) => sections.push(RawSection {
                    name: name.to_string(),
                    keys: BTreeMap::new(),
                }),
                _ => {
                    return Err(usage(format!(
                        "line {}: expected [scenario NAME]",
                        lineno + 1
                    )))
                }
            }
        } else if let Some((k, v)) = line.split_once('=') {
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            let target = match sections.last_mut() {
                Some(s) => &mut s.keys,
                None => &mut globals,
            };
            if target.insert(k.clone(), v).is_some() {
                return Err(usage(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        } else {
            return Err(usage(format!(
                "line {}: expected 'key = value' or a section header",
                lineno + 1
            )));
        }
    }
    Ok((globals, sections))
}

struct KeyReader<'a> {
    section: &'a str,
    keys: BTreeMap<String, String>,
    used: Vec<String>,
}

impl<'a> KeyReader<'a> {
    fn new(section: &'a str, keys: BTreeMap<String, String>) -> KeyReader<'a> {
        KeyReader {
            section,
            keys,
            used: Vec::new(),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.used.push(key.to_string());
        self.keys.get(key).cloned()
    }

    fn required(&mut self, key: &str) -> CResult<String> {
        self.take(key)
            .ok_or_else(|| usage(format!("[{}]: missing key '{key}'", self.section)))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> CResult<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                usage(format!("[{}]: bad value '{v}' for '{key}'", self.section))
            }),
        }
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str) -> CResult<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                usage(format!("[{}]: bad value '{v}' for '{key}'", self.section))
            }),
        }
    }

    fn finish(self) -> CResult<()> {
        for k in self.keys.keys() {
            if !self.used.contains(k) {
                return Err(usage(format!("[{}]: unknown key '{k}'", self.section)));
            }
        }
        Ok(())
    }
}

/// `ccd:m=3,alpha=1,centers=2[,fraction=half]`, `bbd:m=3,centers=3`,
/// `ssd:n=14,m=24,seed=1[,iters=2000]`, or a CSV path.
pub fn resolve_design(value: &str, base_dir: &Path) -> CResult<Design> {
    let parse_params = |body: &str| -> CResult<BTreeMap<String, String>> {
        let mut map = BTreeMap::new();
        for part in body.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| usage(format!("bad design parameter '{part}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(map)
    };
    let get = |map: &BTreeMap<String, String>, k: &str| -> CResult<String> {
        map.get(k)
            .cloned()
            .ok_or_else(|| usage(format!("design spec missing '{k}'")))
    };
    if let Some(body) = value.strip_prefix("ccd:") {
        let p = parse_params(body)?;
        let m: usize = get(&p, "m")?.parse().map_err(|_| usage("bad m"))?;
        let alpha: f64 = get(&p, "alpha")?.parse().map_err(|_| usage("bad alpha"))?;
        let centers: usize = get(&p, "centers")?.parse().map_err(|_| usage("bad centers"))?;
        let fraction = match p.get("fraction").map(|s| s.as_str()) {
            None | Some("full") => Factorial::Full,
            Some("half") => Factorial::Half,
            Some(other) => return Err(usage(format!("unknown fraction '{other}'"))),
        };
        ccd(m, alpha, centers, fraction).map_err(|e| usage(e.to_string()))
    } else if let Some(body) = value.strip_prefix("bbd:") {
        let p = parse_params(body)?;
        let m: usize = get(&p, "m")?.parse().map_err(|_| usage("bad m"))?;
        let centers: usize = get(&p, "centers")?.parse().map_err(|_| usage("bad centers"))?;
        bbd(m, centers).map_err(|e| usage(e.to_string()))
    } else if let Some(body) = value.strip_prefix("ssd:") {
        let p = parse_params(body)?;
        let n: usize = get(&p, "n")?.parse().map_err(|_| usage("bad n"))?;
        let m: usize = get(&p, "m")?.parse().map_err(|_| usage("bad m"))?;
        let seed: u64 = get(&p, "seed")?.parse().map_err(|_| usage("bad seed"))?;
        let iters: usize = match p.get("iters") {
            None => 2000,
            Some(v) => v.parse().map_err(|_| usage("bad iters"))?,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        random_ssd(n, m, iters, &mut rng).map_err(|e| usage(e.to_string()))
    } else {
        let path = if Path::new(value).is_absolute() {
            PathBuf::from(value)
        } else {
            base_dir.join(value)
        };
        load_design_csv(&path)
            .map_err(|e| ConfigError::Runtime(format!("loading design '{value}': {e}")))
    }
}

fn parse_methods(section: &str, value: &str, k: usize) -> CResult<Vec<Method>> {
    let mut methods = Vec::new();
    for name in value.split(',') {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        methods.push(
            Method::parse(name, k)
                .map_err(|e| usage(format!("[{section}]: {e}")))?,
        );
    }
    if methods.is_empty() {
        return Err(usage(format!("[{section}]: no methods listed")));
    }
    Ok(methods)
}

fn sim_options(r: &mut KeyReader) -> CResult<(SimOptions, usize)> {
    let k: usize = r.parse("k", 5)?;
    let opts = SimOptions {
        s_max: r.parse_opt("s_max")?,
        strategy: Strategy::Auto,
        lb: LbOptions {
            t: r.parse("t", 0.6)?,
            n_bootstrap: r.parse("n_bootstrap", 25)?,
            s_max: None,
            strategy: Strategy::Auto,
            variance_literal: r.parse("lb_variance_literal", false)?,
        },
        oos_noise: r.parse("oos_noise", false)?,
        fixed_surface: r.parse("fixed_surface", false)?,
        random_ssd_signs: r.parse("random_ssd_signs", true)?,
    };
    Ok((opts, k))
}

fn coef_scheme(r: &mut KeyReader) -> CResult<CoefScheme> {
    let d = CoefScheme::default();
    Ok(CoefScheme {
        mag_lo: r.parse("mag_lo", d.mag_lo)?,
        mag_hi: r.parse("mag_hi", d.mag_hi)?,
        degree_damp: r.parse("degree_damp", d.degree_damp)?,
        three_fi_damp: r.parse("three_fi_damp", d.three_fi_damp)?,
    })
}

pub fn parse_config(text: &str, base_dir: &Path) -> CResult<RunConfig> {
    let (globals, sections) = parse_sections(text)?;
    let mut greader = KeyReader::new("global", globals.clone());
    let master_seed: u64 = greader.parse("master_seed", 0)?;
    let output_dir = PathBuf::from(greader.take("output_dir").unwrap_or_else(|| ".".into()));
    let _ = greader.take("threads");
    greader.finish()?;

    if sections.is_empty() {
        return Err(usage("no [scenario ...] sections"));
    }
    let mut scenarios = Vec::new();
    for sec in sections {
        let mut r = KeyReader::new(&sec.name, sec.keys.clone());
        let study = r.required("study")?;
        let design_ref = r.required("design")?;
        let design = resolve_design(&design_ref, base_dir)?;
        let n_reps: usize = r
            .parse_opt("n_reps")?
            .ok_or_else(|| usage(format!("[{}]: missing key 'n_reps'", sec.name)))?;
        let (options, k) = sim_options(&mut r)?;
        let methods_str = r.required("methods")?;
        let methods = parse_methods(&sec.name, &methods_str, k)?;

        let spec = match study.as_str() {
            "rsm" => {
                let truth_name = r.required("truth")?;
                let truth = match truth_name.as_str() {
                    "full_second_order" => RsmTruth::FullSecondOrder {
                        steepness: r.parse("steepness", 1.0)?,
                    },
                    "reduced_second_order" => RsmTruth::ReducedSecondOrder {
                        probs: ActivityProbs {
                            p_me: r.parse("p_me", 0.41)?,
                            p_2fi: r.parse("p_2fi", 0.11)?,
                            p_quad: r.parse("p_quad", 0.10)?,
                        },
                        steepness: r.parse("steepness", 1.0)?,
                    },
                    "sixth_order" => RsmTruth::SixthOrder {
                        steepness: r.parse("steepness", 2.0)?,
                    },
                    other => {
                        return Err(usage(format!("[{}]: unknown truth '{other}'", sec.name)))
                    }
                };
                for m in &methods {
                    if matches!(m, Method::LassoCv { .. } | Method::LassoLoocv | Method::GaussLasso) {
                        return Err(usage(format!(
                            "[{}]: method {} is not rsm-compatible",
                            sec.name,
                            m.name()
                        )));
                    }
                }
                ScenarioSpec::Rsm(RsmScenario {
                    name: sec.name.clone(),
                    design,
                    truth,
                    methods,
                    n_reps,
                    n_oos: r.parse("n_oos", 1000)?,
                    noise_sd: r.parse("noise_sd", 1.0)?,
                    coef_scheme: coef_scheme(&mut r)?,
                    master_seed,
                    options,
                })
            }
            "screening" | "ssd" => {
                for m in &methods {
                    if matches!(m, Method::FullModel) {
                        return Err(usage(format!(
                            "[{}]: full_model is not screening-compatible",
                            sec.name
                        )));
                    }
                }
                let kind = if study == "screening" {
                    ScreeningKind::Screening {
                        n_me: r
                            .parse_opt("n_me")?
                            .ok_or_else(|| usage(format!("[{}]: missing key 'n_me'", sec.name)))?,
                        n_2fi: r
                            .parse_opt("n_2fi")?
                            .ok_or_else(|| usage(format!("[{}]: missing key 'n_2fi'", sec.name)))?,
                    }
                } else {
                    ScreeningKind::Ssd {
                        scenario_id: r.parse_opt("scenario")?.ok_or_else(|| {
                            usage(format!("[{}]: missing key 'scenario'", sec.name))
                        })?,
                    }
                };
                ScenarioSpec::Screening(ScreeningScenario {
                    name: sec.name.clone(),
                    design,
                    kind,
                    methods,
                    n_reps,
                    master_seed,
                    options,
                })
            }
            other => return Err(usage(format!("[{}]: unknown study '{other}'", sec.name))),
        };
        r.finish()?;

        // normalized block for the effective-config echo
        let mut norm = sec.keys.clone();
        norm.insert("study".into(), study);
        scenarios.push((spec, norm));
    }
    Ok(RunConfig {
        master_seed,
        output_dir,
        scenarios,
    })
}

/// Echo block: globals plus each scenario's keys, normalized ordering.
pub fn effective_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("master_seed = {}\n", cfg.master_seed));
    out.push_str(&format!("output_dir = {}\n", cfg.output_dir.display()));
    for (spec, keys) in &cfg.scenarios {
        out.push_str(&format!("\n[scenario {}]\n", spec.name()));
        for (k, v) in keys {
            out.push_str(&format!("{k} = {v}\n"));
        }
    }
    out
}
