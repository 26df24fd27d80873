mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use config::{config_hash, effective_config, parse_config, resolve_design, ConfigError};
use doeselect::cv::{cv_select_and_refit, CvOptions};
use doeselect::design::{es2, save_design_csv, validate_design};
use doeselect::lasso::{gauss_lasso_select, lasso_cv_select};
use doeselect::lb::{lb_select, sigma2_for_candidates, LbOptions};
use doeselect::sim::{
    records_from_csv, records_to_csv, run_rsm_scenario, run_screening_scenario, summarize,
    summary_to_csv, Method, MetricsRecord,
};
use doeselect::subsets::refit_full_data;
use doeselect::term::{
    full_second_order, main_effects, main_effects_and_2fi, TermSet,
};

#[derive(Parser)]
#[command(name = "doeselect", version, about = "Model selection for small designed experiments")]
struct Cli {
    /// Worker threads (default: DOESELECT_THREADS env var, else 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a design and write it as CSV.
    GenDesign(GenDesignArgs),
    /// Run the scenarios in a config file; writes records.csv and summary.csv.
    Run(RunArgs),
    /// Apply one selection method to a design + response pair.
    Analyze(AnalyzeArgs),
    /// Recompute the summary table from a records CSV.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenDesignArgs {
    /// Design spec: ccd:m=3,alpha=1,centers=2[,fraction=half] |
    /// bbd:m=3,centers=3 | ssd:n=14,m=24,seed=1[,iters=2000]
    spec: String,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Config file path.
    config: PathBuf,
    /// Override the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Design CSV path or constructor spec (see gen-design).
    #[arg(long)]
    design: PathBuf,
    /// Response CSV: one value per line, optional 'y' header.
    #[arg(long)]
    response: PathBuf,
    /// Selection method name.
    #[arg(long)]
    method: String,
    /// Candidate terms: main_effects | me_2fi | full_second_order.
    #[arg(long, default_value = "main_effects")]
    candidates: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    s_max: Option<usize>,
    #[arg(long, default_value_t = 0.6)]
    t: f64,
    #[arg(long, default_value_t = 25)]
    n_bootstrap: usize,
    /// RNG seed for fold splits and bootstrap draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Records CSV produced by `run`.
    records: PathBuf,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn runtime(msg: impl Into<String>) -> ConfigError {
    ConfigError::Runtime(msg.into())
}

fn usage(msg: impl Into<String>) -> ConfigError {
    ConfigError::Usage(msg.into())
}

fn write_or_print(path: Option<&Path>, content: &str) -> Result<(), ConfigError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| runtime(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_gen_design(args: &GenDesignArgs) -> Result<(), ConfigError> {
    let design = resolve_design(&args.spec, Path::new("."))?;
    let report = validate_design(&design);
    if let Some(out) = &args.out {
        save_design_csv(&design, out).map_err(|e| runtime(e.to_string()))?;
        println!("wrote {} ({} runs x {} factors)", out.display(), design.n(), design.m());
    } else {
        let mut csv = String::new();
        let header: Vec<String> = (1..=design.m()).map(|c| format!("x{c}")).collect();
        csv.push_str(&header.join(","));
        csv.push('\n');
        for r in 0..design.n() {
            let row: Vec<String> = (0..design.m())
                .map(|c| format!("{}", design.settings()[(r, c)]))
                .collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        print!("{csv}");
    }
    eprintln!("{report}");
    if report.supersaturated {
        if let Ok(v) = es2(&design) {
            eprintln!("E(s^2) = {v:.4}");
        }
    }
    Ok(())
}

fn load_response(path: &Path, n: usize) -> Result<DVector<f64>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("reading {}: {e}", path.display())))?;
    let mut vals = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("y")) {
            continue;
        }
        vals.push(
            line.parse::<f64>()
                .map_err(|_| usage(format!("{}: bad value '{line}'", path.display())))?,
        );
    }
    if vals.len() != n {
        return Err(usage(format!(
            "response has {} values but the design has {n} runs",
            vals.len()
        )));
    }
    Ok(DVector::from_vec(vals))
}

fn candidate_set(name: &str, m: usize) -> Result<TermSet, ConfigError> {
    let ts = match name {
        "main_effects" => main_effects(m),
        "me_2fi" => main_effects_and_2fi(m),
        "full_second_order" => full_second_order(m),
        other => return Err(usage(format!("unknown candidate set '{other}'"))),
    };
    ts.map_err(|e| usage(e.to_string()))
}

fn print_fit(fit: &doeselect::ols::FittedModel) {
    println!("selected model ({} predictors):", fit.size());
    for (label, b) in fit.terms.labels().iter().zip(fit.beta.iter()) {
        println!("  {label:>12}  {b:+.6}");
    }
    println!("rss = {:.6}", fit.rss);
    if let Some(s2) = fit.sigma2_hat {
        println!("sigma2_hat = {s2:.6}");
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), ConfigError> {
    let design = resolve_design(&args.design.to_string_lossy(), Path::new("."))?;
    let y = load_response(&args.response, design.n())?;
    let candidates = candidate_set(&args.candidates, design.m())?;
    let method = Method::parse(&args.method, args.k).map_err(|e| usage(e.to_string()))?;
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let cv_opts = CvOptions {
        s_max: args.s_max,
        ..CvOptions::default()
    };
    match method {
        Method::FullModel => {
            let fit = doeselect::ols::fit_terms(&design, &candidates, &y)
                .map_err(|e| runtime(e.to_string()))?;
            print_fit(&fit);
        }
        Method::RegressionCv { k } => {
            let (fit, trace) = cv_select_and_refit(&design, &y, &candidates, k, &mut rng, cv_opts)
                .map_err(|e| runtime(e.to_string()))?;
            println!("{k}-fold cv trace:\n{}", trace.to_csv());
            print_fit(&fit);
        }
        Method::RegressionLoocv => {
            let n = design.n();
            let (fit, trace) = cv_select_and_refit(&design, &y, &candidates, n, &mut rng, cv_opts)
                .map_err(|e| runtime(e.to_string()))?;
            println!("loocv trace:\n{}", trace.to_csv());
            print_fit(&fit);
        }
        Method::RegressionLb => {
            let sigma2 = sigma2_for_candidates(&design, &candidates, &y)
                .map_err(|e| runtime(e.to_string()))?;
            let opts = LbOptions {
                t: args.t,
                n_bootstrap: args.n_bootstrap,
                s_max: args.s_max,
                ..LbOptions::default()
            };
            let (trace, path) = lb_select(&design, &y, &candidates, &opts, sigma2, &mut rng)
                .map_err(|e| runtime(e.to_string()))?;
            println!("little bootstrap trace (sigma2 = {:.6}):", trace.sigma2_used);
            print!("{}", trace.to_csv());
            let fit = refit_full_data(&design, &path, &y, trace.s_star)
                .map_err(|e| runtime(e.to_string()))?;
            print_fit(&fit);
        }
        Method::LassoCv { k } => {
            let res = lasso_cv_select(&design, &y, &candidates, k, &mut rng)
                .map_err(|e| runtime(e.to_string()))?;
            println!(
                "{k}-fold lasso cv: lambda* = {:.6} (grid index {})",
                res.lambda_star, res.lambda_index
            );
            println!("active terms: {}", res.active_terms);
        }
        Method::LassoLoocv => {
            let n = design.n();
            let res = lasso_cv_select(&design, &y, &candidates, n, &mut rng)
                .map_err(|e| runtime(e.to_string()))?;
            println!(
                "loocv lasso: lambda* = {:.6} (grid index {})",
                res.lambda_star, res.lambda_index
            );
            println!("active terms: {}", res.active_terms);
        }
        Method::GaussLasso => {
            let res = gauss_lasso_select(&design, &y, &candidates)
                .map_err(|e| runtime(e.to_string()))?;
            println!(
                "gauss-lasso: lambda* = {:.6} (grid index {}), gamma = {:.6}",
                res.lambda_star, res.lambda_index, res.gamma
            );
            println!("active terms: {}", res.active_terms);
            let fit = doeselect::ols::fit_terms(&design, &res.active_terms, &y)
                .map_err(|e| runtime(e.to_string()))?;
            print_fit(&fit);
        }
        Method::OracleStub | Method::DeclareAllStub => {
            return Err(usage("stub methods are not available in analyze"));
        }
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), ConfigError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| usage(format!("reading {}: {e}", args.config.display())))?;
    let base_dir = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut cfg = parse_config(&text, &base_dir)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
        for (spec, keys) in &mut cfg.scenarios {
            match spec {
                config::ScenarioSpec::Rsm(s) => s.master_seed = seed,
                config::ScenarioSpec::Screening(s) => s.master_seed = seed,
            }
            let _ = keys;
        }
    }
    let out_dir = args.output_dir.clone().unwrap_or_else(|| {
        if cfg.output_dir.is_absolute() {
            cfg.output_dir.clone()
        } else {
            base_dir.join(&cfg.output_dir)
        }
    });
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| runtime(format!("creating {}: {e}", out_dir.display())))?;

    println!("master_seed = {}", cfg.master_seed);
    println!("config_hash = {}", config_hash(&text));
    println!("effective config:");
    print!("{}", effective_config(&cfg));

    let mut records: Vec<MetricsRecord> = Vec::new();
    for (spec, _) in &cfg.scenarios {
        let started = std::time::Instant::now();
        let mut recs = match spec {
            config::ScenarioSpec::Rsm(s) => {
                run_rsm_scenario(s).map_err(|e| runtime(e.to_string()))?
            }
            config::ScenarioSpec::Screening(s) => {
                run_screening_scenario(s).map_err(|e| runtime(e.to_string()))?
            }
        };
        println!(
            "scenario {}: {} records in {:.1}s",
            spec.name(),
            recs.len(),
            started.elapsed().as_secs_f64()
        );
        records.append(&mut recs);
    }
    let records_path = out_dir.join("records.csv");
    std::fs::write(&records_path, records_to_csv(&records))
        .map_err(|e| runtime(format!("writing {}: {e}", records_path.display())))?;
    let rows = summarize(&records).map_err(|e| runtime(e.to_string()))?;
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_to_csv(&rows))
        .map_err(|e| runtime(format!("writing {}: {e}", summary_path.display())))?;
    println!("wrote {}", records_path.display());
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<(), ConfigError> {
    let text = std::fs::read_to_string(&args.records)
        .map_err(|e| usage(format!("reading {}: {e}", args.records.display())))?;
    let records = records_from_csv(&text).map_err(|e| usage(e.to_string()))?;
    let rows = summarize(&records).map_err(|e| runtime(e.to_string()))?;
    write_or_print(args.out.as_deref(), &summary_to_csv(&rows))
}

fn run_cli(cli: &Cli) -> Result<(), ConfigError> {
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("DOESELECT_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1);
    if threads == 0 {
        return Err(usage("--threads must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| runtime(format!("thread pool: {e}")))?;
    match &cli.cmd {
        Cmd::GenDesign(a) => cmd_gen_design(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Summarize(a) => cmd_summarize(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ConfigError::Usage(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(ConfigError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
