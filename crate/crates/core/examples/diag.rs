use doeselect::cv::make_folds;
use doeselect::design::load_design_csv;
use doeselect::lasso::{default_grid, gauss_lasso_from_path, lasso_path_on, standardize};
use doeselect::screening::{gen_ssd_truth, realize_ssd_response};
use doeselect::sim::power_type1;
use doeselect::subsets::predictor_matrix;
use doeselect::term::main_effects;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

// simulated annealing + steepest-descent E(s^2) optimizer; large |s| penalized
fn optimize_ssd(n: usize, m: usize, restarts: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    use rand::Rng as _;
    // penalize squared inner products above this cap (worst-pair control)
    let cap = if n % 4 == 0 { 16.0 } else { 36.0 };
    let pen = 200.0;
    let cost = |s2: f64| s2 + if s2 > cap + 0.5 { pen * (s2 - cap) } else { 0.0 };
    let mut best: Option<(f64, f64, DMatrix<f64>)> = None;
    for _ in 0..restarts {
        let mut x = DMatrix::from_fn(n, m, |_, _| 0.0);
        for j in 0..m {
            let mut c: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
            use rand::seq::SliceRandom;
            c.shuffle(rng);
            for i in 0..n {
                x[(i, j)] = c[i];
            }
        }
        let mut s = &x.transpose() * &x;
        // annealing over single balanced swaps
        let sweeps = 60_000usize;
        let mut t = 30.0f64;
        let cool = (0.005f64 / t).powf(1.0 / sweeps as f64);
        for _ in 0..sweeps {
            let j = rng.random_range(0..m);
            let plus: Vec<usize> = (0..n).filter(|&i| x[(i, j)] > 0.0).collect();
            let minus: Vec<usize> = (0..n).filter(|&i| x[(i, j)] < 0.0).collect();
            let a = plus[rng.random_range(0..plus.len())];
            let b = minus[rng.random_range(0..minus.len())];
            let mut delta = 0.0;
            for k in 0..m {
                if k == j {
                    continue;
                }
                let sn = s[(j, k)] - 2.0 * x[(a, k)] + 2.0 * x[(b, k)];
                delta += cost(sn * sn) - cost(s[(j, k)] * s[(j, k)]);
            }
            if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                for k in 0..m {
                    if k != j {
                        let sn = s[(j, k)] - 2.0 * x[(a, k)] + 2.0 * x[(b, k)];
                        s[(j, k)] = sn;
                        s[(k, j)] = sn;
                    }
                }
                x[(a, j)] = -1.0;
                x[(b, j)] = 1.0;
            }
            t *= cool;
        }
        // settle with steepest descent on the penalized objective
        loop {
            let mut improved = false;
            for j in 0..m {
                let plus: Vec<usize> = (0..n).filter(|&i| x[(i, j)] > 0.0).collect();
                let minus: Vec<usize> = (0..n).filter(|&i| x[(i, j)] < 0.0).collect();
                let mut best_delta = -1e-9;
                let mut best_ab = None;
                for &a in &plus {
                    for &b in &minus {
                        let mut delta = 0.0;
                        for k in 0..m {
                            if k == j {
                                continue;
                            }
                            let sn = s[(j, k)] - 2.0 * x[(a, k)] + 2.0 * x[(b, k)];
                            delta += cost(sn * sn) - cost(s[(j, k)] * s[(j, k)]);
                        }
                        if delta < best_delta {
                            best_delta = delta;
                            best_ab = Some((a, b));
                        }
                    }
                }
                if let Some((a, b)) = best_ab {
                    for k in 0..m {
                        if k != j {
                            let sn = s[(j, k)] - 2.0 * x[(a, k)] + 2.0 * x[(b, k)];
                            s[(j, k)] = sn;
                            s[(k, j)] = sn;
                        }
                    }
                    x[(a, j)] = -1.0;
                    x[(b, j)] = 1.0;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let pairs = (m * (m - 1) / 2) as f64;
        let mut ss = 0.0;
        let mut nbig = 0.0;
        for j in 0..m {
            for k in (j + 1)..m {
                let s2 = s[(j, k)] * s[(j, k)];
                ss += s2;
                if s2 > cap + 0.5 {
                    nbig += 1.0;
                }
            }
        }
        let e = ss / pairs;
        if best
            .as_ref()
            .map(|(b_big, b_e, _)| (nbig, e) < (*b_big, *b_e))
            .unwrap_or(true)
        {
            best = Some((nbig, e, x.clone()));
        }
    }
    let (nbig, e, x) = best.unwrap();
    let bound = (n * n * (m - n + 1)) as f64 / ((m - 1) * (n - 1)) as f64;
    eprintln!("optimized {n}x{m}: E(s2) {e:.4} (bound {bound:.4}), pairs over cap: {nbig}");
    x
}

#[allow(dead_code)]
fn optimize_ssd_old(n: usize, m: usize, restarts: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for _ in 0..restarts {
        let mut x = DMatrix::from_fn(n, m, |_, _| 0.0);
        for j in 0..m {
            let mut c: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
            use rand::seq::SliceRandom;
            c.shuffle(rng);
            for i in 0..n {
                x[(i, j)] = c[i];
            }
        }
        // S = X'X off-diagonals
        let mut s = &x.transpose() * &x;
        loop {
            let mut improved = false;
            for j in 0..m {
                let plus: Vec<usize> = (0..n).filter(|&i| x[(i, j)] > 0.0).collect();
                let minus: Vec<usize> = (0..n).filter(|&i| x[(i, j)] < 0.0).collect();
                let mut best_delta = -1e-9;
                let mut best_ab = None;
                for &a in &plus {
                    for &b in &minus {
                        let mut delta = 0.0;
                        for k in 0..m {
                            if k == j {
                                continue;
                            }
                            let sn = s[(j, k)] - 2.0 * x[(a, k)] + 2.0 * x[(b, k)];
                            delta += sn * sn - s[(j, k)] * s[(j, k)];
                        }
                        if delta < best_delta {
                            best_delta = delta;
                            best_ab = Some((a, b));
                        }
                    }
                }
                if let Some((a, b)) = best_ab {
                    for k in 0..m {
                        if k != j {
                            let sn = s[(j, k)] - 2.0 * x[(a, k)] + 2.0 * x[(b, k)];
                            s[(j, k)] = sn;
                            s[(k, j)] = sn;
                        }
                    }
                    x[(a, j)] = -1.0;
                    x[(b, j)] = 1.0;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let mut ss = 0.0;
        for j in 0..m {
            for k in (j + 1)..m {
                ss += s[(j, k)] * s[(j, k)];
            }
        }
        let pairs = (m * (m - 1) / 2) as f64;
        let e = ss / pairs;
        if best.as_ref().map(|(b, _)| e < *b).unwrap_or(true) {
            best = Some((e, x.clone()));
        }
    }
    let (e, x) = best.unwrap();
    let bound = (n * n * (m - n + 1)) as f64 / ((m - 1) * (n - 1)) as f64;
    eprintln!("optimized {n}x{m}: E(s2) {e:.4} (bound {bound:.4})");
    x
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.get(1).map(String::as_str) == Some("--gen") {
        let n: usize = args[2].parse().unwrap();
        let m: usize = args[3].parse().unwrap();
        let restarts: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(200);
        let seed: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let x = optimize_ssd(n, m, restarts, &mut rng);
        let mut out = String::new();
        for j in 0..m {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("x{}", j + 1));
        }
        out.push('\n');
        for i in 0..n {
            for j in 0..m {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", x[(i, j)] as i64));
            }
            out.push('\n');
        }
        print!("{out}");
        return;
    }
    let file = args.get(1).map(String::as_str).unwrap_or("ssd_14x24.csv");
    let scen: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let n_reps: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(150);
    let d = load_design_csv(std::path::Path::new(&format!("fixtures/{file}"))).unwrap();
    let m = d.m();
    let cand = main_effects(m).unwrap();
    let x = predictor_matrix(&d, &cand).unwrap();
    let n = d.n();
    let nf = n as f64;

    let curves = args.get(4).map(String::as_str) == Some("--curves");
    let variants = [
        "gauss_cap6", "gauss_cap4", "gauss_cap3", "llcv_cap6", "llcv_cap5", "l5cv_cap6",
        "l5cv_cap5", "l5cv_base",
    ];
    let mut pw = [0.0f64; 8];
    let mut t1 = [0.0f64; 8];
    let mut stop_sum = 0usize;

    for rep in 0..n_reps {
        let mut rng = ChaCha12Rng::seed_from_u64(90_000 + rep as u64);
        let random_signs = std::env::var("SIGNS").map(|v| v != "0").unwrap_or(true);
        let truth = gen_ssd_truth(m, scen, random_signs, &mut rng).unwrap();
        let y = realize_ssd_response(&truth, &d, &mut rng).unwrap();
        let truth_terms = truth.term_set(m).unwrap();

        let (xs, yc, params) = standardize(&x, &y).unwrap();
        let grid = default_grid(&xs, &yc);
        let path = lasso_path_on(&xs, &yc, &grid, params.clone()).unwrap();

        // glmnet stopping on the full-data path
        let tss = yc.norm_squared();
        let mut stop = grid.len();
        let mut prev_dev = 0.0f64;
        for g in 0..grid.len() {
            let beta = path.beta_at(g);
            let rss = (&yc - &xs * &beta).norm_squared();
            let dev = 1.0 - rss / tss;
            if dev > 0.999 || (g > 0 && dev - prev_dev < 1e-5 * dev) {
                stop = g + 1;
                break;
            }
            prev_dev = dev;
        }
        stop_sum += stop;

        // gauss variants: uncapped vs survivor cap 6
        let ybar = y.mean();
        let tss_y = y.iter().map(|v| (v - ybar)).map(|v| v * v).sum::<f64>();
        for (vi, p, cap) in [(0usize, &path, 6), (1, &path, 4), (2, &path, 3)] {
            let path_gamma = 0.1 * p.betas.iter().fold(0.0f64, |mx, b| mx.max(b.abs()));
            let mut best_bic = f64::INFINITY;
            let mut best_surv: Vec<usize> = Vec::new();
            for g in 0..p.lambdas.len() {
                let gam = path_gamma;
                let raw = (0..x.ncols()).filter(|&j| p.betas[(j, g)] != 0.0).count();
                if raw > cap {
                    continue;
                }
                let surv: Vec<usize> = (0..x.ncols())
                    .filter(|&j| {
                        let b = p.betas[(j, g)];
                        b != 0.0 && b.abs() >= gam
                    })
                    .collect();
                let rss = if surv.is_empty() {
                    tss_y
                } else {
                    let xs = DMatrix::from_fn(n, surv.len() + 1, |i, j| {
                        if j == 0 { 1.0 } else { x[(i, surv[j - 1])] }
                    });
                    doeselect::ols::lstsq_pivoted(&xs, &y).unwrap().rss
                };
                let k = surv.len() as f64 + 1.0;
                let bic = nf * (rss.max(1e-300) / nf).ln() + k * nf.ln();
                if bic < best_bic {
                    best_bic = bic;
                    best_surv = surv;
                }
            }
            let declared = cand.subset_of_predictors(&best_surv);
            let (pow, t) = power_type1(&cand, &truth_terms, &declared);
            pw[vi] += pow;
            t1[vi] += t;
        }

        // lasso cv variants: mse curve once per k, then several caps on the argmin
        let cap_sets: [(usize, Vec<(usize, usize)>); 2] = [
            (n, vec![(3usize, 6usize), (4, 5)]),
            (5, vec![(5, 6), (6, 5), (7, usize::MAX)]),
        ];
        for (k, vi_caps) in &cap_sets {
            let k = *k;
            let g = &grid[..];
            let full = &path;
            {
                let mut frng = ChaCha12Rng::seed_from_u64(500_000 + rep as u64);
                let folds = make_folds(n, k, &mut frng).unwrap();
                let mut mse = vec![0.0f64; g.len()];
                let mut counted = 0usize;
                for f in 0..k {
                    let tr = folds.complement(f);
                    let va = folds.members(f);
                    let xt = DMatrix::from_fn(tr.len(), x.ncols(), |i, j| x[(tr[i], j)]);
                    let yt = DVector::from_fn(tr.len(), |i, _| y[tr[i]]);
                    let (xts, yts, tp) = match standardize(&xt, &yt) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    let p = match lasso_path_on(&xts, &yts, g, tp) {
                        Ok(p) => p,
                        Err(_) => continue,
                    };
                    counted += 1;
                    for gi in 0..g.len() {
                        let mut se = 0.0;
                        for &r in &va {
                            let mut pred = p.params.y_center;
                            for j in 0..x.ncols() {
                                let b = p.betas[(j, gi)];
                                if b != 0.0 {
                                    pred += b * (x[(r, j)] - p.params.x_centers[j]) / p.params.x_scales[j];
                                }
                            }
                            se += (y[r] - pred) * (y[r] - pred);
                        }
                        mse[gi] += se / va.len() as f64;
                    }
                }
                let supp_count: Vec<usize> = (0..g.len())
                    .map(|gi| (0..x.ncols()).filter(|&j| full.betas[(j, gi)] != 0.0).count())
                    .collect();
                for &(vi, cap) in vi_caps {
                    let best = mse
                        .iter()
                        .enumerate()
                        .filter(|(gi, _)| supp_count[*gi] <= cap)
                        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0;
                    let support: Vec<usize> = (0..x.ncols())
                        .filter(|&j| full.betas[(j, best)] != 0.0)
                        .collect();
                    let declared = cand.subset_of_predictors(&support);
                    let (pow, t) = power_type1(&cand, &truth_terms, &declared);
                    pw[vi] += pow;
                    t1[vi] += t;
                }
                if curves && rep < 5 && k == n {
                    let best = mse
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0;
                    let support: Vec<usize> = (0..x.ncols())
                        .filter(|&j| full.betas[(j, best)] != 0.0)
                        .collect();
                    // dump this rep's data for external cross-checks
                    let mut dump = String::new();
                    for i in 0..n {
                        for j in 0..x.ncols() {
                            dump.push_str(&format!("{},", x[(i, j)]));
                        }
                        dump.push_str(&format!("{}\n", y[i]));
                    }
                    std::fs::write(format!("/tmp/rep{rep}_xy.csv"), dump).unwrap();
                    std::fs::write(
                        format!("/tmp/rep{rep}_grid.csv"),
                        grid.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("\n"),
                    )
                    .unwrap();
                    std::fs::write(
                        format!("/tmp/rep{rep}_truth.csv"),
                        truth.active_mes.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
                    )
                    .unwrap();
                    let msg: Vec<String> = (0..grid.len())
                        .step_by(5)
                        .map(|g| format!("{g}:{:.1}", mse[g] / counted as f64))
                        .collect();
                    println!("rep {rep} loocv argmin {best} support {} curve {}", support.len(), msg.join(" "));
                    let res = gauss_lasso_from_path(&x, &y, &cand, &path).unwrap();
                    let bmsg: Vec<String> = res
                        .bic_by_lambda
                        .iter()
                        .enumerate()
                        .step_by(5)
                        .map(|(g, b)| format!("{g}:{:.1}", b))
                        .collect();
                    println!(
                        "rep {rep} gauss argmin {} survivors {} bic {}",
                        res.lambda_index,
                        res.active_terms.size(),
                        bmsg.join(" ")
                    );
                }
            }
        }
        let _ = nf;
    }
    println!("{file} scenario {scen}, {n_reps} reps, mean stop index {:.1}/100", stop_sum as f64 / n_reps as f64);
    for vi in 0..8 {
        println!(
            "  {:<12} power {:.3} type1 {:.3}",
            variants[vi],
            pw[vi] / n_reps as f64,
            t1[vi] / n_reps as f64
        );
    }
}
