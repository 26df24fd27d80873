//! Response-surface and screening designs: construction of standard CCD/BBD
//! designs, CSV ingestion of externally constructed designs, and diagnostics.
//!
//! Externally optimized designs (I-optimal, MaxPro, MEPI, PEC, Bayesian-D,
//! orthogonal arrays, supersaturated designs) are loaded from CSV rather than
//! constructed; see [`load_design_csv`]. A random-search helper for building
//! non-optimal supersaturated stand-ins is provided in [`random_ssd`].

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// An n x m matrix of coded factor settings plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    settings: DMatrix<f64>,
    name: String,
    n_center: usize,
}

impl Design {
    /// `n_center` must equal the number of all-zero rows in `settings`.
    pub fn new(settings: DMatrix<f64>, name: &str, n_center: usize) -> Result<Design> {
        if settings.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "design '{name}' contains non-finite entries"
            )));
        }
        let zeros = count_center_rows(&settings);
        if zeros != n_center {
            return Err(Error::InvalidArgument(format!(
                "design '{name}' has {zeros} all-zero rows but n_center={n_center}"
            )));
        }
        Ok(Design {
            settings,
            name: name.to_string(),
            n_center,
        })
    }

    pub fn settings(&self) -> &DMatrix<f64> {
        &self.settings
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_center(&self) -> usize {
        self.n_center
    }

    /// Run count.
    pub fn n(&self) -> usize {
        self.settings.nrows()
    }

    /// Factor count.
    pub fn m(&self) -> usize {
        self.settings.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.settings.row(i).iter().copied().collect()
    }

    /// New design restricted to the given rows (center count re-inferred).
    pub fn subset_rows(&self, rows: &[usize]) -> Design {
        let sub = DMatrix::from_fn(rows.len(), self.m(), |r, c| self.settings[(rows[r], c)]);
        let n_center = count_center_rows(&sub);
        Design {
            settings: sub,
            name: self.name.clone(),
            n_center,
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.settings.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

fn count_center_rows(settings: &DMatrix<f64>) -> usize {
    (0..settings.nrows())
        .filter(|&r| settings.row(r).iter().all(|&v| v == 0.0))
        .count()
}

/// Which factorial portion a CCD uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorial {
    Full,
    /// Resolution-VI-or-better half fraction; supported for m in [5, 7].
    Half,
}

/// Central composite design: factorial points, 2m axial points at distance
/// `alpha`, and replicated center points. `alpha = 1` gives the face-centered
/// variant.
pub fn ccd(m: usize, alpha: f64, n_center: usize, factorial: Factorial) -> Result<Design> {
    if m < 2 {
        return Err(Error::InvalidArgument("ccd needs m >= 2".into()));
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidArgument("ccd alpha must be positive".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    match factorial {
        Factorial::Full => {
            for code in 0..(1usize << m) {
                rows.push(pm_row(code, m));
            }
        }
        Factorial::Half => {
            if !(5..=7).contains(&m) {
                return Err(Error::InvalidArgument(format!(
                    "half-fraction ccd tabled only for m in [5, 7], got {m}"
                )));
            }
            // Defining relation I = x1 x2 ... xm: keep runs with product +1.
            for code in 0..(1usize << m) {
                let row = pm_row(code, m);
                if row.iter().product::<f64>() > 0.0 {
                    rows.push(row);
                }
            }
        }
    }
    for i in 0..m {
        for sign in [alpha, -alpha] {
            let mut r = vec![0.0; m];
            r[i] = sign;
            rows.push(r);
        }
    }
    rows.extend(std::iter::repeat(vec![0.0; m]).take(n_center));
    let name = match factorial {
        Factorial::Full => format!("ccd_m{m}_a{alpha}"),
        Factorial::Half => format!("ccd_half_m{m}_a{alpha}"),
    };
    Design::new(rows_to_matrix(&rows), &name, n_center)
}

fn pm_row(code: usize, m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| if code >> j & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

// Standard BBD incidence blocks: which factors are at +/-1 in each block,
// all others at zero. Pairs get 2^2 runs, triples 2^3.
fn bbd_blocks(m: usize) -> Option<Vec<Vec<usize>>> {
    let blocks: Vec<Vec<usize>> = match m {
        3 => vec![vec![0, 1], vec![0, 2], vec![1, 2]],
        4 => vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
        ],
        5 => vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![0, 4],
            vec![1, 2],
            vec![1, 3],
            vec![1, 4],
            vec![2, 3],
            vec![2, 4],
            vec![3, 4],
        ],
        6 => vec![
            vec![0, 1, 3],
            vec![1, 2, 4],
            vec![2, 3, 5],
            vec![0, 3, 4],
            vec![1, 4, 5],
            vec![0, 2, 5],
        ],
        7 => vec![
            vec![3, 4, 5],
            vec![0, 5, 6],
            vec![1, 4, 6],
            vec![0, 1, 3],
            vec![2, 3, 6],
            vec![0, 2, 4],
            vec![1, 2, 5],
        ],
        _ => return None,
    };
    Some(blocks)
}

/// Box-Behnken design for m in {3, ..., 7} plus replicated center points.
/// Entries are all in {-1, 0, 1} and every non-center row has at least one
/// zero entry.
pub fn bbd(m: usize, n_center: usize) -> Result<Design> {
    let blocks = bbd_blocks(m)
        .ok_or_else(|| Error::InvalidArgument(format!("bbd tabled only for m in [3, 7], got {m}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for block in &blocks {
        let k = block.len();
        for code in 0..(1usize << k) {
            let mut r = vec![0.0; m];
            for (j, &f) in block.iter().enumerate() {
                r[f] = if code >> j & 1 == 1 { 1.0 } else { -1.0 };
            }
            rows.push(r);
        }
    }
    rows.extend(std::iter::repeat(vec![0.0; m]).take(n_center));
    Design::new(rows_to_matrix(&rows), &format!("bbd_m{m}"), n_center)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows[0].len();
    DMatrix::from_fn(n, m, |r, c| rows[r][c])
}

/// Load a design from CSV: header row `x1,...,xm`, one run per row, decimal
/// coded levels. The center count is inferred from all-zero rows.
pub fn load_design_csv(path: &Path) -> Result<Design> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "design".into());
    parse_design_csv(&text, &name)
}

/// Parse the CSV interchange format from a string.
pub fn parse_design_csv(text: &str, name: &str) -> Result<Design> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty design file".into()))?;
    let m = header.split(',').count();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m {
            return Err(Error::Parse(format!(
                "row {} has {} cells, expected {m}",
                lineno + 2,
                cells.len()
            )));
        }
        let row = cells
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("non-numeric cell '{c}' in row {}", lineno + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("design file has no runs".into()));
    }
    let settings = rows_to_matrix(&rows);
    let n_center = count_center_rows(&settings);
    Design::new(settings, name, n_center)
}

/// Serialize to the CSV interchange format (header `x1,...,xm`).
pub fn design_to_csv(design: &Design) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=design.m()).map(|i| format!("x{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..design.n() {
        let cells: Vec<String> = (0..design.m())
            .map(|c| format!("{}", design.settings()[(r, c)]))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn save_design_csv(design: &Design, path: &Path) -> Result<()> {
    std::fs::write(path, design_to_csv(design))?;
    Ok(())
}

/// E(s^2) normalization convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Es2Norm {
    /// Booth-Cox: average over the C(m,2) column pairs.
    PairMean,
    /// Divide by 2 C(m,2), as in some sources.
    TwicePairMean,
}

/// E(s^2) near-orthogonality criterion over main-effect columns of a
/// two-level design. Center (all-zero) rows are excluded; remaining entries
/// must be +/-1.
pub fn es2(design: &Design) -> Result<f64> {
    es2_normalized(design, Es2Norm::PairMean)
}

pub fn es2_normalized(design: &Design, norm: Es2Norm) -> Result<f64> {
    let rows: Vec<usize> = (0..design.n())
        .filter(|&r| !design.settings().row(r).iter().all(|&v| v == 0.0))
        .collect();
    let m = design.m();
    if m < 2 {
        return Err(Error::InvalidArgument("es2 needs at least two factors".into()));
    }
    for &r in &rows {
        for c in 0..m {
            let v = design.settings()[(r, c)];
            if (v.abs() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "es2 requires two-level +/-1 settings, found {v} at run {r}"
                )));
            }
        }
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let s: f64 = rows
                .iter()
                .map(|&r| design.settings()[(r, i)] * design.settings()[(r, j)])
                .sum();
            total += s * s;
        }
    }
    let pairs = (m * (m - 1) / 2) as f64;
    let denom = match norm {
        Es2Norm::PairMean => pairs,
        Es2Norm::TwicePairMean => 2.0 * pairs,
    };
    Ok(total / denom)
}

/// Diagnostics for a design; report-only, never fails.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub n: usize,
    pub m: usize,
    pub n_center: usize,
    pub column_sums: Vec<f64>,
    pub level_counts: Vec<usize>,
    pub max_abs_entry: f64,
    pub main_effect_rank: usize,
    pub duplicate_rows: usize,
    pub supersaturated: bool,
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "runs: {}  factors: {}  center points: {}", self.n, self.m, self.n_center)?;
        writeln!(f, "max |entry|: {}", self.max_abs_entry)?;
        writeln!(
            f,
            "main-effect rank: {}{}",
            self.main_effect_rank,
            if self.supersaturated { " (supersaturated)" } else { "" }
        )?;
        writeln!(f, "duplicate rows: {}", self.duplicate_rows)?;
        writeln!(
            f,
            "column sums: [{}]",
            self.column_sums
                .iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        )?;
        write!(
            f,
            "levels per column: [{}]",
            self.level_counts
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

pub fn validate_design(design: &Design) -> DesignReport {
    let n = design.n();
    let m = design.m();
    let column_sums: Vec<f64> = (0..m).map(|c| design.settings().column(c).sum()).collect();
    let level_counts: Vec<usize> = (0..m)
        .map(|c| {
            let mut levels: Vec<f64> = design.settings().column(c).iter().copied().collect();
            levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
            levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            levels.len()
        })
        .collect();
    let svd = design.settings().clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &v| a.max(v));
    let main_effect_rank = svd
        .singular_values
        .iter()
        .filter(|&&v| v > 1e-10 * smax.max(1.0))
        .count();
    let mut duplicate_rows = 0;
    for i in 0..n {
        for j in 0..i {
            if (0..m).all(|c| design.settings()[(i, c)] == design.settings()[(j, c)]) {
                duplicate_rows += 1;
                break;
            }
        }
    }
    DesignReport {
        n,
        m,
        n_center: design.n_center(),
        column_sums,
        level_counts,
        max_abs_entry: design.max_abs_entry(),
        main_effect_rank,
        duplicate_rows,
        supersaturated: main_effect_rank < m,
    }
}

/// Random-search supersaturated design: balanced +/-1 columns improved by
/// pairwise element swaps against the E(s^2) criterion. This is a documented
/// heuristic stand-in, not an optimal construction.
pub fn random_ssd<R: Rng>(n: usize, m: usize, iterations: usize, rng: &mut R) -> Result<Design> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidArgument(
            "random_ssd needs an even run count >= 4".into(),
        ));
    }
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let mut c: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
            c.shuffle(rng);
            c
        })
        .collect();

    let pair_score = |a: &[f64], b: &[f64]| -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        s * s
    };
    let col_score = |cols: &[Vec<f64>], j: usize| -> f64 {
        (0..m).filter(|&k| k != j).map(|k| pair_score(&cols[j], &cols[k])).sum()
    };

    for _ in 0..iterations {
        let j = rng.random_range(0..m);
        let before = col_score(&cols, j);
        let plus: Vec<usize> = (0..n).filter(|&i| cols[j][i] > 0.0).collect();
        let minus: Vec<usize> = (0..n).filter(|&i| cols[j][i] < 0.0).collect();
        let a = plus[rng.random_range(0..plus.len())];
        let b = minus[rng.random_range(0..minus.len())];
        cols[j].swap(a, b);
        if col_score(&cols, j) > before {
            cols[j].swap(a, b);
        }
    }
    let settings = DMatrix::from_fn(n, m, |r, c| cols[c][r]);
    Design::new(settings, &format!("ssd_{n}x{m}"), 0)
}
