//! Experiment runner: residual-minimization studies with deterministic
//! CSV/JSON reports. Exit codes: 0 success, 1 configuration error,
//! 2 solver/verification failure (partial results are still written).

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use resmin::lp::GeometricConstants;
use resmin::problems::advection::{cell_average_study, AdvectionData, SourceTerm};
use resmin::problems::laplace::{
    graded_instability_study, laplace_convergence_study, LaplaceData, LaplaceExact, LaplaceRhs,
};
use resmin::problems::{gibbs_ideal_best_lp, gibbs_overshoot, gibbs_scenario};
use resmin::report::{OutputFormat, RunReport, Table};
use resmin::solve::{estimate_rate, solve_mixed, SolverConfig};
use resmin::{scalar_fn, Coefficient};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "resmin",
    about = "Residual minimization in discrete dual norms: experiment runner",
    version
)]
struct Cli {
    /// flat key=value configuration file; command-line flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory for reports
    #[arg(long, global = true, default_value = "out")]
    output: PathBuf,
    /// seed for the randomized suites
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads for sweep points (does not change results)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// report format: csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Geometric constants of l_p: C_BM, C_AO, C_best over an exponent sweep
    Constants {
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
        #[arg(long)]
        p_steps: Option<usize>,
        /// grid resolution of the inner maximizations
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Best-approximation a-priori bound sweep over random instances
    Bestapprox {
        /// comma-separated exponent list
        #[arg(long)]
        p_list: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Advection-reaction runs (piecewise-constant or continuous trial)
    Advect {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n_elem: Option<usize>,
        /// trial family: p0 (cell averages) or p1 (continuous)
        #[arg(long)]
        trial: Option<String>,
        #[arg(long)]
        test_degree: Option<usize>,
        /// data: dirac (discontinuous exact solution) or smooth
        #[arg(long)]
        rhs: Option<String>,
        /// mesh sweep, e.g. 2,4,8,16 (runs a convergence study)
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Gibbs-suppression study: overshoot against p and test degree
    Gibbs {
        #[arg(long)]
        p_list: Option<String>,
        #[arg(long)]
        n_elem: Option<usize>,
        #[arg(long)]
        k_list: Option<String>,
    },
    /// Laplace convergence study in the W^{1,p}0-W^{1,q}0 setting
    Laplace {
        #[arg(long)]
        p: Option<f64>,
        /// rough manufactured solution u = x^alpha - x
        #[arg(long)]
        alpha: Option<f64>,
        /// smooth data f = e^x instead of a rough manufactured solution
        #[arg(long, default_value_t = false)]
        smooth: bool,
        /// trial degree k (test degree defaults to k+1)
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        mesh_list: Option<String>,
    },
    /// Graded one-DOF instability study (Galerkin vs residual minimization)
    Graded {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        eps_list: Option<String>,
    },
    /// Fit log-log convergence rates from a CSV produced by other runs
    Rates {
        #[arg(long)]
        input: PathBuf,
        /// column holding the mesh size h
        #[arg(long, default_value = "h")]
        h_col: String,
        /// columns to fit (comma separated; default: every other column)
        #[arg(long)]
        cols: Option<String>,
    },
    /// Run a named verification suite
    Verify {
        /// one of: duality, bestapprox, equivalence, infsup, rates-smoke
        suite: String,
    },
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

/// Flat key=value file; # starts a comment line.
fn parse_config(path: &PathBuf) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

const GLOBAL_KEYS: &[&str] = &["seed", "jobs", "format", "output"];
const SOLVER_KEYS: &[&str] = &[
    "solver.tol",
    "solver.max_newton",
    "solver.delta_start",
    "solver.delta_end",
    "solver.continuation_p",
];

fn allowed_keys(cmd: &Cmd) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = GLOBAL_KEYS.into();
    keys.extend_from_slice(SOLVER_KEYS);
    match cmd {
        Cmd::Constants { .. } => keys.extend_from_slice(&["p_min", "p_max", "p_steps", "grid"]),
        Cmd::Bestapprox { .. } => keys.extend_from_slice(&["p_list", "samples"]),
        Cmd::Advect { .. } => keys.extend_from_slice(&[
            "p",
            "n_elem",
            "mesh.n_elem",
            "trial",
            "trial.degree",
            "test_degree",
            "test.degree",
            "bc",
            "rhs",
            "sweep",
        ]),
        Cmd::Gibbs { .. } => {
            keys.extend_from_slice(&["p_list", "n_elem", "mesh.n_elem", "k_list", "test.degree"])
        }
        Cmd::Laplace { .. } => keys.extend_from_slice(&[
            "p",
            "alpha",
            "smooth",
            "k",
            "trial.degree",
            "test.degree",
            "mesh_list",
            "bc",
        ]),
        Cmd::Graded { .. } => keys.extend_from_slice(&["p", "eps_list", "alpha"]),
        Cmd::Rates { .. } => keys.extend_from_slice(&["input", "h_col", "cols"]),
        Cmd::Verify { .. } => keys.extend_from_slice(&["suite"]),
    }
    keys
}

struct Ctx {
    cfg: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
    output: PathBuf,
    format: OutputFormat,
    seed: u64,
}

impl Ctx {
    fn get<T: std::str::FromStr>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, ConfigError>
    where
        T: std::fmt::Display,
        <T as std::str::FromStr>::Err: std::fmt::Display,
    {
        let v = if let Some(v) = flag {
            v
        } else if let Some(raw) = self.cfg.get(key) {
            raw.parse::<T>()
                .map_err(|e| ConfigError(format!("key {key}={raw:?}: {e}")))?
        } else {
            default
        };
        self.resolved.insert(key.to_string(), format!("{v}"));
        Ok(v)
    }

    fn get_opt<T: std::str::FromStr>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, ConfigError>
    where
        T: std::fmt::Display,
        <T as std::str::FromStr>::Err: std::fmt::Display,
    {
        let v = if let Some(v) = flag {
            Some(v)
        } else if let Some(raw) = self.cfg.get(key) {
            Some(
                raw.parse::<T>()
                    .map_err(|e| ConfigError(format!("key {key}={raw:?}: {e}")))?,
            )
        } else {
            None
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), format!("{v}"));
        }
        Ok(v)
    }

    fn solver_config(&mut self) -> Result<SolverConfig, ConfigError> {
        let mut sc = SolverConfig::default();
        sc.newton_tol = self.get("solver.tol", None, sc.newton_tol)?;
        sc.max_iter = self.get("solver.max_newton", None, sc.max_iter)?;
        sc.delta_start = self.get("solver.delta_start", None, sc.delta_start)?;
        sc.delta_end = self.get("solver.delta_end", None, sc.delta_end)?;
        if let Some(path) = self.cfg.get("solver.continuation_p") {
            let p = parse_f64_list(path).map_err(ConfigError)?;
            self.resolved
                .insert("solver.continuation_p".into(), path.clone());
            sc.p_path = Some(p);
        }
        Ok(sc)
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, ConfigError> {
    let cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => BTreeMap::new(),
    };
    let allowed = allowed_keys(&cli.cmd);
    for k in cfg.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(ConfigError(format!(
                "unknown configuration key {k:?} for this subcommand (allowed: {allowed:?})"
            )));
        }
    }

    let mut ctx = Ctx {
        resolved: BTreeMap::new(),
        output: cli.output.clone(),
        format: OutputFormat::Csv,
        seed: 0,
        cfg,
    };
    ctx.seed = ctx.get("seed", cli.seed, 20240u64)?;
    let format: String = ctx.get("format", cli.format, "csv".to_string())?;
    ctx.format = format.parse().map_err(ConfigError)?;
    if let Some(out) = ctx.cfg.get("output") {
        ctx.output = PathBuf::from(out);
    }
    let jobs: usize = ctx.get("jobs", cli.jobs, 0usize)?; // 0 = rayon default
    ctx.resolved.remove("jobs"); // parallelism never changes the output
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if jobs > 0 {
            b = b.num_threads(jobs);
        }
        b.build()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?
    };

    match cli.cmd {
        Cmd::Constants {
            p_min,
            p_max,
            p_steps,
            grid,
        } => {
            let p_min = ctx.get("p_min", p_min, 1.02)?;
            let p_max = ctx.get("p_max", p_max, 50.0)?;
            let p_steps = ctx.get("p_steps", p_steps, 60usize)?;
            let grid = ctx.get("grid", grid, 10_000usize)?;
            if !(p_min > 1.0 && p_max > p_min && p_steps >= 2) {
                return Err(ConfigError(
                    "need 1 < p_min < p_max and p_steps >= 2".to_string(),
                ));
            }
            // geometric sampling in p - 1 (the constants vary on that scale)
            let ps: Vec<f64> = (0..p_steps)
                .map(|i| {
                    let t = i as f64 / (p_steps - 1) as f64;
                    1.0 + (p_min - 1.0) * ((p_max - 1.0) / (p_min - 1.0)).powf(t)
                })
                .collect();
            let results: Vec<Result<GeometricConstants, String>> = pool.install(|| {
                ps.par_iter()
                    .map(|&p| {
                        GeometricConstants::compute(p, grid).map_err(|e| format!("p={p}: {e}"))
                    })
                    .collect()
            });
            let mut report = RunReport::new("constants", ctx.resolved.clone());
            report.table = Table::new(&["p", "c_bm", "c_ao", "one_plus_c_ao", "c_best"]);
            let mut failures = Vec::new();
            for r in results {
                match r {
                    Ok(g) => report
                        .table
                        .push(vec![g.p, g.c_bm, g.c_ao, 1.0 + g.c_ao, g.c_best]),
                    Err(e) => failures.push(e),
                }
            }
            finish(&ctx, report, &failures)
        }
        Cmd::Bestapprox { p_list, samples } => {
            let p_list = ctx.get("p_list", p_list, "1.05,1.5,3,20".to_string())?;
            let samples = ctx.get("samples", samples, 1000usize)?;
            let ps = parse_f64_list(&p_list).map_err(ConfigError)?;
            let seed = ctx.seed;
            let rows: Vec<Result<Vec<f64>, String>> = pool.install(|| {
                ps.par_iter()
                    .map(|&p| bestapprox_row(p, samples, seed).map_err(|e| format!("p={p}: {e}")))
                    .collect()
            });
            let mut report = RunReport::new("bestapprox", ctx.resolved.clone());
            report.table =
                Table::new(&["p", "max_ratio", "c_bm", "one_plus_c_ao", "bound", "samples"]);
            let mut failures = Vec::new();
            for r in rows {
                match r {
                    Ok(row) => report.table.push(row),
                    Err(e) => failures.push(e),
                }
            }
            finish(&ctx, report, &failures)
        }
        Cmd::Advect {
            p,
            n_elem,
            trial,
            test_degree,
            rhs,
            sweep,
        } => {
            let p = ctx.get("p", p, 2.0)?;
            let trial = {
                let t: String = ctx.get("trial", trial, "p0".to_string())?;
                if let Some(d) = ctx.cfg.get("trial.degree") {
                    format!("p{d}")
                } else {
                    t
                }
            };
            let n_elem = {
                let n = ctx.get("n_elem", n_elem, 8usize)?;
                match ctx.cfg.get("mesh.n_elem") {
                    Some(raw) => raw
                        .parse()
                        .map_err(|e| ConfigError(format!("mesh.n_elem: {e}")))?,
                    None => n,
                }
            };
            let test_degree = {
                let k = ctx.get("test_degree", test_degree, 2usize)?;
                match ctx.cfg.get("test.degree") {
                    Some(raw) => raw
                        .parse()
                        .map_err(|e| ConfigError(format!("test.degree: {e}")))?,
                    None => k,
                }
            };
            if let Some(bc) = ctx.cfg.get("bc") {
                if bc != "zero-right" && bc != "none" {
                    return Err(ConfigError(format!(
                        "advection test spaces vanish at the outflow; bc={bc:?} is not usable here"
                    )));
                }
            }
            let rhs_kind = ctx.get("rhs", rhs, "dirac".to_string())?;
            let sweep = ctx.get_opt("sweep", sweep)?;
            let solver = ctx.solver_config()?;
            advect_cmd(&ctx, &pool, p, n_elem, &trial, test_degree, &rhs_kind, sweep, &solver)
        }
        Cmd::Gibbs {
            p_list,
            n_elem,
            k_list,
        } => {
            let p_list = ctx.get("p_list", p_list, "2,1.5,1.25,1.125,1.01".to_string())?;
            let n_elem = ctx.get("n_elem", n_elem, 6usize)?;
            let k_list = ctx.get("k_list", k_list, "2,3,5".to_string())?;
            let ps = parse_f64_list(&p_list).map_err(ConfigError)?;
            let ks = parse_usize_list(&k_list).map_err(ConfigError)?;
            let solver = ctx.solver_config()?;
            let combos: Vec<(f64, usize)> = ps
                .iter()
                .flat_map(|&p| ks.iter().map(move |&k| (p, k)))
                .collect();
            let rows: Vec<Result<Vec<f64>, String>> = pool.install(|| {
                combos
                    .par_iter()
                    .map(|&(p, k)| {
                        let prob = gibbs_scenario(p, n_elem, k).map_err(|e| format!("{e}"))?;
                        let sol =
                            solve_mixed(&prob, &solver).map_err(|e| format!("p={p} k={k}: {e}"))?;
                        let ideal =
                            gibbs_ideal_best_lp(p, n_elem, 16).map_err(|e| format!("{e}"))?;
                        Ok(vec![
                            p,
                            k as f64,
                            gibbs_overshoot(&sol.u_n),
                            gibbs_overshoot(&ideal),
                        ])
                    })
                    .collect()
            });
            let mut report = RunReport::new("gibbs", ctx.resolved.clone());
            report.table = Table::new(&["p", "k", "overshoot", "ideal_overshoot"]);
            let mut failures = Vec::new();
            for r in rows {
                match r {
                    Ok(row) => report.table.push(row),
                    Err(e) => failures.push(e),
                }
            }
            finish(&ctx, report, &failures)
        }
        Cmd::Laplace {
            p,
            alpha,
            smooth,
            k,
            mesh_list,
        } => {
            let p = ctx.get("p", p, 1.5)?;
            let k = {
                let k = ctx.get("k", k, 1usize)?;
                match ctx.cfg.get("trial.degree") {
                    Some(raw) => raw
                        .parse()
                        .map_err(|e| ConfigError(format!("trial.degree: {e}")))?,
                    None => k,
                }
            };
            let k_test = match ctx.cfg.get("test.degree") {
                Some(raw) => raw
                    .parse()
                    .map_err(|e| ConfigError(format!("test.degree: {e}")))?,
                None => k + 1,
            };
            if let Some(bc) = ctx.cfg.get("bc") {
                if bc != "zero-both" {
                    return Err(ConfigError(format!(
                        "the Dirichlet Laplacian uses bc=zero-both, got {bc:?}"
                    )));
                }
            }
            let smooth = smooth || ctx.cfg.get("smooth").map(|s| s == "true").unwrap_or(false);
            let alpha = ctx.get_opt("alpha", alpha)?;
            let mesh_list = ctx.get("mesh_list", mesh_list, "2,4,8,16,32,64".to_string())?;
            let ns = parse_usize_list(&mesh_list).map_err(ConfigError)?;
            if ns.is_empty() {
                return Err(ConfigError("mesh_list must not be empty".to_string()));
            }
            let solver = ctx.solver_config()?;
            let (data, exact) = if smooth {
                (
                    LaplaceData::new(p, LaplaceRhs::Smooth(scalar_fn(|x| x.exp())))
                        .map_err(|e| ConfigError(e.to_string()))?,
                    LaplaceExact::smooth_exp(),
                )
            } else {
                let alpha = alpha.ok_or_else(|| {
                    ConfigError("either --smooth or --alpha <a> is required".to_string())
                })?;
                (
                    LaplaceData::new(p, LaplaceRhs::ManufacturedPower { alpha })
                        .map_err(|e| ConfigError(e.to_string()))?,
                    LaplaceExact::power(alpha),
                )
            };
            let study =
                pool.install(|| laplace_convergence_study(&data, &exact, k, k_test, &ns, &solver));
            let mut report = RunReport::new("laplace", ctx.resolved.clone());
            report.table = Table::new(&["n", "h", "energy_error", "r_energy", "lp_error", "r_lq"]);
            match study {
                Ok(s) => {
                    for row in &s.rows {
                        report.table.push(vec![
                            row.n_elem as f64,
                            row.h,
                            row.energy_error,
                            row.r_energy,
                            row.lp_error,
                            row.r_lq,
                        ]);
                    }
                    report.notes.push(format!(
                        "rate_energy={} r2={}",
                        resmin::report::fmt_sci(s.rate_energy.rate),
                        resmin::report::fmt_sci(s.rate_energy.r2)
                    ));
                    report.notes.push(format!(
                        "rate_lp={} r2={}",
                        resmin::report::fmt_sci(s.rate_lp.rate),
                        resmin::report::fmt_sci(s.rate_lp.r2)
                    ));
                    report.notes.push(format!(
                        "rate_r_energy={}",
                        resmin::report::fmt_sci(s.rate_r_energy.rate)
                    ));
                    finish(&ctx, report, &[])
                }
                Err(e) => finish(&ctx, report, &[format!("{e}")]),
            }
        }
        Cmd::Graded { p, eps_list } => {
            let p = ctx.get("p", p, 1.25)?;
            let alpha = ctx.get("alpha", None, 0.25)?;
            let default_eps: String = (0..16)
                .map(|k| format!("{:e}", 0.5 * 10f64.powi(-k)))
                .collect::<Vec<_>>()
                .join(",");
            let eps_list = ctx.get("eps_list", eps_list, default_eps)?;
            let eps = parse_f64_list(&eps_list).map_err(ConfigError)?;
            let solver = ctx.solver_config()?;
            let study = pool.install(|| graded_instability_study(&eps, p, alpha, &solver));
            let mut report = RunReport::new("graded", ctx.resolved.clone());
            report.table = Table::new(&[
                "eps",
                "galerkin",
                "ideal",
                "inexact",
                "oracle_ideal",
                "oracle_inexact",
                "exact_rm",
            ]);
            match study {
                Ok(s) => {
                    for r in &s.rows {
                        report.table.push(vec![
                            r.epsilon,
                            r.galerkin,
                            r.ideal,
                            r.inexact,
                            r.oracle_ideal,
                            r.oracle_inexact,
                            r.exact_rm,
                        ]);
                    }
                    finish(&ctx, report, &[])
                }
                Err(e) => finish(&ctx, report, &[format!("{e}")]),
            }
        }
        Cmd::Rates { input, h_col, cols } => {
            let (header, data) = read_csv_table(&input)?;
            let h_idx = header.iter().position(|c| c == &h_col).ok_or_else(|| {
                ConfigError(format!("no column {h_col:?} in {}", input.display()))
            })?;
            let targets: Vec<usize> = match cols {
                Some(list) => list
                    .split(',')
                    .map(|c| {
                        header
                            .iter()
                            .position(|h| h == c.trim())
                            .ok_or_else(|| ConfigError(format!("no column {c:?}")))
                    })
                    .collect::<Result<_, _>>()?,
                None => (0..header.len()).filter(|&i| i != h_idx).collect(),
            };
            let h: Vec<f64> = data.iter().map(|r| r[h_idx]).collect();
            let mut report = RunReport::new("rates", ctx.resolved.clone());
            report.table = Table::new(&["column_index", "rate", "r2"]);
            for &t in &targets {
                let e: Vec<f64> = data.iter().map(|r| r[t]).collect();
                match estimate_rate(&h, &e) {
                    Ok(fit) => {
                        report.table.push(vec![t as f64, fit.rate, fit.r2]);
                        report.notes.push(format!(
                            "{}: rate {:.4} (r2 {:.5})",
                            header[t], fit.rate, fit.r2
                        ));
                    }
                    Err(e) => report
                        .notes
                        .push(format!("{}: not fittable ({e})", header[t])),
                }
            }
            finish(&ctx, report, &[])
        }
        Cmd::Verify { suite } => {
            let results = resmin::verify::run_suite(&suite, ctx.seed).ok_or_else(|| {
                ConfigError(format!(
                    "unknown suite {suite:?}; available: {:?}",
                    resmin::verify::SUITES
                ))
            })?;
            let mut report = RunReport::new(format!("verify-{suite}"), ctx.resolved.clone());
            let mut all_pass = true;
            for r in &results {
                println!(
                    "{} {}: {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.details
                );
                all_pass &= r.pass;
            }
            report.checks = results;
            report
                .save(&ctx.output, ctx.format)
                .map_err(|e| ConfigError(format!("write report: {e}")))?;
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn bestapprox_row(p: f64, samples: usize, seed: u64) -> Result<Vec<f64>, resmin::lp::LpError> {
    use rand::{Rng, SeedableRng};
    use resmin::lp::{best_approx_lp, c_bm, compute_c_ao, LpVector};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ p.to_bits());
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < samples {
        let y = LpVector::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], p)?;
        let d = LpVector::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], p)?;
        if y.norm() < 0.1 || d.norm() < 0.1 {
            continue;
        }
        tested += 1;
        let (y0, _) = best_approx_lp(&y, std::slice::from_ref(&d), 1e-9)?;
        worst = worst.max(y0.norm() / y.norm());
    }
    let cbm = c_bm(p);
    let cao = compute_c_ao(p, 10_000);
    Ok(vec![p, worst, cbm, 1.0 + cao, cbm.min(1.0 + cao), samples as f64])
}

#[allow(clippy::too_many_arguments)]
fn advect_cmd(
    ctx: &Ctx,
    pool: &rayon::ThreadPool,
    p: f64,
    n_elem: usize,
    trial: &str,
    test_degree: usize,
    rhs_kind: &str,
    sweep: Option<String>,
    solver: &SolverConfig,
) -> Result<ExitCode, ConfigError> {
    let jump = 2.0f64.sqrt() / 2.0;
    let (data, exact_breaks, domain, exact): (
        AdvectionData,
        Vec<f64>,
        (f64, f64),
        resmin::ScalarFn,
    ) = match rhs_kind {
        "dirac" => (
            AdvectionData::new(
                Coefficient::constant(1.0),
                Coefficient::constant(0.0),
                SourceTerm::Dirac(vec![(jump, 2.0)]),
            )
            .with_inflow_left(-1.0),
            vec![jump],
            (0.0, 1.0),
            scalar_fn(move |x| if x >= jump { 1.0 } else { -1.0 }),
        ),
        "smooth" => (
            AdvectionData::new(
                Coefficient::constant(1.0),
                Coefficient::constant(1.0),
                SourceTerm::Smooth(scalar_fn(|_| 1.0)),
            )
            .with_inflow_left(0.0),
            vec![],
            (0.0, 1.0),
            scalar_fn(|x| 1.0 - (-x).exp()),
        ),
        other => {
            return Err(ConfigError(format!(
                "rhs must be dirac or smooth, got {other:?}"
            )))
        }
    };

    match trial {
        "p0" => {
            let ns: Vec<usize> = match &sweep {
                Some(s) => parse_usize_list(s).map_err(ConfigError)?,
                None => vec![n_elem],
            };
            if ns.is_empty() {
                return Err(ConfigError("sweep must not be empty".to_string()));
            }
            let rows = pool.install(|| {
                cell_average_study(&data, &exact, &exact_breaks, domain, &[p], &ns, solver)
            });
            let mut report = RunReport::new("advect", ctx.resolved.clone());
            report.table = Table::new(&["p", "n", "h", "lp_error"]);
            match rows {
                Ok(rows) => {
                    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
                    let e: Vec<f64> = rows.iter().map(|r| r.lp_error).collect();
                    for r in rows.iter() {
                        report.table.push(vec![r.p, r.n_elem as f64, r.h, r.lp_error]);
                    }
                    if rows.len() >= 3 {
                        if let Ok(fit) = estimate_rate(&h, &e) {
                            report
                                .notes
                                .push(format!("rate={:.4} r2={:.5}", fit.rate, fit.r2));
                        }
                    }
                    finish(ctx, report, &[])
                }
                Err(e) => finish(ctx, report, &[format!("{e}")]),
            }
        }
        "p1" => {
            // continuous trial: the discontinuous-solution scenario at the
            // requested p and test degree; reports the sampled profile
            if rhs_kind != "dirac" {
                return Err(ConfigError(
                    "continuous-trial runs support rhs=dirac (the discontinuous-solution scenario)"
                        .to_string(),
                ));
            }
            let prob = gibbs_scenario(p, n_elem, test_degree.max(2))
                .map_err(|e| ConfigError(e.to_string()))?;
            let sol = match solve_mixed(&prob, solver) {
                Ok(s) => s,
                Err(e) => {
                    let report = RunReport::new("advect", ctx.resolved.clone());
                    return finish(ctx, report, &[format!("{e}")]);
                }
            };
            let mut report = RunReport::new("advect", ctx.resolved.clone());
            report.table = Table::new(&["x", "u_n"]);
            let mesh = sol.u_n.space().mesh().clone();
            for i in 0..=200 {
                let x = mesh.a() + (mesh.b() - mesh.a()) * i as f64 / 200.0;
                report.table.push(vec![x, sol.u_n.eval(x)]);
            }
            report.notes.push(format!(
                "overshoot={}",
                resmin::report::fmt_sci(gibbs_overshoot(&sol.u_n))
            ));
            finish(ctx, report, &[])
        }
        other => Err(ConfigError(format!(
            "trial must be p0 or p1, got {other:?}"
        ))),
    }
}

fn read_csv_table(path: &PathBuf) -> Result<(Vec<String>, Vec<Vec<f64>>), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut header = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| ConfigError(format!("bad row {line:?}: {e}")))?);
    }
    Ok((header.unwrap_or_default(), rows))
}

fn finish(ctx: &Ctx, report: RunReport, failures: &[String]) -> Result<ExitCode, ConfigError> {
    let path = report
        .save(&ctx.output, ctx.format)
        .map_err(|e| ConfigError(format!("write report: {e}")))?;
    println!(
        "{}: {} rows -> {}",
        report.scenario,
        report.table.rows.len(),
        path.display()
    );
    for n in &report.notes {
        println!("  {n}");
    }
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in failures {
            eprintln!("solver failure: {f}");
        }
        Ok(ExitCode::from(2))
    }
}
