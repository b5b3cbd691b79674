//! The six experiments. `prepare` validates everything that can be checked
//! without heavy compute; `Plan::execute` does the work.

use crate::config::{Experiment, ExperimentConfig};
use phivar::conditions::{preset, series_check, verdict_csv, PresetParams, SeriesStatus, Theorem1Config};
use phivar::hermite::{sigma_mh, DiscretizedKernel};
use phivar::metric::{chaining_statistic, PseudoMetric};
use phivar::simulate::{covariance_report, FbmGenerator, HermiteGenerator, HermiteSimParams, SamplePath};
use phivar::variation::{jm_bound_report, sup_variation};
use phivar::VariationFunction;
use std::fmt::Write as _;

pub struct Report {
    pub lines: Vec<String>,
    pub csv: String,
    /// Whitespace-separated plot data.
    pub dat: String,
    pub pass: bool,
}

/// Order-preserving map over `items` on up to `threads` scoped workers.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub enum Source {
    Fbm(FbmGenerator),
    Hermite(Box<HermiteGenerator>),
}

impl Source {
    fn new(m: u32, h: f64, n: usize) -> Result<Self, String> {
        if m == 1 {
            FbmGenerator::new(h, n).map(Source::Fbm).map_err(|e| e.to_string())
        } else {
            HermiteGenerator::new(m, h, n, HermiteSimParams::default()).map(|g| Source::Hermite(Box::new(g))).map_err(|e| e.to_string())
        }
    }

    fn path(&self, seed: u64, rep: u64) -> SamplePath {
        match self {
            Source::Fbm(g) => g.path(seed, rep),
            Source::Hermite(g) => g.path(seed, rep),
        }
    }
}

fn fbm_paths(h: f64, n: usize, seed: u64, count: usize, threads: usize) -> Result<Vec<SamplePath>, String> {
    let g = FbmGenerator::new(h, n).map_err(|e| e.to_string())?;
    let reps: Vec<u64> = (0..count as u64).collect();
    Ok(par_map(&reps, threads, |&r| g.path(seed, r)))
}

fn grid_list(v: &[f64], key: &str) -> Result<Vec<usize>, String> {
    v.iter()
        .map(|&x| {
            if x.fract() != 0.0 || x < 2.0 {
                Err(format!("`{key}` entries must be integers >= 2, got {x}"))
            } else {
                Ok(x as usize)
            }
        })
        .collect()
}

pub enum Plan {
    Sigma { m: u32, h: f64, nodes: usize, u_far: f64 },
    Series { cfg: Theorem1Config, params: PresetParams, m_max: u32 },
    Limiting { source: Source, m: u32, h: f64, grid: usize, paths: usize, phi: VariationFunction, deltas: Vec<f64>, seed: u64 },
    Chaining { h: f64, grids: Vec<usize>, paths: usize, alpha: f64, seed: u64 },
    Covariance { h: f64, n: usize, paths: usize, points: usize, seed: u64 },
    Jm { p: f64, h: f64, grids: Vec<usize>, paths: usize, seed: u64 },
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Plan, String> {
    match cfg.experiment {
        Experiment::SigmaConstant => {
            let (m, h) = (cfg.int("m") as u32, cfg.float("H"));
            Ok(Plan::Sigma { m, h, nodes: cfg.int("nodes") as usize, u_far: cfg.float("U") })
        }
        Experiment::SeriesCheck => {
            let f = |k: &str| cfg.float(k);
            let params = match cfg.int("case") {
                1 => PresetParams::PowerLogLog { p: f("p"), alpha: f("alpha") },
                2 => PresetParams::PowerFromLogLog { p: f("p"), alpha: f("alpha") },
                3 => PresetParams::ExpBeta { alpha: f("alpha"), beta0: f("beta0"), beta: f("beta") },
                _ => PresetParams::ExpLogPow { alpha: f("alpha"), c: f("c"), r: f("r"), v: f("v") },
            };
            let t1 = preset(params).map_err(|e| e.to_string())?;
            Ok(Plan::Series { cfg: t1, params, m_max: cfg.int("m_max") as u32 })
        }
        Experiment::LimitingVariation => {
            let (m, h) = (cfg.int("m") as u32, cfg.float("H"));
            if h < 0.5 || (h == 0.5 && m > 1) {
                return Err(format!("H must be in (1/2, 1) for m = {m} (H = 1/2 only for m = 1), got {h}"));
            }
            let grid = cfg.int("grid") as usize;
            let phi = match cfg.phi("phi") {
                Some(p) => p,
                None => VariationFunction::hermite(m, h).map_err(|e| e.to_string())?,
            };
            let deltas = match cfg.list("deltas") {
                Some(d) => d,
                None => {
                    let mut d: Vec<f64> = [8.0, 4.0, 2.0, 1.0].iter().map(|k| (k * 4.0 / (grid as f64).sqrt()).min(1.0)).collect();
                    d.dedup();
                    d
                }
            };
            let step = 1.0 / grid as f64;
            if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|&d| d < step || d > 1.0) {
                return Err(format!("deltas must decrease strictly and lie in [1/grid, 1], got {deltas:?}"));
            }
            let source = Source::new(m, h, grid)?;
            Ok(Plan::Limiting { source, m, h, grid, paths: cfg.int("paths") as usize, phi, deltas, seed: cfg.seed })
        }
        Experiment::Chaining => {
            let grids = grid_list(&cfg.list("grids").ok_or("`grids` cannot be auto")?, "grids")?;
            if grids.len() < 2 {
                return Err("`grids` needs at least two sizes".into());
            }
            Ok(Plan::Chaining { h: cfg.float("H"), grids, paths: cfg.int("paths") as usize, alpha: cfg.float("alpha"), seed: cfg.seed })
        }
        Experiment::Covariance => {
            let (n, points) = (cfg.int("n") as usize, cfg.int("points") as usize);
            if n % points != 0 {
                return Err(format!("`n` ({n}) must be divisible by `points` ({points})"));
            }
            Ok(Plan::Covariance { h: cfg.float("H"), n, paths: cfg.int("paths") as usize, points, seed: cfg.seed })
        }
        Experiment::JmBound => {
            let grids = grid_list(&cfg.list("grids").ok_or("`grids` cannot be auto")?, "grids")?;
            if let Some(g) = grids.iter().find(|&&g| g > phivar::variation::MAX_FULL_DP) {
                return Err(format!("grid {g} exceeds the full-DP limit {}", phivar::variation::MAX_FULL_DP));
            }
            Ok(Plan::Jm { p: cfg.float("p"), h: cfg.float("H"), grids, paths: cfg.int("paths") as usize, seed: cfg.seed })
        }
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

impl Plan {
    pub fn execute(self, threads: usize) -> Result<Report, String> {
        match self {
            Plan::Sigma { m, h, nodes, u_far } => sigma(m, h, nodes, u_far),
            Plan::Series { cfg, params, m_max } => series(&cfg, params, m_max),
            Plan::Limiting { source, m, h, grid, paths, phi, deltas, seed } => {
                limiting(&source, m, h, grid, paths, &phi, &deltas, seed, threads)
            }
            Plan::Chaining { h, grids, paths, alpha, seed } => chaining(h, &grids, paths, alpha, seed, threads),
            Plan::Covariance { h, n, paths, points, seed } => covariance(h, n, paths, points, seed, threads),
            Plan::Jm { p, h, grids, paths, seed } => jm(p, h, &grids, paths, seed, threads),
        }
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

fn sigma(m: u32, h: f64, nodes: usize, u_far: f64) -> Result<Report, String> {
    let disc = DiscretizedKernel::cached(m, h, u_far, nodes).map_err(|e| e.to_string())?;
    let s = sigma_mh(&disc).map_err(|e| e.to_string())?;
    let sigma_h = s.sigma.powf(h);
    let bound = 2f64.powf(m as f64 / 2.0) / factorial(m).sqrt();
    let mut lines = vec![format!("m = {m}, H = {h}, nodes = {nodes}, method {:?}", s.method)];
    let pass = if m == 1 {
        let target = 2f64.powf(0.5 / h);
        let rel = (s.sigma / target - 1.0).abs();
        lines.push(format!("sigma = {:.6} (target 2^(1/(2H)) = {target:.6}, rel err {rel:.2e})", s.sigma));
        rel < 1e-3
    } else {
        let tag = if s.lower_bound { " (lower bound)" } else { "" };
        lines.push(format!("sigma = {:.6}{tag}, sigma^H = {sigma_h:.6} < 2^(m/2)/sqrt(m!) = {bound:.6}", s.sigma));
        bound - sigma_h >= 1e-3
    };
    let csv = format!(
        "m,H,nodes,sup,sigma,sigma_pow_H,bound,lower_bound\n{m},{h},{nodes},{:e},{:e},{:e},{:e},{}\n",
        s.sup, s.sigma, sigma_h, bound, s.lower_bound
    );
    let dat = format!("# m H sigma sigma^H bound\n{m} {h} {:e} {sigma_h:e} {bound:e}\n", s.sigma);
    Ok(Report { lines, csv, dat, pass })
}

fn series(cfg: &Theorem1Config, params: PresetParams, m_max: u32) -> Result<Report, String> {
    let v = series_check(cfg, m_max).map_err(|e| e.to_string())?;
    let last = v.partial_sums.last().unwrap().1;
    let lines = vec![
        format!("case {} {params:?}, C = {:.6e}, m_max = {m_max}", params.case(), cfg.c),
        format!("{:?}: partial sum {last:.6e}, tail ratio {:.4}, tail estimate {:.3e}", v.status, v.tail_ratio, v.tail_estimate),
    ];
    let mut dat = String::from("# m ln_term partial_sum\n");
    for r in &v.rows {
        let _ = writeln!(dat, "{} {:e} {:e}", r.m, r.ln_term, r.partial_sum);
    }
    Ok(Report { lines, csv: verdict_csv(&v), dat, pass: v.status == SeriesStatus::Converges })
}

#[allow(clippy::too_many_arguments)]
fn limiting(
    source: &Source,
    m: u32,
    h: f64,
    grid: usize,
    paths: usize,
    phi: &VariationFunction,
    deltas: &[f64],
    seed: u64,
    threads: usize,
) -> Result<Report, String> {
    let target = if m == 1 {
        2f64.powf(0.5 / h)
    } else {
        let disc = DiscretizedKernel::cached(m, h, 1e8, 64).map_err(|e| e.to_string())?;
        sigma_mh(&disc).map_err(|e| e.to_string())?.sigma
    };
    let reps: Vec<u64> = (0..paths as u64).collect();
    // per path: (value, mesh) for each delta
    let per_path: Vec<Result<Vec<(f64, f64)>, String>> = par_map(&reps, threads, |&r| {
        let p = source.path(seed, r);
        deltas
            .iter()
            .map(|&d| sup_variation(&p, phi, Some(d)).map(|res| (res.value, res.mesh)).map_err(|e| e.to_string()))
            .collect()
    });
    let per_path: Vec<Vec<(f64, f64)>> = per_path.into_iter().collect::<Result<_, _>>()?;
    let mut lines = vec![format!("m = {m}, H = {h}, grid = {grid}, paths = {paths}, phi = {phi}, target sigma = {target:.6}")];
    let mut csv = String::from("delta,mean_sup,std_err,mean_mesh\n");
    let mut dat = String::from("# delta mean_sup std_err mean_mesh\n");
    let mut last = 0.0;
    for (k, d) in deltas.iter().enumerate() {
        let vals: Vec<f64> = per_path.iter().map(|v| v[k].0).collect();
        let meshes: Vec<f64> = per_path.iter().map(|v| v[k].1).collect();
        let (mean, sd) = mean_sd(&vals);
        let se = sd / (vals.len() as f64).sqrt();
        let mesh = mean_sd(&meshes).0;
        let _ = writeln!(csv, "{d:e},{mean:e},{se:e},{mesh:e}");
        let _ = writeln!(dat, "{d:e} {mean:e} {se:e} {mesh:e}");
        lines.push(format!("delta = {d:.6}: mean sup v_phi = {mean:.4} +- {se:.4} (mean mesh {mesh:.6})"));
        last = mean;
    }
    let pass = last >= 0.5 * target && last <= 1.75 * target;
    lines.push(format!("smallest delta: {last:.4} vs bracket [{:.4}, {:.4}]", 0.5 * target, 1.75 * target));
    Ok(Report { lines, csv, dat, pass })
}

fn chaining(h: f64, grids: &[usize], paths: usize, alpha: f64, seed: u64, threads: usize) -> Result<Report, String> {
    let d = PseudoMetric::holder(1.0, h).map_err(|e| e.to_string())?;
    let mut csv = String::from("n,mean_theta,std_err\n");
    let mut dat = String::from("# n mean_theta std_err\n");
    let mut lines = vec![format!("H = {h}, alpha = {alpha}, paths = {paths}")];
    let mut means = Vec::new();
    for &n in grids {
        let ps = fbm_paths(h, n, seed, paths, threads)?;
        let thetas: Vec<Result<f64, String>> =
            par_map(&ps, threads, |p| chaining_statistic(std::slice::from_ref(p), &d, alpha).map(|r| r.mean).map_err(|e| e.to_string()));
        let thetas: Vec<f64> = thetas.into_iter().collect::<Result<_, _>>()?;
        let (mean, sd) = mean_sd(&thetas);
        let se = sd / (paths as f64).sqrt();
        let _ = writeln!(csv, "{n},{mean:e},{se:e}");
        let _ = writeln!(dat, "{n} {mean:e} {se:e}");
        lines.push(format!("n = {n}: mean theta = {mean:.4} +- {se:.4}"));
        means.push(mean);
    }
    let growth = means.last().unwrap() / means[0] - 1.0;
    lines.push(format!("growth first -> last grid: {:.1}% (limit 10%)", 100.0 * growth));
    Ok(Report { lines, csv, dat, pass: growth < 0.1 })
}

fn covariance(h: f64, n: usize, paths: usize, points: usize, seed: u64, threads: usize) -> Result<Report, String> {
    let ps = fbm_paths(h, n, seed, paths, threads)?;
    let r = covariance_report(&ps, h, points).map_err(|e| e.to_string())?;
    let mut csv = String::from("s,t,empirical,theory,mc_sigma\n");
    let mut dat = String::from("# s t empirical theory mc_sigma\n");
    for (i, s) in r.times.iter().enumerate() {
        for (j, t) in r.times.iter().enumerate() {
            let (e, th, mc) = (r.empirical[i][j], r.theory[i][j], r.mc_sigma[i][j]);
            let _ = writeln!(csv, "{s},{t},{e:e},{th:e},{mc:e}");
            let _ = writeln!(dat, "{s} {t} {e:e} {th:e} {mc:e}");
        }
    }
    let lines = vec![
        format!("H = {h}, n = {n}, paths = {paths}, points = {points}"),
        format!("max |dev| = {:.3e} = {:.2} MC-sigma (limit 3)", r.max_abs_dev, r.max_dev_sigma),
    ];
    Ok(Report { lines, csv, dat, pass: r.max_dev_sigma < 3.0 })
}

fn jm(p: f64, h: f64, grids: &[usize], paths: usize, seed: u64, threads: usize) -> Result<Report, String> {
    let d = PseudoMetric::holder(1.0, h).map_err(|e| e.to_string())?;
    let mut csv = String::from("n,mean_norm,w_p,ratio\n");
    let mut dat = String::from("# n mean_norm w_p ratio\n");
    let mut lines = vec![format!("p = {p}, H = {h}, paths = {paths}")];
    let mut ratios = Vec::new();
    for &n in grids {
        let ps = fbm_paths(h, n, seed, paths, threads)?;
        let reports: Vec<Result<_, String>> =
            par_map(&ps, threads, |x| jm_bound_report(std::slice::from_ref(x), p, &d).map_err(|e| e.to_string()));
        let reports: Vec<_> = reports.into_iter().collect::<Result<_, _>>()?;
        let mean = reports.iter().map(|r| r.mean_norm).sum::<f64>() / reports.len() as f64;
        let (w, ratio) = match reports[0].w_p {
            phivar::metric::MetricVariation::Finite(w) => (w, Some(mean / (w.powf(1.0 / p) * (1.0 + w.sqrt())))),
            _ => (f64::INFINITY, None),
        };
        let rs = ratio.map_or("none".to_string(), |r| format!("{r:e}"));
        let _ = writeln!(csv, "{n},{mean:e},{w:e},{rs}");
        let _ = writeln!(dat, "{n} {mean:e} {w:e} {rs}");
        let shown = ratio.map_or("none".to_string(), |r| format!("{r:.4}"));
        lines.push(format!("n = {n}: mean ||X||_p = {mean:.4}, W_p = {w:.4}, ratio = {shown}"));
        ratios.push(ratio);
    }
    let pass = match ratios.iter().copied().collect::<Option<Vec<f64>>>() {
        Some(r) => {
            let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(l, u), &x| (l.min(x), u.max(x)));
            lines.push(format!("ratio spread {:.1}% (limit 20%)", 100.0 * (hi / lo - 1.0)));
            hi / lo - 1.0 < 0.2
        }
        None => {
            lines.push("W_p not finite: no ratio".into());
            false
        }
    };
    Ok(Report { lines, csv, dat, pass })
}
