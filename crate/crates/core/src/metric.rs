//! Pseudo-metrics on [0,1], covering numbers, the entropy integral δ(ε),
//! metric variation V(Ψ,d) and the chaining statistic Θ.

use crate::error::{Error, Result};
use crate::funcs::{orlicz_norm_mc, OrliczFamily, VariationFunction};
use crate::quad;
use crate::simulate::SamplePath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    /// d(s,t) = c|s−t|^H
    HolderScaled { c: f64, h: f64 },
    /// Pairwise distances between grid points, row-major n×n.
    Tabulated { grid: Vec<f64>, dist: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMetric {
    pub kind: MetricKind,
    pub diameter: f64,
}

impl PseudoMetric {
    pub fn holder(c: f64, h: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0 && h.is_finite() && h > 0.0) {
            return Err(Error::Argument(format!("HolderScaled needs c > 0 and H > 0, got c={c}, H={h}")));
        }
        Ok(PseudoMetric { kind: MetricKind::HolderScaled { c, h }, diameter: c })
    }

    pub fn tabulated(grid: Vec<f64>, dist: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n == 0 || dist.len() != n * n {
            return Err(Error::Argument(format!("need a nonempty grid and an n×n matrix, got n={n}, {} entries", dist.len())));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Argument("grid must be strictly increasing".into()));
        }
        let mut diam = 0.0f64;
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::Argument(format!("d({i},{i}) must be 0")));
            }
            for j in 0..n {
                let v = dist[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Argument(format!("d({i},{j}) = {v} is not a nonnegative number")));
                }
                if v != dist[j * n + i] {
                    return Err(Error::Argument(format!("matrix not symmetric at ({i},{j})")));
                }
                diam = diam.max(v);
            }
        }
        Ok(PseudoMetric { kind: MetricKind::Tabulated { grid, dist }, diameter: diam })
    }

    /// CSV: first row is the grid, then n rows of the distance matrix.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            let mut col = 1;
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    col,
                    msg: format!("`{}` is not a number", field.trim()),
                })?;
                row.push(v);
                col += field.len() + 1;
            }
            rows.push((ln + 1, row));
        }
        let Some((_, grid)) = rows.first().cloned() else {
            return Err(Error::Parse { line: 1, col: 1, msg: "empty metric file".into() });
        };
        let n = grid.len();
        if rows.len() != n + 1 {
            return Err(Error::Parse { line: rows.len(), col: 1, msg: format!("expected {n} matrix rows, found {}", rows.len() - 1) });
        }
        let mut dist = Vec::with_capacity(n * n);
        for (ln, row) in &rows[1..] {
            if row.len() != n {
                return Err(Error::Parse { line: *ln, col: 1, msg: format!("expected {n} fields, found {}", row.len()) });
            }
            dist.extend_from_slice(row);
        }
        Self::tabulated(grid, dist)
    }

    pub fn to_csv(&self) -> Option<String> {
        let MetricKind::Tabulated { grid, dist } = &self.kind else { return None };
        let n = grid.len();
        let join = |xs: &[f64]| xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut s = join(grid);
        s.push('\n');
        for i in 0..n {
            s.push_str(&join(&dist[i * n..(i + 1) * n]));
            s.push('\n');
        }
        Some(s)
    }

    /// Distance between grid values s and t (HolderScaled) or grid indices (Tabulated).
    pub fn holder_dist(&self, s: f64, t: f64) -> Option<f64> {
        match self.kind {
            MetricKind::HolderScaled { c, h } => Some(c * (s - t).abs().powf(h)),
            _ => None,
        }
    }

    /// Random triples checked for the triangle inequality (Tabulated only; HolderScaled
    /// with H ≤ 1 satisfies it analytically).
    pub fn check_triangle(&self, trials: usize, seed: u64) -> bool {
        match &self.kind {
            MetricKind::HolderScaled { h, .. } => *h <= 1.0,
            MetricKind::Tabulated { grid, dist } => {
                let n = grid.len();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..trials).all(|_| {
                    let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                    dist[i * n + k] <= (dist[i * n + j] + dist[j * n + k]) * (1.0 + 1e-12)
                })
            }
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must be positive, got {eps}")))
    }
}

/// Minimal number of closed d-balls of radius eps covering the index set.
pub fn covering_number(d: &PseudoMetric, eps: f64) -> Result<u64> {
    check_eps(eps)?;
    if eps >= d.diameter {
        return Ok(1);
    }
    Ok(match &d.kind {
        MetricKind::HolderScaled { c, h } => holder_cover(*c, *h, eps),
        MetricKind::Tabulated { grid, dist } => tabulated_cover(grid.len(), dist, eps),
    })
}

/// max(N(T,d,ε), D/ε), the floored count used by the chaining radii.
pub fn covering_number_floored(d: &PseudoMetric, eps: f64) -> Result<f64> {
    Ok((covering_number(d, eps)? as f64).max(d.diameter / eps))
}

fn holder_cover(c: f64, h: f64, eps: f64) -> u64 {
    if eps >= c {
        return 1;
    }
    let r = (eps / c).powf(1.0 / h);
    let x = 1.0 / (2.0 * r);
    // guard against x landing a hair above an integer
    let n = (x * (1.0 - 1e-12)).ceil();
    if n >= u64::MAX as f64 {
        u64::MAX
    } else {
        (n as u64).max(1)
    }
}

fn tabulated_cover(n: usize, dist: &[f64], eps: f64) -> u64 {
    let ball = |i: usize| -> Vec<usize> { (0..n).filter(|&j| dist[i * n + j] <= eps).collect() };
    let balls: Vec<Vec<usize>> = (0..n).map(ball).collect();
    let contiguous = balls.iter().all(|b| b.windows(2).all(|w| w[1] == w[0] + 1));
    if contiguous {
        // interval covering: the left-to-right sweep is optimal
        let span: Vec<(usize, usize)> = balls.iter().map(|b| (b[0], *b.last().unwrap())).collect();
        let mut count = 0;
        let mut first_uncovered = 0;
        while first_uncovered < n {
            let reach = span
                .iter()
                .filter(|(lo, hi)| *lo <= first_uncovered && *hi >= first_uncovered)
                .map(|(_, hi)| *hi)
                .max()
                .unwrap();
            count += 1;
            first_uncovered = reach + 1;
        }
        return count;
    }
    let greedy = greedy_cover(n, &balls);
    // exhaustive refinement while the search space stays small
    let mut best = greedy;
    for k in 1..greedy {
        if binom(n, k) > 2_000_000.0 {
            break;
        }
        if exists_cover(n, &balls, k) {
            best = k;
            break;
        }
    }
    best as u64
}

fn greedy_cover(n: usize, balls: &[Vec<usize>]) -> usize {
    let mut covered = vec![false; n];
    let mut left = n;
    let mut count = 0;
    while left > 0 {
        let (bi, _) = balls
            .iter()
            .enumerate()
            .map(|(i, b)| (i, b.iter().filter(|&&j| !covered[j]).count()))
            .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
            .unwrap();
        for &j in &balls[bi] {
            if !covered[j] {
                covered[j] = true;
                left -= 1;
            }
        }
        count += 1;
    }
    count
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn exists_cover(n: usize, balls: &[Vec<usize>], k: usize) -> bool {
    fn rec(start: usize, k: usize, n: usize, balls: &[Vec<usize>], count: &mut Vec<u32>, covered: usize) -> bool {
        if covered == n {
            return true;
        }
        if k == 0 {
            return false;
        }
        for i in start..balls.len() {
            let mut newly = 0;
            for &j in &balls[i] {
                if count[j] == 0 {
                    newly += 1;
                }
                count[j] += 1;
            }
            let ok = newly > 0 && rec(i + 1, k - 1, n, balls, count, covered + newly);
            for &j in &balls[i] {
                count[j] -= 1;
            }
            if ok {
                return true;
            }
        }
        false
    }
    let mut count = vec![0u32; n];
    rec(0, k, n, balls, &mut count, 0)
}

fn entropy_weight(n: f64, alpha: f64) -> f64 {
    n.ln_1p().powf(1.0 / alpha)
}

/// δ(ε) = ∫₀^ε (log* N(T,d,u))^{1/α} du with the raw covering number.
pub fn entropy_integral(d: &PseudoMetric, eps: f64, alpha: f64) -> Result<f64> {
    Ok(entropy_integral_many(d, &[eps], alpha)?[0])
}

/// δ at several radii; shares work across the sorted radii.
pub fn entropy_integral_many(d: &PseudoMetric, eps: &[f64], alpha: f64) -> Result<Vec<f64>> {
    OrliczFamily::new(alpha)?;
    for &e in eps {
        check_eps(e)?;
    }
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let mut out = vec![0.0; eps.len()];
    match &d.kind {
        MetricKind::HolderScaled { c, h } => {
            let mut acc = 0.0;
            let mut at = 0.0;
            for &i in &order {
                let e = eps[i];
                if e > at {
                    acc += if at == 0.0 {
                        holder_delta_from_zero(*c, *h, e, alpha)
                    } else {
                        holder_delta_between(*c, *h, at, e, alpha)
                    };
                    at = e;
                }
                out[i] = acc;
            }
        }
        MetricKind::Tabulated { grid, dist } => {
            let n = grid.len();
            let mut levels: Vec<f64> = dist.to_vec();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            // N is constant on [levels[k], levels[k+1])
            let counts: Vec<f64> = levels.iter().map(|&l| tabulated_cover(n, dist, l) as f64).collect();
            for &i in &order {
                let e = eps[i];
                let mut acc = 0.0;
                for k in 0..levels.len() {
                    let lo = levels[k];
                    if lo >= e {
                        break;
                    }
                    let hi = levels.get(k + 1).copied().unwrap_or(f64::INFINITY).min(e);
                    acc += entropy_weight(counts[k], alpha) * (hi - lo);
                }
                out[i] = acc;
            }
        }
    }
    Ok(out)
}

/// Radius at which the HolderScaled covering number drops to k (N(u) = k on [u_k, u_{k−1})).
fn holder_break(c: f64, h: f64, k: f64) -> f64 {
    c * (2.0 * k).powf(-h)
}

/// Index of the step containing hi⁻, rounded down so no step is skipped.
fn holder_step_at(c: f64, h: f64, hi: f64) -> f64 {
    (0.5 * (hi / c).powf(-1.0 / h)).floor().max(1.0)
}

/// Exact step sum of the integrand over [a, b], 0 < a ≤ b.
fn holder_delta_between(c: f64, h: f64, a: f64, b: f64, alpha: f64) -> f64 {
    debug_assert!(0.0 < a && a <= b);
    let k_hi = holder_step_at(c, h, b);
    let k_lo = holder_step_at(c, h, a);
    if k_lo - k_hi > 1e6 {
        // too many steps: exact near b, smoothed below
        let cut = holder_break(c, h, k_hi + 1e6).max(a);
        return holder_delta_between(c, h, cut, b, alpha) + holder_smooth(c, h, a, cut, alpha);
    }
    let mut acc = 0.0;
    let mut hi = b;
    let mut k = k_hi;
    while hi > a {
        let lo = holder_break(c, h, k).max(a);
        if lo < hi {
            acc += entropy_weight(k, alpha) * (hi - lo);
            hi = lo;
        }
        k += 1.0;
    }
    acc
}

/// Integral over [a, b] of the step integrand replaced by its midpoint-smoothed form;
/// used only where steps are shorter than 1e-6 of the count.
fn holder_smooth(c: f64, h: f64, a: f64, b: f64, alpha: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let f = |u: f64| {
        let x = 0.5 * (u / c).powf(-1.0 / h);
        entropy_weight(x + 0.5, alpha)
    };
    quad::adaptive(f, a, b, 1e-12, 0.0)
}

fn holder_delta_from_zero(c: f64, h: f64, eps: f64, alpha: f64) -> f64 {
    // exact over the first 2^16 steps below eps, smoothed underneath
    let cut = holder_break(c, h, holder_step_at(c, h, eps) + 65536.0);
    let top = holder_delta_between(c, h, cut, eps, alpha);
    let f = |u: f64| {
        let x = 0.5 * (u / c).powf(-1.0 / h);
        entropy_weight(x + 0.5, alpha)
    };
    top + quad::toward_zero(f, cut, 1e-12, 4000).value
}

/// Outcome of V(Ψ, d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricVariation {
    Finite(f64),
    Divergent,
    Inconclusive,
}

/// V(Ψ,d) = sup over partitions of Σ Ψ(d(t_{i−1}, t_i)).
pub fn variation_of_metric(psi: &VariationFunction, d: &PseudoMetric) -> MetricVariation {
    match &d.kind {
        MetricKind::HolderScaled { c, h } => {
            if let VariationFunction::Power { p } = *psi {
                let ph = p * h;
                if ph == 1.0 || ph >= 1.05 {
                    return MetricVariation::Finite(c.powf(p));
                }
                if ph <= 0.95 {
                    return MetricVariation::Divergent;
                }
                return MetricVariation::Inconclusive;
            }
            holder_numeric_variation(psi, *c, *h)
        }
        MetricKind::Tabulated { grid, dist } => {
            let n = grid.len();
            let mut best = vec![f64::NEG_INFINITY; n];
            best[0] = 0.0;
            for j in 1..n {
                for i in 0..j {
                    let v = best[i] + psi.eval(dist[i * n + j]);
                    if v > best[j] {
                        best[j] = v;
                    }
                }
            }
            MetricVariation::Finite(best[n - 1])
        }
    }
}

fn holder_numeric_variation(psi: &VariationFunction, c: f64, h: f64) -> MetricVariation {
    // uniform dyadic partitions
    let sums: Vec<f64> = (0..=24)
        .map(|k| {
            let n = 2f64.powi(k);
            n * psi.eval(c * n.recip().powf(h))
        })
        .collect();
    if sums.iter().any(|s| !s.is_finite() || *s > 1e12) {
        return MetricVariation::Divergent;
    }
    let tail = &sums[16..];
    if tail.windows(2).all(|w| w[1] >= 1.02 * w[0]) {
        return MetricVariation::Divergent;
    }
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let cauchy = (sums[24] - sums[23]).abs() <= 1e-3 * sums[24].abs();
    if !(nonincreasing || cauchy) {
        return MetricVariation::Inconclusive;
    }
    // DP refinement: on a uniform grid the value depends only on gap lengths
    let n = 1usize << 14;
    let gap: Vec<f64> = (0..=n).map(|k| psi.eval(c * (k as f64 / n as f64).powf(h))).collect();
    let mut best = vec![0.0f64; n + 1];
    for j in 1..=n {
        let mut b = f64::NEG_INFINITY;
        for i in 0..j {
            let v = best[i] + gap[j - i];
            if v > b {
                b = v;
            }
        }
        best[j] = b;
    }
    let dyadic_max = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    MetricVariation::Finite(dyadic_max.max(best[n]))
}

/// Per-path and mean chaining statistic Θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainingReport {
    pub mean: f64,
    pub per_path: Vec<f64>,
}

/// Θ = sup over grid pairs s≠t of |X(s)−X(t)|/δ(d(s,t)), averaged over paths.
pub fn chaining_statistic(paths: &[SamplePath], d: &PseudoMetric, alpha: f64) -> Result<ChainingReport> {
    if paths.is_empty() {
        return Err(Error::Argument("chaining_statistic needs at least one path".into()));
    }
    let n = paths[0].n;
    if paths.iter().any(|p| p.n != n) {
        return Err(Error::Argument("paths must share a grid".into()));
    }
    let per_path: Vec<f64> = match &d.kind {
        MetricKind::HolderScaled { c, h } => {
            let radii: Vec<f64> = (1..=n).map(|k| c * (k as f64 / n as f64).powf(*h)).collect();
            let mut delta = vec![f64::INFINITY];
            delta.extend(entropy_integral_many(d, &radii, alpha)?);
            paths.iter().map(|p| theta_by_lag(&p.values, &delta)).collect()
        }
        MetricKind::Tabulated { grid, dist } => {
            if grid.len() != n + 1 {
                return Err(Error::Argument(format!("tabulated metric has {} points, paths have {}", grid.len(), n + 1)));
            }
            let m = n + 1;
            let mut levels: Vec<f64> = dist.iter().cloned().filter(|&x| x > 0.0).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let deltas = entropy_integral_many(d, &levels, alpha)?;
            let lookup = |x: f64| deltas[levels.partition_point(|&l| l < x)];
            paths
                .iter()
                .map(|p| {
                    let mut best = 0.0f64;
                    for i in 0..m {
                        for j in i + 1..m {
                            let dx = dist[i * m + j];
                            let diff = (p.values[j] - p.values[i]).abs();
                            if dx == 0.0 {
                                if diff > 0.0 {
                                    return f64::INFINITY;
                                }
                                continue;
                            }
                            best = best.max(diff / lookup(dx));
                        }
                    }
                    best
                })
                .collect()
        }
    };
    let mean = per_path.iter().sum::<f64>() / per_path.len() as f64;
    Ok(ChainingReport { mean, per_path })
}

/// max over lags k of max_i |x[i+k]−x[i]| / delta[k], with lag blocks skipped when
/// a window-oscillation bound cannot beat the running best.
fn theta_by_lag(x: &[f64], delta: &[f64]) -> f64 {
    let n = x.len() - 1;
    if n == 0 {
        return 0.0;
    }
    // mx[i], mn[i]: extremes of x over [i, i + len]
    let mut mx: Vec<f64> = (0..n).map(|i| x[i].max(x[i + 1])).collect();
    let mut mn: Vec<f64> = (0..n).map(|i| x[i].min(x[i + 1])).collect();
    let mut blocks = Vec::new();
    let osc = |mx: &[f64], mn: &[f64], count: usize| (0..count).map(|i| mx[i] - mn[i]).fold(0.0, f64::max);
    blocks.push((1, 1, osc(&mx, &mn, n) / delta[1]));
    let mut len = 1;
    while 2 * len <= n {
        for i in 0..=n - 2 * len {
            mx[i] = mx[i].max(mx[i + len]);
            mn[i] = mn[i].min(mn[i + len]);
        }
        blocks.push((len + 1, 2 * len, osc(&mx, &mn, n - 2 * len + 1) / delta[len + 1]));
        len *= 2;
    }
    if len < n {
        let global = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
        blocks.push((len + 1, n, global / delta[len + 1]));
    }
    blocks.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut best = 0.0f64;
    for (lo, hi, bound) in blocks {
        if bound <= best {
            continue;
        }
        for k in lo..=hi {
            let mut up = f64::NEG_INFINITY;
            let mut down = f64::INFINITY;
            for (a, b) in x[k..].iter().zip(&x[..=n - k]) {
                let dv = a - b;
                up = if dv > up { dv } else { up };
                down = if dv < down { dv } else { down };
            }
            let r = up.max(-down) / delta[k];
            if r > best {
                best = r;
            }
        }
    }
    best
}

/// ε_n = 2^{−n}D and v_n = 12 ε_n (log N(ε_n))^{1/α} for n = 0..levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainingRadius {
    pub level: u32,
    pub eps: f64,
    pub count: f64,
    pub v: f64,
}

pub fn chaining_radii(d: &PseudoMetric, alpha: f64, levels: u32, floored: bool) -> Result<Vec<ChainingRadius>> {
    OrliczFamily::new(alpha)?;
    (0..=levels)
        .map(|n| {
            let eps = d.diameter * 2f64.powi(-(n as i32));
            let count = if floored { covering_number_floored(d, eps)? } else { covering_number(d, eps)? as f64 };
            let v = 12.0 * eps * count.ln().max(0.0).powf(1.0 / alpha);
            Ok(ChainingRadius { level: n, eps, count, v })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxInequalityReport {
    pub max_norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// ‖N(0,1)‖_{φα} by quadrature (finite for α ≤ 2 only).
pub fn gaussian_orlicz_norm(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("‖N(0,1)‖_φα is infinite for α > 2, got {alpha}")));
    }
    if alpha == 2.0 {
        return Ok((8.0f64 / 3.0).sqrt());
    }
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let g = |delta: f64| {
        let f = |z: f64| c * (((z / delta).powf(alpha) - 0.5 * z * z).exp() - (-0.5 * z * z).exp());
        quad::adaptive(f, 0.0, 40.0, 1e-12, 1e-14) - 1.0
    };
    let (mut lo, mut hi) = (0.05, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Ratio of the empirical ‖max|ξᵢ|‖_{φα} to the lemma bound
/// sup‖ξᵢ‖_{φα}·(2 log n/log 2)^{1/α}; rows are trials, columns the ξᵢ.
pub fn maximal_inequality_ratio(rows: &[Vec<f64>], alpha: f64) -> Result<MaxInequalityReport> {
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if n < 2 {
        return Err(Error::Argument("need n >= 2 variables".into()));
    }
    let maxima: Vec<f64> = rows.iter().map(|r| r.iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect();
    let num = orlicz_norm_mc(&maxima, alpha)?;
    let mut sup = 0.0f64;
    for i in 0..n {
        let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        sup = sup.max(orlicz_norm_mc(&col, alpha)?);
    }
    let bound = sup * (2.0 * (n as f64).ln() / 2f64.ln()).powf(1.0 / alpha);
    let ratio = if num == 0.0 { 0.0 } else { num / bound };
    Ok(MaxInequalityReport { max_norm: num, bound, ratio })
}

/// Monte Carlo check of the maximal inequality for n i.i.d. standard normals,
/// against the exact Gaussian Orlicz norm.
pub fn maximal_inequality_check(n: usize, alpha: f64, trials: usize, seed: u64) -> Result<MaxInequalityReport> {
    if n < 2 {
        return Err(Error::Argument(format!("n must be >= 2, got {n}")));
    }
    if trials == 0 {
        return Err(Error::Argument("trials must be positive".into()));
    }
    let single = gaussian_orlicz_norm(alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maxima: Vec<f64> = (0..trials)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).fold(0.0, f64::max))
        .collect();
    let num = orlicz_norm_mc(&maxima, alpha)?;
    let bound = single * (2.0 * (n as f64).ln() / 2f64.ln()).powf(1.0 / alpha);
    Ok(MaxInequalityReport { max_norm: num, bound, ratio: num / bound })
}
