//! Sample paths: exact fractional Brownian motion and discretized Hermite
//! processes, with ensemble I/O and covariance checks.

use crate::error::{Error, Result};
use crate::hermite::norming_c0;
use crate::quad::GaussLegendre;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct PathMeta {
    pub generator: String,
    pub m: u32,
    pub h: f64,
    pub seed: u64,
    pub replicate: u64,
}

impl Default for PathMeta {
    fn default() -> Self {
        PathMeta { generator: "data".into(), m: 0, h: f64::NAN, seed: 0, replicate: 0 }
    }
}

/// Values at tᵢ = i/n, i = 0..n.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub n: usize,
    pub values: Vec<f64>,
    pub meta: PathMeta,
}

impl SamplePath {
    pub fn from_values(values: Vec<f64>, meta: PathMeta) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Argument("a path needs at least two grid values".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::Argument(format!("paths start at 0, got {}", values[0])));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("path values must be finite".into()));
        }
        Ok(SamplePath { n: values.len() - 1, values, meta })
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.t(i), v));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        let mut ts = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 && line.trim() == "t,value" {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut num = |col: usize| -> Result<f64> {
                let f = it.next().ok_or(Error::Parse { line: ln + 1, col, msg: "missing field".into() })?;
                f.trim().parse().map_err(|_| Error::Parse { line: ln + 1, col, msg: format!("`{}` is not a number", f.trim()) })
            };
            ts.push(num(1)?);
            values.push(num(2)?);
        }
        let n = values.len().saturating_sub(1);
        for (i, t) in ts.iter().enumerate() {
            if n == 0 || (t - i as f64 / n as f64).abs() > 1e-12 {
                return Err(Error::Parse { line: i + 2, col: 1, msg: format!("grid is not uniform at t={t}") });
            }
        }
        Self::from_values(values, PathMeta::default())
    }
}

const ENSEMBLE_MAGIC: &[u8; 4] = b"PHVE";
const ENSEMBLE_VERSION: u32 = 1;

/// Binary ensemble: magic, version, n, count, m, H, seed, generator name, then
/// count·(n+1) little-endian f64 values.
pub fn write_ensemble<W: Write>(mut w: W, paths: &[SamplePath]) -> Result<()> {
    let first = paths.first().ok_or(Error::Argument("empty ensemble".into()))?;
    if paths.iter().any(|p| p.n != first.n) {
        return Err(Error::Argument("paths must share a grid".into()));
    }
    w.write_all(ENSEMBLE_MAGIC)?;
    w.write_all(&ENSEMBLE_VERSION.to_le_bytes())?;
    w.write_all(&(first.n as u64).to_le_bytes())?;
    w.write_all(&(paths.len() as u64).to_le_bytes())?;
    w.write_all(&first.meta.m.to_le_bytes())?;
    w.write_all(&first.meta.h.to_le_bytes())?;
    w.write_all(&first.meta.seed.to_le_bytes())?;
    let name = first.meta.generator.as_bytes();
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name)?;
    for p in paths {
        for v in &p.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_ensemble<R: Read>(mut r: R) -> Result<Vec<SamplePath>> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if &b4 != ENSEMBLE_MAGIC {
        return Err(Error::Io("not a path ensemble file".into()));
    }
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != ENSEMBLE_VERSION {
        return Err(Error::Io(format!("unsupported ensemble version {}", u32::from_le_bytes(b4))));
    }
    let mut u64_ = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = u64_(&mut r)? as usize;
    let count = u64_(&mut r)? as usize;
    r.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4);
    let h = f64::from_bits(u64_(&mut r)?);
    let seed = u64_(&mut r)?;
    r.read_exact(&mut b4)?;
    let mut name = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut name)?;
    let generator = String::from_utf8(name).map_err(|e| Error::Io(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    for rep in 0..count {
        let mut values = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            values.push(f64::from_bits(u64_(&mut r)?));
        }
        let meta = PathMeta { generator: generator.clone(), m, h, seed, replicate: rep as u64 };
        out.push(SamplePath::from_values(values, meta)?);
    }
    Ok(out)
}

fn rng_for(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Autocovariance of fractional Gaussian noise with step 1/n.
fn fgn_autocov(h: f64, n: usize, k: usize) -> f64 {
    let k = k as f64;
    let two_h = 2.0 * h;
    0.5 * (n as f64).powf(-two_h) * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    Circulant,
    Dense,
}

/// Precomputed square roots for repeated fBm draws at one (H, n).
pub struct FbmGenerator {
    pub h: f64,
    pub n: usize,
    pub method: FbmMethod,
    sqrt_eig: Vec<f64>,
    chol: Option<DMatrix<f64>>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl FbmGenerator {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        match Self::with_method(h, n, FbmMethod::Circulant) {
            Err(Error::Infeasible(_)) if n <= 2048 => Self::with_method(h, n, FbmMethod::Dense),
            other => other,
        }
    }

    pub fn with_method(h: f64, n: usize, method: FbmMethod) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Argument(format!("H must lie in (0,1), got {h}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Argument(format!("n must be a power of two >= 2, got {n}")));
        }
        let size = 2 * n;
        let fft = FftPlanner::new().plan_fft_forward(size);
        match method {
            FbmMethod::Circulant => {
                let mut row: Vec<Complex<f64>> = (0..size)
                    .map(|k| Complex::new(fgn_autocov(h, n, if k <= n { k } else { size - k }), 0.0))
                    .collect();
                fft.process(&mut row);
                let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
                if row.iter().any(|c| c.re < -1e-10 * max) {
                    return Err(Error::Infeasible(format!("circulant embedding has negative eigenvalues for H={h}, n={n}")));
                }
                let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / size as f64).sqrt()).collect();
                Ok(FbmGenerator { h, n, method, sqrt_eig, chol: None, fft })
            }
            FbmMethod::Dense => {
                if n > 2048 {
                    return Err(Error::Infeasible(format!("dense factorization limited to n <= 2048, got {n}")));
                }
                let cov = DMatrix::from_fn(n, n, |i, j| fgn_autocov(h, n, i.abs_diff(j)));
                let chol = cov
                    .cholesky()
                    .ok_or(Error::Infeasible("increment covariance not positive definite".into()))?;
                Ok(FbmGenerator { h, n, method, sqrt_eig: Vec::new(), chol: Some(chol.l()), fft })
            }
        }
    }

    /// Increments from an explicit standard-normal vector (length 4n for the
    /// circulant method, n for the dense one).
    pub fn increments_from(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        match &self.chol {
            Some(l) => {
                let zv = nalgebra::DVector::from_column_slice(&z[..n]);
                (l * zv).iter().cloned().collect()
            }
            None => {
                // complex normal ξ_k = z_k + i z_{2n+k}; only Re of the transform is used
                let mut buf: Vec<Complex<f64>> = (0..2 * n)
                    .map(|k| Complex::new(z[k], z[2 * n + k]) * self.sqrt_eig[k])
                    .collect();
                self.fft.process(&mut buf);
                buf[..n].iter().map(|c| c.re).collect()
            }
        }
    }

    pub fn normals_needed(&self) -> usize {
        match self.method {
            FbmMethod::Circulant => 4 * self.n,
            FbmMethod::Dense => self.n,
        }
    }

    pub fn path(&self, seed: u64, replicate: u64) -> SamplePath {
        let mut rng = rng_for(seed, replicate);
        let z: Vec<f64> = (0..self.normals_needed()).map(|_| rng.sample(StandardNormal)).collect();
        let inc = self.increments_from(&z);
        let mut values = Vec::with_capacity(self.n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for d in inc {
            acc += d;
            values.push(acc);
        }
        let generator = match self.method {
            FbmMethod::Circulant => "fbm-circulant",
            FbmMethod::Dense => "fbm-dense",
        };
        SamplePath { n: self.n, values, meta: PathMeta { generator: generator.into(), m: 1, h: self.h, seed, replicate } }
    }

    pub fn paths(&self, seed: u64, count: usize) -> Vec<SamplePath> {
        (0..count as u64).map(|r| self.path(seed, r)).collect()
    }
}

/// Exact-law fBm on the grid i/n.
pub fn simulate_fbm(h: f64, n: usize, seed: u64) -> Result<SamplePath> {
    Ok(FbmGenerator::new(h, n)?.path(seed, 0))
}

/// Discretization controls for the Hermite generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSimParams {
    /// u-cells per time step inside [0,1].
    pub cells_per_step: usize,
    /// Growth factor of the geometric cells on [−U, 0].
    pub tail_ratio: f64,
    /// Truncation radius U.
    pub u_far: f64,
    /// Gauss–Legendre nodes per u-cell for the v-integral.
    pub v_nodes: usize,
}

impl Default for HermiteSimParams {
    fn default() -> Self {
        HermiteSimParams { cells_per_step: 1, tail_ratio: 1.1, u_far: 1e8, v_nodes: 3 }
    }
}

/// Discretized multiple Wiener–Itô integral of order m.
///
/// The u-axis is cut into cells; the kernel is averaged over cells, which
/// factorizes as Q̄_t(j₁..j_m) = c₀∫₀^t Π G_{jᵢ}(v) dv with G_j the cell average
/// of (v−u)₊^{−γ}. The off-diagonal sum over distinct indices is m!·e_m of
/// a_j(v) = G_j(v)ΔB_j, obtained from power sums by Newton's identities.
pub struct HermiteGenerator {
    pub m: u32,
    pub h: f64,
    pub n: usize,
    pub c0: f64,
    pub params: HermiteSimParams,
    /// Cell widths (= increment variances), tail cells first.
    pub widths: Vec<f64>,
    /// √(variance of the discrete X(1)) before rescaling.
    pub discrete_norm: f64,
    g: DMatrix<f64>,
    omega: Vec<f64>,
    step_of_node: Vec<usize>,
}

impl HermiteGenerator {
    pub fn new(m: u32, h: f64, n: usize, params: HermiteSimParams) -> Result<Self> {
        if !(1..=3).contains(&m) {
            return Err(Error::Unsupported(format!("Hermite simulation supports m = 1..3, got {m}")));
        }
        if !(h > 0.5 && h < 1.0) {
            return Err(Error::Argument(format!("H must lie in (1/2,1), got {h}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Argument(format!("n must be a power of two >= 2, got {n}")));
        }
        let cap = match m {
            1 => 1 << 14,
            2 => 1 << 12,
            _ => 1 << 10,
        };
        if n > cap {
            return Err(Error::Infeasible(format!("n = {n} is too large for m = {m}; use n <= {cap}")));
        }
        if params.cells_per_step == 0 || params.v_nodes == 0 || !(params.tail_ratio > 1.0) || !(params.u_far >= 10.0) {
            return Err(Error::Argument(format!("invalid discretization {params:?}")));
        }
        let gamma = 0.5 + (1.0 - h) / m as f64;
        let c0 = norming_c0(m, h)?;
        let inner = n * params.cells_per_step;
        let w0 = 1.0 / inner as f64;
        // cell edges, left to right: geometric tail on [−U, 0], uniform on [0, 1]
        let mut neg = vec![0.0];
        let mut w = w0;
        while *neg.last().unwrap() > -params.u_far {
            let next = (neg.last().unwrap() - w).max(-params.u_far);
            neg.push(next);
            w *= params.tail_ratio;
        }
        neg.reverse();
        let mut edges = neg;
        for i in 1..=inner {
            edges.push(i as f64 * w0);
        }
        let cells = edges.len() - 1;
        let tail_cells = cells - inner;
        let widths: Vec<f64> = edges.windows(2).map(|e| e[1] - e[0]).collect();
        let nv = inner * params.v_nodes;
        let budget = match m {
            2 => 2,
            3 => 3,
            _ => 1,
        } * nv
            * cells;
        if budget > 60_000_000 {
            return Err(Error::Infeasible(format!(
                "discretization needs {budget} matrix entries; reduce n or cells_per_step"
            )));
        }
        // v-nodes: per inner cell, GL in y with v = a + w·y² to tame (v−a)^{1−γ}
        let gl = GaussLegendre::new(params.v_nodes);
        let mut vs = Vec::with_capacity(nv);
        let mut omega = Vec::with_capacity(nv);
        let mut step_of_node = Vec::with_capacity(nv);
        for c in 0..inner {
            let a = c as f64 * w0;
            for (y, wy) in gl.mapped(0.0, 1.0) {
                vs.push(a + w0 * y * y);
                omega.push(wy * 2.0 * y * w0);
                step_of_node.push(c / params.cells_per_step);
            }
        }
        let e = 1.0 - gamma;
        let g = DMatrix::from_fn(nv, cells, |vi, j| {
            let v = vs[vi];
            let (a, b) = (edges[j], edges[j + 1]);
            if v <= a {
                return 0.0;
            }
            let upper = (v - a).powf(e);
            let lower = if v > b { (v - b).powf(e) } else { 0.0 };
            (upper - lower) / (e * (b - a))
        });
        let _ = tail_cells;
        let mut gen = HermiteGenerator {
            m,
            h,
            n,
            c0,
            params,
            widths,
            discrete_norm: 0.0,
            g,
            omega,
            step_of_node,
        };
        gen.discrete_norm = gen.discrete_variance().sqrt();
        Ok(gen)
    }

    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    /// Exact variance of the discrete X(1) (before rescaling).
    pub fn discrete_variance(&self) -> f64 {
        let nv = self.omega.len();
        let cells = self.cells();
        let c02 = self.c0 * self.c0;
        match self.m {
            1 => {
                let mut k = vec![0.0; cells];
                for vi in 0..nv {
                    for j in 0..cells {
                        k[j] += self.omega[vi] * self.g[(vi, j)];
                    }
                }
                c02 * k.iter().zip(&self.widths).map(|(a, w)| a * a * w).sum::<f64>()
            }
            2 => {
                let a = DMatrix::from_fn(nv, cells, |vi, j| self.omega[vi].sqrt() * self.g[(vi, j)] * self.widths[j].sqrt());
                let k = a.transpose() * &a;
                let fro: f64 = k.iter().map(|x| x * x).sum();
                let diag: f64 = (0..cells).map(|j| k[(j, j)] * k[(j, j)]).sum();
                2.0 * c02 * (fro - diag)
            }
            _ => {
                // (m!)² Σ_{v,v'} ω ω' e_3(b), b_j = G_j(v) G_j(v') w_j
                let pk = |k: i32| {
                    let a = DMatrix::from_fn(nv, cells, |vi, j| self.g[(vi, j)].powi(k) * self.widths[j].powi(k));
                    let b = DMatrix::from_fn(cells, nv, |j, vi| self.g[(vi, j)].powi(k));
                    a * b
                };
                let (p1, p2, p3) = (pk(1), pk(2), pk(3));
                let mut acc = 0.0;
                for i in 0..nv {
                    for j in 0..nv {
                        let (x1, x2, x3) = (p1[(i, j)], p2[(i, j)], p3[(i, j)]);
                        let e3 = (x1 * x1 * x1 - 3.0 * x1 * x2 + 2.0 * x3) / 6.0;
                        acc += self.omega[i] * self.omega[j] * e3;
                    }
                }
                36.0 * c02 * acc
            }
        }
    }

    fn assemble(&self, db: &DMatrix<f64>) -> DMatrix<f64> {
        // db: cells × P; returns (n+1) × P values
        let p = db.ncols();
        let p1 = &self.g * db;
        let sums = match self.m {
            1 => p1,
            2 => {
                let g2 = self.g.map(|x| x * x);
                let p2 = g2 * db.map(|x| x * x);
                p1.zip_map(&p2, |a, b| a * a - b)
            }
            _ => {
                let g2 = self.g.map(|x| x * x);
                let g3 = self.g.map(|x| x * x * x);
                let p2 = g2 * db.map(|x| x * x);
                let p3 = g3 * db.map(|x| x * x * x);
                DMatrix::from_fn(p1.nrows(), p, |i, j| {
                    let (a, b, c) = (p1[(i, j)], p2[(i, j)], p3[(i, j)]);
                    a * a * a - 3.0 * a * b + 2.0 * c
                })
            }
        };
        let scale = self.c0 / self.discrete_norm;
        let mut out = DMatrix::zeros(self.n + 1, p);
        for (vi, &step) in self.step_of_node.iter().enumerate() {
            for j in 0..p {
                out[(step + 1, j)] += self.omega[vi] * sums[(vi, j)];
            }
        }
        for j in 0..p {
            let mut acc = 0.0;
            for i in 1..=self.n {
                acc += out[(i, j)];
                out[(i, j)] = acc * scale;
            }
        }
        out
    }

    fn increments(&self, seed: u64, replicate: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, replicate);
        self.widths.iter().map(|w| w.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    pub fn path(&self, seed: u64, replicate: u64) -> SamplePath {
        self.paths_range(seed, replicate, 1).pop().unwrap()
    }

    pub fn paths(&self, seed: u64, count: usize) -> Vec<SamplePath> {
        let mut out = Vec::with_capacity(count);
        let batch = 64;
        let mut start = 0;
        while start < count {
            let k = batch.min(count - start);
            out.extend(self.paths_range(seed, start as u64, k));
            start += k;
        }
        out
    }

    fn paths_range(&self, seed: u64, first: u64, count: usize) -> Vec<SamplePath> {
        let cells = self.cells();
        let mut db = DMatrix::zeros(cells, count);
        for k in 0..count {
            let inc = self.increments(seed, first + k as u64);
            db.set_column(k, &nalgebra::DVector::from_vec(inc));
        }
        let vals = self.assemble(&db);
        (0..count)
            .map(|k| SamplePath {
                n: self.n,
                values: vals.column(k).iter().cloned().collect(),
                meta: PathMeta { generator: format!("hermite-m{}", self.m), m: self.m, h: self.h, seed, replicate: first + k as u64 },
            })
            .collect()
    }
}

pub fn simulate_hermite(m: u32, h: f64, n: usize, params: HermiteSimParams, seed: u64) -> Result<SamplePath> {
    Ok(HermiteGenerator::new(m, h, n, params)?.path(seed, 0))
}

/// Empirical second moments on the sub-grid k/points vs the fBm covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub times: Vec<f64>,
    pub empirical: Vec<Vec<f64>>,
    pub theory: Vec<Vec<f64>>,
    /// Monte Carlo standard error of each empirical entry.
    pub mc_sigma: Vec<Vec<f64>>,
    pub max_abs_dev: f64,
    /// max over entries of |deviation| / MC-σ (0 where both vanish).
    pub max_dev_sigma: f64,
}

pub fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

pub fn covariance_report(paths: &[SamplePath], h: f64, points: usize) -> Result<CovarianceReport> {
    if paths.len() < 100 {
        return Err(Error::Argument(format!("need at least 100 paths, got {}", paths.len())));
    }
    let n = paths[0].n;
    if paths.iter().any(|p| p.n != n) {
        return Err(Error::Argument("paths must share a grid".into()));
    }
    if points == 0 || n % points != 0 {
        return Err(Error::Argument(format!("grid size {n} is not divisible by {points}")));
    }
    let idx: Vec<usize> = (1..=points).map(|k| k * n / points).collect();
    let times: Vec<f64> = idx.iter().map(|&i| i as f64 / n as f64).collect();
    let np = paths.len() as f64;
    let mut empirical = vec![vec![0.0; points]; points];
    let mut theory = vec![vec![0.0; points]; points];
    let mut mc_sigma = vec![vec![0.0; points]; points];
    let mut max_abs_dev = 0.0f64;
    let mut max_dev_sigma = 0.0f64;
    for a in 0..points {
        for b in 0..points {
            let prods: Vec<f64> = paths.iter().map(|p| p.values[idx[a]] * p.values[idx[b]]).collect();
            let mean = prods.iter().sum::<f64>() / np;
            let var = prods.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (np - 1.0);
            let sig = (var / np).sqrt();
            let th = fbm_cov(h, times[a], times[b]);
            empirical[a][b] = mean;
            theory[a][b] = th;
            mc_sigma[a][b] = sig;
            let dev = (mean - th).abs();
            max_abs_dev = max_abs_dev.max(dev);
            if sig > 0.0 {
                max_dev_sigma = max_dev_sigma.max(dev / sig);
            } else if dev > 0.0 {
                max_dev_sigma = f64::INFINITY;
            }
        }
    }
    Ok(CovarianceReport { times, empirical, theory, mc_sigma, max_abs_dev, max_dev_sigma })
}
