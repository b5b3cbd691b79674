//! The Hermite kernel Q_t, its L² norm, the norming constant c₀, the limiting
//! variation constant σ_{m,H}, and the hypercontractivity constants a_n.
//!
//! The m-linear form ∫Q ξ^{⊗m} equals c₀∫₀¹ (Sξ)(v)^m dv with
//! (Sξ)(v) = ∫ (v−u)₊^{−γ} ξ(u) du. Writing ξ = S*φ turns the problem into one on
//! [0,1] with the Gram kernel R(v,v') = κ|v−v'|^{1−2γ}, where
//! κ = ∫₀^∞ x^{−γ}(1+x)^{−γ} dx. κ is computed by quadrature on the truncated
//! range [0,U] plus the convergent asymptotic series of the tail, so the
//! truncation enters only through a remainder that is reported.

use crate::error::{domain, Error, Result};
use crate::quad::{adaptive, toward_zero, GaussLegendre};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

fn check_mh(m: u32, h: f64) -> Result<()> {
    if m == 0 {
        return domain("chaos order m must be >= 1");
    }
    if !(h > 0.5 && h < 1.0) {
        return domain(format!("H must lie in (1/2,1), got {h}"));
    }
    Ok(())
}

pub fn kernel_gamma(m: u32, h: f64) -> f64 {
    0.5 + (1.0 - h) / m as f64
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

pub fn ln_beta(x: f64, y: f64) -> f64 {
    libm::lgamma(x) + libm::lgamma(y) - libm::lgamma(x + y)
}

pub fn beta(x: f64, y: f64) -> f64 {
    ln_beta(x, y).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteKernel {
    pub m: u32,
    pub h: f64,
    pub gamma: f64,
    pub c0: f64,
}

impl HermiteKernel {
    /// Normed kernel: m!·‖Q₁‖² = 1.
    pub fn new(m: u32, h: f64) -> Result<Self> {
        Ok(HermiteKernel { m, h, gamma: kernel_gamma(m, h), c0: norming_c0(m, h)? })
    }

    pub fn with_c0(m: u32, h: f64, c0: f64) -> Result<Self> {
        check_mh(m, h)?;
        if !(c0 > 0.0 && c0.is_finite()) {
            return domain(format!("c0 must be positive, got {c0}"));
        }
        Ok(HermiteKernel { m, h, gamma: kernel_gamma(m, h), c0 })
    }
}

/// Q_t(u) = c₀∫₀^t Π(v−uᵢ)₊^{−γ} dv. Infinite when two coordinates tie at a
/// point of (0,t) and mγ-type blow-up is not integrable.
pub fn kernel_q(k: &HermiteKernel, t: f64, u: &[f64]) -> f64 {
    assert_eq!(u.len(), k.m as usize, "kernel_q needs m coordinates");
    let top = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top >= t || t <= 0.0 {
        return 0.0;
    }
    let g = k.gamma;
    let ties = u.iter().filter(|&&x| x == top).count();
    if top >= 0.0 && ties as f64 * g >= 1.0 {
        return f64::INFINITY;
    }
    // v = top + w^{1/(1−γ)} absorbs the (v−top)^{−γ} factor
    let e = 1.0 - g;
    let lo = if top < 0.0 { (-top).powf(e) } else { 0.0 };
    let hi = (t - top).powf(e);
    let integrand = |w: f64| {
        let x = w.powf(1.0 / e);
        let v = top + x;
        let mut p = 1.0 / e;
        let mut skipped = false;
        for &ui in u {
            if ui == top && !skipped {
                skipped = true;
                continue;
            }
            p *= (v - ui).powf(-g);
        }
        p
    };
    k.c0 * adaptive(integrand, lo, hi, 1e-11, 0.0)
}

/// ‖Q‖_{L²(ℝ^m)} = c₀[β(1/2−(1−H)/m, (2−2H)/m)^m / (H(2H−1))]^{1/2}.
pub fn q_norm_closed_form(m: u32, h: f64, c0: f64) -> Result<f64> {
    check_mh(m, h)?;
    let mf = m as f64;
    let lb = ln_beta(0.5 - (1.0 - h) / mf, (2.0 - 2.0 * h) / mf);
    Ok(c0 * (0.5 * (mf * lb - (h * (2.0 * h - 1.0)).ln())).exp())
}

pub fn norming_c0(m: u32, h: f64) -> Result<f64> {
    let unit = q_norm_closed_form(m, h, 1.0)?;
    Ok(1.0 / (factorial(m).sqrt() * unit))
}

/// Remainder of ∫_X^∞ x^{−γ}(x+Δ)^{−γ} dx via the binomial series in Δ/x.
fn tail_series(gamma: f64, delta: f64, x: f64) -> (f64, f64) {
    let r = delta / x;
    let mut coef = 1.0;
    let mut sum = 0.0;
    let mut last = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        let term = coef * r.powi(k) * x.powf(1.0 - 2.0 * gamma) / (2.0 * gamma + kf - 1.0);
        sum += term;
        last = term.abs();
        if last <= 1e-17 * sum.abs() {
            break;
        }
        coef *= (-gamma - kf) / (kf + 1.0);
    }
    (sum, last)
}

/// ∫₀^X x^{−γ}(x+Δ)^{−γ} dx by quadrature in y = x^{1−γ}.
fn gram_head(gamma: f64, delta: f64, x_max: f64) -> f64 {
    let e = 1.0 - gamma;
    let f = |y: f64| (y.powf(1.0 / e) + delta).powf(-gamma) / e;
    let y_max = x_max.powf(e);
    let y_mid = delta.powf(e).min(y_max);
    adaptive(f, 0.0, y_mid, 1e-12, 0.0) + adaptive(f, y_mid, y_max, 1e-12, 0.0)
}

/// κ = ∫₀^∞ x^{−γ}(1+x)^{−γ} dx with the range cut at U; returns (κ, series remainder).
pub fn riesz_constant(gamma: f64, u_far: f64) -> (f64, f64) {
    let (tail, rem) = tail_series(gamma, 1.0, u_far);
    (gram_head(gamma, 1.0, u_far) + tail, rem)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNorm {
    pub value: f64,
    /// Share of ‖Q‖² coming from u < −U, supplied by the tail series.
    pub tail_fraction: f64,
    /// Bound on the error of the tail series.
    pub truncation_error: f64,
}

/// ‖Q₁‖ over [−U,1]^m plus the extrapolated tail, by Fubini:
/// ‖Q‖² = c₀²∫∫_{[0,1]²} R_U(v,v')^m dv dv', R_U the u-integral restricted to [−U, min(v,v')].
pub fn q_norm_quadrature(m: u32, h: f64, c0: f64, u_far: f64, n_nodes: usize) -> Result<QuadNorm> {
    check_mh(m, h)?;
    if m > 3 {
        return Err(Error::Unsupported(format!("quadrature norm limited to m <= 3, got {m}")));
    }
    if !(u_far >= 10.0) {
        return Err(Error::Argument(format!("truncation U must be >= 10, got {u_far}")));
    }
    let g = kernel_gamma(m, h);
    let gl = GaussLegendre::new(n_nodes.max(2));
    let mut err = 0.0f64;
    let mut inner = |delta: f64, with_tail: bool| -> f64 {
        gl.mapped(0.0, 1.0 - delta)
            .map(|(v, w)| {
                let x = v + u_far;
                let head = gram_head(g, delta, x);
                let (tail, rem) = tail_series(g, delta, x);
                err = err.max(rem / (head + tail));
                let r = if with_tail { head + tail } else { head };
                w * r.powi(m as i32)
            })
            .sum()
    };
    let full = toward_zero(|d| inner(d, true), 1.0, 1e-9, 400).value;
    let head_only = toward_zero(|d| inner(d, false), 1.0, 1e-9, 400).value;
    let sq = 2.0 * c0 * c0 * full;
    Ok(QuadNorm { value: sq.sqrt(), tail_fraction: 1.0 - head_only / full, truncation_error: m as f64 * err })
}

/// Galerkin discretization of the m-linear form on [0,1].
///
/// Unknowns are coefficients of ξ = S*φ with φ piecewise constant on `nodes`
/// cells, whitened so that ‖ξ‖₂ = ‖ψ‖. The form is c₀Σ_q ω_q (Fψ)_q^m with
/// F evaluated at v-quadrature points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedKernel {
    pub m: u32,
    pub h: f64,
    pub c0: f64,
    pub u_far: f64,
    pub nodes: usize,
    pub kappa: f64,
    pub kappa_remainder: f64,
    pub omega: Vec<f64>,
    /// n_v × nodes, row-major.
    pub factor: Vec<f64>,
}

const KERNEL_MAGIC: &[u8; 4] = b"PHVK";
const KERNEL_VERSION: u32 = 1;
/// v-points per cell.
const V_PER_CELL: usize = 6;

impl DiscretizedKernel {
    pub fn build(m: u32, h: f64, u_far: f64, nodes: usize) -> Result<Self> {
        check_mh(m, h)?;
        if nodes < 2 {
            return Err(Error::Argument("need at least 2 nodes".into()));
        }
        if !(u_far >= 10.0) {
            return Err(Error::Argument(format!("truncation U must be >= 10, got {u_far}")));
        }
        let g = kernel_gamma(m, h);
        let s = 2.0 * g - 1.0;
        let (kappa, kappa_remainder) = riesz_constant(g, u_far);
        let c0 = norming_c0(m, h)?;
        let w = 1.0 / nodes as f64;
        let edges: Vec<f64> = (0..=nodes).map(|i| i as f64 * w).collect();
        // antiderivatives of |z|^{−s}
        let p1 = |z: f64| z.signum() * z.abs().powf(1.0 - s) / (1.0 - s);
        let p2 = |z: f64| z.abs().powf(2.0 - s) / ((1.0 - s) * (2.0 - s));
        let rbar = DMatrix::from_fn(nodes, nodes, |i, j| {
            let (a1, b1, a2, b2) = (edges[i], edges[i + 1], edges[j], edges[j + 1]);
            kappa * (p2(b1 - a2) + p2(a1 - b2) - p2(a1 - a2) - p2(b1 - b2))
        });
        // smoothstep-mapped Gauss points cluster at cell edges, where K has |v−edge|^{1−s}
        let gl = GaussLegendre::new(V_PER_CELL);
        let mut vs = Vec::new();
        let mut omega = Vec::new();
        for c in 0..nodes {
            for (y, wy) in gl.mapped(0.0, 1.0) {
                vs.push(edges[c] + w * y * y * (3.0 - 2.0 * y));
                omega.push(wy * 6.0 * y * (1.0 - y) * w);
            }
        }
        let nv = vs.len();
        let k = DMatrix::from_fn(nv, nodes, |q, j| kappa * (p1(vs[q] - edges[j]) - p1(vs[q] - edges[j + 1])));
        let chol = rbar
            .cholesky()
            .ok_or(Error::Infeasible("cell Gram matrix is not positive definite".into()))?;
        let ft = chol.l().solve_lower_triangular(&k.transpose()).ok_or(Error::Infeasible("singular Gram factor".into()))?;
        let mut factor = Vec::with_capacity(nv * nodes);
        for q in 0..nv {
            for j in 0..nodes {
                factor.push(ft[(j, q)]);
            }
        }
        Ok(DiscretizedKernel { m, h, c0, u_far, nodes, kappa, kappa_remainder, omega, factor })
    }

    /// Build, or load from `PHIVAR_CACHE` when a file with a matching key exists.
    pub fn cached(m: u32, h: f64, u_far: f64, nodes: usize) -> Result<Self> {
        match std::env::var_os("PHIVAR_CACHE") {
            Some(dir) => Self::cached_in(Path::new(&dir), m, h, u_far, nodes),
            None => Self::build(m, h, u_far, nodes),
        }
    }

    pub fn cache_path(dir: &Path, m: u32, h: f64, u_far: f64, nodes: usize) -> PathBuf {
        dir.join(format!("kernel-m{m}-H{:016x}-U{:016x}-n{nodes}.bin", h.to_bits(), u_far.to_bits()))
    }

    pub fn cached_in(dir: &Path, m: u32, h: f64, u_far: f64, nodes: usize) -> Result<Self> {
        let path = Self::cache_path(dir, m, h, u_far, nodes);
        if let Ok(f) = std::fs::File::open(&path) {
            if let Ok(k) = Self::read_from(std::io::BufReader::new(f)) {
                if k.m == m && k.h.to_bits() == h.to_bits() && k.u_far.to_bits() == u_far.to_bits() && k.nodes == nodes {
                    return Ok(k);
                }
            }
        }
        let k = Self::build(m, h, u_far, nodes)?;
        std::fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        k.write_to(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(&tmp, &path)?;
        Ok(k)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(KERNEL_MAGIC)?;
        w.write_all(&KERNEL_VERSION.to_le_bytes())?;
        w.write_all(&self.m.to_le_bytes())?;
        for x in [self.h, self.c0, self.u_far, self.kappa, self.kappa_remainder] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&(self.nodes as u64).to_le_bytes())?;
        w.write_all(&(self.omega.len() as u64).to_le_bytes())?;
        for x in self.omega.iter().chain(&self.factor) {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        if &b4 != KERNEL_MAGIC {
            return Err(Error::Io("not a kernel cache file".into()));
        }
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != KERNEL_VERSION {
            return Err(Error::Io("kernel cache version mismatch".into()));
        }
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4);
        let mut f = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let (h, c0, u_far, kappa, kappa_remainder) = (f(&mut r)?, f(&mut r)?, f(&mut r)?, f(&mut r)?, f(&mut r)?);
        let nodes = f(&mut r)?.to_bits() as usize;
        let nv = f(&mut r)?.to_bits() as usize;
        let omega = (0..nv).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        let factor = (0..nv * nodes).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        Ok(DiscretizedKernel { m, h, c0, u_far, nodes, kappa, kappa_remainder, omega, factor })
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.omega.len(), self.nodes, &self.factor)
    }

    /// c₀Σ_q ω_q (Fψ)_q^m.
    pub fn form(&self, psi: &[f64]) -> f64 {
        let f = self.matrix();
        let y = &f * DVector::from_column_slice(psi);
        self.c0 * y.iter().zip(&self.omega).map(|(a, w)| w * a.powi(self.m as i32)).sum::<f64>()
    }

    /// Discrete L² norm of Q₁ restricted to the discretization (equals the sup for m = 1).
    pub fn first_order_sup(&self) -> f64 {
        let f = self.matrix();
        let om = DVector::from_column_slice(&self.omega);
        self.c0 * (f.transpose() * om).norm()
    }

    pub fn quadratic_matrix(&self) -> DMatrix<f64> {
        let f = self.matrix();
        let wf = DMatrix::from_fn(f.nrows(), f.ncols(), |q, j| self.omega[q] * f[(q, j)]);
        (f.transpose() * wf) * self.c0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaMethod {
    Exact,
    DenseEigen,
    PowerIteration { restarts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaResult {
    pub sigma: f64,
    /// sup over the unit ball of |∫Q ξ^{⊗m}|.
    pub sup: f64,
    pub method: SigmaMethod,
    pub converged: bool,
    /// True when the value is only the best found over restarts.
    pub lower_bound: bool,
}

pub fn sigma_from_sup(m: u32, h: f64, sup: f64) -> f64 {
    2f64.powf(m as f64 / (2.0 * h)) * sup.powf(1.0 / h)
}

/// σ_{m,H}: closed linear algebra for m ≤ 2, shifted power iteration beyond.
pub fn sigma_mh(disc: &DiscretizedKernel) -> Result<SigmaResult> {
    match disc.m {
        1 => {
            let sup = disc.first_order_sup();
            Ok(SigmaResult { sigma: sigma_from_sup(1, disc.h, sup), sup, method: SigmaMethod::Exact, converged: true, lower_bound: false })
        }
        2 => {
            let eig = SymmetricEigen::new(disc.quadratic_matrix());
            let sup = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            Ok(SigmaResult { sigma: sigma_from_sup(2, disc.h, sup), sup, method: SigmaMethod::DenseEigen, converged: true, lower_bound: false })
        }
        _ => sigma_power_iteration(disc, 20, 0x5eed),
    }
}

/// Shifted symmetric higher-order power iteration with random restarts.
pub fn sigma_power_iteration(disc: &DiscretizedKernel, restarts: usize, seed: u64) -> Result<SigmaResult> {
    let f = disc.matrix();
    let ft = f.transpose();
    let m = disc.m as i32;
    let n = disc.nodes;
    let om = DVector::from_column_slice(&disc.omega);
    let value = |psi: &DVector<f64>| -> (f64, DVector<f64>) {
        let y = &f * psi;
        let val = disc.c0 * y.iter().zip(om.iter()).map(|(a, w)| w * a.powi(m)).sum::<f64>();
        let wy = DVector::from_iterator(y.len(), y.iter().zip(om.iter()).map(|(a, w)| w * a.powi(m - 1)));
        (val, (&ft * wy) * disc.c0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_converged = false;
    for r in 0..=restarts {
        let mut psi = if r == 0 {
            ft.clone() * om.clone()
        } else {
            DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
        };
        psi /= psi.norm();
        let (mut val, mut grad) = value(&psi);
        if m % 2 == 1 && val < 0.0 {
            psi = -psi;
            let (v2, g2) = value(&psi);
            val = v2;
            grad = g2;
        }
        let mut shift = 0.0f64;
        let mut converged = false;
        for _ in 0..20_000 {
            let mut step = &grad + &psi * shift;
            let norm = step.norm();
            if norm == 0.0 {
                converged = true;
                break;
            }
            step /= norm;
            let (v_new, g_new) = value(&step);
            if v_new + 1e-15 * val.abs() < val {
                // not monotone: raise the shift and retry
                shift = if shift == 0.0 { val.abs().max(1e-300) } else { 2.0 * shift };
                if shift > 1e12 * val.abs().max(1e-300) {
                    break;
                }
                continue;
            }
            let change = (v_new - val).abs();
            psi = step;
            val = v_new;
            grad = g_new;
            if change <= 1e-14 * val.abs() {
                converged = true;
                break;
            }
        }
        if val.abs() > best {
            best = val.abs();
            best_converged = converged;
        }
    }
    Ok(SigmaResult {
        sigma: sigma_from_sup(disc.m, disc.h, best),
        sup: best,
        method: SigmaMethod::PowerIteration { restarts },
        converged: best_converged,
        lower_bound: disc.m >= 3,
    })
}

/// Left side of the defining inequality for a_n.
pub fn a_n_lhs(n: u32, a: f64) -> f64 {
    let nf = n as f64;
    let b = a.powf(2.0 / nf) * 2.0 / nf;
    let r = b * std::f64::consts::E;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    let mut sum = nf * a.powf(1.0 / nf);
    let mut k = n as u64 + 1;
    loop {
        let kf = k as f64;
        let term = (kf * (kf * b).ln() - libm::lgamma(kf + 1.0)).exp();
        sum += term;
        // successive ratios stay below b·e
        if term < 1e-18 && term * r / (1.0 - r) < 1e-15 {
            break;
        }
        if k > 1_000_000 {
            return f64::INFINITY;
        }
        k += 1;
    }
    sum
}

/// Largest a with a_n_lhs(n, a) ≤ 2, searched where the series converges.
pub fn a_n(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("a_n needs n >= 1".into()));
    }
    let nf = n as f64;
    let mut lo = 0.0;
    let mut hi = (nf / (2.0 * std::f64::consts::E)).powf(nf / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if a_n_lhs(n, mid) <= 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_by_quadrature(x: f64, y: f64) -> f64 {
        // split at 1/2, each singular end by geometric panels
        let left = toward_zero(|t: f64| t.powf(x - 1.0) * (1.0 - t).powf(y - 1.0), 0.5, 1e-13, 5000).value;
        let right = toward_zero(|s: f64| (1.0 - s).powf(x - 1.0) * s.powf(y - 1.0), 0.5, 1e-13, 5000).value;
        left + right
    }

    #[test]
    fn closed_form_m1_matches_beta_integral() {
        let q = q_norm_closed_form(1, 0.75, 1.0).unwrap();
        let oracle = (beta_by_quadrature(0.25, 0.5) / (0.75 * 0.5)).sqrt();
        assert!((q / oracle - 1.0).abs() < 1e-10, "{q} vs {oracle}");
    }

    #[test]
    fn norming_constant() {
        for m in 1..=3 {
            for &h in &[0.55, 0.65, 0.75, 0.85, 0.95] {
                let c0 = norming_c0(m, h).unwrap();
                assert!(c0 > 0.0 && c0.is_finite());
                let q = q_norm_closed_form(m, h, c0).unwrap();
                assert!((factorial(m) * q * q - 1.0).abs() < 1e-10);
            }
        }
        assert!(norming_c0(1, 0.5).is_err());
        assert!(norming_c0(2, 1.0).is_err());
        let c1 = norming_c0(1, 0.7).unwrap();
        assert!((c1 - 1.0 / q_norm_closed_form(1, 0.7, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn kernel_q_m1_closed_form() {
        let k = HermiteKernel::new(1, 0.7).unwrap();
        let e = 1.0 - k.gamma;
        for &(t, u) in &[(1.0f64, -0.3f64), (0.5, -2.0), (0.2, -1e-4), (1.0, 0.4)] {
            let exact = k.c0 * ((t - u).powf(e) - (-u).max(0.0f64).powf(e)) / e;
            let q = kernel_q(&k, t, &[u]);
            assert!((q / exact - 1.0).abs() < 1e-8, "t={t} u={u}: {q} vs {exact}");
        }
        assert_eq!(kernel_q(&k, 0.5, &[0.5]), 0.0);
        assert_eq!(kernel_q(&k, 0.5, &[0.7]), 0.0);
    }

    #[test]
    fn kernel_q_symmetric_and_monotone_in_t() {
        let k = HermiteKernel::new(2, 0.75).unwrap();
        let (a, b) = (-0.4, 0.3);
        assert_eq!(kernel_q(&k, 1.0, &[a, b]), kernel_q(&k, 1.0, &[b, a]));
        let k3 = HermiteKernel::new(3, 0.8).unwrap();
        assert_eq!(kernel_q(&k3, 0.9, &[-1.0, 0.2, -0.1]), kernel_q(&k3, 0.9, &[0.2, -0.1, -1.0]));
        let mut prev = 0.0;
        for i in 1..=10 {
            let q = kernel_q(&k, i as f64 / 10.0, &[a, b]);
            assert!(q >= prev);
            prev = q;
        }
        // direct quadrature without the substitution, away from singular points
        // oracle without the substitution: geometric panels toward the singular end
        let direct = k.c0 * toward_zero(|x: f64| (b + x - a).powf(-k.gamma) * x.powf(-k.gamma), 1.0 - b, 1e-11, 3000).value;
        let q = kernel_q(&k, 1.0, &[a, b]);
        assert!((q / direct - 1.0).abs() < 1e-8, "{q} vs {direct}");
        assert!(kernel_q(&k, 1.0, &[0.2, 0.2]).is_infinite());
    }

    #[test]
    fn riesz_constant_is_a_beta_value() {
        for &(m, h) in &[(1, 0.75), (2, 0.6), (3, 0.9)] {
            let g = kernel_gamma(m, h);
            let (k, rem) = riesz_constant(g, 200.0);
            let b = beta(1.0 - g, 2.0 * g - 1.0);
            assert!((k / b - 1.0).abs() < 1e-9, "m={m} H={h}: {k} vs {b}");
            assert!(rem < 1e-12);
        }
    }

    #[test]
    fn quadrature_norm_m1_and_u_stability() {
        let c = q_norm_closed_form(1, 0.75, 1.0).unwrap();
        let q = q_norm_quadrature(1, 0.75, 1.0, 1000.0, 8).unwrap();
        assert!((q.value / c - 1.0).abs() < 1e-6, "{} vs {c}", q.value);
        let q2 = q_norm_quadrature(1, 0.75, 1.0, 100.0, 8).unwrap();
        assert!((q.value - q2.value).abs() / q.value < 1e-4);
        assert!(q.tail_fraction > 0.0 && q2.tail_fraction > q.tail_fraction);
        assert!(q_norm_quadrature(4, 0.75, 1.0, 100.0, 8).is_err());
    }

    #[test]
    fn discretized_m1_sup_is_one() {
        for &h in &[0.6, 0.9] {
            let d = DiscretizedKernel::build(1, h, 200.0, 64).unwrap();
            let s = sigma_mh(&d).unwrap();
            assert!((s.sup - 1.0).abs() < 2e-4, "H={h}: {}", s.sup);
        }
    }

    #[test]
    fn m2_dense_and_power_iteration_agree() {
        let d = DiscretizedKernel::build(2, 0.75, 200.0, 64).unwrap();
        let dense = sigma_mh(&d).unwrap();
        let pi = sigma_power_iteration(&d, 3, 1).unwrap();
        assert!(pi.converged);
        assert!((dense.sup - pi.sup).abs() <= 1e-8 * dense.sup, "{} vs {}", dense.sup, pi.sup);
        // strictly below the Hilbert-Schmidt norm
        assert!(dense.sup < 0.5f64.sqrt());
    }

    #[test]
    fn m3_power_iteration_is_bounded_by_hs_norm() {
        let d = DiscretizedKernel::build(3, 0.8, 200.0, 32).unwrap();
        let s = sigma_mh(&d).unwrap();
        assert!(s.lower_bound);
        assert!(s.sup > 0.0 && s.sup < 1.0 / 6f64.sqrt());
        let bound = 2f64.powf(1.5) / 6f64.sqrt();
        assert!(s.sigma.powf(0.8) <= bound);
    }

    #[test]
    fn cache_round_trip_and_key_mismatch() {
        let dir = std::env::temp_dir().join(format!("phivar-kcache-{}", std::process::id()));
        let a = DiscretizedKernel::cached_in(&dir, 2, 0.7, 50.0, 16).unwrap();
        let b = DiscretizedKernel::cached_in(&dir, 2, 0.7, 50.0, 16).unwrap();
        assert_eq!(a, b);
        // a corrupted file under the right name is rebuilt
        let p = DiscretizedKernel::cache_path(&dir, 2, 0.7, 50.0, 16);
        std::fs::write(&p, b"garbage").unwrap();
        assert_eq!(DiscretizedKernel::cached_in(&dir, 2, 0.7, 50.0, 16).unwrap(), a);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn a_n_root_properties() {
        let a1 = a_n(1).unwrap();
        assert!(a1 < 1.0 / (2.0 * std::f64::consts::E).sqrt());
        for n in 1..=6 {
            let a = a_n(n).unwrap();
            assert!(a > 0.0);
            assert!((a_n_lhs(n, a) - 2.0).abs() < 1e-10, "n={n}: {}", a_n_lhs(n, a));
            assert!(a_n_lhs(n, 1.001 * a) > 2.0);
        }
    }
}
