//! The series condition Σ 2^m Φ(M y_m) e^{−x_m^α} < ∞ and its four presets.
//!
//! y_m and the x_m denominator are Stieltjes integrals against Ψ^{-1}; after
//! ε = Ψ(u) they become ∫₀^{Ψ^{-1}(2^{−m})} (log*(s/Ψ(u)))^{1/α} du. Everything is
//! carried in log space because Ψ^{-1}(2^{−m}) underflows for the exponential kinds.

use crate::error::{Error, Result};
use crate::funcs::{softplus, OrliczFamily, VariationFunction};
use crate::quad::adaptive;
use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Config {
    pub phi: VariationFunction,
    pub psi: VariationFunction,
    pub alpha: f64,
    pub c: f64,
    pub m_big: f64,
    pub k_alpha: f64,
}

impl Theorem1Config {
    /// K_α defaults to the quasi-triangle constant of φ_α.
    pub fn new(phi: VariationFunction, psi: VariationFunction, alpha: f64, c: f64, m_big: f64) -> Result<Self> {
        let k_alpha = OrliczFamily::new(alpha)?.k_alpha();
        let cfg = Theorem1Config { phi, psi, alpha, c, m_big, k_alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        self.psi.validate()?;
        for (name, v) in [("alpha", self.alpha), ("C", self.c), ("M", self.m_big), ("K_alpha", self.k_alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// ln ∫₀^{Ψ^{-1}(2^{−m})} softplus(shift − ln Ψ(u))^{1/α} du, with u = b·e^τ.
fn ln_stieltjes(psi: &VariationFunction, alpha: f64, m: u32, shift: f64) -> f64 {
    let ln_b = psi.ln_inverse(-(m as f64) * LN_2);
    if ln_b.is_infinite() {
        return ln_b;
    }
    let ln_g = |tau: f64| {
        let x = shift - psi.ln_eval(ln_b + tau);
        let v = tau + softplus(x).ln() / alpha;
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    // normalize by the value at τ = 0 so panels neither overflow nor underflow
    let ref_ln = ln_g(0.0);
    let f = |tau: f64| (ln_g(tau) - ref_ln).exp();
    let mut sum = 0.0;
    let (mut hi, mut width) = (0.0f64, 1.0f64);
    for k in 0..200 {
        let lo = hi - width;
        let p = adaptive(f, lo, hi, 1e-12, 0.0);
        sum += p;
        if k >= 3 && p <= 1e-17 * sum {
            break;
        }
        if !sum.is_finite() || k == 199 {
            return f64::INFINITY;
        }
        hi = lo;
        width *= 2.0;
    }
    ln_b + ref_ln + sum.ln()
}

/// ln y_m.
pub fn ln_y_m(cfg: &Theorem1Config, m: u32) -> f64 {
    ln_stieltjes(&cfg.psi, cfg.alpha, m, 0.0)
}

pub fn y_m(cfg: &Theorem1Config, m: i64) -> Result<f64> {
    if m < 0 {
        return Err(Error::Argument(format!("m must be >= 0, got {m}")));
    }
    Ok(ln_y_m(cfg, m as u32).exp())
}

/// ln of ∫₀^{2^{−m}} (log*(2^{−m}/ε))^{1/α} Ψ^{-1}(dε).
pub fn ln_x_denominator(cfg: &Theorem1Config, m: u32) -> f64 {
    ln_stieltjes(&cfg.psi, cfg.alpha, m, -(m as f64) * LN_2)
}

/// ln x_m; +∞ when C·2^{−m} lies beyond the range of Φ.
pub fn ln_x_m(cfg: &Theorem1Config, m: u32) -> f64 {
    let ly = cfg.c.ln() - m as f64 * LN_2;
    if ly >= cfg.phi.range_sup().ln() {
        return f64::INFINITY;
    }
    cfg.phi.ln_inverse(ly) - cfg.k_alpha.ln() - ln_x_denominator(cfg, m)
}

pub fn x_m(cfg: &Theorem1Config, m: i64) -> Result<f64> {
    if m < 0 {
        return Err(Error::Argument(format!("m must be >= 0, got {m}")));
    }
    Ok(ln_x_m(cfg, m as u32).exp())
}

/// ln(2^m Φ(M y_m) e^{−x_m^α}).
pub fn ln_term(cfg: &Theorem1Config, m: u32) -> f64 {
    let lx = ln_x_m(cfg, m);
    if lx == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let ly = ln_y_m(cfg, m);
    let lphi = if ly == f64::INFINITY { cfg.phi.range_sup().ln() } else { cfg.phi.ln_eval(cfg.m_big.ln() + ly) };
    m as f64 * LN_2 + lphi - (cfg.alpha * lx).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStatus {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub m: u32,
    pub ln_y: f64,
    pub ln_x: f64,
    pub ln_term: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesVerdict {
    pub status: SeriesStatus,
    pub partial_sums: Vec<(u32, f64)>,
    /// Largest term ratio a_{m+1}/a_m over the last 20% of terms.
    pub tail_ratio: f64,
    /// Estimated remainder beyond m_max (the larger of a geometric and a power-law fit).
    pub tail_estimate: f64,
    /// Fitted q in a_m ∝ m^{−q} over the same window.
    pub decay_exponent: f64,
    pub rows: Vec<SeriesRow>,
}

const RATIO_LIMIT: f64 = 0.99;
const TAIL_LIMIT: f64 = 1e-3;
/// Minimum fitted decay exponent for the power-law route.
const POWER_LIMIT: f64 = 1.1;
const DIVERGE_FLOOR: f64 = 1e-6;

pub fn series_check(cfg: &Theorem1Config, m_max: u32) -> Result<SeriesVerdict> {
    if m_max < 10 {
        return Err(Error::Argument(format!("m_max must be >= 10, got {m_max}")));
    }
    cfg.validate()?;
    let mut rows = Vec::with_capacity(m_max as usize + 1);
    let mut sum = 0.0;
    for m in 0..=m_max {
        let lt = ln_term(cfg, m);
        if lt.is_nan() {
            return Err(Error::Range(format!("term {m} is not a number")));
        }
        sum += lt.exp();
        rows.push(SeriesRow { m, ln_y: ln_y_m(cfg, m), ln_x: ln_x_m(cfg, m), ln_term: lt, partial_sum: sum });
    }
    let start = (m_max as usize * 4) / 5;
    let window = &rows[start..];
    let ln_ratios: Vec<f64> = window
        .windows(2)
        .map(|w| if w[1].ln_term == f64::NEG_INFINITY { f64::NEG_INFINITY } else { w[1].ln_term - w[0].ln_term })
        .collect();
    let tail_ratio = ln_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    let last = rows.last().unwrap();
    let a_last = last.ln_term.exp();
    // local log-log slope a_m ∝ m^{−q} over the window
    let first = &window[0];
    let q = if last.ln_term == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        -(last.ln_term - first.ln_term) / ((last.m as f64).ln() - (first.m as f64).max(1.0).ln())
    };
    let tail_estimate = if tail_ratio < 1.0 {
        let geometric = a_last * tail_ratio / (1.0 - tail_ratio);
        let power = if q > 1.0 { a_last * last.m as f64 / (q - 1.0) } else { f64::INFINITY };
        geometric.max(if q.is_finite() { power } else { 0.0 })
    } else {
        f64::INFINITY
    };
    let decays = tail_ratio <= RATIO_LIMIT || (tail_ratio < 1.0 && q >= POWER_LIMIT);
    let status = if decays && tail_estimate < TAIL_LIMIT * sum {
        SeriesStatus::Converges
    } else if ln_ratios.iter().all(|&r| r >= 0.0) && a_last >= DIVERGE_FLOOR {
        SeriesStatus::Diverges
    } else {
        SeriesStatus::Inconclusive
    };
    Ok(SeriesVerdict { status, partial_sums: rows.iter().map(|r| (r.m, r.partial_sum)).collect(), tail_ratio, tail_estimate, decay_exponent: q, rows })
}

/// Columns m, y_m, x_m, term, partial_sum.
pub fn verdict_csv(v: &SeriesVerdict) -> String {
    let mut s = String::from("m,y_m,x_m,term,partial_sum\n");
    for r in &v.rows {
        s.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", r.m, r.ln_y.exp(), r.ln_x.exp(), r.ln_term.exp(), r.partial_sum));
    }
    s
}

/// K_{α,p} = ∫₀¹ (log*(1/v))^{1/α} d(v^{1/p}): the x_m denominator for Ψ = t^p at m = 0.
pub fn k_alpha_p(alpha: f64, p: f64) -> Result<f64> {
    let cfg = Theorem1Config::new(VariationFunction::power(p)?, VariationFunction::power(p)?, alpha, 1.0, 1.0)?;
    Ok(ln_x_denominator(&cfg, 0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetParams {
    /// Φ = t^p(log*₂(1/t))^{−p/α}, Ψ = t^p.
    PowerLogLog { p: f64, alpha: f64 },
    /// Φ = t^p, Ψ = t^p(log*₂(1/t))^{p/α}.
    PowerFromLogLog { p: f64, alpha: f64 },
    ExpBeta { alpha: f64, beta0: f64, beta: f64 },
    ExpLogPow { alpha: f64, c: f64, r: f64, v: f64 },
}

impl PresetParams {
    pub fn case(&self) -> u8 {
        match self {
            PresetParams::PowerLogLog { .. } => 1,
            PresetParams::PowerFromLogLog { .. } => 2,
            PresetParams::ExpBeta { .. } => 3,
            PresetParams::ExpLogPow { .. } => 4,
        }
    }
}

/// C = (p/α+2)^{p/α}(K_α K_{α,p})^p, so that x_m^α ≥ (p/α+2) log m asymptotically.
pub fn loglog_preset_c(alpha: f64, p: f64) -> Result<f64> {
    let ka = OrliczFamily::new(alpha)?.k_alpha();
    Ok((p / alpha + 2.0).powf(p / alpha) * (ka * k_alpha_p(alpha, p)?).powf(p))
}

pub fn preset(params: PresetParams) -> Result<Theorem1Config> {
    match params {
        PresetParams::PowerLogLog { p, alpha } => {
            let c = loglog_preset_c(alpha, p)?;
            Theorem1Config::new(VariationFunction::pllm(p, alpha)?, VariationFunction::power(p)?, alpha, c, 1.0)
        }
        PresetParams::PowerFromLogLog { p, alpha } => {
            let c = loglog_preset_c(alpha, p)?;
            Theorem1Config::new(VariationFunction::power(p)?, VariationFunction::pllp(p, alpha)?, alpha, c, 1.0)
        }
        PresetParams::ExpBeta { alpha, beta0, beta } => {
            if !(beta0 > 1.0 / alpha) {
                return Err(Error::Argument(format!("case 3 needs beta0 > 1/alpha = {}, got beta0 = {beta0}", 1.0 / alpha)));
            }
            let cap = 1.0 - 1.0 / alpha + beta0;
            if !(beta < cap) {
                return Err(Error::Argument(format!("case 3 needs beta < 1 - 1/alpha + beta0 = {cap}, got beta = {beta}")));
            }
            Theorem1Config::new(VariationFunction::exp_beta(beta)?, VariationFunction::exp_beta(beta0)?, alpha, 1.0, 1.0)
        }
        PresetParams::ExpLogPow { alpha, c, r, v } => {
            if !(v > r) {
                return Err(Error::Argument(format!("case 4 needs v > r, got v = {v}, r = {r}")));
            }
            Theorem1Config::new(VariationFunction::exp_log_pow(c, v)?, VariationFunction::exp_log_pow(c, r)?, alpha, 1.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::toward_zero;

    fn power_cfg(p: f64, alpha: f64, c: f64) -> Theorem1Config {
        let f = VariationFunction::power(p).unwrap();
        Theorem1Config::new(f, f, alpha, c, 1.0).unwrap()
    }

    #[test]
    fn y_m_power_matches_direct_oracle() {
        let (p, alpha, m) = (2.0, 2.0, 10);
        let cfg = power_cfg(p, alpha, 1.0);
        let top = 2f64.powi(-m);
        let oracle = toward_zero(|e: f64| (1.0 / e).ln_1p().powf(1.0 / alpha) * e.powf(1.0 / p - 1.0), top, 1e-12, 4000).value / p;
        let y = y_m(&cfg, m as i64).unwrap();
        assert!((y / oracle - 1.0).abs() < 1e-6, "{y} vs {oracle}");
        assert!(y_m(&cfg, -1).is_err());
    }

    #[test]
    fn y_m_strictly_decreasing() {
        let cfg = power_cfg(2.0, 2.0, 1.0);
        let ys: Vec<f64> = (0..=40).map(|m| y_m(&cfg, m).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn y_1_exp_beta_matches_oracle() {
        let (alpha, b0) = (2.0, 1.0);
        let psi = VariationFunction::exp_beta(b0).unwrap();
        let cfg = Theorem1Config::new(psi, psi, alpha, 1.0, 1.0).unwrap();
        // ε = Ψ(u): ∫₀^{Ψ^{-1}(1/2)} (log(1 + e^{u^{−1/β₀}}))^{1/α} du
        let top = psi.inverse(0.5).unwrap();
        let oracle = toward_zero(|u: f64| softplus(u.powf(-1.0 / b0)).powf(1.0 / alpha), top, 1e-12, 4000).value;
        let y1 = y_m(&cfg, 1).unwrap();
        assert!((y1 / oracle - 1.0).abs() < 1e-8, "{y1} vs {oracle}");
        assert!(y_m(&cfg, 3).unwrap() < y1);
        assert_eq!(y_m(&cfg, 0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn denominator_scales_like_power() {
        let (p, alpha) = (2.0, 1.5);
        let cfg = power_cfg(p, alpha, 1.0);
        let k = k_alpha_p(alpha, p).unwrap();
        let oracle = toward_zero(|v: f64| (1.0 / v).ln_1p().powf(1.0 / alpha) * v.powf(1.0 / p - 1.0), 1.0, 1e-12, 4000).value / p;
        assert!((k / oracle - 1.0).abs() < 1e-8);
        for m in [5u32, 10, 20] {
            let scaled = ln_x_denominator(&cfg, m).exp() * 2f64.powf(m as f64 / p);
            assert!((scaled / k - 1.0).abs() < 1e-6, "m={m}");
        }
    }

    #[test]
    fn x_m_power_is_m_independent_and_homogeneous() {
        let cfg = power_cfg(3.0, 2.0, 1.0);
        let x5 = x_m(&cfg, 5).unwrap();
        let x20 = x_m(&cfg, 20).unwrap();
        assert!((x5 / x20 - 1.0).abs() < 1e-6);
        let k = k_alpha_p(2.0, 3.0).unwrap();
        assert!((x5 - 1.0 / k).abs() < 1e-6 * x5);
        let doubled = power_cfg(3.0, 2.0, 2.0);
        assert!((x_m(&doubled, 7).unwrap() / x_m(&cfg, 7).unwrap() - 2f64.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn partial_sums_nondecreasing() {
        let cfg = preset(PresetParams::PowerLogLog { p: 2.0, alpha: 2.0 }).unwrap();
        let v = series_check(&cfg, 60).unwrap();
        assert!(v.partial_sums.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(series_check(&cfg, 5).is_err());
    }

    #[test]
    fn power_law_tail_converges_without_ratio_gap() {
        let cfg = preset(PresetParams::PowerFromLogLog { p: 2.0, alpha: 2.0 }).unwrap();
        let v = series_check(&cfg, 1000).unwrap();
        assert!(v.tail_ratio > RATIO_LIMIT && v.tail_ratio < 1.0);
        assert!(v.decay_exponent > 2.0, "{}", v.decay_exponent);
        assert_eq!(v.status, SeriesStatus::Converges);
        // same series, too short to bound the tail
        assert_eq!(series_check(&cfg, 200).unwrap().status, SeriesStatus::Inconclusive);
    }

    #[test]
    fn reduced_c_does_not_converge() {
        let mut cfg = preset(PresetParams::PowerLogLog { p: 2.0, alpha: 2.0 }).unwrap();
        cfg.c /= 100.0;
        let v = series_check(&cfg, 200).unwrap();
        assert_ne!(v.status, SeriesStatus::Converges);
        let s = &v.partial_sums;
        assert!(s[200].1 > s[150].1 * 1.1);
    }

    #[test]
    fn exp_log_pow_tail_is_tiny() {
        let cfg = preset(PresetParams::ExpLogPow { alpha: 2.0, c: 1.0, r: 1.0, v: 2.0 }).unwrap();
        let v = series_check(&cfg, 60).unwrap();
        assert_eq!(v.status, SeriesStatus::Converges);
        let s50 = v.partial_sums[50].1;
        let s60 = v.partial_sums[60].1;
        assert!(s60 - s50 < 1e-12 * s60, "{}", s60 - s50);
    }

    #[test]
    fn preset_shapes_and_constraints() {
        let c1 = preset(PresetParams::PowerLogLog { p: 2.0, alpha: 2.0 }).unwrap();
        assert_eq!(c1.phi, VariationFunction::pllm(2.0, 2.0).unwrap());
        assert_eq!(c1.psi, VariationFunction::power(2.0).unwrap());
        assert!(preset(PresetParams::ExpBeta { alpha: 2.0, beta0: 1.0, beta: 1.4 }).is_ok());
        assert!(preset(PresetParams::ExpBeta { alpha: 2.0, beta0: 1.0, beta: 1.6 }).is_err());
        assert!(preset(PresetParams::ExpBeta { alpha: 2.0, beta0: 0.4, beta: 0.1 }).is_err());
        assert!(preset(PresetParams::ExpLogPow { alpha: 2.0, c: 1.0, r: 2.0, v: 2.0 }).is_err());
    }

    #[test]
    fn x_m_grows_like_log_m() {
        // x_m^α ≈ (p/α + 2)·log(m log 2 / p + O(1)); fit x_m^α linearly in log m
        for (p, alpha, params) in [
            (2.0, 2.0, PresetParams::PowerLogLog { p: 2.0, alpha: 2.0 }),
            (1.0, 2.0, PresetParams::PowerLogLog { p: 1.0, alpha: 2.0 }),
            (2.0, 1.0, PresetParams::PowerFromLogLog { p: 2.0, alpha: 1.0 }),
            (2.0, 2.0, PresetParams::PowerFromLogLog { p: 2.0, alpha: 2.0 }),
        ] {
            let cfg = preset(params).unwrap();
            let pts: Vec<(f64, f64)> = (50..=200).step_by(10).map(|m| ((m as f64).ln(), (cfg.alpha * ln_x_m(&cfg, m)).exp())).collect();
            let n = pts.len() as f64;
            let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
            let slope = sxy / sxx;
            let r2 = sxy * sxy / (sxx * syy);
            let predicted = p / alpha + 2.0;
            assert!((slope / predicted - 1.0).abs() < 0.15, "{params:?}: slope {slope} vs {predicted}");
            assert!(r2 > 0.999, "{params:?}: r2 {r2}");
        }
    }

    #[test]
    fn exp_beta_denominator_order() {
        // s = log(1/ε): denominator ≈ β₀ ∫₀^∞ s^{1/α}(m log 2 + s)^{−1−β₀} ds
        //             = β₀ (m log 2)^{1/α−β₀} B(1 + 1/α, β₀ − 1/α)
        let (alpha, b0) = (2.0, 1.0);
        let psi = VariationFunction::exp_beta(b0).unwrap();
        let cfg = Theorem1Config::new(VariationFunction::exp_beta(1.4).unwrap(), psi, alpha, 1.0, 1.0).unwrap();
        let beta_fn = |a: f64, b: f64| (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp();
        let mut prev = f64::INFINITY;
        for m in [200u32, 1000, 5000] {
            let ml = m as f64 * LN_2;
            let approx = b0 * ml.powf(1.0 / alpha - b0) * beta_fn(1.0 + 1.0 / alpha, b0 - 1.0 / alpha);
            let err = (ln_x_denominator(&cfg, m).exp() / approx - 1.0).abs();
            assert!(err < 0.05 && err < prev, "m={m}: {err}");
            prev = err;
        }
    }

    #[test]
    fn csv_columns() {
        let cfg = preset(PresetParams::ExpLogPow { alpha: 2.0, c: 1.0, r: 1.0, v: 2.0 }).unwrap();
        let v = series_check(&cfg, 10).unwrap();
        let csv = verdict_csv(&v);
        assert!(csv.starts_with("m,y_m,x_m,term,partial_sum\n"));
        assert_eq!(csv.lines().count(), 12);
    }
}
