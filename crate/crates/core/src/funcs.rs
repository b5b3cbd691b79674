//! Variation functions Φ/Ψ, the iterated logarithms and the Orlicz gauge φ_α.

use crate::error::{domain, Error, Result};
use std::fmt;
use std::str::FromStr;

/// Minimum over t ∈ (0, 1] of log*₂(1/t)·(1 + log*(1/t))·(1 + t), attained at t = 1.
/// The "plus" kinds are increasing on (0, 1] iff (log-exponent)/(power-exponent) < this.
pub const PLUS_MONOTONE_KAPPA: f64 = 1.783_185_476_932_616;

pub fn log_star(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("log* needs x >= 0, got {x}"));
    }
    Ok(x.ln_1p())
}

pub fn log_star2(x: f64) -> Result<f64> {
    Ok(log_star(log_star(x)?)?)
}

/// log*(1/t) for t > 0, accurate for tiny and huge t.
#[inline]
pub fn log_star_recip(t: f64) -> f64 {
    if t < 1.0 {
        t.ln_1p() - t.ln()
    } else {
        (1.0 / t).ln_1p()
    }
}

/// log*₂(1/t) for t > 0.
#[inline]
pub fn log_star2_recip(t: f64) -> f64 {
    log_star_recip(t).ln_1p()
}

/// log(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// log*₂(1/t) with t = e^{lt}.
#[inline]
fn loglog_from_ln(lt: f64) -> f64 {
    softplus(-lt).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariationFunction {
    Power { p: f64 },
    PowerLogLogMinus { p: f64, alpha: f64 },
    /// The log factor is frozen at t = 1 for t > 1 (see README).
    PowerLogLogPlus { p: f64, alpha: f64 },
    ExpBeta { beta: f64 },
    /// Extended by t ↦ t on [1, ∞).
    ExpLogPow { c: f64, r: f64 },
    HermiteOptimal { m: u32, h: f64 },
    /// The log factor is frozen at t = 1 for t > 1 (see README).
    XiScale { m: u32, h: f64 },
}

use VariationFunction as VF;

fn pos(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
    }
}

impl VariationFunction {
    pub fn power(p: f64) -> Result<Self> {
        VF::Power { p }.validated()
    }
    pub fn pllm(p: f64, alpha: f64) -> Result<Self> {
        VF::PowerLogLogMinus { p, alpha }.validated()
    }
    pub fn pllp(p: f64, alpha: f64) -> Result<Self> {
        VF::PowerLogLogPlus { p, alpha }.validated()
    }
    pub fn exp_beta(beta: f64) -> Result<Self> {
        VF::ExpBeta { beta }.validated()
    }
    pub fn exp_log_pow(c: f64, r: f64) -> Result<Self> {
        VF::ExpLogPow { c, r }.validated()
    }
    pub fn hermite(m: u32, h: f64) -> Result<Self> {
        VF::HermiteOptimal { m, h }.validated()
    }
    pub fn xi(m: u32, h: f64) -> Result<Self> {
        VF::XiScale { m, h }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            VF::Power { p } => pos("p", p),
            VF::PowerLogLogMinus { p, alpha } => pos("p", p).and(pos("alpha", alpha)),
            VF::PowerLogLogPlus { p, alpha } => {
                pos("p", p)?;
                pos("alpha", alpha)?;
                if alpha * PLUS_MONOTONE_KAPPA <= 1.0 {
                    return Err(Error::Argument(format!(
                        "pllp needs alpha > {:.6} to be increasing, got {alpha}",
                        1.0 / PLUS_MONOTONE_KAPPA
                    )));
                }
                Ok(())
            }
            VF::ExpBeta { beta } => pos("beta", beta),
            VF::ExpLogPow { c, r } => pos("c", c).and(pos("r", r)),
            VF::HermiteOptimal { m, h } => {
                if m == 0 {
                    return Err(Error::Argument("m must be >= 1".into()));
                }
                pos("H", h)
            }
            VF::XiScale { m, h } => {
                if m == 0 {
                    return Err(Error::Argument("m must be >= 1".into()));
                }
                pos("H", h)?;
                if h * PLUS_MONOTONE_KAPPA <= 0.5 * m as f64 {
                    return Err(Error::Argument(format!(
                        "xi needs H > m/{:.6} to be increasing, got m={m}, H={h}",
                        2.0 * PLUS_MONOTONE_KAPPA
                    )));
                }
                Ok(())
            }
        }
    }

    /// Supremum of the range of `eval` (exclusive).
    pub fn range_sup(&self) -> f64 {
        match self {
            VF::ExpBeta { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Φ(t) for t ≥ 0; Φ(0) = 0.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            VF::Power { p } => {
                if p.fract() == 0.0 && p <= 8.0 {
                    t.powi(p as i32)
                } else {
                    t.powf(p)
                }
            }
            VF::PowerLogLogMinus { p, alpha } => t.powf(p) * log_star2_recip(t).powf(-p / alpha),
            VF::PowerLogLogPlus { p, alpha } => t.powf(p) * log_star2_recip(t.min(1.0)).powf(p / alpha),
            VF::ExpBeta { beta } => (-t.powf(-1.0 / beta)).exp(),
            VF::ExpLogPow { c, r } => {
                if t < 1.0 {
                    (-r * (-t.ln()).powf(c)).exp()
                } else {
                    t
                }
            }
            VF::HermiteOptimal { m, h } => {
                let (a, e) = (1.0 / h, m as f64 / (2.0 * h));
                let num = if a == 2.0 { t * t } else { t.powf(a) };
                let l = log_star2_recip(t);
                if e == 1.0 {
                    num / l
                } else {
                    num * l.powf(-e)
                }
            }
            VF::XiScale { m, h } => t.powf(h) * log_star2_recip(t.min(1.0)).powf(0.5 * m as f64),
        }
    }

    pub fn checked_eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("eval needs t >= 0, got {t}"));
        }
        Ok(self.eval(t))
    }

    /// ln Φ(e^{lt}); finite wherever Φ would underflow.
    pub fn ln_eval(&self, lt: f64) -> f64 {
        match *self {
            VF::Power { p } => p * lt,
            VF::PowerLogLogMinus { p, alpha } => p * lt - (p / alpha) * loglog_from_ln(lt).ln(),
            VF::PowerLogLogPlus { p, alpha } => p * lt + (p / alpha) * loglog_from_ln(lt.min(0.0)).ln(),
            VF::ExpBeta { beta } => -(-lt / beta).exp(),
            VF::ExpLogPow { c, r } => {
                if lt < 0.0 {
                    -r * (-lt).powf(c)
                } else {
                    lt
                }
            }
            VF::HermiteOptimal { m, h } => lt / h - (m as f64) / (2.0 * h) * loglog_from_ln(lt).ln(),
            VF::XiScale { m, h } => h * lt + 0.5 * m as f64 * loglog_from_ln(lt.min(0.0)).ln(),
        }
    }

    /// Leading power exponent near 0 (None for the exponential kinds).
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            VF::Power { p } | VF::PowerLogLogMinus { p, .. } | VF::PowerLogLogPlus { p, .. } => Some(p),
            VF::HermiteOptimal { h, .. } => Some(1.0 / h),
            VF::XiScale { h, .. } => Some(h),
            VF::ExpBeta { .. } | VF::ExpLogPow { .. } => None,
        }
    }

    /// Kinds admitted by `phi_norm`: power-type with exponent ≥ 1. The
    /// exponential kinds fail the Δ₂ condition.
    pub fn is_convex_delta2(&self) -> bool {
        match self {
            VF::Power { p } => *p >= 1.0,
            VF::PowerLogLogMinus { p, .. } | VF::PowerLogLogPlus { p, .. } => *p >= 1.0,
            VF::HermiteOptimal { h, .. } => *h <= 1.0,
            VF::XiScale { h, .. } => *h >= 1.0,
            VF::ExpBeta { .. } | VF::ExpLogPow { .. } => false,
        }
    }

    /// Φ^{-1}(y).
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || y >= self.range_sup() {
            return Err(Error::Range(format!("{y} is outside the range of {self}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            VF::Power { p } => y.powf(1.0 / p),
            VF::ExpBeta { beta } => (-y.ln()).powf(-beta),
            VF::ExpLogPow { c, r } => {
                if y < 1.0 {
                    (-(-y.ln() / r).powf(1.0 / c)).exp()
                } else {
                    y
                }
            }
            _ => self.ln_inverse(y.ln()).exp(),
        })
    }

    /// ln Φ^{-1}(e^{ly}).
    pub fn ln_inverse(&self, ly: f64) -> f64 {
        match *self {
            VF::Power { p } => return ly / p,
            VF::ExpBeta { beta } => {
                if ly < 0.0 {
                    return -beta * (-ly).ln();
                }
                return f64::INFINITY;
            }
            VF::ExpLogPow { c, r } => {
                return if ly < 0.0 { -(-ly / r).powf(1.0 / c) } else { ly };
            }
            _ => {}
        }
        let e = self.power_exponent().unwrap_or(1.0);
        let guess = ly / e;
        let f = |lt: f64| self.ln_eval(lt) - ly;
        let mut step = 1.0 + guess.abs() * 0.1;
        let mut lo = guess - step;
        let mut hi = guess + step;
        while f(lo) > 0.0 {
            step *= 2.0;
            lo = guess - step;
        }
        step = 1.0 + guess.abs() * 0.1;
        while f(hi) < 0.0 {
            step *= 2.0;
            hi = guess + step;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn token_kind(&self) -> &'static str {
        match self {
            VF::Power { .. } => "power",
            VF::PowerLogLogMinus { .. } => "pllm",
            VF::PowerLogLogPlus { .. } => "pllp",
            VF::ExpBeta { .. } => "expbeta",
            VF::ExpLogPow { .. } => "explogpow",
            VF::HermiteOptimal { .. } => "hermite",
            VF::XiScale { .. } => "xi",
        }
    }
}

impl fmt::Display for VariationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.token_kind();
        match *self {
            VF::Power { p } => write!(f, "{k}:p={p}"),
            VF::PowerLogLogMinus { p, alpha } | VF::PowerLogLogPlus { p, alpha } => {
                write!(f, "{k}:p={p},alpha={alpha}")
            }
            VF::ExpBeta { beta } => write!(f, "{k}:beta={beta}"),
            VF::ExpLogPow { c, r } => write!(f, "{k}:c={c},r={r}"),
            VF::HermiteOptimal { m, h } | VF::XiScale { m, h } => write!(f, "{k}:m={m},H={h}"),
        }
    }
}

fn perr<T>(col: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line: 1, col, msg: msg.into() })
}

impl FromStr for VariationFunction {
    type Err = Error;

    /// Grammar: `kind:key=val,key=val`. Columns in errors are 1-based.
    fn from_str(s: &str) -> Result<Self> {
        let Some(colon) = s.find(':') else {
            return perr(1, format!("expected `kind:key=val,...`, got `{s}`"));
        };
        let kind = &s[..colon];
        let keys: &[&str] = match kind {
            "power" => &["p"],
            "pllm" | "pllp" => &["p", "alpha"],
            "expbeta" => &["beta"],
            "explogpow" => &["c", "r"],
            "hermite" | "xi" => &["m", "H"],
            _ => return perr(1, format!("unknown kind `{kind}`")),
        };
        let mut vals: Vec<Option<f64>> = vec![None; keys.len()];
        let mut offset = colon + 1;
        for part in s[colon + 1..].split(',') {
            let col = offset + 1;
            offset += part.len() + 1;
            let Some(eq) = part.find('=') else {
                return perr(col, format!("expected `key=value`, got `{part}`"));
            };
            let (key, raw) = (&part[..eq], &part[eq + 1..]);
            let Some(idx) = keys.iter().position(|k| *k == key) else {
                return perr(col, format!("unknown key `{key}` for kind `{kind}`"));
            };
            if vals[idx].is_some() {
                return perr(col, format!("duplicate key `{key}`"));
            }
            let v: f64 = match raw.parse() {
                Ok(v) => v,
                Err(_) => return perr(col + eq + 1, format!("`{raw}` is not a number")),
            };
            if !(v.is_finite() && v > 0.0) {
                return perr(col + eq + 1, format!("`{key}` must be positive, got {raw}"));
            }
            vals[idx] = Some(v);
        }
        for (k, v) in keys.iter().zip(&vals) {
            if v.is_none() {
                return perr(s.len() + 1, format!("missing key `{k}`"));
            }
        }
        let v: Vec<f64> = vals.into_iter().map(|v| v.unwrap()).collect();
        let as_m = |x: f64| -> Result<u32> {
            if x.fract() == 0.0 && x >= 1.0 && x <= 64.0 {
                Ok(x as u32)
            } else {
                perr(colon + 2, format!("m must be a positive integer, got {x}"))
            }
        };
        let vf = match kind {
            "power" => VF::Power { p: v[0] },
            "pllm" => VF::PowerLogLogMinus { p: v[0], alpha: v[1] },
            "pllp" => VF::PowerLogLogPlus { p: v[0], alpha: v[1] },
            "expbeta" => VF::ExpBeta { beta: v[0] },
            "explogpow" => VF::ExpLogPow { c: v[0], r: v[1] },
            "hermite" => VF::HermiteOptimal { m: as_m(v[0])?, h: v[1] },
            _ => VF::XiScale { m: as_m(v[0])?, h: v[1] },
        };
        vf.validate().map_err(|e| Error::Parse { line: 1, col: 1, msg: e.to_string() })?;
        Ok(vf)
    }
}

/// φ_α(x) = e^{|x|^α} − 1 and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrliczFamily {
    pub alpha: f64,
}

impl OrliczFamily {
    pub fn new(alpha: f64) -> Result<Self> {
        pos("alpha", alpha)?;
        Ok(OrliczFamily { alpha })
    }

    /// Quasi-triangle constant.
    pub fn k_alpha(&self) -> f64 {
        if self.alpha < 1.0 {
            2f64.powf(1.0 / self.alpha)
        } else {
            1.0
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        x.abs().powf(self.alpha).exp_m1()
    }

    pub fn phi_inverse(&self, y: f64) -> f64 {
        y.max(0.0).ln_1p().powf(1.0 / self.alpha)
    }
}

/// Empirical ‖U‖_{φα}: the smallest Δ with mean φ_α(U/Δ) ≤ 1.
///
/// Data are first divided by max|U| so that rescaling by a power of two
/// leaves the bisection path unchanged.
pub fn orlicz_norm_mc(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("orlicz_norm_mc needs at least one sample".into()));
    }
    let fam = OrliczFamily::new(alpha)?;
    let a = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !a.is_finite() {
        return Err(Error::Argument("samples must be finite".into()));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let z: Vec<f64> = samples.iter().map(|x| (x / a).abs().powf(alpha)).collect();
    let n = z.len() as f64;
    // mean φ(z/Δ) written with s = Δ^{-α}
    let g = |ln_d: f64| -> f64 {
        let s = (-alpha * ln_d).exp();
        z.iter().map(|&w| (w * s).exp_m1()).sum::<f64>() / n
    };
    // Every term is ≤ 1 once Δ ≥ (log 2)^{-1/α}.
    let mut hi = fam.phi_inverse(1.0).recip().ln();
    let mut lo = hi - 1.0;
    while g(lo) <= 1.0 {
        hi = lo;
        lo -= 1.0;
        if lo < -700.0 {
            return Ok(a * lo.exp());
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-13 {
            break;
        }
        if g(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(a * hi.exp())
}
