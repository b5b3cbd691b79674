//! Φ-variation functionals on grid paths.
//!
//! Suprema are over partitions drawn from the sample grid; the forward DP adds
//! terms left to right so its value matches brute-force enumeration bit for bit.

use crate::error::{Error, Result};
use crate::funcs::VariationFunction;
use crate::metric::{variation_of_metric, MetricVariation, PseudoMetric};
use crate::simulate::SamplePath;

/// Full-range (uncapped) DP limit.
pub const MAX_FULL_DP: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub value: f64,
    pub partition: Vec<usize>,
    pub mesh: f64,
}

impl PartitionResult {
    /// Columns index, t, f(t), contribution of the increment ending at t.
    pub fn to_csv(&self, f: &SamplePath, phi: &VariationFunction) -> String {
        let mut s = String::from("index,t,value,contribution\n");
        let mut prev: Option<usize> = None;
        for &i in &self.partition {
            let c = prev.map_or(0.0, |p| phi.eval((f.values[i] - f.values[p]).abs()));
            s.push_str(&format!("{},{},{},{}\n", i, f.t(i), f.values[i], c));
            prev = Some(i);
        }
        s
    }
}

fn evaluator(phi: &VariationFunction) -> impl Fn(f64) -> f64 + '_ {
    move |x: f64| phi.eval(x)
}

fn check_partition(n: usize, pi: &[usize]) -> Result<()> {
    if pi.len() < 2 || pi[0] != 0 || *pi.last().unwrap() != n || pi.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(format!("partition must increase strictly from 0 to {n}")));
    }
    Ok(())
}

fn sum_over(values: &[f64], pi: &[usize], phi: &VariationFunction) -> f64 {
    let ev = evaluator(phi);
    pi.windows(2).fold(0.0, |acc, w| acc + ev((values[w[1]] - values[w[0]]).abs()))
}

/// v_Φ(f, π).
pub fn v_phi(f: &SamplePath, pi: &[usize], phi: &VariationFunction) -> Result<f64> {
    check_partition(f.n, pi)?;
    Ok(sum_over(&f.values, pi, phi))
}

/// Largest admissible index gap for a mesh cap on an n-step grid.
fn window(n: usize, mesh_cap: Option<f64>) -> Result<usize> {
    match mesh_cap {
        None => {
            if n > MAX_FULL_DP {
                return Err(Error::Unsupported(format!("uncapped DP limited to n <= {MAX_FULL_DP}, got {n}")));
            }
            Ok(n)
        }
        Some(d) => {
            let step = 1.0 / n as f64;
            if !(d >= step * (1.0 - 1e-12)) {
                return Err(Error::Argument(format!("mesh cap {d} below grid step {step}")));
            }
            Ok(((d * n as f64 * (1.0 + 1e-12)).floor() as usize).clamp(1, n))
        }
    }
}

/// Range min/max in O(1) after O(n log n) setup.
struct SparseTable {
    min: Vec<Vec<f64>>,
    max: Vec<Vec<f64>>,
}

impl SparseTable {
    fn new(v: &[f64]) -> Self {
        let (mut min, mut max) = (vec![v.to_vec()], vec![v.to_vec()]);
        let mut len = 1;
        while 2 * len <= v.len() {
            let (pm, px) = (min.last().unwrap(), max.last().unwrap());
            let m: Vec<f64> = (0..=v.len() - 2 * len).map(|i| pm[i].min(pm[i + len])).collect();
            let x: Vec<f64> = (0..=v.len() - 2 * len).map(|i| px[i].max(px[i + len])).collect();
            min.push(m);
            max.push(x);
            len *= 2;
        }
        SparseTable { min, max }
    }

    /// (min, max) over lo..=hi.
    fn range(&self, lo: usize, hi: usize) -> (f64, f64) {
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        let j = hi + 1 - (1 << k);
        (self.min[k][lo].min(self.min[k][j]), self.max[k][lo].max(self.max[k][j]))
    }
}

const PRUNE_EVERY: usize = 32;

/// Exact DP over grid partitions with gaps ≤ w; returns best value and the
/// lexicographically smallest optimal partition.
///
/// best[] is nondecreasing, so once best[i−1] + Φ(largest reachable increment)
/// falls strictly below the running maximum no earlier i can reach it.
fn dp(values: &[f64], phi: &VariationFunction, w: usize) -> (f64, Vec<usize>) {
    let n = values.len() - 1;
    let ev = evaluator(phi);
    let table = (w > 2 * PRUNE_EVERY).then(|| SparseTable::new(values));
    let mut best = vec![0.0f64; n + 1];
    // optimal predecessors of j: preds[starts[j]..starts[j+1]]
    let mut starts = vec![0usize; n + 2];
    let mut preds: Vec<u32> = Vec::with_capacity(n + 1);
    let mut ties: Vec<u32> = Vec::new();
    for j in 1..=n {
        let fj = values[j];
        let lo = j.saturating_sub(w);
        let mut b = f64::NEG_INFINITY;
        ties.clear();
        let mut i = j;
        while i > lo {
            i -= 1;
            let v = best[i] + ev((fj - values[i]).abs());
            if v > b {
                b = v;
                ties.clear();
                ties.push(i as u32);
            } else if v == b {
                ties.push(i as u32);
            }
            if let Some(t) = &table {
                if (j - i) % PRUNE_EVERY == 0 && i > lo {
                    let (mn, mx) = t.range(lo, i - 1);
                    let reach = ev((fj - mn).max(mx - fj)) * (1.0 + 1e-9);
                    if best[i - 1] + reach < b * (1.0 - 1e-12) {
                        break;
                    }
                }
            }
        }
        best[j] = b;
        starts[j] = preds.len();
        preds.extend_from_slice(&ties);
        starts[j + 1] = preds.len();
    }
    // nodes lying on some optimal path to n
    let mut co = vec![false; n + 1];
    co[n] = true;
    let mut next = vec![usize::MAX; n + 1];
    for j in (1..=n).rev() {
        if !co[j] {
            continue;
        }
        for &i in &preds[starts[j]..starts[j + 1]] {
            let i = i as usize;
            co[i] = true;
            next[i] = next[i].min(j);
        }
    }
    let mut partition = vec![0];
    let mut i = 0;
    while i < n {
        i = next[i];
        partition.push(i);
    }
    (best[n], partition)
}

fn result_from(values: &[f64], phi: &VariationFunction, partition: Vec<usize>) -> PartitionResult {
    let n = values.len() - 1;
    let mesh = partition.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0) as f64 / n as f64;
    PartitionResult { value: sum_over(values, &partition, phi), partition, mesh }
}

/// sup over grid partitions of v_Φ(f, π), optionally restricted to mesh ≤ mesh_cap.
pub fn sup_variation(f: &SamplePath, phi: &VariationFunction, mesh_cap: Option<f64>) -> Result<PartitionResult> {
    let w = window(f.n, mesh_cap)?;
    let (_, partition) = dp(&f.values, phi, w);
    Ok(result_from(&f.values, phi, partition))
}

/// Value only, for callers that do not need the partition.
pub fn sup_variation_value(f: &SamplePath, phi: &VariationFunction, mesh_cap: Option<f64>) -> Result<f64> {
    let w = window(f.n, mesh_cap)?;
    Ok(dp(&f.values, phi, w).0)
}

/// (δ, optimal partition over Π_δ) for each δ.
pub fn limiting_variation(f: &SamplePath, phi: &VariationFunction, deltas: &[f64]) -> Result<Vec<(f64, PartitionResult)>> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument("delta list must be strictly decreasing".into()));
    }
    deltas.iter().map(|&d| Ok((d, sup_variation(f, phi, Some(d))?))).collect()
}

/// ‖f‖_Φ = inf{r > 0 : V_Φ(f/r) ≤ 1}.
pub fn phi_norm(f: &SamplePath, phi: &VariationFunction) -> Result<f64> {
    if !phi.is_convex_delta2() {
        return Err(Error::Unsupported(format!("phi_norm needs a convex Δ2 function, got {phi}")));
    }
    if f.n > MAX_FULL_DP {
        return Err(Error::Unsupported(format!("uncapped DP limited to n <= {MAX_FULL_DP}, got {}", f.n)));
    }
    if let VariationFunction::Power { p } = *phi {
        return Ok(dp(&f.values, phi, f.n).0.powf(1.0 / p));
    }
    let v = |r: f64| {
        let scaled: Vec<f64> = f.values.iter().map(|x| x / r).collect();
        dp(&scaled, phi, f.n).0
    };
    let range = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - f.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if range == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (range, range);
    while v(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    while v(lo) <= 1.0 {
        hi = lo;
        lo *= 0.5;
    }
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if v(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JmReport {
    /// Ensemble mean of the grid p-variation norm.
    pub mean_norm: f64,
    pub w_p: MetricVariation,
    /// mean_norm / (W_p^{1/p}(1 + W_p^{1/2})); None when W_p is not finite.
    pub ratio: Option<f64>,
}

/// Empirical constant in E‖X‖_p ≤ K·W_p^{1/p}(1 + W_p^{1/2}), W_p = V(Ψ, d),
/// Ψ(x) = x^p (log*₂(1/(x∧1)))^{p/2}.
pub fn jm_bound_report(ensemble: &[SamplePath], p: f64, d: &PseudoMetric) -> Result<JmReport> {
    if ensemble.is_empty() {
        return Err(Error::Argument("empty ensemble".into()));
    }
    let power = VariationFunction::power(p)?;
    let psi = VariationFunction::pllp(p, 2.0)?;
    let mut total = 0.0;
    for f in ensemble {
        total += phi_norm(f, &power)?;
    }
    let mean_norm = total / ensemble.len() as f64;
    let w_p = variation_of_metric(&psi, d);
    let ratio = match w_p {
        MetricVariation::Finite(w) => {
            let denom = w.powf(1.0 / p) * (1.0 + w.sqrt());
            Some(if mean_norm == 0.0 { 0.0 } else { mean_norm / denom })
        }
        _ => None,
    };
    Ok(JmReport { mean_norm, w_p, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_fbm, PathMeta};
    use proptest::prelude::*;

    fn path(values: Vec<f64>) -> SamplePath {
        SamplePath { n: values.len() - 1, values, meta: PathMeta::default() }
    }

    /// Every partition of the grid, sums taken left to right.
    fn brute(values: &[f64], phi: &VariationFunction, w: usize) -> (f64, Vec<usize>) {
        let n = values.len() - 1;
        let mut best = (f64::NEG_INFINITY, vec![]);
        for mask in 0u32..(1 << (n - 1)) {
            let mut pi = vec![0];
            pi.extend((1..n).filter(|k| mask & (1 << (k - 1)) != 0));
            pi.push(n);
            if pi.windows(2).any(|x| x[1] - x[0] > w) {
                continue;
            }
            let v = pi.windows(2).fold(0.0, |a, x| a + phi.eval((values[x[1]] - values[x[0]]).abs()));
            if v > best.0 || (v == best.0 && pi < best.1) {
                best = (v, pi);
            }
        }
        best
    }

    fn any_phi() -> impl Strategy<Value = VariationFunction> {
        prop_oneof![
            (0.5f64..4.0).prop_map(|p| VariationFunction::power(p).unwrap()),
            (1.0f64..3.0, 1.0f64..2.0).prop_map(|(p, a)| VariationFunction::pllm(p, a).unwrap()),
            (1.0f64..3.0, 2.0f64..4.0).prop_map(|(p, a)| VariationFunction::pllp(p, a).unwrap()),
            (0.3f64..2.0).prop_map(|b| VariationFunction::exp_beta(b).unwrap()),
            (0.5f64..2.0, 0.5f64..2.0).prop_map(|(c, r)| VariationFunction::exp_log_pow(c, r).unwrap()),
            (1u32..3, 0.55f64..0.95).prop_map(|(m, h)| VariationFunction::hermite(m, h).unwrap()),
        ]
    }

    #[test]
    fn v_phi_examples() {
        let p2 = VariationFunction::power(2.0).unwrap();
        assert_eq!(v_phi(&path(vec![0.0, 1.0, 0.0]), &[0, 1, 2], &p2).unwrap(), 2.0);
        assert_eq!(v_phi(&path(vec![0.0; 5]), &[0, 2, 4], &p2).unwrap(), 0.0);
        let p1 = VariationFunction::power(1.0).unwrap();
        let mono = path(vec![0.0, 0.25, 0.5, 1.0, 1.5]);
        assert_eq!(v_phi(&mono, &[0, 1, 4], &p1).unwrap(), 1.5);
        assert_eq!(v_phi(&mono, &[0, 2, 3, 4], &p1).unwrap(), 1.5);
        assert!(v_phi(&mono, &[0, 2, 2, 4], &p1).is_err());
        assert!(v_phi(&mono, &[1, 4], &p1).is_err());
        assert!(v_phi(&mono, &[0, 3], &p1).is_err());
    }

    #[test]
    fn zigzag_and_monotone() {
        let p2 = VariationFunction::power(2.0).unwrap();
        let z = path(vec![0.0, 1.0, 0.0, 1.0, 0.0]);
        let r = sup_variation(&z, &p2, None).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.partition, vec![0, 1, 2, 3, 4]);
        assert_eq!(r.mesh, 0.25);
        let mono = path((0..=10).map(|k| (k as f64 / 10.0).powi(2)).collect());
        let r = sup_variation(&mono, &p2, None).unwrap();
        assert_eq!(r.partition, vec![0, 10]);
        assert_eq!(r.value, 1.0);
        // all partitions tie for Power(1): the full one is lexicographically smallest
        let mono = path((0..=10).map(|k| (k * k) as f64).collect());
        let r = sup_variation(&mono, &VariationFunction::power(1.0).unwrap(), None).unwrap();
        assert_eq!(r.partition, (0..=10).collect::<Vec<_>>());
    }

    #[test]
    fn mesh_cap_errors_and_limits() {
        let p2 = VariationFunction::power(2.0).unwrap();
        let line = path((0..=12).map(|k| k as f64 / 12.0).collect());
        assert!(sup_variation(&line, &p2, Some(0.01)).is_err());
        let rows = limiting_variation(&line, &p2, &[1.0, 0.5, 0.25, 1.0 / 12.0]).unwrap();
        let mut prev = f64::INFINITY;
        for (d, r) in &rows {
            assert!(r.mesh <= d + 1e-15);
            assert!(r.value <= prev);
            assert_eq!(r.value, brute(&line.values, &p2, (d * 12.0 + 1e-9) as usize).0);
            prev = r.value;
        }
        assert!(limiting_variation(&line, &p2, &[0.25, 0.5]).is_err());
        let p1 = VariationFunction::power(1.0).unwrap();
        for (_, r) in limiting_variation(&line, &p1, &[0.5, 0.1]).unwrap() {
            assert!((r.value - 1.0).abs() < 1e-12);
        }
        let zero = path(vec![0.0; 13]);
        for (_, r) in limiting_variation(&zero, &p2, &[0.5, 0.1]).unwrap() {
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn phi_norm_examples() {
        let z = path(vec![0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(phi_norm(&z, &VariationFunction::power(2.0).unwrap()).unwrap(), 2.0);
        let mono = path(vec![0.0, 0.3, 0.7, 1.0]);
        for p in [1.0, 2.0, 3.5] {
            assert!((phi_norm(&mono, &VariationFunction::power(p).unwrap()).unwrap() - 1.0).abs() < 1e-14);
        }
        let f = simulate_fbm(0.6, 64, 3).unwrap();
        let scaled = path(f.values.iter().map(|x| 2.5 * x).collect());
        let p3 = VariationFunction::power(3.0).unwrap();
        let (a, b) = (phi_norm(&f, &p3).unwrap(), phi_norm(&scaled, &p3).unwrap());
        assert!((b / a - 2.5).abs() < 1e-12);
        assert!(phi_norm(&f, &VariationFunction::exp_beta(1.0).unwrap()).is_err());
        let h = VariationFunction::hermite(1, 0.75).unwrap();
        let r = phi_norm(&f, &h).unwrap();
        let scaled: Vec<f64> = f.values.iter().map(|x| x / r).collect();
        let v = dp(&scaled, &h, f.n).0;
        assert!((1.0 - 1e-4..=1.0).contains(&v), "{v}");
    }

    #[test]
    fn jm_zero_process() {
        let zero = vec![path(vec![0.0; 33]); 3];
        let rep = jm_bound_report(&zero, 3.0, &PseudoMetric::holder(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(rep.mean_norm, 0.0);
        assert_eq!(rep.ratio, Some(0.0));
    }

    #[test]
    fn grid_refinement_monotone() {
        let f = simulate_fbm(0.6, 256, 11).unwrap();
        let sub = path(f.values.iter().step_by(4).cloned().collect());
        let p2 = VariationFunction::power(2.0).unwrap();
        assert!(phi_norm(&sub, &p2).unwrap() <= phi_norm(&f, &p2).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

        #[test]
        fn dp_matches_enumeration(vals in prop::collection::vec(-2.0f64..2.0, 2..12), phi in any_phi(), cap in 1usize..12) {
            let mut values = vec![0.0];
            values.extend(vals);
            let n = values.len() - 1;
            let w = cap.min(n);
            let f = path(values.clone());
            let r = sup_variation(&f, &phi, Some(w as f64 / n as f64)).unwrap();
            let (bv, bp) = brute(&values, &phi, w);
            prop_assert_eq!(r.value, bv);
            prop_assert_eq!(r.value, v_phi(&f, &r.partition, &phi).unwrap());
            prop_assert_eq!(r.partition, bp);
        }

        #[test]
        fn mesh_monotone(vals in prop::collection::vec(-1.0f64..1.0, 16), phi in any_phi()) {
            let mut values = vec![0.0];
            values.extend(vals);
            let f = path(values);
            let mut prev = f64::INFINITY;
            for w in (1..=16).rev() {
                let v = sup_variation_value(&f, &phi, Some(w as f64 / 16.0)).unwrap();
                prop_assert!(v <= prev);
                prev = v;
            }
        }
    }
}
