//! Rank tests and multiplicity adjustments.

use statrs::function::erf::erfc;

use super::AnalysisError;

/// Exact p-values are used while `n·m` stays at or below this; beyond it
/// the asymptotic Kolmogorov distribution takes over.
pub const KS_EXACT_LIMIT: usize = 10_000;

fn checked(sample: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if sample.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    if let Some(i) = sample.iter().position(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite(i));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(sorted)
}

/// Walks the pooled order of two sorted samples and reports, per group of
/// tied pooled values, the counts `(i, j)` consumed so far. The KS
/// statistic only moves at these group boundaries.
fn boundary_counts(x: &[f64], y: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < x.len() || j < y.len() {
        let t = match (x.get(i), y.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        while i < x.len() && x[i] == t {
            i += 1;
        }
        while j < y.len() && y[j] == t {
            j += 1;
        }
        out.push((i, j));
    }
    out
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ (−1)^{k−1} exp(−2 k² λ²)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Exact permutation p-value by lattice-path counting. Paths from (0,0)
/// to (n,m) over the pooled order are equally likely under the null; a
/// path is "safe" if `|i·m − j·n| < d_num` at every tie-group boundary it
/// crosses. Returns `1 − safe/total`. Counting is done in f64, which holds
/// the magnitudes exactly enough for p-value purposes at `n·m ≤ 10^4`.
fn ks_exact_p(x: &[f64], y: &[f64], d_num: u64) -> f64 {
    let (n, m) = (x.len(), y.len());
    // boundary lookup by anti-diagonal i+j
    let mut is_boundary = vec![false; n + m + 1];
    is_boundary[0] = true;
    for (i, j) in boundary_counts(x, y) {
        is_boundary[i + j] = true;
    }

    let check = |i: usize, j: usize| -> bool {
        !is_boundary[i + j] || ((i * m) as i64 - (j * n) as i64).unsigned_abs() < d_num
    };

    // rolling DP over path counts that stay safe
    let mut row = vec![0.0f64; m + 1];
    row[0] = 1.0;
    for j in 1..=m {
        row[j] = if check(0, j) { row[j - 1] } else { 0.0 };
    }
    for i in 1..=n {
        row[0] = if check(i, 0) { row[0] } else { 0.0 };
        for j in 1..=m {
            row[j] = if check(i, j) { row[j] + row[j - 1] } else { 0.0 };
        }
    }
    let safe = row[m];

    let mut total = 1.0f64;
    for k in 0..n.min(m) {
        total *= (n + m - k) as f64 / (k + 1) as f64;
    }
    (1.0 - safe / total).clamp(0.0, 1.0)
}

/// Two-sample two-sided Kolmogorov-Smirnov test. `D` is the supremum of
/// the ECDF difference (ties handled by evaluating at distinct pooled
/// values only). The p-value is an exact permutation probability while
/// `n·m ≤` [`KS_EXACT_LIMIT`], otherwise the asymptotic Kolmogorov
/// distribution with the usual small-sample correction.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<(f64, f64), AnalysisError> {
    ks_two_sample_with_limit(x, y, KS_EXACT_LIMIT)
}

/// [`ks_two_sample`] with an explicit exact-enumeration cutoff.
pub fn ks_two_sample_with_limit(
    x: &[f64],
    y: &[f64],
    exact_limit: usize,
) -> Result<(f64, f64), AnalysisError> {
    let xs = checked(x)?;
    let ys = checked(y)?;
    let (n, m) = (xs.len(), ys.len());

    let d_num = boundary_counts(&xs, &ys)
        .iter()
        .map(|&(i, j)| ((i * m) as i64 - (j * n) as i64).unsigned_abs())
        .max()
        .expect("at least one boundary");
    let d = d_num as f64 / (n * m) as f64;

    let p = if n * m <= exact_limit {
        ks_exact_p(&xs, &ys, d_num)
    } else {
        let en = ((n * m) as f64 / (n + m) as f64).sqrt();
        kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
    };
    Ok((d, p))
}

fn order_by_p(p: &[f64]) -> Result<Vec<usize>, AnalysisError> {
    if p.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(AnalysisError::NonFinite(i));
    }
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("finite"));
    Ok(order)
}

/// Benjamini-Hochberg step-up adjustment, returned in the input order.
pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let order = order_by_p(p)?;
    let m = p.len();
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        running = running.min(p[idx] * m as f64 / (rank + 1) as f64);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}

/// Holm step-down adjustment, returned in the input order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let order = order_by_p(p)?;
    let m = p.len();
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        running = running.max(p[idx] * (m - rank) as f64);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}

/// Kendall's tau-b with tie correction. The p-value is a two-sided normal
/// approximation on the concordance count with tie-adjusted variance; no
/// exact small-sample enumeration is attempted.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(AnalysisError::TooFewObservations { need: 2, got: n });
    }
    if let Some(i) = x
        .iter()
        .chain(y.iter())
        .position(|v| !v.is_finite())
    {
        return Err(AnalysisError::NonFinite(i % n));
    }

    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for a in 0..n {
        for b in (a + 1)..n {
            let dx = x[a].partial_cmp(&x[b]).expect("finite");
            let dy = y[a].partial_cmp(&y[b]).expect("finite");
            use std::cmp::Ordering::Equal;
            if dx == Equal || dy == Equal {
                continue;
            }
            if dx == dy {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }

    let tie_groups = |v: &[f64]| -> Vec<f64> {
        let mut sorted = v.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut groups = Vec::new();
        let mut run = 1.0;
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                run += 1.0;
            } else {
                if run > 1.0 {
                    groups.push(run);
                }
                run = 1.0;
            }
        }
        if run > 1.0 {
            groups.push(run);
        }
        groups
    };
    let tx = tie_groups(x);
    let ty = tie_groups(y);
    let nf = n as f64;
    let n0 = nf * (nf - 1.0) / 2.0;
    let n1: f64 = tx.iter().map(|t| t * (t - 1.0) / 2.0).sum();
    let n2: f64 = ty.iter().map(|t| t * (t - 1.0) / 2.0).sum();
    let denominator = ((n0 - n1) * (n0 - n2)).sqrt();
    if denominator == 0.0 {
        return Err(AnalysisError::Degenerate);
    }
    let s = (concordant - discordant) as f64;
    let tau = (s / denominator).clamp(-1.0, 1.0);

    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt: f64 = tx.iter().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum();
    let vu: f64 = ty.iter().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum();
    let v1x: f64 = tx.iter().map(|t| t * (t - 1.0)).sum();
    let v1y: f64 = ty.iter().map(|t| t * (t - 1.0)).sum();
    let v2x: f64 = tx.iter().map(|t| t * (t - 1.0) * (t - 2.0)).sum();
    let v2y: f64 = ty.iter().map(|t| t * (t - 1.0) * (t - 2.0)).sum();
    let mut var = (v0 - vt - vu) / 18.0 + v1x * v1y / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += v2x * v2y / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    let p = if var <= 0.0 {
        1.0
    } else {
        erfc(s.abs() / var.sqrt() / std::f64::consts::SQRT_2)
    };
    Ok((tau, p.clamp(0.0, 1.0)))
}
