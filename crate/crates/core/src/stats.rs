//! Rank-based statistics used to compare indices against clinical scales.
//!
//! All p-values are two-sided.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{GaitError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: String,
}

/// Average (mid) ranks, 1-based.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Sizes of each group of tied values.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        out.push(j - i + 1);
        i = j + 1;
    }
    out
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(GaitError::arg(format!("{name} contains non-finite values")));
    }
    Ok(())
}

/// Kendall's tau-b.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(GaitError::arg(format!(
            "kendall_tau length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(GaitError::arg("kendall_tau needs at least 2 pairs"));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let n = x.len();
    let mut concordant_minus_discordant: i64 = 0;
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]).expect("finite");
            let dy = y[i].partial_cmp(&y[j]).expect("finite");
            use std::cmp::Ordering::Equal;
            if dx == Equal {
                ties_x += 1;
            }
            if dy == Equal {
                ties_y += 1;
            }
            if dx != Equal && dy != Equal {
                concordant_minus_discordant += if dx == dy { 1 } else { -1 };
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    if ties_x == pairs || ties_y == pairs {
        return Err(GaitError::degenerate("kendall_tau: a vector is constant"));
    }
    let denom = (((pairs - ties_x) as f64) * ((pairs - ties_y) as f64)).sqrt();
    Ok(concordant_minus_discordant as f64 / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WilcoxonMethod {
    /// Exact null distribution when the combined size is at most 20 and there
    /// are no ties; normal approximation otherwise.
    #[default]
    Auto,
    Exact,
    Normal,
}

/// Largest combined sample size for which `Auto` uses the exact distribution.
pub const EXACT_WILCOXON_MAX_N: usize = 20;

pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], continuity: bool) -> Result<RankTestResult> {
    wilcoxon_rank_sum_with(a, b, continuity, WilcoxonMethod::Auto)
}

/// Two-sample Wilcoxon rank-sum test. The statistic is
/// `W = (rank sum of a) - n_a (n_a + 1) / 2`.
pub fn wilcoxon_rank_sum_with(
    a: &[f64],
    b: &[f64],
    continuity: bool,
    method: WilcoxonMethod,
) -> Result<RankTestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(GaitError::arg("wilcoxon_rank_sum: both groups must be non-empty"));
    }
    check_finite("a", a)?;
    check_finite("b", b)?;
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let r = ranks(&pooled);
    let rank_sum_a: f64 = r[..na].iter().sum();
    let w = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let ties = tie_sizes(&pooled);
    let has_ties = ties.iter().any(|&t| t > 1);

    let exact = match method {
        WilcoxonMethod::Exact if has_ties => {
            return Err(GaitError::arg("exact Wilcoxon distribution requires untied data"))
        }
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
        WilcoxonMethod::Auto => !has_ties && na + nb <= EXACT_WILCOXON_MAX_N,
    };

    if exact {
        let counts = rank_sum_distribution(na, nb);
        let total: f64 = counts.iter().sum();
        // w is an integer here since there are no ties
        let u = w.round() as usize;
        let lower: f64 = counts[..=u].iter().sum::<f64>() / total;
        let upper: f64 = counts[u..].iter().sum::<f64>() / total;
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Ok(RankTestResult {
            statistic: w,
            p_value: p,
            method: "Wilcoxon rank sum exact test".into(),
        });
    }

    let n = (na + nb) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    if !(var > 0.0) {
        return Err(GaitError::degenerate(
            "wilcoxon_rank_sum: all observations are tied",
        ));
    }
    let d = w - (na * nb) as f64 / 2.0;
    let correction = if continuity { 0.5 * d.signum() } else { 0.0 };
    let correction = if d == 0.0 { 0.0 } else { correction };
    let z = (d - correction) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * normal.cdf(-z.abs())).min(1.0);
    Ok(RankTestResult {
        statistic: w,
        p_value: p,
        method: if continuity {
            "Wilcoxon rank sum test with continuity correction".into()
        } else {
            "Wilcoxon rank sum test".into()
        },
    })
}

/// Number of ways each value `u = 0..=na*nb` of the Mann-Whitney statistic
/// arises among the C(na+nb, na) equally likely rank assignments.
fn rank_sum_distribution(na: usize, nb: usize) -> Vec<f64> {
    // counts[m][n][u] via f(m, n, u) = f(m-1, n, u-n) + f(m, n-1, u)
    let max_u = na * nb;
    let mut table = vec![vec![vec![0.0f64; max_u + 1]; nb + 1]; na + 1];
    for m in 0..=na {
        for n in 0..=nb {
            if m == 0 || n == 0 {
                table[m][n][0] = 1.0;
                continue;
            }
            for u in 0..=m * n {
                let with_top_in_a = if u >= n { table[m - 1][n][u - n] } else { 0.0 };
                let with_top_in_b = table[m][n - 1][u];
                table[m][n][u] = with_top_in_a + with_top_in_b;
            }
        }
    }
    std::mem::take(&mut table[na][nb])
}

/// Kruskal-Wallis H with tie correction and chi-squared p-value on
/// `groups - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<RankTestResult> {
    if groups.len() < 2 {
        return Err(GaitError::arg("kruskal_wallis needs at least 2 groups"));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(GaitError::arg("kruskal_wallis: every group must be non-empty"));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    check_finite("groups", &pooled)?;
    let r = ranks(&pooled);
    let n = pooled.len() as f64;
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let rs: f64 = r[offset..offset + g.len()].iter().sum();
        sum += rs * rs / g.len() as f64;
        offset += g.len();
    }
    let h_raw = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    let tie_sum: f64 = tie_sizes(&pooled).iter().map(|&t| (t * t * t - t) as f64).sum();
    let correction = 1.0 - tie_sum / (n * n * n - n);
    if !(correction > 0.0) {
        return Err(GaitError::degenerate("kruskal_wallis: all observations are tied"));
    }
    let h = (h_raw / correction).max(0.0);
    let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive dof");
    Ok(RankTestResult {
        statistic: h,
        p_value: chi.sf(h).clamp(0.0, 1.0),
        method: "Kruskal-Wallis rank sum test (chi-squared approximation)".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearTrend {
    pub slope: f64,
    pub intercept: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

/// Ordinary least squares `y ~ x` with a two-sided t-test on the slope.
pub fn linear_trend(x: &[f64], y: &[f64]) -> Result<LinearTrend> {
    if x.len() != y.len() {
        return Err(GaitError::arg("linear_trend: x and y lengths differ"));
    }
    if x.len() < 3 {
        return Err(GaitError::arg("linear_trend needs at least 3 points"));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(GaitError::degenerate("linear_trend: x is constant"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = n - 2.0;
    let se = (sse / df / sxx).sqrt();
    let (t_statistic, p_value) = if se > 0.0 {
        let t = slope / se;
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (t, (2.0 * dist.cdf(-t.abs())).min(1.0))
    } else if slope != 0.0 {
        (f64::INFINITY.copysign(slope), 0.0)
    } else {
        (0.0, 1.0)
    };
    Ok(LinearTrend {
        slope,
        intercept,
        t_statistic,
        p_value,
    })
}
