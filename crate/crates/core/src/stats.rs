//! One-sided two-sample tests: Welch's t-test and Mann-Whitney U.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Largest combined sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "t")]
    TTest,
    #[serde(rename = "mann-whitney")]
    MannWhitney,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TTest => "t",
            Method::MannWhitney => "mann-whitney",
        }
    }
}

/// Direction of the one-sided alternative hypothesis about sample `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    pub alternative: Alternative,
}

fn check_sample(name: &str, x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::invalid(format!("sample {name} needs at least two values, got {}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("sample {name} contains a non-finite value")));
    }
    Ok(())
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn t_upper_tail(t: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(format!("t distribution: {e}")))?;
    Ok(dist.sf(t))
}

/// Welch's unequal-variance t-test.
pub fn t_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    let (statistic, upper) = if se2 == 0.0 {
        // Degenerate limit: the sign of the mean difference decides.
        match ma.partial_cmp(&mb).expect("finite means") {
            std::cmp::Ordering::Equal => (0.0, 0.5),
            std::cmp::Ordering::Greater => (f64::INFINITY, 0.0),
            std::cmp::Ordering::Less => (f64::NEG_INFINITY, 1.0),
        }
    } else {
        let t = (ma - mb) / se2.sqrt();
        let df = se2 * se2
            / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
        (t, t_upper_tail(t, df)?)
    };
    let p_value = match alternative {
        Alternative::Greater => upper,
        Alternative::Less => 1.0 - upper,
    };
    Ok(TestResult {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        method: Method::TTest,
        alternative,
    })
}

/// Midranks (1-based) of the pooled sample, plus the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// `U_a`: the number of pairs with `a_i > b_j`, ties counting one half.
fn u_statistic(a: &[f64], b: &[f64]) -> (f64, Vec<usize>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let m = a.len() as f64;
    let ra: f64 = ranks[..a.len()].iter().sum();
    (ra - m * (m + 1.0) / 2.0, ties)
}

/// Null frequencies of `U` for sample sizes `m` and `n`; entry `u` counts the
/// rank splits giving `U = u`, out of `C(m+n, m)` in total.
pub fn u_null_counts(m: usize, n: usize) -> Vec<u128> {
    // table[j] holds the distribution for sizes (i, j) during row i.
    let mut table: Vec<Vec<u128>> = (0..=n).map(|_| vec![1]).collect();
    for i in 1..=m {
        let mut row: Vec<Vec<u128>> = Vec::with_capacity(n + 1);
        row.push(vec![1]);
        for j in 1..=n {
            let mut dist = vec![0u128; i * j + 1];
            // Largest pooled value belongs to a: it beats all j values of b.
            for (u, &c) in table[j].iter().enumerate() {
                dist[u + j] += c;
            }
            // Largest pooled value belongs to b: it adds nothing.
            for (u, &c) in row[j - 1].iter().enumerate() {
                dist[u] += c;
            }
            row.push(dist);
        }
        table = row;
    }
    table.pop().expect("n + 1 entries")
}

/// Exact one-sided p for an observed integer `U_a`.
pub fn mann_whitney_exact_p(u: usize, m: usize, n: usize, alternative: Alternative) -> f64 {
    let counts = u_null_counts(m, n);
    let total: u128 = counts.iter().sum();
    let tail: u128 = match alternative {
        Alternative::Greater => counts.iter().skip(u).sum(),
        Alternative::Less => counts.iter().take(u + 1).sum(),
    };
    tail as f64 / total as f64
}

/// Normal approximation with tie-corrected variance and continuity correction.
pub fn mann_whitney_normal_p(a: &[f64], b: &[f64], alternative: Alternative) -> Result<f64> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let (u, ties) = u_statistic(a, b);
    Ok(normal_p(u, a.len(), b.len(), &ties, alternative))
}

fn normal_p(u: f64, m: usize, n: usize, ties: &[usize], alternative: Alternative) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let big_n = mf + nf;
    let tie_sum: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = mf * nf / 12.0 * ((big_n + 1.0) - tie_sum / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let mean = mf * nf / 2.0;
    let std_normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let p = match alternative {
        Alternative::Greater => std_normal.sf((u - mean - 0.5) / sd),
        Alternative::Less => std_normal.cdf((u - mean + 0.5) / sd),
    };
    p.clamp(0.0, 1.0)
}

/// Mann-Whitney U test. Exact for small tie-free samples, normal
/// approximation otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    check_sample("a", a)?;
    check_sample("b", b)?;
    let (u, ties) = u_statistic(a, b);
    let tie_free = ties.iter().all(|&t| t == 1);
    let p_value = if tie_free && a.len() + b.len() <= EXACT_LIMIT {
        mann_whitney_exact_p(u as usize, a.len(), b.len(), alternative)
    } else {
        normal_p(u, a.len(), b.len(), &ties, alternative)
    };
    Ok(TestResult {
        statistic: u,
        p_value,
        method: Method::MannWhitney,
        alternative,
    })
}

pub fn run_test(method: Method, a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    match method {
        Method::TTest => t_test(a, b, alternative),
        Method::MannWhitney => mann_whitney_u(a, b, alternative),
    }
}
