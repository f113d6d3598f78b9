//! Two-sample Mann-Whitney U test.

use statrs::function::erf::erfc;

/// Samples at least this large on either side use the normal approximation.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// `min(U_a, U_b)`.
    pub u: f64,
    /// U statistic of the first sample.
    pub u_a: f64,
    /// Two-tailed p-value.
    pub p: f64,
    /// Whether `p` comes from exact enumeration.
    pub exact: bool,
}

impl MannWhitney {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// Midranks (1-based) of the pooled sample, and the tie group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Mann-Whitney U test with midranks for ties.
///
/// When both samples have fewer than [`EXACT_LIMIT`] values the p-value is
/// exact: the null distribution of the first sample's rank sum is counted
/// over all equally likely splits of the pooled midranks. Otherwise it uses
/// the normal approximation with tie-corrected variance and a continuity
/// correction of 0.5.
///
/// # Panics
///
/// If either sample is empty.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be non-empty");
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;
    let u = u_a.min(u_b);

    if na < EXACT_LIMIT && nb < EXACT_LIMIT {
        let p = exact_p(&ranks, na, rank_sum_a);
        return MannWhitney { u, u_a, p, exact: true };
    }

    let n = (na + nb) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let mean = (na * nb) as f64 / 2.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    MannWhitney { u, u_a, p, exact: false }
}

/// Two-tailed exact p-value of the rank sum `observed` of the first `na`
/// entries of `ranks`.
fn exact_p(ranks: &[f64], na: usize, observed: f64) -> f64 {
    // midranks are multiples of 0.5, so doubled ranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0.0f64; max_sum + 1]; na + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let (prev, cur) = (&lower[k - 1], &mut upper[0]);
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &counts[na];
    let total: f64 = dist.iter().sum();
    let obs = (observed * 2.0).round() as usize;
    let lower: f64 = dist[..=obs].iter().sum();
    let upper: f64 = dist[obs..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}
