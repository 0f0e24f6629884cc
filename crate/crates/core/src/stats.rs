//! Binomial estimates with exact (Clopper–Pearson) confidence limits.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_ur;

use crate::{Error, Result};

/// Count `k` out of `n` independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Binomial {
    pub k: u64,
    pub n: u64,
}

impl Binomial {
    pub fn new(k: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoTriggers);
        }
        if k > n {
            return Err(Error::config(format!("count {k} exceeds trial number {n}")));
        }
        Ok(Binomial { k, n })
    }

    pub fn estimate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// √(p(1−p)/n) at the point estimate.
    pub fn std_error(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// Two-sided interval with coverage `level` (e.g. 0.95).
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let tail = 0.5 * (1.0 - level);
        (self.lower(tail), self.upper(tail))
    }

    /// One-sided upper limit with coverage `level`.
    pub fn upper_bound(&self, level: f64) -> f64 {
        self.upper(1.0 - level)
    }

    /// Smallest p with P(X ≤ k | p) ≤ tail.
    fn upper(&self, tail: f64) -> f64 {
        let (k, n) = (self.k as f64, self.n as f64);
        if self.k == self.n {
            return 1.0;
        }
        if self.k == 0 {
            // (1−p)^n = tail
            return -(tail.ln() / n).exp_m1();
        }
        if self.poisson_regime() {
            // P(X ≤ k | λ) = Q(k+1, λ)
            return bisect(|l| gamma_ur(k + 1.0, l) - tail, 0.0, self.lambda_cap()) / n;
        }
        // P(X ≤ k) = 1 − I_p(k+1, n−k), decreasing in p
        bisect_log(|p| 1.0 - beta_reg(k + 1.0, n - k, p) - tail)
    }

    /// Largest p with P(X ≥ k | p) ≤ tail.
    fn lower(&self, tail: f64) -> f64 {
        let (k, n) = (self.k as f64, self.n as f64);
        if self.k == 0 {
            return 0.0;
        }
        if self.k == self.n {
            return tail.powf(1.0 / n);
        }
        if self.poisson_regime() {
            // P(X ≥ k | λ) = 1 − Q(k, λ)
            return bisect(|l| gamma_ur(k, l) - (1.0 - tail), 0.0, self.lambda_cap()) / n;
        }
        // P(X < k) = 1 − I_p(k, n−k+1), decreasing in p
        bisect_log(|p| 1.0 - beta_reg(k, n - k + 1.0, p) - (1.0 - tail))
    }

    /// For n → ∞ at small p the binomial tails become Poisson tails in λ = np.
    /// There they stay accurate, whereas the incomplete beta function loses
    /// digits to ln Γ of huge arguments.
    fn poisson_regime(&self) -> bool {
        self.n > 10_000_000 && self.k < self.n / 100_000
    }

    fn lambda_cap(&self) -> f64 {
        let k = self.k as f64;
        k + 50.0 * (k + 1.0).sqrt() + 50.0
    }
}

/// Root of a decreasing function on [lo, hi].
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Root in (0, 1] of a function decreasing in p, bisected in ln p.
fn bisect_log(f: impl Fn(f64) -> f64) -> f64 {
    bisect(|x| f(x.exp()), f64::MIN_POSITIVE.ln(), 0.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct binomial tail by summing the pmf in log space.
    fn tail_le(k: u64, n: u64, p: f64) -> f64 {
        let mut total = 0.0;
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        for j in 0..=k {
            let ln_choose = statrs::function::factorial::ln_binomial(n, j);
            total += (ln_choose + j as f64 * ln_p + (n - j) as f64 * ln_q).exp();
        }
        total
    }

    #[test]
    fn limits_hit_their_tail_probabilities() {
        for &(k, n) in &[(1, 10), (7, 40), (33, 1000), (250, 300)] {
            let b = Binomial::new(k, n).unwrap();
            let (lo, hi) = b.interval(0.95);
            assert!((tail_le(k, n, hi) - 0.025).abs() < 1e-9, "upper {k}/{n}");
            assert!((1.0 - tail_le(k - 1, n, lo) - 0.025).abs() < 1e-9, "lower {k}/{n}");
        }
    }

    #[test]
    fn zero_count_upper_bound_is_closed_form() {
        let b = Binomial::new(0, 1000).unwrap();
        let u = b.upper_bound(0.95);
        assert!(((1.0 - u).powi(1000) - 0.05).abs() < 1e-12);
        assert!((u - 3.0 / 1000.0).abs() < 1e-4, "rule of three");
        assert_eq!(b.interval(0.95).0, 0.0);
    }

    #[test]
    fn large_trial_counts_use_accurate_limits() {
        let b = Binomial::new(812, 100_000_000_000).unwrap();
        let hi = b.upper_bound(0.95);
        let lambda = hi * 1e11;
        // Poisson tail at λ must be 5 %
        assert!((gamma_ur(813.0, lambda) - 0.05).abs() < 1e-9);
        assert!(hi > b.estimate());
        let (lo, hi2) = b.interval(0.95);
        assert!(lo < b.estimate() && b.estimate() < hi2);
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(matches!(Binomial::new(0, 0), Err(Error::NoTriggers)));
        assert!(Binomial::new(5, 4).is_err());
    }
}
