use crate::error::{Error, Result};
use crate::grid::Field;

/// Values a Bernstein polynomial can take: anything closed under convex combination.
pub trait BernsteinSample: Clone {
    /// `Σ_k w_k s_k`; `samples` is non-empty and has the same length as `weights`.
    fn combine(samples: &[Self], weights: &[f64]) -> Self;

    /// Difference `a − b`.
    fn difference(a: &Self, b: &Self) -> Self;

    fn scale(&self, factor: f64) -> Self;

    fn validate(samples: &[Self]) -> Result<()>;
}

impl BernsteinSample for f64 {
    fn combine(samples: &[Self], weights: &[f64]) -> Self {
        samples.iter().zip(weights).map(|(s, w)| s * w).sum()
    }

    fn difference(a: &Self, b: &Self) -> Self {
        a - b
    }

    fn scale(&self, factor: f64) -> Self {
        self * factor
    }

    fn validate(samples: &[Self]) -> Result<()> {
        match samples.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

impl BernsteinSample for Field {
    fn combine(samples: &[Self], weights: &[f64]) -> Self {
        let mut out = vec![0.0; samples[0].len()];
        for (s, &w) in samples.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(s.values()) {
                *o += w * v;
            }
        }
        Field::from_raw(*samples[0].grid(), out)
    }

    fn difference(a: &Self, b: &Self) -> Self {
        let values = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect();
        Field::from_raw(*a.grid(), values)
    }

    fn scale(&self, factor: f64) -> Self {
        self.scaled(factor)
    }

    fn validate(samples: &[Self]) -> Result<()> {
        let grid = *samples[0].grid();
        for s in samples {
            grid.ensure_same(s.grid())?;
            if let Some(index) = s.first_non_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(())
    }
}

/// `B_n(u)(t) = Σ_k C(n,k) t^k (1−t)^{n−k} u(k/n)` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BernsteinOperator<S> {
    samples: Vec<S>,
}

impl<S: BernsteinSample> BernsteinOperator<S> {
    /// `samples[k] = u(k/n)`, so a degree-`n` operator takes `n + 1` samples.
    pub fn new(samples: Vec<S>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Domain(format!(
                "Bernstein degree must be at least 1 ({} samples given)",
                samples.len()
            )));
        }
        S::validate(&samples)?;
        Ok(Self { samples })
    }

    /// Samples `u` at `k/n`, `k = 0..=n`.
    pub fn from_fn(degree: usize, u: impl Fn(f64) -> S) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Domain("Bernstein degree must be at least 1".into()));
        }
        Self::new((0..=degree).map(|k| u(k as f64 / degree as f64)).collect())
    }

    pub fn degree(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn eval(&self, t: f64) -> Result<S> {
        check_unit(t)?;
        let basis = bernstein_basis(self.degree(), t);
        Ok(S::combine(&self.samples, &basis))
    }

    /// `n Σ_{k<n} C(n−1,k) t^k (1−t)^{n−1−k} (u((k+1)/n) − u(k/n))`
    pub fn derivative(&self, t: f64) -> Result<S> {
        check_unit(t)?;
        let n = self.degree();
        let basis = bernstein_basis(n - 1, t);
        let upper = S::combine(&self.samples[1..], &basis);
        let lower = S::combine(&self.samples[..n], &basis);
        Ok(S::difference(&upper, &lower).scale(n as f64))
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Bernstein argument must lie in [0, 1], got {t}"
        )))
    }
}

/// Basis values `b_{n,k}(t)`, `k = 0..=n`.
///
/// Built from the ratio `b_{k+1}/b_k = (n−k)/(k+1) · t/(1−t)` in log space and
/// normalized by the sum, so neither binomials nor powers over/underflow.
pub fn bernstein_basis(n: usize, t: f64) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    if t <= 0.0 {
        b[0] = 1.0;
        return b;
    }
    if t >= 1.0 {
        b[n] = 1.0;
        return b;
    }
    let log_odds = t.ln() - (-t).ln_1p();
    let mut logs = Vec::with_capacity(n + 1);
    let mut acc = n as f64 * (-t).ln_1p();
    logs.push(acc);
    for k in 0..n {
        acc += ((n - k) as f64 / (k + 1) as f64).ln() + log_odds;
        logs.push(acc);
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (bk, l) in b.iter_mut().zip(&logs) {
        *bk = (l - peak).exp();
        total += *bk;
    }
    for bk in &mut b {
        *bk /= total;
    }
    b
}

/// `M / (2 η² n)`: the far-from-t part of the Bernstein error for `‖u‖_∞ ≤ M`.
/// For an `ℓ`-Lipschitz `u` the total sup error is at most `ℓ η` plus this.
pub fn bernstein_tail_bound(sup_norm: f64, eta: f64, degree: usize) -> Result<f64> {
    if !(sup_norm >= 0.0) {
        return Err(Error::Domain(format!(
            "sup norm must be >= 0, got {sup_norm}"
        )));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!(
            "modulus radius must lie in (0, 1], got {eta}"
        )));
    }
    if degree == 0 {
        return Err(Error::Domain("Bernstein degree must be at least 1".into()));
    }
    Ok(sup_norm / (2.0 * eta * eta * degree as f64))
}
