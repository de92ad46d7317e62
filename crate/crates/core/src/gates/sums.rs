//! Log-space binomial sums with compensated accumulation.

/// ln C(n, k), accumulated as a sum of logs so n up to a few hundred stays exact
/// to rounding.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum()
}

/// Sum of exp(x_i) given the x_i, evaluated as m + ln Σ exp(x_i − m) with
/// Neumaier compensation.
#[derive(Debug, Clone, Default)]
pub struct LogSum {
    terms: Vec<f64>,
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ln_term: f64) {
        self.terms.push(ln_term);
    }

    pub fn ln(&self) -> f64 {
        let m = self.terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + neumaier(self.terms.iter().map(|x| (x - m).exp())).ln()
    }
}

pub(crate) fn neumaier(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// ln Σ_{n=0}^{N} C(N, n) e^{f(n)}.
pub fn binomial_weighted_exp(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = LogSum::new();
    for k in 0..=n {
        acc.push(ln_binomial(n, k) + f(k));
    }
    acc.ln()
}
