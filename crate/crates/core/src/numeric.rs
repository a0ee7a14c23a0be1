//! Small floating-point helpers shared by the series and bound code.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(k!)`, exact summation of logs for small k and Stirling series beyond.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k <= 256 {
        return compensated_sum((2..=k).map(|j| (j as f64).ln()));
    }
    let x = (k + 1) as f64;
    // ln Gamma(x) Stirling series, error < 1e-16 relative for x > 256
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Accumulates `sum exp(x_i)` in log space with compensated mantissa sums.
#[derive(Debug, Clone)]
pub struct LogSum {
    shift: f64,
    acc: CompensatedSum,
}

impl Default for LogSum {
    fn default() -> Self {
        Self { shift: f64::NEG_INFINITY, acc: CompensatedSum::new() }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_ln(&mut self, ln_x: f64) {
        if ln_x == f64::NEG_INFINITY {
            return;
        }
        if self.shift == f64::NEG_INFINITY {
            self.shift = ln_x;
            self.acc = CompensatedSum::new();
            self.acc.add(1.0);
            return;
        }
        if ln_x > self.shift {
            let scale = (self.shift - ln_x).exp();
            let old = self.acc.value() * scale;
            self.acc = CompensatedSum::new();
            self.acc.add(old);
            self.shift = ln_x;
            self.acc.add(1.0);
        } else {
            self.acc.add((ln_x - self.shift).exp());
        }
    }

    /// Natural log of the accumulated sum (`-inf` when empty).
    pub fn ln_value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.shift + self.acc.value().ln()
        }
    }
}

/// Standard normal upper tail `P(Z >= z)`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}
