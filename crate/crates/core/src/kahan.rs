//! Compensated accumulation with a fixed evaluation order.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for v in iter {
            k.add(v);
        }
        k
    }
}

/// Sums `(norm², weight)` samples of `f`, smallest contributions first:
/// samples are ordered by descending squared norm (ties by insertion order).
pub fn sum_sorted<F: Fn(f64) -> f64>(samples: &mut [(f64, f64)], f: F) -> f64 {
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    samples
        .iter()
        .map(|&(n2, w)| w * f(n2))
        .collect::<KahanSum>()
        .value()
}
