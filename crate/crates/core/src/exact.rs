//! Correctly rounded summation.
//!
//! Masses are accumulated as non-overlapping partial sums (Shewchuk's
//! algorithm, the one behind Python's `math.fsum`), so a sum of cell values
//! rounds once, at the end, and does not depend on the order of addition.
//! That is what makes "the plateaus carry the same mass as the cells" an
//! exact equality rather than an approximate one.

/// An exact running sum of finite doubles.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Adds the exact product `a * b` (error-free via fused multiply-add).
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        if e != 0.0 {
            self.add(e);
        }
    }

    /// Adds another exact sum without rounding.
    pub fn merge(&mut self, other: &ExactSum) {
        for &x in &other.partials {
            self.add(x);
        }
    }

    /// The correctly rounded (round-half-even) value of the sum.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Fix up a half-way case that the top-down sum rounded the wrong way.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Correctly rounded sum of a slice.
pub fn exact_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<ExactSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_is_exact() {
        assert_eq!(exact_sum(&[1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum(&[0.1; 10]), 1.0);
    }

    #[test]
    fn order_independent() {
        let xs: Vec<f64> = (1..200).map(|k| 1.0 / k as f64).collect();
        let mut ys = xs.clone();
        ys.reverse();
        assert_eq!(exact_sum(&xs).to_bits(), exact_sum(&ys).to_bits());
    }

    #[test]
    fn product_is_exact() {
        let mut s = ExactSum::new();
        s.add_product(0.1, 3.0);
        s.add(-0.3);
        // 0.1*3 in reals minus the double nearest 0.3
        let expect = 0.1f64.mul_add(3.0, -0.3);
        assert_eq!(s.value(), expect);
    }
}
