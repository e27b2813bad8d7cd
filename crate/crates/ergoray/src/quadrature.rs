//! Gauss-Legendre quadrature and compensated summation.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
/// Newton iteration on the Legendre recurrence; exact for polynomials
/// through degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Symmetric rule: solve the upper half, mirror the rest.
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess for the i-th root of P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let dp = (n as f64) * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        // Recompute p0/p1 once more for the converged x to get dp fresh.
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n > 1 {
            (n as f64) * (x * p1 - p0) / (x * x - 1.0)
        } else {
            1.0
        };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // cos gives the roots in descending order; store ascending.
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        // The middle node is exactly zero.
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Kahan compensated accumulator. Summation order is fixed by the caller,
/// which keeps results bit-reproducible across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
