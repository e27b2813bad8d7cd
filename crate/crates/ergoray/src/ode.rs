//! Explicit Dormand-Prince 5(4) stepper with dense output.
//!
//! Hand-rolled rather than pulled in as a dependency: the ray integrator
//! needs stage-level domain failures (a stage can land on a degenerate
//! metric point, which must shrink the step, not abort the run), a free
//! fourth-order interpolant for event location, and PI step control, and
//! it needs them exposed step by step rather than behind a solve-to-end
//! facade.
//!
//! The right-hand side returns `None` when the state leaves the domain;
//! the stepper halves `h` and retries until the step fits or underflows.

/// Relative tolerance used by the ray integrator.
pub const RTOL_DEFAULT: f64 = 1e-10;
/// Absolute tolerance used by the ray integrator.
pub const ATOL_DEFAULT: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub(crate) struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: RTOL_DEFAULT,
            atol: ATOL_DEFAULT,
            h_max: f64::INFINITY,
            max_steps: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum OdeError {
    /// Step size shrank below resolution at `s` (repeated error rejections
    /// or a domain boundary that cannot be stepped over).
    StepUnderflow { s: f64 },
    /// Step budget exhausted at `s`.
    MaxSteps { s: f64 },
}

/// One accepted step with its quartic interpolant.
/// `eval` reproduces the endpoints exactly and is O(h^4) accurate inside.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseSegment<const N: usize> {
    pub s0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn eval(&self, s: f64) -> [f64; N] {
        let theta = (s - self.s0) / self.h;
        let th1 = 1.0 - theta;
        let mut out = [0.0; N];
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..N {
            out[i] = r1[i]
                + theta * (r2[i] + th1 * (r3[i] + theta * (r4[i] + th1 * r5[i])));
        }
        out
    }
}

// Butcher tableau (Dormand & Prince 1980).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Fifth-minus-fourth-order error weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

// PI controller constants (standard for this pair).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 5.0; // at most h/5 per rejection
const FAC_GROW_MAX: f64 = 10.0; // at most 10 h per acceptance

pub(crate) struct Stepper<const N: usize> {
    pub s: f64,
    pub y: [f64; N],
    h: f64,
    k1: Option<[f64; N]>,
    facold: f64,
    last_rejected: bool,
    opts: OdeOptions,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl<const N: usize> Stepper<N> {
    pub fn new(s0: f64, y0: [f64; N], opts: OdeOptions) -> Self {
        Stepper {
            s: s0,
            y: y0,
            h: 0.0,
            k1: None,
            facold: 1e-4,
            last_rejected: false,
            opts,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    fn scale(&self, y1: &[f64; N]) -> [f64; N] {
        let mut sc = [0.0; N];
        for i in 0..N {
            sc[i] = self.opts.atol + self.opts.rtol * self.y[i].abs().max(y1[i].abs());
        }
        sc
    }

    /// Initial step size from the scaled magnitudes of y, f, and a probed
    /// second derivative.
    fn initial_h<F>(&self, f0: &[f64; N], rhs: &mut F) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    {
        let sc = self.scale(&self.y);
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            dnf += (f0[i] / sc[i]) * (f0[i] / sc[i]);
            dny += (self.y[i] / sc[i]) * (self.y[i] / sc[i]);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.opts.h_max);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = self.y[i] + h * f0[i];
        }
        let h1 = match rhs(self.s + h, &y1) {
            Some(f1) => {
                let mut der2 = 0.0;
                for i in 0..N {
                    der2 += ((f1[i] - f0[i]) / sc[i]) * ((f1[i] - f0[i]) / sc[i]);
                }
                let der2 = der2.sqrt() / h;
                let der12 = der2.max(dnf.sqrt());
                if der12 <= 1e-15 {
                    (h * 1e-3).max(1e-6)
                } else {
                    (0.01 / der12).powf(0.2)
                }
            }
            None => h * 1e-3,
        };
        (100.0 * h).min(h1).min(self.opts.h_max)
    }

    /// Advance by one accepted step, returning its dense segment.
    pub fn step<F>(&mut self, rhs: &mut F) -> Result<DenseSegment<N>, OdeError>
    where
        F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    {
        let k1 = match self.k1 {
            Some(k) => k,
            None => {
                let k = rhs(self.s, &self.y)
                    .ok_or(OdeError::StepUnderflow { s: self.s })?;
                self.k1 = Some(k);
                k
            }
        };
        if self.h == 0.0 {
            self.h = self.initial_h(&k1, rhs);
        }

        loop {
            if self.steps_accepted + self.steps_rejected >= self.opts.max_steps {
                return Err(OdeError::MaxSteps { s: self.s });
            }
            let h = self.h.min(self.opts.h_max);
            if !(h > f64::EPSILON * 16.0 * self.s.abs().max(1.0)) {
                return Err(OdeError::StepUnderflow { s: self.s });
            }

            let stage = |coef: &[f64], ks: &[[f64; N]], y0: &[f64; N]| {
                let mut y = *y0;
                for (c, k) in coef.iter().zip(ks) {
                    for i in 0..N {
                        y[i] += h * c * k[i];
                    }
                }
                y
            };

            macro_rules! try_stage {
                ($c:expr, $y:expr) => {
                    match rhs(self.s + $c * h, &$y) {
                        Some(k) => k,
                        None => {
                            self.h = h * 0.5;
                            self.steps_rejected += 1;
                            self.last_rejected = true;
                            continue;
                        }
                    }
                };
            }

            let y2 = stage(&A2, &[k1], &self.y);
            let k2 = try_stage!(C[1], y2);
            let y3 = stage(&A3, &[k1, k2], &self.y);
            let k3 = try_stage!(C[2], y3);
            let y4 = stage(&A4, &[k1, k2, k3], &self.y);
            let k4 = try_stage!(C[3], y4);
            let y5 = stage(&A5, &[k1, k2, k3, k4], &self.y);
            let k5 = try_stage!(C[4], y5);
            let y6 = stage(&A6, &[k1, k2, k3, k4, k5], &self.y);
            let k6 = try_stage!(C[5], y6);
            let y1 = stage(&A7, &[k1, k2, k3, k4, k5, k6], &self.y);
            let k7 = try_stage!(C[6], y1);

            let ks = [k1, k2, k3, k4, k5, k6, k7];
            let sc = self.scale(&y1);
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, k) in ks.iter().enumerate() {
                    e += E[j] * k[i];
                }
                let r = h * e / sc[i];
                err += r * r;
            }
            let err = (err / N as f64).sqrt();

            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                let fac = (fac11 / self.facold.powf(BETA) / SAFETY)
                    .clamp(1.0 / FAC_GROW_MAX, FAC_SHRINK_MAX);
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;

                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let delta = y1[i] - self.y[i];
                    rcont[0][i] = self.y[i];
                    rcont[1][i] = delta;
                    rcont[2][i] = h * k1[i] - delta;
                    rcont[3][i] = delta - h * k7[i] - rcont[2][i];
                    let mut d = 0.0;
                    for (j, k) in ks.iter().enumerate() {
                        d += D[j] * k[i];
                    }
                    rcont[4][i] = h * d;
                }
                let segment = DenseSegment { s0: self.s, h, rcont };

                self.s += h;
                self.y = y1;
                self.k1 = Some(k7);
                self.h = h_new;
                self.steps_accepted += 1;
                return Ok(segment);
            } else {
                self.h = h / (fac11 / SAFETY).min(FAC_SHRINK_MAX);
                self.steps_rejected += 1;
                self.last_rejected = true;
            }
        }
    }
}
