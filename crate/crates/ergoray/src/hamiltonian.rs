//! The principal symbol and its derived quantities.
//!
//! Both backends share one quadratic form in the covector
//! `xi = (xi0, xi_rho, xi_phi, xi_z)`:
//!
//! ```text
//! H = alpha xi0^2 + 2 xi0 (u . xi) + (w . xi)^2
//!     - xi_rho^2 - xi_phi^2/rho^2 - xi_z^2
//! ```
//!
//! with backend coefficients `(alpha, u, w)` supplied by the metric jet.
//! Null rays live on `H = 0`. As a quadratic in `xi0` the symbol factors
//! exactly as `H = alpha (xi0 - lambda_plus)(xi0 - lambda_minus)`; the two
//! roots are the branch frequencies. Outside the ergoregion
//! `lambda_plus > 0 > lambda_minus`; inside, both roots can share a sign,
//! which is what makes negative-energy rays possible.

use crate::metric::{Guard, MetricError, MetricModel, SpatialPoint, SymbolJet};
use serde::{Deserialize, Serialize};

/// Covector at a point, in the coordinate basis `(dx0, drho, dphi, dz)`.
/// `xi_phi` is the plain `dphi` component (angular momentum), not rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    pub xi0: f64,
    pub xi_rho: f64,
    pub xi_phi: f64,
    pub xi_z: f64,
}

impl Covector {
    pub fn new(xi0: f64, xi_rho: f64, xi_phi: f64, xi_z: f64) -> Self {
        Covector { xi0, xi_rho, xi_phi, xi_z }
    }

    /// Spatial covector with the frequency slot left at zero.
    pub fn spatial(xi_rho: f64, xi_phi: f64, xi_z: f64) -> Self {
        Covector { xi0: 0.0, xi_rho, xi_phi, xi_z }
    }

    pub fn with_xi0(self, xi0: f64) -> Self {
        Covector { xi0, ..self }
    }
}

/// Dispersion branch: the larger (`Plus`) or smaller (`Minus`) frequency
/// root at fixed spatial covector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// The two frequency roots at a fixed spatial covector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRoots {
    pub plus: f64,
    pub minus: f64,
}

impl LambdaRoots {
    pub fn branch(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.plus,
            Branch::Minus => self.minus,
        }
    }
}

/// Gradient of the symbol. `d_phi` and `d_x0` vanish identically
/// (stationarity and axisymmetry) and are not carried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGradient {
    pub d_xi0: f64,
    pub d_xi_rho: f64,
    pub d_xi_phi: f64,
    pub d_xi_z: f64,
    pub d_rho: f64,
    pub d_z: f64,
}

#[inline]
fn dot(v: &[f64; 3], xi: &Covector) -> f64 {
    v[0] * xi.xi_rho + v[1] * xi.xi_phi + v[2] * xi.xi_z
}

/// Squared norm of the spatial covector in the flat background,
/// `xi_rho^2 + xi_phi^2/rho^2 + xi_z^2`.
#[inline]
fn spatial_q(rho: f64, xi: &Covector) -> f64 {
    let ang = xi.xi_phi / rho;
    xi.xi_rho * xi.xi_rho + ang * ang + xi.xi_z * xi.xi_z
}

pub(crate) fn eval_h_jet(jet: &SymbolJet, xi: &Covector) -> f64 {
    let u_xi = dot(&jet.u, xi);
    let w_xi = dot(&jet.w, xi);
    jet.alpha * xi.xi0 * xi.xi0 + 2.0 * xi.xi0 * u_xi + w_xi * w_xi - spatial_q(jet.rho, xi)
}

pub(crate) fn delta1_jet(jet: &SymbolJet, xi: &Covector) -> f64 {
    let u_xi = dot(&jet.u, xi);
    let w_xi = dot(&jet.w, xi);
    u_xi * u_xi - jet.alpha * (w_xi * w_xi - spatial_q(jet.rho, xi))
}

pub(crate) fn lambda_roots_jet(jet: &SymbolJet, xi: &Covector) -> LambdaRoots {
    let u_xi = dot(&jet.u, xi);
    let root = delta1_jet(jet, xi).max(0.0).sqrt();
    LambdaRoots {
        plus: (-u_xi + root) / jet.alpha,
        minus: (-u_xi - root) / jet.alpha,
    }
}

pub(crate) fn grad_h_jet(jet: &SymbolJet, xi: &Covector) -> HGradient {
    let u_xi = dot(&jet.u, xi);
    let w_xi = dot(&jet.w, xi);
    let rho = jet.rho;
    HGradient {
        d_xi0: 2.0 * jet.alpha * xi.xi0 + 2.0 * u_xi,
        d_xi_rho: 2.0 * xi.xi0 * jet.u[0] + 2.0 * w_xi * jet.w[0] - 2.0 * xi.xi_rho,
        d_xi_phi: 2.0 * xi.xi0 * jet.u[1] + 2.0 * w_xi * jet.w[1]
            - 2.0 * xi.xi_phi / (rho * rho),
        d_xi_z: 2.0 * xi.xi0 * jet.u[2] + 2.0 * w_xi * jet.w[2] - 2.0 * xi.xi_z,
        d_rho: jet.d_rho_alpha * xi.xi0 * xi.xi0
            + 2.0 * xi.xi0 * dot(&jet.d_rho_u, xi)
            + 2.0 * w_xi * dot(&jet.d_rho_w, xi)
            + 2.0 * xi.xi_phi * xi.xi_phi / (rho * rho * rho),
        d_z: jet.d_z_alpha * xi.xi0 * xi.xi0
            + 2.0 * xi.xi0 * dot(&jet.d_z_u, xi)
            + 2.0 * w_xi * dot(&jet.d_z_w, xi),
    }
}

/// Symbol value at a point and covector.
pub fn eval_h(model: &MetricModel, p: &SpatialPoint, xi: &Covector) -> Result<f64, MetricError> {
    Ok(eval_h_jet(&model.symbol_jet(p, Guard::Public)?, xi))
}

/// Frequency discriminant `Delta_1 = (u.xi)^2 - alpha ((w.xi)^2 - q)`.
/// Nonnegative for every real spatial covector; `xi.xi0` is ignored.
pub fn delta1(model: &MetricModel, p: &SpatialPoint, xi: &Covector) -> Result<f64, MetricError> {
    Ok(delta1_jet(&model.symbol_jet(p, Guard::Public)?, xi))
}

/// Both frequency roots at the spatial covector (`xi.xi0` is ignored).
pub fn lambda_roots(
    model: &MetricModel,
    p: &SpatialPoint,
    xi: &Covector,
) -> Result<LambdaRoots, MetricError> {
    Ok(lambda_roots_jet(&model.symbol_jet(p, Guard::Public)?, xi))
}

/// Gradient of the symbol with respect to covector and position.
pub fn grad_h(
    model: &MetricModel,
    p: &SpatialPoint,
    xi: &Covector,
) -> Result<HGradient, MetricError> {
    Ok(grad_h_jet(&model.symbol_jet(p, Guard::Public)?, xi))
}

pub(crate) fn delta2_jet(jet: &SymbolJet, xi0: f64, xi_phi: f64, xi_z: f64) -> f64 {
    let tail = jet.w[1] * xi_phi + jet.w[2] * xi_z;
    let a = jet.w[0] * jet.w[0] - 1.0;
    let b_half = xi0 * jet.u[0] + jet.w[0] * tail;
    let ang = xi_phi / jet.rho;
    let c = jet.alpha * xi0 * xi0
        + 2.0 * xi0 * (jet.u[1] * xi_phi + jet.u[2] * xi_z)
        + tail * tail
        - ang * ang
        - xi_z * xi_z;
    b_half * b_half - a * c
}

pub(crate) fn delta3_jet(jet: &SymbolJet, xi0: f64, xi_rho: f64, xi_phi: f64) -> f64 {
    let tail = jet.w[0] * xi_rho + jet.w[1] * xi_phi;
    let a = jet.w[2] * jet.w[2] - 1.0;
    let b_half = xi0 * jet.u[2] + jet.w[2] * tail;
    let ang = xi_phi / jet.rho;
    let c = jet.alpha * xi0 * xi0
        + 2.0 * xi0 * (jet.u[0] * xi_rho + jet.u[1] * xi_phi)
        + tail * tail
        - xi_rho * xi_rho
        - ang * ang;
    b_half * b_half - a * c
}

/// Radial discriminant: `H`, viewed as a quadratic in `xi_rho` at fixed
/// `(xi0, xi_phi, xi_z)`, has real roots iff `Delta_2 >= 0`. On the shell
/// `H = 0` the identity `|dH/dxi_rho| = 2 sqrt(Delta_2)` holds, so radial
/// turning points are exactly the on-shell zeros of `Delta_2`.
pub fn delta2(
    model: &MetricModel,
    p: &SpatialPoint,
    xi0: f64,
    xi_phi: f64,
    xi_z: f64,
) -> Result<f64, MetricError> {
    Ok(delta2_jet(&model.symbol_jet(p, Guard::Public)?, xi0, xi_phi, xi_z))
}

/// Axial discriminant: the same construction with the roles of `xi_rho`
/// and `xi_z` exchanged. Vanishes identically on-shell for equatorial
/// Kerr rays and for the acoustic backend.
pub fn delta3(
    model: &MetricModel,
    p: &SpatialPoint,
    xi0: f64,
    xi_rho: f64,
    xi_phi: f64,
) -> Result<f64, MetricError> {
    Ok(delta3_jet(&model.symbol_jet(p, Guard::Public)?, xi0, xi_rho, xi_phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn kerr() -> MetricModel {
        MetricModel::kerr(1.0, 0.8).unwrap()
    }

    fn acoustic() -> MetricModel {
        MetricModel::acoustic(-1.0, 10.0).unwrap()
    }

    /// Test points clear of the disc, ring, and axis for both backends.
    fn sample_points() -> Vec<SpatialPoint> {
        vec![
            SpatialPoint::new(2.5, 0.0, 0.0),
            SpatialPoint::new(2.0, 1.3, 0.4),
            SpatialPoint::new(1.1, -0.5, -0.8),
            SpatialPoint::new(4.0, 2.0, 1.5),
            SpatialPoint::new(0.95, 0.0, 0.3),
        ]
    }

    fn sample_covectors() -> Vec<Covector> {
        vec![
            Covector::new(1.0, 0.3, -1.5, 0.2),
            Covector::new(-0.7, -0.8, 2.0, 0.0),
            Covector::new(2.0, 0.0, 0.5, -1.1),
            Covector::new(0.0, 1.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn acoustic_symbol_matches_direct_form() {
        // Direct transcription of the vortex-flow inverse metric, written
        // independently of the jet plumbing.
        let (a, b) = (-1.0, 10.0);
        let m = acoustic();
        for p in sample_points() {
            for xi in sample_covectors() {
                let v_xi = (a / p.rho) * xi.xi_rho + (b / (p.rho * p.rho)) * xi.xi_phi;
                let ang = xi.xi_phi / p.rho;
                let direct = (xi.xi0 + v_xi) * (xi.xi0 + v_xi)
                    - xi.xi_rho * xi.xi_rho
                    - ang * ang
                    - xi.xi_z * xi.xi_z;
                let got = eval_h(&m, &p, &xi).unwrap();
                assert_relative_eq!(got, direct, max_relative = 1e-13, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn kerr_symbol_matches_direct_form() {
        // Flat wave operator plus the K (xi0 - kappa.xi)^2 correction with
        // the null vector kappa, assembled from public metric fields only.
        let m = kerr();
        for p in sample_points() {
            let f = m.fields(&p).unwrap();
            for xi in sample_covectors() {
                let ang = xi.xi_phi / p.rho;
                let flat = xi.xi0 * xi.xi0 - xi.xi_rho * xi.xi_rho - ang * ang
                    - xi.xi_z * xi.xi_z;
                let kappa_xi =
                    f.b_rho * xi.xi_rho + (f.b_phi / p.rho) * xi.xi_phi + f.b_z * xi.xi_z;
                let direct = flat + f.k * (xi.xi0 - kappa_xi) * (xi.xi0 - kappa_xi);
                let got = eval_h(&m, &p, &xi).unwrap();
                assert_relative_eq!(got, direct, max_relative = 1e-13, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn factorization_through_the_roots() {
        for m in [kerr(), acoustic()] {
            let alpha_of = |p: &SpatialPoint| match m {
                MetricModel::Kerr { .. } => 1.0 + m.fields(p).unwrap().k,
                MetricModel::Acoustic { .. } => 1.0,
            };
            for p in sample_points() {
                for xi in sample_covectors() {
                    let roots = lambda_roots(&m, &p, &xi).unwrap();
                    let alpha = alpha_of(&p);
                    let h = eval_h(&m, &p, &xi).unwrap();
                    let factored =
                        alpha * (xi.xi0 - roots.plus) * (xi.xi0 - roots.minus);
                    assert_relative_eq!(h, factored, max_relative = 1e-11, epsilon = 1e-11);
                    // The roots are on-shell frequencies.
                    for lam in [roots.plus, roots.minus] {
                        let h0 = eval_h(&m, &p, &xi.with_xi0(lam)).unwrap();
                        assert_abs_diff_eq!(h0, 0.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn frequency_gradient_at_roots_is_plus_minus_two_root_delta1() {
        for m in [kerr(), acoustic()] {
            for p in sample_points() {
                for xi in sample_covectors() {
                    let roots = lambda_roots(&m, &p, &xi).unwrap();
                    let d1 = delta1(&m, &p, &xi).unwrap();
                    let g_plus = grad_h(&m, &p, &xi.with_xi0(roots.plus)).unwrap();
                    let g_minus = grad_h(&m, &p, &xi.with_xi0(roots.minus)).unwrap();
                    assert_relative_eq!(
                        g_plus.d_xi0,
                        2.0 * d1.sqrt(),
                        max_relative = 1e-11,
                        epsilon = 1e-11
                    );
                    assert_relative_eq!(
                        g_minus.d_xi0,
                        -2.0 * d1.sqrt(),
                        max_relative = 1e-11,
                        epsilon = 1e-11
                    );
                }
            }
        }
    }

    #[test]
    fn delta1_dominates_flat_norm() {
        // Kerr: Delta_1 >= |xi_spatial|^2 by Cauchy-Schwarz; acoustic:
        // equality exactly.
        for p in sample_points() {
            for xi in sample_covectors() {
                let q = {
                    let ang = xi.xi_phi / p.rho;
                    xi.xi_rho * xi.xi_rho + ang * ang + xi.xi_z * xi.xi_z
                };
                let d_kerr = delta1(&kerr(), &p, &xi).unwrap();
                assert!(d_kerr >= q - 1e-12 * (1.0 + q));
                let d_ac = delta1(&acoustic(), &p, &xi).unwrap();
                assert_relative_eq!(d_ac, q, max_relative = 1e-13, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for m in [kerr(), acoustic()] {
            for p in sample_points() {
                for xi in sample_covectors() {
                    let g = grad_h(&m, &p, &xi).unwrap();
                    let fd = |f_plus: f64, f_minus: f64| (f_plus - f_minus) / (2.0 * h);

                    let d_xi0 = fd(
                        eval_h(&m, &p, &Covector { xi0: xi.xi0 + h, ..xi }).unwrap(),
                        eval_h(&m, &p, &Covector { xi0: xi.xi0 - h, ..xi }).unwrap(),
                    );
                    let d_xi_rho = fd(
                        eval_h(&m, &p, &Covector { xi_rho: xi.xi_rho + h, ..xi }).unwrap(),
                        eval_h(&m, &p, &Covector { xi_rho: xi.xi_rho - h, ..xi }).unwrap(),
                    );
                    let d_xi_phi = fd(
                        eval_h(&m, &p, &Covector { xi_phi: xi.xi_phi + h, ..xi }).unwrap(),
                        eval_h(&m, &p, &Covector { xi_phi: xi.xi_phi - h, ..xi }).unwrap(),
                    );
                    let d_xi_z = fd(
                        eval_h(&m, &p, &Covector { xi_z: xi.xi_z + h, ..xi }).unwrap(),
                        eval_h(&m, &p, &Covector { xi_z: xi.xi_z - h, ..xi }).unwrap(),
                    );
                    let d_rho = fd(
                        eval_h(&m, &SpatialPoint::new(p.rho + h, p.phi, p.z), &xi).unwrap(),
                        eval_h(&m, &SpatialPoint::new(p.rho - h, p.phi, p.z), &xi).unwrap(),
                    );
                    let d_z = fd(
                        eval_h(&m, &SpatialPoint::new(p.rho, p.phi, p.z + h), &xi).unwrap(),
                        eval_h(&m, &SpatialPoint::new(p.rho, p.phi, p.z - h), &xi).unwrap(),
                    );
                    let pairs = [
                        (g.d_xi0, d_xi0),
                        (g.d_xi_rho, d_xi_rho),
                        (g.d_xi_phi, d_xi_phi),
                        (g.d_xi_z, d_xi_z),
                        (g.d_rho, d_rho),
                        (g.d_z, d_z),
                    ];
                    for (analytic, numeric) in pairs {
                        assert_relative_eq!(
                            analytic,
                            numeric,
                            max_relative = 1e-6,
                            epsilon = 1e-7
                        );
                    }
                }
            }
        }
    }

    /// Quadratic-sampling oracle: reconstruct H restricted to one covector
    /// slot from three samples and compare its discriminant to the
    /// closed-form one.
    fn discriminant_oracle(
        m: &MetricModel,
        p: &SpatialPoint,
        base: &Covector,
        slot: usize,
    ) -> f64 {
        let with = |t: f64| {
            let mut xi = *base;
            match slot {
                1 => xi.xi_rho = t,
                3 => xi.xi_z = t,
                _ => unreachable!(),
            }
            eval_h(m, p, &xi).unwrap()
        };
        let (h_m, h_0, h_p) = (with(-1.0), with(0.0), with(1.0));
        let a = 0.5 * (h_p + h_m) - h_0;
        let b = 0.5 * (h_p - h_m);
        let c = h_0;
        0.25 * b * b - a * c
    }

    #[test]
    fn radial_discriminant_matches_sampling_oracle() {
        for m in [kerr(), acoustic()] {
            for p in sample_points() {
                for xi in sample_covectors() {
                    let oracle = discriminant_oracle(&m, &p, &xi, 1);
                    let got = delta2(&m, &p, xi.xi0, xi.xi_phi, xi.xi_z).unwrap();
                    assert_relative_eq!(got, oracle, max_relative = 1e-10, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn axial_discriminant_matches_sampling_oracle() {
        for m in [kerr(), acoustic()] {
            for p in sample_points() {
                for xi in sample_covectors() {
                    let oracle = discriminant_oracle(&m, &p, &xi, 3);
                    let got = delta3(&m, &p, xi.xi0, xi.xi_rho, xi.xi_phi).unwrap();
                    assert_relative_eq!(got, oracle, max_relative = 1e-10, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn on_shell_radial_gradient_squares_to_discriminant() {
        // (dH/dxi_rho)^2 = 4 Delta_2 whenever H = 0.
        for m in [kerr(), acoustic()] {
            for p in sample_points() {
                for xi in sample_covectors() {
                    let roots = lambda_roots(&m, &p, &xi).unwrap();
                    for lam in [roots.plus, roots.minus] {
                        let on = xi.with_xi0(lam);
                        let g = grad_h(&m, &p, &on).unwrap();
                        let d2 = delta2(&m, &p, lam, xi.xi_phi, xi.xi_z).unwrap();
                        assert_relative_eq!(
                            g.d_xi_rho * g.d_xi_rho,
                            4.0 * d2,
                            max_relative = 1e-9,
                            epsilon = 1e-9
                        );
                        let d3 = delta3(&m, &p, lam, xi.xi_rho, xi.xi_phi).unwrap();
                        assert_relative_eq!(
                            g.d_xi_z * g.d_xi_z,
                            4.0 * d3,
                            max_relative = 1e-9,
                            epsilon = 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn equatorial_kerr_axial_discriminant_vanishes_on_shell() {
        let m = kerr();
        let p = SpatialPoint::equatorial(2.0, 0.0);
        for xi in [
            Covector::spatial(0.7, -1.2, 0.0),
            Covector::spatial(-0.4, 2.0, 0.0),
        ] {
            let roots = lambda_roots(&m, &p, &xi).unwrap();
            for lam in [roots.plus, roots.minus] {
                let d3 = delta3(&m, &p, lam, xi.xi_rho, xi.xi_phi).unwrap();
                assert_abs_diff_eq!(d3, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn vortex_anchor_frequencies() {
        // A = -1, B = 10, rho0 = 2.5, eta = (-0.8, -1.5, 0):
        // unit spatial norm, lambda = 2.08 +- 1.
        let m = acoustic();
        let p = SpatialPoint::equatorial(2.5, 0.0);
        let eta = Covector::spatial(-0.8, -1.5, 0.0);
        assert_relative_eq!(delta1(&m, &p, &eta).unwrap(), 1.0, max_relative = 1e-14);
        let roots = lambda_roots(&m, &p, &eta).unwrap();
        assert_relative_eq!(roots.plus, 3.08, max_relative = 1e-13);
        assert_relative_eq!(roots.minus, 1.08, max_relative = 1e-13);
    }

    #[test]
    fn kerr_anchor_frequencies() {
        // m = 1, a = 0.8, rho0 = 2, eta aligned with b at the point:
        // Delta_1 = 1 and lambda_plus = 1 exactly; lambda_minus =
        // (K-1)/(K+1) with K = 2/sqrt(3.36).
        let m = kerr();
        let p = SpatialPoint::equatorial(2.0, 0.0);
        let f = m.fields(&p).unwrap();
        let eta = Covector::spatial(f.b_rho, 2.0 * f.b_phi, 0.0);
        assert_relative_eq!(delta1(&m, &p, &eta).unwrap(), 1.0, max_relative = 1e-14);
        let roots = lambda_roots(&m, &p, &eta).unwrap();
        assert_relative_eq!(roots.plus, 1.0, max_relative = 1e-14);
        let k0 = 2.0 / 3.36f64.sqrt();
        assert_relative_eq!(roots.minus, (k0 - 1.0) / (k0 + 1.0), max_relative = 1e-12);
        assert_abs_diff_eq!(roots.minus, 0.0435608, epsilon = 1e-7);
    }

    #[test]
    fn root_signs_split_at_the_ergosphere() {
        // K < 1: lambda_plus > 0 > lambda_minus for every spatial covector.
        // Inside the ergoregion suitable covectors give lambda_minus > 0.
        let m = kerr();
        let outside = SpatialPoint::equatorial(3.0, 0.0);
        for xi in sample_covectors() {
            let roots = lambda_roots(&m, &outside, &xi).unwrap();
            assert!(roots.plus > 0.0 && roots.minus < 0.0);
        }
        let inside = SpatialPoint::equatorial(2.0, 0.0);
        let f = m.fields(&inside).unwrap();
        let aligned = Covector::spatial(f.b_rho, 2.0 * f.b_phi, 0.0);
        let roots = lambda_roots(&m, &inside, &aligned).unwrap();
        assert!(roots.minus > 0.0);
    }

    proptest! {
        #[test]
        fn prop_factorization_and_gradients(
            rho in 0.95f64..6.0,
            z in -2.0f64..2.0,
            xi0 in -3.0f64..3.0,
            xi_rho in -3.0f64..3.0,
            xi_phi in -3.0f64..3.0,
            xi_z in -3.0f64..3.0,
            kerr_backend in proptest::bool::ANY,
        ) {
            // Keep clear of the ring neighborhood.
            prop_assume!((rho - 0.8) * (rho - 0.8) + z * z > 0.01);
            let m = if kerr_backend { kerr() } else { acoustic() };
            let p = SpatialPoint::new(rho, 0.0, z);
            let xi = Covector::new(xi0, xi_rho, xi_phi, xi_z);

            let roots = lambda_roots(&m, &p, &xi).unwrap();
            prop_assert!(roots.plus >= roots.minus);
            let scale = 1.0 + xi0 * xi0 + xi_rho * xi_rho + xi_phi * xi_phi + xi_z * xi_z;
            for lam in [roots.plus, roots.minus] {
                let h = eval_h(&m, &p, &xi.with_xi0(lam)).unwrap();
                prop_assert!(h.abs() < 1e-11 * scale, "|H| = {} at root", h.abs());
            }

            // Off-shell discriminant identity against the sampling oracle.
            let oracle = discriminant_oracle(&m, &p, &xi, 1);
            let d2 = delta2(&m, &p, xi.xi0, xi.xi_phi, xi.xi_z).unwrap();
            prop_assert!((d2 - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
        }
    }
}
