//! Wave-packet energy split across the two dispersion branches.
//!
//! A packet `chi0(x) e^{i k (eta . x)}` with a compactly supported bump
//! `chi0` carries, to leading order in `1/k`, the conserved energy
//!
//! ```text
//! E0(branch)/k^2 = (+-) \int lambda_branch sqrt(Delta_1) chi0^2 rho drho dphi (dz)
//! ```
//!
//! (`+` for Plus, `-` for Minus), while the two-branch sum packet carries
//!
//! ```text
//! E0(sum)/k^2 = 2 \int (Delta_1 / alpha) chi0^2 rho drho dphi (dz).
//! ```
//!
//! Pointwise `(lambda_plus - lambda_minus) sqrt(Delta_1) = 2 Delta_1 /
//! alpha`, so additivity of the three numbers holds to rounding when all
//! integrals share one grid, which is how they are computed here. The
//! covector `eta` is constant over the support; the physical wave vector
//! still varies through the `1/rho` scaling of the angular component.
//!
//! Superradiance of the packet means the Minus fraction carries negative
//! energy: `E0(minus) < 0` with `lambda_minus > 0` on the whole support,
//! which forces `E0(plus) > E0(sum)`. The vortex backend integrates over
//! the plane (2 spatial dimensions), the rotating backend over 3.

use crate::hamiltonian::{delta1_jet, lambda_roots_jet, Branch, Covector};
use crate::metric::{Guard, MetricError, MetricModel, Region, SpatialPoint};
use crate::quadrature::{gauss_legendre, KahanSum};
use serde::Serialize;
use thiserror::Error;

/// High-frequency caveat attached to every report.
pub const K_LARGE_NOTE: &str = "leading-order ray-optics energies (E0/k^2); \
valid in the high-frequency regime k >> 1/packet-width";

/// Smooth compactly supported packet profile: a product of
/// `exp(-1/(1-u^2))` factors with `u` the scaled offset per axis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BumpSpec {
    pub center: SpatialPoint,
    pub halfwidth_rho: f64,
    pub halfwidth_phi: f64,
    /// Used by the rotating backend only; the vortex integral is planar.
    pub halfwidth_z: f64,
    pub amplitude: f64,
}

fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

impl BumpSpec {
    pub fn new(center: SpatialPoint, halfwidth_rho: f64, halfwidth_phi: f64, halfwidth_z: f64) -> Self {
        BumpSpec {
            center,
            halfwidth_rho,
            halfwidth_phi,
            halfwidth_z,
            amplitude: 1.0,
        }
    }

    /// Profile value at a point. `three_d` controls whether the `z`
    /// factor participates.
    pub fn chi(&self, p: &SpatialPoint, three_d: bool) -> f64 {
        let ur = (p.rho - self.center.rho) / self.halfwidth_rho;
        let up = (p.phi - self.center.phi) / self.halfwidth_phi;
        let mut v = self.amplitude * bump(ur) * bump(up);
        if three_d {
            v *= bump((p.z - self.center.z) / self.halfwidth_z);
        }
        v
    }

    fn validate(&self, three_d: bool) -> Result<(), EnergyError> {
        if !(self.halfwidth_rho > 0.0 && self.halfwidth_phi > 0.0) {
            return Err(EnergyError::BadBump("halfwidths must be positive"));
        }
        if three_d && !(self.halfwidth_z > 0.0) {
            return Err(EnergyError::BadBump("halfwidths must be positive"));
        }
        if self.halfwidth_phi >= std::f64::consts::PI {
            return Err(EnergyError::BadBump("phi halfwidth must stay below pi"));
        }
        if self.center.rho - self.halfwidth_rho <= 0.0 {
            return Err(EnergyError::BadBump("support must stay at positive rho"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("invalid bump: {0}")]
    BadBump(&'static str),
    #[error("quadrature did not converge: order doubling moved the result by {relative:e}")]
    QuadratureNonConvergence { relative: f64 },
    #[error("packet support leaves the ergoregion at rho={rho}, z={z}")]
    SupportOutsideErgoregion { rho: f64, z: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyOptions {
    /// Gauss-Legendre order per axis; the convergence check doubles it.
    pub order: usize,
    /// Skip the support-in-ergoregion validation.
    pub allow_any_region: bool,
    /// Relative shift allowed between order `n` and `2n` results.
    pub convergence_tol: f64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        // Bump profiles are smooth but not analytic at the support edge,
        // so Gauss-Legendre converges subgeometrically; order 48 is the
        // smallest tested order whose doubling residual clears 1e-9 with
        // margin (measured 1e-11 at 48 vs 96 for the reference packet).
        EnergyOptions {
            order: 48,
            allow_any_region: false,
            convergence_tol: 1e-9,
        }
    }
}

/// Branch energies and the superradiance verdict for one packet.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub e_plus: f64,
    pub e_minus: f64,
    pub e_sum: f64,
    /// `|e_plus + e_minus - e_sum| / |e_sum|` on the shared grid.
    pub additivity_residual: f64,
    /// Largest relative shift of the three energies under order doubling.
    pub convergence_residual: f64,
    /// Minimum of `lambda_minus` over the quadrature nodes.
    pub lambda_minus_min: f64,
    pub support_in_ergoregion: bool,
    pub superradiant: bool,
    /// Why the verdict is negative, when it is.
    pub reason: Option<String>,
    pub quadrature_order: usize,
    pub note: String,
}

fn is_three_d(model: &MetricModel) -> bool {
    matches!(model, MetricModel::Kerr { .. })
}

/// Quadrature grid over the bump support, lexicographic in
/// `(rho, phi, z)`; each entry carries the product weight including the
/// box jacobian.
fn node_grid(bump: &BumpSpec, three_d: bool, order: usize) -> Vec<(SpatialPoint, f64)> {
    let (x, w) = gauss_legendre(order);
    let c = bump.center;
    let mut grid = Vec::with_capacity(order * order * if three_d { order } else { 1 });
    for (xr, wr) in x.iter().zip(&w) {
        let rho = c.rho + bump.halfwidth_rho * xr;
        let wr = wr * bump.halfwidth_rho;
        for (xp, wp) in x.iter().zip(&w) {
            let phi = c.phi + bump.halfwidth_phi * xp;
            let wp = wp * bump.halfwidth_phi;
            if three_d {
                for (xz, wz) in x.iter().zip(&w) {
                    let z = c.z + bump.halfwidth_z * xz;
                    let wz = wz * bump.halfwidth_z;
                    grid.push((SpatialPoint::new(rho, phi, z), wr * wp * wz));
                }
            } else {
                grid.push((SpatialPoint::new(rho, phi, c.z), wr * wp));
            }
        }
    }
    grid
}

struct Scan {
    e_plus: f64,
    e_minus: f64,
    e_sum: f64,
    lambda_minus_min: f64,
}

fn scan_grid(
    model: &MetricModel,
    grid: &[(SpatialPoint, f64)],
    bump: &BumpSpec,
    eta: &Covector,
    three_d: bool,
) -> Result<Scan, EnergyError> {
    let mut acc_plus = KahanSum::new();
    let mut acc_minus = KahanSum::new();
    let mut acc_sum = KahanSum::new();
    let mut lam_min = f64::INFINITY;
    for (p, w) in grid {
        let jet = model.symbol_jet(p, Guard::Public)?;
        let roots = lambda_roots_jet(&jet, eta);
        let d1 = delta1_jet(&jet, eta);
        let chi = bump.chi(p, three_d);
        let common = w * chi * chi * p.rho;
        let sd1 = d1.max(0.0).sqrt();
        acc_plus.add(common * roots.plus * sd1);
        acc_minus.add(-common * roots.minus * sd1);
        acc_sum.add(common * 2.0 * d1 / jet.alpha);
        if roots.minus < lam_min {
            lam_min = roots.minus;
        }
    }
    Ok(Scan {
        e_plus: acc_plus.value(),
        e_minus: acc_minus.value(),
        e_sum: acc_sum.value(),
        lambda_minus_min: lam_min,
    })
}

/// Energy of a single-branch packet (`E0/k^2`), at the given quadrature
/// order with no convergence check.
pub fn energy_branch(
    model: &MetricModel,
    bump: &BumpSpec,
    eta: &Covector,
    branch: Branch,
    order: usize,
) -> Result<f64, EnergyError> {
    let three_d = is_three_d(model);
    bump.validate(three_d)?;
    let grid = node_grid(bump, three_d, order);
    let scan = scan_grid(model, &grid, bump, eta, three_d)?;
    Ok(match branch {
        Branch::Plus => scan.e_plus,
        Branch::Minus => scan.e_minus,
    })
}

/// Energy of the two-branch sum packet (`E0/k^2`).
pub fn energy_sum(
    model: &MetricModel,
    bump: &BumpSpec,
    eta: &Covector,
    order: usize,
) -> Result<f64, EnergyError> {
    let three_d = is_three_d(model);
    bump.validate(three_d)?;
    let grid = node_grid(bump, three_d, order);
    let scan = scan_grid(model, &grid, bump, eta, three_d)?;
    Ok(scan.e_sum)
}

/// Full energy analysis: all three energies with an order-doubling
/// convergence check, support validation, and the superradiance verdict.
pub fn superradiance_report(
    model: &MetricModel,
    bump: &BumpSpec,
    eta: &Covector,
    opts: &EnergyOptions,
) -> Result<EnergyReport, EnergyError> {
    let three_d = is_three_d(model);
    bump.validate(three_d)?;

    let grid_fine = node_grid(bump, three_d, 2 * opts.order);

    // Support validation on the fine grid.
    let mut in_ergo = true;
    for (p, _) in &grid_fine {
        let region = model.classify(p)?;
        if region != Region::Ergoregion {
            if !opts.allow_any_region {
                return Err(EnergyError::SupportOutsideErgoregion { rho: p.rho, z: p.z });
            }
            in_ergo = false;
            break;
        }
    }

    let grid = node_grid(bump, three_d, opts.order);
    let coarse = scan_grid(model, &grid, bump, eta, three_d)?;
    let fine = scan_grid(model, &grid_fine, bump, eta, three_d)?;

    let rel = |a: f64, b: f64| {
        let scale = b.abs().max(1e-300);
        (a - b).abs() / scale
    };
    let convergence_residual = rel(coarse.e_plus, fine.e_plus)
        .max(rel(coarse.e_minus, fine.e_minus))
        .max(rel(coarse.e_sum, fine.e_sum));
    if convergence_residual > opts.convergence_tol {
        return Err(EnergyError::QuadratureNonConvergence {
            relative: convergence_residual,
        });
    }

    let (e_plus, e_minus, e_sum) = (fine.e_plus, fine.e_minus, fine.e_sum);
    let additivity_residual = (e_plus + e_minus - e_sum).abs() / e_sum.abs().max(1e-300);

    let mut superradiant = false;
    let mut reason = None;
    if !in_ergo {
        reason = Some("packet support is not contained in the ergoregion".to_string());
    } else if fine.lambda_minus_min <= 0.0 {
        reason = Some(format!(
            "lambda_minus is not positive on the whole support (min = {:e})",
            fine.lambda_minus_min
        ));
    } else if !(e_minus < 0.0) {
        reason = Some(format!("minus-branch energy is nonnegative ({e_minus:e})"));
    } else if !(e_plus > e_sum) {
        reason = Some(format!(
            "plus-branch energy does not exceed the sum packet ({e_plus:e} <= {e_sum:e})"
        ));
    } else {
        superradiant = true;
    }

    Ok(EnergyReport {
        e_plus,
        e_minus,
        e_sum,
        additivity_residual,
        convergence_residual,
        lambda_minus_min: fine.lambda_minus_min,
        support_in_ergoregion: in_ergo,
        superradiant,
        reason,
        quadrature_order: opts.order,
        note: K_LARGE_NOTE.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn vortex() -> MetricModel {
        MetricModel::acoustic(-1.0, 10.0).unwrap()
    }

    fn section4_bump() -> BumpSpec {
        BumpSpec::new(SpatialPoint::equatorial(2.5, 0.0), 0.5, 0.5, 0.0)
    }

    fn section4_eta() -> Covector {
        Covector::spatial(-0.8, -1.5, 0.0)
    }

    /// 1D Simpson on a fine grid; the oracle integrator.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn planar_energy_matches_separable_oracle() {
        // Rotation-free flow with tiny strength: lambda+- and Delta_1
        // stay fully general, but the oracle is built from independent
        // 1D integrals of the separable integrand.
        let m = MetricModel::acoustic(-0.01, 0.0).unwrap();
        let bump = BumpSpec::new(SpatialPoint::equatorial(2.0, 0.3), 0.4, 0.6, 0.0);
        let eta = Covector::spatial(0.7, -1.2, 0.0);
        let e_sum = energy_sum(&m, &bump, &eta, 96).unwrap();

        // e_sum = 2 \int Delta_1 chi^2 rho, Delta_1 = eta_r^2 +
        // eta_phi^2/rho^2 (flow cancels in Delta_1 for this backend),
        // chi^2 = chi_r^2(rho) chi_p^2(phi).
        let chi_r = |rho: f64| bump.chi(&SpatialPoint::equatorial(rho, 0.3), false);
        let chi_p_sq = |phi: f64| {
            let u = (phi - 0.3) / 0.6;
            let b = if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 };
            b * b
        };
        let radial = simpson(
            &|rho| {
                let c = chi_r(rho);
                (eta.xi_rho * eta.xi_rho * rho + eta.xi_phi * eta.xi_phi / rho) * c * c
            },
            1.6,
            2.4,
            20_000,
        );
        let angular = simpson(&chi_p_sq, 0.3 - 0.6, 0.3 + 0.6, 20_000);
        // chi_r already includes the phi factor at phi = 0.3; divide out.
        let chi_p_at_center = chi_p_sq(0.3);
        let oracle = 2.0 * radial * angular / chi_p_at_center;
        assert_relative_eq!(e_sum, oracle, max_relative = 1e-12);
    }

    #[test]
    fn additivity_holds_to_rounding_on_the_shared_grid() {
        let report =
            superradiance_report(&vortex(), &section4_bump(), &section4_eta(), &Default::default())
                .unwrap();
        assert!(report.additivity_residual < 1e-12, "{:e}", report.additivity_residual);
    }

    #[test]
    fn vortex_packet_is_superradiant() {
        let report =
            superradiance_report(&vortex(), &section4_bump(), &section4_eta(), &Default::default())
                .unwrap();
        assert!(report.superradiant, "reason: {:?}", report.reason);
        assert!(report.support_in_ergoregion);
        assert!(report.lambda_minus_min > 0.0);
        assert!(report.e_minus < 0.0);
        assert!(report.e_plus > report.e_sum);
        assert!(report.e_sum > 0.0);
        assert!(report.convergence_residual < 1e-9);
        assert!(report.note.contains("high-frequency"));
    }

    #[test]
    fn branch_energies_agree_with_the_report() {
        let m = vortex();
        let (bump, eta) = (section4_bump(), section4_eta());
        let report = superradiance_report(&m, &bump, &eta, &Default::default()).unwrap();
        let order = 2 * EnergyOptions::default().order;
        let e_p = energy_branch(&m, &bump, &eta, Branch::Plus, order).unwrap();
        let e_m = energy_branch(&m, &bump, &eta, Branch::Minus, order).unwrap();
        let e_s = energy_sum(&m, &bump, &eta, order).unwrap();
        assert_abs_diff_eq!(e_p, report.e_plus, epsilon = 0.0);
        assert_abs_diff_eq!(e_m, report.e_minus, epsilon = 0.0);
        assert_abs_diff_eq!(e_s, report.e_sum, epsilon = 0.0);
    }

    #[test]
    fn support_leaving_the_ergoregion_is_rejected() {
        let m = vortex();
        let bump = BumpSpec::new(SpatialPoint::equatorial(9.5, 0.0), 1.5, 0.5, 0.0);
        let eta = section4_eta();
        let err = superradiance_report(&m, &bump, &eta, &Default::default()).unwrap_err();
        assert!(matches!(err, EnergyError::SupportOutsideErgoregion { .. }));

        // With the override the report is produced but the verdict is no.
        let opts = EnergyOptions { allow_any_region: true, ..Default::default() };
        let report = superradiance_report(&m, &bump, &eta, &opts).unwrap();
        assert!(!report.support_in_ergoregion);
        assert!(!report.superradiant);
        assert!(report.reason.is_some());
    }

    #[test]
    fn rotating_backend_packet_is_superradiant() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let p0 = SpatialPoint::equatorial(2.0, 0.0);
        let f = m.fields(&p0).unwrap();
        let eta = Covector::spatial(f.b_rho, 2.0 * f.b_phi, 0.0);
        let bump = BumpSpec::new(p0, 0.12, 0.3, 0.08);
        let report = superradiance_report(&m, &bump, &eta, &Default::default()).unwrap();
        assert!(report.support_in_ergoregion);
        assert!(report.superradiant, "reason: {:?}", report.reason);
        assert!(report.lambda_minus_min > 0.0);
        assert!(report.additivity_residual < 1e-12);
    }

    #[test]
    fn bump_validation_catches_bad_geometry() {
        let m = vortex();
        let eta = section4_eta();
        let bad_width = BumpSpec::new(SpatialPoint::equatorial(2.5, 0.0), 0.0, 0.5, 0.0);
        assert!(matches!(
            energy_sum(&m, &bad_width, &eta, 8),
            Err(EnergyError::BadBump(_))
        ));
        let past_axis = BumpSpec::new(SpatialPoint::equatorial(0.4, 0.0), 0.5, 0.5, 0.0);
        assert!(matches!(
            energy_sum(&m, &past_axis, &eta, 8),
            Err(EnergyError::BadBump(_))
        ));
        let wide_phi = BumpSpec::new(SpatialPoint::equatorial(2.5, 0.0), 0.5, 3.5, 0.0);
        assert!(matches!(
            energy_sum(&m, &wide_phi, &eta, 8),
            Err(EnergyError::BadBump(_))
        ));
    }

    #[test]
    fn energies_scale_with_the_fourth_power_of_amplitude_squared() {
        // chi enters squared: doubling the amplitude quadruples energies.
        let m = vortex();
        let eta = section4_eta();
        let mut bump = section4_bump();
        let base = energy_sum(&m, &bump, &eta, 24).unwrap();
        bump.amplitude = 2.0;
        let scaled = energy_sum(&m, &bump, &eta, 24).unwrap();
        assert_relative_eq!(scaled, 4.0 * base, max_relative = 1e-13);
    }
}
