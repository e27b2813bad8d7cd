//! Metric backends.
//!
//! Both backends describe a stationary, axisymmetric Lorentzian metric in
//! cylindrical coordinates `(x0, rho, phi, z)` through a scalar field `K`
//! and a unit spatial vector `b = (b_rho, b_phi, b_z)`. The ergoregion is
//! exactly the set where `K > 1`.
//!
//! * [`MetricModel::Kerr`] — the rotating black hole in Kerr-Schild form.
//!   `K = 2 m r^3 / (r^4 + a^2 z^2)` with `r(rho, z)` the oblate radial
//!   coordinate solving `rho^2/(r^2+a^2) + z^2/r^2 = 1`.
//! * [`MetricModel::Acoustic`] — sound rays in a planar vortex flow with
//!   velocity `(A/rho) e_rho + (B/rho) e_phi`; `K = (A^2+B^2)/rho^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spatial point in cylindrical coordinates. `phi` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialPoint {
    pub rho: f64,
    pub phi: f64,
    pub z: f64,
}

impl SpatialPoint {
    pub fn new(rho: f64, phi: f64, z: f64) -> Self {
        SpatialPoint { rho, phi, z }
    }

    /// Equatorial shorthand (`z = 0`).
    pub fn equatorial(rho: f64, phi: f64) -> Self {
        SpatialPoint { rho, phi, z: 0.0 }
    }
}

/// Pointwise metric data: the deviation scalar `K`, the unit vector `b`,
/// and for Kerr the oblate radius `r` (zero for the acoustic backend).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricFields {
    pub k: f64,
    pub b_rho: f64,
    pub b_phi: f64,
    pub b_z: f64,
    pub r: f64,
}

/// Where a point sits relative to the ergosphere and the horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Exterior,
    Ergoregion,
    BetweenHorizons,
    InsideInner,
    /// Interior of a horizonless (naked or extremal) Kerr geometry where
    /// `K <= 1`; reached only past the ergoregion.
    NoHorizonInterior,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Exterior => "exterior",
            Region::Ergoregion => "ergoregion",
            Region::BetweenHorizons => "between_horizons",
            Region::InsideInner => "inside_inner",
            Region::NoHorizonInterior => "no_horizon_interior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricError {
    /// The metric fields are singular or numerically unusable at the point.
    #[error("degenerate point at rho={rho}, z={z}: {what}")]
    DegeneratePoint { rho: f64, z: f64, what: &'static str },
    #[error("domain error: {0}")]
    DomainError(&'static str),
}

/// Guard radius around Kerr's ring singularity, as a factor on `a^2`:
/// public field evaluation refuses points with `(rho-a)^2 + z^2` below
/// `RING_GUARD_PUBLIC * a^2`.
pub const RING_GUARD_PUBLIC: f64 = 1e-8;
/// Tighter guard used internally by the integrator, so that the ring
/// termination event (at `1e-10 * a^2`) always fires before evaluation
/// can fail.
pub(crate) const RING_GUARD_INTERNAL: f64 = 1e-12;
/// Guard radius for the acoustic coordinate axis.
pub const AXIS_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Guard {
    Public,
    Internal,
}

/// Oblate radial coordinate for spin `a`: the nonnegative root of
/// `rho^2/(r^2+a^2) + z^2/r^2 = 1`.
///
/// Closed form `r^2 = (d + sqrt(d^2 + 4 a^2 z^2)) / 2` with
/// `d = rho^2 + z^2 - a^2`, rationalized when `d < 0` to avoid
/// cancellation near the equatorial disc.
pub fn kerr_r(rho: f64, z: f64, a: f64) -> Result<f64, MetricError> {
    if !(rho.is_finite() && z.is_finite() && a.is_finite()) {
        return Err(MetricError::DomainError("non-finite coordinates"));
    }
    if rho < 0.0 {
        return Err(MetricError::DomainError("rho must be nonnegative"));
    }
    if a < 0.0 {
        return Err(MetricError::DomainError("spin must be nonnegative"));
    }
    if a > 0.0 && z == 0.0 && rho <= a {
        // The relation pins r = 0 on the whole closed equatorial disc.
        return Err(MetricError::DegeneratePoint {
            rho,
            z,
            what: "equatorial disc rho <= a, z = 0",
        });
    }
    let d = rho * rho + z * z - a * a;
    let h = f64::hypot(d, 2.0 * a * z);
    let r2 = if d >= 0.0 {
        0.5 * (d + h)
    } else {
        // r^2 = 2 a^2 z^2 / (h - d); exact rationalization of the root.
        2.0 * a * a * z * z / (h - d)
    };
    Ok(r2.sqrt())
}

/// The two metric backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricModel {
    /// Planar vortex flow. `radial` is the strength A of the radial flow
    /// (negative: inflow / black hole; positive: outflow / white hole;
    /// zero: pure rotation with no horizon), `angular` is the rotation
    /// strength B.
    Acoustic { radial: f64, angular: f64 },
    /// Rotating black hole with `mass` m > 0 and `spin` a >= 0.
    Kerr { mass: f64, spin: f64 },
}

impl MetricModel {
    pub fn acoustic(radial: f64, angular: f64) -> Result<Self, MetricError> {
        if !(radial.is_finite() && angular.is_finite()) {
            return Err(MetricError::DomainError("non-finite flow parameters"));
        }
        if radial == 0.0 && angular == 0.0 {
            return Err(MetricError::DomainError("acoustic flow must be nonzero"));
        }
        Ok(MetricModel::Acoustic { radial, angular })
    }

    pub fn kerr(mass: f64, spin: f64) -> Result<Self, MetricError> {
        if !(mass.is_finite() && spin.is_finite()) {
            return Err(MetricError::DomainError("non-finite Kerr parameters"));
        }
        if mass <= 0.0 {
            return Err(MetricError::DomainError("mass must be positive"));
        }
        if spin < 0.0 {
            return Err(MetricError::DomainError("spin must be nonnegative"));
        }
        Ok(MetricModel::Kerr { mass, spin })
    }

    /// The time-reversed flow: the black-hole vortex becomes the white
    /// hole and vice versa. Reversing `x0` (equivalently the sign of
    /// `xi0`) maps rays of one model onto rays of the other, which is
    /// how white-hole behavior is verified. Only the vortex backend has
    /// this parameter-level reversal.
    pub fn time_reversed(&self) -> Result<Self, MetricError> {
        match *self {
            MetricModel::Acoustic { radial, angular } => MetricModel::acoustic(-radial, -angular),
            MetricModel::Kerr { .. } => Err(MetricError::DomainError(
                "time reversal is a parameter map only for the vortex backend",
            )),
        }
    }

    /// Kerr horizon radii `(r_minus, r_plus)` in the oblate coordinate;
    /// `None` for the acoustic backend and for naked Kerr (`a > m`).
    pub fn horizon_r(&self) -> Option<(f64, f64)> {
        match *self {
            MetricModel::Kerr { mass, spin } if spin <= mass => {
                let s = (mass * mass - spin * spin).sqrt();
                Some((mass - s, mass + s))
            }
            _ => None,
        }
    }

    /// Cylindrical radii of the horizons on the equator:
    /// Kerr `sqrt(a^2 + r_pm^2)`, acoustic `|A|` (both entries equal).
    pub fn horizon_rho_equatorial(&self) -> Option<(f64, f64)> {
        match *self {
            MetricModel::Acoustic { radial, .. } => {
                if radial == 0.0 {
                    None
                } else {
                    Some((radial.abs(), radial.abs()))
                }
            }
            MetricModel::Kerr { spin, .. } => self
                .horizon_r()
                .map(|(rm, rp)| (f64::hypot(spin, rm), f64::hypot(spin, rp))),
        }
    }

    /// Cylindrical radius of the ergosphere on the equator
    /// (`K = 1` at `z = 0`).
    pub fn ergosphere_rho_equatorial(&self) -> f64 {
        match *self {
            MetricModel::Acoustic { radial, angular } => f64::hypot(radial, angular),
            MetricModel::Kerr { mass, spin } => f64::hypot(2.0 * mass, spin),
        }
    }

    /// Metric fields at a point.
    pub fn fields(&self, p: &SpatialPoint) -> Result<MetricFields, MetricError> {
        self.fields_guarded(p, Guard::Public)
    }

    pub(crate) fn fields_guarded(
        &self,
        p: &SpatialPoint,
        guard: Guard,
    ) -> Result<MetricFields, MetricError> {
        match *self {
            MetricModel::Acoustic { radial, angular } => {
                let floor = match guard {
                    Guard::Public => AXIS_GUARD,
                    Guard::Internal => 0.0,
                };
                if p.rho <= floor {
                    return Err(MetricError::DegeneratePoint {
                        rho: p.rho,
                        z: p.z,
                        what: "acoustic axis",
                    });
                }
                let s = f64::hypot(radial, angular);
                Ok(MetricFields {
                    k: (s / p.rho) * (s / p.rho),
                    b_rho: radial / s,
                    b_phi: angular / s,
                    b_z: 0.0,
                    r: 0.0,
                })
            }
            MetricModel::Kerr { mass, spin } => {
                self.check_ring(p, guard)?;
                let r = kerr_r(p.rho, p.z, spin)?;
                let p4 = r * r * r * r + spin * spin * p.z * p.z;
                let r2a2 = r * r + spin * spin;
                Ok(MetricFields {
                    k: 2.0 * mass * r * r * r / p4,
                    b_rho: r * p.rho / r2a2,
                    b_phi: spin * p.rho / r2a2,
                    b_z: if p.z == 0.0 { 0.0 } else { p.z / r },
                    r,
                })
            }
        }
    }

    fn check_ring(&self, p: &SpatialPoint, guard: Guard) -> Result<(), MetricError> {
        if let MetricModel::Kerr { spin, .. } = *self {
            if spin > 0.0 {
                let d2 = (p.rho - spin) * (p.rho - spin) + p.z * p.z;
                let tol = match guard {
                    Guard::Public => RING_GUARD_PUBLIC,
                    Guard::Internal => RING_GUARD_INTERNAL,
                };
                if d2 < tol * spin * spin {
                    return Err(MetricError::DegeneratePoint {
                        rho: p.rho,
                        z: p.z,
                        what: "ring singularity",
                    });
                }
            }
        }
        Ok(())
    }

    /// Classify a point by region. For Kerr with `a < m` both horizons
    /// separate regions; for `a >= m` there are no horizon classes and the
    /// split is `K > 1` (ergoregion) vs exterior / interior.
    pub fn classify(&self, p: &SpatialPoint) -> Result<Region, MetricError> {
        self.classify_guarded(p, Guard::Public)
    }

    pub(crate) fn classify_guarded(
        &self,
        p: &SpatialPoint,
        guard: Guard,
    ) -> Result<Region, MetricError> {
        match *self {
            MetricModel::Acoustic { radial, angular } => {
                let floor = match guard {
                    Guard::Public => AXIS_GUARD,
                    Guard::Internal => 0.0,
                };
                if p.rho <= floor {
                    return Err(MetricError::DegeneratePoint {
                        rho: p.rho,
                        z: p.z,
                        what: "acoustic axis",
                    });
                }
                let ergo = f64::hypot(radial, angular);
                let horizon = radial.abs();
                Ok(if p.rho > ergo {
                    Region::Exterior
                } else if p.rho > horizon {
                    Region::Ergoregion
                } else {
                    Region::BetweenHorizons
                })
            }
            MetricModel::Kerr { mass, spin } => {
                let f = self.fields_guarded(p, guard)?;
                if spin < mass {
                    let (r_minus, r_plus) = self.horizon_r().expect("spin < mass");
                    Ok(if f.r < r_minus {
                        Region::InsideInner
                    } else if f.r < r_plus {
                        Region::BetweenHorizons
                    } else if f.k > 1.0 {
                        Region::Ergoregion
                    } else {
                        Region::Exterior
                    })
                } else if f.k > 1.0 {
                    Ok(Region::Ergoregion)
                } else if f.r <= mass {
                    Ok(Region::NoHorizonInterior)
                } else {
                    Ok(Region::Exterior)
                }
            }
        }
    }
}

/// Coefficients of the principal symbol at a point, with their first
/// spatial derivatives. The symbol reads
///
/// ```text
/// H = alpha xi0^2 + 2 xi0 (u . xi) + (w . xi)^2
///     - xi_rho^2 - xi_phi^2/rho^2 - xi_z^2
/// ```
///
/// where `xi = (xi_rho, xi_phi, xi_z)` are plain covector components and
/// `u`, `w` absorb the `1/rho` factors of the angular direction.
/// Kerr: `alpha = 1 + K`, `u = -K (b_rho, b_phi/rho, b_z)`,
/// `w = sqrt(K) (b_rho, b_phi/rho, b_z)`.
/// Acoustic: `alpha = 1`, `u = w = (A/rho, B/rho^2, 0)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SymbolJet {
    pub alpha: f64,
    pub u: [f64; 3],
    pub w: [f64; 3],
    pub d_rho_alpha: f64,
    pub d_rho_u: [f64; 3],
    pub d_rho_w: [f64; 3],
    pub d_z_alpha: f64,
    pub d_z_u: [f64; 3],
    pub d_z_w: [f64; 3],
    pub rho: f64,
}

impl MetricModel {
    pub(crate) fn symbol_jet(
        &self,
        p: &SpatialPoint,
        guard: Guard,
    ) -> Result<SymbolJet, MetricError> {
        match *self {
            MetricModel::Acoustic { radial, angular } => {
                let floor = match guard {
                    Guard::Public => AXIS_GUARD,
                    Guard::Internal => 0.0,
                };
                if p.rho <= floor {
                    return Err(MetricError::DegeneratePoint {
                        rho: p.rho,
                        z: p.z,
                        what: "acoustic axis",
                    });
                }
                let rho = p.rho;
                let u = [radial / rho, angular / (rho * rho), 0.0];
                let du = [
                    -radial / (rho * rho),
                    -2.0 * angular / (rho * rho * rho),
                    0.0,
                ];
                Ok(SymbolJet {
                    alpha: 1.0,
                    u,
                    w: u,
                    d_rho_alpha: 0.0,
                    d_rho_u: du,
                    d_rho_w: du,
                    d_z_alpha: 0.0,
                    d_z_u: [0.0; 3],
                    d_z_w: [0.0; 3],
                    rho,
                })
            }
            MetricModel::Kerr { mass, spin } => {
                self.check_ring(p, guard)?;
                let a = spin;
                let r = kerr_r(p.rho, p.z, a)?;
                let z = p.z;
                let rho = p.rho;
                let r2 = r * r;
                let r2a2 = r2 + a * a;
                let p4 = r2 * r2 + a * a * z * z;
                // Implicit derivatives of the oblate radius.
                let r_rho = rho * r * r2 / p4;
                let r_z = z * r * r2a2 / p4;
                let k = 2.0 * mass * r * r2 / p4;
                let dp4_rho = 4.0 * r * r2 * r_rho;
                let dp4_z = 4.0 * r * r2 * r_z + 2.0 * a * a * z;
                let dk_rho = 2.0 * mass * (3.0 * r2 * r_rho * p4 - r * r2 * dp4_rho) / (p4 * p4);
                let dk_z = 2.0 * mass * (3.0 * r2 * r_z * p4 - r * r2 * dp4_z) / (p4 * p4);
                // kv = (b_rho, b_phi/rho, b_z) and its derivatives.
                let kv = [r * rho / r2a2, a / r2a2, if z == 0.0 { 0.0 } else { z / r }];
                let dkv_rho = [
                    (r_rho * rho + r) / r2a2 - r * rho * 2.0 * r * r_rho / (r2a2 * r2a2),
                    -2.0 * a * r * r_rho / (r2a2 * r2a2),
                    -z * r_rho / r2,
                ];
                let dkv_z = [
                    rho * r_z * (a * a - r2) / (r2a2 * r2a2),
                    -2.0 * a * r * r_z / (r2a2 * r2a2),
                    (r - z * r_z) / r2,
                ];
                let sk = k.sqrt();
                let dsk_rho = dk_rho / (2.0 * sk);
                let dsk_z = dk_z / (2.0 * sk);
                let scale = |c: f64, v: [f64; 3]| [c * v[0], c * v[1], c * v[2]];
                let combine = |c: f64, dc: f64, v: [f64; 3], dv: [f64; 3]| {
                    [
                        dc * v[0] + c * dv[0],
                        dc * v[1] + c * dv[1],
                        dc * v[2] + c * dv[2],
                    ]
                };
                Ok(SymbolJet {
                    alpha: 1.0 + k,
                    u: scale(-k, kv),
                    w: scale(sk, kv),
                    d_rho_alpha: dk_rho,
                    d_rho_u: combine(-k, -dk_rho, kv, dkv_rho),
                    d_rho_w: combine(sk, dsk_rho, kv, dkv_rho),
                    d_z_alpha: dk_z,
                    d_z_u: combine(-k, -dk_z, kv, dkv_z),
                    d_z_w: combine(sk, dsk_z, kv, dkv_z),
                    rho,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Bisection oracle for the oblate radius: solves the defining relation
    /// directly, with no algebraic rearrangement shared with `kerr_r`.
    fn kerr_r_bisect(rho: f64, z: f64, a: f64) -> f64 {
        let f = |r: f64| rho * rho / (r * r + a * a) + z * z / (r * r) - 1.0;
        let mut lo = 1e-12;
        let mut hi = (rho * rho + z * z).sqrt() + a + 1.0;
        assert!(f(lo) > 0.0 && f(hi) < 0.0, "oracle bracket");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn oblate_radius_matches_bisection_oracle() {
        let cases = [
            (2.0, 0.5, 0.8),
            (2.0, 1e-6, 0.8),
            (0.5, 0.3, 0.8), // inside the ergoregion, off the disc
            (3.0, -2.0, 1.2),
            (0.79, 1e-3, 0.8), // rho < a, close to the disc
            (5.0, 0.0, 0.0),
        ];
        for (rho, z, a) in cases {
            let r = kerr_r(rho, z, a).unwrap();
            if z == 0.0 && a == 0.0 {
                assert_relative_eq!(r, rho, max_relative = 1e-14);
                continue;
            }
            let oracle = kerr_r_bisect(rho, z, a);
            assert_relative_eq!(r, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn oblate_radius_known_values() {
        // Equatorial: r = sqrt(rho^2 - a^2).
        let r = kerr_r(2.0, 0.0, 0.8).unwrap();
        assert_relative_eq!(r, 3.36f64.sqrt(), max_relative = 1e-15);
        assert_abs_diff_eq!(r, 1.833030, epsilon = 1e-6);
        // Off the equator, frozen from the bisection oracle.
        let r = kerr_r(2.0, 0.5, 0.8).unwrap();
        assert_abs_diff_eq!(r, 1.911489, epsilon = 1e-6);
        // Defining relation holds.
        let (rho, z, a) = (2.0, 0.5, 0.8);
        assert_abs_diff_eq!(
            rho * rho / (r * r + a * a) + z * z / (r * r),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn oblate_radius_disc_is_degenerate() {
        assert!(matches!(
            kerr_r(0.5, 0.0, 0.8),
            Err(MetricError::DegeneratePoint { .. })
        ));
        assert!(matches!(
            kerr_r(0.8, 0.0, 0.8),
            Err(MetricError::DegeneratePoint { .. })
        ));
        // Just outside the disc is fine.
        assert!(kerr_r(0.8000001, 0.0, 0.8).is_ok());
        // Above the disc is fine and continuous toward z -> 0.
        let r = kerr_r(0.5, 1e-8, 0.8).unwrap();
        assert!(r > 0.0 && r < 1e-6);
    }

    #[test]
    fn kerr_fields_on_axis_are_regular() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let f = m.fields(&SpatialPoint::new(0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(f.r, 2.0, max_relative = 1e-14);
        assert_abs_diff_eq!(f.b_rho, 0.0);
        assert_abs_diff_eq!(f.b_phi, 0.0);
        assert_relative_eq!(f.b_z, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn kerr_fields_equatorial_values() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let f = m.fields(&SpatialPoint::equatorial(2.0, 0.0)).unwrap();
        // K = 2m/r on the equator.
        assert_relative_eq!(f.k, 2.0 / 3.36f64.sqrt(), max_relative = 1e-14);
        assert_abs_diff_eq!(f.k, 1.091089, epsilon = 1e-6);
        assert_relative_eq!(f.b_rho, 3.36f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(f.b_phi, 0.8 / 2.0, max_relative = 1e-14);
        assert_abs_diff_eq!(f.b_z, 0.0);
    }

    #[test]
    fn unit_vector_property_holds_everywhere() {
        let kerr = MetricModel::kerr(1.0, 0.8).unwrap();
        let acoustic = MetricModel::acoustic(-1.0, 10.0).unwrap();
        let pts = [
            SpatialPoint::new(2.0, 0.3, 0.5),
            SpatialPoint::new(1.7, -1.0, -0.2),
            SpatialPoint::new(0.9, 0.0, 0.05),
            SpatialPoint::new(12.0, 4.0, 3.0),
        ];
        for p in pts {
            for model in [kerr, acoustic] {
                let f = model.fields(&p).unwrap();
                let norm = f.b_rho * f.b_rho + f.b_phi * f.b_phi + f.b_z * f.b_z;
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
                assert!(f.k > 0.0);
            }
        }
    }

    #[test]
    fn acoustic_fields_and_ergosphere() {
        let m = MetricModel::acoustic(-1.0, 10.0).unwrap();
        let s = 101f64.sqrt();
        // On the ergosphere K = 1 exactly.
        let f = m.fields(&SpatialPoint::equatorial(s, 0.0)).unwrap();
        assert_abs_diff_eq!(f.k, 1.0, epsilon = 1e-14);
        assert_relative_eq!(f.b_rho, -1.0 / s, max_relative = 1e-14);
        assert_relative_eq!(f.b_phi, 10.0 / s, max_relative = 1e-14);
        // Horizon sits where K b_rho^2 = 1, i.e. rho = |A|.
        let f = m.fields(&SpatialPoint::equatorial(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.k * f.b_rho * f.b_rho, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn horizon_and_ergosphere_radii() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let (rm, rp) = m.horizon_r().unwrap();
        assert_relative_eq!(rm, 0.4, max_relative = 1e-14);
        assert_relative_eq!(rp, 1.6, max_relative = 1e-14);
        let (hm, hp) = m.horizon_rho_equatorial().unwrap();
        assert_abs_diff_eq!(hm, 0.894427, epsilon = 1e-6);
        assert_abs_diff_eq!(hp, 1.788854, epsilon = 1e-6);
        assert_abs_diff_eq!(m.ergosphere_rho_equatorial(), 2.154066, epsilon = 1e-6);

        let naked = MetricModel::kerr(1.0, 1.2).unwrap();
        assert!(naked.horizon_r().is_none());
        let extremal = MetricModel::kerr(1.0, 1.0).unwrap();
        let (rm, rp) = extremal.horizon_r().unwrap();
        assert_relative_eq!(rm, rp, max_relative = 1e-15);
    }

    #[test]
    fn classify_kerr_regions() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let cases = [
            (3.0, Region::Exterior),
            (2.0, Region::Ergoregion),
            (1.0, Region::BetweenHorizons),
            (0.85, Region::InsideInner),
        ];
        for (rho, want) in cases {
            assert_eq!(m.classify(&SpatialPoint::equatorial(rho, 0.0)).unwrap(), want);
        }
        // Boundary radii on the equator.
        let ergo = m.ergosphere_rho_equatorial();
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(ergo + 1e-9, 0.0)).unwrap(),
            Region::Exterior
        );
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(ergo - 1e-9, 0.0)).unwrap(),
            Region::Ergoregion
        );
    }

    #[test]
    fn classify_naked_kerr_is_two_phase() {
        let m = MetricModel::kerr(1.0, 1.2).unwrap();
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(3.0, 0.0)).unwrap(),
            Region::Exterior
        );
        // Equatorially the whole band a < rho < sqrt(4m^2 + a^2) is ergoregion.
        for rho in [1.3, 1.8, 2.3] {
            assert_eq!(
                m.classify(&SpatialPoint::equatorial(rho, 0.0)).unwrap(),
                Region::Ergoregion,
                "rho = {rho}"
            );
        }
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(2.4, 0.0)).unwrap(),
            Region::Exterior
        );
    }

    #[test]
    fn classify_acoustic_breakpoints() {
        let m = MetricModel::acoustic(-1.0, 10.0).unwrap();
        let ergo = 101f64.sqrt();
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(ergo + 1e-12, 0.0)).unwrap(),
            Region::Exterior
        );
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(5.0, 0.0)).unwrap(),
            Region::Ergoregion
        );
        assert_eq!(
            m.classify(&SpatialPoint::equatorial(1.0 - 1e-12, 0.0)).unwrap(),
            Region::BetweenHorizons
        );
        // Rotation-only flow has no horizon class.
        let naked = MetricModel::acoustic(0.0, 7.0).unwrap();
        assert_eq!(
            naked.classify(&SpatialPoint::equatorial(3.0, 0.0)).unwrap(),
            Region::Ergoregion
        );
        assert_eq!(
            naked.classify(&SpatialPoint::equatorial(8.0, 0.0)).unwrap(),
            Region::Exterior
        );
    }

    #[test]
    fn ring_guard_rejects_near_ring_points() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let near = SpatialPoint::new(0.8 + 1e-5 * 0.8, 0.0, 0.0);
        assert!(matches!(
            m.fields(&near),
            Err(MetricError::DegeneratePoint { .. })
        ));
        // The internal guard is tighter: the same point evaluates.
        assert!(m.fields_guarded(&near, Guard::Internal).is_ok());
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let kerr = MetricModel::kerr(1.0, 0.8).unwrap();
        let acoustic = MetricModel::acoustic(-1.0, 10.0).unwrap();
        let pts = [
            SpatialPoint::new(2.0, 0.0, 0.4),
            SpatialPoint::new(1.2, 0.0, -0.7),
            SpatialPoint::new(2.4, 0.0, 0.05),
        ];
        let h = 1e-6;
        for model in [kerr, acoustic] {
            for p in pts {
                let jet = model.symbol_jet(&p, Guard::Public).unwrap();
                let jp = model
                    .symbol_jet(&SpatialPoint::new(p.rho + h, p.phi, p.z), Guard::Public)
                    .unwrap();
                let jm = model
                    .symbol_jet(&SpatialPoint::new(p.rho - h, p.phi, p.z), Guard::Public)
                    .unwrap();
                assert_relative_eq!(
                    jet.d_rho_alpha,
                    (jp.alpha - jm.alpha) / (2.0 * h),
                    max_relative = 1e-6,
                    epsilon = 1e-9
                );
                for i in 0..3 {
                    assert_relative_eq!(
                        jet.d_rho_u[i],
                        (jp.u[i] - jm.u[i]) / (2.0 * h),
                        max_relative = 1e-6,
                        epsilon = 1e-9
                    );
                    assert_relative_eq!(
                        jet.d_rho_w[i],
                        (jp.w[i] - jm.w[i]) / (2.0 * h),
                        max_relative = 1e-6,
                        epsilon = 1e-9
                    );
                }
                let jp = model
                    .symbol_jet(&SpatialPoint::new(p.rho, p.phi, p.z + h), Guard::Public)
                    .unwrap();
                let jm = model
                    .symbol_jet(&SpatialPoint::new(p.rho, p.phi, p.z - h), Guard::Public)
                    .unwrap();
                assert_relative_eq!(
                    jet.d_z_alpha,
                    (jp.alpha - jm.alpha) / (2.0 * h),
                    max_relative = 1e-6,
                    epsilon = 1e-9
                );
                for i in 0..3 {
                    assert_relative_eq!(
                        jet.d_z_u[i],
                        (jp.u[i] - jm.u[i]) / (2.0 * h),
                        max_relative = 1e-6,
                        epsilon = 1e-9
                    );
                    assert_relative_eq!(
                        jet.d_z_w[i],
                        (jp.w[i] - jm.w[i]) / (2.0 * h),
                        max_relative = 1e-6,
                        epsilon = 1e-9
                    );
                }
            }
        }
    }
}
