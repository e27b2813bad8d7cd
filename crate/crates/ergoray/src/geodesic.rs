//! Null-bicharacteristic integration with event detection.
//!
//! The phase state is `[x0, rho, phi, z, xi0, xi_rho, xi_phi, xi_z]`,
//! integrated in a parameter `s` that always increases. The flow of `H`
//! is multiplied by an orientation sign so that coordinate time `x0`
//! moves in the requested direction regardless of branch: on the Minus
//! branch `dH/dxi0 < 0`, so the raw flow runs `x0` backward. The field
//! is also normalized by `1 / (1 + |xi_spatial|^2)`: a positive
//! reparameterization that leaves the trajectory and all `x0`-based
//! quantities unchanged, but stops the parameter from compressing into
//! an unresolvable sliver when the covector blows up on asymptotic
//! horizon approaches.
//!
//! Stationarity and axisymmetry make `xi0` and `xi_phi` exactly constant;
//! their right-hand sides are literal zeros, so conservation holds to the
//! bit, not merely to tolerance. The same holds for the equatorial plane
//! of the rotating backend: `dz/ds` and `dxi_z/ds` both carry factors
//! that vanish identically at `z = xi_z = 0`.

use crate::hamiltonian::{
    delta1_jet, delta2_jet, eval_h_jet, grad_h_jet, lambda_roots_jet, Branch, Covector,
};
use crate::metric::{Guard, MetricError, MetricModel, Region, SpatialPoint};
use crate::ode::{DenseSegment, OdeError, OdeOptions, Stepper, ATOL_DEFAULT, RTOL_DEFAULT};
use serde::{Deserialize, Serialize};

/// Direction of coordinate time along the ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// What the integrator watches for and when it stops.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StopSpec {
    /// Terminal bound on `|x0 - x0_start|`.
    pub max_x0: f64,
    /// Terminal radius for escape, if any.
    pub escape_rho: Option<f64>,
    /// Whether crossing the outer horizon ends the run.
    pub stop_on_outer_horizon: bool,
    /// Whether crossing the inner horizon ends the run.
    pub stop_on_inner_horizon: bool,
    /// Arm the asymptotic-approach guards (resolution floor on the
    /// distance to the outer horizon plus the stalled-spiral cutoff).
    /// Only meaningful on legs that approach a horizon without crossing
    /// it; legs that cross must leave this off.
    pub detect_horizon_approach: bool,
    pub rtol: f64,
    pub atol: f64,
    /// The run fails once `|H| > coeff * (1 + |xi|^2)` at an accepted step.
    pub h_residual_coeff: f64,
    pub max_steps: usize,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            max_x0: 200.0,
            escape_rho: None,
            stop_on_outer_horizon: false,
            stop_on_inner_horizon: false,
            detect_horizon_approach: false,
            rtol: RTOL_DEFAULT,
            atol: ATOL_DEFAULT,
            h_residual_coeff: 1e-8,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TurningPoint,
    ErgosphereCross,
    OuterHorizonCross,
    InnerHorizonCross,
    Escape,
    RingTermination,
    CenterTermination,
    MaxTime,
    NumericalFailure,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::TurningPoint => "turning_point",
            EventKind::ErgosphereCross => "ergosphere_cross",
            EventKind::OuterHorizonCross => "outer_horizon_cross",
            EventKind::InnerHorizonCross => "inner_horizon_cross",
            EventKind::Escape => "escape",
            EventKind::RingTermination => "ring_termination",
            EventKind::CenterTermination => "center_termination",
            EventKind::MaxTime => "max_time",
            EventKind::NumericalFailure => "numerical_failure",
        }
    }
}

/// A located event. `data` carries kind-specific extra information:
/// the estimated decay rate for approach-guard stops, nothing otherwise.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
    pub x0: f64,
    pub point: SpatialPoint,
    pub xi: Covector,
    pub data: Option<f64>,
}

/// One accepted integration step, with on-shell diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathSample {
    pub s: f64,
    pub x0: f64,
    pub point: SpatialPoint,
    pub xi: Covector,
    pub h_residual: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub region: Region,
}

/// Initial data for a ray: a point, a spatial covector, and the branch
/// frequency chosen on-shell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RayStart {
    pub x0: f64,
    pub point: SpatialPoint,
    pub xi: Covector,
    pub branch: Branch,
}

/// Fix `xi0` to the requested branch root at the starting point.
pub fn init_ray(
    model: &MetricModel,
    point: SpatialPoint,
    eta: Covector,
    branch: Branch,
    x0: f64,
) -> Result<RayStart, MetricError> {
    let jet = model.symbol_jet(&point, Guard::Public)?;
    let roots = lambda_roots_jet(&jet, &eta);
    let xi0 = roots.branch(branch);
    Ok(RayStart {
        x0,
        point,
        xi: eta.with_xi0(xi0),
        branch,
    })
}

/// An integrated ray with its samples, events, and dense segments.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub model: MetricModel,
    pub branch: Branch,
    pub direction: Direction,
    pub samples: Vec<PathSample>,
    pub events: Vec<Event>,
    segments: Vec<DenseSegment<8>>,
}

impl GeodesicPath {
    pub fn terminal_event(&self) -> Option<&Event> {
        self.events.last().filter(|e| {
            matches!(
                e.kind,
                EventKind::Escape
                    | EventKind::RingTermination
                    | EventKind::CenterTermination
                    | EventKind::MaxTime
                    | EventKind::NumericalFailure
                    | EventKind::OuterHorizonCross
                    | EventKind::InnerHorizonCross
            )
        })
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn last_sample(&self) -> &PathSample {
        self.samples.last().expect("path has at least the start sample")
    }

    /// Interpolated phase state at coordinate time `x0`, if the run
    /// covers it. `x0` is monotone along the ray, so the lookup is a
    /// binary search over segments plus a bisection inside one.
    pub fn state_at_x0(&self, x0: f64) -> Option<(SpatialPoint, Covector)> {
        if self.segments.is_empty() {
            return None;
        }
        let fwd = self.direction == Direction::Forward;
        let key = |v: f64| if fwd { v } else { -v };
        let t = key(x0);
        let first = self.segments.first().unwrap();
        let last = self.segments.last().unwrap();
        let t_lo = key(first.eval(first.s0)[0]);
        // The final segment may extend past the terminal event; clamp to
        // the last recorded sample.
        let s_end = self.samples.last().map(|smp| smp.s).unwrap_or(last.s1());
        let s_end = s_end.min(last.s1());
        let t_hi = key(last.eval(s_end)[0]);
        if t < t_lo - 1e-12 || t > t_hi + 1e-12 {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|seg| key(seg.eval(seg.s1().min(s_end))[0]) < t)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        let mut lo = seg.s0;
        let mut hi = seg.s1().min(s_end.max(seg.s0));
        for _ in 0..200 {
            if (hi - lo).abs() <= 1e-14 * hi.abs().max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if key(seg.eval(mid)[0]) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y = seg.eval(0.5 * (lo + hi));
        Some(state_of(&y))
    }
}

fn state_of(y: &[f64; 8]) -> (SpatialPoint, Covector) {
    (
        SpatialPoint::new(y[1], y[2], y[3]),
        Covector::new(y[4], y[5], y[6], y[7]),
    )
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeodesicError {
    #[error("ray start invalid: {0}")]
    Start(#[from] MetricError),
    #[error("radial slope quotient degenerate: |dH/dxi0| = {dh_dxi0:e} at rho = {rho}")]
    HorizonQuotient { dh_dxi0: f64, rho: f64 },
}

/// Radial coordinate speed `d rho / d x0 = H_{xi_rho} / H_{xi_0}` at one
/// phase-space state. Diagnostic quotient only; integration never forms
/// it. Degenerates where the ray momentarily has no `x0` motion.
pub fn drho_dx0(
    model: &MetricModel,
    point: &SpatialPoint,
    xi: &Covector,
) -> Result<f64, GeodesicError> {
    let grad = crate::hamiltonian::grad_h(model, point, xi)?;
    if grad.d_xi0.abs() < 1e-12 {
        return Err(GeodesicError::HorizonQuotient {
            dh_dxi0: grad.d_xi0,
            rho: point.rho,
        });
    }
    Ok(grad.d_xi_rho / grad.d_xi0)
}

/// Oriented flow sign: +-1 so that `x0` advances in `direction`.
fn orientation(branch: Branch, direction: Direction) -> f64 {
    branch.sign() * direction.sign()
}

struct EventFn<'a> {
    kind: EventKind,
    terminal: bool,
    g: Box<dyn Fn(&[f64; 8]) -> f64 + 'a>,
}

/// Integrate a ray until a terminal event fires.
pub fn integrate(
    model: &MetricModel,
    start: &RayStart,
    direction: Direction,
    stops: &StopSpec,
) -> Result<GeodesicPath, GeodesicError> {
    let sigma = orientation(start.branch, direction);
    let m = *model;

    let rhs = move |_s: f64, y: &[f64; 8]| -> Option<[f64; 8]> {
        let p = SpatialPoint::new(y[1], y[2], y[3]);
        if !p.rho.is_finite() || p.rho <= 0.0 {
            return None;
        }
        let jet = m.symbol_jet(&p, Guard::Internal).ok()?;
        let xi = Covector::new(y[4], y[5], y[6], y[7]);
        let g = grad_h_jet(&jet, &xi);
        let ang = xi.xi_phi / p.rho;
        let q = xi.xi_rho * xi.xi_rho + ang * ang + xi.xi_z * xi.xi_z;
        let c = sigma / (1.0 + q);
        Some([
            c * g.d_xi0,
            c * g.d_xi_rho,
            c * g.d_xi_phi,
            c * g.d_xi_z,
            0.0,
            -c * g.d_rho,
            0.0,
            -c * g.d_z,
        ])
    };
    let mut rhs = rhs;

    // Event functions, sign changes located on dense output.
    let x0_start = start.x0;
    let mut fns: Vec<EventFn> = Vec::new();
    fns.push(EventFn {
        kind: EventKind::TurningPoint,
        terminal: false,
        g: Box::new(move |y| {
            let (p, xi) = state_of(y);
            match m.symbol_jet(&p, Guard::Internal) {
                Ok(jet) => grad_h_jet(&jet, &xi).d_xi_rho,
                Err(_) => f64::NAN,
            }
        }),
    });
    fns.push(EventFn {
        kind: EventKind::ErgosphereCross,
        terminal: false,
        g: Box::new(move |y| {
            let (p, _) = state_of(y);
            match m.fields_guarded(&p, Guard::Internal) {
                Ok(f) => f.k - 1.0,
                Err(_) => f64::NAN,
            }
        }),
    });
    match m {
        MetricModel::Acoustic { radial, .. } => {
            if radial != 0.0 {
                let a = radial.abs();
                fns.push(EventFn {
                    kind: EventKind::OuterHorizonCross,
                    terminal: stops.stop_on_outer_horizon,
                    g: Box::new(move |y| y[1] - a),
                });
            }
            let floor = 1e-8 * start.point.rho;
            fns.push(EventFn {
                kind: EventKind::CenterTermination,
                terminal: true,
                g: Box::new(move |y| y[1] - floor),
            });
        }
        MetricModel::Kerr { spin, .. } => {
            if let Some((r_minus, r_plus)) = m.horizon_r() {
                fns.push(EventFn {
                    kind: EventKind::OuterHorizonCross,
                    terminal: stops.stop_on_outer_horizon,
                    g: Box::new(move |y| match crate::metric::kerr_r(y[1], y[3], spin) {
                        Ok(r) => r - r_plus,
                        Err(_) => f64::NAN,
                    }),
                });
                if r_minus < r_plus {
                    fns.push(EventFn {
                        kind: EventKind::InnerHorizonCross,
                        terminal: stops.stop_on_inner_horizon,
                        g: Box::new(move |y| match crate::metric::kerr_r(y[1], y[3], spin) {
                            Ok(r) => r - r_minus,
                            Err(_) => f64::NAN,
                        }),
                    });
                }
            }
            if spin > 0.0 {
                let tol2 = 1e-10 * spin * spin;
                fns.push(EventFn {
                    kind: EventKind::RingTermination,
                    terminal: true,
                    g: Box::new(move |y| {
                        (y[1] - spin) * (y[1] - spin) + y[3] * y[3] - tol2
                    }),
                });
            }
        }
    }
    if let Some(rho_esc) = stops.escape_rho {
        fns.push(EventFn {
            kind: EventKind::Escape,
            terminal: true,
            g: Box::new(move |y| y[1] - rho_esc),
        });
    }
    let max_x0 = stops.max_x0;
    fns.push(EventFn {
        kind: EventKind::MaxTime,
        terminal: true,
        g: Box::new(move |y| max_x0 - (y[0] - x0_start).abs()),
    });

    // Distance to the outer horizon, for the approach guards.
    let approach_g: Option<Box<dyn Fn(&[f64; 8]) -> f64>> = match m {
        MetricModel::Acoustic { radial, .. } if radial != 0.0 => {
            let a = radial.abs();
            Some(Box::new(move |y: &[f64; 8]| y[1] - a))
        }
        MetricModel::Kerr { spin, .. } => m.horizon_r().map(|(_, r_plus)| {
            Box::new(move |y: &[f64; 8]| match crate::metric::kerr_r(y[1], y[3], spin) {
                Ok(r) => r - r_plus,
                Err(_) => f64::NAN,
            }) as Box<dyn Fn(&[f64; 8]) -> f64>
        }),
        _ => None,
    };
    let approach_scale = match m {
        MetricModel::Acoustic { radial, .. } => radial.abs(),
        MetricModel::Kerr { .. } => m.horizon_r().map(|(_, rp)| rp).unwrap_or(0.0),
    };

    let y0 = [
        start.x0,
        start.point.rho,
        start.point.phi,
        start.point.z,
        start.xi.xi0,
        start.xi.xi_rho,
        start.xi.xi_phi,
        start.xi.xi_z,
    ];
    // The start must be evaluable under the public guard.
    let start_jet = m.symbol_jet(&start.point, Guard::Public)?;

    let opts = OdeOptions {
        rtol: stops.rtol,
        atol: stops.atol,
        h_max: f64::INFINITY,
        max_steps: stops.max_steps,
    };
    let mut stepper: Stepper<8> = Stepper::new(0.0, y0, opts);

    let mut path = GeodesicPath {
        model: m,
        branch: start.branch,
        direction,
        samples: Vec::new(),
        events: Vec::new(),
        segments: Vec::new(),
    };
    push_sample(&mut path, &m, 0.0, &y0, Some(&start_jet));

    let mut g_prev: Vec<f64> = fns.iter().map(|f| (f.g)(&y0)).collect();
    let mut approach_prev: Option<(f64, f64)> = None;
    let mut kappa_hat: Option<f64> = None;
    let mut last_turning_x0 = start.x0;

    loop {
        let seg = match stepper.step(&mut rhs) {
            Ok(seg) => seg,
            Err(err) => {
                let last = *path.samples.last().expect("start sample");
                let (s, data) = match err {
                    OdeError::StepUnderflow { s } => (s, None),
                    OdeError::MaxSteps { s } => (s, Some(stepper.steps_accepted as f64)),
                };
                path.events.push(Event {
                    kind: EventKind::NumericalFailure,
                    s,
                    x0: last.x0,
                    point: last.point,
                    xi: last.xi,
                    data,
                });
                return Ok(path);
            }
        };
        let y1 = stepper.y;
        let s1 = stepper.s;

        // Locate sign changes within the segment.
        let mut hits: Vec<(usize, f64)> = Vec::new();
        for (i, f) in fns.iter().enumerate() {
            let g0 = g_prev[i];
            let g1 = (f.g)(&y1);
            if g0.is_finite() && g1.is_finite() && g0 * g1 < 0.0 {
                let s_star = refine_zero(&seg, &*f.g, g0);
                hits.push((i, s_star));
            }
            g_prev[i] = g1;
        }
        hits.sort_by(|a, b| a.1.total_cmp(&b.1));

        let mut terminated = false;
        for (i, s_star) in hits {
            let y_star = seg.eval(s_star);
            let (p_star, xi_star) = state_of(&y_star);
            let kind = fns[i].kind;
            path.events.push(Event {
                kind,
                s: s_star,
                x0: y_star[0],
                point: p_star,
                xi: xi_star,
                data: None,
            });
            if kind == EventKind::TurningPoint {
                last_turning_x0 = y_star[0];
            }
            if fns[i].terminal {
                // Truncate the path at the event.
                path.segments.push(seg);
                push_sample(&mut path, &m, s_star, &y_star, None);
                terminated = true;
                break;
            }
        }
        if terminated {
            return Ok(path);
        }

        path.segments.push(seg);
        let jet = m.symbol_jet(&SpatialPoint::new(y1[1], y1[2], y1[3]), Guard::Internal).ok();
        push_sample(&mut path, &m, s1, &y1, jet.as_ref());

        // On-shell residual monitor.
        if let Some(jet) = jet.as_ref() {
            let xi = Covector::new(y1[4], y1[5], y1[6], y1[7]);
            let h = eval_h_jet(jet, &xi);
            let xi2 = xi.xi0 * xi.xi0
                + xi.xi_rho * xi.xi_rho
                + xi.xi_phi * xi.xi_phi
                + xi.xi_z * xi.xi_z;
            if h.abs() > stops.h_residual_coeff * (1.0 + xi2) {
                let (p, xi) = state_of(&y1);
                path.events.push(Event {
                    kind: EventKind::NumericalFailure,
                    s: s1,
                    x0: y1[0],
                    point: p,
                    xi,
                    data: Some(h),
                });
                return Ok(path);
            }
        }

        // Approach guards: resolution floor and stalled-spiral cutoff.
        if stops.detect_horizon_approach {
            if let Some(gfn) = approach_g.as_deref() {
                let g = gfn(&y1);
                if g.is_finite() && g > 0.0 {
                    if let Some((x0p, gp)) = approach_prev {
                        let dx = (y1[0] - x0p).abs();
                        if gp > g && dx > 0.0 {
                            kappa_hat = Some((gp / g).ln() / dx);
                        }
                    }
                    approach_prev = Some((y1[0], g));
                    let floor_hit = g < 1e-13 * approach_scale && kappa_hat.is_some();
                    let spiral_stalled = kappa_hat
                        .map(|k| k > 0.0 && (y1[0] - last_turning_x0).abs() > 50.0 / k)
                        .unwrap_or(false);
                    if floor_hit || spiral_stalled {
                        let (p, xi) = state_of(&y1);
                        path.events.push(Event {
                            kind: EventKind::MaxTime,
                            s: s1,
                            x0: y1[0],
                            point: p,
                            xi,
                            data: kappa_hat,
                        });
                        return Ok(path);
                    }
                }
            }
        }
    }
}

fn push_sample(
    path: &mut GeodesicPath,
    model: &MetricModel,
    s: f64,
    y: &[f64; 8],
    jet: Option<&crate::metric::SymbolJet>,
) {
    let (p, xi) = state_of(y);
    let owned;
    let jet = match jet {
        Some(j) => Some(j),
        None => {
            owned = model.symbol_jet(&p, Guard::Internal).ok();
            owned.as_ref()
        }
    };
    let (h_residual, delta1, delta2) = match jet {
        Some(j) => (
            eval_h_jet(j, &xi),
            delta1_jet(j, &xi),
            delta2_jet(j, xi.xi0, xi.xi_phi, xi.xi_z),
        ),
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    let region = model
        .classify_guarded(&p, Guard::Internal)
        .unwrap_or_else(|_| {
            path.samples
                .last()
                .map(|smp| smp.region)
                .unwrap_or(Region::Exterior)
        });
    path.samples.push(PathSample {
        s,
        x0: y[0],
        point: p,
        xi,
        h_residual,
        delta1,
        delta2,
        region,
    });
}

/// Bisect a bracketed sign change of `g` on the dense segment.
/// `g_lo` is the sign reference at the left end.
fn refine_zero(
    seg: &DenseSegment<8>,
    g: &dyn Fn(&[f64; 8]) -> f64,
    g_lo: f64,
) -> f64 {
    let mut lo = seg.s0;
    let mut hi = seg.s1();
    let lo_positive = g_lo > 0.0;
    for _ in 0..90 {
        if (hi - lo).abs() <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(&seg.eval(mid));
        if !gm.is_finite() {
            break;
        }
        if (gm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn vortex() -> MetricModel {
        MetricModel::acoustic(-1.0, 10.0).unwrap()
    }

    fn vortex_start(branch: Branch) -> RayStart {
        let p = SpatialPoint::equatorial(2.5, 0.0);
        let eta = Covector::spatial(-0.8, -1.5, 0.0);
        init_ray(&vortex(), p, eta, branch, 0.0).unwrap()
    }

    #[test]
    fn orientation_advances_x0_in_the_requested_direction() {
        for branch in [Branch::Plus, Branch::Minus] {
            for dir in [Direction::Forward, Direction::Backward] {
                let start = vortex_start(branch);
                let stops = StopSpec {
                    max_x0: 0.5,
                    ..Default::default()
                };
                let path = integrate(&vortex(), &start, dir, &stops).unwrap();
                let dx = path.last_sample().x0 - start.x0;
                match dir {
                    Direction::Forward => assert!(dx > 0.0),
                    Direction::Backward => assert!(dx < 0.0),
                }
            }
        }
    }

    #[test]
    fn conserved_components_are_bit_constant() {
        let start = vortex_start(Branch::Plus);
        let stops = StopSpec {
            max_x0: 20.0,
            escape_rho: Some(250.0),
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Forward, &stops).unwrap();
        assert!(path.samples.len() > 10);
        for smp in &path.samples {
            assert_eq!(smp.xi.xi0.to_bits(), start.xi.xi0.to_bits());
            assert_eq!(smp.xi.xi_phi.to_bits(), start.xi.xi_phi.to_bits());
        }
    }

    #[test]
    fn vortex_plus_forward_escapes() {
        let start = vortex_start(Branch::Plus);
        let stops = StopSpec {
            max_x0: 500.0,
            escape_rho: Some(250.0),
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Forward, &stops).unwrap();
        let term = path.terminal_event().expect("terminal event");
        assert_eq!(term.kind, EventKind::Escape);
        assert_relative_eq!(term.point.rho, 250.0, max_relative = 1e-9);
        // Outward all the way: no turning points.
        assert_eq!(path.events_of(EventKind::TurningPoint).count(), 0);
        // It leaves the ergoregion on the way out.
        assert_eq!(path.events_of(EventKind::ErgosphereCross).count(), 1);
        let ergo = path.events_of(EventKind::ErgosphereCross).next().unwrap();
        assert_relative_eq!(ergo.point.rho, 101f64.sqrt(), max_relative = 1e-9);
        // Residual stays tiny along the way.
        for smp in &path.samples {
            assert!(smp.h_residual.abs() < 1e-8, "residual {}", smp.h_residual);
        }
    }

    #[test]
    fn vortex_minus_forward_reaches_the_horizon() {
        let start = vortex_start(Branch::Minus);
        let stops = StopSpec {
            max_x0: 500.0,
            stop_on_outer_horizon: true,
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Forward, &stops).unwrap();
        let term = path.terminal_event().expect("terminal event");
        assert_eq!(term.kind, EventKind::OuterHorizonCross);
        assert_relative_eq!(term.point.rho, 1.0, max_relative = 1e-9);
        assert!(term.x0 > 0.0 && term.x0 < 10.0);
    }

    #[test]
    fn vortex_plus_backward_turns_then_escapes() {
        let start = vortex_start(Branch::Plus);
        let stops = StopSpec {
            max_x0: 500.0,
            escape_rho: Some(250.0),
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Backward, &stops).unwrap();
        let turns: Vec<_> = path.events_of(EventKind::TurningPoint).collect();
        assert_eq!(turns.len(), 1);
        // Exact inner turning radius of the outer Plus branch.
        assert_relative_eq!(turns[0].point.rho, 2.44010567970, max_relative = 1e-9);
        // The turning point is a zero of the radial discriminant.
        let m = vortex();
        let d2 = crate::hamiltonian::delta2(
            &m,
            &turns[0].point,
            turns[0].xi.xi0,
            turns[0].xi.xi_phi,
            turns[0].xi.xi_z,
        )
        .unwrap();
        assert_abs_diff_eq!(d2, 0.0, epsilon = 1e-7);
        let term = path.terminal_event().expect("terminal event");
        assert_eq!(term.kind, EventKind::Escape);
        assert!(term.x0 < 0.0);
    }

    #[test]
    fn vortex_minus_backward_turns_then_approaches_horizon() {
        let start = vortex_start(Branch::Minus);
        let stops = StopSpec {
            max_x0: 500.0,
            detect_horizon_approach: true,
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Backward, &stops).unwrap();
        let turns: Vec<_> = path.events_of(EventKind::TurningPoint).collect();
        assert_eq!(turns.len(), 1);
        assert_relative_eq!(turns[0].point.rho, 3.12645238053, max_relative = 1e-9);
        let term = path.terminal_event().expect("terminal event");
        assert_eq!(term.kind, EventKind::MaxTime);
        // Stopped by an approach guard, with a positive rate estimate.
        let kappa = term.data.expect("rate estimate");
        assert!(kappa > 0.0, "kappa = {kappa}");
        // Parked just above the horizon radius.
        let final_rho = path.last_sample().point.rho;
        assert!(final_rho > 1.0 && final_rho < 1.0 + 1e-6, "rho = {final_rho}");
        // Never crossed: the horizon event did not fire.
        assert_eq!(path.events_of(EventKind::OuterHorizonCross).count(), 0);
    }

    #[test]
    fn equatorial_plane_is_exactly_invariant() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let p = SpatialPoint::equatorial(2.0, 0.0);
        let f = m.fields(&p).unwrap();
        let eta = Covector::spatial(f.b_rho, 2.0 * f.b_phi, 0.0);
        let start = init_ray(&m, p, eta, Branch::Plus, 0.0).unwrap();
        let stops = StopSpec {
            max_x0: 3.0,
            ..Default::default()
        };
        let path = integrate(&m, &start, Direction::Forward, &stops).unwrap();
        assert!(path.samples.len() > 5);
        for smp in &path.samples {
            assert_eq!(smp.point.z.to_bits(), 0.0f64.to_bits());
            assert_eq!(smp.xi.xi_z.to_bits(), 0.0f64.to_bits());
        }
    }

    #[test]
    fn kerr_forward_crosses_both_horizons_and_hits_the_ring() {
        let m = MetricModel::kerr(1.0, 0.8).unwrap();
        let p = SpatialPoint::equatorial(2.0, 0.0);
        let f = m.fields(&p).unwrap();
        let eta = Covector::spatial(f.b_rho, 2.0 * f.b_phi, 0.0);
        for branch in [Branch::Plus, Branch::Minus] {
            let start = init_ray(&m, p, eta, branch, 0.0).unwrap();
            let stops = StopSpec {
                max_x0: 2000.0,
                ..Default::default()
            };
            let path = integrate(&m, &start, Direction::Forward, &stops).unwrap();
            let term = path.terminal_event().expect("terminal event");
            assert_eq!(term.kind, EventKind::RingTermination, "{branch:?}");
            assert_eq!(path.events_of(EventKind::OuterHorizonCross).count(), 1);
            assert_eq!(path.events_of(EventKind::InnerHorizonCross).count(), 1);
            let outer = path.events_of(EventKind::OuterHorizonCross).next().unwrap();
            assert_relative_eq!(outer.point.rho, 3.2f64.sqrt(), max_relative = 1e-9);
            let inner = path.events_of(EventKind::InnerHorizonCross).next().unwrap();
            assert_relative_eq!(inner.point.rho, 0.8f64.sqrt(), max_relative = 1e-9);
            // Ordered: outer before inner before ring.
            assert!(outer.s < inner.s && inner.s < term.s);
            // Terminal point is on the guard circle around the ring.
            let d = f64::hypot(term.point.rho - 0.8, term.point.z);
            assert_relative_eq!(d, 1e-5 * 0.8, max_relative = 1e-3);
        }
    }

    #[test]
    fn max_time_stops_the_run_at_the_requested_span() {
        let start = vortex_start(Branch::Plus);
        let stops = StopSpec {
            max_x0: 2.0,
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Forward, &stops).unwrap();
        let term = path.terminal_event().expect("terminal");
        assert_eq!(term.kind, EventKind::MaxTime);
        assert_relative_eq!(term.x0, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn state_lookup_by_coordinate_time() {
        let start = vortex_start(Branch::Plus);
        let stops = StopSpec {
            max_x0: 10.0,
            ..Default::default()
        };
        let path = integrate(&vortex(), &start, Direction::Forward, &stops).unwrap();
        let (p, xi) = path.state_at_x0(5.0).expect("inside the run");
        // Cross-check against the nearest samples by linear interpolation.
        let i = path.samples.partition_point(|s| s.x0 < 5.0);
        let (a, b) = (&path.samples[i - 1], &path.samples[i]);
        let t = (5.0 - a.x0) / (b.x0 - a.x0);
        let lin = a.point.rho + t * (b.point.rho - a.point.rho);
        assert_relative_eq!(p.rho, lin, max_relative = 1e-4);
        assert_eq!(xi.xi0.to_bits(), start.xi.xi0.to_bits());
        assert!(path.state_at_x0(11.0).is_none());
        assert!(path.state_at_x0(-1.0).is_none());
    }
}
