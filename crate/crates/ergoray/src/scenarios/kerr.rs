//! Rotating-backend experiments: the equatorial family trapped between
//! ergosphere and ring singularity, its off-equatorial funnel
//! contraction with samplewise inequality audits, and the extremal /
//! horizonless regimes where the trapped ray's horizon approach
//! degenerates from exponential to inverse-time, or terminates on the
//! ring from both time directions.

use super::{
    base_leg, push_exp_approach_fit, rel_diff, samples_after, strict_monotone_margin,
    tail_window, winding_after_turning, AuditRecord, CheckRecord, Classification, LegOutcome,
    ScenarioError, ScenarioOutcome, CLASSIFY_R2_FLOOR,
};
use crate::energy::{superradiance_report, BumpSpec, EnergyOptions};
use crate::fits::{log_log_fit, power_exponent_fit, reciprocal_fit, FitLaw, FitRecord};
use crate::geodesic::{
    init_ray, integrate, Direction, EventKind, GeodesicPath, PathSample, StopSpec,
};
use crate::hamiltonian::{
    delta1_jet, delta3_jet, grad_h_jet, lambda_roots_jet, Branch, Covector,
};
use crate::metric::{Guard, MetricModel, Region, SpatialPoint};
use crate::turning::kerr_trapping_certificate;

/// Covector aligned with the frame field at the equatorial radius
/// `rho0`; its angular component is exactly the spin.
fn aligned_eta(model: &MetricModel, rho0: f64) -> Result<Covector, ScenarioError> {
    let f0 = model.fields(&SpatialPoint::equatorial(rho0, 0.0))?;
    Ok(Covector::spatial(f0.b_rho, rho0 * f0.b_phi, 0.0))
}

/// Closed-form identities of the aligned family at its equatorial start:
/// the dispersion discriminant is exactly 1, the positive root exactly 1,
/// and the negative root `(K0 - 1)/(K0 + 1)`.
fn start_identity_checks(
    model: &MetricModel,
    p0: &SpatialPoint,
    eta: &Covector,
) -> Result<Vec<CheckRecord>, ScenarioError> {
    let jet = model.symbol_jet(p0, Guard::Public)?;
    let d1 = delta1_jet(&jet, eta);
    let roots = lambda_roots_jet(&jet, eta);
    let k0 = model.fields(p0)?.k;
    let minus_exact = (k0 - 1.0) / (k0 + 1.0);
    let d_d1 = rel_diff(d1, 1.0);
    let d_plus = rel_diff(roots.plus, 1.0);
    let d_minus = rel_diff(roots.minus, minus_exact);
    Ok(vec![
        CheckRecord::new(
            "start_dispersion_discriminant_is_unity",
            d_d1,
            Some(1e-12),
            d_d1 <= 1e-12,
        ),
        CheckRecord::new(
            "start_positive_root_is_unity",
            d_plus,
            Some(1e-12),
            d_plus <= 1e-12,
        ),
        CheckRecord::new(
            "start_negative_root_closed_form",
            d_minus,
            Some(1e-12),
            d_minus <= 1e-12,
        ),
    ])
}

/// Coordinate-time slopes from internal-guard fields, usable on the
/// terminal samples near the ring where the public guard refuses.
fn slopes_internal(model: &MetricModel, s: &PathSample) -> Option<(f64, f64, f64)> {
    let jet = model.symbol_jet(&s.point, Guard::Internal).ok()?;
    let g = grad_h_jet(&jet, &s.xi);
    if g.d_xi0.abs() < 1e-12 {
        return None;
    }
    Some((g.d_xi_rho / g.d_xi0, g.d_xi_phi / g.d_xi0, g.d_xi_z / g.d_xi0))
}

/// Outer crossing strictly before inner crossing strictly before ring
/// termination.
fn push_horizon_order_check(leg: &mut LegOutcome, path: &GeodesicPath) {
    let outer = path
        .events_of(EventKind::OuterHorizonCross)
        .next()
        .map(|e| e.x0);
    let inner = path
        .events_of(EventKind::InnerHorizonCross)
        .next()
        .map(|e| e.x0);
    let ring = path
        .terminal_event()
        .filter(|e| e.kind == EventKind::RingTermination)
        .map(|e| e.x0);
    match (outer, inner, ring) {
        (Some(o), Some(i), Some(r)) => {
            let margin = (i - o).min(r - i);
            leg.checks.push(CheckRecord::new(
                "horizon_crossings_ordered",
                margin,
                Some(0.0),
                margin > 0.0,
            ));
        }
        _ => leg.checks.push(CheckRecord::new(
            "horizon_crossings_ordered",
            f64::NAN,
            None,
            false,
        )),
    }
}

/// Terminal power law of the equatorial ring approach, from the
/// speed-against-gap slope (no arrival-time estimate needed). The fit
/// window is the deepest two decades of the gap, past any turning
/// point, where the terminal law dominates its slowly-decaying
/// corrections; if that leaves too few samples the window widens to
/// three decades and the record is flagged window-limited. Hard
/// exponent window when `expected` is given; always recorded.
fn push_ring_power_fit(
    model: &MetricModel,
    path: &GeodesicPath,
    spin: f64,
    leg: &mut LegOutcome,
    expected: Option<(f64, f64)>,
) {
    let fail = |leg: &mut LegOutcome| {
        if expected.is_some() {
            leg.checks.push(CheckRecord::new(
                "terminal_power_exponent",
                f64::NAN,
                None,
                false,
            ));
        }
    };
    let after_turn = path.events_of(EventKind::TurningPoint).last().map(|e| e.x0);
    let samples: &[PathSample] = match after_turn {
        Some(x0) => samples_after(&path.samples, path.direction, x0),
        None => &path.samples,
    };
    let g_end = match samples.last().map(|s| s.point.rho - spin) {
        Some(g) if g > 0.0 => g,
        _ => return fail(leg),
    };
    let collect = |cap: f64| {
        let mut gaps = Vec::new();
        let mut speeds = Vec::new();
        let mut span = (f64::INFINITY, f64::NEG_INFINITY);
        for s in samples {
            let gap = s.point.rho - spin;
            if !(gap > 0.0 && gap <= cap) {
                continue;
            }
            if let Some((dr, _, _)) = slopes_internal(model, s) {
                gaps.push(gap);
                speeds.push(dr);
                span = (span.0.min(s.x0), span.1.max(s.x0));
            }
        }
        (gaps, speeds, span)
    };
    let (mut gaps, mut speeds, mut span) = collect(100.0 * g_end);
    let window_limited = gaps.len() < 20;
    if window_limited {
        (gaps, speeds, span) = collect(1000.0 * g_end);
    }
    match power_exponent_fit(&gaps, &speeds) {
        Some((p, line)) => {
            leg.fits.push(FitRecord {
                law: FitLaw::FiniteTimePower,
                quantity: "rho - rho_ring".into(),
                rate: None,
                exponent: Some(p),
                r_squared: line.r_squared,
                window_x0: span,
                n_samples: line.n,
                window_limited,
            });
            if let Some((p_expected, tol)) = expected {
                let dev = (p - p_expected).abs();
                leg.checks.push(CheckRecord::new(
                    "terminal_power_exponent",
                    p,
                    Some(tol),
                    dev <= tol,
                ));
            }
        }
        None => fail(leg),
    }
}

/// The unwrapped angle converges at the ring: `|phi_end - phi|` shrinks
/// at least like `gap^min_slope`. The reference angle is the deepest
/// sample's; the fitted points stay a decade above it so the reference
/// bias stays out of the fit.
fn push_phi_limit_fit(path: &GeodesicPath, spin: f64, leg: &mut LegOutcome, min_slope: f64) {
    let last = path.samples.last();
    let g_end = last.map(|s| s.point.rho - spin).unwrap_or(f64::NAN);
    if !(g_end > 0.0) {
        leg.checks.push(CheckRecord::new(
            "angle_limit_exponent",
            f64::NAN,
            Some(min_slope),
            false,
        ));
        return;
    }
    let phi_ref = last.unwrap().point.phi;
    let window: Vec<&PathSample> = path
        .samples
        .iter()
        .filter(|s| {
            let gap = s.point.rho - spin;
            gap >= 10.0 * g_end && gap <= 1000.0 * g_end
        })
        .collect();
    let gaps: Vec<f64> = window.iter().map(|s| s.point.rho - spin).collect();
    let dphi: Vec<f64> = window.iter().map(|s| (phi_ref - s.point.phi).abs()).collect();
    match log_log_fit(&gaps, &dphi) {
        Some(fit) => {
            leg.checks.push(CheckRecord::new(
                "angle_limit_exponent",
                fit.slope,
                Some(min_slope),
                fit.slope >= min_slope,
            ));
            leg.fits.push(FitRecord {
                law: FitLaw::PhiLogDivergence,
                quantity: "|phi_end - phi| vs rho - rho_ring".into(),
                rate: None,
                exponent: Some(fit.slope),
                r_squared: fit.r_squared,
                window_x0: (window.first().unwrap().x0, window.last().unwrap().x0),
                n_samples: fit.n,
                window_limited: false,
            });
        }
        None => leg.checks.push(CheckRecord::new(
            "angle_limit_exponent",
            f64::NAN,
            Some(min_slope),
            false,
        )),
    }
}

/// Equatorial trapped family between the two horizons' exterior and the
/// ring: both roots fall onto the ring forward in time with terminal
/// exponents 2 (positive root) and 4/3 (negative root); backward, the
/// positive root escapes while the negative root turns once and winds
/// onto the outer horizon with an exponentially shrinking gap. A
/// wavepacket on the negative root is superradiant.
pub fn run_kerr_equatorial(
    mass: f64,
    spin: f64,
    rho0: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    let model = MetricModel::kerr(mass, spin)?;
    if spin >= mass {
        return Err(ScenarioError::GateFailed(format!(
            "the two-horizon family needs spin < mass, got a = {spin}, m = {mass}"
        )));
    }
    let (_, rho_plus) = model
        .horizon_rho_equatorial()
        .expect("spin < mass has horizons");
    let rho_ergo = model.ergosphere_rho_equatorial();
    if !(rho0 > rho_plus && rho0 < rho_ergo) {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must lie between outer horizon and ergosphere: \
             rho0 = {rho0}, window = ({rho_plus}, {rho_ergo})"
        )));
    }

    let p0 = SpatialPoint::equatorial(rho0, 0.0);
    let eta = aligned_eta(&model, rho0)?;
    let mut checks = start_identity_checks(&model, &p0, &eta)?;

    let cert = kerr_trapping_certificate(&model, rho0)?;
    checks.push(CheckRecord::new(
        "negative_root_family_is_trapped",
        cert.delta2_ergosphere,
        Some(0.0),
        cert.trapped,
    ));

    let start_plus = init_ray(&model, p0, eta, Branch::Plus, 0.0)?;
    let start_minus = init_ray(&model, p0, eta, Branch::Minus, 0.0)?;
    let mut legs = Vec::new();

    // Positive root, forward: through both horizons onto the ring, with
    // the radial discriminant equal to (rho^2 - a^2)/rho^2 along the
    // whole leg — an exact identity of the aligned family, audited
    // samplewise.
    {
        let stops = StopSpec { max_x0: 50.0, ..StopSpec::default() };
        let path = integrate(&model, &start_plus, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);
        push_horizon_order_check(&mut leg, &path);

        let mut worst = 0.0f64;
        for s in &path.samples {
            let r2 = s.point.rho * s.point.rho;
            worst = worst.max((s.delta2 - (r2 - spin * spin) / r2).abs());
        }
        let audit = AuditRecord {
            name: "radial_discriminant_identity".into(),
            samples: path.samples.len(),
            worst_margin: -worst,
            tolerance: 1e-10,
            passed: worst <= 1e-10,
        };
        let ok = audit.passed;
        leg.audits.push(audit);
        if !ok {
            return Err(ScenarioError::AuditViolation(format!(
                "radial discriminant identity off by {worst:e} on the positive-root leg"
            )));
        }

        push_ring_power_fit(&model, &path, spin, &mut leg, Some((2.0, 0.1)));
        push_phi_limit_fit(&path, spin, &mut leg, 0.35);
        legs.push(leg);
    }

    // Negative root, forward: same fate, slower approach.
    {
        let stops = StopSpec { max_x0: 50.0, ..StopSpec::default() };
        let path = integrate(&model, &start_minus, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);
        push_horizon_order_check(&mut leg, &path);
        push_ring_power_fit(&model, &path, spin, &mut leg, Some((4.0 / 3.0, 0.1)));
        leg.winding_turns = Some(winding_after_turning(&path));
        legs.push(leg);
    }

    // Positive root, backward: leaves the ergoregion and escapes; its
    // radial discriminant never vanishes, so there is no turning anywhere.
    {
        let stops = StopSpec {
            max_x0: 100.0,
            escape_rho: Some(10.0 * rho_ergo),
            ..StopSpec::default()
        };
        let path = integrate(&model, &start_plus, Direction::Backward, &stops)?;
        let mut leg = base_leg(&path);
        let min_d2 = path
            .samples
            .iter()
            .map(|s| s.delta2)
            .fold(f64::INFINITY, f64::min);
        leg.checks.push(CheckRecord::new(
            "radial_discriminant_stays_positive",
            min_d2,
            Some(0.0),
            min_d2 > 0.0,
        ));
        let turns = path.events_of(EventKind::TurningPoint).count();
        leg.checks.push(CheckRecord::new(
            "no_turning_event_located",
            turns as f64,
            Some(0.0),
            turns == 0,
        ));
        legs.push(leg);
    }

    // Negative root, backward: turns once, then winds onto the outer
    // horizon forever with an exponentially shrinking gap.
    {
        let stops = StopSpec {
            max_x0: 200.0,
            detect_horizon_approach: true,
            ..StopSpec::default()
        };
        let path = integrate(&model, &start_minus, Direction::Backward, &stops)?;
        let mut leg = base_leg(&path);
        let turns = path.events_of(EventKind::TurningPoint).count();
        leg.checks.push(CheckRecord::new(
            "single_turning_point",
            turns as f64,
            Some(1.0),
            turns == 1,
        ));
        push_exp_approach_fit(&mut leg, &path, rho_plus, "rho - rho_outer_horizon");
        let winding = winding_after_turning(&path);
        leg.checks.push(CheckRecord::new(
            "winding_turns_after_turning",
            winding,
            Some(3.0),
            winding > 3.0,
        ));
        leg.winding_turns = Some(winding);
        legs.push(leg);
    }

    // Superradiant wavepacket on the negative root at the start point.
    let bump = BumpSpec::new(p0, 0.12, 0.3, 0.08);
    let energy = superradiance_report(&model, &bump, &eta, &EnergyOptions::default())?;
    checks.push(CheckRecord::new(
        "packet_is_superradiant",
        energy.e_minus,
        Some(0.0),
        energy.superradiant,
    ));

    Ok(ScenarioOutcome {
        id: "rotating-equatorial".into(),
        model,
        eta,
        start: p0,
        legs,
        checks,
        energy: Some(energy),
    })
}

/// Conserved angular invariant of a rotating-backend ray: the Carter
/// constant of the oblate separation, written in cylindrical components.
/// It vanishes identically on equatorial rays, is `~ z0^2` for rays
/// started a small height `z0` off the equator, and its drift along a
/// numerical path certifies the integration independently of the
/// Hamiltonian residual.
fn carter_invariant(spin: f64, s: &PathSample) -> Option<f64> {
    let r = crate::metric::kerr_r(s.point.rho, s.point.z, spin).ok()?;
    if !(r > 0.0) {
        return None;
    }
    let ra = f64::hypot(r, spin);
    let cos_t = s.point.z / r;
    let sin_t = s.point.rho / ra;
    if sin_t == 0.0 {
        return None;
    }
    let xi_theta = s.xi.xi_rho * ra * cos_t - s.xi.xi_z * r * sin_t;
    let angular = s.xi.xi_phi / sin_t;
    Some(
        xi_theta * xi_theta
            + cos_t * cos_t * (angular * angular - spin * spin * s.xi.xi0 * s.xi.xi0),
    )
}

/// One off-equatorial forward leg with the full funnel analysis.
///
/// The funnel window runs from the inner-horizon crossing to the
/// closest approach to the ring in the gap `delta = |rho - a| + |z|`.
/// Inside it the leg is checked for strict gap decrease, a
/// contraction-rate floor, a transverse-momentum floor, and the two
/// audited discriminant lower bounds; height positivity is a hard check
/// on the positive root only, because the trapped root crosses the
/// equator at a focal point of the underlying equatorial ray before it
/// reaches the ring (recorded here as a measurement).
///
/// Whether a leg reaches the ring at all is governed by the angular
/// invariant: a ray started a height `z0` off the equator carries
/// `Q ~ z0^2`, whose centrifugal barrier holds the positive root a
/// distance `~ sqrt(Q)` away from the ring. When that distance exceeds
/// the termination guard the positive root is deflected instead of
/// captured; the leg then checks its closest approach against the
/// closed-form barrier and classifies the post-deflection fall onto the
/// inner horizon from its terminal oblate radius.
fn funnel_leg(
    model: &MetricModel,
    start: &crate::geodesic::RayStart,
    spin: f64,
    branch: Branch,
) -> Result<LegOutcome, ScenarioError> {
    let stops = StopSpec { max_x0: 50.0, ..StopSpec::default() };
    let path = integrate(model, start, Direction::Forward, &stops)?;
    let mut leg = base_leg(&path);

    // Crossing order; ring termination is optional (a barrier-deflected
    // positive root never terminates).
    let outer = path
        .events_of(EventKind::OuterHorizonCross)
        .next()
        .map(|e| e.x0);
    let inner = path
        .events_of(EventKind::InnerHorizonCross)
        .last()
        .map(|e| e.x0);
    let ring = path
        .terminal_event()
        .filter(|e| e.kind == EventKind::RingTermination)
        .map(|e| e.x0);
    let order_margin = match (outer, inner, ring) {
        (Some(o), Some(i), Some(r)) => (i - o).min(r - i),
        (Some(o), Some(i), None) => i - o,
        _ => f64::NAN,
    };
    leg.checks.push(CheckRecord::new(
        "horizon_crossings_ordered",
        order_margin,
        Some(0.0),
        order_margin > 0.0,
    ));

    let terminated = ring.is_some();
    let delta_of = |s: &PathSample| (s.point.rho - spin).abs() + s.point.z.abs();

    // Funnel window: strictly after the inner-horizon crossing, up to
    // the closest approach to the ring.
    let after: &[PathSample] = match inner {
        Some(x0) => samples_after(&path.samples, path.direction, x0),
        None => &[],
    };
    let closest = after
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| delta_of(a).total_cmp(&delta_of(b)))
        .map(|(i, _)| i);
    let funnel: &[PathSample] = match closest {
        Some(i) => &after[..=i],
        None => &[],
    };
    leg.checks.push(CheckRecord::new(
        "funnel_window_samples",
        funnel.len() as f64,
        Some(10.0),
        funnel.len() >= 10,
    ));

    // Height, from the start through the closest approach.
    let height_end = path.samples.len() - after.len() + closest.map_or(0, |i| i + 1);
    let min_z = path.samples[..height_end]
        .iter()
        .map(|s| s.point.z)
        .fold(f64::INFINITY, f64::min);
    match branch {
        Branch::Plus => leg.checks.push(CheckRecord::new(
            "height_stays_positive",
            min_z,
            Some(0.0),
            min_z > 0.0,
        )),
        Branch::Minus => {
            leg.checks.push(CheckRecord::new("min_height", min_z, None, true));
            let crossing = path
                .samples
                .iter()
                .find(|s| s.point.z < 0.0)
                .map_or(f64::NAN, |s| s.x0);
            leg.checks
                .push(CheckRecord::new("equator_crossing_time", crossing, None, true));
        }
    }

    // The contraction-rate exponent of the gap differs by branch.
    let contraction_pow = match branch {
        Branch::Plus => 0.75,
        Branch::Minus => 0.25,
    };

    let deltas: Vec<f64> = funnel.iter().map(delta_of).collect();
    let mut worst_radial = f64::INFINITY;
    let mut worst_radial_lit = f64::INFINITY;
    let mut n_radial = 0usize;
    let mut worst_axial = f64::INFINITY;
    let mut worst_axial_lit = f64::INFINITY;
    let mut n_axial = 0usize;
    let mut min_momentum = f64::INFINITY;

    for (s, delta) in funnel.iter().zip(&deltas) {
        let jet = model.symbol_jet(&s.point, Guard::Internal)?;
        let f = model.fields_guarded(&s.point, Guard::Internal)?;
        let xi = &s.xi;

        // Radial bound: Delta_2 >= (1 - K b_rho^2) I_rho^2 wherever the
        // weight is positive, with
        // I_rho = | K b_rho |M| / sqrt(1 - K b_rho^2)
        //         - sqrt(1 - K b_rho^2) |xi_rho| |,
        // M = -xi0 + b_phi xi_phi / rho + b_z xi_z.
        let m_r = -xi.xi0 + f.b_phi * xi.xi_phi / s.point.rho + f.b_z * xi.xi_z;
        let c_r = 1.0 - f.k * f.b_rho * f.b_rho;
        if c_r > 0.0 {
            let sq = c_r.sqrt();
            let i_r = (f.k * f.b_rho * m_r.abs() / sq - sq * xi.xi_rho.abs()).abs();
            let lhs = s.delta2;
            let rhs = c_r * i_r * i_r;
            let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
            worst_radial = worst_radial.min((lhs - rhs) / scale);
            let rhs_lit = i_r * i_r;
            let scale_lit = 1.0f64.max(lhs.abs()).max(rhs_lit.abs());
            worst_radial_lit = worst_radial_lit.min((lhs - rhs_lit) / scale_lit);
            n_radial += 1;
        }

        // Axial mirror: Delta_3 >= (1 - K b_z^2) I_z^2 with
        // M' = -xi0 + b_phi xi_phi / rho + b_rho xi_rho.
        let m_z = -xi.xi0 + f.b_phi * xi.xi_phi / s.point.rho + f.b_rho * xi.xi_rho;
        let c_z = 1.0 - f.k * f.b_z * f.b_z;
        if c_z > 0.0 {
            let sq = c_z.sqrt();
            let i_z = (f.k * f.b_z * m_z.abs() / sq - sq * xi.xi_z.abs()).abs();
            let lhs = delta3_jet(&jet, xi.xi0, xi.xi_rho, xi.xi_phi);
            let rhs = c_z * i_z * i_z;
            let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
            worst_axial = worst_axial.min((lhs - rhs) / scale);
            let rhs_lit = i_z * i_z;
            let scale_lit = 1.0f64.max(lhs.abs()).max(rhs_lit.abs());
            worst_axial_lit = worst_axial_lit.min((lhs - rhs_lit) / scale_lit);
            n_axial += 1;
        }

        let q_perp = xi.xi_rho * xi.xi_rho + xi.xi_z * xi.xi_z;
        min_momentum = min_momentum.min(q_perp / delta.powf(1.5));
    }

    let gap_margin = strict_monotone_margin(deltas.iter().copied(), -1.0);
    leg.checks.push(CheckRecord::new(
        "funnel_gap_strictly_decreases",
        gap_margin,
        Some(0.0),
        gap_margin > 0.0,
    ));

    // Contraction-rate floor from centered differences of the gap.
    let mut min_contraction = f64::INFINITY;
    for i in 1..funnel.len().saturating_sub(1) {
        let dt = funnel[i + 1].x0 - funnel[i - 1].x0;
        if dt <= 0.0 {
            continue;
        }
        let rate = (deltas[i + 1] - deltas[i - 1]) / dt;
        min_contraction = min_contraction.min(-rate / deltas[i].powf(contraction_pow));
    }
    leg.checks.push(CheckRecord::new(
        "funnel_contraction_rate_floor",
        min_contraction,
        Some(0.5),
        min_contraction.is_finite() && min_contraction >= 0.5,
    ));
    leg.checks.push(CheckRecord::new(
        "transverse_momentum_floor",
        min_momentum,
        Some(1.0),
        min_momentum.is_finite() && min_momentum >= 1.0,
    ));

    // Hard audits: violations indicate an implementation bug.
    for (name, worst, n) in [
        ("radial_funnel_bound", worst_radial, n_radial),
        ("axial_funnel_bound", worst_axial, n_axial),
    ] {
        let audit = AuditRecord {
            name: name.into(),
            samples: n,
            worst_margin: worst,
            tolerance: 1e-9,
            passed: n > 0 && worst >= -1e-9,
        };
        let ok = audit.passed;
        leg.audits.push(audit);
        if !ok {
            return Err(ScenarioError::AuditViolation(format!(
                "{name} violated: worst normalized margin {worst:e} over {n} samples"
            )));
        }
    }

    // Unweighted variants, recorded as measurements (the weighted forms
    // above are the proven ones; these report how the bounds fare with
    // the weights dropped).
    leg.checks.push(CheckRecord::new(
        "radial_funnel_bound_unweighted_margin",
        worst_radial_lit,
        None,
        n_radial > 0,
    ));
    leg.checks.push(CheckRecord::new(
        "axial_funnel_bound_unweighted_margin",
        worst_axial_lit,
        None,
        n_axial > 0,
    ));

    // Conservation of the angular invariant, start to deepest point
    // (through termination on capturing legs): an exactness certificate
    // for the integrated flow. On a deflected leg the terminal samples
    // sit on the inner-horizon asymptote where the covector grows
    // exponentially and amplifies roundoff, so the drift there is
    // recorded without a gate.
    let q0 = path.samples.first().and_then(|s| carter_invariant(spin, s));
    let q_end = if terminated {
        path.samples.last()
    } else {
        funnel.last()
    };
    let q1 = q_end.and_then(|s| carter_invariant(spin, s));
    match (q0, q1) {
        (Some(a0), Some(a1)) => {
            let drift = (a1 - a0).abs() / a0.abs().max(1e-30);
            if terminated {
                leg.checks.push(CheckRecord::new(
                    "carter_constant_drift",
                    drift,
                    Some(1e-4),
                    drift <= 1e-4,
                ));
            } else {
                leg.checks
                    .push(CheckRecord::new("carter_constant_drift", drift, None, true));
            }
        }
        _ => leg.checks.push(CheckRecord::new(
            "carter_constant_drift",
            f64::NAN,
            Some(1e-4),
            false,
        )),
    }

    if !terminated {
        // Deflection must happen at the closed-form centrifugal barrier:
        // closest ring distance = sqrt(Q) / |xi0| to leading order.
        let d_min = path
            .samples
            .iter()
            .map(|s| f64::hypot(s.point.rho - spin, s.point.z))
            .fold(f64::INFINITY, f64::min);
        let predicted = match (q0, path.samples.first()) {
            (Some(q), Some(s0)) if q > 0.0 && s0.xi.xi0 != 0.0 => {
                Some(q.sqrt() / s0.xi.xi0.abs())
            }
            _ => None,
        };
        match predicted {
            Some(d_pred) if d_pred > 0.0 && d_min.is_finite() => {
                let ratio = d_min / d_pred;
                leg.checks.push(CheckRecord::new(
                    "closest_approach_matches_angular_barrier",
                    ratio,
                    Some(0.2),
                    (ratio - 1.0).abs() <= 0.2,
                ));
            }
            _ => leg.checks.push(CheckRecord::new(
                "closest_approach_matches_angular_barrier",
                f64::NAN,
                Some(0.2),
                false,
            )),
        }

        // Post-deflection fate: an asymptotic fall onto the inner
        // horizon, approached from inside.
        let settled = match (model.horizon_r(), path.samples.last()) {
            (Some((r_minus, _)), Some(s)) => {
                crate::metric::kerr_r(s.point.rho, s.point.z, spin)
                    .map(|r| (r - r_minus).abs() <= 1e-3)
                    .unwrap_or(false)
            }
            _ => false,
        };
        if leg.classification == Classification::AsymptoticHorizonApproach && !settled {
            leg.classification = Classification::Unresolved;
        }
    }

    // Dispersion behavior in the funnel gap, on the deepest half of the
    // window in log-gap: the trapped root diverges like 1/delta (hard
    // exponent window); the positive root pins to 1 underneath a
    // one-sided sqrt-gap envelope whose fitted constant is recorded.
    let d_hi = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d_lo = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let log_mid = if d_hi > 0.0 && d_lo > 0.0 { (d_hi * d_lo).sqrt() } else { f64::NAN };
    match branch {
        Branch::Plus => {
            let c_bound = funnel
                .iter()
                .zip(&deltas)
                .filter(|(_, d)| **d > 0.0)
                .map(|(s, d)| (s.delta1 - 1.0).abs() / d.sqrt())
                .fold(0.0f64, f64::max);
            leg.checks.push(CheckRecord::new(
                "dispersion_pinning_constant",
                c_bound,
                None,
                funnel.len() >= 2 && c_bound.is_finite(),
            ));
        }
        Branch::Minus => {
            let mut d_fit = Vec::new();
            let mut v_fit = Vec::new();
            let mut span = (f64::INFINITY, f64::NEG_INFINITY);
            for (s, d) in funnel.iter().zip(&deltas) {
                if *d > 0.0 && *d <= log_mid {
                    d_fit.push(*d);
                    v_fit.push(s.delta1);
                    span = (span.0.min(s.x0), span.1.max(s.x0));
                }
            }
            match log_log_fit(&d_fit, &v_fit) {
                Some(fit) => {
                    let dev = (fit.slope - (-1.0)).abs();
                    leg.checks.push(CheckRecord::new(
                        "dispersion_divergence_exponent",
                        fit.slope,
                        Some(0.15),
                        dev <= 0.15,
                    ));
                    leg.fits.push(FitRecord {
                        law: FitLaw::FiniteTimePower,
                        quantity: "dispersion vs funnel gap".into(),
                        rate: None,
                        exponent: Some(fit.slope),
                        r_squared: fit.r_squared,
                        window_x0: span,
                        n_samples: fit.n,
                        window_limited: false,
                    });
                }
                None => leg.checks.push(CheckRecord::new(
                    "dispersion_divergence_exponent",
                    f64::NAN,
                    Some(0.15),
                    false,
                )),
            }
        }
    }

    Ok(leg)
}

/// Off-equatorial variant of the equatorial family: started a height
/// `z_off` above the equator with the same covector, both roots cross
/// the horizons and contract into the funnel `|rho - a| + |z| -> 0`,
/// subject to the audited discriminant bounds. Capture is conditional:
/// the angular invariant `Q ~ z_off^2` erects a centrifugal barrier a
/// distance `~ sqrt(Q)` from the ring, so the positive root reaches the
/// termination guard only for starts close enough to the equator, and
/// is otherwise deflected onto the inner horizon; the trapped root's
/// much faster contraction reaches the guard from any tested height.
pub fn run_kerr_offequatorial(
    mass: f64,
    spin: f64,
    rho0: f64,
    z_off: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    let model = MetricModel::kerr(mass, spin)?;
    if spin >= mass {
        return Err(ScenarioError::GateFailed(format!(
            "the two-horizon funnel needs spin < mass, got a = {spin}, m = {mass}"
        )));
    }
    if z_off <= 0.0 {
        return Err(ScenarioError::GateFailed(format!(
            "the off-equatorial start needs z > 0, got z = {z_off}"
        )));
    }
    let (_, rho_plus) = model
        .horizon_rho_equatorial()
        .expect("spin < mass has horizons");
    let rho_ergo = model.ergosphere_rho_equatorial();
    if !(rho0 > rho_plus && rho0 < rho_ergo) {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must lie between outer horizon and ergosphere: \
             rho0 = {rho0}, window = ({rho_plus}, {rho_ergo})"
        )));
    }

    let eta = aligned_eta(&model, rho0)?;
    let p0 = SpatialPoint::new(rho0, 0.0, z_off);
    let start_region = model.classify(&p0)?;
    let checks = vec![CheckRecord::new(
        "start_inside_ergoregion",
        f64::from(u8::from(start_region == Region::Ergoregion)),
        Some(1.0),
        start_region == Region::Ergoregion,
    )];

    let mut legs = Vec::new();
    for branch in [Branch::Plus, Branch::Minus] {
        let start = init_ray(&model, p0, eta, branch, 0.0)?;
        legs.push(funnel_leg(&model, &start, spin, branch)?);
    }

    Ok(ScenarioOutcome {
        id: "rotating-off-equatorial".into(),
        model,
        eta,
        start: p0,
        legs,
        checks,
        energy: None,
    })
}

/// Extremal and horizonless regimes of the trapped equatorial family.
///
/// At `spin == mass` the two horizons merge: forward, both roots still
/// fall onto the ring (crossing the doubled horizon once); backward, the
/// negative root's horizon approach slows from exponential to an
/// inverse-time law `gap ~ 1/|x0|`. For `spin > mass` there is no
/// horizon at all and the trapped negative root terminates on the ring
/// in both time directions, with terminal exponent 4/3 and a finite
/// terminal angle approached like `gap^(3/4)`.
pub fn run_kerr_extremal_and_naked(
    mass: f64,
    spin: f64,
    rho0: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    let model = MetricModel::kerr(mass, spin)?;
    if spin < mass {
        return Err(ScenarioError::GateFailed(format!(
            "this experiment needs spin >= mass, got a = {spin}, m = {mass}"
        )));
    }
    let extremal = spin == mass;
    let rho_ergo = model.ergosphere_rho_equatorial();
    if !(rho0 > spin && rho0 < rho_ergo) {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must lie inside the equatorial ergoregion: \
             rho0 = {rho0}, window = ({spin}, {rho_ergo})"
        )));
    }
    let cert = kerr_trapping_certificate(&model, rho0)?;
    if !cert.trapped {
        return Err(ScenarioError::GateFailed(format!(
            "aligned family is not trapped at rho0 = {rho0}: \
             discriminant {} at start, {} at ergosphere",
            cert.delta2_start, cert.delta2_ergosphere
        )));
    }

    let p0 = SpatialPoint::equatorial(rho0, 0.0);
    let eta = aligned_eta(&model, rho0)?;
    let mut checks = start_identity_checks(&model, &p0, &eta)?;
    checks.push(CheckRecord::new(
        "negative_root_family_is_trapped",
        cert.delta2_ergosphere,
        Some(0.0),
        cert.trapped,
    ));

    let start_plus = init_ray(&model, p0, eta, Branch::Plus, 0.0)?;
    let start_minus = init_ray(&model, p0, eta, Branch::Minus, 0.0)?;
    let mut legs = Vec::new();

    // Forward legs: onto the ring for both roots.
    for start in [&start_plus, &start_minus] {
        let stops = StopSpec { max_x0: 60.0, ..StopSpec::default() };
        let path = integrate(&model, start, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);
        push_horizon_event_checks(&mut leg, &path, extremal);
        if start.branch == Branch::Minus {
            // The terminal exponent of the trapped root survives the
            // loss of the horizons; hard-check it in the horizonless
            // regime, record it at extremality.
            let expected = if extremal { None } else { Some((4.0 / 3.0, 0.1)) };
            push_ring_power_fit(&model, &path, spin, &mut leg, expected);
            leg.winding_turns = Some(winding_after_turning(&path));
        }
        legs.push(leg);
    }

    // Positive root, backward: escapes with a positive radial
    // discriminant throughout.
    {
        let stops = StopSpec {
            max_x0: 150.0,
            escape_rho: Some(10.0 * rho_ergo),
            ..StopSpec::default()
        };
        let path = integrate(&model, &start_plus, Direction::Backward, &stops)?;
        let mut leg = base_leg(&path);
        let min_d2 = path
            .samples
            .iter()
            .map(|s| s.delta2)
            .fold(f64::INFINITY, f64::min);
        leg.checks.push(CheckRecord::new(
            "radial_discriminant_stays_positive",
            min_d2,
            Some(0.0),
            min_d2 > 0.0,
        ));
        legs.push(leg);
    }

    // Negative root, backward: the regime split.
    if extremal {
        let rho_hat = f64::hypot(spin, mass);
        let stops = StopSpec { max_x0: 2000.0, ..StopSpec::default() };
        let path = integrate(&model, &start_minus, Direction::Backward, &stops)?;
        let mut leg = base_leg(&path);
        let turns = path.events_of(EventKind::TurningPoint).count();
        leg.checks.push(CheckRecord::new(
            "single_turning_point",
            turns as f64,
            Some(1.0),
            turns == 1,
        ));

        // Inverse-time gap: 1/gap is linear in elapsed time.
        let tail = tail_window(&path.samples, 0.3);
        let prog = super::progress(tail, path.direction);
        let gaps: Vec<f64> = tail.iter().map(|s| s.point.rho - rho_hat).collect();
        match reciprocal_fit(&prog, &gaps) {
            Some(fit) => {
                leg.checks.push(CheckRecord::new(
                    "inverse_time_fit_quality",
                    fit.r_squared,
                    Some(0.99),
                    fit.r_squared >= 0.99,
                ));
                leg.checks.push(CheckRecord::new(
                    "inverse_time_rate_positive",
                    fit.slope,
                    Some(0.0),
                    fit.slope > 0.0,
                ));
                leg.fits.push(FitRecord {
                    law: FitLaw::OneOverX0,
                    quantity: "rho - rho_horizon".into(),
                    rate: Some(fit.slope),
                    exponent: None,
                    r_squared: fit.r_squared,
                    window_x0: (tail.first().unwrap().x0, tail.last().unwrap().x0),
                    n_samples: fit.n,
                    window_limited: false,
                });
                if leg.classification == Classification::AsymptoticHorizonApproach
                    && fit.r_squared < CLASSIFY_R2_FLOOR
                {
                    leg.classification = Classification::Unresolved;
                }
            }
            None => {
                if leg.classification == Classification::AsymptoticHorizonApproach {
                    leg.classification = Classification::Unresolved;
                }
            }
        }

        // gap * |x0| pinned inside a narrow band over the last decade.
        let decade = super::last_decade_window(&path.samples, |s| s.point.rho - rho_hat);
        let products: Vec<f64> = decade
            .iter()
            .map(|s| (s.point.rho - rho_hat) * s.x0.abs())
            .collect();
        let p_min = products.iter().copied().fold(f64::INFINITY, f64::min);
        let p_max = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        leg.checks.push(CheckRecord::new(
            "inverse_law_product_positive",
            p_min,
            Some(0.0),
            p_min > 0.0,
        ));
        let band = if p_min > 0.0 { p_max / p_min } else { f64::INFINITY };
        leg.checks.push(CheckRecord::new(
            "inverse_law_band_ratio",
            band,
            Some(3.0),
            band <= 3.0,
        ));

        leg.winding_turns = Some(winding_after_turning(&path));
        legs.push(leg);
    } else {
        let stops = StopSpec { max_x0: 800.0, ..StopSpec::default() };
        let path = integrate(&model, &start_minus, Direction::Backward, &stops)?;
        let mut leg = base_leg(&path);
        let turns = path.events_of(EventKind::TurningPoint).count();
        leg.checks.push(CheckRecord::new(
            "single_turning_point",
            turns as f64,
            Some(1.0),
            turns == 1,
        ));
        push_ring_power_fit(&model, &path, spin, &mut leg, Some((4.0 / 3.0, 0.1)));
        push_phi_limit_fit(&path, spin, &mut leg, 0.6);
        leg.winding_turns = Some(winding_after_turning(&path));
        legs.push(leg);
    }

    Ok(ScenarioOutcome {
        id: if extremal {
            "rotating-extremal".into()
        } else {
            "rotating-naked".into()
        },
        model,
        eta,
        start: p0,
        legs,
        checks,
        energy: None,
    })
}

/// Horizon-event bookkeeping for the merged / absent horizon regimes:
/// at extremality the two horizons coincide, so exactly one crossing of
/// the doubled horizon fires (and none of the inner kind, which exists
/// only when the radii are distinct); with no horizon, neither kind may
/// appear.
fn push_horizon_event_checks(leg: &mut LegOutcome, path: &GeodesicPath, extremal: bool) {
    let n_outer = path.events_of(EventKind::OuterHorizonCross).count();
    let n_inner = path.events_of(EventKind::InnerHorizonCross).count();
    if extremal {
        leg.checks.push(CheckRecord::new(
            "merged_horizon_crossed_once",
            (n_outer + n_inner) as f64,
            Some(1.0),
            n_outer == 1 && n_inner == 0,
        ));
    } else {
        leg.checks.push(CheckRecord::new(
            "no_horizon_to_cross",
            (n_outer + n_inner) as f64,
            Some(0.0),
            n_outer + n_inner == 0,
        ));
    }
}
