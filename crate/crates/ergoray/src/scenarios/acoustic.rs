//! Vortex-flow experiments: the long-lived superradiant family, the
//! horizonless spiral onto the axis, the short-lived family that crosses
//! the horizon while its packet still carries negative energy, and the
//! time-reversal equivalence with the outflow background.

use super::{
    base_leg, push_exp_approach_fit, rel_diff, strict_monotone_margin, tail_window,
    winding_after_turning, CheckRecord, ScenarioError, ScenarioOutcome,
};
use crate::energy::{superradiance_report, BumpSpec, EnergyOptions};
use crate::fits::{log_log_fit, winding_turns, FitLaw, FitRecord};
use crate::geodesic::{
    drho_dx0, init_ray, integrate, Direction, EventKind, GeodesicPath, StopSpec,
};
use crate::hamiltonian::{lambda_roots, Branch, Covector};
use crate::metric::{MetricModel, SpatialPoint};
use crate::turning::vortex_turning_exact;

/// Draining-vortex family with a strong circulation: the positive-root
/// ray escapes, the negative-root ray falls through the horizon, and
/// both backward continuations stay trapped inside the ergoregion — the
/// negative-root one winding onto the horizon forever. A wavepacket on
/// the negative root carries negative energy, certifying superradiance.
///
/// Parameters: `radial < 0` (inflow strength `A`), `angular` the
/// circulation `B`, `rho0` the start radius. The circulation must exceed
/// `(1 + 2A^2/rho0^2) * rho0 / sqrt(1 - 4A^2/rho0^2)`.
pub fn run_acoustic_superradiant(
    radial: f64,
    angular: f64,
    rho0: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    let model = MetricModel::acoustic(radial, angular)?;
    if radial >= 0.0 {
        return Err(ScenarioError::GateFailed(format!(
            "the draining-vortex family needs a radial inflow, got A = {radial}"
        )));
    }
    let a_abs = radial.abs();
    if rho0 <= 2.0 * a_abs {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must exceed twice the inflow strength: rho0 = {rho0}, 2|A| = {}",
            2.0 * a_abs
        )));
    }
    let root = (1.0 - 4.0 * a_abs * a_abs / (rho0 * rho0)).sqrt();
    let threshold = (1.0 + 2.0 * a_abs * a_abs / (rho0 * rho0)) * rho0 / root;
    if angular <= threshold {
        return Err(ScenarioError::GateFailed(format!(
            "circulation too weak for a trapped negative-frequency family: \
             B = {angular} <= {threshold}"
        )));
    }

    let p0 = SpatialPoint::equatorial(rho0, 0.0);
    let eta = Covector::spatial(-2.0 * a_abs / rho0, -rho0 * root, 0.0);
    let roots0 = lambda_roots(&model, &p0, &eta)?;

    let mut checks = vec![
        CheckRecord::new(
            "circulation_clears_trapping_threshold",
            angular - threshold,
            Some(0.0),
            angular > threshold,
        ),
        CheckRecord::new(
            "negative_root_frequency_positive",
            roots0.minus,
            Some(0.0),
            roots0.minus > 0.0,
        ),
    ];

    let turning_plus = vortex_turning_exact(&model, rho0, &eta, Branch::Plus)?;
    let turning_minus = vortex_turning_exact(&model, rho0, &eta, Branch::Minus)?;

    let start_plus = init_ray(&model, p0, eta, Branch::Plus, 0.0)?;
    let start_minus = init_ray(&model, p0, eta, Branch::Minus, 0.0)?;
    let stops_escape = StopSpec {
        max_x0: 400.0,
        escape_rho: Some(100.0 * rho0),
        ..StopSpec::default()
    };
    let mut legs = Vec::new();

    // Positive root, forward: radially outward from the first instant,
    // through the ergosphere, out to the escape radius.
    {
        let path = integrate(&model, &start_plus, Direction::Forward, &stops_escape)?;
        let mut leg = base_leg(&path);
        let slope0 = drho_dx0(&model, &p0, &start_plus.xi)?;
        let d = rel_diff(slope0, a_abs / rho0);
        leg.checks.push(CheckRecord::new(
            "initial_radial_speed_matches_closed_form",
            d,
            Some(1e-12),
            d <= 1e-12,
        ));
        let margin = strict_monotone_margin(path.samples.iter().map(|s| s.point.rho), 1.0);
        leg.checks.push(CheckRecord::new(
            "radius_strictly_increases",
            margin,
            Some(0.0),
            margin > 0.0,
        ));
        let crossings = path.events_of(EventKind::ErgosphereCross).count();
        leg.checks.push(CheckRecord::new(
            "crosses_ergosphere_once",
            crossings as f64,
            Some(1.0),
            crossings == 1,
        ));
        legs.push(leg);
    }

    // Negative root, forward: radially inward three times as fast,
    // through the horizon in finite time.
    {
        let stops = StopSpec {
            max_x0: 400.0,
            stop_on_outer_horizon: true,
            ..StopSpec::default()
        };
        let path = integrate(&model, &start_minus, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);
        let slope0 = drho_dx0(&model, &p0, &start_minus.xi)?;
        let d = rel_diff(slope0, -3.0 * a_abs / rho0);
        leg.checks.push(CheckRecord::new(
            "initial_radial_speed_matches_closed_form",
            d,
            Some(1e-12),
            d <= 1e-12,
        ));
        let margin = strict_monotone_margin(path.samples.iter().map(|s| s.point.rho), -1.0);
        leg.checks.push(CheckRecord::new(
            "radius_strictly_decreases",
            margin,
            Some(0.0),
            margin > 0.0,
        ));
        legs.push(leg);
    }

    // Positive root, backward: trapped below the start radius; turns at
    // the larger closed-form turning radius, then leaves.
    {
        let path = integrate(&model, &start_plus, Direction::Backward, &stops_escape)?;
        let mut leg = base_leg(&path);
        push_turning_match(&mut leg.checks, &leg.turning_radii, turning_plus.radii.last());
        legs.push(leg);
    }

    // Negative root, backward: moves outward to the smaller closed-form
    // turning radius above the start, then spirals onto the horizon with
    // an exponentially shrinking gap, never crossing it.
    {
        let stops = StopSpec {
            max_x0: 200.0,
            detect_horizon_approach: true,
            ..StopSpec::default()
        };
        let path = integrate(&model, &start_minus, Direction::Backward, &stops)?;
        let mut leg = base_leg(&path);
        push_turning_match(&mut leg.checks, &leg.turning_radii, turning_minus.radii.first());
        let outer = path.events_of(EventKind::OuterHorizonCross).count();
        leg.checks.push(CheckRecord::new(
            "never_crosses_horizon",
            outer as f64,
            Some(0.0),
            outer == 0,
        ));
        push_exp_approach_fit(&mut leg, &path, a_abs, "rho - rho_horizon");
        leg.winding_turns = Some(winding_after_turning(&path));
        legs.push(leg);
    }

    // Negative-energy wavepacket centered on the start radius.
    let rho_ergo = model.ergosphere_rho_equatorial();
    let hw_rho = 0.5f64
        .min(0.8 * (rho_ergo - rho0))
        .min(0.8 * (rho0 - a_abs));
    let bump = BumpSpec::new(p0, hw_rho, 0.5, 0.5);
    let energy = superradiance_report(&model, &bump, &eta, &EnergyOptions::default())?;
    checks.push(CheckRecord::new(
        "packet_is_superradiant",
        energy.e_minus,
        Some(0.0),
        energy.superradiant,
    ));

    Ok(ScenarioOutcome {
        id: "vortex-superradiant".into(),
        model,
        eta,
        start: p0,
        legs,
        checks,
        energy: Some(energy),
    })
}

/// Purely circulating flow (no inflow, hence no horizon): negative-root
/// rays launched inside the ergoregion spiral onto the axis in finite
/// time with unit terminal radial speed and a diverging angle, while
/// positive-root rays escape.
///
/// Parameters: `angular > 0` the circulation `B`, `0 < rho0 < B` the
/// start radius, `eta_rho < 0` a small inward radial covector component
/// (the angular component is fixed by normalization).
pub fn run_acoustic_naked(
    angular: f64,
    rho0: f64,
    eta_rho: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    if angular <= 0.0 {
        return Err(ScenarioError::GateFailed(format!(
            "the horizonless vortex needs a positive circulation, got B = {angular}"
        )));
    }
    if !(rho0 > 0.0 && rho0 < angular) {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must sit inside the ergoregion: rho0 = {rho0}, B = {angular}"
        )));
    }
    if !(eta_rho.abs() < 1.0) {
        return Err(ScenarioError::GateFailed(format!(
            "radial covector component must satisfy |eta_rho| < 1, got {eta_rho}"
        )));
    }
    let model = MetricModel::acoustic(0.0, angular)?;
    let eta_phi = -rho0 * (1.0 - eta_rho * eta_rho).sqrt();
    // Trapping condition for the negative root at this start.
    let gate = (angular * angular - rho0 * rho0) * eta_phi * eta_phi / rho0.powi(4)
        - eta_rho * eta_rho;
    if gate <= 0.0 {
        return Err(ScenarioError::GateFailed(format!(
            "covector is not trapped: (B^2 - rho0^2) eta_phi^2 / rho0^4 - eta_rho^2 = {gate}"
        )));
    }

    let p0 = SpatialPoint::equatorial(rho0, 0.0);
    let eta = Covector::spatial(eta_rho, eta_phi, 0.0);
    let roots0 = lambda_roots(&model, &p0, &eta)?;
    // The covector is unit-normed, so both roots have closed forms.
    let base = angular * eta_phi.abs() / (rho0 * rho0);
    let d_plus = rel_diff(roots0.plus, base + 1.0);
    let d_minus = rel_diff(roots0.minus, base - 1.0);
    let checks = vec![
        CheckRecord::new("positive_root_closed_form", d_plus, Some(1e-12), d_plus <= 1e-12),
        CheckRecord::new("negative_root_closed_form", d_minus, Some(1e-12), d_minus <= 1e-12),
        CheckRecord::new(
            "negative_root_frequency_positive",
            roots0.minus,
            Some(0.0),
            roots0.minus > 0.0,
        ),
    ];

    let start_plus = init_ray(&model, p0, eta, Branch::Plus, 0.0)?;
    let start_minus = init_ray(&model, p0, eta, Branch::Minus, 0.0)?;
    let stops = StopSpec {
        max_x0: 400.0,
        escape_rho: Some(10.0 * model.ergosphere_rho_equatorial()),
        ..StopSpec::default()
    };
    let mut legs = Vec::new();

    // Positive root, forward: escapes.
    legs.push(base_leg(&integrate(
        &model,
        &start_plus,
        Direction::Forward,
        &stops,
    )?));

    // Negative root, forward: spirals onto the axis in finite time. The
    // terminal radial speed tends to -1 and the angular speed diverges
    // like 1/rho^2.
    {
        let path = integrate(&model, &start_minus, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);

        let last_decade = super::last_decade_window(&path.samples, |s| s.point.rho);
        let mut worst = 0.0f64;
        let mut speeds_ok = true;
        for s in last_decade {
            match super::coordinate_slopes(&model, s) {
                Some((dr, _, _)) => {
                    worst = worst.max(rel_diff(dr, -1.0));
                }
                None => speeds_ok = false,
            }
        }
        leg.checks.push(CheckRecord::new(
            "terminal_radial_speed_is_unity",
            worst,
            Some(0.05),
            speeds_ok && worst <= 0.05,
        ));

        // |d phi / d rho| ~ B / rho^2 on the way in.
        let tail = tail_window(&path.samples, 0.3);
        let mut rhos = Vec::new();
        let mut dphi_drho = Vec::new();
        for s in tail {
            if let Some((dr, dphi, _)) = super::coordinate_slopes(&model, s) {
                if dr != 0.0 {
                    rhos.push(s.point.rho);
                    dphi_drho.push((dphi / dr).abs());
                }
            }
        }
        if let Some(fit) = log_log_fit(&rhos, &dphi_drho) {
            let d = (fit.slope - (-2.0)).abs();
            leg.checks.push(CheckRecord::new(
                "angle_divergence_exponent",
                fit.slope,
                Some(0.1),
                d <= 0.1,
            ));
            leg.fits.push(FitRecord {
                law: FitLaw::PhiLogDivergence,
                quantity: "|dphi/drho| vs rho".into(),
                rate: None,
                exponent: Some(fit.slope),
                r_squared: fit.r_squared,
                window_x0: (tail.first().unwrap().x0, tail.last().unwrap().x0),
                n_samples: fit.n,
                window_limited: false,
            });
        }
        leg.winding_turns = Some(winding_turns(
            &path.samples.iter().map(|s| s.point.phi).collect::<Vec<_>>(),
        ));
        legs.push(leg);
    }

    // Backward continuations, classified honestly: with no horizon to
    // hide behind, both leave the ergoregion and escape.
    legs.push(base_leg(&integrate(
        &model,
        &start_plus,
        Direction::Backward,
        &stops,
    )?));
    legs.push(base_leg(&integrate(
        &model,
        &start_minus,
        Direction::Backward,
        &stops,
    )?));

    Ok(ScenarioOutcome {
        id: "vortex-naked".into(),
        model,
        eta,
        start: p0,
        legs,
        checks,
        energy: None,
    })
}

/// Weak-circulation vortex: a negative-energy packet still exists inside
/// the ergoregion, but every ray of the family — including the
/// positive-root one, which moves inward from the first instant and has
/// no turning radius anywhere — crosses the horizon in finite time.
///
/// Parameters: `radial < 0`, `0 < angular < |radial|`, and `rho0`
/// strictly between the horizon and the ergosphere.
pub fn run_acoustic_shortlived(
    radial: f64,
    angular: f64,
    rho0: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    let model = MetricModel::acoustic(radial, angular)?;
    if radial >= 0.0 {
        return Err(ScenarioError::GateFailed(format!(
            "the short-lived family needs a radial inflow, got A = {radial}"
        )));
    }
    let a_abs = radial.abs();
    if !(angular > 0.0 && angular < a_abs) {
        return Err(ScenarioError::GateFailed(format!(
            "circulation must satisfy 0 < B < |A|: B = {angular}, |A| = {a_abs}"
        )));
    }
    let rho_ergo = model.ergosphere_rho_equatorial();
    if !(rho0 > a_abs && rho0 < rho_ergo) {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must lie between horizon and ergosphere: \
             rho0 = {rho0}, window = ({a_abs}, {rho_ergo})"
        )));
    }

    let p0 = SpatialPoint::equatorial(rho0, 0.0);
    let eta = Covector::spatial(a_abs / rho0, -angular, 0.0);
    let roots0 = lambda_roots(&model, &p0, &eta)?;
    let s2 = a_abs * a_abs + angular * angular;
    let lambda_minus_exact = s2 / (rho0 * rho0) - s2.sqrt() / rho0;
    let d_minus = rel_diff(roots0.minus, lambda_minus_exact);
    let mut checks = vec![
        CheckRecord::new(
            "negative_root_closed_form",
            d_minus,
            Some(1e-12),
            d_minus <= 1e-12,
        ),
        CheckRecord::new(
            "negative_root_frequency_positive",
            roots0.minus,
            Some(0.0),
            roots0.minus > 0.0,
        ),
    ];

    let stops = StopSpec {
        max_x0: 400.0,
        stop_on_outer_horizon: true,
        escape_rho: Some(100.0 * rho0),
        ..StopSpec::default()
    };
    let mut legs = Vec::new();

    // Positive root, forward: no turning radius exists, the ray starts
    // inward and is swallowed.
    {
        let turning = vortex_turning_exact(&model, rho0, &eta, Branch::Plus)?;
        let start = init_ray(&model, p0, eta, Branch::Plus, 0.0)?;
        let path = integrate(&model, &start, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);
        let slope0 = drho_dx0(&model, &p0, &start.xi)?;
        leg.checks.push(CheckRecord::new(
            "initial_radial_speed_negative",
            slope0,
            Some(0.0),
            slope0 < 0.0,
        ));
        leg.checks.push(CheckRecord::new(
            "no_turning_radius_exists",
            turning.radii.len() as f64,
            Some(0.0),
            turning.radii.is_empty(),
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

    // Negative root, forward: swallowed as well.
    {
        let start = init_ray(&model, p0, eta, Branch::Minus, 0.0)?;
        let path = integrate(&model, &start, Direction::Forward, &stops)?;
        let mut leg = base_leg(&path);
        let margin = strict_monotone_margin(path.samples.iter().map(|s| s.point.rho), -1.0);
        leg.checks.push(CheckRecord::new(
            "radius_strictly_decreases",
            margin,
            Some(0.0),
            margin > 0.0,
        ));
        legs.push(leg);
    }

    // The packet is still superradiant: the verdict does not require the
    // rays to linger.
    let hw_rho = 0.8 * (rho_ergo - rho0).min(rho0 - a_abs);
    let bump = BumpSpec::new(p0, hw_rho, 0.3, 0.3);
    let energy = superradiance_report(&model, &bump, &eta, &EnergyOptions::default())?;
    checks.push(CheckRecord::new(
        "packet_is_superradiant",
        energy.e_minus,
        Some(0.0),
        energy.superradiant,
    ));

    Ok(ScenarioOutcome {
        id: "vortex-short-lived".into(),
        model,
        eta,
        start: p0,
        legs,
        checks,
        energy: Some(energy),
    })
}

/// Time-reversal equivalence: an outflow ("white hole") background `W`
/// with parameters `(A, B)`, `A > 0`, is the time reverse of the inflow
/// background `O = (-A, -B)`. Forward evolution on `W` with the opposite
/// root retraces backward evolution on `O` point for point, so the
/// trapped family of `O` reappears as a forward-trapped family of `W`.
///
/// Legs are labeled by the root of the ORIGINAL (inflow) background;
/// each runs the white-hole background forward on the flipped root and
/// compares against the original run backward on the grid
/// `x0 in [0, 10]`.
pub fn run_white_hole(
    radial: f64,
    angular: f64,
    rho0: f64,
) -> Result<ScenarioOutcome, ScenarioError> {
    if radial <= 0.0 {
        return Err(ScenarioError::GateFailed(format!(
            "the outflow background needs A > 0, got A = {radial}"
        )));
    }
    let white = MetricModel::acoustic(radial, angular)?;
    let original = white.time_reversed()?;

    // Gate the ORIGINAL's trapped family (same bound as the superradiant
    // experiment).
    let a_abs = radial.abs();
    if rho0 <= 2.0 * a_abs {
        return Err(ScenarioError::GateFailed(format!(
            "start radius must exceed twice the flow strength: rho0 = {rho0}, 2|A| = {}",
            2.0 * a_abs
        )));
    }
    let root = (1.0 - 4.0 * a_abs * a_abs / (rho0 * rho0)).sqrt();
    let threshold = (1.0 + 2.0 * a_abs * a_abs / (rho0 * rho0)) * rho0 / root;
    let b_original = match original {
        MetricModel::Acoustic { angular, .. } => angular,
        _ => unreachable!("time reverse of an acoustic model is acoustic"),
    };
    if b_original <= threshold {
        return Err(ScenarioError::GateFailed(format!(
            "reversed circulation too weak for a trapped family: \
             -B = {b_original} <= {threshold}"
        )));
    }

    let p0 = SpatialPoint::equatorial(rho0, 0.0);
    let eta = Covector::spatial(-2.0 * a_abs / rho0, -rho0 * root, 0.0);

    // Root exchange under time reversal: lambda_pm_W(eta) = -lambda_mp_O(eta).
    let roots_w = lambda_roots(&white, &p0, &eta)?;
    let roots_o = lambda_roots(&original, &p0, &eta)?;
    let d_swap = (roots_w.plus + roots_o.minus)
        .abs()
        .max((roots_w.minus + roots_o.plus).abs());
    let mut checks = vec![CheckRecord::new(
        "frequency_roots_swap_and_negate",
        d_swap,
        Some(1e-14),
        d_swap <= 1e-14,
    )];

    // Double reversal is the identity.
    let back = original.time_reversed()?;
    checks.push(CheckRecord::new(
        "double_reversal_is_identity",
        f64::from(u8::from(back != white)),
        Some(0.0),
        back == white,
    ));

    let grid_max = 10.0;
    let stops = StopSpec {
        max_x0: grid_max + 2.0,
        escape_rho: Some(100.0 * rho0),
        // Tighter tolerances: the equivalence check compares two
        // independent integrations pointwise at 1e-8.
        rtol: 1e-11,
        atol: 1e-13,
        ..StopSpec::default()
    };

    let mut legs = Vec::new();
    for branch in [Branch::Plus, Branch::Minus] {
        let start_o = init_ray(&original, p0, eta, branch, 0.0)?;
        let path_o = integrate(&original, &start_o, Direction::Backward, &stops)?;
        let start_w = init_ray(&white, p0, eta, branch.flipped(), 0.0)?;
        let path_w = integrate(&white, &start_w, Direction::Forward, &stops)?;

        let mut leg = base_leg(&path_w);
        // Label by the original root so the outcome reads as a statement
        // about the inflow background's family.
        leg.branch = branch;

        let worst = reversal_discrepancy(&path_w, &path_o, grid_max);
        leg.checks.push(CheckRecord::new(
            "forward_run_retraces_reversed_backward_run",
            worst,
            Some(1e-8),
            worst <= 1e-8,
        ));

        // The trapped negative-root leg approaches the (white-hole)
        // horizon; fit the gap so the asymptotic label is earned.
        if branch == Branch::Minus {
            push_exp_approach_fit(&mut leg, &path_w, a_abs, "rho - rho_horizon");
            leg.winding_turns = Some(winding_after_turning(&path_w));
        }
        legs.push(leg);
    }

    Ok(ScenarioOutcome {
        id: "white-hole-reversal".into(),
        model: white,
        eta,
        start: p0,
        legs,
        checks,
        energy: None,
    })
}

/// Max over a uniform grid of the coordinate discrepancy between a
/// forward white-hole path at `x0 = t` and a backward original path at
/// `x0 = -t`.
fn reversal_discrepancy(path_w: &GeodesicPath, path_o: &GeodesicPath, grid_max: f64) -> f64 {
    let cover_w = path_w.last_sample().x0.abs();
    let cover_o = path_o.last_sample().x0.abs();
    let t_max = grid_max.min(0.99 * cover_w.min(cover_o));
    let n = 50;
    let mut worst = 0.0f64;
    for i in 0..=n {
        let t = t_max * i as f64 / n as f64;
        match (path_w.state_at_x0(t), path_o.state_at_x0(-t)) {
            (Some((pw, _)), Some((po, _))) => {
                worst = worst
                    .max((pw.rho - po.rho).abs())
                    .max((pw.phi - po.phi).abs())
                    .max((pw.z - po.z).abs());
            }
            _ => return f64::INFINITY,
        }
    }
    worst
}

/// Shared turning-radius verification: exactly one turning event whose
/// radius matches the closed form to a part in 10^7.
fn push_turning_match(checks: &mut Vec<CheckRecord>, found: &[f64], expected: Option<&f64>) {
    checks.push(CheckRecord::new(
        "single_turning_point",
        found.len() as f64,
        Some(1.0),
        found.len() == 1,
    ));
    if let (Some(&f), Some(&e)) = (found.first(), expected) {
        let d = rel_diff(f, e);
        checks.push(CheckRecord::new(
            "turning_radius_matches_closed_form",
            d,
            Some(1e-7),
            d <= 1e-7,
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::Direction;
    use crate::scenarios::failing;

    #[test]
    fn superradiant_vortex_family_behaves_and_verifies() {
        let out = run_acoustic_superradiant(-1.0, 10.0, 2.5).unwrap();
        assert_eq!(out.id, "vortex-superradiant");
        assert_eq!(out.legs.len(), 4);
        assert_eq!(
            out.leg(Branch::Plus, Direction::Forward).unwrap().classification,
            Classification::EscapesToInfinity
        );
        assert_eq!(
            out.leg(Branch::Minus, Direction::Forward).unwrap().classification,
            Classification::CrossesOuterHorizon
        );
        assert_eq!(
            out.leg(Branch::Plus, Direction::Backward).unwrap().classification,
            Classification::TurnsThenEscapes
        );
        let trapped = out.leg(Branch::Minus, Direction::Backward).unwrap();
        assert_eq!(
            trapped.classification,
            Classification::AsymptoticHorizonApproach
        );
        assert!(trapped.winding_turns.unwrap() > 1.0);
        let energy = out.energy.as_ref().unwrap();
        assert!(energy.superradiant);
        assert!(energy.e_minus < 0.0);
        assert!(out.all_verified(), "failed: {:?}", failing(&out));
    }

    #[test]
    fn weak_circulation_fails_the_gate() {
        let err = run_acoustic_superradiant(-1.0, 5.0, 2.5).unwrap_err();
        assert!(matches!(err, ScenarioError::GateFailed(_)));
        // Threshold at these parameters is 5.5; just above passes the gate.
        assert!(run_acoustic_superradiant(-1.0, 5.51, 2.5).is_ok());
    }

    #[test]
    fn outflow_fails_the_inflow_gate() {
        let err = run_acoustic_superradiant(1.0, 10.0, 2.5).unwrap_err();
        assert!(matches!(err, ScenarioError::GateFailed(_)));
    }

    #[test]
    fn horizonless_vortex_spirals_to_the_axis() {
        let out = run_acoustic_naked(10.0, 2.5, -0.1).unwrap();
        assert_eq!(out.id, "vortex-naked");
        assert_eq!(
            out.leg(Branch::Plus, Direction::Forward).unwrap().classification,
            Classification::EscapesToInfinity
        );
        let spiral = out.leg(Branch::Minus, Direction::Forward).unwrap();
        assert_eq!(spiral.classification, Classification::TerminatesAtCenter);
        // Many turns on the way in.
        assert!(spiral.winding_turns.unwrap() > 3.0);
        let fit = &spiral.fits[0];
        assert!((fit.exponent.unwrap() + 2.0).abs() <= 0.1);
        assert!(out.all_verified(), "failed: {:?}", failing(&out));
    }

    #[test]
    fn untrapped_covector_fails_the_horizonless_gate() {
        // eta_rho too large for the trapping inequality at rho0 close to B.
        let err = run_acoustic_naked(2.6, 2.5, -0.9).unwrap_err();
        assert!(matches!(err, ScenarioError::GateFailed(_)));
    }

    #[test]
    fn short_lived_family_is_swallowed_but_superradiant() {
        let rho0 = (9.0f64 / 8.0).sqrt();
        let out = run_acoustic_shortlived(-1.0, 0.5, rho0).unwrap();
        assert_eq!(out.id, "vortex-short-lived");
        for leg in &out.legs {
            assert_eq!(leg.classification, Classification::CrossesOuterHorizon);
        }
        assert!(out.energy.as_ref().unwrap().superradiant);
        assert!(out.all_verified(), "failed: {:?}", failing(&out));
    }

    #[test]
    fn white_hole_forward_runs_retrace_reversed_backward_runs() {
        let out = run_white_hole(1.0, -10.0, 2.5).unwrap();
        assert_eq!(out.id, "white-hole-reversal");
        assert_eq!(out.legs.len(), 2);
        for leg in &out.legs {
            let c = leg
                .checks
                .iter()
                .find(|c| c.name == "forward_run_retraces_reversed_backward_run")
                .unwrap();
            assert!(c.passed, "discrepancy {}", c.value);
        }
        assert!(out.all_verified(), "failed: {:?}", failing(&out));
    }
}
