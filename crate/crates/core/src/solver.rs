//! Tangent-angle exponential integrator.
//!
//! Each interface is carried as `θ = η + k(x+π)` on the unit-speed shape,
//! the inverse squared speed `ε = σ⁻²` and the centroid `c`. One step
//!
//! 1. rebuilds every `ψ_i`, evaluates `F_i`, `Ḟ_i` and `a_i = θ̇² - F θ̇`;
//! 2. extrapolates `a`, `θ̇`, `F`, `Ḟ` linearly to the end of the step;
//! 3. advances `σ` from `σσ' = -μ_a` and sets `dw = dt (ε_n + ε_{n+1})/2`;
//! 4. applies the exponential update to the Fourier modes of `η`;
//! 5. moves the centroid by the trapezoid rule.
//!
//! The first step has no history and uses constant extrapolation.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::diagnostics::self_intersections;
use crate::error::{GeometryError, SolverError};
use crate::geometry::{
    closure_defect, resample_constant_speed, tangent_angle_lift, AngleField, Curve, Vec2,
};
use crate::nonlocal::{force_and_derivative, min_distance, Interface, InteractionSystem};
use crate::spectral::{self, PeriodicField};

/// `E_j(x)` with `E₀(x) = eˣ` and `x E_{j+1}(x) = E_j(x) - E_j(0)`, for `j ≤ 2`.
pub fn phi_function(j: u32, x: f64) -> f64 {
    assert!(j <= 2, "phi functions are defined for j in 0..=2");
    if j == 0 {
        return x.exp();
    }
    if x.abs() < 1e-2 {
        // Σ_{n=0}^{8} xⁿ/(n+j)!
        let mut fact = 1.0;
        for k in 2..=j {
            fact *= k as f64;
        }
        let mut term = 1.0 / fact;
        let mut sum = term;
        for n in 1..=8u32 {
            term *= x / (n + j) as f64;
            sum += term;
        }
        return sum;
    }
    let em1 = x.exp_m1();
    match j {
        1 => em1 / x,
        _ => (em1 - x) / (x * x),
    }
}

/// `P₁(s; v₀, v₋₁, τ₋₁) = v₀(1 + s/τ₋₁) - (s/τ₋₁) v₋₁`, or `v₀` without history.
pub fn extrapolate(v_now: f64, prev: Option<(f64, f64)>, s: f64) -> f64 {
    match prev {
        Some((v_prev, dt_prev)) => {
            let r = s / dt_prev;
            v_now * (1.0 + r) - r * v_prev
        }
        None => v_now,
    }
}

/// Field version of [`extrapolate`].
pub fn extrapolate_field(
    v_now: &PeriodicField,
    prev: Option<(&PeriodicField, f64)>,
    s: f64,
) -> PeriodicField {
    match prev {
        Some((v_prev, dt_prev)) => {
            let r = s / dt_prev;
            v_now.zip_map(v_prev, |a, b| a * (1.0 + r) - r * b)
        }
        None => v_now.clone(),
    }
}

/// Largest step keeping the updated speed real:
/// `½σ² / (|μ_a| + √(|μ_a| + |Δμ_a| σ²/2))`, `+∞` when both rates vanish.
pub fn max_timestep(sigma: f64, mu_a: f64, dmu_a: f64) -> f64 {
    let denom = mu_a.abs() + (mu_a.abs() + dmu_a.abs() * sigma * sigma / 2.0).sqrt();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        0.5 * sigma * sigma / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("speed radicand {radicand:e} is not positive")]
pub struct RadicandCollapse {
    pub radicand: f64,
}

/// `σ_{n+1} = √(σ_n² - dt[2μ_n + (dt/dt_prev)(μ_n - μ_prev)])`.
pub fn update_speed(
    sigma: f64,
    mu_a: f64,
    prev: Option<(f64, f64)>,
    dt: f64,
) -> Result<f64, RadicandCollapse> {
    let bracket = match prev {
        Some((mu_prev, dt_prev)) => 2.0 * mu_a + (dt / dt_prev) * (mu_a - mu_prev),
        None => 2.0 * mu_a,
    };
    let radicand = sigma * sigma - dt * bracket;
    if radicand > 0.0 {
        Ok(radicand.sqrt())
    } else {
        Err(RadicandCollapse { radicand })
    }
}

/// Exponential update of Fourier coefficients of `η` over a diffusive time `dw`.
pub fn fourier_update(
    eta: &mut [Complex64],
    g_start: &[Complex64],
    g_end: &[Complex64],
    dw: f64,
) {
    let m = eta.len();
    for idx in 0..m {
        let l = spectral::wavenumber(m, idx) as f64;
        let x = -l * l * dw;
        let e0 = phi_function(0, x);
        let e1 = phi_function(1, x);
        let e2 = phi_function(2, x);
        eta[idx] = eta[idx] * e0 + (g_start[idx] * e1 + (g_end[idx] - g_start[idx]) * e2) * dw;
    }
}

/// Fields kept from the previous step for the linear extrapolants.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub theta_dot: PeriodicField,
    pub a: PeriodicField,
    pub force: PeriodicField,
    pub force_dot: PeriodicField,
    pub mu_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceState {
    pub eta: PeriodicField,
    pub winding: i64,
    pub epsilon: f64,
    pub centroid: Vec2,
    /// Speed at the start of the run, for the collapse threshold.
    pub sigma0: f64,
    pub history: Option<History>,
}

impl InterfaceState {
    /// Lifts a curve after reparametrizing it to constant speed.
    pub fn from_curve(curve: &Curve) -> Result<Self, GeometryError> {
        let uniform = resample_constant_speed(curve)?;
        let angle = tangent_angle_lift(&uniform)?;
        let sigma = uniform.sigma();
        Ok(Self {
            eta: angle.eta,
            winding: angle.winding,
            epsilon: sigma.powi(-2),
            centroid: uniform.centroid(),
            sigma0: sigma,
            history: None,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.epsilon.sqrt().recip()
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.sigma()
    }

    pub fn angle(&self) -> AngleField {
        AngleField {
            eta: self.eta.clone(),
            winding: self.winding,
        }
    }

    /// `ψ = c + σ F̃(τ)`, built without the closure check.
    pub fn curve(&self) -> Result<Curve, GeometryError> {
        let angle = self.angle();
        let tau = angle.tangent();
        let tx = PeriodicField::new(tau.iter().map(|t| t.x).collect())?.periodic_primitive();
        let ty = PeriodicField::new(tau.iter().map(|t| t.y).collect())?.periodic_primitive();
        let sigma = self.sigma();
        Curve::new(
            tx.values()
                .iter()
                .zip(ty.values())
                .map(|(&a, &b)| self.centroid + Vec2::new(a, b) * sigma)
                .collect(),
        )
    }

    pub fn closure_defect(&self) -> f64 {
        closure_defect(&self.angle())
    }
}

/// Full solver state at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentAngleState {
    pub t: f64,
    pub interfaces: Vec<InterfaceState>,
    pub dt_prev: Option<f64>,
}

impl TangentAngleState {
    pub fn from_curves(curves: &[Curve]) -> Result<Self, GeometryError> {
        if curves.is_empty() {
            return Err(GeometryError::InvalidArgument("no curves".into()));
        }
        let m = curves[0].m();
        if curves.iter().any(|c| c.m() != m) {
            return Err(GeometryError::InvalidArgument("grid sizes differ".into()));
        }
        Ok(Self {
            t: 0.0,
            interfaces: curves
                .iter()
                .map(InterfaceState::from_curve)
                .collect::<Result<_, _>>()?,
            dt_prev: None,
        })
    }

    pub fn m(&self) -> usize {
        self.interfaces[0].eta.len()
    }

    pub fn curves(&self) -> Result<Vec<Curve>, GeometryError> {
        self.interfaces.iter().map(InterfaceState::curve).collect()
    }
}

/// Closure defect `|⨍ τ_i|` of interface `i`.
pub fn state_closure_defect(state: &TangentAngleState, i: usize) -> f64 {
    state.interfaces[i].closure_defect()
}

/// Per-interface quantities at the start of a step.
#[derive(Debug, Clone)]
pub struct InterfaceEvaluation {
    pub curve: Curve,
    pub theta_dot: PeriodicField,
    pub force: PeriodicField,
    pub force_dot: PeriodicField,
    pub a: PeriodicField,
    pub mu_a: f64,
}

/// Everything the update needs from time `t_n`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub t: f64,
    pub interfaces: Vec<InterfaceEvaluation>,
}

impl Evaluation {
    pub fn curves(&self) -> Vec<&Curve> {
        self.interfaces.iter().map(|e| &e.curve).collect()
    }
}

fn check_finite(field: &PeriodicField, i: usize) -> Result<(), SolverError> {
    if field.values().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SolverError::NonFinite { i })
    }
}

/// Rebuilds the curves and evaluates the forcing at the current time.
pub fn evaluate(
    state: &TangentAngleState,
    system: &InteractionSystem,
) -> Result<Evaluation, SolverError> {
    if state.interfaces.len() != system.len() {
        return Err(SolverError::Invalid(format!(
            "{} interfaces but system of size {}",
            state.interfaces.len(),
            system.len()
        )));
    }
    let mut views = Vec::with_capacity(state.interfaces.len());
    for (i, s) in state.interfaces.iter().enumerate() {
        check_finite(&s.eta, i)?;
        if !(s.epsilon.is_finite() && s.epsilon > 0.0) {
            return Err(SolverError::NonFinite { i });
        }
        let curve = s.curve().map_err(|_| SolverError::NonFinite { i })?;
        views.push(Interface {
            curve,
            sigma: s.sigma(),
            tangent: s.angle().tangent(),
        });
    }
    let mut out = Vec::with_capacity(views.len());
    for (i, s) in state.interfaces.iter().enumerate() {
        let (force, force_dot) = force_and_derivative(&views, system, i)?;
        check_finite(&force, i)?;
        check_finite(&force_dot, i)?;
        let theta_dot = s.angle().theta_dot();
        let a = theta_dot.zip_map(&force, |k, f| k * k - f * k);
        let mu_a = a.mean();
        out.push(InterfaceEvaluation {
            curve: views[i].curve.clone(),
            theta_dot,
            force,
            force_dot,
            a,
            mu_a,
        });
    }
    Ok(Evaluation {
        t: state.t,
        interfaces: out,
    })
}

/// Largest admissible step at the current evaluation, before the safety factor.
pub fn restricted_timestep(state: &TangentAngleState, eval: &Evaluation) -> f64 {
    state
        .interfaces
        .iter()
        .zip(&eval.interfaces)
        .map(|(s, e)| {
            let dmu = match (&s.history, state.dt_prev) {
                (Some(h), Some(dtp)) => (e.mu_a - h.mu_a) / dtp,
                _ => 0.0,
            };
            max_timestep(s.sigma(), e.mu_a, dmu)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceRecord {
    pub length: f64,
    pub epsilon: f64,
    /// `μ_a` at the start of the step.
    pub mu_a: f64,
    /// `max |F|` at the start of the step.
    pub max_force: f64,
    pub closure_defect: f64,
    /// Smallest distance to any other interface, `+∞` for a single interface.
    pub min_pair_dist: f64,
    /// `∫ ε dt` over the step.
    pub dw: f64,
}

/// Summary of one step; geometry refers to the end of the step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub interfaces: Vec<InterfaceRecord>,
}

/// Smallest distance from interface `i` to the others at an evaluation.
pub fn min_pair_distance(eval: &Evaluation, i: usize) -> f64 {
    (0..eval.interfaces.len())
        .filter(|&j| j != i)
        .map(|j| min_distance(&eval.interfaces[i].curve, &eval.interfaces[j].curve))
        .fold(f64::INFINITY, f64::min)
}

/// Advances the state by `dt` from a fresh evaluation.
pub fn advance(
    state: &TangentAngleState,
    eval: &Evaluation,
    dt: f64,
) -> Result<(TangentAngleState, StepRecord), SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::Invalid(format!("time step must be positive, got {dt}")));
    }
    let m = state.m();
    let mut next = Vec::with_capacity(state.interfaces.len());
    let mut records = Vec::with_capacity(state.interfaces.len());
    for (i, (s, e)) in state.interfaces.iter().zip(&eval.interfaces).enumerate() {
        let hist = match (&s.history, state.dt_prev) {
            (Some(h), Some(dtp)) => Some((h, dtp)),
            _ => None,
        };
        let ext = |now: &PeriodicField, pick: fn(&History) -> &PeriodicField| {
            extrapolate_field(now, hist.map(|(h, dtp)| (pick(h), dtp)), dt)
        };
        let a_end = ext(&e.a, |h| &h.a);
        let theta_dot_end = ext(&e.theta_dot, |h| &h.theta_dot);
        let force_end = ext(&e.force, |h| &h.force);
        let force_dot_end = ext(&e.force_dot, |h| &h.force_dot);

        let p0a = e.a.zero_dirichlet_primitive();
        let p0a_end = a_end.zero_dirichlet_primitive();
        let g_start = p0a.mul(&e.theta_dot).sub(&e.force_dot);
        let g_end = p0a_end.mul(&theta_dot_end).sub(&force_dot_end);

        let sigma = s.sigma();
        let sigma_next = update_speed(sigma, e.mu_a, hist.map(|(h, dtp)| (h.mu_a, dtp)), dt)
            .map_err(|_| SolverError::SpeedCollapse { i })?;
        let eps_next = sigma_next.powi(-2);
        let dw = dt * 0.5 * (s.epsilon + eps_next);

        let mut eta_hat = s.eta.coefficients();
        fourier_update(&mut eta_hat, &g_start.coefficients(), &g_end.coefficients(), dw);
        let eta_next = PeriodicField::new(spectral::inverse(&eta_hat))?;
        check_finite(&eta_next, i)?;
        if !eps_next.is_finite() {
            return Err(SolverError::NonFinite { i });
        }

        let angle_now = s.angle();
        let angle_next = AngleField {
            eta: eta_next.clone(),
            winding: s.winding,
        };
        let mean_v = |p0: &PeriodicField, f: &PeriodicField, angle: &AngleField| {
            let tau = angle.tangent();
            let nrm = angle.normal();
            let sum = (0..m).fold(Vec2::ZERO, |acc, j| {
                acc + tau[j] * p0.values()[j] + nrm[j] * f.values()[j]
            });
            sum * (1.0 / m as f64)
        };
        let v_now = mean_v(&p0a, &e.force, &angle_now);
        let v_next = mean_v(&p0a_end, &force_end, &angle_next);
        let centroid =
            s.centroid + (v_next * eps_next.sqrt() + v_now * s.epsilon.sqrt()) * (0.5 * dt);
        if !centroid.is_finite() {
            return Err(SolverError::NonFinite { i });
        }

        records.push(InterfaceRecord {
            length: 2.0 * PI * sigma_next,
            epsilon: eps_next,
            mu_a: e.mu_a,
            max_force: e.force.max_abs(),
            closure_defect: closure_defect(&angle_next),
            min_pair_dist: min_pair_distance(eval, i),
            dw,
        });
        next.push(InterfaceState {
            eta: eta_next,
            winding: s.winding,
            epsilon: eps_next,
            centroid,
            sigma0: s.sigma0,
            history: Some(History {
                theta_dot: e.theta_dot.clone(),
                a: e.a.clone(),
                force: e.force.clone(),
                force_dot: e.force_dot.clone(),
                mu_a: e.mu_a,
            }),
        });
    }
    let t = state.t + dt;
    Ok((
        TangentAngleState {
            t,
            interfaces: next,
            dt_prev: Some(dt),
        },
        StepRecord {
            t,
            dt,
            interfaces: records,
        },
    ))
}

/// One step of at most `dt`, shortened to `safety` times the speed restriction.
pub fn step(
    state: &TangentAngleState,
    system: &InteractionSystem,
    dt: f64,
    safety: f64,
) -> Result<(TangentAngleState, StepRecord), SolverError> {
    let eval = evaluate(state, system)?;
    let dt = dt.min(safety * restricted_timestep(state, &eval));
    advance(state, &eval, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub dt: f64,
    pub t_end: f64,
    pub safety: f64,
    pub check_self_intersection: bool,
    pub terminate_on_self_intersection: bool,
}

impl SolverSettings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            safety: 0.5,
            check_self_intersection: true,
            terminate_on_self_intersection: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    SelfIntersection,
    SpeedCollapse,
    CurvatureBlowup,
    NonFinite,
    Completed,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SelfIntersection => "SelfIntersection",
            EventKind::SpeedCollapse => "SpeedCollapse",
            EventKind::CurvatureBlowup => "CurvatureBlowup",
            EventKind::NonFinite => "NonFinite",
            EventKind::Completed => "Completed",
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, EventKind::SelfIntersection)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub interface: Option<usize>,
    pub detail: String,
    /// Crossing points for self-intersections.
    pub points: Vec<Vec2>,
}

/// Callbacks from [`run`].
pub trait Observer {
    /// Called at every time level before stepping, including the last.
    fn sample(&mut self, _state: &TangentAngleState, _eval: &Evaluation) {}
    fn step(&mut self, _record: &StepRecord) {}
    fn event(&mut self, _event: &Event) {}
}

/// Observer that ignores everything.
pub struct NullObserver;
impl Observer for NullObserver {}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: TangentAngleState,
    pub events: Vec<Event>,
    pub steps: usize,
}

impl RunOutcome {
    pub fn terminal(&self) -> Option<&Event> {
        self.events.iter().rev().find(|e| e.kind.is_terminal())
    }

    pub fn completed(&self) -> bool {
        matches!(self.terminal(), Some(e) if e.kind == EventKind::Completed)
    }
}

fn event_from_error(t: f64, err: &SolverError) -> Event {
    let (kind, interface) = match err {
        SolverError::SpeedCollapse { i } => (EventKind::SpeedCollapse, Some(*i)),
        SolverError::CurvatureBlowup { i, .. } => (EventKind::CurvatureBlowup, Some(*i)),
        SolverError::NonFinite { i } => (EventKind::NonFinite, Some(*i)),
        _ => (EventKind::NonFinite, None),
    };
    Event {
        t,
        kind,
        interface,
        detail: err.to_string(),
        points: Vec::new(),
    }
}

/// Curvature of the unit shape beyond this fraction of `M` counts as blow-up.
pub const CURVATURE_LIMIT_FRACTION: f64 = 0.125;
/// Speed below this fraction of the initial speed counts as collapse.
pub const SPEED_COLLAPSE_FRACTION: f64 = 1e-3;
/// A restricted step below this fraction of the nominal step counts as collapse.
pub const STEP_COLLAPSE_FRACTION: f64 = 1e-6;

/// Steps from `state` to `settings.t_end` or the first terminal event.
pub fn run(
    mut state: TangentAngleState,
    system: &InteractionSystem,
    settings: &SolverSettings,
    observer: &mut dyn Observer,
) -> RunOutcome {
    let m = state.m();
    let mut events = Vec::new();
    let mut embedded = vec![true; state.interfaces.len()];
    let mut steps = 0;
    let emit = |events: &mut Vec<Event>, observer: &mut dyn Observer, e: Event| {
        observer.event(&e);
        events.push(e);
    };
    loop {
        let t = state.t;
        let eval = match evaluate(&state, system) {
            Ok(e) => e,
            Err(err) => {
                emit(&mut events, observer, event_from_error(t, &err));
                break;
            }
        };
        let mut terminal = None;
        for (i, e) in eval.interfaces.iter().enumerate() {
            let kmax = e.theta_dot.max_abs();
            if kmax > CURVATURE_LIMIT_FRACTION * m as f64 {
                terminal = Some(event_from_error(
                    t,
                    &SolverError::CurvatureBlowup {
                        i,
                        max_curvature: kmax,
                    },
                ));
                break;
            }
            if state.interfaces[i].sigma() < SPEED_COLLAPSE_FRACTION * state.interfaces[i].sigma0 {
                terminal = Some(event_from_error(t, &SolverError::SpeedCollapse { i }));
                break;
            }
        }
        if settings.check_self_intersection && terminal.is_none() {
            for (i, e) in eval.interfaces.iter().enumerate() {
                let crossings = self_intersections(&e.curve);
                let now = crossings.is_empty();
                if embedded[i] && !now {
                    emit(
                        &mut events,
                        observer,
                        Event {
                            t,
                            kind: EventKind::SelfIntersection,
                            interface: Some(i),
                            detail: format!("{} crossing(s)", crossings.len()),
                            points: crossings.iter().map(|c| c.point).collect(),
                        },
                    );
                    if settings.terminate_on_self_intersection {
                        terminal = Some(Event {
                            t,
                            kind: EventKind::NonFinite,
                            interface: Some(i),
                            detail: "terminated on self-intersection".into(),
                            points: Vec::new(),
                        });
                    }
                }
                embedded[i] = now;
            }
        }
        observer.sample(&state, &eval);
        if let Some(e) = terminal {
            emit(&mut events, observer, e);
            break;
        }
        let remaining = settings.t_end - t;
        if remaining <= 1e-12 * settings.t_end.max(1.0) {
            emit(
                &mut events,
                observer,
                Event {
                    t,
                    kind: EventKind::Completed,
                    interface: None,
                    detail: format!("{steps} steps"),
                    points: Vec::new(),
                },
            );
            break;
        }
        let limit = settings.safety * restricted_timestep(&state, &eval);
        if limit < STEP_COLLAPSE_FRACTION * settings.dt {
            let i = state
                .interfaces
                .iter()
                .zip(&eval.interfaces)
                .enumerate()
                .min_by(|a, b| {
                    let ta = max_timestep(a.1 .0.sigma(), a.1 .1.mu_a, 0.0);
                    let tb = max_timestep(b.1 .0.sigma(), b.1 .1.mu_a, 0.0);
                    ta.total_cmp(&tb)
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            emit(&mut events, observer, event_from_error(t, &SolverError::SpeedCollapse { i }));
            break;
        }
        let mut dt = settings.dt.min(limit);
        let finishing = remaining <= dt * (1.0 + 1e-9);
        if finishing {
            dt = remaining;
        }
        match advance(&state, &eval, dt) {
            Ok((mut next, record)) => {
                if finishing {
                    next.t = settings.t_end;
                }
                observer.step(&record);
                state = next;
                steps += 1;
            }
            Err(err) => {
                emit(&mut events, observer, event_from_error(t, &err));
                break;
            }
        }
    }
    RunOutcome {
        state,
        events,
        steps,
    }
}
