//! Adaptive explicit Runge-Kutta integration with event localization.
//!
//! The stepper is the Dormand-Prince 5(4) embedded pair with its 4th-order
//! continuous extension. Events are scalar functions of `(t, y)` monitored
//! for sign changes across accepted steps and localized on the dense output
//! by an Illinois-damped regula falsi.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Integration tolerances and budgets.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Per-step absolute error tolerance.
    pub abs_tol: f64,
    /// Per-step relative error tolerance.
    pub rel_tol: f64,
    /// Starting step size; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Stop refining an event root once |g| falls below this.
    pub event_tol: f64,
    /// Time horizon (duration from the start of the call).
    pub max_time: f64,
    /// Hard cap on attempted steps.
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            initial_step: None,
            max_step: f64::INFINITY,
            event_tol: 1e-12,
            max_time: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

/// Which sign changes of an event function fire the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    Rising,
    Falling,
    Any,
}

/// A scalar event function with a crossing direction and a terminal flag.
pub struct EventSpec<'a, const N: usize> {
    pub f: &'a dyn Fn(f64, &[f64; N]) -> Result<f64>,
    pub direction: CrossingDirection,
    pub terminal: bool,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn terminal(
        f: &'a dyn Fn(f64, &[f64; N]) -> Result<f64>,
        direction: CrossingDirection,
    ) -> Self {
        EventSpec { f, direction, terminal: true }
    }
}

/// A localized event occurrence.
#[derive(Debug, Clone, Copy)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
    /// Event function value at the reported point.
    pub g: f64,
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// A terminal event fired; the payload is the event index.
    TerminalEvent(usize),
    /// `max_time` elapsed without a terminal event.
    HorizonReached,
}

/// Integration output: end point, event log, and optional dense samples.
#[derive(Debug, Clone)]
pub struct Integration<const N: usize> {
    pub t_end: f64,
    pub y_end: [f64; N],
    pub outcome: Outcome,
    pub events: Vec<EventHit<N>>,
    pub samples: Vec<(f64, [f64; N])>,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// y1 - yhat1, for the embedded error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights for the 4th-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
struct DenseStep<const N: usize> {
    t0: f64,
    h: f64,
    r1: [f64; N],
    r2: [f64; N],
    r3: [f64; N],
    r4: [f64; N],
    r5: [f64; N],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, theta: f64) -> [f64; N] {
        let th1 = 1.0 - theta;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.r1[i]
                + theta
                    * (self.r2[i] + th1 * (self.r3[i] + theta * (self.r4[i] + th1 * self.r5[i])));
        }
        y
    }

    fn t_at(&self, theta: f64) -> f64 {
        self.t0 + theta * self.h
    }
}

/// Time window below which event roots are considered localized.
const EVENT_TIME_FLOOR: f64 = 1e-13;
const EVENT_MAX_ITERS: usize = 200;

fn crossed(g0: f64, g1: f64, direction: CrossingDirection) -> bool {
    match direction {
        CrossingDirection::Falling => g0 > 0.0 && g1 <= 0.0,
        CrossingDirection::Rising => g0 < 0.0 && g1 >= 0.0,
        CrossingDirection::Any => (g0 > 0.0 && g1 <= 0.0) || (g0 < 0.0 && g1 >= 0.0),
    }
}

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` until a terminal event or
/// the time horizon.
///
/// Per-step local error is kept within `abs_tol + rel_tol * |y|`. The first
/// terminal event (in time, with the required crossing direction) stops the
/// integration at the localized root. When `sample_dt` is given, the dense
/// output is sampled on that grid, always including the start and end
/// points.
pub fn integrate_adaptive<const N: usize, F>(
    f: F,
    y0: &[f64; N],
    t0: f64,
    cfg: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
    sample_dt: Option<f64>,
) -> Result<Integration<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let t_end = if cfg.max_time.is_finite() { t0 + cfg.max_time } else { f64::INFINITY };

    let mut t = t0;
    let mut y = *y0;
    let mut k1 = f(t, &y)?;

    let mut g_prev: Vec<f64> = Vec::with_capacity(events.len());
    for ev in events {
        g_prev.push((ev.f)(t, &y)?);
    }

    let mut samples: Vec<(f64, [f64; N])> = Vec::new();
    let mut next_sample = f64::INFINITY;
    if let Some(dt) = sample_dt {
        samples.push((t, y));
        next_sample = t0 + dt;
    }

    let mut hits: Vec<EventHit<N>> = Vec::new();

    let mut h = match cfg.initial_step {
        Some(h0) => h0,
        None => initial_step_heuristic(&f, t0, &y, &k1, cfg)?,
    };
    h = h.min(cfg.max_step);

    let mut accepted = 0u64;
    let mut rejected = 0u64;
    let mut attempts = 0u64;
    let mut just_rejected = false;

    loop {
        if t >= t_end {
            if sample_dt.is_some() && samples.last().map(|s| s.0) != Some(t) {
                samples.push((t, y));
            }
            return Ok(Integration {
                t_end: t,
                y_end: y,
                outcome: Outcome::HorizonReached,
                events: hits,
                samples,
                steps_accepted: accepted,
                steps_rejected: rejected,
            });
        }

        let mut h_step = h.min(t_end - t);
        if h_step <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            // the remaining gap to the horizon is below resolution
            if t_end - t <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                t = t_end;
                continue;
            }
            return Err(Error::StepSizeUnderflow { t });
        }

        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(Error::MaxStepsExceeded { t });
        }

        // stage evaluations
        let k2 = f(t + C2 * h_step, &stage1(&y, h_step, &k1))?;
        let k3 = f(t + C3 * h_step, &stage2(&y, h_step, &k1, &k2))?;
        let k4 = f(t + C4 * h_step, &stage3(&y, h_step, &k1, &k2, &k3))?;
        let k5 = f(t + C5 * h_step, &stage4(&y, h_step, &k1, &k2, &k3, &k4))?;
        let k6 = f(t + h_step, &stage5(&y, h_step, &k1, &k2, &k3, &k4, &k5))?;

        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i]
                + h_step
                    * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = f(t + h_step, &y1)?;

        // weighted RMS error of the embedded 4th-order solution
        let mut err_acc = 0.0;
        for i in 0..N {
            let e = h_step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            err_acc += (e / sc) * (e / sc);
        }
        let err = math::sqrt(err_acc / N as f64);

        if err > 1.0 {
            rejected += 1;
            just_rejected = true;
            let factor = (0.9 * math::powf(err, -0.2)).max(0.2);
            h = h_step * factor;
            continue;
        }

        // accepted: build the continuous extension
        let mut dense = DenseStep {
            t0: t,
            h: h_step,
            r1: y,
            r2: [0.0; N],
            r3: [0.0; N],
            r4: [0.0; N],
            r5: [0.0; N],
        };
        for i in 0..N {
            let dy = y1[i] - y[i];
            let bspl = h_step * k1[i] - dy;
            dense.r2[i] = dy;
            dense.r3[i] = bspl;
            dense.r4[i] = dy - h_step * k7[i] - bspl;
            dense.r5[i] = h_step
                * (D1 * k1[i]
                    + D3 * k3[i]
                    + D4 * k4[i]
                    + D5 * k5[i]
                    + D6 * k6[i]
                    + D7 * k7[i]);
        }

        // event scan over the step
        let mut step_hits: Vec<(f64, usize, f64, [f64; N])> = Vec::new();
        let mut g_new: Vec<f64> = Vec::with_capacity(events.len());
        for (idx, ev) in events.iter().enumerate() {
            let g1 = (ev.f)(t + h_step, &y1)?;
            if crossed(g_prev[idx], g1, ev.direction) {
                let (theta, g_at, y_at) =
                    locate_root(&dense, ev, g_prev[idx], g1, cfg.event_tol)?;
                step_hits.push((dense.t_at(theta), idx, g_at, y_at));
            }
            g_new.push(g1);
        }
        step_hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));

        for (t_hit, idx, g_at, y_at) in step_hits {
            if sample_dt.is_some() {
                while next_sample <= t_hit {
                    let theta = ((next_sample - t) / h_step).clamp(0.0, 1.0);
                    samples.push((next_sample, dense.eval(theta)));
                    next_sample += sample_dt.unwrap();
                }
            }
            hits.push(EventHit { index: idx, t: t_hit, y: y_at, g: g_at });
            if events[idx].terminal {
                if sample_dt.is_some() {
                    samples.push((t_hit, y_at));
                }
                return Ok(Integration {
                    t_end: t_hit,
                    y_end: y_at,
                    outcome: Outcome::TerminalEvent(idx),
                    events: hits,
                    samples,
                    steps_accepted: accepted + 1,
                    steps_rejected: rejected,
                });
            }
        }

        if sample_dt.is_some() {
            while next_sample <= t + h_step {
                let theta = ((next_sample - t) / h_step).clamp(0.0, 1.0);
                samples.push((next_sample, dense.eval(theta)));
                next_sample += sample_dt.unwrap();
            }
        }

        accepted += 1;
        t += h_step;
        y = y1;
        k1 = k7;
        g_prev = g_new;

        let facmax = if just_rejected { 1.0 } else { 10.0 };
        just_rejected = false;
        let factor = if err == 0.0 {
            facmax
        } else {
            (0.9 * math::powf(err, -0.2)).clamp(0.2, facmax)
        };
        h = (h_step * factor).min(cfg.max_step);
    }
}

/// Hairer's starting-step heuristic: balance the size of the state against
/// its first and (estimated) second derivative.
fn initial_step_heuristic<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    cfg: &IntegratorConfig,
) -> Result<f64>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = math::sqrt(d0 / N as f64);
    d1 = math::sqrt(d1 / N as f64);

    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * (d0 / d1) };
    let h0 = h0.min(cfg.max_step).min(cfg.max_time.abs());

    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let f1 = f(t0 + h0, &y1)?;

    let mut d2 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        let df = (f1[i] - f0[i]) / sc;
        d2 += df * df;
    }
    let d2 = math::sqrt(d2 / N as f64) / h0;

    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        math::powf(0.01 / dm, 0.2)
    };
    Ok((100.0 * h0).min(h1).min(cfg.max_step))
}

/// Localizes an event root within one accepted step via Illinois regula
/// falsi on the dense output. Returns `(theta, g(theta), y(theta))`.
fn locate_root<const N: usize>(
    dense: &DenseStep<N>,
    ev: &EventSpec<'_, N>,
    g0: f64,
    g1: f64,
    value_tol: f64,
) -> Result<(f64, f64, [f64; N])> {
    if g1 == 0.0 {
        let y = dense.eval(1.0);
        return Ok((1.0, 0.0, y));
    }

    let (mut a, mut fa) = (0.0f64, g0);
    let (mut b, mut fb) = (1.0f64, g1);
    let mut side = 0i8;
    let mut best = (b, fb);

    for _ in 0..EVENT_MAX_ITERS {
        let mut m = (a * fb - b * fa) / (fb - fa);
        if !(m > a && m < b) {
            m = 0.5 * (a + b);
        }
        let ym = dense.eval(m);
        let fm = (ev.f)(dense.t_at(m), &ym)?;
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm.abs() <= value_tol {
            return Ok((m, fm, ym));
        }
        if (b - a) * dense.h.abs() <= EVENT_TIME_FLOOR {
            let yb = dense.eval(best.0);
            return Ok((best.0, best.1, yb));
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    let yb = dense.eval(best.0);
    Ok((best.0, best.1, yb))
}

fn stage1<const N: usize>(y: &[f64; N], h: f64, k1: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h * A21 * k1[i];
    }
    out
}

fn stage2<const N: usize>(y: &[f64; N], h: f64, k1: &[f64; N], k2: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    out
}

fn stage3<const N: usize>(
    y: &[f64; N],
    h: f64,
    k1: &[f64; N],
    k2: &[f64; N],
    k3: &[f64; N],
) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    out
}

fn stage4<const N: usize>(
    y: &[f64; N],
    h: f64,
    k1: &[f64; N],
    k2: &[f64; N],
    k3: &[f64; N],
    k4: &[f64; N],
) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    out
}

fn stage5<const N: usize>(
    y: &[f64; N],
    h: f64,
    k1: &[f64; N],
    k2: &[f64; N],
    k3: &[f64; N],
    k4: &[f64; N],
    k5: &[f64; N],
) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] =
            y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.81;

    fn ballistic(_t: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
        // y = [x, z, xd, zd]
        Ok([y[2], y[3], 0.0, -G])
    }

    #[test]
    fn ballistic_apex_event() {
        let y0 = [0.0, 1.0, 2.0, 3.0];
        let apex = |_t: f64, y: &[f64; 4]| -> Result<f64> { Ok(y[3]) };
        let events =
            [EventSpec::terminal(&apex, CrossingDirection::Falling)];
        let cfg = IntegratorConfig { max_time: 2.0, ..Default::default() };
        let out = integrate_adaptive(ballistic, &y0, 0.0, &cfg, &events, None).unwrap();
        assert_eq!(out.outcome, Outcome::TerminalEvent(0));
        assert!((out.t_end - 3.0 / G).abs() < 1e-10, "t_apex = {}", out.t_end);
        assert!((out.y_end[1] - (1.0 + 9.0 / (2.0 * G))).abs() < 1e-9);
        assert!(out.y_end[3].abs() <= 1e-10);
    }

    #[test]
    fn harmonic_zero_crossing_at_half_pi() {
        let f = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2]> { Ok([y[1], -y[0]]) };
        let pos = |_t: f64, y: &[f64; 2]| -> Result<f64> { Ok(y[0]) };
        let events = [EventSpec::terminal(&pos, CrossingDirection::Falling)];
        let cfg = IntegratorConfig { max_time: 10.0, ..Default::default() };
        let out = integrate_adaptive(f, &[1.0, 0.0], 0.0, &cfg, &events, None).unwrap();
        assert!((out.t_end - core::f64::consts::FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn horizon_reached_without_event() {
        let f = |_t: f64, y: &[f64; 1]| -> Result<[f64; 1]> { Ok([-y[0]]) };
        let never = |_t: f64, _y: &[f64; 1]| -> Result<f64> { Ok(1.0) };
        let events = [EventSpec::terminal(&never, CrossingDirection::Falling)];
        let cfg = IntegratorConfig { max_time: 1.0, ..Default::default() };
        let out = integrate_adaptive(f, &[1.0], 0.0, &cfg, &events, None).unwrap();
        assert_eq!(out.outcome, Outcome::HorizonReached);
        assert!((out.t_end - 1.0).abs() < 1e-12);
        assert!((out.y_end[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn tighter_tolerances_shrink_endpoint_error() {
        // fixed-horizon harmonic oscillator; exact solution cos(t)
        let f = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2]> { Ok([y[1], -y[0]]) };
        let t_final = 10.0;
        let exact = t_final.cos();
        let mut errs = Vec::new();
        for tol in [1e-4, 1e-6, 1e-8] {
            let cfg = IntegratorConfig {
                abs_tol: tol,
                rel_tol: tol,
                max_time: t_final,
                ..Default::default()
            };
            let out = integrate_adaptive(f, &[1.0, 0.0], 0.0, &cfg, &[], None).unwrap();
            errs.push((out.y_end[0] - exact).abs());
        }
        // each 100x tolerance drop should cut the error by well over 10x
        assert!(errs[1] < errs[0] / 10.0, "errors: {errs:?}");
        assert!(errs[2] < errs[1] / 10.0, "errors: {errs:?}");
    }

    #[test]
    fn dense_samples_cover_grid() {
        let cfg = IntegratorConfig { max_time: 0.5, ..Default::default() };
        let out =
            integrate_adaptive(ballistic, &[0.0, 1.0, 2.0, 3.0], 0.0, &cfg, &[], Some(0.01))
                .unwrap();
        assert!(out.samples.len() >= 50);
        assert_eq!(out.samples[0].0, 0.0);
        assert!((out.samples.last().unwrap().0 - 0.5).abs() < 1e-12);
        // interior samples obey the closed-form arc
        for &(t, y) in &out.samples {
            let z = 1.0 + 3.0 * t - 0.5 * G * t * t;
            assert!((y[1] - z).abs() < 1e-8, "sample at {t}");
        }
    }

    #[test]
    fn nonterminal_events_recorded_and_passed() {
        let f = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2]> { Ok([y[1], -y[0]]) };
        let pos = |_t: f64, y: &[f64; 2]| -> Result<f64> { Ok(y[0]) };
        let ev = EventSpec { f: &pos, direction: CrossingDirection::Any, terminal: false };
        let cfg = IntegratorConfig { max_time: 10.0, ..Default::default() };
        let out = integrate_adaptive(f, &[1.0, 0.0], 0.0, &cfg, &[ev], None).unwrap();
        assert_eq!(out.outcome, Outcome::HorizonReached);
        // crossings at pi/2, 3pi/2, 5pi/2
        assert_eq!(out.events.len(), 3);
        for (i, hit) in out.events.iter().enumerate() {
            let expect = core::f64::consts::FRAC_PI_2 * (2 * i + 1) as f64;
            assert!((hit.t - expect).abs() < 1e-8, "crossing {i} at {}", hit.t);
        }
    }

    #[test]
    fn max_steps_is_enforced() {
        let f = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2]> { Ok([y[1], -y[0]]) };
        let cfg = IntegratorConfig { max_time: 1e6, max_steps: 100, ..Default::default() };
        match integrate_adaptive(f, &[1.0, 0.0], 0.0, &cfg, &[], None) {
            Err(Error::MaxStepsExceeded { .. }) => {}
            other => panic!("expected step cap error, got {other:?}"),
        }
    }
}
