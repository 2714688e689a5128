//! Embedded Runge-Kutta 4(5) integrator (Dormand-Prince pair) with
//! component-wise domain guards.
//!
//! The pair advances with the 5th-order solution and controls the step from
//! the embedded 4th-order error estimate. Guarded components reject trial
//! steps that cross below `-atol`; monotone components are kept
//! nondecreasing on acceptance. Non-finite components of the initial state
//! are excluded from error control and flow through untouched arithmetic
//! (the SIR incidence accumulator uses this to represent "never reset").

use std::fmt;

/// Relative/absolute tolerances for the adaptive controller.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        if !(self.rtol > 0.0 && self.rtol.is_finite())
            || !(self.atol > 0.0 && self.atol.is_finite())
        {
            return Err(IntegrationError::InvalidInput(
                "tolerances must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Same pair with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
        }
    }
}

/// Domain constraints applied per component during stepping.
#[derive(Debug, Clone, Copy)]
pub struct ComponentGuard<const N: usize> {
    /// Trial steps driving these components below `-atol` are rejected and
    /// the step halved; at the minimum step size, values in `[-atol, 0)`
    /// are clamped to zero.
    pub nonneg: [bool; N],
    /// These components are clamped to be nondecreasing on acceptance
    /// (quadrature accumulators under roundoff).
    pub monotone: [bool; N],
}

impl<const N: usize> ComponentGuard<N> {
    pub fn none() -> Self {
        Self {
            nonneg: [false; N],
            monotone: [false; N],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationError {
    /// The controller cannot satisfy tolerance or domain guards above the
    /// minimum step size; signals stiffness or blow-up.
    StepSizeUnderflow {
        t: f64,
        h: f64,
    },
    /// Step budget exhausted before reaching the end time.
    MaxSteps {
        t: f64,
    },
    /// An accepted state failed the caller's invariant check.
    DomainViolation {
        t: f64,
        detail: String,
    },
    InvalidInput(String),
}

impl fmt::Display for IntegrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrationError::StepSizeUnderflow { t, h } => {
                write!(f, "step size underflow at t={t} (h={h:.3e})")
            }
            IntegrationError::MaxSteps { t } => write!(f, "step budget exhausted at t={t}"),
            IntegrationError::DomainViolation { t, detail } => {
                write!(f, "domain violation at t={t}: {detail}")
            }
            IntegrationError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl std::error::Error for IntegrationError {}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal the last A row (FSAL); error weights are the
// difference against the embedded 4th-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 10_000_000;

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1`, returning the state at
/// `t1`. `step_check` is evaluated on every accepted state; returning an
/// error message aborts with `DomainViolation`.
pub fn integrate_adaptive<const N: usize, R, S>(
    rhs: R,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    tol: &Tolerances,
    guard: &ComponentGuard<N>,
    step_check: S,
) -> Result<[f64; N], IntegrationError>
where
    R: Fn(f64, &[f64; N]) -> [f64; N],
    S: Fn(f64, &[f64; N]) -> Result<(), String>,
{
    tol.validate()?;
    if t1 <= t0 || t1.is_nan() || t0.is_nan() {
        return Err(IntegrationError::InvalidInput(format!(
            "t1 must exceed t0 (got t0={t0}, t1={t1})"
        )));
    }
    let span = t1 - t0;
    let h_min = (1e-12_f64).max(8.0 * f64::EPSILON * t0.abs().max(t1.abs()));

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&y, &k1, span, tol).max(h_min);
    let mut last_rejected = false;

    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        // A step that consumes the whole remaining span must land exactly
        // on t1; summing t + h can round a hair short and strand the loop
        // on a sub-ulp remainder.
        let reaches_end = h == t1 - t;
        let at_min = h <= h_min + f64::EPSILON * h_min;

        // Stages (k1 carried over via FSAL).
        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        // The 5th-order solution is stage 7's argument; A[6] holds its weights.
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[6][j];
            if b != 0.0 {
                for i in 0..N {
                    y_new[i] += h * b * kj[i];
                }
            }
        }

        // Error estimate against the embedded 4th-order solution.
        let mut err_sq = 0.0;
        let mut counted = 0usize;
        let mut finite = true;
        for i in 0..N {
            if !y[i].is_finite() {
                continue; // untracked component
            }
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            let r = e / scale;
            if !r.is_finite() {
                finite = false;
                break;
            }
            err_sq += r * r;
            counted += 1;
        }
        let err = if !finite {
            f64::INFINITY
        } else if counted == 0 {
            0.0
        } else {
            (err_sq / counted as f64).sqrt()
        };

        // Domain guard on the trial state.
        let guard_reject = guard
            .nonneg
            .iter()
            .zip(&y_new)
            .any(|(guarded, y)| *guarded && *y < -tol.atol);

        if guard_reject && !at_min {
            h = (h * 0.5).max(h_min);
            last_rejected = true;
            continue;
        }
        if err > 1.0 && !at_min {
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h = (h * fac).max(h_min);
            last_rejected = true;
            continue;
        }
        if (guard_reject || err > 1.0) && at_min {
            // Minimum step: tolerate values in [-atol, 0) by clamping, but a
            // guard breach beyond -atol (or non-finite error) cannot be met.
            if guard_reject || !finite {
                return Err(IntegrationError::StepSizeUnderflow { t, h });
            }
            // Accept the over-tolerance step; nothing smaller exists.
        }

        // Accept.
        for i in 0..N {
            if guard.nonneg[i] && y_new[i] < 0.0 && y_new[i] >= -tol.atol && at_min {
                y_new[i] = 0.0;
            }
            if guard.monotone[i] {
                y_new[i] = y_new[i].max(y[i]);
            }
        }
        t = if reaches_end { t1 } else { t + h };
        y = y_new;
        step_check(t, &y).map_err(|detail| IntegrationError::DomainViolation { t, detail })?;
        k1 = k[6]; // FSAL: stage 7 is rhs at the accepted step end
        if t < t1 {
            let fac_cap = if last_rejected { 1.0 } else { FAC_MAX };
            let fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, fac_cap);
            h = (h * fac).max(h_min);
        }
        last_rejected = false;
    }
    Err(IntegrationError::MaxSteps { t })
}

/// Crude automatic initial step: balance solution and derivative scales.
fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N], span: f64, tol: &Tolerances) -> f64 {
    let mut d0 = 0.0_f64;
    let mut d1 = 0.0_f64;
    for i in 0..N {
        if !y[i].is_finite() {
            continue;
        }
        let scale = tol.atol + tol.rtol * y[i].abs();
        d0 += (y[i] / scale).powi(2);
        d1 += (f[i] / scale).powi(2);
    }
    let h = if d1 > 0.0 && d0 > 0.0 {
        0.01 * (d0 / d1).sqrt()
    } else {
        span * 1e-3
    };
    h.min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_check<const N: usize>(_t: f64, _y: &[f64; N]) -> Result<(), String> {
        Ok(())
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let tol = Tolerances::default();
        let y = integrate_adaptive(
            |_t, y: &[f64; 1]| [-2.0 * y[0]],
            [1.0],
            0.0,
            3.0,
            &tol,
            &ComponentGuard::none(),
            no_check,
        )
        .unwrap();
        let exact = (-6.0_f64).exp();
        assert!((y[0] - exact).abs() / exact < 1e-5, "got {}", y[0]);
    }

    #[test]
    fn quadrature_component_integrates_cosine() {
        // y0' = 0 (frozen), y1' = cos(t)  =>  y1(T) = sin(T)
        let tol = Tolerances {
            rtol: 1e-9,
            atol: 1e-11,
        };
        let y = integrate_adaptive(
            |t, _y: &[f64; 2]| [0.0, t.cos()],
            [1.0, 0.0],
            0.0,
            1.2,
            &tol,
            &ComponentGuard::none(),
            no_check,
        )
        .unwrap();
        assert!((y[1] - 1.2_f64.sin()).abs() < 1e-8, "got {}", y[1]);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        // Self-convergence on a nonlinear problem: y' = y^2, y(0)=1,
        // y(t) = 1/(1-t), integrated to t=0.9.
        let rhs = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        let exact = 10.0_f64;
        let run = |rtol: f64| {
            integrate_adaptive(
                rhs,
                [1.0],
                0.0,
                0.9,
                &Tolerances { rtol, atol: 1e-12 },
                &ComponentGuard::none(),
                no_check,
            )
            .unwrap()[0]
        };
        let e4 = (run(1e-4) - exact).abs();
        let e6 = (run(1e-6) - exact).abs();
        let e8 = (run(1e-8) - exact).abs();
        assert!(e6 < e4, "e4={e4:.3e} e6={e6:.3e}");
        assert!(e8 < e6, "e6={e6:.3e} e8={e8:.3e}");
    }

    #[test]
    fn nonneg_guard_keeps_decay_above_negative_tolerance() {
        // Fast decay toward zero; the guard must never let y drop below -atol.
        let tol = Tolerances::default();
        let guard = ComponentGuard {
            nonneg: [true],
            monotone: [false],
        };
        let y = integrate_adaptive(
            |_t, y: &[f64; 1]| [-50.0 * y[0]],
            [1.0],
            0.0,
            2.0,
            &tol,
            &guard,
            no_check,
        )
        .unwrap();
        assert!(y[0] >= -tol.atol);
    }

    #[test]
    fn non_finite_initial_component_flows_through() {
        let tol = Tolerances::default();
        let y = integrate_adaptive(
            |_t, y: &[f64; 2]| [-y[0], 1.0],
            [1.0, f64::NAN],
            0.0,
            1.0,
            &tol,
            &ComponentGuard::none(),
            no_check,
        )
        .unwrap();
        assert!((y[0] - (-1.0_f64).exp()).abs() < 1e-6);
        assert!(y[1].is_nan());
    }

    #[test]
    fn blow_up_reports_step_size_underflow() {
        // y' = y^2 blows up at t=1; asking for t=2 must fail.
        let res = integrate_adaptive(
            |_t, y: &[f64; 1]| [y[0] * y[0]],
            [1.0],
            0.0,
            2.0,
            &Tolerances::default(),
            &ComponentGuard::none(),
            no_check,
        );
        assert!(matches!(
            res,
            Err(IntegrationError::StepSizeUnderflow { .. })
                | Err(IntegrationError::MaxSteps { .. })
        ));
    }

    #[test]
    fn awkward_interval_endpoints_terminate_promptly() {
        // Sub-ulp remainders at the interval end must not strand the loop.
        let tol = Tolerances::default();
        for k in 0..400 {
            let t0 = 0.1 * k as f64 + 1.0 / 3.0;
            let t1 = t0 + 1.0 / 12.0;
            let y = integrate_adaptive(
                |_t, y: &[f64; 1]| [-3.0 * y[0]],
                [1.0],
                t0,
                t1,
                &tol,
                &ComponentGuard::none(),
                no_check,
            )
            .unwrap();
            assert!((y[0] - (-0.25_f64).exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_invalid_interval_and_tolerances() {
        let r = integrate_adaptive(
            |_t, y: &[f64; 1]| [-y[0]],
            [1.0],
            1.0,
            1.0,
            &Tolerances::default(),
            &ComponentGuard::none(),
            no_check,
        );
        assert!(matches!(r, Err(IntegrationError::InvalidInput(_))));
        let r = integrate_adaptive(
            |_t, y: &[f64; 1]| [-y[0]],
            [1.0],
            0.0,
            1.0,
            &Tolerances {
                rtol: 0.0,
                atol: 1e-8,
            },
            &ComponentGuard::none(),
            no_check,
        );
        assert!(matches!(r, Err(IntegrationError::InvalidInput(_))));
    }

    #[test]
    fn domain_violation_surfaces_from_step_check() {
        let res = integrate_adaptive(
            |_t, _y: &[f64; 1]| [1.0],
            [0.0],
            0.0,
            1.0,
            &Tolerances::default(),
            &ComponentGuard::none(),
            |_t, y: &[f64; 1]| {
                if y[0] > 0.5 {
                    Err("exceeded cap".into())
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(res, Err(IntegrationError::DomainViolation { .. })));
    }
}
