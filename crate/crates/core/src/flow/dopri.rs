//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs > 0.0 && rel >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (abs {abs}, rel {rel})"
            )));
        }
        Ok(Tolerance { abs, rel })
    }
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 500_000;

/// One accepted step's interpolation data.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    // r1..r5 stacked, each of length m
    r: Vec<f64>,
}

/// Continuous extension over an integrated interval.
#[derive(Debug, Clone)]
pub struct Dense {
    m: usize,
    t_start: f64,
    t_end: f64,
    steps: Vec<DenseStep>,
}

impl Dense {
    pub fn span(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Interval endpoints `(t_a, t_b)` of each accepted step, in integration order.
    pub fn step_bounds(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.steps.iter().map(|s| (s.t0, s.t0 + s.h))
    }

    /// State at time `t` (clamped to the integrated span).
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let m = self.m;
        let forward = self.t_end >= self.t_start;
        let idx = if forward {
            self.steps
                .partition_point(|s| s.t0 + s.h < t)
                .min(self.steps.len() - 1)
        } else {
            self.steps
                .partition_point(|s| s.t0 + s.h > t)
                .min(self.steps.len() - 1)
        };
        let s = &self.steps[idx];
        let theta = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        let t1 = 1.0 - theta;
        let r = &s.r;
        for i in 0..m {
            out[i] = r[i]
                + theta
                    * (r[m + i]
                        + t1 * (r[2 * m + i] + theta * (r[3 * m + i] + t1 * r[4 * m + i])));
        }
    }
}

fn scaled_rms(v: &[f64], y0: &[f64], y1: &[f64], tol: Tolerance) -> f64 {
    let m = v.len();
    let s: f64 = (0..m)
        .map(|i| {
            let sk = tol.abs + tol.rel * y0[i].abs().max(y1[i].abs());
            (v[i] / sk).powi(2)
        })
        .sum();
    (s / m as f64).sqrt()
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` in place (either direction).
/// With `dense = true` the continuous extension is returned.
pub fn integrate<F>(f: F, t0: f64, t1: f64, y: &mut [f64], tol: Tolerance, dense: bool) -> Result<Option<Dense>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    integrate_from(f, t0, t1, y, tol, dense, None)
}

fn integrate_from<F>(
    f: F,
    t0: f64,
    t1: f64,
    y: &mut [f64],
    tol: Tolerance,
    dense: bool,
    first_step: Option<f64>,
) -> Result<Option<Dense>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let m = y.len();
    if t0 == t1 || m == 0 {
        return Ok(dense.then(|| Dense {
            m,
            t_start: t0,
            t_end: t1,
            steps: vec![DenseStep {
                t0,
                h: 1.0,
                r: y.iter().copied().chain(std::iter::repeat_n(0.0, 4 * m)).collect(),
            }],
        }));
    }
    let dir = (t1 - t0).signum();
    let mut k = vec![0.0; 7 * m];
    let mut ytmp = vec![0.0; m];
    let mut ynew = vec![0.0; m];
    let mut err = vec![0.0; m];
    let mut steps = Vec::new();

    let (k1, rest) = k.split_at_mut(m);
    f(t0, y, k1);
    let mut h = match first_step {
        Some(h) => h.abs(),
        None => initial_step(&f, t0, y, k1, dir, tol, &mut ytmp, rest),
    };
    h = h.min((t1 - t0).abs()) * dir;

    let mut t = t0;
    let mut n_steps = 0usize;
    let mut last_rejected = false;
    loop {
        if (t - t1) * dir >= 0.0 {
            break;
        }
        n_steps += 1;
        if n_steps > MAX_STEPS {
            return Err(Error::StepUnderflow {
                t,
                point: y.to_vec(),
            });
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        {
            let (k1, rest) = k.split_at_mut(m);
            let (k2, rest) = rest.split_at_mut(m);
            let (k3, rest) = rest.split_at_mut(m);
            let (k4, rest) = rest.split_at_mut(m);
            let (k5, rest) = rest.split_at_mut(m);
            let (k6, k7) = rest.split_at_mut(m);
            for i in 0..m {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ytmp, k2);
            for i in 0..m {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ytmp, k3);
            for i in 0..m {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ytmp, k4);
            for i in 0..m {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ytmp, k5);
            for i in 0..m {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let tn = if last { t1 } else { t + h };
            f(tn, &ytmp, k6);
            for i in 0..m {
                ynew[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(tn, &ynew, k7);
            for i in 0..m {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
            }
        }
        if ynew.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        let e = scaled_rms(&err, y, &ynew, tol);
        if e <= 1.0 {
            if dense {
                let mut r = vec![0.0; 5 * m];
                let (k1, rest) = k.split_at(m);
                let (_k2, rest) = rest.split_at(m);
                let (k3, rest) = rest.split_at(m);
                let (k4, rest) = rest.split_at(m);
                let (k5, rest) = rest.split_at(m);
                let (k6, k7) = rest.split_at(m);
                for i in 0..m {
                    let dy = ynew[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    r[i] = y[i];
                    r[m + i] = dy;
                    r[2 * m + i] = bspl;
                    r[3 * m + i] = dy - h * k7[i] - bspl;
                    r[4 * m + i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                steps.push(DenseStep { t0: t, h, r });
            }
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&ynew);
            k.copy_within(6 * m..7 * m, 0);
            let mut fac = 0.9 * e.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            let fac = (0.9 * e.powf(-0.2)).max(0.2);
            h *= fac;
            last_rejected = true;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow {
                t,
                point: y.to_vec(),
            });
        }
    }
    Ok(dense.then(|| Dense {
        m,
        t_start: t0,
        t_end: t1,
        steps,
    }))
}

fn initial_step<F>(
    f: &F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    dir: f64,
    tol: Tolerance,
    y1: &mut [f64],
    scratch: &mut [f64],
) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let m = y0.len();
    let sk = |i: usize| tol.abs + tol.rel * y0[i].abs();
    let norm = |v: &[f64]| {
        ((0..m).map(|i| (v[i] / sk(i)).powi(2)).sum::<f64>() / m as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    for i in 0..m {
        y1[i] = y0[i] + dir * h0 * f0[i];
    }
    let f1 = &mut scratch[..m];
    f(t0 + dir * h0, y1, f1);
    let diff: Vec<f64> = (0..m).map(|i| f1[i] - f0[i]).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth_is_accurate() {
        let mut y = [1.0];
        integrate(|_, y, d| d[0] = y[0], 0.0, 2.0, &mut y, Tolerance::default(), false).unwrap();
        assert_relative_eq!(y[0], 2f64.exp(), max_relative = 1e-8);
    }

    #[test]
    fn harmonic_oscillator_backwards_and_forwards() {
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let mut y = [1.0, 0.0];
        integrate(f, 0.0, 10.0, &mut y, Tolerance::default(), false).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
        integrate(f, 10.0, 0.0, &mut y, Tolerance::default(), false).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn zero_span_is_exact_identity() {
        let mut y = [0.1234567, -3.0];
        integrate(|_, _, d| d.fill(1.0), 0.5, 0.5, &mut y, Tolerance::default(), false).unwrap();
        assert_eq!(y, [0.1234567, -3.0]);
    }

    #[test]
    fn dense_output_matches_solution_between_steps() {
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let tol = Tolerance::new(1e-9, 1e-9).unwrap();
        let mut y = [0.0, 1.0];
        let dense = integrate(f, 0.0, 6.0, &mut y, tol, true).unwrap().unwrap();
        let mut out = [0.0; 2];
        let mut worst: f64 = 0.0;
        for k in 0..=600 {
            let t = 6.0 * k as f64 / 600.0;
            dense.eval(t, &mut out);
            worst = worst.max((out[0] - t.sin()).abs()).max((out[1] - t.cos()).abs());
        }
        assert!(worst < 1e-7, "dense error {worst}");
        dense.eval(0.0, &mut out);
        assert_eq!(out, [0.0, 1.0]);
    }

    // Interpolation error on a single fixed step should scale like h^5.
    #[test]
    fn dense_output_is_fourth_order() {
        let f = |t: f64, _: &[f64], d: &mut [f64]| d[0] = (3.0 * t).cos();
        let err_for = |h: f64| {
            let mut y = [0.0];
            // a huge tolerance forces a single step of size h
            let tol = Tolerance::new(1e3, 0.0).unwrap();
            let dense = integrate_from(f, 0.0, h, &mut y, tol, true, Some(h)).unwrap().unwrap();
            assert_eq!(dense.step_count(), 1);
            let mut out = [0.0];
            dense.eval(0.37 * h, &mut out);
            (out[0] - (3.0 * 0.37 * h).sin() / 3.0).abs()
        };
        let (e1, e2) = (err_for(0.2), err_for(0.1));
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed local order {order}");
    }

    #[test]
    fn backward_dense_output() {
        let mut y = [1.0];
        let dense = integrate(|_, y, d| d[0] = -y[0], 1.0, 0.0, &mut y, Tolerance::default(), true)
            .unwrap()
            .unwrap();
        assert_relative_eq!(y[0], 1f64.exp(), max_relative = 1e-8);
        let mut out = [0.0];
        dense.eval(0.5, &mut out);
        assert_relative_eq!(out[0], 0.5f64.exp(), max_relative = 1e-7);
    }

    #[test]
    fn blowup_reports_failure() {
        let mut y = [1.0];
        let r = integrate(|_, y, d| d[0] = y[0] * y[0], 0.0, 2.0, &mut y, Tolerance::default(), false);
        assert!(r.is_err());
    }
}
