//! Adaptive Runge–Kutta–Fehlberg 7(8) integrator.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

const STAGES: usize = 13;

const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    0.5,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

const A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        -25.0 / 108.0,
        0.0,
        0.0,
        125.0 / 108.0,
        -65.0 / 27.0,
        125.0 / 54.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        31.0 / 300.0,
        0.0,
        0.0,
        0.0,
        61.0 / 225.0,
        -2.0 / 9.0,
        13.0 / 900.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2.0,
        0.0,
        0.0,
        -53.0 / 6.0,
        704.0 / 45.0,
        -107.0 / 9.0,
        67.0 / 90.0,
        3.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
        0.0,
    ],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

/// Eighth-order weights.
const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

/// Seventh-order weights (embedded).
const B7: [f64; STAGES] = [
    41.0 / 840.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    41.0 / 840.0,
    0.0,
    0.0,
];

/// Step-size control settings.
///
/// The embedded estimate vanishes identically when the right-hand side does
/// not depend on the state, so `h_max` defaults to a finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct Rkf78 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rkf78 {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            h_init: 1e-2,
            h_min: 1e-13,
            h_max: 0.125,
            max_steps: 2_000_000,
        }
    }
}

/// Scratch space for one step.
pub struct Workspace {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            k: vec![vec![0.0; n]; STAGES],
            tmp: vec![0.0; n],
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Solution {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// True when the observer stopped the run before `t_end`.
    pub stopped: bool,
}

impl Rkf78 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// One explicit step of size `h` (may be negative). Returns the
    /// eighth-order solution and the embedded error vector.
    pub fn step<F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64],
        h: f64,
        ws: &mut Workspace,
    ) -> Result<(Vec<f64>, Vec<f64>)>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        for s in 0..STAGES {
            ws.tmp.copy_from_slice(y);
            for (j, a) in A[s].iter().enumerate().take(s) {
                if *a != 0.0 {
                    let kj = &ws.k[j];
                    for i in 0..n {
                        ws.tmp[i] += h * a * kj[i];
                    }
                }
            }
            f(t + C[s] * h, &ws.tmp, &mut ws.k[s])?;
        }
        let mut y_new = y.to_vec();
        let mut err = vec![0.0; n];
        for s in 0..STAGES {
            let b8 = B8[s];
            let db = B8[s] - B7[s];
            for i in 0..n {
                y_new[i] += h * b8 * ws.k[s][i];
                err[i] += h * db * ws.k[s][i];
            }
        }
        Ok((y_new, err))
    }

    fn error_norm(&self, y: &[f64], y_new: &[f64], err: &[f64]) -> f64 {
        y.iter()
            .zip(y_new)
            .zip(err)
            .map(|((a, b), e)| e.abs() / (self.atol + self.rtol * a.abs().max(b.abs())))
            .fold(0.0, f64::max)
    }

    /// Integrates from `t0` to `t_end` (either direction).
    pub fn integrate<F>(&self, f: F, t0: f64, y0: &[f64], t_end: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        self.solve(f, t0, y0, t_end, |_, _, _, _| ControlFlow::Continue(()))
            .map(|s| s.y)
    }

    /// Adaptive integration with an observer called after every accepted
    /// step with `(t_prev, y_prev, t, y)`; returning `Break` stops the run.
    pub fn solve<F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        mut observer: O,
    ) -> Result<Solution>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        O: FnMut(f64, &[f64], f64, &[f64]) -> ControlFlow<()>,
    {
        let n = y0.len();
        let mut ws = Workspace::new(n);
        let mut t = t0;
        let mut y = y0.to_vec();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut h = self.h_init.min(span).min(self.h_max);
        let mut steps = 0;
        let mut rejected = 0;
        if span == 0.0 {
            return Ok(Solution {
                t,
                y,
                steps,
                rejected,
                stopped: false,
            });
        }
        loop {
            let remaining = (t_end - t).abs();
            if remaining <= 1e-15 * span.max(1.0) {
                break;
            }
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let (y_new, err) = match self.step(&mut f, t, &y, dir * h_try, &mut ws) {
                Ok(v) => v,
                Err(e) => {
                    // A failing evaluation inside a trial step is treated as
                    // an oversized step until the minimum step is reached.
                    if h_try > self.h_min * 16.0 {
                        h = h_try * 0.25;
                        rejected += 1;
                        continue;
                    }
                    return Err(e);
                }
            };
            let en = self.error_norm(&y, &y_new, &err);
            if !en.is_finite() {
                if h_try > self.h_min * 16.0 {
                    h = h_try * 0.25;
                    rejected += 1;
                    continue;
                }
                return Err(Error::Integration {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            if en <= 1.0 {
                let t_new = if last { t_end } else { t + dir * h_try };
                steps += 1;
                let flow = observer(t, &y, t_new, &y_new);
                t = t_new;
                y = y_new;
                if flow.is_break() {
                    return Ok(Solution {
                        t,
                        y,
                        steps,
                        rejected,
                        stopped: true,
                    });
                }
                if steps >= self.max_steps {
                    return Err(Error::Integration {
                        t,
                        reason: format!("step budget {} exhausted", self.max_steps),
                    });
                }
                let fac = if en == 0.0 {
                    5.0
                } else {
                    (0.9 * en.powf(-1.0 / 8.0)).clamp(0.2, 5.0)
                };
                h = (h_try * fac).min(self.h_max);
            } else {
                rejected += 1;
                h = h_try * (0.9 * en.powf(-1.0 / 8.0)).clamp(0.1, 0.9);
                if h < self.h_min {
                    return Err(Error::Integration {
                        t,
                        reason: format!("step size fell below {:e}", self.h_min),
                    });
                }
            }
        }
        Ok(Solution {
            t,
            y,
            steps,
            rejected,
            stopped: false,
        })
    }

    /// Fixed-step integration with `n` equal steps.
    pub fn integrate_fixed<F>(&self, mut f: F, t0: f64, y0: &[f64], t1: f64, n: usize) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let mut ws = Workspace::new(y0.len());
        let h = (t1 - t0) / n as f64;
        let mut y = y0.to_vec();
        for i in 0..n {
            y = self.step(&mut f, t0 + i as f64 * h, &y, h, &mut ws)?.0;
        }
        Ok(y)
    }
}
