//! Small fixed-dimension ODE integrators: an adaptive embedded
//! Dormand-Prince 5(4) pair and a fixed-step classical RK4 kept as an
//! independent cross-check.

use crate::error::{Error, Result};

/// Right-hand sides may fail (domain errors propagate out of the integration).
pub trait OdeRhs<const N: usize> {
    fn eval(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<F, const N: usize> OdeRhs<N> for F
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn eval(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeTol<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

impl<const N: usize> OdeTol<N> {
    pub fn new(rtol: f64, atol: [f64; N]) -> Self {
        Self { rtol, atol }
    }
}

// Dormand-Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate from `t0` to `t1` (t1 > t0) with adaptive step control and
/// return the terminal state.
pub fn rk45<const N: usize>(
    mut rhs: impl OdeRhs<N>,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: &OdeTol<N>,
) -> Result<[f64; N]> {
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = span * 0.05;
    let h_min = span * 1e-14;
    let mut k = [[0.0; N]; 7];
    let mut rejected_in_a_row = 0usize;

    while t < t1 {
        h = h.min(t1 - t);
        k[0] = rhs.eval(t, &y)?;
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[stage] = rhs.eval(t + C[stage] * h, &ys)?;
        }
        let mut y5 = y;
        let mut err = [0.0; N];
        for (j, kj) in k.iter().enumerate() {
            for i in 0..N {
                y5[i] += h * B5[j] * kj[i];
                err[i] += h * (B5[j] - B4[j]) * kj[i];
            }
        }
        let mut norm: f64 = 0.0;
        for i in 0..N {
            let scale = tol.atol[i] + tol.rtol * y[i].abs().max(y5[i].abs());
            norm += (err[i] / scale).powi(2);
        }
        norm = (norm / N as f64).sqrt();

        if norm <= 1.0 || h <= h_min {
            t += h;
            y = y5;
            rejected_in_a_row = 0;
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            rejected_in_a_row += 1;
            h *= (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9);
            if h < h_min || rejected_in_a_row > 60 {
                return Err(Error::OdeStepFailure {
                    t,
                    detail: format!("error estimate {norm:.3e} not reducible below tolerance"),
                });
            }
        }
    }
    Ok(y)
}

/// Integrate and record the state at each of the (sorted, in-range) sample
/// abscissae. The first sample must equal `t0`.
pub fn rk45_sampled<const N: usize>(
    mut rhs: impl OdeRhs<N>,
    samples: &[f64],
    y0: [f64; N],
    tol: &OdeTol<N>,
) -> Result<Vec<[f64; N]>> {
    let mut out = Vec::with_capacity(samples.len());
    let mut y = y0;
    out.push(y);
    for w in samples.windows(2) {
        y = rk45(|t, yy: &[f64; N]| rhs.eval(t, yy), w[0], w[1], y, tol)?;
        out.push(y);
    }
    Ok(out)
}

/// Fixed-step classical RK4; independent oracle for the adaptive integrator.
pub fn rk4_fixed<const N: usize>(
    mut rhs: impl OdeRhs<N>,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    steps: usize,
) -> Result<[f64; N]> {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = rhs.eval(t, &y)?;
        let mut y2 = y;
        for i in 0..N {
            y2[i] += 0.5 * h * k1[i];
        }
        let k2 = rhs.eval(t + 0.5 * h, &y2)?;
        let mut y3 = y;
        for i in 0..N {
            y3[i] += 0.5 * h * k2[i];
        }
        let k3 = rhs.eval(t + 0.5 * h, &y3)?;
        let mut y4 = y;
        for i in 0..N {
            y4[i] += h * k3[i];
        }
        let k4 = rhs.eval(t + h, &y4)?;
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    Ok(y)
}
