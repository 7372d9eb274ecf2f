//! Transfer functions, state-space realization, and fixed-step integration.
//!
//! Coefficient vectors are stored in ascending powers of s, so `den[0]` is the
//! constant term. Realization uses the controllable canonical form, which keeps
//! the mapping from a PI controller to its single integrator state obvious.

use crate::error::{Error, Result};

/// Largest accepted denominator degree. Keeps adversarial scenario files from
/// requesting enormous companion matrices.
pub const MAX_ORDER: usize = 10;

/// A proper rational transfer function num(s)/den(s).
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    /// Numerator coefficients, ascending powers of s.
    pub num: Vec<f64>,
    /// Denominator coefficients, ascending powers of s.
    pub den: Vec<f64>,
}

fn trim_trailing_zeros(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    coeffs
}

impl TransferFunction {
    /// Builds a transfer function, rejecting improper or degenerate ones.
    ///
    /// Trailing zero coefficients are trimmed, so `den = [4, 1, 0]` means s + 4.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::Config(
                "transfer function needs at least one numerator and one denominator coefficient"
                    .into(),
            ));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::Config(
                "transfer function coefficients must be finite".into(),
            ));
        }
        let num = trim_trailing_zeros(num);
        let den = trim_trailing_zeros(den);
        if den == [0.0] {
            return Err(Error::Config(
                "transfer function denominator is zero".into(),
            ));
        }
        if num.len() > den.len() {
            return Err(Error::Config(format!(
                "improper transfer function: numerator degree {} exceeds denominator degree {}",
                num.len() - 1,
                den.len() - 1
            )));
        }
        if den.len() - 1 > MAX_ORDER {
            return Err(Error::Config(format!(
                "denominator degree {} exceeds the supported maximum {MAX_ORDER}",
                den.len() - 1
            )));
        }
        Ok(TransferFunction { num, den })
    }

    /// Degree of the denominator, i.e. the state dimension after realization.
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// True when the denominator has a root at s = 0, i.e. the transfer
    /// function already contains integral action.
    pub fn has_integrator(&self) -> bool {
        self.den[0] == 0.0
    }

    /// Steady gain num(0)/den(0). Fails for functions with a pole at s = 0.
    pub fn dc_gain(&self) -> Result<f64> {
        if self.den[0] == 0.0 {
            return Err(Error::Config(
                "dc gain undefined: transfer function has a pole at s = 0".into(),
            ));
        }
        Ok(self.num[0] / self.den[0])
    }

    /// Controllable canonical realization.
    ///
    /// The companion matrix carries the normalized denominator in its last
    /// row, the input enters the last state, and any direct feedthrough is
    /// split off into `d` so the output map `c` covers the remainder.
    pub fn realize(&self) -> StateSpace {
        let n = self.order();
        let lead = self.den[n];
        if n == 0 {
            return StateSpace {
                a: Vec::new(),
                b: Vec::new(),
                c: Vec::new(),
                d: self.num[0] / lead,
                n: 0,
            };
        }
        let den_norm: Vec<f64> = self.den.iter().map(|c| c / lead).collect();
        let mut num_norm = vec![0.0; n + 1];
        for (i, c) in self.num.iter().enumerate() {
            num_norm[i] = c / lead;
        }
        let d = num_norm[n];
        let c: Vec<f64> = (0..n).map(|i| num_norm[i] - d * den_norm[i]).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n - 1 {
            a[i * n + i + 1] = 1.0;
        }
        for j in 0..n {
            a[(n - 1) * n + j] = -den_norm[j];
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        StateSpace { a, b, c, d, n }
    }
}

/// Gains of a PI controller kp + ki/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiParams {
    pub kp: f64,
    pub ki: f64,
}

impl PiParams {
    pub fn new(kp: f64, ki: f64) -> Result<Self> {
        if !kp.is_finite() || !ki.is_finite() {
            return Err(Error::Config("PI gains must be finite".into()));
        }
        if ki < 0.0 {
            return Err(Error::Config(format!(
                "integral gain must be nonnegative, got {ki}"
            )));
        }
        Ok(PiParams { kp, ki })
    }

    /// The controller as the rational function (kp s + ki)/s.
    pub fn transfer_function(&self) -> TransferFunction {
        TransferFunction {
            num: trim_trailing_zeros(vec![self.ki, self.kp]),
            den: vec![0.0, 1.0],
        }
    }
}

/// Single-input single-output state-space model
/// x' = A x + B u, y = C x + D u.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    /// System matrix, n by n, row major.
    pub a: Vec<f64>,
    /// Input vector, length n.
    pub b: Vec<f64>,
    /// Output vector, length n.
    pub c: Vec<f64>,
    /// Direct feedthrough.
    pub d: f64,
    /// State dimension. Zero means a pure gain.
    pub n: usize,
}

impl StateSpace {
    /// Output y = C x + D u.
    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(ci, xi)| ci * xi).sum::<f64>() + self.d * u
    }

    /// Writes x' = A x + B u into `dx`.
    #[allow(clippy::needless_range_loop)]
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            dx[i] = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + self.b[i] * u;
        }
    }
}

/// Classical fourth-order Runge-Kutta stepper with reusable stage buffers.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// Advances `x` from t to t + dt. `deriv(t, x, dx)` evaluates the
    /// right-hand side; it is called at the step start, twice at the
    /// midpoint, and at the step end.
    #[allow(clippy::needless_range_loop)]
    pub fn step<F>(&mut self, x: &mut [f64], t: f64, dt: f64, mut deriv: F)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let h = dt;
        deriv(t, x, &mut self.k1);
        for i in 0..x.len() {
            self.stage[i] = x[i] + 0.5 * h * self.k1[i];
        }
        deriv(t + 0.5 * h, &self.stage, &mut self.k2);
        for i in 0..x.len() {
            self.stage[i] = x[i] + 0.5 * h * self.k2[i];
        }
        deriv(t + 0.5 * h, &self.stage, &mut self.k3);
        for i in 0..x.len() {
            self.stage[i] = x[i] + h * self.k3[i];
        }
        deriv(t + h, &self.stage, &mut self.k4);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Simulates the unit-step response of `tf` on the fixed grid k dt for
/// k = 0..=round(t_end/dt), starting from zero state with the step applied
/// at t = 0. Returns the sample times and outputs.
pub fn step_response(tf: &TransferFunction, dt: f64, t_end: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !dt.is_finite() || !t_end.is_finite() || dt <= 0.0 || t_end < dt {
        return Err(Error::Config(format!(
            "step response grid needs 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let ss = tf.realize();
    let n_steps = (t_end / dt).round() as usize;
    let mut x = vec![0.0; ss.n];
    let mut rk4 = Rk4::new(ss.n);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut outputs = Vec::with_capacity(n_steps + 1);
    for step in 0..=n_steps {
        let t = step as f64 * dt;
        times.push(t);
        outputs.push(ss.output(&x, 1.0));
        if step < n_steps {
            rk4.step(&mut x, t, dt, |_, x, dx| ss.derivative(x, 1.0, dx));
        }
    }
    Ok((times, outputs))
}

/// Closed-form unit-step response at the given times.
///
/// Covers the cases with a compact closed form: a constant numerator over a
/// first-order denominator, or over a second-order denominator with a complex
/// pole pair. Everything else is rejected.
pub fn analytic_step_response(tf: &TransferFunction, times: &[f64]) -> Result<Vec<f64>> {
    if tf.num.len() != 1 {
        return Err(Error::Config(
            "no closed form implemented: numerator must be a constant".into(),
        ));
    }
    let k = tf.num[0];
    match tf.order() {
        1 => {
            let a = tf.den[0] / tf.den[1];
            if a == 0.0 {
                return Err(Error::Config(
                    "no closed form implemented: pole at s = 0".into(),
                ));
            }
            Ok(times
                .iter()
                .map(|&t| k / tf.den[0] * (1.0 - (-a * t).exp()))
                .collect())
        }
        2 => {
            let c0 = tf.den[0] / tf.den[2];
            let b0 = tf.den[1] / tf.den[2];
            let disc = b0 * b0 - 4.0 * c0;
            if disc >= 0.0 {
                return Err(Error::Config(
                    "no closed form implemented: second-order poles must be complex".into(),
                ));
            }
            let sigma = 0.5 * b0;
            let omega = (c0 - sigma * sigma).sqrt();
            let gain = k / tf.den[0];
            Ok(times
                .iter()
                .map(|&t| {
                    let env = (-sigma * t).exp();
                    gain * (1.0 - env * ((omega * t).cos() + sigma / omega * (omega * t).sin()))
                })
                .collect())
        }
        _ => Err(Error::Config(
            "no closed form implemented: denominator degree must be 1 or 2".into(),
        )),
    }
}
