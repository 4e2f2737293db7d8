use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// h'' = −σ a h on [0, T] with h(0) = h₀, h'(0) = h₀'.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpODEProblem {
    pub a: f64,
    pub sigma: f64,
    pub h0: f64,
    pub dh0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Reject parameter choices whose solutions must have zeros.
    #[serde(default)]
    pub require_no_zeros: bool,
}

fn default_step() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpFamily {
    /// A e^{kt}: zero energy.
    Exponential,
    Cosh,
    Sinh,
    Trigonometric,
    Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpSample {
    pub t: f64,
    pub h: f64,
    pub dh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpSolution {
    pub family: WarpFamily,
    /// E = σ h'² + a h², the conserved quantity.
    pub energy0: f64,
    pub max_energy_drift: f64,
    /// Largest |h − h_exact| / |h_exact| against the closed form.
    pub max_relative_error: f64,
    pub steps: usize,
    /// Every `stride`-th step, plus the last one.
    pub samples: Vec<WarpSample>,
}

const MAX_SAMPLES: usize = 10_000;

impl WarpODEProblem {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::InvalidInput("need step > 0 and a finite horizon T >= 0".into()));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(Error::InvalidInput(format!(
                "sigma must be +1 or -1, got {}",
                self.sigma
            )));
        }
        if !(self.h0 > 0.0) {
            return Err(Error::InvalidInput(format!("h0 must be positive, got {}", self.h0)));
        }
        if self.require_no_zeros && self.sigma * self.a >= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sigma * a = {} must be negative for a solution without zeros",
                self.sigma * self.a
            )));
        }
        Ok(())
    }

    /// Energy in factored form where possible, to avoid cancelling two
    /// large squares on the exponential branch.
    pub fn energy(&self, h: f64, dh: f64) -> f64 {
        self.energy_compensated(h, 0.0, dh, 0.0)
    }

    /// Energy of (h − ch, dh − cdh), with the carries kept out of the large
    /// terms until after the cancellation.
    fn energy_compensated(&self, h: f64, ch: f64, dh: f64, cdh: f64) -> f64 {
        let s = self.sigma * self.a;
        if s < 0.0 {
            let k = (-s).sqrt();
            let minus = (dh - k * h) - (cdh - k * ch);
            let plus = (dh + k * h) - (cdh + k * ch);
            self.sigma * minus * plus
        } else {
            let (h, dh) = (h - ch, dh - cdh);
            self.sigma * dh * dh + self.a * h * h
        }
    }

    fn exact(&self, t: f64) -> f64 {
        let s = self.sigma * self.a;
        if s < 0.0 {
            let k = (-s).sqrt();
            let plus = 0.5 * (self.h0 + self.dh0 / k);
            let minus = 0.5 * (self.h0 - self.dh0 / k);
            plus * (k * t).exp() + minus * (-k * t).exp()
        } else if s > 0.0 {
            let w = s.sqrt();
            self.h0 * (w * t).cos() + self.dh0 / w * (w * t).sin()
        } else {
            self.h0 + self.dh0 * t
        }
    }

    fn family(&self) -> WarpFamily {
        let s = self.sigma * self.a;
        if s > 0.0 {
            return WarpFamily::Trigonometric;
        }
        if s == 0.0 {
            return WarpFamily::Affine;
        }
        let k = (-s).sqrt();
        let plus = self.h0 + self.dh0 / k;
        let minus = self.h0 - self.dh0 / k;
        let scale = 1e-12 * (self.h0.abs() + (self.dh0 / k).abs());
        if plus.abs() <= scale || minus.abs() <= scale {
            WarpFamily::Exponential
        } else if plus * minus > 0.0 {
            WarpFamily::Cosh
        } else {
            WarpFamily::Sinh
        }
    }
}

/// y += Δ with the lost low-order bits carried to the next step.
fn compensated_add(y: &mut f64, carry: &mut f64, delta: f64) {
    let d = delta - *carry;
    let t = *y + d;
    *carry = (t - *y) - d;
    *y = t;
}

pub fn solve_warp_ode(prob: &WarpODEProblem) -> Result<WarpSolution> {
    prob.validate()?;
    let steps = (prob.horizon / prob.step).round() as usize;
    let dt = if steps == 0 { 0.0 } else { prob.horizon / steps as f64 };
    let accel = -prob.sigma * prob.a;
    let f = |h: f64, dh: f64| (dh, accel * h);
    let stride = steps / MAX_SAMPLES + 1;

    let (mut h, mut dh) = (prob.h0, prob.dh0);
    let (mut ch, mut cdh) = (0.0, 0.0);
    let energy0 = prob.energy(h, dh);
    let mut drift = 0.0f64;
    let mut rel_err = 0.0f64;
    let mut samples = vec![WarpSample { t: 0.0, h, dh }];
    for i in 1..=steps {
        let (k1h, k1d) = f(h, dh);
        let (k2h, k2d) = f(h + 0.5 * dt * k1h, dh + 0.5 * dt * k1d);
        let (k3h, k3d) = f(h + 0.5 * dt * k2h, dh + 0.5 * dt * k2d);
        let (k4h, k4d) = f(h + dt * k3h, dh + dt * k3d);
        let prev = h;
        compensated_add(&mut h, &mut ch, dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h));
        compensated_add(&mut dh, &mut cdh, dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d));
        let t = i as f64 * dt;
        if h <= 0.0 {
            // Linear interpolation inside the last step.
            let t0 = t - dt + dt * prev / (prev - h);
            return Err(Error::ZeroCrossing { t: t0 });
        }
        drift = drift.max((prob.energy_compensated(h, ch, dh, cdh) - energy0).abs());
        let exact = prob.exact(t);
        rel_err = rel_err.max((h - exact).abs() / exact.abs());
        if i % stride == 0 || i == steps {
            samples.push(WarpSample { t, h, dh });
        }
    }
    Ok(WarpSolution {
        family: prob.family(),
        energy0,
        max_energy_drift: drift,
        max_relative_error: rel_err,
        steps,
        samples,
    })
}
