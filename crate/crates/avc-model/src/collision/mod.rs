//! Collision-probability block: Polya-Gamma augmentation and the conjugate
//! Gaussian / Bernoulli / Beta updates for the regression parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrices;
use crate::dist::{sample_beta, sample_polya_gamma, PrecisionGaussian};
use crate::error::{Error, Result};
use crate::stream::RandomStream;

/// Logistic collision probability. Saturates smoothly at extreme inputs.
#[inline]
pub fn collision_prob(psi: f64) -> f64 {
    if psi >= 0.0 {
        1.0 / (1.0 + (-psi).exp())
    } else {
        let e = psi.exp();
        e / (1.0 + e)
    }
}

/// Priors of the collision block: diagonal scales of the Gaussian priors and
/// the Beta prior on the monthly indicator probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionHyper {
    /// Diagonal variance of the prior on the time-invariant coefficients.
    pub beta_prior_scale: f64,
    /// Diagonal variance of the prior on each month's `[alpha0, gamma]`.
    pub month_prior_scale: f64,
    pub q_prior_a: f64,
    pub q_prior_b: f64,
}

impl Default for CollisionHyper {
    fn default() -> Self {
        CollisionHyper {
            beta_prior_scale: 100.0,
            month_prior_scale: 100.0,
            q_prior_a: 1.0,
            q_prior_b: 1.0,
        }
    }
}

impl CollisionHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_prior_scale > 0.0 && self.month_prior_scale > 0.0) {
            return Err(Error::config("prior scales must be positive"));
        }
        if !(self.q_prior_a > 0.0 && self.q_prior_b > 0.0) {
            return Err(Error::config("indicator Beta prior parameters must be positive"));
        }
        Ok(())
    }
}

/// Regression parameters, indicator layer, and the Polya-Gamma auxiliaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionState {
    pub beta: Vec<f64>,
    /// Month-specific constant effect, length T.
    pub alpha0: Vec<f64>,
    /// Month-specific time-varying coefficients, T rows of length J.
    pub gamma: Vec<Vec<f64>>,
    /// Indicator probability per month.
    pub q: Vec<f64>,
    /// Indicator per cell, segment-major.
    pub indicators: Vec<u8>,
    /// Auxiliary per cell; exactly zero wherever the cell has no exposure.
    pub omega: Vec<f64>,
}

impl RegressionState {
    pub fn check_legal(&self, counts: &[u32], exposure: &[u32]) -> Result<()> {
        if self.indicators.len() != counts.len() || self.omega.len() != counts.len() {
            return Err(Error::validation("regression grids disagree with panel size"));
        }
        for (t, &q) in self.q.iter().enumerate() {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::validation(format!(
                    "q for month {} left (0,1): {q}",
                    t + 1
                )));
            }
        }
        for (i, &n) in exposure.iter().enumerate() {
            if n > 0 && !(self.omega[i] > 0.0) {
                return Err(Error::validation(format!(
                    "cell {i}: omega must be positive where exposure is positive"
                )));
            }
        }
        Ok(())
    }
}

/// Linear predictor of one cell under the current parameters.
#[inline]
pub fn linear_predictor(
    design: &DesignMatrices,
    state: &RegressionState,
    segment: usize,
    month0: usize,
) -> f64 {
    let cell = design.cell_index(segment, month0);
    let mut psi = if state.indicators[cell] == 1 {
        state.alpha0[month0]
    } else {
        0.0
    };
    for (b, x) in state.beta.iter().zip(design.x_of(segment)) {
        psi += b * x;
    }
    for (g, y) in state.gamma[month0].iter().zip(design.y_of(cell)) {
        psi += g * y;
    }
    psi
}

/// Fill `psi` for every cell.
pub fn compute_psi_grid(design: &DesignMatrices, state: &RegressionState, psi: &mut [f64]) {
    for s in 0..design.segments {
        for t0 in 0..design.months {
            psi[design.cell_index(s, t0)] = linear_predictor(design, state, s, t0);
        }
    }
}

/// The augmentation pseudo-response `kappa = k - n/2` per cell.
pub fn refresh_kappa(counts: &[u32], exposure: &[u32], kappa: &mut [f64]) {
    for ((kp, &k), &n) in kappa.iter_mut().zip(counts).zip(exposure) {
        *kp = f64::from(k) - f64::from(n) / 2.0;
    }
}

/// Draw the Polya-Gamma auxiliary for each cell with positive exposure;
/// zero-exposure cells keep `omega = 0` and drop out of every reduction.
pub fn augment_omega(
    exposure: &[u32],
    psi: &[f64],
    omega: &mut [f64],
    rng: &mut RandomStream,
) -> Result<()> {
    for (i, (&n, &p)) in exposure.iter().zip(psi).enumerate() {
        omega[i] = if n == 0 {
            0.0
        } else {
            sample_polya_gamma(n, p, rng)?
        };
    }
    Ok(())
}

/// Precision matrix and linear term of the Gaussian conditional on the
/// time-invariant coefficients. Cells with zero auxiliary are skipped, which
/// leaves the sums bit-identical to physically removing them.
pub fn beta_system(
    design: &DesignMatrices,
    state: &RegressionState,
    kappa: &[f64],
    prior_precision: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = design.x_dim;
    let mut precision = DMatrix::from_diagonal_element(k, k, prior_precision);
    let mut linear = DVector::zeros(k);
    for s in 0..design.segments {
        let x = design.x_of(s);
        for t0 in 0..design.months {
            let cell = design.cell_index(s, t0);
            let w = state.omega[cell];
            if w == 0.0 {
                continue;
            }
            let mut month_part = if state.indicators[cell] == 1 {
                state.alpha0[t0]
            } else {
                0.0
            };
            for (g, y) in state.gamma[t0].iter().zip(design.y_of(cell)) {
                month_part += g * y;
            }
            let resid = kappa[cell] - w * month_part;
            for i in 0..k {
                linear[i] += x[i] * resid;
                for j in i..k {
                    precision[(i, j)] += w * x[i] * x[j];
                }
            }
        }
    }
    // Mirror the upper triangle.
    for i in 0..k {
        for j in (i + 1)..k {
            precision[(j, i)] = precision[(i, j)];
        }
    }
    (precision, linear)
}

/// Gibbs draw of the time-invariant coefficients.
pub fn update_beta(
    design: &DesignMatrices,
    state: &mut RegressionState,
    kappa: &[f64],
    hyper: &CollisionHyper,
    rng: &mut RandomStream,
) -> Result<()> {
    let (precision, linear) = beta_system(design, state, kappa, 1.0 / hyper.beta_prior_scale);
    let gaussian = PrecisionGaussian::new(precision, &linear)?;
    let draw = gaussian.sample(rng)?;
    state.beta.copy_from_slice(draw.as_slice());
    Ok(())
}

/// Precision matrix and linear term for one month's `[alpha0, gamma]` block,
/// with `z = [indicator, y]`.
pub fn month_system(
    design: &DesignMatrices,
    state: &RegressionState,
    kappa: &[f64],
    month0: usize,
    prior_precision: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let dim = 1 + design.y_dim;
    let mut precision = DMatrix::from_diagonal_element(dim, dim, prior_precision);
    let mut linear = DVector::zeros(dim);
    let mut z = vec![0.0; dim];
    for s in 0..design.segments {
        let cell = design.cell_index(s, month0);
        let w = state.omega[cell];
        if w == 0.0 {
            continue;
        }
        z[0] = f64::from(state.indicators[cell]);
        z[1..].copy_from_slice(design.y_of(cell));
        let mut fixed_part = 0.0;
        for (b, x) in state.beta.iter().zip(design.x_of(s)) {
            fixed_part += b * x;
        }
        let resid = kappa[cell] - w * fixed_part;
        for i in 0..dim {
            linear[i] += z[i] * resid;
            for j in i..dim {
                precision[(i, j)] += w * z[i] * z[j];
            }
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            precision[(j, i)] = precision[(i, j)];
        }
    }
    (precision, linear)
}

/// Gibbs draw of one month's `[alpha0, gamma]`; months are conditionally
/// independent given everything else.
pub fn update_time_varying(
    design: &DesignMatrices,
    state: &mut RegressionState,
    kappa: &[f64],
    month0: usize,
    hyper: &CollisionHyper,
    rng: &mut RandomStream,
) -> Result<()> {
    let (precision, linear) =
        month_system(design, state, kappa, month0, 1.0 / hyper.month_prior_scale);
    let gaussian = PrecisionGaussian::new(precision, &linear)?;
    let draw = gaussian.sample(rng)?;
    state.alpha0[month0] = draw[0];
    for (g, v) in state.gamma[month0].iter_mut().zip(draw.as_slice()[1..].iter()) {
        *g = *v;
    }
    Ok(())
}

/// Posterior probability that a cell's indicator is one. `psi0` is the
/// linear predictor without the month constant. The two likelihood factors
/// are compared in log space, so saturated predictors cannot overflow.
pub fn indicator_prob(kappa: f64, omega: f64, psi0: f64, alpha0: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let log_lik_ratio = alpha0 * (kappa - omega * psi0 - 0.5 * omega * alpha0);
    let logit_q = q.ln() - (-q).ln_1p();
    collision_prob(log_lik_ratio + logit_q)
}

/// Redraw every cell's indicator from its Bernoulli conditional.
pub fn update_indicators(
    design: &DesignMatrices,
    state: &mut RegressionState,
    kappa: &[f64],
    rng: &mut RandomStream,
) {
    for s in 0..design.segments {
        let x = design.x_of(s);
        let mut fixed_part = 0.0;
        for (b, xv) in state.beta.iter().zip(x) {
            fixed_part += b * xv;
        }
        for t0 in 0..design.months {
            let cell = design.cell_index(s, t0);
            let mut psi0 = fixed_part;
            for (g, y) in state.gamma[t0].iter().zip(design.y_of(cell)) {
                psi0 += g * y;
            }
            let p1 = indicator_prob(
                kappa[cell],
                state.omega[cell],
                psi0,
                state.alpha0[t0],
                state.q[t0],
            );
            state.indicators[cell] = u8::from(rng.bernoulli(p1));
        }
    }
}

/// Beta parameters of one month's indicator-probability conditional.
pub fn q_posterior(ones: usize, segments: usize, hyper: &CollisionHyper) -> (f64, f64) {
    (
        hyper.q_prior_a + ones as f64,
        hyper.q_prior_b + (segments - ones) as f64,
    )
}

/// Redraw the indicator probability of every month.
pub fn update_q(
    design: &DesignMatrices,
    state: &mut RegressionState,
    hyper: &CollisionHyper,
    rng: &mut RandomStream,
) -> Result<()> {
    for t0 in 0..design.months {
        let ones = (0..design.segments)
            .filter(|&s| state.indicators[design.cell_index(s, t0)] == 1)
            .count();
        let (a, b) = q_posterior(ones, design.segments, hyper);
        let draw = sample_beta(a, b, rng)?;
        state.q[t0] = draw.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    }
    Ok(())
}
