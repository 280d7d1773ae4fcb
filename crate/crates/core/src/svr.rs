//! Linear epsilon-insensitive support vector regression.
//!
//! Solves the dual over beta_i = alpha_i - alpha_i^*:
//!
//! ```text
//! max  -1/2 sum_ij beta_i beta_j <x_i, x_j> - eps sum_i |beta_i| + sum_i y_i beta_i
//! s.t. sum_i beta_i = 0,  -C <= beta_i <= C
//! ```
//!
//! with SMO-style pair updates `beta_i += t, beta_j -= t`, each maximized
//! exactly along the (piecewise quadratic) pair direction. The pair update
//! keeps the equality constraint and the box by construction, and the dual
//! objective never decreases.
//!
//! Optimality is checked through the bias: every point restricts b to an
//! interval (a tube point to `[r - eps, r + eps]`, a free support vector to
//! a single value, a bound one to a half line). The KKT violation is how far
//! the largest lower end sits above the smallest upper end.
//!
//! The pair updates start from the loss derivatives of a Huber-smoothed
//! primal solved by damped Newton steps over `(w, b)`, with the smoothing
//! width shrunk tenfold per stage. That point is already dual feasible and
//! usually within a few pair updates of the KKT tolerance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrConfig {
    /// Tube half-width, in target units.
    pub epsilon: f64,
    pub c_penalty: f64,
    pub kkt_tolerance: f64,
    pub max_passes: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            c_penalty: 1.0,
            kkt_tolerance: 1e-3,
            max_passes: 1000,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config("svr epsilon must be finite and >= 0"));
        }
        if !(self.c_penalty.is_finite() && self.c_penalty > 0.0) {
            return Err(Error::Config("svr c_penalty must be finite and > 0"));
        }
        if !(self.kkt_tolerance.is_finite() && self.kkt_tolerance > 0.0) {
            return Err(Error::Config("svr kkt_tolerance must be finite and > 0"));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("svr max_passes must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub config: SvrConfig,
    /// beta_i = alpha_i - alpha_i^*, one per training point.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    /// sum_i beta_i x_i
    pub weight: Vec<f64>,
    pub training_dim: usize,
    /// Final KKT violation measured with `predict` on the training set.
    pub kkt_violation: f64,
    pub passes: usize,
    pub converged: bool,
}

impl SvrModel {
    /// A fixed linear map; used for stub predictors and tests.
    pub fn from_weights(weight: Vec<f64>, bias: f64) -> Self {
        Self {
            config: SvrConfig::default(),
            dual_coeffs: Vec::new(),
            bias,
            training_dim: weight.len(),
            weight,
            kkt_violation: 0.0,
            passes: 0,
            converged: true,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.training_dim {
            return Err(Error::DimensionMismatch {
                expected: self.training_dim,
                actual: x.len(),
            });
        }
        Ok(dot(&self.weight, x) + self.bias)
    }

    /// Dual objective at the stored coefficients.
    pub fn dual_objective<V: AsRef<[f64]>>(&self, features: &[V], targets: &[f64]) -> f64 {
        dual_objective(&self.dual_coeffs, features, targets, self.config.epsilon)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weight_from_duals<V: AsRef<[f64]>>(beta: &[f64], features: &[V], dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    for (b, x) in beta.iter().zip(features) {
        if *b != 0.0 {
            for (wk, xk) in w.iter_mut().zip(x.as_ref()) {
                *wk += b * xk;
            }
        }
    }
    w
}

pub fn dual_objective<V: AsRef<[f64]>>(
    beta: &[f64],
    features: &[V],
    targets: &[f64],
    epsilon: f64,
) -> f64 {
    let dim = features.first().map_or(0, |x| x.as_ref().len());
    let w = weight_from_duals(beta, features, dim);
    let linear: f64 = beta
        .iter()
        .zip(targets)
        .map(|(b, y)| y * b - epsilon * libm::fabs(*b))
        .sum();
    linear - 0.5 * dot(&w, &w)
}

/// Admissible bias interval for one point, given residual `r = y - <w, x>`.
#[inline]
fn bias_interval(beta: f64, r: f64, epsilon: f64, c: f64) -> (f64, f64) {
    if beta == 0.0 {
        (r - epsilon, r + epsilon)
    } else if beta >= c {
        (f64::NEG_INFINITY, r - epsilon)
    } else if beta <= -c {
        (r + epsilon, f64::INFINITY)
    } else if beta > 0.0 {
        (r - epsilon, r - epsilon)
    } else {
        (r + epsilon, r + epsilon)
    }
}

#[derive(Debug, Clone, Copy)]
struct Extremes {
    max_lo: f64,
    arg_max_lo: usize,
    min_hi: f64,
    arg_min_hi: usize,
}

impl Extremes {
    fn new() -> Self {
        Self {
            max_lo: f64::NEG_INFINITY,
            arg_max_lo: 0,
            min_hi: f64::INFINITY,
            arg_min_hi: 0,
        }
    }

    fn push(&mut self, k: usize, (lo, hi): (f64, f64)) {
        if lo > self.max_lo {
            self.max_lo = lo;
            self.arg_max_lo = k;
        }
        if hi < self.min_hi {
            self.min_hi = hi;
            self.arg_min_hi = k;
        }
    }

    fn violation(&self) -> f64 {
        if self.max_lo.is_finite() && self.min_hi.is_finite() {
            (self.max_lo - self.min_hi).max(0.0)
        } else {
            0.0
        }
    }

    fn bias(&self) -> f64 {
        match (self.max_lo.is_finite(), self.min_hi.is_finite()) {
            (true, true) => 0.5 * (self.max_lo + self.min_hi),
            (true, false) => self.max_lo,
            (false, true) => self.min_hi,
            (false, false) => 0.0,
        }
    }
}

/// Best step `t` for `beta_i += t, beta_j -= t`.
///
/// `gain` is `r_i - r_j` and `eta` is `|x_i - x_j|^2`. The pair objective
/// `t * gain - eta t^2 / 2 - eps (|a + t| + |c - t|)` is concave and
/// quadratic between the breakpoints `-a` and `c`, so the maximum is at a
/// clipped stationary point of one segment.
fn pair_step(a: f64, c_val: f64, gain: f64, eta: f64, epsilon: f64, c: f64) -> f64 {
    let lo = (-c - a).max(c_val - c);
    let hi = (c - a).min(c_val + c);
    if !(hi > lo) {
        return 0.0;
    }
    let value = |t: f64| {
        t * gain - 0.5 * eta * t * t - epsilon * (libm::fabs(a + t) + libm::fabs(c_val - t))
    };
    let mut knots = [lo, -a, c_val, hi];
    knots.sort_by(f64::total_cmp);

    let mut best_t = 0.0;
    let mut best_v = value(0.0);
    let mut consider = |t: f64| {
        let v = value(t);
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    };
    for w in knots.windows(2) {
        let (p, q) = (w[0].max(lo), w[1].min(hi));
        if !(q >= p) {
            continue;
        }
        consider(p);
        consider(q);
        if eta > 0.0 && q > p {
            let mid = 0.5 * (p + q);
            let s1 = if a + mid > 0.0 { 1.0 } else { -1.0 };
            let s2 = if c_val - mid > 0.0 { 1.0 } else { -1.0 };
            let t = (gain - epsilon * (s1 - s2)) / eta;
            consider(t.clamp(p, q));
        }
    }
    best_t
}

fn snap(beta: f64, c: f64) -> f64 {
    let tol = 1e-12 * c.max(1.0);
    if libm::fabs(beta) <= tol {
        0.0
    } else if libm::fabs(beta - c) <= tol {
        c
    } else if libm::fabs(beta + c) <= tol {
        -c
    } else {
        beta
    }
}

fn check_inputs<V: AsRef<[f64]>>(features: &[V], targets: &[f64]) -> Result<usize> {
    if features.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: targets.len(),
        });
    }
    if features.len() < 2 {
        return Err(Error::TooFewRecords {
            required: 2,
            actual: features.len(),
        });
    }
    let dim = features[0].as_ref().len();
    for x in features {
        let x = x.as_ref();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("svr features"));
        }
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svr targets"));
    }
    Ok(dim)
}

/// Huber-smoothed hinge `h(u)`: zero for `u <= 0`, quadratic on `(0, mu)`,
/// linear beyond.
#[inline]
fn smoothed_hinge(u: f64, mu: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u < mu {
        0.5 * u * u / mu
    } else {
        u - 0.5 * mu
    }
}

/// Dual coefficients implied by a smoothed fit: `C h'(|r| - eps) sign(r)`.
#[inline]
fn smoothed_dual(r: f64, epsilon: f64, c: f64, mu: f64) -> f64 {
    let u = libm::fabs(r) - epsilon;
    let share = (u / mu).clamp(0.0, 1.0);
    if r < 0.0 {
        -c * share
    } else {
        c * share
    }
}

/// Starting coefficients for the pair updates.
///
/// Minimizes the primal with the hinge replaced by [`smoothed_hinge`],
/// using damped Newton steps over `(w, b)` while the smoothing width `mu`
/// shrinks tenfold per stage. At a stationary point of the smoothed primal
/// the derivatives [`smoothed_dual`] satisfy `w = sum beta_i x_i` and
/// `sum beta_i = 0`, so they are a feasible dual point whose KKT violation
/// is of order `mu`.
fn smoothed_warm_start<V: AsRef<[f64]>>(
    features: &[V],
    targets: &[f64],
    dim: usize,
    epsilon: f64,
    c: f64,
    mu_min: f64,
) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};

    const MAX_NEWTON: usize = 50;
    const MAX_HALVINGS: usize = 40;

    let n = features.len();
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut z = vec![0.0; dim + 1];
    z[dim] = sorted[n / 2];
    let spread = targets
        .iter()
        .map(|y| libm::fabs(y - z[dim]))
        .fold(0.0, f64::max);
    let mut mu = spread + 1.0;

    let residual = |z: &[f64], k: usize| targets[k] - dot(&z[..dim], features[k].as_ref()) - z[dim];
    let objective = |z: &[f64], mu: f64| {
        let loss: f64 = (0..n)
            .map(|k| smoothed_hinge(libm::fabs(residual(z, k)) - epsilon, mu))
            .sum();
        0.5 * dot(&z[..dim], &z[..dim]) + c * loss
    };

    let mut beta = vec![0.0; n];
    let mut trial = vec![0.0; dim + 1];
    loop {
        for _ in 0..MAX_NEWTON {
            let mut grad = DVector::<f64>::zeros(dim + 1);
            let mut hess = DMatrix::<f64>::zeros(dim + 1, dim + 1);
            for k in 0..dim {
                grad[k] = z[k];
                hess[(k, k)] = 1.0;
            }
            let curvature = c / mu;
            for (k, x) in features.iter().enumerate() {
                let x = x.as_ref();
                let r = residual(&z, k);
                let b = smoothed_dual(r, epsilon, c, mu);
                if b == 0.0 {
                    continue;
                }
                for (g, xk) in grad.iter_mut().zip(x) {
                    *g -= b * xk;
                }
                grad[dim] -= b;
                let u = libm::fabs(r) - epsilon;
                if u > 0.0 && u < mu {
                    for p in 0..=dim {
                        let xp = if p < dim { x[p] } else { 1.0 };
                        for q in 0..=p {
                            let xq = if q < dim { x[q] } else { 1.0 };
                            hess[(p, q)] += curvature * xp * xq;
                        }
                    }
                }
            }
            let ridge = 1e-9 * curvature;
            for p in 0..=dim {
                hess[(p, p)] += ridge;
                for q in 0..p {
                    hess[(q, p)] = hess[(p, q)];
                }
            }
            if grad.amax() <= 1e-12 * (1.0 + c * n as f64) {
                break;
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&grad),
                None => match hess.lu().solve(&grad) {
                    Some(s) => s,
                    None => break,
                },
            };
            let slope = -grad.dot(&step);
            if !(slope < 0.0) {
                break;
            }
            let start = objective(&z, mu);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                for (p, v) in trial.iter_mut().enumerate() {
                    *v = z[p] - t * step[p];
                }
                if objective(&trial, mu) <= start + 1e-4 * t * slope {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            z.copy_from_slice(&trial);
        }
        if mu < mu_min {
            break;
        }
        mu *= 0.1;
    }
    for (k, b) in beta.iter_mut().enumerate() {
        *b = snap(smoothed_dual(residual(&z, k), epsilon, c, mu), c);
    }
    rebalance(&mut beta, c);
    beta
}

/// Restores `sum beta_i = 0` after rounding by shifting the drift onto
/// coefficients that have room in the box.
fn rebalance(beta: &mut [f64], c: f64) {
    let mut drift: f64 = beta.iter().sum();
    for b in beta.iter_mut() {
        if drift == 0.0 {
            break;
        }
        let target = (*b - drift).clamp(-c, c);
        drift -= *b - target;
        *b = target;
    }
}

/// Fits a linear epsilon-SVR.
///
/// Starts from [`smoothed_warm_start`], then runs passes of pair updates.
/// Each pass visits points in ascending order; a point that breaks the KKT
/// conditions is paired with the point on the other side of the bias
/// interval that promises the largest dual gain.
/// Stops when the violation is within `kkt_tolerance` or after
/// `max_passes` passes (`converged` records which).
pub fn fit_svr<V: AsRef<[f64]>>(
    features: &[V],
    targets: &[f64],
    config: &SvrConfig,
) -> Result<SvrModel> {
    config.validate()?;
    let dim = check_inputs(features, targets)?;
    let n = features.len();
    let eps = config.epsilon;
    let c = config.c_penalty;
    let tol = config.kkt_tolerance;

    let mut beta = smoothed_warm_start(features, targets, dim, eps, c, 0.1 * tol);
    let mut residual = targets.to_vec();
    let mut delta = vec![0.0; dim];
    let mut passes = 0;
    let sq_norm: Vec<f64> = features
        .iter()
        .map(|x| dot(x.as_ref(), x.as_ref()))
        .collect();

    let scan = |beta: &[f64], residual: &[f64]| {
        let mut ext = Extremes::new();
        for k in 0..n {
            ext.push(k, bias_interval(beta[k], residual[k], eps, c));
        }
        ext
    };

    loop {
        // Refresh from the coefficients so rounding never accumulates
        // across passes.
        let w = weight_from_duals(&beta, features, dim);
        for (r, (x, y)) in residual.iter_mut().zip(features.iter().zip(targets)) {
            *r = y - dot(&w, x.as_ref());
        }
        let mut ext = scan(&beta, &residual);
        if ext.violation() <= tol || passes >= config.max_passes {
            let violation = ext.violation();
            let bias = ext.bias();
            return Ok(SvrModel {
                config: *config,
                dual_coeffs: beta,
                bias,
                weight: w,
                training_dim: dim,
                kkt_violation: violation,
                passes,
                converged: violation <= tol,
            });
        }
        passes += 1;

        for i in 0..n {
            let (lo_i, hi_i) = bias_interval(beta[i], residual[i], eps, c);
            let raise = lo_i > ext.min_hi + tol;
            if !raise && hi_i >= ext.max_lo - tol {
                continue;
            }
            let xi = features[i].as_ref();
            // Second-order partner choice: largest gap^2 / eta on the other
            // side of the bias interval.
            let mut partner = None;
            let mut best_score = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (lo_j, hi_j) = bias_interval(beta[j], residual[j], eps, c);
                let gap = if raise { lo_i - hi_j } else { lo_j - hi_i };
                if !(gap > 0.0) {
                    continue;
                }
                let eta =
                    (sq_norm[i] + sq_norm[j] - 2.0 * dot(xi, features[j].as_ref())).max(ETA_FLOOR);
                let score = gap * gap / eta;
                if score > best_score {
                    best_score = score;
                    partner = Some(j);
                }
            }
            let Some(j) = partner else { continue };
            let (up, down) = if raise { (i, j) } else { (j, i) };
            let (xu, xd) = (features[up].as_ref(), features[down].as_ref());
            for ((d, a), b) in delta.iter_mut().zip(xu).zip(xd) {
                *d = a - b;
            }
            let eta = dot(&delta, &delta);
            let t = pair_step(
                beta[up],
                beta[down],
                residual[up] - residual[down],
                eta,
                eps,
                c,
            );
            if t == 0.0 {
                continue;
            }
            beta[up] = snap(beta[up] + t, c);
            beta[down] = snap(beta[down] - t, c);
            ext = Extremes::new();
            for k in 0..n {
                residual[k] -= t * dot(&delta, features[k].as_ref());
                ext.push(k, bias_interval(beta[k], residual[k], eps, c));
            }
            if ext.violation() <= tol {
                break;
            }
        }
    }
}

/// Primal objective `1/2 |w|^2 + C sum max(0, |y - <w, x> - b| - eps)`.
pub fn primal_objective<V: AsRef<[f64]>>(
    weight: &[f64],
    bias: f64,
    features: &[V],
    targets: &[f64],
    config: &SvrConfig,
) -> f64 {
    let slack: f64 = features
        .iter()
        .zip(targets)
        .map(|(x, y)| (libm::fabs(y - dot(weight, x.as_ref()) - bias) - config.epsilon).max(0.0))
        .sum();
    0.5 * dot(weight, weight) + config.c_penalty * slack
}
