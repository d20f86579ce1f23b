//! Two-stage estimation: method of moments for the Gamma shape `k`, then
//! conditional maximum likelihood for `theta` by Newton iterations with an
//! analytic score and Hessian.
//!
//! Given `k`, the conditional log-likelihood (up to a constant) is
//!
//! ```text
//! l(theta) = sum_t { -(k + 1) ln h_t - lambda_t^2 / (2 h_t^2) - delta_t / h_t }
//! ```
//!
//! Pre-sample intervals are `E(r_t) = [-k E h, k E h]` and pre-sample scales
//! follow [`InitMode`]; both depend on `theta` through `E h`, and the
//! derivatives below account for that dependence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::IntervalSeries;
use crate::linalg::Matrix;
use crate::optim::{maximize, NewtonOptions, Objective};
use crate::process::{theta_names, ModelOrders, ModelParams};
use crate::scalar::{mean, Scalar};
use crate::simulator::InitMode;

/// How `dh_t / dtheta` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Exact derivative of the computed recursion, including propagation
    /// through lagged `h` and the pre-sample values.
    #[default]
    Full,
    /// Direct terms only (`1`, `|lambda_{t-i}|`, `delta_{t-i}`, `h_{t-i}`),
    /// treating lagged `h` as data.
    DirectOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<F = f64> {
    pub max_iterations: usize,
    pub gradient_tolerance: F,
    pub step_halving_limit: usize,
    /// Starting guess for `1 - sum_i mu_i`.
    pub init_fraction: F,
    /// Starting mass of each coefficient group.
    pub coef_budget: F,
    pub init_mode: InitMode,
    pub derivatives: DerivativeMode,
}

impl<F: Scalar> Default for FitOptions<F> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: F::lit(1e-6),
            step_halving_limit: 40,
            init_fraction: F::lit(0.4),
            coef_budget: F::lit(0.2),
            init_mode: InitMode::MeanH,
            derivatives: DerivativeMode::Full,
        }
    }
}

/// Result of [`fit_mle`].
#[derive(Debug, Clone)]
pub struct FittedModel<F = f64> {
    pub params: ModelParams<F>,
    pub h_path: Vec<F>,
    pub loglik: F,
    /// Score at the returned estimate (all theta components).
    pub gradient: Vec<F>,
    /// Hessian at the returned estimate (all theta components).
    pub hessian: Matrix<F>,
    /// `-H^{-1}` over the free components, when it exists.
    pub covariance: Option<Matrix<F>>,
    /// Names of the free components, in covariance order.
    pub free_names: Vec<String>,
    /// Per-theta standard errors; `None` for components on the boundary.
    pub std_errors: Vec<Option<F>>,
    pub converged: bool,
    pub iterations: usize,
    pub boundary_set: Vec<String>,
    pub init_mode: InitMode,
}

impl<F: Scalar> FittedModel<F> {
    pub fn theta_names(&self) -> Vec<String> {
        theta_names(&self.params.orders)
    }
}

/// Method-of-moments estimate `k = sqrt(2/pi) mean(delta) / mean(|lambda|)`.
pub fn estimate_k<F: Scalar>(series: &IntervalSeries<F>) -> Result<F> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let abs_c: Vec<F> = series.items().iter().map(|x| x.center().abs()).collect();
    let m_abs = mean(&abs_c).expect("non-empty");
    if !(m_abs > F::zero()) {
        return Err(Error::KNotIdentified);
    }
    let m_r = mean(&series.radii()).expect("non-empty");
    Ok(F::mean_abs_normal() * m_r / m_abs)
}

/// Starting values: `mu = init_fraction * mean(h)` with `mean(h)` estimated as
/// `mean(delta) / k`, and each coefficient group given `coef_budget`, split
/// equally within the group.
pub fn init_theta<F: Scalar>(
    series: &IntervalSeries<F>,
    k: F,
    orders: ModelOrders,
    options: &FitOptions<F>,
) -> Result<ModelParams<F>> {
    let m_r = mean(&series.radii()).ok_or(Error::EmptyInput)?;
    let h_bar = m_r / k;
    let mu = (h_bar * options.init_fraction).max(F::lit(1e-12));
    let budget = options.coef_budget;
    let alpha = vec![budget * F::mean_abs_normal() / F::from_usize_lossy(orders.p); orders.p];
    let beta = vec![budget / (k * F::from_usize_lossy(orders.q)); orders.q];
    let gamma = if orders.w > 0 {
        vec![budget / F::from_usize_lossy(orders.w); orders.w]
    } else {
        Vec::new()
    };
    let mut params = ModelParams::new(k, mu, alpha, beta, gamma)?;
    let (_, s) = crate::process::mean_stationarity(&params);
    if s >= F::one() {
        // Oversized budgets: shrink the coefficients to the requested slack.
        let target = (F::one() - options.init_fraction).max(F::lit(0.05));
        let f = target / s;
        let theta: Vec<F> = params
            .theta()
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == 0 { v } else { v * f })
            .collect();
        params = params.with_theta(&theta);
    }
    Ok(params)
}

struct Presample<F> {
    h: F,
    dh: Vec<F>,
    d2h: Matrix<F>,
    delta: F,
    ddelta: Vec<F>,
    d2delta: Matrix<F>,
}

fn presample_with_derivatives<F: Scalar>(params: &ModelParams<F>, mode: InitMode) -> Option<Presample<F>> {
    let theta = params.theta();
    let n = theta.len();
    let w = params.mean_weights();
    let denom = F::one() - w.iter().zip(&theta).fold(F::zero(), |a, (&wi, &ti)| a + wi * ti);
    if !(denom > F::zero()) {
        return None;
    }
    let mu = params.mu;
    let eh = mu / denom;
    let mut d1 = vec![F::zero(); n];
    let mut d2 = Matrix::zeros(n);
    d1[0] = F::one() / denom;
    let d_sq = denom * denom;
    for j in 1..n {
        d1[j] = mu * w[j] / d_sq;
        d2[(0, j)] = w[j] / d_sq;
        d2[(j, 0)] = w[j] / d_sq;
        for i in 1..n {
            d2[(i, j)] = F::lit(2.0) * mu * w[i] * w[j] / (d_sq * denom);
        }
    }
    let k = params.k;
    let (h, dh, d2h) = match mode {
        InitMode::MeanH => (eh, d1.clone(), d2.clone()),
        InitMode::ZeroH => (F::zero(), vec![F::zero(); n], Matrix::zeros(n)),
    };
    Some(Presample {
        h,
        dh,
        d2h,
        delta: k * eh,
        ddelta: d1.iter().map(|&v| k * v).collect(),
        d2delta: d2.scaled(k),
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Order {
    Value,
    Second,
}

struct RecursionOut<F> {
    loglik: F,
    h: Vec<F>,
    grad: Vec<F>,
    hess: Matrix<F>,
}

fn recursion<F: Scalar>(
    params: &ModelParams<F>,
    series: &IntervalSeries<F>,
    mode: InitMode,
    order: Order,
    derivs: DerivativeMode,
) -> Result<RecursionOut<F>> {
    params.validate()?;
    let o = params.orders;
    let n = o.n_theta();
    let pre = presample_with_derivatives(params, mode).ok_or_else(|| {
        Error::InvalidParameters("pre-sample E(h_t) requires sum of lag means < 1".into())
    })?;
    let full = derivs == DerivativeMode::Full;
    let want = order == Order::Second;
    let (ia, ib, ig) = (1, 1 + o.p, 1 + o.p + o.q);
    let k1 = params.k + F::one();
    let two = F::lit(2.0);
    let three = F::lit(3.0);
    let items = series.items();
    let t_len = items.len();

    let mut hs: Vec<F> = Vec::with_capacity(t_len);
    let mut dhs: Vec<Vec<F>> = Vec::new();
    let mut d2hs: Vec<Matrix<F>> = Vec::new();
    let mut loglik = F::zero();
    let mut grad = vec![F::zero(); n];
    let mut hess = Matrix::zeros(n);

    for t in 0..t_len {
        let mut h = params.mu;
        let mut dh = vec![F::zero(); if want { n } else { 0 }];
        let mut d2h = Matrix::zeros(if want { n } else { 0 });
        if want {
            dh[0] = F::one();
        }
        for i in 1..=o.p {
            if t >= i {
                let a = items[t - i].center().abs();
                h = h + params.alpha[i - 1] * a;
                if want {
                    dh[ia + i - 1] = dh[ia + i - 1] + a;
                }
            }
        }
        for i in 1..=o.q {
            let b = params.beta[i - 1];
            let j = ib + i - 1;
            if t >= i {
                let d = items[t - i].radius();
                h = h + b * d;
                if want {
                    dh[j] = dh[j] + d;
                }
            } else {
                h = h + b * pre.delta;
                if want {
                    dh[j] = dh[j] + pre.delta;
                    if full {
                        for a in 0..n {
                            dh[a] = dh[a] + b * pre.ddelta[a];
                            d2h[(j, a)] = d2h[(j, a)] + pre.ddelta[a];
                            d2h[(a, j)] = d2h[(a, j)] + pre.ddelta[a];
                            for c in 0..n {
                                d2h[(a, c)] = d2h[(a, c)] + b * pre.d2delta[(a, c)];
                            }
                        }
                    }
                }
            }
        }
        for i in 1..=o.w {
            let g = params.gamma[i - 1];
            let j = ig + i - 1;
            let (hl, dhl, d2hl) = if t >= i {
                (
                    hs[t - i],
                    if want { Some(&dhs[t - i]) } else { None },
                    if want { Some(&d2hs[t - i]) } else { None },
                )
            } else {
                (hs_pre(&pre), Some(&pre.dh), Some(&pre.d2h))
            };
            h = h + g * hl;
            if want {
                dh[j] = dh[j] + hl;
                if full {
                    let dhl = dhl.expect("derivatives tracked");
                    let d2hl = d2hl.expect("derivatives tracked");
                    for a in 0..n {
                        dh[a] = dh[a] + g * dhl[a];
                        d2h[(j, a)] = d2h[(j, a)] + dhl[a];
                        d2h[(a, j)] = d2h[(a, j)] + dhl[a];
                        for c in 0..n {
                            d2h[(a, c)] = d2h[(a, c)] + g * d2hl[(a, c)];
                        }
                    }
                }
            }
        }
        if !h.is_finite() || !(h > F::zero()) {
            return Err(Error::Overflow);
        }
        let lam = items[t].center();
        let del = items[t].radius();
        let lam2 = lam * lam;
        let h2 = h * h;
        loglik = loglik - k1 * h.ln() - lam2 / (two * h2) - del / h;
        if want {
            let s1 = -k1 / h + lam2 / (h2 * h) + del / h2;
            let s2 = k1 / h2 - three * lam2 / (h2 * h2) - two * del / (h2 * h);
            for a in 0..n {
                grad[a] = grad[a] + s1 * dh[a];
                for c in 0..n {
                    hess[(a, c)] = hess[(a, c)] + s2 * dh[a] * dh[c] + s1 * d2h[(a, c)];
                }
            }
        }
        hs.push(h);
        if want {
            dhs.push(dh);
            d2hs.push(d2h);
        }
    }
    if !loglik.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(RecursionOut {
        loglik,
        h: hs,
        grad,
        hess,
    })
}

#[inline]
fn hs_pre<F: Scalar>(pre: &Presample<F>) -> F {
    pre.h
}

/// Conditional log-likelihood (up to a constant) and the fitted `h` path.
pub fn loglik_eval<F: Scalar>(
    params: &ModelParams<F>,
    series: &IntervalSeries<F>,
    init_mode: InitMode,
) -> Result<(F, Vec<F>)> {
    let out = recursion(params, series, init_mode, Order::Value, DerivativeMode::Full)?;
    Ok((out.loglik, out.h))
}

/// Analytic score and Hessian of the log-likelihood in `theta`.
pub fn score_and_hessian<F: Scalar>(
    params: &ModelParams<F>,
    series: &IntervalSeries<F>,
    init_mode: InitMode,
    derivatives: DerivativeMode,
) -> Result<(Vec<F>, Matrix<F>)> {
    let out = recursion(params, series, init_mode, Order::Second, derivatives)?;
    Ok((out.grad, out.hess))
}

struct Likelihood<'a, F> {
    base: &'a ModelParams<F>,
    series: &'a IntervalSeries<F>,
    mode: InitMode,
    derivs: DerivativeMode,
}

impl<F: Scalar> Likelihood<'_, F> {
    fn feasible(&self, theta: &[F]) -> Option<ModelParams<F>> {
        if !(theta[0] > F::zero()) || theta.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let p = self.base.with_theta(theta);
        p.mean_h().map(|_| p)
    }
}

impl<F: Scalar> Objective<F> for Likelihood<'_, F> {
    fn value(&self, x: &[F]) -> Option<F> {
        let p = self.feasible(x)?;
        recursion(&p, self.series, self.mode, Order::Value, self.derivs)
            .ok()
            .map(|o| o.loglik)
    }

    fn value_grad_hess(&self, x: &[F]) -> Option<(F, Vec<F>, Matrix<F>)> {
        let p = self.feasible(x)?;
        recursion(&p, self.series, self.mode, Order::Second, self.derivs)
            .ok()
            .map(|o| (o.loglik, o.grad, o.hess))
    }
}

/// Maximum-likelihood fit of `theta` given the moment estimate of `k`.
pub fn fit_mle<F: Scalar>(
    series: &IntervalSeries<F>,
    orders: ModelOrders,
    options: &FitOptions<F>,
) -> Result<FittedModel<F>> {
    let floor = 10 * orders.n_theta();
    if series.len() < floor {
        return Err(Error::InsufficientData(format!(
            "{} observations is below the identifiability floor of {floor} for orders {orders}",
            series.len()
        )));
    }
    let k = estimate_k(series)?;
    let start = init_theta(series, k, orders, options)?;
    fit_mle_from(series, &start, options)
}

/// Maximum-likelihood fit of `theta` with `k` held at `start.k`, starting
/// from `start`.
pub fn fit_mle_from<F: Scalar>(
    series: &IntervalSeries<F>,
    start: &ModelParams<F>,
    options: &FitOptions<F>,
) -> Result<FittedModel<F>> {
    start.validate()?;
    let orders = start.orders;
    let objective = Likelihood {
        base: start,
        series,
        mode: options.init_mode,
        derivs: options.derivatives,
    };
    let n = orders.n_theta();
    let mut bounded = vec![true; n];
    bounded[0] = false;
    let newton = NewtonOptions {
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance,
        step_halving_limit: options.step_halving_limit,
        snap: F::lit(1e-8),
    };
    let res = maximize(&objective, &start.theta(), &bounded, &newton).ok_or_else(|| {
        Error::InvalidParameters("starting values outside the feasible region".into())
    })?;

    let params = start.with_theta(&res.x);
    let (loglik, h_path) = loglik_eval(&params, series, options.init_mode)?;
    let names = theta_names(&orders);
    let free: Vec<usize> = (0..n).filter(|&j| !res.fixed[j]).collect();
    let neg = res.hessian.select(&free).scaled(-F::one());
    let covariance = neg.inverse_spd();
    if res.converged && covariance.is_none() {
        return Err(Error::SingularHessian);
    }
    let mut std_errors = vec![None; n];
    if let Some(cov) = &covariance {
        for (a, &j) in free.iter().enumerate() {
            std_errors[j] = Some(cov[(a, a)].max(F::zero()).sqrt());
        }
    }
    Ok(FittedModel {
        params,
        h_path,
        loglik,
        gradient: res.gradient,
        hessian: res.hessian,
        covariance,
        free_names: free.iter().map(|&j| names[j].clone()).collect(),
        std_errors,
        converged: res.converged,
        iterations: res.iterations,
        boundary_set: (0..n).filter(|&j| res.fixed[j]).map(|j| names[j].clone()).collect(),
        init_mode: options.init_mode,
    })
}

/// `-[Hessian]^{-1}` over the free parameters of a converged fit.
pub fn asymptotic_covariance<F: Scalar>(fitted: &FittedModel<F>) -> Result<Matrix<F>> {
    if !fitted.converged {
        return Err(Error::NotInteriorMaximum);
    }
    let names = fitted.theta_names();
    let free: Vec<usize> = (0..names.len())
        .filter(|&j| !fitted.boundary_set.contains(&names[j]))
        .collect();
    fitted
        .hessian
        .select(&free)
        .scaled(-F::one())
        .inverse_spd()
        .ok_or(Error::NotInteriorMaximum)
}

/// Serializable summary of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModelDoc {
    pub orders: ModelOrders,
    pub k: f64,
    pub theta: Vec<(String, f64)>,
    pub boundary_set: Vec<String>,
    pub std_errors: Vec<(String, Option<f64>)>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub init_mode: InitMode,
    pub h_path: Vec<f64>,
}

impl FittedModelDoc {
    pub fn from_fit(fit: &FittedModel<f64>) -> Self {
        let names = fit.theta_names();
        Self {
            orders: fit.params.orders,
            k: fit.params.k,
            theta: names.iter().cloned().zip(fit.params.theta()).collect(),
            boundary_set: fit.boundary_set.clone(),
            std_errors: names.iter().cloned().zip(fit.std_errors.iter().copied()).collect(),
            loglik: fit.loglik,
            converged: fit.converged,
            iterations: fit.iterations,
            init_mode: fit.init_mode,
            h_path: fit.h_path.clone(),
        }
    }

    /// Model parameters described by the document.
    pub fn params(&self) -> Result<ModelParams<f64>> {
        let names = theta_names(&self.orders);
        if names.len() != self.theta.len() || names.iter().zip(&self.theta).any(|(a, (b, _))| a != b) {
            return Err(Error::InvalidParameters(format!(
                "theta keys {:?} do not match orders {}",
                self.theta.iter().map(|t| &t.0).collect::<Vec<_>>(),
                self.orders
            )));
        }
        let values: Vec<f64> = self.theta.iter().map(|t| t.1).collect();
        let base = ModelParams {
            orders: self.orders,
            k: self.k,
            mu: values[0],
            alpha: vec![0.0; self.orders.p],
            beta: vec![0.0; self.orders.q],
            gamma: vec![0.0; self.orders.w],
        };
        let p = base.with_theta(&values);
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s)?;
        doc.params()?;
        Ok(doc)
    }
}
