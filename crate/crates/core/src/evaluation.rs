//! Volatility-forecast evaluation against a realized-variance proxy, the
//! GARCH(1,1) baseline, and the simulation-study driver.
//!
//! Loss functions follow the printed definitions, with `v_t` the proxy:
//!
//! ```text
//! QLIKE = (1/N) sum [ln s_t + v_t^2 / s_t]
//! HMSE  = (1/N) sum (v_t^2 / s_t - 1)
//! ```
//!
//! [`LossOptions`] switches to the conventional variants (`v_t` in the
//! numerator, squared HMSE terms).

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_mle, FitOptions};
use crate::forecasting::rolling_forecast;
use crate::intervals::IntervalSeries;
use crate::linalg::Matrix;
use crate::optim::{maximize, NewtonOptions, Objective};
use crate::process::{intgarch_volatility, ModelOrders, ModelParams};
use crate::scalar::{sum, Scalar};
use crate::simulator::{aux_rng, simulate, InitMode, SimConfig};

// --- losses ---

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossOptions {
    /// Use `v^2` in the QLIKE/HMSE numerators (as printed). When false the
    /// proxy enters linearly.
    pub squared_proxy: bool,
    /// Square each HMSE term.
    pub hmse_squared: bool,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self {
            squared_proxy: true,
            hmse_squared: false,
        }
    }
}

fn check_pair<F: Scalar>(rv: &[F], sigma2: &[F], min_len: usize) -> Result<()> {
    if rv.len() != sigma2.len() {
        return Err(Error::Misaligned(format!("{} proxy values for {} forecasts", rv.len(), sigma2.len())));
    }
    if rv.len() < min_len {
        return Err(Error::InsufficientData(format!("{} observations, need {min_len}", rv.len())));
    }
    Ok(())
}

fn check_positive<F: Scalar>(sigma2: &[F]) -> Result<()> {
    if let Some(i) = sigma2.iter().position(|&s| !(s > F::zero()) || !s.is_finite()) {
        return Err(Error::InvalidParameters(format!("forecast {i} is {} (must be positive)", sigma2[i])));
    }
    Ok(())
}

/// R^2 of the OLS regression `rv_t = b0 + b1 sigma2_t + e_t`.
pub fn mz_r2<F: Scalar>(rv: &[F], sigma2: &[F]) -> Result<F> {
    check_pair(rv, sigma2, 3)?;
    let n = F::from_usize_lossy(rv.len());
    let mx = sum(sigma2.iter().copied()) / n;
    let my = sum(rv.iter().copied()) / n;
    let sxx = sum(sigma2.iter().map(|&x| (x - mx) * (x - mx)));
    let syy = sum(rv.iter().map(|&y| (y - my) * (y - my)));
    let sxy = sum(sigma2.iter().zip(rv).map(|(&x, &y)| (x - mx) * (y - my)));
    if !(sxx > F::zero()) {
        return Err(Error::R2Undefined("constant regressor".into()));
    }
    if !(syy > F::zero()) {
        return Err(Error::R2Undefined("constant proxy".into()));
    }
    Ok((sxy * sxy / (sxx * syy)).min(F::one()))
}

pub fn qlike<F: Scalar>(rv: &[F], sigma2: &[F], opts: &LossOptions) -> Result<F> {
    check_pair(rv, sigma2, 1)?;
    check_positive(sigma2)?;
    let terms = rv.iter().zip(sigma2).map(|(&v, &s)| {
        let num = if opts.squared_proxy { v * v } else { v };
        s.ln() + num / s
    });
    Ok(sum(terms) / F::from_usize_lossy(rv.len()))
}

pub fn hmse<F: Scalar>(rv: &[F], sigma2: &[F], opts: &LossOptions) -> Result<F> {
    check_pair(rv, sigma2, 1)?;
    check_positive(sigma2)?;
    let terms = rv.iter().zip(sigma2).map(|(&v, &s)| {
        let num = if opts.squared_proxy { v * v } else { v };
        let e = num / s - F::one();
        if opts.hmse_squared {
            e * e
        } else {
            e
        }
    });
    Ok(sum(terms) / F::from_usize_lossy(rv.len()))
}

// --- GARCH(1,1) baseline ---

/// `sigma2_t = omega + a r_{t-1}^2 + b sigma2_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Garch11Params {
    pub omega: f64,
    pub a: f64,
    pub b: f64,
}

impl Garch11Params {
    pub fn persistence(&self) -> f64 {
        self.a + self.b
    }

    /// Unconditional variance, when `a + b < 1`.
    pub fn long_run_variance(&self) -> Option<f64> {
        (self.persistence() < 1.0).then(|| self.omega / (1.0 - self.persistence()))
    }

    /// Forecasts of `sigma2_{t+1}, .., sigma2_{t+horizon}` from the last
    /// return and variance.
    pub fn forecast(&self, last_r: f64, last_sigma2: f64, horizon: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(horizon);
        let mut s = self.omega + self.a * last_r * last_r + self.b * last_sigma2;
        for _ in 0..horizon {
            out.push(s);
            s = self.omega + self.persistence() * s;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Garch11Fit {
    pub params: Garch11Params,
    /// In-sample conditional variances, `sigma2[t]` for `returns[t]`.
    pub sigma2: Vec<f64>,
    pub loglik: f64,
    pub gradient: [f64; 3],
    pub converged: bool,
    pub iterations: usize,
}

struct Garch11Lik<'a> {
    r: &'a [f64],
    s0: f64,
}

impl Garch11Lik<'_> {
    /// Positivity only; `a + b >= 1` is a legitimate (integrated or
    /// explosive) fit and the likelihood is well defined there.
    fn feasible(x: &[f64]) -> bool {
        x[0] > 0.0 && x[1] >= 0.0 && x[2] >= 0.0
    }

    /// Gaussian quasi-log-likelihood without constants, with its gradient
    /// and Hessian when `derivs` is set.
    fn eval(&self, x: &[f64], derivs: bool) -> Option<(f64, [f64; 3], [[f64; 3]; 3])> {
        if !Self::feasible(x) {
            return None;
        }
        let (omega, a, b) = (x[0], x[1], x[2]);
        let mut s = self.s0;
        let mut ds = [0.0; 3];
        let mut d2s = [[0.0; 3]; 3];
        let mut ll = 0.0;
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for t in 0..self.r.len() {
            if t > 0 {
                let rp2 = self.r[t - 1] * self.r[t - 1];
                let sp = s;
                if derivs {
                    let dsp = ds;
                    let mut nd2 = [[0.0; 3]; 3];
                    for i in 0..3 {
                        for j in 0..3 {
                            nd2[i][j] = b * d2s[i][j];
                        }
                    }
                    for i in 0..3 {
                        // d/db of (b * ds_prev_i) contributes ds_prev_i
                        nd2[2][i] += dsp[i];
                        nd2[i][2] += dsp[i];
                    }
                    d2s = nd2;
                    ds = [1.0 + b * dsp[0], rp2 + b * dsp[1], sp + b * dsp[2]];
                }
                s = omega + a * rp2 + b * sp;
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let r2 = self.r[t] * self.r[t];
            ll += -0.5 * (s.ln() + r2 / s);
            if derivs {
                let l1 = -0.5 * (1.0 / s - r2 / (s * s));
                let l2 = -0.5 * (-1.0 / (s * s) + 2.0 * r2 / (s * s * s));
                for i in 0..3 {
                    g[i] += l1 * ds[i];
                    for j in 0..3 {
                        h[i][j] += l2 * ds[i] * ds[j] + l1 * d2s[i][j];
                    }
                }
            }
        }
        ll.is_finite().then_some((ll, g, h))
    }

    fn path(&self, p: &Garch11Params) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.r.len());
        let mut s = self.s0;
        for t in 0..self.r.len() {
            if t > 0 {
                s = p.omega + p.a * self.r[t - 1] * self.r[t - 1] + p.b * s;
            }
            out.push(s);
        }
        out
    }
}

impl Objective<f64> for Garch11Lik<'_> {
    fn value(&self, x: &[f64]) -> Option<f64> {
        self.eval(x, false).map(|v| v.0)
    }

    fn value_grad_hess(&self, x: &[f64]) -> Option<(f64, Vec<f64>, Matrix)> {
        let (v, g, h) = self.eval(x, true)?;
        Some((v, g.to_vec(), Matrix::from_rows(&h.map(|r| r.to_vec()))))
    }
}

/// Gaussian quasi-MLE of GARCH(1,1), variance recursion started at the
/// sample variance. Requires at least 50 returns. Non-convergence is
/// reported through [`Garch11Fit::converged`].
pub fn fit_garch11(returns: &[f64]) -> Result<Garch11Fit> {
    fit_garch11_from(returns, None)
}

/// As [`fit_garch11`], optionally starting from `start`.
pub fn fit_garch11_from(returns: &[f64], start: Option<Garch11Params>) -> Result<Garch11Fit> {
    if returns.len() < 50 {
        return Err(Error::InsufficientData(format!("{} returns; GARCH(1,1) needs at least 50", returns.len())));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidParameters("non-finite return".into()));
    }
    let n = returns.len() as f64;
    let m = returns.iter().sum::<f64>() / n;
    let s0 = returns.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (n - 1.0);
    if !(s0 > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let lik = Garch11Lik { r: returns, s0 };
    let x0 = match start {
        Some(p) if Garch11Lik::feasible(&[p.omega, p.a, p.b]) => vec![p.omega, p.a, p.b],
        _ => vec![s0 * 0.1, 0.05, 0.85],
    };
    let opts = NewtonOptions {
        max_iterations: 200,
        gradient_tolerance: 1e-6,
        step_halving_limit: 40,
        snap: 1e-8,
    };
    let res = maximize(&lik, &x0, &[false, true, true], &opts)
        .ok_or_else(|| Error::InvalidParameters("GARCH starting values infeasible".into()))?;
    let params = Garch11Params {
        omega: res.x[0],
        a: res.x[1],
        b: res.x[2],
    };
    Ok(Garch11Fit {
        params,
        sigma2: lik.path(&params),
        loglik: res.value,
        gradient: [res.gradient[0], res.gradient[1], res.gradient[2]],
        converged: res.converged,
        iterations: res.iterations,
    })
}

/// Simulates `n` GARCH(1,1) returns with Gaussian innovations, started at
/// the long-run variance.
pub fn simulate_garch11(p: &Garch11Params, n: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    let lr = p
        .long_run_variance()
        .ok_or_else(|| Error::InvalidParameters(format!("a + b = {} >= 1", p.persistence())))?;
    let mut rng = aux_rng(seed);
    let mut s = lr;
    let mut r_prev = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        if t > 0 {
            s = p.omega + p.a * r_prev * r_prev + p.b * s;
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        r_prev = s.sqrt() * z;
        if t >= burn_in {
            out.push(r_prev);
        }
    }
    Ok(out)
}

// --- comparison ---

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub asset: String,
    pub model: String,
    /// 0 for in-sample fitted values.
    pub horizon: usize,
    pub r2: f64,
    pub qlike: f64,
    pub hmse: f64,
    pub n: usize,
    /// Best among the compared models on this metric (strictly).
    pub best_r2: bool,
    pub best_qlike: bool,
    pub best_hmse: bool,
}

/// Variance forecasts of one model for one horizon, dated by target day.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBlock {
    pub dates: Vec<NaiveDate>,
    pub sigma2: Vec<f64>,
}

/// One model's fitted (horizon 0) and out-of-sample forecasts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelForecasts {
    pub name: String,
    pub blocks: BTreeMap<usize, ForecastBlock>,
}

/// Per-model, per-horizon reports. All models must carry the same target
/// dates for each horizon, and every target date must have a proxy value.
/// Winners are marked per metric: highest R^2, lowest QLIKE and HMSE
/// closest to zero; ties mark no winner.
pub fn compare(
    asset: &str,
    models: &[ModelForecasts],
    rv_dates: &[NaiveDate],
    rv: &[f64],
    opts: &LossOptions,
) -> Result<Vec<EvalReport>> {
    if rv_dates.len() != rv.len() {
        return Err(Error::Misaligned(format!("{} proxy dates for {} values", rv_dates.len(), rv.len())));
    }
    let lookup: BTreeMap<NaiveDate, f64> = rv_dates.iter().copied().zip(rv.iter().copied()).collect();
    let Some(first) = models.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (&horizon, base) in &first.blocks {
        let mut group = Vec::new();
        for m in models {
            let b = m.blocks.get(&horizon).ok_or_else(|| {
                Error::Misaligned(format!("model {} has no horizon {horizon} forecasts", m.name))
            })?;
            if b.dates.len() != b.sigma2.len() {
                return Err(Error::Misaligned(format!("model {} horizon {horizon}: dates/values length", m.name)));
            }
            if let Some(i) = (0..b.dates.len().max(base.dates.len())).find(|&i| b.dates.get(i) != base.dates.get(i)) {
                return Err(Error::Misaligned(format!(
                    "horizon {horizon}: first mismatch at position {i}: {} has {:?}, {} has {:?}",
                    first.name,
                    base.dates.get(i),
                    m.name,
                    b.dates.get(i)
                )));
            }
            let proxy = b
                .dates
                .iter()
                .map(|d| {
                    lookup
                        .get(d)
                        .copied()
                        .ok_or_else(|| Error::Misaligned(format!("horizon {horizon}: no proxy value for {d}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            group.push(EvalReport {
                asset: asset.to_string(),
                model: m.name.clone(),
                horizon,
                r2: mz_r2(&proxy, &b.sigma2)?,
                qlike: qlike(&proxy, &b.sigma2, opts)?,
                hmse: hmse(&proxy, &b.sigma2, opts)?,
                n: proxy.len(),
                best_r2: false,
                best_qlike: false,
                best_hmse: false,
            });
        }
        mark_winner(&mut group, |r| r.r2, |r, v| r.best_r2 = v);
        mark_winner(&mut group, |r| -r.qlike, |r, v| r.best_qlike = v);
        mark_winner(&mut group, |r| -r.hmse.abs(), |r, v| r.best_hmse = v);
        out.extend(group);
    }
    Ok(out)
}

fn mark_winner(group: &mut [EvalReport], score: impl Fn(&EvalReport) -> f64, set: impl Fn(&mut EvalReport, bool)) {
    let best = group.iter().map(&score).fold(f64::NEG_INFINITY, f64::max);
    let count = group.iter().filter(|r| score(r) == best).count();
    if count == 1 {
        for r in group.iter_mut() {
            let win = score(r) == best;
            set(r, win);
        }
    }
}

/// Writes reports as CSV, one row per asset x model x horizon x metric.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("asset,model,horizon,metric,value,n,best\n");
    for r in reports {
        for (metric, value, best) in [("r2", r.r2, r.best_r2), ("qlike", r.qlike, r.best_qlike), ("hmse", r.hmse, r.best_hmse)] {
            s.push_str(&format!("{},{},{},{metric},{value},{},{}\n", r.asset, r.model, r.horizon, r.n, best as u8));
        }
    }
    s
}

/// Aligned-column text table; winners carry a `*`.
pub fn reports_to_text(reports: &[EvalReport]) -> String {
    let mut s = format!("{:<10} {:<10} {:>7} {:>10} {:>12} {:>12} {:>6}\n", "asset", "model", "horizon", "R2", "QLIKE", "HMSE", "N");
    let star = |b: bool| if b { "*" } else { " " };
    for r in reports {
        s.push_str(&format!(
            "{:<10} {:<10} {:>7} {:>9.4}{} {:>11.4}{} {:>11.4}{} {:>6}\n",
            r.asset,
            r.model,
            r.horizon,
            r.r2,
            star(r.best_r2),
            r.qlike,
            star(r.best_qlike),
            r.hmse,
            star(r.best_hmse),
            r.n
        ));
    }
    s
}

// --- backtest ---

/// Walk-forward GARCH(1,1) forecasts on close returns: fit on the expanding
/// prefix `0..=t` every `refit_every` origins, filter the variance forward
/// between refits, forecast `max(horizons)` steps. Returns, per origin, the
/// origin index and the forecast vector.
pub fn garch_rolling_forecast(
    returns: &[f64],
    horizons: &[usize],
    refit_every: usize,
    train_len: usize,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let max_h = *horizons.iter().max().ok_or_else(|| Error::InvalidParameters("no forecast horizons".into()))?;
    if refit_every == 0 || train_len == 0 || train_len > returns.len() {
        return Err(Error::InvalidParameters("invalid rolling configuration".into()));
    }
    let mut out = Vec::new();
    let mut current: Option<(Garch11Params, f64)> = None; // params, sigma2 at origin
    let mut since = 0usize;
    for t in train_len - 1..returns.len() {
        if current.is_none() || since >= refit_every {
            let warm = current.map(|c| c.0);
            let fit = fit_garch11_from(&returns[..=t], warm)?;
            if !fit.converged {
                log::warn!("GARCH(1,1) refit at origin {t} did not converge");
            }
            current = Some((fit.params, fit.sigma2[t]));
            since = 0;
        } else if let Some((p, s)) = current.as_mut() {
            *s = p.omega + p.a * returns[t - 1] * returns[t - 1] + p.b * *s;
        }
        let (p, s) = current.expect("set above");
        out.push((t, p.forecast(returns[t], s, max_h)));
        since += 1;
    }
    Ok(out)
}

/// A simulated world with an interval series, close-to-close returns and a
/// noisy realized-variance proxy.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub params: ModelParams,
    pub series: IntervalSeries,
    pub close_returns: Vec<f64>,
    /// True `(1 + k/3) h_t^2`.
    pub sigma2: Vec<f64>,
    /// Proxy: `sigma2_t` times mean-one lognormal noise.
    pub rv: Vec<f64>,
}

/// Simulates a world. The close return of day `t` is a uniformly placed
/// point of the interval, `h_t (eps_t + u_t eta_t)` with `u_t ~ U(-1, 1)`;
/// the proxy is `sigma2_t exp(s z_t - s^2/2)` with `s` chosen so the noise
/// factor has standard deviation `noise_sd`.
pub fn synthetic_world(params: &ModelParams, length: usize, noise_sd: f64, seed: u64) -> Result<SyntheticWorld> {
    let out = simulate(&SimConfig::new(params.clone(), length, seed))?;
    let mut rng = aux_rng(seed);
    let s = (1.0 + noise_sd * noise_sd).ln().sqrt();
    let mut close_returns = Vec::with_capacity(length);
    let mut rv = Vec::with_capacity(length);
    let sigma2: Vec<f64> = out.h_path.iter().map(|&h| intgarch_volatility(params, h)).collect();
    for t in 0..length {
        let u: f64 = rng.random_range(-1.0..1.0);
        close_returns.push(out.h_path[t] * (out.eps[t] + u * out.eta[t]));
        let z: f64 = StandardNormal.sample(&mut rng);
        rv.push(sigma2[t] * (s * z - 0.5 * s * s).exp());
    }
    Ok(SyntheticWorld {
        params: params.clone(),
        series: out.series,
        close_returns,
        sigma2,
        rv,
    })
}

/// Out-of-sample comparison of Int-GARCH and GARCH(1,1) on one world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub train_len: usize,
    pub refit_every: usize,
    pub orders: ModelOrders,
}

/// Runs both models on `(series, close returns)` and scores them against
/// `rv`. Reports cover horizon 0 (fitted values on the training sample)
/// and each requested horizon over the test window. Indices stand in for
/// dates when the series is undated.
pub fn backtest(
    asset: &str,
    series: &IntervalSeries,
    close_returns: &[f64],
    rv: &[f64],
    horizons: &[usize],
    cfg: &BacktestConfig,
    fit_opts: &FitOptions,
    loss: &LossOptions,
) -> Result<Vec<EvalReport>> {
    let n = series.len();
    if close_returns.len() != n || rv.len() != n {
        return Err(Error::Misaligned(format!(
            "{n} intervals, {} close returns, {} proxy values",
            close_returns.len(),
            rv.len()
        )));
    }
    let dates: Vec<NaiveDate> = match series.dates() {
        Some(d) => d.to_vec(),
        None => {
            let base = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date");
            (0..n).map(|i| base + chrono::Days::new(i as u64)).collect()
        }
    };
    let train = cfg.train_len;
    if train < 2 || train >= n {
        return Err(Error::InsufficientData(format!("training length {train} with {n} observations")));
    }

    // In-sample fitted values.
    let ig = fit_mle(&series.slice(0..train), cfg.orders, fit_opts)?;
    let ig_fit: Vec<f64> = ig.h_path.iter().map(|&h| intgarch_volatility(&ig.params, h)).collect();
    let gf = fit_garch11(&close_returns[..train])?;
    let mut ig_blocks = BTreeMap::new();
    let mut g_blocks = BTreeMap::new();
    ig_blocks.insert(0, ForecastBlock { dates: dates[..train].to_vec(), sigma2: ig_fit });
    g_blocks.insert(0, ForecastBlock { dates: dates[..train].to_vec(), sigma2: gf.sigma2.clone() });

    // Origins t = train-1 .. n-2 forecast targets t + l < n.
    let rf = rolling_forecast(series, cfg.orders, fit_opts, horizons, cfg.refit_every, train)?;
    if let Some((o, e)) = rf.failures.first() {
        log::warn!("{asset}: {} Int-GARCH origins skipped, first at {o}: {e}", rf.failures.len());
    }
    let gr = garch_rolling_forecast(close_returns, horizons, cfg.refit_every, train)?;
    let ig_by_origin: BTreeMap<usize, &Vec<f64>> = rf.forecasts.iter().map(|f| (f.origin_index, &f.sigma2_hat)).collect();
    for &l in horizons {
        let mut ib = ForecastBlock { dates: Vec::new(), sigma2: Vec::new() };
        let mut gb = ForecastBlock { dates: Vec::new(), sigma2: Vec::new() };
        for (origin, gfc) in &gr {
            let target = origin + l;
            if target >= n {
                continue;
            }
            // Origins skipped by the Int-GARCH refit are dropped for both
            // models so the comparison stays aligned.
            let Some(ifc) = ig_by_origin.get(origin) else { continue };
            ib.dates.push(dates[target]);
            ib.sigma2.push(ifc[l - 1]);
            gb.dates.push(dates[target]);
            gb.sigma2.push(gfc[l - 1]);
        }
        ig_blocks.insert(l, ib);
        g_blocks.insert(l, gb);
    }
    let models = [
        ModelForecasts { name: "Int-GARCH".into(), blocks: ig_blocks },
        ModelForecasts { name: "GARCH".into(), blocks: g_blocks },
    ];
    compare(asset, &models, &dates, rv, loss)
}

// --- simulation study ---

/// One parameter design of the simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Design {
    pub name: String,
    pub params: ModelParams,
}

/// The four designs: (1,1,1) Models I and II and the Int-ARCH (1,1,0)
/// Models III and IV.
pub fn paper_designs() -> Vec<Table1Design> {
    let d = |name: &str, k, mu, a, b, g: Option<f64>| Table1Design {
        name: name.into(),
        params: ModelParams::new(k, mu, vec![a], vec![b], g.into_iter().collect()).expect("valid design"),
    };
    vec![
        d("I", 1.8147, 0.0906, 0.0318, 0.374, Some(0.1265)),
        d("II", 1.2134, 0.071, 0.1833, 0.2334, Some(0.1732)),
        d("III", 1.5139, 0.074, 0.037, 0.3436, None),
        d("IV", 1.3632, 0.0584, 0.1927, 0.322, None),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub reps: usize,
    pub length: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub sim_init: InitMode,
    pub fit: FitOptions,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Table1Config {
    pub fn new(reps: usize, length: usize, seed: u64) -> Self {
        Self {
            reps,
            length,
            seed,
            burn_in: 500,
            sim_init: InitMode::ZeroH,
            fit: FitOptions::default(),
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub model: String,
    pub param: String,
    pub true_value: f64,
    pub mean_estimate: f64,
    pub mae: f64,
    pub empirical_se: f64,
    /// Mean of the per-replication asymptotic SEs over replications where
    /// the parameter was interior; `None` for `k`.
    pub mean_asymptotic_se: Option<f64>,
    /// Replications that produced an estimate.
    pub n_ok: usize,
}

/// Per-replication estimates of one design: `[k, theta..]` and SEs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub estimates: Vec<f64>,
    pub std_errors: Vec<Option<f64>>,
    pub converged: bool,
}

pub fn replication_seed(seed: u64, design: usize, rep: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((design as u64) << 32)
        .wrapping_add(rep as u64)
}

/// Simulates and fits `cfg.reps` paths of `design`. Failed fits yield
/// `None`. Results are in replication order regardless of threading.
pub fn run_replications(design: &ModelParams, design_index: usize, cfg: &Table1Config) -> Vec<Option<Replication>> {
    let one = |rep: usize| -> Option<Replication> {
        let seed = replication_seed(cfg.seed, design_index, rep);
        let sim = SimConfig::new(design.clone(), cfg.length, seed).burn_in(cfg.burn_in).init_mode(cfg.sim_init);
        let out = simulate(&sim).ok()?;
        let fit = fit_mle(&out.series, design.orders, &cfg.fit).ok()?;
        let mut estimates = vec![fit.params.k];
        estimates.extend(fit.params.theta());
        let mut std_errors = vec![None];
        std_errors.extend(fit.std_errors.iter().copied());
        Some(Replication {
            estimates,
            std_errors,
            converged: fit.converged,
        })
    };
    let run = || (0..cfg.reps).into_par_iter().map(one).collect::<Vec<_>>();
    match cfg.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Summary rows for one design from its replications.
pub fn summarize(design: &Table1Design, reps: &[Option<Replication>]) -> Vec<Table1Row> {
    let p = &design.params;
    let mut names = vec!["k".to_string()];
    names.extend(crate::process::theta_names(&p.orders));
    let mut truth = vec![p.k];
    truth.extend(p.theta());
    let ok: Vec<&Replication> = reps.iter().flatten().filter(|r| r.converged).collect();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let est: Vec<f64> = ok.iter().map(|r| r.estimates[j]).collect();
            let n = est.len() as f64;
            let mean = est.iter().sum::<f64>() / n;
            let mae = est.iter().map(|e| (e - truth[j]).abs()).sum::<f64>() / n;
            let var = est.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
            let ses: Vec<f64> = ok.iter().filter_map(|r| r.std_errors[j]).collect();
            Table1Row {
                model: design.name.clone(),
                param: name.clone(),
                true_value: truth[j],
                mean_estimate: mean,
                mae,
                empirical_se: var.sqrt(),
                mean_asymptotic_se: (!ses.is_empty()).then(|| ses.iter().sum::<f64>() / ses.len() as f64),
                n_ok: est.len(),
            }
        })
        .collect()
}

/// Mean estimate, MAE, empirical SE and mean asymptotic SE for every
/// parameter of every design.
pub fn reproduce_table1(designs: &[Table1Design], cfg: &Table1Config) -> Result<Vec<Table1Row>> {
    if cfg.reps < 2 {
        return Err(Error::InvalidParameters("reps must be >= 2".into()));
    }
    let mut rows = Vec::new();
    for (i, d) in designs.iter().enumerate() {
        let reps = run_replications(&d.params, i, cfg);
        let failed = reps.iter().filter(|r| !matches!(r, Some(x) if x.converged)).count();
        if failed > 0 {
            log::warn!("model {}: {failed} of {} replications failed to fit", d.name, cfg.reps);
        }
        rows.extend(summarize(d, &reps));
    }
    Ok(rows)
}

pub fn table1_to_text(rows: &[Table1Row]) -> String {
    let mut s = format!(
        "{:<6} {:<7} {:>9} {:>9} {:>9} {:>9} {:>9} {:>5}\n",
        "model", "param", "true", "mean", "MAE", "emp.SE", "asy.SE", "n"
    );
    for r in rows {
        let asy = r.mean_asymptotic_se.map_or("-".to_string(), |v| format!("{v:.4}"));
        s.push_str(&format!(
            "{:<6} {:<7} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>5}\n",
            r.model, r.param, r.true_value, r.mean_estimate, r.mae, r.empirical_se, asy, r.n_ok
        ));
    }
    s
}

pub fn table1_to_csv(rows: &[Table1Row]) -> String {
    let mut s = String::from("model,param,true,mean_estimate,mae,empirical_se,mean_asymptotic_se,n_ok\n");
    for r in rows {
        let asy = r.mean_asymptotic_se.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{asy},{}\n",
            r.model, r.param, r.true_value, r.mean_estimate, r.mae, r.empirical_se, r.n_ok
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mz_examples() {
        let s = [1.0, 2.0, 3.5, 4.0];
        let rv: Vec<f64> = s.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((mz_r2(&rv, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(mz_r2(&rv, &[1.0; 4]), Err(Error::R2Undefined(_))));
        assert!(mz_r2(&rv[..2], &s[..2]).is_err());
    }

    #[test]
    fn loss_examples() {
        let o = LossOptions::default();
        assert_eq!(qlike(&[1.0], &[1.0], &o).unwrap(), 1.0);
        assert!((qlike(&[0.0], &[std::f64::consts::E], &o).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(qlike(&[1.0, 2.0], &[1.0, 1.0], &o).unwrap(), 2.5);
        assert_eq!(hmse(&[2.0, 3.0], &[4.0, 9.0], &o).unwrap(), 0.0);
        assert_eq!(hmse(&[2.0f64.sqrt()], &[1.0], &o).unwrap(), 1.0000000000000004);
        let v = [0.5f64.sqrt(), 1.5f64.sqrt()];
        assert!(hmse(&v, &[1.0, 1.0], &o).unwrap().abs() < 1e-15);
        let sq = LossOptions { hmse_squared: true, ..o };
        assert!((hmse(&v, &[1.0, 1.0], &sq).unwrap() - 0.25).abs() < 1e-15);
        assert!(qlike(&[1.0], &[0.0], &o).is_err());
        assert!(hmse(&[1.0], &[-1.0], &o).is_err());
    }

    #[test]
    fn qlike_minimized_at_mean_square() {
        let v = [0.3, 1.2, 0.7, 2.0, 0.1];
        let target = v.iter().map(|x| x * x).sum::<f64>() / 5.0;
        let o = LossOptions::default();
        let at = |s: f64| qlike(&v, &[s; 5], &o).unwrap();
        let best = (1..2000).map(|i| i as f64 * 0.001).fold((0.0, f64::INFINITY), |b, s| if at(s) < b.1 { (s, at(s)) } else { b });
        assert!((best.0 - target).abs() < 0.0015);
    }

    #[test]
    fn garch_gradient_matches_differences() {
        let r = simulate_garch11(&Garch11Params { omega: 0.05, a: 0.1, b: 0.85 }, 400, 100, 3).unwrap();
        let lik = Garch11Lik { r: &r, s0: 1.0 };
        let x = [0.07, 0.12, 0.8];
        let (_, g, h) = lik.eval(&x, true).unwrap();
        for i in 0..3 {
            let e = 1e-6;
            let mut up = x;
            let mut dn = x;
            up[i] += e;
            dn[i] -= e;
            let (fu, gu, _) = lik.eval(&up, true).unwrap();
            let (fd, gd, _) = lik.eval(&dn, true).unwrap();
            assert!(((fu - fd) / (2.0 * e) - g[i]).abs() < 1e-4 * (1.0 + g[i].abs()));
            for j in 0..3 {
                assert!(((gu[j] - gd[j]) / (2.0 * e) - h[j][i]).abs() < 1e-3 * (1.0 + h[j][i].abs()));
            }
        }
    }

    #[test]
    fn garch_fit_recovers_parameters() {
        let p = Garch11Params { omega: 0.05, a: 0.1, b: 0.85 };
        let r = simulate_garch11(&p, 5000, 500, 11).unwrap();
        let fit = fit_garch11(&r).unwrap();
        assert!(fit.converged);
        assert!(fit.gradient.iter().all(|g| g.abs() < 1e-6));
        assert!((fit.params.a - 0.1).abs() < 0.03, "{:?}", fit.params);
        assert!((fit.params.b - 0.85).abs() < 0.05, "{:?}", fit.params);
    }

    #[test]
    fn garch_fit_converges_past_unit_persistence() {
        // Short heavy-tailed samples often put the QMLE at a + b > 1.
        let w = synthetic_world(&paper_designs()[0].params, 400, 0.2, 3).unwrap();
        let f = fit_garch11(&w.close_returns[..300]).unwrap();
        assert!(f.converged);
        assert!(f.params.persistence() > 1.0);
        assert!(f.params.long_run_variance().is_none());
        assert!(f.gradient.iter().all(|g| g.abs() < 1e-6));
    }

    #[test]
    fn garch_on_iid_noise() {
        let mut rng = aux_rng(5);
        let r: Vec<f64> = (0..3000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fit = fit_garch11(&r).unwrap();
        let lr = fit.params.omega / (1.0 - fit.params.b);
        assert!(fit.params.a < 0.03, "{:?}", fit.params);
        assert!((lr - 1.0).abs() < 0.1, "{:?}", fit.params);
        assert!(fit_garch11(&r[..49]).is_err());
    }

    #[test]
    fn identical_models_have_no_winner() {
        let d: Vec<NaiveDate> = (1..=5).map(|i| NaiveDate::from_ymd_opt(2011, 1, i).unwrap()).collect();
        let b = ForecastBlock { dates: d.clone(), sigma2: vec![1.0, 2.0, 1.5, 0.7, 1.1] };
        let m = |n: &str| ModelForecasts { name: n.into(), blocks: BTreeMap::from([(1, b.clone())]) };
        let rv = [1.2, 1.9, 1.4, 0.8, 1.0];
        let rep = compare("X", &[m("A"), m("B")], &d, &rv, &LossOptions::default()).unwrap();
        assert_eq!(rep.len(), 2);
        assert_eq!((rep[0].r2, rep[0].qlike, rep[0].hmse), (rep[1].r2, rep[1].qlike, rep[1].hmse));
        assert!(rep.iter().all(|r| !r.best_r2 && !r.best_qlike && !r.best_hmse));
    }

    #[test]
    fn compare_is_label_symmetric_and_checks_dates() {
        let d: Vec<NaiveDate> = (1..=5).map(|i| NaiveDate::from_ymd_opt(2011, 1, i).unwrap()).collect();
        let a = ModelForecasts {
            name: "A".into(),
            blocks: BTreeMap::from([(1, ForecastBlock { dates: d.clone(), sigma2: vec![1.0, 2.0, 1.5, 0.7, 1.1] })]),
        };
        let b = ModelForecasts {
            name: "B".into(),
            blocks: BTreeMap::from([(1, ForecastBlock { dates: d.clone(), sigma2: vec![1.1, 1.0, 1.0, 1.2, 0.9] })]),
        };
        let rv = [1.2, 1.9, 1.4, 0.8, 1.0];
        let o = LossOptions::default();
        let ab = compare("X", &[a.clone(), b.clone()], &d, &rv, &o).unwrap();
        let ba = compare("X", &[b.clone(), a.clone()], &d, &rv, &o).unwrap();
        assert_eq!(ab[0], ba[1]);
        assert_eq!(ab[1], ba[0]);
        assert!(ab[0].best_r2 && !ab[1].best_r2);

        let mut shifted = b;
        shifted.blocks.get_mut(&1).unwrap().dates[2] = NaiveDate::from_ymd_opt(2011, 2, 1).unwrap();
        let e = compare("X", &[a, shifted], &d, &rv, &o).unwrap_err().to_string();
        assert!(e.contains("position 2"), "{e}");
    }

    #[test]
    fn table1_smoke() {
        let designs = paper_designs();
        let mut cfg = Table1Config::new(2, 300, 1);
        cfg.jobs = Some(2);
        let rows = reproduce_table1(&designs[3..], &cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.mean_estimate.is_finite() && r.n_ok <= 2));
        let again = reproduce_table1(&designs[3..], &Table1Config { jobs: Some(1), ..cfg }).unwrap();
        assert_eq!(rows, again);
        assert!(reproduce_table1(&designs, &Table1Config::new(1, 300, 1)).is_err());
    }
}
