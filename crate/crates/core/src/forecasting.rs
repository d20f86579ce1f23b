//! Multi-step forecasts of the scale `h` and of the volatility
//! `sigma^2 = (1 + k/3) h^2`.
//!
//! Step one uses the observed lags exactly. Later steps replace each
//! unobserved `|lambda|`, `delta` and `h` by its conditional expectation
//! `sqrt(2/pi) h_hat`, `k h_hat` and `h_hat`. For orders (1,1,1) this is the
//! scalar recursion `h_hat(l) = mu + c1 h_hat(l - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate_k, fit_mle, fit_mle_from, loglik_eval, FitOptions};
use crate::intervals::IntervalSeries;
use crate::process::{intgarch_volatility, ModelOrders, ModelParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult<F = f64> {
    pub horizon: usize,
    /// `h_hat[j]` is the `(j + 1)`-step forecast.
    pub h_hat: Vec<F>,
    pub sigma2_hat: Vec<F>,
    /// Index of the last observation used (the forecast origin `t`).
    pub origin_index: usize,
}

/// Forecasts from the end of `history`, whose scales are `h_path`
/// (normally the fitted in-sample path).
pub fn forecast<F: Scalar>(
    params: &ModelParams<F>,
    history: &IntervalSeries<F>,
    h_path: &[F],
    horizon: usize,
) -> Result<ForecastResult<F>> {
    if history.is_empty() {
        return Err(Error::EmptyInput);
    }
    forecast_at(params, history, h_path, history.len() - 1, horizon)
}

/// Forecasts from origin `t = origin`, using observations `0..=origin`.
pub fn forecast_at<F: Scalar>(
    params: &ModelParams<F>,
    history: &IntervalSeries<F>,
    h_path: &[F],
    origin: usize,
    horizon: usize,
) -> Result<ForecastResult<F>> {
    if horizon < 1 {
        return Err(Error::InvalidParameters("forecast horizon must be >= 1".into()));
    }
    if h_path.len() != history.len() {
        return Err(Error::Misaligned(format!(
            "h path has {} values for {} observations",
            h_path.len(),
            history.len()
        )));
    }
    let m = params.orders.max_lag();
    if origin >= history.len() || origin + 1 < m {
        return Err(Error::InsufficientData(format!(
            "origin {origin} needs {m} observed lags within {} observations",
            history.len()
        )));
    }
    let items = history.items();
    let s = F::mean_abs_normal();
    let mut h_hat: Vec<F> = Vec::with_capacity(horizon);
    for l in 1..=horizon {
        let mut h = params.mu;
        for i in 1..=m {
            // Lag i of step l sits at time origin + l - i.
            let (abs_c, rad, lag_h) = if i >= l {
                let t = origin + l - i;
                (items[t].center().abs(), items[t].radius(), h_path[t])
            } else {
                let f = h_hat[l - i - 1];
                (s * f, params.k * f, f)
            };
            if let Some(&a) = params.alpha.get(i - 1) {
                h = h + a * abs_c;
            }
            if let Some(&b) = params.beta.get(i - 1) {
                h = h + b * rad;
            }
            if let Some(&g) = params.gamma.get(i - 1) {
                h = h + g * lag_h;
            }
        }
        h_hat.push(h);
    }
    let sigma2_hat = h_hat.iter().map(|&h| intgarch_volatility(params, h)).collect();
    Ok(ForecastResult {
        horizon,
        h_hat,
        sigma2_hat,
        origin_index: origin,
    })
}

/// Forecasts emitted by [`rolling_forecast`], plus the origins that were
/// skipped because the refit failed.
#[derive(Debug, Clone)]
pub struct RollingForecast<F = f64> {
    pub forecasts: Vec<ForecastResult<F>>,
    /// `(origin, reason)` for each skipped origin.
    pub failures: Vec<(usize, String)>,
    /// Parameters in force at each emitted forecast, parallel to `forecasts`.
    pub params: Vec<ModelParams<F>>,
}

/// Walk-forward forecasting over origins `train_len - 1 ..= series.len() - 1`.
///
/// The model is fit on the expanding prefix `0..=t` at the first origin and
/// then every `refit_every` origins; each refit starts from the previous
/// estimate. Between refits the scale path is filtered forward with the
/// current parameters. Each origin emits one forecast with horizon
/// `max(horizons)`; step `j` of it is the `j`-step forecast. A failed refit
/// skips (and records) that origin and is retried at the next one.
pub fn rolling_forecast<F: Scalar>(
    series: &IntervalSeries<F>,
    orders: ModelOrders,
    options: &FitOptions<F>,
    horizons: &[usize],
    refit_every: usize,
    train_len: usize,
) -> Result<RollingForecast<F>> {
    let max_h = *horizons
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParameters("no forecast horizons".into()))?;
    if horizons.contains(&0) {
        return Err(Error::InvalidParameters("forecast horizon must be >= 1".into()));
    }
    if refit_every == 0 {
        return Err(Error::InvalidParameters("refit_every must be >= 1".into()));
    }
    if train_len == 0 || train_len > series.len() {
        return Err(Error::InsufficientData(format!(
            "training length {train_len} with {} observations",
            series.len()
        )));
    }

    let mut out = RollingForecast {
        forecasts: Vec::new(),
        failures: Vec::new(),
        params: Vec::new(),
    };
    let mut current: Option<(ModelParams<F>, Vec<F>)> = None;
    let mut since_refit = 0usize;
    for origin in train_len - 1..series.len() {
        let due = current.is_none() || since_refit >= refit_every;
        if due {
            let prefix = series.slice(0..origin + 1);
            let warm = current.as_ref().map(|(p, _)| p.clone());
            match refit(&prefix, orders, options, warm.as_ref()).and_then(|p| {
                // The whole-series path agrees with the prefix path on 0..=t
                // and extends it for the origins up to the next refit.
                let (_, h) = loglik_eval(&p, series, options.init_mode)?;
                Ok((p, h))
            }) {
                Ok(v) => {
                    current = Some(v);
                    since_refit = 0;
                }
                Err(e) => {
                    out.failures.push((origin, e.to_string()));
                    current = None;
                    continue;
                }
            }
        }
        let (p, h) = current.as_ref().expect("set above");
        match forecast_at(p, series, h, origin, max_h) {
            Ok(f) => {
                out.forecasts.push(f);
                out.params.push(p.clone());
            }
            Err(e) => out.failures.push((origin, e.to_string())),
        }
        since_refit += 1;
    }
    Ok(out)
}

fn refit<F: Scalar>(
    prefix: &IntervalSeries<F>,
    orders: ModelOrders,
    options: &FitOptions<F>,
    warm: Option<&ModelParams<F>>,
) -> Result<ModelParams<F>> {
    if let Some(prev) = warm {
        let k = estimate_k(prefix)?;
        let mut start = prev.clone();
        start.k = k;
        if start.mean_h().is_some() {
            if let Ok(fit) = fit_mle_from(prefix, &start, options) {
                if fit.converged {
                    return Ok(fit.params);
                }
            }
        }
    }
    let fit = fit_mle(prefix, orders, options)?;
    if !fit.converged {
        return Err(Error::NotConverged(fit.iterations));
    }
    Ok(fit.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::Interval;
    use crate::simulator::{simulate, SimConfig};

    fn model1() -> ModelParams {
        ModelParams::<f64>::garch111(1.8147, 0.0906, 0.0318, 0.374, 0.1265).unwrap()
    }

    #[test]
    fn hand_iterated_example() {
        let p = model1();
        let hist = IntervalSeries::new(vec![Interval::new(0.2, 1.0).unwrap()]);
        let f = forecast(&p, &hist, &[0.5], 2).unwrap();
        assert!((f.h_hat[0] - 0.53421).abs() < 1e-12);
        let c1 = 0.0318 * (2.0 / std::f64::consts::PI).sqrt() + 0.374 * 1.8147 + 0.1265;
        assert!((f.h_hat[1] - (0.0906 + c1 * 0.53421)).abs() < 1e-12);
        assert!((f.h_hat[1] - 0.534299082315003).abs() < 1e-12);
        let k3 = 1.0 + 1.8147 / 3.0;
        for (s, h) in f.sigma2_hat.iter().zip(&f.h_hat) {
            assert_eq!(*s, k3 * h * h);
        }
    }

    #[test]
    fn constant_model_forecasts_mu() {
        let p = ModelParams::<f64>::garch111(1.2, 0.3, 0.0, 0.0, 0.0).unwrap();
        let hist = IntervalSeries::new(vec![Interval::new(-1.0, 4.0).unwrap()]);
        let f = forecast(&p, &hist, &[2.0], 10).unwrap();
        assert!(f.h_hat.iter().all(|&h| h == 0.3));
    }

    #[test]
    fn converges_to_mean_and_step_one_is_horizon_free() {
        let p = model1();
        let out = simulate(&SimConfig::new(p.clone(), 200, 4)).unwrap();
        let f1 = forecast(&p, &out.series, &out.h_path, 1).unwrap();
        let f = forecast(&p, &out.series, &out.h_path, 300).unwrap();
        assert_eq!(f1.h_hat[0], f.h_hat[0]);
        let eh = p.mean_h().unwrap();
        assert!((f.h_hat[299] - eh).abs() < 1e-12);
        let (lo, hi) = (f.h_hat[0].min(eh), f.h_hat[0].max(eh));
        assert!(f.h_hat.iter().all(|&h| h >= lo - 1e-15 && h <= hi + 1e-15));
    }

    #[test]
    fn one_step_is_exact_under_true_model() {
        let p = model1();
        let out = simulate(&SimConfig::new(p.clone(), 400, 9)).unwrap();
        for t in 0..399 {
            let f = forecast_at(&p, &out.series, &out.h_path, t, 1).unwrap();
            assert!((f.h_hat[0] - out.h_path[t + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn general_orders_substitute_expectations() {
        // (2,1,2): step 2 mixes an observed lag-2 term with forecast lag-1.
        let p = ModelParams::<f64>::new(1.5, 0.1, vec![0.05, 0.04], vec![0.2], vec![0.1, 0.05]).unwrap();
        let hist = IntervalSeries::new(vec![Interval::new(0.3, 0.8).unwrap(), Interval::new(-0.5, 1.1).unwrap()]);
        let hp = [0.6, 0.7];
        let f = forecast(&p, &hist, &hp, 2).unwrap();
        let h1 = 0.1 + 0.05 * 0.5 + 0.04 * 0.3 + 0.2 * 1.1 + 0.1 * 0.7 + 0.05 * 0.6;
        let s = (2.0 / std::f64::consts::PI).sqrt();
        let h2 = 0.1 + 0.05 * s * h1 + 0.04 * 0.5 + 0.2 * 1.5 * h1 + 0.1 * h1 + 0.05 * 0.7;
        assert!((f.h_hat[0] - h1).abs() < 1e-14);
        assert!((f.h_hat[1] - h2).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let p = model1();
        let hist = IntervalSeries::new(vec![Interval::new(0.2, 1.0).unwrap()]);
        assert!(forecast(&p, &hist, &[0.5], 0).is_err());
        let p2 = ModelParams::<f64>::new(1.5, 0.1, vec![0.05, 0.04], vec![0.2], vec![0.1]).unwrap();
        assert!(matches!(forecast(&p2, &hist, &[0.5], 1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn rolling_without_refit_matches_manual() {
        let p = model1();
        let out = simulate(&SimConfig::new(p, 700, 21)).unwrap();
        let n = out.series.len();
        let r = rolling_forecast(&out.series, ModelOrders::new(1, 1, 1).unwrap(), &FitOptions::default(), &[1, 2, 5], n, 600).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.forecasts.len(), 101);
        let fit = fit_mle(&out.series.slice(0..600), ModelOrders::new(1, 1, 1).unwrap(), &FitOptions::default()).unwrap();
        let (_, h) = loglik_eval(&fit.params, &out.series, fit.init_mode).unwrap();
        for f in &r.forecasts {
            let g = forecast_at(&fit.params, &out.series, &h, f.origin_index, 5).unwrap();
            assert_eq!(f, &g);
        }
    }
}
