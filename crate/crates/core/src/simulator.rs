//! Seeded simulation of Int-GARCH(p, q, w) paths.
//!
//! Randomness comes from ChaCha20 keyed by the configured seed. Stream 0
//! feeds the normal innovations `eps_t`, stream 1 the Gamma innovations
//! `eta_t`; stream 2 is reserved for auxiliary draws made by callers (see
//! [`aux_rng`]). Output is bit-identical for identical configurations.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalSeries};
use crate::process::{step_h, ModelParams, ProcessState};
use crate::scalar::Scalar;

/// Pre-sample scale values `h_0, .., h_{-(m-1)}`.
///
/// In both modes the pre-sample intervals are set to `E(r_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `h = 0` before the sample.
    ZeroH,
    /// `h = E(h_t)` before the sample.
    #[default]
    MeanH,
}

impl std::str::FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "zero_h" | "zeroh" => Ok(Self::ZeroH),
            "mean" | "mean_h" | "meanh" => Ok(Self::MeanH),
            _ => Err(Error::InvalidParameters(format!("unknown init mode {s:?}"))),
        }
    }
}

/// Pre-sample `(h, r)` for `mode`. `None` when `E(h_t)` does not exist.
pub fn presample<F: Scalar>(params: &ModelParams<F>, mode: InitMode) -> Option<(F, Interval<F>)> {
    let mean_h = params.mean_h()?;
    let r = Interval::new(F::zero(), params.k * mean_h).ok()?;
    let h = match mode {
        InitMode::ZeroH => F::zero(),
        InitMode::MeanH => mean_h,
    };
    Some((h, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<F = f64> {
    pub params: ModelParams<F>,
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub init_mode: InitMode,
}

impl<F: Scalar> SimConfig<F> {
    /// Defaults used by the Monte Carlo oracles: burn-in 500, `h` started
    /// at zero.
    pub fn new(params: ModelParams<F>, length: usize, seed: u64) -> Self {
        Self {
            params,
            length,
            burn_in: 500,
            seed,
            init_mode: InitMode::ZeroH,
        }
    }

    pub fn burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn init_mode(mut self, mode: InitMode) -> Self {
        self.init_mode = mode;
        self
    }
}

/// A simulated path together with the innovations that produced it.
#[derive(Debug, Clone)]
pub struct SimOutput<F = f64> {
    pub series: IntervalSeries<F>,
    pub h_path: Vec<F>,
    pub eps: Vec<F>,
    pub eta: Vec<F>,
}

/// Generator for draws outside the model innovations, independent of the
/// `eps`/`eta` streams for the same seed.
pub fn aux_rng(seed: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

pub fn simulate<F>(config: &SimConfig<F>) -> Result<SimOutput<F>>
where
    F: Scalar,
    StandardNormal: Distribution<F>,
    Exp1: Distribution<F>,
    Open01: Distribution<F>,
{
    let params = &config.params;
    params.validate()?;
    if config.length == 0 {
        return Err(Error::InvalidParameters("simulation length must be >= 1".into()));
    }
    let m = params.orders.max_lag();
    // Without a finite stationary mean there is no E(r_t); start from a
    // point interval at zero instead.
    let (h0, r0) = match presample(params, config.init_mode) {
        Some(v) => v,
        None if config.init_mode == InitMode::ZeroH => (F::zero(), Interval::point(F::zero())),
        None => {
            return Err(Error::InvalidParameters(
                "MeanH initialization requires a mean-stationary model".into(),
            ))
        }
    };
    let mut state = ProcessState::constant(m, h0, r0);

    let mut eps_rng = ChaCha20Rng::seed_from_u64(config.seed);
    eps_rng.set_stream(0);
    let mut eta_rng = ChaCha20Rng::seed_from_u64(config.seed);
    eta_rng.set_stream(1);
    let gamma = Gamma::new(params.k, F::one())
        .map_err(|e| Error::InvalidParameters(format!("gamma shape {}: {e}", params.k)))?;

    let total = config.burn_in + config.length;
    let mut items = Vec::with_capacity(config.length);
    let mut h_path = Vec::with_capacity(config.length);
    let mut eps_out = Vec::with_capacity(config.length);
    let mut eta_out = Vec::with_capacity(config.length);
    for t in 0..total {
        let h = step_h(params, &state);
        if !h.is_finite() {
            return Err(Error::Overflow);
        }
        let eps: F = StandardNormal.sample(&mut eps_rng);
        let eta: F = gamma.sample(&mut eta_rng);
        let r = Interval::new(h * eps, h * eta)?;
        state.push(h, r);
        if t >= config.burn_in {
            items.push(r);
            h_path.push(h);
            eps_out.push(eps);
            eta_out.push(eta);
        }
    }
    Ok(SimOutput {
        series: IntervalSeries::new(items),
        h_path,
        eps: eps_out,
        eta: eta_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::theoretical_moments;

    fn model1() -> ModelParams {
        ModelParams::<f64>::garch111(1.8147, 0.0906, 0.0318, 0.374, 0.1265).unwrap()
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let cfg = SimConfig::new(model1(), 300, 7);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.h_path, b.h_path);
        let c = simulate(&SimConfig::new(model1(), 300, 8)).unwrap();
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn constant_model_has_constant_scale() {
        let p = ModelParams::<f64>::garch111(1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let out = simulate(&SimConfig::new(p, 50_000, 3)).unwrap();
        assert!(out.h_path.iter().all(|&h| h == 1.0));
        let r = out.series.radii();
        let m = r.iter().sum::<f64>() / r.len() as f64;
        // sd of the mean = 1/sqrt(n)
        assert!((m - 1.0).abs() < 4.0 / (r.len() as f64).sqrt());
    }

    #[test]
    fn path_respects_model_identities() {
        let p = model1();
        let out = simulate(&SimConfig::new(p.clone(), 2000, 11)).unwrap();
        assert!(out.h_path.iter().all(|&h| h >= p.mu));
        for ((x, &h), (&e, &n)) in out.series.items().iter().zip(&out.h_path).zip(out.eps.iter().zip(&out.eta)) {
            assert_eq!(x.center(), h * e);
            assert_eq!(x.radius(), h * n);
            assert!(x.radius() > 0.0);
        }
    }

    #[test]
    fn zero_init_first_step() {
        // h_1 = mu + beta k E(h) with h_0 = 0 and r_0 = E(r_t)
        let p = model1();
        let out = simulate(&SimConfig::new(p.clone(), 1, 1).burn_in(0)).unwrap();
        let eh = theoretical_moments(&p).unwrap().mean_h;
        let want = p.mu + p.beta[0] * p.k * eh;
        assert!((out.h_path[0] - want).abs() < 1e-15);
    }

    #[test]
    fn mean_init_requires_stationarity() {
        let p = ModelParams::<f64>::garch111(1.0, 0.1, 0.0, 0.0, 1.0).unwrap();
        assert!(simulate(&SimConfig::new(p.clone(), 10, 1).init_mode(InitMode::MeanH)).is_err());
        assert!(simulate(&SimConfig::new(p, 10, 1)).is_ok());
    }

    #[test]
    fn zero_length_rejected() {
        assert!(simulate(&SimConfig::new(model1(), 0, 1)).is_err());
    }

    #[test]
    fn single_precision_path() {
        let p = ModelParams::<f32>::garch111(1.5, 0.1, 0.05, 0.3, 0.1).unwrap();
        let out = simulate(&SimConfig::new(p, 100, 5)).unwrap();
        assert_eq!(out.series.len(), 100);
    }
}
