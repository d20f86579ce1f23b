//! The Int-GARCH(p, q, w) recursion and its closed-form moment theory.
//!
//! The conditional scale evolves as
//!
//! ```text
//! h_t = mu + sum_i alpha_i |lambda_{t-i}| + sum_i beta_i delta_{t-i} + sum_i gamma_i h_{t-i}
//! ```
//!
//! and the observed interval is `r_t = h_t [eps_t - eta_t, eps_t + eta_t]` with
//! `eps_t ~ N(0, 1)` and `eta_t ~ Gamma(k, 1)` independent. For the (1,1,1)
//! model `h_t = mu + x_t h_{t-1}` with the i.i.d. multiplier
//! `x_t = alpha |eps| + beta eta + gamma`; the second-moment results below are
//! expressed through `c1 = E x_t` and `c2 = E x_t^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::Interval;
use crate::scalar::{sum, Scalar};

/// Lag orders `(p, q, w)` of the center, radius and scale terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelOrders {
    pub p: usize,
    pub q: usize,
    pub w: usize,
}

impl ModelOrders {
    pub fn new(p: usize, q: usize, w: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidParameters(format!(
                "orders require p >= 1 and q >= 1, got ({p},{q},{w})"
            )));
        }
        Ok(Self { p, q, w })
    }

    /// Longest lag the recursion reaches back, `max(p, q, w)`.
    pub fn max_lag(&self) -> usize {
        self.p.max(self.q).max(self.w)
    }

    /// Number of variance parameters `1 + p + q + w`.
    pub fn n_theta(&self) -> usize {
        1 + self.p + self.q + self.w
    }

    pub fn is_111(&self) -> bool {
        self.p == 1 && self.q == 1 && self.w == 1
    }
}

impl std::fmt::Display for ModelOrders {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.q, self.w)
    }
}

impl std::str::FromStr for ModelOrders {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidParameters(format!("cannot parse orders {s:?}, expected p,q,w"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<usize> = parts
            .iter()
            .map(|x| x.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Self::new(n[0], n[1], n[2])
    }
}

/// Full parameter set: Gamma shape `k` and the variance parameters
/// `theta = (mu, alpha_1..p, beta_1..q, gamma_1..w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F = f64> {
    pub orders: ModelOrders,
    pub k: F,
    pub mu: F,
    pub alpha: Vec<F>,
    pub beta: Vec<F>,
    pub gamma: Vec<F>,
}

/// Names of the `theta` components in vector order.
pub fn theta_names(orders: &ModelOrders) -> Vec<String> {
    let mut v = vec!["mu".to_string()];
    v.extend((1..=orders.p).map(|i| format!("alpha{i}")));
    v.extend((1..=orders.q).map(|i| format!("beta{i}")));
    v.extend((1..=orders.w).map(|i| format!("gamma{i}")));
    v
}

impl<F: Scalar> ModelParams<F> {
    /// Validated constructor; orders are taken from the coefficient lengths.
    pub fn new(k: F, mu: F, alpha: Vec<F>, beta: Vec<F>, gamma: Vec<F>) -> Result<Self> {
        let orders = ModelOrders::new(alpha.len(), beta.len(), gamma.len())?;
        let p = Self {
            orders,
            k,
            mu,
            alpha,
            beta,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor for the (1,1,1) model.
    pub fn garch111(k: F, mu: F, alpha: F, beta: F, gamma: F) -> Result<Self> {
        Self::new(k, mu, vec![alpha], vec![beta], vec![gamma])
    }

    /// Checks positivity and length invariants.
    pub fn validate(&self) -> Result<()> {
        let o = &self.orders;
        if o.p == 0 || o.q == 0 {
            return Err(Error::InvalidParameters("p and q must be at least 1".into()));
        }
        if self.alpha.len() != o.p || self.beta.len() != o.q || self.gamma.len() != o.w {
            return Err(Error::InvalidParameters(format!(
                "coefficient lengths ({},{},{}) do not match orders {}",
                self.alpha.len(),
                self.beta.len(),
                self.gamma.len(),
                o
            )));
        }
        if !(self.k > F::zero()) || !self.k.is_finite() {
            return Err(Error::InvalidParameters(format!("k must be > 0, got {}", self.k)));
        }
        if !(self.mu > F::zero()) || !self.mu.is_finite() {
            return Err(Error::InvalidParameters(format!("mu must be > 0, got {}", self.mu)));
        }
        for (name, v) in theta_names(o).iter().skip(1).zip(self.coefficients()) {
            if !(v >= F::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameters(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn coefficients(&self) -> impl Iterator<Item = F> + '_ {
        self.alpha
            .iter()
            .chain(&self.beta)
            .chain(&self.gamma)
            .copied()
    }

    /// `theta` as a flat vector `(mu, alpha.., beta.., gamma..)`.
    pub fn theta(&self) -> Vec<F> {
        std::iter::once(self.mu).chain(self.coefficients()).collect()
    }

    /// Replaces `theta` from a flat vector laid out as [`Self::theta`].
    pub fn with_theta(&self, theta: &[F]) -> Self {
        let o = self.orders;
        debug_assert_eq!(theta.len(), o.n_theta());
        Self {
            orders: o,
            k: self.k,
            mu: theta[0],
            alpha: theta[1..1 + o.p].to_vec(),
            beta: theta[1 + o.p..1 + o.p + o.q].to_vec(),
            gamma: theta[1 + o.p + o.q..].to_vec(),
        }
    }

    /// Per-theta weights `w_j` such that `sum_i mu_i = sum_j w_j theta_j`
    /// (zero for `mu` itself).
    pub fn mean_weights(&self) -> Vec<F> {
        let o = self.orders;
        let mut w = vec![F::zero()];
        w.extend(std::iter::repeat_n(F::mean_abs_normal(), o.p));
        w.extend(std::iter::repeat_n(self.k, o.q));
        w.extend(std::iter::repeat_n(F::one(), o.w));
        w
    }

    /// `mu_i = alpha_i sqrt(2/pi) + beta_i k + gamma_i` for `i = 1..=m`.
    pub fn lag_means(&self) -> Vec<F> {
        let get = |v: &[F], i: usize| v.get(i).copied().unwrap_or(F::zero());
        (0..self.orders.max_lag())
            .map(|i| {
                get(&self.alpha, i) * F::mean_abs_normal()
                    + get(&self.beta, i) * self.k
                    + get(&self.gamma, i)
            })
            .collect()
    }

    /// Stationary mean of `h_t`, when it exists.
    pub fn mean_h(&self) -> Option<F> {
        let s = sum(self.lag_means());
        (s < F::one()).then(|| self.mu / (F::one() - s))
    }

    /// `c1 = E x_t` for the (1,1,1) multiplier.
    fn c1_111(&self) -> F {
        self.alpha[0] * F::mean_abs_normal() + self.beta[0] * self.k + self.gamma[0]
    }

    /// `c2 = E x_t^2` for the (1,1,1) multiplier.
    fn c2_111(&self) -> F {
        let (a, b, g, k) = (self.alpha[0], self.beta[0], self.gamma[0], self.k);
        let s = F::mean_abs_normal();
        let two = F::lit(2.0);
        a * a
            + b * b * (k + k * k)
            + g * g
            + two * a * b * s * k
            + two * a * g * s
            + two * b * g * k
    }
}

/// Most recent `m` scales and intervals, newest first:
/// `h_history[i] = h_{t-1-i}`, `return_history[i] = r_{t-1-i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessState<F = f64> {
    pub h_history: Vec<F>,
    pub return_history: Vec<Interval<F>>,
}

impl<F: Scalar> ProcessState<F> {
    /// State with every lag set to `h` and `r`.
    pub fn constant(m: usize, h: F, r: Interval<F>) -> Self {
        Self {
            h_history: vec![h; m],
            return_history: vec![r; m],
        }
    }

    /// Shifts in the newest `(h_t, r_t)`, dropping the oldest lag.
    pub fn push(&mut self, h: F, r: Interval<F>) {
        if self.h_history.is_empty() {
            return;
        }
        self.h_history.pop();
        self.h_history.insert(0, h);
        self.return_history.pop();
        self.return_history.insert(0, r);
    }
}

/// One step of the scale recursion.
pub fn step_h<F: Scalar>(params: &ModelParams<F>, state: &ProcessState<F>) -> F {
    let r = &state.return_history;
    let h = &state.h_history;
    let a = sum(params.alpha.iter().zip(r).map(|(&a, x)| a * x.center().abs()));
    let b = sum(params.beta.iter().zip(r).map(|(&b, x)| b * x.radius()));
    let g = sum(params.gamma.iter().zip(h).map(|(&g, &h)| g * h));
    params.mu + a + b + g
}

/// Conditional variance of the interval, `H_t^2 = h_t^2 (1 + k)`.
pub fn conditional_variance<F: Scalar>(params: &ModelParams<F>, h: F) -> F {
    h * h * (F::one() + params.k)
}

/// Int-GARCH volatility: the average conditional variance of the point
/// returns inside the interval, `(1 + k/3) h_t^2`.
pub fn intgarch_volatility<F: Scalar>(params: &ModelParams<F>, h: F) -> F {
    (F::one() + params.k / F::lit(3.0)) * h * h
}

/// Mean stationarity: returns `(sum_i mu_i < 1, sum_i mu_i)`.
pub fn mean_stationarity<F: Scalar>(params: &ModelParams<F>) -> (bool, F) {
    let s = sum(params.lag_means());
    (s < F::one(), s)
}

/// Weak stationarity of the (1,1,1) model: `(c2 < 1, c1, c2)`.
pub fn weak_stationarity<F: Scalar>(params: &ModelParams<F>) -> Result<(bool, F, F)> {
    if !params.orders.is_111() {
        return Err(Error::UnsupportedOrders);
    }
    let c2 = params.c2_111();
    Ok((c2 < F::one(), params.c1_111(), c2))
}

/// Sufficient condition for strict stationarity and ergodicity,
/// `E log x_t <= log E x_t < 0`, i.e. `c1 < 1`.
pub fn strict_stationarity_check<F: Scalar>(params: &ModelParams<F>) -> bool {
    mean_stationarity(params).0
}

/// Raw moment `E x_t^n` of the (1,1,1) multiplier, by multinomial expansion.
pub fn multiplier_moment<F: Scalar>(params: &ModelParams<F>, n: u32) -> Result<F> {
    if !params.orders.is_111() {
        return Err(Error::UnsupportedOrders);
    }
    let n = n as usize;
    let (a, b, g, k) = (params.alpha[0], params.beta[0], params.gamma[0], params.k);
    // E|Z|^i = (i - 1) E|Z|^{i-2};  E eta^j = k (k+1) ... (k+j-1)
    let mut abs_normal = vec![F::one(), F::mean_abs_normal()];
    let mut gamma_raw = vec![F::one()];
    for i in 2..=n {
        abs_normal.push(F::from_usize_lossy(i - 1) * abs_normal[i - 2]);
    }
    for j in 1..=n {
        gamma_raw.push(gamma_raw[j - 1] * (k + F::from_usize_lossy(j - 1)));
    }
    let fact = |m: usize| (1..=m).fold(F::one(), |acc, v| acc * F::from_usize_lossy(v));
    let mut total = F::zero();
    for i in 0..=n {
        for j in 0..=n - i {
            let l = n - i - j;
            let coef = fact(n) / (fact(i) * fact(j) * fact(l));
            total = total
                + coef
                    * a.powi(i as i32)
                    * b.powi(j as i32)
                    * g.powi(l as i32)
                    * abs_normal[i]
                    * gamma_raw[j];
        }
    }
    Ok(total)
}

/// Closed-form unconditional moments.
///
/// Second-moment fields are only available for (1,1,1); for other orders
/// they are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalMoments<F = f64> {
    pub mean_h: F,
    pub mean_h2: Option<F>,
    pub mean_r: Interval<F>,
    pub var_r: Option<F>,
    pub c1: F,
    pub c2: Option<F>,
}

pub fn theoretical_moments<F: Scalar>(params: &ModelParams<F>) -> Result<TheoreticalMoments<F>> {
    let (mean_ok, c1) = mean_stationarity(params);
    if !params.orders.is_111() {
        if !mean_ok {
            return Err(Error::Nonstationary {
                c2: f64::NAN,
            });
        }
        let mean_h = params.mu / (F::one() - c1);
        return Ok(TheoreticalMoments {
            mean_h,
            mean_h2: None,
            mean_r: Interval::new(F::zero(), params.k * mean_h)?,
            var_r: None,
            c1,
            c2: None,
        });
    }
    let (ok, c1, c2) = weak_stationarity(params)?;
    if !ok {
        return Err(Error::Nonstationary {
            c2: c2.to_f64_lossy(),
        });
    }
    let mu = params.mu;
    let k = params.k;
    let one = F::one();
    let mean_h = mu / (one - c1);
    let mean_h2 = mu * mu * (c1 + one) / ((c2 - one) * (c1 - one));
    let var_r = (one + k + k * k) * mean_h2 - k * k * mean_h * mean_h;
    Ok(TheoreticalMoments {
        mean_h,
        mean_h2: Some(mean_h2),
        mean_r: Interval::new(F::zero(), k * mean_h)?,
        var_r: Some(var_r),
        c1,
        c2: Some(c2),
    })
}

/// `E(eta_t x_t) = alpha sqrt(2/pi) k + beta (k + k^2) + gamma k`, where
/// `x_t` is the multiplier carrying `eta_t` forward.
pub fn eta_multiplier_moment<F: Scalar>(params: &ModelParams<F>) -> Result<F> {
    if !params.orders.is_111() {
        return Err(Error::UnsupportedOrders);
    }
    let k = params.k;
    Ok(params.alpha[0] * F::mean_abs_normal() * k
        + params.beta[0] * (k + k * k)
        + params.gamma[0] * k)
}

/// `E(h_t h_{t+s} eta_t)` for `s >= 1`.
pub fn mean_h_h_eta<F: Scalar>(params: &ModelParams<F>, s: usize) -> Result<F> {
    let m = theoretical_moments(params)?;
    let (c1, c2) = (m.c1, m.c2.expect("(1,1,1) moments"));
    let one = F::one();
    let (mu, k) = (params.mu, params.k);
    let s_i = s as i32;
    let bracket = params.alpha[0] * F::mean_abs_normal() + params.beta[0] * (one + k) + params.gamma[0];
    Ok(mu * mu * k / (c1 - one)
        * (-(c1.powi(s_i) - one) / (c1 - one)
            + (c1.powi(s_i) + c1.powi(s_i - 1)) / (c2 - one) * bracket))
}

/// `Cov(r_t, r_{t+s})` for the (1,1,1) model.
pub fn theoretical_acov<F: Scalar>(params: &ModelParams<F>, s: usize) -> Result<F> {
    let m = theoretical_moments(params)?;
    let var_r = m.var_r.ok_or(Error::UnsupportedOrders)?;
    if s == 0 {
        return Ok(var_r);
    }
    let k = params.k;
    Ok(k * mean_h_h_eta(params, s)? - k * k * m.mean_h * m.mean_h)
}

/// Theoretical ACF `rho(0..=max_lag)` of the (1,1,1) model.
pub fn theoretical_acf<F: Scalar>(params: &ModelParams<F>, max_lag: usize) -> Result<Vec<F>> {
    let v0 = theoretical_acov(params, 0)?;
    let mut out = vec![F::one()];
    for s in 1..=max_lag {
        out.push(theoretical_acov(params, s)? / v0);
    }
    Ok(out)
}
