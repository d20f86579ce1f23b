//! Interval-valued GARCH modeling.
//!
//! Daily returns are observed as intervals `[lambda - delta, lambda + delta]`
//! whose center and radius are driven by a common conditional scale `h_t`.
//! The crate covers interval statistics, simulation, closed-form moment
//! theory, two-stage estimation, multi-step forecasting, market-data
//! preparation and forecast evaluation against a GARCH(1,1) baseline.
//!
//! Numerical code is generic over [`Scalar`]; the `*64` aliases fix the
//! scalar to `f64`.

pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod forecasting;
pub mod intervals;
pub mod linalg;
pub mod marketdata;
pub mod optim;
pub mod process;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use estimation::{
    asymptotic_covariance, estimate_k, fit_mle, fit_mle_from, init_theta, loglik_eval,
    score_and_hessian, DerivativeMode, FitOptions, FittedModel, FittedModelDoc,
};
pub use evaluation::{
    backtest, compare, fit_garch11, hmse, mz_r2, paper_designs, qlike, reproduce_table1,
    synthetic_world, BacktestConfig, EvalReport, Garch11Fit, Garch11Params, LossOptions,
    Table1Config, Table1Design, Table1Row,
};
pub use forecasting::{forecast, forecast_at, rolling_forecast, ForecastResult, RollingForecast};
pub use marketdata::{
    clean_quotes, interval_returns, load_csv, realized_variance, DayBars, GridConfig, QuoteTick,
    Schema, Table,
};
pub use intervals::{
    aumann_mean, component_acf, rho2_distance, sample_acf, sample_variance, Interval,
    IntervalSeries, SummaryMoments,
};
pub use process::{
    conditional_variance, intgarch_volatility, mean_stationarity, step_h,
    strict_stationarity_check, theoretical_acf, theoretical_acov, theoretical_moments,
    weak_stationarity, ModelOrders, ModelParams, ProcessState, TheoreticalMoments,
};
pub use scalar::Scalar;
pub use simulator::{simulate, InitMode, SimConfig, SimOutput};

pub type Interval64 = Interval<f64>;
pub type IntervalSeries64 = IntervalSeries<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type FittedModel64 = FittedModel<f64>;
pub type FitOptions64 = FitOptions<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type ForecastResult64 = ForecastResult<f64>;
