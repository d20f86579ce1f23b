use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::NaiveTime;
use intgarch::evaluation::{reports_to_csv, reports_to_text, run_replications, summarize, table1_to_csv, table1_to_text};
use intgarch::marketdata::{
    build_day_bars, close_returns, load_daily_bars, load_intervals, load_ticks, write_daily_bars_to,
    write_intervals_to, write_ticks_to,
};
use intgarch::{
    backtest, clean_quotes, fit_mle, forecast_at, interval_returns, intgarch_volatility, loglik_eval, mean_stationarity,
    paper_designs, rolling_forecast, sample_acf, simulate, synthetic_world, theoretical_acf, BacktestConfig,
    DerivativeMode, FitOptions, FittedModelDoc, GridConfig, InitMode, IntervalSeries, LossOptions, ModelParams,
    SimConfig, Table1Config,
};
use serde::{Deserialize, Serialize};

use crate::{
    AcfArgs, BacktestArgs, Cli, Command, FitArgs, ForecastArgs, Format, Global, ModelSource, PrepareArgs,
    SimulateArgs, Table1Args,
};

/// Failure classes behind the exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    BadInput,
    Numerical,
    NotConverged,
}

impl Failure {
    pub fn code(self) -> u8 {
        match self {
            Failure::BadInput => 2,
            Failure::Numerical => 3,
            Failure::NotConverged => 4,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Failure::BadInput => "bad_input",
            Failure::Numerical => "numerical",
            Failure::NotConverged => "not_converged",
        }
    }
}

/// An error that already knows its class.
#[derive(Debug)]
struct Classified(Failure, String);

impl fmt::Display for Classified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Classified {}

fn fail(class: Failure, msg: impl Into<String>) -> anyhow::Error {
    Classified(class, msg.into()).into()
}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    fail(Failure::BadInput, msg)
}

/// The error and its causes, skipping causes already quoted by an outer
/// message.
pub fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

pub fn classify(err: &anyhow::Error) -> Failure {
    use intgarch::Error as E;
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Classified>() {
            return c.0;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NotConverged(_) => Failure::NotConverged,
                E::Overflow
                | E::SingularHessian
                | E::NotInteriorMaximum
                | E::DegenerateSeries
                | E::KNotIdentified
                | E::R2Undefined(_) => Failure::Numerical,
                _ => Failure::BadInput,
            };
        }
    }
    Failure::BadInput
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&g, a),
        Command::Fit(a) => cmd_fit(&g, a),
        Command::Forecast(a) => cmd_forecast(&g, a),
        Command::Acf(a) => cmd_acf(&g, a),
        Command::Prepare(a) => cmd_prepare(&g, a),
        Command::Backtest(a) => cmd_backtest(&g, a),
        Command::Table1(a) => cmd_table1(&g, a),
    }
}

// --- output ---

#[derive(Serialize)]
struct RunRecord<'a, A> {
    version: &'static str,
    command: &'a str,
    global: &'a Global,
    args: &'a A,
}

fn run_record<A: Serialize>(g: &Global, command: &str, args: &A) -> serde_json::Value {
    serde_json::to_value(RunRecord {
        version: env!("CARGO_PKG_VERSION"),
        command,
        global: g,
        args,
    })
    .expect("arguments serialize")
}

/// `#` comment lines recording the resolved configuration. The CSV loaders
/// skip them.
fn header<A: Serialize>(g: &Global, command: &str, args: &A) -> String {
    format!("# intgarch {command}\n# config: {}\n", run_record(g, command, args))
}

fn emit(path: Option<&Path>, header: &str, body: &[u8]) -> Result<()> {
    let mut buf = header.as_bytes().to_vec();
    buf.extend_from_slice(body);
    match path {
        Some(p) => std::fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&buf)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn resolve_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s} (generated; recorded in the output header)");
        s
    })
}

// --- models ---

#[derive(Deserialize)]
struct ModelSpec {
    k: f64,
    mu: f64,
    #[serde(default)]
    alpha: Vec<f64>,
    #[serde(default)]
    beta: Vec<f64>,
    #[serde(default)]
    gamma: Vec<f64>,
}

/// Parameters from a model file, with the fitted pre-sample mode when the
/// file came from `fit`.
fn load_model(path: &Path) -> Result<(ModelParams, Option<InitMode>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    let ctx = || format!("model {}", path.display());
    let value: serde_json::Value = serde_json::from_str(&text).with_context(ctx)?;
    if value.get("theta").is_some() {
        let doc = FittedModelDoc::from_json(&text).with_context(ctx)?;
        return Ok((doc.params().with_context(ctx)?, Some(doc.init_mode)));
    }
    let s: ModelSpec = serde_json::from_value(value).with_context(ctx)?;
    Ok((ModelParams::new(s.k, s.mu, s.alpha, s.beta, s.gamma).with_context(ctx)?, None))
}

fn design(name: &str) -> Result<ModelParams> {
    let key = match name.to_ascii_uppercase().as_str() {
        "1" => "I".to_string(),
        "2" => "II".to_string(),
        "3" => "III".to_string(),
        "4" => "IV".to_string(),
        s => s.to_string(),
    };
    paper_designs()
        .into_iter()
        .find(|d| d.name == key)
        .map(|d| d.params)
        .ok_or_else(|| bad(format!("unknown design {name:?}; expected I, II, III or IV")))
}

impl ModelSource {
    fn resolve(&self) -> Result<Option<ModelParams>> {
        let inline = self.k.is_some() || self.mu.is_some() || !self.alpha.is_empty() || !self.beta.is_empty() || !self.gamma.is_empty();
        let n = usize::from(self.model.is_some()) + usize::from(self.design.is_some()) + usize::from(inline);
        if n > 1 {
            return Err(bad("give only one of --model, --design or inline --k/--mu/--alpha/--beta/--gamma"));
        }
        if let Some(p) = &self.model {
            return Ok(Some(load_model(p)?.0));
        }
        if let Some(d) = &self.design {
            return Ok(Some(design(d)?));
        }
        if inline {
            let (Some(k), Some(mu)) = (self.k, self.mu) else {
                return Err(bad("inline parameters need both --k and --mu"));
            };
            return Ok(Some(ModelParams::new(k, mu, self.alpha.clone(), self.beta.clone(), self.gamma.clone())?));
        }
        Ok(None)
    }
}

// --- commands ---

fn cmd_simulate(g: &Global, mut a: SimulateArgs) -> Result<()> {
    let params = a
        .source
        .resolve()?
        .ok_or_else(|| bad("simulate needs --model, --design or inline --k/--mu/--alpha/--beta"))?;
    let (stationary, s) = mean_stationarity(&params);
    if a.require_stationary && !stationary {
        return Err(bad(format!("parameters are not mean-stationary: sum of mu_i = {s} >= 1")));
    }
    if a.length == 0 {
        return Err(bad("--length must be positive"));
    }
    let seed = resolve_seed(&mut a.seed);
    let cfg = SimConfig::new(params.clone(), a.length, seed).burn_in(a.burn_in).init_mode(a.init);
    let out = simulate(&cfg)?;
    let head = header(g, "simulate", &a);
    let mut body = Vec::new();
    write_intervals_to(&mut body, &out.series)?;
    emit(a.out.as_deref(), &head, &body)?;
    if let Some(p) = &a.h_out {
        let mut body = String::from("t,h,sigma2\n");
        for (t, &h) in out.h_path.iter().enumerate() {
            body.push_str(&format!("{t},{h},{}\n", intgarch_volatility(&params, h)));
        }
        emit(Some(p), &head, body.as_bytes())?;
    }
    Ok(())
}

fn load_series(path: &Path) -> Result<IntervalSeries> {
    load_intervals(path).with_context(|| format!("loading {}", path.display()))
}

fn fit_summary(fmt: Format, doc: &FittedModelDoc, max_grad: f64) -> String {
    let mut rows: Vec<(String, String, String)> = vec![("k".into(), doc.k.to_string(), String::new())];
    for ((name, v), (_, se)) in doc.theta.iter().zip(&doc.std_errors) {
        rows.push((name.clone(), v.to_string(), se.map(|s| s.to_string()).unwrap_or_default()));
    }
    rows.push(("loglik".into(), doc.loglik.to_string(), String::new()));
    rows.push(("converged".into(), doc.converged.to_string(), String::new()));
    rows.push(("iterations".into(), doc.iterations.to_string(), String::new()));
    rows.push(("max_abs_free_gradient".into(), format!("{max_grad:.3e}"), String::new()));
    rows.push(("boundary_set".into(), doc.boundary_set.join(" "), String::new()));
    match fmt {
        Format::Csv => {
            let mut s = String::from("quantity,value,std_error\n");
            for (q, v, se) in rows {
                s.push_str(&format!("{q},{v},{se}\n"));
            }
            s
        }
        Format::Text => {
            let mut s = format!("{:<18} {:>22} {:>22}\n", "quantity", "value", "std_error");
            for (q, v, se) in rows {
                let se = if se.is_empty() { "-".to_string() } else { se };
                s.push_str(&format!("{q:<18} {v:>22} {se:>22}\n"));
            }
            s
        }
    }
}

#[derive(Serialize)]
struct ModelFile<'a> {
    run: serde_json::Value,
    #[serde(flatten)]
    model: &'a FittedModelDoc,
}

fn cmd_fit(g: &Global, a: FitArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let opts = FitOptions {
        max_iterations: a.max_iter,
        gradient_tolerance: a.tol,
        init_mode: a.init,
        derivatives: if a.direct_derivatives { DerivativeMode::DirectOnly } else { DerivativeMode::Full },
        ..FitOptions::default()
    };
    let fit = fit_mle(&series, a.orders, &opts)?;
    let doc = FittedModelDoc::from_fit(&fit);
    if let Some(p) = &a.out {
        let file = ModelFile {
            run: run_record(g, "fit", &a),
            model: &doc,
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    // Coordinates pinned at the boundary keep an outward gradient.
    let max_grad = fit
        .theta_names()
        .iter()
        .zip(&fit.gradient)
        .filter(|(n, _)| fit.free_names.contains(n))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    emit(a.summary.as_deref(), &header(g, "fit", &a), fit_summary(g.format, &doc, max_grad).as_bytes())?;
    if !fit.converged {
        return Err(fail(
            Failure::NotConverged,
            format!("fit did not converge in {} iterations (max |gradient| = {max_grad:.3e}); results are flagged", fit.iterations),
        ));
    }
    Ok(())
}

fn cmd_forecast(g: &Global, a: ForecastArgs) -> Result<()> {
    if a.horizon == 0 {
        return Err(bad("--horizon must be at least 1"));
    }
    let (params, file_mode) = load_model(&a.model)?;
    let mode = a.init.or(file_mode).unwrap_or_default();
    let series = load_series(&a.input)?;
    let mut body = String::from("origin,step,h_hat,sigma2_hat\n");
    let mut push = |origin: usize, h: &[f64], s2: &[f64]| {
        for (i, (h, s)) in h.iter().zip(s2).enumerate() {
            body.push_str(&format!("{origin},{},{h},{s}\n", i + 1));
        }
    };
    if a.rolling {
        let train = a.train_len.expect("clap requires --train-len with --rolling");
        let opts = FitOptions {
            init_mode: mode,
            ..FitOptions::default()
        };
        let rf = rolling_forecast(&series, params.orders, &opts, &[a.horizon], a.refit_every, train)?;
        for (o, e) in &rf.failures {
            log::warn!("origin {o} skipped: {e}");
        }
        for f in &rf.forecasts {
            push(f.origin_index, &f.h_hat, &f.sigma2_hat);
        }
    } else {
        if series.is_empty() {
            return Err(bad("empty input series"));
        }
        let origin = a.origin.unwrap_or(series.len() - 1);
        if origin >= series.len() {
            return Err(bad(format!("origin {origin} is past the last row {}", series.len() - 1)));
        }
        let (_, h) = loglik_eval(&params, &series, mode)?;
        let f = forecast_at(&params, &series, &h, origin, a.horizon)?;
        push(f.origin_index, &f.h_hat, &f.sigma2_hat);
    }
    emit(a.out.as_deref(), &header(g, "forecast", &a), body.as_bytes())
}

fn cmd_acf(g: &Global, a: AcfArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let sample = sample_acf(&series, a.max_lag)?;
    let theory = match &a.model {
        Some(p) => {
            let (params, _) = load_model(p)?;
            Some(theoretical_acf(&params, a.max_lag).context("theoretical ACF")?)
        }
        None => None,
    };
    let mut body = String::from(if theory.is_some() { "lag,sample,theoretical\n" } else { "lag,sample\n" });
    for (lag, s) in sample.iter().enumerate() {
        match &theory {
            Some(t) => body.push_str(&format!("{lag},{s},{}\n", t[lag])),
            None => body.push_str(&format!("{lag},{s}\n")),
        }
    }
    emit(a.out.as_deref(), &header(g, "acf", &a), body.as_bytes())
}

fn parse_time(s: &str, flag: &str) -> Result<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|_| bad(format!("{flag}: cannot parse time {s:?}, expected HH:MM[:SS]")))
}

fn cmd_prepare(g: &Global, a: PrepareArgs) -> Result<()> {
    let grid = GridConfig {
        session_start: parse_time(&a.session_start, "--session-start")?,
        session_end: parse_time(&a.session_end, "--session-end")?,
        spacing_seconds: a.spacing,
    };
    if grid.session_end <= grid.session_start {
        return Err(bad("--session-end must be after --session-start"));
    }
    let ticks = load_ticks(&a.ticks).with_context(|| format!("loading {}", a.ticks.display()))?;
    let cleaned = clean_quotes(&ticks);
    log::info!("{} quotes loaded, {} after cleaning", ticks.len(), cleaned.len());
    let days = build_day_bars(&cleaned, &grid)?;
    let series = interval_returns(&days)?;
    log::info!("{} trading days, {} interval returns", days.len(), series.len());
    let head = header(g, "prepare", &a);
    if let Some(p) = &a.clean_out {
        let mut body = Vec::new();
        write_ticks_to(&mut body, &cleaned)?;
        emit(Some(p), &head, &body)?;
    }
    if let Some(p) = &a.bars_out {
        let mut body = Vec::new();
        write_daily_bars_to(&mut body, &days)?;
        emit(Some(p), &head, &body)?;
    }
    let mut body = Vec::new();
    write_intervals_to(&mut body, &series)?;
    emit(a.out.as_deref(), &head, &body)
}

fn cmd_backtest(g: &Global, mut a: BacktestArgs) -> Result<()> {
    if a.horizons.is_empty() || a.horizons.contains(&0) {
        return Err(bad("--horizons must be a non-empty list of positive steps"));
    }
    let (asset, series, closes, rv) = if let Some(path) = &a.bars {
        let days = load_daily_bars(path).with_context(|| format!("loading {}", path.display()))?;
        let series = interval_returns(&days)?;
        let closes = close_returns(&days)?
            .into_iter()
            .zip(&days[1..])
            .map(|(c, d)| c.ok_or_else(|| bad(format!("{}: close_log missing; the GARCH baseline needs closes", d.date))))
            .collect::<Result<Vec<f64>>>()?;
        let rv: Vec<f64> = days[1..].iter().map(|d| d.rv).collect();
        let name = path.file_stem().map_or("asset".into(), |s| s.to_string_lossy().into_owned());
        (name, series, closes, rv)
    } else if a.synthetic {
        let params = match a.source.resolve()? {
            Some(p) => p,
            None => design("I")?,
        };
        let seed = resolve_seed(&mut a.seed);
        let w = synthetic_world(&params, a.length, a.noise_sd, seed)?;
        ("synthetic".to_string(), w.series, w.close_returns, w.rv)
    } else {
        return Err(bad("backtest needs --bars PATH or --synthetic"));
    };
    let asset = a.asset.clone().unwrap_or(asset);
    let n = series.len();
    let train_len = match a.train_len {
        Some(t) => t,
        None => n
            .checked_sub(a.test_len)
            .filter(|&t| t > 0)
            .ok_or_else(|| bad(format!("{n} observations cannot hold a test window of {}", a.test_len)))?,
    };
    let cfg = BacktestConfig {
        train_len,
        refit_every: a.refit_every,
        orders: a.orders,
    };
    let fit_opts = FitOptions {
        init_mode: a.init,
        ..FitOptions::default()
    };
    let loss = LossOptions {
        squared_proxy: !a.proxy_linear,
        hmse_squared: a.hmse_squared,
    };
    let reports = backtest(&asset, &series, &closes, &rv, &a.horizons, &cfg, &fit_opts, &loss)?;
    let body = match g.format {
        Format::Csv => reports_to_csv(&reports),
        Format::Text => reports_to_text(&reports),
    };
    emit(a.out.as_deref(), &header(g, "backtest", &a), body.as_bytes())
}

fn cmd_table1(g: &Global, mut a: Table1Args) -> Result<()> {
    if a.reps < 2 {
        return Err(bad("--reps must be at least 2"));
    }
    let all = paper_designs();
    let mut chosen = Vec::new();
    for m in &a.models {
        let p = design(m)?;
        let idx = all.iter().position(|d| d.params == p).expect("design comes from the list");
        if !chosen.contains(&idx) {
            chosen.push(idx);
        }
    }
    let seed = resolve_seed(&mut a.seed);
    let mut cfg = Table1Config::new(a.reps, a.length, seed);
    cfg.burn_in = a.burn_in;
    cfg.sim_init = a.sim_init;
    cfg.jobs = Some(g.jobs as usize);
    let mut rows = Vec::new();
    // Each design keeps its position in the full list so its replication
    // seeds do not depend on which designs were selected.
    for &i in &chosen {
        let d = &all[i];
        let reps = run_replications(&d.params, i, &cfg);
        let failed = reps.iter().filter(|r| !matches!(r, Some(x) if x.converged)).count();
        if failed > 0 {
            log::warn!("model {}: {failed} of {} replications failed to fit", d.name, a.reps);
        }
        if failed + 1 >= a.reps {
            return Err(fail(Failure::NotConverged, format!("model {}: {failed} of {} replications failed", d.name, a.reps)));
        }
        rows.extend(summarize(d, &reps));
    }
    let body = match g.format {
        Format::Csv => table1_to_csv(&rows),
        Format::Text => table1_to_text(&rows),
    };
    emit(a.out.as_deref(), &header(g, "table1", &a), body.as_bytes())
}
