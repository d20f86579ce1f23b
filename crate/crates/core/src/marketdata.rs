//! Intraday data preparation: quote cleaning, grid sampling, realized
//! variance and interval-valued daily returns, plus the CSV formats used by
//! the command-line tool.
//!
//! The interval return of day `t` is the range of all snapshot returns
//! between two consecutive days,
//!
//! ```text
//! r_t = [min_s y_t(s) - max_w y_{t-1}(w), max_s y_t(s) - min_w y_{t-1}(w)]
//! ```
//!
//! where `y` are log prices on the sampling grid.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, TimeDelta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteTick {
    pub timestamp: NaiveDateTime,
    pub bid: f64,
    pub ask: f64,
    /// Trade price, when recorded alongside the quote.
    pub price: Option<f64>,
}

impl QuoteTick {
    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }

    pub fn mid(&self) -> f64 {
        (self.bid + self.ask) / 2.0
    }

    /// Price used for sampling: the trade price if present, else the mid.
    pub fn sample_price(&self) -> f64 {
        self.price.unwrap_or_else(|| self.mid())
    }
}

/// A trade-only observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTick {
    pub timestamp: NaiveDateTime,
    pub price: f64,
}

/// One trading day of grid-sampled log prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayBars {
    pub date: NaiveDate,
    /// Grid log prices; empty when the day was loaded in summary form.
    pub log_prices: Vec<f64>,
    pub min_log: f64,
    pub max_log: f64,
    pub rv: f64,
    /// Last log price of the day, for close-to-close returns.
    pub close_log: Option<f64>,
}

impl DayBars {
    pub fn from_log_prices(date: NaiveDate, log_prices: Vec<f64>) -> Result<Self> {
        if log_prices.is_empty() {
            return Err(Error::InsufficientData(format!("{date}: no intraday prices")));
        }
        if log_prices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(format!("{date}: non-finite log price")));
        }
        let min_log = log_prices.iter().copied().fold(f64::INFINITY, f64::min);
        let max_log = log_prices.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rv = sum_sq_diff(&log_prices);
        let close_log = log_prices.last().copied();
        Ok(Self {
            date,
            log_prices,
            min_log,
            max_log,
            rv,
            close_log,
        })
    }

    /// Two-point fallback when only the daily low and high are known: the
    /// day's price set is taken to be `{low, high}` (log units). No RV is
    /// available, so `rv` is 0 and `close_log` is unset.
    pub fn from_low_high(date: NaiveDate, low_log: f64, high_log: f64) -> Result<Self> {
        if !(low_log <= high_log) {
            return Err(Error::InvalidInterval(format!("{date}: low {low_log} above high {high_log}")));
        }
        Ok(Self {
            date,
            log_prices: Vec::new(),
            min_log: low_log,
            max_log: high_log,
            rv: 0.0,
            close_log: None,
        })
    }

    pub fn range(&self) -> f64 {
        self.max_log - self.min_log
    }
}

fn sum_sq_diff(y: &[f64]) -> f64 {
    y.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Centered rolling-median outlier screen on `values`.
///
/// A point is flagged when it is more than 10 mean absolute deviations
/// away from the median of up to 25 neighbors on each side, the point itself
/// excluded. Windows with fewer than 10 neighbors skip the test.
fn rolling_outliers(values: &[f64]) -> Vec<bool> {
    const HALF: usize = 25;
    const MIN_WINDOW: usize = 10;
    const MULT: f64 = 10.0;
    let n = values.len();
    let mut flags = vec![false; n];
    let mut window = Vec::with_capacity(2 * HALF);
    for i in 0..n {
        window.clear();
        window.extend_from_slice(&values[i.saturating_sub(HALF)..i]);
        window.extend_from_slice(&values[i + 1..(i + 1 + HALF).min(n)]);
        if window.len() < MIN_WINDOW {
            continue;
        }
        let med = median(&mut window);
        let mad = window.iter().map(|v| (v - med).abs()).sum::<f64>() / window.len() as f64;
        flags[i] = (values[i] - med).abs() > MULT * mad;
    }
    flags
}

fn collapse_duplicates(ticks: &[QuoteTick]) -> Vec<QuoteTick> {
    let mut out = Vec::with_capacity(ticks.len());
    let mut i = 0;
    while i < ticks.len() {
        let mut j = i + 1;
        while j < ticks.len() && ticks[j].timestamp == ticks[i].timestamp {
            j += 1;
        }
        if j == i + 1 {
            out.push(ticks[i]);
        } else {
            let group = &ticks[i..j];
            let mut bids: Vec<f64> = group.iter().map(|t| t.bid).collect();
            let mut asks: Vec<f64> = group.iter().map(|t| t.ask).collect();
            let mut prices: Vec<f64> = group.iter().filter_map(|t| t.price).collect();
            out.push(QuoteTick {
                timestamp: ticks[i].timestamp,
                bid: median(&mut bids),
                ask: median(&mut asks),
                price: (!prices.is_empty()).then(|| median(&mut prices)),
            });
        }
        i = j;
    }
    out
}

fn by_day<T>(items: &[T], ts: impl Fn(&T) -> NaiveDateTime) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=items.len() {
        if i == items.len() || ts(&items[i]).date() != ts(&items[start]).date() {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

fn clean_pass(ticks: &[QuoteTick]) -> Vec<QuoteTick> {
    // 1. one entry per timestamp, median bid and ask
    let collapsed = collapse_duplicates(ticks);
    // 2. negative spreads
    let nonneg: Vec<QuoteTick> = collapsed.into_iter().filter(|t| t.spread() >= 0.0).collect();
    // 3. spread above 50 daily median spreads
    let mut kept: Vec<QuoteTick> = Vec::with_capacity(nonneg.len());
    for day in by_day(&nonneg, |t| t.timestamp) {
        let rows = &nonneg[day];
        let mut spreads: Vec<f64> = rows.iter().map(QuoteTick::spread).collect();
        let med = median(&mut spreads);
        // A zero median spread (locked market) would delete every quoted
        // row; the rule is skipped for such days.
        kept.extend(rows.iter().filter(|t| med <= 0.0 || t.spread() <= 50.0 * med).copied());
    }
    // 4. mid-quote outliers against the centered rolling median, per day
    let mut out = Vec::with_capacity(kept.len());
    for day in by_day(&kept, |t| t.timestamp) {
        let rows = &kept[day];
        let mids: Vec<f64> = rows.iter().map(QuoteTick::mid).collect();
        let flags = rolling_outliers(&mids);
        out.extend(rows.iter().zip(flags).filter(|(_, f)| !f).map(|(t, _)| *t));
    }
    out
}

/// Applies the four quote-cleaning rules in order: median collapse of
/// duplicate timestamps, negative-spread removal, removal of spreads above
/// 50 times the day's median spread, and removal of mid-quotes more than 10
/// mean absolute deviations from a centered rolling median of 50
/// neighbors.
///
/// Removing rows changes daily medians and rolling windows, so the rules
/// are reapplied until nothing more is removed; the result is therefore a
/// fixed point and cleaning is idempotent.
pub fn clean_quotes(ticks: &[QuoteTick]) -> Vec<QuoteTick> {
    let mut cur = ticks.to_vec();
    cur.sort_by_key(|t| t.timestamp);
    loop {
        let next = clean_pass(&cur);
        if next.len() == cur.len() && next == cur {
            return next;
        }
        cur = next;
    }
}

/// Cleaning for trade-only data: duplicate timestamps are collapsed to their
/// median price (needed for a strictly increasing clock) and the rolling
/// outlier rule runs on prices. The spread rules do not apply.
pub fn clean_trades(ticks: &[PriceTick]) -> Vec<PriceTick> {
    let mut cur = ticks.to_vec();
    cur.sort_by_key(|t| t.timestamp);
    let mut collapsed = Vec::with_capacity(cur.len());
    let mut i = 0;
    while i < cur.len() {
        let mut j = i + 1;
        while j < cur.len() && cur[j].timestamp == cur[i].timestamp {
            j += 1;
        }
        let mut p: Vec<f64> = cur[i..j].iter().map(|t| t.price).collect();
        collapsed.push(PriceTick {
            timestamp: cur[i].timestamp,
            price: median(&mut p),
        });
        i = j;
    }
    let mut cur = collapsed;
    loop {
        let mut next = Vec::with_capacity(cur.len());
        for day in by_day(&cur, |t| t.timestamp) {
            let rows = &cur[day];
            let prices: Vec<f64> = rows.iter().map(|t| t.price).collect();
            let flags = rolling_outliers(&prices);
            next.extend(rows.iter().zip(flags).filter(|(_, f)| !f).map(|(t, _)| *t));
        }
        if next.len() == cur.len() {
            return next;
        }
        cur = next;
    }
}

/// Sampling grid within a trading session (local exchange time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub session_start: NaiveTime,
    pub session_end: NaiveTime,
    pub spacing_seconds: i64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            session_start: NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"),
            session_end: NaiveTime::from_hms_opt(16, 0, 0).expect("valid time"),
            spacing_seconds: 300,
        }
    }
}

/// Last-observation-carried-forward sampling of one day's `(time, price)`
/// observations (sorted by time) at the grid times. Grid points before the
/// first in-session observation are dropped. Returns log prices.
pub fn sample_grid(obs: &[(NaiveDateTime, f64)], grid: &GridConfig) -> Result<Vec<f64>> {
    if grid.spacing_seconds <= 0 {
        return Err(Error::InvalidParameters("grid spacing must be positive".into()));
    }
    let in_session: Vec<&(NaiveDateTime, f64)> = obs
        .iter()
        .filter(|(t, _)| t.time() >= grid.session_start && t.time() <= grid.session_end)
        .collect();
    let Some(first) = in_session.first() else {
        return Ok(Vec::new());
    };
    let date = first.0.date();
    let step = TimeDelta::seconds(grid.spacing_seconds);
    let end = date.and_time(grid.session_end);
    let mut g = date.and_time(grid.session_start);
    let mut out = Vec::new();
    let mut idx = 0;
    let mut last: Option<f64> = None;
    while g <= end {
        while idx < in_session.len() && in_session[idx].0 <= g {
            last = Some(in_session[idx].1);
            idx += 1;
        }
        if let Some(p) = last {
            if !(p > 0.0) {
                return Err(Error::InvalidParameters(format!("nonpositive price {p} at {g}")));
            }
            out.push(p.ln());
        }
        g += step;
    }
    Ok(out)
}

/// Groups cleaned ticks by calendar day and samples each day on the grid.
/// Days with fewer than two grid prices are dropped with a warning.
pub fn build_day_bars(ticks: &[QuoteTick], grid: &GridConfig) -> Result<Vec<DayBars>> {
    let mut out = Vec::new();
    for day in by_day(ticks, |t| t.timestamp) {
        let obs: Vec<(NaiveDateTime, f64)> =
            ticks[day].iter().map(|t| (t.timestamp, t.sample_price())).collect();
        let date = obs[0].0.date();
        let y = sample_grid(&obs, grid)?;
        if y.len() < 2 {
            log::warn!("{date}: {} grid prices, day dropped", y.len());
            continue;
        }
        out.push(DayBars::from_log_prices(date, y)?);
    }
    Ok(out)
}

/// Sum of squared consecutive log-price changes within the day.
pub fn realized_variance(day: &DayBars) -> Result<f64> {
    if day.log_prices.len() < 2 {
        return Err(Error::InsufficientData("insufficient intraday observations".into()));
    }
    Ok(sum_sq_diff(&day.log_prices))
}

/// Interval-valued returns of consecutive days, dated by the later day.
pub fn interval_returns(days: &[DayBars]) -> Result<IntervalSeries> {
    if days.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} days; interval returns need at least 2",
            days.len()
        )));
    }
    check_dates(days)?;
    let mut items = Vec::with_capacity(days.len() - 1);
    let mut dates = Vec::with_capacity(days.len() - 1);
    for w in days.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        items.push(Interval::from_bounds(cur.min_log - prev.max_log, cur.max_log - prev.min_log)?);
        dates.push(cur.date);
    }
    IntervalSeries::with_dates(items, dates)
}

/// Close-to-close log returns aligned with [`interval_returns`]; `None`
/// where either close is missing.
pub fn close_returns(days: &[DayBars]) -> Result<Vec<Option<f64>>> {
    check_dates(days)?;
    Ok(days
        .windows(2)
        .map(|w| Some(w[1].close_log? - w[0].close_log?))
        .collect())
}

fn check_dates(days: &[DayBars]) -> Result<()> {
    if let Some(i) = days.windows(2).position(|w| w[0].date >= w[1].date) {
        return Err(Error::Misaligned(format!(
            "day dates not strictly increasing: {} then {}",
            days[i].date,
            days[i + 1].date
        )));
    }
    Ok(())
}

// --- CSV ---

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Ticks,
    DailyBars,
    IntervalSeries,
}

#[derive(Debug, Clone)]
pub enum Table {
    Ticks(Vec<QuoteTick>),
    DailyBars(Vec<DayBars>),
    IntervalSeries(IntervalSeries),
}

pub fn load_csv(path: impl AsRef<Path>, schema: Schema) -> Result<Table> {
    Ok(match schema {
        Schema::Ticks => Table::Ticks(load_ticks(path)?),
        Schema::DailyBars => Table::DailyBars(load_daily_bars(path)?),
        Schema::IntervalSeries => Table::IntervalSeries(load_intervals(path)?),
    })
}

struct Rows {
    path: String,
    header: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

fn read_rows(path: &Path) -> Result<Rows> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec));
    }
    if header.iter().all(String::is_empty) || rows.is_empty() {
        return Err(Error::NoDataRows(name));
    }
    Ok(Rows {
        path: name,
        header,
        rows,
    })
}

impl Rows {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Column positions for `required` then `optional`; any other column is
    /// an error.
    fn columns(&self, required: &[&str], optional: &[&str]) -> Result<(Vec<usize>, Vec<Option<usize>>)> {
        for h in &self.header {
            if !required.contains(&h.as_str()) && !optional.contains(&h.as_str()) {
                return Err(self.err(1, format!("unknown column {h:?}")));
            }
        }
        let find = |c: &str| self.header.iter().position(|h| h == c);
        let req = required
            .iter()
            .map(|c| find(c).ok_or_else(|| self.err(1, format!("missing column {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok((req, optional.iter().map(|c| find(c)).collect()))
    }

    fn num(&self, line: usize, rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
        let s = rec.get(i).unwrap_or("");
        let v: f64 = s.parse().map_err(|_| self.err(line, format!("{name}: cannot parse {s:?}")))?;
        if !v.is_finite() {
            return Err(self.err(line, format!("{name}: non-finite value {s:?}")));
        }
        Ok(v)
    }

    fn opt_num(&self, line: usize, rec: &csv::StringRecord, i: Option<usize>, name: &str) -> Result<Option<f64>> {
        match i {
            Some(i) if !rec.get(i).unwrap_or("").is_empty() => Ok(Some(self.num(line, rec, i, name)?)),
            _ => Ok(None),
        }
    }

    fn date(&self, line: usize, rec: &csv::StringRecord, i: usize) -> Result<NaiveDate> {
        let s = rec.get(i).unwrap_or("");
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| self.err(line, format!("date: cannot parse {s:?}")))
    }
}

/// Parses ISO-8601 timestamps with or without a UTC offset. Offsets are
/// dropped after conversion to the wall-clock time they denote.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.naive_local())
}

/// `timestamp,bid,ask[,price]`. Unsorted input is sorted with a warning.
pub fn load_ticks(path: impl AsRef<Path>) -> Result<Vec<QuoteTick>> {
    let rows = read_rows(path.as_ref())?;
    let (req, opt) = rows.columns(&["timestamp", "bid", "ask"], &["price"])?;
    let mut out = Vec::with_capacity(rows.rows.len());
    for (line, rec) in &rows.rows {
        let ts = rec.get(req[0]).unwrap_or("");
        let timestamp = parse_timestamp(ts).ok_or_else(|| rows.err(*line, format!("timestamp: cannot parse {ts:?}")))?;
        let bid = rows.num(*line, rec, req[1], "bid")?;
        let ask = rows.num(*line, rec, req[2], "ask")?;
        let price = rows.opt_num(*line, rec, opt[0], "price")?;
        if bid <= 0.0 || ask <= 0.0 || price.is_some_and(|p| p <= 0.0) {
            return Err(rows.err(*line, "prices must be positive"));
        }
        out.push(QuoteTick { timestamp, bid, ask, price });
    }
    if out.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
        log::warn!("{}: timestamps not sorted; sorting", rows.path);
        out.sort_by_key(|t| t.timestamp);
    }
    Ok(out)
}

/// `date,min_log,max_log,rv[,close_log]`, or the long form
/// `date,time,price` of raw grid prices (converted to logs).
pub fn load_daily_bars(path: impl AsRef<Path>) -> Result<Vec<DayBars>> {
    let rows = read_rows(path.as_ref())?;
    if rows.header.iter().any(|h| h == "time") {
        return load_long_bars(&rows);
    }
    let (req, opt) = rows.columns(&["date", "min_log", "max_log", "rv"], &["close_log"])?;
    let mut out: Vec<DayBars> = Vec::with_capacity(rows.rows.len());
    for (line, rec) in &rows.rows {
        let date = rows.date(*line, rec, req[0])?;
        let min_log = rows.num(*line, rec, req[1], "min_log")?;
        let max_log = rows.num(*line, rec, req[2], "max_log")?;
        let rv = rows.num(*line, rec, req[3], "rv")?;
        let close_log = rows.opt_num(*line, rec, opt[0], "close_log")?;
        if min_log > max_log {
            return Err(rows.err(*line, format!("min_log {min_log} above max_log {max_log}")));
        }
        if rv < 0.0 {
            return Err(rows.err(*line, format!("negative rv {rv}")));
        }
        if out.last().is_some_and(|d| d.date >= date) {
            return Err(rows.err(*line, format!("date {date} not after the previous row")));
        }
        out.push(DayBars {
            date,
            log_prices: Vec::new(),
            min_log,
            max_log,
            rv,
            close_log,
        });
    }
    Ok(out)
}

fn load_long_bars(rows: &Rows) -> Result<Vec<DayBars>> {
    let (req, _) = rows.columns(&["date", "time", "price"], &[])?;
    let mut days: BTreeMap<NaiveDate, Vec<(NaiveTime, f64)>> = BTreeMap::new();
    for (line, rec) in &rows.rows {
        let date = rows.date(*line, rec, req[0])?;
        let ts = rec.get(req[1]).unwrap_or("");
        let time = NaiveTime::parse_from_str(ts, "%H:%M:%S%.f")
            .or_else(|_| NaiveTime::parse_from_str(ts, "%H:%M"))
            .map_err(|_| rows.err(*line, format!("time: cannot parse {ts:?}")))?;
        let price = rows.num(*line, rec, req[2], "price")?;
        if price <= 0.0 {
            return Err(rows.err(*line, "prices must be positive"));
        }
        days.entry(date).or_default().push((time, price));
    }
    days.into_iter()
        .map(|(date, mut obs)| {
            obs.sort_by_key(|o| o.0);
            DayBars::from_log_prices(date, obs.iter().map(|o| o.1.ln()).collect())
        })
        .collect()
}

/// `date,low,high` (or `t,low,high` for undated series), with optional
/// exact `center,radius` columns that take precedence over the bounds.
pub fn load_intervals(path: impl AsRef<Path>) -> Result<IntervalSeries> {
    let rows = read_rows(path.as_ref())?;
    let dated = rows.header.iter().any(|h| h == "date");
    let key = if dated { "date" } else { "t" };
    let (req, opt) = rows.columns(&[key, "low", "high"], &["center", "radius"])?;
    let mut items = Vec::with_capacity(rows.rows.len());
    let mut dates = Vec::new();
    for (line, rec) in &rows.rows {
        if dated {
            dates.push(rows.date(*line, rec, req[0])?);
        }
        let low = rows.num(*line, rec, req[1], "low")?;
        let high = rows.num(*line, rec, req[2], "high")?;
        if high < low {
            return Err(rows.err(*line, format!("high {high} below low {low}")));
        }
        let center = rows.opt_num(*line, rec, opt[0], "center")?;
        let radius = rows.opt_num(*line, rec, opt[1], "radius")?;
        let iv = match (center, radius) {
            (Some(c), Some(r)) => {
                let iv = Interval::new(c, r).map_err(|e| rows.err(*line, e.to_string()))?;
                let tol = 1e-9 * (1.0 + low.abs().max(high.abs()));
                if (iv.lower() - low).abs() > tol || (iv.upper() - high).abs() > tol {
                    return Err(rows.err(*line, "center/radius disagree with low/high"));
                }
                iv
            }
            _ => Interval::from_bounds(low, high).map_err(|e| rows.err(*line, e.to_string()))?,
        };
        items.push(iv);
    }
    if dated {
        IntervalSeries::with_dates(items, dates)
    } else {
        Ok(IntervalSeries::new(items))
    }
}

/// Writes `date,low,high,center,radius` (`t` for undated series). Values use
/// shortest round-trip formatting, so reloading is exact.
pub fn write_intervals(path: impl AsRef<Path>, series: &IntervalSeries) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    write_intervals_to(&mut f, series)?;
    f.flush()?;
    Ok(())
}

pub fn write_intervals_to(w: &mut impl Write, series: &IntervalSeries) -> Result<()> {
    let dates = series.dates();
    writeln!(w, "{},low,high,center,radius", if dates.is_some() { "date" } else { "t" })?;
    for (i, x) in series.items().iter().enumerate() {
        match dates {
            Some(d) => write!(w, "{}", d[i].format("%Y-%m-%d"))?,
            None => write!(w, "{i}")?,
        }
        writeln!(w, ",{},{},{},{}", x.lower(), x.upper(), x.center(), x.radius())?;
    }
    Ok(())
}

pub fn write_daily_bars(path: impl AsRef<Path>, days: &[DayBars]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    write_daily_bars_to(&mut f, days)?;
    f.flush()?;
    Ok(())
}

pub fn write_daily_bars_to(w: &mut impl Write, days: &[DayBars]) -> Result<()> {
    writeln!(w, "date,min_log,max_log,rv,close_log")?;
    for d in days {
        let close = d.close_log.map(|c| c.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{close}", d.date.format("%Y-%m-%d"), d.min_log, d.max_log, d.rv)?;
    }
    Ok(())
}

pub fn write_ticks(path: impl AsRef<Path>, ticks: &[QuoteTick]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    write_ticks_to(&mut f, ticks)?;
    f.flush()?;
    Ok(())
}

pub fn write_ticks_to(w: &mut impl Write, ticks: &[QuoteTick]) -> Result<()> {
    writeln!(w, "timestamp,bid,ask,price")?;
    for t in ticks {
        let price = t.price.map(|p| p.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{price}", t.timestamp.format("%Y-%m-%dT%H:%M:%S%.f"), t.bid, t.ask)?;
    }
    Ok(())
}
