//! Closed real intervals and the random-interval statistics built on them.
//!
//! Intervals are stored as `(center, radius)`. Distances, means and
//! (co)variances follow the L2 geometry in which an interval is the point
//! `(center, radius)` of the half-plane `radius >= 0`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// A closed interval `[center - radius, center + radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<F = f64> {
    center: F,
    radius: F,
}

impl<F: Scalar> Interval<F> {
    /// Builds an interval from its center and radius. The radius must be
    /// nonnegative and both values finite.
    pub fn new(center: F, radius: F) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(Error::InvalidInterval(format!(
                "non-finite component (center {center}, radius {radius})"
            )));
        }
        if radius < F::zero() {
            return Err(Error::InvalidInterval(format!("negative radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Builds an interval from its endpoints; requires `lower <= upper`.
    pub fn from_bounds(lower: F, upper: F) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidInterval(format!(
                "lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        let two = F::lit(2.0);
        Self::new((lower + upper) / two, (upper - lower) / two)
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: F) -> Self {
        Self {
            center: x,
            radius: F::zero(),
        }
    }

    #[inline]
    pub fn center(&self) -> F {
        self.center
    }

    #[inline]
    pub fn radius(&self) -> F {
        self.radius
    }

    #[inline]
    pub fn lower(&self) -> F {
        self.center - self.radius
    }

    #[inline]
    pub fn upper(&self) -> F {
        self.center + self.radius
    }

    pub fn contains(&self, x: F) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

/// A time-ordered sequence of intervals, optionally dated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSeries<F = f64> {
    items: Vec<Interval<F>>,
    dates: Option<Vec<NaiveDate>>,
}

impl<F: Scalar> IntervalSeries<F> {
    pub fn new(items: Vec<Interval<F>>) -> Self {
        Self { items, dates: None }
    }

    /// Dated series; dates must be strictly increasing and one per item.
    pub fn with_dates(items: Vec<Interval<F>>, dates: Vec<NaiveDate>) -> Result<Self> {
        if dates.len() != items.len() {
            return Err(Error::Misaligned(format!(
                "{} dates for {} intervals",
                dates.len(),
                items.len()
            )));
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Misaligned(format!(
                "dates not strictly increasing at {} -> {}",
                dates[i],
                dates[i + 1]
            )));
        }
        Ok(Self {
            items,
            dates: Some(dates),
        })
    }

    /// Builds a series from parallel center and radius slices.
    pub fn from_components(centers: &[F], radii: &[F]) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(Error::Misaligned(format!(
                "{} centers for {} radii",
                centers.len(),
                radii.len()
            )));
        }
        let items = centers
            .iter()
            .zip(radii)
            .map(|(&c, &r)| Interval::new(c, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(items))
    }

    pub fn items(&self) -> &[Interval<F>] {
        &self.items
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn centers(&self) -> Vec<F> {
        self.items.iter().map(Interval::center).collect()
    }

    pub fn radii(&self) -> Vec<F> {
        self.items.iter().map(Interval::radius).collect()
    }

    /// Sub-series over `range`, carrying the matching dates.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            items: self.items[range.clone()].to_vec(),
            dates: self.dates.as_ref().map(|d| d[range].to_vec()),
        }
    }
}

/// First and second sample moments of an interval series.
///
/// All autocovariances (lag 0 included) use divisor `n`, so
/// `autocovariances[0] == variance`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMoments<F = f64> {
    pub mean: Interval<F>,
    pub variance: F,
    pub autocovariances: Vec<F>,
}

/// L2 distance between intervals in `(center, radius)` coordinates.
pub fn rho2_distance<F: Scalar>(x: &Interval<F>, y: &Interval<F>) -> F {
    (x.center - y.center).hypot(x.radius - y.radius)
}

/// Componentwise (Aumann) mean of a series.
pub fn aumann_mean<F: Scalar>(series: &IntervalSeries<F>) -> Result<Interval<F>> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = F::from_usize_lossy(series.len());
    let c = sum(series.items.iter().map(|i| i.center)) / n;
    let r = sum(series.items.iter().map(|i| i.radius)) / n;
    Ok(Interval {
        center: c,
        radius: r,
    })
}

/// Sample variance of centers plus sample variance of radii, divisor `n - 1`.
pub fn sample_variance<F: Scalar>(series: &IntervalSeries<F>) -> Result<F> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "variance needs at least 2 intervals, got {}",
            series.len()
        )));
    }
    let m = aumann_mean(series)?;
    let ss = sum(series.items.iter().map(|x| {
        let dc = x.center - m.center;
        let dr = x.radius - m.radius;
        dc * dc + dr * dr
    }));
    Ok(ss / F::from_usize_lossy(series.len() - 1))
}

/// Sample autocovariances `0..=max_lag` with divisor `n`.
pub fn autocovariances<F: Scalar>(values: &[F], max_lag: usize) -> Vec<F> {
    let n = values.len();
    let Some(m) = crate::scalar::mean(values) else {
        return vec![F::zero(); max_lag + 1];
    };
    let nn = F::from_usize_lossy(n);
    (0..=max_lag)
        .map(|s| {
            if s >= n {
                return F::zero();
            }
            sum((0..n - s).map(|t| (values[t] - m) * (values[t + s] - m))) / nn
        })
        .collect()
}

fn check_acf_length(len: usize, max_lag: usize) -> Result<()> {
    if len <= max_lag + 1 {
        return Err(Error::InsufficientData(format!(
            "ACF up to lag {max_lag} needs more than {} observations, got {len}",
            max_lag + 1
        )));
    }
    Ok(())
}

/// Whether a lag-0 autocovariance is rounding noise around a constant:
/// deviations of a constant from its computed mean are a few ulps.
fn negligible_variance<F: Scalar>(acov0: F, values: &[F]) -> bool {
    let scale = values.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    let tol = F::lit(8.0) * F::epsilon() * scale;
    acov0 <= tol * tol
}

/// Standard sample autocorrelation of a scalar sequence.
pub fn component_acf<F: Scalar>(values: &[F], max_lag: usize) -> Result<Vec<F>> {
    check_acf_length(values.len(), max_lag)?;
    let acov = autocovariances(values, max_lag);
    if acov[0] <= F::zero() || negligible_variance(acov[0], values) {
        return Err(Error::DegenerateSeries);
    }
    Ok(acov.iter().map(|&g| g / acov[0]).collect())
}

/// Interval sample ACF: center and radius autocovariances summed before
/// normalizing.
pub fn sample_acf<F: Scalar>(series: &IntervalSeries<F>, max_lag: usize) -> Result<Vec<F>> {
    check_acf_length(series.len(), max_lag)?;
    let (c, r) = (series.centers(), series.radii());
    let gc = autocovariances(&c, max_lag);
    let gr = autocovariances(&r, max_lag);
    let denom = gc[0] + gr[0];
    if denom <= F::zero() || (negligible_variance(gc[0], &c) && negligible_variance(gr[0], &r)) {
        return Err(Error::DegenerateSeries);
    }
    Ok(gc.iter().zip(&gr).map(|(&a, &b)| (a + b) / denom).collect())
}

/// Mean, variance and autocovariances of an interval series.
pub fn summary_moments<F: Scalar>(
    series: &IntervalSeries<F>,
    max_lag: usize,
) -> Result<SummaryMoments<F>> {
    let mean = aumann_mean(series)?;
    let (c, r) = (series.centers(), series.radii());
    let gc = autocovariances(&c, max_lag);
    let gr = autocovariances(&r, max_lag);
    let autocovariances: Vec<F> = gc.iter().zip(&gr).map(|(&a, &b)| a + b).collect();
    Ok(SummaryMoments {
        mean,
        variance: autocovariances[0],
        autocovariances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn iv(c: f64, r: f64) -> Interval {
        Interval::new(c, r).unwrap()
    }

    #[test]
    fn bounds_roundtrip() {
        let x = Interval::from_bounds(-1.0, 3.0).unwrap();
        assert_eq!((x.center(), x.radius()), (1.0, 2.0));
        assert_eq!((x.lower(), x.upper()), (-1.0, 3.0));
        assert!(Interval::from_bounds(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, -0.1).is_err());
        assert!(Interval::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn rho2_examples() {
        let a = Interval::from_bounds(0.0, 2.0).unwrap();
        assert_eq!(rho2_distance(&a, &a), 0.0);
        assert_eq!(rho2_distance(&iv(0.0, 1.0), &iv(1.0, 1.0)), 1.0);
        assert_eq!(rho2_distance(&iv(3.0, 0.0), &iv(0.0, 4.0)), 5.0);
    }

    #[test]
    fn aumann_mean_examples() {
        let s = IntervalSeries::new(vec![iv(0.0, 1.0), iv(0.0, 1.0)]);
        assert_eq!(aumann_mean(&s).unwrap(), iv(0.0, 1.0));
        let s = IntervalSeries::new(vec![iv(-1.0, 0.0), iv(1.0, 2.0)]);
        assert_eq!(aumann_mean(&s).unwrap(), iv(0.0, 1.0));
        assert!(matches!(
            aumann_mean(&IntervalSeries::<f64>::new(vec![])),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn variance_examples() {
        let s = IntervalSeries::new(vec![iv(0.3, 1.0); 4]);
        assert_eq!(sample_variance(&s).unwrap(), 0.0);
        let s = IntervalSeries::new(vec![iv(-1.0, 0.0), iv(1.0, 0.0)]);
        assert_eq!(sample_variance(&s).unwrap(), 2.0);
        let s = IntervalSeries::new(vec![iv(1.0, 0.0)]);
        assert!(matches!(sample_variance(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn component_acf_alternating() {
        let v: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let acf = component_acf(&v, 3).unwrap();
        assert_eq!(acf[0], 1.0);
        assert!((acf[1] + 1.0).abs() < 1e-3);
        assert!((acf[2] - 1.0).abs() < 2e-3);
    }

    #[test]
    fn component_acf_linear_ramp() {
        // Brute-force reference for lag-1 autocorrelation of 1..T.
        let t = 5000usize;
        let v: Vec<f64> = (1..=t).map(|i| i as f64).collect();
        let m = (t as f64 + 1.0) / 2.0;
        let g0: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
        let g1: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let acf = component_acf(&v, 1).unwrap();
        assert_relative_eq!(acf[1], g1 / g0, max_relative = 1e-12);
        assert!((acf[1] - (1.0 - 3.0 / t as f64)).abs() < 1e-6);
    }

    #[test]
    fn acf_errors() {
        assert!(matches!(
            component_acf(&[1.0; 10], 2),
            Err(Error::DegenerateSeries)
        ));
        assert!(matches!(
            component_acf(&[1.0, 2.0, 3.0], 2),
            Err(Error::InsufficientData(_))
        ));
        let s = IntervalSeries::new(vec![iv(1.0, 1.0); 10]);
        assert!(matches!(sample_acf(&s, 2), Err(Error::DegenerateSeries)));
        // the computed mean of 30 copies of 0.1 is off by an ulp
        let s = IntervalSeries::new(vec![iv(0.3, 0.1); 30]);
        assert!(matches!(sample_acf(&s, 3), Err(Error::DegenerateSeries)));
        assert!(matches!(component_acf(&[0.1; 30], 3), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn summary_moments_consistent() {
        let s = IntervalSeries::new(vec![iv(-1.0, 0.5), iv(1.0, 2.0), iv(0.2, 0.1), iv(0.0, 1.0)]);
        let m = summary_moments(&s, 2).unwrap();
        assert_eq!(m.autocovariances[0], m.variance);
        assert!(m.autocovariances.iter().all(|g| g.abs() <= m.variance));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Interval::<f32>::new(3.0, 0.0).unwrap();
        let b = Interval::<f32>::new(0.0, 4.0).unwrap();
        assert_eq!(rho2_distance(&a, &b), 5.0);
    }

    fn arb_interval() -> impl Strategy<Value = Interval> {
        (-10.0..10.0f64, 0.0..10.0f64).prop_map(|(c, r)| iv(c, r))
    }

    proptest! {
        #[test]
        fn sample_acf_bounded(items in prop::collection::vec(arb_interval(), 8..60)) {
            let s = IntervalSeries::new(items);
            if let Ok(acf) = sample_acf(&s, 5) {
                prop_assert!((acf[0] - 1.0).abs() < 1e-12);
                for v in acf {
                    prop_assert!(v.abs() <= 1.0 + 1e-12);
                }
            }
        }

        #[test]
        fn variance_is_mean_squared_distance(items in prop::collection::vec(arb_interval(), 2..40)) {
            let s = IntervalSeries::new(items);
            let m = aumann_mean(&s).unwrap();
            let n = s.len() as f64;
            let direct: f64 = s.items().iter().map(|x| rho2_distance(x, &m).powi(2)).sum::<f64>() / (n - 1.0);
            let v = sample_variance(&s).unwrap();
            prop_assert!((direct - v).abs() <= 1e-10 * (1.0 + v));
        }
    }
}
