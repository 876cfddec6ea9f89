//! Temporal values: time-ordered samples with linear or step interpolation,
//! period-bucket sampling and synchronization of several values onto one
//! shared set of instants.

use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub const SECONDS_PER_MINUTE: i64 = 60;
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Instant(i64);

impl Instant {
    pub fn from_epoch_seconds(secs: i64) -> Result<Self> {
        if secs < 0 {
            return Err(Error::Temporal(format!("negative instant {secs}")));
        }
        Ok(Self(secs))
    }

    pub fn from_datetime(dt: DateTime<Utc>) -> Result<Self> {
        Self::from_epoch_seconds(dt.timestamp())
    }

    /// Midnight UTC of the given date.
    pub fn midnight(date: NaiveDate) -> Result<Self> {
        Self::from_datetime(date.and_hms_opt(0, 0, 0).expect("valid time").and_utc())
    }

    pub fn epoch_seconds(self) -> i64 {
        self.0
    }

    /// Whole minutes since the epoch (floor).
    pub fn epoch_minute(self) -> i64 {
        self.0.div_euclid(SECONDS_PER_MINUTE)
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).expect("instant within chrono range")
    }

    pub fn date(self) -> NaiveDate {
        self.to_datetime().date_naive()
    }

    pub fn checked_add(self, secs: i64) -> Option<Self> {
        self.0.checked_add(secs).filter(|s| *s >= 0).map(Self)
    }
}

impl TryFrom<i64> for Instant {
    type Error = Error;

    fn try_from(secs: i64) -> Result<Self> {
        Self::from_epoch_seconds(secs)
    }
}

impl From<Instant> for i64 {
    fn from(t: Instant) -> i64 {
        t.0
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_datetime().format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    Step,
}

/// Values that can be carried by a [`TemporalValue`].
///
/// Continuous payloads (scalars, points) interpolate linearly; discrete
/// payloads only support step interpolation.
pub trait TemporalPayload: Clone + PartialEq + fmt::Debug {
    const CONTINUOUS: bool;

    /// Affine interpolation; only called for continuous payloads.
    fn lerp(&self, other: &Self, frac: f64) -> Self;
}

impl TemporalPayload for f64 {
    const CONTINUOUS: bool = true;

    fn lerp(&self, other: &Self, frac: f64) -> Self {
        self + (other - self) * frac
    }
}

impl TemporalPayload for Point {
    const CONTINUOUS: bool = true;

    fn lerp(&self, other: &Self, frac: f64) -> Self {
        Point::lerp(self, other, frac)
    }
}

impl TemporalPayload for i32 {
    const CONTINUOUS: bool = false;

    fn lerp(&self, _other: &Self, _frac: f64) -> Self {
        *self
    }
}

/// A non-empty sequence of `(instant, value)` samples with strictly
/// increasing instants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "V: DeserializeOwned"))]
#[serde(try_from = "RawTemporal<V>", into = "RawTemporal<V>")]
pub struct TemporalValue<V: TemporalPayload> {
    samples: Vec<(Instant, V)>,
    interpolation: Interpolation,
}

#[derive(Serialize, Deserialize)]
struct RawTemporal<V> {
    interpolation: Interpolation,
    samples: Vec<(Instant, V)>,
}

impl<V: TemporalPayload> TryFrom<RawTemporal<V>> for TemporalValue<V> {
    type Error = Error;

    fn try_from(raw: RawTemporal<V>) -> Result<Self> {
        Self::new(raw.samples, raw.interpolation)
    }
}

impl<V: TemporalPayload> From<TemporalValue<V>> for RawTemporal<V> {
    fn from(tv: TemporalValue<V>) -> Self {
        RawTemporal {
            interpolation: tv.interpolation,
            samples: tv.samples,
        }
    }
}

impl<V: TemporalPayload> TemporalValue<V> {
    pub fn new(samples: Vec<(Instant, V)>, interpolation: Interpolation) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Temporal("no samples".into()));
        }
        if let Some(w) = samples.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::Temporal(format!(
                "instants not strictly increasing at {}",
                w[1].0
            )));
        }
        match (interpolation, V::CONTINUOUS) {
            (Interpolation::Linear, false) => {
                return Err(Error::Temporal(
                    "linear interpolation requires a continuous payload".into(),
                ))
            }
            (Interpolation::Step, true) => {
                return Err(Error::Temporal(
                    "step interpolation requires a discrete payload".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            samples,
            interpolation,
        })
    }

    pub fn linear(samples: Vec<(Instant, V)>) -> Result<Self> {
        Self::new(samples, Interpolation::Linear)
    }

    pub fn step(samples: Vec<(Instant, V)>) -> Result<Self> {
        Self::new(samples, Interpolation::Step)
    }

    pub fn samples(&self) -> &[(Instant, V)] {
        &self.samples
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn instants(&self) -> impl Iterator<Item = Instant> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }

    pub fn values(&self) -> impl Iterator<Item = &V> + '_ {
        self.samples.iter().map(|(_, v)| v)
    }

    pub fn start(&self) -> Instant {
        self.samples[0].0
    }

    pub fn end(&self) -> Instant {
        self.samples[self.samples.len() - 1].0
    }

    pub fn span(&self) -> (Instant, Instant) {
        (self.start(), self.end())
    }

    /// Value at `t`, or `None` outside the temporal span.
    pub fn value_at(&self, t: Instant) -> Option<V> {
        if t < self.start() || t > self.end() {
            return None;
        }
        // first index with instant > t; at least 1 since start <= t
        let idx = self.samples.partition_point(|(ti, _)| *ti <= t);
        let (t0, v0) = &self.samples[idx - 1];
        if *t0 == t || self.interpolation == Interpolation::Step {
            return Some(v0.clone());
        }
        let (t1, v1) = &self.samples[idx];
        let frac = (t.0 - t0.0) as f64 / (t1.0 - t0.0) as f64;
        Some(v0.lerp(v1, frac))
    }

    /// Samples the value at every bucket instant `origin + k * period`
    /// (`k >= 0`) that falls inside its span. `None` when no bucket does or
    /// when every bucket value is absent.
    pub fn tsample(&self, period_seconds: i64, origin: Instant) -> Option<Self> {
        let instants = bucket_instants(self.span(), period_seconds, origin);
        self.at_instants(&instants)
    }

    /// Restricts the value to the given instants (which must be increasing);
    /// instants where the value is absent are dropped.
    pub fn at_instants(&self, instants: &[Instant]) -> Option<Self> {
        let samples: Vec<_> = instants
            .iter()
            .filter_map(|t| self.value_at(*t).map(|v| (*t, v)))
            .collect();
        if samples.is_empty() {
            return None;
        }
        Some(Self {
            samples,
            interpolation: self.interpolation,
        })
    }

    pub fn map<W: TemporalPayload>(
        &self,
        interpolation: Interpolation,
        f: impl Fn(Instant, &V) -> W,
    ) -> Result<TemporalValue<W>> {
        TemporalValue::new(
            self.samples.iter().map(|(t, v)| (*t, f(*t, v))).collect(),
            interpolation,
        )
    }
}

impl TemporalValue<Point> {
    /// Sum of planar segment lengths.
    pub fn length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].1.distance(&w[1].1))
            .sum()
    }
}

/// Bucket instants `origin + k * period` (`k >= 0`) within `[start, end]`.
///
/// # Panics
/// If `period_seconds` is not positive.
pub fn bucket_instants(span: (Instant, Instant), period_seconds: i64, origin: Instant) -> Vec<Instant> {
    assert!(period_seconds > 0, "period must be positive");
    let (start, end) = span;
    if origin > end {
        return Vec::new();
    }
    let offset = (start.0 - origin.0).max(0);
    let k0 = (offset + period_seconds - 1) / period_seconds;
    let mut out = Vec::new();
    let mut t = origin.0 + k0 * period_seconds;
    while t <= end.0 {
        out.push(Instant(t));
        t += period_seconds;
    }
    out
}

/// Bucket instants common to every span.
pub fn common_buckets(
    spans: &[(Instant, Instant)],
    period_seconds: i64,
    origin: Instant,
) -> Vec<Instant> {
    let Some(start) = spans.iter().map(|s| s.0).max() else {
        return Vec::new();
    };
    let end = spans.iter().map(|s| s.1).min().expect("non-empty");
    if start > end {
        return Vec::new();
    }
    bucket_instants((start, end), period_seconds, origin)
}

/// Samples every value with the same period and origin and restricts all
/// outputs to the instants shared by every input. An empty common set
/// yields `None` for every output.
pub fn synchronize<V: TemporalPayload>(
    tvs: &[TemporalValue<V>],
    period_seconds: i64,
    origin: Instant,
) -> Vec<Option<TemporalValue<V>>> {
    let spans: Vec<_> = tvs.iter().map(|tv| tv.span()).collect();
    let common = common_buckets(&spans, period_seconds, origin);
    tvs.iter().map(|tv| tv.at_instants(&common)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: i64) -> Instant {
        Instant::from_epoch_seconds(s).unwrap()
    }

    fn linear(samples: &[(i64, f64)]) -> TemporalValue<f64> {
        TemporalValue::linear(samples.iter().map(|(s, v)| (t(*s), *v)).collect()).unwrap()
    }

    fn step(samples: &[(i64, i32)]) -> TemporalValue<i32> {
        TemporalValue::new(
            samples.iter().map(|(s, v)| (t(*s), *v)).collect(),
            Interpolation::Step,
        )
        .unwrap()
    }

    #[test]
    fn value_at_examples() {
        assert_eq!(linear(&[(0, 0.0), (90, 3.0)]).value_at(t(60)), Some(2.0));
        assert_eq!(step(&[(0, 3), (90, 4)]).value_at(t(60)), Some(3));
        assert_eq!(linear(&[(0, 1.0)]).value_at(t(10)), None);
    }

    #[test]
    fn construction_invariants() {
        assert!(TemporalValue::<f64>::linear(vec![]).is_err());
        assert!(TemporalValue::linear(vec![(t(5), 1.0), (t(5), 2.0)]).is_err());
        assert!(TemporalValue::linear(vec![(t(6), 1.0), (t(5), 2.0)]).is_err());
        assert!(TemporalValue::new(vec![(t(0), 1.0)], Interpolation::Step).is_err());
        assert!(TemporalValue::new(vec![(t(0), 1)], Interpolation::Linear).is_err());
        assert!(Instant::from_epoch_seconds(-1).is_err());
    }

    #[test]
    fn tsample_examples() {
        let tv = linear(&[(0, 0.0), (120, 4.0)]).tsample(60, t(0)).unwrap();
        assert_eq!(tv.samples(), &[(t(0), 0.0), (t(60), 2.0), (t(120), 4.0)]);

        let tv = step(&[(30, 3), (150, 4)]).tsample(60, t(0)).unwrap();
        assert_eq!(tv.samples(), &[(t(60), 3), (t(120), 3)]);
        assert_eq!(tv.interpolation(), Interpolation::Step);

        let tv = linear(&[(0, 0.0), (120, 4.0)]);
        assert!(tv.tsample(60, t(121)).is_none());
    }

    #[test]
    fn synchronize_examples() {
        let a = linear(&[(0, 0.0), (120, 4.0)]);
        let out = synchronize(&[a.clone(), a.clone()], 60, t(0));
        let sets: Vec<Vec<_>> = out.iter().map(|o| o.as_ref().unwrap().instants().collect()).collect();
        assert_eq!(sets[0], sets[1]);

        let b = linear(&[(60, 1.0), (180, 5.0)]);
        let out = synchronize(&[a.clone(), b], 60, t(0));
        for o in &out {
            let inst: Vec<_> = o.as_ref().unwrap().instants().collect();
            assert_eq!(inst, vec![t(60), t(120)]);
        }

        let c = linear(&[(500, 1.0), (600, 5.0)]);
        assert!(synchronize(&[a, c], 60, t(0)).iter().all(Option::is_none));
    }

    #[test]
    fn serde_round_trip_validates() {
        let tv = step(&[(0, 3), (60, 4)]);
        let s = serde_json::to_string(&tv).unwrap();
        let back: TemporalValue<i32> = serde_json::from_str(&s).unwrap();
        assert_eq!(tv, back);
        let bad = r#"{"interpolation":"step","samples":[[60,1],[0,2]]}"#;
        assert!(serde_json::from_str::<TemporalValue<i32>>(bad).is_err());
    }

    fn arb_linear() -> impl Strategy<Value = TemporalValue<f64>> {
        prop::collection::vec((1i64..300, -100.0f64..100.0), 1..20).prop_map(|steps| {
            let mut s = 0;
            let samples = steps
                .into_iter()
                .map(|(dt, v)| {
                    s += dt;
                    (t(s), v)
                })
                .collect();
            TemporalValue::linear(samples).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tsample_instants_congruent_to_origin(tv in arb_linear(), period in 1i64..200, origin in 0i64..500) {
            if let Some(s) = tv.tsample(period, t(origin)) {
                for i in s.instants() {
                    prop_assert_eq!((i.epoch_seconds() - origin).rem_euclid(period), 0);
                    prop_assert!(i.epoch_seconds() >= origin);
                }
            }
        }

        #[test]
        fn value_at_sample_instants_is_exact(tv in arb_linear()) {
            for (i, v) in tv.samples() {
                prop_assert_eq!(tv.value_at(*i), Some(*v));
            }
        }

        #[test]
        fn linear_exact_for_affine(a in -10.0f64..10.0, b in -1e3f64..1e3, n in 2usize..12, query in 0i64..5000) {
            let samples: Vec<_> = (0..n).map(|k| {
                let s = (k as i64) * 437 + (k as i64 * k as i64) % 7;
                (t(s), a * s as f64 + b)
            }).collect();
            let tv = TemporalValue::linear(samples).unwrap();
            if let Some(v) = tv.value_at(t(query)) {
                prop_assert!((v - (a * query as f64 + b)).abs() < 1e-9);
            }
        }

        #[test]
        fn tsample_idempotent(tv in arb_linear(), period in 1i64..200, origin in 0i64..500) {
            let once = tv.tsample(period, t(origin));
            let twice = once.as_ref().and_then(|s| s.tsample(period, t(origin)));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn synchronize_shares_instants(a in arb_linear(), b in arb_linear(), c in arb_linear(), period in 1i64..100) {
            let out = synchronize(&[a, b, c], period, t(0));
            let sets: Vec<Option<Vec<Instant>>> = out.iter().map(|o| o.as_ref().map(|v| v.instants().collect())).collect();
            prop_assert!(sets.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
