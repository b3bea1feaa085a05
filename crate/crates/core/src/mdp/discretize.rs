//! Uniform-width binning of raw feature vectors.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RawState;
use crate::{Feature, FeatureSet};

/// Per-feature `[lo, hi]` value ranges, indexed by [`Feature::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanges {
    pub tilt: (f64, f64),
    pub coverage: (f64, f64),
    pub capacity: (f64, f64),
    pub quality: (f64, f64),
}

impl FeatureRanges {
    pub fn get(&self, f: Feature) -> (f64, f64) {
        match f {
            Feature::Tilt => self.tilt,
            Feature::Coverage => self.coverage,
            Feature::Capacity => self.capacity,
            Feature::Quality => self.quality,
        }
    }
}

impl Default for FeatureRanges {
    fn default() -> Self {
        FeatureRanges {
            tilt: (0.0, 15.0),
            coverage: (0.0, 1.0),
            capacity: (0.0, 1.0),
            quality: (0.0, 1.0),
        }
    }
}

/// Bin index of `v` among `nb` equal-width bins over `[lo, hi]`, and whether
/// `v` had to be clamped. `hi` itself belongs to the top bin.
pub fn bin_index(v: f64, nb: usize, (lo, hi): (f64, f64)) -> (usize, bool) {
    debug_assert!(nb >= 2 && hi > lo);
    if v.is_nan() {
        return (0, true);
    }
    let out_of_range = v < lo || v > hi;
    let x = ((v - lo) / (hi - lo) * nb as f64).floor();
    let bin = if x < 0.0 { 0 } else { (x as usize).min(nb - 1) };
    (bin, out_of_range)
}

/// Discrete state: a bin index for each feature the model is over.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "BinsRepr", into = "BinsRepr")]
pub struct DiscreteState {
    bins: [Option<u16>; 4],
}

impl DiscreteState {
    pub fn from_bins(bins: impl IntoIterator<Item = (Feature, usize)>) -> Self {
        let mut s = DiscreteState { bins: [None; 4] };
        for (f, b) in bins {
            s.bins[f.index()] = Some(b as u16);
        }
        s
    }

    pub fn bin(&self, f: Feature) -> Option<usize> {
        self.bins[f.index()].map(usize::from)
    }

    pub fn features(&self) -> FeatureSet {
        Feature::ALL
            .into_iter()
            .filter(|f| self.bins[f.index()].is_some())
            .collect()
    }

    /// Drops the bins of features outside `keep`.
    pub fn project(&self, keep: FeatureSet) -> DiscreteState {
        let mut s = *self;
        for f in Feature::ALL {
            if !keep.contains(f) {
                s.bins[f.index()] = None;
            }
        }
        s
    }
}

impl fmt::Debug for DiscreteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `tilt=1,coverage=2`
impl fmt::Display for DiscreteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for feat in Feature::ALL {
            if let Some(b) = self.bin(feat) {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{feat}={b}")?;
                first = false;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BinsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tilt: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coverage: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quality: Option<u16>,
}

impl From<BinsRepr> for DiscreteState {
    fn from(r: BinsRepr) -> Self {
        DiscreteState {
            bins: [r.tilt, r.coverage, r.capacity, r.quality],
        }
    }
}

impl From<DiscreteState> for BinsRepr {
    fn from(s: DiscreteState) -> Self {
        let [tilt, coverage, capacity, quality] = s.bins;
        BinsRepr {
            tilt,
            coverage,
            capacity,
            quality,
        }
    }
}

/// Binning configuration plus a shared count of clamped values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Discretizer {
    pub nb: usize,
    pub ranges: FeatureRanges,
    #[serde(skip)]
    clamped: Arc<AtomicU64>,
}

impl PartialEq for Discretizer {
    fn eq(&self, other: &Self) -> bool {
        self.nb == other.nb && self.ranges == other.ranges
    }
}

impl Discretizer {
    pub fn new(nb: usize, ranges: FeatureRanges) -> Self {
        assert!(nb >= 2, "at least two bins per feature");
        Discretizer {
            nb,
            ranges,
            clamped: Arc::default(),
        }
    }

    /// Bins of the features in `features`; the rest are left unset.
    pub fn discretize(&self, raw: &RawState, features: FeatureSet) -> DiscreteState {
        DiscreteState::from_bins(features.iter().map(|f| {
            let (bin, clamped) = bin_index(raw.get(f), self.nb, self.ranges.get(f));
            if clamped {
                self.clamped.fetch_add(1, Ordering::Relaxed);
            }
            (f, bin)
        }))
    }

    /// Values clamped so far by this discretizer and its clones.
    pub fn clamp_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }
}

impl Default for Discretizer {
    fn default() -> Self {
        Discretizer::new(3, FeatureRanges::default())
    }
}

/// All-feature discretization.
pub fn discretize(raw: &RawState, nb: usize, ranges: &FeatureRanges) -> DiscreteState {
    Discretizer::new(nb, *ranges).discretize(raw, FeatureSet::all())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_bins() {
        assert_eq!(bin_index(0.0, 3, (0.0, 1.0)), (0, false));
        assert_eq!(bin_index(0.5, 3, (0.0, 1.0)), (1, false));
        assert_eq!(bin_index(1.0, 3, (0.0, 1.0)), (2, false));
        assert_eq!(bin_index(15.0, 3, (0.0, 15.0)), (2, false));
        assert_eq!(bin_index(4.99, 3, (0.0, 15.0)), (0, false));
        assert_eq!(bin_index(5.0, 3, (0.0, 15.0)), (1, false));
    }

    #[test]
    fn out_of_range_clamps_and_counts() {
        assert_eq!(bin_index(-0.2, 3, (0.0, 1.0)), (0, true));
        assert_eq!(bin_index(7.0, 3, (0.0, 1.0)), (2, true));
        let d = Discretizer::default();
        let raw = RawState {
            tilt_deg: 20.0,
            coverage: 1.0,
            capacity: -1.0,
            quality: 0.1,
        };
        let s = d.discretize(&raw, FeatureSet::all());
        assert_eq!(s.bin(Feature::Tilt), Some(2));
        assert_eq!(s.bin(Feature::Capacity), Some(0));
        assert_eq!(d.clamp_count(), 2);
        assert_eq!(d.clone().clamp_count(), 2);
    }

    #[test]
    fn projection_and_serde() {
        let s = DiscreteState::from_bins([(Feature::Tilt, 1), (Feature::Coverage, 2), (Feature::Quality, 0)]);
        let p = s.project(FeatureSet::empty().with(Feature::Coverage));
        assert_eq!(p.bin(Feature::Coverage), Some(2));
        assert_eq!(p.bin(Feature::Tilt), None);
        assert_eq!(p.to_string(), "coverage=2");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"tilt":1,"coverage":2,"quality":0}"#);
        assert_eq!(serde_json::from_str::<DiscreteState>(&json).unwrap(), s);
    }
}
