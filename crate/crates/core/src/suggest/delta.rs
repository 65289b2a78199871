//! Per-attribute probabilities that a new preference makes an option escape
//! all of its dominators without falling behind any equally ranked option.
//!
//! Each family has a closed form over [`DominatorBounds`]. The numeric forms
//! assume the preference's reference value is uniform over the declared
//! domain and clip every window to that domain.

use std::collections::BTreeSet;

use crate::catalog::{AttrKind, Catalog};
use crate::error::{Error, Result};
use crate::prefmodel::DominanceIndex;

/// Extremes of the dominating values of one option on a numeric attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericBounds {
    pub value: f64,
    /// Smallest value over the dominating set; `None` when it is empty.
    pub low: Option<f64>,
    /// Largest value over the dominating set.
    pub high: Option<f64>,
    /// Greatest value strictly below `value` over dominators and equals.
    pub below: Option<f64>,
    /// Smallest value strictly above `value` over dominators and equals.
    pub above: Option<f64>,
    /// Some dominator shares exactly this value.
    pub dominator_tie: bool,
}

impl NumericBounds {
    /// Bounds against a single other option, used for pairwise estimates.
    pub fn pairwise(value: f64, other: f64) -> Self {
        Self {
            value,
            low: Some(other),
            high: Some(other),
            below: (other < value).then_some(other),
            above: (other > value).then_some(other),
            dominator_tie: other == value,
        }
    }

    fn has_dominators(&self) -> bool {
        self.low.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualitativeBounds {
    pub value: String,
    pub dominator_values: BTreeSet<String>,
    pub equal_values: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DominatorBounds {
    Numeric(NumericBounds),
    Qualitative(QualitativeBounds),
}

impl DominatorBounds {
    pub fn compute(catalog: &Catalog, index: &DominanceIndex, option: usize, attr: usize) -> Self {
        let options = catalog.options();
        let me = &options[option];
        match catalog.schema()[attr].kind {
            AttrKind::Numeric { .. } => {
                let value = me.num(attr);
                let mut bounds = NumericBounds {
                    value,
                    low: None,
                    high: None,
                    below: None,
                    above: None,
                    dominator_tie: false,
                };
                for &d in index.dominators(option) {
                    let v = options[d].num(attr);
                    bounds.low = Some(bounds.low.map_or(v, |l| l.min(v)));
                    bounds.high = Some(bounds.high.map_or(v, |h| h.max(v)));
                    bounds.dominator_tie |= v == value;
                }
                for other in index.potential_dominators(option) {
                    let v = options[other].num(attr);
                    if v < value {
                        bounds.below = Some(bounds.below.map_or(v, |g| g.max(v)));
                    } else if v > value {
                        bounds.above = Some(bounds.above.map_or(v, |s| s.min(v)));
                    }
                }
                DominatorBounds::Numeric(bounds)
            }
            AttrKind::Qualitative { .. } => DominatorBounds::Qualitative(QualitativeBounds {
                value: me.label(attr).to_string(),
                dominator_values: index
                    .dominators(option)
                    .iter()
                    .map(|&d| options[d].label(attr).to_string())
                    .collect(),
                equal_values: index
                    .equals(option)
                    .iter()
                    .map(|&e| options[e].label(attr).to_string())
                    .collect(),
            }),
        }
    }
}

/// Single preferred value on a qualitative attribute: the option wins only if
/// its own value is the preferred one and no dominator shares it. Equal
/// options can never beat it under this family, so they are ignored.
///
/// `prior` is the probability that the option's value is the preferred one.
pub fn delta_qualitative(bounds: &QualitativeBounds, prior: f64) -> f64 {
    if bounds.dominator_values.is_empty() || bounds.dominator_values.contains(&bounds.value) {
        0.0
    } else {
        prior.clamp(0.0, 1.0)
    }
}

/// Monotone preference with unknown direction. `polarity_weight` is the
/// probability that smaller values are preferred.
///
/// Smaller values win only if the option lies below every dominator and no
/// equally ranked option lies below it; larger values symmetrically.
pub fn delta_directional(bounds: &NumericBounds, polarity_weight: f64) -> f64 {
    match (bounds.low, bounds.high) {
        (Some(l), Some(h)) => {
            let smaller = if bounds.value < l && bounds.below.is_none() {
                polarity_weight
            } else {
                0.0
            };
            let larger = if bounds.value > h && bounds.above.is_none() {
                1.0 - polarity_weight
            } else {
                0.0
            };
            smaller + larger
        }
        _ => 0.0,
    }
}

/// `LessThan` / `GreaterThan` threshold with a ramp of width `tolerance`.
///
/// Below every dominator, the option wins when the threshold falls in
/// `(value - t, low)`; above every dominator, when it falls in
/// `(high, value + t)`. An equally ranked option on the favoured side of the
/// value would overtake it anywhere on the ramp, which shrinks that side's
/// window to start (or end) at the value itself. Each side is weighted by the
/// probability of its polarity (`polarity_weight` for `LessThan`).
pub fn delta_threshold(
    bounds: &NumericBounds,
    domain: (f64, f64),
    tolerance: f64,
    polarity_weight: f64,
) -> Result<f64> {
    let range = checked_range(domain)?;
    if !bounds.has_dominators() {
        return Ok(0.0);
    }
    let (lo, hi) = domain;
    let a = bounds.value;
    let mut delta = 0.0;
    // with every dominator above, `below` can only come from an equal option
    if let Some(l) = bounds.low.filter(|&l| a < l) {
        let start = if bounds.below.is_some() { a } else { a - tolerance };
        delta += polarity_weight * window(start, l, lo, hi) / range;
    }
    if let Some(h) = bounds.high.filter(|&h| a > h) {
        let end = if bounds.above.is_some() { a } else { a + tolerance };
        delta += (1.0 - polarity_weight) * window(h, end, lo, hi) / range;
    }
    Ok(delta.clamp(0.0, 1.0))
}

/// Saturated peak of half-width `tolerance`: the reference value has to be
/// closer to this option than to any dominating or equal neighbour, and
/// within tolerance of it. A missing neighbour on one side leaves that side
/// bounded by the tolerance and the domain only.
pub fn delta_peaked(bounds: &NumericBounds, domain: (f64, f64), tolerance: f64) -> Result<f64> {
    let range = checked_range(domain)?;
    if !bounds.has_dominators() || bounds.dominator_tie {
        return Ok(0.0);
    }
    let (lo, hi) = domain;
    let a = bounds.value;
    let start = bounds
        .below
        .map_or(f64::NEG_INFINITY, |g| (a + g) / 2.0)
        .max(a - tolerance);
    let end = bounds
        .above
        .map_or(f64::INFINITY, |s| (a + s) / 2.0)
        .min(a + tolerance);
    Ok((window(start, end, lo, hi) / range).clamp(0.0, 1.0))
}

fn checked_range((lo, hi): (f64, f64)) -> Result<f64> {
    let range = hi - lo;
    if range > 0.0 && range.is_finite() {
        Ok(range)
    } else {
        Err(Error::Domain(format!("attribute range {range} must be positive")))
    }
}

/// Length of `(start, end)` intersected with `[lo, hi]`.
fn window(start: f64, end: f64, lo: f64, hi: f64) -> f64 {
    (end.min(hi) - start.max(lo)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::housing;
    use crate::prefmodel::{Criterion, Direction, Preference, PreferenceModel};

    fn housing_bounds(id: &str, attr: &str) -> DominatorBounds {
        let catalog = housing();
        let model = PreferenceModel::new(vec![Preference::directional(
            "rent",
            Direction::SmallerBetter,
            1,
        )]);
        let index = model
            .build_dominance_index(&catalog, Criterion::Pareto)
            .unwrap();
        DominatorBounds::compute(
            &catalog,
            &index,
            catalog.option_index(id).unwrap(),
            catalog.attr_index(attr).unwrap(),
        )
    }

    fn numeric(b: DominatorBounds) -> NumericBounds {
        match b {
            DominatorBounds::Numeric(n) => n,
            other => panic!("expected numeric bounds, got {other:?}"),
        }
    }

    fn qualitative(b: DominatorBounds) -> QualitativeBounds {
        match b {
            DominatorBounds::Qualitative(q) => q,
            other => panic!("expected qualitative bounds, got {other:?}"),
        }
    }

    #[test]
    fn housing_threshold_deltas() {
        let domain = (2.0, 32.0);
        let expect = [("o2", 0.25), ("o3", 0.05), ("o4", 0.20), ("o5", 0.0), ("o6", 0.05), ("o7", 0.0)];
        for (id, want) in expect {
            let b = numeric(housing_bounds(id, "distance"));
            let got = delta_threshold(&b, domain, 0.0, 0.5).unwrap();
            assert!((got - want).abs() < 1e-12, "{id}: {got} != {want}");
        }
    }

    #[test]
    fn housing_qualitative_deltas() {
        let q = qualitative(housing_bounds("o3", "furnished"));
        assert_eq!(delta_qualitative(&q, 0.5), 0.5);
        let q = qualitative(housing_bounds("o6", "type"));
        assert_eq!(delta_qualitative(&q, 1.0 / 3.0), 0.0);
        let q = qualitative(housing_bounds("o4", "type"));
        assert_eq!(q.dominator_values.iter().collect::<Vec<_>>(), ["room"]);
        assert!((delta_qualitative(&q, 1.0 / 3.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn directional_components() {
        let below = NumericBounds::pairwise(2.0, 5.0);
        assert_eq!(delta_directional(&below, 1.0), 1.0);
        let inside = NumericBounds {
            value: 10.0,
            low: Some(5.0),
            high: Some(20.0),
            below: Some(5.0),
            above: Some(20.0),
            dominator_tie: false,
        };
        assert_eq!(delta_directional(&inside, 0.5), 0.0);
        let above = NumericBounds {
            value: 32.0,
            low: Some(5.0),
            high: Some(17.0),
            below: Some(17.0),
            above: None,
            dominator_tie: false,
        };
        assert_eq!(delta_directional(&above, 1.0), 0.0);
        assert_eq!(delta_directional(&above, 0.0), 1.0);
        assert_eq!(delta_directional(&above, 0.5), 0.5);
    }

    #[test]
    fn peaked_symmetric_window_is_half_the_range() {
        let b = NumericBounds {
            value: 50.0,
            low: Some(0.0),
            high: Some(100.0),
            below: Some(0.0),
            above: Some(100.0),
            dominator_tie: false,
        };
        let d = delta_peaked(&b, (0.0, 100.0), 60.0).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn peaked_tie_with_dominator_is_zero() {
        let b = NumericBounds::pairwise(14.0, 14.0);
        assert_eq!(delta_peaked(&b, (2.0, 32.0), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn peaked_housing_o4() {
        // O^>= of o4 holds distances 17, 32 and 14; nothing lies below 5.
        let b = numeric(housing_bounds("o4", "distance"));
        assert_eq!(b.below, None);
        assert_eq!(b.above, Some(14.0));
        // theta must lie in (max(2, 5-3), min(9.5, 5+3)) = (2, 8)
        let d = delta_peaked(&b, (2.0, 32.0), 3.0).unwrap();
        assert!((d - 0.2).abs() < 1e-12, "{d}");
    }

    #[test]
    fn non_positive_range_is_a_domain_error() {
        let b = NumericBounds::pairwise(1.0, 2.0);
        assert!(matches!(delta_threshold(&b, (3.0, 3.0), 0.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(delta_peaked(&b, (3.0, 1.0), 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn equal_option_on_the_favoured_side_blocks_the_ramp() {
        // dominator at 8, equal option at 3, value 5
        let b = NumericBounds {
            value: 5.0,
            low: Some(8.0),
            high: Some(8.0),
            below: Some(3.0),
            above: Some(8.0),
            dominator_tie: false,
        };
        let d = delta_threshold(&b, (0.0, 10.0), 2.0, 1.0).unwrap();
        assert!((d - 0.3).abs() < 1e-12, "{d}");
        assert_eq!(delta_directional(&b, 1.0), 0.0);
        let free = NumericBounds { below: None, ..b };
        let d = delta_threshold(&free, (0.0, 10.0), 2.0, 1.0).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "{d}");
        assert_eq!(delta_directional(&free, 1.0), 1.0);
    }

    #[test]
    fn threshold_window_is_clipped_to_domain() {
        // value 1 below dominator at 4, tolerance 3 would reach -2
        let b = NumericBounds::pairwise(1.0, 4.0);
        let d = delta_threshold(&b, (0.0, 10.0), 3.0, 1.0).unwrap();
        assert!((d - 0.4).abs() < 1e-12);
    }
}
