//! Suggestion baselines that ignore dominance: random picks, attribute
//! extremes, and a diverse subset of the best options.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::{AttrKind, Catalog, OptionRecord};
use crate::error::Result;
use crate::prefmodel::PreferenceModel;

pub fn random(catalog: &Catalog, size: usize, seed: u64, excluded: &HashSet<usize>) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..catalog.len()).filter(|i| !excluded.contains(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(size);
    pool
}

/// Minimum then maximum of each unstated numeric attribute, in schema order.
/// Once every attribute has contributed its extremes, the next-most-extreme
/// options follow in the same pattern. Qualitative attributes are skipped.
pub fn extremes(
    catalog: &Catalog,
    model: &PreferenceModel,
    size: usize,
    excluded: &HashSet<usize>,
) -> Result<Vec<usize>> {
    let stated = model.stated_attributes(catalog)?;
    let options = catalog.options();
    let orders: Vec<Vec<usize>> = catalog
        .schema()
        .iter()
        .enumerate()
        .filter(|(i, a)| a.kind.is_numeric() && !stated.contains(i))
        .map(|(attr, _)| {
            let mut order: Vec<usize> = (0..options.len()).collect();
            order.sort_by(|&a, &b| {
                options[a]
                    .num(attr)
                    .total_cmp(&options[b].num(attr))
                    .then_with(|| options[a].id.cmp(&options[b].id))
            });
            order
        })
        .collect();

    let mut chosen = Vec::with_capacity(size);
    let mut seen: HashSet<usize> = excluded.clone();
    let n = options.len();
    'rounds: for rank in 0..n {
        for order in &orders {
            for pick in [order[rank], order[n - 1 - rank]] {
                if chosen.len() >= size {
                    break 'rounds;
                }
                if seen.insert(pick) {
                    chosen.push(pick);
                }
            }
        }
    }
    Ok(chosen)
}

/// Normalized distance between two options, averaged over all attributes:
/// 0/1 on qualitative values, `|Δ| / range` on numeric ones.
pub fn distance(catalog: &Catalog, a: &OptionRecord, b: &OptionRecord) -> f64 {
    let schema = catalog.schema();
    let total: f64 = schema
        .iter()
        .enumerate()
        .map(|(i, attr)| match attr.kind {
            AttrKind::Qualitative { .. } => {
                if a.label(i) == b.label(i) {
                    0.0
                } else {
                    1.0
                }
            }
            AttrKind::Numeric { lo, hi, .. } => (a.num(i) - b.num(i)).abs() / (hi - lo),
        })
        .sum();
    total / schema.len() as f64
}

/// Greedy max-min diverse subset of the `pool` best options by utility,
/// seeded with the best of them.
pub fn diversity(
    catalog: &Catalog,
    model: &PreferenceModel,
    size: usize,
    pool: usize,
    excluded: &HashSet<usize>,
) -> Result<Vec<usize>> {
    let eval = model.evaluate(catalog)?;
    let mut pool: Vec<usize> = eval
        .ranking(catalog)
        .into_iter()
        .filter(|i| !excluded.contains(i))
        .take(pool.max(size))
        .collect();
    let options = catalog.options();
    let mut chosen = Vec::with_capacity(size);
    if pool.is_empty() || size == 0 {
        return Ok(chosen);
    }
    chosen.push(pool.remove(0));
    // distance from each pool member to its nearest chosen option
    let mut nearest: Vec<f64> = pool
        .iter()
        .map(|&p| distance(catalog, &options[p], &options[chosen[0]]))
        .collect();
    while chosen.len() < size && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            // pool is in utility order, so a tie keeps the better option
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        let pick = pool.remove(best);
        nearest.remove(best);
        for (d, &p) in nearest.iter_mut().zip(&pool) {
            *d = d.min(distance(catalog, &options[p], &options[pick]));
        }
        chosen.push(pick);
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{housing, housing_cheaper};

    fn ids(catalog: &Catalog, v: &[usize]) -> Vec<String> {
        v.iter().map(|&i| catalog.options()[i].id.clone()).collect()
    }

    #[test]
    fn random_is_seeded_and_skips_excluded() {
        let catalog = housing();
        let excluded: HashSet<usize> = [0].into();
        let a = random(&catalog, 3, 9, &excluded);
        assert_eq!(a, random(&catalog, 3, 9, &excluded));
        assert_eq!(a.len(), 3);
        assert!(!a.contains(&0));
        let all = random(&catalog, 100, 9, &HashSet::new());
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn extremes_on_distance() {
        let catalog = housing();
        let model = housing_cheaper();
        let picks = extremes(&catalog, &model, 2, &HashSet::new()).unwrap();
        // distance is the only unstated numeric attribute: o6 has 2, o2 and o5 have 32
        assert_eq!(ids(&catalog, &picks), ["o6", "o5"]);
        let all = extremes(&catalog, &model, 7, &HashSet::new()).unwrap();
        assert_eq!(all.len(), 7);
    }

    #[test]
    fn diversity_spreads_out() {
        let catalog = housing();
        let model = housing_cheaper();
        let picks = diversity(&catalog, &model, 2, 20, &HashSet::new()).unwrap();
        assert_eq!(picks[0], 0);
        // o7 is furthest from o1: every attribute differs and rent spans the domain
        assert_eq!(ids(&catalog, &picks)[1], "o7");
        let all = diversity(&catalog, &model, 7, 20, &HashSet::new()).unwrap();
        assert_eq!(all.len(), 7);
    }

    #[test]
    fn distance_is_normalized() {
        let catalog = housing();
        let o = catalog.options();
        assert_eq!(distance(&catalog, &o[0], &o[0]), 0.0);
        let d = distance(&catalog, &o[0], &o[4]);
        let expect = (250.0 / 400.0 + 1.0 + 15.0 / 30.0 + 1.0) / 4.0;
        assert!((d - expect).abs() < 1e-12);
    }
}
