//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with [`DominanceIndex`](crate::DominanceIndex) or
//! the closed-form δ functions: dominance is re-derived with plain nested
//! loops and escape probabilities are estimated by drawing the hidden
//! preference and testing the outcome directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{AttrKind, Catalog};
use crate::error::{Error, Result};
use crate::prefmodel::{Direction, Polarity, Preference, PreferenceModel};
use crate::suggest::{NumericFamily, SuggestionConfig};

/// Dominating and equal sets computed pair by pair, both sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceDominance {
    pub dominators: Vec<Vec<usize>>,
    pub equals: Vec<Vec<usize>>,
}

pub fn brute_force_dominance(costs: &[Vec<f64>]) -> BruteForceDominance {
    let n = costs.len();
    let mut dominators = vec![Vec::new(); n];
    let mut equals = vec![Vec::new(); n];
    for o in 0..n {
        for p in 0..n {
            if o == p {
                continue;
            }
            let mut never_worse = true;
            let mut sometimes_better = false;
            for (cp, co) in costs[p].iter().zip(&costs[o]) {
                if cp > co {
                    never_worse = false;
                }
                if cp < co {
                    sometimes_better = true;
                }
            }
            if never_worse && sometimes_better {
                dominators[o].push(p);
            } else if never_worse {
                equals[o].push(p);
            }
        }
    }
    BruteForceDominance { dominators, equals }
}

/// Whether `option` is Pareto-optimal in the whole catalog under `model`
/// extended by `extra`.
pub fn optimal_with(
    catalog: &Catalog,
    model: &PreferenceModel,
    extra: &Preference,
    option: usize,
) -> Result<bool> {
    let grown = model.with(extra.clone());
    let costs = grown.evaluate(catalog)?.costs;
    Ok(brute_force_dominance(&costs).dominators[option].is_empty())
}

/// Draw one hidden preference on `attr` from the distribution the scoring
/// configuration assumes.
pub fn sample_hidden(
    catalog: &Catalog,
    config: &SuggestionConfig,
    attr: usize,
    rng: &mut impl Rng,
) -> Result<Preference> {
    let schema = &catalog.schema()[attr];
    let name = schema.name.clone();
    match &schema.kind {
        AttrKind::Qualitative { values } => {
            let probs: Vec<f64> = values
                .iter()
                .map(|v| match config.qualitative_theta_prior.get(&name) {
                    Some(prior) => prior.get(v).copied().unwrap_or(0.0),
                    None => schema.value_probability(v),
                })
                .collect();
            let mut u: f64 = rng.gen();
            let mut pick = values.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                if u < *p {
                    pick = i;
                    break;
                }
                u -= p;
            }
            Ok(Preference::qualitative(name, values[pick].clone(), 1))
        }
        AttrKind::Numeric { lo, hi, .. } => {
            let family = config
                .numeric_families
                .get(&name)
                .copied()
                .unwrap_or(config.numeric_family);
            let smaller = rng.gen_bool(config.polarity_weight);
            let theta = rng.gen_range(*lo..=*hi);
            Ok(match family {
                NumericFamily::Directional => {
                    let direction = if smaller {
                        Direction::SmallerBetter
                    } else {
                        Direction::LargerBetter
                    };
                    Preference::directional(name, direction, 1)
                }
                NumericFamily::Threshold { tolerance } => {
                    let polarity = if smaller {
                        Polarity::LessThan
                    } else {
                        Polarity::GreaterThan
                    };
                    Preference::threshold(name, polarity, theta, tolerance, 1)
                }
                NumericFamily::Peaked { tolerance } => {
                    Preference::peaked(name, theta, tolerance, 1)
                }
            })
        }
    }
}

/// Share of `samples` hidden preferences on `attr` under which `option`
/// becomes Pareto-optimal.
///
/// Only the option's current dominating and equal sets are re-examined per
/// draw: any other option is strictly worse on some stated preference and
/// cannot dominate it after one more preference.
pub fn monte_carlo_delta(
    catalog: &Catalog,
    model: &PreferenceModel,
    config: &SuggestionConfig,
    option: usize,
    attr: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let costs = model.evaluate(catalog)?.costs;
    let sets = brute_force_dominance(&costs);
    let dominators = &sets.dominators[option];
    if dominators.is_empty() {
        return Ok(0.0);
    }
    let equals = &sets.equals[option];
    let options = catalog.options();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let hidden = sample_hidden(catalog, config, attr, &mut rng)?.bind(catalog)?;
        let mine = hidden.cost(&options[option]);
        let escapes = dominators.iter().all(|&d| hidden.cost(&options[d]) > mine)
            && equals.iter().all(|&e| hidden.cost(&options[e]) >= mine);
        hits += usize::from(escapes);
    }
    Ok(hits as f64 / samples as f64)
}

/// Random preferences on `m` distinct attributes, mixing every family that
/// applies to each attribute kind.
pub fn random_model(catalog: &Catalog, m: usize, seed: u64) -> Result<PreferenceModel> {
    let k = catalog.schema().len();
    if m == 0 || m > k {
        return Err(Error::Config(format!("cannot state {m} preferences over {k} attributes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attrs = rand::seq::index::sample(&mut rng, k, m);
    let preferences = attrs
        .iter()
        .map(|a| {
            let schema = &catalog.schema()[a];
            let name = schema.name.clone();
            let weight = rng.gen_range(1..=5);
            match &schema.kind {
                AttrKind::Qualitative { values } => Preference::qualitative(
                    name,
                    values[rng.gen_range(0..values.len())].clone(),
                    weight,
                ),
                AttrKind::Numeric { lo, hi, .. } => {
                    let theta = rng.gen_range(*lo..=*hi);
                    let tolerance = rng.gen_range(0.0..0.3) * (hi - lo);
                    match rng.gen_range(0..4) {
                        0 => Preference::directional(name, Direction::SmallerBetter, weight),
                        1 => Preference::directional(name, Direction::LargerBetter, weight),
                        2 => {
                            let polarity = if rng.gen_bool(0.5) {
                                Polarity::LessThan
                            } else {
                                Polarity::GreaterThan
                            };
                            Preference::threshold(name, polarity, theta, tolerance, weight)
                        }
                        _ => Preference::peaked(name, theta, tolerance.max(1e-3), weight),
                    }
                }
            }
        })
        .collect();
    Ok(PreferenceModel::new(preferences))
}
