//! Bundled catalogs and the configurations that go with them.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{AttributeSchema, Catalog, OptionRecord, Value};
use crate::prefmodel::{Direction, Preference, PreferenceModel};
use crate::suggest::{SuggestionConfig, Strategy};

/// Seven student-housing offers: rent, type, distance (minutes, declared
/// domain [2, 32]) and furnished.
pub const HOUSING_JSON: &str = include_str!("../fixtures/housing.json");
pub const HOUSING_CSV: &str = include_str!("../fixtures/housing.csv");

/// 160 synthetic listings over the ten-attribute accommodation schema.
pub const LISTINGS_JSON: &str = include_str!("../fixtures/listings160.json");

pub fn housing() -> Catalog {
    Catalog::from_json_str(HOUSING_JSON).expect("bundled housing fixture is valid")
}

/// The single stated preference "cheaper is better".
pub fn housing_cheaper() -> PreferenceModel {
    PreferenceModel::new(vec![Preference::directional(
        "rent",
        Direction::SmallerBetter,
        1,
    )])
}

/// Joint probabilistic scoring with step thresholds on numeric attributes and
/// the preferred accommodation type assumed to be a studio or an apartment
/// with equal probability.
pub fn housing_table_config() -> SuggestionConfig {
    let type_prior: BTreeMap<String, f64> = [("room", 0.0), ("studio", 0.5), ("apartment", 0.5)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    SuggestionConfig {
        strategy: Strategy::ProbJoint,
        qualitative_theta_prior: [("type".to_string(), type_prior)].into(),
        ..SuggestionConfig::default()
    }
}

pub fn listings() -> Catalog {
    Catalog::from_json_str(LISTINGS_JSON).expect("bundled listings fixture is valid")
}

/// Regenerate the listings fixture.
pub fn generate_listings(n: usize, seed: u64) -> Catalog {
    let schema = vec![
        AttributeSchema::qualitative(
            "type",
            ["family_room", "shared_room", "studio", "apartment"],
        ),
        AttributeSchema::numeric("rent", 200.0, 1800.0, true),
        AttributeSchema::numeric("rooms", 1.0, 5.0, true),
        AttributeSchema::qualitative("furnished", ["yes", "no"]),
        AttributeSchema::qualitative("bathroom", ["private", "shared"]),
        AttributeSchema::qualitative("kitchen", ["private", "shared"]),
        AttributeSchema::qualitative("transport", ["none", "bus", "subway", "train"]),
        AttributeSchema::numeric("distance_university", 0.0, 60.0, true),
        AttributeSchema::numeric("distance_center", 0.0, 60.0, true),
        AttributeSchema::numeric("surface", 10.0, 120.0, true),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = (1..=n)
        .map(|i| {
            let values = schema
                .iter()
                .map(|attr| match &attr.kind {
                    crate::catalog::AttrKind::Qualitative { values } => {
                        Value::Label(values[rng.gen_range(0..values.len())].clone())
                    }
                    crate::catalog::AttrKind::Numeric { lo, hi, .. } => {
                        Value::Num(rng.gen_range(*lo as i64..=*hi as i64) as f64)
                    }
                })
                .collect();
            OptionRecord::new(format!("f{i:03}"), values)
        })
        .collect();
    Catalog::new(schema, options).expect("generated listings are valid")
}
