use critique_core::oracle::{brute_force_dominance, random_model};
use critique_core::sim::{generate_hidden_model, run_session, SessionConfig, SimulatedUser};
use critique_core::suggest::{
    group_opt_probability, probabilistic_ranking, probabilistic_scores, select_suggestions,
};
use critique_core::{
    Catalog, CatalogFormat, CatalogSpec, Comparison, Criterion, Preference, PreferenceModel,
    Strategy as SuggestStrategy, SuggestionConfig, Value,
};
use proptest::prelude::*;

fn catalog_strategy() -> impl Strategy<Value = Catalog> {
    (3usize..40, 0u64..u64::MAX, prop::sample::select(vec!["5int", "3int,2qual3", "2int,1ord,2qual"]))
        .prop_map(|(n, seed, attrs)| {
            Catalog::generate(&CatalogSpec::parse_attrs(n, attrs).unwrap(), seed).unwrap()
        })
}

fn instance() -> impl Strategy<Value = (Catalog, PreferenceModel)> {
    (catalog_strategy(), 1usize..=4, any::<u64>()).prop_map(|(catalog, m, seed)| {
        let m = m.min(catalog.schema().len() - 1);
        let model = random_model(&catalog, m, seed).unwrap();
        (catalog, model)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_sum_preserves_dominance((catalog, model) in instance()) {
        let eval = model.evaluate(&catalog).unwrap();
        let options = catalog.options();
        for a in 0..catalog.len() {
            for b in 0..catalog.len() {
                if model.pareto_dominates(&catalog, &options[a], &options[b]).unwrap() {
                    prop_assert!(eval.utilities[a] > eval.utilities[b]);
                }
            }
        }
    }

    #[test]
    fn index_agrees_with_brute_force((catalog, model) in instance()) {
        let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
        let oracle = brute_force_dominance(&model.evaluate(&catalog).unwrap().costs);
        for o in 0..catalog.len() {
            let mut d = index.dominators(o).to_vec();
            d.sort_unstable();
            let mut e = index.equals(o).to_vec();
            e.sort_unstable();
            prop_assert_eq!(&d, &oracle.dominators[o]);
            prop_assert_eq!(&e, &oracle.equals[o]);
        }
    }

    #[test]
    fn compare_is_a_total_preorder((catalog, model) in instance(), picks in prop::array::uniform3(any::<prop::sample::Index>())) {
        let options = catalog.options();
        let [a, b, c] = picks.map(|i| &options[i.index(options.len())]);
        for pref in &model.preferences {
            let ab = pref.compare(&catalog, a, b).unwrap();
            let ba = pref.compare(&catalog, b, a).unwrap();
            prop_assert_eq!(ab, ba.reverse());
            let bc = pref.compare(&catalog, b, c).unwrap();
            let ac = pref.compare(&catalog, a, c).unwrap();
            let not_worse = |x: Comparison| x != Comparison::Worse;
            if not_worse(ab) && not_worse(bc) {
                prop_assert!(not_worse(ac));
            }
        }
    }

    /// An optimal option with no ties stays optimal whatever is added.
    #[test]
    fn optimal_options_without_ties_survive_growth((catalog, model) in instance(), seed in any::<u64>()) {
        let before = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
        let stated = model.stated_attributes(&catalog).unwrap();
        let free: Vec<usize> = (0..catalog.schema().len()).filter(|a| !stated.contains(a)).collect();
        let extra = random_model(&catalog, catalog.schema().len(), seed).unwrap();
        let added: Preference = extra
            .preferences
            .into_iter()
            .find(|p| catalog.attr_index(&p.attr).map(|a| free.contains(&a)).unwrap_or(false))
            .unwrap();
        let after = model.with(added).build_dominance_index(&catalog, Criterion::Pareto).unwrap();
        for o in 0..catalog.len() {
            if before.is_optimal(o) && before.equals(o).is_empty() {
                prop_assert!(after.is_optimal(o));
            }
            // new dominators can only come from the old dominating or equal set
            for d in after.dominators(o) {
                prop_assert!(before.dominators(o).contains(d) || before.equals(o).contains(d));
            }
        }
    }

    #[test]
    fn catalogs_round_trip(catalog in catalog_strategy()) {
        let json = serde_json::to_string(&catalog.to_json()).unwrap();
        prop_assert_eq!(&Catalog::from_json_str(&json).unwrap(), &catalog);
        let mut csv = Vec::new();
        catalog.save(&mut csv, CatalogFormat::Csv).unwrap();
        prop_assert_eq!(&Catalog::load(csv.as_slice(), CatalogFormat::Csv).unwrap(), &catalog);
    }

    #[test]
    fn models_round_trip((catalog, model) in instance()) {
        let text = model.to_json_string();
        let back = PreferenceModel::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &model);
        back.validate(&catalog).unwrap();
    }

    #[test]
    fn out_of_domain_values_are_rejected(catalog in catalog_strategy(), row in any::<prop::sample::Index>(), col in any::<prop::sample::Index>(), offset in 0.5f64..1000.0) {
        let mut options = catalog.options().to_vec();
        let r = row.index(options.len());
        let c = col.index(catalog.schema().len());
        let attr = &catalog.schema()[c];
        options[r].values[c] = match attr.bounds() {
            Some((_, hi)) => Value::Num(hi + offset),
            None => Value::Label(format!("not-{}", offset)),
        };
        prop_assert!(Catalog::new(catalog.schema().to_vec(), options).is_err());
    }

    #[test]
    fn group_probability_never_drops(rows in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 4), 1..6), priors in prop::collection::vec(0.0f64..=1.0, 4)) {
        let members: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let mut last = 0.0;
        for l in 1..=members.len() {
            let p = group_opt_probability(&members[..l], &priors);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p >= last - 1e-12);
            last = p;
        }
    }

    #[test]
    fn first_pick_is_the_best_single_suggestion((catalog, model) in instance(), joint in any::<bool>()) {
        let strategy = if joint { SuggestStrategy::ProbJoint } else { SuggestStrategy::ProbIndependent };
        let config = SuggestionConfig::new(strategy, 3);
        let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
        let scores = probabilistic_scores(&catalog, &model, &index, &config).unwrap();
        for s in &scores {
            prop_assert!((0.0..=1.0).contains(&s.f_p.unwrap()));
            prop_assert!(s.deltas.iter().all(|d| (0.0..=1.0).contains(d)));
            if !s.is_eligible() {
                prop_assert_eq!(s.f_p, Some(0.0));
            }
        }
        let ranking = probabilistic_ranking(&scores);
        let set = select_suggestions(&catalog, &model, &index, &config, &[]).unwrap();
        prop_assert_eq!(set.options.first(), ranking.first());
        prop_assert_eq!(&set, &select_suggestions(&catalog, &model, &index, &config, &[]).unwrap());
    }

    #[test]
    fn sessions_replay_identically(seed in any::<u64>(), strategy in prop::sample::select(SuggestStrategy::ALL.to_vec())) {
        let catalog = Catalog::generate(&CatalogSpec::integers(25, 5), seed).unwrap();
        let hidden = generate_hidden_model(&catalog, 4, seed ^ 1).unwrap();
        let user = SimulatedUser::new(&catalog, hidden, seed ^ 2).unwrap();
        let config = SessionConfig { strategy, ..SessionConfig::default() };
        let a = run_session(&catalog, &user, &config, seed).unwrap();
        prop_assert!(a.discovered <= 3);
        prop_assert!(a.cycles <= 4);
        prop_assert_eq!(a, run_session(&catalog, &user, &config, seed).unwrap());
    }
}
