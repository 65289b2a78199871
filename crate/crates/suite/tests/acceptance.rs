//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the report reads top to bottom:
//! `cargo test -p critique-suite --test acceptance`. Exits non-zero if any
//! criterion fails; nothing here is tuned to make a failing one pass.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use critique_core::fixtures::{housing, housing_cheaper, housing_table_config};
use critique_core::oracle::{
    brute_force_dominance, monte_carlo_delta, optimal_with, random_model, sample_hidden,
};
use critique_core::sim::{derive_seed, run_sweep, CatalogSource, ExperimentResult, SimConfig};
use critique_core::suggest::{
    counting_ranking, counting_scores, group_opt_probability, probabilistic_scores,
    select_suggestions,
};
use critique_core::{
    Catalog, CatalogSpec, Criterion, NumericFamily, PreferenceModel, Strategy, SuggestionConfig,
};
use critique_service::{read_events, ServiceConfig, Session, SessionMeta, Store};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion.
struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../service/fixtures")
        .join(name)
}

fn golden_table() -> Verdict {
    let catalog = housing();
    let model = housing_cheaper();
    let config = housing_table_config();
    let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
    probabilistic_scores(&catalog, &model, &index, &config).unwrap();
    let start = Instant::now();
    let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
    let scores = probabilistic_scores(&catalog, &model, &index, &config).unwrap();
    let elapsed = start.elapsed();
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, want) in [("o2", 0.125), ("o3", 0.451), ("o4", 0.494), ("o6", 0.025)] {
        let got = scores[catalog.option_index(id).unwrap()].f_p.unwrap();
        ok &= (got - want).abs() <= 1e-3;
        parts.push(format!("{id} {got:.4}"));
    }
    let counting = counting_ranking(&counting_scores(&catalog, &index));
    let first = &catalog.options()[counting[0]].id;
    ok &= first == "o2" && elapsed < Duration::from_millis(1);
    Verdict::new(
        ok,
        format!("{}; counting first {first}; {:.3} ms", parts.join(", "), ms(elapsed)),
    )
}

fn delta_golden_values() -> Verdict {
    let catalog = housing();
    let model = housing_cheaper();
    let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
    let scores = probabilistic_scores(&catalog, &model, &index, &housing_table_config()).unwrap();
    let distance = catalog.attr_index("distance").unwrap();
    let furnished = catalog.attr_index("furnished").unwrap();
    let delta = |id: &str, attr: usize| scores[catalog.option_index(id).unwrap()].deltas[attr];
    let expected = [
        ("o2", distance, 0.25),
        ("o3", distance, 0.05),
        ("o4", distance, 0.20),
        ("o6", distance, 0.05),
        ("o3", furnished, 0.5),
        ("o4", furnished, 0.5),
        ("o2", furnished, 0.0),
        ("o6", furnished, 0.0),
    ];
    let mismatches: Vec<String> = expected
        .iter()
        .filter(|(id, attr, want)| (delta(id, *attr) - want).abs() > 1e-12)
        .map(|(id, attr, want)| format!("{id}/{attr}: {} != {want}", delta(id, *attr)))
        .collect();
    Verdict::new(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "threshold 0.25/0.05/0.20/0.05, qualitative 0.5/0.5/0/0".to_string()
        } else {
            mismatches.join("; ")
        },
    )
}

fn sweep(spec: CatalogSpec, m: usize) -> (Vec<ExperimentResult>, Duration) {
    let config = SimConfig::new(CatalogSource::Generated(spec), m, 100, 1);
    let start = Instant::now();
    let results = run_sweep(&config, &Strategy::ALL).unwrap();
    (results, start.elapsed())
}

fn mean(results: &[ExperimentResult], s: Strategy) -> f64 {
    results.iter().find(|r| r.strategy == s).unwrap().mean_fraction
}

fn row(results: &[ExperimentResult]) -> String {
    Strategy::ALL
        .iter()
        .map(|&s| format!("{} {:.3}", s.name(), mean(results, s)))
        .collect::<Vec<_>>()
        .join(", ")
}

const MODEL_BASED: [Strategy; 3] = [Strategy::Counting, Strategy::ProbIndependent, Strategy::ProbJoint];
const BASELINES: [Strategy; 3] = [Strategy::Random, Strategy::Extremes, Strategy::Diversity];

fn table2_row() -> Verdict {
    let (results, elapsed) = sweep(CatalogSpec::integers(50, 9), 9);
    let targets = [(Strategy::Counting, 0.66), (Strategy::ProbIndependent, 0.70), (Strategy::ProbJoint, 0.73)];
    let within = targets
        .iter()
        .all(|&(s, want)| (mean(&results, s) - want).abs() <= 0.12);
    let floor = MODEL_BASED.iter().map(|&s| mean(&results, s)).fold(f64::INFINITY, f64::min);
    let ceiling = BASELINES.iter().map(|&s| mean(&results, s)).fold(0.0, f64::max);
    let gap = floor - ceiling;
    Verdict::new(
        within && gap >= 0.3 && elapsed < Duration::from_secs(120),
        format!("{}; gap {gap:.3}; {:.1} s", row(&results), elapsed.as_secs_f64()),
    )
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn table4_trend() -> Verdict {
    let sizes = [50, 75, 100, 200];
    let rows: Vec<Vec<ExperimentResult>> =
        sizes.iter().map(|&n| sweep(CatalogSpec::mixed(n), 9).0).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in MODEL_BASED {
        let values: Vec<f64> = rows.iter().map(|r| mean(r, s)).collect();
        let d = spread(&values);
        ok &= d <= 0.1;
        parts.push(format!("{} varies {d:.3}", s.name()));
    }
    let drop = mean(&rows[0], Strategy::Random) - mean(&rows[3], Strategy::Random);
    ok &= drop >= 0.15;
    parts.push(format!("random drops {drop:.3}"));
    for (n, r) in sizes.iter().zip(&rows) {
        parts.push(format!("[n={n}: {}]", row(r)));
    }
    Verdict::new(ok, parts.join("; "))
}

fn table1_insensitivity() -> Verdict {
    let rows: Vec<Vec<ExperimentResult>> = [6, 9, 12]
        .iter()
        .map(|&k| sweep(CatalogSpec::integers(50, k), 6).0)
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in MODEL_BASED {
        let values: Vec<f64> = rows.iter().map(|r| mean(r, s)).collect();
        let d = spread(&values);
        ok &= d <= 0.1;
        parts.push(format!(
            "{} {} (varies {d:.3})",
            s.name(),
            values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/")
        ));
    }
    Verdict::new(ok, parts.join("; "))
}

fn instance(seed: u64, n: usize, m: usize) -> (Catalog, PreferenceModel) {
    let spec = CatalogSpec::parse_attrs(n, "4int,2qual3").unwrap();
    let catalog = Catalog::generate(&spec, seed).unwrap();
    let model = random_model(&catalog, m, derive_seed(seed, 99)).unwrap();
    (catalog, model)
}

fn monte_carlo_deltas() -> Verdict {
    let families: [(&str, Option<NumericFamily>); 5] = [
        ("directional", Some(NumericFamily::Directional)),
        ("step", Some(NumericFamily::Threshold { tolerance: 0.0 })),
        ("ramp", Some(NumericFamily::Threshold { tolerance: 15.0 })),
        ("peaked", Some(NumericFamily::Peaked { tolerance: 12.0 })),
        ("qualitative", None),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (f, (name, family)) in families.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + f as u64);
        let mut checked = 0;
        let mut worst: f64 = 0.0;
        let mut seed = 0u64;
        while checked < 50 && seed < 5000 {
            seed += 1;
            let (catalog, model) = instance(derive_seed(f as u64, seed), 15 + rng.gen_range(0..36), 1 + rng.gen_range(0..3));
            let config = SuggestionConfig {
                numeric_family: family.unwrap_or_default(),
                polarity_weight: 0.3,
                ..SuggestionConfig::new(Strategy::ProbJoint, 1)
            };
            let stated = model.stated_attributes(&catalog).unwrap();
            let attrs: Vec<usize> = (0..catalog.schema().len())
                .filter(|a| !stated.contains(a) && catalog.schema()[*a].kind.is_numeric() == family.is_some())
                .collect();
            if attrs.is_empty() {
                continue;
            }
            let attr = attrs[rng.gen_range(0..attrs.len())];
            let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
            let scores = probabilistic_scores(&catalog, &model, &index, &config).unwrap();
            let eligible: Vec<usize> = scores.iter().filter(|s| s.is_eligible()).map(|s| s.option).collect();
            if eligible.is_empty() {
                continue;
            }
            let option = eligible[rng.gen_range(0..eligible.len())];
            let sampled = monte_carlo_delta(&catalog, &model, &config, option, attr, 100_000, seed).unwrap();
            let err = (scores[option].deltas[attr] - sampled).abs();
            worst = worst.max(err);
            checked += 1;
        }
        ok &= checked == 50 && worst <= 0.01;
        parts.push(format!("{name} {checked}x max |err| {worst:.4}"));
    }
    Verdict::new(ok, parts.join(", "))
}

fn dominance_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for seed in 0..100u64 {
        let n = 2 + rng.gen_range(0..49);
        let m = 1 + rng.gen_range(0..5);
        let (catalog, model) = instance(seed, n, m);
        let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
        let oracle = brute_force_dominance(&model.evaluate(&catalog).unwrap().costs);
        for o in 0..catalog.len() {
            let mut d = index.dominators(o).to_vec();
            d.sort_unstable();
            let mut e = index.equals(o).to_vec();
            e.sort_unstable();
            if d != oracle.dominators[o] || e != oracle.equals[o] {
                mismatches += 1;
            }
        }
    }
    // Soundness: an option that becomes optimal through a sampled hidden
    // preference must have had a positive δ on that attribute.
    let mut violations = 0;
    let mut escapes = 0;
    for seed in 0..100u64 {
        let (catalog, model) = instance(500 + seed, 25, 2);
        let config = SuggestionConfig::new(Strategy::ProbJoint, 1);
        let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
        let scores = probabilistic_scores(&catalog, &model, &index, &config).unwrap();
        let stated = model.stated_attributes(&catalog).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for attr in (0..catalog.schema().len()).filter(|a| !stated.contains(a)) {
            for _ in 0..5 {
                let hidden = sample_hidden(&catalog, &config, attr, &mut rng).unwrap();
                for s in scores.iter().filter(|s| s.is_eligible()) {
                    if optimal_with(&catalog, &model, &hidden, s.option).unwrap() {
                        escapes += 1;
                        if s.deltas[attr] <= 0.0 {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    Verdict::new(
        mismatches == 0 && violations == 0 && escapes > 0,
        format!("100 instances, {mismatches} mismatched sets; {escapes} escapes, {violations} with zero delta"),
    )
}

fn greedy_vs_exhaustive() -> Verdict {
    let catalog = housing();
    let model = housing_cheaper();
    let mut config = housing_table_config();
    config.set_size = 2;
    let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
    let scores = probabilistic_scores(&catalog, &model, &index, &config).unwrap();
    let stated = model.stated_attributes(&catalog).unwrap();
    let priors: Vec<f64> = catalog
        .schema()
        .iter()
        .enumerate()
        .map(|(a, s)| if stated.contains(&a) { 0.0 } else { s.prior_weight })
        .collect();
    let eligible: Vec<usize> = scores.iter().filter(|s| s.is_eligible()).map(|s| s.option).collect();
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for (i, &a) in eligible.iter().enumerate() {
        for &b in &eligible[i + 1..] {
            let p = group_opt_probability(&[&scores[a].deltas, &scores[b].deltas], &priors);
            if p > best.0 + 1e-12 {
                best = (p, (a, b));
            }
        }
    }
    let set = select_suggestions(&catalog, &model, &index, &config, &[]).unwrap();
    let greedy = set.objective.unwrap();
    let ids = |o: usize| catalog.options()[o].id.clone();
    let mut exhaustive = vec![ids(best.1 .0), ids(best.1 .1)];
    exhaustive.sort();
    let mut chosen = set.ids.clone();
    chosen.sort();
    let ok = chosen == exhaustive
        && chosen == ["o3", "o4"]
        && (greedy - best.0).abs() < 1e-12
        && (greedy - 0.65625).abs() < 1e-12;
    Verdict::new(
        ok,
        format!("greedy {{{}}} {greedy:.5}, exhaustive {{{}}} {:.5}", set.ids.join(","), exhaustive.join(","), best.0),
    )
}

fn performance() -> Verdict {
    let catalog = Catalog::generate(&CatalogSpec::integers(1000, 10), 42).unwrap();
    let model = random_model(&catalog, 5, 43).unwrap();
    let config = SuggestionConfig::new(Strategy::ProbJoint, 5);
    let start = Instant::now();
    let index = model.build_dominance_index(&catalog, Criterion::Pareto).unwrap();
    let build = start.elapsed();
    let start = Instant::now();
    probabilistic_scores(&catalog, &model, &index, &config).unwrap();
    let scoring = start.elapsed();
    Verdict::new(
        build < Duration::from_secs(1) && scoring < Duration::from_secs(2),
        format!("index {:.1} ms, scoring {:.1} ms (n=1000, k=10, m=5)", ms(build), ms(scoring)),
    )
}

fn service_replay() -> Verdict {
    let sessions = fixture_dir("housing_session").join("sessions");
    let meta: SessionMeta =
        serde_json::from_str(&std::fs::read_to_string(sessions.join("s000001.json")).unwrap()).unwrap();
    let events = read_events(&sessions.join("s000001.jsonl")).unwrap();
    let displays = events.iter().filter(|e| e.kind == critique_service::EventKind::DisplayShown).count();
    let replay = Session::replay(meta, events, &housing(), &ServiceConfig::default());

    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(tmp.path().join("sessions")).unwrap();
    let logs = fixture_dir("stats_logs");
    for entry in std::fs::read_dir(logs.join("sessions")).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, tmp.path().join("sessions").join(path.file_name().unwrap())).unwrap();
    }
    let store = Store::open(tmp.path(), ServiceConfig::default()).unwrap();
    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(logs.join("expected.json")).unwrap()).unwrap();
    let stats = serde_json::json!({ "rows": store.stats(None) });
    let stats_ok = stats == expected;
    Verdict::new(
        replay.is_ok() && stats_ok,
        format!(
            "replay of {displays} displays {}; stats {}",
            match &replay {
                Ok(_) => "identical".to_string(),
                Err(e) => e.to_string(),
            },
            if stats_ok { "match the fixture" } else { "differ from the fixture" }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("housing golden table", golden_table),
        ("delta golden values", delta_golden_values),
        ("9 int attrs / 9 prefs simulation", table2_row),
        ("catalog size trend (mixed)", table4_trend),
        ("attribute count insensitivity", table1_insensitivity),
        ("Monte-Carlo delta oracle", monte_carlo_deltas),
        ("brute-force dominance oracle", dominance_oracle),
        ("greedy set vs exhaustive", greedy_vs_exhaustive),
        ("performance budget", performance),
        ("service replay and stats", service_replay),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let verdict = check();
        if !verdict.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {}",
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
