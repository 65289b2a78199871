mod args;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use critique_core::fixtures::{housing, listings};
use critique_core::sim::{
    run_sweep, write_aggregate_csv, write_curve_csv, write_runs_csv, CatalogSource,
    HiddenNumericFamily, SimConfig,
};
use critique_core::suggest::{
    counting_scores, probabilistic_scores, select_suggestions, write_score_csv,
};
use critique_core::{
    Catalog, CatalogFormat, CatalogSpec, PreferenceModel, Strategy, SuggestionConfig,
};
use critique_service::ServerConfig;

use args::{
    Cli, Command, FileConfig, GenCatalogArgs, Merge, ServeArgs, SimulateArgs, SuggestArgs,
    DEFAULT_SEED,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    /// Flag combinations clap cannot see, e.g. after merging the config file.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] critique_core::Error),
    #[error(transparent)]
    Service(#[from] critique_service::ServiceError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a flag value; a bad value is a usage error.
fn flag<T>(name: &str, value: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid value `{value}` for --{name}: {e}")))
}

/// A bundled catalog name or a JSON / CSV file.
fn load_catalog(name: &str) -> Result<Catalog> {
    match name {
        "housing" => Ok(housing()),
        "listings" => Ok(listings()),
        path => {
            let path = Path::new(path);
            let format = CatalogFormat::from_path(path);
            Ok(Catalog::load(read(path)?.as_bytes(), format)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = load_file_config(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let scoring = file.scoring.unwrap_or_default();
    match cli.command {
        Command::GenCatalog(a) => gen_catalog(a.merge(file.gen_catalog), seed),
        Command::Suggest(a) => suggest(a.merge(file.suggest), scoring, seed),
        Command::Simulate(a) => {
            let mut from_file = file.simulate;
            if a.catalog.is_some() || a.catalog_spec.is_some() {
                from_file.catalog = None;
                from_file.catalog_spec = None;
            }
            simulate(a.merge(from_file), scoring, seed)
        }
        Command::Serve(a) => serve(a.merge(file.serve), file.service.unwrap_or_default()),
    }
}

fn gen_catalog(a: GenCatalogArgs, seed: u64) -> Result<()> {
    let n = a
        .n
        .ok_or_else(|| CliError::Usage("gen-catalog needs --n".into()))?;
    let attrs = a.attrs.as_deref().unwrap_or("9int");
    let spec = CatalogSpec::parse_attrs(n, attrs)
        .map_err(|e| CliError::Usage(format!("invalid value `{attrs}` for --attrs: {e}")))?;
    let catalog = Catalog::generate(&spec, seed)?;
    let format = match (&a.format, &a.out) {
        (Some(f), _) => flag("format", f)?,
        (None, Some(path)) => CatalogFormat::from_path(path),
        (None, None) => CatalogFormat::Json,
    };
    match &a.out {
        Some(path) => catalog.save(io::BufWriter::new(create(path)?), format)?,
        None => {
            let mut out = io::stdout().lock();
            catalog.save(&mut out, format)?;
            if format == CatalogFormat::Json {
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

fn suggest(a: SuggestArgs, base: SuggestionConfig, seed: u64) -> Result<()> {
    let catalog = load_catalog(
        a.catalog
            .as_deref()
            .ok_or_else(|| CliError::Usage("suggest needs --catalog".into()))?,
    )?;
    let model_path = a
        .model
        .ok_or_else(|| CliError::Usage("suggest needs --model".into()))?;
    let model = PreferenceModel::from_json_str(&read(&model_path)?)?;
    model.validate(&catalog)?;
    let config = SuggestionConfig {
        strategy: a
            .strategy
            .as_deref()
            .map(|v| flag("strategy", v))
            .transpose()?
            .unwrap_or(base.strategy),
        criterion: a
            .criterion
            .as_deref()
            .map(|v| flag("criterion", v))
            .transpose()?
            .unwrap_or(base.criterion),
        set_size: a.set_size.unwrap_or(1),
        seed,
        ..base
    };
    let index = model.build_dominance_index(&catalog, config.criterion)?;
    let scores = match config.strategy {
        Strategy::ProbIndependent | Strategy::ProbJoint => {
            probabilistic_scores(&catalog, &model, &index, &config)?
        }
        _ => counting_scores(&catalog, &index),
    };
    let set = select_suggestions(&catalog, &model, &index, &config, &[])?;
    match &a.out {
        Some(path) => {
            write_score_csv(&catalog, &scores, io::BufWriter::new(create(path)?))?;
            println!("{}", set.ids.join(","));
        }
        None => {
            let mut out = io::stdout().lock();
            write_score_csv(&catalog, &scores, &mut out)?;
            writeln!(out, "# suggestions: {}", set.ids.join(","))?;
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs, scoring: SuggestionConfig, seed: u64) -> Result<()> {
    let (source, label) = match (&a.catalog, &a.catalog_spec) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --catalog or --catalog-spec, not both".into(),
            ))
        }
        (Some(name), None) => (CatalogSource::Fixed(load_catalog(name)?), name.clone()),
        (None, spec) => {
            let spec = spec.as_deref().unwrap_or("rand-50x9int");
            let parsed = CatalogSpec::parse_compact(spec).map_err(|e| {
                CliError::Usage(format!("invalid value `{spec}` for --catalog-spec: {e}"))
            })?;
            (CatalogSource::Generated(parsed), spec.to_string())
        }
    };
    let k = match &source {
        CatalogSource::Fixed(c) => c.schema().len(),
        CatalogSource::Generated(spec) => spec.attributes.len(),
    };
    let m = a.m.unwrap_or(k);
    let strategies = match a.strategy.as_deref().unwrap_or("all") {
        "all" => Strategy::ALL.to_vec(),
        name => vec![flag("strategy", name)?],
    };
    let mut config = SimConfig::new(source, m, a.runs.unwrap_or(100), seed);
    if let Some(family) = &a.hidden_family {
        config.hidden_family = flag::<HiddenNumericFamily>("hidden-family", family)?;
    }
    config.session.scoring = scoring;
    config.session.criterion = config.session.scoring.criterion;
    if let Some(c) = a.candidates {
        config.session.display_candidates = c;
    }
    if let Some(s) = a.suggestions {
        config.session.display_suggestions = s;
    }

    let results = run_sweep(&config, &strategies)?;
    let out_dir = a.out_dir.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(|source| CliError::File {
        path: out_dir.clone(),
        source,
    })?;
    write_runs_csv(&results, io::BufWriter::new(create(&out_dir.join("runs.csv"))?))?;
    write_curve_csv(&results, io::BufWriter::new(create(&out_dir.join("curve.csv"))?))?;
    let rows = [(format!("{label} m={m}"), results)];
    write_aggregate_csv(&rows, io::BufWriter::new(create(&out_dir.join("aggregate.csv"))?))?;
    write_aggregate_csv(&rows, io::stdout().lock())?;
    Ok(())
}

fn serve(a: ServeArgs, service: critique_service::ServiceConfig) -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let host = a.host.as_deref().unwrap_or("127.0.0.1");
    let addr: SocketAddr = format!("{host}:{}", a.port.unwrap_or(8080))
        .parse()
        .map_err(|_| CliError::Usage(format!("`{host}` is not an IP address")))?;
    let config = ServerConfig {
        addr,
        data_dir: a.data_dir,
        session: service,
    };
    let store = config.store()?;
    if let Some(path) = &a.catalog {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let catalog = load_catalog(&path.to_string_lossy())?;
        match store.catalog(&id) {
            Ok(existing) if *existing == catalog => {}
            _ => {
                store.add_catalog(&id, catalog)?;
            }
        }
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(critique_service::serve_store(addr, Arc::new(store)))?;
    Ok(())
}
