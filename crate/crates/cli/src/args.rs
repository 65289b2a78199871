//! Command-line flags and their config-file counterparts.
//!
//! Every flag can also be set in the JSON file passed with `--config`; a
//! flag given on the command line wins. Each subcommand reads its own
//! section of the file:
//!
//! ```json
//! { "seed": 7,
//!   "simulate": { "catalog_spec": "rand-50x9int", "m": 9, "runs": 100 },
//!   "scoring": { "polarity_weight": 0.5 } }
//! ```

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use critique_core::SuggestionConfig;
use critique_service::ServiceConfig;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "critique", version, about = "Example-critiquing search with look-ahead suggestions")]
pub struct Cli {
    /// Master random seed [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// JSON file with defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random catalog
    GenCatalog(GenCatalogArgs),
    /// Score a catalog under a preference model and pick suggestions
    Suggest(SuggestArgs),
    /// Run simulated-user experiments
    Simulate(SimulateArgs),
    /// Start the HTTP session service
    Serve(ServeArgs),
}

/// Fill every `None` in `self` from `file`.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenCatalogArgs {
    /// Number of options
    #[arg(long)]
    pub n: Option<usize>,
    /// Attribute list, e.g. `9int`, `5int,2qual,2ord`, `mixed` [default: 9int]
    #[arg(long)]
    pub attrs: Option<String>,
    /// Output file; `.csv` selects CSV, anything else JSON [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Force the output format (json or csv)
    #[arg(long)]
    pub format: Option<String>,
}
merge_fields!(GenCatalogArgs { n, attrs, out, format });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestArgs {
    /// Catalog file (JSON or CSV) or a bundled name: housing, listings
    #[arg(long)]
    pub catalog: Option<String>,
    /// Preference model JSON file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// counting, prob1, prob2 (alias prob), random, extremes or diversity [default: prob2]
    #[arg(long)]
    pub strategy: Option<String>,
    /// pareto or utility [default: pareto]
    #[arg(long)]
    pub criterion: Option<String>,
    /// Number of suggestions [default: 1]
    #[arg(long = "set")]
    #[serde(rename = "set")]
    pub set_size: Option<usize>,
    /// Score CSV destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(SuggestArgs { catalog, model, strategy, criterion, set_size, out });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Fixed catalog file or bundled name, reused for every run
    #[arg(long, conflicts_with = "catalog_spec")]
    pub catalog: Option<String>,
    /// Random catalog per run, e.g. `rand-50x9int`, `rand-100xmixed` [default: rand-50x9int]
    #[arg(long)]
    pub catalog_spec: Option<String>,
    /// Hidden preferences per simulated user [default: all attributes]
    #[arg(long)]
    pub m: Option<usize>,
    /// Runs per strategy [default: 100]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Strategy name or `all` [default: all]
    #[arg(long)]
    pub strategy: Option<String>,
    /// Best-ranked candidates shown with the suggestions [default: 0]
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Suggestions per cycle [default: 5]
    #[arg(long)]
    pub suggestions: Option<usize>,
    /// Shape of hidden numeric preferences: peaked or threshold [default: peaked]
    #[arg(long)]
    pub hidden_family: Option<String>,
    /// Directory for runs.csv, aggregate.csv and curve.csv [default: .]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
merge_fields!(SimulateArgs {
    catalog,
    catalog_spec,
    m,
    runs,
    strategy,
    candidates,
    suggestions,
    hidden_family,
    out_dir,
});

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeArgs {
    /// Listening port [default: 8080]
    #[arg(long)]
    pub port: Option<u16>,
    /// Listening address [default: 127.0.0.1]
    #[arg(long)]
    pub host: Option<String>,
    /// Persist sessions and uploaded catalogs here
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Extra catalog file to register, under its file stem
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}
merge_fields!(ServeArgs { port, host, data_dir, catalog });

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub gen_catalog: GenCatalogArgs,
    pub suggest: SuggestArgs,
    pub simulate: SimulateArgs,
    pub serve: ServeArgs,
    /// Scoring parameters for `suggest` and `simulate`.
    pub scoring: Option<SuggestionConfig>,
    /// Display and relational-preference settings for `serve`.
    pub service: Option<ServiceConfig>,
}
