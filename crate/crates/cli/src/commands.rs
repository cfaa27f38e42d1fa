//! Subcommand arguments and implementations.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use vulnrank_core::aggregation::borda_statistics;
use vulnrank_core::{
    borda_aggregate, canberra, evolve, kendall_distance, kendall_normalized, pairwise_majority, scalarize_select,
    spearman_rho, tlo_select, BordaStat, Catalog, MetricSpec, ParetoFront, Rank, RankMatrix, Ranking, ThresholdSpec,
    TieScheme, WeightVector,
};

use crate::error::{CliError, CliResult};
use crate::manifest::{open, CatalogSource, InputFormat, ObjectiveDef, RunManifest};
use crate::output::{to_json, Sink};
use crate::server;

/// Catalog location and metric declarations.
#[derive(Debug, Clone, Default, Args)]
pub struct CatalogArgs {
    /// Catalog file (CSV or JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Catalog format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Metric declaration, e.g. `cvss:higher:0..10` (repeatable).
    #[arg(long = "metric", value_name = "NAME:DIR[:LO..HI]", value_parser = MetricSpec::parse_flag)]
    pub metrics: Vec<MetricSpec>,
    /// JSON array of metric specs.
    #[arg(long)]
    pub metrics_file: Option<PathBuf>,
}

impl CatalogArgs {
    fn source(&self) -> Option<CatalogSource> {
        self.input.as_ref().map(|input| CatalogSource {
            input: input.clone(),
            format: self.format,
            metrics: self.metrics.clone(),
            metrics_file: self.metrics_file.clone(),
        })
    }

    fn load(&self) -> CliResult<Option<Catalog>> {
        self.source().map(|s| s.load()).transpose()
    }
}

fn parse_tie_scheme(s: &str) -> Result<TieScheme, String> {
    s.parse().map_err(|e: vulnrank_core::Error| e.to_string())
}

// ---------------------------------------------------------------- optimize

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// JSON run manifest; flags given alongside it override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub catalog: CatalogArgs,
    /// Objective as `METRIC:DISTANCE` with DISTANCE one of spearman, kendall, canberra
    /// (repeatable; default: spearman on every metric).
    #[arg(long = "objective", value_name = "METRIC:DISTANCE")]
    pub objectives: Vec<ObjectiveDef>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    /// Per-gene swap probability (default 1/n).
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// Start from a random population only.
    #[arg(long)]
    pub no_seed_extremes: bool,
    /// Tie scheme for perfect ranks: min, max, dense or mean.
    #[arg(long, value_parser = parse_tie_scheme)]
    pub tie_scheme: Option<TieScheme>,
    /// Output file for the front (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OptimizeArgs {
    pub fn manifest(&self) -> CliResult<RunManifest> {
        let mut m = match &self.manifest {
            Some(path) => RunManifest::load(path)?,
            None => {
                let input = self
                    .catalog
                    .input
                    .clone()
                    .ok_or_else(|| CliError::Usage("optimize needs --manifest or --input".into()))?;
                RunManifest {
                    source: CatalogSource {
                        input,
                        format: None,
                        metrics: Vec::new(),
                        metrics_file: None,
                    },
                    objectives: Vec::new(),
                    config: Default::default(),
                    tie_scheme: TieScheme::default(),
                    out: None,
                }
            }
        };
        let c = &self.catalog;
        if let Some(input) = &c.input {
            m.source.input = input.clone();
        }
        if c.format.is_some() {
            m.source.format = c.format;
        }
        if c.metrics_file.is_some() {
            m.source.metrics_file = c.metrics_file.clone();
        }
        for spec in &c.metrics {
            match m.source.metrics.iter_mut().find(|s| s.name == spec.name) {
                Some(s) => *s = spec.clone(),
                None => m.source.metrics.push(spec.clone()),
            }
        }
        if !self.objectives.is_empty() {
            m.objectives = self.objectives.clone();
        }
        let cfg = &mut m.config;
        if let Some(v) = self.population {
            cfg.population_size = v;
        }
        if let Some(v) = self.generations {
            cfg.generations = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.crossover_rate {
            cfg.crossover_rate = v;
        }
        if self.mutation_rate.is_some() {
            cfg.mutation_rate = self.mutation_rate;
        }
        if self.no_seed_extremes {
            cfg.seed_extremes = false;
        }
        if let Some(s) = self.tie_scheme {
            m.tie_scheme = s;
        }
        if self.out.is_some() {
            m.out = self.out.clone();
        }
        Ok(m)
    }
}

/// Loads the catalog and runs the search described by `manifest`.
pub fn run_manifest(manifest: &RunManifest) -> CliResult<(Catalog, ParetoFront)> {
    let catalog = manifest.source.load()?;
    let objectives = manifest.objectives(&catalog)?;
    let front = evolve(&catalog, &objectives, manifest.config.clone())?;
    Ok((catalog, front))
}

pub fn front_summary(front: &ParetoFront) -> String {
    let mut s = format!(
        "front: {} members, {} distinct fitness vectors, {} objectives, {} items\n",
        front.len(),
        front.distinct_fitness().len(),
        front.objectives().len(),
        front.item_count()
    );
    for (o, (lo, hi)) in front.objectives().iter().zip(front.fitness_ranges()) {
        let _ = writeln!(s, "  {} ({}): {lo} .. {hi}", o.name, o.distance);
    }
    s
}

pub fn optimize(args: OptimizeArgs) -> CliResult<()> {
    let manifest = args.manifest()?;
    let (_, front) = run_manifest(&manifest)?;
    Sink::new(manifest.out.clone()).emit(&front.to_json(), &front_summary(&front))
}

// --------------------------------------------------------------- aggregate

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Mean,
    Median,
    GeometricMean,
    L2Norm,
}

impl From<StatArg> for BordaStat {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Mean => BordaStat::ArithmeticMean,
            StatArg::Median => BordaStat::Median,
            StatArg::GeometricMean => BordaStat::GeometricMean,
            StatArg::L2Norm => BordaStat::L2Norm,
        }
    }
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// JSON array of ranks, one array of rank values per ranker.
    #[arg(long, conflicts_with = "input")]
    pub ranks: Option<PathBuf>,
    /// Alternatively, aggregate the perfect ranks of a catalog's metrics.
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long, value_enum, default_value = "mean")]
    pub stat: StatArg,
    /// Tie scheme for the aggregate (and for catalog perfect ranks).
    #[arg(long, value_parser = parse_tie_scheme, default_value = "mean")]
    pub tie_scheme: TieScheme,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ItemId<'a> {
    vuln_id: &'a str,
    asset_id: &'a str,
}

#[derive(Debug, Serialize)]
struct AggregateOutput<'a> {
    stat: &'static str,
    tie_scheme: TieScheme,
    rank: Rank,
    statistics: Vec<f64>,
    cycle_detected: bool,
    majority: Vec<vulnrank_core::aggregation::PairPreference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    items: Option<Vec<ItemId<'a>>>,
}

pub const CYCLE_WARNING: &str =
    "warning: pairwise majority preferences form a cycle; no aggregate rank agrees with every majority";

pub fn aggregate(args: AggregateArgs) -> CliResult<()> {
    let catalog = args.catalog.load()?;
    let ranks: Vec<Rank> = match (&args.ranks, &catalog) {
        (Some(path), _) => read_json(path)?,
        (None, Some(c)) => c
            .specs()
            .iter()
            .map(|s| c.perfect_rank(&s.name, args.tie_scheme))
            .collect::<vulnrank_core::Result<_>>()?,
        (None, None) => return Err(CliError::Usage("aggregate needs --ranks or --input".into())),
    };
    let matrix = RankMatrix::new(ranks)?;
    let stat = BordaStat::from(args.stat);
    let rank = borda_aggregate(&matrix, stat, args.tie_scheme);
    let report = pairwise_majority(&matrix);
    let out = AggregateOutput {
        stat: stat.name(),
        tie_scheme: args.tie_scheme,
        statistics: borda_statistics(&matrix, stat),
        cycle_detected: report.cycle_detected,
        majority: report.pairs,
        items: catalog.as_ref().map(|c| {
            c.records()
                .iter()
                .map(|r| ItemId {
                    vuln_id: &r.vuln_id,
                    asset_id: &r.asset_id,
                })
                .collect()
        }),
        rank,
    };
    let mut summary = format!(
        "{} ranks over {} items, {} aggregate: {}\n",
        matrix.ranker_count(),
        matrix.item_count(),
        stat.name(),
        out.rank
    );
    if out.cycle_detected {
        summary.push_str(CYCLE_WARNING);
    }
    Sink::new(args.out).emit(&to_json(&out), &summary)
}

// ---------------------------------------------------------------- distance

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceMetric {
    Canberra,
    Spearman,
    Kendall,
    KendallNormalized,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// First rank: a JSON file, or an inline JSON array such as `[1,2,3]`.
    #[arg(long)]
    pub a: String,
    /// Second rank, same forms as `--a`.
    #[arg(long)]
    pub b: String,
    #[arg(long, value_enum)]
    pub metric: DistanceMetric,
}

fn read_rank_arg(arg: &str) -> CliResult<Rank> {
    if arg.trim_start().starts_with('[') {
        serde_json::from_str(arg).map_err(|e| CliError::Input(format!("rank `{arg}`: {e}")))
    } else {
        read_json(Path::new(arg))
    }
}

pub fn distance_value(a: &Rank, b: &Rank, metric: DistanceMetric) -> CliResult<String> {
    Ok(match metric {
        DistanceMetric::Canberra => format!("{:?}", canberra(a, b)?),
        DistanceMetric::Spearman => format!("{:?}", spearman_rho(a, b)?),
        DistanceMetric::Kendall => kendall_distance(a, b)?.to_string(),
        DistanceMetric::KendallNormalized => format!("{:?}", kendall_normalized(a, b)?),
    })
}

pub fn distance(args: DistanceArgs) -> CliResult<()> {
    let a = read_rank_arg(&args.a)?;
    let b = read_rank_arg(&args.b)?;
    println!("{}", distance_value(&a, &b, args.metric)?);
    Ok(())
}

// ------------------------------------------------------------------ select

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["weights", "thresholds"])))]
pub struct SelectArgs {
    /// Front JSON written by `optimize`.
    #[arg(long)]
    pub front: PathBuf,
    /// Comma-separated objective weights summing to 1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    /// Comma-separated fitness ceilings per objective; `inf` for none.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Option<Vec<f64>>,
    /// Objective priority for thresholded selection, by index or name (default: front order).
    #[arg(long, value_delimiter = ',', requires = "thresholds")]
    pub priority: Option<Vec<String>>,
    /// Catalog used to attach vuln_id/asset_id to the selected rank.
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One row of a priority rank, in priority order.
#[derive(Debug, Clone, Serialize)]
pub struct PriorityEntry {
    pub item: usize,
    pub ranking: Ranking,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vuln_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asset_id: Option<String>,
}

/// A front member with its rank laid out as a vulnerability table.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionView {
    pub id: usize,
    pub fitness: Vec<f64>,
    pub genome: Rank,
    pub priority: Vec<PriorityEntry>,
}

impl SolutionView {
    /// `catalog`, when present, must have the front's item count.
    pub fn new(front: &ParetoFront, id: usize, catalog: Option<&Catalog>) -> Option<Self> {
        let member = front.members().get(id)?;
        let order = member.genome.to_order().expect("front genomes are permutations");
        let priority = order
            .into_iter()
            .map(|item| {
                let record = catalog.map(|c| &c.records()[item]);
                PriorityEntry {
                    item,
                    ranking: member.genome.rankings()[item],
                    vuln_id: record.map(|r| r.vuln_id.clone()),
                    asset_id: record.map(|r| r.asset_id.clone()),
                }
            })
            .collect();
        Some(SolutionView {
            id,
            fitness: member.fitness.clone(),
            genome: member.genome.clone(),
            priority,
        })
    }
}

pub fn check_join(front: &ParetoFront, catalog: &Catalog) -> CliResult<()> {
    if !front.is_empty() && front.item_count() != catalog.len() {
        return Err(CliError::Input(format!(
            "front ranks {} items but the catalog has {} records",
            front.item_count(),
            catalog.len()
        )));
    }
    Ok(())
}

pub fn load_front(path: &Path) -> CliResult<ParetoFront> {
    let mut json = String::new();
    open(path)?
        .read_to_string(&mut json)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    ParetoFront::from_json(&json).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_priority(raw: &[String], front: &ParetoFront) -> CliResult<Vec<usize>> {
    raw.iter()
        .map(|p| {
            let p = p.trim();
            p.parse::<usize>()
                .ok()
                .or_else(|| front.objectives().iter().position(|o| o.name == p))
                .ok_or_else(|| CliError::Input(format!("unknown objective `{p}` in --priority")))
        })
        .collect()
}

pub fn select(args: SelectArgs) -> CliResult<()> {
    let front = load_front(&args.front)?;
    let catalog = args.catalog.load()?;
    if let Some(c) = &catalog {
        check_join(&front, c)?;
    }
    let sink = Sink::new(args.out);
    let k = front.objectives().len();
    let id = if let Some(weights) = args.weights {
        scalarize_select(&front, &WeightVector::new(weights)?)?.index
    } else {
        let thresholds = args.thresholds.unwrap_or_default();
        let priority = match &args.priority {
            Some(p) => parse_priority(p, &front)?,
            None => (0..k).collect(),
        };
        let spec = ThresholdSpec::new(thresholds, priority)?;
        match tlo_select(&front, &spec)? {
            Some(s) => s.index,
            None => {
                println!("no survivor: every front member exceeds at least one threshold");
                return Ok(());
            }
        }
    };
    let view = SolutionView::new(&front, id, catalog.as_ref()).expect("selected index is in range");
    let summary = format!(
        "selected member {id} of {}: fitness {:?}\npriority rank: {}",
        front.len(),
        view.fitness,
        view.genome
    );
    sink.emit(&to_json(&view), &summary)
}

// ------------------------------------------------------------------- serve

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["front", "manifest"])))]
pub struct ServeArgs {
    /// Front JSON to serve.
    #[arg(long)]
    pub front: Option<PathBuf>,
    /// Run manifest to optimize before serving.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Catalog for the vuln_id/asset_id join when serving a front file.
    #[command(flatten)]
    pub catalog: CatalogArgs,
    #[arg(long, value_name = "HOST:PORT", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Directory holding the built UI bundle.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

pub fn serve(args: ServeArgs) -> CliResult<()> {
    let (front, catalog) = match (&args.front, &args.manifest) {
        (Some(path), _) => {
            let front = load_front(path)?;
            let catalog = args.catalog.load()?;
            (front, catalog)
        }
        (None, Some(path)) => {
            let manifest = RunManifest::load(path)?;
            let (catalog, front) = run_manifest(&manifest)?;
            if let Some(out) = &manifest.out {
                crate::output::write_atomic(out, front.to_json().as_bytes())?;
            }
            (front, Some(catalog))
        }
        (None, None) => return Err(CliError::Usage("serve needs --front or --manifest".into())),
    };
    if let Some(dir) = &args.ui_dir {
        if !dir.is_dir() {
            return Err(CliError::Input(format!("UI directory {} does not exist", dir.display())));
        }
    }
    let state = server::ServeState::new(front, catalog)?;
    print!("{}", front_summary(state.front()));
    server::run_blocking(state, &args.bind, args.ui_dir)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let file = open(path)?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
