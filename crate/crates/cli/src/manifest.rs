//! Run manifests and catalog loading shared by the subcommands.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vulnrank_core::{parse_catalog, Catalog, FitnessKind, MetricSpec, MooConfig, Objective, SourceFormat, TieScheme};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Json,
}

impl From<InputFormat> for SourceFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Csv => SourceFormat::Csv,
            InputFormat::Json => SourceFormat::Json,
        }
    }
}

/// An objective declared as `METRIC:DISTANCE`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveDef {
    pub metric: String,
    pub distance: FitnessKind,
}

impl FromStr for ObjectiveDef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (metric, distance) = s
            .split_once(':')
            .ok_or_else(|| format!("objective `{s}` must look like METRIC:DISTANCE"))?;
        Ok(ObjectiveDef {
            metric: metric.trim().to_string(),
            distance: distance.trim().parse().map_err(|e: vulnrank_core::Error| e.to_string())?,
        })
    }
}

/// Where a catalog comes from and how its metrics are declared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSource {
    pub input: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<InputFormat>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
    /// JSON array of metric specs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_file: Option<PathBuf>,
}

impl CatalogSource {
    pub fn format(&self) -> CliResult<InputFormat> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        match self.input.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Ok(InputFormat::Csv),
            Some(e) if e.eq_ignore_ascii_case("json") => Ok(InputFormat::Json),
            _ => Err(CliError::Usage(format!(
                "cannot infer the format of {}; pass --format",
                self.input.display()
            ))),
        }
    }

    pub fn declared_specs(&self) -> CliResult<Vec<MetricSpec>> {
        let mut specs = match &self.metrics_file {
            Some(path) => {
                let file = open(path)?;
                serde_json::from_reader::<_, Vec<MetricSpec>>(BufReader::new(file))
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => Vec::new(),
        };
        for m in &self.metrics {
            match specs.iter_mut().find(|s| s.name == m.name) {
                Some(s) => *s = m.clone(),
                None => specs.push(m.clone()),
            }
        }
        Ok(specs)
    }

    pub fn load(&self) -> CliResult<Catalog> {
        let format = self.format()?;
        let specs = self.declared_specs()?;
        let file = open(&self.input)?;
        parse_catalog(BufReader::new(file), format.into(), &specs)
            .map_err(|e| CliError::Input(format!("{}: {e}", self.input.display())))
    }

    fn resolve_against(&mut self, base: &Path) {
        self.input = base.join(&self.input);
        if let Some(f) = &self.metrics_file {
            self.metrics_file = Some(base.join(f));
        }
    }
}

pub(crate) fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Everything needed for one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(flatten)]
    pub source: CatalogSource,
    /// Defaults to Spearman fitness on every declared metric.
    #[serde(default)]
    pub objectives: Vec<ObjectiveDef>,
    #[serde(default)]
    pub config: MooConfig,
    #[serde(default)]
    pub tie_scheme: TieScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunManifest {
    /// Reads a JSON manifest; relative paths resolve against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let file = open(path)?;
        let mut manifest: RunManifest = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.source.resolve_against(base);
        if let Some(out) = &manifest.out {
            manifest.out = Some(base.join(out));
        }
        Ok(manifest)
    }

    /// Builds objectives against `catalog`, checking every referenced metric exists.
    pub fn objectives(&self, catalog: &Catalog) -> CliResult<Vec<Objective>> {
        let defs: Vec<ObjectiveDef> = if self.objectives.is_empty() {
            catalog
                .specs()
                .iter()
                .map(|s| ObjectiveDef {
                    metric: s.name.clone(),
                    distance: FitnessKind::Spearman,
                })
                .collect()
        } else {
            self.objectives.clone()
        };
        if defs.is_empty() {
            return Err(CliError::Input("the catalog declares no metrics to optimize".into()));
        }
        defs.iter()
            .map(|d| {
                let mut o = Objective::for_metric(catalog, &d.metric, d.distance, self.tie_scheme)?;
                if defs.iter().filter(|x| x.metric == d.metric).count() > 1 {
                    o.name = format!("{}/{}", d.metric, d.distance);
                }
                Ok(o)
            })
            .collect()
    }
}
