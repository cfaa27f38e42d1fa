//! Vulnerability catalogs: records, metric specifications, ingestion and perfect ranks.
//!
//! Record order is the item order used by every [`Rank`] derived from a catalog.
//!
//! Two source formats are supported:
//!
//! * CSV with a header row. `vuln_id` and `asset_id` are required; every other
//!   column is a metric and must be declared by a [`MetricSpec`].
//! * JSON: `{"specs": [{name, direction, bounds?}], "records": [{vuln_id, asset_id, metrics}]}`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rank::{rank_from_scores, Rank, SortDirection, TieScheme};

/// Which end of a metric's scale is riskier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskDirection {
    HigherIsRiskier,
    LowerIsRiskier,
}

impl RiskDirection {
    /// Sort direction that puts the riskiest value at ranking 1.
    pub fn sort_direction(self) -> SortDirection {
        match self {
            RiskDirection::HigherIsRiskier => SortDirection::HigherFirst,
            RiskDirection::LowerIsRiskier => SortDirection::LowerFirst,
        }
    }
}

impl FromStr for RiskDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "higher" | "higher-is-riskier" | "desc" => Ok(RiskDirection::HigherIsRiskier),
            "lower" | "lower-is-riskier" | "asc" => Ok(RiskDirection::LowerIsRiskier),
            other => Err(Error::Validation(format!("unknown metric direction `{other}`"))),
        }
    }
}

impl fmt::Display for RiskDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskDirection::HigherIsRiskier => "higher-is-riskier",
            RiskDirection::LowerIsRiskier => "lower-is-riskier",
        })
    }
}

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Bounds {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Bounds { lo, hi }
    }
}

impl From<Bounds> for [f64; 2] {
    fn from(b: Bounds) -> Self {
        [b.lo, b.hi]
    }
}

impl Bounds {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// CVSS base scores range over `[0.0, 10.0]`.
pub const CVSS_BOUNDS: Bounds = Bounds { lo: 0.0, hi: 10.0 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub direction: RiskDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

impl MetricSpec {
    pub fn new(name: impl Into<String>, direction: RiskDirection) -> Self {
        MetricSpec {
            name: name.into(),
            direction,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some(Bounds { lo, hi });
        self
    }

    /// CVSS base severity: higher is riskier, bounded to `[0, 10]`.
    pub fn cvss(name: impl Into<String>) -> Self {
        MetricSpec {
            name: name.into(),
            direction: RiskDirection::HigherIsRiskier,
            bounds: Some(CVSS_BOUNDS),
        }
    }

    /// Parses `NAME:DIRECTION[:LO..HI]`.
    ///
    /// A metric named `cvss` without explicit bounds gets the CVSS range.
    pub fn parse_flag(flag: &str) -> Result<Self> {
        let mut parts = flag.split(':');
        let name = parts.next().unwrap_or_default().trim();
        let direction = parts
            .next()
            .ok_or_else(|| Error::Validation(format!("metric flag `{flag}` lacks a direction")))?
            .trim()
            .parse()?;
        let bounds = match parts.next() {
            None => None,
            Some(range) => {
                let (lo, hi) = range.split_once("..").ok_or_else(|| {
                    Error::Validation(format!("metric bounds `{range}` must look like LO..HI"))
                })?;
                let parse = |s: &str| {
                    s.trim().parse::<f64>().map_err(|_| {
                        Error::Validation(format!("metric bound `{s}` is not a number"))
                    })
                };
                Some(Bounds {
                    lo: parse(lo)?,
                    hi: parse(hi)?,
                })
            }
        };
        if parts.next().is_some() {
            return Err(Error::Validation(format!("metric flag `{flag}` has too many fields")));
        }
        let mut spec = MetricSpec::new(name, direction);
        spec.bounds = bounds;
        if spec.bounds.is_none() && name.eq_ignore_ascii_case("cvss") {
            spec.bounds = Some(CVSS_BOUNDS);
        }
        Ok(spec)
    }
}

/// One vulnerability occurrence on one asset.
///
/// `values` are index-aligned to the owning catalog's metric specs.
#[derive(Debug, Clone, PartialEq)]
pub struct VulnRecord {
    pub vuln_id: String,
    pub asset_id: String,
    pub values: Vec<f64>,
}

impl VulnRecord {
    pub fn new(vuln_id: impl Into<String>, asset_id: impl Into<String>, values: Vec<f64>) -> Self {
        VulnRecord {
            vuln_id: vuln_id.into(),
            asset_id: asset_id.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Csv,
    Json,
}

impl FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(SourceFormat::Csv),
            "json" => Ok(SourceFormat::Json),
            other => Err(Error::Validation(format!("unknown catalog format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    specs: Vec<MetricSpec>,
    records: Vec<VulnRecord>,
}

impl Catalog {
    /// Builds a catalog, enforcing spec and record invariants.
    pub fn new(specs: Vec<MetricSpec>, records: Vec<VulnRecord>) -> Result<Self> {
        let mut names = HashSet::new();
        for spec in &specs {
            if spec.name.is_empty() {
                return Err(Error::Validation("metric names must be non-empty".into()));
            }
            if spec.name == "vuln_id" || spec.name == "asset_id" {
                return Err(Error::Validation(format!("`{}` is reserved", spec.name)));
            }
            if !names.insert(spec.name.as_str()) {
                return Err(Error::Validation(format!("metric `{}` declared twice", spec.name)));
            }
            if let Some(b) = spec.bounds {
                if !(b.lo.is_finite() && b.hi.is_finite() && b.lo <= b.hi) {
                    return Err(Error::Validation(format!(
                        "metric `{}` has invalid bounds [{}, {}]",
                        spec.name, b.lo, b.hi
                    )));
                }
            }
        }
        let mut keys = HashSet::new();
        for (i, rec) in records.iter().enumerate() {
            validate_record(&specs, rec).map_err(|e| Error::Validation(format!("record {}: {e}", i + 1)))?;
            if !keys.insert((rec.vuln_id.as_str(), rec.asset_id.as_str())) {
                return Err(Error::Validation(format!(
                    "record {}: duplicate (vuln_id, asset_id) pair ({}, {})",
                    i + 1,
                    rec.vuln_id,
                    rec.asset_id
                )));
            }
        }
        Ok(Catalog { specs, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn specs(&self) -> &[MetricSpec] {
        &self.specs
    }

    pub fn records(&self) -> &[VulnRecord] {
        &self.records
    }

    pub fn metric_index(&self, name: &str) -> Result<usize> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownMetric(name.to_string()))
    }

    pub fn spec(&self, name: &str) -> Result<&MetricSpec> {
        Ok(&self.specs[self.metric_index(name)?])
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.metric_index(name)?;
        Ok(self.records.iter().map(|r| r.values[idx]).collect())
    }

    /// The rank obtained by sorting every record by one metric alone; riskiest first.
    pub fn perfect_rank(&self, metric: &str, scheme: TieScheme) -> Result<Rank> {
        let spec = self.spec(metric)?;
        rank_from_scores(&self.column(metric)?, spec.direction.sort_direction(), scheme)
    }

    /// Collapses records with identical metric vectors onto their first occurrence.
    pub fn coalesce_identical(&self) -> (Catalog, Expansion) {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, rec) in self.records.iter().enumerate() {
            // -0.0 == 0.0, so canonicalize before hashing bit patterns.
            let key = rec.values.iter().map(|v| (v + 0.0).to_bits()).collect();
            match index.get(&key) {
                Some(&g) => groups[g].push(i),
                None => {
                    index.insert(key, groups.len());
                    groups.push(vec![i]);
                }
            }
        }
        let records = groups.iter().map(|g| self.records[g[0]].clone()).collect();
        let reduced = Catalog {
            specs: self.specs.clone(),
            records,
        };
        (
            reduced,
            Expansion {
                groups,
                original_len: self.records.len(),
            },
        )
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serialization is infallible")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::Validation(format!("failed to write CSV: {e}"));
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["vuln_id".to_string(), "asset_id".to_string()];
        header.extend(self.specs.iter().map(|s| s.name.clone()));
        w.write_record(&header).map_err(io)?;
        for rec in &self.records {
            let mut row = vec![rec.vuln_id.clone(), rec.asset_id.clone()];
            row.extend(rec.values.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Validation(format!("failed to write CSV: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

fn validate_record(specs: &[MetricSpec], rec: &VulnRecord) -> std::result::Result<(), String> {
    if rec.vuln_id.is_empty() {
        return Err("empty vuln_id".into());
    }
    if rec.values.len() != specs.len() {
        return Err(format!("expected {} metric values, got {}", specs.len(), rec.values.len()));
    }
    for (spec, &v) in specs.iter().zip(&rec.values) {
        if !v.is_finite() {
            return Err(format!("metric `{}` is not finite", spec.name));
        }
        if let Some(b) = spec.bounds {
            if !b.contains(v) {
                return Err(format!(
                    "metric `{}` value {v} outside bounds [{}, {}]",
                    spec.name, b.lo, b.hi
                ));
            }
        }
    }
    Ok(())
}

/// Maps each record of a coalesced catalog back to the original records it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    groups: Vec<Vec<usize>>,
    original_len: usize,
}

impl Expansion {
    pub fn reduced_len(&self) -> usize {
        self.groups.len()
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Original indices (0-based, ascending) represented by reduced record `reduced`.
    pub fn members(&self, reduced: usize) -> &[usize] {
        &self.groups[reduced]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn is_identity(&self) -> bool {
        self.groups.len() == self.original_len
    }

    /// Expands a rank over the reduced catalog to the original records.
    ///
    /// Group members share their representative's ranking; the result is
    /// re-ranked with the mean scheme so tied groups occupy their true positions.
    pub fn expand(&self, reduced: &Rank) -> Result<Rank> {
        if reduced.len() != self.groups.len() {
            return Err(Error::Dimension {
                expected: self.groups.len(),
                actual: reduced.len(),
            });
        }
        let mut values = vec![0.0; self.original_len];
        for (g, members) in self.groups.iter().enumerate() {
            let v = reduced.rankings()[g].as_f64();
            for &m in members {
                values[m] = v;
            }
        }
        rank_from_scores(&values, SortDirection::LowerFirst, TieScheme::Mean)
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

struct RecordView<'a> {
    specs: &'a [MetricSpec],
    record: &'a VulnRecord,
}

struct MetricsView<'a>(&'a [MetricSpec], &'a [f64]);

impl Serialize for MetricsView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (spec, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(&spec.name, v)?;
        }
        map.end()
    }
}

impl Serialize for RecordView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("VulnRecord", 3)?;
        s.serialize_field("vuln_id", &self.record.vuln_id)?;
        s.serialize_field("asset_id", &self.record.asset_id)?;
        s.serialize_field("metrics", &MetricsView(self.specs, &self.record.values))?;
        s.end()
    }
}

impl Serialize for Catalog {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let records: Vec<RecordView<'_>> = self
            .records
            .iter()
            .map(|record| RecordView {
                specs: &self.specs,
                record,
            })
            .collect();
        let mut s = serializer.serialize_struct("Catalog", 2)?;
        s.serialize_field("specs", &self.specs)?;
        s.serialize_field("records", &records)?;
        s.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    specs: Vec<MetricSpec>,
    records: Vec<RawRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    vuln_id: String,
    asset_id: String,
    metrics: BTreeMap<String, f64>,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Reads a catalog from `source`.
///
/// `declared` supplies metric specs: required for CSV (one per metric column),
/// and overriding or extending the embedded `specs` for JSON.
pub fn parse_catalog<R: Read>(source: R, format: SourceFormat, declared: &[MetricSpec]) -> Result<Catalog> {
    match format {
        SourceFormat::Csv => parse_csv(source, declared),
        SourceFormat::Json => parse_json(source, declared),
    }
}

fn parse_csv<R: Read>(source: R, declared: &[MetricSpec]) -> Result<Catalog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let csv_err = |e: csv::Error, field: &str| Error::Parse {
        line: e.position().map(|p| p.line()).unwrap_or(0),
        field: field.to_string(),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(|e| csv_err(e, "header"))?.clone();

    let mut seen = HashSet::new();
    for name in header.iter() {
        if !seen.insert(name) {
            return Err(Error::Parse {
                line: 1,
                field: name.to_string(),
                message: "duplicate column".into(),
            });
        }
    }
    let column = |name: &str| header.iter().position(|h| h == name);
    let vuln_col = column("vuln_id").ok_or_else(|| Error::Parse {
        line: 1,
        field: "vuln_id".into(),
        message: "required column missing".into(),
    })?;
    let asset_col = column("asset_id").ok_or_else(|| Error::Parse {
        line: 1,
        field: "asset_id".into(),
        message: "required column missing".into(),
    })?;

    // Metric columns in file order, each with its declared spec.
    let mut metric_cols = Vec::new();
    let mut specs = Vec::new();
    for (i, name) in header.iter().enumerate() {
        if i == vuln_col || i == asset_col {
            continue;
        }
        let spec = declared
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Validation(format!("column `{name}` has no metric spec")))?;
        metric_cols.push(i);
        specs.push(spec.clone());
    }
    if let Some(missing) = declared.iter().find(|s| column(&s.name).is_none()) {
        return Err(Error::Validation(format!(
            "declared metric `{}` has no column in the CSV header",
            missing.name
        )));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(e, "row"))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let values = metric_cols
            .iter()
            .map(|&c| {
                let field = &header[c];
                let raw = row.get(c).unwrap_or("");
                parse_metric_value(raw).map_err(|message| Error::Parse {
                    line,
                    field: field.to_string(),
                    message,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rec = VulnRecord::new(&row[vuln_col], &row[asset_col], values);
        validate_record(&specs, &rec).map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        records.push(rec);
    }
    Catalog::new(specs, records)
}

fn parse_metric_value(raw: &str) -> std::result::Result<f64, String> {
    if raw.is_empty() {
        return Err("missing metric value".into());
    }
    let v: f64 = raw.parse().map_err(|_| format!("`{raw}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{raw}` is not finite"));
    }
    Ok(v)
}

fn parse_json<R: Read>(source: R, declared: &[MetricSpec]) -> Result<Catalog> {
    let raw: RawCatalog = serde_json::from_reader(source).map_err(|e| Error::Parse {
        line: e.line() as u64,
        field: format!("column {}", e.column()),
        message: e.to_string(),
    })?;
    let mut specs = raw.specs;
    for d in declared {
        match specs.iter_mut().find(|s| s.name == d.name) {
            Some(s) => *s = d.clone(),
            None => specs.push(d.clone()),
        }
    }
    let mut records = Vec::with_capacity(raw.records.len());
    for (i, mut rec) in raw.records.into_iter().enumerate() {
        let mut values = Vec::with_capacity(specs.len());
        for spec in &specs {
            let v = rec.metrics.remove(&spec.name).ok_or_else(|| {
                Error::Validation(format!("records[{i}].metrics.{} is missing", spec.name))
            })?;
            values.push(v);
        }
        if let Some(extra) = rec.metrics.keys().next() {
            return Err(Error::Validation(format!(
                "records[{i}].metrics.{extra} has no metric spec"
            )));
        }
        records.push(VulnRecord::new(rec.vuln_id, rec.asset_id, values));
    }
    Catalog::new(specs, records)
}
