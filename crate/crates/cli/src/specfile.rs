//! Metric specification files: the JSON document consumed by every
//! subcommand. The schema ships in `docs/metric_spec.schema.json`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use finsler::chart::ChartMap;
use finsler::expr::{parse, Params};
use finsler::geometry::{Family, MetricSpec, SignatureHint};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpecFile {
    pub dimension: usize,
    pub family: String,
    #[serde(rename = "L")]
    pub lagrangian: String,
    pub domain: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub signature_hint: Option<String>,
    #[serde(default)]
    pub charts: Vec<ChartEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartEntry {
    #[serde(default)]
    pub label: Option<String>,
    pub forward: Vec<String>,
    pub inverse: Vec<String>,
    #[serde(rename = "box")]
    pub validity: Vec<[f64; 2]>,
}

pub struct LoadedSpec {
    pub name: String,
    pub metric: Arc<MetricSpec>,
    pub charts: Vec<(String, ChartMap)>,
}

pub fn load(path: &Path) -> Result<LoadedSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::schema(format!("cannot read {}: {e}", path.display())))?;
    let file: MetricSpecFile = serde_json::from_str(&text)
        .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    let n = file.dimension;
    if n < 2 {
        return Err(CliError::schema("dimension must be at least 2"));
    }
    let family = Family::from_tag(&file.family)
        .ok_or_else(|| CliError::schema(format!("unknown family '{}'", file.family)))?;
    let hint = match &file.signature_hint {
        None => None,
        Some(tag) => Some(
            SignatureHint::from_tag(tag)
                .ok_or_else(|| CliError::schema(format!("unknown signature hint '{tag}'")))?,
        ),
    };
    if file.domain.is_empty() {
        return Err(CliError::schema("the domain needs at least one inequality"));
    }
    let lagrangian = parse(&file.lagrangian, n).map_err(|e| CliError::schema(format!("L: {e}")))?;
    let domain = file
        .domain
        .iter()
        .map(|d| parse(d, n).map_err(|e| CliError::schema(format!("domain '{d}': {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let params: Params = file.params.into_iter().collect();
    let metric = MetricSpec::with_family(n, lagrangian, domain, params.clone(), hint, family)
        .map_err(CliError::from)?;
    let mut charts = Vec::new();
    for (k, entry) in file.charts.iter().enumerate() {
        let label = entry.label.clone().unwrap_or_else(|| format!("chart{k}"));
        let fwd = entry
            .forward
            .iter()
            .map(|e| parse(e, n).map_err(|err| CliError::schema(format!("chart forward: {err}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let inv = entry
            .inverse
            .iter()
            .map(|e| parse(e, n).map_err(|err| CliError::schema(format!("chart inverse: {err}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let validity = entry.validity.iter().map(|b| (b[0], b[1])).collect();
        let chart =
            ChartMap::new(n, fwd, inv, validity, params.clone()).map_err(CliError::from)?;
        charts.push((label, chart));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(LoadedSpec {
        name,
        metric: Arc::new(metric),
        charts,
    })
}
