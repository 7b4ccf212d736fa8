use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use semireg_core::geometry::CurvePath;
use semireg_core::MetricField;

/// Errors that map to exit code 2 (bad usage or input).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

/// On-disk metric definition:
/// `{"dim": n, "coords": [..], "metric": [[row 0], [row 1], ..]}`
/// with lower-triangular rows of component expressions.
#[derive(Debug, Deserialize)]
pub struct MetricFile {
    pub dim: usize,
    pub coords: Vec<String>,
    pub metric: Vec<Vec<String>>,
}

pub fn load_metric_file(path: &Path) -> Result<MetricField, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    let file: MetricFile = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("{}: invalid metric file: {e}", path.display())))?;
    if file.coords.len() != file.dim {
        return usage(format!(
            "{}: dim is {} but {} coordinate names given",
            path.display(),
            file.dim,
            file.coords.len()
        ));
    }
    MetricField::parse(&file.coords, &file.metric)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

/// Resolves `--metric FILE` / `--catalog NAME --param k=v`.
pub fn resolve_metric(
    metric: &Option<std::path::PathBuf>,
    catalog: &Option<String>,
    params: &[String],
) -> Result<MetricField, UsageError> {
    match (metric, catalog) {
        (Some(path), None) => {
            if !params.is_empty() {
                return usage("--param is only valid together with --catalog");
            }
            load_metric_file(path)
        }
        (None, Some(name)) => {
            let map = parse_params(params)?;
            semireg_core::catalog::build(name, &map).map_err(|e| UsageError(e.to_string()))
        }
        (None, None) => usage("one of --metric FILE or --catalog NAME is required"),
        (Some(_), Some(_)) => usage("--metric and --catalog are mutually exclusive"),
    }
}

pub fn parse_params(params: &[String]) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for p in params {
        match p.split_once('=') {
            Some((k, v)) if !k.is_empty() => {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            _ => return usage(format!("--param `{p}`: expected k=v")),
        }
    }
    Ok(map)
}

/// One coordinate range of a grid: `steps` evenly spaced samples over
/// `[min, max]` (a single sample sits at `min`).
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    fn value(&self, k: usize) -> f64 {
        if self.steps <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
        }
    }
}

/// Where to evaluate: the cross product of per-coordinate ranges, or a
/// parametrized path.
#[derive(Debug)]
pub enum Region {
    Grid(Vec<Axis>),
    Path {
        path: CurvePath,
        range: Axis,
    },
}

impl Region {
    pub fn points(&self) -> Result<Vec<Vec<f64>>, UsageError> {
        match self {
            Region::Grid(axes) => {
                let mut pts = vec![Vec::new()];
                for axis in axes {
                    let mut next = Vec::with_capacity(pts.len() * axis.steps);
                    for p in &pts {
                        for k in 0..axis.steps {
                            let mut q = p.clone();
                            q.push(axis.value(k));
                            next.push(q);
                        }
                    }
                    pts = next;
                }
                Ok(pts)
            }
            Region::Path { path, range } => (0..range.steps)
                .map(|k| {
                    path.at(range.value(k))
                        .map_err(|e| UsageError(format!("path evaluation failed: {e}")))
                })
                .collect(),
        }
    }

}

fn parse_range(src: &str, what: &str) -> Result<Axis, UsageError> {
    let src = src.trim();
    let parts: Vec<&str> = src.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return usage(format!("{what} `{src}`: expected min:max:steps"));
    }
    let min: f64 = parts[0]
        .parse()
        .map_err(|_| UsageError(format!("{what} `{src}`: bad min")))?;
    let max: f64 = parts[1]
        .parse()
        .map_err(|_| UsageError(format!("{what} `{src}`: bad max")))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| UsageError(format!("{what} `{src}`: bad steps")))?;
    if steps < 1 {
        return usage(format!("{what} `{src}`: steps must be >= 1"));
    }
    if min > max {
        return usage(format!("{what} `{src}`: min > max"));
    }
    Ok(Axis { min, max, steps })
}

/// `--grid x0=-1:1:5,x1=0:0:1` — unmentioned coordinates stay fixed at 0.
pub fn parse_grid(src: &str, field: &MetricField) -> Result<Region, UsageError> {
    let n = field.n();
    let mut axes = vec![
        Axis {
            min: 0.0,
            max: 0.0,
            steps: 1
        };
        n
    ];
    for item in src.split(',') {
        let (name, range) = item
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--grid item `{item}`: expected coord=min:max:steps")))?;
        let idx = coord_index(name.trim(), field)?;
        axes[idx] = parse_range(range.trim(), "--grid range")?;
    }
    Ok(Region::Grid(axes))
}

/// `--path "x0=s,x1=0.5" --range -1:1:201` — coordinate expressions in
/// the parameter `s`; unmentioned coordinates stay fixed at 0.
pub fn parse_path(src: &str, range: &str, field: &MetricField) -> Result<Region, UsageError> {
    let n = field.n();
    let mut sources: Vec<String> = vec!["0".to_string(); n];
    for item in src.split(',') {
        let (name, expr) = item
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--path item `{item}`: expected coord=expr")))?;
        let idx = coord_index(name.trim(), field)?;
        sources[idx] = expr.trim().to_string();
    }
    let path = CurvePath::parse(&sources)
        .map_err(|e| UsageError(format!("--path expression: {e}")))?;
    Ok(Region::Path {
        path,
        range: parse_range(range, "--range")?,
    })
}

fn coord_index(name: &str, field: &MetricField) -> Result<usize, UsageError> {
    if let Some(i) = field.coord_names().iter().position(|c| c == name) {
        return Ok(i);
    }
    if let Some(rest) = name.strip_prefix('x') {
        if let Ok(i) = rest.parse::<usize>() {
            if i < field.n() {
                return Ok(i);
            }
        }
    }
    usage(format!(
        "unknown coordinate `{name}` (have: {})",
        field.coord_names().join(", ")
    ))
}
