//! File formats: the long-format edge list, the chain CSV, delimited
//! tables, and the JSON run manifest. All writers go through a
//! write-then-rename so failed runs leave no partial outputs.

use anyhow::{anyhow, bail, Context, Result};
use gpnet_core::net::theta_of_zeta;
use gpnet_core::sampler::{AcceptanceRates, ChainOutput, SamplerConfig};
use gpnet_core::{Dynamics, ModelSpec, ParamState, TemporalNetwork};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Write a file atomically: the content lands under a temporary name and
/// is renamed into place only when fully written.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Read an edge-list file into a network.
///
/// The format is delimited text with header `t,i,j,count`: `t` is a
/// 1-based integer time, `i` and `j` are node labels, and `count` is a
/// nonnegative integer or the literal `NA` (case-insensitive) for a
/// missing entry. Unlisted pairs are zero; labels map to dense indices in
/// first-appearance order; at most one record per unordered pair per time.
pub fn ingest_edges(path: &Path) -> Result<TemporalNetwork> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (_, header) = lines.next().ok_or_else(|| anyhow!("empty edge file"))?;
    let header_fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if header_fields != ["t", "i", "j", "count"] {
        bail!("expected header 't,i,j,count', found '{header}'");
    }

    struct Record {
        line_no: usize,
        t: usize,
        a: usize,
        b: usize,
        count: Option<u64>,
    }
    let mut labels: Vec<String> = Vec::new();
    let mut label_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut records: Vec<Record> = Vec::new();
    let mut t_max = 0usize;

    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            bail!("line {line_no}: expected 4 fields, found {}", fields.len());
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|_| anyhow!("line {line_no}: time '{}' is not an integer", fields[0]))?;
        if t < 1 {
            bail!("line {line_no}: time must be a positive integer, found {t}");
        }
        t_max = t_max.max(t);
        let mut intern = |name: &str| -> usize {
            *label_index.entry(name.to_string()).or_insert_with(|| {
                labels.push(name.to_string());
                labels.len() - 1
            })
        };
        let a = intern(fields[1]);
        let b = intern(fields[2]);
        if a == b {
            bail!("line {line_no}: self-loop on node '{}'", fields[1]);
        }
        let count = if fields[3].eq_ignore_ascii_case("na") {
            None
        } else {
            let c: i64 = fields[3]
                .parse()
                .map_err(|_| anyhow!("line {line_no}: count '{}' is not an integer", fields[3]))?;
            if c < 0 {
                bail!("line {line_no}: negative count {c}");
            }
            Some(c as u64)
        };
        records.push(Record { line_no, t, a, b, count });
    }

    if labels.len() < 2 {
        bail!("edge list names {} node(s); at least 2 required", labels.len());
    }
    let n = labels.len();
    let mut network = TemporalNetwork::new(n, t_max)?;
    network.set_labels(labels.clone())?;

    let mut seen: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for r in &records {
        let key = (r.t, r.a.min(r.b), r.a.max(r.b));
        if let Some(prev_line) = seen.insert(key, r.line_no) {
            bail!(
                "duplicate record for pair ({}, {}) at t={}: lines {prev_line} and {}",
                labels[key.1],
                labels[key.2],
                r.t,
                r.line_no
            );
        }
        match r.count {
            Some(c) => network.set_count(r.a, r.b, r.t - 1, c)?,
            None => network.set_missing(r.a, r.b, r.t - 1)?,
        }
    }
    Ok(network)
}

/// Write a network as a full-grid edge list (every unordered pair at every
/// time), so a round trip reproduces the network exactly, mask included.
pub fn write_edges(network: &TemporalNetwork, path: &Path) -> Result<()> {
    let mut out = String::from("t,i,j,count\n");
    let labels = network.labels();
    for t in 0..network.n_times() {
        for (i, j) in network.pairs() {
            if network.is_observed(i, j, t) {
                writeln!(out, "{},{},{},{}", t + 1, labels[i], labels[j], network.count(i, j, t))?;
            } else {
                writeln!(out, "{},{},{},NA", t + 1, labels[i], labels[j])?;
            }
        }
    }
    write_atomic(path, &out)
}

/// Write a chain as columnar CSV: one row per retained draw, a header
/// naming every flattened parameter, and a trailing `loglik` column. The
/// seed and config digest ride in a leading comment line.
pub fn write_chain(chain: &ChainOutput, spec: &ModelSpec, digest: &str, path: &Path) -> Result<()> {
    let names = chain.column_names(spec);
    let mut out = String::new();
    writeln!(out, "# seed={} config_digest={digest}", chain.config.seed)?;
    writeln!(out, "{},loglik", names.join(","))?;
    for k in 0..chain.draws.len() {
        let row = chain.row(k);
        for v in &row {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", chain.loglik[k])?;
    }
    write_atomic(path, &out)
}

/// Read a chain CSV back into a `ChainOutput`. The parameter shapes are
/// inferred from the header and checked against the model specification;
/// acceptance statistics are not stored in the CSV and come back as NaN.
pub fn read_chain(path: &Path, spec: &ModelSpec) -> Result<ChainOutput> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut seed = 0u64;
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        if let Some(comment) = line.strip_prefix('#') {
            for token in comment.split_whitespace() {
                if let Some(v) = token.strip_prefix("seed=") {
                    seed = v.parse().unwrap_or(0);
                }
            }
            lines.next();
        } else {
            break;
        }
    }
    let header = lines.next().ok_or_else(|| anyhow!("chain file has no header"))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.last() != Some(&"loglik") {
        bail!("chain header must end with a loglik column");
    }
    let count_prefix = |p: &str| names.iter().filter(|n| n.starts_with(p)).count();
    let n = count_prefix("alpha[");
    let t_len = count_prefix("f[");
    let lags = count_prefix("delta[");
    let x_len = count_prefix("x[");
    if n == 0 {
        bail!("chain header has no alpha columns");
    }

    let mut draws = Vec::new();
    let mut loglik = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow!("chain row {}: {e}", idx + 1))?;
        if values.len() != names.len() {
            bail!(
                "chain row {}: {} values for {} columns",
                idx + 1,
                values.len(),
                names.len()
            );
        }
        let mut cursor = 0usize;
        let mut take = |k: usize| {
            let slice = values[cursor..cursor + k].to_vec();
            cursor += k;
            slice
        };
        let alpha = take(n);
        let f = take(t_len);
        let delta = take(lags);
        let x = take(x_len);
        let zeta = values[cursor];
        cursor += 3; // zeta, rho, theta
        let sigma_eps2 = if names[cursor] == "sigma_eps2" {
            let v = values[cursor];
            cursor += 1;
            Some(v)
        } else {
            None
        };
        loglik.push(values[cursor]);
        draws.push(ParamState {
            alpha,
            f,
            delta,
            x,
            zeta,
            sigma_eps2,
        });
    }
    if draws.is_empty() {
        bail!("chain file contains no draws");
    }
    // Shape check against the declared specification.
    match &spec.dynamics {
        Dynamics::Factor { .. } if t_len == 0 || lags > 0 || x_len > 0 => {
            bail!("chain columns do not match the m1 specification")
        }
        Dynamics::Autoregressive { lags: k, .. } if lags != *k || t_len > 0 => {
            bail!("chain columns do not match the m2 specification")
        }
        Dynamics::LatentSpace { dim, .. } if x_len != t_len * n * dim => {
            bail!("chain columns do not match the m3 specification")
        }
        _ => {}
    }
    Ok(ChainOutput {
        draws,
        loglik,
        acceptance: AcceptanceRates {
            alpha: f64::NAN,
            delta: f64::NAN,
            f: f64::NAN,
            x: f64::NAN,
            zeta: f64::NAN,
        },
        config: SamplerConfig::new(2, 1, 1, seed),
    })
}

/// Write the true parameter state of a simulation as `name,value` rows.
pub fn write_truth(truth: &ParamState, spec: &ModelSpec, path: &Path) -> Result<()> {
    let chain = ChainOutput {
        draws: vec![truth.clone()],
        loglik: vec![f64::NAN],
        acceptance: AcceptanceRates {
            alpha: f64::NAN,
            delta: f64::NAN,
            f: f64::NAN,
            x: f64::NAN,
            zeta: f64::NAN,
        },
        config: SamplerConfig::new(2, 1, 1, 0),
    };
    let names = chain.column_names(spec);
    let row = chain.row(0);
    let mut out = String::from("name,value\n");
    for (name, value) in names.iter().zip(&row) {
        writeln!(out, "{name},{value}")?;
    }
    write_atomic(path, &out)
}

/// The run manifest: enough to rerun the command byte-for-byte.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_digest: String,
    /// The resolved flat configuration (flag name -> value).
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<BTreeMap<String, f64>>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config_digest: digest_config(&config),
            config,
            labels: None,
            acceptance: None,
            outputs: Vec::new(),
        }
    }

    pub fn with_acceptance(mut self, rates: &AcceptanceRates) -> Self {
        let mut map = BTreeMap::new();
        for (name, v) in [
            ("alpha", rates.alpha),
            ("delta", rates.delta),
            ("f", rates.f),
            ("x", rates.x),
            ("zeta", rates.zeta),
        ] {
            if v.is_finite() {
                map.insert(name.to_string(), v);
            }
        }
        self.acceptance = Some(map);
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(path, &format!("{json}\n"))
    }
}

/// SHA-256 digest of the canonical (sorted key=value) configuration text.
pub fn digest_config(config: &BTreeMap<String, String>) -> String {
    use sha2::{Digest, Sha256};
    let mut canonical = String::new();
    for (k, v) in config {
        let _ = writeln!(canonical, "{k}={v}");
    }
    let hash = Sha256::digest(canonical.as_bytes());
    hash.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// Render a table as CSV with full-precision values.
pub fn write_table(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    write_atomic(path, &out)
}

/// Summary rows for theta/rho columns of a chain (posterior dispersion).
pub fn dispersion_posterior_summary(chain: &ChainOutput) -> (f64, f64) {
    let thetas: Vec<f64> = chain.draws.iter().map(|d| theta_of_zeta(d.zeta).1).collect();
    let rhos: Vec<f64> = chain.draws.iter().map(|d| theta_of_zeta(d.zeta).0).collect();
    (
        thetas.iter().sum::<f64>() / thetas.len() as f64,
        rhos.iter().sum::<f64>() / rhos.len() as f64,
    )
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
