//! Snapshots, CSV and JSON outputs, run manifests.
//!
//! Snapshot layout (`KORTEWEG-SNAP v1`): one ASCII header line
//!
//! ```text
//! KORTEWEG-SNAP v1 N=<N> L=<float> rank=<scalar|vector2> t=<float>\n
//! ```
//!
//! followed by `components · N²` complex coefficients in the crate's storage
//! order (component-major, then row-major over the mode grid), each written as
//! two little-endian IEEE-754 doubles `(re, im)`. Floats in the header use the
//! shortest decimal that round-trips. Nothing follows the payload.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::format_norm_spec;
pub use crate::config::fmt_f64;
use crate::error::{Error, Result};
use crate::experiments::SweepReport;
use crate::linear::DecayReport;
use crate::littlewood_paley::NormSpec;
use crate::solvers::DiagRow;
use crate::spectral::{FlowState, Grid, Rank, SpectralField, C64};

pub const SNAP_MAGIC: &str = "KORTEWEG-SNAP";
pub const SNAP_VERSION: &str = "v1";
pub const OUT_ENV: &str = "KORTEWEG_OUT";

/// Hex SHA-256 of `text`.
pub fn run_id(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(b: &[u8]) -> String {
    b.iter().fold(String::with_capacity(2 * b.len()), |mut s, x| {
        let _ = write!(s, "{x:02x}");
        s
    })
}

pub fn encode_snapshot(field: &SpectralField, t: f64) -> Vec<u8> {
    let g = field.grid();
    let header = format!(
        "{SNAP_MAGIC} {SNAP_VERSION} N={} L={} rank={} t={}\n",
        g.n(),
        fmt_f64(g.side()),
        field.rank().name(),
        fmt_f64(t)
    );
    let mut out = Vec::with_capacity(header.len() + 16 * field.coeffs().len());
    out.extend_from_slice(header.as_bytes());
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

fn header_field<'a>(tok: Option<&'a str>, name: &str) -> Result<&'a str> {
    tok.and_then(|t| t.strip_prefix(name)?.strip_prefix('='))
        .ok_or_else(|| Error::Format(format!("missing header field {name}")))
}

/// Inverse of [`encode_snapshot`]. Returns the field and its time stamp.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(SpectralField, f64)> {
    let nl = bytes
        .iter()
        .take(256)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("no header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let mut tok = header.split(' ');
    if tok.next() != Some(SNAP_MAGIC) {
        return Err(Error::Format("bad magic".into()));
    }
    match tok.next() {
        Some(SNAP_VERSION) => {}
        v => return Err(Error::Format(format!("unsupported version {v:?}"))),
    }
    let bad = |what: &str| Error::Format(format!("bad {what} in header"));
    let n: usize = header_field(tok.next(), "N")?.parse().map_err(|_| bad("N"))?;
    let l: f64 = header_field(tok.next(), "L")?.parse().map_err(|_| bad("L"))?;
    let rank = Rank::parse(header_field(tok.next(), "rank")?).ok_or_else(|| bad("rank"))?;
    let t: f64 = header_field(tok.next(), "t")?.parse().map_err(|_| bad("t"))?;
    if tok.next().is_some() {
        return Err(bad("trailing field"));
    }
    let grid = Grid::new(l, n).map_err(|e| Error::Format(e.to_string()))?;
    let count = rank.components() * grid.len();
    let payload = &bytes[nl + 1..];
    if payload.len() != 16 * count {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            16 * count
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let coeffs = payload
        .chunks_exact(16)
        .map(|c| C64::new(f(&c[..8]), f(&c[8..])))
        .collect();
    Ok((SpectralField::from_coeffs(grid, rank, coeffs)?, t))
}

pub fn write_snapshot(path: &Path, field: &SpectralField, t: f64) -> Result<()> {
    write_atomic(path, &encode_snapshot(field, t))
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, f64)> {
    decode_snapshot(&fs::read(path)?)
}

/// Writes `<stem>_a.snap` and `<stem>_v.snap`.
pub fn write_flow_snapshot(dir: &Path, stem: &str, x: &FlowState, t: f64) -> Result<[PathBuf; 2]> {
    let pa = dir.join(format!("{stem}_a.snap"));
    let pv = dir.join(format!("{stem}_v.snap"));
    write_snapshot(&pa, &x.a, t)?;
    write_snapshot(&pv, &x.v, t)?;
    Ok([pa, pv])
}

pub fn read_flow_snapshot(dir: &Path, stem: &str) -> Result<(FlowState, f64)> {
    let (a, ta) = read_snapshot(&dir.join(format!("{stem}_a.snap")))?;
    let (v, tv) = read_snapshot(&dir.join(format!("{stem}_v.snap")))?;
    if ta != tv {
        return Err(Error::Format(format!("time stamps differ: {ta} vs {tv}")));
    }
    Ok((FlowState::new(a, v)?, ta))
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `$KORTEWEG_OUT` if set, else `korteweg_out` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("korteweg_out"))
}

/// `<root>/<command>-<first 12 hex digits of run_id>`, created if missing.
pub fn run_dir(root: &Path, command: &str, run_id: &str) -> Result<PathBuf> {
    let d = root.join(format!("{command}-{}", &run_id[..run_id.len().min(12)]));
    fs::create_dir_all(&d)?;
    Ok(d)
}

pub fn diagnostics_csv(rows: &[DiagRow]) -> String {
    let mut s = format!("{}\n", DiagRow::HEADER);
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.norm_a),
            fmt_f64(r.norm_eps_grad_a),
            fmt_f64(r.norm_v),
            fmt_f64(r.energy),
            fmt_f64(r.min_density)
        );
    }
    s
}

pub const NORMS_HEADER: &str = "run_id,field,flavor,s,p,sigma,trunc,alpha,beta,r,value";

/// One norm evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub run_id: String,
    pub field: String,
    pub spec: NormSpec,
    pub value: f64,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn norms_csv(rows: &[NormRow]) -> String {
    let mut s = format!("{NORMS_HEADER}\n");
    for r in rows {
        let sp = &r.spec;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.run_id,
            csv_text(&r.field),
            sp.flavor.name(),
            fmt_f64(sp.s),
            fmt_f64(sp.p),
            fmt_f64(sp.sigma),
            sp.truncation.tag(),
            opt(sp.truncation.alpha()),
            opt(sp.truncation.beta()),
            opt(sp.time_r),
            fmt_f64(r.value)
        );
    }
    s
}

pub const VERIFY_HEADER: &str = "check,worst_margin,modes_tested,pass";

/// One row of the `verify-linear` report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub worst_margin: f64,
    pub modes_tested: usize,
    pub pass: bool,
}

impl CheckRow {
    pub fn from_decay(check: &str, r: &DecayReport) -> Self {
        Self {
            check: check.into(),
            worst_margin: r.worst_margin,
            modes_tested: r.modes_tested,
            pass: r.pass,
        }
    }
}

pub fn checks_csv(rows: &[CheckRow]) -> String {
    let mut s = format!("{VERIFY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            csv_text(&r.check),
            fmt_f64(r.worst_margin),
            r.modes_tested,
            r.pass
        );
    }
    s
}

pub const REPORT_HEADER: &str = "run_id,kind,eps,quantity,value,status";
pub const CURVES_HEADER: &str = "quantity,eps,value,log10_eps,log10_value";

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report_csv(r: &SweepReport) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.provenance.run_id,
            r.kind.name(),
            fmt_f64(row.eps),
            csv_text(&row.quantity),
            fmt_f64(row.value),
            row.status
        );
    }
    s
}

/// Rows with a positive finite value, grouped by quantity in first-seen order.
pub fn curves_csv(r: &SweepReport) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    let mut names: Vec<&str> = Vec::new();
    for row in &r.rows {
        if !names.contains(&row.quantity.as_str()) {
            names.push(&row.quantity);
        }
    }
    for q in names {
        for row in r.rows.iter().filter(|x| x.quantity == q) {
            if !(row.value > 0.0 && row.value.is_finite() && row.eps > 0.0) {
                continue;
            }
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                csv_text(q),
                fmt_f64(row.eps),
                fmt_f64(row.value),
                fmt_f64(row.eps.log10()),
                fmt_f64(row.value.log10())
            );
        }
    }
    s
}

pub fn report_json(r: &SweepReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)? + "\n")
}

/// Record of one CLI invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub config_echo: String,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
    pub status: String,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let p = dir.join("manifest.json");
        write_atomic(&p, (serde_json::to_string_pretty(self)? + "\n").as_bytes())?;
        Ok(p)
    }
}

/// Label used for norm rows inside sweep reports.
pub fn spec_label(spec: &NormSpec) -> String {
    format_norm_spec(spec)
}
