//! Key/value configuration files.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment
//! [section]
//! key = value      # trailing comments allowed
//! ```
//!
//! Keys must belong to the section they appear under. A key written before
//! any header is accepted when its name is unique across sections
//! (`epsilon = 0.1` works, `p = 2` does not). Lists are comma separated.
//! `[norms]` may repeat `norm = <spec>`; every other key may appear once.
//! A document with a `[plan]` section is an [`ExperimentPlan`]; otherwise it
//! is a [`RunConfig`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::experiments::{DataProfile, ExperimentPlan, PlanKind};
use crate::linear::Scheme;
use crate::littlewood_paley::{Flavor, NormSpec, Truncation};
use crate::nonlinear::PressureLaw;
use crate::solvers::SolverConfig;
use crate::spectral::Grid;

const SECTIONS: &[(&str, &[&str])] = &[
    ("params", &["epsilon", "mu", "lambda", "kappa"]),
    ("pressure", &["law", "gamma", "coeffs", "radius"]),
    ("grid", &["side", "n"]),
    (
        "solver",
        &[
            "dt",
            "horizon",
            "scheme",
            "snapshot_stride",
            "vacuum_floor",
            "blowup_factor",
            "p",
            "nonlinear",
        ],
    ),
    ("data", &["seed", "s0", "amplitude", "j_lo", "j_hi", "solenoidal_fraction", "p"]),
    ("norms", &["norm"]),
    (
        "plan",
        &[
            "kind",
            "eps_list",
            "q",
            "r",
            "refine_eps",
            "iterations",
            "z_target",
            "corpus",
            "decay_times",
        ],
    ),
    ("strichartz", &["r_list", "p", "q", "s", "horizon", "packet_shell"]),
];

/// Initial data plus solver settings: what `simulate` and the verification
/// commands consume.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub profile: DataProfile,
    pub seed: u64,
    pub norm_specs: Vec<NormSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            profile: DataProfile::default(),
            seed: 1,
            norm_specs: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Run(RunConfig),
    Plan(ExperimentPlan),
}

#[derive(Clone, Debug)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Doc {
    entries: BTreeMap<(String, String), Vec<Entry>>,
    has_plan: bool,
}

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn section_keys(name: &str) -> Option<&'static [&'static str]> {
    SECTIONS.iter().find(|(s, _)| *s == name).map(|(_, k)| *k)
}

fn lex(text: &str) -> Result<Doc> {
    let mut doc = Doc::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, body, "unterminated section header"))?
                .trim();
            if section_keys(name).is_none() {
                return Err(err(line, name, "unknown section"));
            }
            doc.has_plan |= name == "plan";
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, body, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = match &section {
            Some(s) => {
                if !section_keys(s).unwrap_or(&[]).contains(&key) {
                    return Err(err(line, key, format!("unknown key in section [{s}]")));
                }
                s.clone()
            }
            None => {
                let owners: Vec<&str> = SECTIONS
                    .iter()
                    .filter(|(_, k)| k.contains(&key))
                    .map(|(s, _)| *s)
                    .collect();
                match owners.as_slice() {
                    [] => return Err(err(line, key, "unknown key")),
                    [s] => s.to_string(),
                    _ => {
                        return Err(err(
                            line,
                            key,
                            format!("ambiguous outside a section; one of [{}]", owners.join("], [")),
                        ))
                    }
                }
            }
        };
        doc.has_plan |= sec == "plan";
        let slot = doc.entries.entry((sec.clone(), key.to_string())).or_default();
        if !slot.is_empty() && key != "norm" {
            return Err(err(line, key, format!("duplicate key (first on line {})", slot[0].line)));
        }
        slot.push(Entry {
            line,
            value: value.to_string(),
        });
    }
    Ok(doc)
}

impl Doc {
    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(sec.to_string(), key.to_string())).and_then(|v| v.first())
    }

    fn all(&self, sec: &str, key: &str) -> &[Entry] {
        self.entries
            .get(&(sec.to_string(), key.to_string()))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    fn parsed<T>(&self, sec: &str, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|m| err(e.line, key, m)),
        }
    }

    fn set<T>(&self, sec: &str, key: &str, slot: &mut T, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<()> {
        if let Some(v) = self.parsed(sec, key, f)? {
            *slot = v;
        }
        Ok(())
    }

    fn line(&self, sec: &str, key: &str) -> usize {
        self.get(sec, key).map(|e| e.line).unwrap_or(0)
    }
}

fn float(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = float(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

fn nonneg(s: &str) -> std::result::Result<f64, String> {
    let v = float(s)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be non-negative and finite, got {s}"))
    }
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let v = float(s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite, got {s}"))
    }
}

fn exponent(s: &str) -> std::result::Result<f64, String> {
    let v = float(s)?;
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("exponent must lie in [1, inf], got {s}"))
    }
}

fn uint<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

fn int(s: &str) -> std::result::Result<i32, String> {
    s.parse().map_err(|_| format!("expected an integer, got `{s}`"))
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn list(s: &str, item: fn(&str) -> std::result::Result<f64, String>) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| item(x.trim())).collect()
}

/// Shortest decimal that parses back to the same `f64`; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

/// `<flavor> s=<s> p=<p> sigma=<σ> [trunc=low:<α>|mid:<α>:<β>|high:<β>] [r=<r>]`.
pub fn parse_norm_spec(text: &str) -> std::result::Result<NormSpec, String> {
    let mut parts = text.split_whitespace();
    let flavor = parts.next().ok_or("empty norm spec")?;
    let flavor = Flavor::parse(flavor).ok_or_else(|| format!("unknown flavor `{flavor}`"))?;
    let (mut s, mut p, mut sigma) = (None, None, None);
    let mut spec = NormSpec::new(flavor, 0.0, 2.0, 1.0);
    for part in parts {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected name=value, got `{part}`"))?;
        match k {
            "s" => s = Some(finite(v)?),
            "p" => p = Some(exponent(v)?),
            "sigma" => sigma = Some(exponent(v)?),
            "r" => spec.time_r = Some(exponent(v)?),
            "trunc" => {
                let f: Vec<&str> = v.split(':').collect();
                spec.truncation = match f.as_slice() {
                    ["none"] => Truncation::None,
                    ["low", a] => Truncation::Low(positive(a)?),
                    ["mid", a, b] => Truncation::Mid(positive(a)?, positive(b)?),
                    ["high", b] => Truncation::High(positive(b)?),
                    _ => return Err(format!("bad truncation `{v}`")),
                };
            }
            _ => return Err(format!("unknown norm field `{k}`")),
        }
    }
    spec.s = s.ok_or("norm spec needs s=")?;
    spec.p = p.ok_or("norm spec needs p=")?;
    spec.sigma = sigma.ok_or("norm spec needs sigma=")?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn format_norm_spec(spec: &NormSpec) -> String {
    let mut out = format!(
        "{} s={} p={} sigma={}",
        spec.flavor.name(),
        fmt_f64(spec.s),
        fmt_f64(spec.p),
        fmt_f64(spec.sigma)
    );
    match spec.truncation {
        Truncation::None => {}
        Truncation::Low(a) => out += &format!(" trunc=low:{}", fmt_f64(a)),
        Truncation::Mid(a, b) => out += &format!(" trunc=mid:{}:{}", fmt_f64(a), fmt_f64(b)),
        Truncation::High(b) => out += &format!(" trunc=high:{}", fmt_f64(b)),
    }
    if let Some(r) = spec.time_r {
        out += &format!(" r={}", fmt_f64(r));
    }
    out
}

fn read_solver(doc: &Doc) -> Result<SolverConfig> {
    let mut c = SolverConfig::default();
    let mut pr = c.params;
    doc.set("params", "epsilon", &mut pr.eps, positive)?;
    doc.set("params", "mu", &mut pr.mu, positive)?;
    doc.set("params", "lambda", &mut pr.lambda, finite)?;
    doc.set("params", "kappa", &mut pr.kappa, nonneg)?;
    pr.validate().map_err(|e| {
        let key = if pr.mu + pr.lambda <= 0.0 { "lambda" } else { "mu" };
        err(doc.line("params", key), key, e.to_string())
    })?;
    c.params = pr;

    let law = doc.parsed("pressure", "law", |s| match s {
        "gamma" | "series" => Ok(s.to_string()),
        _ => Err(format!("expected gamma or series, got `{s}`")),
    })?;
    let gamma = doc.parsed("pressure", "gamma", positive)?;
    let coeffs = doc.parsed("pressure", "coeffs", |s| list(s, finite))?;
    let radius = doc.parsed("pressure", "radius", |s| {
        let v = float(s)?;
        if v > 0.0 { Ok(v) } else { Err(format!("must be positive, got {s}")) }
    })?;
    let law_line = doc.line("pressure", "law");
    c.pressure = match law.as_deref().unwrap_or("gamma") {
        "gamma" => {
            if coeffs.is_some() || radius.is_some() {
                return Err(err(law_line, "law", "coeffs and radius need law = series"));
            }
            PressureLaw::gamma(gamma.unwrap_or(1.4))
                .map_err(|e| err(doc.line("pressure", "gamma"), "gamma", e.to_string()))?
        }
        _ => {
            if gamma.is_some() {
                return Err(err(law_line, "law", "gamma needs law = gamma"));
            }
            let coeffs = coeffs.ok_or_else(|| err(law_line, "coeffs", "series law needs coeffs"))?;
            let radius = radius.unwrap_or(f64::INFINITY);
            PressureLaw::series(coeffs, radius)
                .map_err(|e| err(doc.line("pressure", "coeffs"), "coeffs", e.to_string()))?
        }
    };

    let side = doc.parsed("grid", "side", positive)?.unwrap_or(c.grid.side());
    let n = doc.parsed("grid", "n", uint::<usize>)?.unwrap_or(c.grid.n());
    c.grid = Grid::new(side, n).map_err(|e| err(doc.line("grid", "n"), "n", e.to_string()))?;

    c.dt = match doc.parsed("solver", "dt", |s| if s == "auto" { Ok(None) } else { positive(s).map(Some) })? {
        Some(v) => v,
        None => None,
    };
    doc.set("solver", "horizon", &mut c.horizon, positive)?;
    doc.set("solver", "scheme", &mut c.scheme, |s| {
        Scheme::parse(s).ok_or_else(|| format!("expected exp_euler or etdrk2, got `{s}`"))
    })?;
    doc.set("solver", "snapshot_stride", &mut c.snapshot_stride, |s| match uint::<usize>(s)? {
        0 => Err("must be at least 1".into()),
        k => Ok(k),
    })?;
    doc.set("solver", "vacuum_floor", &mut c.vacuum_floor, nonneg)?;
    doc.set("solver", "blowup_factor", &mut c.blowup_factor, |s| {
        let v = float(s)?;
        if v > 1.0 { Ok(v) } else { Err(format!("must exceed 1, got {s}")) }
    })?;
    doc.set("solver", "p", &mut c.p, |s| {
        let v = float(s)?;
        if (2.0..4.0).contains(&v) { Ok(v) } else { Err(format!("must lie in [2, 4), got {s}")) }
    })?;
    doc.set("solver", "nonlinear", &mut c.nonlinear, boolean)?;
    if let Some(dt) = c.dt {
        if dt > c.horizon {
            return Err(err(doc.line("solver", "dt"), "dt", "dt exceeds the horizon"));
        }
    }
    c.validate().map_err(|e| err(0, "solver", e.to_string()))?;
    Ok(c)
}

fn read_data(doc: &Doc) -> Result<(DataProfile, u64)> {
    let mut d = DataProfile::default();
    let mut seed = 1u64;
    doc.set("data", "seed", &mut seed, uint::<u64>)?;
    doc.set("data", "s0", &mut d.s0, finite)?;
    doc.set("data", "amplitude", &mut d.amplitude, nonneg)?;
    doc.set("data", "j_lo", &mut d.j_lo, int)?;
    doc.set("data", "j_hi", &mut d.j_hi, int)?;
    doc.set("data", "solenoidal_fraction", &mut d.solenoidal_fraction, |s| {
        if s == "none" {
            return Ok(None);
        }
        let v = float(s)?;
        if (0.0..=1.0).contains(&v) { Ok(Some(v)) } else { Err(format!("must lie in [0, 1], got {s}")) }
    })?;
    doc.set("data", "p", &mut d.p, exponent)?;
    if d.j_lo > d.j_hi {
        return Err(err(doc.line("data", "j_hi"), "j_hi", "j_hi must be at least j_lo"));
    }
    Ok((d, seed))
}

fn read_norms(doc: &Doc) -> Result<Vec<NormSpec>> {
    doc.all("norms", "norm")
        .iter()
        .map(|e| parse_norm_spec(&e.value).map_err(|m| err(e.line, "norm", m)))
        .collect()
}

fn read_run(doc: &Doc) -> Result<RunConfig> {
    let solver = read_solver(doc)?;
    let (profile, seed) = read_data(doc)?;
    Ok(RunConfig {
        solver,
        profile,
        seed,
        norm_specs: read_norms(doc)?,
    })
}

fn read_plan(doc: &Doc) -> Result<ExperimentPlan> {
    let run = read_run(doc)?;
    let mut p = ExperimentPlan {
        solver: run.solver,
        profile: run.profile,
        seed: run.seed,
        norm_specs: run.norm_specs,
        ..ExperimentPlan::default()
    };
    doc.set("plan", "kind", &mut p.kind, |s| {
        PlanKind::parse(s).ok_or_else(|| format!("unknown plan kind `{s}`"))
    })?;
    doc.set("plan", "eps_list", &mut p.eps_list, |s| {
        let v = list(s, positive)?;
        if v.is_empty() {
            return Err("needs at least one epsilon".into());
        }
        if v.windows(2).any(|w| w[1] >= w[0]) {
            return Err("must be strictly decreasing".into());
        }
        Ok(v)
    })?;
    doc.set("plan", "q", &mut p.q, exponent)?;
    doc.set("plan", "r", &mut p.r, exponent)?;
    doc.set("plan", "refine_eps", &mut p.refine_eps, |s| list(s, positive))?;
    doc.set("plan", "iterations", &mut p.iterations, uint::<usize>)?;
    doc.set("plan", "z_target", &mut p.z_target, positive)?;
    doc.set("plan", "corpus", &mut p.corpus, |s| match uint::<usize>(s)? {
        0 => Err("must be at least 1".into()),
        k => Ok(k),
    })?;
    doc.set("plan", "decay_times", &mut p.decay_times, |s| list(s, nonneg))?;
    doc.set("strichartz", "r_list", &mut p.strichartz_r, |s| list(s, exponent))?;
    doc.set("strichartz", "p", &mut p.strichartz_p, exponent)?;
    doc.set("strichartz", "q", &mut p.strichartz_q, exponent)?;
    doc.set("strichartz", "s", &mut p.strichartz_s, finite)?;
    doc.set("strichartz", "horizon", &mut p.strichartz_horizon, positive)?;
    doc.set("strichartz", "packet_shell", &mut p.packet_shell, int)?;
    for e in &p.refine_eps {
        if !p.eps_list.contains(e) {
            return Err(err(doc.line("plan", "refine_eps"), "refine_eps", format!("{e} is not in eps_list")));
        }
    }
    if !(p.q > p.solver.p) {
        return Err(err(doc.line("plan", "q"), "q", "q must exceed the solver p"));
    }
    if !(p.r > 1.0 && p.r.is_finite()) {
        return Err(err(doc.line("plan", "r"), "r", "r must lie in (1, inf)"));
    }
    p.validate().map_err(|e| err(0, "plan", e.to_string()))?;
    Ok(p)
}

/// Parse either document type.
pub fn parse_config(text: &str) -> Result<Document> {
    let doc = lex(text)?;
    if doc.has_plan {
        Ok(Document::Plan(read_plan(&doc)?))
    } else {
        Ok(Document::Run(read_run(&doc)?))
    }
}

/// Parse a run configuration; plan sections are rejected.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    match parse_config(text)? {
        Document::Run(r) => Ok(r),
        Document::Plan(_) => Err(err(0, "plan", "expected a run configuration, found a plan")),
    }
}

/// Parse an experiment plan. A document without `[plan]` is a low-Mach sweep with default plan keys.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan> {
    read_plan(&lex(text)?)
}

fn solver_text(c: &SolverConfig, out: &mut String) {
    let p = &c.params;
    *out += &format!(
        "[params]\nepsilon = {}\nmu = {}\nlambda = {}\nkappa = {}\n\n",
        fmt_f64(p.eps),
        fmt_f64(p.mu),
        fmt_f64(p.lambda),
        fmt_f64(p.kappa)
    );
    match &c.pressure {
        PressureLaw::Gamma(g) => *out += &format!("[pressure]\nlaw = gamma\ngamma = {}\n\n", fmt_f64(*g)),
        PressureLaw::Series { coeffs, radius } => {
            *out += &format!(
                "[pressure]\nlaw = series\ncoeffs = {}\nradius = {}\n\n",
                fmt_list(coeffs),
                fmt_f64(*radius)
            )
        }
    }
    *out += &format!("[grid]\nside = {}\nn = {}\n\n", fmt_f64(c.grid.side()), c.grid.n());
    *out += &format!(
        "[solver]\ndt = {}\nhorizon = {}\nscheme = {}\nsnapshot_stride = {}\nvacuum_floor = {}\nblowup_factor = {}\np = {}\nnonlinear = {}\n",
        c.dt.map(fmt_f64).unwrap_or_else(|| "auto".into()),
        fmt_f64(c.horizon),
        c.scheme.name(),
        c.snapshot_stride,
        fmt_f64(c.vacuum_floor),
        fmt_f64(c.blowup_factor),
        fmt_f64(c.p),
        c.nonlinear
    );
}

fn data_text(d: &DataProfile, seed: u64, specs: &[NormSpec], out: &mut String) {
    *out += &format!(
        "\n[data]\nseed = {seed}\ns0 = {}\namplitude = {}\nj_lo = {}\nj_hi = {}\nsolenoidal_fraction = {}\np = {}\n",
        fmt_f64(d.s0),
        fmt_f64(d.amplitude),
        d.j_lo,
        d.j_hi,
        d.solenoidal_fraction.map(fmt_f64).unwrap_or_else(|| "none".into()),
        fmt_f64(d.p)
    );
    if !specs.is_empty() {
        *out += "\n[norms]\n";
        for s in specs {
            *out += &format!("norm = {}\n", format_norm_spec(s));
        }
    }
}

/// Full echo of a run configuration, defaults included.
pub fn run_config_to_text(c: &RunConfig) -> String {
    let mut out = String::new();
    solver_text(&c.solver, &mut out);
    data_text(&c.profile, c.seed, &c.norm_specs, &mut out);
    out
}

/// Full echo of a plan, defaults included. Hashing this text gives the run id.
pub fn plan_to_text(p: &ExperimentPlan) -> String {
    let mut out = format!(
        "[plan]\nkind = {}\neps_list = {}\nq = {}\nr = {}\nrefine_eps = {}\niterations = {}\nz_target = {}\ncorpus = {}\ndecay_times = {}\n\n",
        p.kind.name(),
        fmt_list(&p.eps_list),
        fmt_f64(p.q),
        fmt_f64(p.r),
        fmt_list(&p.refine_eps),
        p.iterations,
        fmt_f64(p.z_target),
        p.corpus,
        fmt_list(&p.decay_times)
    );
    out += &format!(
        "[strichartz]\nr_list = {}\np = {}\nq = {}\ns = {}\nhorizon = {}\npacket_shell = {}\n\n",
        fmt_list(&p.strichartz_r),
        fmt_f64(p.strichartz_p),
        fmt_f64(p.strichartz_q),
        fmt_f64(p.strichartz_s),
        fmt_f64(p.strichartz_horizon),
        p.packet_shell
    );
    solver_text(&p.solver, &mut out);
    data_text(&p.profile, p.seed, &p.norm_specs, &mut out);
    out
}

pub fn document_to_text(d: &Document) -> String {
    match d {
        Document::Run(r) => run_config_to_text(r),
        Document::Plan(p) => plan_to_text(p),
    }
}
