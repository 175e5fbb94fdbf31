//! Subcommand bodies. Each writes into its own run directory under `root`
//! and returns whether every verdict passed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_norm_spec, parse_plan, parse_run_config, plan_to_text, run_config_to_text, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{run_plan, synthesize_data};
use crate::io::{self, CheckRow, NormRow, RunManifest};
use crate::linear::{propagate, verify_decay, verify_equivalence};
use crate::littlewood_paley::{chemin_lerner, integrity_checks, DyadicFilterBank, NormSpec, TimeSeries};
use crate::solvers::{nsk_solve, RunStatus};
use crate::spectral::SpectralField;

/// What a subcommand produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub passed: bool,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

struct Recorder {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Recorder {
    fn new(root: &Path, command: &str, run_id: &str) -> Result<Self> {
        Ok(Self {
            dir: io::run_dir(root, command, run_id)?,
            outputs: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        io::write_atomic(&self.dir.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, run_id: &str, command: &str, echo: &str, started: f64, passed: bool, summary: Vec<String>) -> Result<Outcome> {
        self.outputs.sort();
        let m = RunManifest {
            run_id: run_id.to_string(),
            command: command.to_string(),
            config_echo: echo.to_string(),
            code_version: crate::CODE_VERSION.to_string(),
            started_unix: started,
            finished_unix: io::unix_now(),
            outputs: self.outputs,
            status: if passed { "pass" } else { "fail" }.to_string(),
        };
        m.write(&self.dir)?;
        Ok(Outcome {
            run_id: run_id.to_string(),
            dir: self.dir,
            passed,
            summary,
        })
    }
}

fn load_run(path: &Path) -> Result<(RunConfig, String, String)> {
    let cfg = parse_run_config(&fs::read_to_string(path)?)?;
    let echo = run_config_to_text(&cfg);
    let id = io::run_id(&echo);
    Ok((cfg, echo, id))
}

fn fields_of(x: &crate::spectral::FlowState, eps: f64) -> [(&'static str, SpectralField); 3] {
    [("a", x.a.clone()), ("eps_grad_a", x.eps_grad_a(eps)), ("v", x.v.clone())]
}

/// Integrate from synthesized data; writes snapshots, `diagnostics.csv` and,
/// when the config lists norms, `norms.csv`.
pub fn simulate(config: &Path, root: &Path) -> Result<Outcome> {
    let started = io::unix_now();
    let (cfg, echo, id) = load_run(config)?;
    let mut rec = Recorder::new(root, "simulate", &id)?;
    rec.put("config.txt", echo.as_bytes())?;
    let bank = DyadicFilterBank::new(cfg.solver.grid)?;
    let x0 = synthesize_data(&cfg.profile, &bank, cfg.seed)?;
    let run = nsk_solve(&x0, &cfg.solver)?;
    for (k, (t, x)) in run.series.times().iter().zip(run.series.states()).enumerate() {
        let stem = format!("snap_{k:05}");
        io::write_flow_snapshot(&rec.dir, &stem, x, *t)?;
        rec.outputs.push(format!("{stem}_a.snap"));
        rec.outputs.push(format!("{stem}_v.snap"));
    }
    rec.put("diagnostics.csv", io::diagnostics_csv(&run.diagnostics).as_bytes())?;
    let eps = cfg.solver.params.eps;
    if !cfg.norm_specs.is_empty() {
        let mut rows = Vec::new();
        let times = run.series.times();
        for spec in &cfg.norm_specs {
            for (k, name) in ["a", "eps_grad_a", "v"].into_iter().enumerate() {
                let value = match spec.time_r {
                    Some(r) => {
                        let prof = run
                            .series
                            .states()
                            .iter()
                            .map(|x| bank.profile(&fields_of(x, eps)[k].1, spec.flavor, spec.p))
                            .collect::<Result<Vec<_>>>()?;
                        chemin_lerner(times, &prof, spec.s, r, spec.sigma, spec.truncation)?
                    }
                    None => {
                        let (_, x) = run.series.last().expect("series holds the initial state");
                        bank.norm(&fields_of(x, eps)[k].1, spec)?
                    }
                };
                rows.push(NormRow {
                    run_id: id.clone(),
                    field: name.to_string(),
                    spec: *spec,
                    value,
                });
            }
        }
        rec.put("norms.csv", io::norms_csv(&rows).as_bytes())?;
    }
    let passed = run.status == RunStatus::Completed;
    let mut summary = vec![format!(
        "{}: {} steps of dt = {}, {} snapshots",
        run.status.name(),
        run.steps,
        io::fmt_f64(run.dt),
        run.series.len()
    )];
    if let Some(m) = &run.message {
        summary.push(m.clone());
    }
    rec.finish(&id, "simulate", &echo, started, passed, summary)
}

/// Run an experiment plan; writes `report.csv`, `report.json` and `curves.csv`.
pub fn sweep(plan_path: &Path, root: &Path) -> Result<Outcome> {
    let started = io::unix_now();
    let plan = parse_plan(&fs::read_to_string(plan_path)?)?;
    let echo = plan_to_text(&plan);
    let report = run_plan(&plan)?;
    let id = report.provenance.run_id.clone();
    let mut rec = Recorder::new(root, "sweep", &id)?;
    rec.put("config.txt", echo.as_bytes())?;
    rec.put("report.csv", io::report_csv(&report).as_bytes())?;
    rec.put("report.json", io::report_json(&report)?.as_bytes())?;
    rec.put("curves.csv", io::curves_csv(&report).as_bytes())?;
    let summary = report
        .verdicts
        .iter()
        .map(|v| format!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail))
        .collect();
    rec.finish(&id, "sweep", &echo, started, report.passed(), summary)
}

fn check_lines(rows: &[CheckRow]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{} {}: margin {} over {}",
                if r.pass { "PASS" } else { "FAIL" },
                r.check,
                io::fmt_f64(r.worst_margin),
                r.modes_tested
            )
        })
        .collect()
}

/// Decay of the energy functional, its two-sided equivalence, and the
/// semigroup property of the propagator.
pub fn verify_linear(config: &Path, root: &Path) -> Result<Outcome> {
    let started = io::unix_now();
    let (cfg, echo, id) = load_run(config)?;
    let mut rec = Recorder::new(root, "verify-linear", &id)?;
    let bank = DyadicFilterBank::new(cfg.solver.grid)?;
    let x0 = synthesize_data(&cfg.profile, &bank, cfg.seed)?;
    let params = cfg.solver.params;
    let mut rows = vec![CheckRow::from_decay("energy_decay", &verify_decay(&x0, &params, &[0.1, 1.0, 10.0])?)];
    rows.push(CheckRow::from_decay(
        "energy_equivalence",
        &verify_equivalence(100_000, 5.0, 10.0, cfg.seed),
    ));
    let (t1, t2) = (0.3, 0.7);
    let once = propagate(&x0, &params, t1 + t2)?;
    let twice = propagate(&propagate(&x0, &params, t1)?, &params, t2)?;
    let scale = once.max_abs().max(f64::MIN_POSITIVE);
    let diff = once.sub(&twice)?.max_abs() / scale;
    let tol = 1e-10;
    rows.push(CheckRow {
        check: "semigroup".into(),
        worst_margin: tol - diff,
        modes_tested: cfg.solver.grid.len(),
        pass: diff <= tol,
    });
    rec.put("verify_linear.csv", io::checks_csv(&rows).as_bytes())?;
    let passed = rows.iter().all(|r| r.pass);
    rec.finish(&id, "verify-linear", &echo, started, passed, check_lines(&rows))
}

/// Self-checks of the dyadic filter bank on the configured grid. The margin
/// column is `tolerance - residual`.
pub fn verify_lp(config: &Path, root: &Path) -> Result<Outcome> {
    let started = io::unix_now();
    let (cfg, echo, id) = load_run(config)?;
    let mut rec = Recorder::new(root, "verify-lp", &id)?;
    let bank = DyadicFilterBank::new(cfg.solver.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rows: Vec<CheckRow> = integrity_checks(&bank, &mut rng)?
        .into_iter()
        .map(|c| CheckRow {
            check: c.name.to_string(),
            worst_margin: c.tolerance - c.residual,
            modes_tested: c.tested,
            pass: c.pass(),
        })
        .collect();
    rec.put("verify_lp.csv", io::checks_csv(&rows).as_bytes())?;
    let passed = rows.iter().all(|r| r.pass);
    rec.finish(&id, "verify-lp", &echo, started, passed, check_lines(&rows))
}

/// Norms of stored snapshots. Specs with a time exponent treat the snapshots
/// as one time series (they must share grid and rank and increase in time);
/// the others are evaluated per snapshot.
pub fn norms(snapshots: &[PathBuf], specs: &[String], root: &Path) -> Result<Outcome> {
    let started = io::unix_now();
    if snapshots.is_empty() || specs.is_empty() {
        return Err(Error::Usage("need at least one snapshot and one --spec".into()));
    }
    let specs: Vec<NormSpec> = specs
        .iter()
        .map(|s| parse_norm_spec(s).map_err(|m| Error::Usage(format!("--spec `{s}`: {m}"))))
        .collect::<Result<_>>()?;
    let mut hashed = String::new();
    let mut snaps = Vec::new();
    for p in snapshots {
        let bytes = fs::read(p)?;
        hashed += &io::hash_bytes(&bytes);
        let (f, t) = io::decode_snapshot(&bytes)?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        snaps.push((name, f, t));
    }
    for s in &specs {
        hashed += &crate::config::format_norm_spec(s);
        hashed.push('\n');
    }
    let id = io::run_id(&hashed);
    let mut rec = Recorder::new(root, "norms", &id)?;
    let mut rows = Vec::new();
    for spec in &specs {
        if spec.time_r.is_some() {
            let first = &snaps[0].1;
            let mut series: TimeSeries<SpectralField> = TimeSeries::default();
            for (_, f, t) in &snaps {
                if !first.grid().same_as(f.grid()) || first.rank() != f.rank() {
                    return Err(Error::Usage("a time series needs snapshots of one grid and rank".into()));
                }
                series.push(*t, f.clone())?;
            }
            rows.push(NormRow {
                run_id: id.clone(),
                field: "series".into(),
                spec: *spec,
                value: DyadicFilterBank::new(*first.grid())?.norm_series(&series, spec)?,
            });
        } else {
            for (name, f, _) in &snaps {
                rows.push(NormRow {
                    run_id: id.clone(),
                    field: name.clone(),
                    spec: *spec,
                    value: DyadicFilterBank::new(*f.grid())?.norm(f, spec)?,
                });
            }
        }
    }
    let csv = io::norms_csv(&rows);
    rec.put("norms.csv", csv.as_bytes())?;
    let summary = csv.lines().map(str::to_string).collect();
    rec.finish(&id, "norms", &hashed, started, true, summary)
}
