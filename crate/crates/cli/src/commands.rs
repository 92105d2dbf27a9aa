use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use twincity::acceptance::{self, AcceptanceOptions};
use twincity::experiments::{
    append_records_csv, calibrate_next_stage, closeness_diagnostic, estimate_beta,
    oscillation_experiment, replication_spec, ExperimentConfig, RunManifest, SequenceGenerator,
};
use twincity::rng::{derive_seed, streams};
use twincity::schedule::Schedule;
use twincity::stats::rectangle_discrepancy;
use twincity::{ProcessSpec, TorusPoint};

use crate::args::{Cli, Command};
use crate::config::{self, CliConfig, Format, GeneratorKind};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let name = subcommand_name(&cli.command);
    let raw = load_config(&cli, name)?;
    let cfg = config::finish(raw.clone())?;
    let out = cli.global.out.clone();
    match cli.command {
        Command::Sample(_) => sample(&cfg, &out),
        Command::Tsp(_) => tsp(&cfg, &out),
        Command::Beta => beta(&cfg, &raw, &out),
        Command::Oscillate(_) => oscillate(&cfg, &raw, &out),
        Command::Closeness(_) => closeness(&cfg, &raw, &out),
        Command::Discrepancy(_) => discrepancy(&cfg, &raw, &out),
        Command::Verify(_) => verify(&cfg, &out),
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Sample(_) => "sample",
        Command::Tsp(_) => "tsp",
        Command::Beta => "beta",
        Command::Oscillate(_) => "oscillate",
        Command::Closeness(_) => "closeness",
        Command::Discrepancy(_) => "discrepancy",
        Command::Verify(_) => "verify",
    }
}

/// Config file (or built-in default), then flags, then `--set` entries.
fn load_config(cli: &Cli, name: &str) -> Result<Value> {
    let mut v = match &cli.global.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            config::parse_value(&text, &path.display().to_string())?
        }
        None => config::parse_value(config::builtin(name), "built-in config")?,
    };
    let g = &cli.global;
    let mut set = |path: &str, value: Value| config::set_path(&mut v, path, value);
    if let Some(s) = g.seed {
        set("experiment.master_seed", json!(s))?;
    }
    if let Some(m) = &g.metric {
        set("experiment.metric", json!(m))?;
    }
    if let Some(r) = g.reps {
        set("experiment.reps", json!(r))?;
    }
    if let Some(ns) = &g.n_values {
        set("experiment.n_values", json!(ns))?;
    }
    match &cli.command {
        Command::Sample(a) => {
            if let Some(n) = a.n {
                set("sample.n", json!(n))?;
            }
            if let Some(s) = a.stage {
                set("sample.stage", json!(s))?;
            }
            if let Some(s) = a.start {
                set("sample.start", json!(s))?;
            }
            if a.draw_shifts {
                set("sample.draw_shifts", json!(true))?;
            }
            if let Some(f) = &a.format {
                set("sample.format", json!(f))?;
            }
        }
        Command::Tsp(a) => {
            if let Some(p) = &a.instance {
                set("tsp.instance", json!(p))?;
            }
            if let Some(m) = &a.method {
                set("experiment.solver.method", json!(m))?;
            }
        }
        Command::Oscillate(a) => {
            if a.pin_shifts {
                set("experiment.pin_shifts", json!(true))?;
            }
            if let Some(k) = a.calibrate_stages {
                set("oscillate.calibrate_stages", json!(k))?;
            }
            if let Some(b) = a.beta_hat {
                set("oscillate.beta_hat", json!(b))?;
            }
        }
        Command::Closeness(a) => {
            if let Some(s) = a.stage {
                set("closeness.stage", json!(s))?;
            }
            if let Some(m) = a.m {
                set("closeness.m", json!(m))?;
            }
            if let Some(c) = a.cells {
                set("closeness.cells", json!(c))?;
            }
        }
        Command::Discrepancy(a) => {
            if let Some(g) = &a.generator {
                set("discrepancy.generator", json!(g))?;
            }
            if let Some(n) = a.n {
                set("discrepancy.n", json!(n))?;
            }
            if let Some(m) = &a.mode {
                set("discrepancy.mode", json!(m))?;
            }
            if let Some(r) = a.resolution {
                set("discrepancy.resolution", json!(r))?;
            }
        }
        Command::Verify(a) => {
            if let Some(only) = &a.only {
                set("verify.only", json!(only))?;
            }
        }
        Command::Beta => {}
    }
    for entry in &g.set {
        let (path, raw) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects PATH=VALUE, got `{entry}`")))?;
        set(path, config::loose_value(raw))?;
    }
    Ok(v)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(twincity::Error::from)? + "\n";
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn experiment_name(cfg: &ExperimentConfig, fallback: &str) -> String {
    if cfg.name == "experiment" {
        fallback.to_string()
    } else {
        cfg.name.clone()
    }
}

fn finish_run(
    out: &Path,
    name: &str,
    raw: &Value,
    spec: Option<ProcessSpec>,
    started: RunManifest,
) -> Result<()> {
    let m = RunManifest {
        config: raw.clone(),
        spec,
        ..started
    }
    .finish();
    m.write(&out.join(format!("{name}.manifest.json")))?;
    Ok(())
}

fn sample(cfg: &CliConfig, out: &Path) -> Result<()> {
    let s = &cfg.sample;
    let e = &cfg.experiment;
    let stage = s.stage.unwrap_or(e.spec.depth());
    let spec = replication_spec(&e.spec, e.master_seed, 0, !s.draw_shifts);
    let pts = if s.n == 0 {
        spec.truncated(stage)?;
        Vec::new()
    } else {
        spec.sample_segment(stage, s.start, s.start + s.n as i64 - 1)?
    };
    create_dir(out)?;
    let path = match s.format {
        Format::Json => {
            let path = out.join("sample.json");
            write_json(&path, &pts)?;
            path
        }
        Format::Csv => {
            let path = out.join("sample.csv");
            let mut w = csv::Writer::from_path(&path).map_err(twincity::Error::from)?;
            w.write_record(["t", "x", "y"])
                .map_err(twincity::Error::from)?;
            for (i, p) in pts.iter().enumerate() {
                let t = s.start + i as i64;
                w.write_record([t.to_string(), p.x().to_string(), p.y().to_string()])
                    .map_err(twincity::Error::from)?;
            }
            w.flush().map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            path
        }
    };
    println!(
        "wrote {} points of X^({stage}) to {}",
        pts.len(),
        path.display()
    );
    Ok(())
}

fn read_instance(path: &Path) -> Result<Vec<TorusPoint>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("tsp.instance {}: {e}", path.display())))?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut pts = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Config(format!("tsp.instance: {e}")))?;
            let coord = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "tsp.instance: row {} needs numeric x,y",
                            line + 1
                        ))
                    })
            };
            pts.push(TorusPoint::new(coord(0)?, coord(1)?));
        }
        Ok(pts)
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("tsp.instance: {e}")))
    }
}

fn tsp(cfg: &CliConfig, out: &Path) -> Result<()> {
    let path = cfg.tsp.instance.as_ref().ok_or_else(|| {
        CliError::Config("field `tsp.instance`: an instance file is required".into())
    })?;
    let pts = read_instance(path)?;
    let e = &cfg.experiment;
    let solver = e
        .solver
        .with_seed(derive_seed(e.master_seed, streams::SOLVER, 0));
    let sol = solver.solve(&pts, e.metric)?;
    create_dir(out)?;
    let dest = out.join("solution.json");
    write_json(&dest, &sol)?;
    println!(
        "{} path through {} points: length {:.6} (optimal: {}) -> {}",
        sol.method,
        pts.len(),
        sol.length,
        sol.optimal,
        dest.display()
    );
    Ok(())
}

fn beta(cfg: &CliConfig, raw: &Value, out: &Path) -> Result<()> {
    let e = &cfg.experiment;
    let name = experiment_name(e, "beta");
    let started = RunManifest::start(Value::Null, None);
    let est = estimate_beta(e)?;
    create_dir(out)?;
    append_records_csv(&out.join(format!("{name}.csv")), &est.records)?;
    finish_run(out, &name, raw, Some(e.spec.clone()), started)?;
    for r in &est.records {
        println!(
            "n = {:>8}  ratio = {:.5} ± {:.5}",
            r.n, r.mean_ratio, r.stderr
        );
    }
    println!("beta_hat = {:.5}", est.beta_hat);
    Ok(())
}

fn oscillate(cfg: &CliConfig, raw: &Value, out: &Path) -> Result<()> {
    let o = &cfg.oscillate;
    let mut e = cfg.experiment.clone();
    let name = experiment_name(&e, "oscillate");
    let started = RunManifest::start(Value::Null, None);
    let mut calibrated = Vec::new();
    if o.calibrate_stages > 0 {
        let total = e.spec.depth() + o.calibrate_stages;
        let mut schedule = if o.etas.is_empty() {
            Schedule::geometric(total)
        } else {
            Schedule::new(o.etas.clone())?
        };
        let beta_hat = match o.beta_hat {
            Some(b) => b,
            None => {
                let iid = ExperimentConfig {
                    spec: ProcessSpec::iid(0),
                    n_values: vec![o.beta_n],
                    ..e.clone()
                };
                estimate_beta(&iid)?.beta_hat
            }
        };
        let mut spec = e.spec.clone();
        for _ in 0..o.calibrate_stages {
            let (next, cal) =
                calibrate_next_stage(&e, &spec, &mut schedule, beta_hat, &o.calibration)?;
            println!(
                "calibrated stage {}: N = {}, epsilon = {:.4e}",
                cal.j, cal.block_len, cal.epsilon
            );
            spec = next;
            calibrated.push(cal);
        }
        e.spec = spec;
    }
    let records = oscillation_experiment(&e, &o.checkpoints)?;
    create_dir(out)?;
    append_records_csv(&out.join(format!("{name}.csv")), &records)?;
    let mut raw = raw.clone();
    if !calibrated.is_empty() {
        raw["calibrated"] = serde_json::to_value(&calibrated).map_err(twincity::Error::from)?;
    }
    finish_run(out, &name, &raw, Some(e.spec.clone()), started)?;
    for r in &records {
        println!(
            "{:<12} n = {:>8}  ratio = {:.5} ± {:.5}",
            r.checkpoint_kind.to_string(),
            r.n,
            r.mean_ratio,
            r.stderr
        );
    }
    Ok(())
}

fn closeness(cfg: &CliConfig, raw: &Value, out: &Path) -> Result<()> {
    let c = &cfg.closeness;
    let e = &cfg.experiment;
    let name = experiment_name(e, "closeness");
    let started = RunManifest::start(Value::Null, None);
    let rep = closeness_diagnostic(&e.spec, c.stage, c.m, c.cells, e.reps, e.master_seed)?;
    create_dir(out)?;
    let path = out.join(format!("{name}.csv"));
    append_rows(&path, std::slice::from_ref(&rep))?;
    finish_run(out, &name, raw, Some(e.spec.clone()), started)?;
    println!(
        "distance {:.5} (noise floor {:.5}); bound {} + 3·{:.5}: {}",
        rep.empirical_distance,
        rep.noise_floor,
        rep.bound,
        rep.mc_error,
        if rep.passes { "ok" } else { "exceeded" }
    );
    Ok(())
}

#[derive(Serialize)]
struct DiscrepancyRow {
    generator: GeneratorKind,
    rep: usize,
    n: usize,
    mode: twincity::stats::DiscrepancyMode,
    resolution: usize,
    value: f64,
    seed: u64,
}

fn discrepancy(cfg: &CliConfig, raw: &Value, out: &Path) -> Result<()> {
    let d = &cfg.discrepancy;
    let e = &cfg.experiment;
    let name = experiment_name(e, "discrepancy");
    let started = RunManifest::start(Value::Null, None);
    let generators: Vec<SequenceGenerator> = match d.generator {
        GeneratorKind::Kronecker => vec![SequenceGenerator::Kronecker {
            phi1: d.phi1,
            phi2: d.phi2,
        }],
        GeneratorKind::Iid | GeneratorKind::Process => {
            let base = match d.generator {
                GeneratorKind::Iid => ProcessSpec::iid(0),
                _ => e.spec.clone(),
            };
            (0..e.reps as u64)
                .map(|r| SequenceGenerator::Process {
                    spec: replication_spec(&base, e.master_seed, r, e.pin_shifts),
                    j: base.depth(),
                })
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(generators.len());
    for (rep, g) in generators.iter().enumerate() {
        let pts = g.points(d.n)?;
        let res = rectangle_discrepancy(&pts, d.mode, d.resolution)?;
        rows.push(DiscrepancyRow {
            generator: d.generator,
            rep,
            n: d.n,
            mode: d.mode,
            resolution: res.resolution,
            value: res.value,
            seed: e.master_seed,
        });
    }
    create_dir(out)?;
    append_rows(&out.join(format!("{name}.csv")), &rows)?;
    finish_run(out, &name, raw, None, started)?;
    let mut values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    values.sort_by(f64::total_cmp);
    let median = values[values.len() / 2];
    println!(
        "{} sequence(s), n = {}: median discrepancy {median:.6}",
        rows.len(),
        d.n
    );
    Ok(())
}

fn append_rows<T: Serialize>(path: &PathBuf, rows: &[T]) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in rows {
        w.serialize(r).map_err(twincity::Error::from)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn verify(cfg: &CliConfig, out: &Path) -> Result<()> {
    let opts = AcceptanceOptions {
        master_seed: cfg.experiment.master_seed,
        only: cfg.verify.only.clone(),
    };
    let outcomes = acceptance::run(&opts, |o| println!("{o}"));
    create_dir(out)?;
    write_json(&out.join("verify.json"), &outcomes)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{}/{} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    if failed > 0 {
        return Err(CliError::Verify { failed });
    }
    Ok(())
}
