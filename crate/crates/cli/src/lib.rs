//! Experiment harness: runs TOML-declared tasks against `blowup-core` and
//! records every output in an append-only manifest.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod sweep;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use blowup_core::Exec;

pub use config::{parse_config, Config};
pub use error::HarnessError;
pub use manifest::RunManifest;
pub use output::{Format, Table};

use manifest::{append, sha256_hex, task_record, write_artifacts};
use output::Artifact;
use tasks::{timed, Context, Produced, TaskOutcome};

/// Which tasks of a configuration to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Every declared task, then the sweep if one is declared.
    Run,
    Analyze,
    Classify,
    Simulate,
    Sweep,
    VerifyProperties,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Analyze => "analyze",
            Command::Classify => "classify",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::VerifyProperties => "verify-properties",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Run directory; defaults to `runs/<run name or config stem>`.
    pub out: Option<PathBuf>,
    pub jobs: usize,
    /// Reserved: every algorithm is deterministic.
    pub seed: u64,
    pub format: Format,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out: None, jobs: 1, seed: 0, format: Format::Csv }
    }
}

enum Job {
    Analyze,
    Classify,
    Simulate,
    Verify,
    Sweep,
}

fn plan(cmd: Command, cfg: &Config) -> Result<Vec<Job>, HarnessError> {
    let t = &cfg.task;
    Ok(match cmd {
        Command::Run => {
            let mut jobs = Vec::new();
            if t.analyze.is_some() {
                jobs.push(Job::Analyze);
            }
            if t.classify.is_some() {
                jobs.push(Job::Classify);
            }
            if t.simulate.is_some() {
                jobs.push(Job::Simulate);
            }
            if t.verify_properties.is_some() {
                jobs.push(Job::Verify);
            }
            if cfg.sweep.is_some() {
                jobs.push(Job::Sweep);
            }
            jobs
        }
        Command::Analyze => vec![Job::Analyze],
        Command::Classify => vec![Job::Classify],
        Command::Simulate => vec![Job::Simulate],
        Command::VerifyProperties => vec![Job::Verify],
        Command::Sweep => {
            if cfg.sweep.is_none() {
                return Err(HarnessError::config("sweep", "missing section"));
            }
            vec![Job::Sweep]
        }
    })
}

fn needs_function(cmd: Command, cfg: &Config) -> Result<(), HarnessError> {
    let (f, psi) = match cmd {
        Command::Analyze => (true, false),
        Command::Classify | Command::Simulate => (true, true),
        _ => (false, false),
    };
    if f && cfg.f.is_none() {
        return Err(HarnessError::config("f", "missing section"));
    }
    if psi && cfg.psi.is_none() {
        return Err(HarnessError::config("psi", "missing section"));
    }
    Ok(())
}

fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

fn default_out(cfg: &Config, config_path: &Path) -> PathBuf {
    let name = cfg
        .run
        .name
        .clone()
        .or_else(|| config_path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "run".into());
    PathBuf::from("runs").join(name)
}

/// Runs `cmd` on the configuration at `config_path`.
///
/// Configuration problems are returned as [`HarnessError::Config`] before
/// anything is written. Task failures are recorded in the manifest and the
/// remaining tasks still run.
pub fn run(cmd: Command, config_path: &Path, opts: &RunOptions) -> Result<RunManifest, HarnessError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| HarnessError::config("<file>", format!("cannot read {}: {e}", config_path.display())))?;
    run_text(cmd, &text, config_path, opts)
}

/// As [`run`], with the configuration already read.
pub fn run_text(cmd: Command, text: &str, config_path: &Path, opts: &RunOptions) -> Result<RunManifest, HarnessError> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let (cfg, table) = parse_config(text)?;
    needs_function(cmd, &cfg)?;
    let jobs = plan(cmd, &cfg)?;
    if let Some(sw) = &cfg.sweep {
        if jobs.iter().any(|j| matches!(j, Job::Sweep)) {
            sweep::check_template(&table, sw)?;
        }
    }
    let needs_ctx = jobs.iter().any(|j| !matches!(j, Job::Sweep | Job::Verify)) || cfg.f.is_some();
    let ctx = if needs_ctx && !jobs.is_empty() { Some(Context::build(&cfg)?) } else { None };

    let format = opts.format;
    let outcomes: Vec<TaskOutcome> = with_pool(opts.jobs, || {
        Exec::Parallel.map(&jobs, |job| {
            let ctx = ctx.as_ref();
            let with_ctx = |f: &dyn Fn(&Context) -> Result<Produced, HarnessError>| match ctx {
                Some(c) => f(c),
                None => Err(HarnessError::Task("no context".into())),
            };
            match job {
                Job::Analyze => timed("analyze", tasks::ANALYZE_NOTES, || {
                    with_ctx(&|c| tasks::analyze(c, &cfg.task.analyze.clone().unwrap_or_default(), format))
                }),
                Job::Classify => timed("classify", tasks::CLASSIFY_NOTES, || {
                    with_ctx(&|c| tasks::classify(c, &cfg.task.classify.clone().unwrap_or_default(), format))
                }),
                Job::Simulate => timed("simulate", tasks::SIMULATE_NOTES, || {
                    with_ctx(&|c| tasks::simulate_task(c, &cfg.task.simulate.clone().unwrap_or_default(), format))
                }),
                Job::Verify => timed("verify-properties", tasks::VERIFY_NOTES, || {
                    tasks::verify(ctx, &cfg, &cfg.task.verify_properties.clone().unwrap_or_default(), format)
                }),
                Job::Sweep => {
                    let spec = cfg.sweep.as_ref().expect("planned only with a sweep section");
                    let notes = if spec.task == "classify" { tasks::CLASSIFY_NOTES } else { tasks::SIMULATE_NOTES };
                    timed("sweep", notes, || {
                        let t = sweep::run_sweep(&table, spec);
                        Ok(Produced { artifacts: vec![Artifact::table("sweep", &t, format)?], failure: None })
                    })
                }
            }
        })
    });

    let dir = opts.out.clone().unwrap_or_else(|| default_out(&cfg, config_path));
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
    let artifacts = write_artifacts(&dir, &outcomes)?;
    let manifest = RunManifest {
        run: cfg.run.name.clone().unwrap_or_else(|| dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()),
        command: cmd.as_str().into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_path: config_path.display().to_string(),
        config_sha256: sha256_hex(text.as_bytes()),
        config: serde_json::to_value(&table).map_err(|e| HarnessError::Task(e.to_string()))?,
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
        seed: opts.seed,
        jobs: opts.jobs,
        format,
        tasks: outcomes.iter().map(task_record).collect(),
        artifacts,
    };
    append(&dir, &manifest)?;
    Ok(manifest)
}
