//! The `partdist` command line.
//!
//! Results go to stdout as JSON, diagnostics to stderr. Exit codes: 0 on
//! success, 1 when a verification or family report fails, 2 on input or
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::decay::{self, EstimatorSettings, FamilySpec};
use crate::error::{Error, Result};
use crate::io::{self, MatrixFile, PovmFile};
use crate::matops::{self, BipartiteOperator};
use crate::measurement::{self, Family};
use crate::quantum;
use crate::state::{self, DensityMatrix, Seed};
use crate::verify::{self, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "PARTDIST_THREADS";

#[derive(Debug, Parser)]
#[command(name = "partdist", version, about = "Partitioned distinguishability measures for quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureKind {
    Dk,
    Fk,
    Sd,
    Sdk,
    Pe,
    Fid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    Pure,
    Mixed,
    Povm,
    Bipartite,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one measure on a pair of density matrices.
    Measure {
        #[arg(long)]
        rho0: PathBuf,
        #[arg(long)]
        rho1: PathBuf,
        #[arg(long, value_enum)]
        measure: MeasureKind,
        /// Omit for dk/fk to list every k.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "A")]
        family: Family,
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the randomized inequality suites.
    Verify {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        bipartite: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        slack: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        /// Write the full report here and print only a summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decay rates and equivalence chains for a family of state pairs.
    Family {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated, e.g. `dtr,dk:1,sd:A,sdk:B:1,pegap,infid,schatten:2`.
        #[arg(long)]
        measures: String,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, default_value_t = 1)]
        n0: usize,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random state, POVM, or bipartite state.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rank: Option<usize>,
        /// Outcome count for `povm`.
        #[arg(long)]
        m: Option<usize>,
        /// Dimension of the traced-out factor for `bipartite`.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partial-trace Ky Fan slacks and L/R reconstruction residuals of a bipartite operator.
    Lemma1 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "N")]
        n: usize,
        /// Omit to report every k.
        #[arg(long)]
        k: Option<usize>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match thread_pool() {
        Ok(Some(pool)) => pool.install(|| execute(cli.command)),
        Ok(None) => execute(cli.command),
        Err(e) => Err(e),
    };
    match result {
        Ok((value, code)) => match io::to_json(&value) {
            Ok(text) => {
                let _ = writeln!(out, "{text}");
                code
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Input(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| Error::Internal(e.to_string()))
}

fn execute(command: Command) -> Result<(Value, i32)> {
    match command {
        Command::Measure {
            rho0,
            rho1,
            measure,
            k,
            family,
            budget,
            seed,
        } => {
            let r0 = io::load_matrix(&rho0)?.to_density()?;
            let r1 = io::load_matrix(&rho1)?.to_density()?;
            Ok((measure_value(&r0, &r1, measure, k, family, budget, Seed(seed))?, EXIT_OK))
        }
        Command::Verify {
            trials,
            dims,
            bipartite,
            seed,
            slack,
            budget,
            out,
        } => {
            let defaults = SuiteConfig::default();
            let config = SuiteConfig {
                master_seed: seed.map_or(defaults.master_seed, Seed),
                trials: trials.unwrap_or(defaults.trials),
                dims: dims.unwrap_or(defaults.dims),
                bipartite_n: bipartite.unwrap_or(defaults.bipartite_n),
                budget: budget.unwrap_or(defaults.budget),
                slack: slack.unwrap_or(defaults.slack),
            };
            let report = verify::run_suite(&config)?;
            let code = if report.passed { EXIT_OK } else { EXIT_FAILED };
            let value = match out {
                Some(path) => {
                    io::save_report(&path, &report)?;
                    json!({
                        "report": path.display().to_string(),
                        "passed": report.passed,
                        "hard_failures": report.hard_failures,
                        "warnings": report.warnings,
                        "failed_checks": report
                            .checks
                            .iter()
                            .filter(|c| !c.passed)
                            .map(|c| c.name.clone())
                            .collect::<Vec<_>>(),
                    })
                }
                None => to_value(&report)?,
            };
            Ok((value, code))
        }
        Command::Family {
            spec,
            measures,
            n_max,
            n0,
            budget,
            seed,
            out,
        } => {
            let spec: FamilySpec = io::load_json(&spec)?;
            let n_max = n_max
                .or(spec.n_max)
                .ok_or_else(|| Error::Input("--n-max is required when the spec has no n_max".into()))?;
            let measures = decay::parse_measures(&measures)?;
            let report = decay::check_equivalence(&spec, &measures, n_max, n0, EstimatorSettings { budget, seed: Seed(seed) })?;
            let code = if report.passed { EXIT_OK } else { EXIT_FAILED };
            if let Some(path) = out {
                io::save_report(&path, &report)?;
            }
            Ok((to_value(&report)?, code))
        }
        Command::Gen {
            kind,
            dim,
            rank,
            m,
            n,
            seed,
            out,
        } => {
            let seed = Seed(seed);
            let value = match kind {
                GenKind::Pure => save_state(&out, &state::random_pure(dim, seed))?,
                GenKind::Mixed => save_state(&out, &state::random_mixed(dim, rank.unwrap_or(dim), seed)?)?,
                GenKind::Povm => {
                    let povm = measurement::random_rank_one_povm(dim, m.unwrap_or(dim), seed)?;
                    io::save_povm(&out, &povm)?;
                    json!({ "kind": "povm", "dim": dim, "outcomes": povm.len(), "path": out.display().to_string() })
                }
                GenKind::Bipartite => {
                    let s = state::random_bipartite_state(n, dim, rank.unwrap_or(n * dim), seed)?;
                    io::save_matrix(&out, &MatrixFile::bipartite(&s.operator()))?;
                    json!({ "kind": "bipartite", "n": n, "dim": dim, "path": out.display().to_string() })
                }
            };
            Ok((value, EXIT_OK))
        }
        Command::Lemma1 { input, n, k } => {
            let file = io::load_matrix(&input)?;
            if let Some(split) = file.split_n {
                if split != n {
                    return Err(Error::Input(format!("--N {n} disagrees with split_N = {split} in the file")));
                }
            }
            let at = BipartiteOperator::new(file.to_matrix()?, n)?;
            Ok((lemma1_value(&at, k)?, EXIT_OK))
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))
}

fn save_state(path: &PathBuf, rho: &DensityMatrix) -> Result<Value> {
    io::save_matrix(path, &MatrixFile::from_matrix(rho.matrix()))?;
    Ok(json!({ "kind": "state", "dim": rho.dim(), "path": path.display().to_string() }))
}

fn k_list(k: Option<usize>, lo: usize, hi: usize) -> Result<Vec<usize>> {
    match k {
        Some(k) if (lo..=hi).contains(&k) => Ok(vec![k]),
        Some(k) => Err(Error::Input(format!("--k {k} outside {lo}..={hi}"))),
        None => Ok((lo..=hi).collect()),
    }
}

fn measure_value(
    r0: &DensityMatrix,
    r1: &DensityMatrix,
    measure: MeasureKind,
    k: Option<usize>,
    family: Family,
    budget: usize,
    seed: Seed,
) -> Result<Value> {
    let d = r0.dim();
    if r1.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: r1.dim(),
        });
    }
    let per_k = |name: &str, f: &dyn Fn(usize) -> Result<f64>| -> Result<Value> {
        let values = k_list(k, 0, d)?
            .into_iter()
            .map(|k| Ok(json!({ "k": k, "value": f(k)? })))
            .collect::<Result<Vec<Value>>>()?;
        Ok(json!({ "measure": name, "dim": d, "values": values }))
    };
    match measure {
        MeasureKind::Dk => per_k("dk", &|k| quantum::partitioned_trace_distance(r0, r1, k)),
        MeasureKind::Fk => per_k("fk", &|k| quantum::partial_fidelity(r0, r1, k)),
        MeasureKind::Pe => Ok(json!({ "measure": "pe", "dim": d, "value": quantum::pe_quantum(r0, r1)? })),
        MeasureKind::Fid => Ok(json!({ "measure": "fid", "dim": d, "value": quantum::fidelity(r0, r1)? })),
        MeasureKind::Sd | MeasureKind::Sdk => {
            let est = match (measure, k) {
                (MeasureKind::Sd, _) => quantum::estimate_sd(r0, r1, family, budget, seed)?,
                (_, Some(k)) => quantum::estimate_sd_k(r0, r1, k, family, budget, seed)?,
                (_, None) => return Err(Error::Input("--measure sdk needs --k".into())),
            };
            Ok(json!({
                "measure": if est.k.is_some() { "sdk" } else { "sd" },
                "dim": d,
                "family": family.to_string(),
                "k": est.k,
                "budget": est.budget,
                "seed": est.seed.0,
                "value": est.value,
                "start_index": est.start_index,
                "best_povm": to_value(&PovmFile::from_povm(&est.best_povm))?,
            }))
        }
    }
}

fn lemma1_value(at: &BipartiteOperator, k: Option<usize>) -> Result<Value> {
    let ks = k_list(k, 1, at.d())?;
    let slacks = ks
        .iter()
        .map(|&k| Ok(json!({ "k": k, "slack": verify::check_lemma1(at, k)? })))
        .collect::<Result<Vec<Value>>>()?;
    let factors = matops::lr_decompose(at)?;
    let bound = matops::lr_bound(at);
    Ok(json!({
        "n": at.n(),
        "d": at.d(),
        "slacks": slacks,
        "residuals": to_value(&factors.residuals)?,
        "residual_bound": bound,
        "reconstruction_ok": factors.residuals.max() <= bound,
    }))
}
