//! Loading inputs and running one command over a batch.

use std::path::Path;
use std::time::Instant;

use formation::codec::{Document, Payload};
use formation::conjugate::{conjugate_value, duality_lower_bound};
use formation::entanglement::{concurrence, eof_minimize, von_neumann_entropy, wootters_eof};
use formation::harness::{additivity_gap, conjugate_additivity_gap, strong_superadditivity_gap, theorem_pipeline};
use formation::linalg::Subsystem;
use formation::{DensityMatrix, FourPartyDims, HermitianObservable, OptimizerConfig};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report::{CliError, ConfigEcho, InputRecord, ItemReport, Report};
use crate::{fresh_seed, write_output, Format, RunArgs};

/// Slack allowed above the oracle before a weak-duality check fails.
const DUALITY_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub enum Op {
    Entropy,
    Eof,
    Wootters,
    Conjugate,
    DualityCheck,
    Additivity,
    Superadditivity,
    TheoremCheck,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Entropy => "entropy",
            Op::Eof => "eof",
            Op::Wootters => "wootters",
            Op::Conjugate => "conjugate",
            Op::DualityCheck => "duality-check",
            Op::Additivity => "additivity",
            Op::Superadditivity => "superadditivity",
            Op::TheoremCheck => "theorem-check",
        }
    }

    fn arity(self) -> usize {
        match self {
            Op::DualityCheck | Op::Additivity => 2,
            _ => 1,
        }
    }
}

struct Loaded {
    path: String,
    doc: Document,
}

impl Loaded {
    fn fail(&self, err: impl Into<CliError>) -> CliError {
        err.into().in_file(&self.path)
    }

    /// The payload as a density matrix; pure states are converted.
    fn density(&self) -> Result<DensityMatrix, CliError> {
        match &self.doc.payload {
            Payload::Pure(psi) => Ok(psi.density()),
            Payload::Density(rho) => Ok(rho.clone()),
            Payload::Hermitian(_) => Err(self.fail(CliError::usage("expected a state, found an observable"))),
        }
    }

    fn observable(&self) -> Result<&HermitianObservable, CliError> {
        match &self.doc.payload {
            Payload::Hermitian(h) => Ok(h),
            _ => Err(self.fail(CliError::usage("expected an observable, found a state"))),
        }
    }

    fn is_observable(&self) -> bool {
        matches!(self.doc.payload, Payload::Hermitian(_))
    }

    fn four_party(&self, override_dims: Option<FourPartyDims>) -> Result<Option<FourPartyDims>, CliError> {
        let dims = override_dims.or(self.doc.dims.four_party());
        if let Some(d) = dims {
            let split = d.system_split().map_err(|e| self.fail(e))?;
            let actual = self.doc.dims.split().map_err(|e| self.fail(e))?;
            if split != actual {
                return Err(self.fail(CliError::usage(format!(
                    "four-party dims {}x{}x{}x{} do not match the file's {}x{} split",
                    d.d1a, d.d1b, d.d2a, d.d2b, actual.a, actual.b
                ))));
            }
        }
        Ok(dims)
    }

    fn require_four_party(&self, override_dims: Option<FourPartyDims>) -> Result<FourPartyDims, CliError> {
        self.four_party(override_dims)?
            .ok_or_else(|| self.fail(CliError::usage("needs four-party dims in the file or --four-party")))
    }
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&shown, &e))?;
    let doc = Document::decode(&text).map_err(|e| CliError::from(e).in_file(&shown))?;
    Ok(Loaded { path: shown, doc })
}

fn optimizer_config(args: &RunArgs, seed: u64) -> Result<OptimizerConfig, CliError> {
    let mut cfg = OptimizerConfig::default().with_seed(seed);
    if let Some(r) = args.restarts {
        cfg.restarts = r;
    }
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::usage("--tol must be positive"));
        }
        cfg.grad_tol = t;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    cfg.ensemble_size = args.ensemble_size;
    Ok(cfg)
}

struct Outcome {
    non_converged: bool,
    result: Value,
}

fn to_value(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn entropy(item: &Loaded) -> Result<Outcome, CliError> {
    let rho = item.density()?;
    Ok(Outcome {
        non_converged: false,
        result: json!({
            "entropy": von_neumann_entropy(&rho),
            "entropyA": von_neumann_entropy(&rho.reduce(Subsystem::A)),
            "entropyB": von_neumann_entropy(&rho.reduce(Subsystem::B)),
            "purity": rho.purity(),
        }),
    })
}

fn eof(item: &Loaded, four: Option<FourPartyDims>, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    let mut rho = item.density()?;
    let four = item.four_party(four)?;
    if let Some(d) = four {
        rho = d.cut_density(&rho).map_err(|e| item.fail(e))?;
    }
    let res = eof_minimize(&rho, cfg).map_err(|e| item.fail(e))?;
    let mut result = to_value(res.summary());
    result["acrossCut"] = json!(four.is_some());
    Ok(Outcome {
        non_converged: res.non_converged,
        result,
    })
}

fn wootters(item: &Loaded) -> Result<Outcome, CliError> {
    let rho = item.density()?;
    Ok(Outcome {
        non_converged: false,
        result: json!({
            "concurrence": concurrence(&rho).map_err(|e| item.fail(e))?,
            "eof": wootters_eof(&rho).map_err(|e| item.fail(e))?,
        }),
    })
}

fn conjugate(item: &Loaded, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    let res = conjugate_value(item.observable()?, cfg).map_err(|e| item.fail(e))?;
    let mut result = to_value(res.summary());
    result["optimizer"] = json!(res
        .optimizer
        .amplitudes()
        .iter()
        .map(|z| [z.re, z.im])
        .collect::<Vec<_>>());
    Ok(Outcome {
        non_converged: res.non_converged,
        result,
    })
}

fn duality(a: &Loaded, b: &Loaded, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    let (state, obs) = if a.is_observable() { (b, a) } else { (a, b) };
    let rho = state.density()?;
    let h = obs.observable()?;
    let bound = duality_lower_bound(&rho, h, cfg).map_err(|e| state.fail(e))?;
    let d = rho.dims();
    let (oracle, source, oracle_nc) = if d.a == 2 && d.b == 2 {
        (wootters_eof(&rho).map_err(|e| state.fail(e))?, "wootters", false)
    } else {
        let res = eof_minimize(&rho, cfg).map_err(|e| state.fail(e))?;
        (res.value, "eof-minimize", res.non_converged)
    };
    let non_converged = bound.conjugate.non_converged || oracle_nc;
    let pass = bound.bound <= oracle + DUALITY_SLACK;
    let mut result = to_value(&bound);
    result["oracle"] = json!(oracle);
    result["oracleSource"] = json!(source);
    result["slack"] = json!(DUALITY_SLACK);
    result["pass"] = json!(pass);
    Ok(Outcome { non_converged, result })
}

fn additivity(a: &Loaded, b: &Loaded, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    let report = match (a.is_observable(), b.is_observable()) {
        (true, true) => conjugate_additivity_gap(a.observable()?, b.observable()?, cfg).map_err(|e| a.fail(e))?,
        (false, false) => additivity_gap(&a.density()?, &b.density()?, cfg).map_err(|e| a.fail(e))?,
        _ => return Err(b.fail(CliError::usage("pairs must be two states or two observables"))),
    };
    Ok(Outcome {
        non_converged: report.non_converged,
        result: to_value(&report),
    })
}

fn superadditivity(item: &Loaded, four: Option<FourPartyDims>, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    let dims = item.require_four_party(four)?;
    let report = strong_superadditivity_gap(&item.density()?, dims, cfg).map_err(|e| item.fail(e))?;
    Ok(Outcome {
        non_converged: report.non_converged,
        result: to_value(&report),
    })
}

fn theorem(item: &Loaded, four: Option<FourPartyDims>, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    let dims = item.require_four_party(four)?;
    let report = theorem_pipeline(&item.density()?, dims, cfg).map_err(|e| item.fail(e))?;
    Ok(Outcome {
        non_converged: report.non_converged,
        result: to_value(&report),
    })
}

fn run_item(op: Op, group: &[Loaded], four: Option<FourPartyDims>, cfg: &OptimizerConfig) -> Result<Outcome, CliError> {
    match op {
        Op::Entropy => entropy(&group[0]),
        Op::Eof => eof(&group[0], four, cfg),
        Op::Wootters => wootters(&group[0]),
        Op::Conjugate => conjugate(&group[0], cfg),
        Op::DualityCheck => duality(&group[0], &group[1], cfg),
        Op::Additivity => additivity(&group[0], &group[1], cfg),
        Op::Superadditivity => superadditivity(&group[0], four, cfg),
        Op::TheoremCheck => theorem(&group[0], four, cfg),
    }
}

pub fn execute(op: Op, args: &RunArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if args.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    if !args.inputs.len().is_multiple_of(op.arity()) {
        return Err(CliError::usage(format!("{} takes inputs in pairs", op.name())));
    }
    let four = match &args.four_party {
        Some(d) => Some(FourPartyDims::new(d[0], d[1], d[2], d[3])?),
        None => None,
    };
    let (seed, seed_generated) = match args.seed {
        Some(s) => (s, false),
        None => (fresh_seed(), true),
    };
    let cfg = optimizer_config(args, seed)?;
    let loaded = args.inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start workers: {e}")))?;
    let groups: Vec<&[Loaded]> = loaded.chunks(op.arity()).collect();
    let outcomes: Vec<Result<(Outcome, f64), CliError>> = pool.install(|| {
        groups
            .par_iter()
            .map(|group| {
                let t = Instant::now();
                run_item(op, group, four, &cfg).map(|o| (o, t.elapsed().as_secs_f64()))
            })
            .collect()
    });

    let mut results = Vec::with_capacity(outcomes.len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let (o, secs) = outcome?;
        results.push(ItemReport {
            inputs: (i * op.arity()..(i + 1) * op.arity()).collect(),
            non_converged: o.non_converged,
            wall_time_seconds: secs,
            result: o.result,
        });
    }
    let report = Report {
        command: op.name(),
        config: ConfigEcho {
            restarts: cfg.restarts,
            tol: cfg.grad_tol,
            max_iters: cfg.max_iters,
            ensemble_size: cfg.ensemble_size,
            seed,
            seed_generated,
            four_party: args.four_party.clone(),
            jobs: args.jobs,
            format: args.format.as_str(),
        },
        inputs: loaded
            .iter()
            .map(|l| InputRecord {
                path: l.path.clone(),
                kind: l.doc.kind().as_str(),
                sha256: l.doc.digest(),
            })
            .collect(),
        non_converged: results.iter().any(|r| r.non_converged),
        results,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
    };
    write_output(args.output.as_ref(), &text)
}
