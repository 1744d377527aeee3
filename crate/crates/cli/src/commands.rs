//! Subcommand implementations. Each returns the exit code on success; errors
//! carry their own code through [`CliError`].

use crate::model::{self, Family, Model};
use crate::number::{JsonScalar, Num};
use crate::{pretty, Cli, CliError, Command, Suite};
use clap::ValueEnum;
use mvps::general::{compare_laws, sample_urn};
use mvps::inference::{fit_model, FitOptions, FitResult, ThetaStatus};
use mvps::partition::{bell_number, enumerate_partitions, recover_partition, Partition};
use mvps::process::{mvps_coefficients, rebalance, sample};
use mvps::scalar::{Scalar, DEFAULT_TOL};
use mvps::verify::{self, Counterexample, SufficientnessCounterexample, Verdict, Verifier};
use mvps::{Execution, Kernel, Measure, PredictiveFamily, StateSpace, Trajectory};
use serde::Deserialize;
use serde_json::{json, Value};
use std::io::Write;

fn io(e: std::io::Error) -> CliError {
    CliError::Input(e.to_string())
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Simulate {
            model,
            n,
            seed,
            out: path,
        } => {
            let loaded = load(model, err)?;
            let csv = simulate(&loaded.model, *n, seed.seed)?;
            write_target(path.as_deref(), &csv, out)?;
            Ok(0)
        }
        Command::Verify {
            model,
            suite,
            max_len,
            partition,
            pretty,
        } => {
            let loaded = load(model, err)?;
            let Model::Finite {
                family,
                partition: hint,
            } = &loaded.model
            else {
                return Err(CliError::Input(format!(
                    "{model}: verify needs a finite-state model"
                )));
            };
            let chosen = partition
                .as_deref()
                .map(|p| parse_partition(p, family.space()))
                .transpose()?
                .or_else(|| hint.clone());
            let verifier = Verifier {
                tol: DEFAULT_TOL,
                exec,
            };
            let (pass, mut report) = match family {
                Family::Exact(f) => verify_family(f, chosen, suite, *max_len, verifier)?,
                Family::Float(f) => verify_family(f, chosen, suite, *max_len, verifier)?,
            };
            report["mode"] = json!(if family.is_exact() { "exact" } else { "float" });
            report["pass"] = json!(pass);
            emit_report(&report, *pretty, out)?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Enumerate { k } => {
            let space = StateSpace::indexed(*k)?;
            for p in enumerate_partitions(*k)? {
                writeln!(out, "{}", partition_text(&p, &space)).map_err(io)?;
            }
            Ok(0)
        }
        Command::Bell { k } => {
            writeln!(out, "{}", bell_number(*k)?).map_err(io)?;
            Ok(0)
        }
        Command::Fit {
            trajectory,
            nu,
            estimate_nu,
            k,
            states,
            pretty,
        } => {
            let report = fit(
                trajectory,
                nu.as_deref(),
                *estimate_nu,
                *k,
                states.as_deref(),
                exec,
            )?;
            emit_report(&report, *pretty, out)?;
            Ok(0)
        }
        Command::CompareLaws {
            model,
            prefix,
            reps,
            seed,
            csv,
            pretty,
        } => {
            let loaded = load(model, err)?;
            let Model::General(m) = &loaded.model else {
                return Err(CliError::Input(format!(
                    "{model}: compare-laws needs a model with bins"
                )));
            };
            let c = compare_laws(m, *prefix, *reps, seed.seed, exec)?;
            let seq = |s: &[usize]| {
                s.iter()
                    .map(|b| (b + 1).to_string())
                    .collect::<Vec<_>>()
                    .join("-")
            };
            let rows: Vec<Value> = (0..c.sequences.len())
                .map(|i| {
                    json!({
                        "sequence": seq(&c.sequences[i]),
                        "exact": c.exact[i].to_json(),
                        "exact_f64": c.exact[i].to_f64(),
                        "urn": c.urn[i],
                        "hierarchical": c.hierarchical[i],
                    })
                })
                .collect();
            let report = json!({
                "prefix_len": c.prefix_len,
                "reps": c.reps,
                "seed": seed.seed,
                "tv_urn": c.tv_urn,
                "tv_hierarchical": c.tv_hierarchical,
                "mc_bound": c.mc_bound,
                "sequences": rows,
            });
            if let Some(path) = csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["sequence", "exact", "exact_f64", "urn", "hierarchical"])
                    .map_err(|e| CliError::Input(e.to_string()))?;
                for i in 0..c.sequences.len() {
                    w.write_record([
                        seq(&c.sequences[i]),
                        c.exact[i].to_string(),
                        c.exact[i].to_f64().to_string(),
                        c.urn[i].to_string(),
                        c.hierarchical[i].to_string(),
                    ])
                    .map_err(|e| CliError::Input(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
                std::fs::write(path, bytes).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
            }
            emit_report(&report, *pretty, out)?;
            Ok(0)
        }
        Command::Model { model } => {
            let loaded = load(model, err)?;
            let file = model::emit(&loaded.model)?;
            let text = serde_json::to_string_pretty(&file).expect("model files serialise");
            writeln!(out, "{text}").map_err(io)?;
            Ok(0)
        }
    }
}

fn load(path: &str, err: &mut dyn Write) -> Result<model::Loaded, CliError> {
    let loaded = model::load(path)?;
    for w in &loaded.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(loaded)
}

fn write_target(path: Option<&str>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Input(format!("{p}: {e}"))),
        None => out.write_all(bytes).map_err(io),
    }
}

fn emit_report(report: &Value, as_text: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let text = if as_text {
        pretty::render(report)
    } else {
        serde_json::to_string_pretty(report).expect("reports serialise") + "\n"
    };
    out.write_all(text.as_bytes()).map_err(io)
}

/// CSV bytes for a simulated path: `step,state` or `step,value,block`, with
/// 1-based steps and blocks.
pub fn simulate(model: &Model, n: usize, seed: u64) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(e.to_string());
    match model {
        Model::Finite { family, .. } => {
            let t = match family {
                Family::Exact(f) => sample(f, n, seed)?,
                Family::Float(f) => sample(f, n, seed)?,
            };
            w.write_record(["step", "state"]).map_err(csv_err)?;
            for (i, label) in t.labels().enumerate() {
                w.write_record([(i + 1).to_string().as_str(), label])
                    .map_err(csv_err)?;
            }
        }
        Model::General(m) => {
            let t = sample_urn(m, n, seed);
            w.write_record(["step", "value", "block"])
                .map_err(csv_err)?;
            for (i, (x, b)) in t.values.iter().zip(&t.blocks).enumerate() {
                w.write_record([(i + 1).to_string(), x.to_string(), (b + 1).to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

/// `x1|x2,x3` on the model's labels.
pub fn parse_partition(text: &str, space: &StateSpace) -> Result<Partition, CliError> {
    let blocks = text
        .split('|')
        .map(|b| {
            b.split(',')
                .map(|l| {
                    space.index_of(l.trim()).ok_or_else(|| {
                        CliError::Input(format!("--partition: unknown state {:?}", l.trim()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Partition::from_blocks(space.len(), &blocks)
        .map_err(|e| CliError::Input(format!("--partition: {e}")))
}

pub fn partition_text(p: &Partition, space: &StateSpace) -> String {
    let blocks: Vec<String> = p
        .blocks()
        .iter()
        .map(|b| {
            format!(
                "{{{}}}",
                b.iter()
                    .map(|&j| space.label(j))
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect();
    format!("{{{}}}", blocks.join(","))
}

fn partition_json(p: &Partition, space: &StateSpace) -> Value {
    json!(p
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&j| space.label(j)).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn labels(t: &[usize], space: &StateSpace) -> Value {
    json!(t.iter().map(|&j| space.label(j)).collect::<Vec<_>>())
}

fn counterexample_json<S: JsonScalar>(c: &Counterexample<S>, space: &StateSpace) -> Value {
    json!({
        "trajectory": labels(&c.trajectory, space),
        "swapped": labels(&c.swapped_trajectory(), space),
        "position": c.position + 1,
        "probability": c.probability.to_json(),
        "swapped_probability": c.swapped_probability.to_json(),
    })
}

fn sufficientness_json<S: JsonScalar>(
    c: &SufficientnessCounterexample<S>,
    space: &StateSpace,
) -> Value {
    json!({
        "state": space.label(c.state),
        "first": labels(&c.first, space),
        "first_mass": c.first_mass.to_json(),
        "second": labels(&c.second, space),
        "second_mass": c.second_mass.to_json(),
    })
}

/// `θ` of an MVPS after rescaling its rows to mass one, or `1/a_1 − 1` for a
/// sufficientness-form family.
fn effective_theta<S: Scalar>(f: &PredictiveFamily<S>) -> Result<Option<S>, CliError> {
    Ok(match f {
        PredictiveFamily::Mvps(spec) => Some(rebalance(spec)?.theta().clone()),
        PredictiveFamily::Sufficientness { coefficients, .. } => {
            Some(S::one() / coefficients.get(1)? - S::one())
        }
        PredictiveFamily::Iid { .. } => None,
    })
}

fn verify_family<S: JsonScalar>(
    f: &PredictiveFamily<S>,
    chosen: Option<Partition>,
    suites: &[Suite],
    max_len: usize,
    verifier: Verifier,
) -> Result<(bool, Value), CliError> {
    let space = f.space();
    let partition = match chosen {
        Some(p) => p,
        None => f
            .kernel()
            .and_then(|r| recover_partition(f.nu(), r, verifier.tol).ok().flatten())
            .unwrap_or_else(|| Partition::discrete(space.len())),
    };
    let mut all = true;
    let mut results = serde_json::Map::new();
    for &suite in suites {
        let (pass, body) = match suite {
            Suite::Exchangeability => {
                let r = verifier.check_exchangeable(f, max_len)?;
                (
                    r.exchangeable,
                    json!({
                        "exchangeable": r.exchangeable,
                        "max_length_checked": r.max_length_checked,
                        "counterexample": r.counterexample.as_ref().map(|c| counterexample_json(c, space)),
                    }),
                )
            }
            Suite::Identities => identities(f, verifier.tol)?,
            Suite::Johnson => {
                let r = verifier.check_johnson_sufficientness(f, &partition, max_len)?;
                (
                    r.holds,
                    json!({
                        "partition": partition_json(&partition, space),
                        "holds": r.holds,
                        "counterexample": r.counterexample.as_ref().map(|c| sufficientness_json(c, space)),
                    }),
                )
            }
            Suite::Hill => {
                let nu = f.nu().weights();
                let w: Vec<S> = match effective_theta(f)? {
                    Some(theta) => nu.iter().map(|x| theta.clone() * x.clone()).collect(),
                    None => nu.to_vec(),
                };
                let r = verifier.check_hill_sufficientness(f, &w, &partition, max_len)?;
                (
                    r.holds,
                    json!({
                        "partition": partition_json(&partition, space),
                        "weights": w.iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
                        "holds": r.holds,
                        "counterexample": r.counterexample.as_ref().map(|c| sufficientness_json(c, space)),
                    }),
                )
            }
            Suite::Characterize => {
                let r = verifier.characterize(f, max_len)?;
                let verdict = match r.verdict {
                    Verdict::Mvps => "mvps",
                    Verdict::NonExchangeable => "non_exchangeable",
                    Verdict::NotSufficientnessForm => "not_sufficientness_form",
                };
                (
                    r.verdict == Verdict::Mvps,
                    json!({
                        "verdict": verdict,
                        "theta_hat": r.theta_hat.as_ref().map(JsonScalar::to_json),
                        "degenerate_iid": r.degenerate_iid,
                        "coefficient_trace": r.coefficient_trace.iter().map(|c| json!({
                            "n": c.n,
                            "observed": c.observed.to_json(),
                            "forced": c.forced.to_json(),
                        })).collect::<Vec<_>>(),
                        "counterexample": r.counterexample.as_ref().map(|c| counterexample_json(c, space)),
                    }),
                )
            }
        };
        let mut body = body;
        body["pass"] = json!(pass);
        all &= pass;
        let name = suite
            .to_possible_value()
            .expect("named suite")
            .get_name()
            .to_string();
        results.insert(name, body);
    }
    Ok((all, json!({ "max_len": max_len, "suites": results })))
}

/// Detailed balance, idempotence `R∘R = R`, and `c* = 0`, on the
/// probability-kernel form of the family.
fn identities<S: JsonScalar>(f: &PredictiveFamily<S>, tol: f64) -> Result<(bool, Value), CliError> {
    let (kernel, coeffs): (Kernel<S>, Option<(S, S)>) = match f {
        PredictiveFamily::Mvps(spec) => {
            let spec = rebalance(spec)?;
            let a1 = mvps_coefficients(spec.theta(), 1)?;
            let a2 = mvps_coefficients(spec.theta(), 2)?;
            (spec.kernel().clone(), Some((a1, a2)))
        }
        PredictiveFamily::Sufficientness {
            kernel,
            coefficients,
            ..
        } => (
            kernel.clone(),
            Some((coefficients.get(1)?, coefficients.get(2)?)),
        ),
        PredictiveFamily::Iid { nu } => (Kernel::constant(nu), None),
    };
    let nu: &Measure<S> = f.nu();
    let balance = verify::check_detailed_balance(nu, &kernel)?;
    let idempotence = verify::check_kernel_identity(nu, &kernel, &S::zero())?;
    let cstar = coeffs.map(|(a1, a2)| verify::cstar(&a1, &a2)).transpose()?;
    let at_cstar = cstar
        .as_ref()
        .map(|c| verify::check_kernel_identity(nu, &kernel, c))
        .transpose()?;
    let pass = balance.is_negligible(tol)
        && idempotence.is_negligible(tol)
        && cstar.as_ref().is_none_or(|c| c.is_negligible(tol));
    Ok((
        pass,
        json!({
            "detailed_balance_violation": balance.to_json(),
            "idempotence_violation": idempotence.to_json(),
            "cstar": cstar.as_ref().map(JsonScalar::to_json),
            "kernel_identity_violation_at_cstar": at_cstar.as_ref().map(JsonScalar::to_json),
        }),
    ))
}

#[derive(Deserialize)]
struct NuFile {
    #[serde(default)]
    states: Option<Vec<String>>,
    nu: Vec<Num>,
}

/// Reads the `state` column of a trajectory CSV.
pub fn read_trajectory(path: &str) -> Result<Vec<String>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let headers = r
        .headers()
        .map_err(|e| CliError::Input(format!("{path}: {e}")))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "state")
        .ok_or_else(|| CliError::Input(format!("{path}:1: header has no `state` column")))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{path}:{}: {e}", i + 2)))?;
        let v = rec
            .get(col)
            .ok_or_else(|| CliError::Input(format!("{path}:{}: missing state", i + 2)))?;
        out.push(v.trim().to_string());
    }
    Ok(out)
}

fn fit(
    path: &str,
    nu_path: Option<&str>,
    estimate: bool,
    k: Option<usize>,
    states: Option<&[String]>,
    exec: Execution,
) -> Result<Value, CliError> {
    if nu_path.is_some() == estimate {
        return Err(CliError::Input(
            "give exactly one of --nu and --estimate-nu".into(),
        ));
    }
    let nu_file = nu_path
        .map(|p| {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{p}: {e}")))?;
            serde_json::from_str::<NuFile>(&text)
                .map_err(|e| CliError::Input(format!("{p}:{}:{}: {e}", e.line(), e.column())))
        })
        .transpose()?;
    let labels = match (states, k, nu_file.as_ref().and_then(|f| f.states.clone())) {
        (Some(s), _, _) => s.to_vec(),
        (None, Some(k), _) => StateSpace::indexed(k)?.labels().to_vec(),
        (None, None, Some(s)) => s,
        (None, None, None) => {
            return Err(CliError::Input(
                "state space unknown: pass --k, --states, or a --nu file with states".into(),
            ))
        }
    };
    let space = StateSpace::new(labels)?;
    if let Some(k) = k {
        if k != space.len() {
            return Err(CliError::Input(format!(
                "--k {k} disagrees with {} listed states",
                space.len()
            )));
        }
    }
    let nu = nu_file
        .map(|f| {
            let w =
                f.nu.iter()
                    .map(|n| n.parse().map(|p| p.exact.to_f64()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::Input)?;
            if w.len() != space.len() {
                return Err(CliError::Input(format!(
                    "--nu: {} weights for {} states",
                    w.len(),
                    space.len()
                )));
            }
            Ok(Measure::probability(space.clone(), w)?)
        })
        .transpose()?;
    let values = read_trajectory(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| {
            space
                .index_of(l)
                .ok_or_else(|| CliError::Input(format!("{path}:{}: unknown state {l:?}", i + 2)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let t = Trajectory::new(space.clone(), values)?;
    let r = fit_model(
        &t,
        nu.as_ref(),
        FitOptions {
            exec,
            ..Default::default()
        },
    )?;
    Ok(fit_json(&r, &space, t.len()))
}

fn status(s: ThetaStatus) -> &'static str {
    match s {
        ThetaStatus::Interior => "interior",
        ThetaStatus::LowerEdge => "lower_edge",
        ThetaStatus::UpperEdge => "upper_edge",
        ThetaStatus::Flat => "flat",
    }
}

pub fn fit_json(r: &FitResult, space: &StateSpace, n: usize) -> Value {
    json!({
        "n": n,
        "states": space.labels(),
        "partition": partition_json(&r.partition, space),
        "theta_hat": r.theta_hat,
        "theta_status": status(r.status),
        "log_likelihood": r.log_likelihood,
        "nu": r.nu.weights(),
        "nu_estimated": r.nu_estimated,
        "table": r.table.iter().map(|row| json!({
            "partition": partition_text(&row.partition, space),
            "blocks": row.partition.num_blocks(),
            "theta": row.estimate.theta,
            "theta_status": status(row.estimate.status),
            "log_likelihood": row.estimate.log_likelihood,
        })).collect::<Vec<_>>(),
    })
}
