//! JSON model files: parsing with line-anchored errors, validation against the
//! core types, and emission back to JSON.

use crate::number::{Num, Parsed};
use crate::CliError;
use mvps::general::{Bin, BinSampler, GeneralMixtureModel, Interval};
use mvps::partition::{conditional_kernel, recover_partition, Partition};
use mvps::scalar::{Rational, Scalar};
use mvps::{Coefficients, Error, Kernel, Measure, PredictiveFamily, StateSpace};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<BinSpec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Partition { blocks: Vec<Vec<String>> },
    Identity,
    Iid,
    Explicit { rows: Vec<Vec<Num>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientSpec {
    Mvps,
    List { values: Vec<Num> },
}

/// One interval `[lo, hi)` of a general-space model. Without `cdf` the bin
/// sampler is uniform; otherwise `cdf` lists `(x, F(x))` knots of a piecewise
/// linear distribution function from `(lo, 0)` to `(hi, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub prob: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdf: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug)]
pub enum Family {
    Exact(PredictiveFamily<Rational>),
    Float(PredictiveFamily<f64>),
}

impl Family {
    pub fn space(&self) -> &StateSpace {
        match self {
            Family::Exact(f) => f.space(),
            Family::Float(f) => f.space(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Family::Exact(_))
    }
}

#[derive(Clone, Debug)]
pub enum Model {
    Finite {
        family: Family,
        /// The partition named by the kernel, when the file gives one.
        partition: Option<Partition>,
    },
    General(GeneralMixtureModel),
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub model: Model,
    pub warnings: Vec<String>,
}

pub fn load(path: &str) -> Result<Loaded, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    parse(&text, path)
}

/// Line of the first occurrence of `"key"`, for anchoring validation errors.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

struct Ctx<'a> {
    text: &'a str,
    source: &'a str,
}

impl Ctx<'_> {
    fn err(&self, field: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Input(format!(
            "{}:{}: {field}: {msg}",
            self.source,
            line_of(self.text, field)
        ))
    }

    fn nums(&self, field: &str, values: &[Num]) -> Result<Vec<Parsed>, CliError> {
        values
            .iter()
            .map(|v| v.parse().map_err(|e| self.err(field, e)))
            .collect()
    }
}

pub fn parse(text: &str, source: &str) -> Result<Loaded, CliError> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("{source}:{}:{}: {e}", e.line(), e.column())))?;
    let ctx = Ctx { text, source };
    if file.bins.is_some() {
        return general(&ctx, file);
    }
    finite(&ctx, file)
}

fn general(ctx: &Ctx, file: ModelFile) -> Result<Loaded, CliError> {
    for (field, present) in [
        ("states", file.states.is_some()),
        ("nu", file.nu.is_some()),
        ("kernel", file.kernel.is_some()),
        ("coefficients", file.coefficients.is_some()),
    ] {
        if present {
            return Err(ctx.err(field, "not allowed in a model with bins"));
        }
    }
    let theta = file
        .theta
        .as_ref()
        .ok_or_else(|| ctx.err("bins", "a model with bins needs theta"))?
        .parse()
        .map_err(|e| ctx.err("theta", e))?
        .exact;
    let mut bins = Vec::new();
    for spec in file.bins.unwrap_or_default() {
        let interval = Interval::new(spec.lo, spec.hi).map_err(|e| ctx.err("bins", e))?;
        let sampler = match spec.cdf {
            None => BinSampler::uniform(interval),
            Some(knots) => {
                BinSampler::piecewise_linear(interval, knots).map_err(|e| ctx.err("cdf", e))?
            }
        };
        let prob = spec.prob.parse().map_err(|e| ctx.err("prob", e))?.exact;
        bins.push(Bin { prob, sampler });
    }
    let model = GeneralMixtureModel::new(theta, bins).map_err(|e| match e {
        Error::InvalidParameter(m) if m.contains("theta") => ctx.err("theta", m),
        e => ctx.err("bins", e),
    })?;
    Ok(Loaded {
        model: Model::General(model),
        warnings: Vec::new(),
    })
}

struct Parts {
    space: StateSpace,
    nu: Vec<Parsed>,
    theta: Option<Parsed>,
    kernel: KernelSpec,
    coefficients: Option<Vec<Parsed>>,
    partition: Option<Partition>,
}

fn finite(ctx: &Ctx, file: ModelFile) -> Result<Loaded, CliError> {
    let states = file.states.ok_or_else(|| ctx.err("states", "missing"))?;
    let space = StateSpace::new(states).map_err(|e| ctx.err("states", e))?;
    let nu = ctx.nums(
        "nu",
        file.nu.as_deref().ok_or_else(|| ctx.err("nu", "missing"))?,
    )?;
    if nu.len() != space.len() {
        return Err(ctx.err(
            "nu",
            format!("{} weights for {} states", nu.len(), space.len()),
        ));
    }
    let theta = file
        .theta
        .as_ref()
        .map(|t| t.parse().map_err(|e| ctx.err("theta", e)))
        .transpose()?;
    let kernel = file.kernel.ok_or_else(|| ctx.err("kernel", "missing"))?;
    let partition = match &kernel {
        KernelSpec::Partition { blocks } => {
            let blocks = blocks
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|l| {
                            space
                                .index_of(l)
                                .ok_or_else(|| ctx.err("blocks", format!("unknown state {l:?}")))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(Partition::from_blocks(space.len(), &blocks).map_err(|e| ctx.err("blocks", e))?)
        }
        KernelSpec::Identity => Some(Partition::discrete(space.len())),
        KernelSpec::Iid => Some(Partition::trivial(space.len())),
        KernelSpec::Explicit { .. } => None,
    };
    let coefficients = match &file.coefficients {
        Some(CoefficientSpec::List { values }) => Some(ctx.nums("values", values)?),
        _ => None,
    };
    let iid_law = matches!(kernel, KernelSpec::Iid) && file.coefficients.is_none();
    if theta.is_none() && coefficients.is_none() && !iid_law {
        return Err(ctx.err(
            "theta",
            "missing (required unless coefficients are listed or the kernel is iid)",
        ));
    }

    let mut parts = Parts {
        space,
        nu,
        theta,
        kernel,
        coefficients,
        partition,
    };
    let decimal = parts
        .nu
        .iter()
        .chain(&parts.theta)
        .chain(parts.coefficients.iter().flatten())
        .any(|p| p.decimal)
        || match &parts.kernel {
            KernelSpec::Explicit { rows } => rows
                .iter()
                .flatten()
                .any(|n| n.parse().is_ok_and(|p| p.decimal)),
            _ => false,
        };
    let mut warnings = Vec::new();
    let family = if decimal {
        warnings.push(format!(
            "{}: decimal values switch the model to floating-point mode; write \"p/q\" for exact checks",
            ctx.source
        ));
        Family::Float(build(ctx, &mut parts, iid_law, |r: &Rational| r.to_f64())?)
    } else {
        Family::Exact(build(ctx, &mut parts, iid_law, Rational::clone)?)
    };
    Ok(Loaded {
        model: Model::Finite {
            family,
            partition: parts.partition,
        },
        warnings,
    })
}

fn build<S: Scalar>(
    ctx: &Ctx,
    parts: &mut Parts,
    iid_law: bool,
    conv: impl Fn(&Rational) -> S,
) -> Result<PredictiveFamily<S>, CliError> {
    let space = parts.space.clone();
    let nu = Measure::probability(
        space.clone(),
        parts.nu.iter().map(|p| conv(&p.exact)).collect(),
    )
    .map_err(|e| ctx.err("nu", e))?;
    if !nu.is_strictly_positive() {
        return Err(ctx.err("nu", "every state needs positive mass"));
    }
    if iid_law {
        return PredictiveFamily::iid(nu).map_err(|e| ctx.err("nu", e));
    }
    let kernel = match &parts.kernel {
        KernelSpec::Partition { .. } | KernelSpec::Iid => conditional_kernel(
            &nu,
            parts
                .partition
                .as_ref()
                .expect("partition kernels carry a partition"),
        )
        .map_err(|e| ctx.err("kernel", e))?,
        KernelSpec::Identity => Kernel::identity(space.clone()),
        KernelSpec::Explicit { rows } => {
            if rows.len() != space.len() || rows.iter().any(|r| r.len() != space.len()) {
                return Err(ctx.err(
                    "rows",
                    format!("expected {0} rows of {0} entries", space.len()),
                ));
            }
            let rows = rows
                .iter()
                .map(|r| {
                    ctx.nums("rows", r)
                        .map(|v| v.iter().map(|p| conv(&p.exact)).collect())
                })
                .collect::<Result<Vec<Vec<S>>, _>>()?;
            Kernel::new(space.clone(), rows).map_err(|e| ctx.err("rows", e))?
        }
    };
    if parts.partition.is_none() {
        parts.partition = recover_partition(&nu, &kernel, mvps::scalar::DEFAULT_TOL)
            .ok()
            .flatten();
    }
    match &parts.coefficients {
        Some(values) => {
            let values = values.iter().map(|p| conv(&p.exact)).collect();
            PredictiveFamily::sufficientness(nu, kernel, Coefficients::List(values)).map_err(|e| {
                match e {
                    Error::InvalidKernel(_) | Error::SpaceMismatch => ctx.err("kernel", e),
                    e => ctx.err("coefficients", e),
                }
            })
        }
        None => {
            let theta = parts.theta.as_ref().expect("theta checked above");
            PredictiveFamily::mvps(conv(&theta.exact), nu, kernel).map_err(|e| match e {
                Error::InvalidParameter(_) => ctx.err("theta", e),
                e => ctx.err("kernel", e),
            })
        }
    }
}

/// Canonical JSON form of a loaded model. Kernels are written in the most
/// specific form that reproduces them exactly.
pub fn emit(model: &Model) -> Result<ModelFile, CliError> {
    match model {
        Model::General(m) => Ok(ModelFile {
            theta: Some(Num::exact(m.theta())),
            bins: Some(
                m.bins()
                    .iter()
                    .map(|b| {
                        let iv = b.sampler.interval();
                        let knots = b.sampler.knots();
                        BinSpec {
                            lo: iv.lo,
                            hi: iv.hi,
                            prob: Num::exact(&b.prob),
                            cdf: (!knots.is_empty()).then(|| knots.to_vec()),
                        }
                    })
                    .collect(),
            ),
            ..Default::default()
        }),
        Model::Finite { family, .. } => match family {
            Family::Exact(f) => emit_family(f, Num::exact),
            Family::Float(f) => emit_family(f, |x: &f64| Num::float(*x)),
        },
    }
}

fn emit_family<S: Scalar>(
    f: &PredictiveFamily<S>,
    num: impl Fn(&S) -> Num,
) -> Result<ModelFile, CliError> {
    let space = f.space();
    let labels = |p: &Partition| -> Vec<Vec<String>> {
        p.blocks()
            .into_iter()
            .map(|b| b.into_iter().map(|j| space.label(j).to_string()).collect())
            .collect()
    };
    let kernel_spec = |r: &Kernel<S>| -> KernelSpec {
        if r == &Kernel::identity(space.clone()) {
            return KernelSpec::Identity;
        }
        match recover_partition(f.nu(), r, 0.0) {
            Ok(Some(p)) if conditional_kernel(f.nu(), &p).as_ref() == Ok(r) => {
                KernelSpec::Partition { blocks: labels(&p) }
            }
            _ => KernelSpec::Explicit {
                rows: r
                    .rows()
                    .iter()
                    .map(|row| row.iter().map(&num).collect())
                    .collect(),
            },
        }
    };
    let mut out = ModelFile {
        states: Some(space.labels().to_vec()),
        nu: Some(f.nu().weights().iter().map(&num).collect()),
        ..Default::default()
    };
    match f {
        PredictiveFamily::Iid { .. } => out.kernel = Some(KernelSpec::Iid),
        PredictiveFamily::Mvps(spec) => {
            out.theta = Some(num(spec.theta()));
            out.kernel = Some(kernel_spec(spec.kernel()));
        }
        PredictiveFamily::Sufficientness {
            kernel,
            coefficients,
            ..
        } => {
            out.kernel = Some(kernel_spec(kernel));
            match coefficients {
                Coefficients::List(v) => {
                    out.coefficients = Some(CoefficientSpec::List {
                        values: v.iter().map(&num).collect(),
                    })
                }
                Coefficients::Mvps { theta } => out.theta = Some(num(theta)),
                Coefficients::ClosedForm(_) => {
                    return Err(CliError::Input(
                        "closed-form coefficients cannot be written to a model file".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}
