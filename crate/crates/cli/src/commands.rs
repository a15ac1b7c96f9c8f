//! One function per subcommand. Each returns the report to print; a
//! nonzero `exit_code` in the report means a check failed.

use std::io::Read;

use clap::{Subcommand, ValueEnum};
use seqmodels::controlled::{ControlledModel, parse_action_sequence, pomdp_to_psr_per_policy, qomdp_to_iohqmm};
use seqmodels::convert::{
    hmm_to_psr, hqmm_to_ulps, noom_to_hqmm, noom_to_psr, ubm_to_noom, ubm_to_psr, ubm_to_ulps,
    ulps_to_hqmm, umps_to_psr, ConversionReport, ConvertOptions,
};
use seqmodels::evaluate::{conditional_nonterminating, transfer_fixed_point};
use seqmodels::gallery::{
    appendix_hmm, measure_appendix, measure_oscillating, oscillating_noom, random_model_with,
    ExpectedFact, RandomSpec,
};
use seqmodels::models::{OperatorModel, Validate, ValidateOptions};
use seqmodels::oracle::{
    equivalent_conditional, equivalent_joint, finite_marginal_complex, sample_many, sequence_at,
    sequence_count, Semantics,
};
use seqmodels::{AnyModel, ModelKind};

use crate::config::Config;
use crate::error::CliError;
use crate::format;
use crate::report::{complex_list, num, num_list, sequence, vector, InputDigest, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Joint,
    Conditional,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Joint => Semantics::Joint,
            SemanticsArg::Conditional => Semantics::Conditional,
        }
    }
}

#[derive(Subcommand, Clone, Debug, PartialEq)]
pub enum Command {
    /// Check the definitional constraints of a model file.
    Validate {
        file: String,
        /// Also require every parameter to be real.
        #[arg(long)]
        strict: bool,
    },
    /// Probability of a sequence ("0 1 1"; controlled models take "a:y" pairs).
    Eval {
        file: String,
        sequence: String,
        #[arg(long, value_enum, default_value_t = SemanticsArg::Joint)]
        semantics: SemanticsArg,
    },
    /// Filtered states along a sequence.
    Filter { file: String, sequence: String },
    /// Convert to another model class.
    Convert {
        file: String,
        /// Target model type.
        #[arg(long)]
        to: String,
        /// Output file, "-" for standard output.
        #[arg(long, default_value = "-")]
        out: String,
        /// Action held fixed when turning a POMDP into a PSR.
        #[arg(long)]
        action: Option<usize>,
    },
    /// Compare two models on every sequence up to a length.
    Compare {
        file_a: String,
        file_b: String,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, value_enum, default_value_t = SemanticsArg::Joint)]
        semantics: SemanticsArg,
    },
    /// Probability of a prefix summed over all continuations to a total length.
    Marginalize {
        file: String,
        prefix: String,
        #[arg(long)]
        total_len: usize,
    },
    /// Draw sequences.
    Sample {
        file: String,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Write a named or random model.
    Gallery {
        /// appendix_hmm, oscillating_noom or random.
        name: String,
        #[arg(long, default_value = "-")]
        out: String,
        #[arg(long, default_value_t = 0.6)]
        theta: f64,
        #[arg(long, default_value_t = 0.9)]
        damping: f64,
        /// Model type for `random`.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        obs: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 2)]
        kraus_rank: usize,
    },
}

/// What a command produced: the report plus, for commands that write a
/// model to standard output, that model text.
#[derive(Debug, Default)]
pub struct Output {
    pub report: RunReport,
    pub payload: Option<String>,
}

impl From<RunReport> for Output {
    fn from(report: RunReport) -> Self {
        Self { report, payload: None }
    }
}

pub fn execute(cmd: &Command, cfg: &Config) -> Result<Output, CliError> {
    match cmd {
        Command::Validate { file, strict } => validate(file, *strict, cfg).map(Into::into),
        Command::Eval { file, sequence, semantics } => eval(file, sequence, *semantics, cfg).map(Into::into),
        Command::Filter { file, sequence } => filter(file, sequence).map(Into::into),
        Command::Convert { file, to, out, action } => convert(file, to, out, *action, cfg),
        Command::Compare { file_a, file_b, max_len, semantics } => {
            compare(file_a, file_b, *max_len, *semantics, cfg).map(Into::into)
        }
        Command::Marginalize { file, prefix, total_len } => marginalize(file, prefix, *total_len).map(Into::into),
        Command::Sample { file, length, count } => sample(file, *length, *count, cfg).map(Into::into),
        Command::Gallery { name, out, theta, damping, kind, dim, obs, actions, kraus_rank } => {
            let spec = GallerySpec {
                theta: *theta,
                damping: *damping,
                kind: kind.as_deref(),
                dim: *dim,
                obs: *obs,
                actions: *actions,
                kraus_rank: *kraus_rank,
            };
            gallery(name, out, &spec, cfg)
        }
    }
}

fn read_source(path: &str) -> Result<Vec<u8>, CliError> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| CliError::Io(format!("{path}: {e}")))
    }
}

fn load(label: &str, path: &str, report: &mut RunReport) -> Result<AnyModel, CliError> {
    let bytes = read_source(path)?;
    report.input(InputDigest::new(label, path, &bytes));
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Parse(format!("{path}: not UTF-8")))?;
    let model = format::from_str(text)?;
    report.result(format!("{label}.model_type"), model.kind());
    Ok(model)
}

fn write_model(m: &AnyModel, out: &str) -> Result<Option<String>, CliError> {
    let text = format::to_string(m);
    if out == "-" {
        Ok(Some(text))
    } else {
        std::fs::write(out, text).map_err(|e| CliError::Io(format!("{out}: {e}")))?;
        Ok(None)
    }
}

/// Space-separated zero-based symbols; empty text is the empty sequence.
pub fn parse_sequence(text: &str) -> Result<Vec<usize>, CliError> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CliError::Parse(format!("'{t}' is not a symbol index")))
        })
        .collect()
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    parse_action_sequence(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn validation_section(report: &mut RunReport, m: &AnyModel, opts: &ValidateOptions) -> bool {
    let v = m.validate_with(opts);
    report.result("valid", v.is_valid());
    report.result("violations", v.violations.len());
    for violation in &v.violations {
        report.residual(violation.constraint, violation.residual);
    }
    v.is_valid()
}

fn validate(file: &str, strict: bool, cfg: &Config) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("validate");
    r.arg("strict", strict).arg("tol", num(cfg.tol));
    let m = load("model", file, &mut r)?;
    r.result("obs_count", m.obs_count());
    r.result("dims", format!("{:?}", format::dims(&m)));
    if let Some(a) = m.action_count() {
        r.result("action_count", a);
    }
    let mut opts = ValidateOptions::with_tol(cfg.tol);
    opts.strict_real = strict;
    if !validation_section(&mut r, &m, &opts) {
        r.exit_code = 1;
    }
    Ok(r)
}

fn eval(file: &str, seq: &str, semantics: SemanticsArg, cfg: &Config) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("eval");
    r.arg("sequence", seq).arg("semantics", Semantics::from(semantics).as_str());
    let m = load("model", file, &mut r)?;
    if let Some(c) = m.as_controlled() {
        if semantics != SemanticsArg::Joint {
            return Err(CliError::Unsupported("controlled models only support joint semantics".into()));
        }
        let pairs = parse_pairs(seq)?;
        r.result("joint", num(c.controlled_joint(&pairs)?));
        return Ok(r);
    }
    let symbols = parse_sequence(seq)?;
    match semantics {
        SemanticsArg::Joint => {
            let j = seqmodels::evaluate::SequenceModel::joint(&m, &symbols)?;
            r.result("joint", num(j.value));
            r.result("imag", num(j.imag));
            r.result("imag_flagged", j.is_flagged());
        }
        SemanticsArg::Conditional => {
            let op = operator_view(&m)?;
            let Some((&next, prefix)) = symbols.split_last() else {
                return Err(CliError::Model(seqmodels::Error::EmptySequence));
            };
            let fp = transfer_fixed_point(op, &cfg.eigen())?;
            r.result("conditional", num(conditional_nonterminating(op, prefix, next, &fp)?));
            r.result("eigenvalue", complex_list(&[fp.eigenvalue]));
            r.result("gap_ratio", num(fp.gap_ratio));
            r.residual("fixed_point", fp.residual);
        }
    }
    Ok(r)
}

fn filter(file: &str, seq: &str) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("filter");
    r.arg("sequence", seq);
    let m = load("model", file, &mut r)?;
    let states = if let Some(c) = m.as_controlled() {
        c.controlled_filter_sequence(&parse_pairs(seq)?)?
    } else {
        let f = m
            .as_filter()
            .ok_or_else(|| CliError::Unsupported(format!("{} has no normalized filter", m.kind())))?;
        let states = f.filter_sequence(&parse_sequence(seq)?)?;
        let last = states.last().expect("initial state is always present");
        r.result("predict", num_list(&f.predict(last)?));
        states
    };
    for st in &states {
        r.result(format!("state.{}", st.steps), vector(&st.state));
    }
    let last = states.last().expect("initial state is always present");
    r.result("log_prob", num(last.log_prob));
    r.result("prefix_probability", num(last.prefix_probability()));
    Ok(r)
}

fn report_conversion(r: &mut RunReport, rep: &ConversionReport) {
    r.result("rescale_factor", complex_list(&[rep.rescale_factor]));
    r.result("gap_ratio", num(rep.fixed_point.gap_ratio));
    for (name, value) in &rep.residuals {
        r.residual(*name, *value);
    }
}

fn convert(file: &str, to: &str, out: &str, action: Option<usize>, cfg: &Config) -> Result<Output, CliError> {
    let mut r = RunReport::new("convert");
    r.arg("to", to).arg("out", out);
    let target = ModelKind::parse(to).ok_or_else(|| CliError::Parse(format!("unknown model type '{to}'")))?;
    let m = load("model", file, &mut r)?;
    let opts = ConvertOptions {
        eigen: cfg.eigen(),
        tol: cfg.tol,
    };
    let unsupported = || CliError::Unsupported(format!("no conversion from {} to {target}", m.kind()));
    let converted: AnyModel = match (&m, target) {
        (AnyModel::Hmm(h), ModelKind::Psr) => hmm_to_psr(h)?.into(),
        (AnyModel::Noom(n), ModelKind::Psr) => noom_to_psr(n)?.into(),
        (AnyModel::Noom(n), ModelKind::Hqmm) => noom_to_hqmm(n)?.into(),
        (AnyModel::Ubm(b), ModelKind::Umps) => ubm_to_psr(b)?.into(),
        (AnyModel::Ubm(b), ModelKind::Ulps) => ubm_to_ulps(b)?.into(),
        (AnyModel::Ubm(b), ModelKind::Noom) => {
            let (n, rep) = ubm_to_noom(b, &opts)?;
            report_conversion(&mut r, &rep);
            n.into()
        }
        (AnyModel::Umps(u), ModelKind::Psr) => {
            let (p, rep) = umps_to_psr(u, &opts)?;
            report_conversion(&mut r, &rep);
            p.into()
        }
        (AnyModel::Psr(p), ModelKind::Umps) => p.as_umps().into(),
        (AnyModel::Hqmm(h), ModelKind::Ulps) => hqmm_to_ulps(h)?.into(),
        (AnyModel::Ulps(u), ModelKind::Hqmm) => {
            let (h, rep) = ulps_to_hqmm(u, &opts)?;
            report_conversion(&mut r, &rep);
            h.into()
        }
        (AnyModel::Qomdp(q), ModelKind::IoHqmm) => qomdp_to_iohqmm(q)?.into(),
        (AnyModel::Pomdp(p), ModelKind::Psr) => {
            let a = action.ok_or_else(|| CliError::Unsupported("pomdp to psr needs --action".into()))?;
            r.arg("action", a);
            pomdp_to_psr_per_policy(p, &[a])?
                .as_stationary()
                .expect("a single action is stationary")
                .into()
        }
        _ => return Err(unsupported()),
    };
    r.result("output.model_type", converted.kind());
    r.result("output.dims", format!("{:?}", format::dims(&converted)));
    let valid = validation_section(&mut r, &converted, &ValidateOptions::with_tol(cfg.tol));
    let payload = write_model(&converted, out)?;
    if !valid {
        r.exit_code = 1;
    }
    Ok(Output { report: r, payload })
}

fn compare(a: &str, b: &str, max_len: usize, semantics: SemanticsArg, cfg: &Config) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("compare");
    let sem = Semantics::from(semantics);
    r.arg("max_len", max_len).arg("semantics", sem.as_str()).arg("tol", num(cfg.tol));
    let ma = load("a", a, &mut r)?;
    let mb = load("b", b, &mut r)?;
    if let (Some(ca), Some(cb)) = (ma.as_controlled(), mb.as_controlled()) {
        if sem != Semantics::Joint {
            return Err(CliError::Unsupported("controlled models only support joint semantics".into()));
        }
        return compare_controlled(r, ca, cb, max_len, cfg.tol);
    }
    let report = match sem {
        Semantics::Joint => equivalent_joint(&ma, &mb, max_len, cfg.tol)?,
        Semantics::Conditional => {
            let (oa, ob) = (operator_view(&ma)?, operator_view(&mb)?);
            equivalent_conditional(oa, ob, max_len, cfg.tol, &cfg.eigen())?
        }
    };
    r.result("equivalent", report.is_equivalent());
    r.result("sequences_compared", report.sequences_compared);
    r.result("max_deviation", num(report.max_deviation));
    r.result("witness", sequence(&report.witness));
    if !report.is_equivalent() {
        r.exit_code = 1;
    }
    Ok(r)
}

/// Joint deviation over every interleaved `a:y` sequence of length
/// `1..=max_len`, in lexicographic order of the flattened `(a, y)` index.
fn compare_controlled(
    mut r: RunReport,
    a: &dyn ControlledModel<f64>,
    b: &dyn ControlledModel<f64>,
    max_len: usize,
    tol: f64,
) -> Result<RunReport, CliError> {
    if (a.action_count(), a.obs_count()) != (b.action_count(), b.obs_count()) {
        return Err(CliError::Model(seqmodels::Error::DimensionMismatch(
            "models differ in action or observation count".into(),
        )));
    }
    let (na, no) = (a.action_count(), a.obs_count());
    let mut worst = 0.0f64;
    let mut witness = String::new();
    let mut compared = 0usize;
    for len in 1..=max_len {
        for i in 0..sequence_count(na * no, len)? {
            let seq: Vec<(usize, usize)> =
                sequence_at(i, na * no, len).into_iter().map(|s| (s / no, s % no)).collect();
            let d = (a.controlled_joint(&seq)? - b.controlled_joint(&seq)?).abs();
            let d = if d.is_nan() { f64::INFINITY } else { d };
            compared += 1;
            if d > worst || witness.is_empty() {
                worst = worst.max(d);
                let parts: Vec<String> = seq.iter().map(|(x, y)| format!("{x}:{y}")).collect();
                witness = parts.join(" ");
            }
        }
    }
    let ok = worst <= tol;
    r.result("equivalent", ok);
    r.result("sequences_compared", compared);
    r.result("max_deviation", num(worst));
    r.result("witness", witness);
    if !ok {
        r.exit_code = 1;
    }
    Ok(r)
}

fn operator_view(m: &AnyModel) -> Result<&(dyn OperatorModel<f64> + Sync), CliError> {
    m.as_operator()
        .ok_or_else(|| CliError::Unsupported(format!("{} has no transfer operator", m.kind())))
}

fn marginalize(file: &str, prefix: &str, total_len: usize) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("marginalize");
    r.arg("prefix", prefix).arg("total_len", total_len);
    let m = load("model", file, &mut r)?;
    let op = operator_view(&m)?;
    let z = finite_marginal_complex(op, &parse_sequence(prefix)?, total_len)?;
    r.result("marginal", num(z.re));
    r.result("imag", num(z.im));
    Ok(r)
}

fn sample(file: &str, length: usize, count: usize, cfg: &Config) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("sample");
    r.arg("length", length).arg("count", count).arg("seed", cfg.seed);
    let m = load("model", file, &mut r)?;
    let f = m.as_filter().ok_or_else(|| {
        CliError::Unsupported(format!("{} cannot be sampled directly; convert it first", m.kind()))
    })?;
    for (i, s) in sample_many(f, length, count, cfg.seed)?.iter().enumerate() {
        r.result(format!("sample.{i}"), sequence(s));
    }
    Ok(r)
}

struct GallerySpec<'a> {
    theta: f64,
    damping: f64,
    kind: Option<&'a str>,
    dim: usize,
    obs: usize,
    actions: usize,
    kraus_rank: usize,
}

fn facts(r: &mut RunReport, facts: &[ExpectedFact], measure: impl Fn(&str) -> seqmodels::Result<Vec<f64>>) -> Result<bool, CliError> {
    let mut all = true;
    for f in facts {
        let got = measure(f.key)?;
        let ok = got.len() == f.expected.len()
            && got.iter().zip(&f.expected).all(|(g, e)| (g - e).abs() <= f.tolerance);
        all &= ok;
        r.result(format!("fact.{}.expected", f.key), num_list(&f.expected));
        r.result(format!("fact.{}.measured", f.key), num_list(&got));
        r.result(format!("fact.{}.ok", f.key), ok);
    }
    Ok(all)
}

fn gallery(name: &str, out: &str, spec: &GallerySpec<'_>, cfg: &Config) -> Result<Output, CliError> {
    let mut r = RunReport::new("gallery");
    r.arg("name", name).arg("out", out);
    let (model, ok): (AnyModel, bool) = match name {
        "appendix_hmm" => {
            let inst = appendix_hmm();
            r.result("provenance", inst.provenance);
            let ok = facts(&mut r, &inst.expected_facts, |k| measure_appendix(&inst.model, k))?;
            (inst.model.into(), ok)
        }
        "oscillating_noom" => {
            r.arg("theta", num(spec.theta)).arg("damping", num(spec.damping));
            let inst = oscillating_noom(spec.theta, spec.damping)?;
            r.result("provenance", inst.provenance);
            let ok = facts(&mut r, &inst.expected_facts, |k| measure_oscillating(&inst.model, k))?;
            (inst.model.into(), ok)
        }
        "random" => {
            let kind_text = spec
                .kind
                .ok_or_else(|| CliError::Parse("random gallery models need --kind".into()))?;
            let kind = ModelKind::parse(kind_text)
                .ok_or_else(|| CliError::Parse(format!("unknown model type '{kind_text}'")))?;
            let mut rs = RandomSpec::new(kind, spec.dim, spec.obs, cfg.seed);
            rs.actions = spec.actions;
            rs.kraus_rank = spec.kraus_rank;
            r.arg("kind", kind).arg("dim", spec.dim).arg("obs", spec.obs).arg("seed", cfg.seed);
            if kind.is_controlled() {
                r.arg("actions", spec.actions);
            }
            (random_model_with(&rs)?, true)
        }
        other => return Err(CliError::Parse(format!("unknown gallery entry '{other}'"))),
    };
    r.result("output.model_type", model.kind());
    let payload = write_model(&model, out)?;
    if !ok {
        r.exit_code = 1;
    }
    Ok(Output { report: r, payload })
}
