//! JSON model files.
//!
//! Complex entries are `[re, im]` pairs, matrices are arrays of rows, and
//! the `model_type` discriminator is always written first. Floats are
//! written in shortest round-trip form, so parse after serialize is the
//! identity on every finite double.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use seqmodels::controlled::{IoHqmm, Pomdp, Qomdp};
use seqmodels::linalg::{Matrix, Vector};
use seqmodels::{AnyModel, Hmm, Hqmm, KrausSet, ModelKind, MpsChain, Noom, Psr, Ubm, Ulps, Umps};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1.0";

type C = [f64; 2];
type Vecj = Vec<C>;
type Matj = Vec<Vec<C>>;

#[derive(Serialize)]
struct Header<'a, P: Serialize> {
    model_type: &'a str,
    format_version: &'a str,
    obs_count: usize,
    dims: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    action_count: Option<usize>,
    #[serde(flatten)]
    params: P,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UmpsP {
    sigma: Vecj,
    cores: Vec<Matj>,
    rho0: Vecj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainP {
    sites: Vec<Vec<Matj>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PsrP {
    sigma: Vecj,
    ops: Vec<Matj>,
    x0: Vecj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HmmP {
    transition: Matj,
    emission: Matj,
    x0: Vecj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UbmP {
    alpha: Vecj,
    cores: Vec<Matj>,
    omega0: Vecj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoomP {
    phis: Vec<Matj>,
    psi0: Vecj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HqmmP {
    kraus: Vec<Vec<Matj>>,
    rho0: Matj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UlpsP {
    left: Vec<Matj>,
    cores: Vec<Vec<Matj>>,
    right: Vec<Matj>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PomdpP {
    transitions: Vec<Matj>,
    emissions: Vec<Matj>,
    x0: Vecj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IoHqmmP {
    kraus: Vec<Vec<Vec<Matj>>>,
    rho0: Matj,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QomdpP {
    ops: Vec<Vec<Matj>>,
    rho0: Matj,
}

fn cj(z: &Complex64) -> C {
    [z.re, z.im]
}

fn vj(v: &Vector) -> Vecj {
    v.iter().map(cj).collect()
}

fn mj(m: &Matrix) -> Matj {
    (0..m.rows()).map(|i| m.row(i).iter().map(cj).collect()).collect()
}

fn msj(ms: &[Matrix]) -> Vec<Matj> {
    ms.iter().map(mj).collect()
}

fn kj(k: &KrausSet) -> Vec<Matj> {
    msj(k.ops())
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn finite(z: C) -> Result<Complex64, CliError> {
    if z[0].is_finite() && z[1].is_finite() {
        Ok(Complex64::new(z[0], z[1]))
    } else {
        Err(parse_err("non-finite number"))
    }
}

fn vr(v: Vecj) -> Result<Vector, CliError> {
    Ok(Vector::from_vec(v.into_iter().map(finite).collect::<Result<_, _>>()?))
}

fn mr(m: Matj) -> Result<Matrix, CliError> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(parse_err("ragged matrix rows"));
    }
    let data = m.into_iter().flatten().map(finite).collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_row_major(rows, cols, data)?)
}

fn msr(ms: Vec<Matj>) -> Result<Vec<Matrix>, CliError> {
    ms.into_iter().map(mr).collect()
}

fn kr(ms: Vec<Matj>) -> Result<KrausSet, CliError> {
    Ok(KrausSet::new(msr(ms)?)?)
}

/// Wire name of a model class.
pub fn type_name(kind: ModelKind) -> &'static str {
    kind.as_str()
}

/// Dimensions recorded in the header, for human readers and consistency
/// checks.
pub fn dims(m: &AnyModel) -> Vec<usize> {
    match m {
        AnyModel::Umps(u) => vec![u.bond_dim()],
        AnyModel::MpsChain(c) => c.bond_dims(),
        AnyModel::Psr(p) => vec![p.dim()],
        AnyModel::Hmm(h) => vec![h.state_dim()],
        AnyModel::Ubm(b) => vec![b.bond_dim()],
        AnyModel::Noom(n) => vec![n.state_dim()],
        AnyModel::Hqmm(h) => vec![h.state_dim()],
        AnyModel::Ulps(u) => vec![u.bond_dim()],
        AnyModel::Pomdp(p) => vec![p.x0().dim()],
        AnyModel::IoHqmm(q) => vec![q.dim()],
        AnyModel::Qomdp(q) => vec![q.dim()],
    }
}

fn header<P: Serialize>(m: &AnyModel, params: P) -> Header<'static, P> {
    Header {
        model_type: type_name(m.kind()),
        format_version: FORMAT_VERSION,
        obs_count: m.obs_count(),
        dims: dims(m),
        action_count: m.action_count(),
        params,
    }
}

fn emit<P: Serialize>(h: Header<'_, P>) -> serde_json::Result<String> {
    let mut out = String::new();
    write_value(&serde_json::to_value(&h)?, 0, &mut out);
    Ok(out)
}

fn flat(v: &Value) -> bool {
    match v {
        Value::Array(xs) => xs.iter().all(|x| !x.is_array() && !x.is_object()),
        Value::Object(_) => false,
        _ => true,
    }
}

/// Pretty printer that keeps numeric pairs and matrix rows on one line.
fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Array(xs) if xs.iter().all(flat) => {
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(xs) => {
            out.push_str("[\n");
            for (i, x) in xs.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < xs.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn render(m: &AnyModel) -> serde_json::Result<String> {
    match m {
        AnyModel::Umps(u) => emit(header(
            m,
            UmpsP {
                sigma: vj(u.sigma()),
                cores: msj(u.cores()),
                rho0: vj(u.rho0()),
            },
        )),
        AnyModel::MpsChain(c) => emit(header(
            m,
            ChainP {
                sites: c.sites().iter().map(|s| msj(s)).collect(),
            },
        )),
        AnyModel::Psr(p) => emit(header(
            m,
            PsrP {
                sigma: vj(p.sigma()),
                ops: msj(p.ops()),
                x0: vj(p.x0()),
            },
        )),
        AnyModel::Hmm(h) => emit(header(
            m,
            HmmP {
                transition: mj(h.transition()),
                emission: mj(h.emission()),
                x0: vj(h.x0()),
            },
        )),
        AnyModel::Ubm(b) => emit(header(
            m,
            UbmP {
                alpha: vj(b.alpha()),
                cores: msj(b.cores()),
                omega0: vj(b.omega0()),
            },
        )),
        AnyModel::Noom(n) => emit(header(
            m,
            NoomP {
                phis: msj(n.phis()),
                psi0: vj(n.psi0()),
            },
        )),
        AnyModel::Hqmm(h) => emit(header(
            m,
            HqmmP {
                kraus: h.kraus_by_obs().iter().map(kj).collect(),
                rho0: mj(&h.rho0_matrix()),
            },
        )),
        AnyModel::Ulps(u) => emit(header(
            m,
            UlpsP {
                left: kj(u.left()),
                cores: u.cores().iter().map(kj).collect(),
                right: kj(u.right()),
            },
        )),
        AnyModel::Pomdp(p) => emit(header(
            m,
            PomdpP {
                transitions: msj(p.transitions()),
                emissions: msj(p.emissions()),
                x0: vj(p.x0()),
            },
        )),
        AnyModel::IoHqmm(q) => emit(header(
            m,
            IoHqmmP {
                kraus: q.kraus().iter().map(|bank| bank.iter().map(kj).collect()).collect(),
                rho0: mj(&unvec(q.rho0(), q.dim())),
            },
        )),
        AnyModel::Qomdp(q) => emit(header(
            m,
            QomdpP {
                ops: q.ops().iter().map(|bank| msj(bank)).collect(),
                rho0: mj(&q.rho0_matrix()),
            },
        )),
    }
}

fn unvec(v: &Vector, n: usize) -> Matrix {
    seqmodels::linalg::unvectorize(v, n, n).expect("stored density has n² entries")
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_string(m: &AnyModel) -> String {
    let mut out = render(m).expect("model parameters serialize");
    out.push('\n');
    out
}

fn take<P: DeserializeOwned>(rest: Map<String, Value>, kind: ModelKind) -> Result<P, CliError> {
    serde_json::from_value(Value::Object(rest)).map_err(|e| parse_err(format!("{kind} parameters: {e}")))
}

fn header_usize(obj: &mut Map<String, Value>, key: &str) -> Result<Option<usize>, CliError> {
    match obj.remove(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| parse_err(format!("{key} must be a non-negative integer"))),
    }
}

pub fn from_str(text: &str) -> Result<AnyModel, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(parse_err("model file must be a JSON object"));
    };
    let kind = match obj.remove("model_type") {
        Some(Value::String(s)) => {
            ModelKind::parse(&s).ok_or_else(|| parse_err(format!("unknown model_type '{s}'")))?
        }
        _ => return Err(parse_err("missing model_type")),
    };
    match obj.remove("format_version") {
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(v) => return Err(parse_err(format!("unsupported format_version {v}"))),
        None => return Err(parse_err("missing format_version")),
    }
    let obs_count = header_usize(&mut obj, "obs_count")?;
    let action_count = header_usize(&mut obj, "action_count")?;
    let dims_given = match obj.remove("dims") {
        None => None,
        Some(v) => Some(
            serde_json::from_value::<Vec<usize>>(v).map_err(|e| parse_err(format!("dims: {e}")))?,
        ),
    };
    let model = build(kind, obj)?;
    if obs_count.is_some_and(|o| o != model.obs_count()) {
        return Err(parse_err(format!(
            "obs_count {} disagrees with the parameters ({})",
            obs_count.unwrap_or_default(),
            model.obs_count()
        )));
    }
    if action_count.is_some() && action_count != model.action_count() {
        return Err(parse_err("action_count disagrees with the parameters"));
    }
    if dims_given.is_some_and(|d| d != dims(&model)) {
        return Err(parse_err(format!("dims disagree with the parameters {:?}", dims(&model))));
    }
    Ok(model)
}

fn build(kind: ModelKind, rest: Map<String, Value>) -> Result<AnyModel, CliError> {
    Ok(match kind {
        ModelKind::Umps => {
            let p: UmpsP = take(rest, kind)?;
            Umps::new(vr(p.sigma)?, msr(p.cores)?, vr(p.rho0)?)?.into()
        }
        ModelKind::MpsChain => {
            let p: ChainP = take(rest, kind)?;
            MpsChain::new(p.sites.into_iter().map(msr).collect::<Result<_, _>>()?)?.into()
        }
        ModelKind::Psr => {
            let p: PsrP = take(rest, kind)?;
            Psr::new(vr(p.sigma)?, msr(p.ops)?, vr(p.x0)?)?.into()
        }
        ModelKind::Hmm => {
            let p: HmmP = take(rest, kind)?;
            Hmm::new(mr(p.transition)?, mr(p.emission)?, vr(p.x0)?)?.into()
        }
        ModelKind::Ubm => {
            let p: UbmP = take(rest, kind)?;
            Ubm::new(vr(p.alpha)?, msr(p.cores)?, vr(p.omega0)?)?.into()
        }
        ModelKind::Noom => {
            let p: NoomP = take(rest, kind)?;
            Noom::new(msr(p.phis)?, vr(p.psi0)?)?.into()
        }
        ModelKind::Hqmm => {
            let p: HqmmP = take(rest, kind)?;
            let sets = p.kraus.into_iter().map(kr).collect::<Result<_, _>>()?;
            Hqmm::from_density(sets, &mr(p.rho0)?)?.into()
        }
        ModelKind::Ulps => {
            let p: UlpsP = take(rest, kind)?;
            let cores = p.cores.into_iter().map(kr).collect::<Result<_, _>>()?;
            Ulps::new(kr(p.left)?, cores, kr(p.right)?)?.into()
        }
        ModelKind::Pomdp => {
            let p: PomdpP = take(rest, kind)?;
            Pomdp::new(msr(p.transitions)?, msr(p.emissions)?, vr(p.x0)?)?.into()
        }
        ModelKind::IoHqmm => {
            let p: IoHqmmP = take(rest, kind)?;
            let banks = p
                .kraus
                .into_iter()
                .map(|bank| bank.into_iter().map(kr).collect::<Result<Vec<_>, _>>())
                .collect::<Result<_, _>>()?;
            let rho = mr(p.rho0)?;
            IoHqmm::new(banks, seqmodels::linalg::vectorize(&rho))?.into()
        }
        ModelKind::Qomdp => {
            let p: QomdpP = take(rest, kind)?;
            let ops = p.ops.into_iter().map(msr).collect::<Result<_, _>>()?;
            Qomdp::from_density(ops, &mr(p.rho0)?)?.into()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use seqmodels::gallery::{appendix_hmm, random_model};

    #[test]
    fn round_trip_is_exact_for_every_kind() {
        for kind in ModelKind::ALL {
            let m: AnyModel = random_model(kind, 3, 2, 17).unwrap();
            let text = to_string(&m);
            assert!(text.starts_with(&format!("{{\n  \"model_type\": \"{kind}\"")), "{text}");
            assert_eq!(from_str(&text).unwrap(), m, "{kind}");
        }
        let a: AnyModel = appendix_hmm().model.into();
        assert_eq!(from_str(&to_string(&a)).unwrap(), a);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(from_str("[]"), Err(CliError::Parse(_))));
        assert!(from_str(r#"{"model_type":"nope","format_version":"1.0"}"#).is_err());
        let good = to_string(&appendix_hmm().model.into());
        let wrong_obs = good.replace("\"obs_count\": 2", "\"obs_count\": 3");
        assert!(from_str(&wrong_obs).is_err());
        let extra = good.replacen("\"obs_count\"", "\"bogus\": 1,\n  \"obs_count\"", 1);
        assert!(from_str(&extra).is_err());
    }

    #[test]
    fn written_files_fit_the_published_schema() {
        let schema: Value = serde_json::from_str(include_str!("../../../docs/model-file.schema.json")).unwrap();
        let branches = schema["oneOf"].as_array().unwrap();
        for kind in ModelKind::ALL {
            let m: AnyModel = random_model(kind, 2, 2, 5).unwrap();
            let v: Value = serde_json::from_str(&to_string(&m)).unwrap();
            let obj = v.as_object().unwrap();
            let branch = branches
                .iter()
                .find(|b| b["properties"]["model_type"]["const"] == kind.as_str())
                .unwrap_or_else(|| panic!("no schema branch for {kind}"));
            let allowed = branch["propertyNames"]["enum"].as_array().unwrap();
            for key in obj.keys() {
                assert!(allowed.iter().any(|a| a == key), "{kind}: {key}");
            }
            for req in branch["required"].as_array().unwrap() {
                assert!(obj.contains_key(req.as_str().unwrap()), "{kind}: missing {req}");
            }
        }
    }
}
