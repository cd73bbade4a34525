//! External file formats.
//!
//! Instance schema: `{"model": "ceei"|"exchange", "n": int, "m": int,
//! "disutility": [[number|"inf"|{"num","den"}]], "endowments": optional
//! [[...]], "alpha": optional rational}`. Exact values serialize as
//! `{num, den}` pairs (plain integers when the denominator is 1, decimal
//! strings when a component exceeds i64); floats appear only in fptas
//! outputs. Floating-point literals in input files are converted to their
//! exact binary rational value.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bivalued::{BivaluedSolution, IntegralAllocation};
use crate::instance::{DisutilityMatrix, EndowmentMatrix, Entry, Instance, InstanceError, Model};
use crate::polymatrix::{validate_polymatrix, PolymatrixError, PolymatrixGame};
use crate::reduction::{AgentLabel, LayeredLabels, ReductionParams};
use crate::scalar::{Rat, Scalar};
use crate::solver::{CeeiResult, ModeTag, TraceRecord};
use crate::verify::CeReport;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("json parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bad numeric value: {0}")]
    BadNumber(String),
    #[error("bad matrix entry: {0}")]
    BadEntry(String),
    #[error("declared n/m do not match the matrix shape")]
    DeclaredShape,
    #[error("unknown model {0:?} (expected \"ceei\" or \"exchange\")")]
    UnknownModel(String),
    #[error("exchange instances require an endowments matrix")]
    MissingEndowments,
    #[error("ceei instances do not carry endowments")]
    UnexpectedEndowments,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Polymatrix(#[from] PolymatrixError),
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    model: String,
    n: usize,
    m: usize,
    disutility: Vec<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endowments: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Value>,
}

fn bigint_from_value(v: &Value) -> Result<BigInt, JsonError> {
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = num.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(JsonError::BadNumber(format!("{num} is not an integer")))
            }
        }
        Value::String(s) => {
            BigInt::from_str(s).map_err(|_| JsonError::BadNumber(format!("{s:?} is not an integer")))
        }
        other => Err(JsonError::BadNumber(format!("{other} is not an integer"))),
    }
}

/// Parse a number | {"num","den"} value into an exact rational.
pub fn rat_from_value(v: &Value) -> Result<Rat, JsonError> {
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(Rat::from_int(i))
            } else if let Some(u) = num.as_u64() {
                Ok(Rat::from_integer(BigInt::from(u)))
            } else {
                let f = num
                    .as_f64()
                    .ok_or_else(|| JsonError::BadNumber(num.to_string()))?;
                Rat::from_float(f).ok_or_else(|| JsonError::BadNumber(format!("{f} is not finite")))
            }
        }
        Value::Object(map) => {
            let num = map
                .get("num")
                .ok_or_else(|| JsonError::BadNumber("missing \"num\"".into()))?;
            let den = map
                .get("den")
                .ok_or_else(|| JsonError::BadNumber("missing \"den\"".into()))?;
            let den = bigint_from_value(den)?;
            if den == BigInt::from(0) {
                return Err(JsonError::BadNumber("zero denominator".into()));
            }
            Ok(Rat::new(bigint_from_value(num)?, den))
        }
        other => Err(JsonError::BadNumber(other.to_string())),
    }
}

fn entry_from_value(v: &Value) -> Result<Entry<Rat>, JsonError> {
    match v {
        Value::String(s) if s == "inf" => Ok(Entry::Inf),
        Value::String(s) => Err(JsonError::BadEntry(format!("{s:?} (only \"inf\" is allowed)"))),
        other => Ok(Entry::Fin(rat_from_value(other)?)),
    }
}

pub fn parse_instance(text: &str) -> Result<Instance<Rat>, JsonError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    if raw.disutility.len() != raw.n || raw.disutility.iter().any(|r| r.len() != raw.m) {
        return Err(JsonError::DeclaredShape);
    }
    let rows = raw
        .disutility
        .iter()
        .map(|row| row.iter().map(entry_from_value).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let d = DisutilityMatrix::new(rows)?;
    let model = match raw.model.as_str() {
        "ceei" => {
            if raw.endowments.is_some() {
                return Err(JsonError::UnexpectedEndowments);
            }
            Model::Ceei
        }
        "exchange" => {
            let endow = raw.endowments.as_ref().ok_or(JsonError::MissingEndowments)?;
            if endow.len() != raw.n || endow.iter().any(|r| r.len() != raw.m) {
                return Err(JsonError::DeclaredShape);
            }
            let w = endow
                .iter()
                .map(|row| row.iter().map(rat_from_value).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            Model::Exchange(EndowmentMatrix::new(w, raw.n, raw.m)?)
        }
        other => return Err(JsonError::UnknownModel(other.to_string())),
    };
    let alpha = raw.alpha.as_ref().map(rat_from_value).transpose()?;
    Ok(Instance::new(d, model, alpha)?)
}

fn rat_to_value(v: &Rat) -> Value {
    v.to_json()
}

pub fn instance_to_json(instance: &Instance<Rat>) -> Value {
    let disutility: Vec<Vec<Value>> = (0..instance.n())
        .map(|i| {
            (0..instance.m())
                .map(|j| match instance.disutility.entry(i, j) {
                    Entry::Fin(v) => rat_to_value(v),
                    Entry::Inf => Value::String("inf".into()),
                })
                .collect()
        })
        .collect();
    let mut obj = json!({
        "model": match instance.model { Model::Ceei => "ceei", Model::Exchange(_) => "exchange" },
        "n": instance.n(),
        "m": instance.m(),
        "disutility": disutility,
    });
    if let Model::Exchange(w) = &instance.model {
        let endow: Vec<Vec<Value>> = w.rows().iter().map(|r| r.iter().map(rat_to_value).collect()).collect();
        obj["endowments"] = Value::Array(endow.into_iter().map(Value::Array).collect());
    }
    if let Some(alpha) = &instance.alpha {
        obj["alpha"] = rat_to_value(alpha);
    }
    obj
}

pub fn instance_to_string(instance: &Instance<Rat>) -> String {
    serde_json::to_string_pretty(&instance_to_json(instance)).expect("valid json")
}

pub fn ceei_result_to_json<T: Scalar>(r: &CeeiResult<T>) -> Value {
    json!({
        "mode": match r.mode { ModeTag::Exact => "exact", ModeTag::Fptas => "fptas" },
        "prices": r.prices.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        "allocation": r.allocation.iter()
            .map(|row| row.iter().map(Scalar::to_json).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "earnings": r.earnings.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        "epsilon_achieved": r.epsilon_achieved.to_json(),
        "iterations": r.iterations,
        "balance_calls": r.balance_calls,
    })
}

/// A solve result read back for verification: exact when every number in the
/// file is an integer or `{num,den}`, approximate when floats appear.
pub enum ParsedCandidate {
    Exact { prices: Vec<Rat>, allocation: Vec<Vec<Rat>> },
    Approx { prices: Vec<f64>, allocation: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
struct RawResult {
    prices: Vec<Value>,
    allocation: Vec<Vec<Value>>,
}

fn value_has_float(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.as_i64().is_none() && n.as_u64().is_none(),
        _ => false,
    }
}

pub fn parse_candidate(text: &str) -> Result<ParsedCandidate, JsonError> {
    let raw: RawResult = serde_json::from_str(text)?;
    let any_float = raw.prices.iter().any(value_has_float)
        || raw.allocation.iter().flatten().any(value_has_float);
    if any_float {
        let to_f64 = |v: &Value| -> Result<f64, JsonError> { Ok(rat_from_value(v)?.to_f64()) };
        let prices = raw.prices.iter().map(to_f64).collect::<Result<Vec<_>, _>>()?;
        let allocation = raw
            .allocation
            .iter()
            .map(|row| row.iter().map(to_f64).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ParsedCandidate::Approx { prices, allocation })
    } else {
        let prices = raw.prices.iter().map(rat_from_value).collect::<Result<Vec<_>, _>>()?;
        let allocation = raw
            .allocation
            .iter()
            .map(|row| row.iter().map(rat_from_value).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ParsedCandidate::Exact { prices, allocation })
    }
}

/// One JSONL line per solver phase event.
pub fn trace_record_to_json<T: Scalar>(rec: &TraceRecord<T>) -> Value {
    let (num, den) = rec.potential.to_num_den_json();
    json!({
        "iter": rec.iter,
        "kind": rec.kind,
        "gamma": rec.gamma.as_ref().map(Scalar::to_json).unwrap_or(Value::Null),
        "S": rec.low_set,
        "potential_num": num,
        "potential_den": den,
    })
}

pub fn report_to_json<T: Scalar>(report: &CeReport<T>) -> Value {
    json!({
        "pass": report.pass,
        "complete_allocation_ok": report.complete_allocation_ok,
        "max_chore_deficit": report.max_chore_deficit.to_json(),
        "mpb_ok": report.mpb_ok,
        "worst_mpb_pair": report.worst_mpb_pair,
        "mpb_ratio_slack": report.mpb_ratio_slack.to_json(),
        "infinite_consumption": report.infinite_consumption,
        "earning_ok": report.earning_ok,
        "earning_ratios": report.earning_ratios.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        "epsilon_achieved": report.epsilon_achieved.to_json(),
        "nash_welfare": report.nash_welfare.as_ref().map(|nw| json!({
            "value": nw.value.to_json(),
            "ln": nw.ln,
            "zero_agents": nw.zero_agents,
        })).unwrap_or(Value::Null),
    })
}

pub fn labels_to_json(labels: &LayeredLabels, params: &ReductionParams) -> Value {
    let agents: Vec<Value> = labels
        .agents
        .iter()
        .map(|a| match a {
            AgentLabel::Chain { layer, index } => {
                json!({"kind": "chain", "layer": layer, "index": index})
            }
            AgentLabel::Prime { index } => json!({"kind": "prime", "index": index}),
            AgentLabel::Buffer { layer, index } => {
                json!({"kind": "buffer", "layer": layer, "index": index})
            }
            AgentLabel::Payoff { row, col } => json!({"kind": "payoff", "row": row, "col": col}),
        })
        .collect();
    let chores: Vec<Value> = labels
        .chores
        .iter()
        .map(|c| json!({"layer": c.layer, "index": c.index}))
        .collect();
    json!({
        "chores": chores,
        "agents": agents,
        "params": {
            "c": params.c,
            "layers": params.layers,
            "alphas": params.alphas.iter().map(rat_to_value).collect::<Vec<_>>(),
            "deltas": params.deltas.iter().map(rat_to_value).collect::<Vec<_>>(),
            "epsilon_target": rat_to_value(&params.epsilon_target),
        },
    })
}

#[derive(Deserialize)]
struct RawGame {
    n: usize,
    matrix: Vec<Vec<Value>>,
}

/// Polymatrix game file: `{"n": int, "matrix": [[...]] }` with 2n x 2n
/// rational entries.
pub fn parse_polymatrix(text: &str) -> Result<PolymatrixGame, JsonError> {
    let raw: RawGame = serde_json::from_str(text)?;
    if raw.matrix.len() != 2 * raw.n {
        return Err(JsonError::DeclaredShape);
    }
    let rows = raw
        .matrix
        .iter()
        .map(|row| row.iter().map(rat_from_value).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(validate_polymatrix(rows)?)
}

pub fn polymatrix_to_json(game: &PolymatrixGame) -> Value {
    json!({
        "n": game.players,
        "matrix": game.matrix.iter()
            .map(|row| row.iter().map(rat_to_value).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

/// Integral allocation plus certificate: `{"owner": [...], "prices": [...]}`.
pub fn bivalued_solution_to_json(sol: &BivaluedSolution) -> Value {
    json!({
        "owner": sol.allocation.owner,
        "prices": sol.certificate.prices.iter().map(rat_to_value).collect::<Vec<_>>(),
        "transfers": sol.transfers,
        "price_updates": sol.price_updates,
    })
}

#[derive(Deserialize)]
struct RawBivalued {
    owner: Vec<usize>,
    prices: Vec<Value>,
}

pub fn parse_bivalued_solution(text: &str) -> Result<(IntegralAllocation, Vec<Rat>), JsonError> {
    let raw: RawBivalued = serde_json::from_str(text)?;
    let prices = raw.prices.iter().map(rat_from_value).collect::<Result<Vec<_>, _>>()?;
    Ok((IntegralAllocation { owner: raw.owner }, prices))
}

/// Strategy file emitted next to extraction results.
pub fn strategy_to_json(x: &[Rat]) -> Value {
    json!({ "x": x.iter().map(rat_to_value).collect::<Vec<_>>() })
}
