//! The JSON scenario file format and evaluation reports.
//!
//! Complex numbers are `[re, im]` pairs (a bare number is read as a real
//! entry) and matrices are row-major nested arrays. Errors name the JSON
//! pointer of the offending value.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::channel::QChannel;
use crate::dctc::{eval_dmix_full, SolverOptions};
use crate::error::{CtcError, Result};
use crate::gates::{make_gate, GateSpec};
use crate::graphs::{all_cut_plans, eval_diagram_with, Diagram, EvalOptions, FramedCausalGraph, ModelMorphism};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector};
use crate::model::Model;
use crate::pctc::PctcOutcome;
use crate::scenarios::Scenario;
use crate::state::{trace_distance, DensityMatrix};

pub const SCENARIO_VERSION: &str = "ctc-scenario/1";
pub const REPORT_VERSION: &str = "ctc-report/1";

/// A channel expression in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelExpr {
    /// A gate from the [`GateSpec`] vocabulary with numeric parameters.
    Gate {
        name: String,
        params: Vec<f64>,
    },
    Kraus {
        kraus: Vec<ComplexMatrix>,
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
    },
    Unitary {
        matrix: ComplexMatrix,
        dims: Vec<usize>,
    },
    /// Wire permutation: output position `j` carries input `perm[j]`.
    Perm {
        perm: Vec<usize>,
        dims: Vec<usize>,
    },
    Prepare(StateExpr),
    /// Applied first to last.
    Seq(Vec<ChannelExpr>),
    Ten(Vec<ChannelExpr>),
}

/// A state expression in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub enum StateExpr {
    /// `zero`, `one`, `plus`, `minus`, `bell`, or `unit`.
    Named(String),
    Basis {
        index: usize,
        dims: Vec<usize>,
    },
    Mixed {
        dims: Vec<usize>,
    },
    Ket {
        amplitudes: ComplexVector,
        dims: Vec<usize>,
    },
    Density {
        matrix: ComplexMatrix,
        dims: Vec<usize>,
    },
    Ten(Vec<StateExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    /// System names carried by the edge, in order.
    pub systems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Framing overrides: node name → edge indices.
    pub in_order: BTreeMap<String, Vec<usize>>,
    pub out_order: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CutPlanOption {
    Default,
    Edges(Vec<usize>),
    /// Evaluate every plan and report the largest pairwise deviation.
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub seed: u64,
    pub cut_plan: CutPlanOption,
    pub probes: usize,
    pub experimental_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { tol: 1e-9, seed: 0, cut_plan: CutPlanOption::Default, probes: 20, experimental_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub systems: BTreeMap<String, usize>,
    pub graph: GraphSpec,
    pub assignments: BTreeMap<String, ChannelExpr>,
    pub model: Model,
    pub input_state: StateExpr,
    pub options: RunOptions,
}

fn err(path: &str, msg: impl std::fmt::Display) -> CtcError {
    let at = if path.is_empty() { "/" } else { path };
    CtcError::InvalidDiagram(format!("at {at}: {msg}"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(path, format!("missing field `{key}`")))
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| err(path, "expected a string"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| err(path, "expected a non-negative integer"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| err(path, "expected a number"))
}

fn usize_list(v: &Value, path: &str) -> Result<Vec<usize>> {
    as_array(v, path)?.iter().enumerate().map(|(i, x)| as_usize(x, &format!("{path}/{i}"))).collect()
}

fn string_list(v: &Value, path: &str) -> Result<Vec<String>> {
    as_array(v, path)?.iter().enumerate().map(|(i, x)| Ok(as_str(x, &format!("{path}/{i}"))?.to_string())).collect()
}

fn check_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(err(path, format!("unknown field `{k}`"))),
        None => Ok(()),
    }
}

fn parse_complex(v: &Value, path: &str) -> Result<num_complex::Complex64> {
    if let Some(x) = v.as_f64() {
        return Ok(c(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(c(as_f64(re, &format!("{path}/0"))?, as_f64(im, &format!("{path}/1"))?)),
        _ => Err(err(path, "expected a complex number [re, im]")),
    }
}

fn parse_matrix(v: &Value, path: &str) -> Result<ComplexMatrix> {
    let rows = as_array(v, path)?;
    if rows.is_empty() {
        return Err(err(path, "matrix has no rows"));
    }
    let mut data = Vec::new();
    let mut ncols = None;
    for (r, row) in rows.iter().enumerate() {
        let rp = format!("{path}/{r}");
        let entries = as_array(row, &rp)?;
        if *ncols.get_or_insert(entries.len()) != entries.len() {
            return Err(err(&rp, "rows have different lengths"));
        }
        for (k, x) in entries.iter().enumerate() {
            data.push(parse_complex(x, &format!("{rp}/{k}"))?);
        }
    }
    Ok(ComplexMatrix::from_row_slice(rows.len(), ncols.unwrap_or(0), &data))
}

fn parse_vector(v: &Value, path: &str) -> Result<ComplexVector> {
    let xs = as_array(v, path)?;
    let data: Vec<_> =
        xs.iter().enumerate().map(|(i, x)| parse_complex(x, &format!("{path}/{i}"))).collect::<Result<_>>()?;
    Ok(ComplexVector::from_vec(data))
}

fn complex_json(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|k| complex_json(m[(r, k)])).collect())).collect(),
    )
}

impl ChannelExpr {
    pub fn parse(v: &Value, path: &str) -> Result<Self> {
        if let Some(name) = v.as_str() {
            return Ok(Self::Gate { name: name.to_string(), params: vec![] });
        }
        let obj = as_object(v, path)?;
        let sub = |k: &str| format!("{path}/{k}");
        if let Some(name) = obj.get("gate") {
            check_keys(obj, path, &["gate", "params"])?;
            let params = match obj.get("params") {
                None => vec![],
                Some(p) => as_array(p, &sub("params"))?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| as_f64(x, &format!("{path}/params/{i}")))
                    .collect::<Result<_>>()?,
            };
            return Ok(Self::Gate { name: as_str(name, &sub("gate"))?.to_string(), params });
        }
        if let Some(ks) = obj.get("kraus") {
            check_keys(obj, path, &["kraus", "in", "out"])?;
            let kraus = as_array(ks, &sub("kraus"))?
                .iter()
                .enumerate()
                .map(|(i, m)| parse_matrix(m, &format!("{path}/kraus/{i}")))
                .collect::<Result<_>>()?;
            return Ok(Self::Kraus {
                kraus,
                in_dims: usize_list(field(obj, path, "in")?, &sub("in"))?,
                out_dims: usize_list(field(obj, path, "out")?, &sub("out"))?,
            });
        }
        if let Some(m) = obj.get("unitary") {
            check_keys(obj, path, &["unitary", "dims"])?;
            return Ok(Self::Unitary {
                matrix: parse_matrix(m, &sub("unitary"))?,
                dims: usize_list(field(obj, path, "dims")?, &sub("dims"))?,
            });
        }
        if let Some(p) = obj.get("perm") {
            check_keys(obj, path, &["perm", "dims"])?;
            return Ok(Self::Perm {
                perm: usize_list(p, &sub("perm"))?,
                dims: usize_list(field(obj, path, "dims")?, &sub("dims"))?,
            });
        }
        if let Some(s) = obj.get("prepare") {
            check_keys(obj, path, &["prepare"])?;
            return Ok(Self::Prepare(StateExpr::parse(s, &sub("prepare"))?));
        }
        for key in ["seq", "ten"] {
            if let Some(list) = obj.get(key) {
                check_keys(obj, path, &[key])?;
                let items: Vec<ChannelExpr> = as_array(list, &sub(key))?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| Self::parse(x, &format!("{path}/{key}/{i}")))
                    .collect::<Result<_>>()?;
                if items.is_empty() {
                    return Err(err(&sub(key), "empty list"));
                }
                return Ok(if key == "seq" { Self::Seq(items) } else { Self::Ten(items) });
            }
        }
        Err(err(path, "expected a gate name or one of gate, kraus, unitary, perm, prepare, seq, ten"))
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Gate { name, params } if params.is_empty() => json!(name),
            Self::Gate { name, params } => json!({ "gate": name, "params": params }),
            Self::Kraus { kraus, in_dims, out_dims } => {
                json!({ "kraus": kraus.iter().map(matrix_json).collect::<Vec<_>>(), "in": in_dims, "out": out_dims })
            }
            Self::Unitary { matrix, dims } => json!({ "unitary": matrix_json(matrix), "dims": dims }),
            Self::Perm { perm, dims } => json!({ "perm": perm, "dims": dims }),
            Self::Prepare(s) => json!({ "prepare": s.to_json() }),
            Self::Seq(items) => json!({ "seq": items.iter().map(Self::to_json).collect::<Vec<_>>() }),
            Self::Ten(items) => json!({ "ten": items.iter().map(Self::to_json).collect::<Vec<_>>() }),
        }
    }

    pub fn build(&self, path: &str) -> Result<QChannel> {
        let at = |e: CtcError| err(path, e);
        match self {
            Self::Gate { name, params } => make_gate(&GateSpec::from_name(name, params).map_err(at)?).map_err(at),
            Self::Kraus { kraus, in_dims, out_dims } => {
                QChannel::new(kraus.clone(), in_dims.clone(), out_dims.clone()).map_err(at)
            }
            Self::Unitary { matrix, dims } => QChannel::from_unitary(matrix.clone(), dims.clone()).map_err(at),
            Self::Perm { perm, dims } => QChannel::permutation(dims, perm).map_err(at),
            Self::Prepare(s) => Ok(QChannel::prepare(&s.build(&format!("{path}/prepare"))?)),
            Self::Seq(items) => {
                let mut acc = items[0].build(&format!("{path}/seq/0"))?;
                for (i, x) in items.iter().enumerate().skip(1) {
                    let next = x.build(&format!("{path}/seq/{i}"))?;
                    acc = acc.then(&next).map_err(|e| err(&format!("{path}/seq/{i}"), e))?;
                }
                Ok(acc)
            }
            Self::Ten(items) => {
                let mut acc = items[0].build(&format!("{path}/ten/0"))?;
                for (i, x) in items.iter().enumerate().skip(1) {
                    acc = acc.tensor(&x.build(&format!("{path}/ten/{i}"))?);
                }
                Ok(acc)
            }
        }
    }

    /// An explicit Kraus literal for `ch`.
    pub fn literal(ch: &QChannel) -> Self {
        Self::Kraus { kraus: ch.kraus().to_vec(), in_dims: ch.in_dims().to_vec(), out_dims: ch.out_dims().to_vec() }
    }
}

impl StateExpr {
    pub fn parse(v: &Value, path: &str) -> Result<Self> {
        if let Some(name) = v.as_str() {
            return Ok(Self::Named(name.to_string()));
        }
        let obj = as_object(v, path)?;
        let sub = |k: &str| format!("{path}/{k}");
        let dims = || usize_list(field(obj, path, "dims")?, &sub("dims"));
        if let Some(i) = obj.get("basis") {
            check_keys(obj, path, &["basis", "dims"])?;
            return Ok(Self::Basis { index: as_usize(i, &sub("basis"))?, dims: dims()? });
        }
        if let Some(d) = obj.get("mixed") {
            check_keys(obj, path, &["mixed"])?;
            return Ok(Self::Mixed { dims: usize_list(d, &sub("mixed"))? });
        }
        if let Some(k) = obj.get("ket") {
            check_keys(obj, path, &["ket", "dims"])?;
            return Ok(Self::Ket { amplitudes: parse_vector(k, &sub("ket"))?, dims: dims()? });
        }
        if let Some(m) = obj.get("density") {
            check_keys(obj, path, &["density", "dims"])?;
            return Ok(Self::Density { matrix: parse_matrix(m, &sub("density"))?, dims: dims()? });
        }
        if let Some(list) = obj.get("ten") {
            check_keys(obj, path, &["ten"])?;
            let items: Vec<StateExpr> = as_array(list, &sub("ten"))?
                .iter()
                .enumerate()
                .map(|(i, x)| Self::parse(x, &format!("{path}/ten/{i}")))
                .collect::<Result<_>>()?;
            if items.is_empty() {
                return Err(err(&sub("ten"), "empty list"));
            }
            return Ok(Self::Ten(items));
        }
        Err(err(path, "expected a state name or one of basis, mixed, ket, density, ten"))
    }

    pub fn to_json(&self) -> Value {
        match self {
            Self::Named(n) => json!(n),
            Self::Basis { index, dims } => json!({ "basis": index, "dims": dims }),
            Self::Mixed { dims } => json!({ "mixed": dims }),
            Self::Ket { amplitudes, dims } => {
                json!({ "ket": amplitudes.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(), "dims": dims })
            }
            Self::Density { matrix, dims } => json!({ "density": matrix_json(matrix), "dims": dims }),
            Self::Ten(items) => json!({ "ten": items.iter().map(Self::to_json).collect::<Vec<_>>() }),
        }
    }

    pub fn build(&self, path: &str) -> Result<DensityMatrix> {
        let at = |e: CtcError| err(path, e);
        match self {
            Self::Named(n) => match n.as_str() {
                "zero" => Ok(DensityMatrix::qubit_zero()),
                "one" => Ok(DensityMatrix::qubit_one()),
                "plus" => Ok(DensityMatrix::qubit_plus()),
                "minus" => Ok(DensityMatrix::qubit_minus()),
                "bell" => Ok(DensityMatrix::bell()),
                "unit" => Ok(DensityMatrix::unit()),
                other => Err(err(path, format!("unknown state `{other}`"))),
            },
            Self::Basis { index, dims } => DensityMatrix::basis(dims.clone(), *index).map_err(at),
            Self::Mixed { dims } => Ok(DensityMatrix::maximally_mixed(dims.clone())),
            Self::Ket { amplitudes, dims } => DensityMatrix::from_pure(dims.clone(), amplitudes).map_err(at),
            Self::Density { matrix, dims } => DensityMatrix::new(dims.clone(), matrix.clone()).map_err(at),
            Self::Ten(items) => {
                let mut acc = items[0].build(&format!("{path}/ten/0"))?;
                for (i, x) in items.iter().enumerate().skip(1) {
                    acc = acc.tensor(&x.build(&format!("{path}/ten/{i}"))?);
                }
                Ok(acc)
            }
        }
    }

    pub fn literal(rho: &DensityMatrix) -> Self {
        Self::Density { matrix: rho.matrix().clone(), dims: rho.dims().to_vec() }
    }
}

fn parse_order(v: Option<&Value>, path: &str) -> Result<BTreeMap<String, Vec<usize>>> {
    let Some(v) = v else { return Ok(BTreeMap::new()) };
    as_object(v, path)?.iter().map(|(k, x)| Ok((k.clone(), usize_list(x, &format!("{path}/{k}"))?))).collect()
}

impl GraphSpec {
    fn parse(v: &Value, path: &str) -> Result<Self> {
        let obj = as_object(v, path)?;
        check_keys(obj, path, &["nodes", "edges", "inputs", "outputs", "in_order", "out_order"])?;
        let sub = |k: &str| format!("{path}/{k}");
        let edges = as_array(field(obj, path, "edges")?, &sub("edges"))?
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let ep = format!("{path}/edges/{i}");
                let eo = as_object(e, &ep)?;
                check_keys(eo, &ep, &["from", "to", "systems"])?;
                Ok(EdgeSpec {
                    from: as_str(field(eo, &ep, "from")?, &format!("{ep}/from"))?.to_string(),
                    to: as_str(field(eo, &ep, "to")?, &format!("{ep}/to"))?.to_string(),
                    systems: string_list(field(eo, &ep, "systems")?, &format!("{ep}/systems"))?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            nodes: string_list(field(obj, path, "nodes")?, &sub("nodes"))?,
            edges,
            inputs: string_list(field(obj, path, "inputs")?, &sub("inputs"))?,
            outputs: string_list(field(obj, path, "outputs")?, &sub("outputs"))?,
            in_order: parse_order(obj.get("in_order"), &sub("in_order"))?,
            out_order: parse_order(obj.get("out_order"), &sub("out_order"))?,
        })
    }

    fn to_json(&self) -> Value {
        let mut v = json!({
            "nodes": self.nodes,
            "edges": self.edges.iter().map(|e| json!({ "from": e.from, "to": e.to, "systems": e.systems })).collect::<Vec<_>>(),
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        if !self.in_order.is_empty() {
            v["in_order"] = json!(self.in_order);
        }
        if !self.out_order.is_empty() {
            v["out_order"] = json!(self.out_order);
        }
        v
    }
}

impl RunOptions {
    fn parse(v: Option<&Value>, path: &str) -> Result<Self> {
        let mut o = Self::default();
        let Some(v) = v else { return Ok(o) };
        let obj = as_object(v, path)?;
        check_keys(obj, path, &["tol", "seed", "cut_plan", "probes", "experimental_trace"])?;
        let sub = |k: &str| format!("{path}/{k}");
        if let Some(x) = obj.get("tol") {
            o.tol = as_f64(x, &sub("tol"))?;
        }
        if let Some(x) = obj.get("seed") {
            o.seed = x.as_u64().ok_or_else(|| err(&sub("seed"), "expected a non-negative integer"))?;
        }
        if let Some(x) = obj.get("cut_plan") {
            o.cut_plan = match x {
                Value::Null => CutPlanOption::Default,
                Value::String(s) if s == "all" => CutPlanOption::All,
                Value::String(s) if s == "default" => CutPlanOption::Default,
                other => CutPlanOption::Edges(usize_list(other, &sub("cut_plan"))?),
            };
        }
        if let Some(x) = obj.get("probes") {
            o.probes = as_usize(x, &sub("probes"))?;
        }
        if let Some(x) = obj.get("experimental_trace") {
            o.experimental_trace = x.as_bool().ok_or_else(|| err(&sub("experimental_trace"), "expected a boolean"))?;
        }
        Ok(o)
    }

    fn to_json(&self) -> Value {
        let plan = match &self.cut_plan {
            CutPlanOption::Default => Value::Null,
            CutPlanOption::All => json!("all"),
            CutPlanOption::Edges(e) => json!(e),
        };
        json!({
            "tol": self.tol,
            "seed": self.seed,
            "cut_plan": plan,
            "probes": self.probes,
            "experimental_trace": self.experimental_trace,
        })
    }
}

/// Parses and type-checks a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| CtcError::InvalidDiagram(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let file = ScenarioFile::from_json(&v)?;
    file.diagram()?;
    Ok(file)
}

impl ScenarioFile {
    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = as_object(v, "")?;
        check_keys(
            obj,
            "",
            &["version", "name", "systems", "graph", "assignments", "model", "input_state", "options"],
        )?;
        let version = as_str(field(obj, "", "version")?, "/version")?;
        if version != SCENARIO_VERSION {
            return Err(err("/version", format!("unsupported version `{version}`, expected `{SCENARIO_VERSION}`")));
        }
        let name = match obj.get("name") {
            None | Some(Value::Null) => None,
            Some(n) => Some(as_str(n, "/name")?.to_string()),
        };
        let systems = as_object(field(obj, "", "systems")?, "/systems")?
            .iter()
            .map(|(k, d)| {
                let n = as_usize(d, &format!("/systems/{k}"))?;
                if n == 0 {
                    return Err(err(&format!("/systems/{k}"), "dimension must be positive"));
                }
                Ok((k.clone(), n))
            })
            .collect::<Result<_>>()?;
        let assignments = as_object(field(obj, "", "assignments")?, "/assignments")?
            .iter()
            .map(|(k, x)| Ok((k.clone(), ChannelExpr::parse(x, &format!("/assignments/{k}"))?)))
            .collect::<Result<_>>()?;
        let model_str = as_str(field(obj, "", "model")?, "/model")?;
        let model = model_str.parse::<Model>().map_err(|_| err("/model", format!("unknown model `{model_str}`")))?;
        Ok(Self {
            name,
            systems,
            graph: GraphSpec::parse(field(obj, "", "graph")?, "/graph")?,
            assignments,
            model,
            input_state: StateExpr::parse(field(obj, "", "input_state")?, "/input_state")?,
            options: RunOptions::parse(obj.get("options"), "/options")?,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "version": SCENARIO_VERSION,
            "systems": self.systems,
            "graph": self.graph.to_json(),
            "assignments": self.assignments.iter().map(|(k, x)| (k.clone(), x.to_json())).collect::<Map<_, _>>(),
            "model": self.model.as_str(),
            "input_state": self.input_state.to_json(),
            "options": self.options.to_json(),
        });
        if let Some(n) = &self.name {
            v["name"] = json!(n);
        }
        v
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize")
    }

    /// Builds and type-checks the diagram.
    pub fn diagram(&self) -> Result<Diagram> {
        let g = &self.graph;
        let index: BTreeMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        if index.len() != g.nodes.len() {
            return Err(err("/graph/nodes", "node names are not unique"));
        }
        let node = |name: &str, path: &str| {
            index.get(name).copied().ok_or_else(|| err(path, format!("unknown node `{name}`")))
        };
        let mut edges = Vec::new();
        let mut alpha = Vec::new();
        for (i, e) in g.edges.iter().enumerate() {
            let ep = format!("/graph/edges/{i}");
            edges.push((node(&e.from, &format!("{ep}/from"))?, node(&e.to, &format!("{ep}/to"))?));
            alpha.push(
                e.systems
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        self.systems
                            .get(s)
                            .copied()
                            .ok_or_else(|| err(&format!("{ep}/systems/{k}"), format!("unknown system `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let inputs =
            g.inputs.iter().enumerate().map(|(i, n)| node(n, &format!("/graph/inputs/{i}"))).collect::<Result<_>>()?;
        let outputs = g
            .outputs
            .iter()
            .enumerate()
            .map(|(i, n)| node(n, &format!("/graph/outputs/{i}")))
            .collect::<Result<_>>()?;
        let mut graph =
            FramedCausalGraph::new(g.nodes.clone(), edges, inputs, outputs).map_err(|e| err("/graph", e))?;
        let ins = g.in_order.iter().map(|(n, o)| Ok((node(n, &format!("/graph/in_order/{n}"))?, o.clone())));
        let outs = g.out_order.iter().map(|(n, o)| Ok((node(n, &format!("/graph/out_order/{n}"))?, o.clone())));
        graph = graph
            .with_framing(ins.collect::<Result<Vec<_>>>()?, outs.collect::<Result<Vec<_>>>()?)
            .map_err(|e| err("/graph", e))?;
        if let Some(v) = graph.validate().first() {
            return Err(err("/graph", &v.detail));
        }
        for name in self.assignments.keys() {
            let v = node(name, &format!("/assignments/{name}"))?;
            if graph.is_boundary(v) {
                return Err(err(&format!("/assignments/{name}"), format!("`{name}` is a boundary node")));
            }
        }
        let mut beta = vec![None; graph.node_count()];
        for v in graph.internal_nodes() {
            let name = graph.name(v).to_string();
            let path = format!("/assignments/{name}");
            let expr =
                self.assignments.get(&name).ok_or_else(|| err(&path, format!("node `{name}` has no channel")))?;
            let ch = expr.build(&path)?;
            let want_in: Vec<usize> = graph.in_order(v).iter().flat_map(|&e| alpha[e].clone()).collect();
            let want_out: Vec<usize> = graph.out_order(v).iter().flat_map(|&e| alpha[e].clone()).collect();
            if ch.in_dims() != want_in.as_slice() || ch.out_dims() != want_out.as_slice() {
                return Err(err(
                    &path,
                    format!(
                        "node `{name}` expects {want_in:?} -> {want_out:?} but its channel has type {:?} -> {:?}",
                        ch.in_dims(),
                        ch.out_dims()
                    ),
                ));
            }
            beta[v] = Some(ch);
        }
        Diagram::new(graph, alpha, beta)
    }

    pub fn input(&self) -> Result<DensityMatrix> {
        self.input_state.build("/input_state")
    }

    /// Exports case `case` of a built-in scenario with explicit Kraus
    /// literals.
    pub fn from_scenario(s: &Scenario, case: usize) -> Result<Self> {
        let d = &s.diagram;
        let g = d.graph();
        let input = &s.cases.get(case).ok_or(CtcError::IndexOutOfRange { index: case, count: s.cases.len() })?.input;
        let mut systems = BTreeMap::new();
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(a, b))| {
                let names = d
                    .alpha(e)
                    .iter()
                    .map(|&n| {
                        let key = format!("d{n}");
                        systems.insert(key.clone(), n);
                        key
                    })
                    .collect();
                EdgeSpec { from: g.name(a).to_string(), to: g.name(b).to_string(), systems: names }
            })
            .collect();
        let default = FramedCausalGraph::new(g.names().to_vec(), g.edges().to_vec(), vec![], vec![])?;
        let mut in_order = BTreeMap::new();
        let mut out_order = BTreeMap::new();
        for v in 0..g.node_count() {
            if g.in_order(v) != default.in_order(v) {
                in_order.insert(g.name(v).to_string(), g.in_order(v).to_vec());
            }
            if g.out_order(v) != default.out_order(v) {
                out_order.insert(g.name(v).to_string(), g.out_order(v).to_vec());
            }
        }
        let graph = GraphSpec {
            nodes: g.names().to_vec(),
            edges,
            inputs: g.inputs().iter().map(|&v| g.name(v).to_string()).collect(),
            outputs: g.outputs().iter().map(|&v| g.name(v).to_string()).collect(),
            in_order,
            out_order,
        };
        let assignments = g
            .internal_nodes()
            .into_iter()
            .map(|v| (g.name(v).to_string(), ChannelExpr::literal(d.beta(v).expect("internal node"))))
            .collect();
        Ok(Self {
            name: Some(s.name.clone()),
            systems,
            graph,
            assignments,
            model: s.model,
            input_state: StateExpr::literal(input),
            options: RunOptions::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: u64,
    pub lazy_iterations: u64,
    pub residual: f64,
    pub boundary: bool,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopReport {
    /// Position of the loop in evaluation order.
    pub index: usize,
    pub fixed_point: Vec<Vec<[f64; 2]>>,
    /// Entropy of the fixed point in bits.
    pub entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutInvariance {
    pub plans: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub model: Model,
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    /// `false` when the post-selected process cannot happen.
    pub normalizable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<Vec<Vec<[f64; 2]>>>,
    /// Computational-basis readout of the output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    /// Post-selection success weight; 1 for fixed-point evaluation.
    pub success_probability: f64,
    pub loops: Vec<LoopReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_invariance: Option<CutInvariance>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn output_state(&self) -> Option<DensityMatrix> {
        let rows = self.output.as_ref()?;
        let n = rows.len();
        let m = ComplexMatrix::from_fn(n, n, |r, k| c(rows[r][k][0], rows[r][k][1]));
        DensityMatrix::new(self.output_dims.clone(), m).ok()
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Rounds away floating-point noise below `1e-15` so that reports compare
/// cleanly.
fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

fn matrix_report(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| [clean(m[(r, k)].re), clean(m[(r, k)].im)]).collect()).collect()
}

fn evaluate(
    d: &Diagram,
    model: Model,
    opts: &EvalOptions,
    rho: &DensityMatrix,
) -> Result<(PctcOutcome, Vec<LoopReport>)> {
    let m = eval_diagram_with(d, model, opts)?;
    match &m {
        ModelMorphism::Dctc(dm) => {
            let ev = eval_dmix_full(dm, rho, &SolverOptions::default())?;
            let loops = ev
                .taus
                .iter()
                .zip(&ev.diagnostics)
                .enumerate()
                .filter(|(_, (tau, _))| tau.dim() > 1)
                .map(|(index, (tau, diag))| LoopReport {
                    index,
                    fixed_point: matrix_report(tau.matrix()),
                    entropy: clean(tau.entropy()),
                    diagnostics: diag.as_ref().map(|s| Diagnostics {
                        iterations: s.iterations,
                        lazy_iterations: s.lazy_iterations,
                        residual: clean(s.residual),
                        boundary: s.boundary,
                        capped: s.capped,
                    }),
                })
                .collect();
            Ok((PctcOutcome::State { state: ev.output, weight: 1.0 }, loops))
        }
        ModelMorphism::Pctc(_) => Ok((m.apply(rho)?, vec![])),
    }
}

/// Evaluates a scenario file on its input state.
pub fn run_file(file: &ScenarioFile) -> Result<RunReport> {
    let d = file.diagram()?;
    let rho = file.input()?;
    if rho.dims() != d.in_dims().as_slice() {
        return Err(err(
            "/input_state",
            format!("input state has dims {:?} but the graph inputs carry {:?}", rho.dims(), d.in_dims()),
        ));
    }
    let o = &file.options;
    let plan = match &o.cut_plan {
        CutPlanOption::Edges(e) => Some(e.clone()),
        _ => None,
    };
    let opts = EvalOptions { cut_plan: plan, experimental_trace: o.experimental_trace };
    let (outcome, loops) = evaluate(&d, file.model, &opts, &rho)?;
    let mut warnings = Vec::new();
    for l in &loops {
        if l.diagnostics.as_ref().is_some_and(|s| s.capped) {
            warnings.push(format!("loop {}: entropy ascent hit its iteration cap", l.index));
        }
    }
    let cut_invariance = match o.cut_plan {
        CutPlanOption::All => Some(cut_invariance(&d, file.model, &rho, o.experimental_trace)?),
        _ => None,
    };
    if let Some(ci) = &cut_invariance {
        if ci.max_deviation > o.tol {
            warnings.push(format!("cut plans disagree by {:e}", ci.max_deviation));
        }
    }
    let state = outcome.state();
    Ok(RunReport {
        version: REPORT_VERSION,
        scenario: file.name.clone(),
        model: file.model,
        input_dims: d.in_dims(),
        output_dims: d.out_dims(),
        normalizable: outcome.is_normalizable(),
        output: state.map(|s| matrix_report(s.matrix())),
        probabilities: state.map(|s| s.diagonal_probabilities().into_iter().map(clean).collect()),
        success_probability: clean(outcome.weight()),
        loops,
        cut_invariance,
        warnings,
    })
}

/// Evaluates the diagram under every cut plan and returns the largest
/// pairwise trace distance between outputs.
pub fn cut_invariance(
    d: &Diagram,
    model: Model,
    rho: &DensityMatrix,
    experimental_trace: bool,
) -> Result<CutInvariance> {
    let plans = all_cut_plans(d.graph())?;
    let mut outputs = Vec::new();
    for plan in &plans {
        let opts = EvalOptions { cut_plan: Some(plan.clone()), experimental_trace };
        outputs.push(eval_diagram_with(d, model, &opts)?.apply(rho)?.into_state());
    }
    let mut worst = 0.0f64;
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            worst = worst.max(match (&outputs[i], &outputs[j]) {
                (Some(a), Some(b)) => trace_distance(a, b)?,
                (None, None) => 0.0,
                _ => 1.0,
            });
        }
    }
    Ok(CutInvariance { plans: plans.len(), max_deviation: clean(worst) })
}

/// Largest entry-wise difference between two matrices.
pub fn matrix_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    linalg::max_abs(&(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn builtin_exports_round_trip() {
        for name in ["grandfather", "nonlinearity", "acyclic"] {
            let s = scenarios::builtin(name).unwrap();
            let f = ScenarioFile::from_scenario(&s, 0).unwrap();
            let text = f.to_string_pretty();
            let back = parse_scenario(&text).unwrap();
            assert_eq!(back, f);
            let report = run_file(&back).unwrap();
            let want = match &s.cases[0].expected {
                Some(scenarios::Expected::State(w)) => w.clone(),
                _ => unreachable!(),
            };
            assert!(trace_distance(&report.output_state().unwrap(), &want).unwrap() < 1e-8, "{name}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        let s = scenarios::builtin("grandfather").unwrap();
        let mut v = ScenarioFile::from_scenario(&s, 0).unwrap().to_json();
        v["assignments"]["v"] = json!("hadamard");
        let e = ScenarioFile::from_json(&v).unwrap().diagram().unwrap_err().to_string();
        assert!(e.contains("/assignments/v") && e.contains("`v`"), "{e}");

        let mut v = ScenarioFile::from_scenario(&s, 0).unwrap().to_json();
        v["graph"]["edges"][1]["systems"] = json!(["q"]);
        let e = ScenarioFile::from_json(&v).unwrap().diagram().unwrap_err().to_string();
        assert!(e.contains("/graph/edges/1/systems/0"), "{e}");

        let e = parse_scenario("{\"version\": ").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn symbolic_expressions_build() {
        let expr = ChannelExpr::Seq(vec![
            ChannelExpr::Ten(vec![
                ChannelExpr::Gate { name: "hadamard".into(), params: vec![] },
                ChannelExpr::Gate { name: "identity".into(), params: vec![2.0] },
            ]),
            ChannelExpr::Gate { name: "cnot".into(), params: vec![] },
            ChannelExpr::Perm { perm: vec![1, 0], dims: vec![2, 2] },
        ]);
        let back = ChannelExpr::parse(&expr.to_json(), "").unwrap();
        assert_eq!(back, expr);
        let ch = back.build("").unwrap();
        let out = ch.apply(&DensityMatrix::basis(vec![2, 2], 0).unwrap()).unwrap();
        assert!(trace_distance(&out, &DensityMatrix::bell()).unwrap() < 1e-12);
    }
}
