//! Circuit IR over mixed qubit/ququart wires with classical bits, a
//! JSON file format, dataflow validation, an exact branch-enumerating
//! simulator, unitary compilation, Choi extraction, and seeded shot
//! sampling.
//!
//! Wires are declared up front and flow through at most one life
//! cycle: pending, live (after prep or as a circuit input), then
//! measured, consumed (by fuse/split), or discarded. Measurement
//! collapses and keeps the wire; discard traces it out.

use crate::gates::{GateError, GateInstance, GateName};
use crate::hilbert::{
    self, c, choi_of_branches, BranchChoi, CMatrix, CVector, DenseState, DenseUnitary,
    RegisterShape, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Measurement branches below this probability are dropped.
pub const PRUNE_PROB: f64 = 1e-14;

pub type Result<T> = std::result::Result<T, CircuitError>;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("malformed circuit JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate wire id {id:?}")]
    DuplicateWire { id: String },
    #[error("wire {id:?} has unsupported dimension {dim}")]
    BadWireDim { id: String, dim: u8 },
    #[error("duplicate classical bit id {id:?}")]
    DuplicateCbit { id: String },
    #[error("classical bit {id:?} has unsupported width {width}")]
    BadCbitWidth { id: String, width: u8 },
    #[error("input wire {id:?} listed twice")]
    DuplicateInput { id: String },
    #[error("op {op_index}: unknown wire {id:?}")]
    UnknownWire { op_index: usize, id: String },
    #[error("op {op_index}: wire {id:?} is {state}")]
    WireUnavailable {
        op_index: usize,
        id: String,
        state: &'static str,
    },
    #[error("op {op_index}: duplicate target wire {id:?}")]
    DuplicateTarget { op_index: usize, id: String },
    #[error("op {op_index}: {source}")]
    Gate {
        op_index: usize,
        source: GateError,
    },
    #[error("op {op_index}: {name} changes register shape and must appear as a fuse or split op")]
    FusionAsGate { op_index: usize, name: GateName },
    #[error("op {op_index}: prep value {value} out of range for wire {id:?} of dimension {dim}")]
    BadPrepValue {
        op_index: usize,
        id: String,
        value: u8,
        dim: u8,
    },
    #[error("op {op_index}: fuse expects two distinct live qubits and a pending ququart, but wire {id:?} has dimension {dim}")]
    FuseShape { op_index: usize, id: String, dim: u8 },
    #[error("op {op_index}: split expects a live ququart and two pending qubits, but wire {id:?} has dimension {dim}")]
    SplitShape { op_index: usize, id: String, dim: u8 },
    #[error("op {op_index}: classical bit {id:?} read before it is written")]
    CbitUnwritten { op_index: usize, id: String },
    #[error("op {op_index}: classical bit {id:?} already written")]
    CbitRewritten { op_index: usize, id: String },
    #[error("op {op_index}: condition value {equals} out of range for classical bit {id:?} of width {width}")]
    BadConditionValue {
        op_index: usize,
        id: String,
        equals: u8,
        width: u8,
    },
    #[error("output wire {id:?} is not alive at the end of the circuit")]
    OutputNotAlive { id: String },
    #[error("output wire {id:?} listed twice")]
    DuplicateOutput { id: String },
    #[error("classical output {id:?} is never written")]
    ClassicalOutputUnwritten { id: String },
    #[error("op {op_index}: measurement cannot appear in a unitary compilation")]
    MeasureInUnitary { op_index: usize },
    #[error("op {op_index}: discard cannot appear in a unitary compilation")]
    DiscardInUnitary { op_index: usize },
    #[error("op {op_index}: classical control on {id:?} must be bound to a constant before unitary compilation")]
    ClassicalInUnitary { op_index: usize, id: String },
    #[error("wire {id:?} is live at the end but not an output; unitary compilation cannot trace it out")]
    LeftoverLive { id: String },
    #[error("circuit declares quantum inputs; supply an input state")]
    NeedsInputState,
    #[error("input state has dimension {got}, circuit inputs have dimension {want}")]
    InputStateDim { got: usize, want: usize },
    #[error("missing value for classical input {id:?}")]
    MissingClassicalInput { id: String },
    #[error("value {value} out of range for classical input {id:?} of width {width}")]
    BadClassicalInput { id: String, value: u8, width: u8 },
    #[error(transparent)]
    Hilbert(#[from] hilbert::HilbertError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wire {
    pub id: String,
    pub dim: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalBit {
    pub id: String,
    pub width: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub cbit: String,
    pub equals: u8,
}

fn one_i64() -> i64 {
    1
}

fn is_one(p: &i64) -> bool {
    *p == 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Op {
    Prep {
        wire: String,
        #[serde(default)]
        value: u8,
    },
    Gate {
        name: GateName,
        #[serde(default = "one_i64", skip_serializing_if = "is_one")]
        power: i64,
        targets: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        classical_power: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        condition: Option<Condition>,
    },
    Fuse {
        inputs: [String; 2],
        output: String,
    },
    Split {
        input: String,
        outputs: [String; 2],
    },
    Measure {
        wire: String,
        cbit: String,
    },
    Discard {
        wire: String,
    },
}

/// A circuit. `inputs` marks wires carrying external state; circuit
/// files normally describe closed circuits and omit the field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub wires: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub classical_inputs: Vec<ClassicalBit>,
    pub ops: Vec<Op>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub classical_outputs: Vec<String>,
}

pub fn parse(text: &str) -> Result<Circuit> {
    let c: Circuit = serde_json::from_str(text)?;
    validate(&c)?;
    Ok(c)
}

pub fn serialize(c: &Circuit) -> String {
    let mut s = serde_json::to_string_pretty(c).expect("circuit serialization cannot fail");
    s.push('\n');
    s
}

impl Circuit {
    pub fn wire_index(&self) -> HashMap<&str, usize> {
        self.wires
            .iter()
            .enumerate()
            .map(|(k, w)| (w.id.as_str(), k))
            .collect()
    }

    fn dims_of(&self, ids: &[String]) -> Vec<u8> {
        let index = self.wire_index();
        ids.iter().map(|id| self.wires[index[id.as_str()]].dim).collect()
    }

    pub fn input_shape(&self) -> RegisterShape {
        RegisterShape::new(self.dims_of(&self.inputs)).expect("validated dims")
    }

    pub fn output_shape(&self) -> RegisterShape {
        RegisterShape::new(self.dims_of(&self.outputs)).expect("validated dims")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Flow {
    Pending,
    Live,
    Measured,
    Consumed,
    Discarded,
}

impl Flow {
    fn describe(self) -> &'static str {
        match self {
            Flow::Pending => "not yet prepared",
            Flow::Live => "live",
            Flow::Measured => "already measured",
            Flow::Consumed => "consumed by an earlier fuse or split",
            Flow::Discarded => "discarded",
        }
    }
}

struct CbitInfo {
    width: u8,
    written: bool,
}

/// Dataflow validation: unique ids, legal dimensions, wires used only
/// while live, classical bits written exactly once before any read,
/// outputs alive at the end. Errors carry the op index and wire id.
pub fn validate(c: &Circuit) -> Result<()> {
    let mut windex: HashMap<&str, usize> = HashMap::new();
    for (k, w) in c.wires.iter().enumerate() {
        if w.dim != 2 && w.dim != 4 {
            return Err(CircuitError::BadWireDim {
                id: w.id.clone(),
                dim: w.dim,
            });
        }
        if windex.insert(w.id.as_str(), k).is_some() {
            return Err(CircuitError::DuplicateWire { id: w.id.clone() });
        }
    }
    let mut cbits: HashMap<String, CbitInfo> = HashMap::new();
    for cb in &c.classical_inputs {
        if cb.width != 2 && cb.width != 4 {
            return Err(CircuitError::BadCbitWidth {
                id: cb.id.clone(),
                width: cb.width,
            });
        }
        if cbits
            .insert(
                cb.id.clone(),
                CbitInfo {
                    width: cb.width,
                    written: true,
                },
            )
            .is_some()
        {
            return Err(CircuitError::DuplicateCbit { id: cb.id.clone() });
        }
    }
    let mut flow = vec![Flow::Pending; c.wires.len()];
    for id in &c.inputs {
        let &w = windex
            .get(id.as_str())
            .ok_or_else(|| CircuitError::UnknownWire {
                op_index: 0,
                id: id.clone(),
            })?;
        if flow[w] != Flow::Pending {
            return Err(CircuitError::DuplicateInput { id: id.clone() });
        }
        flow[w] = Flow::Live;
    }

    let lookup = |op_index: usize, id: &str| -> Result<usize> {
        windex
            .get(id)
            .copied()
            .ok_or_else(|| CircuitError::UnknownWire {
                op_index,
                id: id.to_string(),
            })
    };
    let read_cbit = |op_index: usize, cbits: &HashMap<String, CbitInfo>, id: &str| -> Result<u8> {
        match cbits.get(id) {
            Some(info) if info.written => Ok(info.width),
            _ => Err(CircuitError::CbitUnwritten {
                op_index,
                id: id.to_string(),
            }),
        }
    };

    for (k, op) in c.ops.iter().enumerate() {
        match op {
            Op::Prep { wire, value } => {
                let w = lookup(k, wire)?;
                if flow[w] != Flow::Pending {
                    return Err(CircuitError::WireUnavailable {
                        op_index: k,
                        id: wire.clone(),
                        state: flow[w].describe(),
                    });
                }
                if *value >= c.wires[w].dim {
                    return Err(CircuitError::BadPrepValue {
                        op_index: k,
                        id: wire.clone(),
                        value: *value,
                        dim: c.wires[w].dim,
                    });
                }
                flow[w] = Flow::Live;
            }
            Op::Gate {
                name,
                power,
                targets,
                classical_power,
                condition,
            } => {
                if name.is_fusion() {
                    return Err(CircuitError::FusionAsGate {
                        op_index: k,
                        name: *name,
                    });
                }
                let mut seen: Vec<usize> = Vec::new();
                let mut dims = Vec::new();
                for id in targets {
                    let w = lookup(k, id)?;
                    if seen.contains(&w) {
                        return Err(CircuitError::DuplicateTarget {
                            op_index: k,
                            id: id.clone(),
                        });
                    }
                    seen.push(w);
                    if flow[w] != Flow::Live {
                        return Err(CircuitError::WireUnavailable {
                            op_index: k,
                            id: id.clone(),
                            state: flow[w].describe(),
                        });
                    }
                    dims.push(c.wires[w].dim);
                }
                GateInstance::new(*name, *power, dims)
                    .order()
                    .map_err(|source| CircuitError::Gate { op_index: k, source })?;
                if let Some(cb) = classical_power {
                    read_cbit(k, &cbits, cb)?;
                }
                if let Some(cond) = condition {
                    let width = read_cbit(k, &cbits, &cond.cbit)?;
                    if cond.equals >= width {
                        return Err(CircuitError::BadConditionValue {
                            op_index: k,
                            id: cond.cbit.clone(),
                            equals: cond.equals,
                            width,
                        });
                    }
                }
            }
            Op::Fuse { inputs, output } => {
                let lo = lookup(k, &inputs[0])?;
                let hi = lookup(k, &inputs[1])?;
                if lo == hi {
                    return Err(CircuitError::DuplicateTarget {
                        op_index: k,
                        id: inputs[1].clone(),
                    });
                }
                for (w, id) in [(lo, &inputs[0]), (hi, &inputs[1])] {
                    if c.wires[w].dim != 2 {
                        return Err(CircuitError::FuseShape {
                            op_index: k,
                            id: id.clone(),
                            dim: c.wires[w].dim,
                        });
                    }
                    if flow[w] != Flow::Live {
                        return Err(CircuitError::WireUnavailable {
                            op_index: k,
                            id: id.clone(),
                            state: flow[w].describe(),
                        });
                    }
                }
                let out = lookup(k, output)?;
                if c.wires[out].dim != 4 {
                    return Err(CircuitError::FuseShape {
                        op_index: k,
                        id: output.clone(),
                        dim: c.wires[out].dim,
                    });
                }
                if flow[out] != Flow::Pending {
                    return Err(CircuitError::WireUnavailable {
                        op_index: k,
                        id: output.clone(),
                        state: flow[out].describe(),
                    });
                }
                flow[lo] = Flow::Consumed;
                flow[hi] = Flow::Consumed;
                flow[out] = Flow::Live;
            }
            Op::Split { input, outputs } => {
                let w = lookup(k, input)?;
                if c.wires[w].dim != 4 {
                    return Err(CircuitError::SplitShape {
                        op_index: k,
                        id: input.clone(),
                        dim: c.wires[w].dim,
                    });
                }
                if flow[w] != Flow::Live {
                    return Err(CircuitError::WireUnavailable {
                        op_index: k,
                        id: input.clone(),
                        state: flow[w].describe(),
                    });
                }
                let lo = lookup(k, &outputs[0])?;
                let hi = lookup(k, &outputs[1])?;
                if lo == hi {
                    return Err(CircuitError::DuplicateTarget {
                        op_index: k,
                        id: outputs[1].clone(),
                    });
                }
                for (o, id) in [(lo, &outputs[0]), (hi, &outputs[1])] {
                    if c.wires[o].dim != 2 {
                        return Err(CircuitError::SplitShape {
                            op_index: k,
                            id: id.clone(),
                            dim: c.wires[o].dim,
                        });
                    }
                    if flow[o] != Flow::Pending {
                        return Err(CircuitError::WireUnavailable {
                            op_index: k,
                            id: id.clone(),
                            state: flow[o].describe(),
                        });
                    }
                }
                flow[w] = Flow::Consumed;
                flow[lo] = Flow::Live;
                flow[hi] = Flow::Live;
            }
            Op::Measure { wire, cbit } => {
                let w = lookup(k, wire)?;
                if flow[w] != Flow::Live {
                    return Err(CircuitError::WireUnavailable {
                        op_index: k,
                        id: wire.clone(),
                        state: flow[w].describe(),
                    });
                }
                if cbits.contains_key(cbit.as_str()) {
                    return Err(CircuitError::CbitRewritten {
                        op_index: k,
                        id: cbit.clone(),
                    });
                }
                // Measured cbits are implicitly declared with the wire's dim.
                cbits.insert(
                    cbit.clone(),
                    CbitInfo {
                        width: c.wires[w].dim,
                        written: true,
                    },
                );
                flow[w] = Flow::Measured;
            }
            Op::Discard { wire } => {
                let w = lookup(k, wire)?;
                if flow[w] != Flow::Live && flow[w] != Flow::Measured {
                    return Err(CircuitError::WireUnavailable {
                        op_index: k,
                        id: wire.clone(),
                        state: flow[w].describe(),
                    });
                }
                flow[w] = Flow::Discarded;
            }
        }
    }

    let mut seen_out: Vec<usize> = Vec::new();
    for id in &c.outputs {
        let w = lookup(c.ops.len(), id)?;
        if seen_out.contains(&w) {
            return Err(CircuitError::DuplicateOutput { id: id.clone() });
        }
        seen_out.push(w);
        if flow[w] != Flow::Live && flow[w] != Flow::Measured {
            return Err(CircuitError::OutputNotAlive { id: id.clone() });
        }
    }
    for id in &c.classical_outputs {
        match cbits.get(id.as_str()) {
            Some(info) if info.written => {}
            _ => {
                return Err(CircuitError::ClassicalOutputUnwritten { id: id.clone() });
            }
        }
    }
    Ok(())
}

fn check_assignments(c: &Circuit, values: &BTreeMap<String, u8>) -> Result<()> {
    for cb in &c.classical_inputs {
        match values.get(&cb.id) {
            None => {
                return Err(CircuitError::MissingClassicalInput { id: cb.id.clone() });
            }
            Some(&v) if v >= cb.width => {
                return Err(CircuitError::BadClassicalInput {
                    id: cb.id.clone(),
                    value: v,
                    width: cb.width,
                });
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Substitutes constants for classical inputs: powered gates absorb the
/// value into their power, conditioned gates are kept or dropped. The
/// result has no classical inputs, so it can be compiled as a unitary
/// when it is also measurement-free.
pub fn bind_classical_inputs(c: &Circuit, values: &BTreeMap<String, u8>) -> Result<Circuit> {
    validate(c)?;
    check_assignments(c, values)?;
    let mut out = c.clone();
    out.classical_inputs.clear();
    out.ops = Vec::with_capacity(c.ops.len());
    for op in &c.ops {
        match op {
            Op::Gate {
                name,
                power,
                targets,
                classical_power,
                condition,
            } => {
                let mut power = *power;
                let mut classical_power = classical_power.clone();
                let mut condition = condition.clone();
                if let Some(cond) = &condition {
                    if let Some(&v) = values.get(&cond.cbit) {
                        if v != cond.equals {
                            continue;
                        }
                        condition = None;
                    }
                }
                if let Some(cb) = &classical_power {
                    if let Some(&v) = values.get(cb) {
                        power *= v as i64;
                        classical_power = None;
                    }
                }
                out.ops.push(Op::Gate {
                    name: *name,
                    power,
                    targets: targets.clone(),
                    classical_power,
                    condition,
                });
            }
            other => out.ops.push(other.clone()),
        }
    }
    validate(&out)?;
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum SiteOwner {
    Wire(usize),
    Reference(usize),
}

#[derive(Clone)]
struct SimBranch {
    owners: Vec<SiteOwner>,
    dims: Vec<u8>,
    amps: CVector,
    cbits: BTreeMap<String, u8>,
}

impl SimBranch {
    fn scalar(cbits: BTreeMap<String, u8>) -> Self {
        SimBranch {
            owners: Vec::new(),
            dims: Vec::new(),
            amps: CVector::from_elem(1, c(1.0, 0.0)),
            cbits,
        }
    }

    fn shape(&self) -> RegisterShape {
        RegisterShape::new(self.dims.clone()).expect("sim dims are validated")
    }

    fn site_of(&self, owner: SiteOwner) -> usize {
        self.owners
            .iter()
            .position(|&o| o == owner)
            .expect("owner has a live site")
    }

    fn probability(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn append_basis_site(&mut self, owner: SiteOwner, dim: u8, value: u8) {
        let d = dim as usize;
        let mut next = CVector::zeros(self.amps.len() * d);
        for (i, &a) in self.amps.iter().enumerate() {
            next[i * d + value as usize] = a;
        }
        self.owners.push(owner);
        self.dims.push(dim);
        self.amps = next;
    }

    fn apply(&mut self, mat: &CMatrix, sites: &[usize]) {
        let shape = self.shape();
        hilbert::apply_gate_in_place(&mut self.amps, &shape, mat, sites)
            .expect("validated gate application");
    }

    /// Rebuilds the register dropping `remove` sites and appending
    /// `append` new ones. Amplitudes move where `keep` holds; appended
    /// digits are computed from the old digit string.
    fn rebuild(
        &self,
        remove: &[usize],
        append: &[(SiteOwner, u8)],
        keep: impl Fn(&[u8]) -> bool,
        appended: impl Fn(&[u8]) -> Vec<u8>,
    ) -> SimBranch {
        let old_shape = self.shape();
        let mut owners = Vec::new();
        let mut dims = Vec::new();
        for s in 0..self.owners.len() {
            if !remove.contains(&s) {
                owners.push(self.owners[s]);
                dims.push(self.dims[s]);
            }
        }
        for &(owner, dim) in append {
            owners.push(owner);
            dims.push(dim);
        }
        let new_shape = RegisterShape::new(dims.clone()).expect("sim dims are validated");
        let mut amps = CVector::zeros(new_shape.total_dim());
        for idx in 0..old_shape.total_dim() {
            if self.amps[idx] == c(0.0, 0.0) {
                continue;
            }
            let digits = old_shape.digits_of(idx);
            if !keep(&digits) {
                continue;
            }
            let mut nd: Vec<u8> = (0..self.owners.len())
                .filter(|s| !remove.contains(s))
                .map(|s| digits[s])
                .collect();
            nd.extend(appended(&digits));
            amps[new_shape.index_of(&nd)] = self.amps[idx];
        }
        SimBranch {
            owners,
            dims,
            amps,
            cbits: self.cbits.clone(),
        }
    }

    /// Collapse onto digit `value` at `site` without renormalizing;
    /// the site stays in the register.
    fn project(&mut self, site: usize, value: u8) {
        let shape = self.shape();
        for idx in 0..shape.total_dim() {
            if shape.digits_of(idx)[site] != value {
                self.amps[idx] = c(0.0, 0.0);
            }
        }
    }

    fn outcome_weights(&self, site: usize) -> Vec<f64> {
        let shape = self.shape();
        let mut w = vec![0.0; self.dims[site] as usize];
        for idx in 0..shape.total_dim() {
            let v = shape.digits_of(idx)[site] as usize;
            w[v] += self.amps[idx].norm_sqr();
        }
        w
    }

    /// Traces a site out by branching over its basis values and
    /// removing the tensor factor. Collapsed sites yield one branch.
    fn remove_site(&self, site: usize) -> Vec<SimBranch> {
        let mut out = Vec::new();
        for (v, &w) in self.outcome_weights(site).iter().enumerate() {
            if w <= PRUNE_PROB {
                continue;
            }
            out.push(self.rebuild(
                &[site],
                &[],
                |digits| digits[site] == v as u8,
                |_| Vec::new(),
            ));
        }
        out
    }
}

struct SimContext<'c> {
    circuit: &'c Circuit,
    windex: HashMap<&'c str, usize>,
}

impl<'c> SimContext<'c> {
    fn new(circuit: &'c Circuit) -> Self {
        let windex = circuit.wire_index();
        SimContext { circuit, windex }
    }

    fn wire(&self, id: &str) -> usize {
        self.windex[id]
    }

    fn run(&self, initial: SimBranch) -> Result<Vec<SimBranch>> {
        let mut branches = vec![initial];
        for op in &self.circuit.ops {
            match op {
                Op::Prep { wire, value } => {
                    let w = self.wire(wire);
                    let dim = self.circuit.wires[w].dim;
                    for b in &mut branches {
                        b.append_basis_site(SiteOwner::Wire(w), dim, *value);
                    }
                }
                Op::Gate {
                    name,
                    power,
                    targets,
                    classical_power,
                    condition,
                } => {
                    let wires: Vec<usize> = targets.iter().map(|t| self.wire(t)).collect();
                    let dims: Vec<u8> =
                        wires.iter().map(|&w| self.circuit.wires[w].dim).collect();
                    let mut cache: HashMap<i64, CMatrix> = HashMap::new();
                    for b in &mut branches {
                        if let Some(cond) = condition {
                            if b.cbits[&cond.cbit] != cond.equals {
                                continue;
                            }
                        }
                        let mut p = *power;
                        if let Some(cb) = classical_power {
                            p *= b.cbits[cb] as i64;
                        }
                        let mat = cache.entry(p).or_insert_with(|| {
                            GateInstance::new(*name, p, dims.clone())
                                .matrix()
                                .expect("validated gate")
                                .mat
                        });
                        let sites: Vec<usize> =
                            wires.iter().map(|&w| b.site_of(SiteOwner::Wire(w))).collect();
                        b.apply(mat, &sites);
                    }
                }
                Op::Fuse { inputs, output } => {
                    let lo = self.wire(&inputs[0]);
                    let hi = self.wire(&inputs[1]);
                    let out = self.wire(output);
                    for b in &mut branches {
                        let sx = b.site_of(SiteOwner::Wire(lo));
                        let sy = b.site_of(SiteOwner::Wire(hi));
                        *b = b.rebuild(
                            &[sx, sy],
                            &[(SiteOwner::Wire(out), 4)],
                            |_| true,
                            |digits| vec![2 * digits[sy] + digits[sx]],
                        );
                    }
                }
                Op::Split { input, outputs } => {
                    let w = self.wire(input);
                    let lo = self.wire(&outputs[0]);
                    let hi = self.wire(&outputs[1]);
                    for b in &mut branches {
                        let s = b.site_of(SiteOwner::Wire(w));
                        *b = b.rebuild(
                            &[s],
                            &[(SiteOwner::Wire(lo), 2), (SiteOwner::Wire(hi), 2)],
                            |_| true,
                            |digits| vec![digits[s] % 2, digits[s] / 2],
                        );
                    }
                }
                Op::Measure { wire, cbit } => {
                    let w = self.wire(wire);
                    let mut next = Vec::with_capacity(branches.len());
                    for b in branches {
                        let s = b.site_of(SiteOwner::Wire(w));
                        for (v, &weight) in b.outcome_weights(s).iter().enumerate() {
                            if weight <= PRUNE_PROB {
                                continue;
                            }
                            let mut nb = b.clone();
                            nb.project(s, v as u8);
                            nb.cbits.insert(cbit.clone(), v as u8);
                            next.push(nb);
                        }
                    }
                    branches = next;
                }
                Op::Discard { wire } => {
                    let w = self.wire(wire);
                    let mut next = Vec::with_capacity(branches.len());
                    for b in branches {
                        let s = b.site_of(SiteOwner::Wire(w));
                        next.extend(b.remove_site(s));
                    }
                    branches = next;
                }
            }
        }
        Ok(branches)
    }

    /// Traces out wires that are not outputs, then orders sites as
    /// the declared outputs followed by reference sites.
    fn finalize(&self, branch: SimBranch) -> Vec<SimBranch> {
        let out_wires: Vec<usize> = self.circuit.outputs.iter().map(|id| self.wire(id)).collect();
        let mut work = vec![branch];
        loop {
            let mut next = Vec::with_capacity(work.len());
            let mut changed = false;
            for b in work {
                let extra = b.owners.iter().position(|o| match o {
                    SiteOwner::Wire(w) => !out_wires.contains(w),
                    SiteOwner::Reference(_) => false,
                });
                match extra {
                    Some(s) => {
                        changed = true;
                        next.extend(b.remove_site(s));
                    }
                    None => next.push(b),
                }
            }
            work = next;
            if !changed {
                break;
            }
        }
        for b in &mut work {
            let mut perm: Vec<usize> = out_wires
                .iter()
                .map(|&w| b.site_of(SiteOwner::Wire(w)))
                .collect();
            let mut refs: Vec<(usize, usize)> = b
                .owners
                .iter()
                .enumerate()
                .filter_map(|(s, o)| match o {
                    SiteOwner::Reference(k) => Some((*k, s)),
                    SiteOwner::Wire(_) => None,
                })
                .collect();
            refs.sort_unstable();
            perm.extend(refs.iter().map(|&(_, s)| s));
            let state = DenseState {
                shape: b.shape(),
                amps: b.amps.clone(),
            };
            let permuted = hilbert::permute_state(&state, &perm);
            b.owners = perm.iter().map(|&s| b.owners[s]).collect();
            b.dims = permuted.shape.dims().to_vec();
            b.amps = permuted.amps;
        }
        work
    }
}

/// One measurement branch: classical output values, the sub-normalized
/// output state, and the branch probability (its squared norm).
#[derive(Clone, Debug)]
pub struct BranchOutcome {
    pub labels: BTreeMap<String, u8>,
    pub state: DenseState,
    pub probability: f64,
}

impl BranchOutcome {
    pub fn normalized_state(&self) -> DenseState {
        let n = self.state.norm();
        DenseState {
            shape: self.state.shape.clone(),
            amps: self.state.amps.mapv(|a| a / c(n, 0.0)),
        }
    }

    /// Values joined by ':' in the circuit's classical output order.
    pub fn label_string(&self, classical_outputs: &[String]) -> String {
        classical_outputs
            .iter()
            .map(|id| self.labels[id].to_string())
            .collect::<Vec<_>>()
            .join(":")
    }
}

fn branch_labels(c: &Circuit, b: &SimBranch) -> BTreeMap<String, u8> {
    c.classical_outputs
        .iter()
        .map(|id| (id.clone(), b.cbits[id]))
        .collect()
}

fn initial_from_values(c: &Circuit, values: &BTreeMap<String, u8>) -> SimBranch {
    let cbits = c
        .classical_inputs
        .iter()
        .map(|cb| (cb.id.clone(), values[&cb.id]))
        .collect();
    SimBranch::scalar(cbits)
}

/// Exact depth-first expansion over all measurement outcomes of a
/// closed circuit (no quantum inputs).
pub fn enumerate_branches(
    c: &Circuit,
    values: &BTreeMap<String, u8>,
) -> Result<Vec<BranchOutcome>> {
    if !c.inputs.is_empty() {
        return Err(CircuitError::NeedsInputState);
    }
    enumerate_with_initial(c, values, initial_from_values(c, values))
}

/// Branch enumeration with an explicit state on the declared input
/// wires, in their declared order.
pub fn enumerate_branches_with_input(
    c: &Circuit,
    input: &DenseState,
    values: &BTreeMap<String, u8>,
) -> Result<Vec<BranchOutcome>> {
    validate(c)?;
    let shape = c.input_shape();
    if input.shape.total_dim() != shape.total_dim() {
        return Err(CircuitError::InputStateDim {
            got: input.shape.total_dim(),
            want: shape.total_dim(),
        });
    }
    let windex = c.wire_index();
    let mut start = initial_from_values(c, values);
    start.owners = c
        .inputs
        .iter()
        .map(|id| SiteOwner::Wire(windex[id.as_str()]))
        .collect();
    start.dims = shape.dims().to_vec();
    start.amps = input.amps.clone();
    enumerate_with_initial(c, values, start)
}

fn enumerate_with_initial(
    c: &Circuit,
    values: &BTreeMap<String, u8>,
    start: SimBranch,
) -> Result<Vec<BranchOutcome>> {
    validate(c)?;
    check_assignments(c, values)?;
    let ctx = SimContext::new(c);
    let mut out = Vec::new();
    for b in ctx.run(start)? {
        for fb in ctx.finalize(b) {
            let probability = fb.probability();
            out.push(BranchOutcome {
                labels: branch_labels(c, &fb),
                state: DenseState {
                    shape: fb.shape(),
                    amps: fb.amps.clone(),
                },
                probability,
            });
        }
    }
    Ok(out)
}

/// Choi matrix of the circuit as a channel from its input wires to its
/// output wires, with per-classical-outcome sub-channels. Built by
/// entangling each input wire with a same-dimension reference site and
/// reading branch operators off the joint state.
pub fn channel_of(c: &Circuit, values: &BTreeMap<String, u8>) -> Result<BranchChoi> {
    validate(c)?;
    check_assignments(c, values)?;
    let windex = c.wire_index();
    let mut start = initial_from_values(c, values);
    for (k, id) in c.inputs.iter().enumerate() {
        let w = windex[id.as_str()];
        let d = c.wires[w].dim as usize;
        let mut pair = CVector::zeros(d * d);
        for j in 0..d {
            pair[j * d + j] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        let mut joined = CVector::zeros(start.amps.len() * d * d);
        for (i, &a) in start.amps.iter().enumerate() {
            for (j, &p) in pair.iter().enumerate() {
                joined[i * d * d + j] = a * p;
            }
        }
        start.amps = joined;
        start.owners.push(SiteOwner::Wire(w));
        start.dims.push(c.wires[w].dim);
        start.owners.push(SiteOwner::Reference(k));
        start.dims.push(c.wires[w].dim);
    }
    let ctx = SimContext::new(c);
    let in_shape = c.input_shape();
    let out_shape = c.output_shape();
    let d_in = in_shape.total_dim();
    let d_out = out_shape.total_dim();
    let scale = C64::new((d_in as f64).sqrt(), 0.0);
    let mut branches: Vec<(String, CMatrix)> = Vec::new();
    for b in ctx.run(start)? {
        for fb in ctx.finalize(b) {
            let mut k_op = CMatrix::zeros((d_out, d_in));
            for o in 0..d_out {
                for i in 0..d_in {
                    k_op[(o, i)] = scale * fb.amps[o * d_in + i];
                }
            }
            let label = c
                .classical_outputs
                .iter()
                .map(|id| fb.cbits[id].to_string())
                .collect::<Vec<_>>()
                .join(":");
            branches.push((label, k_op));
        }
    }
    Ok(choi_of_branches(&branches, &in_shape, &out_shape)?)
}

/// Compiles a measurement-free circuit to the isometry from its input
/// wires to its output wires.
pub fn compile_unitary(c: &Circuit) -> Result<DenseUnitary> {
    validate(c)?;
    let windex = c.wire_index();
    let in_shape = c.input_shape();
    let d_in = in_shape.total_dim();

    // owners[s] is the wire bound to register site s; m maps the input
    // space to the current register.
    let mut owners: Vec<usize> = c.inputs.iter().map(|id| windex[id.as_str()]).collect();
    let mut dims: Vec<u8> = in_shape.dims().to_vec();
    let mut m = hilbert::identity(d_in);

    let site_of = |owners: &[usize], w: usize| -> usize {
        owners.iter().position(|&o| o == w).expect("live wire site")
    };

    for (k, op) in c.ops.iter().enumerate() {
        match op {
            Op::Prep { wire, value } => {
                let w = windex[wire.as_str()];
                let d = c.wires[w].dim as usize;
                let rows = m.nrows();
                let mut next = CMatrix::zeros((rows * d, m.ncols()));
                for r in 0..rows {
                    for col in 0..m.ncols() {
                        next[(r * d + *value as usize, col)] = m[(r, col)];
                    }
                }
                m = next;
                owners.push(w);
                dims.push(c.wires[w].dim);
            }
            Op::Gate {
                name,
                power,
                targets,
                classical_power,
                condition,
            } => {
                if let Some(cb) = classical_power {
                    return Err(CircuitError::ClassicalInUnitary {
                        op_index: k,
                        id: cb.clone(),
                    });
                }
                if let Some(cond) = condition {
                    return Err(CircuitError::ClassicalInUnitary {
                        op_index: k,
                        id: cond.cbit.clone(),
                    });
                }
                let sites: Vec<usize> = targets
                    .iter()
                    .map(|t| site_of(&owners, windex[t.as_str()]))
                    .collect();
                let tdims: Vec<u8> = targets
                    .iter()
                    .map(|t| c.wires[windex[t.as_str()]].dim)
                    .collect();
                let gate = GateInstance::new(*name, *power, tdims)
                    .matrix()
                    .expect("validated gate")
                    .mat;
                let shape = RegisterShape::new(dims.clone()).expect("validated dims");
                let full = hilbert::embed(&gate, &sites, &shape)?;
                m = full.dot(&m);
            }
            Op::Fuse { inputs, output } => {
                let sx = site_of(&owners, windex[inputs[0].as_str()]);
                let sy = site_of(&owners, windex[inputs[1].as_str()]);
                let (next_owners, next_dims, next_m) = remap_rows(
                    &owners,
                    &dims,
                    &m,
                    &[sx, sy],
                    &[(windex[output.as_str()], 4)],
                    |digits| vec![2 * digits[sy] + digits[sx]],
                );
                owners = next_owners;
                dims = next_dims;
                m = next_m;
            }
            Op::Split { input, outputs } => {
                let s = site_of(&owners, windex[input.as_str()]);
                let (next_owners, next_dims, next_m) = remap_rows(
                    &owners,
                    &dims,
                    &m,
                    &[s],
                    &[
                        (windex[outputs[0].as_str()], 2),
                        (windex[outputs[1].as_str()], 2),
                    ],
                    |digits| vec![digits[s] % 2, digits[s] / 2],
                );
                owners = next_owners;
                dims = next_dims;
                m = next_m;
            }
            Op::Measure { .. } => {
                return Err(CircuitError::MeasureInUnitary { op_index: k });
            }
            Op::Discard { .. } => {
                return Err(CircuitError::DiscardInUnitary { op_index: k });
            }
        }
    }

    for &w in &owners {
        if !c.outputs.iter().any(|id| windex[id.as_str()] == w) {
            return Err(CircuitError::LeftoverLive {
                id: c.wires[w].id.clone(),
            });
        }
    }
    let shape = RegisterShape::new(dims.clone()).expect("validated dims");
    let out_shape = c.output_shape();
    let perm: Vec<usize> = c
        .outputs
        .iter()
        .map(|id| site_of(&owners, windex[id.as_str()]))
        .collect();
    let mut final_m = CMatrix::zeros((out_shape.total_dim(), d_in));
    for row in 0..shape.total_dim() {
        let digits = shape.digits_of(row);
        let nd: Vec<u8> = perm.iter().map(|&p| digits[p]).collect();
        let nrow = out_shape.index_of(&nd);
        for col in 0..d_in {
            final_m[(nrow, col)] = m[(row, col)];
        }
    }
    Ok(DenseUnitary::new(in_shape, out_shape, final_m)?)
}

fn remap_rows(
    owners: &[usize],
    dims: &[u8],
    m: &CMatrix,
    remove: &[usize],
    append: &[(usize, u8)],
    appended: impl Fn(&[u8]) -> Vec<u8>,
) -> (Vec<usize>, Vec<u8>, CMatrix) {
    let old_shape = RegisterShape::new(dims.to_vec()).expect("validated dims");
    let mut next_owners = Vec::new();
    let mut next_dims = Vec::new();
    for s in 0..owners.len() {
        if !remove.contains(&s) {
            next_owners.push(owners[s]);
            next_dims.push(dims[s]);
        }
    }
    for &(w, d) in append {
        next_owners.push(w);
        next_dims.push(d);
    }
    let new_shape = RegisterShape::new(next_dims.clone()).expect("validated dims");
    let mut next_m = CMatrix::zeros((new_shape.total_dim(), m.ncols()));
    for row in 0..old_shape.total_dim() {
        let digits = old_shape.digits_of(row);
        let mut nd: Vec<u8> = (0..owners.len())
            .filter(|s| !remove.contains(s))
            .map(|s| digits[s])
            .collect();
        nd.extend(appended(&digits));
        let nrow = new_shape.index_of(&nd);
        for col in 0..m.ncols() {
            next_m[(nrow, col)] = m[(row, col)];
        }
    }
    (next_owners, next_dims, next_m)
}

/// Samples classical output assignments. Each shot draws from its own
/// counter-keyed ChaCha8 stream, so shot ranges can be sharded and
/// merged while staying reproducible.
pub fn sample(
    c: &Circuit,
    shots: u64,
    seed: u64,
    values: &BTreeMap<String, u8>,
) -> Result<BTreeMap<String, u64>> {
    let branches = enumerate_branches(c, values)?;
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    for b in &branches {
        *dist
            .entry(b.label_string(&c.classical_outputs))
            .or_insert(0.0) += b.probability;
    }
    let labels: Vec<(&String, f64)> = dist.iter().map(|(k, &p)| (k, p)).collect();
    let mut hist: BTreeMap<String, u64> = BTreeMap::new();
    for shot in 0..shots {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&shot.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        let mut u: f64 = rng.random();
        let mut chosen = labels.last().expect("at least one branch").0;
        for (label, p) in &labels {
            if u < *p {
                chosen = label;
                break;
            }
            u -= *p;
        }
        *hist.entry(chosen.clone()).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Incremental circuit constructor; fuse and split declare their fresh
/// wires, prep and input declare theirs.
#[derive(Default)]
pub struct CircuitBuilder {
    c: Circuit,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, id: &str, dim: u8) -> &mut Self {
        self.c.wires.push(Wire {
            id: id.to_string(),
            dim,
        });
        self
    }

    pub fn input(&mut self, id: &str, dim: u8) -> &mut Self {
        self.declare(id, dim);
        self.c.inputs.push(id.to_string());
        self
    }

    pub fn classical_input(&mut self, id: &str, width: u8) -> &mut Self {
        self.c.classical_inputs.push(ClassicalBit {
            id: id.to_string(),
            width,
        });
        self
    }

    pub fn prep(&mut self, id: &str, dim: u8, value: u8) -> &mut Self {
        self.declare(id, dim);
        self.c.ops.push(Op::Prep {
            wire: id.to_string(),
            value,
        });
        self
    }

    /// Preps `wire` in the fused resource state: two fresh qubits, H
    /// on the low one, fused into a ququart.
    pub fn prep_resource(&mut self, wire: &str) -> &mut Self {
        let a = format!("{wire}_ra");
        let b = format!("{wire}_rb");
        self.prep(&a, 2, 0)
            .prep(&b, 2, 0)
            .gate(GateName::H, &[&a])
            .fuse(&a, &b, wire)
    }

    pub fn gate(&mut self, name: GateName, targets: &[&str]) -> &mut Self {
        self.gate_pow(name, 1, targets)
    }

    pub fn gate_pow(&mut self, name: GateName, power: i64, targets: &[&str]) -> &mut Self {
        self.c.ops.push(Op::Gate {
            name,
            power,
            targets: targets.iter().map(|t| t.to_string()).collect(),
            classical_power: None,
            condition: None,
        });
        self
    }

    /// Gate applied `cbit` times (power control).
    pub fn gate_cpow(&mut self, name: GateName, targets: &[&str], cbit: &str) -> &mut Self {
        self.c.ops.push(Op::Gate {
            name,
            power: 1,
            targets: targets.iter().map(|t| t.to_string()).collect(),
            classical_power: Some(cbit.to_string()),
            condition: None,
        });
        self
    }

    /// Gate applied once iff `cbit` equals `equals`.
    pub fn gate_if(
        &mut self,
        name: GateName,
        targets: &[&str],
        cbit: &str,
        equals: u8,
    ) -> &mut Self {
        self.gate_pow_if(name, 1, targets, cbit, equals)
    }

    /// Gate raised to `power`, applied iff `cbit` equals `equals`.
    pub fn gate_pow_if(
        &mut self,
        name: GateName,
        power: i64,
        targets: &[&str],
        cbit: &str,
        equals: u8,
    ) -> &mut Self {
        self.c.ops.push(Op::Gate {
            name,
            power,
            targets: targets.iter().map(|t| t.to_string()).collect(),
            classical_power: None,
            condition: Some(Condition {
                cbit: cbit.to_string(),
                equals,
            }),
        });
        self
    }

    pub fn fuse(&mut self, low: &str, high: &str, out: &str) -> &mut Self {
        self.declare(out, 4);
        self.c.ops.push(Op::Fuse {
            inputs: [low.to_string(), high.to_string()],
            output: out.to_string(),
        });
        self
    }

    pub fn split(&mut self, input: &str, low: &str, high: &str) -> &mut Self {
        self.declare(low, 2);
        self.declare(high, 2);
        self.c.ops.push(Op::Split {
            input: input.to_string(),
            outputs: [low.to_string(), high.to_string()],
        });
        self
    }

    pub fn measure(&mut self, wire: &str, cbit: &str) -> &mut Self {
        self.c.ops.push(Op::Measure {
            wire: wire.to_string(),
            cbit: cbit.to_string(),
        });
        self
    }

    pub fn discard(&mut self, wire: &str) -> &mut Self {
        self.c.ops.push(Op::Discard {
            wire: wire.to_string(),
        });
        self
    }

    pub fn outputs(&mut self, ids: &[&str]) -> &mut Self {
        self.c.outputs = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn classical_outputs(&mut self, ids: &[&str]) -> &mut Self {
        self.c.classical_outputs = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn build(&self) -> Result<Circuit> {
        validate(&self.c)?;
        Ok(self.c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{max_abs_diff_mat, TOL_CHANNEL};
    use proptest::prelude::*;

    fn no_values() -> BTreeMap<String, u8> {
        BTreeMap::new()
    }

    fn re(x: f64) -> crate::hilbert::C64 {
        crate::hilbert::c(x, 0.0)
    }

    #[test]
    fn minimal_h_circuit_parses() {
        let text = r#"{
            "wires": [{"id": "q", "dim": 2}],
            "classical_inputs": [],
            "ops": [{"type": "prep", "wire": "q", "value": 0},
                    {"type": "gate", "name": "H", "targets": ["q"]}],
            "outputs": ["q"],
            "classical_outputs": []
        }"#;
        let c = parse(text).unwrap();
        assert_eq!(c.wires.len(), 1);
        assert_eq!(c.ops.len(), 2);
        let round = parse(&serialize(&c)).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn fusion_prep_circuit_parses() {
        // H|0> fused with |0>: two qubit wires in, one ququart out.
        let c = CircuitBuilder::new()
            .prep("a", 2, 0)
            .prep("b", 2, 0)
            .gate(GateName::H, &["a"])
            .fuse("a", "b", "d")
            .outputs(&["d"])
            .build()
            .unwrap();
        assert_eq!(c.wires.len(), 3);
        let round = parse(&serialize(&c)).unwrap();
        assert_eq!(round, c);
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 1);
        let s = &branches[0].state;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps[0] - re(h)).norm() < 1e-12);
        assert!((s.amps[1] - re(h)).norm() < 1e-12);
        assert!(s.amps[2].norm() < 1e-12);
        assert!(s.amps[3].norm() < 1e-12);
    }

    #[test]
    fn gate_on_consumed_wire_reports_index_and_id() {
        let mut b = CircuitBuilder::new();
        b.prep("a", 2, 0)
            .prep("b", 2, 0)
            .fuse("a", "b", "d")
            .gate(GateName::X, &["a"])
            .outputs(&["d"]);
        let err = b.build().unwrap_err();
        match err {
            CircuitError::WireUnavailable { op_index, id, .. } => {
                assert_eq!(op_index, 3);
                assert_eq!(id, "a");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gate_after_measure_rejected_but_discard_allowed() {
        let mut b = CircuitBuilder::new();
        b.prep("q", 2, 0)
            .measure("q", "m")
            .gate(GateName::X, &["q"]);
        assert!(matches!(
            b.build(),
            Err(CircuitError::WireUnavailable { op_index: 2, .. })
        ));
        let c = CircuitBuilder::new()
            .prep("q", 2, 0)
            .measure("q", "m")
            .discard("q")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].labels["m"], 0);
    }

    #[test]
    fn unknown_gate_name_is_a_parse_error() {
        let text = r#"{
            "wires": [{"id": "q", "dim": 2}],
            "ops": [{"type": "gate", "name": "Y", "targets": ["q"]}],
            "outputs": []
        }"#;
        assert!(matches!(parse(text), Err(CircuitError::Json(_))));
    }

    #[test]
    fn compile_composes_and_permutes() {
        let c = CircuitBuilder::new()
            .input("d", 4)
            .gate(GateName::X, &["d"])
            .gate(GateName::X, &["d"])
            .outputs(&["d"])
            .build()
            .unwrap();
        let u = compile_unitary(&c).unwrap();
        let x2 = GateInstance::new(GateName::X, 2, vec![4]).matrix().unwrap();
        assert!(max_abs_diff_mat(&u.mat, &x2.mat) < 1e-12);

        let empty = CircuitBuilder::new()
            .input("d", 4)
            .outputs(&["d"])
            .build()
            .unwrap();
        let u = compile_unitary(&empty).unwrap();
        assert!(max_abs_diff_mat(&u.mat, &crate::hilbert::identity(4)) < 1e-15);
    }

    #[test]
    fn compile_rejects_measurement_and_leftovers() {
        let mut b = CircuitBuilder::new();
        b.prep("q", 2, 0).measure("q", "m").classical_outputs(&["m"]);
        let c = b.build().unwrap();
        assert!(matches!(
            compile_unitary(&c),
            Err(CircuitError::MeasureInUnitary { op_index: 1 })
        ));
        let c = CircuitBuilder::new()
            .prep("a", 2, 0)
            .prep("b", 2, 0)
            .outputs(&["a"])
            .build()
            .unwrap();
        assert!(matches!(
            compile_unitary(&c),
            Err(CircuitError::LeftoverLive { id }) if id == "b"
        ));
    }

    #[test]
    fn fuse_then_split_is_identity_channel() {
        let c = CircuitBuilder::new()
            .input("a", 2)
            .input("b", 2)
            .fuse("a", "b", "d")
            .split("d", "a2", "b2")
            .outputs(&["a2", "b2"])
            .build()
            .unwrap();
        let ch = channel_of(&c, &no_values()).unwrap();
        let shape = RegisterShape::new(vec![2, 2]).unwrap();
        let ident = DenseUnitary::square(shape, crate::hilbert::identity(4))
            .unwrap()
            .choi();
        assert!(ch.total.max_abs_diff(&ident) < TOL_CHANNEL);
        assert!(ch.total.is_rank_one(1e-9));

        let c = CircuitBuilder::new()
            .input("d", 4)
            .split("d", "a", "b")
            .fuse("a", "b", "d2")
            .outputs(&["d2"])
            .build()
            .unwrap();
        let ch = channel_of(&c, &no_values()).unwrap();
        let ident = DenseUnitary::square(RegisterShape::ququart(), crate::hilbert::identity(4))
            .unwrap()
            .choi();
        assert!(ch.total.max_abs_diff(&ident) < TOL_CHANNEL);
    }

    #[test]
    fn channel_of_measurement_free_circuit_matches_compiled_choi() {
        let c = CircuitBuilder::new()
            .input("q", 2)
            .prep("r", 2, 0)
            .gate(GateName::H, &["q"])
            .gate(GateName::Cnot, &["q", "r"])
            .gate_pow(GateName::S, 3, &["r"])
            .outputs(&["r", "q"])
            .build()
            .unwrap();
        let ch = channel_of(&c, &no_values()).unwrap();
        let u = compile_unitary(&c).unwrap();
        assert!(ch.total.max_abs_diff(&u.choi()) < TOL_CHANNEL);
        assert!(ch.total.validate().is_ok());
    }

    #[test]
    fn measure_branches_have_correct_probabilities() {
        let c = CircuitBuilder::new()
            .prep("q", 2, 0)
            .gate(GateName::H, &["q"])
            .measure("q", "m")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 2);
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for b in &branches {
            assert!((b.probability - 0.5).abs() < 1e-12);
        }

        let c = CircuitBuilder::new()
            .prep("d", 4, 0)
            .gate(GateName::H, &["d"])
            .measure("d", "m")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 4);
        for b in &branches {
            assert!((b.probability - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn measured_wire_can_be_output() {
        let c = CircuitBuilder::new()
            .prep("q", 2, 1)
            .measure("q", "m")
            .outputs(&["q"])
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].labels["m"], 1);
        assert!((branches[0].state.amps[1] - re(1.0)).norm() < 1e-12);
    }

    #[test]
    fn discard_traces_out_entangled_wire() {
        let c = CircuitBuilder::new()
            .prep("a", 2, 0)
            .prep("b", 2, 0)
            .gate(GateName::H, &["a"])
            .gate(GateName::Cnot, &["a", "b"])
            .discard("b")
            .outputs(&["a"])
            .build()
            .unwrap();
        let ch = channel_of(&c, &no_values()).unwrap();
        // Preparation channel: the Choi is the reduced output state,
        // the maximally mixed qubit.
        assert_eq!(ch.total.mat.nrows(), 2);
        assert!((ch.total.mat[(0, 0)] - re(0.5)).norm() < 1e-12);
        assert!((ch.total.mat[(1, 1)] - re(0.5)).norm() < 1e-12);
        assert!(ch.total.mat[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn classical_power_and_condition_control_gates() {
        let mut values = BTreeMap::new();
        let c = CircuitBuilder::new()
            .classical_input("r", 2)
            .prep("q", 2, 0)
            .gate_cpow(GateName::X, &["q"], "r")
            .measure("q", "m")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        values.insert("r".to_string(), 1u8);
        let branches = enumerate_branches(&c, &values).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].labels["m"], 1);
        values.insert("r".to_string(), 0u8);
        let branches = enumerate_branches(&c, &values).unwrap();
        assert_eq!(branches[0].labels["m"], 0);

        // Condition: apply X on the second qubit iff the first measured 1.
        let c = CircuitBuilder::new()
            .prep("a", 2, 0)
            .prep("b", 2, 0)
            .gate(GateName::H, &["a"])
            .measure("a", "ma")
            .gate_if(GateName::X, &["b"], "ma", 1)
            .measure("b", "mb")
            .classical_outputs(&["ma", "mb"])
            .build()
            .unwrap();
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 2);
        for b in &branches {
            assert_eq!(b.labels["ma"], b.labels["mb"]);
        }
    }

    #[test]
    fn bind_classical_inputs_enables_compilation() {
        let c = CircuitBuilder::new()
            .classical_input("r", 2)
            .input("q", 2)
            .gate_cpow(GateName::X, &["q"], "r")
            .outputs(&["q"])
            .build()
            .unwrap();
        assert!(matches!(
            compile_unitary(&c),
            Err(CircuitError::ClassicalInUnitary { .. })
        ));
        let mut values = BTreeMap::new();
        values.insert("r".to_string(), 1u8);
        let bound = bind_classical_inputs(&c, &values).unwrap();
        let u = compile_unitary(&bound).unwrap();
        let x = GateInstance::new(GateName::X, 1, vec![2]).matrix().unwrap();
        assert!(max_abs_diff_mat(&u.mat, &x.mat) < 1e-12);
    }

    #[test]
    fn hybrid_gate_targets_resolve_dims() {
        let c = CircuitBuilder::new()
            .prep("d", 4, 1)
            .prep("q", 2, 0)
            .gate(GateName::Cnot, &["d", "q"])
            .measure("q", "m")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let branches = enumerate_branches(&c, &no_values()).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].labels["m"], 1);
    }

    #[test]
    fn sampling_is_deterministic_and_converges() {
        let c = CircuitBuilder::new()
            .prep("q", 2, 0)
            .gate(GateName::H, &["q"])
            .measure("q", "m")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let shots = 100_000u64;
        let h1 = sample(&c, shots, 7, &no_values()).unwrap();
        let h2 = sample(&c, shots, 7, &no_values()).unwrap();
        assert_eq!(h1, h2);
        let n0 = *h1.get("0").unwrap() as f64;
        // Four-sigma binomial bound around p = 1/2.
        let sigma = (0.5 * 0.5 / shots as f64).sqrt();
        assert!((n0 / shots as f64 - 0.5).abs() < 4.0 * sigma);
        let h3 = sample(&c, shots, 8, &no_values()).unwrap();
        assert_ne!(h1, h3);
    }

    #[test]
    fn measure_zero_state_is_certain() {
        let c = CircuitBuilder::new()
            .prep("q", 2, 0)
            .measure("q", "m")
            .classical_outputs(&["m"])
            .build()
            .unwrap();
        let hist = sample(&c, 500, 1234, &no_values()).unwrap();
        assert_eq!(hist["0"], 500);
    }

    #[test]
    fn outputs_must_be_alive() {
        let mut b = CircuitBuilder::new();
        b.prep("a", 2, 0).prep("b", 2, 0).fuse("a", "b", "d").outputs(&["a"]);
        assert!(matches!(
            b.build(),
            Err(CircuitError::OutputNotAlive { id }) if id == "a"
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn random_clifford_circuits_conserve_probability(
            gates in proptest::collection::vec(0usize..6, 1..12),
            prep_a in 0u8..2,
            prep_b in 0u8..2,
        ) {
            let mut b = CircuitBuilder::new();
            b.prep("a", 2, prep_a).prep("b", 2, prep_b);
            for g in gates {
                match g {
                    0 => b.gate(GateName::H, &["a"]),
                    1 => b.gate(GateName::S, &["b"]),
                    2 => b.gate(GateName::Cnot, &["a", "b"]),
                    3 => b.gate(GateName::T, &["a"]),
                    4 => b.gate(GateName::Cz, &["a", "b"]),
                    5 => b.gate(GateName::X, &["b"]),
                    _ => unreachable!(),
                };
            }
            b.measure("a", "ma").measure("b", "mb");
            b.classical_outputs(&["ma", "mb"]);
            let c = b.build().unwrap();
            let branches = enumerate_branches(&c, &no_values()).unwrap();
            let total: f64 = branches.iter().map(|x| x.probability).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            let ch = channel_of(&c, &no_values()).unwrap();
            prop_assert!(ch.total.validate().is_ok());
        }
    }
}
