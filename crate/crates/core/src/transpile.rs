//! Clifford+T to Clifford+F recompilation: count the non-Clifford
//! content of a qubit circuit, then replace each T, CS, and CCX with a
//! gadget that prepares the corresponding magic state from fused
//! resource states and injects it by teleportation with Clifford
//! corrections.
//!
//! Even gate powers reduce to Cliffords before counting: T² = S,
//! CS² = CZ, CCX² = I, so only the odd residue of a power spends a
//! magic state.

use crate::circuit::{self, Circuit, CircuitBuilder, Op};
use crate::gates::GateName;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranspileError {
    #[error("wire {id} has dimension {dim}; only qubit wires are supported")]
    NonQubitWire { id: String, dim: u8 },
    #[error("{kind} operations are outside the Clifford+T gate set")]
    NonQubitOp { kind: &'static str },
    #[error("gate {0} is outside the Clifford+T gate set")]
    DisallowedGate(GateName),
    #[error("classically controlled {0} is not supported; only Clifford gates may carry conditions or classical powers")]
    ClassicalNonClifford(GateName),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
}

type Result<T> = std::result::Result<T, TranspileError>;

/// Non-Clifford gate counts and the resource-state cost of replacing
/// them: one fused state per T, two per CS, three per CCX, against the
/// conventional three and four T states for CS and CCX.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ResourceReport {
    pub t_count: usize,
    pub cs_count: usize,
    pub toffoli_count: usize,
    pub f_states_used: usize,
    pub t_states_equivalent: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagicKind {
    T,
    Cs,
    Ccx,
}

impl MagicKind {
    /// Fused resource states consumed by one gadget.
    pub fn f_states(&self) -> usize {
        match self {
            MagicKind::T => 1,
            MagicKind::Cs => 2,
            MagicKind::Ccx => 3,
        }
    }

    /// T states the same gate costs under conventional distillation.
    pub fn t_equivalent(&self) -> usize {
        match self {
            MagicKind::T => 1,
            MagicKind::Cs => 3,
            MagicKind::Ccx => 4,
        }
    }

    /// Data qubits the gate acts on.
    pub fn arity(&self) -> usize {
        match self {
            MagicKind::T => 1,
            MagicKind::Cs => 2,
            MagicKind::Ccx => 3,
        }
    }

    fn order(&self) -> i64 {
        match self {
            MagicKind::T => 8,
            MagicKind::Cs => 4,
            MagicKind::Ccx => 2,
        }
    }
}

fn magic_kind(name: GateName) -> Option<MagicKind> {
    match name {
        GateName::T => Some(MagicKind::T),
        GateName::Cs => Some(MagicKind::Cs),
        GateName::Ccx => Some(MagicKind::Ccx),
        _ => None,
    }
}

fn is_clifford(name: GateName) -> bool {
    matches!(
        name,
        GateName::I
            | GateName::X
            | GateName::Z
            | GateName::H
            | GateName::S
            | GateName::Cnot
            | GateName::Cz
            | GateName::Swap
            | GateName::Omega
            | GateName::Hsh
    )
}

/// The odd residue of `power` spends one magic state; the rest is the
/// Clifford square-root gate raised to `residue / 2`.
fn reduce_power(kind: MagicKind, power: i64) -> (bool, i64) {
    let residue = power.rem_euclid(kind.order());
    (residue % 2 == 1, residue / 2)
}

fn check_input(c: &Circuit) -> Result<()> {
    circuit::validate(c)?;
    for w in &c.wires {
        if w.dim != 2 {
            return Err(TranspileError::NonQubitWire {
                id: w.id.clone(),
                dim: w.dim,
            });
        }
    }
    for op in &c.ops {
        match op {
            Op::Fuse { .. } => return Err(TranspileError::NonQubitOp { kind: "fuse" }),
            Op::Split { .. } => return Err(TranspileError::NonQubitOp { kind: "split" }),
            Op::Gate {
                name,
                classical_power,
                condition,
                ..
            } => {
                if magic_kind(*name).is_some() {
                    if classical_power.is_some() || condition.is_some() {
                        return Err(TranspileError::ClassicalNonClifford(*name));
                    }
                } else if !is_clifford(*name) {
                    return Err(TranspileError::DisallowedGate(*name));
                }
            }
            Op::Prep { .. } | Op::Measure { .. } | Op::Discard { .. } => {}
        }
    }
    Ok(())
}

pub fn count_resources(c: &Circuit) -> Result<ResourceReport> {
    check_input(c)?;
    let mut report = ResourceReport::default();
    for op in &c.ops {
        if let Op::Gate { name, power, .. } = op {
            if let Some(kind) = magic_kind(*name) {
                let (magic, _) = reduce_power(kind, *power);
                if !magic {
                    continue;
                }
                match kind {
                    MagicKind::T => report.t_count += 1,
                    MagicKind::Cs => report.cs_count += 1,
                    MagicKind::Ccx => report.toffoli_count += 1,
                }
            }
        }
    }
    report.f_states_used = report.t_count + 2 * report.cs_count + 3 * report.toffoli_count;
    report.t_states_equivalent = report.t_count + 3 * report.cs_count + 4 * report.toffoli_count;
    Ok(report)
}

/// Sequential non-Clifford layers: each magic gate sits one layer
/// above the deepest earlier magic gate sharing a wire, and Clifford
/// gates are free.
pub fn gadget_depth(c: &Circuit) -> Result<usize> {
    check_input(c)?;
    let mut layer: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut depth = 0usize;
    for op in &c.ops {
        if let Op::Gate {
            name,
            power,
            targets,
            ..
        } = op
        {
            let magic = magic_kind(*name)
                .map(|kind| reduce_power(kind, *power).0)
                .unwrap_or(false);
            if !magic {
                continue;
            }
            let here = 1 + targets
                .iter()
                .map(|t| layer.get(t.as_str()).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            for t in targets {
                layer.insert(t.as_str(), here);
            }
            depth = depth.max(here);
        }
    }
    Ok(depth)
}

/// A magic-state gadget: a closed preparation circuit emitting the
/// state on qubit wires, and an injection circuit consuming it
/// alongside the data wires.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub kind: MagicKind,
    pub preparation: Circuit,
    /// Inputs: data wires, then the preparation's outputs.
    pub injection: Circuit,
    pub data_wires: Vec<String>,
    pub magic_wires: Vec<String>,
}

/// Emits the magic-state preparation onto `b`: fused resource states,
/// an entangling Clifford, and splits. Returns the wires holding the
/// state and the auxiliary wires left in |0⟩.
fn append_preparation(
    b: &mut CircuitBuilder,
    kind: MagicKind,
    pre: &str,
) -> (Vec<String>, Vec<String>) {
    let r = |k: usize| format!("{pre}r{k}");
    let m = |k: usize| format!("{pre}m{k}");
    let a = |k: usize| format!("{pre}a{k}");
    match kind {
        MagicKind::T => {
            b.prep_resource(&r(0));
            b.gate(GateName::S, &[&r(0)]);
            b.split(&r(0), &m(0), &a(0));
            (vec![m(0)], vec![a(0)])
        }
        MagicKind::Cs => {
            b.prep_resource(&r(0));
            b.prep_resource(&r(1));
            b.gate(GateName::Cz, &[&r(0), &r(1)]);
            b.split(&r(0), &m(0), &a(0));
            b.split(&r(1), &m(1), &a(1));
            (vec![m(0), m(1)], vec![a(0), a(1)])
        }
        MagicKind::Ccx => {
            b.prep_resource(&r(0));
            b.prep_resource(&r(1));
            b.gate_pow(GateName::Cnot, -1, &[&r(0), &r(1)]);
            // The state lives on both low halves plus the second high
            // half; the first high half stays |0⟩.
            b.split(&r(0), &m(0), &a(0));
            b.split(&r(1), &m(1), &m(2));
            (vec![m(0), m(1), m(2)], vec![a(0)])
        }
    }
}

/// Emits the teleportation consuming the magic state: transversal
/// CNOTs into it, then measurements interleaved with classically
/// conditioned Clifford corrections on the wires not yet measured.
/// The auxiliary wires are discarded, still in |0⟩.
fn append_injection(
    b: &mut CircuitBuilder,
    kind: MagicKind,
    data: &[&str],
    magic: &[String],
    aux: &[String],
    pre: &str,
) {
    let k = |j: usize| format!("{pre}k{j}");
    for a in aux {
        b.discard(a);
    }
    match kind {
        MagicKind::T => {
            b.gate(GateName::Cnot, &[data[0], &magic[0]]);
            b.measure(&magic[0], &k(0));
            b.discard(&magic[0]);
            b.gate_if(GateName::S, &[data[0]], &k(0), 1);
        }
        MagicKind::Cs => {
            b.gate(GateName::Cnot, &[data[0], &magic[0]]);
            b.gate(GateName::Cnot, &[data[1], &magic[1]]);
            b.measure(&magic[0], &k(0));
            b.discard(&magic[0]);
            b.gate_if(GateName::Cz, &[data[0], &magic[1]], &k(0), 1);
            b.gate_if(GateName::Cz, &[data[0], data[1]], &k(0), 1);
            b.gate_pow_if(GateName::S, 3, &[&magic[1]], &k(0), 1);
            b.gate_pow_if(GateName::S, 3, &[data[1]], &k(0), 1);
            b.gate_if(GateName::Cz, &[&magic[1], data[1]], &k(0), 1);
            b.measure(&magic[1], &k(1));
            b.discard(&magic[1]);
            b.gate_pow_if(GateName::S, 3, &[data[0]], &k(1), 1);
            b.gate_if(GateName::Cz, &[data[0], data[1]], &k(1), 1);
        }
        MagicKind::Ccx => {
            // CCX = H on the target conjugating CCZ; the magic state
            // picks up the same dressing.
            b.gate(GateName::H, &[&magic[2]]);
            b.gate(GateName::H, &[data[2]]);
            b.gate(GateName::Cnot, &[data[0], &magic[0]]);
            b.gate(GateName::Cnot, &[data[1], &magic[1]]);
            b.gate(GateName::Cnot, &[data[2], &magic[2]]);
            b.measure(&magic[0], &k(0));
            b.discard(&magic[0]);
            b.gate_if(GateName::Cz, &[&magic[1], &magic[2]], &k(0), 1);
            b.gate_if(GateName::Cz, &[&magic[1], data[2]], &k(0), 1);
            b.gate_if(GateName::Cz, &[data[1], &magic[2]], &k(0), 1);
            b.gate_if(GateName::Cz, &[data[1], data[2]], &k(0), 1);
            b.measure(&magic[1], &k(1));
            b.discard(&magic[1]);
            b.gate_if(GateName::Cz, &[data[0], &magic[2]], &k(1), 1);
            b.gate_if(GateName::Cz, &[data[0], data[2]], &k(1), 1);
            b.measure(&magic[2], &k(2));
            b.discard(&magic[2]);
            b.gate_if(GateName::Cz, &[data[0], data[1]], &k(2), 1);
            b.gate(GateName::H, &[data[2]]);
        }
    }
}

pub fn gadget(kind: MagicKind) -> Gadget {
    let data: Vec<String> = (0..kind.arity()).map(|j| format!("d{j}")).collect();
    let data_refs: Vec<&str> = data.iter().map(|s| s.as_str()).collect();

    let mut pb = CircuitBuilder::new();
    let (magic, aux) = append_preparation(&mut pb, kind, "");
    let mut state_wires: Vec<&str> = magic.iter().map(|s| s.as_str()).collect();
    state_wires.extend(aux.iter().map(|s| s.as_str()));
    pb.outputs(&state_wires);
    let preparation = pb.build().expect("gadget preparation is well-formed");

    let mut ib = CircuitBuilder::new();
    for d in &data_refs {
        ib.input(d, 2);
    }
    for w in &state_wires {
        ib.input(w, 2);
    }
    append_injection(&mut ib, kind, &data_refs, &magic, &aux, "");
    ib.outputs(&data_refs);
    let injection = ib.build().expect("gadget injection is well-formed");

    Gadget {
        kind,
        preparation,
        injection,
        data_wires: data,
        magic_wires: magic,
    }
}

/// Splices a gadget's preparation and injection into one circuit with
/// the data wires as inputs, mirroring how `recompile` inlines it.
pub fn gadget_circuit(kind: MagicKind) -> Circuit {
    let data: Vec<String> = (0..kind.arity()).map(|j| format!("d{j}")).collect();
    let data_refs: Vec<&str> = data.iter().map(|s| s.as_str()).collect();
    let mut b = CircuitBuilder::new();
    for d in &data_refs {
        b.input(d, 2);
    }
    let (magic, aux) = append_preparation(&mut b, kind, "");
    append_injection(&mut b, kind, &data_refs, &magic, &aux, "");
    b.outputs(&data_refs);
    b.build().expect("gadget circuit is well-formed")
}

/// All identifiers usable as wire or classical-bit names in `c`.
fn taken_names(c: &Circuit) -> BTreeSet<String> {
    let mut names: BTreeSet<String> = c.wires.iter().map(|w| w.id.clone()).collect();
    names.extend(c.classical_inputs.iter().map(|cb| cb.id.clone()));
    for op in &c.ops {
        if let Op::Measure { cbit, .. } = op {
            names.insert(cbit.clone());
        }
    }
    names
}

/// Replaces every T, CS, and Toffoli with its magic-state gadget,
/// leaving a circuit of stabilizer operations over the original wires
/// plus freshly named ancillas. Even powers become their Clifford
/// reductions in place.
pub fn recompile(c: &Circuit) -> Result<Circuit> {
    check_input(c)?;
    let taken = taken_names(c);
    let mut out = c.clone();
    out.ops.clear();
    let mut counter = 0usize;

    for op in &c.ops {
        let Op::Gate {
            name,
            power,
            targets,
            classical_power,
            condition,
        } = op
        else {
            out.ops.push(op.clone());
            continue;
        };
        let Some(kind) = magic_kind(*name) else {
            out.ops.push(op.clone());
            continue;
        };
        debug_assert!(classical_power.is_none() && condition.is_none());
        let (magic, half_power) = reduce_power(kind, *power);
        if magic {
            let pre = loop {
                let candidate = format!("g{counter}_");
                counter += 1;
                if !taken.iter().any(|n| n.starts_with(&candidate)) {
                    break candidate;
                }
            };
            let data_refs: Vec<&str> = targets.iter().map(|t| t.as_str()).collect();
            let mut gb = CircuitBuilder::new();
            for d in &data_refs {
                gb.input(d, 2);
            }
            let (magic_wires, aux) = append_preparation(&mut gb, kind, &pre);
            append_injection(&mut gb, kind, &data_refs, &magic_wires, &aux, &pre);
            gb.outputs(&data_refs);
            let fragment = gb.build().expect("gadget fragment is well-formed");
            for w in fragment.wires {
                if !targets.contains(&w.id) {
                    out.wires.push(w);
                }
            }
            out.ops.extend(fragment.ops);
        }
        if half_power != 0 {
            let square = match kind {
                MagicKind::T => Some(GateName::S),
                MagicKind::Cs => Some(GateName::Cz),
                MagicKind::Ccx => None,
            };
            if let Some(square) = square {
                out.ops.push(Op::Gate {
                    name: square,
                    power: half_power,
                    targets: targets.clone(),
                    classical_power: None,
                    condition: None,
                });
            }
        }
    }
    circuit::validate(&out)?;
    Ok(out)
}
