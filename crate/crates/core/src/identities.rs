//! Machine-checkable registry of operator equations and circuit
//! identities, each stored as two constructible sides plus a
//! comparison mode, with a verifier over the whole registry.
//!
//! Sides are data: weighted sums of gate products, compiled circuits,
//! channels, states, or an independently coded basis-action formula.
//! Case ids are stable strings grouped by a short prefix.

use crate::circuit::{self, Circuit, CircuitBuilder};
use crate::gates::{omega, GateInstance, GateName};
use crate::hilbert::{
    c, equal_up_to_global_phase, max_abs_diff_mat, state_equal_up_to_global_phase, CMatrix,
    ChoiMatrix, DenseState, RegisterShape, C64, TOL_CHANNEL, TOL_UNITARY,
};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    UnitaryExact,
    UnitaryUpToPhase,
    OperatorSumExact,
    Channel,
    StateUpToPhase,
}

impl Mode {
    pub fn tolerance(&self) -> f64 {
        match self {
            Mode::UnitaryExact | Mode::UnitaryUpToPhase | Mode::StateUpToPhase => TOL_UNITARY,
            Mode::OperatorSumExact => 1e-12,
            Mode::Channel => TOL_CHANNEL,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::UnitaryExact => "unitary_exact",
            Mode::UnitaryUpToPhase => "unitary_up_to_phase",
            Mode::OperatorSumExact => "operator_sum_exact",
            Mode::Channel => "channel",
            Mode::StateUpToPhase => "state_up_to_phase",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Independently coded evaluator for the ququart basis actions, kept
/// deliberately separate from the gate catalog construction paths.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Formula {
    /// |x> -> |x+1 mod 4|
    Shift,
    /// |x> -> i^x |x>
    Clock,
    /// |x,y> -> |x, x+y mod 4>
    ModularAdd,
    /// |x> -> (1/2) sum_y i^{xy} |y>
    Fourier,
    /// |x> -> w^{x^2} |x>
    SquarePhase,
}

pub fn formula_matrix(f: Formula) -> CMatrix {
    use std::f64::consts::PI;
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match f {
        Formula::Shift => CMatrix::from_shape_fn((4, 4), |(r, col)| {
            if r == (col + 1) % 4 {
                one
            } else {
                zero
            }
        }),
        Formula::Clock => CMatrix::from_shape_fn((4, 4), |(r, col)| {
            if r == col {
                C64::from_polar(1.0, PI / 2.0 * col as f64)
            } else {
                zero
            }
        }),
        Formula::ModularAdd => CMatrix::from_shape_fn((16, 16), |(r, col)| {
            let (x, y) = (col / 4, col % 4);
            if r == x * 4 + (x + y) % 4 {
                one
            } else {
                zero
            }
        }),
        Formula::Fourier => CMatrix::from_shape_fn((4, 4), |(y, x)| {
            C64::from_polar(0.5, PI / 2.0 * (x * y) as f64)
        }),
        Formula::SquarePhase => CMatrix::from_shape_fn((4, 4), |(r, col)| {
            if r == col {
                C64::from_polar(1.0, PI / 4.0 * (col * col) as f64)
            } else {
                zero
            }
        }),
    }
}

/// Weighted sum of gate products (rightmost factor applied first), or
/// a measurement-free circuit compiled to its isometry.
#[derive(Clone, Debug)]
pub enum OpExpr {
    Sum(Vec<(C64, Vec<GateInstance>)>),
    Compiled(Circuit),
}

#[derive(Clone, Debug)]
pub enum StateExpr {
    /// Closed measurement-free circuit with a single branch.
    Circuit(Circuit),
    Vector(DenseState),
}

#[derive(Clone, Debug)]
pub enum Side {
    Expr(OpExpr),
    Formula(Formula),
    Channel(Circuit),
    State(StateExpr),
}

pub struct IdentityCase {
    pub id: &'static str,
    pub mode: Mode,
    /// What the comparison establishes, in operator language.
    pub note: &'static str,
    pub lhs: Side,
    pub rhs: Side,
    /// Classical input assignments to sweep; empty means one empty
    /// assignment.
    pub assignments: Vec<BTreeMap<String, u8>>,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub id: String,
    pub mode: Mode,
    pub passed: bool,
    pub max_deviation: f64,
    pub phase: Option<C64>,
    pub error: Option<String>,
}

impl VerificationReport {
    fn failure(id: &str, mode: Mode, message: String) -> Self {
        VerificationReport {
            id: id.to_string(),
            mode,
            passed: false,
            max_deviation: f64::INFINITY,
            phase: None,
            error: Some(message),
        }
    }
}

struct Operator {
    in_dims: Vec<u8>,
    out_dims: Vec<u8>,
    mat: CMatrix,
}

fn product_operator(factors: &[GateInstance]) -> Result<Operator, String> {
    if factors.is_empty() {
        return Err("empty gate product".to_string());
    }
    let mut acc: Option<Operator> = None;
    for g in factors.iter().rev() {
        let u = g.matrix().map_err(|e| e.to_string())?;
        acc = Some(match acc {
            None => Operator {
                in_dims: u.in_shape.dims().to_vec(),
                out_dims: u.out_shape.dims().to_vec(),
                mat: u.mat,
            },
            Some(prev) => {
                if u.in_shape.total_dim() != prev.mat.nrows() {
                    return Err(format!(
                        "product factor {} expects dimension {}, got {}",
                        g.name,
                        u.in_shape.total_dim(),
                        prev.mat.nrows()
                    ));
                }
                Operator {
                    in_dims: prev.in_dims,
                    out_dims: u.out_shape.dims().to_vec(),
                    mat: u.mat.dot(&prev.mat),
                }
            }
        });
    }
    Ok(acc.expect("nonempty product"))
}

fn expr_operator(expr: &OpExpr) -> Result<Operator, String> {
    match expr {
        OpExpr::Sum(terms) => {
            if terms.is_empty() {
                return Err("empty operator sum".to_string());
            }
            let mut acc: Option<Operator> = None;
            for (coeff, factors) in terms {
                let mut term = product_operator(factors)?;
                term.mat.mapv_inplace(|v| v * coeff);
                acc = Some(match acc {
                    None => term,
                    Some(mut sum) => {
                        if sum.in_dims != term.in_dims || sum.out_dims != term.out_dims {
                            return Err("operator sum terms have mismatched shapes".to_string());
                        }
                        sum.mat = sum.mat + term.mat;
                        sum
                    }
                });
            }
            Ok(acc.expect("nonempty sum"))
        }
        OpExpr::Compiled(circ) => {
            let u = circuit::compile_unitary(circ).map_err(|e| e.to_string())?;
            Ok(Operator {
                in_dims: u.in_shape.dims().to_vec(),
                out_dims: u.out_shape.dims().to_vec(),
                mat: u.mat,
            })
        }
    }
}

fn side_operator(side: &Side) -> Result<Operator, String> {
    match side {
        Side::Expr(e) => expr_operator(e),
        Side::Formula(f) => {
            let mat = formula_matrix(*f);
            let dims = if mat.nrows() == 16 {
                vec![4, 4]
            } else {
                vec![4]
            };
            Ok(Operator {
                in_dims: dims.clone(),
                out_dims: dims,
                mat,
            })
        }
        _ => Err("side is not an operator expression".to_string()),
    }
}

fn side_state(side: &Side) -> Result<DenseState, String> {
    match side {
        Side::State(StateExpr::Vector(v)) => Ok(v.clone()),
        Side::State(StateExpr::Circuit(circ)) => {
            let branches =
                circuit::enumerate_branches(circ, &BTreeMap::new()).map_err(|e| e.to_string())?;
            if branches.len() != 1 {
                return Err(format!(
                    "state circuit produced {} branches, expected 1",
                    branches.len()
                ));
            }
            Ok(branches[0].normalized_state())
        }
        _ => Err("side is not a state expression".to_string()),
    }
}

struct ChannelValue {
    total: ChoiMatrix,
    by_label: BTreeMap<String, ChoiMatrix>,
}

fn side_channel(side: &Side, values: &BTreeMap<String, u8>) -> Result<ChannelValue, String> {
    match side {
        Side::Channel(circ) => {
            let ch = circuit::channel_of(circ, values).map_err(|e| e.to_string())?;
            Ok(ChannelValue {
                total: ch.total,
                by_label: ch.by_label,
            })
        }
        Side::Expr(e) => {
            let op = expr_operator(e)?;
            let in_shape = RegisterShape::new(op.in_dims).map_err(|e| e.to_string())?;
            let out_shape = RegisterShape::new(op.out_dims).map_err(|e| e.to_string())?;
            let u = crate::hilbert::DenseUnitary::new(in_shape, out_shape, op.mat)
                .map_err(|e| e.to_string())?;
            Ok(ChannelValue {
                total: u.choi(),
                by_label: BTreeMap::new(),
            })
        }
        _ => Err("side is not a channel".to_string()),
    }
}

pub fn verify(case: &IdentityCase) -> VerificationReport {
    let tol = case.mode.tolerance();
    let mut phase = None;
    let deviation = match case.mode {
        Mode::UnitaryExact | Mode::OperatorSumExact => {
            let lhs = match side_operator(&case.lhs) {
                Ok(v) => v,
                Err(e) => return VerificationReport::failure(case.id, case.mode, e),
            };
            let rhs = match side_operator(&case.rhs) {
                Ok(v) => v,
                Err(e) => return VerificationReport::failure(case.id, case.mode, e),
            };
            if lhs.in_dims != rhs.in_dims || lhs.out_dims != rhs.out_dims {
                return VerificationReport::failure(
                    case.id,
                    case.mode,
                    "sides have mismatched register shapes".to_string(),
                );
            }
            max_abs_diff_mat(&lhs.mat, &rhs.mat)
        }
        Mode::UnitaryUpToPhase => {
            let lhs = match side_operator(&case.lhs) {
                Ok(v) => v,
                Err(e) => return VerificationReport::failure(case.id, case.mode, e),
            };
            let rhs = match side_operator(&case.rhs) {
                Ok(v) => v,
                Err(e) => return VerificationReport::failure(case.id, case.mode, e),
            };
            if lhs.in_dims != rhs.in_dims || lhs.out_dims != rhs.out_dims {
                return VerificationReport::failure(
                    case.id,
                    case.mode,
                    "sides have mismatched register shapes".to_string(),
                );
            }
            let m = equal_up_to_global_phase(&lhs.mat, &rhs.mat, tol);
            phase = Some(m.phase);
            m.deviation
        }
        Mode::StateUpToPhase => {
            let lhs = match side_state(&case.lhs) {
                Ok(v) => v,
                Err(e) => return VerificationReport::failure(case.id, case.mode, e),
            };
            let rhs = match side_state(&case.rhs) {
                Ok(v) => v,
                Err(e) => return VerificationReport::failure(case.id, case.mode, e),
            };
            if lhs.shape.dims() != rhs.shape.dims() {
                return VerificationReport::failure(
                    case.id,
                    case.mode,
                    "states have mismatched register shapes".to_string(),
                );
            }
            let m = state_equal_up_to_global_phase(&lhs, &rhs, tol);
            phase = Some(m.phase);
            m.deviation
        }
        Mode::Channel => {
            let empty = BTreeMap::new();
            let sweep: Vec<&BTreeMap<String, u8>> = if case.assignments.is_empty() {
                vec![&empty]
            } else {
                case.assignments.iter().collect()
            };
            let mut worst = 0.0f64;
            for values in sweep {
                let lhs = match side_channel(&case.lhs, values) {
                    Ok(v) => v,
                    Err(e) => return VerificationReport::failure(case.id, case.mode, e),
                };
                let rhs = match side_channel(&case.rhs, values) {
                    Ok(v) => v,
                    Err(e) => return VerificationReport::failure(case.id, case.mode, e),
                };
                worst = worst.max(lhs.total.max_abs_diff(&rhs.total));
                if !lhs.by_label.is_empty() && !rhs.by_label.is_empty() {
                    let lkeys: Vec<&String> = lhs.by_label.keys().collect();
                    let rkeys: Vec<&String> = rhs.by_label.keys().collect();
                    if lkeys != rkeys {
                        return VerificationReport::failure(
                            case.id,
                            case.mode,
                            format!(
                                "classical outcome labels differ: {lkeys:?} vs {rkeys:?}"
                            ),
                        );
                    }
                    for (label, lsub) in &lhs.by_label {
                        worst = worst.max(lsub.max_abs_diff(&rhs.by_label[label]));
                    }
                }
            }
            worst
        }
    };
    VerificationReport {
        id: case.id.to_string(),
        mode: case.mode,
        passed: deviation <= tol,
        max_deviation: deviation,
        phase,
        error: None,
    }
}

/// Verifies every registry case, ordered by case id.
pub fn verify_all() -> Vec<VerificationReport> {
    verify_filtered("")
}

/// Verifies the registry cases whose id starts with `prefix`.
pub fn verify_filtered(prefix: &str) -> Vec<VerificationReport> {
    let mut cases = registry();
    cases.sort_by_key(|case| case.id);
    cases
        .iter()
        .filter(|case| case.id.starts_with(prefix))
        .map(verify)
        .collect()
}

fn qd(name: GateName, power: i64) -> GateInstance {
    GateInstance::new(name, power, vec![4])
}

fn qd2(name: GateName, power: i64) -> GateInstance {
    GateInstance::new(name, power, vec![4, 4])
}

fn single(g: GateInstance) -> Side {
    Side::Expr(OpExpr::Sum(vec![(c(1.0, 0.0), vec![g])]))
}

fn product(gs: Vec<GateInstance>) -> Side {
    Side::Expr(OpExpr::Sum(vec![(c(1.0, 0.0), gs)]))
}

fn sum(terms: Vec<(C64, Vec<GateInstance>)>) -> Side {
    Side::Expr(OpExpr::Sum(terms))
}

fn compiled(circ: Circuit) -> Side {
    Side::Expr(OpExpr::Compiled(circ))
}

fn build(f: impl FnOnce(&mut CircuitBuilder)) -> Circuit {
    let mut b = CircuitBuilder::new();
    f(&mut b);
    b.build().expect("registry circuit is well-formed")
}

/// Qubit-pair circuit conjugated into the ququart by fuse/split:
/// split, apply `inner` to the pair, fuse back.
fn f_qudit_conj(inner: impl FnOnce(&mut CircuitBuilder)) -> Circuit {
    build(|b| {
        b.input("d", 4).split("d", "a", "bb");
        inner(b);
        b.fuse("a", "bb", "d2").outputs(&["d2"]);
    })
}

/// Ququart circuit conjugated onto a qubit pair: fuse, apply `inner`
/// to the ququart, split back.
fn f_pair_conj(inner: impl FnOnce(&mut CircuitBuilder)) -> Circuit {
    build(|b| {
        b.input("a", 2).input("bb", 2).fuse("a", "bb", "d");
        inner(b);
        b.split("d", "a2", "b2").outputs(&["a2", "b2"]);
    })
}

/// The alternate fusion as explicit ops: swap, Hadamards, fuse, then
/// the inverse ququart Fourier gate.
fn g_fuse_ops(b: &mut CircuitBuilder, lo: &str, hi: &str, out: &str) {
    b.gate(GateName::Swap, &[lo, hi])
        .gate(GateName::H, &[lo])
        .gate(GateName::H, &[hi])
        .fuse(lo, hi, out)
        .gate_pow(GateName::H, -1, &[out]);
}

fn g_split_ops(b: &mut CircuitBuilder, d: &str, lo: &str, hi: &str) {
    b.gate(GateName::H, &[d])
        .split(d, lo, hi)
        .gate(GateName::H, &[lo])
        .gate(GateName::H, &[hi])
        .gate(GateName::Swap, &[lo, hi]);
}

fn g_qudit_conj(inner: impl FnOnce(&mut CircuitBuilder)) -> Circuit {
    build(|b| {
        b.input("d", 4);
        g_split_ops(b, "d", "a", "bb");
        inner(b);
        g_fuse_ops(b, "a", "bb", "d2");
        b.outputs(&["d2"]);
    })
}

fn g_pair_conj(inner: impl FnOnce(&mut CircuitBuilder)) -> Circuit {
    build(|b| {
        b.input("a", 2).input("bb", 2);
        g_fuse_ops(b, "a", "bb", "d");
        inner(b);
        g_split_ops(b, "d", "a2", "b2");
        b.outputs(&["a2", "b2"]);
    })
}

/// Pair circuit applying gates on one or both qubits of a fresh
/// two-qubit register.
fn pair_gates(f: impl FnOnce(&mut CircuitBuilder)) -> Circuit {
    build(|b| {
        b.input("a", 2).input("bb", 2);
        f(b);
        b.outputs(&["a", "bb"]);
    })
}

fn f_state_vector() -> DenseState {
    crate::gates::resource_state(crate::gates::ResourceKind::F)
}

fn prep_f(b: &mut CircuitBuilder, d: &str) {
    b.prep_resource(d);
}

fn assignments_for_r() -> Vec<BTreeMap<String, u8>> {
    [0u8, 1]
        .iter()
        .map(|&v| {
            let mut m = BTreeMap::new();
            m.insert("r".to_string(), v);
            m
        })
        .collect()
}

fn case(
    id: &'static str,
    mode: Mode,
    note: &'static str,
    lhs: Side,
    rhs: Side,
) -> IdentityCase {
    IdentityCase {
        id,
        mode,
        note,
        lhs,
        rhs,
        assignments: Vec::new(),
    }
}

pub fn registry() -> Vec<IdentityCase> {
    let mut cases = Vec::new();
    let i = c(0.0, 1.0);
    let w = omega();
    let wc = omega().conj();
    let h = std::f64::consts::FRAC_1_SQRT_2;

    // (a) ququart Pauli algebra.
    cases.push(case(
        "eq2_zx",
        Mode::UnitaryExact,
        "clock and shift commute up to the scalar i",
        product(vec![qd(GateName::Z, 1), qd(GateName::X, 1)]),
        sum(vec![(i, vec![qd(GateName::X, 1), qd(GateName::Z, 1)])]),
    ));
    cases.push(case(
        "eq2_zdag",
        Mode::UnitaryExact,
        "clock adjoint is its cube",
        single(qd(GateName::Z, -1)),
        single(qd(GateName::Z, 3)),
    ));
    cases.push(case(
        "eq2_xdag",
        Mode::UnitaryExact,
        "shift adjoint is its cube",
        single(qd(GateName::X, -1)),
        single(qd(GateName::X, 3)),
    ));

    // (b) ququart Clifford conjugation rules.
    let cnot_after = |first: &'static str| {
        compiled(build(move |b| {
            b.input("ctl", 4).input("tgt", 4);
            b.gate(GateName::X, &[first]);
            b.gate(GateName::Cnot, &["ctl", "tgt"]);
            b.outputs(&["ctl", "tgt"]);
        }))
    };
    cases.push(case(
        "eq3a",
        Mode::UnitaryExact,
        "shift on the control propagates to both wires",
        cnot_after("ctl"),
        compiled(build(|b| {
            b.input("ctl", 4).input("tgt", 4);
            b.gate(GateName::Cnot, &["ctl", "tgt"]);
            b.gate(GateName::X, &["ctl"]).gate(GateName::X, &["tgt"]);
            b.outputs(&["ctl", "tgt"]);
        })),
    ));
    cases.push(case(
        "eq3b",
        Mode::UnitaryExact,
        "shift on the target commutes through",
        cnot_after("tgt"),
        compiled(build(|b| {
            b.input("ctl", 4).input("tgt", 4);
            b.gate(GateName::Cnot, &["ctl", "tgt"]);
            b.gate(GateName::X, &["tgt"]);
            b.outputs(&["ctl", "tgt"]);
        })),
    ));
    let z_then_cnot = |which: &'static str| {
        compiled(build(move |b| {
            b.input("ctl", 4).input("tgt", 4);
            b.gate(GateName::Z, &[which]);
            b.gate(GateName::Cnot, &["ctl", "tgt"]);
            b.outputs(&["ctl", "tgt"]);
        }))
    };
    cases.push(case(
        "eq3c",
        Mode::UnitaryExact,
        "clock on the control commutes through",
        z_then_cnot("ctl"),
        compiled(build(|b| {
            b.input("ctl", 4).input("tgt", 4);
            b.gate(GateName::Cnot, &["ctl", "tgt"]);
            b.gate(GateName::Z, &["ctl"]);
            b.outputs(&["ctl", "tgt"]);
        })),
    ));
    cases.push(case(
        "eq3d",
        Mode::UnitaryExact,
        "clock on the target back-acts on the control",
        z_then_cnot("tgt"),
        compiled(build(|b| {
            b.input("ctl", 4).input("tgt", 4);
            b.gate(GateName::Cnot, &["ctl", "tgt"]);
            b.gate_pow(GateName::Z, -1, &["ctl"]).gate(GateName::Z, &["tgt"]);
            b.outputs(&["ctl", "tgt"]);
        })),
    ));
    cases.push(case(
        "eq3e",
        Mode::UnitaryExact,
        "Fourier exchanges shift for clock",
        product(vec![qd(GateName::H, 1), qd(GateName::X, 1)]),
        product(vec![qd(GateName::Z, 1), qd(GateName::H, 1)]),
    ));
    cases.push(case(
        "eq3f",
        Mode::UnitaryExact,
        "Fourier exchanges clock for inverse shift",
        product(vec![qd(GateName::H, 1), qd(GateName::Z, 1)]),
        product(vec![qd(GateName::X, -1), qd(GateName::H, 1)]),
    ));
    cases.push(case(
        "eq3g",
        Mode::UnitaryExact,
        "phase gate conjugates shift with an explicit omega scalar",
        product(vec![qd(GateName::S, 1), qd(GateName::X, 1)]),
        sum(vec![(
            w,
            vec![qd(GateName::X, 1), qd(GateName::Z, 1), qd(GateName::S, 1)],
        )]),
    ));
    cases.push(case(
        "eq3h",
        Mode::UnitaryExact,
        "phase gate commutes with the clock",
        product(vec![qd(GateName::S, 1), qd(GateName::Z, 1)]),
        product(vec![qd(GateName::Z, 1), qd(GateName::S, 1)]),
    ));

    // (c) catalog matrices against the independent basis formulas.
    cases.push(case(
        "eq5a",
        Mode::UnitaryExact,
        "catalog shift matches the cyclic formula",
        single(qd(GateName::X, 1)),
        Side::Formula(Formula::Shift),
    ));
    cases.push(case(
        "eq5b",
        Mode::UnitaryExact,
        "catalog clock matches the i^x formula",
        single(qd(GateName::Z, 1)),
        Side::Formula(Formula::Clock),
    ));
    cases.push(case(
        "eq5c",
        Mode::UnitaryExact,
        "catalog controlled shift matches the modular-add formula",
        single(qd2(GateName::Cnot, 1)),
        Side::Formula(Formula::ModularAdd),
    ));
    cases.push(case(
        "eq5d",
        Mode::UnitaryExact,
        "catalog Fourier matches the i^{xy}/2 formula",
        single(qd(GateName::H, 1)),
        Side::Formula(Formula::Fourier),
    ));
    cases.push(case(
        "eq5e",
        Mode::UnitaryExact,
        "catalog phase gate matches the omega^{x^2} formula",
        single(qd(GateName::S, 1)),
        Side::Formula(Formula::SquarePhase),
    ));

    // (d) ququart gates as fuse-conjugated qubit circuits.
    cases.push(case(
        "eq6a",
        Mode::UnitaryUpToPhase,
        "shift decomposes into CNOT plus X on the split pair",
        single(qd(GateName::X, 1)),
        compiled(f_qudit_conj(|b| {
            b.gate(GateName::Cnot, &["a", "bb"]).gate(GateName::X, &["a"]);
        })),
    ));
    cases.push(case(
        "eq6b",
        Mode::UnitaryUpToPhase,
        "clock decomposes into S and Z on the split pair",
        single(qd(GateName::Z, 1)),
        compiled(f_qudit_conj(|b| {
            b.gate(GateName::S, &["a"]).gate(GateName::Z, &["bb"]);
        })),
    ));
    cases.push(case(
        "eq6c",
        Mode::UnitaryUpToPhase,
        "controlled shift needs a Toffoli between the split pairs",
        single(qd2(GateName::Cnot, 1)),
        compiled(build(|b| {
            b.input("cq", 4).input("tq", 4);
            b.split("cq", "cl", "ch").split("tq", "tl", "th");
            b.gate(GateName::Ccx, &["cl", "tl", "th"]);
            b.gate(GateName::Cnot, &["cl", "tl"]);
            b.gate(GateName::Cnot, &["ch", "th"]);
            b.fuse("cl", "ch", "c2").fuse("tl", "th", "t2");
            b.outputs(&["c2", "t2"]);
        })),
    ));
    cases.push(case(
        "eq6d",
        Mode::UnitaryUpToPhase,
        "Fourier decomposes into controlled-S, Hadamards, and a swap",
        single(qd(GateName::H, 1)),
        compiled(f_qudit_conj(|b| {
            b.gate(GateName::H, &["bb"])
                .gate(GateName::Cs, &["a", "bb"])
                .gate(GateName::H, &["a"])
                .gate(GateName::Swap, &["a", "bb"]);
        })),
    ));
    cases.push(case(
        "eq6e",
        Mode::UnitaryUpToPhase,
        "phase gate decomposes into T, Z, and controlled-Z",
        single(qd(GateName::S, 1)),
        compiled(f_qudit_conj(|b| {
            b.gate(GateName::T, &["a"])
                .gate(GateName::Z, &["bb"])
                .gate(GateName::Cz, &["a", "bb"]);
        })),
    ));

    // (e) qubit Paulis inside the ququart Pauli and Clifford groups.
    cases.push(case(
        "eq7a",
        Mode::UnitaryExact,
        "X on the high qubit is the squared shift under fusion",
        compiled(pair_gates(|b| {
            b.gate(GateName::X, &["bb"]);
        })),
        compiled(f_pair_conj(|b| {
            b.gate_pow(GateName::X, 2, &["d"]);
        })),
    ));
    cases.push(case(
        "eq7b",
        Mode::UnitaryExact,
        "Z on the low qubit is the squared clock under fusion",
        compiled(pair_gates(|b| {
            b.gate(GateName::Z, &["a"]);
        })),
        compiled(f_pair_conj(|b| {
            b.gate_pow(GateName::Z, 2, &["d"]);
        })),
    ));
    cases.push(case(
        "eq8a",
        Mode::UnitaryExact,
        "X on the low qubit is the Clifford XH2 under fusion",
        compiled(pair_gates(|b| {
            b.gate(GateName::X, &["a"]);
        })),
        compiled(f_pair_conj(|b| {
            b.gate(GateName::Xh2, &["d"]);
        })),
    ));
    cases.push(case(
        "eq8b",
        Mode::UnitaryExact,
        "Z on the high qubit is the Clifford ZDS2 under fusion",
        compiled(pair_gates(|b| {
            b.gate(GateName::Z, &["bb"]);
        })),
        compiled(f_pair_conj(|b| {
            b.gate(GateName::Zds2, &["d"]);
        })),
    ));

    // (f) stabilizer operators as Pauli sums.
    cases.push(case(
        "eq9a",
        Mode::OperatorSumExact,
        "XH2 is an equal-weight sum of four Paulis",
        single(qd(GateName::Xh2, 1)),
        sum(vec![
            (c(0.5, 0.0), vec![qd(GateName::X, 1)]),
            (c(0.5, 0.0), vec![qd(GateName::X, 1), qd(GateName::Z, 2)]),
            (c(0.5, 0.0), vec![qd(GateName::X, -1)]),
            (c(0.5, 0.0), vec![qd(GateName::Z, 2), qd(GateName::X, -1)]),
        ]),
    ));
    cases.push(case(
        "eq9b",
        Mode::OperatorSumExact,
        "ZDS2 is an omega-weighted sum of clock powers",
        single(qd(GateName::Zds2, 1)),
        sum(vec![
            (wc * c(h, 0.0), vec![qd(GateName::Z, 1)]),
            (w * c(h, 0.0), vec![qd(GateName::Z, -1)]),
        ]),
    ));

    // (g) hybrid CNOT definitions and their Fourier conjugation.
    cases.push(case(
        "eq10a",
        Mode::UnitaryExact,
        "ququart-controlled CNOT equals its split-couple-fuse composite",
        single(GateInstance::new(GateName::Cnot, 1, vec![4, 2])),
        compiled(build(|b| {
            b.input("d", 4).input("q", 2);
            b.split("d", "lo", "hi");
            b.gate(GateName::Cnot, &["lo", "q"]);
            b.fuse("lo", "hi", "d2");
            b.outputs(&["d2", "q"]);
        })),
    ));
    cases.push(case(
        "eq10b",
        Mode::UnitaryExact,
        "qubit-controlled CNOT equals its split-couple-fuse composite",
        single(GateInstance::new(GateName::Cnot, 1, vec![2, 4])),
        compiled(build(|b| {
            b.input("q", 2).input("d", 4);
            b.split("d", "lo", "hi");
            b.gate(GateName::Cnot, &["q", "hi"]);
            b.fuse("lo", "hi", "d2");
            b.outputs(&["q", "d2"]);
        })),
    ));
    cases.push(case(
        "eq10_hconj",
        Mode::UnitaryExact,
        "the two hybrid CNOTs are Fourier conjugates of each other",
        compiled(build(|b| {
            b.input("d", 4).input("q", 2);
            b.gate(GateName::Cnot, &["q", "d"]);
            b.outputs(&["d", "q"]);
        })),
        compiled(build(|b| {
            b.input("d", 4).input("q", 2);
            b.gate_pow(GateName::H, -1, &["d"]).gate(GateName::H, &["q"]);
            b.gate(GateName::Cnot, &["d", "q"]);
            b.gate(GateName::H, &["d"]).gate(GateName::H, &["q"]);
            b.outputs(&["d", "q"]);
        })),
    ));

    // (h) hybrid CNOT conjugation of single-wire Paulis.
    let hybrid_conj = |ctl_dim: u8, pre: fn(&mut CircuitBuilder), post: fn(&mut CircuitBuilder)| {
        let (lhs, rhs) = if ctl_dim == 4 {
            (["d", "q"], ["d", "q"])
        } else {
            (["q", "d"], ["q", "d"])
        };
        (
            compiled(build(move |b| {
                if ctl_dim == 4 {
                    b.input("d", 4).input("q", 2);
                } else {
                    b.input("q", 2).input("d", 4);
                }
                b.gate_pow(GateName::Cnot, -1, &lhs);
                pre(b);
                b.gate(GateName::Cnot, &lhs);
                b.outputs(&lhs);
            })),
            compiled(build(move |b| {
                if ctl_dim == 4 {
                    b.input("d", 4).input("q", 2);
                } else {
                    b.input("q", 2).input("d", 4);
                }
                post(b);
                b.outputs(&rhs);
            })),
        )
    };
    let (lhs, rhs) = hybrid_conj(
        4,
        |b| {
            b.gate(GateName::X, &["d"]);
        },
        |b| {
            b.gate(GateName::X, &["d"]).gate(GateName::X, &["q"]);
        },
    );
    cases.push(case(
        "eq11a",
        Mode::UnitaryExact,
        "ququart shift through the hybrid CNOT grows a qubit X",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        4,
        |b| {
            b.gate(GateName::X, &["q"]);
        },
        |b| {
            b.gate(GateName::X, &["q"]);
        },
    );
    cases.push(case(
        "eq11b",
        Mode::UnitaryExact,
        "target X commutes with the ququart-controlled CNOT",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        4,
        |b| {
            b.gate(GateName::Z, &["d"]);
        },
        |b| {
            b.gate(GateName::Z, &["d"]);
        },
    );
    cases.push(case(
        "eq11c",
        Mode::UnitaryExact,
        "control clock commutes with the ququart-controlled CNOT",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        4,
        |b| {
            b.gate(GateName::Z, &["q"]);
        },
        |b| {
            b.gate_pow(GateName::Z, 2, &["d"]).gate(GateName::Z, &["q"]);
        },
    );
    cases.push(case(
        "eq11d",
        Mode::UnitaryExact,
        "target Z through the hybrid CNOT grows a squared clock",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        2,
        |b| {
            b.gate(GateName::X, &["q"]);
        },
        |b| {
            b.gate(GateName::X, &["q"]).gate_pow(GateName::X, 2, &["d"]);
        },
    );
    cases.push(case(
        "eq11e",
        Mode::UnitaryExact,
        "control X through the qubit-controlled CNOT grows a squared shift",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        2,
        |b| {
            b.gate(GateName::X, &["d"]);
        },
        |b| {
            b.gate(GateName::X, &["d"]);
        },
    );
    cases.push(case(
        "eq11f",
        Mode::UnitaryExact,
        "target shift commutes with the qubit-controlled CNOT",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        2,
        |b| {
            b.gate(GateName::Z, &["q"]);
        },
        |b| {
            b.gate(GateName::Z, &["q"]);
        },
    );
    cases.push(case(
        "eq11g",
        Mode::UnitaryExact,
        "control Z commutes with the qubit-controlled CNOT",
        lhs,
        rhs,
    ));
    let (lhs, rhs) = hybrid_conj(
        2,
        |b| {
            b.gate(GateName::Z, &["d"]);
        },
        |b| {
            b.gate(GateName::Z, &["q"]).gate(GateName::Z, &["d"]);
        },
    );
    cases.push(case(
        "eq11h",
        Mode::UnitaryExact,
        "target clock through the qubit-controlled CNOT grows a qubit Z",
        lhs,
        rhs,
    ));

    // (i) the fused resource state and its stabilizers.
    cases.push(case(
        "eq13_f_state",
        Mode::StateUpToPhase,
        "fusing H|0> with |0> prepares the resource state",
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d");
            b.outputs(&["d"]);
        }))),
        Side::State(StateExpr::Vector(f_state_vector())),
    ));
    cases.push(case(
        "f_stab_x",
        Mode::StateUpToPhase,
        "XH2 stabilizes the resource state",
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d");
            b.gate(GateName::Xh2, &["d"]).outputs(&["d"]);
        }))),
        Side::State(StateExpr::Vector(f_state_vector())),
    ));
    cases.push(case(
        "f_stab_z",
        Mode::StateUpToPhase,
        "ZDS2 stabilizes the resource state",
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d");
            b.gate(GateName::Zds2, &["d"]).outputs(&["d"]);
        }))),
        Side::State(StateExpr::Vector(f_state_vector())),
    ));

    // (j) partial fusion/fission definitions against their
    // teleportation implementations, per classical input value and
    // per measurement outcome.
    let c14a = build(|b| {
        b.classical_input("r", 2).input("w", 2);
        b.prep("anc", 2, 0).gate(GateName::H, &["anc"]);
        b.gate_cpow(GateName::Z, &["anc"], "r");
        b.fuse("w", "anc", "d").outputs(&["d"]);
    });
    let c15a = build(|b| {
        b.classical_input("r", 2).input("w", 2);
        b.prep("dp", 4, 0).gate(GateName::H, &["dp"]);
        b.gate(GateName::Cnot, &["dp", "w"]);
        b.measure("w", "m");
        b.gate_cpow(GateName::Xh2, &["dp"], "m");
        b.gate_cpow(GateName::Zds2, &["dp"], "r");
        b.outputs(&["dp"]);
    });
    cases.push(IdentityCase {
        id: "eq15a",
        mode: Mode::Channel,
        note: "partial fusion teleports the qubit into the low bit",
        lhs: Side::Channel(c15a),
        rhs: Side::Channel(c14a),
        assignments: assignments_for_r(),
    });
    let c14b = build(|b| {
        b.classical_input("r", 2).input("w", 2);
        b.prep("anc", 2, 0);
        b.gate_cpow(GateName::X, &["anc"], "r");
        b.fuse("anc", "w", "d").outputs(&["d"]);
    });
    let c15b = build(|b| {
        b.classical_input("r", 2).input("w", 2);
        b.prep("dp", 4, 0);
        b.gate(GateName::Cnot, &["w", "dp"]);
        b.gate_cpow(GateName::Xh2, &["dp"], "r");
        b.gate(GateName::H, &["w"]);
        b.measure("w", "m");
        b.gate_cpow(GateName::Zds2, &["dp"], "m");
        b.outputs(&["dp"]);
    });
    cases.push(IdentityCase {
        id: "eq15b",
        mode: Mode::Channel,
        note: "partial fusion teleports the qubit into the high bit",
        lhs: Side::Channel(c15b),
        rhs: Side::Channel(c14b),
        assignments: assignments_for_r(),
    });
    let c14c = build(|b| {
        b.input("d", 4);
        b.split("d", "lo", "hi");
        b.gate(GateName::H, &["hi"]);
        b.measure("hi", "c");
        b.outputs(&["lo"]).classical_outputs(&["c"]);
    });
    let c15c = build(|b| {
        b.input("d", 4);
        b.prep("q1", 2, 0).prep("q3", 2, 0);
        b.gate(GateName::H, &["q3"]);
        b.gate(GateName::Cnot, &["q3", "d"]);
        b.gate(GateName::Cnot, &["d", "q1"]);
        b.gate(GateName::H, &["q3"]);
        b.measure("q3", "m3");
        b.gate_cpow(GateName::Zds2, &["d"], "m3");
        b.gate(GateName::H, &["d"]);
        b.measure("d", "m2");
        b.gate_cpow(GateName::S, &["q1"], "m2");
        b.outputs(&["q1"]).classical_outputs(&["m3"]);
    });
    cases.push(IdentityCase {
        id: "eq15c",
        mode: Mode::Channel,
        note: "partial fission teleports out the low bit branchwise",
        lhs: Side::Channel(c15c),
        rhs: Side::Channel(c14c),
        assignments: Vec::new(),
    });
    let c14d = build(|b| {
        b.input("d", 4);
        b.split("d", "lo", "hi");
        b.measure("lo", "c");
        b.outputs(&["hi"]).classical_outputs(&["c"]);
    });
    let c15d = build(|b| {
        b.input("d", 4);
        b.prep("q1", 2, 0).prep("q3", 2, 0);
        b.gate(GateName::H, &["q3"]);
        b.gate(GateName::Cnot, &["q3", "d"]);
        b.gate(GateName::Cnot, &["d", "q1"]);
        b.measure("q1", "m1");
        b.gate_cpow(GateName::Xh2, &["d"], "m1");
        b.measure("d", "m2");
        b.gate_cpow(GateName::Hsh, &["q3"], "m2");
        b.outputs(&["q3"]).classical_outputs(&["m1"]);
    });
    cases.push(IdentityCase {
        id: "eq15d",
        mode: Mode::Channel,
        note: "partial fission teleports out the high bit branchwise",
        lhs: Side::Channel(c15d),
        rhs: Side::Channel(c14d),
        assignments: Vec::new(),
    });

    // (k) complete conversion circuits against the ideal isometries.
    cases.push(case(
        "eq16a_fusion_channel",
        Mode::Channel,
        "ancilla-mediated fusion equals the ideal fuse isometry",
        Side::Channel(build(|b| {
            b.input("x", 2).input("y", 2);
            prep_f(b, "anc");
            b.gate(GateName::Cnot, &["y", "anc"]);
            b.gate(GateName::Cnot, &["anc", "x"]);
            b.measure("x", "m1");
            b.gate_cpow(GateName::Xh2, &["anc"], "m1");
            b.gate(GateName::H, &["y"]);
            b.measure("y", "m2");
            b.gate_cpow(GateName::Zds2, &["anc"], "m2");
            b.outputs(&["anc"]);
        })),
        compiled(build(|b| {
            b.input("x", 2).input("y", 2);
            b.fuse("x", "y", "d").outputs(&["d"]);
        })),
    ));
    cases.push(case(
        "eq16b_fission_channel",
        Mode::Channel,
        "ancilla-mediated fission equals the ideal split isometry",
        Side::Channel(build(|b| {
            b.input("din", 4);
            prep_f(b, "anc");
            b.gate_pow(GateName::Cnot, -1, &["din", "anc"]);
            b.split("din", "lo1", "hi1");
            b.gate(GateName::H, &["hi1"]);
            b.measure("hi1", "c1");
            b.split("anc", "lo2", "hi2");
            b.measure("lo2", "c2");
            b.gate_if(GateName::Cnot, &["lo1", "hi2"], "c2", 1);
            b.gate_if(GateName::Z, &["hi2"], "c1", 1);
            b.outputs(&["lo1", "hi2"]);
        })),
        compiled(build(|b| {
            b.input("din", 4);
            b.split("din", "lo", "hi").outputs(&["lo", "hi"]);
        })),
    ));

    // (l) resource states compiled out of one, two, and three copies.
    let t_plus = {
        let g_t = GateInstance::new(GateName::T, 1, vec![2]).matrix().unwrap();
        let plus = CMatrix::from_shape_vec((2, 1), vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        let v = g_t.mat.dot(&plus);
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0] = v[(0, 0)];
        amps[2] = v[(1, 0)];
        DenseState::from_amplitudes(RegisterShape::new(vec![2, 2]).unwrap(), amps).unwrap()
    };
    cases.push(case(
        "eq17a",
        Mode::StateUpToPhase,
        "one resource state plus the phase gate yields the T state",
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d");
            b.gate(GateName::S, &["d"]);
            b.split("d", "lo", "hi");
            b.outputs(&["lo", "hi"]);
        }))),
        Side::State(StateExpr::Vector(t_plus)),
    ));
    let cs_plus = {
        let cs = GateInstance::new(GateName::Cs, 1, vec![2, 2]).matrix().unwrap();
        let mut plus2 = CMatrix::from_elem((4, 1), c(0.5, 0.0));
        plus2 = cs.mat.dot(&plus2);
        let shape = RegisterShape::new(vec![2, 2, 2, 2]).unwrap();
        let mut amps = vec![c(0.0, 0.0); 16];
        for x in 0..2u8 {
            for y in 0..2u8 {
                amps[shape.index_of(&[x, y, 0, 0])] = plus2[((x * 2 + y) as usize, 0)];
            }
        }
        DenseState::from_amplitudes(shape, amps).unwrap()
    };
    cases.push(case(
        "eq17b",
        Mode::StateUpToPhase,
        "two resource states plus controlled-Z yield the CS state",
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d1");
            prep_f(b, "d2");
            b.gate(GateName::Cz, &["d1", "d2"]);
            b.split("d1", "lo1", "hi1");
            b.split("d2", "lo2", "hi2");
            b.outputs(&["lo1", "lo2", "hi1", "hi2"]);
        }))),
        Side::State(StateExpr::Vector(cs_plus)),
    ));
    let ccx_plus = {
        let shape = RegisterShape::new(vec![2, 2, 2, 2]).unwrap();
        let mut amps = vec![c(0.0, 0.0); 16];
        // CCX|+,+,0> = (|000> + |010> + |100> + |111>)/2, fourth site 0.
        for (x, y, z) in [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
            amps[shape.index_of(&[x, y, z, 0])] = c(0.5, 0.0);
        }
        DenseState::from_amplitudes(shape, amps).unwrap()
    };
    cases.push(case(
        "eq17c",
        Mode::StateUpToPhase,
        "two resource states plus the inverse CNOT yield the CCX state",
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d1");
            prep_f(b, "d2");
            b.gate_pow(GateName::Cnot, -1, &["d1", "d2"]);
            b.split("d1", "lo1", "hi1");
            b.split("d2", "lo2", "hi2");
            b.outputs(&["lo1", "lo2", "hi2", "hi1"]);
        }))),
        Side::State(StateExpr::Vector(ccx_plus)),
    ));

    // (m) the alternate fusion: definition, conjugations, stabilizer
    // complements, and commutation with the Fourier-twisted fuse.
    cases.push(case(
        "eqa1",
        Mode::UnitaryExact,
        "catalog G equals swap, Hadamards, fuse, inverse Fourier",
        single(GateInstance::new(GateName::G, 1, vec![])),
        compiled(build(|b| {
            b.input("a", 2).input("bb", 2);
            g_fuse_ops(b, "a", "bb", "d");
            b.outputs(&["d"]);
        })),
    ));
    cases.push(case(
        "eqa2a",
        Mode::UnitaryUpToPhase,
        "shift under G-conjugation becomes X paired with HSH",
        single(qd(GateName::X, 1)),
        compiled(g_qudit_conj(|b| {
            b.gate(GateName::X, &["a"]).gate(GateName::Hsh, &["bb"]);
        })),
    ));
    cases.push(case(
        "eqa2b",
        Mode::UnitaryUpToPhase,
        "clock under G-conjugation entangles via CNOT",
        single(qd(GateName::Z, 1)),
        compiled(g_qudit_conj(|b| {
            b.gate(GateName::Z, &["bb"]).gate(GateName::Cnot, &["a", "bb"]);
        })),
    ));
    cases.push(case(
        "eqa2c",
        Mode::UnitaryUpToPhase,
        "controlled shift under G-conjugation uses a dressed Toffoli",
        single(qd2(GateName::Cnot, 1)),
        compiled(build(|b| {
            b.input("cq", 4).input("tq", 4);
            g_split_ops(b, "cq", "cl", "ch");
            g_split_ops(b, "tq", "tl", "th");
            b.gate(GateName::Cnot, &["cl", "tl"]);
            b.gate(GateName::Cnot, &["ch", "th"]);
            b.gate(GateName::H, &["ch"]);
            b.gate(GateName::Ccx, &["cl", "ch", "th"]);
            b.gate(GateName::H, &["ch"]);
            g_fuse_ops(b, "cl", "ch", "c2");
            g_fuse_ops(b, "tl", "th", "t2");
            b.outputs(&["c2", "t2"]);
        })),
    ));
    cases.push(case(
        "eqa2d",
        Mode::UnitaryUpToPhase,
        "Fourier keeps its pair decomposition under G-conjugation",
        single(qd(GateName::H, 1)),
        compiled(g_qudit_conj(|b| {
            b.gate(GateName::H, &["bb"])
                .gate(GateName::Cs, &["a", "bb"])
                .gate(GateName::H, &["a"])
                .gate(GateName::Swap, &["a", "bb"]);
        })),
    ));
    cases.push(case(
        "eqa2e",
        Mode::UnitaryUpToPhase,
        "phase gate keeps its pair decomposition under G-conjugation",
        single(qd(GateName::S, 1)),
        compiled(g_qudit_conj(|b| {
            b.gate(GateName::T, &["a"])
                .gate(GateName::Z, &["bb"])
                .gate(GateName::Cz, &["a", "bb"]);
        })),
    ));
    cases.push(case(
        "eqa3a",
        Mode::UnitaryExact,
        "X on the high qubit is the squared shift under G-fusion",
        compiled(pair_gates(|b| {
            b.gate(GateName::X, &["bb"]);
        })),
        compiled(g_pair_conj(|b| {
            b.gate_pow(GateName::X, 2, &["d"]);
        })),
    ));
    cases.push(case(
        "eqa3b",
        Mode::UnitaryExact,
        "Z on the low qubit is the squared clock under G-fusion",
        compiled(pair_gates(|b| {
            b.gate(GateName::Z, &["a"]);
        })),
        compiled(g_pair_conj(|b| {
            b.gate_pow(GateName::Z, 2, &["d"]);
        })),
    ));
    cases.push(case(
        "eqa4a",
        Mode::UnitaryExact,
        "X on the low qubit conjugates to a Fourier-dressed ZDS2",
        compiled(pair_gates(|b| {
            b.gate(GateName::X, &["a"]);
        })),
        compiled(g_pair_conj(|b| {
            b.gate(GateName::H, &["d"])
                .gate_pow(GateName::S, 2, &["d"])
                .gate_pow(GateName::Z, -1, &["d"])
                .gate_pow(GateName::H, -1, &["d"]);
        })),
    ));
    cases.push(case(
        "eqa4b",
        Mode::UnitaryExact,
        "Z on the high qubit conjugates to the negation Clifford",
        compiled(pair_gates(|b| {
            b.gate(GateName::Z, &["bb"]);
        })),
        compiled(g_pair_conj(|b| {
            b.gate_pow(GateName::H, 2, &["d"]).gate_pow(GateName::Z, -1, &["d"]);
        })),
    ));
    cases.push(case(
        "eqa5a",
        Mode::OperatorSumExact,
        "the Fourier-dressed ZDS2 is an omega-weighted sum of shifts",
        product(vec![
            qd(GateName::H, -1),
            qd(GateName::Z, -1),
            qd(GateName::S, 2),
            qd(GateName::H, 1),
        ]),
        sum(vec![
            (wc * c(h, 0.0), vec![qd(GateName::X, 1)]),
            (w * c(h, 0.0), vec![qd(GateName::X, -1)]),
        ]),
    ));
    cases.push(case(
        "eqa5b",
        Mode::OperatorSumExact,
        "the negation Clifford is an equal-weight sum of four Paulis",
        product(vec![qd(GateName::Z, -1), qd(GateName::H, 2)]),
        sum(vec![
            (c(0.5, 0.0), vec![qd(GateName::Z, 1)]),
            (c(0.5, 0.0), vec![qd(GateName::X, 2), qd(GateName::Z, 1)]),
            (c(0.5, 0.0), vec![qd(GateName::Z, -1)]),
            (c(0.5, 0.0), vec![qd(GateName::Z, -1), qd(GateName::X, 2)]),
        ]),
    ));
    cases.push(case(
        "comm_h_fgdg",
        Mode::UnitaryExact,
        "the Fourier gate commutes with F after undoing G",
        product(vec![
            qd(GateName::H, 1),
            GateInstance::new(GateName::F, 1, vec![]),
            GateInstance::new(GateName::Gdg, 1, vec![]),
        ]),
        product(vec![
            GateInstance::new(GateName::F, 1, vec![]),
            GateInstance::new(GateName::Gdg, 1, vec![]),
            qd(GateName::H, 1),
        ]),
    ));
    cases.push(case(
        "comm_s_fgdg",
        Mode::UnitaryExact,
        "the phase gate commutes with F after undoing G",
        product(vec![
            qd(GateName::S, 1),
            GateInstance::new(GateName::F, 1, vec![]),
            GateInstance::new(GateName::Gdg, 1, vec![]),
        ]),
        product(vec![
            GateInstance::new(GateName::F, 1, vec![]),
            GateInstance::new(GateName::Gdg, 1, vec![]),
            qd(GateName::S, 1),
        ]),
    ));
    cases.push(case(
        "g_state",
        Mode::StateUpToPhase,
        "the G resource state is the inverse Fourier of the F state",
        Side::State(StateExpr::Vector(crate::gates::resource_state(
            crate::gates::ResourceKind::G,
        ))),
        Side::State(StateExpr::Circuit(build(|b| {
            prep_f(b, "d");
            b.gate_pow(GateName::H, -1, &["d"]);
            b.outputs(&["d"]);
        }))),
    ));

    cases
}
