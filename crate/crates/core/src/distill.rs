//! Distillation analysis for the fused resource state: stabilizer
//! twirling, the four-class error model, exact detection-block maps by
//! pattern enumeration, dense certification of the parity rules,
//! greedy block nesting with threshold search, cost accounting, and a
//! Monte Carlo cross-check.
//!
//! Both detection blocks postselect on zero syndromes. The X block
//! consumes one extra state per output, the Z block six; their parity
//! rules are certified against full circuit simulation in
//! `validate_blocks_against_dense`.

use crate::circuit::{self, Circuit, CircuitBuilder};
use crate::gates::{GateInstance, GateName};
use crate::hilbert::{
    dagger, hermitian_eigenvalues, state_equal_up_to_global_phase, CMatrix, DenseState,
    TOL_UNITARY,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Total-error level treated as converged by the nesting loop.
pub const STOP_EPS: f64 = 1e-12;
/// Rounds without a total-error decrease before declaring divergence.
const DIVERGENCE_WINDOW: usize = 5;
/// Round budget for the threshold predicate.
const THRESHOLD_MAX_ROUNDS: usize = 400;

#[derive(Debug, Error, PartialEq)]
pub enum DistillError {
    #[error("class probabilities must sum to 1 within 1e-12, got {sum}")]
    InvalidDistribution { sum: f64 },
    #[error("negative class probability {0}")]
    NegativeProbability(f64),
    #[error("density matrix is not {0}")]
    InvalidDensityMatrix(&'static str),
    #[error("noise parameter {0} outside [0, 1)")]
    BadNoiseParameter(f64),
    #[error(
        "bisection bracket invalid: convergence at lo {lo} is {lo_converges}, at hi {hi} is {hi_converges}"
    )]
    BracketingFailure {
        lo: f64,
        lo_converges: bool,
        hi: f64,
        hi_converges: bool,
    },
    #[error("schedule has no rounds")]
    EmptySchedule,
    #[error("trials must be at least 1")]
    NoTrials,
}

type Result<T> = std::result::Result<T, DistillError>;

/// Error classes on a twirled resource state, as Pauli-square labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    I,
    X2,
    Z2,
    X2Z2,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 4] = [ErrorClass::I, ErrorClass::X2, ErrorClass::Z2, ErrorClass::X2Z2];

    /// (x_bit, z_bit) of the Pauli-square label.
    pub fn bits(&self) -> (u8, u8) {
        match self {
            ErrorClass::I => (0, 0),
            ErrorClass::X2 => (1, 0),
            ErrorClass::Z2 => (0, 1),
            ErrorClass::X2Z2 => (1, 1),
        }
    }

    pub fn from_bits(x: u8, z: u8) -> Self {
        match (x % 2, z % 2) {
            (0, 0) => ErrorClass::I,
            (1, 0) => ErrorClass::X2,
            (0, 1) => ErrorClass::Z2,
            _ => ErrorClass::X2Z2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ErrorClass::I => "I",
            ErrorClass::X2 => "X2",
            ErrorClass::Z2 => "Z2",
            ErrorClass::X2Z2 => "X2Z2",
        }
    }

    fn index(&self) -> usize {
        match self {
            ErrorClass::I => 0,
            ErrorClass::X2 => 1,
            ErrorClass::Z2 => 2,
            ErrorClass::X2Z2 => 3,
        }
    }
}

/// Probabilities of the four error classes on a twirled state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorDistribution {
    pub p_i: f64,
    pub p_x: f64,
    pub p_z: f64,
    pub p_xz: f64,
}

impl ErrorDistribution {
    pub fn new(p_i: f64, p_x: f64, p_z: f64, p_xz: f64) -> Result<Self> {
        for p in [p_i, p_x, p_z, p_xz] {
            if p < 0.0 {
                return Err(DistillError::NegativeProbability(p));
            }
        }
        let sum = p_i + p_x + p_z + p_xz;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DistillError::InvalidDistribution { sum });
        }
        Ok(ErrorDistribution { p_i, p_x, p_z, p_xz })
    }

    pub fn ideal() -> Self {
        ErrorDistribution {
            p_i: 1.0,
            p_x: 0.0,
            p_z: 0.0,
            p_xz: 0.0,
        }
    }

    pub fn probability_of(&self, class: ErrorClass) -> f64 {
        match class {
            ErrorClass::I => self.p_i,
            ErrorClass::X2 => self.p_x,
            ErrorClass::Z2 => self.p_z,
            ErrorClass::X2Z2 => self.p_xz,
        }
    }

    pub fn total_error(&self) -> f64 {
        self.p_x + self.p_z + self.p_xz
    }

    /// Probability that the state carries an X-square factor.
    pub fn marginal_x(&self) -> f64 {
        self.p_x + self.p_xz
    }

    /// Probability that the state carries a Z-square factor.
    pub fn marginal_z(&self) -> f64 {
        self.p_z + self.p_xz
    }
}

/// One concrete assignment of error classes: the block input plus the
/// consumed states in circuit order.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorPattern {
    pub input: ErrorClass,
    pub consumed: Vec<ErrorClass>,
}

/// Measured values and output Pauli bits of the X block for a pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XBlockOutcome {
    pub syndrome: u8,
    pub out_x: u8,
    pub out_z: u8,
}

/// Measured values and output Pauli bits of the Z block for a pattern.
/// The two ququart meters read 0 or 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZBlockOutcome {
    pub m1: u8,
    pub m2: u8,
    pub m3: u8,
    pub out_x: u8,
    pub out_z: u8,
}

impl ErrorPattern {
    /// X block parity rules: one consumed state; syndrome x0+x1, output
    /// bits (x0, z0+z1).
    pub fn xblock_outcome(&self) -> XBlockOutcome {
        assert_eq!(self.consumed.len(), 1);
        let (x0, z0) = self.input.bits();
        let (x1, z1) = self.consumed[0].bits();
        XBlockOutcome {
            syndrome: (x0 + x1) % 2,
            out_x: x0,
            out_z: (z0 + z1) % 2,
        }
    }

    /// Z block parity rules: six consumed states. Consumed state k
    /// injects Z^{z_k} on the low qubit and X^{x_k} on the high qubit
    /// of its pair; states 1-3 sit before the fan-out, 4-6 after.
    pub fn zblock_outcome(&self) -> ZBlockOutcome {
        assert_eq!(self.consumed.len(), 6);
        let (x0, z0) = self.input.bits();
        let xb: Vec<u8> = self.consumed.iter().map(|cl| cl.bits().0).collect();
        let zb: Vec<u8> = self.consumed.iter().map(|cl| cl.bits().1).collect();
        let s1 = (z0 + zb[0] + zb[1] + zb[2]) % 2;
        let s2 = (zb[0] + zb[2] + zb[3] + zb[5]) % 2;
        let s3 = (zb[1] + zb[2] + zb[4] + zb[5]) % 2;
        ZBlockOutcome {
            m1: s1,
            m2: 2 * s2,
            m3: 2 * s3,
            out_x: (x0 + xb.iter().sum::<u8>()) % 2,
            out_z: (z0 + zb[2] + zb[5]) % 2,
        }
    }

    pub fn accepted(&self) -> bool {
        match self.consumed.len() {
            1 => self.xblock_outcome().syndrome == 0,
            6 => {
                let o = self.zblock_outcome();
                o.m1 == 0 && o.m2 == 0 && o.m3 == 0
            }
            n => panic!("pattern with {n} consumed states has no block"),
        }
    }

    pub fn output_class(&self) -> ErrorClass {
        match self.consumed.len() {
            1 => {
                let o = self.xblock_outcome();
                ErrorClass::from_bits(o.out_x, o.out_z)
            }
            6 => {
                let o = self.zblock_outcome();
                ErrorClass::from_bits(o.out_x, o.out_z)
            }
            n => panic!("pattern with {n} consumed states has no block"),
        }
    }
}

/// Postselected result of one detection block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockResult {
    pub accept_probability: f64,
    /// Renormalized output; absent when nothing is accepted.
    pub output: Option<ErrorDistribution>,
}

fn block_result(accept: f64, weights: [f64; 4]) -> BlockResult {
    if accept <= 0.0 {
        return BlockResult {
            accept_probability: 0.0,
            output: None,
        };
    }
    let output = ErrorDistribution::new(
        weights[0] / accept,
        weights[1] / accept,
        weights[2] / accept,
        weights[3] / accept,
    )
    .expect("renormalized block output is a distribution");
    BlockResult {
        accept_probability: accept,
        output: Some(output),
    }
}

/// Exact X-block map over all 16 error patterns; `d1` labels the
/// surviving state, `d2` the consumed one.
pub fn xdetect_map(d1: &ErrorDistribution, d2: &ErrorDistribution) -> BlockResult {
    let mut accept = 0.0;
    let mut weights = [0.0f64; 4];
    for input in ErrorClass::ALL {
        for consumed in ErrorClass::ALL {
            let w = d1.probability_of(input) * d2.probability_of(consumed);
            let pattern = ErrorPattern {
                input,
                consumed: vec![consumed],
            };
            if pattern.accepted() {
                accept += w;
                weights[pattern.output_class().index()] += w;
            }
        }
    }
    block_result(accept, weights)
}

/// Exact Z-block map over all 4^7 error patterns; `inputs[0]` labels
/// the surviving state, `inputs[1..7]` the six consumed ones.
pub fn zdetect_map(inputs: &[ErrorDistribution; 7]) -> BlockResult {
    let mut accept = 0.0;
    let mut weights = [0.0f64; 4];
    let mut pattern = ErrorPattern {
        input: ErrorClass::I,
        consumed: vec![ErrorClass::I; 6],
    };
    for code in 0..4u32.pow(7) {
        let mut rest = code;
        let mut w = 1.0;
        for (slot, dist) in inputs.iter().enumerate() {
            let class = ErrorClass::ALL[(rest % 4) as usize];
            rest /= 4;
            w *= dist.probability_of(class);
            if slot == 0 {
                pattern.input = class;
            } else {
                pattern.consumed[slot - 1] = class;
            }
        }
        if w == 0.0 {
            continue;
        }
        if pattern.accepted() {
            accept += w;
            weights[pattern.output_class().index()] += w;
        }
    }
    block_result(accept, weights)
}

/// Twirled class probabilities plus the residual weight outside the
/// twirled basis (zero up to roundoff for any valid input).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwirlOutcome {
    pub distribution: ErrorDistribution,
    pub residual: f64,
}

fn gate_matrix(name: GateName, power: i64) -> CMatrix {
    GateInstance::new(name, power, vec![4])
        .matrix()
        .expect("catalog ququart gate")
        .mat
}

/// The resource state with an (x, z) Pauli-square label applied.
fn labeled_resource_state(x: u8, z: u8) -> DenseState {
    let mut state = crate::gates::resource_state(crate::gates::ResourceKind::F);
    if z % 2 == 1 {
        state
            .apply_gate(&gate_matrix(GateName::Z, 2), &[0])
            .expect("ququart gate on ququart state");
    }
    if x % 2 == 1 {
        state
            .apply_gate(&gate_matrix(GateName::X, 2), &[0])
            .expect("ququart gate on ququart state");
    }
    state
}

/// Twirls by both stabilizers and reads off the class probabilities as
/// overlaps with the four labeled resource states.
pub fn twirl(rho: &CMatrix) -> Result<TwirlOutcome> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(DistillError::InvalidDensityMatrix("4x4"));
    }
    let rho_dag = dagger(rho);
    let herm_dev: f64 = rho
        .iter()
        .zip(rho_dag.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if herm_dev > 1e-9 {
        return Err(DistillError::InvalidDensityMatrix("Hermitian"));
    }
    let trace: f64 = (0..4).map(|k| rho[(k, k)].re).sum();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(DistillError::InvalidDensityMatrix("trace 1"));
    }
    let eigs = hermitian_eigenvalues(rho);
    if eigs.iter().any(|&e| e < -1e-9) {
        return Err(DistillError::InvalidDensityMatrix("positive semidefinite"));
    }

    let u_z = gate_matrix(GateName::Zds2, 1);
    let u_x = gate_matrix(GateName::Xh2, 1);
    let conj = |u: &CMatrix, m: &CMatrix| -> CMatrix {
        let um = u.dot(m).dot(&dagger(u));
        (m + &um).mapv(|v| v * 0.5)
    };
    let twirled = conj(&u_x, &conj(&u_z, rho));

    let basis: Vec<DenseState> = ErrorClass::ALL
        .iter()
        .map(|cl| {
            let (x, z) = cl.bits();
            labeled_resource_state(x, z)
        })
        .collect();
    let overlap = |a: &DenseState, b: &DenseState| -> crate::hilbert::C64 {
        let mut acc = crate::hilbert::c(0.0, 0.0);
        for r in 0..4 {
            for col in 0..4 {
                acc += a.amps[r].conj() * twirled[(r, col)] * b.amps[col];
            }
        }
        acc
    };
    let mut probs = [0.0f64; 4];
    let mut residual = 0.0f64;
    for (j, vj) in basis.iter().enumerate() {
        for (k, vk) in basis.iter().enumerate() {
            let o = overlap(vj, vk);
            if j == k {
                probs[j] = o.re.max(0.0);
            } else {
                residual = residual.max(o.norm());
            }
        }
    }
    let sum: f64 = probs.iter().sum();
    let distribution =
        ErrorDistribution::new(probs[0] / sum, probs[1] / sum, probs[2] / sum, probs[3] / sum)?;
    Ok(TwirlOutcome {
        distribution,
        residual,
    })
}

/// Depolarizing-style single-parameter noise: each qubit factor of the
/// resource state flips with probability p, independently.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(DistillError::BadNoiseParameter(p));
        }
        Ok(NoiseModel { p })
    }

    pub fn distribution(&self) -> ErrorDistribution {
        let p = self.p;
        ErrorDistribution::new((1.0 - p) * (1.0 - p), (1.0 - p) * p, (1.0 - p) * p, p * p)
            .expect("noise model probabilities form a distribution")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    XBlock,
    ZBlock,
}

impl BlockKind {
    /// Raw inputs consumed per block output.
    pub fn arity(&self) -> u32 {
        match self {
            BlockKind::XBlock => 2,
            BlockKind::ZBlock => 7,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BlockKind::XBlock => "X",
            BlockKind::ZBlock => "Z",
        }
    }
}

fn apply_block(block: BlockKind, dist: &ErrorDistribution) -> BlockResult {
    match block {
        BlockKind::XBlock => xdetect_map(dist, dist),
        BlockKind::ZBlock => zdetect_map(&[*dist; 7]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Round {
    pub block: BlockKind,
    pub accept_probability: f64,
    pub output: ErrorDistribution,
    /// Raw inputs per output after this round.
    pub cumulative_raw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NestingSchedule {
    pub rounds: Vec<Round>,
    pub raw_per_output: f64,
    pub converged: bool,
    pub diverged: bool,
    pub final_distribution: ErrorDistribution,
}

/// Greedy nesting from an explicit starting distribution: each round
/// suppresses the error with the larger marginal, feeding i.i.d.
/// copies of the current distribution; ties pick the cheaper X block.
pub fn greedy_nesting_from(
    start: ErrorDistribution,
    max_rounds: usize,
    stop_eps: f64,
) -> NestingSchedule {
    let mut current = start;
    let mut rounds = Vec::new();
    let mut raw = 1.0f64;
    let mut converged = current.total_error() < stop_eps;
    let mut diverged = false;
    let mut stalled = 0usize;

    while !converged && !diverged && rounds.len() < max_rounds {
        let block = if current.marginal_x() >= current.marginal_z() {
            BlockKind::XBlock
        } else {
            BlockKind::ZBlock
        };
        let result = apply_block(block, &current);
        let output = match result.output {
            Some(o) => o,
            None => {
                diverged = true;
                break;
            }
        };
        raw *= f64::from(block.arity()) / result.accept_probability;
        let before = current.total_error();
        current = output;
        rounds.push(Round {
            block,
            accept_probability: result.accept_probability,
            output,
            cumulative_raw: raw,
        });
        if current.total_error() < stop_eps {
            converged = true;
        } else if current.total_error() >= before {
            stalled += 1;
            if stalled >= DIVERGENCE_WINDOW {
                diverged = true;
            }
        } else {
            stalled = 0;
        }
    }
    NestingSchedule {
        rounds,
        raw_per_output: raw,
        converged,
        diverged,
        final_distribution: current,
    }
}

pub fn greedy_nesting(model: &NoiseModel, max_rounds: usize, stop_eps: f64) -> NestingSchedule {
    greedy_nesting_from(model.distribution(), max_rounds, stop_eps)
}

/// Bisects for the largest noise parameter whose greedy nesting still
/// converges; requires convergence at `lo` and divergence at `hi`.
pub fn threshold_scan(lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lo) || !(0.0..1.0).contains(&hi) || lo >= hi {
        return Err(DistillError::BadNoiseParameter(if lo >= hi { hi } else { lo }));
    }
    let converges = |p: f64| -> Result<bool> {
        let model = NoiseModel::new(p)?;
        Ok(greedy_nesting(&model, THRESHOLD_MAX_ROUNDS, STOP_EPS).converged)
    };
    let lo_converges = converges(lo)?;
    let hi_converges = converges(hi)?;
    if !lo_converges || hi_converges {
        return Err(DistillError::BracketingFailure {
            lo,
            lo_converges,
            hi,
            hi_converges,
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    /// Raw inputs per output over the schedule's rounds.
    pub raw_per_output: f64,
    /// Cost per quadratic error suppression with the block arities
    /// amortized over their suppression orders: 2 * 7^(log_3 2).
    pub quadratic_amortized_ratio: f64,
    /// Unamortized cost of one X round plus one Z round at vanishing
    /// error rates.
    pub raw_pair_composite: f64,
}

pub fn cost_report(schedule: &NestingSchedule) -> Result<CostReport> {
    if schedule.rounds.is_empty() {
        return Err(DistillError::EmptySchedule);
    }
    let raw = schedule
        .rounds
        .iter()
        .map(|r| f64::from(r.block.arity()) / r.accept_probability)
        .product();
    Ok(CostReport {
        raw_per_output: raw,
        quadratic_amortized_ratio: quadratic_amortized_ratio(),
        raw_pair_composite: 14.0,
    })
}

/// 2 * 7^(log_3 2): the X block doubles cost per quadratic
/// suppression; the Z block's sevenfold cost per cubic suppression is
/// rescaled to the quadratic exponent.
pub fn quadratic_amortized_ratio() -> f64 {
    2.0 * 7f64.powf(2f64.ln() / 3f64.ln())
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

fn sample_class(dist: &ErrorDistribution, rng: &mut ChaCha8Rng) -> ErrorClass {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for class in ErrorClass::ALL {
        acc += dist.probability_of(class);
        if r < acc {
            return class;
        }
    }
    ErrorClass::X2Z2
}

/// Monte Carlo estimate of a block map under i.i.d. inputs. Each trial
/// derives its own generator from (seed, trial), so results are
/// bit-identical for a fixed seed regardless of how trials are
/// sharded.
pub fn monte_carlo_block(
    block: BlockKind,
    dist: &ErrorDistribution,
    trials: u64,
    seed: u64,
) -> Result<BlockResult> {
    if trials == 0 {
        return Err(DistillError::NoTrials);
    }
    let consumed_count = (block.arity() - 1) as usize;
    let mut accepted = 0u64;
    let mut counts = [0u64; 4];
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let pattern = ErrorPattern {
            input: sample_class(dist, &mut rng),
            consumed: (0..consumed_count)
                .map(|_| sample_class(dist, &mut rng))
                .collect(),
        };
        if pattern.accepted() {
            accepted += 1;
            counts[pattern.output_class().index()] += 1;
        }
    }
    let accept = accepted as f64 / trials as f64;
    if accepted == 0 {
        return Ok(BlockResult {
            accept_probability: accept,
            output: None,
        });
    }
    let n = accepted as f64;
    Ok(BlockResult {
        accept_probability: accept,
        output: Some(ErrorDistribution::new(
            counts[0] as f64 / n,
            counts[1] as f64 / n,
            counts[2] as f64 / n,
            counts[3] as f64 / n,
        )?),
    })
}

/// Which resource state convention labels the error classes. The
/// alternate (Fourier-conjugate) state sees the roles of the X-square
/// and Z-square classes exchanged; this is a pure relabeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    F,
    G,
}

pub fn relabel(dist: &ErrorDistribution, frame: Frame) -> ErrorDistribution {
    match frame {
        Frame::F => *dist,
        Frame::G => ErrorDistribution {
            p_i: dist.p_i,
            p_x: dist.p_z,
            p_z: dist.p_x,
            p_xz: dist.p_xz,
        },
    }
}

pub fn xdetect_map_in_frame(
    frame: Frame,
    d1: &ErrorDistribution,
    d2: &ErrorDistribution,
) -> BlockResult {
    let result = xdetect_map(&relabel(d1, frame), &relabel(d2, frame));
    BlockResult {
        accept_probability: result.accept_probability,
        output: result.output.map(|o| relabel(&o, frame)),
    }
}

pub fn zdetect_map_in_frame(frame: Frame, inputs: &[ErrorDistribution; 7]) -> BlockResult {
    let relabeled: [ErrorDistribution; 7] = std::array::from_fn(|k| relabel(&inputs[k], frame));
    let result = zdetect_map(&relabeled);
    BlockResult {
        accept_probability: result.accept_probability,
        output: result.output.map(|o| relabel(&o, frame)),
    }
}

/// One dense-simulation check of a detection circuit under a single
/// injected error.
#[derive(Clone, Debug)]
pub struct DenseCheck {
    pub block: BlockKind,
    /// 0 is the block input; higher slots are consumed states in
    /// circuit order.
    pub slot: usize,
    pub class: ErrorClass,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct DenseValidation {
    pub checks: Vec<DenseCheck>,
}

impl DenseValidation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn inject(b: &mut CircuitBuilder, wire: &str, class: ErrorClass) {
    let (x, z) = class.bits();
    if x == 1 {
        b.gate_pow(GateName::X, 2, &[wire]);
    }
    if z == 1 {
        b.gate_pow(GateName::Z, 2, &[wire]);
    }
}

/// The X detection circuit with chosen error classes injected on the
/// surviving and consumed states.
fn xdetect_circuit(input: ErrorClass, consumed: ErrorClass) -> Circuit {
    let mut b = CircuitBuilder::new();
    b.prep_resource("d1").prep_resource("d2");
    inject(&mut b, "d1", input);
    inject(&mut b, "d2", consumed);
    b.gate_pow(GateName::Cnot, -1, &["d1", "d2"]);
    b.split("d2", "lo", "hi");
    b.measure("lo", "k");
    b.gate_if(GateName::Cnot, &["d1", "hi"], "k", 1);
    b.measure("hi", "s");
    b.outputs(&["d1"]);
    b.classical_outputs(&["k", "s"]);
    b.build().expect("X detection circuit is well-formed")
}

/// The Z detection circuit: a fanned-out qubit X measurement across
/// three split ququarts, with the six consumed states' errors injected
/// as qubit Paulis around the fan-out and the syndrome read through
/// Fourier meters.
fn zdetect_circuit(input: ErrorClass, consumed: &[ErrorClass; 6]) -> Circuit {
    let mut b = CircuitBuilder::new();
    b.prep("q1", 2, 0).gate(GateName::H, &["q1"]);
    b.prep("d2", 4, 0).gate(GateName::H, &["d2"]);
    b.prep("d4", 4, 0).gate(GateName::H, &["d4"]);
    b.prep_resource("d6");
    inject(&mut b, "d6", input);
    b.gate_pow(GateName::Cnot, -1, &["d4", "d6"]);
    b.gate_pow(GateName::Cnot, -1, &["d2", "d6"]);
    b.split("d2", "q2", "q3");
    b.split("d4", "q4", "q5");
    b.split("d6", "q6", "q7");
    let pairs = [("q2", "q3"), ("q4", "q5"), ("q6", "q7")];
    for (state, (lo, hi)) in consumed[..3].iter().zip(pairs) {
        let (x, z) = state.bits();
        if z == 1 {
            b.gate(GateName::Z, &[lo]);
        }
        if x == 1 {
            b.gate(GateName::X, &[hi]);
        }
    }
    for target in ["q2", "q4", "q6", "q7"] {
        b.gate(GateName::Cnot, &["q1", target]);
    }
    for (state, (lo, hi)) in consumed[3..].iter().zip(pairs) {
        let (x, z) = state.bits();
        if z == 1 {
            b.gate(GateName::Z, &[lo]);
        }
        if x == 1 {
            b.gate(GateName::X, &[hi]);
        }
    }
    b.fuse("q2", "q3", "e2");
    b.fuse("q4", "q5", "e4");
    b.fuse("q6", "q7", "e6");
    b.gate(GateName::Cnot, &["e2", "e6"]);
    b.gate(GateName::Cnot, &["e4", "e6"]);
    b.gate(GateName::H, &["q1"]);
    b.gate(GateName::H, &["e2"]);
    b.gate(GateName::H, &["e4"]);
    b.measure("q1", "m1");
    b.measure("e2", "m2");
    b.measure("e4", "m3");
    b.outputs(&["e6"]);
    b.classical_outputs(&["m1", "m2", "m3"]);
    b.build().expect("Z detection circuit is well-formed")
}

fn check_branches(
    circ: &Circuit,
    expected_labels: &[(&str, u8)],
    expected_state: &DenseState,
) -> std::result::Result<(), String> {
    let branches = circuit::enumerate_branches(circ, &BTreeMap::new())
        .map_err(|e| format!("enumeration failed: {e}"))?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(format!("branch probabilities sum to {total}"));
    }
    for branch in &branches {
        for &(cbit, want) in expected_labels {
            let got = branch
                .labels
                .get(cbit)
                .copied()
                .ok_or_else(|| format!("branch lacks outcome {cbit}"))?;
            if got != want {
                return Err(format!("outcome {cbit} = {got}, predicted {want}"));
            }
        }
        let state = branch.normalized_state();
        let m = state_equal_up_to_global_phase(&state, expected_state, TOL_UNITARY);
        if m.deviation > TOL_UNITARY {
            return Err(format!(
                "output state deviates by {:.3e} from the predicted labeled state",
                m.deviation
            ));
        }
    }
    Ok(())
}

/// Certifies the parity rules of both block maps against full dense
/// simulation of the detection circuits, one injected error per run.
pub fn validate_blocks_against_dense() -> DenseValidation {
    let mut checks = Vec::new();

    let x_combos: Vec<(usize, ErrorClass)> = std::iter::once((0, ErrorClass::I))
        .chain((0..2).flat_map(|slot| {
            [ErrorClass::X2, ErrorClass::Z2, ErrorClass::X2Z2]
                .into_iter()
                .map(move |cl| (slot, cl))
        }))
        .collect();
    for (slot, class) in x_combos {
        let input = if slot == 0 { class } else { ErrorClass::I };
        let consumed = if slot == 1 { class } else { ErrorClass::I };
        let pattern = ErrorPattern {
            input,
            consumed: vec![consumed],
        };
        let outcome = pattern.xblock_outcome();
        let circ = xdetect_circuit(input, consumed);
        let expected_state = labeled_resource_state(outcome.out_x, outcome.out_z);
        let result = check_branches(&circ, &[("s", outcome.syndrome)], &expected_state);
        checks.push(DenseCheck {
            block: BlockKind::XBlock,
            slot,
            class,
            passed: result.is_ok(),
            detail: result.err().unwrap_or_default(),
        });
    }

    let z_combos: Vec<(usize, ErrorClass)> = std::iter::once((0, ErrorClass::I))
        .chain((0..7).flat_map(|slot| {
            [ErrorClass::X2, ErrorClass::Z2, ErrorClass::X2Z2]
                .into_iter()
                .map(move |cl| (slot, cl))
        }))
        .collect();
    for (slot, class) in z_combos {
        let input = if slot == 0 { class } else { ErrorClass::I };
        let mut consumed = [ErrorClass::I; 6];
        if slot > 0 {
            consumed[slot - 1] = class;
        }
        let pattern = ErrorPattern {
            input,
            consumed: consumed.to_vec(),
        };
        let outcome = pattern.zblock_outcome();
        let circ = zdetect_circuit(input, &consumed);
        let expected_state = labeled_resource_state(outcome.out_x, outcome.out_z);
        let result = check_branches(
            &circ,
            &[("m1", outcome.m1), ("m2", outcome.m2), ("m3", outcome.m3)],
            &expected_state,
        );
        checks.push(DenseCheck {
            block: BlockKind::ZBlock,
            slot,
            class,
            passed: result.is_ok(),
            detail: result.err().unwrap_or_default(),
        });
    }

    DenseValidation { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::c;
    use proptest::prelude::*;

    fn dist(p_i: f64, p_x: f64, p_z: f64, p_xz: f64) -> ErrorDistribution {
        ErrorDistribution::new(p_i, p_x, p_z, p_xz).unwrap()
    }

    #[test]
    fn distribution_validation_rejects_bad_inputs() {
        assert!(matches!(
            ErrorDistribution::new(0.5, 0.5, 0.1, -0.1),
            Err(DistillError::NegativeProbability(_))
        ));
        assert!(matches!(
            ErrorDistribution::new(0.5, 0.5, 0.1, 0.1),
            Err(DistillError::InvalidDistribution { .. })
        ));
        assert!(ErrorDistribution::new(0.25, 0.25, 0.25, 0.25).is_ok());
    }

    #[test]
    fn noise_model_induces_a_distribution() {
        let model = NoiseModel::new(0.3).unwrap();
        let d = model.distribution();
        assert!((d.p_x - 0.21).abs() < 1e-15);
        assert!((d.p_z - 0.21).abs() < 1e-15);
        assert!((d.p_xz - 0.09).abs() < 1e-15);
        assert!((d.p_i + d.total_error() - 1.0).abs() < 1e-12);
        assert!(NoiseModel::new(1.0).is_err());
        assert!(NoiseModel::new(-0.1).is_err());
    }

    fn density_of(state: &DenseState) -> CMatrix {
        let n = state.amps.len();
        CMatrix::from_shape_fn((n, n), |(r, col)| {
            state.amps[r] * state.amps[col].conj()
        })
    }

    #[test]
    fn twirl_fixes_labeled_states() {
        for class in ErrorClass::ALL {
            let (x, z) = class.bits();
            let rho = density_of(&labeled_resource_state(x, z));
            let out = twirl(&rho).unwrap();
            assert!(out.residual < 1e-12);
            assert!((out.distribution.probability_of(class) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn twirl_splits_a_z_rotation_evenly() {
        let mut state = crate::gates::resource_state(crate::gates::ResourceKind::F);
        state.apply_gate(&gate_matrix(GateName::Z, 1), &[0]).unwrap();
        let out = twirl(&density_of(&state)).unwrap();
        assert!(out.residual < 1e-12);
        assert!((out.distribution.p_i - 0.5).abs() < 1e-12);
        assert!((out.distribution.p_z - 0.5).abs() < 1e-12);
        assert!(out.distribution.p_x.abs() < 1e-12);
        assert!(out.distribution.p_xz.abs() < 1e-12);
    }

    #[test]
    fn twirl_rejects_invalid_density_matrices() {
        let mut rho = density_of(&labeled_resource_state(0, 0));
        rho[(0, 1)] += c(0.1, 0.0);
        assert!(matches!(
            twirl(&rho),
            Err(DistillError::InvalidDensityMatrix("Hermitian"))
        ));
        let rho = density_of(&labeled_resource_state(0, 0)).mapv(|v| v * 2.0);
        assert!(matches!(
            twirl(&rho),
            Err(DistillError::InvalidDensityMatrix("trace 1"))
        ));
        let mut rho = CMatrix::zeros((4, 4));
        rho[(0, 0)] = c(1.5, 0.0);
        rho[(1, 1)] = c(-0.5, 0.0);
        assert!(matches!(
            twirl(&rho),
            Err(DistillError::InvalidDensityMatrix("positive semidefinite"))
        ));
    }

    #[test]
    fn xdetect_on_ideal_inputs_accepts_everything() {
        let result = xdetect_map(&ErrorDistribution::ideal(), &ErrorDistribution::ideal());
        assert_eq!(result.accept_probability, 1.0);
        let out = result.output.unwrap();
        assert_eq!(out.p_i, 1.0);
    }

    #[test]
    fn xdetect_example_accepts_82_percent() {
        let d = dist(0.9, 0.1, 0.0, 0.0);
        let result = xdetect_map(&d, &d);
        assert!((result.accept_probability - 0.82).abs() < 1e-12);
        let out = result.output.unwrap();
        assert!((out.p_x - 0.01 / 0.82).abs() < 1e-12);
        assert!(out.p_z.abs() < 1e-15);
        assert!(out.p_xz.abs() < 1e-15);
    }

    #[test]
    fn xdetect_flags_zero_acceptance() {
        let all_x = dist(0.0, 1.0, 0.0, 0.0);
        let ideal = ErrorDistribution::ideal();
        let result = xdetect_map(&all_x, &ideal);
        assert_eq!(result.accept_probability, 0.0);
        assert!(result.output.is_none());
    }

    #[test]
    fn zdetect_on_ideal_inputs_accepts_everything() {
        let result = zdetect_map(&[ErrorDistribution::ideal(); 7]);
        assert_eq!(result.accept_probability, 1.0);
        assert_eq!(result.output.unwrap().p_i, 1.0);
    }

    #[test]
    fn zdetect_pure_z_noise_matches_closed_form() {
        // The distinct nonzero syndrome columns leave a kernel of
        // weights {0, 3, 4, 7} with multiplicities {1, 7, 7, 1}; every
        // weight-3 and weight-7 element flips the output Z bit.
        let p = 0.1f64;
        let q = 1.0 - p;
        let d = dist(q, 0.0, p, 0.0);
        let inputs = [d; 7];
        let result = zdetect_map(&inputs);
        let accept = q.powi(7) + 7.0 * q.powi(4) * p.powi(3) + 7.0 * q.powi(3) * p.powi(4)
            + p.powi(7);
        assert!((result.accept_probability - accept).abs() < 1e-15);
        let out = result.output.unwrap();
        let w_z = 7.0 * q.powi(4) * p.powi(3) + p.powi(7);
        let w_i = q.powi(7) + 7.0 * q.powi(3) * p.powi(4);
        assert!((out.p_z - w_z / accept).abs() < 1e-15);
        assert!((out.p_i - w_i / accept).abs() < 1e-15);
        assert!(out.p_x.abs() < 1e-15);
        assert!(out.p_xz.abs() < 1e-15);
    }

    /// Polynomial in the four class probabilities with integer
    /// coefficients, keyed by exponents of (p_i, p_x, p_z, p_xz).
    type Poly = std::collections::BTreeMap<[u8; 4], i64>;

    fn add_monomial(poly: &mut Poly, classes: &[ErrorClass]) {
        let mut key = [0u8; 4];
        for class in classes {
            key[class.index()] += 1;
        }
        *poly.entry(key).or_insert(0) += 1;
    }

    /// Enumerates a block symbolically: polynomials for acceptance and
    /// for each output class, with exact integer coefficients.
    fn block_polynomials(consumed_count: usize) -> (Poly, [Poly; 4]) {
        let mut accept = Poly::new();
        let mut outputs: [Poly; 4] = Default::default();
        let n = consumed_count + 1;
        for code in 0..4u32.pow(n as u32) {
            let mut rest = code;
            let classes: Vec<ErrorClass> = (0..n)
                .map(|_| {
                    let class = ErrorClass::ALL[(rest % 4) as usize];
                    rest /= 4;
                    class
                })
                .collect();
            let pattern = ErrorPattern {
                input: classes[0],
                consumed: classes[1..].to_vec(),
            };
            if pattern.accepted() {
                add_monomial(&mut accept, &classes);
                add_monomial(&mut outputs[pattern.output_class().index()], &classes);
            }
        }
        (accept, outputs)
    }

    fn poly_from(entries: &[([u8; 4], i64)]) -> Poly {
        entries.iter().copied().collect()
    }

    #[test]
    fn xdetect_polynomials_are_exact() {
        let (accept, outputs) = block_polynomials(1);
        // accept = (p_i + p_z)^2 + (p_x + p_xz)^2
        assert_eq!(
            accept,
            poly_from(&[
                ([2, 0, 0, 0], 1),
                ([1, 0, 1, 0], 2),
                ([0, 0, 2, 0], 1),
                ([0, 2, 0, 0], 1),
                ([0, 1, 0, 1], 2),
                ([0, 0, 0, 2], 1),
            ])
        );
        assert_eq!(
            outputs[ErrorClass::X2.index()],
            poly_from(&[([0, 2, 0, 0], 1), ([0, 0, 0, 2], 1)])
        );
        assert_eq!(
            outputs[ErrorClass::Z2.index()],
            poly_from(&[([1, 0, 1, 0], 2)])
        );
        assert_eq!(
            outputs[ErrorClass::X2Z2.index()],
            poly_from(&[([0, 1, 0, 1], 2)])
        );
    }

    /// Coefficient of the (x, z, xz) exponent triple after setting the
    /// identity-class probability to 1.
    fn coefficient(poly: &Poly, x: u8, z: u8, xz: u8) -> i64 {
        poly.iter()
            .filter(|(key, _)| key[1] == x && key[2] == z && key[3] == xz)
            .map(|(_, v)| *v)
            .sum()
    }

    #[test]
    fn zdetect_leading_coefficients_from_exact_enumeration() {
        let (accept, outputs) = block_polynomials(6);
        // Leading detection probability 7 p_z + 7 p_xz: none of the 7
        // single-Z or single-XZ patterns is accepted.
        assert_eq!(coefficient(&accept, 0, 1, 0), 0);
        assert_eq!(coefficient(&accept, 0, 0, 1), 0);
        // Single X-square errors pass undetected on all 7 slots.
        assert_eq!(coefficient(&outputs[ErrorClass::X2.index()], 1, 0, 0), 7);
        // Accepted weight-3 Z patterns: all 7 flip the output Z bit.
        assert_eq!(coefficient(&outputs[ErrorClass::Z2.index()], 0, 3, 0), 7);
        assert_eq!(coefficient(&outputs[ErrorClass::I.index()], 0, 3, 0), 0);
        // Mixed cubics on the same parity-check lines.
        assert_eq!(coefficient(&outputs[ErrorClass::Z2.index()], 0, 1, 2), 21);
        assert_eq!(coefficient(&outputs[ErrorClass::X2Z2.index()], 0, 0, 3), 7);
        assert_eq!(coefficient(&outputs[ErrorClass::X2Z2.index()], 0, 2, 1), 21);
    }

    #[test]
    fn z_parity_checks_form_a_fano_kernel() {
        // 7 binary Z locations; syndrome from the three parity rules.
        let mut kernel = Vec::new();
        for bits in 0..128u32 {
            let z: Vec<u8> = (0..7).map(|k| ((bits >> k) & 1) as u8).collect();
            let pattern = ErrorPattern {
                input: ErrorClass::from_bits(0, z[0]),
                consumed: (1..7).map(|k| ErrorClass::from_bits(0, z[k])).collect(),
            };
            if pattern.accepted() {
                kernel.push((bits.count_ones(), pattern.zblock_outcome().out_z));
            }
        }
        assert_eq!(kernel.len(), 16);
        let weight3: Vec<_> = kernel.iter().filter(|(w, _)| *w == 3).collect();
        assert_eq!(weight3.len(), 7);
        assert!(weight3.iter().all(|(_, flip)| *flip == 1));
        assert!(!kernel.iter().any(|(w, _)| *w == 1));
    }

    #[test]
    fn dense_simulation_certifies_both_blocks() {
        let report = validate_blocks_against_dense();
        assert_eq!(report.checks.len(), 7 + 22);
        let failures: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| {
                format!(
                    "{} block slot {} class {}: {}",
                    c.block.label(),
                    c.slot,
                    c.class.label(),
                    c.detail
                )
            })
            .collect();
        assert!(failures.is_empty(), "{}", failures.join("\n"));
    }

    #[test]
    fn greedy_nesting_on_noiseless_input_uses_no_rounds() {
        let schedule = greedy_nesting(&NoiseModel::new(0.0).unwrap(), 100, STOP_EPS);
        assert!(schedule.converged);
        assert!(!schedule.diverged);
        assert!(schedule.rounds.is_empty());
        assert_eq!(schedule.raw_per_output, 1.0);
    }

    #[test]
    fn greedy_nesting_converges_below_threshold() {
        let schedule = greedy_nesting(&NoiseModel::new(0.10).unwrap(), 200, STOP_EPS);
        assert!(schedule.converged, "final {:?}", schedule.final_distribution);
        assert!(schedule.final_distribution.total_error() < STOP_EPS);
        assert!(schedule.raw_per_output > 1.0);
        for round in &schedule.rounds {
            assert!(round.accept_probability > 0.0 && round.accept_probability <= 1.0);
        }
    }

    #[test]
    fn greedy_nesting_diverges_above_threshold() {
        let schedule = greedy_nesting(&NoiseModel::new(0.20).unwrap(), 200, STOP_EPS);
        assert!(!schedule.converged);
        assert!(schedule.diverged);
    }

    #[test]
    fn threshold_scan_is_self_consistent() {
        // The greedy iteration of the exact maps loses convergence
        // near p = 0.124 (confirmed against an independent
        // reimplementation of both block enumerations).
        let t = threshold_scan(0.01, 0.40, 1e-3).unwrap();
        assert!((0.115..=0.135).contains(&t), "threshold {t}");
        let narrow = threshold_scan(0.10, 0.20, 1e-4).unwrap();
        assert!((t - narrow).abs() < 1e-3, "wide {t} narrow {narrow}");
    }

    #[test]
    fn convergence_is_monotone_across_the_bracket() {
        for k in 1..20 {
            let p = 0.02 * k as f64;
            let schedule = greedy_nesting(&NoiseModel::new(p).unwrap(), 400, STOP_EPS);
            assert_eq!(
                schedule.converged,
                p < 0.124,
                "p = {p} converged = {}",
                schedule.converged
            );
        }
    }

    #[test]
    fn threshold_scan_rejects_bad_brackets() {
        assert!(matches!(
            threshold_scan(0.01, 0.05, 1e-3),
            Err(DistillError::BracketingFailure { .. })
        ));
        assert!(matches!(
            threshold_scan(0.30, 0.40, 1e-3),
            Err(DistillError::BracketingFailure { .. })
        ));
    }

    #[test]
    fn cost_report_matches_block_arities() {
        let x_only = greedy_nesting(&NoiseModel::new(1e-6).unwrap(), 1, STOP_EPS);
        assert_eq!(x_only.rounds.len(), 1);
        assert_eq!(x_only.rounds[0].block, BlockKind::XBlock);
        let report = cost_report(&x_only).unwrap();
        assert!((report.raw_per_output - 2.0).abs() < 1e-4);

        let z_start = dist(1.0 - 1e-6, 0.0, 1e-6, 0.0);
        let z_only = greedy_nesting_from(z_start, 1, STOP_EPS);
        assert_eq!(z_only.rounds.len(), 1);
        assert_eq!(z_only.rounds[0].block, BlockKind::ZBlock);
        let report = cost_report(&z_only).unwrap();
        assert!((report.raw_per_output - 7.0).abs() < 1e-4);

        assert!(matches!(
            cost_report(&greedy_nesting(&NoiseModel::new(0.0).unwrap(), 5, STOP_EPS)),
            Err(DistillError::EmptySchedule)
        ));
    }

    #[test]
    fn amortized_ratio_matches_closed_form() {
        let ratio = quadratic_amortized_ratio();
        assert!((6.82..=6.84).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn monte_carlo_is_deterministic_and_unbiased() {
        let ideal = monte_carlo_block(BlockKind::XBlock, &ErrorDistribution::ideal(), 1000, 7)
            .unwrap();
        assert_eq!(ideal.accept_probability, 1.0);
        assert_eq!(ideal.output.unwrap().p_i, 1.0);

        let d = dist(0.9, 0.1, 0.0, 0.0);
        let trials = 1_000_000u64;
        let est = monte_carlo_block(BlockKind::XBlock, &d, trials, 42).unwrap();
        let exact = xdetect_map(&d, &d);
        let sigma = (0.82f64 * 0.18 / trials as f64).sqrt();
        assert!(
            (est.accept_probability - exact.accept_probability).abs() < 4.0 * sigma,
            "estimate {} exact {}",
            est.accept_probability,
            exact.accept_probability
        );
        let accepted = est.accept_probability * trials as f64;
        let exact_px = exact.output.unwrap().p_x;
        let sigma_px = (exact_px * (1.0 - exact_px) / accepted).sqrt();
        assert!((est.output.unwrap().p_x - exact_px).abs() < 4.0 * sigma_px);

        let again = monte_carlo_block(BlockKind::XBlock, &d, trials, 42).unwrap();
        assert_eq!(est, again);
        assert!(monte_carlo_block(BlockKind::XBlock, &d, 0, 1).is_err());
    }

    #[test]
    fn monte_carlo_tracks_the_z_block() {
        let d = dist(0.85, 0.05, 0.08, 0.02);
        let trials = 200_000u64;
        let est = monte_carlo_block(BlockKind::ZBlock, &d, trials, 11).unwrap();
        let exact = zdetect_map(&[d; 7]);
        let p = exact.accept_probability;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((est.accept_probability - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn frame_relabeling_swaps_the_pauli_roles() {
        let d = dist(0.9, 0.0, 0.1, 0.0);
        let swapped = relabel(&d, Frame::G);
        assert_eq!(swapped.p_x, 0.1);
        assert_eq!(swapped.p_z, 0.0);
        assert_eq!(relabel(&relabel(&d, Frame::G), Frame::G), d);
        assert_eq!(relabel(&d, Frame::F), d);

        let in_g = xdetect_map_in_frame(Frame::G, &d, &d);
        let in_f = xdetect_map(&swapped, &swapped);
        assert_eq!(in_g.accept_probability, in_f.accept_probability);
        assert_eq!(in_g.output.unwrap(), relabel(&in_f.output.unwrap(), Frame::G));

        let zs = [d; 7];
        let z_in_g = zdetect_map_in_frame(Frame::G, &zs);
        assert!(z_in_g.accept_probability > 0.0);
    }

    fn distribution_strategy() -> impl Strategy<Value = ErrorDistribution> {
        (0.02f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, cc, d)| {
            let sum = a + b + cc + d;
            ErrorDistribution::new(a / sum, b / sum, cc / sum, d / sum).unwrap()
        })
    }

    proptest! {
        #[test]
        fn block_outputs_are_valid_distributions(
            d1 in distribution_strategy(),
            d2 in distribution_strategy(),
        ) {
            let x = xdetect_map(&d1, &d2);
            prop_assert!(x.accept_probability >= 0.0 && x.accept_probability <= 1.0 + 1e-12);
            if let Some(out) = x.output {
                prop_assert!((out.p_i + out.total_error() - 1.0).abs() < 1e-9);
            }
            let z = zdetect_map(&[d1, d2, d1, d2, d1, d2, d1]);
            prop_assert!(z.accept_probability >= 0.0 && z.accept_probability <= 1.0 + 1e-12);
            if let Some(out) = z.output {
                prop_assert!((out.p_i + out.total_error() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn twirl_of_labeled_mixtures_recovers_the_mixture(
            d in distribution_strategy(),
        ) {
            let mut rho = CMatrix::zeros((4, 4));
            for class in ErrorClass::ALL {
                let (x, z) = class.bits();
                let state = labeled_resource_state(x, z);
                let w = d.probability_of(class);
                for r in 0..4 {
                    for col in 0..4 {
                        rho[(r, col)] += state.amps[r] * state.amps[col].conj() * w;
                    }
                }
            }
            let out = twirl(&rho).unwrap();
            prop_assert!(out.residual < 1e-9);
            prop_assert!((out.distribution.p_i - d.p_i).abs() < 1e-9);
            prop_assert!((out.distribution.p_x - d.p_x).abs() < 1e-9);
            prop_assert!((out.distribution.p_z - d.p_z).abs() < 1e-9);
            prop_assert!((out.distribution.p_xz - d.p_xz).abs() < 1e-9);
        }
    }
}
