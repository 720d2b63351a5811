//! Mixed-radix registers and the dense linear algebra they live in.
//!
//! A register is an ordered list of sites with dimension 2 (qubit) or
//! 4 (ququart). The first site is the most significant digit of the
//! basis index, so `|x0 x1 ... xk>` maps to `x0*d1*...*dk + ... + xk`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

pub type C64 = Complex64;
pub type CVector = Array1<C64>;
pub type CMatrix = Array2<C64>;

/// Tolerance for unitarity and identity checks on operators.
pub const TOL_UNITARY: f64 = 1e-10;
/// Tolerance for state norms and operator-sum identities.
pub const TOL_NORM: f64 = 1e-12;
/// Tolerance for channel-level (Choi) comparisons.
pub const TOL_CHANNEL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("site dimension {0} unsupported (sites are qubits or ququarts)")]
    BadDimension(u8),
    #[error("matrix is {rows}x{cols}, expected {expect_rows}x{expect_cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        expect_rows: usize,
        expect_cols: usize,
    },
    #[error("operator is not an isometry (deviation {0:.3e})")]
    NotIsometric(f64),
    #[error("state norm deviates from 1 by {0:.3e}")]
    BadNorm(f64),
    #[error("Choi matrix fails {check}: deviation {dev:.3e}")]
    BadChoi { check: &'static str, dev: f64 },
    #[error("site index {site} out of range for {sites}-site register")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("branch operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
}

type Result<T> = std::result::Result<T, HilbertError>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Ordered site dimensions of a register. An empty shape is the scalar
/// space of dimension 1, used for preparation-only channels.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegisterShape {
    dims: Vec<u8>,
}

impl RegisterShape {
    pub fn new(dims: Vec<u8>) -> Result<Self> {
        for &d in &dims {
            if d != 2 && d != 4 {
                return Err(HilbertError::BadDimension(d));
            }
        }
        Ok(RegisterShape { dims })
    }

    pub fn qubit() -> Self {
        RegisterShape { dims: vec![2] }
    }

    pub fn ququart() -> Self {
        RegisterShape { dims: vec![4] }
    }

    pub fn scalar() -> Self {
        RegisterShape { dims: Vec::new() }
    }

    pub fn dims(&self) -> &[u8] {
        &self.dims
    }

    pub fn site_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    /// Stride of each site in the flattened index; first site is most
    /// significant.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1] as usize;
        }
        strides
    }

    pub fn index_of(&self, digits: &[u8]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        let mut idx = 0usize;
        for (i, &v) in digits.iter().enumerate() {
            debug_assert!(v < self.dims[i]);
            idx = idx * self.dims[i] as usize + v as usize;
        }
        idx
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<u8> {
        let mut digits = vec![0u8; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            let d = self.dims[i] as usize;
            digits[i] = (index % d) as u8;
            index /= d;
        }
        digits
    }

    pub fn concat(&self, other: &RegisterShape) -> RegisterShape {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        RegisterShape { dims }
    }
}

/// Pure state over a register.
#[derive(Clone, Debug)]
pub struct DenseState {
    pub shape: RegisterShape,
    pub amps: CVector,
}

impl DenseState {
    /// Computational basis state `|digits>`.
    pub fn basis(shape: RegisterShape, digits: &[u8]) -> Self {
        let mut amps = CVector::zeros(shape.total_dim());
        amps[shape.index_of(digits)] = c(1.0, 0.0);
        DenseState { shape, amps }
    }

    pub fn from_amplitudes(shape: RegisterShape, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != shape.total_dim() {
            return Err(HilbertError::BadShape {
                rows: amps.len(),
                cols: 1,
                expect_rows: shape.total_dim(),
                expect_cols: 1,
            });
        }
        Ok(DenseState {
            shape,
            amps: CVector::from_vec(amps),
        })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let dev = (self.norm() - 1.0).abs();
        if dev > TOL_NORM {
            return Err(HilbertError::BadNorm(dev));
        }
        Ok(())
    }

    pub fn inner(&self, other: &DenseState) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies `gate` to the listed sites; `sites[0]` is the most
    /// significant digit of the gate's own index space.
    pub fn apply_gate(&mut self, gate: &CMatrix, sites: &[usize]) -> Result<()> {
        apply_gate_in_place(&mut self.amps, &self.shape, gate, sites)
    }

    pub fn tensor(&self, other: &DenseState) -> DenseState {
        let shape = self.shape.concat(&other.shape);
        let mut amps = CVector::zeros(shape.total_dim());
        let od = other.shape.total_dim();
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * od + j] = a * b;
            }
        }
        DenseState { shape, amps }
    }

    pub fn max_abs_diff(&self, other: &DenseState) -> f64 {
        max_abs_diff_vec(&self.amps, &other.amps)
    }
}

/// Isometry between two register shapes; square when the shapes have
/// equal total dimension.
#[derive(Clone, Debug)]
pub struct DenseUnitary {
    pub in_shape: RegisterShape,
    pub out_shape: RegisterShape,
    pub mat: CMatrix,
}

impl DenseUnitary {
    pub fn new(in_shape: RegisterShape, out_shape: RegisterShape, mat: CMatrix) -> Result<Self> {
        let (rows, cols) = (mat.nrows(), mat.ncols());
        if rows != out_shape.total_dim() || cols != in_shape.total_dim() {
            return Err(HilbertError::BadShape {
                rows,
                cols,
                expect_rows: out_shape.total_dim(),
                expect_cols: in_shape.total_dim(),
            });
        }
        let gram = dagger(&mat).dot(&mat);
        let dev = max_abs_diff_mat(&gram, &identity(cols));
        if dev > TOL_UNITARY {
            return Err(HilbertError::NotIsometric(dev));
        }
        Ok(DenseUnitary {
            in_shape,
            out_shape,
            mat,
        })
    }

    pub fn square(shape: RegisterShape, mat: CMatrix) -> Result<Self> {
        DenseUnitary::new(shape.clone(), shape, mat)
    }

    pub fn apply(&self, state: &DenseState) -> DenseState {
        DenseState {
            shape: self.out_shape.clone(),
            amps: self.mat.dot(&state.amps),
        }
    }

    /// Rank-one Choi matrix of the isometry channel.
    pub fn choi(&self) -> ChoiMatrix {
        let v = vec_of_operator(&self.mat);
        let n = v.len();
        let mut mat = CMatrix::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = v[i] * v[j].conj();
            }
        }
        ChoiMatrix {
            in_shape: self.in_shape.clone(),
            out_shape: self.out_shape.clone(),
            mat,
        }
    }
}

/// Choi matrix of a completely positive map, normalized so a trace
/// preserving channel has trace equal to the input dimension. Indices
/// are (out, in) pairs in row-major order.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub in_shape: RegisterShape,
    pub out_shape: RegisterShape,
    pub mat: CMatrix,
}

impl ChoiMatrix {
    pub fn zero(in_shape: RegisterShape, out_shape: RegisterShape) -> Self {
        let n = in_shape.total_dim() * out_shape.total_dim();
        ChoiMatrix {
            in_shape,
            out_shape,
            mat: CMatrix::zeros((n, n)),
        }
    }

    pub fn add_assign(&mut self, other: &ChoiMatrix) {
        self.mat += &other.mat;
    }

    pub fn max_abs_diff(&self, other: &ChoiMatrix) -> f64 {
        max_abs_diff_mat(&self.mat, &other.mat)
    }

    pub fn trace(&self) -> C64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Hermiticity, positivity within `TOL_CHANNEL`, and trace equal to
    /// the input dimension (trace preservation).
    pub fn validate(&self) -> Result<()> {
        let herm_dev = max_abs_diff_mat(&self.mat, &dagger(&self.mat));
        if herm_dev > TOL_CHANNEL {
            return Err(HilbertError::BadChoi {
                check: "hermiticity",
                dev: herm_dev,
            });
        }
        let tr = self.trace();
        let tr_dev = (tr - c(self.in_shape.total_dim() as f64, 0.0)).norm();
        if tr_dev > TOL_CHANNEL * self.mat.nrows() as f64 {
            return Err(HilbertError::BadChoi {
                check: "trace",
                dev: tr_dev,
            });
        }
        let min_eig = hermitian_eigenvalues(&self.mat)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -TOL_CHANNEL {
            return Err(HilbertError::BadChoi {
                check: "positivity",
                dev: -min_eig,
            });
        }
        Ok(())
    }

    /// True when the channel is a single isometry: purity tr(C^2) equals
    /// tr(C)^2 within tolerance.
    pub fn is_rank_one(&self, tol: f64) -> bool {
        let tr = self.trace().re;
        let frob: f64 = self.mat.iter().map(|x| x.norm_sqr()).sum();
        (frob - tr * tr).abs() <= tol * tr.max(1.0) * tr.max(1.0)
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::eye(n)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|x| x.conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = CMatrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == c(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn max_abs_diff_mat(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff_vec(a: &CVector, b: &CVector) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Result of a comparison modulo a global phase.
#[derive(Clone, Copy, Debug)]
pub struct PhaseMatch {
    pub phase: C64,
    pub deviation: f64,
}

/// Compares `a` against `phase * b`, with the phase read off the first
/// entry of `b` whose magnitude exceeds `tol` and normalized to unit
/// modulus.
pub fn equal_up_to_global_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> PhaseMatch {
    debug_assert_eq!(a.dim(), b.dim());
    let mut phase = c(1.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        if y.norm() > tol {
            let raw = x / y;
            if raw.norm() > tol {
                phase = raw / raw.norm();
            }
            break;
        }
    }
    let scaled = b.mapv(|v| v * phase);
    PhaseMatch {
        phase,
        deviation: max_abs_diff_mat(a, &scaled),
    }
}

pub fn state_equal_up_to_global_phase(a: &DenseState, b: &DenseState, tol: f64) -> PhaseMatch {
    let am = CMatrix::from_shape_vec((a.amps.len(), 1), a.amps.to_vec()).unwrap();
    let bm = CMatrix::from_shape_vec((b.amps.len(), 1), b.amps.to_vec()).unwrap();
    equal_up_to_global_phase(&am, &bm, tol)
}

fn complement_offsets(shape: &RegisterShape, sites: &[usize]) -> Vec<usize> {
    let strides = shape.strides();
    let rest: Vec<usize> = (0..shape.site_count())
        .filter(|s| !sites.contains(s))
        .collect();
    let mut offsets = vec![0usize];
    for &s in &rest {
        let d = shape.dims()[s] as usize;
        let stride = strides[s];
        let mut next = Vec::with_capacity(offsets.len() * d);
        for &base in &offsets {
            for v in 0..d {
                next.push(base + v * stride);
            }
        }
        offsets = next;
    }
    offsets
}

fn gate_offsets(shape: &RegisterShape, sites: &[usize]) -> Vec<usize> {
    let strides = shape.strides();
    let mut offsets = vec![0usize];
    for &s in sites {
        let d = shape.dims()[s] as usize;
        let stride = strides[s];
        let mut next = Vec::with_capacity(offsets.len() * d);
        for &base in &offsets {
            for v in 0..d {
                next.push(base + v * stride);
            }
        }
        offsets = next;
    }
    offsets
}

/// Applies a gate matrix to `sites` of a flattened state vector.
pub fn apply_gate_in_place(
    amps: &mut CVector,
    shape: &RegisterShape,
    gate: &CMatrix,
    sites: &[usize],
) -> Result<()> {
    for &s in sites {
        if s >= shape.site_count() {
            return Err(HilbertError::SiteOutOfRange {
                site: s,
                sites: shape.site_count(),
            });
        }
    }
    let goffs = gate_offsets(shape, sites);
    let gd = goffs.len();
    if gate.nrows() != gd || gate.ncols() != gd {
        return Err(HilbertError::BadShape {
            rows: gate.nrows(),
            cols: gate.ncols(),
            expect_rows: gd,
            expect_cols: gd,
        });
    }
    let mut gathered = vec![c(0.0, 0.0); gd];
    for base in complement_offsets(shape, sites) {
        for (i, &off) in goffs.iter().enumerate() {
            gathered[i] = amps[base + off];
        }
        for (i, &off) in goffs.iter().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (j, &g) in gathered.iter().enumerate() {
                acc += gate[(i, j)] * g;
            }
            amps[base + off] = acc;
        }
    }
    Ok(())
}

/// Full-register matrix acting as `gate` on `sites` and identity
/// elsewhere.
pub fn embed(gate: &CMatrix, sites: &[usize], shape: &RegisterShape) -> Result<CMatrix> {
    let n = shape.total_dim();
    let mut out = CMatrix::zeros((n, n));
    let mut col = CVector::zeros(n);
    for j in 0..n {
        col.fill(c(0.0, 0.0));
        col[j] = c(1.0, 0.0);
        apply_gate_in_place(&mut col, shape, gate, sites)?;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// Reorders register sites: output site `p` is input site `perm[p]`.
pub fn permute_state(state: &DenseState, perm: &[usize]) -> DenseState {
    let old = &state.shape;
    let new_dims: Vec<u8> = perm.iter().map(|&p| old.dims()[p]).collect();
    let new_shape = RegisterShape::new(new_dims).expect("dims already validated");
    let mut amps = CVector::zeros(new_shape.total_dim());
    for idx in 0..old.total_dim() {
        let digits = old.digits_of(idx);
        let new_digits: Vec<u8> = perm.iter().map(|&p| digits[p]).collect();
        amps[new_shape.index_of(&new_digits)] = state.amps[idx];
    }
    DenseState {
        shape: new_shape,
        amps,
    }
}

/// Row-major flattening with the output index major: `vec(K)[(o, i)] = K[o, i]`.
pub fn vec_of_operator(k: &CMatrix) -> CVector {
    let (rows, cols) = (k.nrows(), k.ncols());
    let mut v = CVector::zeros(rows * cols);
    for o in 0..rows {
        for i in 0..cols {
            v[o * cols + i] = k[(o, i)];
        }
    }
    v
}

/// Total Choi matrix of a set of branch operators plus per-outcome
/// sub-Choi matrices keyed by branch label.
#[derive(Clone, Debug)]
pub struct BranchChoi {
    pub total: ChoiMatrix,
    pub by_label: BTreeMap<String, ChoiMatrix>,
}

/// Accumulates labeled branch operators into a Choi matrix, checking the
/// operators for completeness (trace preservation) within `TOL_CHANNEL`.
/// Branches sharing a label are summed into one sub-channel.
pub fn choi_of_branches(
    branches: &[(String, CMatrix)],
    in_shape: &RegisterShape,
    out_shape: &RegisterShape,
) -> Result<BranchChoi> {
    let d_in = in_shape.total_dim();
    let d_out = out_shape.total_dim();
    let mut completeness = CMatrix::zeros((d_in, d_in));
    let mut total = ChoiMatrix::zero(in_shape.clone(), out_shape.clone());
    let mut by_label: BTreeMap<String, ChoiMatrix> = BTreeMap::new();
    for (label, k) in branches {
        if k.nrows() != d_out || k.ncols() != d_in {
            return Err(HilbertError::BadShape {
                rows: k.nrows(),
                cols: k.ncols(),
                expect_rows: d_out,
                expect_cols: d_in,
            });
        }
        completeness += &dagger(k).dot(k);
        let v = vec_of_operator(k);
        let sub = by_label
            .entry(label.clone())
            .or_insert_with(|| ChoiMatrix::zero(in_shape.clone(), out_shape.clone()));
        for i in 0..v.len() {
            for j in 0..v.len() {
                let term = v[i] * v[j].conj();
                total.mat[(i, j)] += term;
                sub.mat[(i, j)] += term;
            }
        }
    }
    let dev = max_abs_diff_mat(&completeness, &identity(d_in));
    if dev > TOL_CHANNEL {
        return Err(HilbertError::NotTracePreserving(dev));
    }
    Ok(BranchChoi { total, by_label })
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let phi = apq / apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let (s, co) = theta.sin_cos();
                // Columns: A <- A J with J[p,p]=c, J[p,q]=-s*phi, J[q,p]=s*conj(phi), J[q,q]=c.
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * co + arq * s * phi.conj();
                    a[(r, q)] = -arp * s * phi + arq * co;
                }
                // Rows: A <- J^dagger A.
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = apr * co + aqr * s * phi;
                    a[(q, r)] = -apr * s * phi.conj() + aqr * co;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)].re).collect()
}
