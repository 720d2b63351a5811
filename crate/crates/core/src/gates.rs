//! Catalog of concrete operators: qubit and ququart Paulis and
//! Cliffords, the non-Clifford qubit gates T/CS/CCX, hybrid CNOTs, the
//! fusion isometries F and G, and the resource states they generate.
//!
//! Ququart conventions: X|x> = |(x+1) mod 4>, Z|x> = i^x |x>,
//! H|x> = (1/2) sum_y i^{xy} |y>, S|x> = w^{x^2} |x> with w = exp(i pi/4),
//! CNOT|x,y> = |x, (x+y) mod 4>.

use crate::hilbert::{c, CMatrix, DenseState, DenseUnitary, RegisterShape, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// The eighth root of unity exp(i pi / 4).
pub fn omega() -> C64 {
    c(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
}

fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GateError {
    #[error("gate {name} is not defined on wire dimensions {dims:?}")]
    UnsupportedDims { name: GateName, dims: Vec<u8> },
    #[error("fusion gate {name} supports only powers 1 and -1, got {power}")]
    FusionPower { name: GateName, power: i64 },
    #[error("unknown gate name {0:?}")]
    UnknownName(String),
}

/// Closed set of gate identifiers. Semantics depend on the dimensions
/// of the wires the gate is applied to; F/FDG/G/GDG are the only
/// shape-changing entries.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum GateName {
    I,
    X,
    Z,
    H,
    S,
    T,
    Cnot,
    Cz,
    Cs,
    Swap,
    Ccx,
    F,
    Fdg,
    G,
    Gdg,
    Omega,
    Xh2,
    Zds2,
    Hsh,
}

impl GateName {
    pub const ALL: [GateName; 19] = [
        GateName::I,
        GateName::X,
        GateName::Z,
        GateName::H,
        GateName::S,
        GateName::T,
        GateName::Cnot,
        GateName::Cz,
        GateName::Cs,
        GateName::Swap,
        GateName::Ccx,
        GateName::F,
        GateName::Fdg,
        GateName::G,
        GateName::Gdg,
        GateName::Omega,
        GateName::Xh2,
        GateName::Zds2,
        GateName::Hsh,
    ];

    /// Canonical spelling used by the circuit file format.
    pub fn canonical(&self) -> &'static str {
        match self {
            GateName::I => "I",
            GateName::X => "X",
            GateName::Z => "Z",
            GateName::H => "H",
            GateName::S => "S",
            GateName::T => "T",
            GateName::Cnot => "CNOT",
            GateName::Cz => "CZ",
            GateName::Cs => "CS",
            GateName::Swap => "SWAP",
            GateName::Ccx => "CCX",
            GateName::F => "F",
            GateName::Fdg => "FDG",
            GateName::G => "G",
            GateName::Gdg => "GDG",
            GateName::Omega => "OMEGA",
            GateName::Xh2 => "XH2",
            GateName::Zds2 => "ZDS2",
            GateName::Hsh => "HSH",
        }
    }

    /// True for the shape-changing fusion entries, which the circuit IR
    /// reserves for fuse/split ops.
    pub fn is_fusion(&self) -> bool {
        matches!(
            self,
            GateName::F | GateName::Fdg | GateName::G | GateName::Gdg
        )
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

impl FromStr for GateName {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        GateName::ALL
            .iter()
            .copied()
            .find(|g| g.canonical() == upper)
            .ok_or_else(|| GateError::UnknownName(s.to_string()))
    }
}

impl Serialize for GateName {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.serialize_str(self.canonical())
    }
}

impl<'de> Deserialize<'de> for GateName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A gate with an integer power on wires of the given dimensions.
/// Negative powers are daggers; powers are reduced modulo the operator
/// order before the matrix is built.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GateInstance {
    pub name: GateName,
    pub power: i64,
    pub dims: Vec<u8>,
}

impl GateInstance {
    pub fn new(name: GateName, power: i64, dims: Vec<u8>) -> Self {
        GateInstance { name, power, dims }
    }

    /// Order of the operator: qubit X/Z/H and all plain CNOT/CZ/SWAP/CCX
    /// forms on qubits are order 2, ququart X/Z/H/CNOT/CZ are order 4,
    /// S is order 4 on qubits and 8 on ququarts.
    pub fn order(&self) -> Result<u32, GateError> {
        use GateName::*;
        let err = || GateError::UnsupportedDims {
            name: self.name,
            dims: self.dims.clone(),
        };
        let ord = match (self.name, self.dims.as_slice()) {
            (I, [2]) | (I, [4]) => 1,
            (X | Z | H, [2]) => 2,
            (X | Z | H, [4]) => 4,
            (S, [2]) => 4,
            (S, [4]) => 8,
            (T, [2]) => 8,
            (Hsh, [2]) => 4,
            (Xh2 | Zds2, [4]) => 2,
            (Omega, [2]) | (Omega, [4]) => 8,
            (Cnot, [2, 2]) => 2,
            (Cnot, [4, 4]) => 4,
            (Cnot, [4, 2]) | (Cnot, [2, 4]) => 2,
            (Cz, [2, 2]) => 2,
            (Cz, [4, 4]) => 4,
            (Cs, [2, 2]) => 4,
            (Swap, [2, 2]) => 2,
            (Ccx, [2, 2, 2]) => 2,
            _ => return Err(err()),
        };
        Ok(ord)
    }

    pub fn matrix(&self) -> Result<DenseUnitary, GateError> {
        if self.name.is_fusion() {
            return self.fusion_matrix();
        }
        let base = base_matrix(self.name, &self.dims)?;
        let k = self.power.rem_euclid(self.order()? as i64);
        let n = base.nrows();
        let mut m = crate::hilbert::identity(n);
        for _ in 0..k {
            m = base.dot(&m);
        }
        let shape = RegisterShape::new(self.dims.clone()).expect("dims validated by order()");
        Ok(DenseUnitary::square(shape, m).expect("catalog gates are unitary"))
    }

    fn fusion_matrix(&self) -> Result<DenseUnitary, GateError> {
        use GateName::*;
        match (self.name, self.power) {
            (F, 1) | (Fdg, -1) => Ok(fusion_map(FuseDirection::Fuse)),
            (F, -1) | (Fdg, 1) => Ok(fusion_map(FuseDirection::Split)),
            (G, 1) | (Gdg, -1) => Ok(g_fusion_map(FuseDirection::Fuse)),
            (G, -1) | (Gdg, 1) => Ok(g_fusion_map(FuseDirection::Split)),
            _ => Err(GateError::FusionPower {
                name: self.name,
                power: self.power,
            }),
        }
    }
}

fn mat(rows: usize, entries: Vec<C64>) -> CMatrix {
    CMatrix::from_shape_vec((rows, entries.len() / rows), entries).unwrap()
}

fn diag(entries: &[C64]) -> CMatrix {
    let n = entries.len();
    let mut m = CMatrix::zeros((n, n));
    for (i, &e) in entries.iter().enumerate() {
        m[(i, i)] = e;
    }
    m
}

fn permutation(n: usize, map: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros((n, n));
    for x in 0..n {
        m[(map(x), x)] = c(1.0, 0.0);
    }
    m
}

fn base_matrix(name: GateName, dims: &[u8]) -> Result<CMatrix, GateError> {
    use GateName::*;
    let err = || GateError::UnsupportedDims {
        name,
        dims: dims.to_vec(),
    };
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let z = c(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = match (name, dims) {
        (I, [d]) if *d == 2 || *d == 4 => crate::hilbert::identity(*d as usize),
        (X, [2]) => mat(2, vec![z, one, one, z]),
        (Z, [2]) => diag(&[one, -one]),
        (H, [2]) => mat(2, vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        (S, [2]) => diag(&[one, i]),
        (T, [2]) => diag(&[one, omega()]),
        (Hsh, [2]) => {
            let hm = base_matrix(H, &[2])?;
            let sm = base_matrix(S, &[2])?;
            hm.dot(&sm).dot(&hm)
        }
        (X, [4]) => permutation(4, |x| (x + 1) % 4),
        (Z, [4]) => diag(&[one, i, -one, -i]),
        (H, [4]) => {
            let mut m = CMatrix::zeros((4, 4));
            for x in 0..4i64 {
                for y in 0..4i64 {
                    m[(y as usize, x as usize)] = i_pow(x * y) * c(0.5, 0.0);
                }
            }
            m
        }
        (S, [4]) => diag(&[one, omega(), -one, omega()]),
        (Xh2, [4]) => {
            let xm = base_matrix(X, &[4])?;
            let hm = base_matrix(H, &[4])?;
            xm.dot(&hm).dot(&hm)
        }
        (Zds2, [4]) => {
            let zm = base_matrix(Z, &[4])?;
            let sm = base_matrix(S, &[4])?;
            crate::hilbert::dagger(&zm).dot(&sm).dot(&sm)
        }
        (Omega, [d]) if *d == 2 || *d == 4 => {
            crate::hilbert::identity(*d as usize).mapv(|x| x * omega())
        }
        (Cnot, [2, 2]) => permutation(4, |xy| {
            let (x, y) = (xy / 2, xy % 2);
            x * 2 + (y ^ x)
        }),
        (Cnot, [4, 4]) => permutation(16, |xy| {
            let (x, y) = (xy / 4, xy % 4);
            x * 4 + (x + y) % 4
        }),
        (Cnot, [4, 2]) | (Cnot, [2, 4]) => {
            let u = hybrid_cnot(dims[0], dims[1]).map_err(|_| err())?;
            u.mat
        }
        (Cz, [2, 2]) => diag(&[one, one, one, -one]),
        (Cz, [4, 4]) => {
            // sum_x |x><x| (x) Z^x, diagonal i^{xy}.
            let mut d = Vec::with_capacity(16);
            for x in 0..4i64 {
                for y in 0..4i64 {
                    d.push(i_pow(x * y));
                }
            }
            diag(&d)
        }
        (Cs, [2, 2]) => diag(&[one, one, one, i]),
        (Swap, [2, 2]) => permutation(4, |xy| (xy % 2) * 2 + xy / 2),
        (Ccx, [2, 2, 2]) => permutation(8, |xyz| if xyz >= 6 { 6 + (7 - xyz) } else { xyz }),
        _ => return Err(err()),
    };
    Ok(m)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FuseDirection {
    Fuse,
    Split,
}

/// Fusion isometry between a qubit pair and one ququart. Fuse maps
/// |x>|y> (x the first wire) to |2y + x>; split is its inverse, giving
/// |x mod 2> then |floor(x/2)>.
pub fn fusion_map(direction: FuseDirection) -> DenseUnitary {
    let pair = RegisterShape::new(vec![2, 2]).unwrap();
    let quart = RegisterShape::ququart();
    // Index 2x + y in the pair basis maps to 2y + x in the ququart basis.
    let fuse = permutation(4, |xy| (xy % 2) * 2 + xy / 2);
    match direction {
        FuseDirection::Fuse => DenseUnitary::new(pair, quart, fuse).unwrap(),
        FuseDirection::Split => {
            let split = crate::hilbert::dagger(&fuse);
            DenseUnitary::new(quart, pair, split).unwrap()
        }
    }
}

/// Alternate fusion isometry G: SWAP, then H on each qubit, then F,
/// then ququart H dagger. G maps between X eigenstates where F maps
/// between Z eigenstates.
pub fn g_fusion_map(direction: FuseDirection) -> DenseUnitary {
    let pair = RegisterShape::new(vec![2, 2]).unwrap();
    let quart = RegisterShape::ququart();
    let h2 = base_matrix(GateName::H, &[2]).unwrap();
    let h4 = base_matrix(GateName::H, &[4]).unwrap();
    let swap = base_matrix(GateName::Swap, &[2, 2]).unwrap();
    let f = fusion_map(FuseDirection::Fuse);
    let g = crate::hilbert::dagger(&h4)
        .dot(&f.mat)
        .dot(&crate::hilbert::kron(&h2, &h2))
        .dot(&swap);
    match direction {
        FuseDirection::Fuse => DenseUnitary::new(pair, quart, g).unwrap(),
        FuseDirection::Split => {
            let gdg = crate::hilbert::dagger(&g);
            DenseUnitary::new(quart, pair, gdg).unwrap()
        }
    }
}

/// Hybrid CNOT between a qubit and a ququart, built from its defining
/// fusion-conjugated composite: the ququart is split, a qubit CNOT
/// couples the appropriate bit, and the pair is fused back.
/// Ququart control, qubit target: |x>|b> -> |x>|b xor (x mod 2)>.
/// Qubit control, ququart target: |b>|x> -> |b>|(x + 2b) mod 4>.
pub fn hybrid_cnot(control_dim: u8, target_dim: u8) -> Result<DenseUnitary, GateError> {
    let cnot2 = base_matrix(GateName::Cnot, &[2, 2])?;
    let f = fusion_map(FuseDirection::Fuse).mat;
    let fdg = fusion_map(FuseDirection::Split).mat;
    let id2 = crate::hilbert::identity(2);
    let three = RegisterShape::new(vec![2, 2, 2]).unwrap();
    match (control_dim, target_dim) {
        (4, 2) => {
            // Sites after split: (low, high, qubit); CNOT low -> qubit.
            let mid = crate::hilbert::embed(&cnot2, &[0, 2], &three).unwrap();
            let m = crate::hilbert::kron(&f, &id2)
                .dot(&mid)
                .dot(&crate::hilbert::kron(&fdg, &id2));
            let shape = RegisterShape::new(vec![4, 2]).unwrap();
            Ok(DenseUnitary::square(shape, m).unwrap())
        }
        (2, 4) => {
            // Sites after split: (qubit, low, high); CNOT qubit -> high.
            let mid = crate::hilbert::embed(&cnot2, &[0, 2], &three).unwrap();
            let m = crate::hilbert::kron(&id2, &f)
                .dot(&mid)
                .dot(&crate::hilbert::kron(&id2, &fdg));
            let shape = RegisterShape::new(vec![2, 4]).unwrap();
            Ok(DenseUnitary::square(shape, m).unwrap())
        }
        _ => Err(GateError::UnsupportedDims {
            name: GateName::Cnot,
            dims: vec![control_dim, target_dim],
        }),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ResourceKind {
    F,
    G,
}

/// Ququart resource states: |F> = (|0> + |1>)/sqrt(2), the fusion of
/// H|0> with |0>; |G> is the G-fusion of the same qubit pair.
pub fn resource_state(which: ResourceKind) -> DenseState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pair = DenseState::from_amplitudes(
        RegisterShape::new(vec![2, 2]).unwrap(),
        vec![c(h, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, 0.0)],
    )
    .unwrap();
    match which {
        ResourceKind::F => fusion_map(FuseDirection::Fuse).apply(&pair),
        ResourceKind::G => g_fusion_map(FuseDirection::Fuse).apply(&pair),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{dagger, identity, max_abs_diff_mat, RegisterShape};
    use proptest::prelude::*;

    fn m(name: GateName, power: i64, dims: &[u8]) -> CMatrix {
        GateInstance::new(name, power, dims.to_vec())
            .matrix()
            .unwrap()
            .mat
    }

    #[test]
    fn ququart_clock_and_shift() {
        let z = m(GateName::Z, 1, &[4]);
        assert_eq!(z[(1, 1)], c(0.0, 1.0));
        assert_eq!(z[(2, 2)], c(-1.0, 0.0));
        assert_eq!(z[(3, 3)], c(0.0, -1.0));
        let x = m(GateName::X, 1, &[4]);
        assert_eq!(x[(0, 3)], c(1.0, 0.0));
        assert_eq!(x[(1, 0)], c(1.0, 0.0));
    }

    #[test]
    fn ququart_s_diagonal_wraps_at_nine() {
        // w^{x^2} for x = 3 is w^9 = w.
        let s = m(GateName::S, 1, &[4]);
        assert!((s[(1, 1)] - omega()).norm() < 1e-15);
        assert!((s[(2, 2)] + c(1.0, 0.0)).norm() < 1e-15);
        assert!((s[(3, 3)] - omega()).norm() < 1e-15);
    }

    #[test]
    fn pauli_algebra_on_ququart() {
        let x = m(GateName::X, 1, &[4]);
        let z = m(GateName::Z, 1, &[4]);
        let zx = z.dot(&x);
        let ixz = x.dot(&z).mapv(|v| v * c(0.0, 1.0));
        assert!(max_abs_diff_mat(&zx, &ixz) < 1e-12);
        let x4 = m(GateName::X, 4, &[4]);
        let z4 = m(GateName::Z, 4, &[4]);
        assert!(max_abs_diff_mat(&x4, &identity(4)) < 1e-12);
        assert!(max_abs_diff_mat(&z4, &identity(4)) < 1e-12);
    }

    #[test]
    fn ququart_h_is_order_four_and_squares_to_negation() {
        let h = m(GateName::H, 1, &[4]);
        let h2 = h.dot(&h);
        let neg = super::permutation(4, |x| (4 - x) % 4);
        assert!(max_abs_diff_mat(&h2, &neg) < 1e-12);
        let h4 = h2.dot(&h2);
        assert!(max_abs_diff_mat(&h4, &identity(4)) < 1e-12);
    }

    #[test]
    fn s_conjugation_of_shift_carries_omega() {
        let s = m(GateName::S, 1, &[4]);
        let x = m(GateName::X, 1, &[4]);
        let z = m(GateName::Z, 1, &[4]);
        let lhs = s.dot(&x).dot(&dagger(&s));
        let rhs = x.dot(&z).mapv(|v| v * omega());
        assert!(max_abs_diff_mat(&lhs, &rhs) < 1e-12);
        let sz = s.dot(&z).dot(&dagger(&s));
        assert!(max_abs_diff_mat(&sz, &z) < 1e-12);
    }

    #[test]
    fn macro_gates_expand_to_products() {
        let xh2 = m(GateName::Xh2, 1, &[4]);
        // X H^2 sends |x> to |(1 - x) mod 4>.
        let expect = super::permutation(4, |x| (5 - x) % 4);
        assert!(max_abs_diff_mat(&xh2, &expect) < 1e-12);
        let zds2 = m(GateName::Zds2, 1, &[4]);
        let expect = diag(&[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)]);
        assert!(max_abs_diff_mat(&zds2, &expect) < 1e-12);
        let hsh = m(GateName::Hsh, 2, &[2]);
        let x = m(GateName::X, 1, &[2]);
        assert!(max_abs_diff_mat(&hsh, &x) < 1e-12);
    }

    #[test]
    fn fuse_and_split_are_mutually_inverse() {
        let fuse = fusion_map(FuseDirection::Fuse);
        let split = fusion_map(FuseDirection::Split);
        let prod = fuse.mat.dot(&split.mat);
        assert!(max_abs_diff_mat(&prod, &identity(4)) < 1e-12);
        let prod = split.mat.dot(&fuse.mat);
        assert!(max_abs_diff_mat(&prod, &identity(4)) < 1e-12);
    }

    #[test]
    fn fuse_examples() {
        let fuse = fusion_map(FuseDirection::Fuse).mat;
        let pair = RegisterShape::new(vec![2, 2]).unwrap();
        // |1>|1> -> |3>, |0>|0> -> |0>, |1>|0> -> |1>.
        assert_eq!(fuse[(3, pair.index_of(&[1, 1]))], c(1.0, 0.0));
        assert_eq!(fuse[(0, pair.index_of(&[0, 0]))], c(1.0, 0.0));
        assert_eq!(fuse[(1, pair.index_of(&[1, 0]))], c(1.0, 0.0));
        let split = fusion_map(FuseDirection::Split).mat;
        // |2> -> |0>|1>.
        assert_eq!(split[(pair.index_of(&[0, 1]), 2)], c(1.0, 0.0));
    }

    #[test]
    fn hybrid_cnot_examples() {
        let c42 = hybrid_cnot(4, 2).unwrap();
        let s42 = RegisterShape::new(vec![4, 2]).unwrap();
        assert_eq!(
            c42.mat[(s42.index_of(&[1, 1]), s42.index_of(&[1, 0]))],
            c(1.0, 0.0)
        );
        assert_eq!(
            c42.mat[(s42.index_of(&[0, 0]), s42.index_of(&[0, 0]))],
            c(1.0, 0.0)
        );
        assert_eq!(
            c42.mat[(s42.index_of(&[3, 0]), s42.index_of(&[3, 1]))],
            c(1.0, 0.0)
        );
        let c24 = hybrid_cnot(2, 4).unwrap();
        let s24 = RegisterShape::new(vec![2, 4]).unwrap();
        assert_eq!(
            c24.mat[(s24.index_of(&[1, 3]), s24.index_of(&[1, 1]))],
            c(1.0, 0.0)
        );
        assert_eq!(
            c24.mat[(s24.index_of(&[0, 2]), s24.index_of(&[0, 2]))],
            c(1.0, 0.0)
        );
        assert!(hybrid_cnot(2, 2).is_err());
    }

    #[test]
    fn hybrid_cnot_matches_catalog_dispatch() {
        let via_catalog = m(GateName::Cnot, 1, &[4, 2]);
        let direct = hybrid_cnot(4, 2).unwrap().mat;
        assert!(max_abs_diff_mat(&via_catalog, &direct) < 1e-15);
    }

    #[test]
    fn resource_states() {
        let f = resource_state(ResourceKind::F);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.amps[0] - c(h, 0.0)).norm() < 1e-15);
        assert!((f.amps[1] - c(h, 0.0)).norm() < 1e-15);
        assert!(f.amps[2].norm() < 1e-15);
        assert!((f.norm() - 1.0).abs() < 1e-12);
        let g = resource_state(ResourceKind::G);
        assert!((g.norm() - 1.0).abs() < 1e-12);
        // |G> is the ququart H dagger applied to |F>, exactly.
        let hdg = dagger(&m(GateName::H, 1, &[4]));
        let expect = hdg.dot(&f.amps);
        for k in 0..4 {
            assert!((g.amps[k] - expect[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn stabilizers_fix_resource_state_exactly() {
        let f = resource_state(ResourceKind::F);
        for name in [GateName::Xh2, GateName::Zds2] {
            let u = m(name, 1, &[4]);
            let fixed = u.dot(&f.amps);
            for k in 0..4 {
                assert!((fixed[k] - f.amps[k]).norm() < 1e-12, "{name} moves |F>");
            }
        }
    }

    #[test]
    fn fusion_names_reject_other_powers() {
        let g = GateInstance::new(GateName::F, 2, vec![]);
        assert!(matches!(
            g.matrix(),
            Err(GateError::FusionPower { .. })
        ));
        let split = GateInstance::new(GateName::Fdg, 1, vec![]).matrix().unwrap();
        assert_eq!(split.in_shape.dims(), &[4]);
        assert_eq!(split.out_shape.dims(), &[2, 2]);
    }

    #[test]
    fn name_spellings_round_trip() {
        for g in GateName::ALL {
            assert_eq!(g.canonical().parse::<GateName>().unwrap(), g);
            assert_eq!(
                g.canonical().to_ascii_lowercase().parse::<GateName>().unwrap(),
                g
            );
        }
        assert!("Y".parse::<GateName>().is_err());
    }

    #[test]
    fn invalid_dim_combinations_rejected() {
        assert!(GateInstance::new(GateName::T, 1, vec![4]).matrix().is_err());
        assert!(GateInstance::new(GateName::Hsh, 1, vec![4]).matrix().is_err());
        assert!(GateInstance::new(GateName::Xh2, 1, vec![2]).matrix().is_err());
        assert!(GateInstance::new(GateName::Cs, 1, vec![4, 4]).matrix().is_err());
        assert!(GateInstance::new(GateName::Swap, 1, vec![4, 4]).matrix().is_err());
    }

    fn instantiable() -> Vec<GateInstance> {
        let mut out = Vec::new();
        for name in GateName::ALL {
            if name.is_fusion() {
                continue;
            }
            for dims in [
                vec![2],
                vec![4],
                vec![2, 2],
                vec![4, 4],
                vec![4, 2],
                vec![2, 4],
                vec![2, 2, 2],
            ] {
                let g = GateInstance::new(name, 1, dims);
                if g.order().is_ok() {
                    out.push(g);
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn every_instance_power_is_unitary(idx in 0usize..26, power in -9i64..9) {
            let all = instantiable();
            let g = &all[idx % all.len()];
            let powered = GateInstance::new(g.name, power, g.dims.clone());
            // DenseUnitary construction checks unitarity at 1e-10.
            powered.matrix().unwrap();
        }

        #[test]
        fn powers_compose_additively(idx in 0usize..26, a in -5i64..5, b in -5i64..5) {
            let all = instantiable();
            let g = &all[idx % all.len()];
            let ga = GateInstance::new(g.name, a, g.dims.clone()).matrix().unwrap().mat;
            let gb = GateInstance::new(g.name, b, g.dims.clone()).matrix().unwrap().mat;
            let gab = GateInstance::new(g.name, a + b, g.dims.clone()).matrix().unwrap().mat;
            prop_assert!(max_abs_diff_mat(&ga.dot(&gb), &gab) < 1e-10);
        }

        #[test]
        fn order_is_a_period(idx in 0usize..26) {
            let all = instantiable();
            let g = &all[idx % all.len()];
            let ord = g.order().unwrap() as i64;
            let m = GateInstance::new(g.name, ord, g.dims.clone()).matrix().unwrap().mat;
            let n = m.nrows();
            prop_assert!(max_abs_diff_mat(&m, &identity(n)) < 1e-10);
        }
    }
}
