//! Dirac matrices and small 2x2 / 4x4 block helpers.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type C = Complex64;
pub type M2 = Matrix2<C>;
pub type M4 = Matrix4<C>;

const O: C = C::new(0.0, 0.0);
const P: C = C::new(1.0, 0.0);
const N: C = C::new(-1.0, 0.0);
const I: C = C::new(0.0, 1.0);
const NI: C = C::new(0.0, -1.0);

/// The four Dirac matrices. Gamma^0, Gamma^1, Gamma^2 are the fixed
/// representation of the reduced radial problem; Gamma^3 is one Hermitian
/// completion satisfying the anticommutation relations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracMatrices {
    pub gamma0: M4,
    pub gamma1: M4,
    pub gamma2: M4,
    pub gamma3: M4,
}

impl Default for DiracMatrices {
    fn default() -> Self {
        Self::new()
    }
}

impl DiracMatrices {
    pub fn new() -> Self {
        #[rustfmt::skip]
        let gamma0 = M4::new(
            O, O, NI, O,
            O, O, O, I,
            I, O, O, O,
            O, NI, O, O,
        );
        let gamma1 = gamma1();
        #[rustfmt::skip]
        let gamma2 = M4::new(
            O, O, O, P,
            O, O, N, O,
            O, N, O, O,
            P, O, O, O,
        );
        #[rustfmt::skip]
        let gamma3 = M4::new(
            O, O, O, NI,
            O, O, NI, O,
            O, I, O, O,
            I, O, O, O,
        );
        Self { gamma0, gamma1, gamma2, gamma3 }
    }

    pub fn all(&self) -> [&M4; 4] {
        [&self.gamma0, &self.gamma1, &self.gamma2, &self.gamma3]
    }
}

/// Gamma^1 = diag(1, 1, -1, -1).
pub fn gamma1() -> M4 {
    M4::from_diagonal(&nalgebra::Vector4::new(P, P, N, N))
}

/// e^{i Gamma^1 phi}.
pub fn exp_i_gamma1(phi: f64) -> M4 {
    let e = C::new(0.0, phi).exp();
    M4::from_diagonal(&nalgebra::Vector4::new(e, e, e.conj(), e.conj()))
}

/// Conjugation by Gamma^1 flips the sign of the off-diagonal blocks.
pub fn gamma1_conj(m: &M4) -> M4 {
    let mut out = *m;
    for i in 0..4 {
        for j in 0..4 {
            if (i < 2) != (j < 2) {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

/// Block k in 1..=4 (row-major: 1 upper-left, 2 upper-right, 3 lower-left, 4 lower-right).
pub fn block(m: &M4, k: usize) -> M2 {
    let (r, c) = match k {
        1 => (0, 0),
        2 => (0, 2),
        3 => (2, 0),
        4 => (2, 2),
        _ => panic!("block index {k} out of range"),
    };
    M2::new(m[(r, c)], m[(r, c + 1)], m[(r + 1, c)], m[(r + 1, c + 1)])
}

pub fn from_blocks(b1: &M2, b2: &M2, b3: &M2, b4: &M2) -> M4 {
    let mut m = M4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = b1[(i, j)];
            m[(i, j + 2)] = b2[(i, j)];
            m[(i + 2, j)] = b3[(i, j)];
            m[(i + 2, j + 2)] = b4[(i, j)];
        }
    }
    m
}

/// [[0, 1], [-1, 0]]
pub fn antisym2() -> M2 {
    M2::new(O, P, N, O)
}

/// Largest entry modulus.
pub fn max_abs4(m: &M4) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn max_abs2(m: &M2) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
