//! Spin-j irreducible representations of su(2) in the basis
//! e1 = (1/2)[[0,1],[-1,0]], e2 = (1/2)[[0,i],[i,0]], e3 = (1/2)[[i,0],[0,-i]].
//!
//! With the usual angular momentum matrices J_x, J_y, J_z in the basis of
//! descending magnetic quantum number, the generators are g1 = iJ_y, g2 = iJ_x,
//! g3 = iJ_z. They satisfy [g1,g2] = g3 cyclically and sum_i g_i^2 = -j(j+1) I.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest spin accepted; matrices stay small enough for dense arithmetic.
pub const MAX_TWO_J: u32 = 200;

/// A nonnegative half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Spin(u32);

impl Spin {
    pub fn from_twice(two_j: u32) -> Result<Self> {
        if two_j > MAX_TWO_J {
            return Err(Error::Domain(format!(
                "spin {} too large",
                two_j as f64 / 2.0
            )));
        }
        Ok(Spin(two_j))
    }

    pub fn new(j: f64) -> Result<Self> {
        let t = 2.0 * j;
        if !t.is_finite() || t < 0.0 || (t - t.round()).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "{j} is not a nonnegative half-integer"
            )));
        }
        Self::from_twice(t.round() as u32)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Casimir eigenvalue j(j+1).
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }
}

impl TryFrom<f64> for Spin {
    type Error = Error;
    fn try_from(j: f64) -> Result<Self> {
        Spin::new(j)
    }
}

impl From<Spin> for f64 {
    fn from(s: Spin) -> f64 {
        s.value()
    }
}

/// Generators of one irreducible representation.
#[derive(Debug, Clone)]
pub struct Irrep {
    pub spin: Spin,
    pub g: [CMatrix; 3],
    /// Casimir scalar j(j+1).
    pub xi: f64,
    /// Aggregate generator g1 + g2 + g3.
    pub cal_e: CMatrix,
}

impl Irrep {
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    pub fn j(&self) -> f64 {
        self.spin.value()
    }
}

/// Builds the spin-`j` representation.
pub fn su2_generators(j: f64) -> Result<Irrep> {
    Ok(irrep(Spin::new(j)?))
}

pub fn irrep(spin: Spin) -> Irrep {
    let n = spin.dim();
    let j = spin.value();
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut jx = CMatrix::from_element(n, n, zero);
    let mut jy = CMatrix::from_element(n, n, zero);
    let mut jz = CMatrix::from_element(n, n, zero);
    for a in 0..n {
        let m = j - a as f64;
        jz[(a, a)] = Complex64::new(m, 0.0);
        if a > 0 {
            // <m+1| J+ |m> sits at row a-1, column a.
            let c = (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();
            jx[(a - 1, a)] = Complex64::new(0.5 * c, 0.0);
            jx[(a, a - 1)] = Complex64::new(0.5 * c, 0.0);
            jy[(a - 1, a)] = Complex64::new(0.0, -0.5 * c);
            jy[(a, a - 1)] = Complex64::new(0.0, 0.5 * c);
        }
    }
    let g1 = jy * i;
    let g2 = jx * i;
    let g3 = jz * i;
    let cal_e = &g1 + &g2 + &g3;
    Irrep {
        spin,
        g: [g1, g2, g3],
        xi: spin.casimir(),
        cal_e,
    }
}

/// Frobenius norm of sum_i g_i^2 + j(j+1) I.
pub fn casimir_residual(r: &Irrep) -> f64 {
    let n = r.dim();
    let mut s = CMatrix::identity(n, n) * Complex64::new(r.xi, 0.0);
    for g in &r.g {
        s += g * g;
    }
    s.norm()
}

/// Largest Frobenius residual among [g1,g2]-g3, [g2,g3]-g1, [g3,g1]-g2.
pub fn commutator_residual(r: &Irrep) -> f64 {
    let [g1, g2, g3] = &r.g;
    let c = |a: &CMatrix, b: &CMatrix, t: &CMatrix| (a * b - b * a - t).norm();
    c(g1, g2, g3).max(c(g2, g3, g1)).max(c(g3, g1, g2))
}

/// Largest Frobenius norm of g + g^dagger over the generators.
pub fn skew_hermitian_residual(r: &Irrep) -> f64 {
    r.g.iter()
        .map(|g| (g + g.adjoint()).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of cal_e, returned as the real numbers lambda with cal_e v = i lambda v, ascending.
pub fn cal_e_spectrum(r: &Irrep) -> Vec<f64> {
    let h = &r.cal_e * Complex64::new(0.0, -1.0);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Tr exp(theta * cal_e), via the Hermitian eigendecomposition of -i cal_e.
pub fn trace_exp_cal_e(r: &Irrep, theta: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    cal_e_spectrum(r)
        .into_iter()
        .map(|l| (theta * i * l).exp())
        .sum()
}

/// Matrix exponential by Taylor series with scaling and squaring.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = a.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a / Complex64::new(2f64.powi(s), 0.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &b / Complex64::new(k as f64, 0.0);
        sum += &term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// One Wilson factor Tr_{j+} exp(-pi q sk cal_e) + Tr_{j-} exp(pi q sk cal_e).
///
/// The exponent is taken as a real multiple of the skew-Hermitian cal_e, so each
/// trace is a sum of unimodular phases.
pub fn wilson_factor(j_plus: Spin, j_minus: Spin, q: f64, sk: f64) -> Complex64 {
    let theta = std::f64::consts::PI * q * sk;
    trace_exp_cal_e(&irrep(j_plus), Complex64::new(-theta, 0.0))
        + trace_exp_cal_e(&irrep(j_minus), Complex64::new(theta, 0.0))
}
