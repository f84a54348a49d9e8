//! Finite-dimensional vertex algebras with faithful states and their GNS data.
//!
//! An algebra is a *-closed span of square complex matrices containing the
//! identity, together with a density-matrix state `x -> tr(rho x)`. The GNS
//! inner product `<a, b> = state(a* b)` (linear in the second slot) turns
//! the algebra into the representation space itself; the cyclic vector is
//! the class of the identity and the defect space is its orthogonal
//! complement.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Validation tolerance for all algebra-level defects.
pub const ALG_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("group algebra order must be at least 2, got {0}")]
    BadOrder(usize),
    #[error("state is not unital: trace(rho) = {0}")]
    NonUnitalState(f64),
    #[error("density matrix is not Hermitian (defect {0:.3e})")]
    NonHermitianDensity(f64),
    #[error("state is not faithful: ker contains a nonzero element")]
    NotFaithful,
    #[error("declared span is not closed under products and adjoints (defect {0:.3e})")]
    NotStarClosed(f64),
    #[error("element has wrong dimensions: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("element does not lie in the algebra span (defect {0:.3e})")]
    NotInSpan(f64),
    #[error("unknown unitary `{0}`")]
    UnknownUnitary(String),
}

/// Report of the three defects a distinguished unitary must vanish on:
/// unitarity, the state value, and membership in the state centralizer.
#[derive(Debug, Clone)]
pub struct CentralizerReport {
    pub unitary_defect: f64,
    pub state_value: f64,
    pub centralizer_defect: f64,
    pub pass: bool,
}

/// Report of the pairing condition on a pair of centralizer unitaries.
#[derive(Debug, Clone)]
pub struct AvitzourReport {
    pub pairing: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct VertexAlgebra {
    /// Ambient matrix dimension.
    dim: usize,
    /// Linear basis of the algebra; `basis[0]` is the identity.
    basis: Vec<CMat>,
    rho: CMat,
    /// Orthonormal GNS representatives; `gns_elems[0]` is the identity and
    /// represents the cyclic vector, the rest span the defect space.
    gns_elems: Vec<CMat>,
    /// Named unitaries available for walk letters and pairing data.
    pub unitaries: BTreeMap<String, CMat>,
    /// Name of the default centralizer-kernel unitary.
    pub distinguished: String,
}

impl VertexAlgebra {
    /// Group algebra of the cyclic group of the given order in its regular
    /// representation, with the normalized counting trace. The canonical
    /// generator and its powers are exposed as unitaries `g`, `g2`, ...
    pub fn group_algebra(order: usize) -> Result<Self, AlgebraError> {
        if order < 2 {
            return Err(AlgebraError::BadOrder(order));
        }
        let shift = CMat::from_fn(order, order, |r, c| {
            if r == (c + 1) % order {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut basis = vec![CMat::identity(order, order)];
        for _ in 1..order {
            let prev = basis.last().unwrap();
            basis.push(prev * &shift);
        }
        let rho = CMat::identity(order, order) / C64::new(order as f64, 0.0);
        let mut unitaries = BTreeMap::new();
        for k in 1..order {
            let name = if k == 1 { "g".to_owned() } else { format!("g{k}") };
            unitaries.insert(name, basis[k].clone());
        }
        Self::build(order, basis, rho, unitaries, "g".to_owned())
    }

    /// Full matrix algebra of dimension `d` with the state `tr(rho .)`.
    pub fn matrix_algebra(
        d: usize,
        rho: CMat,
        unitaries: BTreeMap<String, CMat>,
        distinguished: String,
    ) -> Result<Self, AlgebraError> {
        let mut basis = vec![CMat::identity(d, d)];
        for r in 0..d {
            for c in 0..d {
                if (r, c) == (0, 0) {
                    continue;
                }
                let mut unit = CMat::zeros(d, d);
                unit[(r, c)] = C64::new(1.0, 0.0);
                basis.push(unit);
            }
        }
        Self::build(d, basis, rho, unitaries, distinguished)
    }

    fn build(
        dim: usize,
        basis: Vec<CMat>,
        rho: CMat,
        unitaries: BTreeMap<String, CMat>,
        distinguished: String,
    ) -> Result<Self, AlgebraError> {
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: dim,
                rows: rho.nrows(),
                cols: rho.ncols(),
            });
        }
        let herm_defect = (&rho - rho.adjoint()).norm();
        if herm_defect > ALG_TOL {
            return Err(AlgebraError::NonHermitianDensity(herm_defect));
        }
        let unit = rho.trace();
        if (unit - C64::new(1.0, 0.0)).norm() > ALG_TOL {
            return Err(AlgebraError::NonUnitalState(unit.re));
        }
        let alg = VertexAlgebra {
            dim,
            basis,
            rho,
            gns_elems: Vec::new(),
            unitaries,
            distinguished,
        };
        let alg = alg.with_gns()?;
        alg.check_star_closed()?;
        for u in alg.unitaries.values() {
            alg.check_member(u)?;
        }
        Ok(alg)
    }

    fn with_gns(mut self) -> Result<Self, AlgebraError> {
        let mut elems: Vec<CMat> = Vec::new();
        for b in &self.basis {
            let mut v = b.clone();
            for e in &elems {
                let coeff = self.state(&(e.adjoint() * &v));
                v -= e * coeff;
            }
            let norm2 = self.state(&(v.adjoint() * &v)).re;
            if norm2 > ALG_TOL {
                elems.push(v / C64::new(norm2.sqrt(), 0.0));
            } else if v.norm() > 1e-8 {
                // Nonzero matrix with vanishing GNS norm: the state kills it.
                return Err(AlgebraError::NotFaithful);
            }
        }
        if norm2_defect(&elems, &self.rho) > ALG_TOL {
            return Err(AlgebraError::NotFaithful);
        }
        self.gns_elems = elems;
        Ok(self)
    }

    fn check_star_closed(&self) -> Result<(), AlgebraError> {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            worst = worst.max(self.span_defect(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.span_defect(&(a * b)));
            }
        }
        if worst > ALG_TOL {
            return Err(AlgebraError::NotStarClosed(worst));
        }
        Ok(())
    }

    /// Frobenius distance from `x` to the algebra span.
    fn span_defect(&self, x: &CMat) -> f64 {
        // Project onto the GNS orthonormal representatives; by faithfulness
        // they span the algebra linearly.
        let mut rem = x.clone();
        for e in &self.gns_elems {
            let coeff = self.state(&(e.adjoint() * &rem));
            rem -= e * coeff;
        }
        rem.norm()
    }

    pub fn check_member(&self, x: &CMat) -> Result<(), AlgebraError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim,
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        let defect = self.span_defect(x);
        if defect > 1e-8 {
            return Err(AlgebraError::NotInSpan(defect));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.dim, self.dim)
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// GNS dimension, i.e. the linear dimension of the algebra.
    pub fn gns_dim(&self) -> usize {
        self.gns_elems.len()
    }

    pub fn defect_dim(&self) -> usize {
        self.gns_elems.len() - 1
    }

    pub fn state(&self, x: &CMat) -> C64 {
        (&self.rho * x).trace()
    }

    /// `x - state(x) 1`; the state vanishes on the result.
    pub fn circ(&self, x: &CMat) -> CMat {
        x - self.identity() * self.state(x)
    }

    /// Algebra element representing the `k`-th defect basis vector.
    pub fn defect_lift(&self, k: usize) -> &CMat {
        &self.gns_elems[k + 1]
    }

    /// Coordinates of the GNS class of `x` in the orthonormal basis; entry 0
    /// is the cyclic-vector component, the rest are defect components.
    pub fn gns_coords(&self, x: &CMat) -> CVec {
        CVec::from_fn(self.gns_elems.len(), |i, _| {
            self.state(&(self.gns_elems[i].adjoint() * x))
        })
    }

    /// Matrix of left multiplication by `x` in the GNS basis.
    pub fn gns_action(&self, x: &CMat) -> CMat {
        CMat::from_fn(self.gns_elems.len(), self.gns_elems.len(), |i, j| {
            self.state(&(self.gns_elems[i].adjoint() * x * &self.gns_elems[j]))
        })
    }

    pub fn unitary(&self, name: &str) -> Result<&CMat, AlgebraError> {
        self.unitaries
            .get(name)
            .ok_or_else(|| AlgebraError::UnknownUnitary(name.to_owned()))
    }

    pub fn distinguished_unitary(&self) -> Result<&CMat, AlgebraError> {
        self.unitary(&self.distinguished)
    }

    /// Defects of unitarity, the state value and centralizer membership.
    pub fn check_centralizer_unitary(&self, u: &CMat) -> CentralizerReport {
        let id = self.identity();
        let unitary_defect = (u.adjoint() * u - &id)
            .norm()
            .max((u * u.adjoint() - id).norm());
        let state_value = self.state(u).norm();
        let centralizer_defect = self
            .basis
            .iter()
            .map(|x| (self.state(&(u * x)) - self.state(&(x * u))).norm())
            .fold(0.0, f64::max);
        let pass = unitary_defect < ALG_TOL && state_value < ALG_TOL && centralizer_defect < ALG_TOL;
        CentralizerReport {
            unitary_defect,
            state_value,
            centralizer_defect,
            pass,
        }
    }

    /// Pairing condition `state(v1* v2) = 0` on two centralizer unitaries.
    pub fn check_avitzour_pair(&self, v1: &CMat, v2: &CMat) -> AvitzourReport {
        let pairing = self.state(&(v1.adjoint() * v2)).norm();
        AvitzourReport {
            pairing,
            pass: pairing < ALG_TOL,
        }
    }
}

/// Largest deviation of the Gram matrix of `elems` from the identity.
fn norm2_defect(elems: &[CMat], rho: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in elems.iter().enumerate() {
        for (j, b) in elems.iter().enumerate() {
            let inner = (rho * (a.adjoint() * b)).trace();
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner - C64::new(expected, 0.0)).norm());
        }
    }
    worst
}
