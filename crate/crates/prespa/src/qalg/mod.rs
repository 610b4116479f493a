//! Dense complex linear algebra over truncated tensor-product Hilbert spaces.
//!
//! Subsystems are ordered (cavity, transmon, reservoir) and Kronecker
//! products put slot 0 in the most significant position.

mod expm;
mod sparse;

pub use expm::{expm, expm_hermitian_phase, HermitianEigen};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus of a complex matrix or vector.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R: nalgebra::Dim, Cc: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, Cc>> MaxAbs for nalgebra::Matrix<C64, R, Cc, S> {
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDimension(format!("subsystem dimensions {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat index of a product basis state given one level per subsystem.
    pub fn index(&self, levels: &[usize]) -> usize {
        debug_assert_eq!(levels.len(), self.dims.len());
        levels
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&l, &d)| acc * d + l)
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            out[slot] = index % d;
            index /= d;
        }
        out
    }

    pub fn basis(&self, levels: &[usize]) -> Result<StateVector> {
        if levels.len() != self.dims.len() || levels.iter().zip(&self.dims).any(|(l, d)| l >= d) {
            return Err(Error::InvalidDimension(format!("levels {levels:?} for dims {:?}", self.dims)));
        }
        let mut amps = CVec::zeros(self.total());
        amps[self.index(levels)] = r(1.0);
        Ok(StateVector { space: self.clone(), amps })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub space: HilbertSpace,
    pub amps: CVec,
}

impl StateVector {
    pub fn new(space: HilbertSpace, amps: CVec) -> Result<Self> {
        if amps.len() != space.total() {
            return Err(Error::InvalidDimension(format!(
                "vector of length {} in space of dimension {}",
                amps.len(),
                space.total()
            )));
        }
        Ok(Self { space, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.amps.norm_squared() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(Self { space: self.space.clone(), amps: self.amps.unscale(n) })
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn expect(&self, op: &CMat) -> C64 {
        self.amps.dotc(&(op * &self.amps))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { space: self.space.clone(), mat: &self.amps * self.amps.adjoint() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub mat: CMat,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, mat: CMat) -> Result<Self> {
        let n = space.total();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "{}x{} matrix in space of dimension {n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { space, mat })
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).max_abs()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.mat + self.mat.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks Hermiticity, unit trace and positivity with the library tolerances.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::InvalidInput(format!("density matrix not Hermitian ({herm:.2e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::InvalidInput(format!("negative eigenvalue {min:.2e}")));
        }
        Ok(())
    }

    pub fn expect(&self, op: &CMat) -> C64 {
        (op * &self.mat).trace()
    }

    pub fn fidelity_pure(&self, psi: &StateVector) -> f64 {
        psi.amps.dotc(&(&self.mat * &psi.amps)).re
    }

    /// Trace distance ½‖ρ−σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = &self.mat - &other.mat;
        let h = (&d + d.adjoint()).scale(0.5);
        0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.mat[(index, index)].re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub space: HilbertSpace,
    pub mat: CMat,
    pub hermitian: bool,
    pub unitary: bool,
}

impl Operator {
    pub fn new(space: HilbertSpace, mat: CMat) -> Result<Self> {
        let n = space.total();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "{}x{} operator in space of dimension {n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { space, mat, hermitian: false, unitary: false })
    }

    pub fn with_tags(mut self, hermitian: bool, unitary: bool) -> Self {
        self.hermitian = hermitian;
        self.unitary = unitary;
        self
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let n = space.total();
        Self { space: space.clone(), mat: CMat::identity(n, n), hermitian: true, unitary: true }
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), mat: self.mat.adjoint(), hermitian: self.hermitian, unitary: self.unitary }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.space != self.space {
            return Err(Error::InvalidDimension("operator and state live in different spaces".into()));
        }
        Ok(StateVector { space: psi.space.clone(), amps: &self.mat * &psi.amps })
    }

    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        if rhs.space != self.space {
            return Err(Error::InvalidDimension("operators live in different spaces".into()));
        }
        Operator::new(self.space.clone(), &self.mat * &rhs.mat)
    }
}

#[derive(Debug, Clone)]
pub struct FockOperators {
    pub lowering: Operator,
    pub raising: Operator,
    pub number: Operator,
    pub parity: Operator,
}

pub fn lowering_matrix(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = r((n as f64).sqrt());
    }
    a
}

pub fn number_matrix(dim: usize) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(dim, |n, _| r(n as f64)))
}

pub fn fock_operators(dim: usize) -> Result<FockOperators> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("Fock truncation {dim} < 2")));
    }
    let space = HilbertSpace::single(dim)?;
    let a = lowering_matrix(dim);
    let ad = a.adjoint();
    let n = &ad * &a;
    let p = CMat::from_diagonal(&CVec::from_fn(dim, |k, _| r(if k % 2 == 0 { 1.0 } else { -1.0 })));
    Ok(FockOperators {
        lowering: Operator::new(space.clone(), a)?,
        raising: Operator::new(space.clone(), ad)?,
        number: Operator::new(space.clone(), n)?.with_tags(true, false),
        parity: Operator::new(space, p)?.with_tags(true, true),
    })
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Embeds `op` acting on subsystem `slot` into `target`, identity elsewhere.
pub fn tensor_embed(op: &Operator, target: &HilbertSpace, slot: usize) -> Result<Operator> {
    let m = embed_matrix(&op.mat, target, slot)?;
    Ok(Operator::new(target.clone(), m)?.with_tags(op.hermitian, op.unitary))
}

pub fn embed_matrix(op: &CMat, target: &HilbertSpace, slot: usize) -> Result<CMat> {
    let dims = target.dims();
    if slot >= dims.len() {
        return Err(Error::InvalidDimension(format!("slot {slot} out of range for {dims:?}")));
    }
    if op.nrows() != dims[slot] || op.ncols() != dims[slot] {
        return Err(Error::InvalidDimension(format!(
            "operator of size {} does not match subsystem {slot} of dimension {}",
            op.nrows(),
            dims[slot]
        )));
    }
    let mut out = CMat::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == slot { op.clone() } else { CMat::identity(d, d) };
        out = out.kronecker(&factor);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Displacement {
    pub op: Operator,
    /// Coherent-state weight beyond the truncation, 1 − Σ_{n<dim} |⟨n|α⟩|².
    pub defect: f64,
}

pub fn displacement(alpha: C64, dim: usize) -> Result<Displacement> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("Fock truncation {dim} < 2")));
    }
    let a = lowering_matrix(dim);
    let gen = a.adjoint().scale(1.0) * alpha - &a * alpha.conj();
    let d = expm(&gen)?;
    let mut weight = 0.0;
    let mut term = (-alpha.norm_sqr()).exp();
    for n in 0..dim {
        if n > 0 {
            term *= alpha.norm_sqr() / n as f64;
        }
        weight += term;
    }
    let space = HilbertSpace::single(dim)?;
    Ok(Displacement { op: Operator::new(space, d)?.with_tags(false, true), defect: (1.0 - weight).max(0.0) })
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidInput("partial trace needs at least one kept subsystem".into()));
    }
    let dims = rho.space.dims();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidInput(format!("kept slots {keep:?} out of range for {dims:?}")));
    }
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_space = HilbertSpace::new(kept_dims)?;
    let n = rho.space.total();
    let split = |idx: usize| {
        let lv = rho.space.levels(idx);
        let kept: Vec<usize> = keep_sorted.iter().map(|&k| lv[k]).collect();
        let tr: usize = traced.iter().fold(0, |acc, &k| acc * dims[k] + lv[k]);
        (kept_space.index(&kept), tr)
    };
    let parts: Vec<(usize, usize)> = (0..n).map(split).collect();
    let m = kept_space.total();
    let mut out = CMat::zeros(m, m);
    for j in 0..n {
        let (kj, tj) = parts[j];
        for i in 0..n {
            let (ki, ti) = parts[i];
            if ti == tj {
                out[(ki, kj)] += rho.mat[(i, j)];
            }
        }
    }
    DensityMatrix::new(kept_space, out)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).max_abs() <= tol * m.max_abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_identities() {
        let f = fock_operators(3).unwrap();
        let one = HilbertSpace::single(3).unwrap().basis(&[1]).unwrap();
        let out = f.lowering.apply(&one).unwrap();
        assert!((out.amps[0] - r(1.0)).norm() < 1e-15);
        let f8 = fock_operators(8).unwrap();
        assert_eq!(f8.parity.mat[(7, 7)], r(-1.0));
        for n in 0..8 {
            assert!((f8.number.mat[(n, n)].re - n as f64).abs() < 1e-12);
        }
        assert!((f8.raising.mat.clone() - f8.lowering.mat.adjoint()).max_abs() == 0.0);
        assert!(fock_operators(1).is_err());
    }

    #[test]
    fn embed_structure() {
        let space = HilbertSpace::new(vec![4, 2]).unwrap();
        let id = Operator::identity(&HilbertSpace::single(4).unwrap());
        assert_eq!(tensor_embed(&id, &space, 0).unwrap().mat, CMat::identity(8, 8));
        let a = fock_operators(4).unwrap().lowering;
        let ea = tensor_embed(&a, &space, 0).unwrap();
        assert_eq!(ea.mat, kron(&a.mat, &CMat::identity(2, 2)));
        let sm = Operator::new(HilbertSpace::single(2).unwrap(), lowering_matrix(2)).unwrap();
        let eq = tensor_embed(&sm, &space, 1).unwrap();
        assert!(commutator(&ea.mat, &eq.mat).max_abs() < 1e-15);
        assert!(tensor_embed(&a, &space, 1).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let s = HilbertSpace::new(vec![5, 3, 2]).unwrap();
        for i in 0..s.total() {
            assert_eq!(s.index(&s.levels(i)), i);
        }
        assert_eq!(s.index(&[1, 0, 0]), 6);
    }

    #[test]
    fn displacement_properties() {
        let d0 = displacement(r(0.0), 10).unwrap();
        assert!((d0.op.mat.clone() - CMat::identity(10, 10)).max_abs() < 1e-14);
        let d = displacement(r(1.6), 24).unwrap();
        let vac = HilbertSpace::single(24).unwrap().basis(&[0]).unwrap();
        let coh = d.op.apply(&vac).unwrap();
        let n = coh.expect(&number_matrix(24)).re;
        assert!((n - 2.56).abs() < 1e-6, "{n}");
        for &alpha in &[c(2.0, 0.0), c(-1.2, 1.5), c(0.3, -0.7)] {
            let p = displacement(alpha, 24).unwrap().op.mat;
            let m = displacement(-alpha, 24).unwrap().op.mat;
            assert!((&p * &m - CMat::identity(24, 24)).max_abs() < 1e-8);
        }
    }

    #[test]
    fn displacement_shifts_lowering_in_the_low_levels() {
        let dim = 30;
        let alpha = c(1.1, -0.9);
        let a = lowering_matrix(dim);
        let dp = displacement(alpha, dim).unwrap().op.mat;
        let dm = displacement(-alpha, dim).unwrap().op.mat;
        let lhs = &dm * &a * &dp;
        let rhs = &a + CMat::identity(dim, dim) * alpha;
        let block = (lhs - rhs).view((0, 0), (8, 8)).max_abs();
        assert!(block < 1e-6, "{block}");
    }

    #[test]
    fn partial_trace_products() {
        let rho_a = {
            let v = CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), r(0.0)]);
            &v * v.adjoint()
        };
        let rho_q = CMat::from_row_slice(2, 2, &[r(0.7), c(0.1, 0.2), c(0.1, -0.2), r(0.3)]);
        let space = HilbertSpace::new(vec![3, 2]).unwrap();
        let rho = DensityMatrix::new(space, kron(&rho_a, &rho_q)).unwrap();
        let q = partial_trace(&rho, &[1]).unwrap();
        assert!((q.mat - &rho_q).max_abs() < 1e-14);
        let a = partial_trace(&rho, &[0]).unwrap();
        assert!((a.mat - &rho_a).max_abs() < 1e-14);
        assert!(partial_trace(&rho, &[]).is_err());

        let bell = CVec::from_vec(vec![r(0.5f64.sqrt()), r(0.0), r(0.0), r(0.5f64.sqrt())]);
        let bs = StateVector::new(HilbertSpace::new(vec![2, 2]).unwrap(), bell).unwrap();
        let red = partial_trace(&bs.to_density(), &[0]).unwrap();
        assert!((red.mat - CMat::identity(2, 2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn middle_slot_trace() {
        let space = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        let mut v = CVec::zeros(12);
        v[space.index(&[0, 1, 1])] = r(0.6);
        v[space.index(&[1, 1, 0])] = r(0.8);
        let psi = StateVector::new(space, v).unwrap();
        let red = partial_trace(&psi.to_density(), &[0, 2]).unwrap();
        assert!((red.mat[(1, 1)].re - 0.36).abs() < 1e-14);
        assert!((red.mat[(2, 2)].re - 0.64).abs() < 1e-14);
        assert!((red.mat[(1, 2)].re - 0.48).abs() < 1e-14);
        assert!((red.trace().re - 1.0).abs() < 1e-12);
    }
}
