use super::{CMat, CVec, C64};
#[cfg(test)]
use super::MaxAbs;

/// Coordinate-format complex matrix used by the integrators for operators
/// with a handful of nonzeros per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn from_dense(m: &CMat, tol: f64) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.norm() > tol {
                    entries.push((i, j, v));
                }
            }
        }
        Self { n: m.nrows(), entries }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect() }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for &(i, j, v) in &self.entries {
            out[i] += v * x[j];
        }
    }

    pub fn mul_vec(&self, x: &CVec) -> CVec {
        let mut out = CVec::zeros(self.n);
        self.matvec(x.as_slice(), out.as_mut_slice());
        out
    }

    /// out += coef · S·M for column-major square M.
    pub fn left_mul_acc(&self, m: &[C64], coef: C64, out: &mut [C64]) {
        let n = self.n;
        for &(i, j, v) in &self.entries {
            let w = coef * v;
            for k in 0..n {
                out[k * n + i] += w * m[k * n + j];
            }
        }
    }

    /// out += coef · M·S for column-major square M.
    pub fn right_mul_acc(&self, m: &[C64], coef: C64, out: &mut [C64]) {
        let n = self.n;
        for &(i, j, v) in &self.entries {
            let w = coef * v;
            let src = &m[i * n..(i + 1) * n];
            let dst = &mut out[j * n..(j + 1) * n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
}
