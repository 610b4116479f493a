use super::{is_hermitian, CMat, CVec, MaxAbs, C64};
use crate::error::{Error, Result};

/// Eigendecomposition H = V diag(λ) V† of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(h: &CMat) -> Self {
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = sym.symmetric_eigen();
        Self { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    /// V diag(f(λ)) V†
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMat {
        let d = CVec::from_iterator(self.values.len(), self.values.iter().map(|&x| f(x)));
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[j];
        }
        scaled * self.vectors.adjoint()
    }
}

/// exp(−i·H·t) for Hermitian H.
pub fn expm_hermitian_phase(h: &CMat, t: f64) -> CMat {
    HermitianEigen::new(h).apply_fn(|x| C64::from_polar(1.0, -x * t))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &CMat) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential. Hermitian and anti-Hermitian inputs go through an
/// eigendecomposition; everything else uses Padé-13 scaling and squaring.
pub fn expm(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!("expm of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("expm argument has non-finite entries".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    if m.max_abs() == 0.0 {
        return Ok(CMat::identity(n, n));
    }
    if is_hermitian(m, 1e-14) {
        return Ok(HermitianEigen::new(m).apply_fn(|x| C64::new(x.exp(), 0.0)));
    }
    let h = m * C64::new(0.0, -1.0);
    if is_hermitian(&h, 1e-14) {
        return Ok(HermitianEigen::new(&h).apply_fn(|x| C64::from_polar(1.0, x)));
    }
    Ok(pade13(m))
}

fn pade13(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm = one_norm(m);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m.unscale(2f64.powi(s));
    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (u_inner + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let v_inner = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = v_inner + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        let m = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = (&m + m.adjoint()).scale(0.5);
        let norm = h.symmetric_eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        h.unscale(norm)
    }

    #[test]
    fn zero_and_diagonal() {
        let z = CMat::zeros(4, 4);
        assert_eq!(expm(&z).unwrap(), CMat::identity(4, 4));
        let theta = [0.3, -1.1, 2.5];
        let d = CMat::from_diagonal(&CVec::from_iterator(3, theta.iter().map(|&t| c(0.0, t))));
        let e = expm(&d).unwrap();
        for (k, &t) in theta.iter().enumerate() {
            assert!((e[(k, k)] - C64::from_polar(1.0, t)).norm() < 1e-14);
        }
    }

    #[test]
    fn self_inverse_on_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_hermitian(12, &mut rng);
            let p = expm(&a).unwrap();
            let m = expm(&(-&a)).unwrap();
            assert!((&p * &m - CMat::identity(12, 12)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn pade_matches_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[3usize, 16, 64] {
            let h = random_hermitian(n, &mut rng).scale(3.0);
            let reference = HermitianEigen::new(&h).apply_fn(|x| c(x.exp(), 0.0));
            let pade = pade13(&h);
            let rel = (&pade - &reference).max_abs() / reference.max_abs();
            assert!(rel < 1e-9, "n={n} rel={rel}");
            let gen = &h * c(0.0, -2.0);
            let reference = expm_hermitian_phase(&h, 2.0);
            let rel = (pade13(&gen) - &reference).max_abs();
            assert!(rel < 1e-9, "n={n} rel={rel}");
        }
    }

    #[test]
    fn non_normal_block() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let e = expm(&m).unwrap();
        let ee = std::f64::consts::E;
        assert!((e[(0, 0)].re - ee).abs() < 1e-12);
        assert!((e[(0, 1)].re - ee).abs() < 1e-12);
        assert!(e[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(expm(&m).is_err());
    }
}
